use clap::Parser;

fn main() {
    let args = tumour_cli::cli::Args::parse();
    match tumour_cli::cli::run(args) {
        Ok(summary) => println!("{summary}"),
        Err(e) => {
            eprintln!("error: {e}");
            std::process::exit(e.exit_code());
        }
    }
}
