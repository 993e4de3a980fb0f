//! Subcommand implementations. Each writes its files into the configured
//! output directory, followed by a fresh manifest.

use std::path::{Path, PathBuf};
use std::time::Instant;

use num_complex::Complex64 as C64;
use rayon::prelude::*;
use serde::Serialize;
use tumour_core::asymptotics::{
    classify_stability, compute_rates, margin_identity, outer_profile, AsymptoticRates, RateReport,
};
use tumour_core::base_state::{find_base_states_with_resolution, DEFAULT_SCAN_POINTS};
use tumour_core::layer::{
    a_ode_residual, decaying_log_derivative, far_field, layer_boundary_residuals, solve_inner_layer, solve_outer_layer,
    tail_integral, wkbj_exponents, FarField, LayerSolution, TailIntegral,
};
use tumour_core::perturbation::{filter_boundary_mode, simulate, Field, Grid, PerturbationState, Side, Trajectory};
use tumour_core::{select_branch, BaseState, Error as ModelError, Linearization, ModelParameters};

use crate::config::{InitialKind, RunConfig, SweepSpec};
use crate::error::{CliError, CliResult};
use crate::output::{ensure_dir, field_rows, num, write_json, Complex, FieldTable, Manifest, Table};

/// Label used in place of a verdict when the base state does not grow.
pub const INAPPLICABLE: &str = "criterion inapplicable";

/// Parameters, base state and linearisation for one configuration.
#[derive(Debug, Clone)]
pub struct Context {
    pub params: ModelParameters,
    pub states: Vec<BaseState>,
    pub base: BaseState,
    pub lin: Linearization,
}

impl Context {
    pub fn new(cfg: &RunConfig) -> CliResult<Self> {
        let params = cfg.model()?;
        let states = find_base_states_with_resolution(&params, scan_points(cfg))?;
        let base = select_branch(&states, cfg.branch_id)?;
        let lin = Linearization::new(&params, &base)?;
        Ok(Self {
            params,
            states,
            base,
            lin,
        })
    }
}

fn scan_points(cfg: &RunConfig) -> usize {
    cfg.scan_points.unwrap_or(DEFAULT_SCAN_POINTS)
}

fn finish(command: &str, cfg: &RunConfig, base: Option<&BaseState>, start: Instant) -> CliResult<Manifest> {
    let config = serde_json::to_value(cfg).expect("configuration serialises");
    let base = serde_json::to_value(base).expect("base state serialises");
    Manifest::new(command, config, base, start.elapsed().as_secs_f64()).write(&cfg.out_dir)
}

pub fn cmd_basestate(cfg: &RunConfig, double_resolution: bool) -> CliResult<Vec<BaseState>> {
    let start = Instant::now();
    let params = cfg.model()?;
    let points = scan_points(cfg) * if double_resolution { 2 } else { 1 };
    let states = find_base_states_with_resolution(&params, points)?;
    ensure_dir(&cfg.out_dir)?;
    let mut t = Table::new(
        cfg.out_dir.join("basestate.csv"),
        &["alpha_h", "lambda2", "residual", "branch_id"],
    )?;
    for s in &states {
        t.row([num(s.alpha_h), num(s.lambda2), num(s.residual), s.branch_id.to_string()])?;
    }
    t.finish()?;
    finish("basestate", cfg, states.get(cfg.branch_id), start)?;
    Ok(states)
}

#[derive(Debug, Clone, Serialize)]
pub struct InitialReport {
    pub kind: InitialKind,
    pub filtered: bool,
    pub probe_time: Option<f64>,
    pub r_tilde_shift: Option<Complex>,
    pub boundary_mode_rate: Option<f64>,
}

#[derive(Debug, Clone, Serialize)]
pub struct ProfileReport {
    pub t: f64,
    pub c1: Complex,
    pub d1: Complex,
    pub slope_at_one: Complex,
    pub slope_at_zero: Complex,
}

#[derive(Debug, Clone, Serialize)]
pub struct SimulationReport {
    pub base_state: BaseState,
    pub rates: AsymptoticRates,
    pub grid_n: usize,
    pub dt: f64,
    pub t_end: f64,
    pub initial: InitialReport,
    pub frozen_at: Option<f64>,
    /// Outer profile of the last snapshot, absent when the layers still
    /// cover the domain.
    pub profile: Option<ProfileReport>,
    pub fitted: Vec<RateReport>,
}

#[derive(Debug, Clone)]
pub struct SimulationOutput {
    pub context: Context,
    pub grid: Grid,
    pub trajectory: Trajectory,
    pub report: SimulationReport,
}

/// Integrate the configured run without writing anything.
pub fn run_simulation(cfg: &RunConfig, zero_initial: bool) -> CliResult<SimulationOutput> {
    let context = Context::new(cfg)?;
    let lin = &context.lin;
    let grid = Grid::new(cfg.grid.n)?;
    let dt = cfg.dt(&grid, lin.lambda2);
    let t_end = cfg.time.t_end;
    let kind = if zero_initial {
        InitialKind::Zero
    } else {
        cfg.initial.kind
    };
    let mut initial = match kind {
        InitialKind::Sine => PerturbationState::sine(&grid),
        InitialKind::Zero => PerturbationState::zero(&grid),
    };
    let mut initial_report = InitialReport {
        kind,
        filtered: false,
        probe_time: None,
        r_tilde_shift: None,
        boundary_mode_rate: None,
    };
    if cfg.initial.filter_boundary_mode && kind != InitialKind::Zero {
        let probe = cfg.initial.probe_time.unwrap_or(t_end);
        let filter = filter_boundary_mode(lin, &grid, &initial, probe, dt)?;
        initial = filter.initial;
        initial_report.filtered = true;
        initial_report.probe_time = Some(probe);
        initial_report.r_tilde_shift = Some(filter.shift.into());
        initial_report.boundary_mode_rate = Some(filter.mode_rate);
    }

    let times = cfg.output_times();
    let trajectory = simulate(lin, &grid, &initial, t_end, dt, &times)?;
    let rates = compute_rates(lin);

    let profile = match outer_profile(
        lin,
        &grid,
        trajectory.snapshots.last().expect("t_end is an output"),
        &rates,
    ) {
        Ok(p) => Some(ProfileReport {
            t: p.t,
            c1: p.c1.into(),
            d1: p.d1.into(),
            slope_at_one: p.slope_at_one.into(),
            slope_at_zero: p.slope_at_zero.into(),
        }),
        Err(ModelError::Precondition(_)) => None,
        Err(e) => return Err(e.into()),
    };

    let all_zero = trajectory.snapshots.iter().all(|s| s.max_modulus() == 0.0);
    let fitted = if all_zero {
        vec![]
    } else {
        fit_rates(cfg, &grid, &trajectory, &rates)?
    };

    let report = SimulationReport {
        base_state: context.base,
        rates,
        grid_n: grid.cells(),
        dt,
        t_end,
        initial: initial_report,
        frozen_at: trajectory.frozen_at,
        profile,
        fitted,
    };
    Ok(SimulationOutput {
        context,
        grid,
        trajectory,
        report,
    })
}

/// Default fit window: the second half of the run.
pub fn rate_window(cfg: &RunConfig) -> (f64, f64) {
    let t_end = cfg.time.t_end;
    (cfg.rates.t0.unwrap_or(0.5 * t_end), cfg.rates.t1.unwrap_or(t_end))
}

fn fit_rates(cfg: &RunConfig, grid: &Grid, traj: &Trajectory, rates: &AsymptoticRates) -> CliResult<Vec<RateReport>> {
    let (t0, t1) = rate_window(cfg);
    let mut out = vec![];
    for &xi in &cfg.rates.locations {
        let j = (xi * grid.cells() as f64).round() as usize;
        let location = format!("xi={}", grid.nodes()[j]);
        for f in Field::ALL {
            let series = traj.series(f, j);
            out.push(RateReport::build(
                f.name(),
                &location,
                &series,
                t0,
                t1,
                rates.outer_rate(f),
            )?);
        }
    }
    Ok(out)
}

fn write_rates(path: PathBuf, reports: &[RateReport]) -> CliResult<()> {
    let mut t = Table::new(
        path,
        &[
            "field",
            "location",
            "t0",
            "t1",
            "fitted_rate",
            "r_squared",
            "predicted_rate",
            "rel_err",
        ],
    )?;
    for r in reports {
        t.row([
            r.field.clone(),
            r.location.clone(),
            num(r.t0),
            num(r.t1),
            num(r.fitted_rate),
            num(r.r_squared),
            num(r.predicted_rate),
            num(r.rel_err),
        ])?;
    }
    t.finish()?;
    Ok(())
}

pub fn cmd_simulate(cfg: &RunConfig, zero_initial: bool) -> CliResult<SimulationOutput> {
    let start = Instant::now();
    let out = run_simulation(cfg, zero_initial)?;
    let dir = &cfg.out_dir;
    ensure_dir(dir)?;
    let xi = out.grid.nodes();
    for f in Field::ALL {
        let mut t = Table::new(dir.join(format!("{}.csv", f.name())), &["t", "xi", "re", "im"])?;
        for s in &out.trajectory.snapshots {
            field_rows(&mut t, s.t, xi, s.field(f))?;
        }
        t.finish()?;
    }
    let mut t = Table::new(dir.join("r_tilde.csv"), &["t", "re", "im"])?;
    for s in &out.trajectory.snapshots {
        t.row([num(s.t), num(s.r_tilde.re), num(s.r_tilde.im)])?;
    }
    t.finish()?;
    write_rates(dir.join("rates.csv"), &out.report.fitted)?;
    write_json(&dir.join("simulate_report.json"), &out.report)?;
    finish("simulate", cfg, Some(&out.context.base), start)?;
    Ok(out)
}

#[derive(Debug, Clone, Serialize)]
pub struct Check {
    pub quantity: String,
    pub measured: Complex,
    pub predicted: Complex,
    pub rel_err: f64,
}

impl Check {
    fn new(quantity: &str, measured: C64, predicted: C64) -> Self {
        Self {
            quantity: quantity.to_string(),
            measured: measured.into(),
            predicted: predicted.into(),
            rel_err: (measured - predicted).norm() / predicted.norm(),
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct TailExample {
    pub x: f64,
    pub eta: f64,
    pub kappa: f64,
    pub n_terms: usize,
    #[serde(flatten)]
    pub result: TailIntegral,
}

#[derive(Debug, Clone, Serialize)]
pub struct LayerReport {
    pub side: Side,
    pub kappa: f64,
    pub x_max: f64,
    pub n_layer: usize,
    pub omega: f64,
    pub modes: Vec<String>,
    pub far_field: FarField,
    /// `A(x_max)/x_max`
    pub end_ratio: Check,
    pub end_checks: Vec<Check>,
    pub closure_change: f64,
    pub a_ode_residual: f64,
    pub boundary_residuals: [f64; 3],
    /// Log-derivative of the decaying correction at `x_max`.
    pub log_derivative: Check,
    pub tail_integral: Vec<TailExample>,
}

/// Layer extent used when the configuration leaves it open.
pub fn layer_extent(cfg: &RunConfig, lin: &Linearization) -> f64 {
    cfg.layer.x_max.unwrap_or(20.0 / lin.kappa.abs())
}

pub fn layer_report(cfg: &RunConfig, lin: &Linearization, s: &LayerSolution) -> CliResult<LayerReport> {
    let n = s.n_layer;
    let x = s.x_max;
    let ff = far_field(lin, s.side);
    let w = wkbj_exponents(lin);
    let end_checks = match s.side {
        Side::Outer => vec![
            Check::new("vc1(x_max)", s.vc1[n], ff.vc1),
            Check::new("vw2(x_max)", s.vw2[n], ff.vw2_constant),
        ],
        Side::Inner => vec![
            Check::new("vc1(x_max)", s.vc1[n], ff.vc1),
            Check::new("vw1(x_max)/x_max^2", s.vw1[n] / (x * x), ff.vw1_quadratic),
        ],
    };
    let (measured, predicted) = decaying_log_derivative(lin, s, n);
    let kappa = lin.kappa.abs();
    let tail = [0.5 * x, x]
        .into_iter()
        .map(|tx| {
            Ok(TailExample {
                x: tx,
                eta: cfg.layer.tail_eta,
                kappa,
                n_terms: 4,
                result: tail_integral(tx, cfg.layer.tail_eta, kappa, 4)?,
            })
        })
        .collect::<CliResult<Vec<_>>>()?;
    Ok(LayerReport {
        side: s.side,
        kappa: lin.kappa,
        x_max: x,
        n_layer: n,
        omega: w.omega,
        modes: w.modes,
        far_field: ff,
        end_ratio: Check::new("A(x_max)/x_max", s.a[n] / x, s.matching_amplitude),
        end_checks,
        closure_change: s.closure_change,
        a_ode_residual: a_ode_residual(lin, &s.stations, &s.a),
        boundary_residuals: layer_boundary_residuals(lin, s),
        log_derivative: Check::new("d ln(A - C1 X)/dX at x_max", measured, C64::new(predicted, 0.0)),
        tail_integral: tail,
    })
}

pub fn solve_side(lin: &Linearization, side: Side, x_max: f64, n_layer: usize) -> CliResult<LayerSolution> {
    Ok(match side {
        Side::Outer => solve_outer_layer(lin, x_max, n_layer)?,
        Side::Inner => solve_inner_layer(lin, x_max, n_layer)?,
    })
}

pub fn cmd_layer(cfg: &RunConfig, side: Side) -> CliResult<(LayerSolution, LayerReport)> {
    let start = Instant::now();
    let ctx = Context::new(cfg)?;
    let sol = solve_side(&ctx.lin, side, layer_extent(cfg, &ctx.lin), cfg.layer.n_layer)?;
    let report = layer_report(cfg, &ctx.lin, &sol)?;
    let dir = &cfg.out_dir;
    ensure_dir(dir)?;
    let coordinate = match side {
        Side::Outer => "X",
        Side::Inner => "x",
    };
    let mut header = vec![coordinate.to_string()];
    for f in Field::ALL {
        let name = if f == Field::Alpha { "a" } else { f.name() };
        header.push(format!("{name}_re"));
        header.push(format!("{name}_im"));
    }
    let header: Vec<&str> = header.iter().map(String::as_str).collect();
    let mut t = Table::new(dir.join(format!("layer_{side}.csv")), &header)?;
    for j in 0..=sol.n_layer {
        let mut row = vec![num(sol.stations[j])];
        for f in [&sol.a, &sol.vc1, &sol.vc2, &sol.vw1, &sol.vw2] {
            row.push(num(f[j].re));
            row.push(num(f[j].im));
        }
        t.row(row)?;
    }
    t.finish()?;
    write_json(&dir.join(format!("layer_{side}_report.json")), &report)?;
    finish("layer", cfg, Some(&ctx.base), start)?;
    Ok((sol, report))
}

#[derive(Debug, Clone, Serialize)]
pub struct StabilityReport {
    pub base_state: BaseState,
    pub gamma0: f64,
    pub gamma1: f64,
    pub gamma3: Complex,
    pub margin: f64,
    /// The margin from the closed-form identity (exact for `s3 = s4 = 0`).
    pub margin_identity: f64,
    pub verdict: String,
    pub exponents: Option<[f64; 3]>,
}

pub fn stability_report(ctx: &Context) -> StabilityReport {
    let r = compute_rates(&ctx.lin);
    let classified = classify_stability(&ctx.lin).ok();
    StabilityReport {
        base_state: ctx.base,
        gamma0: r.gamma0,
        gamma1: r.gamma1,
        gamma3: r.gamma3.into(),
        margin: r.margin,
        margin_identity: margin_identity(&ctx.lin, ctx.params.birth_factor(ctx.params.c_inf)),
        verdict: classified.map_or(INAPPLICABLE, |s| s.verdict.name()).to_string(),
        exponents: classified.map(|s| s.exponents),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepRow {
    pub value: f64,
    pub alpha_h: Option<f64>,
    pub lambda2: Option<f64>,
    pub gamma0: Option<f64>,
    pub margin: Option<f64>,
    pub verdict: String,
}

fn sweep_point(cfg: &RunConfig, parameter: &str, value: f64) -> SweepRow {
    let mut row = SweepRow {
        value,
        alpha_h: None,
        lambda2: None,
        gamma0: None,
        margin: None,
        verdict: String::new(),
    };
    let mut p = match cfg.model() {
        Ok(p) => p,
        Err(e) => {
            row.verdict = format!("error: {e}");
            return row;
        }
    };
    let lin = p
        .set(parameter, value)
        .and_then(|_| find_base_states_with_resolution(&p, scan_points(cfg)))
        .and_then(|states| select_branch(&states, cfg.branch_id))
        .and_then(|base| Linearization::new(&p, &base));
    match lin {
        Ok(lin) => {
            let r = compute_rates(&lin);
            row.alpha_h = Some(lin.alpha_h);
            row.lambda2 = Some(lin.lambda2);
            row.gamma0 = Some(r.gamma0);
            row.margin = Some(r.margin);
            row.verdict = match classify_stability(&lin) {
                Ok(s) => s.verdict.name().to_string(),
                Err(_) => INAPPLICABLE.to_string(),
            };
        }
        Err(ModelError::NoRoot) => row.verdict = "no_root".into(),
        Err(ModelError::InvalidParameter(m)) => row.verdict = format!("invalid: {m}"),
        Err(e) => row.verdict = format!("error: {e}"),
    }
    row
}

/// Sweep points evaluated in parallel, returned in input order.
pub fn run_sweep(cfg: &RunConfig, spec: &SweepSpec) -> Vec<SweepRow> {
    spec.values()
        .par_iter()
        .map(|&v| sweep_point(cfg, &spec.parameter, v))
        .collect()
}

#[derive(Debug, Clone)]
pub struct StabilityOutput {
    pub report: StabilityReport,
    pub sweep: Option<Vec<SweepRow>>,
}

pub fn cmd_stability(cfg: &RunConfig, sweep: Option<&SweepSpec>) -> CliResult<StabilityOutput> {
    let start = Instant::now();
    let ctx = Context::new(cfg)?;
    let report = stability_report(&ctx);
    let dir = &cfg.out_dir;
    ensure_dir(dir)?;
    write_json(&dir.join("stability.json"), &report)?;
    let spec = sweep.or(cfg.sweep.as_ref());
    let rows = spec.map(|s| run_sweep(cfg, s));
    if let Some(rows) = &rows {
        let opt = |x: Option<f64>| x.map(num).unwrap_or_default();
        let mut t = Table::new(
            dir.join("sweep.csv"),
            &["value", "alpha_h", "lambda2", "gamma0", "margin", "verdict"],
        )?;
        for r in rows {
            t.row([
                num(r.value),
                opt(r.alpha_h),
                opt(r.lambda2),
                opt(r.gamma0),
                opt(r.margin),
                r.verdict.clone(),
            ])?;
        }
        t.finish()?;
    }
    finish("stability", cfg, Some(&ctx.base), start)?;
    Ok(StabilityOutput { report, sweep: rows })
}

/// Refit a rate from a field file written by `simulate`. The field is taken
/// from the file name.
pub fn cmd_rates(cfg: &RunConfig, input: &Path, t0: f64, t1: f64, xi: f64) -> CliResult<RateReport> {
    let start = Instant::now();
    let stem = input
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_default();
    let field: Field = stem
        .parse()
        .map_err(|_| CliError::input(input, format!("file name must be a field ({})", field_list())))?;
    let table = FieldTable::read(input)?;
    let ctx = Context::new(cfg)?;
    let j = table.nearest(xi);
    let predicted = compute_rates(&ctx.lin).outer_rate(field);
    let report = RateReport::build(
        field.name(),
        &format!("xi={}", table.xi[j]),
        &table.series(j),
        t0,
        t1,
        predicted,
    )?;
    ensure_dir(&cfg.out_dir)?;
    write_rates(
        cfg.out_dir.join(format!("rates_{stem}.csv")),
        std::slice::from_ref(&report),
    )?;
    finish("rates", cfg, Some(&ctx.base), start)?;
    Ok(report)
}

fn field_list() -> String {
    Field::ALL.map(|f| f.name()).join(", ")
}

const SURFACE_SCRIPT: &str = r#"import os

import numpy as np
import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt

HERE = os.path.dirname(os.path.abspath(__file__))

data = np.loadtxt(os.path.join(HERE, "alpha.csv"), delimiter=",", skiprows=1)
times = np.unique(data[:, 0])
xi = np.unique(data[:, 1])
modulus = np.hypot(data[:, 2], data[:, 3]).reshape(len(times), len(xi))

for lo, hi in [(0.0, 20.0), (5.0, 20.0)]:
    keep = (times >= lo) & (times <= hi)
    if keep.sum() < 2:
        continue
    T, XI = np.meshgrid(times[keep], xi, indexing="ij")
    fig = plt.figure(figsize=(8, 6))
    ax = fig.add_subplot(projection="3d")
    ax.plot_surface(XI, T, modulus[keep], cmap="viridis", linewidth=0)
    ax.set_xlabel("xi")
    ax.set_ylabel("t")
    ax.set_zlabel("|alpha~|")
    ax.set_title(f"|alpha~|(xi, t), t in [{lo:g}, {hi:g}]")
    fig.savefig(os.path.join(HERE, f"alpha_surface_{lo:g}_{hi:g}.png"), dpi=150)
    plt.close(fig)

    # gradient relative to the profile maximum at each time
    grad = np.abs(np.gradient(modulus[keep], xi, axis=1))
    peak = modulus[keep].max(axis=1, keepdims=True)
    rel = grad / np.where(peak > 0, peak, 1.0)
    fig, ax = plt.subplots(figsize=(8, 5))
    mesh = ax.pcolormesh(xi, times[keep], rel, shading="auto")
    fig.colorbar(mesh, ax=ax, label="|d|alpha~|/dxi| / max|alpha~|")
    ax.set_xlabel("xi")
    ax.set_ylabel("t")
    fig.savefig(os.path.join(HERE, f"alpha_gradient_{lo:g}_{hi:g}.png"), dpi=150)
    plt.close(fig)
"#;

const LAYER_SCRIPT: &str = r#"import json
import os

import numpy as np
import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt

HERE = os.path.dirname(os.path.abspath(__file__))
SIDE = "@SIDE@"

data = np.loadtxt(os.path.join(HERE, f"layer_{SIDE}.csv"), delimiter=",", skiprows=1)
with open(os.path.join(HERE, f"layer_{SIDE}_report.json")) as fh:
    report = json.load(fh)

x = data[:, 0]
a = data[:, 1] + 1j * data[:, 2]
c1 = report["end_ratio"]["predicted"]["re"] + 1j * report["end_ratio"]["predicted"]["im"]

fig, (top, bottom) = plt.subplots(2, 1, figsize=(7, 7), sharex=True)
top.plot(x, a.real, label="Re A")
top.plot(x, a.imag, label="Im A")
top.plot(x, (c1 * x).real, "k--", label="C1 X")
top.legend()
top.set_title(f"{SIDE} layer, kappa = {report['kappa']:g}, omega = {report['omega']:.4f}")
bottom.semilogy(x[1:], np.abs(a - c1 * x)[1:], label="|A - C1 X|")
# decaying WKBJ mode, anchored mid-layer
m = len(x) // 2
wkbj = np.abs(a - c1 * x)[m] * np.exp(-abs(report["kappa"]) * (x[1:] - x[m])) * (x[1:] / x[m]) ** report["omega"]
bottom.semilogy(x[1:], wkbj, "k--", label="X^omega exp(-kappa X)")
bottom.set_xlabel("x" if SIDE == "inner" else "X")
bottom.legend()
fig.savefig(os.path.join(HERE, f"layer_{SIDE}.png"), dpi=150)
"#;

/// Write plotting scripts for the recognised outputs in `dir`. Nothing is
/// written unless at least one is found.
pub fn cmd_plotscripts(dir: &Path) -> CliResult<Vec<PathBuf>> {
    if !dir.is_dir() {
        return Err(CliError::input(dir, "not a directory"));
    }
    let mut scripts: Vec<(PathBuf, String)> = vec![];
    if dir.join("alpha.csv").is_file() {
        scripts.push((dir.join("plot_alpha_surface.py"), SURFACE_SCRIPT.to_string()));
    }
    for side in [Side::Inner, Side::Outer] {
        if dir.join(format!("layer_{side}.csv")).is_file() && dir.join(format!("layer_{side}_report.json")).is_file() {
            scripts.push((
                dir.join(format!("plot_layer_{side}.py")),
                LAYER_SCRIPT.replace("@SIDE@", side.name()),
            ));
        }
    }
    if scripts.is_empty() {
        return Err(CliError::input(dir, "no simulate or layer output to plot"));
    }
    for (path, text) in &scripts {
        crate::output::write_bytes(path, text.as_bytes())?;
    }
    if let Ok(manifest) = Manifest::read(dir) {
        manifest.write(dir)?;
    }
    Ok(scripts.into_iter().map(|(p, _)| p).collect())
}
