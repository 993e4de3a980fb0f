use num_complex::Complex64 as C64;
use proptest::prelude::*;
use tumour_core::asymptotics::*;
use tumour_core::perturbation::Field;
use tumour_core::{find_base_states, Linearization, ModelParameters};

prop_compose! {
    fn parameters()(
        s0 in 0.3..3.0f64,
        s1 in 0.0..2.0f64,
        s2 in 0.01..0.4f64,
        sigma_hat in 0.02..1.5f64,
        r in 0.5..2.0f64,
        q in 0.5..2.0f64,
        alpha_star in 0.2..0.8f64,
        min_frac in 0.1..0.9f64,
        mu_c in 0.2..3.0f64,
        lambda_c in 0.2..3.0f64,
        c_inf in 0.3..2.0f64,
        kappa in 0.5..8.0f64,
    ) -> ModelParameters {
        ModelParameters {
            s0, s1, s2, s3: 0.0, s4: 0.0, sigma_hat, r, q, alpha_star,
            alpha_min: min_frac * alpha_star,
            mu_c, lambda_c, mu_hat_c: 0.0,
            c_inf, kappa,
            ..ModelParameters::ref1()
        }
        .with_default_mu_hat()
    }
}

fn linearizations(p: &ModelParameters) -> Vec<Linearization> {
    find_base_states(p)
        .map(|v| v.iter().filter_map(|b| Linearization::new(p, b).ok()).collect())
        .unwrap_or_default()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn margin_identity_at_every_base_state(p in parameters()) {
        for l in linearizations(&p) {
            let r = compute_rates(&l);
            let m = margin_identity(&l, p.birth_factor(p.c_inf));
            prop_assert!((r.margin - m).abs() <= 1e-12 * (1.0 + m.abs()), "{} vs {m}", r.margin);
        }
    }

    #[test]
    fn rate_structure(p in parameters(), k2 in 0.5..8.0f64) {
        for l in linearizations(&p) {
            let r = compute_rates(&l);
            prop_assert!((r.outer_rate(Field::Alpha) - r.margin).abs() < 1e-15);
            prop_assert_eq!(r.outer_rate(Field::Vc2), r.outer_rate(Field::Alpha));
            prop_assert_eq!(r.outer_rate(Field::Vw2), r.outer_rate(Field::Alpha));
            prop_assert!((r.outer_rate(Field::Vc1) - (r.gamma0 - 2.0 * l.lambda2)).abs() < 1e-15);
            prop_assert_eq!(r.outer_rate(Field::Vw1), r.gamma0);
            prop_assert!((r.layer_rate() - (r.gamma0 - 2.0 * l.lambda2)).abs() < 1e-15);
            prop_assert!(r.gamma3.re == 0.0);

            // rates do not depend on the wavenumber; γ₁ ∝ κ⁻², γ₃ ∝ κ⁻¹
            let mut other = l;
            other.kappa = k2;
            let s = compute_rates(&other);
            prop_assert!((s.gamma0 - r.gamma0).abs() <= 1e-14 * (1.0 + r.gamma0.abs()));
            prop_assert!((s.margin - r.margin).abs() <= 1e-14 * (1.0 + r.margin.abs()));
            let ratio = l.kappa / k2;
            prop_assert!((s.gamma1 - r.gamma1 * ratio * ratio).abs() <= 1e-12 * (1.0 + s.gamma1.abs()));
            prop_assert!((s.gamma3 - r.gamma3 * ratio).norm() <= 1e-12 * (1.0 + s.gamma3.norm()));
        }
    }

    #[test]
    fn verdict_follows_margin_sign(p in parameters()) {
        for l in linearizations(&p).into_iter().filter(|l| l.lambda2 > 0.0) {
            let s = classify_stability(&l).unwrap();
            let expected = if s.margin > 0.0 { Verdict::Unstable } else if s.margin < 0.0 { Verdict::Stable } else { Verdict::Marginal };
            prop_assert_eq!(s.verdict, expected);
            prop_assert_eq!(s.exponents[0], s.margin);
        }
    }

    #[test]
    fn fitted_rate_ignores_amplitude(rate in -3.0..1.0f64, amp in 1e-6..1e6f64, phase in 0.0..6.3f64) {
        let series: Vec<(f64, C64)> = (0..=60)
            .map(|k| {
                let t = 0.25 * k as f64;
                (t, C64::from_polar(amp * (rate * t).exp(), phase + 0.7 * t))
            })
            .collect();
        let fit = fit_rate(&series, 2.0, 14.0).unwrap();
        prop_assert!((fit.rate - rate).abs() < 1e-10);
        prop_assert!(fit.r_squared > 1.0 - 1e-12 || rate.abs() < 1e-9);
        let scaled: Vec<(f64, C64)> = series.iter().map(|(t, z)| (*t, z * 37.5)).collect();
        prop_assert!((fit_rate(&scaled, 2.0, 14.0).unwrap().rate - fit.rate).abs() < 1e-12);
    }
}
