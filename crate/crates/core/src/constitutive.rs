//! Closure functions of the two-phase mixture: net cell birth rate `S_c`,
//! extra cell pressure `Σ_c`, interphase drag `k` and nutrient uptake `Q_c`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Constitutive, geometric and perturbation constants.
///
/// `mu_hat_c` is the composite viscosity entering the normal-stress balance.
/// It is kept as an independent input; [`ModelParameters::with_default_mu_hat`]
/// sets it to `lambda_c + 2 mu_c`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelParameters {
    pub s0: f64,
    pub s1: f64,
    pub s2: f64,
    pub s3: f64,
    pub s4: f64,
    pub sigma_hat: f64,
    pub r: f64,
    pub q: f64,
    pub alpha_star: f64,
    pub alpha_min: f64,
    pub mu_c: f64,
    pub lambda_c: f64,
    pub mu_hat_c: f64,
    #[serde(default)]
    pub k0: f64,
    #[serde(default)]
    pub q0: f64,
    #[serde(default)]
    pub q1: f64,
    pub c_inf: f64,
    pub r0: f64,
    pub kappa: f64,
}

/// Names accepted by [`ModelParameters::get`] and [`ModelParameters::set`].
pub const PARAMETER_NAMES: [&str; 19] = [
    "s0",
    "s1",
    "s2",
    "s3",
    "s4",
    "sigma_hat",
    "r",
    "q",
    "alpha_star",
    "alpha_min",
    "mu_c",
    "lambda_c",
    "mu_hat_c",
    "k0",
    "q0",
    "q1",
    "c_inf",
    "r0",
    "kappa",
];

impl ModelParameters {
    /// Reference set used throughout the tests: nutrient-rich limit case with
    /// linear pressure law and `mu_hat_c = lambda_c + 2 mu_c = 3`.
    pub fn ref1() -> Self {
        Self {
            s0: 1.0,
            s1: 1.0,
            s2: 0.05,
            s3: 0.0,
            s4: 0.0,
            sigma_hat: 0.3,
            r: 1.0,
            q: 1.0,
            alpha_star: 0.5,
            alpha_min: 0.2,
            mu_c: 1.0,
            lambda_c: 1.0,
            mu_hat_c: 3.0,
            k0: 0.0,
            q0: 0.0,
            q1: 0.0,
            c_inf: 1.0,
            r0: 1.0,
            kappa: 2.0,
        }
    }

    /// Same as [`ModelParameters::ref1`] with a softer pressure law.
    pub fn ref2() -> Self {
        Self {
            sigma_hat: 0.1,
            ..Self::ref1()
        }
    }

    pub fn with_default_mu_hat(mut self) -> Self {
        self.mu_hat_c = self.lambda_c + 2.0 * self.mu_c;
        self
    }

    pub fn with_kappa(mut self, kappa: f64) -> Self {
        self.kappa = kappa;
        self
    }

    /// Checks the parameter invariants.
    ///
    /// `sigma_hat = 0` is accepted (pressure-free mixture); a negative
    /// wavenumber is accepted as the complex-conjugate mode of `|kappa|`.
    pub fn validate(&self) -> Result<()> {
        let finite = [
            self.s0,
            self.s1,
            self.s2,
            self.s3,
            self.s4,
            self.sigma_hat,
            self.r,
            self.q,
            self.alpha_star,
            self.alpha_min,
            self.mu_c,
            self.lambda_c,
            self.mu_hat_c,
            self.k0,
            self.q0,
            self.q1,
            self.c_inf,
            self.r0,
            self.kappa,
        ];
        if let Some(i) = finite.iter().position(|v| !v.is_finite()) {
            return Err(invalid(format!("{} is not finite", PARAMETER_NAMES[i])));
        }
        for (name, v) in [
            ("s0", self.s0),
            ("s1", self.s1),
            ("s2", self.s2),
            ("s3", self.s3),
            ("s4", self.s4),
            ("k0", self.k0),
            ("q0", self.q0),
            ("q1", self.q1),
            ("sigma_hat", self.sigma_hat),
        ] {
            if v < 0.0 {
                return Err(invalid(format!("{name} must be nonnegative, got {v}")));
            }
        }
        for (name, v) in [
            ("r", self.r),
            ("q", self.q),
            ("mu_c", self.mu_c),
            ("lambda_c", self.lambda_c),
            ("mu_hat_c", self.mu_hat_c),
            ("c_inf", self.c_inf),
            ("r0", self.r0),
        ] {
            if v <= 0.0 {
                return Err(invalid(format!("{name} must be positive, got {v}")));
            }
        }
        if !(0.0 < self.alpha_min && self.alpha_min < self.alpha_star && self.alpha_star < 1.0) {
            return Err(invalid(format!(
                "need 0 < alpha_min < alpha_star < 1, got alpha_min = {}, alpha_star = {}",
                self.alpha_min, self.alpha_star
            )));
        }
        if self.kappa == 0.0 {
            return Err(invalid("kappa = 0 is the unperturbed problem".into()));
        }
        Ok(())
    }

    pub fn get(&self, name: &str) -> Option<f64> {
        Some(match name {
            "s0" => self.s0,
            "s1" => self.s1,
            "s2" => self.s2,
            "s3" => self.s3,
            "s4" => self.s4,
            "sigma_hat" => self.sigma_hat,
            "r" => self.r,
            "q" => self.q,
            "alpha_star" => self.alpha_star,
            "alpha_min" => self.alpha_min,
            "mu_c" => self.mu_c,
            "lambda_c" => self.lambda_c,
            "mu_hat_c" => self.mu_hat_c,
            "k0" => self.k0,
            "q0" => self.q0,
            "q1" => self.q1,
            "c_inf" => self.c_inf,
            "r0" => self.r0,
            "kappa" => self.kappa,
            _ => return None,
        })
    }

    pub fn set(&mut self, name: &str, value: f64) -> Result<()> {
        let slot = match name {
            "s0" => &mut self.s0,
            "s1" => &mut self.s1,
            "s2" => &mut self.s2,
            "s3" => &mut self.s3,
            "s4" => &mut self.s4,
            "sigma_hat" => &mut self.sigma_hat,
            "r" => &mut self.r,
            "q" => &mut self.q,
            "alpha_star" => &mut self.alpha_star,
            "alpha_min" => &mut self.alpha_min,
            "mu_c" => &mut self.mu_c,
            "lambda_c" => &mut self.lambda_c,
            "mu_hat_c" => &mut self.mu_hat_c,
            "k0" => &mut self.k0,
            "q0" => &mut self.q0,
            "q1" => &mut self.q1,
            "c_inf" => &mut self.c_inf,
            "r0" => &mut self.r0,
            "kappa" => &mut self.kappa,
            _ => return Err(invalid(format!("unknown parameter `{name}`"))),
        };
        *slot = value;
        Ok(())
    }

    /// Proliferation factor `s0 C / (1 + s1 C)`.
    pub fn birth_factor(&self, c: f64) -> f64 {
        self.s0 * c / (1.0 + self.s1 * c)
    }

    /// Death factor `(s2 + s3 C) / (1 + s4 C)`.
    pub fn death_factor(&self, c: f64) -> f64 {
        (self.s2 + self.s3 * c) / (1.0 + self.s4 * c)
    }
}

fn invalid(msg: String) -> Error {
    Error::InvalidParameter(msg)
}

fn check_fraction(alpha: f64) -> Result<()> {
    if (0.0..=1.0).contains(&alpha) {
        Ok(())
    } else {
        Err(Error::Domain {
            what: "alpha",
            value: alpha,
            domain: "[0, 1]",
        })
    }
}

fn check_nutrient(c: f64) -> Result<()> {
    if c >= 0.0 {
        Ok(())
    } else {
        Err(Error::Domain {
            what: "C",
            value: c,
            domain: "[0, inf)",
        })
    }
}

/// Net cell birth rate `S_c(α, C)`.
pub fn eval_sc(p: &ModelParameters, alpha: f64, c: f64) -> Result<f64> {
    check_fraction(alpha)?;
    check_nutrient(c)?;
    Ok(p.birth_factor(c) * alpha * (1.0 - alpha) - p.death_factor(c) * alpha)
}

/// `∂S_c/∂α (α, C)`.
pub fn eval_dsc_dalpha(p: &ModelParameters, alpha: f64, c: f64) -> Result<f64> {
    check_fraction(alpha)?;
    check_nutrient(c)?;
    Ok(p.birth_factor(c) * (1.0 - 2.0 * alpha) - p.death_factor(c))
}

/// Extra cell pressure `Σ_c(α)`; the Heaviside factor vanishes at `α = α_min`.
pub fn eval_sigma_c(p: &ModelParameters, alpha: f64) -> Result<f64> {
    if !(0.0..1.0).contains(&alpha) {
        return Err(Error::Domain {
            what: "alpha",
            value: alpha,
            domain: "[0, 1)",
        });
    }
    if alpha <= p.alpha_min {
        return Ok(0.0);
    }
    let d = alpha - p.alpha_star;
    // |d|^(r-1) d written as sign(d)|d|^r so that Σ_c(α*) = 0 for every r > 0
    Ok(p.sigma_hat * d.signum() * d.abs().powf(p.r) * (1.0 - alpha).powf(-p.q))
}

/// `Σ_c'(α)` on the smooth branch `α_min < α < 1`.
pub fn eval_dsigma_c(p: &ModelParameters, alpha: f64) -> Result<f64> {
    if !(alpha > p.alpha_min && alpha < 1.0) {
        return Err(Error::Domain {
            what: "alpha",
            value: alpha,
            domain: "(alpha_min, 1)",
        });
    }
    let d = alpha - p.alpha_star;
    if d == 0.0 && p.r < 1.0 {
        return Err(Error::Singularity { alpha });
    }
    let u = 1.0 - alpha;
    let power_term = if d == 0.0 {
        if p.r == 1.0 {
            1.0
        } else {
            0.0
        }
    } else {
        p.r * d.abs().powf(p.r - 1.0)
    };
    let pole_term = d.signum() * d.abs().powf(p.r) * p.q / u;
    Ok(p.sigma_hat * u.powf(-p.q) * (power_term + pole_term))
}

/// Interphase drag `k(α) = k0 α (1 - α)`.
pub fn eval_k(p: &ModelParameters, alpha: f64) -> Result<f64> {
    check_fraction(alpha)?;
    Ok(p.k0 * alpha * (1.0 - alpha))
}

/// Nutrient uptake `Q_c(α, C) = Q0 C α / (1 + Q1 C)`.
pub fn eval_qc(p: &ModelParameters, alpha: f64, c: f64) -> Result<f64> {
    check_fraction(alpha)?;
    check_nutrient(c)?;
    Ok(p.q0 * c * alpha / (1.0 + p.q1 * c))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn birth_params() -> ModelParameters {
        ModelParameters::ref1()
    }

    fn central(f: impl Fn(f64) -> f64, x: f64, h: f64) -> f64 {
        (f(x + h) - f(x - h)) / (2.0 * h)
    }

    #[test]
    fn birth_rate_values() {
        let p = birth_params();
        assert_eq!(eval_sc(&p, 0.0, 1.0).unwrap(), 0.0);
        assert!((eval_sc(&p, 0.5, 1.0).unwrap() - 0.1).abs() < 1e-15);
        assert!((eval_sc(&p, 1.0, 1.0).unwrap() + 0.05).abs() < 1e-15);
    }

    #[test]
    fn birth_rate_derivative_values() {
        let p = birth_params();
        assert!((eval_dsc_dalpha(&p, 0.5, 1.0).unwrap() + 0.05).abs() < 1e-15);
        let p0 = ModelParameters { s2: 0.0, s3: 0.0, ..p };
        for c in [0.0, 0.3, 1.0, 7.0] {
            let expected = p0.s0 * c / (1.0 + p0.s1 * c);
            assert!((eval_dsc_dalpha(&p0, 0.0, c).unwrap() - expected).abs() < 1e-15);
        }
        assert!((eval_dsc_dalpha(&p, 0.7298438, 1.0).unwrap() + 0.2798438).abs() < 1e-12);
    }

    #[test]
    fn domain_errors() {
        let p = birth_params();
        assert!(matches!(eval_sc(&p, -0.1, 1.0), Err(Error::Domain { .. })));
        assert!(matches!(eval_sc(&p, 1.1, 1.0), Err(Error::Domain { .. })));
        assert!(matches!(eval_sc(&p, 0.5, -1.0), Err(Error::Domain { .. })));
        assert!(matches!(eval_dsc_dalpha(&p, 2.0, 1.0), Err(Error::Domain { .. })));
        assert!(matches!(eval_sigma_c(&p, 1.0), Err(Error::Domain { .. })));
        assert!(matches!(eval_dsigma_c(&p, 0.1), Err(Error::Domain { .. })));
        assert!(matches!(eval_dsigma_c(&p, 1.0), Err(Error::Domain { .. })));
        assert!(matches!(eval_k(&p, 1.5), Err(Error::Domain { .. })));
        assert!(matches!(eval_qc(&p, 0.5, -2.0), Err(Error::Domain { .. })));
    }

    #[test]
    fn pressure_values() {
        let p = ModelParameters {
            sigma_hat: 1.0,
            r: 1.0,
            q: 1.0,
            alpha_star: 0.8,
            alpha_min: 0.3,
            ..birth_params()
        };
        assert_eq!(eval_sigma_c(&p, 0.8).unwrap(), 0.0);
        assert_eq!(eval_sigma_c(&p, 0.1).unwrap(), 0.0);
        // Heaviside closed at alpha_min
        assert_eq!(eval_sigma_c(&p, 0.3).unwrap(), 0.0);
        assert!((eval_sigma_c(&p, 0.9).unwrap() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn pressure_derivative_values() {
        let p = birth_params();
        let got = eval_dsigma_c(&p, 0.7298438).unwrap();
        assert!((got - 2.055233).abs() < 2e-6, "{got}");

        let linear = ModelParameters { q: 0.0, ..p };
        for a in [0.55, 0.7, 0.95] {
            assert!((eval_dsigma_c(&linear, a).unwrap() - linear.sigma_hat).abs() < 1e-14);
        }

        let cusp = ModelParameters { r: 0.5, ..p };
        assert!(matches!(
            eval_dsigma_c(&cusp, cusp.alpha_star),
            Err(Error::Singularity { .. })
        ));
        // r = 1 has no cusp at alpha_star
        let at_star = eval_dsigma_c(&p, p.alpha_star).unwrap();
        assert!((at_star - p.sigma_hat / (1.0 - p.alpha_star)).abs() < 1e-14);
    }

    #[test]
    fn drag_and_uptake() {
        let p = birth_params();
        assert_eq!(eval_k(&p, 0.4).unwrap(), 0.0);
        assert_eq!(eval_qc(&p, 0.4, 1.0).unwrap(), 0.0);
        let q = ModelParameters {
            k0: 2.0,
            q0: 1.0,
            q1: 1.0,
            ..p
        };
        assert!((eval_k(&q, 0.5).unwrap() - 0.5).abs() < 1e-15);
        assert!((eval_qc(&q, 0.5, 1.0).unwrap() - 0.25).abs() < 1e-15);
    }

    #[test]
    fn derivatives_match_central_differences() {
        // deterministic sweep over several exponent choices
        let h = 1e-6;
        for (r, q) in [(1.0, 1.0), (1.5, 0.5), (0.7, 2.0), (2.0, 1.0)] {
            let p = ModelParameters {
                r,
                q,
                s3: 0.2,
                s4: 0.4,
                ..birth_params()
            };
            for k in 0..100 {
                let a = p.alpha_min + 0.01 + (0.97 - p.alpha_min) * (k as f64 + 0.5) / 100.0;
                if (a - p.alpha_star).abs() < 0.01 {
                    continue;
                }
                let d = eval_dsigma_c(&p, a).unwrap();
                let fd = central(|x| eval_sigma_c(&p, x).unwrap(), a, h);
                assert!((d - fd).abs() <= 1e-6 * (1.0 + d.abs()), "r={r} q={q} a={a}");

                let c = 0.3 + k as f64 * 0.02;
                let d = eval_dsc_dalpha(&p, a, c).unwrap();
                let fd = central(|x| eval_sc(&p, x, c).unwrap(), a, h);
                assert!((d - fd).abs() <= 1e-6 * (1.0 + d.abs()));
            }
        }
    }

    #[test]
    fn parameter_validation() {
        assert!(ModelParameters::ref1().validate().is_ok());
        let bad = ModelParameters {
            alpha_min: 0.6,
            ..ModelParameters::ref1()
        };
        assert!(bad.validate().is_err());
        assert!(ModelParameters::ref1().with_kappa(0.0).validate().is_err());
        assert!(ModelParameters::ref1().with_kappa(-2.0).validate().is_ok());
        let neg = ModelParameters {
            s2: -1.0,
            ..ModelParameters::ref1()
        };
        assert!(neg.validate().is_err());
    }

    #[test]
    fn named_access_round_trips() {
        let mut p = ModelParameters::ref1();
        for (i, name) in PARAMETER_NAMES.iter().enumerate() {
            p.set(name, i as f64 + 0.25).unwrap();
            assert_eq!(p.get(name), Some(i as f64 + 0.25));
        }
        assert!(p.set("nope", 1.0).is_err());
        assert_eq!(p.get("nope"), None);
    }

    #[test]
    fn default_composite_viscosity() {
        let p = ModelParameters {
            mu_c: 0.5,
            lambda_c: 2.0,
            ..ModelParameters::ref1()
        }
        .with_default_mu_hat();
        assert_eq!(p.mu_hat_c, 3.0);
    }
}
