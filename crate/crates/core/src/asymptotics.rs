//! Closed-form large-time rates of the outer solution, the stability margin,
//! and empirical rate fits of simulated series.

use num_complex::Complex64;
use serde::Serialize;

use crate::base_state::Linearization;
use crate::error::{Error, Result};
use crate::perturbation::{Field, Grid, PerturbationState, UNDERFLOW};

type C64 = Complex64;

/// Minimum number of samples in a rate-fit window.
pub const MIN_FIT_SAMPLES: usize = 10;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LayerExponents {
    /// Exponents of `α̃`, `ṽ_c¹`, `ṽ_c²` inside either layer, relative to `γ₀`.
    pub a0: f64,
    pub a1: f64,
    pub a2: f64,
    /// Exponents of the water velocities in the outer layer, relative to `γ₀`.
    pub b1: f64,
    pub b2: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct AsymptoticRates {
    pub gamma0: f64,
    pub gamma1: f64,
    pub gamma3: C64,
    pub lambda2: f64,
    pub margin: f64,
    pub layer: LayerExponents,
}

impl AsymptoticRates {
    /// Exponential rate of each field at fixed interior `ξ`.
    pub fn outer_rate(&self, field: Field) -> f64 {
        let (g, l) = (self.gamma0, self.lambda2);
        match field {
            Field::Alpha | Field::Vc2 | Field::Vw2 => g - l,
            Field::Vc1 => g - 2.0 * l,
            Field::Vw1 => g,
        }
    }

    /// Rate of `α̃` and the cell velocities at a fixed layer coordinate.
    pub fn layer_rate(&self) -> f64 {
        self.gamma0 + self.layer.a0
    }
}

pub fn compute_rates(lin: &Linearization) -> AsymptoticRates {
    let k = lin.kappa;
    let ah = lin.alpha_h;
    let l2 = lin.lambda2;
    let gamma0 = lin.dsc - ah * lin.dsigma / lin.mu_hat + l2 * (lin.lambda_c / lin.mu_hat - 1.0);
    let gamma1 = -lin.dsigma / (lin.mu_c * k * k)
        - (lin.lambda_c + lin.mu_c) * lin.coupling / (lin.mu_c * k * k * lin.mu_hat * ah);
    let gamma3 = -lin.coupling / (C64::new(0.0, k) * (lin.mu_hat * ah));
    let a0 = -2.0 * l2;
    AsymptoticRates {
        gamma0,
        gamma1,
        gamma3,
        lambda2: l2,
        margin: gamma0 - l2,
        layer: LayerExponents {
            a0,
            a1: a0,
            a2: a0,
            b1: a0 + l2,
            b2: a0 + l2,
        },
    }
}

/// Margin rewritten with `∂S_c/∂α = λ₂ - α_h s₀C∞/(1+s₁C∞)`, which follows
/// from `S_c(α_h)/α_h = λ₂` for the closure family in use.
pub fn margin_identity(lin: &Linearization, birth_factor: f64) -> f64 {
    -lin.alpha_h * birth_factor - lin.alpha_h * lin.dsigma / lin.mu_hat
        + lin.lambda2 * (lin.lambda_c / lin.mu_hat - 1.0)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Verdict {
    Stable,
    Unstable,
    Marginal,
}

impl Verdict {
    pub fn name(self) -> &'static str {
        match self {
            Verdict::Stable => "stable",
            Verdict::Unstable => "unstable",
            Verdict::Marginal => "marginal",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Stability {
    pub margin: f64,
    pub verdict: Verdict,
    /// `γ₀-λ₂`, `γ₀-2λ₂`, `γ₀-3λ₂`
    pub exponents: [f64; 3],
}

/// Requires a growing base state.
pub fn classify_stability(lin: &Linearization) -> Result<Stability> {
    if !(lin.lambda2 > 0.0) {
        return Err(Error::Precondition(format!(
            "stability criterion needs a growing base state, lambda2 = {}",
            lin.lambda2
        )));
    }
    let r = compute_rates(lin);
    let verdict = if r.margin > 0.0 {
        Verdict::Unstable
    } else if r.margin < 0.0 {
        Verdict::Stable
    } else {
        Verdict::Marginal
    };
    let (g, l) = (r.gamma0, r.lambda2);
    Ok(Stability {
        margin: r.margin,
        verdict,
        exponents: [g - l, g - 2.0 * l, g - 3.0 * l],
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RateFit {
    pub rate: f64,
    /// Intercept of `ln|z|` at `t = 0`.
    pub intercept: f64,
    pub r_squared: f64,
    pub samples: usize,
    pub t0: f64,
    pub t1: f64,
}

/// Least-squares slope of `ln|z|` against `t` over samples with `t0 ≤ t ≤ t1`.
pub fn fit_rate(series: &[(f64, C64)], t0: f64, t1: f64) -> Result<RateFit> {
    let pts: Vec<(f64, f64)> = series
        .iter()
        .filter(|(t, _)| *t >= t0 && *t <= t1)
        .map(|(t, z)| (*t, z.norm()))
        .collect();
    if pts.len() < MIN_FIT_SAMPLES {
        return Err(Error::DegenerateWindow(format!(
            "{} samples in [{t0}, {t1}], need at least {MIN_FIT_SAMPLES}",
            pts.len()
        )));
    }
    if let Some((t, m)) = pts.iter().find(|(_, m)| !(*m > UNDERFLOW)) {
        return Err(Error::DegenerateWindow(format!(
            "modulus {m:e} at t = {t} is below the underflow floor"
        )));
    }
    let n = pts.len() as f64;
    let mt = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1.ln()).sum::<f64>() / n;
    let (mut stt, mut sty, mut syy) = (0.0, 0.0, 0.0);
    for &(t, m) in &pts {
        let (dt, dy) = (t - mt, m.ln() - my);
        stt += dt * dt;
        sty += dt * dy;
        syy += dy * dy;
    }
    if stt == 0.0 {
        return Err(Error::DegenerateWindow("all samples share one time".into()));
    }
    let rate = sty / stt;
    let r_squared = if syy == 0.0 {
        1.0
    } else {
        (sty * sty / (stt * syy)).clamp(0.0, 1.0)
    };
    Ok(RateFit {
        rate,
        intercept: my - rate * mt,
        r_squared,
        samples: pts.len(),
        t0: pts[0].0,
        t1: pts[pts.len() - 1].0,
    })
}

/// Last half of `[t_start, t_end]`, cut short where the series underflows.
pub fn default_window(series: &[(f64, C64)]) -> Option<(f64, f64)> {
    let (first, last) = (series.first()?.0, series.last()?.0);
    let t0 = 0.5 * (first + last);
    let t1 = series
        .iter()
        .filter(|(t, _)| *t >= t0)
        .take_while(|(_, z)| z.norm() > UNDERFLOW)
        .map(|(t, _)| *t)
        .last()?;
    Some((t0, t1))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RateReport {
    pub field: String,
    pub location: String,
    pub t0: f64,
    pub t1: f64,
    pub fitted_rate: f64,
    pub r_squared: f64,
    pub predicted_rate: f64,
    pub rel_err: f64,
}

impl RateReport {
    /// Fit `series` on `[t0, t1]` and compare against `predicted`. The window
    /// must span at least five e-folds of the predicted rate.
    pub fn build(field: &str, location: &str, series: &[(f64, C64)], t0: f64, t1: f64, predicted: f64) -> Result<Self> {
        if predicted != 0.0 && (t1 - t0) < 5.0 / predicted.abs() {
            return Err(Error::DegenerateWindow(format!(
                "window [{t0}, {t1}] is shorter than 5/|{predicted}|"
            )));
        }
        let fit = fit_rate(series, t0, t1)?;
        let rel_err = if predicted == 0.0 {
            fit.rate.abs()
        } else {
            ((fit.rate - predicted) / predicted).abs()
        };
        Ok(Self {
            field: field.to_string(),
            location: location.to_string(),
            t0: fit.t0,
            t1: fit.t1,
            fitted_rate: fit.rate,
            r_squared: fit.r_squared,
            predicted_rate: predicted,
            rel_err,
        })
    }
}

/// Fit of `ᾱ` near one endpoint: `ᾱ ≈ Σ c_k s^k` in the distance `s` from
/// the endpoint, over nodes with `s` in `[s_lo, s_hi]`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EndpointFit {
    pub s_lo: f64,
    pub s_hi: f64,
    pub coefficients: Vec<C64>,
    /// Slope `dᾱ/ds` extrapolated to `s = 0`.
    pub slope: C64,
    /// Coefficient of determination of a straight line `ᾱ ≈ m s` over the
    /// same window.
    pub linear_r_squared: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct OuterProfile {
    pub t: f64,
    pub xi: Vec<f64>,
    /// `α̃ e^{-(γ₀-λ₂)t}` at every node (layer nodes included, flagged by
    /// `exclusion`).
    pub alpha_bar: Vec<C64>,
    /// Width `5/R_*(t)` excluded at each end.
    pub exclusion: f64,
    pub outer_fit: EndpointFit,
    pub inner_fit: EndpointFit,
    /// `dᾱ/dξ` at `ξ → 1` and `ξ → 0`.
    pub slope_at_one: C64,
    pub slope_at_zero: C64,
    /// `-(1/R₀) dᾱ/dξ (1)`
    pub c1: C64,
    /// `(1/R₀) dᾱ/dξ (0)`
    pub d1: C64,
}

/// Width of the slope-fit window beyond the exclusion zone.
pub const ENDPOINT_WINDOW: f64 = 0.2;

/// Degree of the endpoint polynomial.
pub const ENDPOINT_DEGREE: usize = 3;

/// Least-squares polynomial in `s` (no constant-term constraint), solved by
/// Householder QR on the real Vandermonde matrix.
fn poly_fit(s: &[f64], y: &[C64], degree: usize) -> Vec<C64> {
    let m = s.len();
    let k = degree + 1;
    let scale = s.iter().fold(0.0f64, |a, b| a.max(b.abs())).max(f64::MIN_POSITIVE);
    let mut a: Vec<Vec<f64>> = s
        .iter()
        .map(|&x| (0..k).map(|p| (x / scale).powi(p as i32)).collect())
        .collect();
    let mut b: Vec<C64> = y.to_vec();
    for col in 0..k {
        let norm = (col..m).map(|r| a[r][col] * a[r][col]).sum::<f64>().sqrt();
        if norm == 0.0 {
            continue;
        }
        let alpha = if a[col][col] > 0.0 { -norm } else { norm };
        let mut v: Vec<f64> = (col..m).map(|r| a[r][col]).collect();
        v[0] -= alpha;
        let vv: f64 = v.iter().map(|x| x * x).sum();
        if vv == 0.0 {
            continue;
        }
        for c in col..k {
            let d: f64 = (col..m).map(|r| v[r - col] * a[r][c]).sum::<f64>() * 2.0 / vv;
            for r in col..m {
                a[r][c] -= d * v[r - col];
            }
        }
        let d: C64 = (col..m).map(|r| b[r] * v[r - col]).sum::<C64>() * (2.0 / vv);
        for r in col..m {
            b[r] -= d * v[r - col];
        }
    }
    let mut c = vec![C64::new(0.0, 0.0); k];
    for i in (0..k).rev() {
        let acc: C64 = ((i + 1)..k).map(|j| c[j] * a[i][j]).sum();
        c[i] = (b[i] - acc) / a[i][i];
    }
    c.iter().enumerate().map(|(p, v)| v / scale.powi(p as i32)).collect()
}

fn line_r_squared(s: &[f64], y: &[C64]) -> f64 {
    let n = s.len() as f64;
    let ms = s.iter().sum::<f64>() / n;
    let my: C64 = y.iter().sum::<C64>() / n;
    let sss: f64 = s.iter().map(|x| (x - ms).powi(2)).sum();
    let ssy: C64 = s.iter().zip(y).map(|(x, v)| (v - my) * (x - ms)).sum();
    let tot: f64 = y.iter().map(|v| (v - my).norm_sqr()).sum();
    if tot == 0.0 {
        return 1.0;
    }
    let slope = ssy / sss;
    let res: f64 = s
        .iter()
        .zip(y)
        .map(|(x, v)| (v - my - slope * (x - ms)).norm_sqr())
        .sum();
    (1.0 - res / tot).clamp(0.0, 1.0)
}

fn endpoint_fit(s: &[f64], y: &[C64], s_lo: f64, s_hi: f64) -> Result<EndpointFit> {
    let (ss, ys): (Vec<f64>, Vec<C64>) = s
        .iter()
        .zip(y)
        .filter(|(x, _)| **x >= s_lo && **x <= s_hi)
        .map(|(x, v)| (*x, *v))
        .unzip();
    if ss.len() < 2 * (ENDPOINT_DEGREE + 1) {
        return Err(Error::DegenerateWindow(format!(
            "only {} nodes in the endpoint window [{s_lo:.4}, {s_hi:.4}]",
            ss.len()
        )));
    }
    let coefficients = poly_fit(&ss, &ys, ENDPOINT_DEGREE);
    Ok(EndpointFit {
        s_lo,
        s_hi,
        slope: coefficients[1],
        linear_r_squared: line_r_squared(&ss, &ys),
        coefficients,
    })
}

/// Outer profile `ᾱ(ξ)` and its endpoint slopes from one snapshot. Each slope
/// comes from a cubic least-squares fit over a window of width
/// [`ENDPOINT_WINDOW`] that starts at the edge of the exclusion zone, and is
/// extrapolated to the endpoint.
pub fn outer_profile(
    lin: &Linearization,
    grid: &Grid,
    snapshot: &PerturbationState,
    rates: &AsymptoticRates,
) -> Result<OuterProfile> {
    let t = snapshot.t;
    let r = lin.r_star(t);
    let exclusion = 5.0 / r;
    if exclusion + ENDPOINT_WINDOW > 0.5 {
        return Err(Error::Precondition(format!(
            "snapshot at t = {t} is too early: the layer exclusion 5/R = {exclusion:.3} leaves no interior"
        )));
    }
    let scale = (-rates.margin * t).exp();
    let alpha_bar: Vec<C64> = snapshot.alpha.iter().map(|z| z * scale).collect();
    let xi = grid.nodes().to_vec();

    let s_one: Vec<f64> = xi.iter().map(|x| 1.0 - x).collect();
    let outer_fit = endpoint_fit(&s_one, &alpha_bar, exclusion, exclusion + ENDPOINT_WINDOW)?;
    let inner_fit = endpoint_fit(&xi, &alpha_bar, exclusion, exclusion + ENDPOINT_WINDOW)?;
    let slope_at_one = -outer_fit.slope;
    let slope_at_zero = inner_fit.slope;
    Ok(OuterProfile {
        t,
        xi,
        alpha_bar,
        exclusion,
        c1: -slope_at_one / lin.r0,
        d1: slope_at_zero / lin.r0,
        outer_fit,
        inner_fit,
        slope_at_one,
        slope_at_zero,
    })
}

/// Largest relative pointwise difference of two outer profiles over nodes
/// outside both exclusion zones, relative to the larger profile's max norm.
pub fn profile_collapse(a: &OuterProfile, b: &OuterProfile) -> f64 {
    let ex = a.exclusion.max(b.exclusion);
    let peak = a
        .alpha_bar
        .iter()
        .chain(&b.alpha_bar)
        .map(|z| z.norm())
        .fold(0.0, f64::max);
    a.xi.iter()
        .zip(a.alpha_bar.iter().zip(&b.alpha_bar))
        .filter(|(x, _)| **x >= ex && **x <= 1.0 - ex)
        .map(|(_, (u, v))| (u - v).norm() / peak)
        .fold(0.0, f64::max)
}
