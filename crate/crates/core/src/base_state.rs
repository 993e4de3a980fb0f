//! Spatially uniform, exponentially growing base state of the limit case.
//!
//! The cell fraction `α_h` solves `μ̂_c S_c(α_h, C∞) = α_h Σ_c(α_h)` and the
//! growth rate is `λ₂ = Σ_c(α_h)/μ̂_c`. The base profiles are
//! `v_c = λ₂ x e₁`, `v_w = -λ₂ α_h x e₁ / (1 - α_h)` on `0 ≤ x ≤ R₀ e^{λ₂ t}`.

use serde::Serialize;

use crate::constitutive::{eval_dsc_dalpha, eval_dsigma_c, eval_sc, eval_sigma_c, ModelParameters};
use crate::error::{Error, Result};

/// Number of uniform scan points used to bracket roots.
pub const DEFAULT_SCAN_POINTS: usize = 2000;

/// Width of the excluded neighbourhood of the pressure pole at `α = 1`.
pub const POLE_EXCLUSION: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BaseState {
    pub alpha_h: f64,
    pub lambda2: f64,
    /// `|μ̂_c S_c(α_h) - α_h Σ_c(α_h)|`
    pub residual: f64,
    pub branch_id: usize,
}

impl BaseState {
    pub fn is_growing(&self) -> bool {
        self.lambda2 > 0.0
    }
}

/// Root function `f(α) = μ̂_c S_c(α, C∞) - α Σ_c(α)`.
fn defect(p: &ModelParameters, alpha: f64) -> Result<f64> {
    Ok(p.mu_hat_c * eval_sc(p, alpha, p.c_inf)? - alpha * eval_sigma_c(p, alpha)?)
}

pub fn find_base_states(p: &ModelParameters) -> Result<Vec<BaseState>> {
    find_base_states_with_resolution(p, DEFAULT_SCAN_POINTS)
}

/// Brackets every sign change of `f` on a uniform scan of
/// `(α_min, 1 - POLE_EXCLUSION]` and refines each by bisection followed by a
/// secant polish.
pub fn find_base_states_with_resolution(p: &ModelParameters, scan_points: usize) -> Result<Vec<BaseState>> {
    p.validate()?;
    if scan_points < 2 {
        return Err(Error::InvalidParameter(format!(
            "scan needs at least 2 points, got {scan_points}"
        )));
    }
    let lo = p.alpha_min;
    let hi = 1.0 - POLE_EXCLUSION;
    let step = (hi - lo) / scan_points as f64;
    let nodes: Vec<f64> = (1..=scan_points).map(|i| lo + step * i as f64).collect();
    let values = nodes.iter().map(|&a| defect(p, a)).collect::<Result<Vec<_>>>()?;

    let mut roots = Vec::new();
    for i in 0..nodes.len() {
        if values[i] == 0.0 {
            roots.push(nodes[i]);
            continue;
        }
        if i + 1 < nodes.len() && values[i + 1] != 0.0 && values[i].signum() != values[i + 1].signum() {
            roots.push(refine(p, nodes[i], nodes[i + 1], values[i])?);
        }
    }
    if roots.is_empty() {
        return Err(Error::NoRoot);
    }

    roots
        .into_iter()
        .enumerate()
        .map(|(branch_id, alpha_h)| {
            let f = defect(p, alpha_h)?;
            Ok(BaseState {
                alpha_h,
                lambda2: eval_sigma_c(p, alpha_h)? / p.mu_hat_c,
                residual: f.abs(),
                branch_id,
            })
        })
        .collect()
}

fn refine(p: &ModelParameters, mut a: f64, mut b: f64, mut fa: f64) -> Result<f64> {
    for _ in 0..200 {
        let m = 0.5 * (a + b);
        if m <= a || m >= b {
            break;
        }
        let fm = defect(p, m)?;
        if fm == 0.0 {
            return Ok(m);
        }
        if fm.signum() == fa.signum() {
            a = m;
            fa = fm;
        } else {
            b = m;
        }
    }
    // secant polish on the final bracket, kept only if it improves the defect
    let fb = defect(p, b)?;
    let mut best = if fa.abs() <= fb.abs() { a } else { b };
    if fb != fa {
        let s = b - fb * (b - a) / (fb - fa);
        if s > a && s < b {
            let fs = defect(p, s)?;
            if fs.abs() < fa.abs().min(fb.abs()) {
                best = s;
            }
        }
    }
    Ok(best)
}

/// Selects the branch with the given id.
pub fn select_branch(states: &[BaseState], branch_id: usize) -> Result<BaseState> {
    states.get(branch_id).copied().ok_or_else(|| {
        Error::InvalidParameter(format!(
            "branch {branch_id} requested but only {} base state(s) exist",
            states.len()
        ))
    })
}

/// Outer radius `R_*(t) = R₀ e^{λ₂ t}`.
pub fn r_star(base: &BaseState, r0: f64, t: f64) -> f64 {
    r0 * (base.lambda2 * t).exp()
}

/// Axial components `(v_c¹, v_w¹)` of the base velocities at `x ∈ [0, R_*(t)]`.
pub fn base_velocities(base: &BaseState, r0: f64, x: f64, t: f64) -> Result<(f64, f64)> {
    let radius = r_star(base, r0, t);
    if !(0.0..=radius).contains(&x) {
        return Err(Error::Domain {
            what: "x",
            value: x,
            domain: "[0, R_*(t)]",
        });
    }
    let vc = base.lambda2 * x;
    let vw = -base.lambda2 * base.alpha_h * x / (1.0 - base.alpha_h);
    Ok((vc, vw))
}

/// Base-state quantities that enter every linearised equation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Linearization {
    pub alpha_h: f64,
    pub lambda2: f64,
    /// `∂S_c/∂α (α_h, C∞)`
    pub dsc: f64,
    /// `Σ_c(α_h)`
    pub sigma: f64,
    /// `Σ_c'(α_h)`
    pub dsigma: f64,
    /// `-Σ_c - α_h Σ_c' + λ_c λ₂`, the coefficient of `iκ α̃` in the transverse
    /// momentum balance.
    pub coupling: f64,
    pub mu_c: f64,
    pub lambda_c: f64,
    pub mu_hat: f64,
    pub kappa: f64,
    pub r0: f64,
}

impl Linearization {
    pub fn new(p: &ModelParameters, base: &BaseState) -> Result<Self> {
        let a = base.alpha_h;
        let sigma = eval_sigma_c(p, a)?;
        let dsigma = eval_dsigma_c(p, a)?;
        Ok(Self {
            alpha_h: a,
            lambda2: base.lambda2,
            dsc: eval_dsc_dalpha(p, a, p.c_inf)?,
            sigma,
            dsigma,
            coupling: -sigma - a * dsigma + p.lambda_c * base.lambda2,
            mu_c: p.mu_c,
            lambda_c: p.lambda_c,
            mu_hat: p.mu_hat_c,
            kappa: p.kappa,
            r0: p.r0,
        })
    }

    pub fn r_star(&self, t: f64) -> f64 {
        self.r0 * (self.lambda2 * t).exp()
    }
}
