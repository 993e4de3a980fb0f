//! Linearised two-dimensional perturbations on the fixed domain `ξ ∈ [0, 1]`.
//!
//! The state is `(α̃, R̃)`; the cell velocities are slaved to it through a
//! second-order two-point BVP and the water velocities through a first-order
//! one. Time stepping is classical RK4 on `(α̃, R̃)`.
//!
//! Cell unknowns are interleaved as `[v1_0, v2_0, v1_1, v2_1, ...]`, water
//! unknowns as `[w1_0, w2_0, ...]`.

use std::fmt;
use std::str::FromStr;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::banded::{BandLu, BandMatrix};
use crate::base_state::Linearization;
use crate::error::{Error, Result};

type C64 = Complex64;

const ZERO: C64 = C64::new(0.0, 0.0);

/// Fields below this modulus are frozen at zero.
pub const UNDERFLOW: f64 = 1e-250;

pub const MIN_CELLS: usize = 32;

#[derive(Debug, Clone, PartialEq)]
pub struct Grid {
    n: usize,
    nodes: Vec<f64>,
}

impl Grid {
    pub fn new(n: usize) -> Result<Self> {
        if n < MIN_CELLS {
            return Err(Error::InvalidParameter(format!(
                "grid needs at least {MIN_CELLS} cells, got {n}"
            )));
        }
        let nodes = (0..=n).map(|j| j as f64 / n as f64).collect();
        Ok(Self { n, nodes })
    }

    pub fn cells(&self) -> usize {
        self.n
    }

    pub fn len(&self) -> usize {
        self.n + 1
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn h(&self) -> f64 {
        1.0 / self.n as f64
    }

    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Field {
    Alpha,
    Vc1,
    Vc2,
    Vw1,
    Vw2,
}

impl Field {
    pub const ALL: [Field; 5] = [Field::Alpha, Field::Vc1, Field::Vc2, Field::Vw1, Field::Vw2];

    pub fn name(self) -> &'static str {
        match self {
            Field::Alpha => "alpha",
            Field::Vc1 => "vc1",
            Field::Vc2 => "vc2",
            Field::Vw1 => "vw1",
            Field::Vw2 => "vw2",
        }
    }

    pub fn index(self) -> usize {
        self as usize
    }
}

impl fmt::Display for Field {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Field {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Field::ALL
            .into_iter()
            .find(|f| f.name() == s)
            .ok_or_else(|| Error::InvalidParameter(format!("unknown field `{s}`")))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Side {
    /// Near `ξ = 0`, coordinate `x = ξ R_*`.
    Inner,
    /// Near `ξ = 1`, coordinate `X = (1 - ξ) R_*`.
    Outer,
}

impl Side {
    pub fn name(self) -> &'static str {
        match self {
            Side::Inner => "inner",
            Side::Outer => "outer",
        }
    }

    /// Map a layer coordinate to `ξ` at radius `r`.
    pub fn to_xi(self, coordinate: f64, r: f64) -> f64 {
        match self {
            Side::Inner => coordinate / r,
            Side::Outer => 1.0 - coordinate / r,
        }
    }
}

impl fmt::Display for Side {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Side {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "inner" => Ok(Side::Inner),
            "outer" => Ok(Side::Outer),
            _ => Err(Error::InvalidParameter(format!(
                "side must be inner or outer, got `{s}`"
            ))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PerturbationState {
    pub t: f64,
    pub alpha: Vec<C64>,
    pub vc1: Vec<C64>,
    pub vc2: Vec<C64>,
    pub vw1: Vec<C64>,
    pub vw2: Vec<C64>,
    pub r_tilde: C64,
}

impl PerturbationState {
    /// State with the given `α̃` and `R̃`; velocities are zero until solved.
    pub fn new(t: f64, alpha: Vec<C64>, r_tilde: C64) -> Self {
        let n = alpha.len();
        Self {
            t,
            alpha,
            vc1: vec![ZERO; n],
            vc2: vec![ZERO; n],
            vw1: vec![ZERO; n],
            vw2: vec![ZERO; n],
            r_tilde,
        }
    }

    /// `α̃(ξ, 0) = sin(πξ)`, `R̃(0) = 0`.
    pub fn sine(grid: &Grid) -> Self {
        let alpha = grid
            .nodes()
            .iter()
            .map(|&x| C64::new((std::f64::consts::PI * x).sin(), 0.0))
            .collect();
        Self::new(0.0, alpha, ZERO)
    }

    pub fn zero(grid: &Grid) -> Self {
        Self::new(0.0, vec![ZERO; grid.len()], ZERO)
    }

    pub fn field(&self, field: Field) -> &[C64] {
        match field {
            Field::Alpha => &self.alpha,
            Field::Vc1 => &self.vc1,
            Field::Vc2 => &self.vc2,
            Field::Vw1 => &self.vw1,
            Field::Vw2 => &self.vw2,
        }
    }

    pub fn scaled(&self, c: C64) -> Self {
        let s = |v: &[C64]| v.iter().map(|z| z * c).collect();
        Self {
            t: self.t,
            alpha: s(&self.alpha),
            vc1: s(&self.vc1),
            vc2: s(&self.vc2),
            vw1: s(&self.vw1),
            vw2: s(&self.vw2),
            r_tilde: self.r_tilde * c,
        }
    }

    pub fn conj(&self) -> Self {
        let s = |v: &[C64]| v.iter().map(|z| z.conj()).collect();
        Self {
            t: self.t,
            alpha: s(&self.alpha),
            vc1: s(&self.vc1),
            vc2: s(&self.vc2),
            vw1: s(&self.vw1),
            vw2: s(&self.vw2),
            r_tilde: self.r_tilde.conj(),
        }
    }

    /// Largest modulus over every stored field and `R̃`.
    pub fn max_modulus(&self) -> f64 {
        Field::ALL
            .iter()
            .flat_map(|&f| self.field(f).iter())
            .map(|z| z.norm())
            .fold(self.r_tilde.norm(), f64::max)
    }
}

/// Right-hand side of the cell velocity BVP, written against the continuous
/// operator
///
/// ```text
/// (μ̂/R²) v1'' + ((λ_c+μ)/R) iκ v2' - μκ² v1            = interior1
/// (μα_h/R²) v2'' + (μ+λ_c)(α_h iκ/R) v1' - α_h κ² μ̂ v2 = interior2
/// v1(0), v2(0)                                         = inner
/// (μ̂/R) v1'(1) + λ_c iκ v2(1),  iκ v1(1) + v2'(1)/R     = outer
/// ```
///
/// Interior vectors have one entry per node; the end entries are ignored.
#[derive(Debug, Clone, PartialEq)]
pub struct CellForcing {
    pub interior1: Vec<C64>,
    pub interior2: Vec<C64>,
    pub inner: [C64; 2],
    pub outer: [C64; 2],
}

impl CellForcing {
    /// Forcing generated by `(α̃, R̃)` in the linearised system.
    pub fn from_state(lin: &Linearization, grid: &Grid, alpha: &[C64], r_tilde: C64, t: f64) -> Self {
        let r = lin.r_star(t);
        let ik = C64::new(0.0, lin.kappa);
        let da = gradient(grid.h(), alpha);
        let interior1 = da.iter().map(|d| d * (lin.dsigma / r)).collect();
        let interior2 = alpha.iter().map(|a| -a * ik * lin.coupling).collect();
        let n = grid.cells();
        Self {
            interior1,
            interior2,
            inner: [ZERO; 2],
            outer: [alpha[n] * lin.dsigma, -ik * 2.0 * lin.lambda2 * r_tilde],
        }
    }
}

/// Second-order derivative on the uniform grid, one-sided at the ends.
pub fn gradient(h: f64, f: &[C64]) -> Vec<C64> {
    let n = f.len() - 1;
    let mut d = vec![ZERO; n + 1];
    for j in 1..n {
        d[j] = (f[j + 1] - f[j - 1]) / (2.0 * h);
    }
    d[0] = (-3.0 * f[0] + 4.0 * f[1] - f[2]) / (2.0 * h);
    d[n] = (3.0 * f[n] - 4.0 * f[n - 1] + f[n - 2]) / (2.0 * h);
    d
}

fn cell_matrix(lin: &Linearization, grid: &Grid, r: f64) -> BandMatrix {
    let n = grid.cells();
    let h = grid.h();
    let ik = C64::new(0.0, lin.kappa);
    let k2 = lin.kappa * lin.kappa;
    let one = C64::new(1.0, 0.0);
    let mut a = BandMatrix::zeros(2 * (n + 1), 4, 3);
    let v1 = |j: usize| 2 * j;
    let v2 = |j: usize| 2 * j + 1;

    a.add(0, v1(0), one);
    a.add(1, v2(0), one);

    // interior rows carry a factor h²
    let d1 = C64::new(lin.mu_hat / (r * r), 0.0);
    let c1 = ik * ((lin.lambda_c + lin.mu_c) / r * h / 2.0);
    let d2 = C64::new(lin.mu_c * lin.alpha_h / (r * r), 0.0);
    let c2 = ik * ((lin.mu_c + lin.lambda_c) * lin.alpha_h / r * h / 2.0);
    for j in 1..n {
        let p = v1(j);
        a.add(p, v1(j - 1), d1);
        a.add(p, v1(j), -2.0 * d1 - lin.mu_c * k2 * h * h);
        a.add(p, v1(j + 1), d1);
        a.add(p, v2(j - 1), -c1);
        a.add(p, v2(j + 1), c1);

        let q = v2(j);
        a.add(q, v2(j - 1), d2);
        a.add(q, v2(j), -2.0 * d2 - lin.alpha_h * k2 * lin.mu_hat * h * h);
        a.add(q, v2(j + 1), d2);
        a.add(q, v1(j - 1), -c2);
        a.add(q, v1(j + 1), c2);
    }

    // stress rows carry a factor h
    let s = lin.mu_hat / r / 2.0;
    let p = v1(n);
    a.add(p, v1(n), C64::new(3.0 * s, 0.0));
    a.add(p, v1(n - 1), C64::new(-4.0 * s, 0.0));
    a.add(p, v1(n - 2), C64::new(s, 0.0));
    a.add(p, v2(n), ik * (lin.lambda_c * h));
    let q = v2(n);
    let s = 1.0 / r / 2.0;
    a.add(q, v1(n), ik * h);
    a.add(q, v2(n), C64::new(3.0 * s, 0.0));
    a.add(q, v2(n - 1), C64::new(-4.0 * s, 0.0));
    a.add(q, v2(n - 2), C64::new(s, 0.0));
    a
}

fn cell_rhs(grid: &Grid, forcing: &CellForcing) -> Vec<C64> {
    let n = grid.cells();
    let h = grid.h();
    let mut b = vec![ZERO; 2 * (n + 1)];
    b[0] = forcing.inner[0];
    b[1] = forcing.inner[1];
    for j in 1..n {
        b[2 * j] = forcing.interior1[j] * (h * h);
        b[2 * j + 1] = forcing.interior2[j] * (h * h);
    }
    b[2 * n] = forcing.outer[0] * h;
    b[2 * n + 1] = forcing.outer[1] * h;
    b
}

fn deinterleave(x: &[C64]) -> (Vec<C64>, Vec<C64>) {
    (
        x.iter().step_by(2).copied().collect(),
        x.iter().skip(1).step_by(2).copied().collect(),
    )
}

/// Factorised cell operator at radius `R_*(t)`.
pub fn factor_cell_operator(lin: &Linearization, grid: &Grid, t: f64) -> Result<BandLu> {
    cell_matrix(lin, grid, lin.r_star(t)).factor()
}

pub fn solve_cell_with_forcing(
    lin: &Linearization,
    grid: &Grid,
    t: f64,
    forcing: &CellForcing,
) -> Result<(Vec<C64>, Vec<C64>)> {
    let lu = factor_cell_operator(lin, grid, t)?;
    Ok(deinterleave(&lu.solve(&cell_rhs(grid, forcing))))
}

pub fn solve_cell_velocities(
    lin: &Linearization,
    grid: &Grid,
    alpha: &[C64],
    r_tilde: C64,
    t: f64,
) -> Result<(Vec<C64>, Vec<C64>)> {
    let forcing = CellForcing::from_state(lin, grid, alpha, r_tilde, t);
    solve_cell_with_forcing(lin, grid, t, &forcing)
}

/// Water velocities from the mixture divergence equation and the transverse
/// relative-velocity relation, discretised by the box scheme on each cell.
pub fn solve_water_velocities(
    lin: &Linearization,
    grid: &Grid,
    alpha: &[C64],
    vc1: &[C64],
    vc2: &[C64],
    r_tilde: C64,
    t: f64,
) -> Result<(Vec<C64>, Vec<C64>)> {
    let n = grid.cells();
    let h = grid.h();
    let r = lin.r_star(t);
    let ah = lin.alpha_h;
    let u = 1.0 - ah;
    let l2 = lin.lambda2;
    let ik = C64::new(0.0, lin.kappa);
    let one = C64::new(1.0, 0.0);
    let half = C64::new(0.5, 0.0);
    let xi = grid.nodes();

    let mut a = BandMatrix::zeros(2 * (n + 1), 2, 2);
    let mut b = vec![ZERO; 2 * (n + 1)];
    a.add(0, 0, one);
    let bridge = ik * (r * h) * half;
    for j in 0..n {
        let (w1a, w2a, w1b, w2b) = (2 * j, 2 * j + 1, 2 * j + 2, 2 * j + 3);
        let xm = 0.5 * (xi[j] + xi[j + 1]);
        let am = (alpha[j] + alpha[j + 1]) * 0.5;
        let dam = (alpha[j + 1] - alpha[j]) / h;
        let v1m = (vc1[j] + vc1[j + 1]) * 0.5;
        let v2m = (vc2[j] + vc2[j + 1]) * 0.5;
        let dv1 = (vc1[j + 1] - vc1[j]) / h;

        // mixture divergence, scaled by hR/(1-α_h)
        let row = 2 * j + 1;
        a.add(row, w1a, -one);
        a.add(row, w1b, one);
        a.add(row, w2a, bridge);
        a.add(row, w2b, bridge);
        let src = (am + dam * xm) * (l2 / u) + dv1 * (ah / r) + v2m * ik * ah;
        b[row] = -src * (h * r / u);

        // transverse relation, scaled by R²h/α_h
        let row = 2 * j + 2;
        a.add(row, w2a, -one);
        a.add(row, w2b, one);
        a.add(row, w1a, -bridge);
        a.add(row, w1b, -bridge);
        b[row] = (vc2[j + 1] - vc2[j]) - v1m * ik * (r * h) - am * ik * (l2 * xm * r * r * h / (u * ah));
    }
    let last = 2 * n + 1;
    a.add(last, last, one);
    b[last] = ik * (l2 * r / u) * r_tilde + vc2[n];
    let lu = a.factor()?;
    Ok(deinterleave(&lu.solve(&b)))
}

/// Residuals of the six boundary conditions, evaluated with one-sided
/// second-order differences.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BoundaryResiduals {
    /// `v1(0)`, `v2(0)`, `w1(0)`
    pub inner: [f64; 3],
    /// Normal stress, tangential stress and the water slip condition at `ξ = 1`.
    pub outer: [f64; 3],
}

impl BoundaryResiduals {
    pub fn max(&self) -> f64 {
        self.inner.iter().chain(&self.outer).copied().fold(0.0, f64::max)
    }
}

pub fn boundary_residuals(lin: &Linearization, grid: &Grid, s: &PerturbationState) -> BoundaryResiduals {
    let n = grid.cells();
    let h = grid.h();
    let r = lin.r_star(s.t);
    let ik = C64::new(0.0, lin.kappa);
    let end = |f: &[C64]| (3.0 * f[n] - 4.0 * f[n - 1] + f[n - 2]) / (2.0 * h);
    let normal = -s.alpha[n] * lin.dsigma + end(&s.vc1) * (lin.mu_hat / r) + ik * lin.lambda_c * s.vc2[n];
    let tangential = ik * (s.vc1[n] + 2.0 * lin.lambda2 * s.r_tilde) + end(&s.vc2) / r;
    let slip = s.vw2[n] - ik * (lin.lambda2 * r / (1.0 - lin.alpha_h)) * s.r_tilde - s.vc2[n];
    BoundaryResiduals {
        inner: [s.vc1[0].norm(), s.vc2[0].norm(), s.vw1[0].norm()],
        outer: [normal.norm(), tangential.norm(), slip.norm()],
    }
}

/// Largest nodal residual of the mixture divergence equation, with centred
/// differences at interior nodes.
pub fn mixture_residual(lin: &Linearization, grid: &Grid, s: &PerturbationState) -> f64 {
    let r = lin.r_star(s.t);
    let ah = lin.alpha_h;
    let u = 1.0 - ah;
    let ik = C64::new(0.0, lin.kappa);
    let h = grid.h();
    let da = gradient(h, &s.alpha);
    let dv = gradient(h, &s.vc1);
    let dw = gradient(h, &s.vw1);
    (1..grid.cells())
        .map(|j| {
            let xi = grid.nodes()[j];
            let res = (s.alpha[j] + da[j] * xi) * (lin.lambda2 / u)
                + dv[j] * (ah / r)
                + dw[j] * (u / r)
                + ik * ah * s.vc2[j]
                + ik * u * s.vw2[j];
            res.norm()
        })
        .fold(0.0, f64::max)
}

/// Integrator for one wavenumber. Factorisations of the cell operator depend
/// only on `t` and are cached across stages and steps.
pub struct Simulator<'a> {
    lin: &'a Linearization,
    grid: &'a Grid,
    cache: Vec<(u64, BandLu)>,
}

impl<'a> Simulator<'a> {
    pub fn new(lin: &'a Linearization, grid: &'a Grid) -> Self {
        Self {
            lin,
            grid,
            cache: Vec::with_capacity(4),
        }
    }

    fn lu(&mut self, t: f64) -> Result<&BandLu> {
        let key = t.to_bits();
        if let Some(i) = self.cache.iter().position(|(k, _)| *k == key) {
            return Ok(&self.cache[i].1);
        }
        let lu = factor_cell_operator(self.lin, self.grid, t)?;
        if self.cache.len() == 3 {
            self.cache.remove(0);
        }
        self.cache.push((key, lu));
        Ok(&self.cache.last().unwrap().1)
    }

    pub fn cell_velocities(&mut self, t: f64, alpha: &[C64], r_tilde: C64) -> Result<(Vec<C64>, Vec<C64>)> {
        let forcing = CellForcing::from_state(self.lin, self.grid, alpha, r_tilde, t);
        let rhs = cell_rhs(self.grid, &forcing);
        let lu = self.lu(t)?;
        Ok(deinterleave(&lu.solve(&rhs)))
    }

    /// Time derivative of `(α̃, R̃)`.
    pub fn rhs(&mut self, t: f64, alpha: &[C64], r_tilde: C64) -> Result<(Vec<C64>, C64)> {
        let lin = self.lin;
        let (v1, v2) = self.cell_velocities(t, alpha, r_tilde)?;
        let dv1 = gradient(self.grid.h(), &v1);
        let r = lin.r_star(t);
        let ik = C64::new(0.0, lin.kappa);
        let growth = lin.dsc - lin.lambda2;
        let da = alpha
            .iter()
            .zip(&dv1)
            .zip(&v2)
            .map(|((a, d), w)| a * growth - d * (lin.alpha_h / r) - ik * lin.alpha_h * w)
            .collect();
        let dr = r_tilde * lin.lambda2 + v1[self.grid.cells()];
        Ok((da, dr))
    }

    /// One RK4 step of length `dt` from `(t, α̃, R̃)`.
    pub fn advance(&mut self, t: f64, alpha: &[C64], r_tilde: C64, dt: f64) -> Result<(Vec<C64>, C64)> {
        let axpy = |x: &[C64], k: &[C64], s: f64| -> Vec<C64> { x.iter().zip(k).map(|(a, b)| a + b * s).collect() };
        let th = t + 0.5 * dt;
        let t1 = t + dt;
        let (k1, q1) = self.rhs(t, alpha, r_tilde)?;
        let (k2, q2) = self.rhs(th, &axpy(alpha, &k1, 0.5 * dt), r_tilde + q1 * (0.5 * dt))?;
        let (k3, q3) = self.rhs(th, &axpy(alpha, &k2, 0.5 * dt), r_tilde + q2 * (0.5 * dt))?;
        let (k4, q4) = self.rhs(t1, &axpy(alpha, &k3, dt), r_tilde + q3 * dt)?;
        let w = dt / 6.0;
        let next = (0..alpha.len())
            .map(|j| alpha[j] + (k1[j] + 2.0 * k2[j] + 2.0 * k3[j] + k4[j]) * w)
            .collect();
        Ok((next, r_tilde + (q1 + 2.0 * q2 + 2.0 * q3 + q4) * w))
    }

    /// Full state at `t` with every velocity solved.
    pub fn complete(&mut self, t: f64, alpha: Vec<C64>, r_tilde: C64) -> Result<PerturbationState> {
        let (vc1, vc2) = self.cell_velocities(t, &alpha, r_tilde)?;
        let (vw1, vw2) = solve_water_velocities(self.lin, self.grid, &alpha, &vc1, &vc2, r_tilde, t)?;
        Ok(PerturbationState {
            t,
            alpha,
            vc1,
            vc2,
            vw1,
            vw2,
            r_tilde,
        })
    }
}

/// One RK4 step; the returned state has all velocities solved at `t + dt`.
pub fn step(lin: &Linearization, grid: &Grid, state: &PerturbationState, dt: f64) -> Result<PerturbationState> {
    if !(dt > 0.0) {
        return Err(Error::InvalidParameter(format!("dt must be positive, got {dt}")));
    }
    check_len(grid, state)?;
    let mut sim = Simulator::new(lin, grid);
    let (alpha, r_tilde) = sim.advance(state.t, &state.alpha, state.r_tilde, dt)?;
    sim.complete(state.t + dt, alpha, r_tilde)
}

fn check_len(grid: &Grid, state: &PerturbationState) -> Result<()> {
    if state.alpha.len() != grid.len() {
        return Err(Error::InvalidParameter(format!(
            "state has {} nodes, grid has {}",
            state.alpha.len(),
            grid.len()
        )));
    }
    Ok(())
}

/// Default step `min(0.01, h/(4 max(1, λ₂)))`.
pub fn default_dt(grid: &Grid, lambda2: f64) -> f64 {
    0.01f64.min(0.25 * grid.h() / lambda2.max(1.0))
}

#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub snapshots: Vec<PerturbationState>,
    /// Time at which the fields dropped below [`UNDERFLOW`] and were zeroed.
    pub frozen_at: Option<f64>,
}

impl Trajectory {
    pub fn times(&self) -> Vec<f64> {
        self.snapshots.iter().map(|s| s.t).collect()
    }

    /// Time series of one field at node `j`.
    pub fn series(&self, field: Field, j: usize) -> Vec<(f64, C64)> {
        self.snapshots.iter().map(|s| (s.t, s.field(field)[j])).collect()
    }

    pub fn r_tilde_series(&self) -> Vec<(f64, C64)> {
        self.snapshots.iter().map(|s| (s.t, s.r_tilde)).collect()
    }
}

/// Integrate from `initial` to `t_end`, recording full states at each of the
/// ascending `output_times`. Steps are shortened to land on output times.
/// Velocities in `initial` are ignored and recomputed from `α̃`, `R̃`.
pub fn simulate(
    lin: &Linearization,
    grid: &Grid,
    initial: &PerturbationState,
    t_end: f64,
    dt: f64,
    output_times: &[f64],
) -> Result<Trajectory> {
    check_len(grid, initial)?;
    let t0 = initial.t;
    if !(t_end > t0) {
        return Err(Error::InvalidParameter(format!(
            "t_end = {t_end} must exceed the start time {t0}"
        )));
    }
    if !(dt > 0.0) {
        return Err(Error::InvalidParameter(format!("dt must be positive, got {dt}")));
    }
    if output_times.windows(2).any(|w| !(w[0] < w[1])) {
        return Err(Error::InvalidParameter(
            "output times must be strictly ascending".into(),
        ));
    }
    if let Some(&bad) = output_times.iter().find(|&&s| s < t0 || s > t_end) {
        return Err(Error::InvalidParameter(format!(
            "output time {bad} outside [{t0}, {t_end}]"
        )));
    }

    let mut sim = Simulator::new(lin, grid);
    let mut t = t0;
    let mut alpha = initial.alpha.clone();
    let mut r_tilde = initial.r_tilde;
    let mut frozen_at = None;
    let mut snapshots = Vec::with_capacity(output_times.len());
    for &target in output_times {
        while t < target {
            let remaining = target - t;
            let (h, next_t) = if remaining <= dt * (1.0 + 1e-9) {
                (remaining, target)
            } else {
                (dt, t + dt)
            };
            if frozen_at.is_none() {
                let (a, r) = sim.advance(t, &alpha, r_tilde, h)?;
                alpha = a;
                r_tilde = r;
                let peak = alpha.iter().map(|z| z.norm()).fold(r_tilde.norm(), f64::max);
                if peak < UNDERFLOW && peak > 0.0 {
                    alpha.iter_mut().for_each(|z| *z = ZERO);
                    r_tilde = ZERO;
                    frozen_at = Some(next_t);
                }
            }
            t = next_t;
        }
        snapshots.push(sim.complete(t, alpha.clone(), r_tilde)?);
    }
    Ok(Trajectory { snapshots, frozen_at })
}

/// Initial data with the growing boundary mode filtered out.
#[derive(Debug, Clone, PartialEq)]
pub struct ModeFilter {
    pub initial: PerturbationState,
    /// Amount added to `R̃(0)`.
    pub shift: C64,
    /// Growth rate of `|R̃|` over `[t_probe/2, t_probe]` for unit `R̃(0)` and
    /// zero `α̃(0)`, which the boundary mode dominates.
    pub mode_rate: f64,
}

/// Shift `R̃(0)` so that `R̃(t_probe)` vanishes. The boundary-localised mode
/// excited through the radius grows faster than every other mode, so by
/// linearity this removes its amplitude up to `e^{-(s - s')t_probe}`, where
/// `s'` is the next rate.
pub fn filter_boundary_mode(
    lin: &Linearization,
    grid: &Grid,
    initial: &PerturbationState,
    t_probe: f64,
    dt: f64,
) -> Result<ModeFilter> {
    let t0 = initial.t;
    let half = t0 + 0.5 * (t_probe - t0);
    let base = simulate(lin, grid, initial, t_probe, dt, &[t_probe])?;
    let unit = PerturbationState::new(t0, vec![ZERO; grid.len()], C64::new(1.0, 0.0));
    let probe = simulate(lin, grid, &unit, t_probe, dt, &[half, t_probe])?;
    let (r_half, r_end) = (probe.snapshots[0].r_tilde, probe.snapshots[1].r_tilde);
    if r_end.norm() == 0.0 {
        return Err(Error::Precondition("radius response vanished at the probe time".into()));
    }
    let shift = -base.snapshots[0].r_tilde / r_end;
    Ok(ModeFilter {
        initial: PerturbationState::new(t0, initial.alpha.clone(), initial.r_tilde + shift),
        shift,
        mode_rate: (r_end.norm() / r_half.norm()).ln() / (t_probe - half),
    })
}

/// Fields resampled at fixed layer coordinates across a trajectory.
#[derive(Debug, Clone, PartialEq)]
pub struct LayerSamples {
    pub side: Side,
    pub stations: Vec<f64>,
    pub times: Vec<f64>,
    /// `values[time][station][field index]`
    pub values: Vec<Vec<[C64; 5]>>,
}

impl LayerSamples {
    pub fn series(&self, field: Field, station: usize) -> Vec<(f64, C64)> {
        self.times
            .iter()
            .zip(&self.values)
            .map(|(&t, row)| (t, row[station][field.index()]))
            .collect()
    }
}

/// Four-point Lagrange interpolation of nodal data at `xi`.
pub fn interpolate_cubic(grid: &Grid, f: &[C64], xi: f64) -> C64 {
    let n = grid.cells();
    let h = grid.h();
    let cell = ((xi / h).floor() as isize).clamp(0, n as isize - 1) as usize;
    let start = cell.saturating_sub(1).min(n - 3);
    let nodes = &grid.nodes()[start..start + 4];
    let mut acc = ZERO;
    for i in 0..4 {
        let w: f64 = (0..4)
            .filter(|&k| k != i)
            .map(|k| (xi - nodes[k]) / (nodes[i] - nodes[k]))
            .product();
        acc += f[start + i] * w;
    }
    acc
}

pub fn sample_layer_coordinates(
    trajectory: &Trajectory,
    lin: &Linearization,
    grid: &Grid,
    side: Side,
    stations: &[f64],
) -> Result<LayerSamples> {
    if trajectory.snapshots.is_empty() {
        return Err(Error::InvalidParameter("trajectory has no snapshots".into()));
    }
    let mut values = Vec::with_capacity(trajectory.snapshots.len());
    for s in &trajectory.snapshots {
        let r = lin.r_star(s.t);
        let mut row = Vec::with_capacity(stations.len());
        for &c in stations {
            if !(0.0..=r).contains(&c) {
                return Err(Error::Domain {
                    what: "layer station",
                    value: c,
                    domain: "[0, R_*(t)]",
                });
            }
            let xi = side.to_xi(c, r);
            let mut v = [ZERO; 5];
            for f in Field::ALL {
                v[f.index()] = interpolate_cubic(grid, s.field(f), xi);
            }
            row.push(v);
        }
        values.push(row);
    }
    Ok(LayerSamples {
        side,
        stations: stations.to_vec(),
        times: trajectory.times(),
        values,
    })
}
