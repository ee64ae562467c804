//! Linking family `gamma(y, h) = (h * w_c)(. - y)` over `Q = B_R x [h1, h2]`,
//! its sampled maximum, and a saddle search on the mass sphere.
//!
//! The saddle search descends the reduced functional `J(u) = max_h F(h * u)`.
//! Dilations act exactly: `h * u` is the sample vector `e^{dh/2} u` on the
//! lattice shrunk by `e^{-h}`, so `F(h * u)` is a closed-form function of `h`
//! (see [`Fiber`]) and the Pohozaev scalar of the realized state `h* * u` is
//! the fiber derivative at the maximizer.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::functionals::{energy_f, pohozaev_residual, tangent_residual_norms, Fiber};
use crate::geometry::{barycenter, fiber_scale_regrid, DEFAULT_H_MAX};
use crate::grid::Field;
use crate::params::PhysParams;
use crate::potential::{Delta0, Potential};
use crate::spectral::{forward, frac_symbol, gagliardo_energy, inverse_real, l2_inner, l2_norm};

/// Sample counts for the linking box.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Sampling {
    /// Rings of `y` nodes between the center and `|y| = R`.
    pub rings: usize,
    /// Nodes on the outermost ring (inner ring `i` carries `i * angles / rings`).
    pub angles: usize,
    /// Nodes in `[h1, h2]`.
    pub h_nodes: usize,
}

impl Default for Sampling {
    fn default() -> Self {
        Self { rings: 6, angles: 24, h_nodes: 33 }
    }
}

impl Sampling {
    pub fn refined(self) -> Self {
        Self { rings: 2 * self.rings, angles: 2 * self.angles, h_nodes: 2 * self.h_nodes - 1 }
    }
}

/// `Q = B_R(0) x [h1, h2]` with its sampling and certified boundary maximum.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LinkingBox {
    pub r: f64,
    pub h1: f64,
    pub h2: f64,
    pub eps: f64,
    pub sampling: Sampling,
    /// Largest sampled value of `F(gamma)` over `dQ`.
    pub boundary_max: f64,
    /// Largest sampled value on the faces `h = h1` and `h = h2`.
    pub face_max: [f64; 2],
}

impl LinkingBox {
    /// Interior `y` nodes: the center plus concentric rings.
    pub fn y_nodes(&self, dim: usize) -> Vec<[f64; 2]> {
        y_nodes(self.r, self.sampling, dim, false)
    }

    /// `y` nodes on the sphere `|y| = R`.
    pub fn boundary_y_nodes(&self, dim: usize) -> Vec<[f64; 2]> {
        y_nodes(self.r, self.sampling, dim, true)
    }

    pub fn h_nodes(&self) -> Vec<f64> {
        h_nodes(self.h1, self.h2, self.sampling.h_nodes)
    }
}

fn y_nodes(r: f64, sampling: Sampling, dim: usize, boundary_only: bool) -> Vec<[f64; 2]> {
    let rings = sampling.rings.max(1);
    let first = if boundary_only { rings } else { 0 };
    let mut nodes = Vec::new();
    for i in first..=rings {
        let rad = r * i as f64 / rings as f64;
        if i == 0 {
            nodes.push([0.0, 0.0]);
            continue;
        }
        if dim == 1 {
            nodes.push([rad, 0.0]);
            nodes.push([-rad, 0.0]);
            continue;
        }
        let count = (sampling.angles * i / rings).max(4);
        for j in 0..count {
            let phi = 2.0 * std::f64::consts::PI * j as f64 / count as f64;
            nodes.push([rad * phi.cos(), rad * phi.sin()]);
        }
    }
    nodes
}

fn h_nodes(h1: f64, h2: f64, count: usize) -> Vec<f64> {
    let count = count.max(2);
    let mut nodes: Vec<f64> =
        (0..count).map(|i| h1 + (h2 - h1) * i as f64 / (count - 1) as f64).collect();
    if !nodes.contains(&0.0) {
        nodes.push(0.0);
        nodes.sort_by(f64::total_cmp);
    }
    nodes
}

/// Maximum of `h -> fiber.value_shifted(h, y)` over `[h1, h2]`: best node,
/// then golden-section refinement on the neighbouring interval.
fn max_over_h(fiber: &Fiber, y: [f64; 2], hs: &[f64]) -> (f64, f64) {
    let values: Vec<f64> = hs.iter().map(|&h| fiber.value_shifted(h, y)).collect();
    let (mut best, mut arg) = (f64::NEG_INFINITY, 0);
    for (i, &v) in values.iter().enumerate() {
        if v > best {
            best = v;
            arg = i;
        }
    }
    let lo = hs[arg.saturating_sub(1)];
    let hi = hs[(arg + 1).min(hs.len() - 1)];
    let (h, v) = golden_max(|h| fiber.value_shifted(h, y), lo, hi);
    if v > best {
        (v, h)
    } else {
        (best, hs[arg])
    }
}

fn golden_max(f: impl Fn(f64) -> f64, mut a: f64, mut b: f64) -> (f64, f64) {
    let g = (5f64.sqrt() - 1.0) / 2.0;
    let mut x1 = b - g * (b - a);
    let mut x2 = a + g * (b - a);
    let mut f1 = f(x1);
    let mut f2 = f(x2);
    for _ in 0..60 {
        if (b - a).abs() < 1e-7 {
            break;
        }
        if f1 > f2 {
            b = x2;
            x2 = x1;
            f2 = f1;
            x1 = b - g * (b - a);
            f1 = f(x1);
        } else {
            a = x1;
            x1 = x2;
            f1 = f2;
            x2 = a + g * (b - a);
            f2 = f(x2);
        }
    }
    if f1 > f2 {
        (x1, f1)
    } else {
        (x2, f2)
    }
}

fn boundary_scan(fiber: &Fiber, r: f64, h1: f64, h2: f64, sampling: Sampling, dim: usize) -> f64 {
    let hs = h_nodes(h1, h2, sampling.h_nodes);
    y_nodes(r, sampling, dim, true)
        .par_iter()
        .map(|&y| max_over_h(fiber, y, &hs).0)
        .reduce(|| f64::NEG_INFINITY, f64::max)
}

fn face_scan(fiber: &Fiber, r: f64, h: f64, sampling: Sampling, dim: usize) -> f64 {
    y_nodes(r, sampling, dim, false)
        .par_iter()
        .map(|&y| fiber.value_shifted(h, y))
        .reduce(|| f64::NEG_INFINITY, f64::max)
}

/// Builds `Q` so that `max_{dQ} F(gamma) < m_c + eps`.
///
/// `h2` makes `F(h2 * w_c(. - y)) < 0` for every `y` through the bound
/// `a >= a_*`; `h1` makes `e^{2 s h1} K(w_c) / 2 < 0.9 m_c`, which bounds `F`
/// on that face from above; `R` grows until the sampled maximum over
/// `|y| = R` is below `m_c + eps`.
pub fn choose_box(
    wc: &Field,
    a: &Potential,
    params: &PhysParams,
    m_c: f64,
    eps: f64,
    sampling: Sampling,
) -> Result<LinkingBox> {
    if !(eps > 0.0) {
        return Err(Error::InvalidParams(format!("eps = {eps} must be positive")));
    }
    if !(m_c > 0.0) {
        return Err(Error::InvalidParams(format!("m_c = {m_c} must be positive")));
    }
    let fiber = Fiber::new(wc, a, params)?;
    let (d, s, p) = (params.d(), params.s, params.p);
    let k = fiber.kinetic();
    let lp = fiber.lp_pow();
    let a_star = a.a_star();
    if !(a_star > 0.0) {
        return Err(Error::Condition(format!("a_* = {a_star} must be positive")));
    }
    let beta = (p - 2.0) * d / 2.0;
    // 0.5 e^{2sh} K = (a_* / p) e^{beta h} P at the crossing
    let crossing = (p * k / (2.0 * a_star * lp)).ln() / (beta - 2.0 * s);
    let h2 = crossing.max(0.0) + 0.25;
    let h1 = (1.8 * m_c / k).ln() / (2.0 * s) - 0.05;
    if !(h1 < 0.0 && h2 > 0.0) {
        return Err(Error::LinkingBox(format!("degenerate fiber bounds h1 = {h1}, h2 = {h2}")));
    }
    if h2 > DEFAULT_H_MAX || h1 < -DEFAULT_H_MAX {
        return Err(Error::LinkingBox(format!("fiber bounds [{h1}, {h2}] exceed h_max")));
    }

    let r_cap = 0.4 * wc.grid().half_width();
    let mut r = 0.5_f64.min(r_cap);
    let boundary = loop {
        let b = boundary_scan(&fiber, r, h1, h2, sampling, params.dim);
        if b < m_c + eps {
            break b;
        }
        if r >= r_cap {
            return Err(Error::LinkingBox(format!(
                "boundary maximum {b} still exceeds m_c + eps = {} at R = {r} = 0.4 L; use a larger grid",
                m_c + eps
            )));
        }
        r = (1.25 * r).min(r_cap);
    };
    let face_lo = face_scan(&fiber, r, h1, sampling, params.dim);
    let face_hi = face_scan(&fiber, r, h2, sampling, params.dim);
    if !(face_lo < 0.9 * m_c) || !(face_hi < 0.0) {
        return Err(Error::LinkingBox(format!(
            "face certification failed: F = {face_lo} on h1 (needs < 0.9 m_c), {face_hi} on h2 (needs < 0)"
        )));
    }
    Ok(LinkingBox {
        r,
        h1,
        h2,
        eps,
        sampling,
        boundary_max: boundary.max(face_lo).max(face_hi),
        face_max: [face_lo, face_hi],
    })
}

/// `F((h * w_c)(. - y))` on one boundary node of `Q`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BoundarySample {
    pub y: [f64; 2],
    pub h: f64,
    pub value: f64,
}

/// Values over the side `|y| = R` at every `h` node, ordered by `y` node then `h`.
pub fn boundary_samples(bx: &LinkingBox, wc: &Field, a: &Potential, params: &PhysParams) -> Result<Vec<BoundarySample>> {
    let fiber = Fiber::new(wc, a, params)?;
    let hs = bx.h_nodes();
    Ok(bx
        .boundary_y_nodes(params.dim)
        .par_iter()
        .flat_map_iter(|&y| {
            let fiber = &fiber;
            hs.iter().map(move |&h| BoundarySample { y, h, value: fiber.value_shifted(h, y) })
        })
        .collect())
}

/// Sampled maximum of `F(gamma(y, h))` over `Q` and its node.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FamilyMax {
    pub value: f64,
    pub y: [f64; 2],
    pub h: f64,
}

/// Max of `F((h * w_c)(. - y))` over the sampled box; an upper bound for the
/// minimax level. Errors if it does not exceed the boundary maximum.
pub fn family_max(bx: &LinkingBox, wc: &Field, a: &Potential, params: &PhysParams) -> Result<FamilyMax> {
    let fiber = Fiber::new(wc, a, params)?;
    let hs = bx.h_nodes();
    // ties go to the earlier node so the result does not depend on threading
    let (_, best) = bx
        .y_nodes(params.dim)
        .par_iter()
        .enumerate()
        .map(|(i, &y)| {
            let (value, h) = max_over_h(&fiber, y, &hs);
            (i, FamilyMax { value, y, h })
        })
        .reduce(
            || (usize::MAX, FamilyMax { value: f64::NEG_INFINITY, y: [0.0; 2], h: 0.0 }),
            |a, b| if b.1.value > a.1.value || (b.1.value == a.1.value && b.0 < a.0) { b } else { a },
        );
    if !(best.value > bx.boundary_max) {
        return Err(Error::LinkingBox(format!(
            "family maximum {} does not exceed the boundary maximum {}",
            best.value, bx.boundary_max
        )));
    }
    Ok(best)
}

/// Stationarity tolerance on `d/dh F(h * u)`, scaled by `max(1, s K(h * u))`.
pub const FIBER_TOL: f64 = 1e-10;

/// `h*` maximizing `h -> F(h * u)`.
pub fn fiber_maximize(u: &Field, a: &Potential, params: &PhysParams) -> Result<f64> {
    maximize_fiber(&Fiber::new(u, a, params)?, 0.0, DEFAULT_H_MAX)
}

/// Brackets the sign change of the fiber derivative outward from `start`,
/// then runs Illinois regula falsi (a safeguarded secant step) on it.
pub fn maximize_fiber(fiber: &Fiber, start: f64, h_max: f64) -> Result<f64> {
    let tol = |h: f64| FIBER_TOL * fiber.derivative_scale(h).max(1.0);
    let d0 = fiber.derivative(start);
    if !d0.is_finite() {
        return Err(Error::Diverged(format!("fiber derivative {d0} at h = {start}")));
    }
    if d0.abs() <= tol(start) {
        return Ok(start);
    }
    let dir = d0.signum();
    let mut a = (start, d0);
    let mut step = 0.05;
    let b = loop {
        let h = a.0 + dir * step;
        if h.abs() > h_max {
            return Err(Error::FiberUnbounded(format!(
                "derivative keeps sign {dir} from h = {start} up to |h| = {h_max}"
            )));
        }
        let dh = fiber.derivative(h);
        if dh.abs() <= tol(h) {
            return Ok(h);
        }
        if dh.signum() != dir {
            break (h, dh);
        }
        a = (h, dh);
        step *= 2.0;
    };
    let (mut a, mut b) = (a, b);
    let mut side = 0;
    for _ in 0..200 {
        let mut h = (a.0 * b.1 - b.0 * a.1) / (b.1 - a.1);
        if !h.is_finite() || h <= a.0.min(b.0) || h >= a.0.max(b.0) {
            h = 0.5 * (a.0 + b.0);
        }
        let dh = fiber.derivative(h);
        if dh.abs() <= tol(h) || (a.0 - b.0).abs() < 1e-15 {
            return Ok(h);
        }
        if dh.signum() == a.1.signum() {
            a = (h, dh);
            if side == -1 {
                b.1 /= 2.0;
            }
            side = -1;
        } else {
            b = (h, dh);
            if side == 1 {
                a.1 /= 2.0;
            }
            side = 1;
        }
    }
    Ok(0.5 * (a.0 + b.0))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SaddleOptions {
    /// Stop when the weighted tangent residual is at most `tol * c`.
    pub tol: f64,
    /// Required `|pohozaev| / (s K)` at convergence.
    pub pohozaev_tol: f64,
    pub max_iter: usize,
    /// Initial step; `None` selects `0.1 / (1 + |lambda_c|)`.
    pub tau0: Option<f64>,
    pub armijo_sigma: f64,
    pub armijo_shrink: f64,
    pub min_tau: f64,
    /// Replace `u` by `|u|` after every step.
    pub nonnegative: bool,
    pub h_max: f64,
    /// Return an error when the multiplier leaves `(-delta_0 / c^2, 0)`.
    pub enforce_windows: bool,
}

impl Default for SaddleOptions {
    fn default() -> Self {
        Self {
            tol: 1e-6,
            pohozaev_tol: 1e-6,
            max_iter: 5000,
            tau0: None,
            armijo_sigma: 1e-4,
            armijo_shrink: 0.5,
            min_tau: 1e-12,
            nonnegative: true,
            h_max: DEFAULT_H_MAX,
            enforce_windows: true,
        }
    }
}

/// Reference quantities the converged state is certified against.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SaddleContext {
    /// `m_c` of the limit problem at the same mass.
    pub m_c: f64,
    /// `lambda_c` of the limit problem, for the default step.
    pub lambda_c: f64,
    pub delta0: Option<Delta0>,
    pub boundary_max: Option<f64>,
    pub family_value: Option<f64>,
}

/// One row of the convergence history.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct IterRecord {
    pub iteration: usize,
    /// `J(u) = F(h* * u)`.
    pub reduced_value: f64,
    pub tangent_res: f64,
    pub pohozaev_res: f64,
    pub lambda: f64,
    pub h_star: f64,
    pub tau: f64,
}

/// Certified windows of a converged state.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Windows {
    /// `-delta_0 / c^2`, when `delta_0` is known.
    pub lambda_lower: Option<f64>,
    pub lambda_ok: bool,
    /// `m_c < energy < 2 m_c`.
    pub energy_ok: bool,
    /// Energy strictly above the sampled boundary maximum of `Q`.
    pub above_boundary: Option<bool>,
    /// Energy at most the sampled family maximum.
    pub below_family: Option<bool>,
}

impl Windows {
    pub fn all_ok(&self) -> bool {
        self.lambda_ok
            && self.energy_ok
            && self.above_boundary.unwrap_or(true)
            && self.below_family.unwrap_or(true)
    }
}

#[derive(Debug, Clone)]
pub struct BoundStateSolution {
    /// `h* * u` on its own (dilated) lattice.
    pub u: Field,
    /// Fiber parameter of the final realization.
    pub h_star: f64,
    pub c: f64,
    pub lambda: f64,
    pub energy: f64,
    /// Weighted tangent residual `||(1 + (-Delta)^s)^{-1/2} r||_2`.
    pub tangent_res: f64,
    pub tangent_res_l2: f64,
    pub pohozaev_res: f64,
    pub kinetic: f64,
    /// `None` when the lattice is too small for unit-ball averages.
    pub barycenter: Option<Vec<f64>>,
    pub iterations: usize,
    pub context: SaddleContext,
    pub windows: Windows,
    pub trajectory: Vec<IterRecord>,
}

/// `J(u)`, its maximizer and the `u`-frame data needed for a gradient.
struct Reduced<'a> {
    fiber: Fiber<'a>,
    h: f64,
    value: f64,
}

fn reduce<'a>(u: &Field, a: &'a Potential, params: &PhysParams, start: f64, h_max: f64) -> Result<Reduced<'a>> {
    let fiber = Fiber::new(u, a, params)?;
    let h = maximize_fiber(&fiber, start, h_max)?;
    let value = fiber.value(h);
    Ok(Reduced { fiber, h, value })
}

/// `u`-frame gradient of `J`: `e^{2sh} (-Delta)^s u - e^{(p-2)dh/2} a(e^{-h} y) |u|^{p-2} u`.
fn reduced_gradient(u: &Field, a: &Potential, params: &PhysParams, h: f64) -> Result<Field> {
    let (s, p, d) = (params.s, params.p, params.d());
    let gk = (2.0 * s * h).exp();
    let gp = ((p - 2.0) * d * h / 2.0).exp();
    let e = (-h).exp();
    let lap = crate::spectral::frac_laplacian(u, s)?;
    let r2 = u.grid().radius_squared();
    let values = lap
        .values()
        .iter()
        .zip(u.values())
        .zip(r2)
        .map(|((l, v), r2)| {
            let (av, _) = a.profile_r2(e * e * r2);
            gk * l - gp * av * v.abs().powf(p - 2.0) * v
        })
        .collect();
    Field::new(*u.grid(), values)
}

/// `(1 + e^{2sh} |k|^{2s})^{-1} r`.
fn precondition(r: &Field, s: f64, h: f64) -> Result<Field> {
    let grid = r.grid();
    let scale = (2.0 * s * h).exp();
    let spec: Vec<_> = forward(r)
        .into_iter()
        .zip(grid.k_squared())
        .map(|(z, k2)| z / (1.0 + scale * frac_symbol(k2, s)))
        .collect();
    inverse_real(grid, spec)
}

fn normalize(u: Field, c: f64) -> Result<Field> {
    let norm = l2_norm(&u);
    if !(norm > 0.0) {
        return Err(Error::ZeroField);
    }
    Ok(u.scaled(c / norm))
}

/// Preconditioned descent of `J` on the sphere `||u||_2 = c`, starting at `u0`,
/// with Armijo backtracking; the converged state is realized as `h* * u`.
pub fn saddle_solve(
    u0: &Field,
    a: &Potential,
    params: &PhysParams,
    context: SaddleContext,
    opts: &SaddleOptions,
) -> Result<BoundStateSolution> {
    let c = params.mass;
    let s = params.s;
    let mut u = normalize(if opts.nonnegative { u0.abs() } else { u0.clone() }, c)?;
    let mut tau = opts.tau0.unwrap_or(0.1 / (1.0 + context.lambda_c.abs()));
    let tau_cap = 1e3 * tau.max(1.0);
    let mut red = reduce(&u, a, params, 0.0, opts.h_max)?;
    let mut trajectory = Vec::new();

    for iter in 0..=opts.max_iter {
        let grad = reduced_gradient(&u, a, params, red.h)?;
        let lambda = l2_inner(&grad, &u) / (c * c);
        let r = grad.axpy(-lambda, &u);
        let weighted = crate::spectral::weighted_residual_norm(&r, s, (2.0 * s * red.h).exp());
        let pohozaev = red.fiber.derivative(red.h);
        let scale = red.fiber.derivative_scale(red.h);
        trajectory.push(IterRecord {
            iteration: iter,
            reduced_value: red.value,
            tangent_res: weighted,
            pohozaev_res: pohozaev,
            lambda,
            h_star: red.h,
            tau,
        });
        if weighted <= opts.tol * c && pohozaev.abs() <= opts.pohozaev_tol * scale {
            return finish(u, red.h, a, params, context, opts, iter, trajectory);
        }
        if iter == opts.max_iter {
            break;
        }

        let mut dir = precondition(&r, s, red.h)?;
        dir = dir.axpy(-l2_inner(&dir, &u) / (c * c), &u);
        let slope = l2_inner(&r, &dir);
        if !(slope > 0.0) {
            return Err(Error::Diverged(format!("non-descent direction at iteration {iter} (slope {slope})")));
        }
        loop {
            let mut trial = u.axpy(-tau, &dir);
            if opts.nonnegative {
                trial = trial.abs();
            }
            let trial = normalize(trial, c)?;
            match reduce(&trial, a, params, red.h, opts.h_max) {
                Ok(next) if next.value <= red.value - opts.armijo_sigma * tau * slope => {
                    u = trial;
                    red = next;
                    tau = (2.0 * tau).min(tau_cap);
                    break;
                }
                Ok(_) | Err(Error::FiberUnbounded(_)) => {
                    tau *= opts.armijo_shrink;
                    if tau < opts.min_tau {
                        return Err(Error::StepCollapse { iteration: iter, tau });
                    }
                }
                Err(e) => return Err(e),
            }
        }
    }
    let last = trajectory.last().map(|r| r.tangent_res).unwrap_or(f64::NAN);
    Err(Error::MaxIterations { iterations: opts.max_iter, residual: last })
}

#[allow(clippy::too_many_arguments)]
fn finish(
    u: Field,
    h: f64,
    a: &Potential,
    params: &PhysParams,
    context: SaddleContext,
    opts: &SaddleOptions,
    iterations: usize,
    trajectory: Vec<IterRecord>,
) -> Result<BoundStateSolution> {
    let v = fiber_scale_regrid(&u, h)?;
    let c = params.mass;
    let norms = tangent_residual_norms(&v, a, params)?;
    let energy = energy_f(&v, a, params)?.total;
    let pohozaev = pohozaev_residual(&v, a, params)?;
    let kinetic = gagliardo_energy(&v, params.s)?;
    let beta = barycenter(&v).ok();
    let windows = windows(norms.lambda, energy, c, &context);
    let sol = BoundStateSolution {
        u: v,
        h_star: h,
        c,
        lambda: norms.lambda,
        energy,
        tangent_res: norms.weighted,
        tangent_res_l2: norms.l2,
        pohozaev_res: pohozaev,
        kinetic,
        barycenter: beta,
        iterations,
        context,
        windows,
        trajectory,
    };
    if opts.enforce_windows && !sol.windows.all_ok() {
        return Err(Error::WindowViolation(sol.diagnostics()));
    }
    Ok(sol)
}

fn windows(lambda: f64, energy: f64, c: f64, ctx: &SaddleContext) -> Windows {
    let lower = ctx.delta0.as_ref().map(|d| -d.delta0 / (c * c));
    Windows {
        lambda_lower: lower,
        lambda_ok: lambda < 0.0 && lower.is_none_or(|lo| lambda > lo),
        energy_ok: energy > ctx.m_c && energy < 2.0 * ctx.m_c,
        above_boundary: ctx.boundary_max.map(|b| energy > b),
        below_family: ctx.family_value.map(|f| energy <= f * (1.0 + 1e-12)),
    }
}

impl BoundStateSolution {
    pub fn diagnostics(&self) -> String {
        format!(
            "lambda = {} (window lower {:?}), energy = {} (m_c = {}), boundary max {:?}, family max {:?}, \
             tangent residual {:.3e}, pohozaev {:.3e}, h* = {}, iterations {}",
            self.lambda,
            self.windows.lambda_lower,
            self.energy,
            self.context.m_c,
            self.context.boundary_max,
            self.context.family_value,
            self.tangent_res,
            self.pohozaev_res,
            self.h_star,
            self.iterations
        )
    }
}

/// Fresh recomputation of a solution's stored quantities.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolutionCheck {
    pub mass: f64,
    pub lambda: f64,
    pub energy: f64,
    pub pohozaev: f64,
    pub tangent_l2: f64,
    pub tangent_weighted: f64,
    /// `||(-Delta)^s u - lambda u - a |u|^{p-2} u||_2`.
    pub euler_lagrange_l2: f64,
    pub euler_lagrange_weighted: f64,
}

fn close(a: f64, b: f64, tol: f64) -> bool {
    (a - b).abs() <= tol * a.abs().max(b.abs()).max(1.0)
}

/// Recomputes every residual of `sol` from its field and compares with the
/// stored values to `1e-10`.
pub fn verify_solution(sol: &BoundStateSolution, a: &Potential, params: &PhysParams) -> Result<SolutionCheck> {
    let u = &sol.u;
    let mass = l2_norm(u);
    let norms = tangent_residual_norms(u, a, params)?;
    let energy = energy_f(u, a, params)?.total;
    let pohozaev = pohozaev_residual(u, a, params)?;
    let el = crate::functionals::gradient_f(u, a, params)?.axpy(-norms.lambda, u);
    let check = SolutionCheck {
        mass,
        lambda: norms.lambda,
        energy,
        pohozaev,
        tangent_l2: norms.l2,
        tangent_weighted: norms.weighted,
        euler_lagrange_l2: l2_norm(&el),
        euler_lagrange_weighted: crate::spectral::weighted_residual_norm(&el, params.s, 1.0),
    };
    let pairs = [
        ("mass", mass, sol.c, 1e-8),
        ("lambda", check.lambda, sol.lambda, 1e-10),
        ("energy", energy, sol.energy, 1e-10),
        ("pohozaev", pohozaev, sol.pohozaev_res, 1e-10),
        ("tangent residual", check.tangent_weighted, sol.tangent_res, 1e-10),
    ];
    for (name, fresh, stored, tol) in pairs {
        if !close(fresh, stored, tol) {
            return Err(Error::Corruption(format!("{name}: recomputed {fresh}, stored {stored}")));
        }
    }
    Ok(check)
}

/// `w_c` translated to the family maximizer `y*`, as a starting point.
pub fn initial_guess(wc: &Field, best: &FamilyMax) -> Result<Field> {
    let y = &best.y[..wc.grid().dim()];
    if y.iter().all(|&c| c == 0.0) {
        return Ok(wc.clone());
    }
    crate::geometry::translate(wc, y)
}
