//! Radial ground state of `(-Delta)^s w = -w + w^{p-1}` by spectral
//! renormalization, and its exact rescaling to any prescribed mass.
//!
//! On a periodic lattice the discrete ground state carries a Pohozaev defect
//! (box and resolution errors of the fractional symbol). With
//! [`GroundStateOptions::calibrate_scale`] the lattice half-width is treated
//! as an unknown and tuned until the defect vanishes, which makes the discrete
//! problem consistent with the exact fiber dilation used by the bound-state
//! solver.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::functionals::{energy_finf, pohozaev_residual};
use crate::grid::{Field, Grid};
use crate::params::PhysParams;
use crate::potential::Potential;
use crate::spectral::{forward, frac_symbol, gagliardo_energy, inverse_real, l2_norm, lp_power};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GroundStateOptions {
    /// Stop when `||(-Delta)^s w + w - w^{p-1}||_2 <= tol ||w||_2`.
    pub tol: f64,
    pub max_iter: usize,
    /// Retune the lattice half-width so that the Pohozaev defect vanishes.
    pub calibrate_scale: bool,
    /// Calibration target for `|pohozaev| / (s K)`.
    pub scale_tol: f64,
}

impl Default for GroundStateOptions {
    fn default() -> Self {
        Self { tol: 1e-10, max_iter: 5000, calibrate_scale: false, scale_tol: 1e-10 }
    }
}

/// Positive radial solution `w` of the limit equation.
#[derive(Debug, Clone)]
pub struct GroundState {
    pub w: Field,
    pub s: f64,
    pub p: f64,
    /// `c_0 = ||w||_2`.
    pub c0: f64,
    /// `m_{c_0} = F_inf(w)`.
    pub m_c0: f64,
    /// L2 residual of the limit equation.
    pub residual: f64,
    /// Iterations of the final solve.
    pub iterations: usize,
    /// Renormalization factors of the final solve, one per iteration.
    pub gammas: Vec<f64>,
    /// `pohozaev / (s K)` of the solution on the requested lattice.
    pub raw_pohozaev: f64,
    /// Final half-width over requested half-width (1 without calibration).
    pub scale: f64,
}

impl GroundState {
    /// Rebuilds the derived quantities of a stored solution `w`; the lattice
    /// is taken as given, so `scale` is 1.
    pub fn from_field(w: Field, s: f64, p: f64) -> Result<Self> {
        let c0 = l2_norm(&w);
        if !(c0 > 0.0) {
            return Err(Error::ZeroField);
        }
        let m_c0 = energy_finf(&w, &PhysParams::relaxed(w.grid().dim(), s, p, c0)?)?.total;
        let residual = limit_residual(&w, s, p)?;
        let raw_pohozaev = relative_pohozaev(&w, s, p)?;
        Ok(Self { w, s, p, c0, m_c0, residual, iterations: 0, gammas: Vec::new(), raw_pohozaev, scale: 1.0 })
    }

    pub fn params(&self) -> Result<PhysParams> {
        PhysParams::relaxed(self.w.grid().dim(), self.s, self.p, self.c0)
    }

    /// `pohozaev / (s K)` of `w`.
    pub fn relative_pohozaev(&self) -> Result<f64> {
        relative_pohozaev(&self.w, self.s, self.p)
    }

    /// Nonincreasing along the positive half of every axis, up to `tol`
    /// relative to the peak.
    pub fn is_radially_nonincreasing(&self, tol: f64) -> bool {
        let grid = self.w.grid();
        let n = grid.n();
        let v = self.w.values();
        let peak = self.w.max_abs();
        let along = |j: usize, axis: usize| -> f64 {
            match (grid.dim(), axis) {
                (1, _) => v[j],
                (_, 0) => v[j * n + n / 2],
                _ => v[(n / 2) * n + j],
            }
        };
        (0..grid.dim()).all(|axis| {
            (n / 2..n - 1).all(|j| along(j + 1, axis) <= along(j, axis) + tol * peak)
        })
    }
}

/// `||(-Delta)^s w + w - |w|^{p-2} w||_2`.
pub fn limit_residual(w: &Field, s: f64, p: f64) -> Result<f64> {
    let lap = crate::spectral::frac_laplacian(w, s)?;
    let r = lap.add(w).sub(&w.map(|v| v.abs().powf(p - 2.0) * v));
    Ok(l2_norm(&r))
}

fn relative_pohozaev(w: &Field, s: f64, p: f64) -> Result<f64> {
    let params = PhysParams::relaxed(w.grid().dim(), s, p, l2_norm(w).max(f64::MIN_POSITIVE))?;
    let poh = pohozaev_residual(w, &Potential::Constant { a0: 1.0 }, &params)?;
    Ok(poh / (s * gagliardo_energy(w, s)?))
}

struct Solve {
    w: Field,
    residual: f64,
    iterations: usize,
    gammas: Vec<f64>,
}

fn petviashvili(grid: &Grid, s: f64, p: f64, start: Option<&[f64]>, opts: &GroundStateOptions) -> Result<Solve> {
    let mut w = match start {
        Some(values) => Field::new(*grid, values.to_vec())?,
        None => {
            let width = grid.half_width() / 10.0;
            Field::from_fn(*grid, |x| {
                let r2: f64 = x.iter().map(|c| c * c).sum();
                (-r2 / (2.0 * width * width)).exp()
            })
        }
    };
    let symbol: Vec<f64> = grid.k_squared().into_iter().map(|k2| 1.0 + frac_symbol(k2, s)).collect();
    let rho = (p - 1.0) / (p - 2.0);
    let cell_ratio = grid.cell_volume() / grid.len() as f64;
    let mut gammas = Vec::new();

    for iter in 0..opts.max_iter {
        let nl = w.map(|v| v.max(0.0).powf(p - 1.0));
        let w_hat = forward(&w);
        let nl_hat = forward(&nl);
        let lin: f64 =
            w_hat.iter().zip(&symbol).map(|(z, sig)| sig * z.norm_sqr()).sum::<f64>() * cell_ratio;
        let nonlin = crate::spectral::l2_inner(&w, &nl);
        if !(nonlin > 0.0) {
            return Err(Error::Diverged(format!("iterate collapsed to zero at iteration {iter}")));
        }
        let gamma = lin / nonlin;
        if !(1e-6..=1e6).contains(&gamma) {
            return Err(Error::Diverged(format!("renormalization factor {gamma:.3e} at iteration {iter}")));
        }
        gammas.push(gamma);

        // residual of the current iterate: L w - N(w)
        let lw: Vec<_> = w_hat.iter().zip(&symbol).map(|(z, sig)| z * sig).collect();
        let lw = inverse_real(grid, lw)?;
        let residual = l2_norm(&lw.sub(&nl));
        if residual <= opts.tol * l2_norm(&w) && iter > 0 {
            return Ok(Solve { w, residual, iterations: iter, gammas });
        }

        let factor = gamma.powf(rho);
        let next: Vec<_> = nl_hat.iter().zip(&symbol).map(|(z, sig)| z * (factor / sig)).collect();
        w = inverse_real(grid, next)?.map(|v| v.max(0.0));
    }
    let residual = limit_residual(&w, s, p)?;
    Err(Error::MaxIterations { iterations: opts.max_iter, residual })
}

/// Largest admissible `|log|` of the calibrated scale factor.
const MAX_LOG_SCALE: f64 = 2.0;

/// Petviashvili iteration
/// `w_{n+1} = gamma_n^rho (1 + |k|^{2s})^{-1} (w_n^{p-1})^`,
/// `gamma_n = <w, (1 + (-Delta)^s) w> / <w, w^{p-1}>`, `rho = (p-1)/(p-2)`,
/// started from a unit Gaussian of width `L/10`.
pub fn solve_limit_equation(
    grid: &Grid,
    params: &PhysParams,
    opts: &GroundStateOptions,
) -> Result<GroundState> {
    if params.dim != grid.dim() {
        return Err(Error::DimensionMismatch("grid and parameters disagree on d".into()));
    }
    let (s, p) = (params.s, params.p);
    let mut sol = petviashvili(grid, s, p, None, opts)?;
    let raw = relative_pohozaev(&sol.w, s, p)?;
    let mut scale = 1.0;
    if opts.calibrate_scale && raw.abs() > opts.scale_tol {
        let (log_scale, calibrated) = calibrate(grid, s, p, raw, sol, opts)?;
        scale = log_scale.exp();
        sol = calibrated;
    }
    let c0 = l2_norm(&sol.w);
    let m_c0 = energy_finf(&sol.w, &PhysParams::relaxed(grid.dim(), s, p, c0)?)?.total;
    Ok(GroundState {
        c0,
        m_c0,
        residual: sol.residual,
        iterations: sol.iterations,
        gammas: sol.gammas,
        raw_pohozaev: raw,
        scale,
        s,
        p,
        w: sol.w,
    })
}

/// Root of `g(l) = pohozaev / (s K)` of the ground state on the lattice with
/// half-width `L e^l`: bracket outward from `l = 0`, then Illinois regula falsi.
/// Each solve is warm-started from the nearest solved lattice (same samples).
fn calibrate(grid: &Grid, s: f64, p: f64, g0: f64, sol0: Solve, opts: &GroundStateOptions) -> Result<(f64, Solve)> {
    let solve_at = |l: f64, start: &Field| -> Result<(f64, Solve)> {
        let g = grid.scaled(l.exp())?;
        let sol = petviashvili(&g, s, p, Some(start.values()), opts)?;
        Ok((relative_pohozaev(&sol.w, s, p)?, sol))
    };

    let mut lo = (0.0, g0, sol0);
    let mut step = 0.05;
    let mut dir = 0.0;
    let hi = loop {
        if step > MAX_LOG_SCALE {
            return Err(Error::Diverged(format!(
                "no lattice scale within e^(+-{MAX_LOG_SCALE}) cancels the Pohozaev defect {g0:.3e}"
            )));
        }
        let candidates: Vec<f64> = if dir == 0.0 { vec![step, -step] } else { vec![dir * step] };
        let mut found = None;
        let mut best: Option<(f64, f64, Solve)> = None;
        for l in candidates {
            let (g, sol) = solve_at(l, &lo.2.w)?;
            if g.signum() != lo.1.signum() {
                found = Some((l, g, sol));
                break;
            }
            if best.as_ref().is_none_or(|b| g.abs() < b.1.abs()) {
                best = Some((l, g, sol));
            }
        }
        if let Some(f) = found {
            break f;
        }
        let (l, g, sol) = best.expect("at least one candidate");
        if dir == 0.0 {
            dir = l.signum();
        }
        if g.abs() < lo.1.abs() {
            lo = (l, g, sol);
        }
        step *= 2.0;
    };
    if hi.1.abs() <= opts.scale_tol {
        return Ok((hi.0, hi.2));
    }

    let (mut a, mut b) = (lo, hi);
    let mut side = 0;
    for _ in 0..60 {
        let l = (a.0 * b.1 - b.0 * a.1) / (b.1 - a.1);
        let start = if (l - a.0).abs() < (l - b.0).abs() { &a.2.w } else { &b.2.w };
        let (g, sol) = solve_at(l, start)?;
        if g.abs() <= opts.scale_tol {
            return Ok((l, sol));
        }
        if g.signum() == a.1.signum() {
            a = (l, g, sol);
            if side == -1 {
                b.1 /= 2.0;
            }
            side = -1;
        } else {
            b = (l, g, sol);
            if side == 1 {
                a.1 /= 2.0;
            }
            side = 1;
        }
        if (a.0 - b.0).abs() < 1e-14 {
            break;
        }
    }
    Err(Error::Diverged(format!(
        "lattice-scale calibration stalled between log-scales {} and {}",
        a.0, b.0
    )))
}

/// `theta = (4d - 2p(d - 2s)) / (d(p-2) - 4s)`.
pub fn theta(params: &PhysParams) -> Result<f64> {
    let (d, s, p) = (params.d(), params.s, params.p);
    let denom = params.supercritical_gap();
    if denom <= 1e-12 {
        return Err(Error::InvalidParams(format!(
            "d(p-2) - 4s = {denom} <= 0: p is not mass-supercritical"
        )));
    }
    let numer = 4.0 * d - 2.0 * p * (d - 2.0 * s);
    if numer <= 0.0 {
        return Err(Error::InvalidParams(format!("theta numerator {numer} <= 0: p is not Sobolev-subcritical")));
    }
    Ok(numer / denom)
}

/// `lambda_c = -(c / c0)^{-theta - 2}`.
pub fn lambda_c(c: f64, c0: f64, theta: f64) -> Result<f64> {
    if !(c > 0.0 && c0 > 0.0) {
        return Err(Error::InvalidParams(format!("masses must be positive (c = {c}, c0 = {c0})")));
    }
    Ok(-(c / c0).powf(-theta - 2.0))
}

/// The ground state rescaled to mass `c`:
/// `w_c(x) = (-lambda_c)^{1/(p-2)} w((-lambda_c)^{1/(2s)} x)`.
#[derive(Debug, Clone)]
pub struct ScaledState {
    pub wc: Field,
    pub c: f64,
    pub lambda_c: f64,
    pub theta: f64,
    /// `m_c = F_inf(w_c)`.
    pub m_c: f64,
}

fn scaling_factors(gs: &GroundState, c: f64) -> Result<(f64, f64, f64, f64)> {
    let params = gs.params()?;
    let th = theta(&params)?;
    let lam = lambda_c(c, gs.c0, th)?;
    let amp = (-lam).powf(1.0 / (gs.p - 2.0));
    let dil = (-lam).powf(1.0 / (2.0 * gs.s));
    Ok((th, lam, amp, dil))
}

/// `w_c` sampled exactly: the samples of `w` times the amplitude, on the
/// lattice whose coordinates are those of `w` divided by `(-lambda_c)^{1/(2s)}`.
pub fn rescale_to_mass(gs: &GroundState, c: f64) -> Result<ScaledState> {
    let (th, lam, amp, dil) = scaling_factors(gs, c)?;
    let grid = gs.w.grid().scaled(1.0 / dil)?;
    let wc = Field::new(grid, gs.w.values().iter().map(|v| v * amp).collect())?;
    let params = PhysParams::relaxed(grid.dim(), gs.s, gs.p, c)?;
    let m_c = energy_finf(&wc, &params)?.total;
    Ok(ScaledState { wc, c, lambda_c: lam, theta: th, m_c })
}

/// `w_c` evaluated on a given grid through the trigonometric interpolant of `w`.
pub fn rescale_onto(gs: &GroundState, c: f64, target: &Grid) -> Result<ScaledState> {
    let (th, lam, amp, dil) = scaling_factors(gs, c)?;
    let src = gs.w.grid();
    if target.dim() != src.dim() {
        return Err(Error::DimensionMismatch("target grid dimension differs".into()));
    }
    let wc = crate::geometry::resample(&gs.w, target, dil)?.scaled(amp);
    let params = PhysParams::relaxed(target.dim(), gs.s, gs.p, c)?;
    let m_c = energy_finf(&wc, &params)?.total;
    Ok(ScaledState { wc, c, lambda_c: lam, theta: th, m_c })
}

/// One row of the mass-energy curve.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MassEnergyPoint {
    pub c: f64,
    pub m_c: f64,
    pub lambda_c: f64,
}

/// `(c, m_c, lambda_c)` for every `c`, checking that `m_c` strictly decreases
/// and `lambda_c` strictly increases with `c`.
pub fn mass_energy_curve(gs: &GroundState, masses: &[f64]) -> Result<Vec<MassEnergyPoint>> {
    let mut rows = masses
        .iter()
        .map(|&c| {
            let st = rescale_to_mass(gs, c)?;
            Ok(MassEnergyPoint { c, m_c: st.m_c, lambda_c: st.lambda_c })
        })
        .collect::<Result<Vec<_>>>()?;
    rows.sort_by(|a, b| a.c.total_cmp(&b.c));
    for pair in rows.windows(2) {
        if pair[1].c > pair[0].c && !(pair[1].m_c < pair[0].m_c && pair[1].lambda_c > pair[0].lambda_c) {
            return Err(Error::Diverged(format!(
                "mass-energy curve not monotone between c = {} and c = {}",
                pair[0].c, pair[1].c
            )));
        }
    }
    Ok(rows)
}

/// Kinetic energy and `||w_c||_p^p` of a scaled state.
pub fn scaled_norms(st: &ScaledState, s: f64, p: f64) -> Result<(f64, f64)> {
    Ok((gagliardo_energy(&st.wc, s)?, lp_power(&st.wc, p)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::functionals::{multiplier, pohozaev_residual};
    use crate::potential::Potential;

    #[test]
    fn theta_arithmetic() {
        let p = PhysParams::new(2, 0.5, 3.5, 1.0).unwrap();
        assert!((theta(&p).unwrap() - 1.0).abs() < 1e-15);
        let p = PhysParams::new(1, 0.4, 4.0, 1.0).unwrap();
        assert!((theta(&p).unwrap() - 6.0).abs() < 1e-14);
        // p at the L2-critical exponent 2 + 4s/d
        let p = PhysParams::relaxed(2, 0.5, 3.0, 1.0).unwrap();
        assert!(theta(&p).is_err());
        let p = PhysParams::relaxed(2, 0.5, 3.0 + 1e-9, 1.0).unwrap();
        assert!(theta(&p).unwrap() > 1e8);
    }

    #[test]
    fn lambda_c_arithmetic() {
        assert_eq!(lambda_c(1.3, 1.3, 1.0).unwrap(), -1.0);
        assert!((lambda_c(2.0, 1.0, 1.0).unwrap() + 0.125).abs() < 1e-15);
        assert!((lambda_c(0.5, 1.0, 1.0).unwrap() + 8.0).abs() < 1e-14);
        assert!(lambda_c(0.0, 1.0, 1.0).is_err());
        assert!(lambda_c(1.0, -1.0, 1.0).is_err());
    }

    #[test]
    fn classical_soliton() {
        let grid = Grid::new(1, 1024, 40.0).unwrap();
        let params = PhysParams::relaxed(1, 1.0, 3.0, 1.0).unwrap();
        let gs = solve_limit_equation(&grid, &params, &GroundStateOptions::default()).unwrap();
        let exact = Field::from_fn(grid, |x| 1.5 / (x[0] / 2.0).cosh().powi(2));
        let err = gs.w.sub(&exact).max_abs() / exact.max_abs();
        assert!(err < 1e-8, "max-norm error {err}");
        assert!(gs.is_radially_nonincreasing(1e-12));
        let lam = multiplier(&gs.w, &Potential::Constant { a0: 1.0 }, &params).unwrap();
        assert!((lam + 1.0).abs() < 1e-6);
        assert!((gs.gammas.last().unwrap() - 1.0).abs() < 1e-8);
    }

    #[test]
    fn scaled_family_in_two_dimensions() {
        let grid = Grid::new(2, 64, 12.0).unwrap();
        let params = PhysParams::new(2, 0.7, 3.5, 1.0).unwrap();
        let gs = solve_limit_equation(&grid, &params, &GroundStateOptions::default()).unwrap();
        let one = Potential::Constant { a0: 1.0 };
        let th = theta(&params).unwrap();
        let base = params.with_mass(gs.c0).unwrap();
        let poh0 = pohozaev_residual(&gs.w, &one, &base).unwrap() / gagliardo_energy(&gs.w, 0.7).unwrap();
        for ratio in [0.5, 1.0, 2.0] {
            let st = rescale_to_mass(&gs, ratio * gs.c0).unwrap();
            assert!((l2_norm(&st.wc) / st.c - 1.0).abs() < 1e-12);
            let expect = ratio.powf(-th) * gs.m_c0;
            assert!((st.m_c - expect).abs() < 1e-10 * expect.abs());
            let lam = multiplier(&st.wc, &one, &params).unwrap();
            assert!((lam - st.lambda_c).abs() < 1e-6 * st.lambda_c.abs());
            let p = params.with_mass(st.c).unwrap();
            // the relative Pohozaev defect is invariant under exact rescaling
            let poh = pohozaev_residual(&st.wc, &one, &p).unwrap();
            let k = gagliardo_energy(&st.wc, p.s).unwrap();
            assert!((poh / k - poh0).abs() < 1e-10, "pohozaev {poh} vs K {k}");
        }
        let same = rescale_to_mass(&gs, gs.c0).unwrap();
        assert_eq!(same.lambda_c, -1.0);
        assert_eq!(same.wc.values(), gs.w.values());
    }

    #[test]
    fn interpolated_rescaling_agrees_with_exact() {
        let grid = Grid::new(1, 512, 30.0).unwrap();
        // mass-supercritical in one dimension needs p > 6
        let params = PhysParams::relaxed(1, 1.0, 6.5, 1.0).unwrap();
        let gs = solve_limit_equation(&grid, &params, &GroundStateOptions::default()).unwrap();
        let c = 0.98 * gs.c0;
        let exact = rescale_to_mass(&gs, c).unwrap();
        let interp = rescale_onto(&gs, c, &grid).unwrap();
        // the narrower profile is sampled more coarsely than on the exact lattice
        assert!((interp.m_c - exact.m_c).abs() < 1e-6 * exact.m_c.abs(), "{} vs {}", interp.m_c, exact.m_c);
        assert!((l2_norm(&interp.wc) - c).abs() < 1e-8 * c);
    }

    #[test]
    fn mass_energy_curve_is_monotone() {
        let grid = Grid::new(2, 64, 12.0).unwrap();
        let params = PhysParams::new(2, 0.5, 3.5, 1.0).unwrap();
        let gs = solve_limit_equation(&grid, &params, &GroundStateOptions::default()).unwrap();
        let masses: Vec<f64> = [0.5, 1.0, 2.0, 4.0].iter().map(|r| r * gs.c0).collect();
        let rows = mass_energy_curve(&gs, &masses).unwrap();
        assert!((rows[2].m_c / rows[1].m_c - 0.5).abs() < 1e-10);
        assert!(rows.windows(2).all(|w| w[1].m_c < w[0].m_c && w[1].lambda_c > w[0].lambda_c));
        assert!(rows.iter().all(|r| r.lambda_c < 0.0));
    }

    #[test]
    fn calibrated_scale_cancels_the_pohozaev_defect() {
        let grid = Grid::new(2, 64, 12.0).unwrap();
        let params = PhysParams::new(2, 0.5, 3.5, 1.0).unwrap();
        let opts = GroundStateOptions { calibrate_scale: true, ..Default::default() };
        let gs = solve_limit_equation(&grid, &params, &opts).unwrap();
        assert!(gs.raw_pohozaev.abs() > 1e-4, "raw defect {}", gs.raw_pohozaev);
        assert!(gs.relative_pohozaev().unwrap().abs() <= 1e-10);
        assert!((gs.w.grid().half_width() / 12.0 - gs.scale).abs() < 1e-12);
        // with both identities exact, m_{c0} = c0^2 for these exponents
        assert!((gs.m_c0 / (gs.c0 * gs.c0) - 1.0).abs() < 1e-6);
        let k = gagliardo_energy(&gs.w, 0.5).unwrap();
        assert!((k / gs.m_c0 - 6.0).abs() < 1e-6);
        assert!(gs.residual <= 1e-10 * gs.c0);
    }

    #[test]
    fn iteration_budget_is_enforced() {
        let grid = Grid::new(1, 256, 20.0).unwrap();
        let params = PhysParams::relaxed(1, 1.0, 3.0, 1.0).unwrap();
        let opts = GroundStateOptions { tol: 1e-14, max_iter: 3, ..Default::default() };
        assert!(matches!(
            solve_limit_equation(&grid, &params, &opts),
            Err(Error::MaxIterations { .. })
        ));
    }
}
