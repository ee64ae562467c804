//! Energy functionals, their L2 gradients, the constrained residual, the
//! Lagrange multiplier and the Pohozaev scalar.
//!
//! With `K(u) = ||(-Delta)^{s/2} u||^2`:
//!
//! * `F(u)        = K/2 - (1/p) int a |u|^p`
//! * `F_inf(u)    = K/2 - (1/p) int |u|^p`
//! * `F_lambda(u) = F(u) - (lambda/2) ||u||^2` (same for `F_inf`)
//!
//! The fiber functional `h -> F(h * u)` is evaluated by a change of variables
//! on the grid of `u`, so no resampling is involved:
//! `F(h * u) = e^{2sh} K/2 - (1/p) e^{(p-2)dh/2} int a(e^{-h} y) |u(y)|^p dy`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::Field;
use crate::params::PhysParams;
use crate::potential::Potential;
use crate::spectral::{frac_laplacian, gagliardo_energy, l2_inner, lp_power, weighted_residual_norm};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EnergyBreakdown {
    /// `K(u) / 2`.
    pub kinetic: f64,
    /// `(1/p) int a |u|^p`.
    pub potential_term: f64,
    /// `(lambda/2) ||u||^2`, zero for the unshifted functionals.
    pub mass_term: f64,
    pub total: f64,
}

impl EnergyBreakdown {
    fn new(kinetic: f64, potential_term: f64, mass_term: f64) -> Self {
        Self { kinetic, potential_term, mass_term, total: kinetic - potential_term - mass_term }
    }
}

/// `int a |u|^p` and `int W |u|^p` by the rectangle rule.
pub fn weighted_lp(u: &Field, a: &Potential, p: f64) -> (f64, f64) {
    let grid = u.grid();
    let mut ia = 0.0;
    let mut iw = 0.0;
    for (r2, v) in grid.radius_squared().into_iter().zip(u.values()) {
        let up = v.abs().powf(p);
        let (av, wv) = a.profile_r2(r2);
        ia += av * up;
        iw += wv * up;
    }
    (ia * grid.cell_volume(), iw * grid.cell_volume())
}

fn check_grid(u: &Field, params: &PhysParams) -> Result<()> {
    if u.grid().dim() != params.dim {
        return Err(Error::DimensionMismatch(format!(
            "field is {}-d, parameters are {}-d",
            u.grid().dim(),
            params.dim
        )));
    }
    Ok(())
}

pub fn energy_f(u: &Field, a: &Potential, params: &PhysParams) -> Result<EnergyBreakdown> {
    check_grid(u, params)?;
    let k = gagliardo_energy(u, params.s)?;
    let (ia, _) = weighted_lp(u, a, params.p);
    Ok(EnergyBreakdown::new(0.5 * k, ia / params.p, 0.0))
}

pub fn energy_finf(u: &Field, params: &PhysParams) -> Result<EnergyBreakdown> {
    check_grid(u, params)?;
    let k = gagliardo_energy(u, params.s)?;
    Ok(EnergyBreakdown::new(0.5 * k, lp_power(u, params.p) / params.p, 0.0))
}

pub fn energy_flambda(u: &Field, a: &Potential, lambda: f64, params: &PhysParams) -> Result<EnergyBreakdown> {
    let e = energy_f(u, a, params)?;
    Ok(EnergyBreakdown::new(e.kinetic, e.potential_term, 0.5 * lambda * lp_power(u, 2.0)))
}

pub fn energy_finf_lambda(u: &Field, lambda: f64, params: &PhysParams) -> Result<EnergyBreakdown> {
    let e = energy_finf(u, params)?;
    Ok(EnergyBreakdown::new(e.kinetic, e.potential_term, 0.5 * lambda * lp_power(u, 2.0)))
}

/// `|u|^{p-2} u` scaled pointwise by `weight`.
fn nonlinearity(u: &Field, weight: impl Fn(usize) -> f64, p: f64) -> Field {
    let values = u
        .values()
        .iter()
        .enumerate()
        .map(|(i, &v)| weight(i) * v.abs().powf(p - 2.0) * v)
        .collect();
    Field::from_raw(*u.grid(), values)
}

/// L2 representative of `F'(u)`: `(-Delta)^s u - a |u|^{p-2} u`.
pub fn gradient_f(u: &Field, a: &Potential, params: &PhysParams) -> Result<Field> {
    check_grid(u, params)?;
    let lap = frac_laplacian(u, params.s)?;
    let av = a.sample(u.grid());
    Ok(lap.sub(&nonlinearity(u, |i| av.values()[i], params.p)))
}

pub fn gradient_finf(u: &Field, params: &PhysParams) -> Result<Field> {
    gradient_f(u, &Potential::Constant { a0: 1.0 }, params)
}

pub fn gradient_flambda(u: &Field, a: &Potential, lambda: f64, params: &PhysParams) -> Result<Field> {
    Ok(gradient_f(u, a, params)?.axpy(-lambda, u))
}

pub fn gradient_finf_lambda(u: &Field, lambda: f64, params: &PhysParams) -> Result<Field> {
    Ok(gradient_finf(u, params)?.axpy(-lambda, u))
}

/// `lambda = <F'(u), u> / ||u||^2`.
pub fn multiplier(u: &Field, a: &Potential, params: &PhysParams) -> Result<f64> {
    let mass = lp_power(u, 2.0);
    if mass == 0.0 {
        return Err(Error::ZeroField);
    }
    Ok(l2_inner(&gradient_f(u, a, params)?, u) / mass)
}

/// Projection of `F'(u)` onto the tangent space of the sphere through `u`.
pub fn tangent_residual(u: &Field, a: &Potential, params: &PhysParams) -> Result<Field> {
    let mass = lp_power(u, 2.0);
    if mass == 0.0 {
        return Err(Error::ZeroField);
    }
    let g = gradient_f(u, a, params)?;
    let lambda = l2_inner(&g, u) / mass;
    Ok(g.axpy(-lambda, u))
}

/// Residual norms of a constrained critical point candidate.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ResidualNorms {
    pub lambda: f64,
    pub l2: f64,
    /// `||(1 + (-Delta)^s)^{-1/2} r||_2`.
    pub weighted: f64,
}

pub fn tangent_residual_norms(u: &Field, a: &Potential, params: &PhysParams) -> Result<ResidualNorms> {
    let lambda = multiplier(u, a, params)?;
    let r = tangent_residual(u, a, params)?;
    Ok(ResidualNorms {
        lambda,
        l2: lp_power(&r, 2.0).sqrt(),
        weighted: weighted_residual_norm(&r, params.s, 1.0),
    })
}

/// `s K - (d(p-2)/(2p)) int a|u|^p + (1/p) int W |u|^p`.
pub fn pohozaev_residual(u: &Field, a: &Potential, params: &PhysParams) -> Result<f64> {
    check_grid(u, params)?;
    let k = gagliardo_energy(u, params.s)?;
    let (ia, iw) = weighted_lp(u, a, params.p);
    Ok(params.s * k - params.pohozaev_coefficient() * ia + iw / params.p)
}

/// The fiber `h -> F((h * u)(. - y))` for a fixed base field, with the
/// kinetic energy and `|u|^p` weights precomputed.
#[derive(Debug, Clone)]
pub struct Fiber<'a> {
    potential: &'a Potential,
    params: PhysParams,
    kinetic: f64,
    points: Vec<[f64; 2]>,
    weights: Vec<f64>,
}

impl<'a> Fiber<'a> {
    pub fn new(u: &Field, potential: &'a Potential, params: &PhysParams) -> Result<Self> {
        check_grid(u, params)?;
        let kinetic = gagliardo_energy(u, params.s)?;
        let grid = u.grid();
        let cell = grid.cell_volume();
        let mut points = Vec::new();
        let mut weights = Vec::new();
        for (i, v) in u.values().iter().enumerate() {
            let w = v.abs().powf(params.p) * cell;
            if w > 0.0 {
                points.push(grid.point(i));
                weights.push(w);
            }
        }
        // Points whose combined weight is below roundoff of the total never
        // change an integral, so they are dropped.
        let total: f64 = weights.iter().sum();
        let mut order: Vec<usize> = (0..weights.len()).collect();
        order.sort_by(|&i, &j| weights[i].total_cmp(&weights[j]));
        let mut dropped = 0.0;
        let mut cut = 0;
        while cut < order.len() && dropped + weights[order[cut]] <= 1e-16 * total {
            dropped += weights[order[cut]];
            cut += 1;
        }
        let mut keep: Vec<usize> = order[cut..].to_vec();
        keep.sort_unstable();
        let points = keep.iter().map(|&i| points[i]).collect();
        let weights = keep.iter().map(|&i| weights[i]).collect();
        Ok(Self { potential, params: *params, kinetic, points, weights })
    }

    /// `K(u)`.
    pub fn kinetic(&self) -> f64 {
        self.kinetic
    }

    /// `int |u|^p`.
    pub fn lp_pow(&self) -> f64 {
        self.weights.iter().sum()
    }

    fn growth(&self, h: f64) -> (f64, f64) {
        let d = self.params.dim as f64;
        ((2.0 * self.params.s * h).exp(), ((self.params.p - 2.0) * d * h / 2.0).exp())
    }

    /// `(int a(y + e^{-h} z) |u(z)|^p dz, int W(e^{-h} z) |u(z)|^p dz)`;
    /// the `W` integral is only meaningful for `y = 0`.
    fn integrals(&self, h: f64, shift: [f64; 2]) -> (f64, f64) {
        let e = (-h).exp();
        let mut ia = 0.0;
        let mut iw = 0.0;
        for (pt, w) in self.points.iter().zip(&self.weights) {
            let x0 = shift[0] + e * pt[0];
            let x1 = shift[1] + e * pt[1];
            let (av, wv) = self.potential.profile_r2(x0 * x0 + x1 * x1);
            ia += av * w;
            iw += wv * w;
        }
        (ia, iw)
    }

    /// `F(h * u)`.
    pub fn value(&self, h: f64) -> f64 {
        self.value_shifted(h, [0.0; 2])
    }

    /// `F((h * u)(. - y))`.
    pub fn value_shifted(&self, h: f64, y: [f64; 2]) -> f64 {
        let (gk, gp) = self.growth(h);
        let (ia, _) = self.integrals(h, y);
        0.5 * gk * self.kinetic - gp * ia / self.params.p
    }

    /// `F_inf(h * u) = e^{2sh} K/2 - e^{(p-2)dh/2} int|u|^p / p`.
    pub fn value_free(&self, h: f64) -> f64 {
        let (gk, gp) = self.growth(h);
        0.5 * gk * self.kinetic - gp * self.lp_pow() / self.params.p
    }

    /// `d/dh F(h * u)`, equal to the Pohozaev scalar of `h * u`.
    pub fn derivative(&self, h: f64) -> f64 {
        let (gk, gp) = self.growth(h);
        let (ia, iw) = self.integrals(h, [0.0; 2]);
        let p = self.params.p;
        self.params.s * gk * self.kinetic - gp * (self.params.pohozaev_coefficient() * ia - iw / p)
    }

    /// `s K(h * u)`, the natural scale of [`Fiber::derivative`].
    pub fn derivative_scale(&self, h: f64) -> f64 {
        self.params.s * self.growth(h).0 * self.kinetic
    }
}

/// `d/dh F(h * u)` at `h`.
pub fn fiber_derivative(u: &Field, a: &Potential, h: f64, params: &PhysParams) -> Result<f64> {
    if !h.is_finite() || h.abs() > crate::geometry::DEFAULT_H_MAX {
        return Err(Error::InvalidParams(format!("|h| = {} exceeds h_max", h.abs())));
    }
    Ok(Fiber::new(u, a, params)?.derivative(h))
}

/// `F(h * u)` at `h`.
pub fn fiber_value(u: &Field, a: &Potential, h: f64, params: &PhysParams) -> Result<f64> {
    Ok(Fiber::new(u, a, params)?.value(h))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{fiber_scale, fiber_scale_regrid};
    use crate::grid::Grid;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use std::f64::consts::PI;

    fn well() -> Potential {
        Potential::InversePowerWell { mu: 0.05, q: 1.0 }
    }

    fn random_smooth(grid: Grid, rng: &mut ChaCha8Rng) -> Field {
        let bumps: Vec<(f64, f64, f64, f64)> = (0..4)
            .map(|_| {
                (
                    rng.gen_range(-1.0..1.0),
                    rng.gen_range(-2.0..2.0),
                    rng.gen_range(-2.0..2.0),
                    rng.gen_range(0.6..1.5),
                )
            })
            .collect();
        Field::from_fn(grid, |x| {
            bumps
                .iter()
                .map(|&(amp, cx, cy, w)| {
                    let dy = if x.len() > 1 { x[1] - cy } else { 0.0 };
                    let r2 = (x[0] - cx).powi(2) + dy * dy;
                    amp * (-r2 / (2.0 * w * w)).exp()
                })
                .sum()
        })
    }

    #[test]
    fn zero_field_has_zero_energy_and_gradient() {
        let grid = Grid::new(2, 16, 4.0).unwrap();
        let p = PhysParams::new(2, 0.5, 3.5, 1.0).unwrap();
        let z = Field::zeros(grid);
        assert_eq!(energy_f(&z, &well(), &p).unwrap().total, 0.0);
        assert_eq!(energy_finf(&z, &p).unwrap().total, 0.0);
        assert_eq!(gradient_f(&z, &well(), &p).unwrap().max_abs(), 0.0);
        assert!(matches!(multiplier(&z, &well(), &p), Err(Error::ZeroField)));
    }

    #[test]
    fn benjamin_ono_energies() {
        let grid = Grid::new(1, 32768, 800.0).unwrap();
        let p = PhysParams::relaxed(1, 0.5, 3.0, 1.0).unwrap();
        let u = Field::from_fn(grid, |x| 2.0 / (1.0 + x[0] * x[0]));
        let one = Potential::Constant { a0: 1.0 };
        let e = energy_f(&u, &one, &p).unwrap();
        assert!((e.total + PI / 2.0).abs() < 1e-2);
        let einf = energy_finf(&u, &p).unwrap();
        assert!((einf.total - e.total).abs() < 1e-14);
        let el = energy_finf_lambda(&u, -1.0, &p).unwrap();
        assert!((el.total - PI / 2.0).abs() < 1e-2);
        let poh = pohozaev_residual(&u, &one, &p).unwrap();
        assert!(poh.abs() < 1e-2, "{poh}");
    }

    #[test]
    fn weaker_potential_raises_energy() {
        let grid = Grid::new(2, 32, 6.0).unwrap();
        let p = PhysParams::new(2, 0.5, 3.5, 1.0).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for _ in 0..5 {
            let u = random_smooth(grid, &mut rng);
            assert!(energy_f(&u, &well(), &p).unwrap().total > energy_finf(&u, &p).unwrap().total);
        }
    }

    #[test]
    fn lambda_shift_is_mass_term() {
        let grid = Grid::new(1, 128, 10.0).unwrap();
        let p = PhysParams::relaxed(1, 0.7, 3.3, 1.0).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let u = random_smooth(grid, &mut rng);
        let c2 = lp_power(&u, 2.0);
        let f = energy_f(&u, &well(), &p).unwrap().total;
        assert_eq!(energy_flambda(&u, &well(), 0.0, &p).unwrap().total, f);
        let fl = energy_flambda(&u, &well(), 0.8, &p).unwrap().total;
        assert!((fl - f + 0.4 * c2).abs() < 1e-13);
    }

    fn central_difference(f: impl Fn(&Field) -> f64, u: &Field, phi: &Field, eps: f64) -> f64 {
        (f(&u.axpy(eps, phi)) - f(&u.axpy(-eps, phi))) / (2.0 * eps)
    }

    #[test]
    fn gradients_match_finite_differences() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for &dim in &[1usize, 2] {
            let grid = Grid::new(dim, 64, 8.0).unwrap();
            let p = PhysParams::relaxed(dim, 0.45, 3.4, 1.0).unwrap();
            let a = well();
            let lambda = -0.7;
            for _ in 0..3 {
                let u = random_smooth(grid, &mut rng);
                let phi = random_smooth(grid, &mut rng);
                let eps = 1e-5;
                let cases: Vec<(f64, f64)> = vec![
                    (
                        central_difference(|v| energy_f(v, &a, &p).unwrap().total, &u, &phi, eps),
                        l2_inner(&gradient_f(&u, &a, &p).unwrap(), &phi),
                    ),
                    (
                        central_difference(|v| energy_finf(v, &p).unwrap().total, &u, &phi, eps),
                        l2_inner(&gradient_finf(&u, &p).unwrap(), &phi),
                    ),
                    (
                        central_difference(|v| energy_flambda(v, &a, lambda, &p).unwrap().total, &u, &phi, eps),
                        l2_inner(&gradient_flambda(&u, &a, lambda, &p).unwrap(), &phi),
                    ),
                    (
                        central_difference(|v| energy_finf_lambda(v, lambda, &p).unwrap().total, &u, &phi, eps),
                        l2_inner(&gradient_finf_lambda(&u, lambda, &p).unwrap(), &phi),
                    ),
                ];
                for (fd, an) in cases {
                    assert!((fd - an).abs() <= 1e-6 * an.abs().max(1e-3), "dim {dim}: {fd} vs {an}");
                }
            }
        }
    }

    #[test]
    fn tangent_residual_is_orthogonal() {
        let grid = Grid::new(2, 32, 6.0).unwrap();
        let p = PhysParams::new(2, 0.5, 3.5, 1.0).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for _ in 0..5 {
            let u = random_smooth(grid, &mut rng);
            let r = tangent_residual(&u, &well(), &p).unwrap();
            let g = gradient_f(&u, &well(), &p).unwrap();
            let scale = lp_power(&g, 2.0).sqrt() * lp_power(&u, 2.0).sqrt();
            assert!(l2_inner(&r, &u).abs() <= 1e-10 * scale);
        }
    }

    #[test]
    fn small_plane_wave_multiplier() {
        // lambda = |k0|^{2s} - A^{p-2} <|cos|^p> / <cos^2>
        let grid = Grid::new(1, 64, 8.0).unwrap();
        let s = 0.6;
        let pp = 3.0;
        let p = PhysParams::relaxed(1, s, pp, 1.0).unwrap();
        let k0 = PI * 2.0 / 8.0;
        let one = Potential::Constant { a0: 1.0 };
        for amp in [1e-2, 1e-3] {
            let u = Field::from_fn(grid, |x| amp * (k0 * x[0]).cos());
            let lam = multiplier(&u, &one, &p).unwrap();
            let ratio = lp_power(&u, pp) / lp_power(&u, 2.0);
            let expect = k0.powf(2.0 * s) - ratio;
            assert!((lam - expect).abs() < 1e-10);
            assert!(lam < k0.powf(2.0 * s) && (k0.powf(2.0 * s) - lam) < 2.0 * amp);
        }
    }

    #[test]
    fn constant_potential_pohozaev_uses_norms() {
        let grid = Grid::new(2, 32, 6.0).unwrap();
        let p = PhysParams::new(2, 0.5, 3.5, 1.0).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let u = random_smooth(grid, &mut rng);
        let one = Potential::Constant { a0: 1.0 };
        let poh = pohozaev_residual(&u, &one, &p).unwrap();
        let expect = 0.5 * gagliardo_energy(&u, 0.5).unwrap() - p.pohozaev_coefficient() * lp_power(&u, 3.5);
        assert_eq!(poh, expect);
    }

    #[test]
    fn fiber_derivative_matches_resampled_pohozaev_and_differences() {
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        let grid = Grid::new(2, 64, 10.0).unwrap();
        let a = well();
        // exact lattice dilation: any order s
        let p = PhysParams::new(2, 0.5, 3.5, 1.0).unwrap();
        // resampling on a fixed lattice: only the smooth symbol |k|^2 is
        // integrated spectrally accurately
        let p_smooth = PhysParams::relaxed(2, 1.0, 3.5, 1.0).unwrap();
        for _ in 0..3 {
            let u = random_smooth(grid, &mut rng);
            let h = 0.3;
            let fiber = Fiber::new(&u, &a, &p).unwrap();
            let d = fiber.derivative(h);
            let eps = 1e-4;
            let fd = (fiber.value(h + eps) - fiber.value(h - eps)) / (2.0 * eps);
            assert!((d - fd).abs() <= 1e-6 * d.abs().max(fiber.derivative_scale(h)));
            let v = fiber_scale_regrid(&u, h).unwrap();
            let poh = pohozaev_residual(&v, &a, &p).unwrap();
            assert!((poh - d).abs() <= 1e-10 * fiber.derivative_scale(h), "{poh} vs {d}");
            let direct = energy_f(&v, &a, &p).unwrap().total;
            assert!((direct - fiber.value(h)).abs() < 1e-10 * direct.abs().max(1.0));

            let fiber = Fiber::new(&u, &a, &p_smooth).unwrap();
            let v = fiber_scale(&u, h).unwrap();
            let poh = pohozaev_residual(&v, &a, &p_smooth).unwrap();
            let d = fiber.derivative(h);
            assert!((poh - d).abs() <= 1e-6 * fiber.derivative_scale(h), "{poh} vs {d}");
        }
    }

    #[test]
    fn fiber_matches_scaling_identities() {
        let grid = Grid::new(1, 256, 20.0).unwrap();
        let p = PhysParams::relaxed(1, 0.4, 4.0, 1.0).unwrap();
        let u = Field::from_fn(grid, |x| (-x[0] * x[0] / 2.0).exp());
        let one = Potential::Constant { a0: 1.0 };
        let fiber = Fiber::new(&u, &one, &p).unwrap();
        let e = energy_finf(&u, &p).unwrap();
        for h in [-0.5f64, 0.2, 0.9] {
            let expect = (0.8 * h).exp() * e.kinetic - (h).exp() * e.potential_term;
            assert!((fiber.value(h) - expect).abs() <= 1e-12 * expect.abs().max(1.0));
            assert_eq!(fiber.value(h), fiber.value_free(h));
        }
    }
}
