//! Fourier transforms on the periodic box, the fractional Laplacian as the
//! multiplier `|k|^{2s}`, and rectangle-rule norms.
//!
//! Forward transforms are unnormalized (`F_m = sum_j f_j e^{-i k_m x_j}`) and
//! the inverse divides by `n^d`, so Parseval reads
//! `h^d sum |f_j|^2 = h^d / n^d sum |F_m|^2`.

use std::collections::HashMap;
use std::sync::{Arc, Mutex, OnceLock};

use rustfft::num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

use crate::error::{Error, Result};
use crate::grid::{Field, Grid};

/// Relative size of the imaginary part tolerated after an inverse transform.
pub const IMAGINARY_TOLERANCE: f64 = 1e-10;

type PlanPair = (Arc<dyn Fft<f64>>, Arc<dyn Fft<f64>>);
type PlanCache = Mutex<(FftPlanner<f64>, HashMap<usize, PlanPair>)>;

fn plans(n: usize) -> PlanPair {
    static CACHE: OnceLock<PlanCache> = OnceLock::new();
    let cache = CACHE.get_or_init(|| Mutex::new((FftPlanner::new(), HashMap::new())));
    let mut guard = cache.lock().expect("fft plan cache poisoned");
    let (planner, map) = &mut *guard;
    if let Some(p) = map.get(&n) {
        return p.clone();
    }
    let pair = (planner.plan_fft_forward(n), planner.plan_fft_inverse(n));
    map.insert(n, pair.clone());
    pair
}

fn transpose(n: usize, data: &mut [Complex64]) {
    for i in 0..n {
        for j in i + 1..n {
            data.swap(i * n + j, j * n + i);
        }
    }
}

fn transform(grid: &Grid, data: &mut [Complex64], inverse: bool) {
    let n = grid.n();
    let (fwd, inv) = plans(n);
    let plan = if inverse { inv } else { fwd };
    // rows (or the single axis)
    plan.process(data);
    if grid.dim() == 2 {
        transpose(n, data);
        plan.process(data);
        transpose(n, data);
    }
}

/// Unnormalized forward transform of a real field.
pub fn forward(field: &Field) -> Vec<Complex64> {
    let mut data: Vec<Complex64> =
        field.values().iter().map(|&v| Complex64::new(v, 0.0)).collect();
    transform(field.grid(), &mut data, false);
    data
}

/// Normalized inverse transform; fails if the imaginary residue exceeds
/// [`IMAGINARY_TOLERANCE`] relative to the larger of the real part and
/// `reference` (the sample-space norm the result is compared against).
pub fn inverse_real(grid: &Grid, spectrum: Vec<Complex64>) -> Result<Field> {
    inverse_real_against(grid, spectrum, 0.0)
}

fn inverse_real_against(grid: &Grid, mut spectrum: Vec<Complex64>, reference: f64) -> Result<Field> {
    transform(grid, &mut spectrum, true);
    let scale = 1.0 / grid.len() as f64;
    let mut re_sq = 0.0;
    let mut im_sq = 0.0;
    let values: Vec<f64> = spectrum
        .iter()
        .map(|z| {
            let re = z.re * scale;
            let im = z.im * scale;
            re_sq += re * re;
            im_sq += im * im;
            re
        })
        .collect();
    let base = re_sq.sqrt().max(reference);
    if im_sq.sqrt() > IMAGINARY_TOLERANCE * base {
        return Err(Error::ImaginaryResidue { residue: im_sq.sqrt() / base.max(f64::MIN_POSITIVE) });
    }
    Ok(Field::from_raw(*grid, values))
}

/// Applies a real, even Fourier symbol `sigma(|k|^2)` to a field.
pub fn apply_symbol(field: &Field, symbol: impl Fn(f64) -> f64) -> Result<Field> {
    let k2 = field.grid().k_squared();
    let mut spec = forward(field);
    let mut peak: f64 = 0.0;
    for (z, &kk) in spec.iter_mut().zip(&k2) {
        let sigma = symbol(kk);
        peak = peak.max(sigma.abs());
        *z *= sigma;
    }
    let reference = field.values().iter().map(|v| v * v).sum::<f64>().sqrt() * peak;
    inverse_real_against(field.grid(), spec, reference)
}

/// `|k|^{2s}` computed from `|k|^2`.
#[inline]
pub fn frac_symbol(k2: f64, s: f64) -> f64 {
    if s == 1.0 {
        k2
    } else if k2 == 0.0 {
        0.0
    } else {
        k2.powf(s)
    }
}

pub(crate) fn check_order(s: f64) -> Result<()> {
    if s > 0.0 && s <= 1.0 {
        Ok(())
    } else {
        Err(Error::InvalidParams(format!("fractional order {s} not in (0, 1]")))
    }
}

/// `(-Delta)^s f` as the periodic Fourier multiplier `|k|^{2s}`.
pub fn frac_laplacian(field: &Field, s: f64) -> Result<Field> {
    check_order(s)?;
    apply_symbol(field, |k2| frac_symbol(k2, s))
}

/// `sum_m sigma(|k_m|^2) |F_m|^2 * h^d / n^d`, i.e. `<f, sigma(-Delta) f>`.
pub fn spectral_quadratic_form(field: &Field, symbol: impl Fn(f64) -> f64) -> f64 {
    let grid = field.grid();
    let k2 = grid.k_squared();
    let spec = forward(field);
    let sum: f64 = spec.iter().zip(&k2).map(|(z, &kk)| symbol(kk) * z.norm_sqr()).sum();
    sum * grid.cell_volume() / grid.len() as f64
}

/// Fractional kinetic energy `||(-Delta)^{s/2} f||_2^2`.
pub fn gagliardo_energy(field: &Field, s: f64) -> Result<f64> {
    check_order(s)?;
    Ok(spectral_quadratic_form(field, |k2| frac_symbol(k2, s)))
}

/// `h^d sum |f_i|^q`, the rectangle-rule value of `int |f|^q`.
pub fn lp_power(field: &Field, q: f64) -> f64 {
    let w = field.grid().cell_volume();
    let sum: f64 = if q == 2.0 {
        field.values().iter().map(|v| v * v).sum()
    } else {
        field.values().iter().map(|v| v.abs().powf(q)).sum()
    };
    w * sum
}

/// `||f||_q = (h^d sum |f_i|^q)^{1/q}`.
pub fn lp_norm(field: &Field, q: f64) -> f64 {
    assert!(q >= 1.0, "lp_norm exponent {q} < 1");
    lp_power(field, q).powf(1.0 / q)
}

pub fn l2_norm(field: &Field) -> f64 {
    lp_power(field, 2.0).sqrt()
}

/// `h^d sum f_i g_i`.
pub fn l2_inner(f: &Field, g: &Field) -> f64 {
    assert!(f.grid() == g.grid(), "inner product of fields on different grids");
    let sum: f64 = f.values().iter().zip(g.values()).map(|(a, b)| a * b).sum();
    sum * f.grid().cell_volume()
}

/// `||(1 + sigma(-Delta))^{-1/2} r||_2` for the symbol `sigma = scale * |k|^{2s}`,
/// a discrete stand-in for the dual norm of a residual.
pub fn weighted_residual_norm(r: &Field, s: f64, scale: f64) -> f64 {
    spectral_quadratic_form(r, |k2| 1.0 / (1.0 + scale * frac_symbol(k2, s))).sqrt()
}
