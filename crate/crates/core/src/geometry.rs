//! Mass-preserving fiber dilation `h * u = e^{dh/2} u(e^h x)`, spectral
//! translation, and the barycenter map built from unit-ball averages.

use std::f64::consts::PI;

use rustfft::num_complex::Complex64;

use crate::error::{Error, Result};
use crate::grid::{Field, Grid};
use crate::spectral::{forward, inverse_real, lp_power};

/// Default bound on `|h|` for fiber dilations.
pub const DEFAULT_H_MAX: f64 = 6.0;

/// Mass fraction allowed to leave the box (or the resolved band) under dilation.
pub const ALIASING_TOLERANCE: f64 = 1e-6;

/// A point `h * base` on the fiber through `base`.
#[derive(Debug, Clone)]
pub struct FiberPoint {
    pub h: f64,
    pub base: Field,
}

impl FiberPoint {
    pub fn new(base: Field, h: f64) -> Self {
        Self { h, base }
    }

    /// Resamples `h * base` onto the base grid.
    pub fn realize(&self) -> Result<Field> {
        fiber_scale(&self.base, self.h)
    }

    /// `h * base` represented exactly on the lattice dilated by `e^{-h}`.
    pub fn realize_exact(&self) -> Result<Field> {
        fiber_scale_regrid(&self.base, self.h)
    }
}

/// Periodic band-limited interpolation kernel for `n` samples spaced `dx`
/// (the Nyquist mode split as a cosine).
fn periodic_sinc(t: f64, n: usize, dx: f64) -> f64 {
    let u = t / dx;
    let m = u.round();
    let frac = u - m;
    if frac.abs() < 1e-13 {
        return if (m as i64).rem_euclid(n as i64) == 0 { 1.0 } else { 0.0 };
    }
    let sign = if (m as i64).rem_euclid(2) == 0 { 1.0 } else { -1.0 };
    let numer = sign * (PI * frac).sin();
    numer / (n as f64 * (PI * u / n as f64).tan())
}

/// `n x n` matrix evaluating the trigonometric interpolant at `factor * x_j`;
/// rows whose target leaves `[-L, L)` are zero.
fn dilation_matrix(grid: &Grid, factor: f64) -> Vec<f64> {
    let n = grid.n();
    let dx = grid.spacing();
    let l = grid.half_width();
    let mut m = vec![0.0; n * n];
    for j in 0..n {
        let y = factor * grid.coord(j);
        if y < -l - 1e-12 * l || y >= l {
            continue;
        }
        let row = &mut m[j * n..(j + 1) * n];
        for (i, w) in row.iter_mut().enumerate() {
            *w = periodic_sinc(y - grid.coord(i), n, dx);
        }
    }
    m
}

fn check_dilation(f: &Field, h: f64) -> Result<()> {
    let grid = f.grid();
    let total = lp_power(f, 2.0);
    if total == 0.0 {
        return Ok(());
    }
    let factor = h.exp();
    let lost = if h < 0.0 {
        // samples at |x| > e^h L are pushed beyond the box
        let cut = factor * grid.half_width();
        let d = grid.dim();
        let mut lost = 0.0;
        for (i, v) in f.values().iter().enumerate() {
            let p = grid.point(i);
            if p[..d].iter().any(|c| c.abs() > cut) {
                lost += v * v;
            }
        }
        lost * grid.cell_volume()
    } else if h > 0.0 {
        // spectral content above e^{-h} k_max is pushed past the Nyquist band
        let kmax = PI * (grid.n() / 2) as f64 / grid.half_width();
        let cut = kmax / factor;
        let spec = forward(f);
        let k = grid.wavenumbers();
        let n = grid.n();
        let mut lost = 0.0;
        for (idx, z) in spec.iter().enumerate() {
            let over = match grid.dim() {
                1 => k[idx].abs() > cut,
                _ => k[idx / n].abs() > cut || k[idx % n].abs() > cut,
            };
            if over {
                lost += z.norm_sqr();
            }
        }
        lost * grid.cell_volume() / grid.len() as f64
    } else {
        0.0
    };
    if lost > ALIASING_TOLERANCE * total {
        return Err(Error::Aliasing(format!(
            "dilation h = {h} moves {:.3e} of the squared mass outside the resolvable box",
            lost / total
        )));
    }
    Ok(())
}

fn check_h(h: f64, h_max: f64) -> Result<()> {
    if !h.is_finite() || h.abs() > h_max {
        return Err(Error::InvalidParams(format!("|h| = {} exceeds h_max = {h_max}", h.abs())));
    }
    Ok(())
}

/// `e^{dh/2} f(e^h x)` resampled onto the same grid through the trigonometric
/// interpolant of `f`.
pub fn fiber_scale(f: &Field, h: f64) -> Result<Field> {
    fiber_scale_with(f, h, DEFAULT_H_MAX)
}

pub fn fiber_scale_with(f: &Field, h: f64, h_max: f64) -> Result<Field> {
    check_h(h, h_max)?;
    if h == 0.0 {
        return Ok(f.clone());
    }
    check_dilation(f, h)?;
    let grid = *f.grid();
    let n = grid.n();
    let m = dilation_matrix(&grid, h.exp());
    let amp = (grid.dim() as f64 * h / 2.0).exp();
    let apply_rows = |src: &[f64], dst: &mut [f64]| {
        for (row_in, row_out) in src.chunks(n).zip(dst.chunks_mut(n)) {
            for (j, out) in row_out.iter_mut().enumerate() {
                let w = &m[j * n..(j + 1) * n];
                *out = w.iter().zip(row_in).map(|(a, b)| a * b).sum();
            }
        }
    };
    let mut values = vec![0.0; grid.len()];
    match grid.dim() {
        1 => apply_rows(f.values(), &mut values),
        _ => {
            let mut tmp = vec![0.0; grid.len()];
            apply_rows(f.values(), &mut tmp);
            let mut t = transpose(&tmp, n);
            apply_rows(&t.clone(), &mut t);
            values = transpose(&t, n);
        }
    }
    for v in values.iter_mut() {
        *v *= amp;
    }
    Ok(Field::from_raw(grid, values))
}

/// `f(factor * x)` at the points of `target`, through the trigonometric
/// interpolant of `f`. Targets mapped outside the source box read zero, and the
/// call fails if that discards mass or the new spacing cannot resolve `f`.
pub fn resample(f: &Field, target: &Grid, factor: f64) -> Result<Field> {
    let src = *f.grid();
    if src.dim() != target.dim() {
        return Err(Error::DimensionMismatch("resample across dimensions".into()));
    }
    if !(factor > 0.0 && factor.is_finite()) {
        return Err(Error::InvalidParams(format!("resample factor {factor} must be positive")));
    }
    // dilation check relative to the source: reach and resolution
    let reach = factor * target.half_width() / src.half_width();
    if reach < 1.0 {
        check_dilation(f, reach.ln())?;
    }
    let resolution = src.spacing() / (factor * target.spacing());
    if resolution < 1.0 {
        check_dilation(f, -resolution.ln())?;
    }
    let (n, m) = (src.n(), target.n());
    let l = src.half_width();
    let dx = src.spacing();
    let mut mat = vec![0.0; m * n];
    for j in 0..m {
        let y = factor * target.coord(j);
        if y < -l - 1e-12 * l || y >= l {
            continue;
        }
        for i in 0..n {
            mat[j * n + i] = periodic_sinc(y - src.coord(i), n, dx);
        }
    }
    let apply = |input: &[f64]| -> Vec<f64> {
        let mut out = vec![0.0; m];
        for (j, o) in out.iter_mut().enumerate() {
            *o = mat[j * n..(j + 1) * n].iter().zip(input).map(|(a, b)| a * b).sum();
        }
        out
    };
    let values = match src.dim() {
        1 => apply(f.values()),
        _ => {
            // rows first (second axis), then columns (first axis)
            let rows: Vec<f64> = f.values().chunks(n).flat_map(&apply).collect();
            let mut out = vec![0.0; m * m];
            let mut col = vec![0.0; n];
            for jc in 0..m {
                for (i, c) in col.iter_mut().enumerate() {
                    *c = rows[i * m + jc];
                }
                for (jr, v) in apply(&col).into_iter().enumerate() {
                    out[jr * m + jc] = v;
                }
            }
            out
        }
    };
    Field::new(*target, values)
}

fn transpose(v: &[f64], n: usize) -> Vec<f64> {
    let mut out = vec![0.0; v.len()];
    for i in 0..n {
        for j in 0..n {
            out[j * n + i] = v[i * n + j];
        }
    }
    out
}

/// `h * f` without interpolation: the samples `e^{dh/2} f_j` placed on the
/// lattice whose coordinates are `e^{-h}` times the original ones.
pub fn fiber_scale_regrid(f: &Field, h: f64) -> Result<Field> {
    let grid = f.grid().scaled((-h).exp())?;
    let amp = (f.grid().dim() as f64 * h / 2.0).exp();
    Ok(Field::from_raw(grid, f.values().iter().map(|v| v * amp).collect()))
}

/// `f(x - z)` by a spectral phase shift (exact for band-limited periodic fields).
pub fn translate(f: &Field, z: &[f64]) -> Result<Field> {
    let grid = *f.grid();
    if z.len() != grid.dim() {
        return Err(Error::DimensionMismatch(format!(
            "shift has {} components on a {}-d grid",
            z.len(),
            grid.dim()
        )));
    }
    if z.iter().all(|&c| c == 0.0) {
        return Ok(f.clone());
    }
    let n = grid.n();
    let k = grid.wavenumbers();
    // Nyquist components keep only the real part of the phase
    let phase = |axis: usize, m: usize| -> Complex64 {
        let arg = -k[m] * z[axis];
        if m == n / 2 {
            Complex64::new(arg.cos(), 0.0)
        } else {
            Complex64::new(arg.cos(), arg.sin())
        }
    };
    let mut spec = forward(f);
    match grid.dim() {
        1 => {
            for (m, c) in spec.iter_mut().enumerate() {
                *c *= phase(0, m);
            }
        }
        _ => {
            for (idx, c) in spec.iter_mut().enumerate() {
                *c *= phase(0, idx / n) * phase(1, idx % n);
            }
        }
    }
    inverse_real(&grid, spec)
}

/// Unit-ball average of `|f|` (periodic convolution with the normalized
/// indicator of `B_1(0)`).
pub fn local_average(f: &Field) -> Result<Field> {
    let grid = *f.grid();
    let dx = grid.spacing();
    if dx >= 1.0 {
        return Err(Error::InvalidGrid(format!(
            "spacing {dx} does not resolve the unit ball"
        )));
    }
    let n = grid.n() as isize;
    let reach = (1.0 / dx).floor() as isize;
    let mut offsets: Vec<(isize, isize)> = Vec::new();
    match grid.dim() {
        1 => {
            for i in -reach..=reach {
                if (i as f64 * dx).abs() <= 1.0 + 1e-12 {
                    offsets.push((0, i));
                }
            }
        }
        _ => {
            for i in -reach..=reach {
                for j in -reach..=reach {
                    let r2 = ((i * i + j * j) as f64) * dx * dx;
                    if r2 <= 1.0 + 1e-12 {
                        offsets.push((i, j));
                    }
                }
            }
        }
    }
    let weight = 1.0 / offsets.len() as f64;
    let abs: Vec<f64> = f.values().iter().map(|v| v.abs()).collect();
    let wrap = |i: isize| i.rem_euclid(n) as usize;
    let nu = grid.n();
    let values = match grid.dim() {
        1 => (0..n)
            .map(|j| weight * offsets.iter().map(|&(_, o)| abs[wrap(j + o)]).sum::<f64>())
            .collect(),
        _ => {
            let mut out = vec![0.0; grid.len()];
            for i in 0..n {
                for j in 0..n {
                    let mut acc = 0.0;
                    for &(oi, oj) in &offsets {
                        acc += abs[wrap(i + oi) * nu + wrap(j + oj)];
                    }
                    out[i as usize * nu + j as usize] = weight * acc;
                }
            }
            out
        }
    };
    Ok(Field::from_raw(grid, values))
}

/// Fraction of the half-width that the barycenter truncation must avoid.
pub const BARYCENTER_SHELL: f64 = 0.1;

/// Barycenter `beta(f)`: first moment of `(nu(f) - max nu(f) / 2)^+`.
pub fn barycenter(f: &Field) -> Result<Vec<f64>> {
    let grid = *f.grid();
    let nu = local_average(f)?;
    let peak = nu.max();
    if !(peak > 0.0) {
        return Err(Error::UndefinedBarycenter("field vanishes".into()));
    }
    let d = grid.dim();
    let inner = (1.0 - BARYCENTER_SHELL) * grid.half_width();
    let mut mass = 0.0;
    let mut moment = [0.0; 2];
    for (i, &v) in nu.values().iter().enumerate() {
        let t = v - 0.5 * peak;
        if t <= 0.0 {
            continue;
        }
        let p = grid.point(i);
        if p[..d].iter().any(|c| c.abs() > inner) {
            return Err(Error::UndefinedBarycenter(format!(
                "truncated average reaches the outer shell at {:?}",
                &p[..d]
            )));
        }
        mass += t;
        moment[0] += t * p[0];
        moment[1] += t * p[1];
    }
    if mass == 0.0 {
        return Err(Error::UndefinedBarycenter("empty truncation".into()));
    }
    Ok(moment[..d].iter().map(|m| m / mass).collect())
}
