//! Radial potential families `a(x)` with analytic `grad a` and
//! `W(x) = x . grad a(x)`, and the quantitative admissibility checker.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::{Field, Grid};
use crate::params::PhysParams;
use crate::spectral::lp_norm;

/// Closed-form potential families. All built-in families are radial.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case")]
pub enum Potential {
    /// `a(x) = a0`.
    Constant { a0: f64 },
    /// `a(x) = 1 - mu (1 + |x|^2)^{-q}`.
    InversePowerWell { mu: f64, q: f64 },
    /// Tabulated radial profile `a(r)`, monotone cubic in `r`, equal to the
    /// last entry beyond the table. Sign conditions on it are numerical only.
    RadialTable { r: Vec<f64>, a: Vec<f64> },
}

impl Potential {
    pub fn validate(&self) -> Result<()> {
        match self {
            Potential::Constant { a0 } => {
                if !(*a0 > 0.0) || !a0.is_finite() {
                    return Err(Error::Config(format!("constant potential a0 = {a0} must be > 0")));
                }
            }
            Potential::InversePowerWell { mu, q } => {
                if !(*mu > 0.0 && *mu < 1.0) {
                    return Err(Error::Config(format!("well depth mu = {mu} not in (0, 1)")));
                }
                if !(*q > 0.0) || !q.is_finite() {
                    return Err(Error::Config(format!("well exponent q = {q} must be > 0")));
                }
            }
            Potential::RadialTable { r, a } => {
                if r.len() < 2 || r.len() != a.len() {
                    return Err(Error::Config("radial table needs >= 2 matching (r, a) pairs".into()));
                }
                if r[0] != 0.0 || r.windows(2).any(|w| !(w[1] > w[0])) {
                    return Err(Error::Config("radial table r must start at 0 and increase".into()));
                }
                if a.iter().any(|v| !(*v > 0.0) || !v.is_finite()) {
                    return Err(Error::Config("radial table values must be positive".into()));
                }
            }
        }
        Ok(())
    }

    /// Whether signs and suprema come from closed forms rather than sampling.
    pub fn is_analytic(&self) -> bool {
        !matches!(self, Potential::RadialTable { .. })
    }

    pub fn is_constant_one(&self) -> bool {
        matches!(self, Potential::Constant { a0 } if *a0 == 1.0)
    }

    /// `(a, W)` at squared radius `r2`.
    #[inline]
    pub fn profile_r2(&self, r2: f64) -> (f64, f64) {
        match self {
            Potential::Constant { a0 } => (*a0, 0.0),
            Potential::InversePowerWell { mu, q } => {
                let base = 1.0 + r2;
                let decay = if *q == 1.0 { 1.0 / base } else { base.powf(-q) };
                (1.0 - mu * decay, 2.0 * q * mu * r2 * decay / base)
            }
            Potential::RadialTable { r, a } => {
                let rr = r2.sqrt();
                let (v, dv) = pchip(r, a, rr);
                (v, rr * dv)
            }
        }
    }

    pub fn value(&self, x: &[f64]) -> f64 {
        self.profile_r2(x.iter().map(|v| v * v).sum()).0
    }

    /// `W(x) = x . grad a(x)`.
    pub fn w(&self, x: &[f64]) -> f64 {
        self.profile_r2(x.iter().map(|v| v * v).sum()).1
    }

    pub fn gradient(&self, x: &[f64]) -> Vec<f64> {
        let r2: f64 = x.iter().map(|v| v * v).sum();
        if r2 == 0.0 {
            return vec![0.0; x.len()];
        }
        // radial: grad a = (W / r^2) x
        let (_, w) = self.profile_r2(r2);
        x.iter().map(|c| w / r2 * c).collect()
    }

    /// Declared `lim_{|x| -> inf} a(x)`.
    pub fn a_inf(&self) -> f64 {
        match self {
            Potential::Constant { a0 } => *a0,
            Potential::InversePowerWell { .. } => 1.0,
            Potential::RadialTable { a, .. } => *a.last().expect("validated table"),
        }
    }

    /// `a_* = inf a`: closed form for analytic families, table minimum
    /// combined with the tail value otherwise.
    pub fn a_star(&self) -> f64 {
        match self {
            Potential::Constant { a0 } => *a0,
            Potential::InversePowerWell { mu, .. } => 1.0 - mu,
            Potential::RadialTable { a, .. } => a.iter().copied().fold(f64::INFINITY, f64::min),
        }
    }

    /// `||W||_inf`: closed form `2 mu (q/(q+1))^{q+1}` (attained at `r^2 = 1/q`)
    /// for the well, dense radial sampling for tables.
    pub fn w_sup(&self) -> f64 {
        match self {
            Potential::Constant { .. } => 0.0,
            Potential::InversePowerWell { mu, q } => 2.0 * mu * (q / (q + 1.0)).powf(q + 1.0),
            Potential::RadialTable { r, .. } => {
                let rmax = *r.last().expect("validated table");
                (0..=20_000)
                    .map(|i| self.profile_r2((rmax * i as f64 / 20_000.0).powi(2)).1.abs())
                    .fold(0.0, f64::max)
            }
        }
    }

    /// `sup |1 - a(x)|`.
    pub fn sup_one_minus_a(&self) -> f64 {
        match self {
            Potential::Constant { a0 } => (1.0 - a0).abs(),
            Potential::InversePowerWell { mu, .. } => *mu,
            Potential::RadialTable { a, .. } => {
                a.iter().map(|v| (1.0 - v).abs()).fold((1.0 - self.a_inf()).abs(), f64::max)
            }
        }
    }

    /// `a` sampled on the grid.
    pub fn sample(&self, grid: &Grid) -> Field {
        let values = grid.radius_squared().into_iter().map(|r2| self.profile_r2(r2).0).collect();
        Field::from_raw(*grid, values)
    }

    /// `W` sampled on the grid.
    pub fn sample_w(&self, grid: &Grid) -> Field {
        let values = grid.radius_squared().into_iter().map(|r2| self.profile_r2(r2).1).collect();
        Field::from_raw(*grid, values)
    }
}

/// Monotone piecewise-cubic Hermite interpolation (Fritsch-Carlson);
/// returns value and derivative, constant beyond the last node.
fn pchip(x: &[f64], y: &[f64], t: f64) -> (f64, f64) {
    let n = x.len();
    if t >= x[n - 1] {
        return (y[n - 1], 0.0);
    }
    let secant = |i: usize| (y[i + 1] - y[i]) / (x[i + 1] - x[i]);
    // end slopes are zero, which keeps the radial profile smooth at r = 0
    let slope = |i: usize| -> f64 {
        if i == 0 || i == n - 1 {
            return 0.0;
        }
        let (s0, s1) = (secant(i - 1), secant(i));
        if s0 * s1 <= 0.0 {
            return 0.0;
        }
        let h0 = x[i] - x[i - 1];
        let h1 = x[i + 1] - x[i];
        let w1 = 2.0 * h1 + h0;
        let w2 = h1 + 2.0 * h0;
        (w1 + w2) / (w1 / s0 + w2 / s1)
    };
    let i = x.partition_point(|&v| v <= t).saturating_sub(1).min(n - 2);
    let h = x[i + 1] - x[i];
    let u = (t - x[i]) / h;
    let (m0, m1) = (slope(i), slope(i + 1));
    let (u2, u3) = (u * u, u * u * u);
    let v = (2.0 * u3 - 3.0 * u2 + 1.0) * y[i]
        + (u3 - 2.0 * u2 + u) * h * m0
        + (-2.0 * u3 + 3.0 * u2) * y[i + 1]
        + (u3 - u2) * h * m1;
    let dv = (6.0 * u2 - 6.0 * u) * (y[i] - y[i + 1]) / h
        + (3.0 * u2 - 4.0 * u + 1.0) * m0
        + (3.0 * u2 - 2.0 * u) * m1;
    (v, dv)
}

/// Outcome of one admissibility check.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Status {
    Pass,
    Fail,
    /// The condition cannot be evaluated as written (e.g. a nonpositive
    /// Lebesgue exponent).
    InadmissibleAsPrinted,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Verdict {
    pub name: String,
    pub status: Status,
    /// Signed slack; positive means satisfied.
    pub margin: Option<f64>,
    /// True when the verdict rests on grid sampling instead of closed forms.
    pub numeric_only: bool,
    pub detail: String,
}

impl Verdict {
    fn new(name: &str, ok: bool, margin: Option<f64>, numeric_only: bool, detail: String) -> Self {
        Self {
            name: name.to_string(),
            status: if ok { Status::Pass } else { Status::Fail },
            margin,
            numeric_only,
            detail,
        }
    }

    pub fn passed(&self) -> bool {
        self.status == Status::Pass
    }
}

/// `max{ d(d-2s)/(d^2 - 2s(d-2s)), 2d/(dp - 4s) }`.
pub fn a1_threshold(params: &PhysParams) -> f64 {
    let (d, s, p) = (params.d(), params.s, params.p);
    let first = d * (d - 2.0 * s) / (d * d - 2.0 * s * (d - 2.0 * s));
    let second = 2.0 * d / (d * p - 4.0 * s);
    first.max(second)
}

pub fn check_a1(a: &Potential, params: &PhysParams) -> Verdict {
    let a_star = a.a_star();
    let threshold = a1_threshold(params);
    let margin = a_star - threshold;
    Verdict::new(
        "A1",
        margin > 0.0 && a_star > 0.0,
        Some(margin),
        !a.is_analytic(),
        format!("a_* = {a_star}, threshold = {threshold}"),
    )
}

pub fn check_a2(a: &Potential) -> Verdict {
    let gap = (a.a_inf() - 1.0).abs();
    Verdict::new("A2", gap <= 1e-12, Some(-gap), false, format!("a_inf = {}", a.a_inf()))
}

/// `W >= 0` on the box with strict positivity on a set of positive measure.
pub fn check_a3(a: &Potential, grid: &Grid) -> Verdict {
    let w = a.sample_w(grid);
    let min_w = w.min();
    let strict = w.values().iter().filter(|&&v| v > 1e-10).count() as f64 * grid.cell_volume();
    let symbolic = match a {
        Potential::Constant { .. } => Some(false),
        Potential::InversePowerWell { .. } => Some(true),
        Potential::RadialTable { .. } => None,
    };
    let numeric = min_w >= -1e-12 && strict > 0.0;
    let ok = symbolic.unwrap_or(numeric) && numeric;
    Verdict::new(
        "A3",
        ok,
        Some(min_w.min(strict)),
        symbolic.is_none(),
        format!("min W = {min_w:.6e}, measure(W > 0) = {strict:.6e}"),
    )
}

/// `d a + W <= d` on the box, plus the closed form for built-in families.
pub fn check_a4(a: &Potential, params: &PhysParams, grid: &Grid) -> Verdict {
    let d = params.d();
    let excess = grid
        .radius_squared()
        .into_iter()
        .map(|r2| {
            let (v, w) = a.profile_r2(r2);
            d * v + w - d
        })
        .fold(f64::NEG_INFINITY, f64::max);
    let numeric = excess <= 1e-12;
    // well: d a + W - d = mu (1+r^2)^{-q-1} ((2q - d) r^2 - d) <= 0 iff 2q <= d
    let symbolic = match a {
        Potential::Constant { a0 } => Some(*a0 <= 1.0),
        Potential::InversePowerWell { q, .. } => Some(2.0 * q <= d),
        Potential::RadialTable { .. } => None,
    };
    let ok = symbolic.unwrap_or(numeric) && numeric;
    let detail = match symbolic {
        Some(sym) => format!("box max of d a + W - d = {excess:.6e}; closed form verdict {sym}"),
        None => format!("box max of d a + W - d = {excess:.6e}"),
    };
    Verdict::new("A4", ok, Some(-excess), symbolic.is_none(), detail)
}

/// Right-hand side of the `||W||_inf` bound.
pub fn a5_rhs(params: &PhysParams, a_star: f64) -> f64 {
    let (d, s, p) = (params.d(), params.s, params.p);
    (2.0 * d + p * (2.0 * s - d)) * ((d * p - 4.0 * s) * a_star - 2.0 * d) / (8.0 * (p - 2.0) * s)
}

pub fn check_a5(a: &Potential, params: &PhysParams) -> Verdict {
    let w_inf = a.w_sup();
    let rhs = a5_rhs(params, a.a_star());
    if rhs <= 0.0 {
        return Verdict::new(
            "A5",
            false,
            Some(rhs - w_inf),
            !a.is_analytic(),
            format!("right-hand side {rhs:.6e} <= 0 (A1 must hold first); ||W||_inf = {w_inf}"),
        );
    }
    Verdict::new(
        "A5",
        w_inf <= rhs,
        Some(rhs - w_inf),
        !a.is_analytic(),
        format!("||W||_inf = {w_inf}, bound = {rhs}"),
    )
}

/// Lebesgue exponents `(t1, t2) = (2d/(2d - dp + 4s), 2d/(dp - 4s))`.
pub fn a6_exponents(params: &PhysParams) -> (f64, f64) {
    let (d, s, p) = (params.d(), params.s, params.p);
    (2.0 * d / (2.0 * d - d * p + 4.0 * s), 2.0 * d / (d * p - 4.0 * s))
}

/// Right-hand side of the `||1 - a||_{t1}` bound for given `m_c` and
/// `||w_c||_{t2 p}^p`.
pub fn a6_rhs(params: &PhysParams, m_c: f64, wc_t2p_pow: f64) -> f64 {
    let (d, s, p) = (params.d(), params.s, params.p);
    let gap = params.supercritical_gap();
    let factor = 2f64.powf(1.0 - 4.0 * s / (d * (p - 2.0))) - 1.0;
    factor * d * p * (p - 2.0) / (gap * wc_t2p_pow) * m_c
}

pub fn check_a6(a: &Potential, params: &PhysParams, wc: &Field, m_c: f64) -> Verdict {
    let (t1, t2) = a6_exponents(params);
    let p = params.p;
    let wc_pow = lp_norm(wc, t2 * p).powf(p);
    let rhs = a6_rhs(params, m_c, wc_pow);
    let detail = format!("t1 = {t1}, t2 = {t2}, ||w_c||_(t2 p)^p = {wc_pow}, rhs = {rhs}");
    if a.is_constant_one() {
        // 1 - a vanishes identically; its norm is 0 for any exponent
        return Verdict::new("A6", rhs > 0.0, Some(rhs), false, format!("{detail}, lhs = 0"));
    }
    if !(t1 > 0.0) {
        return Verdict {
            name: "A6".into(),
            status: Status::InadmissibleAsPrinted,
            margin: None,
            numeric_only: false,
            detail: format!("{detail}; exponent t1 is nonpositive, L^t1 norm undefined"),
        };
    }
    let lhs = one_minus_a_norm(a, wc.grid(), t1);
    Verdict::new("A6", lhs < rhs, Some(rhs - lhs), true, format!("{detail}, lhs = {lhs}"))
}

fn one_minus_a_norm(a: &Potential, grid: &Grid, t: f64) -> f64 {
    let f = a.sample(grid).map(|v| 1.0 - v);
    lp_norm(&f, t.max(1.0))
}

/// Threshold `p m_c / (e^{(p-2) d h2 / 2} ||w_c||_p^p)` on `sup |1 - a|`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SupGap {
    pub threshold: f64,
    pub sup_one_minus_a: f64,
    pub h2: f64,
    pub passed: bool,
}

pub fn sup_gap_threshold(
    a: &Potential,
    params: &PhysParams,
    m_c: f64,
    wc_p_pow: f64,
    h2: f64,
) -> SupGap {
    let growth = ((params.p - 2.0) * params.d() * h2 / 2.0).exp();
    let threshold = params.p * m_c / (growth * wc_p_pow);
    let sup = a.sup_one_minus_a();
    SupGap { threshold, sup_one_minus_a: sup, h2, passed: sup < threshold }
}

/// `delta_0`, `lambda_0 = delta_0 / m_c` and the bracket `(2 theta, 3 theta]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Delta0 {
    pub delta0: f64,
    pub lambda0: f64,
    pub two_theta: f64,
    pub three_theta: f64,
    pub w_inf: f64,
    pub a_star: f64,
}

pub fn delta0(params: &PhysParams, m_c: f64, w_inf: f64, a_star: f64) -> Result<Delta0> {
    let (d, s, p) = (params.d(), params.s, params.p);
    let gap = params.supercritical_gap();
    if gap <= 0.0 {
        return Err(Error::Condition(format!("d(p-2) - 4s = {gap} <= 0")));
    }
    let a1_gap = (d * p - 4.0 * s) * a_star - 2.0 * d;
    if a1_gap <= 0.0 {
        return Err(Error::Condition(format!(
            "(dp - 4s) a_* - 2d = {a1_gap} <= 0: A1 fails, denominator has the wrong sign"
        )));
    }
    let first = 4.0 * (p * (2.0 * s - d) + 2.0 * d) / gap;
    let second = (p - 2.0) * w_inf / gap * 16.0 * s / a1_gap;
    let lambda0 = first + second;
    let theta = (4.0 * d - 2.0 * p * (d - 2.0 * s)) / gap;
    Ok(Delta0 {
        delta0: lambda0 * m_c,
        lambda0,
        two_theta: 2.0 * theta,
        three_theta: 3.0 * theta,
        w_inf,
        a_star,
    })
}

impl Delta0 {
    /// `2 theta < lambda_0 <= 3 theta` up to roundoff in the upper bound.
    pub fn in_bracket(&self) -> bool {
        self.lambda0 > self.two_theta && self.lambda0 <= self.three_theta * (1.0 + 1e-12)
    }
}

/// Every admissibility verdict and derived constant for one potential.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConditionReport {
    pub a_star: f64,
    pub a_inf: f64,
    pub w_inf: f64,
    pub t1: f64,
    pub t2: f64,
    pub a1_threshold: f64,
    pub a5_rhs: f64,
    pub a6_rhs: Option<f64>,
    pub delta0: Option<Delta0>,
    pub verdicts: Vec<Verdict>,
}

impl ConditionReport {
    pub fn verdict(&self, name: &str) -> Option<&Verdict> {
        self.verdicts.iter().find(|v| v.name == name)
    }

    /// A1 through A5 all pass.
    pub fn core_conditions_hold(&self) -> bool {
        ["A1", "A2", "A3", "A4", "A5"]
            .iter()
            .all(|n| self.verdict(n).map(Verdict::passed).unwrap_or(false))
    }
}

/// Runs A1-A5 on `grid` and `delta_0`; A6 is evaluated when `(w_c, m_c)` is
/// known and otherwise only reported if its exponent is inadmissible.
pub fn check_conditions(
    a: &Potential,
    params: &PhysParams,
    grid: &Grid,
    scaled: Option<(&Field, f64)>,
) -> ConditionReport {
    let (t1, t2) = a6_exponents(params);
    let mut verdicts = vec![
        check_a1(a, params),
        check_a2(a),
        check_a3(a, grid),
        check_a4(a, params, grid),
        check_a5(a, params),
    ];
    let mut a6 = None;
    let mut delta = None;
    // lambda_0 does not depend on m_c, so report it per unit m_c when absent
    let m_c = scaled.map(|(_, m)| m).unwrap_or(1.0);
    if let Some((wc, m_c)) = scaled {
        let v = check_a6(a, params, wc, m_c);
        let wc_pow = lp_norm(wc, t2 * params.p).powf(params.p);
        a6 = Some(a6_rhs(params, m_c, wc_pow));
        verdicts.push(v);
    } else if !(t1 > 0.0) && !a.is_constant_one() {
        verdicts.push(Verdict {
            name: "A6".into(),
            status: Status::InadmissibleAsPrinted,
            margin: None,
            numeric_only: false,
            detail: format!("t1 = {t1}, t2 = {t2}; exponent t1 is nonpositive, L^t1 norm undefined"),
        });
    }
    match delta0(params, m_c, a.w_sup(), a.a_star()) {
        Ok(d0) => {
            let ok = d0.in_bracket();
            verdicts.push(Verdict::new(
                "lambda0_bracket",
                ok,
                Some(d0.three_theta - d0.lambda0),
                !a.is_analytic(),
                format!("2 theta = {}, lambda_0 = {}, 3 theta = {}", d0.two_theta, d0.lambda0, d0.three_theta),
            ));
            delta = Some(d0);
        }
        Err(e) => verdicts.push(Verdict::new("lambda0_bracket", false, None, false, e.to_string())),
    }
    ConditionReport {
        a_star: a.a_star(),
        a_inf: a.a_inf(),
        w_inf: a.w_sup(),
        t1,
        t2,
        a1_threshold: a1_threshold(params),
        a5_rhs: a5_rhs(params, a.a_star()),
        a6_rhs: a6,
        delta0: delta,
        verdicts,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn params() -> PhysParams {
        PhysParams::new(2, 0.5, 3.5, 1.0).unwrap()
    }

    fn well(mu: f64, q: f64) -> Potential {
        Potential::InversePowerWell { mu, q }
    }

    fn grid() -> Grid {
        Grid::new(2, 64, 30.0).unwrap()
    }

    #[test]
    fn a1_threshold_and_verdicts() {
        assert!((a1_threshold(&params()) - 0.8).abs() < 1e-15);
        let v = check_a1(&well(0.05, 1.0), &params());
        assert!(v.passed());
        assert!((v.margin.unwrap() - 0.15).abs() < 1e-12);
        assert!(!check_a1(&well(0.3, 1.0), &params()).passed());
    }

    #[test]
    fn a2_and_a3() {
        assert!(check_a2(&well(0.2, 1.0)).passed());
        assert!(!check_a2(&Potential::Constant { a0: 0.9 }).passed());
        assert!(check_a2(&Potential::Constant { a0: 1.0 }).passed());
        assert!(!check_a3(&Potential::Constant { a0: 1.0 }, &grid()).passed());
        assert!(check_a3(&well(0.05, 1.0), &grid()).passed());
    }

    #[test]
    fn a4_closed_form_and_box_agree() {
        let p = params();
        for mu in [0.05, 0.3, 0.9] {
            let v = check_a4(&well(mu, 1.0), &p, &grid());
            assert!(v.passed(), "{v:?}");
        }
        let v = check_a4(&well(0.05, 2.0), &p, &grid());
        assert!(!v.passed());
        assert!(v.margin.unwrap() < 0.0, "numeric check must detect the violation too");
    }

    #[test]
    fn a5_rhs_arithmetic() {
        let rhs = a5_rhs(&params(), 0.9);
        assert!((rhs - 0.5 * (5.0 * 0.9 - 4.0) / 6.0).abs() < 1e-15);
        let v = check_a5(&well(0.05, 1.0), &params());
        assert!(v.passed());
        assert!((v.margin.unwrap() - (0.0625 - 0.025)).abs() < 1e-12);
        let v = check_a5(&well(0.15, 1.0), &params());
        assert!(!v.passed());
        assert!((well(0.15, 1.0).w_sup() - 0.075).abs() < 1e-15);
        // A5 admissible iff mu <= 1/11 for this family and parameter set
        assert!(check_a5(&well(1.0 / 11.0 - 1e-9, 1.0), &params()).passed());
        assert!(!check_a5(&well(1.0 / 11.0 + 1e-9, 1.0), &params()).passed());
        assert!(!check_a5(&well(0.3, 1.0), &params()).passed());
    }

    #[test]
    fn w_sup_closed_form_matches_dense_sampling() {
        for (mu, q) in [(0.05, 1.0), (0.2, 2.5), (0.4, 0.5)] {
            let a = well(mu, q);
            let rstar2 = 1.0 / q;
            let sampled = (0..=200_000)
                .map(|i| a.profile_r2(rstar2 * (i as f64 / 100_000.0)).1)
                .fold(0.0, f64::max);
            assert!((sampled - a.w_sup()).abs() < 1e-8, "mu {mu} q {q}");
        }
    }

    #[test]
    fn gradient_is_consistent_with_w() {
        let a = well(0.2, 1.5);
        let x = [0.7, -1.2];
        let g = a.gradient(&x);
        let eps = 1e-6;
        for i in 0..2 {
            let mut xp = x;
            let mut xm = x;
            xp[i] += eps;
            xm[i] -= eps;
            let fd = (a.value(&xp) - a.value(&xm)) / (2.0 * eps);
            assert!((fd - g[i]).abs() < 1e-8);
        }
        let w = x[0] * g[0] + x[1] * g[1];
        assert!((w - a.w(&x)).abs() < 1e-14);
    }

    #[test]
    fn a6_exponents_are_inadmissible() {
        let (t1, t2) = a6_exponents(&params());
        assert!((t1 + 4.0).abs() < 1e-14);
        assert!((t2 - 0.8).abs() < 1e-14);
        let g = grid();
        let wc = Field::from_fn(g, |x| (-(x[0] * x[0] + x[1] * x[1])).exp());
        let v = check_a6(&well(0.05, 1.0), &params(), &wc, 1.0);
        assert_eq!(v.status, Status::InadmissibleAsPrinted);
        let v = check_a6(&Potential::Constant { a0: 1.0 }, &params(), &wc, 1.0);
        assert!(v.passed());
    }

    #[test]
    fn delta0_arithmetic() {
        let p = params();
        let d = delta0(&p, 1.7, 0.0, 0.95).unwrap();
        assert!((d.delta0 - 2.0 * 1.7).abs() < 1e-12);
        assert!((d.lambda0 - 2.0).abs() < 1e-14);
        assert!((d.two_theta - 2.0).abs() < 1e-14 && (d.three_theta - 3.0).abs() < 1e-14);
        let d = delta0(&p, 1.0, 0.025, 0.95).unwrap();
        assert!((d.lambda0 - 2.4).abs() < 1e-12);
        assert!(d.in_bracket());
        // W above the A5 bound pushes lambda_0 past 3 theta
        let bound = a5_rhs(&p, 0.95);
        let d = delta0(&p, 1.0, bound * 1.01, 0.95).unwrap();
        assert!(d.lambda0 > d.three_theta);
        let d = delta0(&p, 1.0, bound, 0.95).unwrap();
        assert!((d.lambda0 - d.three_theta).abs() < 1e-12);
        assert!(delta0(&p, 1.0, 0.0, 0.7).is_err());
    }

    #[test]
    fn sup_gap_monotone_in_h2() {
        let a = well(0.05, 1.0);
        let p = params();
        let t1 = sup_gap_threshold(&a, &p, 1.0, 7.0, 0.5).threshold;
        let t2 = sup_gap_threshold(&a, &p, 1.0, 7.0, 1.0).threshold;
        assert!(t2 < t1);
        let c = sup_gap_threshold(&Potential::Constant { a0: 1.0 }, &p, 1.0, 7.0, 3.0);
        assert_eq!(c.sup_one_minus_a, 0.0);
        assert!(c.passed);
    }

    #[test]
    fn full_report_for_reference_wells() {
        let p = params();
        let r = check_conditions(&well(0.05, 1.0), &p, &grid(), None);
        assert!(r.core_conditions_hold());
        let d0 = r.delta0.as_ref().unwrap();
        assert!((d0.lambda0 - 2.4).abs() < 1e-12);
        let r = check_conditions(&well(0.3, 1.0), &p, &grid(), None);
        assert!(!r.verdict("A1").unwrap().passed());
        let r = check_conditions(&well(0.15, 1.0), &p, &grid(), None);
        assert!(r.verdict("A1").unwrap().passed());
        assert!(!r.verdict("A5").unwrap().passed());
        assert!(!r.verdict("lambda0_bracket").unwrap().passed());
    }

    #[test]
    fn radial_table_tracks_the_well() {
        let exact = well(0.1, 1.0);
        let r: Vec<f64> = (0..=400).map(|i| i as f64 * 0.1).collect();
        let a: Vec<f64> = r.iter().map(|&x| exact.profile_r2(x * x).0).collect();
        let table = Potential::RadialTable { r, a };
        table.validate().unwrap();
        assert!(!table.is_analytic());
        for x in [0.0, 0.35, 1.0, 2.7, 10.0] {
            let (va, wa) = exact.profile_r2(x * x);
            let (vt, wt) = table.profile_r2(x * x);
            assert!((va - vt).abs() < 1e-4, "a at {x}");
            assert!((wa - wt).abs() < 2e-3, "W at {x}");
        }
        assert!((table.w_sup() - 0.05).abs() < 2e-3);
        let v = check_a1(&table, &params());
        assert!(v.numeric_only);
    }

    #[test]
    fn potential_config_json() {
        let a: Potential =
            serde_json::from_str(r#"{"family":"inverse_power_well","mu":0.05,"q":1.0}"#).unwrap();
        assert_eq!(a, well(0.05, 1.0));
        let c: Potential = serde_json::from_str(r#"{"family":"constant","a0":1.0}"#).unwrap();
        assert_eq!(c, Potential::Constant { a0: 1.0 });
    }
}
