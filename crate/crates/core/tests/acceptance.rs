//! Acceptance suite: one line per criterion, nonzero exit if any fails.
//! Reference values are computed here from closed forms, not taken from the
//! library.

use std::f64::consts::PI;
use std::process::ExitCode;
use std::time::Instant;

use fnls_core::boundstate::{boundary_samples, choose_box, family_max, initial_guess, saddle_solve, SaddleContext};
use fnls_core::config::RunConfig;
use fnls_core::functionals::{energy_finf, multiplier, pohozaev_residual};
use fnls_core::groundstate::{rescale_to_mass, solve_limit_equation, GroundState, GroundStateOptions};
use fnls_core::io::{load_field_with_meta, save_field_with, FieldMeta};
use fnls_core::pipeline::{run_bound, run_verify, Suite, VerifyOptions};
use fnls_core::potential::{check_conditions, Status};
use fnls_core::spectral::{frac_laplacian, gagliardo_energy, l2_norm, lp_power};
use fnls_core::verification::{verify_gradient, verify_min_inequality};
use fnls_core::{Field, Grid, PhysParams, Potential, Result};

const CLASSICAL_TOL: f64 = 1e-6;
const CLASSICAL_SECONDS: f64 = 10.0;
const BENJAMIN_ONO_TOL: f64 = 1e-2;
const MASS_TOL: f64 = 1e-8;
const ENERGY_SCALING_TOL: f64 = 1e-5;
const MULTIPLIER_TOL: f64 = 1e-4;
const POHOZAEV_TOL: f64 = 1e-6;
const KINETIC_TOL: f64 = 1e-5;
const ENERGY_RATIO_TOL: f64 = 1e-3;
const LAMBDA0_TOL: f64 = 1e-9;
const BOUND_TANGENT_TOL: f64 = 1e-6;
const BOUND_SECONDS: f64 = 300.0;
const MIN_ORACLE_TOL: f64 = 1e-9;
const MIN_SECONDS: f64 = 30.0;
const SPLITTING_TOL: f64 = 1e-3;
const EIGEN_TOL: f64 = 1e-12;
const GRADIENT_TOL: f64 = 1e-6;
const GRADIENT_FIELDS: usize = 20;

const WELL: Potential = Potential::InversePowerWell { mu: 0.05, q: 1.0 };

fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs()
}

fn max_rel_error(w: &Field, exact: impl Fn(f64) -> f64) -> f64 {
    let coords = w.grid().coords();
    let (mut err, mut peak) = (0.0f64, 0.0f64);
    for (x, v) in coords.iter().zip(w.values()) {
        let e = exact(*x);
        err = err.max((v - e).abs());
        peak = peak.max(e.abs());
    }
    err / peak
}

/// `|P| / (s K)` of a state with constant coefficient `a`.
fn pohozaev_rel(u: &Field, a: &Potential, params: &PhysParams) -> Result<f64> {
    Ok((pohozaev_residual(u, a, params)? / (params.s * gagliardo_energy(u, params.s)?)).abs())
}

struct Outcome {
    passed: bool,
    detail: String,
}

fn outcome(passed: bool, detail: String) -> Result<Outcome> {
    Ok(Outcome { passed, detail })
}

/// Every state whose Pohozaev defect is collected for criterion 4.
#[derive(Default)]
struct Pohozaev {
    states: Vec<(String, f64)>,
    /// Benjamin-Ono defect on the L = 800 box, reported only.
    box_defect: f64,
}

fn ground(d: usize, n: usize, half_width: f64, s: f64, p: f64, calibrate: bool) -> Result<GroundState> {
    let grid = Grid::new(d, n, half_width)?;
    let params = PhysParams::relaxed(d, s, p, 1.0)?;
    let opts = GroundStateOptions { calibrate_scale: calibrate, ..Default::default() };
    solve_limit_equation(&grid, &params, &opts)
}

fn classical(poh: &mut Pohozaev) -> Result<Outcome> {
    let t = Instant::now();
    let gs = ground(1, 4096, 40.0, 1.0, 3.0, false)?;
    let secs = t.elapsed().as_secs_f64();
    let err = max_rel_error(&gs.w, |x| 1.5 / (x / 2.0).cosh().powi(2));
    poh.states.push(("classical ground".into(), gs.relative_pohozaev()?.abs()));
    outcome(err <= CLASSICAL_TOL && secs < CLASSICAL_SECONDS, format!("max rel error {err:.2e}, {secs:.2} s"))
}

fn benjamin_ono(poh: &mut Pohozaev) -> Result<Outcome> {
    let gs = ground(1, 32768, 800.0, 0.5, 3.0, false)?;
    let err = max_rel_error(&gs.w, |x| 2.0 / (1.0 + x * x));
    let l2 = rel(lp_power(&gs.w, 2.0), 2.0 * PI);
    let l3 = rel(lp_power(&gs.w, 3.0), 3.0 * PI);
    let semi = rel(gagliardo_energy(&gs.w, 0.5)?, PI);
    poh.box_defect = gs.relative_pohozaev()?.abs();
    // The periodic images of the 1/x^2 tail leave a defect of about 6.6 / L^2
    // at any resolution, so the state enters the Pohozaev check on a box
    // four times wider at the same spacing.
    let wide = ground(1, 131072, 3200.0, 0.5, 3.0, false)?;
    poh.states.push(("Benjamin-Ono ground, L = 3200".into(), wide.relative_pohozaev()?.abs()));
    let worst = err.max(l2).max(l3).max(semi);
    outcome(
        worst <= BENJAMIN_ONO_TOL,
        format!("profile {err:.2e}, |w|_2^2 {l2:.2e}, |w|_3^3 {l3:.2e}, seminorm {semi:.2e}"),
    )
}

fn scaling(gs: &GroundState, poh: &mut Pohozaev) -> Result<Outcome> {
    let one = Potential::Constant { a0: 1.0 };
    let mut passed = true;
    let mut worst = [0.0f64; 3];
    for ratio in [0.5, 1.0, 2.0] {
        let c = ratio * gs.c0;
        let st = rescale_to_mass(gs, c)?;
        let params = PhysParams::new(2, 0.5, 3.5, c)?;
        let mass = (l2_norm(&st.wc) - c).abs();
        // theta = 1 for these exponents
        let energy = rel(energy_finf(&st.wc, &params)?.total / gs.m_c0, 1.0 / ratio);
        let lambda = rel(multiplier(&st.wc, &one, &params)?, -ratio.powi(-3));
        passed &= mass <= MASS_TOL && energy <= ENERGY_SCALING_TOL && lambda <= MULTIPLIER_TOL;
        worst = [worst[0].max(mass), worst[1].max(energy), worst[2].max(lambda)];
        poh.states.push((format!("w_c at c/c0 = {ratio}"), pohozaev_rel(&st.wc, &one, &params)?));
    }
    outcome(passed, format!("mass {:.1e}, energy ratio {:.1e}, multiplier {:.1e}", worst[0], worst[1], worst[2]))
}

fn kinetic_identity(gs: &GroundState) -> Result<Outcome> {
    let (d, s, p) = (2.0, 0.5, 3.5);
    let factor = 2.0 * d * (p - 2.0) / (d * (p - 2.0) - 4.0 * s);
    let mut worst = 0.0f64;
    for ratio in [0.5, 1.0, 2.0] {
        let st = rescale_to_mass(gs, ratio * gs.c0)?;
        let k = gagliardo_energy(&st.wc, s)?;
        worst = worst.max(rel(k, factor * st.m_c));
    }
    let energy_ratio = (gs.m_c0 / (gs.c0 * gs.c0) - 1.0).abs();
    outcome(
        worst <= KINETIC_TOL && energy_ratio <= ENERGY_RATIO_TOL,
        format!("kinetic identity {worst:.1e}, |m_c0 / c0^2 - 1| = {energy_ratio:.1e}"),
    )
}

fn conditions(gs: &GroundState) -> Result<Outcome> {
    let params = PhysParams::new(2, 0.5, 3.5, gs.c0)?;
    let grid = *gs.w.grid();
    let core = ["A1", "A2", "A3", "A4", "A5"];
    let status = |mu: f64, name: &str| {
        let report = check_conditions(&Potential::InversePowerWell { mu, q: 1.0 }, &params, &grid, None);
        report.verdict(name).map(|v| v.status)
    };
    let shallow = core.iter().all(|n| status(0.05, n) == Some(Status::Pass));
    let deep = status(0.3, "A1") == Some(Status::Fail);
    let middle = status(0.15, "A5") == Some(Status::Fail);
    let a6 = status(0.05, "A6") == Some(Status::InadmissibleAsPrinted);

    let report = check_conditions(&WELL, &params, &grid, None);
    let d0 = report.delta0.as_ref().expect("delta_0 defined for the shallow well");
    // sup of x . grad a = 2 mu r^2 / (1 + r^2)^2, attained at r = 1
    let w_sup = (0..=200_000)
        .map(|i| {
            let r2 = (i as f64 * 1e-4).powi(2);
            2.0 * 0.05 * r2 / (1.0 + r2).powi(2)
        })
        .fold(0.0, f64::max);
    let (d, s, p, a_star) = (2.0, 0.5, 3.5, 0.95);
    let gap = d * (p - 2.0) - 4.0 * s;
    let lambda0 = 4.0 * (p * (2.0 * s - d) + 2.0 * d) / gap
        + (p - 2.0) * w_sup / gap * 16.0 * s / ((d * p - 4.0 * s) * a_star - 2.0 * d);
    let theta = (4.0 * d - 2.0 * p * (d - 2.0 * s)) / gap;
    let value_ok = (d0.lambda0 - 2.4).abs() <= LAMBDA0_TOL && (lambda0 - 2.4).abs() <= LAMBDA0_TOL;
    let bracket = 2.0 * theta < d0.lambda0 && d0.lambda0 <= 3.0 * theta + LAMBDA0_TOL;
    outcome(
        shallow && deep && middle && a6 && value_ok && bracket,
        format!(
            "mu 0.05 A1-A5 {shallow}, mu 0.3 fails A1 {deep}, mu 0.15 fails A5 {middle}, A6 inadmissible {a6}, \
             delta0 / m_c = {:.12} in ({}, {}]",
            d0.lambda0,
            2.0 * theta,
            3.0 * theta
        ),
    )
}

fn bound_state(gs: &GroundState, poh: &mut Pohozaev) -> Result<Outcome> {
    let t = Instant::now();
    let c = gs.c0;
    let st = rescale_to_mass(gs, c)?;
    let params = PhysParams::new(2, 0.5, 3.5, c)?;
    let mut cfg = RunConfig::default();
    cfg.solver.tol_grad = BOUND_TANGENT_TOL / c;
    let cond = check_conditions(&WELL, &params, st.wc.grid(), Some((&st.wc, st.m_c)));
    let bx = choose_box(&st.wc, &WELL, &params, st.m_c, cfg.solver.linking_eps * st.m_c, cfg.solver.sampling)?;
    let best = family_max(&bx, &st.wc, &WELL, &params)?;
    let boundary_max = boundary_samples(&bx, &st.wc, &WELL, &params)?
        .iter()
        .map(|b| b.value)
        .fold(f64::NEG_INFINITY, f64::max);
    let context = SaddleContext {
        m_c: st.m_c,
        lambda_c: st.lambda_c,
        delta0: cond.delta0.clone(),
        boundary_max: Some(bx.boundary_max),
        family_value: Some(best.value),
    };
    let sol = saddle_solve(&initial_guess(&st.wc, &best)?, &WELL, &params, context, &cfg.saddle_options())?;
    let secs = t.elapsed().as_secs_f64();

    let lower = -cond.delta0.as_ref().expect("delta_0").delta0 / (c * c);
    let m = gs.m_c0;
    let bary = sol.barycenter.map(|b| b.iter().map(|v| v * v).sum::<f64>().sqrt());
    let spacing = sol.u.grid().spacing();
    poh.states.push(("bound state".into(), pohozaev_rel(&sol.u, &WELL, &params)?));
    let passed = sol.tangent_res <= BOUND_TANGENT_TOL
        && lower < sol.lambda
        && sol.lambda < 0.0
        && m < sol.energy
        && sol.energy < 2.0 * m
        && bary.is_some_and(|b| b <= 2.0 * spacing)
        && boundary_max < sol.energy
        && secs < BOUND_SECONDS;
    outcome(
        passed,
        format!(
            "residual {:.1e}, lambda {:.5} in ({lower:.4}, 0), energy {:.5} in ({m:.4}, {:.4}), |beta| {:.1e} \
             (spacing {spacing:.3}), boundary max {boundary_max:.5}, {secs:.1} s",
            sol.tangent_res,
            sol.lambda,
            sol.energy,
            2.0 * m,
            bary.unwrap_or(f64::NAN)
        ),
    )
}

fn min_inequality() -> Result<Outcome> {
    let mut passed = true;
    let mut parts = Vec::new();
    for (theta, a, floor) in [(1.0, 1.2, 3.5), (6.0, 6.5, 11.0)] {
        let t = Instant::now();
        let r = verify_min_inequality(theta, a, 2000)?;
        let secs = t.elapsed().as_secs_f64();
        // diagonal minimizer of 2 t^{-theta/2} + 2 A t, clamped to x + y <= 1
        let x = (theta / (2.0 * a)).powf(2.0 / (theta + 2.0)).min(0.5);
        let oracle = 2.0 * x.powf(-theta / 2.0) + 2.0 * a * x;
        passed &= r.min_value >= floor && (r.min_value - oracle).abs() <= MIN_ORACLE_TOL && secs < MIN_SECONDS;
        parts.push(format!("theta {theta}: min {:.6} (closed form {oracle:.6}), {secs:.2} s", r.min_value));
    }
    outcome(passed, parts.join("; "))
}

fn splitting() -> Result<Outcome> {
    let run = run_verify(&RunConfig::default(), &VerifyOptions { suite: Suite::Splitting, ..Default::default() });
    let value = run.report.verification.get("splitting").cloned().unwrap_or_default();
    let rows = value["rows"].as_array().cloned().unwrap_or_default();
    let last = rows.last().cloned().unwrap_or_default();
    let (mass, energy) = (last["mass_error"].as_f64().unwrap_or(f64::NAN), last["energy_error"].as_f64().unwrap_or(f64::NAN));
    let monotone = value["mass_monotone"] == true && value["energy_monotone"] == true;
    outcome(
        run.report.error.is_none() && monotone && mass <= SPLITTING_TOL && energy <= SPLITTING_TOL,
        format!("monotone {monotone}, widest separation: mass {mass:.1e}, energy {energy:.1e}"),
    )
}

fn infrastructure() -> Result<Outcome> {
    // field file round trip
    let grid = Grid::new(2, 32, 5.0)?;
    let f = Field::from_fn(grid, |x| (x[0] * 1.3).sin() * (-x[1] * x[1]).exp() + 1e-300);
    let dir = tempfile::tempdir()?;
    let path = dir.path().join("f.fld");
    let meta = FieldMeta { s: 0.5, p: 3.5 };
    save_field_with(&f, meta, &path)?;
    let (g, back) = load_field_with_meta(&path)?;
    let bits = |f: &Field| f.values().iter().map(|v| v.to_bits()).collect::<Vec<_>>();
    let round_trip = bits(&f) == bits(&g) && f.grid() == g.grid() && back == meta;

    // plane wave cos(k . x) on a lattice mode: (-Delta)^s multiplies by |k|^{2s}
    let grid = Grid::new(2, 64, 7.0)?;
    let k = [3.0 * PI / 7.0, 5.0 * PI / 7.0];
    let mut eigen = 0.0f64;
    for s in [0.25, 0.5, 0.75, 1.0] {
        let wave = Field::from_fn(grid, |x| (k[0] * x[0] + k[1] * x[1]).cos());
        let lam = (k[0] * k[0] + k[1] * k[1]).powf(s);
        let lap = frac_laplacian(&wave, s)?;
        let err = lap.values().iter().zip(wave.values()).map(|(a, b)| (a - lam * b).abs()).fold(0.0, f64::max) / lam;
        eigen = eigen.max(err);
    }

    // directional derivatives of the four functionals
    let params = PhysParams::new(2, 0.5, 3.5, 1.0)?;
    let grad = verify_gradient(&WELL, &params, Grid::new(2, 64, 8.0)?, -0.8, 7, GRADIENT_FIELDS)?;

    // same configuration, different thread counts, identical reports
    let mut cfg = RunConfig::default();
    cfg.grid.n = 128;
    cfg.grid.half_width = 16.0;
    let report = |threads: usize| -> Result<String> {
        let pool = rayon::ThreadPoolBuilder::new().num_threads(threads).build().expect("thread pool");
        pool.install(|| run_bound(&cfg).report.deterministic_json())
    };
    let (one, four) = (report(1)?, report(4)?);
    let reproducible = one == four && !one.contains("\"error\": {");

    outcome(
        round_trip && eigen <= EIGEN_TOL && grad.errors.len() == GRADIENT_FIELDS && grad.max_error <= GRADIENT_TOL && reproducible,
        format!(
            "round trip {round_trip}, eigenvalue error {eigen:.1e}, gradient error {:.1e} over {} fields, reports identical {reproducible}",
            grad.max_error,
            grad.errors.len()
        ),
    )
}

fn main() -> ExitCode {
    let mut poh = Pohozaev::default();
    let mut lines: Vec<(&str, Result<Outcome>)> = Vec::new();
    lines.push(("1 classical ground state", classical(&mut poh)));
    lines.push(("2 Benjamin-Ono ground state", benjamin_ono(&mut poh)));
    match ground(2, 256, 30.0, 0.5, 3.5, true) {
        Ok(gs) => {
            lines.push(("3 scaling laws", scaling(&gs, &mut poh)));
            lines.push(("5 kinetic identity and m_c0 / c0^2", kinetic_identity(&gs)));
            lines.push(("6 condition checker", conditions(&gs)));
            poh.states.push(("2d ground".into(), gs.relative_pohozaev().map(f64::abs).unwrap_or(f64::NAN)));
            lines.push(("7 bound state", bound_state(&gs, &mut poh)));
        }
        Err(e) => {
            for name in ["3 scaling laws", "5 kinetic identity and m_c0 / c0^2", "6 condition checker", "7 bound state"] {
                lines.push((name, Err(fnls_core::Error::Config(format!("2d ground state: {e}")))));
            }
        }
    }
    let worst = poh.states.iter().fold(("none".to_string(), 0.0f64), |acc, (n, v)| if *v > acc.1 || v.is_nan() { (n.clone(), *v) } else { acc });
    lines.push((
        "4 Pohozaev identity",
        outcome(
            poh.states.len() >= 7 && poh.states.iter().all(|(_, v)| *v <= POHOZAEV_TOL),
            format!(
                "{} states, worst |P| / (s K) = {:.1e} ({}); Benjamin-Ono on L = 800: {:.1e}",
                poh.states.len(),
                worst.1,
                worst.0,
                poh.box_defect
            ),
        ),
    ));
    lines.push(("8 minimum inequality", min_inequality()));
    lines.push(("9 splitting additivity", splitting()));
    lines.push(("10 infrastructure", infrastructure()));
    lines.sort_by_key(|(name, _)| name.split(' ').next().and_then(|n| n.parse::<u32>().ok()));

    let mut failures = 0;
    for (name, result) in &lines {
        let (passed, detail) = match result {
            Ok(o) => (o.passed, o.detail.clone()),
            Err(e) => (false, format!("error: {e}")),
        };
        failures += usize::from(!passed);
        println!("{} criterion {name}: {detail}", if passed { "PASS" } else { "FAIL" });
    }
    println!("acceptance: {} of {} criteria passed", lines.len() - failures, lines.len());
    if failures == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
