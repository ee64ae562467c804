//! `fnls`: ground states, scaling, condition checks, bound states,
//! verification suites and plots from the command line.

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use fnls_core::config::RunConfig;
use fnls_core::groundstate::GroundState;
use fnls_core::io::{load_field_with_meta, save_field_with};
use fnls_core::pipeline::{self, Run, Suite, VerifyOptions};
use fnls_core::report::{read_trajectory_csv, write_trajectory_csv, Outcome, RunReport};
use fnls_core::svg::{boundary_strip, line_chart, Series};
use fnls_core::{Error, Potential};

#[derive(Parser)]
#[command(name = "fnls", version, about = "Normalized bound states of the fractional NLS")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Solve the limit equation for the ground state w.
    Ground(Common),
    /// Check the mass-scaling laws of the ground state and emit w_c.
    Scale {
        #[command(flatten)]
        common: Common,
        /// Ground state to rescale instead of solving afresh.
        #[arg(long)]
        input: Option<PathBuf>,
        /// Mass ratios c/c0.
        #[arg(long, value_delimiter = ',', default_value = "0.5,1,2")]
        ratios: Vec<f64>,
    },
    /// Evaluate the admissibility conditions of a potential.
    CheckPotential(Common),
    /// Build the linking box and run the saddle search.
    Bound {
        #[command(flatten)]
        common: Common,
        /// CSV of the solver trajectory.
        #[arg(long)]
        series: Option<PathBuf>,
        /// Directory for SVG charts.
        #[arg(long)]
        plots: Option<PathBuf>,
    },
    /// Run verification suites.
    Verify {
        #[command(flatten)]
        common: Common,
        /// minimax, h0, splitting, scaling, gradient or all.
        #[arg(long, default_value = "all")]
        suite: String,
        /// Exponent of the minimum inequality; requires --A.
        #[arg(long, requires = "big_a")]
        theta: Option<f64>,
        /// Linear coefficient of the minimum inequality, larger than theta.
        #[arg(long = "A", id = "big_a", requires = "theta")]
        big_a: Option<f64>,
        /// Lattice divisions per unit in the minimum-inequality scan.
        #[arg(long, default_value_t = 2000)]
        grid_n: usize,
        /// Values of the potential term in the h0 bound.
        #[arg(long, value_delimiter = ',', default_value = "0,0.001,0.01,0.1")]
        proxies: Vec<f64>,
        /// Mass ratios c/c0 of the scaling suite.
        #[arg(long, value_delimiter = ',', default_value = "0.5,1,2")]
        ratios: Vec<f64>,
        /// Random fields in the gradient suite.
        #[arg(long, default_value_t = 20)]
        fields: usize,
    },
    /// Render SVG charts from a bound-state report.
    Plot {
        /// Report written by `fnls bound`.
        #[arg(long)]
        report: PathBuf,
        /// Trajectory CSV; the report's own trajectory otherwise.
        #[arg(long)]
        series: Option<PathBuf>,
        /// Output directory.
        #[arg(long)]
        out: PathBuf,
    },
}

#[derive(Args, Clone)]
struct Common {
    /// JSON run configuration; flags override its fields.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Field file to write.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Report file to write; printed to stdout when absent.
    #[arg(long)]
    report: Option<PathBuf>,
    /// Seed of the random fields in the gradient suite.
    #[arg(long)]
    seed: Option<u64>,
    /// Worker threads; results do not depend on it.
    #[arg(long, env = "FNLS_THREADS")]
    threads: Option<usize>,
    /// Spatial dimension, 1 or 2.
    #[arg(long)]
    dim: Option<usize>,
    /// Fractional order in (0, 1].
    #[arg(long)]
    s: Option<f64>,
    /// Nonlinearity exponent.
    #[arg(long)]
    p: Option<f64>,
    /// Prescribed mass; c0 when absent.
    #[arg(long)]
    c: Option<f64>,
    /// Points per axis, a power of two.
    #[arg(long)]
    n: Option<usize>,
    /// Half-width of the periodic box [-L, L).
    #[arg(long = "L")]
    half_width: Option<f64>,
    /// Depth of the inverse-power well.
    #[arg(long)]
    mu: Option<f64>,
    /// Decay exponent of the inverse-power well.
    #[arg(long)]
    q: Option<f64>,
    /// Solve the ground state on the requested lattice without retuning its scale.
    #[arg(long)]
    no_calibrate: bool,
}

impl Common {
    fn config(&self) -> fnls_core::Result<RunConfig> {
        let mut cfg = match &self.config {
            Some(path) => RunConfig::load(path)?,
            None => RunConfig::default(),
        };
        if let Some(v) = self.dim {
            cfg.grid.d = v;
        }
        if let Some(v) = self.n {
            cfg.grid.n = v;
        }
        if let Some(v) = self.half_width {
            cfg.grid.half_width = v;
        }
        if let Some(v) = self.s {
            cfg.phys.s = v;
        }
        if let Some(v) = self.p {
            cfg.phys.p = v;
        }
        if self.c.is_some() {
            cfg.phys.c = self.c;
        }
        if let Some(v) = self.seed {
            cfg.seed = v;
        }
        if self.no_calibrate {
            cfg.solver.calibrate_scale = false;
        }
        if self.mu.is_some() || self.q.is_some() {
            let (mu0, q0) = match cfg.potential {
                Potential::InversePowerWell { mu, q } => (mu, q),
                _ => (0.05, 1.0),
            };
            cfg.potential = Potential::InversePowerWell { mu: self.mu.unwrap_or(mu0), q: self.q.unwrap_or(q0) };
        }
        if self.out.is_some() {
            cfg.output.field = self.out.clone();
        }
        if self.report.is_some() {
            cfg.output.report = self.report.clone();
        }
        Ok(cfg)
    }
}

fn set_threads(threads: Option<usize>) -> fnls_core::Result<()> {
    if let Some(n) = threads {
        if n == 0 {
            return Err(Error::Config("--threads must be positive".into()));
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| Error::Config(format!("thread pool: {e}")))?;
    }
    Ok(())
}

fn config_failure(command: &str, e: &Error) -> ExitCode {
    eprintln!("fnls {command}: {e}");
    ExitCode::from(Outcome::ConfigError.exit_code() as u8)
}

/// Writes the artifacts of a run and reports its outcome.
fn finish(run: Run, cfg: &RunConfig, series: Option<&Path>, plots: Option<&Path>) -> ExitCode {
    let Run { report, artifacts } = run;
    let mut outcome = report.outcome();
    let mut write_errors = Vec::new();
    if let (Some((field, meta)), Some(path)) = (&artifacts.field, &cfg.output.field) {
        if let Err(e) = save_field_with(field, *meta, path) {
            write_errors.push(format!("field {}: {e}", path.display()));
        }
    }
    if let (Some(traj), Some(path)) = (&artifacts.trajectory, series.or(cfg.output.series.as_deref())) {
        if let Err(e) = write_trajectory_csv(traj, path) {
            write_errors.push(format!("series {}: {e}", path.display()));
        }
    }
    if let Some(dir) = plots.or(cfg.output.plots.as_deref()) {
        if report.bound.is_some() {
            if let Err(e) = render_plots(&report, None, dir) {
                write_errors.push(format!("plots {}: {e}", dir.display()));
            }
        }
    }
    match &cfg.output.report {
        Some(path) => {
            if let Err(e) = report.write(path) {
                write_errors.push(format!("report {}: {e}", path.display()));
            }
        }
        None => match report.to_json() {
            Ok(text) => print!("{text}"),
            Err(e) => write_errors.push(format!("report: {e}")),
        },
    }
    for c in &report.checks {
        eprintln!("[{}] {}{}", if c.passed { "pass" } else { "FAIL" }, c.name, value_suffix(c));
    }
    if let Some(err) = &report.error {
        eprintln!("fnls {}: {} ({})", report.command, err.message, err.kind);
    }
    for e in &write_errors {
        eprintln!("fnls {}: cannot write {e}", report.command);
    }
    if !write_errors.is_empty() && outcome == Outcome::Success {
        outcome = Outcome::SolverError;
    }
    ExitCode::from(outcome.exit_code() as u8)
}

fn value_suffix(c: &fnls_core::report::Check) -> String {
    let mut s = String::new();
    if let Some(v) = c.value {
        s.push_str(&format!(": {v:.6e}"));
    }
    match (c.lower, c.upper) {
        (Some(lo), Some(hi)) => s.push_str(&format!(" in ({lo:.6e}, {hi:.6e})")),
        (Some(lo), None) => s.push_str(&format!(" vs lower {lo:.6e}")),
        (None, Some(hi)) => s.push_str(&format!(" vs upper {hi:.6e}")),
        (None, None) => {}
    }
    s
}

fn render_plots(report: &RunReport, series: Option<&Path>, dir: &Path) -> fnls_core::Result<Vec<PathBuf>> {
    let bound = report
        .bound
        .as_ref()
        .ok_or_else(|| Error::Config("report has no bound-state section to plot".into()))?;
    std::fs::create_dir_all(dir)?;
    let energy: Vec<[f64; 2]> = match series {
        Some(path) => read_trajectory_csv(&std::fs::read_to_string(path)?)?.iter().map(|r| [r[0], r[1]]).collect(),
        None => bound.trajectory.iter().map(|r| [r.iteration as f64, r.reduced_value]).collect(),
    };
    let mut written = Vec::new();
    let mut emit = |name: &str, svg: String| -> fnls_core::Result<()> {
        let path = dir.join(name);
        fnls_core::io::atomic_write(&path, svg.as_bytes())?;
        written.push(path);
        Ok(())
    };
    emit(
        "energy.svg",
        line_chart("Reduced energy", "iteration", "J(u)", &[Series { label: "J(u)", points: energy }]),
    )?;
    emit(
        "fiber.svg",
        line_chart(
            "Fiber profile at the bound state",
            "h",
            "F(h * u)",
            &[Series { label: "F(h * u)", points: bound.fiber_profile.clone() }],
        ),
    )?;
    if let Some(link) = &report.linking {
        let threshold = report.constants.as_ref().map(|k| k.m_c + link.linking_box.eps);
        emit("boundary.svg", boundary_strip("F on the side |y| = R of the linking box", &link.boundary, threshold))?;
    }
    Ok(written)
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { Outcome::ConfigError.exit_code() } else { 0 };
            let _ = e.print();
            return ExitCode::from(code as u8);
        }
    };
    let (name, common) = match &cli.command {
        Command::Ground(c) => ("ground", c),
        Command::Scale { common, .. } => ("scale", common),
        Command::CheckPotential(c) => ("check-potential", c),
        Command::Bound { common, .. } => ("bound", common),
        Command::Verify { common, .. } => ("verify", common),
        Command::Plot { report, series, out } => {
            let result = std::fs::read_to_string(report)
                .map_err(Error::from)
                .and_then(|t| RunReport::from_json(&t))
                .and_then(|r| render_plots(&r, series.as_deref(), out));
            return match result {
                Ok(paths) => {
                    for p in paths {
                        eprintln!("wrote {}", p.display());
                    }
                    ExitCode::SUCCESS
                }
                Err(e) => config_failure("plot", &e),
            };
        }
    };
    if let Err(e) = set_threads(common.threads) {
        return config_failure(name, &e);
    }
    let cfg = match common.config() {
        Ok(cfg) => cfg,
        Err(e) => return config_failure(name, &e),
    };
    match &cli.command {
        Command::Ground(_) => finish(pipeline::run_ground(&cfg), &cfg, None, None),
        Command::Scale { input, ratios, .. } => {
            let gs = match input {
                Some(path) => {
                    let loaded = load_field_with_meta(path).and_then(|(w, meta)| {
                        let s = if meta.s != 0.0 { meta.s } else { cfg.phys.s };
                        let p = if meta.p != 0.0 { meta.p } else { cfg.phys.p };
                        GroundState::from_field(w, s, p)
                    });
                    match loaded {
                        Ok(gs) => Some(gs),
                        Err(e) => return config_failure(name, &e),
                    }
                }
                None => None,
            };
            finish(pipeline::run_scale(&cfg, gs, ratios), &cfg, None, None)
        }
        Command::CheckPotential(_) => finish(pipeline::run_check_potential(&cfg), &cfg, None, None),
        Command::Bound { series, plots, .. } => {
            finish(pipeline::run_bound(&cfg), &cfg, series.as_deref(), plots.as_deref())
        }
        Command::Verify { suite, theta, big_a, grid_n, proxies, ratios, fields, .. } => {
            let suite: Suite = match suite.parse() {
                Ok(s) => s,
                Err(e) => return config_failure(name, &e),
            };
            let opts = VerifyOptions {
                suite,
                minimax: theta.zip(*big_a),
                grid_n: *grid_n,
                proxies: proxies.clone(),
                ratios: ratios.clone(),
                gradient_fields: *fields,
            };
            finish(pipeline::run_verify(&cfg, &opts), &cfg, None, None)
        }
        Command::Plot { .. } => unreachable!("handled above"),
    }
}
