//! `aclab`: batch driver for the convective Allen-Cahn laboratory.

use std::fs::File;
use std::io::{BufReader, BufWriter};
use std::path::{Path, PathBuf};
use std::time::Instant;

use aclab_core::config::{InterfaceSpec, RunConfig};
use aclab_core::fields::VelocityKind;
use aclab_core::geometry::{extract_zero_contour, hausdorff_distance};
use aclab_core::grid::snapshot_file_name;
use aclab_core::oracles::shrinking_circle_radius;
use aclab_core::profile::{surface_tension, ProfileTable};
use aclab_core::scenario::{Scenario, SnapshotRow, SummaryRow};
use aclab_core::solver::energy;
use aclab_core::sweep::{
    read_table, run_sweep, summary_rates, write_table, RateFit, SweepSpec, SNAPSHOT_UNITS, SUMMARY_UNITS,
};
use anyhow::{bail, Context, Result};
use clap::{Parser, Subcommand};
use serde::Serialize;

#[derive(Parser, Debug)]
#[command(name = "aclab", version, about = "Convective Allen-Cahn sharp-interface laboratory")]
struct Cli {
    /// JSON run config; the built-in single-vortex circle scenario when absent.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Output directory.
    #[arg(long, global = true, default_value = "out")]
    out: PathBuf,
    /// Worker threads for sweeps.
    #[arg(long, global = true, default_value_t = 1)]
    workers: usize,
    /// Config override `key=value`, with dotted keys for nested fields.
    #[arg(long = "override", global = true, value_name = "KEY=VALUE")]
    overrides: Vec<String>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Build the optimal profile and check its residual and surface tension.
    ProfileCheck,
    /// Run the solver at `eps` and write field snapshots.
    Simulate,
    /// Norms of the transported-profile approximation over `eps_list`.
    ApproxNorms,
    /// Diffuse curvature functional against its sharp limits over `eps_list`.
    FunctionalCompare,
    /// Solver zero contour against the motion-law oracle at `eps`.
    MotionLaw,
    /// Full ε-sweep with per-snapshot rows, summaries and rate fits.
    Sweep,
    /// Fit rates from a summary table.
    Rates {
        /// Summary CSV; defaults to `<out>/summary.csv`.
        #[arg(long)]
        input: Option<PathBuf>,
    },
}

fn load_config(cli: &Cli) -> Result<RunConfig> {
    let cfg = match &cli.config {
        Some(path) => RunConfig::load(path, &cli.overrides).with_context(|| format!("loading {}", path.display()))?,
        None => RunConfig::single_vortex_circle().with_overrides(&cli.overrides)?,
    };
    Ok(cfg)
}

fn create(dir: &Path, name: &str) -> Result<BufWriter<File>> {
    let path = dir.join(name);
    let f = File::create(&path).with_context(|| format!("creating {}", path.display()))?;
    Ok(BufWriter::new(f))
}

/// The ladder of a config, or its single `eps` when the ladder is empty.
fn ladder(cfg: &RunConfig) -> Vec<f64> {
    if cfg.eps_list.is_empty() {
        vec![cfg.eps]
    } else {
        cfg.eps_list.clone()
    }
}

#[derive(Serialize)]
struct ProfileRow {
    z: f64,
    theta0: f64,
    theta0_prime: f64,
    tanh_error: f64,
}

#[derive(Serialize)]
struct ProfileSummary {
    samples: usize,
    z_max: f64,
    residual: f64,
    sigma: f64,
    sigma_exact: f64,
    sigma_error: f64,
    max_tanh_error: f64,
}

fn profile_check(out: &Path, hash: &str) -> Result<()> {
    let started = Instant::now();
    let table = ProfileTable::quartic_default();
    let sigma = surface_tension(&table)?;
    let sigma_exact = 2.0 * 2f64.sqrt() / 3.0;
    let rows: Vec<ProfileRow> = table
        .z_grid()
        .zip(table.theta0_samples().iter().zip(table.theta0_prime_samples()))
        .map(|(z, (v, d))| ProfileRow { z, theta0: *v, theta0_prime: *d, tanh_error: (v - (2f64.sqrt() * z).tanh()).abs() })
        .collect();
    let summary = ProfileSummary {
        samples: table.len(),
        z_max: table.z_max(),
        residual: table.residual,
        sigma,
        sigma_exact,
        sigma_error: (sigma - sigma_exact).abs(),
        max_tanh_error: rows.iter().map(|r| r.tanh_error).fold(0.0, f64::max),
    };
    write_table(create(out, "profile.csv")?, "optimal profile samples", "z dimensionless (layer coordinate)", hash, &rows)?;
    write_table(create(out, "profile_check.csv")?, "profile check", "dimensionless", hash, &[&summary])?;
    println!(
        "residual {:.2e}  sigma {:.12} (error {:.1e})  max |theta0 - tanh| {:.1e}  in {:.2} s",
        summary.residual,
        sigma,
        summary.sigma_error,
        summary.max_tanh_error,
        started.elapsed().as_secs_f64()
    );
    Ok(())
}

#[derive(Serialize)]
struct TrajectoryRow {
    index: usize,
    t: f64,
    mass: f64,
    overshoot: f64,
    energy: f64,
    file: String,
}

fn simulate_cmd(cfg: &RunConfig, out: &Path, hash: &str) -> Result<()> {
    let scenario = Scenario::new(cfg.clone())?;
    let run = scenario.simulate(cfg.eps)?;
    let well = scenario.profile().well();
    let mut rows = Vec::new();
    for (k, (t, c)) in run.traj.times.iter().zip(&run.traj.snapshots).enumerate() {
        let file = snapshot_file_name(cfg.eps, cfg.theta, k);
        c.save_snapshot(&out.join(&file), *t)?;
        rows.push(TrajectoryRow {
            index: k,
            t: *t,
            mass: run.traj.mass[k],
            overshoot: run.traj.overshoot[k],
            energy: energy(c, cfg.eps, well),
            file,
        });
    }
    write_table(
        create(out, "trajectory.csv")?,
        "solver trajectory",
        "t in time units, mass = integral of c over the unit box, energy dimensionless",
        hash,
        &rows,
    )?;
    println!(
        "{} steps (dt = {:.3e}) on {}x{} nodes; {} snapshots; max overshoot {:.2e}",
        run.traj.steps,
        run.traj.dt,
        run.grid.n(),
        run.grid.n(),
        rows.len(),
        run.traj.max_overshoot()
    );
    Ok(())
}

fn approx_norms_cmd(cfg: &RunConfig, out: &Path, hash: &str) -> Result<()> {
    let scenario = Scenario::new(cfg.clone())?;
    let times = if cfg.norm_times.is_empty() { vec![0.0] } else { cfg.norm_times.clone() };
    let mut rows = Vec::new();
    for eps in ladder(cfg) {
        rows.extend(scenario.approx_norms(eps, &times)?);
    }
    write_table(create(out, "approx_norms.csv")?, "norms of the transported-profile approximation", "L2 norms over the unit box", hash, &rows)?;
    for r in &rows {
        println!(
            "eps {:<7} t {:<5} grad {:.4e} lap {:.4e} f {:.4e} indicator {:.4e}",
            r.eps, r.t, r.grad_l2, r.lap_l2, r.f_l2, r.indicator_l2
        );
    }
    Ok(())
}

#[derive(Serialize)]
struct FunctionalRow {
    eps: f64,
    theta: f64,
    /// Empty for the time-integrated row.
    t: Option<f64>,
    h_eps: f64,
    #[serde(rename = "h_eps_A")]
    h_eps_a: f64,
    limit_stretched: f64,
    limit_sharp: f64,
    gap_stretched: f64,
    gap_sharp: f64,
}

impl From<aclab_core::functionals::FunctionalRecord> for FunctionalRow {
    fn from(r: aclab_core::functionals::FunctionalRecord) -> Self {
        Self {
            eps: r.eps,
            theta: r.theta,
            t: r.t,
            h_eps: r.h_eps,
            h_eps_a: r.h_eps_a,
            limit_stretched: r.limit_stretched,
            limit_sharp: r.limit_sharp,
            gap_stretched: r.gap_stretched(),
            gap_sharp: r.gap_sharp(),
        }
    }
}

fn functional_compare_cmd(cfg: &RunConfig, out: &Path, hash: &str) -> Result<()> {
    let mut cfg = cfg.clone();
    cfg.eps_list = ladder(&cfg);
    let table = run_ladder(&cfg)?;
    let mut rows: Vec<FunctionalRow> = table.0.iter().map(|r| r.functional_record().into()).collect();
    rows.extend(table.1.iter().map(|s| FunctionalRow::from(s.functional_record())));
    write_table(
        create(out, "functionals.csv")?,
        "curvature functional and sharp limits (rows with empty t are integrated over [0, T])",
        "functional values in unit-box units",
        hash,
        &rows,
    )?;
    for s in &table.1 {
        println!(
            "eps {:<7} integral H {:.5e}  stretched {:.5e}  sharp {:.5e}",
            s.eps, s.h_eps_int, s.limit_stretched_int, s.limit_sharp_int
        );
    }
    Ok(())
}

/// Runs the ladder one ε at a time, without the four-point minimum of rate
/// sweeps.
fn run_ladder(cfg: &RunConfig) -> Result<(Vec<SnapshotRow>, Vec<SummaryRow>)> {
    let scenario = Scenario::new(cfg.clone())?;
    let (mut rows, mut summaries) = (Vec::new(), Vec::new());
    for eps in &cfg.eps_list {
        let run = scenario.simulate(*eps).with_context(|| format!("run eps = {eps}"))?;
        let m = scenario.measure(&run)?;
        rows.extend(m.rows);
        summaries.push(m.summary);
    }
    Ok((rows, summaries))
}

#[derive(Serialize)]
struct MotionRow {
    t: f64,
    hausdorff_to_solver_contour: f64,
    radius_fit_if_circle: Option<f64>,
    radius_exact: Option<f64>,
}

fn motion_law_cmd(cfg: &RunConfig, out: &Path, hash: &str) -> Result<()> {
    let scenario = Scenario::new(cfg.clone())?;
    let run = scenario.simulate(cfg.eps)?;
    let oracles = scenario.oracle_interfaces(&run.traj.times)?;
    let round = matches!(cfg.initial_interface, InterfaceSpec::Circle { .. }) && cfg.velocity.kind == VelocityKind::Zero;
    let r0 = match cfg.initial_interface {
        InterfaceSpec::Circle { radius, .. } => radius,
        _ => f64::NAN,
    };
    let mut rows = Vec::new();
    for ((t, c), oracle) in run.traj.times.iter().zip(&run.traj.snapshots).zip(&oracles) {
        let contour = extract_zero_contour(c);
        let hausdorff = contour.as_ref().map_or(f64::NAN, |g| hausdorff_distance(g, oracle));
        let radius_fit = if round { contour.as_ref().ok().and_then(|g| g.fit_circle()).map(|(_, r)| r) } else { None };
        let radius_exact = if round && scenario.curvature_oracle() {
            shrinking_circle_radius(r0, cfg.m0, *t).ok()
        } else if round {
            Some(r0)
        } else {
            None
        };
        rows.push(MotionRow { t: *t, hausdorff_to_solver_contour: hausdorff, radius_fit_if_circle: radius_fit, radius_exact });
    }
    write_table(create(out, "motion_law.csv")?, "solver zero contour against the motion-law oracle", "t in time units, distances and radii in box lengths", hash, &rows)?;
    if let Some(last) = rows.last() {
        println!("t = {}: Hausdorff distance to the oracle {:.3e} (eps = {})", last.t, last.hausdorff_to_solver_contour, cfg.eps);
    }
    Ok(())
}

fn sweep_cmd(cfg: &RunConfig, out: &Path, hash: &str, workers: usize) -> Result<bool> {
    let spec = SweepSpec::new(cfg.clone())?;
    let table = run_sweep(&spec, workers)?;
    write_table(create(out, "snapshots.csv")?, "per-snapshot measurements", SNAPSHOT_UNITS, hash, &table.rows)?;
    write_table(create(out, "summary.csv")?, "per-run summary", SUMMARY_UNITS, hash, &table.summaries)?;
    let rates = summary_rates(&table.summaries);
    write_table(create(out, "rates.csv")?, "log-log rates in eps", "dimensionless exponents", hash, &rates)?;
    print_rates(&rates);
    for (eps, msg) in &table.failures {
        eprintln!("run eps = {eps} failed: {msg}");
    }
    Ok(table.ok())
}

fn print_rates(rates: &[RateFit]) {
    for r in rates {
        println!(
            "{:<18} slope {:+.3}  r2 {:.4}{}",
            r.quantity,
            r.slope,
            r.r_squared,
            if r.flagged { "  (flagged: r2 < 0.9)" } else { "" }
        );
    }
}

fn rates_cmd(input: &Path, out: &Path, hash: &str) -> Result<()> {
    let f = File::open(input).with_context(|| format!("opening {}", input.display()))?;
    let rows: Vec<SummaryRow> = read_table(BufReader::new(f))?;
    if rows.is_empty() {
        bail!("{} has no summary rows", input.display());
    }
    let rates = summary_rates(&rows);
    write_table(create(out, "rates.csv")?, "log-log rates in eps", "dimensionless exponents", hash, &rates)?;
    print_rates(&rates);
    Ok(())
}

fn main() -> Result<()> {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    let cfg = load_config(&cli)?;
    let hash = cfg.hash();
    std::fs::create_dir_all(&cli.out).with_context(|| format!("creating {}", cli.out.display()))?;
    std::fs::write(cli.out.join("config.json"), cfg.to_json_pretty())?;
    match &cli.command {
        Command::ProfileCheck => profile_check(&cli.out, &hash)?,
        Command::Simulate => simulate_cmd(&cfg, &cli.out, &hash)?,
        Command::ApproxNorms => approx_norms_cmd(&cfg, &cli.out, &hash)?,
        Command::FunctionalCompare => functional_compare_cmd(&cfg, &cli.out, &hash)?,
        Command::MotionLaw => motion_law_cmd(&cfg, &cli.out, &hash)?,
        Command::Sweep => {
            if !sweep_cmd(&cfg, &cli.out, &hash, cli.workers)? {
                bail!("at least one run of the sweep failed");
            }
        }
        Command::Rates { input } => {
            let input = input.clone().unwrap_or_else(|| cli.out.join("summary.csv"));
            rates_cmd(&input, &cli.out, &hash)?
        }
    }
    Ok(())
}
