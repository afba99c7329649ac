//! Command-line front end: parses a TOML run configuration, dispatches to
//! the experiment harnesses and writes reports.
//!
//! Exit codes: 0 all verdicts pass, 2 at least one verdict failed,
//! 3 configuration error, 4 runtime numeric failure.

mod config;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::Parser;

use f4ns_core::analysis::{
    decreasing_rearrangement, lorentz_quasinorm, sobolev_norm, LorentzIndex,
};
use f4ns_core::experiments::{
    decay_study, eps_limit_study, metrics_row, persist_report, picard_certify, radial_study,
    self_similarity_study, ExperimentReport, MetricsTable, Provenance, Verdict,
};
use f4ns_core::grid::random_bandlimited;
use f4ns_core::integrators::evolve;

use config::{parse_config, Command, RunConfig};

const EXIT_VERDICT_FAILURE: u8 = 2;
const EXIT_CONFIG_ERROR: u8 = 3;
const EXIT_RUNTIME_ERROR: u8 = 4;

#[derive(Parser)]
#[command(
    name = "f4ns",
    about = "Spectral laboratory for the fourth-order nonlinear Schrodinger equation"
)]
struct Cli {
    /// Path to the TOML run configuration.
    #[arg(long)]
    config: PathBuf,
    /// Output directory (overrides the config's out_dir).
    #[arg(long)]
    out: Option<PathBuf>,
    /// Validate and echo the resolved configuration without computing.
    #[arg(long)]
    dry_run: bool,
    /// Worker threads for the data-parallel kernels.
    #[arg(long)]
    threads: Option<usize>,
    /// Seed for random fields in property modes (overrides the config).
    #[arg(long)]
    seed: Option<u64>,
}

fn main() -> ExitCode {
    let cli = Cli::parse();

    if let Some(threads) = cli.threads {
        if let Err(e) = f4ns_core::configure_threads(threads) {
            eprintln!("warning: thread pool not reconfigured: {e}");
        }
    }

    let mut run = match parse_config(&cli.config) {
        Ok(run) => run,
        Err(e) => {
            eprintln!("{e}");
            return ExitCode::from(EXIT_CONFIG_ERROR);
        }
    };
    if let Some(seed) = cli.seed {
        run.seed = seed;
        for entry in run.resolved.iter_mut() {
            if entry.0 == "seed" {
                entry.1 = seed.to_string();
            }
        }
    }
    let out_dir = cli
        .out
        .clone()
        .unwrap_or_else(|| PathBuf::from(&run.out_dir));

    if cli.dry_run {
        println!("dry run: configuration is valid");
        for (k, v) in &run.resolved {
            println!("{k}: {v}");
        }
        return ExitCode::SUCCESS;
    }

    match execute(&run, &out_dir) {
        Ok(report) => {
            for v in &report.verdicts {
                println!(
                    "[{}] {} (measured {:.6e}, tolerance {:.6e})",
                    if v.pass { "PASS" } else { "FAIL" },
                    v.criterion,
                    v.measured,
                    v.tolerance
                );
            }
            println!(
                "report written to {} ({})",
                out_dir.display(),
                if report.all_pass() { "PASS" } else { "FAIL" }
            );
            if report.all_pass() {
                ExitCode::SUCCESS
            } else {
                ExitCode::from(EXIT_VERDICT_FAILURE)
            }
        }
        Err(e) => {
            eprintln!("runtime error: {e}");
            ExitCode::from(EXIT_RUNTIME_ERROR)
        }
    }
}

fn execute(run: &RunConfig, out_dir: &std::path::Path) -> f4ns_core::Result<ExperimentReport> {
    let mut report = match &run.command {
        Command::Evolve(cfg, weak_p) => run_evolve(run, cfg, *weak_p)?,
        Command::Decay(cfg) => decay_study(cfg)?,
        Command::Picard(cfg) => picard_certify(cfg)?,
        Command::SelfSim(cfg) => self_similarity_study(cfg)?,
        Command::EpsLimit(cfg) => eps_limit_study(cfg)?,
        Command::Radial(cfg) => radial_study(cfg)?,
        Command::Norms {
            p_values,
            sobolev_orders,
            random_fields,
        } => run_norms(run, p_values, sobolev_orders, *random_fields)?,
    };
    report.provenance.seed = Some(run.seed);
    for (k, v) in &run.resolved {
        report.config_echo.push((format!("run.{k}"), v.clone()));
    }
    persist_report(&report, out_dir)?;
    Ok(report)
}

fn run_evolve(
    run: &RunConfig,
    cfg: &f4ns_core::integrators::EvolveConfig,
    weak_p: f64,
) -> f4ns_core::Result<ExperimentReport> {
    let u0 = run.initial.realize(&run.grid)?;
    let trajectory = evolve(&u0, cfg)?;
    let mut report = ExperimentReport::new("evolve", Provenance::from_grid(&run.grid));
    report.provenance.dt = Some(cfg.dt);
    let mut rows = Vec::new();
    for (&t, field) in trajectory.times().iter().zip(trajectory.fields()) {
        rows.push(metrics_row(t, field, &cfg.dispersion, &cfg.nonlinearity, weak_p)?);
        report.snapshots.push((t, field.clone()));
    }
    let mass0 = rows.first().map(|r| r.mass).unwrap_or(0.0);
    let drift = rows
        .iter()
        .map(|r| ((r.mass - mass0) / mass0.max(f64::MIN_POSITIVE)).abs())
        .fold(0.0, f64::max);
    report.verdicts.push(Verdict::new(
        "relative mass drift across snapshots",
        drift < 1e-10,
        drift,
        1e-10,
        "",
    ));
    report.metrics = Some(MetricsTable { weak_p, rows });
    Ok(report)
}

fn run_norms(
    run: &RunConfig,
    p_values: &[f64],
    sobolev_orders: &[f64],
    random_fields: usize,
) -> f4ns_core::Result<ExperimentReport> {
    let field = run.initial.realize(&run.grid)?;
    let mut report = ExperimentReport::new("norms", Provenance::from_grid(&run.grid));

    for &p in p_values {
        let weak = lorentz_quasinorm(&field, p, LorentzIndex::Infinity)?;
        let strong = lorentz_quasinorm(&field, p, LorentzIndex::Finite(p))?;
        report.fitted.push((format!("weak_lp_{p}"), weak, 0.0));
        report.fitted.push((format!("lorentz_{p}_{p}"), strong, 0.0));
    }
    for &s in sobolev_orders {
        report
            .fitted
            .push((format!("h{s}"), sobolev_norm(&field, s)?, 0.0));
    }

    // Hardy sandwich sweep over seeded random fields:
    // sup t^{1/p} g* <= sup t^{1/p} g** <= p/(p-1) sup t^{1/p} g*.
    let mut all_hold = true;
    let mut worst_margin = 0.0f64;
    for &p in p_values {
        for k in 0..random_fields {
            let f = random_bandlimited(&run.grid, run.seed.wrapping_add(k as u64), 0.4);
            let r = decreasing_rearrangement(&f)?;
            let gs = r.weak_quasinorm_gstar(p);
            let gss = r.weak_quasinorm(p);
            let upper = p / (p - 1.0) * gs;
            if !(gs <= gss * (1.0 + 1e-12) && gss <= upper * (1.0 + 1e-12)) {
                all_hold = false;
            }
            if gs > 0.0 {
                worst_margin = worst_margin.max(gss / upper);
            }
        }
    }
    report.verdicts.push(Verdict::new(
        "weak/strong sandwich on random fields",
        all_hold,
        worst_margin,
        1.0,
        format!("{random_fields} fields per p, seed base {}", run.seed),
    ));
    report.echo("command", "norms");
    Ok(report)
}
