//! Picard certification: runs the constructive iteration and checks the
//! contraction ratios, the Duhamel residual and agreement with the
//! split-step route.

use std::sync::Arc;

use crate::analysis::sobolev_norm;
use crate::error::Result;
use crate::grid::GridSpec;
use crate::integrators::{evolve, picard_iterate, EvolveConfig, PicardConfig};

use super::{ExperimentReport, InitialData, Provenance, Verdict};

#[derive(Debug, Clone)]
pub struct PicardCertifyConfig {
    pub grid: Arc<GridSpec>,
    pub initial: InitialData,
    pub picard: PicardConfig,
    /// Every measured contraction ratio must stay at or below this.
    pub ratio_threshold: f64,
    /// Split-step dt for the cross-check run.
    pub split_step_dt: f64,
    /// Relative H2 agreement between the two routes.
    pub h2_tolerance: f64,
}

pub fn picard_certify(cfg: &PicardCertifyConfig) -> Result<ExperimentReport> {
    let u0 = cfg.initial.realize(&cfg.grid)?;
    let mut report = ExperimentReport::new("picard_certify", Provenance::from_grid(&cfg.grid));
    report.provenance.dt = Some(cfg.split_step_dt);
    report.echo("initial", cfg.initial.describe());
    report.echo("p", cfg.picard.p);
    report.echo("alpha", cfg.picard.nonlinearity.alpha);
    report.echo("t_star", cfg.picard.t_star);
    report.echo("quad_nodes", cfg.picard.quad_nodes);
    report.echo("tol", cfg.picard.tol);

    // The admissibility preconditions (interior region membership and
    // beta (alpha+1) < 1) are enforced inside the iteration and surface as
    // hypothesis violations.
    let (picard_traj, picard_report) = picard_iterate(&u0, &cfg.picard)?;

    report.echo("beta", picard_report.exponents.beta);
    report.echo("k_ball", picard_report.k_ball);
    report.echo("iterates", picard_report.iterate_count);
    if let Some(c) = picard_report.c_tilde_empirical {
        report.echo("c_tilde_empirical", c);
    }
    if let Some(b) = picard_report.predicted_bound {
        report.echo("predicted_bound", b);
    }
    report.fitted.push((
        "duhamel_residual".into(),
        picard_report.duhamel_residual,
        0.0,
    ));

    let max_ratio = picard_report
        .contraction_ratios
        .iter()
        .cloned()
        .fold(0.0, f64::max);
    report.verdicts.push(Verdict::new(
        "contraction ratios below threshold",
        max_ratio <= cfg.ratio_threshold,
        max_ratio,
        cfg.ratio_threshold,
        format!(
            "ratios {:?}, differences {:?}",
            picard_report.contraction_ratios, picard_report.difference_norms
        ),
    ));
    report.verdicts.push(Verdict::new(
        "Picard converged with Duhamel residual below tol",
        picard_report.converged && picard_report.duhamel_residual < cfg.picard.tol,
        picard_report.duhamel_residual,
        cfg.picard.tol,
        format!("converged = {}", picard_report.converged),
    ));

    // Cross-check against the split-step route on the common horizon.
    let steps_per_quarter =
        ((cfg.picard.t_star / 4.0) / cfg.split_step_dt).round().max(1.0) as usize;
    let ss_cfg = EvolveConfig::new(
        cfg.picard.dispersion,
        cfg.picard.nonlinearity.clone(),
        cfg.split_step_dt,
        cfg.picard.t_star,
        steps_per_quarter,
    )?;
    let ss = evolve(&u0, &ss_cfg)?;
    let mut worst = 0.0f64;
    for &frac in &[0.25, 0.5, 0.75, 1.0] {
        let t = frac * cfg.picard.t_star;
        if let Some(reference) = ss.at(t) {
            let a = picard_traj.sample_linear(t)?;
            let num = sobolev_norm(&a.sub(reference)?, 2.0)?;
            let den = sobolev_norm(reference, 2.0)?;
            if den > 0.0 {
                worst = worst.max(num / den);
            }
        }
    }
    report.verdicts.push(Verdict::new(
        "Picard limit matches split-step in relative H2",
        worst <= cfg.h2_tolerance,
        worst,
        cfg.h2_tolerance,
        format!("max relative H2 gap over quarter points of [0, {}]", cfg.picard.t_star),
    ));
    Ok(report)
}
