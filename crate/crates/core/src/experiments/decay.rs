//! Free-group decay studies: `L^{p'}` norms of `G(t) u_0` against the
//! predicted exponent `-b_g = -(n_eff/4)(2/p - 1)`.

use std::sync::Arc;

use crate::analysis::{
    exponent_set, fit_decay_exponent, linf_norm, lp_norm, NormKind, NormSeries,
};
use crate::dispersion::{apply_free_group, wrap_around_time, DispersionParams, DispersionVariant};
use crate::error::{CoreError, Result};
use crate::grid::GridSpec;

use super::{ExperimentReport, InitialData, Provenance, Verdict};

/// Half-maximum spectral band used by the wrap-around guard.
pub const WRAP_BAND_THRESHOLD: f64 = 0.5;

#[derive(Debug, Clone)]
pub struct DecayConfig {
    pub grid: Arc<GridSpec>,
    pub dispersion: DispersionParams,
    pub initial: InitialData,
    /// Values of `p` in `[1, 2)`; the measured norm is `L^{p'}`.
    pub p_values: Vec<f64>,
    pub window: (f64, f64),
    /// Geometric sample count inside the window.
    pub samples: usize,
    pub slope_tolerance: f64,
}

/// Runs the decay study on the free flow (the nonlinearity plays no role).
///
/// Fails with the safe horizon when the window collides with wrap-around.
pub fn decay_study(cfg: &DecayConfig) -> Result<ExperimentReport> {
    let (t_lo, t_hi) = cfg.window;
    if !(t_lo > 0.0 && t_hi > t_lo) {
        return Err(CoreError::Experiment(format!(
            "window ({t_lo}, {t_hi}) must satisfy 0 < t_lo < t_hi"
        )));
    }
    if cfg.samples < 5 {
        return Err(CoreError::Experiment("need at least 5 samples".into()));
    }
    for &p in &cfg.p_values {
        if !(1.0..2.0).contains(&p) {
            return Err(CoreError::Experiment(format!(
                "decay study needs p in [1, 2), got {p}"
            )));
        }
    }
    cfg.dispersion.check_grid(&cfg.grid)?;

    let u0 = cfg.initial.realize(&cfg.grid)?;
    let t_wrap = wrap_around_time(&u0, &cfg.dispersion, WRAP_BAND_THRESHOLD)?;
    if t_hi >= t_wrap {
        return Err(CoreError::WrapAround {
            t_lo,
            t_hi,
            t_wrap,
        });
    }

    let mut report = ExperimentReport::new("decay_study", Provenance::from_grid(&cfg.grid));
    report.echo("initial", cfg.initial.describe());
    report.echo("epsilon", cfg.dispersion.epsilon);
    report.echo("delta", cfg.dispersion.delta);
    report.echo("variant", format!("{:?}", cfg.dispersion.variant));
    report.echo("window", format!("[{t_lo}, {t_hi}]"));
    report.echo("samples", cfg.samples);
    report.echo("t_wrap", t_wrap);

    let times: Vec<f64> = (0..cfg.samples)
        .map(|i| t_lo * (t_hi / t_lo).powf(i as f64 / (cfg.samples - 1) as f64))
        .collect();

    // One free-group application per sample time; fields are reused across p.
    let mut snapshots = Vec::with_capacity(times.len());
    for &t in &times {
        snapshots.push(apply_free_group(&u0, t, &cfg.dispersion)?);
    }

    let d = match cfg.dispersion.variant {
        DispersionVariant::Anisotropic { d } => Some(d),
        DispersionVariant::Isotropic => None,
    };
    for &p in &cfg.p_values {
        // b_g does not depend on alpha; exponents are evaluated at alpha = 1.
        let exps = exponent_set(cfg.grid.ndim(), d, 1.0, p, cfg.dispersion.variant)?;
        let expected = -exps.b_g;
        let q = if (p - 1.0).abs() < 1e-12 {
            f64::INFINITY
        } else {
            p / (p - 1.0)
        };
        let values: Vec<f64> = snapshots
            .iter()
            .map(|f| {
                if q.is_infinite() {
                    Ok(linf_norm(f))
                } else {
                    lp_norm(f, q)
                }
            })
            .collect::<Result<_>>()?;
        let kind = if q.is_infinite() {
            NormKind::Linf
        } else {
            NormKind::Lp(q)
        };
        let series = NormSeries::new(times.clone(), values, kind)?;
        let (slope, stderr) = fit_decay_exponent(&series, (t_lo, t_hi))?;
        let pass = (slope - expected).abs() <= cfg.slope_tolerance;
        report.series.push((format!("decay_p{p}"), series));
        report.fitted.push((format!("slope_p{p}"), slope, stderr));
        report.verdicts.push(Verdict::new(
            format!("decay slope at p = {p}"),
            pass,
            slope,
            cfg.slope_tolerance,
            format!("expected {expected:.6}, fitted {slope:.6} (stderr {stderr:.2e})"),
        ));
    }
    Ok(report)
}
