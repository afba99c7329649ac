//! Vanishing second-order-dispersion limits: solve the mixed equation for a
//! list of `epsilon` values and the quartic-only equation from common data,
//! with identical grid and dt, then measure the gap in `H^2` at a fixed time
//! or in the `X_T` norm (L^r in time of the spatial weak-Lorentz norm).

use std::sync::Arc;

use crate::analysis::{
    exponent_set, loglog_slope, lorentz_quasinorm, sobolev_norm, xt_norm, LorentzIndex,
    NormKind, NormSeries,
};
use crate::dispersion::{DispersionParams, DispersionVariant};
use crate::error::{CoreError, Result};
use crate::grid::{self, ComplexField, GridSpec, MAX_NDIM};
use crate::integrators::{evolve, EvolveConfig, Trajectory};
use crate::nonlinearity::NonlinearityParams;

use super::{ExperimentReport, InitialData, Provenance, Verdict};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EpsLimitMode {
    /// `H^2` error at `t_eval`; hypotheses of the finite-energy limit.
    H2,
    /// `X_T` norm of the difference over `(0, t_eval]`.
    Weak,
}

#[derive(Debug, Clone)]
pub struct EpsLimitConfig {
    pub grid: Arc<GridSpec>,
    pub initial: InitialData,
    pub delta: f64,
    pub lambda: f64,
    pub alpha: f64,
    /// Strictly positive, strictly decreasing dispersion coefficients.
    pub eps_list: Vec<f64>,
    pub t_eval: f64,
    pub dt: f64,
    pub mode: EpsLimitMode,
    /// Weak mode: spatial Lebesgue index `p` (the norm uses `p (alpha+1)`).
    pub p: f64,
    /// Weak mode: time exponent; must exceed `alpha / (1 - beta)`.
    pub r: f64,
    /// Weak mode: snapshot stride for the time series.
    pub snapshot_stride: usize,
    /// Both modes: errors must not increase in `epsilon` (relative slack).
    pub monotone_tolerance: f64,
    /// H2 mode, nonlinear case: least-squares slope of `log err` vs
    /// `log eps` must reach this.
    pub slope_threshold: f64,
    /// Weak mode: required shrink factor from the largest to the smallest eps.
    pub shrink_factor: f64,
}

pub fn eps_limit_study(cfg: &EpsLimitConfig) -> Result<ExperimentReport> {
    validate(cfg)?;
    let u0 = cfg.initial.realize(&cfg.grid)?;

    let mut report = ExperimentReport::new(
        match cfg.mode {
            EpsLimitMode::H2 => "eps_limit_h2",
            EpsLimitMode::Weak => "eps_limit_weak",
        },
        Provenance::from_grid(&cfg.grid),
    );
    report.provenance.dt = Some(cfg.dt);
    report.echo("initial", cfg.initial.describe());
    report.echo("delta", cfg.delta);
    report.echo("lambda", cfg.lambda);
    report.echo("alpha", cfg.alpha);
    report.echo("eps_list", format!("{:?}", cfg.eps_list));
    report.echo("t_eval", cfg.t_eval);

    let nonlinearity = if cfg.lambda == 0.0 {
        NonlinearityParams::none()
    } else {
        NonlinearityParams::power(cfg.lambda, cfg.alpha)?
    };
    let solve = |eps: f64| -> Result<Trajectory> {
        let disp = DispersionParams::isotropic(eps, cfg.delta)?;
        let stride = match cfg.mode {
            EpsLimitMode::H2 => usize::MAX / 2, // endpoints only
            EpsLimitMode::Weak => cfg.snapshot_stride,
        };
        let config = EvolveConfig::new(disp, nonlinearity.clone(), cfg.dt, cfg.t_eval, stride)?;
        evolve(&u0, &config)
    };

    let reference = solve(0.0)?;
    let mut errors = Vec::with_capacity(cfg.eps_list.len());
    for &eps in &cfg.eps_list {
        let traj = solve(eps)?;
        let err = match cfg.mode {
            EpsLimitMode::H2 => {
                let diff = traj.last().sub(reference.last())?;
                sobolev_norm(&diff, 2.0)?
            }
            EpsLimitMode::Weak => {
                let q = cfg.p * (cfg.alpha + 1.0);
                let mut times = Vec::new();
                let mut values = Vec::new();
                for (ts, fs) in traj.times().iter().zip(traj.fields()) {
                    if *ts == 0.0 {
                        continue;
                    }
                    let rf = reference.at(*ts).ok_or_else(|| {
                        CoreError::Experiment(format!(
                            "reference trajectory missing snapshot at t = {ts}"
                        ))
                    })?;
                    let diff = fs.sub(rf)?;
                    times.push(*ts);
                    values.push(lorentz_quasinorm(&diff, q, LorentzIndex::Infinity)?);
                }
                let series = NormSeries::new(times, values, NormKind::WeakLp(q))?;
                let x = xt_norm(&series, cfg.r)?;
                report
                    .series
                    .push((format!("weak_diff_eps_{eps}"), series));
                x
            }
        };
        errors.push(err);
    }

    let err_series = {
        // ascending in eps for the log-log fit
        let mut pairs: Vec<(f64, f64)> = cfg.eps_list.iter().cloned().zip(errors.clone()).collect();
        pairs.sort_by(|a, b| a.0.total_cmp(&b.0));
        NormSeries::new(
            pairs.iter().map(|p| p.0).collect(),
            pairs.iter().map(|p| p.1).collect(),
            NormKind::Hs(2.0),
        )?
    };
    report.series.push(("error_vs_eps".into(), err_series.clone()));

    // Monotonicity: non-increasing as eps decreases, with relative slack.
    let mut monotone = true;
    let mut strict = true;
    for w in errors.windows(2) {
        if w[1] > w[0] * (1.0 + cfg.monotone_tolerance) {
            monotone = false;
        }
        if w[1] >= w[0] {
            strict = false;
        }
    }
    let worst_ratio = errors
        .windows(2)
        .map(|w| w[1] / w[0])
        .fold(0.0f64, f64::max);
    report.verdicts.push(Verdict::new(
        "errors non-increasing in eps",
        monotone,
        worst_ratio,
        1.0 + cfg.monotone_tolerance,
        format!("errors {errors:?}"),
    ));
    report.verdicts.push(Verdict::new(
        "errors strictly decreasing in eps",
        strict,
        worst_ratio,
        1.0,
        format!("errors {errors:?}"),
    ));

    match cfg.mode {
        EpsLimitMode::H2 => {
            if cfg.lambda == 0.0 {
                // Fourier-side closed form: the whole gap is the multiplier
                // difference acting on u0.
                let oracle_err = linear_oracle_gap(&u0, cfg)?;
                let mut worst = 0.0f64;
                for (&eps, &err) in cfg.eps_list.iter().zip(&errors) {
                    let oracle = oracle_err(eps)?;
                    let rel = if oracle > 0.0 {
                        (err - oracle).abs() / oracle
                    } else {
                        err
                    };
                    worst = worst.max(rel);
                }
                report.verdicts.push(Verdict::new(
                    "linear H2 error matches the Fourier-side oracle",
                    worst < 1e-10,
                    worst,
                    1e-10,
                    "relative gap to closed-form multiplier sum",
                ));
            } else {
                let (slope, stderr) = loglog_slope(err_series.times(), err_series.values())?;
                report.fitted.push(("eps_slope".into(), slope, stderr));
                report.verdicts.push(Verdict::new(
                    "H2 error scales at least linearly in eps",
                    slope >= cfg.slope_threshold,
                    slope,
                    cfg.slope_threshold,
                    format!("fitted slope {slope:.4} (stderr {stderr:.2e})"),
                ));
            }
        }
        EpsLimitMode::Weak => {
            let shrink = errors.first().unwrap() / errors.last().unwrap();
            report.verdicts.push(Verdict::new(
                "X_T gap shrinks across the eps sweep",
                shrink >= cfg.shrink_factor,
                shrink,
                cfg.shrink_factor,
                format!(
                    "X_T({}) / X_T({}) = {shrink:.2}",
                    cfg.eps_list.first().unwrap(),
                    cfg.eps_list.last().unwrap()
                ),
            ));
        }
    }
    report
        .fitted
        .push(("smallest_error".into(), *errors.last().unwrap(), 0.0));
    Ok(report)
}

fn validate(cfg: &EpsLimitConfig) -> Result<()> {
    if cfg.eps_list.is_empty() {
        return Err(CoreError::Experiment("eps_list must not be empty".into()));
    }
    if cfg.eps_list.iter().any(|&e| !(e > 0.0)) {
        return Err(CoreError::Experiment(
            "eps_list entries must be > 0 (the eps = 0 reference is implicit)".into(),
        ));
    }
    if cfg.eps_list.windows(2).any(|w| w[1] >= w[0]) {
        return Err(CoreError::Experiment(
            "eps_list must be strictly decreasing".into(),
        ));
    }
    if !(cfg.t_eval > 0.0 && cfg.dt > 0.0) {
        return Err(CoreError::Experiment("t_eval and dt must be > 0".into()));
    }
    let n = cfg.grid.ndim();
    match cfg.mode {
        EpsLimitMode::H2 => {
            let is_even_positive_integer =
                cfg.alpha > 0.0 && cfg.alpha.fract() == 0.0 && (cfg.alpha as u64) % 2 == 0;
            if cfg.lambda != 0.0 && !is_even_positive_integer {
                return Err(CoreError::HypothesisViolated(format!(
                    "H2-limit mode requires alpha to be a positive even integer, got {}",
                    cfg.alpha
                )));
            }
            if n >= 4 {
                return Err(CoreError::HypothesisViolated(format!(
                    "H2-limit mode requires n < 4, got n = {n}"
                )));
            }
            if cfg.delta * cfg.lambda < 0.0 {
                let na = n as f64 * cfg.alpha;
                if na >= 8.0 {
                    return Err(CoreError::HypothesisViolated(format!(
                        "for delta lambda < 0 the a-priori bound needs n alpha < 8, got {na}"
                    )));
                }
                let frac = na / (4.0 * (cfg.alpha + 2.0));
                let ok = if n == 2 { frac < 1.0 } else { frac <= 1.0 };
                if !ok {
                    return Err(CoreError::HypothesisViolated(format!(
                        "for delta lambda < 0 the bound needs n alpha/(4(alpha+2)) {} 1, got {frac}",
                        if n == 2 { "<" } else { "<=" }
                    )));
                }
            }
        }
        EpsLimitMode::Weak => {
            let exps = exponent_set(n, None, cfg.alpha, cfg.p, DispersionVariant::Isotropic)?;
            let r_min = cfg.alpha / (1.0 - exps.beta);
            if cfg.r <= r_min {
                return Err(CoreError::HypothesisViolated(format!(
                    "weak mode requires r > alpha/(1 - beta) = {r_min:.4}, got r = {}",
                    cfg.r
                )));
            }
            if cfg.snapshot_stride == 0 {
                return Err(CoreError::Experiment("snapshot_stride must be >= 1".into()));
            }
        }
    }
    Ok(())
}

/// Returns a closed-form evaluator of
/// `|| (G_eps(t) - G_0(t)) u_0 ||_{H^2}` in the linear case.
fn linear_oracle_gap<'a>(
    u0: &'a ComplexField,
    cfg: &'a EpsLimitConfig,
) -> Result<impl Fn(f64) -> Result<f64> + 'a> {
    let spectrum = grid::to_spectral(u0)?;
    let g = spectrum.grid().clone();
    let t = cfg.t_eval;
    Ok(move |eps: f64| -> Result<f64> {
        let mut sum = 0.0;
        let mut xi = [0.0f64; MAX_NDIM];
        for (idx, c) in spectrum.samples().iter().enumerate() {
            if g.is_nyquist(idx) {
                continue;
            }
            g.wavenumber_at(idx, &mut xi);
            let sq: f64 = xi[..g.ndim()].iter().map(|v| v * v).sum();
            let gap = (num_complex::Complex64::from_polar(1.0, -t * eps * sq)
                - num_complex::Complex64::new(1.0, 0.0))
            .norm_sqr();
            sum += (1.0 + sq).powi(2) * gap * c.norm_sqr();
        }
        Ok((g.cell_volume() * sum).sqrt())
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::make_grid;

    fn h2_config(lambda: f64) -> EpsLimitConfig {
        let grid = Arc::new(make_grid(1, &[512], &[16.0]).unwrap());
        EpsLimitConfig {
            grid,
            initial: InitialData::gaussian(1.0),
            delta: 1.0,
            lambda,
            alpha: 2.0,
            eps_list: vec![0.1, 0.05, 0.025, 0.0125],
            t_eval: 0.5,
            dt: 1e-3,
            mode: EpsLimitMode::H2,
            p: 1.2,
            r: 3.0,
            snapshot_stride: 25,
            monotone_tolerance: 0.01,
            slope_threshold: 0.9,
            shrink_factor: 10.0,
        }
    }

    #[test]
    fn linear_case_matches_fourier_oracle() {
        let report = eps_limit_study(&h2_config(0.0)).unwrap();
        assert!(report.all_pass(), "{:?}", report.verdicts);
    }

    #[test]
    fn odd_alpha_is_rejected_in_h2_mode() {
        let mut cfg = h2_config(1.0);
        cfg.alpha = 3.0;
        match eps_limit_study(&cfg) {
            Err(CoreError::HypothesisViolated(msg)) => {
                assert!(msg.contains("positive even integer"), "{msg}")
            }
            other => panic!("expected hypothesis violation, got {other:?}"),
        }
    }

    #[test]
    fn weak_mode_rejects_small_r() {
        let mut cfg = h2_config(1.0);
        cfg.mode = EpsLimitMode::Weak;
        cfg.r = 2.0; // below alpha/(1-beta) = 2/(1 - 0.1389) = 2.32
        match eps_limit_study(&cfg) {
            Err(CoreError::HypothesisViolated(msg)) => assert!(msg.contains("r >"), "{msg}"),
            other => panic!("expected hypothesis violation, got {other:?}"),
        }
    }

    #[test]
    fn increasing_eps_list_is_rejected() {
        let mut cfg = h2_config(0.0);
        cfg.eps_list = vec![0.05, 0.1];
        assert!(eps_limit_study(&cfg).is_err());
    }
}
