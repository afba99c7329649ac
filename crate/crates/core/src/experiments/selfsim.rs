//! Self-similarity checks: `u(x, t) = lambda^{4/alpha} u(lambda x, lambda^4 t)`
//! for the scaling-invariant equation (`epsilon = 0`).
//!
//! Synthetic mode evaluates the exact family `u(x,t) = t^{-1/alpha} g(x t^{-1/4})`
//! through closures (a pure algebra check of the scaling machinery);
//! simulated mode evolves mollified homogeneous data with the split-step
//! integrator and compares snapshots via spectral upsampling.

use std::collections::BTreeMap;
use std::sync::Arc;

use num_complex::Complex64;

use crate::analysis::{exponent_set, NormKind, NormSeries};
use crate::dispersion::{scale_transform, DispersionParams, DispersionVariant, SpaceTimeClosure};
use crate::error::{CoreError, Result};
use crate::grid::{self, ComplexField, GridSpec, Space, MAX_NDIM};
use crate::integrators::{strang_step, EvolveConfig};
use crate::nonlinearity::NonlinearityParams;

use super::{ExperimentReport, InitialData, Provenance, Verdict};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SelfSimMode {
    /// Exact family evaluated analytically; residual at rounding level.
    Synthetic,
    /// Split-step evolution of mollified homogeneous data.
    Simulated,
}

#[derive(Debug, Clone)]
pub struct SelfSimConfig {
    pub grid: Arc<GridSpec>,
    pub dispersion: DispersionParams,
    pub nonlinearity: NonlinearityParams,
    pub initial: InitialData,
    pub mode: SelfSimMode,
    /// Scaling factors `lambda >= 1`.
    pub lambdas: Vec<f64>,
    /// Base comparison times `t`.
    pub times: Vec<f64>,
    pub dt: f64,
    pub residual_tolerance: f64,
    /// Comparison window `|x_a| <= window_fraction * L_a` (simulated mode).
    pub window_fraction: f64,
    /// Spectral zero-padding factor for the rescaled comparison field.
    pub upsample: usize,
}

/// Runs the study. Rejects `epsilon != 0` (the equation is only scaling
/// invariant without the second-order term) and, in simulated mode,
/// configurations violating the global-existence hypotheses.
pub fn self_similarity_study(cfg: &SelfSimConfig) -> Result<ExperimentReport> {
    if cfg.dispersion.epsilon != 0.0 {
        return Err(CoreError::HypothesisViolated(format!(
            "self-similarity requires epsilon = 0 (scaling invariance of the \
             fourth-order flow); got epsilon = {}",
            cfg.dispersion.epsilon
        )));
    }
    cfg.dispersion.check_grid(&cfg.grid)?;
    let alpha = cfg.nonlinearity.alpha;
    if cfg.lambdas.iter().any(|&l| !(l >= 1.0)) {
        return Err(CoreError::Experiment("lambdas must be >= 1".into()));
    }
    if cfg.times.iter().any(|&t| !(t > 0.0)) {
        return Err(CoreError::Experiment("base times must be > 0".into()));
    }

    let mut report = ExperimentReport::new("self_similarity", Provenance::from_grid(&cfg.grid));
    report.provenance.dt = Some(cfg.dt);
    report.echo("mode", format!("{:?}", cfg.mode));
    report.echo("alpha", alpha);
    report.echo("lambda_coupling", cfg.nonlinearity.lambda);
    report.echo("initial", cfg.initial.describe());
    report.echo("lambdas", format!("{:?}", cfg.lambdas));
    report.echo("times", format!("{:?}", cfg.times));
    report.echo("residual_tolerance", cfg.residual_tolerance);

    match cfg.mode {
        SelfSimMode::Synthetic => synthetic_study(cfg, &mut report)?,
        SelfSimMode::Simulated => simulated_study(cfg, &mut report)?,
    }
    Ok(report)
}

/// Exact family `u(x,t) = t^{-1/alpha} g(x t^{-1/4})`; the residual against
/// the rescaled closure is pure floating-point algebra.
fn synthetic_study(cfg: &SelfSimConfig, report: &mut ExperimentReport) -> Result<()> {
    let ndim = cfg.grid.ndim();
    let alpha = cfg.nonlinearity.alpha;
    let clamp = grid::default_mollification_radius(&cfg.grid);
    let profile = cfg.initial.closure(ndim, clamp)?;
    let family: SpaceTimeClosure = Arc::new(move |x: &[f64], t: f64| {
        let s = t.powf(-0.25);
        let scaled: Vec<f64> = x.iter().map(|v| v * s).collect();
        t.powf(-1.0 / alpha) * profile(&scaled)
    });

    for &lam in &cfg.lambdas {
        let rescaled = scale_transform(family.clone(), lam, alpha)?;
        let mut residuals = Vec::new();
        for &t in &cfg.times {
            let lhs = grid::sample_function(&cfg.grid, |x| family(x, t))?;
            let rhs = grid::sample_function(&cfg.grid, |x| rescaled(x, t))?;
            let num = l2_window(&lhs, &rhs, 1.0)?;
            let den = l2_window(&lhs, &ComplexField::zeros(&cfg.grid), 1.0)?;
            residuals.push(if den > 0.0 { num / den } else { 0.0 });
        }
        push_residual_verdicts(report, lam, &cfg.times, &residuals, cfg.residual_tolerance)?;
    }
    Ok(())
}

fn simulated_study(cfg: &SelfSimConfig, report: &mut ExperimentReport) -> Result<()> {
    let ndim = cfg.grid.ndim();
    let alpha = cfg.nonlinearity.alpha;
    let d = match cfg.dispersion.variant {
        DispersionVariant::Anisotropic { d } => Some(d),
        DispersionVariant::Isotropic => None,
    };
    // Global-theory admissibility; sigma is p-independent, evaluated at a
    // nominal p.
    let exps = exponent_set(ndim, d, alpha, 1.5, cfg.dispersion.variant)?;
    let sigma_cond = (alpha + 1.0) * exps.sigma;
    if sigma_cond >= 1.0 {
        return Err(CoreError::HypothesisViolated(format!(
            "(alpha+1) sigma = {sigma_cond:.4} must be < 1 for global existence \
             (n = {ndim}, alpha = {alpha}); pick a larger alpha or dimension"
        )));
    }
    let beta_cond = exps.n_eff() * alpha / (4.0 * (alpha + 2.0));
    if beta_cond >= 1.0 {
        return Err(CoreError::HypothesisViolated(format!(
            "n_eff alpha / (4 (alpha+2)) = {beta_cond:.4} must be < 1"
        )));
    }
    if !(cfg.dt > 0.0) {
        return Err(CoreError::Experiment("dt must be > 0".into()));
    }
    if cfg.upsample < 2 {
        return Err(CoreError::Experiment("upsample factor must be >= 2".into()));
    }
    if !(cfg.window_fraction > 0.0 && cfg.window_fraction <= 1.0) {
        return Err(CoreError::Experiment(
            "window_fraction must be in (0, 1]".into(),
        ));
    }
    report.echo("sigma", exps.sigma);
    report.echo("admissibility_(alpha+1)sigma", sigma_cond);

    // Snap every needed time onto the dt lattice; the effective lambda is
    // recomputed from the snapped pair so the comparison stays exact.
    let snap = |t: f64| -> usize { (t / cfg.dt).round() as usize };
    let mut needed: BTreeMap<usize, ComplexField> = BTreeMap::new();
    let mut pairs = Vec::new(); // (lambda_nominal, t_base, k1, k2)
    for &t in &cfg.times {
        let k1 = snap(t);
        if k1 == 0 {
            return Err(CoreError::Experiment(format!(
                "base time {t} rounds to step 0 at dt = {}",
                cfg.dt
            )));
        }
        for &lam in &cfg.lambdas {
            let k2 = snap(lam.powi(4) * t);
            pairs.push((lam, t, k1, k2));
            needed.insert(k1, ComplexField::zeros(&cfg.grid));
            needed.insert(k2, ComplexField::zeros(&cfg.grid));
        }
    }
    let last_step = *needed.keys().last().unwrap();

    let u0 = cfg.initial.realize(&cfg.grid)?;
    let step_cfg = EvolveConfig::new(
        cfg.dispersion,
        cfg.nonlinearity.clone(),
        cfg.dt,
        last_step as f64 * cfg.dt,
        1,
    )?;
    let mut u = u0;
    for step in 1..=last_step {
        u = strang_step(&u, &step_cfg)?;
        if let Some(slot) = needed.get_mut(&step) {
            *slot = u.clone();
        }
    }

    for &lam in &cfg.lambdas {
        let mut residuals = Vec::new();
        for &t in &cfg.times {
            let (_, _, k1, k2) = *pairs
                .iter()
                .find(|(l, tb, _, _)| *l == lam && *tb == t)
                .unwrap();
            let t1 = k1 as f64 * cfg.dt;
            let t2 = k2 as f64 * cfg.dt;
            let lam_eff = (t2 / t1).powf(0.25);
            let u_t1 = &needed[&k1];
            let u_t2 = &needed[&k2];
            let rescaled = rescale_field(u_t2, lam_eff, lam_eff.powf(4.0 / alpha), cfg.upsample)?;
            let num = l2_window_diff(u_t1, &rescaled, cfg.window_fraction)?;
            let den = l2_window_val(u_t1, cfg.window_fraction)?;
            residuals.push(if den > 0.0 { num / den } else { 0.0 });
        }
        push_residual_verdicts(report, lam, &cfg.times, &residuals, cfg.residual_tolerance)?;
    }
    Ok(())
}

fn push_residual_verdicts(
    report: &mut ExperimentReport,
    lam: f64,
    times: &[f64],
    residuals: &[f64],
    tol: f64,
) -> Result<()> {
    let series = NormSeries::new(times.to_vec(), residuals.to_vec(), NormKind::Lp(2.0))?;
    report.series.push((format!("residual_lambda_{lam}"), series));
    let worst = residuals.iter().cloned().fold(0.0, f64::max);
    report.verdicts.push(Verdict::new(
        format!("self-similarity residual at lambda = {lam}"),
        worst < tol,
        worst,
        tol,
        format!("residuals over t {times:?}: {residuals:?}"),
    ));
    Ok(())
}

/// `lambda^{amp_exponent-ish} u(lambda x)` by spectral zero-padding: the
/// spectrum is embedded in a grid refined by `upsample`, transformed back,
/// and evaluated at `lambda x` by multilinear interpolation on the fine
/// periodic grid (exact at `lambda = 1`).
fn rescale_field(
    field: &ComplexField,
    lambda: f64,
    amplitude: f64,
    upsample: usize,
) -> Result<ComplexField> {
    field.expect_space(Space::Physical)?;
    let g = field.grid().clone();
    let ndim = g.ndim();
    let fine_points: Vec<usize> = g.points().iter().map(|&n| n * upsample).collect();
    let fine_grid = Arc::new(grid::make_grid(ndim, &fine_points, g.half_width())?);

    let spectrum = grid::to_spectral(field)?;
    // Embed coefficients by integer mode; unitary normalization needs the
    // sqrt of the point-count ratio.
    let mut fine_coeffs = vec![Complex64::new(0.0, 0.0); fine_grid.len()];
    let scale = ((fine_grid.len() as f64) / (g.len() as f64)).sqrt();
    let mut ix = [0usize; MAX_NDIM];
    for (idx, &c) in spectrum.samples().iter().enumerate() {
        g.unravel(idx, &mut ix);
        let mut fine_idx = 0usize;
        for axis in 0..ndim {
            let m = g.modes(axis)[ix[axis]];
            let nf = fine_points[axis];
            let k = if m >= 0 { m as usize } else { (nf as i64 + m) as usize };
            fine_idx = fine_idx * nf + k;
        }
        fine_coeffs[fine_idx] = c * scale;
    }
    let fine_spectral = ComplexField::from_samples(&fine_grid, fine_coeffs, Space::Spectral)?;
    let fine = grid::to_physical(&fine_spectral)?;

    // Evaluate u(lambda x) on the coarse grid.
    let mut out = vec![Complex64::new(0.0, 0.0); g.len()];
    let fine_samples = fine.samples();
    let mut x = [0.0f64; MAX_NDIM];
    let mut lo = [0usize; MAX_NDIM];
    let mut frac = [0.0f64; MAX_NDIM];
    for (idx, slot) in out.iter_mut().enumerate() {
        g.coord(idx, &mut x);
        for axis in 0..ndim {
            let l = g.half_width()[axis];
            let nf = fine_points[axis] as f64;
            let step = 2.0 * l / nf;
            let pos = (lambda * x[axis] + l).rem_euclid(2.0 * l) / step;
            let base = pos.floor();
            lo[axis] = (base as usize) % fine_points[axis];
            frac[axis] = pos - base;
        }
        // multilinear over the 2^ndim corners
        let mut acc = Complex64::new(0.0, 0.0);
        for corner in 0..(1usize << ndim) {
            let mut weight = 1.0;
            let mut fine_idx = 0usize;
            for axis in 0..ndim {
                let hi = (corner >> axis) & 1 == 1;
                let j = if hi {
                    (lo[axis] + 1) % fine_points[axis]
                } else {
                    lo[axis]
                };
                weight *= if hi { frac[axis] } else { 1.0 - frac[axis] };
                fine_idx = fine_idx * fine_points[axis] + j;
            }
            acc += fine_samples[fine_idx] * weight;
        }
        *slot = acc * amplitude;
    }
    ComplexField::from_samples(field.grid(), out, Space::Physical)
}

fn window_mask(g: &GridSpec, fraction: f64, idx: usize) -> bool {
    let mut x = [0.0f64; MAX_NDIM];
    g.coord(idx, &mut x);
    (0..g.ndim()).all(|a| x[a].abs() <= fraction * g.half_width()[a])
}

fn l2_window_diff(a: &ComplexField, b: &ComplexField, fraction: f64) -> Result<f64> {
    let g = a.grid().clone();
    let mut sum = 0.0;
    for (idx, (x, y)) in a.samples().iter().zip(b.samples()).enumerate() {
        if window_mask(&g, fraction, idx) {
            sum += (x - y).norm_sqr();
        }
    }
    Ok((g.cell_volume() * sum).sqrt())
}

fn l2_window_val(a: &ComplexField, fraction: f64) -> Result<f64> {
    let g = a.grid().clone();
    let mut sum = 0.0;
    for (idx, x) in a.samples().iter().enumerate() {
        if window_mask(&g, fraction, idx) {
            sum += x.norm_sqr();
        }
    }
    Ok((g.cell_volume() * sum).sqrt())
}

fn l2_window(a: &ComplexField, b: &ComplexField, fraction: f64) -> Result<f64> {
    l2_window_diff(a, b, fraction)
}
