//! Two routes to the mild solution: a Strang split-step spectral integrator
//! for production evolution, and the constructive Picard iteration
//! `u_1 = G(t) u_0`, `u_{k+1} = u_1 + i int_0^t G(t-tau) f(|u_k|) u_k dtau`
//! with contraction diagnostics in the weighted norm
//! `sup_t |t|^beta || . ||_{(p(alpha+1), inf)}`.

use num_complex::Complex64;

use crate::analysis::{
    decreasing_rearrangement, exponent_set, geometric_mesh, xi0_membership, ExponentSet,
    Xi0Class,
};
use crate::dispersion::{apply_free_group, DispersionParams, DispersionVariant};
use crate::error::{CoreError, Result};
use crate::grid::{self, ComplexField, Space};
use crate::nonlinearity::{
    apply_nonlinearity, dealias_in_place, nonlinear_phase_step, NonlinearityParams,
    DEALIAS_KEEP_FRACTION,
};
use crate::quadrature::gauss_legendre;

/// Split-step configuration.
///
/// `dt` and `t_end` must share their sign; negative values run the group
/// backwards in time. `t_end` must be an integer multiple of `dt`.
#[derive(Debug, Clone)]
pub struct EvolveConfig {
    pub dispersion: DispersionParams,
    pub nonlinearity: NonlinearityParams,
    pub dt: f64,
    pub t_end: f64,
    pub snapshot_stride: usize,
    /// Dealias band as a fraction of N (2/3 rule keeps `|m| <= N/3`).
    pub dealias_keep_fraction: f64,
}

impl EvolveConfig {
    pub fn new(
        dispersion: DispersionParams,
        nonlinearity: NonlinearityParams,
        dt: f64,
        t_end: f64,
        snapshot_stride: usize,
    ) -> Result<Self> {
        let cfg = EvolveConfig {
            dispersion,
            nonlinearity,
            dt,
            t_end,
            snapshot_stride,
            dealias_keep_fraction: DEALIAS_KEEP_FRACTION,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        if self.dt == 0.0 || !self.dt.is_finite() {
            return Err(CoreError::Integrator(format!("dt = {} invalid", self.dt)));
        }
        if self.t_end == 0.0 || self.t_end * self.dt < 0.0 {
            return Err(CoreError::Integrator(format!(
                "t_end = {} must be nonzero and share the sign of dt = {}",
                self.t_end, self.dt
            )));
        }
        if self.dt.abs() > self.t_end.abs() {
            return Err(CoreError::Integrator(format!(
                "dt = {} exceeds t_end = {}",
                self.dt, self.t_end
            )));
        }
        let steps = self.t_end / self.dt;
        if (steps - steps.round()).abs() > 1e-9 * steps.abs().max(1.0) {
            return Err(CoreError::Integrator(format!(
                "t_end = {} is not an integer multiple of dt = {}",
                self.t_end, self.dt
            )));
        }
        if self.snapshot_stride == 0 {
            return Err(CoreError::Integrator("snapshot_stride must be >= 1".into()));
        }
        if !(self.dealias_keep_fraction > 0.0 && self.dealias_keep_fraction <= 0.5) {
            return Err(CoreError::Integrator(format!(
                "dealias fraction {} outside (0, 0.5]",
                self.dealias_keep_fraction
            )));
        }
        Ok(())
    }

    pub fn n_steps(&self) -> usize {
        (self.t_end / self.dt).round() as usize
    }
}

/// One Strang step: half nonlinear phase, full linear multiplier, half
/// nonlinear phase, dealias. The nonlinear sub-steps preserve the pointwise
/// modulus exactly; the linear multiplier is unitary.
///
/// When the nonlinearity is absent the step reduces to the exact free group
/// (no dealias pass, so band-unlimited free runs stay untouched).
pub fn strang_step(field: &ComplexField, config: &EvolveConfig) -> Result<ComplexField> {
    field.expect_space(Space::Physical)?;
    config.dispersion.check_grid(field.grid())?;
    let dt = config.dt;
    if config.nonlinearity.is_trivial() {
        return apply_free_group(field, dt, &config.dispersion);
    }
    let mut u = field.clone();
    nonlinear_phase_step(&mut u, &config.nonlinearity, 0.5 * dt);
    let mut spectral = grid::to_spectral(&u)?;
    let p = config.dispersion;
    grid::apply_spectral_multiplier(&mut spectral, move |xi| {
        Complex64::from_polar(1.0, -dt * p.symbol(xi))
    });
    dealias_in_place(&mut spectral, config.dealias_keep_fraction);
    let mut u = grid::to_physical(&spectral)?;
    nonlinear_phase_step(&mut u, &config.nonlinearity, 0.5 * dt);
    if !u.is_finite() {
        return Err(CoreError::NonFiniteField {
            t: dt,
            detail: "field became non-finite within a Strang step".into(),
        });
    }
    Ok(u)
}

/// A sequence of `(t, field)` snapshots, physical space, times ascending
/// (or descending for backward runs).
#[derive(Debug, Clone)]
pub struct Trajectory {
    times: Vec<f64>,
    fields: Vec<ComplexField>,
}

impl Trajectory {
    pub fn new(times: Vec<f64>, fields: Vec<ComplexField>) -> Result<Self> {
        if times.len() != fields.len() || times.is_empty() {
            return Err(CoreError::Integrator(
                "trajectory needs equally many times and fields, at least one".into(),
            ));
        }
        Ok(Trajectory { times, fields })
    }

    pub fn times(&self) -> &[f64] {
        &self.times
    }

    pub fn fields(&self) -> &[ComplexField] {
        &self.fields
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn first(&self) -> &ComplexField {
        &self.fields[0]
    }

    pub fn last(&self) -> &ComplexField {
        self.fields.last().unwrap()
    }

    /// Snapshot exactly at `t` (within `1e-9 * max(|t|, 1)`).
    pub fn at(&self, t: f64) -> Option<&ComplexField> {
        let tol = 1e-9 * t.abs().max(1.0);
        self.times
            .iter()
            .position(|&s| (s - t).abs() <= tol)
            .map(|i| &self.fields[i])
    }

    /// Linear-in-time interpolation between bracketing snapshots.
    pub fn sample_linear(&self, t: f64) -> Result<ComplexField> {
        let (lo, hi) = (self.times[0], *self.times.last().unwrap());
        let (min_t, max_t) = if lo <= hi { (lo, hi) } else { (hi, lo) };
        let tol = 1e-9 * max_t.abs().max(1.0);
        if t < min_t - tol || t > max_t + tol {
            return Err(CoreError::Integrator(format!(
                "t = {t} outside trajectory coverage [{min_t}, {max_t}]"
            )));
        }
        let t = t.clamp(min_t, max_t);
        // times are monotone; find the bracketing pair
        let mut k = 0;
        for i in 0..self.times.len() - 1 {
            let (a, b) = (self.times[i], self.times[i + 1]);
            if (a <= t && t <= b) || (b <= t && t <= a) {
                k = i;
                break;
            }
        }
        let (t0, t1) = (self.times[k], self.times[k + 1]);
        let w = if t1 == t0 { 0.0 } else { (t - t0) / (t1 - t0) };
        let mut out = self.fields[k].clone();
        let next = &self.fields[k + 1];
        for (a, b) in out.samples_mut().iter_mut().zip(next.samples()) {
            *a = *a * (1.0 - w) + *b * w;
        }
        Ok(out)
    }
}

/// Runs the split-step integrator, collecting snapshots every
/// `snapshot_stride` steps; `t = 0` and `t = t_end` are always included.
pub fn evolve(u0: &ComplexField, config: &EvolveConfig) -> Result<Trajectory> {
    config.validate()?;
    u0.expect_space(Space::Physical)?;
    config.dispersion.check_grid(u0.grid())?;
    let n_steps = config.n_steps();
    let mut times = vec![0.0];
    let mut fields = vec![u0.clone()];
    let mut u = u0.clone();
    for step in 1..=n_steps {
        u = strang_step(&u, config).map_err(|e| match e {
            CoreError::NonFiniteField { detail, .. } => CoreError::NonFiniteField {
                t: step as f64 * config.dt,
                detail,
            },
            other => other,
        })?;
        if step % config.snapshot_stride == 0 || step == n_steps {
            times.push(step as f64 * config.dt);
            fields.push(u.clone());
        }
    }
    Trajectory::new(times, fields)
}

/// Nodes per panel of the composite Gauss-Legendre rule. The Duhamel
/// integrand oscillates like `exp(i a(xi) tau)` in the retained band, so a
/// single high-order rule stalls; short panels keep the per-panel phase
/// resolvable.
const GL_PANEL_NODES: usize = 8;

fn gl_panels(total_nodes: usize, a: f64, b: f64) -> Vec<(f64, f64, usize)> {
    let panels = total_nodes.div_ceil(GL_PANEL_NODES).max(1);
    let width = (b - a) / panels as f64;
    (0..panels)
        .map(|i| {
            (
                a + i as f64 * width,
                a + (i + 1) as f64 * width,
                GL_PANEL_NODES.min(total_nodes),
            )
        })
        .collect()
}

/// Composite Gauss-Legendre evaluation of the mild-solution right-hand side
/// `G(t) u_0 + i int_0^t G(t - tau) f(|u(tau)|) u(tau) dtau`, with trajectory
/// values interpolated linearly in time. `quad_nodes` is the total node
/// budget, spent in 8-node panels.
pub fn duhamel_rhs(
    trajectory: &Trajectory,
    t: f64,
    dispersion: &DispersionParams,
    nonlinearity: &NonlinearityParams,
    quad_nodes: usize,
) -> Result<ComplexField> {
    if quad_nodes == 0 {
        return Err(CoreError::Integrator("quad_nodes must be >= 1".into()));
    }
    let u0 = trajectory
        .at(0.0)
        .ok_or_else(|| CoreError::Integrator("trajectory must start at t = 0".into()))?;
    // Accumulate in spectral space; one inverse transform at the end.
    let mut acc = apply_free_group(&grid::to_spectral(u0)?, t, dispersion)?;
    if !nonlinearity.is_trivial() && t != 0.0 {
        for (a, b, nodes) in gl_panels(quad_nodes, 0.0, t) {
            let (xs, ws) = gauss_legendre(nodes);
            let half = 0.5 * (b - a);
            let mid = 0.5 * (a + b);
            for (&x, &w) in xs.iter().zip(&ws) {
                let tau = mid + half * x;
                let u_tau = trajectory.sample_linear(tau)?;
                let n_tau = apply_nonlinearity(&u_tau, nonlinearity)?;
                let propagated =
                    apply_free_group(&grid::to_spectral(&n_tau)?, t - tau, dispersion)?;
                let scale = Complex64::i() * (w * half);
                for (p, q) in acc.samples_mut().iter_mut().zip(propagated.samples()) {
                    *p += scale * q;
                }
            }
        }
    }
    grid::to_physical(&acc)
}

/// Configuration of the constructive Picard iteration on `[0, T*]`.
#[derive(Debug, Clone)]
pub struct PicardConfig {
    pub dispersion: DispersionParams,
    pub nonlinearity: NonlinearityParams,
    /// Lebesgue index `p` of the local theory; the pair
    /// `(1/p, 1/(p(alpha+1)))` must lie strictly inside the admissible region.
    pub p: f64,
    pub t_star: f64,
    pub quad_nodes: usize,
    pub max_iters: usize,
    /// Convergence threshold on the weighted-norm difference.
    pub tol: f64,
    /// Uniform trajectory mesh points on `[0, T*]`.
    pub mesh_points: usize,
}

impl PicardConfig {
    fn validate(&self, ndim: usize) -> Result<ExponentSet> {
        if !(self.t_star > 0.0) {
            return Err(CoreError::Integrator(format!(
                "T* must be > 0, got {}",
                self.t_star
            )));
        }
        if self.quad_nodes == 0 || self.mesh_points < 2 || self.max_iters == 0 {
            return Err(CoreError::Integrator(
                "quad_nodes >= 1, mesh_points >= 2, max_iters >= 1 required".into(),
            ));
        }
        let alpha = self.nonlinearity.alpha;
        let d = match self.dispersion.variant {
            DispersionVariant::Anisotropic { d } => Some(d),
            DispersionVariant::Isotropic => None,
        };
        let exps = exponent_set(ndim, d, alpha, self.p, self.dispersion.variant)?;
        let class = xi0_membership(1.0 / self.p, 1.0 / exps.q_local);
        if class != Xi0Class::Interior {
            return Err(CoreError::HypothesisViolated(format!(
                "(1/p, 1/(p(alpha+1))) = ({:.6}, {:.6}) must lie strictly inside the \
                 admissible quadrilateral (apices P0, Q0 and all boundary points are \
                 not admitted for the local theory); got {:?}",
                1.0 / self.p,
                1.0 / exps.q_local,
                class
            )));
        }
        if exps.beta * (alpha + 1.0) >= 1.0 {
            return Err(CoreError::HypothesisViolated(format!(
                "beta (alpha + 1) = {:.6} must be < 1 for the contraction horizon",
                exps.beta * (alpha + 1.0)
            )));
        }
        Ok(exps)
    }
}

/// Contraction diagnostics of a Picard run.
#[derive(Debug, Clone)]
pub struct PicardReport {
    /// Number of corrections computed after `u_1`.
    pub iterate_count: usize,
    /// Weighted-norm differences `||u_{k+1} - u_k||`.
    pub difference_norms: Vec<f64>,
    /// Successive ratios; length `iterate_count - 1`.
    pub contraction_ratios: Vec<f64>,
    /// Ball radius `K = 2 sup_t |t|^beta ||G(t) u_0||_{(p(alpha+1), inf)}`.
    pub k_ball: f64,
    /// Contraction constant backed out of the first measured ratio.
    pub c_tilde_empirical: Option<f64>,
    /// `2 C~ K^alpha (T*)^{1 - beta(alpha+1)}`, the proof-side threshold.
    pub predicted_bound: Option<f64>,
    /// Weighted-norm Duhamel residual of the final iterate.
    pub duhamel_residual: f64,
    pub converged: bool,
    pub exponents: ExponentSet,
}

fn weighted_difference_norm(
    a: &Trajectory,
    b: &Trajectory,
    sample_times: &[f64],
    beta: f64,
    q: f64,
) -> Result<f64> {
    let mut sup = 0.0f64;
    for &t in sample_times {
        let fa = a.sample_linear(t)?;
        let fb = b.sample_linear(t)?;
        let diff = fa.sub(&fb)?;
        let norm = decreasing_rearrangement(&diff)?.weak_quasinorm(q);
        sup = sup.max(t.abs().powf(beta) * norm);
    }
    Ok(sup)
}

/// Runs the Picard sequence until the weighted-norm difference drops below
/// `tol` or `max_iters` is reached; diverging runs (three consecutive
/// ratios >= 1) fail with the measured ratios.
pub fn picard_iterate(
    u0: &ComplexField,
    config: &PicardConfig,
) -> Result<(Trajectory, PicardReport)> {
    u0.expect_space(Space::Physical)?;
    config.dispersion.check_grid(u0.grid())?;
    let exps = config.validate(u0.grid().ndim())?;
    let beta = exps.beta;
    let q = exps.q_local;
    let t_star = config.t_star;
    let m = config.mesh_points;

    let mesh: Vec<f64> = (0..=m).map(|i| i as f64 * t_star / m as f64).collect();
    // Weighted sups are approximated on a geometric mesh away from the
    // trivial zero of the |t|^beta weight.
    let t_min = t_star / config.quad_nodes.max(2) as f64;
    let norm_times = geometric_mesh(t_min, t_star);

    let u1_fields: Vec<ComplexField> = mesh
        .iter()
        .map(|&t| apply_free_group(u0, t, &config.dispersion))
        .collect::<Result<_>>()?;
    let u1 = Trajectory::new(mesh.clone(), u1_fields)?;

    let mut k_half = 0.0f64;
    for &t in &norm_times {
        let f = u1.sample_linear(t)?;
        let norm = decreasing_rearrangement(&f)?.weak_quasinorm(q);
        k_half = k_half.max(t.powf(beta) * norm);
    }
    let k_ball = 2.0 * k_half;

    let mut current = u1.clone();
    let mut diffs: Vec<f64> = Vec::new();
    let mut converged = false;
    for _iter in 0..config.max_iters {
        let next_fields: Vec<ComplexField> = mesh
            .iter()
            .enumerate()
            .map(|(i, &t)| {
                if i == 0 {
                    Ok(u0.clone())
                } else {
                    let correction = duhamel_correction(
                        &current,
                        t,
                        &config.dispersion,
                        &config.nonlinearity,
                        config.quad_nodes,
                    )?;
                    let mut f = u1.fields()[i].clone();
                    for (a, b) in f.samples_mut().iter_mut().zip(correction.samples()) {
                        *a += *b;
                    }
                    Ok(f)
                }
            })
            .collect::<Result<_>>()?;
        let next = Trajectory::new(mesh.clone(), next_fields)?;
        let d = weighted_difference_norm(&next, &current, &norm_times, beta, q)?;
        diffs.push(d);
        current = next;
        if d < config.tol {
            converged = true;
            break;
        }
        let len = diffs.len();
        if len >= 4 {
            let diverging = (len - 3..len).all(|i| diffs[i] >= diffs[i - 1]);
            if diverging {
                let ratios: Vec<f64> =
                    diffs.windows(2).map(|w| w[1] / w[0]).collect();
                return Err(CoreError::PicardDiverged {
                    iterates: len,
                    ratios,
                });
            }
        }
    }

    let ratios: Vec<f64> = diffs
        .windows(2)
        .filter(|w| w[0] > 0.0)
        .map(|w| w[1] / w[0])
        .collect();
    let horizon = t_star.powf(exps.horizon_exponent());
    let c_tilde = ratios
        .first()
        .map(|r| r / (2.0 * k_ball.powf(exps.alpha) * horizon));
    let predicted = c_tilde.map(|c| 2.0 * c * k_ball.powf(exps.alpha) * horizon);
    let residual = diffs.last().copied().unwrap_or(0.0);

    Ok((
        current,
        PicardReport {
            iterate_count: diffs.len(),
            difference_norms: diffs,
            contraction_ratios: ratios,
            k_ball,
            c_tilde_empirical: c_tilde,
            predicted_bound: predicted,
            duhamel_residual: residual,
            converged,
            exponents: exps,
        },
    ))
}

/// `i int_0^t G(t - tau) f(|u(tau)|) u(tau) dtau` alone (physical space).
fn duhamel_correction(
    trajectory: &Trajectory,
    t: f64,
    dispersion: &DispersionParams,
    nonlinearity: &NonlinearityParams,
    quad_nodes: usize,
) -> Result<ComplexField> {
    let grid_ref = trajectory.first().grid().clone();
    let mut acc = ComplexField::from_samples(
        &grid_ref,
        vec![Complex64::new(0.0, 0.0); grid_ref.len()],
        Space::Spectral,
    )?;
    if nonlinearity.is_trivial() || t == 0.0 {
        return grid::to_physical(&acc);
    }
    for (a, b, nodes) in gl_panels(quad_nodes, 0.0, t) {
        let (xs, ws) = gauss_legendre(nodes);
        let half = 0.5 * (b - a);
        let mid = 0.5 * (a + b);
        for (&x, &w) in xs.iter().zip(&ws) {
            let tau = mid + half * x;
            let u_tau = trajectory.sample_linear(tau)?;
            let n_tau = apply_nonlinearity(&u_tau, nonlinearity)?;
            let propagated =
                apply_free_group(&grid::to_spectral(&n_tau)?, t - tau, dispersion)?;
            let scale = Complex64::i() * (w * half);
            for (p, q) in acc.samples_mut().iter_mut().zip(propagated.samples()) {
                *p += scale * q;
            }
        }
    }
    grid::to_physical(&acc)
}
