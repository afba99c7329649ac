//! The nonlinear term `f(|u|) u`, its dealiased pointwise application and a
//! Lipschitz-condition checker.
//!
//! The power case is `f(x) = lambda |x|^alpha` with real `alpha >= 1`;
//! non-integer `alpha` uses real exponentiation of the modulus. A custom `f`
//! hook is exposed for the general Lipschitz class, but all production runs
//! use the power case.

use num_complex::Complex64;
use std::sync::Arc;

use crate::error::{CoreError, Result};
use crate::exec;
use crate::grid::{self, ComplexField, Space};

#[derive(Clone)]
pub enum FKind {
    Power,
    Custom(Arc<dyn Fn(f64) -> f64 + Send + Sync>),
}

impl std::fmt::Debug for FKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            FKind::Power => write!(f, "Power"),
            FKind::Custom(_) => write!(f, "Custom(..)"),
        }
    }
}

/// Parameters of the nonlinearity `f(|u|) u`.
///
/// `lambda = 0` switches the term off entirely (free evolution); the paper's
/// normalization uses `lambda = +-1`.
#[derive(Debug, Clone)]
pub struct NonlinearityParams {
    pub lambda: f64,
    pub alpha: f64,
    /// Lipschitz constant; derived as `|lambda| * alpha` for the power case.
    pub c_f: f64,
    pub kind: FKind,
}

impl NonlinearityParams {
    pub fn power(lambda: f64, alpha: f64) -> Result<Self> {
        if !(alpha >= 1.0) {
            return Err(CoreError::InvalidParameter(format!(
                "alpha must satisfy 1 <= alpha, got {alpha}"
            )));
        }
        if !lambda.is_finite() {
            return Err(CoreError::InvalidParameter("lambda not finite".into()));
        }
        Ok(NonlinearityParams {
            lambda,
            alpha,
            c_f: lambda.abs() * alpha.max(1.0),
            kind: FKind::Power,
        })
    }

    pub fn custom(
        f: Arc<dyn Fn(f64) -> f64 + Send + Sync>,
        alpha: f64,
        c_f: f64,
    ) -> Result<Self> {
        if !(alpha >= 1.0) || !(c_f > 0.0) {
            return Err(CoreError::InvalidParameter(
                "custom nonlinearity needs alpha >= 1 and c_f > 0".into(),
            ));
        }
        Ok(NonlinearityParams {
            lambda: 1.0,
            alpha,
            c_f,
            kind: FKind::Custom(f),
        })
    }

    /// Free evolution (the nonlinear term is absent).
    pub fn none() -> Self {
        NonlinearityParams {
            lambda: 0.0,
            alpha: 1.0,
            c_f: 0.0,
            kind: FKind::Power,
        }
    }

    pub fn is_trivial(&self) -> bool {
        matches!(self.kind, FKind::Power) && self.lambda == 0.0
    }

    /// Evaluates `f(x)` for `x = |u| >= 0`.
    #[inline]
    pub fn f(&self, x: f64) -> f64 {
        match &self.kind {
            FKind::Power => self.lambda * x.powf(self.alpha),
            FKind::Custom(f) => f(x),
        }
    }
}

/// Pointwise `f(|u|) u` on a physical-space field.
pub fn apply_nonlinearity(
    field: &ComplexField,
    params: &NonlinearityParams,
) -> Result<ComplexField> {
    field.expect_space(Space::Physical)?;
    let mut out = field.clone();
    let p = params.clone();
    exec::for_each_mut(out.samples_mut(), move |c| {
        *c *= p.f(c.norm());
    });
    if let Some(idx) = out
        .samples()
        .iter()
        .position(|c| !c.re.is_finite() || !c.im.is_finite())
    {
        let mut x = [0.0f64; grid::MAX_NDIM];
        out.grid().coord(idx, &mut x);
        return Err(CoreError::NonFiniteSample {
            point: x[..out.grid().ndim()].to_vec(),
            index: idx,
            value: format!("{}", out.samples()[idx]),
        });
    }
    Ok(out)
}

/// Exact flow of `i u_t + f(|u|) u = 0` over `dt`: `u <- u e^{i f(|u|) dt}`.
///
/// The pointwise modulus is preserved exactly.
pub fn nonlinear_phase_step(field: &mut ComplexField, params: &NonlinearityParams, dt: f64) {
    debug_assert_eq!(field.space(), Space::Physical);
    if params.is_trivial() {
        return;
    }
    let p = params.clone();
    exec::for_each_mut(field.samples_mut(), move |c| {
        let phase = p.f(c.norm()) * dt;
        *c *= Complex64::from_polar(1.0, phase);
    });
}

/// Retained-band fraction of the 2/3 rule: keep `|m_j| <= floor(N_j / 3)`.
pub const DEALIAS_KEEP_FRACTION: f64 = 1.0 / 3.0;

/// Zeroes spectral coefficients with `|m_j| > floor(keep_frac * N_j)` on any axis.
pub fn dealias_with_fraction(field: &ComplexField, keep_frac: f64) -> Result<ComplexField> {
    field.expect_space(Space::Spectral)?;
    let mut out = field.clone();
    dealias_in_place(&mut out, keep_frac);
    Ok(out)
}

/// The 2/3-rule projection.
pub fn dealias(field: &ComplexField) -> Result<ComplexField> {
    dealias_with_fraction(field, DEALIAS_KEEP_FRACTION)
}

pub(crate) fn dealias_in_place(field: &mut ComplexField, keep_frac: f64) {
    let g = field.grid().clone();
    let cutoffs: Vec<i64> = (0..g.ndim())
        .map(|a| (keep_frac * g.points()[a] as f64).floor() as i64)
        .collect();
    exec::for_each_indexed_mut(field.samples_mut(), move |idx, c| {
        let mut ix = [0usize; grid::MAX_NDIM];
        g.unravel(idx, &mut ix);
        for axis in 0..g.ndim() {
            if g.modes(axis)[ix[axis]].abs() > cutoffs[axis] {
                *c = Complex64::new(0.0, 0.0);
                return;
            }
        }
    });
}

/// One entry of a Lipschitz-ratio report.
#[derive(Debug, Clone, Copy)]
pub struct LipschitzSample {
    pub x: f64,
    pub y: f64,
    pub ratio: f64,
}

/// Result of checking `|f(x)-f(y)| <= C_f |x-y| (|x|^{a-1} + |y|^{a-1})`.
#[derive(Debug, Clone)]
pub struct LipschitzReport {
    /// Largest observed ratio; `None` when every pair had `x == y`.
    pub max_ratio: Option<f64>,
    pub worst_pair: Option<LipschitzSample>,
    pub pairs_checked: usize,
    pub pass: bool,
}

/// Measures the Lipschitz ratio of `f` over sample pairs against `c_f`.
///
/// Pairs with `x == y` are skipped (the quotient is indeterminate there).
pub fn check_lipschitz(params: &NonlinearityParams, samples: &[(f64, f64)]) -> LipschitzReport {
    let mut max_ratio: Option<f64> = None;
    let mut worst: Option<LipschitzSample> = None;
    let mut checked = 0usize;
    for &(x, y) in samples {
        if x == y || !x.is_finite() || !y.is_finite() {
            continue;
        }
        checked += 1;
        let denom = (x - y).abs()
            * (x.abs().powf(params.alpha - 1.0) + y.abs().powf(params.alpha - 1.0));
        if denom == 0.0 {
            continue;
        }
        let ratio = (params.f(x) - params.f(y)).abs() / denom;
        if max_ratio.is_none_or(|m| ratio > m) {
            max_ratio = Some(ratio);
            worst = Some(LipschitzSample { x, y, ratio });
        }
    }
    let pass = max_ratio.is_none_or(|m| m <= params.c_f);
    LipschitzReport {
        max_ratio,
        worst_pair: worst,
        pairs_checked: checked,
        pass,
    }
}
