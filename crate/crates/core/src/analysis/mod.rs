//! Norm toolkit: decreasing rearrangement, Lorentz quasinorms, Sobolev
//! norms, conserved quantities, exponent formulas, admissible-region logic
//! and decay-exponent fitting.

mod exponents;
mod fitting;
mod norms;
mod rearrangement;

pub use exponents::{exponent_set, xi0_membership, ExponentSet, Xi0Class, XI0_VERTICES};
pub use fitting::{fit_decay_exponent, loglog_slope};
pub use norms::{
    conserved_quantities, linf_norm, lp_norm, sobolev_norm, weighted_time_norm, xt_norm,
};
pub use rearrangement::{
    decreasing_rearrangement, lorentz_quasinorm, weak_quasinorm_gstar, LorentzIndex,
    Rearrangement,
};

use crate::error::{CoreError, Result};

/// Which norm a time series of values was measured in.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum NormKind {
    WeakLp(f64),
    Lp(f64),
    Hs(f64),
    Linf,
}

impl std::fmt::Display for NormKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            NormKind::WeakLp(p) => write!(f, "weak_lp_{p}"),
            NormKind::Lp(p) => write!(f, "lp_{p}"),
            NormKind::Hs(s) => write!(f, "h{s}"),
            NormKind::Linf => write!(f, "linf"),
        }
    }
}

/// A sorted time series of nonnegative norm values.
#[derive(Debug, Clone)]
pub struct NormSeries {
    times: Vec<f64>,
    values: Vec<f64>,
    pub kind: NormKind,
}

impl NormSeries {
    pub fn new(times: Vec<f64>, values: Vec<f64>, kind: NormKind) -> Result<Self> {
        if times.len() != values.len() {
            return Err(CoreError::Norm(format!(
                "series length mismatch: {} times vs {} values",
                times.len(),
                values.len()
            )));
        }
        if times.windows(2).any(|w| w[0] > w[1]) {
            return Err(CoreError::Norm("series times must be sorted".into()));
        }
        if values.iter().any(|v| !v.is_finite() || *v < 0.0) {
            return Err(CoreError::Norm(
                "series values must be finite and nonnegative".into(),
            ));
        }
        Ok(NormSeries {
            times,
            values,
            kind,
        })
    }

    pub fn times(&self) -> &[f64] {
        &self.times
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }
}

/// Geometric time mesh with ratio `2^(1/4)` between `t_min` and `t_max`,
/// endpoints included.
pub fn geometric_mesh(t_min: f64, t_max: f64) -> Vec<f64> {
    assert!(t_min > 0.0 && t_max > t_min);
    let ratio = 2f64.powf(0.25);
    let mut out = vec![t_min];
    let mut t = t_min;
    loop {
        t *= ratio;
        if t >= t_max {
            break;
        }
        out.push(t);
    }
    out.push(t_max);
    out
}
