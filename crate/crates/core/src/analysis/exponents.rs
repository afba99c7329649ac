//! Exponent formulas of the local/global theory and the admissible
//! `(1/p, 1/q)` region.
//!
//! With the effective dimension `n_eff = n` (isotropic) or `2n - d`
//! (anisotropic):
//!
//! * `beta  = n_eff alpha / (4 p (alpha+1))` — weight of the local norm;
//! * `sigma = 1/alpha - n_eff / (4 (alpha+2))` — scaling-invariant weight;
//! * `b_l   = (n_eff/4) (1/p - 1/q)` — finite-horizon decay;
//! * `b_g   = (n_eff/4) (2/p - 1)` — global decay onto the dual exponent.

use crate::dispersion::DispersionVariant;
use crate::error::{CoreError, Result};

/// Vertices of the admissible quadrilateral in the `(1/p, 1/q)` plane:
/// `B`, `P0`, `Q0`, `R0`.
pub const XI0_VERTICES: [(f64, f64); 4] = [
    (1.0, 0.0),
    (2.0 / 3.0, 0.0),
    (1.0, 1.0 / 3.0),
    (0.5, 0.5),
];

/// Exponents attached to `(n, d, alpha, p)` for one dispersion variant.
#[derive(Debug, Clone, Copy)]
pub struct ExponentSet {
    pub n: usize,
    pub d: Option<usize>,
    pub alpha: f64,
    pub p: f64,
    /// Lebesgue index of the local theory, `p (alpha + 1)`.
    pub q_local: f64,
    /// Lebesgue index of the global theory, `alpha + 2`.
    pub q_global: f64,
    pub beta: f64,
    pub sigma: f64,
    /// Local decay exponent at `(p, q_local)`.
    pub b_l: f64,
    /// Global decay exponent `(n_eff/4)(2/p - 1)`.
    pub b_g: f64,
    pub variant: DispersionVariant,
}

impl ExponentSet {
    /// Effective dimension in every numerator.
    pub fn n_eff(&self) -> f64 {
        match self.variant {
            DispersionVariant::Isotropic => self.n as f64,
            DispersionVariant::Anisotropic { d } => (2 * self.n - d) as f64,
        }
    }

    /// `b_l` for an arbitrary target exponent `q`.
    pub fn b_l_for(&self, q: f64) -> f64 {
        self.n_eff() / 4.0 * (1.0 / self.p - 1.0 / q)
    }

    /// Contraction-horizon exponent `1 - beta (alpha + 1)` of the local proof.
    pub fn horizon_exponent(&self) -> f64 {
        1.0 - self.beta * (self.alpha + 1.0)
    }
}

/// Computes the exponent set. `d` is required (and `d < n`) for the
/// anisotropic variant and ignored otherwise.
pub fn exponent_set(
    n: usize,
    d: Option<usize>,
    alpha: f64,
    p: f64,
    variant: DispersionVariant,
) -> Result<ExponentSet> {
    if n == 0 || n > 3 {
        return Err(CoreError::InvalidParameter(format!("n must be 1..=3, got {n}")));
    }
    if !(alpha >= 1.0) {
        return Err(CoreError::InvalidParameter(format!(
            "alpha must be >= 1, got {alpha}"
        )));
    }
    if !(p >= 1.0) {
        return Err(CoreError::InvalidParameter(format!("p must be >= 1, got {p}")));
    }
    let n_eff = match variant {
        DispersionVariant::Isotropic => n as f64,
        DispersionVariant::Anisotropic { d: dv } => {
            let dd = d.unwrap_or(dv);
            if dd == 0 || dd >= n {
                return Err(CoreError::InvalidParameter(format!(
                    "anisotropic d = {dd} must satisfy 1 <= d < n = {n}"
                )));
            }
            (2 * n - dd) as f64
        }
    };
    let q_local = p * (alpha + 1.0);
    Ok(ExponentSet {
        n,
        d: match variant {
            DispersionVariant::Isotropic => None,
            DispersionVariant::Anisotropic { d: dv } => Some(d.unwrap_or(dv)),
        },
        alpha,
        p,
        q_local,
        q_global: alpha + 2.0,
        beta: n_eff * alpha / (4.0 * p * (alpha + 1.0)),
        sigma: 1.0 / alpha - n_eff / (4.0 * (alpha + 2.0)),
        b_l: n_eff / 4.0 * (1.0 / p - 1.0 / q_local),
        b_g: n_eff / 4.0 * (2.0 / p - 1.0),
        variant,
    })
}

/// Classification of a point against the admissible quadrilateral.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Xi0Class {
    Interior,
    /// On the boundary and contained in the region (edges and the apices
    /// `B`, `R0`).
    BoundaryIncluded,
    /// The excluded apices `P0`, `Q0`.
    BoundaryExcluded,
    Outside,
}

impl Xi0Class {
    pub fn is_member(self) -> bool {
        matches!(self, Xi0Class::Interior | Xi0Class::BoundaryIncluded)
    }
}

const XI0_TOL: f64 = 1e-12;

/// Classifies `(1/p, 1/q)` against the quadrilateral `R0 P0 B Q0` by
/// half-plane tests, applying the inclusion rules for the boundary.
pub fn xi0_membership(inv_p: f64, inv_q: f64) -> Xi0Class {
    let (b, p0, q0, r0) = (
        XI0_VERTICES[0],
        XI0_VERTICES[1],
        XI0_VERTICES[2],
        XI0_VERTICES[3],
    );
    // Counterclockwise orbit of the quadrilateral.
    let ring = [r0, p0, b, q0];
    let pt = (inv_p, inv_q);

    let mut on_boundary = false;
    for i in 0..4 {
        let a = ring[i];
        let c = ring[(i + 1) % 4];
        let cross = (c.0 - a.0) * (pt.1 - a.1) - (c.1 - a.1) * (pt.0 - a.0);
        if cross < -XI0_TOL {
            return Xi0Class::Outside;
        }
        if cross.abs() <= XI0_TOL {
            on_boundary = true;
        }
    }
    if !on_boundary {
        return Xi0Class::Interior;
    }
    let near = |v: (f64, f64)| (pt.0 - v.0).abs() <= XI0_TOL && (pt.1 - v.1).abs() <= XI0_TOL;
    if near(p0) || near(q0) {
        Xi0Class::BoundaryExcluded
    } else {
        Xi0Class::BoundaryIncluded
    }
}
