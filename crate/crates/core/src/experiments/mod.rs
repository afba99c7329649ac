//! Reproducible experiment harnesses: decay studies, Picard certification,
//! self-similarity checks, vanishing-dispersion limits, radial preservation,
//! and report persistence.
//!
//! Every experiment is a pure function of its config: identical inputs give
//! identical reports (and identical files, apart from the labelled
//! timestamp line).

mod decay;
mod eps_limit;
mod persist;
mod picard_cert;
mod radial;
mod selfsim;

pub use decay::{decay_study, DecayConfig};
pub use eps_limit::{eps_limit_study, EpsLimitConfig, EpsLimitMode};
pub use persist::{persist_report, read_snapshot, write_snapshot};
pub use picard_cert::{picard_certify, PicardCertifyConfig};
pub use radial::{radial_study, RadialConfig};
pub use selfsim::{self_similarity_study, SelfSimConfig, SelfSimMode};

use num_complex::Complex64;
use std::sync::Arc;

use crate::analysis::NormSeries;
use crate::error::{CoreError, Result};
use crate::grid::{
    default_mollification_radius, sample_function, sample_function_mollified, ComplexField,
    GridSpec,
};

/// Initial-data recipes shared by the experiments and the CLI.
#[derive(Debug, Clone)]
pub enum InitialData {
    /// `amplitude * exp(-sum ((x_a - c_a) / w_a)^2)`.
    Gaussian {
        amplitude: f64,
        widths: Vec<f64>,
        center: Vec<f64>,
    },
    /// Homogeneous `amplitude * |x|^{-gamma}`, radially clamped at
    /// `r0 = 2 max dx`; an optional smooth spectral low-pass
    /// `exp(-(|xi|/xi_cutoff)^16)` tames the wrapped ultraviolet tail.
    HomogeneousPower {
        amplitude: f64,
        gamma: f64,
        xi_cutoff: Option<f64>,
    },
}

impl InitialData {
    pub fn gaussian(amplitude: f64) -> Self {
        InitialData::Gaussian {
            amplitude,
            widths: vec![],
            center: vec![],
        }
    }

    fn widths_for(&self, ndim: usize) -> Result<Vec<f64>> {
        match self {
            InitialData::Gaussian { widths, .. } => {
                let w = if widths.is_empty() {
                    vec![1.0; ndim]
                } else if widths.len() == 1 {
                    vec![widths[0]; ndim]
                } else if widths.len() == ndim {
                    widths.clone()
                } else {
                    return Err(CoreError::Experiment(format!(
                        "gaussian widths: expected 1 or {ndim} entries, got {}",
                        widths.len()
                    )));
                };
                if w.iter().any(|&v| !(v > 0.0)) {
                    return Err(CoreError::Experiment("gaussian widths must be > 0".into()));
                }
                Ok(w)
            }
            _ => unreachable!(),
        }
    }

    /// Pointwise closure (no grid mollification; homogeneous data is clamped
    /// at the given radius so the closure is still finite everywhere).
    pub fn closure(&self, ndim: usize, clamp_radius: f64) -> Result<impl Fn(&[f64]) -> Complex64 + Send + Sync + Clone>
    {
        enum Kind {
            Gaussian {
                amplitude: f64,
                widths: Vec<f64>,
                center: Vec<f64>,
            },
            Power {
                amplitude: f64,
                gamma: f64,
                r0: f64,
            },
        }
        impl Clone for Kind {
            fn clone(&self) -> Self {
                match self {
                    Kind::Gaussian {
                        amplitude,
                        widths,
                        center,
                    } => Kind::Gaussian {
                        amplitude: *amplitude,
                        widths: widths.clone(),
                        center: center.clone(),
                    },
                    Kind::Power {
                        amplitude,
                        gamma,
                        r0,
                    } => Kind::Power {
                        amplitude: *amplitude,
                        gamma: *gamma,
                        r0: *r0,
                    },
                }
            }
        }
        let kind = match self {
            InitialData::Gaussian {
                amplitude, center, ..
            } => {
                let widths = self.widths_for(ndim)?;
                let c = if center.is_empty() {
                    vec![0.0; ndim]
                } else if center.len() == ndim {
                    center.clone()
                } else {
                    return Err(CoreError::Experiment(format!(
                        "gaussian center: expected {ndim} entries, got {}",
                        center.len()
                    )));
                };
                Kind::Gaussian {
                    amplitude: *amplitude,
                    widths,
                    center: c,
                }
            }
            InitialData::HomogeneousPower {
                amplitude, gamma, ..
            } => Kind::Power {
                amplitude: *amplitude,
                gamma: *gamma,
                r0: clamp_radius,
            },
        };

        #[derive(Clone)]
        struct Closure(std::sync::Arc<Kind>);
        let closure = Closure(std::sync::Arc::new(kind));
        Ok(move |x: &[f64]| match closure.0.as_ref() {
            Kind::Gaussian {
                amplitude,
                widths,
                center,
            } => {
                let s: f64 = x
                    .iter()
                    .zip(widths)
                    .zip(center)
                    .map(|((&xi, &w), &c)| ((xi - c) / w).powi(2))
                    .sum();
                Complex64::new(amplitude * (-s).exp(), 0.0)
            }
            Kind::Power {
                amplitude,
                gamma,
                r0,
            } => {
                let r: f64 = x.iter().map(|v| v * v).sum::<f64>().sqrt().max(*r0);
                Complex64::new(amplitude * r.powf(-gamma), 0.0)
            }
        })
    }

    /// Samples the data onto the grid, applying the mollification policy and
    /// the optional spectral low-pass.
    pub fn realize(&self, grid: &Arc<GridSpec>) -> Result<ComplexField> {
        match self {
            InitialData::Gaussian { .. } => {
                let f = self.closure(grid.ndim(), 1.0)?;
                sample_function(grid, |x| f(x))
            }
            InitialData::HomogeneousPower {
                amplitude,
                gamma,
                xi_cutoff,
            } => {
                let r0 = default_mollification_radius(grid);
                let (a, g) = (*amplitude, *gamma);
                let field = sample_function_mollified(grid, r0, move |x| {
                    let r: f64 = x.iter().map(|v| v * v).sum::<f64>().sqrt();
                    Complex64::new(a * r.powf(-g), 0.0)
                })?;
                match xi_cutoff {
                    None => Ok(field),
                    Some(cut) => {
                        if !(cut > &0.0) {
                            return Err(CoreError::Experiment(
                                "xi_cutoff must be > 0".into(),
                            ));
                        }
                        let mut spectral = crate::grid::to_spectral(&field)?;
                        let c = *cut;
                        crate::grid::apply_spectral_multiplier(&mut spectral, move |xi| {
                            let r = xi.iter().map(|v| v * v).sum::<f64>().sqrt();
                            Complex64::new((-(r / c).powi(16)).exp(), 0.0)
                        });
                        crate::grid::to_physical(&spectral)
                    }
                }
            }
        }
    }

    pub fn describe(&self) -> String {
        match self {
            InitialData::Gaussian {
                amplitude,
                widths,
                center,
            } => format!("gaussian(amplitude={amplitude}, widths={widths:?}, center={center:?})"),
            InitialData::HomogeneousPower {
                amplitude,
                gamma,
                xi_cutoff,
            } => format!(
                "homogeneous(amplitude={amplitude}, gamma={gamma}, xi_cutoff={xi_cutoff:?})"
            ),
        }
    }
}

/// One pass/fail check inside a report.
#[derive(Debug, Clone)]
pub struct Verdict {
    pub criterion: String,
    pub pass: bool,
    pub measured: f64,
    pub tolerance: f64,
    pub detail: String,
}

impl Verdict {
    pub fn new(
        criterion: impl Into<String>,
        pass: bool,
        measured: f64,
        tolerance: f64,
        detail: impl Into<String>,
    ) -> Self {
        Verdict {
            criterion: criterion.into(),
            pass,
            measured,
            tolerance,
            detail: detail.into(),
        }
    }
}

/// Grid, stepping and seeding facts attached to every report.
#[derive(Debug, Clone, Default)]
pub struct Provenance {
    pub grid_points: Vec<usize>,
    pub half_width: Vec<f64>,
    pub dt: Option<f64>,
    pub seed: Option<u64>,
}

impl Provenance {
    pub fn from_grid(grid: &GridSpec) -> Self {
        Provenance {
            grid_points: grid.points().to_vec(),
            half_width: grid.half_width().to_vec(),
            dt: None,
            seed: None,
        }
    }
}

/// Per-snapshot scalar metrics (the `metrics.csv` table).
#[derive(Debug, Clone)]
pub struct MetricsRow {
    pub t: f64,
    pub mass: f64,
    pub energy: f64,
    pub h2: f64,
    pub linf: f64,
    pub weak_lp: f64,
}

#[derive(Debug, Clone)]
pub struct MetricsTable {
    /// The `p` of the `weak_lp_<p>` column.
    pub weak_p: f64,
    pub rows: Vec<MetricsRow>,
}

/// Everything an experiment produces.
#[derive(Debug, Clone)]
pub struct ExperimentReport {
    pub kind: String,
    pub config_echo: Vec<(String, String)>,
    pub series: Vec<(String, NormSeries)>,
    pub fitted: Vec<(String, f64, f64)>,
    pub verdicts: Vec<Verdict>,
    pub provenance: Provenance,
    pub metrics: Option<MetricsTable>,
    pub snapshots: Vec<(f64, ComplexField)>,
}

impl ExperimentReport {
    pub fn new(kind: impl Into<String>, provenance: Provenance) -> Self {
        ExperimentReport {
            kind: kind.into(),
            config_echo: Vec::new(),
            series: Vec::new(),
            fitted: Vec::new(),
            verdicts: Vec::new(),
            provenance,
            metrics: None,
            snapshots: Vec::new(),
        }
    }

    pub fn echo(&mut self, key: impl Into<String>, value: impl std::fmt::Display) {
        self.config_echo.push((key.into(), value.to_string()));
    }

    pub fn all_pass(&self) -> bool {
        self.verdicts.iter().all(|v| v.pass)
    }
}

/// Computes a `MetricsRow` for a snapshot.
pub fn metrics_row(
    t: f64,
    field: &ComplexField,
    dispersion: &crate::dispersion::DispersionParams,
    nonlinearity: &crate::nonlinearity::NonlinearityParams,
    weak_p: f64,
) -> Result<MetricsRow> {
    let (mass, energy) = crate::analysis::conserved_quantities(field, dispersion, nonlinearity)?;
    Ok(MetricsRow {
        t,
        mass,
        energy,
        h2: crate::analysis::sobolev_norm(field, 2.0)?,
        linf: crate::analysis::linf_norm(field),
        weak_lp: crate::analysis::lorentz_quasinorm(
            field,
            weak_p,
            crate::analysis::LorentzIndex::Infinity,
        )?,
    })
}
