//! TOML run configuration: strict schema (unknown keys rejected), defaults
//! for numerical knobs only, and parse-time checks of the theorem
//! hypotheses a run depends on.

use std::path::Path;
use std::sync::Arc;

use serde::Deserialize;

use f4ns_core::analysis::{exponent_set, xi0_membership, Xi0Class};
use f4ns_core::dispersion::{DispersionParams, DispersionVariant};
use f4ns_core::experiments::{
    DecayConfig, EpsLimitConfig, EpsLimitMode, InitialData, PicardCertifyConfig, RadialConfig,
    SelfSimConfig, SelfSimMode,
};
use f4ns_core::grid::{make_grid, GridSpec};
use f4ns_core::integrators::{EvolveConfig, PicardConfig};
use f4ns_core::nonlinearity::NonlinearityParams;

#[derive(Debug)]
pub struct ConfigError(pub String);

impl std::fmt::Display for ConfigError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "config error: {}", self.0)
    }
}

impl std::error::Error for ConfigError {}

type CResult<T> = Result<T, ConfigError>;

fn cerr(msg: impl Into<String>) -> ConfigError {
    ConfigError(msg.into())
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConfigFile {
    pub command: String,
    #[serde(default)]
    pub out_dir: Option<String>,
    #[serde(default)]
    pub seed: Option<u64>,
    pub grid: GridBlock,
    pub dispersion: DispersionBlock,
    pub nonlinearity: NonlinearityBlock,
    #[serde(default)]
    pub initial: Option<InitialBlock>,
    #[serde(default)]
    pub evolve: Option<EvolveBlock>,
    #[serde(default)]
    pub decay: Option<DecayBlock>,
    #[serde(default)]
    pub picard: Option<PicardBlock>,
    #[serde(default)]
    pub selfsim: Option<SelfSimBlock>,
    #[serde(default)]
    pub eps_limit: Option<EpsLimitBlock>,
    #[serde(default)]
    pub radial: Option<RadialBlock>,
    #[serde(default)]
    pub norms: Option<NormsBlock>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridBlock {
    pub ndim: usize,
    pub points: Vec<usize>,
    pub half_width: Vec<f64>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DispersionBlock {
    pub epsilon: f64,
    pub delta: f64,
    pub variant: String,
    #[serde(default)]
    pub d: Option<usize>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NonlinearityBlock {
    pub lambda: f64,
    pub alpha: f64,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InitialBlock {
    pub kind: String,
    pub amplitude: f64,
    #[serde(default)]
    pub widths: Vec<f64>,
    #[serde(default)]
    pub center: Vec<f64>,
    #[serde(default)]
    pub gamma: Option<f64>,
    #[serde(default)]
    pub xi_cutoff: Option<f64>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EvolveBlock {
    pub t_end: f64,
    #[serde(default = "default_dt")]
    pub dt: f64,
    #[serde(default)]
    pub snapshot_stride: Option<usize>,
    #[serde(default = "default_weak_p")]
    pub weak_p: f64,
}

fn default_dt() -> f64 {
    1e-3
}

fn default_weak_p() -> f64 {
    4.0
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DecayBlock {
    pub p_values: Vec<f64>,
    pub window: [f64; 2],
    #[serde(default = "default_samples")]
    pub samples: usize,
    #[serde(default = "default_slope_tol")]
    pub slope_tolerance: f64,
}

fn default_samples() -> usize {
    17
}

fn default_slope_tol() -> f64 {
    0.05
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PicardBlock {
    pub p: f64,
    pub t_star: f64,
    #[serde(default = "default_quad_nodes")]
    pub quad_nodes: usize,
    #[serde(default = "default_max_iters")]
    pub max_iters: usize,
    #[serde(default = "default_picard_tol")]
    pub tol: f64,
    #[serde(default = "default_mesh_points")]
    pub mesh_points: usize,
    #[serde(default = "default_ratio_threshold")]
    pub ratio_threshold: f64,
    #[serde(default = "default_split_dt")]
    pub split_step_dt: f64,
    #[serde(default = "default_h2_tol")]
    pub h2_tolerance: f64,
}

fn default_quad_nodes() -> usize {
    16
}
fn default_max_iters() -> usize {
    12
}
fn default_picard_tol() -> f64 {
    1e-12
}
fn default_mesh_points() -> usize {
    40
}
fn default_ratio_threshold() -> f64 {
    0.5
}
fn default_split_dt() -> f64 {
    5e-4
}
fn default_h2_tol() -> f64 {
    1e-3
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SelfSimBlock {
    pub mode: String,
    pub lambdas: Vec<f64>,
    pub times: Vec<f64>,
    #[serde(default = "default_dt")]
    pub dt: f64,
    pub residual_tolerance: f64,
    #[serde(default = "default_window_fraction")]
    pub window_fraction: f64,
    #[serde(default = "default_upsample")]
    pub upsample: usize,
}

fn default_window_fraction() -> f64 {
    0.25
}
fn default_upsample() -> usize {
    8
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EpsLimitBlock {
    pub mode: String,
    pub eps_list: Vec<f64>,
    pub t_eval: f64,
    #[serde(default = "default_dt")]
    pub dt: f64,
    #[serde(default = "default_p")]
    pub p: f64,
    #[serde(default = "default_r")]
    pub r: f64,
    #[serde(default = "default_stride")]
    pub snapshot_stride: usize,
    #[serde(default = "default_monotone_tol")]
    pub monotone_tolerance: f64,
    #[serde(default = "default_slope_threshold")]
    pub slope_threshold: f64,
    #[serde(default = "default_shrink")]
    pub shrink_factor: f64,
}

fn default_p() -> f64 {
    1.2
}
fn default_r() -> f64 {
    3.0
}
fn default_stride() -> usize {
    25
}
fn default_monotone_tol() -> f64 {
    0.01
}
fn default_slope_threshold() -> f64 {
    0.9
}
fn default_shrink() -> f64 {
    10.0
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RadialBlock {
    #[serde(default = "default_dt")]
    pub dt: f64,
    pub steps: usize,
    #[serde(default = "default_stride")]
    pub snapshot_stride: usize,
    #[serde(default = "default_variance_threshold")]
    pub variance_threshold: f64,
}

fn default_variance_threshold() -> f64 {
    1e-8
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NormsBlock {
    pub p_values: Vec<f64>,
    #[serde(default = "default_sobolev_orders")]
    pub sobolev_orders: Vec<f64>,
    #[serde(default = "default_random_fields")]
    pub random_fields: usize,
}

fn default_sobolev_orders() -> Vec<f64> {
    vec![0.0, 1.0, 2.0]
}
fn default_random_fields() -> usize {
    100
}

/// Fully validated run plan.
pub struct RunConfig {
    pub command: Command,
    pub out_dir: String,
    pub seed: u64,
    pub grid: Arc<GridSpec>,
    pub initial: InitialData,
    /// Resolved key/value view for `--dry-run` and report echoes.
    pub resolved: Vec<(String, String)>,
}

pub enum Command {
    Evolve(EvolveConfig, f64),
    Decay(DecayConfig),
    Picard(PicardCertifyConfig),
    SelfSim(SelfSimConfig),
    EpsLimit(EpsLimitConfig),
    Radial(RadialConfig),
    Norms {
        p_values: Vec<f64>,
        sobolev_orders: Vec<f64>,
        random_fields: usize,
    },
}

pub fn parse_config(path: &Path) -> CResult<RunConfig> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| cerr(format!("cannot read {}: {e}", path.display())))?;
    let file: ConfigFile = toml::from_str(&text).map_err(|e| cerr(e.to_string()))?;
    build(file)
}

fn build(file: ConfigFile) -> CResult<RunConfig> {
    let grid = Arc::new(
        make_grid(file.grid.ndim, &file.grid.points, &file.grid.half_width)
            .map_err(|e| cerr(e.to_string()))?,
    );

    let variant = match file.dispersion.variant.as_str() {
        "isotropic" => DispersionVariant::Isotropic,
        "anisotropic" => {
            let d = file
                .dispersion
                .d
                .ok_or_else(|| cerr("anisotropic dispersion requires the `d` field"))?;
            DispersionVariant::Anisotropic { d }
        }
        other => {
            return Err(cerr(format!(
                "dispersion.variant must be \"isotropic\" or \"anisotropic\", got \"{other}\""
            )))
        }
    };
    let dispersion = DispersionParams::new(file.dispersion.epsilon, file.dispersion.delta, variant)
        .map_err(|e| cerr(e.to_string()))?;
    dispersion.check_grid(&grid).map_err(|e| cerr(e.to_string()))?;

    let nonlinearity = if file.nonlinearity.lambda == 0.0 {
        NonlinearityParams::none()
    } else {
        NonlinearityParams::power(file.nonlinearity.lambda, file.nonlinearity.alpha)
            .map_err(|e| cerr(e.to_string()))?
    };
    let alpha = file.nonlinearity.alpha;

    let initial = match &file.initial {
        None => InitialData::gaussian(1.0),
        Some(block) => match block.kind.as_str() {
            "gaussian" => InitialData::Gaussian {
                amplitude: block.amplitude,
                widths: block.widths.clone(),
                center: block.center.clone(),
            },
            "homogeneous" => InitialData::HomogeneousPower {
                amplitude: block.amplitude,
                gamma: block
                    .gamma
                    .ok_or_else(|| cerr("homogeneous initial data requires `gamma`"))?,
                xi_cutoff: block.xi_cutoff,
            },
            other => {
                return Err(cerr(format!(
                    "initial.kind must be \"gaussian\" or \"homogeneous\", got \"{other}\""
                )))
            }
        },
    };

    let seed = file.seed.unwrap_or(0);
    let out_dir = file.out_dir.clone().unwrap_or_else(|| "out".to_string());

    let mut resolved: Vec<(String, String)> = vec![
        ("command".into(), file.command.clone()),
        ("out_dir".into(), out_dir.clone()),
        ("seed".into(), seed.to_string()),
        ("grid.ndim".into(), grid.ndim().to_string()),
        ("grid.points".into(), format!("{:?}", grid.points())),
        ("grid.half_width".into(), format!("{:?}", grid.half_width())),
        ("dispersion.epsilon".into(), dispersion.epsilon.to_string()),
        ("dispersion.delta".into(), dispersion.delta.to_string()),
        ("dispersion.variant".into(), format!("{:?}", dispersion.variant)),
        ("nonlinearity.lambda".into(), file.nonlinearity.lambda.to_string()),
        ("nonlinearity.alpha".into(), alpha.to_string()),
        ("initial".into(), initial.describe()),
    ];

    let command = match file.command.as_str() {
        "evolve" => {
            let block = file
                .evolve
                .as_ref()
                .ok_or_else(|| cerr("command \"evolve\" needs an [evolve] block"))?;
            let stride = block.snapshot_stride.unwrap_or_else(|| {
                let steps = (block.t_end / block.dt).abs().round() as usize;
                (steps / 10).max(1)
            });
            resolved.push(("evolve.dt".into(), block.dt.to_string()));
            resolved.push(("evolve.t_end".into(), block.t_end.to_string()));
            resolved.push(("evolve.snapshot_stride".into(), stride.to_string()));
            resolved.push(("evolve.weak_p".into(), block.weak_p.to_string()));
            let cfg = EvolveConfig::new(
                dispersion,
                nonlinearity.clone(),
                block.dt,
                block.t_end,
                stride,
            )
            .map_err(|e| cerr(e.to_string()))?;
            Command::Evolve(cfg, block.weak_p)
        }
        "decay" => {
            let block = file
                .decay
                .as_ref()
                .ok_or_else(|| cerr("command \"decay\" needs a [decay] block"))?;
            if file.nonlinearity.lambda != 0.0 {
                return Err(cerr(
                    "decay studies measure the free group; set nonlinearity.lambda = 0",
                ));
            }
            Command::Decay(DecayConfig {
                grid: grid.clone(),
                dispersion,
                initial: initial.clone(),
                p_values: block.p_values.clone(),
                window: (block.window[0], block.window[1]),
                samples: block.samples,
                slope_tolerance: block.slope_tolerance,
            })
        }
        "picard" => {
            let block = file
                .picard
                .as_ref()
                .ok_or_else(|| cerr("command \"picard\" needs a [picard] block"))?;
            // Parse-time hypothesis checks with messages naming the rule.
            let d = match variant {
                DispersionVariant::Anisotropic { d } => Some(d),
                DispersionVariant::Isotropic => None,
            };
            let exps = exponent_set(grid.ndim(), d, alpha, block.p, variant)
                .map_err(|e| cerr(e.to_string()))?;
            let class = xi0_membership(1.0 / block.p, 1.0 / exps.q_local);
            if class != Xi0Class::Interior {
                return Err(cerr(format!(
                    "(1/p, 1/(p(alpha+1))) = ({:.4}, {:.4}) is {:?}: the local theory \
                     requires a point strictly inside the admissible quadrilateral \
                     (its apices P0, Q0 and the boundary are excluded)",
                    1.0 / block.p,
                    1.0 / exps.q_local,
                    class
                )));
            }
            if exps.beta * (alpha + 1.0) >= 1.0 {
                return Err(cerr(format!(
                    "beta (alpha+1) = {:.4} >= 1 violates the contraction-horizon \
                     hypothesis of the local existence theorem",
                    exps.beta * (alpha + 1.0)
                )));
            }
            resolved.push(("picard.beta".into(), format!("{:.6}", exps.beta)));
            Command::Picard(PicardCertifyConfig {
                grid: grid.clone(),
                initial: initial.clone(),
                picard: PicardConfig {
                    dispersion,
                    nonlinearity: nonlinearity.clone(),
                    p: block.p,
                    t_star: block.t_star,
                    quad_nodes: block.quad_nodes,
                    max_iters: block.max_iters,
                    tol: block.tol,
                    mesh_points: block.mesh_points,
                },
                ratio_threshold: block.ratio_threshold,
                split_step_dt: block.split_step_dt,
                h2_tolerance: block.h2_tolerance,
            })
        }
        "selfsim" => {
            let block = file
                .selfsim
                .as_ref()
                .ok_or_else(|| cerr("command \"selfsim\" needs a [selfsim] block"))?;
            if dispersion.epsilon != 0.0 {
                return Err(cerr(format!(
                    "self-similarity requires epsilon = 0 (the scaling invariance \
                     holds for the pure fourth-order flow); got epsilon = {}",
                    dispersion.epsilon
                )));
            }
            let mode = match block.mode.as_str() {
                "synthetic" => SelfSimMode::Synthetic,
                "simulated" => SelfSimMode::Simulated,
                other => {
                    return Err(cerr(format!(
                        "selfsim.mode must be \"synthetic\" or \"simulated\", got \"{other}\""
                    )))
                }
            };
            if mode == SelfSimMode::Simulated {
                let exps = exponent_set(grid.ndim(), None, alpha, 1.5, variant)
                    .map_err(|e| cerr(e.to_string()))?;
                if (alpha + 1.0) * exps.sigma >= 1.0 {
                    return Err(cerr(format!(
                        "(alpha+1) sigma = {:.4} >= 1 violates the global-existence \
                         hypothesis behind the self-similar solution",
                        (alpha + 1.0) * exps.sigma
                    )));
                }
            }
            Command::SelfSim(SelfSimConfig {
                grid: grid.clone(),
                dispersion,
                nonlinearity: nonlinearity.clone(),
                initial: initial.clone(),
                mode,
                lambdas: block.lambdas.clone(),
                times: block.times.clone(),
                dt: block.dt,
                residual_tolerance: block.residual_tolerance,
                window_fraction: block.window_fraction,
                upsample: block.upsample,
            })
        }
        "eps-limit" => {
            let block = file
                .eps_limit
                .as_ref()
                .ok_or_else(|| cerr("command \"eps-limit\" needs an [eps_limit] block"))?;
            let mode = match block.mode.as_str() {
                "h2" => EpsLimitMode::H2,
                "weak" => EpsLimitMode::Weak,
                other => {
                    return Err(cerr(format!(
                        "eps_limit.mode must be \"h2\" or \"weak\", got \"{other}\""
                    )))
                }
            };
            if mode == EpsLimitMode::H2 && file.nonlinearity.lambda != 0.0 {
                let even = alpha > 0.0 && alpha.fract() == 0.0 && (alpha as u64) % 2 == 0;
                if !even {
                    return Err(cerr(format!(
                        "the H2 limit theorem takes alpha as a positive even integer; \
                         got alpha = {alpha}"
                    )));
                }
            }
            if !matches!(variant, DispersionVariant::Isotropic) {
                return Err(cerr(
                    "eps-limit studies are stated for the isotropic operator",
                ));
            }
            Command::EpsLimit(EpsLimitConfig {
                grid: grid.clone(),
                initial: initial.clone(),
                delta: dispersion.delta,
                lambda: file.nonlinearity.lambda,
                alpha,
                eps_list: block.eps_list.clone(),
                t_eval: block.t_eval,
                dt: block.dt,
                mode,
                p: block.p,
                r: block.r,
                snapshot_stride: block.snapshot_stride,
                monotone_tolerance: block.monotone_tolerance,
                slope_threshold: block.slope_threshold,
                shrink_factor: block.shrink_factor,
            })
        }
        "radial" => {
            let block = file
                .radial
                .as_ref()
                .ok_or_else(|| cerr("command \"radial\" needs a [radial] block"))?;
            Command::Radial(RadialConfig {
                grid: grid.clone(),
                dispersion,
                nonlinearity: nonlinearity.clone(),
                initial: initial.clone(),
                dt: block.dt,
                steps: block.steps,
                snapshot_stride: block.snapshot_stride,
                variance_threshold: block.variance_threshold,
            })
        }
        "norms" => {
            let block = file
                .norms
                .as_ref()
                .ok_or_else(|| cerr("command \"norms\" needs a [norms] block"))?;
            Command::Norms {
                p_values: block.p_values.clone(),
                sobolev_orders: block.sobolev_orders.clone(),
                random_fields: block.random_fields,
            }
        }
        other => {
            return Err(cerr(format!(
                "unknown command \"{other}\"; expected one of evolve, decay, picard, \
                 selfsim, eps-limit, radial, norms"
            )))
        }
    };

    Ok(RunConfig {
        command,
        out_dir,
        seed,
        grid,
        initial,
        resolved,
    })
}
