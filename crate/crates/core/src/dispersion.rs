//! Dispersion symbols and the exact free group of the linear equation.
//!
//! The linear flow is the Fourier multiplier `exp(-i t a(xi))` with
//!
//! * isotropic:   `a(xi) = eps |xi|^2 - delta |xi|^4`,
//! * anisotropic: `a(xi) = eps |xi|^2 - delta sum_{j<=d} xi_j^4`,
//!
//! so that `delta > 0` carries phase `+ i t delta |xi|^4`. Phases are
//! recomputed from the symbol in double precision on every call; nothing is
//! tabulated, so `t` stays continuous and no phase unwrapping is involved.

use num_complex::Complex64;
use std::sync::Arc;

use crate::error::{CoreError, Result};
use crate::grid::{self, ComplexField, GridSpec, Space};

/// Isotropic (`Delta^2`) or anisotropic (`sum_{i<=d} d^4/dx_i^4`) fourth-order term.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DispersionVariant {
    Isotropic,
    /// Fourth-order dispersion acting on the first `d` axes only.
    Anisotropic { d: usize },
}

/// Coefficients of the linear part `i u_t + eps Lap u + delta A u`.
#[derive(Debug, Clone, Copy)]
pub struct DispersionParams {
    pub epsilon: f64,
    pub delta: f64,
    pub variant: DispersionVariant,
}

impl DispersionParams {
    pub fn new(epsilon: f64, delta: f64, variant: DispersionVariant) -> Result<Self> {
        if !epsilon.is_finite() {
            return Err(CoreError::Dispersion(format!("epsilon = {epsilon} not finite")));
        }
        if delta != 1.0 && delta != -1.0 {
            return Err(CoreError::Dispersion(format!(
                "delta must be +1 or -1 (normalized), got {delta}"
            )));
        }
        if let DispersionVariant::Anisotropic { d } = variant {
            if d == 0 {
                return Err(CoreError::Dispersion("anisotropic d must be >= 1".into()));
            }
        }
        Ok(DispersionParams {
            epsilon,
            delta,
            variant,
        })
    }

    pub fn isotropic(epsilon: f64, delta: f64) -> Result<Self> {
        Self::new(epsilon, delta, DispersionVariant::Isotropic)
    }

    pub fn anisotropic(epsilon: f64, delta: f64, d: usize) -> Result<Self> {
        Self::new(epsilon, delta, DispersionVariant::Anisotropic { d })
    }

    /// Same parameters with the second-order coefficient removed.
    pub fn with_zero_epsilon(&self) -> Self {
        DispersionParams {
            epsilon: 0.0,
            ..*self
        }
    }

    /// Requires `d < ndim` for the anisotropic variant on an `ndim` grid.
    pub fn check_grid(&self, grid: &GridSpec) -> Result<()> {
        if let DispersionVariant::Anisotropic { d } = self.variant {
            if d >= grid.ndim() {
                return Err(CoreError::Dispersion(format!(
                    "anisotropic d = {d} must satisfy 1 <= d < ndim = {}",
                    grid.ndim()
                )));
            }
        }
        Ok(())
    }

    /// The real symbol `a(xi)`; the free group multiplies by `exp(-i t a)`.
    #[inline]
    pub fn symbol(&self, xi: &[f64]) -> f64 {
        let sq: f64 = xi.iter().map(|v| v * v).sum();
        let quartic: f64 = match self.variant {
            DispersionVariant::Isotropic => sq * sq,
            DispersionVariant::Anisotropic { d } => {
                xi.iter().take(d).map(|v| v.powi(4)).sum()
            }
        };
        self.epsilon * sq - self.delta * quartic
    }

    /// Per-axis group velocity component `|da/dxi_j|`.
    #[inline]
    pub fn group_velocity(&self, xi: &[f64], axis: usize) -> f64 {
        let x = xi[axis];
        let quartic_term = match self.variant {
            DispersionVariant::Isotropic => {
                let sq: f64 = xi.iter().map(|v| v * v).sum();
                4.0 * self.delta * sq * x
            }
            DispersionVariant::Anisotropic { d } => {
                if axis < d {
                    4.0 * self.delta * x * x * x
                } else {
                    0.0
                }
            }
        };
        (2.0 * self.epsilon * x - quartic_term).abs()
    }
}

/// Convenience wrapper of [`DispersionParams::symbol`].
pub fn dispersion_symbol(xi: &[f64], params: &DispersionParams) -> f64 {
    params.symbol(xi)
}

/// Applies the free group `G(t)`: spectral multiplication by `exp(-i t a(xi))`.
///
/// Accepts a field in either space and returns it in the same space. The
/// multiplier is unimodular, so the spectral l2 norm is preserved exactly
/// (Nyquist modes are cleared, once, per the grid policy).
pub fn apply_free_group(
    field: &ComplexField,
    t: f64,
    params: &DispersionParams,
) -> Result<ComplexField> {
    params.check_grid(field.grid())?;
    let input_space = field.space();
    let mut spectral = match input_space {
        Space::Spectral => field.clone(),
        Space::Physical => grid::to_spectral(field)?,
    };
    let p = *params;
    grid::apply_spectral_multiplier(&mut spectral, move |xi| {
        Complex64::from_polar(1.0, -t * p.symbol(xi))
    });
    match input_space {
        Space::Spectral => Ok(spectral),
        Space::Physical => grid::to_physical(&spectral),
    }
}

/// Applies `G_{eps,delta}(t) - G_{0,delta}(t)` in one pass.
///
/// The spectral factor is `exp(i t delta q(xi)) (exp(-i t eps |xi|^2) - 1)`
/// where `q` is the quartic part of the symbol.
pub fn group_difference(
    field: &ComplexField,
    t: f64,
    params: &DispersionParams,
) -> Result<ComplexField> {
    params.check_grid(field.grid())?;
    let input_space = field.space();
    let mut spectral = match input_space {
        Space::Spectral => field.clone(),
        Space::Physical => grid::to_spectral(field)?,
    };
    let p = *params;
    let p0 = params.with_zero_epsilon();
    grid::apply_spectral_multiplier(&mut spectral, move |xi| {
        let quartic_phase = Complex64::from_polar(1.0, -t * p0.symbol(xi));
        let sq: f64 = xi.iter().map(|v| v * v).sum();
        let eps_factor = Complex64::from_polar(1.0, -t * p.epsilon * sq) - 1.0;
        quartic_phase * eps_factor
    });
    match input_space {
        Space::Spectral => Ok(spectral),
        Space::Physical => grid::to_physical(&spectral),
    }
}

/// A space-time evaluation rule `(x, t) -> C`.
pub type SpaceTimeClosure = Arc<dyn Fn(&[f64], f64) -> Complex64 + Send + Sync>;

/// Rescales a space-time closure: `u_lambda(x, t) = lambda^{4/alpha} u(lambda x, lambda^4 t)`.
///
/// Composing `scale_transform(lambda1)` then `lambda2` equals `lambda1 * lambda2`.
pub fn scale_transform(
    u: SpaceTimeClosure,
    lambda: f64,
    alpha: f64,
) -> Result<SpaceTimeClosure> {
    if !(lambda > 0.0) {
        return Err(CoreError::InvalidParameter(format!(
            "scaling lambda must be > 0, got {lambda}"
        )));
    }
    if !(alpha >= 1.0) {
        return Err(CoreError::InvalidParameter(format!(
            "alpha must be >= 1, got {alpha}"
        )));
    }
    let amp = lambda.powf(4.0 / alpha);
    let l4 = lambda.powi(4);
    Ok(Arc::new(move |x: &[f64], t: f64| {
        let scaled: Vec<f64> = x.iter().map(|v| lambda * v).collect();
        amp * u(&scaled, l4 * t)
    }))
}

/// Wrap-around horizon `min_j 2 L_j / v_j` where `v_j` is the largest per-axis
/// group velocity over the retained band of the initial spectrum.
///
/// The retained band is the full-width-at-half-maximum set
/// `{ xi : |u0_hat(xi)| >= band_threshold * max |u0_hat| }` with
/// `band_threshold = 0.5`; faster tail modes wrap earlier but are weaker by
/// both spectral amplitude and dispersive spreading. Box-doubling is the
/// documented procedure to confirm a window is clean.
pub fn wrap_around_time(
    u0: &ComplexField,
    params: &DispersionParams,
    band_threshold: f64,
) -> Result<f64> {
    params.check_grid(u0.grid())?;
    let spectral = match u0.space() {
        Space::Spectral => u0.clone(),
        Space::Physical => grid::to_spectral(u0)?,
    };
    let g = spectral.grid().clone();
    let peak = spectral.max_abs();
    if peak == 0.0 {
        return Ok(f64::INFINITY);
    }
    let cutoff = band_threshold * peak;
    let mut v_max = vec![0.0f64; g.ndim()];
    let mut xi = [0.0f64; grid::MAX_NDIM];
    for (idx, c) in spectral.samples().iter().enumerate() {
        if c.norm() >= cutoff {
            g.wavenumber_at(idx, &mut xi);
            for (axis, vm) in v_max.iter_mut().enumerate() {
                *vm = vm.max(params.group_velocity(&xi[..g.ndim()], axis));
            }
        }
    }
    let mut t_wrap = f64::INFINITY;
    for axis in 0..g.ndim() {
        if v_max[axis] > 0.0 {
            t_wrap = t_wrap.min(2.0 * g.half_width()[axis] / v_max[axis]);
        }
    }
    Ok(t_wrap)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::analysis::fit_decay_exponent;
    use crate::analysis::NormSeries;
    use crate::grid::{make_grid, random_bandlimited, sample_function};
    use approx::assert_relative_eq;

    fn iso(eps: f64, delta: f64) -> DispersionParams {
        DispersionParams::isotropic(eps, delta).unwrap()
    }

    #[test]
    fn symbol_values() {
        assert_eq!(iso(1.0, 1.0).symbol(&[0.0, 0.0]), 0.0);
        assert_relative_eq!(iso(1.0, 1.0).symbol(&[1.0, 0.0]), 0.0); // 1 - 1
        let aniso = DispersionParams::anisotropic(0.0, 1.0, 1).unwrap();
        assert_relative_eq!(aniso.symbol(&[2.0, 3.0]), -16.0);
    }

    #[test]
    fn symbol_is_even_and_respects_permutation_symmetry() {
        let p = iso(0.7, -1.0);
        assert_relative_eq!(p.symbol(&[1.3, -0.4]), p.symbol(&[-1.3, 0.4]));
        assert_relative_eq!(p.symbol(&[1.3, -0.4]), p.symbol(&[-0.4, 1.3]));
        let a = DispersionParams::anisotropic(0.5, 1.0, 2).unwrap();
        // permutations within the first d and within the rest
        assert_relative_eq!(a.symbol(&[1.0, 2.0, 0.3]), a.symbol(&[2.0, 1.0, 0.3]));
    }

    #[test]
    fn delta_must_be_unit() {
        assert!(DispersionParams::isotropic(1.0, 0.5).is_err());
    }

    #[test]
    fn free_group_at_zero_time_is_identity() {
        let g = std::sync::Arc::new(make_grid(1, &[64], &[8.0]).unwrap());
        let f = random_bandlimited(&g, 3, 0.4);
        let out = apply_free_group(&f, 0.0, &iso(1.0, 1.0)).unwrap();
        let err: f64 = f
            .samples()
            .iter()
            .zip(out.samples())
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max);
        assert!(err < 1e-14, "G(0) moved the field by {err}");
    }

    #[test]
    fn plane_wave_is_an_eigenfunction() {
        let g = std::sync::Arc::new(make_grid(1, &[64], &[8.0]).unwrap());
        let xi_k = g.wavenumbers(0)[3];
        let f = sample_function(&g, |x| (Complex64::i() * xi_k * x[0]).exp()).unwrap();
        let p = iso(1.0, 1.0);
        let t = 0.37;
        let out = apply_free_group(&f, t, &p).unwrap();
        let expected_phase = Complex64::from_polar(1.0, -t * p.symbol(&[xi_k]));
        for (a, b) in f.samples().iter().zip(out.samples()) {
            assert_relative_eq!((a * expected_phase).re, b.re, epsilon = 1e-12);
            assert_relative_eq!((a * expected_phase).im, b.im, epsilon = 1e-12);
        }
    }

    #[test]
    fn group_law_inverse_and_unitarity_on_random_fields() {
        // Moderate band and times keep |t a(xi)| small enough that the
        // trigonometric argument reduction stays below the 1e-12 budget.
        let g = std::sync::Arc::new(make_grid(2, &[32, 32], &[4.0, 4.0]).unwrap());
        for seed in 0..20u64 {
            let f = random_bandlimited(&g, seed, 0.2);
            let p = if seed % 2 == 0 {
                iso(1.0, 1.0)
            } else {
                DispersionParams::anisotropic(-1.0, -1.0, 1).unwrap()
            };
            let (t, s) = (0.21 + seed as f64 * 0.013, -0.4 + seed as f64 * 0.07);
            let mass0: f64 = f.samples().iter().map(|c| c.norm_sqr()).sum();

            let gt = apply_free_group(&f, t, &p).unwrap();
            let mass1: f64 = gt.samples().iter().map(|c| c.norm_sqr()).sum();
            assert_relative_eq!(mass0, mass1, max_relative = 1e-12);

            let gs_gt = apply_free_group(&gt, s, &p).unwrap();
            let gts = apply_free_group(&f, t + s, &p).unwrap();
            let diff: f64 = gs_gt
                .samples()
                .iter()
                .zip(gts.samples())
                .map(|(a, b)| (a - b).norm_sqr())
                .sum::<f64>()
                .sqrt();
            assert!(diff / mass0.sqrt() < 1e-12, "group law violated: {diff}");

            let back = apply_free_group(&gt, -t, &p).unwrap();
            let inv_err: f64 = back
                .samples()
                .iter()
                .zip(f.samples())
                .map(|(a, b)| (a - b).norm_sqr())
                .sum::<f64>()
                .sqrt();
            assert!(inv_err / mass0.sqrt() < 1e-12);
        }
    }

    #[test]
    fn group_difference_matches_two_applications() {
        let g = std::sync::Arc::new(make_grid(1, &[128], &[8.0]).unwrap());
        let f = random_bandlimited(&g, 11, 0.1);
        let p = iso(0.3, 1.0);
        let t = 0.8;
        let direct = group_difference(&f, t, &p).unwrap();
        let a = apply_free_group(&f, t, &p).unwrap();
        let b = apply_free_group(&f, t, &p.with_zero_epsilon()).unwrap();
        let two_step = a.sub(&b).unwrap();
        let num: f64 = direct
            .samples()
            .iter()
            .zip(two_step.samples())
            .map(|(x, y)| (x - y).norm_sqr())
            .sum::<f64>()
            .sqrt();
        let den: f64 = a.samples().iter().map(|c| c.norm_sqr()).sum::<f64>().sqrt();
        assert!(num / den < 1e-12, "difference mismatch {}", num / den);
    }

    #[test]
    fn group_difference_vanishes_when_eps_or_t_is_zero() {
        let g = std::sync::Arc::new(make_grid(1, &[64], &[8.0]).unwrap());
        let f = random_bandlimited(&g, 5, 0.4);
        for (t, p) in [(0.5, iso(0.0, 1.0)), (0.0, iso(0.7, 1.0))] {
            let out = group_difference(&f, t, &p).unwrap();
            assert!(out.max_abs() < 1e-14);
        }
    }

    #[test]
    fn group_difference_h2_is_bounded_by_fourier_estimate() {
        // |e^{-i t eps |xi|^2} - 1| <= t * eps * |xi|^2
        let g = std::sync::Arc::new(make_grid(1, &[256], &[16.0]).unwrap());
        let f = sample_function(&g, |x| Complex64::new((-x[0] * x[0]).exp(), 0.0)).unwrap();
        let (t, eps) = (0.5, 0.1);
        let p = iso(eps, 1.0);
        let diff = group_difference(&f, t, &p).unwrap();
        let h2 = crate::analysis::sobolev_norm(&diff, 2.0).unwrap();

        // Fourier-side direct-summation oracle for the bound.
        let fh = grid::to_spectral(&f).unwrap();
        let gr = fh.grid().clone();
        let mut bound_sq = 0.0;
        let mut xi = [0.0f64; grid::MAX_NDIM];
        for (idx, c) in fh.samples().iter().enumerate() {
            gr.wavenumber_at(idx, &mut xi);
            let s = xi[0] * xi[0];
            let w = (1.0 + s).powi(2);
            let factor = (t * eps * s).min(2.0);
            bound_sq += w * factor * factor * c.norm_sqr();
        }
        let bound = (gr.cell_volume() * bound_sq).sqrt();
        assert!(
            h2 <= bound * (1.0 + 1e-12),
            "H2 {h2} exceeds Fourier bound {bound}"
        );
    }

    #[test]
    fn scale_transform_identity_and_composition() {
        let base: SpaceTimeClosure = Arc::new(|x: &[f64], t: f64| {
            Complex64::new((x[0] * 0.7 + t).sin(), (x[0] - t * 0.3).cos())
        });
        let id = scale_transform(base.clone(), 1.0, 2.0).unwrap();
        let once = scale_transform(base.clone(), 2.0, 2.0).unwrap();
        let twice = scale_transform(once.clone(), 3.0, 2.0).unwrap();
        let direct = scale_transform(base.clone(), 6.0, 2.0).unwrap();
        for i in 0..25 {
            let x = [-2.0 + 0.17 * i as f64];
            let t = 0.05 * i as f64;
            let a = id(&x, t);
            let b = base(&x, t);
            assert_relative_eq!(a.re, b.re, epsilon = 1e-14);
            let c = twice(&x, t);
            let d = direct(&x, t);
            assert_relative_eq!(c.re, d.re, max_relative = 1e-12);
            assert_relative_eq!(c.im, d.im, max_relative = 1e-12);
        }
    }

    #[test]
    fn scale_transform_preserves_homogeneous_data_at_t_zero() {
        let alpha = 2.0;
        let u: SpaceTimeClosure = Arc::new(move |x: &[f64], _t: f64| {
            Complex64::new(x[0].abs().powf(-4.0 / 2.0), 0.0)
        });
        let scaled = scale_transform(u.clone(), 1.7, alpha).unwrap();
        for x in [0.4, 1.3, -2.2] {
            let a = u(&[x], 0.0);
            let b = scaled(&[x], 0.0);
            assert_relative_eq!(a.re, b.re, max_relative = 1e-12);
        }
    }

    #[test]
    fn scale_transform_rejects_nonpositive_lambda() {
        let u: SpaceTimeClosure = Arc::new(|_, _| Complex64::new(0.0, 0.0));
        assert!(scale_transform(u.clone(), 0.0, 2.0).is_err());
        assert!(scale_transform(u, -1.0, 2.0).is_err());
    }

    #[test]
    fn free_evolution_matches_direct_oscillatory_quadrature() {
        // Independent oracle for the spectral pipeline: the evolved Gaussian
        // u(x, t) = (1/2pi) int sqrt(pi) e^{-xi^2/4} e^{i(x xi + t xi^4)} dxi
        // is evaluated by composite quadrature of the oscillatory integral,
        // never touching the FFT path.
        let g = std::sync::Arc::new(make_grid(1, &[4096], &[200.0]).unwrap());
        let f = sample_function(&g, |x| Complex64::new((-x[0] * x[0]).exp(), 0.0)).unwrap();
        let p = iso(0.0, 1.0);
        let oracle = |x: f64, t: f64| -> Complex64 {
            // panels short enough that the phase advances < ~2 rad per node
            let xi_max = 12.0;
            let panels = 2400usize;
            let width = 2.0 * xi_max / panels as f64;
            let (nodes, weights) = crate::quadrature::gauss_legendre(8);
            let mut acc = Complex64::new(0.0, 0.0);
            for k in 0..panels {
                let a = -xi_max + k as f64 * width;
                let mid = a + 0.5 * width;
                for (&n, &w) in nodes.iter().zip(&weights) {
                    let xi = mid + 0.5 * width * n;
                    let amplitude = std::f64::consts::PI.sqrt() * (-xi * xi / 4.0).exp();
                    let phase = x * xi + t * xi.powi(4);
                    acc += w * amplitude * Complex64::from_polar(1.0, phase);
                }
            }
            acc * (0.5 * width) / (2.0 * std::f64::consts::PI)
        };
        // Probe times sit before the wrap-around horizon of even the
        // 1e-12-amplitude spectral tail (t_wrap ~ 0.086 for |xi| <= 10.5),
        // where the periodic grid agrees with the whole-line integral.
        for &t in &[0.02, 0.06] {
            let evolved = apply_free_group(&f, t, &p).unwrap();
            for &x_probe in &[0.0, 3.5] {
                let j = ((x_probe + 200.0) / g.spacing(0)).round() as usize;
                let grid_val = evolved.samples()[j];
                let direct = oracle(-200.0 + j as f64 * g.spacing(0), t);
                assert!(
                    (grid_val - direct).norm() < 1e-9,
                    "FFT route {grid_val} vs quadrature {direct} at x = {x_probe}, t = {t}"
                );
            }
        }
    }

    #[test]
    fn gaussian_sup_norm_decay_fits_quarter_power() {
        // 1D free flow, eps = 0, delta = 1: L-infinity slope -1/4 over [1, 10].
        let g = std::sync::Arc::new(make_grid(1, &[4096], &[200.0]).unwrap());
        let f = sample_function(&g, |x| Complex64::new((-x[0] * x[0]).exp(), 0.0)).unwrap();
        let p = iso(0.0, 1.0);
        let n_pts = 17;
        let (t0, t1) = (1.0f64, 10.0f64);
        let mut times = Vec::new();
        let mut values = Vec::new();
        for i in 0..n_pts {
            let t = t0 * (t1 / t0).powf(i as f64 / (n_pts - 1) as f64);
            let ut = apply_free_group(&f, t, &p).unwrap();
            times.push(t);
            values.push(ut.max_abs());
        }
        let series = NormSeries::new(times, values, crate::analysis::NormKind::Linf).unwrap();
        let (slope, _) = fit_decay_exponent(&series, (t0, t1)).unwrap();
        assert!(
            (slope + 0.25).abs() < 0.05,
            "sup-norm slope {slope} not within 0.05 of -0.25"
        );
    }
}
