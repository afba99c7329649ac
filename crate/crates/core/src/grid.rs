//! Uniform periodic grids on `[-L, L)^n`, complex sampled fields and the
//! forward/inverse Fourier transform contract.
//!
//! Conventions, fixed once for the whole crate:
//!
//! * samples are row-major with the last axis fastest; the physical sample
//!   at per-axis index `j` sits at `x_j = -L + j * dx`;
//! * spectral index `k` on an axis of `N` points carries the integer mode
//!   `m = k` for `k < N/2` and `m = k - N` otherwise, with wavenumber
//!   `xi = (pi / L) * m`;
//! * transforms are unitary (symmetric `1/sqrt(N)` factors), so Parseval
//!   and free-group unitarity are exact statements up to rounding;
//! * whenever a field is modified spectrally the unpaired Nyquist mode
//!   `m = -N/2` is zeroed.

use std::collections::HashMap;
use std::sync::{Arc, Mutex};

use num_complex::Complex64;
use once_cell::sync::Lazy;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rustfft::{Fft, FftPlanner};

use crate::error::{CoreError, Result};
use crate::exec;

pub const MAX_NDIM: usize = 3;

/// Which representation the samples of a field currently hold.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Space {
    Physical,
    Spectral,
}

/// A uniform periodic grid on `[-L_1, L_1) x ... x [-L_n, L_n)`.
#[derive(Debug, Clone)]
pub struct GridSpec {
    ndim: usize,
    points: Vec<usize>,
    half_width: Vec<f64>,
    cell_volume: f64,
    /// Per-axis wavenumbers in FFT ordering.
    wavenumbers: Vec<Vec<f64>>,
    /// Per-axis integer modes in FFT ordering.
    modes: Vec<Vec<i64>>,
    /// Row-major strides (last axis fastest).
    strides: Vec<usize>,
}

/// Builds a grid, validating the `GridSpec` invariants.
pub fn make_grid(ndim: usize, points: &[usize], half_width: &[f64]) -> Result<GridSpec> {
    if !(1..=MAX_NDIM).contains(&ndim) {
        return Err(CoreError::Grid(format!("ndim must be 1, 2 or 3, got {ndim}")));
    }
    if points.len() != ndim || half_width.len() != ndim {
        return Err(CoreError::Grid(format!(
            "expected {ndim} per-axis entries, got {} points and {} half-widths",
            points.len(),
            half_width.len()
        )));
    }
    for (axis, &n) in points.iter().enumerate() {
        if n < 8 || !n.is_power_of_two() {
            return Err(CoreError::Grid(format!(
                "points[{axis}] = {n} must be a power of two >= 8"
            )));
        }
    }
    for (axis, &l) in half_width.iter().enumerate() {
        if !(l > 0.0) || !l.is_finite() {
            return Err(CoreError::Grid(format!(
                "half_width[{axis}] = {l} must be finite and > 0"
            )));
        }
    }

    let mut cell_volume = 1.0;
    let mut wavenumbers = Vec::with_capacity(ndim);
    let mut modes = Vec::with_capacity(ndim);
    for axis in 0..ndim {
        let n = points[axis];
        let l = half_width[axis];
        cell_volume *= 2.0 * l / n as f64;
        let mut xi = Vec::with_capacity(n);
        let mut ms = Vec::with_capacity(n);
        for k in 0..n {
            let m = if k < n / 2 { k as i64 } else { k as i64 - n as i64 };
            ms.push(m);
            xi.push(std::f64::consts::PI / l * m as f64);
        }
        wavenumbers.push(xi);
        modes.push(ms);
    }

    let mut strides = vec![1usize; ndim];
    for axis in (0..ndim.saturating_sub(1)).rev() {
        strides[axis] = strides[axis + 1] * points[axis + 1];
    }

    Ok(GridSpec {
        ndim,
        points: points.to_vec(),
        half_width: half_width.to_vec(),
        cell_volume,
        wavenumbers,
        modes,
        strides,
    })
}

impl GridSpec {
    pub fn ndim(&self) -> usize {
        self.ndim
    }

    pub fn points(&self) -> &[usize] {
        &self.points
    }

    pub fn half_width(&self) -> &[f64] {
        &self.half_width
    }

    pub fn cell_volume(&self) -> f64 {
        self.cell_volume
    }

    /// Total sample count.
    pub fn len(&self) -> usize {
        self.points.iter().product()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// Box volume `prod 2 L_j`.
    pub fn box_volume(&self) -> f64 {
        self.cell_volume * self.len() as f64
    }

    pub fn spacing(&self, axis: usize) -> f64 {
        2.0 * self.half_width[axis] / self.points[axis] as f64
    }

    /// Wavenumbers along `axis` in FFT ordering.
    pub fn wavenumbers(&self, axis: usize) -> &[f64] {
        &self.wavenumbers[axis]
    }

    /// Integer modes along `axis` in FFT ordering.
    pub fn modes(&self, axis: usize) -> &[i64] {
        &self.modes[axis]
    }

    /// Decomposes a flat index into per-axis indices (into `out`).
    #[inline]
    pub fn unravel(&self, idx: usize, out: &mut [usize; MAX_NDIM]) {
        let mut rem = idx;
        for axis in 0..self.ndim {
            out[axis] = rem / self.strides[axis];
            rem %= self.strides[axis];
        }
    }

    /// Physical coordinates of the flat index `idx`.
    #[inline]
    pub fn coord(&self, idx: usize, out: &mut [f64; MAX_NDIM]) {
        let mut ix = [0usize; MAX_NDIM];
        self.unravel(idx, &mut ix);
        for axis in 0..self.ndim {
            out[axis] = -self.half_width[axis] + ix[axis] as f64 * self.spacing(axis);
        }
    }

    /// Wavenumber vector of the flat spectral index `idx`.
    #[inline]
    pub fn wavenumber_at(&self, idx: usize, out: &mut [f64; MAX_NDIM]) {
        let mut ix = [0usize; MAX_NDIM];
        self.unravel(idx, &mut ix);
        for axis in 0..self.ndim {
            out[axis] = self.wavenumbers[axis][ix[axis]];
        }
    }

    /// True when the flat spectral index touches a Nyquist mode on any axis.
    #[inline]
    pub fn is_nyquist(&self, idx: usize) -> bool {
        let mut ix = [0usize; MAX_NDIM];
        self.unravel(idx, &mut ix);
        (0..self.ndim).any(|axis| ix[axis] == self.points[axis] / 2)
    }

    fn same_layout(&self, other: &GridSpec) -> bool {
        self.ndim == other.ndim
            && self.points == other.points
            && self.half_width == other.half_width
    }
}

static PLANNER: Lazy<Mutex<FftPlanner<f64>>> = Lazy::new(|| Mutex::new(FftPlanner::new()));
static PLAN_CACHE: Lazy<Mutex<HashMap<(usize, bool), Arc<dyn Fft<f64>>>>> =
    Lazy::new(|| Mutex::new(HashMap::new()));

fn fft_plan(len: usize, forward: bool) -> Arc<dyn Fft<f64>> {
    let mut cache = PLAN_CACHE.lock().unwrap();
    cache
        .entry((len, forward))
        .or_insert_with(|| {
            let mut planner = PLANNER.lock().unwrap();
            if forward {
                planner.plan_fft_forward(len)
            } else {
                planner.plan_fft_inverse(len)
            }
        })
        .clone()
}

/// A complex field sampled on a [`GridSpec`], in physical or spectral space.
#[derive(Debug, Clone)]
pub struct ComplexField {
    grid: Arc<GridSpec>,
    samples: Vec<Complex64>,
    space: Space,
}

impl ComplexField {
    pub fn zeros(grid: &Arc<GridSpec>) -> Self {
        ComplexField {
            grid: grid.clone(),
            samples: vec![Complex64::new(0.0, 0.0); grid.len()],
            space: Space::Physical,
        }
    }

    pub fn constant(grid: &Arc<GridSpec>, value: Complex64) -> Self {
        ComplexField {
            grid: grid.clone(),
            samples: vec![value; grid.len()],
            space: Space::Physical,
        }
    }

    /// Wraps raw samples; length must match the grid.
    pub fn from_samples(
        grid: &Arc<GridSpec>,
        samples: Vec<Complex64>,
        space: Space,
    ) -> Result<Self> {
        if samples.len() != grid.len() {
            return Err(CoreError::Grid(format!(
                "sample count {} does not match grid ({})",
                samples.len(),
                grid.len()
            )));
        }
        Ok(ComplexField {
            grid: grid.clone(),
            samples,
            space,
        })
    }

    pub fn grid(&self) -> &Arc<GridSpec> {
        &self.grid
    }

    pub fn space(&self) -> Space {
        self.space
    }

    pub fn samples(&self) -> &[Complex64] {
        &self.samples
    }

    pub fn samples_mut(&mut self) -> &mut [Complex64] {
        &mut self.samples
    }

    pub fn into_samples(self) -> Vec<Complex64> {
        self.samples
    }

    pub fn expect_space(&self, expected: Space) -> Result<()> {
        if self.space != expected {
            return Err(CoreError::WrongSpace {
                expected,
                found: self.space,
            });
        }
        Ok(())
    }

    pub fn same_grid(&self, other: &ComplexField) -> bool {
        self.grid.same_layout(&other.grid)
    }

    /// Pointwise difference `self - other`.
    pub fn sub(&self, other: &ComplexField) -> Result<ComplexField> {
        if !self.same_grid(other) || self.space != other.space {
            return Err(CoreError::Grid(
                "field difference requires identical grid and space".into(),
            ));
        }
        let mut out = self.clone();
        for (a, b) in out.samples.iter_mut().zip(other.samples.iter()) {
            *a -= *b;
        }
        Ok(out)
    }

    pub fn scale(&mut self, factor: Complex64) {
        exec::for_each_mut(&mut self.samples, move |c| *c *= factor);
    }

    pub fn max_abs(&self) -> f64 {
        exec::max_by(&self.samples, |c| c.norm())
    }

    pub fn is_finite(&self) -> bool {
        self.samples
            .iter()
            .all(|c| c.re.is_finite() && c.im.is_finite())
    }
}

/// Transforms along one axis with unitary normalization.
fn transform_axis(
    grid: &GridSpec,
    samples: &mut [Complex64],
    axis: usize,
    forward: bool,
) {
    let n = grid.points[axis];
    let stride = grid.strides[axis];
    let total = grid.len();
    let lines = total / n;
    let plan = fft_plan(n, forward);
    let scale = 1.0 / (n as f64).sqrt();

    // Line `l` starts at base(l) and steps by `stride`. For the last axis
    // stride == 1 and lines are contiguous.
    let base_of = |line: usize| -> usize {
        let block = line / stride; // index over slower axes
        let offset = line % stride; // index within faster axes
        block * (n * stride) + offset
    };

    let line_results: Vec<(usize, Vec<Complex64>)> = {
        let samples_ref: &[Complex64] = samples;
        exec::map_collect(lines, move |line| {
            let base = base_of(line);
            let mut buf: Vec<Complex64> = (0..n)
                .map(|k| samples_ref[base + k * stride])
                .collect();
            plan.process(&mut buf);
            for c in buf.iter_mut() {
                *c *= scale;
            }
            (base, buf)
        })
    };
    for (base, buf) in line_results {
        for (k, value) in buf.into_iter().enumerate() {
            samples[base + k * stride] = value;
        }
    }
}

/// Forward transform; physical -> spectral, unitary normalization.
pub fn to_spectral(field: &ComplexField) -> Result<ComplexField> {
    field.expect_space(Space::Physical)?;
    let mut out = field.clone();
    for axis in 0..out.grid.ndim() {
        transform_axis(&out.grid.clone(), &mut out.samples, axis, true);
    }
    out.space = Space::Spectral;
    Ok(out)
}

/// Inverse transform; spectral -> physical, unitary normalization.
pub fn to_physical(field: &ComplexField) -> Result<ComplexField> {
    field.expect_space(Space::Spectral)?;
    let mut out = field.clone();
    for axis in 0..out.grid.ndim() {
        transform_axis(&out.grid.clone(), &mut out.samples, axis, false);
    }
    out.space = Space::Physical;
    Ok(out)
}

/// Zeroes the unpaired Nyquist modes of a spectral field in place.
pub fn zero_nyquist(field: &mut ComplexField) {
    debug_assert_eq!(field.space, Space::Spectral);
    let grid = field.grid.clone();
    exec::for_each_indexed_mut(&mut field.samples, move |idx, c| {
        if grid.is_nyquist(idx) {
            *c = Complex64::new(0.0, 0.0);
        }
    });
}

/// Applies a spectral multiplier `c *= m(xi)` and zeroes the Nyquist modes.
pub fn apply_spectral_multiplier<F>(field: &mut ComplexField, multiplier: F)
where
    F: Fn(&[f64]) -> Complex64 + Sync,
{
    debug_assert_eq!(field.space, Space::Spectral);
    let grid = field.grid.clone();
    let ndim = grid.ndim();
    exec::for_each_indexed_mut(&mut field.samples, move |idx, c| {
        if grid.is_nyquist(idx) {
            *c = Complex64::new(0.0, 0.0);
        } else {
            let mut xi = [0.0f64; MAX_NDIM];
            grid.wavenumber_at(idx, &mut xi);
            *c *= multiplier(&xi[..ndim]);
        }
    });
}

/// Samples a closure pointwise on the grid (physical space).
///
/// Fails with the offending point if the closure produces a non-finite value.
pub fn sample_function<F>(grid: &Arc<GridSpec>, f: F) -> Result<ComplexField>
where
    F: Fn(&[f64]) -> Complex64,
{
    let ndim = grid.ndim();
    let mut samples = Vec::with_capacity(grid.len());
    let mut x = [0.0f64; MAX_NDIM];
    for idx in 0..grid.len() {
        grid.coord(idx, &mut x);
        let v = f(&x[..ndim]);
        if !v.re.is_finite() || !v.im.is_finite() {
            return Err(CoreError::NonFiniteSample {
                point: x[..ndim].to_vec(),
                index: idx,
                value: format!("{v}"),
            });
        }
        samples.push(v);
    }
    ComplexField::from_samples(grid, samples, Space::Physical)
}

/// Default mollification radius: two cells of the coarsest axis.
pub fn default_mollification_radius(grid: &GridSpec) -> f64 {
    2.0 * (0..grid.ndim())
        .map(|a| grid.spacing(a))
        .fold(0.0f64, f64::max)
}

/// Samples a closure with radial clamping inside radius `r0`.
///
/// Points with `|x| < r0` are projected onto the sphere of radius `r0`
/// before evaluation, so homogeneous data keeps its angular profile and the
/// value at a clamped point equals the value at radius `r0`. The origin is
/// evaluated at `(r0, 0, ..)`.
pub fn sample_function_mollified<F>(grid: &Arc<GridSpec>, r0: f64, f: F) -> Result<ComplexField>
where
    F: Fn(&[f64]) -> Complex64,
{
    if !(r0 > 0.0) {
        return Err(CoreError::InvalidParameter(format!(
            "mollification radius must be > 0, got {r0}"
        )));
    }
    let ndim = grid.ndim();
    sample_function(grid, |x| {
        let r2: f64 = x.iter().map(|v| v * v).sum();
        let r = r2.sqrt();
        if r >= r0 {
            f(x)
        } else if r == 0.0 {
            let mut y = [0.0f64; MAX_NDIM];
            y[0] = r0;
            f(&y[..ndim])
        } else {
            let mut y = [0.0f64; MAX_NDIM];
            for (a, &v) in x.iter().enumerate() {
                y[a] = v * r0 / r;
            }
            f(&y[..ndim])
        }
    })
}

/// Deterministic band-limited random field (physical space).
///
/// Spectral coefficients are iid standard complex Gaussians on modes with
/// `|m_j| <= keep_frac * N_j`, zero elsewhere (Nyquist included), then
/// transformed to physical space. Used by property tests and the CLI's
/// seeded property modes.
pub fn random_bandlimited(grid: &Arc<GridSpec>, seed: u64, keep_frac: f64) -> ComplexField {
    use rand::Rng;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut coeffs = vec![Complex64::new(0.0, 0.0); grid.len()];
    let mut ix = [0usize; MAX_NDIM];
    for (idx, c) in coeffs.iter_mut().enumerate() {
        grid.unravel(idx, &mut ix);
        let keep = (0..grid.ndim()).all(|a| {
            let m = grid.modes(a)[ix[a]];
            (m.unsigned_abs() as f64) <= keep_frac * grid.points()[a] as f64
                && m != -(grid.points()[a] as i64) / 2
        });
        // Draw for every mode so the stream stays aligned across bands.
        let re: f64 = rng.random::<f64>() - 0.5;
        let im: f64 = rng.random::<f64>() - 0.5;
        if keep {
            *c = Complex64::new(re, im);
        }
    }
    let spectral = ComplexField {
        grid: grid.clone(),
        samples: coeffs,
        space: Space::Spectral,
    };
    to_physical(&spectral).expect("inverse transform of constructed spectral field")
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn grid1d(n: usize, l: f64) -> Arc<GridSpec> {
        Arc::new(make_grid(1, &[n], &[l]).unwrap())
    }

    #[test]
    fn make_grid_computes_spacing_and_cell_volume() {
        let g = make_grid(1, &[256], &[16.0]).unwrap();
        assert_relative_eq!(g.spacing(0), 0.125);
        assert_relative_eq!(g.wavenumbers(0)[1], std::f64::consts::PI / 16.0);

        let g2 = make_grid(2, &[64, 64], &[8.0, 8.0]).unwrap();
        assert_relative_eq!(g2.cell_volume(), 0.0625);
    }

    #[test]
    fn make_grid_rejects_bad_input() {
        assert!(make_grid(1, &[100], &[8.0]).is_err()); // not a power of two
        assert!(make_grid(1, &[4], &[8.0]).is_err()); // too small
        assert!(make_grid(1, &[64], &[0.0]).is_err());
        assert!(make_grid(1, &[64], &[-3.0]).is_err());
        assert!(make_grid(4, &[64, 64, 64, 64], &[1.0, 1.0, 1.0, 1.0]).is_err());
        assert!(make_grid(2, &[64], &[8.0]).is_err()); // axis count mismatch
    }

    #[test]
    fn wavenumbers_are_odd_symmetric_apart_from_nyquist() {
        let g = grid1d(64, 8.0);
        let xi = g.wavenumbers(0);
        for k in 1..32 {
            assert_relative_eq!(xi[k], -xi[64 - k], epsilon = 1e-15);
        }
        // unpaired Nyquist mode
        assert_relative_eq!(xi[32], -std::f64::consts::PI / 8.0 * 32.0);
    }

    #[test]
    fn constant_field_concentrates_in_zero_mode() {
        let g = grid1d(64, 8.0);
        let f = ComplexField::constant(&g, Complex64::new(2.5, 0.0));
        let fh = to_spectral(&f).unwrap();
        let total: f64 = fh.samples().iter().map(|c| c.norm_sqr()).sum();
        assert_relative_eq!(fh.samples()[0].norm_sqr(), total, max_relative = 1e-12);
        assert_relative_eq!(fh.samples()[0].re, 2.5 * 8.0, max_relative = 1e-12); // c * sqrt(N)
    }

    #[test]
    fn plane_wave_hits_a_single_coefficient() {
        let g = grid1d(64, 8.0);
        let k_mode = 5usize;
        let xi = g.wavenumbers(0)[k_mode];
        let f = sample_function(&g, |x| (Complex64::i() * xi * x[0]).exp()).unwrap();
        let fh = to_spectral(&f).unwrap();
        for (k, c) in fh.samples().iter().enumerate() {
            if k == k_mode {
                assert_relative_eq!(c.norm(), 8.0, max_relative = 1e-10);
            } else {
                assert!(c.norm() < 1e-10, "leak at mode {k}: {}", c.norm());
            }
        }
    }

    #[test]
    fn round_trip_and_parseval_on_random_fields() {
        for (ndim, points, l) in [
            (1usize, vec![128usize], vec![10.0]),
            (2, vec![32, 32], vec![4.0, 6.0]),
            (3, vec![16, 8, 16], vec![2.0, 3.0, 1.0]),
        ] {
            let g = Arc::new(make_grid(ndim, &points, &l).unwrap());
            let f = random_bandlimited(&g, 7, 0.5);
            let fh = to_spectral(&f).unwrap();
            let back = to_physical(&fh).unwrap();
            let num: f64 = f
                .samples()
                .iter()
                .zip(back.samples())
                .map(|(a, b)| (a - b).norm_sqr())
                .sum::<f64>()
                .sqrt();
            let den: f64 = f.samples().iter().map(|c| c.norm_sqr()).sum::<f64>().sqrt();
            assert!(num / den < 1e-12, "round trip error {}", num / den);

            let mass_phys: f64 =
                g.cell_volume() * f.samples().iter().map(|c| c.norm_sqr()).sum::<f64>();
            let mass_spec: f64 =
                g.cell_volume() * fh.samples().iter().map(|c| c.norm_sqr()).sum::<f64>();
            assert_relative_eq!(mass_phys, mass_spec, max_relative = 1e-12);
        }
    }

    #[test]
    fn gaussian_sample_peaks_at_origin() {
        let g = grid1d(128, 8.0);
        let f = sample_function(&g, |x| Complex64::new((-x[0] * x[0]).exp(), 0.0)).unwrap();
        assert_relative_eq!(f.max_abs(), 1.0, max_relative = 1e-14);
    }

    #[test]
    fn zero_closure_gives_zero_field() {
        let g = grid1d(64, 8.0);
        let f = sample_function(&g, |_| Complex64::new(0.0, 0.0)).unwrap();
        assert!(f.samples().iter().all(|c| c.norm() == 0.0));
    }

    #[test]
    fn mollified_sampling_clamps_inside_r0() {
        let g = grid1d(128, 8.0);
        let r0 = 2.0 * g.spacing(0);
        let f = sample_function_mollified(&g, r0, |x| {
            Complex64::new(x[0].abs().powi(-2), 0.0)
        })
        .unwrap();
        // value at x = 0 equals r0^{-2}
        let mid = 64;
        assert_relative_eq!(f.samples()[mid].re, r0.powi(-2), max_relative = 1e-14);
        assert!(f.is_finite());
    }

    #[test]
    fn unmollified_singular_closure_reports_the_point() {
        let g = grid1d(64, 8.0);
        let err = sample_function(&g, |x| Complex64::new(1.0 / x[0].abs(), 0.0)).unwrap_err();
        match err {
            CoreError::NonFiniteSample { point, .. } => assert_eq!(point[0], 0.0),
            other => panic!("unexpected error {other}"),
        }
    }

    #[test]
    fn wrong_space_is_rejected() {
        let g = grid1d(64, 8.0);
        let f = ComplexField::constant(&g, Complex64::new(1.0, 0.0));
        assert!(to_physical(&f).is_err());
        let fh = to_spectral(&f).unwrap();
        assert!(to_spectral(&fh).is_err());
    }

    #[test]
    fn transforms_are_bit_deterministic() {
        let g = Arc::new(make_grid(2, &[64, 32], &[4.0, 4.0]).unwrap());
        let f = random_bandlimited(&g, 99, 0.4);
        let a = to_spectral(&f).unwrap();
        let b = to_spectral(&f).unwrap();
        assert!(a
            .samples()
            .iter()
            .zip(b.samples())
            .all(|(x, y)| x.re.to_bits() == y.re.to_bits() && x.im.to_bits() == y.im.to_bits()));
    }
}
