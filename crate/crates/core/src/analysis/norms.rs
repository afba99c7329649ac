//! Lebesgue, Sobolev and time-weighted norms, and the conserved quantities.

use crate::dispersion::{DispersionParams, DispersionVariant};
use crate::error::{CoreError, Result};
use crate::exec;
use crate::grid::{self, ComplexField, Space, MAX_NDIM};
use crate::nonlinearity::NonlinearityParams;

use super::NormSeries;

/// `L^p` norm of a physical-space field: `(cv * sum |u|^p)^{1/p}`.
pub fn lp_norm(field: &ComplexField, p: f64) -> Result<f64> {
    field.expect_space(Space::Physical)?;
    if !(p >= 1.0) {
        return Err(CoreError::Norm(format!("lp_norm requires p >= 1, got {p}")));
    }
    let sum = exec::sum_by(field.samples(), |c| c.norm().powf(p));
    Ok((field.grid().cell_volume() * sum).powf(1.0 / p))
}

pub fn linf_norm(field: &ComplexField) -> f64 {
    field.max_abs()
}

/// Spectral `H^s` norm `(cv * sum <xi>^{2s} |u_hat|^2)^{1/2}`, `<xi>^2 = 1 + |xi|^2`.
///
/// Accepts a field in either space.
pub fn sobolev_norm(field: &ComplexField, s: f64) -> Result<f64> {
    let spectral = match field.space() {
        Space::Spectral => field.clone(),
        Space::Physical => grid::to_spectral(field)?,
    };
    let g = spectral.grid().clone();
    let ndim = g.ndim();
    let samples = spectral.samples();
    let sum = exec::sum_by(
        &(0..samples.len()).collect::<Vec<usize>>(),
        |&idx| {
            let mut xi = [0.0f64; MAX_NDIM];
            g.wavenumber_at(idx, &mut xi);
            let sq: f64 = xi[..ndim].iter().map(|v| v * v).sum();
            (1.0 + sq).powf(s) * samples[idx].norm_sqr()
        },
    );
    Ok((g.cell_volume() * sum).sqrt())
}

/// Mass `||u||_2^2` and energy `E_{eps,delta,lambda}(u)`.
///
/// Isotropic: `delta ||Lap u||^2 - eps ||grad u||^2 + (2 lambda/(alpha+2)) ||u||_{alpha+2}^{alpha+2}`;
/// the anisotropic energy replaces `delta ||Lap u||^2` by
/// `delta sum_{i<=d} ||d^2 u/dx_i^2||^2`. Derivatives are spectral.
pub fn conserved_quantities(
    field: &ComplexField,
    dispersion: &DispersionParams,
    nonlinearity: &NonlinearityParams,
) -> Result<(f64, f64)> {
    field.expect_space(Space::Physical)?;
    dispersion.check_grid(field.grid())?;
    let g = field.grid().clone();
    let cv = g.cell_volume();
    let ndim = g.ndim();

    let mass = cv * exec::sum_by(field.samples(), |c| c.norm_sqr());

    let spectral = grid::to_spectral(field)?;
    let samples = spectral.samples();
    let idx_range: Vec<usize> = (0..samples.len()).collect();
    let grad_sq = cv
        * exec::sum_by(&idx_range, |&idx| {
            let mut xi = [0.0f64; MAX_NDIM];
            g.wavenumber_at(idx, &mut xi);
            let sq: f64 = xi[..ndim].iter().map(|v| v * v).sum();
            sq * samples[idx].norm_sqr()
        });
    let fourth_sq = cv
        * exec::sum_by(&idx_range, |&idx| {
            let mut xi = [0.0f64; MAX_NDIM];
            g.wavenumber_at(idx, &mut xi);
            let w = match dispersion.variant {
                DispersionVariant::Isotropic => {
                    let sq: f64 = xi[..ndim].iter().map(|v| v * v).sum();
                    sq * sq
                }
                DispersionVariant::Anisotropic { d } => {
                    xi[..d].iter().map(|v| v.powi(4)).sum()
                }
            };
            w * samples[idx].norm_sqr()
        });

    let alpha = nonlinearity.alpha;
    let potential = if nonlinearity.lambda == 0.0 {
        0.0
    } else {
        let lp = cv * exec::sum_by(field.samples(), |c| c.norm().powf(alpha + 2.0));
        2.0 * nonlinearity.lambda / (alpha + 2.0) * lp
    };

    let energy = dispersion.delta * fourth_sq - dispersion.epsilon * grad_sq + potential;
    Ok((mass, energy))
}

/// `max_k |t_k|^w * v_k`; rejects series containing `t = 0`.
pub fn weighted_time_norm(series: &NormSeries, weight_exponent: f64) -> Result<f64> {
    if series.times().iter().any(|&t| t == 0.0) {
        return Err(CoreError::Norm(
            "weighted time norm is degenerate at t = 0; drop the zero-time sample".into(),
        ));
    }
    Ok(series
        .times()
        .iter()
        .zip(series.values())
        .map(|(&t, &v)| t.abs().powf(weight_exponent) * v)
        .fold(0.0, f64::max))
}

/// `L^r`-in-time norm of a series on `(0, T]` by the trapezoidal rule.
///
/// The segment `(0, t_1)` is closed with a rectangle of height `v_1`, so a
/// constant series `v` on a uniform mesh integrates to exactly `v T^{1/r}`.
pub fn xt_norm(series: &NormSeries, r: f64) -> Result<f64> {
    if series.is_empty() {
        return Err(CoreError::Norm("xt_norm of an empty series".into()));
    }
    if !(r >= 1.0) {
        return Err(CoreError::Norm(format!("xt_norm requires r >= 1, got {r}")));
    }
    let ts = series.times();
    let vs = series.values();
    if ts[0] < 0.0 {
        return Err(CoreError::Norm("xt_norm needs times in (0, T]".into()));
    }
    let mut integral = ts[0] * vs[0].powf(r);
    for i in 1..ts.len() {
        integral += 0.5 * (ts[i] - ts[i - 1]) * (vs[i].powf(r) + vs[i - 1].powf(r));
    }
    Ok(integral.powf(1.0 / r))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::analysis::NormKind;
    use crate::grid::{make_grid, random_bandlimited, sample_function, ComplexField};
    use approx::assert_relative_eq;
    use num_complex::Complex64;
    use std::sync::Arc;

    #[test]
    fn constant_sobolev_norm_is_l2() {
        let g = Arc::new(make_grid(2, &[32, 32], &[4.0, 4.0]).unwrap());
        let c = Complex64::new(1.5, -0.5);
        let f = ComplexField::constant(&g, c);
        for s in [0.0, 1.0, 2.0, 3.5] {
            let h = sobolev_norm(&f, s).unwrap();
            assert_relative_eq!(h, c.norm() * g.box_volume().sqrt(), max_relative = 1e-12);
        }
    }

    #[test]
    fn plane_wave_h2_norm() {
        let g = Arc::new(make_grid(1, &[128], &[8.0]).unwrap());
        let k = g.wavenumbers(0)[6];
        let f = sample_function(&g, |x| (Complex64::i() * k * x[0]).exp()).unwrap();
        let h2 = sobolev_norm(&f, 2.0).unwrap();
        assert_relative_eq!(
            h2,
            (1.0 + k * k) * g.box_volume().sqrt(),
            max_relative = 1e-12
        );
    }

    #[test]
    fn s_zero_equals_l2_on_random_fields() {
        let g = Arc::new(make_grid(1, &[256], &[8.0]).unwrap());
        for seed in 0..10u64 {
            let f = random_bandlimited(&g, seed, 0.5);
            let h0 = sobolev_norm(&f, 0.0).unwrap();
            let l2 = lp_norm(&f, 2.0).unwrap();
            assert_relative_eq!(h0, l2, max_relative = 1e-12);
        }
    }

    #[test]
    fn zero_field_conserved_quantities() {
        let g = Arc::new(make_grid(1, &[64], &[8.0]).unwrap());
        let f = ComplexField::zeros(&g);
        let disp = DispersionParams::isotropic(1.0, 1.0).unwrap();
        let nl = NonlinearityParams::power(1.0, 2.0).unwrap();
        let (m, e) = conserved_quantities(&f, &disp, &nl).unwrap();
        assert_eq!(m, 0.0);
        assert_eq!(e, 0.0);
    }

    #[test]
    fn plane_wave_mass_and_energy() {
        let g = Arc::new(make_grid(2, &[32, 32], &[4.0, 4.0]).unwrap());
        let k = [g.wavenumbers(0)[3], g.wavenumbers(1)[2]];
        let amp = 1.3;
        let f = sample_function(&g, |x| {
            amp * (Complex64::i() * (k[0] * x[0] + k[1] * x[1])).exp()
        })
        .unwrap();
        let v = g.box_volume();
        let k_sq = k[0] * k[0] + k[1] * k[1];
        let (eps, delta, lambda, alpha) = (0.7, -1.0, 1.0, 2.0);
        let disp = DispersionParams::isotropic(eps, delta).unwrap();
        let nl = NonlinearityParams::power(lambda, alpha).unwrap();
        let (m, e) = conserved_quantities(&f, &disp, &nl).unwrap();
        assert_relative_eq!(m, amp * amp * v, max_relative = 1e-12);
        let expected = delta * k_sq * k_sq * amp * amp * v - eps * k_sq * amp * amp * v
            + 2.0 * lambda / (alpha + 2.0) * amp.powf(alpha + 2.0) * v;
        assert_relative_eq!(e, expected, max_relative = 1e-11);
    }

    #[test]
    fn anisotropic_energy_uses_partial_fourth_derivatives() {
        let g = Arc::new(make_grid(2, &[32, 32], &[4.0, 4.0]).unwrap());
        let k = [g.wavenumbers(0)[3], g.wavenumbers(1)[2]];
        let f = sample_function(&g, |x| {
            (Complex64::i() * (k[0] * x[0] + k[1] * x[1])).exp()
        })
        .unwrap();
        let disp = DispersionParams::anisotropic(0.0, 1.0, 1).unwrap();
        let nl = NonlinearityParams::none();
        let (_, e) = conserved_quantities(&f, &disp, &nl).unwrap();
        assert_relative_eq!(e, k[0].powi(4) * g.box_volume(), max_relative = 1e-11);
    }

    #[test]
    fn weighted_norm_basics() {
        let s = NormSeries::new(vec![2.0], vec![3.0], NormKind::Linf).unwrap();
        assert_relative_eq!(
            weighted_time_norm(&s, 0.5).unwrap(),
            3.0 * 2.0f64.sqrt(),
            max_relative = 1e-14
        );
        let z = NormSeries::new(vec![1.0, 2.0], vec![0.0, 0.0], NormKind::Linf).unwrap();
        assert_eq!(weighted_time_norm(&z, 0.7).unwrap(), 0.0);
        let bad = NormSeries::new(vec![0.0, 1.0], vec![1.0, 1.0], NormKind::Linf).unwrap();
        assert!(weighted_time_norm(&bad, 0.5).is_err());
    }

    #[test]
    fn xt_norm_constant_and_power_series() {
        let t_end = 2.0;
        let n = 400;
        let times: Vec<f64> = (1..=n).map(|i| i as f64 * t_end / n as f64).collect();
        let r = 3.0;

        let constant = NormSeries::new(times.clone(), vec![1.7; n], NormKind::Lp(2.0)).unwrap();
        assert_relative_eq!(
            xt_norm(&constant, r).unwrap(),
            1.7 * t_end.powf(1.0 / r),
            max_relative = 1e-12
        );

        // r * beta well below 1: the uniform mesh resolves the mild
        // singularity at the origin to trapezoid accuracy
        let beta = 0.1;
        let vals: Vec<f64> = times.iter().map(|t| t.powf(-beta)).collect();
        let series = NormSeries::new(times, vals, NormKind::Lp(2.0)).unwrap();
        let exact = t_end.powf(1.0 / r - beta) / (1.0 - r * beta).powf(1.0 / r);
        let approx_val = xt_norm(&series, r).unwrap();
        assert!(
            (approx_val - exact).abs() / exact < 0.02,
            "xt norm {approx_val} vs exact {exact}"
        );

        let empty = NormSeries::new(vec![], vec![], NormKind::Lp(2.0)).unwrap();
        assert!(xt_norm(&empty, r).is_err());
    }
}
