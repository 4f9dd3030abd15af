use std::f64::consts::PI;

use proptest::prelude::*;
use spinwave_core::quad::GaussLegendre;
use spinwave_core::spectral::{sample_ensemble, DensityModel, SpectralDensity};

fn density(model: DensityModel) -> SpectralDensity {
    SpectralDensity::new(model, 1.0).unwrap()
}

/// `int rho(w) exp(-i w dtau) dw` by brute-force composite quadrature.
fn kernel_quadrature(d: &SpectralDensity, dtau: f64) -> (f64, f64) {
    let (lo, hi) = d.support();
    let gl = GaussLegendre::new(20);
    let re = gl.integrate(lo, hi, 400, |w| d.eval(w) * (w * dtau).cos());
    let im = gl.integrate(lo, hi, 400, |w| -d.eval(w) * (w * dtau).sin());
    (re, im)
}

#[test]
fn densities_are_normalized() {
    let gl = GaussLegendre::new(20);
    for m in DensityModel::ALL {
        let d = density(m);
        let (lo, hi) = d.support();
        let mass = gl.integrate(lo, hi, 200, |w| d.eval(w));
        assert!((mass - 1.0).abs() < 1e-10, "{m}: {mass}");
        assert_eq!(d.eval(hi + 1e-9), 0.0);
        assert_eq!(d.eval(lo - 1e-9), 0.0);
    }
}

#[test]
fn kernels_match_quadrature() {
    for m in DensityModel::ALL {
        let d = density(m);
        for dtau in [-3.7, -1.0, 0.0, 0.25, 1.0, 2.5, 4.0] {
            let (re, im) = kernel_quadrature(&d, dtau);
            let k = d.overlap_kernel(dtau);
            assert!((k.re - re).abs() < 1e-10 && (k.im - im).abs() < 1e-10, "{m} {dtau}");
        }
    }
}

#[test]
fn halfwave_moments_from_ensemble() {
    let e = sample_ensemble(&density(DensityModel::HalfwaveCosSq), 4096, 1.0, 0.0).unwrap();
    let n = e.len() as f64;
    let mean = e.omegas().iter().sum::<f64>() / n;
    let var = e.omegas().iter().map(|w| (w - mean).powi(2)).sum::<f64>() / n;
    // second moment of the law by direct quadrature
    let gl = GaussLegendre::new(20);
    let d = density(DensityModel::HalfwaveCosSq);
    let exact = gl.integrate(-PI, PI, 100, |w| w * w * d.eval(w));
    assert!(mean.abs() < 1e-3);
    assert!((var - exact).abs() < 1e-3);
    assert!((exact - (PI * PI - 6.0) / 3.0).abs() < 1e-12);
}

#[test]
fn empirical_overlap_converges() {
    let taus: Vec<f64> = (-256..=256).map(|k| k as f64 / 64.0).collect();
    for m in DensityModel::ALL {
        let d = density(m);
        let err = |n| {
            let e = sample_ensemble(&d, n, 1.0, 0.0).unwrap();
            taus.iter().map(|&t| (e.empirical_overlap(t) - d.overlap_kernel(t)).norm()).fold(0.0, f64::max)
        };
        let (coarse, fine) = (err(256), err(4096));
        assert!(fine < coarse, "{m}: {coarse} -> {fine}");
        for n in [64, 128] {
            assert!(err(n) >= coarse, "{m}: N = {n}");
        }
    }
}

#[test]
fn dephasing_time_scales_everything() {
    for m in DensityModel::ALL {
        let a = density(m);
        let b = SpectralDensity::new(m, 2.5).unwrap();
        assert!((b.overlap_kernel(2.5) - a.overlap_kernel(1.0)).norm() < 1e-12, "{m}");
        assert!((b.variance() * 6.25 - a.variance()).abs() < 1e-12);
        assert!((b.eval(0.4) - 2.5 * a.eval(1.0)).abs() < 1e-12);
    }
}

fn any_model() -> impl Strategy<Value = DensityModel> {
    prop_oneof![
        Just(DensityModel::Uniform),
        Just(DensityModel::HalfwaveCosSq),
        Just(DensityModel::Gaussian)
    ]
}

proptest! {
    #[test]
    fn kernel_is_hermitian_and_bounded(m in any_model(), dtau in -20.0f64..20.0, t in 0.2f64..5.0) {
        let d = SpectralDensity::new(m, t).unwrap();
        let k = d.overlap_kernel(dtau);
        prop_assert!(k.norm() <= 1.0 + 1e-12);
        prop_assert!((d.overlap_kernel(-dtau) - k.conj()).norm() < 1e-12);
    }

    #[test]
    fn density_non_negative(m in any_model(), w in -10.0f64..10.0) {
        prop_assert!(density(m).eval(w) >= 0.0);
    }

    #[test]
    fn quantile_inverts_cdf(m in any_model(), p in 0.0f64..=1.0) {
        let d = density(m);
        let q = d.quantile(p).unwrap();
        prop_assert!((d.cdf(q) - p).abs() < 1e-12);
    }

    #[test]
    fn ensembles_are_valid(m in any_model(), n in 1usize..300) {
        let e = sample_ensemble(&density(m), n, 2.0, 0.0).unwrap();
        let mass: f64 = e.alphas().iter().map(|a| a.norm_sqr()).sum();
        prop_assert!((mass - 1.0).abs() < 1e-12);
        prop_assert!(e.omegas().windows(2).all(|w| w[1] > w[0]));
    }
}
