use std::f64::consts::PI;

use proptest::prelude::*;
use spinwave_core::quad::GaussLegendre;
use spinwave_core::response::{
    delta_gamma, phase_slope, phase_strong, phase_strong_slope, unwrap_anchored, wrap_pi, FrequencyGrid,
    ResponseSpectrum,
};
use spinwave_core::spectral::{DensityModel, SpectralDensity};

fn density(model: DensityModel) -> SpectralDensity {
    SpectralDensity::new(model, 1.0).unwrap()
}

fn grid() -> FrequencyGrid {
    FrequencyGrid::default_for(1.0).unwrap()
}

/// Principal value from quadrature outside `(w - eps, w + eps)` plus the
/// first-order contribution of the excluded window, `-2 eps rho'(w)`.
fn pv_oracle(d: &SpectralDensity, w: f64, eps: f64) -> f64 {
    let (lo, hi) = d.support();
    let gl = GaussLegendre::new(16);
    let f = |x: f64| d.eval(x) / (w - x);
    let mut s = 0.0;
    if w - eps > lo {
        let a = (w - eps).min(hi);
        s += gl.integrate(lo, a, 48, f);
    }
    if w + eps < hi {
        let b = (w + eps).max(lo);
        s += gl.integrate(b, hi, 48, f);
    }
    let h = 1e-5;
    let slope = (d.eval(w + h) - d.eval(w - h)) / (2.0 * h);
    s - 2.0 * eps * slope
}

#[test]
fn kramers_kronig_consistency() {
    let g = grid();
    let dw = g.step();
    for m in DensityModel::ALL {
        let d = density(m);
        let (lo, hi) = d.support();
        let (delta, _) = delta_gamma(&d, &g).unwrap();
        let mut worst: f64 = 0.0;
        for k in (0..g.len()).step_by(3) {
            let w = g.omega(k);
            if (w - lo).abs() < 3.0 * dw || (w - hi).abs() < 3.0 * dw {
                continue;
            }
            worst = worst.max((delta[k] - pv_oracle(&d, w, dw)).abs());
        }
        assert!(worst <= 1e-4, "{m}: {worst}");
    }
}

#[test]
fn symmetry_of_delta_and_gamma() {
    let g = grid();
    let n = g.len();
    for m in DensityModel::ALL {
        let (delta, gamma) = delta_gamma(&density(m), &g).unwrap();
        for k in 1..n {
            assert!((delta[k] + delta[n - k]).abs() < 1e-10, "{m}");
            assert_eq!(gamma[k], gamma[n - k]);
        }
    }
}

#[test]
fn response_identities() {
    let g = grid();
    for m in DensityModel::ALL {
        for (om, wc) in [(PI, 0.0), (10.0 * PI, 0.0), (PI / 3.0, -PI / 4.0)] {
            let r = ResponseSpectrum::compute(&density(m), &g, om, wc).unwrap();
            for k in 0..g.len() {
                assert_eq!(r.g_minus[k], r.g_plus[k].conj());
                assert!(wrap_pi(r.phi[k] + 2.0 * r.g_plus[k].arg()).abs() < 1e-12);
                assert!(r.gamma_c[k] >= 0.0);
            }
            for w in r.phi.windows(2) {
                assert!((w[1] - w[0]).abs() < PI);
            }
        }
    }
}

#[test]
fn phase_converges_to_strong_limit() {
    let g = grid();
    for m in DensityModel::ALL {
        let d = density(m);
        let gaps: Vec<f64> = [PI, 10.0 * PI, 100.0 * PI]
            .iter()
            .map(|&om| ResponseSpectrum::compute(&d, &g, om, 0.0).unwrap().strong_phase_gap(&d, 0.8))
            .collect();
        assert!(gaps[0] >= gaps[1] && gaps[1] >= gaps[2], "{m}: {gaps:?}");
    }
    let d = density(DensityModel::HalfwaveCosSq);
    let r = ResponseSpectrum::compute(&d, &g, 10.0 * PI, 0.0).unwrap();
    assert!(r.strong_phase_gap(&d, 0.8) < 0.05);
}

#[test]
fn strong_phase_grid_and_pointwise_agree() {
    let g = grid();
    let d = density(DensityModel::HalfwaveCosSq);
    let r = ResponseSpectrum::compute(&d, &g, 10.0 * PI, 0.0).unwrap();
    let sampled = r.strong_phase();
    for w in [-2.5, -1.0, 0.3, 1.7, 2.9] {
        let k = g.nearest(w).unwrap();
        let exact = phase_strong(&d, g.omega(k)).unwrap();
        assert!((sampled[k] - exact).abs() < 1e-5, "{w}");
    }
}

#[test]
fn strong_phase_slope_near_dephasing_time() {
    let g = grid();
    let d = density(DensityModel::HalfwaveCosSq);
    let r = ResponseSpectrum::compute(&d, &g, 10.0 * PI, 0.0).unwrap();
    let fd = phase_strong_slope(&d, 0.0, 1e-4).unwrap();
    let (phi0, dt) = phase_slope(&r.phi, &g, 0.0, PI / 4.0).unwrap();
    assert!((dt - 1.0).abs() <= 0.25, "{dt}");
    assert!((dt - fd).abs() / fd < 0.05, "{dt} vs {fd}");
    assert!(wrap_pi(phi0 - PI).abs() < 0.05);
}

#[test]
fn weak_coupling_is_far_from_strong_limit() {
    let g = grid();
    let d = density(DensityModel::Uniform);
    let r = ResponseSpectrum::compute(&d, &g, PI / 3.0, -PI / 4.0).unwrap();
    assert!(r.strong_phase_gap(&d, 0.8) > 0.5);
    assert!(r.strong_coupling_ratio() > ResponseSpectrum::compute(&d, &g, 10.0 * PI, 0.0).unwrap().strong_coupling_ratio());
}

proptest! {
    #[test]
    fn unwrapped_phase_is_continuous(raw in prop::collection::vec(-PI..PI, 2..200)) {
        let u = unwrap_anchored(&raw);
        for (a, b) in u.iter().zip(&raw) {
            prop_assert!(wrap_pi(a - b).abs() < 1e-9);
        }
        for w in u.windows(2) {
            prop_assert!((w[1] - w[0]).abs() <= PI + 1e-12);
        }
        prop_assert!(u[0] > -PI - 1e-12 && u[0] <= PI + 1e-12);
    }

    #[test]
    fn slope_recovers_lines(a in -5.0f64..5.0, b in -3.0f64..3.0, w0 in -10.0f64..10.0, hw in 0.0f64..5.0) {
        let g = FrequencyGrid::new(1024, 8.0 * PI).unwrap();
        let line = g.sample(|w| a + b * w);
        let (p0, dt) = phase_slope(&line, &g, w0, hw).unwrap();
        prop_assert!((p0 - a).abs() < 1e-8 && (dt - b).abs() < 1e-9);
    }
}
