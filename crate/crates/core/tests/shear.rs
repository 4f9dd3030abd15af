use std::f64::consts::PI;

use spinwave_core::dynamics::SingleExcitationHamiltonian;
use spinwave_core::response::{phase_slope, FrequencyGrid, ResponseSpectrum};
use spinwave_core::shear::{
    chi_sheared, shear_fidelity, AnalyticEvolution, ExactExpansion, OracleEvolution, ReferenceOverlap, ShearOptions,
};
use spinwave_core::spectral::{sample_ensemble, DensityModel, SpectralDensity};
use spinwave_core::states::WavePacket;

fn density(model: DensityModel) -> SpectralDensity {
    SpectralDensity::new(model, 1.0).unwrap()
}

fn grid() -> FrequencyGrid {
    FrequencyGrid::default_for(1.0).unwrap()
}

fn taus() -> Vec<f64> {
    (-512..=512).map(|k| k as f64 / 64.0).collect()
}

#[test]
fn shear_approximation_improves_with_narrower_packets() {
    let d = density(DensityModel::HalfwaveCosSq);
    let g = grid();
    let r = ResponseSpectrum::compute(&d, &g, 10.0 * PI, 0.0).unwrap();
    let t = 4.0;
    let taus: Vec<f64> = (0..1024).map(|k| (k as f64 + 0.5) / 64.0).collect();
    let mut errors = Vec::new();
    for bw in [PI / 4.0, PI / 8.0, PI / 16.0] {
        let wp = WavePacket::gaussian(0.0, bw).unwrap();
        let (phi0, dt) = phase_slope(&r.phi, &g, 0.0, bw / 2.0).unwrap();
        let ex = ExactExpansion::new(&wp, &r);
        let err = taus
            .iter()
            .map(|&tau| (ex.at(tau, t).value().unwrap() - chi_sheared(&wp, phi0, dt, tau, t).value().unwrap()).norm())
            .fold(0.0, f64::max);
        errors.push(err);
    }
    assert!(errors[1] <= 0.02, "{errors:?}");
    assert!(errors[0] > errors[1] && errors[1] > errors[2], "{errors:?}");
}

#[test]
fn below_zero_the_expansion_is_free() {
    let d = density(DensityModel::Gaussian);
    let r = ResponseSpectrum::compute(&d, &grid(), 10.0 * PI, 0.0).unwrap();
    let wp = WavePacket::gaussian(0.3, 0.5).unwrap();
    let ex = ExactExpansion::new(&wp, &r);
    for tau in [-3.0, -0.5, 0.0] {
        assert_eq!(ex.at(tau, 2.0).value(), wp.psi(2.0 - tau));
    }
}

#[test]
fn analytic_matches_oracle_at_both_couplings() {
    let g = grid();
    let taus = taus();
    let wp = WavePacket::gaussian(0.0, PI / 4.0).unwrap();
    for model in DensityModel::ALL {
        let d = density(model);
        for om in [PI, 10.0 * PI] {
            let r = ResponseSpectrum::compute(&d, &g, om, 0.0).unwrap();
            let an = AnalyticEvolution::new(&d, &r, &wp).unwrap();
            let a = an.bare_overlaps(4.0, &taus).unwrap();
            let mut devs = Vec::new();
            for n in [1024, 4096] {
                let h = SingleExcitationHamiltonian::build(sample_ensemble(&d, n, om, 0.0).unwrap()).unwrap();
                let or = OracleEvolution::new(&h, &wp, -128.0, -4.0).unwrap().value;
                let b = or.bare_overlaps(4.0, &taus).unwrap();
                devs.push(a.iter().zip(&b).map(|(x, y)| (x - y).norm()).fold(0.0, f64::max));
            }
            assert!(devs[1] <= 1e-2 && devs[1] < devs[0], "{model} {om}: {devs:?}");
        }
    }
}

#[test]
fn fidelity_ignores_global_phase() {
    let d = density(DensityModel::HalfwaveCosSq);
    let h = SingleExcitationHamiltonian::build(sample_ensemble(&d, 512, 10.0 * PI, 0.0).unwrap()).unwrap();
    let opts = ShearOptions { t_check: None, ..ShearOptions::default() };
    // psi~ times a constant phase is the same packet up to a global phase
    let wp = WavePacket::Delta;
    let omegas: Vec<f64> = vec![-10.0, 10.0];
    let rotated = WavePacket::tabulated(omegas, vec![spinwave_core::C64::cis(1.1); 2]).unwrap();
    let a = shear_fidelity(&OracleEvolution::new(&h, &wp, -4.0, -4.0).unwrap().value, &opts).unwrap().value;
    let b = shear_fidelity(&OracleEvolution::new(&h, &rotated, -4.0, -4.0).unwrap().value, &opts).unwrap().value;
    assert!((a.f - b.f).abs() < 1e-12);
    assert!((a.dt_star - b.dt_star).abs() < 1e-9);
}

#[test]
fn localized_packets_narrower_is_better() {
    let d = density(DensityModel::Uniform);
    let g = grid();
    let opts = ShearOptions::default();
    for (om, wc, w0) in [(2.0 * PI / 3.0, 0.0, PI / 2.0), (PI, 0.0, PI / 2.0), (PI / 3.0, -PI / 4.0, PI / 4.0)] {
        let r = ResponseSpectrum::compute(&d, &g, om, wc).unwrap();
        let f = |bw: f64| {
            let wp = WavePacket::gaussian(w0, bw).unwrap();
            shear_fidelity(&AnalyticEvolution::new(&d, &r, &wp).unwrap(), &opts).unwrap().value.f
        };
        let (wide, narrow) = (f(PI / 4.0), f(PI / 8.0));
        assert!(narrow > wide, "{om} {wc}: {wide} vs {narrow}");
    }
}

#[test]
fn edge_maximum_is_reported() {
    let d = density(DensityModel::HalfwaveCosSq);
    let r = ResponseSpectrum::compute(&d, &grid(), 10.0 * PI, 0.0).unwrap();
    let an = AnalyticEvolution::new(&d, &r, &WavePacket::Delta).unwrap();
    let opts = ShearOptions { window: 0.25, t_check: None, ..ShearOptions::default() };
    let res = shear_fidelity(&an, &opts).unwrap();
    assert!(matches!(res.warnings[0], spinwave_core::Warning::WindowEdge { .. }));
    assert_eq!(res.value.dt_star, 0.25);
}
