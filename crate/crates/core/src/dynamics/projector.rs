use num_complex::Complex64 as C64;

use super::StateVector;
use crate::error::{Error, Result};
use crate::spectral::EnsembleRealization;

/// `<tau|psi> = sum_j conj(alpha_j exp(-i omega_j tau)) psi_j`; the cavity
/// amplitude does not enter.
pub fn project_bare(ens: &EnsembleRealization, state: &StateVector, taus: &[f64]) -> Result<Vec<C64>> {
    if state.dim() != ens.len() + 1 {
        return Err(Error::Dimension { expected: ens.len() + 1, found: state.dim() });
    }
    Ok(taus
        .iter()
        .map(|&tau| {
            ens.omegas()
                .iter()
                .zip(ens.alphas())
                .zip(state.spins())
                .map(|((w, a), x)| (a * C64::cis(-w * tau)).conj() * x)
                .sum()
        })
        .collect())
}

/// Bare-time bras tabulated once for a fixed set of `tau`.
#[derive(Debug, Clone)]
pub struct BareProjector {
    taus: Vec<f64>,
    n: usize,
    table: Vec<C64>,
}

impl BareProjector {
    pub fn new(ens: &EnsembleRealization, taus: &[f64]) -> Self {
        let n = ens.len();
        let mut table = Vec::with_capacity(n * taus.len());
        for &tau in taus {
            for (w, a) in ens.omegas().iter().zip(ens.alphas()) {
                table.push((a * C64::cis(-w * tau)).conj());
            }
        }
        Self { taus: taus.to_vec(), n, table }
    }

    pub fn taus(&self) -> &[f64] {
        &self.taus
    }

    pub fn project(&self, state: &StateVector) -> Result<Vec<C64>> {
        if state.dim() != self.n + 1 {
            return Err(Error::Dimension { expected: self.n + 1, found: state.dim() });
        }
        let spins = state.spins();
        Ok(self
            .table
            .chunks_exact(self.n)
            .map(|row| row.iter().zip(spins).map(|(b, x)| b * x).sum())
            .collect())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spectral::{sample_ensemble, DensityModel, SpectralDensity};
    use crate::states::bare_time_coeffs;

    #[test]
    fn projection_of_bare_state() {
        let d = SpectralDensity::new(DensityModel::HalfwaveCosSq, 1.0).unwrap();
        let e = sample_ensemble(&d, 512, 1.0, 0.0).unwrap();
        let s = StateVector::from_spins(&bare_time_coeffs(&e, 1.5)).unwrap();
        let p = BareProjector::new(&e, &[1.5, 2.5]).project(&s).unwrap();
        assert!((p[0] - 1.0).norm() < 1e-13);
        assert!((p[1] - d.overlap_kernel(1.0)).norm() < 1e-3);
        let q = project_bare(&e, &s, &[1.5, 2.5]).unwrap();
        assert!((p[1] - q[1]).norm() < 1e-14);
    }
}
