//! Densities and local pair/triple correlators of ED eigenvectors.

use nalgebra::DVector;
use num_complex::Complex64;
use serde::Serialize;

use super::basis::FockBasis;
use super::LatticeError;

/// Site-resolved density and the site-averaged local correlators
/// `<a†a†aa> = <n(n-1)>` and `<a†³a³> = <n(n-1)(n-2)>`, averaged over the
/// supplied manifold of states.
#[derive(Debug, Clone, Serialize)]
pub struct PairDiagnostics {
    pub density: Vec<f64>,
    pub g2: f64,
    pub g3: f64,
}

/// Occupation diagnostics of a set of eigenvectors over `basis`.
///
/// `g3` vanishes identically under a hard-core cap of two; a uniform
/// density is the translation-invariance sanity check.
pub fn pair_diagnostics(
    basis: &FockBasis,
    states: &[DVector<Complex64>],
) -> Result<PairDiagnostics, LatticeError> {
    if states.is_empty() {
        return Err(LatticeError::MissingEigenvectors);
    }
    let n_sites = basis.n_sites;
    let mut density = vec![0.0; n_sites];
    let mut g2 = 0.0;
    let mut g3 = 0.0;
    for vec in states {
        for (i, amp) in vec.iter().enumerate() {
            let w = amp.norm_sqr();
            if w == 0.0 {
                continue;
            }
            for (site, &occ) in basis.state(i).iter().enumerate() {
                let n = occ as f64;
                density[site] += w * n;
                g2 += w * n * (n - 1.0);
                g3 += w * n * (n - 1.0) * (n - 2.0);
            }
        }
    }
    let norm = states.len() as f64;
    for d in density.iter_mut() {
        *d /= norm;
    }
    Ok(PairDiagnostics {
        density,
        g2: g2 / (norm * n_sites as f64),
        g3: g3 / (norm * n_sites as f64),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lattice::basis::enumerate_basis;
    use crate::lattice::ham::{build_hamiltonian, HoppingScheme};
    use crate::lattice::solve::{lanczos_lowest, SolverOpts};
    use crate::lattice::LatticeSpec;

    #[test]
    fn zero_flux_condensate_is_uniform() {
        // Four free bosons on 4x4: k = 0 condensate, density 1/4 per site.
        let spec = LatticeSpec {
            lx: 4,
            ly: 4,
            alpha: 0.0,
            n_particles: 4,
            n_max: 4,
            u2: 0.0,
            u3: 0.0,
            scheme: HoppingScheme::Nearest,
            theta_x: 0.0,
            theta_y: 0.0,
        };
        let basis = enumerate_basis(&spec).unwrap();
        let h = build_hamiltonian(&spec, &basis).unwrap();
        let spectrum = lanczos_lowest(&h, &SolverOpts::with_k(2)).unwrap();
        assert!((spectrum.eigenvalues[0] + 16.0).abs() < 1e-8);
        let d = pair_diagnostics(&basis, &spectrum.eigenvectors[..1]).unwrap();
        for site in &d.density {
            assert!((site - 0.25).abs() < 1e-8, "density {site}");
        }
        assert!(d.g3 > 0.0); // cap 4 permits triples for free bosons
    }

    #[test]
    fn hard_core_kills_triples_exactly() {
        let spec = LatticeSpec::benchmark_4x4();
        let basis = enumerate_basis(&spec).unwrap();
        let h = build_hamiltonian(&spec, &basis).unwrap();
        let spectrum = lanczos_lowest(&h, &SolverOpts::with_k(3)).unwrap();
        let d = pair_diagnostics(&basis, &spectrum.eigenvectors).unwrap();
        assert_eq!(d.g3, 0.0);
        assert!(d.g2 > 0.0);
    }

    #[test]
    fn missing_vectors_is_an_error() {
        let spec = LatticeSpec::benchmark_4x4();
        let basis = enumerate_basis(&spec).unwrap();
        assert!(matches!(
            pair_diagnostics(&basis, &[]),
            Err(LatticeError::MissingEigenvectors)
        ));
    }
}
