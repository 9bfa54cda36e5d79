//! Many-body lattice Hamiltonians on a magnetic torus.
//!
//! Bosons hop on an `Lx × Ly` torus threaded by `alpha` flux quanta per
//! plaquette (Landau gauge), with an occupancy cap and optional on-site
//! two- and three-body interactions. The pieces:
//!
//! * [`basis`] — capped occupation-number bases at fixed particle number;
//! * [`ham`] — hopping amplitudes and the sparse Hamiltonian builder;
//! * [`solve`] — deterministic Lanczos plus the dense cross-check solver
//!   and degeneracy/gap/order-parameter analysis;
//! * [`chern`] — ground-manifold Chern numbers over the twist torus;
//! * [`observables`] — densities and local pair/triple correlators.

pub mod basis;
pub mod chern;
pub mod ham;
pub mod observables;
pub mod solve;

pub use basis::FockBasis;
pub use chern::{chern_number, ChernResult};
pub use ham::{build_hamiltonian, hop_amplitude, HoppingScheme, SparseHam};
pub use observables::{pair_diagnostics, PairDiagnostics};
pub use solve::{dense_lowest, detect_degeneracy, lanczos_lowest, Degeneracy, SolverOpts, Spectrum};

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum LatticeError {
    #[error("invalid lattice spec: {0}")]
    InvalidSpec(String),
    #[error("basis dimension {dim} exceeds the configured limit {limit}")]
    DimensionLimit { dim: usize, limit: usize },
    #[error("basis does not match the spec ({0})")]
    BasisMismatch(String),
    #[error("Lanczos did not converge: {converged} of {requested} pairs at tolerance {tol:.1e} after {iterations} iterations (worst residual {worst:.3e})")]
    NotConverged {
        requested: usize,
        converged: usize,
        tol: f64,
        iterations: usize,
        worst: f64,
    },
    #[error("need at least {needed} eigenvalues, got {got}")]
    TooFewEigenvalues { needed: usize, got: usize },
    #[error("eigenvectors were not retained")]
    MissingEigenvectors,
    #[error("gap above the {manifold}-state manifold closes at twist ({theta_x:.6}, {theta_y:.6}): gap = {gap:.3e}")]
    GapClosed {
        manifold: usize,
        theta_x: f64,
        theta_y: f64,
        gap: f64,
    },
    #[error("ill-conditioned overlap link at twist ({theta_x:.6}, {theta_y:.6}): |det| = {magnitude:.3e}")]
    IllConditionedLink {
        theta_x: f64,
        theta_y: f64,
        magnitude: f64,
    },
    #[error("curvature sum {raw:.8} is {deviation:.3e} away from an integer")]
    NotQuantized { raw: f64, deviation: f64 },
    #[error("matrix is too large for the dense solver: dimension {0}")]
    DenseTooLarge(usize),
}

/// Lattice, flux, interaction and boundary-twist description.
///
/// Total flux `alpha * Lx * Ly` must be an integer for the torus to close.
/// `u3` only acts when `n_max >= 3`; the hard-core limit is `n_max = 2`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LatticeSpec {
    pub lx: usize,
    pub ly: usize,
    pub alpha: f64,
    pub n_particles: usize,
    pub n_max: u8,
    pub u2: f64,
    pub u3: f64,
    pub scheme: HoppingScheme,
    pub theta_x: f64,
    pub theta_y: f64,
}

impl LatticeSpec {
    pub fn n_sites(&self) -> usize {
        self.lx * self.ly
    }

    /// Filling factor `N / (alpha Lx Ly)`; `None` at zero flux.
    pub fn filling(&self) -> Option<f64> {
        let flux = self.alpha * self.n_sites() as f64;
        (flux.abs() > 1e-12).then(|| self.n_particles as f64 / flux)
    }

    pub fn with_twist(&self, theta_x: f64, theta_y: f64) -> Self {
        LatticeSpec {
            theta_x,
            theta_y,
            ..self.clone()
        }
    }

    pub fn validate(&self) -> Result<(), LatticeError> {
        if self.lx < 2 || self.ly < 2 {
            return Err(LatticeError::InvalidSpec(format!(
                "lattice must be at least 2x2, got {}x{}",
                self.lx, self.ly
            )));
        }
        if self.n_max == 0 {
            return Err(LatticeError::InvalidSpec("n_max must be >= 1".into()));
        }
        if self.n_particles == 0 || self.n_particles > self.n_max as usize * self.n_sites() {
            return Err(LatticeError::InvalidSpec(format!(
                "particle number {} outside (0, n_max * sites = {}]",
                self.n_particles,
                self.n_max as usize * self.n_sites()
            )));
        }
        let total_flux = self.alpha * self.n_sites() as f64;
        if (total_flux - total_flux.round()).abs() > 1e-9 {
            return Err(LatticeError::InvalidSpec(format!(
                "total flux alpha*Lx*Ly = {total_flux} is not an integer"
            )));
        }
        if self.scheme.has_diagonal_hops() {
            let col_flux = self.alpha * self.ly as f64;
            if (col_flux - col_flux.round()).abs() > 1e-9 {
                return Err(LatticeError::InvalidSpec(format!(
                    "scheme {:?} with diagonal hops needs integer flux per column (alpha*Ly = {col_flux})",
                    self.scheme
                )));
            }
        }
        Ok(())
    }

    /// The benchmark point used across the comparisons: 4 hard-core bosons
    /// on a 4x4 torus at `alpha = 1/4` (filling one).
    pub fn benchmark_4x4() -> Self {
        LatticeSpec {
            lx: 4,
            ly: 4,
            alpha: 0.25,
            n_particles: 4,
            n_max: 2,
            u2: 0.0,
            u3: 0.0,
            scheme: HoppingScheme::Nearest,
            theta_x: 0.0,
            theta_y: 0.0,
        }
    }
}

/// Eigenvalues plus degeneracy analysis of one diagonalization.
#[derive(Debug, Clone)]
pub struct EDResult {
    /// Ascending lowest eigenvalues, units of J.
    pub eigenvalues: Vec<f64>,
    /// `|H v - E v|` per returned pair.
    pub residuals: Vec<f64>,
    /// Retained ground-manifold eigenvectors (column per state), if kept.
    pub eigenvectors: Option<Vec<nalgebra::DVector<num_complex::Complex64>>>,
    pub degeneracy: Degeneracy,
}

/// Diagonalize `spec` with the Lanczos solver and analyze the low spectrum.
pub fn run_ed(
    spec: &LatticeSpec,
    opts: &SolverOpts,
    expected_manifold: usize,
    keep_vectors: bool,
) -> Result<EDResult, LatticeError> {
    let basis = basis::enumerate_basis(spec)?;
    let h = build_hamiltonian(spec, &basis)?;
    let spectrum = lanczos_lowest(&h, opts)?;
    let degeneracy = detect_degeneracy(&spectrum.eigenvalues, expected_manifold)?;
    let eigenvectors = keep_vectors.then(|| {
        spectrum.eigenvectors[..degeneracy.cluster_size.min(spectrum.eigenvectors.len())].to_vec()
    });
    Ok(EDResult {
        eigenvalues: spectrum.eigenvalues,
        residuals: spectrum.residuals,
        eigenvectors,
        degeneracy,
    })
}
