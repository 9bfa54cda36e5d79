//! Single-qubit circuit spectrum and effective bosonic model.
//!
//! The qubit is a Josephson junction shunted by an inductor,
//!
//! ```text
//! H = 4 Ec n^2 + (1/2) El phi^2 - Ej cos(phi + phi_x),
//! ```
//!
//! diagonalized in the Fock basis of the quadratic part. With
//! `l = (8 Ec / El)^(1/4)` the conjugate pair is `phi = l (a + a†)/√2`,
//! `n = i (a† - a) / (l √2)`. The cosine is evaluated through the spectral
//! decomposition of the (tridiagonal, real symmetric) `phi` matrix, which
//! avoids the term-by-term Taylor instability at large zero-point spread.
//!
//! The four lowest levels define the effective model
//! `H = w0 a†a + (U2/2) a†²a² + (U3/6) a†³a³`; the map from levels to
//! `(w0, U2, U3)` is an exact linear solve, not a fit.

use nalgebra::{DMatrix, SymmetricEigen};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::par;

/// Threshold below which the two-body interaction counts as tuned away.
pub const U2_ZERO_TOL: f64 = 5e-4;

/// Convergence demand on the low eigenvalues under basis doubling.
pub const CONVERGENCE_TOL: f64 = 1e-9;

/// Circuit parameters of one flux-biased qubit.
///
/// `ec` and `el` are in units of the Josephson energy; `ej` is normally 1
/// and is kept explicit only so the harmonic `ej = 0` limit stays
/// expressible. `phi_x` is the external flux as a dimensionless angle
/// (radians, i.e. 2π × flux / flux quantum).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QubitParams {
    pub ec: f64,
    pub el: f64,
    pub ej: f64,
    pub phi_x: f64,
    pub basis_size: usize,
}

impl Default for QubitParams {
    fn default() -> Self {
        QubitParams {
            ec: 0.05,
            el: 1.4,
            ej: 1.0,
            phi_x: 0.0,
            basis_size: 80,
        }
    }
}

impl QubitParams {
    pub fn validate(&self) -> Result<(), QubitError> {
        if !self.ec.is_finite() || self.ec <= 0.0 {
            return Err(QubitError::InvalidParams(format!("Ec must be > 0, got {}", self.ec)));
        }
        if !self.el.is_finite() || self.el <= 0.0 {
            return Err(QubitError::InvalidParams(format!("El must be > 0, got {}", self.el)));
        }
        if !self.ej.is_finite() || self.ej < 0.0 {
            return Err(QubitError::InvalidParams(format!("Ej must be >= 0, got {}", self.ej)));
        }
        if self.basis_size < 20 {
            return Err(QubitError::InvalidParams(format!(
                "basis_size must be >= 20, got {}",
                self.basis_size
            )));
        }
        Ok(())
    }

    /// Oscillator length of the quadratic part, `(8 Ec / El)^(1/4)`.
    pub fn osc_length(&self) -> f64 {
        (8.0 * self.ec / self.el).powf(0.25)
    }

    /// Level spacing of the quadratic part, `sqrt(8 Ec El)`.
    pub fn harmonic_frequency(&self) -> f64 {
        (8.0 * self.ec * self.el).sqrt()
    }
}

#[derive(Debug, Error)]
pub enum QubitError {
    #[error("invalid qubit parameters: {0}")]
    InvalidParams(String),
    #[error("requested {requested} levels but basis_size {basis_size} only supports {max} (need m <= basis_size/4)")]
    TooManyLevels {
        requested: usize,
        basis_size: usize,
        max: usize,
    },
    #[error("need at least 4 levels to extract the effective model, got {0}")]
    TooFewLevels(usize),
    #[error("spectrum not converged: lowest {levels} levels move by {shift:.3e} under basis doubling (tolerance {tol:.1e})")]
    NotConverged { levels: usize, shift: f64, tol: f64 },
    #[error("U2 does not change sign on [{lo}, {hi}] (max |U2| = {max_abs:.3e})")]
    NoRoot { lo: f64, hi: f64, max_abs: f64 },
}

/// Low-energy spectrum and flux matrix elements of one qubit.
#[derive(Debug, Clone)]
pub struct QubitSpectrum {
    /// Ascending eigenvalues, units of Ej.
    pub energies: Vec<f64>,
    /// `<i| phi |j>` in the eigenbasis, for the kept levels.
    pub phi_elements: DMatrix<f64>,
}

/// Effective bosonic model of the four lowest levels.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EffectiveModel {
    pub omega0: f64,
    pub u2: f64,
    pub u3: f64,
}

/// Annihilation operator in a `dim`-state Fock basis.
fn ladder(dim: usize) -> DMatrix<f64> {
    let mut a = DMatrix::zeros(dim, dim);
    for n in 1..dim {
        a[(n - 1, n)] = (n as f64).sqrt();
    }
    a
}

/// `phi` as a matrix in the oscillator basis.
fn phi_matrix(params: &QubitParams, dim: usize) -> DMatrix<f64> {
    let a = ladder(dim);
    let c = params.osc_length() / std::f64::consts::SQRT_2;
    let at = a.transpose();
    (a + at) * c
}

/// Apply `f` to a real symmetric matrix through its spectral decomposition.
fn matrix_function(sym: &DMatrix<f64>, f: impl Fn(f64) -> f64) -> DMatrix<f64> {
    let eig = SymmetricEigen::new(sym.clone());
    let n = sym.nrows();
    let mut scaled = eig.eigenvectors.clone();
    for j in 0..n {
        let fj = f(eig.eigenvalues[j]);
        for i in 0..n {
            scaled[(i, j)] *= fj;
        }
    }
    &scaled * eig.eigenvectors.transpose()
}

/// Real symmetric eigendecomposition with ascending eigenvalues.
fn eigh_sorted(sym: &DMatrix<f64>) -> (Vec<f64>, DMatrix<f64>) {
    let eig = SymmetricEigen::new(sym.clone());
    let n = sym.nrows();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| eig.eigenvalues[i].partial_cmp(&eig.eigenvalues[j]).unwrap());
    let values: Vec<f64> = order.iter().map(|&i| eig.eigenvalues[i]).collect();
    let mut vectors = DMatrix::zeros(n, n);
    for (k, &i) in order.iter().enumerate() {
        vectors.set_column(k, &eig.eigenvectors.column(i));
    }
    (values, vectors)
}

/// Build the circuit Hamiltonian in the truncated oscillator basis.
pub fn build_qubit_hamiltonian(params: &QubitParams) -> Result<DMatrix<f64>, QubitError> {
    params.validate()?;
    build_unchecked(params, params.basis_size)
}

fn build_unchecked(params: &QubitParams, dim: usize) -> Result<DMatrix<f64>, QubitError> {
    let a = ladder(dim);
    let at = a.transpose();

    let phi = phi_matrix(params, dim);
    let phi2 = &phi * &phi;

    // n^2 = -c_n^2 (a† - a)^2, real symmetric.
    let c_n = (params.el / (8.0 * params.ec)).powf(0.25) / std::f64::consts::SQRT_2;
    let d = &at - &a;
    let n2 = -(&d * &d) * (c_n * c_n);

    // cos(phi + phi_x) = cos(phi_x) cos(phi) - sin(phi_x) sin(phi).
    let cos_phi = matrix_function(&phi, f64::cos);
    let sin_phi = matrix_function(&phi, f64::sin);

    let mut h = n2 * (4.0 * params.ec) + phi2 * (0.5 * params.el);
    h -= cos_phi * (params.ej * params.phi_x.cos());
    h += sin_phi * (params.ej * params.phi_x.sin());

    // Symmetrize away rounding asymmetry from the matrix products.
    let ht = h.transpose();
    Ok((h + ht) * 0.5)
}

/// Diagonalize the qubit and keep the `m` lowest levels.
///
/// Only levels well inside the truncation are trustworthy, hence the
/// `m <= basis_size / 4` guard.
pub fn diagonalize_qubit(params: &QubitParams, m: usize) -> Result<QubitSpectrum, QubitError> {
    params.validate()?;
    if m > params.basis_size / 4 {
        return Err(QubitError::TooManyLevels {
            requested: m,
            basis_size: params.basis_size,
            max: params.basis_size / 4,
        });
    }
    let h = build_unchecked(params, params.basis_size)?;
    let (values, vectors) = eigh_sorted(&h);
    let phi = phi_matrix(params, params.basis_size);
    let kept = vectors.columns(0, m);
    let phi_elements = kept.transpose() * phi * kept;
    Ok(QubitSpectrum {
        energies: values[..m].to_vec(),
        phi_elements,
    })
}

/// Extract `(w0, U2, U3)` from the four lowest levels.
///
/// `w0 = E1 - E0`, `U2 = (E2 - E0) - 2 w0`, `U3 = (E3 - E0) - 3 w0 - 3 U2`.
pub fn extract_effective_model(spectrum: &QubitSpectrum) -> Result<EffectiveModel, QubitError> {
    if spectrum.energies.len() < 4 {
        return Err(QubitError::TooFewLevels(spectrum.energies.len()));
    }
    let e0 = spectrum.energies[0];
    let omega0 = spectrum.energies[1] - e0;
    let u2 = (spectrum.energies[2] - e0) - 2.0 * omega0;
    let u3 = (spectrum.energies[3] - e0) - 3.0 * omega0 - 3.0 * u2;
    Ok(EffectiveModel { omega0, u2, u3 })
}

/// Rebuild `E_n - E_0` for `n = 0..4` from an effective model.
pub fn model_levels(model: &EffectiveModel) -> [f64; 4] {
    let mut out = [0.0; 4];
    for (n, slot) in out.iter_mut().enumerate() {
        let n = n as f64;
        *slot = model.omega0 * n
            + 0.5 * model.u2 * n * (n - 1.0)
            + model.u3 / 6.0 * n * (n - 1.0) * (n - 2.0);
    }
    out
}

/// Maximum shift of the lowest `n_levels` eigenvalues under basis doubling.
pub fn check_convergence(params: &QubitParams, n_levels: usize) -> Result<f64, QubitError> {
    let coarse = diagonalize_qubit(params, n_levels)?;
    let mut doubled = params.clone();
    doubled.basis_size = params.basis_size * 2;
    let fine = diagonalize_qubit(&doubled, n_levels)?;
    let shift = coarse
        .energies
        .iter()
        .zip(&fine.energies)
        .map(|(a, b)| (a - b).abs())
        .fold(0.0, f64::max);
    if shift < CONVERGENCE_TOL {
        Ok(shift)
    } else {
        Err(QubitError::NotConverged {
            levels: n_levels,
            shift,
            tol: CONVERGENCE_TOL,
        })
    }
}

/// Result of tuning the external flux to the `U2 = 0` contour.
#[derive(Debug, Clone)]
pub struct ZeroU2 {
    pub phi_x: f64,
    pub model: EffectiveModel,
    /// Set when `U2` never changes sign but stays below [`U2_ZERO_TOL`]
    /// across the whole window (e.g. the `Ej = 0` limit); the reported
    /// `phi_x` is then the window midpoint.
    pub flat_window: bool,
}

fn model_at(base: &QubitParams, phi_x: f64) -> Result<EffectiveModel, QubitError> {
    let mut p = base.clone();
    p.phi_x = phi_x;
    extract_effective_model(&diagonalize_qubit(&p, 4)?)
}

/// Locate the flux where the two-body interaction vanishes.
///
/// Scans the window, brackets a sign change of `U2(phi_x)` and bisects it.
/// A window where `U2` is flat-zero is reported as a flagged midpoint so
/// that sweep drivers never abort on the interaction-free limit.
pub fn find_zero_u2(base: &QubitParams, lo: f64, hi: f64) -> Result<ZeroU2, QubitError> {
    base.validate()?;
    if !hi.is_finite() || !lo.is_finite() || hi <= lo {
        return Err(QubitError::InvalidParams(format!(
            "empty flux window [{lo}, {hi}]"
        )));
    }
    const SCAN: usize = 64;
    let u2_of = |phi: f64| model_at(base, phi).map(|m| m.u2);

    let mut prev_phi = lo;
    let mut prev_u2 = u2_of(lo)?;
    let mut max_abs = prev_u2.abs();
    let mut bracket = None;
    for i in 1..=SCAN {
        let phi = lo + (hi - lo) * i as f64 / SCAN as f64;
        let u2 = u2_of(phi)?;
        max_abs = max_abs.max(u2.abs());
        if bracket.is_none() && (prev_u2 == 0.0 || prev_u2.signum() != u2.signum()) {
            bracket = Some((prev_phi, prev_u2, phi, u2));
        }
        prev_phi = phi;
        prev_u2 = u2;
    }

    let (mut a, mut fa, mut b, _fb) = match bracket {
        Some(br) => br,
        None if max_abs < U2_ZERO_TOL => {
            let mid = 0.5 * (lo + hi);
            return Ok(ZeroU2 {
                phi_x: mid,
                model: model_at(base, mid)?,
                flat_window: true,
            });
        }
        None => return Err(QubitError::NoRoot { lo, hi, max_abs }),
    };

    for _ in 0..60 {
        let mid = 0.5 * (a + b);
        let fm = u2_of(mid)?;
        if fm == 0.0 || (b - a) < 1e-12 {
            a = mid;
            break;
        }
        if fa.signum() != fm.signum() {
            b = mid;
        } else {
            a = mid;
            fa = fm;
        }
    }
    let phi_x = 0.5 * (a + b);
    Ok(ZeroU2 {
        phi_x,
        model: model_at(base, phi_x)?,
        flat_window: false,
    })
}

/// One cell of an `(El, phi_x)` interaction sweep.
#[derive(Debug, Clone, Serialize)]
pub struct SweepCell {
    pub el: f64,
    pub phi_x: f64,
    pub model: Option<EffectiveModel>,
    pub error: Option<String>,
}

fn sweep_cell(base: &QubitParams, el: f64, phi_x: f64) -> SweepCell {
    let mut p = base.clone();
    p.el = el;
    p.phi_x = phi_x;
    match diagonalize_qubit(&p, 4).and_then(|s| extract_effective_model(&s)) {
        Ok(model) => SweepCell {
            el,
            phi_x,
            model: Some(model),
            error: None,
        },
        Err(e) => SweepCell {
            el,
            phi_x,
            model: None,
            error: Some(e.to_string()),
        },
    }
}

/// Dense `(El, phi_x)` map of the effective model, row-major over `el_grid`.
///
/// Per-cell failures are recorded in the cell rather than aborting the map.
pub fn sweep_u2_u3(base: &QubitParams, el_grid: &[f64], phi_grid: &[f64]) -> Vec<SweepCell> {
    let cells = el_grid.len() * phi_grid.len();
    par::map_range(cells, |i| {
        let el = el_grid[i / phi_grid.len()];
        let phi = phi_grid[i % phi_grid.len()];
        sweep_cell(base, el, phi)
    })
}

/// Sequential twin of [`sweep_u2_u3`], kept for benchmarking the rayon path.
pub fn sweep_u2_u3_seq(base: &QubitParams, el_grid: &[f64], phi_grid: &[f64]) -> Vec<SweepCell> {
    let cells = el_grid.len() * phi_grid.len();
    par::map_range_seq(cells, |i| {
        let el = el_grid[i / phi_grid.len()];
        let phi = phi_grid[i % phi_grid.len()];
        sweep_cell(base, el, phi)
    })
}

/// Golden-section maximization of `U3` along the `U2 = 0` contour.
///
/// At each inductive energy the flux is retuned to the contour via
/// [`find_zero_u2`] inside `phi_window`; returns the maximizing `El` (to
/// `el_tol`) and the tuned point.
pub fn find_max_u3_on_contour(
    base: &QubitParams,
    el_lo: f64,
    el_hi: f64,
    phi_window: (f64, f64),
    el_tol: f64,
) -> Result<(f64, ZeroU2), QubitError> {
    let u3_at = |el: f64| -> Result<f64, QubitError> {
        let mut p = base.clone();
        p.el = el;
        Ok(find_zero_u2(&p, phi_window.0, phi_window.1)?.model.u3)
    };
    const INV_GOLDEN: f64 = 0.618_033_988_749_894_9;
    let mut a = el_lo;
    let mut b = el_hi;
    let mut c = b - INV_GOLDEN * (b - a);
    let mut d = a + INV_GOLDEN * (b - a);
    let mut fc = u3_at(c)?;
    let mut fd = u3_at(d)?;
    while (b - a).abs() > el_tol {
        if fc > fd {
            b = d;
            d = c;
            fd = fc;
            c = b - INV_GOLDEN * (b - a);
            fc = u3_at(c)?;
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + INV_GOLDEN * (b - a);
            fd = u3_at(d)?;
        }
    }
    let el = 0.5 * (a + b);
    let mut p = base.clone();
    p.el = el;
    let root = find_zero_u2(&p, phi_window.0, phi_window.1)?;
    Ok((el, root))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn harmonic_params() -> QubitParams {
        QubitParams {
            ec: 0.05,
            el: 1.4,
            ej: 0.0,
            phi_x: 0.0,
            basis_size: 80,
        }
    }

    #[test]
    fn harmonic_limit_spectrum() {
        let p = harmonic_params();
        let spec = diagonalize_qubit(&p, 6).unwrap();
        let model = extract_effective_model(&spec).unwrap();
        let omega = p.harmonic_frequency();
        assert!((model.omega0 - omega).abs() / omega < 1e-10);
        assert!(model.u2.abs() < 1e-10);
        assert!(model.u3.abs() < 1e-10);
    }

    #[test]
    fn harmonic_phi_elements() {
        let p = harmonic_params();
        let spec = diagonalize_qubit(&p, 6).unwrap();
        let l = p.osc_length();
        for n in 0..5 {
            let expect = l * ((n as f64 + 1.0) / 2.0).sqrt();
            let got = spec.phi_elements[(n, n + 1)].abs();
            assert!(
                (got - expect).abs() < 1e-10,
                "phi[{n},{}] = {got}, expected {expect}",
                n + 1
            );
        }
        // Hermitian (real symmetric) matrix elements.
        for i in 0..6 {
            for j in 0..6 {
                let d = (spec.phi_elements[(i, j)] - spec.phi_elements[(j, i)]).abs();
                assert!(d < 1e-10);
            }
        }
    }

    #[test]
    fn parity_blocks_at_zero_and_pi_flux() {
        for phi_x in [0.0, std::f64::consts::PI] {
            let p = QubitParams {
                phi_x,
                ..QubitParams::default()
            };
            let h = build_qubit_hamiltonian(&p).unwrap();
            for i in 0..p.basis_size {
                for j in 0..p.basis_size {
                    if (i + j) % 2 == 1 {
                        assert!(
                            h[(i, j)].abs() < 1e-12,
                            "parity-odd element H[{i},{j}] = {} at phi_x = {phi_x}",
                            h[(i, j)]
                        );
                    }
                }
            }
        }
    }

    #[test]
    fn flux_periodicity() {
        let p = QubitParams::default();
        let mut shifted = p.clone();
        shifted.phi_x = p.phi_x + 2.0 * std::f64::consts::PI;
        let a = diagonalize_qubit(&p, 6).unwrap();
        let b = diagonalize_qubit(&shifted, 6).unwrap();
        for (x, y) in a.energies.iter().zip(&b.energies) {
            assert!((x - y).abs() < 1e-10);
        }
    }

    #[test]
    fn self_convergence_60_vs_120() {
        let mut p = QubitParams {
            phi_x: 2.68,
            ..QubitParams::default()
        };
        p.basis_size = 60;
        let shift = check_convergence(&p, 6).unwrap();
        assert!(shift < 1e-9, "shift = {shift:e}");
    }

    #[test]
    fn extract_is_exact_on_synthetic_levels() {
        let omega = 0.75;
        let u = 0.013;
        let spec = QubitSpectrum {
            energies: vec![0.0, omega, 2.0 * omega, 3.0 * omega + u],
            phi_elements: DMatrix::zeros(4, 4),
        };
        let m = extract_effective_model(&spec).unwrap();
        assert!((m.omega0 - omega).abs() < 1e-15);
        assert!(m.u2.abs() < 1e-15);
        assert!((m.u3 - u).abs() < 1e-14);
    }

    #[test]
    fn extract_inverts_to_input_levels() {
        let p = QubitParams {
            phi_x: 2.3,
            ..QubitParams::default()
        };
        let spec = diagonalize_qubit(&p, 4).unwrap();
        let model = extract_effective_model(&spec).unwrap();
        let rebuilt = model_levels(&model);
        for (n, built) in rebuilt.iter().enumerate() {
            let orig = spec.energies[n] - spec.energies[0];
            assert!(
                (built - orig).abs() <= 1e-13 * (1.0 + orig.abs()),
                "level {n}: {built} vs {orig}"
            );
        }
    }

    #[test]
    fn operating_point_root() {
        let p = QubitParams::default();
        let root = find_zero_u2(&p, 2.0, 3.2).unwrap();
        assert!(!root.flat_window);
        assert!(
            (root.phi_x - 2.68).abs() < 0.05,
            "root at phi_x = {}",
            root.phi_x
        );
        assert!(root.model.u2.abs() < U2_ZERO_TOL);
        assert!(root.model.u3 > 0.0);
    }

    #[test]
    fn operating_point_level_structure() {
        // At the tuned flux the first two excitation gaps coincide while
        // the third is detuned by the three-body scale.
        let root = find_zero_u2(&QubitParams::default(), 2.0, 3.2).unwrap();
        let p = QubitParams {
            phi_x: root.phi_x,
            ..QubitParams::default()
        };
        let spec = diagonalize_qubit(&p, 4).unwrap();
        let g1 = spec.energies[1] - spec.energies[0];
        let g2 = spec.energies[2] - spec.energies[1];
        let g3 = spec.energies[3] - spec.energies[2];
        assert!((g2 - g1).abs() < U2_ZERO_TOL, "gap mismatch {}", g2 - g1);
        assert!((g3 - g1).abs() > 1e-2, "third gap not detuned: {}", g3 - g1);
    }

    #[test]
    fn el_half_root_matches_independent_scan() {
        // Oracle: walk phi_x in 1e-3 steps, bracket the sign change of U2,
        // bisect by hand. Frozen location: 2.995954. Truncation 60 is
        // converged to well below the comparison tolerance.
        let base = QubitParams {
            el: 0.5,
            basis_size: 60,
            ..QubitParams::default()
        };
        let u2_of = |phi: f64| {
            let p = QubitParams {
                phi_x: phi,
                ..base.clone()
            };
            extract_effective_model(&diagonalize_qubit(&p, 4).unwrap())
                .unwrap()
                .u2
        };
        let mut bracket = None;
        let mut prev = (2.0, u2_of(2.0));
        let mut phi = 2.0;
        while phi < 3.2 {
            phi += 1e-3;
            let u2 = u2_of(phi);
            if prev.1.signum() != u2.signum() {
                bracket = Some((prev.0, phi));
                break;
            }
            prev = (phi, u2);
        }
        let (mut a, mut b) = bracket.expect("U2 changes sign in the window");
        for _ in 0..40 {
            let mid = 0.5 * (a + b);
            if u2_of(a).signum() == u2_of(mid).signum() {
                a = mid;
            } else {
                b = mid;
            }
        }
        let oracle = 0.5 * (a + b);
        assert!((oracle - 2.995954).abs() < 1e-4, "oracle moved: {oracle}");

        let root = find_zero_u2(&base, 2.0, 3.2).unwrap();
        assert!(
            (root.phi_x - oracle).abs() < 1e-6,
            "solver {} vs oracle {oracle}",
            root.phi_x
        );
    }

    #[test]
    fn u3_contour_regression() {
        // Frozen three-body strengths along the zero-U2 contour. The
        // contour maximum over El in [0.5, 3.0] sits near 0.64; at
        // El = 1.4 the interaction is 0.01725 Ej (a few hundred MHz for a
        // Josephson energy of tens of GHz) with the excitations still
        // bosonic, which is the operating point used everywhere else.
        let expectations = [(0.8, 7.2128e-2), (1.4, 1.72521e-2), (2.0, 5.7654e-3)];
        for (el, u3) in expectations {
            let p = QubitParams {
                el,
                ..QubitParams::default()
            };
            let root = find_zero_u2(&p, 2.0, 3.2).unwrap();
            assert!(
                (root.model.u3 - u3).abs() < 1e-4,
                "U3({el}) = {} vs frozen {u3}",
                root.model.u3
            );
        }
        let (el_max, at) =
            find_max_u3_on_contour(&QubitParams::default(), 0.5, 3.0, (2.0, 3.2), 1e-3).unwrap();
        assert!((el_max - 0.643).abs() < 0.02, "contour max at El = {el_max}");
        assert!(at.model.u3 > 0.08);
    }

    #[test]
    fn flat_window_in_harmonic_limit() {
        let p = harmonic_params();
        let root = find_zero_u2(&p, 2.0, 3.2).unwrap();
        assert!(root.flat_window);
        assert!((root.phi_x - 2.6).abs() < 1e-12);
        assert!(root.model.u2.abs() < 1e-10);
    }

    #[test]
    fn no_root_reported_when_u2_stays_large() {
        // Deep in the anharmonic regime U2 is pinned negative near phi_x ~ pi.
        let p = QubitParams {
            ec: 0.05,
            el: 1.4,
            ej: 1.0,
            phi_x: 0.0,
            basis_size: 80,
        };
        let err = find_zero_u2(&p, 3.0, 3.2).unwrap_err();
        match err {
            QubitError::NoRoot { max_abs, .. } => assert!(max_abs > U2_ZERO_TOL),
            other => panic!("expected NoRoot, got {other}"),
        }
    }

    #[test]
    fn sweep_single_cell_matches_composition() {
        let base = QubitParams::default();
        let cells = sweep_u2_u3(&base, &[1.4], &[2.68]);
        assert_eq!(cells.len(), 1);
        let cell = cells[0].model.unwrap();
        let mut p = base.clone();
        p.el = 1.4;
        p.phi_x = 2.68;
        let direct = extract_effective_model(&diagonalize_qubit(&p, 4).unwrap()).unwrap();
        assert_eq!(cell, direct);
    }

    #[test]
    fn sweep_parallel_matches_sequential() {
        let base = QubitParams {
            basis_size: 40,
            ..QubitParams::default()
        };
        let els = [0.8, 1.4, 2.0];
        let phis = [2.0, 2.68];
        let a = sweep_u2_u3(&base, &els, &phis);
        let b = sweep_u2_u3_seq(&base, &els, &phis);
        assert_eq!(a.len(), b.len());
        for (x, y) in a.iter().zip(&b) {
            assert_eq!(x.model, y.model);
        }
    }

    #[test]
    fn rejects_bad_params() {
        let p = QubitParams {
            ec: -1.0,
            ..QubitParams::default()
        };
        assert!(matches!(
            build_qubit_hamiltonian(&p),
            Err(QubitError::InvalidParams(_))
        ));
        let p = QubitParams {
            basis_size: 10,
            ..QubitParams::default()
        };
        assert!(matches!(
            build_qubit_hamiltonian(&p),
            Err(QubitError::InvalidParams(_))
        ));
        assert!(matches!(
            diagonalize_qubit(&QubitParams::default(), 40),
            Err(QubitError::TooManyLevels { .. })
        ));
    }
}
