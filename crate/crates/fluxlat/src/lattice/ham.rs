//! Magnetic hopping amplitudes and the sparse lattice Hamiltonian.
//!
//! Hopping follows the Gaussian long-range form
//!
//! ```text
//! W(dx, dy) = (-1)^(dx + dy + dx dy) exp(-(pi/2)(1 - alpha)(dx² + dy² - 1))
//! ```
//!
//! (normalized so the nearest-neighbor magnitude is exactly `J = 1`) with
//! the Landau-gauge phase `exp(-i 2 pi alpha (y dx + dx dy / 2))` attached
//! at the source row. Restricting to `(±1, 0), (0, ±1)` recovers plain
//! magnetic nearest-neighbor hopping with x-links carrying `exp(-i 2πα y)`.
//!
//! On the torus, hops that wrap in y pick up the transition factor
//! `exp(i 2πα Ly x_target w)` (`w` = signed boundary crossings), which keeps
//! the flux uniform at `2πα` per plaquette whenever the total flux
//! `alpha Lx Ly` is an integer. Boundary twists enter as vector potentials,
//! `exp(i(θx dx / Lx + θy dy / Ly))` per hop.

use std::f64::consts::PI;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::basis::FockBasis;
use super::{LatticeError, LatticeSpec};
use crate::par;

/// Which displacement set the hopping sum runs over.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum HoppingScheme {
    /// `(±1, 0)` and `(0, ±1)`.
    #[serde(alias = "nn")]
    Nearest,
    /// Nearest plus the four diagonals `(±1, ±1)`.
    #[serde(alias = "nnn")]
    NextNearest,
    /// Every displacement with `max(|dx|, |dy|) <= radius`; amplitudes below
    /// 1e-8 are dropped. Opposite displacements reaching the same site on a
    /// small torus (|d| = L/2) both contribute.
    #[serde(alias = "longrange")]
    LongRange { radius: usize },
}

impl HoppingScheme {
    /// Default long-range cutoff for a given lattice.
    pub fn default_long_range(lx: usize, ly: usize) -> Self {
        HoppingScheme::LongRange {
            radius: lx.min(ly) / 2,
        }
    }

    pub fn has_diagonal_hops(&self) -> bool {
        !matches!(self, HoppingScheme::Nearest)
    }

    /// The displacement set, symmetric under negation.
    pub fn displacements(&self) -> Vec<(i64, i64)> {
        match *self {
            HoppingScheme::Nearest => vec![(1, 0), (-1, 0), (0, 1), (0, -1)],
            HoppingScheme::NextNearest => vec![
                (1, 0),
                (-1, 0),
                (0, 1),
                (0, -1),
                (1, 1),
                (-1, -1),
                (1, -1),
                (-1, 1),
            ],
            HoppingScheme::LongRange { radius } => {
                let r = radius as i64;
                let mut out = Vec::new();
                for dx in -r..=r {
                    for dy in -r..=r {
                        if (dx, dy) != (0, 0) {
                            out.push((dx, dy));
                        }
                    }
                }
                out
            }
        }
    }
}

/// Amplitude dropped below this magnitude in the long-range scheme.
const AMPLITUDE_FLOOR: f64 = 1e-8;

/// Full complex coefficient of `a†_(x+dx, y+dy) a_(x, y)` for a hop leaving
/// row `y`, before torus wrapping and twists. Normalized so that
/// `|hop_amplitude(1, 0, ..)| = 1`.
pub fn hop_amplitude(dx: i64, dy: i64, y: i64, alpha: f64) -> Complex64 {
    debug_assert!((dx, dy) != (0, 0));
    let sign = if (dx + dy + dx * dy) % 2 == 0 { 1.0 } else { -1.0 };
    let r2 = (dx * dx + dy * dy) as f64;
    let magnitude = (-(PI / 2.0) * (1.0 - alpha) * (r2 - 1.0)).exp();
    let phase = -2.0 * PI * alpha * (y as f64 * dx as f64 + (dx * dy) as f64 / 2.0);
    Complex64::from_polar(sign * magnitude, phase)
}

/// Hermitian sparse matrix in row-compressed form.
#[derive(Debug, Clone)]
pub struct SparseHam {
    pub dim: usize,
    row_ptr: Vec<usize>,
    cols: Vec<u32>,
    vals: Vec<Complex64>,
}

impl SparseHam {
    pub fn nnz(&self) -> usize {
        self.vals.len()
    }

    pub fn row(&self, i: usize) -> (&[u32], &[Complex64]) {
        let r = self.row_ptr[i]..self.row_ptr[i + 1];
        (&self.cols[r.clone()], &self.vals[r])
    }

    /// `y = H x`, parallel over row blocks. Each row is an ordered sum, so
    /// the result is bit-identical for any thread count.
    pub fn apply(&self, x: &[Complex64]) -> Vec<Complex64> {
        par::map_range_chunked(self.dim, 512, |i| self.row_dot(i, x))
    }

    /// Sequential twin of [`apply`](Self::apply).
    pub fn apply_seq(&self, x: &[Complex64]) -> Vec<Complex64> {
        par::map_range_seq(self.dim, |i| self.row_dot(i, x))
    }

    #[inline]
    fn row_dot(&self, i: usize, x: &[Complex64]) -> Complex64 {
        let (cols, vals) = self.row(i);
        let mut acc = Complex64::new(0.0, 0.0);
        for (c, v) in cols.iter().zip(vals) {
            acc += v * x[*c as usize];
        }
        acc
    }

    /// Row-sum norm (upper bound on the spectral radius).
    pub fn infinity_norm(&self) -> f64 {
        (0..self.dim)
            .map(|i| self.row(i).1.iter().map(|v| v.norm()).sum())
            .fold(0.0, f64::max)
    }

    /// Largest Hermiticity violation `|H[i][j] - conj(H[j][i])|` plus the
    /// largest imaginary part on the diagonal.
    pub fn hermiticity_defect(&self) -> f64 {
        let mut worst: f64 = 0.0;
        for i in 0..self.dim {
            let (cols, vals) = self.row(i);
            for (c, v) in cols.iter().zip(vals) {
                let j = *c as usize;
                if j == i {
                    worst = worst.max(v.im.abs());
                    continue;
                }
                let (jcols, jvals) = self.row(j);
                let partner = match jcols.binary_search(&(i as u32)) {
                    Ok(pos) => jvals[pos],
                    Err(_) => Complex64::new(0.0, 0.0),
                };
                worst = worst.max((v - partner.conj()).norm());
            }
        }
        worst
    }

    pub fn to_dense(&self) -> nalgebra::DMatrix<Complex64> {
        let mut m = nalgebra::DMatrix::from_element(self.dim, self.dim, Complex64::new(0.0, 0.0));
        for i in 0..self.dim {
            let (cols, vals) = self.row(i);
            for (c, v) in cols.iter().zip(vals) {
                m[(i, *c as usize)] = *v;
            }
        }
        m
    }
}

struct HopTerm {
    dx: i64,
    dy: i64,
    base: Complex64,
}

/// Precompute the per-displacement factors that do not depend on the site.
fn hop_terms(spec: &LatticeSpec) -> Vec<HopTerm> {
    spec.scheme
        .displacements()
        .into_iter()
        .filter_map(|(dx, dy)| {
            let raw = hop_amplitude(dx, dy, 0, spec.alpha);
            if raw.norm() < AMPLITUDE_FLOOR {
                return None;
            }
            let twist = spec.theta_x * dx as f64 / spec.lx as f64
                + spec.theta_y * dy as f64 / spec.ly as f64;
            Some(HopTerm {
                dx,
                dy,
                base: Complex64::from_polar(1.0, twist),
            })
        })
        .collect()
}

/// Build the many-body Hamiltonian over `basis` (hops in units of J = 1).
pub fn build_hamiltonian(spec: &LatticeSpec, basis: &FockBasis) -> Result<SparseHam, LatticeError> {
    build_hamiltonian_gauged(spec, basis, None)
}

/// Sequential twin of [`build_hamiltonian`], kept for benchmarking.
pub fn build_hamiltonian_seq(
    spec: &LatticeSpec,
    basis: &FockBasis,
) -> Result<SparseHam, LatticeError> {
    build_impl(spec, basis, None, false)
}

/// Build with an optional local gauge field `chi` (one angle per site):
/// every hop `r -> t` is multiplied by `exp(i (chi[t] - chi[r]))`. The
/// spectrum must not move; the gauge-invariance suite relies on this knob.
pub fn build_hamiltonian_gauged(
    spec: &LatticeSpec,
    basis: &FockBasis,
    chi: Option<&[f64]>,
) -> Result<SparseHam, LatticeError> {
    build_impl(spec, basis, chi, true)
}

fn build_impl(
    spec: &LatticeSpec,
    basis: &FockBasis,
    chi: Option<&[f64]>,
    parallel: bool,
) -> Result<SparseHam, LatticeError> {
    spec.validate()?;
    if basis.n_sites != spec.n_sites()
        || basis.n_particles != spec.n_particles
        || basis.n_max != spec.n_max
    {
        return Err(LatticeError::BasisMismatch(format!(
            "basis is {} sites / {} particles / cap {}, spec wants {} / {} / {}",
            basis.n_sites,
            basis.n_particles,
            basis.n_max,
            spec.n_sites(),
            spec.n_particles,
            spec.n_max
        )));
    }
    if let Some(chi) = chi {
        if chi.len() != spec.n_sites() {
            return Err(LatticeError::InvalidSpec(format!(
                "gauge field has {} entries for {} sites",
                chi.len(),
                spec.n_sites()
            )));
        }
    }

    let terms = hop_terms(spec);
    let lx = spec.lx as i64;
    let ly = spec.ly as i64;
    let alpha = spec.alpha;
    let n_max = spec.n_max;
    let dim = basis.dim();

    let build_row = |i: usize| -> (Vec<u32>, Vec<Complex64>) {
        let state = basis.state(i);
        let mut entries: Vec<(u32, Complex64)> = Vec::new();

        // Diagonal: on-site interactions.
        let mut diag = 0.0;
        for &occ in state {
            let n = occ as f64;
            diag += 0.5 * spec.u2 * n * (n - 1.0);
            if n_max >= 3 {
                diag += spec.u3 / 6.0 * n * (n - 1.0) * (n - 2.0);
            }
        }
        entries.push((i as u32, Complex64::new(diag, 0.0)));

        // Hops: apply H to |i> (column i), then conjugate into row i.
        let mut scratch = state.to_vec();
        for (src, &occ_src) in state.iter().enumerate() {
            if occ_src == 0 {
                continue;
            }
            let (sx, sy) = (src as i64 % lx, src as i64 / lx);
            for term in &terms {
                let ux = sx + term.dx;
                let uy = sy + term.dy;
                let wy = uy.div_euclid(ly);
                let tx = ux.rem_euclid(lx);
                let ty = uy.rem_euclid(ly);
                let tgt = (ty * lx + tx) as usize;
                if tgt == src {
                    continue;
                }
                if state[tgt] >= n_max {
                    continue;
                }
                let mut amp = hop_amplitude(term.dx, term.dy, sy, alpha) * term.base;
                if wy != 0 {
                    let seam = 2.0 * PI * alpha * ly as f64 * tx as f64 * wy as f64;
                    amp *= Complex64::from_polar(1.0, seam);
                }
                if let Some(chi) = chi {
                    amp *= Complex64::from_polar(1.0, chi[tgt] - chi[src]);
                }
                let factor = (occ_src as f64 * (state[tgt] + 1) as f64).sqrt();

                scratch[src] -= 1;
                scratch[tgt] += 1;
                let j = basis
                    .index_of(&scratch)
                    .expect("hop target stays in the fixed-N capped basis");
                scratch[src] += 1;
                scratch[tgt] -= 1;

                // <j|H|i> = amp * factor; row i holds the conjugate.
                entries.push((j as u32, (amp * factor).conj()));
            }
        }

        entries.sort_by_key(|e| e.0);
        let mut cols = Vec::with_capacity(entries.len());
        let mut vals: Vec<Complex64> = Vec::with_capacity(entries.len());
        for (c, v) in entries {
            if cols.last() == Some(&c) {
                *vals.last_mut().unwrap() += v;
            } else {
                cols.push(c);
                vals.push(v);
            }
        }
        (cols, vals)
    };

    let rows = if parallel {
        par::map_range(dim, build_row)
    } else {
        par::map_range_seq(dim, build_row)
    };

    let mut row_ptr = Vec::with_capacity(dim + 1);
    row_ptr.push(0);
    let nnz: usize = rows.iter().map(|(c, _)| c.len()).sum();
    let mut cols = Vec::with_capacity(nnz);
    let mut vals = Vec::with_capacity(nnz);
    for (c, v) in rows {
        cols.extend_from_slice(&c);
        vals.extend_from_slice(&v);
        row_ptr.push(cols.len());
    }
    let h = SparseHam {
        dim,
        row_ptr,
        cols,
        vals,
    };
    debug_assert!(
        h.hermiticity_defect() < 1e-12 * h.infinity_norm().max(1.0),
        "built matrix is not Hermitian"
    );
    Ok(h)
}
