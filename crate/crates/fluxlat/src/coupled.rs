//! Two inductively coupled qubits and the capped bosonic reference model.
//!
//! The microscopic system is `H = H1 ⊗ 1 + 1 ⊗ H2 + M phi1 ⊗ phi2` in the
//! product of the two single-qubit eigenbases, with the full flux matrices
//! (diagonal and counter-rotating elements included — nothing is assumed
//! about the effective dynamics). Evolution is exact through the dense
//! eigendecomposition; the spaces involved are tiny (default 6 × 6 levels).
//!
//! The reference is a pair of bosonic modes with hopping `-J (a1†a2 + h.c.)`
//! and on-site `U2/2 n(n-1)`, optionally restricted to at most two quanta
//! per mode (the three-body hard-core limit). Matching between the two
//! engines is what certifies the √n enhancement factors of the qubit chain.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::qubit::{self, QubitParams};

#[derive(Debug, Error)]
pub enum CoupledError {
    #[error("invalid coupled spec: {0}")]
    InvalidSpec(String),
    #[error(transparent)]
    Qubit(#[from] qubit::QubitError),
    #[error("initial state ({0}, {1}) outside the kept {2} levels per qubit")]
    InitialOutsideTruncation(u8, u8, usize),
    #[error("initial state ({0}, {1}) has more than three excitations")]
    TooManyExcitations(u8, u8),
    #[error("time grids differ ({0} vs {1} samples)")]
    GridMismatch(usize, usize),
}

/// Two coupled qubits: circuit parameters, coupling energy `M` (coefficient
/// of `phi1 phi2`, units of Ej), per-qubit truncation and the sampling
/// window.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CoupledSpec {
    pub left: QubitParams,
    pub right: QubitParams,
    /// Coupling energy `M`.
    pub coupling: f64,
    pub levels_per_qubit: usize,
    /// Evolution window, units of 1/Ej (ħ = 1).
    pub t_max: f64,
    pub n_steps: usize,
}

impl CoupledSpec {
    pub fn validate(&self) -> Result<(), CoupledError> {
        self.left.validate()?;
        self.right.validate()?;
        if !self.coupling.is_finite() {
            return Err(CoupledError::InvalidSpec("coupling must be finite".into()));
        }
        if self.levels_per_qubit < 4 {
            return Err(CoupledError::InvalidSpec(format!(
                "levels_per_qubit must be >= 4 to resolve triple occupancy, got {}",
                self.levels_per_qubit
            )));
        }
        if self.n_steps < 2 {
            return Err(CoupledError::InvalidSpec("n_steps must be >= 2".into()));
        }
        Ok(())
    }

    /// Evenly spaced sample times `0 ..= t_max`.
    pub fn times(&self) -> Vec<f64> {
        let dt = self.t_max / (self.n_steps - 1) as f64;
        (0..self.n_steps).map(|i| i as f64 * dt).collect()
    }
}

/// Diagonalized coupled system, ready to evolve arbitrary product labels.
pub struct CoupledSystem {
    /// Product labels `(n1, n2)` indexing the basis.
    pub labels: Vec<(u8, u8)>,
    /// The product-basis Hamiltonian (real symmetric).
    pub hamiltonian: DMatrix<f64>,
    /// Effective hopping `M |<0|phi|1>_1| |<0|phi|1>_2|`.
    pub j_eff: f64,
    /// Mean extracted two-body interaction of the two qubits.
    pub u2_avg: f64,
    /// Extracted three-body interactions (left, right).
    pub u3: (f64, f64),
    /// Largest flux matrix element from a kept level into the first cut
    /// level (per unit `M`); nonzero for any finite truncation.
    pub cut_coupling: f64,
    /// Second-order population estimate for the cut levels. Warn-worthy
    /// when it approaches the blockade scale.
    pub leakage_estimate: f64,
    levels: usize,
    eigvals: Vec<f64>,
    eigvecs: DMatrix<f64>,
}

/// Populations of every product label over a time grid.
#[derive(Debug, Clone, PartialEq)]
pub struct PopulationTrace {
    pub times: Vec<f64>,
    pub labels: Vec<(u8, u8)>,
    /// `populations[t][l]` for time index `t` and label index `l`.
    pub populations: Vec<Vec<f64>>,
}

impl PopulationTrace {
    pub fn population(&self, label: (u8, u8)) -> Option<Vec<f64>> {
        let l = self.labels.iter().position(|&x| x == label)?;
        Some(self.populations.iter().map(|row| row[l]).collect())
    }

    /// Sum of populations over labels selected by `pred`, per time sample.
    pub fn summed<F: Fn(u8, u8) -> bool>(&self, pred: F) -> Vec<f64> {
        self.populations
            .iter()
            .map(|row| {
                self.labels
                    .iter()
                    .zip(row)
                    .filter(|(&(a, b), _)| pred(a, b))
                    .map(|(_, p)| p)
                    .sum()
            })
            .collect()
    }
}

/// Build and diagonalize the coupled Hamiltonian.
pub fn build_coupled_system(spec: &CoupledSpec) -> Result<CoupledSystem, CoupledError> {
    spec.validate()?;
    let m = spec.levels_per_qubit;
    // Keep one level past the truncation to estimate the coupling that the
    // cut discards.
    let left = qubit::diagonalize_qubit(&spec.left, m + 1)?;
    let right = qubit::diagonalize_qubit(&spec.right, m + 1)?;

    let cut = |s: &qubit::QubitSpectrum| -> f64 {
        (0..m)
            .map(|i| s.phi_elements[(i, m)].abs())
            .fold(0.0, f64::max)
    };
    let cut_coupling = cut(&left).max(cut(&right));
    let phi_max = (0..m)
        .flat_map(|i| (0..m).map(move |j| (i, j)))
        .map(|(i, j)| left.phi_elements[(i, j)].abs().max(right.phi_elements[(i, j)].abs()))
        .fold(0.0, f64::max);
    let gap_to_cut = (left.energies[m] - left.energies[m - 1])
        .min(right.energies[m] - right.energies[m - 1]);
    let leakage_estimate =
        (spec.coupling.abs() * cut_coupling * phi_max / gap_to_cut.max(1e-12)).powi(2);

    let p1l = left.phi_elements[(0, 1)].abs();
    let p1r = right.phi_elements[(0, 1)].abs();
    let model_l = qubit::extract_effective_model(&left)?;
    let model_r = qubit::extract_effective_model(&right)?;

    let dim = m * m;
    let mut h = DMatrix::zeros(dim, dim);
    let mut labels = Vec::with_capacity(dim);
    for n1 in 0..m {
        for n2 in 0..m {
            labels.push((n1 as u8, n2 as u8));
        }
    }
    for (r, &(a1, a2)) in labels.iter().enumerate() {
        for (c, &(b1, b2)) in labels.iter().enumerate() {
            let mut v = 0.0;
            if r == c {
                v += left.energies[a1 as usize] + right.energies[a2 as usize];
            }
            v += spec.coupling
                * left.phi_elements[(a1 as usize, b1 as usize)]
                * right.phi_elements[(a2 as usize, b2 as usize)];
            h[(r, c)] = v;
        }
    }

    let eig = nalgebra::SymmetricEigen::new(h.clone());
    let mut order: Vec<usize> = (0..dim).collect();
    order.sort_by(|&i, &j| eig.eigenvalues[i].partial_cmp(&eig.eigenvalues[j]).unwrap());
    let eigvals: Vec<f64> = order.iter().map(|&i| eig.eigenvalues[i]).collect();
    let mut eigvecs = DMatrix::zeros(dim, dim);
    for (k, &i) in order.iter().enumerate() {
        eigvecs.set_column(k, &eig.eigenvectors.column(i));
    }

    Ok(CoupledSystem {
        labels,
        hamiltonian: h,
        j_eff: spec.coupling.abs() * p1l * p1r,
        u2_avg: 0.5 * (model_l.u2 + model_r.u2),
        u3: (model_l.u3, model_r.u3),
        cut_coupling,
        leakage_estimate,
        levels: m,
        eigvals,
        eigvecs,
    })
}

impl CoupledSystem {
    fn label_index(&self, initial: (u8, u8)) -> Result<usize, CoupledError> {
        let (n1, n2) = initial;
        if n1 as usize >= self.levels || n2 as usize >= self.levels {
            return Err(CoupledError::InitialOutsideTruncation(n1, n2, self.levels));
        }
        if n1 + n2 > 3 {
            return Err(CoupledError::TooManyExcitations(n1, n2));
        }
        Ok(n1 as usize * self.levels + n2 as usize)
    }

    /// Exact evolution of a product label through the eigendecomposition.
    pub fn evolve(&self, initial: (u8, u8), times: &[f64]) -> Result<PopulationTrace, CoupledError> {
        let init = self.label_index(initial)?;
        let dim = self.labels.len();
        // Overlap of the initial basis vector with each eigenstate.
        let coeffs: Vec<f64> = (0..dim).map(|k| self.eigvecs[(init, k)]).collect();

        let populations = times
            .iter()
            .map(|&t| {
                let mut amps = vec![Complex64::new(0.0, 0.0); dim];
                for (k, &c) in coeffs.iter().enumerate() {
                    let phase = Complex64::from_polar(c, -self.eigvals[k] * t);
                    for (i, amp) in amps.iter_mut().enumerate() {
                        *amp += self.eigvecs[(i, k)] * phase;
                    }
                }
                amps.iter().map(|a| a.norm_sqr()).collect()
            })
            .collect();

        Ok(PopulationTrace {
            times: times.to_vec(),
            labels: self.labels.clone(),
            populations,
        })
    }

    /// `<psi(t)| H |psi(t)>` per sample, for the energy-conservation checks.
    pub fn energy_expectation(
        &self,
        initial: (u8, u8),
        times: &[f64],
    ) -> Result<Vec<f64>, CoupledError> {
        let init = self.label_index(initial)?;
        let dim = self.labels.len();
        let coeffs: Vec<f64> = (0..dim).map(|k| self.eigvecs[(init, k)]).collect();
        Ok(times
            .iter()
            .map(|&t| {
                let mut amps = DVector::from_element(dim, Complex64::new(0.0, 0.0));
                for (k, &c) in coeffs.iter().enumerate() {
                    let phase = Complex64::from_polar(c, -self.eigvals[k] * t);
                    for i in 0..dim {
                        amps[i] += self.eigvecs[(i, k)] * phase;
                    }
                }
                let mut e = 0.0;
                for r in 0..dim {
                    for c in 0..dim {
                        e += (amps[r].conj() * self.hamiltonian[(r, c)] * amps[c]).re;
                    }
                }
                e
            })
            .collect())
    }
}

/// Per-mode occupancy restriction of the bosonic reference.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum OccupancyCap {
    /// Three-body hard core: at most two quanta per mode.
    ThreeBodyHardCore,
    /// No cap beyond three quanta total.
    None,
}

/// Evolve the two-mode bosonic reference from a Fock label.
///
/// `H = -j (a1†a2 + a2†a1) + (u2/2) Σ n_i (n_i - 1)` restricted to the
/// capped Fock space at the initial total excitation number; the √n
/// enhancement factors come straight from the ladder algebra.
pub fn bosonic_reference(
    j: f64,
    u2: f64,
    cap: OccupancyCap,
    initial: (u8, u8),
    times: &[f64],
) -> Result<PopulationTrace, CoupledError> {
    let total = initial.0 + initial.1;
    if total > 3 {
        return Err(CoupledError::TooManyExcitations(initial.0, initial.1));
    }
    let cap_n = match cap {
        OccupancyCap::ThreeBodyHardCore => 2,
        OccupancyCap::None => 3,
    };
    if initial.0 > cap_n || initial.1 > cap_n {
        return Err(CoupledError::InvalidSpec(format!(
            "initial ({}, {}) violates the per-mode cap {}",
            initial.0, initial.1, cap_n
        )));
    }

    let labels: Vec<(u8, u8)> = (0..=total)
        .filter_map(|n1| {
            let n2 = total - n1;
            (n1 <= cap_n && n2 <= cap_n).then_some((n1, n2))
        })
        .collect();
    let dim = labels.len();
    let idx = |l: (u8, u8)| labels.iter().position(|&x| x == l).unwrap();

    let mut h = DMatrix::zeros(dim, dim);
    for (i, &(n1, n2)) in labels.iter().enumerate() {
        h[(i, i)] = 0.5 * u2 * (f64::from(n1) * (f64::from(n1) - 1.0) + f64::from(n2) * (f64::from(n2) - 1.0));
        // a1† a2 : (n1, n2) -> (n1 + 1, n2 - 1)
        if n2 > 0 && n1 < cap_n {
            let j_el = -j * ((f64::from(n1) + 1.0) * f64::from(n2)).sqrt();
            h[(idx((n1 + 1, n2 - 1)), i)] += j_el;
        }
        if n1 > 0 && n2 < cap_n {
            let j_el = -j * ((f64::from(n2) + 1.0) * f64::from(n1)).sqrt();
            h[(idx((n1 - 1, n2 + 1)), i)] += j_el;
        }
    }

    let eig = nalgebra::SymmetricEigen::new(h);
    let init = idx(initial);
    let populations = times
        .iter()
        .map(|&t| {
            let mut amps = vec![Complex64::new(0.0, 0.0); dim];
            for k in 0..dim {
                let c = eig.eigenvectors[(init, k)];
                let phase = Complex64::from_polar(c, -eig.eigenvalues[k] * t);
                for (i, amp) in amps.iter_mut().enumerate() {
                    *amp += eig.eigenvectors[(i, k)] * phase;
                }
            }
            amps.iter().map(|a| a.norm_sqr()).collect()
        })
        .collect();

    Ok(PopulationTrace {
        times: times.to_vec(),
        labels,
        populations,
    })
}

/// Deviation between two traces on identical time grids.
#[derive(Debug, Clone)]
pub struct TraceDeviation {
    /// `(label, max pointwise, rms)` per label present in either trace.
    pub per_label: Vec<((u8, u8), f64, f64)>,
    pub max: f64,
}

/// Compare traces label by label; labels absent from one trace count as
/// zero population there.
pub fn compare_traces(
    a: &PopulationTrace,
    b: &PopulationTrace,
) -> Result<TraceDeviation, CoupledError> {
    if a.times.len() != b.times.len() {
        return Err(CoupledError::GridMismatch(a.times.len(), b.times.len()));
    }
    for (x, y) in a.times.iter().zip(&b.times) {
        if (x - y).abs() > 1e-12 * (1.0 + x.abs()) {
            return Err(CoupledError::GridMismatch(a.times.len(), b.times.len()));
        }
    }
    let mut labels: Vec<(u8, u8)> = a.labels.iter().chain(&b.labels).copied().collect();
    labels.sort_unstable();
    labels.dedup();

    let series = |t: &PopulationTrace, l: (u8, u8)| -> Option<usize> {
        t.labels.iter().position(|&x| x == l)
    };
    let n = a.times.len() as f64;
    let mut per_label = Vec::with_capacity(labels.len());
    let mut overall: f64 = 0.0;
    for l in labels {
        let ia = series(a, l);
        let ib = series(b, l);
        let mut max_d: f64 = 0.0;
        let mut sum_sq = 0.0;
        for t in 0..a.times.len() {
            let pa = ia.map_or(0.0, |i| a.populations[t][i]);
            let pb = ib.map_or(0.0, |i| b.populations[t][i]);
            let d = (pa - pb).abs();
            max_d = max_d.max(d);
            sum_sq += d * d;
        }
        overall = overall.max(max_d);
        per_label.push((l, max_d, (sum_sq / n).sqrt()));
    }
    Ok(TraceDeviation {
        per_label,
        max: overall,
    })
}

/// Two identical qubits tuned to the `U2 = 0` point, coupled so that the
/// single-excitation hopping is `j_eff`.
pub fn matched_pair(base: &QubitParams, phi_window: (f64, f64), j_eff: f64) -> Result<CoupledSpec, CoupledError> {
    let root = qubit::find_zero_u2(base, phi_window.0, phi_window.1)?;
    let mut tuned = base.clone();
    tuned.phi_x = root.phi_x;
    let spec = qubit::diagonalize_qubit(&tuned, 2)?;
    let p1 = spec.phi_elements[(0, 1)].abs();
    Ok(CoupledSpec {
        left: tuned.clone(),
        right: tuned,
        coupling: j_eff / (p1 * p1),
        levels_per_qubit: 6,
        t_max: 20.0 / j_eff,
        n_steps: 2000,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small_pair(coupling: f64) -> CoupledSpec {
        let q = QubitParams {
            phi_x: 2.68,
            basis_size: 40,
            ..QubitParams::default()
        };
        CoupledSpec {
            left: q.clone(),
            right: q,
            coupling,
            levels_per_qubit: 5,
            t_max: 50.0,
            n_steps: 200,
        }
    }

    #[test]
    fn zero_coupling_freezes_populations() {
        let spec = small_pair(0.0);
        let sys = build_coupled_system(&spec).unwrap();
        let trace = sys.evolve((1, 2), &spec.times()).unwrap();
        let p12 = trace.population((1, 2)).unwrap();
        for p in p12 {
            assert!((p - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn ground_state_is_stationary() {
        // The uncoupled ground label only dresses at second order in M.
        let spec = small_pair(1e-4);
        let sys = build_coupled_system(&spec).unwrap();
        let trace = sys.evolve((0, 0), &spec.times()).unwrap();
        let p00 = trace.population((0, 0)).unwrap();
        for p in p00 {
            assert!((p - 1.0).abs() < 1e-6);
        }
    }

    #[test]
    fn unitarity_and_energy_conservation() {
        let spec = small_pair(2e-3);
        let sys = build_coupled_system(&spec).unwrap();
        let times = spec.times();
        let trace = sys.evolve((1, 1), &times).unwrap();
        for row in &trace.populations {
            let sum: f64 = row.iter().sum();
            assert!((sum - 1.0).abs() < 1e-8, "population sum {sum}");
        }
        let e = sys.energy_expectation((1, 1), &times).unwrap();
        let e0 = e[0];
        for v in e {
            assert!((v - e0).abs() < 1e-10 * e0.abs(), "energy drift {v} vs {e0}");
        }
    }

    #[test]
    fn swap_symmetry_for_identical_qubits() {
        let spec = small_pair(2e-3);
        let sys = build_coupled_system(&spec).unwrap();
        let times = spec.times();
        let a = sys.evolve((1, 0), &times).unwrap();
        let b = sys.evolve((0, 1), &times).unwrap();
        for t in 0..times.len() {
            for (l, &(n1, n2)) in a.labels.iter().enumerate() {
                let mirrored = b.labels.iter().position(|&x| x == (n2, n1)).unwrap();
                let d = (a.populations[t][l] - b.populations[t][mirrored]).abs();
                assert!(d < 1e-10, "swap asymmetry {d} at label ({n1},{n2})");
            }
        }
    }

    #[test]
    fn microscopic_rabi_frequency_matches_j_eff() {
        // One excitation oscillates as sin^2(J_eff t) between the qubits,
        // i.e. angular frequency 2 J_eff; J_eff is derived from the flux
        // matrix elements, not fitted.
        let root = crate::qubit::find_zero_u2(&QubitParams::default(), 2.0, 3.2).unwrap();
        let q = QubitParams {
            phi_x: root.phi_x,
            ..QubitParams::default()
        };
        let j_eff = 1e-5;
        let spec = diagonalize_then_pair(q, j_eff);
        let sys = build_coupled_system(&spec).unwrap();
        assert!((sys.j_eff - j_eff).abs() < 1e-12);
        let times = spec.times();
        let trace = sys.evolve((1, 0), &times).unwrap();
        let p01 = trace.population((0, 1)).unwrap();
        for (i, &t) in times.iter().enumerate() {
            let expect = (j_eff * t).sin().powi(2);
            assert!(
                (p01[i] - expect).abs() < 5e-3,
                "P01({t}) = {} vs sin^2 = {expect}",
                p01[i]
            );
        }
    }

    fn diagonalize_then_pair(q: QubitParams, j_eff: f64) -> CoupledSpec {
        let spec = crate::qubit::diagonalize_qubit(&q, 2).unwrap();
        let p1 = spec.phi_elements[(0, 1)].abs();
        CoupledSpec {
            left: q.clone(),
            right: q,
            coupling: j_eff / (p1 * p1),
            levels_per_qubit: 6,
            t_max: 2.0 * std::f64::consts::PI / j_eff,
            n_steps: 400,
        }
    }

    #[test]
    fn reference_single_excitation_rabi() {
        let j = 0.01;
        let times: Vec<f64> = (0..400).map(|i| i as f64 * 1.0).collect();
        let trace = bosonic_reference(j, 0.0, OccupancyCap::ThreeBodyHardCore, (1, 0), &times).unwrap();
        let p10 = trace.population((1, 0)).unwrap();
        for (i, &t) in times.iter().enumerate() {
            let expect = (j * t).cos().powi(2);
            assert!(
                (p10[i] - expect).abs() < 1e-10,
                "P10({t}) = {} vs cos^2 = {expect}",
                p10[i]
            );
        }
    }

    #[test]
    fn reference_two_excitations_su2() {
        // Non-interacting, uncapped: amplitudes follow the spin-1 rotation.
        let j = 0.02;
        let times: Vec<f64> = (0..300).map(|i| i as f64 * 0.7).collect();
        let trace = bosonic_reference(j, 0.0, OccupancyCap::None, (1, 1), &times).unwrap();
        let p11 = trace.population((1, 1)).unwrap();
        let p20 = trace.population((2, 0)).unwrap();
        let p02 = trace.population((0, 2)).unwrap();
        for (i, &t) in times.iter().enumerate() {
            let c = (j * t).cos();
            let s = (j * t).sin();
            assert!((p11[i] - (c * c - s * s).powi(2)).abs() < 1e-10);
            assert!((p20[i] - 2.0 * c * c * s * s).abs() < 1e-10);
            assert!((p02[i] - 2.0 * c * c * s * s).abs() < 1e-10);
            let sum = p11[i] + p20[i] + p02[i];
            assert!((sum - 1.0).abs() < 1e-10);
        }
    }

    #[test]
    fn compare_traces_identical_and_offset() {
        let times = vec![0.0, 1.0, 2.0];
        let t1 = PopulationTrace {
            times: times.clone(),
            labels: vec![(0, 0), (1, 0)],
            populations: vec![vec![1.0, 0.0], vec![0.6, 0.4], vec![0.2, 0.8]],
        };
        let dev = compare_traces(&t1, &t1).unwrap();
        assert_eq!(dev.max, 0.0);

        let mut t2 = t1.clone();
        t2.populations[1][1] += 1e-3;
        let dev = compare_traces(&t1, &t2).unwrap();
        assert!((dev.max - 1e-3).abs() < 1e-15);

        let t3 = PopulationTrace {
            times: vec![0.0, 1.0],
            labels: t1.labels.clone(),
            populations: vec![vec![1.0, 0.0], vec![0.6, 0.4]],
        };
        assert!(matches!(
            compare_traces(&t1, &t3),
            Err(CoupledError::GridMismatch(_, _))
        ));
    }

    #[test]
    fn rejects_invalid_initial_states() {
        let spec = small_pair(1e-3);
        let sys = build_coupled_system(&spec).unwrap();
        assert!(matches!(
            sys.evolve((5, 0), &spec.times()),
            Err(CoupledError::InitialOutsideTruncation(..))
        ));
        assert!(matches!(
            sys.evolve((2, 2), &spec.times()),
            Err(CoupledError::TooManyExcitations(..))
        ));
    }
}
