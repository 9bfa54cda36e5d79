//! Occupation-number bases at fixed particle number with a per-site cap.

use std::collections::HashMap;

use super::{LatticeError, LatticeSpec};

/// Default refusal threshold for the basis dimension.
pub const DEFAULT_DIM_LIMIT: usize = 5_000_000;

/// Ordered list of occupation vectors plus the reverse lookup.
///
/// States are sorted in descending lexicographic order, so for two sites and
/// two particles the basis reads `(2,0), (1,1), (0,2)`.
#[derive(Debug, Clone)]
pub struct FockBasis {
    states: Vec<Vec<u8>>,
    index: HashMap<Vec<u8>, u32>,
    pub n_sites: usize,
    pub n_particles: usize,
    pub n_max: u8,
}

/// Number of capped compositions, by dynamic programming over sites.
fn count_states(n_sites: usize, n_particles: usize, n_max: u8) -> usize {
    let mut counts = vec![0usize; n_particles + 1];
    counts[0] = 1;
    for _ in 0..n_sites {
        let mut next = vec![0usize; n_particles + 1];
        for (filled, &ways) in counts.iter().enumerate() {
            if ways == 0 {
                continue;
            }
            for occ in 0..=(n_max as usize).min(n_particles - filled) {
                next[filled + occ] += ways;
            }
        }
        counts = next;
    }
    counts[n_particles]
}

impl FockBasis {
    /// Enumerate all occupation vectors of `n_particles` over `n_sites`
    /// with at most `n_max` per site.
    pub fn enumerate(
        n_sites: usize,
        n_particles: usize,
        n_max: u8,
        dim_limit: usize,
    ) -> Result<Self, LatticeError> {
        let dim = count_states(n_sites, n_particles, n_max);
        if dim > dim_limit {
            return Err(LatticeError::DimensionLimit {
                dim,
                limit: dim_limit,
            });
        }
        let mut states = Vec::with_capacity(dim);
        let mut current = vec![0u8; n_sites];
        fill(&mut states, &mut current, 0, n_particles, n_max);
        debug_assert_eq!(states.len(), dim);

        let mut index = HashMap::with_capacity(dim);
        for (i, s) in states.iter().enumerate() {
            index.insert(s.clone(), i as u32);
        }
        Ok(FockBasis {
            states,
            index,
            n_sites,
            n_particles,
            n_max,
        })
    }

    pub fn dim(&self) -> usize {
        self.states.len()
    }

    pub fn state(&self, i: usize) -> &[u8] {
        &self.states[i]
    }

    pub fn index_of(&self, state: &[u8]) -> Option<usize> {
        self.index.get(state).map(|&i| i as usize)
    }

    pub fn iter(&self) -> impl Iterator<Item = &Vec<u8>> {
        self.states.iter()
    }
}

fn fill(states: &mut Vec<Vec<u8>>, current: &mut Vec<u8>, site: usize, remaining: usize, n_max: u8) {
    if site == current.len() {
        if remaining == 0 {
            states.push(current.clone());
        }
        return;
    }
    let sites_left = current.len() - site;
    let max_here = (n_max as usize).min(remaining);
    // Descending leading occupancy gives the canonical order.
    for occ in (0..=max_here).rev() {
        // Prune branches that cannot place the remaining particles.
        if remaining - occ > (sites_left - 1) * n_max as usize {
            continue;
        }
        current[site] = occ as u8;
        fill(states, current, site + 1, remaining - occ, n_max);
    }
    current[site] = 0;
}

/// Enumerate the basis described by a [`LatticeSpec`].
pub fn enumerate_basis(spec: &LatticeSpec) -> Result<FockBasis, LatticeError> {
    spec.validate()?;
    FockBasis::enumerate(spec.n_sites(), spec.n_particles, spec.n_max, DEFAULT_DIM_LIMIT)
}
