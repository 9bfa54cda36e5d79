//! Parameter scans: hopping-scheme comparison, order-parameter maps and
//! the experimental feasibility table.

use std::collections::BTreeMap;
use std::path::PathBuf;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::lattice::{
    self, detect_degeneracy, lanczos_lowest, Degeneracy, HoppingScheme, LatticeError, LatticeSpec,
    SolverOpts,
};
use crate::par;
use crate::qubit::EffectiveModel;

#[derive(Debug, Error)]
pub enum SweepError {
    #[error(transparent)]
    Lattice(#[from] LatticeError),
    #[error("invalid sweep plan: {0}")]
    InvalidPlan(String),
}

/// Which scan a [`SweepPlan`] drives.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SweepTarget {
    Fig2Map,
    Fig4aSchemes,
    Fig4bOrder,
    Feasibility,
}

/// A resolved scan: named axes, fixed parameters, output location.
#[derive(Debug, Clone, Serialize)]
pub struct SweepPlan {
    pub target: SweepTarget,
    pub axes: BTreeMap<String, Vec<f64>>,
    pub fixed: BTreeMap<String, serde_json::Value>,
    pub output: PathBuf,
}

impl SweepPlan {
    /// Grids non-empty and every fixed parameter the target needs present.
    pub fn validate(&self) -> Result<(), SweepError> {
        for (name, grid) in &self.axes {
            if grid.is_empty() {
                return Err(SweepError::InvalidPlan(format!("axis `{name}` is empty")));
            }
        }
        let required: &[&str] = match self.target {
            SweepTarget::Fig2Map => &["ec", "basis_size"],
            SweepTarget::Fig4aSchemes => &["lx", "ly", "alpha", "n_particles"],
            SweepTarget::Fig4bOrder => &["lx", "ly", "alpha", "n_particles", "scheme"],
            SweepTarget::Feasibility => &["u3_over_ej", "j_mhz"],
        };
        for key in required {
            if !self.fixed.contains_key(*key) {
                return Err(SweepError::InvalidPlan(format!(
                    "target {:?} needs fixed parameter `{key}`",
                    self.target
                )));
            }
        }
        Ok(())
    }
}

/// One hopping scheme's low spectrum at the benchmark point.
#[derive(Debug, Clone, Serialize)]
pub struct SchemeResult {
    pub scheme: HoppingScheme,
    pub eigenvalues: Vec<f64>,
    pub degeneracy: Degeneracy,
}

/// Diagonalize the same lattice under the three hopping schemes.
///
/// The basis and the solver seed are shared, so differences between the
/// columns are attributable to the hopping alone.
pub fn run_fig4a(base: &LatticeSpec, opts: &SolverOpts) -> Result<Vec<SchemeResult>, SweepError> {
    let basis = lattice::basis::enumerate_basis(base)?;
    let schemes = [
        HoppingScheme::Nearest,
        HoppingScheme::NextNearest,
        HoppingScheme::default_long_range(base.lx, base.ly),
    ];
    let mut out = Vec::with_capacity(schemes.len());
    for scheme in schemes {
        let spec = LatticeSpec {
            scheme,
            ..base.clone()
        };
        let h = lattice::build_hamiltonian(&spec, &basis)?;
        let spectrum = lanczos_lowest(&h, opts)?;
        let degeneracy = detect_degeneracy(&spectrum.eigenvalues, 3)?;
        out.push(SchemeResult {
            scheme,
            eigenvalues: spectrum.eigenvalues,
            degeneracy,
        });
    }
    Ok(out)
}

/// One cell of the order-parameter map.
#[derive(Debug, Clone, Serialize)]
pub struct OrderCell {
    pub u2: f64,
    pub u3: f64,
    pub lambda: f64,
    pub gap: f64,
    pub spread: f64,
    pub error: Option<String>,
}

/// Order parameter over a `(U2, U3)` grid on the occupancy-3 basis.
///
/// Cells run concurrently and are merged in grid order; per-cell failures
/// are recorded in place rather than aborting the map.
pub fn run_fig4b(
    u2_grid: &[f64],
    u3_grid: &[f64],
    base: &LatticeSpec,
    opts: &SolverOpts,
) -> Result<Vec<OrderCell>, SweepError> {
    if u2_grid.is_empty() || u3_grid.is_empty() {
        return Err(SweepError::InvalidPlan("empty interaction grid".into()));
    }
    let solver = SolverOpts {
        k: opts.k.max(4),
        ..opts.clone()
    };
    let cells = u2_grid.len() * u3_grid.len();
    let results = par::map_range(cells, |i| {
        let u2 = u2_grid[i / u3_grid.len()];
        let u3 = u3_grid[i % u3_grid.len()];
        let spec = LatticeSpec {
            n_max: 3,
            u2,
            u3,
            ..base.clone()
        };
        let run = || -> Result<Degeneracy, LatticeError> {
            let basis = lattice::basis::enumerate_basis(&spec)?;
            let h = lattice::build_hamiltonian(&spec, &basis)?;
            let spectrum = lanczos_lowest(&h, &solver)?;
            detect_degeneracy(&spectrum.eigenvalues, 3)
        };
        match run() {
            Ok(d) => OrderCell {
                u2,
                u3,
                lambda: d.lambda,
                gap: d.gap,
                spread: d.spread,
                error: None,
            },
            Err(e) => OrderCell {
                u2,
                u3,
                lambda: f64::NAN,
                gap: f64::NAN,
                spread: f64::NAN,
                error: Some(e.to_string()),
            },
        }
    });
    Ok(results)
}

/// Default interaction grids bracketing the sufficiency boundary.
pub fn default_fig4b_grids() -> (Vec<f64>, Vec<f64>) {
    let u2: Vec<f64> = (0..=10).map(|i| i as f64).collect();
    let n = 13;
    let (lo, hi) = (1.0f64, 100.0f64);
    let u3: Vec<f64> = (0..n)
        .map(|i| lo * (hi / lo).powf(i as f64 / (n - 1) as f64))
        .collect();
    (u2, u3)
}

/// One feasibility row: physical rates for a given Josephson energy.
#[derive(Debug, Clone, Serialize)]
pub struct FeasibilityRow {
    pub ej_ghz: f64,
    /// Three-body interaction, MHz.
    pub u3_mhz: f64,
    /// Tunneling rate (J / 2 pi), MHz.
    pub j_mhz: f64,
    pub u3_over_j: f64,
    /// `U3/J` clears the sufficiency boundary.
    pub interaction_ok: bool,
    /// Tunneling outruns decoherence (`J/2pi >= 10 MHz`).
    pub tunneling_ok: bool,
}

/// Ratio of `U3` to `J` above which the collective gap is treated as
/// established.
pub const U3_OVER_J_SUFFICIENT: f64 = 60.0;

/// Minimum tunneling rate (MHz) that beats current coherence times.
pub const J_MIN_MHZ: f64 = 10.0;

/// Physical-units feasibility table for a tuned qubit.
///
/// `model` is in units of the Josephson energy; `j_mhz` is the targeted
/// tunneling rate `J / 2 pi` in MHz. A zero tunneling rate produces a row
/// flagged as failing the decoherence constraint, never an error.
pub fn feasibility_report(model: &EffectiveModel, ej_ghz: &[f64], j_mhz: f64) -> Vec<FeasibilityRow> {
    ej_ghz
        .iter()
        .map(|&ej| {
            let u3_mhz = model.u3 * ej * 1000.0;
            let u3_over_j = if j_mhz > 0.0 {
                u3_mhz / j_mhz
            } else {
                f64::INFINITY
            };
            FeasibilityRow {
                ej_ghz: ej,
                u3_mhz,
                j_mhz,
                u3_over_j,
                interaction_ok: u3_over_j >= U3_OVER_J_SUFFICIENT,
                tunneling_ok: j_mhz >= J_MIN_MHZ,
            }
        })
        .collect()
}
