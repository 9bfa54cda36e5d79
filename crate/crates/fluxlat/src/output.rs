//! Tabular and JSON artifacts with atomic writes and a run manifest.
//!
//! Every file is written to a temporary sibling and renamed into place, so
//! an interrupted run never leaves a partial artifact. Floating values in
//! CSV output carry 12 significant digits and are formatted identically on
//! any thread count, which is what makes rerun output byte-comparable.

use std::fs;
use std::io;
use std::path::{Path, PathBuf};

use serde::Serialize;

use crate::coupled::PopulationTrace;
use crate::lattice::ChernResult;
use crate::qubit::SweepCell;
use crate::sweeps::{FeasibilityRow, OrderCell, SchemeResult};

/// Format with 12 significant digits.
pub fn sig12(x: f64) -> String {
    if x.is_nan() {
        return "nan".to_string();
    }
    if x.is_infinite() {
        return if x > 0.0 { "inf" } else { "-inf" }.to_string();
    }
    format!("{x:.11e}")
}

/// Write `contents` then atomically rename onto `path`.
pub fn write_atomic(path: &Path, contents: &str) -> io::Result<()> {
    let tmp = path.with_extension("tmp");
    fs::write(&tmp, contents)?;
    fs::rename(&tmp, path)
}

/// Run provenance: everything needed to reproduce the outputs in a
/// directory, plus nothing that varies between identical reruns.
#[derive(Debug, Serialize)]
pub struct Manifest {
    pub tool: &'static str,
    pub version: &'static str,
    pub subcommand: String,
    pub seed: u64,
    pub threads: Option<usize>,
    pub config: serde_json::Value,
}

impl Manifest {
    pub fn new(subcommand: &str, seed: u64, threads: Option<usize>, config: serde_json::Value) -> Self {
        Manifest {
            tool: "fluxlat",
            version: env!("CARGO_PKG_VERSION"),
            subcommand: subcommand.to_string(),
            seed,
            threads,
            config,
        }
    }

    pub fn write(&self, dir: &Path) -> io::Result<PathBuf> {
        let path = dir.join("manifest.json");
        let body = serde_json::to_string_pretty(self).expect("manifest serializes");
        write_atomic(&path, &body)?;
        Ok(path)
    }
}

/// `EL,phi_x,omega0,U2,U3` rows; failed cells keep their coordinates with
/// empty value fields so the grid stays rectangular.
pub fn qubit_sweep_csv(cells: &[SweepCell]) -> String {
    let mut out = String::from("EL,phi_x,omega0,U2,U3\n");
    for cell in cells {
        match &cell.model {
            Some(m) => out.push_str(&format!(
                "{},{},{},{},{}\n",
                sig12(cell.el),
                sig12(cell.phi_x),
                sig12(m.omega0),
                sig12(m.u2),
                sig12(m.u3)
            )),
            None => out.push_str(&format!("{},{},,,\n", sig12(cell.el), sig12(cell.phi_x))),
        }
    }
    out
}

/// Population columns for every label that ever exceeds `threshold`.
pub fn trace_csv(trace: &PopulationTrace, threshold: f64) -> String {
    let visible: Vec<usize> = (0..trace.labels.len())
        .filter(|&l| trace.populations.iter().any(|row| row[l] > threshold))
        .collect();
    let mut out = String::from("t");
    for &l in &visible {
        let (a, b) = trace.labels[l];
        out.push_str(&format!(",P{a}{b}"));
    }
    out.push('\n');
    for (i, t) in trace.times.iter().enumerate() {
        out.push_str(&sig12(*t));
        for &l in &visible {
            out.push(',');
            out.push_str(&sig12(trace.populations[i][l]));
        }
        out.push('\n');
    }
    out
}

/// Full label map as JSON.
pub fn trace_json(trace: &PopulationTrace) -> String {
    #[derive(Serialize)]
    struct Out<'a> {
        times: &'a [f64],
        labels: Vec<String>,
        populations: &'a [Vec<f64>],
    }
    serde_json::to_string_pretty(&Out {
        times: &trace.times,
        labels: trace
            .labels
            .iter()
            .map(|(a, b)| format!("{a},{b}"))
            .collect(),
        populations: &trace.populations,
    })
    .expect("trace serializes")
}

/// `n,E_over_J` with 1-based level index.
pub fn spectrum_csv(eigenvalues: &[f64]) -> String {
    let mut out = String::from("n,E_over_J\n");
    for (i, e) in eigenvalues.iter().enumerate() {
        out.push_str(&format!("{},{}\n", i + 1, sig12(*e)));
    }
    out
}

/// Side-by-side spectra of the three hopping schemes.
pub fn fig4a_csv(results: &[SchemeResult]) -> String {
    let mut out = String::from("n,E_nn,E_nnn,E_longrange\n");
    let rows = results.iter().map(|r| r.eigenvalues.len()).min().unwrap_or(0);
    for i in 0..rows {
        out.push_str(&format!("{}", i + 1));
        for r in results {
            out.push(',');
            out.push_str(&sig12(r.eigenvalues[i]));
        }
        out.push('\n');
    }
    out
}

/// `U2,U3,lambda,gap,spread` rows.
pub fn order_parameter_csv(cells: &[OrderCell]) -> String {
    let mut out = String::from("U2,U3,lambda,gap,spread\n");
    for c in cells {
        out.push_str(&format!(
            "{},{},{},{},{}\n",
            sig12(c.u2),
            sig12(c.u3),
            sig12(c.lambda),
            sig12(c.gap),
            sig12(c.spread)
        ));
    }
    out
}

pub fn chern_json(result: &ChernResult) -> String {
    serde_json::to_string_pretty(result).expect("chern result serializes")
}

pub fn feasibility_csv(rows: &[FeasibilityRow]) -> String {
    let mut out = String::from("EJ_GHz,U3_MHz,J_MHz,U3_over_J,interaction_ok,tunneling_ok\n");
    for r in rows {
        out.push_str(&format!(
            "{},{},{},{},{},{}\n",
            sig12(r.ej_ghz),
            sig12(r.u3_mhz),
            sig12(r.j_mhz),
            sig12(r.u3_over_j),
            r.interaction_ok,
            r.tunneling_ok
        ));
    }
    out
}
