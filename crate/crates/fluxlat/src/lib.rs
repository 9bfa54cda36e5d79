//! Numerical toolkit for three-body-interacting lattice bosons built from
//! flux-tunable circuit qubits.
//!
//! The pipeline has three stages, each usable on its own:
//!
//! * [`qubit`] — diagonalize a single flux-biased circuit qubit in a
//!   truncated oscillator basis and extract the effective bosonic model
//!   (single-excitation energy plus two- and three-body interactions).
//! * [`coupled`] — evolve two inductively coupled qubits microscopically and
//!   compare the excitation dynamics against a capped two-mode bosonic
//!   reference (hopping with the √n enhancement factors).
//! * [`lattice`] — enumerate capped occupation bases, build sparse magnetic
//!   hopping Hamiltonians on a torus (nearest-neighbor, diagonal, or
//!   Gaussian long-range schemes), diagonalize with a deterministic Lanczos
//!   solver, and integrate the ground-manifold Berry curvature over twisted
//!   boundary conditions to obtain Chern numbers.
//!
//! [`sweeps`] orchestrates the parameter scans (interaction maps, hopping
//! scheme comparisons, order-parameter maps, feasibility tables) and
//! [`config`]/[`output`] provide the TOML config and CSV/JSON interfaces used
//! by the `fluxlat` binary.
//!
//! All heavy loops are data-parallel via rayon when the default `parallel`
//! feature is enabled and fall back to sequential iteration without it.
//! Results are bit-identical across thread counts: every reduction runs in a
//! fixed order.

pub mod config;
pub mod coupled;
pub mod lattice;
pub mod output;
mod par;
pub mod qubit;
pub mod sweeps;
