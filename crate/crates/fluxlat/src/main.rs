//! Command-line entry point: one subcommand per pipeline stage.

use std::fs;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use serde_json::json;

use fluxlat::config::{parse_scheme, ConfigError, FileConfig, GridSpec};
use fluxlat::coupled;
use fluxlat::lattice::{self, LatticeSpec};
use fluxlat::output::{self, Manifest};
use fluxlat::qubit::{self, QubitParams};
use fluxlat::sweeps;

#[derive(Parser)]
#[command(name = "fluxlat", version, about = "Circuit spectra, two-qubit dynamics and magnetic-lattice exact diagonalization for three-body-interacting bosons")]
struct Cli {
    /// TOML config file; flags override config keys.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Output directory for artifacts and the run manifest.
    #[arg(long, global = true, default_value = "out")]
    out: PathBuf,
    /// Worker threads (defaults to all cores; ignored without the
    /// `parallel` feature).
    #[arg(long, global = true)]
    threads: Option<usize>,
    /// Solver seed override.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Solver residual tolerance override (relative).
    #[arg(long, global = true)]
    tol: Option<f64>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Diagonalize one qubit and print the effective model.
    Qubit {
        #[arg(long = "Ec")]
        ec: Option<f64>,
        #[arg(long = "EL")]
        el: Option<f64>,
        #[arg(long = "Ej")]
        ej: Option<f64>,
        #[arg(long)]
        phix: Option<f64>,
        #[arg(long)]
        basis: Option<usize>,
    },
    /// Interaction map over an (EL, phi_x) grid.
    QubitSweep,
    /// Two coupled qubits: excitation dynamics from a product label.
    TwoSite {
        /// Initial label as "n1,n2".
        #[arg(long)]
        initial: Option<String>,
        #[arg(long)]
        j_eff: Option<f64>,
    },
    /// Exact diagonalization of the lattice config.
    Ed {
        #[arg(long)]
        k: Option<usize>,
    },
    /// Ground-manifold Chern number over the twist torus.
    Chern {
        #[arg(long)]
        grid: Option<usize>,
        #[arg(long)]
        manifold: Option<usize>,
        /// Skip the doubled-grid agreement check (quick look only).
        #[arg(long)]
        no_verify: bool,
    },
    /// Low spectra of the three hopping schemes side by side.
    Fig4a,
    /// Order-parameter map over the interaction plane.
    Fig4b,
    /// Physical feasibility table for the tuned qubit.
    Feasibility {
        /// Josephson energies in GHz, comma separated.
        #[arg(long, value_delimiter = ',')]
        ej_ghz: Option<Vec<f64>>,
        /// Tunneling rate J / 2 pi in MHz.
        #[arg(long)]
        j_mhz: Option<f64>,
    },
}

enum AppError {
    Usage(String),
    Compute(String),
}

impl From<ConfigError> for AppError {
    fn from(e: ConfigError) -> Self {
        AppError::Usage(e.to_string())
    }
}

macro_rules! compute_err {
    ($t:ty) => {
        impl From<$t> for AppError {
            fn from(e: $t) -> Self {
                AppError::Compute(e.to_string())
            }
        }
    };
}
compute_err!(qubit::QubitError);
compute_err!(coupled::CoupledError);
compute_err!(lattice::LatticeError);
compute_err!(sweeps::SweepError);
compute_err!(std::io::Error);

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(AppError::Usage(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
        Err(AppError::Compute(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(1)
        }
    }
}

fn run(cli: Cli) -> Result<(), AppError> {
    #[cfg(feature = "parallel")]
    if let Some(threads) = cli.threads {
        rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build_global()
            .map_err(|e| AppError::Usage(format!("thread pool: {e}")))?;
    }
    #[cfg(not(feature = "parallel"))]
    if cli.threads.is_some() {
        eprintln!("note: built without the `parallel` feature; --threads ignored");
    }

    let config = match &cli.config {
        Some(path) => FileConfig::load(path)?,
        None => FileConfig::default(),
    };
    fs::create_dir_all(&cli.out)?;

    let mut solver = config.solver.clone().unwrap_or_default().resolve();
    if let Some(seed) = cli.seed {
        solver.seed = seed;
    }
    if let Some(tol) = cli.tol {
        solver.tol = tol;
    }

    match &cli.command {
        Command::Qubit {
            ec,
            el,
            ej,
            phix,
            basis,
        } => {
            let mut params = config.qubit.clone().unwrap_or_default().resolve();
            if let Some(v) = ec {
                params.ec = *v;
            }
            if let Some(v) = el {
                params.el = *v;
            }
            if let Some(v) = ej {
                params.ej = *v;
            }
            if let Some(v) = phix {
                params.phi_x = *v;
            }
            if let Some(v) = basis {
                params.basis_size = *v;
            }
            params.validate().map_err(|e| AppError::Usage(e.to_string()))?;
            let shift = qubit::check_convergence(&params, 4)?;
            let model = qubit::extract_effective_model(&qubit::diagonalize_qubit(&params, 4)?)?;
            println!("omega0 = {}", output::sig12(model.omega0));
            println!("U2     = {}", output::sig12(model.u2));
            println!("U3     = {}", output::sig12(model.u3));
            let body = serde_json::to_string_pretty(&json!({
                "params": params,
                "model": model,
                "convergence_shift": shift,
            }))
            .expect("serializes");
            output::write_atomic(&cli.out.join("qubit.json"), &body)?;
            write_manifest(&cli, "qubit", solver.seed, json!({ "qubit": params }))?;
        }

        Command::QubitSweep => {
            let section = config.qubit_sweep.clone().ok_or_else(|| {
                AppError::Usage("qubit-sweep needs a [qubit_sweep] config section".into())
            })?;
            let base = QubitParams {
                ec: section.ec.unwrap_or(0.05),
                ej: section.ej.unwrap_or(1.0),
                basis_size: section.basis_size.unwrap_or(80),
                ..QubitParams::default()
            };
            base.validate().map_err(|e| AppError::Usage(e.to_string()))?;
            let els = section.el.values()?;
            let phis = section.phi_x.values()?;
            let cells = qubit::sweep_u2_u3(&base, &els, &phis);
            output::write_atomic(&cli.out.join("qubit_sweep.csv"), &output::qubit_sweep_csv(&cells))?;
            let body = serde_json::to_string_pretty(&cells).expect("serializes");
            output::write_atomic(&cli.out.join("qubit_sweep.json"), &body)?;
            println!("wrote {} cells", cells.len());
            write_manifest(
                &cli,
                "qubit-sweep",
                solver.seed,
                json!({ "base": base, "el": els, "phi_x": phis }),
            )?;
        }

        Command::TwoSite { initial, j_eff } => {
            let mut section = config.two_site.clone().unwrap_or_default();
            if let Some(j) = j_eff {
                section.j_eff = Some(*j);
            }
            if let Some(init) = initial {
                let parts: Vec<&str> = init.split(',').collect();
                let bad = || AppError::Usage(format!("initial must be \"n1,n2\", got \"{init}\""));
                if parts.len() != 2 {
                    return Err(bad());
                }
                let n1: u8 = parts[0].trim().parse().map_err(|_| bad())?;
                let n2: u8 = parts[1].trim().parse().map_err(|_| bad())?;
                section.initial = Some([n1, n2]);
            }
            let run = section.resolve()?;
            let sys = coupled::build_coupled_system(&run.spec)?;
            let times = run.spec.times();
            let trace = sys.evolve(run.initial, &times)?;
            let triple = trace.summed(|a, b| a >= 3 || b >= 3);
            let max_triple = triple.iter().cloned().fold(0.0, f64::max);
            println!("j_eff = {}", output::sig12(sys.j_eff));
            println!("max triple occupancy = {}", output::sig12(max_triple));
            output::write_atomic(&cli.out.join("two_site.csv"), &output::trace_csv(&trace, 1e-12))?;
            output::write_atomic(&cli.out.join("two_site.json"), &output::trace_json(&trace))?;
            write_manifest(
                &cli,
                "two-site",
                solver.seed,
                json!({ "spec": run.spec, "initial": run.initial }),
            )?;
        }

        Command::Ed { k } => {
            let spec = config.lattice_spec()?;
            if let Some(k) = k {
                solver.k = *k;
            }
            let result = lattice::run_ed(&spec, &solver, 3, false)?;
            output::write_atomic(
                &cli.out.join("spectrum.csv"),
                &output::spectrum_csv(&result.eigenvalues),
            )?;
            println!("gap/J = {}", output::sig12(result.degeneracy.gap));
            println!("spread/J = {}", output::sig12(result.degeneracy.spread));
            println!("lambda = {}", output::sig12(result.degeneracy.lambda));
            write_manifest(
                &cli,
                "ed",
                solver.seed,
                json!({ "lattice": spec, "solver": solver }),
            )?;
        }

        Command::Chern {
            grid,
            manifold,
            no_verify,
        } => {
            let spec = config.lattice_spec()?;
            let twist = config.twist.clone().unwrap_or_default();
            let grid = grid.or(twist.grid).unwrap_or(8);
            let manifold = manifold.or(twist.manifold).unwrap_or(3);
            let mut opts = solver.clone();
            opts.k = manifold + 1;
            let result = lattice::chern_number(&spec, manifold, grid, &opts)?;
            // A reported invariant must survive grid doubling.
            let verified_grid = if *no_verify {
                None
            } else {
                let doubled = lattice::chern_number(&spec, manifold, 2 * grid, &opts)?;
                if doubled.total != result.total {
                    return Err(AppError::Compute(format!(
                        "Chern number changed under grid doubling: {} on {grid}x{grid} vs {} on {}x{}",
                        result.total,
                        doubled.total,
                        2 * grid,
                        2 * grid
                    )));
                }
                Some(2 * grid)
            };
            println!("chern total = {}", result.total);
            if let Some(per) = &result.per_state {
                println!("per state   = {per:?}");
            }
            match verified_grid {
                Some(g) => println!("verified against {g}x{g} grid"),
                None => println!("doubled-grid verification skipped"),
            }
            output::write_atomic(&cli.out.join("chern.json"), &output::chern_json(&result))?;
            write_manifest(
                &cli,
                "chern",
                opts.seed,
                json!({
                    "lattice": spec,
                    "grid": grid,
                    "manifold": manifold,
                    "verified_grid": verified_grid,
                    "solver": opts
                }),
            )?;
        }

        Command::Fig4a => {
            let base = match config.lattice {
                Some(_) => config.lattice_spec()?,
                None => LatticeSpec::benchmark_4x4(),
            };
            let results = sweeps::run_fig4a(&base, &solver)?;
            for r in &results {
                println!(
                    "{:?}: gap/J = {}, spread/J = {}, lambda = {}",
                    r.scheme,
                    output::sig12(r.degeneracy.gap),
                    output::sig12(r.degeneracy.spread),
                    output::sig12(r.degeneracy.lambda)
                );
            }
            output::write_atomic(&cli.out.join("fig4a.csv"), &output::fig4a_csv(&results))?;
            let body = serde_json::to_string_pretty(&results).expect("serializes");
            output::write_atomic(&cli.out.join("fig4a.json"), &body)?;
            write_manifest(
                &cli,
                "fig4a",
                solver.seed,
                json!({ "lattice": base, "solver": solver }),
            )?;
        }

        Command::Fig4b => {
            let section = config.fig4b.clone();
            let (default_u2, default_u3) = sweeps::default_fig4b_grids();
            let (u2, u3, scheme_kw) = match &section {
                Some(s) => (
                    s.u2.as_ref().map(GridSpec::values).transpose()?.unwrap_or(default_u2),
                    s.u3.as_ref().map(GridSpec::values).transpose()?.unwrap_or(default_u3),
                    s.scheme.clone(),
                ),
                None => (default_u2, default_u3, None),
            };
            let mut base = match config.lattice {
                Some(_) => config.lattice_spec()?,
                None => LatticeSpec::benchmark_4x4(),
            };
            base.scheme = parse_scheme(
                scheme_kw.as_deref().or(Some("nnn")),
                None,
                base.lx,
                base.ly,
            )?;
            let mut opts = solver.clone();
            opts.k = opts.k.clamp(4, 6);
            let cells = sweeps::run_fig4b(&u2, &u3, &base, &opts)?;
            let failed = cells.iter().filter(|c| c.error.is_some()).count();
            println!("wrote {} cells ({failed} failed)", cells.len());
            output::write_atomic(
                &cli.out.join("order_parameter.csv"),
                &output::order_parameter_csv(&cells),
            )?;
            write_manifest(
                &cli,
                "fig4b",
                opts.seed,
                json!({ "lattice": base, "u2": u2, "u3": u3, "solver": opts }),
            )?;
        }

        Command::Feasibility { ej_ghz, j_mhz } => {
            let section = config.feasibility.clone();
            let ej_list = match (ej_ghz, &section) {
                (Some(v), _) => v.clone(),
                (None, Some(s)) => s
                    .ej_ghz
                    .as_ref()
                    .map(GridSpec::values)
                    .transpose()?
                    .unwrap_or_else(|| vec![10.0, 20.0, 30.0, 40.0]),
                (None, None) => vec![10.0, 20.0, 30.0, 40.0],
            };
            let j = j_mhz
                .or_else(|| section.as_ref().and_then(|s| s.j_mhz))
                .unwrap_or(10.0);
            let base = QubitParams {
                ec: section.as_ref().and_then(|s| s.ec).unwrap_or(0.05),
                el: section.as_ref().and_then(|s| s.el).unwrap_or(1.4),
                basis_size: section.as_ref().and_then(|s| s.basis_size).unwrap_or(80),
                ..QubitParams::default()
            };
            let root = qubit::find_zero_u2(&base, 2.0, 3.2)?;
            let rows = sweeps::feasibility_report(&root.model, &ej_list, j);
            println!(
                "tuned flux point: phi_x = {:.6}, U3/Ej = {}",
                root.phi_x,
                output::sig12(root.model.u3)
            );
            println!("EJ_GHz  U3_MHz    J_MHz   U3/J    interaction tunneling");
            for r in &rows {
                println!(
                    "{:6.1}  {:8.2}  {:6.2}  {:6.1}  {:11} {}",
                    r.ej_ghz, r.u3_mhz, r.j_mhz, r.u3_over_j, r.interaction_ok, r.tunneling_ok
                );
            }
            output::write_atomic(&cli.out.join("feasibility.csv"), &output::feasibility_csv(&rows))?;
            write_manifest(
                &cli,
                "feasibility",
                solver.seed,
                json!({ "qubit": base, "phi_x": root.phi_x, "ej_ghz": ej_list, "j_mhz": j }),
            )?;
        }
    }
    Ok(())
}

fn write_manifest(
    cli: &Cli,
    subcommand: &str,
    seed: u64,
    config: serde_json::Value,
) -> Result<(), AppError> {
    Manifest::new(subcommand, seed, cli.threads, config).write(&cli.out)?;
    Ok(())
}
