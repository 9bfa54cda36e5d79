//! TOML run configuration.
//!
//! Sections mirror the domain types; unknown keys are rejected with the
//! offending key named (serde's `deny_unknown_fields`), and every section
//! validates before any computation starts. Command-line flags override
//! config keys.

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::coupled::CoupledSpec;
use crate::lattice::{HoppingScheme, LatticeSpec, SolverOpts};
use crate::qubit::QubitParams;

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("cannot read config file {path}: {source}")]
    Unreadable {
        path: String,
        source: std::io::Error,
    },
    #[error("config parse error: {0}")]
    Parse(String),
    #[error("config invalid: {0}")]
    Invalid(String),
}

/// A linear or log-spaced grid, or an explicit list of values.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(untagged)]
pub enum GridSpec {
    List(Vec<f64>),
    Range {
        start: f64,
        stop: f64,
        count: usize,
        #[serde(default)]
        log: bool,
    },
}

impl GridSpec {
    pub fn values(&self) -> Result<Vec<f64>, ConfigError> {
        match self {
            GridSpec::List(v) => {
                if v.is_empty() {
                    return Err(ConfigError::Invalid("grid list is empty".into()));
                }
                Ok(v.clone())
            }
            GridSpec::Range {
                start,
                stop,
                count,
                log,
            } => {
                if *count == 0 {
                    return Err(ConfigError::Invalid("grid count must be > 0".into()));
                }
                if *count == 1 {
                    return Ok(vec![*start]);
                }
                if *log && (*start <= 0.0 || *stop <= 0.0) {
                    return Err(ConfigError::Invalid(
                        "log grid endpoints must be positive".into(),
                    ));
                }
                let n = *count;
                Ok((0..n)
                    .map(|i| {
                        let f = i as f64 / (n - 1) as f64;
                        if *log {
                            start * (stop / start).powf(f)
                        } else {
                            start + (stop - start) * f
                        }
                    })
                    .collect())
            }
        }
    }
}

/// Three-body interaction: a value in units of J, or the hard-core limit.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(untagged)]
pub enum U3Spec {
    Value(f64),
    Keyword(String),
}

impl U3Spec {
    pub fn is_hardcore(&self) -> Result<bool, ConfigError> {
        match self {
            U3Spec::Value(_) => Ok(false),
            U3Spec::Keyword(s) if s == "hardcore" => Ok(true),
            U3Spec::Keyword(s) => Err(ConfigError::Invalid(format!(
                "U3 must be a number or \"hardcore\", got \"{s}\""
            ))),
        }
    }
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct QubitSection {
    pub ec: Option<f64>,
    pub el: Option<f64>,
    pub ej: Option<f64>,
    pub phi_x: Option<f64>,
    pub basis_size: Option<usize>,
}

impl QubitSection {
    pub fn resolve(&self) -> QubitParams {
        let d = QubitParams::default();
        QubitParams {
            ec: self.ec.unwrap_or(d.ec),
            el: self.el.unwrap_or(d.el),
            ej: self.ej.unwrap_or(d.ej),
            phi_x: self.phi_x.unwrap_or(d.phi_x),
            basis_size: self.basis_size.unwrap_or(d.basis_size),
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct QubitSweepSection {
    pub ec: Option<f64>,
    pub ej: Option<f64>,
    pub basis_size: Option<usize>,
    pub el: GridSpec,
    pub phi_x: GridSpec,
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TwoSiteSection {
    /// Single-excitation hopping rate to tune the coupling for.
    pub j_eff: Option<f64>,
    pub levels_per_qubit: Option<usize>,
    /// Window in units of `1 / j_eff`.
    pub t_max_over_j: Option<f64>,
    pub n_steps: Option<usize>,
    pub initial: Option<[u8; 2]>,
    pub ec: Option<f64>,
    pub el: Option<f64>,
    pub basis_size: Option<usize>,
}

/// Resolved two-site run: the coupled spec plus the initial label.
pub struct TwoSiteRun {
    pub spec: CoupledSpec,
    pub initial: (u8, u8),
    pub j_eff: f64,
}

impl TwoSiteSection {
    pub fn resolve(&self) -> Result<TwoSiteRun, ConfigError> {
        let base = QubitParams {
            ec: self.ec.unwrap_or(0.05),
            el: self.el.unwrap_or(1.4),
            basis_size: self.basis_size.unwrap_or(80),
            ..QubitParams::default()
        };
        let j_eff = self.j_eff.unwrap_or(5e-7);
        if !j_eff.is_finite() || j_eff <= 0.0 {
            return Err(ConfigError::Invalid("j_eff must be > 0".into()));
        }
        let mut spec = crate::coupled::matched_pair(&base, (2.0, 3.2), j_eff)
            .map_err(|e| ConfigError::Invalid(e.to_string()))?;
        if let Some(l) = self.levels_per_qubit {
            spec.levels_per_qubit = l;
        }
        if let Some(t) = self.t_max_over_j {
            spec.t_max = t / j_eff;
        }
        if let Some(n) = self.n_steps {
            spec.n_steps = n;
        }
        let initial = self.initial.unwrap_or([1, 0]);
        Ok(TwoSiteRun {
            spec,
            initial: (initial[0], initial[1]),
            j_eff,
        })
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LatticeSection {
    pub lx: usize,
    pub ly: usize,
    pub alpha: f64,
    pub n_particles: usize,
    pub n_max: Option<u8>,
    /// One of `"nn"`, `"nnn"`, `"longrange"`.
    pub scheme: Option<String>,
    /// Chebyshev cutoff for the long-range scheme; defaults to
    /// `min(lx, ly) / 2`.
    pub radius: Option<usize>,
    pub theta_x: Option<f64>,
    pub theta_y: Option<f64>,
}

/// Map a scheme keyword plus optional radius onto a [`HoppingScheme`].
pub fn parse_scheme(
    keyword: Option<&str>,
    radius: Option<usize>,
    lx: usize,
    ly: usize,
) -> Result<HoppingScheme, ConfigError> {
    match keyword {
        None | Some("nn") | Some("nearest") => Ok(HoppingScheme::Nearest),
        Some("nnn") | Some("nextnearest") => Ok(HoppingScheme::NextNearest),
        Some("longrange") | Some("long-range") => Ok(HoppingScheme::LongRange {
            radius: radius.unwrap_or(lx.min(ly) / 2),
        }),
        Some(other) => Err(ConfigError::Invalid(format!(
            "unknown hopping scheme \"{other}\" (expected nn, nnn or longrange)"
        ))),
    }
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InteractionSection {
    pub u2: Option<f64>,
    pub u3: Option<U3Spec>,
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SolverSection {
    pub k: Option<usize>,
    pub tol: Option<f64>,
    pub seed: Option<u64>,
    pub max_iter: Option<usize>,
}

impl SolverSection {
    pub fn resolve(&self) -> SolverOpts {
        let d = SolverOpts::default();
        SolverOpts {
            k: self.k.unwrap_or(d.k),
            tol: self.tol.unwrap_or(d.tol),
            seed: self.seed.unwrap_or(d.seed),
            max_iter: self.max_iter.or(d.max_iter),
        }
    }
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TwistSection {
    /// Twist grid per direction for the curvature integration.
    pub grid: Option<usize>,
    pub manifold: Option<usize>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Fig4bSection {
    pub u2: Option<GridSpec>,
    pub u3: Option<GridSpec>,
    /// One of `"nn"`, `"nnn"`, `"longrange"`; defaults to `"nnn"`.
    pub scheme: Option<String>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FeasibilitySection {
    pub ej_ghz: Option<GridSpec>,
    pub j_mhz: Option<f64>,
    pub ec: Option<f64>,
    pub el: Option<f64>,
    pub basis_size: Option<usize>,
}

/// Whole config file; every section optional.
#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FileConfig {
    pub qubit: Option<QubitSection>,
    pub qubit_sweep: Option<QubitSweepSection>,
    pub two_site: Option<TwoSiteSection>,
    pub lattice: Option<LatticeSection>,
    pub interaction: Option<InteractionSection>,
    pub solver: Option<SolverSection>,
    pub twist: Option<TwistSection>,
    pub fig4b: Option<Fig4bSection>,
    pub feasibility: Option<FeasibilitySection>,
}

impl FileConfig {
    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let text = fs::read_to_string(path).map_err(|source| ConfigError::Unreadable {
            path: path.display().to_string(),
            source,
        })?;
        toml::from_str(&text).map_err(|e| ConfigError::Parse(e.to_string()))
    }

    /// Assemble the lattice spec from the `[lattice]` and `[interaction]`
    /// sections. `"hardcore"` pins the occupancy cap at two; a finite `u3`
    /// defaults the cap to three so the penalty has something to act on.
    pub fn lattice_spec(&self) -> Result<LatticeSpec, ConfigError> {
        let lat = self
            .lattice
            .as_ref()
            .ok_or_else(|| ConfigError::Invalid("missing [lattice] section".into()))?;
        let inter = self.interaction.clone().unwrap_or_default();
        let u3_value = match &inter.u3 {
            Some(U3Spec::Value(v)) => *v,
            _ => 0.0,
        };
        let n_max = match (&inter.u3, lat.n_max) {
            // Explicit hard core is the occupancy-two constraint.
            (Some(u3), Some(2)) | (Some(u3), None) if u3.is_hardcore()? => 2,
            (Some(u3), Some(n)) if u3.is_hardcore()? => {
                return Err(ConfigError::Invalid(format!(
                    "u3 = \"hardcore\" means n_max = 2, but n_max = {n} was given"
                )))
            }
            // A finite penalty needs room to act.
            (Some(_), None) => 3,
            (_, Some(n)) => n,
            (None, None) => 2,
        };
        let keyword = match (&lat.scheme, lat.radius) {
            (None, Some(_)) => Some("longrange"),
            (s, _) => s.as_deref(),
        };
        let scheme = parse_scheme(keyword, lat.radius, lat.lx, lat.ly)?;
        let spec = LatticeSpec {
            lx: lat.lx,
            ly: lat.ly,
            alpha: lat.alpha,
            n_particles: lat.n_particles,
            n_max,
            u2: inter.u2.unwrap_or(0.0),
            u3: u3_value,
            scheme,
            theta_x: lat.theta_x.unwrap_or(0.0),
            theta_y: lat.theta_y.unwrap_or(0.0),
        };
        spec.validate()
            .map_err(|e| ConfigError::Invalid(e.to_string()))?;
        Ok(spec)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn unknown_keys_are_rejected_by_name() {
        let err = toml::from_str::<FileConfig>("[lattice]\nlx = 4\nly = 4\nalpha = 0.25\nn_particles = 4\nwhatever = 3\n")
            .unwrap_err()
            .to_string();
        assert!(err.contains("whatever"), "error was: {err}");
    }

    #[test]
    fn hardcore_interaction_pins_the_cap() {
        let cfg: FileConfig = toml::from_str(
            "[lattice]\nlx = 4\nly = 4\nalpha = 0.25\nn_particles = 4\n\n[interaction]\nu2 = 0.0\nu3 = \"hardcore\"\n",
        )
        .unwrap();
        let spec = cfg.lattice_spec().unwrap();
        assert_eq!(spec.n_max, 2);
        assert_eq!(spec.u3, 0.0);

        let cfg: FileConfig = toml::from_str(
            "[lattice]\nlx = 4\nly = 4\nalpha = 0.25\nn_particles = 4\nn_max = 3\n\n[interaction]\nu3 = \"hardcore\"\n",
        )
        .unwrap();
        assert!(cfg.lattice_spec().is_err());
    }

    #[test]
    fn finite_u3_defaults_to_cap_three() {
        let cfg: FileConfig = toml::from_str(
            "[lattice]\nlx = 4\nly = 4\nalpha = 0.25\nn_particles = 4\n\n[interaction]\nu2 = 1.0\nu3 = 60.0\n",
        )
        .unwrap();
        let spec = cfg.lattice_spec().unwrap();
        assert_eq!(spec.n_max, 3);
        assert_eq!(spec.u3, 60.0);
        assert_eq!(spec.u2, 1.0);
    }

    #[test]
    fn grid_spec_forms() {
        let lin = GridSpec::Range {
            start: 0.0,
            stop: 1.0,
            count: 5,
            log: false,
        };
        assert_eq!(lin.values().unwrap(), vec![0.0, 0.25, 0.5, 0.75, 1.0]);
        let log = GridSpec::Range {
            start: 1.0,
            stop: 100.0,
            count: 3,
            log: true,
        };
        let v = log.values().unwrap();
        assert!((v[1] - 10.0).abs() < 1e-12);
        assert!(GridSpec::List(vec![]).values().is_err());
    }

    #[test]
    fn scheme_keywords_parse() {
        let cfg: FileConfig = toml::from_str(
            "[lattice]\nlx = 4\nly = 4\nalpha = 0.25\nn_particles = 4\nscheme = \"nnn\"\n",
        )
        .unwrap();
        assert_eq!(cfg.lattice_spec().unwrap().scheme, HoppingScheme::NextNearest);

        let cfg: FileConfig = toml::from_str(
            "[lattice]\nlx = 4\nly = 4\nalpha = 0.25\nn_particles = 4\nradius = 2\n",
        )
        .unwrap();
        assert_eq!(
            cfg.lattice_spec().unwrap().scheme,
            HoppingScheme::LongRange { radius: 2 }
        );
    }
}
