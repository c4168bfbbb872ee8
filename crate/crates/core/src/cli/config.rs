//! Experiment configuration (TOML). Every numeric default lives here and is
//! echoed into report headers.

use std::path::{Path, PathBuf};

use serde::Deserialize;

use crate::dynamics::DEFAULT_N_GRID;

pub const DEFAULT_SEED: u64 = 42;

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    #[serde(default = "default_seed")]
    pub seed: u64,
    #[serde(default = "default_grid")]
    pub n_grid: Vec<usize>,
    /// Output directory; `--out` overrides.
    #[serde(default)]
    pub out: Option<PathBuf>,
    #[serde(default)]
    pub space: SpaceConfig,
    #[serde(default)]
    pub example: ExampleConfig,
    #[serde(default)]
    pub tolerances: Tolerances,
    #[serde(default)]
    pub axioms: AxiomConfig,
}

fn default_seed() -> u64 {
    DEFAULT_SEED
}

fn default_grid() -> Vec<usize> {
    DEFAULT_N_GRID.to_vec()
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SpaceConfig {
    /// Number of atoms; ignored when `weights` is given.
    #[serde(default = "default_atoms")]
    pub atoms: usize,
    /// Atom weights (ids `w0, w1, …`).
    #[serde(default)]
    pub weights: Option<Vec<f64>>,
}

fn default_atoms() -> usize {
    1
}

impl Default for SpaceConfig {
    fn default() -> Self {
        SpaceConfig {
            atoms: default_atoms(),
            weights: None,
        }
    }
}

impl SpaceConfig {
    pub fn atom_count(&self) -> usize {
        self.weights.as_ref().map_or(self.atoms, Vec::len)
    }
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum ExampleConfig {
    /// Two-qubit channel family; one `β` per atom, or a single value for all.
    Example1 {
        #[serde(default = "default_beta")]
        beta: Vec<f64>,
    },
    /// Rotations of the circle with Lebesgue state.
    Example2 {
        #[serde(default = "default_alpha")]
        alpha: Vec<f64>,
        #[serde(default = "default_budget")]
        budget: usize,
        /// Modes whose Cesàro coefficients are reported.
        #[serde(default = "default_modes")]
        modes: Vec<i64>,
    },
    /// Bundles read from JSON files (paths relative to the config file).
    Custom {
        state: PathBuf,
        markov: PathBuf,
        /// Section to average; a seeded random self-adjoint section if absent.
        #[serde(default)]
        section: Option<PathBuf>,
    },
}

fn default_beta() -> Vec<f64> {
    vec![1.0]
}

fn default_alpha() -> Vec<f64> {
    vec![(5f64.sqrt() - 1.0) / 2.0]
}

fn default_budget() -> usize {
    8
}

fn default_modes() -> Vec<i64> {
    (1..=8).collect()
}

impl Default for ExampleConfig {
    fn default() -> Self {
        ExampleConfig::Example1 { beta: default_beta() }
    }
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Tolerances {
    /// Invariance residual of the state under the dynamics.
    pub invariance: f64,
    /// Singular-value threshold of the fixed-point space.
    pub fixed_point: f64,
    /// Agreement with closed forms.
    pub closed_form: f64,
    /// Tail-window tolerance for deciding that deviations decay to zero.
    pub ue_tail: f64,
    /// Factor allowed above the spectral-gap prediction.
    pub rate_factor: f64,
    /// Residual bound for the algebraic property suites.
    pub axiom: f64,
    /// Slack on `‖T_ω‖ ≤ 1`.
    pub norm: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Tolerances {
            invariance: 1e-10,
            fixed_point: 1e-10,
            closed_form: 1e-12,
            ue_tail: 2e-2,
            rate_factor: 10.0,
            axiom: 1e-10,
            norm: 1e-9,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct AxiomConfig {
    /// Random matrix sections for the C*-identity.
    pub matrix_sections: usize,
    /// Largest matrix dimension drawn.
    pub max_dim: usize,
    /// Random trigonometric polynomials for the C*-identity.
    pub trigpoly_elements: usize,
    /// Largest trigonometric degree drawn.
    pub max_degree: usize,
    /// Random `(φ, a, b)` triples for Cauchy–Schwarz.
    pub cauchy_schwarz: usize,
    /// Random `x` for the state norm chain.
    pub state_chain: usize,
    /// Random systems for d-decomposition, adjoint and norm checks.
    pub systems: usize,
    /// Samples per atom in the Markov norm estimate.
    pub norm_samples: usize,
}

impl Default for AxiomConfig {
    fn default() -> Self {
        AxiomConfig {
            matrix_sections: 200,
            max_dim: 8,
            trigpoly_elements: 200,
            max_degree: 8,
            cauchy_schwarz: 200,
            state_chain: 100,
            systems: 20,
            norm_samples: 200,
        }
    }
}

/// Why a configuration was rejected.
#[derive(Debug, Clone, PartialEq)]
pub struct ConfigError(pub String);

impl std::fmt::Display for ConfigError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.0)
    }
}

impl ExperimentConfig {
    pub fn parse(text: &str) -> Result<Self, ConfigError> {
        let cfg: ExperimentConfig = toml::from_str(text).map_err(|e| ConfigError(format!("invalid config: {e}")))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| ConfigError(format!("cannot read config {}: {e}", path.display())))?;
        Self::parse(&text)
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        let bad = |m: String| Err(ConfigError(format!("invalid config: {m}")));
        if self.n_grid.is_empty() || self.n_grid[0] == 0 || self.n_grid.windows(2).any(|w| w[0] >= w[1]) {
            return bad(format!("n_grid must be nonempty, start at 1 or more and increase strictly, got {:?}", self.n_grid));
        }
        if self.space.atom_count() == 0 {
            return bad("space needs at least one atom".into());
        }
        let t = &self.tolerances;
        for (name, v) in [
            ("invariance", t.invariance),
            ("fixed_point", t.fixed_point),
            ("closed_form", t.closed_form),
            ("ue_tail", t.ue_tail),
            ("rate_factor", t.rate_factor),
            ("axiom", t.axiom),
            ("norm", t.norm),
        ] {
            if !(v > 0.0 && v.is_finite()) {
                return bad(format!("tolerances.{name} must be positive, got {v}"));
            }
        }
        let a = &self.axioms;
        if a.max_dim == 0 || a.max_degree == 0 {
            return bad("axioms.max_dim and axioms.max_degree must be at least 1".into());
        }
        let n = self.space.atom_count();
        let per_atom = |name: &str, len: usize| {
            if len == 1 || len == n {
                Ok(())
            } else {
                bad(format!("example.{name} needs 1 or {n} values, got {len}"))
            }
        };
        match &self.example {
            ExampleConfig::Example1 { beta } => per_atom("beta", beta.len())?,
            ExampleConfig::Example2 { alpha, budget, modes } => {
                per_atom("alpha", alpha.len())?;
                if *budget == 0 {
                    return bad("example.budget must be at least 1".into());
                }
                if let Some(k) = modes.iter().find(|k| k.unsigned_abs() as usize > *budget) {
                    return bad(format!("example.modes entry {k} exceeds the degree budget {budget}"));
                }
            }
            ExampleConfig::Custom { .. } => {}
        }
        Ok(())
    }

    /// Per-atom parameter list with a single value broadcast.
    pub fn broadcast(values: &[f64], atoms: usize) -> Vec<f64> {
        if values.len() == 1 {
            vec![values[0]; atoms]
        } else {
            values.to_vec()
        }
    }

    /// `key = value` lines describing every effective setting.
    pub fn describe(&self) -> Vec<(String, String)> {
        let t = &self.tolerances;
        let a = &self.axioms;
        let mut out = vec![
            ("seed".to_string(), self.seed.to_string()),
            ("n_grid".into(), format!("{:?}", self.n_grid)),
            ("atoms".into(), self.space.atom_count().to_string()),
            ("weights".into(), format!("{:?}", self.space.weights)),
            ("example".into(), format!("{:?}", self.example)),
        ];
        for (k, v) in [
            ("tol.invariance", t.invariance),
            ("tol.fixed_point", t.fixed_point),
            ("tol.closed_form", t.closed_form),
            ("tol.ue_tail", t.ue_tail),
            ("tol.rate_factor", t.rate_factor),
            ("tol.axiom", t.axiom),
            ("tol.norm", t.norm),
        ] {
            out.push((k.into(), format!("{v:e}")));
        }
        for (k, v) in [
            ("axioms.matrix_sections", a.matrix_sections),
            ("axioms.max_dim", a.max_dim),
            ("axioms.trigpoly_elements", a.trigpoly_elements),
            ("axioms.max_degree", a.max_degree),
            ("axioms.cauchy_schwarz", a.cauchy_schwarz),
            ("axioms.state_chain", a.state_chain),
            ("axioms.systems", a.systems),
            ("axioms.norm_samples", a.norm_samples),
        ] {
            out.push((k.into(), v.to_string()));
        }
        out
    }
}
