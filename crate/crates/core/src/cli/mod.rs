//! Config-driven experiment commands behind the `mbundle` binary.
//!
//! Exit codes: `0` every check passed, `1` a property or construction check
//! failed, `2` the invocation or an input file was unusable.

pub mod axioms;
pub mod config;
pub mod localize;
pub mod run;

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use crate::bundle::Section;
use crate::dynamics::{build_example1, build_example2, DynamicalSystemBundle};
use crate::error::Error;
use crate::fiber::FiberKind;
use crate::measure::{AtomicMeasureSpace, L0Element, SpaceRef};
use crate::random;
use crate::serial;

pub use config::{ConfigError, ExampleConfig, ExperimentConfig};

pub const EXIT_PASS: i32 = 0;
pub const EXIT_FAIL: i32 = 1;
pub const EXIT_USAGE: i32 = 2;

/// Flags shared by every subcommand.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct CommonOptions {
    pub config: Option<PathBuf>,
    pub seed: Option<u64>,
    pub out: Option<PathBuf>,
    pub quiet: bool,
}

/// Failure of a command, carrying its exit code.
#[derive(Debug, Clone, PartialEq)]
pub enum CliError {
    /// Bad flags, unreadable or malformed config/input.
    Usage(String),
    /// A library check failed while building or analysing a system.
    Property(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => EXIT_USAGE,
            CliError::Property(_) => EXIT_FAIL,
        }
    }

    pub fn message(&self) -> &str {
        match self {
            CliError::Usage(m) | CliError::Property(m) => m,
        }
    }
}

impl From<ConfigError> for CliError {
    fn from(e: ConfigError) -> Self {
        CliError::Usage(e.0)
    }
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        match e {
            Error::Format(m) => CliError::Usage(m),
            other => CliError::Property(other.to_string()),
        }
    }
}

pub type CliResult<T> = std::result::Result<T, CliError>;

/// Loaded configuration plus the directory relative inputs resolve against.
#[derive(Debug, Clone)]
pub struct Session {
    pub config: ExperimentConfig,
    pub base_dir: PathBuf,
    pub out_dir: PathBuf,
    pub quiet: bool,
}

impl Session {
    pub fn open(opts: &CommonOptions) -> CliResult<Self> {
        let (mut config, base_dir) = match &opts.config {
            Some(p) => (
                ExperimentConfig::load(p)?,
                p.parent().map(Path::to_path_buf).unwrap_or_default(),
            ),
            None => (ExperimentConfig::parse("")?, PathBuf::new()),
        };
        if let Some(s) = opts.seed {
            config.seed = s;
        }
        let out_dir = opts
            .out
            .clone()
            .or_else(|| config.out.clone())
            .unwrap_or_else(|| PathBuf::from("mbundle-out"));
        Ok(Session {
            config,
            base_dir,
            out_dir,
            quiet: opts.quiet,
        })
    }

    pub fn space(&self) -> CliResult<SpaceRef> {
        let s = &self.config.space;
        Ok(match &s.weights {
            Some(w) => AtomicMeasureSpace::with_weights(w),
            None => AtomicMeasureSpace::uniform(s.atoms),
        }
        .map_err(|e| CliError::Usage(format!("invalid config: {e}")))?)
    }

    pub fn resolve(&self, p: &Path) -> PathBuf {
        if p.is_absolute() {
            p.to_path_buf()
        } else {
            self.base_dir.join(p)
        }
    }

    pub fn read_input(&self, p: &Path) -> CliResult<String> {
        let path = self.resolve(p);
        std::fs::read_to_string(&path).map_err(|e| CliError::Usage(format!("cannot read {}: {e}", path.display())))
    }

    pub fn write_output(&self, name: &str, contents: &str) -> CliResult<PathBuf> {
        std::fs::create_dir_all(&self.out_dir)
            .map_err(|e| CliError::Usage(format!("cannot create {}: {e}", self.out_dir.display())))?;
        let path = self.out_dir.join(name);
        std::fs::write(&path, contents).map_err(|e| CliError::Usage(format!("cannot write {}: {e}", path.display())))?;
        Ok(path)
    }

    pub fn say(&self, line: &str) {
        if !self.quiet {
            println!("{line}");
        }
    }

    /// `# key: value` header lines for every effective setting.
    pub fn header(&self, command: &str) -> String {
        let mut s = format!("# command: {command}\n");
        for (k, v) in self.config.describe() {
            let _ = writeln!(s, "# {k}: {v}");
        }
        s
    }
}

/// A system built from the config together with the section it is probed on.
pub struct Experiment {
    pub system: DynamicalSystemBundle,
    pub probe: Section,
}

/// Random self-adjoint section with `‖x(ω)‖ = 1` at every atom.
pub fn unit_self_adjoint_section(space: &SpaceRef, dim: usize, seed: u64) -> crate::error::Result<Section> {
    let mut rng = random::rng_for(seed, u64::MAX);
    let x = random::self_adjoint_section(&mut rng, space, dim);
    let scale = L0Element::new_real(space, &x.norm().re_values().iter().map(|n| 1.0 / n).collect::<Vec<_>>())?;
    x.l0_scale(&scale)
}

pub fn build_experiment(session: &Session) -> CliResult<Experiment> {
    let space = session.space()?;
    let seed = session.config.seed;
    let n = space.len();
    match &session.config.example {
        ExampleConfig::Example1 { beta } => {
            let b = L0Element::new_real(&space, &ExperimentConfig::broadcast(beta, n))?;
            let system = build_example1(&space, &b)?;
            let probe = unit_self_adjoint_section(&space, 2, seed)?;
            Ok(Experiment { system, probe })
        }
        ExampleConfig::Example2 { alpha, budget, modes } => {
            let a = L0Element::new_real(&space, &ExperimentConfig::broadcast(alpha, n))?;
            let system = build_example2(&space, &a, *budget)?;
            let probe = crate::dynamics::mode_section(&space, *budget, modes.first().copied().unwrap_or(1))?;
            Ok(Experiment { system, probe })
        }
        ExampleConfig::Custom { state, markov, section } => {
            let state_dto = serial::from_json(&session.read_input(state)?)?;
            let markov_dto = serial::from_json(&session.read_input(markov)?)?;
            let phi = serial::state_in(&state_dto, None)?;
            let space = phi.space().clone();
            let t = serial::markov_in(&markov_dto, Some(&space), seed)?;
            let system = DynamicalSystemBundle::new("custom", phi, t, session.config.tolerances.invariance)?;
            let probe = match section {
                Some(p) => serial::section_in(&serial::from_json(&session.read_input(p)?)?, Some(&space))?,
                None => match system.kind() {
                    FiberKind::Matrix { dim } => unit_self_adjoint_section(&space, dim, seed)?,
                    FiberKind::TrigPoly { max_degree } => crate::dynamics::mode_section(&space, max_degree, 1)?,
                },
            };
            Ok(Experiment { system, probe })
        }
    }
}

/// One line of a PASS/FAIL summary.
#[derive(Debug, Clone, PartialEq)]
pub struct Check {
    pub name: String,
    pub pass: bool,
    pub detail: String,
}

impl Check {
    pub fn new(name: impl Into<String>, pass: bool, detail: impl Into<String>) -> Self {
        Check {
            name: name.into(),
            pass,
            detail: detail.into(),
        }
    }

    pub fn line(&self) -> String {
        format!("{} {}: {}", if self.pass { "PASS" } else { "FAIL" }, self.name, self.detail)
    }
}

pub fn exit_for(checks: &[Check]) -> i32 {
    if checks.iter().all(|c| c.pass) {
        EXIT_PASS
    } else {
        EXIT_FAIL
    }
}
