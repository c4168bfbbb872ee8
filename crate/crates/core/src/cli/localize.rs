//! `localize`: recover fiberwise bundles from a global probe table.
//!
//! With `--input`, the table is read from a JSON file. Without it, the
//! configured system's state (and map, for matrix fibers) is tabulated first,
//! written out, and localized back.

use std::fmt::Write as _;
use std::path::PathBuf;

use crate::localize::{density_distance, superoperator_distance, MapProbeTable, StateProbeTable};
use crate::serial::{self, ProbeTable, ProbeTableDto};

use super::{build_experiment, exit_for, Check, CliResult, CommonOptions, Session};

#[derive(Debug, Clone, PartialEq)]
pub struct LocalizeOutcome {
    pub exit_code: i32,
    pub checks: Vec<Check>,
    pub files: Vec<String>,
}

fn table_distance_state(a: &StateProbeTable, b: &StateProbeTable) -> f64 {
    a.values
        .iter()
        .zip(&b.values)
        .flat_map(|((_, x), (_, y))| x.values().iter().zip(y.values()).map(|(p, q)| (p - q).norm()))
        .fold(0.0, f64::max)
}

fn table_distance_map(a: &MapProbeTable, b: &MapProbeTable) -> crate::error::Result<f64> {
    let mut worst: f64 = 0.0;
    for ((_, x), (_, y)) in a.outputs.iter().zip(&b.outputs) {
        for (p, q) in x.elems().iter().zip(y.elems()) {
            worst = worst.max((&p.as_matrix()?.entries - &q.as_matrix()?.entries).iter().map(|z| z.norm()).fold(0.0, f64::max));
        }
    }
    Ok(worst)
}

/// Localizes one table, re-tabulates the result and compares.
fn localize_table(session: &Session, name: &str, table: &ProbeTable, checks: &mut Vec<Check>, files: &mut Vec<String>) -> CliResult<()> {
    let seed = session.config.seed;
    match table {
        ProbeTable::State(t) => {
            let phi = t.localize()?;
            let back = StateProbeTable::tabulate(&phi)?;
            let err = table_distance_state(t, &back);
            checks.push(Check::new(
                format!("{name}_state_roundtrip"),
                err <= crate::localize::ROUNDTRIP_TOL,
                format!("max |φ(E_ij) − localized φ(E_ij)| = {err:e}"),
            ));
            let out = session.write_output(&format!("{name}_state.json"), &serial::to_json(&serial::state_out(&phi)))?;
            files.push(out.display().to_string());
        }
        ProbeTable::Map(t) => {
            let m = t.localize(seed)?;
            let back = MapProbeTable::tabulate(&m)?;
            let err = table_distance_map(t, &back)?;
            checks.push(Check::new(
                format!("{name}_map_roundtrip"),
                err <= crate::localize::ROUNDTRIP_TOL,
                format!("max |T(E_ij) − localized T(E_ij)| = {err:e}"),
            ));
            let out = session.write_output(&format!("{name}_markov.json"), &serial::to_json(&serial::markov_out(&m)))?;
            files.push(out.display().to_string());
        }
    }
    Ok(())
}

pub fn cmd_localize(opts: &CommonOptions, input: Option<&PathBuf>) -> CliResult<LocalizeOutcome> {
    let session = Session::open(opts)?;
    let mut checks = Vec::new();
    let mut files = Vec::new();
    match input {
        Some(p) => {
            let text = std::fs::read_to_string(p)
                .map_err(|e| super::CliError::Usage(format!("cannot read {}: {e}", p.display())))?;
            let dto: ProbeTableDto = serial::from_json(&text)?;
            let table = serial::probes_in(&dto)?;
            localize_table(&session, "input", &table, &mut checks, &mut files)?;
        }
        None => {
            let exp = build_experiment(&session)?;
            let sys = &exp.system;
            if sys.kind().matrix_dim().is_err() {
                return Err(super::CliError::Usage(
                    "localize works on matrix fibers; pass --input or use a matrix-kind config".into(),
                ));
            }
            let st = StateProbeTable::tabulate(sys.state())?;
            let mt = MapProbeTable::tabulate(sys.markov())?;
            files.push(
                session
                    .write_output("state_probes.json", &serial::to_json(&serial::state_probes_out(&st)))?
                    .display()
                    .to_string(),
            );
            files.push(
                session
                    .write_output("map_probes.json", &serial::to_json(&serial::map_probes_out(&mt)))?
                    .display()
                    .to_string(),
            );
            let phi = st.localize()?;
            let m = mt.localize(session.config.seed)?;
            let ds = density_distance(sys.state(), &phi)?;
            let dm = superoperator_distance(sys.markov(), &m)?;
            checks.push(Check::new(
                "state_recovery",
                ds <= crate::localize::ROUNDTRIP_TOL,
                format!("max |ρ_ω − localized ρ_ω| = {ds:e}"),
            ));
            checks.push(Check::new(
                "map_recovery",
                dm <= crate::localize::ROUNDTRIP_TOL,
                format!("max |T_ω − localized T_ω| = {dm:e}"),
            ));
            localize_table(&session, "config", &ProbeTable::State(st), &mut checks, &mut files)?;
            localize_table(&session, "config", &ProbeTable::Map(mt), &mut checks, &mut files)?;
        }
    }
    let mut summary = session.header("localize");
    for c in &checks {
        let _ = writeln!(summary, "{}", c.line());
        session.say(&c.line());
    }
    files.push(session.write_output("localize_summary.txt", &summary)?.display().to_string());
    Ok(LocalizeOutcome {
        exit_code: exit_for(&checks),
        checks,
        files,
    })
}
