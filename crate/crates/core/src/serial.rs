//! JSON forms of spaces, sections, state bundles, Markov bundles and probe
//! tables. Complex numbers are `[re, im]`; matrices are row-major lists of
//! rows.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::bundle::Section;
use crate::error::{Error, Result};
use crate::fiber::{CMatrix, FiberElement, FiberKind, MatrixFiberElement, TrigPolyFiberElement};
use crate::localize::{MapProbeTable, StateProbeTable};
use crate::markov::{FiberMap, MarkovBundle};
use crate::measure::{Atom, AtomicMeasureSpace, L0Element, SpaceRef};
use crate::states::{FiberState, StateBundle};

pub type ComplexDto = [f64; 2];
pub type MatrixDto = Vec<Vec<ComplexDto>>;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AtomDto {
    pub id: String,
    pub weight: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SpaceDto {
    pub atoms: Vec<AtomDto>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case", deny_unknown_fields)]
pub enum FiberKindDto {
    Matrix { dim: usize },
    Trigpoly { max_degree: usize },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case", deny_unknown_fields)]
pub enum FiberElementDto {
    Matrix { entries: MatrixDto },
    /// Coefficients `c_{-K}, …, c_K`.
    Trigpoly { coeffs: Vec<ComplexDto> },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SectionDto {
    pub space: SpaceDto,
    pub kind: FiberKindDto,
    pub elements: Vec<FiberElementDto>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case", deny_unknown_fields)]
pub enum FiberStateDto {
    Density { rho: MatrixDto },
    Lebesgue,
    PointMass { t: f64 },
    Mixture { weights: Vec<f64>, points: Vec<f64> },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StateBundleDto {
    pub space: SpaceDto,
    pub kind: FiberKindDto,
    pub states: Vec<FiberStateDto>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case", deny_unknown_fields)]
pub enum FiberMapDto {
    /// Column-stacking superoperator.
    Superoperator { matrix: MatrixDto },
    Kraus { operators: Vec<MatrixDto> },
    Rotation { alpha: f64 },
    /// `m_0, …, m_L`.
    Multiplier { coeffs: Vec<ComplexDto> },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MarkovBundleDto {
    pub space: SpaceDto,
    pub kind: FiberKindDto,
    pub maps: Vec<FiberMapDto>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StateProbeDto {
    pub i: usize,
    pub j: usize,
    /// `φ(E_ij)(ω)` per atom.
    pub values: Vec<ComplexDto>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MapProbeDto {
    pub i: usize,
    pub j: usize,
    /// `T(E_ij)(ω)` per atom.
    pub images: Vec<MatrixDto>,
}

/// Input of the `localize` command.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case", deny_unknown_fields)]
pub enum ProbeTableDto {
    StateProbes {
        space: SpaceDto,
        dim: usize,
        probes: Vec<StateProbeDto>,
    },
    MapProbes {
        space: SpaceDto,
        dim: usize,
        probes: Vec<MapProbeDto>,
    },
}

fn c_out(z: Complex64) -> ComplexDto {
    [z.re, z.im]
}

fn c_in(z: ComplexDto) -> Complex64 {
    Complex64::new(z[0], z[1])
}

pub fn matrix_out(m: &CMatrix) -> MatrixDto {
    (0..m.nrows())
        .map(|i| (0..m.ncols()).map(|j| c_out(m[(i, j)])).collect())
        .collect()
}

pub fn matrix_in(rows: &MatrixDto) -> Result<CMatrix> {
    let n = rows.len();
    let m = rows.first().map_or(0, Vec::len);
    if n == 0 || rows.iter().any(|r| r.len() != m) {
        return Err(Error::Format("matrix rows must be nonempty and of equal length".into()));
    }
    Ok(CMatrix::from_fn(n, m, |i, j| c_in(rows[i][j])))
}

pub fn space_out(s: &SpaceRef) -> SpaceDto {
    SpaceDto {
        atoms: s
            .atoms()
            .iter()
            .map(|a| AtomDto {
                id: a.id.clone(),
                weight: a.weight,
            })
            .collect(),
    }
}

pub fn space_in(s: &SpaceDto) -> Result<SpaceRef> {
    AtomicMeasureSpace::new(
        s.atoms
            .iter()
            .map(|a| Atom {
                id: a.id.clone(),
                weight: a.weight,
            })
            .collect(),
    )
}

/// Reuses `existing` when the descriptor matches it, so bundles read
/// against the same space can be combined.
fn space_in_like(s: &SpaceDto, existing: Option<&SpaceRef>) -> Result<SpaceRef> {
    match existing {
        Some(e) if space_out(e) == *s => Ok(e.clone()),
        _ => space_in(s),
    }
}

pub fn kind_out(k: FiberKind) -> FiberKindDto {
    match k {
        FiberKind::Matrix { dim } => FiberKindDto::Matrix { dim },
        FiberKind::TrigPoly { max_degree } => FiberKindDto::Trigpoly { max_degree },
    }
}

pub fn kind_in(k: FiberKindDto) -> Result<FiberKind> {
    match k {
        FiberKindDto::Matrix { dim } => FiberKind::matrix(dim),
        FiberKindDto::Trigpoly { max_degree } => FiberKind::trigpoly(max_degree),
    }
}

fn element_out(e: &FiberElement) -> FiberElementDto {
    match e {
        FiberElement::Matrix(m) => FiberElementDto::Matrix {
            entries: matrix_out(&m.entries),
        },
        FiberElement::TrigPoly(p) => FiberElementDto::Trigpoly {
            coeffs: p.coeffs().iter().copied().map(c_out).collect(),
        },
    }
}

fn element_in(e: &FiberElementDto) -> Result<FiberElement> {
    Ok(match e {
        FiberElementDto::Matrix { entries } => FiberElement::Matrix(MatrixFiberElement::new(matrix_in(entries)?)?),
        FiberElementDto::Trigpoly { coeffs } => {
            FiberElement::TrigPoly(TrigPolyFiberElement::new(coeffs.iter().copied().map(c_in).collect())?)
        }
    })
}

pub fn section_out(x: &Section) -> SectionDto {
    SectionDto {
        space: space_out(x.space()),
        kind: kind_out(x.kind()),
        elements: x.elems().iter().map(element_out).collect(),
    }
}

pub fn section_in(x: &SectionDto, space: Option<&SpaceRef>) -> Result<Section> {
    let s = space_in_like(&x.space, space)?;
    Section::new(
        &s,
        kind_in(x.kind)?,
        x.elements.iter().map(element_in).collect::<Result<Vec<_>>>()?,
    )
}

pub fn state_out(phi: &StateBundle) -> StateBundleDto {
    StateBundleDto {
        space: space_out(phi.space()),
        kind: kind_out(phi.kind()),
        states: phi
            .states()
            .iter()
            .map(|s| match s {
                FiberState::Density(r) => FiberStateDto::Density { rho: matrix_out(r) },
                FiberState::Lebesgue => FiberStateDto::Lebesgue,
                FiberState::PointMass(t) => FiberStateDto::PointMass { t: *t },
                FiberState::Mixture { weights, points } => FiberStateDto::Mixture {
                    weights: weights.clone(),
                    points: points.clone(),
                },
            })
            .collect(),
    }
}

pub fn state_in(phi: &StateBundleDto, space: Option<&SpaceRef>) -> Result<StateBundle> {
    let s = space_in_like(&phi.space, space)?;
    let states = phi
        .states
        .iter()
        .map(|st| {
            Ok(match st {
                FiberStateDto::Density { rho } => FiberState::Density(matrix_in(rho)?),
                FiberStateDto::Lebesgue => FiberState::Lebesgue,
                FiberStateDto::PointMass { t } => FiberState::PointMass(*t),
                FiberStateDto::Mixture { weights, points } => FiberState::Mixture {
                    weights: weights.clone(),
                    points: points.clone(),
                },
            })
        })
        .collect::<Result<Vec<_>>>()?;
    StateBundle::new(&s, kind_in(phi.kind)?, states)
}

pub fn markov_out(t: &MarkovBundle) -> MarkovBundleDto {
    MarkovBundleDto {
        space: space_out(t.space()),
        kind: kind_out(t.kind()),
        maps: t
            .maps()
            .iter()
            .map(|m| match m {
                FiberMap::Superoperator(s) => FiberMapDto::Superoperator { matrix: matrix_out(s) },
                FiberMap::Kraus(ks) => FiberMapDto::Kraus {
                    operators: ks.iter().map(matrix_out).collect(),
                },
                FiberMap::Rotation(a) => FiberMapDto::Rotation { alpha: *a },
                FiberMap::Multiplier(c) => FiberMapDto::Multiplier {
                    coeffs: c.iter().copied().map(c_out).collect(),
                },
            })
            .collect(),
    }
}

/// Per-atom maps of a Markov bundle file, without unitality or positivity
/// checks.
pub fn maps_in(t: &MarkovBundleDto) -> Result<Vec<FiberMap>> {
    t.maps
        .iter()
        .map(|m| {
            Ok(match m {
                FiberMapDto::Superoperator { matrix } => FiberMap::Superoperator(matrix_in(matrix)?),
                FiberMapDto::Kraus { operators } => {
                    FiberMap::Kraus(operators.iter().map(matrix_in).collect::<Result<Vec<_>>>()?)
                }
                FiberMapDto::Rotation { alpha } => FiberMap::Rotation(*alpha),
                FiberMapDto::Multiplier { coeffs } => FiberMap::Multiplier(coeffs.iter().copied().map(c_in).collect()),
            })
        })
        .collect()
}

/// Rebuilds and re-certifies a Markov bundle; `seed` drives randomized
/// certification of raw superoperators.
pub fn markov_in(t: &MarkovBundleDto, space: Option<&SpaceRef>, seed: u64) -> Result<MarkovBundle> {
    let s = space_in_like(&t.space, space)?;
    MarkovBundle::new(&s, kind_in(t.kind)?, maps_in(t)?, seed)
}

pub fn state_probes_out(t: &StateProbeTable) -> ProbeTableDto {
    ProbeTableDto::StateProbes {
        space: space_out(&t.space),
        dim: t.dim,
        probes: t
            .values
            .iter()
            .map(|((i, j), v)| StateProbeDto {
                i: *i,
                j: *j,
                values: v.values().iter().copied().map(c_out).collect(),
            })
            .collect(),
    }
}

pub fn map_probes_out(t: &MapProbeTable) -> ProbeTableDto {
    ProbeTableDto::MapProbes {
        space: space_out(&t.space),
        dim: t.dim,
        probes: t
            .outputs
            .iter()
            .map(|((i, j), out)| MapProbeDto {
                i: *i,
                j: *j,
                images: out
                    .elems()
                    .iter()
                    .map(|e| e.as_matrix().map(|m| matrix_out(&m.entries)))
                    .collect::<Result<Vec<_>>>()
                    .expect("matrix-kind table"),
            })
            .collect(),
    }
}

fn check_probe_coverage<'a>(dim: usize, ij: impl Iterator<Item = (usize, usize)> + 'a) -> Result<()> {
    let mut seen = vec![false; dim * dim];
    for (i, j) in ij {
        if i >= dim || j >= dim || std::mem::replace(&mut seen[i + j * dim], true) {
            return Err(Error::Format(format!("probe ({i},{j}) is out of range or repeated")));
        }
    }
    if seen.iter().any(|s| !s) {
        return Err(Error::Format("probe table must list every matrix unit E_ij".into()));
    }
    Ok(())
}

/// Parsed probe table.
#[derive(Debug, Clone, PartialEq)]
pub enum ProbeTable {
    State(StateProbeTable),
    Map(MapProbeTable),
}

pub fn probes_in(dto: &ProbeTableDto) -> Result<ProbeTable> {
    match dto {
        ProbeTableDto::StateProbes { space, dim, probes } => {
            let s = space_in(space)?;
            check_probe_coverage(*dim, probes.iter().map(|p| (p.i, p.j)))?;
            let values = probes
                .iter()
                .map(|p| {
                    Ok((
                        (p.i, p.j),
                        L0Element::new(&s, p.values.iter().copied().map(c_in).collect())?,
                    ))
                })
                .collect::<Result<Vec<_>>>()?;
            Ok(ProbeTable::State(StateProbeTable {
                space: s,
                dim: *dim,
                values,
            }))
        }
        ProbeTableDto::MapProbes { space, dim, probes } => {
            let s = space_in(space)?;
            let kind = FiberKind::matrix(*dim)?;
            check_probe_coverage(*dim, probes.iter().map(|p| (p.i, p.j)))?;
            let outputs = probes
                .iter()
                .map(|p| {
                    let elems = p
                        .images
                        .iter()
                        .map(|m| Ok(FiberElement::Matrix(MatrixFiberElement::new(matrix_in(m)?)?)))
                        .collect::<Result<Vec<_>>>()?;
                    Ok(((p.i, p.j), Section::new(&s, kind, elems)?))
                })
                .collect::<Result<Vec<_>>>()?;
            Ok(ProbeTable::Map(MapProbeTable {
                space: s,
                dim: *dim,
                outputs,
            }))
        }
    }
}

pub fn to_json<T: Serialize>(v: &T) -> String {
    serde_json::to_string_pretty(v).expect("plain data serializes")
}

pub fn from_json<T: for<'de> Deserialize<'de>>(s: &str) -> Result<T> {
    serde_json::from_str(s).map_err(|e| Error::Format(e.to_string()))
}
