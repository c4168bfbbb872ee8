//! Recovering fiberwise states and Markov operators from global `L0`-linear
//! data.
//!
//! For an atomic space the measurable selection of fibers reduces to
//! evaluating the global object on the matrix-unit sections `E_ij` and
//! reading off each atom.

use num_complex::Complex64;

use crate::bundle::{matrix_unit_probes, Section};
use crate::error::{Error, Result};
use crate::fiber::matrix::vec_columns;
use crate::fiber::{CMatrix, FiberElement, FiberKind, MatrixFiberElement};
use crate::markov::{markov_apply, FiberMap, MarkovBundle, UnitalMapBundle};
use crate::measure::{L0Element, SpaceRef};
use crate::states::{state_eval, StateBundle};

/// Agreement required between the localized object and the global data.
pub const ROUNDTRIP_TOL: f64 = 1e-12;

fn linearity_error(space: &SpaceRef, atom: usize, what: &str) -> Error {
    Error::at_atom(space.atom_id(atom), format!("global {what} is not L0-linear on probes"))
}

/// Reconstructs `{ρ_ω}` from the values of a global `L0`-linear functional
/// on the matrix-unit sections.
pub fn state_localize<F>(space: &SpaceRef, dim: usize, global: F) -> Result<StateBundle>
where
    F: Fn(&Section) -> Result<L0Element>,
{
    let probes = matrix_unit_probes(space, dim);
    let values = probes
        .iter()
        .map(|(_, p)| global(p))
        .collect::<Result<Vec<_>>>()?;
    for a in 0..space.len() {
        let ind = L0Element::indicator(space, a);
        for ((_, p), full) in probes.iter().zip(&values) {
            let v = global(&p.l0_scale(&ind)?)?;
            for b in 0..space.len() {
                let want = if a == b { full.value(b) } else { Complex64::new(0.0, 0.0) };
                if (v.value(b) - want).norm() > ROUNDTRIP_TOL {
                    return Err(linearity_error(space, a, "functional"));
                }
            }
        }
    }
    let rhos = (0..space.len())
        .map(|a| {
            let mut rho = CMatrix::zeros(dim, dim);
            for (((i, j), _), v) in probes.iter().zip(&values) {
                // φ(E_ij) = tr(ρ E_ij) = ρ_ji
                rho[(*j, *i)] = v.value(a);
            }
            rho
        })
        .collect();
    let phi = StateBundle::from_densities(space, rhos)?;
    for ((_, p), v) in probes.iter().zip(&values) {
        let got = state_eval(&phi, p)?;
        let err = got.sub(v)?.values().iter().map(|z| z.norm()).fold(0.0, f64::max);
        if err > ROUNDTRIP_TOL {
            return Err(Error::Verification(format!("state localization round trip off by {err:e}")));
        }
    }
    Ok(phi)
}

/// Reconstructs `{T_ω}` as column-stacking superoperators from a global
/// `L0`-linear map evaluated on matrix-unit sections. The result must be
/// unital and pass positivity certification (seeded by `seed`).
pub fn markov_localize<F>(space: &SpaceRef, dim: usize, global: F, seed: u64) -> Result<MarkovBundle>
where
    F: Fn(&Section) -> Result<Section>,
{
    let kind = FiberKind::matrix(dim)?;
    let probes = matrix_unit_probes(space, dim);
    let outputs = probes
        .iter()
        .map(|(_, p)| {
            let out = global(p)?;
            if out.kind() != kind {
                return Err(Error::KindMismatch {
                    expected: kind.to_string(),
                    found: out.kind().to_string(),
                });
            }
            Ok(out)
        })
        .collect::<Result<Vec<_>>>()?;
    for a in 0..space.len() {
        let ind = L0Element::indicator(space, a);
        for ((_, p), full) in probes.iter().zip(&outputs) {
            let v = global(&p.l0_scale(&ind)?)?;
            for b in 0..space.len() {
                let want = if a == b { full.at(b).clone() } else { kind.zero() };
                if v.at(b).distance(&want, &kind)? > ROUNDTRIP_TOL {
                    return Err(linearity_error(space, a, "map"));
                }
            }
        }
    }
    let maps = (0..space.len())
        .map(|a| {
            let mut m = CMatrix::zeros(dim * dim, dim * dim);
            for (((i, j), _), out) in probes.iter().zip(&outputs) {
                let col = vec_columns(&out.at(a).as_matrix()?.entries);
                m.set_column(i + j * dim, &col);
            }
            Ok(FiberMap::Superoperator(m))
        })
        .collect::<Result<Vec<_>>>()?;
    let t = MarkovBundle::certify(UnitalMapBundle::new(space, kind, maps)?, seed)?;
    for ((_, p), out) in probes.iter().zip(&outputs) {
        if !markov_apply(&t, p)?.approx_eq(out, ROUNDTRIP_TOL)? {
            return Err(Error::Verification("Markov localization round trip failed".into()));
        }
    }
    Ok(t)
}

/// Values of a global functional on the matrix-unit probes. Extends to all
/// sections by `L0`-linearity.
#[derive(Debug, Clone, PartialEq)]
pub struct StateProbeTable {
    pub space: SpaceRef,
    pub dim: usize,
    /// `((i, j), φ(E_ij))`.
    pub values: Vec<((usize, usize), L0Element)>,
}

impl StateProbeTable {
    pub fn tabulate(phi: &StateBundle) -> Result<Self> {
        let dim = phi.kind().matrix_dim()?;
        let values = matrix_unit_probes(phi.space(), dim)
            .into_iter()
            .map(|(ij, p)| Ok((ij, state_eval(phi, &p)?)))
            .collect::<Result<Vec<_>>>()?;
        Ok(StateProbeTable {
            space: phi.space().clone(),
            dim,
            values,
        })
    }

    /// `φ(x)(ω) = Σ_ij x_ij(ω)·φ(E_ij)(ω)`.
    pub fn eval(&self, x: &Section) -> Result<L0Element> {
        let mut out = vec![Complex64::new(0.0, 0.0); self.space.len()];
        for ((i, j), v) in &self.values {
            for (a, o) in out.iter_mut().enumerate() {
                *o += x.at(a).as_matrix()?.entries[(*i, *j)] * v.value(a);
            }
        }
        L0Element::new(&self.space, out)
    }

    pub fn localize(&self) -> Result<StateBundle> {
        state_localize(&self.space, self.dim, |x| self.eval(x))
    }
}

/// Images of the matrix-unit probes under a global map.
#[derive(Debug, Clone, PartialEq)]
pub struct MapProbeTable {
    pub space: SpaceRef,
    pub dim: usize,
    /// `((i, j), T(E_ij))`.
    pub outputs: Vec<((usize, usize), Section)>,
}

impl MapProbeTable {
    pub fn tabulate(t: &MarkovBundle) -> Result<Self> {
        let dim = t.kind().matrix_dim()?;
        let outputs = matrix_unit_probes(t.space(), dim)
            .into_iter()
            .map(|(ij, p)| Ok((ij, markov_apply(t, &p)?)))
            .collect::<Result<Vec<_>>>()?;
        Ok(MapProbeTable {
            space: t.space().clone(),
            dim,
            outputs,
        })
    }

    pub fn apply(&self, x: &Section) -> Result<Section> {
        let kind = FiberKind::matrix(self.dim)?;
        let mut acc = vec![CMatrix::zeros(self.dim, self.dim); self.space.len()];
        for ((i, j), out) in &self.outputs {
            for (a, m) in acc.iter_mut().enumerate() {
                let c = x.at(a).as_matrix()?.entries[(*i, *j)];
                *m += out.at(a).as_matrix()?.entries.map(|z| z * c);
            }
        }
        Section::new(
            &self.space,
            kind,
            acc.into_iter()
                .map(|m| FiberElement::Matrix(MatrixFiberElement { entries: m }))
                .collect(),
        )
    }

    pub fn localize(&self, seed: u64) -> Result<MarkovBundle> {
        markov_localize(&self.space, self.dim, |x| self.apply(x), seed)
    }
}

/// Largest entrywise difference between the per-atom superoperators of two
/// Markov bundles.
pub fn superoperator_distance(a: &MarkovBundle, b: &MarkovBundle) -> Result<f64> {
    let (sa, sb) = (a.superoperators()?, b.superoperators()?);
    Ok(sa
        .iter()
        .zip(&sb)
        .map(|(x, y)| (x - y).iter().map(|z| z.norm()).fold(0.0, f64::max))
        .fold(0.0, f64::max))
}

/// Largest entrywise difference between the densities of two state bundles.
pub fn density_distance(a: &StateBundle, b: &StateBundle) -> Result<f64> {
    let mut worst: f64 = 0.0;
    for i in 0..a.space().len() {
        let d = a.density(i)? - b.density(i)?;
        worst = worst.max(d.iter().map(|z| z.norm()).fold(0.0, f64::max));
    }
    Ok(worst)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fiber::matrix::unvec_columns;
    use crate::measure::AtomicMeasureSpace;
    use crate::random;

    #[test]
    fn state_roundtrip() {
        let s = AtomicMeasureSpace::uniform(4).unwrap();
        let mut rng = random::rng_for(1, 0);
        let phi = StateBundle::random(&mut rng, &s, 3);
        let back = state_localize(&s, 3, |x| state_eval(&phi, x)).unwrap();
        assert!(density_distance(&phi, &back).unwrap() < 1e-12);
    }

    #[test]
    fn canonical_trace_localizes_to_identity_over_d() {
        let s = AtomicMeasureSpace::uniform(2).unwrap();
        let tau = StateBundle::canonical_trace(&s, 2).unwrap();
        let back = StateProbeTable::tabulate(&tau).unwrap().localize().unwrap();
        for i in 0..2 {
            assert_eq!(back.density(i).unwrap(), &CMatrix::identity(2, 2).map(|z| z * 0.5));
        }
    }

    #[test]
    fn non_positive_global_names_atom() {
        let s = AtomicMeasureSpace::uniform(3).unwrap();
        let tau = StateBundle::canonical_trace(&s, 2).unwrap();
        let mut table = StateProbeTable::tabulate(&tau).unwrap();
        // corrupt φ(E_00) at w2 to 1.5, φ(E_11) to −0.5: trace stays 1
        for ((i, j), v) in table.values.iter_mut() {
            let mut vals = v.values().to_vec();
            if (*i, *j) == (0, 0) {
                vals[2] = Complex64::new(1.5, 0.0);
            }
            if (*i, *j) == (1, 1) {
                vals[2] = Complex64::new(-0.5, 0.0);
            }
            *v = L0Element::new(&s, vals).unwrap();
        }
        match table.localize() {
            Err(Error::AtAtom { atom, .. }) => assert_eq!(atom, "w2"),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn non_local_functional_is_rejected() {
        let s = AtomicMeasureSpace::uniform(2).unwrap();
        // x ↦ value at atom 0, broadcast everywhere: not L0-linear
        let r = state_localize(&s, 2, |x| {
            let v = x.at(0).as_matrix()?.entries.trace() / 2.0;
            L0Element::new(x.space(), vec![v; 2])
        });
        assert!(matches!(r, Err(Error::AtAtom { .. })));
    }

    #[test]
    fn map_roundtrip_and_identity() {
        let s = AtomicMeasureSpace::uniform(3).unwrap();
        let mut rng = random::rng_for(2, 0);
        let t = MarkovBundle::random(&mut rng, &s, 2, 3);
        let back = markov_localize(&s, 2, |x| markov_apply(&t, x), 9).unwrap();
        assert!(superoperator_distance(&t, &back).unwrap() < 1e-12);

        let id = markov_localize(&s, 2, |x| Ok(x.clone()), 9).unwrap();
        for m in id.superoperators().unwrap() {
            assert!((m - CMatrix::identity(4, 4)).norm() < 1e-15);
        }
    }

    #[test]
    fn non_unital_global_map_is_rejected() {
        let s = AtomicMeasureSpace::uniform(2).unwrap();
        let r = markov_localize(&s, 2, |x| Ok(x.scale(Complex64::new(0.5, 0.0))), 1);
        assert!(r.unwrap_err().to_string().contains("not unital"));
    }

    #[test]
    fn unvec_inverts_column_stacking() {
        let mut rng = random::rng_for(3, 0);
        let m = random::ginibre(&mut rng, 3);
        assert_eq!(unvec_columns(&vec_columns(&m), 3), m);
    }
}
