//! Seeded generators for random fiber elements, sections, states and
//! channels. Every randomized check in the crate draws from these.

use nalgebra::DMatrix;
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::bundle::Section;
use crate::fiber::matrix::hermitian_part;
use crate::fiber::{CMatrix, FiberElement, FiberKind, MatrixFiberElement, TrigPolyFiberElement};
use crate::measure::{L0Element, SpaceRef};

/// A deterministic generator for stream `stream` of `seed`. Per-atom work
/// uses the atom index as the stream so it can run in any order.
pub fn rng_for(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

pub fn complex_normal<R: Rng>(rng: &mut R) -> Complex64 {
    Complex64::new(rng.sample(StandardNormal), rng.sample(StandardNormal))
}

/// Ginibre matrix: i.i.d. standard complex Gaussian entries.
pub fn ginibre<R: Rng>(rng: &mut R, d: usize) -> CMatrix {
    CMatrix::from_fn(d, d, |_, _| complex_normal(rng))
}

pub fn hermitian<R: Rng>(rng: &mut R, d: usize) -> CMatrix {
    hermitian_part(&ginibre(rng, d))
}

/// Haar-distributed unitary (QR of a Ginibre matrix with phase fix).
pub fn unitary<R: Rng>(rng: &mut R, d: usize) -> CMatrix {
    let qr = ginibre(rng, d).qr();
    let (q, r) = qr.unpack();
    let phases = CMatrix::from_fn(d, d, |i, j| {
        if i == j {
            let z = r[(i, i)];
            if z.norm() > 0.0 {
                z / z.norm()
            } else {
                Complex64::new(1.0, 0.0)
            }
        } else {
            Complex64::new(0.0, 0.0)
        }
    });
    q * phases
}

/// Random density matrix `GG†/tr(GG†)`.
pub fn density<R: Rng>(rng: &mut R, d: usize) -> CMatrix {
    let g = ginibre(rng, d);
    let p = hermitian_part(&(&g * g.adjoint()));
    let tr = p.trace().re;
    p.map(|z| z / tr)
}

/// Random matrix normalized to spectral norm one.
pub fn unit_ball_matrix<R: Rng>(rng: &mut R, d: usize) -> CMatrix {
    let g = ginibre(rng, d);
    let n = crate::fiber::matrix::spectral_norm(&g);
    g.map(|z| z / n)
}

/// Random self-adjoint unitary `U·diag(±1)·U†`.
pub fn self_adjoint_unitary<R: Rng>(rng: &mut R, d: usize) -> CMatrix {
    let u = unitary(rng, d);
    let signs = CMatrix::from_fn(d, d, |i, j| {
        if i == j {
            Complex64::new(if rng.random_bool(0.5) { 1.0 } else { -1.0 }, 0.0)
        } else {
            Complex64::new(0.0, 0.0)
        }
    });
    hermitian_part(&(&u * signs * u.adjoint()))
}

/// Kraus operators `A_i` of a random unital completely positive map
/// `x ↦ Σ A_i x A_i†`; normalized so that `Σ A_i A_i† = e`.
pub fn unital_kraus<R: Rng>(rng: &mut R, d: usize, count: usize) -> Vec<CMatrix> {
    let raw: Vec<CMatrix> = (0..count).map(|_| ginibre(rng, d)).collect();
    let s = raw
        .iter()
        .fold(CMatrix::zeros(d, d), |acc, a| acc + a * a.adjoint());
    let eig = hermitian_part(&s).symmetric_eigen();
    let inv_sqrt = &eig.eigenvectors
        * DMatrix::from_diagonal(&eig.eigenvalues.map(|l| Complex64::new(1.0 / l.sqrt(), 0.0)))
        * eig.eigenvectors.adjoint();
    raw.iter().map(|a| &inv_sqrt * a).collect()
}

pub fn trigpoly<R: Rng>(rng: &mut R, degree: usize) -> TrigPolyFiberElement {
    TrigPolyFiberElement::new((0..2 * degree + 1).map(|_| complex_normal(rng)).collect())
        .expect("odd length")
}

pub fn fiber_element<R: Rng>(rng: &mut R, kind: FiberKind, degree: usize) -> FiberElement {
    match kind {
        FiberKind::Matrix { dim } => FiberElement::Matrix(MatrixFiberElement {
            entries: ginibre(rng, dim),
        }),
        FiberKind::TrigPoly { max_degree } => {
            FiberElement::TrigPoly(trigpoly(rng, degree.min(max_degree)))
        }
    }
}

/// Random section; trigpoly fibers get degree `degree` (capped by the budget).
pub fn section<R: Rng>(rng: &mut R, space: &SpaceRef, kind: FiberKind, degree: usize) -> Section {
    Section::from_fn(space, kind, |_| fiber_element(rng, kind, degree)).expect("fits kind")
}

pub fn self_adjoint_section<R: Rng>(rng: &mut R, space: &SpaceRef, dim: usize) -> Section {
    let kind = FiberKind::Matrix { dim };
    Section::from_fn(space, kind, |_| {
        FiberElement::Matrix(MatrixFiberElement {
            entries: hermitian(rng, dim),
        })
    })
    .expect("fits kind")
}

pub fn l0_complex<R: Rng>(rng: &mut R, space: &SpaceRef) -> L0Element {
    L0Element::new(space, (0..space.len()).map(|_| complex_normal(rng)).collect())
        .expect("length matches")
}

pub fn l0_real<R: Rng>(rng: &mut R, space: &SpaceRef) -> L0Element {
    let v: Vec<f64> = (0..space.len()).map(|_| rng.sample(StandardNormal)).collect();
    L0Element::new_real(space, &v).expect("length matches")
}

/// Uniform on `[0, 1)` at each atom.
pub fn l0_unit_interval<R: Rng>(rng: &mut R, space: &SpaceRef) -> L0Element {
    let v: Vec<f64> = (0..space.len()).map(|_| rng.random::<f64>()).collect();
    L0Element::new_real(space, &v).expect("length matches")
}
