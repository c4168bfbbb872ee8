//! Measurable bundles of C*-dynamical systems over finite atomic measure
//! spaces.
//!
//! `L0` is realized as complex tuples indexed by atoms, a measurable
//! section as one fiber element per atom, and every `L0`-valued norm,
//! state or Markov operator acts atom by atom. Fibers are matrix algebras
//! `M_d(C)` or trigonometric polynomials on the circle.
//!
//! * [`measure`]: atoms, `L0` arithmetic, order limits, essential sup.
//! * [`fiber`]: the fiber algebras and their norms.
//! * [`bundle`]: sections, d-decomposition, `(bo)`-limits, Hilbert–Kaplansky
//!   vector sections.
//! * [`states`] and [`markov`]: state bundles, unital and Markov map bundles,
//!   the positivity criterion and invariance.
//! * [`localize`]: recovering fiberwise objects from global `L0`-linear data.
//! * [`dynamics`]: Cesàro averages, ergodic deviations, fixed points and the
//!   two model systems.
//! * [`serial`] and [`cli`]: JSON files and the `mbundle` commands.

pub mod bundle;
pub mod cli;
pub mod dynamics;
pub mod error;
pub mod fiber;
pub mod localize;
pub mod markov;
pub mod measure;
pub mod random;
pub mod serial;
pub mod states;

pub use bundle::Section;
pub use dynamics::DynamicalSystemBundle;
pub use error::{Error, Result};
pub use fiber::{FiberElement, FiberKind};
pub use markov::{MarkovBundle, UnitalMapBundle};
pub use measure::{AtomicMeasureSpace, L0Element, SpaceRef};
pub use states::StateBundle;
