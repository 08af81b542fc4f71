//! Exact computation with filtered abelian p-groups viewed as group nilspaces:
//! Host-Kra cubes, polynomial maps out of `F_p^n`, fibrations and lifting,
//! orbit closures under the shift action, and phase-polynomial observables.
//!
//! Everything is exact. Group elements are canonical residue vectors and
//! unit-modulus values are stored as root-of-unity indices.

pub mod abramov;
pub mod budget;
pub mod cube;
pub mod cyclotomic;
pub mod dynamics;
pub mod error;
pub mod experiment;
pub mod fibration;
pub mod group;
mod linalg;
pub mod poly;

pub use abramov::{Character, FunctionOnOrbit, PhasePolyObservable};
pub use budget::{Budget, Check, Mode};
pub use cube::{CornerMap, CubeMap, DiscreteCubeSpec};
pub use cyclotomic::CyclotomicNumber;
pub use dynamics::{EmpiricalMeasure, FactorMapData, FiniteSystem, Orbit};
pub use error::{Error, Result};
pub use fibration::{FibrationCertificate, FilteredHom};
pub use group::{CyclicFactor, FilteredGroup, FpPoint, FpSpace, GroupElement};
pub use poly::{PolyMap, TaylorForm};
