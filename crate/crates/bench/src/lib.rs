//! Fixtures shared by the criterion benchmarks.

use std::sync::Arc;

use nilshift_core::poly::random_morphism;
use nilshift_core::{FilteredGroup, PolyMap};

/// Named groups used across the benchmarks.
pub fn groups() -> Vec<(&'static str, Arc<FilteredGroup>)> {
    vec![
        ("cf(2,2,1)", Arc::new(FilteredGroup::cf(2, 2, 1).expect("valid"))),
        ("hpk(2,3,[1,1,1])", Arc::new(FilteredGroup::hpk(2, 3, &[1, 1, 1]).expect("valid"))),
        ("hpk(3,3,[1,1,1])", Arc::new(FilteredGroup::hpk(3, 3, &[1, 1, 1]).expect("valid"))),
    ]
}

/// A seeded morphism `F_p^n -> group`.
pub fn morphism(group: &Arc<FilteredGroup>, n: usize) -> PolyMap {
    random_morphism(n, group, 42).expect("random morphisms restrict cleanly")
}
