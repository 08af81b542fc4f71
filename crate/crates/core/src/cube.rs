//! Host-Kra cubes on a filtered abelian group.
//!
//! A map `q: {0,1}^n -> G` is stored on its `2^n` vertices; vertex `v` is an
//! `n`-bit integer with bit `i` holding coordinate `i`. Every such map has a
//! unique expansion `q(v) = sum_{S subset supp(v)} g_S`, and `q` is a cube
//! exactly when each `g_S` lies in `G_(|S|)`.

use serde::{Deserialize, Serialize};

use crate::budget::DEFAULT_ENUMERATION_BUDGET;
use crate::error::{Error, Result};
use crate::group::{FilteredGroup, FpPoint, FpSpace, GroupElement};

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct CubeMap {
    pub n: usize,
    pub values: Vec<GroupElement>,
}

/// All vertices except `1^n`, in vertex order.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CornerMap {
    pub n: usize,
    pub values: Vec<GroupElement>,
}

/// The discrete cube `v -> base + sum_i v_i * edges[i]` in `F_p^n`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DiscreteCubeSpec {
    pub base: FpPoint,
    pub edges: Vec<FpPoint>,
}

impl DiscreteCubeSpec {
    pub fn dim(&self) -> usize {
        self.edges.len()
    }

    /// Indices in `space` of the cube's vertices, in vertex order.
    pub fn vertices(&self, space: &FpSpace) -> Vec<usize> {
        let base = space.index(&self.base);
        let edges: Vec<usize> = self.edges.iter().map(|e| space.index(e)).collect();
        cube_vertices(space, base, &edges)
    }
}

pub(crate) fn cube_vertices(space: &FpSpace, base: usize, edges: &[usize]) -> Vec<usize> {
    let mut out = Vec::with_capacity(1 << edges.len());
    out.push(base);
    for &e in edges {
        let len = out.len();
        for v in 0..len {
            out.push(space.add(out[v], e));
        }
    }
    out
}

impl CubeMap {
    pub fn new(n: usize, values: Vec<GroupElement>) -> Result<Self> {
        if values.len() != 1 << n {
            return Err(Error::Malformed(format!(
                "a {n}-dimensional cube has {} vertices, got {}",
                1usize << n,
                values.len()
            )));
        }
        Ok(CubeMap { n, values })
    }

    pub fn constant(n: usize, c: GroupElement) -> Self {
        CubeMap { n, values: vec![c; 1 << n] }
    }

    pub fn validate(&self, group: &FilteredGroup) -> Result<()> {
        if self.values.len() != 1 << self.n {
            return Err(Error::Malformed("vertex count is not 2^n".into()));
        }
        self.values.iter().try_for_each(|g| group.check(g))
    }

    pub fn add(&self, other: &CubeMap, group: &FilteredGroup) -> CubeMap {
        CubeMap {
            n: self.n,
            values: self.values.iter().zip(&other.values).map(|(a, b)| group.add(a, b)).collect(),
        }
    }

    pub fn neg(&self, group: &FilteredGroup) -> CubeMap {
        CubeMap { n: self.n, values: self.values.iter().map(|a| group.neg(a)).collect() }
    }

    /// Drops vertex `1^n`.
    pub fn corner(&self) -> CornerMap {
        let mut values = self.values.clone();
        values.pop();
        CornerMap { n: self.n, values }
    }
}

impl CornerMap {
    pub fn new(n: usize, values: Vec<GroupElement>) -> Result<Self> {
        if values.len() + 1 != 1 << n {
            return Err(Error::Malformed(format!(
                "a {n}-dimensional corner has {} vertices, got {}",
                (1usize << n) - 1,
                values.len()
            )));
        }
        Ok(CornerMap { n, values })
    }
}

fn moebius_in_place(values: &mut [GroupElement], n: usize, group: &FilteredGroup) {
    for i in 0..n {
        let bit = 1 << i;
        for v in 0..values.len() {
            if v & bit != 0 {
                let (lo, hi) = values.split_at_mut(v);
                group.sub_assign(&mut hi[0], &lo[v ^ bit]);
            }
        }
    }
}

fn zeta_in_place(values: &mut [GroupElement], n: usize, group: &FilteredGroup) {
    for i in 0..n {
        let bit = 1 << i;
        for v in 0..values.len() {
            if v & bit != 0 {
                let (lo, hi) = values.split_at_mut(v);
                group.add_assign(&mut hi[0], &lo[v ^ bit]);
            }
        }
    }
}

/// `g_S = sum_{T subset S} (-1)^{|S \ T|} q(1_T)`, indexed by the subset mask `S`.
pub fn moebius_coefficients(q: &CubeMap, group: &FilteredGroup) -> Vec<GroupElement> {
    let mut coeffs = q.values.clone();
    moebius_in_place(&mut coeffs, q.n, group);
    coeffs
}

/// Inverse of [`moebius_coefficients`].
pub fn reconstruct(n: usize, coeffs: &[GroupElement], group: &FilteredGroup) -> CubeMap {
    let mut values = coeffs.to_vec();
    zeta_in_place(&mut values, n, group);
    CubeMap { n, values }
}

/// First subset `S` (by mask) whose coefficient leaves `G_(|S|)`.
pub fn first_violation(q: &CubeMap, group: &FilteredGroup) -> Option<usize> {
    moebius_coefficients(q, group)
        .iter()
        .enumerate()
        .find(|(s, g)| !group.in_level(g, s.count_ones() as usize))
        .map(|(s, _)| s)
}

pub fn is_hk_cube(q: &CubeMap, group: &FilteredGroup) -> bool {
    first_violation(q, group).is_none()
}

/// `sum_v (-1)^{|v|} q(v)`.
pub fn alternating_sum(q: &CubeMap, group: &FilteredGroup) -> GroupElement {
    let mut acc = group.zero();
    for (v, g) in q.values.iter().enumerate() {
        if v.count_ones() % 2 == 0 {
            group.add_assign(&mut acc, g);
        } else {
            group.sub_assign(&mut acc, g);
        }
    }
    acc
}

/// `|G| * prod_{S nonempty} |G_(|S|)|`.
pub fn cube_count(n: usize, group: &FilteredGroup) -> u128 {
    let mut count: u128 = 1;
    for s in 0..1usize << n {
        count = count.saturating_mul(group.level_order(s.count_ones() as usize));
    }
    count
}

/// Completes a corner to a cube, taking the top coefficient `g_[n]` to be zero.
pub fn complete_corner(c: &CornerMap, group: &FilteredGroup) -> Result<CubeMap> {
    let n = c.n;
    let top = (1usize << n) - 1;
    let mut values = c.values.clone();
    values.push(group.zero());
    // g_S for S != [n] only reads vertices inside S, so the placeholder at 1^n
    // affects nothing but g_[n].
    moebius_in_place(&mut values, n, group);
    for (s, g) in values.iter().enumerate().take(top) {
        let level = s.count_ones() as usize;
        if !group.in_level(g, level) {
            return Err(Error::CompletionFailure { subset: s, level });
        }
    }
    values[top] = group.zero();
    zeta_in_place(&mut values, n, group);
    Ok(CubeMap { n, values })
}

/// Every cube of dimension `n`, failing if the count exceeds the default budget.
pub fn enumerate_cubes(n: usize, group: &FilteredGroup) -> Result<CubeEnumerator<'_>> {
    enumerate_cubes_with_budget(n, group, DEFAULT_ENUMERATION_BUDGET)
}

pub fn enumerate_cubes_with_budget(
    n: usize,
    group: &FilteredGroup,
    budget: u64,
) -> Result<CubeEnumerator<'_>> {
    let count = cube_count(n, group);
    if count > budget as u128 {
        return Err(Error::EnumerationTooLarge { count, budget });
    }
    Ok(CubeEnumerator::new(n, group, count))
}

/// Streams cubes by iterating Moebius coefficients over their levels. The
/// stream is a mixed-radix counter, so it can be restarted at any index.
pub struct CubeEnumerator<'g> {
    n: usize,
    group: &'g FilteredGroup,
    /// (subset, factor, radix, step) for every digit with radix > 1.
    slots: Vec<(usize, usize, u64, u64)>,
    digits: Vec<u64>,
    next_index: u128,
    count: u128,
}

impl<'g> CubeEnumerator<'g> {
    fn new(n: usize, group: &'g FilteredGroup, count: u128) -> Self {
        let mut slots = Vec::new();
        for s in 0..1usize << n {
            let level = s.count_ones() as usize;
            for j in 0..group.rank() {
                let radix = group.factor_level_order(j, level);
                if radix > 1 {
                    slots.push((s, j, radix, group.level_step(j, level)));
                }
            }
        }
        let digits = vec![0; slots.len()];
        CubeEnumerator { n, group, slots, digits, next_index: 0, count }
    }

    pub fn total(&self) -> u128 {
        self.count
    }

    /// Repositions the stream so the next cube emitted has the given index.
    pub fn starting_at(mut self, index: u128) -> Self {
        let mut rest = index.min(self.count);
        for (d, slot) in self.digits.iter_mut().zip(&self.slots) {
            *d = (rest % slot.2 as u128) as u64;
            rest /= slot.2 as u128;
        }
        self.next_index = index.min(self.count);
        self
    }

    fn current(&self) -> CubeMap {
        let mut coeffs = vec![self.group.zero(); 1 << self.n];
        for (&d, &(s, j, _, step)) in self.digits.iter().zip(&self.slots) {
            coeffs[s].0[j] = d * step;
        }
        reconstruct(self.n, &coeffs, self.group)
    }
}

impl Iterator for CubeEnumerator<'_> {
    type Item = CubeMap;

    fn next(&mut self) -> Option<CubeMap> {
        if self.next_index >= self.count {
            return None;
        }
        let out = self.current();
        self.next_index += 1;
        for (d, slot) in self.digits.iter_mut().zip(&self.slots) {
            *d += 1;
            if *d < slot.2 {
                break;
            }
            *d = 0;
        }
        Some(out)
    }

    fn size_hint(&self) -> (usize, Option<usize>) {
        let rest = (self.count - self.next_index).min(usize::MAX as u128) as usize;
        (rest, Some(rest))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::collections::HashSet;

    fn z4() -> FilteredGroup {
        FilteredGroup::cf(2, 2, 1).unwrap()
    }

    fn el(r: u64) -> GroupElement {
        GroupElement(vec![r])
    }

    fn cube(vals: &[u64]) -> CubeMap {
        CubeMap::new((vals.len() as f64).log2() as usize, vals.iter().map(|&r| el(r)).collect()).unwrap()
    }

    #[test]
    fn moebius_one_dimensional() {
        let g = moebius_coefficients(&cube(&[1, 3]), &z4());
        assert_eq!(g, vec![el(1), el(2)]);
    }

    #[test]
    fn moebius_top_coefficient() {
        // vertices 00, 10, 01, 11 with bit 0 = first coordinate
        let q = cube(&[0, 1, 1, 3]);
        let g = moebius_coefficients(&q, &z4());
        assert_eq!(g[0b11], el(1));
        assert_eq!(reconstruct(2, &g, &z4()), q);
    }

    #[test]
    fn constant_cube_has_only_base_coefficient() {
        let q = CubeMap::constant(3, el(3));
        let g = moebius_coefficients(&q, &z4());
        assert_eq!(g[0], el(3));
        assert!(g[1..].iter().all(|x| x == &el(0)));
        assert!(is_hk_cube(&q, &z4()));
    }

    #[test]
    fn membership_examples() {
        assert!(is_hk_cube(&cube(&[0, 1, 1, 2]), &z4()));
        assert!(!is_hk_cube(&cube(&[0, 1, 1, 3]), &z4()));
        assert_eq!(first_violation(&cube(&[0, 1, 1, 3]), &z4()), Some(0b11));
    }

    #[test]
    fn alternating_sum_examples() {
        assert_eq!(alternating_sum(&cube(&[0, 1, 1, 3]), &z4()), el(1));
        assert_eq!(alternating_sum(&CubeMap::constant(2, el(1)), &z4()), el(0));
    }

    #[test]
    fn counts_follow_product_formula() {
        let g = z4();
        assert_eq!(cube_count(0, &g), 4);
        assert_eq!(cube_count(2, &g), 128);
        assert_eq!(cube_count(3, &g), 2048);
        let cubes: Vec<_> = enumerate_cubes(2, &g).unwrap().collect();
        assert_eq!(cubes.len(), 128);
        let distinct: HashSet<_> = cubes.iter().cloned().collect();
        assert_eq!(distinct.len(), 128);
        assert!(cubes.iter().all(|q| is_hk_cube(q, &g)));
        assert_eq!(enumerate_cubes(0, &g).unwrap().total(), 4);
    }

    #[test]
    fn enumeration_restarts_from_index() {
        let g = z4();
        let all: Vec<_> = enumerate_cubes(2, &g).unwrap().collect();
        let tail: Vec<_> = enumerate_cubes(2, &g).unwrap().starting_at(100).collect();
        assert_eq!(&all[100..], &tail[..]);
    }

    #[test]
    fn enumeration_budget_is_enforced() {
        let g = z4();
        let err = enumerate_cubes_with_budget(3, &g, 1000).err().unwrap();
        assert_eq!(err, Error::EnumerationTooLarge { count: 2048, budget: 1000 });
    }

    #[test]
    fn completion_is_unique_above_degree() {
        let g = z4();
        for q in enumerate_cubes(3, &g).unwrap().step_by(37) {
            let done = complete_corner(&q.corner(), &g).unwrap();
            assert_eq!(done, q);
        }
    }

    #[test]
    fn completion_picks_zero_top_coefficient() {
        let g = z4();
        let corner = CornerMap::new(2, vec![el(0), el(1), el(1)]).unwrap();
        let done = complete_corner(&corner, &g).unwrap();
        assert_eq!(done.values[3], el(2));
        // Both completions, found by brute force over the top vertex.
        let completions: Vec<u64> = (0..4)
            .filter(|&t| is_hk_cube(&cube(&[0, 1, 1, t]), &g))
            .collect();
        assert_eq!(completions, vec![0, 2]);
        assert_eq!(moebius_coefficients(&done, &g)[3], el(0));
    }

    #[test]
    fn completion_failure_reports_subset() {
        // Level 1 is the proper subgroup 2Z/4.
        let g = FilteredGroup::new(
            2,
            2,
            vec![crate::group::CyclicFactor { m: 2, filt_exp: vec![0, 1, 2, 2] }],
        )
        .unwrap();
        let corner = CornerMap::new(2, vec![el(0), el(1), el(0)]).unwrap();
        assert_eq!(
            complete_corner(&corner, &g),
            Err(Error::CompletionFailure { subset: 0b01, level: 1 })
        );
    }

    #[test]
    fn discrete_cube_vertices() {
        let space = FpSpace::new(2, 2).unwrap();
        let spec = DiscreteCubeSpec {
            base: FpPoint(vec![0, 0]),
            edges: vec![FpPoint(vec![1, 0]), FpPoint(vec![0, 1])],
        };
        let verts: Vec<FpPoint> = spec.vertices(&space).into_iter().map(|i| space.point(i)).collect();
        assert_eq!(
            verts,
            vec![FpPoint(vec![0, 0]), FpPoint(vec![1, 0]), FpPoint(vec![0, 1]), FpPoint(vec![1, 1])]
        );
    }
}
