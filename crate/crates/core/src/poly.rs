//! Polynomial maps `F_p^n -> G`, i.e. nilspace morphisms from `D_1(F_p^n)` into
//! a group nilspace, stored as full value tables.
//!
//! Two independent membership tests are provided: one composes with every
//! discrete cube and tests the result with the Moebius criterion, the other
//! checks that all `i`-fold differences land in `G_(i)`.
//!
//! The Taylor form expands the p-periodic extension `f~ = f o (mod p)` on
//! `Z^n` in the binomial basis, `f~(x) = sum_a binom(x, a) c_a`, which is the
//! representation used to lift maps through fibrations.

use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::budget::{Budget, Check, Mode};
use crate::cube::{cube_vertices, first_violation, CubeMap};
use crate::error::{Error, Result};
use crate::group::{FilteredGroup, FpPoint, FpSpace, GroupElement};

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct PolyMap {
    pub n: usize,
    pub p: u64,
    pub group: Arc<FilteredGroup>,
    /// Values in lexicographic point order.
    pub table: Vec<GroupElement>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum MorphismWitness {
    /// `f` composed with this cube leaves the cube set at `subset`.
    Cube { base: FpPoint, edges: Vec<FpPoint>, subset: usize },
    /// The iterated difference along `directions` at `point` is not in `level`.
    Derivative { level: usize, directions: Vec<FpPoint>, point: FpPoint, value: GroupElement },
}

impl PolyMap {
    pub fn new(group: Arc<FilteredGroup>, n: usize, table: Vec<GroupElement>) -> Result<Self> {
        let space = FpSpace::new(group.p(), n)?;
        if table.len() != space.size() {
            return Err(Error::Malformed(format!(
                "table for F_{}^{n} needs {} entries, got {}",
                group.p(),
                space.size(),
                table.len()
            )));
        }
        table.iter().try_for_each(|g| group.check(g))?;
        Ok(PolyMap { n, p: group.p(), group, table })
    }

    pub fn from_fn(
        group: Arc<FilteredGroup>,
        n: usize,
        mut f: impl FnMut(&FpPoint) -> GroupElement,
    ) -> Result<Self> {
        let space = FpSpace::new(group.p(), n)?;
        let table = (0..space.size()).map(|i| f(&space.point(i))).collect();
        PolyMap::new(group, n, table)
    }

    pub fn constant(group: Arc<FilteredGroup>, n: usize, c: GroupElement) -> Result<Self> {
        let space = FpSpace::new(group.p(), n)?;
        group.check(&c)?;
        Ok(PolyMap { n, p: group.p(), table: vec![c; space.size()], group })
    }

    /// Re-validates a value deserialized from JSON.
    pub fn validate(&self) -> Result<()> {
        if self.p != self.group.p() {
            return Err(Error::GroupMismatch(format!(
                "domain prime {} differs from group prime {}",
                self.p,
                self.group.p()
            )));
        }
        PolyMap::new(self.group.clone(), self.n, self.table.clone()).map(|_| ())
    }

    pub fn space(&self) -> FpSpace {
        FpSpace { p: self.p, n: self.n }
    }

    pub fn at(&self, x: &FpPoint) -> &GroupElement {
        &self.table[self.space().index(x)]
    }

    /// `x -> f(x + z)`, with `z` given by index.
    pub fn shifted(&self, z: usize) -> PolyMap {
        let space = self.space();
        let table = (0..self.table.len()).map(|x| self.table[space.add(x, z)].clone()).collect();
        PolyMap { n: self.n, p: self.p, group: self.group.clone(), table }
    }

    /// `x -> f(x + g) - f(x)`.
    pub fn derivative(&self, g: usize) -> PolyMap {
        let space = self.space();
        let table = (0..self.table.len())
            .map(|x| self.group.sub(&self.table[space.add(x, g)], &self.table[x]))
            .collect();
        PolyMap { n: self.n, p: self.p, group: self.group.clone(), table }
    }

    pub fn compose_cube(&self, base: usize, edges: &[usize]) -> CubeMap {
        let verts = cube_vertices(&self.space(), base, edges);
        CubeMap { n: edges.len(), values: verts.into_iter().map(|v| self.table[v].clone()).collect() }
    }
}

fn tuples_total(points: u128, dims: std::ops::RangeInclusive<usize>) -> u128 {
    dims.map(|m| points.saturating_pow(m as u32 + 1)).fold(0u128, |a, b| a.saturating_add(b))
}

/// Checks `f o q` is a cube for every discrete cube `q` of dimension `1..=max_dim`.
pub fn check_morphism_cubes(f: &PolyMap, max_dim: usize, budget: &Budget) -> Check<MorphismWitness> {
    let space = f.space();
    let size = space.size();
    let total = tuples_total(size as u128, 1..=max_dim);
    let witness = |base: usize, edges: &[usize], subset: usize| MorphismWitness::Cube {
        base: space.point(base),
        edges: edges.iter().map(|&e| space.point(e)).collect(),
        subset,
    };
    if total <= budget.tuples as u128 {
        for m in 1..=max_dim {
            let mut edges = vec![0usize; m];
            loop {
                for base in 0..size {
                    let q = f.compose_cube(base, &edges);
                    if let Some(s) = first_violation(&q, &f.group) {
                        return Check::fail(Mode::Exhaustive, witness(base, &edges, s));
                    }
                }
                if !advance(&mut edges, size) {
                    break;
                }
            }
        }
        Check::pass(Mode::Exhaustive)
    } else {
        let mut rng = ChaCha8Rng::seed_from_u64(budget.seed);
        let mode = Mode::Sampled { samples: budget.samples };
        for _ in 0..budget.samples {
            let m = rng.gen_range(1..=max_dim);
            let base = rng.gen_range(0..size);
            let edges: Vec<usize> = (0..m).map(|_| rng.gen_range(0..size)).collect();
            let q = f.compose_cube(base, &edges);
            if let Some(s) = first_violation(&q, &f.group) {
                return Check::fail(mode, witness(base, &edges, s));
            }
        }
        Check::pass(mode)
    }
}

/// Odometer over `[0, size)^len`; returns false after the last tuple.
fn advance(digits: &mut [usize], size: usize) -> bool {
    for d in digits.iter_mut() {
        *d += 1;
        if *d < size {
            return true;
        }
        *d = 0;
    }
    false
}

pub fn is_morphism_cubes(f: &PolyMap, max_dim: usize) -> bool {
    check_morphism_cubes(f, max_dim, &Budget::default()).holds
}

/// Checks every `i`-fold difference lies in `G_(i + offset)` for `1 <= i <= k+1`.
///
/// With `offset = 0` this is the morphism test; with `offset = 1` applied to
/// a derivative it checks membership in the shifted filtration.
pub fn check_derivatives(f: &PolyMap, offset: usize, budget: &Budget) -> Check<MorphismWitness> {
    let k = f.group.degree();
    let space = f.space();
    let size = space.size();
    let total = tuples_total(size as u128, 1..=k + 1);
    let group = &f.group;
    if total <= budget.tuples as u128 {
        // Differences commute, so nondecreasing direction tuples suffice.
        // Lower orders are exhausted first so witnesses have minimal order.
        for depth in 1..=k + 1 {
            let mut stack: Vec<usize> = Vec::new();
            if let Some(w) = derivative_dfs(f, depth, offset, 0, &mut stack) {
                return Check::fail(Mode::Exhaustive, w);
            }
        }
        Check::pass(Mode::Exhaustive)
    } else {
        let mut rng = ChaCha8Rng::seed_from_u64(budget.seed);
        let mode = Mode::Sampled { samples: budget.samples };
        for _ in 0..budget.samples {
            let i = rng.gen_range(1..=k + 1);
            let x = rng.gen_range(0..size);
            let dirs: Vec<usize> = (0..i).map(|_| rng.gen_range(0..size)).collect();
            let verts = cube_vertices(&space, x, &dirs);
            let mut acc = group.zero();
            for (v, &pt) in verts.iter().enumerate() {
                if (i - v.count_ones() as usize).is_multiple_of(2) {
                    group.add_assign(&mut acc, &f.table[pt]);
                } else {
                    group.sub_assign(&mut acc, &f.table[pt]);
                }
            }
            if !group.in_level(&acc, i + offset) {
                return Check::fail(
                    mode,
                    MorphismWitness::Derivative {
                        level: i + offset,
                        directions: dirs.iter().map(|&d| space.point(d)).collect(),
                        point: space.point(x),
                        value: acc,
                    },
                );
            }
        }
        Check::pass(mode)
    }
}

fn derivative_dfs(
    table: &PolyMap,
    depth: usize,
    offset: usize,
    start: usize,
    stack: &mut Vec<usize>,
) -> Option<MorphismWitness> {
    let space = table.space();
    for g in start..space.size() {
        let d = table.derivative(g);
        stack.push(g);
        let found = if stack.len() == depth {
            let level = depth + offset;
            d.table.iter().position(|v| !d.group.in_level(v, level)).map(|x| MorphismWitness::Derivative {
                level,
                directions: stack.iter().map(|&s| space.point(s)).collect(),
                point: space.point(x),
                value: d.table[x].clone(),
            })
        } else {
            derivative_dfs(&d, depth, offset, g, stack)
        };
        stack.pop();
        if found.is_some() {
            return found;
        }
    }
    None
}

pub fn check_morphism_derivatives(f: &PolyMap, budget: &Budget) -> Check<MorphismWitness> {
    check_derivatives(f, 0, budget)
}

pub fn is_morphism_derivatives(f: &PolyMap) -> bool {
    check_morphism_derivatives(f, &Budget::default()).holds
}

/// A multi-index `a` in `N^n`.
pub type MultiIndex = Vec<u32>;

/// Multi-indices with `|a| <= order` and every entry `<= cap`, graded
/// lexicographic order.
pub fn multi_indices(n: usize, order: u32, cap: u32) -> Vec<MultiIndex> {
    let mut out = Vec::new();
    for total in 0..=order {
        let mut current = vec![0u32; n];
        fill(&mut out, &mut current, 0, total, cap);
    }
    out
}

fn fill(out: &mut Vec<MultiIndex>, current: &mut [u32], pos: usize, remaining: u32, cap: u32) {
    if pos == current.len() {
        if remaining == 0 {
            out.push(current.to_vec());
        }
        return;
    }
    for a in (0..=remaining.min(cap)).rev() {
        current[pos] = a;
        fill(out, current, pos + 1, remaining - a, cap);
    }
    current[pos] = 0;
}

/// Generalized binomial `binom(x, j)` for any integer `x`.
pub fn binomial(x: i64, j: u32) -> i128 {
    let mut r: i128 = 1;
    for t in 0..j as i128 {
        r = r
            .checked_mul(x as i128 - t)
            .expect("binomial coefficient overflow")
            / (t + 1);
    }
    r
}

/// `f~(x) = sum_a binom(x, a) coeff_a` on `Z^n`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TaylorForm {
    pub n: usize,
    pub p: u64,
    pub group: Arc<FilteredGroup>,
    pub coefficients: Vec<(MultiIndex, GroupElement)>,
}

impl TaylorForm {
    /// First coefficient outside `G_(|a|)`, if any.
    pub fn level_violation(&self) -> Option<&MultiIndex> {
        self.coefficients
            .iter()
            .find(|(a, c)| !self.group.in_level(c, a.iter().sum::<u32>() as usize))
            .map(|(a, _)| a)
    }

    pub fn coefficient(&self, alpha: &[u32]) -> Option<&GroupElement> {
        self.coefficients.iter().find(|(a, _)| a == alpha).map(|(_, c)| c)
    }

    pub fn evaluate(&self, x: &[i64]) -> GroupElement {
        let mut acc = self.group.zero();
        for (alpha, c) in &self.coefficients {
            let mut weight: i128 = 1;
            for (&xi, &ai) in x.iter().zip(alpha) {
                weight = weight.checked_mul(binomial(xi, ai)).expect("binomial weight overflow");
                if weight == 0 {
                    break;
                }
            }
            if weight != 0 {
                add_scaled_wide(&self.group, &mut acc, weight, c);
            }
        }
        acc
    }
}

pub(crate) fn add_scaled_wide(group: &FilteredGroup, acc: &mut GroupElement, c: i128, b: &GroupElement) {
    for (j, (x, &y)) in acc.0.iter_mut().zip(&b.0).enumerate() {
        let q = group.modulus(j) as i128;
        *x = ((*x as i128 + c.rem_euclid(q) * y as i128) % q) as u64;
    }
}

/// The box `[0, p-1]^n` in `Z^n` and its bijection with `F_p^n`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct FundamentalDomainMap {
    pub p: u64,
    pub n: usize,
}

impl FundamentalDomainMap {
    pub fn iota(&self, x: &[i64]) -> Result<FpPoint> {
        if x.len() != self.n || x.iter().any(|&c| c < 0 || c >= self.p as i64) {
            return Err(Error::Parameter(format!("{x:?} is outside the fundamental domain")));
        }
        Ok(FpPoint(x.iter().map(|&c| c as u64).collect()))
    }

    pub fn iota_inverse(&self, x: &FpPoint) -> Vec<i64> {
        x.0.iter().map(|&c| c as i64).collect()
    }
}

/// Taylor expansion of order `k` (the target degree).
pub fn taylor_expand(f: &PolyMap) -> Result<TaylorForm> {
    taylor_expand_to(f, f.group.degree() as u32)
}

/// Taylor expansion of the periodic extension up to total order `order`.
///
/// Fails unless every coefficient sits in its filtration level and the
/// expansion reproduces `f~`, which together certify `f` is a morphism.
pub fn taylor_expand_to(f: &PolyMap, order: u32) -> Result<TaylorForm> {
    let group = &f.group;
    let p = f.p as i64;
    let n = f.n;
    let space = f.space();
    let periodic = |x: &[i64]| -> &GroupElement {
        let pt = FpPoint(x.iter().map(|&c| c.rem_euclid(p) as u64).collect());
        &f.table[space.index(&pt)]
    };
    let mut coefficients = Vec::new();
    for alpha in multi_indices(n, order, order) {
        // a_alpha = sum_{beta <= alpha} (-1)^{|alpha - beta|} prod binom(alpha_i, beta_i) f~(beta)
        let mut acc = group.zero();
        let mut beta = vec![0u32; n];
        loop {
            let mut weight: i128 = 1;
            let mut parity = 0;
            for (&a, &b) in alpha.iter().zip(&beta) {
                weight *= binomial(a as i64, b);
                parity += a - b;
            }
            if parity % 2 == 1 {
                weight = -weight;
            }
            let x: Vec<i64> = beta.iter().map(|&b| b as i64).collect();
            add_scaled_wide(group, &mut acc, weight, periodic(&x));
            // next beta <= alpha
            let mut pos = 0;
            while pos < n {
                beta[pos] += 1;
                if beta[pos] <= alpha[pos] {
                    break;
                }
                beta[pos] = 0;
                pos += 1;
            }
            if pos == n {
                break;
            }
        }
        let level = alpha.iter().sum::<u32>() as usize;
        if !group.in_level(&acc, level) {
            return Err(Error::NotPHomogeneousConsistent(format!(
                "coefficient {alpha:?} = {acc} is not in level {level}"
            )));
        }
        coefficients.push((alpha, acc));
    }
    let form = TaylorForm { n, p: f.p, group: group.clone(), coefficients };

    for idx in 0..space.size() {
        let x: Vec<i64> = space.point(idx).0.iter().map(|&c| c as i64).collect();
        if &form.evaluate(&x) != periodic(&x) {
            return Err(Error::NotPHomogeneousConsistent(format!(
                "expansion disagrees with f at {x:?}"
            )));
        }
    }
    // Periodicity on the box [0, order]^n forces periodicity everywhere, since
    // a difference of degree <= order vanishing there vanishes identically.
    let side = order as usize + 1;
    let box_size = side.pow(n as u32);
    for flat in 0..box_size {
        let mut rest = flat;
        let x: Vec<i64> = (0..n)
            .map(|_| {
                let c = (rest % side) as i64;
                rest /= side;
                c
            })
            .collect();
        let here = form.evaluate(&x);
        for i in 0..n {
            let mut y = x.clone();
            y[i] += p;
            if form.evaluate(&y) != here {
                return Err(Error::NotPHomogeneousConsistent(format!(
                    "expansion is not {p}-periodic in direction {i} at {x:?}"
                )));
            }
        }
    }
    Ok(form)
}

/// Restricts a `Z^n` polynomial to `[0, p-1]^n` and reads it on `F_p^n`.
pub fn restrict_to_fundamental_domain(form: &TaylorForm) -> Result<PolyMap> {
    if let Some(alpha) = form.level_violation() {
        return Err(Error::Parameter(format!(
            "coefficient {alpha:?} is not in its filtration level"
        )));
    }
    let space = FpSpace::new(form.p, form.n)?;
    let domain = FundamentalDomainMap { p: form.p, n: form.n };
    let table = (0..space.size())
        .map(|i| form.evaluate(&domain.iota_inverse(&space.point(i))))
        .collect();
    let f = PolyMap { n: form.n, p: form.p, group: form.group.clone(), table };
    let check = check_morphism_derivatives(&f, &Budget::default());
    if let Some(w) = check.witness {
        return Err(Error::TargetNotPHomogeneous(format!("{w:?}")));
    }
    Ok(f)
}

/// Coefficients drawn uniformly from `G_(|a|)` for `|a| <= k`, `a_i <= p-1`.
pub fn random_taylor<R: Rng + ?Sized>(n: usize, group: &Arc<FilteredGroup>, rng: &mut R) -> TaylorForm {
    let k = group.degree() as u32;
    let cap = (group.p() - 1) as u32;
    let coefficients = multi_indices(n, k, cap)
        .into_iter()
        .map(|alpha| {
            let level = alpha.iter().sum::<u32>() as usize;
            let c = group.sample_level(level, rng);
            (alpha, c)
        })
        .collect();
    TaylorForm { n, p: group.p(), group: group.clone(), coefficients }
}

pub fn random_morphism(n: usize, group: &Arc<FilteredGroup>, seed: u64) -> Result<PolyMap> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    restrict_to_fundamental_domain(&random_taylor(n, group, &mut rng))
}

/// Precomposes with the projection `F_p^big -> F_p^n` onto the first `n` coordinates.
pub fn embed_gamma(f: &PolyMap, big: usize) -> Result<PolyMap> {
    if big < f.n {
        return Err(Error::Parameter(format!("cannot embed rank {} into rank {big}", f.n)));
    }
    let space = FpSpace::new(f.p, big)?;
    let stride = (f.p as usize).pow((big - f.n) as u32);
    let table = (0..space.size()).map(|i| f.table[i / stride].clone()).collect();
    Ok(PolyMap { n: big, p: f.p, group: f.group.clone(), table })
}

/// Restriction along `v -> (v, 0)`.
pub fn restrict_gamma(f: &PolyMap, small: usize) -> Result<PolyMap> {
    if small > f.n {
        return Err(Error::Parameter(format!("cannot restrict rank {} to rank {small}", f.n)));
    }
    let stride = (f.p as usize).pow((f.n - small) as u32);
    let size = (f.p as usize).pow(small as u32);
    let table = (0..size).map(|i| f.table[i * stride].clone()).collect();
    Ok(PolyMap { n: small, p: f.p, group: f.group.clone(), table })
}

/// Every table `F_p^n -> G`, in lexicographic order of tables. Test helper for
/// exhaustive small cases; fails beyond the enumeration budget.
pub fn all_maps(group: &Arc<FilteredGroup>, n: usize, budget: u64) -> Result<Vec<PolyMap>> {
    let space = FpSpace::new(group.p(), n)?;
    let count = group.order().saturating_pow(space.size() as u32);
    if count > budget as u128 {
        return Err(Error::EnumerationTooLarge { count, budget });
    }
    let elements: Vec<GroupElement> = group.elements().collect();
    let mut digits = vec![0usize; space.size()];
    let mut out = Vec::with_capacity(count as usize);
    loop {
        let table = digits.iter().map(|&d| elements[d].clone()).collect();
        out.push(PolyMap { n, p: group.p(), group: group.clone(), table });
        if !advance(&mut digits, elements.len()) {
            break;
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn z4() -> Arc<FilteredGroup> {
        Arc::new(FilteredGroup::cf(2, 2, 1).unwrap())
    }

    fn map(group: &Arc<FilteredGroup>, n: usize, vals: &[u64]) -> PolyMap {
        PolyMap::new(group.clone(), n, vals.iter().map(|&r| GroupElement(vec![r])).collect()).unwrap()
    }

    #[test]
    fn identity_on_f2_is_a_morphism() {
        let f = map(&z4(), 1, &[0, 1]);
        assert!(is_morphism_cubes(&f, 3));
        assert!(is_morphism_derivatives(&f));
    }

    #[test]
    fn product_of_coordinates_is_not() {
        // lexicographic order: 00, 01, 10, 11
        let f = map(&z4(), 2, &[0, 0, 0, 1]);
        assert!(!is_morphism_cubes(&f, 3));
        let check = check_morphism_derivatives(&f, &Budget::default());
        assert!(!check.holds);
        match check.witness.unwrap() {
            MorphismWitness::Derivative { level, .. } => assert_eq!(level, 2),
            other => panic!("unexpected witness {other:?}"),
        }
    }

    #[test]
    fn all_sixteen_maps_on_f2_are_morphisms() {
        let maps = all_maps(&z4(), 1, 1 << 20).unwrap();
        assert_eq!(maps.len(), 16);
        assert!(maps.iter().all(is_morphism_derivatives));
    }

    #[test]
    fn taylor_of_identity() {
        let f = map(&z4(), 1, &[0, 1]);
        let t = taylor_expand(&f).unwrap();
        assert_eq!(t.coefficient(&[0]), Some(&GroupElement(vec![0])));
        assert_eq!(t.coefficient(&[1]), Some(&GroupElement(vec![1])));
        assert_eq!(t.coefficient(&[2]), Some(&GroupElement(vec![2])));
        assert_eq!(restrict_to_fundamental_domain(&t).unwrap(), f);
    }

    #[test]
    fn taylor_of_constant() {
        let f = map(&z4(), 2, &[3, 3, 3, 3]);
        let t = taylor_expand(&f).unwrap();
        for (alpha, c) in &t.coefficients {
            let expect = if alpha.iter().all(|&a| a == 0) { 3 } else { 0 };
            assert_eq!(c, &GroupElement(vec![expect]));
        }
    }

    #[test]
    fn taylor_mixed_coefficient() {
        // f(00)=0, f(10)=1, f(01)=1, f(11)=2
        let f = map(&z4(), 2, &[0, 1, 1, 2]);
        let t = taylor_expand(&f).unwrap();
        assert_eq!(t.coefficient(&[1, 1]), Some(&GroupElement(vec![0])));
    }

    #[test]
    fn taylor_rejects_non_morphism() {
        let f = map(&z4(), 2, &[0, 0, 0, 1]);
        assert!(matches!(taylor_expand(&f), Err(Error::NotPHomogeneousConsistent(_))));
    }

    #[test]
    fn binomials_extend_to_negatives() {
        assert_eq!(binomial(5, 2), 10);
        assert_eq!(binomial(-1, 3), -1);
        assert_eq!(binomial(-2, 2), 3);
        assert_eq!(binomial(3, 5), 0);
    }

    #[test]
    fn multi_index_counts() {
        assert_eq!(multi_indices(2, 2, 2).len(), 6);
        assert_eq!(multi_indices(2, 2, 1).len(), 4);
        assert_eq!(multi_indices(3, 3, 3).len(), 20);
    }

    #[test]
    fn restrict_identity_and_constant() {
        let g = z4();
        let t = TaylorForm {
            n: 1,
            p: 2,
            group: g.clone(),
            coefficients: vec![(vec![0], GroupElement(vec![0])), (vec![1], GroupElement(vec![1]))],
        };
        assert_eq!(restrict_to_fundamental_domain(&t).unwrap(), map(&g, 1, &[0, 1]));
        let c = TaylorForm {
            n: 2,
            p: 2,
            group: g.clone(),
            coefficients: vec![(vec![0, 0], GroupElement(vec![3]))],
        };
        assert_eq!(restrict_to_fundamental_domain(&c).unwrap(), map(&g, 2, &[3, 3, 3, 3]));
    }

    #[test]
    fn random_morphism_is_deterministic() {
        let g = z4();
        assert_eq!(random_morphism(2, &g, 9).unwrap(), random_morphism(2, &g, 9).unwrap());
    }

    #[test]
    fn gamma_embedding() {
        let g = z4();
        let f = map(&g, 1, &[0, 1]);
        assert_eq!(embed_gamma(&f, 1).unwrap(), f);
        let big = embed_gamma(&f, 2).unwrap();
        for i in 0..4 {
            let x = big.space().point(i);
            assert_eq!(big.table[i], GroupElement(vec![x.0[0]]));
        }
        assert_eq!(restrict_gamma(&big, 1).unwrap(), f);
    }

    #[test]
    fn fundamental_domain_roundtrip() {
        let d = FundamentalDomainMap { p: 3, n: 2 };
        let x = FpPoint(vec![2, 1]);
        assert_eq!(d.iota(&d.iota_inverse(&x)).unwrap(), x);
        assert!(d.iota(&[3, 0]).is_err());
    }
}
