//! Characters, phase-polynomial observables `h_{z,chi}(f) = chi(f(z))` on
//! orbits, multiplicative derivatives, and finite Abramov certification.
//!
//! A unit-modulus value is stored as an index `e` standing for
//! `exp(2 pi i e / N)`, where `N` is the exponent of the character's group.
//! Multiplication is index addition and conjugation is negation.

use std::collections::HashSet;
use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::budget::{Budget, Check, Mode};
use crate::cube::{alternating_sum, cube_vertices};
use crate::cyclotomic::{root_matrix_rank, CyclotomicNumber};
use crate::dynamics::Orbit;
use crate::error::{Error, Result};
use crate::group::{FilteredGroup, FpPoint, FpSpace, GroupElement};
use crate::poly::PolyMap;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Character {
    pub group: Arc<FilteredGroup>,
    pub exponents: Vec<u64>,
}

impl Character {
    pub fn new(group: Arc<FilteredGroup>, exponents: Vec<u64>) -> Result<Self> {
        if exponents.len() != group.rank() {
            return Err(Error::Parameter(format!(
                "character needs {} exponents, got {}",
                group.rank(),
                exponents.len()
            )));
        }
        let exponents = exponents.iter().enumerate().map(|(j, &e)| e % group.modulus(j)).collect();
        Ok(Character { group, exponents })
    }

    pub fn trivial(group: Arc<FilteredGroup>) -> Self {
        let exponents = vec![0; group.rank()];
        Character { group, exponents }
    }

    /// One character of full order per cyclic factor.
    pub fn generating_set(group: &Arc<FilteredGroup>) -> Vec<Character> {
        (0..group.rank())
            .map(|j| {
                let mut e = vec![0; group.rank()];
                e[j] = 1;
                Character { group: group.clone(), exponents: e }
            })
            .collect()
    }

    /// Every character of the group.
    pub fn all(group: &Arc<FilteredGroup>) -> Vec<Character> {
        group
            .elements()
            .map(|g| Character { group: group.clone(), exponents: g.0 })
            .collect()
    }

    /// `N`: values are `N`-th roots of unity.
    pub fn order(&self) -> u64 {
        self.group.exponent()
    }

    pub fn index(&self, g: &GroupElement) -> u64 {
        let n = self.order();
        self.exponents
            .iter()
            .zip(&g.0)
            .enumerate()
            .fold(0u64, |acc, (j, (&e, &x))| {
                let scale = n / self.group.modulus(j);
                ((acc as u128 + e as u128 * x as u128 * scale as u128) % n as u128) as u64
            })
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PhasePolyObservable {
    pub z: FpPoint,
    pub chi: Character,
}

impl PhasePolyObservable {
    /// `chi(f(z))` as a root index.
    pub fn evaluate(&self, f: &PolyMap) -> Result<u64> {
        if *f.group != *self.chi.group {
            return Err(Error::GroupMismatch("character and map use different groups".into()));
        }
        let space = f.space();
        if self.z.0.len() != f.n {
            return Err(Error::Parameter(format!("point of rank {} for a map of rank {}", self.z.0.len(), f.n)));
        }
        space.check(&self.z)?;
        Ok(self.chi.index(&f.table[space.index(&self.z)]))
    }

    /// `h_{z,chi}` for every `z` and every `chi` in a generating set.
    pub fn generating_family(n: usize, group: &Arc<FilteredGroup>) -> Result<Vec<PhasePolyObservable>> {
        let space = FpSpace::new(group.p(), n)?;
        let chars = Character::generating_set(group);
        Ok((0..space.size())
            .flat_map(|z| {
                let z = space.point(z);
                chars.iter().map(move |chi| PhasePolyObservable { z: z.clone(), chi: chi.clone() })
            })
            .collect())
    }
}

/// Root indices mod `order`, one per orbit point.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FunctionOnOrbit {
    pub order: u64,
    pub values: Vec<u64>,
}

impl FunctionOnOrbit {
    pub fn from_observable(orbit: &Orbit, obs: &PhasePolyObservable) -> Result<Self> {
        let values = orbit.points.iter().map(|f| obs.evaluate(f)).collect::<Result<_>>()?;
        Ok(FunctionOnOrbit { order: obs.chi.order(), values })
    }

    pub fn is_constant_one(&self) -> bool {
        self.values.iter().all(|&e| e == 0)
    }
}

/// `Delta_z F(y) = F(z.y) conj(F(y))`.
pub fn mult_derivative(orbit: &Orbit, f: &FunctionOnOrbit, z: &FpPoint) -> FunctionOnOrbit {
    let n = f.order;
    let values = (0..orbit.size)
        .map(|y| (f.values[orbit.act(z, y)] + n - f.values[y]) % n)
        .collect();
    FunctionOnOrbit { order: n, values }
}

/// Iterated derivative `Delta_{z_r} .. Delta_{z_1} F`.
pub fn iterated_derivative(orbit: &Orbit, f: &FunctionOnOrbit, zs: &[FpPoint]) -> FunctionOnOrbit {
    zs.iter().fold(f.clone(), |acc, z| mult_derivative(orbit, &acc, z))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "snake_case")]
pub enum PhaseMode {
    /// Generator tuples only.
    Exhaustive,
    /// Arbitrary tuples drawn from the seed.
    Sampled { samples: u64, seed: u64 },
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PhaseWitness {
    pub directions: Vec<FpPoint>,
    pub point: usize,
    pub value: u64,
}

/// All `(k+1)`-fold multiplicative derivatives of `F` vanish.
///
/// Exhaustive mode runs over nondecreasing tuples of basis vectors. This is
/// enough because `Delta_{z+w} F = T_w(Delta_z F) . Delta_w F`, so the
/// derivatives along any tuple are products of translates of derivatives
/// along basis tuples; [`is_phase_polynomial_full`] checks the same property
/// over all tuples.
pub fn is_phase_polynomial(orbit: &Orbit, f: &FunctionOnOrbit, k: usize, mode: PhaseMode) -> Check<PhaseWitness> {
    let space = orbit.base.space();
    match mode {
        PhaseMode::Exhaustive => {
            let basis: Vec<FpPoint> = (0..space.n).map(|i| space.point(space.basis(i))).collect();
            match first_nonvanishing(orbit, f, &basis, k + 1) {
                Some(w) => Check::fail(Mode::Exhaustive, w),
                None => Check::pass(Mode::Exhaustive),
            }
        }
        PhaseMode::Sampled { samples, seed } => {
            let m = Mode::Sampled { samples };
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            for _ in 0..samples {
                let zs: Vec<FpPoint> = (0..=k).map(|_| space.point(rng.gen_range(0..space.size()))).collect();
                let y = rng.gen_range(0..orbit.size);
                let d = iterated_derivative(orbit, f, &zs);
                if d.values[y] != 0 {
                    return Check::fail(m, PhaseWitness { directions: zs, point: y, value: d.values[y] });
                }
            }
            Check::pass(m)
        }
    }
}

/// Same property over every tuple of `F_p^n`, nondecreasing in index order.
pub fn is_phase_polynomial_full(orbit: &Orbit, f: &FunctionOnOrbit, k: usize, budget: &Budget) -> Result<Check<PhaseWitness>> {
    let space = orbit.base.space();
    let tuples = (space.size() as u128).saturating_pow(k as u32 + 1);
    if tuples > budget.tuples as u128 {
        return Err(Error::EnumerationTooLarge { count: tuples, budget: budget.tuples });
    }
    let all: Vec<FpPoint> = (0..space.size()).map(|z| space.point(z)).collect();
    Ok(match first_nonvanishing(orbit, f, &all, k + 1) {
        Some(w) => Check::fail(Mode::Exhaustive, w),
        None => Check::pass(Mode::Exhaustive),
    })
}

fn first_nonvanishing(orbit: &Orbit, f: &FunctionOnOrbit, dirs: &[FpPoint], depth: usize) -> Option<PhaseWitness> {
    fn go(
        orbit: &Orbit,
        f: &FunctionOnOrbit,
        dirs: &[FpPoint],
        depth: usize,
        start: usize,
        stack: &mut Vec<usize>,
    ) -> Option<PhaseWitness> {
        if stack.len() == depth {
            return f.values.iter().position(|&e| e != 0).map(|y| PhaseWitness {
                directions: stack.iter().map(|&i| dirs[i].clone()).collect(),
                point: y,
                value: f.values[y],
            });
        }
        for i in start..dirs.len() {
            let d = mult_derivative(orbit, f, &dirs[i]);
            stack.push(i);
            let found = go(orbit, &d, dirs, depth, i, stack);
            stack.pop();
            if found.is_some() {
                return found;
            }
        }
        None
    }
    if depth == 0 || dirs.is_empty() {
        return f.values.iter().position(|&e| e != 0).map(|y| PhaseWitness {
            directions: Vec::new(),
            point: y,
            value: f.values[y],
        });
    }
    go(orbit, f, dirs, depth, 0, &mut Vec::new())
}

/// `chi((-1)^r sum_v (-1)^{|v|} f(z + v.w))`, the value that
/// `Delta_{w_r} .. Delta_{w_1} h_{z,chi}` takes at `f`.
pub fn cube_identity_index(f: &PolyMap, obs: &PhasePolyObservable, ws: &[FpPoint]) -> u64 {
    let space = f.space();
    let edges: Vec<usize> = ws.iter().map(|w| space.index(w)).collect();
    let q = f.compose_cube(space.index(&obs.z), &edges);
    let mut s = alternating_sum(&q, &f.group);
    if ws.len() % 2 == 1 {
        s = f.group.neg(&s);
    }
    obs.chi.index(&s)
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AbramovRank {
    pub orbit_size: usize,
    /// Dimension of the unital algebra generated by the observables.
    pub rank: usize,
    /// Rank over `Q(zeta_N)` of the observable matrix itself.
    pub span_rank: usize,
    pub is_abramov: bool,
}

/// The algebra generated by functions on a finite set consists of all
/// functions constant on the fibres of the joint value map, so its dimension
/// is the number of distinct value tuples.
pub fn abramov_rank(orbit: &Orbit, observables: &[PhasePolyObservable]) -> Result<AbramovRank> {
    let rows: Vec<FunctionOnOrbit> =
        observables.iter().map(|o| FunctionOnOrbit::from_observable(orbit, o)).collect::<Result<_>>()?;
    let order = orbit.base.group.exponent();
    let columns: HashSet<Vec<u64>> =
        (0..orbit.size).map(|y| rows.iter().map(|r| r.values[y]).collect()).collect();
    let matrix: Vec<Vec<u64>> = rows.iter().map(|r| r.values.clone()).collect();
    let span_rank = root_matrix_rank(order, &matrix);
    let rank = columns.len().max(1);
    Ok(AbramovRank { orbit_size: orbit.size, rank, span_rank, is_abramov: rank == orbit.size })
}

/// Two distinct points separated by no observable, if any.
pub fn unseparated_pair(orbit: &Orbit, observables: &[PhasePolyObservable]) -> Result<Option<(usize, usize)>> {
    let rows: Vec<FunctionOnOrbit> =
        observables.iter().map(|o| FunctionOnOrbit::from_observable(orbit, o)).collect::<Result<_>>()?;
    for a in 0..orbit.size {
        for b in a + 1..orbit.size {
            if rows.iter().all(|r| r.values[a] == r.values[b]) {
                return Ok(Some((a, b)));
            }
        }
    }
    Ok(None)
}

/// `z -> F(shift(f0, z))` for an observable `F = h_{w,chi}`, i.e. `z -> chi(f0(w + z))`.
pub fn pullback(f0: &PolyMap, obs: &PhasePolyObservable) -> Result<Vec<u64>> {
    let space = f0.space();
    let w = space.index(&obs.z);
    obs.evaluate(f0)?;
    Ok((0..space.size()).map(|z| obs.chi.index(&f0.table[space.add(w, z)])).collect())
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GowersValue {
    pub value: CyclotomicNumber,
    pub value_re: f64,
    pub mode: Mode,
}

/// Average over `x, h_1..h_d` of `prod_v C^{|v|} F(x + v.h)` for a function
/// `F` on `F_p^n` given by root indices mod `order`.
pub fn gowers_box_check(
    space: &FpSpace,
    values: &[u64],
    order: u64,
    d: usize,
    budget: &Budget,
) -> Result<GowersValue> {
    if d == 0 {
        return Err(Error::Parameter("box norm needs d >= 1".into()));
    }
    if values.len() != space.size() {
        return Err(Error::Malformed("one value per point is required".into()));
    }
    let size = space.size();
    let terms = (size as u128).saturating_pow(d as u32 + 1);
    let mut hist = vec![0u64; order as usize];
    let term = |x: usize, hs: &[usize]| -> usize {
        let verts = cube_vertices(space, x, hs);
        let mut e = 0u64;
        for (v, &pt) in verts.iter().enumerate() {
            let s = values[pt] % order;
            e = if v.count_ones() % 2 == 0 { (e + s) % order } else { (e + order - s) % order };
        }
        e as usize
    };
    let (total, mode) = if terms <= budget.tuples as u128 {
        let mut digits = vec![0usize; d + 1];
        loop {
            hist[term(digits[0], &digits[1..])] += 1;
            let mut pos = 0;
            while pos <= d {
                digits[pos] += 1;
                if digits[pos] < size {
                    break;
                }
                digits[pos] = 0;
                pos += 1;
            }
            if pos > d {
                break;
            }
        }
        (terms as u64, Mode::Exhaustive)
    } else {
        let mut rng = ChaCha8Rng::seed_from_u64(budget.seed);
        for _ in 0..budget.samples {
            let x = rng.gen_range(0..size);
            let hs: Vec<usize> = (0..d).map(|_| rng.gen_range(0..size)).collect();
            hist[term(x, &hs)] += 1;
        }
        (budget.samples, Mode::Sampled { samples: budget.samples })
    };
    let value = CyclotomicNumber::from_histogram(order, &hist, total);
    let value_re = value.to_complex().0;
    Ok(GowersValue { value, value_re, mode })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dynamics::orbit_closure;

    fn z4() -> Arc<FilteredGroup> {
        Arc::new(FilteredGroup::cf(2, 2, 1).unwrap())
    }

    fn identity_orbit() -> Orbit {
        let f = PolyMap::new(z4(), 1, vec![GroupElement(vec![0]), GroupElement(vec![1])]).unwrap();
        orbit_closure(&f)
    }

    fn obs(z: u64) -> PhasePolyObservable {
        PhasePolyObservable { z: FpPoint(vec![z]), chi: Character::new(z4(), vec![1]).unwrap() }
    }

    #[test]
    fn evaluation() {
        let orbit = identity_orbit();
        assert_eq!(obs(0).evaluate(&orbit.base).unwrap(), 0);
        assert_eq!(obs(1).evaluate(&orbit.base).unwrap(), 1);
        let trivial = PhasePolyObservable { z: FpPoint(vec![1]), chi: Character::trivial(z4()) };
        assert_eq!(trivial.evaluate(&orbit.base).unwrap(), 0);
    }

    #[test]
    fn worked_derivatives() {
        let orbit = identity_orbit();
        let f = FunctionOnOrbit::from_observable(&orbit, &obs(0)).unwrap();
        let one = FpPoint(vec![1]);
        let d1 = mult_derivative(&orbit, &f, &one);
        assert_eq!(d1.values, vec![1, 3]);
        let d2 = mult_derivative(&orbit, &d1, &one);
        assert_eq!(d2.values, vec![2, 2]);
        let d3 = mult_derivative(&orbit, &d2, &one);
        assert!(d3.is_constant_one());
        assert!(is_phase_polynomial(&orbit, &f, 2, PhaseMode::Exhaustive).holds);
        assert!(!is_phase_polynomial(&orbit, &f, 1, PhaseMode::Exhaustive).holds);
    }

    #[test]
    fn ranks_on_two_point_orbit() {
        let orbit = identity_orbit();
        let all: Vec<PhasePolyObservable> = Character::all(&z4())
            .into_iter()
            .map(|chi| PhasePolyObservable { z: FpPoint(vec![0]), chi })
            .collect();
        let r = abramov_rank(&orbit, &all).unwrap();
        assert_eq!((r.rank, r.span_rank, r.is_abramov), (2, 2, true));
        let trivial = [PhasePolyObservable { z: FpPoint(vec![0]), chi: Character::trivial(z4()) }];
        assert_eq!(abramov_rank(&orbit, &trivial).unwrap().rank, 1);
    }

    #[test]
    fn gowers_of_phase_polynomial_is_one() {
        let orbit = identity_orbit();
        let space = orbit.base.space();
        let values = pullback(&orbit.base, &obs(0)).unwrap();
        let g = gowers_box_check(&space, &values, 4, 3, &Budget::default()).unwrap();
        assert!(g.value.is_one());
        let g = gowers_box_check(&space, &[0, 0], 4, 2, &Budget::default()).unwrap();
        assert!(g.value.is_one());
    }

    #[test]
    fn gowers_detects_perturbation() {
        let space = FpSpace::new(2, 2).unwrap();
        // (-1)^{x_1 x_2} has U^2 norm below 1.
        let values = [0, 0, 0, 2];
        let g = gowers_box_check(&space, &values, 4, 2, &Budget::default()).unwrap();
        assert!(g.value_re < 1.0);
    }
}
