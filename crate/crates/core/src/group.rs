//! Finite filtered abelian p-groups.
//!
//! A group is a product of cyclic factors `Z/p^m`, each carrying a degree-`k`
//! filtration given by exponents `e_0..e_{k+1}`: the level-`i` subgroup of a
//! factor is `p^{e_i} (Z/p^m)`. Levels are stored intensionally, so membership
//! costs one divisibility test per factor.

use std::fmt;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub fn is_prime(p: u64) -> bool {
    if p < 2 {
        return false;
    }
    let mut d = 2;
    while d * d <= p {
        if p.is_multiple_of(d) {
            return false;
        }
        d += 1;
    }
    true
}

/// One cyclic factor `Z/p^m` with its filtration exponents.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct CyclicFactor {
    pub m: u32,
    pub filt_exp: Vec<u32>,
}

/// Residues, one per factor, each in `[0, p^{m_j})`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(transparent)]
pub struct GroupElement(pub Vec<u64>);

impl GroupElement {
    pub fn residues(&self) -> &[u64] {
        &self.0
    }
}

impl fmt::Display for GroupElement {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "(")?;
        for (j, r) in self.0.iter().enumerate() {
            if j > 0 {
                write!(f, ",")?;
            }
            write!(f, "{r}")?;
        }
        write!(f, ")")
    }
}

#[derive(Deserialize)]
struct RawGroup {
    p: u64,
    k: usize,
    factors: Vec<CyclicFactor>,
}

/// A finite abelian p-group with a filtration of degree `k`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "RawGroup")]
pub struct FilteredGroup {
    p: u64,
    k: usize,
    factors: Vec<CyclicFactor>,
    #[serde(skip)]
    moduli: Vec<u64>,
}

impl TryFrom<RawGroup> for FilteredGroup {
    type Error = Error;

    fn try_from(raw: RawGroup) -> Result<Self> {
        FilteredGroup::new(raw.p, raw.k, raw.factors)
    }
}

impl FilteredGroup {
    /// Validates and normalizes: exponents above `m` are clamped to `m`.
    pub fn new(p: u64, k: usize, factors: Vec<CyclicFactor>) -> Result<Self> {
        if !is_prime(p) {
            return Err(Error::Parameter(format!("{p} is not prime")));
        }
        let mut moduli = Vec::with_capacity(factors.len());
        let mut normalized = Vec::with_capacity(factors.len());
        for (j, factor) in factors.into_iter().enumerate() {
            if factor.m == 0 {
                return Err(Error::Filtration(format!("factor {j}: exponent m must be >= 1")));
            }
            let modulus = p
                .checked_pow(factor.m)
                .filter(|&q| q <= u32::MAX as u64)
                .ok_or_else(|| Error::Parameter(format!("factor {j}: {p}^{} is too large", factor.m)))?;
            if factor.filt_exp.len() != k + 2 {
                return Err(Error::Filtration(format!(
                    "factor {j}: expected {} filtration exponents, got {}",
                    k + 2,
                    factor.filt_exp.len()
                )));
            }
            if factor.filt_exp[0] != 0 {
                return Err(Error::Filtration(format!("factor {j}: level 0 must be the whole group")));
            }
            if let Some(i) = factor.filt_exp.windows(2).position(|w| w[0] > w[1]) {
                return Err(Error::Filtration(format!(
                    "factor {j}: level {} is not contained in level {i}",
                    i + 1
                )));
            }
            if factor.filt_exp[k + 1] < factor.m {
                return Err(Error::Filtration(format!("factor {j}: level {} is not trivial", k + 1)));
            }
            let filt_exp = factor.filt_exp.iter().map(|&e| e.min(factor.m)).collect();
            moduli.push(modulus);
            normalized.push(CyclicFactor { m: factor.m, filt_exp });
        }
        Ok(FilteredGroup { p, k, factors: normalized, moduli })
    }

    /// The cyclic group of order `p^{floor((k-l)/(p-1))+1}` whose levels are the
    /// whole group up to `l` and `p^{floor((i-l-1)/(p-1))+1}` multiples above.
    pub fn cf(p: u64, k: usize, l: usize) -> Result<Self> {
        if !is_prime(p) {
            return Err(Error::Parameter(format!("{p} is not prime")));
        }
        if l < 1 || l > k {
            return Err(Error::Parameter(format!("l = {l} outside [1, {k}]")));
        }
        let step = (p - 1) as usize;
        let m = ((k - l) / step + 1) as u32;
        let filt_exp = (0..=k + 1)
            .map(|i| if i <= l { 0 } else { m.min(((i - l - 1) / step + 1) as u32) })
            .collect();
        FilteredGroup::new(p, k, vec![CyclicFactor { m, filt_exp }])
    }

    /// Finite truncation of `H_{p,k}`: `widths[l-1]` copies of `cf(p, k, l)`.
    pub fn hpk(p: u64, k: usize, widths: &[usize]) -> Result<Self> {
        if widths.len() != k {
            return Err(Error::Parameter(format!("expected {k} widths, got {}", widths.len())));
        }
        if !is_prime(p) {
            return Err(Error::Parameter(format!("{p} is not prime")));
        }
        let mut factors = Vec::new();
        for (idx, &c) in widths.iter().enumerate() {
            if c == 0 {
                continue;
            }
            let single = FilteredGroup::cf(p, k, idx + 1)?;
            factors.extend(std::iter::repeat_n(single.factors[0].clone(), c));
        }
        FilteredGroup::new(p, k, factors)
    }

    /// `D_d(Z/p^m)`: every level up to `d` is the whole group.
    pub fn constant_filtration(p: u64, m: u32, d: usize) -> Result<Self> {
        let filt_exp = (0..=d + 1).map(|i| if i <= d { 0 } else { m }).collect();
        FilteredGroup::new(p, d, vec![CyclicFactor { m, filt_exp }])
    }

    /// Parses inline JSON or the shorthands `cf:p,k,l` and `hpk:p,k,c1,...,ck`.
    pub fn parse(spec: &str) -> Result<Self> {
        let spec = spec.trim();
        if spec.starts_with('{') {
            return Ok(serde_json::from_str(spec)?);
        }
        let (kind, rest) = spec
            .split_once(':')
            .ok_or_else(|| Error::Malformed(format!("unrecognized group descriptor `{spec}`")))?;
        let nums = rest
            .split(',')
            .map(|s| s.trim().parse::<u64>())
            .collect::<std::result::Result<Vec<_>, _>>()
            .map_err(|e| Error::Malformed(format!("`{spec}`: {e}")))?;
        match kind {
            "cf" if nums.len() == 3 => FilteredGroup::cf(nums[0], nums[1] as usize, nums[2] as usize),
            "hpk" if nums.len() >= 2 => {
                let widths: Vec<usize> = nums[2..].iter().map(|&c| c as usize).collect();
                FilteredGroup::hpk(nums[0], nums[1] as usize, &widths)
            }
            _ => Err(Error::Malformed(format!("unrecognized group descriptor `{spec}`"))),
        }
    }

    pub fn p(&self) -> u64 {
        self.p
    }

    pub fn degree(&self) -> usize {
        self.k
    }

    pub fn factors(&self) -> &[CyclicFactor] {
        &self.factors
    }

    pub fn rank(&self) -> usize {
        self.factors.len()
    }

    pub fn modulus(&self, j: usize) -> u64 {
        self.moduli[j]
    }

    pub fn moduli(&self) -> &[u64] {
        &self.moduli
    }

    pub fn order(&self) -> u128 {
        self.moduli.iter().map(|&q| q as u128).product()
    }

    /// Exponent `e_i` of factor `j`; levels above `k+1` read as trivial.
    pub fn level_exp(&self, j: usize, i: usize) -> u32 {
        let f = &self.factors[j];
        f.filt_exp.get(i).copied().unwrap_or(f.m)
    }

    /// `p^{e_i}` for factor `j`; the generator of that factor's level-`i` subgroup.
    pub fn level_step(&self, j: usize, i: usize) -> u64 {
        self.p.pow(self.level_exp(j, i))
    }

    /// Number of elements of factor `j` at level `i`.
    pub fn factor_level_order(&self, j: usize, i: usize) -> u64 {
        self.p.pow(self.factors[j].m - self.level_exp(j, i))
    }

    pub fn level_order(&self, i: usize) -> u128 {
        (0..self.rank()).map(|j| self.factor_level_order(j, i) as u128).product()
    }

    /// `p^M` with `M` the largest factor exponent; characters take values in
    /// the `p^M`-th roots of unity.
    pub fn exponent(&self) -> u64 {
        self.moduli.iter().copied().max().unwrap_or(1)
    }

    pub fn zero(&self) -> GroupElement {
        GroupElement(vec![0; self.rank()])
    }

    pub fn is_valid(&self, g: &GroupElement) -> bool {
        g.0.len() == self.rank() && g.0.iter().zip(&self.moduli).all(|(&r, &q)| r < q)
    }

    pub fn check(&self, g: &GroupElement) -> Result<()> {
        if self.is_valid(g) {
            Ok(())
        } else {
            Err(Error::GroupMismatch(format!("{g} is not an element of a group with moduli {:?}", self.moduli)))
        }
    }

    /// Reduces arbitrary integers into canonical residues.
    pub fn element(&self, residues: &[i64]) -> Result<GroupElement> {
        if residues.len() != self.rank() {
            return Err(Error::GroupMismatch(format!(
                "expected {} residues, got {}",
                self.rank(),
                residues.len()
            )));
        }
        Ok(GroupElement(
            residues
                .iter()
                .zip(&self.moduli)
                .map(|(&r, &q)| r.rem_euclid(q as i64) as u64)
                .collect(),
        ))
    }

    pub fn add(&self, a: &GroupElement, b: &GroupElement) -> GroupElement {
        GroupElement(
            a.0.iter()
                .zip(&b.0)
                .zip(&self.moduli)
                .map(|((&x, &y), &q)| (x + y) % q)
                .collect(),
        )
    }

    pub fn add_assign(&self, a: &mut GroupElement, b: &GroupElement) {
        for ((x, &y), &q) in a.0.iter_mut().zip(&b.0).zip(&self.moduli) {
            *x = (*x + y) % q;
        }
    }

    pub fn sub(&self, a: &GroupElement, b: &GroupElement) -> GroupElement {
        GroupElement(
            a.0.iter()
                .zip(&b.0)
                .zip(&self.moduli)
                .map(|((&x, &y), &q)| (x + q - y) % q)
                .collect(),
        )
    }

    pub fn sub_assign(&self, a: &mut GroupElement, b: &GroupElement) {
        for ((x, &y), &q) in a.0.iter_mut().zip(&b.0).zip(&self.moduli) {
            *x = (*x + q - y) % q;
        }
    }

    pub fn neg(&self, a: &GroupElement) -> GroupElement {
        GroupElement(a.0.iter().zip(&self.moduli).map(|(&x, &q)| (q - x) % q).collect())
    }

    pub fn scalar_mul(&self, c: i64, a: &GroupElement) -> GroupElement {
        GroupElement(
            a.0.iter()
                .zip(&self.moduli)
                .map(|(&x, &q)| {
                    let c = c.rem_euclid(q as i64) as u128;
                    ((c * x as u128) % q as u128) as u64
                })
                .collect(),
        )
    }

    /// Adds `c * b` into `acc`.
    pub fn add_scaled(&self, acc: &mut GroupElement, c: i64, b: &GroupElement) {
        for ((x, &y), &q) in acc.0.iter_mut().zip(&b.0).zip(&self.moduli) {
            let c = c.rem_euclid(q as i64) as u128;
            *x = ((*x as u128 + c * y as u128) % q as u128) as u64;
        }
    }

    pub fn is_zero(&self, a: &GroupElement) -> bool {
        a.0.iter().all(|&r| r == 0)
    }

    /// Membership in the level-`i` subgroup, `0 <= i <= k+1`.
    pub fn subgroup_member(&self, g: &GroupElement, i: usize) -> Result<bool> {
        if i > self.k + 1 {
            return Err(Error::LevelOutOfRange { level: i, max: self.k + 1 });
        }
        self.check(g)?;
        Ok(self.in_level(g, i))
    }

    /// Membership without range checks; levels above `k+1` are trivial.
    pub fn in_level(&self, g: &GroupElement, i: usize) -> bool {
        g.0.iter()
            .enumerate()
            .all(|(j, &r)| r % self.level_step(j, i) == 0)
    }

    /// Largest `i <= k+1` with `g` in the level-`i` subgroup.
    pub fn filtration_level(&self, g: &GroupElement) -> usize {
        (0..=self.k + 1).rev().find(|&i| self.in_level(g, i)).unwrap_or(0)
    }

    /// Generators `p^{e_i} * epsilon_j` of the level-`i` subgroup, one per factor.
    pub fn level_generators(&self, i: usize) -> Vec<GroupElement> {
        (0..self.rank())
            .map(|j| {
                let mut g = self.zero();
                g.0[j] = self.level_step(j, i) % self.moduli[j];
                g
            })
            .collect()
    }

    pub fn uniform_sample(&self, seed: u64) -> GroupElement {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        self.sample(&mut rng)
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> GroupElement {
        self.sample_level(0, rng)
    }

    /// Uniform element of the level-`i` subgroup.
    pub fn sample_level<R: Rng + ?Sized>(&self, i: usize, rng: &mut R) -> GroupElement {
        GroupElement(
            (0..self.rank())
                .map(|j| rng.gen_range(0..self.factor_level_order(j, i)) * self.level_step(j, i) % self.moduli[j])
                .collect(),
        )
    }

    /// Elements of the level-`i` subgroup in lexicographic residue order.
    pub fn level_elements(&self, i: usize) -> LevelElements {
        let radix: Vec<u64> = (0..self.rank()).map(|j| self.factor_level_order(j, i)).collect();
        let steps: Vec<u64> = (0..self.rank()).map(|j| self.level_step(j, i)).collect();
        LevelElements { digits: vec![0; radix.len()], radix, steps, done: false }
    }

    pub fn elements(&self) -> LevelElements {
        self.level_elements(0)
    }

    /// Levels `i` and `i+1` are compared by inclusion of generators.
    pub fn is_monotone(&self) -> bool {
        (0..=self.k).all(|i| {
            self.level_generators(i + 1)
                .iter()
                .all(|g| self.in_level(g, i))
        })
    }
}

pub struct LevelElements {
    digits: Vec<u64>,
    radix: Vec<u64>,
    steps: Vec<u64>,
    done: bool,
}

impl Iterator for LevelElements {
    type Item = GroupElement;

    fn next(&mut self) -> Option<GroupElement> {
        if self.done {
            return None;
        }
        let out = GroupElement(self.digits.iter().zip(&self.steps).map(|(&d, &s)| d * s).collect());
        // Last factor is the fastest digit.
        let mut pos = self.digits.len();
        loop {
            if pos == 0 {
                self.done = true;
                break;
            }
            pos -= 1;
            self.digits[pos] += 1;
            if self.digits[pos] < self.radix[pos] {
                break;
            }
            self.digits[pos] = 0;
        }
        Some(out)
    }
}

/// A point of `F_p^n`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(transparent)]
pub struct FpPoint(pub Vec<u64>);

/// The ambient `F_p^n`, with points indexed lexicographically (first
/// coordinate most significant).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct FpSpace {
    pub p: u64,
    pub n: usize,
}

impl FpSpace {
    pub fn new(p: u64, n: usize) -> Result<Self> {
        if !is_prime(p) {
            return Err(Error::Parameter(format!("{p} is not prime")));
        }
        p.checked_pow(n as u32)
            .filter(|&s| s <= (1 << 32))
            .ok_or_else(|| Error::Parameter(format!("F_{p}^{n} is too large to tabulate")))?;
        Ok(FpSpace { p, n })
    }

    pub fn size(&self) -> usize {
        self.p.pow(self.n as u32) as usize
    }

    pub fn index(&self, x: &FpPoint) -> usize {
        x.0.iter().fold(0, |acc, &c| acc * self.p as usize + c as usize)
    }

    pub fn point(&self, mut idx: usize) -> FpPoint {
        let mut coords = vec![0; self.n];
        for c in coords.iter_mut().rev() {
            *c = (idx % self.p as usize) as u64;
            idx /= self.p as usize;
        }
        FpPoint(coords)
    }

    pub fn contains(&self, x: &FpPoint) -> bool {
        x.0.len() == self.n && x.0.iter().all(|&c| c < self.p)
    }

    pub fn check(&self, x: &FpPoint) -> Result<()> {
        if self.contains(x) {
            Ok(())
        } else {
            Err(Error::Parameter(format!("{:?} is not a point of F_{}^{}", x.0, self.p, self.n)))
        }
    }

    /// Digit-wise addition on indices.
    pub fn add(&self, a: usize, b: usize) -> usize {
        let p = self.p as usize;
        let (mut a, mut b) = (a, b);
        let mut out = 0;
        let mut place = 1;
        for _ in 0..self.n {
            out += ((a % p + b % p) % p) * place;
            a /= p;
            b /= p;
            place *= p;
        }
        out
    }

    pub fn scale(&self, c: u64, a: usize) -> usize {
        let p = self.p as usize;
        let c = (c % self.p) as usize;
        let mut a = a;
        let mut out = 0;
        let mut place = 1;
        for _ in 0..self.n {
            out += ((a % p) * c % p) * place;
            a /= p;
            place *= p;
        }
        out
    }

    pub fn neg(&self, a: usize) -> usize {
        self.scale(self.p - 1, a)
    }

    /// Index of the `i`-th standard basis vector.
    pub fn basis(&self, i: usize) -> usize {
        (self.p as usize).pow((self.n - 1 - i) as u32)
    }

    pub fn zero(&self) -> usize {
        0
    }
}
