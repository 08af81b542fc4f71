//! The shift action of `F_p^n` on polynomial maps, finite orbit closures,
//! finite systems, factor maps and invariant measures.

use std::collections::HashMap;
use std::sync::Arc;

use num_rational::Ratio;
use num_traits::{One, Zero};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::abramov::Character;
use crate::cube::{alternating_sum, cube_vertices};
use crate::cyclotomic::CyclotomicNumber;
use crate::error::{Error, Result};
use crate::fibration::FilteredHom;
use crate::group::{FilteredGroup, FpPoint, FpSpace, GroupElement};
use crate::poly::{multi_indices, restrict_gamma, restrict_to_fundamental_domain, PolyMap, TaylorForm};

/// `x -> f(x + z)`.
pub fn shift(f: &PolyMap, z: &FpPoint) -> Result<PolyMap> {
    let space = f.space();
    if z.0.len() != f.n {
        return Err(Error::Parameter(format!("shift of rank {} applied to rank {}", z.0.len(), f.n)));
    }
    space.check(z)?;
    Ok(f.shifted(space.index(z)))
}

/// The orbit of a map under all shifts, with the permutation each basis
/// vector induces on it.
#[derive(Debug, Clone, Serialize)]
pub struct Orbit {
    pub base: PolyMap,
    pub size: usize,
    pub points: Vec<PolyMap>,
    /// `transitions[i][a]` is the index of `shift(points[a], e_i)`.
    pub transitions: Vec<Vec<usize>>,
    #[serde(skip)]
    index: HashMap<PolyMap, usize>,
}

impl Orbit {
    pub fn index_of(&self, f: &PolyMap) -> Option<usize> {
        self.index.get(f).copied()
    }

    pub fn rank(&self) -> usize {
        self.base.n
    }

    /// Index of `z . points[a]`.
    pub fn act(&self, z: &FpPoint, a: usize) -> usize {
        let mut at = a;
        for (i, &c) in z.0.iter().enumerate() {
            for _ in 0..c {
                at = self.transitions[i][at];
            }
        }
        at
    }

    pub fn system(&self) -> FiniteSystem {
        let group = self.base.group.clone();
        let labels = self.points.iter().map(|f| f.table[0].clone()).collect();
        FiniteSystem {
            p: self.base.p,
            n: self.base.n,
            num_points: self.size,
            action: self.transitions.clone(),
            labels: Some(Labels { group, values: labels }),
        }
    }
}

pub fn orbit_closure(f: &PolyMap) -> Orbit {
    let space = f.space();
    let gens: Vec<usize> = (0..f.n).map(|i| space.basis(i)).collect();
    let mut points = vec![f.clone()];
    let mut index = HashMap::from([(f.clone(), 0usize)]);
    let mut transitions = vec![Vec::new(); f.n];
    let mut a = 0;
    while a < points.len() {
        for (i, &g) in gens.iter().enumerate() {
            let next = points[a].shifted(g);
            let b = match index.get(&next) {
                Some(&b) => b,
                None => {
                    let b = points.len();
                    index.insert(next.clone(), b);
                    points.push(next);
                    b
                }
            };
            transitions[i].push(b);
        }
        a += 1;
    }
    Orbit { base: f.clone(), size: points.len(), points, transitions, index }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Labels {
    pub group: Arc<FilteredGroup>,
    pub values: Vec<GroupElement>,
}

/// Points `0..num_points` with one permutation per generator of `F_p^n`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FiniteSystem {
    pub p: u64,
    pub n: usize,
    pub num_points: usize,
    pub action: Vec<Vec<usize>>,
    pub labels: Option<Labels>,
}

impl FiniteSystem {
    pub fn new(p: u64, num_points: usize, action: Vec<Vec<usize>>, labels: Option<Labels>) -> Result<Self> {
        let sys = FiniteSystem { p, n: action.len(), num_points, action, labels };
        sys.validate()?;
        Ok(sys)
    }

    pub fn validate(&self) -> Result<()> {
        FpSpace::new(self.p, self.n)?;
        if self.action.len() != self.n {
            return Err(Error::Malformed("one permutation per generator is required".into()));
        }
        for (i, perm) in self.action.iter().enumerate() {
            let mut seen = vec![false; self.num_points];
            if perm.len() != self.num_points {
                return Err(Error::Malformed(format!("generator {i} has {} entries", perm.len())));
            }
            for &b in perm {
                if b >= self.num_points || std::mem::replace(&mut seen[b], true) {
                    return Err(Error::Malformed(format!("generator {i} is not a permutation")));
                }
            }
            for a in 0..self.num_points {
                let mut at = a;
                for _ in 0..self.p {
                    at = perm[at];
                }
                if at != a {
                    return Err(Error::Malformed(format!("generator {i} does not have order dividing {}", self.p)));
                }
            }
        }
        for i in 0..self.n {
            for j in 0..i {
                for a in 0..self.num_points {
                    if self.action[i][self.action[j][a]] != self.action[j][self.action[i][a]] {
                        return Err(Error::Malformed(format!("generators {i} and {j} do not commute")));
                    }
                }
            }
        }
        if let Some(labels) = &self.labels {
            if labels.values.len() != self.num_points {
                return Err(Error::Malformed("one label per point is required".into()));
            }
            labels.values.iter().try_for_each(|g| labels.group.check(g))?;
        }
        Ok(())
    }

    pub fn space(&self) -> FpSpace {
        FpSpace { p: self.p, n: self.n }
    }

    pub fn act(&self, z: &FpPoint, a: usize) -> usize {
        let mut at = a;
        for (i, &c) in z.0.iter().enumerate() {
            for _ in 0..c {
                at = self.action[i][at];
            }
        }
        at
    }

    /// The orbits of the action, each sorted, in order of least element.
    pub fn components(&self) -> Vec<Vec<usize>> {
        let mut component = vec![usize::MAX; self.num_points];
        let mut out = Vec::new();
        for start in 0..self.num_points {
            if component[start] != usize::MAX {
                continue;
            }
            let id = out.len();
            let mut members = vec![start];
            component[start] = id;
            let mut at = 0;
            while at < members.len() {
                let a = members[at];
                for perm in &self.action {
                    let b = perm[a];
                    if component[b] == usize::MAX {
                        component[b] = id;
                        members.push(b);
                    }
                }
                at += 1;
            }
            members.sort_unstable();
            out.push(members);
        }
        out
    }

    pub fn is_transitive(&self) -> bool {
        self.components().len() == 1
    }

    /// Disjoint union, acting on each part separately.
    pub fn disjoint_union(&self, other: &FiniteSystem) -> Result<FiniteSystem> {
        if self.p != other.p || self.n != other.n {
            return Err(Error::Parameter("systems act by different groups".into()));
        }
        let shift = self.num_points;
        let action = self
            .action
            .iter()
            .zip(&other.action)
            .map(|(a, b)| a.iter().copied().chain(b.iter().map(|&x| x + shift)).collect())
            .collect();
        let labels = match (&self.labels, &other.labels) {
            (Some(a), Some(b)) if a.group == b.group => Some(Labels {
                group: a.group.clone(),
                values: a.values.iter().chain(&b.values).cloned().collect(),
            }),
            _ => None,
        };
        FiniteSystem::new(self.p, self.num_points + other.num_points, action, labels)
    }
}

pub fn is_minimal(system: &FiniteSystem) -> bool {
    system.num_points > 0 && system.is_transitive()
}

/// `z -> z . x0` as a table over `F_p^n`.
pub fn orbit_map(system: &FiniteSystem, x0: usize) -> Vec<usize> {
    let space = system.space();
    (0..space.size()).map(|z| system.act(&space.point(z), x0)).collect()
}

/// `z -> label(z . x0)`: the point `x0` seen as a map into the label group.
pub fn evaluation_embedding(system: &FiniteSystem, x0: usize) -> Result<PolyMap> {
    let labels = system
        .labels
        .as_ref()
        .ok_or_else(|| Error::Parameter("evaluation needs a labelled system".into()))?;
    if x0 >= system.num_points {
        return Err(Error::Parameter(format!("point {x0} is not in the system")));
    }
    if !system.is_transitive() {
        return Err(Error::Parameter(format!("the system is not transitive from point {x0}")));
    }
    let table = orbit_map(system, x0).into_iter().map(|a| labels.values[a].clone()).collect();
    PolyMap::new(labels.group.clone(), system.n, table)
}

/// `phi*(e_i . x)(z) = phi*(x)(z + e_i)` for every point and generator.
pub fn embedding_is_equivariant(system: &FiniteSystem) -> Result<bool> {
    let space = system.space();
    for x in 0..system.num_points {
        let here = evaluation_embedding(system, x)?;
        for i in 0..system.n {
            let moved = evaluation_embedding(system, system.action[i][x])?;
            if moved != here.shifted(space.basis(i)) {
                return Ok(false);
            }
        }
    }
    Ok(true)
}

/// The image orbit `{phi o g}` and the induced point map.
#[derive(Debug, Clone, Serialize)]
pub struct Pushforward {
    pub orbit: Orbit,
    pub point_map: Vec<usize>,
}

/// Pushes an orbit through `phi`, checking that the image of the orbit is the
/// orbit of the image.
pub fn compose_pushforward(phi: &FilteredHom, orbit: &Orbit) -> Result<Pushforward> {
    let image = orbit_closure(&phi.push(&orbit.base)?);
    let mut hit = vec![false; image.size];
    let mut point_map = Vec::with_capacity(orbit.size);
    for g in &orbit.points {
        let pushed = phi.push(g)?;
        let b = image
            .index_of(&pushed)
            .ok_or_else(|| Error::Internal("an image point lies outside the image orbit".into()))?;
        hit[b] = true;
        point_map.push(b);
    }
    if let Some(b) = hit.iter().position(|&h| !h) {
        return Err(Error::Internal(format!("image orbit point {b} is not the image of any point")));
    }
    Ok(Pushforward { orbit: image, point_map })
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FactorMapData {
    pub map: Vec<usize>,
}

/// Rational probability weights on a finite point set.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct EmpiricalMeasure {
    pub weights: Vec<Ratio<u64>>,
}

impl EmpiricalMeasure {
    pub fn uniform(size: usize) -> Self {
        EmpiricalMeasure { weights: vec![Ratio::new(1, size as u64); size] }
    }

    pub fn uniform_on(size: usize, support: &[usize]) -> Self {
        let mut weights = vec![Ratio::zero(); size];
        for &a in support {
            weights[a] = Ratio::new(1, support.len() as u64);
        }
        EmpiricalMeasure { weights }
    }

    pub fn validate(&self) -> Result<()> {
        let total: Ratio<u64> = self.weights.iter().sum();
        if !total.is_one() {
            return Err(Error::Malformed(format!("measure has total mass {total}")));
        }
        Ok(())
    }

    pub fn pushforward(&self, map: &[usize], target_size: usize) -> EmpiricalMeasure {
        let mut weights = vec![Ratio::zero(); target_size];
        for (a, w) in self.weights.iter().enumerate() {
            weights[map[a]] += w;
        }
        EmpiricalMeasure { weights }
    }

    pub fn is_invariant(&self, system: &FiniteSystem) -> bool {
        system
            .action
            .iter()
            .all(|perm| (0..system.num_points).all(|a| self.weights[perm[a]] == self.weights[a]))
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum FactorFailure {
    NotTotal { points: usize, expected: usize },
    NotEquivariant { point: usize, generator: usize },
    NotSurjective { point: usize },
    NotUniform { point: usize, weight: String },
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FactorReport {
    pub equivariant: bool,
    pub surjective: bool,
    /// `None` when the target has several orbits and uniformity is not expected.
    pub uniform_pushforward: Option<bool>,
    pub pushforward: Vec<String>,
    pub failure: Option<FactorFailure>,
}

impl FactorReport {
    pub fn passed(&self) -> bool {
        self.failure.is_none()
    }
}

pub fn verify_factor(
    source: &FiniteSystem,
    target: &FiniteSystem,
    theta: &FactorMapData,
    nu: &EmpiricalMeasure,
) -> Result<FactorReport> {
    if source.p != target.p || source.n != target.n {
        return Err(Error::Parameter("systems act by different groups".into()));
    }
    nu.validate()?;
    let mut report = FactorReport {
        equivariant: true,
        surjective: true,
        uniform_pushforward: None,
        pushforward: Vec::new(),
        failure: None,
    };
    if theta.map.len() != source.num_points
        || nu.weights.len() != source.num_points
        || theta.map.iter().any(|&b| b >= target.num_points)
    {
        report.equivariant = false;
        report.failure = Some(FactorFailure::NotTotal { points: theta.map.len(), expected: source.num_points });
        return Ok(report);
    }
    'outer: for a in 0..source.num_points {
        for i in 0..source.n {
            if theta.map[source.action[i][a]] != target.action[i][theta.map[a]] {
                report.equivariant = false;
                report.failure = Some(FactorFailure::NotEquivariant { point: a, generator: i });
                break 'outer;
            }
        }
    }
    let mut hit = vec![false; target.num_points];
    theta.map.iter().for_each(|&b| hit[b] = true);
    if let Some(b) = hit.iter().position(|&h| !h) {
        report.surjective = false;
        report.failure.get_or_insert(FactorFailure::NotSurjective { point: b });
    }
    let pushed = nu.pushforward(&theta.map, target.num_points);
    report.pushforward = pushed.weights.iter().map(|w| w.to_string()).collect();
    if target.is_transitive() {
        let uniform = EmpiricalMeasure::uniform(target.num_points);
        let bad = (0..target.num_points).find(|&b| pushed.weights[b] != uniform.weights[b]);
        report.uniform_pushforward = Some(bad.is_none());
        if let Some(b) = bad {
            report
                .failure
                .get_or_insert(FactorFailure::NotUniform { point: b, weight: pushed.weights[b].to_string() });
        }
    }
    Ok(report)
}

/// The ergodic invariant measures: uniform on each orbit of the action.
pub fn invariant_measures(system: &FiniteSystem) -> Vec<EmpiricalMeasure> {
    system
        .components()
        .iter()
        .map(|c| EmpiricalMeasure::uniform_on(system.num_points, c))
        .collect()
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RpCheck {
    pub holds: bool,
    pub lhs: GroupElement,
    pub rhs: GroupElement,
}

/// `f(x + g_1 + .. + g_{k+1}) = (-1)^k sum_{v != 1} (-1)^{|v|} f(x + v.g)`.
pub fn rp_identity_check(f: &PolyMap, g: &[FpPoint], x: &FpPoint) -> Result<RpCheck> {
    let k = f.group.degree();
    if g.len() != k + 1 {
        return Err(Error::Parameter(format!("expected {} directions, got {}", k + 1, g.len())));
    }
    let space = f.space();
    space.check(x)?;
    g.iter().try_for_each(|z| space.check(z))?;
    let edges: Vec<usize> = g.iter().map(|z| space.index(z)).collect();
    let verts = cube_vertices(&space, space.index(x), &edges);
    let group = &f.group;
    let top = verts.len() - 1;
    let lhs = f.table[verts[top]].clone();
    let mut rhs = group.zero();
    for (v, &pt) in verts.iter().enumerate().take(top) {
        if v.count_ones() % 2 == 0 {
            group.add_assign(&mut rhs, &f.table[pt]);
        } else {
            group.sub_assign(&mut rhs, &f.table[pt]);
        }
    }
    if k % 2 == 1 {
        rhs = group.neg(&rhs);
    }
    Ok(RpCheck { holds: lhs == rhs, lhs, rhs })
}

/// The `(k+1)`-cube `v -> f(x + v.g)` has zero alternating sum.
pub fn cube_alternating_sum(f: &PolyMap, g: &[usize], x: usize) -> GroupElement {
    alternating_sum(&f.compose_cube(x, g), &f.group)
}

/// Map families indexed by the rank `n`, consistent under `embed_gamma`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case")]
pub enum Family {
    /// `f_n = c`.
    Constant { value: GroupElement },
    /// `f_n(x) = x_1 u`.
    Coordinate,
    /// `f_n(x) = (x_1 + .. + x_n) u`.
    CoordinateSum,
    /// Taylor coefficients drawn per multi-index from `seed`.
    Random { seed: u64 },
}

impl Family {
    pub fn name(&self) -> &'static str {
        match self {
            Family::Constant { .. } => "constant",
            Family::Coordinate => "coordinate",
            Family::CoordinateSum => "coordinate_sum",
            Family::Random { .. } => "random",
        }
    }

    /// The member of rank `n`.
    pub fn member(&self, group: &Arc<FilteredGroup>, n: usize) -> Result<PolyMap> {
        let unit = GroupElement(vec![1; group.rank()]);
        let unit = group.element(&unit.0.iter().map(|&x| x as i64).collect::<Vec<_>>())?;
        let linear = |dirs: usize| -> Vec<(Vec<u32>, GroupElement)> {
            (0..dirs.min(n))
                .map(|i| {
                    let mut alpha = vec![0; n];
                    alpha[i] = 1;
                    (alpha, unit.clone())
                })
                .collect()
        };
        let coefficients = match self {
            Family::Constant { value } => {
                group.check(value)?;
                vec![(vec![0; n], value.clone())]
            }
            Family::Coordinate => linear(1),
            Family::CoordinateSum => linear(n),
            Family::Random { seed } => {
                let k = group.degree() as u32;
                let base = k as u64 + 1;
                multi_indices(n, k, (group.p() - 1) as u32)
                    .into_iter()
                    .map(|alpha| {
                        // The stream depends on alpha with trailing zeros dropped,
                        // so coefficients agree across ranks.
                        let code = alpha.iter().rev().fold(0u64, |acc, &a| acc * base + a as u64);
                        let mut rng = ChaCha8Rng::seed_from_u64(*seed);
                        rng.set_stream(code);
                        let level = alpha.iter().sum::<u32>() as usize;
                        let c = group.sample_level(level, &mut rng);
                        (alpha, c)
                    })
                    .collect()
            }
        };
        restrict_to_fundamental_domain(&TaylorForm { n, p: group.p(), group: group.clone(), coefficients })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepRow {
    pub n: usize,
    pub orbit_size: usize,
    /// Orbit-uniform average of `chi(f(0))`, exact.
    pub observable: CyclotomicNumber,
    pub observable_re: f64,
    pub observable_im: f64,
    /// Averages of `chi(f(z))` over `z` in `F_p^m`, for `m = 1..=n`.
    pub folner: Vec<CyclotomicNumber>,
    pub ergodic_measures: usize,
}

/// Orbit sizes and observable averages for `f_1, .., f_{n_max}`. The
/// observable is `h_{0,chi}`. Finite evidence only.
pub fn truncation_sweep(
    family: &Family,
    group: &Arc<FilteredGroup>,
    n_max: usize,
    chi: &Character,
) -> Result<Vec<SweepRow>> {
    let order = chi.order();
    let mut rows = Vec::new();
    let mut previous: Option<PolyMap> = None;
    for n in 1..=n_max {
        let f = family.member(group, n)?;
        if let Some(prev) = &previous {
            if restrict_gamma(&f, n - 1)? != *prev {
                return Err(Error::InconsistentFamily {
                    n,
                    reason: format!("member {n} does not restrict to member {}", n - 1),
                });
            }
        }
        let orbit = orbit_closure(&f);
        let mut hist = vec![0u64; order as usize];
        for g in &orbit.points {
            hist[chi.index(&g.table[0]) as usize] += 1;
        }
        let observable = CyclotomicNumber::from_histogram(order, &hist, orbit.size as u64);
        let (observable_re, observable_im) = observable.to_complex();
        let folner = (1..=n)
            .map(|m| {
                let stride = (group.p() as usize).pow((n - m) as u32);
                let count = (group.p() as usize).pow(m as u32);
                let mut hist = vec![0u64; order as usize];
                for z in 0..count {
                    hist[chi.index(&f.table[z * stride]) as usize] += 1;
                }
                CyclotomicNumber::from_histogram(order, &hist, count as u64)
            })
            .collect();
        let ergodic_measures = invariant_measures(&orbit.system()).len();
        rows.push(SweepRow {
            n,
            orbit_size: orbit.size,
            observable,
            observable_re,
            observable_im,
            folner,
            ergodic_measures,
        });
        previous = Some(f);
    }
    Ok(rows)
}

pub fn sweep_csv(rows: &[SweepRow]) -> String {
    let mut out = String::from("n,orbit_size,observable_re,observable_im\n");
    for r in rows {
        out.push_str(&format!("{},{},{},{}\n", r.n, r.orbit_size, r.observable_re, r.observable_im));
    }
    out
}
