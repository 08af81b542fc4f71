//! Filtered homomorphisms, fibration certificates, coverings by truncations of
//! `H_{p,k}`, and lifting of polynomial maps through a fibration.

use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::budget::{Budget, Check, Mode};
use crate::cube::{reconstruct, CubeMap};
use crate::error::{Error, Result};
use crate::group::{FilteredGroup, GroupElement};
use crate::linalg::{canonical_preimage, Span};
use crate::poly::{
    check_morphism_derivatives, restrict_to_fundamental_domain, taylor_expand_to, PolyMap, TaylorForm,
};

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct FilteredHom {
    pub source: Arc<FilteredGroup>,
    pub target: Arc<FilteredGroup>,
    /// Row `j` is the image of the `j`-th source generator.
    pub matrix: Vec<GroupElement>,
}

#[derive(Deserialize)]
struct RawHom {
    source: FilteredGroup,
    target: FilteredGroup,
    matrix: Vec<Vec<i64>>,
}

impl<'de> Deserialize<'de> for FilteredHom {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let raw = RawHom::deserialize(d)?;
        let target = Arc::new(raw.target);
        let matrix = raw
            .matrix
            .iter()
            .map(|row| target.element(row))
            .collect::<Result<Vec<_>>>()
            .map_err(serde::de::Error::custom)?;
        FilteredHom::new(Arc::new(raw.source), target, matrix).map_err(serde::de::Error::custom)
    }
}

impl FilteredHom {
    pub fn new(source: Arc<FilteredGroup>, target: Arc<FilteredGroup>, matrix: Vec<GroupElement>) -> Result<Self> {
        if source.p() != target.p() {
            return Err(Error::GroupMismatch(format!(
                "source prime {} differs from target prime {}",
                source.p(),
                target.p()
            )));
        }
        if matrix.len() != source.rank() {
            return Err(Error::Malformed(format!(
                "matrix has {} rows for {} source factors",
                matrix.len(),
                source.rank()
            )));
        }
        for row in &matrix {
            target.check(row)?;
        }
        for (j, row) in matrix.iter().enumerate() {
            let order = source.modulus(j) as i64;
            if !target.is_zero(&target.scalar_mul(order, row)) {
                return Err(Error::Malformed(format!(
                    "generator {j} has order {order} but its image {row} does not"
                )));
            }
        }
        let hom = FilteredHom { source, target, matrix };
        for i in 0..=hom.top_level() {
            for j in 0..hom.source.rank() {
                let step = hom.source.level_step(j, i) as i64;
                let image = hom.target.scalar_mul(step, &hom.matrix[j]);
                if !hom.target.in_level(&image, i) {
                    return Err(Error::Filtration(format!(
                        "generator {j} of level {i} maps to {image}, outside target level {i}"
                    )));
                }
            }
        }
        Ok(hom)
    }

    pub fn identity(group: Arc<FilteredGroup>) -> FilteredHom {
        let matrix = (0..group.rank())
            .map(|j| {
                let mut e = group.zero();
                e.0[j] = 1 % group.modulus(j);
                e
            })
            .collect();
        FilteredHom { source: group.clone(), target: group, matrix }
    }

    /// Highest level worth checking: both filtrations are trivial beyond it.
    pub fn top_level(&self) -> usize {
        self.source.degree().max(self.target.degree()) + 1
    }

    pub fn apply(&self, g: &GroupElement) -> GroupElement {
        let mut acc = self.target.zero();
        for (&c, row) in g.0.iter().zip(&self.matrix) {
            self.target.add_scaled(&mut acc, c as i64, row);
        }
        acc
    }

    /// `self o inner`.
    pub fn compose(&self, inner: &FilteredHom) -> Result<FilteredHom> {
        if *inner.target != *self.source {
            return Err(Error::GroupMismatch("inner target differs from outer source".into()));
        }
        let matrix = inner.matrix.iter().map(|g| self.apply(g)).collect();
        FilteredHom::new(inner.source.clone(), self.target.clone(), matrix)
    }

    /// Pointwise `phi o f`.
    pub fn push(&self, f: &PolyMap) -> Result<PolyMap> {
        if *f.group != *self.source {
            return Err(Error::GroupMismatch("map does not take values in the source group".into()));
        }
        Ok(PolyMap {
            n: f.n,
            p: f.p,
            group: self.target.clone(),
            table: f.table.iter().map(|g| self.apply(g)).collect(),
        })
    }

    pub fn push_cube(&self, q: &CubeMap) -> CubeMap {
        CubeMap { n: q.n, values: q.values.iter().map(|g| self.apply(g)).collect() }
    }

    fn level_images(&self, i: usize) -> Vec<GroupElement> {
        (0..self.source.rank())
            .map(|j| self.target.scalar_mul(self.source.level_step(j, i) as i64, &self.matrix[j]))
            .collect()
    }

    /// Least element of source level `i` mapping to `t`.
    pub fn preimage(&self, i: usize, t: &GroupElement) -> Option<GroupElement> {
        canonical_preimage(&self.source, &self.target, &self.matrix, i, t)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LevelWitness {
    pub level: usize,
    /// Each target level generator with a source preimage of the same level.
    pub preimages: Vec<(GroupElement, GroupElement)>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CubeAudit {
    pub n_max: usize,
    pub holds: bool,
    pub mode: Mode,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FibrationCertificate {
    pub levels: Vec<LevelWitness>,
    pub cube_audit: Option<CubeAudit>,
}

/// Certifies `phi(source_(i)) = target_(i)` at every level.
pub fn is_filtered_surjection(phi: &FilteredHom) -> Result<FibrationCertificate> {
    let mut levels = Vec::new();
    for i in 0..=phi.top_level() {
        let image = Span::new(&phi.target, &phi.level_images(i));
        let mut preimages = Vec::new();
        for t in phi.target.level_generators(i) {
            if !image.contains(&t) {
                return Err(Error::NotSurjective {
                    level: i,
                    reason: format!("target level generator {t} has no preimage in source level {i}"),
                });
            }
            let s = phi.preimage(i, &t).ok_or_else(|| {
                Error::Internal(format!("span contains {t} but no preimage was found at level {i}"))
            })?;
            preimages.push((t, s));
        }
        levels.push(LevelWitness { level: i, preimages });
    }
    Ok(FibrationCertificate { levels, cube_audit: None })
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct UnliftableCube {
    pub dim: usize,
    /// A source cube whose corner is the one being extended.
    pub source_cube: Vec<GroupElement>,
    /// Target value at the top vertex that no source completion reaches.
    pub target_top: GroupElement,
}

/// Relative corner completion: every target completion of `phi o c` lifts to
/// a source completion of `c`, for every completable source corner `c` of
/// dimension at most `n_max`.
pub fn verify_fibration_cubewise(phi: &FilteredHom, n_max: usize, budget: &Budget) -> Check<UnliftableCube> {
    let src = &phi.source;
    let tgt = &phi.target;
    let mut mode = Mode::Exhaustive;
    let mut rng = ChaCha8Rng::seed_from_u64(budget.seed);
    for m in 1..=n_max {
        let src_top: Vec<GroupElement> = src.level_elements(m).collect();
        let tgt_top: Vec<GroupElement> = tgt.level_elements(m).collect();
        // Completable corners correspond to cubes with top Moebius coefficient 0.
        let slots: Vec<usize> = (0..(1usize << m) - 1).collect();
        let level_sets: Vec<Vec<GroupElement>> =
            slots.iter().map(|&s| src.level_elements(s.count_ones() as usize).collect()).collect();
        let corners = level_sets.iter().fold(1u128, |a, l| a.saturating_mul(l.len() as u128));
        let work = corners.saturating_mul((src_top.len() + tgt_top.len()) as u128);
        let exhaustive = work <= budget.tuples as u128;
        let iterations = if exhaustive { corners } else { budget.samples as u128 };
        if !exhaustive {
            mode = mode.combine(Mode::Sampled { samples: budget.samples });
        }
        let mut digits = vec![0usize; slots.len()];
        for _ in 0..iterations {
            if !exhaustive {
                for (d, l) in digits.iter_mut().zip(&level_sets) {
                    *d = rng.gen_range(0..l.len());
                }
            }
            let mut coeffs: Vec<GroupElement> =
                digits.iter().zip(&level_sets).map(|(&d, l)| l[d].clone()).collect();
            coeffs.push(src.zero());
            let cube = reconstruct(m, &coeffs, src);
            let top = cube.values.last().expect("cube has vertices").clone();
            let reachable: Vec<GroupElement> =
                src_top.iter().map(|s| phi.apply(&src.add(&top, s))).collect();
            let image_top = phi.apply(&top);
            for t in &tgt_top {
                let want = tgt.add(&image_top, t);
                if !reachable.contains(&want) {
                    return Check::fail(
                        mode,
                        UnliftableCube { dim: m, source_cube: cube.values.clone(), target_top: want },
                    );
                }
            }
            if exhaustive {
                for (d, l) in digits.iter_mut().zip(&level_sets) {
                    *d += 1;
                    if *d < l.len() {
                        break;
                    }
                    *d = 0;
                }
            }
        }
    }
    Check::pass(mode)
}

/// Builds a covering `H_{p,k}`-truncation `->> x` with one `cf(p,k,l)` factor
/// per factor of `x`, each mapping `1 -> 1`.
pub fn covering_onto(x: &Arc<FilteredGroup>, p: u64, k: usize) -> Result<FilteredHom> {
    if x.p() != p {
        return Err(Error::UnsupportedTarget(format!("target prime {} is not {p}", x.p())));
    }
    let top = k.max(x.degree()) + 1;
    let mut factors = Vec::new();
    let mut matrix = Vec::new();
    for j in 0..x.rank() {
        let m = x.factors()[j].m;
        let shape = (1..=k).find_map(|l| {
            let model = FilteredGroup::cf(p, k, l).ok()?;
            let fits = model.factors()[0].m >= m
                && (0..=top).all(|i| x.level_exp(j, i) == model.level_exp(0, i).min(m));
            fits.then_some(model)
        });
        let Some(model) = shape else {
            return Err(Error::UnsupportedTarget(format!(
                "factor {j} (Z/{}^{m}) does not match any cf({p},{k},l) filtration pattern",
                p
            )));
        };
        factors.push(model.factors()[0].clone());
        let mut e = x.zero();
        e.0[j] = 1 % x.modulus(j);
        matrix.push(e);
    }
    let source = Arc::new(FilteredGroup::new(p, k, factors)?);
    let phi = FilteredHom::new(source, x.clone(), matrix).map_err(|e| Error::UnsupportedTarget(e.to_string()))?;
    is_filtered_surjection(&phi).map_err(|e| Error::UnsupportedTarget(e.to_string()))?;
    Ok(phi)
}

/// Lifts `f` through a fibration: `phi o g = f` and `g` is a morphism.
pub fn lift_morphism(phi: &FilteredHom, f: &PolyMap) -> Result<PolyMap> {
    if *f.group != *phi.target {
        return Err(Error::GroupMismatch("map does not take values in the target group".into()));
    }
    let order = phi.source.degree() as u32;
    let taylor = taylor_expand_to(f, order)?;
    let coefficients = taylor
        .coefficients
        .iter()
        .map(|(alpha, a)| {
            let level = alpha.iter().sum::<u32>() as usize;
            phi.preimage(level, a).map(|s| (alpha.clone(), s)).ok_or_else(|| {
                Error::Internal(format!("coefficient {alpha:?} = {a} has no preimage in source level {level}"))
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let lifted = TaylorForm { n: f.n, p: f.p, group: phi.source.clone(), coefficients };
    let g = restrict_to_fundamental_domain(&lifted)?;
    if phi.push(&g)? != *f {
        return Err(Error::Internal("lift does not project back onto the input".into()));
    }
    if !check_morphism_derivatives(&g, &Budget::default()).holds {
        return Err(Error::Internal("lift is not a morphism".into()));
    }
    Ok(g)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn z4() -> Arc<FilteredGroup> {
        Arc::new(FilteredGroup::cf(2, 2, 1).unwrap())
    }

    fn z2_deg1() -> Arc<FilteredGroup> {
        Arc::new(FilteredGroup::constant_filtration(2, 1, 1).unwrap())
    }

    fn mod2(target: Arc<FilteredGroup>) -> Result<FilteredHom> {
        FilteredHom::new(z4(), target, vec![GroupElement(vec![1])])
    }

    #[test]
    fn mod2_reduction_is_certified() {
        let phi = mod2(z2_deg1()).unwrap();
        let cert = is_filtered_surjection(&phi).unwrap();
        assert_eq!(cert.levels.len(), 4);
        assert!(verify_fibration_cubewise(&phi, 3, &Budget::default()).holds);
    }

    #[test]
    fn mod2_onto_constant_degree_two_fails_at_level_two() {
        let target = Arc::new(FilteredGroup::cf(2, 2, 2).unwrap());
        let phi = mod2(target).unwrap();
        match is_filtered_surjection(&phi) {
            Err(Error::NotSurjective { level, .. }) => assert_eq!(level, 2),
            other => panic!("expected failure, got {other:?}"),
        }
        let check = verify_fibration_cubewise(&phi, 2, &Budget::default());
        assert!(!check.holds);
        assert_eq!(check.witness.unwrap().dim, 2);
    }

    #[test]
    fn identity_is_certified() {
        let g = Arc::new(FilteredGroup::hpk(2, 2, &[1, 1]).unwrap());
        let phi = FilteredHom::identity(g);
        assert!(is_filtered_surjection(&phi).is_ok());
        assert!(verify_fibration_cubewise(&phi, 3, &Budget::default()).holds);
    }

    #[test]
    fn level_violating_matrix_is_rejected() {
        // 1 -> 1 from Z/2 (level 2 = everything) into Z/4 (level 2 = 2Z/4).
        let src = Arc::new(FilteredGroup::cf(2, 2, 2).unwrap());
        assert!(FilteredHom::new(src, z4(), vec![GroupElement(vec![2])]).is_ok());
        let src = Arc::new(FilteredGroup::cf(2, 2, 2).unwrap());
        assert!(FilteredHom::new(src, z4(), vec![GroupElement(vec![1])]).is_err());
    }

    #[test]
    fn coverings() {
        let phi = covering_onto(&z2_deg1(), 2, 2).unwrap();
        assert_eq!(*phi.source, *z4());
        assert_eq!(phi.matrix, vec![GroupElement(vec![1])]);

        let phi = covering_onto(&z4(), 2, 2).unwrap();
        assert_eq!(phi, FilteredHom::identity(z4()));

        let h = Arc::new(FilteredGroup::hpk(2, 2, &[1, 1]).unwrap());
        assert_eq!(covering_onto(&h, 2, 2).unwrap(), FilteredHom::identity(h));

        // Z/2 with a degree-3 filtration matches no cf(2,2,l) pattern.
        let odd = Arc::new(FilteredGroup::constant_filtration(2, 1, 3).unwrap());
        assert!(matches!(covering_onto(&odd, 2, 2), Err(Error::UnsupportedTarget(_))));
    }

    #[test]
    fn lift_identity_through_mod2() {
        let phi = mod2(z2_deg1()).unwrap();
        let f = PolyMap::new(z2_deg1(), 1, vec![GroupElement(vec![0]), GroupElement(vec![1])]).unwrap();
        let g = lift_morphism(&phi, &f).unwrap();
        assert_eq!(g.table, vec![GroupElement(vec![0]), GroupElement(vec![1])]);
        let c = PolyMap::constant(z2_deg1(), 2, GroupElement(vec![1])).unwrap();
        let g = lift_morphism(&phi, &c).unwrap();
        assert!(g.table.iter().all(|v| v == &GroupElement(vec![1])));
    }

    #[test]
    fn hom_json_roundtrip() {
        let phi = mod2(z2_deg1()).unwrap();
        let json = serde_json::to_string(&phi).unwrap();
        let back: FilteredHom = serde_json::from_str(&json).unwrap();
        assert_eq!(back, phi);
    }
}
