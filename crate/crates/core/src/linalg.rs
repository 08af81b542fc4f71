//! Subgroup membership in finite abelian p-groups via a Howell-style echelon
//! form over `Z/p^N`.

use crate::group::{FilteredGroup, GroupElement};

fn mul_mod(a: u64, b: u64, q: u64) -> u64 {
    ((a as u128 * b as u128) % q as u128) as u64
}

fn valuation(a: u64, p: u64, cap: u32) -> u32 {
    if a == 0 {
        return cap;
    }
    let mut v = 0;
    let mut a = a;
    while a.is_multiple_of(p) {
        a /= p;
        v += 1;
    }
    v
}

fn inverse_mod(a: u64, q: u64) -> u64 {
    let (mut r0, mut r1) = (q as i128, a as i128 % q as i128);
    let (mut s0, mut s1) = (0i128, 1i128);
    while r1 != 0 {
        let t = r0 / r1;
        (r0, r1) = (r1, r0 - t * r1);
        (s0, s1) = (s1, s0 - t * s1);
    }
    debug_assert_eq!(r0, 1, "{a} is not a unit mod {q}");
    s0.rem_euclid(q as i128) as u64
}

/// The subgroup of a finite abelian p-group spanned by a list of elements.
#[derive(Debug, Clone)]
pub(crate) struct Span {
    p: u64,
    top: u32,
    q: u64,
    scale: Vec<u64>,
    /// (pivot column, pivot valuation, unit inverse mod p^(top - valuation), row)
    pivots: Vec<(usize, u32, u64, Vec<u64>)>,
}

impl Span {
    pub(crate) fn new(group: &FilteredGroup, generators: &[GroupElement]) -> Span {
        let p = group.p();
        let top = group.factors().iter().map(|f| f.m).max().unwrap_or(0);
        let q = p.pow(top);
        let scale: Vec<u64> = group.factors().iter().map(|f| p.pow(top - f.m)).collect();
        let mut span = Span { p, top, q, scale, pivots: Vec::new() };
        let mut rows: Vec<Vec<u64>> = generators.iter().map(|g| span.embed(g)).collect();
        let width = span.scale.len();
        for col in 0..width {
            rows.retain(|r| r.iter().any(|&x| x != 0));
            let Some((best, _)) = rows
                .iter()
                .enumerate()
                .filter(|(_, r)| r[col] != 0)
                .min_by_key(|(_, r)| valuation(r[col], p, top))
            else {
                continue;
            };
            let pivot = rows.swap_remove(best);
            let v = valuation(pivot[col], p, top);
            let unit = pivot[col] / p.pow(v);
            let inv = inverse_mod(unit, p.pow(top - v));
            for r in rows.iter_mut() {
                if r[col] != 0 {
                    let c = mul_mod(r[col] / p.pow(v), inv, q);
                    span.sub_scaled(r, c, &pivot);
                }
            }
            // Multiples of the pivot that kill its leading entry stay in the span.
            let annihilated: Vec<u64> = pivot.iter().map(|&x| mul_mod(x, p.pow(top - v), q)).collect();
            if annihilated.iter().any(|&x| x != 0) {
                rows.push(annihilated);
            }
            span.pivots.push((col, v, inv, pivot));
        }
        span
    }

    fn embed(&self, g: &GroupElement) -> Vec<u64> {
        g.0.iter().zip(&self.scale).map(|(&x, &s)| mul_mod(x, s, self.q)).collect()
    }

    fn sub_scaled(&self, r: &mut [u64], c: u64, pivot: &[u64]) {
        for (x, &y) in r.iter_mut().zip(pivot) {
            *x = (*x + self.q - mul_mod(c, y, self.q)) % self.q;
        }
    }

    pub(crate) fn contains(&self, g: &GroupElement) -> bool {
        let mut r = self.embed(g);
        for (col, v, inv, pivot) in &self.pivots {
            if r[*col] == 0 {
                continue;
            }
            if valuation(r[*col], self.p, self.top) < *v {
                return false;
            }
            let c = mul_mod(r[*col] / self.p.pow(*v), *inv, self.q);
            self.sub_scaled(&mut r, c, pivot);
        }
        r.iter().all(|&x| x == 0)
    }
}

/// Lexicographically least `s` in source level `level` with `phi(s) = t`,
/// where `images[j]` is the image of the j-th source generator.
pub(crate) fn canonical_preimage(
    source: &FilteredGroup,
    target: &FilteredGroup,
    images: &[GroupElement],
    level: usize,
    t: &GroupElement,
) -> Option<GroupElement> {
    let r = source.rank();
    // steps[j]: generator of source level `level` in factor j; counts[j]: its order.
    let steps: Vec<u64> = (0..r).map(|j| source.level_step(j, level)).collect();
    let counts: Vec<u64> = (0..r).map(|j| source.factor_level_order(j, level)).collect();
    let level_images: Vec<GroupElement> =
        (0..r).map(|j| target.scalar_mul(steps[j] as i64, &images[j])).collect();
    let suffix: Vec<Span> = (0..=r).map(|j| Span::new(target, &level_images[j..])).collect();
    if !suffix[0].contains(t) {
        return None;
    }
    let mut remainder = t.clone();
    let mut out = source.zero();
    for j in 0..r {
        let mut c = 0u64;
        loop {
            if suffix[j + 1].contains(&remainder) {
                break;
            }
            target.sub_assign(&mut remainder, &level_images[j]);
            c += 1;
            if c >= counts[j] {
                return None;
            }
        }
        out.0[j] = c * steps[j];
    }
    Some(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn brute_span(group: &FilteredGroup, gens: &[GroupElement]) -> Vec<GroupElement> {
        let mut set = vec![group.zero()];
        loop {
            let mut grew = false;
            for g in gens {
                for x in set.clone() {
                    let y = group.add(&x, g);
                    if !set.contains(&y) {
                        set.push(y);
                        grew = true;
                    }
                }
            }
            if !grew {
                return set;
            }
        }
    }

    #[test]
    fn membership_matches_closure() {
        let g = FilteredGroup::hpk(2, 3, &[1, 1, 1]).unwrap();
        let gens = vec![GroupElement(vec![2, 2, 0]), GroupElement(vec![4, 1, 1])];
        let span = Span::new(&g, &gens);
        let closure = brute_span(&g, &gens);
        for x in g.elements() {
            assert_eq!(span.contains(&x), closure.contains(&x), "{x}");
        }
    }

    #[test]
    fn membership_needs_annihilated_rows() {
        // <(1,1)> in Z/4 x Z/2 contains (2,0).
        let g = FilteredGroup::hpk(2, 2, &[1, 1]).unwrap();
        let span = Span::new(&g, &[GroupElement(vec![1, 1])]);
        assert!(span.contains(&GroupElement(vec![2, 0])));
        assert!(!span.contains(&GroupElement(vec![0, 1])));
    }

    #[test]
    fn preimage_is_least() {
        let src = FilteredGroup::hpk(2, 2, &[1, 1]).unwrap();
        let tgt = FilteredGroup::constant_filtration(2, 1, 1).unwrap();
        let images = vec![GroupElement(vec![1]), GroupElement(vec![1])];
        let pre = canonical_preimage(&src, &tgt, &images, 1, &GroupElement(vec![1])).unwrap();
        assert_eq!(pre, GroupElement(vec![0, 1]));
        let pre = canonical_preimage(&src, &tgt, &images, 2, &GroupElement(vec![1])).unwrap();
        assert_eq!(pre, GroupElement(vec![0, 1]));
        assert!(canonical_preimage(&src, &tgt, &images, 3, &GroupElement(vec![1])).is_none());
    }
}
