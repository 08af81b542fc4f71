//! Brute-force oracles shared by the integration tests. None of them call the
//! algorithm they are checking.
#![allow(dead_code)]

use std::collections::{HashSet, VecDeque};
use std::sync::Arc;

use nilshift_core::poly::all_maps;
use nilshift_core::{FilteredGroup, FilteredHom, FpSpace, GroupElement, PolyMap};

/// `(m, [e_0, .., e_{k+1}])` for the cyclic factor `cf(p, k, l)`, from
/// `e_i = ceil((i - l) / (p - 1))` clamped to `[0, m]`.
pub fn cf_oracle(p: u64, k: usize, l: usize) -> (u32, Vec<u32>) {
    let q = (p - 1) as i64;
    let m = ((k - l) as i64 / q + 1) as u32;
    let exps = (0..=k + 1)
        .map(|i| {
            let d = i as i64 - l as i64;
            if d <= 0 {
                0
            } else {
                (((d + q - 1) / q) as u32).min(m)
            }
        })
        .collect();
    (m, exps)
}

/// All faces of `{0,1}^n` as vertex masks, with their codimension.
pub fn faces(n: usize) -> Vec<(Vec<usize>, usize)> {
    let mut out = Vec::new();
    // Each coordinate is 0 (fixed to 0), 1 (fixed to 1) or 2 (free).
    let total = 3usize.pow(n as u32);
    for code in 0..total {
        let mut pattern = Vec::with_capacity(n);
        let mut c = code;
        for _ in 0..n {
            pattern.push(c % 3);
            c /= 3;
        }
        let codim = pattern.iter().filter(|&&t| t != 2).count();
        let verts = (0..1usize << n)
            .filter(|&v| pattern.iter().enumerate().all(|(i, &t)| t == 2 || ((v >> i) & 1) == t))
            .collect();
        out.push((verts, codim));
    }
    out
}

/// The cube group of dimension `n`, generated by `g . 1_F` with `g` in the
/// level matching the codimension of the face `F`.
pub fn cube_closure(n: usize, group: &FilteredGroup) -> HashSet<Vec<GroupElement>> {
    let size = 1usize << n;
    let mut gens: Vec<Vec<GroupElement>> = Vec::new();
    for (verts, codim) in faces(n) {
        for g in group.level_generators(codim) {
            if group.is_zero(&g) {
                continue;
            }
            let mut q = vec![group.zero(); size];
            for &v in &verts {
                q[v] = g.clone();
            }
            gens.push(q);
        }
    }
    let zero = vec![group.zero(); size];
    let mut seen = HashSet::from([zero.clone()]);
    let mut queue = VecDeque::from([zero]);
    while let Some(q) = queue.pop_front() {
        for g in &gens {
            let r: Vec<GroupElement> = q.iter().zip(g).map(|(a, b)| group.add(a, b)).collect();
            if seen.insert(r.clone()) {
                queue.push_back(r);
            }
        }
    }
    seen
}

/// Every value of `Delta_{h_1} .. Delta_{h_j} f` lies in level `j`, for all
/// `j <= k + 1` and all direction tuples.
pub fn is_polynomial_by_definition(f: &PolyMap) -> bool {
    let space = f.space();
    let g = &f.group;
    let size = space.size();
    let mut layer: Vec<Vec<GroupElement>> = vec![f.table.clone()];
    for j in 1..=g.degree() + 1 {
        let mut next = Vec::with_capacity(layer.len() * size);
        for table in &layer {
            for h in 0..size {
                let d: Vec<GroupElement> = (0..size).map(|x| g.sub(&table[space.add(x, h)], &table[x])).collect();
                if d.iter().any(|v| !g.in_level(v, j)) {
                    return false;
                }
                next.push(d);
            }
        }
        layer = next;
    }
    true
}

/// Morphisms `F_p^n -> group` selected by [`is_polynomial_by_definition`].
pub fn morphisms(group: &Arc<FilteredGroup>, n: usize) -> Vec<PolyMap> {
    all_maps(group, n, u64::MAX).unwrap().into_iter().filter(is_polynomial_by_definition).collect()
}

/// Least element of level `level` mapping to `t`, by scanning the level in
/// lexicographic order.
pub fn least_preimage(phi: &FilteredHom, level: usize, t: &GroupElement) -> Option<GroupElement> {
    phi.source.level_elements(level).find(|s| phi.apply(s) == *t)
}

fn binom(n: u64, r: u64) -> i64 {
    (0..r).fold(1i64, |acc, i| acc * (n - i) as i64 / (i + 1) as i64)
}

/// Sub-multi-indices `beta <= x`.
fn below(x: &[u64]) -> Vec<Vec<u64>> {
    let mut out = vec![Vec::new()];
    for &xi in x {
        out = out
            .into_iter()
            .flat_map(|b| (0..=xi).map(move |v| {
                let mut c = b.clone();
                c.push(v);
                c
            }))
            .collect();
    }
    out
}

/// Lift built value by value on the box `[0, L]^n`, `L` the source degree.
///
/// At each point `x`, in order of increasing `|x|`, the value is chosen so that
/// the finite difference `Delta^x g(0)` is the least preimage of `Delta^x f(0)`
/// in level `|x|`; above the source degree the difference is forced to vanish
/// and the value must still project onto `f(x)`. Returns the lift on
/// `[0, p-1]^n`, or `None` when the construction breaks.
pub fn box_inductive_lift(phi: &FilteredHom, f: &PolyMap) -> Option<Vec<GroupElement>> {
    let src = &phi.source;
    let tgt = &phi.target;
    let p = f.p;
    let n = f.n;
    let top = src.degree() as u64;
    let space = FpSpace::new(p, n).unwrap();
    let fpt = |x: &[u64]| -> GroupElement {
        let idx = x.iter().fold(0usize, |acc, &c| acc * p as usize + (c % p) as usize);
        f.table[idx].clone()
    };
    let mut boxpts: Vec<Vec<u64>> = below(&vec![top.max(p - 1); n]);
    boxpts.sort_by_key(|x| (x.iter().sum::<u64>(), x.clone()));
    let mut g: std::collections::HashMap<Vec<u64>, GroupElement> = Default::default();
    for x in &boxpts {
        let weight: u64 = x.iter().sum();
        let mut forced = src.zero();
        let mut diff_f = tgt.zero();
        for b in below(x) {
            let sign = if (weight - b.iter().sum::<u64>()).is_multiple_of(2) { 1 } else { -1 };
            let c: i64 = x.iter().zip(&b).map(|(&xi, &bi)| binom(xi, bi)).product::<i64>() * sign;
            tgt.add_scaled(&mut diff_f, c, &fpt(&b));
            if b != *x {
                src.add_scaled(&mut forced, -c, &g[&b]);
            }
        }
        let value = if weight <= top {
            let s = least_preimage(phi, weight as usize, &diff_f)?;
            src.add(&forced, &s)
        } else {
            if phi.apply(&forced) != fpt(x) {
                return None;
            }
            forced
        };
        g.insert(x.clone(), value);
    }
    Some((0..space.size()).map(|i| g[&space.point(i).0].clone()).collect())
}
