//! Exact elements of `Q(zeta_N)` for prime-power `N`, in the power basis
//! `1, zeta, .., zeta^{phi(N)-1}`.

use std::fmt;

use num_rational::{BigRational, Ratio};
use num_traits::{One, Signed, ToPrimitive, Zero};
use serde::{Serialize, Serializer};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CyclotomicNumber {
    order: u64,
    p: u64,
    coeffs: Vec<Ratio<i64>>,
}

/// `(p, p^{M-1})` for `order = p^M`; `order = 1` is treated as `p = 1`.
fn prime_and_step(order: u64) -> (u64, u64) {
    if order <= 1 {
        return (1, 1);
    }
    let mut p = 2;
    while !order.is_multiple_of(p) {
        p += 1;
    }
    (p, order / p)
}

pub fn euler_phi(order: u64) -> usize {
    let (p, step) = prime_and_step(order);
    if p == 1 {
        1
    } else {
        (step * (p - 1)) as usize
    }
}

/// Writes `zeta^e` in the power basis as `(index, sign)` pairs.
fn basis_terms(order: u64, e: u64) -> Vec<(usize, i64)> {
    let e = if order == 0 { 0 } else { e % order.max(1) };
    let (p, step) = prime_and_step(order);
    let phi = euler_phi(order) as u64;
    if p == 1 || e < phi {
        return vec![(e as usize, 1)];
    }
    // zeta^{(p-1) step} = -(1 + zeta^step + .. + zeta^{(p-2) step})
    (0..p - 1).map(|j| ((e - (p - 1 - j) * step) as usize, -1)).collect()
}

impl CyclotomicNumber {
    pub fn zero(order: u64) -> Self {
        let (p, _) = prime_and_step(order);
        CyclotomicNumber { order: order.max(1), p, coeffs: vec![Ratio::zero(); euler_phi(order)] }
    }

    pub fn one(order: u64) -> Self {
        Self::root(order, 0)
    }

    pub fn root(order: u64, e: u64) -> Self {
        let mut z = Self::zero(order);
        z.add_root(e, Ratio::one());
        z
    }

    pub fn order(&self) -> u64 {
        self.order
    }

    pub fn coefficients(&self) -> &[Ratio<i64>] {
        &self.coeffs
    }

    pub fn add_root(&mut self, e: u64, weight: Ratio<i64>) {
        for (i, s) in basis_terms(self.order, e) {
            self.coeffs[i] += weight * s;
        }
    }

    /// `sum_e hist[e] zeta^e / total`.
    pub fn from_histogram(order: u64, hist: &[u64], total: u64) -> Self {
        let mut z = Self::zero(order);
        for (e, &c) in hist.iter().enumerate() {
            if c != 0 {
                z.add_root(e as u64, Ratio::new(c as i64, total as i64));
            }
        }
        z
    }

    pub fn is_one(&self) -> bool {
        *self == Self::one(self.order)
    }

    pub fn to_complex(&self) -> (f64, f64) {
        let mut re = 0.0;
        let mut im = 0.0;
        for (i, c) in self.coeffs.iter().enumerate() {
            let w = c.to_f64().unwrap_or(f64::NAN);
            let angle = std::f64::consts::TAU * i as f64 / self.order as f64;
            re += w * angle.cos();
            im += w * angle.sin();
        }
        (re, im)
    }

    pub fn abs(&self) -> f64 {
        let (re, im) = self.to_complex();
        re.hypot(im)
    }

    pub fn prime(&self) -> u64 {
        self.p
    }
}

impl std::ops::Add for &CyclotomicNumber {
    type Output = CyclotomicNumber;

    fn add(self, other: &CyclotomicNumber) -> CyclotomicNumber {
        assert_eq!(self.order, other.order, "adding numbers from different cyclotomic fields");
        let coeffs = self.coeffs.iter().zip(&other.coeffs).map(|(a, b)| a + b).collect();
        CyclotomicNumber { order: self.order, p: self.p, coeffs }
    }
}

impl fmt::Display for CyclotomicNumber {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut first = true;
        for (i, c) in self.coeffs.iter().enumerate() {
            if c.is_zero() {
                continue;
            }
            let sign = if c.is_negative() { "-" } else if first { "" } else { "+" };
            let mag = c.abs();
            let body = match (i, mag.is_one()) {
                (0, _) => mag.to_string(),
                (_, true) => format!("z^{i}"),
                (_, false) => format!("{mag}*z^{i}"),
            };
            write!(f, "{sign}{body}")?;
            first = false;
        }
        if first {
            write!(f, "0")?;
        }
        Ok(())
    }
}

impl Serialize for CyclotomicNumber {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.serialize_str(&self.to_string())
    }
}

/// Rank over `Q(zeta_order)` of a matrix whose entries are `zeta^{e}`.
///
/// Each entry becomes its `phi x phi` multiplication matrix over `Q`; the
/// rational rank of the result is `phi` times the cyclotomic rank.
pub fn root_matrix_rank(order: u64, rows: &[Vec<u64>]) -> usize {
    let phi = euler_phi(order);
    let cols = rows.first().map_or(0, Vec::len);
    let mut real: Vec<Vec<BigRational>> = Vec::with_capacity(rows.len() * phi);
    for row in rows {
        for b in 0..phi {
            // Row b of the block: coordinates of zeta^{b + e} for each entry.
            let mut out = vec![BigRational::zero(); cols * phi];
            for (c, &e) in row.iter().enumerate() {
                for (i, s) in basis_terms(order, b as u64 + e) {
                    out[c * phi + i] += BigRational::from_integer(s.into());
                }
            }
            real.push(out);
        }
    }
    rational_rank(real) / phi
}

fn rational_rank(mut m: Vec<Vec<BigRational>>) -> usize {
    let width = m.first().map_or(0, Vec::len);
    let mut rank = 0;
    for col in 0..width {
        let Some(pivot) = (rank..m.len()).find(|&r| !m[r][col].is_zero()) else {
            continue;
        };
        m.swap(rank, pivot);
        let inv = m[rank][col].recip();
        let pivot_row: Vec<BigRational> = m[rank].iter().map(|x| x * &inv).collect();
        for (r, row) in m.iter_mut().enumerate() {
            if r != rank && !row[col].is_zero() {
                let factor = row[col].clone();
                for (x, y) in row.iter_mut().zip(&pivot_row) {
                    *x -= &factor * y;
                }
            }
        }
        m[rank] = pivot_row;
        rank += 1;
    }
    rank
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn fourth_roots() {
        let i = CyclotomicNumber::root(4, 1);
        let minus_one = CyclotomicNumber::root(4, 2);
        assert_eq!(minus_one.coefficients(), &[Ratio::new(-1, 1), Ratio::zero()]);
        let minus_i = CyclotomicNumber::root(4, 3);
        assert!((&i + &minus_i) == CyclotomicNumber::zero(4));
        assert_eq!(CyclotomicNumber::root(4, 4), CyclotomicNumber::one(4));
    }

    #[test]
    fn cube_roots_sum_to_zero() {
        let mut z = CyclotomicNumber::zero(3);
        for e in 0..3 {
            z.add_root(e, Ratio::one());
        }
        assert_eq!(z, CyclotomicNumber::zero(3));
    }

    #[test]
    fn ninth_roots_sum_to_zero() {
        let mut z = CyclotomicNumber::zero(9);
        for e in 0..9 {
            z.add_root(e, Ratio::one());
        }
        assert_eq!(z, CyclotomicNumber::zero(9));
        assert!(CyclotomicNumber::root(9, 7).abs() - 1.0 < 1e-12);
    }

    #[test]
    fn average_of_one_and_i() {
        let z = CyclotomicNumber::from_histogram(4, &[1, 1, 0, 0], 2);
        let (re, im) = z.to_complex();
        assert!((re - 0.5).abs() < 1e-12 && (im - 0.5).abs() < 1e-12);
        assert_eq!(z.to_string(), "1/2+1/2*z^1");
    }

    #[test]
    fn ranks() {
        assert_eq!(root_matrix_rank(4, &[vec![0, 0], vec![0, 1], vec![0, 2], vec![0, 3]]), 2);
        assert_eq!(root_matrix_rank(4, &[vec![0, 0], vec![0, 0]]), 1);
        // rows (1, i) and (i, -1) are proportional over Q(i)
        assert_eq!(root_matrix_rank(4, &[vec![0, 1], vec![1, 2]]), 1);
        assert_eq!(root_matrix_rank(2, &[vec![0, 1], vec![1, 0]]), 1);
        assert_eq!(root_matrix_rank(2, &[vec![0, 0], vec![0, 1]]), 2);
        assert_eq!(root_matrix_rank(1, &[vec![0, 0, 0]]), 1);
    }
}
