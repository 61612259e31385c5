//! Brute-force ground truth over finite boxes of non-negative integers.
//!
//! Everything here enumerates the box exhaustively with exact integer
//! arithmetic, using its own term-by-term evaluator so that the results stay
//! independent of the Hamiltonian construction they are used to check.

use num_bigint::{BigInt, BigUint};
use num_traits::{One, ToPrimitive, Zero};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::polynomial::{DiophantinePolynomial, LatticePoint};

pub const DEFAULT_GRID_LIMIT: u128 = 100_000_000;

/// Inclusive per-variable upper bounds; lower bounds are always zero.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SearchBox {
    upper: Vec<u64>,
}

impl SearchBox {
    pub fn new(upper: Vec<u64>) -> Result<Self> {
        Self::with_limit(upper, DEFAULT_GRID_LIMIT)
    }

    pub fn with_limit(upper: Vec<u64>, limit: u128) -> Result<Self> {
        if upper.is_empty() {
            return Err(Error::invalid("search box needs at least one dimension"));
        }
        let size = upper
            .iter()
            .try_fold(1u128, |acc, &u| acc.checked_mul(u as u128 + 1))
            .unwrap_or(u128::MAX);
        if size > limit {
            return Err(Error::LimitExceeded {
                what: "oracle grid size",
                value: size,
                limit,
            });
        }
        Ok(Self { upper })
    }

    pub fn cube(dims: usize, bound: u64) -> Result<Self> {
        Self::new(vec![bound; dims])
    }

    pub fn upper(&self) -> &[u64] {
        &self.upper
    }

    pub fn dims(&self) -> usize {
        self.upper.len()
    }

    pub fn size(&self) -> u128 {
        self.upper.iter().map(|&u| u as u128 + 1).product()
    }

    fn check(&self, p: &DiophantinePolynomial) -> Result<()> {
        if self.dims() != p.num_vars() {
            return Err(Error::DimensionMismatch {
                expected: p.num_vars(),
                found: self.dims(),
            });
        }
        Ok(())
    }

    /// Visits every point with the first coordinate fixed to `head`, in
    /// lexicographic order (last coordinate fastest).
    fn for_each_in_slice(&self, head: u64, mut f: impl FnMut(&[u64])) {
        let mut pt = vec![0u64; self.dims()];
        pt[0] = head;
        loop {
            f(&pt);
            let mut j = self.dims();
            loop {
                if j == 1 {
                    return;
                }
                j -= 1;
                if pt[j] < self.upper[j] {
                    pt[j] += 1;
                    break;
                }
                pt[j] = 0;
            }
        }
    }
}

/// Plain term-by-term evaluation: coefficient times repeated products.
pub fn eval_direct(p: &DiophantinePolynomial, pt: &[u64]) -> BigInt {
    let mut total = BigInt::zero();
    for t in p.terms() {
        let mut v = t.coeff.clone();
        for (&x, &e) in pt.iter().zip(t.monomial.exponents()) {
            let xb = BigInt::from(x);
            for _ in 0..e {
                v *= &xb;
            }
        }
        total += v;
    }
    total
}

/// All solutions of `P = 0` inside the box, in lexicographic order.
pub fn find_solutions(p: &DiophantinePolynomial, bx: &SearchBox) -> Result<Vec<LatticePoint>> {
    bx.check(p)?;
    let slices: Vec<Vec<LatticePoint>> = (0..=bx.upper[0])
        .into_par_iter()
        .map(|head| {
            let mut found = Vec::new();
            bx.for_each_in_slice(head, |pt| {
                if eval_direct(p, pt).is_zero() {
                    found.push(LatticePoint::from_u64s(pt));
                }
            });
            found
        })
        .collect();
    Ok(slices.into_iter().flatten().collect())
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SquareMinimum {
    pub value: BigUint,
    pub argmins: Vec<LatticePoint>,
}

/// Exact minimum of `P²` over the box with every attaining point.
pub fn min_of_square(p: &DiophantinePolynomial, bx: &SearchBox) -> Result<SquareMinimum> {
    bx.check(p)?;
    let slices: Vec<Option<SquareMinimum>> = (0..=bx.upper[0])
        .into_par_iter()
        .map(|head| {
            let mut best: Option<SquareMinimum> = None;
            bx.for_each_in_slice(head, |pt| {
                let v = eval_direct(p, pt);
                let sq = (&v * &v).to_biguint().expect("square is non-negative");
                merge_min(&mut best, sq, LatticePoint::from_u64s(pt));
            });
            best
        })
        .collect();
    let mut best: Option<SquareMinimum> = None;
    for s in slices.into_iter().flatten() {
        match &mut best {
            None => best = Some(s),
            Some(b) if s.value < b.value => *b = s,
            Some(b) if s.value == b.value => b.argmins.extend(s.argmins),
            Some(_) => {}
        }
    }
    Ok(best.expect("box is non-empty"))
}

fn merge_min(best: &mut Option<SquareMinimum>, value: BigUint, pt: LatticePoint) {
    match best {
        None => {
            *best = Some(SquareMinimum {
                value,
                argmins: vec![pt],
            })
        }
        Some(b) if value < b.value => {
            b.value = value;
            b.argmins = vec![pt];
        }
        Some(b) if value == b.value => b.argmins.push(pt),
        Some(_) => {}
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct RegularizedMinimum {
    pub value: f64,
    /// Exact minimum as `numerator / i_max!`, available when `s = 1`.
    pub exact_numerator: Option<BigUint>,
    pub argmins: Vec<LatticePoint>,
}

/// Reference evaluation of `min_n Σ_{i=0}^{i_max} β_i(s)·P(n + i·e_var)²`.
///
/// At `s = 1` the sum is accumulated exactly: multiplying through by
/// `i_max!` turns every weight `1/i!` into the integer `i_max!/i!`. Other
/// exponents use weights `exp(-s·Σ_{k≤i} ln k)` summed in increasing `i`.
pub fn regularized_min(
    p: &DiophantinePolynomial,
    var: usize,
    s: f64,
    i_max: usize,
    bx: &SearchBox,
) -> Result<RegularizedMinimum> {
    bx.check(p)?;
    if var >= p.num_vars() {
        return Err(Error::IndexOutOfRange {
            index: var,
            len: p.num_vars(),
        });
    }
    if !(s > 0.0 && s <= 1.0) {
        return Err(Error::invalid(format!("regulator exponent s = {s} not in (0,1]")));
    }
    if s == 1.0 {
        regularized_min_exact(p, var, i_max, bx)
    } else {
        regularized_min_float(p, var, s, i_max, bx)
    }
}

fn regularized_min_exact(
    p: &DiophantinePolynomial,
    var: usize,
    i_max: usize,
    bx: &SearchBox,
) -> Result<RegularizedMinimum> {
    // weights[i] = i_max! / i!
    let mut weights = vec![BigUint::one(); i_max + 1];
    for i in (0..i_max).rev() {
        weights[i] = &weights[i + 1] * BigUint::from(i as u64 + 1);
    }
    let scale = weights[0].clone();
    let mut best: Option<SquareMinimum> = None;
    for head in 0..=bx.upper[0] {
        bx.for_each_in_slice(head, |pt| {
            let mut shifted = pt.to_vec();
            let mut acc = BigUint::zero();
            for (i, w) in weights.iter().enumerate() {
                shifted[var] = pt[var] + i as u64;
                let v = eval_direct(p, &shifted);
                let sq = (&v * &v).to_biguint().expect("square is non-negative");
                acc += sq * w;
            }
            merge_min(&mut best, acc, LatticePoint::from_u64s(pt));
        });
    }
    let best = best.expect("box is non-empty");
    let value = ratio_to_f64(&best.value, &scale);
    Ok(RegularizedMinimum {
        value,
        exact_numerator: Some(best.value),
        argmins: best.argmins,
    })
}

fn ratio_to_f64(num: &BigUint, den: &BigUint) -> f64 {
    // Scale so the integer quotient carries ~64 significant bits.
    let shift = 64i64 + den.bits() as i64 - num.bits() as i64;
    let q = if shift >= 0 {
        (num << shift as u64) / den
    } else {
        (num >> (-shift) as u64) / den
    };
    q.to_f64().unwrap_or(f64::INFINITY) * 2f64.powi(-shift as i32)
}

fn regularized_min_float(
    p: &DiophantinePolynomial,
    var: usize,
    s: f64,
    i_max: usize,
    bx: &SearchBox,
) -> Result<RegularizedMinimum> {
    let mut ln_fact = 0.0f64;
    let weights: Vec<f64> = (0..=i_max)
        .map(|i| {
            if i > 0 {
                ln_fact += (i as f64).ln();
            }
            (-s * ln_fact).exp()
        })
        .collect();
    let mut best: Option<(f64, Vec<LatticePoint>)> = None;
    for head in 0..=bx.upper[0] {
        bx.for_each_in_slice(head, |pt| {
            let mut shifted = pt.to_vec();
            let mut acc = 0.0f64;
            for (i, w) in weights.iter().enumerate() {
                shifted[var] = pt[var] + i as u64;
                let v = eval_direct(p, &shifted);
                let sq = (&v * &v).to_f64().unwrap_or(f64::INFINITY);
                acc += w * sq;
            }
            let lp = LatticePoint::from_u64s(pt);
            match &mut best {
                None => best = Some((acc, vec![lp])),
                Some((b, args)) if acc < *b => {
                    *b = acc;
                    *args = vec![lp];
                }
                Some((b, args)) if acc == *b => args.push(lp),
                Some(_) => {}
            }
        });
    }
    let (value, argmins) = best.expect("box is non-empty");
    Ok(RegularizedMinimum {
        value,
        exact_numerator: None,
        argmins,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::polynomial::parse_polynomial;

    fn p(text: &str) -> DiophantinePolynomial {
        parse_polynomial(text).unwrap()
    }

    fn pts(v: &[&[u64]]) -> Vec<LatticePoint> {
        v.iter().map(|c| LatticePoint::from_u64s(c)).collect()
    }

    #[test]
    fn solutions_examples() {
        let b1 = SearchBox::cube(1, 10).unwrap();
        assert_eq!(
            find_solutions(&p("x0^2 - 3*x0 + 2"), &b1).unwrap(),
            pts(&[&[1], &[2]])
        );
        assert!(find_solutions(&p("x0 + 1"), &b1).unwrap().is_empty());
        let b2 = SearchBox::cube(2, 10).unwrap();
        assert_eq!(
            find_solutions(&p("x0^2 + x1^2 - 25"), &b2).unwrap(),
            pts(&[&[0, 5], &[3, 4], &[4, 3], &[5, 0]])
        );
    }

    #[test]
    fn min_of_square_examples() {
        let b = SearchBox::cube(1, 10).unwrap();
        let m = min_of_square(&p("x0 - 3"), &b).unwrap();
        assert_eq!(m.value, BigUint::zero());
        assert_eq!(m.argmins, pts(&[&[3]]));

        let m = min_of_square(&p("x0^2 - 2"), &b).unwrap();
        assert_eq!(m.value, BigUint::one());
        assert_eq!(m.argmins, pts(&[&[1]]));

        let m = min_of_square(&p("x0 + 1"), &b).unwrap();
        assert_eq!(m.value, BigUint::one());
        assert_eq!(m.argmins, pts(&[&[0]]));
    }

    #[test]
    fn grid_limit_is_enforced() {
        assert!(matches!(
            SearchBox::new(vec![463; 3]),
            Ok(_)
        ));
        assert!(matches!(
            SearchBox::new(vec![10_000; 3]),
            Err(Error::LimitExceeded { .. })
        ));
    }

    #[test]
    fn box_dimension_must_match() {
        let b = SearchBox::cube(2, 3).unwrap();
        assert!(matches!(
            find_solutions(&p("x0"), &b),
            Err(Error::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn regularized_min_zero_row() {
        let b = SearchBox::cube(2, 4).unwrap();
        let m = regularized_min(&p("x1"), 0, 1.0, 30, &b).unwrap();
        assert_eq!(m.value, 0.0);
        assert_eq!(m.exact_numerator, Some(BigUint::zero()));
        assert_eq!(m.argmins, pts(&[&[0, 0], &[1, 0], &[2, 0], &[3, 0], &[4, 0]]));
    }

    #[test]
    fn weights_at_unit_exponent_sum_to_e() {
        // P = 1 makes every entry Σ_{i≤30} 1/i!, which equals e to within 1/31!.
        let b = SearchBox::cube(1, 0).unwrap();
        let m = regularized_min(&p("1"), 0, 1.0, 30, &b).unwrap();
        assert!((m.value - std::f64::consts::E).abs() < 1e-12);
        let f = regularized_min(&p("1"), 0, 0.999_999_999_999, 30, &b).unwrap();
        assert!((f.value - std::f64::consts::E).abs() < 1e-10);
    }

    #[test]
    fn shifted_linear_closed_form() {
        // Σ (n + i - 3)²/i! with n = 2 equals Σ (i-1)²/i! = e.
        let b = SearchBox::cube(1, 10).unwrap();
        let m = regularized_min(&p("x0 - 3"), 0, 1.0, 30, &b).unwrap();
        assert_eq!(m.argmins, pts(&[&[2]]));
        assert!((m.value / std::f64::consts::E - 1.0).abs() < 1e-14);
    }
}
