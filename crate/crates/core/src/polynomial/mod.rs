//! Exact multivariate integer polynomials.
//!
//! Terms are kept in canonical form: no duplicate exponent vectors, no zero
//! coefficients, sorted in descending graded-lexicographic order. Variables
//! are indexed from zero (`x0 … x{K-1}`).

mod parse;

use std::cmp::Ordering;
use std::collections::BTreeMap;
use std::fmt;

use num_bigint::{BigInt, BigUint, Sign};
use num_traits::{One, Signed, ToPrimitive, Zero};
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};

pub use parse::{parse_polynomial, parse_polynomial_with, parse_with_naming, VariableNaming};

/// Guard limits for polynomial construction.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default)]
pub struct PolynomialLimits {
    pub max_vars: usize,
    pub max_degree: u32,
    pub max_terms: usize,
}

impl Default for PolynomialLimits {
    fn default() -> Self {
        Self {
            max_vars: 8,
            max_degree: 16,
            max_terms: 100_000,
        }
    }
}

/// Exponent vector ordered graded-lexicographically: total degree first,
/// then lexicographically with `x0` most significant.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Monomial(Vec<u32>);

impl Monomial {
    pub fn new(exponents: Vec<u32>) -> Self {
        Monomial(exponents)
    }

    pub fn exponents(&self) -> &[u32] {
        &self.0
    }

    pub fn degree(&self) -> u64 {
        self.0.iter().map(|&e| e as u64).sum()
    }

    fn mul(&self, other: &Monomial) -> Monomial {
        Monomial(self.0.iter().zip(&other.0).map(|(a, b)| a + b).collect())
    }
}

impl Ord for Monomial {
    fn cmp(&self, other: &Self) -> Ordering {
        self.degree()
            .cmp(&other.degree())
            .then_with(|| self.0.cmp(&other.0))
    }
}

impl PartialOrd for Monomial {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Term {
    pub coeff: BigInt,
    pub monomial: Monomial,
}

/// Sparse multivariate polynomial with arbitrary-precision integer coefficients.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct DiophantinePolynomial {
    num_vars: usize,
    terms: Vec<Term>,
}

type TermMap = BTreeMap<Monomial, BigInt>;

fn add_into(map: &mut TermMap, monomial: Monomial, coeff: BigInt) {
    if coeff.is_zero() {
        return;
    }
    match map.entry(monomial) {
        std::collections::btree_map::Entry::Occupied(mut e) => {
            *e.get_mut() += coeff;
            if e.get().is_zero() {
                e.remove();
            }
        }
        std::collections::btree_map::Entry::Vacant(e) => {
            e.insert(coeff);
        }
    }
}

fn binomial_row(n: u32) -> Vec<BigInt> {
    let mut row = vec![BigInt::one()];
    for k in 0..n {
        let next = &row[k as usize] * BigInt::from(n - k) / BigInt::from(k + 1);
        row.push(next);
    }
    row
}

impl DiophantinePolynomial {
    pub fn zero(num_vars: usize) -> Result<Self> {
        Self::from_terms(num_vars, Vec::<(BigInt, Vec<u32>)>::new())
    }

    pub fn constant(num_vars: usize, value: impl Into<BigInt>) -> Result<Self> {
        Self::from_terms(num_vars, vec![(value.into(), vec![0; num_vars])])
    }

    /// Single variable `x_index`.
    pub fn variable(num_vars: usize, index: usize) -> Result<Self> {
        if index >= num_vars {
            return Err(Error::IndexOutOfRange {
                index,
                len: num_vars,
            });
        }
        let mut e = vec![0; num_vars];
        e[index] = 1;
        Self::from_terms(num_vars, vec![(BigInt::one(), e)])
    }

    /// Builds a canonical polynomial, merging duplicate exponent vectors and
    /// dropping zero coefficients.
    pub fn from_terms<C: Into<BigInt>>(
        num_vars: usize,
        terms: impl IntoIterator<Item = (C, Vec<u32>)>,
    ) -> Result<Self> {
        if num_vars == 0 {
            return Err(Error::invalid("a polynomial needs at least one variable"));
        }
        let mut map = TermMap::new();
        for (c, e) in terms {
            if e.len() != num_vars {
                return Err(Error::DimensionMismatch {
                    expected: num_vars,
                    found: e.len(),
                });
            }
            add_into(&mut map, Monomial(e), c.into());
        }
        Ok(Self::from_map(num_vars, map))
    }

    fn from_map(num_vars: usize, map: TermMap) -> Self {
        let terms = map
            .into_iter()
            .rev()
            .map(|(monomial, coeff)| Term { coeff, monomial })
            .collect();
        Self { num_vars, terms }
    }

    fn to_map(&self) -> TermMap {
        self.terms
            .iter()
            .map(|t| (t.monomial.clone(), t.coeff.clone()))
            .collect()
    }

    pub fn num_vars(&self) -> usize {
        self.num_vars
    }

    /// Terms in descending graded-lexicographic order.
    pub fn terms(&self) -> &[Term] {
        &self.terms
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn total_degree(&self) -> u64 {
        self.terms
            .iter()
            .map(|t| t.monomial.degree())
            .max()
            .unwrap_or(0)
    }

    /// Highest power of `var` appearing in any term.
    pub fn degree_in(&self, var: usize) -> u32 {
        self.terms
            .iter()
            .map(|t| t.monomial.0[var])
            .max()
            .unwrap_or(0)
    }

    /// Returns the same polynomial viewed in a space of `num_vars` variables.
    pub fn with_num_vars(&self, num_vars: usize) -> Result<Self> {
        if num_vars == 0 {
            return Err(Error::invalid("a polynomial needs at least one variable"));
        }
        let mut map = TermMap::new();
        for t in &self.terms {
            let e = &t.monomial.0;
            if e.iter().skip(num_vars).any(|&x| x != 0) {
                return Err(Error::invalid(format!(
                    "polynomial mentions variables beyond x{}",
                    num_vars - 1
                )));
            }
            let mut e2 = e.clone();
            e2.resize(num_vars, 0);
            add_into(&mut map, Monomial(e2), t.coeff.clone());
        }
        Ok(Self::from_map(num_vars, map))
    }

    pub fn evaluate(&self, pt: &LatticePoint) -> Result<BigInt> {
        if pt.len() != self.num_vars {
            return Err(Error::DimensionMismatch {
                expected: self.num_vars,
                found: pt.len(),
            });
        }
        let coords: Vec<BigInt> = pt.0.iter().map(|c| BigInt::from(c.clone())).collect();
        Ok(self.eval_with(&coords))
    }

    /// Evaluation at a point with machine-sized coordinates; still exact.
    pub fn evaluate_u64(&self, pt: &[u64]) -> Result<BigInt> {
        if pt.len() != self.num_vars {
            return Err(Error::DimensionMismatch {
                expected: self.num_vars,
                found: pt.len(),
            });
        }
        let coords: Vec<BigInt> = pt.iter().map(|&c| BigInt::from(c)).collect();
        Ok(self.eval_with(&coords))
    }

    fn eval_with(&self, coords: &[BigInt]) -> BigInt {
        // Power tables per variable, filled lazily up to the degree needed.
        let mut powers: Vec<Vec<BigInt>> = vec![vec![BigInt::one()]; self.num_vars];
        let mut acc = BigInt::zero();
        for t in &self.terms {
            let mut v = t.coeff.clone();
            for (j, &e) in t.monomial.0.iter().enumerate() {
                if e == 0 {
                    continue;
                }
                let table = &mut powers[j];
                while table.len() <= e as usize {
                    let next = table.last().unwrap() * &coords[j];
                    table.push(next);
                }
                v *= &table[e as usize];
            }
            acc += v;
        }
        acc
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        self.check_same_vars(other)?;
        let mut map = self.to_map();
        for t in &other.terms {
            add_into(&mut map, t.monomial.clone(), t.coeff.clone());
        }
        Ok(Self::from_map(self.num_vars, map))
    }

    pub fn neg(&self) -> Self {
        Self {
            num_vars: self.num_vars,
            terms: self
                .terms
                .iter()
                .map(|t| Term {
                    coeff: -&t.coeff,
                    monomial: t.monomial.clone(),
                })
                .collect(),
        }
    }

    pub fn sub(&self, other: &Self) -> Result<Self> {
        self.add(&other.neg())
    }

    pub fn mul(&self, other: &Self) -> Result<Self> {
        self.mul_with_limit(other, PolynomialLimits::default().max_terms)
    }

    /// Product by pairwise term multiplication; fails if the result would
    /// exceed `max_terms` terms.
    pub fn mul_with_limit(&self, other: &Self, max_terms: usize) -> Result<Self> {
        self.check_same_vars(other)?;
        let mut map = TermMap::new();
        for a in &self.terms {
            for b in &other.terms {
                add_into(&mut map, a.monomial.mul(&b.monomial), &a.coeff * &b.coeff);
            }
            if map.len() > max_terms {
                return Err(Error::LimitExceeded {
                    what: "term count",
                    value: map.len() as u128,
                    limit: max_terms as u128,
                });
            }
        }
        Ok(Self::from_map(self.num_vars, map))
    }

    pub fn square(&self) -> Result<Self> {
        self.mul(self)
    }

    pub fn square_with_limit(&self, max_terms: usize) -> Result<Self> {
        self.mul_with_limit(self, max_terms)
    }

    /// `Q(x) = P(x with x_var replaced by x_var + amount)`, re-expanded exactly.
    pub fn shift(&self, var: usize, amount: u64) -> Result<Self> {
        if var >= self.num_vars {
            return Err(Error::IndexOutOfRange {
                index: var,
                len: self.num_vars,
            });
        }
        if amount == 0 {
            return Ok(self.clone());
        }
        let l = BigInt::from(amount);
        let mut map = TermMap::new();
        for t in &self.terms {
            let e = t.monomial.0[var];
            let binom = binomial_row(e);
            let mut l_pow = BigInt::one();
            // k counts how many factors of L are taken.
            for k in 0..=e {
                let mut mono = t.monomial.0.clone();
                mono[var] = e - k;
                let c = &t.coeff * &binom[k as usize] * &l_pow;
                add_into(&mut map, Monomial(mono), c);
                l_pow *= &l;
            }
        }
        Ok(Self::from_map(self.num_vars, map))
    }

    /// Substitutes constants for the leading `values.len()` variables and
    /// returns a polynomial over the remaining ones.
    pub fn substitute_leading(&self, values: &[BigInt]) -> Result<Self> {
        let m = values.len();
        if m >= self.num_vars {
            return Err(Error::invalid(
                "substitution must leave at least one free variable",
            ));
        }
        let mut map = TermMap::new();
        for t in &self.terms {
            let mut c = t.coeff.clone();
            for (v, &e) in values.iter().zip(&t.monomial.0[..m]) {
                c *= num_traits::pow(v.clone(), e as usize);
            }
            add_into(&mut map, Monomial(t.monomial.0[m..].to_vec()), c);
        }
        Ok(Self::from_map(self.num_vars - m, map))
    }

    /// Exact coefficients (ascending powers of `i`) of the univariate
    /// polynomial `i ↦ P(base + i·e_var)`.
    pub fn line_restriction(&self, var: usize, base: &[u64]) -> Result<Vec<BigInt>> {
        if base.len() != self.num_vars {
            return Err(Error::DimensionMismatch {
                expected: self.num_vars,
                found: base.len(),
            });
        }
        if var >= self.num_vars {
            return Err(Error::IndexOutOfRange {
                index: var,
                len: self.num_vars,
            });
        }
        let deg = self.degree_in(var) as usize;
        let mut coeffs = vec![BigInt::zero(); deg + 1];
        let b_var = BigInt::from(base[var]);
        for t in &self.terms {
            let mut c = t.coeff.clone();
            for (j, &e) in t.monomial.0.iter().enumerate() {
                if j != var && e > 0 {
                    c *= num_traits::pow(BigInt::from(base[j]), e as usize);
                }
            }
            if c.is_zero() {
                continue;
            }
            let e = t.monomial.0[var];
            let binom = binomial_row(e);
            // (b + i)^e = Σ_k C(e,k) i^k b^(e-k)
            for k in 0..=e {
                let b_pow = num_traits::pow(b_var.clone(), (e - k) as usize);
                coeffs[k as usize] += &c * &binom[k as usize] * b_pow;
            }
        }
        while coeffs.len() > 1 && coeffs.last().is_some_and(Zero::is_zero) {
            coeffs.pop();
        }
        Ok(coeffs)
    }

    /// Text form preceded by an explicit `vars=K` header; parsing it returns
    /// an identical polynomial.
    pub fn to_canonical_text(&self) -> String {
        format!("vars={}\n{}", self.num_vars, self)
    }

    fn check_same_vars(&self, other: &Self) -> Result<()> {
        if self.num_vars != other.num_vars {
            return Err(Error::DimensionMismatch {
                expected: self.num_vars,
                found: other.num_vars,
            });
        }
        Ok(())
    }
}

impl fmt::Display for DiophantinePolynomial {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.terms.is_empty() {
            return write!(f, "0");
        }
        for (k, t) in self.terms.iter().enumerate() {
            let negative = t.coeff.sign() == Sign::Minus;
            match (k, negative) {
                (0, true) => write!(f, "-")?,
                (0, false) => {}
                (_, true) => write!(f, " - ")?,
                (_, false) => write!(f, " + ")?,
            }
            let mag = t.coeff.abs();
            let factors: Vec<String> = t
                .monomial
                .0
                .iter()
                .enumerate()
                .filter(|(_, &e)| e > 0)
                .map(|(j, &e)| {
                    if e == 1 {
                        format!("x{j}")
                    } else {
                        format!("x{j}^{e}")
                    }
                })
                .collect();
            if factors.is_empty() {
                write!(f, "{mag}")?;
            } else if mag.is_one() {
                write!(f, "{}", factors.join("*"))?;
            } else {
                write!(f, "{mag}*{}", factors.join("*"))?;
            }
        }
        Ok(())
    }
}

impl std::str::FromStr for DiophantinePolynomial {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        parse_polynomial(s)
    }
}

impl Serialize for DiophantinePolynomial {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.serialize_str(&self.to_canonical_text())
    }
}

impl<'de> Deserialize<'de> for DiophantinePolynomial {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let text = String::deserialize(d)?;
        parse_polynomial(&text).map_err(serde::de::Error::custom)
    }
}

/// A tuple of non-negative integers `(n_0, …, n_{K-1})`.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct LatticePoint(Vec<BigUint>);

impl LatticePoint {
    pub fn new(coords: Vec<BigUint>) -> Self {
        LatticePoint(coords)
    }

    pub fn from_u64s(coords: &[u64]) -> Self {
        LatticePoint(coords.iter().map(|&c| BigUint::from(c)).collect())
    }

    pub fn coords(&self) -> &[BigUint] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn to_u64s(&self) -> Option<Vec<u64>> {
        self.0.iter().map(|c| c.to_u64()).collect()
    }
}

impl fmt::Display for LatticePoint {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "[")?;
        for (k, c) in self.0.iter().enumerate() {
            if k > 0 {
                write!(f, ",")?;
            }
            write!(f, "{c}")?;
        }
        write!(f, "]")
    }
}

// Coordinates go out as JSON integers when they fit in u64, otherwise as
// decimal strings.
impl Serialize for LatticePoint {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        use serde::ser::SerializeSeq;
        let mut seq = s.serialize_seq(Some(self.0.len()))?;
        for c in &self.0 {
            match c.to_u64() {
                Some(v) => seq.serialize_element(&v)?,
                None => seq.serialize_element(&c.to_string())?,
            }
        }
        seq.end()
    }
}

impl<'de> Deserialize<'de> for LatticePoint {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Coord {
            Num(u64),
            Text(String),
        }
        let raw = Vec::<Coord>::deserialize(d)?;
        raw.into_iter()
            .map(|c| match c {
                Coord::Num(v) => Ok(BigUint::from(v)),
                Coord::Text(t) => t.parse::<BigUint>().map_err(serde::de::Error::custom),
            })
            .collect::<std::result::Result<Vec<_>, _>>()
            .map(LatticePoint)
    }
}

/// Serde adapter writing big integers as decimal strings.
pub mod bigint_string {
    use num_bigint::BigInt;
    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(v: &BigInt, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&v.to_string())
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<BigInt, D::Error> {
        String::deserialize(d)?
            .parse()
            .map_err(serde::de::Error::custom)
    }

    pub mod option {
        use num_bigint::BigInt;
        use serde::{Deserialize, Deserializer, Serializer};

        pub fn serialize<S: Serializer>(v: &Option<BigInt>, s: S) -> Result<S::Ok, S::Error> {
            match v {
                Some(v) => s.serialize_some(&v.to_string()),
                None => s.serialize_none(),
            }
        }

        pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Option<BigInt>, D::Error> {
            Option::<String>::deserialize(d)?
                .map(|t| t.parse().map_err(serde::de::Error::custom))
                .transpose()
        }
    }
}

/// Serde adapter writing unsigned big integers as decimal strings.
pub mod biguint_string {
    use num_bigint::BigUint;
    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(v: &BigUint, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&v.to_string())
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<BigUint, D::Error> {
        String::deserialize(d)?
            .parse()
            .map_err(serde::de::Error::custom)
    }

    pub mod option {
        use num_bigint::BigUint;
        use serde::{Deserialize, Deserializer, Serializer};

        pub fn serialize<S: Serializer>(v: &Option<BigUint>, s: S) -> Result<S::Ok, S::Error> {
            match v {
                Some(v) => s.serialize_some(&v.to_string()),
                None => s.serialize_none(),
            }
        }

        pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Option<BigUint>, D::Error> {
            Option::<String>::deserialize(d)?
                .map(|t| t.parse().map_err(serde::de::Error::custom))
                .transpose()
        }
    }
}
