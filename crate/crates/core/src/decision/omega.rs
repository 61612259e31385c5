//! Parameterized families `C(k, N, x) = 0` and their truncated multi-block
//! Hamiltonians.

use std::fmt;
use std::str::FromStr;

use num_bigint::{BigInt, BigUint};
use num_traits::ToPrimitive;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::regularized::{beta, RegulatorFamily};
use crate::error::{Error, Result};
use crate::fock::{hp_exact_diagonal, HermitianOperator, TruncatedFockSpace};
use crate::oracle::{find_solutions, SearchBox};
use crate::polynomial::{
    biguint_string, parse_with_naming, DiophantinePolynomial, LatticePoint, PolynomialLimits,
    VariableNaming,
};

pub const OMEGA_CAVEAT: &str = "census over a finite parameter range and a finite search box; \
no bit of the true halting probability is decided";

const PARAMS: usize = 2;

/// A polynomial over `p0 = k`, `p1 = N` and unknowns `x0 … x{K-1}`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct OmegaFamily {
    poly: DiophantinePolynomial,
}

impl OmegaFamily {
    pub fn parse_with(text: &str, limits: &PolynomialLimits) -> Result<Self> {
        let poly = parse_with_naming(text, limits, VariableNaming::Family { params: PARAMS })?;
        Ok(Self { poly })
    }

    /// Slots `0` and `1` are `k` and `N`; the rest are unknowns.
    pub fn from_polynomial(poly: DiophantinePolynomial) -> Result<Self> {
        if poly.num_vars() <= PARAMS {
            return Err(Error::invalid("family needs at least one unknown besides k and N"));
        }
        Ok(Self { poly })
    }

    pub fn polynomial(&self) -> &DiophantinePolynomial {
        &self.poly
    }

    pub fn unknowns(&self) -> usize {
        self.poly.num_vars() - PARAMS
    }

    /// `C(k, N, ·)` as a polynomial in the unknowns.
    pub fn instantiate(&self, k: u64, n: u64) -> Result<DiophantinePolynomial> {
        self.poly
            .substitute_leading(&[BigInt::from(k), BigInt::from(n)])
    }
}

impl FromStr for OmegaFamily {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Self::parse_with(s, &PolynomialLimits::default())
    }
}

impl fmt::Display for OmegaFamily {
    /// Family text with a `vars=K` header counting unknowns.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "vars={}", self.unknowns())?;
        let text = self.poly.to_string();
        let mut chars = text.chars().peekable();
        while let Some(c) = chars.next() {
            if c != 'x' {
                write!(f, "{c}")?;
                continue;
            }
            let mut digits = String::new();
            while let Some(d) = chars.peek().filter(|d| d.is_ascii_digit()) {
                digits.push(*d);
                chars.next();
            }
            let j: usize = digits.parse().expect("printer emits an index after x");
            if j < PARAMS {
                write!(f, "p{j}")?;
            } else {
                write!(f, "x{}", j - PARAMS)?;
            }
        }
        Ok(())
    }
}

impl Serialize for OmegaFamily {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.serialize_str(&self.to_string())
    }
}

impl<'de> Deserialize<'de> for OmegaFamily {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        String::deserialize(d)?.parse().map_err(serde::de::Error::custom)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct OmegaHamiltonian {
    pub operator: HermitianOperator,
    pub k: u64,
    pub n_max: u64,
    pub s: f64,
    /// `min over block N of C(k, N, ·)²`.
    pub block_minima: Vec<BigUint>,
    /// `Σ_N β_N(s)·block_minima[N]`.
    pub decomposed_min: f64,
    /// Smallest diagonal entry of `operator`.
    pub global_min: f64,
}

/// Diagonal operator on `n_max + 1` copies of `block_space`; block `N`
/// carries the weight `β_N(s)` and the instance `C(k, N, ·)`.
///
/// Only `rf.s()` is used: the block count plays the role of the series
/// bound.
pub fn build_omega_hamiltonian(
    family: &OmegaFamily,
    k: u64,
    n_max: u64,
    rf: &RegulatorFamily,
    block_space: &TruncatedFockSpace,
) -> Result<OmegaHamiltonian> {
    if n_max < 1 {
        return Err(Error::invalid("n_max must be at least 1"));
    }
    if block_space.modes() != family.unknowns() {
        return Err(Error::DimensionMismatch {
            expected: family.unknowns(),
            found: block_space.modes(),
        });
    }
    let blocks = n_max as usize + 1;
    let cutoffs: Vec<u32> = (0..blocks)
        .flat_map(|_| block_space.cutoffs().iter().copied())
        .collect();
    let full = TruncatedFockSpace::new(cutoffs)?;

    let tables: Vec<Vec<BigUint>> = (0..blocks as u64)
        .into_par_iter()
        .map(|n| hp_exact_diagonal(&family.instantiate(k, n)?, block_space))
        .collect::<Result<_>>()?;
    let float_tables: Vec<Vec<f64>> = tables
        .iter()
        .map(|t| {
            t.iter()
                .map(|v| v.to_f64().filter(|f| f.is_finite()).ok_or(()))
                .collect::<std::result::Result<Vec<f64>, ()>>()
        })
        .collect::<std::result::Result<_, _>>()
        .map_err(|_| Error::invalid("block energy not representable as f64"))?;
    let weights: Vec<f64> = (0..blocks as u64).map(|n| beta(n, rf.s())).collect();

    let bd = block_space.dim();
    let diag: Vec<f64> = (0..full.dim())
        .into_par_iter()
        .map(|idx| {
            let mut rest = idx;
            let mut acc = 0.0;
            for (w, t) in weights.iter().zip(&float_tables) {
                acc += w * t[rest % bd];
                rest /= bd;
            }
            acc
        })
        .collect();
    let global_min = diag.iter().cloned().fold(f64::INFINITY, f64::min);
    let block_minima: Vec<BigUint> = tables
        .iter()
        .map(|t| t.iter().min().expect("block is non-empty").clone())
        .collect();
    let decomposed_min = weights
        .iter()
        .zip(&block_minima)
        .map(|(w, m)| w * m.to_f64().unwrap_or(f64::INFINITY))
        .sum();

    Ok(OmegaHamiltonian {
        operator: HermitianOperator::diagonal(full, diag)?,
        k,
        n_max,
        s: rf.s(),
        block_minima,
        decomposed_min,
        global_min,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct OmegaCensusEntry {
    pub n: u64,
    pub solution_count: usize,
    pub first_solution: Option<LatticePoint>,
    #[serde(with = "biguint_string")]
    pub min_square: BigUint,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct OmegaBitReport {
    pub family: OmegaFamily,
    pub k: u64,
    pub n_max: u64,
    pub search_box: Vec<u64>,
    pub census: Vec<OmegaCensusEntry>,
    /// Number of `N ≤ n_max` with a solution in the box.
    pub solvable_count: usize,
    pub bit: String,
    pub caveat: String,
}

/// Classical census of `C(k, N, ·) = 0` for `N = 0 … n_max`.
pub fn omega_bit_report(
    family: &OmegaFamily,
    k: u64,
    n_max: u64,
    oracle_box: &SearchBox,
) -> Result<OmegaBitReport> {
    if oracle_box.dims() != family.unknowns() {
        return Err(Error::DimensionMismatch {
            expected: family.unknowns(),
            found: oracle_box.dims(),
        });
    }
    let census = (0..=n_max)
        .into_par_iter()
        .map(|n| {
            let c = family.instantiate(k, n)?;
            let sols = find_solutions(&c, oracle_box)?;
            let min = crate::oracle::min_of_square(&c, oracle_box)?;
            Ok(OmegaCensusEntry {
                n,
                solution_count: sols.len(),
                first_solution: sols.into_iter().next(),
                min_square: min.value,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let solvable_count = census.iter().filter(|e| e.solution_count > 0).count();
    Ok(OmegaBitReport {
        family: family.clone(),
        k,
        n_max,
        search_box: oracle_box.upper().to_vec(),
        census,
        solvable_count,
        bit: "undetermined".into(),
        caveat: OMEGA_CAVEAT.into(),
    })
}
