//! Truncated bosonic Fock spaces and the operators built on them.
//!
//! Basis states `|n_0, …, n_{K-1}⟩` are enumerated in mixed radix with mode 0
//! varying fastest.

use nalgebra::{DMatrix, DVector};
use num_bigint::BigUint;
use num_complex::Complex64;
use num_traits::{ToPrimitive, Zero};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::polynomial::DiophantinePolynomial;

pub const DEFAULT_MAX_DIM: usize = 1 << 16;
/// Largest dimension for which dense matrices are materialized.
pub const DENSE_LIMIT: usize = 4096;

const HERMITICITY_TOL: f64 = 1e-12;
const NORM_TOL: f64 = 1e-9;

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct TruncatedFockSpace {
    cutoffs: Vec<u32>,
    dim: usize,
}

impl TruncatedFockSpace {
    pub fn new(cutoffs: Vec<u32>) -> Result<Self> {
        Self::with_max_dim(cutoffs, DEFAULT_MAX_DIM)
    }

    pub fn with_max_dim(cutoffs: Vec<u32>, max_dim: usize) -> Result<Self> {
        if cutoffs.is_empty() {
            return Err(Error::invalid("a Fock space needs at least one mode"));
        }
        if let Some(m) = cutoffs.iter().position(|&c| c == 0) {
            return Err(Error::invalid(format!("mode {m} has cutoff 0; need n_max >= 1")));
        }
        let dim = cutoffs
            .iter()
            .try_fold(1u128, |acc, &c| acc.checked_mul(c as u128 + 1))
            .unwrap_or(u128::MAX);
        if dim > max_dim as u128 {
            return Err(Error::LimitExceeded {
                what: "Fock space dimension",
                value: dim,
                limit: max_dim as u128,
            });
        }
        Ok(Self {
            cutoffs,
            dim: dim as usize,
        })
    }

    pub fn uniform(modes: usize, n_max: u32) -> Result<Self> {
        Self::new(vec![n_max; modes])
    }

    pub fn cutoffs(&self) -> &[u32] {
        &self.cutoffs
    }

    pub fn modes(&self) -> usize {
        self.cutoffs.len()
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Index step between `n_mode` and `n_mode + 1`.
    pub fn stride(&self, mode: usize) -> usize {
        self.cutoffs[..mode].iter().map(|&c| c as usize + 1).product()
    }

    pub fn occupation(&self, mut index: usize) -> Vec<u32> {
        debug_assert!(index < self.dim);
        self.cutoffs
            .iter()
            .map(|&c| {
                let radix = c as usize + 1;
                let n = index % radix;
                index /= radix;
                n as u32
            })
            .collect()
    }

    pub fn index_of(&self, occupation: &[u32]) -> Result<usize> {
        if occupation.len() != self.modes() {
            return Err(Error::DimensionMismatch {
                expected: self.modes(),
                found: occupation.len(),
            });
        }
        let mut index = 0usize;
        for (&n, &c) in occupation.iter().zip(&self.cutoffs).rev() {
            if n > c {
                return Err(Error::IndexOutOfRange {
                    index: n as usize,
                    len: c as usize + 1,
                });
            }
            index = index * (c as usize + 1) + n as usize;
        }
        Ok(index)
    }

    /// All occupation tuples in index order.
    pub fn basis(&self) -> impl Iterator<Item = Vec<u32>> + '_ {
        let mut cur = vec![0u32; self.modes()];
        let mut first = true;
        let mut done = false;
        std::iter::from_fn(move || {
            if done {
                return None;
            }
            if first {
                first = false;
                return Some(cur.clone());
            }
            for (n, &c) in cur.iter_mut().zip(&self.cutoffs) {
                if *n < c {
                    *n += 1;
                    return Some(cur.clone());
                }
                *n = 0;
            }
            done = true;
            None
        })
    }

    fn require_dense(&self) -> Result<()> {
        if self.dim > DENSE_LIMIT {
            return Err(Error::LimitExceeded {
                what: "dense operator dimension",
                value: self.dim as u128,
                limit: DENSE_LIMIT as u128,
            });
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum Storage {
    Diagonal(Vec<f64>),
    Dense(DMatrix<Complex64>),
}

#[derive(Clone, Debug, PartialEq)]
pub struct HermitianOperator {
    space: TruncatedFockSpace,
    storage: Storage,
}

impl HermitianOperator {
    pub fn diagonal(space: TruncatedFockSpace, values: Vec<f64>) -> Result<Self> {
        if values.len() != space.dim() {
            return Err(Error::DimensionMismatch {
                expected: space.dim(),
                found: values.len(),
            });
        }
        Ok(Self {
            space,
            storage: Storage::Diagonal(values),
        })
    }

    /// Wraps a dense matrix, rejecting it if `max |M - M†| > 1e-12`.
    pub fn dense(space: TruncatedFockSpace, matrix: DMatrix<Complex64>) -> Result<Self> {
        if matrix.nrows() != space.dim() || matrix.ncols() != space.dim() {
            return Err(Error::DimensionMismatch {
                expected: space.dim(),
                found: matrix.nrows(),
            });
        }
        let op = Self {
            space,
            storage: Storage::Dense(matrix),
        };
        let defect = op.hermiticity_defect();
        if defect > HERMITICITY_TOL {
            return Err(Error::invalid(format!(
                "matrix is not Hermitian (defect {defect:e})"
            )));
        }
        Ok(op)
    }

    pub fn space(&self) -> &TruncatedFockSpace {
        &self.space
    }

    pub fn storage(&self) -> &Storage {
        &self.storage
    }

    pub fn dim(&self) -> usize {
        self.space.dim()
    }

    pub fn is_diagonal(&self) -> bool {
        matches!(self.storage, Storage::Diagonal(_))
    }

    pub fn diagonal_values(&self) -> Option<&[f64]> {
        match &self.storage {
            Storage::Diagonal(d) => Some(d),
            Storage::Dense(_) => None,
        }
    }

    pub fn to_dense(&self) -> Result<DMatrix<Complex64>> {
        match &self.storage {
            Storage::Dense(m) => Ok(m.clone()),
            Storage::Diagonal(d) => {
                self.space.require_dense()?;
                Ok(DMatrix::from_diagonal(&DVector::from_iterator(
                    d.len(),
                    d.iter().map(|&x| Complex64::new(x, 0.0)),
                )))
            }
        }
    }

    pub fn hermiticity_defect(&self) -> f64 {
        match &self.storage {
            Storage::Diagonal(_) => 0.0,
            Storage::Dense(m) => {
                let n = m.nrows();
                let mut worst = 0.0f64;
                for i in 0..n {
                    for j in i..n {
                        worst = worst.max((m[(i, j)] - m[(j, i)].conj()).norm());
                    }
                }
                worst
            }
        }
    }

    /// Largest entry magnitude.
    pub fn max_abs(&self) -> f64 {
        match &self.storage {
            Storage::Diagonal(d) => d.iter().fold(0.0, |a, x| a.max(x.abs())),
            Storage::Dense(m) => m.iter().fold(0.0, |a, x| a.max(x.norm())),
        }
    }

    pub fn apply(&self, v: &DVector<Complex64>) -> DVector<Complex64> {
        match &self.storage {
            Storage::Diagonal(d) => DVector::from_iterator(
                d.len(),
                d.iter().zip(v.iter()).map(|(&x, a)| a * x),
            ),
            Storage::Dense(m) => m * v,
        }
    }

    /// `⟨ψ|H|ψ⟩` (real part; the imaginary part vanishes for Hermitian H).
    pub fn expectation(&self, state: &StateVector) -> Result<f64> {
        if state.space() != &self.space {
            return Err(Error::SpaceMismatch);
        }
        let amps = state.amplitudes();
        Ok(match &self.storage {
            Storage::Diagonal(d) => d
                .iter()
                .zip(amps.iter())
                .map(|(&x, a)| x * a.norm_sqr())
                .sum(),
            Storage::Dense(m) => amps.dotc(&(m * amps)).re,
        })
    }

    pub fn to_json(&self) -> serde_json::Value {
        let entries: Vec<[f64; 2]> = match &self.storage {
            Storage::Diagonal(d) => d.iter().map(|&x| [x, 0.0]).collect(),
            // nalgebra is column-major; emit row-major
            Storage::Dense(m) => (0..m.nrows())
                .flat_map(|i| (0..m.ncols()).map(move |j| (i, j)))
                .map(|(i, j)| [m[(i, j)].re, m[(i, j)].im])
                .collect(),
        };
        serde_json::to_value(ArrayJson {
            kind: "operator".into(),
            dims: self.dim(),
            cutoffs: self.space.cutoffs.clone(),
            storage: match self.storage {
                Storage::Diagonal(_) => "diagonal".into(),
                Storage::Dense(_) => "dense".into(),
            },
            entries,
        })
        .expect("operator layout serializes")
    }

    pub fn from_json(value: &serde_json::Value) -> Result<Self> {
        let raw: ArrayJson = serde_json::from_value(value.clone())?;
        if raw.kind != "operator" {
            return Err(Error::invalid(format!("expected an operator, found '{}'", raw.kind)));
        }
        let space = TruncatedFockSpace::new(raw.cutoffs)?;
        if space.dim() != raw.dims {
            return Err(Error::DimensionMismatch {
                expected: space.dim(),
                found: raw.dims,
            });
        }
        match raw.storage.as_str() {
            "diagonal" => {
                Self::diagonal(space, raw.entries.iter().map(|e| e[0]).collect())
            }
            "dense" => {
                let n = raw.dims;
                if raw.entries.len() != n * n {
                    return Err(Error::DimensionMismatch {
                        expected: n * n,
                        found: raw.entries.len(),
                    });
                }
                let m = DMatrix::from_fn(n, n, |i, j| {
                    let e = raw.entries[i * n + j];
                    Complex64::new(e[0], e[1])
                });
                Self::dense(space, m)
            }
            other => Err(Error::invalid(format!("unknown storage kind '{other}'"))),
        }
    }
}

#[derive(Serialize, Deserialize)]
struct ArrayJson {
    kind: String,
    dims: usize,
    cutoffs: Vec<u32>,
    storage: String,
    entries: Vec<[f64; 2]>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct StateVector {
    space: TruncatedFockSpace,
    amplitudes: DVector<Complex64>,
}

impl StateVector {
    /// Wraps amplitudes whose norm is within 1e-9 of one.
    pub fn new(space: TruncatedFockSpace, amplitudes: DVector<Complex64>) -> Result<Self> {
        if amplitudes.len() != space.dim() {
            return Err(Error::DimensionMismatch {
                expected: space.dim(),
                found: amplitudes.len(),
            });
        }
        let norm = amplitudes.norm();
        if (norm - 1.0).abs() > NORM_TOL {
            return Err(Error::invalid(format!("state norm {norm} is not 1")));
        }
        Ok(Self { space, amplitudes })
    }

    /// Normalizes arbitrary non-zero amplitudes.
    pub fn normalized(space: TruncatedFockSpace, amplitudes: DVector<Complex64>) -> Result<Self> {
        let norm = amplitudes.norm();
        if norm == 0.0 || !norm.is_finite() {
            return Err(Error::invalid("cannot normalize a zero or non-finite vector"));
        }
        Self::new(space, amplitudes / Complex64::new(norm, 0.0))
    }

    pub fn basis(space: TruncatedFockSpace, occupation: &[u32]) -> Result<Self> {
        let idx = space.index_of(occupation)?;
        let mut v = DVector::zeros(space.dim());
        v[idx] = Complex64::new(1.0, 0.0);
        Ok(Self {
            space,
            amplitudes: v,
        })
    }

    pub fn space(&self) -> &TruncatedFockSpace {
        &self.space
    }

    pub fn amplitudes(&self) -> &DVector<Complex64> {
        &self.amplitudes
    }

    pub fn norm(&self) -> f64 {
        self.amplitudes.norm()
    }

    pub fn probabilities(&self) -> Vec<f64> {
        self.amplitudes.iter().map(|a| a.norm_sqr()).collect()
    }

    pub fn probability_of(&self, occupation: &[u32]) -> Result<f64> {
        Ok(self.amplitudes[self.space.index_of(occupation)?].norm_sqr())
    }

    /// `|⟨self|other⟩|²`.
    pub fn fidelity(&self, other: &StateVector) -> Result<f64> {
        if self.space != other.space {
            return Err(Error::SpaceMismatch);
        }
        Ok(self.amplitudes.dotc(&other.amplitudes).norm_sqr())
    }

    pub fn to_json(&self) -> serde_json::Value {
        serde_json::to_value(ArrayJson {
            kind: "state".into(),
            dims: self.space.dim(),
            cutoffs: self.space.cutoffs.clone(),
            storage: "vector".into(),
            entries: self.amplitudes.iter().map(|a| [a.re, a.im]).collect(),
        })
        .expect("state layout serializes")
    }

    pub fn from_json(value: &serde_json::Value) -> Result<Self> {
        let raw: ArrayJson = serde_json::from_value(value.clone())?;
        if raw.kind != "state" {
            return Err(Error::invalid(format!("expected a state, found '{}'", raw.kind)));
        }
        let space = TruncatedFockSpace::new(raw.cutoffs)?;
        let amps = DVector::from_iterator(
            raw.entries.len(),
            raw.entries.iter().map(|e| Complex64::new(e[0], e[1])),
        );
        Self::new(space, amps)
    }
}

/// Coherent-state amplitudes `α_i`, one per mode.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CoherentParams {
    alphas: Vec<Complex64>,
}

impl CoherentParams {
    pub fn new(alphas: Vec<Complex64>) -> Self {
        Self { alphas }
    }

    /// The same `α` on every mode.
    pub fn uniform(modes: usize, alpha: Complex64) -> Self {
        Self {
            alphas: vec![alpha; modes],
        }
    }

    pub fn alphas(&self) -> &[Complex64] {
        &self.alphas
    }

    /// Checks arity and `|α_i|² <= n_max(i)/4` on every mode.
    pub fn validate(&self, space: &TruncatedFockSpace) -> Result<()> {
        if self.alphas.len() != space.modes() {
            return Err(Error::DimensionMismatch {
                expected: space.modes(),
                found: self.alphas.len(),
            });
        }
        for (mode, (a, &c)) in self.alphas.iter().zip(space.cutoffs()).enumerate() {
            let bound = c as f64 / 4.0;
            if a.norm_sqr() > bound {
                return Err(Error::TruncationSafety {
                    mode,
                    alpha_sq: a.norm_sqr(),
                    bound,
                });
            }
        }
        Ok(())
    }
}

/// Truncated annihilation operator of `mode` on the full product space.
pub fn annihilation_matrix(space: &TruncatedFockSpace, mode: usize) -> Result<DMatrix<Complex64>> {
    if mode >= space.modes() {
        return Err(Error::IndexOutOfRange {
            index: mode,
            len: space.modes(),
        });
    }
    space.require_dense()?;
    let stride = space.stride(mode);
    let mut a = DMatrix::zeros(space.dim(), space.dim());
    for (idx, occ) in space.basis().enumerate() {
        let n = occ[mode];
        if n > 0 {
            a[(idx - stride, idx)] = Complex64::new((n as f64).sqrt(), 0.0);
        }
    }
    Ok(a)
}

/// Exact diagonal of `H_P = P(a†a)²`: the entry at occupation `n` is `P(n)²`.
pub fn hp_exact_diagonal(
    p: &DiophantinePolynomial,
    space: &TruncatedFockSpace,
) -> Result<Vec<BigUint>> {
    if p.num_vars() != space.modes() {
        return Err(Error::DimensionMismatch {
            expected: space.modes(),
            found: p.num_vars(),
        });
    }
    space
        .basis()
        .map(|occ| {
            let pt: Vec<u64> = occ.iter().map(|&n| n as u64).collect();
            let v = p.evaluate_u64(&pt)?;
            Ok((&v * &v).to_biguint().expect("square is non-negative"))
        })
        .collect()
}

/// Problem Hamiltonian `H_P = P(a_1†a_1, …, a_K†a_K)²` in diagonal storage.
pub fn build_hp(p: &DiophantinePolynomial, space: &TruncatedFockSpace) -> Result<HermitianOperator> {
    let exact = hp_exact_diagonal(p, space)?;
    let values = exact
        .iter()
        .enumerate()
        .map(|(idx, v)| match v.to_f64() {
            Some(x) if x.is_finite() => Ok(x),
            _ => Err(Error::FloatRange {
                tuple: space.occupation(idx).iter().map(|&n| n as u64).collect(),
            }),
        })
        .collect::<Result<Vec<f64>>>()?;
    HermitianOperator::diagonal(space.clone(), values)
}

/// Initial Hamiltonian `H_I = Σ_i (a_i† - α_i*)(a_i - α_i)`, dense.
///
/// Built entrywise: the diagonal carries `Σ_i (n_i + |α_i|²)` and each mode
/// contributes `-α_i* √n_i` above and `-α_i √n_i` below the diagonal.
pub fn build_hi(params: &CoherentParams, space: &TruncatedFockSpace) -> Result<HermitianOperator> {
    params.validate(space)?;
    space.require_dense()?;
    let dim = space.dim();
    let mut h = DMatrix::<Complex64>::zeros(dim, dim);
    let offset: f64 = params.alphas.iter().map(|a| a.norm_sqr()).sum();
    for (idx, occ) in space.basis().enumerate() {
        let number: u32 = occ.iter().sum();
        h[(idx, idx)] = Complex64::new(number as f64 + offset, 0.0);
        for (mode, (&n, alpha)) in occ.iter().zip(&params.alphas).enumerate() {
            if n == 0 || alpha.is_zero() {
                continue;
            }
            let lower = idx - space.stride(mode);
            let amp = (n as f64).sqrt();
            h[(lower, idx)] -= alpha.conj() * amp;
            h[(idx, lower)] -= alpha * amp;
        }
    }
    HermitianOperator::dense(space.clone(), h)
}

/// Per-mode probability mass of `|α⟩` lying above the cutoff.
pub fn coherent_tail_weights(params: &CoherentParams, space: &TruncatedFockSpace) -> Result<Vec<f64>> {
    params.validate(space)?;
    Ok(params
        .alphas
        .iter()
        .zip(space.cutoffs())
        .map(|(a, &c)| {
            let kept: f64 = mode_amplitudes(*a, c).iter().map(|x| x.norm_sqr()).sum();
            (1.0 - kept).max(0.0)
        })
        .collect())
}

/// `e^{-|α|²/2} α^n / √(n!)` for `n = 0..=n_max`.
fn mode_amplitudes(alpha: Complex64, n_max: u32) -> Vec<Complex64> {
    let mut amps = Vec::with_capacity(n_max as usize + 1);
    let mut cur = Complex64::new((-alpha.norm_sqr() / 2.0).exp(), 0.0);
    amps.push(cur);
    for n in 1..=n_max {
        cur = cur * alpha / (n as f64).sqrt();
        amps.push(cur);
    }
    amps
}

/// Product coherent state `⊗_i |α_i⟩`, renormalized after truncation.
pub fn coherent_state(params: &CoherentParams, space: &TruncatedFockSpace) -> Result<StateVector> {
    params.validate(space)?;
    let per_mode: Vec<Vec<Complex64>> = params
        .alphas
        .iter()
        .zip(space.cutoffs())
        .map(|(a, &c)| {
            let amps = mode_amplitudes(*a, c);
            let norm = amps.iter().map(|x| x.norm_sqr()).sum::<f64>().sqrt();
            amps.into_iter().map(|x| x / norm).collect()
        })
        .collect();
    let amps = DVector::from_iterator(
        space.dim(),
        space.basis().map(|occ| {
            occ.iter()
                .zip(&per_mode)
                .fold(Complex64::new(1.0, 0.0), |acc, (&n, m)| acc * m[n as usize])
        }),
    );
    StateVector::new(space.clone(), amps)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::polynomial::parse_polynomial;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn single_mode_annihilation_entries() {
        let space = TruncatedFockSpace::uniform(1, 2).unwrap();
        let a = annihilation_matrix(&space, 0).unwrap();
        for i in 0..3 {
            for j in 0..3 {
                let expected = match (i, j) {
                    (0, 1) => 1.0,
                    (1, 2) => 2f64.sqrt(),
                    _ => 0.0,
                };
                assert_eq!(a[(i, j)], c(expected, 0.0), "entry ({i},{j})");
            }
        }
    }

    #[test]
    fn truncated_commutator_has_corner_artifact() {
        let space = TruncatedFockSpace::new(vec![4, 2]).unwrap();
        for mode in 0..2 {
            let a = annihilation_matrix(&space, mode).unwrap();
            let comm = &a * a.adjoint() - a.adjoint() * &a;
            let n_max = space.cutoffs()[mode];
            for (idx, occ) in space.basis().enumerate() {
                let expected = if occ[mode] == n_max { -(n_max as f64) } else { 1.0 };
                assert!((comm[(idx, idx)] - c(expected, 0.0)).norm() < 1e-12);
            }
            let off: f64 = (0..space.dim())
                .flat_map(|i| (0..space.dim()).map(move |j| (i, j)))
                .filter(|(i, j)| i != j)
                .map(|(i, j)| comm[(i, j)].norm())
                .fold(0.0, f64::max);
            assert!(off < 1e-12);
        }
    }

    #[test]
    fn annihilation_kills_vacuum() {
        let space = TruncatedFockSpace::new(vec![3, 3]).unwrap();
        let vac = StateVector::basis(space.clone(), &[0, 0]).unwrap();
        for mode in 0..2 {
            let a = annihilation_matrix(&space, mode).unwrap();
            assert_eq!((a * vac.amplitudes()).norm(), 0.0);
        }
        assert!(matches!(
            annihilation_matrix(&space, 2),
            Err(Error::IndexOutOfRange { .. })
        ));
    }

    #[test]
    fn basis_bijection() {
        let space = TruncatedFockSpace::new(vec![2, 3, 1]).unwrap();
        assert_eq!(space.dim(), 24);
        for (idx, occ) in space.basis().enumerate() {
            assert_eq!(space.occupation(idx), occ);
            assert_eq!(space.index_of(&occ).unwrap(), idx);
        }
        assert_eq!(space.basis().count(), 24);
        // mode 0 fastest
        assert_eq!(space.occupation(1), vec![1, 0, 0]);
        assert_eq!(space.occupation(3), vec![0, 1, 0]);
    }

    #[test]
    fn space_limits() {
        assert!(TruncatedFockSpace::new(vec![0]).is_err());
        assert!(matches!(
            TruncatedFockSpace::new(vec![255, 255, 1]),
            Err(Error::LimitExceeded { .. })
        ));
        assert!(TruncatedFockSpace::new(vec![255, 255]).is_ok());
    }

    #[test]
    fn hp_for_linear_root() {
        let space = TruncatedFockSpace::uniform(1, 10).unwrap();
        let hp = build_hp(&parse_polynomial("x0 - 3").unwrap(), &space).unwrap();
        let d = hp.diagonal_values().unwrap();
        assert_eq!(&d[..6], &[9.0, 4.0, 1.0, 0.0, 1.0, 4.0]);
        assert!(hp.is_diagonal());

        let hp = build_hp(&parse_polynomial("x0 + 1").unwrap(), &space).unwrap();
        let d = hp.diagonal_values().unwrap();
        assert_eq!(d.iter().cloned().fold(f64::INFINITY, f64::min), 1.0);
        assert_eq!(d[0], 1.0);
    }

    #[test]
    fn hp_zero_set_matches_oracle() {
        let p = parse_polynomial("x0^2 - 3*x0 + 2").unwrap();
        let space = TruncatedFockSpace::uniform(1, 6).unwrap();
        let hp = build_hp(&p, &space).unwrap();
        let zeros: Vec<usize> = hp
            .diagonal_values()
            .unwrap()
            .iter()
            .enumerate()
            .filter(|(_, &x)| x == 0.0)
            .map(|(i, _)| i)
            .collect();
        let oracle = crate::oracle::find_solutions(
            &p,
            &crate::oracle::SearchBox::new(vec![6]).unwrap(),
        )
        .unwrap();
        let oracle_idx: Vec<usize> = oracle
            .iter()
            .map(|pt| pt.to_u64s().unwrap()[0] as usize)
            .collect();
        assert_eq!(zeros, vec![1, 2]);
        assert_eq!(zeros, oracle_idx);
    }

    #[test]
    fn hp_reports_float_overflow_tuple() {
        let p = parse_polynomial("123456789^16*123456789^16*x0").unwrap();
        let space = TruncatedFockSpace::uniform(1, 3).unwrap();
        match build_hp(&p, &space) {
            Err(Error::FloatRange { tuple }) => assert_eq!(tuple.len(), 1),
            other => panic!("expected float range error, got {other:?}"),
        }
    }

    #[test]
    fn hp_dimension_mismatch() {
        let p = parse_polynomial("x0*x1").unwrap();
        let space = TruncatedFockSpace::uniform(1, 3).unwrap();
        assert!(matches!(
            build_hp(&p, &space),
            Err(Error::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn hi_with_zero_alpha_is_number_operator() {
        let space = TruncatedFockSpace::uniform(1, 5).unwrap();
        let hi = build_hi(&CoherentParams::uniform(1, c(0.0, 0.0)), &space).unwrap();
        let m = hi.to_dense().unwrap();
        for i in 0..6 {
            for j in 0..6 {
                let expected = if i == j { i as f64 } else { 0.0 };
                assert_eq!(m[(i, j)], c(expected, 0.0));
            }
        }
    }

    #[test]
    fn hi_matches_product_of_shifted_mode_matrices() {
        let space = TruncatedFockSpace::new(vec![4, 3]).unwrap();
        let params = CoherentParams::new(vec![c(0.7, -0.2), c(0.3, 0.5)]);
        let hi = build_hi(&params, &space).unwrap().to_dense().unwrap();
        let eye = DMatrix::<Complex64>::identity(space.dim(), space.dim());
        let mut reference = DMatrix::<Complex64>::zeros(space.dim(), space.dim());
        for (mode, alpha) in params.alphas().iter().enumerate() {
            let b = annihilation_matrix(&space, mode).unwrap() - &eye * *alpha;
            reference += b.adjoint() * b;
        }
        assert!((hi - reference).iter().all(|z| z.norm() < 1e-13));
    }

    #[test]
    fn truncation_safety_rule() {
        let space = TruncatedFockSpace::uniform(1, 4).unwrap();
        assert!(build_hi(&CoherentParams::uniform(1, c(1.0, 0.0)), &space).is_ok());
        assert!(matches!(
            build_hi(&CoherentParams::uniform(1, c(1.0, 0.1)), &space),
            Err(Error::TruncationSafety { mode: 0, .. })
        ));
        assert!(matches!(
            coherent_state(&CoherentParams::uniform(2, c(0.5, 0.0)), &space),
            Err(Error::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn coherent_state_closed_form() {
        let space = TruncatedFockSpace::uniform(1, 12).unwrap();
        let vac = coherent_state(&CoherentParams::uniform(1, c(0.0, 0.0)), &space).unwrap();
        assert_eq!(vac, StateVector::basis(space.clone(), &[0]).unwrap());

        let params = CoherentParams::uniform(1, c(1.0, 0.0));
        let st = coherent_state(&params, &space).unwrap();
        let tail = coherent_tail_weights(&params, &space).unwrap()[0];
        assert!(tail <= 1e-8, "tail {tail}");
        let renorm = (1.0 - tail).sqrt();
        let mut fact = 1.0f64;
        for n in 0..=12usize {
            if n > 0 {
                fact *= n as f64;
            }
            let expected = (-0.5f64).exp() / fact.sqrt();
            let got = st.amplitudes()[n].re * renorm;
            assert!((got - expected).abs() < 1e-15, "n = {n}");
        }
        assert!((st.norm() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn coherent_state_is_variational_zero_of_hi() {
        for (nmax, alpha) in [(12, c(1.0, 0.0)), (12, c(1.0, 0.5)), (10, c(0.5, 0.0)), (8, c(0.0, 0.7))] {
            let space = TruncatedFockSpace::uniform(1, nmax).unwrap();
            let params = CoherentParams::uniform(1, alpha);
            let st = coherent_state(&params, &space).unwrap();
            let e = build_hi(&params, &space).unwrap().expectation(&st).unwrap();
            assert!(e <= 1e-6 && e >= -1e-12, "nmax {nmax} alpha {alpha}: {e}");
        }
    }

    #[test]
    fn operator_and_state_json_layout() {
        let space = TruncatedFockSpace::uniform(1, 1).unwrap();
        let hi = build_hi(&CoherentParams::uniform(1, c(0.5, 0.0)), &space).unwrap();
        let j = hi.to_json();
        assert_eq!(j["storage"], "dense");
        assert_eq!(j["dims"], 2);
        assert_eq!(
            j["entries"],
            serde_json::json!([[0.25, 0.0], [-0.5, -0.0], [-0.5, 0.0], [1.25, 0.0]])
        );
        assert_eq!(HermitianOperator::from_json(&j).unwrap(), hi);

        let hp = build_hp(&parse_polynomial("x0 - 1").unwrap(), &space).unwrap();
        let j = hp.to_json();
        assert_eq!(j["storage"], "diagonal");
        assert_eq!(j["entries"], serde_json::json!([[1.0, 0.0], [0.0, 0.0]]));
        assert_eq!(HermitianOperator::from_json(&j).unwrap(), hp);

        let st = coherent_state(&CoherentParams::uniform(1, c(0.5, 0.0)), &space).unwrap();
        assert_eq!(StateVector::from_json(&st.to_json()).unwrap(), st);
    }

    #[test]
    fn dense_constructor_rejects_non_hermitian() {
        let space = TruncatedFockSpace::uniform(1, 1).unwrap();
        let m = DMatrix::from_row_slice(2, 2, &[c(1.0, 0.0), c(1.0, 0.0), c(0.0, 0.0), c(1.0, 0.0)]);
        assert!(HermitianOperator::dense(space, m).is_err());
    }
}
