//! Factorially weighted sums `Σ_i β_i(s)·P(n + i·e_var)²` and their
//! truncation error.

use num_bigint::BigInt;
use num_traits::{Signed, ToPrimitive};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use statrs::function::gamma::ln_gamma;

use crate::error::{Error, Result};
use crate::fock::{HermitianOperator, TruncatedFockSpace};
use crate::polynomial::{DiophantinePolynomial, LatticePoint};

pub const DEFAULT_S_GRID: [f64; 4] = [1.0, 0.5, 0.25, 0.1];
/// Allowed ratio of the dropped tail to the retained minimum.
pub const DEFAULT_TAIL_TOLERANCE: f64 = 1e-6;
const MAX_TAIL_TERMS: u64 = 1_000_000;
/// Argmin tuples listed in reports; the count is always complete.
const ARGMIN_ECHO: usize = 16;

/// `(1/i!)^s`, evaluated as `exp(-s·ln Γ(i+1))`.
pub fn beta(i: u64, s: f64) -> f64 {
    beta_with_error(i, s).0
}

/// `β_i(s)` together with a bound on its relative rounding error.
pub fn beta_with_error(i: u64, s: f64) -> (f64, f64) {
    if i < 2 {
        return (1.0, 0.0);
    }
    let l = s * ln_gamma(i as f64 + 1.0);
    ((-l).exp(), 8.0 * f64::EPSILON * (1.0 + l))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RegulatorFamily {
    s: f64,
    i_max: u32,
    #[serde(default = "default_tolerance")]
    tail_tolerance: f64,
}

fn default_tolerance() -> f64 {
    DEFAULT_TAIL_TOLERANCE
}

impl RegulatorFamily {
    pub fn new(s: f64, i_max: u32) -> Result<Self> {
        if !(s > 0.0 && s <= 1.0) {
            return Err(Error::invalid(format!("regulator exponent s = {s} not in (0,1]")));
        }
        if i_max < 1 {
            return Err(Error::invalid("i_max must be at least 1"));
        }
        Ok(Self {
            s,
            i_max,
            tail_tolerance: DEFAULT_TAIL_TOLERANCE,
        })
    }

    pub fn with_tail_tolerance(mut self, tol: f64) -> Result<Self> {
        if !(tol >= 0.0) {
            return Err(Error::invalid("tail tolerance must be non-negative"));
        }
        self.tail_tolerance = tol;
        Ok(self)
    }

    pub fn s(&self) -> f64 {
        self.s
    }

    pub fn i_max(&self) -> u32 {
        self.i_max
    }

    pub fn tail_tolerance(&self) -> f64 {
        self.tail_tolerance
    }

    pub fn beta(&self, i: u64) -> f64 {
        beta(i, self.s)
    }

    pub fn weights(&self) -> Vec<f64> {
        (0..=self.i_max as u64).map(|i| self.beta(i)).collect()
    }
}

/// Upper bound on `Σ_{i > i_max} β_i(s)·f(i)²` where `f(i) = Σ_k d_k i^k`.
///
/// `|f(i)| ≤ Q(i) = Σ_k |d_k| i^k` and consecutive terms `β_i Q(i)²` shrink
/// at least by `r_i = (i+1)^{-s}·((i+1)/i)^{2D}`, which decreases in `i`.
/// Terms are summed explicitly until `r_i < 1` and the geometric remainder
/// `t_i·r_i/(1-r_i)` is negligible against the partial sum.
pub fn tail_bound(coeffs: &[BigInt], s: f64, i_max: u32) -> f64 {
    let abs: Vec<f64> = coeffs
        .iter()
        .map(|d| d.abs().to_f64().unwrap_or(f64::INFINITY))
        .collect();
    if abs.iter().all(|&a| a == 0.0) {
        return 0.0;
    }
    let degree = (abs.len() - 1) as f64;
    let q = |i: f64| abs.iter().rev().fold(0.0, |acc, &a| acc * i + a);
    let mut acc = 0.0f64;
    let mut i = i_max as u64 + 1;
    for _ in 0..MAX_TAIL_TERMS {
        let x = i as f64;
        let t = (-s * ln_gamma(x + 1.0) + 2.0 * q(x).ln()).exp();
        if !t.is_finite() {
            return f64::INFINITY;
        }
        acc += t;
        let r = (-s * (x + 1.0).ln() + 2.0 * degree * (1.0 / x).ln_1p()).exp();
        if r < 1.0 {
            let rem = t * r / (1.0 - r);
            if rem <= 1e-3 * acc {
                return (acc + rem) * (1.0 + 1e-9);
            }
        }
        i += 1;
    }
    f64::INFINITY
}

/// Neumaier-compensated dot product of non-negative terms.
fn weighted_sum(weights: &[f64], values: &[f64]) -> f64 {
    let mut sum = 0.0f64;
    let mut comp = 0.0f64;
    for (w, v) in weights.iter().zip(values) {
        let x = w * v;
        let t = sum + x;
        if sum.abs() >= x.abs() {
            comp += (sum - t) + x;
        } else {
            comp += (x - t) + sum;
        }
        sum = t;
    }
    sum + comp
}

#[derive(Clone, Debug, PartialEq)]
pub struct RegularizedHamiltonian {
    pub operator: HermitianOperator,
    pub family: RegulatorFamily,
    pub var: usize,
    pub min_energy: f64,
    pub argmin_count: usize,
    /// The first argmin tuples in basis order.
    pub argmins: Vec<LatticePoint>,
    /// Certified: `0 ≤ min_full - min_retained ≤ tail_bound`.
    pub tail_bound: f64,
}

/// Diagonal operator with entries `Σ_{i=0}^{i_max} β_i(s)·P(n + i·e_var)²`.
///
/// Fails with [`Error::TailBound`] when the certified tail at the minimum
/// exceeds the family's tolerance relative to the minimum itself.
pub fn build_regularized_hp(
    p: &DiophantinePolynomial,
    var: usize,
    rf: &RegulatorFamily,
    space: &TruncatedFockSpace,
) -> Result<RegularizedHamiltonian> {
    if p.num_vars() != space.modes() {
        return Err(Error::DimensionMismatch {
            expected: space.modes(),
            found: p.num_vars(),
        });
    }
    if var >= p.num_vars() {
        return Err(Error::IndexOutOfRange {
            index: var,
            len: p.num_vars(),
        });
    }
    let weights = rf.weights();
    let cut = space.cutoffs()[var] as usize;
    let stride = space.stride(var);
    let line_len = cut + rf.i_max() as usize + 1;

    let bases: Vec<usize> = (0..space.dim())
        .filter(|&idx| (idx / stride) % (cut + 1) == 0)
        .collect();
    let rows = bases
        .par_iter()
        .map(|&base| {
            let mut pt: Vec<u64> = space.occupation(base).iter().map(|&n| n as u64).collect();
            let mut sq = Vec::with_capacity(line_len);
            for m in 0..line_len {
                pt[var] = m as u64;
                let v = p.evaluate_u64(&pt)?;
                let f = (&v * &v).to_f64().unwrap_or(f64::INFINITY);
                if !f.is_finite() {
                    return Err(Error::FloatRange { tuple: pt.clone() });
                }
                sq.push(f);
            }
            Ok((0..=cut)
                .map(|n| weighted_sum(&weights, &sq[n..]))
                .collect::<Vec<f64>>())
        })
        .collect::<Result<Vec<_>>>()?;

    let mut diag = vec![0.0; space.dim()];
    for (&base, row) in bases.iter().zip(&rows) {
        for (n, &e) in row.iter().enumerate() {
            diag[base + n * stride] = e;
        }
    }
    let min_energy = diag.iter().cloned().fold(f64::INFINITY, f64::min);
    let argmin_idx: Vec<usize> = (0..diag.len()).filter(|&i| diag[i] == min_energy).collect();
    let argmins: Vec<LatticePoint> = argmin_idx
        .iter()
        .take(ARGMIN_ECHO)
        .map(|&i| {
            let occ: Vec<u64> = space.occupation(i).iter().map(|&n| n as u64).collect();
            LatticePoint::from_u64s(&occ)
        })
        .collect();

    // any single argmin bounds the shift of the minimum; take the tightest
    let mut bound = f64::INFINITY;
    for w in &argmins {
        let base = w.to_u64s().expect("occupations fit in u64");
        let coeffs = p.line_restriction(var, &base)?;
        bound = bound.min(tail_bound(&coeffs, rf.s(), rf.i_max()));
    }
    if bound > rf.tail_tolerance() * min_energy && bound > 0.0 {
        return Err(Error::TailBound {
            bound,
            retained: min_energy,
            i_max: rf.i_max() as usize,
        });
    }

    Ok(RegularizedHamiltonian {
        operator: HermitianOperator::diagonal(space.clone(), diag)?,
        family: rf.clone(),
        var,
        min_energy,
        argmin_count: argmin_idx.len(),
        argmins,
        tail_bound: bound,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScanOptions {
    pub i_max: u32,
    /// Double `i_max` per `s` until the tail bound passes.
    pub adaptive: bool,
    pub max_i_max: u32,
    pub tail_tolerance: f64,
}

impl Default for ScanOptions {
    fn default() -> Self {
        Self {
            i_max: 30,
            adaptive: true,
            max_i_max: 1024,
            tail_tolerance: DEFAULT_TAIL_TOLERANCE,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RegulatorVerdict {
    /// Every minimum is exactly zero.
    InfiniteSuggested,
    /// Some minimum exceeds its tail bound.
    FiniteIndicated,
    Inconclusive,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RegulatorPoint {
    pub s: f64,
    pub i_max: u32,
    pub min_energy: f64,
    pub tail_bound: f64,
    pub argmin_count: usize,
    pub argmins: Vec<LatticePoint>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RegulatorScan {
    pub var: usize,
    pub points: Vec<RegulatorPoint>,
    pub verdict: RegulatorVerdict,
}

/// Minimum regularized energy across a descending grid of `s`.
pub fn regulator_removal_scan(
    p: &DiophantinePolynomial,
    var: usize,
    s_grid: &[f64],
    space: &TruncatedFockSpace,
    options: &ScanOptions,
) -> Result<RegulatorScan> {
    if s_grid.is_empty() {
        return Err(Error::invalid("s grid is empty"));
    }
    if s_grid.windows(2).any(|w| !(w[0] > w[1])) {
        return Err(Error::invalid("s grid must be strictly descending"));
    }
    if !(s_grid[0] <= 1.0 && s_grid[s_grid.len() - 1] > 0.0) {
        return Err(Error::invalid("s grid must lie in (0,1]"));
    }
    let points = s_grid
        .par_iter()
        .map(|&s| {
            let mut i_max = options.i_max;
            loop {
                let rf = RegulatorFamily::new(s, i_max)?.with_tail_tolerance(options.tail_tolerance)?;
                match build_regularized_hp(p, var, &rf, space) {
                    Ok(h) => {
                        return Ok(RegulatorPoint {
                            s,
                            i_max,
                            min_energy: h.min_energy,
                            tail_bound: h.tail_bound,
                            argmin_count: h.argmin_count,
                            argmins: h.argmins,
                        })
                    }
                    Err(Error::TailBound { .. })
                        if options.adaptive && i_max.saturating_mul(2) <= options.max_i_max =>
                    {
                        i_max *= 2;
                    }
                    Err(e) => return Err(e),
                }
            }
        })
        .collect::<Result<Vec<_>>>()?;

    let verdict = if points.iter().all(|p| p.min_energy == 0.0) {
        RegulatorVerdict::InfiniteSuggested
    } else if points.iter().any(|p| p.min_energy > p.tail_bound) {
        RegulatorVerdict::FiniteIndicated
    } else {
        RegulatorVerdict::Inconclusive
    };
    Ok(RegulatorScan {
        var,
        points,
        verdict,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::oracle::{regularized_min, SearchBox};
    use crate::polynomial::parse_polynomial;

    // (i, s, (1/i!)^s) at 50 significant digits, rounded to 17
    const BETA_REFERENCE: &[(u64, f64, f64)] = &[
        (5, 1.0, 8.3333333333333333e-3),
        (5, 0.5, 9.1287092917527686e-2),
        (5, 0.25, 3.0213753973567681e-1),
        (5, 0.1, 6.1955786625413569e-1),
        (10, 1.0, 2.7557319223985891e-7),
        (10, 0.5, 5.2495065695726004e-4),
        (10, 0.25, 2.2911801696009418e-2),
        (10, 0.1, 2.2081252132060089e-1),
        (20, 1.0, 4.1103176233121649e-19),
        (20, 0.5, 6.4111758853678042e-10),
        (20, 0.25, 2.5320299929834568e-5),
        (20, 0.1, 1.450065227513446e-2),
        (30, 1.0, 3.7699876288159056e-33),
        (30, 0.5, 6.1400224989945319e-17),
        (30, 0.25, 7.8358295661624315e-9),
        (30, 0.1, 5.723135028144567e-4),
        (45, 1.0, 8.359650847182804e-57),
        (45, 0.5, 9.1431126249121551e-29),
        (45, 0.25, 9.5619624685062193e-15),
        (45, 0.1, 2.4672821336277897e-6),
        (60, 1.0, 1.2017804936493227e-82),
        (60, 0.5, 1.0962574942272106e-41),
        (60, 0.25, 3.3109779434892202e-21),
        (60, 0.1, 6.4266184287051926e-9),
        (100, 1.0, 1.0715102881254669e-158),
        (100, 0.5, 1.0351378111756265e-79),
        (100, 0.25, 3.2173557639397395e-40),
        (100, 0.1, 1.5958778042580616e-16),
    ];

    #[test]
    fn beta_matches_high_precision_values() {
        for &(i, s, want) in BETA_REFERENCE {
            let (got, err) = beta_with_error(i, s);
            let rel = (got - want).abs() / want;
            assert!(rel <= 1e-12, "beta({i},{s}) rel error {rel:e}");
            assert!(err <= 1e-12);
        }
        for s in [1.0, 0.5, 0.01] {
            assert_eq!(beta(0, s), 1.0);
            assert_eq!(beta(1, s), 1.0);
        }
        assert!((beta(5, 1.0) - 1.0 / 120.0).abs() <= 1e-12 / 120.0);
    }

    #[test]
    fn beta_is_monotone_in_s() {
        for i in 0..40 {
            let mut prev = f64::INFINITY;
            for k in 1..=20 {
                let b = beta(i, k as f64 / 20.0);
                assert!(b <= prev);
                prev = b;
            }
        }
    }

    #[test]
    fn family_validation() {
        assert!(RegulatorFamily::new(0.0, 30).is_err());
        assert!(RegulatorFamily::new(1.2, 30).is_err());
        assert!(RegulatorFamily::new(0.5, 0).is_err());
        let rf = RegulatorFamily::new(1.0, 4).unwrap();
        assert_eq!(rf.weights().len(), 5);
    }

    #[test]
    fn independent_variable_row_is_zero() {
        let space = TruncatedFockSpace::uniform(2, 5).unwrap();
        let rf = RegulatorFamily::new(0.5, 30).unwrap();
        let h = build_regularized_hp(&parse_polynomial("x1").unwrap(), 0, &rf, &space).unwrap();
        let total: f64 = rf.weights().iter().sum();
        let d = h.operator.diagonal_values().unwrap();
        for idx in 0..space.dim() {
            let occ = space.occupation(idx);
            let want = (occ[1] as f64).powi(2) * total;
            assert!((d[idx] - want).abs() <= 1e-12 * want.max(1.0));
            assert_eq!(d[idx] == 0.0, occ[1] == 0);
        }
        assert_eq!(h.min_energy, 0.0);
        assert_eq!(h.argmin_count, 6);
        assert_eq!(h.tail_bound, 0.0);
    }

    #[test]
    fn shifted_linear_series_at_origin() {
        // Σ (i-3)²/i! = 5e, and the minimum Σ (i-1)²/i! = e sits at n0 = 2
        let space = TruncatedFockSpace::uniform(1, 10).unwrap();
        let rf = RegulatorFamily::new(1.0, 30).unwrap();
        let h = build_regularized_hp(&parse_polynomial("x0 - 3").unwrap(), 0, &rf, &space).unwrap();
        let d = h.operator.diagonal_values().unwrap();
        let e = std::f64::consts::E;
        assert!((d[0] - 5.0 * e).abs() <= 1e-9 * 5.0 * e);
        assert!((h.min_energy - e).abs() <= 1e-9 * e);
        assert_eq!(h.argmins, vec![LatticePoint::from_u64s(&[2])]);
        assert!(h.tail_bound <= 1e-6 * h.min_energy);

        let o = regularized_min(
            &parse_polynomial("x0 - 3").unwrap(),
            0,
            1.0,
            30,
            &SearchBox::new(vec![10]).unwrap(),
        )
        .unwrap();
        assert!((o.value - h.min_energy).abs() <= 1e-9 * h.min_energy);
    }

    #[test]
    fn tail_bound_dominates_explicit_tail() {
        let space = TruncatedFockSpace::uniform(1, 6).unwrap();
        let p = parse_polynomial("(x0-1)*(x0-2)").unwrap();
        for (s, i_max) in [(1.0, 10u32), (0.5, 20), (0.25, 60)] {
            let coeffs = p.line_restriction(0, &[2]).unwrap();
            let bound = tail_bound(&coeffs, s, i_max);
            let explicit: f64 = (i_max as u64 + 1..i_max as u64 + 4000)
                .map(|i| {
                    let v = p.evaluate_u64(&[2 + i]).unwrap().to_f64().unwrap();
                    beta(i, s) * v * v
                })
                .sum();
            assert!(explicit <= bound, "s={s}: {explicit:e} > {bound:e}");
            assert!(bound <= 10.0 * explicit.max(1e-300), "bound too loose at s={s}");
            let _ = &space;
        }
        assert_eq!(tail_bound(&[BigInt::from(0)], 0.3, 5), 0.0);
    }

    #[test]
    fn insufficient_i_max_is_reported() {
        let space = TruncatedFockSpace::uniform(1, 6).unwrap();
        let rf = RegulatorFamily::new(0.1, 30).unwrap();
        let p = parse_polynomial("(x0-1)*(x0-2)").unwrap();
        assert!(matches!(
            build_regularized_hp(&p, 0, &rf, &space),
            Err(Error::TailBound { .. })
        ));
        let strict = ScanOptions {
            adaptive: false,
            ..Default::default()
        };
        assert!(regulator_removal_scan(&p, 0, &DEFAULT_S_GRID, &space, &strict).is_err());
    }

    #[test]
    fn scan_examples() {
        let opts = ScanOptions::default();
        let space2 = TruncatedFockSpace::uniform(2, 6).unwrap();
        let scan = regulator_removal_scan(&parse_polynomial("x1").unwrap(), 0, &DEFAULT_S_GRID, &space2, &opts)
            .unwrap();
        assert_eq!(scan.verdict, RegulatorVerdict::InfiniteSuggested);
        assert!(scan.points.iter().all(|p| p.min_energy == 0.0));

        let scan =
            regulator_removal_scan(&parse_polynomial("x0*x1").unwrap(), 0, &DEFAULT_S_GRID, &space2, &opts)
                .unwrap();
        assert_eq!(scan.verdict, RegulatorVerdict::InfiniteSuggested);

        let space1 = TruncatedFockSpace::uniform(1, 10).unwrap();
        let scan = regulator_removal_scan(
            &parse_polynomial("(x0-1)*(x0-2)").unwrap(),
            0,
            &DEFAULT_S_GRID,
            &space1,
            &opts,
        )
        .unwrap();
        assert_eq!(scan.verdict, RegulatorVerdict::FiniteIndicated);
        let mins: Vec<f64> = scan.points.iter().map(|p| p.min_energy).collect();
        assert!(mins.iter().all(|&m| m > 0.0));
        assert!(mins.windows(2).all(|w| w[0] < w[1]), "{mins:?}");
        assert!(scan.points.last().unwrap().i_max > 30);

        assert!(regulator_removal_scan(&parse_polynomial("x1").unwrap(), 0, &[0.5, 1.0], &space2, &opts).is_err());
        assert!(regulator_removal_scan(&parse_polynomial("x1").unwrap(), 0, &[1.0, 0.0], &space2, &opts).is_err());
    }
}
