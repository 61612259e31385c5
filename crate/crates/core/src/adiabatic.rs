//! Adiabatic interpolation `H(s) = (1-s)·H_I + s·H_P`, instantaneous
//! spectra, time evolution, and occupation-basis readout.

use std::collections::BTreeMap;

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use num_bigint::{BigInt, BigUint};
use num_complex::Complex64;
use num_traits::Zero;
use rand::distr::weighted::WeightedIndex;
use rand::distr::Distribution;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fock::{HermitianOperator, StateVector, Storage, DENSE_LIMIT};
use crate::polynomial::{bigint_string, biguint_string, DiophantinePolynomial, LatticePoint};

pub const MIN_STEPS: usize = 100;
const STEP_DEFECT_LIMIT: f64 = 1e-10;
const TOTAL_DEFECT_LIMIT: f64 = 1e-8;
const RESIDUAL_TOL: f64 = 1e-8;
/// Number of most frequent outcomes re-checked by exact evaluation.
pub const CANDIDATE_COUNT: usize = 16;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Interpolation {
    Linear,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Schedule {
    total_time: f64,
    step_count: usize,
    interpolation: Interpolation,
}

impl Schedule {
    pub fn new(total_time: f64, step_count: usize) -> Result<Self> {
        if !(total_time > 0.0 && total_time.is_finite()) {
            return Err(Error::invalid(format!("total time must be positive, got {total_time}")));
        }
        if step_count < MIN_STEPS {
            return Err(Error::invalid(format!(
                "step count must be at least {MIN_STEPS}, got {step_count}"
            )));
        }
        Ok(Self {
            total_time,
            step_count,
            interpolation: Interpolation::Linear,
        })
    }

    pub fn total_time(&self) -> f64 {
        self.total_time
    }

    pub fn step_count(&self) -> usize {
        self.step_count
    }

    pub fn time_step(&self) -> f64 {
        self.total_time / self.step_count as f64
    }
}

fn check_same_space(a: &HermitianOperator, b: &HermitianOperator) -> Result<()> {
    if a.space() != b.space() {
        return Err(Error::SpaceMismatch);
    }
    Ok(())
}

/// `(1-s)·H_I + s·H_P` in dense storage.
pub fn interpolate(
    hi: &HermitianOperator,
    hp: &HermitianOperator,
    s: f64,
) -> Result<HermitianOperator> {
    check_same_space(hi, hp)?;
    if !(0.0..=1.0).contains(&s) {
        return Err(Error::invalid(format!("interpolation parameter s = {s} not in [0,1]")));
    }
    let m = hi.to_dense()? * Complex64::new(1.0 - s, 0.0) + hp.to_dense()? * Complex64::new(s, 0.0);
    HermitianOperator::dense(hi.space().clone(), m)
}

fn eigen(m: DMatrix<Complex64>) -> Result<SymmetricEigen<Complex64, nalgebra::Dyn>> {
    let n = m.nrows();
    if n > DENSE_LIMIT {
        return Err(Error::LimitExceeded {
            what: "dense eigensolve dimension",
            value: n as u128,
            limit: DENSE_LIMIT as u128,
        });
    }
    SymmetricEigen::try_new(m, f64::EPSILON, 1000 * n.max(1))
        .ok_or_else(|| Error::Eigensolver("symmetric QR iteration did not converge".into()))
}

/// Lowest eigenpair.
///
/// Degenerate ground spaces are resolved deterministically: the returned
/// vector is the projection of the basis state with the largest ground-space
/// weight (lowest index on ties), phased so that amplitude is real positive.
pub fn ground_state(h: &HermitianOperator) -> Result<(f64, StateVector)> {
    match h.storage() {
        Storage::Diagonal(d) => {
            let (idx, &e) = d
                .iter()
                .enumerate()
                .min_by(|a, b| a.1.total_cmp(b.1).then(a.0.cmp(&b.0)))
                .expect("space is non-empty");
            let occ = h.space().occupation(idx);
            Ok((e, StateVector::basis(h.space().clone(), &occ)?))
        }
        Storage::Dense(m) => {
            let scale = h.max_abs();
            let eig = eigen(m.clone())?;
            let mut order: Vec<usize> = (0..eig.eigenvalues.len()).collect();
            order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
            let e0 = eig.eigenvalues[order[0]];
            let deg_tol = 1e-9 * scale.max(1.0);
            let ground: Vec<usize> = order
                .iter()
                .copied()
                .take_while(|&k| eig.eigenvalues[k] - e0 <= deg_tol)
                .collect();

            let dim = m.nrows();
            let weights: Vec<f64> = (0..dim)
                .map(|j| ground.iter().map(|&g| eig.eigenvectors[(j, g)].norm_sqr()).sum())
                .collect();
            let wmax = weights.iter().cloned().fold(0.0, f64::max);
            let pivot = weights
                .iter()
                .position(|&w| w >= wmax - 1e-12)
                .expect("some weight attains the max");
            let mut v = DVector::<Complex64>::zeros(dim);
            for &g in &ground {
                let col = eig.eigenvectors.column(g);
                v += col * col[pivot].conj();
            }
            let norm = v.norm();
            v /= Complex64::new(norm, 0.0);

            let residual = (m * &v - &v * Complex64::new(e0, 0.0)).norm();
            if residual > RESIDUAL_TOL * scale {
                return Err(Error::Eigensolver(format!(
                    "ground-state residual {residual:e} exceeds {:e}",
                    RESIDUAL_TOL * scale
                )));
            }
            Ok((e0, StateVector::new(h.space().clone(), v)?))
        }
    }
}

/// Two lowest eigenvalues, ascending.
fn lowest_two(h: &HermitianOperator) -> Result<(f64, f64)> {
    let mut values: Vec<f64> = match h.storage() {
        Storage::Diagonal(d) => d.clone(),
        Storage::Dense(m) => {
            if m.nrows() < 2 {
                return Err(Error::invalid("gap needs at least two levels"));
            }
            eigen(m.clone())?.eigenvalues.iter().copied().collect()
        }
    };
    if values.len() < 2 {
        return Err(Error::invalid("gap needs at least two levels"));
    }
    values.sort_by(f64::total_cmp);
    Ok((values[0], values[1]))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GapPoint {
    pub s: f64,
    pub e0: f64,
    pub e1: f64,
    pub gap: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GapScan {
    pub points: Vec<GapPoint>,
    pub min_gap: f64,
    pub min_gap_s: f64,
    /// Minimum over `s < 1`, excluding the end point.
    pub min_gap_before_end: f64,
    pub min_gap_before_end_s: f64,
    /// Number of basis states attaining the minimum of `H_P`.
    pub final_ground_multiplicity: usize,
    pub final_degenerate: bool,
}

impl GapScan {
    pub fn grid(&self) -> Vec<f64> {
        self.points.iter().map(|p| p.s).collect()
    }

    pub fn gaps(&self) -> Vec<f64> {
        self.points.iter().map(|p| p.gap).collect()
    }
}

/// `E_0(s)`, `E_1(s)` on `grid_size` uniform points of `[0, 1]`.
pub fn gap_scan(
    hi: &HermitianOperator,
    hp: &HermitianOperator,
    grid_size: usize,
) -> Result<GapScan> {
    check_same_space(hi, hp)?;
    if grid_size < 11 {
        return Err(Error::invalid(format!("grid size must be at least 11, got {grid_size}")));
    }
    let points = (0..grid_size)
        .into_par_iter()
        .map(|k| {
            let s = k as f64 / (grid_size - 1) as f64;
            let h = match (k, hp.is_diagonal()) {
                (k, true) if k == grid_size - 1 => hp.clone(),
                _ => interpolate(hi, hp, s)?,
            };
            let (e0, e1) = lowest_two(&h)?;
            Ok(GapPoint {
                s,
                e0,
                e1,
                gap: e1 - e0,
            })
        })
        .collect::<Result<Vec<_>>>()?;

    let argmin = |pts: &[GapPoint]| {
        pts.iter()
            .min_by(|a, b| a.gap.total_cmp(&b.gap))
            .map(|p| (p.gap, p.s))
            .expect("grid is non-empty")
    };
    let (min_gap, min_gap_s) = argmin(&points);
    let (min_gap_before_end, min_gap_before_end_s) = argmin(&points[..points.len() - 1]);

    let final_ground_multiplicity = match hp.storage() {
        Storage::Diagonal(d) => {
            let m = d.iter().cloned().fold(f64::INFINITY, f64::min);
            d.iter().filter(|&&x| x == m).count()
        }
        Storage::Dense(m) => {
            let eig = eigen(m.clone())?;
            let e0 = eig.eigenvalues.iter().cloned().fold(f64::INFINITY, f64::min);
            let tol = 1e-9 * hp.max_abs().max(1.0);
            eig.eigenvalues.iter().filter(|&&e| e - e0 <= tol).count()
        }
    };

    Ok(GapScan {
        points,
        min_gap,
        min_gap_s,
        min_gap_before_end,
        min_gap_before_end_s,
        final_ground_multiplicity,
        final_degenerate: final_ground_multiplicity > 1,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TracePoint {
    pub t: f64,
    pub s: f64,
    /// `⟨ψ(t)|H_P|ψ(t)⟩` after the step.
    pub energy: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Evolution {
    pub state: StateVector,
    /// Sum over steps of `| ‖ψ_{k+1}‖ - ‖ψ_k‖ |`.
    pub cumulative_norm_defect: f64,
    pub max_step_defect: f64,
    pub trace: Option<Vec<TracePoint>>,
}

/// How each short-time propagator `exp(-i·H(s_k)·Δt)` is formed.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Propagator {
    /// `V·diag(e^{-iλΔt})·V†` from a Hermitian eigendecomposition, applied
    /// to the state without forming the matrix. Real-symmetric `H(s)` (all
    /// displacements real) uses the real solver.
    #[default]
    Spectral,
    /// Padé scaling-and-squaring exponential of the dense matrix.
    Pade,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct EvolveOptions {
    pub trace: bool,
    pub propagator: Propagator,
}

pub fn evolve(
    hi: &HermitianOperator,
    hp: &HermitianOperator,
    schedule: &Schedule,
    initial: &StateVector,
) -> Result<Evolution> {
    evolve_with(hi, hp, schedule, initial, &EvolveOptions::default())
}

enum Generator {
    Real { h0: DMatrix<f64>, delta: DMatrix<f64> },
    Complex { h0: DMatrix<Complex64>, delta: DMatrix<Complex64> },
}

impl Generator {
    fn new(hi: &HermitianOperator, hp: &HermitianOperator, propagator: Propagator) -> Result<Self> {
        let h0 = hi.to_dense()?;
        let delta = hp.to_dense()? - &h0;
        let real = propagator == Propagator::Spectral
            && h0.iter().chain(delta.iter()).all(|z| z.im == 0.0);
        Ok(if real {
            Generator::Real {
                h0: h0.map(|z| z.re),
                delta: delta.map(|z| z.re),
            }
        } else {
            Generator::Complex { h0, delta }
        })
    }

    fn step(&self, s: f64, dt: f64, propagator: Propagator, psi: &DVector<Complex64>) -> Result<DVector<Complex64>> {
        let phase = |l: f64| Complex64::from_polar(1.0, -l * dt);
        match (self, propagator) {
            (Generator::Real { h0, delta }, _) => {
                let h = h0 + delta * s;
                let n = h.nrows();
                let eig = SymmetricEigen::try_new(h, f64::EPSILON, 1000 * n.max(1))
                    .ok_or_else(|| Error::Eigensolver("propagator eigensolve did not converge".into()))?;
                let v = eig.eigenvectors.map(|x| Complex64::new(x, 0.0));
                let mut c = v.tr_mul(psi);
                for (ci, &l) in c.iter_mut().zip(eig.eigenvalues.iter()) {
                    *ci *= phase(l);
                }
                Ok(v * c)
            }
            (Generator::Complex { h0, delta }, Propagator::Spectral) => {
                let h = h0 + delta * Complex64::new(s, 0.0);
                let eig = eigen(h)?;
                let v = eig.eigenvectors;
                let mut c = v.ad_mul(psi);
                for (ci, &l) in c.iter_mut().zip(eig.eigenvalues.iter()) {
                    *ci *= phase(l);
                }
                Ok(v * c)
            }
            (Generator::Complex { h0, delta }, Propagator::Pade) => {
                let h = h0 + delta * Complex64::new(s, 0.0);
                Ok((h * Complex64::new(0.0, -dt)).exp() * psi)
            }
        }
    }
}

/// Piecewise-constant propagation: step `k` applies `exp(-i·H(s_k)·Δt)` with
/// `s_k` the midpoint of the step.
pub fn evolve_with(
    hi: &HermitianOperator,
    hp: &HermitianOperator,
    schedule: &Schedule,
    initial: &StateVector,
    options: &EvolveOptions,
) -> Result<Evolution> {
    check_same_space(hi, hp)?;
    if initial.space() != hi.space() {
        return Err(Error::SpaceMismatch);
    }
    if (initial.norm() - 1.0).abs() > 1e-9 {
        return Err(Error::invalid("initial state is not normalized"));
    }
    if hi.dim() > DENSE_LIMIT {
        return Err(Error::LimitExceeded {
            what: "dense propagation dimension",
            value: hi.dim() as u128,
            limit: DENSE_LIMIT as u128,
        });
    }
    let generator = Generator::new(hi, hp, options.propagator)?;
    let dt = schedule.time_step();
    let n = schedule.step_count();

    let mut psi = initial.amplitudes().clone();
    let mut norm = psi.norm();
    let mut cumulative = 0.0f64;
    let mut worst = 0.0f64;
    let mut points = options.trace.then(|| Vec::with_capacity(n));

    for k in 0..n {
        let s = (k as f64 + 0.5) / n as f64;
        psi = generator.step(s, dt, options.propagator, &psi)?;
        let next = psi.norm();
        let defect = (next - norm).abs();
        if !(defect <= STEP_DEFECT_LIMIT) {
            return Err(Error::NormDefect {
                step: k,
                defect,
                limit: STEP_DEFECT_LIMIT,
            });
        }
        cumulative += defect;
        worst = worst.max(defect);
        norm = next;
        if let Some(points) = points.as_mut() {
            let energy = hp.apply(&psi).dotc(&psi).re / (norm * norm);
            points.push(TracePoint {
                t: (k + 1) as f64 * dt,
                s: (k + 1) as f64 / n as f64,
                energy,
            });
        }
    }
    if cumulative > TOTAL_DEFECT_LIMIT {
        return Err(Error::NormDefect {
            step: n,
            defect: cumulative,
            limit: TOTAL_DEFECT_LIMIT,
        });
    }
    psi /= Complex64::new(norm, 0.0);
    Ok(Evolution {
        state: StateVector::new(initial.space().clone(), psi)?,
        cumulative_norm_defect: cumulative,
        max_step_defect: worst,
        trace: points,
    })
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct OccupationCount {
    pub occupation: Vec<u32>,
    pub count: u64,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct MeasurementHistogram {
    pub shots: u64,
    pub seed: u64,
    pub counts: BTreeMap<Vec<u32>, u64>,
}

impl MeasurementHistogram {
    pub fn count_of(&self, occupation: &[u32]) -> u64 {
        self.counts.get(occupation).copied().unwrap_or(0)
    }

    /// Outcomes by descending count, ties in ascending tuple order.
    pub fn most_frequent(&self) -> Vec<OccupationCount> {
        let mut v: Vec<OccupationCount> = self
            .counts
            .iter()
            .map(|(k, &c)| OccupationCount {
                occupation: k.clone(),
                count: c,
            })
            .collect();
        v.sort_by(|a, b| b.count.cmp(&a.count).then_with(|| a.occupation.cmp(&b.occupation)));
        v
    }
}

#[derive(Serialize, Deserialize)]
struct HistogramJson {
    shots: u64,
    seed: u64,
    counts: Vec<OccupationCount>,
}

impl Serialize for MeasurementHistogram {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        HistogramJson {
            shots: self.shots,
            seed: self.seed,
            counts: self
                .counts
                .iter()
                .map(|(k, &c)| OccupationCount {
                    occupation: k.clone(),
                    count: c,
                })
                .collect(),
        }
        .serialize(s)
    }
}

impl<'de> Deserialize<'de> for MeasurementHistogram {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let raw = HistogramJson::deserialize(d)?;
        Ok(Self {
            shots: raw.shots,
            seed: raw.seed,
            counts: raw.counts.into_iter().map(|c| (c.occupation, c.count)).collect(),
        })
    }
}

/// Samples `shots` occupation tuples i.i.d. from `|amplitude|²`.
pub fn measure_occupation(state: &StateVector, shots: u64, seed: u64) -> Result<MeasurementHistogram> {
    if shots == 0 {
        return Err(Error::invalid("shots must be at least 1"));
    }
    let probs = state.probabilities();
    let dist = WeightedIndex::new(&probs)
        .map_err(|e| Error::invalid(format!("state has no valid outcome distribution: {e}")))?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut by_index: BTreeMap<usize, u64> = BTreeMap::new();
    for _ in 0..shots {
        *by_index.entry(dist.sample(&mut rng)).or_default() += 1;
    }
    let counts = by_index
        .into_iter()
        .map(|(idx, c)| (state.space().occupation(idx), c))
        .collect();
    Ok(MeasurementHistogram {
        shots,
        seed,
        counts,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Candidate {
    pub occupation: LatticePoint,
    pub count: u64,
    #[serde(with = "bigint_string")]
    pub value: BigInt,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MinimumCheck {
    pub histogram: MeasurementHistogram,
    pub candidates: Vec<Candidate>,
    /// Candidates with `P = 0` verified exactly.
    pub certified: Vec<LatticePoint>,
    #[serde(with = "biguint_string")]
    pub smallest_square: BigUint,
    pub smallest_at: LatticePoint,
}

/// Measures `state`, then evaluates `P` exactly at the most frequent
/// outcomes. Any reported solution is an exact integer zero of `P`.
pub fn verify_minimum(
    state: &StateVector,
    p: &DiophantinePolynomial,
    shots: u64,
    seed: u64,
) -> Result<MinimumCheck> {
    if p.num_vars() != state.space().modes() {
        return Err(Error::DimensionMismatch {
            expected: state.space().modes(),
            found: p.num_vars(),
        });
    }
    let histogram = measure_occupation(state, shots, seed)?;
    let candidates: Vec<Candidate> = histogram
        .most_frequent()
        .into_iter()
        .take(CANDIDATE_COUNT)
        .map(|oc| {
            let pt: Vec<u64> = oc.occupation.iter().map(|&n| n as u64).collect();
            Ok(Candidate {
                occupation: LatticePoint::from_u64s(&pt),
                count: oc.count,
                value: p.evaluate_u64(&pt)?,
            })
        })
        .collect::<Result<_>>()?;
    let certified = candidates
        .iter()
        .filter(|c| c.value.is_zero())
        .map(|c| c.occupation.clone())
        .collect();
    let best = candidates
        .iter()
        .min_by(|a, b| {
            (&a.value * &a.value)
                .cmp(&(&b.value * &b.value))
                .then_with(|| b.count.cmp(&a.count))
        })
        .expect("at least one shot was taken");
    let sq = &best.value * &best.value;
    Ok(MinimumCheck {
        smallest_square: sq.to_biguint().expect("square is non-negative"),
        smallest_at: best.occupation.clone(),
        histogram,
        candidates,
        certified,
    })
}
