//! Decision procedures built on the adiabatic simulator: solution existence,
//! the shift-sweep finiteness test, regularized Hamiltonians and truncated
//! Ω-family Hamiltonians.
//!
//! Verdicts never overclaim. `solution_found` always carries exact integer
//! witnesses; everything else is evidence at the chosen truncation.

mod omega;
mod regularized;

pub use omega::{
    build_omega_hamiltonian, omega_bit_report, OmegaBitReport, OmegaCensusEntry, OmegaFamily,
    OmegaHamiltonian, OMEGA_CAVEAT,
};
pub use regularized::{
    beta, beta_with_error, build_regularized_hp, regulator_removal_scan, tail_bound,
    RegularizedHamiltonian, RegulatorFamily, RegulatorPoint, RegulatorScan, RegulatorVerdict,
    ScanOptions, DEFAULT_S_GRID, DEFAULT_TAIL_TOLERANCE,
};

use num_bigint::BigUint;
use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::adiabatic::{evolve, verify_minimum, Candidate, Schedule};
use crate::error::{Error, Result};
use crate::fock::{build_hi, build_hp, coherent_state, CoherentParams, TruncatedFockSpace};
use crate::oracle::{find_solutions, SearchBox};
use crate::polynomial::{biguint_string, DiophantinePolynomial, LatticePoint};

/// Oracle solutions echoed in a report; the count is always complete.
const ORACLE_ECHO: usize = 32;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Verdict {
    SolutionFound,
    NoSolutionInTruncation,
    #[serde(rename = "finite_halted_at_L")]
    FiniteHaltedAtL,
    SweepExhausted,
    InfiniteSuggested,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OracleAgreement {
    Agrees,
    Disagrees,
    OracleSkipped,
}

#[derive(Clone, Debug, PartialEq, Eq, Default)]
pub enum OracleCheck {
    /// Search the truncation box `0..=n_max(i)` per mode.
    #[default]
    Truncation,
    Box(SearchBox),
    Skip,
}

#[derive(Clone, Debug, PartialEq, Default)]
pub struct SimulationOptions {
    /// Per-mode displacements; `None` uses `α = 1` on every mode.
    pub alphas: Option<CoherentParams>,
    pub oracle: OracleCheck,
}

impl SimulationOptions {
    fn alphas_for(&self, modes: usize) -> CoherentParams {
        self.alphas
            .clone()
            .unwrap_or_else(|| CoherentParams::uniform(modes, Complex64::new(1.0, 0.0)))
    }

    fn oracle_box(&self, space: &TruncatedFockSpace) -> Result<Option<SearchBox>> {
        match &self.oracle {
            OracleCheck::Truncation => Ok(Some(SearchBox::new(
                space.cutoffs().iter().map(|&c| c as u64).collect(),
            )?)),
            OracleCheck::Box(b) => Ok(Some(b.clone())),
            OracleCheck::Skip => Ok(None),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ReportParameters {
    pub polynomial: DiophantinePolynomial,
    pub cutoffs: Vec<u32>,
    pub alphas: Vec<Complex64>,
    pub total_time: f64,
    pub step_count: usize,
    pub shots: u64,
    pub seed: u64,
    pub oracle_box: Option<Vec<u64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub var: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub l_max: Option<u64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct OracleSummary {
    pub search_box: Vec<u64>,
    pub solution_count: usize,
    /// The first solutions in lexicographic order.
    pub solutions: Vec<LatticePoint>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SimulationSummary {
    pub cumulative_norm_defect: f64,
    /// `⟨ψ(T)|H_P|ψ(T)⟩`.
    pub final_energy: f64,
    pub top_outcomes: Vec<Candidate>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepStep {
    pub shift: u64,
    pub verdict: Verdict,
    /// Witnesses of the shifted equation, in shifted coordinates.
    pub witnesses: Vec<LatticePoint>,
    pub oracle_agreement: OracleAgreement,
    pub oracle_solution_count: Option<usize>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DecisionReport {
    pub verdict: Verdict,
    /// Exact solutions of the input equation.
    pub witnesses: Vec<LatticePoint>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub halted_at: Option<u64>,
    #[serde(default, with = "biguint_string::option")]
    pub smallest_square: Option<BigUint>,
    #[serde(default)]
    pub smallest_at: Option<LatticePoint>,
    pub oracle_agreement: OracleAgreement,
    #[serde(default)]
    pub oracle: Option<OracleSummary>,
    #[serde(default)]
    pub simulation: Option<SimulationSummary>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub sweep: Vec<SweepStep>,
    pub parameters: ReportParameters,
}

fn check_modes(p: &DiophantinePolynomial, space: &TruncatedFockSpace) -> Result<()> {
    if p.num_vars() != space.modes() {
        return Err(Error::DimensionMismatch {
            expected: space.modes(),
            found: p.num_vars(),
        });
    }
    Ok(())
}

/// Coherent start, adiabatic evolution, occupation readout, exact check,
/// then an oracle cross-check unless disabled.
pub fn decide_existence(
    p: &DiophantinePolynomial,
    space: &TruncatedFockSpace,
    schedule: &Schedule,
    shots: u64,
    seed: u64,
    options: &SimulationOptions,
) -> Result<DecisionReport> {
    check_modes(p, space)?;
    let params = options.alphas_for(space.modes());
    let hi = build_hi(&params, space)?;
    let hp = build_hp(p, space)?;
    let init = coherent_state(&params, space)?;
    let run = evolve(&hi, &hp, schedule, &init)?;
    let final_energy = hp.expectation(&run.state)?;
    let check = verify_minimum(&run.state, p, shots, seed)?;

    let (verdict, witnesses, smallest_square, smallest_at) = if check.certified.is_empty() {
        (
            Verdict::NoSolutionInTruncation,
            Vec::new(),
            Some(check.smallest_square),
            Some(check.smallest_at),
        )
    } else {
        let mut w = check.certified;
        w.sort();
        (Verdict::SolutionFound, w, None, None)
    };

    let bx = options.oracle_box(space)?;
    let (agreement, oracle) = match &bx {
        None => (OracleAgreement::OracleSkipped, None),
        Some(bx) => {
            let found = find_solutions(p, bx)?;
            let agrees = match verdict {
                // witnesses outside a user-supplied box are not checkable
                Verdict::SolutionFound => witnesses.iter().all(|w| {
                    let inside = w
                        .to_u64s()
                        .is_some_and(|c| c.iter().zip(bx.upper()).all(|(x, u)| x <= u));
                    !inside || found.binary_search(w).is_ok()
                }),
                _ => found.is_empty(),
            };
            let summary = OracleSummary {
                search_box: bx.upper().to_vec(),
                solution_count: found.len(),
                solutions: found.into_iter().take(ORACLE_ECHO).collect(),
            };
            let a = if agrees {
                OracleAgreement::Agrees
            } else {
                OracleAgreement::Disagrees
            };
            (a, Some(summary))
        }
    };

    Ok(DecisionReport {
        verdict,
        witnesses,
        halted_at: None,
        smallest_square,
        smallest_at,
        oracle_agreement: agreement,
        oracle,
        simulation: Some(SimulationSummary {
            cumulative_norm_defect: run.cumulative_norm_defect,
            final_energy,
            top_outcomes: check.candidates,
        }),
        sweep: Vec::new(),
        parameters: ReportParameters {
            polynomial: p.clone(),
            cutoffs: space.cutoffs().to_vec(),
            alphas: params.alphas().to_vec(),
            total_time: schedule.total_time(),
            step_count: schedule.step_count(),
            shots,
            seed,
            oracle_box: bx.map(|b| b.upper().to_vec()),
            var: None,
            l_max: None,
        },
    })
}

/// Runs [`decide_existence`] on `shift(p, var, i)` for `i = 0, 1, …, l_max`
/// and halts at the first shift with no solution.
///
/// A shift only halts the sweep when the oracle (if enabled) confirms the
/// absence of solutions; a simulation miss the oracle contradicts is
/// recorded in the step and the sweep continues. Shifts are evaluated in
/// parallel batches and assembled in index order.
pub fn finiteness_sweep(
    p: &DiophantinePolynomial,
    var: usize,
    l_max: u64,
    space: &TruncatedFockSpace,
    schedule: &Schedule,
    shots: u64,
    seed: u64,
    options: &SimulationOptions,
) -> Result<DecisionReport> {
    check_modes(p, space)?;
    if var >= p.num_vars() {
        return Err(Error::IndexOutOfRange {
            index: var,
            len: p.num_vars(),
        });
    }
    if l_max < 1 {
        return Err(Error::invalid("l_max must be at least 1"));
    }
    let batch = rayon::current_num_threads().max(1) as u64;
    let mut steps: Vec<SweepStep> = Vec::new();
    let mut witnesses: Vec<LatticePoint> = Vec::new();
    let mut halted_at = None;
    let mut first: Option<DecisionReport> = None;

    let mut start = 0u64;
    'outer: while start <= l_max {
        let end = (start + batch - 1).min(l_max);
        let reports = (start..=end)
            .into_par_iter()
            .map(|i| decide_existence(&p.shift(var, i)?, space, schedule, shots, seed, options))
            .collect::<Result<Vec<_>>>()?;
        for (i, r) in (start..=end).zip(reports) {
            for w in &r.witnesses {
                let mut c = w.coords().to_vec();
                c[var] += BigUint::from(i);
                witnesses.push(LatticePoint::new(c));
            }
            let halts = r.verdict == Verdict::NoSolutionInTruncation
                && r.oracle_agreement != OracleAgreement::Disagrees;
            steps.push(SweepStep {
                shift: i,
                verdict: r.verdict,
                witnesses: r.witnesses.clone(),
                oracle_agreement: r.oracle_agreement,
                oracle_solution_count: r.oracle.as_ref().map(|o| o.solution_count),
            });
            if first.is_none() {
                first = Some(r);
            }
            if halts {
                halted_at = Some(i);
                break 'outer;
            }
        }
        start = end + 1;
    }
    witnesses.sort();
    witnesses.dedup();

    let agreement = if steps
        .iter()
        .any(|s| s.oracle_agreement == OracleAgreement::Disagrees)
    {
        OracleAgreement::Disagrees
    } else if steps
        .iter()
        .all(|s| s.oracle_agreement == OracleAgreement::Agrees)
    {
        OracleAgreement::Agrees
    } else {
        OracleAgreement::OracleSkipped
    };
    let first = first.expect("at least one shift is evaluated");
    let mut parameters = first.parameters;
    parameters.polynomial = p.clone();
    parameters.var = Some(var);
    parameters.l_max = Some(l_max);

    Ok(DecisionReport {
        verdict: if halted_at.is_some() {
            Verdict::FiniteHaltedAtL
        } else {
            Verdict::SweepExhausted
        },
        witnesses,
        halted_at,
        smallest_square: None,
        smallest_at: None,
        oracle_agreement: agreement,
        oracle: None,
        simulation: None,
        sweep: steps,
        parameters,
    })
}
