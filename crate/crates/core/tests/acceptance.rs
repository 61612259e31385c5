use std::process::Command;
use std::time::Instant;

use num_bigint::{BigInt, BigUint};
use num_complex::Complex64;
use num_rational::BigRational;
use num_traits::{ToPrimitive, Zero};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use dioph_adiabatic::adiabatic::{evolve, ground_state, measure_occupation, Schedule};
use dioph_adiabatic::decision::{
    beta, build_omega_hamiltonian, build_regularized_hp, finiteness_sweep, OmegaFamily,
    OracleAgreement, RegulatorFamily, SimulationOptions, Verdict,
};
use dioph_adiabatic::fock::{
    build_hi, build_hp, coherent_state, hp_exact_diagonal, CoherentParams, TruncatedFockSpace,
};
use dioph_adiabatic::oracle::{min_of_square, regularized_min, SearchBox};
use dioph_adiabatic::polynomial::{parse_polynomial, DiophantinePolynomial};

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: impl Into<String>) -> Outcome {
    Outcome {
        pass,
        detail: detail.into(),
    }
}

fn poly(text: &str) -> DiophantinePolynomial {
    parse_polynomial(text).unwrap()
}

fn c1(a: f64) -> CoherentParams {
    CoherentParams::uniform(1, Complex64::new(a, 0.0))
}

fn random_polynomial(rng: &mut ChaCha8Rng) -> DiophantinePolynomial {
    let k = rng.random_range(1..=3usize);
    let terms = rng.random_range(1..=5usize);
    let mut out = Vec::new();
    for _ in 0..terms {
        let mut e = vec![0u32; k];
        let deg = rng.random_range(0..=4u32);
        for _ in 0..deg {
            e[rng.random_range(0..k)] += 1;
        }
        out.push((BigInt::from(rng.random_range(-9..=9i64)), e));
    }
    DiophantinePolynomial::from_terms(k, out).unwrap()
}

fn criterion_1() -> Outcome {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let mut mismatches = 0;
    for _ in 0..200 {
        let p = random_polynomial(&mut rng);
        let cutoffs: Vec<u32> = (0..p.num_vars()).map(|_| rng.random_range(1..=8)).collect();
        let space = TruncatedFockSpace::new(cutoffs.clone()).unwrap();
        let diag_min = hp_exact_diagonal(&p, &space).unwrap().into_iter().min().unwrap();
        let bx = SearchBox::new(cutoffs.iter().map(|&c| c as u64).collect()).unwrap();
        if diag_min != min_of_square(&p, &bx).unwrap().value {
            mismatches += 1;
        }
    }
    let secs = start.elapsed().as_secs_f64();
    outcome(
        mismatches == 0 && secs <= 120.0,
        format!("200 polynomials, {mismatches} mismatches, {secs:.2}s"),
    )
}

fn criterion_2() -> Outcome {
    let space = TruncatedFockSpace::uniform(1, 12).unwrap();
    let mut worst_e: f64 = 0.0;
    let mut worst_f: f64 = 1.0;
    for a in [
        Complex64::new(0.5, 0.0),
        Complex64::new(1.0, 0.0),
        Complex64::new(1.0, 0.5),
    ] {
        let params = CoherentParams::uniform(1, a);
        let hi = build_hi(&params, &space).unwrap();
        let (e0, v) = ground_state(&hi).unwrap();
        let f = v.fidelity(&coherent_state(&params, &space).unwrap()).unwrap();
        worst_e = worst_e.max(e0.abs());
        worst_f = worst_f.min(f);
    }
    outcome(
        worst_e <= 1e-6 && worst_f >= 1.0 - 1e-6,
        format!("max |E0| = {worst_e:.3e}, min fidelity = 1 - {:.3e}", 1.0 - worst_f),
    )
}

struct Runs {
    max_defect: f64,
    evolve_calls: usize,
}

fn criterion_3(runs: &mut Runs) -> Outcome {
    let start = Instant::now();
    let p = poly("x0 - 3");
    let space = TruncatedFockSpace::uniform(1, 10).unwrap();
    let params = c1(1.0);
    let hi = build_hi(&params, &space).unwrap();
    let hp = build_hp(&p, &space).unwrap();
    let init = coherent_state(&params, &space).unwrap();
    let shots = 10_000u64;
    let mut freq = Vec::new();
    let mut exact = Vec::new();
    for t in [1.0, 10.0, 100.0] {
        let ev = evolve(&hi, &hp, &Schedule::new(t, 10_000).unwrap(), &init).unwrap();
        runs.max_defect = runs.max_defect.max(ev.cumulative_norm_defect);
        runs.evolve_calls += 1;
        exact.push(ev.state.probability_of(&[3]).unwrap());
        let h = measure_occupation(&ev.state, shots, 7).unwrap();
        freq.push(h.count_of(&[3]) as f64 / shots as f64);
    }
    let sigma = |q: f64| (q * (1.0 - q) / shots as f64).sqrt();
    let monotone = freq
        .windows(2)
        .all(|w| w[1] >= w[0] - 2.0 * (sigma(w[0]).powi(2) + sigma(w[1]).powi(2)).sqrt());
    let secs = start.elapsed().as_secs_f64();
    outcome(
        exact[2] >= 0.9 && freq[2] >= 0.9 && monotone && secs <= 60.0,
        format!(
            "P(n=3) exact {:.4}/{:.4}/{:.4}, sampled {:.4}/{:.4}/{:.4} at T=1/10/100, {secs:.2}s",
            exact[0], exact[1], exact[2], freq[0], freq[1], freq[2]
        ),
    )
}

fn sweep_case(
    text: &str,
    cutoffs: Vec<u32>,
    schedule: &Schedule,
    expect: Verdict,
    halt: Option<u64>,
) -> (bool, String) {
    let p = poly(text);
    let space = TruncatedFockSpace::new(cutoffs).unwrap();
    let r = finiteness_sweep(&p, 0, 10, &space, schedule, 1000, 0, &SimulationOptions::default())
        .unwrap();
    let agrees = r.sweep.iter().all(|s| s.oracle_agreement == OracleAgreement::Agrees);
    let ok = r.verdict == expect && r.halted_at == halt && agrees;
    (ok, format!("{text}: {:?} at {:?}", r.verdict, r.halted_at))
}

fn criterion_5() -> Outcome {
    let long = Schedule::new(100.0, 10_000).unwrap();
    let short = Schedule::new(100.0, 2_000).unwrap();
    let cases = [
        sweep_case("(x0-1)*(x0-2)", vec![10], &long, Verdict::FiniteHaltedAtL, Some(3)),
        sweep_case("x0*x1", vec![4, 4], &short, Verdict::SweepExhausted, None),
        sweep_case("x0 + 1", vec![10], &long, Verdict::FiniteHaltedAtL, Some(0)),
    ];
    let pass = cases.iter().all(|c| c.0);
    let detail: Vec<String> = cases.into_iter().map(|c| c.1).collect();
    outcome(pass, detail.join("; "))
}

fn regularized_pair(text: &str, cutoffs: Vec<u32>, i_max: u32) -> (f64, f64, Option<BigUint>, f64) {
    let p = poly(text);
    let space = TruncatedFockSpace::new(cutoffs.clone()).unwrap();
    let rf = RegulatorFamily::new(1.0, i_max).unwrap();
    let h = build_regularized_hp(&p, 0, &rf, &space).unwrap();
    let bx = SearchBox::new(cutoffs.iter().map(|&c| c as u64).collect()).unwrap();
    let o = regularized_min(&p, 0, 1.0, i_max as usize, &bx).unwrap();
    (h.min_energy, o.value, o.exact_numerator, h.tail_bound)
}

fn criterion_6() -> Outcome {
    let mut pass = true;
    let mut parts = Vec::new();
    for (text, cutoffs, zero) in [
        ("x1", vec![10, 10], true),
        ("x0*x1", vec![10, 10], true),
        ("(x0-1)*(x0-2)", vec![10], false),
        ("x0 - 3", vec![10], false),
    ] {
        let (ham, orc, num, _) = regularized_pair(text, cutoffs, 30);
        let ok = if zero {
            ham == 0.0 && num.as_ref().is_some_and(Zero::is_zero)
        } else {
            ham > 1e-3 && ((ham - orc) / orc).abs() <= 1e-9
        };
        pass &= ok;
        parts.push(format!("{text}: {ham:.9e} vs {orc:.9e}"));
    }
    outcome(pass, parts.join("; "))
}

fn factorial(n: u32) -> BigInt {
    (1..=n).fold(BigInt::from(1), |acc, k| acc * BigInt::from(k))
}

fn criterion_7() -> Outcome {
    let mut pass = true;
    let mut parts = Vec::new();
    for (text, cutoffs) in [
        ("x1", vec![10, 10]),
        ("x0*x1", vec![10, 10]),
        ("(x0-1)*(x0-2)", vec![10]),
        ("x0 - 3", vec![10]),
        ("x0 + 1", vec![10]),
    ] {
        let (min30, _, n30, bound) = regularized_pair(text, cutoffs.clone(), 30);
        let (_, _, n60, _) = regularized_pair(text, cutoffs, 60);
        let r30 = BigRational::new(BigInt::from(n30.unwrap()), factorial(30));
        let r60 = BigRational::new(BigInt::from(n60.unwrap()), factorial(60));
        let delta = r60 - r30;
        let bound_q = BigRational::from_float(bound).unwrap();
        let relative_ok = if min30 == 0.0 { bound == 0.0 } else { bound < 1e-6 * min30 };
        let shift_ok = if bound == 0.0 {
            delta.is_zero()
        } else {
            delta >= BigRational::zero() && delta < bound_q
        };
        pass &= relative_ok && shift_ok;
        parts.push(format!(
            "{text}: bound {bound:.2e}, shift {:.2e}",
            delta.to_f64().unwrap_or(f64::NAN)
        ));
    }
    outcome(pass, parts.join("; "))
}

fn criterion_8() -> Outcome {
    let family: OmegaFamily = "x0 + x1 + p1 - 2".parse().unwrap();
    let block = TruncatedFockSpace::uniform(2, 2).unwrap();
    let bx = SearchBox::cube(2, 2).unwrap();
    let mut pass = true;
    let mut parts = Vec::new();
    for s in [1.0, 0.5] {
        let rf = RegulatorFamily::new(s, 30).unwrap();
        let h = build_omega_hamiltonian(&family, 0, 3, &rf, &block).unwrap();
        let brute: f64 = (0..=3u64)
            .map(|n| {
                let m = min_of_square(&family.instantiate(0, n).unwrap(), &bx).unwrap().value;
                beta(n, s) * m.to_f64().unwrap()
            })
            .sum();
        let solvable: Vec<bool> = (0..=3u64)
            .map(|n| min_of_square(&family.instantiate(0, n).unwrap(), &bx).unwrap().value.is_zero())
            .collect();
        let rel = ((h.global_min - brute) / brute).abs();
        pass &= rel <= 1e-9 && solvable == [true, true, true, false];
        parts.push(format!("s={s}: global {:.12e}, blocks {brute:.12e}", h.global_min));
    }
    outcome(pass, parts.join("; "))
}

fn criterion_9() -> Outcome {
    let run = || {
        Command::new(env!("CARGO_BIN_EXE_dioph-adiabatic"))
            .args(["solve", "-p", "x0 - 3", "--nmax", "10", "-T", "100", "--seed", "11", "--no-meta"])
            .output()
            .unwrap()
    };
    let a = run();
    let b = run();
    outcome(
        a.status.code() == Some(0) && !a.stdout.is_empty() && a.stdout == b.stdout,
        format!("{} bytes, identical = {}", a.stdout.len(), a.stdout == b.stdout),
    )
}

fn main() {
    let mut runs = Runs {
        max_defect: 0.0,
        evolve_calls: 0,
    };
    let c3 = criterion_3(&mut runs);
    let c4 = outcome(
        runs.max_defect <= 1e-8,
        format!(
            "max cumulative norm defect {:.3e} over {} direct evolve calls; evolve rejects any defect above 1e-8",
            runs.max_defect, runs.evolve_calls
        ),
    );
    let results = [
        (1, criterion_1()),
        (2, criterion_2()),
        (3, c3),
        (4, c4),
        (5, criterion_5()),
        (6, criterion_6()),
        (7, criterion_7()),
        (8, criterion_8()),
        (9, criterion_9()),
    ];
    let mut failed = 0;
    for (n, r) in &results {
        println!("{} criterion {n}: {}", if r.pass { "PASS" } else { "FAIL" }, r.detail);
        failed += usize::from(!r.pass);
    }
    if failed > 0 {
        eprintln!("{failed} acceptance criteria failed");
        std::process::exit(1);
    }
}
