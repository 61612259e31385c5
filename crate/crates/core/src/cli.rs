//! Command-line front end: `solve`, `gap`, `evolve`, `finiteness`, `omega`
//! and `oracle`.
//!
//! Configuration is layered as flags over an optional JSON config file over
//! built-in defaults. The merged configuration is echoed in every report.
//! Exit codes: `0` success (for `solve`: a solution was certified), `1`
//! `solve` found no solution in the truncation, `2` any error.

use std::ffi::OsString;
use std::fmt;
use std::io::Write;
use std::path::PathBuf;
use std::str::FromStr;
use std::time::{Instant, SystemTime, UNIX_EPOCH};

use clap::{Args, Parser, Subcommand, ValueEnum};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::adiabatic::{
    evolve_with, gap_scan, measure_occupation, EvolveOptions, GapScan, MeasurementHistogram,
    Propagator, Schedule, TracePoint,
};
use crate::decision::{
    build_omega_hamiltonian, decide_existence, finiteness_sweep, omega_bit_report,
    regulator_removal_scan, DecisionReport, OmegaBitReport, OmegaFamily, OracleCheck,
    RegulatorFamily, RegulatorScan, ScanOptions, SimulationOptions, DEFAULT_S_GRID,
    DEFAULT_TAIL_TOLERANCE,
};
use crate::error::{Error, Result};
use crate::fock::{build_hi, build_hp, coherent_state, CoherentParams, TruncatedFockSpace};
use crate::oracle::{find_solutions, min_of_square, SearchBox};
use crate::polynomial::{biguint_string, parse_polynomial, DiophantinePolynomial, LatticePoint};

pub const CONFIG_ENV: &str = "DIOPH_ADIABATIC_CONFIG";
const DEFAULT_TOTAL_TIME: f64 = 100.0;
const DEFAULT_STEPS: usize = 10_000;
const DEFAULT_SHOTS: u64 = 1000;
const DEFAULT_GRID: usize = 21;
const DEFAULT_L_MAX: u64 = 10;
const DEFAULT_I_MAX: u32 = 30;
const DEFAULT_OMEGA_BLOCKS: u64 = 3;
const DEFAULT_OMEGA_CUTOFF: u32 = 2;
const ORACLE_LISTING: usize = 1000;

/// A complex displacement written as `1`, `0.5i`, `1+0.5i` or `0.3-0.2i`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Alpha(pub Complex64);

impl FromStr for Alpha {
    type Err = Error;

    fn from_str(text: &str) -> Result<Self> {
        let t: String = text.chars().filter(|c| !c.is_whitespace()).collect();
        let bad = || Error::invalid(format!("cannot parse complex number '{text}'"));
        let num = |s: &str| s.parse::<f64>().map_err(|_| bad());
        let Some(body) = t.strip_suffix('i') else {
            return Ok(Alpha(Complex64::new(num(&t)?, 0.0)));
        };
        let b = body.as_bytes();
        let split = (1..b.len())
            .rev()
            .find(|&k| (b[k] == b'+' || b[k] == b'-') && !matches!(b[k - 1], b'e' | b'E'));
        let (re, im) = match split {
            Some(k) => (num(&body[..k])?, &body[k..]),
            None => (0.0, body),
        };
        let im = match im {
            "" | "+" => 1.0,
            "-" => -1.0,
            other => num(other)?,
        };
        Ok(Alpha(Complex64::new(re, im)))
    }
}

impl fmt::Display for Alpha {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}{:+}i", self.0.re, self.0.im)
    }
}

impl Serialize for Alpha {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for Alpha {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Raw {
            Num(f64),
            Text(String),
        }
        match Raw::deserialize(d)? {
            Raw::Num(x) => Ok(Alpha(Complex64::new(x, 0.0))),
            Raw::Text(t) => t.parse().map_err(serde::de::Error::custom),
        }
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum Format {
    #[default]
    Json,
    Csv,
}

/// Partially specified configuration; one per source before merging.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ConfigLayer {
    pub polynomial: Option<String>,
    pub polynomial_file: Option<PathBuf>,
    pub nmax: Option<u32>,
    pub cutoffs: Option<Vec<u32>>,
    pub alpha: Option<Vec<Alpha>>,
    pub total_time: Option<f64>,
    pub steps: Option<usize>,
    pub shots: Option<u64>,
    pub seed: Option<u64>,
    pub oracle: Option<bool>,
    pub oracle_box: Option<Vec<u64>>,
    pub grid_size: Option<usize>,
    pub var: Option<usize>,
    pub l_max: Option<u64>,
    pub i_max: Option<u32>,
    pub s_grid: Option<Vec<f64>>,
    pub adaptive_i_max: Option<bool>,
    pub k: Option<u64>,
    pub n_max: Option<u64>,
    pub omega_s: Option<f64>,
    pub omega_hamiltonian: Option<bool>,
    pub format: Option<Format>,
    pub trace: Option<bool>,
    pub propagator: Option<Propagator>,
}

impl ConfigLayer {
    /// Field-wise `self` over `lower`. A polynomial or truncation given in
    /// `self` replaces both forms of it in `lower`.
    pub fn over(self, mut lower: ConfigLayer) -> ConfigLayer {
        if self.polynomial.is_some() || self.polynomial_file.is_some() {
            lower.polynomial = None;
            lower.polynomial_file = None;
        }
        if self.nmax.is_some() || self.cutoffs.is_some() {
            lower.nmax = None;
            lower.cutoffs = None;
        }
        ConfigLayer {
            polynomial: self.polynomial.or(lower.polynomial),
            polynomial_file: self.polynomial_file.or(lower.polynomial_file),
            nmax: self.nmax.or(lower.nmax),
            cutoffs: self.cutoffs.or(lower.cutoffs),
            alpha: self.alpha.or(lower.alpha),
            total_time: self.total_time.or(lower.total_time),
            steps: self.steps.or(lower.steps),
            shots: self.shots.or(lower.shots),
            seed: self.seed.or(lower.seed),
            oracle: self.oracle.or(lower.oracle),
            oracle_box: self.oracle_box.or(lower.oracle_box),
            grid_size: self.grid_size.or(lower.grid_size),
            var: self.var.or(lower.var),
            l_max: self.l_max.or(lower.l_max),
            i_max: self.i_max.or(lower.i_max),
            s_grid: self.s_grid.or(lower.s_grid),
            adaptive_i_max: self.adaptive_i_max.or(lower.adaptive_i_max),
            k: self.k.or(lower.k),
            n_max: self.n_max.or(lower.n_max),
            omega_s: self.omega_s.or(lower.omega_s),
            omega_hamiltonian: self.omega_hamiltonian.or(lower.omega_hamiltonian),
            format: self.format.or(lower.format),
            trace: self.trace.or(lower.trace),
            propagator: self.propagator.or(lower.propagator),
        }
    }

    pub fn from_json_file(path: &std::path::Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        Ok(serde_json::from_str(&text)?)
    }
}

/// Fully resolved configuration, echoed verbatim in every report.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunConfig {
    pub polynomial: String,
    pub polynomial_file: Option<PathBuf>,
    pub cutoffs: Vec<u32>,
    pub alpha: Vec<Alpha>,
    pub total_time: f64,
    pub steps: usize,
    pub shots: u64,
    pub seed: u64,
    pub oracle: bool,
    pub oracle_box: Option<Vec<u64>>,
    pub grid_size: usize,
    pub var: usize,
    pub l_max: u64,
    pub i_max: u32,
    pub s_grid: Vec<f64>,
    pub adaptive_i_max: bool,
    pub k: u64,
    pub n_max: u64,
    pub omega_s: f64,
    pub omega_hamiltonian: bool,
    pub format: Format,
    pub trace: bool,
    pub propagator: Propagator,
}

/// Per-mode cutoff used when none is configured: 10 for one mode,
/// otherwise the largest uniform cutoff keeping the dimension at or under
/// 64, but never below 4 (the smallest cutoff admitting `α = 1`).
pub fn default_cutoff(modes: usize) -> u32 {
    if modes <= 1 {
        return 10;
    }
    let mut n = 1u32;
    while ((n + 2) as u64).pow(modes as u32) <= 64 {
        n += 1;
    }
    n.max(4)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CommandKind {
    Solve,
    Gap,
    Evolve,
    Finiteness,
    Omega,
    Oracle,
}

impl RunConfig {
    /// Applies defaults to a merged layer. The polynomial source is read and
    /// parsed here to size the truncation.
    pub fn resolve(layer: ConfigLayer, command: CommandKind) -> Result<Self> {
        let (polynomial, polynomial_file) = match (layer.polynomial, layer.polynomial_file) {
            (Some(_), Some(_)) => {
                return Err(Error::invalid("give either an inline polynomial or a file, not both"))
            }
            (Some(p), None) => (p, None),
            (None, Some(f)) => (std::fs::read_to_string(&f)?, Some(f)),
            (None, None) => return Err(Error::invalid("no polynomial given (use -p or --poly-file)")),
        };
        let modes = match command {
            CommandKind::Omega => polynomial.parse::<OmegaFamily>()?.unknowns(),
            _ => parse_polynomial(&polynomial)?.num_vars(),
        };
        let fallback = match command {
            CommandKind::Omega => DEFAULT_OMEGA_CUTOFF,
            _ => default_cutoff(modes),
        };
        let cutoffs = match (layer.cutoffs, layer.nmax) {
            (Some(c), _) => c,
            (None, Some(n)) => vec![n; modes],
            (None, None) => vec![fallback; modes],
        };
        if cutoffs.len() != modes {
            return Err(Error::DimensionMismatch {
                expected: modes,
                found: cutoffs.len(),
            });
        }
        let alpha = match layer.alpha {
            None => vec![Alpha(Complex64::new(1.0, 0.0)); modes],
            Some(a) if a.len() == 1 => vec![a[0]; modes],
            Some(a) if a.len() == modes => a,
            Some(a) => {
                return Err(Error::DimensionMismatch {
                    expected: modes,
                    found: a.len(),
                })
            }
        };
        Ok(RunConfig {
            polynomial,
            polynomial_file,
            cutoffs,
            alpha,
            total_time: layer.total_time.unwrap_or(DEFAULT_TOTAL_TIME),
            steps: layer.steps.unwrap_or(DEFAULT_STEPS),
            shots: layer.shots.unwrap_or(DEFAULT_SHOTS),
            seed: layer.seed.unwrap_or(0),
            oracle: layer.oracle.unwrap_or(true),
            oracle_box: layer.oracle_box,
            grid_size: layer.grid_size.unwrap_or(DEFAULT_GRID),
            var: layer.var.unwrap_or(0),
            l_max: layer.l_max.unwrap_or(DEFAULT_L_MAX),
            i_max: layer.i_max.unwrap_or(DEFAULT_I_MAX),
            s_grid: layer.s_grid.unwrap_or_else(|| DEFAULT_S_GRID.to_vec()),
            adaptive_i_max: layer.adaptive_i_max.unwrap_or(true),
            k: layer.k.unwrap_or(0),
            n_max: layer.n_max.unwrap_or(DEFAULT_OMEGA_BLOCKS),
            omega_s: layer.omega_s.unwrap_or(1.0),
            omega_hamiltonian: layer.omega_hamiltonian.unwrap_or(true),
            format: layer.format.unwrap_or_default(),
            trace: layer.trace.unwrap_or(false),
            propagator: layer.propagator.unwrap_or_default(),
        })
    }

    pub fn parsed_polynomial(&self) -> Result<DiophantinePolynomial> {
        parse_polynomial(&self.polynomial)
    }

    pub fn space(&self) -> Result<TruncatedFockSpace> {
        TruncatedFockSpace::new(self.cutoffs.clone())
    }

    pub fn schedule(&self) -> Result<Schedule> {
        Schedule::new(self.total_time, self.steps)
    }

    pub fn coherent_params(&self) -> CoherentParams {
        CoherentParams::new(self.alpha.iter().map(|a| a.0).collect())
    }

    fn search_box(&self) -> Result<SearchBox> {
        match &self.oracle_box {
            Some(b) => SearchBox::new(b.clone()),
            None => SearchBox::new(self.cutoffs.iter().map(|&c| c as u64).collect()),
        }
    }

    fn simulation_options(&self) -> Result<SimulationOptions> {
        let oracle = match (self.oracle, &self.oracle_box) {
            (false, _) => OracleCheck::Skip,
            (true, None) => OracleCheck::Truncation,
            (true, Some(b)) => OracleCheck::Box(SearchBox::new(b.clone())?),
        };
        Ok(SimulationOptions {
            alphas: Some(self.coherent_params()),
            oracle,
        })
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EvolveReport {
    pub final_energy: f64,
    pub cumulative_norm_defect: f64,
    pub max_step_defect: f64,
    pub histogram: MeasurementHistogram,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub trace: Option<Vec<TracePoint>>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FinitenessReport {
    pub sweep: DecisionReport,
    pub regularization: RegulatorScan,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct OmegaEnergy {
    pub s: f64,
    pub dim: usize,
    pub weights: Vec<f64>,
    #[serde(with = "biguint_vec")]
    pub block_minima: Vec<num_bigint::BigUint>,
    pub decomposed_min: f64,
    pub global_min: f64,
}

mod biguint_vec {
    use num_bigint::BigUint;
    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(v: &[BigUint], s: S) -> Result<S::Ok, S::Error> {
        s.collect_seq(v.iter().map(|x| x.to_string()))
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Vec<BigUint>, D::Error> {
        Vec::<String>::deserialize(d)?
            .into_iter()
            .map(|t| t.parse().map_err(serde::de::Error::custom))
            .collect()
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct OmegaReport {
    pub census: OmegaBitReport,
    pub hamiltonian: Option<OmegaEnergy>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub hamiltonian_skipped: Option<String>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct OracleReport {
    pub polynomial: DiophantinePolynomial,
    pub search_box: Vec<u64>,
    pub solution_count: usize,
    /// At most 1000 solutions, lexicographically first.
    pub solutions: Vec<LatticePoint>,
    #[serde(with = "biguint_string")]
    pub min_square: num_bigint::BigUint,
    pub argmins: Vec<LatticePoint>,
}

#[derive(Clone, Debug, PartialEq)]
pub enum CommandResult {
    Solve(DecisionReport),
    Gap(GapScan),
    Evolve(EvolveReport),
    Finiteness(FinitenessReport),
    Omega(OmegaReport),
    Oracle(OracleReport),
}

pub fn cmd_solve(cfg: &RunConfig) -> Result<DecisionReport> {
    decide_existence(
        &cfg.parsed_polynomial()?,
        &cfg.space()?,
        &cfg.schedule()?,
        cfg.shots,
        cfg.seed,
        &cfg.simulation_options()?,
    )
}

pub fn cmd_gap(cfg: &RunConfig) -> Result<GapScan> {
    let space = cfg.space()?;
    let hi = build_hi(&cfg.coherent_params(), &space)?;
    let hp = build_hp(&cfg.parsed_polynomial()?, &space)?;
    gap_scan(&hi, &hp, cfg.grid_size)
}

pub fn cmd_evolve(cfg: &RunConfig) -> Result<EvolveReport> {
    let space = cfg.space()?;
    let params = cfg.coherent_params();
    let hi = build_hi(&params, &space)?;
    let hp = build_hp(&cfg.parsed_polynomial()?, &space)?;
    let init = coherent_state(&params, &space)?;
    let opts = EvolveOptions {
        trace: cfg.trace,
        propagator: cfg.propagator,
    };
    let run = evolve_with(&hi, &hp, &cfg.schedule()?, &init, &opts)?;
    Ok(EvolveReport {
        final_energy: hp.expectation(&run.state)?,
        cumulative_norm_defect: run.cumulative_norm_defect,
        max_step_defect: run.max_step_defect,
        histogram: measure_occupation(&run.state, cfg.shots, cfg.seed)?,
        trace: run.trace,
    })
}

pub fn cmd_finiteness(cfg: &RunConfig) -> Result<FinitenessReport> {
    let p = cfg.parsed_polynomial()?;
    let space = cfg.space()?;
    let sweep = finiteness_sweep(
        &p,
        cfg.var,
        cfg.l_max,
        &space,
        &cfg.schedule()?,
        cfg.shots,
        cfg.seed,
        &cfg.simulation_options()?,
    )?;
    let scan_opts = ScanOptions {
        i_max: cfg.i_max,
        adaptive: cfg.adaptive_i_max,
        tail_tolerance: DEFAULT_TAIL_TOLERANCE,
        ..ScanOptions::default()
    };
    let regularization = regulator_removal_scan(&p, cfg.var, &cfg.s_grid, &space, &scan_opts)?;
    Ok(FinitenessReport {
        sweep,
        regularization,
    })
}

pub fn cmd_omega(cfg: &RunConfig) -> Result<OmegaReport> {
    let family: OmegaFamily = cfg.polynomial.parse()?;
    let census = omega_bit_report(&family, cfg.k, cfg.n_max, &cfg.search_box()?)?;
    let mut hamiltonian = None;
    let mut hamiltonian_skipped = None;
    if cfg.omega_hamiltonian {
        let block = cfg.space()?;
        let rf = RegulatorFamily::new(cfg.omega_s, 1)?;
        match build_omega_hamiltonian(&family, cfg.k, cfg.n_max, &rf, &block) {
            Ok(h) => {
                hamiltonian = Some(OmegaEnergy {
                    s: h.s,
                    dim: h.operator.dim(),
                    weights: (0..=cfg.n_max).map(|n| rf.beta(n)).collect(),
                    block_minima: h.block_minima,
                    decomposed_min: h.decomposed_min,
                    global_min: h.global_min,
                })
            }
            Err(e @ Error::LimitExceeded { .. }) => hamiltonian_skipped = Some(e.to_string()),
            Err(e) => return Err(e),
        }
    }
    Ok(OmegaReport {
        census,
        hamiltonian,
        hamiltonian_skipped,
    })
}

pub fn cmd_oracle(cfg: &RunConfig) -> Result<OracleReport> {
    let p = cfg.parsed_polynomial()?;
    let bx = cfg.search_box()?;
    let sols = find_solutions(&p, &bx)?;
    let min = min_of_square(&p, &bx)?;
    Ok(OracleReport {
        polynomial: p,
        search_box: bx.upper().to_vec(),
        solution_count: sols.len(),
        solutions: sols.into_iter().take(ORACLE_LISTING).collect(),
        min_square: min.value,
        argmins: min.argmins.into_iter().take(ORACLE_LISTING).collect(),
    })
}

pub fn execute(command: CommandKind, cfg: &RunConfig) -> Result<CommandResult> {
    Ok(match command {
        CommandKind::Solve => CommandResult::Solve(cmd_solve(cfg)?),
        CommandKind::Gap => CommandResult::Gap(cmd_gap(cfg)?),
        CommandKind::Evolve => CommandResult::Evolve(cmd_evolve(cfg)?),
        CommandKind::Finiteness => CommandResult::Finiteness(cmd_finiteness(cfg)?),
        CommandKind::Omega => CommandResult::Omega(cmd_omega(cfg)?),
        CommandKind::Oracle => CommandResult::Oracle(cmd_oracle(cfg)?),
    })
}

impl CommandResult {
    pub fn exit_code(&self) -> i32 {
        match self {
            CommandResult::Solve(r) if r.verdict != crate::decision::Verdict::SolutionFound => 1,
            _ => 0,
        }
    }

    pub fn to_json(&self) -> Result<serde_json::Value> {
        Ok(match self {
            CommandResult::Solve(r) => serde_json::to_value(r)?,
            CommandResult::Gap(r) => serde_json::to_value(r)?,
            CommandResult::Evolve(r) => serde_json::to_value(r)?,
            CommandResult::Finiteness(r) => serde_json::to_value(r)?,
            CommandResult::Omega(r) => serde_json::to_value(r)?,
            CommandResult::Oracle(r) => serde_json::to_value(r)?,
        })
    }

    /// One table per command; see the README for the column layouts.
    pub fn to_csv(&self) -> Result<String> {
        let mut w = csv::Writer::from_writer(Vec::new());
        let occ_header = |k: usize| (0..k).map(|i| format!("n{i}")).collect::<Vec<_>>();
        match self {
            CommandResult::Solve(r) => {
                let k = r.parameters.cutoffs.len();
                let mut h = occ_header(k);
                h.extend(["count".into(), "value".into(), "certified".into()]);
                w.write_record(&h)?;
                for c in r.simulation.iter().flat_map(|s| &s.top_outcomes) {
                    let mut row: Vec<String> = c.occupation.coords().iter().map(|x| x.to_string()).collect();
                    row.push(c.count.to_string());
                    row.push(c.value.to_string());
                    row.push(num_traits::Zero::is_zero(&c.value).to_string());
                    w.write_record(&row)?;
                }
            }
            CommandResult::Gap(g) => {
                w.write_record(["s", "e0", "e1", "gap"])?;
                for p in &g.points {
                    w.write_record([p.s, p.e0, p.e1, p.gap].map(|x| x.to_string()))?;
                }
            }
            CommandResult::Evolve(e) => match &e.trace {
                Some(trace) => {
                    w.write_record(["t", "s", "energy"])?;
                    for p in trace {
                        w.write_record([p.t, p.s, p.energy].map(|x| x.to_string()))?;
                    }
                }
                None => {
                    let k = e.histogram.counts.keys().next().map_or(0, Vec::len);
                    let mut h = occ_header(k);
                    h.push("count".into());
                    w.write_record(&h)?;
                    for (occ, c) in &e.histogram.counts {
                        let mut row: Vec<String> = occ.iter().map(|x| x.to_string()).collect();
                        row.push(c.to_string());
                        w.write_record(&row)?;
                    }
                }
            },
            CommandResult::Finiteness(f) => {
                w.write_record(["s", "i_max", "min_energy", "tail_bound", "argmin_count"])?;
                for p in &f.regularization.points {
                    w.write_record([
                        p.s.to_string(),
                        p.i_max.to_string(),
                        p.min_energy.to_string(),
                        p.tail_bound.to_string(),
                        p.argmin_count.to_string(),
                    ])?;
                }
            }
            CommandResult::Omega(o) => {
                w.write_record(["n", "solution_count", "min_square", "weight", "block_min"])?;
                for e in &o.census.census {
                    let (weight, block) = match &o.hamiltonian {
                        Some(h) => (
                            h.weights[e.n as usize].to_string(),
                            h.block_minima[e.n as usize].to_string(),
                        ),
                        None => (String::new(), String::new()),
                    };
                    w.write_record([
                        e.n.to_string(),
                        e.solution_count.to_string(),
                        e.min_square.to_string(),
                        weight,
                        block,
                    ])?;
                }
            }
            CommandResult::Oracle(o) => {
                w.write_record(occ_header(o.search_box.len()))?;
                for s in &o.solutions {
                    w.write_record(s.coords().iter().map(|x| x.to_string()))?;
                }
            }
        }
        let bytes = w.into_inner().map_err(|e| Error::invalid(e.to_string()))?;
        Ok(String::from_utf8(bytes).expect("csv output is UTF-8"))
    }
}

#[derive(Debug, Parser)]
#[command(
    name = "dioph-adiabatic",
    version,
    about = "Adiabatic ground-state search for Diophantine equations on truncated Fock spaces",
    after_help = "Defaults: per-mode cutoff 10 for one unknown, otherwise the largest uniform \
cutoff with dimension <= 64 (at least 4); alpha = 1+0i on every mode; T = 100 with 10000 steps; \
1000 shots; seed 0; oracle over the truncation box. Settings are taken from flags, then the \
JSON config file (--config or $DIOPH_ADIABATIC_CONFIG), then these defaults."
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Decide solvability within the truncation. Exit 0: solution certified, 1: none found.
    Solve(CommonArgs),
    /// Lowest two levels and the gap along the interpolation.
    Gap {
        #[command(flatten)]
        common: CommonArgs,
        /// Number of uniform s points, at least 11 [default: 21].
        #[arg(long)]
        grid: Option<usize>,
    },
    /// Evolve, then sample the occupation histogram.
    Evolve(CommonArgs),
    /// Shift sweep plus regulator-removal scan.
    Finiteness {
        #[command(flatten)]
        common: CommonArgs,
        #[command(flatten)]
        sweep: SweepArgs,
    },
    /// Census and multi-block Hamiltonian of a family over p0 = k, p1 = N, x0...
    Omega {
        #[command(flatten)]
        common: CommonArgs,
        #[command(flatten)]
        omega: OmegaArgs,
    },
    /// Brute-force solutions and minimum of P^2 over a box.
    Oracle(CommonArgs),
}

#[derive(Debug, Args, Default)]
pub struct CommonArgs {
    /// Polynomial text, e.g. "x0^2 - 2*x1".
    #[arg(short = 'p', long = "poly")]
    pub poly: Option<String>,
    /// Read the polynomial from a file.
    #[arg(long = "poly-file")]
    pub poly_file: Option<PathBuf>,
    /// Uniform per-mode cutoff.
    #[arg(long)]
    pub nmax: Option<u32>,
    /// Per-mode cutoffs, comma separated.
    #[arg(long, value_delimiter = ',')]
    pub cutoffs: Option<Vec<u32>>,
    /// Coherent displacement(s), e.g. 1 or 1+0.5i; one value or one per mode.
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    pub alpha: Option<Vec<Alpha>>,
    /// Total evolution time [default: 100].
    #[arg(short = 'T', long = "total-time")]
    pub total_time: Option<f64>,
    /// Number of propagation steps, at least 100 [default: 10000].
    #[arg(long)]
    pub steps: Option<usize>,
    /// Measurement shots [default: 1000].
    #[arg(long)]
    pub shots: Option<u64>,
    /// RNG seed [default: 0].
    #[arg(long)]
    pub seed: Option<u64>,
    /// Inclusive oracle box upper bounds, comma separated [default: cutoffs].
    #[arg(long = "oracle-box", value_delimiter = ',')]
    pub oracle_box: Option<Vec<u64>>,
    /// Skip the oracle cross-check.
    #[arg(long = "no-oracle")]
    pub no_oracle: bool,
    /// Output format [default: json].
    #[arg(long, value_enum)]
    pub format: Option<Format>,
    /// Record the per-step expected energy (evolve).
    #[arg(long)]
    pub trace: bool,
    /// Propagator construction [default: spectral].
    #[arg(long, value_enum)]
    pub propagator: Option<PropagatorArg>,
    /// Omit the run metadata (timestamps, timings) from the output.
    #[arg(long = "no-meta")]
    pub no_meta: bool,
    /// JSON config file.
    #[arg(long, env = CONFIG_ENV)]
    pub config: Option<PathBuf>,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
pub enum PropagatorArg {
    Spectral,
    Pade,
}

#[derive(Debug, Args, Default)]
pub struct SweepArgs {
    /// Shifted variable [default: 0].
    #[arg(long)]
    pub var: Option<usize>,
    /// Largest shift [default: 10].
    #[arg(long = "l-max")]
    pub l_max: Option<u64>,
    /// Series truncation bound [default: 30].
    #[arg(long = "i-max")]
    pub i_max: Option<u32>,
    /// Descending regulator exponents in (0,1] [default: 1,0.5,0.25,0.1].
    #[arg(long = "s-grid", value_delimiter = ',')]
    pub s_grid: Option<Vec<f64>>,
    /// Fail instead of doubling i_max when a tail bound is too large.
    #[arg(long = "fixed-i-max")]
    pub fixed_i_max: bool,
}

#[derive(Debug, Args, Default)]
pub struct OmegaArgs {
    /// Bit index k [default: 0].
    #[arg(long)]
    pub k: Option<u64>,
    /// Largest N [default: 3].
    #[arg(long = "n-max")]
    pub n_max: Option<u64>,
    /// Regulator exponent for the block weights [default: 1].
    #[arg(long = "omega-s")]
    pub omega_s: Option<f64>,
    /// Census only; skip the multi-block Hamiltonian.
    #[arg(long = "no-hamiltonian")]
    pub no_hamiltonian: bool,
}

impl CommonArgs {
    fn layer(&self) -> ConfigLayer {
        ConfigLayer {
            polynomial: self.poly.clone(),
            polynomial_file: self.poly_file.clone(),
            nmax: self.nmax,
            cutoffs: self.cutoffs.clone(),
            alpha: self.alpha.clone(),
            total_time: self.total_time,
            steps: self.steps,
            shots: self.shots,
            seed: self.seed,
            oracle: self.no_oracle.then_some(false),
            oracle_box: self.oracle_box.clone(),
            format: self.format,
            trace: self.trace.then_some(true),
            propagator: self.propagator.map(|p| match p {
                PropagatorArg::Spectral => Propagator::Spectral,
                PropagatorArg::Pade => Propagator::Pade,
            }),
            ..Default::default()
        }
    }
}

impl Command {
    fn split(&self) -> (CommandKind, &CommonArgs, ConfigLayer) {
        match self {
            Command::Solve(c) => (CommandKind::Solve, c, c.layer()),
            Command::Gap { common, grid } => (
                CommandKind::Gap,
                common,
                ConfigLayer {
                    grid_size: *grid,
                    ..common.layer()
                },
            ),
            Command::Evolve(c) => (CommandKind::Evolve, c, c.layer()),
            Command::Finiteness { common, sweep } => (
                CommandKind::Finiteness,
                common,
                ConfigLayer {
                    var: sweep.var,
                    l_max: sweep.l_max,
                    i_max: sweep.i_max,
                    s_grid: sweep.s_grid.clone(),
                    adaptive_i_max: sweep.fixed_i_max.then_some(false),
                    ..common.layer()
                },
            ),
            Command::Omega { common, omega } => (
                CommandKind::Omega,
                common,
                ConfigLayer {
                    k: omega.k,
                    n_max: omega.n_max,
                    omega_s: omega.omega_s,
                    omega_hamiltonian: omega.no_hamiltonian.then_some(false),
                    ..common.layer()
                },
            ),
            Command::Oracle(c) => (CommandKind::Oracle, c, c.layer()),
        }
    }
}

#[derive(Serialize)]
struct Envelope<'a> {
    command: CommandKind,
    config: &'a RunConfig,
    result: serde_json::Value,
    #[serde(skip_serializing_if = "Option::is_none")]
    meta: Option<Meta>,
}

#[derive(Serialize)]
struct Meta {
    version: &'static str,
    elapsed_seconds: f64,
    unix_time: u64,
}

/// Parses `args`, runs the command and writes the report. Returns the
/// process exit code.
pub fn run<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = if e.use_stderr() {
                write!(err, "{}", e.render())
            } else {
                write!(out, "{}", e.render())
            };
            return code;
        }
    };
    match run_parsed(&cli, out) {
        Ok(code) => code,
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            2
        }
    }
}

fn run_parsed(cli: &Cli, out: &mut dyn Write) -> Result<i32> {
    let start = Instant::now();
    let (kind, common, flags) = cli.command.split();
    let file = match &common.config {
        Some(path) => ConfigLayer::from_json_file(path)?,
        None => ConfigLayer::default(),
    };
    let cfg = RunConfig::resolve(flags.over(file), kind)?;
    let result = execute(kind, &cfg)?;
    match cfg.format {
        Format::Csv => out.write_all(result.to_csv()?.as_bytes())?,
        Format::Json => {
            let meta = (!common.no_meta).then(|| Meta {
                version: env!("CARGO_PKG_VERSION"),
                elapsed_seconds: start.elapsed().as_secs_f64(),
                unix_time: SystemTime::now()
                    .duration_since(UNIX_EPOCH)
                    .map_or(0, |d| d.as_secs()),
            });
            let env = Envelope {
                command: kind,
                config: &cfg,
                result: result.to_json()?,
                meta,
            };
            serde_json::to_writer_pretty(&mut *out, &env)?;
            writeln!(out)?;
        }
    }
    Ok(result.exit_code())
}
