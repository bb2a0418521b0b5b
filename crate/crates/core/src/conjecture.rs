//! Interval-counting predicates and the parameter sweep that checks them.
//!
//! Per parity, every baseline interval must hold 0, 1 or 2 regular levels,
//! and an interval with 2 must border an interval with 0. The extended form
//! evaluates the same clauses on effective counts, where exceptional levels
//! on a baseline are attributed to one of its two neighbouring intervals by
//! an explicit, recorded [`AttributionRule`].

use std::collections::BTreeMap;
use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{RabiError, Result};
use crate::exceptional::{ExceptionalClassification, Verdict, DEFAULT_CLASSIFY_TOL};
use crate::model::{validate, ModelParams, Parity};
use crate::spectrum::{spectral_scan, IntervalCensus, ScanConfig, MAX_BASELINES};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum PredicateVersion {
    Classic,
    Extended,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Side {
    Left,
    Right,
}

impl Side {
    fn interval_of(self, baseline: i64) -> i64 {
        match self {
            Side::Left => baseline - 1,
            Side::Right => baseline,
        }
    }

    fn other(self) -> Side {
        match self {
            Side::Left => Side::Right,
            Side::Right => Side::Left,
        }
    }
}

/// Where exceptional levels on baseline `n` are counted. Interval `n − 1` is
/// the left neighbour, interval `n` the right one.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct AttributionRule {
    /// Side receiving the `Plus` member of a Juddean pair; the `Minus` member
    /// goes to the opposite side.
    pub juddean_plus_side: Side,
    pub nonjuddean_side: Side,
}

impl Default for AttributionRule {
    fn default() -> Self {
        Self { juddean_plus_side: Side::Right, nonjuddean_side: Side::Right }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Clause {
    /// More than two levels in one interval.
    CountBound,
    /// Two levels, but no neighbouring interval is empty.
    EmptyNeighbour,
    /// Two consecutive non-unit counts are equal (see [`alternation_violations`]).
    Alternation,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Violation {
    pub n: i64,
    pub parity: Parity,
    pub count: usize,
    pub reason: Clause,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConjecturePredicateResult {
    pub version: PredicateVersion,
    pub holds: bool,
    pub violations: Vec<Violation>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub attribution: Option<AttributionRule>,
}

type Counts = BTreeMap<Parity, BTreeMap<i64, usize>>;

fn collect_counts(censuses: &[IntervalCensus]) -> Result<Counts> {
    let mut counts: Counts = BTreeMap::new();
    for c in censuses {
        counts.entry(c.parity).or_default().insert(c.n, c.count);
    }
    for (parity, per_n) in &counts {
        let ns: Vec<i64> = per_n.keys().copied().collect();
        if let Some(w) = ns.windows(2).find(|w| w[1] != w[0] + 1) {
            return Err(RabiError::IncompleteCoverage { parity: parity.as_str(), missing: w[0] + 1 });
        }
    }
    Ok(counts)
}

fn evaluate(counts: &Counts) -> Vec<Violation> {
    let mut violations = Vec::new();
    for (&parity, per_n) in counts {
        for (&n, &count) in per_n {
            if count > 2 {
                violations.push(Violation { n, parity, count, reason: Clause::CountBound });
            } else if count == 2 {
                let empty_neighbour = [n - 1, n + 1].iter().any(|m| per_n.get(m).is_some_and(|&c| c == 0));
                if !empty_neighbour {
                    violations.push(Violation { n, parity, count, reason: Clause::EmptyNeighbour });
                }
            }
        }
    }
    violations
}

pub fn predicate_classic(censuses: &[IntervalCensus]) -> Result<ConjecturePredicateResult> {
    let counts = collect_counts(censuses)?;
    let violations = evaluate(&counts);
    Ok(ConjecturePredicateResult {
        version: PredicateVersion::Classic,
        holds: violations.is_empty(),
        violations,
        attribution: None,
    })
}

/// Weaker ordering diagnostic, not part of either predicate: skipping
/// intervals with one level, effective counts 0 and 2 must alternate per
/// parity. Pass no verdicts to check raw counts.
pub fn alternation_violations(
    censuses: &[IntervalCensus],
    verdicts: &[ExceptionalClassification],
    rule: &AttributionRule,
) -> Result<Vec<Violation>> {
    let counts = effective_counts(censuses, verdicts, rule)?;
    let mut violations = Vec::new();
    for (&parity, per_n) in &counts {
        let mut last: Option<usize> = None;
        for (&n, &count) in per_n.iter().filter(|(_, &c)| c != 1) {
            if last == Some(count) {
                violations.push(Violation { n, parity, count, reason: Clause::Alternation });
            }
            last = Some(count);
        }
    }
    Ok(violations)
}

/// Counts after attributing exceptional levels; contributions that fall
/// outside the covered range are dropped.
pub fn effective_counts(
    censuses: &[IntervalCensus],
    verdicts: &[ExceptionalClassification],
    rule: &AttributionRule,
) -> Result<Counts> {
    let mut counts = collect_counts(censuses)?;
    let mut bump = |parity: Parity, n: i64| {
        if let Some(c) = counts.get_mut(&parity).and_then(|m| m.get_mut(&n)) {
            *c += 1;
        }
    };
    for v in verdicts {
        let b = v.n as i64;
        match v.verdict {
            Verdict::NotExceptional => {}
            Verdict::Juddean => {
                bump(Parity::Plus, rule.juddean_plus_side.interval_of(b));
                bump(Parity::Minus, rule.juddean_plus_side.other().interval_of(b));
            }
            Verdict::NonJuddeanPlus => bump(Parity::Plus, rule.nonjuddean_side.interval_of(b)),
            Verdict::NonJuddeanMinus => bump(Parity::Minus, rule.nonjuddean_side.interval_of(b)),
        }
    }
    Ok(counts)
}

pub fn predicate_extended(
    censuses: &[IntervalCensus],
    verdicts: &[ExceptionalClassification],
    rule: &AttributionRule,
) -> Result<ConjecturePredicateResult> {
    let counts = effective_counts(censuses, verdicts, rule)?;
    let violations = evaluate(&counts);
    Ok(ConjecturePredicateResult {
        version: PredicateVersion::Extended,
        holds: violations.is_empty(),
        violations,
        attribution: Some(*rule),
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepConfig {
    pub g_grid: Vec<f64>,
    pub delta_grid: Vec<f64>,
    pub omega: f64,
    pub n_max: u32,
    pub predicate_version: PredicateVersion,
    pub attribution: AttributionRule,
    pub classify_tol: f64,
    pub scan_points: usize,
    pub root_tol: f64,
    pub record_timing: bool,
    /// Worker threads; never affects the report.
    #[serde(skip, default = "default_jobs")]
    pub jobs: usize,
}

fn default_jobs() -> usize {
    1
}

impl SweepConfig {
    pub fn new(g_grid: Vec<f64>, delta_grid: Vec<f64>, n_max: u32) -> Self {
        let scan = ScanConfig::default();
        Self {
            g_grid,
            delta_grid,
            omega: 1.0,
            n_max,
            predicate_version: PredicateVersion::Extended,
            attribution: AttributionRule::default(),
            classify_tol: DEFAULT_CLASSIFY_TOL,
            scan_points: scan.points,
            root_tol: scan.root_tol,
            record_timing: false,
            jobs: 1,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let increasing =
            |v: &[f64]| !v.is_empty() && v.windows(2).all(|w| w[1] > w[0]) && v.iter().all(|x| x.is_finite());
        if !increasing(&self.g_grid) || self.g_grid[0] <= 0.0 {
            return Err(RabiError::InvalidInput("g grid must be non-empty, strictly increasing and > 0".into()));
        }
        if !increasing(&self.delta_grid) {
            return Err(RabiError::InvalidInput("delta grid must be non-empty and strictly increasing".into()));
        }
        if self.n_max == 0 || self.n_max > MAX_BASELINES {
            return Err(RabiError::InvalidInput(format!("n_max = {} outside 1..={MAX_BASELINES}", self.n_max)));
        }
        if self.jobs == 0 {
            return Err(RabiError::InvalidInput("jobs must be at least 1".into()));
        }
        validate(&ModelParams::new(self.omega, 1.0, 0.0))?;
        Ok(())
    }

    fn scan(&self) -> ScanConfig {
        ScanConfig {
            points: self.scan_points,
            root_tol: self.root_tol,
            classify_tol: self.classify_tol,
            ..ScanConfig::default()
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum PointStatus {
    #[serde(rename = "OK")]
    Ok,
    #[serde(rename = "ERRORED")]
    Errored,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PointReport {
    pub g: f64,
    pub delta: f64,
    pub censuses: Vec<IntervalCensus>,
    pub exceptional: Vec<ExceptionalClassification>,
    pub predicate: Option<ConjecturePredicateResult>,
    pub status: PointStatus,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub elapsed_s: Option<f64>,
}

impl PointReport {
    pub fn violates(&self) -> bool {
        self.predicate.as_ref().is_some_and(|p| !p.holds)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepSummary {
    pub total_points: usize,
    pub violating_points: usize,
    pub errored_points: usize,
    pub suspicious_intervals: usize,
    pub max_count: usize,
    pub exceptional_baselines: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub runtime_s: Option<f64>,
}

pub const REPORT_VERSION: &str = "1";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConjectureReport {
    pub config: SweepConfig,
    pub points: Vec<PointReport>,
    pub summary: SweepSummary,
    pub version: String,
}

fn run_point(config: &SweepConfig, g: f64, delta: f64) -> PointReport {
    let start = Instant::now();
    let params = ModelParams::new(config.omega, g, delta);
    let outcome = spectral_scan(&params, config.n_max, &config.scan()).and_then(|(censuses, verdicts)| {
        let predicate = match config.predicate_version {
            PredicateVersion::Classic => predicate_classic(&censuses)?,
            PredicateVersion::Extended => predicate_extended(&censuses, &verdicts, &config.attribution)?,
        };
        Ok((censuses, verdicts, predicate))
    });
    let elapsed_s = config.record_timing.then(|| start.elapsed().as_secs_f64());
    match outcome {
        Ok((censuses, exceptional, predicate)) => PointReport {
            g,
            delta,
            censuses,
            exceptional,
            predicate: Some(predicate),
            status: PointStatus::Ok,
            error: None,
            elapsed_s,
        },
        Err(e) => PointReport {
            g,
            delta,
            censuses: Vec::new(),
            exceptional: Vec::new(),
            predicate: None,
            status: PointStatus::Errored,
            error: Some(e.to_string()),
            elapsed_s,
        },
    }
}

/// Runs every grid point (Δ outer, g inner). Point failures are recorded, not
/// propagated.
pub fn sweep(config: &SweepConfig) -> Result<ConjectureReport> {
    config.validate()?;
    let start = Instant::now();
    let grid: Vec<(f64, f64)> =
        config.delta_grid.iter().flat_map(|&d| config.g_grid.iter().map(move |&g| (g, d))).collect();
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(config.jobs)
        .build()
        .map_err(|e| RabiError::InvalidInput(format!("thread pool: {e}")))?;
    let points: Vec<PointReport> = pool.install(|| grid.par_iter().map(|&(g, d)| run_point(config, g, d)).collect());

    let ok = || points.iter().filter(|p| p.status == PointStatus::Ok);
    let summary = SweepSummary {
        total_points: points.len(),
        violating_points: points.iter().filter(|p| p.violates()).count(),
        errored_points: points.iter().filter(|p| p.status == PointStatus::Errored).count(),
        suspicious_intervals: ok().flat_map(|p| &p.censuses).filter(|c| c.suspicious).count(),
        max_count: ok().flat_map(|p| &p.censuses).map(|c| c.count).max().unwrap_or(0),
        exceptional_baselines: ok()
            .flat_map(|p| &p.exceptional)
            .filter(|v| v.verdict != Verdict::NotExceptional)
            .count(),
        runtime_s: config.record_timing.then(|| start.elapsed().as_secs_f64()),
    };
    Ok(ConjectureReport { config: config.clone(), points, summary, version: REPORT_VERSION.to_string() })
}
