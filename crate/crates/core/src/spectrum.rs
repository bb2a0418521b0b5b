//! Full low-lying spectrum from G-function root finding.
//!
//! Regular levels are zeros of `G_±` strictly inside a baseline interval
//! `(n, n+1)`; exceptional levels sit on a baseline and come from
//! [`classify_exceptional`]. Interval `n = −1` is the stretch
//! `[−|Δ|/ω, 0)` below the lowest baseline, which holds the ground state
//! whenever `g, Δ ≠ 0`.

use serde::{Deserialize, Serialize};

use crate::error::{RabiError, Result};
use crate::exceptional::{classify_exceptional, ExceptionalClassification, Verdict, DEFAULT_CLASSIFY_TOL};
use crate::gfunction::{g_value, POLE_GUARD};
use crate::model::{energy_from_x, validate, ModelParams, Parity, ScaledEnergy};
use crate::numerics::{bisect, linspace, parabola_vertex, sign_change};
use crate::oracle::{oracle_spectrum, BASELINE_TOL};

pub const MAX_BASELINES: u32 = 30;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Classification {
    Regular,
    ExceptionalJuddean,
    ExceptionalNonJuddean,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Source {
    GFunction,
    Oracle,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EigenvalueRecord {
    pub energy: f64,
    pub x: ScaledEnergy,
    pub parity: Parity,
    pub classification: Classification,
    pub interval_index: i64,
    pub source: Source,
    pub uncertainty: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScanConfig {
    /// Uniform grid points per interval.
    pub points: usize,
    /// Endpoint margin of the uniform grid.
    pub guard: f64,
    /// Log-spaced points between `guard` and `2·POLE_GUARD` at each pole end.
    pub near_pole_points: usize,
    pub tangency_factor: f64,
    pub refine_factor: usize,
    pub root_tol: f64,
    /// Classify the interval's baselines inside the census call.
    pub classify_endpoints: bool,
    pub classify_tol: f64,
}

impl Default for ScanConfig {
    fn default() -> Self {
        Self {
            points: 200,
            guard: 1e-4,
            near_pole_points: 12,
            tangency_factor: 1e-3,
            refine_factor: 10,
            root_tol: 1e-12,
            classify_endpoints: false,
            classify_tol: DEFAULT_CLASSIFY_TOL,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IntervalCensus {
    pub n: i64,
    pub parity: Parity,
    pub count: usize,
    pub zeros: Vec<f64>,
    pub suspicious: bool,
    #[serde(skip)]
    pub endpoint_exceptional_left: Option<ExceptionalClassification>,
    #[serde(skip)]
    pub endpoint_exceptional_right: Option<ExceptionalClassification>,
}

/// Bounds of interval `n` in `x`.
pub fn interval_bounds(n: i64, params: &ModelParams) -> (f64, f64) {
    if n < 0 {
        let d = params.delta_reduced().abs();
        (-d - 1e-3, 0.0)
    } else {
        (n as f64, n as f64 + 1.0)
    }
}

/// Scan points of interval `n`: uniform interior plus log-spaced approaches
/// to each pole end.
fn census_grid(n: i64, params: &ModelParams, scan: &ScanConfig) -> (Vec<f64>, usize, usize) {
    let (lo, hi) = interval_bounds(n, params);
    let inner_lo = if n < 0 { lo } else { lo + scan.guard };
    let inner_hi = hi - scan.guard;
    let uniform = linspace(inner_lo, inner_hi, scan.points);

    let k = scan.near_pole_points;
    let approach = |end: f64, dir: f64| -> Vec<f64> {
        let ratio = (2.0 * POLE_GUARD / scan.guard).ln();
        (1..=k).map(|i| end + dir * scan.guard * (ratio * i as f64 / k as f64).exp()).collect()
    };
    let mut left = if n < 0 { Vec::new() } else { approach(lo, 1.0) };
    left.reverse();
    let right = approach(hi, -1.0);
    let first_uniform = left.len();
    let mut grid = left;
    grid.extend(uniform);
    let last_uniform = grid.len();
    grid.extend(right);
    (grid, first_uniform, last_uniform)
}

pub fn count_zeros_in_interval(
    parity: Parity,
    n: i64,
    params: &ModelParams,
    scan: &ScanConfig,
) -> Result<IntervalCensus> {
    if n < -1 || scan.points < 3 || scan.guard.is_nan() || scan.guard <= 2.0 * POLE_GUARD {
        return Err(RabiError::InvalidInput(format!("census n = {n} with {scan:?}")));
    }
    let p = validate(params)?.params;
    if p.g == 0.0 {
        return Err(RabiError::ZeroCoupling);
    }
    let gx = |x: f64| g_value(parity, x, params);
    let (grid, u0, u1) = census_grid(n, params, scan);
    let values = grid.iter().map(|&x| gx(x)).collect::<Result<Vec<_>>>()?;

    let mut zeros = Vec::new();
    for i in 0..grid.len() - 1 {
        if sign_change(values[i], values[i + 1]) {
            let (a, b) = bisect(gx, grid[i], grid[i + 1], scan.root_tol)?;
            zeros.push(0.5 * (a + b));
        } else if values[i] == 0.0 {
            zeros.push(grid[i]);
        }
    }

    // Near-tangencies on the uniform part.
    let mut mags: Vec<f64> = values[u0..u1].iter().map(|v| v.abs()).collect();
    mags.sort_by(|a, b| a.total_cmp(b));
    let threshold = scan.tangency_factor * mags[mags.len() / 2];
    let mut suspicious = false;
    for i in (u0 + 1)..(u1 - 1) {
        let (a, b, c) = (values[i - 1], values[i], values[i + 1]);
        let local_min = b.abs() < a.abs() && b.abs() <= c.abs();
        if !local_min || b.abs() >= threshold || sign_change(a, b) || sign_change(b, c) {
            continue;
        }
        let x = [grid[i - 1], grid[i], grid[i + 1]];
        if let Some(v) = parabola_vertex(x, [a, b, c]) {
            let fv = gx(v)?;
            if sign_change(fv, b) {
                for (l, r) in [(x[0], v), (v, x[2])] {
                    let (p, q) = bisect(gx, l, r, scan.root_tol)?;
                    zeros.push(0.5 * (p + q));
                }
                continue;
            }
        }
        let fine = linspace(x[0], x[2], 2 * scan.refine_factor + 1);
        let fv = fine.iter().map(|&t| gx(t)).collect::<Result<Vec<_>>>()?;
        let before = zeros.len();
        for j in 0..fine.len() - 1 {
            if sign_change(fv[j], fv[j + 1]) {
                let (p, q) = bisect(gx, fine[j], fine[j + 1], scan.root_tol)?;
                zeros.push(0.5 * (p + q));
            }
        }
        if zeros.len() == before {
            suspicious = true;
        }
    }
    zeros.sort_by(|a, b| a.total_cmp(b));
    zeros.dedup_by(|a, b| (*a - *b).abs() <= scan.root_tol);

    let (endpoint_exceptional_left, endpoint_exceptional_right) = if scan.classify_endpoints {
        let left = if n >= 0 { Some(classify_exceptional(n as u32, params, scan.classify_tol)?) } else { None };
        let right = Some(classify_exceptional((n + 1) as u32, params, scan.classify_tol)?);
        (left, right)
    } else {
        (None, None)
    };
    Ok(IntervalCensus {
        n,
        parity,
        count: zeros.len(),
        zeros,
        suspicious,
        endpoint_exceptional_left,
        endpoint_exceptional_right,
    })
}

fn record_order(a: &EigenvalueRecord, b: &EigenvalueRecord) -> std::cmp::Ordering {
    a.energy.total_cmp(&b.energy).then(a.parity.cmp(&b.parity))
}

/// Censuses for `n = −1..n_max−1` in both parities and classifications of
/// baselines `0..n_max−1`.
pub fn spectral_scan(
    params: &ModelParams,
    n_max: u32,
    scan: &ScanConfig,
) -> Result<(Vec<IntervalCensus>, Vec<ExceptionalClassification>)> {
    let mut censuses = Vec::new();
    for parity in Parity::BOTH {
        for n in -1..n_max as i64 {
            censuses.push(count_zeros_in_interval(parity, n, params, scan)?);
        }
    }
    let verdicts =
        (0..n_max).map(|n| classify_exceptional(n, params, scan.classify_tol)).collect::<Result<Vec<_>>>()?;
    Ok((censuses, verdicts))
}

fn check_n_max(n_max: u32) -> Result<()> {
    if n_max == 0 || n_max > MAX_BASELINES {
        return Err(RabiError::InvalidInput(format!("n_max = {n_max} outside 1..={MAX_BASELINES}")));
    }
    Ok(())
}

pub fn solve_spectrum(params: &ModelParams, n_max: u32) -> Result<Vec<EigenvalueRecord>> {
    solve_spectrum_with(params, n_max, &ScanConfig::default())
}

pub fn solve_spectrum_with(params: &ModelParams, n_max: u32, scan: &ScanConfig) -> Result<Vec<EigenvalueRecord>> {
    check_n_max(n_max)?;
    let p = validate(params)?.params;
    let ceiling = params.baseline_energy(n_max as i64);
    if p.g == 0.0 {
        let oracle = oracle_spectrum(params, ceiling - BASELINE_TOL * params.omega, 1e-12)?;
        return Ok(oracle.records);
    }

    let (censuses, verdicts) = spectral_scan(params, n_max, scan)?;
    let mut records = Vec::new();
    for c in &censuses {
        for &x in &c.zeros {
            records.push(EigenvalueRecord {
                energy: energy_from_x(ScaledEnergy(x), params),
                x: ScaledEnergy(x),
                parity: c.parity,
                classification: Classification::Regular,
                interval_index: c.n,
                source: Source::GFunction,
                uncertainty: scan.root_tol * params.omega,
            });
        }
    }
    for v in &verdicts {
        let classification = match v.verdict {
            Verdict::NotExceptional => continue,
            Verdict::Juddean => Classification::ExceptionalJuddean,
            Verdict::NonJuddeanPlus | Verdict::NonJuddeanMinus => Classification::ExceptionalNonJuddean,
        };
        let x = ScaledEnergy(v.n as f64);
        for &parity in v.verdict.parities() {
            let gap = v.evidence.gap_plus.into_iter().chain(v.evidence.gap_minus).fold(0.0, f64::max);
            records.push(EigenvalueRecord {
                energy: energy_from_x(x, params),
                x,
                parity,
                classification,
                interval_index: v.n as i64,
                source: Source::GFunction,
                uncertainty: gap.max(f64::EPSILON),
            });
        }
    }
    records.sort_by(record_order);
    Ok(records)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MatchedPair {
    pub parity: Parity,
    pub gfunction: f64,
    pub oracle: f64,
    pub deviation: f64,
    pub classification: Classification,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DiffReport {
    pub pass: bool,
    pub tol: f64,
    pub max_deviation: f64,
    pub matches: Vec<MatchedPair>,
    /// Matched pairs whose deviation exceeds `tol`.
    pub mismatches: usize,
    pub unmatched_gfunction: Vec<EigenvalueRecord>,
    pub unmatched_oracle: Vec<EigenvalueRecord>,
}

/// Records farther apart than this are not paired at all.
pub const MATCH_WINDOW: f64 = 1e-3;

/// Pairs records of equal parity by energy order.
pub fn crosscheck_records(gf: &[EigenvalueRecord], oracle: &[EigenvalueRecord], tol: f64, omega: f64) -> DiffReport {
    let mut report = DiffReport {
        pass: false,
        tol,
        max_deviation: 0.0,
        matches: Vec::new(),
        mismatches: 0,
        unmatched_gfunction: Vec::new(),
        unmatched_oracle: Vec::new(),
    };
    for parity in Parity::BOTH {
        let mut a: Vec<&EigenvalueRecord> = gf.iter().filter(|r| r.parity == parity).collect();
        let mut b: Vec<&EigenvalueRecord> = oracle.iter().filter(|r| r.parity == parity).collect();
        a.sort_by(|x, y| record_order(x, y));
        b.sort_by(|x, y| record_order(x, y));
        let (mut i, mut j) = (0, 0);
        while i < a.len() && j < b.len() {
            let d = a[i].energy - b[j].energy;
            if d.abs() <= MATCH_WINDOW * omega {
                report.max_deviation = report.max_deviation.max(d.abs());
                if d.abs() > tol {
                    report.mismatches += 1;
                }
                report.matches.push(MatchedPair {
                    parity,
                    gfunction: a[i].energy,
                    oracle: b[j].energy,
                    deviation: d.abs(),
                    classification: a[i].classification,
                });
                i += 1;
                j += 1;
            } else if d < 0.0 {
                report.unmatched_gfunction.push(*a[i]);
                i += 1;
            } else {
                report.unmatched_oracle.push(*b[j]);
                j += 1;
            }
        }
        report.unmatched_gfunction.extend(a[i..].iter().map(|r| **r));
        report.unmatched_oracle.extend(b[j..].iter().map(|r| **r));
    }
    report.pass =
        report.unmatched_gfunction.is_empty() && report.unmatched_oracle.is_empty() && report.max_deviation <= tol;
    report
}

/// Compares [`solve_spectrum`] against the oracle below baseline `n_max`.
pub fn crosscheck(params: &ModelParams, n_max: u32, tol: f64) -> Result<DiffReport> {
    let gf = solve_spectrum(params, n_max)?;
    let ceiling = params.baseline_energy(n_max as i64) - BASELINE_TOL * params.omega;
    let oracle = oracle_spectrum(params, ceiling, 1e-11 * params.omega)?;
    Ok(crosscheck_records(&gf, &oracle.records, tol, params.omega))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SplittingRow {
    pub g: f64,
    /// `s_n = |E_n^+ − E_n^−|` for `n = 0..n_max−1`; empty when the oracle failed.
    pub splittings: Vec<f64>,
    pub error: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SplittingTable {
    pub delta: f64,
    pub rows: Vec<SplittingRow>,
    /// `κ` in the least-squares fit `ln s_0(g) ≈ c − κ g²`.
    pub decay_rate: Option<f64>,
    pub fit_intercept: Option<f64>,
}

/// Parity splittings of the lowest `n_max` level pairs at strong coupling.
pub fn asymptotic_check(delta: f64, g_values: &[f64], n_max: u32) -> Result<SplittingTable> {
    check_n_max(n_max)?;
    if g_values.is_empty() || g_values.windows(2).any(|w| w[1] <= w[0]) || g_values[0] < 1.5 {
        return Err(RabiError::InvalidInput("g values must be ascending and ≥ 1.5".into()));
    }
    if !delta.is_finite() || delta < 0.0 {
        return Err(RabiError::InvalidParameter { field: "delta", value: delta });
    }
    let mut rows = Vec::new();
    for &g in g_values {
        let params = ModelParams::unit(g, delta);
        let ceiling = params.baseline_energy(n_max as i64 + 2);
        match oracle_spectrum(&params, ceiling, 1e-13) {
            Ok(spec) => {
                let level =
                    |p: Parity, k: usize| spec.records.iter().filter(|r| r.parity == p).nth(k).map(|r| r.energy);
                let splittings = (0..n_max as usize)
                    .map_while(|k| Some((level(Parity::Plus, k)? - level(Parity::Minus, k)?).abs()))
                    .collect();
                rows.push(SplittingRow { g, splittings, error: None });
            }
            Err(e) => rows.push(SplittingRow { g, splittings: Vec::new(), error: Some(e.to_string()) }),
        }
    }

    let pts: Vec<(f64, f64)> =
        rows.iter().filter_map(|r| r.splittings.first().filter(|&&s| s > 0.0).map(|&s| (r.g * r.g, s.ln()))).collect();
    let (decay_rate, fit_intercept) = if pts.len() >= 2 {
        let k = pts.len() as f64;
        let mx = pts.iter().map(|p| p.0).sum::<f64>() / k;
        let my = pts.iter().map(|p| p.1).sum::<f64>() / k;
        let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
        let sxx: f64 = pts.iter().map(|p| (p.0 - mx) * (p.0 - mx)).sum();
        let slope = sxy / sxx;
        (Some(-slope), Some(my - slope * mx))
    } else {
        (None, None)
    };
    Ok(SplittingTable { delta, rows, decay_rate, fit_intercept })
}

#[allow(dead_code)]
fn _assert_send_sync() {
    fn is<T: Send + Sync>() {}
    is::<IntervalCensus>();
    is::<EigenvalueRecord>();
}
