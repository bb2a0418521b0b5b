//! Exceptional eigenvalues: spectral lines sitting exactly on a baseline
//! `x = n`, where `G_±` has a pole instead of a zero.
//!
//! The residue of `G_±` at `x = n` factorizes as `K_n(n) g^n · ρ_±(n)`:
//!
//! * `K_n(n) = 0` removes the pole from both parities at once. This is the
//!   algebraic (Juddean) case, a doubly degenerate level.
//! * `ρ_±(n) = 0` with `K_n(n) ≠ 0` removes it from one parity only. This is
//!   the transcendental (non-Juddean) case, a nondegenerate level.
//!
//! Zeros of either condition are located in `g` at fixed `Δ` by grid scan and
//! bisection, and only accepted after the Fock oracle confirms the level.

use serde::{Deserialize, Serialize};

use crate::error::{RabiError, Result};
use crate::gfunction::{baseline_coefficient, pole_expansion, DEFAULT_EPS, DEFAULT_N_MAX};
use crate::model::{validate, ModelParams, Parity};
use crate::numerics::{bisect, linspace, parabola_vertex, sign_change};
use crate::oracle::{degeneracy_gap, DegeneracyGap};

pub const JUDD_GAP: f64 = 1e-8;
pub const NONJUDD_SAME_GAP: f64 = 1e-7;
pub const NONJUDD_OTHER_GAP: f64 = 1e-3;
/// Minimum distance in `g` between a non-Juddean point and a Judd point.
pub const DISJOINT_WINDOW: f64 = 1e-4;
pub const DEFAULT_GRID: usize = 400;
pub const DEFAULT_G_TOL: f64 = 1e-10;
const ORACLE_TOL: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct JuddPoint {
    pub n: u32,
    pub g_star: f64,
    pub delta: f64,
    pub residual: f64,
    pub oracle_gap: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NonJuddeanPoint {
    pub n: u32,
    pub parity: Parity,
    pub g_star: f64,
    pub delta: f64,
    pub condition_residual: f64,
    pub oracle_gap_same_parity: f64,
    pub oracle_gap_other_parity: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Verdict {
    NotExceptional,
    Juddean,
    NonJuddeanPlus,
    NonJuddeanMinus,
}

impl Verdict {
    pub fn nonjuddean(parity: Parity) -> Self {
        match parity {
            Parity::Plus => Verdict::NonJuddeanPlus,
            Parity::Minus => Verdict::NonJuddeanMinus,
        }
    }

    /// Parities that carry a level on the baseline.
    pub fn parities(self) -> &'static [Parity] {
        match self {
            Verdict::NotExceptional => &[],
            Verdict::Juddean => &Parity::BOTH,
            Verdict::NonJuddeanPlus => &[Parity::Plus],
            Verdict::NonJuddeanMinus => &[Parity::Minus],
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Evidence {
    pub judd_constraint: f64,
    pub condition_plus: Option<f64>,
    pub condition_minus: Option<f64>,
    pub gap_plus: Option<f64>,
    pub gap_minus: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ExceptionalClassification {
    pub n: u32,
    pub verdict: Verdict,
    pub evidence: Evidence,
}

/// Why a sign change or near-zero of a condition was not accepted.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum Rejection {
    /// Local minimum touching zero without a sign change (even multiplicity).
    Tangential,
    /// The oracle does not show the expected level(s) on the baseline.
    OracleGap { plus: f64, minus: f64 },
    /// Too close to a Judd point of the same baseline.
    NearJuddPoint { judd_g: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Candidate {
    pub g: f64,
    pub reason: Rejection,
}

/// Accepted points plus every candidate that failed a check.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Located<T> {
    pub points: Vec<T>,
    pub rejected: Vec<Candidate>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SearchOptions {
    pub omega: f64,
    pub grid_points: usize,
}

impl Default for SearchOptions {
    fn default() -> Self {
        Self { omega: 1.0, grid_points: DEFAULT_GRID }
    }
}

fn require_coupling(params: &ModelParams) -> Result<ModelParams> {
    let p = validate(params)?.params;
    if p.g == 0.0 {
        return Err(RabiError::ZeroCoupling);
    }
    Ok(p)
}

/// `Δ · K_n(n) g^n` (ω = 1 units). Its zeros in `g` are the Juddean
/// degeneracies on baseline `n`; the `Δ` factor reflects that the pole
/// strength vanishes identically in the decoupled-qubit case.
pub fn judd_constraint(n: u32, params: &ModelParams) -> Result<f64> {
    let p = require_coupling(params)?;
    Ok(p.delta_reduced() * baseline_coefficient(n, &p)?)
}

/// Residue of `G_±` at `x = n` divided by `K_n(n) g^n`. Vanishes exactly when
/// the parity sector has a non-Juddean level on baseline `n`.
pub fn nonjuddean_condition(n: u32, parity: Parity, params: &ModelParams) -> Result<f64> {
    require_coupling(params)?;
    if params.delta == 0.0 {
        return Err(RabiError::DegenerateCase(
            "Δ = 0: every baseline is doubly degenerate, non-Juddean points are undefined",
        ));
    }
    Ok(pole_expansion(n, parity, params, DEFAULT_EPS, DEFAULT_N_MAX)?.reduced_residue)
}

fn oracle_gaps(n: u32, params: &ModelParams) -> Result<DegeneracyGap> {
    degeneracy_gap(params, params.baseline_energy(n as i64), ORACLE_TOL * params.omega)
}

/// Scan, bracket and refine the zeros of `f` on `[lo, hi]`. Returns refined
/// roots and tangential touch points.
fn scan_roots<F>(f: F, lo: f64, hi: f64, points: usize, tol: f64) -> Result<(Vec<f64>, Vec<f64>)>
where
    F: Fn(f64) -> Result<f64>,
{
    let grid = linspace(lo, hi, points.max(3));
    let values = grid.iter().map(|&g| f(g)).collect::<Result<Vec<_>>>()?;
    let mut roots = Vec::new();
    let mut touches = Vec::new();
    for i in 0..grid.len() - 1 {
        if values[i] == 0.0 {
            roots.push(grid[i]);
        } else if sign_change(values[i], values[i + 1]) {
            let (a, b) = bisect(&f, grid[i], grid[i + 1], tol)?;
            roots.push(0.5 * (a + b));
        }
    }
    if *values.last().unwrap() == 0.0 {
        roots.push(*grid.last().unwrap());
    }

    let mut mags: Vec<f64> = values.iter().map(|v| v.abs()).collect();
    mags.sort_by(|a, b| a.total_cmp(b));
    let threshold = 1e-3 * mags[mags.len() / 2];
    for i in 1..grid.len() - 1 {
        let (a, b, c) = (values[i - 1], values[i], values[i + 1]);
        let local_min = b.abs() < a.abs() && b.abs() <= c.abs();
        if !local_min || b.abs() >= threshold || sign_change(a, b) || sign_change(b, c) {
            continue;
        }
        let x = [grid[i - 1], grid[i], grid[i + 1]];
        match parabola_vertex(x, [a, b, c]).map(|v| f(v).map(|fv| (v, fv))) {
            Some(Ok((v, fv))) if sign_change(fv, b) => {
                for (l, r) in [(x[0], v), (v, x[2])] {
                    let (p, q) = bisect(&f, l, r, tol)?;
                    roots.push(0.5 * (p + q));
                }
            }
            Some(Err(e)) => return Err(e),
            Some(Ok((v, _))) => touches.push(v),
            None => touches.push(x[1]),
        }
    }
    roots.sort_by(|a, b| a.total_cmp(b));
    Ok((roots, touches))
}

fn check_range(g_range: (f64, f64), tol: f64) -> Result<()> {
    let (lo, hi) = g_range;
    if !(lo > 0.0 && hi > lo && hi.is_finite() && tol > 0.0) {
        return Err(RabiError::InvalidInput(format!(
            "g range ({lo}, {hi}] with tol {tol} is not a valid search interval"
        )));
    }
    Ok(())
}

pub fn find_judd_points(
    n: u32,
    delta: f64,
    g_range: (f64, f64),
    tol: f64,
    opts: &SearchOptions,
) -> Result<Located<JuddPoint>> {
    check_range(g_range, tol)?;
    if delta == 0.0 {
        return Err(RabiError::DegenerateCase("Δ = 0 is degenerate at every coupling; Judd points are not isolated"));
    }
    let at = |g: f64| ModelParams::new(opts.omega, g, delta);
    let (roots, touches) = scan_roots(|g| judd_constraint(n, &at(g)), g_range.0, g_range.1, opts.grid_points, tol)?;

    let mut located = Located { points: Vec::new(), rejected: Vec::new() };
    for g in touches {
        located.rejected.push(Candidate { g, reason: Rejection::Tangential });
    }
    for g_star in roots {
        let params = at(g_star);
        let gap = oracle_gaps(n, &params)?;
        if gap.plus.max(gap.minus) <= JUDD_GAP * opts.omega {
            located.points.push(JuddPoint {
                n,
                g_star,
                delta,
                residual: judd_constraint(n, &params)?.abs(),
                oracle_gap: gap.plus.max(gap.minus),
            });
        } else {
            located
                .rejected
                .push(Candidate { g: g_star, reason: Rejection::OracleGap { plus: gap.plus, minus: gap.minus } });
        }
    }
    Ok(located)
}

pub fn find_nonjuddean_points(
    n: u32,
    parity: Parity,
    delta: f64,
    g_range: (f64, f64),
    tol: f64,
    opts: &SearchOptions,
) -> Result<Located<NonJuddeanPoint>> {
    check_range(g_range, tol)?;
    if delta == 0.0 {
        return Err(RabiError::DegenerateCase(
            "Δ = 0: every baseline is doubly degenerate, non-Juddean points are undefined",
        ));
    }
    let at = |g: f64| ModelParams::new(opts.omega, g, delta);
    let (roots, touches) =
        scan_roots(|g| nonjuddean_condition(n, parity, &at(g)), g_range.0, g_range.1, opts.grid_points, tol)?;
    let judd: Vec<f64> = find_judd_points(n, delta, g_range, tol, opts)?.points.iter().map(|j| j.g_star).collect();

    let mut located = Located { points: Vec::new(), rejected: Vec::new() };
    for g in touches {
        located.rejected.push(Candidate { g, reason: Rejection::Tangential });
    }
    for g_star in roots {
        if let Some(&judd_g) = judd.iter().find(|&&j| (j - g_star).abs() < DISJOINT_WINDOW) {
            located.rejected.push(Candidate { g: g_star, reason: Rejection::NearJuddPoint { judd_g } });
            continue;
        }
        let params = at(g_star);
        let gap = oracle_gaps(n, &params)?;
        let (same, other) = (gap.get(parity), gap.get(parity.flipped()));
        if same <= NONJUDD_SAME_GAP * opts.omega && other >= NONJUDD_OTHER_GAP * opts.omega {
            located.points.push(NonJuddeanPoint {
                n,
                parity,
                g_star,
                delta,
                condition_residual: nonjuddean_condition(n, parity, &params)?.abs(),
                oracle_gap_same_parity: same,
                oracle_gap_other_parity: other,
            });
        } else {
            located
                .rejected
                .push(Candidate { g: g_star, reason: Rejection::OracleGap { plus: gap.plus, minus: gap.minus } });
        }
    }
    Ok(located)
}

/// Default tolerance on condition values for a tentative exceptional verdict.
pub const DEFAULT_CLASSIFY_TOL: f64 = 1e-6;

/// Classifies baseline `n`. The oracle is consulted only when one of the
/// conditions is within `tol` of zero.
pub fn classify_exceptional(n: u32, params: &ModelParams, tol: f64) -> Result<ExceptionalClassification> {
    let judd = judd_constraint(n, params)?;
    let (cond_plus, cond_minus) = if params.delta == 0.0 {
        (None, None)
    } else {
        (Some(nonjuddean_condition(n, Parity::Plus, params)?), Some(nonjuddean_condition(n, Parity::Minus, params)?))
    };
    let mut evidence = Evidence {
        judd_constraint: judd,
        condition_plus: cond_plus,
        condition_minus: cond_minus,
        gap_plus: None,
        gap_minus: None,
    };
    let small = |c: Option<f64>| c.is_some_and(|v| v.abs() <= tol);
    let tentative_judd = judd.abs() <= tol;
    let tentative_plus = small(cond_plus);
    let tentative_minus = small(cond_minus);
    if !(tentative_judd || tentative_plus || tentative_minus) {
        return Ok(ExceptionalClassification { n, verdict: Verdict::NotExceptional, evidence });
    }

    let gap = oracle_gaps(n, params)?;
    evidence.gap_plus = Some(gap.plus);
    evidence.gap_minus = Some(gap.minus);
    let w = params.omega;
    let verdict = if tentative_judd && gap.plus <= JUDD_GAP * w && gap.minus <= JUDD_GAP * w {
        Verdict::Juddean
    } else if tentative_plus && gap.plus <= NONJUDD_SAME_GAP * w && gap.minus >= NONJUDD_OTHER_GAP * w {
        Verdict::NonJuddeanPlus
    } else if tentative_minus && gap.minus <= NONJUDD_SAME_GAP * w && gap.plus >= NONJUDD_OTHER_GAP * w {
        Verdict::NonJuddeanMinus
    } else {
        Verdict::NotExceptional
    };
    Ok(ExceptionalClassification { n, verdict, evidence })
}
