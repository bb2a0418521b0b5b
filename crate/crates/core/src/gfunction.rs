//! Parity-resolved G-function of the Rabi model.
//!
//! With `x = E/ω + (g/ω)²` and everything in ω = 1 units,
//!
//! ```text
//! f_n(x) = 2g + (n − x + Δ²/(x − n)) / (2g)
//! K_0 = 1,  K_1 = f_0,  n K_n = f_{n−1} K_{n−1} − K_{n−2}
//! G_±(x) = Σ_n K_n(x) (1 ∓ Δ/(x − n)) g^n
//! ```
//!
//! `G_+` vanishes exactly on the spectrum of the `Plus` sector. The series is
//! accumulated in the scaled variables `t_n = K_n g^n`, which keeps every
//! quantity finite for large `n` and strong coupling.
//!
//! Every integer `x = n ≥ 0` is a simple pole. Near it the coefficients split
//! into `t_m = a_m/(x − n) + b_m + O(x − n)` for `m > n`; [`g_eval_regularized`]
//! runs the recurrence on `(a_m, b_m)` directly, so the residue and the finite
//! part come out of two extra accumulators instead of a numerical limit.

use serde::{Deserialize, Serialize};

use crate::error::{RabiError, Result};
use crate::model::{validate, ModelParams, Parity, ScaledEnergy};
use crate::numerics::{try_central_difference, CompensatedSum};

/// Closest admissible distance to a pole for direct evaluation.
pub const POLE_GUARD: f64 = 1e-6;
pub const DEFAULT_EPS: f64 = 1e-13;
pub const DEFAULT_N_MAX: usize = 2000;
/// Consecutive small terms required before the series is cut.
const STOP_WINDOW: usize = 5;

#[derive(Debug, Clone, PartialEq)]
pub struct SeriesCoefficients {
    pub x: ScaledEnergy,
    /// `K_0 .. K_{n_used−1}`.
    pub coeffs: Vec<f64>,
    pub n_used: usize,
    pub converged: bool,
    pub tail_estimate: f64,
    /// `Σ|K_n g^n|` over the retained terms; the stop rule is relative to it.
    pub abs_mass: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GValue {
    pub x: ScaledEnergy,
    pub parity: Parity,
    pub value: f64,
    pub n_used: usize,
    pub error_estimate: f64,
    pub pole_distance: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RegularizedG {
    pub n: u32,
    pub parity: Parity,
    /// Coefficient of `1/(x − n)` in `G_±` near `x = n`.
    pub residue: f64,
    /// `lim_{x→n} [G_±(x) − residue/(x − n)]`.
    pub finite_part: f64,
    pub residue_error: f64,
    pub finite_error: f64,
    pub n_used: usize,
}

/// Reduced, sign-normalized inputs for the series kernels.
#[derive(Debug, Clone, Copy)]
struct Kernel {
    g: f64,
    delta: f64,
    /// `+1` for the `G_+` weight `1 − Δ/(x−n)`, `−1` for `G_−`.
    sigma: f64,
}

impl Kernel {
    fn new(params: &ModelParams, parity: Parity) -> Result<Self> {
        let p = validate(params)?.params;
        let g = p.g_reduced();
        if g == 0.0 {
            return Err(RabiError::ZeroCoupling);
        }
        // G_±(−Δ) == G_∓(Δ): fold the sign of Δ into the parity.
        let parity = if params.delta < 0.0 { parity.flipped() } else { parity };
        Ok(Self { g, delta: p.delta_reduced(), sigma: parity.sign() })
    }

    fn f(&self, m: f64, x: f64) -> f64 {
        2.0 * self.g + (m - x + self.delta * self.delta / (x - m)) / (2.0 * self.g)
    }

    /// `∂f_m/∂x`.
    fn df(&self, m: f64, x: f64) -> f64 {
        let d = x - m;
        (-1.0 - self.delta * self.delta / (d * d)) / (2.0 * self.g)
    }

    fn weight(&self, m: f64, x: f64) -> f64 {
        1.0 - self.sigma * self.delta / (x - m)
    }
}

/// Stop-rule bookkeeping shared by every series in this module.
#[derive(Debug, Clone, Copy)]
struct StopRule {
    eps: f64,
    window: usize,
    max_ratio: f64,
    last: f64,
}

impl StopRule {
    fn new(eps: f64) -> Self {
        Self { eps, window: 0, max_ratio: 0.0, last: f64::NAN }
    }

    /// Records `|term|` against the running mass; returns whether the window
    /// of small terms is full.
    fn push(&mut self, term: f64, mass: f64) -> bool {
        let t = term.abs();
        if t <= self.eps * mass {
            if self.window > 0 && self.last > 0.0 {
                self.max_ratio = self.max_ratio.max(t / self.last);
            }
            self.window += 1;
        } else {
            self.window = 0;
            self.max_ratio = 0.0;
        }
        self.last = t;
        self.window >= STOP_WINDOW
    }

    /// Geometric bound on the neglected tail.
    fn tail(&self) -> f64 {
        let r = self.max_ratio;
        if r < 0.9 {
            self.last * r / (1.0 - r)
        } else {
            10.0 * self.last
        }
    }
}

fn min_terms(x: f64) -> usize {
    (x.max(0.0).ceil() as usize) + 2
}

/// `K_0..K_N` at `x` by the forward recurrence, with the adaptive stop.
pub fn recurrence_coeffs(x: ScaledEnergy, params: &ModelParams, eps: f64, n_max: usize) -> Result<SeriesCoefficients> {
    let k = Kernel::new(params, Parity::Plus)?;
    let xv = x.value();
    let g = k.g;
    let mut coeffs = Vec::new();
    let mut mass = 0.0;
    let mut stop = StopRule::new(eps);
    let (mut t_prev2, mut t_prev) = (0.0, 0.0);
    let mut converged = false;
    for n in 0..n_max {
        let t = if n == 0 {
            1.0
        } else {
            let m = n as f64;
            (g * k.f(m - 1.0, xv) * t_prev - g * g * t_prev2) / m
        };
        coeffs.push(t / g.powi(n as i32));
        mass += t.abs();
        t_prev2 = t_prev;
        t_prev = t;
        if stop.push(t, mass) && n + 1 >= min_terms(xv) {
            converged = true;
            break;
        }
    }
    if !converged {
        return Err(RabiError::NonConvergence { n_max });
    }
    Ok(SeriesCoefficients { x, n_used: coeffs.len(), coeffs, converged, tail_estimate: stop.tail(), abs_mass: mass })
}

/// `G_±(x)` with truncation and rounding error estimate.
pub fn g_eval(parity: Parity, x: ScaledEnergy, params: &ModelParams, eps: f64) -> Result<GValue> {
    g_eval_capped(parity, x, params, eps, DEFAULT_N_MAX)
}

pub fn g_eval_capped(parity: Parity, x: ScaledEnergy, params: &ModelParams, eps: f64, n_max: usize) -> Result<GValue> {
    let (pole_distance, nearest_pole) = x.pole_distance();
    if pole_distance <= POLE_GUARD {
        return Err(RabiError::PoleProximity { x: x.value(), nearest_pole });
    }
    let k = Kernel::new(params, parity)?;
    let xv = x.value();
    let g = k.g;
    let mut sum = CompensatedSum::new();
    let mut stop = StopRule::new(eps);
    let (mut t_prev2, mut t_prev) = (0.0, 0.0);
    for n in 0..n_max {
        let m = n as f64;
        let t = if n == 0 { 1.0 } else { (g * k.f(m - 1.0, xv) * t_prev - g * g * t_prev2) / m };
        let term = t * k.weight(m, xv);
        sum.add(term);
        t_prev2 = t_prev;
        t_prev = t;
        if stop.push(term, sum.abs_mass()) && n + 1 >= min_terms(xv) {
            let rounding = 8.0 * f64::EPSILON * sum.abs_mass();
            return Ok(GValue {
                x,
                parity,
                value: sum.value(),
                n_used: n + 1,
                error_estimate: stop.tail() + rounding,
                pole_distance,
            });
        }
    }
    Err(RabiError::NonConvergence { n_max })
}

/// Plain value of `G_±(x)` at the default precision.
pub fn g_value(parity: Parity, x: f64, params: &ModelParams) -> Result<f64> {
    Ok(g_eval(parity, ScaledEnergy(x), params, DEFAULT_EPS)?.value)
}

/// Finite-difference step used by [`g_derivative`].
pub fn derivative_step(x: f64) -> f64 {
    1e-6f64.max(1e-6 * x.abs())
}

/// `∂G_±/∂x` by central difference. Only meant for multiplicity heuristics.
pub fn g_derivative(parity: Parity, x: ScaledEnergy, params: &ModelParams) -> Result<f64> {
    let h = derivative_step(x.value());
    let (d, nearest_pole) = x.pole_distance();
    if d <= POLE_GUARD + h {
        return Err(RabiError::PoleProximity { x: x.value(), nearest_pole });
    }
    try_central_difference(|t| g_value(parity, t, params), x.value(), h)
}

/// `K_n(x = n) g^n`, the coefficient whose vanishing removes the pole of both
/// `G_+` and `G_−` at baseline `n`.
pub(crate) fn baseline_coefficient(n: u32, params: &ModelParams) -> Result<f64> {
    let k = Kernel::new(params, Parity::Plus)?;
    let (g, xn) = (k.g, n as f64);
    let (mut t2, mut t1) = (0.0, 1.0);
    for m in 1..=n {
        let mf = m as f64;
        let t = (g * k.f(mf - 1.0, xn) * t1 - g * g * t2) / mf;
        (t2, t1) = (t1, t);
    }
    Ok(t1)
}

/// Pole data of `G_±` at `x = n`, computed from the split recurrence.
#[derive(Debug, Clone, Copy)]
pub(crate) struct PoleExpansion {
    /// `residue / (K_n(n) g^n)`, continuous through zeros of `t_at_pole`.
    pub reduced_residue: f64,
    pub residue: f64,
    pub finite_part: f64,
    pub residue_error: f64,
    pub finite_error: f64,
    pub n_used: usize,
}

pub(crate) fn pole_expansion(
    n: u32,
    parity: Parity,
    params: &ModelParams,
    eps: f64,
    n_max: usize,
) -> Result<PoleExpansion> {
    let k = Kernel::new(params, parity)?;
    let g = k.g;
    let g2 = g * g;
    let d2 = k.delta * k.delta;
    let xn = n as f64;

    // Regular part m ≤ n: values and x-derivatives of t_m at x = n.
    let mut finite = CompensatedSum::new();
    let (mut t2, mut t1, mut dt2, mut dt1) = (0.0, 1.0, 0.0, 0.0);
    for m in 1..=n {
        let mf = m as f64;
        let w = k.weight(mf - 1.0, xn);
        finite.add(t1 * w);
        let f = k.f(mf - 1.0, xn);
        let df = k.df(mf - 1.0, xn);
        let t = (g * f * t1 - g2 * t2) / mf;
        let dt = (g * df * t1 + g * f * dt1 - g2 * dt2) / mf;
        (t2, t1, dt2, dt1) = (t1, t, dt1, dt);
    }
    let (t_n, t_nm1, dt_n) = (t1, t2, dt1);
    finite.add(t_n - k.sigma * k.delta * dt_n);

    // Pole-carrying part m > n. `ra` is the residue coefficient divided by t_n.
    let mut reduced = CompensatedSum::new();
    reduced.add(-k.sigma * k.delta);
    let mut stop_r = StopRule::new(eps);
    let mut stop_f = StopRule::new(eps);

    let first = n + 1;
    let mut ra_prev2 = 0.0;
    let mut ra_prev = d2 / (2.0 * first as f64);
    let mut b_prev2 = t_n;
    let mut b_prev = (0.5 * d2 * dt_n + 2.0 * g2 * t_n - g2 * t_nm1) / first as f64;

    let mut m = first;
    let mut used = first as usize;
    loop {
        let mf = m as f64;
        let off = xn - mf;
        let w = k.weight(mf, xn);
        let a = t_n * ra_prev;
        let r_term = ra_prev * w;
        let f_term = b_prev * w + a * k.sigma * k.delta / (off * off);
        reduced.add(r_term);
        finite.add(f_term);
        used += 1;
        let done_r = stop_r.push(r_term, reduced.abs_mass());
        let done_f = stop_f.push(f_term, finite.abs_mass());
        if done_r && done_f {
            break;
        }
        if used >= n_max {
            return Err(RabiError::NonConvergence { n_max });
        }
        // Advance to m + 1 using f_m, f'_m evaluated at x = n.
        let f = k.f(mf, xn);
        let df = k.df(mf, xn);
        let next = mf + 1.0;
        let ra = (g * f * ra_prev - g2 * ra_prev2) / next;
        let b = (g * f * b_prev + g * df * (t_n * ra_prev) - g2 * b_prev2) / next;
        (ra_prev2, ra_prev) = (ra_prev, ra);
        (b_prev2, b_prev) = (b_prev, b);
        m += 1;
    }

    let reduced_residue = reduced.value();
    let reduced_err = stop_r.tail() + 8.0 * f64::EPSILON * reduced.abs_mass();
    Ok(PoleExpansion {
        reduced_residue,
        residue: t_n * reduced_residue,
        finite_part: finite.value(),
        residue_error: t_n.abs() * reduced_err,
        finite_error: stop_f.tail() + 8.0 * f64::EPSILON * finite.abs_mass(),
        n_used: used,
    })
}

/// Residue and finite part of `G_±` at the baseline `x = n`.
pub fn g_eval_regularized(n: u32, parity: Parity, params: &ModelParams, eps: f64) -> Result<RegularizedG> {
    let pe = pole_expansion(n, parity, params, eps, DEFAULT_N_MAX)?;
    Ok(RegularizedG {
        n,
        parity,
        residue: pe.residue,
        finite_part: pe.finite_part,
        residue_error: pe.residue_error,
        finite_error: pe.finite_error,
        n_used: pe.n_used,
    })
}
