//! Truncated Fock-space ground truth.
//!
//! Each parity sector is the symmetric tridiagonal chain
//! `H_± = ω a†a + g (a + a†) ± Δ (−1)^{a†a}` on the lowest `M` oscillator
//! levels. It is diagonalized densely; truncation error is measured by
//! comparing `M` against `M + 50` and growing `M` until the gap closes.

use serde::{Deserialize, Serialize};

use crate::error::{RabiError, Result};
use crate::model::{scaled_x, validate, ModelParams, Parity};
use crate::numerics::{bisect, sign_change};
use crate::spectrum::{Classification, EigenvalueRecord, Source};

pub const M_START: usize = 120;
pub const M_STEP: usize = 60;
pub const M_PROBE: usize = 50;
pub const M_CAP: usize = 1200;
/// Distance in x below which an oracle level is treated as sitting on a baseline.
pub const BASELINE_TOL: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq)]
pub struct ParityMatrix {
    pub parity: Parity,
    pub dim: usize,
    pub diagonal: Vec<f64>,
    pub offdiagonal: Vec<f64>,
}

impl ParityMatrix {
    /// Dense row-major copy, mostly for tests.
    pub fn to_dense(&self) -> Vec<Vec<f64>> {
        let mut a = vec![vec![0.0; self.dim]; self.dim];
        for i in 0..self.dim {
            a[i][i] = self.diagonal[i];
            if i + 1 < self.dim {
                a[i][i + 1] = self.offdiagonal[i];
                a[i + 1][i] = self.offdiagonal[i];
            }
        }
        a
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OracleSpectrum {
    pub params: ModelParams,
    /// Truncation of the reported levels (0 for closed-form paths).
    pub m: usize,
    pub records: Vec<EigenvalueRecord>,
    pub convergence_gap: f64,
}

/// Nearest-level distances to a target energy, per parity.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DegeneracyGap {
    pub plus: f64,
    pub minus: f64,
}

impl DegeneracyGap {
    pub fn get(&self, parity: Parity) -> f64 {
        match parity {
            Parity::Plus => self.plus,
            Parity::Minus => self.minus,
        }
    }
}

pub fn build_parity_matrix(parity: Parity, params: &ModelParams, m: usize) -> Result<ParityMatrix> {
    if m < 2 {
        return Err(RabiError::InvalidTruncation(m));
    }
    let ModelParams { omega, g, delta } = *params;
    let s = parity.sign();
    let diagonal = (0..m)
        .map(|k| {
            let alt = if k.is_multiple_of(2) { 1.0 } else { -1.0 };
            omega * k as f64 + s * delta * alt
        })
        .collect();
    let offdiagonal = (0..m - 1).map(|k| g * ((k + 1) as f64).sqrt()).collect();
    Ok(ParityMatrix { parity, dim: m, diagonal, offdiagonal })
}

/// All eigenvalues of a symmetric tridiagonal matrix, ascending, by implicit
/// QL with Wilkinson-type shifts.
pub fn tridiagonal_eigenvalues(diagonal: &[f64], offdiagonal: &[f64]) -> Result<Vec<f64>> {
    let n = diagonal.len();
    let mut d = diagonal.to_vec();
    let mut e = vec![0.0; n];
    e[..n.saturating_sub(1)].copy_from_slice(&offdiagonal[..n.saturating_sub(1)]);

    for l in 0..n {
        let mut iter = 0;
        loop {
            let mut m = l;
            while m + 1 < n {
                let dd = d[m].abs() + d[m + 1].abs();
                if e[m].abs() <= f64::EPSILON * dd {
                    break;
                }
                m += 1;
            }
            if m == l {
                break;
            }
            iter += 1;
            if iter > 60 {
                return Err(RabiError::ConvergenceFailure { index: l });
            }
            let mut g = (d[l + 1] - d[l]) / (2.0 * e[l]);
            let mut r = g.hypot(1.0);
            g = d[m] - d[l] + e[l] / (g + r.copysign(g));
            let (mut s, mut c, mut p) = (1.0, 1.0, 0.0);
            let mut deflated = false;
            for i in (l..m).rev() {
                let f = s * e[i];
                let b = c * e[i];
                r = f.hypot(g);
                e[i + 1] = r;
                if r == 0.0 {
                    d[i + 1] -= p;
                    e[m] = 0.0;
                    deflated = true;
                    break;
                }
                s = f / r;
                c = g / r;
                g = d[i + 1] - p;
                r = (d[i] - g) * s + 2.0 * c * b;
                p = s * r;
                d[i + 1] = g + p;
                g = c * r - b;
            }
            if deflated {
                continue;
            }
            d[l] -= p;
            e[l] = g;
            e[m] = 0.0;
        }
    }
    d.sort_by(|a, b| a.total_cmp(b));
    Ok(d)
}

pub fn lowest_eigenvalues(matrix: &ParityMatrix, k: usize) -> Result<Vec<f64>> {
    if k > matrix.dim {
        return Err(RabiError::InvalidInput(format!(
            "requested {k} eigenvalues from a {}-dimensional matrix",
            matrix.dim
        )));
    }
    let mut all = tridiagonal_eigenvalues(&matrix.diagonal, &matrix.offdiagonal)?;
    all.truncate(k);
    Ok(all)
}

fn sector_levels(parity: Parity, params: &ModelParams, m: usize, e_max: f64) -> Result<Vec<f64>> {
    let mat = build_parity_matrix(parity, params, m)?;
    let all = tridiagonal_eigenvalues(&mat.diagonal, &mat.offdiagonal)?;
    Ok(all.into_iter().take_while(|&e| e < e_max).collect())
}

fn closed_form_levels(parity: Parity, params: &ModelParams, e_max: f64) -> Vec<f64> {
    let ModelParams { omega, g, delta } = *params;
    let mut out = Vec::new();
    let mut k = 0usize;
    loop {
        let base = omega * k as f64;
        if base - delta.abs() - g * g / omega >= e_max {
            break;
        }
        let e = if g == 0.0 {
            let alt = if k.is_multiple_of(2) { 1.0 } else { -1.0 };
            base + parity.sign() * delta * alt
        } else {
            base - g * g / omega
        };
        if e < e_max {
            out.push(e);
        }
        k += 1;
    }
    out.sort_by(|a, b| a.total_cmp(b));
    out
}

fn interval_index(x: f64) -> i64 {
    let n = x.round();
    if (x - n).abs() <= BASELINE_TOL {
        return n as i64;
    }
    (x.floor() as i64).max(-1)
}

/// Both parity sectors below `e_max`, converged to `tol` in energy.
pub fn oracle_spectrum(params: &ModelParams, e_max: f64, tol: f64) -> Result<OracleSpectrum> {
    validate(params)?;
    if !e_max.is_finite() || tol.is_nan() || tol <= 0.0 {
        return Err(RabiError::InvalidInput(format!("e_max = {e_max}, tol = {tol}")));
    }
    let mut levels: Vec<(Parity, Vec<f64>)>;
    let mut m_used = 0;
    let mut gap = 0.0;

    if params.g == 0.0 || params.delta == 0.0 {
        levels = Parity::BOTH.iter().map(|&p| (p, closed_form_levels(p, params, e_max))).collect();
    } else {
        // Below this the coherent-state weight of the wanted levels is cut off
        // and the truncated matrix can miss them entirely.
        let gr = params.g_reduced().abs();
        let x_max = scaled_x(e_max, params).0.max(0.0);
        let m_floor = (gr * gr + 8.0 * gr + x_max + 20.0).ceil() as usize;
        let mut m = M_START.max(m_floor);
        loop {
            if m + M_PROBE > M_CAP {
                return Err(RabiError::TruncationExceeded { cap: M_CAP });
            }
            levels = Vec::new();
            let mut worst: f64 = 0.0;
            for p in Parity::BOTH {
                let coarse = sector_levels(p, params, m, e_max)?;
                let fine = sector_levels(p, params, m + M_PROBE, e_max)?;
                if fine.len() != coarse.len() {
                    worst = f64::INFINITY;
                }
                for (a, b) in coarse.iter().zip(&fine) {
                    worst = worst.max((a - b).abs());
                }
                levels.push((p, fine));
            }
            if worst < tol {
                m_used = m + M_PROBE;
                gap = worst;
                break;
            }
            m += M_STEP;
        }
    }

    let mut records: Vec<EigenvalueRecord> = Vec::new();
    for (parity, es) in &levels {
        for &e in es {
            records.push(EigenvalueRecord {
                energy: e,
                x: scaled_x(e, params),
                parity: *parity,
                classification: Classification::Regular,
                interval_index: interval_index(scaled_x(e, params).0),
                source: Source::Oracle,
                uncertainty: gap.max(f64::EPSILON * e.abs()),
            });
        }
    }
    classify_oracle_records(&mut records);
    records.sort_by(|a, b| a.energy.total_cmp(&b.energy).then(a.parity.cmp(&b.parity)));
    Ok(OracleSpectrum { params: *params, m: m_used, records, convergence_gap: gap })
}

/// Levels sitting on a baseline are exceptional: Juddean when both parities
/// are there, non-Juddean otherwise.
fn classify_oracle_records(records: &mut [EigenvalueRecord]) {
    let on_baseline = |r: &EigenvalueRecord| {
        let x = r.x.0;
        x > -BASELINE_TOL && (x - x.round()).abs() <= BASELINE_TOL
    };
    let flags: Vec<Option<Classification>> = records
        .iter()
        .map(|r| {
            if !on_baseline(r) {
                return None;
            }
            let partner =
                records.iter().any(|o| o.parity != r.parity && on_baseline(o) && o.x.0.round() == r.x.0.round());
            Some(if partner { Classification::ExceptionalJuddean } else { Classification::ExceptionalNonJuddean })
        })
        .collect();
    for (r, f) in records.iter_mut().zip(flags) {
        if let Some(c) = f {
            r.classification = c;
        }
    }
}

pub fn degeneracy_gap(params: &ModelParams, e_target: f64, tol: f64) -> Result<DegeneracyGap> {
    let spec = oracle_spectrum(params, e_target + 3.0 * params.omega, tol)?;
    let nearest = |p: Parity| {
        spec.records.iter().filter(|r| r.parity == p).map(|r| (r.energy - e_target).abs()).fold(f64::INFINITY, f64::min)
    };
    Ok(DegeneracyGap { plus: nearest(Parity::Plus), minus: nearest(Parity::Minus) })
}

/// Level of `parity` closest to `e_target`, by index into the sorted sector.
fn nearest_level_index(parity: Parity, params: &ModelParams, e_target: f64, m: usize) -> Result<usize> {
    let mat = build_parity_matrix(parity, params, m)?;
    let all = tridiagonal_eigenvalues(&mat.diagonal, &mat.offdiagonal)?;
    Ok(all
        .iter()
        .enumerate()
        .min_by(|a, b| (a.1 - e_target).abs().total_cmp(&(b.1 - e_target).abs()))
        .map(|(i, _)| i)
        .unwrap_or(0))
}

fn oracle_truncation(g: f64, omega: f64, n: u32) -> usize {
    let gr = g / omega;
    (M_START + n as usize * 4 + (8.0 * gr * gr) as usize + (40.0 * gr) as usize).min(M_CAP)
}

/// Locates a crossing of the two parity levels nearest baseline `n` in
/// `g ∈ [g_lo, g_hi]` purely from diagonalization. The level indices are
/// fixed at the bracket midpoint; `None` when they do not change order.
pub fn degeneracy_crossing(n: u32, delta: f64, omega: f64, g_lo: f64, g_hi: f64, tol: f64) -> Result<Option<f64>> {
    let g_mid = 0.5 * (g_lo + g_hi);
    let mid = ModelParams::new(omega, g_mid, delta);
    let m = oracle_truncation(g_hi, omega, n);
    let target = mid.baseline_energy(n as i64);
    let ip = nearest_level_index(Parity::Plus, &mid, target, m)?;
    let im = nearest_level_index(Parity::Minus, &mid, target, m)?;
    let split = |g: f64| -> Result<f64> {
        let p = ModelParams::new(omega, g, delta);
        let ep = lowest_eigenvalues(&build_parity_matrix(Parity::Plus, &p, m)?, ip + 1)?[ip];
        let em = lowest_eigenvalues(&build_parity_matrix(Parity::Minus, &p, m)?, im + 1)?[im];
        Ok(ep - em)
    };
    if !sign_change(split(g_lo)?, split(g_hi)?) {
        return Ok(None);
    }
    let (a, b) = bisect(split, g_lo, g_hi, tol)?;
    Ok(Some(0.5 * (a + b)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use nalgebra::DMatrix;

    #[test]
    fn decoupled_matrix() {
        let m = build_parity_matrix(Parity::Plus, &ModelParams::unit(0.0, 0.4), 4).unwrap();
        let want = [0.4, 0.6, 2.4, 2.6];
        for (a, b) in m.diagonal.iter().zip(want) {
            assert!((a - b).abs() < 1e-15);
        }
        assert_eq!(m.offdiagonal, vec![0.0; 3]);
        assert_eq!(lowest_eigenvalues(&m, 2).unwrap(), vec![0.4, 0.6]);
    }

    #[test]
    fn ladder_elements_and_symmetry() {
        let m = build_parity_matrix(Parity::Minus, &ModelParams::unit(0.5, 0.0), 3).unwrap();
        assert_eq!(m.offdiagonal, vec![0.5, 0.5 * 2f64.sqrt()]);
        let dense = m.to_dense();
        for (i, row) in dense.iter().enumerate() {
            for (j, v) in row.iter().enumerate() {
                assert_eq!(*v, dense[j][i]);
            }
        }
        assert_eq!(
            build_parity_matrix(Parity::Plus, &ModelParams::unit(0.5, 0.1), 1),
            Err(RabiError::InvalidTruncation(1))
        );
    }

    #[test]
    fn displaced_oscillator_levels() {
        let m = build_parity_matrix(Parity::Plus, &ModelParams::unit(1.0, 0.0), 150).unwrap();
        let ev = lowest_eigenvalues(&m, 5).unwrap();
        for (k, e) in ev.iter().enumerate() {
            assert!((e - (k as f64 - 1.0)).abs() < 1e-9, "{k}: {e}");
        }
    }

    #[test]
    fn qr_matches_dense_reference() {
        let params = ModelParams::unit(0.7, 0.4);
        for parity in Parity::BOTH {
            let m = build_parity_matrix(parity, &params, 60).unwrap();
            let ours = lowest_eigenvalues(&m, 60).unwrap();
            let dense = m.to_dense();
            let a = DMatrix::from_fn(60, 60, |i, j| dense[i][j]);
            let mut reference: Vec<f64> = a.symmetric_eigenvalues().iter().copied().collect();
            reference.sort_by(|a, b| a.total_cmp(b));
            for (x, y) in ours.iter().zip(&reference) {
                assert!((x - y).abs() < 1e-10);
            }
        }
    }

    #[test]
    fn regression_levels_at_m200() {
        let params = ModelParams::unit(0.7, 0.4);
        let m200 = lowest_eigenvalues(&build_parity_matrix(Parity::Plus, &params, 200).unwrap(), 12).unwrap();
        let m300 = lowest_eigenvalues(&build_parity_matrix(Parity::Plus, &params, 300).unwrap(), 12).unwrap();
        for (a, b) in m200.iter().zip(&m300) {
            assert!((a - b).abs() <= 1e-10);
        }
        let pinned = PLUS_LEVELS_G07_D04;
        for (a, b) in m200.iter().zip(pinned) {
            assert!((a - b).abs() <= 1e-10, "{a} vs {b}");
        }
    }

    // Lowest Plus levels at g = 0.7, Δ = 0.4, M = 200 (agree with M = 300 to 1e-10).
    const PLUS_LEVELS_G07_D04: [f64; 12] = [
        -0.4270436745661867,
        0.673603825027011,
        1.3607568321317185,
        2.5452309655127765,
        3.5669038354612628,
        4.405629097596747,
        5.628621088234462,
        6.410720501723051,
        7.559239528934402,
        8.507805152707249,
        9.468662337978287,
        10.58919340716439,
    ];

    #[test]
    fn delta_zero_spectrum_is_doubly_degenerate() {
        let s = oracle_spectrum(&ModelParams::unit(0.5, 0.0), 3.5, 1e-10).unwrap();
        assert_eq!(s.records.len(), 8);
        for (i, pair) in s.records.chunks(2).enumerate() {
            assert_eq!(pair[0].parity, Parity::Plus);
            assert_eq!(pair[1].parity, Parity::Minus);
            for r in pair {
                assert_eq!(r.energy, i as f64 - 0.25);
                assert_eq!(r.classification, Classification::ExceptionalJuddean);
            }
        }
    }

    #[test]
    fn decoupled_spectrum_labels() {
        let s = oracle_spectrum(&ModelParams::unit(0.0, 0.4), 2.0, 1e-10).unwrap();
        let got: Vec<(f64, Parity)> = s.records.iter().map(|r| (r.energy, r.parity)).collect();
        let want = [
            (-0.4, Parity::Minus),
            (0.4, Parity::Plus),
            (0.6, Parity::Plus),
            (1.4, Parity::Minus),
            (1.6, Parity::Minus),
        ];
        assert_eq!(got.len(), want.len());
        for ((e, p), (we, wp)) in got.iter().zip(want) {
            assert!((e - we).abs() < 1e-15);
            assert_eq!(*p, wp);
        }
    }

    #[test]
    fn adaptive_truncation_converges() {
        let s = oracle_spectrum(&ModelParams::unit(1.2, 0.9), 4.0, 1e-10).unwrap();
        assert!(s.convergence_gap < 1e-10);
        assert!(s.m >= M_START + M_PROBE);
        let energies: Vec<f64> = s.records.iter().map(|r| r.energy).collect();
        assert_eq!(energies.len(), SPECTRUM_G12_D09.len());
        for (a, b) in energies.iter().zip(SPECTRUM_G12_D09) {
            assert!((a - b).abs() < 1e-9, "{a} vs {b}");
        }
    }

    // Both parities below E = 4 at g = 1.2, Δ = 0.9, refined to 1e-13.
    const SPECTRUM_G12_D09: [f64; 12] = [
        -1.673326317157295,
        -1.554419489121834,
        -0.8353708588260305,
        -0.42918304396427887,
        0.2637380651263303,
        0.7891393768324914,
        1.5446474461964528,
        1.5887220278628056,
        2.353672420085887,
        2.7912954097057447,
        3.3940489415817767,
        3.6749138746724572,
    ];

    #[test]
    fn variational_monotonicity() {
        let params = ModelParams::unit(1.1, 0.6);
        for parity in Parity::BOTH {
            let levels: Vec<Vec<f64>> = [120, 180, 240]
                .iter()
                .map(|&m| lowest_eigenvalues(&build_parity_matrix(parity, &params, m).unwrap(), 10).unwrap())
                .collect();
            for w in levels.windows(2) {
                for (a, b) in w[0].iter().zip(&w[1]) {
                    assert!(*b <= *a + 1e-12);
                }
            }
        }
    }

    #[test]
    fn sign_symmetries() {
        let base = oracle_spectrum(&ModelParams::unit(0.8, 0.5), 5.0, 1e-11).unwrap();
        let flip_g = oracle_spectrum(&ModelParams::unit(-0.8, 0.5), 5.0, 1e-11).unwrap();
        let flip_d = oracle_spectrum(&ModelParams::unit(0.8, -0.5), 5.0, 1e-11).unwrap();
        assert_eq!(base.records.len(), flip_g.records.len());
        assert_eq!(base.records.len(), flip_d.records.len());
        for (a, b) in base.records.iter().zip(&flip_g.records) {
            assert!((a.energy - b.energy).abs() < 1e-10);
            assert_eq!(a.parity, b.parity);
        }
        for p in Parity::BOTH {
            let a: Vec<f64> = base.records.iter().filter(|r| r.parity == p).map(|r| r.energy).collect();
            let b: Vec<f64> = flip_d.records.iter().filter(|r| r.parity == p.flipped()).map(|r| r.energy).collect();
            assert_eq!(a.len(), b.len());
            for (x, y) in a.iter().zip(&b) {
                assert!((x - y).abs() < 1e-10);
            }
        }
    }

    /// Full two-component Hamiltonian `ω a†a + Δσz + gσx(a + a†)` in the
    /// basis `|k⟩ ⊗ {↑, ↓}`, diagonalized by a general dense solver.
    fn full_hamiltonian_levels(params: &ModelParams, m: usize) -> Vec<f64> {
        let dim = 2 * m;
        let idx = |k: usize, up: bool| 2 * k + usize::from(!up);
        let mut h = DMatrix::<f64>::zeros(dim, dim);
        for k in 0..m {
            h[(idx(k, true), idx(k, true))] = params.omega * k as f64 + params.delta;
            h[(idx(k, false), idx(k, false))] = params.omega * k as f64 - params.delta;
            if k + 1 < m {
                let c = params.g * ((k + 1) as f64).sqrt();
                for up in [true, false] {
                    h[(idx(k, up), idx(k + 1, !up))] = c;
                    h[(idx(k + 1, !up), idx(k, up))] = c;
                }
            }
        }
        let mut ev: Vec<f64> = h.symmetric_eigenvalues().iter().copied().collect();
        ev.sort_by(|a, b| a.total_cmp(b));
        ev
    }

    #[test]
    fn parity_sectors_reproduce_full_hamiltonian() {
        for &(g, d) in &[(0.7, 0.4), (1.3, 0.9), (0.3, -0.6)] {
            let params = ModelParams::unit(g, d);
            let m = 120;
            let full = full_hamiltonian_levels(&params, m);
            let mut sectors: Vec<f64> = Parity::BOTH
                .iter()
                .flat_map(|&p| lowest_eigenvalues(&build_parity_matrix(p, &params, m).unwrap(), m).unwrap())
                .collect();
            sectors.sort_by(|a, b| a.total_cmp(b));
            // Compare well below the truncation edge.
            for (a, b) in full.iter().zip(&sectors).take(40) {
                assert!((a - b).abs() < 1e-9, "g={g} Δ={d}: {a} vs {b}");
            }
        }
    }

    #[test]
    fn degeneracy_gap_at_delta_zero() {
        let g: f64 = 0.6;
        let gap = degeneracy_gap(&ModelParams::unit(g, 0.0), 2.0 - g * g, 1e-11).unwrap();
        assert!(gap.plus < 1e-10 && gap.minus < 1e-10);
    }

    #[test]
    fn truncation_cap_is_reported() {
        let r = oracle_spectrum(&ModelParams::unit(40.0, 0.5), -1590.0, 1e-12);
        assert_eq!(r.unwrap_err(), RabiError::TruncationExceeded { cap: M_CAP });
    }
}
