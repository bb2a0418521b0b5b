//! Small numerical building blocks shared by the solvers.

/// Neumaier-compensated accumulator. Also tracks `Σ|term|`, which bounds the
/// rounding error of the running sum.
#[derive(Debug, Clone, Copy, Default)]
pub struct CompensatedSum {
    sum: f64,
    comp: f64,
    abs_mass: f64,
}

impl CompensatedSum {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn add(&mut self, term: f64) {
        let t = self.sum + term;
        if self.sum.abs() >= term.abs() {
            self.comp += (self.sum - t) + term;
        } else {
            self.comp += (term - t) + self.sum;
        }
        self.sum = t;
        self.abs_mass += term.abs();
    }

    pub fn value(&self) -> f64 {
        self.sum + self.comp
    }

    /// `Σ|term|` over everything added so far.
    pub fn abs_mass(&self) -> f64 {
        self.abs_mass
    }
}

impl std::iter::FromIterator<f64> for CompensatedSum {
    fn from_iter<I: IntoIterator<Item = f64>>(iter: I) -> Self {
        let mut s = CompensatedSum::new();
        for t in iter {
            s.add(t);
        }
        s
    }
}

/// `n` evenly spaced points from `a` to `b` inclusive.
pub fn linspace(a: f64, b: f64, n: usize) -> Vec<f64> {
    match n {
        0 => Vec::new(),
        1 => vec![a],
        _ => {
            let step = (b - a) / (n - 1) as f64;
            (0..n).map(|i| if i == n - 1 { b } else { a + step * i as f64 }).collect()
        }
    }
}

pub fn central_difference<F: Fn(f64) -> f64>(f: F, x: f64, h: f64) -> f64 {
    try_central_difference::<_, std::convert::Infallible>(|t| Ok(f(t)), x, h).unwrap_or_else(|e| match e {})
}

/// Central difference of a fallible function.
pub fn try_central_difference<F, E>(f: F, x: f64, h: f64) -> Result<f64, E>
where
    F: Fn(f64) -> Result<f64, E>,
{
    Ok((f(x + h)? - f(x - h)?) / (2.0 * h))
}

/// Bisection on a bracket with `f(lo)` and `f(hi)` of opposite sign.
///
/// Stops when the bracket is narrower than `tol` or can no longer be split in
/// floating point. Returns the final bracket.
pub fn bisect<F, E>(mut f: F, mut lo: f64, mut hi: f64, tol: f64) -> Result<(f64, f64), E>
where
    F: FnMut(f64) -> Result<f64, E>,
{
    let mut f_lo = f(lo)?;
    let mut iters = 0;
    while hi - lo > tol && iters < 200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        let f_mid = f(mid)?;
        if f_mid == 0.0 {
            return Ok((mid, mid));
        }
        if (f_mid > 0.0) == (f_lo > 0.0) {
            lo = mid;
            f_lo = f_mid;
        } else {
            hi = mid;
        }
        iters += 1;
    }
    Ok((lo, hi))
}

/// Vertex of the parabola through three points, if it is a minimum of `|y|`
/// inside `[x0, x2]`.
pub fn parabola_vertex(x: [f64; 3], y: [f64; 3]) -> Option<f64> {
    let d1 = (y[1] - y[0]) / (x[1] - x[0]);
    let d2 = (y[2] - y[1]) / (x[2] - x[1]);
    let curv = (d2 - d1) / (x[2] - x[0]);
    if curv == 0.0 || !curv.is_finite() {
        return None;
    }
    // y ≈ y0 + d1 (t − x0) + curv (t − x0)(t − x1)
    let v = 0.5 * (x[0] + x[1]) - d1 / (2.0 * curv);
    (v > x[0] && v < x[2]).then_some(v)
}

/// `true` when `a` and `b` have strictly opposite signs.
pub fn sign_change(a: f64, b: f64) -> bool {
    (a > 0.0 && b < 0.0) || (a < 0.0 && b > 0.0)
}
