//! Small dense numeric kernels: Perron eigendata by power iteration,
//! stationary vectors of stochastic matrices, safeguarded monotone root
//! finding, and golden-section maximization.
//!
//! Matrices are row-major `Vec<S>` with explicit dimension; everything here is
//! deterministic (fixed starting vectors, fixed sweep orders).

use crate::config::Tolerances;
use crate::scalar::Scalar;

/// Perron eigendata of a nonnegative primitive matrix.
#[derive(Debug, Clone)]
pub(crate) struct PerronData<S> {
    /// Dominant eigenvalue.
    pub lambda: S,
    /// Left eigenvector, positive, L1-normalized.
    pub left: Vec<S>,
    /// Right eigenvector, positive, L1-normalized.
    pub right: Vec<S>,
}

/// Power iteration failure: the residual never reached the target.
#[derive(Debug, Clone)]
pub(crate) struct PowerIterationFailure {
    pub iterations: usize,
    pub residual: f64,
}

fn mat_vec<S: Scalar>(n: usize, a: &[S], x: &[S], out: &mut [S]) {
    for i in 0..n {
        let row = &a[i * n..(i + 1) * n];
        out[i] = row.iter().zip(x).map(|(&aij, &xj)| aij * xj).sum();
    }
}

fn vec_mat<S: Scalar>(n: usize, a: &[S], x: &[S], out: &mut [S]) {
    for j in 0..n {
        out[j] = S::zero();
    }
    for i in 0..n {
        let xi = x[i];
        if xi != S::zero() {
            let row = &a[i * n..(i + 1) * n];
            for j in 0..n {
                out[j] = out[j] + xi * row[j];
            }
        }
    }
}

fn power_side<S: Scalar>(
    n: usize,
    a: &[S],
    left: bool,
    tol: &Tolerances<S>,
) -> Result<(S, Vec<S>, usize), PowerIterationFailure> {
    // Deterministic all-ones start.
    let mut x = vec![S::one() / S::of(n as f64); n];
    let mut y = vec![S::zero(); n];
    let mut lambda = S::one();
    let mut best_residual = S::infinity();
    for it in 1..=tol.max_power_iterations {
        if left {
            vec_mat(n, a, &x, &mut y);
        } else {
            mat_vec(n, a, &x, &mut y);
        }
        let norm: S = y.iter().copied().sum();
        if !(norm > S::zero()) || !norm.is_finite() {
            return Err(PowerIterationFailure {
                iterations: it,
                residual: f64::INFINITY,
            });
        }
        lambda = norm;
        let mut residual = S::zero();
        for i in 0..n {
            y[i] = y[i] / norm;
            let d = (y[i] - x[i]).abs();
            if d > residual {
                residual = d;
            }
        }
        std::mem::swap(&mut x, &mut y);
        best_residual = best_residual.min(residual);
        if residual <= tol.eigen {
            // One more application fixes the eigenvalue to the final vector.
            if left {
                vec_mat(n, a, &x, &mut y);
            } else {
                mat_vec(n, a, &x, &mut y);
            }
            lambda = y.iter().copied().sum();
            return Ok((lambda, x, it));
        }
    }
    let _ = lambda;
    Err(PowerIterationFailure {
        iterations: tol.max_power_iterations,
        residual: best_residual.lossy_f64(),
    })
}

/// Perron eigendata for a primitive nonnegative `n`-by-`n` matrix.
pub(crate) fn perron<S: Scalar>(
    n: usize,
    a: &[S],
    tol: &Tolerances<S>,
) -> Result<PerronData<S>, PowerIterationFailure> {
    let (_, right, _) = power_side(n, a, false, tol)?;
    let (_, left, _) = power_side(n, a, true, tol)?;
    // Two-sided Rayleigh quotient u.(A v) / u.v: quadratically accurate in
    // the eigenvector residuals, so lambda is good to machine precision.
    let mut av = vec![S::zero(); n];
    mat_vec(n, a, &right, &mut av);
    let num: S = left.iter().zip(&av).map(|(&u, &w)| u * w).sum();
    let den: S = left.iter().zip(&right).map(|(&u, &v)| u * v).sum();
    Ok(PerronData {
        lambda: num / den,
        left,
        right,
    })
}

/// Perron eigendata for an irreducible (possibly periodic or reducible)
/// nonnegative matrix, computed on `A + cI` so power iteration converges
/// even on a bare cycle; `lambda(A + cI) = lambda(A) + c` with the same
/// eigenvectors.
pub(crate) fn perron_shifted<S: Scalar>(
    n: usize,
    a: &[S],
    tol: &Tolerances<S>,
) -> Result<PerronData<S>, PowerIterationFailure> {
    let c = (0..n)
        .map(|i| a[i * n..(i + 1) * n].iter().copied().sum())
        .fold(S::zero(), S::max)
        .max(S::one());
    let mut shifted = a.to_vec();
    for i in 0..n {
        shifted[i * n + i] = shifted[i * n + i] + c;
    }
    let mut data = perron(n, &shifted, tol)?;
    data.lambda = data.lambda - c;
    Ok(data)
}

/// Solve `p = p Q` with `sum p = 1` for a row-stochastic `Q`.
///
/// Direct elimination on `(Q^T - I)` with the first equation replaced by the
/// normalization; falls back to Cesaro-averaged iteration when the chain is
/// reducible enough to make that system singular.
pub(crate) fn stationary_vector<S: Scalar>(n: usize, q: &[S]) -> Option<Vec<S>> {
    let mut m = vec![S::zero(); n * n];
    let mut b = vec![S::zero(); n];
    for j in 0..n {
        m[j] = S::one();
    }
    b[0] = S::one();
    for i in 1..n {
        for j in 0..n {
            // Row i of Q^T - I is column i of Q minus the unit entry.
            let mut v = q[j * n + i];
            if i == j {
                v = v - S::one();
            }
            m[i * n + j] = v;
        }
    }
    match solve_dense(n, &mut m, &mut b) {
        Some(()) => {
            if b.iter().any(|&x| x < S::of(-1e-9) || !x.is_finite()) {
                None
            } else {
                let mut p: Vec<S> = b.iter().map(|&x| x.max(S::zero())).collect();
                let s: S = p.iter().copied().sum();
                for x in &mut p {
                    *x = *x / s;
                }
                Some(p)
            }
        }
        None => cesaro_stationary(n, q),
    }
}

fn cesaro_stationary<S: Scalar>(n: usize, q: &[S]) -> Option<Vec<S>> {
    let mut p = vec![S::one() / S::of(n as f64); n];
    let mut acc = vec![S::zero(); n];
    let mut next = vec![S::zero(); n];
    let rounds = 200_000usize;
    for k in 0..rounds {
        vec_mat(n, q, &p, &mut next);
        std::mem::swap(&mut p, &mut next);
        if k >= rounds / 2 {
            for i in 0..n {
                acc[i] = acc[i] + p[i];
            }
        }
    }
    let s: S = acc.iter().copied().sum();
    if !(s > S::zero()) {
        return None;
    }
    for x in &mut acc {
        *x = *x / s;
    }
    // Accept only if this is genuinely stationary.
    vec_mat(n, q, &acc, &mut next);
    let resid = acc
        .iter()
        .zip(&next)
        .map(|(&a, &b)| (a - b).abs())
        .fold(S::zero(), |m, d| m.max(d));
    if resid < S::of(1e-8) {
        Some(acc)
    } else {
        None
    }
}

/// Gaussian elimination with partial pivoting; `m` and `b` are destroyed.
/// Returns `None` on a (numerically) singular pivot.
pub(crate) fn solve_dense<S: Scalar>(n: usize, m: &mut [S], b: &mut [S]) -> Option<()> {
    for col in 0..n {
        let mut piv = col;
        let mut best = m[col * n + col].abs();
        for r in col + 1..n {
            let v = m[r * n + col].abs();
            if v > best {
                best = v;
                piv = r;
            }
        }
        if !(best > S::of(1e-13)) {
            return None;
        }
        if piv != col {
            for j in 0..n {
                m.swap(col * n + j, piv * n + j);
            }
            b.swap(col, piv);
        }
        let d = m[col * n + col];
        for r in col + 1..n {
            let f = m[r * n + col] / d;
            if f != S::zero() {
                for j in col..n {
                    m[r * n + j] = m[r * n + j] - f * m[col * n + j];
                }
                b[r] = b[r] - f * b[col];
            }
        }
    }
    for col in (0..n).rev() {
        let mut s = b[col];
        for j in col + 1..n {
            s = s - m[col * n + j] * b[j];
        }
        b[col] = s / m[col * n + col];
    }
    Some(())
}

/// Outcome of a monotone root solve.
#[derive(Debug, Clone, Copy)]
pub(crate) struct RootResult<S> {
    pub x: S,
    pub residual: S,
    pub evaluations: usize,
}

/// Failure modes of the monotone root solver.
#[derive(Debug, Clone)]
pub(crate) enum RootFailure<S> {
    /// The expanding bracket never produced a sign change.
    NoBracket { lo: S, hi: S, f_lo: S, f_hi: S },
    /// Iteration cap reached before the residual target.
    Stalled { x: S, residual: S },
    /// The function violated the declared monotonicity on the bracket.
    NotMonotone { lo: S, hi: S },
}

impl<S: std::fmt::Display> std::fmt::Display for RootFailure<S> {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            RootFailure::NoBracket { lo, hi, f_lo, f_hi } => {
                write!(f, "no sign change on [{lo}, {hi}] (f = {f_lo} .. {f_hi})")
            }
            RootFailure::Stalled { x, residual } => {
                write!(f, "stalled at {x} with residual {residual}")
            }
            RootFailure::NotMonotone { lo, hi } => {
                write!(f, "not monotone on [{lo}, {hi}]")
            }
        }
    }
}

/// Root of a continuous strictly increasing function via bracketed
/// bisection with secant acceleration.  Newton steps are never taken.
///
/// `lo`/`hi` is the initial bracket; when `expand` is set the bracket is
/// doubled outward until the sign change is captured.  Iteration stops when
/// `|f| < target` or the bracket collapses to machine width (the best point
/// is then checked against a relaxed residual).
pub(crate) fn increasing_root<S: Scalar, F: FnMut(S) -> S>(
    mut f: F,
    mut lo: S,
    mut hi: S,
    expand: bool,
    target: S,
    max_iter: usize,
) -> Result<RootResult<S>, RootFailure<S>> {
    let mut evals = 0usize;
    let mut f_lo = f(lo);
    evals += 1;
    if f_lo.abs() <= target {
        return Ok(RootResult {
            x: lo,
            residual: f_lo,
            evaluations: evals,
        });
    }
    let mut f_hi = f(hi);
    evals += 1;
    if f_hi.abs() <= target {
        return Ok(RootResult {
            x: hi,
            residual: f_hi,
            evaluations: evals,
        });
    }
    if expand {
        let mut width = (hi - lo).max(S::one());
        let mut guard = 0;
        while f_lo > S::zero() {
            hi = lo;
            f_hi = f_lo;
            lo = lo - width;
            f_lo = f(lo);
            evals += 1;
            if f_lo.abs() <= target {
                return Ok(RootResult {
                    x: lo,
                    residual: f_lo,
                    evaluations: evals,
                });
            }
            width = width + width;
            guard += 1;
            if guard > 200 {
                return Err(RootFailure::NoBracket { lo, hi, f_lo, f_hi });
            }
        }
        let mut width = (hi - lo).max(S::one());
        let mut guard = 0;
        while f_hi < S::zero() {
            lo = hi;
            f_lo = f_hi;
            hi = hi + width;
            f_hi = f(hi);
            evals += 1;
            if f_hi.abs() <= target {
                return Ok(RootResult {
                    x: hi,
                    residual: f_hi,
                    evaluations: evals,
                });
            }
            width = width + width;
            guard += 1;
            if guard > 200 {
                return Err(RootFailure::NoBracket { lo, hi, f_lo, f_hi });
            }
        }
    }
    if !(f_lo < S::zero() && f_hi > S::zero()) {
        return Err(RootFailure::NotMonotone { lo, hi });
    }
    let mut best_x = if f_lo.abs() < f_hi.abs() { lo } else { hi };
    let mut best_f = f_lo.abs().min(f_hi.abs());
    for it in 0..max_iter {
        // Secant proposal, safeguarded to the inner 90% of the bracket;
        // every odd round bisects to guarantee bracket shrinkage.
        let mid = (lo + hi) * S::of(0.5);
        let x = if it % 2 == 0 {
            let denom = f_hi - f_lo;
            let sec = if denom > S::zero() {
                lo - f_lo * (hi - lo) / denom
            } else {
                mid
            };
            let margin = (hi - lo) * S::of(0.05);
            if sec > lo + margin && sec < hi - margin {
                sec
            } else {
                mid
            }
        } else {
            mid
        };
        if !(x > lo && x < hi) {
            break;
        }
        let fx = f(x);
        evals += 1;
        if fx.abs() < best_f {
            best_f = fx.abs();
            best_x = x;
        }
        if fx.abs() <= target {
            return Ok(RootResult {
                x,
                residual: fx,
                evaluations: evals,
            });
        }
        if fx < S::zero() {
            lo = x;
            f_lo = fx;
        } else {
            hi = x;
            f_hi = fx;
        }
        if hi - lo <= (lo.abs() + hi.abs() + S::one()) * S::epsilon() * S::of(4.0) {
            break;
        }
    }
    // Bracket exhausted; accept the best point if it is close to the target.
    if best_f <= target * S::of(100.0) {
        return Ok(RootResult {
            x: best_x,
            residual: best_f,
            evaluations: evals,
        });
    }
    Err(RootFailure::Stalled {
        x: best_x,
        residual: best_f,
    })
}

/// Root of a strictly decreasing function, by negation.
pub(crate) fn decreasing_root<S: Scalar, F: FnMut(S) -> S>(
    mut f: F,
    lo: S,
    hi: S,
    expand: bool,
    target: S,
    max_iter: usize,
) -> Result<RootResult<S>, RootFailure<S>> {
    let r = increasing_root(|x| -f(x), lo, hi, expand, target, max_iter)?;
    Ok(RootResult {
        x: r.x,
        residual: -r.residual,
        evaluations: r.evaluations,
    })
}

/// Golden-section maximization of a unimodal function on `[a, b]` down to
/// bracket width `tol_x`.  Returns the best abscissa and value seen.
pub(crate) fn golden_max<S: Scalar, F: FnMut(S) -> S>(mut f: F, a: S, b: S, tol_x: S) -> (S, S) {
    let inv_phi = S::of(0.618_033_988_749_894_9);
    let mut lo = a;
    let mut hi = b;
    let mut x1 = hi - inv_phi * (hi - lo);
    let mut x2 = lo + inv_phi * (hi - lo);
    let mut f1 = f(x1);
    let mut f2 = f(x2);
    while hi - lo > tol_x {
        if f1 < f2 {
            lo = x1;
            x1 = x2;
            f1 = f2;
            x2 = lo + inv_phi * (hi - lo);
            f2 = f(x2);
        } else {
            hi = x2;
            x2 = x1;
            f2 = f1;
            x1 = hi - inv_phi * (hi - lo);
            f1 = f(x1);
        }
    }
    if f1 >= f2 {
        (x1, f1)
    } else {
        (x2, f2)
    }
}

/// `log(sum(exp(x_i)))` without overflow; `-inf` for an empty slice.
pub(crate) fn log_sum_exp<S: Scalar>(xs: &[S]) -> S {
    let m = xs.iter().copied().fold(S::neg_infinity(), |a, b| a.max(b));
    if !m.is_finite() {
        return m;
    }
    let s: S = xs.iter().map(|&x| (x - m).exp()).sum();
    m + s.ln()
}

/// `-sum p_i log p_i` with the `0 log 0 = 0` convention.
pub(crate) fn entropy_of<S: Scalar>(p: &[S]) -> S {
    let mut h = S::zero();
    for &x in p {
        if x > S::zero() {
            h = h - x * x.ln();
        }
    }
    h
}

#[cfg(test)]
mod tests {
    use super::*;

    type T = Tolerances<f64>;

    #[test]
    fn perron_of_golden_mean_matrix() {
        let a = vec![1.0, 1.0, 1.0, 0.0];
        let p = perron(2, &a, &T::default()).unwrap();
        let phi = (1.0 + 5f64.sqrt()) / 2.0;
        assert!((p.lambda - phi).abs() < 1e-12);
        // Matrix is symmetric, so both eigenvectors agree.
        for i in 0..2 {
            assert!((p.left[i] - p.right[i]).abs() < 1e-10);
        }
        assert!((p.right[0] / p.right[1] - phi).abs() < 1e-9);
    }

    #[test]
    fn stationary_direct_and_degenerate() {
        // Doubly stochastic: uniform.
        let q: Vec<f64> = vec![0.5, 0.5, 0.5, 0.5];
        let p = stationary_vector(2, &q).unwrap();
        assert!((p[0] - 0.5).abs() < 1e-14);

        // Absorbing state 0.
        let q: Vec<f64> = vec![1.0, 0.0, 1.0, 0.0];
        let p = stationary_vector(2, &q).unwrap();
        assert!((p[0] - 1.0).abs() < 1e-12);
        assert!(p[1].abs() < 1e-12);
    }

    #[test]
    fn increasing_root_with_expansion() {
        let r = increasing_root(|x: f64| x.tanh() - 0.5, -1.0, 1.0, true, 1e-14, 200).unwrap();
        assert!((r.x - 0.5f64.atanh()).abs() < 1e-10);
        assert!(r.residual.abs() < 1e-14);
    }

    #[test]
    fn decreasing_root_rejects_wrong_direction() {
        let r = decreasing_root(|x: f64| x + 0.5, 0.0, 1.0, false, 1e-12, 100);
        assert!(matches!(r, Err(RootFailure::NotMonotone { .. })));
    }

    #[test]
    fn golden_section_finds_quadratic_peak() {
        let (x, v) = golden_max(|x: f64| 1.0 - (x - 0.3).powi(2), 0.0, 1.0, 1e-12);
        assert!((x - 0.3).abs() < 1e-6);
        assert!((v - 1.0).abs() < 1e-12);
    }

    #[test]
    fn log_sum_exp_handles_large_magnitudes() {
        let v = log_sum_exp(&[1000.0f64, 1000.0]);
        assert!((v - (1000.0 + 2f64.ln())).abs() < 1e-12);
        let w = log_sum_exp(&[-1000.0f64, -1000.0]);
        assert!((w - (-1000.0 + 2f64.ln())).abs() < 1e-12);
    }
}
