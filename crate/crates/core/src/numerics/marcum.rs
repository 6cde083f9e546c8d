//! First-order Marcum Q-function.
//!
//! Evaluated through its Poisson-mixture form: with `X ~ Poisson(b²/2)` and
//! `Y ~ Poisson(a²/2)` independent, `Q₁(a, b) = P(X ≤ Y)`. This is the
//! Bessel-series expansion `e^{-(a²+b²)/2} Σ (a/b)^k I_k(ab)` regrouped so that
//! every term is a product of Poisson masses. Both `Q₁` and `1 − Q₁` are sums
//! of non-negative terms, so whichever is smaller is returned with full
//! relative accuracy and the other is its complement.

use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// Default absolute tolerance of the truncated Poisson windows.
pub const DEFAULT_MARCUM_TOL: f64 = 1e-12;

/// `Q₁(a, b)`.
pub fn marcum_q1<S: Scalar>(a: S, b: S) -> Result<S> {
    marcum_q1_pair(a, b, DEFAULT_MARCUM_TOL).map(|(q, _)| q)
}

/// Returns `(Q₁(a, b), 1 − Q₁(a, b))`; the smaller member carries full
/// relative precision.
pub fn marcum_q1_pair<S: Scalar>(a: S, b: S, abs_tol: f64) -> Result<(S, S)> {
    if !a.is_finite() || !b.is_finite() {
        return Err(Error::Domain(format!("Marcum Q1 arguments must be finite, got a={a}, b={b}")));
    }
    if a < S::zero() || b < S::zero() {
        return Err(Error::Domain(format!("Marcum Q1 arguments must be non-negative, got a={a}, b={b}")));
    }
    if !(abs_tol > 0.0) {
        return Err(Error::Domain(format!("Marcum tolerance must be positive, got {abs_tol}")));
    }
    let half = S::lit(0.5);
    if b == S::zero() {
        return Ok((S::one(), S::zero()));
    }
    if a == S::zero() {
        // Q₁(0, b) = exp(−b²/2); the complement via exp_m1 keeps small values exact.
        let t = -(b * b * half);
        return Ok((t.exp(), -t.exp_m1()));
    }

    let x = PoissonWindow::new(b * b * half, abs_tol);
    let y = PoissonWindow::new(a * a * half, abs_tol);

    // P(X ≤ Y) = Σ_j P(X = j) P(Y ≥ j)
    let q: S = x.pmf.iter().enumerate().map(|(off, &px)| px * y.tail_ge(x.lo + off)).sum();
    // P(X > Y) = Σ_k P(Y = k) P(X ≥ k + 1)
    let p: S = y.pmf.iter().enumerate().map(|(off, &py)| py * x.tail_ge(y.lo + off + 1)).sum();

    let q = q.max(S::zero()).min(S::one());
    let p = p.max(S::zero()).min(S::one());
    if q <= p {
        Ok((q, S::one() - q))
    } else {
        Ok((S::one() - p, p))
    }
}

/// Truncated, renormalized Poisson mass function with suffix sums.
struct PoissonWindow<S> {
    lo: usize,
    pmf: Vec<S>,
    /// `suffix[j] = Σ_{t ≥ j} pmf[t]`, one extra trailing zero.
    suffix: Vec<S>,
}

impl<S: Scalar> PoissonWindow<S> {
    fn new(lambda: S, abs_tol: f64) -> Self {
        if lambda <= S::zero() {
            return Self { lo: 0, pmf: vec![S::one()], suffix: vec![S::one(), S::zero()] };
        }
        let lam = lambda.to_f64_lossy();
        let t = (2.0 * (1.0 / abs_tol).ln()).sqrt() + 4.0;
        let width = (t * lam.sqrt() + 2.0 * t + 10.0).ceil() as usize;
        let mode = lam.floor() as usize;
        let lo = mode.saturating_sub(width);
        let hi = mode + width;

        let mut pmf = vec![S::zero(); hi - lo + 1];
        let m = mode - lo;
        pmf[m] = S::one();
        for k in mode..hi {
            let prev = pmf[k - lo];
            pmf[k + 1 - lo] = prev * lambda / S::from_usize_lossy(k + 1);
        }
        for k in (lo + 1..=mode).rev() {
            let prev = pmf[k - lo];
            pmf[k - 1 - lo] = prev * S::from_usize_lossy(k) / lambda;
        }
        let total: S = pmf.iter().copied().sum();
        for v in &mut pmf {
            *v = *v / total;
        }

        let mut suffix = vec![S::zero(); pmf.len() + 1];
        for j in (0..pmf.len()).rev() {
            suffix[j] = suffix[j + 1] + pmf[j];
        }
        Self { lo, pmf, suffix }
    }

    /// `P(N ≥ n)`.
    #[inline]
    fn tail_ge(&self, n: usize) -> S {
        if n <= self.lo {
            S::one()
        } else {
            let idx = n - self.lo;
            if idx >= self.pmf.len() {
                S::zero()
            } else {
                self.suffix[idx]
            }
        }
    }
}
