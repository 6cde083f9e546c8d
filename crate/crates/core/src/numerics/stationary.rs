//! Direct stationary solve `π = (Zᵀ − I + B)⁻¹ b` with `B = 𝟙𝟙ᵀ`, `b = 𝟙`.

use super::ToleranceConfig;
use crate::chain::TransitionMatrix;
use crate::error::{Error, Result};
use crate::scalar::{l1_distance, Scalar};

/// Stationary distribution of an irreducible, aperiodic chain by dense LU.
///
/// Adding `B` replaces the rank-one deficiency of `Zᵀ − I` with the
/// normalization constraint, so the system is regular exactly when the chain
/// has a single recurrent class.
pub fn solve_stationary_direct<S: Scalar>(z: &TransitionMatrix<S>, tol: &ToleranceConfig) -> Result<Vec<S>> {
    let n = z.dim();
    if n == 0 {
        return Err(Error::Domain("empty transition matrix".into()));
    }
    let mut a = vec![vec![S::one(); n]; n];
    for k in 0..n {
        a[k][k] = a[k][k] - S::one();
        for &(l, p) in z.row(k) {
            // (Zᵀ)[l][k] = Z[k][l]
            a[l][k] = a[l][k] + p;
        }
    }
    let rhs = vec![S::one(); n];
    let mut pi = lu_solve(a, rhs).map_err(|reason| Error::Solver { reason, residual: f64::INFINITY })?;

    let neg_floor = S::lit(-tol.solver_residual_tol);
    if let Some(bad) = pi.iter().find(|&&v| !v.is_finite() || v < neg_floor) {
        return Err(Error::Solver { reason: format!("non-physical stationary mass {bad}"), residual: f64::INFINITY });
    }
    for v in &mut pi {
        *v = v.max(S::zero());
    }
    let total: S = pi.iter().copied().sum();
    for v in &mut pi {
        *v = *v / total;
    }

    let residual = stationary_residual(z, &pi);
    if residual.to_f64_lossy() > tol.solver_residual_tol {
        return Err(Error::Solver {
            reason: "residual above tolerance (chain likely reducible)".into(),
            residual: residual.to_f64_lossy(),
        });
    }
    Ok(pi)
}

/// Stationary distribution of a chain whose only backward move is a return
/// to one renewal state.
///
/// `order` lists every state once, renewal state first, such that each
/// transition `s → t` with `t` neither `s` nor the renewal state goes forward
/// in the order. The balance equations are then triangular and are solved in
/// one pass over the nonzeros, with `π(renewal) = 1` before normalization.
/// Self-loops are divided out through the off-diagonal row mass, which avoids
/// cancellation in `1 − Z[s][s]`.
pub fn solve_stationary_renewal<S: Scalar>(z: &TransitionMatrix<S>, order: &[usize]) -> Result<Vec<S>> {
    let n = z.dim();
    if n == 0 || order.len() != n {
        return Err(Error::Domain(format!("order has {} entries for {n} states", order.len())));
    }
    let mut rank = vec![usize::MAX; n];
    for (r, &s) in order.iter().enumerate() {
        if s >= n || rank[s] != usize::MAX {
            return Err(Error::Domain(format!("order is not a permutation (state {s})")));
        }
        rank[s] = r;
    }
    let root = order[0];
    let mut inflow = vec![S::zero(); n];
    let mut pi = vec![S::zero(); n];
    for &s in order {
        let mut leave = S::zero();
        for &(t, p) in z.row(s) {
            if t != s {
                leave = leave + p;
            }
        }
        let mass = if s == root {
            S::one()
        } else if inflow[s] == S::zero() {
            S::zero()
        } else if leave > S::zero() {
            inflow[s] / leave
        } else {
            return Err(Error::Solver { reason: format!("state {s} is absorbing"), residual: f64::INFINITY });
        };
        pi[s] = mass;
        for &(t, p) in z.row(s) {
            if t == s || t == root {
                continue;
            }
            if rank[t] < rank[s] {
                return Err(Error::Domain(format!("transition {s} -> {t} runs against the renewal order")));
            }
            inflow[t] = inflow[t] + mass * p;
        }
    }
    let total: S = pi.iter().copied().sum();
    if !total.is_finite() {
        return Err(Error::Numeric("renewal solve overflowed".into()));
    }
    for v in &mut pi {
        *v = *v / total;
    }
    Ok(pi)
}

/// `‖Zᵀπ − π‖₁`.
pub fn stationary_residual<S: Scalar>(z: &TransitionMatrix<S>, pi: &[S]) -> S {
    l1_distance(&z.apply_transpose(pi), pi)
}

/// Gaussian elimination with partial pivoting; consumes the system.
fn lu_solve<S: Scalar>(mut a: Vec<Vec<S>>, mut b: Vec<S>) -> std::result::Result<Vec<S>, String> {
    let n = b.len();
    let scale = a.iter().flat_map(|r| r.iter()).fold(S::zero(), |m, &v| m.max(v.abs()));
    let threshold = S::epsilon() * S::from_usize_lossy(n) * scale.max(S::one());

    for col in 0..n {
        let (piv, piv_val) =
            (col..n)
                .map(|r| (r, a[r][col].abs()))
                .fold((col, S::zero()), |best, cur| if cur.1 > best.1 { cur } else { best });
        if piv_val <= threshold {
            return Err(format!("singular system: pivot {piv_val} at column {col}"));
        }
        a.swap(col, piv);
        b.swap(col, piv);
        let (upper, lower) = a.split_at_mut(col + 1);
        let pivot_row = &upper[col];
        for (off, row) in lower.iter_mut().enumerate() {
            let f = row[col] / pivot_row[col];
            if f == S::zero() {
                continue;
            }
            row[col] = S::zero();
            for c in col + 1..n {
                row[c] = row[c] - f * pivot_row[c];
            }
            let r = col + 1 + off;
            b[r] = b[r] - f * b[col];
        }
    }

    let mut x = vec![S::zero(); n];
    for r in (0..n).rev() {
        let s: S = (r + 1..n).map(|c| a[r][c] * x[c]).sum();
        x[r] = (b[r] - s) / a[r][r];
    }
    Ok(x)
}
