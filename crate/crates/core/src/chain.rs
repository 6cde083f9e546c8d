//! Sparse row-stochastic transition matrices.

use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// Transition matrix stored as sorted sparse rows. Absent entries are exact
/// zeros.
#[derive(Debug, Clone, PartialEq)]
pub struct TransitionMatrix<S = f64> {
    dim: usize,
    rows: Vec<Vec<(usize, S)>>,
}

impl<S: Scalar> TransitionMatrix<S> {
    pub fn zeros(dim: usize) -> Self {
        Self { dim, rows: vec![Vec::new(); dim] }
    }

    pub fn from_dense(rows: &[Vec<S>]) -> Result<Self> {
        let dim = rows.len();
        let mut m = Self::zeros(dim);
        for (r, row) in rows.iter().enumerate() {
            if row.len() != dim {
                return Err(Error::Domain(format!("row {r} has {} entries, expected {dim}", row.len())));
            }
            for (c, &p) in row.iter().enumerate() {
                m.add(r, c, p);
            }
        }
        Ok(m)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Adds `p` to entry `(row, col)`. Zero contributions are not stored.
    pub fn add(&mut self, row: usize, col: usize, p: S) {
        assert!(row < self.dim && col < self.dim, "entry ({row}, {col}) outside {0}x{0}", self.dim);
        if p == S::zero() {
            return;
        }
        let entries = &mut self.rows[row];
        match entries.last_mut() {
            Some(last) if last.0 == col => last.1 = last.1 + p,
            Some(last) if last.0 < col => entries.push((col, p)),
            None => entries.push((col, p)),
            _ => match entries.binary_search_by_key(&col, |e| e.0) {
                Ok(pos) => entries[pos].1 = entries[pos].1 + p,
                Err(pos) => entries.insert(pos, (col, p)),
            },
        }
    }

    pub fn get(&self, row: usize, col: usize) -> S {
        self.rows[row]
            .binary_search_by_key(&col, |e| e.0)
            .map(|pos| self.rows[row][pos].1)
            .unwrap_or_else(|_| S::zero())
    }

    pub fn row(&self, row: usize) -> &[(usize, S)] {
        &self.rows[row]
    }

    pub fn row_sums(&self) -> Vec<S> {
        self.rows.iter().map(|r| r.iter().map(|e| e.1).sum()).collect()
    }

    /// Largest `|Σ_l Z[k][l] − 1|` over rows, or an error if any entry leaves
    /// `[0, 1]`.
    pub fn stochastic_defect(&self) -> Result<S> {
        let mut worst = S::zero();
        for (r, row) in self.rows.iter().enumerate() {
            for &(c, p) in row {
                if !(p >= S::zero() && p <= S::one()) {
                    return Err(Error::Numeric(format!("entry ({r}, {c}) = {p} outside [0, 1]")));
                }
            }
            let s: S = row.iter().map(|e| e.1).sum();
            worst = worst.max((s - S::one()).abs());
        }
        Ok(worst)
    }

    pub fn is_row_stochastic(&self, tol: S) -> bool {
        self.stochastic_defect().map(|d| d <= tol).unwrap_or(false)
    }

    /// One step of the chain: returns `Zᵀ π`.
    pub fn apply_transpose(&self, pi: &[S]) -> Vec<S> {
        assert_eq!(pi.len(), self.dim);
        let mut out = vec![S::zero(); self.dim];
        for (row, &mass) in self.rows.iter().zip(pi) {
            if mass == S::zero() {
                continue;
            }
            for &(c, p) in row {
                out[c] = out[c] + mass * p;
            }
        }
        out
    }

    pub fn to_dense(&self) -> Vec<Vec<S>> {
        let mut dense = vec![vec![S::zero(); self.dim]; self.dim];
        for (r, row) in self.rows.iter().enumerate() {
            for &(c, p) in row {
                dense[r][c] = p;
            }
        }
        dense
    }

    pub fn nnz(&self) -> usize {
        self.rows.iter().map(Vec::len).sum()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn add_merges_and_sorts() {
        let mut m = TransitionMatrix::<f64>::zeros(3);
        m.add(0, 2, 0.25);
        m.add(0, 0, 0.25);
        m.add(0, 2, 0.25);
        m.add(0, 1, 0.25);
        m.add(0, 1, 0.0);
        assert_eq!(m.row(0), &[(0, 0.25), (1, 0.25), (2, 0.5)]);
        assert_eq!(m.get(0, 2), 0.5);
        assert_eq!(m.get(1, 1), 0.0);
    }

    #[test]
    fn transpose_step() {
        let m = TransitionMatrix::from_dense(&[vec![0.9, 0.1], vec![0.5, 0.5]]).unwrap();
        let next = m.apply_transpose(&[1.0, 0.0]);
        assert_eq!(next, vec![0.9, 0.1]);
        assert!(m.is_row_stochastic(1e-15));
    }

    #[test]
    fn out_of_range_entry_detected() {
        let m = TransitionMatrix::from_dense(&[vec![1.5, -0.5], vec![0.5, 0.5]]).unwrap();
        assert!(m.stochastic_defect().is_err());
        assert!(!m.is_row_stochastic(1e-9));
    }
}
