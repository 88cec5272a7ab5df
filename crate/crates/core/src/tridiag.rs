//! Tridiagonal matrices and the Thomas algorithm.

use crate::error::{DftrError, Result};
use crate::Real;

/// Square tridiagonal matrix stored by diagonals.
///
/// `lower[i]` multiplies `x[i]` in row `i + 1`, `upper[i]` multiplies
/// `x[i + 1]` in row `i`.
#[derive(Debug, Clone, PartialEq)]
pub struct Tridiagonal<T> {
    pub lower: Vec<T>,
    pub diag: Vec<T>,
    pub upper: Vec<T>,
}

impl<T: Real> Tridiagonal<T> {
    pub fn new(lower: Vec<T>, diag: Vec<T>, upper: Vec<T>) -> Result<Self> {
        let n = diag.len();
        if n == 0 || lower.len() + 1 != n || upper.len() + 1 != n {
            return Err(DftrError::Contract(format!(
                "tridiagonal band lengths {}/{}/{} are inconsistent",
                lower.len(),
                n,
                upper.len()
            )));
        }
        Ok(Self { lower, diag, upper })
    }

    pub fn identity(n: usize) -> Self {
        Self {
            lower: vec![T::zero(); n.saturating_sub(1)],
            diag: vec![T::one(); n],
            upper: vec![T::zero(); n.saturating_sub(1)],
        }
    }

    pub fn dim(&self) -> usize {
        self.diag.len()
    }

    /// `alpha * self + beta * I`.
    pub fn affine(&self, alpha: T, beta: T) -> Self {
        Self {
            lower: self.lower.iter().map(|&a| alpha * a).collect(),
            diag: self.diag.iter().map(|&a| alpha * a + beta).collect(),
            upper: self.upper.iter().map(|&a| alpha * a).collect(),
        }
    }

    /// Adds `shift[i]` to the main diagonal.
    pub fn add_diagonal(&mut self, shift: &[T]) {
        debug_assert_eq!(shift.len(), self.dim());
        for (d, &s) in self.diag.iter_mut().zip(shift) {
            *d = *d + s;
        }
    }

    pub fn apply(&self, x: &[T]) -> Vec<T> {
        let n = self.dim();
        assert_eq!(x.len(), n, "vector length must match matrix dimension");
        let mut y = Vec::with_capacity(n);
        for i in 0..n {
            let mut acc = self.diag[i] * x[i];
            if i > 0 {
                acc = acc + self.lower[i - 1] * x[i - 1];
            }
            if i + 1 < n {
                acc = acc + self.upper[i] * x[i + 1];
            }
            y.push(acc);
        }
        y
    }

    /// Solves `self * x = rhs` by forward elimination and back substitution.
    ///
    /// No pivoting: the matrices assembled in this crate are diagonally
    /// dominant after the shifts applied by the callers.
    pub fn solve(&self, rhs: &[T]) -> Result<Vec<T>> {
        let n = self.dim();
        if rhs.len() != n {
            return Err(DftrError::Contract(format!(
                "right-hand side has length {} for a {n}x{n} system",
                rhs.len()
            )));
        }
        let mut c = vec![T::zero(); n];
        let mut d = vec![T::zero(); n];
        let mut pivot = self.diag[0];
        if pivot == T::zero() || !pivot.is_finite() {
            return Err(DftrError::ZeroPivot { row: 0 });
        }
        if n > 1 {
            c[0] = self.upper[0] / pivot;
        }
        d[0] = rhs[0] / pivot;
        for i in 1..n {
            pivot = self.diag[i] - self.lower[i - 1] * c[i - 1];
            if pivot == T::zero() || !pivot.is_finite() {
                return Err(DftrError::ZeroPivot { row: i });
            }
            if i + 1 < n {
                c[i] = self.upper[i] / pivot;
            }
            d[i] = (rhs[i] - self.lower[i - 1] * d[i - 1]) / pivot;
        }
        for i in (0..n - 1).rev() {
            d[i] = d[i] - c[i] * d[i + 1];
        }
        Ok(d)
    }

    /// Row-major dense copy.
    pub fn to_dense(&self) -> Vec<Vec<T>> {
        let n = self.dim();
        let mut m = vec![vec![T::zero(); n]; n];
        for i in 0..n {
            m[i][i] = self.diag[i];
            if i > 0 {
                m[i][i - 1] = self.lower[i - 1];
            }
            if i + 1 < n {
                m[i][i + 1] = self.upper[i];
            }
        }
        m
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample() -> Tridiagonal<f64> {
        Tridiagonal::new(
            vec![1.0, -2.0, 0.5],
            vec![4.0, 5.0, 6.0, 3.0],
            vec![1.0, 1.0, -1.0],
        )
        .unwrap()
    }

    #[test]
    fn solve_inverts_apply() {
        let m = sample();
        let x = vec![1.0, -2.0, 3.0, 0.25];
        let b = m.apply(&x);
        let y = m.solve(&b).unwrap();
        for (a, b) in x.iter().zip(&y) {
            assert!((a - b).abs() < 1e-14);
        }
    }

    #[test]
    fn one_by_one() {
        let m = Tridiagonal::new(vec![], vec![2.0], vec![]).unwrap();
        assert_eq!(m.solve(&[3.0]).unwrap(), vec![1.5]);
    }

    #[test]
    fn zero_pivot_reported() {
        let m = Tridiagonal::new(vec![1.0], vec![1.0, 1.0], vec![1.0]).unwrap();
        assert_eq!(m.solve(&[1.0, 1.0]), Err(DftrError::ZeroPivot { row: 1 }));
    }

    #[test]
    fn bad_bands_rejected() {
        assert!(Tridiagonal::<f64>::new(vec![1.0, 2.0], vec![1.0, 1.0], vec![1.0]).is_err());
    }

    #[test]
    fn dense_matches_apply() {
        let m = sample();
        let dense = m.to_dense();
        let x = [0.3, -1.0, 2.0, 5.0];
        let y = m.apply(&x);
        for i in 0..4 {
            let yi: f64 = (0..4).map(|j| dense[i][j] * x[j]).sum();
            assert!((yi - y[i]).abs() < 1e-15);
        }
    }
}
