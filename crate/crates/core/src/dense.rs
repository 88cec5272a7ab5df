//! Small dense matrices, used only by the mild-solution oracle.

use crate::Real;

#[derive(Debug, Clone, PartialEq)]
pub struct DenseMatrix<T> {
    n: usize,
    data: Vec<T>,
}

impl<T: Real> DenseMatrix<T> {
    pub fn zeros(n: usize) -> Self {
        Self {
            n,
            data: vec![T::zero(); n * n],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n);
        for i in 0..n {
            m.data[i * n + i] = T::one();
        }
        m
    }

    pub fn from_rows(rows: Vec<Vec<T>>) -> Self {
        let n = rows.len();
        assert!(rows.iter().all(|r| r.len() == n), "matrix must be square");
        Self {
            n,
            data: rows.into_iter().flatten().collect(),
        }
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn get(&self, i: usize, j: usize) -> T {
        self.data[i * self.n + j]
    }

    pub fn scaled(&self, c: T) -> Self {
        Self {
            n: self.n,
            data: self.data.iter().map(|&a| c * a).collect(),
        }
    }

    pub fn add(&self, other: &Self) -> Self {
        Self {
            n: self.n,
            data: self
                .data
                .iter()
                .zip(&other.data)
                .map(|(&a, &b)| a + b)
                .collect(),
        }
    }

    pub fn matmul(&self, other: &Self) -> Self {
        let n = self.n;
        let mut out = vec![T::zero(); n * n];
        for i in 0..n {
            for k in 0..n {
                let a = self.data[i * n + k];
                if a == T::zero() {
                    continue;
                }
                let row = &other.data[k * n..(k + 1) * n];
                let dst = &mut out[i * n..(i + 1) * n];
                for (d, &b) in dst.iter_mut().zip(row) {
                    *d = *d + a * b;
                }
            }
        }
        Self { n, data: out }
    }

    pub fn matvec(&self, x: &[T]) -> Vec<T> {
        self.data
            .chunks(self.n)
            .map(|row| row.iter().zip(x).map(|(&a, &b)| a * b).sum())
            .collect()
    }

    /// Maximum absolute column sum.
    pub fn norm_one(&self) -> T {
        (0..self.n)
            .map(|j| (0..self.n).map(|i| self.get(i, j).abs()).sum::<T>())
            .fold(T::zero(), T::max)
    }

    /// Matrix exponential by scaling and squaring with a degree-18 Taylor
    /// polynomial on the scaled matrix (`||A / 2^s||_1 <= 1/2`).
    pub fn expm(&self) -> Self {
        let norm = self.norm_one();
        let mut squarings = 0usize;
        let mut scale = T::one();
        while norm * scale > T::half() {
            scale = scale * T::half();
            squarings += 1;
        }
        let a = self.scaled(scale);
        // Horner: I + A(I + A/2(I + A/3(...)))
        let id = Self::identity(self.n);
        let mut acc = id.clone();
        for k in (1..=18).rev() {
            acc = id.add(&a.matmul(&acc).scaled(T::one() / T::from_usize_lossy(k)));
        }
        for _ in 0..squarings {
            acc = acc.matmul(&acc);
        }
        acc
    }
}
