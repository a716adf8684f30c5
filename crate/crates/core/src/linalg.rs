//! Dense complex linear algebra for pilot-space matrices.
//!
//! Everything here operates on B×B Hermitian matrices where B is the pilot
//! length (8 in the default setup), so an unblocked Cholesky is both clear
//! and fast; no external solver is warranted at this size.

use crate::num::{Real, C};
use std::fmt;

/// Dense row-major complex matrix.
#[derive(Clone, Debug, PartialEq)]
pub struct CMatrix<T> {
    dim: usize,
    data: Vec<C<T>>,
}

impl<T: Real> CMatrix<T> {
    pub fn zeros(dim: usize) -> Self {
        CMatrix {
            dim,
            data: vec![C::new(T::zero(), T::zero()); dim * dim],
        }
    }

    pub fn identity(dim: usize) -> Self {
        let mut m = Self::zeros(dim);
        for i in 0..dim {
            *m.at_mut(i, i) = C::new(T::one(), T::zero());
        }
        m
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    #[inline]
    pub fn at(&self, r: usize, c: usize) -> C<T> {
        self.data[r * self.dim + c]
    }

    #[inline]
    pub fn at_mut(&mut self, r: usize, c: usize) -> &mut C<T> {
        &mut self.data[r * self.dim + c]
    }

    /// `self += w · a`
    pub fn scaled_add(&mut self, a: &CMatrix<T>, w: T) {
        assert_eq!(self.dim, a.dim);
        for (x, y) in self.data.iter_mut().zip(a.data.iter()) {
            *x += *y * w;
        }
    }

    /// `self += w · I`
    pub fn shift_diag(&mut self, w: T) {
        for i in 0..self.dim {
            self.at_mut(i, i).re += w;
        }
    }

    pub fn matvec(&self, x: &[C<T>]) -> Vec<C<T>> {
        assert_eq!(x.len(), self.dim);
        (0..self.dim)
            .map(|r| {
                let mut acc = C::new(T::zero(), T::zero());
                for c in 0..self.dim {
                    acc += self.at(r, c) * x[c];
                }
                acc
            })
            .collect()
    }

    /// Quadratic form `w^H · self · w`.
    pub fn quad_form(&self, w: &[C<T>]) -> C<T> {
        let aw = self.matvec(w);
        dot_h(w, &aw)
    }

    /// Largest entrywise deviation from Hermitian symmetry (diagnostic).
    pub fn hermitian_error(&self) -> T {
        let mut worst = T::zero();
        for r in 0..self.dim {
            for c in 0..self.dim {
                let e = (self.at(r, c) - self.at(c, r).conj()).norm();
                if e > worst {
                    worst = e;
                }
            }
        }
        worst
    }

    /// Cholesky factorization `self = L·L^H` for Hermitian positive-definite
    /// input. Fails on the first non-positive pivot, which doubles as the
    /// positive-definiteness test used by the estimator.
    pub fn cholesky(&self) -> Result<Cholesky<T>, NotPositiveDefinite> {
        let n = self.dim;
        let mut l = vec![C::new(T::zero(), T::zero()); n * n];
        for j in 0..n {
            let mut d = self.at(j, j).re;
            for k in 0..j {
                d = d - l[j * n + k].norm_sqr();
            }
            if !(d > T::zero()) || !d.is_finite() {
                return Err(NotPositiveDefinite { pivot: j });
            }
            let djj = d.sqrt();
            l[j * n + j] = C::new(djj, T::zero());
            for i in (j + 1)..n {
                let mut s = self.at(i, j);
                for k in 0..j {
                    s -= l[i * n + k] * l[j * n + k].conj();
                }
                l[i * n + j] = s / djj;
            }
        }
        Ok(Cholesky { dim: n, l })
    }
}

/// Lower-triangular Cholesky factor of a Hermitian positive-definite matrix.
#[derive(Clone, Debug)]
pub struct Cholesky<T> {
    dim: usize,
    l: Vec<C<T>>,
}

impl<T: Real> Cholesky<T> {
    /// Solve `A x = b` where `A = L·L^H`.
    pub fn solve(&self, b: &[C<T>]) -> Vec<C<T>> {
        let n = self.dim;
        assert_eq!(b.len(), n);
        // Forward: L y = b
        let mut y = b.to_vec();
        for i in 0..n {
            for k in 0..i {
                let lik = self.l[i * n + k];
                y[i] = y[i] - lik * y[k];
            }
            y[i] = y[i] / self.l[i * n + i].re;
        }
        // Backward: L^H x = y
        for i in (0..n).rev() {
            for k in (i + 1)..n {
                let lki = self.l[k * n + i];
                y[i] = y[i] - lki.conj() * y[k];
            }
            y[i] = y[i] / self.l[i * n + i].re;
        }
        y
    }
}

/// Hermitian inner product `a^H · b = Σ conj(a_i)·b_i`.
pub fn dot_h<T: Real>(a: &[C<T>], b: &[C<T>]) -> C<T> {
    debug_assert_eq!(a.len(), b.len());
    let mut acc = C::new(T::zero(), T::zero());
    for (x, y) in a.iter().zip(b.iter()) {
        acc += x.conj() * *y;
    }
    acc
}

/// Returned when a matrix that must be positive definite is not.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct NotPositiveDefinite {
    /// Index of the first failing pivot.
    pub pivot: usize,
}

impl fmt::Display for NotPositiveDefinite {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "matrix is not positive definite (pivot {})", self.pivot)
    }
}

impl std::error::Error for NotPositiveDefinite {}
