//! Thomas algorithm for tridiagonal systems over real or complex scalars.

use crate::error::{Error, Result};
use std::ops::{Add, Div, Mul, Sub};

pub trait Scalar:
    Copy + Default + Add<Output = Self> + Sub<Output = Self> + Mul<Output = Self> + Div<Output = Self>
{
    fn magnitude(self) -> f64;
}

impl Scalar for f64 {
    fn magnitude(self) -> f64 {
        self.abs()
    }
}

impl Scalar for num_complex::Complex64 {
    fn magnitude(self) -> f64 {
        self.norm()
    }
}

/// Tridiagonal matrix: `lower[i]` couples row i+1 to column i, `upper[i]`
/// couples row i to column i+1.
#[derive(Debug, Clone)]
pub struct Tridiag<T> {
    pub lower: Vec<T>,
    pub diag: Vec<T>,
    pub upper: Vec<T>,
}

/// LU factors for repeated solves with the same matrix.
#[derive(Debug, Clone)]
pub struct TridiagLu<T> {
    lower: Vec<T>,
    cprime: Vec<T>,
    denom: Vec<T>,
}

impl<T: Scalar> Tridiag<T> {
    pub fn new(n: usize) -> Self {
        Tridiag {
            lower: vec![T::default(); n.saturating_sub(1)],
            diag: vec![T::default(); n],
            upper: vec![T::default(); n.saturating_sub(1)],
        }
    }

    pub fn len(&self) -> usize {
        self.diag.len()
    }

    pub fn is_empty(&self) -> bool {
        self.diag.is_empty()
    }

    pub fn apply(&self, x: &[T]) -> Vec<T> {
        let n = self.len();
        (0..n)
            .map(|i| {
                let mut s = self.diag[i] * x[i];
                if i > 0 {
                    s = s + self.lower[i - 1] * x[i - 1];
                }
                if i + 1 < n {
                    s = s + self.upper[i] * x[i + 1];
                }
                s
            })
            .collect()
    }

    pub fn factor(&self) -> Result<TridiagLu<T>> {
        let n = self.len();
        let mut cprime = vec![T::default(); n];
        let mut denom = vec![T::default(); n];
        let mut prev_c = T::default();
        for i in 0..n {
            let d = if i == 0 { self.diag[0] } else { self.diag[i] - self.lower[i - 1] * prev_c };
            if !(d.magnitude() > 0.0 && d.magnitude().is_finite()) {
                return Err(Error::Singular(format!("zero pivot at row {i}")));
            }
            denom[i] = d;
            if i + 1 < n {
                prev_c = self.upper[i] / d;
                cprime[i] = prev_c;
            }
        }
        Ok(TridiagLu { lower: self.lower.clone(), cprime, denom })
    }

    pub fn solve(&self, rhs: &[T]) -> Result<Vec<T>> {
        Ok(self.factor()?.solve(rhs))
    }
}

impl<T: Scalar> TridiagLu<T> {
    pub fn solve(&self, rhs: &[T]) -> Vec<T> {
        let n = self.denom.len();
        let mut x = vec![T::default(); n];
        x[0] = rhs[0] / self.denom[0];
        for i in 1..n {
            x[i] = (rhs[i] - self.lower[i - 1] * x[i - 1]) / self.denom[i];
        }
        for i in (0..n - 1).rev() {
            x[i] = x[i] - self.cprime[i] * x[i + 1];
        }
        x
    }
}
