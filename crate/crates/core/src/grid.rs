use crate::cheb;
use crate::error::{LabError, Result};
use crate::scalar::Real;
use std::sync::Arc;

/// Chebyshev-Lobatto collocation grid on [0, 1] (ascending) with its quadrature weights.
#[derive(Debug, Clone, PartialEq)]
pub struct Grid<T> {
    n: usize,
    nodes: Arc<Vec<T>>,
    weights: Arc<Vec<T>>,
}

pub fn build_grid<T: Real>(n: usize) -> Result<Grid<T>> {
    if n < 8 {
        return Err(LabError::Resolution(format!("grid order N = {n} is below the minimum 8")));
    }
    Ok(Grid {
        n,
        nodes: Arc::new(cheb::lobatto_unit(n)),
        weights: Arc::new(cheb::clenshaw_curtis_unit(n)),
    })
}

impl<T: Real> Grid<T> {
    /// Polynomial order N; there are N+1 nodes.
    pub fn order(&self) -> usize {
        self.n
    }

    pub fn len(&self) -> usize {
        self.n + 1
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn nodes(&self) -> &[T] {
        &self.nodes
    }

    pub fn weights(&self) -> &[T] {
        &self.weights
    }

    pub fn same_as(&self, other: &Grid<T>) -> bool {
        self.n == other.n && (Arc::ptr_eq(&self.nodes, &other.nodes) || self.nodes == other.nodes)
    }

    /// Chebyshev coefficients (in x = 2 rho - 1) of the interpolant through `vals`.
    pub fn coeffs(&self, vals: &[T]) -> Vec<T> {
        cheb::lobatto_values_to_coeffs(vals)
    }

    fn eval_coeffs_at_nodes(&self, c: &[T]) -> Vec<T> {
        let two = T::lit(2.0);
        self.nodes.iter().map(|&r| cheb::cheb_eval(c, two * r - T::one())).collect()
    }

    /// m-th rho-derivative of the interpolant, sampled at the nodes.
    pub fn derivative(&self, vals: &[T], m: usize) -> Vec<T> {
        let mut c = self.coeffs(vals);
        let two = T::lit(2.0);
        for _ in 0..m {
            c = cheb::cheb_der(&c).into_iter().map(|v| v * two).collect();
        }
        self.eval_coeffs_at_nodes(&c)
    }

    /// m-th rho-derivative of the interpolant at rho = 0.
    pub fn derivative_at_zero(&self, vals: &[T], m: usize) -> T {
        let mut c = self.coeffs(vals);
        let two = T::lit(2.0);
        for _ in 0..m {
            c = cheb::cheb_der(&c).into_iter().map(|v| v * two).collect();
        }
        cheb::cheb_eval(&c, -T::one())
    }

    /// Markov bound on sup |f^{(m)}| over [0, 1] for a degree-N interpolant with sup |f| = 1.
    pub fn markov_factor(&self, m: usize) -> T {
        let n2 = T::from_usize_lossy(self.n * self.n);
        (0..m).fold(T::one(), |acc, i| {
            let i = T::from_usize_lossy(i);
            acc * T::lit(2.0) * (n2 - i * i) / (T::lit(2.0) * i + T::one())
        })
    }

    /// Integral from 0 to each node of the interpolant.
    pub fn antiderivative(&self, vals: &[T]) -> Vec<T> {
        let c = self.coeffs(vals);
        let ci = cheb::cheb_int(&c, -T::one());
        self.eval_coeffs_at_nodes(&ci).into_iter().map(|v| v * T::lit(0.5)).collect()
    }

    /// Clenshaw-Curtis quadrature over [0, 1].
    pub fn integrate(&self, vals: &[T]) -> T {
        self.weights.iter().zip(vals).fold(T::zero(), |a, (&w, &v)| a + w * v)
    }

    /// Evaluates the interpolant at an arbitrary rho in [0, 1].
    pub fn interpolate(&self, vals: &[T], rho: T) -> T {
        let c = self.coeffs(vals);
        cheb::cheb_eval(&c, T::lit(2.0) * rho - T::one())
    }
}
