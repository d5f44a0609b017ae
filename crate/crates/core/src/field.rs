use crate::error::{LabError, Result};
use crate::grid::Grid;
use crate::scalar::Real;

/// A pair (u1, u2) sampled on a collocation grid.
#[derive(Debug, Clone, PartialEq)]
pub struct StateField<T> {
    pub grid: Grid<T>,
    pub u1: Vec<T>,
    pub u2: Vec<T>,
}

impl<T: Real> StateField<T> {
    pub fn new(grid: Grid<T>, u1: Vec<T>, u2: Vec<T>) -> Result<Self> {
        if u1.len() != grid.len() || u2.len() != grid.len() {
            return Err(LabError::Precondition(format!(
                "field components have lengths {}/{} on a grid with {} nodes",
                u1.len(),
                u2.len(),
                grid.len()
            )));
        }
        Ok(StateField { grid, u1, u2 })
    }

    pub fn zeros(grid: &Grid<T>) -> Self {
        let n = grid.len();
        StateField { grid: grid.clone(), u1: vec![T::zero(); n], u2: vec![T::zero(); n] }
    }

    pub fn from_fn(grid: &Grid<T>, f1: impl Fn(T) -> T, f2: impl Fn(T) -> T) -> Self {
        StateField {
            grid: grid.clone(),
            u1: grid.nodes().iter().map(|&r| f1(r)).collect(),
            u2: grid.nodes().iter().map(|&r| f2(r)).collect(),
        }
    }

    pub fn scaled(&self, a: T) -> Self {
        StateField {
            grid: self.grid.clone(),
            u1: self.u1.iter().map(|&v| a * v).collect(),
            u2: self.u2.iter().map(|&v| a * v).collect(),
        }
    }

    /// a*self + b*other.
    pub fn combine(&self, a: T, other: &Self, b: T) -> Result<Self> {
        if !self.grid.same_as(&other.grid) {
            return Err(LabError::Precondition("fields live on different grids".into()));
        }
        Ok(StateField {
            grid: self.grid.clone(),
            u1: self.u1.iter().zip(&other.u1).map(|(&x, &y)| a * x + b * y).collect(),
            u2: self.u2.iter().zip(&other.u2).map(|(&x, &y)| a * x + b * y).collect(),
        })
    }

    pub fn sup_norm(&self) -> T {
        self.u1.iter().chain(&self.u2).fold(T::zero(), |m, &v| m.max(v.abs()))
    }

    /// Worst violation of u1^{(2j)}(0) = u2^{(2j+1)}(0) = 0 for j < k, each derivative
    /// measured against its Markov bound sup|u| * markov_factor(m).
    pub fn parity_defect(&self, k: usize) -> T {
        let sup = self.sup_norm();
        if sup == T::zero() {
            return T::zero();
        }
        let mut worst = T::zero();
        for j in 0..k {
            for (vals, m) in [(&self.u1, 2 * j), (&self.u2, 2 * j + 1)] {
                let scale = sup * self.grid.markov_factor(m);
                worst = worst.max(self.grid.derivative_at_zero(vals, m).abs() / scale);
            }
        }
        worst
    }

    /// Whether the discrete parity conditions of H^{2k} hold within `tol`.
    pub fn is_parity_class(&self, k: usize, tol: T) -> bool {
        self.parity_defect(k) <= tol
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::build_grid;

    #[test]
    fn parity_diagnostics() {
        let g = build_grid::<f64>(32).unwrap();
        let good = StateField::from_fn(&g, |r| 2.0 * r + r.powi(3), |r| 1.0 - r * r);
        assert!(good.parity_defect(4) < 1e-12);
        let bad = StateField::from_fn(&g, |r| r, |r| r);
        assert!(bad.parity_defect(1) > 1e-6);
        assert!(good.is_parity_class(4, 1e-9) && !bad.is_parity_class(1, 1e-9));
        assert!(StateField::new(g.clone(), vec![0.0; 3], vec![0.0; 33]).is_err());
    }
}
