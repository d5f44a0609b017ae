//! Nodal collocation of L on the Lobatto grid.

use crate::cheb;
use crate::error::{LabError, Result};
use crate::field::StateField;
use crate::grid::Grid;
use crate::params::Params;
use nalgebra::{Complex, DMatrix, DVector};

#[derive(Debug, Clone)]
pub struct DiscretizedOperator {
    pub params: Params,
    pub grid: Grid<f64>,
    /// d/drho on the nodes.
    pub d: DMatrix<f64>,
    /// (J u)_i = int_0^{rho_i} u.
    pub j: DMatrix<f64>,
    /// L on stacked (u1, u2); row 0 is replaced by the boundary functional u1(0).
    pub lmat: DMatrix<f64>,
    /// Discrete H^{2k} Gram matrix on stacked node values.
    pub g2k: DMatrix<f64>,
}

pub fn discretize_l(params: &Params, grid: &Grid<f64>) -> Result<DiscretizedOperator> {
    let nodes = grid.nodes();
    if nodes.windows(2).any(|w| w[1] <= w[0]) {
        return Err(LabError::Resolution("grid nodes are not distinct and ascending".into()));
    }
    let n = grid.len();
    let d = cheb::lobatto_diff_matrix::<f64>(grid.order());
    let j = cheb::lobatto_antiderivative_matrix::<f64>(grid.order());
    let rho = DMatrix::from_diagonal(&DVector::from_column_slice(nodes));
    let pc0 = params.p as f64 * params.c0;
    let mut lmat = DMatrix::zeros(2 * n, 2 * n);
    lmat.view_mut((0, 0), (n, n)).copy_from(&(-(&rho * &d)));
    lmat.view_mut((0, n), (n, n)).copy_from(&(&d + pc0 * &j));
    lmat.view_mut((n, 0), (n, n)).copy_from(&d);
    lmat.view_mut((n, n), (n, n)).copy_from(&(-(&rho * &d)));
    lmat.row_mut(0).fill(0.0);
    lmat[(0, 0)] = 1.0;

    let w = DMatrix::from_diagonal(&DVector::from_column_slice(grid.weights()));
    let mut dk = DMatrix::identity(n, n);
    for _ in 0..2 * params.k {
        dk = &d * dk;
    }
    let block = &w + dk.transpose() * &w * &dk;
    let mut g2k = DMatrix::zeros(2 * n, 2 * n);
    g2k.view_mut((0, 0), (n, n)).copy_from(&block);
    g2k.view_mut((n, n), (n, n)).copy_from(&block);
    Ok(DiscretizedOperator { params: *params, grid: grid.clone(), d, j, lmat, g2k })
}

fn stack(u: &StateField<f64>) -> DVector<f64> {
    DVector::from_iterator(2 * u.u1.len(), u.u1.iter().chain(&u.u2).copied())
}

impl DiscretizedOperator {
    pub fn n_nodes(&self) -> usize {
        self.grid.len()
    }

    pub fn apply(&self, u: &StateField<f64>) -> Result<StateField<f64>> {
        if !u.grid.same_as(&self.grid) {
            return Err(LabError::Precondition("field and operator use different grids".into()));
        }
        let v = &self.lmat * stack(u);
        let n = self.n_nodes();
        StateField::new(self.grid.clone(), v.rows(0, n).iter().copied().collect(), v.rows(n, n).iter().copied().collect())
    }

    /// Eigenvalues of the collocation matrix with the unknown u1(0) eliminated.
    pub fn collocation_eigenvalues(&self) -> Vec<Complex<f64>> {
        let m = self.lmat.nrows();
        let keep: Vec<usize> = (1..m).collect();
        let reduced = self.lmat.select_rows(&keep).select_columns(&keep);
        let mut ev: Vec<Complex<f64>> = reduced.complex_eigenvalues().iter().copied().collect();
        ev.sort_by(|a, b| b.re.partial_cmp(&a.re).unwrap_or(std::cmp::Ordering::Equal));
        ev
    }
}

/// Discrete H^{2k} product with Clenshaw-Curtis weights and D^{2k} derivatives.
pub fn sobolev_inner(op: &DiscretizedOperator, u: &StateField<f64>, v: &StateField<f64>) -> Result<f64> {
    if !u.grid.same_as(&op.grid) || !v.grid.same_as(&op.grid) {
        return Err(LabError::Precondition("fields and operator use different grids".into()));
    }
    Ok(stack(u).dot(&(&op.g2k * stack(v))))
}
