//! Parity-adapted Chebyshev representation of H^{2k} states.
//!
//! A state is stored by level: entry 2m is the coefficient of T_{2m+1}(rho) in u1 and
//! entry 2m+1 the coefficient of T_{2m}(rho) in u2. Odd u1 and even u2 satisfy every
//! parity condition at rho = 0, and L maps level <= m into level <= m.

use crate::cheb;
use crate::error::{LabError, Result};
use crate::field::StateField;
use crate::grid::Grid;
use crate::params::Params;
use nalgebra::{DMatrix, DVector};

pub type Modal = DVector<f64>;

/// Trailing fitted coefficients below this fraction of the largest are treated as noise.
pub const FIT_CHOP: f64 = 1e-13;

#[derive(Debug, Clone)]
pub struct ModalSpace {
    params: Params,
    levels: usize,
    lmat: DMatrix<f64>,
    /// Rows: sqrt(w_q) times u1, u2, u1^{(2k)}, u2^{(2k)} at quadrature nodes; G = A^T A.
    analysis: DMatrix<f64>,
    gram: DMatrix<f64>,
}

impl ModalSpace {
    /// Space of parity polynomials with u1 of degree <= 2 levels - 1.
    pub fn new(params: &Params, levels: usize) -> Result<Self> {
        if levels < 2 {
            return Err(LabError::Resolution(format!("modal space needs at least 2 levels, got {levels}")));
        }
        let dim = 2 * levels;
        let mut lmat = DMatrix::zeros(dim, dim);
        for col in 0..dim {
            let mut e = DVector::zeros(dim);
            e[col] = 1.0;
            let (c1, c2) = unpack(&e, levels);
            let (l1, l2) = l_series(params, &c1, &c2);
            lmat.set_column(col, &pack(&l1, &l2, levels));
        }
        // Clenshaw-Curtis on [0, 1] is exact for the degree 2(2 levels - 1) products
        let qn = 4 * levels + 2;
        let nodes: Vec<f64> = cheb::lobatto_unit(qn);
        let weights: Vec<f64> = cheb::clenshaw_curtis_unit(qn);
        let q = nodes.len();
        let mut analysis = DMatrix::zeros(4 * q, dim);
        for col in 0..dim {
            let mut e = DVector::zeros(dim);
            e[col] = 1.0;
            let (c1, c2) = unpack(&e, levels);
            let mut d1 = c1.clone();
            let mut d2 = c2.clone();
            for _ in 0..2 * params.k {
                d1 = cheb::cheb_der(&d1);
                d2 = cheb::cheb_der(&d2);
            }
            for (i, (&x, &w)) in nodes.iter().zip(&weights).enumerate() {
                let sw = w.sqrt();
                analysis[(i, col)] = sw * cheb::cheb_eval(&c1, x);
                analysis[(q + i, col)] = sw * cheb::cheb_eval(&c2, x);
                analysis[(2 * q + i, col)] = sw * cheb::cheb_eval(&d1, x);
                analysis[(3 * q + i, col)] = sw * cheb::cheb_eval(&d2, x);
            }
        }
        let gram = analysis.transpose() * &analysis;
        Ok(ModalSpace { params: *params, levels, lmat, analysis, gram })
    }

    /// Space matching a Lobatto grid of order n: the largest parity space it samples exactly.
    pub fn for_grid_order(params: &Params, n: usize) -> Result<Self> {
        Self::new(params, n / 2)
    }

    pub fn params(&self) -> &Params {
        &self.params
    }

    pub fn levels(&self) -> usize {
        self.levels
    }

    pub fn dim(&self) -> usize {
        2 * self.levels
    }

    pub fn k(&self) -> usize {
        self.params.k
    }

    /// Matrix of L acting on coefficient vectors.
    pub fn lmat(&self) -> &DMatrix<f64> {
        &self.lmat
    }

    /// Gram matrix of the H^{2k} inner product.
    pub fn gram(&self) -> &DMatrix<f64> {
        &self.gram
    }

    pub fn zeros(&self) -> Modal {
        DVector::zeros(self.dim())
    }

    /// The weighted sample vector A u with (u|v) = (A u).(A v).
    pub fn analysis_apply(&self, u: &Modal) -> DVector<f64> {
        &self.analysis * u
    }

    pub fn inner(&self, u: &Modal, v: &Modal) -> f64 {
        (&self.analysis * u).dot(&(&self.analysis * v))
    }

    pub fn norm(&self, u: &Modal) -> f64 {
        (&self.analysis * u).norm()
    }

    /// L2 x L2 norm on [0, 1] (no derivative part).
    pub fn l2_norm(&self, u: &Modal) -> f64 {
        let q = self.analysis.nrows() / 4;
        let a = &self.analysis * u;
        a.rows(0, 2 * q).norm()
    }

    pub fn apply_l(&self, u: &Modal) -> Modal {
        &self.lmat * u
    }

    /// Full Chebyshev series (in rho) of both components.
    pub fn series(&self, u: &Modal) -> (Vec<f64>, Vec<f64>) {
        unpack(u, self.levels)
    }

    pub fn from_series(&self, c1: &[f64], c2: &[f64]) -> Modal {
        pack(c1, c2, self.levels)
    }

    /// Values (u1, u2) at rho; rho outside [0, 1] extends the polynomial.
    pub fn eval(&self, u: &Modal, rho: f64) -> (f64, f64) {
        let (c1, c2) = unpack(u, self.levels);
        (cheb::cheb_eval(&c1, rho), cheb::cheb_eval(&c2, rho))
    }

    /// Series of int_0^rho u2.
    pub fn u2_antiderivative(&self, u: &Modal) -> Vec<f64> {
        let (_, c2) = unpack(u, self.levels);
        cheb::cheb_int(&c2, 0.0)
    }

    pub fn to_field(&self, u: &Modal, grid: &Grid<f64>) -> StateField<f64> {
        let (c1, c2) = unpack(u, self.levels);
        StateField::from_fn(grid, |r| cheb::cheb_eval(&c1, r), |r| cheb::cheb_eval(&c2, r))
    }

    /// Least-squares fit of a sampled field by the parity basis.
    pub fn from_field(&self, f: &StateField<f64>) -> Result<Modal> {
        self.from_samples(f.grid.nodes(), &f.u1, &f.u2)
    }

    /// Least-squares fit of (u1, u2) sampled at arbitrary points of [0, 1].
    pub fn from_samples(&self, nodes: &[f64], u1: &[f64], u2: &[f64]) -> Result<Modal> {
        if u1.len() != nodes.len() || u2.len() != nodes.len() {
            return Err(LabError::Precondition("sample columns differ in length".into()));
        }
        if nodes.iter().any(|r| !(0.0..=1.0).contains(r)) {
            return Err(LabError::Precondition("sample points must lie in [0, 1]".into()));
        }
        if nodes.len() < self.levels {
            return Err(LabError::Resolution(format!(
                "{} samples cannot determine {} modal levels",
                nodes.len(),
                self.levels
            )));
        }
        let mut v1 = DMatrix::zeros(nodes.len(), self.levels);
        let mut v2 = DMatrix::zeros(nodes.len(), self.levels);
        for (i, &r) in nodes.iter().enumerate() {
            for m in 0..self.levels {
                v1[(i, m)] = t_n(2 * m + 1, r);
                v2[(i, m)] = t_n(2 * m, r);
            }
        }
        let solve = |v: DMatrix<f64>, b: &[f64]| -> Result<DVector<f64>> {
            let svd = v.svd(true, true);
            svd.solve(&DVector::from_column_slice(b), 1e-14)
                .map_err(|e| LabError::Resolution(format!("modal fit failed: {e}")))
        };
        // the H^{2k} weights grow like m^{4k}, so rounding noise in the tail would dominate the norm
        let chop = |mut a: DVector<f64>| {
            let tol = FIT_CHOP * a.amax();
            let keep = a.iter().rposition(|c| c.abs() > tol).map_or(0, |i| i + 1);
            a.rows_mut(keep, a.len() - keep).fill(0.0);
            a
        };
        let a1 = chop(solve(v1, u1)?);
        let a2 = chop(solve(v2, u2)?);
        let mut out = self.zeros();
        for m in 0..self.levels {
            out[2 * m] = a1[m];
            out[2 * m + 1] = a2[m];
        }
        Ok(out)
    }

    /// The nonlinearity, with the product series truncated back to the space.
    pub fn apply_n(&self, u: &Modal) -> Modal {
        let (_, c2) = unpack(u, self.levels);
        if c2.iter().all(|&v| v == 0.0) {
            return self.zeros();
        }
        let ut = cheb::cheb_divx(&cheb::cheb_int(&c2, 0.0));
        // Horner: w (a_2 + w (a_3 + ... + w a_p))
        let p = self.params.p;
        let mut acc: Vec<f64> = vec![self.params.nonlinear_coeff(p)];
        for j in (2..p).rev() {
            acc = cheb::cheb_mul(&acc, &ut);
            acc[0] += self.params.nonlinear_coeff(j);
        }
        let poly = cheb::cheb_mul(&cheb::cheb_mul(&acc, &ut), &ut);
        let first = cheb::cheb_mulx(&poly);
        pack(&first, &[], self.levels)
    }

    /// Same space at another Sobolev order.
    pub fn with_k(&self, k: usize) -> Result<Self> {
        let mut params = self.params;
        params.k = k;
        Self::new(&params, self.levels)
    }
}

fn t_n(n: usize, x: f64) -> f64 {
    if x.abs() <= 1.0 {
        (n as f64 * x.acos()).cos()
    } else {
        let mut c = vec![0.0; n + 1];
        c[n] = 1.0;
        cheb::cheb_eval(&c, x)
    }
}

fn unpack(u: &Modal, levels: usize) -> (Vec<f64>, Vec<f64>) {
    let mut c1 = vec![0.0; 2 * levels];
    let mut c2 = vec![0.0; 2 * levels - 1];
    for m in 0..levels {
        c1[2 * m + 1] = u[2 * m];
        c2[2 * m] = u[2 * m + 1];
    }
    (c1, c2)
}

fn pack(c1: &[f64], c2: &[f64], levels: usize) -> Modal {
    let mut out = DVector::zeros(2 * levels);
    for m in 0..levels {
        if let Some(&v) = c1.get(2 * m + 1) {
            out[2 * m] = v;
        }
        if let Some(&v) = c2.get(2 * m) {
            out[2 * m + 1] = v;
        }
    }
    out
}

fn l_series(params: &Params, c1: &[f64], c2: &[f64]) -> (Vec<f64>, Vec<f64>) {
    let pc0 = params.p as f64 * params.c0;
    let d1 = cheb::cheb_der(c1);
    let d2 = cheb::cheb_der(c2);
    let i2 = cheb::cheb_int(c2, 0.0);
    let x_d1 = cheb::cheb_mulx(&d1);
    let x_d2 = cheb::cheb_mulx(&d2);
    let n = c1.len().max(c2.len()) + 2;
    let at = |v: &[f64], i: usize| v.get(i).copied().unwrap_or(0.0);
    let first = (0..n).map(|i| -at(&x_d1, i) + at(&d2, i) + pc0 * at(&i2, i)).collect();
    let second = (0..n).map(|i| at(&d1, i) - at(&x_d2, i)).collect();
    (first, second)
}
