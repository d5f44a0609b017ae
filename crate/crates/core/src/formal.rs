//! Pointwise and integral operators acting on sampled fields.

use crate::error::{LabError, Result};
use crate::field::StateField;
use crate::grid::Grid;
use crate::params::Parameters;
use crate::scalar::Real;

fn domain_tol<T: Real>(scale: T) -> T {
    T::epsilon().sqrt() * T::lit(1e-2) * scale.max(T::one())
}

/// The linearized operator
/// (-rho u1' + u2' + p c0 int_0^rho u2, u1' - rho u2')
/// with derivative and antiderivative supplied by the caller.
pub fn apply_l_formal<T, D, I>(params: &Parameters<T>, u: &StateField<T>, diff: D, integ: I) -> Result<StateField<T>>
where
    T: Real,
    D: Fn(&[T]) -> Vec<T>,
    I: Fn(&[T]) -> Vec<T>,
{
    if u.u1[0].abs() > domain_tol(u.sup_norm()) {
        return Err(LabError::Precondition(format!("u1(0) = {} but the domain requires u1(0) = 0", u.u1[0])));
    }
    let d1 = diff(&u.u1);
    let d2 = diff(&u.u2);
    let i2 = integ(&u.u2);
    let pc0 = params.pf() * params.c0;
    let rho = u.grid.nodes();
    let v1 = (0..rho.len()).map(|i| -rho[i] * d1[i] + d2[i] + pc0 * i2[i]).collect();
    let v2 = (0..rho.len()).map(|i| d1[i] - rho[i] * d2[i]).collect();
    StateField::new(u.grid.clone(), v1, v2)
}

/// Same as [`apply_l_formal`] with the grid's own spectral derivative and antiderivative.
pub fn apply_l_spectral<T: Real>(params: &Parameters<T>, u: &StateField<T>) -> Result<StateField<T>> {
    let g = u.grid.clone();
    let g2 = u.grid.clone();
    apply_l_formal(params, u, move |v| g.derivative(v, 1), move |v| g2.antiderivative(v))
}

/// Mean value (1/rho) int_0^rho u2, continued by u2(0) at rho = 0.
pub fn hardy_average<T: Real>(grid: &Grid<T>, u2: &[T]) -> Vec<T> {
    let a = grid.antiderivative(u2);
    grid.nodes()
        .iter()
        .zip(a)
        .zip(u2)
        .map(|((&r, ai), &v)| if r == T::zero() { v } else { ai / r })
        .collect()
}

/// The nonlinearity (sum_{j=2}^p binom(p,j) c0^{(p-j)/(p-1)} rho utilde^j, 0).
pub fn apply_n<T: Real>(params: &Parameters<T>, u: &StateField<T>) -> StateField<T> {
    let ut = hardy_average(&u.grid, &u.u2);
    let coeffs: Vec<T> = (2..=params.p).map(|j| params.nonlinear_coeff(j)).collect();
    let v1 = u
        .grid
        .nodes()
        .iter()
        .zip(&ut)
        .map(|(&r, &w)| {
            // Horner in w, starting from the w^p term
            let mut acc = T::zero();
            for &c in coeffs.iter().rev() {
                acc = (acc + c) * w;
            }
            r * acc * w
        })
        .collect();
    StateField { grid: u.grid.clone(), u1: v1, u2: vec![T::zero(); u.grid.len()] }
}

/// Hardy inequality, first form: returns (int |v|^2, int x^{-(2k-2)} |(x^k v)'|^2).
/// The right integrand is evaluated as |k v + x v'|^2, with the singular power cancelled.
pub fn hardy_check_part1<T: Real>(grid: &Grid<T>, v: &[T], k: usize) -> (T, T) {
    let dv = grid.derivative(v, 1);
    let kf = T::from_usize_lossy(k);
    let lhs: Vec<T> = v.iter().map(|&a| a * a).collect();
    let rhs: Vec<T> = grid
        .nodes()
        .iter()
        .zip(v.iter().zip(&dv))
        .map(|(&x, (&a, &da))| {
            let t = kf * a + x * da;
            t * t
        })
        .collect();
    (grid.integrate(&lhs), grid.integrate(&rhs))
}

/// Hardy inequality, second form: returns (int |(u/x)^{(j)}|^2, int |u^{(j+1)}|^2) for u(0) = 0.
pub fn hardy_check_part2<T: Real>(grid: &Grid<T>, u: &[T], j: usize) -> Result<(T, T)> {
    let scale = u.iter().fold(T::zero(), |m, &v| m.max(v.abs()));
    if u[0].abs() > domain_tol(scale) {
        return Err(LabError::Precondition(format!("u(0) = {} but u(0) = 0 is required", u[0])));
    }
    let du0 = grid.derivative_at_zero(u, 1);
    let q: Vec<T> = grid
        .nodes()
        .iter()
        .zip(u)
        .map(|(&x, &a)| if x == T::zero() { du0 } else { a / x })
        .collect();
    let dq = grid.derivative(&q, j);
    let du = grid.derivative(u, j + 1);
    let lhs: Vec<T> = dq.iter().map(|&a| a * a).collect();
    let rhs: Vec<T> = du.iter().map(|&a| a * a).collect();
    Ok((grid.integrate(&lhs), grid.integrate(&rhs)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::build_grid;

    fn p3() -> Parameters<f64> {
        Parameters::new(3, 1.0, 4).unwrap()
    }

    #[test]
    fn l_examples() {
        let g = build_grid::<f64>(16).unwrap();
        let u = StateField::from_fn(&g, |r| r, |_| 0.0);
        let v = apply_l_spectral(&p3(), &u).unwrap();
        for (i, &r) in g.nodes().iter().enumerate() {
            assert!((v.u1[i] + r).abs() < 1e-12 && (v.u2[i] - 1.0).abs() < 1e-12);
        }
        let gauge = StateField::from_fn(&g, |r| 2.0 * r, |_| 1.0);
        let v = apply_l_spectral(&p3(), &gauge).unwrap();
        let diff = v.combine(1.0, &gauge, -2.0).unwrap();
        assert!(diff.sup_norm() < 1e-12);
        let z = apply_l_spectral(&p3(), &StateField::zeros(&g)).unwrap();
        assert_eq!(z.sup_norm(), 0.0);
        let off = StateField::from_fn(&g, |_| 1.0, |_| 0.0);
        assert!(apply_l_spectral(&p3(), &off).is_err());
    }

    #[test]
    fn averages() {
        let g = build_grid::<f64>(12).unwrap();
        let c = hardy_average(&g, &vec![3.0; 13]);
        assert!(c.iter().all(|&v| (v - 3.0).abs() < 1e-13));
        let sq: Vec<f64> = g.nodes().iter().map(|r| r * r).collect();
        let a = hardy_average(&g, &sq);
        for (i, &r) in g.nodes().iter().enumerate() {
            assert!((a[i] - r * r / 3.0).abs() < 1e-14);
        }
    }

    #[test]
    fn nonlinearity_examples() {
        let g = build_grid::<f64>(16).unwrap();
        let a = 0.7;
        let n = apply_n(&p3(), &StateField::from_fn(&g, |r| r, |_| a));
        for (i, &r) in g.nodes().iter().enumerate() {
            let expect = 3.0 * 2f64.sqrt() * r * a * a + r * a * a * a;
            assert!((n.u1[i] - expect).abs() < 1e-13);
            assert_eq!(n.u2[i], 0.0);
        }
        let zero = apply_n(&p3(), &StateField::from_fn(&g, |r| r.sin(), |_| 0.0));
        assert_eq!(zero.sup_norm(), 0.0);
    }

    #[test]
    fn hardy_examples() {
        let g = build_grid::<f64>(16).unwrap();
        let ones = vec![1.0; 17];
        let (l, r) = hardy_check_part1(&g, &ones, 1);
        assert!((l - 1.0).abs() < 1e-14 && (r - 1.0).abs() < 1e-14);
        let x: Vec<f64> = g.nodes().to_vec();
        let (l, r) = hardy_check_part1(&g, &x, 1);
        assert!((l - 1.0 / 3.0).abs() < 1e-14 && (r - 4.0 / 3.0).abs() < 1e-13);
        let (l, _) = hardy_check_part2(&g, &x, 1).unwrap();
        assert!(l.abs() < 1e-20);
        let x2: Vec<f64> = x.iter().map(|r| r * r).collect();
        let (l, r) = hardy_check_part2(&g, &x2, 0).unwrap();
        assert!((l - 1.0 / 3.0).abs() < 1e-13 && (r - 4.0 / 3.0).abs() < 1e-12);
        let (l, r) = hardy_check_part2(&g, &x2, 1).unwrap();
        assert!((l - 1.0).abs() < 1e-12 && (r - 4.0).abs() < 1e-11);
        assert!(hardy_check_part2(&g, &ones, 0).is_err());
    }
}
