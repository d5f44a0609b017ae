//! Chebyshev series and Lobatto-grid utilities.
//!
//! Coefficient vectors are in the first-kind basis T_n on [-1, 1]. Grids live on
//! [0, 1] with rho = (1 + x)/2.

use crate::scalar::Real;
use nalgebra::DMatrix;

/// Chebyshev-Lobatto nodes mapped to [0, 1], ascending, with 0 and 1 included.
pub fn lobatto_unit<T: Real>(n: usize) -> Vec<T> {
    let two = T::lit(2.0);
    (0..=n)
        .map(|i| {
            // sin form keeps the grid exactly symmetric about 1/2
            let arg = T::PI() * T::from_usize_lossy(2 * i) / (two * T::from_usize_lossy(n))
                - T::FRAC_PI_2();
            let x = if 2 * i == n { T::zero() } else { arg.sin() };
            let rho = (T::one() + x) / two;
            if i == 0 {
                T::zero()
            } else if i == n {
                T::one()
            } else {
                rho
            }
        })
        .collect()
}

/// Node values on `lobatto_unit(n)` -> Chebyshev coefficients of the interpolant in x = 2 rho - 1.
pub fn lobatto_values_to_coeffs<T: Real>(vals: &[T]) -> Vec<T> {
    let n = vals.len() - 1;
    let nf = T::from_usize_lossy(n);
    let half = T::lit(0.5);
    let mut c = vec![T::zero(); n + 1];
    for (k, ck) in c.iter_mut().enumerate() {
        let mut s = T::zero();
        for (i, &v) in vals.iter().enumerate() {
            // ascending index i corresponds to x = -cos(pi i / n)
            let ang = T::PI() * T::from_usize_lossy((i * k) % (2 * n)) / nf;
            let sign = if k % 2 == 1 { -T::one() } else { T::one() };
            let w = if i == 0 || i == n { half } else { T::one() };
            s += w * v * sign * ang.cos();
        }
        let mut val = T::lit(2.0) * s / nf;
        if k == 0 || k == n {
            val *= half;
        }
        *ck = val;
    }
    c
}

/// Clenshaw evaluation of a Chebyshev series at x in [-1, 1].
pub fn cheb_eval<T: Real>(c: &[T], x: T) -> T {
    let mut b1 = T::zero();
    let mut b2 = T::zero();
    let two_x = x + x;
    for &ck in c.iter().skip(1).rev() {
        let b0 = ck + two_x * b1 - b2;
        b2 = b1;
        b1 = b0;
    }
    match c.first() {
        Some(&c0) => c0 + x * b1 - b2,
        None => T::zero(),
    }
}

pub fn cheb_der<T: Real>(c: &[T]) -> Vec<T> {
    let n = c.len();
    if n <= 1 {
        return vec![T::zero()];
    }
    let mut d = vec![T::zero(); n - 1];
    let two = T::lit(2.0);
    for j in (1..n).rev() {
        let upper = if j + 1 < n - 1 { d[j + 1] } else { T::zero() };
        d[j - 1] = upper + two * T::from_usize_lossy(j) * c[j];
    }
    d[0] *= T::lit(0.5);
    d
}

/// Antiderivative vanishing at `lbnd`.
pub fn cheb_int<T: Real>(c: &[T], lbnd: T) -> Vec<T> {
    let n = c.len();
    let mut out = vec![T::zero(); n + 1];
    let two = T::lit(2.0);
    for (j, &cj) in c.iter().enumerate() {
        match j {
            0 => out[1] += cj,
            1 => out[2] += cj / T::lit(4.0),
            _ => {
                let jf = T::from_usize_lossy(j);
                out[j + 1] += cj / (two * (jf + T::one()));
                out[j - 1] -= cj / (two * (jf - T::one()));
            }
        }
    }
    let v = cheb_eval(&out, lbnd);
    out[0] -= v;
    out
}

pub fn cheb_mul<T: Real>(a: &[T], b: &[T]) -> Vec<T> {
    if a.is_empty() || b.is_empty() {
        return vec![];
    }
    let mut out = vec![T::zero(); a.len() + b.len() - 1];
    let half = T::lit(0.5);
    for (i, &ai) in a.iter().enumerate() {
        if ai == T::zero() {
            continue;
        }
        for (j, &bj) in b.iter().enumerate() {
            let v = half * ai * bj;
            out[i + j] += v;
            out[i.abs_diff(j)] += v;
        }
    }
    out
}

/// Multiplication by x.
pub fn cheb_mulx<T: Real>(c: &[T]) -> Vec<T> {
    let mut out = vec![T::zero(); c.len() + 1];
    let half = T::lit(0.5);
    for (j, &cj) in c.iter().enumerate() {
        if j == 0 {
            out[1] += cj;
        } else {
            out[j + 1] += half * cj;
            out[j - 1] += half * cj;
        }
    }
    out
}

/// Exact division by x of a series that vanishes at x = 0; the remainder is dropped.
pub fn cheb_divx<T: Real>(f: &[T]) -> Vec<T> {
    let n = f.len();
    if n <= 1 {
        return vec![T::zero()];
    }
    // x q = f, solved top-down: f_m = (q_{m-1} + q_{m+1})/2 for m >= 2, f_1 = q_0 + q_2/2
    let mut q = vec![T::zero(); n - 1];
    let two = T::lit(2.0);
    for m in (2..n).rev() {
        let above = if m + 1 < n - 1 { q[m + 1] } else { T::zero() };
        q[m - 1] = two * f[m] - above;
    }
    let q2 = if n - 1 > 2 { q[2] } else { T::zero() };
    q[0] = f[1] - q2 / two;
    q
}

/// Barycentric differentiation matrix on arbitrary distinct nodes in [0, 1].
pub fn diff_matrix<T: Real>(nodes: &[T]) -> DMatrix<T> {
    let n = nodes.len();
    let mut w = vec![T::one(); n];
    for j in 0..n {
        for k in 0..n {
            if k != j {
                w[j] *= nodes[j] - nodes[k];
            }
        }
        w[j] = T::one() / w[j];
    }
    let mut d = DMatrix::from_element(n, n, T::zero());
    for i in 0..n {
        let mut diag = T::zero();
        for j in 0..n {
            if i != j {
                let v = (w[j] / w[i]) / (nodes[i] - nodes[j]);
                d[(i, j)] = v;
                diag -= v;
            }
        }
        d[(i, i)] = diag;
    }
    d
}

/// Differentiation matrix on `lobatto_unit(n)` using the closed-form Lobatto weights.
pub fn lobatto_diff_matrix<T: Real>(n: usize) -> DMatrix<T> {
    let nodes = lobatto_unit::<T>(n);
    let w: Vec<T> = (0..=n)
        .map(|j| {
            let s = if j % 2 == 0 { T::one() } else { -T::one() };
            if j == 0 || j == n {
                s * T::lit(0.5)
            } else {
                s
            }
        })
        .collect();
    let mut d = DMatrix::from_element(n + 1, n + 1, T::zero());
    for i in 0..=n {
        let mut diag = T::zero();
        for j in 0..=n {
            if i != j {
                let v = (w[j] / w[i]) / (nodes[i] - nodes[j]);
                d[(i, j)] = v;
                diag -= v;
            }
        }
        d[(i, i)] = diag;
    }
    d
}

/// Matrix J with (J u)_i = integral of the interpolant of u from 0 to rho_i.
pub fn lobatto_antiderivative_matrix<T: Real>(n: usize) -> DMatrix<T> {
    let nodes = lobatto_unit::<T>(n);
    let xs: Vec<T> = nodes.iter().map(|&r| T::lit(2.0) * r - T::one()).collect();
    let mut j = DMatrix::from_element(n + 1, n + 1, T::zero());
    for col in 0..=n {
        let mut e = vec![T::zero(); n + 1];
        e[col] = T::one();
        let c = lobatto_values_to_coeffs(&e);
        let ci = cheb_int(&c, -T::one());
        for (row, &x) in xs.iter().enumerate() {
            j[(row, col)] = T::lit(0.5) * cheb_eval(&ci, x);
        }
    }
    j
}

/// Clenshaw-Curtis weights for `lobatto_unit(n)`, scaled to [0, 1].
pub fn clenshaw_curtis_unit<T: Real>(n: usize) -> Vec<T> {
    let nf = T::from_usize_lossy(n);
    let mut w = vec![T::zero(); n + 1];
    let theta = |i: usize| T::PI() * T::from_usize_lossy(i) / nf;
    if n % 2 == 0 {
        let end = T::one() / (nf * nf - T::one());
        w[0] = end;
        w[n] = end;
        for i in 1..n {
            let mut v = T::one();
            for k in 1..n / 2 {
                let kf = T::from_usize_lossy(k);
                v -= T::lit(2.0) * (T::lit(2.0) * kf * theta(i)).cos() / (T::lit(4.0) * kf * kf - T::one());
            }
            v -= (nf * theta(i)).cos() / (nf * nf - T::one());
            w[i] = T::lit(2.0) * v / nf;
        }
    } else {
        let end = T::one() / (nf * nf);
        w[0] = end;
        w[n] = end;
        for i in 1..n {
            let mut v = T::one();
            for k in 1..=(n - 1) / 2 {
                let kf = T::from_usize_lossy(k);
                v -= T::lit(2.0) * (T::lit(2.0) * kf * theta(i)).cos() / (T::lit(4.0) * kf * kf - T::one());
            }
            w[i] = T::lit(2.0) * v / nf;
        }
    }
    w.iter().map(|&v| v * T::lit(0.5)).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn grid_shape() {
        let g = lobatto_unit::<f64>(8);
        assert_eq!(g.len(), 9);
        assert_eq!(g[0], 0.0);
        assert_eq!(g[8], 1.0);
        assert!(g.windows(2).all(|w| w[0] < w[1]));
        assert_eq!(lobatto_unit::<f64>(32)[16], 0.5);
    }

    #[test]
    fn transform_round_trip() {
        let n = 20;
        let xs: Vec<f64> = lobatto_unit::<f64>(n).iter().map(|r| 2.0 * r - 1.0).collect();
        let c: Vec<f64> = (0..=n).map(|k| 1.0 / (1.0 + k as f64)).collect();
        let vals: Vec<f64> = xs.iter().map(|&x| cheb_eval(&c, x)).collect();
        let back = lobatto_values_to_coeffs(&vals);
        for (a, b) in c.iter().zip(&back) {
            assert!((a - b).abs() < 1e-13);
        }
    }

    #[test]
    fn series_calculus() {
        // T_3 = 4x^3 - 3x
        let t3 = [0.0, 0.0, 0.0, 1.0];
        let d = cheb_der(&t3);
        for x in [-0.7f64, 0.1, 0.9] {
            assert!((cheb_eval(&d, x) - (12.0 * x * x - 3.0)).abs() < 1e-13);
            let i = cheb_int(&t3, 0.0);
            assert!((cheb_eval(&i, x) - (x.powi(4) - 1.5 * x * x)).abs() < 1e-13);
        }
        let sq = cheb_mul(&t3, &t3);
        let q = cheb_divx(&t3);
        let mx = cheb_mulx(&q);
        for x in [-0.3f64, 0.55] {
            let t = 4.0 * x * x * x - 3.0 * x;
            assert!((cheb_eval(&sq, x) - t * t).abs() < 1e-13);
            assert!((cheb_eval(&q, x) - (4.0 * x * x - 3.0)).abs() < 1e-13);
            assert!((cheb_eval(&mx, x) - t).abs() < 1e-13);
        }
    }

    #[test]
    fn matrices() {
        let n = 16;
        let g = lobatto_unit::<f64>(n);
        let d = lobatto_diff_matrix::<f64>(n);
        let j = lobatto_antiderivative_matrix::<f64>(n);
        let w = clenshaw_curtis_unit::<f64>(n);
        let ones = nalgebra::DVector::from_element(n + 1, 1.0);
        assert!((&d * &ones).amax() < 1e-12);
        let jr = &j * &ones;
        for i in 0..=n {
            assert!((jr[i] - g[i]).abs() < 1e-14);
        }
        let cube = nalgebra::DVector::from_iterator(n + 1, g.iter().map(|r| r.powi(3)));
        let dc = &d * &cube;
        for i in 0..=n {
            assert!((dc[i] - 3.0 * g[i] * g[i]).abs() < 1e-11);
        }
        let q: f64 = w.iter().zip(&g).map(|(w, r)| w * r.powi(7)).sum();
        assert!((q - 1.0 / 8.0).abs() < 1e-15);
        let dg = diff_matrix(&g);
        assert!((dg - d).amax() < 1e-9);
        let odd = clenshaw_curtis_unit::<f64>(9);
        let g9 = lobatto_unit::<f64>(9);
        let q9: f64 = odd.iter().zip(&g9).map(|(w, r)| w * r.powi(4)).sum();
        assert!((q9 - 0.2).abs() < 1e-15);
    }
}
