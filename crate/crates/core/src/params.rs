use crate::error::{LabError, Result};
use crate::scalar::Real;

fn check_exponent(p: u32) -> Result<()> {
    if p < 3 || p % 2 == 0 {
        return Err(LabError::param("p", format!("need an odd integer >= 3, got {p}")));
    }
    Ok(())
}

/// c0 = 2(p+1)/(p-1)^2, the squared amplitude factor of the ODE blowup profile.
pub fn compute_c0<T: Real>(p: u32) -> Result<T> {
    check_exponent(p)?;
    let pf = T::lit(p as f64);
    let one = T::one();
    Ok(T::lit(2.0) * (pf + one) / ((pf - one) * (pf - one)))
}

/// Smallest Sobolev order for which the remainder of the linear flow decays like e^{-tau}.
pub fn k_min(p: u32) -> Result<usize> {
    let c0: f64 = compute_c0(p)?;
    let pf = p as f64;
    let v = (1.5 + pf * c0 - 2.0 / (pf - 1.0)) / 2.0;
    // guard against 3.9999999 style round-off on exact integers
    Ok(((v - 1e-12).ceil()).max(1.0) as usize)
}

pub fn binomial(n: u32, k: u32) -> u64 {
    if k > n {
        return 0;
    }
    let k = k.min(n - k) as u64;
    let n = n as u64;
    let mut acc = 1u64;
    for i in 0..k {
        acc = acc * (n - i) / (i + 1);
    }
    acc
}

#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize)]
pub struct Parameters<T> {
    pub p: u32,
    /// Blowup time T.
    pub t_blowup: T,
    pub c0: T,
    /// Sobolev order k of the state space H^{2k}.
    pub k: usize,
}

impl<T: Real> Parameters<T> {
    /// Validated parameters; `k` must be at least `k_min(p)`.
    pub fn new(p: u32, t_blowup: T, k: usize) -> Result<Self> {
        let kmin = k_min(p)?;
        if k < kmin {
            return Err(LabError::param("k", format!("k = {k} is below k_min({p}) = {kmin}")));
        }
        Self::relaxed(p, t_blowup, k)
    }

    /// Same as [`Parameters::new`] but only requires k >= 1, for sub-threshold experiments.
    pub fn relaxed(p: u32, t_blowup: T, k: usize) -> Result<Self> {
        let c0 = compute_c0(p)?;
        if !(t_blowup > T::zero()) || !t_blowup.is_finite() {
            return Err(LabError::param("T", format!("blowup time must be positive, got {t_blowup}")));
        }
        if k == 0 {
            return Err(LabError::param("k", "k must be positive"));
        }
        Ok(Parameters { p, t_blowup, c0, k })
    }

    pub fn pf(&self) -> T {
        T::lit(self.p as f64)
    }

    /// The similarity shift 2/(p-1).
    pub fn shift(&self) -> T {
        T::lit(2.0) / (self.pf() - T::one())
    }

    /// Coefficient binom(p,j) c0^{(p-j)/(p-1)} of the j-th nonlinear term.
    pub fn nonlinear_coeff(&self, j: u32) -> T {
        let e = T::lit((self.p - j) as f64) / (self.pf() - T::one());
        T::lit(binomial(self.p, j) as f64) * self.c0.powf(e)
    }

    /// lambda_j^+ = 1 + 2/(p-1) - 2j.
    pub fn lambda_plus(&self, j: usize) -> T {
        T::one() + self.shift() - T::lit(2.0 * j as f64)
    }

    /// lambda_j^- = -2p/(p-1) - 2j.
    pub fn lambda_minus(&self, j: usize) -> T {
        -self.shift() * self.pf() - T::lit(2.0 * j as f64)
    }
}

pub type Params = Parameters<f64>;

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn c0_values() {
        assert_eq!(compute_c0::<f64>(3).unwrap(), 2.0);
        assert_eq!(compute_c0::<f64>(5).unwrap(), 0.75);
        assert!((compute_c0::<f64>(7).unwrap() - 4.0 / 9.0).abs() < 1e-16);
        assert!(compute_c0::<f64>(4).is_err());
        assert!(compute_c0::<f64>(1).is_err());
    }

    #[test]
    fn kmin_values() {
        assert_eq!(k_min(3).unwrap(), 4);
        assert_eq!(k_min(5).unwrap(), 3);
        assert_eq!(k_min(7).unwrap(), 3);
    }

    #[test]
    fn binomials() {
        assert_eq!(binomial(7, 3), 35);
        assert_eq!(binomial(3, 2), 3);
        assert_eq!(binomial(5, 5), 1);
    }

    #[test]
    fn eigenvalue_formulas() {
        let p3 = Parameters::<f64>::new(3, 1.0, 4).unwrap();
        assert_eq!((p3.lambda_plus(0), p3.lambda_minus(0)), (2.0, -3.0));
        assert_eq!((p3.lambda_plus(1), p3.lambda_minus(1)), (0.0, -5.0));
        let p5 = Parameters::<f64>::new(5, 1.0, 3).unwrap();
        assert_eq!((p5.lambda_plus(0), p5.lambda_minus(0)), (1.5, -2.5));
    }

    #[test]
    fn rejects_small_k() {
        assert!(Parameters::<f64>::new(3, 1.0, 3).is_err());
        assert!(Parameters::<f64>::relaxed(3, 1.0, 3).is_ok());
        assert!(Parameters::<f64>::new(3, -1.0, 4).is_err());
    }

    #[test]
    fn works_in_single_precision() {
        let c0: f32 = compute_c0(3).unwrap();
        assert_eq!(c0, 2.0);
    }
}
