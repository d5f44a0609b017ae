use crate::error::{LabError, Result};
use crate::params::Parameters;
use crate::scalar::Real;

/// (t, r) -> (tau, rho) with tau = -log(T-t), rho = r/(T-t).
pub fn to_similarity<T: Real>(t_blowup: T, t: T, r: T) -> Result<(T, T)> {
    let s = t_blowup - t;
    if !(s > T::zero()) {
        return Err(LabError::Precondition(format!("similarity coordinates undefined at t = {t} >= T = {t_blowup}")));
    }
    if r < T::zero() {
        return Err(LabError::Precondition(format!("negative radius {r}")));
    }
    Ok((-s.ln(), r / s))
}

/// Inverse of [`to_similarity`].
pub fn from_similarity<T: Real>(t_blowup: T, tau: T, rho: T) -> (T, T) {
    let s = (-tau).exp();
    (t_blowup - s, rho * s)
}

/// The spatially constant blowup solution c0^{1/(p-1)} (T-t)^{-2/(p-1)}.
pub fn fundamental_solution<T: Real>(params: &Parameters<T>, t: T, _r: T) -> Result<T> {
    let s = params.t_blowup - t;
    if !(s > T::zero()) {
        return Err(LabError::Precondition(format!("t = {t} is past the blowup time {}", params.t_blowup)));
    }
    let q = params.pf() - T::one();
    Ok(params.c0.powf(T::one() / q) * s.powf(-T::lit(2.0) / q))
}

/// Time derivative of [`fundamental_solution`].
pub fn fundamental_solution_dt<T: Real>(params: &Parameters<T>, t: T) -> Result<T> {
    let psi = fundamental_solution(params, t, T::zero())?;
    Ok(params.shift() * psi / (params.t_blowup - t))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn blowup_profile_values() {
        let p3 = Parameters::new(3, 1.0, 4).unwrap();
        assert!((fundamental_solution(&p3, 0.0, 7.0).unwrap() - 2f64.sqrt()).abs() < 1e-15);
        assert!((fundamental_solution(&p3, 0.5, 0.0).unwrap() - 2.0 * 2f64.sqrt()).abs() < 1e-14);
        let p5 = Parameters::new(5, 2.0, 3).unwrap();
        assert!((fundamental_solution(&p5, 1.0, 0.0).unwrap() - 0.75f64.powf(0.25)).abs() < 1e-15);
        assert!(fundamental_solution(&p3, 1.0, 0.0).is_err());
    }

    #[test]
    fn similarity_examples() {
        assert_eq!(to_similarity(1.0, 0.0, 0.5).unwrap(), (0.0, 0.5));
        let (tau, rho) = to_similarity(1.0, 1.0 - (-2f64).exp(), 0.0).unwrap();
        assert!((tau - 2.0).abs() < 1e-14 && rho == 0.0);
        assert_eq!(to_similarity(2.0, 1.0, 1.0).unwrap(), (0.0, 1.0));
        assert!(to_similarity(1.0, 1.0, 0.0).is_err());
    }

    #[test]
    fn profile_solves_the_ode() {
        // psi'' = psi^p for the space-independent solution
        let p = Parameters::new(7, 1.0, 3).unwrap();
        let t = 0.3f64;
        let h = 1e-4;
        let f = |t: f64| fundamental_solution(&p, t, 0.0).unwrap();
        let second = (f(t + h) - 2.0 * f(t) + f(t - h)) / (h * h);
        assert!((second / f(t).powi(7) - 1.0).abs() < 1e-5);
        let first = (f(t + h) - f(t - h)) / (2.0 * h);
        assert!((first / fundamental_solution_dt(&p, t).unwrap() - 1.0).abs() < 1e-7);
    }
}
