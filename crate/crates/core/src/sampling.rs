//! Seeded random states and trajectories.

use crate::spectral::{Modal, ModalSpace};
use crate::trajectory::Trajectory;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

/// Highest polynomial degree used for random states.
pub const RANDOM_DEGREE: usize = 12;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Independent stream `index` derived from `seed`.
pub fn substream(seed: u64, index: u64) -> ChaCha8Rng {
    let mut r = ChaCha8Rng::seed_from_u64(seed);
    r.set_stream(index);
    r
}

/// Random unit-norm parity polynomial of degree <= `degree`.
///
/// Each basis function enters with an independent standard normal weight after being
/// scaled to unit H^{2k} norm, so low and high degrees are equally represented.
pub fn random_direction_deg<R: Rng>(space: &ModalSpace, rng: &mut R, degree: usize) -> Modal {
    let mut u = space.zeros();
    for i in 0..space.dim() {
        // entry 2m is T_{2m+1} in u1, entry 2m+1 is T_{2m} in u2
        let deg = if i % 2 == 0 { i + 1 } else { i - 1 };
        if deg > degree {
            continue;
        }
        let mut e = space.zeros();
        e[i] = 1.0;
        let z: f64 = rng.sample(StandardNormal);
        u[i] = z / space.norm(&e);
    }
    let n = space.norm(&u);
    if n == 0.0 {
        let mut e = space.zeros();
        e[1] = 1.0;
        return e;
    }
    u / n
}

pub fn random_direction<R: Rng>(space: &ModalSpace, rng: &mut R) -> Modal {
    random_direction_deg(space, rng, RANDOM_DEGREE)
}

/// Random data with ||u|| <= radius.
pub fn random_data<R: Rng>(space: &ModalSpace, rng: &mut R, radius: f64) -> Modal {
    let theta: f64 = rng.random_range(0.0..=1.0);
    radius * theta * random_direction(space, rng)
}

/// Random element of Y_delta: delta e^{-tau} theta (cos(w tau) a + sin(w tau) b)/||.||.
pub fn random_y_delta<R: Rng>(space: &ModalSpace, rng: &mut R, delta: f64, h: f64, n_steps: usize) -> Trajectory {
    let a = random_direction(space, rng);
    let b = random_direction(space, rng);
    let theta: f64 = rng.random_range(0.05..=1.0);
    let omega: f64 = rng.random_range(0.0..2.0);
    Trajectory::from_fn(h, n_steps, |tau| {
        let v = (omega * tau).cos() * &a + (omega * tau).sin() * &b;
        let n = space.norm(&v);
        delta * (-tau).exp() * theta * v / n
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::params::Params;

    #[test]
    fn samples_are_normalized_and_reproducible() {
        let s = ModalSpace::new(&Params::new(3, 1.0, 4).unwrap(), 12).unwrap();
        let a = random_direction(&s, &mut rng(7));
        let b = random_direction(&s, &mut rng(7));
        assert_eq!(a, b);
        assert!((s.norm(&a) - 1.0).abs() < 1e-12);
        assert!(a.rows(14, 10).amax() == 0.0);
        let t = random_y_delta(&s, &mut rng(3), 0.1, 0.1, 20);
        for (m, st) in t.states.iter().enumerate() {
            assert!(s.norm(st) <= 0.1 * (-t.tau(m)).exp() * (1.0 + 1e-12));
        }
        assert!(s.norm(&random_data(&s, &mut rng(1), 0.01)) <= 0.01);
    }
}
