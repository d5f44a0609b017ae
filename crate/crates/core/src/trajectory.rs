use crate::spectral::{Modal, ModalSpace};

/// States Phi(0), Phi(h), ..., Phi(Mh) on a uniform tau grid.
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub h: f64,
    pub states: Vec<Modal>,
}

impl Trajectory {
    pub fn new(h: f64, states: Vec<Modal>) -> Self {
        Trajectory { h, states }
    }

    pub fn zeros(space: &ModalSpace, h: f64, n_steps: usize) -> Self {
        Trajectory { h, states: vec![space.zeros(); n_steps + 1] }
    }

    /// Samples tau -> f(tau) on the grid.
    pub fn from_fn(h: f64, n_steps: usize, f: impl Fn(f64) -> Modal) -> Self {
        Trajectory { h, states: (0..=n_steps).map(|m| f(m as f64 * h)).collect() }
    }

    pub fn len(&self) -> usize {
        self.states.len()
    }

    pub fn is_empty(&self) -> bool {
        self.states.is_empty()
    }

    pub fn tau(&self, m: usize) -> f64 {
        m as f64 * self.h
    }

    pub fn tau_max(&self) -> f64 {
        self.tau(self.len().saturating_sub(1))
    }

    pub fn norms(&self, space: &ModalSpace) -> Vec<f64> {
        self.states.iter().map(|s| space.norm(s)).collect()
    }

    /// Discrete X norm: max over samples of the H^{2k} norm.
    pub fn x_norm(&self, space: &ModalSpace) -> f64 {
        self.norms(space).into_iter().fold(0.0, f64::max)
    }

    /// X distance between two trajectories on the same tau grid.
    pub fn x_distance(&self, other: &Trajectory, space: &ModalSpace) -> f64 {
        self.states
            .iter()
            .zip(&other.states)
            .map(|(a, b)| space.norm(&(a - b)))
            .fold(0.0, f64::max)
    }

    pub fn combine(&self, a: f64, other: &Trajectory, b: f64) -> Trajectory {
        Trajectory {
            h: self.h,
            states: self.states.iter().zip(&other.states).map(|(x, y)| a * x + b * y).collect(),
        }
    }
}
