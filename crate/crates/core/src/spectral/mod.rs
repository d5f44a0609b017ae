//! Discretizations of L, the H^{2k} product and the spectral decomposition.

pub mod collocation;
pub mod decomposition;
pub mod modal;

pub use collocation::{discretize_l, sobolev_inner, DiscretizedOperator};
pub use decomposition::{analytic_eigenvalues, build_gauge_dual, compute_spectrum, AnalyticMatch, Branch, SpectralDecomposition};
pub use modal::{Modal, ModalSpace};
