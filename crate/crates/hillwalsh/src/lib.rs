//! Discriminant computation for Hill's equation x'' + (alpha + beta p(t)) x = 0
//! via Walsh-function recursions, with independent oracles, stability charts,
//! and transition-curve extraction over the alpha-beta plane.
//!
//! The production path is an O(n) running-sum recursion over n = 2^k samples
//! of the excitation. Two slower routes through the triangular Walsh-domain
//! sampling matrices and the dense Gamma inversion compute the same number
//! and serve as cross-checks, and `oracles` holds method-independent ground
//! truth (Runge-Kutta monodromy, exact piecewise-constant propagators, the
//! alternating Lyapunov series).

pub mod cli;
pub mod discriminant;
pub mod error;
pub mod excitation;
pub mod linalg;
pub mod oracles;
pub mod output;
pub mod stability;
pub mod walsh;

pub use discriminant::{
    discriminant_direct, discriminant_recursive, discriminant_triangular, singularity_guard,
    transition_sample, DiscriminantResult, Method,
};
pub use error::{HillError, Result};
pub use excitation::{eval_p, sample_p, Excitation, HillProblem};
pub use oracles::{constant_coeff_delta, monodromy, piecewise_constant_delta, MonodromyResult};
pub use stability::{classify, grid_scan, interlacing_scan, transition_contours, Axis, Class};
