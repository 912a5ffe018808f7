//! 1-bit compressive sensing decoders.
//!
//! Given sign measurements `y = η ⊙ sign(Ψx* + ε)` this crate recovers the
//! direction of `x*` either by ordinary least squares (`m > n`) or by
//! ℓ1-regularized least squares
//!
//! ```text
//! min_x (1/2m)‖y − Ψx‖² + λ‖x‖₁
//! ```
//!
//! solved with a primal-dual active set method along a continuation path,
//! with λ picked by a support-size vote. A synthetic data generator,
//! recovery metrics and an experiment harness are included.
//!
//! ```
//! use onebit::{decode_l1, generate, ModelParams};
//!
//! let params = ModelParams { m: 200, n: 400, s: 3, nu: 0.1, sigma: 0.05, flip_prob: 0.01, seed: 7 };
//! let problem = generate(&params).unwrap();
//! let fit = decode_l1(&problem).unwrap();
//! assert_eq!(fit.x_hat.len(), 400);
//! ```
//!
//! The numerical core is generic over [`Scalar`] (`f32` or `f64`); data
//! generation, file I/O and metrics work in `f64`.

pub mod error;
pub mod harness;
pub mod linalg;
pub mod ls;
pub mod metrics;
pub mod oracle;
pub mod path;
pub mod pdas;
pub mod scalar;
pub mod sensing;

pub use error::{Error, Result};
pub use linalg::{cholesky, gram_submatrix, matvec, solve_spd, CholeskyFactor, DenseMatrix};
pub use ls::{decode_ls, LsEstimate};
pub use metrics::{aggregate, psnr, report, DecodeReport, Summary};
pub use oracle::{ista_solve, OracleResult};
pub use path::{
    decode_l1, decode_l1_with, refit_support, run_path, select_lambda, L1Decode, PathOptions,
    PathPoint, Selection, SolutionPath,
};
pub use pdas::{pdas_iterate, pdas_solve, Pdas, PdasOutcome, SolverState};
pub use scalar::Scalar;
pub use sensing::{
    generate, replication_seed, scale_constant, verify_population_identity, GroundTruth,
    ModelParams, SensingProblem,
};

pub type Matrix = DenseMatrix<f64>;
pub type Matrix32 = DenseMatrix<f32>;
pub type Problem = SensingProblem<f64>;
pub type Problem32 = SensingProblem<f32>;
pub type Outcome = PdasOutcome<f64>;
pub type Outcome32 = PdasOutcome<f32>;
pub type Path = SolutionPath<f64>;
pub type Path32 = SolutionPath<f32>;
