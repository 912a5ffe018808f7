//! Ordinary least-squares decoder for the overdetermined regime `m > n`.

use crate::error::{Error, Result};
use crate::linalg::{cholesky, gram_submatrix};
use crate::scalar::Scalar;
use crate::sensing::SensingProblem;

#[derive(Debug, Clone, PartialEq)]
pub struct LsEstimate<T> {
    pub x_ls: Vec<T>,
    /// `(max L_ii / min L_ii)²` from the Cholesky factor of `ΨᵗΨ`; a cheap
    /// lower bound on the condition number of `ΨᵗΨ/m`.
    pub gram_condition: T,
}

/// `x_ls = (ΨᵗΨ)⁻¹Ψᵗy` through a Cholesky factorization of the Gram matrix.
pub fn decode_ls<T: Scalar>(problem: &SensingProblem<T>) -> Result<LsEstimate<T>> {
    let (m, n) = (problem.m(), problem.n());
    if m <= n {
        return Err(Error::Shape { m, n });
    }
    let all: Vec<usize> = (0..n).collect();
    let factor = cholesky(&gram_submatrix(problem.psi(), &all)?)?;
    let rhs = problem.psi().matvec_t(problem.y())?;
    let x_ls = factor.solve(&rhs)?;
    let (lo, hi) = factor.diag_extremes();
    let ratio = hi / lo;
    Ok(LsEstimate {
        x_ls,
        gram_condition: ratio * ratio,
    })
}
