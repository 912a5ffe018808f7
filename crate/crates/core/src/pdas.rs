//! Primal-dual active set (PDAS) method for
//! `min_x (1/2m)‖y − Ψx‖² + λ‖x‖₁`.
//!
//! A pair `(x, d)` is optimal iff `d = Ψᵗ(y − Ψx)/m` and `x = S_λ(x + d)`.
//! Each iteration guesses the active set `A = {i : |x_i + d_i| > λ}`, pins
//! `d_A = λ·sign(x_A + d_A)` and `x_I = 0`, and solves the small normal system
//!
//! ```text
//! (Ψ_Aᵗ Ψ_A) x_A = Ψ_Aᵗ y − m d_A,     d_I = Ψ_Iᵗ (y − Ψ_A x_A) / m.
//! ```
//!
//! This is a generalized Newton step on the nonsmooth KKT map. Iteration stops
//! once the active set and its sign pattern repeat, at which point the iterate
//! is an exact fixed point of the KKT system.

use crate::error::{Error, Result};
use crate::linalg::{cholesky, dist_inf, gram_submatrix};
use crate::scalar::Scalar;
use crate::sensing::SensingProblem;

/// Iteration cap for a standalone solve; continuation uses 1.
pub const DEFAULT_MAX_ITER: usize = 50;

/// `sign(z)·max(|z| − λ, 0)`
#[inline]
pub fn soft_threshold<T: Scalar>(z: T, lambda: T) -> T {
    let mag = z.abs() - lambda;
    if mag > T::zero() {
        mag.copysign(z)
    } else {
        T::zero()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SolverState<T> {
    pub x: Vec<T>,
    pub d: Vec<T>,
    /// Active set the current `x` was computed on (ascending).
    pub active: Vec<usize>,
    pub lambda: T,
    pub iterations: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PdasOutcome<T> {
    pub state: SolverState<T>,
    pub converged: bool,
    /// `max(‖x − S_λ(x+d)‖_∞, ‖Ψᵗ(y−Ψx)/m − d‖_∞)`
    pub kkt_residual: T,
}

/// Active set with its signs, `true` for positive.
#[derive(Debug, Clone, PartialEq, Eq)]
struct Partition {
    active: Vec<usize>,
    positive: Vec<bool>,
}

/// Solver bound to one problem, caching `Ψᵗy`.
#[derive(Debug, Clone)]
pub struct Pdas<'a, T> {
    problem: &'a SensingProblem<T>,
    psi_t_y: Vec<T>,
}

impl<'a, T: Scalar> Pdas<'a, T> {
    pub fn new(problem: &'a SensingProblem<T>) -> Self {
        let psi_t_y = problem
            .psi()
            .matvec_t(problem.y())
            .expect("problem shapes are consistent");
        Self { problem, psi_t_y }
    }

    pub fn problem(&self) -> &'a SensingProblem<T> {
        self.problem
    }

    fn m(&self) -> T {
        T::of_usize(self.problem.m())
    }

    /// `Ψᵗ(y − Ψx)/m`
    pub fn dual(&self, x: &[T]) -> Result<Vec<T>> {
        let psi = self.problem.psi();
        let fit = psi.matvec(x)?;
        let r: Vec<T> = self
            .problem
            .y()
            .iter()
            .zip(&fit)
            .map(|(&a, &b)| a - b)
            .collect();
        let m = self.m();
        Ok(psi.matvec_t(&r)?.into_iter().map(|v| v / m).collect())
    }

    /// Consistent starting state `(x0, Ψᵗ(y − Ψx0)/m)`.
    pub fn initial_state(&self, lambda: T, x0: &[T]) -> Result<SolverState<T>> {
        if x0.len() != self.problem.n() {
            return Err(Error::DimensionMismatch {
                op: "pdas initial state",
                expected: self.problem.n(),
                got: x0.len(),
            });
        }
        let d = self.dual(x0)?;
        let active = (0..x0.len()).filter(|&i| x0[i] != T::zero()).collect();
        Ok(SolverState {
            x: x0.to_vec(),
            d,
            active,
            lambda,
            iterations: 0,
        })
    }

    fn partition(x: &[T], d: &[T], lambda: T) -> Partition {
        let mut active = Vec::new();
        let mut positive = Vec::new();
        for (i, (&xi, &di)) in x.iter().zip(d).enumerate() {
            let z = xi + di;
            if z.abs() > lambda {
                active.push(i);
                positive.push(z > T::zero());
            }
        }
        Partition { active, positive }
    }

    /// One PDAS step from `state`, which must satisfy `d = Ψᵗ(y − Ψx)/m`.
    pub fn iterate(&self, state: &SolverState<T>) -> Result<SolverState<T>> {
        let part = Self::partition(&state.x, &state.d, state.lambda);
        self.step_on(state, &part)
    }

    fn step_on(&self, state: &SolverState<T>, part: &Partition) -> Result<SolverState<T>> {
        let (m, n) = (self.problem.m(), self.problem.n());
        let lambda = state.lambda;
        let a = &part.active;
        if a.len() > m {
            return Err(Error::ActiveSetOverflow { size: a.len(), m });
        }
        let mf = self.m();
        let d_a: Vec<T> = part
            .positive
            .iter()
            .map(|&p| if p { lambda } else { -lambda })
            .collect();

        let mut x = vec![T::zero(); n];
        let x_a = if a.is_empty() {
            Vec::new()
        } else {
            let gram = gram_submatrix(self.problem.psi(), a)?;
            let rhs: Vec<T> = a
                .iter()
                .zip(&d_a)
                .map(|(&i, &da)| self.psi_t_y[i] - mf * da)
                .collect();
            cholesky(&gram)?.solve(&rhs)?
        };
        for (&i, &v) in a.iter().zip(&x_a) {
            x[i] = v;
        }

        let fit = self.problem.psi().matvec_cols(a, &x_a)?;
        let r: Vec<T> = self
            .problem
            .y()
            .iter()
            .zip(&fit)
            .map(|(&u, &v)| u - v)
            .collect();
        let mut d = self.problem.psi().matvec_t(&r)?;
        d.iter_mut().for_each(|v| *v /= mf);
        for (&i, &da) in a.iter().zip(&d_a) {
            d[i] = da;
        }

        Ok(SolverState {
            x,
            d,
            active: a.clone(),
            lambda,
            iterations: state.iterations + 1,
        })
    }

    /// Runs PDAS from `x0` until the active set and its signs repeat, or for
    /// `max_iter` iterations.
    pub fn solve(&self, lambda: T, x0: &[T], max_iter: usize) -> Result<PdasOutcome<T>> {
        if !(lambda > T::zero()) {
            return Err(Error::InvalidParams(format!(
                "lambda = {lambda} must be positive"
            )));
        }
        if max_iter == 0 {
            return Err(Error::InvalidParams("max_iter must be at least 1".into()));
        }
        let mut state = self.initial_state(lambda, x0)?;
        let mut part = Self::partition(&state.x, &state.d, lambda);
        let mut converged = false;
        for _ in 0..max_iter {
            state = self.step_on(&state, &part).map_err(|e| Error::AtLambda {
                lambda: lambda.as_f64(),
                active: part.active.clone(),
                source: Box::new(e),
            })?;
            let next = Self::partition(&state.x, &state.d, lambda);
            if next == part {
                converged = true;
                break;
            }
            part = next;
        }
        let kkt_residual = self.kkt_residual(&state.x, &state.d, lambda)?;
        Ok(PdasOutcome {
            state,
            converged,
            kkt_residual,
        })
    }

    pub fn kkt_residual(&self, x: &[T], d: &[T], lambda: T) -> Result<T> {
        let fixed = x
            .iter()
            .zip(d)
            .map(|(&xi, &di)| (xi - soft_threshold(xi + di, lambda)).abs())
            .fold(T::zero(), T::max);
        let dual = dist_inf(&self.dual(x)?, d);
        Ok(fixed.max(dual))
    }
}

/// One PDAS iteration, see [`Pdas::iterate`].
pub fn pdas_iterate<T: Scalar>(
    problem: &SensingProblem<T>,
    state: &SolverState<T>,
) -> Result<SolverState<T>> {
    Pdas::new(problem).iterate(state)
}

/// See [`Pdas::solve`].
pub fn pdas_solve<T: Scalar>(
    problem: &SensingProblem<T>,
    lambda: T,
    x0: &[T],
    max_iter: usize,
) -> Result<PdasOutcome<T>> {
    Pdas::new(problem).solve(lambda, x0, max_iter)
}
