//! Reference solver for the ℓ1-regularized least-squares problem: plain
//! proximal gradient (ISTA) with backtracking, run to a tight fixed-point
//! residual. Slow on purpose; it certifies PDAS output and nothing else.

use crate::error::{Error, Result};
use crate::linalg::{dist_inf, dot, norm2};
use crate::pdas::soft_threshold;
use crate::scalar::Scalar;
use crate::sensing::SensingProblem;

const POWER_ITERATIONS: usize = 20;

#[derive(Debug, Clone, PartialEq)]
pub struct OracleResult<T> {
    pub x: Vec<T>,
    pub objective: T,
    pub iterations: usize,
    /// `‖x − S_{λt}(x − t∇f(x))‖_∞ / t` at the last accepted step.
    pub grad_map_norm: T,
}

/// `(1/2m)‖y − Ψx‖² + λ‖x‖₁`
pub fn objective<T: Scalar>(problem: &SensingProblem<T>, x: &[T], lambda: T) -> Result<T> {
    let fit = problem.psi().matvec(x)?;
    Ok(smooth_part(problem, &fit) + lambda * x.iter().map(|v| v.abs()).sum::<T>())
}

fn smooth_part<T: Scalar>(problem: &SensingProblem<T>, fit: &[T]) -> T {
    let rss: T = problem
        .y()
        .iter()
        .zip(fit)
        .map(|(&a, &b)| (a - b) * (a - b))
        .sum();
    rss / (T::of(2.0) * T::of_usize(problem.m()))
}

/// Power-iteration estimate of the largest eigenvalue of `ΨᵗΨ/m`.
pub fn lipschitz_estimate<T: Scalar>(problem: &SensingProblem<T>) -> T {
    let n = problem.n();
    let m = T::of_usize(problem.m());
    let psi = problem.psi();
    let mut v = vec![T::one() / T::of_usize(n).sqrt(); n];
    let mut est = T::zero();
    for _ in 0..POWER_ITERATIONS {
        let w = psi.matvec(&v).expect("length n");
        let mut u = psi.matvec_t(&w).expect("length m");
        u.iter_mut().for_each(|x| *x /= m);
        est = norm2(&u);
        if est == T::zero() {
            break;
        }
        v = u.into_iter().map(|x| x / est).collect();
    }
    est
}

/// ISTA iterate, exposed so callers can observe every accepted step.
#[derive(Debug, Clone)]
pub struct Ista<'a, T> {
    problem: &'a SensingProblem<T>,
    lambda: T,
    step: T,
    x: Vec<T>,
    smooth: T,
    grad: Vec<T>,
}

impl<'a, T: Scalar> Ista<'a, T> {
    pub fn new(problem: &'a SensingProblem<T>, lambda: T) -> Self {
        let x = vec![T::zero(); problem.n()];
        let l = lipschitz_estimate(problem);
        let step = if l > T::zero() {
            T::one() / l
        } else {
            T::one()
        };
        let mut it = Self {
            problem,
            lambda,
            step,
            x,
            smooth: T::zero(),
            grad: Vec::new(),
        };
        let fit = vec![T::zero(); problem.m()];
        it.refresh(&fit);
        it
    }

    fn refresh(&mut self, fit: &[T]) {
        let m = T::of_usize(self.problem.m());
        self.smooth = smooth_part(self.problem, fit);
        let r: Vec<T> = fit
            .iter()
            .zip(self.problem.y())
            .map(|(&a, &b)| a - b)
            .collect();
        self.grad = self.problem.psi().matvec_t(&r).expect("length m");
        self.grad.iter_mut().for_each(|g| *g /= m);
    }

    pub fn x(&self) -> &[T] {
        &self.x
    }

    pub fn objective(&self) -> T {
        self.smooth + self.lambda * self.x.iter().map(|v| v.abs()).sum::<T>()
    }

    /// One accepted proximal-gradient step; returns the fixed-point residual
    /// measured at the point the step started from.
    pub fn step(&mut self) -> T {
        loop {
            let t = self.step;
            let cand: Vec<T> = self
                .x
                .iter()
                .zip(&self.grad)
                .map(|(&xi, &gi)| soft_threshold(xi - t * gi, self.lambda * t))
                .collect();
            let diff: Vec<T> = cand.iter().zip(&self.x).map(|(&a, &b)| a - b).collect();
            // f is quadratic, so the usual sufficient-decrease test
            // f(x + Δ) ≤ f(x) + ⟨∇f, Δ⟩ + ‖Δ‖²/2t reduces to ‖ΨΔ‖²/m ≤ ‖Δ‖²/t,
            // which has no cancellation near the optimum
            let step_fit = self.problem.psi().matvec(&diff).expect("length n");
            let m = T::of_usize(self.problem.m());
            if dot(&step_fit, &step_fit) / m <= dot(&diff, &diff) / t {
                let fit = self.problem.psi().matvec(&cand).expect("length n");
                let residual = dist_inf(&cand, &self.x) / t;
                self.x = cand;
                self.refresh(&fit);
                return residual;
            }
            self.step = t * T::of(0.5);
        }
    }
}

pub fn ista_solve<T: Scalar>(
    problem: &SensingProblem<T>,
    lambda: T,
    tol: T,
    max_iter: usize,
) -> Result<OracleResult<T>> {
    if !(lambda > T::zero() && tol > T::zero()) {
        return Err(Error::InvalidParams(
            "lambda and tol must be positive".into(),
        ));
    }
    let mut it = Ista::new(problem, lambda);
    let mut residual = T::infinity();
    for k in 1..=max_iter {
        residual = it.step();
        if residual <= tol {
            return Ok(OracleResult {
                objective: it.objective(),
                x: it.x,
                iterations: k,
                grad_map_norm: residual,
            });
        }
    }
    Err(Error::MaxIterExceeded {
        residual: residual.as_f64(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::DenseMatrix;
    use crate::sensing::{generate, ModelParams};

    fn instance(seed: u64) -> SensingProblem<f64> {
        generate(&ModelParams {
            m: 50,
            n: 20,
            s: 3,
            nu: 0.3,
            sigma: 0.1,
            flip_prob: 0.05,
            seed,
        })
        .unwrap()
    }

    #[test]
    fn objective_at_zero_is_half() {
        let p = instance(1);
        assert!((objective(&p, &[0.0; 20], 0.3).unwrap() - 0.5).abs() < 1e-15);
    }

    #[test]
    fn objective_matches_naive_sum() {
        let p = instance(2);
        let x: Vec<f64> = (0..20).map(|i| (i as f64 * 0.37).sin() * 0.2).collect();
        let mut rss = 0.0;
        for i in 0..50 {
            let mut fit = 0.0;
            for j in 0..20 {
                fit += p.psi().get(i, j) * x[j];
            }
            rss += (p.y()[i] - fit).powi(2);
        }
        let naive = rss / 100.0 + 0.05 * x.iter().map(|v| v.abs()).sum::<f64>();
        assert!((objective(&p, &x, 0.05).unwrap() - naive).abs() < 1e-13);
    }

    #[test]
    fn least_squares_point_minimizes_unpenalized_objective() {
        let p = instance(3);
        let xls = crate::ls::decode_ls(&p).unwrap().x_ls;
        let base = objective(&p, &xls, 0.0).unwrap();
        for k in 0..20 {
            let mut x = xls.clone();
            x[k] += 1e-3;
            assert!(objective(&p, &x, 0.0).unwrap() > base);
        }
    }

    #[test]
    fn zero_above_lambda_max() {
        let p = instance(4);
        let r = ista_solve(&p, p.lambda_max() * 1.01, 1e-10, 10_000).unwrap();
        assert!(r.x.iter().all(|&v| v == 0.0));
    }

    #[test]
    fn orthogonal_design_closed_form() {
        let psi = DenseMatrix::from_rows(&[
            vec![1.0, 1.0],
            vec![1.0, -1.0],
            vec![1.0, 1.0],
            vec![1.0, -1.0],
        ])
        .unwrap();
        let p = SensingProblem::new(psi, vec![1.0, 1.0, 1.0, -1.0]).unwrap();
        let corr = p.correlation();
        let r = ista_solve(&p, 0.2, 1e-12, 10_000).unwrap();
        for (x, c) in r.x.iter().zip(&corr) {
            assert!((x - soft_threshold(*c, 0.2f64)).abs() < 1e-12);
        }
    }

    #[test]
    fn descent_is_monotone() {
        let p = instance(5);
        let mut it = Ista::new(&p, 0.3 * p.lambda_max());
        let mut prev = it.objective();
        for _ in 0..300 {
            it.step();
            let f = it.objective();
            assert!(f <= prev + 1e-15, "{f} > {prev}");
            prev = f;
        }
    }

    #[test]
    fn convexity_midpoint() {
        let p = instance(6);
        let a: Vec<f64> = (0..20).map(|i| (i as f64).cos() * 0.3).collect();
        let b: Vec<f64> = (0..20).map(|i| (i as f64 * 1.7).sin() * 0.5).collect();
        let mid: Vec<f64> = a.iter().zip(&b).map(|(u, v)| 0.5 * (u + v)).collect();
        let lam = 0.1;
        let fm = objective(&p, &mid, lam).unwrap();
        let avg = 0.5 * (objective(&p, &a, lam).unwrap() + objective(&p, &b, lam).unwrap());
        assert!(fm <= avg + 1e-12);
    }

    #[test]
    fn reports_iteration_limit() {
        let p = instance(7);
        assert!(matches!(
            ista_solve(&p, 0.01, 1e-14, 3),
            Err(Error::MaxIterExceeded { .. })
        ));
    }
}
