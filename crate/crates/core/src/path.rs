//! Continuation over a geometric λ-grid with warm starts, and the voting rule
//! that picks λ from the resulting path.
//!
//! Starting from `λ₀ = ‖Ψᵗy/m‖_∞`, where `x = 0` is optimal, PDAS is run at
//! `λ_t = λ₀ρᵗ` from the previous solution. The path stops at the first point
//! whose support exceeds `⌊m / ln n⌋` or after `max_grid` points. Voting then
//! counts, for every support size `ℓ`, how many converged points have exactly
//! `ℓ` nonzeros, takes the most frequent `ℓ` (ties toward the smaller `ℓ`)
//! and returns the largest λ with that support size.

use std::collections::BTreeMap;
use std::io::Write;

use crate::error::{Error, Result};
use crate::linalg::{cholesky, gram_submatrix};
use crate::pdas::Pdas;
use crate::scalar::Scalar;
use crate::sensing::io::fmt_real;
use crate::sensing::SensingProblem;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PathOptions {
    pub rho: f64,
    pub max_grid: usize,
    pub max_iter: usize,
}

impl Default for PathOptions {
    fn default() -> Self {
        Self {
            rho: 0.95,
            max_grid: 200,
            max_iter: 1,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PathPoint<T> {
    pub lambda: T,
    pub x: Vec<T>,
    pub support_size: usize,
    pub converged: bool,
    pub kkt_residual: T,
    /// The active-set system was singular; `x` is the warm start carried over.
    pub skipped: bool,
}

impl<T: Scalar> PathPoint<T> {
    fn votes(&self, cap: usize) -> bool {
        self.converged && !self.skipped && (1..=cap).contains(&self.support_size)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SolutionPath<T> {
    pub lambda0: T,
    pub rho: T,
    /// `points[t]` sits at `λ₀ρ^{t+1}`.
    pub points: Vec<PathPoint<T>>,
    pub cap: usize,
    /// The last point broke the support cap.
    pub overflowed: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Selection<T> {
    pub lambda_hat: T,
    pub ell_bar: usize,
    /// `ℓ ↦ |S_ℓ|` for every support size that received a vote.
    pub votes: BTreeMap<usize, usize>,
    /// Index of the selected point in `path.points`.
    pub point: usize,
}

/// `⌊m / ln n⌋`
pub fn support_cap(m: usize, n: usize) -> usize {
    (m as f64 / (n as f64).ln()).floor() as usize
}

pub fn run_path<T: Scalar>(
    problem: &SensingProblem<T>,
    rho: f64,
    max_grid: usize,
    max_iter: usize,
) -> Result<SolutionPath<T>> {
    run_path_with(
        problem,
        PathOptions {
            rho,
            max_grid,
            max_iter,
        },
    )
}

pub fn run_path_with<T: Scalar>(
    problem: &SensingProblem<T>,
    opts: PathOptions,
) -> Result<SolutionPath<T>> {
    if !(opts.rho > 0.0 && opts.rho < 1.0) {
        return Err(Error::InvalidParams(format!(
            "rho = {} must lie in (0, 1)",
            opts.rho
        )));
    }
    if opts.max_grid == 0 || opts.max_iter == 0 {
        return Err(Error::InvalidParams(
            "max_grid and max_iter must be positive".into(),
        ));
    }
    if problem.n() < 2 {
        return Err(Error::InvalidParams("the path needs n >= 2".into()));
    }
    let solver = Pdas::new(problem);
    let lambda0 = problem.lambda_max();
    let rho = T::of(opts.rho);
    let cap = support_cap(problem.m(), problem.n());

    let mut warm = vec![T::zero(); problem.n()];
    let mut points = Vec::new();
    let mut overflowed = false;
    for t in 1..=opts.max_grid {
        let lambda = lambda0 * rho.powi(t as i32);
        match solver.solve(lambda, &warm, opts.max_iter) {
            Ok(out) => {
                let support_size = out.state.x.iter().filter(|v| **v != T::zero()).count();
                warm.clone_from(&out.state.x);
                points.push(PathPoint {
                    lambda,
                    x: out.state.x,
                    support_size,
                    converged: out.converged,
                    kkt_residual: out.kkt_residual,
                    skipped: false,
                });
                if support_size > cap {
                    overflowed = true;
                    break;
                }
            }
            Err(e) => match e.root() {
                Error::SingularGram { .. } => points.push(PathPoint {
                    lambda,
                    x: warm.clone(),
                    support_size: warm.iter().filter(|v| **v != T::zero()).count(),
                    converged: false,
                    kkt_residual: T::nan(),
                    skipped: true,
                }),
                // |A| > m ≥ cap: the path has run past the identifiable range
                Error::ActiveSetOverflow { size, .. } => {
                    points.push(PathPoint {
                        lambda,
                        x: warm.clone(),
                        support_size: *size,
                        converged: false,
                        kkt_residual: T::nan(),
                        skipped: true,
                    });
                    overflowed = true;
                    break;
                }
                _ => return Err(e),
            },
        }
    }
    Ok(SolutionPath {
        lambda0,
        rho,
        points,
        cap,
        overflowed,
    })
}

pub fn select_lambda<T: Scalar>(path: &SolutionPath<T>) -> Result<Selection<T>> {
    let mut votes = BTreeMap::new();
    for p in path.points.iter().filter(|p| p.votes(path.cap)) {
        *votes.entry(p.support_size).or_insert(0usize) += 1;
    }
    let mut best: Option<(usize, usize)> = None;
    for (&ell, &count) in &votes {
        if best.is_none_or(|(_, c)| count > c) {
            best = Some((ell, count));
        }
    }
    let (ell_bar, _) = best.ok_or(Error::EmptyPath { cap: path.cap })?;
    // λ decreases along the path, so the first hit is the largest
    let point = path
        .points
        .iter()
        .position(|p| p.votes(path.cap) && p.support_size == ell_bar)
        .expect("ell_bar received a vote");
    Ok(Selection {
        lambda_hat: path.points[point].lambda,
        ell_bar,
        votes,
        point,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct L1Decode<T> {
    pub x_hat: Vec<T>,
    pub selection: Selection<T>,
    pub path: SolutionPath<T>,
}

/// Continuation with `ρ = 0.95`, 200 grid points, one PDAS iteration per
/// point, and the voting rule.
pub fn decode_l1<T: Scalar>(problem: &SensingProblem<T>) -> Result<L1Decode<T>> {
    decode_l1_with(problem, PathOptions::default())
}

pub fn decode_l1_with<T: Scalar>(
    problem: &SensingProblem<T>,
    opts: PathOptions,
) -> Result<L1Decode<T>> {
    if problem.m() < 2 || problem.n() < 2 {
        return Err(Error::InvalidParams(
            "decode_l1 needs m >= 2 and n >= 2".into(),
        ));
    }
    let path = run_path_with(problem, opts)?;
    let selection = select_lambda(&path)?;
    Ok(L1Decode {
        x_hat: path.points[selection.point].x.clone(),
        selection,
        path,
    })
}

/// Least squares restricted to the nonzeros of `x`: `(Ψ_AᵗΨ_A)⁻¹Ψ_Aᵗy` on
/// `A = supp(x)`, zero elsewhere. Removes the ℓ1 shrinkage from a path point
/// while keeping its support.
pub fn refit_support<T: Scalar>(problem: &SensingProblem<T>, x: &[T]) -> Result<Vec<T>> {
    let n = problem.n();
    if x.len() != n {
        return Err(Error::InvalidParams(format!(
            "estimate has length {}, expected {n}",
            x.len()
        )));
    }
    let support: Vec<usize> = (0..n).filter(|&j| x[j] != T::zero()).collect();
    let mut out = vec![T::zero(); n];
    if support.is_empty() {
        return Ok(out);
    }
    if support.len() > problem.m() {
        return Err(Error::InvalidParams(format!(
            "support of size {} exceeds m = {}",
            support.len(),
            problem.m()
        )));
    }
    let factor = cholesky(&gram_submatrix(problem.psi(), &support)?)?;
    let corr = problem.psi().matvec_t(problem.y())?;
    let rhs: Vec<T> = support.iter().map(|&j| corr[j]).collect();
    for (&j, v) in support.iter().zip(factor.solve(&rhs)?) {
        out[j] = v;
    }
    Ok(out)
}

/// Path dump with columns `t, lambda, support_size, kkt_residual, converged, skipped`.
pub fn write_path_csv<T: Scalar, W: Write>(path: &SolutionPath<T>, w: W) -> Result<()> {
    let mut out = csv::Writer::from_writer(w);
    out.write_record([
        "t",
        "lambda",
        "support_size",
        "kkt_residual",
        "converged",
        "skipped",
    ])?;
    for (k, p) in path.points.iter().enumerate() {
        out.write_record([
            (k + 1).to_string(),
            fmt_real(p.lambda.as_f64()),
            p.support_size.to_string(),
            fmt_real(p.kkt_residual.as_f64()),
            u8::from(p.converged).to_string(),
            u8::from(p.skipped).to_string(),
        ])?;
    }
    out.flush()?;
    Ok(())
}
