#![allow(dead_code)]

use onebit::{generate, ModelParams, Pdas, Problem, SolverState};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Dense solve by Gaussian elimination with partial pivoting.
pub fn gauss_solve(mut a: Vec<Vec<f64>>, mut b: Vec<f64>) -> Vec<f64> {
    let n = b.len();
    for col in 0..n {
        let p = (col..n)
            .max_by(|&r, &s| a[r][col].abs().total_cmp(&a[s][col].abs()))
            .unwrap();
        a.swap(col, p);
        b.swap(col, p);
        assert!(a[col][col].abs() > 1e-300, "singular system");
        for r in col + 1..n {
            let f = a[r][col] / a[col][col];
            if f == 0.0 {
                continue;
            }
            for c in col..n {
                a[r][c] -= f * a[col][c];
            }
            b[r] -= f * b[col];
        }
    }
    let mut x = vec![0.0; n];
    for r in (0..n).rev() {
        let tail: f64 = (r + 1..n).map(|c| a[r][c] * x[c]).sum();
        x[r] = (b[r] - tail) / a[r][r];
    }
    x
}

/// One generalized-Newton step on
/// `F(x, d) = [x − S_λ(x + d); ΨᵗΨx + m d − Ψᵗy]`, assembled explicitly as
/// `J = [[I − D, −D], [ΨᵗΨ, mI]]` with `D = diag(1{|x + d| > λ})`.
pub fn newton_step(problem: &Problem, x: &[f64], d: &[f64], lambda: f64) -> (Vec<f64>, Vec<f64>) {
    let (m, n) = (problem.m(), problem.n());
    let psi = problem.psi();
    let mut gram = vec![vec![0.0; n]; n];
    for i in 0..m {
        let row = psi.row(i);
        for j in 0..n {
            for k in 0..n {
                gram[j][k] += row[j] * row[k];
            }
        }
    }
    let psi_t_y = psi.matvec_t(problem.y()).unwrap();
    let mf = m as f64;
    let mut jac = vec![vec![0.0; 2 * n]; 2 * n];
    let mut rhs = vec![0.0; 2 * n];
    for j in 0..n {
        let z = x[j] + d[j];
        let active = z.abs() > lambda;
        let st = if active { z - lambda * z.signum() } else { 0.0 };
        jac[j][j] = if active { 0.0 } else { 1.0 };
        jac[j][n + j] = if active { -1.0 } else { 0.0 };
        rhs[j] = -(x[j] - st);
        let gx: f64 = (0..n).map(|k| gram[j][k] * x[k]).sum();
        for k in 0..n {
            jac[n + j][k] = gram[j][k];
        }
        jac[n + j][n + j] = mf;
        rhs[n + j] = -(gx + mf * d[j] - psi_t_y[j]);
    }
    let step = gauss_solve(jac, rhs);
    let xn = (0..n).map(|j| x[j] + step[j]).collect();
    let dn = (0..n).map(|j| d[j] + step[n + j]).collect();
    (xn, dn)
}

/// Small random problem in the regime of the solver tests.
pub fn small_problem(rng: &mut ChaCha8Rng, seed: u64) -> Problem {
    let n = rng.random_range(10..=40);
    let m = rng.random_range(2 * n..=80);
    let nu = if rng.random::<bool>() { 0.0 } else { 0.3 };
    generate(&ModelParams {
        m,
        n,
        s: rng.random_range(1..=4),
        nu,
        sigma: 0.1,
        flip_prob: 0.02,
        seed,
    })
    .unwrap()
}

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Random state `(x0, Ψᵗ(y − Ψx0)/m)` with a few nonzeros.
pub fn random_state(rng: &mut ChaCha8Rng, pdas: &Pdas<f64>, lambda: f64) -> SolverState<f64> {
    let n = pdas.problem().n();
    let mut x0 = vec![0.0; n];
    for _ in 0..rng.random_range(0..=4) {
        x0[rng.random_range(0..n)] = rng.random_range(-1.0..1.0);
    }
    pdas.initial_state(lambda, &x0).unwrap()
}

pub fn max_diff(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .fold(0.0f64, |acc, (x, y)| acc.max((x - y).abs()))
}

/// Exact solution at `λ = frac·λ₀` from a warm-started PDAS run, when it converges.
pub fn exact_solution(pdas: &Pdas<f64>, frac: f64) -> Option<(f64, SolverState<f64>)> {
    let lambda0 = pdas.problem().lambda_max();
    let n = pdas.problem().n();
    let mut x = vec![0.0; n];
    let mut last = None;
    for f in [0.8, 0.6, frac] {
        let out = pdas.solve(f * lambda0, &x, 100).ok()?;
        if !out.converged {
            return None;
        }
        x = out.state.x.clone();
        last = Some((f * lambda0, out.state));
    }
    last
}

/// Perturbs the solution `(x̄, d̄)` until `x0 + d0` stays within half the
/// partition margin of `x̄ + d̄`, so that `x0` lies in the one-step basin.
pub fn basin_start(
    rng: &mut ChaCha8Rng,
    pdas: &Pdas<f64>,
    lambda: f64,
    sol: &SolverState<f64>,
) -> Option<SolverState<f64>> {
    let z: Vec<f64> = sol.x.iter().zip(&sol.d).map(|(a, b)| a + b).collect();
    let margin = z
        .iter()
        .map(|v| (v.abs() - lambda).abs())
        .fold(f64::INFINITY, f64::min);
    if !(margin > 1e-9) {
        return None;
    }
    let dir: Vec<f64> = (0..z.len()).map(|_| rng.random_range(-1.0..1.0)).collect();
    let mut tau = margin;
    for _ in 0..60 {
        let x0: Vec<f64> = sol.x.iter().zip(&dir).map(|(a, b)| a + tau * b).collect();
        let st = pdas.initial_state(lambda, &x0).unwrap();
        let z0: Vec<f64> = st.x.iter().zip(&st.d).map(|(a, b)| a + b).collect();
        if max_diff(&z0, &z) < 0.5 * margin {
            return Some(st);
        }
        tau *= 0.5;
    }
    None
}
