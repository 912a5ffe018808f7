//! Acceptance suite: one PASS/FAIL line per criterion, exit status 1 if any fails.
//!
//! Runs under `cargo test --test acceptance` (release-level optimization comes
//! from the test profile).

mod common;

use std::process::ExitCode;
use std::time::Instant;

use common::{basin_start, exact_solution, max_diff, newton_step, rng, small_problem};
use onebit::harness::config::DEFAULT_SEED;
use onebit::harness::theory::{lemma_params, scaling_setup, LEMMA_SAMPLES, LEMMA_TOL, RATIO_BAND};
use onebit::harness::{check_theory, run_experiment, ExperimentConfig, TheoryCheck, TheoryOptions};
use onebit::oracle::objective;
use onebit::{generate, ista_solve, verify_population_identity, ModelParams, Pdas};
use rand::Rng;

struct Outcome {
    passed: bool,
    detail: String,
}

fn outcome(passed: bool, detail: String) -> Outcome {
    Outcome { passed, detail }
}

fn kkt_and_oracle() -> Outcome {
    let mut r = rng(1);
    let (mut checked, mut worst_kkt, mut worst_gap) = (0, 0.0f64, 0.0f64);
    for k in 0..100 {
        let p = small_problem(&mut r, 1000 + k);
        let pdas = Pdas::new(&p);
        let lambda0 = p.lambda_max();
        let mut x = vec![0.0; p.n()];
        for frac in [0.7, 0.4, 0.2] {
            let lambda = frac * lambda0;
            let Ok(out) = pdas.solve(lambda, &x, 100) else {
                break;
            };
            if !out.converged {
                break;
            }
            let ista = ista_solve(&p, lambda, 1e-10, 5_000_000).expect("ISTA converges");
            let gap = (objective(&p, &out.state.x, lambda).unwrap() - ista.objective).abs();
            worst_kkt = worst_kkt.max(out.kkt_residual);
            worst_gap = worst_gap.max(gap);
            checked += 1;
            x = out.state.x;
        }
    }
    outcome(
        worst_kkt <= 1e-8 && worst_gap <= 1e-8 && checked > 0,
        format!("{checked}/300 converged solutions, max KKT residual {worst_kkt:.2e}, max objective gap {worst_gap:.2e}"),
    )
}

fn one_step() -> Outcome {
    let mut r = rng(2);
    let (mut used, mut worst) = (0, 0.0f64);
    for k in 0..500 {
        if used == 50 {
            break;
        }
        let p = small_problem(&mut r, 2000 + k);
        let pdas = Pdas::new(&p);
        let Some((lambda, sol)) = exact_solution(&pdas, 0.3) else {
            continue;
        };
        let Some(start) = basin_start(&mut r, &pdas, lambda, &sol) else {
            continue;
        };
        let out = pdas.solve(lambda, &start.x, 1).unwrap();
        worst = worst.max(max_diff(&out.state.x, &sol.x));
        used += 1;
    }
    outcome(
        used == 50 && worst <= 1e-10,
        format!("{used} instances, max |x1 - x| {worst:.2e}"),
    )
}

fn newton() -> Outcome {
    let mut r = rng(3);
    let mut worst = 0.0f64;
    for k in 0..50 {
        let n = r.random_range(5..=20);
        let p = generate(&ModelParams {
            m: r.random_range(n + 5..=60),
            n,
            s: r.random_range(1..=3),
            nu: if k % 2 == 0 { 0.0 } else { 0.3 },
            sigma: 0.1,
            flip_prob: 0.02,
            seed: 3000 + k,
        })
        .unwrap();
        let pdas = Pdas::new(&p);
        let lambda = r.random_range(0.2..0.9) * p.lambda_max();
        let st = common::random_state(&mut r, &pdas, lambda);
        let next = pdas.iterate(&st).unwrap();
        let (xn, dn) = newton_step(&p, &st.x, &st.d, lambda);
        worst = worst
            .max(max_diff(&next.x, &xn))
            .max(max_diff(&next.d, &dn));
    }
    outcome(
        worst <= 1e-10,
        format!("50 instances, max step difference {worst:.2e}"),
    )
}

fn lemma() -> Outcome {
    let dist = verify_population_identity(&lemma_params(DEFAULT_SEED), LEMMA_SAMPLES).unwrap();
    outcome(
        dist <= LEMMA_TOL,
        format!("distance {dist:.4} over {LEMMA_SAMPLES} samples"),
    )
}

fn preset(name: &str) -> ExperimentConfig {
    ExperimentConfig::preset(name, false).unwrap()
}

fn table1_a() -> Outcome {
    let cfg = preset("table1-a");
    let res = run_experiment(&cfg).unwrap();
    let s = res.summaries[0].summary.unwrap();
    let refit = run_experiment(&ExperimentConfig { refit: true, ..cfg }).unwrap();
    let sr = refit.summaries[0].summary.unwrap();
    let err = s.mean_err_optscale;
    outcome(
        s.pre_percent >= 95.0 && (0.03..=0.15).contains(&err),
        format!(
            "PrE {:.0}%, mean err_optscale {err:.4e} (support refit, not scored: {:.4e})",
            s.pre_percent, sr.mean_err_optscale
        ),
    )
}

fn table1_c() -> Outcome {
    let res = run_experiment(&preset("table1-c")).unwrap();
    let s = res.summaries[0].summary.unwrap();
    outcome(s.pre_percent >= 55.0, format!("PrE {:.0}%", s.pre_percent))
}

fn ols_sweeps() -> Outcome {
    let mut worst = 0.0f64;
    for name in ["fig2", "fig3-left", "fig3-right"] {
        let res = run_experiment(&preset(name)).unwrap();
        for s in &res.summaries {
            let e = s.summary.map_or(f64::INFINITY, |s| s.mean_err_optscale);
            worst = worst.max(e);
        }
    }
    outcome(
        worst <= 0.2,
        format!("max mean err_optscale over all grid points {worst:.4e}"),
    )
}

fn scaling() -> Outcome {
    let opts = TheoryOptions::default();
    let ls = check_theory(TheoryCheck::ScalingLs, &opts).unwrap();
    let l1 = check_theory(TheoryCheck::ScalingL1, &opts).unwrap();
    let (lo, hi) = RATIO_BAND;
    let ok = |v: f64| (lo..=hi).contains(&v);
    outcome(
        ok(ls.value) && ok(l1.value),
        format!("ratio ls {:.4}, l1 {:.4}", ls.value, l1.value),
    )
}

fn fig1() -> Outcome {
    let res = run_experiment(&preset("fig1")).unwrap();
    let hits = res
        .records
        .iter()
        .filter(|r| {
            r.outcome
                .as_ref()
                .is_ok_and(|(rep, ex)| ex.ell_bar == Some(5) && rep.support_exact)
        })
        .count();
    outcome(
        hits >= 90,
        format!("ell_bar = 5 with exact support in {hits}/100"),
    )
}

fn csv_bytes(cfg: &ExperimentConfig, threads: usize) -> Vec<u8> {
    let res = run_experiment(&ExperimentConfig {
        threads,
        ..cfg.clone()
    })
    .unwrap();
    let mut buf = Vec::new();
    res.write_csv(&mut buf).unwrap();
    buf
}

fn determinism() -> Outcome {
    let mut configs: Vec<ExperimentConfig> = [
        "table1-a",
        "table1-c",
        "fig2",
        "fig3-left",
        "fig3-right",
        "fig1",
    ]
    .into_iter()
    .map(preset)
    .collect();
    for check in [TheoryCheck::ScalingLs, TheoryCheck::ScalingL1] {
        let (base, decoder, m_small, m_large) = scaling_setup(check).unwrap();
        for m in [m_small, m_large] {
            configs.push(ExperimentConfig {
                scenario: check.name().into(),
                params: ModelParams {
                    m,
                    seed: DEFAULT_SEED,
                    ..base
                },
                reps: TheoryOptions::default().reps,
                decoder,
                ..ExperimentConfig::default()
            });
        }
    }
    let mut differing = Vec::new();
    for cfg in &configs {
        let a = csv_bytes(cfg, 1);
        if a != csv_bytes(cfg, 4) || a != csv_bytes(cfg, 1) {
            differing.push(format!("{} (m = {})", cfg.scenario, cfg.params.m));
        }
    }
    let lemma = |_| verify_population_identity(&lemma_params(DEFAULT_SEED), LEMMA_SAMPLES).unwrap();
    let lemma_same = lemma(0).to_bits() == lemma(1).to_bits();
    let detail = if differing.is_empty() {
        format!(
            "{} experiment CSVs identical across 1/4 threads and reruns",
            configs.len()
        )
    } else {
        format!("differing: {}", differing.join(", "))
    };
    outcome(differing.is_empty() && lemma_same, detail)
}

fn main() -> ExitCode {
    let criteria: [(&str, fn() -> Outcome); 10] = [
        ("kkt-oracle", kkt_and_oracle),
        ("one-step", one_step),
        ("newton", newton),
        ("population-identity", lemma),
        ("table1-a", table1_a),
        ("table1-c", table1_c),
        ("ols-robustness", ols_sweeps),
        ("scaling", scaling),
        ("fig1-voting", fig1),
        ("determinism", determinism),
    ];
    let mut failed = 0;
    for (k, (name, run)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let o = run();
        let verdict = if o.passed { "PASS" } else { "FAIL" };
        failed += usize::from(!o.passed);
        println!(
            "{verdict} criterion {}: {name}: {} [{:.1}s]",
            k + 1,
            o.detail,
            start.elapsed().as_secs_f64()
        );
    }
    println!(
        "acceptance: {} passed, {failed} failed",
        criteria.len() - failed
    );
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
