//! Recovery metrics: three flavors of ℓ2 error, exact support recovery, PSNR.
//!
//! `err_raw` compares the estimate as is, `err_descaled` divides by the model
//! constant `c` first and `err_optscale` uses the best scalar multiple
//! `α* = ⟨x̂, x*⟩/‖x̂‖²`. The last is what the harness aggregates.

use crate::linalg::{dot, norm2};
use crate::sensing::GroundTruth;

/// Scale constants this small make `x̂/c` meaningless.
const MIN_SCALE: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DecodeReport {
    pub err_raw: f64,
    /// `None` when `|c| ≤ 1e-12`.
    pub err_descaled: Option<f64>,
    pub err_optscale: f64,
    pub support_exact: bool,
    pub psnr: f64,
    pub support_size: usize,
    pub wall_time: f64,
}

/// Panics if `x_hat` and the truth differ in length.
pub fn report(x_hat: &[f64], truth: &GroundTruth, wall_time: f64) -> DecodeReport {
    let x_star = &truth.x_star;
    assert_eq!(
        x_hat.len(),
        x_star.len(),
        "estimate and truth lengths differ"
    );
    let err_raw = distance(x_hat, x_star, 1.0);
    let err_descaled =
        (truth.c_scale.abs() > MIN_SCALE).then(|| distance(x_hat, x_star, 1.0 / truth.c_scale));
    let nn = dot(x_hat, x_hat);
    let alpha = if nn > 0.0 {
        dot(x_hat, x_star) / nn
    } else {
        0.0
    };
    let err_optscale = distance(x_hat, x_star, alpha);
    let support: Vec<usize> = (0..x_hat.len()).filter(|&j| x_hat[j] != 0.0).collect();
    DecodeReport {
        err_raw,
        err_descaled,
        err_optscale,
        support_exact: support == truth.support,
        psnr: psnr(x_hat, x_star),
        support_size: support.len(),
        wall_time,
    }
}

/// `‖αx̂ − x*‖₂`
fn distance(x_hat: &[f64], x_star: &[f64], alpha: f64) -> f64 {
    let diff: Vec<f64> = x_hat
        .iter()
        .zip(x_star)
        .map(|(a, b)| alpha * a - b)
        .collect();
    norm2(&diff)
}

/// `10·log₁₀(V²/MSE)` with `V = ‖x*‖_∞`; `+∞` for a perfect estimate.
pub fn psnr(x_hat: &[f64], x_star: &[f64]) -> f64 {
    assert_eq!(
        x_hat.len(),
        x_star.len(),
        "estimate and truth lengths differ"
    );
    let mse = x_hat
        .iter()
        .zip(x_star)
        .map(|(a, b)| (a - b) * (a - b))
        .sum::<f64>()
        / x_star.len() as f64;
    if mse == 0.0 {
        return f64::INFINITY;
    }
    let v = x_star.iter().fold(0.0f64, |acc, x| acc.max(x.abs()));
    10.0 * (v * v / mse).log10()
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Summary {
    pub count: usize,
    pub mean_err_raw: f64,
    /// Mean over the reports where the descaled error is defined.
    pub mean_err_descaled: Option<f64>,
    pub mean_err_optscale: f64,
    /// Percentage of reports with exact support recovery.
    pub pre_percent: f64,
    pub mean_psnr: f64,
    pub mean_support_size: f64,
    pub mean_time: f64,
}

/// Arithmetic means over `reports`; `None` for an empty slice.
pub fn aggregate(reports: &[DecodeReport]) -> Option<Summary> {
    if reports.is_empty() {
        return None;
    }
    let k = reports.len() as f64;
    let mean = |f: &dyn Fn(&DecodeReport) -> f64| reports.iter().map(f).sum::<f64>() / k;
    let descaled: Vec<f64> = reports.iter().filter_map(|r| r.err_descaled).collect();
    Some(Summary {
        count: reports.len(),
        mean_err_raw: mean(&|r| r.err_raw),
        mean_err_descaled: (!descaled.is_empty())
            .then(|| descaled.iter().sum::<f64>() / descaled.len() as f64),
        mean_err_optscale: mean(&|r| r.err_optscale),
        pre_percent: 100.0 * reports.iter().filter(|r| r.support_exact).count() as f64 / k,
        mean_psnr: mean(&|r| r.psnr),
        mean_support_size: mean(&|r| r.support_size as f64),
        mean_time: mean(&|r| r.wall_time),
    })
}
