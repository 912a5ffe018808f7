//! The 1-bit measurement model `y = η ⊙ sign(Ψx* + ε)` and synthetic instances.
//!
//! Rows of `Ψ` are drawn from `N(0, Σ)` with the AR(1) Toeplitz covariance
//! `Σ_jk = ν^|j-k|`, `ε ~ N(0, σ² I)` and each sign is flipped independently
//! with probability `flip_prob`. The truth has `s` nonzeros at uniformly
//! random positions, `±1` by default or standard normal with
//! [`SignalShape::Normal`], and is normalized so `‖x*‖_Σ = 1`.
//!
//! # Randomness
//!
//! Every draw comes from ChaCha8 seeded with `ModelParams::seed`, one stream
//! per source so that the realizations are independent of each other and of
//! evaluation order:
//!
//! | stream | source                                  |
//! |--------|-----------------------------------------|
//! | 0      | rows of `Ψ`                             |
//! | 1      | support and nonzero values of `x*`      |
//! | 2      | noise `ε`                               |
//! | 3      | flips `η`                               |
//! | 4..=6  | fresh `(ψ, ε, η)` for Monte-Carlo checks |
//!
//! Replication `r` of a scenario with seed `S` uses [`replication_seed`]`(S, r)`.

pub mod io;

use rand::seq::index;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};
use crate::linalg::{cholesky, norm2, DenseMatrix};
use crate::scalar::Scalar;

const STREAM_PSI: u64 = 0;
const STREAM_SIGNAL: u64 = 1;
const STREAM_NOISE: u64 = 2;
const STREAM_FLIP: u64 = 3;
const STREAM_MC_PSI: u64 = 4;
const STREAM_MC_NOISE: u64 = 5;
const STREAM_MC_FLIP: u64 = 6;

/// Scenario parameters `{m, n, s, ν, σ, q}` plus the seed.
///
/// `flip_prob` is the probability that a measurement's sign is flipped.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ModelParams {
    pub m: usize,
    pub n: usize,
    pub s: usize,
    pub nu: f64,
    pub sigma: f64,
    pub flip_prob: f64,
    pub seed: u64,
}

impl ModelParams {
    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidParams(msg));
        if self.m == 0 || self.n == 0 {
            return bad(format!(
                "m and n must be positive (m = {}, n = {})",
                self.m, self.n
            ));
        }
        if self.s == 0 || self.s > self.n {
            return bad(format!(
                "sparsity s = {} must lie in [1, n = {}]",
                self.s, self.n
            ));
        }
        if !(0.0..1.0).contains(&self.nu) {
            return bad(format!("nu = {} must lie in [0, 1)", self.nu));
        }
        if !(self.sigma >= 0.0 && self.sigma.is_finite()) {
            return bad(format!("sigma = {} must be finite and >= 0", self.sigma));
        }
        if !(0.0..=1.0).contains(&self.flip_prob) {
            return bad(format!(
                "flip probability {} must lie in [0, 1]",
                self.flip_prob
            ));
        }
        Ok(())
    }

    pub fn with_seed(self, seed: u64) -> Self {
        Self { seed, ..self }
    }
}

/// What generated a synthetic problem.
#[derive(Debug, Clone, PartialEq)]
pub struct GroundTruth {
    pub x_star: Vec<f64>,
    /// Sorted nonzero positions of `x_star`.
    pub support: Vec<usize>,
    pub c_scale: f64,
    pub params: ModelParams,
    pub signal: SignalShape,
}

/// Sensing matrix and ±1 measurements, optionally with the generating truth.
#[derive(Debug, Clone, PartialEq)]
pub struct SensingProblem<T> {
    psi: DenseMatrix<T>,
    y: Vec<T>,
    truth: Option<GroundTruth>,
}

impl<T: Scalar> SensingProblem<T> {
    pub fn new(psi: DenseMatrix<T>, y: Vec<T>) -> Result<Self> {
        if psi.rows() != y.len() {
            return Err(Error::DimensionMismatch {
                op: "SensingProblem::new",
                expected: psi.rows(),
                got: y.len(),
            });
        }
        if let Some((index, v)) = y
            .iter()
            .enumerate()
            .find(|(_, v)| **v != T::one() && **v != -T::one())
        {
            return Err(Error::InvalidMeasurement {
                index,
                value: v.as_f64(),
            });
        }
        Ok(Self {
            psi,
            y,
            truth: None,
        })
    }

    pub fn with_truth(mut self, truth: GroundTruth) -> Result<Self> {
        if truth.x_star.len() != self.n() {
            return Err(Error::DimensionMismatch {
                op: "SensingProblem::with_truth",
                expected: self.n(),
                got: truth.x_star.len(),
            });
        }
        self.truth = Some(truth);
        Ok(self)
    }

    pub fn psi(&self) -> &DenseMatrix<T> {
        &self.psi
    }

    pub fn y(&self) -> &[T] {
        &self.y
    }

    pub fn truth(&self) -> Option<&GroundTruth> {
        self.truth.as_ref()
    }

    pub fn m(&self) -> usize {
        self.psi.rows()
    }

    pub fn n(&self) -> usize {
        self.psi.cols()
    }

    /// `Ψᵗy / m`
    pub fn correlation(&self) -> Vec<T> {
        let m = T::of_usize(self.m());
        let mut c = self
            .psi
            .matvec_t(&self.y)
            .expect("shapes checked at construction");
        c.iter_mut().for_each(|v| *v /= m);
        c
    }

    /// `λ₀ = ‖Ψᵗy/m‖_∞`, the smallest λ at which zero solves the ℓ1 problem.
    pub fn lambda_max(&self) -> T {
        crate::linalg::norm_inf(&self.correlation())
    }

    /// The same design with every measurement negated, i.e. the realization
    /// with complemented sign flips.
    pub fn negated(&self) -> Self {
        Self {
            psi: self.psi.clone(),
            y: self.y.iter().map(|&v| -v).collect(),
            truth: self.truth.clone(),
        }
    }

    pub fn cast<U: Scalar>(&self) -> SensingProblem<U> {
        SensingProblem {
            psi: self.psi.cast(),
            y: self.y.iter().map(|v| U::of(v.as_f64())).collect(),
            truth: self.truth.clone(),
        }
    }
}

/// `sign(z)` with `sign(0) = +1`.
#[inline]
pub fn sign(z: f64) -> f64 {
    if z >= 0.0 {
        1.0
    } else {
        -1.0
    }
}

/// `c = (2q − 1)·√(2 / (π(σ² + 1)))` with `q = 1 − flip_prob`.
pub fn scale_constant(sigma: f64, flip_prob: f64) -> f64 {
    let q = 1.0 - flip_prob;
    (2.0 * q - 1.0) * (2.0 / (std::f64::consts::PI * (sigma * sigma + 1.0))).sqrt()
}

/// Explicit `Σ_jk = ν^|j-k|` (with `0⁰ = 1`).
pub fn toeplitz_covariance(n: usize, nu: f64) -> DenseMatrix<f64> {
    let data = (0..n * n)
        .map(|k| nu.powi((k / n).abs_diff(k % n) as i32))
        .collect();
    DenseMatrix::new(n, n, data).expect("finite by construction")
}

/// `‖x‖_Σ = (xᵗΣx)^{1/2}` under the AR(1) covariance, summed over nonzeros.
pub fn elliptic_norm(x: &[f64], nu: f64) -> f64 {
    let nz: Vec<(usize, f64)> = x
        .iter()
        .copied()
        .enumerate()
        .filter(|(_, v)| *v != 0.0)
        .collect();
    let mut q = 0.0;
    for &(j, a) in &nz {
        for &(k, b) in &nz {
            q += a * b * nu.powi(j.abs_diff(k) as i32);
        }
    }
    q.sqrt()
}

/// Seed of replication `r` for a scenario seeded with `seed` (splitmix64 mix).
pub fn replication_seed(seed: u64, r: u64) -> u64 {
    let mut z = seed ^ r.wrapping_add(1).wrapping_mul(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

fn stream(seed: u64, id: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(id);
    rng
}

/// One row of `Ψ` by the AR(1) recursion `ψ_j = νψ_{j−1} + √(1−ν²) g_j`,
/// whose covariance is exactly `ν^|j-k|`.
fn fill_ar1_row(rng: &mut ChaCha8Rng, nu: f64, out: &mut [f64]) {
    let innov = (1.0 - nu * nu).sqrt();
    let mut prev = 0.0;
    for (j, v) in out.iter_mut().enumerate() {
        let g: f64 = rng.sample(StandardNormal);
        prev = if j == 0 { g } else { nu * prev + innov * g };
        *v = prev;
    }
}

/// Distribution of the nonzero entries of `x*` before normalization.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum SignalShape {
    /// Standard normal values.
    Normal,
    /// `±1` with random signs, so every nonzero has the same magnitude.
    #[default]
    EqualMagnitude,
}

impl std::str::FromStr for SignalShape {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "normal" => Ok(Self::Normal),
            "equal" => Ok(Self::EqualMagnitude),
            other => Err(Error::InvalidParams(format!(
                "unknown signal shape {other:?}, expected normal or equal"
            ))),
        }
    }
}

impl std::fmt::Display for SignalShape {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Self::Normal => "normal",
            Self::EqualMagnitude => "equal",
        })
    }
}

/// Draws `x*` with the default [`SignalShape`]; see [`draw_truth_with`].
pub fn draw_truth(params: &ModelParams) -> Result<GroundTruth> {
    draw_truth_with(params, SignalShape::default())
}

/// `s` uniformly placed nonzeros of the given shape, rescaled to `‖x*‖_Σ = 1`.
pub fn draw_truth_with(params: &ModelParams, shape: SignalShape) -> Result<GroundTruth> {
    params.validate()?;
    let mut rng = stream(params.seed, STREAM_SIGNAL);
    let mut support = index::sample(&mut rng, params.n, params.s).into_vec();
    support.sort_unstable();
    let mut x_star = vec![0.0; params.n];
    for &j in &support {
        x_star[j] = match shape {
            // a draw of exactly zero would shrink the support
            SignalShape::Normal => loop {
                let v: f64 = rng.sample(StandardNormal);
                if v != 0.0 {
                    break v;
                }
            },
            SignalShape::EqualMagnitude => {
                if rng.random::<bool>() {
                    1.0
                } else {
                    -1.0
                }
            }
        };
    }
    let norm = elliptic_norm(&x_star, params.nu);
    x_star.iter_mut().for_each(|v| *v /= norm);
    Ok(GroundTruth {
        x_star,
        support,
        c_scale: scale_constant(params.sigma, params.flip_prob),
        params: *params,
        signal: shape,
    })
}

/// Synthetic instance; identical parameters give bit-identical output.
pub fn generate(params: &ModelParams) -> Result<SensingProblem<f64>> {
    generate_with(params, SignalShape::default())
}

pub fn generate_with(params: &ModelParams, shape: SignalShape) -> Result<SensingProblem<f64>> {
    let truth = draw_truth_with(params, shape)?;
    let (m, n) = (params.m, params.n);

    let mut rng_psi = stream(params.seed, STREAM_PSI);
    let mut rng_eps = stream(params.seed, STREAM_NOISE);
    let mut rng_eta = stream(params.seed, STREAM_FLIP);

    let mut data = vec![0.0; m * n];
    let mut y = Vec::with_capacity(m);
    for row in data.chunks_mut(n) {
        fill_ar1_row(&mut rng_psi, params.nu, row);
        y.push(measure(row, &truth, params, &mut rng_eps, &mut rng_eta));
    }
    SensingProblem::new(DenseMatrix::new(m, n, data)?, y)?.with_truth(truth)
}

fn measure(
    row: &[f64],
    truth: &GroundTruth,
    params: &ModelParams,
    rng_eps: &mut ChaCha8Rng,
    rng_eta: &mut ChaCha8Rng,
) -> f64 {
    let signal: f64 = truth
        .support
        .iter()
        .map(|&j| row[j] * truth.x_star[j])
        .sum();
    let g: f64 = rng_eps.sample(StandardNormal);
    let u: f64 = rng_eta.random();
    let eta = if u < params.flip_prob { -1.0 } else { 1.0 };
    eta * sign(signal + params.sigma * g)
}

/// Monte-Carlo estimate of `‖Σ⁻¹·mean(yψ)/c − x*‖₂` over `mc_samples` fresh draws.
///
/// The population value is zero; the estimate shrinks like `1/√mc_samples`.
pub fn verify_population_identity(params: &ModelParams, mc_samples: usize) -> Result<f64> {
    let truth = draw_truth(params)?;
    if truth.c_scale.abs() < 1e-12 {
        return Err(Error::DegenerateScale);
    }
    if mc_samples == 0 {
        return Err(Error::InvalidParams("mc_samples must be positive".into()));
    }
    let n = params.n;
    let mut rng_psi = stream(params.seed, STREAM_MC_PSI);
    let mut rng_eps = stream(params.seed, STREAM_MC_NOISE);
    let mut rng_eta = stream(params.seed, STREAM_MC_FLIP);

    let mut row = vec![0.0; n];
    let mut acc = vec![0.0; n];
    for _ in 0..mc_samples {
        fill_ar1_row(&mut rng_psi, params.nu, &mut row);
        let y = measure(&row, &truth, params, &mut rng_eps, &mut rng_eta);
        crate::linalg::axpy(y, &row, &mut acc);
    }
    let mean: Vec<f64> = acc.iter().map(|v| v / mc_samples as f64).collect();
    let sigma = toeplitz_covariance(n, params.nu);
    let est = cholesky(&sigma)?.solve(&mean)?;
    let diff: Vec<f64> = est
        .iter()
        .zip(&truth.x_star)
        .map(|(e, x)| e / truth.c_scale - x)
        .collect();
    Ok(norm2(&diff))
}
