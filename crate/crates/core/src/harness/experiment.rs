//! Replicated decode-and-score runs and their CSV output.
//!
//! Replication `r` at every sweep value uses the seed
//! [`replication_seed`]`(seed, r)`, so a sweep compares values on the same
//! draws. Jobs run on a rayon pool and come back ordered by
//! `(sweep index, replication)`, which makes the CSV independent of the
//! thread count.
//!
//! # CSV schema
//!
//! ```text
//! kind,scenario,decoder,sweep_param,sweep_value,rep,seed,m,n,s,nu,sigma,flip_prob,
//! signal,status,err_raw,err_descaled,err_optscale,support_exact,support_size,psnr,
//! pre_percent,lambda_hat,ell_bar[,wall_time]
//! ```
//!
//! `kind` is `rep` for a replication and `aggregate` for the summary that
//! follows the replications of each sweep value. Reals carry 17 significant
//! digits; fields that do not apply are empty. `status` is `ok` or
//! `error: ...` for a replication and `ok` or `failed=k` for an aggregate,
//! whose means are then over the successful replications only.

use std::io::{Read, Write};
use std::time::Instant;

use rayon::prelude::*;

use super::config::{Decoder, ExperimentConfig};
use crate::error::{Error, Result};
use crate::ls::decode_ls;
use crate::metrics::{aggregate, report, DecodeReport, Summary};
use crate::path::{decode_l1_with, refit_support};
use crate::sensing::io::fmt_real;
use crate::sensing::{generate_with, replication_seed, ModelParams};

/// Decoder-specific by-products of one replication.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct DecodeExtras {
    pub lambda_hat: Option<f64>,
    pub ell_bar: Option<usize>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RepRecord {
    pub sweep_index: usize,
    pub sweep_value: Option<f64>,
    pub rep: usize,
    pub params: ModelParams,
    pub outcome: std::result::Result<(DecodeReport, DecodeExtras), String>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepSummary {
    pub sweep_value: Option<f64>,
    pub params: ModelParams,
    /// `None` when every replication failed.
    pub summary: Option<Summary>,
    pub failed: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentResult {
    pub config: ExperimentConfig,
    pub records: Vec<RepRecord>,
    pub summaries: Vec<SweepSummary>,
}

/// Generates, decodes and scores one replication. Wall time covers the decode only.
pub fn run_replication(
    cfg: &ExperimentConfig,
    params: &ModelParams,
) -> Result<(DecodeReport, DecodeExtras)> {
    let problem = generate_with(params, cfg.signal)?;
    let start = Instant::now();
    let (mut x_hat, extras) = match cfg.decoder {
        Decoder::Ls => (decode_ls(&problem)?.x_ls, DecodeExtras::default()),
        Decoder::L1Pdasc => {
            let fit = decode_l1_with(&problem, cfg.path)?;
            let extras = DecodeExtras {
                lambda_hat: Some(fit.selection.lambda_hat),
                ell_bar: Some(fit.selection.ell_bar),
            };
            let x = if cfg.refit {
                refit_support(&problem, &fit.x_hat)?
            } else {
                fit.x_hat
            };
            (x, extras)
        }
    };
    let elapsed = start.elapsed().as_secs_f64();
    if cfg.negate_estimate {
        x_hat.iter_mut().for_each(|v| *v = -*v);
    }
    let truth = problem
        .truth()
        .expect("generated problems carry their truth");
    Ok((report(&x_hat, truth, elapsed), extras))
}

pub fn run_experiment(cfg: &ExperimentConfig) -> Result<ExperimentResult> {
    cfg.validate()?;
    let grid = cfg.grid()?;
    let values: Vec<Option<f64>> = match &cfg.sweep {
        Some(sw) => sw.values.iter().copied().map(Some).collect(),
        None => vec![None],
    };
    let jobs: Vec<(usize, usize)> = (0..grid.len())
        .flat_map(|k| (0..cfg.reps).map(move |r| (k, r)))
        .collect();
    let work = || {
        jobs.par_iter()
            .map(|&(k, rep)| {
                let params = grid[k].with_seed(replication_seed(cfg.params.seed, rep as u64));
                RepRecord {
                    sweep_index: k,
                    sweep_value: values[k],
                    rep,
                    params,
                    outcome: run_replication(cfg, &params).map_err(|e| e.to_string()),
                }
            })
            .collect::<Vec<_>>()
    };
    let records = if cfg.threads == 0 {
        work()
    } else {
        rayon::ThreadPoolBuilder::new()
            .num_threads(cfg.threads)
            .build()
            .map_err(|e| Error::InvalidParams(format!("thread pool: {e}")))?
            .install(work)
    };

    let summaries = records
        .chunks(cfg.reps)
        .zip(&grid)
        .zip(&values)
        .map(|((chunk, params), value)| {
            let ok: Vec<DecodeReport> = chunk
                .iter()
                .filter_map(|r| r.outcome.as_ref().ok().map(|(rep, _)| *rep))
                .collect();
            SweepSummary {
                sweep_value: *value,
                params: params.with_seed(cfg.params.seed),
                summary: aggregate(&ok),
                failed: chunk.len() - ok.len(),
            }
        })
        .collect();
    Ok(ExperimentResult {
        config: cfg.clone(),
        records,
        summaries,
    })
}

pub const COLUMNS: &[&str] = &[
    "kind",
    "scenario",
    "decoder",
    "sweep_param",
    "sweep_value",
    "rep",
    "seed",
    "m",
    "n",
    "s",
    "nu",
    "sigma",
    "flip_prob",
    "signal",
    "status",
    "err_raw",
    "err_descaled",
    "err_optscale",
    "support_exact",
    "support_size",
    "psnr",
    "pre_percent",
    "lambda_hat",
    "ell_bar",
];

/// One CSV line in typed form; replications and aggregates share the layout.
#[derive(Debug, Clone, PartialEq)]
pub struct CsvRow {
    pub kind: String,
    pub scenario: String,
    pub decoder: String,
    pub sweep_param: Option<String>,
    pub sweep_value: Option<f64>,
    pub rep: Option<usize>,
    pub seed: u64,
    pub m: usize,
    pub n: usize,
    pub s: usize,
    pub nu: f64,
    pub sigma: f64,
    pub flip_prob: f64,
    pub signal: String,
    pub status: String,
    pub err_raw: Option<f64>,
    pub err_descaled: Option<f64>,
    pub err_optscale: Option<f64>,
    pub support_exact: Option<bool>,
    /// Mean support size on aggregate rows.
    pub support_size: Option<f64>,
    pub psnr: Option<f64>,
    pub pre_percent: Option<f64>,
    pub lambda_hat: Option<f64>,
    pub ell_bar: Option<usize>,
    pub wall_time: Option<f64>,
}

impl ExperimentResult {
    pub fn rows(&self) -> Vec<CsvRow> {
        let cfg = &self.config;
        let base = |kind: &str, params: &ModelParams, value: Option<f64>| CsvRow {
            kind: kind.into(),
            scenario: cfg.scenario.clone(),
            decoder: cfg.decoder.to_string(),
            sweep_param: cfg.sweep.as_ref().map(|s| s.param.name().to_string()),
            sweep_value: value,
            rep: None,
            seed: params.seed,
            m: params.m,
            n: params.n,
            s: params.s,
            nu: params.nu,
            sigma: params.sigma,
            flip_prob: params.flip_prob,
            signal: cfg.signal.to_string(),
            status: "ok".into(),
            err_raw: None,
            err_descaled: None,
            err_optscale: None,
            support_exact: None,
            support_size: None,
            psnr: None,
            pre_percent: None,
            lambda_hat: None,
            ell_bar: None,
            wall_time: None,
        };
        let mut rows = Vec::with_capacity(self.records.len() + self.summaries.len());
        for (chunk, agg) in self.records.chunks(cfg.reps).zip(&self.summaries) {
            for rec in chunk {
                let mut row = base("rep", &rec.params, rec.sweep_value);
                row.rep = Some(rec.rep);
                match &rec.outcome {
                    Ok((r, extras)) => {
                        row.err_raw = Some(r.err_raw);
                        row.err_descaled = r.err_descaled;
                        row.err_optscale = Some(r.err_optscale);
                        row.support_exact = Some(r.support_exact);
                        row.support_size = Some(r.support_size as f64);
                        row.psnr = Some(r.psnr);
                        row.lambda_hat = extras.lambda_hat;
                        row.ell_bar = extras.ell_bar;
                        row.wall_time = Some(r.wall_time);
                    }
                    Err(msg) => row.status = format!("error: {msg}"),
                }
                rows.push(row);
            }
            let mut row = base("aggregate", &agg.params, agg.sweep_value);
            if agg.failed > 0 {
                row.status = format!("failed={}", agg.failed);
            }
            if let Some(s) = &agg.summary {
                row.err_raw = Some(s.mean_err_raw);
                row.err_descaled = s.mean_err_descaled;
                row.err_optscale = Some(s.mean_err_optscale);
                row.support_size = Some(s.mean_support_size);
                row.psnr = Some(s.mean_psnr);
                row.pre_percent = Some(s.pre_percent);
                row.wall_time = Some(s.mean_time);
            }
            rows.push(row);
        }
        rows
    }

    pub fn write_csv<W: Write>(&self, w: W) -> Result<()> {
        write_rows(&self.rows(), self.config.timing, w)
    }
}

fn opt_real(v: Option<f64>) -> String {
    v.map(fmt_real).unwrap_or_default()
}

fn opt<T: ToString>(v: Option<T>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

pub fn write_rows<W: Write>(rows: &[CsvRow], timing: bool, w: W) -> Result<()> {
    let mut out = csv::Writer::from_writer(w);
    let mut header: Vec<&str> = COLUMNS.to_vec();
    if timing {
        header.push("wall_time");
    }
    out.write_record(&header)?;
    for r in rows {
        let mut rec = vec![
            r.kind.clone(),
            r.scenario.clone(),
            r.decoder.clone(),
            r.sweep_param.clone().unwrap_or_default(),
            opt_real(r.sweep_value),
            opt(r.rep),
            r.seed.to_string(),
            r.m.to_string(),
            r.n.to_string(),
            r.s.to_string(),
            fmt_real(r.nu),
            fmt_real(r.sigma),
            fmt_real(r.flip_prob),
            r.signal.clone(),
            r.status.clone(),
            opt_real(r.err_raw),
            opt_real(r.err_descaled),
            opt_real(r.err_optscale),
            opt(r.support_exact.map(u8::from)),
            opt_real(r.support_size),
            opt_real(r.psnr),
            opt_real(r.pre_percent),
            opt_real(r.lambda_hat),
            opt(r.ell_bar),
        ];
        if timing {
            rec.push(opt_real(r.wall_time));
        }
        out.write_record(&rec)?;
    }
    out.flush()?;
    Ok(())
}

/// Parses CSV written by [`write_rows`]; `wall_time` is read when present.
pub fn read_rows<R: Read>(r: R) -> Result<Vec<CsvRow>> {
    let mut rdr = csv::Reader::from_reader(r);
    let header = rdr.headers()?.clone();
    let timing = match header.len() {
        n if n == COLUMNS.len() => false,
        n if n == COLUMNS.len() + 1 && &header[n - 1] == "wall_time" => true,
        _ => return Err(Error::Format("unexpected experiment CSV header".into())),
    };
    if header.iter().zip(COLUMNS).any(|(a, b)| a != *b) {
        return Err(Error::Format("unexpected experiment CSV header".into()));
    }
    let mut rows = Vec::new();
    for rec in rdr.records() {
        let rec = rec?;
        let field = |i: usize| &rec[i];
        let bad = |i: usize| Error::Format(format!("bad {} field {:?}", COLUMNS[i], &rec[i]));
        let real = |i: usize| -> Result<Option<f64>> {
            match field(i) {
                "" => Ok(None),
                s => s.parse().map(Some).map_err(|_| bad(i)),
            }
        };
        let count = |i: usize| -> Result<Option<usize>> {
            match field(i) {
                "" => Ok(None),
                s => s.parse().map(Some).map_err(|_| bad(i)),
            }
        };
        let need = |i: usize| count(i)?.ok_or_else(|| bad(i));
        let need_real = |i: usize| real(i)?.ok_or_else(|| bad(i));
        rows.push(CsvRow {
            kind: field(0).into(),
            scenario: field(1).into(),
            decoder: field(2).into(),
            sweep_param: (!field(3).is_empty()).then(|| field(3).to_string()),
            sweep_value: real(4)?,
            rep: count(5)?,
            seed: field(6).parse().map_err(|_| bad(6))?,
            m: need(7)?,
            n: need(8)?,
            s: need(9)?,
            nu: need_real(10)?,
            sigma: need_real(11)?,
            flip_prob: need_real(12)?,
            signal: field(13).into(),
            status: field(14).into(),
            err_raw: real(15)?,
            err_descaled: real(16)?,
            err_optscale: real(17)?,
            support_exact: match field(18) {
                "" => None,
                "1" => Some(true),
                "0" => Some(false),
                _ => return Err(bad(18)),
            },
            support_size: real(19)?,
            psnr: real(20)?,
            pre_percent: real(21)?,
            lambda_hat: real(22)?,
            ell_bar: count(23)?,
            wall_time: if timing { real(24)? } else { None },
        });
    }
    Ok(rows)
}
