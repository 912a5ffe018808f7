//! Problem container and CSV export.
//!
//! Binary layout, all integers and floats little-endian:
//!
//! ```text
//! offset  size      field
//! 0       4         magic b"OB1T"
//! 4       1         version (= 1)
//! 5       8         m  (u64)
//! 13      8         n  (u64)
//! 21      8·m·n     Ψ, row-major f64
//! ..      m         y as i8 (±1)
//! ..      1         truth flag (0 or 1)
//! truth block, present when the flag is 1:
//!         8·n       x* (f64)
//!         8         support size s (u64)
//!         8·s       support indices (u64, ascending)
//!         8         c (f64)
//!         8·3       params m, n, s (u64)
//!         8·3       params nu, sigma, flip_prob (f64)
//!         8         params seed (u64)
//!         1         signal shape (0 normal, 1 equal magnitude)
//! ```
//!
//! The CSV export has a header `y,psi_0,...,psi_{n-1}` and one row per
//! measurement, reals printed with 17 significant digits.

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use super::{GroundTruth, ModelParams, SensingProblem, SignalShape};
use crate::error::{Error, Result};
use crate::linalg::DenseMatrix;

pub const MAGIC: &[u8; 4] = b"OB1T";
pub const VERSION: u8 = 1;

pub fn write_problem<W: Write>(problem: &SensingProblem<f64>, mut w: W) -> Result<()> {
    w.write_all(MAGIC)?;
    w.write_all(&[VERSION])?;
    w.write_all(&(problem.m() as u64).to_le_bytes())?;
    w.write_all(&(problem.n() as u64).to_le_bytes())?;
    for v in problem.psi().as_slice() {
        w.write_all(&v.to_le_bytes())?;
    }
    let signs: Vec<u8> = problem.y().iter().map(|&v| (v as i8) as u8).collect();
    w.write_all(&signs)?;
    match problem.truth() {
        None => w.write_all(&[0])?,
        Some(t) => {
            w.write_all(&[1])?;
            for v in &t.x_star {
                w.write_all(&v.to_le_bytes())?;
            }
            w.write_all(&(t.support.len() as u64).to_le_bytes())?;
            for &j in &t.support {
                w.write_all(&(j as u64).to_le_bytes())?;
            }
            w.write_all(&t.c_scale.to_le_bytes())?;
            let p = &t.params;
            for u in [p.m as u64, p.n as u64, p.s as u64] {
                w.write_all(&u.to_le_bytes())?;
            }
            for f in [p.nu, p.sigma, p.flip_prob] {
                w.write_all(&f.to_le_bytes())?;
            }
            w.write_all(&p.seed.to_le_bytes())?;
            w.write_all(&[match t.signal {
                SignalShape::Normal => 0,
                SignalShape::EqualMagnitude => 1,
            }])?;
        }
    }
    w.flush()?;
    Ok(())
}

struct Cursor<R> {
    inner: R,
}

impl<R: Read> Cursor<R> {
    fn bytes<const N: usize>(&mut self, what: &str) -> Result<[u8; N]> {
        let mut buf = [0u8; N];
        self.inner
            .read_exact(&mut buf)
            .map_err(|e| match e.kind() {
                std::io::ErrorKind::UnexpectedEof => Error::Format(format!("truncated at {what}")),
                _ => Error::Io(e),
            })?;
        Ok(buf)
    }

    fn u64(&mut self, what: &str) -> Result<u64> {
        Ok(u64::from_le_bytes(self.bytes::<8>(what)?))
    }

    fn usize(&mut self, what: &str) -> Result<usize> {
        usize::try_from(self.u64(what)?).map_err(|_| Error::Format(format!("{what} overflows")))
    }

    fn f64(&mut self, what: &str) -> Result<f64> {
        Ok(f64::from_le_bytes(self.bytes::<8>(what)?))
    }
}

pub fn read_problem<R: Read>(r: R) -> Result<SensingProblem<f64>> {
    let mut c = Cursor { inner: r };
    if &c.bytes::<4>("magic")? != MAGIC {
        return Err(Error::Format("bad magic, expected OB1T".into()));
    }
    let [version] = c.bytes::<1>("version")?;
    if version != VERSION {
        return Err(Error::Format(format!("unsupported version {version}")));
    }
    let m = c.usize("m")?;
    let n = c.usize("n")?;
    let len = m
        .checked_mul(n)
        .ok_or_else(|| Error::Format("m·n overflows".into()))?;
    let mut psi = Vec::with_capacity(len.min(1 << 24));
    for _ in 0..len {
        psi.push(c.f64("psi")?);
    }
    let mut y = Vec::with_capacity(m.min(1 << 24));
    for _ in 0..m {
        let [b] = c.bytes::<1>("y")?;
        y.push(f64::from(b as i8));
    }
    let problem = SensingProblem::new(DenseMatrix::new(m, n, psi)?, y)?;
    let [flag] = c.bytes::<1>("truth flag")?;
    match flag {
        0 => Ok(problem),
        1 => {
            let x_star = (0..n).map(|_| c.f64("x*")).collect::<Result<Vec<_>>>()?;
            let s = c.usize("support size")?;
            if s > n {
                return Err(Error::Format(format!("support size {s} exceeds n = {n}")));
            }
            let support = (0..s)
                .map(|_| c.usize("support"))
                .collect::<Result<Vec<_>>>()?;
            let c_scale = c.f64("c")?;
            let params = ModelParams {
                m: c.usize("params.m")?,
                n: c.usize("params.n")?,
                s: c.usize("params.s")?,
                nu: c.f64("params.nu")?,
                sigma: c.f64("params.sigma")?,
                flip_prob: c.f64("params.flip")?,
                seed: c.u64("params.seed")?,
            };
            let signal = match c.bytes::<1>("signal shape")? {
                [0] => SignalShape::Normal,
                [1] => SignalShape::EqualMagnitude,
                [other] => return Err(Error::Format(format!("bad signal shape {other}"))),
            };
            problem.with_truth(GroundTruth {
                x_star,
                support,
                c_scale,
                params,
                signal,
            })
        }
        other => Err(Error::Format(format!("bad truth flag {other}"))),
    }
}

pub fn save_problem(problem: &SensingProblem<f64>, path: &Path) -> Result<()> {
    let f = File::create(path)?;
    write_problem(problem, BufWriter::new(f))
}

pub fn load_problem(path: &Path) -> Result<SensingProblem<f64>> {
    read_problem(BufReader::new(File::open(path)?))
}

/// Formats a real with 17 significant digits, enough for a lossless round trip.
pub fn fmt_real(v: f64) -> String {
    format!("{v:.16e}")
}

pub fn write_problem_csv<W: Write>(problem: &SensingProblem<f64>, w: W) -> Result<()> {
    let mut out = csv::Writer::from_writer(w);
    let mut header = vec!["y".to_string()];
    header.extend((0..problem.n()).map(|j| format!("psi_{j}")));
    out.write_record(&header)?;
    for i in 0..problem.m() {
        let mut rec = vec![format!("{}", problem.y()[i] as i8)];
        rec.extend(problem.psi().row(i).iter().map(|&v| fmt_real(v)));
        out.write_record(&rec)?;
    }
    out.flush()?;
    Ok(())
}
