//! The per-run training log and its CSV form.

use std::io::{Read, Write};
use std::path::Path;

use crate::error::{Error, Result};
use crate::losses::Regime;

#[derive(Debug, Clone, PartialEq)]
pub struct LogRow {
    pub iteration: usize,
    pub lr: f64,
    pub recon: f64,
    pub kl: f64,
    pub total: f64,
    /// `(σ₀, σ₁)`, recorded for l-vae runs only.
    pub sigmas: Option<(f64, f64)>,
    pub effective_beta: f64,
    pub val_betavae: Option<f64>,
}

/// Rows in strictly increasing iteration order. The CSV header is
/// `iteration,lr,recon,kl,total[,sigma0,sigma1],effective_beta,val_betavae`;
/// the σ columns appear only when `sigma_columns` is set and `val_betavae` is
/// empty on rows without an evaluation.
#[derive(Debug, Clone, PartialEq)]
pub struct TrainLog {
    pub sigma_columns: bool,
    pub rows: Vec<LogRow>,
}

impl TrainLog {
    pub fn new(regime: Regime) -> Self {
        Self {
            sigma_columns: regime == Regime::LVae,
            rows: Vec::new(),
        }
    }

    pub fn header(&self) -> Vec<&'static str> {
        let mut h = vec!["iteration", "lr", "recon", "kl", "total"];
        if self.sigma_columns {
            h.extend(["sigma0", "sigma1"]);
        }
        h.extend(["effective_beta", "val_betavae"]);
        h
    }

    /// Rows that carry a validation score.
    pub fn evaluations(&self) -> impl Iterator<Item = (usize, f64)> + '_ {
        self.rows.iter().filter_map(|r| r.val_betavae.map(|s| (r.iteration, s)))
    }

    /// Iteration and score of the highest validation score, earliest on ties.
    pub fn best_evaluation(&self) -> Option<(usize, f64)> {
        self.evaluations()
            .fold(None, |best: Option<(usize, f64)>, (i, s)| match best {
                Some((_, b)) if s <= b => best,
                _ => Some((i, s)),
            })
    }

    pub fn write_csv(&self, out: impl Write) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(self.header())?;
        for r in &self.rows {
            let mut rec = vec![
                r.iteration.to_string(),
                r.lr.to_string(),
                r.recon.to_string(),
                r.kl.to_string(),
                r.total.to_string(),
            ];
            if self.sigma_columns {
                let (s0, s1) = r.sigmas.unwrap_or((f64::NAN, f64::NAN));
                rec.extend([s0.to_string(), s1.to_string()]);
            }
            rec.push(r.effective_beta.to_string());
            rec.push(r.val_betavae.map(|v| v.to_string()).unwrap_or_default());
            w.write_record(&rec)?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        self.write_csv(std::fs::File::create(path)?)
    }

    pub fn read_csv(input: impl Read) -> Result<Self> {
        let mut r = csv::Reader::from_reader(input);
        let header: Vec<String> = r.headers()?.iter().map(str::to_string).collect();
        let sigma_columns = match header.len() {
            7 => false,
            9 => true,
            n => return Err(Error::Data(format!("train log header has {n} columns"))),
        };
        let log = Self {
            sigma_columns,
            rows: Vec::new(),
        };
        if header != log.header() {
            return Err(Error::Data(format!("unexpected train log header {header:?}")));
        }
        let num = |s: &str| {
            s.parse::<f64>()
                .map_err(|_| Error::Data(format!("bad number {s:?} in train log")))
        };
        let mut rows = Vec::new();
        for rec in r.records() {
            let rec = rec?;
            let f: Vec<&str> = rec.iter().collect();
            let iteration = f[0]
                .parse()
                .map_err(|_| Error::Data(format!("bad iteration {:?}", f[0])))?;
            let mut i = 5;
            let sigmas = if sigma_columns {
                i = 7;
                Some((num(f[5])?, num(f[6])?))
            } else {
                None
            };
            rows.push(LogRow {
                iteration,
                lr: num(f[1])?,
                recon: num(f[2])?,
                kl: num(f[3])?,
                total: num(f[4])?,
                sigmas,
                effective_beta: num(f[i])?,
                val_betavae: if f[i + 1].is_empty() {
                    None
                } else {
                    Some(num(f[i + 1])?)
                },
            });
        }
        Ok(Self { rows, ..log })
    }
}
