//! Samples of the transfer function, the input of the inverse problem.

use std::io::Read;

use serde::Serialize;

use crate::error::{validation, Result};
use crate::format::{csv_metadata, fmt17};

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TransferSample {
    pub lambda: f64,
    pub h: f64,
    pub sigma: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Provenance {
    Synthetic { seed: u64, noise_rel: f64 },
    External,
}

/// Samples `(lambda_i, H_i, sigma_i)` with distinct ascending `lambda_i`, positive `H_i`
/// and positive `sigma_i`.
#[derive(Debug, Clone, PartialEq)]
pub struct TransferDataset {
    samples: Vec<TransferSample>,
    provenance: Provenance,
}

impl TransferDataset {
    /// Sorts by `lambda` and validates.
    pub fn new(mut samples: Vec<TransferSample>, provenance: Provenance) -> Result<Self> {
        if samples.is_empty() {
            return Err(validation("dataset has no samples"));
        }
        for s in &samples {
            if !(s.lambda > 0.0 && s.lambda.is_finite()) {
                return Err(validation(format!("lambda must be positive, got {}", s.lambda)));
            }
            if !(s.h > 0.0 && s.h.is_finite()) {
                return Err(validation(format!("H must be positive, got {} at lambda {}", s.h, s.lambda)));
            }
            if !(s.sigma > 0.0 && s.sigma.is_finite()) {
                return Err(validation(format!("sigma must be positive, got {} at lambda {}", s.sigma, s.lambda)));
            }
        }
        samples.sort_by(|a, b| a.lambda.total_cmp(&b.lambda));
        if let Some(w) = samples.windows(2).find(|w| w[0].lambda == w[1].lambda) {
            return Err(validation(format!("duplicate lambda {}", w[0].lambda)));
        }
        Ok(Self { samples, provenance })
    }

    pub fn samples(&self) -> &[TransferSample] {
        &self.samples
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn provenance(&self) -> &Provenance {
        &self.provenance
    }

    pub fn lambdas(&self) -> Vec<f64> {
        self.samples.iter().map(|s| s.lambda).collect()
    }

    /// CSV with header `lambda,H,sigma`, preceded by `#` metadata lines.
    pub fn to_csv(&self, meta: &[(String, String)]) -> String {
        let mut out = csv_metadata(meta);
        out.push_str("lambda,H,sigma\n");
        for s in &self.samples {
            out.push_str(&format!("{},{},{}\n", fmt17(s.lambda), fmt17(s.h), fmt17(s.sigma)));
        }
        out
    }

    /// Reads the CSV format written by [`to_csv`](Self::to_csv); `#` lines are skipped.
    ///
    /// A missing `sigma` column defaults to 1% of `H`.
    pub fn from_csv<R: Read>(reader: R) -> Result<Self> {
        let mut rdr = csv::ReaderBuilder::new().comment(Some(b'#')).trim(csv::Trim::All).from_reader(reader);
        let headers = rdr.headers().map_err(|e| validation(format!("dataset CSV: {e}")))?.clone();
        let col = |name: &str| headers.iter().position(|h| h.eq_ignore_ascii_case(name));
        let li = col("lambda").ok_or_else(|| validation("dataset CSV lacks a `lambda` column"))?;
        let hi = col("H").ok_or_else(|| validation("dataset CSV lacks an `H` column"))?;
        let si = col("sigma");
        let mut samples = Vec::new();
        for (row, rec) in rdr.records().enumerate() {
            let rec = rec.map_err(|e| validation(format!("dataset CSV row {}: {e}", row + 1)))?;
            let num = |i: usize| -> Result<f64> {
                rec.get(i)
                    .and_then(|s| s.parse::<f64>().ok())
                    .ok_or_else(|| validation(format!("dataset CSV row {}: bad number", row + 1)))
            };
            let h = num(hi)?;
            let sigma = match si {
                Some(i) => num(i)?,
                None => 0.01 * h,
            };
            samples.push(TransferSample { lambda: num(li)?, h, sigma });
        }
        Self::new(samples, Provenance::External)
    }
}
