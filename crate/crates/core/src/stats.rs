//! Monte Carlo summaries.

use std::fmt;

/// Number of batches used for batch-means standard errors.
pub const BATCH_COUNT: usize = 100;

/// Below this fraction of nonzero contributions the standard error switches to
/// batch means.
pub const SPARSE_FRACTION: f64 = 0.01;

/// Two-sided 95% normal quantile.
pub const Z95: f64 = 1.959_963_984_540_054;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Method {
    Naive,
    SingleBigJump,
    Exact,
    KbMonteCarlo,
    QuadratureMc,
}

impl Method {
    pub fn tag(self) -> &'static str {
        match self {
            Method::Naive => "naive",
            Method::SingleBigJump => "sbj",
            Method::Exact => "exact",
            Method::KbMonteCarlo => "kb-mc",
            Method::QuadratureMc => "mc-integral",
        }
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.tag())
    }
}

/// Sample mean of i.i.d. per-replicate contributions with its standard error.
#[derive(Debug, Clone, PartialEq)]
pub struct Estimate {
    pub value: f64,
    pub stderr: f64,
    pub replicates: u64,
    pub method: Method,
    pub seed: u64,
}

impl Estimate {
    pub fn from_contributions(values: &[f64], method: Method, seed: u64) -> Self {
        let n = values.len();
        if n == 0 {
            return Self {
                value: 0.0,
                stderr: 0.0,
                replicates: 0,
                method,
                seed,
            };
        }
        let mean = compensated_sum(values.iter().copied()) / n as f64;
        let nonzero = values.iter().filter(|v| **v != 0.0).count();
        let sparse = (nonzero as f64) < SPARSE_FRACTION * n as f64 && n >= 2 * BATCH_COUNT;
        let stderr = if sparse {
            batch_means_stderr(values, mean)
        } else if n > 1 {
            let ss = compensated_sum(values.iter().map(|v| (v - mean) * (v - mean)));
            (ss / (n as f64 - 1.0) / n as f64).sqrt()
        } else {
            0.0
        };
        Self {
            value: mean,
            stderr,
            replicates: n as u64,
            method,
            seed,
        }
    }

    /// The estimate rescaled by a deterministic positive factor.
    pub fn scaled(mut self, factor: f64) -> Self {
        self.value *= factor;
        self.stderr *= factor.abs();
        self
    }

    pub fn ci95(&self) -> (f64, f64) {
        self.ci(Z95)
    }

    pub fn ci(&self, z: f64) -> (f64, f64) {
        (self.value - z * self.stderr, self.value + z * self.stderr)
    }

    pub fn overlaps(&self, other: &Estimate) -> bool {
        let (a_lo, a_hi) = self.ci95();
        let (b_lo, b_hi) = other.ci95();
        a_lo <= b_hi && b_lo <= a_hi
    }
}

fn batch_means_stderr(values: &[f64], mean: f64) -> f64 {
    let n = values.len();
    let size = n / BATCH_COUNT;
    let batches: Vec<f64> = (0..BATCH_COUNT)
        .map(|b| {
            let end = if b + 1 == BATCH_COUNT { n } else { (b + 1) * size };
            let chunk = &values[b * size..end];
            compensated_sum(chunk.iter().copied()) / chunk.len() as f64
        })
        .collect();
    // batches of unequal length only differ in the last one; weight by length
    let ss = compensated_sum((0..BATCH_COUNT).map(|b| {
        let len = if b + 1 == BATCH_COUNT { n - b * size } else { size };
        len as f64 * (batches[b] - mean).powi(2)
    }));
    (ss / (BATCH_COUNT as f64 - 1.0) / n as f64).sqrt()
}

/// Neumaier-compensated summation in iteration order.
pub fn compensated_sum(values: impl IntoIterator<Item = f64>) -> f64 {
    let mut acc = Accumulator::default();
    for v in values {
        acc.add(v);
    }
    acc.total()
}

/// Running Neumaier sum.
#[derive(Debug, Clone, Copy, Default)]
pub(crate) struct Accumulator {
    sum: f64,
    comp: f64,
}

impl Accumulator {
    pub(crate) fn add(&mut self, v: f64) {
        let t = self.sum + v;
        if self.sum.abs() >= v.abs() {
            self.comp += (self.sum - t) + v;
        } else {
            self.comp += (v - t) + self.sum;
        }
        self.sum = t;
    }

    pub(crate) fn total(&self) -> f64 {
        self.sum + self.comp
    }
}
