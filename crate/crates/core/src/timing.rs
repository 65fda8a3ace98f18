//! Wall-clock scaling of tensor builds.

use std::time::{Duration, Instant};

use serde::Serialize;

use crate::checks::GateSpec;
use crate::error::{Error, Result};
use crate::tensor::BuildOptions;

/// Smallest batch duration a timing sample is averaged over.
const MIN_BATCH: Duration = Duration::from_millis(5);

/// Build times of one gate over a list of cutoffs.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct BenchResult {
    pub gate: String,
    pub cutoffs: Vec<usize>,
    /// `samples[i][j]`: seconds per build at `cutoffs[i]`, repeat `j`.
    pub samples: Vec<Vec<f64>>,
    pub median: Vec<f64>,
    pub stddev: Vec<f64>,
    /// Least-squares slope of `log median` against `log cutoff`.
    pub slope: f64,
}

impl BenchResult {
    /// `gate,cutoff,repeat,seconds`, one row per sample.
    pub fn to_csv(&self) -> String {
        let mut s = String::from("gate,cutoff,repeat,seconds\n");
        for (n, row) in self.cutoffs.iter().zip(&self.samples) {
            for (j, t) in row.iter().enumerate() {
                s.push_str(&format!("{},{},{},{:.6e}\n", self.gate, n, j, t));
            }
        }
        s
    }
}

pub fn median(xs: &[f64]) -> f64 {
    let mut v = xs.to_vec();
    v.sort_by(f64::total_cmp);
    let k = v.len() / 2;
    if v.len() % 2 == 1 { v[k] } else { 0.5 * (v[k - 1] + v[k]) }
}

/// Sample standard deviation; 0 for fewer than two values.
pub fn stddev(xs: &[f64]) -> f64 {
    if xs.len() < 2 {
        return 0.0;
    }
    let mean = xs.iter().sum::<f64>() / xs.len() as f64;
    (xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (xs.len() - 1) as f64).sqrt()
}

/// Slope of the least-squares line through `(ln x, ln y)`.
pub fn loglog_slope(x: &[f64], y: &[f64]) -> Result<f64> {
    if x.len() != y.len() || x.len() < 2 {
        return Err(Error::DimensionMismatch("a slope needs at least two matching points".into()));
    }
    if x.iter().chain(y).any(|v| !(v.is_finite() && *v > 0.0)) {
        return Err(Error::InvalidParameter { name: "samples", reason: "log-log fit needs positive finite values".into() });
    }
    let lx: Vec<f64> = x.iter().map(|v| v.ln()).collect();
    let ly: Vec<f64> = y.iter().map(|v| v.ln()).collect();
    let n = lx.len() as f64;
    let (mx, my) = (lx.iter().sum::<f64>() / n, ly.iter().sum::<f64>() / n);
    let sxy: f64 = lx.iter().zip(&ly).map(|(a, b)| (a - mx) * (b - my)).sum();
    let sxx: f64 = lx.iter().map(|a| (a - mx).powi(2)).sum();
    Ok(sxy / sxx)
}

/// Seconds per build, averaged over a batch lasting at least a few milliseconds.
fn time_once(spec: &GateSpec, cutoff: usize, opts: &BuildOptions) -> Result<f64> {
    let start = Instant::now();
    let mut iters = 0u32;
    while iters == 0 || start.elapsed() < MIN_BATCH {
        std::hint::black_box(spec.build(cutoff, opts)?);
        iters += 1;
    }
    Ok(start.elapsed().as_secs_f64() / f64::from(iters))
}

/// Times `repeats` batches per cutoff on the calling thread after one warm-up build.
pub fn bench_gate(spec: &GateSpec, cutoffs: &[usize], repeats: usize) -> Result<BenchResult> {
    if cutoffs.len() < 2 || repeats == 0 {
        return Err(Error::InvalidParameter { name: "cutoffs", reason: "need two or more cutoffs and one or more repeats".into() });
    }
    let opts = BuildOptions::default();
    let mut samples = Vec::with_capacity(cutoffs.len());
    for &n in cutoffs {
        std::hint::black_box(spec.build(n, &opts)?);
        samples.push((0..repeats).map(|_| time_once(spec, n, &opts)).collect::<Result<Vec<f64>>>()?);
    }
    let med: Vec<f64> = samples.iter().map(|s| median(s)).collect();
    let sd: Vec<f64> = samples.iter().map(|s| stddev(s)).collect();
    let xs: Vec<f64> = cutoffs.iter().map(|&n| n as f64).collect();
    let slope = loglog_slope(&xs, &med)?;
    Ok(BenchResult { gate: spec.name().into(), cutoffs: cutoffs.to_vec(), samples, median: med, stddev: sd, slope })
}
