//! Error series, summary statistics and histograms.

use crate::turbine::WIND_FLOOR;

/// Cut-off of the low-pass filter applied to the true `Cp` before scoring.
pub const CP_REFERENCE_CUTOFF_HZ: f64 = 0.1;
/// Reference `Cp` below which a sample cannot be scored.
pub const CP_REFERENCE_FLOOR: f64 = 1e-3;

/// Percent errors; `None` marks a sample excluded from scoring.
#[derive(Clone, Debug, PartialEq)]
pub struct ErrorSeries(pub Vec<Option<f64>>);

impl ErrorSeries {
    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    /// Drops the first `n` samples (settling window).
    pub fn skip(&self, n: usize) -> Self {
        Self(self.0.iter().skip(n).copied().collect())
    }

    pub fn scored(&self) -> Vec<f64> {
        self.0.iter().flatten().copied().collect()
    }

    pub fn excluded(&self) -> usize {
        self.0.iter().filter(|e| e.is_none()).count()
    }
}

/// `100·(estimate − reference)/reference`, excluding references below `floor`.
pub fn relative_error_series(estimate: &[f64], reference: &[f64], floor: f64) -> ErrorSeries {
    assert_eq!(estimate.len(), reference.len(), "series lengths differ");
    ErrorSeries(
        estimate
            .iter()
            .zip(reference)
            .map(|(&e, &r)| (r >= floor).then(|| 100.0 * (e - r) / r))
            .collect(),
    )
}

/// Percent error of a wind estimate against the rotor-effective wind.
pub fn wind_error_series(estimate: &[f64], rews: &[f64]) -> ErrorSeries {
    relative_error_series(estimate, rews, WIND_FLOOR)
}

/// Percent error of a `Cp` estimate against the low-passed true `Cp`.
pub fn cp_error_series(estimate: &[f64], cp_true: &[f64], sample_time: f64) -> ErrorSeries {
    let reference = low_pass(cp_true, CP_REFERENCE_CUTOFF_HZ, sample_time);
    relative_error_series(estimate, &reference, CP_REFERENCE_FLOOR)
}

/// Single-pole low-pass `yₖ = a·yₖ₋₁ + (1−a)·xₖ`, `a = exp(−2π·fc·Δt)`, `y₀ = x₀`.
pub fn low_pass(series: &[f64], cutoff_hz: f64, sample_time: f64) -> Vec<f64> {
    let a = (-2.0 * std::f64::consts::PI * cutoff_hz * sample_time).exp();
    let mut out = Vec::with_capacity(series.len());
    let mut y = match series.first() {
        Some(&x) => x,
        None => return out,
    };
    out.push(y);
    for &x in &series[1..] {
        y = a * y + (1.0 - a) * x;
        out.push(y);
    }
    out
}

/// Mean and sample standard deviation of the scored errors.
#[derive(Clone, Copy, Debug, PartialEq, Default)]
pub struct SummaryStats {
    pub mean: f64,
    pub std: f64,
    pub scored: usize,
    pub excluded: usize,
}

impl SummaryStats {
    pub fn of(series: &ErrorSeries) -> Self {
        let values = series.scored();
        let n = values.len();
        let mean = if n > 0 {
            values.iter().sum::<f64>() / n as f64
        } else {
            f64::NAN
        };
        let std = if n > 1 {
            (values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1) as f64).sqrt()
        } else {
            0.0
        };
        Self {
            mean,
            std,
            scored: n,
            excluded: series.excluded(),
        }
    }
}

/// Two estimators' error counts over shared bins.
#[derive(Clone, Debug, PartialEq)]
pub struct PairedHistogram {
    pub edges: Vec<f64>,
    pub imm: Vec<usize>,
    pub kf: Vec<usize>,
}

fn counts(values: &[f64], lo: f64, width: f64, bins: usize) -> Vec<usize> {
    let mut counts = vec![0; bins];
    for &v in values {
        // values beyond the span land in the end bins
        let idx = ((v - lo) / width).floor();
        let idx = if idx.is_nan() {
            0
        } else {
            idx.clamp(0.0, (bins - 1) as f64) as usize
        };
        counts[idx] += 1;
    }
    counts
}

impl PairedHistogram {
    /// `bins` uniform bins spanning the pooled mean ± 5 pooled std.
    pub fn pooled(imm: &[f64], kf: &[f64], bins: usize) -> Self {
        let bins = bins.max(1);
        let pooled: Vec<f64> = imm.iter().chain(kf).copied().collect();
        let n = pooled.len() as f64;
        let (center, spread) = if pooled.is_empty() {
            (0.0, 1.0)
        } else {
            let mean = pooled.iter().sum::<f64>() / n;
            let var = pooled.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n;
            let std = var.sqrt();
            (mean, if std > 0.0 { 5.0 * std } else { 1.0 })
        };
        let lo = center - spread;
        let width = 2.0 * spread / bins as f64;
        let edges = (0..=bins).map(|i| lo + width * i as f64).collect();
        Self {
            edges,
            imm: counts(imm, lo, width, bins),
            kf: counts(kf, lo, width, bins),
        }
    }
}
