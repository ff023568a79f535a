//! Gap machinery, the IIR score and the two expanding detectors.
//!
//! All indices are 0-based positions in the ascending sample. Gap `i` is
//! `values[i] - values[i - 1]` for `i` in `1..n`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Threshold used when none is given.
pub const DEFAULT_THRESHOLD: f64 = 1.81;

/// A validated univariate sample, sorted ascending.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Sample {
    values: Vec<f64>,
    label: String,
}

impl Sample {
    pub fn new(values: impl Into<Vec<f64>>, label: impl Into<String>) -> Result<Self> {
        let mut values = values.into();
        if values.is_empty() {
            return Err(Error::EmptySample);
        }
        if let Some((index, &value)) = values.iter().enumerate().find(|(_, v)| !v.is_finite()) {
            return Err(Error::NonFinite { index, value });
        }
        values.sort_by(f64::total_cmp);
        // -0.0 and 0.0 compare equal but total_cmp orders them; normalize so
        // equal values are adjacent regardless of sign bit.
        for v in values.iter_mut() {
            if *v == 0.0 {
                *v = 0.0;
            }
        }
        Ok(Self {
            values,
            label: label.into(),
        })
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn min(&self) -> f64 {
        self.values[0]
    }

    pub fn max(&self) -> f64 {
        self.values[self.values.len() - 1]
    }

    pub fn range(&self) -> f64 {
        self.max() - self.min()
    }

    /// Median; the midpoint of the two central values for even length.
    pub fn median(&self) -> f64 {
        median_sorted(&self.values)
    }
}

pub(crate) fn median_sorted(v: &[f64]) -> f64 {
    let n = v.len();
    if n % 2 == 1 {
        v[n / 2]
    } else {
        (v[n / 2 - 1] + v[n / 2]) / 2.0
    }
}

/// Consecutive gaps of a sample and their range-normalized form.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GapSeries {
    /// `gaps[i - 1]` is gap `i`.
    pub gaps: Vec<f64>,
    pub range: f64,
    /// Gaps divided by `range`; all zero when `degenerate`.
    pub normalized: Vec<f64>,
    /// Set when the range is zero. Such a sample has no outliers.
    pub degenerate: bool,
}

pub fn gap_series(sample: &Sample) -> Result<GapSeries> {
    let v = sample.values();
    if v.len() < 2 {
        return Err(Error::TooFew {
            required: 2,
            actual: v.len(),
        });
    }
    let gaps: Vec<f64> = v.windows(2).map(|w| w[1] - w[0]).collect();
    let range = sample.range();
    let degenerate = range <= 0.0;
    let normalized = if degenerate {
        vec![0.0; gaps.len()]
    } else {
        gaps.iter().map(|g| g / range).collect()
    };
    Ok(GapSeries {
        gaps,
        range,
        normalized,
        degenerate,
    })
}

/// `(n - 1) * (gap - max_prev) / range`.
///
/// This equals `Er / Ihr` with `Er = (n - 1) * gap / range` and
/// `Ihr = gap / (gap - max_prev)`, without the singularity at
/// `gap == max_prev`.
pub fn iir_closed_form(gap: f64, max_prev: f64, n: usize, range: f64) -> Result<f64> {
    if n < 2 {
        return Err(Error::TooFew {
            required: 2,
            actual: n,
        });
    }
    if !range.is_finite() || range <= 0.0 {
        return Err(Error::Domain {
            name: "range",
            value: range,
            domain: "(0, inf)",
        });
    }
    Ok(closed_form(gap, max_prev, n, range))
}

#[inline]
fn closed_form(gap: f64, max_prev: f64, n: usize, range: f64) -> f64 {
    (n - 1) as f64 * (gap - max_prev) / range
}

/// Weber constant `K` in `[0, 1]` to IIR threshold `c = 2 (1 - K) / (1 + K)`.
pub fn weber_to_threshold(weber_k: f64) -> Result<f64> {
    if !(0.0..=1.0).contains(&weber_k) {
        return Err(Error::Domain {
            name: "K",
            value: weber_k,
            domain: "[0, 1]",
        });
    }
    Ok(2.0 * (1.0 - weber_k) / (1.0 + weber_k))
}

/// Inverse of [`weber_to_threshold`]: `K = (2 - c) / (2 + c)`.
pub fn threshold_to_weber(threshold_c: f64) -> Result<f64> {
    if !(0.0..=2.0).contains(&threshold_c) {
        return Err(Error::Domain {
            name: "c",
            value: threshold_c,
            domain: "[0, 2]",
        });
    }
    Ok((2.0 - threshold_c) / (2.0 + threshold_c))
}

/// Detection sensitivity: a Weber constant and the IIR threshold it maps to.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Sensitivity {
    pub weber_k: f64,
    pub threshold_c: f64,
}

impl Sensitivity {
    pub fn from_weber(weber_k: f64) -> Result<Self> {
        Ok(Self {
            weber_k,
            threshold_c: weber_to_threshold(weber_k)?,
        })
    }

    pub fn from_threshold(threshold_c: f64) -> Result<Self> {
        Ok(Self {
            weber_k: threshold_to_weber(threshold_c)?,
            threshold_c,
        })
    }
}

impl Default for Sensitivity {
    fn default() -> Self {
        Self::from_threshold(DEFAULT_THRESHOLD).expect("default threshold is in range")
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Side {
    Low,
    High,
}

impl std::fmt::Display for Side {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Side::Low => "low",
            Side::High => "high",
        })
    }
}

/// One evaluated candidate gap.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IirRecord {
    /// Gap index: the gap between sorted positions `index - 1` and `index`.
    pub index: usize,
    pub side: Side,
    /// The value that would be absorbed through this gap.
    pub candidate: f64,
    pub gap: f64,
    pub max_prev: f64,
    pub er: f64,
    /// `None` when `gap == max_prev`.
    pub ihr: Option<f64>,
    pub iir: f64,
    pub accepted: bool,
}

impl IirRecord {
    fn new(
        index: usize,
        side: Side,
        candidate: f64,
        gap: f64,
        max_prev: f64,
        n: usize,
        range: f64,
    ) -> Self {
        let er = (n - 1) as f64 * gap / range;
        let ihr = (gap != max_prev).then(|| gap / (gap - max_prev));
        Self {
            index,
            side,
            candidate,
            gap,
            max_prev,
            er,
            ihr,
            iir: closed_form(gap, max_prev, n, range),
            accepted: true,
        }
    }
}

/// Detector identity and parameters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "method", content = "params", rename_all = "snake_case")]
pub enum Method {
    IirTwoSided { threshold_c: f64, weber_k: f64 },
    IirHighSide { threshold_c: f64, weber_k: f64 },
    MeanSigma { k: f64 },
    Boxplot { whisker: f64 },
    Mad { k: f64, b: f64 },
    Chauvenet {},
}

impl Method {
    pub fn name(&self) -> &'static str {
        match self {
            Method::IirTwoSided { .. } => "iir",
            Method::IirHighSide { .. } => "iir_high",
            Method::MeanSigma { .. } => "mean_sigma",
            Method::Boxplot { .. } => "boxplot",
            Method::Mad { .. } => "mad",
            Method::Chauvenet {} => "chauvenet",
        }
    }

    pub fn two_sided(sens: Sensitivity) -> Self {
        Method::IirTwoSided {
            threshold_c: sens.threshold_c,
            weber_k: sens.weber_k,
        }
    }

    pub fn high_side(sens: Sensitivity) -> Self {
        Method::IirHighSide {
            threshold_c: sens.threshold_c,
            weber_k: sens.weber_k,
        }
    }
}

/// Outcome of running a detector on a sample.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Detection {
    #[serde(flatten)]
    pub method: Method,
    pub n: usize,
    #[serde(rename = "outliers")]
    pub outlier_values: Vec<f64>,
    pub outlier_indices: Vec<usize>,
    /// Accepted value interval `[low, high]`; everything outside is flagged.
    pub normal_interval: (f64, f64),
    #[serde(default)]
    pub trace: Vec<IirRecord>,
    #[serde(default)]
    pub border: Option<IirRecord>,
    #[serde(default)]
    pub degenerate: bool,
}

impl Detection {
    /// Flags every value outside `[low, high]`.
    pub(crate) fn from_interval(sample: &Sample, method: Method, low: f64, high: f64) -> Self {
        let (outlier_indices, outlier_values) = sample
            .values()
            .iter()
            .enumerate()
            .filter(|(_, &x)| x < low || x > high)
            .map(|(i, &x)| (i, x))
            .unzip();
        Self {
            method,
            n: sample.len(),
            outlier_values,
            outlier_indices,
            normal_interval: (low, high),
            trace: Vec::new(),
            border: None,
            degenerate: false,
        }
    }

    pub(crate) fn empty(sample: &Sample, method: Method, degenerate: bool) -> Self {
        Self {
            degenerate,
            ..Self::from_interval(sample, method, sample.min(), sample.max())
        }
    }

    pub fn normal_low(&self) -> f64 {
        self.normal_interval.0
    }

    pub fn normal_high(&self) -> f64 {
        self.normal_interval.1
    }

    pub fn outlier_count(&self) -> usize {
        self.outlier_indices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.outlier_indices.is_empty()
    }
}

/// One-sided expanding detector for outliers on the high side.
///
/// Gaps `2..n` are scanned with `max_prev` the largest of the earlier gaps.
/// The border is the first gap `t` with `2t > n`, a positive gap and
/// `IIR >= c`; values from position `t` up are flagged.
pub fn detect_high_side(sample: &Sample, sens: Sensitivity) -> Detection {
    let method = Method::high_side(sens);
    let v = sample.values();
    let n = v.len();
    let range = sample.range();
    if n < 3 || range <= 0.0 {
        return Detection::empty(sample, method, true);
    }

    let mut trace = Vec::with_capacity(n - 2);
    let mut max_prev = v[1] - v[0];
    let mut border = None;
    for i in 2..n {
        let gap = v[i] - v[i - 1];
        let mut rec = IirRecord::new(i, Side::High, v[i], gap, max_prev, n, range);
        if 2 * i > n && gap > 0.0 && rec.iir >= sens.threshold_c {
            rec.accepted = false;
            trace.push(rec);
            border = Some(i);
            break;
        }
        trace.push(rec);
        max_prev = max_prev.max(gap);
    }

    match border {
        Some(t) => {
            let mut det = Detection::from_interval(sample, method, v[0], v[t - 1]);
            det.border = trace.last().cloned();
            det.trace = trace;
            det
        }
        None => Detection {
            trace,
            ..Detection::empty(sample, method, false)
        },
    }
}

/// Which side the expansion rule extends next, if any side remains.
///
/// The side with the smaller frontier gap wins; equal gaps go high.
#[inline]
fn next_side(v: &[f64], lo: usize, hi: usize) -> Option<Side> {
    match (lo > 0, hi + 1 < v.len()) {
        (true, true) => {
            if v[hi + 1] - v[hi] > v[lo] - v[lo - 1] {
                Some(Side::Low)
            } else {
                Some(Side::High)
            }
        }
        (true, false) => Some(Side::Low),
        (false, true) => Some(Side::High),
        (false, false) => None,
    }
}

/// Two-sided expanding detector growing outward from the median.
///
/// The median set first grows to `n/2 + 1` members without scoring. Its
/// largest interior gap seeds `max_prev`; each further frontier gap is
/// scored and absorbed while `IIR < c`. The first positive gap reaching
/// the threshold stops the expansion on both sides and everything outside
/// the set is flagged.
pub fn detect_two_sided(sample: &Sample, sens: Sensitivity) -> Detection {
    let method = Method::two_sided(sens);
    let v = sample.values();
    let n = v.len();
    let range = sample.range();
    if n < 3 || range <= 0.0 {
        return Detection::empty(sample, method, true);
    }

    let (mut lo, mut hi) = if n % 2 == 1 {
        (n / 2, n / 2)
    } else {
        (n / 2 - 1, n / 2)
    };
    let target = n / 2 + 1;
    while hi - lo + 1 < target {
        match next_side(v, lo, hi) {
            Some(Side::Low) => lo -= 1,
            Some(Side::High) => hi += 1,
            None => break,
        }
    }
    let mut max_prev = (lo + 1..=hi)
        .map(|k| v[k] - v[k - 1])
        .fold(0.0_f64, f64::max);

    let mut trace = Vec::new();
    let mut triggered = false;
    while let Some(side) = next_side(v, lo, hi) {
        let (index, candidate) = match side {
            Side::Low => (lo, v[lo - 1]),
            Side::High => (hi + 1, v[hi + 1]),
        };
        let gap = v[index] - v[index - 1];
        let mut rec = IirRecord::new(index, side, candidate, gap, max_prev, n, range);
        if gap > 0.0 && rec.iir >= sens.threshold_c {
            rec.accepted = false;
            trace.push(rec);
            triggered = true;
            break;
        }
        trace.push(rec);
        max_prev = max_prev.max(gap);
        match side {
            Side::Low => lo -= 1,
            Side::High => hi += 1,
        }
    }

    let mut det = Detection::from_interval(sample, method, v[lo], v[hi]);
    if triggered {
        det.border = trace.last().cloned();
    }
    det.trace = trace;
    det
}
