//! Classical comparison detectors: mean ± kσ, Tukey boxplot, median ± k·MADn
//! and Chauvenet's criterion.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::iir::{detect_high_side, detect_two_sided, median_sorted, Detection, Method, Sample, Sensitivity};

/// Consistency constant turning the MAD into a normal-sd estimate.
pub const MAD_CONSISTENCY: f64 = 1.4826;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BaselineKind {
    MeanSigma,
    Boxplot,
    Mad,
    Chauvenet,
}

/// A baseline rule with its parameters. Unused parameters are ignored.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BaselineSpec {
    pub method: BaselineKind,
    pub k: f64,
    pub whisker: f64,
    pub b: f64,
}

impl BaselineSpec {
    pub fn new(method: BaselineKind) -> Self {
        Self {
            method,
            k: 3.0,
            whisker: 1.5,
            b: MAD_CONSISTENCY,
        }
    }

    pub fn validate(&self) -> Result<()> {
        positive("k", self.k)?;
        positive("whisker", self.whisker)?;
        positive("b", self.b)
    }

    pub fn to_method(&self) -> Method {
        match self.method {
            BaselineKind::MeanSigma => Method::MeanSigma { k: self.k },
            BaselineKind::Boxplot => Method::Boxplot {
                whisker: self.whisker,
            },
            BaselineKind::Mad => Method::Mad {
                k: self.k,
                b: self.b,
            },
            BaselineKind::Chauvenet => Method::Chauvenet {},
        }
    }
}

fn positive(name: &'static str, value: f64) -> Result<()> {
    if value > 0.0 && value.is_finite() {
        Ok(())
    } else {
        Err(Error::Domain {
            name,
            value,
            domain: "(0, inf)",
        })
    }
}

fn require(sample: &Sample, required: usize) -> Result<()> {
    if sample.len() < required {
        return Err(Error::TooFew {
            required,
            actual: sample.len(),
        });
    }
    Ok(())
}

pub fn run_baseline(sample: &Sample, spec: &BaselineSpec) -> Result<Detection> {
    spec.validate()?;
    match spec.method {
        BaselineKind::MeanSigma => mean_sigma_detect(sample, spec.k),
        BaselineKind::Boxplot => boxplot_detect(sample, spec.whisker),
        BaselineKind::Mad => mad_detect(sample, spec.k, spec.b),
        BaselineKind::Chauvenet => chauvenet_detect(sample),
    }
}

impl Method {
    /// Runs whichever detector this method names.
    pub fn detect(&self, sample: &Sample) -> Result<Detection> {
        match *self {
            Method::IirTwoSided {
                threshold_c,
                weber_k,
            } => Ok(detect_two_sided(sample, sensitivity(threshold_c, weber_k)?)),
            Method::IirHighSide {
                threshold_c,
                weber_k,
            } => Ok(detect_high_side(sample, sensitivity(threshold_c, weber_k)?)),
            Method::MeanSigma { k } => mean_sigma_detect(sample, k),
            Method::Boxplot { whisker } => boxplot_detect(sample, whisker),
            Method::Mad { k, b } => mad_detect(sample, k, b),
            Method::Chauvenet {} => chauvenet_detect(sample),
        }
    }
}

fn sensitivity(threshold_c: f64, weber_k: f64) -> Result<Sensitivity> {
    Sensitivity::from_threshold(threshold_c)?;
    Ok(Sensitivity {
        weber_k,
        threshold_c,
    })
}

/// Mean and sample standard deviation (n - 1 divisor).
fn mean_sd(v: &[f64]) -> (f64, f64) {
    let n = v.len() as f64;
    let mean = v.iter().sum::<f64>() / n;
    let ss = v.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>();
    (mean, (ss / (n - 1.0)).sqrt())
}

/// Flags `|x - mean| > k·σ`.
pub fn mean_sigma_detect(sample: &Sample, k: f64) -> Result<Detection> {
    require(sample, 2)?;
    positive("k", k)?;
    let method = Method::MeanSigma { k };
    let (mean, sd) = mean_sd(sample.values());
    if sd == 0.0 {
        return Ok(Detection::empty(sample, method, true));
    }
    Ok(Detection::from_interval(
        sample,
        method,
        mean - k * sd,
        mean + k * sd,
    ))
}

/// Tukey hinges: medians of the lower and upper halves, each half taking
/// the middle value when `n` is odd.
pub fn tukey_hinges(sample: &Sample) -> Result<(f64, f64)> {
    require(sample, 2)?;
    let v = sample.values();
    let half = v.len().div_ceil(2);
    Ok((median_sorted(&v[..half]), median_sorted(&v[v.len() - half..])))
}

/// Flags values beyond `q1 - whisker·IQR` and `q3 + whisker·IQR`.
pub fn boxplot_detect(sample: &Sample, whisker: f64) -> Result<Detection> {
    positive("whisker", whisker)?;
    let (q1, q3) = tukey_hinges(sample)?;
    let iqr = q3 - q1;
    Ok(Detection::from_interval(
        sample,
        Method::Boxplot { whisker },
        q1 - whisker * iqr,
        q3 + whisker * iqr,
    ))
}

/// Flags `|x - median| > k·MADn` with `MADn = b·med|x - med|`.
///
/// When MADn is zero the interval collapses to the median itself and every
/// other value is flagged.
pub fn mad_detect(sample: &Sample, k: f64, b: f64) -> Result<Detection> {
    require(sample, 2)?;
    positive("k", k)?;
    positive("b", b)?;
    let median = sample.median();
    let mut dev: Vec<f64> = sample.values().iter().map(|x| (x - median).abs()).collect();
    dev.sort_by(f64::total_cmp);
    let madn = b * median_sorted(&dev);
    Ok(Detection::from_interval(
        sample,
        Method::Mad { k, b },
        median - k * madn,
        median + k * madn,
    ))
}

/// Two-sided standard normal tail `P(|Z| > z)`.
pub fn normal_tail(z: f64) -> Result<f64> {
    if z.is_nan() || z < 0.0 {
        return Err(Error::Domain {
            name: "z",
            value: z,
            domain: "[0, inf)",
        });
    }
    Ok(libm::erfc(z / std::f64::consts::SQRT_2))
}

/// Smallest `z` with `n·P(|Z| > z) <= 0.5`, by bisection.
fn chauvenet_cutoff(n: usize) -> f64 {
    let target = 0.5 / n as f64;
    let (mut lo, mut hi) = (0.0_f64, 40.0_f64);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if libm::erfc(mid / std::f64::consts::SQRT_2) > target {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi - lo <= f64::EPSILON * hi {
            break;
        }
    }
    hi
}

/// Single-pass Chauvenet criterion: flags `x` when `n·P(|Z| > |x - mean|/σ) < 0.5`.
pub fn chauvenet_detect(sample: &Sample) -> Result<Detection> {
    require(sample, 3)?;
    let method = Method::Chauvenet {};
    let (mean, sd) = mean_sd(sample.values());
    if sd == 0.0 {
        return Ok(Detection::empty(sample, method, true));
    }
    let z = chauvenet_cutoff(sample.len());
    Ok(Detection::from_interval(
        sample,
        method,
        mean - z * sd,
        mean + z * sd,
    ))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample(v: &[f64]) -> Sample {
        Sample::new(v.to_vec(), "test").unwrap()
    }

    const ROSNER: [f64; 10] = [90., 93., 86., 92., 95., 83., 75., 40., 88., 80.];
    const BARNETT: [f64; 7] = [3., 4., 7., 8., 10., 949., 951.];
    const GRUBBS1: [f64; 10] = [568., 570., 570., 570., 572., 572., 572., 578., 584., 596.];
    const GRUBBS3: [f64; 10] = [2.02, 2.22, 3.04, 3.23, 3.59, 3.73, 3.94, 4.05, 4.11, 4.13];
    const CUSHNY: [f64; 10] = [0., 0.8, 1., 1.2, 1.3, 1.3, 1.4, 1.8, 2.4, 4.6];

    #[test]
    fn mean_sigma_k3_finds_nothing_in_benchmarks() {
        for data in [&ROSNER[..], &BARNETT, &GRUBBS1, &GRUBBS3, &CUSHNY] {
            assert!(mean_sigma_detect(&sample(data), 3.0).unwrap().is_empty());
        }
    }

    #[test]
    fn mean_sigma_k2_cushny() {
        let s = sample(&CUSHNY);
        let (mean, sd) = mean_sd(s.values());
        assert!((mean - 1.58).abs() < 1e-12);
        assert!((sd - 1.2300).abs() < 1e-3);
        assert!(((4.6 - mean) / sd - 2.456).abs() < 1e-3);
        assert_eq!(mean_sigma_detect(&s, 2.0).unwrap().outlier_values, vec![4.6]);
    }

    #[test]
    fn mean_sigma_constant_and_errors() {
        let det = mean_sigma_detect(&sample(&[2.0, 2.0, 2.0]), 3.0).unwrap();
        assert!(det.is_empty());
        assert!(mean_sigma_detect(&sample(&[1.0]), 3.0).is_err());
        assert!(mean_sigma_detect(&sample(&[1.0, 2.0]), 0.0).is_err());
    }

    #[test]
    fn hinges() {
        assert_eq!(tukey_hinges(&sample(&CUSHNY)).unwrap(), (1.0, 1.8));
        assert_eq!(tukey_hinges(&sample(&BARNETT)).unwrap(), (5.5, 479.5));
        assert_eq!(tukey_hinges(&sample(&[1., 2., 3., 4.])).unwrap(), (1.5, 3.5));
        assert!(tukey_hinges(&sample(&[1.0])).is_err());
    }

    #[test]
    fn boxplot_benchmarks() {
        let flagged = |d: &[f64]| boxplot_detect(&sample(d), 1.5).unwrap().outlier_values;
        assert_eq!(flagged(&ROSNER), vec![40.0]);
        assert_eq!(flagged(&CUSHNY), vec![4.6]);
        assert_eq!(flagged(&GRUBBS1), vec![596.0]);
        assert!(flagged(&GRUBBS3).is_empty());
        let det = boxplot_detect(&sample(&BARNETT), 1.5).unwrap();
        assert!(det.is_empty());
        assert_eq!(det.normal_high(), 1190.5);
    }

    #[test]
    fn boxplot_collapsed_iqr() {
        let det = boxplot_detect(&sample(&[0., 0., 0., 0., 10.]), 1.5).unwrap();
        assert_eq!(det.outlier_values, vec![10.0]);
        assert_eq!(det.normal_interval, (0.0, 0.0));
    }

    #[test]
    fn mad_benchmarks() {
        let det = mad_detect(&sample(&GRUBBS1), 3.0, MAD_CONSISTENCY).unwrap();
        assert_eq!(det.outlier_values, vec![584.0, 596.0]);
        let madn = (det.normal_high() - 572.0) / 3.0;
        assert!((madn - 2.9652).abs() < 1e-9);

        assert!(mad_detect(&sample(&GRUBBS3), 3.0, MAD_CONSISTENCY).unwrap().is_empty());
        assert_eq!(
            mad_detect(&sample(&GRUBBS3), 2.0, MAD_CONSISTENCY).unwrap().outlier_values,
            vec![2.02, 2.22]
        );
        assert_eq!(
            mad_detect(&sample(&[1., 1., 1., 1., 9.]), 3.0, MAD_CONSISTENCY)
                .unwrap()
                .outlier_values,
            vec![9.0]
        );
    }

    #[test]
    fn normal_tail_values() {
        assert_eq!(normal_tail(0.0).unwrap(), 1.0);
        assert!((normal_tail(1.96).unwrap() - 0.0500).abs() < 1e-4);
        assert!((normal_tail(3.0).unwrap() - 0.0027).abs() < 1e-4);
        assert!(normal_tail(-0.1).is_err());
        assert!(normal_tail(f64::NAN).is_err());
    }

    #[test]
    fn chauvenet_benchmarks() {
        let s = sample(&ROSNER);
        let (mean, sd) = mean_sd(s.values());
        assert!((mean - 82.2).abs() < 1e-9);
        assert!((sd - 16.07).abs() < 0.01);
        let p = 10.0 * normal_tail((mean - 40.0) / sd).unwrap();
        assert!((p - 0.085).abs() < 0.005);
        assert_eq!(chauvenet_detect(&s).unwrap().outlier_values, vec![40.0]);

        let s = sample(&CUSHNY);
        let (mean, sd) = mean_sd(s.values());
        assert!((10.0 * normal_tail((4.6 - mean) / sd).unwrap() - 0.14).abs() < 0.005);
        assert!((10.0 * normal_tail((2.4 - mean) / sd).unwrap() - 5.05).abs() < 0.01);
        assert_eq!(chauvenet_detect(&s).unwrap().outlier_values, vec![4.6]);

        assert!(chauvenet_detect(&sample(&[-1., 0., 1.])).unwrap().is_empty());
        assert!(chauvenet_detect(&sample(&[1., 2.])).is_err());
    }

    #[test]
    fn chauvenet_cutoff_matches_criterion() {
        for n in [3, 10, 100, 2001] {
            let z = chauvenet_cutoff(n);
            assert!((n as f64 * normal_tail(z).unwrap() - 0.5).abs() < 1e-9);
        }
    }

    #[test]
    fn method_dispatch() {
        let s = sample(&CUSHNY);
        for m in [
            Method::two_sided(Sensitivity::default()),
            Method::high_side(Sensitivity::default()),
            Method::MeanSigma { k: 2.0 },
            Method::Boxplot { whisker: 1.5 },
            Method::Mad { k: 3.0, b: MAD_CONSISTENCY },
            Method::Chauvenet {},
        ] {
            let det = m.detect(&s).unwrap();
            assert_eq!(det.method, m);
            assert_eq!(det.outlier_values, vec![4.6], "{}", m.name());
        }
    }
}
