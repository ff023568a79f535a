//! Univariate outlier detection by gap inconsistency.
//!
//! The central score is the integrated inconsistent rate (IIR) of a gap in
//! the sorted data: `(n - 1) * (gap - max_prev) / range`, where `max_prev` is
//! the largest gap already accepted as normal. The expanding detectors grow a
//! normal set (from the low end, or outward from the median) until a gap's
//! IIR reaches a threshold `c`, which is tied to a Weber constant `K` by
//! `c = 2 (1 - K) / (1 + K)`.
//!
//! Alongside the expanding detectors the crate carries the classical
//! comparison rules (mean ± kσ, Tukey boxplot, median ± k·MADn, Chauvenet),
//! a seeded contamination simulator, a resonance clustering procedure built
//! on per-point partner sets, the benchmark datasets and a CLI.
//!
//! ```
//! use gapsense::{datasets, detect_two_sided, Sensitivity};
//!
//! let cushny = datasets::builtin_sample("cushny").unwrap();
//! let det = detect_two_sided(&cushny, Sensitivity::default());
//! assert_eq!(det.outlier_values, vec![4.6]);
//! ```

pub mod baseline;
pub mod cli;
pub mod datasets;
mod error;
pub mod iir;
pub mod io;
pub mod monte_carlo;
pub mod oscillator;

pub use baseline::{
    boxplot_detect, chauvenet_detect, mad_detect, mean_sigma_detect, normal_tail, run_baseline,
    tukey_hinges, BaselineSpec,
};
pub use error::{Error, Result};
pub use iir::{
    detect_high_side, detect_two_sided, gap_series, iir_closed_form, threshold_to_weber,
    weber_to_threshold, Detection, GapSeries, IirRecord, Method, Sample, Sensitivity, Side,
    DEFAULT_THRESHOLD,
};
pub use oscillator::{
    cluster_all, cluster_points, pairwise_distances, pairwise_distances_with, partner_set, partner_sets, resonate, ClusterPartition,
    ClusterSummary, DistanceMatrix, Metric, PartnerSet, PointSet, ResonanceRun, DEFAULT_MIN_PARTNERS,
};
