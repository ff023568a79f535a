//! Embedded benchmark datasets.

use crate::error::{Error, Result};
use crate::iir::Sample;
use crate::io::parse_points;
use crate::oscillator::PointSet;

pub const ROSNER: [f64; 10] = [90., 93., 86., 92., 95., 83., 75., 40., 88., 80.];
pub const BARNETT: [f64; 7] = [3., 4., 7., 8., 10., 949., 951.];
pub const GRUBBS1: [f64; 10] = [568., 570., 570., 570., 572., 572., 572., 578., 584., 596.];
pub const GRUBBS3: [f64; 10] = [2.02, 2.22, 3.04, 3.23, 3.59, 3.73, 3.94, 4.05, 4.11, 4.13];
pub const CUSHNY: [f64; 10] = [0., 0.8, 1., 1.2, 1.3, 1.3, 1.4, 1.8, 2.4, 4.6];
/// Herndon's 1846 observations of the vertical semi-diameter of Venus,
/// row-major as tabulated.
pub const VENUS: [f64; 15] = [
    -0.30, 0.48, 0.63, -0.22, 0.18, -0.44, -0.24, -0.13, -0.05, 0.39, 1.01, 0.06, -1.40, 0.20,
    0.10,
];
/// Ruspini (1970), 75 points in row order.
pub const RUSPINI_CSV: &str = include_str!("../data/ruspini.csv");

pub const NAMES: [&str; 7] = [
    "rosner", "barnett", "grubbs1", "grubbs3", "cushny", "venus", "ruspini",
];

/// The five univariate sets compared throughout the benchmarks.
pub const TABLE_SETS: [&str; 5] = ["rosner", "barnett", "grubbs1", "grubbs3", "cushny"];

#[derive(Debug, Clone, PartialEq)]
pub enum Dataset {
    Univariate(Sample),
    Points(PointSet),
}

impl Dataset {
    fn kind(&self) -> &'static str {
        match self {
            Dataset::Univariate(_) => "univariate",
            Dataset::Points(_) => "points2d",
        }
    }
}

pub fn citation(name: &str) -> Option<&'static str> {
    Some(match name {
        "rosner" => "monthly diastolic blood pressure (Rosner); PROGRESS datasets",
        "barnett" => "Barnett & Lewis; PROGRESS datasets",
        "grubbs1" => "strengths of hard-drawn copper wire (Grubbs); PROGRESS datasets",
        "grubbs3" => "percent elongations of plastic material (Grubbs); PROGRESS datasets",
        "cushny" => "extra hours of sleep, two drugs on ten patients (Cushny); PROGRESS datasets",
        "venus" => "vertical semi-diameter of Venus, Herndon 1846 (Peirce 1852)",
        "ruspini" => "Ruspini, E. H. Numerical methods for fuzzy clustering. Inform Sci 2, 1970",
        _ => return None,
    })
}

fn unknown(name: &str) -> Error {
    Error::UnknownDataset {
        name: name.to_string(),
        valid: NAMES.join(", "),
    }
}

pub fn builtin_dataset(name: &str) -> Result<Dataset> {
    let name = name.trim().to_ascii_lowercase();
    let values: &[f64] = match name.as_str() {
        "rosner" => &ROSNER,
        "barnett" => &BARNETT,
        "grubbs1" => &GRUBBS1,
        "grubbs3" => &GRUBBS3,
        "cushny" => &CUSHNY,
        "venus" => &VENUS,
        "ruspini" => {
            return parse_points(RUSPINI_CSV, "ruspini".as_ref()).map(Dataset::Points);
        }
        _ => return Err(unknown(&name)),
    };
    Sample::new(values.to_vec(), name).map(Dataset::Univariate)
}

pub fn builtin_sample(name: &str) -> Result<Sample> {
    match builtin_dataset(name)? {
        Dataset::Univariate(s) => Ok(s),
        other => Err(Error::DatasetKind {
            name: name.to_string(),
            expected: "univariate",
            actual: other.kind(),
        }),
    }
}

pub fn builtin_points(name: &str) -> Result<PointSet> {
    match builtin_dataset(name)? {
        Dataset::Points(p) => Ok(p),
        other => Err(Error::DatasetKind {
            name: name.to_string(),
            expected: "points2d",
            actual: other.kind(),
        }),
    }
}
