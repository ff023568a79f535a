//! Seeded contamination experiments.
//!
//! A scenario mixes draws from a target normal `F` with a fixed number of
//! draws from a contaminant normal `G`. Every replication owns a ChaCha
//! stream selected by `(scenario seed, rep)`, and sweeps derive each step's
//! scenario seed from the master seed, so curves depend only on the seed and
//! never on how rayon schedules the work.

use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::baseline::MAD_CONSISTENCY;
use crate::error::{Error, Result};
use crate::iir::{Method, Sample, Sensitivity};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Normal {
    pub mean: f64,
    pub sd: f64,
}

impl Normal {
    pub const fn new(mean: f64, sd: f64) -> Self {
        Self { mean, sd }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SimScenario {
    pub n: usize,
    /// Fraction of the sample drawn from `contaminant`, in `[0, 0.5)`.
    pub contamination: f64,
    pub target: Normal,
    pub contaminant: Normal,
    pub reps: usize,
    pub master_seed: u64,
}

impl SimScenario {
    pub fn validate(&self) -> Result<()> {
        if self.n < 2 {
            return Err(Error::TooFew {
                required: 2,
                actual: self.n,
            });
        }
        if !(0.0..0.5).contains(&self.contamination) {
            return Err(Error::Domain {
                name: "contamination",
                value: self.contamination,
                domain: "[0, 0.5)",
            });
        }
        if self.reps == 0 {
            return Err(Error::Domain {
                name: "reps",
                value: 0.0,
                domain: "[1, inf)",
            });
        }
        for (name, sd) in [("target sd", self.target.sd), ("contaminant sd", self.contaminant.sd)] {
            if !sd.is_finite() || sd < 0.0 {
                return Err(Error::Domain {
                    name,
                    value: sd,
                    domain: "[0, inf)",
                });
            }
        }
        Ok(())
    }

    /// `round(n * contamination)`, halves rounding up.
    pub fn contaminant_count(&self) -> usize {
        (self.n as f64 * self.contamination + 0.5 + 1e-9).floor() as usize
    }
}

/// Contamination sweep with `N(0,1)` target, 500 points per sample and
/// fractions 0%..=49% in 1% steps.
pub fn contamination_sweep(contaminant_mean: f64, reps: usize, master_seed: u64) -> (SimScenario, Vec<f64>) {
    let base = SimScenario {
        n: 500,
        contamination: 0.0,
        target: Normal::new(0.0, 1.0),
        contaminant: Normal::new(contaminant_mean, 1.0),
        reps,
        master_seed,
    };
    (base, (0..50).map(|i| i as f64 / 100.0).collect())
}

pub const PURE_NORMAL_SIZES: [usize; 7] = [10, 50, 100, 500, 1000, 5000, 10000];

/// Two-sided IIR at `c = 1.81`, boxplot at 1.5 and median ± 3·MADn.
pub fn default_methods() -> Vec<Method> {
    vec![
        Method::two_sided(Sensitivity::default()),
        Method::Boxplot { whisker: 1.5 },
        Method::Mad {
            k: 3.0,
            b: MAD_CONSISTENCY,
        },
    ]
}

/// SplitMix64 finalizer.
fn mix(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Seed of sweep step `step` under `master_seed`.
pub fn step_seed(master_seed: u64, step: u64) -> u64 {
    mix(master_seed ^ mix(step))
}

fn rep_rng(scn: &SimScenario, rep: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(mix(scn.master_seed));
    rng.set_stream(rep);
    rng
}

/// Marsaglia polar method; the second variate of each pair is kept.
#[derive(Debug, Default)]
pub struct PolarNormal {
    spare: Option<f64>,
}

impl PolarNormal {
    pub fn standard<R: Rng + ?Sized>(&mut self, rng: &mut R) -> f64 {
        if let Some(z) = self.spare.take() {
            return z;
        }
        loop {
            let u = 2.0 * rng.random::<f64>() - 1.0;
            let v = 2.0 * rng.random::<f64>() - 1.0;
            let s = u * u + v * v;
            if s > 0.0 && s < 1.0 {
                let f = (-2.0 * s.ln() / s).sqrt();
                self.spare = Some(v * f);
                return u * f;
            }
        }
    }

    pub fn sample<R: Rng + ?Sized>(&mut self, rng: &mut R, dist: Normal) -> f64 {
        dist.mean + dist.sd * self.standard(rng)
    }
}

/// Values of replication `rep` paired with a contaminant flag.
fn draw_labelled(scn: &SimScenario, rep: usize) -> Vec<(f64, bool)> {
    let m = scn.contaminant_count();
    let mut rng = rep_rng(scn, rep as u64);
    let mut normal = PolarNormal::default();
    let mut out = Vec::with_capacity(scn.n);
    for i in 0..scn.n {
        let from_g = i >= scn.n - m;
        let dist = if from_g { scn.contaminant } else { scn.target };
        out.push((normal.sample(&mut rng, dist), from_g));
    }
    out
}

/// Raw values of replication `rep`: `n - m` target draws then `m`
/// contaminant draws.
pub fn contaminated_sample(scn: &SimScenario, rep: usize) -> Result<Vec<f64>> {
    scn.validate()?;
    Ok(draw_labelled(scn, rep).into_iter().map(|(x, _)| x).collect())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CurvePoint {
    /// Contamination percent, or sample size for pure-normal curves.
    pub x: f64,
    pub method: String,
    /// Mean over replications of `100 * flagged / n`.
    pub detected_pct: f64,
    /// Standard error of `detected_pct` across replications.
    pub stderr: f64,
    /// Mean share of contaminants that were flagged; `None` without
    /// contaminants.
    pub recall_pct: Option<f64>,
}

/// Per replication: flagged count and flagged-contaminant count per method.
fn run_rep(scn: &SimScenario, rep: usize, methods: &[Method]) -> Result<Vec<(usize, usize)>> {
    let mut labelled = draw_labelled(scn, rep);
    labelled.sort_by(|a, b| a.0.total_cmp(&b.0));
    let sample = Sample::new(
        labelled.iter().map(|&(x, _)| x).collect::<Vec<_>>(),
        "simulated",
    )?;
    methods
        .iter()
        .map(|m| {
            let det = m.detect(&sample)?;
            let hits = det.outlier_indices.iter().filter(|&&i| labelled[i].1).count();
            Ok((det.outlier_count(), hits))
        })
        .collect()
}

fn summarize(x: f64, scn: &SimScenario, methods: &[Method], per_rep: &[Vec<(usize, usize)>]) -> Vec<CurvePoint> {
    let reps = per_rep.len() as f64;
    let m = scn.contaminant_count();
    methods
        .iter()
        .enumerate()
        .map(|(j, method)| {
            let pct: Vec<f64> = per_rep
                .iter()
                .map(|r| 100.0 * r[j].0 as f64 / scn.n as f64)
                .collect();
            let mean = pct.iter().sum::<f64>() / reps;
            let stderr = if per_rep.len() > 1 {
                let var = pct.iter().map(|p| (p - mean) * (p - mean)).sum::<f64>() / (reps - 1.0);
                (var / reps).sqrt()
            } else {
                0.0
            };
            let recall_pct = (m > 0).then(|| {
                per_rep
                    .iter()
                    .map(|r| 100.0 * r[j].1 as f64 / m as f64)
                    .sum::<f64>()
                    / reps
            });
            CurvePoint {
                x,
                method: method.name().to_string(),
                detected_pct: mean,
                stderr,
                recall_pct,
            }
        })
        .collect()
}

fn run_grid(
    scenarios: &[(f64, SimScenario)],
    methods: &[Method],
) -> Result<Vec<CurvePoint>> {
    for (_, scn) in scenarios {
        scn.validate()?;
    }
    let jobs: Vec<(usize, usize)> = scenarios
        .iter()
        .enumerate()
        .flat_map(|(s, (_, scn))| (0..scn.reps).map(move |r| (s, r)))
        .collect();
    // collect() keeps job order, so the reduction below is schedule-free
    let results: Vec<Vec<(usize, usize)>> = jobs
        .par_iter()
        .map(|&(s, r)| run_rep(&scenarios[s].1, r, methods))
        .collect::<Result<_>>()?;

    let mut out = Vec::with_capacity(scenarios.len() * methods.len());
    let mut offset = 0;
    for (x, scn) in scenarios {
        out.extend(summarize(*x, scn, methods, &results[offset..offset + scn.reps]));
        offset += scn.reps;
    }
    Ok(out)
}

/// Average detected percent per method at each contamination fraction.
///
/// Step `i` runs `base` with `contamination = fractions[i]` and seed
/// `step_seed(base.master_seed, i)`. Points are ordered by fraction, then
/// by method.
pub fn breakdown_curve(base: &SimScenario, fractions: &[f64], methods: &[Method]) -> Result<Vec<CurvePoint>> {
    let scenarios: Vec<(f64, SimScenario)> = fractions
        .iter()
        .enumerate()
        .map(|(i, &f)| {
            (
                // avoid 0.07 * 100 = 7.000000000000001 in the x column
                (f * 1e4).round() / 1e2,
                SimScenario {
                    contamination: f,
                    master_seed: step_seed(base.master_seed, i as u64),
                    ..*base
                },
            )
        })
        .collect();
    run_grid(&scenarios, methods)
}

/// Detected percent on uncontaminated standard-normal samples per size.
pub fn pure_normal_curve(sizes: &[usize], methods: &[Method], reps: usize, master_seed: u64) -> Result<Vec<CurvePoint>> {
    let scenarios: Vec<(f64, SimScenario)> = sizes
        .iter()
        .enumerate()
        .map(|(i, &n)| {
            (
                n as f64,
                SimScenario {
                    n,
                    contamination: 0.0,
                    target: Normal::new(0.0, 1.0),
                    contaminant: Normal::new(0.0, 1.0),
                    reps,
                    master_seed: step_seed(master_seed, i as u64),
                },
            )
        })
        .collect();
    run_grid(&scenarios, methods)
}
