//! Independent reference implementations and checks shared by the
//! integration suites. Nothing here calls into the detector internals.
#![allow(dead_code, clippy::needless_range_loop)]

use gapsense::{
    boxplot_detect, chauvenet_detect, detect_two_sided, gap_series, iir_closed_form, mad_detect,
    mean_sigma_detect, monte_carlo, threshold_to_weber, weber_to_threshold, Detection, Sample,
    Sensitivity,
};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn sample(values: &[f64]) -> Sample {
    Sample::new(values.to_vec(), "test").unwrap()
}

/// Two-sided expanding detector recomputed from scratch at every step.
/// Returns the flagged values in ascending order.
pub fn two_sided_oracle(values: &[f64], c: f64) -> Vec<f64> {
    let mut d = values.to_vec();
    d.sort_by(f64::total_cmp);
    let n = d.len();
    let range = d[n - 1] - d[0];
    if n < 3 || range <= 0.0 {
        return Vec::new();
    }
    // inclusive member interval [l, r]
    let (mut l, mut r) = if n % 2 == 1 { (n / 2, n / 2) } else { (n / 2 - 1, n / 2) };
    let pick = |l: usize, r: usize| -> Option<bool> {
        // Some(true) = extend low
        match (l > 0, r + 1 < n) {
            (false, false) => None,
            (true, false) => Some(true),
            (false, true) => Some(false),
            (true, true) => Some(d[r + 1] - d[r] > d[l] - d[l - 1]),
        }
    };
    while r - l + 1 < n / 2 + 1 {
        match pick(l, r) {
            Some(true) => l -= 1,
            Some(false) => r += 1,
            None => break,
        }
    }
    while let Some(low) = pick(l, r) {
        let max_interior = (l + 1..=r).map(|k| d[k] - d[k - 1]).fold(0.0, f64::max);
        let gap = if low { d[l] - d[l - 1] } else { d[r + 1] - d[r] };
        let iir = (n - 1) as f64 * (gap - max_interior) / range;
        if gap > 0.0 && iir >= c {
            break;
        }
        if low {
            l -= 1
        } else {
            r += 1
        }
    }
    d.iter()
        .copied()
        .filter(|&x| x < d[l] || x > d[r])
        .collect()
}

/// Euclidean distances by double loop.
pub fn distance_oracle(points: &[Vec<f64>]) -> Vec<Vec<f64>> {
    let n = points.len();
    let mut out = vec![vec![0.0; n]; n];
    for i in 0..n {
        for j in 0..n {
            let mut s = 0.0;
            for k in 0..points[i].len() {
                s += (points[i][k] - points[j][k]).powi(2);
            }
            out[i][j] = s.sqrt();
        }
    }
    out
}

/// Connected components of the mutual-partner graph (1-based ids, each
/// component sorted, components ordered by smallest id). Singletons are
/// dropped.
pub fn mutual_components(partners: &[Vec<usize>]) -> Vec<Vec<usize>> {
    let n = partners.len();
    let linked = |a: usize, b: usize| partners[a - 1].contains(&b) && partners[b - 1].contains(&a);
    let mut comp = vec![0usize; n + 1];
    let mut next = 0;
    for start in 1..=n {
        if comp[start] != 0 {
            continue;
        }
        next += 1;
        let mut stack = vec![start];
        comp[start] = next;
        while let Some(a) = stack.pop() {
            for b in 1..=n {
                if comp[b] == 0 && linked(a, b) {
                    comp[b] = next;
                    stack.push(b);
                }
            }
        }
    }
    let mut groups: Vec<Vec<usize>> = (1..=next)
        .map(|c| (1..=n).filter(|&i| comp[i] == c).collect::<Vec<_>>())
        .filter(|g| g.len() > 1)
        .collect();
    groups.sort_by_key(|g| g[0]);
    groups
}

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Small integer samples with pairwise distinct gaps, so no step of the
/// expanding detector depends on a tie.
pub fn distinct_gap_sample<R: Rng>(rng: &mut R, n: usize) -> Vec<f64> {
    let mut pool: Vec<i64> = (1..=40).collect();
    pool.shuffle(rng);
    let mut x = rng.random_range(-50i64..=50);
    let mut v = vec![x as f64];
    for &g in &pool[..n - 1] {
        x += g;
        v.push(x as f64);
    }
    v.shuffle(rng);
    v
}

fn flagged(det: &Detection) -> Vec<f64> {
    det.outlier_values.clone()
}

fn all_detectors(s: &Sample) -> Vec<(&'static str, Vec<f64>)> {
    vec![
        ("mean_sigma", flagged(&mean_sigma_detect(s, 3.0).unwrap())),
        ("boxplot", flagged(&boxplot_detect(s, 1.5).unwrap())),
        ("mad", flagged(&mad_detect(s, 3.0, 1.4826).unwrap())),
        ("chauvenet", flagged(&chauvenet_detect(s).unwrap())),
        ("iir", flagged(&detect_two_sided(s, Sensitivity::default()))),
    ]
}

pub fn check_gap_sum(samples: usize, seed: u64) -> Result<(), String> {
    let mut rng = rng(seed);
    for _ in 0..samples {
        let n = rng.random_range(2..60);
        let v: Vec<f64> = (0..n).map(|_| rng.random_range(-1e3..1e3)).collect();
        let g = gap_series(&sample(&v)).map_err(|e| e.to_string())?;
        if g.gaps.len() != n - 1 || g.gaps.iter().any(|&x| x < 0.0) {
            return Err(format!("bad gap vector for {v:?}"));
        }
        let total: f64 = g.normalized.iter().sum();
        if (total - 1.0).abs() > 1e-12 {
            return Err(format!("normalized gaps sum to {total}"));
        }
    }
    Ok(())
}

pub fn check_closed_form_identity(samples: usize, seed: u64) -> Result<(), String> {
    let mut rng = rng(seed);
    for _ in 0..samples {
        let n = rng.random_range(2..1000usize);
        let range: f64 = rng.random_range(1e-3..1e3);
        let gap = rng.random_range(0.0..range);
        let max_prev = rng.random_range(0.0..range);
        if gap == max_prev || gap == 0.0 {
            continue;
        }
        let iir = iir_closed_form(gap, max_prev, n, range).map_err(|e| e.to_string())?;
        let er = (n - 1) as f64 * gap / range;
        let ihr = gap / (gap - max_prev);
        let ratio = er / ihr;
        if (iir - ratio).abs() > 1e-9 * ratio.abs().max(1e-300) {
            return Err(format!("iir {iir} vs er/ihr {ratio}"));
        }
    }
    Ok(())
}

/// `x -> a x + b` with `a = ±2^j` and integer `b` keeps every operation
/// exact; flagged sets must map through the same transform.
pub fn check_affine_equivariance(samples: usize, seed: u64) -> Result<(), String> {
    let mut rng = rng(seed);
    for _ in 0..samples {
        let n = rng.random_range(3..25);
        let v = distinct_gap_sample(&mut rng, n);
        let j = rng.random_range(-3i32..=3);
        let a = if rng.random_bool(0.5) { 2f64.powi(j) } else { -(2f64.powi(j)) };
        let b = rng.random_range(-100i32..=100) as f64;
        let w: Vec<f64> = v.iter().map(|&x| a * x + b).collect();
        let before = all_detectors(&sample(&v));
        let after = all_detectors(&sample(&w));
        for ((name, f0), (_, f1)) in before.iter().zip(after.iter()) {
            let mut mapped: Vec<f64> = f0.iter().map(|&x| a * x + b).collect();
            mapped.sort_by(f64::total_cmp);
            if &mapped != f1 {
                return Err(format!("{name} on {v:?} with a={a}, b={b}: {mapped:?} vs {f1:?}"));
            }
        }
    }
    Ok(())
}

pub fn check_threshold_bijection(points: usize) -> Result<(), String> {
    for i in 0..=points {
        let k = i as f64 / points as f64;
        let c = weber_to_threshold(k).map_err(|e| e.to_string())?;
        let back = threshold_to_weber(c).map_err(|e| e.to_string())?;
        if (back - k).abs() > 1e-12 {
            return Err(format!("K {k} -> c {c} -> K {back}"));
        }
        let c2 = 2.0 * i as f64 / points as f64;
        let k2 = threshold_to_weber(c2).map_err(|e| e.to_string())?;
        let back2 = weber_to_threshold(k2).map_err(|e| e.to_string())?;
        if (back2 - c2).abs() > 1e-12 {
            return Err(format!("c {c2} -> K {k2} -> c {back2}"));
        }
        if i > 0 {
            let prev = weber_to_threshold((i - 1) as f64 / points as f64).unwrap();
            if c >= prev {
                return Err(format!("threshold not decreasing at K {k}"));
            }
        }
    }
    Ok(())
}

pub fn check_two_sided_oracle(samples: usize, seed: u64) -> Result<(), String> {
    let mut rng = rng(seed);
    for _ in 0..samples {
        let n = rng.random_range(3..=12);
        // coarse integers produce ties and zero gaps on purpose
        let v: Vec<f64> = (0..n).map(|_| rng.random_range(0i32..40) as f64).collect();
        let c = [1.81, 1.0, 0.5, 1.96][rng.random_range(0..4)];
        let got = detect_two_sided(&sample(&v), Sensitivity::from_threshold(c).unwrap()).outlier_values;
        let want = two_sided_oracle(&v, c);
        if got != want {
            return Err(format!("{v:?} at c={c}: {got:?} vs oracle {want:?}"));
        }
    }
    Ok(())
}

pub fn check_simulation_determinism(seed: u64) -> Result<(), String> {
    let (base, fractions) = monte_carlo::contamination_sweep(10.0, 5, seed);
    let methods = monte_carlo::default_methods();
    let a = monte_carlo::breakdown_curve(&base, &fractions[..8], &methods).map_err(|e| e.to_string())?;
    let b = monte_carlo::breakdown_curve(&base, &fractions[..8], &methods).map_err(|e| e.to_string())?;
    let bits = |c: &[monte_carlo::CurvePoint]| -> Vec<(u64, u64, u64)> {
        c.iter()
            .map(|p| (p.x.to_bits(), p.detected_pct.to_bits(), p.stderr.to_bits()))
            .collect()
    };
    if bits(&a) != bits(&b) {
        return Err("breakdown curves differ between runs".into());
    }
    let pool = rayon::ThreadPoolBuilder::new().num_threads(3).build().unwrap();
    let c = pool.install(|| monte_carlo::breakdown_curve(&base, &fractions[..8], &methods)).map_err(|e| e.to_string())?;
    if bits(&a) != bits(&c) {
        return Err("breakdown curve depends on thread count".into());
    }
    Ok(())
}
