//! Resonance clustering on top of per-point partner sets.
//!
//! Each point runs the one-sided expanding scan over its own ascending
//! distance series (with itself at distance 0 in front) and keeps the
//! neighbours before the border as partners. A seed then fires: partners of
//! firing cells get excitation, everyone else inhibition, until the firing
//! set stops changing. Seeds that never settle, or get no net return
//! stimulus, are silent. Clusters come from voting over all seeded runs.
//!
//! Point ids are 1-based throughout, matching file row order.

use std::collections::{HashMap, HashSet};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::iir::Sensitivity;

/// Points in d dimensions, ids `1..=n` in order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PointSet {
    points: Vec<Vec<f64>>,
}

impl PointSet {
    pub fn new(points: Vec<Vec<f64>>) -> Result<Self> {
        if points.len() < 2 {
            return Err(Error::TooFew {
                required: 2,
                actual: points.len(),
            });
        }
        let dim = points[0].len();
        if dim == 0 {
            return Err(Error::Domain {
                name: "dimension",
                value: 0.0,
                domain: "[1, inf)",
            });
        }
        for (i, p) in points.iter().enumerate() {
            if p.len() != dim {
                return Err(Error::Domain {
                    name: "dimension",
                    value: p.len() as f64,
                    domain: "equal across points",
                });
            }
            if let Some(&value) = p.iter().find(|c| !c.is_finite()) {
                return Err(Error::NonFinite { index: i, value });
            }
        }
        Ok(Self { points })
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.points[0].len()
    }

    /// Coordinates of point `id` (1-based).
    pub fn point(&self, id: usize) -> Option<&[f64]> {
        id.checked_sub(1)
            .and_then(|i| self.points.get(i))
            .map(Vec::as_slice)
    }

    pub fn points(&self) -> &[Vec<f64>] {
        &self.points
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Metric {
    #[default]
    Euclidean,
    Manhattan,
    Chebyshev,
}

impl Metric {
    pub fn distance(self, a: &[f64], b: &[f64]) -> f64 {
        let diffs = a.iter().zip(b).map(|(x, y)| (x - y).abs());
        match self {
            Metric::Euclidean => diffs.map(|d| d * d).sum::<f64>().sqrt(),
            Metric::Manhattan => diffs.sum(),
            Metric::Chebyshev => diffs.fold(0.0, f64::max),
        }
    }
}

/// Symmetric distance matrix indexed by 0-based point position.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DistanceMatrix {
    n: usize,
    data: Vec<f64>,
}

impl DistanceMatrix {
    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.n + j]
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.n..(i + 1) * self.n]
    }
}

pub fn pairwise_distances(points: &PointSet) -> DistanceMatrix {
    pairwise_distances_with(points, Metric::Euclidean)
}

pub fn pairwise_distances_with(points: &PointSet, metric: Metric) -> DistanceMatrix {
    let n = points.len();
    let mut data = vec![0.0; n * n];
    for i in 0..n {
        for j in i + 1..n {
            let d = metric.distance(&points.points[i], &points.points[j]);
            data[i * n + j] = d;
            data[j * n + i] = d;
        }
    }
    DistanceMatrix { n, data }
}

/// Neighbours a point accepts as consistent with itself.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PartnerSet {
    pub owner: usize,
    /// Sorted ids.
    pub partners: Vec<usize>,
    /// Distance of the first excluded neighbour; partners are strictly
    /// nearer. `None` when no border was found and every other point is a
    /// partner.
    pub radius: Option<f64>,
}

impl PartnerSet {
    pub fn contains(&self, id: usize) -> bool {
        self.partners.binary_search(&id).is_ok()
    }
}

fn check_id(n: usize, id: usize) -> Result<usize> {
    if id == 0 || id > n {
        return Err(Error::UnknownPoint(id));
    }
    Ok(id - 1)
}

/// Smallest partner count before a border may cut: the point plus two
/// neighbours makes the three-point minimum.
pub const DEFAULT_MIN_PARTNERS: usize = 2;

/// Partner set of point `id` from its augmented distance series.
///
/// The series is `0, d_(1), ..., d_(n-1)`. Its gaps are scanned with the
/// running maximum of earlier gaps; the border is the first positive gap
/// `t >= min_partners + 1` with `IIR >= c`, and the `t - 1` nearest
/// neighbours become partners.
pub fn partner_set(
    dm: &DistanceMatrix,
    id: usize,
    sens: Sensitivity,
    min_partners: usize,
) -> Result<PartnerSet> {
    let n = dm.len();
    if n < min_partners + 1 || n < 2 {
        return Err(Error::TooFew {
            required: (min_partners + 1).max(2),
            actual: n,
        });
    }
    let i = check_id(n, id)?;

    let mut neighbours: Vec<(f64, usize)> = dm
        .row(i)
        .iter()
        .enumerate()
        .filter(|&(j, _)| j != i)
        .map(|(j, &d)| (d, j + 1))
        .collect();
    neighbours.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));

    let series: Vec<f64> = std::iter::once(0.0)
        .chain(neighbours.iter().map(|&(d, _)| d))
        .collect();
    let range = series[n - 1];
    let first = (min_partners + 1).max(2);

    let mut border = None;
    if range > 0.0 {
        let mut max_prev = series[1];
        for t in 2..n {
            let gap = series[t] - series[t - 1];
            let iir = (n - 1) as f64 * (gap - max_prev) / range;
            if t >= first && gap > 0.0 && iir >= sens.threshold_c {
                border = Some(t);
                break;
            }
            max_prev = max_prev.max(gap);
        }
    }

    let keep = border.map_or(n - 1, |t| t - 1);
    let mut partners: Vec<usize> = neighbours[..keep].iter().map(|&(_, j)| j).collect();
    partners.sort_unstable();
    Ok(PartnerSet {
        owner: id,
        partners,
        radius: border.map(|t| series[t]),
    })
}

/// Partner sets for every point, in id order.
pub fn partner_sets(
    dm: &DistanceMatrix,
    sens: Sensitivity,
    min_partners: usize,
) -> Result<Vec<PartnerSet>> {
    (1..=dm.len())
        .into_par_iter()
        .map(|id| partner_set(dm, id, sens, min_partners))
        .collect()
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ResonanceRun {
    pub seed: usize,
    /// Sorted ids; just the seed when silent.
    pub fired: Vec<usize>,
    pub silent: bool,
    /// Update rounds until the state settled or repeated.
    pub rounds: usize,
}

fn check_partner_sets(partner_sets: &[PartnerSet]) -> Result<()> {
    let n = partner_sets.len();
    for (i, ps) in partner_sets.iter().enumerate() {
        if ps.owner != i + 1 {
            return Err(Error::InvalidOrder(format!(
                "partner set {} belongs to point {}",
                i + 1,
                ps.owner
            )));
        }
        if let Some(&bad) = ps.partners.iter().find(|&&p| p == 0 || p > n) {
            return Err(Error::UnknownPoint(bad));
        }
    }
    Ok(())
}

/// Fires `seed` and lets charge settle.
///
/// Every round each firing cell sends +1 to its partners and -1 to every
/// other cell; a cell fires next round when its net input is positive. The
/// seed stays on. The run is kept when the firing set reaches a fixpoint
/// with at least two cells and the seed's own net input is positive.
/// Otherwise (collapse, oscillation, or no return stimulus) it is silent.
///
/// `partner_sets[i]` must belong to point `i + 1`.
pub fn resonate(partner_sets: &[PartnerSet], seed: usize) -> Result<ResonanceRun> {
    check_partner_sets(partner_sets)?;
    let s = check_id(partner_sets.len(), seed)?;
    let adj = adjacency(partner_sets);
    Ok(resonate_unchecked(&adj, s))
}

fn adjacency(partner_sets: &[PartnerSet]) -> Vec<Vec<bool>> {
    let n = partner_sets.len();
    partner_sets
        .iter()
        .map(|ps| {
            let mut row = vec![false; n];
            for &p in &ps.partners {
                row[p - 1] = true;
            }
            row
        })
        .collect()
}

fn charges(adj: &[Vec<bool>], fired: &[bool]) -> Vec<i64> {
    let n = adj.len();
    let mut charge = vec![0i64; n];
    for (i, row) in adj.iter().enumerate().filter(|&(i, _)| fired[i]) {
        for (j, c) in charge.iter_mut().enumerate() {
            if j != i {
                *c += if row[j] { 1 } else { -1 };
            }
        }
    }
    debug_assert_eq!(charge.len(), n);
    charge
}

fn resonate_unchecked(adj: &[Vec<bool>], s: usize) -> ResonanceRun {
    let seed = s + 1;
    let n = adj.len();
    let mut state = vec![false; n];
    state[s] = true;
    let mut seen = HashSet::new();
    seen.insert(state.clone());
    let mut rounds = 0;
    let settled = loop {
        let charge = charges(adj, &state);
        let mut next: Vec<bool> = charge.iter().map(|&c| c > 0).collect();
        next[s] = true;
        rounds += 1;
        if next == state {
            break charge[s] > 0 && state.iter().filter(|&&f| f).count() >= 2;
        }
        // Revisiting an earlier state means a cycle: nothing settles.
        if !seen.insert(next.clone()) {
            break false;
        }
        state = next;
    };

    if !settled {
        return ResonanceRun {
            seed,
            fired: vec![seed],
            silent: true,
            rounds,
        };
    }
    ResonanceRun {
        seed,
        fired: state
            .iter()
            .enumerate()
            .filter_map(|(j, &f)| f.then_some(j + 1))
            .collect(),
        silent: false,
        rounds,
    }
}

/// Per-cluster tally, one row of the summary table.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClusterSummary {
    pub cluster: usize,
    pub members: Vec<usize>,
    /// Members whose own run fired exactly this cluster.
    pub right_clustering: usize,
    pub silent: Vec<usize>,
    /// Non-silent members whose own run fired a different set.
    pub misclustered: Vec<usize>,
    /// `right_clustering / members.len()`.
    pub probability: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClusterPartition {
    /// `labels[id - 1]` is the 1-based cluster number, if any.
    pub labels: Vec<Option<usize>>,
    pub silent_ids: Vec<usize>,
    pub clusters: Vec<ClusterSummary>,
    /// One run per seed, in id order.
    pub runs: Vec<ResonanceRun>,
}

impl ClusterPartition {
    pub fn cluster_count(&self) -> usize {
        self.clusters.len()
    }

    /// Members of each cluster whose own run was not silent.
    pub fn non_silent_members(&self) -> Vec<Vec<usize>> {
        self.clusters
            .iter()
            .map(|c| {
                c.members
                    .iter()
                    .copied()
                    .filter(|m| !self.runs[m - 1].silent)
                    .collect()
            })
            .collect()
    }
}

/// Seeds every point (in `master_order`) and combines the runs.
///
/// Each non-silent run votes for its fired set. A point takes the set that
/// most runs containing it produced; ties go to the set first produced by
/// the smallest seed id. Clusters are numbered by their smallest member.
pub fn cluster_all(partner_sets: &[PartnerSet], master_order: &[usize]) -> Result<ClusterPartition> {
    check_partner_sets(partner_sets)?;
    let n = partner_sets.len();
    let mut seen = vec![false; n];
    if master_order.len() != n {
        return Err(Error::InvalidOrder(format!(
            "expected a permutation of 1..={n}, got {} entries",
            master_order.len()
        )));
    }
    for &id in master_order {
        let i = check_id(n, id)?;
        if std::mem::replace(&mut seen[i], true) {
            return Err(Error::InvalidOrder(format!("id {id} repeated")));
        }
    }

    let adj = adjacency(partner_sets);
    let mut runs: Vec<ResonanceRun> = master_order
        .par_iter()
        .map(|&id| resonate_unchecked(&adj, id - 1))
        .collect();
    runs.sort_by_key(|r| r.seed);

    // signature -> (votes, smallest seed)
    let mut votes: HashMap<&[usize], (usize, usize)> = HashMap::new();
    for run in runs.iter().filter(|r| !r.silent) {
        let entry = votes.entry(&run.fired).or_insert((0, run.seed));
        entry.0 += 1;
        entry.1 = entry.1.min(run.seed);
    }

    let mut choice: Vec<Option<&[usize]>> = vec![None; n];
    let mut best: Vec<(usize, usize)> = vec![(0, usize::MAX); n];
    for (&sig, &(count, min_seed)) in &votes {
        for &m in sig {
            let (bc, bs) = best[m - 1];
            if count > bc || (count == bc && min_seed < bs) {
                best[m - 1] = (count, min_seed);
                choice[m - 1] = Some(sig);
            }
        }
    }

    let mut groups: HashMap<&[usize], Vec<usize>> = HashMap::new();
    for (i, sig) in choice.iter().enumerate() {
        if let Some(sig) = sig {
            groups.entry(sig).or_default().push(i + 1);
        }
    }
    let mut groups: Vec<Vec<usize>> = groups.into_values().collect();
    groups.sort_by_key(|g| g[0]);

    let mut labels = vec![None; n];
    let mut clusters = Vec::with_capacity(groups.len());
    for (c, members) in groups.into_iter().enumerate() {
        let mut right = 0;
        let mut silent = Vec::new();
        let mut misclustered = Vec::new();
        for &m in &members {
            labels[m - 1] = Some(c + 1);
            let run = &runs[m - 1];
            if run.silent {
                silent.push(m);
            } else if run.fired == members {
                right += 1;
            } else {
                misclustered.push(m);
            }
        }
        clusters.push(ClusterSummary {
            cluster: c + 1,
            probability: right as f64 / members.len() as f64,
            members,
            right_clustering: right,
            silent,
            misclustered,
        });
    }

    Ok(ClusterPartition {
        labels,
        silent_ids: runs.iter().filter(|r| r.silent).map(|r| r.seed).collect(),
        clusters,
        runs,
    })
}

/// Partner sets plus [`cluster_all`] in id order.
pub fn cluster_points(
    points: &PointSet,
    metric: Metric,
    sens: Sensitivity,
    min_partners: usize,
) -> Result<ClusterPartition> {
    let dm = pairwise_distances_with(points, metric);
    let sets = partner_sets(&dm, sens, min_partners)?;
    let order: Vec<usize> = (1..=points.len()).collect();
    cluster_all(&sets, &order)
}
