//! Owner summaries, k-means with elbow selection, and capacity bands.

use std::collections::BTreeMap;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::ingest::ChargingTransaction;
use crate::seed;

pub type Point = [f64; 2];

pub const MAX_LLOYD_ITERATIONS: usize = 300;
pub const DEFAULT_ELBOW_THRESHOLD: f64 = 0.10;
const RESTARTS: u64 = 10;

/// Per-owner charging behaviour.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OwnerSummary {
    pub participant_id: String,
    pub battery_kwh: f64,
    pub mean_kwh_per_charge: f64,
    pub charges_per_day: f64,
    pub n_transactions: usize,
    /// Inclusive span in days between the first and last plug-in date.
    pub active_days: usize,
}

impl OwnerSummary {
    pub fn point(&self) -> Point {
        [self.battery_kwh, self.mean_kwh_per_charge]
    }
}

/// One summary per distinct participant, sorted by participant id.
///
/// An owner's battery is the most frequent capacity across their sessions
/// (smallest wins a tie).
pub fn summarize_owners(txns: &[ChargingTransaction]) -> Vec<OwnerSummary> {
    struct Acc {
        n: usize,
        kwh: f64,
        first: chrono::NaiveDate,
        last: chrono::NaiveDate,
        caps: BTreeMap<u64, usize>,
    }
    let mut by_owner: BTreeMap<&str, Acc> = BTreeMap::new();
    for t in txns {
        let date = t.plug_in.date();
        let acc = by_owner.entry(&t.participant_id).or_insert(Acc {
            n: 0,
            kwh: 0.0,
            first: date,
            last: date,
            caps: BTreeMap::new(),
        });
        acc.n += 1;
        acc.kwh += t.consumed_kwh;
        acc.first = acc.first.min(date);
        acc.last = acc.last.max(date);
        // Capacities are positive, so the bit pattern orders like the value.
        *acc.caps.entry(t.car_kwh.to_bits()).or_default() += 1;
    }
    by_owner
        .into_iter()
        .map(|(id, acc)| {
            let (bits, _) = acc
                .caps
                .iter()
                .fold((0u64, 0usize), |best, (b, c)| if *c > best.1 { (*b, *c) } else { best });
            let active_days = (acc.last - acc.first).num_days() as usize + 1;
            OwnerSummary {
                participant_id: id.to_string(),
                battery_kwh: f64::from_bits(bits),
                mean_kwh_per_charge: acc.kwh / acc.n as f64,
                charges_per_day: acc.n as f64 / active_days as f64,
                n_transactions: acc.n,
                active_days,
            }
        })
        .collect()
}

/// Column-wise min-max normalisation of 2-d points.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PointScaler {
    pub min: Point,
    pub max: Point,
}

impl PointScaler {
    pub fn fit(points: &[Point]) -> PointScaler {
        let mut min = [f64::INFINITY; 2];
        let mut max = [f64::NEG_INFINITY; 2];
        for p in points {
            for d in 0..2 {
                min[d] = min[d].min(p[d]);
                max[d] = max[d].max(p[d]);
            }
        }
        PointScaler { min, max }
    }

    pub fn apply(&self, p: Point) -> Point {
        let mut out = [0.0; 2];
        for d in 0..2 {
            let span = self.max[d] - self.min[d];
            out[d] = if span > 0.0 { (p[d] - self.min[d]) / span } else { 0.0 };
        }
        out
    }

    pub fn invert(&self, p: Point) -> Point {
        let mut out = [0.0; 2];
        for d in 0..2 {
            out[d] = self.min[d] + p[d] * (self.max[d] - self.min[d]);
        }
        out
    }
}

fn sq_dist(a: &Point, b: &Point) -> f64 {
    (a[0] - b[0]).powi(2) + (a[1] - b[1]).powi(2)
}

fn nearest(p: &Point, centroids: &[Point]) -> (usize, f64) {
    let mut best = (0, f64::INFINITY);
    for (j, c) in centroids.iter().enumerate() {
        let d = sq_dist(p, c);
        if d < best.1 {
            best = (j, d);
        }
    }
    best
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KMeansFit {
    pub centroids: Vec<Point>,
    pub labels: Vec<usize>,
    pub wcss: f64,
    pub iterations: usize,
    /// WCSS after each Lloyd step of the winning restart.
    pub history: Vec<f64>,
}

fn wcss_of(points: &[Point], centroids: &[Point], labels: &[usize]) -> f64 {
    points
        .iter()
        .zip(labels)
        .map(|(p, &l)| sq_dist(p, &centroids[l]))
        .sum()
}

fn plus_plus_init<R: Rng>(points: &[Point], k: usize, rng: &mut R) -> Vec<Point> {
    let mut centroids = Vec::with_capacity(k);
    centroids.push(points[rng.random_range(0..points.len())]);
    let mut d2: Vec<f64> = points.iter().map(|p| sq_dist(p, &centroids[0])).collect();
    while centroids.len() < k {
        let total: f64 = d2.iter().sum();
        let pick = if total > 0.0 {
            let mut u = rng.random::<f64>() * total;
            let mut chosen = points.len() - 1;
            for (i, w) in d2.iter().enumerate() {
                if u < *w {
                    chosen = i;
                    break;
                }
                u -= w;
            }
            chosen
        } else {
            rng.random_range(0..points.len())
        };
        let c = points[pick];
        for (i, p) in points.iter().enumerate() {
            d2[i] = d2[i].min(sq_dist(p, &c));
        }
        centroids.push(c);
    }
    centroids
}

fn lloyd(points: &[Point], mut centroids: Vec<Point>) -> KMeansFit {
    let k = centroids.len();
    let mut labels: Vec<usize> = points.iter().map(|p| nearest(p, &centroids).0).collect();
    let mut history = Vec::new();
    let mut iterations = 0;
    loop {
        // Update step.
        let mut sums = vec![[0.0f64; 2]; k];
        let mut counts = vec![0usize; k];
        for (p, &l) in points.iter().zip(&labels) {
            sums[l][0] += p[0];
            sums[l][1] += p[1];
            counts[l] += 1;
        }
        for j in 0..k {
            if counts[j] > 0 {
                centroids[j] = [sums[j][0] / counts[j] as f64, sums[j][1] / counts[j] as f64];
            }
        }
        // An empty cluster takes over the point farthest from its centroid.
        for j in 0..k {
            if counts[j] == 0 {
                let far = points
                    .iter()
                    .enumerate()
                    .map(|(i, p)| (i, sq_dist(p, &centroids[labels[i]])))
                    .fold((0, -1.0), |a, b| if b.1 > a.1 { b } else { a })
                    .0;
                centroids[j] = points[far];
                labels[far] = j;
            }
        }
        history.push(wcss_of(points, &centroids, &labels));
        iterations += 1;

        // Assignment step; stop at a fixpoint. A point only moves on a strict
        // improvement so ties cannot cycle.
        let mut changed = false;
        for (i, p) in points.iter().enumerate() {
            let (j, d) = nearest(p, &centroids);
            if j != labels[i] && d < sq_dist(p, &centroids[labels[i]]) {
                labels[i] = j;
                changed = true;
            }
        }
        if !changed || iterations >= MAX_LLOYD_ITERATIONS {
            break;
        }
    }
    let wcss = wcss_of(points, &centroids, &labels);
    KMeansFit {
        centroids,
        labels,
        wcss,
        iterations,
        history,
    }
}

/// k-means++ seeding followed by Lloyd iterations, best of ten seeded restarts.
pub fn kmeans(points: &[Point], k: usize, seed: u64) -> Result<KMeansFit> {
    if k == 0 {
        return Err(Error::invalid("k must be at least 1"));
    }
    if k > points.len() {
        return Err(Error::invalid(format!(
            "k = {k} exceeds the number of points ({})",
            points.len()
        )));
    }
    let mut best: Option<KMeansFit> = None;
    for r in 0..RESTARTS {
        let mut rng = seed::rng(seed::derive_index(seed, r));
        let fit = lloyd(points, plus_plus_init(points, k, &mut rng));
        if best.as_ref().is_none_or(|b| fit.wcss < b.wcss) {
            best = Some(fit);
        }
    }
    Ok(best.expect("at least one restart"))
}

/// WCSS for k = 1..=k_max (entry `k-1`), capped at the number of points.
pub fn wcss_curve(points: &[Point], k_max: usize, seed: u64) -> Result<Vec<f64>> {
    let k_max = k_max.min(points.len());
    (1..=k_max)
        .map(|k| kmeans(points, k, seed::derive_index(seed, k as u64)).map(|f| f.wcss))
        .collect()
}

/// Smallest k at which moving to k+1 clusters removes less than `threshold`
/// of the total (k = 1) sum of squares.
pub fn elbow_from_curve(curve: &[f64], threshold: f64) -> usize {
    let total = curve.first().copied().unwrap_or(0.0);
    if !(total > 0.0) {
        return 1;
    }
    for k in 1..curve.len() {
        let drop = (curve[k - 1] - curve[k]) / total;
        if drop < threshold {
            return k;
        }
    }
    curve.len()
}

pub fn elbow_select(points: &[Point], k_max: usize, seed: u64) -> Result<usize> {
    elbow_select_with(points, k_max, seed, DEFAULT_ELBOW_THRESHOLD)
}

pub fn elbow_select_with(points: &[Point], k_max: usize, seed: u64, threshold: f64) -> Result<usize> {
    if k_max < 2 {
        return Err(Error::invalid("elbow selection needs k_max >= 2"));
    }
    if points.is_empty() {
        return Err(Error::invalid("no points to cluster"));
    }
    if points.iter().all(|p| p == &points[0]) {
        return Ok(1);
    }
    Ok(elbow_from_curve(&wcss_curve(points, k_max, seed)?, threshold))
}

/// Published capacity bands (kWh) for clusters 1..=3.
pub const CAPACITY_BANDS: [(f64, f64); 3] = [(4.4, 18.7), (22.0, 41.0), (60.0, 100.0)];

/// Maps a battery capacity to its cluster band (1-based). Capacities in a gap
/// go to the band with the nearer boundary; a tie goes to the lower band.
pub fn assign_capacity_band(battery_kwh: f64) -> u32 {
    for (i, (lo, hi)) in CAPACITY_BANDS.iter().enumerate() {
        if battery_kwh <= *hi {
            if battery_kwh >= *lo || i == 0 {
                return i as u32 + 1;
            }
            let prev_hi = CAPACITY_BANDS[i - 1].1;
            return if battery_kwh <= 0.5 * (prev_hi + lo) {
                i as u32
            } else {
                i as u32 + 1
            };
        }
    }
    CAPACITY_BANDS.len() as u32
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClusterModel {
    pub k: usize,
    /// Centroids in normalised feature space, ordered by cluster id.
    pub centroids: Vec<Point>,
    pub scaler: PointScaler,
    /// participant id -> cluster id (1-based, ascending battery centroid).
    pub assignments: BTreeMap<String, u32>,
    /// WCSS for k = 1..=k_max.
    pub wcss_curve: Vec<f64>,
    /// cluster id -> (min, max) battery capacity among its members.
    pub capacity_bands: BTreeMap<u32, (f64, f64)>,
}

/// One row of the per-cluster summary table.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClusterSummary {
    pub cluster: u32,
    pub owners: usize,
    pub min_capacity_kwh: f64,
    pub max_capacity_kwh: f64,
    pub mean_kwh_per_charge: f64,
    pub charges_per_day: f64,
}

impl ClusterModel {
    /// Selects k by the elbow rule (unless `k` is given), clusters the owners
    /// and orders cluster ids by battery capacity.
    pub fn fit(summaries: &[OwnerSummary], k: Option<usize>, k_max: usize, seed: u64) -> Result<Self> {
        if summaries.is_empty() {
            return Err(Error::invalid("no owners to cluster"));
        }
        let raw: Vec<Point> = summaries.iter().map(OwnerSummary::point).collect();
        let scaler = PointScaler::fit(&raw);
        let points: Vec<Point> = raw.iter().map(|p| scaler.apply(*p)).collect();
        let curve = wcss_curve(&points, k_max.max(1), seed::derive(seed, "elbow"))?;
        let k = match k {
            Some(k) => k,
            None => elbow_from_curve(&curve, DEFAULT_ELBOW_THRESHOLD),
        };
        let fit = kmeans(&points, k, seed::derive(seed, "kmeans"))?;

        let mut order: Vec<usize> = (0..k).collect();
        order.sort_by(|a, b| {
            fit.centroids[*a][0]
                .total_cmp(&fit.centroids[*b][0])
                .then(fit.centroids[*a][1].total_cmp(&fit.centroids[*b][1]))
        });
        let mut relabel = vec![0u32; k];
        for (new, old) in order.iter().enumerate() {
            relabel[*old] = new as u32 + 1;
        }

        let mut assignments = BTreeMap::new();
        let mut capacity_bands: BTreeMap<u32, (f64, f64)> = BTreeMap::new();
        for (s, l) in summaries.iter().zip(&fit.labels) {
            let c = relabel[*l];
            assignments.insert(s.participant_id.clone(), c);
            let band = capacity_bands.entry(c).or_insert((s.battery_kwh, s.battery_kwh));
            band.0 = band.0.min(s.battery_kwh);
            band.1 = band.1.max(s.battery_kwh);
        }
        Ok(ClusterModel {
            k,
            centroids: order.iter().map(|o| fit.centroids[*o]).collect(),
            scaler,
            assignments,
            wcss_curve: curve,
            capacity_bands,
        })
    }

    /// True when the member capacity ranges do not overlap.
    pub fn bands_disjoint(&self) -> bool {
        self.capacity_bands
            .values()
            .zip(self.capacity_bands.values().skip(1))
            .all(|(a, b)| a.1 < b.0)
    }

    pub fn summarize(&self, summaries: &[OwnerSummary]) -> Vec<ClusterSummary> {
        let mut acc: BTreeMap<u32, Vec<&OwnerSummary>> = BTreeMap::new();
        for s in summaries {
            if let Some(c) = self.assignments.get(&s.participant_id) {
                acc.entry(*c).or_default().push(s);
            }
        }
        acc.into_iter()
            .map(|(cluster, members)| {
                let n = members.len() as f64;
                ClusterSummary {
                    cluster,
                    owners: members.len(),
                    min_capacity_kwh: members.iter().map(|m| m.battery_kwh).fold(f64::INFINITY, f64::min),
                    max_capacity_kwh: members.iter().map(|m| m.battery_kwh).fold(f64::NEG_INFINITY, f64::max),
                    mean_kwh_per_charge: members.iter().map(|m| m.mean_kwh_per_charge).sum::<f64>() / n,
                    charges_per_day: members.iter().map(|m| m.charges_per_day).sum::<f64>() / n,
                }
            })
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ingest::{parse_timestamp, EvType, TrialStage};
    use proptest::prelude::{prop_assert, proptest};
    use rand_distr::{Distribution, Normal};

    fn session(pid: &str, day: u32, kwh: f64, cap: f64) -> ChargingTransaction {
        let t = parse_timestamp(&format!("2017-03-{day:02}T18:00:00")).unwrap();
        ChargingTransaction {
            charger_id: "C".into(),
            participant_id: pid.into(),
            car_kw: 7.0,
            car_kwh: cap,
            group_id: "G".into(),
            trial_stage: TrialStage::T1,
            plug_in: t,
            plug_out: t + chrono::Duration::hours(2),
            consumed_kwh: kwh,
            active_start: t,
            car_make: String::new(),
            car_model: String::new(),
            ev_type: EvType::Bev,
        }
    }

    #[test]
    fn single_owner_single_charge() {
        let s = summarize_owners(&[session("a", 1, 6.0, 30.0)]);
        assert_eq!(s.len(), 1);
        assert_eq!(s[0].mean_kwh_per_charge, 6.0);
        assert_eq!(s[0].charges_per_day, 1.0);
        assert_eq!(s[0].active_days, 1);
    }

    #[test]
    fn four_charges_over_ten_days() {
        let txns: Vec<_> = [1, 4, 6, 10].iter().map(|d| session("a", *d, 5.0, 30.0)).collect();
        let s = summarize_owners(&txns);
        assert_eq!(s[0].active_days, 10);
        assert!((s[0].charges_per_day - 0.4).abs() < 1e-15);
    }

    #[test]
    fn k_equal_one_is_the_mean() {
        let pts = [[0.0, 0.0], [1.0, 0.0], [0.0, 3.0], [3.0, 1.0]];
        let fit = kmeans(&pts, 1, 3).unwrap();
        assert!((fit.centroids[0][0] - 1.0).abs() < 1e-15);
        assert!((fit.centroids[0][1] - 1.0).abs() < 1e-15);
    }

    #[test]
    fn k_equal_n_has_zero_wcss() {
        let pts = [[0.0, 0.0], [1.0, 0.0], [0.0, 3.0], [3.0, 1.0], [2.0, 2.0]];
        let fit = kmeans(&pts, pts.len(), 11).unwrap();
        assert_eq!(fit.wcss, 0.0);
    }

    #[test]
    fn k_larger_than_points_errors() {
        assert!(kmeans(&[[0.0, 0.0]], 2, 0).is_err());
        assert!(kmeans(&[[0.0, 0.0]], 0, 0).is_err());
    }

    /// Exhaustive search over all 2-partitions.
    fn brute_force_two_partition(pts: &[Point]) -> (Vec<usize>, f64) {
        let n = pts.len();
        let mut best = (vec![], f64::INFINITY);
        for mask in 1u32..(1 << (n - 1)) {
            let labels: Vec<usize> = (0..n).map(|i| ((mask >> i) & 1) as usize).collect();
            let mut total = 0.0;
            for c in 0..2 {
                let members: Vec<&Point> = pts.iter().zip(&labels).filter(|(_, l)| **l == c).map(|(p, _)| p).collect();
                let m = members.len() as f64;
                let cx = members.iter().map(|p| p[0]).sum::<f64>() / m;
                let cy = members.iter().map(|p| p[1]).sum::<f64>() / m;
                total += members.iter().map(|p| (p[0] - cx).powi(2) + (p[1] - cy).powi(2)).sum::<f64>();
            }
            if total < best.1 {
                best = (labels, total);
            }
        }
        best
    }

    fn same_partition(a: &[usize], b: &[usize]) -> bool {
        (0..a.len()).all(|i| (0..a.len()).all(|j| (a[i] == a[j]) == (b[i] == b[j])))
    }

    #[test]
    fn two_triples_match_brute_force() {
        let pts = [[0.0, 0.1], [0.2, 0.0], [0.1, 0.3], [5.0, 5.2], [5.3, 4.9], [4.8, 5.1]];
        let (labels, wcss) = brute_force_two_partition(&pts);
        let fit = kmeans(&pts, 2, 42).unwrap();
        assert!(same_partition(&fit.labels, &labels));
        assert!((fit.wcss - wcss).abs() < 1e-12);
    }

    fn blobs(centres: &[Point], per: usize, sd: f64, seed: u64) -> Vec<Point> {
        let mut rng = crate::seed::rng(seed);
        let noise = Normal::new(0.0, sd).unwrap();
        centres
            .iter()
            .flat_map(|c| (0..per).map(|_| [c[0] + noise.sample(&mut rng), c[1] + noise.sample(&mut rng)]).collect::<Vec<_>>())
            .collect()
    }

    #[test]
    fn three_blobs_select_three() {
        let pts = blobs(&[[0.0, 0.0], [5.0, 0.0], [2.5, 4.0]], 40, 0.4, 9);
        // Oracle: the exact 3-partition is known by construction; its WCSS
        // must be what k-means reaches, and the drop beyond it is small.
        let mut truth = 0.0;
        for chunk in pts.chunks(40) {
            let cx = chunk.iter().map(|p| p[0]).sum::<f64>() / 40.0;
            let cy = chunk.iter().map(|p| p[1]).sum::<f64>() / 40.0;
            truth += chunk.iter().map(|p| (p[0] - cx).powi(2) + (p[1] - cy).powi(2)).sum::<f64>();
        }
        let curve = wcss_curve(&pts, 6, 5).unwrap();
        assert!((curve[2] - truth).abs() < 1e-9 * truth.max(1.0));
        assert_eq!(elbow_select(&pts, 6, 5).unwrap(), 3);
    }

    #[test]
    fn identical_points_select_one() {
        let pts = vec![[0.3, 0.3]; 10];
        assert_eq!(elbow_select(&pts, 5, 1).unwrap(), 1);
    }

    #[test]
    fn capacity_bands_published_values() {
        assert_eq!(assign_capacity_band(30.0), 2);
        assert_eq!(assign_capacity_band(4.4), 1);
        assert_eq!(assign_capacity_band(50.0), 2);
        assert_eq!(assign_capacity_band(18.7), 1);
        assert_eq!(assign_capacity_band(20.35), 1); // exact midpoint of 18.7..22 -> lower
        assert_eq!(assign_capacity_band(21.0), 2);
        assert_eq!(assign_capacity_band(50.5), 2); // midpoint of 41..60
        assert_eq!(assign_capacity_band(51.0), 3);
        assert_eq!(assign_capacity_band(2.0), 1);
        assert_eq!(assign_capacity_band(150.0), 3);
    }

    #[test]
    fn lloyd_history_non_increasing() {
        let pts = blobs(&[[0.0, 0.0], [1.0, 1.0], [2.0, 0.0], [0.5, 2.0]], 30, 0.6, 77);
        for k in 2..6 {
            let fit = kmeans(&pts, k, k as u64).unwrap();
            for w in fit.history.windows(2) {
                assert!(w[1] <= w[0] + 1e-12, "{:?}", fit.history);
            }
            // Fixpoint: every point sits with its nearest centroid.
            for (p, l) in pts.iter().zip(&fit.labels) {
                let (j, d) = nearest(p, &fit.centroids);
                assert!(j == *l || (d - sq_dist(p, &fit.centroids[*l])).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn cluster_model_orders_by_capacity() {
        let mut summaries = Vec::new();
        for (i, (cap, kwh)) in [(8.0, 5.0), (9.0, 5.5), (10.0, 6.0), (30.0, 14.0), (33.0, 15.0), (35.0, 14.5), (80.0, 27.0), (90.0, 26.0), (85.0, 28.0)]
            .iter()
            .enumerate()
        {
            summaries.push(OwnerSummary {
                participant_id: format!("p{i}"),
                battery_kwh: *cap,
                mean_kwh_per_charge: *kwh,
                charges_per_day: 0.5,
                n_transactions: 10,
                active_days: 20,
            });
        }
        let model = ClusterModel::fit(&summaries, None, 6, 3).unwrap();
        assert_eq!(model.k, 3);
        assert_eq!(model.assignments["p0"], 1);
        assert_eq!(model.assignments["p4"], 2);
        assert_eq!(model.assignments["p8"], 3);
        assert!(model.bands_disjoint());
        assert_eq!(model.capacity_bands[&2], (30.0, 35.0));
        let json = serde_json::to_string(&model).unwrap();
        let back: ClusterModel = serde_json::from_str(&json).unwrap();
        assert_eq!(back, model);
        let table = model.summarize(&summaries);
        assert_eq!(table.len(), 3);
        assert!((table[2].mean_kwh_per_charge - 27.0).abs() < 1e-12);
    }

    proptest! {
        #[test]
        fn capacity_band_total_and_monotone(a in 0.1f64..200.0, b in 0.1f64..200.0) {
            let (lo, hi) = if a <= b { (a, b) } else { (b, a) };
            let (ca, cb) = (assign_capacity_band(lo), assign_capacity_band(hi));
            prop_assert!((1..=3).contains(&ca));
            prop_assert!(ca <= cb);
        }

        #[test]
        fn kmeans_permutation_invariant(perm_seed in 0u64..1000) {
            let pts = blobs(&[[0.0, 0.0], [4.0, 0.0], [2.0, 3.5]], 12, 0.3, 5);
            let base = kmeans(&pts, 3, 1).unwrap();
            let mut idx: Vec<usize> = (0..pts.len()).collect();
            let mut rng = crate::seed::rng(perm_seed);
            for i in (1..idx.len()).rev() {
                let j = rng.random_range(0..=i);
                idx.swap(i, j);
            }
            let shuffled: Vec<Point> = idx.iter().map(|i| pts[*i]).collect();
            let fit = kmeans(&shuffled, 3, 1).unwrap();
            let mut back = vec![0; pts.len()];
            for (pos, orig) in idx.iter().enumerate() {
                back[*orig] = fit.labels[pos];
            }
            prop_assert!(same_partition(&back, &base.labels));
            prop_assert!((fit.wcss - base.wcss).abs() < 1e-9);
        }
    }
}
