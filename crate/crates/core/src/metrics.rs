//! Front analysis in (TPR, TNR) space and the rank-sum test.

use statrs::function::erf::erfc;
use thiserror::Error;

use crate::objectives::ObjectiveVector;

/// Largest combined sample size handled by exact enumeration.
pub const EXACT_RANK_SUM_LIMIT: usize = 16;

pub const SIGNIFICANCE_LEVEL: f64 = 0.05;

#[derive(Debug, Error, PartialEq)]
pub enum MetricsError {
    #[error("point ({0}, {1}) lies outside the unit square")]
    OutOfRange(f64, f64),
    #[error("each sample needs at least 2 values, got {0} and {1}")]
    SampleTooSmall(usize, usize),
}

/// A distinct front point with the number of solutions sitting on it.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FrontPoint {
    pub tpr: f64,
    pub tnr: f64,
    pub multiplicity: usize,
}

impl FrontPoint {
    pub fn point(&self) -> ObjectiveVector {
        ObjectiveVector::new(self.tpr, self.tnr)
    }
}

/// Indices of the points not dominated by any other point, ascending.
/// Identical points do not dominate each other, so all copies survive.
pub fn nondominated_indices(points: &[ObjectiveVector]) -> Vec<usize> {
    let mut order: Vec<usize> = (0..points.len()).collect();
    order.sort_by(|&a, &b| {
        points[b]
            .tpr
            .total_cmp(&points[a].tpr)
            .then(points[b].tnr.total_cmp(&points[a].tnr))
    });
    let mut keep = Vec::new();
    // Best TNR among points with strictly larger TPR than the current group.
    let mut best_above = f64::NEG_INFINITY;
    let mut start = 0;
    while start < order.len() {
        let tpr = points[order[start]].tpr;
        let mut end = start;
        while end < order.len() && points[order[end]].tpr == tpr {
            end += 1;
        }
        // Sorted descending, so the group's maximum TNR comes first.
        let group_max = points[order[start]].tnr;
        if group_max > best_above {
            keep.extend(order[start..end].iter().copied().filter(|&i| points[i].tnr == group_max));
        }
        best_above = best_above.max(group_max);
        start = end;
    }
    keep.sort_unstable();
    keep
}

pub fn nondominated(points: &[ObjectiveVector]) -> Vec<ObjectiveVector> {
    nondominated_indices(points).into_iter().map(|i| points[i]).collect()
}

/// Area dominated by the points with reference (0, 0). Dominated and
/// repeated points do not change the value.
pub fn hypervolume_2d(points: &[ObjectiveVector]) -> Result<f64, MetricsError> {
    for p in points {
        if !((0.0..=1.0).contains(&p.tpr) && (0.0..=1.0).contains(&p.tnr)) {
            return Err(MetricsError::OutOfRange(p.tpr, p.tnr));
        }
    }
    let mut front = nondominated(points);
    // Descending TPR means ascending TNR along a non-dominated front.
    front.sort_by(|a, b| b.tpr.total_cmp(&a.tpr));
    front.dedup();
    let mut area = 0.0;
    let mut covered_tnr = 0.0;
    for p in front {
        area += p.tpr * (p.tnr - covered_tnr);
        covered_tnr = p.tnr;
    }
    Ok(area)
}

/// Crowding distance with infinite values for the extremes of each
/// objective. An objective with zero range adds nothing to interior points.
pub fn crowding_distance(points: &[ObjectiveVector]) -> Vec<f64> {
    let n = points.len();
    let mut dist = vec![0.0; n];
    if n == 0 {
        return dist;
    }
    for obj in 0..2 {
        let value = |i: usize| points[i].as_array()[obj];
        let mut order: Vec<usize> = (0..n).collect();
        order.sort_by(|&a, &b| value(a).total_cmp(&value(b)).then(a.cmp(&b)));
        dist[order[0]] = f64::INFINITY;
        dist[order[n - 1]] = f64::INFINITY;
        let range = value(order[n - 1]) - value(order[0]);
        if range == 0.0 {
            continue;
        }
        for k in 1..n.saturating_sub(1) {
            dist[order[k]] += (value(order[k + 1]) - value(order[k - 1])) / range;
        }
    }
    dist
}

/// Groups points by exact coordinates, in order of first appearance.
pub fn duplication_histogram(points: &[ObjectiveVector]) -> Vec<FrontPoint> {
    let mut out: Vec<FrontPoint> = Vec::new();
    let mut index = std::collections::HashMap::new();
    for p in points {
        let key = (p.tpr.to_bits(), p.tnr.to_bits());
        match index.get(&key) {
            Some(&k) => {
                let fp: &mut FrontPoint = &mut out[k];
                fp.multiplicity += 1;
            }
            None => {
                index.insert(key, out.len());
                out.push(FrontPoint {
                    tpr: p.tpr,
                    tnr: p.tnr,
                    multiplicity: 1,
                });
            }
        }
    }
    out
}

/// Average number of solutions per distinct point; 0 for an empty set.
pub fn mean_multiplicity(points: &[ObjectiveVector]) -> f64 {
    let hist = duplication_histogram(points);
    if hist.is_empty() {
        0.0
    } else {
        points.len() as f64 / hist.len() as f64
    }
}

/// Non-dominated set of the union of several fronts, grouped by point.
pub fn accumulated_po_front(fronts: &[Vec<ObjectiveVector>]) -> Vec<FrontPoint> {
    let all: Vec<ObjectiveVector> = fronts.iter().flatten().copied().collect();
    duplication_histogram(&nondominated(&all))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TestReport {
    /// Rank sum of the first sample.
    pub statistic: f64,
    pub p_value: f64,
    pub significant: bool,
}

impl TestReport {
    fn new(statistic: f64, p_value: f64) -> Self {
        let p_value = p_value.clamp(0.0, 1.0);
        TestReport {
            statistic,
            p_value,
            significant: p_value < SIGNIFICANCE_LEVEL,
        }
    }
}

/// Mid-ranks (1-based) of the pooled sample `a ++ b`.
fn pooled_ranks(a: &[f64], b: &[f64]) -> Vec<f64> {
    let pooled: Vec<f64> = a.iter().chain(b).copied().collect();
    let mut order: Vec<usize> = (0..pooled.len()).collect();
    order.sort_by(|&i, &j| pooled[i].total_cmp(&pooled[j]));
    let mut ranks = vec![0.0; pooled.len()];
    let mut start = 0;
    while start < order.len() {
        let mut end = start + 1;
        while end < order.len() && pooled[order[end]] == pooled[order[start]] {
            end += 1;
        }
        let mid = (start + end + 1) as f64 / 2.0;
        for &i in &order[start..end] {
            ranks[i] = mid;
        }
        start = end;
    }
    ranks
}

fn check_sizes(a: &[f64], b: &[f64]) -> Result<(), MetricsError> {
    if a.len() < 2 || b.len() < 2 {
        return Err(MetricsError::SampleTooSmall(a.len(), b.len()));
    }
    Ok(())
}

/// Two-sided exact rank-sum test: enumerates every assignment of the pooled
/// mid-ranks to the first sample.
pub fn rank_sum_exact(a: &[f64], b: &[f64]) -> Result<TestReport, MetricsError> {
    check_sizes(a, b)?;
    let ranks = pooled_ranks(a, b);
    let n1 = a.len();
    let n = ranks.len();
    let observed: f64 = ranks[..n1].iter().sum();
    let mean = n1 as f64 * (n + 1) as f64 / 2.0;
    let extreme = (observed - mean).abs();

    // Doubled mid-ranks are integers, so sums can be counted exactly.
    let doubled: Vec<usize> = ranks.iter().map(|r| (r * 2.0).round() as usize).collect();
    let max_sum: usize = doubled.iter().sum();
    // ways[k][s]: number of k-subsets with doubled rank sum s.
    let mut ways = vec![vec![0f64; max_sum + 1]; n1 + 1];
    ways[0][0] = 1.0;
    for &r in &doubled {
        for k in (1..=n1).rev() {
            for s in (r..=max_sum).rev() {
                let add = ways[k - 1][s - r];
                if add != 0.0 {
                    ways[k][s] += add;
                }
            }
        }
    }
    let total: f64 = ways[n1].iter().sum();
    let tail: f64 = ways[n1]
        .iter()
        .enumerate()
        .filter(|&(s, _)| (s as f64 / 2.0 - mean).abs() >= extreme - 1e-9)
        .map(|(_, &c)| c)
        .sum();
    Ok(TestReport::new(observed, tail / total))
}

/// Two-sided rank-sum test by normal approximation with tie and continuity
/// corrections.
pub fn rank_sum_normal(a: &[f64], b: &[f64]) -> Result<TestReport, MetricsError> {
    check_sizes(a, b)?;
    let ranks = pooled_ranks(a, b);
    let n1 = a.len() as f64;
    let n2 = b.len() as f64;
    let n = n1 + n2;
    let observed: f64 = ranks[..a.len()].iter().sum();
    let mean = n1 * (n + 1.0) / 2.0;

    let mut sorted = ranks.clone();
    sorted.sort_by(f64::total_cmp);
    let mut tie_term = 0.0;
    for group in sorted.chunk_by(|x, y| x == y) {
        let t = group.len() as f64;
        tie_term += t * t * t - t;
    }
    let variance = n1 * n2 / 12.0 * ((n + 1.0) - tie_term / (n * (n - 1.0)));
    if variance <= 0.0 {
        return Ok(TestReport::new(observed, 1.0));
    }
    let z = ((observed - mean).abs() - 0.5).max(0.0) / variance.sqrt();
    // Two-sided tail: 2 (1 - Φ(z)) = erfc(z / √2).
    Ok(TestReport::new(observed, erfc(z / std::f64::consts::SQRT_2)))
}

/// Wilcoxon rank-sum (Mann–Whitney) test at α = 0.05. Exact for combined
/// sizes up to [`EXACT_RANK_SUM_LIMIT`], normal approximation beyond.
pub fn wilcoxon_rank_sum(a: &[f64], b: &[f64]) -> Result<TestReport, MetricsError> {
    if a.len() + b.len() <= EXACT_RANK_SUM_LIMIT {
        rank_sum_exact(a, b)
    } else {
        rank_sum_normal(a, b)
    }
}

pub fn mean_std(values: &[f64]) -> (f64, f64) {
    if values.is_empty() {
        return (f64::NAN, f64::NAN);
    }
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    if values.len() < 2 {
        return (mean, 0.0);
    }
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, var.sqrt())
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn ov(a: f64, b: f64) -> ObjectiveVector {
        ObjectiveVector::new(a, b)
    }

    fn brute_nondominated(points: &[ObjectiveVector]) -> Vec<usize> {
        (0..points.len())
            .filter(|&i| !points.iter().any(|q| q.dominates(&points[i])))
            .collect()
    }

    #[test]
    fn nondominated_examples() {
        let pts = [ov(1.0, 0.0), ov(0.0, 1.0), ov(0.5, 0.5)];
        assert_eq!(nondominated(&pts), pts.to_vec());
        assert_eq!(nondominated(&[ov(0.6, 0.6), ov(0.5, 0.5)]), vec![ov(0.6, 0.6)]);
        let dup = [ov(0.6, 0.6), ov(0.6, 0.6), ov(0.6, 0.5)];
        assert_eq!(nondominated_indices(&dup), vec![0, 1]);
        assert!(nondominated(&[]).is_empty());
    }

    #[test]
    fn nondominated_matches_brute_force() {
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        for _ in 0..50 {
            // Coarse grid so ties and duplicates are common.
            let pts: Vec<_> = (0..200)
                .map(|_| ov(rng.random_range(0..20) as f64 / 19.0, rng.random_range(0..20) as f64 / 19.0))
                .collect();
            assert_eq!(nondominated_indices(&pts), brute_nondominated(&pts));
        }
    }

    #[test]
    fn hypervolume_examples() {
        assert_eq!(hypervolume_2d(&[ov(1.0, 1.0)]).unwrap(), 1.0);
        assert_abs_diff_eq!(hypervolume_2d(&[ov(0.6, 0.4), ov(0.2, 0.8)]).unwrap(), 0.32, epsilon = 1e-12);
        assert_eq!(hypervolume_2d(&[]).unwrap(), 0.0);
        assert_eq!(hypervolume_2d(&[ov(1.2, 0.5)]), Err(MetricsError::OutOfRange(1.2, 0.5)));
        assert!(hypervolume_2d(&[ov(f64::NAN, 0.5)]).is_err());
    }

    #[test]
    fn crowding_examples() {
        let two = crowding_distance(&[ov(1.0, 0.0), ov(0.0, 1.0)]);
        assert!(two.iter().all(|d| d.is_infinite()));
        let line = [ov(0.0, 1.0), ov(1.0 / 3.0, 2.0 / 3.0), ov(2.0 / 3.0, 1.0 / 3.0), ov(1.0, 0.0)];
        let cd = crowding_distance(&line);
        assert!(cd[0].is_infinite() && cd[3].is_infinite());
        assert_abs_diff_eq!(cd[1], cd[2], epsilon = 1e-12);
        assert_abs_diff_eq!(cd[1], 4.0 / 3.0, epsilon = 1e-12);
        // Zero TNR range: only the TPR spread counts.
        let flat = crowding_distance(&[ov(0.0, 0.5), ov(0.5, 0.5), ov(1.0, 0.5)]);
        assert_abs_diff_eq!(flat[1], 1.0, epsilon = 1e-12);
    }

    /// Textbook crowding distance written independently: for each
    /// objective, the normalized gap between a point's nearest lower and
    /// upper neighbors in that coordinate.
    fn crowding_oracle(points: &[ObjectiveVector]) -> Vec<f64> {
        let n = points.len();
        (0..n)
            .map(|i| {
                let mut total = 0.0;
                for obj in 0..2 {
                    let v = |k: usize| points[k].as_array()[obj];
                    let lo = (0..n).map(v).fold(f64::INFINITY, f64::min);
                    let hi = (0..n).map(v).fold(f64::NEG_INFINITY, f64::max);
                    if v(i) == lo || v(i) == hi {
                        return f64::INFINITY;
                    }
                    let below = (0..n).map(v).filter(|&x| x < v(i)).fold(f64::NEG_INFINITY, f64::max);
                    let above = (0..n).map(v).filter(|&x| x > v(i)).fold(f64::INFINITY, f64::min);
                    total += (above - below) / (hi - lo);
                }
                total
            })
            .collect()
    }

    #[test]
    fn crowding_matches_oracle_on_random_fronts() {
        let mut rng = ChaCha8Rng::seed_from_u64(77);
        for _ in 0..100 {
            let pts: Vec<_> = (0..10).map(|_| ov(rng.random(), rng.random())).collect();
            let got = crowding_distance(&pts);
            let want = crowding_oracle(&pts);
            for (g, w) in got.iter().zip(&want) {
                if w.is_infinite() {
                    assert!(g.is_infinite());
                } else {
                    assert_abs_diff_eq!(g, w, epsilon = 1e-12);
                }
            }
        }
    }

    #[test]
    fn accumulated_front_examples() {
        let front = vec![ov(1.0, 0.2), ov(0.5, 0.5), ov(0.1, 0.9)];
        let copies = vec![front.clone(); 30];
        let acc = accumulated_po_front(&copies);
        assert_eq!(acc.len(), 3);
        for (fp, p) in acc.iter().zip(&front) {
            assert_eq!(fp.point(), *p);
            assert_eq!(fp.multiplicity, 30);
        }
        let acc = accumulated_po_front(&[vec![ov(1.0, 0.0)], vec![ov(0.0, 1.0)]]);
        assert_eq!(acc.len(), 2);

        let fronts = vec![vec![ov(0.6, 0.4)], vec![ov(0.2, 0.8), ov(0.1, 0.1)]];
        let merged: Vec<_> = accumulated_po_front(&fronts).iter().map(FrontPoint::point).collect();
        let hv = hypervolume_2d(&merged).unwrap();
        for f in &fronts {
            assert!(hv >= hypervolume_2d(f).unwrap());
        }
    }

    #[test]
    fn histogram_examples() {
        let pts = [ov(0.9, 0.8), ov(0.9, 0.8), ov(0.5, 0.5), ov(0.9, 0.8)];
        let h = duplication_histogram(&pts);
        assert_eq!(h.len(), 2);
        assert_eq!(h[0].multiplicity, 3);
        assert_eq!(h[1].multiplicity, 1);
        assert_eq!(h.iter().map(|f| f.multiplicity).sum::<usize>(), pts.len());
        assert_abs_diff_eq!(mean_multiplicity(&pts), 2.0);
        let distinct = [ov(0.1, 0.2), ov(0.3, 0.4)];
        assert!(duplication_histogram(&distinct).iter().all(|f| f.multiplicity == 1));
    }

    #[test]
    fn rank_sum_examples() {
        let r = wilcoxon_rank_sum(&[1.0, 2.0], &[3.0, 4.0]).unwrap();
        assert_abs_diff_eq!(r.p_value, 1.0 / 3.0, epsilon = 1e-12);
        assert_eq!(r.statistic, 3.0);
        assert!(!r.significant);

        let same = [0.5; 10];
        let r = wilcoxon_rank_sum(&same, &same).unwrap();
        assert_abs_diff_eq!(r.p_value, 1.0, epsilon = 0.05);
        let r = rank_sum_exact(&[1.0, 2.0, 3.0], &[1.0, 2.0, 3.0]).unwrap();
        assert_abs_diff_eq!(r.p_value, 1.0, epsilon = 1e-12);

        let a: Vec<f64> = (0..30).map(f64::from).collect();
        let b: Vec<f64> = (30..60).map(f64::from).collect();
        let r = wilcoxon_rank_sum(&a, &b).unwrap();
        assert!(r.p_value < 0.001 && r.p_value > 0.0);
        assert!(r.significant);

        assert_eq!(wilcoxon_rank_sum(&[1.0], &[2.0, 3.0]), Err(MetricsError::SampleTooSmall(1, 2)));
    }

    #[test]
    fn exact_tail_by_explicit_enumeration() {
        // Brute force over all 4-subsets of 8 pooled values, with a tie.
        let a = [1.0, 2.0, 2.0, 5.0];
        let b = [3.0, 4.0, 6.0, 7.0];
        let ranks = pooled_ranks(&a, &b);
        assert_eq!(ranks, vec![1.0, 2.5, 2.5, 6.0, 4.0, 5.0, 7.0, 8.0]);
        let observed: f64 = ranks[..4].iter().sum();
        let mean = 18.0;
        let (mut hit, mut total) = (0, 0);
        for mask in 0u32..256 {
            if mask.count_ones() != 4 {
                continue;
            }
            total += 1;
            let s: f64 = (0..8).filter(|k| mask & (1 << k) != 0).map(|k| ranks[k]).sum();
            if (s - mean).abs() >= (observed - mean).abs() - 1e-9 {
                hit += 1;
            }
        }
        let r = rank_sum_exact(&a, &b).unwrap();
        assert_abs_diff_eq!(r.p_value, hit as f64 / total as f64, epsilon = 1e-12);
    }

    #[test]
    fn mean_and_sample_std() {
        let (m, s) = mean_std(&[1.0, 2.0, 3.0, 4.0]);
        assert_abs_diff_eq!(m, 2.5);
        assert_abs_diff_eq!(s, (5.0f64 / 3.0).sqrt(), epsilon = 1e-12);
    }

    fn arb_points(max: usize) -> impl Strategy<Value = Vec<ObjectiveVector>> {
        prop::collection::vec((0.0f64..=1.0, 0.0f64..=1.0).prop_map(|(a, b)| ov(a, b)), 0..max)
    }

    proptest! {
        #[test]
        fn nondominated_is_idempotent(pts in arb_points(60)) {
            let once = nondominated(&pts);
            prop_assert_eq!(nondominated(&once), once.clone());
            prop_assert_eq!(nondominated_indices(&pts), brute_nondominated(&pts));
        }

        #[test]
        fn hypervolume_is_monotone(pts in arb_points(30), extra in (0.0f64..=1.0, 0.0f64..=1.0)) {
            let base = hypervolume_2d(&pts).unwrap();
            let mut more = pts.clone();
            let p = ov(extra.0, extra.1);
            more.push(p);
            let grown = hypervolume_2d(&more).unwrap();
            prop_assert!(grown >= base - 1e-15);
            if pts.iter().any(|q| q.dominates(&p) || *q == p) {
                prop_assert!((grown - base).abs() < 1e-15);
            }
            prop_assert!((0.0..=1.0).contains(&grown));
        }

        #[test]
        fn crowding_is_permutation_equivariant(pts in arb_points(20), seed in any::<u64>()) {
            let mut perm: Vec<usize> = (0..pts.len()).collect();
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            use rand::seq::SliceRandom;
            perm.shuffle(&mut rng);
            // Equivariance only holds without coordinate ties.
            let distinct = |o: usize| {
                let mut v: Vec<u64> = pts.iter().map(|p| p.as_array()[o].to_bits()).collect();
                v.sort_unstable();
                v.windows(2).all(|w| w[0] != w[1])
            };
            prop_assume!(distinct(0) && distinct(1));
            let shuffled: Vec<_> = perm.iter().map(|&i| pts[i]).collect();
            let cd = crowding_distance(&pts);
            let cd_shuffled = crowding_distance(&shuffled);
            for (k, &i) in perm.iter().enumerate() {
                prop_assert!(cd_shuffled[k] == cd[i] || (cd_shuffled[k] - cd[i]).abs() < 1e-12);
            }
        }

        #[test]
        fn p_values_in_unit_interval(
            a in prop::collection::vec(0.0f64..1.0, 2..20),
            b in prop::collection::vec(0.0f64..1.0, 2..20),
        ) {
            let r = wilcoxon_rank_sum(&a, &b).unwrap();
            prop_assert!(r.p_value > 0.0 && r.p_value <= 1.0);
            prop_assert_eq!(r.significant, r.p_value < 0.05);
        }
    }
}
