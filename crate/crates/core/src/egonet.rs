//! Contact frequencies, 1-D mean-shift clustering and concentric circle
//! assembly.
//!
//! Frequencies span orders of magnitude, so clustering runs in
//! log-frequency space by default with a flat (uniform) kernel whose
//! bandwidth defaults to the 30th percentile of pairwise distances.
//! Circles are cumulative: circle k is the union of the k most intimate
//! clusters, and the outermost circle equals the active network.

use std::io::Write;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::signing::RelationshipProfile;

/// Julian year in seconds.
pub const SECONDS_PER_YEAR: f64 = 365.25 * 86_400.0;

/// Minimum contact frequency (per year) for an alter to be active.
pub const ACTIVE_FREQ_PER_YEAR: f64 = 1.0;

#[derive(Debug, Error)]
pub enum EgonetError {
    #[error("ego timeline span is zero; frequencies are undefined")]
    ZeroSpan,
    #[error("bandwidth must be positive, got {0}")]
    DegenerateBandwidth(f64),
    #[error("cannot cluster an empty value set")]
    EmptyInput,
}

/// Interaction frequency of one directed ego-alter pair.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ContactFrequency {
    pub alter_id: String,
    pub interactions: u64,
    pub freq_per_year: f64,
    pub active: bool,
}

/// Frequencies for one ego's relationships over the ego's timeline span.
///
/// The denominator is the ego's own first-to-last-tweet span in Julian
/// years, shared by all of that ego's relationships. Alters below one
/// interaction per year are flagged inactive and excluded from clustering.
pub fn compute_frequencies(
    profiles: &[RelationshipProfile],
    ego_span: (i64, i64),
) -> Result<Vec<ContactFrequency>, EgonetError> {
    compute_frequencies_with_min(profiles, ego_span, ACTIVE_FREQ_PER_YEAR)
}

/// [`compute_frequencies`] with a custom activity cutoff (interactions per
/// year).
pub fn compute_frequencies_with_min(
    profiles: &[RelationshipProfile],
    ego_span: (i64, i64),
    min_freq_per_year: f64,
) -> Result<Vec<ContactFrequency>, EgonetError> {
    let span_seconds = ego_span.1 - ego_span.0;
    if span_seconds <= 0 {
        return Err(EgonetError::ZeroSpan);
    }
    let duration_years = span_seconds as f64 / SECONDS_PER_YEAR;
    Ok(profiles
        .iter()
        .map(|p| {
            let freq = p.n_total() as f64 / duration_years;
            ContactFrequency {
                alter_id: p.alter_id.clone(),
                interactions: p.n_total(),
                freq_per_year: freq,
                active: freq >= min_freq_per_year,
            }
        })
        .collect())
}

/// Mode-seeking result on a set of 1-D values.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MeanShiftResult {
    /// Cluster centers sorted in descending order.
    pub centers: Vec<f64>,
    /// Index into `centers` for each input value, in input order.
    pub assignments: Vec<usize>,
    pub bandwidth: f64,
}

/// Flat-kernel mean shift on 1-D values.
///
/// Every point iterates `x <- mean{ v : |v - x| <= h }` to a fixed point
/// (tolerance 1e-7, at most 500 iterations); converged modes closer than
/// `h / 2` are merged and every value is assigned to its nearest mode.
pub fn mean_shift_1d(values: &[f64], bandwidth: f64) -> Result<MeanShiftResult, EgonetError> {
    const TOL: f64 = 1e-7;
    const MAX_ITER: usize = 500;

    if values.is_empty() {
        return Err(EgonetError::EmptyInput);
    }
    if !(bandwidth > 0.0) {
        return Err(EgonetError::DegenerateBandwidth(bandwidth));
    }
    let mut sorted = values.to_vec();
    sorted.sort_by(|a, b| a.partial_cmp(b).unwrap());

    let tol = TOL * bandwidth.max(1.0);
    let mut modes: Vec<f64> = Vec::with_capacity(values.len());
    for &start in &sorted {
        let mut x = start;
        for _ in 0..MAX_ITER {
            let (lo, hi) = window(&sorted, x, bandwidth);
            let slice = &sorted[lo..hi];
            let next = slice.iter().sum::<f64>() / slice.len() as f64;
            if (next - x).abs() < tol {
                x = next;
                break;
            }
            x = next;
        }
        modes.push(x);
    }

    // Merge converged modes closer than half the bandwidth. Modes are in
    // ascending order because the shift map is monotone.
    let mut centers: Vec<(f64, usize)> = Vec::new();
    for &m in &modes {
        match centers.last_mut() {
            Some((c, n)) if (m - *c).abs() < bandwidth / 2.0 => {
                // Running mean keeps the merged center between its modes.
                *c = (*c * *n as f64 + m) / (*n as f64 + 1.0);
                *n += 1;
            }
            _ => centers.push((m, 1)),
        }
    }
    let mut centers: Vec<f64> = centers.into_iter().map(|(c, _)| c).collect();
    centers.sort_by(|a, b| b.partial_cmp(a).unwrap());

    let nearest = |v: f64, centers: &[f64]| {
        centers
            .iter()
            .enumerate()
            .min_by(|(_, a), (_, b)| (v - **a).abs().partial_cmp(&(v - **b).abs()).unwrap())
            .map(|(i, _)| i)
            .unwrap()
    };
    // Running-mean merging can leave a center that no value is nearest
    // to; drop such empty clusters so every circle gains alters.
    let mut populated = vec![false; centers.len()];
    for &v in values {
        populated[nearest(v, &centers)] = true;
    }
    let centers: Vec<f64> = centers
        .into_iter()
        .zip(&populated)
        .filter(|(_, &keep)| keep)
        .map(|(c, _)| c)
        .collect();
    let assignments = values.iter().map(|&v| nearest(v, &centers)).collect();
    Ok(MeanShiftResult { centers, assignments, bandwidth })
}

fn window(sorted: &[f64], x: f64, h: f64) -> (usize, usize) {
    let lo = sorted.partition_point(|&v| v < x - h);
    let hi = sorted.partition_point(|&v| v <= x + h);
    (lo, hi)
}

/// Bandwidth estimate: the `quantile` nearest-rank of all pairwise
/// distances. `None` when every value coincides (no positive distance).
pub fn estimate_bandwidth(values: &[f64], quantile: f64) -> Option<f64> {
    if values.len() < 2 {
        return None;
    }
    let mut dists = Vec::with_capacity(values.len() * (values.len() - 1) / 2);
    for i in 0..values.len() {
        for j in (i + 1)..values.len() {
            dists.push((values[i] - values[j]).abs());
        }
    }
    dists.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let picked = crate::signing::nearest_rank(&dists, quantile);
    if picked > 0.0 {
        Some(picked)
    } else {
        // Quantile landed on tied values; fall back to the smallest
        // positive distance so the kernel still separates the groups.
        dists.into_iter().find(|&d| d > 0.0)
    }
}

/// Clustering options as exposed on the command line.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct ClusterOptions {
    pub bandwidth: Option<f64>,
    pub bandwidth_quantile: f64,
    pub log_space: bool,
}

impl Default for ClusterOptions {
    fn default() -> Self {
        ClusterOptions { bandwidth: None, bandwidth_quantile: 0.30, log_space: true }
    }
}

/// One concentric circle: a cumulative alter set with its lower frequency
/// bound.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Circle {
    pub size: usize,
    pub min_freq: f64,
    pub alters: Vec<String>,
}

/// An ego's alters partitioned into nested circles, most intimate first.
/// The outermost circle is the active network.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EgoNetwork {
    pub ego_id: String,
    pub n_circles: usize,
    pub circles: Vec<Circle>,
    pub active_size: usize,
}

impl EgoNetwork {
    pub fn cumulative_sizes(&self) -> Vec<usize> {
        self.circles.iter().map(|c| c.size).collect()
    }
}

/// Group active alters into circles from a clustering result.
///
/// Clusters are ordered by descending center frequency and circle k is the
/// union of clusters 1..=k.
pub fn assemble_circles(
    ego_id: &str,
    result: &MeanShiftResult,
    freqs: &[&ContactFrequency],
) -> EgoNetwork {
    let n_clusters = result.centers.len();
    let mut members: Vec<Vec<&ContactFrequency>> = vec![Vec::new(); n_clusters];
    for (freq, &cluster) in freqs.iter().zip(&result.assignments) {
        members[cluster].push(freq);
    }
    let mut circles = Vec::with_capacity(n_clusters);
    let mut cumulative: Vec<&ContactFrequency> = Vec::new();
    for cluster in members {
        cumulative.extend(cluster);
        let mut alters: Vec<String> = cumulative.iter().map(|f| f.alter_id.clone()).collect();
        alters.sort();
        let min_freq = cumulative
            .iter()
            .map(|f| f.freq_per_year)
            .fold(f64::INFINITY, f64::min);
        circles.push(Circle { size: cumulative.len(), min_freq, alters });
    }
    let active_size = circles.last().map_or(0, |c| c.size);
    EgoNetwork { ego_id: ego_id.to_string(), n_circles: circles.len(), circles, active_size }
}

/// Full per-ego pipeline: restrict to active alters, cluster their
/// frequencies and assemble circles. Egos with fewer than 2 active alters
/// get a trivial single-circle network.
pub fn build_ego_network(
    ego_id: &str,
    freqs: &[ContactFrequency],
    opts: &ClusterOptions,
) -> Result<EgoNetwork, EgonetError> {
    let active: Vec<&ContactFrequency> = freqs.iter().filter(|f| f.active).collect();
    if active.len() < 2 {
        let mut alters: Vec<String> = active.iter().map(|f| f.alter_id.clone()).collect();
        alters.sort();
        let min_freq = active
            .iter()
            .map(|f| f.freq_per_year)
            .fold(f64::INFINITY, f64::min);
        let circles = if alters.is_empty() {
            Vec::new()
        } else {
            vec![Circle { size: alters.len(), min_freq, alters }]
        };
        let active_size = circles.last().map_or(0, |c| c.size);
        return Ok(EgoNetwork {
            ego_id: ego_id.to_string(),
            n_circles: circles.len(),
            circles,
            active_size,
        });
    }

    let space: Vec<f64> = active
        .iter()
        .map(|f| if opts.log_space { f.freq_per_year.ln() } else { f.freq_per_year })
        .collect();
    let bandwidth = match opts.bandwidth {
        Some(h) if h > 0.0 => h,
        Some(h) => return Err(EgonetError::DegenerateBandwidth(h)),
        None => match estimate_bandwidth(&space, opts.bandwidth_quantile) {
            Some(h) => h,
            // All active frequencies identical: one cluster.
            None => {
                let result = MeanShiftResult {
                    centers: vec![space[0]],
                    assignments: vec![0; space.len()],
                    bandwidth: 0.0,
                };
                return Ok(assemble_circles(ego_id, &result, &active));
            }
        },
    };
    let result = mean_shift_1d(&space, bandwidth)?;
    Ok(assemble_circles(ego_id, &result, &active))
}

/// Ego networks as JSON Lines, one object per ego.
pub fn write_egonets_json<W: Write>(egonets: &[EgoNetwork], mut out: W) -> std::io::Result<()> {
    for net in egonets {
        serde_json::to_writer(&mut out, net)?;
        out.write_all(b"\n")?;
    }
    Ok(())
}

pub fn read_egonets_json<R: std::io::BufRead>(input: R) -> std::io::Result<Vec<EgoNetwork>> {
    let mut out = Vec::new();
    for line in input.lines() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        out.push(serde_json::from_str(&line)?);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::signing::RelationshipProfile;

    fn profile(alter: &str, n: u64) -> RelationshipProfile {
        RelationshipProfile {
            ego_id: "e".into(),
            alter_id: alter.into(),
            n_pos: n,
            n_neu: 0,
            n_neg: 0,
            first_ts: 0,
            last_ts: 0,
        }
    }

    const YEAR: i64 = 31_557_600; // SECONDS_PER_YEAR

    #[test]
    fn frequency_division_and_active_boundary() {
        let profiles = vec![profile("a", 12), profile("b", 1), profile("c", 1)];
        let freqs = compute_frequencies(&profiles, (0, 2 * YEAR)).unwrap();
        assert!((freqs[0].freq_per_year - 6.0).abs() < 1e-12);
        assert!(freqs[0].active);
        // 1 interaction over 2 years: 0.5/yr, inactive.
        assert!((freqs[1].freq_per_year - 0.5).abs() < 1e-12);
        assert!(!freqs[1].active);

        // Boundary: exactly 1/yr is active.
        let freqs = compute_frequencies(&[profile("a", 1)], (0, YEAR)).unwrap();
        assert!((freqs[0].freq_per_year - 1.0).abs() < 1e-12);
        assert!(freqs[0].active);
    }

    #[test]
    fn zero_span_is_an_error() {
        assert!(matches!(
            compute_frequencies(&[profile("a", 1)], (5, 5)),
            Err(EgonetError::ZeroSpan)
        ));
    }

    #[test]
    fn single_point_single_cluster() {
        let r = mean_shift_1d(&[3.0], 1.0).unwrap();
        assert_eq!(r.centers, vec![3.0]);
        assert_eq!(r.assignments, vec![0]);
    }

    #[test]
    fn two_separated_groups() {
        let mut values = vec![];
        for i in 0..10 {
            values.push(1.0 + i as f64 * 0.01);
            values.push(100.0 + i as f64 * 0.01);
        }
        let r = mean_shift_1d(&values, 5.0).unwrap();
        assert_eq!(r.centers.len(), 2);
        assert!(r.centers[0] > 99.0 && r.centers[1] < 2.0);
        for (i, &a) in r.assignments.iter().enumerate() {
            assert_eq!(a, if values[i] > 50.0 { 0 } else { 1 });
        }
    }

    #[test]
    fn degenerate_bandwidth_rejected() {
        assert!(matches!(mean_shift_1d(&[1.0, 2.0], 0.0), Err(EgonetError::DegenerateBandwidth(_))));
        assert!(matches!(mean_shift_1d(&[1.0, 2.0], -1.0), Err(EgonetError::DegenerateBandwidth(_))));
    }

    #[test]
    fn scale_equivariance() {
        let values = vec![1.0, 1.1, 1.2, 8.0, 8.1, 8.3, 40.0, 41.0];
        let base = mean_shift_1d(&values, 1.0).unwrap();
        let c = 7.5;
        let scaled_values: Vec<f64> = values.iter().map(|v| v * c).collect();
        let scaled = mean_shift_1d(&scaled_values, c).unwrap();
        assert_eq!(base.assignments, scaled.assignments);
        for (a, b) in base.centers.iter().zip(&scaled.centers) {
            assert!((a * c - b).abs() < 1e-9 * c);
        }
    }

    #[test]
    fn idempotence_on_separated_modes() {
        let values = vec![1.0, 1.05, 1.1, 10.0, 10.05, 10.1, 55.0, 55.2];
        let first = mean_shift_1d(&values, 0.5).unwrap();
        let second = mean_shift_1d(&first.centers, 0.5).unwrap();
        assert_eq!(second.centers.len(), first.centers.len());
        for (a, b) in first.centers.iter().zip(&second.centers) {
            assert!((a - b).abs() < 1e-9);
        }
    }

    fn freq(alter: &str, f: f64) -> ContactFrequency {
        ContactFrequency { alter_id: alter.into(), interactions: 1, freq_per_year: f, active: f >= 1.0 }
    }

    #[test]
    fn cumulative_circle_assembly() {
        // Clusters of sizes 2/3/10 in descending frequency order.
        let mut freqs = Vec::new();
        for i in 0..2 {
            freqs.push(freq(&format!("hot{i}"), 100.0 + i as f64));
        }
        for i in 0..3 {
            freqs.push(freq(&format!("mid{i}"), 10.0 + i as f64 * 0.1));
        }
        for i in 0..10 {
            freqs.push(freq(&format!("low{i}"), 1.0 + i as f64 * 0.01));
        }
        let refs: Vec<&ContactFrequency> = freqs.iter().collect();
        let values: Vec<f64> = freqs.iter().map(|f| f.freq_per_year.ln()).collect();
        let result = mean_shift_1d(&values, 0.5).unwrap();
        assert_eq!(result.centers.len(), 3);
        let net = assemble_circles("e", &result, &refs);
        assert_eq!(net.cumulative_sizes(), vec![2, 5, 15]);
        assert_eq!(net.active_size, 15);
        // Nesting: every circle contains the previous one.
        for k in 1..net.circles.len() {
            for alter in &net.circles[k - 1].alters {
                assert!(net.circles[k].alters.contains(alter));
            }
        }
        // Min frequency decreases outward.
        assert!(net.circles[0].min_freq > net.circles[1].min_freq);
        assert!(net.circles[1].min_freq > net.circles[2].min_freq);
    }

    #[test]
    fn single_cluster_degenerate_nesting() {
        // All frequencies coincide: no positive pairwise distance, so the
        // bandwidth estimator degenerates and everyone shares one circle.
        let freqs: Vec<ContactFrequency> = (0..7).map(|i| freq(&format!("a{i}"), 5.0)).collect();
        let net = build_ego_network("e", &freqs, &ClusterOptions::default()).unwrap();
        assert_eq!(net.n_circles, 1);
        assert_eq!(net.active_size, 7);
    }

    #[test]
    fn inactive_alters_never_enter_circles() {
        let mut freqs: Vec<ContactFrequency> = (0..5).map(|i| freq(&format!("a{i}"), 4.0 + i as f64 * 0.01)).collect();
        freqs.push(freq("sleeper", 0.4));
        let net = build_ego_network("e", &freqs, &ClusterOptions::default()).unwrap();
        for circle in &net.circles {
            assert!(!circle.alters.contains(&"sleeper".to_string()));
        }
        assert_eq!(net.active_size, 5);
    }

    #[test]
    fn fewer_than_two_active_alters_is_trivial() {
        let freqs = vec![freq("only", 3.0), freq("inactive", 0.2)];
        let net = build_ego_network("e", &freqs, &ClusterOptions::default()).unwrap();
        assert_eq!(net.n_circles, 1);
        assert_eq!(net.circles[0].alters, vec!["only".to_string()]);
    }

    #[test]
    fn egonets_json_round_trip() {
        let freqs: Vec<ContactFrequency> = (0..6).map(|i| freq(&format!("a{i}"), 2.0_f64.powi(i))).collect();
        let net = build_ego_network("e", &freqs, &ClusterOptions::default()).unwrap();
        let mut buf = Vec::new();
        write_egonets_json(&[net.clone()], &mut buf).unwrap();
        let back = read_egonets_json(buf.as_slice()).unwrap();
        assert_eq!(back, vec![net]);
    }
}
