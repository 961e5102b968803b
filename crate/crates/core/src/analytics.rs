//! Dataset-level reports: full-vs-active negativity, per-circle signed
//! statistics, negativity metrics with quantile binning, correlations and
//! timeline composition.
//!
//! All reductions iterate egos in sorted-id order so reports are
//! deterministic regardless of how the inputs were produced.

use std::collections::{BTreeMap, BTreeSet};
use std::io::Write;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::egonet::EgoNetwork;
use crate::ingest::{Kind, Timeline};
use crate::signing::{nearest_rank, RelationshipProfile, Sign, GOLDEN_RATIO_PERCENT};
use crate::stats::{
    five_number_summary, pearson_one_tailed_negative, proportion_ci_half_width, welch_t_test,
    FiveNumberSummary, StatsError, WelchResult,
};

#[derive(Debug, Error)]
pub enum AnalyticsError {
    #[error("no relationships to report on")]
    EmptyDataset,
    #[error("no egos with exactly 5 circles")]
    NoFiveCircleEgos,
    #[error("ego {0} has an empty active network")]
    EmptyActiveNetwork(String),
    #[error("binning needs at least {needed} egos, got {got}")]
    TooFewEgos { needed: usize, got: usize },
    #[error(transparent)]
    Stats(#[from] StatsError),
}

/// Negative-relationship shares over the full network and restricted to
/// active alters, with 95% normal-approximation confidence half-widths.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct NegativityPair {
    pub full_pct: f64,
    pub full_ci_pct: f64,
    pub full_count: usize,
    pub active_pct: f64,
    pub active_ci_pct: f64,
    pub active_count: usize,
}

pub fn negativity_full_vs_active(
    profiles: &[RelationshipProfile],
    egonets: &[EgoNetwork],
) -> Result<NegativityPair, AnalyticsError> {
    negativity_full_vs_active_with_threshold(profiles, egonets, GOLDEN_RATIO_PERCENT)
}

pub fn negativity_full_vs_active_with_threshold(
    profiles: &[RelationshipProfile],
    egonets: &[EgoNetwork],
    threshold_percent: u64,
) -> Result<NegativityPair, AnalyticsError> {
    if profiles.is_empty() {
        return Err(AnalyticsError::EmptyDataset);
    }
    let active = active_membership(egonets);
    let mut full_neg = 0usize;
    let mut active_total = 0usize;
    let mut active_neg = 0usize;
    for p in profiles {
        let neg = p.sign_with(threshold_percent) == Sign::Negative;
        if neg {
            full_neg += 1;
        }
        if active
            .get(p.ego_id.as_str())
            .is_some_and(|alters| alters.contains(p.alter_id.as_str()))
        {
            active_total += 1;
            if neg {
                active_neg += 1;
            }
        }
    }
    let full_p = full_neg as f64 / profiles.len() as f64;
    let active_p = if active_total == 0 { 0.0 } else { active_neg as f64 / active_total as f64 };
    Ok(NegativityPair {
        full_pct: 100.0 * full_p,
        full_ci_pct: 100.0 * proportion_ci_half_width(full_p, profiles.len()),
        full_count: profiles.len(),
        active_pct: 100.0 * active_p,
        active_ci_pct: 100.0 * proportion_ci_half_width(active_p, active_total),
        active_count: active_total,
    })
}

/// Active alters per ego: the outermost circle's member set.
fn active_membership(egonets: &[EgoNetwork]) -> BTreeMap<&str, BTreeSet<&str>> {
    egonets
        .iter()
        .map(|net| {
            let alters = net
                .circles
                .last()
                .map(|c| c.alters.iter().map(String::as_str).collect())
                .unwrap_or_default();
            (net.ego_id.as_str(), alters)
        })
        .collect()
}

/// Per-circle means over egos with exactly five circles.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CircleReport {
    pub ego_count: usize,
    /// Mean cumulative circle size, innermost first.
    pub mean_sizes: [f64; 5],
    /// Mean interactions per alter at each circle.
    pub mean_interactions_per_alter: [f64; 5],
    /// Mean cumulative negative-relationship count at each circle.
    pub mean_neg_counts: [f64; 5],
    /// Mean negative percentage at each circle.
    pub mean_neg_pcts: [f64; 5],
    /// size(k+1) / size(k) on the mean sizes.
    pub size_ratios: [f64; 4],
    /// negcount(k+1) / negcount(k) on the mean counts.
    pub neg_ratios: [f64; 4],
}

pub fn circle_report(
    egonets: &[EgoNetwork],
    profiles: &[RelationshipProfile],
) -> Result<CircleReport, AnalyticsError> {
    circle_report_with_threshold(egonets, profiles, GOLDEN_RATIO_PERCENT)
}

pub fn circle_report_with_threshold(
    egonets: &[EgoNetwork],
    profiles: &[RelationshipProfile],
    threshold_percent: u64,
) -> Result<CircleReport, AnalyticsError> {
    let index = profile_index(profiles);
    let mut ego_count = 0usize;
    let mut size_sums = [0.0; 5];
    let mut ipa_sums = [0.0; 5];
    let mut neg_sums = [0.0; 5];
    let mut pct_sums = [0.0; 5];
    for net in egonets.iter().filter(|n| n.n_circles == 5) {
        ego_count += 1;
        for (k, circle) in net.circles.iter().enumerate() {
            let mut interactions = 0u64;
            let mut negatives = 0usize;
            for alter in &circle.alters {
                if let Some(p) = index.get(&(net.ego_id.as_str(), alter.as_str())) {
                    interactions += p.n_total();
                    if p.sign_with(threshold_percent) == Sign::Negative {
                        negatives += 1;
                    }
                }
            }
            size_sums[k] += circle.size as f64;
            ipa_sums[k] += interactions as f64 / circle.size as f64;
            neg_sums[k] += negatives as f64;
            pct_sums[k] += 100.0 * negatives as f64 / circle.size as f64;
        }
    }
    if ego_count == 0 {
        return Err(AnalyticsError::NoFiveCircleEgos);
    }
    let n = ego_count as f64;
    let mean = |sums: [f64; 5]| sums.map(|s| s / n);
    let mean_sizes = mean(size_sums);
    let mean_neg_counts = mean(neg_sums);
    let ratio = |xs: &[f64; 5]| {
        let mut out = [f64::NAN; 4];
        for k in 0..4 {
            out[k] = xs[k + 1] / xs[k];
        }
        out
    };
    Ok(CircleReport {
        ego_count,
        size_ratios: ratio(&mean_sizes),
        neg_ratios: ratio(&mean_neg_counts),
        mean_sizes,
        mean_interactions_per_alter: mean(ipa_sums),
        mean_neg_counts,
        mean_neg_pcts: mean(pct_sums),
    })
}

fn profile_index(profiles: &[RelationshipProfile]) -> BTreeMap<(&str, &str), &RelationshipProfile> {
    profiles
        .iter()
        .map(|p| ((p.ego_id.as_str(), p.alter_id.as_str()), p))
        .collect()
}

/// Mean number of circles across all egos.
pub fn mean_circle_count(egonets: &[EgoNetwork]) -> Option<f64> {
    if egonets.is_empty() {
        return None;
    }
    Some(egonets.iter().map(|n| n.n_circles as f64).sum::<f64>() / egonets.len() as f64)
}

/// Per-ego negativity measures over the active network.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NegativityVector {
    pub ego_id: String,
    /// Share of active alters whose relationship is negative.
    pub l1: f64,
    /// Share of interactions with active alters that are negative.
    pub l2: f64,
    /// Share of interactions belonging to negative relationships.
    pub l3: f64,
    pub active_size: usize,
    pub total_interactions: u64,
}

pub fn negativity_metrics(
    net: &EgoNetwork,
    profiles: &[RelationshipProfile],
) -> Result<NegativityVector, AnalyticsError> {
    negativity_metrics_with_threshold(net, profiles, GOLDEN_RATIO_PERCENT)
}

pub fn negativity_metrics_with_threshold(
    net: &EgoNetwork,
    profiles: &[RelationshipProfile],
    threshold_percent: u64,
) -> Result<NegativityVector, AnalyticsError> {
    let index = profile_index(profiles);
    let active: Vec<&RelationshipProfile> = net
        .circles
        .last()
        .map(|c| {
            c.alters
                .iter()
                .filter_map(|a| index.get(&(net.ego_id.as_str(), a.as_str())).copied())
                .collect()
        })
        .unwrap_or_default();
    let total: u64 = active.iter().map(|p| p.n_total()).sum();
    if active.is_empty() || total == 0 {
        return Err(AnalyticsError::EmptyActiveNetwork(net.ego_id.clone()));
    }
    let neg_alters = active
        .iter()
        .filter(|p| p.sign_with(threshold_percent) == Sign::Negative)
        .count();
    let neg_interactions: u64 = active.iter().map(|p| p.n_neg).sum();
    let interactions_in_neg: u64 = active
        .iter()
        .filter(|p| p.sign_with(threshold_percent) == Sign::Negative)
        .map(|p| p.n_total())
        .sum();
    Ok(NegativityVector {
        ego_id: net.ego_id.clone(),
        l1: neg_alters as f64 / active.len() as f64,
        l2: neg_interactions as f64 / total as f64,
        l3: interactions_in_neg as f64 / total as f64,
        active_size: active.len(),
        total_interactions: total,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Metric {
    L1,
    L2,
    L3,
}

impl Metric {
    pub fn of(self, v: &NegativityVector) -> f64 {
        match self {
            Metric::L1 => v.l1,
            Metric::L2 => v.l2,
            Metric::L3 => v.l3,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Metric::L1 => "l1",
            Metric::L2 => "l2",
            Metric::L3 => "l3",
        }
    }
}

impl std::str::FromStr for Metric {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "l1" => Ok(Metric::L1),
            "l2" => Ok(Metric::L2),
            "l3" => Ok(Metric::L3),
            other => Err(format!("unknown metric {other:?} (expected l1, l2 or l3)")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Target {
    ActiveSize,
    TotalInteractions,
}

impl Target {
    pub fn of(self, v: &NegativityVector) -> f64 {
        match self {
            Target::ActiveSize => v.active_size as f64,
            Target::TotalInteractions => v.total_interactions as f64,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Target::ActiveSize => "active_size",
            Target::TotalInteractions => "total_interactions",
        }
    }
}

impl std::str::FromStr for Target {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "active_size" => Ok(Target::ActiveSize),
            "total_interactions" => Ok(Target::TotalInteractions),
            other => Err(format!(
                "unknown target {other:?} (expected active_size or total_interactions)"
            )),
        }
    }
}

/// Summary of one quantile bin.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct BinSummary {
    pub count: usize,
    /// Metric range covered by this bin (inclusive of observed values).
    pub metric_min: f64,
    pub metric_max: f64,
    pub active_size: Option<FiveNumberSummary>,
    pub total_interactions: Option<FiveNumberSummary>,
}

/// Welch test between one pair of bins on one target variable.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct BinPairTest {
    pub bin_a: usize,
    pub bin_b: usize,
    pub target: Target,
    /// None when either bin is too small to test.
    pub welch: Option<WelchResult>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct BinReport {
    pub metric: Metric,
    /// Nearest-rank quantile cut points at 25/50/75%.
    pub edges: [f64; 3],
    pub bins: Vec<BinSummary>,
    pub tests: Vec<BinPairTest>,
}

/// Split egos into four quantile bins on a negativity metric and run
/// pairwise Welch tests on active size and interaction volume.
///
/// Egos whose metric value equals a cut point go to the lower bin, so bins
/// partition the egos deterministically even with heavy ties.
pub fn bin_and_test(vectors: &[NegativityVector], metric: Metric) -> Result<BinReport, AnalyticsError> {
    if vectors.len() < 8 {
        return Err(AnalyticsError::TooFewEgos { needed: 8, got: vectors.len() });
    }
    let mut sorted_metric: Vec<f64> = vectors.iter().map(|v| metric.of(v)).collect();
    sorted_metric.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let edges = [
        nearest_rank(&sorted_metric, 0.25),
        nearest_rank(&sorted_metric, 0.50),
        nearest_rank(&sorted_metric, 0.75),
    ];
    let bin_of = |value: f64| -> usize {
        if value <= edges[0] {
            0
        } else if value <= edges[1] {
            1
        } else if value <= edges[2] {
            2
        } else {
            3
        }
    };
    let mut members: [Vec<&NegativityVector>; 4] = Default::default();
    for v in vectors {
        members[bin_of(metric.of(v))].push(v);
    }
    let bins = members
        .iter()
        .map(|bin| {
            let values: Vec<f64> = bin.iter().map(|v| metric.of(v)).collect();
            let sizes: Vec<f64> = bin.iter().map(|v| v.active_size as f64).collect();
            let volumes: Vec<f64> = bin.iter().map(|v| v.total_interactions as f64).collect();
            BinSummary {
                count: bin.len(),
                metric_min: values.iter().copied().fold(f64::INFINITY, f64::min),
                metric_max: values.iter().copied().fold(f64::NEG_INFINITY, f64::max),
                active_size: five_number_summary(&sizes).ok(),
                total_interactions: five_number_summary(&volumes).ok(),
            }
        })
        .collect();
    let mut tests = Vec::new();
    for target in [Target::ActiveSize, Target::TotalInteractions] {
        for a in 0..4 {
            for b in (a + 1)..4 {
                let xs: Vec<f64> = members[a].iter().map(|v| target.of(v)).collect();
                let ys: Vec<f64> = members[b].iter().map(|v| target.of(v)).collect();
                let welch = welch_t_test(&xs, &ys).ok();
                tests.push(BinPairTest { bin_a: a + 1, bin_b: b + 1, target, welch });
            }
        }
    }
    Ok(BinReport { metric, edges, bins, tests })
}

/// Pearson correlation between a negativity metric and a size/volume
/// target, with the one-tailed p-value for the hypothesis that the
/// correlation is negative.
pub fn correlate(
    vectors: &[NegativityVector],
    metric: Metric,
    target: Target,
) -> Result<(f64, f64), AnalyticsError> {
    let xs: Vec<f64> = vectors.iter().map(|v| metric.of(v)).collect();
    let ys: Vec<f64> = vectors.iter().map(|v| target.of(v)).collect();
    Ok(pearson_one_tailed_negative(&xs, &ys)?)
}

/// Timeline composition averaged over egos.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct CompositionReport {
    pub ego_count: usize,
    pub mean_tweets: f64,
    /// Mean per-ego percentage of tweets that are interactions.
    pub pct_interactions: f64,
    pub pct_mentions: f64,
    pub pct_retweets: f64,
    pub pct_replies: f64,
    pub pct_quotes: f64,
    pub mean_timeline_days: f64,
}

pub fn composition_report(timelines: &[Timeline]) -> Result<CompositionReport, AnalyticsError> {
    if timelines.is_empty() {
        return Err(AnalyticsError::EmptyDataset);
    }
    let mut tweets = 0.0;
    let mut pct = [0.0f64; 5]; // interactions, mentions, retweets, replies, quotes
    let mut days = 0.0;
    for tl in timelines {
        let total = tl.total_tweets() as f64;
        if total > 0.0 {
            let count = |kind: Kind| tl.records.iter().filter(|r| r.kind == kind).count() as f64;
            pct[0] += 100.0 * tl.records.len() as f64 / total;
            pct[1] += 100.0 * count(Kind::Mention) / total;
            pct[2] += 100.0 * count(Kind::Retweet) / total;
            pct[3] += 100.0 * count(Kind::Reply) / total;
            pct[4] += 100.0 * count(Kind::QuoteRetweet) / total;
        }
        tweets += total;
        days += tl.span_seconds() as f64 / 86_400.0;
    }
    let n = timelines.len() as f64;
    Ok(CompositionReport {
        ego_count: timelines.len(),
        mean_tweets: tweets / n,
        pct_interactions: pct[0] / n,
        pct_mentions: pct[1] / n,
        pct_retweets: pct[2] / n,
        pct_replies: pct[3] / n,
        pct_quotes: pct[4] / n,
        mean_timeline_days: days / n,
    })
}

/// Negativity vectors as CSV, sorted by ego id.
pub fn write_vectors_csv<W: Write>(vectors: &[NegativityVector], out: W) -> csv::Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["ego_id", "l1", "l2", "l3", "active_size", "total_interactions"])?;
    let mut sorted: Vec<&NegativityVector> = vectors.iter().collect();
    sorted.sort_by(|a, b| a.ego_id.cmp(&b.ego_id));
    for v in sorted {
        w.write_record([
            v.ego_id.as_str(),
            &format!("{:.12}", v.l1),
            &format!("{:.12}", v.l2),
            &format!("{:.12}", v.l3),
            &v.active_size.to_string(),
            &v.total_interactions.to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

/// Circle report as CSV: one row per circle plus a ratios row.
pub fn write_circle_report_csv<W: Write>(report: &CircleReport, out: W) -> csv::Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record([
        "circle", "mean_size", "mean_interactions_per_alter", "mean_neg_count", "mean_neg_pct",
        "size_ratio", "neg_ratio",
    ])?;
    for k in 0..5 {
        let (size_ratio, neg_ratio) = if k < 4 {
            (format!("{:.6}", report.size_ratios[k]), format!("{:.6}", report.neg_ratios[k]))
        } else {
            (String::new(), String::new())
        };
        w.write_record([
            &(k + 1).to_string(),
            &format!("{:.6}", report.mean_sizes[k]),
            &format!("{:.6}", report.mean_interactions_per_alter[k]),
            &format!("{:.6}", report.mean_neg_counts[k]),
            &format!("{:.6}", report.mean_neg_pcts[k]),
            &size_ratio,
            &neg_ratio,
        ])?;
    }
    w.flush()?;
    Ok(())
}

/// Bin report as CSV: bin summaries then pairwise tests.
pub fn write_bin_report_csv<W: Write>(report: &BinReport, out: W) -> csv::Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record([
        "section", "metric", "bin", "count", "metric_min", "metric_max", "target", "mean", "q1",
        "median", "q3", "whisker_low", "whisker_high", "bin_b", "t", "df", "p",
    ])?;
    for (i, bin) in report.bins.iter().enumerate() {
        for (target, summary) in [
            (Target::ActiveSize, &bin.active_size),
            (Target::TotalInteractions, &bin.total_interactions),
        ] {
            let s = match summary {
                Some(s) => s,
                None => continue,
            };
            w.write_record([
                "bin",
                report.metric.as_str(),
                &(i + 1).to_string(),
                &bin.count.to_string(),
                &format!("{:.12}", bin.metric_min),
                &format!("{:.12}", bin.metric_max),
                target.as_str(),
                &format!("{:.6}", s.mean),
                &format!("{:.6}", s.q1),
                &format!("{:.6}", s.median),
                &format!("{:.6}", s.q3),
                &format!("{:.6}", s.whisker_low),
                &format!("{:.6}", s.whisker_high),
                "",
                "",
                "",
                "",
            ])?;
        }
    }
    for test in &report.tests {
        let (t, df, p) = match &test.welch {
            Some(r) => (
                format!("{:.6}", r.t),
                format!("{:.6}", r.df),
                format!("{:.6e}", r.p_two_tailed),
            ),
            None => (String::new(), String::new(), String::new()),
        };
        w.write_record([
            "test",
            report.metric.as_str(),
            &test.bin_a.to_string(),
            "",
            "",
            "",
            test.target.as_str(),
            "",
            "",
            "",
            "",
            "",
            "",
            &test.bin_b.to_string(),
            &t,
            &df,
            &p,
        ])?;
    }
    w.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::egonet::Circle;
    use approx::assert_relative_eq;

    fn profile(ego: &str, alter: &str, n_pos: u64, n_neg: u64) -> RelationshipProfile {
        RelationshipProfile {
            ego_id: ego.into(),
            alter_id: alter.into(),
            n_pos,
            n_neu: 0,
            n_neg,
            first_ts: 0,
            last_ts: 0,
        }
    }

    fn net(ego: &str, circle_alters: &[&[&str]]) -> EgoNetwork {
        let mut cumulative: Vec<String> = Vec::new();
        let circles: Vec<Circle> = circle_alters
            .iter()
            .map(|alters| {
                cumulative.extend(alters.iter().map(|s| s.to_string()));
                cumulative.sort();
                Circle { size: cumulative.len(), min_freq: 1.0, alters: cumulative.clone() }
            })
            .collect();
        let active_size = circles.last().map_or(0, |c| c.size);
        EgoNetwork { ego_id: ego.into(), n_circles: circles.len(), circles, active_size }
    }

    #[test]
    fn full_vs_active_counting() {
        // 20 relationships, 4 negative; active subset of 5 holds 3 of them.
        let mut profiles = Vec::new();
        for i in 0..16 {
            profiles.push(profile("e", &format!("p{i}"), 10, 0));
        }
        for i in 0..4 {
            profiles.push(profile("e", &format!("n{i}"), 5, 5));
        }
        let nets = vec![net("e", &[&["n0", "n1", "n2", "p0", "p1"]])];
        let pair = negativity_full_vs_active(&profiles, &nets).unwrap();
        assert_relative_eq!(pair.full_pct, 20.0, epsilon = 1e-12);
        assert_relative_eq!(pair.active_pct, 60.0, epsilon = 1e-12);
        assert_eq!((pair.full_count, pair.active_count), (20, 5));
    }

    #[test]
    fn all_positive_gives_zero_pair() {
        let profiles = vec![profile("e", "a", 5, 0), profile("e", "b", 3, 0)];
        let nets = vec![net("e", &[&["a", "b"]])];
        let pair = negativity_full_vs_active(&profiles, &nets).unwrap();
        assert_eq!(pair.full_pct, 0.0);
        assert_eq!(pair.active_pct, 0.0);
    }

    #[test]
    fn circle_report_single_ego_ratios() {
        // Cumulative sizes 2/5/15/50/150.
        let layer_sizes = [2usize, 3, 10, 35, 100];
        let mut profiles = Vec::new();
        let mut layers: Vec<Vec<String>> = Vec::new();
        let mut id = 0;
        for n in layer_sizes {
            let mut layer = Vec::new();
            for _ in 0..n {
                let alter = format!("a{id:03}");
                id += 1;
                profiles.push(profile("e", &alter, 4, 0));
                layer.push(alter);
            }
            layers.push(layer);
        }
        let layer_refs: Vec<Vec<&str>> = layers
            .iter()
            .map(|l| l.iter().map(String::as_str).collect())
            .collect();
        let layer_slices: Vec<&[&str]> = layer_refs.iter().map(Vec::as_slice).collect();
        let nets = vec![net("e", &layer_slices)];
        let report = circle_report(&nets, &profiles).unwrap();
        assert_eq!(report.mean_sizes, [2.0, 5.0, 15.0, 50.0, 150.0]);
        let expected = [2.5, 3.0, 15.0 / 5.0, 50.0 / 15.0];
        assert_relative_eq!(report.size_ratios[0], expected[0], epsilon = 1e-12);
        assert_relative_eq!(report.size_ratios[1], expected[1], epsilon = 1e-12);
        assert_relative_eq!(report.size_ratios[2], 10.0 / 3.0, epsilon = 1e-12);
        assert_relative_eq!(report.size_ratios[3], 3.0, epsilon = 1e-12);
        // Every relationship has 4 interactions.
        for v in report.mean_interactions_per_alter {
            assert_relative_eq!(v, 4.0, epsilon = 1e-12);
        }
    }

    #[test]
    fn circle_report_requires_five_circles() {
        let nets = vec![net("e", &[&["a"], &["b"]])];
        let profiles = vec![profile("e", "a", 2, 0), profile("e", "b", 2, 0)];
        assert!(matches!(circle_report(&nets, &profiles), Err(AnalyticsError::NoFiveCircleEgos)));
    }

    #[test]
    fn negativity_metrics_trivial_cases() {
        // 10 alters, 2 negative, one interaction each -> l1 = 0.2.
        let mut profiles = Vec::new();
        let mut alters = Vec::new();
        for i in 0..8 {
            let a = format!("p{i}");
            profiles.push(profile("e", &a, 1, 0));
            alters.push(a);
        }
        for i in 0..2 {
            let a = format!("n{i}");
            profiles.push(profile("e", &a, 0, 1));
            alters.push(a);
        }
        let alter_refs: Vec<&str> = alters.iter().map(String::as_str).collect();
        let nets = net("e", &[&alter_refs]);
        let v = negativity_metrics(&nets, &profiles).unwrap();
        assert_relative_eq!(v.l1, 0.2, epsilon = 1e-15);
        assert_relative_eq!(v.l2, 0.2, epsilon = 1e-15);
        assert_relative_eq!(v.l3, 0.2, epsilon = 1e-15);
        assert_eq!(v.active_size, 10);
        assert_eq!(v.total_interactions, 10);
    }

    #[test]
    fn l3_counts_interactions_in_negative_relationships() {
        // One negative alter with 8 interactions, one positive with 12:
        // l3 = 8/20.
        let profiles = vec![profile("e", "neg", 4, 4), profile("e", "pos", 12, 0)];
        let nets = net("e", &[&["neg", "pos"]]);
        let v = negativity_metrics(&nets, &profiles).unwrap();
        assert_relative_eq!(v.l3, 0.4, epsilon = 1e-15);
        assert_relative_eq!(v.l2, 0.2, epsilon = 1e-15);
        assert_relative_eq!(v.l1, 0.5, epsilon = 1e-15);
    }

    #[test]
    fn l_metrics_coupled_zero_and_one() {
        // All-positive ego: l1 = l2 = l3 = 0.
        let profiles = vec![profile("e", "a", 6, 0), profile("e", "b", 3, 0)];
        let v = negativity_metrics(&net("e", &[&["a", "b"]]), &profiles).unwrap();
        assert_eq!((v.l1, v.l2, v.l3), (0.0, 0.0, 0.0));
        // All-negative ego: every relationship crosses the threshold.
        let profiles = vec![profile("e", "a", 0, 6), profile("e", "b", 0, 3)];
        let v = negativity_metrics(&net("e", &[&["a", "b"]]), &profiles).unwrap();
        assert_eq!((v.l1, v.l2, v.l3), (1.0, 1.0, 1.0));
    }

    #[test]
    fn empty_active_network_is_an_error() {
        let profiles = vec![profile("e", "a", 3, 0)];
        let empty = EgoNetwork { ego_id: "e".into(), n_circles: 0, circles: vec![], active_size: 0 };
        assert!(matches!(
            negativity_metrics(&empty, &profiles),
            Err(AnalyticsError::EmptyActiveNetwork(_))
        ));
    }

    fn vector(ego: &str, l: f64, size: usize, volume: u64) -> NegativityVector {
        NegativityVector {
            ego_id: ego.into(),
            l1: l,
            l2: l,
            l3: l,
            active_size: size,
            total_interactions: volume,
        }
    }

    #[test]
    fn eight_distinct_values_quarter_evenly() {
        let vectors: Vec<NegativityVector> = (0..8)
            .map(|i| vector(&format!("e{i}"), i as f64 / 8.0, 10 + i, 100))
            .collect();
        let report = bin_and_test(&vectors, Metric::L1).unwrap();
        for bin in &report.bins {
            assert_eq!(bin.count, 2);
        }
    }

    #[test]
    fn ties_go_to_the_lower_bin() {
        // Metric value exactly on the first edge stays in bin 1.
        let mut vectors: Vec<NegativityVector> = (0..8)
            .map(|i| vector(&format!("e{i}"), i as f64 / 8.0, 10, 100))
            .collect();
        let edge = {
            let mut m: Vec<f64> = vectors.iter().map(|v| v.l1).collect();
            m.sort_by(|a, b| a.partial_cmp(b).unwrap());
            nearest_rank(&m, 0.25)
        };
        vectors.push(vector("tie", edge, 10, 100));
        let report = bin_and_test(&vectors, Metric::L1).unwrap();
        // The new ego lands at or below the recomputed first edge.
        assert!(edge <= report.edges[0]);
        let total: usize = report.bins.iter().map(|b| b.count).sum();
        assert_eq!(total, 9);
    }

    #[test]
    fn identical_bins_test_null() {
        let vectors: Vec<NegativityVector> = (0..8)
            .map(|i| vector(&format!("e{i}"), i as f64 / 8.0, 10, 100))
            .collect();
        let report = bin_and_test(&vectors, Metric::L1).unwrap();
        for test in report.tests.iter().filter(|t| t.target == Target::ActiveSize) {
            let welch = test.welch.as_ref().unwrap();
            assert_eq!(welch.t, 0.0);
            assert_eq!(welch.p_two_tailed, 1.0);
        }
    }

    #[test]
    fn separated_bins_reject_null() {
        // Bin 1 holds sizes 10, bin 4 sizes 20; Welch by hand: means 10/20,
        // variances 0 -> degenerate branch gives p = 0.
        let mut vectors = Vec::new();
        for i in 0..4 {
            vectors.push(vector(&format!("lo{i}"), 0.01 * i as f64, 10, 100));
        }
        for i in 0..4 {
            vectors.push(vector(&format!("hi{i}"), 0.8 + 0.01 * i as f64, 20, 100));
        }
        let report = bin_and_test(&vectors, Metric::L1).unwrap();
        let test = report
            .tests
            .iter()
            .find(|t| t.bin_a == 1 && t.bin_b == 4 && t.target == Target::ActiveSize)
            .unwrap();
        let welch = test.welch.as_ref().unwrap();
        assert!(welch.p_two_tailed < 0.01);
    }

    #[test]
    fn too_few_egos_rejected() {
        let vectors: Vec<NegativityVector> =
            (0..7).map(|i| vector(&format!("e{i}"), i as f64, 10, 100)).collect();
        assert!(matches!(
            bin_and_test(&vectors, Metric::L1),
            Err(AnalyticsError::TooFewEgos { needed: 8, got: 7 })
        ));
    }

    #[test]
    fn correlate_directions() {
        let vectors: Vec<NegativityVector> = (0..10)
            .map(|i| vector(&format!("e{i}"), i as f64 / 10.0, 10 + i, (100 - 5 * i) as u64))
            .collect();
        let (r, p) = correlate(&vectors, Metric::L1, Target::ActiveSize).unwrap();
        assert_relative_eq!(r, 1.0, epsilon = 1e-12);
        assert!(p > 0.999);
        let (r, p) = correlate(&vectors, Metric::L1, Target::TotalInteractions).unwrap();
        assert_relative_eq!(r, -1.0, epsilon = 1e-12);
        assert!(p < 1e-9);
    }

    #[test]
    fn composition_percentages() {
        use crate::ingest::{InteractionRecord, Kind};
        let records: Vec<InteractionRecord> = (0..65)
            .map(|i| InteractionRecord {
                ego_id: "e".into(),
                alter_id: "a".into(),
                kind: if i < 30 { Kind::Reply } else { Kind::Mention },
                ts: i * 86_400,
                text: Some("hello".into()),
                label: None,
            })
            .collect();
        let tl = Timeline { ego_id: "e".into(), records, non_interaction_tweets: 35 };
        let report = composition_report(&[tl]).unwrap();
        assert_relative_eq!(report.pct_interactions, 65.0, epsilon = 1e-12);
        assert_relative_eq!(report.pct_replies, 30.0, epsilon = 1e-12);
        assert_relative_eq!(report.pct_mentions, 35.0, epsilon = 1e-12);
        assert_relative_eq!(report.pct_retweets, 0.0, epsilon = 1e-12);
        assert_relative_eq!(report.mean_tweets, 100.0, epsilon = 1e-12);
        assert_relative_eq!(report.mean_timeline_days, 64.0, epsilon = 1e-12);
    }

    #[test]
    fn vectors_csv_is_sorted_and_stable() {
        let vectors = vec![vector("b", 0.5, 10, 100), vector("a", 0.25, 5, 50)];
        let mut buf = Vec::new();
        write_vectors_csv(&vectors, &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert!(lines[1].starts_with("a,"));
        assert!(lines[2].starts_with("b,"));
    }
}
