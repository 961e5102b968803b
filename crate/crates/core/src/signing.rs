//! Relationship signing via the golden interaction threshold, plus
//! classifier comparison reports.
//!
//! A directed relationship is negative when strictly more than 17% of its
//! interactions are negative. Neutral interactions count on the positive
//! side of the ratio: they only inflate the denominator. The comparison is
//! done in integer arithmetic (`100 * n_neg > 17 * n_total`) so boundary
//! cases like 1/6 vs 0.17 are exact.

use std::collections::BTreeMap;
use std::io::Write;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::ingest::Timeline;
use crate::sentiment::Polarity;

/// Negative-interaction percentage threshold (1 negative per 5 positive).
pub const GOLDEN_RATIO_PERCENT: u64 = 17;

/// Minimum interaction count for a relationship sign to count as reliable.
pub const MIN_RELIABLE_INTERACTIONS: u64 = 6;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Sign {
    Positive,
    Negative,
}

impl Sign {
    pub fn as_str(self) -> &'static str {
        match self {
            Sign::Positive => "positive",
            Sign::Negative => "negative",
        }
    }
}

#[derive(Debug, Error)]
pub enum SigningError {
    #[error("cannot sign a relationship with zero interactions")]
    NoInteractions,
    #[error("label sets cover different interaction sets")]
    KeyMismatch,
}

/// Sign a relationship from its interaction label counts.
///
/// Negative iff `n_neg / n_total > threshold_percent / 100`, evaluated as
/// `100 * n_neg > threshold_percent * n_total` in integers. With the
/// default threshold, (5,0,1) is positive (1/6 <= 0.17) and (4,0,1) is
/// negative (0.20 > 0.17).
pub fn sign_relationship(n_pos: u64, n_neu: u64, n_neg: u64) -> Result<Sign, SigningError> {
    sign_relationship_with_threshold(n_pos, n_neu, n_neg, GOLDEN_RATIO_PERCENT)
}

pub fn sign_relationship_with_threshold(
    n_pos: u64,
    n_neu: u64,
    n_neg: u64,
    threshold_percent: u64,
) -> Result<Sign, SigningError> {
    let total = n_pos + n_neu + n_neg;
    if total == 0 {
        return Err(SigningError::NoInteractions);
    }
    if 100 * n_neg > threshold_percent * total {
        Ok(Sign::Negative)
    } else {
        Ok(Sign::Positive)
    }
}

/// Aggregated label counts for one directed (ego, alter) pair.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RelationshipProfile {
    pub ego_id: String,
    pub alter_id: String,
    pub n_pos: u64,
    pub n_neu: u64,
    pub n_neg: u64,
    pub first_ts: i64,
    pub last_ts: i64,
}

impl RelationshipProfile {
    pub fn n_total(&self) -> u64 {
        self.n_pos + self.n_neu + self.n_neg
    }

    pub fn neg_fraction(&self) -> f64 {
        self.n_neg as f64 / self.n_total() as f64
    }

    pub fn sign(&self) -> Sign {
        sign_relationship(self.n_pos, self.n_neu, self.n_neg).expect("n_total >= 1 by construction")
    }

    pub fn sign_with(&self, threshold_percent: u64) -> Sign {
        sign_relationship_with_threshold(self.n_pos, self.n_neu, self.n_neg, threshold_percent)
            .expect("n_total >= 1 by construction")
    }

    pub fn reliable(&self) -> bool {
        self.n_total() >= MIN_RELIABLE_INTERACTIONS
    }
}

/// Aggregate per-interaction labels into directed relationship profiles.
///
/// `labels` is aligned with `timelines`: one polarity per record, in record
/// order. Profiles come back sorted by (ego, alter); aggregation is
/// order-free so permuting interactions never changes a profile.
pub fn build_profiles(
    timelines: &[Timeline],
    labels: &[Vec<Polarity>],
) -> Result<Vec<RelationshipProfile>, SigningError> {
    if timelines.len() != labels.len()
        || timelines
            .iter()
            .zip(labels)
            .any(|(tl, ls)| tl.records.len() != ls.len())
    {
        return Err(SigningError::KeyMismatch);
    }
    let mut map: BTreeMap<(String, String), RelationshipProfile> = BTreeMap::new();
    for (tl, ls) in timelines.iter().zip(labels) {
        for (record, &label) in tl.records.iter().zip(ls) {
            let key = (record.ego_id.clone(), record.alter_id.clone());
            let profile = map.entry(key).or_insert_with(|| RelationshipProfile {
                ego_id: record.ego_id.clone(),
                alter_id: record.alter_id.clone(),
                n_pos: 0,
                n_neu: 0,
                n_neg: 0,
                first_ts: record.ts,
                last_ts: record.ts,
            });
            match label {
                Polarity::Positive => profile.n_pos += 1,
                Polarity::Neutral => profile.n_neu += 1,
                Polarity::Negative => profile.n_neg += 1,
            }
            profile.first_ts = profile.first_ts.min(record.ts);
            profile.last_ts = profile.last_ts.max(record.ts);
        }
    }
    Ok(map.into_values().collect())
}

/// Agreement statistics for one ordered pair of labelings.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PairwiseAgreement {
    /// Fraction of interactions with exactly matching labels.
    pub interaction_agreement: f64,
    /// Fraction of reliable relationships (n_total >= 6) with matching
    /// signs. `None` when there are no reliable relationships.
    pub relationship_agreement: Option<f64>,
    /// Q1/Q2/Q3 (nearest-rank) of the negative-interaction percentage the
    /// second labeling assigns to reliable relationships it signs negative
    /// while the first signs them positive.
    pub disagreement_quantiles: Option<[f64; 3]>,
    pub disagreement_count: usize,
}

/// Compare two labelings of the same interaction set.
pub fn compare_classifiers(
    timelines: &[Timeline],
    labels_a: &[Vec<Polarity>],
    labels_b: &[Vec<Polarity>],
) -> Result<PairwiseAgreement, SigningError> {
    let flat_a: Vec<Polarity> = labels_a.iter().flatten().copied().collect();
    let flat_b: Vec<Polarity> = labels_b.iter().flatten().copied().collect();
    if flat_a.len() != flat_b.len() {
        return Err(SigningError::KeyMismatch);
    }
    let profiles_a = build_profiles(timelines, labels_a)?;
    let profiles_b = build_profiles(timelines, labels_b)?;
    // build_profiles keys only on (ego, alter) present in the timelines, so
    // both profile lists share the same key sequence.
    debug_assert_eq!(profiles_a.len(), profiles_b.len());

    let interaction_agreement = if flat_a.is_empty() {
        1.0
    } else {
        flat_a.iter().zip(&flat_b).filter(|(a, b)| a == b).count() as f64 / flat_a.len() as f64
    };

    let mut reliable = 0usize;
    let mut matching = 0usize;
    let mut disagreement_pcts: Vec<f64> = Vec::new();
    for (pa, pb) in profiles_a.iter().zip(&profiles_b) {
        debug_assert_eq!((&pa.ego_id, &pa.alter_id), (&pb.ego_id, &pb.alter_id));
        // n_total is labeling-independent, so reliability is too.
        if !pa.reliable() {
            continue;
        }
        reliable += 1;
        if pa.sign() == pb.sign() {
            matching += 1;
        } else if pa.sign() == Sign::Positive {
            disagreement_pcts.push(pb.neg_fraction() * 100.0);
        }
    }
    let relationship_agreement = (reliable > 0).then(|| matching as f64 / reliable as f64);
    let disagreement_count = disagreement_pcts.len();
    let disagreement_quantiles = if disagreement_pcts.is_empty() {
        None
    } else {
        disagreement_pcts.sort_by(|a, b| a.partial_cmp(b).unwrap());
        Some([
            nearest_rank(&disagreement_pcts, 0.25),
            nearest_rank(&disagreement_pcts, 0.50),
            nearest_rank(&disagreement_pcts, 0.75),
        ])
    };
    Ok(PairwiseAgreement {
        interaction_agreement,
        relationship_agreement,
        disagreement_quantiles,
        disagreement_count,
    })
}

/// Full pairwise report over a set of named labelings: symmetric agreement
/// matrices with unit diagonal plus per-ordered-pair disagreement
/// quantiles.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct AgreementReport {
    pub models: Vec<String>,
    pub interaction_agreement: Vec<Vec<f64>>,
    pub relationship_agreement: Vec<Vec<f64>>,
    /// Entry (i, j): quantiles of model j's negative percentage on
    /// relationships where model i says positive and model j negative.
    pub disagreement_quantiles: Vec<Vec<Option<[f64; 3]>>>,
}

pub fn agreement_report(
    timelines: &[Timeline],
    models: &[(String, Vec<Vec<Polarity>>)],
) -> Result<AgreementReport, SigningError> {
    let n = models.len();
    let mut interaction = vec![vec![1.0; n]; n];
    let mut relationship = vec![vec![1.0; n]; n];
    let mut quantiles = vec![vec![None; n]; n];
    for i in 0..n {
        for j in 0..n {
            if i == j {
                continue;
            }
            let pair = compare_classifiers(timelines, &models[i].1, &models[j].1)?;
            interaction[i][j] = pair.interaction_agreement;
            relationship[i][j] = pair.relationship_agreement.unwrap_or(1.0);
            quantiles[i][j] = pair.disagreement_quantiles;
        }
    }
    Ok(AgreementReport {
        models: models.iter().map(|(name, _)| name.clone()).collect(),
        interaction_agreement: interaction,
        relationship_agreement: relationship,
        disagreement_quantiles: quantiles,
    })
}

/// Nearest-rank quantile of sorted data: the value at rank ceil(q * n),
/// 1-indexed.
pub fn nearest_rank(sorted: &[f64], q: f64) -> f64 {
    assert!(!sorted.is_empty());
    let rank = (q * sorted.len() as f64).ceil() as usize;
    sorted[rank.clamp(1, sorted.len()) - 1]
}

/// Profiles as CSV with derived columns.
pub fn write_profiles_csv<W: Write>(profiles: &[RelationshipProfile], out: W) -> csv::Result<()> {
    write_profiles_csv_with_threshold(profiles, GOLDEN_RATIO_PERCENT, out)
}

/// Like [`write_profiles_csv`] but with the sign column computed at a
/// custom negative-percentage threshold.
pub fn write_profiles_csv_with_threshold<W: Write>(
    profiles: &[RelationshipProfile],
    threshold_percent: u64,
    out: W,
) -> csv::Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record([
        "ego_id", "alter_id", "n_pos", "n_neu", "n_neg", "neg_fraction", "sign", "reliable",
        "first_ts", "last_ts",
    ])?;
    for p in profiles {
        w.write_record([
            p.ego_id.as_str(),
            p.alter_id.as_str(),
            &p.n_pos.to_string(),
            &p.n_neu.to_string(),
            &p.n_neg.to_string(),
            &format!("{:.6}", p.neg_fraction()),
            p.sign_with(threshold_percent).as_str(),
            &p.reliable().to_string(),
            &p.first_ts.to_string(),
            &p.last_ts.to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

/// Parse profiles back from the CSV emitted by [`write_profiles_csv`].
pub fn read_profiles_csv<R: std::io::Read>(input: R) -> Result<Vec<RelationshipProfile>, csv::Error> {
    let mut reader = csv::ReaderBuilder::new().comment(Some(b'#')).from_reader(input);
    let mut out = Vec::new();
    for row in reader.records() {
        let row = row?;
        out.push(RelationshipProfile {
            ego_id: row[0].to_string(),
            alter_id: row[1].to_string(),
            n_pos: row[2].parse().unwrap_or(0),
            n_neu: row[3].parse().unwrap_or(0),
            n_neg: row[4].parse().unwrap_or(0),
            first_ts: row[8].parse().unwrap_or(0),
            last_ts: row[9].parse().unwrap_or(0),
        });
    }
    Ok(out)
}
