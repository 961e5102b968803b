//! Deterministic synthetic corpus generator. Prints a JSON Lines
//! interaction log to stdout; the committed fixture is the captured
//! output.
//!
//! Layout: 30 egos in 3 communities of 10. Within a community every ego
//! addresses every other with friendly texts at rank-dependent intensity
//! (so contact frequencies spread into bands). Each ego also addresses a
//! few egos of the next community with hostile texts crossing the
//! negative-relationship threshold, which plants weakly balanced triangle
//! structure: all-positive triangles inside communities, mostly-negative
//! triangles across them, and almost no two-positive triangles. Five
//! cross-community pairs get a positive reverse direction so the two
//! directed signs disagree on exactly those edges.

use rand::prelude::*;
use rand_chacha::ChaCha8Rng;

use sen_core::ingest::{write_timelines, InteractionRecord, Kind, Timeline};
use sen_core::sentiment::Polarity;

const EGOS_PER_COMMUNITY: usize = 10;
const COMMUNITIES: usize = 3;
const START_TS: i64 = 1_577_836_800; // 2020-01-01T00:00:00Z
const SPAN: i64 = 2 * 365 * 86_400; // two years

const POSITIVE_TEXTS: &[&str] = &[
    "love this great work my friend",
    "so good you are brilliant",
    "wonderful thanks for the support :)",
    "this is amazing truly excellent",
    "happy to see you win again",
    "very kind and generous of you",
    "what a fantastic victory congratulations",
    "really enjoy your wise words",
];

const NEGATIVE_TEXTS: &[&str] = &[
    "you are awful and terrible",
    "this is a disgusting disaster",
    "what a pathetic stupid take",
    "absolutely horrible you liar",
    "worst nonsense i ever read :(",
    "hateful toxic garbage stop it",
];

const NEUTRAL_TEXTS: &[&str] = &[
    "posting the schedule for tomorrow",
    "the meeting moved to thursday",
    "sharing the document again",
];

fn ego_name(i: usize) -> String {
    format!("u{i:02}")
}

struct Gen {
    rng: ChaCha8Rng,
    records: Vec<InteractionRecord>,
}

impl Gen {
    fn push(&mut self, ego: usize, alter: usize, kind: Kind, ts: i64, text: Option<&str>) {
        self.records.push(InteractionRecord {
            ego_id: ego_name(ego),
            alter_id: ego_name(alter),
            kind,
            ts,
            text: text.map(str::to_owned),
            label: None,
        });
    }

    /// `n` interactions spread evenly over the two years with jitter.
    fn timestamps(&mut self, n: usize) -> Vec<i64> {
        let step = SPAN / n as i64;
        (0..n)
            .map(|k| START_TS + k as i64 * step + self.rng.gen_range(0..step / 2))
            .collect()
    }
}

fn main() {
    let mut g = Gen { rng: ChaCha8Rng::seed_from_u64(20_240_101), records: Vec::new() };

    let n = EGOS_PER_COMMUNITY * COMMUNITIES;
    for ego in 0..n {
        let community = ego / EGOS_PER_COMMUNITY;
        let base = community * EGOS_PER_COMMUNITY;

        // Friendly intra-community relationships, intensity by rank.
        let mut rank = 0usize;
        for alter in base..base + EGOS_PER_COMMUNITY {
            if alter == ego {
                continue;
            }
            let count = 48 - 3 * rank; // 48 down to 24 interactions
            rank += 1;
            let times = g.timestamps(count);
            for (k, ts) in times.into_iter().enumerate() {
                if k % 7 == 3 {
                    g.push(ego, alter, Kind::Retweet, ts, None);
                } else {
                    let kind = if k % 3 == 0 { Kind::Mention } else { Kind::Reply };
                    let text = POSITIVE_TEXTS[g.rng.gen_range(0..POSITIVE_TEXTS.len())];
                    g.push(ego, alter, kind, ts, Some(text));
                }
            }
        }

        // Hostile relationships towards the next community; 5 of 12
        // interactions negative (41% > 17% threshold).
        let hostile_count = 2 + ego % 5;
        let next = (community + 1) % COMMUNITIES;
        for j in 0..hostile_count {
            let alter = next * EGOS_PER_COMMUNITY + (ego + j) % EGOS_PER_COMMUNITY;
            let times = g.timestamps(12);
            for (k, ts) in times.into_iter().enumerate() {
                let text = if k % 12 < 5 {
                    NEGATIVE_TEXTS[g.rng.gen_range(0..NEGATIVE_TEXTS.len())]
                } else {
                    NEUTRAL_TEXTS[g.rng.gen_range(0..NEUTRAL_TEXTS.len())]
                };
                let kind = if k % 2 == 0 { Kind::Reply } else { Kind::QuoteRetweet };
                g.push(ego, alter, kind, ts, Some(text));
            }
        }
    }

    // Positive reverse directions for five cross-community pairs: u1j
    // answers u0j warmly although u0j is hostile, so the directed signs
    // disagree exactly on these edges.
    for j in 0..5 {
        let ego = EGOS_PER_COMMUNITY + j; // u10..u14
        let alter = j; // u00..u04 (u0j targets u1j at hostile offset 0)
        let times = g.timestamps(12);
        for (k, ts) in times.into_iter().enumerate() {
            let text = POSITIVE_TEXTS[k % POSITIVE_TEXTS.len()];
            g.push(ego, alter, Kind::Reply, ts, Some(text));
        }
    }

    // A few precomputed labels to exercise the pass-through path.
    for j in 0..6 {
        let ego = j;
        let alter = (j + 1) % EGOS_PER_COMMUNITY;
        g.records.push(InteractionRecord {
            ego_id: ego_name(ego),
            alter_id: ego_name(alter),
            kind: Kind::Mention,
            ts: START_TS + 1000 + j as i64,
            text: None,
            label: Some(Polarity::Positive),
        });
    }

    // Group into timelines with sidecar totals comfortably above the
    // 2000-tweet activity floor.
    let mut timelines: Vec<Timeline> = Vec::new();
    let mut records = g.records;
    records.sort_by(|a, b| (&a.ego_id, a.ts).cmp(&(&b.ego_id, b.ts)));
    for chunk in records.chunk_by(|a, b| a.ego_id == b.ego_id) {
        let ego_id = chunk[0].ego_id.clone();
        let idx: usize = ego_id[1..].parse().unwrap();
        let total = 2400 + 10 * idx as u64;
        timelines.push(Timeline {
            ego_id,
            non_interaction_tweets: total - chunk.len() as u64,
            records: chunk.to_vec(),
        });
    }

    let stdout = std::io::stdout();
    write_timelines(&timelines, stdout.lock()).expect("write fixture");
}
