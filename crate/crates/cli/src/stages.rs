//! Stage implementations behind the subcommands. Every stage reads its
//! inputs from files, writes its artifacts plus a manifest into the output
//! directory, and is deterministic for fixed inputs and configuration.

use std::collections::BTreeMap;
use std::fmt;
use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde_json::json;

use sen_core::analytics::{
    bin_and_test, circle_report_with_threshold, composition_report, correlate, mean_circle_count,
    negativity_full_vs_active_with_threshold, negativity_metrics_with_threshold,
    write_bin_report_csv, write_circle_report_csv, write_vectors_csv, AnalyticsError, Metric,
    NegativityVector, Target,
};
use sen_core::egonet::{
    build_ego_network, compute_frequencies_with_min, read_egonets_json, write_egonets_json,
    ClusterOptions, EgoNetwork, EgonetError,
};
use sen_core::ingest::{
    filter_egos, parse_interactions, write_timelines, write_verdicts_csv, FilterRules, IngestError,
    Timeline,
};
use sen_core::sentiment::{classify_interaction, Lexicon, SentimentError};
use sen_core::signing::{
    build_profiles, read_profiles_csv, write_profiles_csv_with_threshold, RelationshipProfile,
};
use sen_core::triads::{
    build_signed_graph_with_threshold, check_weak_balance, null_model_surprise, write_edge_list,
    CollapseRule, TriadError,
};

use crate::manifest::Manifest;

/// Stage failure, sorted into the three exit classes: 1 = bad
/// configuration, 2 = unreadable or invalid input, 3 = degenerate data.
#[derive(Debug)]
pub enum StageError {
    Config(String),
    Input(String),
    Degenerate(String),
}

impl StageError {
    pub fn exit_code(&self) -> i32 {
        match self {
            StageError::Config(_) => 1,
            StageError::Input(_) => 2,
            StageError::Degenerate(_) => 3,
        }
    }
}

impl fmt::Display for StageError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            StageError::Config(m) => write!(f, "configuration error: {m}"),
            StageError::Input(m) => write!(f, "input error: {m}"),
            StageError::Degenerate(m) => write!(f, "degenerate data: {m}"),
        }
    }
}

impl From<std::io::Error> for StageError {
    fn from(e: std::io::Error) -> Self {
        StageError::Input(e.to_string())
    }
}

impl From<IngestError> for StageError {
    fn from(e: IngestError) -> Self {
        StageError::Input(e.to_string())
    }
}

impl From<csv::Error> for StageError {
    fn from(e: csv::Error) -> Self {
        StageError::Input(e.to_string())
    }
}

impl From<serde_json::Error> for StageError {
    fn from(e: serde_json::Error) -> Self {
        StageError::Input(e.to_string())
    }
}

impl From<SentimentError> for StageError {
    fn from(e: SentimentError) -> Self {
        match e {
            SentimentError::EmptyLexicon => StageError::Config(e.to_string()),
            other => StageError::Input(other.to_string()),
        }
    }
}

impl From<EgonetError> for StageError {
    fn from(e: EgonetError) -> Self {
        StageError::Degenerate(e.to_string())
    }
}

impl From<TriadError> for StageError {
    fn from(e: TriadError) -> Self {
        match e {
            TriadError::BadEdgeList { .. } | TriadError::Io(_) => StageError::Input(e.to_string()),
            other => StageError::Degenerate(other.to_string()),
        }
    }
}

impl From<AnalyticsError> for StageError {
    fn from(e: AnalyticsError) -> Self {
        StageError::Degenerate(e.to_string())
    }
}

fn ensure_dir(dir: &Path) -> Result<(), StageError> {
    std::fs::create_dir_all(dir)?;
    Ok(())
}

fn open(path: &Path) -> Result<BufReader<File>, StageError> {
    File::open(path)
        .map(BufReader::new)
        .map_err(|e| StageError::Input(format!("{}: {e}", path.display())))
}

fn load_timelines(path: &Path) -> Result<Vec<Timeline>, StageError> {
    Ok(parse_interactions(open(path)?)?.timelines)
}

fn load_profiles(path: &Path) -> Result<Vec<RelationshipProfile>, StageError> {
    read_profiles_csv(open(path)?).map_err(|e| StageError::Input(e.to_string()))
}

fn load_egonets(path: &Path) -> Result<Vec<EgoNetwork>, StageError> {
    read_egonets_json(open(path)?).map_err(|e| StageError::Input(e.to_string()))
}

fn thread_pool(jobs: usize) -> Result<rayon::ThreadPool, StageError> {
    rayon::ThreadPoolBuilder::new()
        .num_threads(jobs)
        .build()
        .map_err(|e| StageError::Config(e.to_string()))
}

pub fn run_ingest(inputs: &[PathBuf], out_dir: &Path) -> Result<(), StageError> {
    if inputs.is_empty() {
        return Err(StageError::Config("at least one --input file is required".into()));
    }
    ensure_dir(out_dir)?;
    // Concatenate all inputs before grouping so one ego may span several
    // files.
    let mut combined = Vec::new();
    for path in inputs {
        open(path)?.read_to_end(&mut combined)?;
        if combined.last().is_some_and(|&b| b != b'\n') {
            combined.push(b'\n');
        }
    }
    let outcome = parse_interactions(combined.as_slice())?;

    let timelines_path = out_dir.join("timelines.jsonl");
    write_timelines(&outcome.timelines, BufWriter::new(File::create(&timelines_path)?))?;
    let diagnostics_path = out_dir.join("ingest.diagnostics.json");
    std::fs::write(
        &diagnostics_path,
        serde_json::to_string_pretty(&json!({
            "lines_read": outcome.lines_read,
            "malformed": outcome.malformed,
            "non_monotonic_egos": outcome.non_monotonic_egos,
        }))? + "\n",
    )?;

    let mut manifest = Manifest::new(
        "ingest",
        json!({ "egos": outcome.timelines.len(), "lines_read": outcome.lines_read }),
    );
    for path in inputs {
        manifest.add_input(path)?;
    }
    manifest.add_output(&timelines_path)?;
    manifest.add_output(&diagnostics_path)?;
    manifest.write(out_dir)?;
    Ok(())
}

pub fn run_filter(timelines: &Path, out_dir: &Path, rules: FilterRules) -> Result<(), StageError> {
    if !(0.0..1.0).contains(&rules.regularity_month_fraction) {
        return Err(StageError::Config("--month-fraction must be in [0, 1)".into()));
    }
    if rules.regularity_interval_days == 0 {
        return Err(StageError::Config("--interval-days must be positive".into()));
    }
    ensure_dir(out_dir)?;
    let all = load_timelines(timelines)?;
    let verdicts = filter_egos(&all, &rules);
    let kept: Vec<Timeline> = all
        .into_iter()
        .zip(&verdicts)
        .filter(|(_, v)| v.kept)
        .map(|(tl, _)| tl)
        .collect();

    let verdicts_path = out_dir.join("verdicts.csv");
    let mut file = File::create(&verdicts_path)?;
    writeln!(
        file,
        "# min_tweets={} min_span_months={} interval_days={} month_fraction={}",
        rules.min_tweets,
        rules.min_span_months,
        rules.regularity_interval_days,
        rules.regularity_month_fraction
    )?;
    write_verdicts_csv(&verdicts, &mut file)?;
    let kept_path = out_dir.join("filtered.jsonl");
    write_timelines(&kept, BufWriter::new(File::create(&kept_path)?))?;

    let mut manifest = Manifest::new(
        "filter",
        json!({
            "min_tweets": rules.min_tweets,
            "min_span_months": rules.min_span_months,
            "interval_days": rules.regularity_interval_days,
            "month_fraction": rules.regularity_month_fraction,
            "kept": kept.len(),
            "rejected": verdicts.len() - kept.len(),
        }),
    );
    manifest.add_input(timelines)?;
    manifest.add_output(&verdicts_path)?;
    manifest.add_output(&kept_path)?;
    manifest.write(out_dir)?;
    Ok(())
}

pub fn run_sign(
    timelines: &Path,
    lexicon_path: &Path,
    out_dir: &Path,
    threshold_percent: u64,
) -> Result<(), StageError> {
    if threshold_percent > 100 {
        return Err(StageError::Config("--threshold must be a percentage <= 100".into()));
    }
    ensure_dir(out_dir)?;
    let all = load_timelines(timelines)?;
    let lexicon = Lexicon::from_path(lexicon_path)?;
    let mut labels = Vec::with_capacity(all.len());
    for tl in &all {
        let mut per_tl = Vec::with_capacity(tl.records.len());
        for record in &tl.records {
            per_tl.push(classify_interaction(record, &lexicon)?.value);
        }
        labels.push(per_tl);
    }
    let profiles = build_profiles(&all, &labels)
        .map_err(|e| StageError::Input(e.to_string()))?;

    let profiles_path = out_dir.join("profiles.csv");
    let mut file = File::create(&profiles_path)?;
    writeln!(
        file,
        "# threshold_percent={threshold_percent} lexicon_sha256={}",
        lexicon.sha256()
    )?;
    write_profiles_csv_with_threshold(&profiles, threshold_percent, &mut file)?;

    let mut manifest = Manifest::new(
        "sign",
        json!({
            "threshold_percent": threshold_percent,
            "lexicon_sha256": lexicon.sha256(),
            "lexicon_entries": lexicon.len(),
            "profiles": profiles.len(),
        }),
    );
    manifest.add_input(timelines)?;
    manifest.add_input(lexicon_path)?;
    manifest.add_output(&profiles_path)?;
    manifest.write(out_dir)?;
    Ok(())
}

#[allow(clippy::too_many_arguments)]
pub fn run_egonet(
    timelines: &Path,
    profiles: &Path,
    out_dir: &Path,
    opts: ClusterOptions,
    min_active_freq: f64,
    jobs: usize,
) -> Result<(), StageError> {
    if !(0.0..=1.0).contains(&opts.bandwidth_quantile) {
        return Err(StageError::Config("--bandwidth-quantile must be in [0, 1]".into()));
    }
    if let Some(h) = opts.bandwidth {
        if !(h > 0.0) {
            return Err(StageError::Config("--bandwidth must be positive".into()));
        }
    }
    if !(min_active_freq > 0.0) {
        return Err(StageError::Config("--min-active-freq must be positive".into()));
    }
    ensure_dir(out_dir)?;
    let all = load_timelines(timelines)?;
    let mut by_ego: BTreeMap<&str, Vec<&RelationshipProfile>> = BTreeMap::new();
    let profile_rows = load_profiles(profiles)?;
    for p in &profile_rows {
        by_ego.entry(p.ego_id.as_str()).or_default().push(p);
    }

    let pool = thread_pool(jobs)?;
    let results: Vec<Result<Option<EgoNetwork>, EgonetError>> = pool.install(|| {
        all.par_iter()
            .map(|tl| {
                let Some(list) = by_ego.get(tl.ego_id.as_str()) else {
                    return Ok(None);
                };
                let (Some(first), Some(last)) = (tl.first_ts(), tl.last_ts()) else {
                    return Ok(None);
                };
                if last <= first {
                    // One-shot timeline: frequencies undefined, skip.
                    return Ok(None);
                }
                let owned: Vec<RelationshipProfile> = list.iter().map(|&p| p.clone()).collect();
                let freqs = compute_frequencies_with_min(&owned, (first, last), min_active_freq)?;
                build_ego_network(&tl.ego_id, &freqs, &opts).map(Some)
            })
            .collect()
    });
    let mut networks = Vec::new();
    let mut skipped = 0usize;
    for r in results {
        match r? {
            Some(net) => networks.push(net),
            None => skipped += 1,
        }
    }
    if networks.is_empty() {
        return Err(StageError::Degenerate("no ego yielded a usable network".into()));
    }

    let egonets_path = out_dir.join("egonets.jsonl");
    write_egonets_json(&networks, BufWriter::new(File::create(&egonets_path)?))?;

    let mut manifest = Manifest::new(
        "egonet",
        json!({
            "bandwidth": opts.bandwidth,
            "bandwidth_quantile": opts.bandwidth_quantile,
            "log_space": opts.log_space,
            "min_active_freq": min_active_freq,
            "networks": networks.len(),
            "skipped_egos": skipped,
            "mean_circles": mean_circle_count(&networks),
        }),
    );
    manifest.add_input(timelines)?;
    manifest.add_input(profiles)?;
    manifest.add_output(&egonets_path)?;
    manifest.write(out_dir)?;
    Ok(())
}

pub fn run_triads(
    profiles: &Path,
    out_dir: &Path,
    collapse: CollapseRule,
    shuffles: u32,
    seed: u64,
    threshold_percent: u64,
) -> Result<(), StageError> {
    if shuffles == 0 {
        return Err(StageError::Config("--shuffles must be positive".into()));
    }
    ensure_dir(out_dir)?;
    let profile_rows = load_profiles(profiles)?;
    let graph = build_signed_graph_with_threshold(&profile_rows, collapse, threshold_percent);

    let edges_path = out_dir.join("edges.txt");
    let mut file = File::create(&edges_path)?;
    writeln!(file, "# collapse={} threshold_percent={threshold_percent}", collapse.as_str())?;
    write_edge_list(&graph, &mut file)?;

    let report = null_model_surprise(&graph, shuffles, seed)?;
    let surprise_path = out_dir.join("surprise.json");
    std::fs::write(
        &surprise_path,
        serde_json::to_string_pretty(&json!({
            "config": {
                "collapse": collapse.as_str(),
                "shuffles": shuffles,
                "seed": seed,
                "threshold_percent": threshold_percent,
            },
            "report": report,
            "weak_balance": check_weak_balance(&report),
        }))? + "\n",
    )?;

    let mut manifest = Manifest::new(
        "triads",
        json!({
            "collapse": collapse.as_str(),
            "shuffles": shuffles,
            "seed": seed,
            "threshold_percent": threshold_percent,
            "nodes": graph.node_count(),
            "edges": graph.edge_count(),
            "triangles": report.delta,
        }),
    );
    manifest.add_input(profiles)?;
    manifest.add_output(&edges_path)?;
    manifest.add_output(&surprise_path)?;
    manifest.write(out_dir)?;
    Ok(())
}

pub fn run_metrics(
    profiles: &Path,
    egonets: &Path,
    out_dir: &Path,
    threshold_percent: u64,
    jobs: usize,
) -> Result<(), StageError> {
    ensure_dir(out_dir)?;
    let profile_rows = load_profiles(profiles)?;
    let networks = load_egonets(egonets)?;
    let vectors = compute_vectors(&networks, &profile_rows, threshold_percent, jobs)?;
    if vectors.is_empty() {
        return Err(StageError::Degenerate("every ego has an empty active network".into()));
    }

    let vectors_path = out_dir.join("vectors.csv");
    let mut file = File::create(&vectors_path)?;
    writeln!(file, "# threshold_percent={threshold_percent}")?;
    write_vectors_csv(&vectors, &mut file)?;

    let mut manifest = Manifest::new(
        "metrics",
        json!({
            "threshold_percent": threshold_percent,
            "egos": vectors.len(),
            "skipped": networks.len() - vectors.len(),
        }),
    );
    manifest.add_input(profiles)?;
    manifest.add_input(egonets)?;
    manifest.add_output(&vectors_path)?;
    manifest.write(out_dir)?;
    Ok(())
}

/// Negativity vectors for every ego with a non-empty active network, in
/// ego-id order. Egos whose active network is empty are skipped.
fn compute_vectors(
    networks: &[EgoNetwork],
    profiles: &[RelationshipProfile],
    threshold_percent: u64,
    jobs: usize,
) -> Result<Vec<NegativityVector>, StageError> {
    let pool = thread_pool(jobs)?;
    let mut vectors: Vec<NegativityVector> = pool.install(|| {
        networks
            .par_iter()
            .filter_map(|net| negativity_metrics_with_threshold(net, profiles, threshold_percent).ok())
            .collect()
    });
    vectors.sort_by(|a, b| a.ego_id.cmp(&b.ego_id));
    Ok(vectors)
}

/// Which report tables to emit; `all` is lenient and skips tables the data
/// cannot support, an explicit list is strict.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Table {
    Negativity,
    Circles,
    Composition,
    Bins,
    Correlations,
}

impl Table {
    const ALL: [Table; 5] =
        [Table::Negativity, Table::Circles, Table::Composition, Table::Bins, Table::Correlations];

    fn as_str(self) -> &'static str {
        match self {
            Table::Negativity => "negativity",
            Table::Circles => "circles",
            Table::Composition => "composition",
            Table::Bins => "bins",
            Table::Correlations => "correlations",
        }
    }
}

impl std::str::FromStr for Table {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Table::ALL
            .into_iter()
            .find(|t| t.as_str() == s)
            .ok_or_else(|| format!("unknown table {s:?}"))
    }
}

pub fn parse_tables(spec: &str) -> Result<(Vec<Table>, bool), StageError> {
    if spec == "all" {
        return Ok((Table::ALL.to_vec(), false));
    }
    let mut tables = Vec::new();
    for part in spec.split(',') {
        let table: Table = part
            .trim()
            .parse()
            .map_err(StageError::Config)?;
        if !tables.contains(&table) {
            tables.push(table);
        }
    }
    if tables.is_empty() {
        return Err(StageError::Config("--tables selected nothing".into()));
    }
    Ok((tables, true))
}

#[allow(clippy::too_many_arguments)]
pub fn run_report(
    timelines: &Path,
    profiles: &Path,
    egonets: &Path,
    out_dir: &Path,
    tables_spec: &str,
    threshold_percent: u64,
    jobs: usize,
) -> Result<(), StageError> {
    let (tables, strict) = parse_tables(tables_spec)?;
    ensure_dir(out_dir)?;
    let timeline_rows = load_timelines(timelines)?;
    let profile_rows = load_profiles(profiles)?;
    let networks = load_egonets(egonets)?;
    let vectors = compute_vectors(&networks, &profile_rows, threshold_percent, jobs)?;
    let config = json!({
        "tables": tables_spec,
        "threshold_percent": threshold_percent,
        "egos": networks.len(),
        "mean_circles": mean_circle_count(&networks),
    });

    let mut manifest = Manifest::new("report", config.clone());
    manifest.add_input(timelines)?;
    manifest.add_input(profiles)?;
    manifest.add_input(egonets)?;

    // A table the data cannot support fails a strict (explicit) selection
    // and is skipped with a note under `all`.
    let mut skipped: Vec<String> = Vec::new();
    let mut lenient = |result: Result<(), StageError>, table: Table| -> Result<(), StageError> {
        match result {
            Ok(()) => Ok(()),
            Err(e @ (StageError::Config(_) | StageError::Input(_))) => Err(e),
            Err(e) if strict => Err(e),
            Err(e) => {
                skipped.push(format!("{}: {e}", table.as_str()));
                Ok(())
            }
        }
    };

    for table in &tables {
        match table {
            Table::Negativity => {
                let path = out_dir.join("negativity.json");
                lenient(
                    negativity_full_vs_active_with_threshold(
                        &profile_rows,
                        &networks,
                        threshold_percent,
                    )
                    .map_err(StageError::from)
                    .and_then(|pair| {
                        std::fs::write(
                            &path,
                            serde_json::to_string_pretty(&json!({
                                "config": config,
                                "negativity": pair,
                            }))? + "\n",
                        )?;
                        manifest.add_output(&path)?;
                        Ok(())
                    }),
                    *table,
                )?;
            }
            Table::Circles => {
                let path = out_dir.join("circles.csv");
                lenient(
                    circle_report_with_threshold(&networks, &profile_rows, threshold_percent)
                        .map_err(StageError::from)
                        .and_then(|report| {
                            let mut file = File::create(&path)?;
                            writeln!(
                                file,
                                "# threshold_percent={threshold_percent} egos={}",
                                report.ego_count
                            )?;
                            write_circle_report_csv(&report, &mut file)?;
                            manifest.add_output(&path)?;
                            Ok(())
                        }),
                    *table,
                )?;
            }
            Table::Composition => {
                let path = out_dir.join("composition.json");
                lenient(
                    composition_report(&timeline_rows)
                        .map_err(StageError::from)
                        .and_then(|report| {
                            std::fs::write(
                                &path,
                                serde_json::to_string_pretty(&json!({
                                    "config": config,
                                    "composition": report,
                                }))? + "\n",
                            )?;
                            manifest.add_output(&path)?;
                            Ok(())
                        }),
                    *table,
                )?;
            }
            Table::Bins => {
                for metric in [Metric::L1, Metric::L2, Metric::L3] {
                    let path = out_dir.join(format!("bins_{}.csv", metric.as_str()));
                    lenient(
                        bin_and_test(&vectors, metric)
                            .map_err(StageError::from)
                            .and_then(|report| {
                                let mut file = File::create(&path)?;
                                writeln!(file, "# threshold_percent={threshold_percent}")?;
                                write_bin_report_csv(&report, &mut file)?;
                                manifest.add_output(&path)?;
                                Ok(())
                            }),
                        *table,
                    )?;
                }
            }
            Table::Correlations => {
                let path = out_dir.join("correlations.json");
                let mut rows = Vec::new();
                for metric in [Metric::L1, Metric::L2, Metric::L3] {
                    for target in [Target::ActiveSize, Target::TotalInteractions] {
                        let entry = match correlate(&vectors, metric, target) {
                            Ok((r, p)) => json!({
                                "metric": metric.as_str(),
                                "target": target.as_str(),
                                "r": r,
                                "one_tailed_p": p,
                            }),
                            Err(e) if strict => return Err(e.into()),
                            Err(e) => json!({
                                "metric": metric.as_str(),
                                "target": target.as_str(),
                                "error": e.to_string(),
                            }),
                        };
                        rows.push(entry);
                    }
                }
                std::fs::write(
                    &path,
                    serde_json::to_string_pretty(&json!({
                        "config": config,
                        "correlations": rows,
                    }))? + "\n",
                )?;
                manifest.add_output(&path)?;
            }
        }
    }

    if !skipped.is_empty() {
        eprintln!("report: skipped tables: {}", skipped.join("; "));
    }
    manifest.write(out_dir)?;
    Ok(())
}
