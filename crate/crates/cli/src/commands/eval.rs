//! `eval`: rank each case's reference route among its candidates.
//!
//! The case file is a JSON array; paths are relative to the case file:
//!
//! ```json
//! [{"target_id": "t1", "reference": "refs/t1.json", "candidates": ["gen/t1.json"]}]
//! ```
//!
//! Outputs in `--out-dir`: `rankings_<metric>.csv` per metric, `summary.json`
//! (top-k tables and overlap statistics) and `manifest.json`.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use clap::Args;
use rayon::prelude::*;
use retrobleu::{
    evaluate_case, ngram_fraction, topk_table, Metric, OverlapAccumulator, OverlapStats,
    RankingResult, Scorer, TargetCase, TopkTable,
};
use serde::{Deserialize, Serialize};

use super::csv_writer;
use crate::config::{self, ConfigFlags};
use crate::failure::{warn, Failure};
use crate::inputs::{load_db, load_route_file};
use crate::manifest::{digest_file, InputDigest, RunManifest};

const CHUNK: usize = 256;

#[derive(Debug, Args)]
pub struct EvalArgs {
    /// Case file (JSON array of {target_id, reference, candidates}).
    #[arg(long)]
    pub cases: PathBuf,
    /// Known n-gram database.
    #[arg(long)]
    pub db: PathBuf,
    /// Bigram database for the bigram-ratio metric when --db is not a bigram database.
    #[arg(long = "bigram-db")]
    pub bigram_db: Option<PathBuf>,
    /// Comma-separated metrics (default: all available).
    #[arg(long, value_delimiter = ',')]
    pub metrics: Vec<String>,
    /// Comma-separated k values for the top-k tables.
    #[arg(long, value_delimiter = ',', default_values_t = [1usize, 3, 5, 10, 20, 50])]
    pub ks: Vec<usize>,
    /// Directory for the ranking files, summary and manifest.
    #[arg(long = "out-dir")]
    pub out_dir: PathBuf,
    /// Fail instead of skipping cases that cannot be loaded or scored.
    #[arg(long)]
    pub strict: bool,
    #[command(flatten)]
    pub cfg: ConfigFlags,
}

#[derive(Debug, Deserialize)]
struct CaseEntry {
    target_id: String,
    reference: Option<PathBuf>,
    #[serde(default)]
    candidates: Vec<PathBuf>,
}

#[derive(Debug, Serialize)]
struct OverlapSummary {
    references: Option<OverlapStats>,
    candidates: Option<OverlapStats>,
}

#[derive(Debug, Serialize)]
struct Summary {
    metrics: Vec<Metric>,
    ks: Vec<usize>,
    cases_evaluated: usize,
    cases_skipped: Vec<String>,
    topk: Vec<TopkTable>,
    overlap: OverlapSummary,
}

struct LoadedCase {
    case: TargetCase,
    digests: Vec<InputDigest>,
}

fn load_case(entry: &CaseEntry, base: &Path) -> Result<LoadedCase, Failure> {
    let Some(reference) = &entry.reference else {
        return Err(Failure::input(format!(
            "case `{}`: missing reference",
            entry.target_id
        )));
    };
    let path = base.join(reference);
    if !path.exists() {
        return Err(Failure::input(format!(
            "case `{}`: missing reference {}",
            entry.target_id,
            path.display()
        )));
    }
    let file = load_route_file(&path)?;
    let mut digests = vec![file.digest];
    let mut routes = file.routes.into_iter();
    let (Some(reference), None) = (routes.next(), routes.next()) else {
        return Err(Failure::input(format!(
            "case `{}`: {} must hold exactly one route",
            entry.target_id,
            path.display()
        )));
    };
    let mut candidates = Vec::new();
    for c in &entry.candidates {
        let file = load_route_file(&base.join(c))?;
        digests.push(file.digest);
        candidates.extend(file.routes);
    }
    let case = TargetCase::new(entry.target_id.clone(), reference, candidates)
        .map_err(|e| Failure::input(format!("case `{}`: {e}", entry.target_id)))?;
    Ok(LoadedCase { case, digests })
}

fn evaluate(
    loaded: &LoadedCase,
    metrics: &[Metric],
    scorer: &Scorer<'_>,
) -> Result<(Vec<RankingResult>, OverlapAccumulator, OverlapAccumulator), Failure> {
    let case = &loaded.case;
    let fail = |e| Failure::from_lib(format!("case `{}`", case.target_id), e);
    let results = evaluate_case(case, metrics, scorer).map_err(fail)?;
    let mut refs = OverlapAccumulator::default();
    let overlap = ngram_fraction(&case.reference, scorer.db()).map_err(fail)?;
    refs.add(&overlap, case.reference.length());
    let mut cands = OverlapAccumulator::default();
    for c in &case.candidates {
        cands.add(&ngram_fraction(c, scorer.db()).map_err(fail)?, c.length());
    }
    Ok((results, refs, cands))
}

pub fn eval(args: &EvalArgs, config_file: Option<&Path>) -> Result<(), Failure> {
    let cfg = config::resolve(&args.cfg, config_file)?;
    let (db, db_digest) = load_db(&args.db)?;
    let mut manifest = RunManifest::new("eval", Some(cfg));
    manifest.db.push(db_digest);
    let bigram = match &args.bigram_db {
        Some(p) => {
            let (b, digest) = load_db(p)?;
            manifest.db.push(digest);
            Some(b)
        }
        None => None,
    };
    let mut scorer = Scorer::new(&db, cfg).map_err(|e| Failure::from_lib(args.db.display(), e))?;
    if let (Some(b), Some(p)) = (&bigram, &args.bigram_db) {
        scorer = scorer
            .with_bigram_db(b)
            .map_err(|e| Failure::from_lib(p.display(), e))?;
    }

    let metrics: Vec<Metric> = if args.metrics.is_empty() {
        Metric::ALL
            .into_iter()
            .filter(|m| *m != Metric::BigramRatio || scorer.bigram_db().is_some())
            .collect()
    } else {
        let mut ms = Vec::new();
        for name in &args.metrics {
            let m: Metric = name
                .trim()
                .parse()
                .map_err(|e: retrobleu::Error| Failure::input(e.to_string()))?;
            if m == Metric::BigramRatio && scorer.bigram_db().is_none() {
                return Err(Failure::input(
                    "bigram_ratio needs a bigram database (--db with n=2 or --bigram-db)",
                ));
            }
            if !ms.contains(&m) {
                ms.push(m);
            }
        }
        ms
    };
    if args.ks.is_empty() || args.ks.contains(&0) {
        return Err(Failure::input("--ks needs positive integers"));
    }

    let case_text = std::fs::read_to_string(&args.cases)
        .map_err(|e| Failure::io(format!("{}: {e}", args.cases.display())))?;
    let entries: Vec<CaseEntry> = serde_json::from_str(&case_text)
        .map_err(|e| Failure::input(format!("{}: {e}", args.cases.display())))?;
    manifest.inputs.push(digest_file(&args.cases)?);
    let base = args.cases.parent().unwrap_or(Path::new("."));

    std::fs::create_dir_all(&args.out_dir)
        .map_err(|e| Failure::io(format!("{}: {e}", args.out_dir.display())))?;

    let mut per_metric: BTreeMap<Metric, Vec<RankingResult>> = BTreeMap::new();
    let mut ref_overlap = OverlapAccumulator::default();
    let mut cand_overlap = OverlapAccumulator::default();
    let mut skipped = Vec::new();

    for chunk in entries.chunks(CHUNK) {
        let outcomes: Vec<_> = chunk
            .par_iter()
            .map(|entry| {
                let loaded = load_case(entry, base)?;
                let scored = evaluate(&loaded, &metrics, &scorer)?;
                Ok::<_, Failure>((loaded.digests, scored))
            })
            .collect();
        for (entry, outcome) in chunk.iter().zip(outcomes) {
            match outcome {
                Ok((digests, (results, refs, cands))) => {
                    manifest.inputs.extend(digests);
                    for r in results {
                        per_metric.entry(r.metric).or_default().push(r);
                    }
                    ref_overlap.merge(&refs);
                    cand_overlap.merge(&cands);
                }
                Err(f) if args.strict => return Err(f),
                Err(f) => {
                    warn(format!("skipping case: {f}"));
                    skipped.push(entry.target_id.clone());
                }
            }
        }
    }

    let evaluated = entries.len() - skipped.len();
    if evaluated == 0 {
        return Err(Failure::input("no case could be evaluated"));
    }

    let mut topk = Vec::new();
    for metric in &metrics {
        let results = per_metric
            .get(metric)
            .map(Vec::as_slice)
            .unwrap_or_default();
        let path = args.out_dir.join(format!("rankings_{metric}.csv"));
        let mut csv = csv_writer(&path)?;
        csv.write_record([
            "target_id",
            "metric",
            "best_rank",
            "worst_rank",
            "pool_size",
        ])?;
        for r in results {
            csv.serialize(r)?;
        }
        csv.flush()?;
        manifest.output(&path);
        topk.push(topk_table(results, &args.ks).map_err(|e| Failure::input(e.to_string()))?);
    }

    let summary = Summary {
        metrics: metrics.clone(),
        ks: {
            let mut ks = args.ks.clone();
            ks.sort_unstable();
            ks.dedup();
            ks
        },
        cases_evaluated: evaluated,
        cases_skipped: skipped,
        topk,
        overlap: OverlapSummary {
            references: ref_overlap.finish(db.n()).ok(),
            candidates: cand_overlap.finish(db.n()).ok(),
        },
    };
    let summary_path = args.out_dir.join("summary.json");
    let mut text = serde_json::to_string_pretty(&summary).expect("summary serializes");
    text.push('\n');
    std::fs::write(&summary_path, text)
        .map_err(|e| Failure::io(format!("{}: {e}", summary_path.display())))?;
    manifest.output(&summary_path);
    manifest.write(&args.out_dir.join("manifest.json"))?;

    for table in &summary.topk {
        let cells: Vec<String> = table
            .rows
            .iter()
            .map(|r| format!("top-{} {:.3}/{:.3}", r.k, r.best_acc, r.worst_acc))
            .collect();
        println!("{:<13} {}", table.metric.to_string(), cells.join("  "));
    }
    println!(
        "{evaluated} cases evaluated, {} skipped -> {}",
        summary.cases_skipped.len(),
        args.out_dir.display()
    );
    Ok(())
}
