use std::io::Write;
use std::path::{Path, PathBuf};

use clap::Args;
use retrobleu::{ScoreReport, Scorer};

use super::{create, csv_writer};
use crate::config::{self, ConfigFlags};
use crate::failure::{warn, Failure};
use crate::inputs::{load_db, load_route_file};
use crate::manifest::{manifest_path, RunManifest};

pub const REPORT_COLUMNS: [&str; 9] = [
    "route_id",
    "retro_bleu",
    "f_n",
    "n_recorded",
    "n_total",
    "badowski",
    "cum_log_prob",
    "length",
    "bigram_ratio",
];

#[derive(Debug, Args)]
pub struct ScoreArgs {
    /// Known n-gram database.
    #[arg(long)]
    pub db: PathBuf,
    /// Bigram database for the bigram-ratio column when --db is not a bigram database.
    #[arg(long = "bigram-db")]
    pub bigram_db: Option<PathBuf>,
    /// Route files to score.
    #[arg(long, num_args = 0..)]
    pub routes: Vec<PathBuf>,
    /// CSV output, one row per route.
    #[arg(long)]
    pub out: PathBuf,
    /// Optional JSON output (array of reports).
    #[arg(long)]
    pub json: Option<PathBuf>,
    /// Stop at the first route or file that fails.
    #[arg(long)]
    pub strict: bool,
    #[command(flatten)]
    pub cfg: ConfigFlags,
}

struct JsonArray<W: Write> {
    out: W,
    first: bool,
}

impl<W: Write> JsonArray<W> {
    fn new(mut out: W) -> std::io::Result<Self> {
        out.write_all(b"[")?;
        Ok(JsonArray { out, first: true })
    }

    fn push(&mut self, report: &ScoreReport) -> std::io::Result<()> {
        self.out
            .write_all(if self.first { b"\n  " } else { b",\n  " })?;
        self.first = false;
        serde_json::to_writer(&mut self.out, report)?;
        Ok(())
    }

    fn finish(mut self) -> std::io::Result<()> {
        self.out
            .write_all(if self.first { b"]\n" } else { b"\n]\n" })?;
        self.out.flush()
    }
}

pub fn score(args: &ScoreArgs, config_file: Option<&Path>) -> Result<(), Failure> {
    let cfg = config::resolve(&args.cfg, config_file)?;
    let (db, db_digest) = load_db(&args.db)?;
    let mut manifest = RunManifest::new("score", Some(cfg));
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

    let mut csv = csv_writer(&args.out)?;
    csv.write_record(REPORT_COLUMNS)?;
    let mut json = match &args.json {
        Some(p) => Some(JsonArray::new(create(p)?)?),
        None => None,
    };

    let (mut scored, mut failed) = (0usize, 0usize);
    for path in &args.routes {
        let file = match load_route_file(path) {
            Ok(f) => f,
            Err(e) if args.strict || e.code == 2 => return Err(e),
            Err(e) => {
                warn(e);
                failed += 1;
                continue;
            }
        };
        manifest.inputs.push(file.digest);
        for (route, result) in file.routes.iter().zip(scorer.score_batch(&file.routes)) {
            match result {
                Ok(report) => {
                    csv.serialize(&report)?;
                    if let Some(j) = json.as_mut() {
                        j.push(&report)?;
                    }
                    scored += 1;
                }
                Err(e) => {
                    let f = Failure::from_lib(
                        format!("{} (route `{}`)", path.display(), route.route_id()),
                        e,
                    );
                    if args.strict {
                        return Err(f);
                    }
                    warn(f);
                    failed += 1;
                }
            }
        }
    }
    csv.flush()?;
    manifest.output(&args.out);
    if let (Some(j), Some(p)) = (json, &args.json) {
        j.finish()?;
        manifest.output(p);
    }
    manifest.detail("scored", scored);
    manifest.detail("failed", failed);
    manifest.write(&manifest_path(&args.out))?;
    println!(
        "scored {scored} routes ({failed} failed) -> {}",
        args.out.display()
    );
    Ok(())
}
