use std::collections::HashSet;
use std::path::{Path, PathBuf};

use clap::Args;
use rayon::prelude::*;
use retrobleu::{ngram_fraction, DbBuilder, DbSpec, NgramDatabase, OverlapAccumulator};

use super::csv_writer;
use crate::config::{self, ConfigFlags};
use crate::failure::Failure;
use crate::inputs::{load_db, load_patent_list, load_route_file};
use crate::manifest::{digest_file, manifest_path, RunManifest};

#[derive(Debug, Args)]
pub struct StatsArgs {
    /// Route files to measure.
    #[arg(long, num_args = 1.., required = true)]
    pub routes: Vec<PathBuf>,
    /// Prebuilt databases, one row each.
    #[arg(long, num_args = 1.., conflicts_with = "known")]
    pub db: Vec<PathBuf>,
    /// Build databases in memory from these route files instead.
    #[arg(long, num_args = 1.., required_unless_present = "db")]
    pub known: Vec<PathBuf>,
    /// N-gram orders to build with --known.
    #[arg(long, value_delimiter = ',', default_values_t = [2usize, 3, 4])]
    pub ns: Vec<usize>,
    #[arg(long = "exclude-patents")]
    pub exclude_patents: Option<PathBuf>,
    /// CSV output: n,kind,radius,mean_fraction,coverage,avg_length,route_count.
    #[arg(long)]
    pub out: PathBuf,
    #[command(flatten)]
    pub cfg: ConfigFlags,
}

pub fn stats(args: &StatsArgs, config_file: Option<&Path>) -> Result<(), Failure> {
    let cfg = config::resolve(&args.cfg, config_file)?;
    let mut manifest = RunManifest::new("stats", Some(cfg));

    let mut dbs: Vec<NgramDatabase> = Vec::new();
    if args.db.is_empty() {
        let excluded = match &args.exclude_patents {
            Some(p) => {
                manifest.inputs.push(digest_file(p)?);
                load_patent_list(p)?
            }
            None => HashSet::new(),
        };
        let mut builders = args
            .ns
            .iter()
            .map(|&n| {
                DbSpec::new(n, cfg.token_kind, cfg.template_radius)
                    .map(|spec| DbBuilder::new(spec, &excluded))
                    .map_err(|e| Failure::input(e.to_string()))
            })
            .collect::<Result<Vec<_>, _>>()?;
        for path in &args.known {
            let file = load_route_file(path)?;
            for route in &file.routes {
                for b in &mut builders {
                    b.add_route(route).map_err(|e| {
                        Failure::from_lib(
                            format!("{} (route `{}`)", path.display(), route.route_id()),
                            e,
                        )
                    })?;
                }
            }
            manifest.inputs.push(file.digest);
        }
        dbs.extend(builders.into_iter().map(DbBuilder::finish));
    } else {
        for path in &args.db {
            let (db, digest) = load_db(path)?;
            manifest.db.push(digest);
            dbs.push(db);
        }
    }

    let mut accs = vec![OverlapAccumulator::default(); dbs.len()];
    for path in &args.routes {
        let file = load_route_file(path)?;
        for (acc, db) in accs.iter_mut().zip(&dbs) {
            let overlaps = file
                .routes
                .par_iter()
                .map(|r| ngram_fraction(r, db).map(|o| (o, r.length())))
                .collect::<Result<Vec<_>, _>>()
                .map_err(|e| Failure::from_lib(path.display(), e))?;
            for (o, len) in &overlaps {
                acc.add(o, *len);
            }
        }
        manifest.inputs.push(file.digest);
    }

    let mut csv = csv_writer(&args.out)?;
    csv.write_record([
        "n",
        "kind",
        "radius",
        "mean_fraction",
        "coverage",
        "avg_length",
        "route_count",
    ])?;
    for (acc, db) in accs.iter().zip(&dbs) {
        let s = acc
            .finish(db.n())
            .map_err(|e| Failure::input(e.to_string()))?;
        csv.write_record([
            s.n.to_string(),
            db.kind().to_string(),
            db.radius().map_or("-".into(), |r| r.to_string()),
            s.mean_fraction.to_string(),
            s.coverage.to_string(),
            s.avg_length.to_string(),
            s.route_count.to_string(),
        ])?;
        println!(
            "n={} mean={:.4} coverage={:.4} avg_length={:.2} routes={}",
            s.n, s.mean_fraction, s.coverage, s.avg_length, s.route_count
        );
    }
    csv.flush()?;
    manifest.output(&args.out);
    manifest.write(&manifest_path(&args.out))?;
    Ok(())
}
