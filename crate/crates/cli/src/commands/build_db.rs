use std::collections::{BTreeMap, HashSet};
use std::path::{Path, PathBuf};

use clap::Args;
use rayon::prelude::*;
use retrobleu::{DbBuilder, DbSpec, TokenKind};

use crate::config::{self, ConfigFlags};
use crate::failure::{warn, Failure};
use crate::inputs::{load_db, load_patent_list, load_route_file};
use crate::manifest::{digest_file, manifest_path, InputDigest, RunManifest};

#[derive(Debug, Args)]
pub struct BuildDbArgs {
    /// Route files (JSON, one route or an array of routes each).
    #[arg(long, num_args = 1.., required_unless_present = "merge")]
    pub routes: Vec<PathBuf>,
    /// Shard databases to merge into the output.
    #[arg(long, num_args = 1..)]
    pub merge: Vec<PathBuf>,
    /// File listing patent ids whose routes are left out, one per line.
    #[arg(long = "exclude-patents")]
    pub exclude_patents: Option<PathBuf>,
    /// Output database path.
    #[arg(long)]
    pub out: PathBuf,
    #[command(flatten)]
    pub cfg: ConfigFlags,
}

struct Shard<'e> {
    builder: DbBuilder<'e>,
    digests: BTreeMap<usize, InputDigest>,
    /// Lowest-indexed failing file, so the reported error is schedule-independent.
    error: Option<(usize, Failure)>,
}

impl<'e> Shard<'e> {
    fn new(spec: DbSpec, excluded: &'e HashSet<String>) -> Self {
        Shard {
            builder: DbBuilder::new(spec, excluded),
            digests: BTreeMap::new(),
            error: None,
        }
    }

    fn fail(&mut self, index: usize, failure: Failure) {
        if self.error.as_ref().is_none_or(|(i, _)| index < *i) {
            self.error = Some((index, failure));
        }
    }

    fn add_file(mut self, index: usize, path: &Path) -> Self {
        // After a failure, only earlier files can change the outcome.
        if self.error.as_ref().is_some_and(|(i, _)| *i < index) {
            return self;
        }
        let file = match load_route_file(path) {
            Ok(f) => f,
            Err(e) => {
                self.fail(index, e);
                return self;
            }
        };
        for route in &file.routes {
            if let Err(e) = self.builder.add_route(route) {
                let context = format!("{} (route `{}`)", path.display(), route.route_id());
                self.fail(index, Failure::from_lib(context, e));
                return self;
            }
        }
        self.digests.insert(index, file.digest);
        self
    }

    fn combine(mut self, other: Shard<'e>) -> Self {
        if let Some((i, f)) = other.error {
            self.fail(i, f);
        }
        if let Err(e) = self.builder.absorb(other.builder) {
            self.fail(usize::MAX, Failure::from_lib("shard merge", e));
        }
        self.digests.extend(other.digests);
        self
    }
}

pub fn build_db(args: &BuildDbArgs, config_file: Option<&Path>) -> Result<(), Failure> {
    let cfg = config::resolve(&args.cfg, config_file)?;
    let spec = DbSpec::new(cfg.n, cfg.token_kind, cfg.template_radius)
        .map_err(|e| Failure::input(e.to_string()))?;
    let excluded = match &args.exclude_patents {
        Some(p) => load_patent_list(p)?,
        None => HashSet::new(),
    };

    // An inferred radius must be fixed by the first route, which needs file order.
    let sequential = spec.kind == TokenKind::Template && spec.radius.is_none();
    let shard = if sequential {
        args.routes
            .iter()
            .enumerate()
            .fold(Shard::new(spec, &excluded), |s, (i, p)| s.add_file(i, p))
    } else {
        args.routes
            .par_iter()
            .enumerate()
            .fold(|| Shard::new(spec, &excluded), |s, (i, p)| s.add_file(i, p))
            .reduce(|| Shard::new(spec, &excluded), Shard::combine)
    };
    if let Some((_, failure)) = shard.error {
        return Err(failure);
    }
    let skipped = shard.builder.skipped();
    let mut db = shard.builder.finish();

    let mut manifest = RunManifest::new("build-db", Some(cfg));
    manifest.inputs = shard.digests.into_values().collect();
    for path in &args.merge {
        let (other, digest) = load_db(path)?;
        db.merge_from(&other)
            .map_err(|e| Failure::from_lib(path.display(), e))?;
        manifest.db.push(digest);
    }
    if let Some(p) = &args.exclude_patents {
        manifest.inputs.push(digest_file(p)?);
    }

    db.save(&args.out)
        .map_err(|e| Failure::from_lib(args.out.display(), e))?;
    manifest.output(&args.out);
    manifest.detail("entries", db.len());
    manifest.detail("routes", db.source_route_count());
    manifest.detail("excluded_routes", skipped);
    manifest.write(&manifest_path(&args.out))?;

    if db.is_empty() && skipped > 0 {
        warn(format!(
            "database is empty: all {} routes were excluded by patent",
            skipped
        ));
    }
    println!(
        "{} entries from {} routes ({} excluded) -> {}",
        db.len(),
        db.source_route_count(),
        skipped,
        args.out.display()
    );
    Ok(())
}
