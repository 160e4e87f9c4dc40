use std::path::PathBuf;

use clap::Args;
use retrobleu::mine_bigram_diff;

use super::csv_writer;
use crate::failure::Failure;
use crate::inputs::load_db;
use crate::manifest::{manifest_path, RunManifest};

#[derive(Debug, Args)]
pub struct MineArgs {
    /// Database built from validated routes.
    #[arg(long)]
    pub known: PathBuf,
    /// Database built from generated routes.
    #[arg(long)]
    pub generated: PathBuf,
    /// Entries per list.
    #[arg(long, default_value_t = 20)]
    pub k: usize,
    /// CSV output: polarity,rank,count,token_1..token_n.
    #[arg(long)]
    pub out: PathBuf,
}

pub fn mine_bigrams(args: &MineArgs) -> Result<(), Failure> {
    let (known, known_digest) = load_db(&args.known)?;
    let (generated, generated_digest) = load_db(&args.generated)?;
    let diff = mine_bigram_diff(&known, &generated, args.k).map_err(|e| {
        Failure::input(format!(
            "{} vs {}: {e}",
            args.known.display(),
            args.generated.display()
        ))
    })?;

    let mut csv = csv_writer(&args.out)?;
    let mut header = vec!["polarity".to_string(), "rank".into(), "count".into()];
    header.extend((1..=known.n()).map(|i| format!("token_{i}")));
    csv.write_record(&header)?;
    for (polarity, list) in [("positive", &diff.positive), ("negative", &diff.negative)] {
        for (rank, gram) in list.iter().enumerate() {
            let mut row = vec![
                polarity.to_string(),
                (rank + 1).to_string(),
                gram.count.to_string(),
            ];
            row.extend(gram.tokens.iter().cloned());
            csv.write_record(&row)?;
        }
    }
    csv.flush()?;

    let mut manifest = RunManifest::new("mine-bigrams", None);
    manifest.db = vec![known_digest, generated_digest];
    manifest.output(&args.out);
    manifest.detail("k", args.k);
    manifest.write(&manifest_path(&args.out))?;
    println!(
        "{} positive, {} negative -> {}",
        diff.positive.len(),
        diff.negative.len(),
        args.out.display()
    );
    Ok(())
}
