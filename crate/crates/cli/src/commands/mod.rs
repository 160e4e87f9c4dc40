mod build_db;
mod eval;
mod mine;
mod score;
mod stats;

pub use build_db::{build_db, BuildDbArgs};
pub use eval::{eval, EvalArgs};
pub use mine::{mine_bigrams, MineArgs};
pub use score::{score, ScoreArgs};
pub use stats::{stats, StatsArgs};

use std::fs::File;
use std::io::BufWriter;
use std::path::Path;

use crate::failure::Failure;

pub(crate) fn create(path: &Path) -> Result<BufWriter<File>, Failure> {
    File::create(path)
        .map(BufWriter::new)
        .map_err(|e| Failure::io(format!("{}: {e}", path.display())))
}

pub(crate) fn csv_writer(path: &Path) -> Result<csv::Writer<BufWriter<File>>, Failure> {
    Ok(csv::WriterBuilder::new()
        .has_headers(false)
        .terminator(csv::Terminator::Any(b'\n'))
        .from_writer(create(path)?))
}
