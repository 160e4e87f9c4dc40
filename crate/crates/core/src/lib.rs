//! Plausibility scoring for retrosynthesis routes.
//!
//! Routes are compared against a database of reaction (or template) n-grams
//! harvested from experimentally validated routes. The crate provides:
//!
//! - [`route`]: route trees, their JSON interchange format and n-gram
//!   extraction along parent-to-child reaction chains;
//! - [`ngram_db`]: the known n-gram database and its sorted text format;
//! - [`scoring`]: Retro-BLEU and the Badowski, cumulative-probability, length
//!   and bigram-ratio baselines;
//! - [`eval`]: best/worst-case ranking of reference routes, top-k tables,
//!   corpus overlap statistics and frequent n-gram mining;
//! - [`synth`]: seeded random routes and a synthetic ranking benchmark.

pub mod error;
pub mod eval;
pub mod ngram_db;
pub mod route;
pub mod scoring;
pub mod synth;

pub use error::{Error, Result};
pub use eval::{
    aggregate_overlap, evaluate_case, evaluate_cases, mine_bigram_diff, rank_case, rank_scores,
    topk_table, Direction, Metric, MinedNgram, NgramDiff, OverlapAccumulator, OverlapStats,
    RankingResult, TargetCase, TopkRow, TopkTable,
};
pub use ngram_db::{DbBuilder, DbSpec, NgramDatabase};
pub use route::{
    parse_route, parse_route_file, route_from_value, MoleculeNode, Ngram, ReactionNode, RouteTree,
    TokenKind,
};
pub use scoring::{
    badowski_cost, bigram_ratio_score, cumulative_log_prob, length_score, ngram_fraction,
    retro_bleu, retro_bleu_value, score_route, Overlap, ScoreConfig, ScoreReport, Scorer,
};
