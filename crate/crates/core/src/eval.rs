//! Ranking of reference routes among model-generated candidates, top-k
//! accuracy tables, corpus overlap statistics and n-gram frequency mining.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::ngram_db::{key_order, NgramDatabase};
use crate::route::RouteTree;
use crate::scoring::{
    badowski_cost, bigram_ratio_score, cumulative_log_prob, ngram_fraction, retro_bleu_value,
    Overlap, ScoreReport, Scorer,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Metric {
    RetroBleu,
    Badowski,
    CumLogProb,
    Length,
    BigramRatio,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Direction {
    HigherIsBetter,
    LowerIsBetter,
}

impl Metric {
    pub const ALL: [Metric; 5] = [
        Metric::RetroBleu,
        Metric::Badowski,
        Metric::CumLogProb,
        Metric::Length,
        Metric::BigramRatio,
    ];

    pub fn direction(self) -> Direction {
        match self {
            Metric::RetroBleu | Metric::CumLogProb | Metric::BigramRatio => {
                Direction::HigherIsBetter
            }
            Metric::Badowski | Metric::Length => Direction::LowerIsBetter,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Metric::RetroBleu => "retro_bleu",
            Metric::Badowski => "badowski",
            Metric::CumLogProb => "cum_log_prob",
            Metric::Length => "length",
            Metric::BigramRatio => "bigram_ratio",
        }
    }

    /// This metric's value in a score report.
    pub fn value(self, report: &ScoreReport) -> Option<f64> {
        match self {
            Metric::RetroBleu => Some(report.retro_bleu),
            Metric::Badowski => Some(report.badowski),
            Metric::CumLogProb => Some(report.cum_log_prob),
            Metric::Length => Some(report.length as f64),
            Metric::BigramRatio => report.bigram_ratio,
        }
    }

    /// Computes only this metric for a route.
    pub fn score(self, route: &RouteTree, scorer: &Scorer<'_>) -> Result<f64> {
        let cfg = scorer.config();
        match self {
            Metric::RetroBleu => {
                let f = ngram_fraction(route, scorer.db())?.fraction;
                Ok(retro_bleu_value(route.length(), f, cfg.length_pivot))
            }
            Metric::Badowski => Ok(badowski_cost(route, cfg)),
            Metric::CumLogProb => cumulative_log_prob(route, cfg),
            Metric::Length => Ok(route.length() as f64),
            Metric::BigramRatio => match scorer.bigram_db() {
                Some(db) => bigram_ratio_score(route, db),
                None => Err(Error::ArityMismatch {
                    expected: 2,
                    found: scorer.db().n(),
                }),
            },
        }
    }
}

impl fmt::Display for Metric {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Metric {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Metric::ALL
            .into_iter()
            .find(|m| m.as_str() == s)
            .ok_or_else(|| Error::InvalidConfig(format!("unknown metric `{s}`")))
    }
}

/// A target molecule with its validated reference route and the routes a
/// planner proposed for it.
#[derive(Debug, Clone)]
pub struct TargetCase {
    pub target_id: String,
    pub reference: RouteTree,
    pub candidates: Vec<RouteTree>,
}

impl TargetCase {
    pub fn new(
        target_id: impl Into<String>,
        reference: RouteTree,
        candidates: Vec<RouteTree>,
    ) -> Result<Self> {
        if candidates.is_empty() {
            return Err(Error::EmptyInput(
                "a target case needs at least one candidate",
            ));
        }
        Ok(TargetCase {
            target_id: target_id.into(),
            reference,
            candidates,
        })
    }

    /// Reference plus candidates.
    pub fn pool_size(&self) -> usize {
        self.candidates.len() + 1
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RankingResult {
    pub target_id: String,
    pub metric: Metric,
    /// Rank if the reference comes first among equally scored routes.
    pub best_rank: usize,
    /// Rank if it comes last.
    pub worst_rank: usize,
    pub pool_size: usize,
}

/// Best- and worst-case 1-based rank of `reference` in a pool made of itself
/// and `candidates`.
pub fn rank_scores(reference: f64, candidates: &[f64], direction: Direction) -> (usize, usize) {
    let better = |a: f64, b: f64| match direction {
        Direction::HigherIsBetter => a > b,
        Direction::LowerIsBetter => a < b,
    };
    let strictly_better = candidates.iter().filter(|&&c| better(c, reference)).count();
    let strictly_worse = candidates.iter().filter(|&&c| better(reference, c)).count();
    let pool = candidates.len() + 1;
    (1 + strictly_better, pool - strictly_worse)
}

/// Ranks a case's reference route under one metric.
pub fn rank_case(case: &TargetCase, metric: Metric, scorer: &Scorer<'_>) -> Result<RankingResult> {
    let reference = metric.score(&case.reference, scorer)?;
    let candidates = case
        .candidates
        .iter()
        .map(|c| metric.score(c, scorer))
        .collect::<Result<Vec<_>>>()?;
    let (best_rank, worst_rank) = rank_scores(reference, &candidates, metric.direction());
    Ok(RankingResult {
        target_id: case.target_id.clone(),
        metric,
        best_rank,
        worst_rank,
        pool_size: case.pool_size(),
    })
}

/// Ranks a case under several metrics, scoring each route once.
pub fn evaluate_case(
    case: &TargetCase,
    metrics: &[Metric],
    scorer: &Scorer<'_>,
) -> Result<Vec<RankingResult>> {
    let reference = scorer.score(&case.reference)?;
    let candidates = case
        .candidates
        .iter()
        .map(|c| scorer.score(c))
        .collect::<Result<Vec<_>>>()?;
    metrics
        .iter()
        .map(|&metric| {
            let missing = || Error::ArityMismatch {
                expected: 2,
                found: scorer.db().n(),
            };
            let r = metric.value(&reference).ok_or_else(missing)?;
            let c = candidates
                .iter()
                .map(|rep| metric.value(rep).ok_or_else(missing))
                .collect::<Result<Vec<_>>>()?;
            let (best_rank, worst_rank) = rank_scores(r, &c, metric.direction());
            Ok(RankingResult {
                target_id: case.target_id.clone(),
                metric,
                best_rank,
                worst_rank,
                pool_size: case.pool_size(),
            })
        })
        .collect()
}

/// Evaluates cases in parallel. Each element holds one case's results, in
/// the order of `metrics`; outer order follows `cases`.
pub fn evaluate_cases(
    cases: &[TargetCase],
    metrics: &[Metric],
    scorer: &Scorer<'_>,
) -> Vec<Result<Vec<RankingResult>>> {
    cases
        .par_iter()
        .map(|case| evaluate_case(case, metrics, scorer))
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TopkRow {
    pub k: usize,
    pub best_acc: f64,
    pub worst_acc: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TopkTable {
    pub metric: Metric,
    pub cases: usize,
    pub rows: Vec<TopkRow>,
}

impl TopkTable {
    pub fn row(&self, k: usize) -> Option<&TopkRow> {
        self.rows.iter().find(|r| r.k == k)
    }
}

/// Share of cases whose reference lands within the top `k`, for each `k`,
/// under best- and worst-case tie placement.
pub fn topk_table(results: &[RankingResult], ks: &[usize]) -> Result<TopkTable> {
    let Some(first) = results.first() else {
        return Err(Error::EmptyInput("no ranking results"));
    };
    if let Some(other) = results.iter().find(|r| r.metric != first.metric) {
        return Err(Error::MixedMetrics {
            first: first.metric.to_string(),
            other: other.metric.to_string(),
        });
    }
    let total = results.len() as f64;
    let mut ks = ks.to_vec();
    ks.sort_unstable();
    ks.dedup();
    let rows = ks
        .into_iter()
        .map(|k| TopkRow {
            k,
            best_acc: results.iter().filter(|r| r.best_rank <= k).count() as f64 / total,
            worst_acc: results.iter().filter(|r| r.worst_rank <= k).count() as f64 / total,
        })
        .collect();
    Ok(TopkTable {
        metric: first.metric,
        cases: results.len(),
        rows,
    })
}

/// Corpus-level overlap: mean `f_n`, share of routes with at least one
/// n-gram, and mean route length.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OverlapStats {
    pub n: usize,
    /// Routes without n-grams count as 0 here.
    pub mean_fraction: f64,
    pub coverage: f64,
    pub avg_length: f64,
    pub route_count: u64,
}

/// Order-independent accumulator behind [`aggregate_overlap`]. Fractions are
/// tallied by their exact `(total, recorded)` pair and only summed at the end,
/// so the result is identical for any route order or sharding.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct OverlapAccumulator {
    tally: BTreeMap<(usize, usize), u64>,
    routes: u64,
    covered: u64,
    length_sum: u64,
}

impl OverlapAccumulator {
    pub fn add(&mut self, overlap: &Overlap, length: usize) {
        self.routes += 1;
        self.length_sum += length as u64;
        if overlap.total > 0 {
            self.covered += 1;
            *self
                .tally
                .entry((overlap.total, overlap.recorded))
                .or_insert(0) += 1;
        }
    }

    pub fn merge(&mut self, other: &OverlapAccumulator) {
        for (k, c) in &other.tally {
            *self.tally.entry(*k).or_insert(0) += c;
        }
        self.routes += other.routes;
        self.covered += other.covered;
        self.length_sum += other.length_sum;
    }

    pub fn finish(&self, n: usize) -> Result<OverlapStats> {
        if self.routes == 0 {
            return Err(Error::EmptyInput("no routes to aggregate"));
        }
        let routes = self.routes as f64;
        let fraction_sum: f64 = self
            .tally
            .iter()
            .map(|(&(total, recorded), &count)| count as f64 * recorded as f64 / total as f64)
            .fold(0.0, |a, b| a + b);
        Ok(OverlapStats {
            n,
            mean_fraction: fraction_sum / routes,
            coverage: self.covered as f64 / routes,
            avg_length: self.length_sum as f64 / routes,
            route_count: self.routes,
        })
    }
}

pub fn aggregate_overlap<'a, I>(routes: I, db: &NgramDatabase, n: usize) -> Result<OverlapStats>
where
    I: IntoIterator<Item = &'a RouteTree>,
{
    if n != db.n() {
        return Err(Error::ArityMismatch {
            expected: db.n(),
            found: n,
        });
    }
    let mut acc = OverlapAccumulator::default();
    for route in routes {
        acc.add(&ngram_fraction(route, db)?, route.length());
    }
    acc.finish(n)
}

/// One mined n-gram.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct MinedNgram {
    pub tokens: Vec<String>,
    pub count: u64,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct NgramDiff {
    /// Most frequent n-grams of the known routes.
    pub positive: Vec<MinedNgram>,
    /// Most frequent generated n-grams never seen in known routes.
    pub negative: Vec<MinedNgram>,
}

fn top_k<'a>(entries: impl Iterator<Item = (&'a str, u64)>, k: usize) -> Vec<MinedNgram> {
    let mut v: Vec<(&str, u64)> = entries.collect();
    v.sort_unstable_by(|a, b| b.1.cmp(&a.1).then_with(|| key_order(a.0, b.0)));
    v.truncate(k);
    v.into_iter()
        .map(|(key, count)| MinedNgram {
            tokens: key.split('\t').map(str::to_string).collect(),
            count,
        })
        .collect()
}

/// Frequent known n-grams and frequent generated-only n-grams. Ties in count
/// are broken by token order.
pub fn mine_bigram_diff(
    known: &NgramDatabase,
    generated: &NgramDatabase,
    k: usize,
) -> Result<NgramDiff> {
    known.spec().ensure_compatible(&generated.spec())?;
    Ok(NgramDiff {
        positive: top_k(known.iter(), k),
        negative: top_k(
            generated.iter().filter(|(key, _)| !known.contains_key(key)),
            k,
        ),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ngram_db::DbSpec;
    use crate::route::{MoleculeNode, ReactionNode, TokenKind};
    use crate::scoring::ScoreConfig;

    fn linear(id: &str, tokens: &[&str]) -> RouteTree {
        let mut mol = MoleculeNode::leaf("C");
        for t in tokens.iter().rev() {
            mol = MoleculeNode::made_by("C", ReactionNode::with_template(*t, vec![mol]));
        }
        RouteTree::new(id, mol).unwrap()
    }

    fn db_with(keys: &[(&[&str], u64)]) -> NgramDatabase {
        let mut db = NgramDatabase::empty(DbSpec::new(2, TokenKind::Template, Some(1)).unwrap());
        for (k, c) in keys {
            db.insert(k, *c).unwrap();
        }
        db
    }

    fn result(best: usize, worst: usize) -> RankingResult {
        RankingResult {
            target_id: "t".into(),
            metric: Metric::Length,
            best_rank: best,
            worst_rank: worst,
            pool_size: worst.max(3),
        }
    }

    #[test]
    fn directions_are_fixed() {
        assert_eq!(Metric::RetroBleu.direction(), Direction::HigherIsBetter);
        assert_eq!(Metric::CumLogProb.direction(), Direction::HigherIsBetter);
        assert_eq!(Metric::BigramRatio.direction(), Direction::HigherIsBetter);
        assert_eq!(Metric::Badowski.direction(), Direction::LowerIsBetter);
        assert_eq!(Metric::Length.direction(), Direction::LowerIsBetter);
        for m in Metric::ALL {
            assert_eq!(m.as_str().parse::<Metric>().unwrap(), m);
        }
        assert!("bleu".parse::<Metric>().is_err());
    }

    #[test]
    fn rank_semantics() {
        assert_eq!(
            rank_scores(5.0, &[1.0, 2.0], Direction::HigherIsBetter),
            (1, 1)
        );
        assert_eq!(
            rank_scores(5.0, &[5.0, 5.0, 1.0], Direction::HigherIsBetter),
            (1, 3)
        );
        assert_eq!(
            rank_scores(2.0, &[1.0, 2.0, 3.0], Direction::LowerIsBetter),
            (2, 3)
        );
        assert_eq!(rank_scores(2.0, &[], Direction::LowerIsBetter), (1, 1));
    }

    #[test]
    fn rank_case_uses_metric_direction() {
        let db = db_with(&[(&["a", "b"], 1), (&["b", "c"], 1)]);
        let scorer = Scorer::new(&db, ScoreConfig::default()).unwrap();
        let case = TargetCase::new(
            "t1",
            linear("ref", &["a", "b", "c"]),
            vec![
                linear("c1", &["x", "y"]),
                linear("c2", &["q"]),
                linear("c3", &["x", "y", "z", "w"]),
            ],
        )
        .unwrap();
        let bleu = rank_case(&case, Metric::RetroBleu, &scorer).unwrap();
        assert_eq!((bleu.best_rank, bleu.worst_rank, bleu.pool_size), (1, 1, 4));
        let len = rank_case(&case, Metric::Length, &scorer).unwrap();
        assert_eq!((len.best_rank, len.worst_rank), (3, 3));
        let all = evaluate_case(&case, &Metric::ALL, &scorer).unwrap();
        for r in &all {
            assert_eq!(r, &rank_case(&case, r.metric, &scorer).unwrap());
        }
    }

    #[test]
    fn case_needs_candidates() {
        assert!(TargetCase::new("t", linear("r", &["a"]), vec![]).is_err());
    }

    #[test]
    fn topk_examples() {
        let table = topk_table(&[result(1, 3)], &[3, 1]).unwrap();
        let rows: Vec<_> = table
            .rows
            .iter()
            .map(|r| (r.k, r.best_acc, r.worst_acc))
            .collect();
        assert_eq!(rows, [(1, 1.0, 0.0), (3, 1.0, 1.0)]);

        let table = topk_table(&[result(1, 1), result(1, 1)], &[1, 5]).unwrap();
        assert!(table
            .rows
            .iter()
            .all(|r| r.best_acc == 1.0 && r.worst_acc == 1.0));

        assert!(matches!(topk_table(&[], &[1]), Err(Error::EmptyInput(_))));
        let mut other = result(1, 1);
        other.metric = Metric::RetroBleu;
        assert!(matches!(
            topk_table(&[result(1, 1), other], &[1]),
            Err(Error::MixedMetrics { .. })
        ));
    }

    #[test]
    fn overlap_statistics() {
        let db = db_with(&[(&["a", "b"], 1), (&["b", "c"], 1)]);
        let full = [linear("1", &["a", "b", "c"]), linear("2", &["a", "b"])];
        let stats = aggregate_overlap(&full, &db, 2).unwrap();
        assert_eq!(
            (stats.mean_fraction, stats.coverage, stats.avg_length),
            (1.0, 1.0, 2.5)
        );

        let short = [linear("1", &["a"]), linear("2", &["b"])];
        let stats = aggregate_overlap(&short, &db, 2).unwrap();
        assert_eq!((stats.mean_fraction, stats.coverage), (0.0, 0.0));
        assert!(stats.mean_fraction.is_sign_positive());

        let mixed = [linear("1", &["a", "b", "x"]), linear("2", &["a"])];
        let stats = aggregate_overlap(&mixed, &db, 2).unwrap();
        assert_eq!((stats.mean_fraction, stats.coverage), (0.25, 0.5));

        assert!(matches!(
            aggregate_overlap(&mixed, &db, 3),
            Err(Error::ArityMismatch { .. })
        ));
        assert!(matches!(
            aggregate_overlap([], &db, 2),
            Err(Error::EmptyInput(_))
        ));
    }

    #[test]
    fn mining_examples() {
        let known = db_with(&[(&["a", "b"], 5), (&["b", "c"], 2), (&["c", "d"], 5)]);
        let generated = db_with(&[
            (&["a", "b"], 9),
            (&["x", "y"], 3),
            (&["p", "q"], 3),
            (&["z", "z"], 1),
        ]);
        let diff = mine_bigram_diff(&known, &generated, 2).unwrap();
        let keys = |v: &[MinedNgram]| {
            v.iter()
                .map(|m| (m.tokens.join(" "), m.count))
                .collect::<Vec<_>>()
        };
        assert_eq!(
            keys(&diff.positive),
            [("a b".to_string(), 5), ("c d".to_string(), 5)]
        );
        assert_eq!(
            keys(&diff.negative),
            [("p q".to_string(), 3), ("x y".to_string(), 3)]
        );

        let subset = db_with(&[(&["a", "b"], 1)]);
        assert!(mine_bigram_diff(&known, &subset, 10)
            .unwrap()
            .negative
            .is_empty());

        let empty = db_with(&[]);
        let diff = mine_bigram_diff(&empty, &generated, 10).unwrap();
        assert_eq!(diff.negative.len(), 4);
        assert!(diff.positive.is_empty());

        let tri = NgramDatabase::empty(DbSpec::new(3, TokenKind::Template, Some(1)).unwrap());
        assert!(mine_bigram_diff(&known, &tri, 1).is_err());
        let rxn = NgramDatabase::empty(DbSpec::new(2, TokenKind::Reaction, None).unwrap());
        assert!(matches!(
            mine_bigram_diff(&known, &rxn, 1),
            Err(Error::KindMismatch { .. })
        ));
    }
}
