//! Route scores: Retro-BLEU and the four baselines it is compared against
//! (Badowski cost, cumulative log-probability, length, bigram overlap ratio).
//!
//! Retro-BLEU combines a length penalty with the fraction of a route's
//! reaction n-grams found in the known database:
//!
//! ```text
//! score(r) = exp(L / max(L, len(r))) + exp(f_n(r))
//! ```
//!
//! Both terms lie in `[1, e]`, so a route scores at most `2e`, reached only by
//! routes no longer than `L` whose n-grams are all on record.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::ngram_db::NgramDatabase;
use crate::route::{RouteTree, TokenKind};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ScoreConfig {
    /// Routes longer than this are penalized (`L`).
    pub length_pivot: u32,
    /// N-gram order for the overlap fraction.
    pub n: usize,
    pub token_kind: TokenKind,
    pub template_radius: Option<u8>,
    /// Fixed per-reaction cost in the Badowski score.
    pub epsilon: f64,
    /// Yield assumed for every reaction in the Badowski score.
    pub yield_assumed: f64,
    /// Probability used for reactions without a model probability.
    pub prob_floor: f64,
}

impl Default for ScoreConfig {
    fn default() -> Self {
        ScoreConfig {
            length_pivot: 3,
            n: 2,
            token_kind: TokenKind::Template,
            template_radius: Some(1),
            epsilon: 1.0,
            yield_assumed: 0.8,
            prob_floor: 1e-10,
        }
    }
}

impl ScoreConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::InvalidConfig(m));
        if self.length_pivot < 1 {
            return bad("length pivot L must be >= 1".into());
        }
        if self.n < 2 {
            return bad(format!("n-gram order must be >= 2, got {}", self.n));
        }
        if !(self.yield_assumed > 0.0 && self.yield_assumed <= 1.0) {
            return bad(format!(
                "yield must lie in (0, 1], got {}",
                self.yield_assumed
            ));
        }
        if !(self.prob_floor > 0.0 && self.prob_floor < 1.0) {
            return bad(format!(
                "probability floor must lie in (0, 1), got {}",
                self.prob_floor
            ));
        }
        if !self.epsilon.is_finite() {
            return bad(format!(
                "reaction cost must be finite, got {}",
                self.epsilon
            ));
        }
        match (self.token_kind, self.template_radius) {
            (TokenKind::Reaction, Some(_)) => {
                return bad("template radius set for reaction tokens".into())
            }
            (_, Some(r)) if r > 2 => return bad(format!("template radius {r} outside 0..=2")),
            _ => {}
        }
        Ok(())
    }

    /// Fails unless `db` holds the n-grams this configuration scores with.
    pub fn check_db(&self, db: &NgramDatabase) -> Result<()> {
        if db.n() != self.n {
            return Err(Error::ArityMismatch {
                expected: self.n,
                found: db.n(),
            });
        }
        if db.kind() != self.token_kind {
            return Err(Error::KindMismatch {
                expected: self.token_kind,
                found: db.kind(),
            });
        }
        if let (Some(want), Some(have)) = (self.template_radius, db.radius()) {
            if want != have {
                return Err(Error::MixedRadius {
                    expected: want.to_string(),
                    found: have.to_string(),
                });
            }
        }
        Ok(())
    }
}

/// Recorded-over-total n-gram counts of one route.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Overlap {
    pub fraction: f64,
    pub recorded: usize,
    pub total: usize,
}

/// `f_n(r)`: the share of a route's n-grams present in `db`. A route without
/// any n-gram gets 0.
pub fn ngram_fraction(route: &RouteTree, db: &NgramDatabase) -> Result<Overlap> {
    if let Some(want) = db.radius() {
        if let Some(found) = route
            .reactions()
            .filter_map(|r| r.template_radius)
            .find(|r| *r != want)
        {
            if db.kind() == TokenKind::Template {
                return Err(Error::MixedRadius {
                    expected: want.to_string(),
                    found: found.to_string(),
                });
            }
        }
    }
    let mut key = String::new();
    let (mut recorded, mut total) = (0usize, 0usize);
    route.for_each_window(db.n(), db.kind(), |window| {
        key.clear();
        for (i, tok) in window.iter().enumerate() {
            if i > 0 {
                key.push('\t');
            }
            key.push_str(tok);
        }
        total += 1;
        if db.contains_key(&key) {
            recorded += 1;
        }
    })?;
    let fraction = if total == 0 {
        0.0
    } else {
        recorded as f64 / total as f64
    };
    Ok(Overlap {
        fraction,
        recorded,
        total,
    })
}

/// The Retro-BLEU formula from its two inputs.
pub fn retro_bleu_value(length: usize, fraction: f64, length_pivot: u32) -> f64 {
    let pivot = f64::from(length_pivot);
    let len = length as f64;
    (pivot / pivot.max(len)).exp() + fraction.exp()
}

/// Retro-BLEU of a route; higher is better.
pub fn retro_bleu(route: &RouteTree, db: &NgramDatabase, cfg: &ScoreConfig) -> Result<f64> {
    cfg.check_db(db)?;
    let overlap = ngram_fraction(route, db)?;
    Ok(retro_bleu_value(
        route.length(),
        overlap.fraction,
        cfg.length_pivot,
    ))
}

/// Badowski route cost; lower is better.
///
/// `cost(x) = epsilon + sum(cost(c) / yield)` over the reactions `c` making
/// the reactants of `x`; the route's cost is that of its root reaction.
pub fn badowski_cost(route: &RouteTree, cfg: &ScoreConfig) -> f64 {
    fn cost(rxn: &crate::route::ReactionNode, cfg: &ScoreConfig) -> f64 {
        cfg.epsilon
            + rxn
                .child_reactions()
                .map(|c| cost(c, cfg) / cfg.yield_assumed)
                .sum::<f64>()
    }
    cost(route.root_reaction(), cfg)
}

/// Sum of `ln p` over all reactions; higher (closer to 0) is better.
/// Missing probabilities count as `cfg.prob_floor`.
pub fn cumulative_log_prob(route: &RouteTree, cfg: &ScoreConfig) -> Result<f64> {
    let mut logs = route
        .reactions()
        .map(|rxn| {
            let p = rxn.probability.unwrap_or(cfg.prob_floor);
            if p > 0.0 && p <= 1.0 {
                Ok(p.ln())
            } else {
                Err(Error::ProbOutOfRange { value: p })
            }
        })
        .collect::<Result<Vec<f64>>>()?;
    // Summing in sorted order makes the result independent of tree layout.
    logs.sort_by(f64::total_cmp);
    Ok(logs.iter().sum())
}

/// Number of reactions; lower is better.
pub fn length_score(route: &RouteTree) -> usize {
    route.length()
}

/// Bigram overlap ratio; higher is better. `db` must be a bigram database.
pub fn bigram_ratio_score(route: &RouteTree, db: &NgramDatabase) -> Result<f64> {
    if db.n() != 2 {
        return Err(Error::ArityMismatch {
            expected: 2,
            found: db.n(),
        });
    }
    Ok(ngram_fraction(route, db)?.fraction)
}

/// All five scores of one route.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScoreReport {
    pub route_id: String,
    pub retro_bleu: f64,
    pub f_n: f64,
    pub n_recorded: usize,
    pub n_total: usize,
    pub badowski: f64,
    pub cum_log_prob: f64,
    pub length: usize,
    /// Empty when neither the scoring database nor a separate bigram
    /// database holds bigrams.
    pub bigram_ratio: Option<f64>,
}

/// Scores every metric of one route against `db`. When `db` holds bigrams it
/// also provides the bigram ratio.
pub fn score_route(
    route: &RouteTree,
    db: &NgramDatabase,
    cfg: &ScoreConfig,
) -> Result<ScoreReport> {
    Scorer::new(db, *cfg)?.score(route)
}

/// Scores routes against one database, optionally with a separate bigram
/// database for the bigram-ratio baseline.
#[derive(Debug, Clone, Copy)]
pub struct Scorer<'db> {
    db: &'db NgramDatabase,
    bigram_db: Option<&'db NgramDatabase>,
    cfg: ScoreConfig,
}

impl<'db> Scorer<'db> {
    pub fn new(db: &'db NgramDatabase, cfg: ScoreConfig) -> Result<Self> {
        cfg.validate()?;
        cfg.check_db(db)?;
        let bigram_db = (db.n() == 2).then_some(db);
        Ok(Scorer { db, bigram_db, cfg })
    }

    pub fn with_bigram_db(mut self, bigram_db: &'db NgramDatabase) -> Result<Self> {
        if bigram_db.n() != 2 {
            return Err(Error::ArityMismatch {
                expected: 2,
                found: bigram_db.n(),
            });
        }
        self.bigram_db = Some(bigram_db);
        Ok(self)
    }

    pub fn config(&self) -> &ScoreConfig {
        &self.cfg
    }

    pub fn db(&self) -> &'db NgramDatabase {
        self.db
    }

    pub fn bigram_db(&self) -> Option<&'db NgramDatabase> {
        self.bigram_db
    }

    pub fn score(&self, route: &RouteTree) -> Result<ScoreReport> {
        let overlap = ngram_fraction(route, self.db)?;
        let bigram_ratio = match self.bigram_db {
            Some(db) if std::ptr::eq(db, self.db) => Some(overlap.fraction),
            Some(db) => Some(bigram_ratio_score(route, db)?),
            None => None,
        };
        Ok(ScoreReport {
            route_id: route.route_id().to_string(),
            retro_bleu: retro_bleu_value(route.length(), overlap.fraction, self.cfg.length_pivot),
            f_n: overlap.fraction,
            n_recorded: overlap.recorded,
            n_total: overlap.total,
            badowski: badowski_cost(route, &self.cfg),
            cum_log_prob: cumulative_log_prob(route, &self.cfg)?,
            length: route.length(),
            bigram_ratio,
        })
    }

    /// Scores routes in parallel; output order matches input order.
    pub fn score_batch(&self, routes: &[RouteTree]) -> Vec<Result<ScoreReport>> {
        routes.par_iter().map(|r| self.score(r)).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ngram_db::DbSpec;
    use crate::route::{MoleculeNode, ReactionNode};
    use std::f64::consts::E;

    fn linear(tokens: &[&str]) -> RouteTree {
        let mut mol = MoleculeNode::leaf("C");
        for t in tokens.iter().rev() {
            mol = MoleculeNode::made_by("C", ReactionNode::with_template(*t, vec![mol]));
        }
        RouteTree::new("r", mol).unwrap()
    }

    fn db_with(keys: &[&[&str]]) -> NgramDatabase {
        let mut db = NgramDatabase::empty(DbSpec::new(2, TokenKind::Template, Some(1)).unwrap());
        for k in keys {
            db.insert(k, 1).unwrap();
        }
        db
    }

    #[test]
    fn fraction_cases() {
        let route = linear(&["a", "b", "c", "d", "e"]);
        let all = db_with(&[&["a", "b"], &["b", "c"], &["c", "d"], &["d", "e"]]);
        let full = ngram_fraction(&route, &all).unwrap();
        assert_eq!((full.fraction, full.recorded, full.total), (1.0, 4, 4));

        let half = db_with(&[&["a", "b"], &["d", "e"]]);
        assert_eq!(ngram_fraction(&route, &half).unwrap().fraction, 0.5);

        let short = ngram_fraction(&linear(&["a"]), &all).unwrap();
        assert_eq!((short.fraction, short.recorded, short.total), (0.0, 0, 0));
    }

    #[test]
    fn retro_bleu_formula() {
        let close = |a: f64, b: f64| (a - b).abs() < 1e-12;
        assert!(close(retro_bleu_value(5, 1.0, 3), 0.6f64.exp() + E));
        assert!(close(retro_bleu_value(2, 0.0, 3), E + 1.0));
        assert!(close(retro_bleu_value(3, 1.0, 3), 2.0 * E));
        assert!(close(retro_bleu_value(1, 1.0, 3), 2.0 * E));
        assert!(close(retro_bleu_value(4, 1.0, 3), 0.75f64.exp() + E));
    }

    #[test]
    fn badowski_small_routes() {
        let cfg = ScoreConfig::default();
        assert_eq!(badowski_cost(&linear(&["a"]), &cfg), 1.0);
        assert_eq!(badowski_cost(&linear(&["a", "b"]), &cfg), 2.25);
        let branch = |t: &str| {
            MoleculeNode::made_by(
                "X",
                ReactionNode::with_template(t, vec![MoleculeNode::leaf("N")]),
            )
        };
        let convergent = RouteTree::new(
            "c",
            MoleculeNode::made_by(
                "C",
                ReactionNode::with_template("root", vec![branch("l"), branch("r")]),
            ),
        )
        .unwrap();
        assert_eq!(badowski_cost(&convergent, &cfg), 3.5);
    }

    #[test]
    fn cumulative_probability() {
        let cfg = ScoreConfig::default();
        let mut one = linear(&["a"]).root().clone();
        one.reaction.as_mut().unwrap().probability = Some(1.0);
        assert_eq!(
            cumulative_log_prob(&RouteTree::new("p", one).unwrap(), &cfg).unwrap(),
            0.0
        );

        let mut two = linear(&["a", "b"]);
        let mut root = two.root().clone();
        let outer = root.reaction.as_mut().unwrap();
        outer.probability = Some(0.5);
        outer.reactants[0].reaction.as_mut().unwrap().probability = Some(0.5);
        two = RouteTree::new("p", root).unwrap();
        let got = cumulative_log_prob(&two, &cfg).unwrap();
        assert!((got - (-1.386_294_361_119_890_6)).abs() < 1e-12);

        let missing = cumulative_log_prob(&linear(&["a"]), &cfg).unwrap();
        assert!((missing - (-23.025_850_929_940_457)).abs() < 1e-9);
    }

    #[test]
    fn out_of_range_probability() {
        let cfg = ScoreConfig::default();
        for p in [0.0, -0.1, 1.5] {
            let mut root = linear(&["a"]).root().clone();
            root.reaction.as_mut().unwrap().probability = Some(p);
            let route = RouteTree::new("p", root).unwrap();
            assert!(matches!(
                cumulative_log_prob(&route, &cfg),
                Err(Error::ProbOutOfRange { .. })
            ));
        }
    }

    #[test]
    fn bigram_ratio_needs_bigrams() {
        let route = linear(&["a", "b"]);
        assert_eq!(
            bigram_ratio_score(&route, &db_with(&[&["a", "b"]])).unwrap(),
            1.0
        );
        assert_eq!(bigram_ratio_score(&route, &db_with(&[])).unwrap(), 0.0);
        let tri = NgramDatabase::empty(DbSpec::new(3, TokenKind::Template, Some(1)).unwrap());
        assert!(matches!(
            bigram_ratio_score(&route, &tri),
            Err(Error::ArityMismatch {
                expected: 2,
                found: 3
            })
        ));
    }

    #[test]
    fn minimal_route_report() {
        let report = score_route(&linear(&["a"]), &db_with(&[]), &ScoreConfig::default()).unwrap();
        assert_eq!(report.f_n, 0.0);
        assert!((report.retro_bleu - (E + 1.0)).abs() < 1e-12);
        assert_eq!(report.badowski, 1.0);
        assert_eq!(report.length, 1);
        assert_eq!(report.bigram_ratio, Some(0.0));
    }

    #[test]
    fn trigram_scoring_with_separate_bigram_db() {
        let route = linear(&["a", "b", "c"]);
        let cfg = ScoreConfig {
            n: 3,
            ..Default::default()
        };
        let mut tri = NgramDatabase::empty(DbSpec::new(3, TokenKind::Template, Some(1)).unwrap());
        tri.insert(&["a", "b", "c"], 1).unwrap();
        let bi = db_with(&[&["a", "b"]]);
        let scorer = Scorer::new(&tri, cfg).unwrap();
        assert_eq!(scorer.score(&route).unwrap().bigram_ratio, None);
        let report = scorer.with_bigram_db(&bi).unwrap().score(&route).unwrap();
        assert_eq!(report.f_n, 1.0);
        assert_eq!(report.bigram_ratio, Some(0.5));
        assert!(Scorer::new(&tri, cfg)
            .unwrap()
            .with_bigram_db(&tri)
            .is_err());
    }

    #[test]
    fn config_must_match_db() {
        let db = db_with(&[]);
        let cfg = ScoreConfig {
            n: 3,
            ..Default::default()
        };
        assert!(matches!(
            retro_bleu(&linear(&["a"]), &db, &cfg),
            Err(Error::ArityMismatch { .. })
        ));
        let cfg = ScoreConfig {
            template_radius: Some(2),
            ..Default::default()
        };
        assert!(matches!(
            score_route(&linear(&["a"]), &db, &cfg),
            Err(Error::MixedRadius { .. })
        ));
        let cfg = ScoreConfig {
            token_kind: TokenKind::Reaction,
            template_radius: None,
            ..Default::default()
        };
        assert!(matches!(
            score_route(&linear(&["a"]), &db, &cfg),
            Err(Error::KindMismatch { .. })
        ));
    }

    #[test]
    fn config_validation() {
        assert!(ScoreConfig::default().validate().is_ok());
        for cfg in [
            ScoreConfig {
                length_pivot: 0,
                ..Default::default()
            },
            ScoreConfig {
                n: 1,
                ..Default::default()
            },
            ScoreConfig {
                yield_assumed: 0.0,
                ..Default::default()
            },
            ScoreConfig {
                yield_assumed: 1.2,
                ..Default::default()
            },
            ScoreConfig {
                prob_floor: 1.0,
                ..Default::default()
            },
            ScoreConfig {
                template_radius: Some(3),
                ..Default::default()
            },
        ] {
            assert!(cfg.validate().is_err(), "{cfg:?}");
        }
    }

    #[test]
    fn route_radius_must_match_db() {
        let mut root = linear(&["a", "b"]).root().clone();
        root.reaction.as_mut().unwrap().template_radius = Some(0);
        let route = RouteTree::new("r", root).unwrap();
        assert!(matches!(
            ngram_fraction(&route, &db_with(&[])),
            Err(Error::MixedRadius { .. })
        ));
    }
}
