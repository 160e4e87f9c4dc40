//! Seeded generators for random route trees and a synthetic ranking
//! benchmark.
//!
//! The benchmark models template chemistry as a Markov chain: each template
//! has a few plausible follow-up templates. Known and reference routes only
//! use plausible transitions; candidate routes mostly pick templates at
//! random, as an unconstrained planner would. References are short, like
//! typical patent routes; candidates span a wider length range.

use std::collections::HashSet;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::eval::TargetCase;
use crate::route::{MoleculeNode, ReactionNode, RouteTree};

/// Shape parameters for [`random_route`].
#[derive(Debug, Clone, Copy)]
pub struct TreeShape {
    pub reactions: usize,
    /// Chance that a new reaction hangs off a random earlier reaction
    /// instead of extending the most recent one.
    pub branch_prob: f64,
    /// Upper bound on starting-material reactants per reaction.
    pub max_leaves: usize,
}

impl TreeShape {
    pub fn new(reactions: usize, branch_prob: f64) -> Self {
        TreeShape {
            reactions,
            branch_prob,
            max_leaves: 2,
        }
    }
}

/// Generates a random valid route with `shape.reactions` reactions.
///
/// `token` is called once per reaction, parents before children, with the
/// parent reaction's template (`None` for the root) and returns the new
/// reaction's template.
pub fn random_route<R, F>(rng: &mut R, id: &str, shape: TreeShape, mut token: F) -> RouteTree
where
    R: Rng + ?Sized,
    F: FnMut(&mut R, Option<&str>) -> String,
{
    assert!(shape.reactions >= 1, "a route needs at least one reaction");
    let mut templates: Vec<String> = Vec::with_capacity(shape.reactions);
    let mut kids: Vec<Vec<usize>> = Vec::with_capacity(shape.reactions);
    templates.push(token(rng, None));
    kids.push(Vec::new());
    for i in 1..shape.reactions {
        let parent = if rng.gen_bool(shape.branch_prob.clamp(0.0, 1.0)) {
            rng.gen_range(0..i)
        } else {
            i - 1
        };
        let tpl = token(rng, Some(&templates[parent]));
        templates.push(tpl);
        kids.push(Vec::new());
        kids[parent].push(i);
    }

    fn build<R: Rng + ?Sized>(
        rng: &mut R,
        at: usize,
        templates: &[String],
        kids: &[Vec<usize>],
        max_leaves: usize,
    ) -> ReactionNode {
        let mut reactants: Vec<MoleculeNode> = kids[at]
            .iter()
            .map(|&k| {
                MoleculeNode::made_by(format!("I{k}"), build(rng, k, templates, kids, max_leaves))
            })
            .collect();
        let min_leaves = usize::from(reactants.is_empty());
        let leaves = rng.gen_range(min_leaves..=max_leaves.max(min_leaves));
        for j in 0..leaves {
            reactants.push(MoleculeNode::leaf(format!("S{at}_{j}")));
        }
        reactants.shuffle(rng);
        let mut rxn = ReactionNode::with_template(templates[at].clone(), reactants);
        rxn.reaction_smiles = Some(format!("R{at}>>{}", templates[at]));
        rxn.template_radius = Some(1);
        rxn
    }

    let root = build(rng, 0, &templates, &kids, shape.max_leaves);
    RouteTree::new(id, MoleculeNode::made_by("TARGET", root)).expect("generated route is valid")
}

#[derive(Debug, Clone)]
pub struct BenchmarkConfig {
    pub targets: usize,
    pub candidates_per_target: usize,
    pub known_routes: usize,
    pub vocabulary: usize,
    /// Plausible successors per template.
    pub successors: usize,
    /// Chance that a candidate step follows a plausible transition.
    pub candidate_plausible_prob: f64,
    pub branch_prob: f64,
    pub seed: u64,
}

impl Default for BenchmarkConfig {
    fn default() -> Self {
        BenchmarkConfig {
            targets: 200,
            candidates_per_target: 20,
            known_routes: 5_000,
            vocabulary: 400,
            successors: 3,
            candidate_plausible_prob: 0.05,
            branch_prob: 0.2,
            seed: 7,
        }
    }
}

/// A generated benchmark. `known` mixes reference-corpus routes with the
/// reference routes themselves; `excluded_patents` names the references'
/// patents so the database can be built without them.
#[derive(Debug, Clone)]
pub struct Benchmark {
    pub known: Vec<RouteTree>,
    pub cases: Vec<TargetCase>,
    pub excluded_patents: HashSet<String>,
}

fn template_name(i: usize) -> String {
    format!("[C:1]-[*:{}]>>tpl{i:04}", i % 7 + 2)
}

pub fn generate_benchmark(cfg: &BenchmarkConfig) -> Benchmark {
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let vocab: Vec<String> = (0..cfg.vocabulary).map(template_name).collect();
    let index = |t: &str| vocab.iter().position(|v| v == t).expect("known template");
    let successors: Vec<Vec<usize>> = (0..cfg.vocabulary)
        .map(|_| {
            (0..cfg.successors)
                .map(|_| rng.gen_range(0..cfg.vocabulary))
                .collect()
        })
        .collect();

    let mut plausible = |rng: &mut ChaCha8Rng, parent: Option<&str>| -> String {
        match parent {
            None => vocab[rng.gen_range(0..vocab.len())].clone(),
            Some(p) => vocab[*successors[index(p)].choose(rng).expect("successors")].clone(),
        }
    };

    // Patent route lengths cluster around three steps.
    let reference_length = |rng: &mut ChaCha8Rng| match rng.gen_range(0..20) {
        0..=8 => 2,
        9..=15 => 3,
        _ => 4,
    };

    let mut known = Vec::with_capacity(cfg.known_routes + cfg.targets);
    for i in 0..cfg.known_routes {
        let len = rng.gen_range(2..=6);
        let mut route = random_route(
            &mut rng,
            &format!("known-{i}"),
            TreeShape::new(len, cfg.branch_prob),
            &mut plausible,
        );
        tag_patent(&mut route, &format!("KNOWN-{i}"));
        known.push(route);
    }

    let mut cases = Vec::with_capacity(cfg.targets);
    let mut excluded_patents = HashSet::new();
    for t in 0..cfg.targets {
        let len = reference_length(&mut rng);
        let patent = format!("REF-{t}");
        let mut reference = random_route(
            &mut rng,
            &format!("target-{t}/reference"),
            TreeShape::new(len, cfg.branch_prob),
            &mut plausible,
        );
        tag_patent(&mut reference, &patent);
        excluded_patents.insert(patent);
        known.push(reference.clone());

        let candidates = (0..cfg.candidates_per_target)
            .map(|c| {
                let len = rng.gen_range(1..=7);
                let mut route = random_route(
                    &mut rng,
                    &format!("target-{t}/candidate-{c}"),
                    TreeShape::new(len, cfg.branch_prob),
                    |rng, parent| {
                        if parent.is_some() && rng.gen_bool(cfg.candidate_plausible_prob) {
                            plausible(rng, parent)
                        } else {
                            vocab[rng.gen_range(0..vocab.len())].clone()
                        }
                    },
                );
                set_probabilities(&mut route, &mut rng);
                route
            })
            .collect();
        cases.push(
            TargetCase::new(format!("target-{t}"), reference, candidates)
                .expect("candidates are non-empty"),
        );
    }

    Benchmark {
        known,
        cases,
        excluded_patents,
    }
}

fn rebuild(route: &mut RouteTree, f: &mut impl FnMut(&mut ReactionNode)) {
    fn walk(mol: &mut MoleculeNode, f: &mut impl FnMut(&mut ReactionNode)) {
        if let Some(rxn) = mol.reaction.as_deref_mut() {
            f(rxn);
            for r in &mut rxn.reactants {
                walk(r, f);
            }
        }
    }
    let mut root = route.root().clone();
    walk(&mut root, f);
    *route = RouteTree::new(route.route_id(), root).expect("edited route stays valid");
}

fn tag_patent(route: &mut RouteTree, patent: &str) {
    rebuild(route, &mut |rxn| rxn.patent_id = Some(patent.to_string()));
}

fn set_probabilities(route: &mut RouteTree, rng: &mut ChaCha8Rng) {
    rebuild(route, &mut |rxn| {
        rxn.probability = Some(rng.gen_range(0.01..=1.0))
    });
}
