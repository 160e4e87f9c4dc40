//! Shared generators and brute-force oracles for the integration tests.
//! The oracles deliberately avoid the library's traversal code.
#![allow(dead_code)]

use std::collections::{BTreeMap, HashSet};
use std::path::PathBuf;

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use retrobleu::synth::{random_route, TreeShape};
use retrobleu::{DbSpec, MoleculeNode, NgramDatabase, ReactionNode, RouteTree, TokenKind};

pub fn fixtures_dir() -> PathBuf {
    PathBuf::from(concat!(env!("CARGO_MANIFEST_DIR"), "/../../fixtures"))
}

pub fn bigram_spec() -> DbSpec {
    DbSpec::new(2, TokenKind::Template, Some(1)).unwrap()
}

/// Random tree with 1..=max_reactions reactions. Templates come from a
/// vocabulary of `vocab` tokens, so repeats occur when it is small.
pub fn random_tree(
    rng: &mut ChaCha8Rng,
    id: &str,
    max_reactions: usize,
    vocab: usize,
) -> RouteTree {
    let reactions = rng.gen_range(1..=max_reactions);
    let branch = rng.gen_range(0.0..=1.0);
    random_route(rng, id, TreeShape::new(reactions, branch), |rng, _| {
        format!("t{}", rng.gen_range(0..vocab))
    })
}

pub fn random_linear(rng: &mut ChaCha8Rng, id: &str, reactions: usize, vocab: usize) -> RouteTree {
    random_route(rng, id, TreeShape::new(reactions, 0.0), |rng, _| {
        format!("t{}", rng.gen_range(0..vocab))
    })
}

/// Builds a linear route directly from templates, root reaction first.
pub fn linear_route(id: &str, templates: &[&str]) -> RouteTree {
    let mut mol = MoleculeNode::leaf("C");
    for t in templates.iter().rev() {
        let mut rxn = ReactionNode::with_template(*t, vec![mol, MoleculeNode::leaf("O")]);
        rxn.template_radius = Some(1);
        mol = MoleculeNode::made_by("CC", rxn);
    }
    RouteTree::new(id, mol).unwrap()
}

/// Every root-to-leaf path of reactions, as (pre-order id, template) pairs.
fn root_to_leaf_paths(route: &RouteTree) -> Vec<Vec<(usize, String)>> {
    fn walk(
        mol: &MoleculeNode,
        path: &mut Vec<(usize, String)>,
        next_id: &mut usize,
        out: &mut Vec<Vec<(usize, String)>>,
    ) {
        match &mol.reaction {
            None => out.push(path.clone()),
            Some(rxn) => {
                path.push((*next_id, rxn.template.clone().unwrap()));
                *next_id += 1;
                for reactant in &rxn.reactants {
                    walk(reactant, path, next_id, out);
                }
                path.pop();
            }
        }
    }
    let mut out = Vec::new();
    walk(route.root(), &mut Vec::new(), &mut 0, &mut out);
    out
}

/// Brute-force n-gram oracle: all sliding windows over all root-to-leaf
/// paths, deduplicated by node-identity tuple.
pub fn oracle_windows(route: &RouteTree, n: usize) -> BTreeMap<Vec<usize>, Vec<String>> {
    let mut windows = BTreeMap::new();
    for path in root_to_leaf_paths(route) {
        if path.len() < n {
            continue;
        }
        for w in path.windows(n) {
            let ids = w.iter().map(|(i, _)| *i).collect();
            let toks = w.iter().map(|(_, t)| t.clone()).collect();
            windows.insert(ids, toks);
        }
    }
    windows
}

/// Tally of every window over a corpus, via the oracle.
pub fn oracle_tally<'a>(
    routes: impl IntoIterator<Item = &'a RouteTree>,
    n: usize,
    excluded: &HashSet<String>,
) -> BTreeMap<String, u64> {
    let mut tally = BTreeMap::new();
    for r in routes {
        if r.source_patent_ids().iter().any(|p| excluded.contains(p)) {
            continue;
        }
        for toks in oracle_windows(r, n).into_values() {
            *tally.entry(toks.join("\t")).or_insert(0) += 1;
        }
    }
    tally
}

pub fn random_token(rng: &mut ChaCha8Rng) -> String {
    const ALPHABET: &[char] = &[
        'C', 'N', 'O', 'c', 'n', '[', ']', '(', ')', '=', '#', '-', '+', ':', ';', '@', '>', '.',
        '1', '2', '3', 'H', 'D', '*', 'é', 'λ', ' ', '\u{1}',
    ];
    let len = rng.gen_range(1..=12);
    (0..len)
        .map(|_| ALPHABET[rng.gen_range(0..ALPHABET.len())])
        .collect()
}

/// A database with `entries` distinct random keys and random counts.
pub fn random_db(rng: &mut ChaCha8Rng, spec: DbSpec, entries: usize) -> NgramDatabase {
    let mut db = NgramDatabase::empty(spec);
    while db.len() < entries {
        let toks: Vec<String> = (0..spec.n).map(|_| random_token(rng)).collect();
        let refs: Vec<&str> = toks.iter().map(String::as_str).collect();
        db.insert(&refs, rng.gen_range(1..=1000)).unwrap();
    }
    db.set_source_route_count(rng.gen_range(0..1_000_000));
    db
}

/// Sort-and-scan rank oracle: orders the pool best-first and reads off the
/// first and last position of the reference's tie group.
pub fn oracle_rank(reference: f64, candidates: &[f64], higher_is_better: bool) -> (usize, usize) {
    let mut pool: Vec<(f64, bool)> = candidates.iter().map(|&c| (c, false)).collect();
    pool.push((reference, true));
    pool.sort_by(|a, b| {
        let ord = a.0.partial_cmp(&b.0).unwrap();
        if higher_is_better {
            ord.reverse()
        } else {
            ord
        }
    });
    let positions: Vec<usize> = pool
        .iter()
        .enumerate()
        .filter(|(_, (s, _))| *s == reference)
        .map(|(i, _)| i + 1)
        .collect();
    (*positions.first().unwrap(), *positions.last().unwrap())
}

/// Rebuilds `route` after applying `f` to each reaction in pre-order.
pub fn map_reactions(route: &RouteTree, mut f: impl FnMut(&mut ReactionNode)) -> RouteTree {
    fn walk(mol: &mut MoleculeNode, f: &mut dyn FnMut(&mut ReactionNode)) {
        if let Some(rxn) = mol.reaction.as_mut() {
            f(rxn);
            for r in &mut rxn.reactants {
                walk(r, f);
            }
        }
    }
    let mut root = route.root().clone();
    walk(&mut root, &mut f);
    RouteTree::new(route.route_id(), root).unwrap()
}

/// Gives every reaction a distinct template, numbered in pre-order.
pub fn relabel_unique(route: &RouteTree) -> RouteTree {
    let mut i = 0;
    map_reactions(route, |rxn| {
        rxn.template = Some(format!("u{i}"));
        i += 1;
    })
}
