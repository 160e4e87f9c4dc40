//! Retrosynthesis route trees.
//!
//! A route alternates molecule and reaction nodes, starting from the target
//! molecule. Every molecule is either a starting material (no children) or is
//! made by exactly one reaction; every reaction consumes one or more reactant
//! molecules. Reaction and template strings are opaque tokens here: nothing in
//! this crate parses SMILES or SMARTS.
//!
//! The interchange format mirrors the JSON emitted by tree-based synthesis
//! planners:
//!
//! ```json
//! {"type": "mol", "smiles": "CC(=O)Nc1ccccc1", "children": [
//!   {"type": "reaction",
//!    "metadata": {"template": "...", "template_radius": 1, "policy_probability": 0.4},
//!    "children": [
//!      {"type": "mol", "smiles": "CC(=O)Cl", "in_stock": true},
//!      {"type": "mol", "smiles": "Nc1ccccc1", "in_stock": true}]}]}
//! ```

use std::collections::BTreeSet;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use serde_json::{Map, Value};

use crate::error::{Error, Result};

/// Which string of a reaction node an n-gram is built from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TokenKind {
    /// The canonical reaction SMILES.
    Reaction,
    /// The extracted reaction template (SMARTS).
    Template,
}

impl TokenKind {
    pub fn as_str(self) -> &'static str {
        match self {
            TokenKind::Reaction => "reaction",
            TokenKind::Template => "template",
        }
    }
}

impl fmt::Display for TokenKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for TokenKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "reaction" => Ok(TokenKind::Reaction),
            "template" => Ok(TokenKind::Template),
            other => Err(Error::InvalidConfig(format!(
                "unknown token kind `{other}` (expected `reaction` or `template`)"
            ))),
        }
    }
}

/// A molecule in a route. Leaves are starting materials.
#[derive(Debug, Clone, PartialEq)]
pub struct MoleculeNode {
    pub smiles: String,
    pub in_stock: bool,
    /// The reaction producing this molecule, if it is not a starting material.
    pub reaction: Option<Box<ReactionNode>>,
}

impl MoleculeNode {
    pub fn leaf(smiles: impl Into<String>) -> Self {
        MoleculeNode {
            smiles: smiles.into(),
            in_stock: true,
            reaction: None,
        }
    }

    pub fn made_by(smiles: impl Into<String>, reaction: ReactionNode) -> Self {
        MoleculeNode {
            smiles: smiles.into(),
            in_stock: false,
            reaction: Some(Box::new(reaction)),
        }
    }

    pub fn is_leaf(&self) -> bool {
        self.reaction.is_none()
    }
}

/// A single reaction step. `reactants` are its child molecules.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct ReactionNode {
    pub reaction_smiles: Option<String>,
    pub template: Option<String>,
    pub template_radius: Option<u8>,
    /// Single-step model confidence for this step.
    pub probability: Option<f64>,
    pub patent_id: Option<String>,
    /// Metadata keys this crate does not interpret, kept for round-tripping.
    pub extra_metadata: Map<String, Value>,
    pub reactants: Vec<MoleculeNode>,
}

impl ReactionNode {
    pub fn with_template(template: impl Into<String>, reactants: Vec<MoleculeNode>) -> Self {
        ReactionNode {
            template: Some(template.into()),
            reactants,
            ..Default::default()
        }
    }

    pub fn token(&self, kind: TokenKind) -> Option<&str> {
        match kind {
            TokenKind::Reaction => self.reaction_smiles.as_deref(),
            TokenKind::Template => self.template.as_deref(),
        }
    }

    /// Reactions that make this reaction's reactants, in reactant order.
    pub fn child_reactions(&self) -> impl Iterator<Item = &ReactionNode> {
        self.reactants.iter().filter_map(|m| m.reaction.as_deref())
    }
}

/// An ordered run of `n` tokens taken along a parent-to-child reaction chain.
/// Position 0 is the reaction closest to the target.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Ngram {
    pub kind: TokenKind,
    pub tokens: Vec<String>,
}

impl Ngram {
    pub fn new(kind: TokenKind, tokens: Vec<String>) -> Self {
        Ngram { kind, tokens }
    }

    pub fn n(&self) -> usize {
        self.tokens.len()
    }

    /// Tokens joined with TAB, the database key form.
    pub fn key(&self) -> String {
        self.tokens.join("\t")
    }
}

/// A validated route tree rooted at its target molecule.
#[derive(Debug, Clone, PartialEq)]
pub struct RouteTree {
    route_id: String,
    source_patent_ids: BTreeSet<String>,
    root: MoleculeNode,
    length: usize,
}

impl RouteTree {
    /// Validates `root` and wraps it. Patent ids are collected from the
    /// reaction nodes.
    pub fn new(route_id: impl Into<String>, root: MoleculeNode) -> Result<Self> {
        validate_molecule(&root, "$")?;
        let Some(_) = root.reaction else {
            return Err(Error::EmptyRoute);
        };
        let mut tree = RouteTree {
            route_id: route_id.into(),
            source_patent_ids: BTreeSet::new(),
            root,
            length: 0,
        };
        let mut length = 0;
        let mut patents = BTreeSet::new();
        for rxn in tree.reactions() {
            length += 1;
            if let Some(p) = &rxn.patent_id {
                patents.insert(p.clone());
            }
        }
        tree.length = length;
        tree.source_patent_ids = patents;
        Ok(tree)
    }

    pub fn route_id(&self) -> &str {
        &self.route_id
    }

    pub fn set_route_id(&mut self, id: impl Into<String>) {
        self.route_id = id.into();
    }

    pub fn source_patent_ids(&self) -> &BTreeSet<String> {
        &self.source_patent_ids
    }

    pub fn root(&self) -> &MoleculeNode {
        &self.root
    }

    /// The target's reaction. Always present in a valid tree.
    pub fn root_reaction(&self) -> &ReactionNode {
        self.root
            .reaction
            .as_deref()
            .expect("validated route has a root reaction")
    }

    /// Number of reaction nodes.
    pub fn length(&self) -> usize {
        self.length
    }

    /// True when no reaction has more than one child reaction.
    pub fn is_linear(&self) -> bool {
        self.reactions().all(|r| r.child_reactions().count() <= 1)
    }

    /// Reaction nodes in depth-first pre-order, reactants in file order.
    pub fn reactions(&self) -> Reactions<'_> {
        Reactions {
            stack: self.root.reaction.as_deref().into_iter().collect(),
        }
    }

    /// Visits every reaction with the chain of reactions from the root down
    /// to it (inclusive), in pre-order.
    fn walk_chains<'a>(&'a self, visit: &mut impl FnMut(&[&'a ReactionNode])) {
        fn go<'a>(
            mol: &'a MoleculeNode,
            chain: &mut Vec<&'a ReactionNode>,
            visit: &mut impl FnMut(&[&'a ReactionNode]),
        ) {
            if let Some(rxn) = mol.reaction.as_deref() {
                chain.push(rxn);
                visit(chain);
                for reactant in &rxn.reactants {
                    go(reactant, chain, visit);
                }
                chain.pop();
            }
        }
        let mut chain = Vec::with_capacity(self.length);
        go(&self.root, &mut chain, visit);
    }

    /// Pre-order indices of the reactions forming each n-reaction chain.
    ///
    /// A chain is identified by its deepest reaction, so each one is produced
    /// exactly once, at the moment the walk reaches that reaction.
    pub fn reaction_chains(&self, n: usize) -> Vec<Vec<usize>> {
        let mut out = Vec::new();
        let mut index_chain: Vec<usize> = Vec::new();
        let mut next = 0usize;
        self.walk_chains(&mut |chain| {
            index_chain.truncate(chain.len() - 1);
            index_chain.push(next);
            next += 1;
            if n > 0 && chain.len() >= n {
                out.push(index_chain[chain.len() - n..].to_vec());
            }
        });
        out
    }

    /// Calls `f` with the tokens of every n-reaction chain, in deterministic
    /// pre-order. Fails on the first reaction lacking a token of `kind`.
    pub fn for_each_window(
        &self,
        n: usize,
        kind: TokenKind,
        mut f: impl FnMut(&[&str]),
    ) -> Result<()> {
        let mut tokens: Vec<&str> = Vec::with_capacity(self.length);
        let mut index = 0usize;
        let mut missing = None;
        self.walk_chains(&mut |chain| {
            if missing.is_some() {
                return;
            }
            tokens.truncate(chain.len() - 1);
            match chain[chain.len() - 1].token(kind) {
                Some(tok) => tokens.push(tok),
                None => {
                    missing = Some(index);
                    return;
                }
            }
            index += 1;
            if n > 0 && tokens.len() >= n {
                f(&tokens[tokens.len() - n..]);
            }
        });
        match missing {
            Some(reaction) => Err(Error::MissingToken {
                route_id: self.route_id.clone(),
                reaction,
                kind,
            }),
            None => Ok(()),
        }
    }

    /// All n-grams of the route, one per distinct reaction chain.
    pub fn extract_ngrams(&self, n: usize, kind: TokenKind) -> Result<Vec<Ngram>> {
        check_order(n)?;
        let mut out = Vec::new();
        self.for_each_window(n, kind, |w| {
            out.push(Ngram::new(kind, w.iter().map(|t| t.to_string()).collect()));
        })?;
        Ok(out)
    }

    /// Number of n-reaction chains, i.e. reactions at depth n or deeper.
    pub fn count_ngrams(&self, n: usize) -> usize {
        if n == 0 {
            return 0;
        }
        let mut count = 0;
        self.walk_chains(&mut |chain| {
            if chain.len() >= n {
                count += 1;
            }
        });
        count
    }

    /// Interchange JSON for this route.
    pub fn to_value(&self) -> Value {
        let mut v = molecule_to_value(&self.root);
        if let Value::Object(obj) = &mut v {
            obj.insert("route_id".into(), Value::String(self.route_id.clone()));
        }
        v
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(&self.to_value()).expect("route serializes")
    }
}

pub(crate) fn check_order(n: usize) -> Result<()> {
    if n < 2 {
        return Err(Error::InvalidConfig(format!(
            "n-gram order must be >= 2, got {n}"
        )));
    }
    Ok(())
}

/// Pre-order iterator over reaction nodes.
pub struct Reactions<'a> {
    stack: Vec<&'a ReactionNode>,
}

impl<'a> Iterator for Reactions<'a> {
    type Item = &'a ReactionNode;

    fn next(&mut self) -> Option<Self::Item> {
        let rxn = self.stack.pop()?;
        let start = self.stack.len();
        self.stack.extend(rxn.child_reactions());
        self.stack[start..].reverse();
        Some(rxn)
    }
}

fn validate_token(value: &str, path: &str, field: &'static str) -> Result<()> {
    if value.is_empty() {
        return Err(Error::InvalidField {
            path: path.to_string(),
            field,
            reason: "must be non-empty".into(),
        });
    }
    if value.contains(['\t', '\n', '\r']) {
        return Err(Error::InvalidField {
            path: path.to_string(),
            field,
            reason: "must not contain TAB or line breaks".into(),
        });
    }
    Ok(())
}

fn validate_molecule(mol: &MoleculeNode, path: &str) -> Result<()> {
    if mol.smiles.is_empty() {
        return Err(Error::InvalidField {
            path: path.to_string(),
            field: "smiles",
            reason: "must be non-empty".into(),
        });
    }
    if let Some(rxn) = mol.reaction.as_deref() {
        let rpath = format!("{path}.children[0]");
        if rxn.reactants.is_empty() {
            return Err(Error::InvalidField {
                path: rpath,
                field: "children",
                reason: "a reaction needs at least one reactant".into(),
            });
        }
        if let Some(t) = &rxn.reaction_smiles {
            validate_token(t, &rpath, "reaction_smiles")?;
        }
        if let Some(t) = &rxn.template {
            validate_token(t, &rpath, "template")?;
        }
        if let Some(r) = rxn.template_radius {
            if r > 2 {
                return Err(Error::InvalidField {
                    path: rpath,
                    field: "template_radius",
                    reason: format!("{r} is outside 0..=2"),
                });
            }
        }
        for (i, reactant) in rxn.reactants.iter().enumerate() {
            validate_molecule(reactant, &format!("{rpath}.children[{i}]"))?;
        }
    }
    Ok(())
}

// ---------------------------------------------------------------------------
// JSON interchange
// ---------------------------------------------------------------------------

/// Parses a single route object. The route id is taken from a top-level
/// `route_id` key when present, otherwise `"route"`.
pub fn parse_route(text: &str) -> Result<RouteTree> {
    let value: Value = serde_json::from_str(text)?;
    route_from_value(&value, "route")
}

/// Parses a route file holding either one route object or an array of them.
/// Routes without an explicit `route_id` are named `<prefix>#<index>`.
pub fn parse_route_file(text: &str, id_prefix: &str) -> Result<Vec<RouteTree>> {
    let value: Value = serde_json::from_str(text)?;
    match value {
        Value::Array(items) => items
            .iter()
            .enumerate()
            .map(|(i, v)| route_from_value(v, &format!("{id_prefix}#{i}")))
            .collect(),
        other => Ok(vec![route_from_value(&other, &format!("{id_prefix}#0"))?]),
    }
}

/// Builds a route from an already-decoded JSON value.
pub fn route_from_value(value: &Value, fallback_id: &str) -> Result<RouteTree> {
    let root = molecule_from_value(value, "$")?;
    let id = match value.get("route_id") {
        None | Some(Value::Null) => fallback_id.to_string(),
        Some(Value::String(s)) => s.clone(),
        Some(_) => {
            return Err(Error::InvalidField {
                path: "$".into(),
                field: "route_id",
                reason: "expected a string".into(),
            })
        }
    };
    RouteTree::new(id, root)
}

fn node_type<'v>(obj: &'v Map<String, Value>, path: &str) -> Result<&'v str> {
    match obj.get("type") {
        None => Err(Error::MissingField {
            path: path.to_string(),
            field: "type",
        }),
        Some(Value::String(t)) => Ok(t),
        Some(_) => Err(Error::InvalidField {
            path: path.to_string(),
            field: "type",
            reason: "expected a string".into(),
        }),
    }
}

fn as_node<'v>(value: &'v Value, path: &str) -> Result<&'v Map<String, Value>> {
    value.as_object().ok_or_else(|| Error::InvalidField {
        path: path.to_string(),
        field: "node",
        reason: "expected a JSON object".into(),
    })
}

fn children<'v>(obj: &'v Map<String, Value>, path: &str) -> Result<Option<&'v Vec<Value>>> {
    match obj.get("children") {
        None | Some(Value::Null) => Ok(None),
        Some(Value::Array(items)) => Ok(Some(items)),
        Some(_) => Err(Error::InvalidField {
            path: path.to_string(),
            field: "children",
            reason: "expected an array".into(),
        }),
    }
}

fn molecule_from_value(value: &Value, path: &str) -> Result<MoleculeNode> {
    let obj = as_node(value, path)?;
    match node_type(obj, path)? {
        "mol" => {}
        "reaction" => {
            return Err(Error::AlternationViolation {
                path: path.to_string(),
                detail: "expected a molecule node, found a reaction".into(),
            })
        }
        other => {
            return Err(Error::InvalidField {
                path: path.to_string(),
                field: "type",
                reason: format!("unknown node type `{other}`"),
            })
        }
    }
    let smiles = match obj.get("smiles") {
        None => {
            return Err(Error::MissingField {
                path: path.to_string(),
                field: "smiles",
            })
        }
        Some(Value::String(s)) if !s.is_empty() => s.clone(),
        Some(_) => {
            return Err(Error::InvalidField {
                path: path.to_string(),
                field: "smiles",
                reason: "expected a non-empty string".into(),
            })
        }
    };
    let in_stock = match obj.get("in_stock") {
        None | Some(Value::Null) => false,
        Some(Value::Bool(b)) => *b,
        Some(_) => {
            return Err(Error::InvalidField {
                path: path.to_string(),
                field: "in_stock",
                reason: "expected a boolean".into(),
            })
        }
    };
    let kids = children(obj, path)?.map(Vec::as_slice).unwrap_or_default();
    let reaction = match kids {
        [] => None,
        [only] => Some(Box::new(reaction_from_value(
            only,
            &format!("{path}.children[0]"),
        )?)),
        many => {
            return Err(Error::AlternationViolation {
                path: path.to_string(),
                detail: format!(
                    "a molecule may be made by at most one reaction, found {} children",
                    many.len()
                ),
            })
        }
    };
    Ok(MoleculeNode {
        smiles,
        in_stock,
        reaction,
    })
}

fn reaction_from_value(value: &Value, path: &str) -> Result<ReactionNode> {
    let obj = as_node(value, path)?;
    match node_type(obj, path)? {
        "reaction" => {}
        "mol" => {
            return Err(Error::AlternationViolation {
                path: path.to_string(),
                detail: "expected a reaction node, found a molecule".into(),
            })
        }
        other => {
            return Err(Error::InvalidField {
                path: path.to_string(),
                field: "type",
                reason: format!("unknown node type `{other}`"),
            })
        }
    }

    let mut rxn = ReactionNode::default();
    match obj.get("metadata") {
        None | Some(Value::Null) => {}
        Some(Value::Object(meta)) => {
            for (key, v) in meta {
                let bad = |reason: &str| Error::InvalidField {
                    path: format!("{path}.metadata"),
                    field: metadata_field(key),
                    reason: reason.to_string(),
                };
                match key.as_str() {
                    "reaction_smiles" => {
                        let s = v.as_str().ok_or_else(|| bad("expected a string"))?;
                        rxn.reaction_smiles = Some(s.to_string());
                    }
                    "template" => {
                        let s = v.as_str().ok_or_else(|| bad("expected a string"))?;
                        rxn.template = Some(s.to_string());
                    }
                    "template_radius" => {
                        let r = v
                            .as_u64()
                            .filter(|r| *r <= 2)
                            .ok_or_else(|| bad("expected an integer in 0..=2"))?;
                        rxn.template_radius = Some(r as u8);
                    }
                    "policy_probability" => {
                        let p = v.as_f64().ok_or_else(|| bad("expected a number"))?;
                        rxn.probability = Some(p);
                    }
                    "patent_id" => {
                        let s = v.as_str().ok_or_else(|| bad("expected a string"))?;
                        rxn.patent_id = Some(s.to_string());
                    }
                    _ => {
                        rxn.extra_metadata.insert(key.clone(), v.clone());
                    }
                }
            }
        }
        Some(_) => {
            return Err(Error::InvalidField {
                path: path.to_string(),
                field: "metadata",
                reason: "expected an object".into(),
            })
        }
    }

    let Some(kids) = children(obj, path)? else {
        return Err(Error::MissingField {
            path: path.to_string(),
            field: "children",
        });
    };
    rxn.reactants = kids
        .iter()
        .enumerate()
        .map(|(i, kid)| molecule_from_value(kid, &format!("{path}.children[{i}]")))
        .collect::<Result<_>>()?;
    Ok(rxn)
}

fn metadata_field(key: &str) -> &'static str {
    match key {
        "reaction_smiles" => "reaction_smiles",
        "template" => "template",
        "template_radius" => "template_radius",
        "policy_probability" => "policy_probability",
        "patent_id" => "patent_id",
        _ => "metadata",
    }
}

fn molecule_to_value(mol: &MoleculeNode) -> Value {
    let mut obj = Map::new();
    obj.insert("type".into(), Value::from("mol"));
    obj.insert("smiles".into(), Value::from(mol.smiles.clone()));
    obj.insert("in_stock".into(), Value::from(mol.in_stock));
    let children: Vec<Value> = mol
        .reaction
        .as_deref()
        .map(reaction_to_value)
        .into_iter()
        .collect();
    obj.insert("children".into(), Value::Array(children));
    Value::Object(obj)
}

fn reaction_to_value(rxn: &ReactionNode) -> Value {
    let mut meta = rxn.extra_metadata.clone();
    if let Some(s) = &rxn.reaction_smiles {
        meta.insert("reaction_smiles".into(), Value::from(s.clone()));
    }
    if let Some(t) = &rxn.template {
        meta.insert("template".into(), Value::from(t.clone()));
    }
    if let Some(r) = rxn.template_radius {
        meta.insert("template_radius".into(), Value::from(r));
    }
    if let Some(p) = rxn.probability {
        meta.insert("policy_probability".into(), Value::from(p));
    }
    if let Some(p) = &rxn.patent_id {
        meta.insert("patent_id".into(), Value::from(p.clone()));
    }
    let mut obj = Map::new();
    obj.insert("type".into(), Value::from("reaction"));
    if !meta.is_empty() {
        obj.insert("metadata".into(), Value::Object(meta));
    }
    obj.insert(
        "children".into(),
        Value::Array(rxn.reactants.iter().map(molecule_to_value).collect()),
    );
    Value::Object(obj)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rxn(template: &str, reactants: Vec<MoleculeNode>) -> ReactionNode {
        ReactionNode::with_template(template, reactants)
    }

    fn linear(tokens: &[&str]) -> RouteTree {
        let mut mol = MoleculeNode::leaf("C");
        for (i, t) in tokens.iter().enumerate().rev() {
            mol =
                MoleculeNode::made_by(format!("C{i}"), rxn(t, vec![mol, MoleculeNode::leaf("O")]));
        }
        RouteTree::new("linear", mol).unwrap()
    }

    const MINIMAL: &str = r#"{"type":"mol","smiles":"CC(=O)Nc1ccccc1","children":[
        {"type":"reaction","metadata":{"template":"T1","reaction_smiles":"R1"},"children":[
            {"type":"mol","smiles":"CC(=O)Cl","in_stock":true},
            {"type":"mol","smiles":"Nc1ccccc1","in_stock":true}]}]}"#;

    #[test]
    fn minimal_tree_has_length_one() {
        let route = parse_route(MINIMAL).unwrap();
        assert_eq!(route.length(), 1);
        assert_eq!(route.route_id(), "route");
        assert!(route.root().reaction.as_ref().unwrap().reactants[0].in_stock);
        assert!(route
            .extract_ngrams(2, TokenKind::Template)
            .unwrap()
            .is_empty());
    }

    #[test]
    fn two_reaction_children_is_an_alternation_violation() {
        let text = r#"{"type":"mol","smiles":"C","children":[
            {"type":"reaction","children":[{"type":"mol","smiles":"O"}]},
            {"type":"reaction","children":[{"type":"mol","smiles":"N"}]}]}"#;
        assert!(matches!(
            parse_route(text),
            Err(Error::AlternationViolation { .. })
        ));
    }

    #[test]
    fn molecule_under_molecule_is_rejected() {
        let text = r#"{"type":"mol","smiles":"C","children":[{"type":"mol","smiles":"O"}]}"#;
        assert!(matches!(
            parse_route(text),
            Err(Error::AlternationViolation { .. })
        ));
        let text = r#"{"type":"reaction","children":[{"type":"mol","smiles":"O"}]}"#;
        assert!(matches!(
            parse_route(text),
            Err(Error::AlternationViolation { .. })
        ));
    }

    #[test]
    fn structural_errors() {
        assert!(matches!(
            parse_route(r#"{"type":"mol","smiles":"C"}"#),
            Err(Error::EmptyRoute)
        ));
        assert!(matches!(
            parse_route(r#"{"type":"mol","smiles":"C""#),
            Err(Error::MalformedJson(_))
        ));
        assert!(matches!(
            parse_route(r#"{"type":"mol"}"#),
            Err(Error::MissingField {
                field: "smiles",
                ..
            })
        ));
        assert!(matches!(
            parse_route(r#"{"type":"mol","smiles":"C","children":[{"type":"reaction"}]}"#),
            Err(Error::MissingField {
                field: "children",
                ..
            })
        ));
        assert!(matches!(
            parse_route(r#"{"smiles":"C"}"#),
            Err(Error::MissingField { field: "type", .. })
        ));
        let no_reactants =
            r#"{"type":"mol","smiles":"C","children":[{"type":"reaction","children":[]}]}"#;
        assert!(matches!(
            parse_route(no_reactants),
            Err(Error::InvalidField {
                field: "children",
                ..
            })
        ));
        let bad_radius = r#"{"type":"mol","smiles":"C","children":[{"type":"reaction",
            "metadata":{"template_radius":3},"children":[{"type":"mol","smiles":"O"}]}]}"#;
        assert!(matches!(
            parse_route(bad_radius),
            Err(Error::InvalidField {
                field: "template_radius",
                ..
            })
        ));
        let tab_token = r#"{"type":"mol","smiles":"C","children":[{"type":"reaction",
            "metadata":{"template":"a\tb"},"children":[{"type":"mol","smiles":"O"}]}]}"#;
        assert!(matches!(
            parse_route(tab_token),
            Err(Error::InvalidField {
                field: "template",
                ..
            })
        ));
    }

    #[test]
    fn error_paths_point_at_the_offending_node() {
        let text = r#"{"type":"mol","smiles":"C","children":[{"type":"reaction","children":[
            {"type":"mol","smiles":"O"},
            {"type":"mol","smiles":"N","children":[{"type":"mol","smiles":"S"}]}]}]}"#;
        match parse_route(text) {
            Err(Error::AlternationViolation { path, .. }) => {
                assert_eq!(path, "$.children[0].children[1].children[0]")
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn unknown_metadata_survives_round_trip() {
        let text = r#"{"type":"mol","smiles":"C","route_id":"r7","children":[{"type":"reaction",
            "metadata":{"template":"T","classification":"amide coupling","score":[1,2]},
            "children":[{"type":"mol","smiles":"O","in_stock":true}]}]}"#;
        let route = parse_route(text).unwrap();
        assert_eq!(route.route_id(), "r7");
        let rxn = route.root_reaction();
        assert_eq!(rxn.extra_metadata["classification"], "amide coupling");
        let again = parse_route(&route.to_json()).unwrap();
        assert_eq!(again, route);
    }

    #[test]
    fn route_file_accepts_object_or_array() {
        let one = parse_route_file(MINIMAL, "f").unwrap();
        assert_eq!(one.len(), 1);
        assert_eq!(one[0].route_id(), "f#0");
        let two = parse_route_file(&format!("[{MINIMAL},{MINIMAL}]"), "g").unwrap();
        assert_eq!(two.len(), 2);
        assert_eq!(two[1].route_id(), "g#1");
    }

    #[test]
    fn patent_ids_are_collected_from_reactions() {
        let mut inner = rxn("B", vec![MoleculeNode::leaf("N")]);
        inner.patent_id = Some("US1".into());
        let mut outer = rxn("A", vec![MoleculeNode::made_by("O", inner)]);
        outer.patent_id = Some("US2".into());
        let route = RouteTree::new("p", MoleculeNode::made_by("C", outer)).unwrap();
        let ids: Vec<_> = route.source_patent_ids().iter().cloned().collect();
        assert_eq!(ids, ["US1", "US2"]);
    }

    #[test]
    fn six_step_linear_route_has_three_four_grams() {
        let route = linear(&["a", "b", "c", "d", "e", "f"]);
        let grams = route.extract_ngrams(4, TokenKind::Template).unwrap();
        let keys: Vec<_> = grams.iter().map(Ngram::key).collect();
        assert_eq!(keys, ["a\tb\tc\td", "b\tc\td\te", "c\td\te\tf"]);
        assert_eq!(route.count_ngrams(4), 3);
        assert!(route.is_linear());
    }

    #[test]
    fn window_counts_on_small_linear_routes() {
        assert_eq!(linear(&["a", "b"]).count_ngrams(2), 1);
        assert_eq!(linear(&["a"]).count_ngrams(2), 0);
        assert_eq!(linear(&["a", "b"]).count_ngrams(3), 0);
    }

    #[test]
    fn branches_yield_separate_chains() {
        // Root reaction whose two reactants are each made by one reaction.
        let left = MoleculeNode::made_by("L", rxn("left", vec![MoleculeNode::leaf("N")]));
        let right = MoleculeNode::made_by("R", rxn("right", vec![MoleculeNode::leaf("S")]));
        let route = RouteTree::new(
            "b",
            MoleculeNode::made_by("C", rxn("root", vec![left, right])),
        )
        .unwrap();
        assert!(!route.is_linear());
        assert_eq!(route.count_ngrams(2), 2);
        let keys: Vec<_> = route
            .extract_ngrams(2, TokenKind::Template)
            .unwrap()
            .iter()
            .map(Ngram::key)
            .collect();
        assert_eq!(keys, ["root\tleft", "root\tright"]);
        assert_eq!(route.reaction_chains(2), vec![vec![0, 1], vec![0, 2]]);
    }

    #[test]
    fn missing_token_is_reported() {
        let route = linear(&["a", "b"]);
        let err = route.extract_ngrams(2, TokenKind::Reaction).unwrap_err();
        assert!(matches!(
            err,
            Error::MissingToken {
                reaction: 0,
                kind: TokenKind::Reaction,
                ..
            }
        ));
    }

    #[test]
    fn order_below_two_is_rejected() {
        let route = linear(&["a", "b"]);
        assert!(route.extract_ngrams(1, TokenKind::Template).is_err());
    }

    #[test]
    fn preorder_follows_file_order() {
        let left = MoleculeNode::made_by(
            "L",
            rxn(
                "l1",
                vec![MoleculeNode::made_by(
                    "L2",
                    rxn("l2", vec![MoleculeNode::leaf("N")]),
                )],
            ),
        );
        let right = MoleculeNode::made_by("R", rxn("r1", vec![MoleculeNode::leaf("S")]));
        let route = RouteTree::new(
            "b",
            MoleculeNode::made_by("C", rxn("root", vec![left, right])),
        )
        .unwrap();
        let order: Vec<_> = route
            .reactions()
            .map(|r| r.template.clone().unwrap())
            .collect();
        assert_eq!(order, ["root", "l1", "l2", "r1"]);
    }
}
