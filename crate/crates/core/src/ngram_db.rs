//! Known n-gram database: the n-grams harvested from a reference route corpus,
//! with occurrence counts.
//!
//! On disk a database is a sorted, TAB-separated text file:
//!
//! ```text
//! RETROBLEU-NGRAMDB v1<TAB>n=2<TAB>kind=template<TAB>radius=1<TAB>routes=3
//! 2<TAB>tokA<TAB>tokB
//! 1<TAB>tokB<TAB>tokC
//! ```
//!
//! Records are ordered lexicographically by their token columns, so two saves
//! of the same database are byte-identical.

use std::cmp::Ordering;
use std::collections::{HashMap, HashSet};
use std::fmt;
use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::route::{check_order, Ngram, RouteTree, TokenKind};

const MAGIC: &str = "RETROBLEU-NGRAMDB";
const VERSION: &str = "v1";

/// The identity of a database: which n-grams it holds.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct DbSpec {
    pub n: usize,
    pub kind: TokenKind,
    /// Template radius. Only meaningful for template databases.
    pub radius: Option<u8>,
}

impl DbSpec {
    pub fn new(n: usize, kind: TokenKind, radius: Option<u8>) -> Result<Self> {
        check_order(n)?;
        if kind == TokenKind::Reaction && radius.is_some() {
            return Err(Error::InvalidConfig(
                "a template radius only applies to template databases".into(),
            ));
        }
        if let Some(r) = radius {
            if r > 2 {
                return Err(Error::InvalidConfig(format!(
                    "template radius {r} outside 0..=2"
                )));
            }
        }
        Ok(DbSpec { n, kind, radius })
    }

    /// Fails unless `other` describes the same n-grams.
    pub fn ensure_compatible(&self, other: &DbSpec) -> Result<()> {
        if self.n != other.n {
            return Err(Error::ArityMismatch {
                expected: self.n,
                found: other.n,
            });
        }
        if self.kind != other.kind {
            return Err(Error::KindMismatch {
                expected: self.kind,
                found: other.kind,
            });
        }
        if self.radius != other.radius {
            return Err(Error::MixedRadius {
                expected: fmt_radius(self.radius),
                found: fmt_radius(other.radius),
            });
        }
        Ok(())
    }
}

fn fmt_radius(r: Option<u8>) -> String {
    r.map_or_else(|| "-".to_string(), |r| r.to_string())
}

/// Column-wise ordering of TAB-joined keys.
pub(crate) fn key_order(a: &str, b: &str) -> Ordering {
    a.split('\t').cmp(b.split('\t'))
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct NgramDatabase {
    spec: DbSpec,
    entries: HashMap<String, u64>,
    source_route_count: u64,
}

impl NgramDatabase {
    pub fn empty(spec: DbSpec) -> Self {
        NgramDatabase {
            spec,
            entries: HashMap::new(),
            source_route_count: 0,
        }
    }

    /// Builds a database from every route not sourced from an excluded patent.
    pub fn build<'a, I>(routes: I, spec: DbSpec, excluded_patents: &HashSet<String>) -> Result<Self>
    where
        I: IntoIterator<Item = &'a RouteTree>,
    {
        let mut builder = DbBuilder::new(spec, excluded_patents);
        for route in routes {
            builder.add_route(route)?;
        }
        Ok(builder.finish())
    }

    /// Parallel [`NgramDatabase::build`]: per-worker shards combined by
    /// [`NgramDatabase::merge`]. The result does not depend on scheduling.
    pub fn build_par(
        routes: &[RouteTree],
        spec: DbSpec,
        excluded_patents: &HashSet<String>,
    ) -> Result<Self> {
        // Fix an inferred radius up front so shards agree on it.
        let spec = match spec {
            DbSpec {
                kind: TokenKind::Template,
                radius: None,
                ..
            } => DbSpec {
                radius: routes
                    .iter()
                    .filter(|r| !is_excluded(r, excluded_patents))
                    .flat_map(|r| r.reactions())
                    .find_map(|rxn| rxn.template_radius),
                ..spec
            },
            s => s,
        };
        routes
            .par_iter()
            .try_fold(
                || DbBuilder::new(spec, excluded_patents),
                |mut b, route| {
                    b.add_route(route)?;
                    Ok(b)
                },
            )
            .map(|b| b.map(DbBuilder::finish))
            .try_reduce(|| NgramDatabase::empty(spec), |a, b| a.merge(&b))
    }

    pub fn spec(&self) -> DbSpec {
        self.spec
    }

    pub fn n(&self) -> usize {
        self.spec.n
    }

    pub fn kind(&self) -> TokenKind {
        self.spec.kind
    }

    pub fn radius(&self) -> Option<u8> {
        self.spec.radius
    }

    pub fn source_route_count(&self) -> u64 {
        self.source_route_count
    }

    /// Number of distinct n-grams.
    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// Sum of all counts: the number of chain windows seen during the build.
    pub fn total_count(&self) -> u64 {
        self.entries.values().sum()
    }

    /// Membership test for an n-gram.
    pub fn contains(&self, gram: &Ngram) -> Result<bool> {
        if gram.n() != self.spec.n {
            return Err(Error::ArityMismatch {
                expected: self.spec.n,
                found: gram.n(),
            });
        }
        if gram.kind != self.spec.kind {
            return Err(Error::KindMismatch {
                expected: self.spec.kind,
                found: gram.kind,
            });
        }
        Ok(self.entries.contains_key(&gram.key()))
    }

    /// Membership test for a TAB-joined key.
    pub fn contains_key(&self, key: &str) -> bool {
        self.entries.contains_key(key)
    }

    pub fn count(&self, key: &str) -> u64 {
        self.entries.get(key).copied().unwrap_or(0)
    }

    /// Unordered `(key, count)` pairs.
    pub fn iter(&self) -> impl Iterator<Item = (&str, u64)> {
        self.entries.iter().map(|(k, c)| (k.as_str(), *c))
    }

    /// `(key, count)` pairs in file order.
    pub fn sorted_entries(&self) -> Vec<(&str, u64)> {
        let mut v: Vec<_> = self.iter().collect();
        v.sort_unstable_by(|a, b| key_order(a.0, b.0));
        v
    }

    /// Adds `count` occurrences of an n-gram given by its tokens.
    pub fn insert(&mut self, tokens: &[&str], count: u64) -> Result<()> {
        if tokens.len() != self.spec.n {
            return Err(Error::ArityMismatch {
                expected: self.spec.n,
                found: tokens.len(),
            });
        }
        if count == 0 {
            return Err(Error::InvalidConfig(
                "n-gram counts must be positive".into(),
            ));
        }
        if let Some(bad) = tokens
            .iter()
            .find(|t| t.is_empty() || t.contains(['\t', '\n', '\r']))
        {
            return Err(Error::InvalidConfig(format!(
                "invalid n-gram token {bad:?}: tokens must be non-empty without TAB or line breaks"
            )));
        }
        *self.entries.entry(tokens.join("\t")).or_insert(0) += count;
        Ok(())
    }

    pub fn set_source_route_count(&mut self, routes: u64) {
        self.source_route_count = routes;
    }

    /// Pointwise sum of two databases over the same n-grams.
    pub fn merge(mut self, other: &NgramDatabase) -> Result<Self> {
        self.merge_from(other)?;
        Ok(self)
    }

    pub fn merge_from(&mut self, other: &NgramDatabase) -> Result<()> {
        self.spec.ensure_compatible(&other.spec)?;
        self.entries.reserve(other.entries.len());
        for (k, c) in &other.entries {
            *self.entries.entry(k.clone()).or_insert(0) += c;
        }
        self.source_route_count += other.source_route_count;
        Ok(())
    }

    fn header(&self) -> String {
        format!(
            "{MAGIC} {VERSION}\tn={}\tkind={}\tradius={}\troutes={}",
            self.spec.n,
            self.spec.kind,
            fmt_radius(self.spec.radius),
            self.source_route_count
        )
    }

    pub fn write_to<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        writeln!(out, "{}", self.header())?;
        for (key, count) in self.sorted_entries() {
            writeln!(out, "{count}\t{key}")?;
        }
        out.flush()
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        let mut buf = Vec::new();
        self.write_to(&mut buf).expect("writing to memory");
        buf
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let file = File::create(path).map_err(|e| Error::io(path, e))?;
        self.write_to(BufWriter::new(file))
            .map_err(|e| Error::io(path, e))
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let file = File::open(path).map_err(|e| Error::io(path, e))?;
        Self::read_from(BufReader::new(file)).map_err(|e| match e {
            Error::Io { source, .. } => Error::io(path, source),
            other => other,
        })
    }

    pub fn read_from<R: BufRead>(mut input: R) -> Result<Self> {
        let mut line = String::new();
        let read = |input: &mut R, line: &mut String| -> Result<bool> {
            line.clear();
            let n = input
                .read_line(line)
                .map_err(|e| Error::io("<stream>", e))?;
            if line.ends_with('\n') {
                line.pop();
            }
            Ok(n > 0)
        };

        if !read(&mut input, &mut line)? {
            return Err(Error::BadMagic);
        }
        let (spec, routes) = parse_header(&line)?;
        let mut db = NgramDatabase::empty(spec);
        db.source_route_count = routes;

        let mut previous: Option<String> = None;
        let mut lineno = 1;
        while read(&mut input, &mut line)? {
            lineno += 1;
            let corrupt = |reason: String| Error::CorruptRecord {
                line: lineno,
                reason,
            };
            let (count, key) = line
                .split_once('\t')
                .ok_or_else(|| corrupt("expected `<count><TAB><tokens>`".into()))?;
            let count: u64 = count
                .parse()
                .ok()
                .filter(|c| *c > 0)
                .ok_or_else(|| corrupt(format!("bad count `{count}`")))?;
            let columns = key.split('\t').count();
            if columns != spec.n {
                return Err(corrupt(format!(
                    "expected {} tokens, found {columns}",
                    spec.n
                )));
            }
            if key.split('\t').any(|t| t.is_empty() || t.contains('\r')) {
                return Err(corrupt("empty token or stray carriage return".into()));
            }
            if let Some(prev) = &previous {
                if key_order(prev, key) != Ordering::Less {
                    return Err(corrupt("records out of order or duplicated".into()));
                }
            }
            db.entries.insert(key.to_string(), count);
            previous = Some(key.to_string());
        }
        Ok(db)
    }
}

fn parse_header(line: &str) -> Result<(DbSpec, u64)> {
    let corrupt = |reason: &str| Error::CorruptRecord {
        line: 1,
        reason: reason.to_string(),
    };
    let mut fields = line.split('\t');
    let tag = fields.next().unwrap_or_default();
    let version = match tag.split_once(' ') {
        Some((MAGIC, v)) => v,
        _ => return Err(Error::BadMagic),
    };
    if version != VERSION {
        return Err(Error::VersionMismatch(version.to_string()));
    }
    let mut field = |name: &str| -> Result<&str> {
        fields
            .next()
            .and_then(|f| f.strip_prefix(name)?.strip_prefix('='))
            .ok_or_else(|| corrupt(&format!("header field `{name}` missing")))
    };
    let n: usize = field("n")?
        .parse()
        .map_err(|_| corrupt("header field `n` is not an integer"))?;
    let kind: TokenKind = field("kind")?
        .parse()
        .map_err(|_| corrupt("header field `kind` is not reaction|template"))?;
    let radius = match field("radius")? {
        "-" => None,
        r => Some(
            r.parse::<u8>()
                .map_err(|_| corrupt("header field `radius` is not an integer"))?,
        ),
    };
    let routes: u64 = field("routes")?
        .parse()
        .map_err(|_| corrupt("header field `routes` is not an integer"))?;
    if fields.next().is_some() {
        return Err(corrupt("unexpected trailing header fields"));
    }
    let spec = DbSpec::new(n, kind, radius).map_err(|e| corrupt(&e.to_string()))?;
    Ok((spec, routes))
}

impl fmt::Display for NgramDatabase {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{}-gram {} database (radius {}): {} entries from {} routes",
            self.spec.n,
            self.spec.kind,
            fmt_radius(self.spec.radius),
            self.len(),
            self.source_route_count
        )
    }
}

fn is_excluded(route: &RouteTree, excluded: &HashSet<String>) -> bool {
    !excluded.is_empty()
        && route
            .source_patent_ids()
            .iter()
            .any(|p| excluded.contains(p))
}

/// Incremental database construction, one route at a time.
pub struct DbBuilder<'e> {
    db: NgramDatabase,
    excluded: &'e HashSet<String>,
    windows: Vec<String>,
    skipped: u64,
}

impl<'e> DbBuilder<'e> {
    pub fn new(spec: DbSpec, excluded_patents: &'e HashSet<String>) -> Self {
        DbBuilder {
            db: NgramDatabase::empty(spec),
            excluded: excluded_patents,
            windows: Vec::new(),
            skipped: 0,
        }
    }

    /// Adds a route's windows. Returns false when the route was excluded.
    /// A failing route leaves the database untouched.
    pub fn add_route(&mut self, route: &RouteTree) -> Result<bool> {
        if is_excluded(route, self.excluded) {
            self.skipped += 1;
            return Ok(false);
        }
        let spec = self.db.spec;
        if spec.kind == TokenKind::Template {
            let mut radius = spec.radius;
            for declared in route.reactions().filter_map(|r| r.template_radius) {
                match radius {
                    None => radius = Some(declared),
                    Some(r) if r != declared => {
                        return Err(Error::MixedRadius {
                            expected: r.to_string(),
                            found: declared.to_string(),
                        })
                    }
                    Some(_) => {}
                }
            }
            self.db.spec.radius = radius;
        }

        self.windows.clear();
        let windows = &mut self.windows;
        route.for_each_window(spec.n, spec.kind, |w| windows.push(w.join("\t")))?;
        for key in self.windows.drain(..) {
            *self.db.entries.entry(key).or_insert(0) += 1;
        }
        self.db.source_route_count += 1;
        Ok(true)
    }

    /// Folds another builder's routes into this one.
    pub fn absorb(&mut self, other: DbBuilder<'_>) -> Result<()> {
        self.db.merge_from(&other.db)?;
        self.skipped += other.skipped;
        Ok(())
    }

    /// Routes dropped by patent exclusion so far.
    pub fn skipped(&self) -> u64 {
        self.skipped
    }

    pub fn finish(self) -> NgramDatabase {
        self.db
    }
}
