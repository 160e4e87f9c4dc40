use std::collections::HashSet;
use std::path::Path;

use retrobleu::{parse_route_file, NgramDatabase, RouteTree};

use crate::failure::Failure;
use crate::manifest::{sha256_hex, InputDigest};

/// A parsed route file with the digest of its bytes.
pub struct RouteFile {
    pub digest: InputDigest,
    pub routes: Vec<RouteTree>,
}

/// Reads and parses one route file. Routes without an id are named after the
/// file stem.
pub fn load_route_file(path: &Path) -> Result<RouteFile, Failure> {
    let bytes = std::fs::read(path).map_err(|e| Failure::io(format!("{}: {e}", path.display())))?;
    let digest = InputDigest {
        path: path.display().to_string(),
        sha256: sha256_hex(&bytes),
    };
    let text = std::str::from_utf8(&bytes)
        .map_err(|e| Failure::input(format!("{}: not UTF-8: {e}", path.display())))?;
    let stem = path
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| "route".into());
    let routes = parse_route_file(text, &stem).map_err(|e| Failure::from_lib(path.display(), e))?;
    Ok(RouteFile { digest, routes })
}

pub fn load_db(path: &Path) -> Result<(NgramDatabase, InputDigest), Failure> {
    let db = NgramDatabase::load(path).map_err(|e| Failure::from_lib(path.display(), e))?;
    let digest = crate::manifest::digest_file(path)?;
    Ok((db, digest))
}

/// One patent id per line; blank lines and `#` comments are ignored.
pub fn load_patent_list(path: &Path) -> Result<HashSet<String>, Failure> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| Failure::io(format!("{}: {e}", path.display())))?;
    Ok(text
        .lines()
        .map(str::trim)
        .filter(|l| !l.is_empty() && !l.starts_with('#'))
        .map(str::to_string)
        .collect())
}
