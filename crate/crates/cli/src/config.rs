//! Score configuration resolution: command-line flags override the config
//! file, which overrides built-in defaults.
//!
//! The config file is TOML with any subset of these keys:
//!
//! ```toml
//! length_pivot = 3
//! n = 2
//! token_kind = "template"   # or "reaction"
//! template_radius = 1       # omit, or "none", for no radius
//! epsilon = 1.0
//! yield_assumed = 0.8
//! prob_floor = 1e-10
//! ```

use std::path::Path;

use clap::Args;
use retrobleu::{ScoreConfig, TokenKind};
use serde::Deserialize;

use crate::failure::Failure;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(untagged)]
enum RadiusSetting {
    Value(u8),
    Named(NoRadius),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "lowercase")]
enum NoRadius {
    None,
}

impl RadiusSetting {
    fn get(self) -> Option<u8> {
        match self {
            RadiusSetting::Value(r) => Some(r),
            RadiusSetting::Named(NoRadius::None) => None,
        }
    }
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct FileConfig {
    length_pivot: Option<u32>,
    n: Option<usize>,
    token_kind: Option<TokenKind>,
    template_radius: Option<RadiusSetting>,
    epsilon: Option<f64>,
    yield_assumed: Option<f64>,
    prob_floor: Option<f64>,
}

/// Score configuration flags shared by the subcommands.
#[derive(Debug, Clone, Default, Args)]
pub struct ConfigFlags {
    /// Length pivot L: routes longer than this are penalized.
    #[arg(long = "length-pivot", value_name = "L")]
    pub length_pivot: Option<u32>,
    /// N-gram order.
    #[arg(long)]
    pub n: Option<usize>,
    /// Token kind: reaction or template.
    #[arg(long)]
    pub kind: Option<String>,
    /// Template radius (0-2), or `none`.
    #[arg(long)]
    pub radius: Option<String>,
    /// Fixed reaction cost for the Badowski score.
    #[arg(long)]
    pub epsilon: Option<f64>,
    /// Assumed reaction yield for the Badowski score.
    #[arg(long = "yield", value_name = "YIELD")]
    pub yield_assumed: Option<f64>,
    /// Probability for reactions without a model probability.
    #[arg(long = "prob-floor")]
    pub prob_floor: Option<f64>,
}

fn parse_radius(s: &str) -> Result<Option<u8>, Failure> {
    if s.eq_ignore_ascii_case("none") || s == "-" {
        return Ok(None);
    }
    s.parse::<u8>()
        .map(Some)
        .map_err(|_| Failure::input(format!("invalid --radius `{s}`")))
}

/// Resolves the effective configuration.
pub fn resolve(flags: &ConfigFlags, file: Option<&Path>) -> Result<ScoreConfig, Failure> {
    let from_file = match file {
        Some(path) => {
            let text = std::fs::read_to_string(path)
                .map_err(|e| Failure::io(format!("{}: {e}", path.display())))?;
            toml::from_str::<FileConfig>(&text)
                .map_err(|e| Failure::input(format!("{}: {e}", path.display())))?
        }
        None => FileConfig::default(),
    };

    let mut cfg = ScoreConfig::default();
    let mut radius_explicit = false;

    if let Some(v) = from_file.length_pivot {
        cfg.length_pivot = v;
    }
    if let Some(v) = from_file.n {
        cfg.n = v;
    }
    if let Some(v) = from_file.token_kind {
        cfg.token_kind = v;
    }
    if let Some(v) = from_file.template_radius {
        cfg.template_radius = v.get();
        radius_explicit = true;
    }
    if let Some(v) = from_file.epsilon {
        cfg.epsilon = v;
    }
    if let Some(v) = from_file.yield_assumed {
        cfg.yield_assumed = v;
    }
    if let Some(v) = from_file.prob_floor {
        cfg.prob_floor = v;
    }

    if let Some(v) = flags.length_pivot {
        cfg.length_pivot = v;
    }
    if let Some(v) = flags.n {
        cfg.n = v;
    }
    if let Some(v) = &flags.kind {
        cfg.token_kind = v
            .parse()
            .map_err(|e: retrobleu::Error| Failure::input(e.to_string()))?;
    }
    if let Some(v) = &flags.radius {
        cfg.template_radius = parse_radius(v)?;
        radius_explicit = true;
    }
    if let Some(v) = flags.epsilon {
        cfg.epsilon = v;
    }
    if let Some(v) = flags.yield_assumed {
        cfg.yield_assumed = v;
    }
    if let Some(v) = flags.prob_floor {
        cfg.prob_floor = v;
    }

    // The default radius belongs to template tokens only.
    if cfg.token_kind == TokenKind::Reaction && !radius_explicit {
        cfg.template_radius = None;
    }
    cfg.validate().map_err(|e| Failure::input(e.to_string()))?;
    Ok(cfg)
}
