//! Economy files.
//!
//! ```toml
//! [agent.1]
//! side = "one"
//! endowment = 4.0
//! terms = [[0.6666666666666666, "x", 0.0, 1.0], [1.0, "y", 0.0, 1.0]]
//!
//! [concerns]
//! entries = [[1, 2, 0.5]]
//! ```
//!
//! Each term is `[coefficient, commodity, shift, exponent]`. Agents are
//! numbered `1..=n` without gaps; concern entries `[i, j, w]` use the same
//! numbering and give `gamma_i^j = w`. Unlisted weights are zero.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::economy::{Agent, ConcernMatrix, Economy, EconomyError, Side};
use crate::utility::{Commodity, InternalUtility, PowerTerm};

#[derive(Debug, Error)]
pub enum FormatError {
    #[error("cannot read {path}: {source}")]
    Io { path: String, source: std::io::Error },
    #[error("{0}")]
    Parse(String),
    #[error("agent key `{0}` is not a positive integer")]
    BadAgentKey(String),
    #[error("agents must be numbered 1..={n} without gaps; agent {missing} is missing")]
    MissingAgent { n: usize, missing: usize },
    #[error("concern entry {index}: agent {agent} does not exist")]
    BadConcernAgent { index: usize, agent: usize },
    #[error(transparent)]
    Economy(#[from] EconomyError),
}

#[derive(Debug, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
struct AgentEntry {
    side: Side,
    endowment: f64,
    terms: Vec<(f64, Commodity, f64, f64)>,
}

#[derive(Debug, Default, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
struct ConcernsEntry {
    #[serde(default)]
    entries: Vec<(usize, usize, f64)>,
}

#[derive(Debug, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
struct EconomyFile {
    agent: BTreeMap<String, AgentEntry>,
    #[serde(default)]
    concerns: ConcernsEntry,
}

pub fn parse_economy(text: &str) -> Result<Economy, FormatError> {
    let file: EconomyFile = toml::from_str(text).map_err(|e| FormatError::Parse(e.to_string()))?;
    let mut numbered = BTreeMap::new();
    for (key, entry) in file.agent {
        let id: usize = key
            .parse()
            .ok()
            .filter(|&id| id >= 1)
            .ok_or_else(|| FormatError::BadAgentKey(key.clone()))?;
        numbered.insert(id, entry);
    }
    let n = numbered.len();
    if let Some(missing) = (1..=n).find(|id| !numbered.contains_key(id)) {
        return Err(FormatError::MissingAgent { n, missing });
    }
    let mut agents = Vec::with_capacity(n);
    let mut utilities = Vec::with_capacity(n);
    for entry in numbered.into_values() {
        agents.push(Agent::new(entry.side, entry.endowment));
        utilities.push(InternalUtility::new(
            entry
                .terms
                .into_iter()
                .map(|(c, v, s, e)| PowerTerm::new(c, v, s, e))
                .collect(),
        ));
    }
    let mut entries = Vec::with_capacity(file.concerns.entries.len());
    for (index, &(i, j, w)) in file.concerns.entries.iter().enumerate() {
        for agent in [i, j] {
            if agent == 0 || agent > n {
                return Err(FormatError::BadConcernAgent {
                    index: index + 1,
                    agent,
                });
            }
        }
        entries.push((i - 1, j - 1, w));
    }
    let concerns = ConcernMatrix::from_entries(n, &entries)?;
    Ok(Economy::new(agents, utilities, concerns)?)
}

pub fn load_economy(path: &Path) -> Result<Economy, FormatError> {
    let text = std::fs::read_to_string(path).map_err(|source| FormatError::Io {
        path: path.display().to_string(),
        source,
    })?;
    parse_economy(&text)
}

fn commodity_name(c: Commodity) -> &'static str {
    match c {
        Commodity::X => "x",
        Commodity::Y => "y",
    }
}

/// Writes `economy` in the file format; parsing the result gives back an
/// identical economy.
pub fn to_toml(economy: &Economy) -> String {
    let mut out = String::new();
    for (i, agent) in economy.agents().iter().enumerate() {
        let terms: Vec<String> = economy
            .utility(i)
            .terms()
            .iter()
            .map(|t| {
                format!(
                    "[{:?}, \"{}\", {:?}, {:?}]",
                    t.coefficient,
                    commodity_name(t.variable),
                    t.shift,
                    t.exponent
                )
            })
            .collect();
        let _ = writeln!(out, "[agent.{}]", i + 1);
        let _ = writeln!(out, "side = \"{}\"", agent.side);
        let _ = writeln!(out, "endowment = {:?}", agent.endowment);
        let _ = writeln!(out, "terms = [{}]\n", terms.join(", "));
    }
    let entries: Vec<String> = economy
        .concerns()
        .entries()
        .iter()
        .map(|&(i, j, w)| format!("[{}, {}, {:?}]", i + 1, j + 1, w))
        .collect();
    let _ = writeln!(out, "[concerns]");
    let _ = writeln!(out, "entries = [{}]", entries.join(", "));
    out
}
