//! Run settings: command-line flags layered over an optional TOML config
//! file layered over defaults.

use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use clap::Args;
use serde::Deserialize;
use tradepost::format::load_economy;
use tradepost::{scenarios, Economy, OfferProfile, SolverConfig};

/// Flags shared by every subcommand. Each has a config-file key of the same
/// name with `_` for `-`.
#[derive(Debug, Clone, Default, Args)]
pub struct Flags {
    /// Economy file, or `builtin:<name>` for a built-in scenario
    /// (`builtin:random` draws one from `--seed`).
    #[arg(long, global = true, value_name = "PATH")]
    pub economy: Option<String>,
    /// Comma-separated, strictly decreasing perturbation levels in (0, 1].
    #[arg(long, global = true, value_name = "CSV", value_delimiter = ',')]
    pub epsilon_schedule: Option<Vec<f64>>,
    /// Points in the coarse scan of each best response; also the sample
    /// count of `scan`.
    #[arg(long, global = true, value_name = "N")]
    pub grid: Option<usize>,
    /// Grid spacing for the exhaustive oracle and the first-order sweep.
    #[arg(long, global = true, value_name = "R")]
    pub resolution: Option<f64>,
    /// Agent id, counting from 1.
    #[arg(long, global = true, value_name = "ID")]
    pub agent: Option<usize>,
    /// Comma-separated offers, one per agent in id order.
    #[arg(
        long,
        global = true,
        value_name = "CSV",
        value_delimiter = ',',
        allow_hyphen_values = true
    )]
    pub profile: Option<Vec<f64>>,
    /// Perturbation at which `verify` and `scan` evaluate the profile.
    #[arg(long, global = true, value_name = "E")]
    pub epsilon: Option<f64>,
    /// Directory for artifacts; created if absent.
    #[arg(long, global = true, value_name = "DIR")]
    pub out: Option<PathBuf>,
    /// Seed for `builtin:random` and the `random` scenario.
    #[arg(long, global = true, value_name = "N")]
    pub seed: Option<u64>,
    /// TOML file with any of the settings above plus a `[solver]` table.
    #[arg(long, global = true, value_name = "PATH")]
    pub config: Option<PathBuf>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct FileSettings {
    economy: Option<String>,
    epsilon_schedule: Option<Vec<f64>>,
    grid: Option<usize>,
    resolution: Option<f64>,
    agent: Option<usize>,
    profile: Option<Vec<f64>>,
    epsilon: Option<f64>,
    out: Option<PathBuf>,
    seed: Option<u64>,
    solver: Option<SolverConfig>,
}

#[derive(Debug, Clone)]
pub struct Settings {
    pub economy: Option<String>,
    pub solver: SolverConfig,
    pub resolution: f64,
    pub agent: Option<usize>,
    pub profile: Option<Vec<f64>>,
    pub epsilon: f64,
    pub out: PathBuf,
    pub seed: u64,
    /// Sample count for payoff curves.
    pub samples: usize,
}

pub const DEFAULT_RESOLUTION: f64 = 0.1;
pub const DEFAULT_SAMPLES: usize = 400;

impl Settings {
    pub fn resolve(flags: &Flags) -> Result<Settings> {
        let file = match &flags.config {
            Some(path) => {
                let text =
                    std::fs::read_to_string(path).with_context(|| format!("cannot read config {}", path.display()))?;
                toml::from_str::<FileSettings>(&text)
                    .map_err(|e| ParseError(format!("config {}: {e}", path.display())))?
            }
            None => FileSettings::default(),
        };
        let mut solver = file.solver.unwrap_or_default();
        if let Some(s) = flags.epsilon_schedule.clone().or(file.epsilon_schedule) {
            solver.epsilon_schedule = s;
        }
        let grid = flags.grid.or(file.grid);
        if let Some(g) = grid {
            solver.grid_points = g;
        }
        solver.validate().map_err(|e| ParseError(e.to_string()))?;
        Ok(Settings {
            economy: flags.economy.clone().or(file.economy),
            solver,
            resolution: flags.resolution.or(file.resolution).unwrap_or(DEFAULT_RESOLUTION),
            agent: flags.agent.or(file.agent),
            profile: flags.profile.clone().or(file.profile),
            epsilon: flags.epsilon.or(file.epsilon).unwrap_or(0.0),
            out: flags.out.clone().or(file.out).unwrap_or_else(|| PathBuf::from("out")),
            seed: flags.seed.or(file.seed).unwrap_or(1),
            samples: grid.unwrap_or(DEFAULT_SAMPLES),
        })
    }

    pub fn load_economy(&self) -> Result<Economy> {
        let Some(spec) = &self.economy else {
            bail!(ParseError("no economy given (use --economy)".into()));
        };
        economy_from(spec, self.seed)
    }

    /// The 0-based agent index.
    pub fn agent_index(&self, economy: &Economy) -> Result<usize> {
        let Some(id) = self.agent else {
            bail!(ParseError("no agent given (use --agent)".into()));
        };
        if id == 0 || id > economy.len() {
            bail!(ParseError(format!(
                "agent {id} does not exist (ids run from 1 to {})",
                economy.len()
            )));
        }
        Ok(id - 1)
    }

    pub fn offer_profile(&self, economy: &Economy) -> Result<OfferProfile> {
        let Some(offers) = &self.profile else {
            bail!(ParseError("no profile given (use --profile)".into()));
        };
        let profile = OfferProfile::new(offers.clone());
        profile.check(economy).map_err(|e| ParseError(e.to_string()))?;
        Ok(profile)
    }

    pub fn out_dir(&self) -> Result<&Path> {
        std::fs::create_dir_all(&self.out).with_context(|| format!("cannot create {}", self.out.display()))?;
        Ok(&self.out)
    }
}

pub fn economy_from(spec: &str, seed: u64) -> Result<Economy> {
    if let Some(name) = spec.strip_prefix("builtin:") {
        if name == "random" {
            return Ok(scenarios::seeded_random_independent(seed));
        }
        return scenarios::builtin(name).ok_or_else(|| {
            ParseError(format!(
                "unknown built-in `{name}` (known: {}, random)",
                scenarios::BUILTIN_NAMES.join(", ")
            ))
            .into()
        });
    }
    load_economy(Path::new(spec)).map_err(|e| ParseError(e.to_string()).into())
}

/// Malformed input: an unreadable economy or config file, or flags that do
/// not fit the economy. Exits with the validation status.
#[derive(Debug)]
pub struct ParseError(pub String);

impl std::fmt::Display for ParseError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for ParseError {}
