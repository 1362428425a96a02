use serde::{Deserialize, Serialize};

use super::newton::{solve_stationary, NewtonOptions};
use super::{damped_iteration, deviation_gain_raw, EquilibriumCandidate, SolverConfig, SolverError};
use crate::economy::{validate, Economy, Side};
use crate::mechanism::{aggregates_raw, OfferProfile};

/// Aggregates at or below this are zero for trade classification.
pub const TRADE_THRESHOLD: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TraceLevel {
    pub epsilon: f64,
    pub candidate: EquilibriumCandidate,
    pub price: f64,
    pub a: f64,
    pub b: f64,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct HomotopyTrace {
    pub levels: Vec<TraceLevel>,
}

impl HomotopyTrace {
    /// Smallest and largest price along the trace.
    pub fn price_envelope(&self) -> Option<(f64, f64)> {
        let mut it = self.levels.iter().map(|l| l.price);
        let first = it.next()?;
        Some(it.fold((first, first), |(lo, hi), p| (lo.min(p), hi.max(p))))
    }

    /// Smallest aggregate offer of `side` along the trace.
    pub fn min_aggregate(&self, side: Side) -> Option<f64> {
        self.levels
            .iter()
            .map(|l| match side {
                Side::One => l.a,
                Side::Two => l.b,
            })
            .reduce(f64::min)
    }

    pub fn all_converged(&self) -> bool {
        self.levels.iter().all(|l| l.candidate.converged)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum HomotopyStatus {
    /// Verified equilibrium of the unperturbed game with both aggregates positive.
    Trade,
    /// The limit is the all-zero profile, verified at the unperturbed game.
    NonTrade,
    /// Every level converged but the limit profile failed the deviation check.
    Unverified,
    /// Some level did not converge; the trace stops there.
    Failed,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HomotopyOutcome {
    pub trace: HomotopyTrace,
    /// Limit candidate, evaluated at `epsilon = 0`.
    pub candidate: EquilibriumCandidate,
    pub status: HomotopyStatus,
    /// Index of the last converged level.
    pub last_good_level: Option<usize>,
    /// Sides whose aggregate was judged to vanish in the limit.
    pub vanishing: Vec<Side>,
}

impl HomotopyOutcome {
    pub fn succeeded(&self) -> bool {
        matches!(self.status, HomotopyStatus::Trade | HomotopyStatus::NonTrade)
    }
}

// Least-squares slope of log(aggregate) against log(epsilon).
fn log_slope(points: &[(f64, f64)]) -> f64 {
    let n = points.len() as f64;
    let (mut sx, mut sy, mut sxx, mut sxy) = (0.0, 0.0, 0.0, 0.0);
    for &(e, v) in points {
        let (x, y) = (e.ln(), v.ln());
        sx += x;
        sy += y;
        sxx += x * x;
        sxy += x * y;
    }
    let denom = n * sxx - sx * sx;
    if denom == 0.0 {
        0.0
    } else {
        (n * sxy - sx * sy) / denom
    }
}

fn vanishing_sides(levels: &[TraceLevel], collapse_slope: f64) -> Vec<Side> {
    let tail = &levels[levels.len().saturating_sub(3)..];
    let mut out = Vec::new();
    for side in [Side::One, Side::Two] {
        let agg = |l: &TraceLevel| match side {
            Side::One => l.a,
            Side::Two => l.b,
        };
        let last = tail.last().map(agg).unwrap_or(0.0);
        let vanishes = if last <= TRADE_THRESHOLD {
            true
        } else if tail.len() >= 2 {
            let pts: Vec<(f64, f64)> = tail.iter().map(|l| (l.epsilon, agg(l))).collect();
            log_slope(&pts) > collapse_slope
        } else {
            false
        };
        if vanishes {
            out.push(side);
        }
    }
    out
}

fn verified(economy: &Economy, offers: Vec<f64>, iterations: usize, config: &SolverConfig) -> EquilibriumCandidate {
    let all: Vec<usize> = (0..economy.len()).collect();
    let residual = deviation_gain_raw(economy, &offers, 0.0, &all, config);
    EquilibriumCandidate {
        profile: OfferProfile(offers),
        epsilon: 0.0,
        iterations,
        residual,
        converged: residual <= config.fixed_point_tolerance,
        cycle_detected: false,
    }
}

fn trades(economy: &Economy, offers: &[f64]) -> bool {
    let agg = aggregates_raw(economy, offers, 0.0);
    agg.a > TRADE_THRESHOLD && agg.b > TRADE_THRESHOLD
}

/// Solves the perturbed game along `config.epsilon_schedule` and takes the
/// limit at `epsilon = 0`.
///
/// A side whose aggregate shrinks like a positive power of the perturbation
/// over the last levels is taken to vanish, and the limit is the zero
/// profile. Otherwise the last profile is polished at `epsilon = 0` by
/// damped best response and then by Newton on the first-order conditions,
/// and the result is accepted only if it passes the deviation check.
pub fn homotopy_solve(economy: &Economy, config: &SolverConfig) -> Result<HomotopyOutcome, SolverError> {
    config.validate()?;
    validate(economy).map_err(|e| SolverError::BadConfig(e.to_string()))?;
    let n = economy.len();
    let all: Vec<usize> = (0..n).collect();
    let initial = OfferProfile::fraction_of_endowment(economy, config.initial_fraction);
    let mut current = initial.0.clone();
    let mut trace = HomotopyTrace::default();
    let mut last_good_level = None;
    for (level, &epsilon) in config.epsilon_schedule.iter().enumerate() {
        let start = if config.cold_start { &initial.0 } else { &current };
        let candidate = damped_iteration(economy, epsilon, start, &all, config);
        let agg = aggregates_raw(economy, candidate.profile.offers(), epsilon);
        let converged = candidate.converged;
        current = candidate.profile.0.clone();
        trace.levels.push(TraceLevel {
            epsilon,
            candidate,
            price: agg.price,
            a: agg.a,
            b: agg.b,
        });
        if !converged {
            break;
        }
        last_good_level = Some(level);
    }

    if last_good_level != Some(config.epsilon_schedule.len() - 1) {
        let offers = match last_good_level {
            Some(k) => trace.levels[k].candidate.profile.0.clone(),
            None => initial.0,
        };
        let candidate = verified(economy, offers, 0, config);
        return Ok(HomotopyOutcome {
            trace,
            candidate,
            status: HomotopyStatus::Failed,
            last_good_level,
            vanishing: Vec::new(),
        });
    }

    let vanishing = vanishing_sides(&trace.levels, config.collapse_slope);
    if !vanishing.is_empty() {
        let candidate = verified(economy, vec![0.0; n], 0, config);
        let status = if candidate.converged {
            HomotopyStatus::NonTrade
        } else {
            HomotopyStatus::Unverified
        };
        return Ok(HomotopyOutcome {
            trace,
            candidate,
            status,
            last_good_level,
            vanishing,
        });
    }

    let polished = damped_iteration(economy, 0.0, &current, &all, config);
    let mut best = verified(economy, polished.profile.0.clone(), polished.iterations, config);
    if let Some(root) = solve_stationary(economy, &best.profile.0, 0.0, &all, &NewtonOptions::default()) {
        let refined = verified(economy, root.offers, best.iterations + root.iterations, config);
        // a root of the first-order system is exact where best response is
        // only accurate to its tolerance, so it wins unless clearly worse
        if refined.residual <= best.residual.max(config.fixed_point_tolerance) {
            best = refined;
        }
    }
    let status = match (best.converged, trades(economy, best.profile.offers())) {
        (true, true) => HomotopyStatus::Trade,
        (true, false) => HomotopyStatus::NonTrade,
        (false, _) => HomotopyStatus::Unverified,
    };
    Ok(HomotopyOutcome {
        trace,
        candidate: best,
        status,
        last_good_level,
        vanishing,
    })
}
