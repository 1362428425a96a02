//! Exhaustive pure-strategy equilibrium search on a per-agent offer grid.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{EquilibriumCandidate, SolverError};
use crate::economy::{Economy, Side};
use crate::mechanism::{aggregates_raw, payoff_raw, OfferProfile};

pub const MAX_ORACLE_AGENTS: usize = 4;
pub const MAX_ORACLE_PROFILES: f64 = 1e8;

/// A grid deviation must improve the payoff by more than this to count.
const DEVIATION_TOLERANCE: f64 = 1e-9;

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct OracleStats {
    pub profiles: u64,
    pub survivors: usize,
    pub resolution: f64,
    pub epsilon: f64,
}

fn agent_grid(endowment: f64, resolution: f64) -> Vec<f64> {
    let steps = (endowment / resolution + 1e-9).floor() as usize;
    let mut g: Vec<f64> = (0..=steps).map(|k| (k as f64 * resolution).min(endowment)).collect();
    if endowment - g[g.len() - 1] > 1e-9 * resolution {
        g.push(endowment);
    }
    g
}

struct Oracle<'a> {
    economy: &'a Economy,
    grids: Vec<Vec<f64>>,
    epsilon: f64,
    resolution: f64,
}

impl Oracle<'_> {
    /// Offer just above zero, used only where the unperturbed rule is
    /// discontinuous: the agent would be alone on its side facing a trading
    /// opposite side, so any positive offer buys the whole opposite aggregate.
    fn probe(&self, offers: &[f64], agent: usize) -> Option<f64> {
        if self.epsilon != 0.0 {
            return None;
        }
        let side = self.economy.agent(agent).side;
        let alone = self.economy.side(side).iter().all(|&j| j == agent || offers[j] == 0.0);
        let opposite: f64 = self.economy.side(side.opposite()).iter().map(|&j| offers[j]).sum();
        if !(alone && opposite > 0.0) {
            return None;
        }
        let endowment = self.economy.agent(agent).endowment;
        Some(1e-9 * self.resolution.min(endowment))
    }

    /// Whether `agent` has a grid (or probe) deviation beating its payoff
    /// at `offers`. Neighbouring grid points are tried first.
    fn can_improve(&self, offers: &mut [f64], agent: usize, index: usize) -> bool {
        let saved = offers[agent];
        let current = payoff_raw(self.economy, offers, self.epsilon, agent);
        let grid = &self.grids[agent];
        let mut order = Vec::with_capacity(grid.len() + 1);
        if index > 0 {
            order.push(grid[index - 1]);
        }
        if index + 1 < grid.len() {
            order.push(grid[index + 1]);
        }
        if let Some(p) = self.probe(offers, agent) {
            order.push(p);
        }
        order.extend(
            grid.iter()
                .enumerate()
                .filter(|&(k, _)| k + 1 != index && k != index + 1 && k != index)
                .map(|(_, &v)| v),
        );
        let mut improved = false;
        for v in order {
            offers[agent] = v;
            if payoff_raw(self.economy, offers, self.epsilon, agent) > current + DEVIATION_TOLERANCE {
                improved = true;
                break;
            }
        }
        offers[agent] = saved;
        improved
    }

    /// Survivors among the profiles whose agents `1..n` sit at `tuple`.
    fn row(&self, tuple: &[usize]) -> Vec<Vec<usize>> {
        let n = self.grids.len();
        let mut offers = vec![0.0; n];
        for i in 1..n {
            offers[i] = self.grids[i][tuple[i - 1]];
        }
        let values: Vec<f64> = self.grids[0]
            .iter()
            .map(|&v| {
                offers[0] = v;
                payoff_raw(self.economy, &offers, self.epsilon, 0)
            })
            .collect();
        let mut best = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        if let Some(p) = self.probe(&offers, 0) {
            offers[0] = p;
            best = best.max(payoff_raw(self.economy, &offers, self.epsilon, 0));
        }
        let mut out = Vec::new();
        for (k, &v) in values.iter().enumerate() {
            if v.is_nan() || v + DEVIATION_TOLERANCE < best {
                continue;
            }
            offers[0] = self.grids[0][k];
            let survives = (1..n).all(|i| !self.can_improve(&mut offers, i, tuple[i - 1]));
            if survives {
                let mut idx = vec![k];
                idx.extend_from_slice(tuple);
                out.push(idx);
            }
        }
        out
    }
}

/// Every grid profile at which no agent gains more than `1e-9` by moving to
/// another point of its grid.
pub fn grid_oracle(economy: &Economy, resolution: f64, epsilon: f64) -> Result<Vec<EquilibriumCandidate>, SolverError> {
    grid_oracle_with_stats(economy, resolution, epsilon).map(|(c, _)| c)
}

pub fn grid_oracle_with_stats(
    economy: &Economy,
    resolution: f64,
    epsilon: f64,
) -> Result<(Vec<EquilibriumCandidate>, OracleStats), SolverError> {
    if !(resolution > 0.0 && resolution.is_finite()) {
        return Err(SolverError::BadResolution(resolution));
    }
    if !(epsilon >= 0.0 && epsilon.is_finite()) {
        return Err(crate::mechanism::MechanismError::BadEpsilon(epsilon).into());
    }
    let grids: Vec<Vec<f64>> = economy
        .agents()
        .iter()
        .map(|a| agent_grid(a.endowment, resolution))
        .collect();
    let profiles: f64 = grids.iter().map(|g| g.len() as f64).product();
    if economy.len() > MAX_ORACLE_AGENTS || profiles > MAX_ORACLE_PROFILES {
        return Err(SolverError::CostGuard {
            agents: economy.len(),
            profiles,
            max_agents: MAX_ORACLE_AGENTS,
            max_profiles: MAX_ORACLE_PROFILES,
        });
    }
    let oracle = Oracle {
        economy,
        grids,
        epsilon,
        resolution,
    };
    let n = economy.len();
    let tail_sizes: Vec<usize> = oracle.grids[1..].iter().map(Vec::len).collect();
    let tuples: usize = tail_sizes.iter().product();
    let mut survivors: Vec<Vec<usize>> = (0..tuples)
        .into_par_iter()
        .flat_map_iter(|mut code| {
            let mut tuple = vec![0; n - 1];
            for (slot, &size) in tuple.iter_mut().zip(&tail_sizes).rev() {
                *slot = code % size;
                code /= size;
            }
            oracle.row(&tuple)
        })
        .collect();
    survivors.sort();
    let candidates: Vec<EquilibriumCandidate> = survivors
        .into_iter()
        .map(|idx| {
            let offers: Vec<f64> = idx.iter().enumerate().map(|(i, &k)| oracle.grids[i][k]).collect();
            EquilibriumCandidate {
                profile: OfferProfile(offers),
                epsilon,
                iterations: 0,
                residual: 0.0,
                converged: true,
                cycle_detected: false,
            }
        })
        .collect();
    let stats = OracleStats {
        profiles: profiles as u64,
        survivors: candidates.len(),
        resolution,
        epsilon,
    };
    Ok((candidates, stats))
}

/// Survivor with both aggregates positive that is closest (sup norm) to `target`.
pub fn nearest_trade_survivor<'a>(
    economy: &Economy,
    survivors: &'a [EquilibriumCandidate],
    target: &OfferProfile,
) -> Option<(&'a EquilibriumCandidate, f64)> {
    survivors
        .iter()
        .filter(|c| {
            let agg = aggregates_raw(economy, c.profile.offers(), 0.0);
            agg.side_total(Side::One) > 0.0 && agg.side_total(Side::Two) > 0.0
        })
        .map(|c| (c, c.profile.distance(target)))
        .min_by(|x, y| x.1.total_cmp(&y.1))
}
