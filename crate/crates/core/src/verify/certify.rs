use serde::{Deserialize, Serialize};

use super::{classify, deviation_check, kkt_residual, TradeClass};
use crate::economy::{Economy, Side};
use crate::mechanism::{gradient_raw, OfferProfile};
use crate::solver::{
    damped_iteration, grid_oracle_with_stats, homotopy_solve, solve_stationary, EquilibriumCandidate, HomotopyStatus,
    NewtonOptions, SolverConfig, SolverError, MAX_ORACLE_PROFILES,
};

/// Gradients below this in magnitude count as zero in sign statistics.
const ZERO_GRADIENT: f64 = 1e-12;

/// Lowest-residual sweep points used to seed Newton on each side.
const NEWTON_SEEDS: usize = 8;

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct SignStats {
    pub negative: usize,
    pub zero: usize,
    pub positive: usize,
    /// Infinite or undefined gradients.
    pub non_finite: usize,
}

impl SignStats {
    pub fn total(&self) -> usize {
        self.negative + self.zero + self.positive + self.non_finite
    }

    pub fn fraction_negative(&self) -> f64 {
        if self.total() == 0 {
            0.0
        } else {
            self.negative as f64 / self.total() as f64
        }
    }

    fn record(&mut self, g: f64) {
        if !g.is_finite() {
            self.non_finite += 1;
        } else if g < -ZERO_GRADIENT {
            self.negative += 1;
        } else if g > ZERO_GRADIENT {
            self.positive += 1;
        } else {
            self.zero += 1;
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SideSweep {
    pub side: Side,
    /// Interior grid profiles of this side that were visited.
    pub points: usize,
    /// Points where the opposite side's reply did not converge.
    pub reply_failures: usize,
    /// Signs of this side's own-offer gradients, pooled over its agents.
    pub stats: SignStats,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StationaryCandidate {
    pub profile: OfferProfile,
    #[serde(with = "crate::report::lenient_f64")]
    pub kkt_max_residual: f64,
    #[serde(with = "crate::report::lenient_f64")]
    pub deviation_gain: f64,
    pub trade: bool,
    /// Passed the deviation check.
    pub equilibrium: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FocSweep {
    pub resolution: f64,
    pub sides: Vec<SideSweep>,
    pub stationary: Vec<StationaryCandidate>,
}

impl FocSweep {
    pub fn side(&self, side: Side) -> Option<&SideSweep> {
        self.sides.iter().find(|s| s.side == side)
    }
}

fn interior_grid(endowment: f64, resolution: f64) -> Vec<f64> {
    let mut g = Vec::new();
    let mut k = 1;
    loop {
        let v = k as f64 * resolution;
        if v >= endowment - 1e-9 * resolution {
            break;
        }
        g.push(v);
        k += 1;
    }
    g
}

fn sup_distance(x: &[f64], y: &[f64]) -> f64 {
    x.iter().zip(y).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max)
}

fn reply_config(config: &SolverConfig) -> SolverConfig {
    SolverConfig {
        grid_points: 64,
        max_iterations: 100,
        ..config.clone()
    }
}

/// First-order-condition sweep at `epsilon = 0`.
///
/// For each side, its agents' offers range over the interior grid while the
/// opposite side plays its equilibrium reply (damped best response, warm
/// started from the previous point). Gradient signs of the swept side are
/// tallied, and the points where they come closest to vanishing seed Newton
/// on the full first-order system. Every distinct root is then checked for
/// profitable deviations.
pub fn foc_sweep(economy: &Economy, resolution: f64, config: &SolverConfig) -> Result<FocSweep, SolverError> {
    if !(resolution > 0.0 && resolution.is_finite()) {
        return Err(SolverError::BadResolution(resolution));
    }
    config.validate()?;
    let n = economy.len();
    let light = reply_config(config);
    let all: Vec<usize> = (0..n).collect();
    let mut sides = Vec::new();
    let mut roots: Vec<Vec<f64>> = Vec::new();
    for side in [Side::One, Side::Two] {
        let swept = economy.side(side);
        let replying = economy.side(side.opposite());
        let grids: Vec<Vec<f64>> = swept
            .iter()
            .map(|&i| interior_grid(economy.agent(i).endowment, resolution))
            .collect();
        let count: f64 = grids.iter().map(|g| g.len() as f64).product();
        if count > MAX_ORACLE_PROFILES / 100.0 {
            return Err(SolverError::CostGuard {
                agents: n,
                profiles: count,
                max_agents: n,
                max_profiles: MAX_ORACLE_PROFILES / 100.0,
            });
        }
        let mut offers: Vec<f64> = economy.agents().iter().map(|a| 0.5 * a.endowment).collect();
        let mut stats = SignStats::default();
        let mut reply_failures = 0;
        let mut points = 0;
        let mut seeds: Vec<(f64, Vec<f64>)> = Vec::new();
        let mut index = vec![0usize; swept.len()];
        if grids.iter().all(|g| !g.is_empty()) {
            loop {
                for (slot, &i) in swept.iter().enumerate() {
                    offers[i] = grids[slot][index[slot]];
                }
                let reply = damped_iteration(economy, 0.0, &offers, replying, &light);
                if !reply.converged {
                    reply_failures += 1;
                }
                offers.copy_from_slice(reply.profile.offers());
                points += 1;
                let mut worst: f64 = 0.0;
                for &i in swept {
                    let g = gradient_raw(economy, &offers, 0.0, i).value;
                    stats.record(g);
                    worst = if g.is_finite() {
                        worst.max(g.abs())
                    } else {
                        f64::INFINITY
                    };
                }
                if worst.is_finite() {
                    seeds.push((worst, offers.clone()));
                    seeds.sort_by(|x, y| x.0.total_cmp(&y.0));
                    seeds.truncate(NEWTON_SEEDS);
                }
                // odometer over the swept side's grid
                let mut slot = 0;
                while slot < index.len() {
                    index[slot] += 1;
                    if index[slot] < grids[slot].len() {
                        break;
                    }
                    index[slot] = 0;
                    slot += 1;
                }
                if slot == index.len() {
                    break;
                }
            }
        }
        for (_, seed) in &seeds {
            if let Some(root) = solve_stationary(economy, seed, 0.0, &all, &NewtonOptions::default()) {
                if !roots.iter().any(|r| sup_distance(r, &root.offers) < 1e-6) {
                    roots.push(root.offers);
                }
            }
        }
        sides.push(SideSweep {
            side,
            points,
            reply_failures,
            stats,
        });
    }
    roots.sort_by(|x, y| x.partial_cmp(y).unwrap_or(std::cmp::Ordering::Equal));
    let mut stationary = Vec::with_capacity(roots.len());
    for offers in roots {
        let candidate = EquilibriumCandidate::at(OfferProfile(offers), 0.0);
        let kkt = kkt_residual(economy, &candidate)?;
        let gain = deviation_check(economy, &candidate, config)?;
        stationary.push(StationaryCandidate {
            trade: classify(economy, &candidate).class == TradeClass::Trade,
            equilibrium: gain <= config.fixed_point_tolerance,
            profile: candidate.profile,
            kkt_max_residual: kkt.max_residual,
            deviation_gain: gain,
        });
    }
    Ok(FocSweep {
        resolution,
        sides,
        stationary,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum CertificateKind {
    NoTradeUnique,
    TradeEquilibriumVerified,
    Inconclusive,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Evidence {
    pub profiles_checked: u64,
    pub grid_survivors: Vec<OfferProfile>,
    /// Largest deviation gain at the all-zero profile.
    #[serde(with = "crate::report::lenient_f64")]
    pub max_deviation_gain: f64,
    pub homotopy_status: HomotopyStatus,
    pub homotopy_profile: OfferProfile,
    pub foc: FocSweep,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Certificate {
    pub kind: CertificateKind,
    pub resolution: f64,
    pub evidence: Evidence,
}

/// Combines the grid oracle, the homotopy and the first-order sweep.
///
/// `NoTradeUnique` needs the zero profile to be the only grid survivor, to
/// pass the deviation check, and neither the homotopy nor any stationary
/// point to yield a verified trade equilibrium. A verified trade equilibrium
/// from either source gives `TradeEquilibriumVerified`.
pub fn certify_no_trade(economy: &Economy, resolution: f64, config: &SolverConfig) -> Result<Certificate, SolverError> {
    let (survivors, stats) = grid_oracle_with_stats(economy, resolution, 0.0)?;
    let zero = EquilibriumCandidate::at(OfferProfile::zeros(economy.len()), 0.0);
    let zero_gain = deviation_check(economy, &zero, config)?;
    let homotopy = homotopy_solve(economy, config)?;
    let foc = foc_sweep(economy, resolution, config)?;

    let trade_verified =
        homotopy.status == HomotopyStatus::Trade || foc.stationary.iter().any(|s| s.trade && s.equilibrium);
    let only_zero = survivors.len() == 1 && survivors[0].profile.offers().iter().all(|&o| o == 0.0);
    let kind = if trade_verified {
        CertificateKind::TradeEquilibriumVerified
    } else if only_zero && zero_gain <= config.fixed_point_tolerance {
        CertificateKind::NoTradeUnique
    } else {
        CertificateKind::Inconclusive
    };
    Ok(Certificate {
        kind,
        resolution,
        evidence: Evidence {
            profiles_checked: stats.profiles,
            grid_survivors: survivors.into_iter().map(|c| c.profile).collect(),
            max_deviation_gain: zero_gain,
            homotopy_status: homotopy.status,
            homotopy_profile: homotopy.candidate.profile,
            foc,
        },
    })
}
