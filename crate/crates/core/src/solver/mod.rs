//! Equilibrium computation.
//!
//! Best responses are global 1-D maximizations; the perturbed game is solved
//! by damped simultaneous best-response iteration; the unperturbed game is
//! reached by following a decreasing perturbation schedule.

mod homotopy;
pub(crate) mod newton;
mod oracle;
pub(crate) mod search;

use std::collections::hash_map::DefaultHasher;
use std::collections::VecDeque;
use std::hash::{Hash, Hasher};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::economy::Economy;
use crate::mechanism::{aggregates_raw, gradient_raw, payoff_raw, MechanismError, OfferProfile};

pub use homotopy::{homotopy_solve, HomotopyOutcome, HomotopyStatus, HomotopyTrace, TraceLevel, TRADE_THRESHOLD};
pub use newton::{solve_stationary, NewtonOptions, StationaryPoint};
pub use oracle::{
    grid_oracle, grid_oracle_with_stats, nearest_trade_survivor, OracleStats, MAX_ORACLE_AGENTS, MAX_ORACLE_PROFILES,
};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SolverError {
    #[error(transparent)]
    Mechanism(#[from] MechanismError),
    #[error("perturbation must be positive here, got {0}")]
    EpsilonNotPositive(f64),
    #[error("grid oracle refused: {agents} agents, {profiles} profiles (limits {max_agents} agents, {max_profiles} profiles)")]
    CostGuard {
        agents: usize,
        profiles: f64,
        max_agents: usize,
        max_profiles: f64,
    },
    #[error("grid resolution must be finite and positive, got {0}")]
    BadResolution(f64),
    #[error("invalid solver configuration: {0}")]
    BadConfig(String),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SolverConfig {
    /// Points in the coarse scan of each best response.
    pub grid_points: usize,
    /// Golden-section bracket width at which refinement stops (offer units).
    pub refine_tolerance: f64,
    /// Fraction of the way each offer moves toward its best response per round.
    pub br_damping: f64,
    pub max_iterations: usize,
    /// Stop when no offer moves more than this in a round.
    pub fixed_point_tolerance: f64,
    /// Strictly decreasing perturbation levels in `(0, 1]`.
    pub epsilon_schedule: Vec<f64>,
    /// Restart every level from the initial profile instead of the previous solution.
    pub cold_start: bool,
    /// Fraction of each endowment offered at the first level.
    pub initial_fraction: f64,
    /// A side aggregate whose log-log slope against the perturbation exceeds
    /// this over the last levels is treated as vanishing in the limit.
    pub collapse_slope: f64,
    /// Number of recent iterates remembered for cycle detection.
    pub cycle_window: usize,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            grid_points: 512,
            refine_tolerance: 1e-10,
            br_damping: 0.5,
            max_iterations: 10_000,
            fixed_point_tolerance: 1e-8,
            epsilon_schedule: vec![1.0, 0.3, 0.1, 0.03, 0.01, 3e-3, 1e-3, 3e-4, 1e-4],
            cold_start: false,
            initial_fraction: 0.5,
            collapse_slope: 0.1,
            cycle_window: 50,
        }
    }
}

impl SolverConfig {
    pub fn validate(&self) -> Result<(), SolverError> {
        let bad = |m: &str| Err(SolverError::BadConfig(m.to_string()));
        if self.grid_points < 3 {
            return bad("grid_points must be at least 3");
        }
        if !(self.refine_tolerance > 0.0 && self.fixed_point_tolerance > 0.0) {
            return bad("tolerances must be positive");
        }
        if !(self.br_damping > 0.0 && self.br_damping <= 1.0) {
            return bad("br_damping must lie in (0, 1]");
        }
        if self.max_iterations == 0 {
            return bad("max_iterations must be positive");
        }
        if !(self.initial_fraction >= 0.0 && self.initial_fraction <= 1.0) {
            return bad("initial_fraction must lie in [0, 1]");
        }
        if self.epsilon_schedule.is_empty() {
            return bad("epsilon_schedule is empty");
        }
        if self.epsilon_schedule.iter().any(|&e| !(e > 0.0 && e <= 1.0)) {
            return bad("epsilon_schedule entries must lie in (0, 1]");
        }
        if self.epsilon_schedule.windows(2).any(|w| w[1] >= w[0]) {
            return bad("epsilon_schedule must be strictly decreasing");
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BestResponse {
    pub offer: f64,
    #[serde(with = "crate::report::lenient_f64")]
    pub payoff: f64,
    /// Unperturbed game with a silent opposite side: every own offer yields
    /// autarky, so the response is 0 by convention.
    pub degenerate: bool,
}

/// Best response with `offers` as scratch; the agent's entry is restored.
pub(crate) fn best_response_raw(
    economy: &Economy,
    offers: &mut [f64],
    epsilon: f64,
    agent: usize,
    grid_points: usize,
    tolerance: f64,
) -> BestResponse {
    let saved = offers[agent];
    let side = economy.agent(agent).side;
    let agg = aggregates_raw(economy, offers, epsilon);
    if epsilon == 0.0 && agg.side_total(side.opposite()) == 0.0 {
        offers[agent] = 0.0;
        let payoff = payoff_raw(economy, offers, epsilon, agent);
        offers[agent] = saved;
        return BestResponse {
            offer: 0.0,
            payoff,
            degenerate: true,
        };
    }
    let upper = economy.agent(agent).endowment;
    let cell = std::cell::RefCell::new(&mut *offers);
    let f = |v: f64| {
        let mut o = cell.borrow_mut();
        o[agent] = v;
        payoff_raw(economy, &o, epsilon, agent)
    };
    let mut g = |v: f64| {
        let mut o = cell.borrow_mut();
        o[agent] = v;
        gradient_raw(economy, &o, epsilon, agent).value
    };
    let best = search::maximize(f, Some(&mut g), 0.0, upper, grid_points, tolerance);
    offers[agent] = saved;
    BestResponse {
        offer: best.x,
        payoff: best.value,
        degenerate: false,
    }
}

/// Global maximizer of the agent's payoff over `[0, endowment]`, everyone
/// else held at `profile`.
pub fn best_response(
    economy: &Economy,
    profile: &OfferProfile,
    epsilon: f64,
    agent: usize,
    config: &SolverConfig,
) -> Result<BestResponse, SolverError> {
    profile.check(economy)?;
    crate::mechanism::payoff(economy, profile, epsilon, agent)?;
    let mut offers = profile.0.clone();
    Ok(best_response_raw(
        economy,
        &mut offers,
        epsilon,
        agent,
        config.grid_points,
        config.refine_tolerance,
    ))
}

/// Largest payoff improvement any listed agent can obtain unilaterally.
pub(crate) fn deviation_gain_raw(
    economy: &Economy,
    offers: &[f64],
    epsilon: f64,
    agents: &[usize],
    config: &SolverConfig,
) -> f64 {
    let mut scratch = offers.to_vec();
    let mut gain: f64 = 0.0;
    for &i in agents {
        let current = payoff_raw(economy, offers, epsilon, i);
        let br = best_response_raw(
            economy,
            &mut scratch,
            epsilon,
            i,
            config.grid_points,
            config.refine_tolerance,
        );
        if br.payoff > current {
            gain = gain.max(br.payoff - current);
        }
    }
    gain
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EquilibriumCandidate {
    pub profile: OfferProfile,
    pub epsilon: f64,
    pub iterations: usize,
    /// Largest unilateral payoff gain available at `profile`.
    #[serde(with = "crate::report::lenient_f64")]
    pub residual: f64,
    pub converged: bool,
    /// An exact earlier iterate recurred, so the iteration was stopped.
    pub cycle_detected: bool,
}

impl EquilibriumCandidate {
    /// A profile to be checked, with no solver history.
    pub fn at(profile: OfferProfile, epsilon: f64) -> Self {
        Self {
            profile,
            epsilon,
            iterations: 0,
            residual: f64::NAN,
            converged: false,
            cycle_detected: false,
        }
    }
}

fn state_hash(offers: &[f64]) -> u64 {
    let mut h = DefaultHasher::new();
    for v in offers {
        v.to_bits().hash(&mut h);
    }
    h.finish()
}

/// Damped simultaneous best-response iteration over `agents`; everyone else
/// stays at `start`. Works at any `epsilon >= 0`.
pub(crate) fn damped_iteration(
    economy: &Economy,
    epsilon: f64,
    start: &[f64],
    agents: &[usize],
    config: &SolverConfig,
) -> EquilibriumCandidate {
    let mut current = start.to_vec();
    let mut scratch = start.to_vec();
    let mut targets = vec![0.0; agents.len()];
    let mut window: VecDeque<u64> = VecDeque::with_capacity(config.cycle_window + 1);
    let mut iterations = 0;
    let mut settled = false;
    let mut cycle_detected = false;
    while iterations < config.max_iterations {
        iterations += 1;
        scratch.copy_from_slice(&current);
        for (t, &i) in targets.iter_mut().zip(agents) {
            *t = best_response_raw(
                economy,
                &mut scratch,
                epsilon,
                i,
                config.grid_points,
                config.refine_tolerance,
            )
            .offer;
        }
        let mut change: f64 = 0.0;
        for (&t, &i) in targets.iter().zip(agents) {
            let upper = economy.agent(i).endowment;
            let next = (current[i] + config.br_damping * (t - current[i])).clamp(0.0, upper);
            change = change.max((next - current[i]).abs());
            current[i] = next;
        }
        if change < config.fixed_point_tolerance {
            settled = true;
            break;
        }
        if config.cycle_window > 0 {
            let h = state_hash(&current);
            if window.contains(&h) {
                cycle_detected = true;
                break;
            }
            window.push_back(h);
            if window.len() > config.cycle_window {
                window.pop_front();
            }
        }
    }
    let residual = deviation_gain_raw(economy, &current, epsilon, agents, config);
    EquilibriumCandidate {
        profile: OfferProfile(current),
        epsilon,
        iterations,
        residual,
        converged: settled && residual <= config.fixed_point_tolerance,
        cycle_detected,
    }
}

/// Equilibrium of the perturbed game by damped best-response iteration.
/// Non-convergence is reported through the candidate, never as an error.
pub fn solve_perturbed(
    economy: &Economy,
    epsilon: f64,
    start: &OfferProfile,
    config: &SolverConfig,
) -> Result<EquilibriumCandidate, SolverError> {
    if !(epsilon > 0.0 && epsilon.is_finite()) {
        return Err(SolverError::EpsilonNotPositive(epsilon));
    }
    config.validate()?;
    start.check(economy)?;
    let agents: Vec<usize> = (0..economy.len()).collect();
    Ok(damped_iteration(economy, epsilon, start.offers(), &agents, config))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scenarios;

    #[test]
    fn config_validation() {
        assert!(SolverConfig::default().validate().is_ok());
        let mut c = SolverConfig {
            epsilon_schedule: vec![0.1, 0.3],
            ..Default::default()
        };
        assert!(c.validate().is_err());
        c.epsilon_schedule = vec![2.0, 0.3];
        assert!(c.validate().is_err());
        c = SolverConfig::default();
        c.br_damping = 0.0;
        assert!(c.validate().is_err());
    }

    #[test]
    fn example_one_agent_one_never_offers() {
        let e = scenarios::example1();
        let cfg = SolverConfig::default();
        for others in [[0.5, 1.0, 3.0], [3.9, 0.1, 0.2], [2.0, 2.0, 2.0]] {
            let p: OfferProfile = vec![1.0, others[0], others[1], others[2]].into();
            let br = best_response(&e, &p, 0.0, 0, &cfg).unwrap();
            assert_eq!(br.offer, 0.0);
            assert!(!br.degenerate);
        }
    }

    #[test]
    fn degenerate_when_opposite_side_silent() {
        let e = scenarios::corollary();
        let br = best_response(&e, &vec![1.0, 1.0, 0.0, 0.0].into(), 0.0, 0, &SolverConfig::default()).unwrap();
        assert!(br.degenerate);
        assert_eq!(br.offer, 0.0);
    }

    #[test]
    fn example_three_best_response_jumps_to_an_endpoint() {
        let e = scenarios::example3();
        let p: OfferProfile = scenarios::EXAMPLE3_STATIONARY.to_vec().into();
        let br = best_response(&e, &p, 0.0, 0, &SolverConfig::default()).unwrap();
        assert!(br.offer == 0.0 || br.offer == 4.0, "{}", br.offer);
        let here = crate::mechanism::payoff(&e, &p, 0.0, 0).unwrap();
        assert!(br.payoff > here + 0.01);
    }

    #[test]
    fn best_response_matches_dense_grid() {
        let e = scenarios::corollary();
        let p: OfferProfile = vec![0.0, 0.3, 0.5, 0.2].into();
        let br = best_response(&e, &p, 0.0, 0, &SolverConfig::default()).unwrap();
        // dense-grid oracle
        let n = 1_000_000;
        let mut offers = p.0.clone();
        let (mut best_x, mut best_v) = (0.0, f64::NEG_INFINITY);
        for k in 0..=n {
            offers[0] = 4.0 * k as f64 / n as f64;
            let v = payoff_raw(&e, &offers, 0.0, 0);
            if v > best_v {
                best_v = v;
                best_x = offers[0];
            }
        }
        assert!(
            (br.offer - best_x).abs() <= 2.0 * 4.0 / n as f64,
            "{} vs {}",
            br.offer,
            best_x
        );
        assert!(br.payoff >= best_v - 1e-12);
    }

    #[test]
    fn symmetric_economy_gives_symmetric_solution() {
        let e = scenarios::corollary();
        let cfg = SolverConfig::default();
        let start = OfferProfile::fraction_of_endowment(&e, 0.5);
        let c = solve_perturbed(&e, 0.01, &start, &cfg).unwrap();
        assert!(c.converged, "{c:?}");
        let o = c.profile.offers();
        assert!((o[0] - o[1]).abs() < 1e-6);
        assert!((o[2] - o[3]).abs() < 1e-6);
        // restarting from the answer is immediate
        let again = solve_perturbed(&e, 0.01, &c.profile, &cfg).unwrap();
        assert!(again.converged);
        assert!(again.iterations <= 2);
        assert!(again.residual <= cfg.fixed_point_tolerance);
    }

    #[test]
    fn perturbed_solver_rejects_zero_epsilon() {
        let e = scenarios::corollary();
        let start = OfferProfile::zeros(4);
        assert!(matches!(
            solve_perturbed(&e, 0.0, &start, &SolverConfig::default()),
            Err(SolverError::EpsilonNotPositive(_))
        ));
    }
}
