//! Checks on candidate profiles: first-order conditions with bound
//! multipliers, trade classification, unilateral deviation gains and the
//! curvature of a single agent's payoff.

mod certify;

use serde::{Deserialize, Serialize};

use crate::economy::Economy;
use crate::mechanism::{
    aggregates_raw, gradient_raw, payoff_curve, CurvePoint, GradientKind, MechanismError, OfferProfile,
};
use crate::solver::{deviation_gain_raw, EquilibriumCandidate, SolverConfig, SolverError, TRADE_THRESHOLD};

pub use certify::{
    certify_no_trade, foc_sweep, Certificate, CertificateKind, Evidence, FocSweep, SideSweep, SignStats,
    StationaryCandidate,
};

/// Offers within this of a bound count as sitting on it.
pub const BOUND_TOLERANCE: f64 = 1e-9;

/// Second differences beyond this in magnitude count as curvature.
pub const CURVATURE_THRESHOLD: f64 = 1e-9;

pub const DEFAULT_CURVE_SAMPLES: usize = 400;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TradeClass {
    Trade,
    NonTrade,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Classification {
    pub class: TradeClass,
    /// Exactly one side offers a positive amount; the allocation is autarky.
    pub one_sided: bool,
    pub a: f64,
    pub b: f64,
}

pub fn classify(economy: &Economy, candidate: &EquilibriumCandidate) -> Classification {
    let agg = aggregates_raw(economy, candidate.profile.offers(), 0.0);
    let (pa, pb) = (agg.a > TRADE_THRESHOLD, agg.b > TRADE_THRESHOLD);
    Classification {
        class: if pa && pb {
            TradeClass::Trade
        } else {
            TradeClass::NonTrade
        },
        one_sided: pa != pb,
        a: agg.a,
        b: agg.b,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AgentKkt {
    pub offer: f64,
    #[serde(with = "crate::report::lenient_f64")]
    pub gradient: f64,
    pub gradient_kind: GradientKind,
    /// Multiplier of `offer <= endowment`.
    pub lambda: f64,
    /// Multiplier of `offer >= 0`.
    pub mu: f64,
    #[serde(with = "crate::report::lenient_f64")]
    pub stationarity_residual: f64,
    pub complementarity_residual: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KktReport {
    pub per_agent: Vec<AgentKkt>,
    /// Largest stationarity residual; `inf` if a gradient diverges, `NaN`
    /// when the profile is in autarky and gradients are undefined.
    #[serde(with = "crate::report::lenient_f64")]
    pub max_residual: f64,
    pub degenerate: bool,
    pub infinite: bool,
}

/// Stationarity and complementary slackness of each agent's box-constrained
/// problem, with multipliers read off the gradient sign at active bounds.
pub fn kkt_residual(economy: &Economy, candidate: &EquilibriumCandidate) -> Result<KktReport, MechanismError> {
    let profile = &candidate.profile;
    profile.check(economy)?;
    let epsilon = candidate.epsilon;
    if !(epsilon >= 0.0 && epsilon.is_finite()) {
        return Err(MechanismError::BadEpsilon(epsilon));
    }
    let offers = profile.offers();
    let mut per_agent = Vec::with_capacity(economy.len());
    let (mut degenerate, mut infinite) = (false, false);
    let mut max_residual: f64 = 0.0;
    for (i, &offer) in offers.iter().enumerate() {
        let endowment = economy.agent(i).endowment;
        let g = gradient_raw(economy, offers, epsilon, i);
        let (mut lambda, mut mu) = (0.0, 0.0);
        let stationarity = match g.kind {
            GradientKind::Undefined => {
                degenerate = true;
                f64::NAN
            }
            GradientKind::Infinite => {
                infinite = true;
                f64::INFINITY
            }
            GradientKind::Finite => {
                if offer <= BOUND_TOLERANCE {
                    mu = f64::max(0.0, -g.value);
                }
                if offer >= endowment - BOUND_TOLERANCE {
                    lambda = f64::max(0.0, g.value);
                }
                (g.value - lambda + mu).abs()
            }
        };
        if !stationarity.is_nan() {
            max_residual = max_residual.max(stationarity);
        }
        per_agent.push(AgentKkt {
            offer,
            gradient: g.value,
            gradient_kind: g.kind,
            lambda,
            mu,
            stationarity_residual: stationarity,
            complementarity_residual: mu * offer + lambda * (endowment - offer),
        });
    }
    if degenerate && !infinite {
        max_residual = f64::NAN;
    }
    Ok(KktReport {
        per_agent,
        max_residual,
        degenerate,
        infinite,
    })
}

/// Largest payoff gain any agent obtains by a global unilateral deviation,
/// clamped at zero.
pub fn deviation_check(
    economy: &Economy,
    candidate: &EquilibriumCandidate,
    config: &SolverConfig,
) -> Result<f64, SolverError> {
    candidate.profile.check(economy)?;
    let epsilon = candidate.epsilon;
    if !(epsilon >= 0.0 && epsilon.is_finite()) {
        return Err(MechanismError::BadEpsilon(epsilon).into());
    }
    let all: Vec<usize> = (0..economy.len()).collect();
    Ok(deviation_gain_raw(
        economy,
        candidate.profile.offers(),
        epsilon,
        &all,
        config,
    ))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Curvature {
    Concave,
    Convex,
    Mixed,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConcavityReport {
    pub class: Curvature,
    pub curve: Vec<CurvePoint>,
    pub positive_differences: usize,
    pub negative_differences: usize,
    pub undefined_differences: usize,
    /// Lowest sampled point, when it is not an endpoint.
    pub interior_minimum: Option<CurvePoint>,
}

/// Curvature of the agent's payoff in its own offer, judged from the signs
/// of second differences on a uniform sample. A flat curve is concave.
pub fn concavity_diagnostic(
    economy: &Economy,
    profile: &OfferProfile,
    epsilon: f64,
    agent: usize,
    samples: usize,
) -> Result<ConcavityReport, MechanismError> {
    let curve = payoff_curve(economy, profile, epsilon, agent, samples)?;
    let (mut pos, mut neg, mut undefined) = (0, 0, 0);
    for w in curve.windows(3) {
        let d = w[0].payoff - 2.0 * w[1].payoff + w[2].payoff;
        if !d.is_finite() {
            undefined += 1;
        } else if d > CURVATURE_THRESHOLD {
            pos += 1;
        } else if d < -CURVATURE_THRESHOLD {
            neg += 1;
        }
    }
    let class = match (pos, neg) {
        (0, _) => Curvature::Concave,
        (_, 0) => Curvature::Convex,
        _ => Curvature::Mixed,
    };
    let lowest = curve
        .iter()
        .enumerate()
        .filter(|(_, p)| !p.payoff.is_nan())
        .min_by(|x, y| x.1.payoff.total_cmp(&y.1.payoff))
        .map(|(k, p)| (k, *p));
    let interior_minimum = match lowest {
        Some((k, p)) if k > 0 && k + 1 < curve.len() => Some(p),
        _ => None,
    };
    Ok(ConcavityReport {
        class,
        curve,
        positive_differences: pos,
        negative_differences: neg,
        undefined_differences: undefined,
        interior_minimum,
    })
}
