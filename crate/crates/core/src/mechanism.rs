//! Trading-post allocation rule, Edgeworth payoffs and own-offer gradients.
//!
//! With outside perturbation `epsilon > 0` the price of `x` is
//! `(B + eps) / (A + eps)`; side One agent `i` receives
//! `(x0_i - a_i, a_i * price)` and side Two agent `j` receives
//! `(b_j / price, y0_j - b_j)`. At `epsilon = 0` the same rule applies when
//! both aggregates are positive, otherwise everyone consumes their endowment.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::economy::{Economy, Side};
use crate::utility::Commodity;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum MechanismError {
    #[error("profile has {found} offers, economy has {expected} agents")]
    LengthMismatch { expected: usize, found: usize },
    #[error("agent {agent}: offer {offer} outside [0, {endowment}]")]
    Infeasible { agent: usize, offer: f64, endowment: f64 },
    #[error("agent index {agent} out of range (economy has {n} agents)")]
    NoSuchAgent { agent: usize, n: usize },
    #[error("epsilon must be finite and non-negative, got {0}")]
    BadEpsilon(f64),
    #[error("a payoff curve needs at least 3 samples, got {0}")]
    TooFewSamples(usize),
}

/// Offers per agent, in units of the agent's endowed commodity.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct OfferProfile(pub Vec<f64>);

impl OfferProfile {
    pub fn new(offers: Vec<f64>) -> Self {
        Self(offers)
    }

    pub fn zeros(n: usize) -> Self {
        Self(vec![0.0; n])
    }

    /// Every agent offers `fraction` of their endowment.
    pub fn fraction_of_endowment(economy: &Economy, fraction: f64) -> Self {
        Self(economy.agents().iter().map(|a| fraction * a.endowment).collect())
    }

    pub fn offers(&self) -> &[f64] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn check(&self, economy: &Economy) -> Result<(), MechanismError> {
        if self.0.len() != economy.len() {
            return Err(MechanismError::LengthMismatch {
                expected: economy.len(),
                found: self.0.len(),
            });
        }
        for (i, (&offer, agent)) in self.0.iter().zip(economy.agents()).enumerate() {
            if !(offer >= 0.0 && offer <= agent.endowment) {
                return Err(MechanismError::Infeasible {
                    agent: i + 1,
                    offer,
                    endowment: agent.endowment,
                });
            }
        }
        Ok(())
    }

    /// Sup-norm distance.
    pub fn distance(&self, other: &OfferProfile) -> f64 {
        self.0
            .iter()
            .zip(&other.0)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max)
    }
}

impl From<Vec<f64>> for OfferProfile {
    fn from(v: Vec<f64>) -> Self {
        Self(v)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Aggregates {
    /// Total side One offer.
    pub a: f64,
    /// Total side Two offer.
    pub b: f64,
    pub epsilon: f64,
    /// `(B + eps) / (A + eps)`; infinite or NaN when undefined at `eps = 0`.
    pub price: f64,
}

impl Aggregates {
    /// Whether the allocation rule moves goods (as opposed to autarky).
    pub fn trades(&self) -> bool {
        self.epsilon > 0.0 || (self.a > 0.0 && self.b > 0.0)
    }

    pub fn side_total(&self, side: Side) -> f64 {
        match side {
            Side::One => self.a,
            Side::Two => self.b,
        }
    }
}

#[inline]
pub(crate) fn aggregates_raw(economy: &Economy, offers: &[f64], epsilon: f64) -> Aggregates {
    let a: f64 = economy.side(Side::One).iter().map(|&i| offers[i]).sum();
    let b: f64 = economy.side(Side::Two).iter().map(|&i| offers[i]).sum();
    Aggregates {
        a,
        b,
        epsilon,
        price: (b + epsilon) / (a + epsilon),
    }
}

pub fn aggregates(economy: &Economy, profile: &OfferProfile, epsilon: f64) -> Aggregates {
    aggregates_raw(economy, profile.offers(), epsilon)
}

#[inline]
pub(crate) fn bundle_raw(economy: &Economy, offers: &[f64], agg: &Aggregates, j: usize) -> (f64, f64) {
    let agent = economy.agent(j);
    if !agg.trades() {
        return agent.endowment_bundle();
    }
    let offer = offers[j];
    match agent.side {
        Side::One => (
            agent.endowment - offer,
            offer * (agg.b + agg.epsilon) / (agg.a + agg.epsilon),
        ),
        Side::Two => (
            offer * (agg.a + agg.epsilon) / (agg.b + agg.epsilon),
            agent.endowment - offer,
        ),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Bundle {
    pub x: f64,
    pub y: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Allocation {
    pub bundles: Vec<Bundle>,
    pub traded: bool,
    pub aggregates: Aggregates,
}

fn check_epsilon(epsilon: f64) -> Result<(), MechanismError> {
    if epsilon.is_finite() && epsilon >= 0.0 {
        Ok(())
    } else {
        Err(MechanismError::BadEpsilon(epsilon))
    }
}

fn check_agent(economy: &Economy, agent: usize) -> Result<(), MechanismError> {
    if agent < economy.len() {
        Ok(())
    } else {
        Err(MechanismError::NoSuchAgent {
            agent,
            n: economy.len(),
        })
    }
}

pub fn allocate(economy: &Economy, profile: &OfferProfile, epsilon: f64) -> Result<Allocation, MechanismError> {
    profile.check(economy)?;
    check_epsilon(epsilon)?;
    let offers = profile.offers();
    let agg = aggregates_raw(economy, offers, epsilon);
    let bundles = (0..economy.len())
        .map(|j| {
            let (x, y) = bundle_raw(economy, offers, &agg, j);
            Bundle { x, y }
        })
        .collect();
    Ok(Allocation {
        bundles,
        traded: agg.trades(),
        aggregates: agg,
    })
}

/// `V_i = u_i + sum_{j != i} gamma_i^j u_j`. Zero weights are skipped; any
/// weighted utility that is undefined on the boundary (`-inf`) makes the
/// whole payoff `-inf`, whatever the sign of its weight.
#[inline]
pub(crate) fn payoff_with(economy: &Economy, offers: &[f64], agg: &Aggregates, agent: usize) -> f64 {
    let row = economy.concerns().row(agent);
    let mut total = 0.0;
    for (j, &w) in row.iter().enumerate() {
        if w == 0.0 {
            continue;
        }
        let (x, y) = bundle_raw(economy, offers, agg, j);
        let u = economy.utility(j).value(x, y);
        if u.is_nan() || u == f64::NEG_INFINITY {
            return f64::NEG_INFINITY;
        }
        total += w * u;
    }
    total
}

#[inline]
pub(crate) fn payoff_raw(economy: &Economy, offers: &[f64], epsilon: f64, agent: usize) -> f64 {
    let agg = aggregates_raw(economy, offers, epsilon);
    payoff_with(economy, offers, &agg, agent)
}

pub fn payoff(economy: &Economy, profile: &OfferProfile, epsilon: f64, agent: usize) -> Result<f64, MechanismError> {
    profile.check(economy)?;
    check_epsilon(epsilon)?;
    check_agent(economy, agent)?;
    Ok(payoff_raw(economy, profile.offers(), epsilon, agent))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GradientKind {
    Finite,
    /// A marginal utility diverges at the evaluated bundle (e.g. zero
    /// consumption of a good with an unbounded marginal).
    Infinite,
    /// The allocation rule is in autarky (`A + eps = 0` or `B + eps = 0`)
    /// or infinite contributions cancel.
    Undefined,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Gradient {
    #[serde(with = "crate::report::lenient_f64")]
    pub value: f64,
    pub kind: GradientKind,
}

impl Gradient {
    pub fn is_finite(&self) -> bool {
        self.kind == GradientKind::Finite
    }
}

// Derivative times chain factor, with an exactly-zero factor annihilating an
// infinite marginal: the corresponding bundle does not move.
#[inline]
fn chain(marginal: f64, factor: f64) -> f64 {
    if factor == 0.0 {
        0.0
    } else {
        marginal * factor
    }
}

pub(crate) fn gradient_raw(economy: &Economy, offers: &[f64], epsilon: f64, agent: usize) -> Gradient {
    let agg = aggregates_raw(economy, offers, epsilon);
    let total_a = agg.a + epsilon;
    let total_b = agg.b + epsilon;
    if !(total_a > 0.0 && total_b > 0.0) {
        return Gradient {
            value: f64::NAN,
            kind: GradientKind::Undefined,
        };
    }
    let side = economy.agent(agent).side;
    let own = offers[agent];
    let row = economy.concerns().row(agent);
    let mut g = 0.0;
    for (j, &w) in row.iter().enumerate() {
        if w == 0.0 {
            continue;
        }
        let (x, y) = bundle_raw(economy, offers, &agg, j);
        let u = economy.utility(j);
        let term = match (side, j == agent, economy.agent(j).side == side) {
            (Side::One, true, _) => {
                let p = total_b / total_a;
                -u.partial(Commodity::X, x, y) + chain(u.partial(Commodity::Y, x, y), p * (total_a - own) / total_a)
            }
            (Side::Two, true, _) => {
                let q = total_a / total_b;
                chain(u.partial(Commodity::X, x, y), q * (total_b - own) / total_b) - u.partial(Commodity::Y, x, y)
            }
            (Side::One, false, true) => chain(
                u.partial(Commodity::Y, x, y),
                -offers[j] * total_b / (total_a * total_a),
            ),
            (Side::One, false, false) => chain(u.partial(Commodity::X, x, y), offers[j] / total_b),
            (Side::Two, false, true) => chain(
                u.partial(Commodity::X, x, y),
                -offers[j] * total_a / (total_b * total_b),
            ),
            (Side::Two, false, false) => chain(u.partial(Commodity::Y, x, y), offers[j] / total_a),
        };
        g += w * term;
    }
    let kind = if g.is_nan() {
        GradientKind::Undefined
    } else if g.is_infinite() {
        GradientKind::Infinite
    } else {
        GradientKind::Finite
    };
    Gradient { value: g, kind }
}

/// Derivative of `V_agent` with respect to the agent's own offer, chained
/// through the (perturbed) allocation rule.
pub fn payoff_gradient(
    economy: &Economy,
    profile: &OfferProfile,
    epsilon: f64,
    agent: usize,
) -> Result<Gradient, MechanismError> {
    profile.check(economy)?;
    check_epsilon(epsilon)?;
    check_agent(economy, agent)?;
    Ok(gradient_raw(economy, profile.offers(), epsilon, agent))
}

/// Central finite difference of the payoff, one-sided at the bounds, step
/// `max(1e-6, 1e-6 * |offer|)`.
pub fn finite_difference_gradient(
    economy: &Economy,
    profile: &OfferProfile,
    epsilon: f64,
    agent: usize,
) -> Result<f64, MechanismError> {
    profile.check(economy)?;
    check_epsilon(epsilon)?;
    check_agent(economy, agent)?;
    let mut offers = profile.0.clone();
    let own = offers[agent];
    let upper = economy.agent(agent).endowment;
    let h = f64::max(1e-6, 1e-6 * own.abs());
    let mut eval = |v: f64| {
        offers[agent] = v;
        payoff_raw(economy, &offers, epsilon, agent)
    };
    let d = if own - h < 0.0 {
        (eval(own + h) - eval(own)) / h
    } else if own + h > upper {
        (eval(own) - eval(own - h)) / h
    } else {
        (eval(own + h) - eval(own - h)) / (2.0 * h)
    };
    Ok(d)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CurvePoint {
    pub offer: f64,
    #[serde(with = "crate::report::lenient_f64")]
    pub payoff: f64,
}

/// Agent's payoff at `samples` evenly spaced own offers in `[0, endowment]`,
/// everyone else held at `profile`.
pub fn payoff_curve(
    economy: &Economy,
    profile: &OfferProfile,
    epsilon: f64,
    agent: usize,
    samples: usize,
) -> Result<Vec<CurvePoint>, MechanismError> {
    profile.check(economy)?;
    check_epsilon(epsilon)?;
    check_agent(economy, agent)?;
    if samples < 3 {
        return Err(MechanismError::TooFewSamples(samples));
    }
    let upper = economy.agent(agent).endowment;
    let mut offers = profile.0.clone();
    Ok((0..samples)
        .map(|k| {
            let offer = if k + 1 == samples {
                upper
            } else {
                upper * k as f64 / (samples - 1) as f64
            };
            offers[agent] = offer;
            CurvePoint {
                offer,
                payoff: payoff_raw(economy, &offers, epsilon, agent),
            }
        })
        .collect())
}
