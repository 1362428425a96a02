//! Built-in economies: the three worked examples (plus the boundary-defined
//! variant of the third), two synthesized economies satisfying the
//! trade-existence hypotheses, and a seeded generator of small
//! independent-preference economies.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::economy::{Agent, ConcernMatrix, Economy, Side};
use crate::utility::{Commodity, InternalUtility, PowerTerm};

const TWO_THIRDS: f64 = 2.0 / 3.0;

fn four_agents() -> Vec<Agent> {
    vec![
        Agent::new(Side::One, 4.0),
        Agent::new(Side::One, 4.0),
        Agent::new(Side::Two, 4.0),
        Agent::new(Side::Two, 4.0),
    ]
}

fn linear(cx: f64, cy: f64) -> InternalUtility {
    InternalUtility::new(vec![
        PowerTerm::linear(cx, Commodity::X),
        PowerTerm::linear(cy, Commodity::Y),
    ])
}

/// `sqrt(x) + y`, the side Two utility shared by every example.
fn root_x_plus_y() -> InternalUtility {
    InternalUtility::new(vec![
        PowerTerm::sqrt(1.0, Commodity::X),
        PowerTerm::linear(1.0, Commodity::Y),
    ])
}

fn x_plus_root_y() -> InternalUtility {
    InternalUtility::new(vec![
        PowerTerm::linear(1.0, Commodity::X),
        PowerTerm::sqrt(1.0, Commodity::Y),
    ])
}

fn build(utilities: Vec<InternalUtility>, entries: &[(usize, usize, f64)]) -> Economy {
    let concerns = ConcernMatrix::from_entries(4, entries).expect("built-in concern entries");
    Economy::new(four_agents(), utilities, concerns).expect("built-in economy")
}

/// Agent 1 cares (weight 1/2) about agent 2 on the same side.
pub fn example1() -> Economy {
    build(
        vec![
            linear(TWO_THIRDS, 1.0),
            linear(TWO_THIRDS, 2.0),
            root_x_plus_y(),
            root_x_plus_y(),
        ],
        &[(0, 1, 0.5)],
    )
}

/// Agents 1 and 2 are spiteful (weight -1/2) toward both side Two agents.
pub fn example2() -> Economy {
    build(
        vec![
            linear(TWO_THIRDS, 1.0),
            linear(TWO_THIRDS, 1.0),
            root_x_plus_y(),
            root_x_plus_y(),
        ],
        &[(0, 2, -0.5), (0, 3, -0.5), (1, 2, -0.5), (1, 3, -0.5)],
    )
}

fn example3_with(agent2: InternalUtility) -> Economy {
    build(
        vec![linear(TWO_THIRDS, 1.0), agent2, root_x_plus_y(), root_x_plus_y()],
        &[(0, 1, -0.5)],
    )
}

/// Agent 1 is spiteful toward agent 2, whose utility is `x - y^-2`.
pub fn example3() -> Economy {
    example3_with(InternalUtility::new(vec![
        PowerTerm::linear(1.0, Commodity::X),
        PowerTerm::new(-1.0, Commodity::Y, 0.0, -2.0),
    ]))
}

/// As [`example3`] with agent 2's utility `x - (1/10 + y)^-2`, defined on the
/// whole consumption set.
pub fn example3_footnote() -> Economy {
    example3_with(InternalUtility::new(vec![
        PowerTerm::linear(1.0, Commodity::X),
        PowerTerm::new(-1.0, Commodity::Y, 0.1, -2.0),
    ]))
}

/// The stationary profile of [`example3`] as reported to three decimals.
pub const EXAMPLE3_STATIONARY: [f64; 4] = [3.097, 3.673, 0.460, 0.460];

/// The stationary profile of [`example3_footnote`], from a 40-digit root of
/// the first-order system.
pub const EXAMPLE3_FOOTNOTE_STATIONARY: [f64; 4] =
    [2.322_848_581_51, 2.703_091_109_01, 0.396_308_737_386, 0.396_308_737_386];

/// Side One `x + sqrt(y)`, side Two `sqrt(x) + y`, every agent weighting each
/// opposite-side agent by 1/2 and ignoring its own side.
pub fn theorem() -> Economy {
    build(
        vec![x_plus_root_y(), x_plus_root_y(), root_x_plus_y(), root_x_plus_y()],
        &[
            (0, 2, 0.5),
            (0, 3, 0.5),
            (1, 2, 0.5),
            (1, 3, 0.5),
            (2, 0, 0.5),
            (2, 1, 0.5),
            (3, 0, 0.5),
            (3, 1, 0.5),
        ],
    )
}

/// [`theorem`] with independent preferences.
pub fn corollary() -> Economy {
    build(
        vec![x_plus_root_y(), x_plus_root_y(), root_x_plus_y(), root_x_plus_y()],
        &[],
    )
}

/// Symmetric equilibrium offer of [`theorem`]: solving
/// `-1 + 1/(4 sqrt a) + 1/(4 sqrt a) = 0` gives `a = 1/4` on both sides.
pub const THEOREM_EQUILIBRIUM_OFFER: f64 = 0.25;

/// Symmetric equilibrium offer of [`corollary`]: `a = sqrt(b)/4`, `b = sqrt(a)/4`.
pub const COROLLARY_EQUILIBRIUM_OFFER: f64 = 0.0625;

/// A small two-by-two economy with independent preferences:
/// side One `c1 x + c2 y^e`, side Two `d1 x^f + d2 y`, with exponents in
/// `[0.3, 0.7]` and endowments on the 0.02 lattice in `[0.4, 0.8]`.
pub fn random_independent<R: Rng + ?Sized>(rng: &mut R) -> Economy {
    let mut agents = Vec::with_capacity(4);
    let mut utilities = Vec::with_capacity(4);
    for side in [Side::One, Side::One, Side::Two, Side::Two] {
        let endowment = 0.02 * rng.random_range(20..=40) as f64;
        let linear_coef = rng.random_range(0.5..1.5);
        let root_coef = rng.random_range(0.5..1.5);
        let exponent = rng.random_range(0.3..0.7);
        let (lin, root) = match side {
            Side::One => (Commodity::X, Commodity::Y),
            Side::Two => (Commodity::Y, Commodity::X),
        };
        agents.push(Agent::new(side, endowment));
        utilities.push(InternalUtility::new(vec![
            PowerTerm::linear(linear_coef, lin),
            PowerTerm::new(root_coef, root, 0.0, exponent),
        ]));
    }
    Economy::new(agents, utilities, ConcernMatrix::identity(4)).expect("generated economy")
}

/// [`random_independent`] drawn from a ChaCha8 stream, reproducible across
/// platforms for a given seed.
pub fn seeded_random_independent(seed: u64) -> Economy {
    random_independent(&mut ChaCha8Rng::seed_from_u64(seed))
}

/// Name and constructor of every fixed built-in economy.
pub fn builtin(name: &str) -> Option<Economy> {
    match name {
        "example1" => Some(example1()),
        "example2" => Some(example2()),
        "example3" => Some(example3()),
        "example3-footnote" => Some(example3_footnote()),
        "theorem" => Some(theorem()),
        "corollary" => Some(corollary()),
        _ => None,
    }
}

pub const BUILTIN_NAMES: [&str; 6] = [
    "example1",
    "example2",
    "example3",
    "example3-footnote",
    "theorem",
    "corollary",
];
