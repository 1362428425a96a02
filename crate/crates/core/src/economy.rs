//! Exchange economy data model: agents, internal utilities and concern weights.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::utility::{Commodity, InternalUtility};

/// Which side of the market an agent sits on. Side One holds commodity `x`,
/// side Two holds commodity `y`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Side {
    One,
    Two,
}

impl Side {
    pub fn opposite(self) -> Side {
        match self {
            Side::One => Side::Two,
            Side::Two => Side::One,
        }
    }

    /// The commodity agents on this side are endowed with (and offer).
    pub fn endowed(self) -> Commodity {
        match self {
            Side::One => Commodity::X,
            Side::Two => Commodity::Y,
        }
    }
}

impl std::fmt::Display for Side {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Side::One => f.write_str("one"),
            Side::Two => f.write_str("two"),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Agent {
    pub side: Side,
    /// Units of the side's endowed commodity. The strategy space is `[0, endowment]`.
    pub endowment: f64,
}

impl Agent {
    pub fn new(side: Side, endowment: f64) -> Self {
        Self { side, endowment }
    }

    /// Endowment bundle `(x0, y0)`.
    pub fn endowment_bundle(&self) -> (f64, f64) {
        match self.side {
            Side::One => (self.endowment, 0.0),
            Side::Two => (0.0, self.endowment),
        }
    }
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum EconomyError {
    #[error("agent {agent}: endowment must be finite and positive, got {endowment}")]
    NonPositiveEndowment { agent: usize, endowment: f64 },
    #[error("agent {agent}: missing internal utility")]
    MissingUtility { agent: usize },
    #[error("{utilities} utilities supplied for {agents} agents")]
    ExtraUtilities { agents: usize, utilities: usize },
    #[error("concern matrix is {found}x{found}, economy has {expected} agents")]
    ConcernDimension { expected: usize, found: usize },
    #[error("concern entry ({i}, {j}) is on the diagonal; own weight is fixed at 1")]
    DiagonalConcern { i: usize, j: usize },
    #[error("concern entry ({i}, {j}) refers to an agent outside 1..={n}")]
    ConcernOutOfRange { i: usize, j: usize, n: usize },
    #[error("concern entry ({i}, {j}) listed twice")]
    DuplicateConcern { i: usize, j: usize },
    #[error("concern entry ({i}, {j}) is not finite")]
    NonFiniteConcern { i: usize, j: usize },
}

/// Square matrix of concern weights `gamma[i][j]` with unit diagonal.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConcernMatrix {
    n: usize,
    weights: Vec<f64>,
}

impl ConcernMatrix {
    pub fn identity(n: usize) -> Self {
        let mut weights = vec![0.0; n * n];
        for i in 0..n {
            weights[i * n + i] = 1.0;
        }
        Self { n, weights }
    }

    /// Builds a matrix from sparse off-diagonal entries, indices 0-based.
    /// Unlisted off-diagonal entries are zero. Bounds on the weights are not
    /// checked here; `validate` reports them.
    pub fn from_entries(n: usize, entries: &[(usize, usize, f64)]) -> Result<Self, EconomyError> {
        let mut m = Self::identity(n);
        let mut seen = std::collections::HashSet::new();
        for &(i, j, w) in entries {
            if i >= n || j >= n {
                return Err(EconomyError::ConcernOutOfRange { i: i + 1, j: j + 1, n });
            }
            if i == j {
                return Err(EconomyError::DiagonalConcern { i: i + 1, j: j + 1 });
            }
            if !w.is_finite() {
                return Err(EconomyError::NonFiniteConcern { i: i + 1, j: j + 1 });
            }
            if !seen.insert((i, j)) {
                return Err(EconomyError::DuplicateConcern { i: i + 1, j: j + 1 });
            }
            m.weights[i * n + j] = w;
        }
        Ok(m)
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    #[inline]
    pub fn weight(&self, i: usize, j: usize) -> f64 {
        self.weights[i * self.n + j]
    }

    #[inline]
    pub fn row(&self, i: usize) -> &[f64] {
        &self.weights[i * self.n..(i + 1) * self.n]
    }

    /// Off-diagonal non-zero entries, 0-based.
    pub fn entries(&self) -> Vec<(usize, usize, f64)> {
        let mut out = Vec::new();
        for i in 0..self.n {
            for j in 0..self.n {
                let w = self.weight(i, j);
                if i != j && w != 0.0 {
                    out.push((i, j, w));
                }
            }
        }
        out
    }
}

/// Broad shape of the concern matrix relative to market sides.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StructuralClass {
    Independent,
    OppositeSideAltruism,
    SameSideAltruism,
    Spiteful,
    Mixed,
}

impl StructuralClass {
    /// No same-side concern and only non-negative opposite-side concern;
    /// the hypothesis under which a trade equilibrium is guaranteed.
    pub fn admits_trade_guarantee(self) -> bool {
        matches!(
            self,
            StructuralClass::Independent | StructuralClass::OppositeSideAltruism
        )
    }
}

pub fn classify_concerns(concerns: &ConcernMatrix, agents: &[Agent]) -> StructuralClass {
    let mut any_nonzero = false;
    let mut any_negative = false;
    let mut any_positive = false;
    let mut same_side_nonzero = false;
    for i in 0..agents.len() {
        for j in 0..agents.len() {
            if i == j {
                continue;
            }
            let w = concerns.weight(i, j);
            if w == 0.0 {
                continue;
            }
            any_nonzero = true;
            any_negative |= w < 0.0;
            any_positive |= w > 0.0;
            same_side_nonzero |= agents[i].side == agents[j].side;
        }
    }
    match (any_nonzero, any_negative, any_positive) {
        (false, _, _) => StructuralClass::Independent,
        (true, true, true) => StructuralClass::Mixed,
        (true, true, false) => StructuralClass::Spiteful,
        (true, false, _) if same_side_nonzero => StructuralClass::SameSideAltruism,
        (true, false, _) => StructuralClass::OppositeSideAltruism,
    }
}

/// The tuple (utilities, concerns, endowments) plus side bookkeeping.
#[derive(Debug, Clone, PartialEq)]
pub struct Economy {
    agents: Vec<Agent>,
    utilities: Vec<InternalUtility>,
    concerns: ConcernMatrix,
    side_one: Vec<usize>,
    side_two: Vec<usize>,
}

fn check_structure(
    agents: &[Agent],
    utilities: &[InternalUtility],
    concerns: &ConcernMatrix,
) -> Result<(), EconomyError> {
    for (i, a) in agents.iter().enumerate() {
        if !(a.endowment.is_finite() && a.endowment > 0.0) {
            return Err(EconomyError::NonPositiveEndowment {
                agent: i + 1,
                endowment: a.endowment,
            });
        }
    }
    if utilities.len() < agents.len() {
        return Err(EconomyError::MissingUtility {
            agent: utilities.len() + 1,
        });
    }
    if utilities.len() > agents.len() {
        return Err(EconomyError::ExtraUtilities {
            agents: agents.len(),
            utilities: utilities.len(),
        });
    }
    if concerns.len() != agents.len() {
        return Err(EconomyError::ConcernDimension {
            expected: agents.len(),
            found: concerns.len(),
        });
    }
    Ok(())
}

impl Economy {
    pub fn new(
        agents: Vec<Agent>,
        utilities: Vec<InternalUtility>,
        concerns: ConcernMatrix,
    ) -> Result<Self, EconomyError> {
        check_structure(&agents, &utilities, &concerns)?;
        let side_one = (0..agents.len()).filter(|&i| agents[i].side == Side::One).collect();
        let side_two = (0..agents.len()).filter(|&i| agents[i].side == Side::Two).collect();
        Ok(Self {
            agents,
            utilities,
            concerns,
            side_one,
            side_two,
        })
    }

    pub fn len(&self) -> usize {
        self.agents.len()
    }

    pub fn is_empty(&self) -> bool {
        self.agents.is_empty()
    }

    pub fn agents(&self) -> &[Agent] {
        &self.agents
    }

    #[inline]
    pub fn agent(&self, i: usize) -> &Agent {
        &self.agents[i]
    }

    #[inline]
    pub fn utility(&self, i: usize) -> &InternalUtility {
        &self.utilities[i]
    }

    pub fn utilities(&self) -> &[InternalUtility] {
        &self.utilities
    }

    pub fn concerns(&self) -> &ConcernMatrix {
        &self.concerns
    }

    /// Agent indices on `side`, ascending.
    pub fn side(&self, side: Side) -> &[usize] {
        match side {
            Side::One => &self.side_one,
            Side::Two => &self.side_two,
        }
    }

    pub fn endowments(&self) -> Vec<f64> {
        self.agents.iter().map(|a| a.endowment).collect()
    }

    /// Copy with a different concern matrix (same agents and utilities).
    pub fn with_concerns(&self, concerns: ConcernMatrix) -> Result<Self, EconomyError> {
        Self::new(self.agents.clone(), self.utilities.clone(), concerns)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ValidationReport {
    /// At least two agents on each side.
    pub assumption1: bool,
    /// Per agent: internal utility continuous, strictly increasing, concave.
    pub assumption2: Vec<bool>,
    /// Agents (0-based) whose marginal utility for the non-endowed good diverges at zero.
    pub assumption3_witnesses: Vec<usize>,
    pub gamma_bounds: bool,
    /// Off-diagonal entries outside `[-1, 1]`, 0-based.
    pub gamma_violations: Vec<(usize, usize, f64)>,
    pub structural_class: StructuralClass,
}

impl ValidationReport {
    pub fn assumption3(&self) -> bool {
        !self.assumption3_witnesses.is_empty()
    }

    pub fn passes(&self) -> bool {
        self.assumption1 && self.assumption2.iter().all(|&ok| ok) && self.assumption3() && self.gamma_bounds
    }

    /// Human-readable list of failed checks.
    pub fn violations(&self) -> Vec<String> {
        let mut out = Vec::new();
        if !self.assumption1 {
            out.push("assumption1: each side needs at least two agents".to_string());
        }
        for (i, ok) in self.assumption2.iter().enumerate() {
            if !ok {
                out.push(format!(
                    "assumption2: agent {} utility is not increasing and concave in both goods",
                    i + 1
                ));
            }
        }
        if !self.assumption3() {
            out.push("assumption3: no agent has unbounded marginal utility for the good it lacks".to_string());
        }
        for &(i, j, w) in &self.gamma_violations {
            out.push(format!(
                "gamma bounds: weight of agent {} on agent {} is {w}, outside [-1, 1]",
                i + 1,
                j + 1
            ));
        }
        out
    }
}

pub fn validate(economy: &Economy) -> Result<ValidationReport, EconomyError> {
    check_structure(&economy.agents, &economy.utilities, &economy.concerns)?;
    let assumption1 = economy.side_one.len() >= 2 && economy.side_two.len() >= 2;
    let assumption2 = economy.utilities.iter().map(InternalUtility::is_admissible).collect();
    let assumption3_witnesses = (0..economy.len())
        .filter(|&i| {
            let lacking = economy.agents[i].side.endowed().other();
            economy.utilities[i].has_infinite_marginal_at_zero(lacking)
        })
        .collect();
    let gamma_violations: Vec<_> = economy
        .concerns
        .entries()
        .into_iter()
        .filter(|&(_, _, w)| !(-1.0..=1.0).contains(&w))
        .collect();
    Ok(ValidationReport {
        assumption1,
        assumption2,
        assumption3_witnesses,
        gamma_bounds: gamma_violations.is_empty(),
        gamma_violations,
        structural_class: classify_concerns(&economy.concerns, &economy.agents),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scenarios;
    use crate::utility::PowerTerm;

    fn agents_2x2() -> Vec<Agent> {
        vec![
            Agent::new(Side::One, 4.0),
            Agent::new(Side::One, 4.0),
            Agent::new(Side::Two, 4.0),
            Agent::new(Side::Two, 4.0),
        ]
    }

    #[test]
    fn example_one_report() {
        let report = validate(&scenarios::example1()).unwrap();
        assert!(report.assumption1);
        assert!(report.assumption2.iter().all(|&b| b));
        assert_eq!(report.assumption3_witnesses, vec![2, 3]);
        assert_eq!(report.structural_class, StructuralClass::SameSideAltruism);
        assert!(report.passes());
    }

    #[test]
    fn every_example_economy_satisfies_assumptions() {
        for (name, economy) in [
            ("example1", scenarios::example1()),
            ("example2", scenarios::example2()),
            ("example3", scenarios::example3()),
            ("example3-footnote", scenarios::example3_footnote()),
            ("theorem", scenarios::theorem()),
            ("corollary", scenarios::corollary()),
        ] {
            let report = validate(&economy).unwrap();
            assert!(report.passes(), "{name}: {:?}", report.violations());
        }
    }

    #[test]
    fn classification_examples() {
        let agents = agents_2x2();
        assert_eq!(
            classify_concerns(&ConcernMatrix::identity(4), &agents),
            StructuralClass::Independent
        );
        let spite = ConcernMatrix::from_entries(4, &[(0, 2, -0.5), (0, 3, -0.5), (1, 2, -0.5), (1, 3, -0.5)]).unwrap();
        assert_eq!(classify_concerns(&spite, &agents), StructuralClass::Spiteful);
        let mixed = ConcernMatrix::from_entries(4, &[(0, 2, 0.5), (2, 0, -0.5)]).unwrap();
        assert_eq!(classify_concerns(&mixed, &agents), StructuralClass::Mixed);
        let opposite = ConcernMatrix::from_entries(4, &[(0, 2, 0.5), (3, 1, 0.25)]).unwrap();
        assert_eq!(
            classify_concerns(&opposite, &agents),
            StructuralClass::OppositeSideAltruism
        );
    }

    #[test]
    fn one_agent_on_a_side_fails_assumption1() {
        let agents = vec![
            Agent::new(Side::One, 4.0),
            Agent::new(Side::Two, 4.0),
            Agent::new(Side::Two, 4.0),
        ];
        let u = InternalUtility::new(vec![
            PowerTerm::sqrt(1.0, Commodity::X),
            PowerTerm::sqrt(1.0, Commodity::Y),
        ]);
        let e = Economy::new(agents, vec![u; 3], ConcernMatrix::identity(3)).unwrap();
        let report = validate(&e).unwrap();
        assert!(!report.assumption1);
        assert!(!report.passes());
        assert!(report.violations()[0].starts_with("assumption1"));
    }

    #[test]
    fn structural_errors_name_the_agent() {
        let mut agents = agents_2x2();
        agents[2].endowment = 0.0;
        let u = scenarios::example1().utility(2).clone();
        let err = Economy::new(agents, vec![u.clone(); 4], ConcernMatrix::identity(4)).unwrap_err();
        assert_eq!(
            err,
            EconomyError::NonPositiveEndowment {
                agent: 3,
                endowment: 0.0
            }
        );
        let err = Economy::new(agents_2x2(), vec![u; 3], ConcernMatrix::identity(4)).unwrap_err();
        assert_eq!(err, EconomyError::MissingUtility { agent: 4 });
    }

    #[test]
    fn gamma_out_of_bounds_is_reported() {
        let concerns = ConcernMatrix::from_entries(4, &[(0, 1, 1.5)]).unwrap();
        let e = scenarios::example1().with_concerns(concerns).unwrap();
        let report = validate(&e).unwrap();
        assert!(!report.gamma_bounds);
        assert_eq!(report.gamma_violations, vec![(0, 1, 1.5)]);
        assert!(!report.passes());
    }

    #[test]
    fn concern_matrix_rejects_diagonal_entries() {
        assert!(matches!(
            ConcernMatrix::from_entries(3, &[(1, 1, 0.5)]),
            Err(EconomyError::DiagonalConcern { .. })
        ));
        assert!(matches!(
            ConcernMatrix::from_entries(3, &[(0, 5, 0.5)]),
            Err(EconomyError::ConcernOutOfRange { .. })
        ));
    }

    #[test]
    fn validate_is_pure() {
        let e = scenarios::example3();
        assert_eq!(validate(&e).unwrap(), validate(&e).unwrap());
    }
}
