//! Strategic market games on a two-commodity trading post, with agents whose
//! payoffs weight other agents' utilities (altruism for positive weights,
//! spite for negative ones).
//!
//! The crate covers the whole pipeline: describing an economy, evaluating
//! the allocation rule and payoff gradients, computing equilibria of the
//! perturbed and unperturbed games, and checking candidates against
//! first-order conditions, unilateral deviations and exhaustive grids.

pub mod economy;
pub mod format;
pub mod mechanism;
pub mod report;
pub mod scenarios;
pub mod solver;
pub mod utility;
pub mod verify;

pub use economy::{
    classify_concerns, validate, Agent, ConcernMatrix, Economy, EconomyError, Side, StructuralClass, ValidationReport,
};
pub use mechanism::{
    aggregates, allocate, finite_difference_gradient, payoff, payoff_curve, payoff_gradient, Aggregates, Allocation,
    Bundle, CurvePoint, Gradient, GradientKind, MechanismError, OfferProfile,
};
pub use solver::{
    best_response, grid_oracle, homotopy_solve, solve_perturbed, BestResponse, EquilibriumCandidate, HomotopyOutcome,
    HomotopyStatus, HomotopyTrace, SolverConfig, SolverError,
};
pub use utility::{Commodity, InternalUtility, PowerTerm};
pub use verify::{
    certify_no_trade, classify, concavity_diagnostic, deviation_check, foc_sweep, kkt_residual, Certificate,
    CertificateKind, Classification, Curvature, KktReport, TradeClass,
};
