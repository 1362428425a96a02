//! Fixtures shared by the benchmarks.

use tradepost::{scenarios, Economy, OfferProfile};

/// Theorem economy with every agent offering a quarter of its endowment.
pub fn interior_theorem() -> (Economy, OfferProfile) {
    let e = scenarios::theorem();
    let p = OfferProfile::fraction_of_endowment(&e, 0.25);
    (e, p)
}

/// The stationary profile of the third worked example.
pub fn example3_stationary() -> (Economy, OfferProfile) {
    (scenarios::example3(), scenarios::EXAMPLE3_STATIONARY.to_vec().into())
}
