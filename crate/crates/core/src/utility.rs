//! Additively separable internal utilities built from shifted power terms.
//!
//! A term contributes `coefficient * (shift + v)^exponent` where `v` is the
//! agent's consumption of one commodity. Sums of admissible terms are
//! continuous, strictly increasing and concave on the interior of the
//! consumption set, which is all the model needs.

use serde::{Deserialize, Serialize};

/// One of the two traded goods.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Commodity {
    X,
    Y,
}

impl Commodity {
    pub fn other(self) -> Commodity {
        match self {
            Commodity::X => Commodity::Y,
            Commodity::Y => Commodity::X,
        }
    }

    fn pick(self, x: f64, y: f64) -> f64 {
        match self {
            Commodity::X => x,
            Commodity::Y => y,
        }
    }
}

impl std::fmt::Display for Commodity {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Commodity::X => f.write_str("x"),
            Commodity::Y => f.write_str("y"),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PowerTerm {
    pub coefficient: f64,
    pub variable: Commodity,
    pub shift: f64,
    pub exponent: f64,
}

// Common exponents get exact fast paths; the grid oracle evaluates these
// tens of millions of times.
#[inline]
fn power(base: f64, exponent: f64) -> f64 {
    if exponent == 1.0 {
        base
    } else if exponent == 0.5 {
        base.sqrt()
    } else if exponent == -1.0 {
        1.0 / base
    } else if exponent == -2.0 {
        1.0 / (base * base)
    } else {
        base.powf(exponent)
    }
}

impl PowerTerm {
    pub fn new(coefficient: f64, variable: Commodity, shift: f64, exponent: f64) -> Self {
        Self {
            coefficient,
            variable,
            shift,
            exponent,
        }
    }

    pub fn linear(coefficient: f64, variable: Commodity) -> Self {
        Self::new(coefficient, variable, 0.0, 1.0)
    }

    pub fn sqrt(coefficient: f64, variable: Commodity) -> Self {
        Self::new(coefficient, variable, 0.0, 0.5)
    }

    /// Increasing and concave in its variable on the positive half-line.
    pub fn is_admissible(&self) -> bool {
        let finite = self.coefficient.is_finite() && self.shift.is_finite() && self.exponent.is_finite();
        let shape = (self.coefficient > 0.0 && self.exponent > 0.0 && self.exponent <= 1.0)
            || (self.coefficient < 0.0 && self.exponent < 0.0);
        finite && self.shift >= 0.0 && self.exponent != 0.0 && shape
    }

    /// True when the marginal utility of this term diverges at zero consumption.
    pub fn has_infinite_marginal_at_zero(&self) -> bool {
        self.coefficient > 0.0 && self.shift == 0.0 && self.exponent > 0.0 && self.exponent < 1.0
    }

    /// Value at bundle `(x, y)`. Negative-exponent terms at `shift + v = 0`
    /// evaluate to `-inf`.
    #[inline]
    pub fn value(&self, x: f64, y: f64) -> f64 {
        let base = self.shift + self.variable.pick(x, y);
        self.coefficient * power(base, self.exponent)
    }

    /// Derivative with respect to the term's own variable.
    #[inline]
    pub fn derivative(&self, x: f64, y: f64) -> f64 {
        if self.exponent == 1.0 {
            return self.coefficient;
        }
        let base = self.shift + self.variable.pick(x, y);
        let slope = if self.exponent == 0.5 {
            0.5 / base.sqrt()
        } else {
            self.exponent * power(base, self.exponent - 1.0)
        };
        self.coefficient * slope
    }

    /// Second derivative with respect to the term's own variable.
    pub fn second_derivative(&self, x: f64, y: f64) -> f64 {
        if self.exponent == 1.0 {
            return 0.0;
        }
        let base = self.shift + self.variable.pick(x, y);
        self.coefficient * self.exponent * (self.exponent - 1.0) * power(base, self.exponent - 2.0)
    }
}

impl std::fmt::Display for PowerTerm {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        if self.shift == 0.0 {
            write!(f, "{}*{}^{}", self.coefficient, self.variable, self.exponent)
        } else {
            write!(
                f,
                "{}*({}+{})^{}",
                self.coefficient, self.shift, self.variable, self.exponent
            )
        }
    }
}

/// Sum of power terms; `u_i` in the model.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InternalUtility {
    terms: Vec<PowerTerm>,
}

impl InternalUtility {
    pub fn new(terms: Vec<PowerTerm>) -> Self {
        Self { terms }
    }

    pub fn terms(&self) -> &[PowerTerm] {
        &self.terms
    }

    /// Continuous, strictly increasing in both goods and concave.
    pub fn is_admissible(&self) -> bool {
        let covers = |c: Commodity| self.terms.iter().any(|t| t.variable == c);
        !self.terms.is_empty()
            && covers(Commodity::X)
            && covers(Commodity::Y)
            && self.terms.iter().all(PowerTerm::is_admissible)
    }

    /// Whether marginal utility of `commodity` diverges when its consumption is zero.
    pub fn has_infinite_marginal_at_zero(&self, commodity: Commodity) -> bool {
        self.terms
            .iter()
            .any(|t| t.variable == commodity && t.has_infinite_marginal_at_zero())
    }

    #[inline]
    pub fn value(&self, x: f64, y: f64) -> f64 {
        self.terms.iter().map(|t| t.value(x, y)).sum()
    }

    #[inline]
    pub fn partial(&self, commodity: Commodity, x: f64, y: f64) -> f64 {
        self.terms
            .iter()
            .filter(|t| t.variable == commodity)
            .map(|t| t.derivative(x, y))
            .sum()
    }

    pub fn second_partial(&self, commodity: Commodity, x: f64, y: f64) -> f64 {
        self.terms
            .iter()
            .filter(|t| t.variable == commodity)
            .map(|t| t.second_derivative(x, y))
            .sum()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn admissibility_criterion() {
        assert!(PowerTerm::sqrt(1.0, Commodity::X).is_admissible());
        assert!(PowerTerm::linear(0.5, Commodity::Y).is_admissible());
        assert!(PowerTerm::new(-1.0, Commodity::Y, 0.1, -2.0).is_admissible());
        assert!(!PowerTerm::new(1.0, Commodity::Y, 0.0, -2.0).is_admissible());
        assert!(!PowerTerm::new(1.0, Commodity::Y, 0.0, 1.5).is_admissible());
        assert!(!PowerTerm::new(-1.0, Commodity::Y, 0.0, 0.5).is_admissible());
        assert!(!PowerTerm::new(1.0, Commodity::Y, -0.1, 0.5).is_admissible());
    }

    #[test]
    fn boundary_sentinel_for_negative_power() {
        let u = InternalUtility::new(vec![
            PowerTerm::linear(1.0, Commodity::X),
            PowerTerm::new(-1.0, Commodity::Y, 0.0, -2.0),
        ]);
        assert_eq!(u.value(1.0, 0.0), f64::NEG_INFINITY);
        assert_eq!(u.partial(Commodity::Y, 1.0, 0.0), f64::INFINITY);
        assert!((u.value(2.0, 0.5) - (2.0 - 4.0)).abs() < 1e-15);
    }

    #[test]
    fn inada_detection() {
        let u = InternalUtility::new(vec![
            PowerTerm::sqrt(1.0, Commodity::X),
            PowerTerm::linear(1.0, Commodity::Y),
        ]);
        assert!(u.has_infinite_marginal_at_zero(Commodity::X));
        assert!(!u.has_infinite_marginal_at_zero(Commodity::Y));
        assert_eq!(u.partial(Commodity::X, 0.0, 1.0), f64::INFINITY);
        // shifted root is finite at zero
        let shifted = PowerTerm::new(1.0, Commodity::X, 0.1, 0.5);
        assert!(!shifted.has_infinite_marginal_at_zero());
    }

    fn admissible_term() -> impl Strategy<Value = PowerTerm> {
        prop_oneof![
            (0.05f64..3.0, 0.05f64..=1.0, 0.0f64..1.0).prop_map(|(c, e, s)| PowerTerm::new(c, Commodity::X, s, e)),
            (-3.0f64..-0.05, -3.0f64..-0.05, 0.0f64..1.0).prop_map(|(c, e, s)| PowerTerm::new(c, Commodity::X, s, e)),
        ]
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(10_000))]

        #[test]
        fn admissible_terms_increase_and_bend_down(term in admissible_term()) {
            prop_assert!(term.is_admissible());
            let h = 1e-3;
            for k in 1..20 {
                let v = 0.05 + 0.25 * k as f64;
                let f0 = term.value(v - h, 0.0);
                let f1 = term.value(v, 0.0);
                let f2 = term.value(v + h, 0.0);
                prop_assert!(f1 - f0 > 0.0, "not increasing at {v}: {term}");
                let curvature = f2 - 2.0 * f1 + f0;
                prop_assert!(curvature <= 1e-12 * (1.0 + f1.abs()), "convex at {v}: {term}");
            }
        }
    }
}
