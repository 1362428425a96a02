//! Newton's method on the first-order conditions `dV_i/da_i = 0` of a set of
//! agents, with a finite-difference Jacobian of the analytic gradients and
//! backtracking on the squared residual.

use nalgebra::{DMatrix, DVector};

use crate::economy::Economy;
use crate::mechanism::gradient_raw;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NewtonOptions {
    pub max_iterations: usize,
    /// Converged once every listed gradient is below this in magnitude.
    pub tolerance: f64,
    /// Offers are kept at least this far inside `(0, endowment)`.
    pub margin: f64,
}

impl Default for NewtonOptions {
    fn default() -> Self {
        Self {
            max_iterations: 100,
            tolerance: 1e-11,
            margin: 1e-12,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct StationaryPoint {
    pub offers: Vec<f64>,
    /// Largest gradient magnitude among the solved agents.
    pub residual: f64,
    pub iterations: usize,
}

fn residuals(economy: &Economy, offers: &[f64], epsilon: f64, agents: &[usize]) -> Option<DVector<f64>> {
    let mut f = DVector::zeros(agents.len());
    for (k, &i) in agents.iter().enumerate() {
        let g = gradient_raw(economy, offers, epsilon, i);
        if !g.is_finite() {
            return None;
        }
        f[k] = g.value;
    }
    Some(f)
}

/// Interior stationary point of the listed agents' payoffs, others fixed.
/// Returns `None` when the iteration stalls, leaves the region where the
/// gradients are finite, or runs out of iterations.
pub fn solve_stationary(
    economy: &Economy,
    start: &[f64],
    epsilon: f64,
    agents: &[usize],
    options: &NewtonOptions,
) -> Option<StationaryPoint> {
    let bounds: Vec<(f64, f64)> = agents
        .iter()
        .map(|&i| (options.margin, economy.agent(i).endowment - options.margin))
        .collect();
    let clamp = |x: &mut [f64]| {
        for (&i, &(lo, hi)) in agents.iter().zip(&bounds) {
            x[i] = x[i].clamp(lo, hi);
        }
    };
    let mut x = start.to_vec();
    clamp(&mut x);
    let mut f = residuals(economy, &x, epsilon, agents)?;
    for iteration in 0..options.max_iterations {
        let norm = f.amax();
        if norm < options.tolerance {
            return Some(StationaryPoint {
                offers: x,
                residual: norm,
                iterations: iteration,
            });
        }
        let m = agents.len();
        let mut jac = DMatrix::zeros(m, m);
        let mut probe = x.clone();
        for (c, &i) in agents.iter().enumerate() {
            let h = 1e-7 * x[i].abs().max(1.0);
            let (lo, hi) = bounds[c];
            let up = (x[i] + h).min(hi);
            let down = (x[i] - h).max(lo);
            probe[i] = up;
            let fu = residuals(economy, &probe, epsilon, agents)?;
            probe[i] = down;
            let fd = residuals(economy, &probe, epsilon, agents)?;
            probe[i] = x[i];
            jac.set_column(c, &((fu - fd) / (up - down)));
        }
        let step = jac.lu().solve(&(-&f))?;
        if !step.iter().all(|s| s.is_finite()) {
            return None;
        }
        let current = f.norm_squared();
        let mut t = 1.0;
        let mut accepted = None;
        while t > 1e-10 {
            let mut trial = x.clone();
            for (k, &i) in agents.iter().enumerate() {
                trial[i] += t * step[k];
            }
            clamp(&mut trial);
            if let Some(ft) = residuals(economy, &trial, epsilon, agents) {
                if ft.norm_squared() < current {
                    accepted = Some((trial, ft));
                    break;
                }
            }
            t *= 0.5;
        }
        let (nx, nf) = accepted?;
        x = nx;
        f = nf;
    }
    let norm = f.amax();
    (norm < options.tolerance).then_some(StationaryPoint {
        offers: x,
        residual: norm,
        iterations: options.max_iterations,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scenarios;

    #[test]
    fn example_three_stationary_point() {
        let e = scenarios::example3();
        let all = [0, 1, 2, 3];
        let p = solve_stationary(&e, &[3.0, 3.5, 0.5, 0.5], 0.0, &all, &NewtonOptions::default()).unwrap();
        let expected = [3.097_330_54, 3.673_126_17, 0.459_974_75, 0.459_974_75];
        for (x, y) in p.offers.iter().zip(expected) {
            assert!((x - y).abs() < 1e-6, "{:?}", p.offers);
        }
    }

    #[test]
    fn theorem_symmetric_root() {
        let e = scenarios::theorem();
        let p = solve_stationary(&e, &[0.3, 0.2, 0.4, 0.1], 0.0, &[0, 1, 2, 3], &NewtonOptions::default()).unwrap();
        for x in p.offers {
            assert!((x - scenarios::THEOREM_EQUILIBRIUM_OFFER).abs() < 1e-9);
        }
    }

    #[test]
    fn constant_gradient_has_no_root() {
        let e = scenarios::example1();
        assert!(solve_stationary(&e, &[1.0, 1.0, 1.0, 1.0], 0.0, &[0, 1, 2, 3], &NewtonOptions::default()).is_none());
    }
}
