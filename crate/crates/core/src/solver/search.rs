//! One-dimensional global maximization on a closed interval.
//!
//! A uniform scan locates the best grid cell (payoffs in this model can be
//! non-concave, so a local method alone is not enough), golden-section search
//! refines inside the neighbouring bracket, and when a derivative is supplied
//! a bisection on its sign change pins the stationary point to machine
//! precision.

const INV_PHI: f64 = 0.618_033_988_749_894_9;

#[inline]
fn score(v: f64) -> f64 {
    if v.is_nan() {
        f64::NEG_INFINITY
    } else {
        v
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub(crate) struct Maximum {
    pub x: f64,
    pub value: f64,
}

/// Golden-section search for a maximum of `f` strictly inside `(lo, hi)`.
pub(crate) fn golden_section_max(mut f: impl FnMut(f64) -> f64, mut lo: f64, mut hi: f64, tolerance: f64) -> Maximum {
    let mut x1 = hi - INV_PHI * (hi - lo);
    let mut x2 = lo + INV_PHI * (hi - lo);
    let mut f1 = score(f(x1));
    let mut f2 = score(f(x2));
    while hi - lo > tolerance {
        if f1 >= f2 {
            hi = x2;
            x2 = x1;
            f2 = f1;
            x1 = hi - INV_PHI * (hi - lo);
            f1 = score(f(x1));
        } else {
            lo = x1;
            x1 = x2;
            f1 = f2;
            x2 = lo + INV_PHI * (hi - lo);
            f2 = score(f(x2));
        }
    }
    if f1 >= f2 {
        Maximum { x: x1, value: f1 }
    } else {
        Maximum { x: x2, value: f2 }
    }
}

/// Bisection on the sign change of `g` over `[lo, hi]`, assuming
/// `g(lo) > 0 > g(hi)`.
pub(crate) fn bisect_decreasing(mut g: impl FnMut(f64) -> f64, mut lo: f64, mut hi: f64) -> f64 {
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        let v = g(mid);
        if v.is_nan() {
            break;
        }
        if v > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

/// Global maximum of `f` over `[lo, hi]`.
///
/// Ties go to the smallest argument, so a flat function returns `lo`.
pub(crate) fn maximize(
    mut f: impl FnMut(f64) -> f64,
    grad: Option<&mut dyn FnMut(f64) -> f64>,
    lo: f64,
    hi: f64,
    grid_points: usize,
    tolerance: f64,
) -> Maximum {
    let n = grid_points.max(3);
    let at = |k: usize| {
        if k + 1 == n {
            hi
        } else {
            lo + (hi - lo) * k as f64 / (n - 1) as f64
        }
    };
    let mut best = Maximum {
        x: lo,
        value: score(f(lo)),
    };
    let mut best_k = 0;
    for k in 1..n {
        let x = at(k);
        let v = score(f(x));
        if v > best.value {
            best = Maximum { x, value: v };
            best_k = k;
        }
    }
    let left = at(best_k.saturating_sub(1));
    let right = at((best_k + 1).min(n - 1));
    let refined = golden_section_max(&mut f, left, right, tolerance);
    if refined.value > best.value {
        best = refined;
    }
    if let Some(g) = grad {
        let (gl, gr) = (g(left), g(right));
        if gl > 0.0 && gr < 0.0 {
            let x = bisect_decreasing(&mut *g, left, right);
            let v = score(f(x));
            if v >= best.value {
                best = Maximum { x, value: v };
            }
        }
    }
    best
}
