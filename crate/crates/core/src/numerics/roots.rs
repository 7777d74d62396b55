use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// Stopping rule for bracketed bisection.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RootConfig<S> {
    /// Bracket width at which bisection stops.
    pub arg_tol: S,
    pub max_iter: usize,
}

impl<S: Scalar> Default for RootConfig<S> {
    fn default() -> Self {
        Self {
            arg_tol: S::lit(1e-12),
            max_iter: 200,
        }
    }
}

/// Solves `f(x) = target` for a monotone `f` on `[lo, hi]` by bisection.
///
/// When the target lies outside `[f(lo), f(hi)]` the nearer endpoint is
/// returned, so rounding at the ends of a bracket never produces an error.
/// Iteration stops once the bracket is narrower than `cfg.arg_tol` or the
/// midpoint stops separating the endpoints.
pub fn monotone_root<S, F>(f: F, lo: S, hi: S, target: S, increasing: bool, cfg: &RootConfig<S>) -> S
where
    S: Scalar,
    F: Fn(S) -> S,
{
    // orient so that g is increasing with g(root) = 0
    let g = |x: S| {
        let v = f(x) - target;
        if increasing {
            v
        } else {
            -v
        }
    };
    let (mut lo, mut hi) = (lo, hi);
    if g(lo) >= S::zero() {
        return lo;
    }
    if g(hi) <= S::zero() {
        return hi;
    }
    for _ in 0..cfg.max_iter {
        if hi - lo <= cfg.arg_tol {
            break;
        }
        let mid = lo + (hi - lo) * S::half();
        if mid <= lo || mid >= hi {
            break;
        }
        let v = g(mid);
        if v == S::zero() {
            return mid;
        }
        if v < S::zero() {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    lo + (hi - lo) * S::half()
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SecantOutcome<S> {
    pub root: S,
    /// `f(root) - target`.
    pub residual: S,
    pub iterations: usize,
}

/// Secant iteration for `f(x) = target` where `f` is nondecreasing on
/// `(floor, inf)`.
///
/// Every evaluated point updates a bracket; a secant step that leaves the
/// bracket (or drops to `floor`) is replaced by bisection, or by doubling the
/// distance from `floor` while no upper bracket is known. `f` is never
/// evaluated at or below `floor`.
pub fn secant_increasing<S, F>(
    mut f: F,
    target: S,
    x0: S,
    x1: S,
    floor: S,
    tol: S,
    max_iter: usize,
) -> Result<SecantOutcome<S>>
where
    S: Scalar,
    F: FnMut(S) -> Result<S>,
{
    if !(x0 > floor && x1 > floor) {
        return Err(Error::domain("secant start points must lie above the floor"));
    }
    let mut below: Option<S> = None; // largest x with f < target
    let mut above: Option<S> = None; // smallest x with f > target
    let note = |x: S, r: S, below: &mut Option<S>, above: &mut Option<S>| {
        if r < S::zero() {
            if below.map_or(true, |b| x > b) {
                *below = Some(x);
            }
        } else if above.map_or(true, |a| x < a) {
            *above = Some(x);
        }
    };

    let (mut xa, mut ra) = (x0, f(x0)? - target);
    if ra.abs() <= tol {
        return Ok(SecantOutcome { root: xa, residual: ra, iterations: 0 });
    }
    note(xa, ra, &mut below, &mut above);
    let (mut xb, mut rb) = (x1, f(x1)? - target);
    for it in 1..=max_iter {
        if rb.abs() <= tol {
            return Ok(SecantOutcome { root: xb, residual: rb, iterations: it });
        }
        note(xb, rb, &mut below, &mut above);
        let mut xn = if rb != ra { xb - rb * (xb - xa) / (rb - ra) } else { S::nan() };
        match (below, above) {
            (Some(l), Some(h)) => {
                if !(xn > l && xn < h) {
                    xn = l + (h - l) * S::half();
                }
            }
            (Some(l), None) => {
                if !(xn.is_finite() && xn > l) {
                    xn = l + (l - floor).max(S::one());
                }
            }
            (None, Some(h)) => {
                if !(xn > floor && xn < h) {
                    xn = floor + (h - floor) * S::half();
                }
            }
            (None, None) => unreachable!("at least one point has been classified"),
        }
        if let (Some(l), Some(h)) = (below, above) {
            if h - l <= S::epsilon() * h.abs().max(S::one()) {
                // bracket exhausted at working precision
                let r = f(xn)? - target;
                if r.abs() <= tol {
                    return Ok(SecantOutcome { root: xn, residual: r, iterations: it });
                }
                return Err(Error::Convergence(format!(
                    "bracket collapsed with residual {:e}",
                    r.to_f64_lossy()
                )));
            }
        }
        xa = xb;
        ra = rb;
        xb = xn;
        rb = f(xb)? - target;
    }
    if rb.abs() <= tol {
        return Ok(SecantOutcome { root: xb, residual: rb, iterations: max_iter });
    }
    Err(Error::Convergence(format!(
        "secant iteration exceeded {max_iter} steps (residual {:e})",
        rb.to_f64_lossy()
    )))
}
