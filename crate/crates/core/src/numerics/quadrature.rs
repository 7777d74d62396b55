//! Composite Gauss–Legendre quadrature with per-panel adaptive refinement.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// Fixed-order Gauss–Legendre rule on `[-1, 1]`.
#[derive(Debug, Clone)]
pub struct GaussLegendre<S> {
    nodes: Vec<S>,
    weights: Vec<S>,
}

impl<S: Scalar> GaussLegendre<S> {
    /// Builds the `order`-point rule. Nodes are the roots of `P_order`,
    /// located by Newton iteration from the Chebyshev-like initial guesses and
    /// computed in `f64` before conversion.
    pub fn new(order: usize) -> Self {
        assert!(order >= 1, "quadrature order must be positive");
        let m = order;
        let mut nodes = vec![0.0f64; m];
        let mut weights = vec![0.0f64; m];
        for i in 0..m.div_ceil(2) {
            let mut z = (std::f64::consts::PI * (i as f64 + 0.75) / (m as f64 + 0.5)).cos();
            let mut dp = 0.0;
            for _ in 0..100 {
                let (p, d) = legendre(m, z);
                dp = d;
                let dz = p / d;
                z -= dz;
                if dz.abs() < 1e-16 {
                    break;
                }
            }
            let (_, d) = legendre(m, z);
            dp = if d != 0.0 { d } else { dp };
            let w = 2.0 / ((1.0 - z * z) * dp * dp);
            nodes[i] = -z;
            nodes[m - 1 - i] = z;
            weights[i] = w;
            weights[m - 1 - i] = w;
        }
        Self {
            nodes: nodes.into_iter().map(S::lit).collect(),
            weights: weights.into_iter().map(S::lit).collect(),
        }
    }

    pub fn order(&self) -> usize {
        self.nodes.len()
    }

    pub fn nodes(&self) -> &[S] {
        &self.nodes
    }

    pub fn weights(&self) -> &[S] {
        &self.weights
    }

    pub fn integrate<F: Fn(S) -> S>(&self, a: S, b: S, f: F) -> S {
        let [v] = self.integrate_n(a, b, |x| [f(x)]);
        v
    }

    /// Integrates several integrands sharing the same abscissae.
    pub fn integrate_n<const N: usize, F: Fn(S) -> [S; N]>(&self, a: S, b: S, f: F) -> [S; N] {
        let half = (b - a) * S::half();
        let mid = (a + b) * S::half();
        let mut acc = [S::zero(); N];
        for (&t, &w) in self.nodes.iter().zip(&self.weights) {
            let v = f(mid + half * t);
            for k in 0..N {
                acc[k] = acc[k] + w * v[k];
            }
        }
        acc.map(|s| s * half)
    }
}

/// `(P_m(z), P_m'(z))` by the three-term recurrence.
fn legendre(m: usize, z: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = z;
    if m == 0 {
        return (1.0, 0.0);
    }
    for k in 2..=m {
        let kf = k as f64;
        let p2 = ((2.0 * kf - 1.0) * z * p1 - (kf - 1.0) * p0) / kf;
        p0 = p1;
        p1 = p2;
    }
    let d = m as f64 * (z * p1 - p0) / (z * z - 1.0);
    (p1, d)
}

/// Settings for [`integrate_adaptive`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct QuadratureConfig {
    /// Initial number of equal panels.
    pub panels: usize,
    /// Gauss–Legendre points per panel.
    pub order: usize,
    /// Absolute tolerance on the whole integral; panels share it by width.
    pub tol: f64,
    pub max_depth: usize,
    /// Integrand evaluations allowed before giving up.
    pub max_evals: usize,
}

impl Default for QuadratureConfig {
    fn default() -> Self {
        Self {
            panels: 64,
            order: 8,
            tol: 1e-9,
            max_depth: 40,
            max_evals: 4_000_000,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Integral<S, const N: usize> {
    pub value: [S; N],
    /// Sum over accepted panels of |coarse - refined|, maximised over components.
    pub error_estimate: f64,
    pub evaluations: usize,
}

/// Adaptive composite Gauss–Legendre on `[a, b]` for `N` integrands at once.
///
/// The interval is split into `cfg.panels` equal panels. Each panel is
/// integrated whole and as two halves; if the two estimates differ by more
/// than the panel's share of `cfg.tol` the halves are refined recursively.
/// Panels are processed left to right and summed in that order, so the
/// result is bit-stable.
pub fn integrate_adaptive<S, F, const N: usize>(
    f: F,
    a: S,
    b: S,
    cfg: &QuadratureConfig,
) -> Result<Integral<S, N>>
where
    S: Scalar,
    F: Fn(S) -> [S; N],
{
    if !(a.is_finite() && b.is_finite()) {
        return Err(Error::domain("integration limits must be finite"));
    }
    if b <= a {
        return Ok(Integral { value: [S::zero(); N], error_estimate: 0.0, evaluations: 0 });
    }
    let rule = GaussLegendre::<S>::new(cfg.order);
    let width = b - a;
    let tol = S::lit(cfg.tol);
    let mut value = [S::zero(); N];
    let mut err = 0.0f64;
    let mut evals = 0usize;
    let panels = cfg.panels.max(1);

    // (lo, hi, coarse estimate, depth)
    let mut stack: Vec<(S, S, [S; N], usize)> = Vec::new();
    for j in (0..panels).rev() {
        let lo = a + width * S::from_count(j) / S::from_count(panels);
        let hi = if j + 1 == panels { b } else { a + width * S::from_count(j + 1) / S::from_count(panels) };
        stack.push((lo, hi, [S::nan(); N], 0));
    }
    while let Some((lo, hi, coarse, depth)) = stack.pop() {
        let coarse = if coarse[0].is_nan() {
            evals += rule.order();
            rule.integrate_n(lo, hi, &f)
        } else {
            coarse
        };
        let mid = lo + (hi - lo) * S::half();
        let left = rule.integrate_n(lo, mid, &f);
        let right = rule.integrate_n(mid, hi, &f);
        evals += 2 * rule.order();
        let mut diff = S::zero();
        for k in 0..N {
            diff = diff.max((left[k] + right[k] - coarse[k]).abs());
        }
        let share = tol * (hi - lo) / width;
        if diff <= share || depth >= cfg.max_depth || mid <= lo || mid >= hi {
            for k in 0..N {
                value[k] = value[k] + left[k] + right[k];
            }
            err += diff.to_f64_lossy();
        } else {
            if evals > cfg.max_evals {
                return Err(Error::Numeric {
                    message: format!("quadrature exceeded {} evaluations", cfg.max_evals),
                    estimate: err + diff.to_f64_lossy(),
                });
            }
            stack.push((mid, hi, right, depth + 1));
            stack.push((lo, mid, left, depth + 1));
        }
    }
    if !err.is_finite() || value.iter().any(|v| !v.is_finite()) {
        return Err(Error::Numeric { message: "non-finite integrand".into(), estimate: err });
    }
    Ok(Integral { value, error_estimate: err, evaluations: evals })
}

/// Scalar convenience wrapper around [`integrate_adaptive`].
pub fn integrate<S, F>(f: F, a: S, b: S, cfg: &QuadratureConfig) -> Result<(S, f64)>
where
    S: Scalar,
    F: Fn(S) -> S,
{
    let r = integrate_adaptive(|x| [f(x)], a, b, cfg)?;
    Ok((r.value[0], r.error_estimate))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rule_integrates_polynomials_exactly() {
        let rule = GaussLegendre::<f64>::new(8);
        // exact through degree 15
        let v = rule.integrate(0.0, 2.0, |x| x.powi(15));
        assert!((v - 2f64.powi(16) / 16.0).abs() < 1e-9);
        let w: f64 = rule.weights().iter().sum();
        assert!((w - 2.0).abs() < 1e-14);
    }

    #[test]
    fn nodes_are_symmetric_and_sorted() {
        for m in 1..12 {
            let rule = GaussLegendre::<f64>::new(m);
            let n = rule.nodes();
            for i in 0..m {
                assert!((n[i] + n[m - 1 - i]).abs() < 1e-15);
                if i > 0 {
                    assert!(n[i] > n[i - 1]);
                }
            }
        }
    }

    #[test]
    fn adaptive_handles_sqrt_endpoint() {
        let cfg = QuadratureConfig::default();
        let (v, e) = integrate(|x: f64| (1.0 - x).max(0.0).sqrt(), 0.0, 1.0, &cfg).unwrap();
        assert!((v - 2.0 / 3.0).abs() < 1e-9, "{v}");
        assert!(e < 1e-8);
    }

    #[test]
    fn adaptive_exp() {
        let (v, _) = integrate(|x: f64| x.exp(), 0.0, 3.0, &QuadratureConfig::default()).unwrap();
        assert!((v - (3f64.exp() - 1.0)).abs() < 1e-12);
    }

    #[test]
    fn evaluation_budget_is_enforced() {
        let cfg = QuadratureConfig { max_evals: 100, tol: 1e-15, ..Default::default() };
        let err = integrate(|x: f64| (50.0 * x).sin().abs(), 0.0, 10.0, &cfg).unwrap_err();
        assert!(matches!(err, Error::Numeric { .. }));
    }

    #[test]
    fn empty_interval_is_zero() {
        let (v, _) = integrate(|x: f64| x, 1.0, 1.0, &QuadratureConfig::default()).unwrap();
        assert_eq!(v, 0.0);
    }
}
