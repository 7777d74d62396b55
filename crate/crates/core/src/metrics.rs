//! Equilibrium contest statistics: expected payout, expected best and
//! average quality, and rank probabilities.
//!
//! A missing contribution counts as quality 0 in both quality statistics.

use serde::Serialize;

use crate::equilibrium::{EquilibriumSolution, Regime};
use crate::error::{Error, Result};
use crate::numerics::quadrature::{integrate, integrate_adaptive};
use crate::numerics::{bernstein_term, QuadratureConfig};
use crate::scalar::Scalar;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ContestMetrics<S> {
    /// Expected total payout.
    pub budget: S,
    /// Expected best quality.
    pub eq_max: S,
    /// Expected quality per agent.
    pub eq_avg: S,
    pub eq_total: S,
    /// `W(k)`, probability a given agent finishes at rank `k`.
    #[serde(rename = "W")]
    pub rank_prob: Vec<S>,
    #[serde(rename = "error_estimate")]
    pub quadrature_error_estimate: f64,
}

impl<S: Scalar> ContestMetrics<S> {
    pub fn compute(sol: &EquilibriumSolution<S>, quad: &QuadratureConfig) -> Result<Self> {
        let q = expected_qualities(sol, quad)?;
        let n = sol.n();
        Ok(Self {
            budget: expected_budget(sol),
            eq_max: q.eq_max,
            eq_avg: q.eq_avg,
            eq_total: q.eq_avg * S::from_count(n),
            rank_prob: (1..=n).map(|k| rank_probability_unchecked(sol, k)).collect(),
            quadrature_error_estimate: q.error_estimate,
        })
    }
}

fn check_probability<S: Scalar>(p: S) -> Result<()> {
    if p.is_nan() || p < S::zero() || p > S::one() {
        Err(Error::Domain(format!("probability must lie in [0, 1], got {p}")))
    } else {
        Ok(())
    }
}

fn check_rank(n: usize, k: usize) -> Result<()> {
    if k == 0 || k > n {
        Err(Error::Domain(format!("rank {k} outside 1..={n}")))
    } else {
        Ok(())
    }
}

/// `P(Binomial(n, p) >= k)`.
pub fn binomial_tail<S: Scalar>(n: usize, k: usize, p: S) -> Result<S> {
    check_rank(n, k)?;
    check_probability(p)?;
    Ok(tail_unchecked(n, k, p))
}

fn tail_unchecked<S: Scalar>(n: usize, k: usize, p: S) -> S {
    binomial_tails(n, p)[k - 1]
}

/// All tails `P(Binomial(n, p) >= k)` for `k = 1..=n`, index `k - 1`.
/// Tails above one half are taken as complements of the lower sum, so every
/// entry stays in `[0, 1]` and keeps full relative accuracy when small.
pub fn binomial_tails<S: Scalar>(n: usize, p: S) -> Vec<S> {
    let pmf: Vec<S> = (0..=n).map(|j| bernstein_term(n, j, p)).collect();
    let mut upper = vec![S::zero(); n + 1];
    let mut acc = S::zero();
    for j in (0..=n).rev() {
        acc = acc + pmf[j];
        upper[j] = acc;
    }
    let mut lower = S::zero();
    let mut tails = Vec::with_capacity(n);
    for k in 1..=n {
        lower = lower + pmf[k - 1];
        let t = if upper[k] <= S::half() { upper[k] } else { S::one() - lower };
        tails.push(t.max(S::zero()).min(S::one()));
    }
    tails
}

/// Right-hand side of the tail-as-integral identity,
/// `n C(n-1, k-1) int_0^p x^(k-1) (1-x)^(n-k) dx`, by quadrature.
pub fn binomial_tail_integral<S: Scalar>(n: usize, k: usize, p: S, quad: &QuadratureConfig) -> Result<S> {
    check_rank(n, k)?;
    check_probability(p)?;
    let scale = S::from_count(n);
    let (v, _) = integrate(|x| scale * bernstein_term(n - 1, k - 1, x), S::zero(), p, quad)?;
    Ok(v)
}

/// `(1 - (1-p)^n) C(n-1, s-1) p^(s-1) (1-p)^(1-s) - P(Binomial(n, p) >= s)`,
/// which is never negative.
pub fn upper_tail_gap<S: Scalar>(n: usize, s: usize, p: S) -> Result<S> {
    check_rank(n, s)?;
    if !(p > S::zero() && p < S::one()) {
        return Err(Error::Domain(format!("p must lie strictly inside (0, 1), got {p}")));
    }
    let one = S::one();
    let e = (s - 1) as i32;
    let lead = (one - (one - p).powi(n as i32))
        * crate::numerics::binomial::<S>(n - 1, s - 1)
        * p.powi(e)
        * (one - p).powi(-e);
    Ok(lead - tail_unchecked(n, s, p))
}

/// Expected total payout `B = sum_k a_k P(Binomial(n, p) >= k)`.
pub fn expected_budget<S: Scalar>(sol: &EquilibriumSolution<S>) -> S {
    budget_for(sol.rewards().as_slice(), sol.p())
}

pub(crate) fn budget_for<S: Scalar>(a: &[S], p: S) -> S {
    if p <= S::zero() {
        return S::zero();
    }
    if p >= S::one() {
        return a.iter().copied().sum();
    }
    binomial_tails(a.len(), p).iter().zip(a).map(|(&t, &ak)| ak * t).sum()
}

/// `P(rank = k | enter at q) = C(n-1, k-1) x^(k-1) (1-x)^(n-k)`, `x = x(q)`.
pub fn rank_density<S: Scalar>(sol: &EquilibriumSolution<S>, k: usize, q: S) -> Result<S> {
    check_rank(sol.n(), k)?;
    let x = sol.competitor_pressure(q)?;
    Ok(bernstein_term(sol.n() - 1, k - 1, x))
}

/// `W(k) = P(Binomial(n, p) >= k) / n`.
pub fn rank_probability<S: Scalar>(sol: &EquilibriumSolution<S>, k: usize) -> Result<S> {
    check_rank(sol.n(), k)?;
    Ok(rank_probability_unchecked(sol, k))
}

fn rank_probability_unchecked<S: Scalar>(sol: &EquilibriumSolution<S>, k: usize) -> S {
    let n = sol.n();
    tail_unchecked(n, k, sol.p()) / S::from_count(n)
}

/// `W(k)` by quadrature over quality of the rank density against the
/// equilibrium quality density, `p G'(q) = c'(q) / |U'(x(q))|`.
pub fn rank_probability_quadrature<S: Scalar>(
    sol: &EquilibriumSolution<S>,
    k: usize,
    quad: &QuadratureConfig,
) -> Result<S> {
    check_rank(sol.n(), k)?;
    if sol.regime() == Regime::NoEntry {
        return Ok(S::zero());
    }
    let n = sol.n();
    let f = |q: S| {
        let x = sol.pressure_unchecked(q);
        let slope = -sol.benefit_slope_of(x);
        if slope <= S::zero() {
            return S::zero();
        }
        bernstein_term(n - 1, k - 1, x) * sol.cost().slope_at(q) / slope
    };
    let (v, _) = integrate(f, S::zero(), sol.qbar(), quad)?;
    Ok(v)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QualityMoments<S> {
    pub eq_max: S,
    pub eq_avg: S,
    pub error_estimate: f64,
}

#[inline]
fn prob_any_above<S: Scalar>(x: S, n: usize) -> S {
    // 1 - (1 - x)^n without cancellation at small x
    -(S::from_count(n) * (-x).ln_1p()).exp_m1()
}

/// `Eq_max = int_0^qbar 1 - (1 - x(q))^n dq` and `Eq_avg = int_0^qbar x(q) dq`
/// in one quadrature pass over quality.
pub fn expected_qualities<S: Scalar>(sol: &EquilibriumSolution<S>, quad: &QuadratureConfig) -> Result<QualityMoments<S>> {
    if sol.regime() == Regime::NoEntry || sol.qbar() <= S::zero() {
        return Ok(QualityMoments { eq_max: S::zero(), eq_avg: S::zero(), error_estimate: 0.0 });
    }
    let n = sol.n();
    let r = integrate_adaptive(
        |q| {
            let x = sol.pressure_unchecked(q);
            [prob_any_above(x, n), x]
        },
        S::zero(),
        sol.qbar(),
        quad,
    )?;
    Ok(QualityMoments { eq_max: r.value[0], eq_avg: r.value[1], error_estimate: r.error_estimate })
}

pub fn expected_max_quality<S: Scalar>(sol: &EquilibriumSolution<S>, quad: &QuadratureConfig) -> Result<S> {
    Ok(expected_qualities(sol, quad)?.eq_max)
}

pub fn expected_avg_quality<S: Scalar>(sol: &EquilibriumSolution<S>, quad: &QuadratureConfig) -> Result<S> {
    Ok(expected_qualities(sol, quad)?.eq_avg)
}

/// Same moments integrated over competitor pressure instead of quality:
/// `dq = -U'(x) / c'(q(x)) dx` with `q(x) = c^{-1}(U(x) - shift)`.
/// Needs no root finding, only the cost inverse.
pub fn expected_qualities_by_pressure<S: Scalar>(
    sol: &EquilibriumSolution<S>,
    quad: &QuadratureConfig,
) -> Result<QualityMoments<S>> {
    if sol.regime() == Regime::NoEntry || sol.qbar() <= S::zero() {
        return Ok(QualityMoments { eq_max: S::zero(), eq_avg: S::zero(), error_estimate: 0.0 });
    }
    let n = sol.n();
    let r = integrate_adaptive(
        |x| {
            let q = sol.cost().inverse_saturating(sol.benefit_of(x) - sol.shift());
            let jac = -sol.benefit_slope_of(x) / sol.cost().slope_at(q);
            [prob_any_above(x, n) * jac, x * jac]
        },
        S::zero(),
        sol.p(),
        quad,
    )?;
    Ok(QualityMoments { eq_max: r.value[0], eq_avg: r.value[1], error_estimate: r.error_estimate })
}
