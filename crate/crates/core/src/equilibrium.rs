//! The symmetric mixed-strategy equilibrium `(p, G)` of a rank-order contest
//! with endogenous entry.
//!
//! Every agent enters with probability `p` and, on entry, draws quality from
//! a continuous CDF `G` supported on `[0, qbar]`. Writing the competitor
//! pressure `x(q) = p (1 - G(q))` (the chance that a given rival enters and
//! beats `q`), an entrant at quality `q` earns the benefit
//!
//! ```text
//! U(x) = sum_{i=0}^{n-1} a_{i+1} C(n-1, i) x^i (1-x)^(n-1-i)
//! ```
//!
//! and the equilibrium is pinned down by indifference over the support:
//! `U(x(q)) = c(q) + shift` with `shift = max(a_n - c(0), 0)`.
//!
//! * `a_1 <= c(0)`: nobody enters (`p = 0`).
//! * `a_n >= c(0)`: everybody enters (`p = 1`) and earns `shift`.
//! * otherwise `p` solves `U(p) = c(0)` and entrants earn zero.
//!
//! `U` is strictly decreasing in `x` for monotone schedules, so every root
//! above is bracketed and found by bisection.

use serde::{Deserialize, Serialize};

use crate::cost::CostModel;
use crate::error::{Error, MechanismViolation, Result};
use crate::mechanism::RewardVector;
use crate::numerics::{bernstein_sum, bernstein_term, monotone_root, RootConfig};
use crate::scalar::Scalar;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Regime {
    /// `a_1 <= c(0)`: `p = 0`.
    NoEntry,
    /// `0 < p < 1`, zero equilibrium profit.
    Interior,
    /// `a_n >= c(0)`: `p = 1`, profit `a_n - c(0)`.
    Full,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SolverConfig {
    /// Bisection stops when the bracket is narrower than this. Zero means
    /// bisect until the bracket cannot be split.
    pub arg_tol: f64,
    /// Required `|U(p) - c(0)|`, scaled by `max(1, |a_1|)` and never below
    /// 16 ulps of the scalar type.
    pub residual_tol: f64,
    pub max_iter: usize,
    /// Nodes of the cached CDF table; 0 disables it.
    pub grid_nodes: usize,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self { arg_tol: 1e-12, residual_tol: 1e-10, max_iter: 200, grid_nodes: 512 }
    }
}

impl SolverConfig {
    /// Machine-precision roots and no CDF table; used inside finite differences.
    pub fn precise() -> Self {
        Self { arg_tol: 0.0, grid_nodes: 0, max_iter: 2000, ..Self::default() }
    }

    fn roots<S: Scalar>(&self) -> RootConfig<S> {
        RootConfig { arg_tol: S::lit(self.arg_tol), max_iter: self.max_iter }
    }
}

fn check_pressure<S: Scalar>(x: S) -> Result<()> {
    if x.is_nan() || x < S::zero() || x > S::one() {
        Err(Error::Domain(format!("competitor pressure must lie in [0, 1], got {x}")))
    } else {
        Ok(())
    }
}

/// Expected prize `U(x)` of an entrant facing competitor pressure `x`.
pub fn benefit<S: Scalar>(x: S, rewards: &RewardVector<S>) -> Result<S> {
    check_pressure(x)?;
    Ok(benefit_at(x, rewards.as_slice()))
}

/// `dU/dx = (n-1) sum_{i=0}^{n-2} (a_{i+2} - a_{i+1}) C(n-2, i) x^i (1-x)^(n-2-i)`.
///
/// Nonpositive on `[0, 1]` for monotone schedules: a harder field lowers
/// the expected prize.
pub fn benefit_slope<S: Scalar>(x: S, rewards: &RewardVector<S>) -> Result<S> {
    check_pressure(x)?;
    Ok(benefit_slope_at(x, rewards.as_slice()))
}

#[inline]
pub(crate) fn benefit_at<S: Scalar>(x: S, a: &[S]) -> S {
    bernstein_sum(a.len() - 1, x, |i| a[i])
}

#[inline]
pub(crate) fn benefit_slope_at<S: Scalar>(x: S, a: &[S]) -> S {
    let m = a.len() - 2;
    S::from_count(m + 1) * bernstein_sum(m, x, |i| a[i + 1] - a[i])
}

/// `max(a_n - c(0), 0)`, the equilibrium profit.
pub fn payoff_shift<S: Scalar>(rewards: &RewardVector<S>, cost: &CostModel<S>) -> S {
    (rewards.bottom() - cost.entry_cost()).max(S::zero())
}

pub fn classify<S: Scalar>(rewards: &RewardVector<S>, cost: &CostModel<S>) -> Regime {
    let c0 = cost.entry_cost();
    if rewards.top() <= c0 {
        Regime::NoEntry
    } else if rewards.bottom() >= c0 {
        Regime::Full
    } else {
        Regime::Interior
    }
}

/// Equilibrium entry probability.
pub fn solve_participation<S: Scalar>(
    rewards: &RewardVector<S>,
    cost: &CostModel<S>,
    cfg: &SolverConfig,
) -> Result<S> {
    let c0 = cost.entry_cost();
    match classify(rewards, cost) {
        Regime::NoEntry => Ok(S::zero()),
        Regime::Full => Ok(S::one()),
        Regime::Interior => {
            let a = rewards.as_slice();
            let p = monotone_root(|x| benefit_at(x, a), S::zero(), S::one(), c0, false, &cfg.roots());
            let residual = (benefit_at(p, a) - c0).abs();
            let scale = S::one().max(rewards.top().abs());
            let tol = S::lit(cfg.residual_tol).max(S::lit(16.0) * S::epsilon());
            if residual > tol * scale {
                return Err(Error::Convergence(format!(
                    "participation residual {:e} above tolerance",
                    residual.to_f64_lossy()
                )));
            }
            Ok(p)
        }
    }
}

/// Top of the quality support: `c(qbar) = a_1 - shift`. Zero without entry.
pub fn support_endpoint<S: Scalar>(rewards: &RewardVector<S>, cost: &CostModel<S>) -> S {
    if classify(rewards, cost) == Regime::NoEntry {
        return S::zero();
    }
    cost.inverse_saturating(rewards.top() - payoff_shift(rewards, cost))
}

/// For a schedule that is not monotone rank by rank: `U` must be strictly
/// decreasing on `[0, p]` and stay below `U(p)` on `(p, 1]`, so that `p` is
/// the unique entry root and `x(q)` is well defined.
fn check_decreasing_benefit<S: Scalar>(rewards: &RewardVector<S>, p: S) -> Result<()> {
    if rewards.is_monotone() || p <= S::zero() {
        return Ok(());
    }
    let a = rewards.as_slice();
    let steps = 512;
    let at_p = benefit_at(p, a);
    for j in 1..steps {
        let t = S::from_count(j) / S::from_count(steps);
        let x = p * t;
        if benefit_slope_at(x, a) >= S::zero() {
            return Err(MechanismViolation::Constructor(format!(
                "expected prize is not decreasing in competitor pressure near x = {x}"
            ))
            .into());
        }
        let beyond = p + (S::one() - p) * t;
        if p < S::one() && benefit_at(beyond, a) >= at_p {
            return Err(MechanismViolation::Constructor(format!(
                "entry condition has a second root near x = {beyond}"
            ))
            .into());
        }
    }
    Ok(())
}

/// Payoffs in a profile where every entrant picks the same quality `q0`
/// while rivals enter with probability `p`: `(tied, deviation)` where
/// `tied` is the random-tie-break payoff at `q0` and `deviation` the payoff of
/// moving alone to `q0 + eps` (always ranked first).
pub fn pure_profile_payoffs<S: Scalar>(
    rewards: &RewardVector<S>,
    cost: &CostModel<S>,
    p: S,
    q0: S,
    eps: S,
) -> Result<(S, S)> {
    check_pressure(p)?;
    let a = rewards.as_slice();
    let n = a.len();
    let mut prefix = S::zero();
    let mut tied = S::zero();
    for k in 1..=n {
        prefix = prefix + a[k - 1];
        // k entrants in total, this agent included
        tied = tied + bernstein_term(n - 1, k - 1, p) * prefix / S::from_count(k);
    }
    let tied = tied - cost.eval(q0)?;
    let deviation = rewards.top() - cost.eval(q0 + eps)?;
    Ok((tied, deviation))
}

/// Monotone cubic table of `G` on Chebyshev–Lobatto nodes over `[0, qbar]`.
#[derive(Debug, Clone)]
pub struct CdfGrid<S> {
    q: Vec<S>,
    g: Vec<S>,
    slope: Vec<S>,
}

impl<S: Scalar> CdfGrid<S> {
    fn build(nodes: usize, qbar: S, cdf: impl Fn(S) -> S) -> Self {
        let m = nodes.max(2);
        let pi = S::lit(std::f64::consts::PI);
        let q: Vec<S> = (0..m)
            .map(|j| {
                let t = (pi * S::from_count(m - 1 - j) / S::from_count(m - 1)).cos();
                (qbar * (S::one() + t) * S::half()).max(S::zero()).min(qbar)
            })
            .collect();
        let mut g: Vec<S> = q.iter().map(|&v| cdf(v)).collect();
        g[0] = S::zero();
        g[m - 1] = S::one();
        for j in 1..m {
            if g[j] < g[j - 1] {
                g[j] = g[j - 1];
            }
        }
        let slope = fritsch_carlson(&q, &g);
        Self { q, g, slope }
    }

    pub fn nodes(&self) -> &[S] {
        &self.q
    }

    pub fn values(&self) -> &[S] {
        &self.g
    }

    /// Interpolated `G(q)`, clamped to `[0, 1]` outside the support.
    pub fn interpolate(&self, q: S) -> S {
        let m = self.q.len();
        if q <= self.q[0] {
            return S::zero();
        }
        if q >= self.q[m - 1] {
            return S::one();
        }
        let j = self.q.partition_point(|&v| v <= q).clamp(1, m - 1) - 1;
        let h = self.q[j + 1] - self.q[j];
        if h <= S::zero() {
            return self.g[j];
        }
        let t = (q - self.q[j]) / h;
        let t2 = t * t;
        let t3 = t2 * t;
        let two = S::two();
        let three = S::lit(3.0);
        let h00 = two * t3 - three * t2 + S::one();
        let h10 = t3 - two * t2 + t;
        let h01 = three * t2 - two * t3;
        let h11 = t3 - t2;
        h00 * self.g[j] + h10 * h * self.slope[j] + h01 * self.g[j + 1] + h11 * h * self.slope[j + 1]
    }
}

fn fritsch_carlson<S: Scalar>(x: &[S], y: &[S]) -> Vec<S> {
    let m = x.len();
    let delta: Vec<S> = (0..m - 1)
        .map(|j| {
            let h = x[j + 1] - x[j];
            if h > S::zero() {
                (y[j + 1] - y[j]) / h
            } else {
                S::zero()
            }
        })
        .collect();
    let mut d = vec![S::zero(); m];
    d[0] = delta[0];
    d[m - 1] = delta[m - 2];
    for j in 1..m - 1 {
        d[j] = if delta[j - 1] * delta[j] <= S::zero() {
            S::zero()
        } else {
            (delta[j - 1] + delta[j]) * S::half()
        };
    }
    for j in 0..m - 1 {
        if delta[j] == S::zero() {
            d[j] = S::zero();
            d[j + 1] = S::zero();
            continue;
        }
        let alpha = d[j] / delta[j];
        let beta = d[j + 1] / delta[j];
        let r = alpha * alpha + beta * beta;
        let nine = S::lit(9.0);
        if r > nine {
            let tau = S::lit(3.0) / r.sqrt();
            d[j] = tau * alpha * delta[j];
            d[j + 1] = tau * beta * delta[j];
        }
    }
    d
}

/// A solved instance. Immutable; the optional CDF table is built eagerly.
#[derive(Debug, Clone)]
pub struct EquilibriumSolution<S> {
    rewards: RewardVector<S>,
    cost: CostModel<S>,
    p: S,
    qbar: S,
    shift: S,
    regime: Regime,
    config: SolverConfig,
    grid: Option<CdfGrid<S>>,
}

impl<S: Scalar> EquilibriumSolution<S> {
    pub fn solve(rewards: &RewardVector<S>, cost: &CostModel<S>, config: &SolverConfig) -> Result<Self> {
        let regime = classify(rewards, cost);
        let p = solve_participation(rewards, cost, config)?;
        check_decreasing_benefit(rewards, p)?;
        let (qbar, shift) = match regime {
            Regime::NoEntry => (S::zero(), S::zero()),
            _ => (support_endpoint(rewards, cost), payoff_shift(rewards, cost)),
        };
        let mut sol = Self {
            rewards: rewards.clone(),
            cost: *cost,
            p,
            qbar,
            shift,
            regime,
            config: *config,
            grid: None,
        };
        if regime != Regime::NoEntry && config.grid_nodes >= 2 && qbar > S::zero() {
            let grid = CdfGrid::build(config.grid_nodes, qbar, |q| sol.cdf_unchecked(q));
            sol.grid = Some(grid);
        }
        Ok(sol)
    }

    pub fn rewards(&self) -> &RewardVector<S> {
        &self.rewards
    }

    pub fn cost(&self) -> &CostModel<S> {
        &self.cost
    }

    pub fn n(&self) -> usize {
        self.rewards.n()
    }

    /// Entry probability.
    pub fn p(&self) -> S {
        self.p
    }

    pub fn qbar(&self) -> S {
        self.qbar
    }

    /// Equilibrium profit `max(a_n - c(0), 0)`.
    pub fn shift(&self) -> S {
        self.shift
    }

    pub fn regime(&self) -> Regime {
        self.regime
    }

    pub fn config(&self) -> &SolverConfig {
        &self.config
    }

    pub fn cdf_grid(&self) -> Option<&CdfGrid<S>> {
        self.grid.as_ref()
    }

    pub(crate) fn benefit_of(&self, x: S) -> S {
        benefit_at(x, self.rewards.as_slice())
    }

    pub(crate) fn benefit_slope_of(&self, x: S) -> S {
        benefit_slope_at(x, self.rewards.as_slice())
    }

    fn check_query(&self, q: S) -> Result<()> {
        if self.regime == Regime::NoEntry {
            return Err(Error::State("no agent enters; the quality distribution is undefined".into()));
        }
        let slack = S::lit(1e-12) * S::one().max(self.qbar);
        if q.is_nan() || q < S::zero() || q > self.qbar + slack {
            return Err(Error::Domain(format!("quality {q} outside the support [0, {}]", self.qbar)));
        }
        Ok(())
    }

    /// `x(q) = p (1 - G(q))` without range checks; `q` is clamped to the support.
    pub(crate) fn pressure_unchecked(&self, q: S) -> S {
        if q <= S::zero() {
            return self.p;
        }
        if q >= self.qbar {
            return S::zero();
        }
        let target = self.cost.value(q) + self.shift;
        let a = self.rewards.as_slice();
        monotone_root(|x| benefit_at(x, a), S::zero(), self.p, target, false, &self.config.roots())
    }

    fn cdf_unchecked(&self, q: S) -> S {
        if self.p <= S::zero() {
            return S::zero();
        }
        (S::one() - self.pressure_unchecked(q) / self.p).max(S::zero()).min(S::one())
    }

    /// Competitor pressure `x(q)`.
    pub fn competitor_pressure(&self, q: S) -> Result<S> {
        self.check_query(q)?;
        Ok(self.pressure_unchecked(q))
    }

    /// Equilibrium CDF `G(q)` by direct root finding.
    pub fn cdf(&self, q: S) -> Result<S> {
        self.check_query(q)?;
        Ok(self.cdf_unchecked(q))
    }

    /// `G(q)` from the cached table when present, exact otherwise.
    pub fn cdf_fast(&self, q: S) -> Result<S> {
        self.check_query(q)?;
        Ok(match &self.grid {
            Some(g) => g.interpolate(q),
            None => self.cdf_unchecked(q),
        })
    }

    /// Payoff of an entrant at `q` against the equilibrium field, minus the
    /// equilibrium profit. Zero on the support; above `qbar` the entrant wins
    /// outright and the residual is `a_1 - c(q) - shift < 0`.
    pub fn payoff_residual(&self, q: S) -> Result<S> {
        Ok(self.payoff(q)? - self.shift)
    }

    /// Expected payoff `U(x(q)) - c(q)` of entering at quality `q`.
    pub fn payoff(&self, q: S) -> Result<S> {
        let c = self.cost.eval(q)?;
        if self.regime == Regime::NoEntry {
            // rivals never enter, so any entrant wins the top prize
            return Ok(self.rewards.top() - c);
        }
        if q >= self.qbar {
            return Ok(self.rewards.top() - c);
        }
        Ok(self.benefit_of(self.pressure_unchecked(q)) - c)
    }

    /// Inverse CDF: `q(u) = c^{-1}(U(p (1 - u)) - shift)`.
    pub fn quantile(&self, u: S) -> Result<S> {
        if self.regime == Regime::NoEntry {
            return Err(Error::State("no agent enters; nothing to sample".into()));
        }
        if u.is_nan() || u < S::zero() || u > S::one() {
            return Err(Error::Domain(format!("probability must lie in [0, 1], got {u}")));
        }
        Ok(self.quantile_unchecked(u))
    }

    pub(crate) fn quantile_unchecked(&self, u: S) -> S {
        let x = self.p * (S::one() - u);
        let v = self.benefit_of(x) - self.shift;
        self.cost.inverse_saturating(v).min(self.qbar)
    }

    /// Rows `(q, G, x, payoff residual)` on `points` equally spaced qualities.
    pub fn table(&self, points: usize) -> Result<Vec<[S; 4]>> {
        if self.regime == Regime::NoEntry {
            return Err(Error::State("no agent enters; no table to print".into()));
        }
        let m = points.max(2);
        (0..m)
            .map(|j| {
                let q = self.qbar * S::from_count(j) / S::from_count(m - 1);
                let x = self.pressure_unchecked(q);
                let g = self.cdf_unchecked(q);
                Ok([q, g, x, self.payoff_residual(q)?])
            })
            .collect()
    }

    /// Largest |payoff residual| over `points` equally spaced support points.
    pub fn max_residual(&self, points: usize) -> Result<S> {
        if self.regime == Regime::NoEntry {
            return Ok(S::zero());
        }
        let m = points.max(2);
        let mut worst = S::zero();
        for j in 0..m {
            let q = self.qbar * S::from_count(j) / S::from_count(m - 1);
            worst = worst.max(self.payoff_residual(q)?.abs());
        }
        Ok(worst)
    }
}
