//! Self-check suites: analytic identities over parameter lattices and
//! closed-form regression instances.

use serde::Serialize;

use crate::cost::CostModel;
use crate::design::{self, DesignConfig};
use crate::equilibrium::{EquilibriumSolution, Regime, SolverConfig};
use crate::error::Result;
use crate::mechanism::{attention_schedule, AttentionCaps, RewardVector};
use crate::metrics::{
    binomial_tail, binomial_tail_integral, expected_budget, expected_qualities, expected_qualities_by_pressure,
    upper_tail_gap, rank_probability, rank_probability_quadrature,
};
use crate::numerics::QuadratureConfig;

/// Budget at which the budget-matched derivative of average quality at
/// winner-take-all changes sign, for `c(q) = e^q`, `n = 3`, `s = 2`.
/// Computed by this crate and frozen as a regression value.
pub const EXP_AVG_CROSSOVER_N3_S2: f64 = 4.089_378_642;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Suite {
    Identities,
    Golden,
    All,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CheckOutcome {
    pub name: String,
    pub passed: bool,
    /// Worst deviation seen, in the units of the check.
    pub worst: f64,
    pub tolerance: f64,
    pub cases: usize,
}

fn outcome(name: &str, worst: f64, tolerance: f64, cases: usize) -> CheckOutcome {
    CheckOutcome { name: name.into(), passed: worst <= tolerance, worst, tolerance, cases }
}

/// Probability grid `0, 0.05, ..., 1`.
fn p_grid() -> impl Iterator<Item = f64> {
    (0..=20).map(|j| j as f64 / 20.0)
}

/// `P(Binomial(n,p) >= k)` against its Beta-integral form, `n <= 12`.
pub fn tail_identity() -> Result<CheckOutcome> {
    let quad = QuadratureConfig { tol: 1e-13, ..QuadratureConfig::default() };
    let mut worst = 0.0f64;
    let mut cases = 0;
    for n in 1..=12 {
        for p in p_grid() {
            for k in 1..=n {
                let d = (binomial_tail(n, k, p)? - binomial_tail_integral(n, k, p, &quad)?).abs();
                worst = worst.max(d);
                cases += 1;
            }
        }
    }
    Ok(outcome("binomial tail equals its integral form", worst, 1e-10, cases))
}

/// The lower bound on the top-prize slope dominates the tail ratio:
/// reports the most negative gap over `n <= 12`, interior `p`, `2 <= s <= n`.
pub fn tail_ratio_gap() -> Result<CheckOutcome> {
    let mut worst = 0.0f64;
    let mut cases = 0;
    for n in 2..=12 {
        for p in p_grid().filter(|&p| p > 0.0 && p < 1.0) {
            for s in 2..=n {
                worst = worst.max(-upper_tail_gap(n, s, p)?);
                cases += 1;
            }
        }
    }
    Ok(outcome("tail-ratio gap is nonnegative", worst, 1e-12, cases))
}

fn reference_instances() -> Vec<(Vec<f64>, CostModel<f64>)> {
    let lin = CostModel::linear(0.25, 1.0).unwrap();
    vec![
        (vec![1.0, 0.0], lin),
        (vec![1.0, 0.5], lin),
        (vec![1.0, 0.4, 0.1], lin),
        (vec![2.0, 0.5, 0.0, 0.0], CostModel::exponential(1.0).unwrap()),
        (vec![1.5, 0.7, 0.2], CostModel::quadratic_plus(0.3, 1.0, 2.0).unwrap()),
    ]
}

/// Quality moments over quality and over competitor pressure agree.
pub fn quality_routes() -> Result<CheckOutcome> {
    let quad = QuadratureConfig { tol: 1e-12, ..QuadratureConfig::default() };
    let mut worst = 0.0f64;
    let cases = reference_instances().len();
    for (a, c) in reference_instances() {
        let sol = EquilibriumSolution::solve(&RewardVector::validate(a)?, &c, &SolverConfig::default())?;
        let x = expected_qualities(&sol, &quad)?;
        let y = expected_qualities_by_pressure(&sol, &quad)?;
        worst = worst.max((x.eq_max - y.eq_max).abs()).max((x.eq_avg - y.eq_avg).abs());
    }
    Ok(outcome("quality integrals agree across substitution", worst, 1e-8, cases))
}

/// Rank probabilities from the binomial tail and from integrating the rank
/// density against the quality density.
pub fn rank_routes() -> Result<CheckOutcome> {
    let quad = QuadratureConfig { tol: 1e-12, ..QuadratureConfig::default() };
    let mut worst = 0.0f64;
    let mut cases = 0;
    for (a, c) in reference_instances() {
        let sol = EquilibriumSolution::solve(&RewardVector::validate(a)?, &c, &SolverConfig::default())?;
        for k in 1..=sol.n() {
            let d = (rank_probability(&sol, k)? - rank_probability_quadrature(&sol, k, &quad)?).abs();
            worst = worst.max(d);
            cases += 1;
        }
    }
    Ok(outcome("rank probabilities agree across routes", worst, 1e-8, cases))
}

/// Largest payoff residual on a 100-point support grid.
pub fn indifference() -> Result<CheckOutcome> {
    let mut worst = 0.0f64;
    let cases = reference_instances().len();
    for (a, c) in reference_instances() {
        let sol = EquilibriumSolution::solve(&RewardVector::validate(a)?, &c, &SolverConfig::default())?;
        worst = worst.max(sol.max_residual(100)?);
    }
    Ok(outcome("payoff is flat on the support", worst, 1e-9, cases))
}

pub fn identities() -> Result<Vec<CheckOutcome>> {
    Ok(vec![tail_identity()?, tail_ratio_gap()?, quality_routes()?, rank_routes()?, indifference()?])
}

fn max_abs(pairs: &[(f64, f64)]) -> f64 {
    pairs.iter().map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}

pub fn golden() -> Result<Vec<CheckOutcome>> {
    let lin = CostModel::linear(0.25, 1.0)?;
    let quad = QuadratureConfig { tol: 1e-12, ..QuadratureConfig::default() };
    let mut out = Vec::new();

    let sol = EquilibriumSolution::solve(&RewardVector::validate(vec![1.0, 0.0])?, &lin, &SolverConfig::default())?;
    let m = expected_qualities(&sol, &quad)?;
    let mut pairs = vec![
        (sol.p(), 0.75),
        (sol.qbar(), 0.75),
        (expected_budget(&sol), 0.9375),
        (m.eq_max, 0.421875),
        (m.eq_avg, 0.28125),
    ];
    for j in 0..=10 {
        let q = 0.075 * j as f64;
        pairs.push((sol.cdf(q)?, q / 0.75));
    }
    out.push(outcome("interior two-agent instance", max_abs(&pairs), 1e-8, pairs.len()));

    let sol = EquilibriumSolution::solve(&RewardVector::validate(vec![1.0, 0.5])?, &lin, &SolverConfig::default())?;
    let mut pairs = vec![(sol.p(), 1.0), (sol.qbar(), 0.5), (sol.shift(), 0.25)];
    for j in 0..=10 {
        let q = 0.05 * j as f64;
        pairs.push((sol.cdf(q)?, 2.0 * q));
        pairs.push((sol.payoff(q)?, 0.25));
    }
    let regime_ok = sol.regime() == Regime::Full;
    let mut full = outcome("full-entry two-agent instance", max_abs(&pairs), 1e-8, pairs.len());
    full.passed &= regime_ok;
    out.push(full);

    let c = CostModel::linear(0.3, 1.0)?;
    let got = attention_schedule(&AttentionCaps::new(vec![1.0, 0.5, 0.4])?, c.entry_cost())?;
    out.push(outcome("attention schedule caps the last rank", max_abs(&[(got.reward(3), 0.3)]), 0.0, 1));

    let cfg = DesignConfig::default();
    let moved = design::hold_budget(&RewardVector::validate(vec![1.0, 0.0, 0.0])?, &lin, 2, 0.02, &cfg)?;
    let drift = (design::budget_of(&moved, &lin, &cfg.solver)? - design::wta_budget(3, 1.0, &lin)?).abs();
    out.push(outcome("budget-matched move keeps the budget", drift, 1e-8, 1));

    if EXP_AVG_CROSSOVER_N3_S2.is_finite() {
        let e = CostModel::exponential(1.0)?;
        let b = EXP_AVG_CROSSOVER_N3_S2;
        let below = design::avg_derivative_at_budget(3, &e, b * 0.98, 2, &cfg)?.2;
        let above = design::avg_derivative_at_budget(3, &e, b * 1.02, 2, &cfg)?.2;
        let worst = if below < 0.0 && above > 0.0 { 0.0 } else { 1.0 };
        out.push(outcome("average-quality sign flips at the frozen budget", worst, 0.0, 2));
    }
    Ok(out)
}

pub fn run(suite: Suite) -> Result<Vec<CheckOutcome>> {
    Ok(match suite {
        Suite::Identities => identities()?,
        Suite::Golden => golden()?,
        Suite::All => {
            let mut v = identities()?;
            v.extend(golden()?);
            v
        }
    })
}
