//! Comparative statics and reward-design experiments.
//!
//! Derivatives are central finite differences of fully re-solved equilibria.
//! "Budget-matched" moves change one lower prize `a_s` and re-solve the top
//! prize `a_1` so the expected payout stays fixed.

use rand::RngExt;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::cost::{CostModel, HazardClass};
use crate::equilibrium::{benefit_slope_at, solve_participation, EquilibriumSolution, Regime, SolverConfig};
use crate::error::{Error, MechanismViolation, Result};
use crate::mechanism::{attention_schedule, winner_take_all, AttentionCaps, RewardVector};
use crate::metrics::{binomial_tails, budget_for, expected_qualities};
use crate::numerics::{bernstein_term, secant_increasing, QuadratureConfig};
use crate::scalar::Scalar;
use crate::streams::stream_rng;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct DesignConfig {
    pub solver: SolverConfig,
    pub quadrature: QuadratureConfig,
    /// Finite-difference step relative to `a_1`.
    pub rel_step: f64,
    /// Budget residual the top-prize re-solve aims for, scaled by `max(1, B)`.
    pub budget_tol: f64,
    pub max_iter: usize,
    /// Absolute slack when comparing expected qualities across schedules.
    pub compare_tol: f64,
    /// Cap on lattice candidates in the attention certificate.
    pub max_candidates: usize,
}

impl Default for DesignConfig {
    fn default() -> Self {
        Self {
            solver: SolverConfig::precise(),
            quadrature: QuadratureConfig { tol: 1e-12, ..QuadratureConfig::default() },
            rel_step: 1e-4,
            budget_tol: 1e-12,
            max_iter: 100,
            compare_tol: 1e-8,
            max_candidates: 4000,
        }
    }
}

fn participation_of<S: Scalar>(a: &[S], cost: &CostModel<S>, solver: &SolverConfig) -> Result<S> {
    solve_participation(&RewardVector::raw(a.to_vec()), cost, solver)
}

/// Expected payout of `a` at its equilibrium entry probability.
pub fn budget_of<S: Scalar>(a: &RewardVector<S>, cost: &CostModel<S>, solver: &SolverConfig) -> Result<S> {
    budget_raw(a.as_slice(), cost, solver)
}

fn budget_raw<S: Scalar>(a: &[S], cost: &CostModel<S>, solver: &SolverConfig) -> Result<S> {
    Ok(budget_for(a, participation_of(a, cost, solver)?))
}

/// Expected payout of `(prize, 0, ..., 0)`.
pub fn wta_budget<S: Scalar>(n: usize, prize: S, cost: &CostModel<S>) -> Result<S> {
    let wta = winner_take_all(n, prize)?;
    if prize <= cost.entry_cost() {
        return Err(Error::Infeasible(format!(
            "prize {prize} does not cover the entry cost {}; nobody participates",
            cost.entry_cost()
        )));
    }
    budget_raw(wta.as_slice(), cost, &SolverConfig::precise())
}

/// Winner-take-all prize whose expected payout is `budget`.
pub fn wta_prize_for_budget<S: Scalar>(n: usize, budget: S, cost: &CostModel<S>, cfg: &DesignConfig) -> Result<S> {
    if !(budget > S::zero()) {
        return Err(Error::Infeasible(format!("budget must be > 0, got {budget}")));
    }
    let c0 = cost.entry_cost();
    let f = |prize: S| {
        let mut a = vec![S::zero(); n];
        a[0] = prize;
        budget_raw(&a, cost, &cfg.solver)
    };
    let x0 = budget.max(c0) * S::lit(1.1);
    let x1 = x0 * S::lit(1.05);
    let tol = S::lit(cfg.budget_tol) * S::one().max(budget);
    Ok(secant_increasing(f, budget, x0, x1, S::zero(), tol, cfg.max_iter)?.root)
}

/// Re-solves the top prize so that the schedule's expected payout is
/// `target`, leaving ranks `2..=n` untouched.
pub fn rebalance_winner<S: Scalar>(
    a: &RewardVector<S>,
    cost: &CostModel<S>,
    target: S,
    cfg: &DesignConfig,
) -> Result<RewardVector<S>> {
    let v = solve_top_for_budget(a.as_slice(), cost, target, cfg)?;
    if v[0] <= v[1] {
        return Err(Error::Infeasible(format!(
            "matching the budget needs a_1 = {} <= a_2 = {}",
            v[0], v[1]
        )));
    }
    Ok(RewardVector::validate(v)?)
}

fn solve_top_for_budget<S: Scalar>(a: &[S], cost: &CostModel<S>, target: S, cfg: &DesignConfig) -> Result<Vec<S>> {
    if !(target > S::zero()) {
        return Err(Error::Infeasible("a zero budget means no participation".into()));
    }
    let floor = a[1..].iter().copied().fold(S::neg_infinity(), S::max);
    let mut work = a.to_vec();
    let mut eval = |top: S| {
        work[0] = top;
        budget_raw(&work, cost, &cfg.solver)
    };
    let at_floor = eval(floor)?;
    if at_floor >= target {
        return Err(Error::Infeasible(format!(
            "even a_1 = a_2 = {floor} pays {at_floor} >= budget {target}"
        )));
    }
    let bump = S::lit(1e-3) * S::one().max(floor.abs());
    let x0 = if a[0] > floor { a[0] } else { floor + bump };
    let x1 = x0 + S::lit(1e-3) * S::one().max(x0.abs());
    let tol = S::lit(cfg.budget_tol) * S::one().max(target.abs());
    let out = secant_increasing(&mut eval, target, x0, x1, floor, tol, cfg.max_iter)?;
    if out.root <= cost.entry_cost() {
        return Err(Error::Infeasible(format!(
            "matching the budget needs a_1 = {} <= c(0); no participation possible",
            out.root
        )));
    }
    let mut v = a.to_vec();
    v[0] = out.root;
    Ok(v)
}

fn check_lower_rank(n: usize, s: usize) -> Result<()> {
    if s < 2 || s > n {
        Err(Error::Domain(format!("rank s must lie in 2..={n}, got {s}")))
    } else {
        Ok(())
    }
}

/// Sets rank `s` to `new_as` and re-solves `a_1` to hold the expected payout.
pub fn hold_budget<S: Scalar>(
    a: &RewardVector<S>,
    cost: &CostModel<S>,
    s: usize,
    new_as: S,
    cfg: &DesignConfig,
) -> Result<RewardVector<S>> {
    check_lower_rank(a.n(), s)?;
    if new_as == a.reward(s) {
        return Ok(a.clone());
    }
    let mut v = a.as_slice().to_vec();
    v[s - 1] = new_as;
    if let Some(i) = v[1..].windows(2).position(|w| w[0] < w[1]) {
        return Err(Error::Infeasible(format!(
            "a_{s} = {new_as} breaks monotonicity between ranks {} and {}",
            i + 2,
            i + 3
        )));
    }
    let target = budget_raw(a.as_slice(), cost, &cfg.solver)?;
    rebalance_winner(&RewardVector::perturbed(v.clone()).unwrap_or(RewardVector::validate(v)?), cost, target, cfg)
}

/// Like [`hold_budget`] but tolerates non-monotone lower ranks, for
/// finite differences at schedules with tied lower prizes.
fn hold_budget_relaxed<S: Scalar>(
    a: &[S],
    cost: &CostModel<S>,
    s: usize,
    new_as: S,
    target: S,
    cfg: &DesignConfig,
) -> Result<RewardVector<S>> {
    let mut v = a.to_vec();
    v[s - 1] = new_as;
    let v = solve_top_for_budget(&v, cost, target, cfg)?;
    Ok(RewardVector::perturbed(v)?)
}

/// `dp/da_s` by implicit differentiation of `U(p) = c(0)`:
/// `-(dU/da_s) / (dU/dp)`, positive in the interior regime, zero otherwise.
pub fn participation_sensitivity<S: Scalar>(
    a: &RewardVector<S>,
    cost: &CostModel<S>,
    s: usize,
    solver: &SolverConfig,
) -> Result<S> {
    if s == 0 || s > a.n() {
        return Err(Error::Domain(format!("rank {s} outside 1..={}", a.n())));
    }
    let p = solve_participation(a, cost, solver)?;
    if !(p > S::zero() && p < S::one()) {
        return Ok(S::zero());
    }
    let n = a.n();
    Ok(-bernstein_term(n - 1, s - 1, p) / benefit_slope_at(p, a.as_slice()))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SignSummary {
    Positive,
    Negative,
    Mixed,
    /// `a_n` sits within one step of `c(0)`, where the derivative has a kink.
    Boundary,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SensitivityReport<S> {
    pub rank: usize,
    pub delta: S,
    pub q: Vec<S>,
    /// `d x(q) / d a_rank` on the grid, `x = p (1 - G)`.
    pub derivative: Vec<S>,
    /// Rounding floor of each difference quotient; points with
    /// `|derivative| <= noise_floor` do not count towards `sign`.
    pub noise_floor: Vec<S>,
    pub unresolved: usize,
    pub sign: SignSummary,
    /// Central difference of the entry probability.
    pub dp_da: S,
    pub dp_da_implicit: S,
}

/// Effect of raising `a_i` on the probability `p (1 - G(q))` that a given
/// rival enters above `q`, on 50 interior quality points.
pub fn reward_sensitivity<S: Scalar>(
    a: &RewardVector<S>,
    cost: &CostModel<S>,
    i: usize,
    delta: S,
    cfg: &DesignConfig,
) -> Result<SensitivityReport<S>> {
    let n = a.n();
    if i == 0 || i > n {
        return Err(Error::Domain(format!("rank {i} outside 1..={n}")));
    }
    if !(delta > S::zero()) {
        return Err(Error::Domain("delta must be > 0".into()));
    }
    let shifted = |d: S| {
        a.with_reward(i, a.reward(i) + d).map_err(|_| {
            Error::Mechanism(MechanismViolation::Constructor(format!(
                "moving a_{i} by {d} breaks monotonicity; use a smaller delta"
            )))
        })
    };
    let up = shifted(delta)?;
    let down = shifted(-delta)?;
    let base = EquilibriumSolution::solve(a, cost, &cfg.solver)?;
    if base.regime() == Regime::NoEntry {
        return Err(Error::State("no entry: the quality distribution is undefined".into()));
    }
    let sol_up = EquilibriumSolution::solve(&up, cost, &cfg.solver)?;
    let sol_down = EquilibriumSolution::solve(&down, cost, &cfg.solver)?;
    if sol_up.regime() == Regime::NoEntry || sol_down.regime() == Regime::NoEntry {
        return Err(Error::State("perturbation leaves the entry region; use a smaller delta".into()));
    }
    let qmax = base.qbar().min(sol_up.qbar()).min(sol_down.qbar());
    let points = 50;
    let two_delta = S::two() * delta;
    let q: Vec<S> = (1..=points).map(|j| qmax * S::from_count(j) / S::from_count(points + 1)).collect();
    let derivative: Vec<S> = q
        .iter()
        .map(|&qj| (sol_up.pressure_unchecked(qj) - sol_down.pressure_unchecked(qj)) / two_delta)
        .collect();
    // each root is off by about (rounding in U) / |U'(x)|
    let scale = a.as_slice().iter().fold(S::zero(), |m, v| m.max(v.abs())) + cost.entry_cost().abs();
    let noise_floor: Vec<S> = q
        .iter()
        .map(|&qj| {
            let slope = base.benefit_slope_of(base.pressure_unchecked(qj)).abs();
            S::lit(64.0) * S::epsilon() * (scale + cost.value(qj)) / (slope * delta)
        })
        .collect();
    let resolved: Vec<S> = derivative.iter().zip(&noise_floor).filter(|(d, f)| d.abs() > **f).map(|(d, _)| *d).collect();
    let c0 = cost.entry_cost();
    let sign = if i == n && (a.bottom() - c0).abs() <= delta {
        SignSummary::Boundary
    } else if resolved.is_empty() {
        SignSummary::Mixed
    } else if resolved.iter().all(|&d| d > S::zero()) {
        SignSummary::Positive
    } else if resolved.iter().all(|&d| d < S::zero()) {
        SignSummary::Negative
    } else {
        SignSummary::Mixed
    };
    Ok(SensitivityReport {
        rank: i,
        delta,
        q,
        unresolved: points - resolved.len(),
        derivative,
        noise_floor,
        sign,
        dp_da: (sol_up.p() - sol_down.p()) / two_delta,
        dp_da_implicit: participation_sensitivity(a, cost, i, &cfg.solver)?,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PerturbationResult<S> {
    pub s: usize,
    pub delta: S,
    /// Secant slope of the re-solved top prize against `a_s`.
    pub da1_per_das_at_b: S,
    pub d_eqmax: S,
    pub d_eqavg: S,
    /// `-W(s)/W(1)` at the base schedule.
    pub bound: S,
    /// Largest `|B(perturbed) - B(base)|` over the evaluated points.
    pub budget_mismatch: S,
    pub regime: Regime,
}

/// Budget-matched derivatives of the expected best and average quality in
/// `a_s`, with `a_1` absorbing the change.
///
/// Lower ranks may tie (as in winner-take-all), in which case `a_s +- delta`
/// leaves the monotone class; such points are still solved as long as the
/// expected prize stays decreasing in competitor pressure.
pub fn budget_matched_derivative<S: Scalar>(
    a: &RewardVector<S>,
    cost: &CostModel<S>,
    s: usize,
    delta: S,
    cfg: &DesignConfig,
) -> Result<PerturbationResult<S>> {
    let n = a.n();
    check_lower_rank(n, s)?;
    if !(delta > S::zero()) {
        return Err(Error::Domain("delta must be > 0".into()));
    }
    let p0 = solve_participation(a, cost, &cfg.solver)?;
    if p0 <= S::zero() {
        return Err(Error::State("no entry at the base schedule".into()));
    }
    let target = budget_for(a.as_slice(), p0);
    let mut tops = [S::zero(); 2];
    let mut maxes = [S::zero(); 2];
    let mut avgs = [S::zero(); 2];
    let mut mismatch = S::zero();
    for (j, d) in [delta, -delta].into_iter().enumerate() {
        let v = hold_budget_relaxed(a.as_slice(), cost, s, a.reward(s) + d, target, cfg)?;
        let sol = EquilibriumSolution::solve(&v, cost, &cfg.solver)?;
        let m = expected_qualities(&sol, &cfg.quadrature)?;
        mismatch = mismatch.max((budget_for(v.as_slice(), sol.p()) - target).abs());
        tops[j] = v.top();
        maxes[j] = m.eq_max;
        avgs[j] = m.eq_avg;
    }
    let two_delta = S::two() * delta;
    let tails = binomial_tails(n, p0);
    Ok(PerturbationResult {
        s,
        delta,
        da1_per_das_at_b: (tops[0] - tops[1]) / two_delta,
        d_eqmax: (maxes[0] - maxes[1]) / two_delta,
        d_eqavg: (avgs[0] - avgs[1]) / two_delta,
        bound: -tails[s - 1] / tails[0],
        budget_mismatch: mismatch,
        regime: crate::equilibrium::classify(a, cost),
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(bound = "S: Scalar")]
pub struct AttentionCertificate<S> {
    pub schedule: RewardVector<S>,
    pub eq_max: S,
    pub eq_avg: S,
    pub candidates: usize,
    /// Lattice enumeration hit the candidate cap.
    pub truncated: bool,
    pub best_lattice_eq_max: S,
    pub best_lattice_eq_avg: S,
    pub argmax_eq_max: Vec<S>,
    pub argmax_eq_avg: Vec<S>,
    /// Lattice points within `compare_tol` of the prescribed schedule.
    pub ties_eq_max: usize,
    pub ties_eq_avg: usize,
    pub passes: bool,
}

fn attention_lattice<S: Scalar>(caps: &[S], limit: usize) -> (Vec<Vec<S>>, bool) {
    const LEVELS: [f64; 5] = [0.0, 0.25, 0.5, 0.75, 1.0];
    let n = caps.len();
    let mut out = Vec::new();
    let mut idx = vec![0usize; n];
    loop {
        let v: Vec<S> = idx.iter().zip(caps).map(|(&l, &c)| S::lit(LEVELS[l]) * c).collect();
        if RewardVector::validate(v.clone()).is_ok() {
            if out.len() == limit {
                return (out, true);
            }
            out.push(v);
        }
        // odometer over levels, last rank fastest
        let mut k = n;
        loop {
            if k == 0 {
                return (out, false);
            }
            k -= 1;
            idx[k] += 1;
            if idx[k] < LEVELS.len() {
                break;
            }
            idx[k] = 0;
        }
    }
}

/// Reward schedule maximising every increasing quality statistic under
/// per-rank caps, plus a lattice search confirming it beats the alternatives
/// `a_i in {0, 1/4, 1/2, 3/4, 1} * A_i`.
pub fn optimal_attention<S: Scalar>(
    caps: &AttentionCaps<S>,
    cost: &CostModel<S>,
    cfg: &DesignConfig,
) -> Result<AttentionCertificate<S>> {
    let c0 = cost.entry_cost();
    if caps.as_slice()[0] <= c0 {
        return Err(Error::Infeasible(format!("top cap {} does not exceed c(0) = {c0}", caps.as_slice()[0])));
    }
    let schedule = attention_schedule(caps, c0)?;
    let solver = SolverConfig { grid_nodes: 0, ..cfg.solver };
    let quad = QuadratureConfig { tol: cfg.quadrature.tol.max(1e-10), ..cfg.quadrature };
    let eval = |v: &[S]| -> Result<(S, S)> {
        let rv = RewardVector::validate(v.to_vec())?;
        let sol = EquilibriumSolution::solve(&rv, cost, &solver)?;
        let m = expected_qualities(&sol, &quad)?;
        Ok((m.eq_max, m.eq_avg))
    };
    let (eq_max, eq_avg) = eval(schedule.as_slice())?;
    let (lattice, truncated) = attention_lattice(caps.as_slice(), cfg.max_candidates);
    let scores: Vec<(S, S)> = lattice.par_iter().map(|v| eval(v)).collect::<Result<_>>()?;
    let tol = S::lit(cfg.compare_tol);
    let mut best_max = (S::neg_infinity(), 0usize);
    let mut best_avg = (S::neg_infinity(), 0usize);
    let (mut ties_max, mut ties_avg) = (0, 0);
    for (j, &(m, v)) in scores.iter().enumerate() {
        if m > best_max.0 {
            best_max = (m, j);
        }
        if v > best_avg.0 {
            best_avg = (v, j);
        }
        if (m - eq_max).abs() <= tol {
            ties_max += 1;
        }
        if (v - eq_avg).abs() <= tol {
            ties_avg += 1;
        }
    }
    let passes = scores.is_empty() || (best_max.0 <= eq_max + tol && best_avg.0 <= eq_avg + tol);
    Ok(AttentionCertificate {
        schedule,
        eq_max,
        eq_avg,
        candidates: lattice.len(),
        truncated,
        best_lattice_eq_max: best_max.0,
        best_lattice_eq_avg: best_avg.0,
        argmax_eq_max: lattice.get(best_max.1).cloned().unwrap_or_default(),
        argmax_eq_avg: lattice.get(best_avg.1).cloned().unwrap_or_default(),
        ties_eq_max: ties_max,
        ties_eq_avg: ties_avg,
        passes,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TaxRow<S> {
    pub tax: S,
    pub a1: Option<S>,
    pub p: Option<S>,
    pub eq_max: Option<S>,
    pub eq_avg: Option<S>,
    pub budget: Option<S>,
    /// Why this row could not be evaluated.
    pub error: Option<String>,
}

/// Metrics of `(a_1*, -t, ..., -t)` for each tax `t`, each row holding the
/// expected payout of `(prize, 0, ..., 0)`.
pub fn tax_sweep<S: Scalar>(
    n: usize,
    prize: S,
    cost: &CostModel<S>,
    taxes: &[S],
    cfg: &DesignConfig,
) -> Result<Vec<TaxRow<S>>> {
    cost.require_entry_cost()?;
    let target = wta_budget(n, prize, cost)?;
    let row = |t: S| -> Result<TaxRow<S>> {
        let a = if t == S::zero() {
            winner_take_all(n, prize)?
        } else {
            if !(t > S::zero()) {
                return Err(Error::Domain(format!("tax must be >= 0, got {t}")));
            }
            let mut v = vec![-t; n];
            v[0] = prize;
            rebalance_winner(&RewardVector::validate(v)?, cost, target, cfg)?
        };
        let sol = EquilibriumSolution::solve(&a, cost, &cfg.solver)?;
        let m = expected_qualities(&sol, &cfg.quadrature)?;
        Ok(TaxRow {
            tax: t,
            a1: Some(a.top()),
            p: Some(sol.p()),
            eq_max: Some(m.eq_max),
            eq_avg: Some(m.eq_avg),
            budget: Some(budget_for(a.as_slice(), sol.p())),
            error: None,
        })
    };
    Ok(taxes
        .par_iter()
        .map(|&t| {
            row(t).unwrap_or_else(|e| TaxRow {
                tax: t,
                a1: None,
                p: None,
                eq_max: None,
                eq_avg: None,
                budget: None,
                error: Some(e.to_string()),
            })
        })
        .collect())
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AvgSignRow<S> {
    pub budget: S,
    pub prize: Option<S>,
    pub p: Option<S>,
    pub d_eqavg: Option<S>,
    /// -1, 0 or +1.
    pub sign: Option<i8>,
    pub error: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AvgSignSweep<S> {
    pub s: usize,
    pub rows: Vec<AvgSignRow<S>>,
    /// Number of sign flips between consecutive evaluated rows.
    pub sign_changes: usize,
    /// Budget at which the first negative-to-positive flip happens,
    /// refined by bisection.
    pub crossover_budget: Option<S>,
}

fn sign_of<S: Scalar>(v: S) -> i8 {
    if v > S::zero() {
        1
    } else if v < S::zero() {
        -1
    } else {
        0
    }
}

/// Budget-matched derivative of average quality at winner-take-all, evaluated
/// at the prize that spends each `budget`.
pub fn avg_derivative_at_budget<S: Scalar>(
    n: usize,
    cost: &CostModel<S>,
    budget: S,
    s: usize,
    cfg: &DesignConfig,
) -> Result<(S, S, S)> {
    let prize = wta_prize_for_budget(n, budget, cost, cfg)?;
    let wta = winner_take_all(n, prize)?;
    let p = solve_participation(&wta, cost, &cfg.solver)?;
    let d = budget_matched_derivative(&wta, cost, s, S::lit(cfg.rel_step) * prize, cfg)?;
    Ok((prize, p, d.d_eqavg))
}

/// Sign of the budget-matched average-quality derivative at winner-take-all
/// across a budget grid, for costs with constant `c'/c`.
pub fn avg_sign_vs_budget<S: Scalar>(
    n: usize,
    cost: &CostModel<S>,
    budgets: &[S],
    s: usize,
    cfg: &DesignConfig,
) -> Result<AvgSignSweep<S>> {
    if cost.hazard_class() != HazardClass::Constant {
        return Err(Error::Cost("the budget sweep needs an exponential cost (constant c'/c)".into()));
    }
    check_lower_rank(n, s)?;
    let rows: Vec<AvgSignRow<S>> = budgets
        .par_iter()
        .map(|&b| match avg_derivative_at_budget(n, cost, b, s, cfg) {
            Ok((prize, p, d)) => AvgSignRow {
                budget: b,
                prize: Some(prize),
                p: Some(p),
                d_eqavg: Some(d),
                sign: Some(sign_of(d)),
                error: None,
            },
            Err(e) => AvgSignRow { budget: b, prize: None, p: None, d_eqavg: None, sign: None, error: Some(e.to_string()) },
        })
        .collect();
    let signed: Vec<(S, i8)> = rows.iter().filter_map(|r| r.sign.filter(|&s| s != 0).map(|s| (r.budget, s))).collect();
    let sign_changes = signed.windows(2).filter(|w| w[0].1 != w[1].1).count();
    let mut crossover_budget = None;
    if let Some(w) = signed.windows(2).find(|w| w[0].1 < 0 && w[1].1 > 0) {
        let (mut lo, mut hi) = (w[0].0, w[1].0);
        for _ in 0..60 {
            let mid = lo + (hi - lo) * S::half();
            if mid <= lo || mid >= hi || hi - lo <= S::lit(1e-10) * hi.abs() {
                break;
            }
            match avg_derivative_at_budget(n, cost, mid, s, cfg) {
                Ok((_, _, d)) if d < S::zero() => lo = mid,
                Ok(_) => hi = mid,
                Err(_) => break,
            }
        }
        crossover_budget = Some(lo + (hi - lo) * S::half());
    }
    Ok(AvgSignSweep { s, rows, sign_changes, crossover_budget })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DominanceReport<S> {
    pub n: usize,
    pub budget: S,
    pub seed: u64,
    pub hazard_class: HazardClass,
    /// Whether the cost satisfies the hypothesis under which winner-take-all
    /// is claimed optimal; otherwise the report is informational.
    pub claim_applies: bool,
    pub wta_prize: S,
    pub wta_eq_max: S,
    pub trials: usize,
    pub evaluated: usize,
    pub skipped: usize,
    /// Trials whose expected best quality beats winner-take-all by more
    /// than `compare_tol`.
    pub violations: usize,
    /// Smallest `Eq_max(WTA) - Eq_max(trial)`.
    pub worst_gap: S,
    pub worst_rewards: Vec<S>,
    /// Per-trial gap, `None` where rescaling or solving failed.
    pub trial_gaps: Vec<Option<S>>,
}

/// Random monotone nonnegative schedule: suffix sums of exponential spacings.
pub fn random_monotone_rewards<S: Scalar>(n: usize, seed: u64, index: u64) -> Vec<S> {
    let mut rng = stream_rng(seed, index, 0xd0_u64);
    let spacings: Vec<f64> = (0..n).map(|_| -(1.0 - rng.random::<f64>()).ln()).collect();
    let mut a = vec![S::zero(); n];
    let mut acc = 0.0;
    for i in (0..n).rev() {
        acc += spacings[i];
        a[i] = S::lit(acc);
    }
    a
}

/// Samples monotone nonnegative schedules, rescales each to expected payout
/// `budget`, and compares their expected best quality with winner-take-all.
pub fn wta_dominance_trial<S: Scalar>(
    n: usize,
    budget: S,
    cost: &CostModel<S>,
    trials: usize,
    seed: u64,
    cfg: &DesignConfig,
) -> Result<DominanceReport<S>> {
    let hazard = cost.hazard_class();
    let claim_applies = hazard.satisfies_ratio_condition() && cost.has_entry_cost();
    let solver = SolverConfig { grid_nodes: 0, ..cfg.solver };
    let quad = QuadratureConfig { tol: cfg.quadrature.tol.max(1e-11), ..cfg.quadrature };
    let eq_max_of = |a: &RewardVector<S>| -> Result<S> {
        let sol = EquilibriumSolution::solve(a, cost, &solver)?;
        Ok(expected_qualities(&sol, &quad)?.eq_max)
    };
    let wta_prize = wta_prize_for_budget(n, budget, cost, cfg)?;
    let wta_eq_max = eq_max_of(&winner_take_all(n, wta_prize)?)?;
    let tol = S::lit(cfg.compare_tol);

    let results: Vec<Option<(S, Vec<S>)>> = (0..trials)
        .into_par_iter()
        .map(|t| {
            let raw = RewardVector::validate(random_monotone_rewards::<S>(n, seed, t as u64)).ok()?;
            let f = |m: S| budget_raw(raw.scaled(m).as_slice(), cost, &solver);
            let m0 = budget / raw.total() * S::lit(1.5);
            let out = secant_increasing(f, budget, m0, m0 * S::lit(1.05), S::zero(), S::lit(cfg.budget_tol) * S::one().max(budget), cfg.max_iter).ok()?;
            let scaled = raw.scaled(out.root);
            let e = eq_max_of(&scaled).ok()?;
            Some((wta_eq_max - e, scaled.into_vec()))
        })
        .collect();

    let mut evaluated = 0;
    let mut violations = 0;
    let mut worst_gap = S::infinity();
    let mut worst_rewards = Vec::new();
    for (gap, a) in results.iter().flatten() {
        evaluated += 1;
        if *gap < -tol {
            violations += 1;
        }
        if *gap < worst_gap {
            worst_gap = *gap;
            worst_rewards = a.clone();
        }
    }
    Ok(DominanceReport {
        n,
        budget,
        seed,
        hazard_class: hazard,
        claim_applies,
        wta_prize,
        wta_eq_max,
        trials,
        evaluated,
        skipped: trials - evaluated,
        violations,
        worst_gap,
        worst_rewards,
        trial_gaps: results.iter().map(|r| r.as_ref().map(|(g, _)| *g)).collect(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn lin() -> CostModel<f64> {
        CostModel::linear(0.25, 1.0).unwrap()
    }
    fn rv(a: &[f64]) -> RewardVector<f64> {
        RewardVector::validate(a.to_vec()).unwrap()
    }
    fn cfg() -> DesignConfig {
        DesignConfig::default()
    }

    #[test]
    fn hold_budget_identity_is_exact() {
        let a = rv(&[1.0, 0.3, 0.0]);
        assert_eq!(hold_budget(&a, &lin(), 2, 0.3, &cfg()).unwrap(), a);
    }

    #[test]
    fn hold_budget_moves_top_down() {
        let a = rv(&[1.0, 0.0, 0.0]);
        let b0 = budget_of(&a, &lin(), &SolverConfig::precise()).unwrap();
        let moved = hold_budget(&a, &lin(), 2, 0.02, &cfg()).unwrap();
        assert!(moved.top() < 1.0);
        assert_eq!(moved.reward(2), 0.02);
        let b1 = budget_of(&moved, &lin(), &SolverConfig::precise()).unwrap();
        assert!((b1 - b0).abs() <= 1e-8);
    }

    #[test]
    fn hold_budget_rejects_broken_monotonicity() {
        let a = rv(&[1.0, 0.3, 0.1]);
        assert!(matches!(hold_budget(&a, &lin(), 3, 0.5, &cfg()), Err(Error::Infeasible(_))));
        // raising a_2 past what a_1 can absorb
        assert!(matches!(hold_budget(&a, &lin(), 2, 0.99, &cfg()), Err(Error::Infeasible(_))));
        assert!(matches!(hold_budget(&a, &lin(), 1, 0.5, &cfg()), Err(Error::Domain(_))));
    }

    #[test]
    fn participation_sensitivity_is_positive_inside() {
        let a = rv(&[1.0, 0.4, 0.1]);
        for s in 1..=3 {
            let d = participation_sensitivity(&a, &lin(), s, &SolverConfig::precise()).unwrap();
            assert!(d > 0.0);
        }
        assert_eq!(participation_sensitivity(&rv(&[1.0, 0.5]), &lin(), 2, &SolverConfig::precise()).unwrap(), 0.0);
    }

    #[test]
    fn sensitivity_signs_examples() {
        let a = rv(&[1.0, 0.6, 0.1]);
        for i in 1..=3 {
            let r = reward_sensitivity(&a, &lin(), i, 1e-4, &cfg()).unwrap();
            assert_eq!(r.sign, SignSummary::Positive, "rank {i}");
            assert!((r.dp_da - r.dp_da_implicit).abs() < 1e-6);
        }
        let full = rv(&[1.0, 0.6, 0.4]);
        let r = reward_sensitivity(&full, &lin(), 3, 1e-4, &cfg()).unwrap();
        assert_eq!(r.sign, SignSummary::Negative);
        let edge = rv(&[1.0, 0.6, 0.25]);
        assert_eq!(reward_sensitivity(&edge, &lin(), 3, 1e-4, &cfg()).unwrap().sign, SignSummary::Boundary);
    }

    #[test]
    fn sensitivity_matches_implicit_derivative() {
        // U(x) = c(q) + shift gives dx/da_i = (B_i(x) - [i = n, full]) / |U'(x)|
        for (a, full) in [(rv(&[1.0, 0.6, 0.1]), false), (rv(&[1.0, 0.6, 0.4]), true)] {
            let sol = EquilibriumSolution::solve(&a, &lin(), &SolverConfig::precise()).unwrap();
            for i in 1..=3 {
                let r = reward_sensitivity(&a, &lin(), i, 1e-4, &cfg()).unwrap();
                for (&q, &d) in r.q.iter().zip(&r.derivative) {
                    let x = sol.pressure_unchecked(q);
                    let jump = if full && i == 3 { 1.0 } else { 0.0 };
                    let exact = (bernstein_term(2, i - 1, x) - jump) / sol.benefit_slope_of(x).abs();
                    assert!((d - exact).abs() < 1e-6 * exact.abs().max(1.0), "i={i} q={q}: {d} vs {exact}");
                }
            }
        }
    }

    #[test]
    fn sensitivity_rejects_non_monotone_step() {
        let a = rv(&[1.0, 0.0, 0.0]);
        assert!(matches!(reward_sensitivity(&a, &lin(), 2, 1e-4, &cfg()), Err(Error::Mechanism(_))));
    }

    #[test]
    fn budget_matched_derivative_at_wta() {
        let a = rv(&[1.0, 0.0, 0.0, 0.0]);
        for s in 2..=4 {
            let r = budget_matched_derivative(&a, &lin(), s, 1e-4, &cfg()).unwrap();
            assert!(r.d_eqmax <= 1e-8, "s={s} {}", r.d_eqmax);
            assert!(r.d_eqavg <= 1e-8, "s={s} {}", r.d_eqavg);
            assert!(r.budget_mismatch <= 1e-8);
            assert!(r.da1_per_das_at_b <= r.bound + 1e-6);
        }
    }

    #[test]
    fn full_regime_top_moves_one_for_one() {
        let a = rv(&[1.0, 0.6, 0.4]);
        let r = budget_matched_derivative(&a, &lin(), 2, 1e-4, &cfg()).unwrap();
        assert!((r.da1_per_das_at_b + 1.0).abs() < 1e-8);
        assert!((r.bound + 1.0).abs() < 1e-15);
    }

    #[test]
    fn attention_certificate_small() {
        let caps = AttentionCaps::new(vec![1.0, 0.5, 0.2]).unwrap();
        let cert = optimal_attention(&caps, &CostModel::linear(0.3, 1.0).unwrap(), &cfg()).unwrap();
        assert_eq!(cert.schedule.as_slice(), &[1.0, 0.5, 0.2]);
        assert!(cert.passes);
        assert!(!cert.truncated);
    }

    #[test]
    fn attention_all_equal_caps() {
        let caps = AttentionCaps::new(vec![1.0, 1.0, 1.0]).unwrap();
        let cert = optimal_attention(&caps, &CostModel::linear(0.5, 1.0).unwrap(), &cfg()).unwrap();
        assert_eq!(cert.schedule.as_slice(), &[1.0, 1.0, 0.5]);
        assert!(cert.passes);
    }

    #[test]
    fn lattice_respects_cap() {
        let caps = [1.0f64, 0.9, 0.8, 0.7, 0.6, 0.5];
        let (v, truncated) = attention_lattice(&caps, 100);
        assert_eq!(v.len(), 100);
        assert!(truncated);
        let (all, t) = attention_lattice(&caps[..3], 4000);
        assert!(!t);
        assert!(all.iter().all(|a| a.windows(2).all(|w| w[0] >= w[1])));
    }

    #[test]
    fn tax_sweep_examples() {
        let rows = tax_sweep(3, 1.0, &lin(), &[0.0, 0.01, 0.02], &cfg()).unwrap();
        let b0 = rows[0].budget.unwrap();
        for r in &rows {
            assert!((r.budget.unwrap() - b0).abs() <= 1e-8);
        }
        assert!(rows[1].eq_max.unwrap() > rows[0].eq_max.unwrap());
        assert!(rows[1].p.unwrap() < rows[0].p.unwrap() && rows[2].p.unwrap() < rows[1].p.unwrap());
        let wta = EquilibriumSolution::solve(&rv(&[1.0, 0.0, 0.0]), &lin(), &SolverConfig::precise()).unwrap();
        assert_eq!(rows[0].p.unwrap(), wta.p());
    }

    #[test]
    fn random_rewards_are_monotone_and_reproducible() {
        let a: Vec<f64> = random_monotone_rewards(5, 11, 3);
        assert_eq!(a, random_monotone_rewards::<f64>(5, 11, 3));
        assert!(a.windows(2).all(|w| w[0] >= w[1]));
        assert!(a[4] >= 0.0);
    }

    #[test]
    fn wta_prize_inverts_budget() {
        let prize = wta_prize_for_budget(3, 0.8, &lin(), &cfg()).unwrap();
        assert!((wta_budget(3, prize, &lin()).unwrap() - 0.8).abs() < 1e-10);
    }
}
