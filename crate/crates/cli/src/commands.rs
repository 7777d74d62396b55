use std::path::Path;

use contest_entry::design::{self, SignSummary};
use contest_entry::equilibrium::Regime;
use contest_entry::metrics::expected_qualities;
use contest_entry::montecarlo;
use contest_entry::verify::{self, Suite};
use contest_entry::{ContestMetrics, EquilibriumF64};
use serde::Serialize;
use serde_json::{json, Value};

use crate::cli::{Command, Common, PerturbKind, SuiteArg};
use crate::fail::Failure;
use crate::instance::{self, InstanceSpec};
use crate::RunRecord;

pub struct Outcome {
    pub record: RunRecord,
    /// Set when the record is still printed but the exit status is nonzero.
    pub failure: Option<Failure>,
}

impl Command {
    pub fn threads(&self) -> Option<usize> {
        match self {
            Command::Verify { threads, .. } => *threads,
            Command::Solve { common, .. }
            | Command::Metrics { common }
            | Command::Simulate { common, .. }
            | Command::Deviate { common, .. }
            | Command::DesignAttention { common }
            | Command::Perturb { common, .. }
            | Command::TaxSweep { common, .. }
            | Command::AvgSignSweep { common, .. }
            | Command::WtaTrial { common, .. } => common.threads,
        }
    }
}

fn to_value<T: Serialize>(v: &T) -> Result<Value, Failure> {
    serde_json::to_value(v).map_err(|e| Failure::usage(format!("cannot serialise output: {e}")))
}

fn write_csv<R: Serialize>(path: Option<&Path>, rows: &[R]) -> Result<(), Failure> {
    let Some(path) = path else { return Ok(()) };
    let io = |e: csv::Error| Failure::usage(format!("cannot write {}: {e}", path.display()));
    let mut w = csv::Writer::from_path(path).map_err(io)?;
    for r in rows {
        w.serialize(r).map_err(io)?;
    }
    w.flush().map_err(|e| Failure::usage(format!("cannot write {}: {e}", path.display())))
}

fn record(command: &'static str, instance: InstanceSpec, parameters: Value, outputs: Value) -> Outcome {
    Outcome {
        record: RunRecord {
            tool: "contest-entry",
            version: env!("CARGO_PKG_VERSION"),
            command,
            instance: instance.canonical(),
            parameters,
            outputs,
            wall_time_seconds: 0.0,
        },
        failure: None,
    }
}

fn solved(spec: &InstanceSpec) -> Result<EquilibriumF64, Failure> {
    let cost = spec.cost_model()?;
    let rewards = spec.rewards(&cost)?;
    Ok(EquilibriumF64::solve(&rewards, &cost, &spec.solver)?)
}

#[derive(Serialize)]
struct TableRow {
    q: f64,
    #[serde(rename = "G")]
    g: f64,
    x: f64,
    payoff_residual: f64,
}

#[derive(Serialize)]
struct RankRow {
    rank: usize,
    #[serde(rename = "W")]
    w: f64,
}

#[derive(Serialize)]
struct ScheduleRow {
    rank: usize,
    cap: f64,
    reward: f64,
}

#[derive(Serialize)]
struct CurveRow {
    q: f64,
    derivative: f64,
}

#[derive(Serialize)]
struct GapRow {
    trial: usize,
    gap: Option<f64>,
}

fn solve_cmd(common: &Common, points: usize) -> Result<Outcome, Failure> {
    let spec = instance::load(common)?;
    let sol = solved(&spec)?;
    let mut outputs = json!({
        "regime": sol.regime(),
        "p": sol.p(),
        "qbar": sol.qbar(),
        "shift": sol.shift(),
        "rewards": sol.rewards(),
    });
    if sol.regime() != Regime::NoEntry {
        let rows: Vec<TableRow> = sol
            .table(points)?
            .into_iter()
            .map(|[q, g, x, r]| TableRow { q, g, x, payoff_residual: r })
            .collect();
        outputs["max_residual"] = json!(sol.max_residual(100)?);
        outputs["table"] = to_value(&rows)?;
        write_csv(common.csv.as_deref(), &rows)?;
    }
    Ok(record("solve", spec, json!({ "points": points }), outputs))
}

fn metrics_cmd(common: &Common) -> Result<Outcome, Failure> {
    let spec = instance::load(common)?;
    let sol = solved(&spec)?;
    let m = ContestMetrics::compute(&sol, &spec.quadrature)?;
    let rows: Vec<RankRow> = m.rank_prob.iter().enumerate().map(|(k, &w)| RankRow { rank: k + 1, w }).collect();
    write_csv(common.csv.as_deref(), &rows)?;
    let mut outputs = to_value(&m)?;
    outputs["regime"] = json!(sol.regime());
    outputs["p"] = json!(sol.p());
    outputs["qbar"] = json!(sol.qbar());
    Ok(record("metrics", spec, json!({}), outputs))
}

fn simulate_cmd(common: &Common, trials: usize) -> Result<Outcome, Failure> {
    let spec = instance::load(common)?;
    let sol = solved(&spec)?;
    let report = montecarlo::run(&sol, trials, spec.seed)?;
    let q = expected_qualities(&sol, &spec.quadrature)?;
    let budget = contest_entry::metrics::expected_budget(&sol);
    let z = |e: &montecarlo::Estimate, v: f64| if e.stderr > 0.0 { (e.mean - v) / e.stderr } else { 0.0 };
    write_csv(common.csv.as_deref(), &report.payoff_curve)?;
    let outputs = json!({
        "analytic": { "eq_max": q.eq_max, "eq_avg": q.eq_avg, "budget": budget, "shift": sol.shift() },
        "z_scores": {
            "eq_max": z(&report.empirical_eq_max, q.eq_max),
            "eq_avg": z(&report.empirical_eq_avg, q.eq_avg),
            "payout": z(&report.empirical_payout, budget),
        },
        "report": to_value(&report)?,
    });
    Ok(record("simulate", spec, json!({ "trials": trials }), outputs))
}

fn deviate_cmd(common: &Common, trials: usize, points: usize, margin: f64) -> Result<Outcome, Failure> {
    let spec = instance::load(common)?;
    if points < 2 || !(margin >= 0.0) {
        return Err(Failure::usage("deviate needs --points >= 2 and --margin >= 0"));
    }
    let sol = solved(&spec)?;
    let top = sol.qbar() + margin;
    let grid: Vec<f64> = (0..points).map(|j| top * j as f64 / (points - 1) as f64).collect();
    let curve = montecarlo::deviation_check(&sol, &grid, trials, spec.seed)?;
    write_csv(common.csv.as_deref(), &curve)?;
    let outputs = json!({ "qbar": sol.qbar(), "shift": sol.shift(), "payoff_curve": to_value(&curve)? });
    Ok(record("deviate", spec, json!({ "trials": trials, "points": points, "margin": margin }), outputs))
}

fn attention_cmd(common: &Common) -> Result<Outcome, Failure> {
    let spec = instance::load(common)?;
    let cost = spec.cost_model()?;
    let caps = spec.caps()?;
    let cert = design::optimal_attention(&caps, &cost, &spec.design)?;
    let rows: Vec<ScheduleRow> = caps
        .as_slice()
        .iter()
        .zip(cert.schedule.as_slice())
        .enumerate()
        .map(|(i, (&cap, &reward))| ScheduleRow { rank: i + 1, cap, reward })
        .collect();
    write_csv(common.csv.as_deref(), &rows)?;
    let mut outcome = record("design-attention", spec, json!({ "levels": [0.0, 0.25, 0.5, 0.75, 1.0] }), to_value(&cert)?);
    if !cert.passes {
        outcome.failure = Some(Failure::verification("a lattice schedule beats the attention schedule"));
    }
    Ok(outcome)
}

fn perturb_cmd(common: &Common, rank: usize, kind: PerturbKind) -> Result<Outcome, Failure> {
    let spec = instance::load(common)?;
    let cost = spec.cost_model()?;
    let rewards = spec.rewards(&cost)?;
    let delta = spec.design.rel_step * rewards.top();
    let params = json!({ "rank": rank, "delta": delta, "kind": format!("{kind:?}") });
    let outputs = match kind {
        PerturbKind::BudgetMatched => {
            let r = design::budget_matched_derivative(&rewards, &cost, rank, delta, &spec.design)?;
            to_value(&r)?
        }
        PerturbKind::Sensitivity => {
            let r = design::reward_sensitivity(&rewards, &cost, rank, delta, &spec.design)?;
            let rows: Vec<CurveRow> =
                r.q.iter().zip(&r.derivative).map(|(&q, &d)| CurveRow { q, derivative: d }).collect();
            write_csv(common.csv.as_deref(), &rows)?;
            let mut v = to_value(&r)?;
            v["boundary"] = json!(r.sign == SignSummary::Boundary);
            v
        }
    };
    Ok(record("perturb", spec, params, outputs))
}

fn tax_cmd(common: &Common, taxes: &[f64]) -> Result<Outcome, Failure> {
    let mut spec = instance::load(common)?;
    let cost = spec.cost_model()?;
    let prize = spec.wta.ok_or_else(|| Failure::usage("tax-sweep needs --wta"))?;
    // the sweep owns the tax; a single --tax would be ambiguous
    if spec.tax.take().is_some() {
        return Err(Failure::usage("tax-sweep takes --taxes, not --tax"));
    }
    let rows = design::tax_sweep(spec.require_n()?, prize, &cost, taxes, &spec.design)?;
    write_csv(common.csv.as_deref(), &rows)?;
    Ok(record("tax-sweep", spec, json!({ "taxes": taxes }), json!({ "rows": to_value(&rows)? })))
}

fn avg_sign_cmd(common: &Common, budgets: &[f64], rank: usize) -> Result<Outcome, Failure> {
    let spec = instance::load(common)?;
    let cost = spec.cost_model()?;
    let sweep = design::avg_sign_vs_budget(spec.require_n()?, &cost, budgets, rank, &spec.design)?;
    write_csv(common.csv.as_deref(), &sweep.rows)?;
    Ok(record("avg-sign-sweep", spec, json!({ "budgets": budgets, "rank": rank }), to_value(&sweep)?))
}

fn wta_trial_cmd(common: &Common, budget: f64, trials: usize) -> Result<Outcome, Failure> {
    let spec = instance::load(common)?;
    let cost = spec.cost_model()?;
    let report = design::wta_dominance_trial(spec.require_n()?, budget, &cost, trials, spec.seed, &spec.design)?;
    let rows: Vec<GapRow> = report.trial_gaps.iter().enumerate().map(|(trial, &gap)| GapRow { trial, gap }).collect();
    write_csv(common.csv.as_deref(), &rows)?;
    Ok(record("wta-trial", spec, json!({ "budget": budget, "trials": trials }), to_value(&report)?))
}

fn verify_cmd(suite: SuiteArg) -> Result<Outcome, Failure> {
    let suite = match suite {
        SuiteArg::Identities => Suite::Identities,
        SuiteArg::Golden => Suite::Golden,
        SuiteArg::All => Suite::All,
    };
    let checks = verify::run(suite)?;
    let failed: Vec<&str> = checks.iter().filter(|c| !c.passed).map(|c| c.name.as_str()).collect();
    let failure = (!failed.is_empty()).then(|| Failure::verification(format!("failed checks: {}", failed.join("; "))));
    let mut outcome = record(
        "verify",
        InstanceSpec::default(),
        json!({ "suite": suite }),
        json!({ "passed": failed.is_empty(), "checks": to_value(&checks)? }),
    );
    outcome.failure = failure;
    Ok(outcome)
}

pub fn dispatch(command: Command) -> Result<Outcome, Failure> {
    match &command {
        Command::Solve { common, points } => solve_cmd(common, *points),
        Command::Metrics { common } => metrics_cmd(common),
        Command::Simulate { common, trials } => simulate_cmd(common, *trials),
        Command::Deviate { common, trials, points, margin } => deviate_cmd(common, *trials, *points, *margin),
        Command::DesignAttention { common } => attention_cmd(common),
        Command::Perturb { common, rank, kind } => perturb_cmd(common, *rank, *kind),
        Command::TaxSweep { common, taxes } => tax_cmd(common, taxes),
        Command::AvgSignSweep { common, budgets, rank } => avg_sign_cmd(common, budgets, *rank),
        Command::WtaTrial { common, budget, trials } => wta_trial_cmd(common, *budget, *trials),
        Command::Verify { suite, .. } => verify_cmd(*suite),
    }
}
