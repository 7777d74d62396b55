//! Agent-level simulation of the contest under a solved `(p, G)`.
//!
//! Each `(seed, trial, agent)` triple owns its own random stream, and trials
//! are reduced in fixed-size chunks in index order, so reports do not depend
//! on the thread count.

use rand::{Rng, RngExt};
use rayon::prelude::*;
use serde::Serialize;
use statrs::distribution::{ChiSquared, ContinuousCDF};

use crate::equilibrium::{EquilibriumSolution, Regime};
use crate::error::{Error, Result};
use crate::metrics::binomial_tails;
use crate::scalar::Scalar;
use crate::streams::stream_rng;

const CHUNK: usize = 1024;
const AGENT_LANE: u64 = 1 << 32;

/// Asymptotic Kolmogorov quantile at level 0.999.
pub const KS_999: f64 = 1.9495;

/// Inverse-CDF draw `q(u) = c^{-1}(U(p (1 - u)) - shift)`.
pub fn sample_quality<S: Scalar>(sol: &EquilibriumSolution<S>, u: S) -> Result<S> {
    sol.quantile(u)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Round<S> {
    /// Agent indices of entrants, best first.
    pub ranking: Vec<usize>,
    /// Qualities matching `ranking`.
    pub qualities: Vec<S>,
    /// Rank payment per agent; 0 for non-entrants.
    pub payments: Vec<S>,
}

impl<S: Scalar> Round<S> {
    pub fn entrants(&self) -> usize {
        self.ranking.len()
    }

    pub fn payout(&self) -> S {
        self.payments.iter().copied().sum()
    }

    /// Best quality, 0 without entrants.
    pub fn max_quality(&self) -> S {
        self.qualities.first().copied().unwrap_or_else(S::zero)
    }
}

#[derive(Debug, Clone, Copy)]
struct Draw<S> {
    agent: usize,
    quality: S,
    tie: u64,
}

fn draw_agent<S: Scalar, R: Rng>(sol: &EquilibriumSolution<S>, agent: usize, rng: &mut R) -> Option<Draw<S>> {
    let enter: f64 = rng.random();
    let u: f64 = rng.random();
    let tie: u64 = rng.random();
    if enter >= sol.p().to_f64_lossy() {
        return None;
    }
    Some(Draw { agent, quality: sol.quantile_unchecked(S::lit(u)), tie })
}

fn rank_draws<S: Scalar>(draws: &mut [Draw<S>]) {
    // quality descending; exact ties go to the larger tie key
    draws.sort_by(|x, y| y.quality.partial_cmp(&x.quality).unwrap().then(y.tie.cmp(&x.tie)));
}

/// One play of the contest; agent `i` draws from `streams[i]`.
pub fn play_round<S: Scalar, R: Rng>(sol: &EquilibriumSolution<S>, streams: &mut [R]) -> Round<S> {
    let n = sol.n();
    assert_eq!(streams.len(), n, "one stream per agent");
    let mut draws: Vec<Draw<S>> = streams.iter_mut().enumerate().filter_map(|(i, r)| draw_agent(sol, i, r)).collect();
    rank_draws(&mut draws);
    let a = sol.rewards().as_slice();
    let mut payments = vec![S::zero(); n];
    for (rank, d) in draws.iter().enumerate() {
        payments[d.agent] = a[rank];
    }
    Round {
        ranking: draws.iter().map(|d| d.agent).collect(),
        qualities: draws.iter().map(|d| d.quality).collect(),
        payments,
    }
}

fn agent_streams(seed: u64, trial: usize, n: usize) -> Vec<rand_chacha::ChaCha8Rng> {
    (0..n).map(|i| stream_rng(seed, trial as u64, AGENT_LANE + i as u64)).collect()
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize)]
pub struct Estimate {
    pub mean: f64,
    pub stderr: f64,
}

#[derive(Debug, Clone, Copy, Default)]
struct Moments {
    n: u64,
    sum: f64,
    sum_sq: f64,
}

impl Moments {
    fn push(&mut self, v: f64) {
        self.n += 1;
        self.sum += v;
        self.sum_sq += v * v;
    }

    fn merge(&mut self, o: &Moments) {
        self.n += o.n;
        self.sum += o.sum;
        self.sum_sq += o.sum_sq;
    }

    fn estimate(&self) -> Estimate {
        if self.n == 0 {
            return Estimate::default();
        }
        let m = self.n as f64;
        let mean = self.sum / m;
        let var = if self.n > 1 { ((self.sum_sq - m * mean * mean) / (m - 1.0)).max(0.0) } else { 0.0 };
        Estimate { mean, stderr: (var / m).sqrt() }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CurvePoint {
    pub q: f64,
    pub mean_payoff: f64,
    pub stderr: f64,
    pub n_trials: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GoodnessOfFit {
    pub statistic: f64,
    pub dof: usize,
    pub p_value: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct KsTest {
    pub samples: usize,
    pub statistic: f64,
    pub critical_999: f64,
    pub passes: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SimulationReport {
    pub trials: usize,
    pub seed: u64,
    pub n: usize,
    pub p: f64,
    pub empirical_eq_max: Estimate,
    pub empirical_eq_avg: Estimate,
    pub empirical_payout: Estimate,
    /// Deviation payoffs on an 11-point support grid from the same trials.
    pub payoff_curve: Vec<CurvePoint>,
    /// Index `j` counts trials with exactly `j` entrants.
    pub entrant_histogram: Vec<u64>,
    pub entrant_fit: GoodnessOfFit,
    pub quality_ks: KsTest,
}

struct Chunk {
    max_q: Moments,
    avg_q: Moments,
    payout: Moments,
    hist: Vec<u64>,
    qualities: Vec<f64>,
    curve: Vec<Moments>,
}

/// Payoff of an extra agent entering at `q` against the sorted opponent draws.
fn deviation_payoff<S: Scalar>(sol: &EquilibriumSolution<S>, q: S, tie: u64, rivals: &[Draw<S>]) -> f64 {
    let above = rivals.iter().filter(|d| d.quality > q || (d.quality == q && d.tie > tie)).count();
    (sol.rewards().as_slice()[above] - sol.cost().value(q)).to_f64_lossy()
}

fn check_grid<S: Scalar>(q_grid: &[S]) -> Result<()> {
    match q_grid.iter().find(|q| !(**q >= S::zero()) || !q.is_finite()) {
        Some(q) => Err(Error::Domain(format!("deviation quality must be finite and >= 0, got {q}"))),
        None => Ok(()),
    }
}

fn simulate_chunk<S: Scalar>(sol: &EquilibriumSolution<S>, seed: u64, range: std::ops::Range<usize>, grid: &[S]) -> Chunk {
    let n = sol.n();
    let nf = n as f64;
    let mut c = Chunk {
        max_q: Moments::default(),
        avg_q: Moments::default(),
        payout: Moments::default(),
        hist: vec![0; n + 1],
        qualities: Vec::new(),
        curve: vec![Moments::default(); grid.len()],
    };
    for t in range {
        let mut streams = agent_streams(seed, t, n);
        let round = play_round(sol, &mut streams);
        c.max_q.push(round.max_quality().to_f64_lossy());
        let qs: Vec<f64> = round.qualities.iter().map(|q| q.to_f64_lossy()).collect();
        c.avg_q.push(qs.iter().sum::<f64>() / nf);
        c.payout.push(round.payout().to_f64_lossy());
        c.hist[round.entrants()] += 1;
        c.qualities.extend(qs);
        if !grid.is_empty() {
            // agent 0 deviates; agents 1..n keep their draws
            let mut fresh = agent_streams(seed, t, n);
            let tie: u64 = fresh[0].random();
            let rivals: Vec<Draw<S>> =
                fresh[1..].iter_mut().enumerate().filter_map(|(i, r)| draw_agent(sol, i + 1, r)).collect();
            for (m, &q) in c.curve.iter_mut().zip(grid) {
                m.push(deviation_payoff(sol, q, tie, &rivals));
            }
        }
    }
    c
}

fn chunks(trials: usize) -> Vec<std::ops::Range<usize>> {
    (0..trials.div_ceil(CHUNK)).map(|k| k * CHUNK..((k + 1) * CHUNK).min(trials)).collect()
}

/// Chi-square goodness of fit of entrant counts to `Binomial(n, p)`; tail
/// bins with expected count below 5 are merged into their neighbours.
pub fn entrant_goodness_of_fit(hist: &[u64], n: usize, p: f64) -> GoodnessOfFit {
    let trials: u64 = hist.iter().sum();
    let tails = binomial_tails(n, p);
    let pmf: Vec<f64> = (0..=n)
        .map(|j| {
            let at_least = |k: usize| if k == 0 { 1.0 } else if k > n { 0.0 } else { tails[k - 1] };
            (at_least(j) - at_least(j + 1)).max(0.0)
        })
        .collect();
    let mut bins: Vec<(f64, f64)> = Vec::new();
    let mut pending = (0.0, 0.0);
    for j in 0..=n {
        pending.0 += pmf[j] * trials as f64;
        pending.1 += hist[j] as f64;
        if pending.0 >= 5.0 {
            bins.push(pending);
            pending = (0.0, 0.0);
        }
    }
    match bins.last_mut() {
        Some(last) => {
            last.0 += pending.0;
            last.1 += pending.1;
        }
        None => bins.push(pending),
    }
    if bins.len() < 2 {
        let exact = bins.iter().all(|(e, o)| (e - o).abs() < 0.5);
        return GoodnessOfFit { statistic: 0.0, dof: 0, p_value: if exact { 1.0 } else { 0.0 } };
    }
    let statistic: f64 = bins.iter().map(|(e, o)| (o - e) * (o - e) / e).sum();
    let dof = bins.len() - 1;
    let p_value = ChiSquared::new(dof as f64).map(|d| d.sf(statistic)).unwrap_or(f64::NAN);
    GoodnessOfFit { statistic, dof, p_value }
}

/// One-sample Kolmogorov-Smirnov distance of `samples` to `cdf`.
pub fn ks_statistic(samples: &mut [f64], cdf: impl Fn(f64) -> f64 + Sync) -> f64 {
    samples.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let m = samples.len() as f64;
    samples
        .par_iter()
        .enumerate()
        .map(|(i, &x)| {
            let f = cdf(x);
            ((i + 1) as f64 / m - f).max(f - i as f64 / m)
        })
        .reduce(|| 0.0, f64::max)
}

fn support_grid<S: Scalar>(sol: &EquilibriumSolution<S>, points: usize) -> Vec<S> {
    (0..points).map(|j| sol.qbar() * S::from_count(j) / S::from_count(points - 1)).collect()
}

/// Plays `trials` independent rounds and compares them with the analytic
/// equilibrium.
pub fn run<S: Scalar>(sol: &EquilibriumSolution<S>, trials: usize, seed: u64) -> Result<SimulationReport> {
    if trials == 0 {
        return Err(Error::Domain("trials must be >= 1".into()));
    }
    let n = sol.n();
    let grid = if sol.regime() == Regime::NoEntry { Vec::new() } else { support_grid(sol, 11) };
    let parts: Vec<Chunk> = chunks(trials).into_par_iter().map(|r| simulate_chunk(sol, seed, r, &grid)).collect();

    let mut max_q = Moments::default();
    let mut avg_q = Moments::default();
    let mut payout = Moments::default();
    let mut hist = vec![0u64; n + 1];
    let mut curve = vec![Moments::default(); grid.len()];
    let mut qualities = Vec::new();
    for c in parts {
        max_q.merge(&c.max_q);
        avg_q.merge(&c.avg_q);
        payout.merge(&c.payout);
        hist.iter_mut().zip(&c.hist).for_each(|(h, x)| *h += x);
        curve.iter_mut().zip(&c.curve).for_each(|(m, x)| m.merge(x));
        qualities.extend(c.qualities);
    }

    let p = sol.p().to_f64_lossy();
    let samples = qualities.len();
    let statistic = if samples == 0 {
        0.0
    } else {
        ks_statistic(&mut qualities, |q| sol.cdf(S::lit(q).min(sol.qbar())).map(|g| g.to_f64_lossy()).unwrap_or(1.0))
    };
    let critical = if samples == 0 { f64::INFINITY } else { KS_999 / (samples as f64).sqrt() };
    Ok(SimulationReport {
        trials,
        seed,
        n,
        p,
        empirical_eq_max: max_q.estimate(),
        empirical_eq_avg: avg_q.estimate(),
        empirical_payout: payout.estimate(),
        payoff_curve: curve_points(&grid, &curve),
        entrant_fit: entrant_goodness_of_fit(&hist, n, p),
        entrant_histogram: hist,
        quality_ks: KsTest { samples, statistic, critical_999: critical, passes: statistic <= critical },
    })
}

fn curve_points<S: Scalar>(grid: &[S], m: &[Moments]) -> Vec<CurvePoint> {
    grid.iter()
        .zip(m)
        .map(|(q, m)| {
            let e = m.estimate();
            CurvePoint { q: q.to_f64_lossy(), mean_payoff: e.mean, stderr: e.stderr, n_trials: m.n }
        })
        .collect()
}

/// Mean payoff of one extra agent who always enters at each grid quality
/// while the other `n - 1` agents play `(p, G)`. Opponent draws are shared
/// across grid points.
pub fn deviation_check<S: Scalar>(
    sol: &EquilibriumSolution<S>,
    q_grid: &[S],
    trials: usize,
    seed: u64,
) -> Result<Vec<CurvePoint>> {
    if trials == 0 {
        return Err(Error::Domain("trials must be >= 1".into()));
    }
    check_grid(q_grid)?;
    let n = sol.n();
    let parts: Vec<Vec<Moments>> = chunks(trials)
        .into_par_iter()
        .map(|range| {
            let mut acc = vec![Moments::default(); q_grid.len()];
            for t in range {
                let mut streams = agent_streams(seed, t, n);
                let tie: u64 = streams[0].random();
                let rivals: Vec<Draw<S>> =
                    streams[1..].iter_mut().enumerate().filter_map(|(i, r)| draw_agent(sol, i + 1, r)).collect();
                for (m, &q) in acc.iter_mut().zip(q_grid) {
                    m.push(deviation_payoff(sol, q, tie, &rivals));
                }
            }
            acc
        })
        .collect();
    let mut total = vec![Moments::default(); q_grid.len()];
    for part in &parts {
        total.iter_mut().zip(part).for_each(|(t, x)| t.merge(x));
    }
    Ok(curve_points(q_grid, &total))
}
