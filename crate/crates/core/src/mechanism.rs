//! Rank-order reward schedules.
//!
//! A schedule `(a_1, ..., a_n)` pays `a_i` to the entrant with the `i`-th
//! highest quality. The solvers accept monotone schedules: nonincreasing with
//! at least one strict step. Negative entries are allowed and model entry
//! taxes.

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::cost::CostModel;
use crate::design;
use crate::error::{MechanismViolation, Result};
use crate::scalar::Scalar;

/// Largest supported number of ranks.
pub const MAX_RANKS: usize = 1000;

#[derive(Debug, Clone, PartialEq)]
pub struct RewardVector<S> {
    a: Vec<S>,
    monotone: bool,
}

impl<S: Scalar> RewardVector<S> {
    /// Checks the monotone-mechanism conditions and wraps the schedule.
    pub fn validate(a: Vec<S>) -> std::result::Result<Self, MechanismViolation> {
        if a.len() < 2 || a.len() > MAX_RANKS {
            return Err(MechanismViolation::Size(a.len()));
        }
        if let Some(rank) = a.iter().position(|v| !v.is_finite()) {
            return Err(MechanismViolation::NonFinite { rank: rank + 1 });
        }
        if let Some(i) = a.windows(2).position(|w| w[0] < w[1]) {
            return Err(MechanismViolation::Monotonicity { rank: i + 1 });
        }
        if !a.windows(2).any(|w| w[0] > w[1]) {
            return Err(MechanismViolation::NoStrictInequality);
        }
        Ok(Self { a, monotone: true })
    }

    /// A schedule that may break monotonicity below the top rank, used for
    /// finite differences around boundary points such as `(A, 0, ..., 0)`.
    /// The top reward must still strictly exceed every other one; the
    /// equilibrium solver separately rejects it unless the benefit function
    /// stays strictly decreasing.
    pub(crate) fn perturbed(a: Vec<S>) -> std::result::Result<Self, MechanismViolation> {
        if a.len() < 2 || a.len() > MAX_RANKS {
            return Err(MechanismViolation::Size(a.len()));
        }
        if let Some(rank) = a.iter().position(|v| !v.is_finite()) {
            return Err(MechanismViolation::NonFinite { rank: rank + 1 });
        }
        let monotone = a.windows(2).all(|w| w[0] >= w[1]);
        if a[1..].iter().any(|&v| v >= a[0]) {
            return Err(MechanismViolation::Monotonicity { rank: 1 });
        }
        Ok(Self { a, monotone })
    }

    /// No checks at all; for evaluating budgets at bracket endpoints.
    pub(crate) fn raw(a: Vec<S>) -> Self {
        let monotone = a.windows(2).all(|w| w[0] >= w[1]);
        Self { a, monotone }
    }

    pub fn n(&self) -> usize {
        self.a.len()
    }

    pub fn as_slice(&self) -> &[S] {
        &self.a
    }

    pub fn into_vec(self) -> Vec<S> {
        self.a
    }

    /// Reward for 1-based `rank`.
    pub fn reward(&self, rank: usize) -> S {
        self.a[rank - 1]
    }

    pub fn top(&self) -> S {
        self.a[0]
    }

    pub fn bottom(&self) -> S {
        self.a[self.a.len() - 1]
    }

    pub fn is_nonnegative(&self) -> bool {
        self.bottom() >= S::zero() && self.a.iter().all(|&v| v >= S::zero())
    }

    pub fn is_monotone(&self) -> bool {
        self.monotone
    }

    pub fn total(&self) -> S {
        self.a.iter().copied().sum()
    }

    /// Copy with the 1-based `rank` reward replaced, re-validated.
    pub fn with_reward(&self, rank: usize, value: S) -> std::result::Result<Self, MechanismViolation> {
        let mut a = self.a.clone();
        a[rank - 1] = value;
        Self::validate(a)
    }

    /// Every reward multiplied by `m > 0`; monotonicity is preserved.
    pub fn scaled(&self, m: S) -> Self {
        Self { a: self.a.iter().map(|&v| v * m).collect(), monotone: self.monotone }
    }
}

impl<S: Scalar> Serialize for RewardVector<S> {
    fn serialize<Ser: Serializer>(&self, s: Ser) -> std::result::Result<Ser::Ok, Ser::Error> {
        self.a.serialize(s)
    }
}

impl<'de, S: Scalar> Deserialize<'de> for RewardVector<S> {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let a = Vec::<S>::deserialize(d)?;
        Self::validate(a).map_err(serde::de::Error::custom)
    }
}

/// Per-rank ceilings `A_1 >= ... >= A_n >= 0` on attention rewards.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(transparent)]
pub struct AttentionCaps<S> {
    caps: Vec<S>,
}

impl<S: Scalar> AttentionCaps<S> {
    pub fn new(caps: Vec<S>) -> std::result::Result<Self, MechanismViolation> {
        if caps.len() < 2 || caps.len() > MAX_RANKS {
            return Err(MechanismViolation::Size(caps.len()));
        }
        if let Some(rank) = caps.iter().position(|v| !v.is_finite()) {
            return Err(MechanismViolation::NonFinite { rank: rank + 1 });
        }
        if let Some(rank) = caps.iter().position(|&v| v < S::zero()) {
            return Err(MechanismViolation::NegativeCap { rank: rank + 1 });
        }
        if let Some(i) = caps.windows(2).position(|w| w[0] < w[1]) {
            return Err(MechanismViolation::Monotonicity { rank: i + 1 });
        }
        Ok(Self { caps })
    }

    pub fn n(&self) -> usize {
        self.caps.len()
    }

    pub fn as_slice(&self) -> &[S] {
        &self.caps
    }
}

/// `(A, 0, ..., 0)`.
pub fn winner_take_all<S: Scalar>(n: usize, prize: S) -> std::result::Result<RewardVector<S>, MechanismViolation> {
    if n < 2 {
        return Err(MechanismViolation::Size(n));
    }
    if !(prize > S::zero()) {
        return Err(MechanismViolation::Constructor(format!(
            "winner-take-all prize must be > 0, got {prize}"
        )));
    }
    let mut a = vec![S::zero(); n];
    a[0] = prize;
    RewardVector::validate(a)
}

/// Show every rank at its cap except the last, whose reward is capped at the
/// entry cost: `a_i = A_i` for `i < n`, `a_n = min(A_n, c0)`.
pub fn attention_schedule<S: Scalar>(
    caps: &AttentionCaps<S>,
    c0: S,
) -> std::result::Result<RewardVector<S>, MechanismViolation> {
    if !(c0 >= S::zero()) {
        return Err(MechanismViolation::Constructor(format!("entry cost must be >= 0, got {c0}")));
    }
    let mut a = caps.as_slice().to_vec();
    let last = a.len() - 1;
    a[last] = a[last].min(c0);
    RewardVector::validate(a)
}

/// Winner-take-all with every other rank taxed: `(a_1*, -t, ..., -t)`.
///
/// `a_1*` is re-solved so the equilibrium expected payout equals that of
/// `(prize, 0, ..., 0)`. `tax = 0` returns the untaxed schedule unchanged.
pub fn taxed_wta<S: Scalar>(n: usize, prize: S, tax: S, cost: &CostModel<S>) -> Result<RewardVector<S>> {
    let base = winner_take_all(n, prize)?;
    if !(tax >= S::zero()) {
        return Err(MechanismViolation::Constructor(format!("tax must be >= 0, got {tax}")).into());
    }
    if tax == S::zero() {
        return Ok(base);
    }
    cost.require_entry_cost()?;
    let target = design::wta_budget(n, prize, cost)?;
    let mut a = vec![-tax; n];
    a[0] = prize;
    let start = RewardVector::validate(a)?;
    design::rebalance_winner(&start, cost, target, &design::DesignConfig::default())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::error::Error;

    #[test]
    fn validate_examples() {
        let wta = RewardVector::validate(vec![1.0, 0.0, 0.0]).unwrap();
        assert!(wta.is_nonnegative());
        assert_eq!(
            RewardVector::validate(vec![1.0, 1.0, 1.0]).unwrap_err(),
            MechanismViolation::NoStrictInequality
        );
        assert_eq!(
            RewardVector::validate(vec![0.5, 1.0, 0.0]).unwrap_err(),
            MechanismViolation::Monotonicity { rank: 1 }
        );
        assert_eq!(RewardVector::<f64>::validate(vec![1.0]).unwrap_err(), MechanismViolation::Size(1));
        assert!(matches!(
            RewardVector::validate(vec![1.0, f64::NAN]),
            Err(MechanismViolation::NonFinite { rank: 2 })
        ));
    }

    #[test]
    fn negative_rewards_are_accepted_but_not_nonnegative() {
        let v = RewardVector::validate(vec![1.2, -0.05, -0.05]).unwrap();
        assert!(!v.is_nonnegative());
    }

    #[test]
    fn wta_examples() {
        assert_eq!(winner_take_all(2, 1.0).unwrap().as_slice(), &[1.0, 0.0]);
        assert_eq!(winner_take_all(5, 2.0).unwrap().as_slice(), &[2.0, 0.0, 0.0, 0.0, 0.0]);
        assert!(winner_take_all(3, 0.0).is_err());
        assert!(winner_take_all(1, 1.0).is_err());
    }

    #[test]
    fn attention_examples() {
        let caps = AttentionCaps::new(vec![1.0, 0.5, 0.4]).unwrap();
        assert_eq!(attention_schedule(&caps, 0.3).unwrap().as_slice(), &[1.0, 0.5, 0.3]);
        assert_eq!(attention_schedule(&caps, 0.0).unwrap().as_slice(), &[1.0, 0.5, 0.0]);
        let caps = AttentionCaps::new(vec![1.0, 0.5, 0.2]).unwrap();
        assert_eq!(attention_schedule(&caps, 0.3).unwrap().as_slice(), &[1.0, 0.5, 0.2]);
        let flat = AttentionCaps::new(vec![0.2, 0.2, 0.2]).unwrap();
        assert_eq!(attention_schedule(&flat, 0.5).unwrap_err(), MechanismViolation::NoStrictInequality);
    }

    #[test]
    fn caps_validation() {
        assert!(AttentionCaps::new(vec![1.0, -0.1]).is_err());
        assert!(AttentionCaps::new(vec![0.5, 1.0]).is_err());
    }

    #[test]
    fn taxed_wta_zero_tax_is_identity() {
        let cost = CostModel::linear(0.25, 1.0).unwrap();
        let t0 = taxed_wta(3, 1.0, 0.0, &cost).unwrap();
        assert_eq!(t0, winner_take_all(3, 1.0).unwrap());
    }

    #[test]
    fn taxed_wta_rejects_free_entry() {
        let cost = CostModel::linear(0.0, 1.0).unwrap();
        assert!(matches!(taxed_wta(3, 1.0, 0.05, &cost), Err(Error::Cost(_))));
    }

    #[test]
    fn serde_rejects_invalid() {
        assert!(serde_json::from_str::<RewardVector<f64>>("[1,1]").is_err());
        let v: RewardVector<f64> = serde_json::from_str("[1,0.5,0]").unwrap();
        assert_eq!(serde_json::to_string(&v).unwrap(), "[1.0,0.5,0.0]");
    }
}
