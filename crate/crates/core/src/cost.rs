//! Effort cost functions `c(q)` over quality `q >= 0`.
//!
//! Three families are supported: affine `c0 + slope*q`, exponential
//! `exp(k*q)`, and `c0 + a*q + b*q^2`. All are strictly increasing with a
//! strictly positive derivative on `q >= 0`.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};
use crate::numerics::{monotone_root, RootConfig};
use crate::scalar::Scalar;

/// Parameters of a cost family.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum CostFamily<S> {
    Linear { c0: S, slope: S },
    Exponential { k: S },
    QuadraticPlus { c0: S, a: S, b: S },
}

/// Monotonicity of the ratio `c'(q)/c(q)` on `q >= 0`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum HazardClass {
    Nonincreasing,
    Constant,
    Other,
}

impl HazardClass {
    /// Whether the winner-take-all and entry-tax results apply.
    pub fn satisfies_ratio_condition(self) -> bool {
        matches!(self, HazardClass::Nonincreasing | HazardClass::Constant)
    }
}

/// A validated cost function. Immutable once built.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CostModel<S> {
    family: CostFamily<S>,
}

fn check_param<S: Scalar>(name: &str, v: S, positive: bool) -> Result<()> {
    if !v.is_finite() {
        return Err(Error::Cost(format!("{name} must be finite")));
    }
    if positive && v <= S::zero() {
        return Err(Error::Cost(format!("{name} must be > 0, got {v}")));
    }
    if !positive && v < S::zero() {
        return Err(Error::Cost(format!("{name} must be >= 0, got {v}")));
    }
    Ok(())
}

impl<S: Scalar> CostModel<S> {
    pub fn linear(c0: S, slope: S) -> Result<Self> {
        check_param("c0", c0, false)?;
        check_param("slope", slope, true)?;
        Ok(Self { family: CostFamily::Linear { c0, slope } })
    }

    /// `c(q) = exp(k q)`, so `c(0) = 1`.
    pub fn exponential(k: S) -> Result<Self> {
        check_param("k", k, true)?;
        Ok(Self { family: CostFamily::Exponential { k } })
    }

    /// `c(q) = c0 + a q + b q^2`. `a > 0` keeps `c'(0)` away from zero.
    pub fn quadratic_plus(c0: S, a: S, b: S) -> Result<Self> {
        check_param("c0", c0, false)?;
        check_param("a", a, true)?;
        check_param("b", b, false)?;
        Ok(Self { family: CostFamily::QuadraticPlus { c0, a, b } })
    }

    pub fn family(&self) -> &CostFamily<S> {
        &self.family
    }

    /// `c(0)`, the cost of entering with the lowest quality.
    pub fn entry_cost(&self) -> S {
        self.value(S::zero())
    }

    pub fn has_entry_cost(&self) -> bool {
        self.entry_cost() > S::zero()
    }

    /// Fails when `c(0) = 0`: without an entry cost every agent always enters.
    pub fn require_entry_cost(&self) -> Result<()> {
        if self.has_entry_cost() {
            Ok(())
        } else {
            Err(Error::Cost("this experiment needs c(0) > 0 (endogenous entry)".into()))
        }
    }

    pub fn eval(&self, q: S) -> Result<S> {
        check_quality(q)?;
        Ok(self.value(q))
    }

    pub fn derivative(&self, q: S) -> Result<S> {
        check_quality(q)?;
        Ok(self.slope_at(q))
    }

    /// The unique `q >= 0` with `c(q) = v`.
    pub fn inverse(&self, v: S) -> Result<S> {
        let c0 = self.entry_cost();
        if v.is_nan() || v < c0 {
            return Err(Error::Range(format!("cost {v} is below c(0) = {c0}")));
        }
        if !v.is_finite() {
            return Err(Error::Range("cost must be finite".into()));
        }
        Ok(self.inverse_saturating(v))
    }

    #[inline]
    pub(crate) fn value(&self, q: S) -> S {
        match self.family {
            CostFamily::Linear { c0, slope } => c0 + slope * q,
            CostFamily::Exponential { k } => (k * q).exp(),
            CostFamily::QuadraticPlus { c0, a, b } => c0 + q * (a + b * q),
        }
    }

    #[inline]
    pub(crate) fn slope_at(&self, q: S) -> S {
        match self.family {
            CostFamily::Linear { slope, .. } => slope,
            CostFamily::Exponential { k } => k * (k * q).exp(),
            CostFamily::QuadraticPlus { a, b, .. } => a + S::two() * b * q,
        }
    }

    /// Inverse that maps anything at or below `c(0)` to quality 0.
    pub(crate) fn inverse_saturating(&self, v: S) -> S {
        match self.family {
            CostFamily::Linear { c0, slope } => ((v - c0) / slope).max(S::zero()),
            CostFamily::Exponential { k } => {
                if v <= S::one() {
                    S::zero()
                } else {
                    v.ln() / k
                }
            }
            CostFamily::QuadraticPlus { c0, .. } => {
                if v <= c0 {
                    return S::zero();
                }
                // c is unbounded, so doubling the bracket terminates
                let mut hi = S::one();
                while self.value(hi) < v {
                    hi = hi * S::two();
                }
                let cfg = RootConfig { arg_tol: S::zero(), max_iter: 4000 };
                monotone_root(|q| self.value(q), S::zero(), hi, v, true, &cfg)
            }
        }
    }

    /// Classifies how `c'(q)/c(q)` moves with `q`, analytically per family.
    ///
    /// For the quadratic family the sign of `(c'/c)'` is that of
    /// `2 b c0 - a^2 - 2 a b q - 2 b^2 q^2`, which is nonpositive for all
    /// `q >= 0` exactly when `2 b c0 <= a^2`.
    pub fn hazard_class(&self) -> HazardClass {
        match self.family {
            CostFamily::Linear { .. } => HazardClass::Nonincreasing,
            CostFamily::Exponential { .. } => HazardClass::Constant,
            CostFamily::QuadraticPlus { c0, a, b } => {
                if b == S::zero() || S::two() * b * c0 <= a * a {
                    HazardClass::Nonincreasing
                } else {
                    HazardClass::Other
                }
            }
        }
    }
}

fn check_quality<S: Scalar>(q: S) -> Result<()> {
    if q.is_nan() || q < S::zero() {
        Err(Error::Domain(format!("quality must be >= 0, got {q}")))
    } else {
        Ok(())
    }
}

impl<S: Scalar> fmt::Display for CostModel<S> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.family {
            CostFamily::Linear { c0, slope } => write!(f, "linear:c0={c0},slope={slope}"),
            CostFamily::Exponential { k } => write!(f, "exp:k={k}"),
            CostFamily::QuadraticPlus { c0, a, b } => write!(f, "quad:c0={c0},a={a},b={b}"),
        }
    }
}

impl<S: Scalar> FromStr for CostModel<S> {
    type Err = Error;

    /// Parses `linear:c0=<r>,slope=<r>`, `exp:k=<r>` or
    /// `quad:c0=<r>,a=<r>,b=<r>`. Keys may appear in any order.
    fn from_str(s: &str) -> Result<Self> {
        let perr = |offset: usize, message: String| Error::Parse { offset, message };
        let colon = s
            .find(':')
            .ok_or_else(|| perr(0, "expected '<family>:<key>=<value>,...'".into()))?;
        let family = &s[..colon];
        let keys: &[&str] = match family {
            "linear" => &["c0", "slope"],
            "exp" => &["k"],
            "quad" => &["c0", "a", "b"],
            other => return Err(perr(0, format!("unknown cost family '{other}' (linear, exp, quad)"))),
        };
        let mut values: Vec<Option<S>> = vec![None; keys.len()];
        let mut offset = colon + 1;
        for part in s[colon + 1..].split(',') {
            let eq = part
                .find('=')
                .ok_or_else(|| perr(offset, format!("expected key=value, got '{part}'")))?;
            let key = part[..eq].trim();
            let idx = keys
                .iter()
                .position(|k| *k == key)
                .ok_or_else(|| perr(offset, format!("unknown key '{key}' for {family}")))?;
            if values[idx].is_some() {
                return Err(perr(offset, format!("duplicate key '{key}'")));
            }
            let raw = part[eq + 1..].trim();
            let v = raw
                .parse::<S>()
                .map_err(|_| perr(offset + eq + 1, format!("invalid number '{raw}'")))?;
            values[idx] = Some(v);
            offset += part.len() + 1;
        }
        let mut got = Vec::with_capacity(keys.len());
        for (k, v) in keys.iter().zip(values) {
            got.push(v.ok_or_else(|| perr(s.len(), format!("missing key '{k}'")))?);
        }
        match family {
            "linear" => CostModel::linear(got[0], got[1]),
            "exp" => CostModel::exponential(got[0]),
            _ => CostModel::quadratic_plus(got[0], got[1], got[2]),
        }
    }
}

impl<S: Scalar> Serialize for CostModel<S> {
    fn serialize<Ser: Serializer>(&self, serializer: Ser) -> std::result::Result<Ser::Ok, Ser::Error> {
        serializer.collect_str(self)
    }
}

impl<'de, S: Scalar> Deserialize<'de> for CostModel<S> {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(deserializer)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn lin() -> CostModel<f64> {
        CostModel::linear(0.25, 1.0).unwrap()
    }
    fn quad() -> CostModel<f64> {
        CostModel::quadratic_plus(0.1, 1.0, 2.0).unwrap()
    }

    #[test]
    fn eval_examples() {
        assert!((lin().eval(0.5).unwrap() - 0.75).abs() < 1e-15);
        assert_eq!(CostModel::exponential(1.0).unwrap().eval(0.0).unwrap(), 1.0);
        assert!((quad().eval(0.5).unwrap() - 1.1).abs() < 1e-15);
    }

    #[test]
    fn derivative_examples() {
        assert_eq!(lin().derivative(0.4).unwrap(), 1.0);
        assert_eq!(CostModel::exponential(2.0).unwrap().derivative(0.0).unwrap(), 2.0);
        assert!((quad().derivative(0.25).unwrap() - 2.0).abs() < 1e-15);
    }

    #[test]
    fn inverse_examples() {
        assert!((lin().inverse(1.0).unwrap() - 0.75).abs() < 1e-15);
        assert_eq!(CostModel::exponential(1.0).unwrap().inverse(1.0).unwrap(), 0.0);
        // closed-form root of 2q^2 + q - 1 = 0
        let oracle = (-1.0 + (1.0f64 + 8.0).sqrt()) / 4.0;
        assert!((quad().inverse(1.1).unwrap() - oracle).abs() < 1e-12);
        assert!((quad().inverse(1.1).unwrap() - 0.5).abs() < 1e-12);
    }

    #[test]
    fn negative_quality_is_domain_error() {
        assert!(matches!(lin().eval(-0.1), Err(Error::Domain(_))));
        assert!(matches!(lin().derivative(-1e-9), Err(Error::Domain(_))));
    }

    #[test]
    fn inverse_below_entry_cost_is_range_error() {
        assert!(matches!(lin().inverse(0.2), Err(Error::Range(_))));
        assert!(matches!(CostModel::exponential(1.0).unwrap().inverse(0.5), Err(Error::Range(_))));
    }

    #[test]
    fn construction_rejects_flat_costs() {
        assert!(CostModel::<f64>::linear(0.25, 0.0).is_err());
        assert!(CostModel::<f64>::exponential(-1.0).is_err());
        assert!(CostModel::<f64>::quadratic_plus(0.1, 0.0, 1.0).is_err());
        assert!(CostModel::<f64>::linear(-0.1, 1.0).is_err());
        assert!(CostModel::<f64>::linear(f64::NAN, 1.0).is_err());
    }

    #[test]
    fn zero_entry_cost_is_allowed_but_flagged() {
        let c = CostModel::<f64>::linear(0.0, 1.0).unwrap();
        assert!(!c.has_entry_cost());
        assert!(c.require_entry_cost().is_err());
        assert!(lin().require_entry_cost().is_ok());
    }

    #[test]
    fn hazard_classes() {
        assert_eq!(lin().hazard_class(), HazardClass::Nonincreasing);
        assert_eq!(CostModel::<f64>::exponential(3.0).unwrap().hazard_class(), HazardClass::Constant);
        let counter = CostModel::<f64>::quadratic_plus(0.1, 0.01, 1.0).unwrap();
        assert_eq!(counter.hazard_class(), HazardClass::Other);
        assert_eq!(quad().hazard_class(), HazardClass::Nonincreasing);
    }

    #[test]
    fn hazard_class_other_is_detectably_non_monotone() {
        // grid oracle: c'/c must go up then down
        let c = CostModel::<f64>::quadratic_plus(0.1, 0.01, 1.0).unwrap();
        let ratio: Vec<f64> = (0..200)
            .map(|i| {
                let q = i as f64 * 0.01;
                c.derivative(q).unwrap() / c.eval(q).unwrap()
            })
            .collect();
        let ups = ratio.windows(2).filter(|w| w[1] > w[0]).count();
        let downs = ratio.windows(2).filter(|w| w[1] < w[0]).count();
        assert!(ups > 0 && downs > 0);
    }

    #[test]
    fn text_round_trip() {
        for s in ["linear:c0=0.25,slope=1", "exp:k=1.5", "quad:c0=0.1,a=1,b=2"] {
            let c: CostModel<f64> = s.parse().unwrap();
            assert_eq!(c.to_string(), s);
        }
        let c: CostModel<f64> = "linear:slope=2,c0=0.5".parse().unwrap();
        assert_eq!(c, CostModel::linear(0.5, 2.0).unwrap());
    }

    #[test]
    fn parse_errors_carry_offsets() {
        let e = "linear:c0=0.25,slope=abc".parse::<CostModel<f64>>().unwrap_err();
        assert_eq!(e, Error::Parse { offset: 21, message: "invalid number 'abc'".into() });
        assert!(matches!("cubic:k=1".parse::<CostModel<f64>>(), Err(Error::Parse { offset: 0, .. })));
        assert!(matches!("exp:k=1,z=2".parse::<CostModel<f64>>(), Err(Error::Parse { offset: 8, .. })));
        assert!(matches!("linear:c0=1".parse::<CostModel<f64>>(), Err(Error::Parse { .. })));
        assert!(matches!("exp:k=0".parse::<CostModel<f64>>(), Err(Error::Cost(_))));
    }

    #[test]
    fn json_uses_text_form() {
        let j = serde_json::to_string(&lin()).unwrap();
        assert_eq!(j, "\"linear:c0=0.25,slope=1\"");
        let back: CostModel<f64> = serde_json::from_str(&j).unwrap();
        assert_eq!(back, lin());
    }
}
