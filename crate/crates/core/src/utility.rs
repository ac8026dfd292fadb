//! Utilities of terminal wealth and terminal price.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{invalid, Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum UtilitySpec {
    /// `U(v, s) = -((s_T - K)^+ - v)^+`, the shortfall of a call with strike `K`.
    Shortfall { strike: f64 },
    /// `U(v) = v^α`.
    Power { alpha: f64 },
    /// `U(v) = ln v`, `-∞` at zero.
    Log,
}

impl UtilitySpec {
    pub fn shortfall(strike: f64) -> Result<Self> {
        Self::Shortfall { strike }.validated()
    }

    pub fn power(alpha: f64) -> Result<Self> {
        Self::Power { alpha }.validated()
    }

    pub fn validated(self) -> Result<Self> {
        match self {
            Self::Shortfall { strike } if !(strike.is_finite() && strike > 0.0) => {
                Err(invalid(format!("strike must be positive, got {strike}")))
            }
            Self::Power { alpha } if !(alpha > 0.0 && alpha < 1.0) => {
                Err(invalid(format!("power exponent must lie in (0, 1), got {alpha}")))
            }
            other => Ok(other),
        }
    }

    /// Option payoff hedged by the shortfall utility; zero for the others.
    pub fn payoff(&self, s_t: f64) -> f64 {
        match *self {
            Self::Shortfall { strike } => (s_t - strike).max(0.0),
            _ => 0.0,
        }
    }

    pub fn evaluate(&self, v: f64, s_t: f64) -> Result<f64> {
        if v.is_nan() || v < 0.0 {
            return Err(invalid(format!("utility evaluated at negative wealth {v}")));
        }
        Ok(self.eval_unchecked(v, s_t))
    }

    #[inline]
    pub(crate) fn eval_unchecked(&self, v: f64, s_t: f64) -> f64 {
        match *self {
            Self::Shortfall { strike } => -((s_t - strike).max(0.0) - v).max(0.0),
            Self::Power { alpha } => v.powf(alpha),
            Self::Log => {
                if v == 0.0 {
                    f64::NEG_INFINITY
                } else {
                    v.ln()
                }
            }
        }
    }

    /// Wealth above which `U(·, s_T)` is constant, if any.
    pub fn saturation(&self, s_t: f64) -> Option<f64> {
        match *self {
            Self::Shortfall { .. } => Some(self.payoff(s_t)),
            _ => None,
        }
    }

    /// Largest slope of `U(·, s)` over `[v, ∞)`, if finite.
    pub fn lipschitz_from(&self, v: f64) -> Option<f64> {
        match *self {
            Self::Shortfall { .. } => Some(1.0),
            Self::Power { alpha } if v > 0.0 => Some(alpha * v.powf(alpha - 1.0)),
            Self::Log if v > 0.0 => Some(1.0 / v),
            _ => None,
        }
    }

    pub fn is_bounded_above(&self) -> bool {
        matches!(self, Self::Shortfall { .. })
    }
}

/// Checks `U((1-λ)v, s) ≥ U(v, s) - λ/(1-λ) · ζ` with `ζ = (s_T - K)^+`.
///
/// Only the shortfall utility has this form of modulus; the other built-ins
/// are reported as not satisfying it.
pub fn modulus_bound_check(u: &UtilitySpec, lambda: f64, v: f64, s_t: f64) -> bool {
    if !(lambda > 0.0 && lambda < 1.0) || !(v >= 0.0) {
        return false;
    }
    match u {
        UtilitySpec::Shortfall { .. } => {
            let lhs = u.eval_unchecked((1.0 - lambda) * v, s_t);
            let rhs = u.eval_unchecked(v, s_t) - lambda / (1.0 - lambda) * u.payoff(s_t);
            lhs >= rhs - 1e-12 * (1.0 + rhs.abs())
        }
        _ => false,
    }
}

impl fmt::Display for UtilitySpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::Shortfall { strike } => write!(f, "shortfall:K={strike}"),
            Self::Power { alpha } => write!(f, "power:alpha={alpha}"),
            Self::Log => write!(f, "log"),
        }
    }
}

fn parse_param(body: &str, key: &str, spec: &str) -> Result<f64> {
    let (k, v) = body
        .split_once('=')
        .ok_or_else(|| invalid(format!("utility `{spec}`: expected {key}=<value>")))?;
    if !k.trim().eq_ignore_ascii_case(key) {
        return Err(invalid(format!("utility `{spec}`: unknown parameter `{}`", k.trim())));
    }
    v.trim()
        .parse::<f64>()
        .map_err(|_| invalid(format!("utility `{spec}`: bad number `{}`", v.trim())))
}

impl FromStr for UtilitySpec {
    type Err = Error;

    fn from_str(spec: &str) -> Result<Self> {
        let s = spec.trim();
        let (kind, body) = match s.split_once(':') {
            Some((k, b)) => (k.trim(), Some(b)),
            None => (s, None),
        };
        match (kind.to_ascii_lowercase().as_str(), body) {
            ("shortfall", Some(b)) => Self::shortfall(parse_param(b, "K", spec)?),
            ("power", Some(b)) => Self::power(parse_param(b, "alpha", spec)?),
            ("log", None) => Ok(Self::Log),
            _ => Err(invalid(format!(
                "unknown utility `{spec}` (expected shortfall:K=<k>, power:alpha=<a> or log)"
            ))),
        }
    }
}

impl Serialize for UtilitySpec {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for UtilitySpec {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;

    const K1: UtilitySpec = UtilitySpec::Shortfall { strike: 1.0 };

    #[test]
    fn evaluate_examples() {
        for v in [0.0, 0.3, 5.0] {
            assert_eq!(K1.evaluate(v, 0.8).unwrap(), 0.0);
        }
        assert_abs_diff_eq!(K1.evaluate(0.1, 2.22045).unwrap(), -1.12045, epsilon = 1e-12);
        assert_eq!(UtilitySpec::Log.evaluate(0.0, 1.0).unwrap(), f64::NEG_INFINITY);
        assert_abs_diff_eq!(
            UtilitySpec::power(0.5).unwrap().evaluate(4.0, 1.0).unwrap(),
            2.0
        );
        assert!(K1.evaluate(-1e-9, 1.0).is_err());
    }

    #[test]
    fn modulus_examples() {
        assert!(modulus_bound_check(&K1, 1e-9, 0.5, 2.0));
        assert!(modulus_bound_check(&K1, 0.5, 0.5, 2.0));
        assert!(modulus_bound_check(&K1, 0.5, 0.5, 0.7));
        assert!(!modulus_bound_check(&K1, 1.0, 0.5, 2.0));
    }

    #[test]
    fn saturation_point() {
        assert_eq!(K1.saturation(1.5), Some(0.5));
        assert_eq!(K1.saturation(0.5), Some(0.0));
        assert_eq!(UtilitySpec::Log.saturation(2.0), None);
    }

    #[test]
    fn parse_and_display() {
        for s in ["shortfall:K=1", "shortfall:K=1.0", " SHORTFALL : k = 1.0 "] {
            assert_eq!(s.parse::<UtilitySpec>().unwrap(), K1);
        }
        assert_eq!(
            "power:alpha=0.5".parse::<UtilitySpec>().unwrap(),
            UtilitySpec::Power { alpha: 0.5 }
        );
        assert_eq!("log".parse::<UtilitySpec>().unwrap(), UtilitySpec::Log);
        for bad in ["", "shortfall", "shortfall:K=-1", "power:alpha=1", "power:beta=0.5", "exp"] {
            assert!(bad.parse::<UtilitySpec>().is_err(), "{bad}");
        }
        for u in [K1, UtilitySpec::Power { alpha: 0.25 }, UtilitySpec::Log] {
            assert_eq!(u.to_string().parse::<UtilitySpec>().unwrap(), u);
            let json = serde_json::to_string(&u).unwrap();
            assert_eq!(serde_json::from_str::<UtilitySpec>(&json).unwrap(), u);
        }
        assert_eq!(K1.to_string(), "shortfall:K=1");
    }

    fn any_utility() -> impl proptest::strategy::Strategy<Value = UtilitySpec> {
        prop_oneof![
            (0.1..3.0f64).prop_map(|k| UtilitySpec::Shortfall { strike: k }),
            (0.05..0.95f64).prop_map(|a| UtilitySpec::Power { alpha: a }),
            Just(UtilitySpec::Log),
        ]
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(10_000))]

        #[test]
        fn bounded_above_by_zero(k in 0.1..3.0f64, v in 0.0..10.0f64, s in 0.0..10.0f64) {
            let u = UtilitySpec::Shortfall { strike: k };
            prop_assert!(u.evaluate(v, s).unwrap() <= 0.0);
        }

        #[test]
        fn concave(u in any_utility(), v1 in 1e-6..5.0f64, v2 in 1e-6..5.0f64, th in 0.0..1.0f64, s in 0.0..4.0f64) {
            let mid = u.evaluate(th * v1 + (1.0 - th) * v2, s).unwrap();
            let chord = th * u.evaluate(v1, s).unwrap() + (1.0 - th) * u.evaluate(v2, s).unwrap();
            prop_assert!(mid >= chord - 1e-12);
        }

        #[test]
        fn monotone(u in any_utility(), v in 0.0..5.0f64, dv in 0.0..1.0f64, s in 0.0..4.0f64) {
            prop_assert!(u.evaluate(v + dv, s).unwrap() >= u.evaluate(v, s).unwrap());
        }

        #[test]
        fn modulus_holds(k in 0.1..3.0f64, lambda in 1e-6..0.999f64, v in 1e-6..5.0f64, s in 0.0..5.0f64) {
            let u = UtilitySpec::Shortfall { strike: k };
            prop_assert!(modulus_bound_check(&u, lambda, v, s));
        }
    }
}
