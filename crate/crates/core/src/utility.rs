//! Exponential utility curves and the per-attribute utility quantities built
//! on them.
//!
//! Every curve has the form `U(x) = a - b·exp(-x/K)` over a domain `[L, H]`,
//! normalized so the increasing member runs from 0 at `L` to 1 at `H`. A
//! decreasing curve is the reflection `1 - U(x)` of an increasing one. The
//! convergence constant `K` is signed: `K > 0` gives a concave increasing
//! curve, `K < 0` a convex one, and `|K| -> ∞` the straight line.
//!
//! Evaluation goes through the algebraically identical form
//! `expm1(-(x - L)/K) / expm1(-(H - L)/K)`, which neither overflows for small
//! negative `K` nor cancels for large `|K|`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Largest `|rate|·(H - L)` the solver will try; beyond this `exp` overflows.
const MAX_RATE_SPAN: f64 = 700.0;
const MAX_BISECTIONS: usize = 400;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Direction {
    Increasing,
    Decreasing,
}

/// A fitted unit exponential utility function.
///
/// For a linear curve `k` is infinite and `(a, b)` hold the affine form
/// `U(x) = a - b·x` of the increasing member.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct UtilityCurve {
    pub lower: f64,
    pub upper: f64,
    #[serde(with = "nonfinite_as_null")]
    pub k: f64,
    #[serde(with = "nonfinite_as_null")]
    pub a: f64,
    #[serde(with = "nonfinite_as_null")]
    pub b: f64,
    pub direction: Direction,
    pub linear: bool,
}

impl UtilityCurve {
    /// The straight-line member.
    pub fn linear(lower: f64, upper: f64, direction: Direction) -> Result<Self> {
        check_domain(lower, upper)?;
        let width = upper - lower;
        Ok(Self {
            lower,
            upper,
            k: f64::INFINITY,
            a: -lower / width,
            b: -1.0 / width,
            direction,
            linear: true,
        })
    }

    /// Builds a curve from a known convergence constant.
    pub fn from_constant(lower: f64, upper: f64, k: f64, direction: Direction) -> Result<Self> {
        check_domain(lower, upper)?;
        if k.is_nan() || k == 0.0 {
            return Err(Error::domain(format!(
                "convergence constant must be nonzero, got {k}"
            )));
        }
        if k.is_infinite() {
            return Self::linear(lower, upper, direction);
        }
        Ok(Self::from_rate(lower, upper, 1.0 / k, direction))
    }

    fn from_rate(lower: f64, upper: f64, rate: f64, direction: Direction) -> Self {
        if rate == 0.0 {
            let width = upper - lower;
            return Self {
                lower,
                upper,
                k: f64::INFINITY,
                a: -lower / width,
                b: -1.0 / width,
                direction,
                linear: true,
            };
        }
        let k = 1.0 / rate;
        // a = e^{-L/K} / (e^{-L/K} - e^{-H/K}) = 1 / (1 - e^{-(H-L)/K})
        let a = -1.0 / (-(upper - lower) * rate).exp_m1();
        let b = a * (lower * rate).exp();
        Self {
            lower,
            upper,
            k,
            a,
            b,
            direction,
            linear: false,
        }
    }

    /// `1/K`; zero for the linear member.
    pub fn rate(&self) -> f64 {
        if self.linear {
            0.0
        } else {
            1.0 / self.k
        }
    }

    /// Unit utility at `x`.
    pub fn evaluate(&self, x: f64) -> Result<f64> {
        if !(self.lower..=self.upper).contains(&x) {
            return Err(Error::domain(format!(
                "x = {x} outside curve domain [{}, {}]",
                self.lower, self.upper
            )));
        }
        Ok(self.value(x))
    }

    /// Evaluation without the domain check; `x` is clamped into the domain.
    pub(crate) fn value(&self, x: f64) -> f64 {
        let x = x.clamp(self.lower, self.upper);
        let rising = if x == self.lower {
            0.0
        } else if x == self.upper {
            1.0
        } else {
            increasing_value(self.rate(), self.lower, self.upper, x).clamp(0.0, 1.0)
        };
        match self.direction {
            Direction::Increasing => rising,
            Direction::Decreasing => 1.0 - rising,
        }
    }
}

fn check_domain(lower: f64, upper: f64) -> Result<()> {
    if !(lower.is_finite() && upper.is_finite() && lower < upper) {
        return Err(Error::domain(format!(
            "curve domain requires finite lower < upper, got [{lower}, {upper}]"
        )));
    }
    Ok(())
}

/// Normalized increasing member at interior `x` for `rate = 1/K`.
fn increasing_value(rate: f64, lower: f64, upper: f64, x: f64) -> f64 {
    if rate == 0.0 {
        (x - lower) / (upper - lower)
    } else {
        (-rate * (x - lower)).exp_m1() / (-rate * (upper - lower)).exp_m1()
    }
}

/// Fits the curve through `(lower, ·)`, `(c_ref, p_i)` and `(upper, ·)`.
///
/// The endpoint values follow from `direction`. The anchor residual is
/// strictly increasing in `1/K`, so the root is bracketed by doubling away
/// from the linear member and then bisected. Both curvature signs are
/// searched. When `p_i` is within `tol` of the straight line through the
/// endpoints, the linear member is returned.
pub fn solve_convergence_constant(
    lower: f64,
    upper: f64,
    c_ref: f64,
    p_i: f64,
    direction: Direction,
    tol: f64,
) -> Result<UtilityCurve> {
    check_domain(lower, upper)?;
    if !(tol > 0.0 && tol.is_finite()) {
        return Err(Error::domain(format!("fit tolerance must be positive, got {tol}")));
    }
    if !(c_ref > lower && c_ref < upper) {
        return Err(Error::domain(format!(
            "reference value {c_ref} must lie strictly inside ({lower}, {upper})"
        )));
    }
    if !(p_i > 0.0 && p_i < 1.0) {
        return Err(Error::constraint(format!(
            "indifference probability {p_i} must lie strictly inside (0, 1)"
        )));
    }
    if direction == Direction::Decreasing {
        let bound = indifference_lower_bound(c_ref, lower, upper)?;
        if p_i < bound {
            return Err(Error::constraint(format!(
                "indifference probability {p_i} must be at least {bound} for reference cost {c_ref}"
            )));
        }
    }

    // Work on the increasing member; a decreasing anchor p maps to 1 - p.
    let target = match direction {
        Direction::Increasing => p_i,
        Direction::Decreasing => 1.0 - p_i,
    };
    let width = upper - lower;
    let residual = |rate: f64| increasing_value(rate, lower, upper, c_ref) - target;

    let straight = residual(0.0);
    if straight.abs() <= tol {
        return UtilityCurve::linear(lower, upper, direction);
    }

    // Above the chord needs a concave member (rate > 0), below it a convex one.
    let sign = if straight < 0.0 { 1.0 } else { -1.0 };
    let mut near = 0.0_f64;
    let mut far = sign / width;
    while residual(far) * sign < 0.0 {
        near = far;
        far *= 2.0;
        if far.abs() * width > MAX_RATE_SPAN {
            return Err(Error::ConvergenceFailure(format!(
                "anchor ({c_ref}, {p_i}) needs |K| below {:.3e}",
                width / MAX_RATE_SPAN
            )));
        }
    }

    let (mut lo, mut hi) = if sign > 0.0 { (near, far) } else { (far, near) };
    let mut best = (f64::INFINITY, near);
    for _ in 0..MAX_BISECTIONS {
        let mid = 0.5 * (lo + hi);
        let r = residual(mid);
        if r.abs() < best.0 {
            best = (r.abs(), mid);
        }
        if r.abs() <= tol * 1e-3 || mid == lo || mid == hi {
            break;
        }
        if r < 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let (err, rate) = best;
    if err > tol {
        return Err(Error::ConvergenceFailure(format!(
            "anchor ({c_ref}, {p_i}) residual {err:.3e} exceeds tolerance {tol:.3e}"
        )));
    }
    Ok(UtilityCurve::from_rate(lower, upper, rate, direction))
}

/// An indifference probability, guaranteed to lie in `[0, 1]`.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd, Serialize, Deserialize)]
#[serde(transparent)]
pub struct IndifferenceProbability(f64);

impl IndifferenceProbability {
    pub fn new(value: f64) -> Result<Self> {
        if (0.0..=1.0).contains(&value) {
            Ok(Self(value))
        } else {
            Err(Error::domain(format!(
                "indifference probability {value} outside [0, 1]"
            )))
        }
    }

    pub fn value(self) -> f64 {
        self.0
    }

    /// Whether this probability can anchor a fit at `c_ref`: it must exceed
    /// the straight-line bound and stay below 1.
    pub fn is_fittable(self, c_ref: f64, lower: f64, upper: f64) -> bool {
        indifference_lower_bound(c_ref, lower, upper)
            .map(|bound| self.0 > bound && self.0 < 1.0)
            .unwrap_or(false)
    }
}

/// Scaling weight applied to a unit quality (or risk) utility; at least 1.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd, Serialize, Deserialize)]
#[serde(transparent)]
pub struct QualityWeight(f64);

impl QualityWeight {
    pub fn new(value: f64) -> Result<Self> {
        if value.is_finite() && value >= 1.0 {
            Ok(Self(value))
        } else {
            Err(Error::domain(format!("quality weight {value} must be >= 1")))
        }
    }

    pub fn value(self) -> f64 {
        self.0
    }
}

/// Maps mean anticipated utilization on `[lower, upper]` affinely onto
/// `[1, w_q]`.
pub fn quality_weight(q_bar: f64, lower: f64, upper: f64, w_q: f64) -> Result<QualityWeight> {
    check_domain(lower, upper)?;
    if !(w_q.is_finite() && w_q >= 1.0) {
        return Err(Error::domain(format!("w_q must be >= 1, got {w_q}")));
    }
    if !(lower..=upper).contains(&q_bar) {
        return Err(Error::domain(format!(
            "mean utilization {q_bar} outside [{lower}, {upper}]"
        )));
    }
    let width = upper - lower;
    QualityWeight::new(((w_q - 1.0) * (q_bar - lower) + width) / width)
}

/// Straight-line proxy from maximum acceptable monthly cost to indifference
/// probability: `1 - max_cost / max_possible_cost`.
pub fn max_cost_to_indifference(
    max_cost: f64,
    max_possible_cost: f64,
) -> Result<IndifferenceProbability> {
    if !(max_possible_cost.is_finite() && max_possible_cost > 0.0) {
        return Err(Error::domain(format!(
            "maximum possible cost must be positive, got {max_possible_cost}"
        )));
    }
    if !(0.0..=max_possible_cost).contains(&max_cost) {
        return Err(Error::domain(format!(
            "maximum cost {max_cost} outside [0, {max_possible_cost}]"
        )));
    }
    IndifferenceProbability::new(1.0 - max_cost / max_possible_cost)
}

/// Inverse of [`max_cost_to_indifference`].
pub fn indifference_to_max_cost(p: IndifferenceProbability, max_possible_cost: f64) -> f64 {
    (1.0 - p.value()) * max_possible_cost
}

/// Smallest admissible indifference probability for a reference cost: the
/// value of the straight line through the endpoints at `c_ref`.
pub fn indifference_lower_bound(c_ref: f64, lower: f64, upper: f64) -> Result<f64> {
    check_domain(lower, upper)?;
    if !(lower..=upper).contains(&c_ref) {
        return Err(Error::domain(format!(
            "reference value {c_ref} outside [{lower}, {upper}]"
        )));
    }
    Ok((c_ref - lower) / (upper - lower))
}

/// Scaled sum of cost and quality utility for one attribute at one target
/// pair: `w_c·U_cost(cost) + w·U_quality(quality)`.
pub fn attribute_total_utility(
    cost_target: f64,
    quality_target: f64,
    w_c: f64,
    w: QualityWeight,
    cost_curve: &UtilityCurve,
    quality_curve: &UtilityCurve,
) -> Result<f64> {
    if cost_curve.direction != Direction::Decreasing {
        return Err(Error::domain("cost curve must be decreasing"));
    }
    if quality_curve.direction != Direction::Increasing {
        return Err(Error::domain("quality curve must be increasing"));
    }
    if !(w_c.is_finite() && w_c >= 1.0) {
        return Err(Error::domain(format!("w_c must be >= 1, got {w_c}")));
    }
    Ok(w_c * cost_curve.evaluate(cost_target)? + w.value() * quality_curve.evaluate(quality_target)?)
}

/// Serializes infinite or NaN floats as `null` and reads `null` back as
/// `+∞`.
mod nonfinite_as_null {
    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(v: &f64, s: S) -> Result<S::Ok, S::Error> {
        if v.is_finite() {
            s.serialize_f64(*v)
        } else {
            s.serialize_none()
        }
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<f64, D::Error> {
        Ok(Option::<f64>::deserialize(d)?.unwrap_or(f64::INFINITY))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;

    const TOL: f64 = 1e-9;

    /// Independent oracle: with t = e^{-1/K} on [1, 5] the increasing member
    /// at 2 is (1 - t)/(1 - t^4). Solve for t by plain bisection on (0, 1).
    fn oracle_t_for_anchor_at_two(p: f64) -> f64 {
        let f = |t: f64| (1.0 - t) / (1.0 - t.powi(4)) - p;
        let (mut lo, mut hi) = (1e-12, 1.0 - 1e-12);
        // f is increasing in t on (0, 1) ... from 1 down toward 0.25 as t→1
        // so for p in (0.25, 1) the root is bracketed with f(lo) > 0 > f(hi).
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if f(mid) > 0.0 {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        0.5 * (lo + hi)
    }

    #[test]
    fn oracle_reproduces_documented_constants() {
        let t = oracle_t_for_anchor_at_two(0.4473);
        assert_abs_diff_eq!(t, 0.6180, epsilon = 2e-4);
        assert_abs_diff_eq!(-1.0 / t.ln(), 2.078, epsilon = 1e-3);
        let t = oracle_t_for_anchor_at_two(0.6158);
        assert_abs_diff_eq!(t, 0.40, epsilon = 2e-4);
        assert_abs_diff_eq!(-1.0 / t.ln(), 1.091, epsilon = 1e-3);
    }

    #[test]
    fn midpoint_probability_gives_linear_curve() {
        let c = solve_convergence_constant(1.0, 5.0, 3.0, 0.5, Direction::Decreasing, TOL).unwrap();
        assert!(c.linear);
        assert!(c.k.is_infinite());
        assert_abs_diff_eq!(c.evaluate(2.0).unwrap(), 0.75, epsilon = 1e-12);
    }

    #[test]
    fn increasing_fit_matches_oracle() {
        let c = solve_convergence_constant(1.0, 5.0, 2.0, 0.4473, Direction::Increasing, TOL).unwrap();
        let t = oracle_t_for_anchor_at_two(0.4473);
        assert_abs_diff_eq!(c.k, -1.0 / t.ln(), epsilon = 1e-6);
        assert_abs_diff_eq!(c.k, 2.078, epsilon = 1e-3);
        assert_abs_diff_eq!((-1.0 / c.k).exp(), 0.6180, epsilon = 1e-4);

        let c = solve_convergence_constant(1.0, 5.0, 2.0, 0.6158, Direction::Increasing, TOL).unwrap();
        assert_abs_diff_eq!(c.k, 1.091, epsilon = 1e-3);
        assert_abs_diff_eq!((-1.0 / c.k).exp(), 0.40, epsilon = 1e-4);
    }

    #[test]
    fn evaluate_examples() {
        let t = oracle_t_for_anchor_at_two(0.4473);
        let c = solve_convergence_constant(1.0, 5.0, 2.0, 0.4473, Direction::Increasing, TOL).unwrap();
        assert_eq!(c.evaluate(1.0).unwrap(), 0.0);
        assert_eq!(c.evaluate(5.0).unwrap(), 1.0);
        let expected = (1.0 - t.powi(3)) / (1.0 - t.powi(4));
        assert_abs_diff_eq!(c.evaluate(4.0).unwrap(), expected, epsilon = 1e-9);
        assert_abs_diff_eq!(c.evaluate(4.0).unwrap(), 0.8944, epsilon = 1e-4);

        let d = solve_convergence_constant(1.0, 5.0, 2.0, 0.3, Direction::Decreasing, TOL).unwrap();
        assert_eq!(d.evaluate(5.0).unwrap(), 0.0);
        assert_eq!(d.evaluate(1.0).unwrap(), 1.0);
    }

    #[test]
    fn evaluate_outside_domain_is_error() {
        let c = UtilityCurve::linear(1.0, 5.0, Direction::Increasing).unwrap();
        assert!(matches!(c.evaluate(0.99), Err(Error::Domain(_))));
        assert!(matches!(c.evaluate(5.01), Err(Error::Domain(_))));
        assert!(matches!(c.evaluate(f64::NAN), Err(Error::Domain(_))));
    }

    #[test]
    fn eqs_14_15_coefficients_reproduce_curve() {
        let c = UtilityCurve::from_constant(1.0, 5.0, 2.078, Direction::Increasing).unwrap();
        for x in [1.0, 1.7, 2.5, 3.3, 4.9, 5.0] {
            let direct = c.a - c.b * (-x / c.k).exp();
            assert_abs_diff_eq!(direct, c.value(x), epsilon = 1e-12);
        }
        let neg = UtilityCurve::from_constant(1.0, 5.0, -0.7, Direction::Increasing).unwrap();
        for x in [1.0, 2.0, 4.0, 5.0] {
            assert_abs_diff_eq!(neg.a - neg.b * (-x / neg.k).exp(), neg.value(x), epsilon = 1e-9);
        }
    }

    #[test]
    fn fit_error_paths() {
        use Direction::*;
        assert!(matches!(
            solve_convergence_constant(1.0, 5.0, 1.0, 0.5, Increasing, TOL),
            Err(Error::Domain(_))
        ));
        assert!(matches!(
            solve_convergence_constant(1.0, 5.0, 6.0, 0.5, Increasing, TOL),
            Err(Error::Domain(_))
        ));
        // endpoint probabilities have no finite K
        assert!(matches!(
            solve_convergence_constant(1.0, 5.0, 2.0, 1.0, Decreasing, TOL),
            Err(Error::ConstraintViolation(_))
        ));
        assert!(matches!(
            solve_convergence_constant(1.0, 5.0, 2.0, 0.0, Increasing, TOL),
            Err(Error::ConstraintViolation(_))
        ));
        // bound at c_ref = 3 is 0.5; the bound itself is admitted for fitting
        assert!(solve_convergence_constant(1.0, 5.0, 3.0, 0.5, Decreasing, TOL).is_ok());
        assert!(matches!(
            solve_convergence_constant(1.0, 5.0, 3.0, 0.45, Decreasing, TOL),
            Err(Error::ConstraintViolation(_))
        ));
        // a kink this sharp needs |K| far below the representable search range
        assert!(matches!(
            solve_convergence_constant(1.0, 5.0, 1.0 + 1e-9, 1.0 - 1e-12, Increasing, TOL),
            Err(Error::ConvergenceFailure(_))
        ));
    }

    #[test]
    fn both_curvature_signs_are_found() {
        let concave = solve_convergence_constant(1.0, 5.0, 2.0, 0.6, Direction::Increasing, TOL).unwrap();
        assert!(concave.k > 0.0);
        let convex = solve_convergence_constant(1.0, 5.0, 2.0, 0.1, Direction::Increasing, TOL).unwrap();
        assert!(convex.k < 0.0);
        for c in [concave, convex] {
            assert!((c.evaluate(2.0).unwrap() - c.value(2.0)).abs() < 1e-15);
        }
    }

    #[test]
    fn linear_limit_agrees_with_large_k_fit() {
        let line = UtilityCurve::linear(1.0, 5.0, Direction::Increasing).unwrap();
        // just outside the linear tolerance: the solver returns a huge-|K| fit
        let near = solve_convergence_constant(1.0, 5.0, 3.0, 0.5 + 1e-7, Direction::Increasing, TOL).unwrap();
        assert!(!near.linear);
        assert!(near.k.abs() > 1e5);
        let big = UtilityCurve::from_constant(1.0, 5.0, 4e6, Direction::Increasing).unwrap();
        for i in 0..=40 {
            let x = 1.0 + 0.1 * i as f64;
            assert_abs_diff_eq!(near.value(x), line.value(x), epsilon = 1e-6);
            assert_abs_diff_eq!(big.value(x), line.value(x), epsilon = 1e-6);
        }
    }

    #[test]
    fn quality_weight_examples() {
        assert_abs_diff_eq!(quality_weight(2.6, 1.0, 5.0, 2.0).unwrap().value(), 1.4, epsilon = 1e-12);
        assert_eq!(quality_weight(1.0, 1.0, 5.0, 2.0).unwrap().value(), 1.0);
        assert_abs_diff_eq!(quality_weight(2.5, 1.0, 5.0, 2.0).unwrap().value(), 1.375, epsilon = 1e-12);
        assert_eq!(quality_weight(5.0, 1.0, 5.0, 2.0).unwrap().value(), 2.0);
        assert!(quality_weight(0.5, 1.0, 5.0, 2.0).is_err());
        assert!(quality_weight(2.0, 1.0, 5.0, 0.9).is_err());
    }

    #[test]
    fn max_cost_examples() {
        assert_eq!(max_cost_to_indifference(0.0, 35.0).unwrap().value(), 1.0);
        assert_eq!(max_cost_to_indifference(35.0, 35.0).unwrap().value(), 0.0);
        assert_abs_diff_eq!(max_cost_to_indifference(5.33, 35.0).unwrap().value(), 0.8477, epsilon = 1e-4);
        assert!(max_cost_to_indifference(-1.0, 35.0).is_err());
        assert!(max_cost_to_indifference(36.0, 35.0).is_err());
        assert!(max_cost_to_indifference(1.0, 0.0).is_err());
    }

    #[test]
    fn lower_bound_examples() {
        assert_eq!(indifference_lower_bound(1.0, 1.0, 5.0).unwrap(), 0.0);
        assert_eq!(indifference_lower_bound(5.0, 1.0, 5.0).unwrap(), 1.0);
        assert_eq!(indifference_lower_bound(3.0, 1.0, 5.0).unwrap(), 0.5);
        assert!(indifference_lower_bound(0.0, 1.0, 5.0).is_err());
    }

    #[test]
    fn total_utility_examples() {
        let w = QualityWeight::new(1.375).unwrap();
        let any_cost = solve_convergence_constant(1.0, 5.0, 2.0, 0.7, Direction::Decreasing, TOL).unwrap();
        let any_q = UtilityCurve::from_constant(1.0, 5.0, 2.078, Direction::Increasing).unwrap();
        assert_eq!(attribute_total_utility(1.0, 1.0, 2.0, w, &any_cost, &any_q).unwrap(), 2.0);
        assert_eq!(attribute_total_utility(5.0, 5.0, 2.0, w, &any_cost, &any_q).unwrap(), 1.375);

        // cost curve whose increasing member has t = 0.40 at [1, 5]
        let t_cost: f64 = 0.40;
        let cost = UtilityCurve::from_constant(1.0, 5.0, -1.0 / t_cost.ln(), Direction::Decreasing).unwrap();
        let t_q = oracle_t_for_anchor_at_two(0.4473);
        let quality = UtilityCurve::from_constant(1.0, 5.0, -1.0 / t_q.ln(), Direction::Increasing).unwrap();
        let oracle = 2.0 * (1.0 - (1.0 - t_cost) / (1.0 - t_cost.powi(4)))
            + 1.375 * (1.0 - t_q) / (1.0 - t_q.powi(4));
        let got = attribute_total_utility(2.0, 2.0, 2.0, w, &cost, &quality).unwrap();
        assert_abs_diff_eq!(got, oracle, epsilon = 1e-12);
        assert_abs_diff_eq!(got, 1.3834, epsilon = 2e-4);

        // swapped directions are rejected
        assert!(attribute_total_utility(2.0, 2.0, 2.0, w, &quality, &cost).is_err());
    }

    #[test]
    fn curve_serde_round_trip_keeps_linear_marker() {
        let line = UtilityCurve::linear(1.0, 5.0, Direction::Decreasing).unwrap();
        let json = serde_json::to_string(&line).unwrap();
        assert!(json.contains("\"k\":null"));
        let back: UtilityCurve = serde_json::from_str(&json).unwrap();
        assert_eq!(back, line);
    }

    proptest! {
        #[test]
        fn anchor_and_endpoint_contract(
            c_ref in 1.05f64..4.95,
            frac in 0.01f64..0.99,
            inc in any::<bool>(),
        ) {
            let bound = (c_ref - 1.0) / 4.0;
            let direction = if inc { Direction::Increasing } else { Direction::Decreasing };
            // admissible probabilities for either direction
            let p = bound + frac * (1.0 - bound);
            let c = solve_convergence_constant(1.0, 5.0, c_ref, p, direction, TOL).unwrap();
            prop_assert!((c.evaluate(c_ref).unwrap() - p).abs() <= TOL);
            let (lo, hi) = if inc { (0.0, 1.0) } else { (1.0, 0.0) };
            prop_assert!((c.evaluate(1.0).unwrap() - lo).abs() <= TOL);
            prop_assert!((c.evaluate(5.0).unwrap() - hi).abs() <= TOL);
        }

        #[test]
        fn strictly_monotone_in_x(k in prop_oneof![-5.0f64..-0.2, 0.2f64..5.0], inc in any::<bool>()) {
            let direction = if inc { Direction::Increasing } else { Direction::Decreasing };
            let c = UtilityCurve::from_constant(1.0, 5.0, k, direction).unwrap();
            let mut prev = c.value(1.0);
            for i in 1..=80 {
                let v = c.value(1.0 + 0.05 * i as f64);
                if inc { prop_assert!(v > prev) } else { prop_assert!(v < prev) }
                prev = v;
            }
        }

        #[test]
        fn quality_weight_is_affine(x in 1.0f64..5.0, y in 1.0f64..5.0, alpha in 0.0f64..1.0) {
            let mix = alpha * x + (1.0 - alpha) * y;
            let lhs = quality_weight(mix, 1.0, 5.0, 2.0).unwrap().value();
            let rhs = alpha * quality_weight(x, 1.0, 5.0, 2.0).unwrap().value()
                + (1.0 - alpha) * quality_weight(y, 1.0, 5.0, 2.0).unwrap().value();
            prop_assert!((lhs - rhs).abs() <= 1e-12);
        }

        #[test]
        fn max_cost_proxy_affine_decreasing_and_invertible(a in 0.0f64..35.0, b in 0.0f64..35.0) {
            let pa = max_cost_to_indifference(a, 35.0).unwrap();
            let pb = max_cost_to_indifference(b, 35.0).unwrap();
            if a < b { prop_assert!(pa > pb) }
            let mid = max_cost_to_indifference(0.5 * (a + b), 35.0).unwrap().value();
            prop_assert!((mid - 0.5 * (pa.value() + pb.value())).abs() <= 1e-12);
            prop_assert!((indifference_to_max_cost(pa, 35.0) - a).abs() <= 1e-12);
        }
    }

    #[test]
    fn family_and_rate_monotone_in_probability() {
        for direction in [Direction::Increasing, Direction::Decreasing] {
            for c_ref in [1.2, 2.0, 3.0, 4.5] {
                let bound = (c_ref - 1.0) / 4.0;
                let ps: Vec<f64> = (1..30).map(|i| bound + (1.0 - bound) * i as f64 / 30.0).collect();
                let curves: Vec<_> = ps
                    .iter()
                    .map(|&p| solve_convergence_constant(1.0, 5.0, c_ref, p, direction, TOL).unwrap())
                    .collect();
                for pair in curves.windows(2) {
                    // rate moves monotonically with the anchor probability
                    match direction {
                        Direction::Increasing => assert!(pair[1].rate() > pair[0].rate()),
                        Direction::Decreasing => assert!(pair[1].rate() < pair[0].rate()),
                    }
                    for j in 1..20 {
                        let x = 1.0 + 4.0 * j as f64 / 20.0;
                        let (a, b) = (pair[0].value(x), pair[1].value(x));
                        assert!(b >= a, "c_ref {c_ref} x {x}");
                        // strictness is only observable away from saturation
                        if a > 1e-12 && b < 1.0 - 1e-12 {
                            assert!(b > a, "c_ref {c_ref} x {x}: {a} vs {b}");
                        }
                    }
                }
            }
        }
    }

    #[test]
    fn increasing_constant_monotone_above_bound() {
        // above the bound an increasing fit is concave, so K itself is
        // strictly decreasing in p
        for c_ref in [1.2, 2.0, 3.5] {
            let bound = (c_ref - 1.0) / 4.0;
            let ks: Vec<f64> = (1..40)
                .map(|i| bound + (1.0 - bound) * i as f64 / 40.0)
                .map(|p| solve_convergence_constant(1.0, 5.0, c_ref, p, Direction::Increasing, TOL).unwrap().k)
                .collect();
            assert!(ks.iter().all(|&k| k > 0.0));
            assert!(ks.windows(2).all(|w| w[1] < w[0]));
        }
    }
}
