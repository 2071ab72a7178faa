//! Penalty encodings that turn linear constraints and pairwise products into
//! QUBO terms.
//!
//! Real-valued `a·x ≤ b` constraints use a K-bit slack lattice scaled by
//! `α_K = (2^K − ½)/(b − c)`, where `c` is the smallest value `a·x` can take.
//! With that scale, `x` is feasible exactly when some slack setting brings the
//! penalty down to ¼ or below, and an infeasible `x` with excess `ε` has
//! minimum penalty `¼ + α_K ε + (α_K ε)²`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::qubo::{LinearExpr, QuboBuilder, Var};

/// Largest supported number of slack bits. Coefficients grow like `4^K`.
pub const MAX_SLACK_BITS: u32 = 20;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Sense {
    Equality,
    AtMost,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LinearConstraint {
    terms: Vec<(Var, f64)>,
    bound: f64,
    sense: Sense,
}

impl LinearConstraint {
    pub fn new(terms: Vec<(Var, f64)>, bound: f64, sense: Sense) -> Result<Self> {
        if !bound.is_finite() || terms.iter().any(|(_, a)| !a.is_finite()) {
            return Err(Error::Parameter("constraint data must be finite".into()));
        }
        if terms.iter().all(|&(_, a)| a == 0.0) {
            return Err(Error::Parameter(
                "constraint needs at least one nonzero coefficient".into(),
            ));
        }
        Ok(Self {
            terms,
            bound,
            sense,
        })
    }

    pub fn equality(terms: Vec<(Var, f64)>, bound: f64) -> Result<Self> {
        Self::new(terms, bound, Sense::Equality)
    }

    pub fn at_most(terms: Vec<(Var, f64)>, bound: f64) -> Result<Self> {
        Self::new(terms, bound, Sense::AtMost)
    }

    pub fn terms(&self) -> &[(Var, f64)] {
        &self.terms
    }

    pub fn bound(&self) -> f64 {
        self.bound
    }

    pub fn sense(&self) -> Sense {
        self.sense
    }

    pub fn coefficients(&self) -> Vec<f64> {
        self.terms.iter().map(|&(_, a)| a).collect()
    }

    fn lhs(&self, builder: &QuboBuilder) -> Result<LinearExpr> {
        let mut expr = LinearExpr::new();
        for (var, a) in &self.terms {
            expr.push(builder.index(var)?, *a);
        }
        Ok(expr)
    }
}

/// Minimum of `a·x` over binary `x`: the sum of the negative coefficients.
pub fn lower_bound(a: &[f64]) -> f64 {
    a.iter().filter(|&&v| v < 0.0).sum()
}

/// Scale and range of a K-bit slack lattice for `c ≤ a·x ≤ b`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SlackEncoding {
    bits: u32,
    lower: f64,
    upper: f64,
    scale: f64,
}

impl SlackEncoding {
    /// Encoding with the canonical scale `(2^K − ½)/(b − c)`.
    pub fn new(bits: u32, lower: f64, upper: f64) -> Result<Self> {
        check_bits(bits)?;
        if !(upper > lower) {
            return Err(Error::DegenerateRange { lower, upper });
        }
        let scale = (pow2(bits) - 0.5) / (upper - lower);
        Ok(Self {
            bits,
            lower,
            upper,
            scale,
        })
    }

    /// Same range with an arbitrary positive scale, for probing how the
    /// feasibility test behaves away from the canonical value.
    pub fn with_scale(bits: u32, lower: f64, upper: f64, scale: f64) -> Result<Self> {
        let mut enc = Self::new(bits, lower, upper)?;
        if !(scale > 0.0 && scale.is_finite()) {
            return Err(Error::Parameter(format!("slack scale {scale} must be positive")));
        }
        enc.scale = scale;
        Ok(enc)
    }

    pub fn bits(&self) -> u32 {
        self.bits
    }

    pub fn lower(&self) -> f64 {
        self.lower
    }

    pub fn upper(&self) -> f64 {
        self.upper
    }

    pub fn scale(&self) -> f64 {
        self.scale
    }

    /// Largest representable slack value, `2^K − 1`.
    pub fn max_slack(&self) -> u64 {
        (1u64 << self.bits) - 1
    }

    /// `α_K (raw − c)`.
    pub fn scaled(&self, raw: f64) -> f64 {
        self.scale * (raw - self.lower)
    }
}

fn check_bits(bits: u32) -> Result<()> {
    if bits == 0 || bits > MAX_SLACK_BITS {
        return Err(Error::Parameter(format!(
            "slack bit count {bits} outside 1..={MAX_SLACK_BITS}"
        )));
    }
    Ok(())
}

fn pow2(bits: u32) -> f64 {
    (1u64 << bits) as f64
}

/// Adds `weight · (a·x − b)²`.
pub fn equality_penalty(
    constraint: &LinearConstraint,
    builder: &mut QuboBuilder,
    weight: f64,
) -> Result<()> {
    if constraint.sense != Sense::Equality {
        return Err(Error::Usage(
            "equality_penalty needs an equality constraint".into(),
        ));
    }
    let mut expr = constraint.lhs(builder)?;
    expr.add_constant(-constraint.bound);
    builder.add_squared(&expr, weight);
    Ok(())
}

/// `scale · (shift + body) + extra − Σ 2^i s_i`, the residual squared by the
/// slack-based penalties. Callers choose the sign of `shift`.
pub fn slack_residual(
    body: &LinearExpr,
    shift: f64,
    scale: f64,
    extra: Option<&LinearExpr>,
    slack: &[usize],
) -> LinearExpr {
    let mut r = body.clone();
    r.add_constant(shift);
    r.scale(scale);
    if let Some(extra) = extra {
        r.terms.extend_from_slice(&extra.terms);
        r.constant += extra.constant;
    }
    for (i, &s) in slack.iter().enumerate() {
        r.push(s, -pow2(i as u32));
    }
    r
}

/// Registers `bits` slack variables named by `slack` and adds
/// `weight · (α_K (a·x − c) − Σ 2^i z_i)²`.
pub fn inequality_penalty(
    constraint: &LinearConstraint,
    bits: u32,
    mut slack: impl FnMut(usize) -> Var,
    builder: &mut QuboBuilder,
    weight: f64,
) -> Result<SlackEncoding> {
    if constraint.sense != Sense::AtMost {
        return Err(Error::Usage(
            "inequality_penalty needs an at-most constraint".into(),
        ));
    }
    check_bits(bits)?;
    let lower = lower_bound(&constraint.coefficients());
    let encoding = SlackEncoding::new(bits, lower, constraint.bound)?;
    let body = constraint.lhs(builder)?;
    let slack_idx: Vec<usize> = (0..bits as usize)
        .map(|i| builder.add_variable(slack(i)))
        .collect();
    let residual = slack_residual(&body, -lower, encoding.scale, None, &slack_idx);
    builder.add_squared(&residual, weight);
    Ok(encoding)
}

/// Slack layout of the exact integer encoding.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IntegerSlack {
    pub lower: f64,
    /// Coefficient of each slack bit; together they reach exactly `0..=b−c`.
    pub coefficients: Vec<f64>,
}

/// Exact penalty for integer `a·x ≤ b`:
/// `weight · (a·x − c − Σ_{i<I−1} 2^i z_i − z_{I−1} t)²` where `I` is the
/// smallest integer with `2^I − 1 ≥ b − c` and `t = (b − c) − (2^{I−1} − 1)`,
/// so the slack values cover `0..=b−c` and nothing beyond.
pub fn integer_slack_penalty(
    constraint: &LinearConstraint,
    mut slack: impl FnMut(usize) -> Var,
    builder: &mut QuboBuilder,
    weight: f64,
) -> Result<IntegerSlack> {
    if constraint.sense != Sense::AtMost {
        return Err(Error::Usage(
            "integer_slack_penalty needs an at-most constraint".into(),
        ));
    }
    let a = constraint.coefficients();
    let integral = |v: f64| v.fract() == 0.0;
    if !a.iter().copied().all(integral) || !integral(constraint.bound) {
        return Err(Error::Usage(
            "integer_slack_penalty needs integer data; use inequality_penalty instead".into(),
        ));
    }
    let lower = lower_bound(&a);
    let range = constraint.bound - lower;
    if range < 1.0 {
        return Err(Error::DegenerateRange {
            lower,
            upper: constraint.bound,
        });
    }
    let mut bits = 0u32;
    while pow2(bits) - 1.0 < range {
        bits += 1;
    }
    check_bits(bits)?;
    let mut coefficients: Vec<f64> = (0..bits - 1).map(pow2).collect();
    coefficients.push(range - (pow2(bits - 1) - 1.0));

    let mut expr = constraint.lhs(builder)?;
    expr.add_constant(-lower);
    for (i, &t) in coefficients.iter().enumerate() {
        let s = builder.add_variable(slack(i));
        expr.push(s, -t);
    }
    builder.add_squared(&expr, weight);
    Ok(IntegerSlack {
        lower,
        coefficients,
    })
}

/// `M(x_i, x_j, z) = x_i x_j − 2 z (x_i + x_j) + 3 z`.
pub fn product_penalty_value(xi: bool, xj: bool, z: bool) -> f64 {
    let (a, b, c) = (xi as u8 as f64, xj as u8 as f64, z as u8 as f64);
    a * b - 2.0 * c * (a + b) + 3.0 * c
}

/// Adds `weight · M(x_i, x_j, z)`, registering `z`, which must be fresh.
pub fn degree_reduction(
    xi: Var,
    xj: Var,
    z: Var,
    builder: &mut QuboBuilder,
    weight: f64,
) -> Result<usize> {
    if xi == xj {
        return Err(Error::Usage(format!(
            "degree reduction needs distinct factors, got {xi} twice"
        )));
    }
    if builder.registry().contains(&z) {
        return Err(Error::Aliasing(z.to_string()));
    }
    let i = builder.index(&xi)?;
    let j = builder.index(&xj)?;
    let k = builder.add_variable(z);
    builder.add_quadratic(i, j, weight);
    builder.add_quadratic(k, i, -2.0 * weight);
    builder.add_quadratic(k, j, -2.0 * weight);
    builder.add_linear(k, 3.0 * weight);
    Ok(k)
}

/// Best slack value and penalty for an already scaled value:
/// `ẑ = clamp(round(scaled), 0, 2^K − 1)` with ties to even.
pub fn min_slack_scaled(bits: u32, scaled: f64) -> (u64, f64) {
    let max = ((1u64 << bits) - 1) as f64;
    let z = scaled.round_ties_even().clamp(0.0, max);
    let gap = scaled - z;
    (z as u64, gap * gap)
}

/// Closed-form `min_z P(x, z)` for a raw left-hand side value `a·x`.
pub fn min_slack_value(encoding: &SlackEncoding, raw: f64) -> (u64, f64) {
    min_slack_scaled(encoding.bits, encoding.scaled(raw))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::qubo::QuadraticModel;

    fn bits_of(mask: u64, n: usize) -> Vec<bool> {
        (0..n).map(|i| mask >> i & 1 == 1).collect()
    }

    fn builder_with(n: usize) -> QuboBuilder {
        let mut b = QuboBuilder::new();
        for i in 0..n {
            b.add_variable(Var::Bit(i));
        }
        b
    }

    fn terms(a: &[f64]) -> Vec<(Var, f64)> {
        a.iter().enumerate().map(|(i, &c)| (Var::Bit(i), c)).collect()
    }

    fn slack(i: usize) -> Var {
        Var::Slack { group: 0, bit: i }
    }

    /// Minimum over slack assignments of a compiled model with `n` problem
    /// variables followed by slack variables.
    fn min_over_slack(m: &QuadraticModel, x: &[bool]) -> f64 {
        let n = x.len();
        let k = m.num_variables() - n;
        (0..1u64 << k)
            .map(|z| {
                let mut full = x.to_vec();
                full.extend(bits_of(z, k));
                m.energy(&full)
            })
            .fold(f64::INFINITY, f64::min)
    }

    #[test]
    fn equality_examples() {
        let c = LinearConstraint::equality(terms(&[1.0, 1.0]), 1.0).unwrap();
        let mut b = builder_with(2);
        equality_penalty(&c, &mut b, 1.0).unwrap();
        let (m, _) = b.finish();
        assert_eq!(m.energy(&[true, false]), 0.0);
        assert_eq!(m.energy(&[true, true]), 1.0);
        assert_eq!(m.energy(&[false, false]), 1.0);

        let ineq = LinearConstraint::at_most(terms(&[1.0]), 1.0).unwrap();
        assert!(matches!(
            equality_penalty(&ineq, &mut builder_with(1), 1.0),
            Err(Error::Usage(_))
        ));
    }

    #[test]
    fn lower_bound_examples() {
        assert_eq!(lower_bound(&[-0.3, 0.3]), -0.3);
        assert_eq!(lower_bound(&[0.2, 0.5]), 0.0);
        assert_eq!(lower_bound(&[-1.0, -2.0]), -3.0);
    }

    #[test]
    fn constraint_validation() {
        assert!(LinearConstraint::at_most(terms(&[0.0, 0.0]), 1.0).is_err());
        assert!(LinearConstraint::at_most(terms(&[f64::INFINITY]), 1.0).is_err());
    }

    #[test]
    fn single_variable_inequality() {
        let c = LinearConstraint::at_most(terms(&[1.0]), 0.5).unwrap();
        let mut b = builder_with(1);
        let enc = inequality_penalty(&c, 1, slack, &mut b, 1.0).unwrap();
        assert_eq!(enc.scale(), 3.0);
        assert_eq!(enc.lower(), 0.0);
        let (m, _) = b.finish();
        assert_eq!(m.energy(&[false, false]), 0.0);
        assert_eq!(min_over_slack(&m, &[true]), 4.0);
        // ¼ + α_K ε + (α_K ε)² with ε = ½
        assert_eq!(0.25 + 1.5 + 2.25, 4.0);
    }

    #[test]
    fn two_variable_inequality_enumeration() {
        let a = [0.3, 0.4];
        let c = LinearConstraint::at_most(terms(&a), 0.5).unwrap();
        let mut b = builder_with(2);
        inequality_penalty(&c, 2, slack, &mut b, 1.0).unwrap();
        let (m, _) = b.finish();
        for mask in 0..4 {
            let x = bits_of(mask, 2);
            let lhs: f64 = a.iter().zip(&x).filter(|p| *p.1).map(|p| p.0).sum();
            let feasible = lhs <= 0.5;
            assert_eq!(min_over_slack(&m, &x) <= 0.25, feasible, "x={x:?}");
        }
    }

    #[test]
    fn inequality_errors() {
        let c = LinearConstraint::at_most(terms(&[1.0, 1.0]), 0.0).unwrap();
        assert!(matches!(
            inequality_penalty(&c, 3, slack, &mut builder_with(2), 1.0),
            Err(Error::DegenerateRange { .. })
        ));
        let c = LinearConstraint::at_most(terms(&[1.0, 1.0]), 1.0).unwrap();
        assert!(matches!(
            inequality_penalty(&c, 21, slack, &mut builder_with(2), 1.0),
            Err(Error::Parameter(_))
        ));
        assert!(matches!(
            inequality_penalty(&c, 0, slack, &mut builder_with(2), 1.0),
            Err(Error::Parameter(_))
        ));
    }

    #[test]
    fn integer_slack_examples() {
        let c = LinearConstraint::at_most(terms(&[1.0, 2.0]), 2.0).unwrap();
        let mut b = builder_with(2);
        let layout = integer_slack_penalty(&c, slack, &mut b, 1.0).unwrap();
        assert_eq!(layout.coefficients, vec![1.0, 1.0]);
        let (m, _) = b.finish();
        assert_eq!(min_over_slack(&m, &[false, true]), 0.0);
        assert_eq!(min_over_slack(&m, &[true, true]), 1.0);
        assert_eq!(m.energy(&[false, false, false, false]), 0.0);
    }

    #[test]
    fn integer_slack_is_exact_across_ranges() {
        // Ranges 1..=20, including 4 where 2^I − 1 − (b − c) would overshoot.
        for b in 1..=20 {
            let a = [1.0, 2.0, 4.0, 8.0, -3.0];
            let c = LinearConstraint::at_most(terms(&a), b as f64).unwrap();
            let mut builder = builder_with(a.len());
            let layout = integer_slack_penalty(&c, slack, &mut builder, 1.0).unwrap();
            assert!(layout.coefficients.iter().all(|&t| t >= 1.0));
            let (m, _) = builder.finish();
            for mask in 0..1u64 << a.len() {
                let x = bits_of(mask, a.len());
                let lhs: f64 = a.iter().zip(&x).filter(|p| *p.1).map(|p| p.0).sum();
                let met = lhs <= b as f64;
                assert_eq!(min_over_slack(&m, &x) == 0.0, met, "b={b} x={x:?}");
            }
        }
    }

    #[test]
    fn integer_slack_rejects_bad_data() {
        let c = LinearConstraint::at_most(terms(&[1.5]), 2.0).unwrap();
        assert!(matches!(
            integer_slack_penalty(&c, slack, &mut builder_with(1), 1.0),
            Err(Error::Usage(_))
        ));
        let c = LinearConstraint::at_most(terms(&[1.0]), 0.0).unwrap();
        assert!(matches!(
            integer_slack_penalty(&c, slack, &mut builder_with(1), 1.0),
            Err(Error::DegenerateRange { .. })
        ));
    }

    #[test]
    fn product_penalty_truth_table() {
        assert_eq!(product_penalty_value(true, true, true), 0.0);
        assert_eq!(product_penalty_value(true, true, false), 1.0);
        assert_eq!(product_penalty_value(false, false, true), 3.0);
        for mask in 0..8u8 {
            let (a, b, z) = (mask & 1 == 1, mask & 2 == 2, mask & 4 == 4);
            let m = product_penalty_value(a, b, z);
            assert!(m >= 0.0);
            assert_eq!(m == 0.0, z == (a && b));
        }
    }

    #[test]
    fn degree_reduction_emits_gadget() {
        let mut b = builder_with(2);
        let z = Var::Slack { group: 9, bit: 0 };
        degree_reduction(Var::Bit(0), Var::Bit(1), z, &mut b, 1.0).unwrap();
        assert!(matches!(
            degree_reduction(Var::Bit(0), Var::Bit(1), z, &mut b, 1.0),
            Err(Error::Aliasing(_))
        ));
        assert!(matches!(
            degree_reduction(Var::Bit(0), Var::Bit(0), Var::Bit(5), &mut b, 1.0),
            Err(Error::Usage(_))
        ));
        let (m, _) = b.finish();
        for mask in 0..8u64 {
            let x = bits_of(mask, 3);
            assert_eq!(m.energy(&x), product_penalty_value(x[0], x[1], x[2]));
        }
    }

    #[test]
    fn min_slack_examples() {
        let (z, p) = min_slack_scaled(2, 0.4);
        assert_eq!(z, 0);
        assert!((p - 0.16).abs() < 1e-12);
        let (z, p) = min_slack_scaled(2, 3.6);
        assert_eq!(z, 3);
        assert!((p - 0.36).abs() < 1e-12);
        let (z, p) = min_slack_scaled(2, -0.2);
        assert_eq!(z, 0);
        assert!((p - 0.04).abs() < 1e-12);
        assert_eq!(min_slack_scaled(3, 2.5).0, 2);
        assert_eq!(min_slack_scaled(3, 3.5).0, 4);
    }

    #[test]
    fn min_slack_value_uses_encoding() {
        let enc = SlackEncoding::new(2, -1.0, 1.0).unwrap();
        // α = 3.5 / 2 = 1.75, raw 0 → scaled 1.75 → ẑ = 2
        let (z, p) = min_slack_value(&enc, 0.0);
        assert_eq!(z, 2);
        assert!((p - 0.0625).abs() < 1e-12);
    }
}
