use std::f64::consts::PI;

use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};
use statrs::function::gamma::gamma;

use crate::error::{Error, Result};

/// `B(0) = e^{−iπ/8} Γ(5/4) / π`.
pub fn b_at_origin() -> C64 {
    C64::from_polar(gamma(1.25) / PI, -PI / 8.0)
}

/// `M = 1 / (B(0) Γ(3/4))`, equal to `2√2 e^{iπ/8}`.
pub fn universal_constant() -> C64 {
    1.0 / (b_at_origin() * gamma(0.75))
}

fn cis(theta: f64) -> C64 {
    C64::from_polar(1.0, theta)
}

/// Value of `L^μ g(t, 0) / g(t)`:
/// `(M/8)(e^{−iπ(1+3μ)/8} + e^{−iπ(1−5μ)/8}) / sin((1−μ)π/4)`.
///
/// At `μ ≡ 1 (mod 4)` numerator and denominator vanish together and the
/// finite limit is returned.
pub fn trace_value(mu: f64) -> C64 {
    let m8 = universal_constant() / 8.0;
    let s = ((1.0 - mu) * PI / 4.0).sin();
    if s.abs() > 1e-9 {
        m8 * (cis(-PI * (1.0 + 3.0 * mu) / 8.0) + cis(-PI * (1.0 - 5.0 * mu) / 8.0)) / s
    } else {
        // numerator = 2 e^{−iπ/8} e^{iπμ/8} cos(πμ/2); ratio of derivatives
        let num = -PI * (PI * mu / 2.0).sin();
        let den = -(PI / 4.0) * ((1.0 - mu) * PI / 4.0).cos();
        m8 * cis(-PI / 8.0) * cis(PI * mu / 8.0) * (num / den)
    }
}

/// Row phase factor `M e^{iθ_k} / 8` of the order-`k` trace coefficient,
/// with `θ = (−π/8, π/4, 5π/8, π)`.
pub fn order_phase(k: usize) -> C64 {
    const THETA: [f64; 4] = [-PI / 8.0, PI / 4.0, 5.0 * PI / 8.0, PI];
    universal_constant() * cis(THETA[k]) / 8.0
}

/// Column factor `e^{−3iπλ/8} + e^{5iπλ/8}`; vanishes exactly at odd integers.
pub fn prefactor_polynomial(lambda: f64) -> C64 {
    cis(-3.0 * PI * lambda / 8.0) + cis(5.0 * PI * lambda / 8.0)
}

pub(crate) fn check_order(lambda: f64) -> Result<()> {
    if !lambda.is_finite() {
        return Err(Error::DegenerateOrder { lambda, order: 0 });
    }
    let r = lambda.round();
    if (lambda - r).abs() < 1e-12 && (r as i64).rem_euclid(2) == 1 {
        let order = if (r as i64).rem_euclid(4) == 1 { 0 } else { 2 };
        return Err(Error::DegenerateOrder { lambda, order });
    }
    Ok(())
}

/// Coefficients `ā, b̄, c̄, d̄` with the order phase and column factor removed.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BarredCoefficients {
    pub a: C64,
    pub b: C64,
    pub c: C64,
    pub d: C64,
}

impl BarredCoefficients {
    pub fn order(&self, k: usize) -> C64 {
        [self.a, self.b, self.c, self.d][k]
    }
}

/// `ā = 1/sin((1−λ)π/4)`, `b̄ = −i tan(λπ/2)/cos(λπ/4)`, `c̄ = 1/sin((3−λ)π/4)`,
/// `d̄ = −i tan(λπ/2)/sin(λπ/4)`.
///
/// `b̄` and `d̄` are evaluated as `−2i sin(λπ/4)/cos(λπ/2)` and
/// `−2i cos(λπ/4)/cos(λπ/2)`, which removes the `0/0` at multiples of 2 and 4.
pub fn normalized_coefficients(lambda: f64) -> Result<BarredCoefficients> {
    check_order(lambda)?;
    let q = lambda * PI / 4.0;
    let h = (lambda * PI / 2.0).cos();
    let i2 = C64::new(0.0, -2.0);
    Ok(BarredCoefficients {
        a: C64::new(1.0 / ((1.0 - lambda) * PI / 4.0).sin(), 0.0),
        b: i2 * q.sin() / h,
        c: C64::new(1.0 / ((3.0 - lambda) * PI / 4.0).sin(), 0.0),
        d: i2 * q.cos() / h,
    })
}

/// Sign convention for the trace rows of the coupling matrix.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TraceConvention {
    /// Order-`k` rows use the coefficients `a, b, c, d` as they stand.
    #[default]
    Unsigned,
    /// Order-`k` rows carry `(−1)^k`, the factor produced by differentiating the
    /// Weyl kernel `(y − x)^{λ−1}` in `x`. This is the trace map of the
    /// operators actually evaluated by `forcing_kernel`.
    Alternating,
}

impl TraceConvention {
    pub fn sign(self, k: usize) -> f64 {
        match self {
            TraceConvention::Unsigned => 1.0,
            TraceConvention::Alternating if k % 2 == 1 => -1.0,
            TraceConvention::Alternating => 1.0,
        }
    }
}

/// Trace multipliers of orders 0..3 for one forcing order λ.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TraceCoefficients {
    pub lambda: f64,
    pub a: C64,
    pub b: C64,
    pub c: C64,
    pub d: C64,
}

impl TraceCoefficients {
    /// Exponential-pair form: the order-`k` coefficient is the trace value at `λ − k`.
    pub fn new(lambda: f64) -> Result<Self> {
        check_order(lambda)?;
        Ok(Self {
            lambda,
            a: trace_value(lambda),
            b: trace_value(lambda - 1.0),
            c: trace_value(lambda - 2.0),
            d: trace_value(lambda - 3.0),
        })
    }

    /// Factored form `order_phase(k) · P(λ) · barred_k(λ)`.
    pub fn factored(lambda: f64) -> Result<Self> {
        let bar = normalized_coefficients(lambda)?;
        let p = prefactor_polynomial(lambda);
        Ok(Self {
            lambda,
            a: order_phase(0) * p * bar.a,
            b: order_phase(1) * p * bar.b,
            c: order_phase(2) * p * bar.c,
            d: order_phase(3) * p * bar.d,
        })
    }

    pub fn order(&self, k: usize) -> C64 {
        [self.a, self.b, self.c, self.d][k]
    }

    pub fn signed(&self, k: usize, convention: TraceConvention) -> C64 {
        self.order(k) * convention.sign(k)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn constant_closed_form() {
        let m = universal_constant();
        assert!((m.norm() - 2.0 * 2f64.sqrt()).abs() < 1e-12);
        assert!((m.arg() - PI / 8.0).abs() < 1e-12);
    }

    #[test]
    fn order_zero_at_zero_is_one() {
        let t = TraceCoefficients::new(0.0).unwrap();
        assert!((t.a - C64::new(1.0, 0.0)).norm() < 1e-14);
        assert!(t.b.norm() < 1e-14);
    }

    #[test]
    fn removable_points_are_finite() {
        let bar = normalized_coefficients(0.0).unwrap();
        assert_eq!(bar.b, C64::new(0.0, 0.0));
        assert!((bar.d - C64::new(0.0, -2.0)).norm() < 1e-15);
        let near = TraceCoefficients::new(1e-7).unwrap();
        let at = TraceCoefficients::factored(0.0).unwrap();
        assert!((near.d - at.d).norm() < 1e-5);
        assert!((trace_value(1.0) - trace_value(1.0 + 1e-7)).norm() < 1e-5);
    }

    #[test]
    fn odd_orders_are_degenerate() {
        for l in [1.0, -1.0, 3.0, -3.0] {
            assert!(matches!(normalized_coefficients(l), Err(Error::DegenerateOrder { .. })));
            assert!(prefactor_polynomial(l).norm() < 1e-14);
        }
    }
}
