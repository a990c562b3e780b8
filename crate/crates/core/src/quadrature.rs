//! Gauss–Legendre rules and adaptive subdivision on finite intervals.

use std::f64::consts::PI;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::scalar::Neumaier;

/// Nodes and weights of the `n`-point Gauss–Legendre rule on `[-1, 1]`.
#[derive(Clone, Debug)]
pub struct GaussLegendre {
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
}

impl GaussLegendre {
    pub fn new(n: usize) -> Self {
        assert!(n >= 1, "need at least one node");
        let mut nodes = vec![0.0; n];
        let mut weights = vec![0.0; n];
        let m = n.div_ceil(2);
        for i in 0..m {
            // Tricomi initial guess, then Newton on P_n.
            let mut x = (PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
            let mut dp = 0.0;
            for _ in 0..100 {
                let (p, d) = legendre_with_derivative(n, x);
                dp = d;
                let dx = p / d;
                x -= dx;
                if dx.abs() < 1e-16 {
                    break;
                }
            }
            let (_, d) = legendre_with_derivative(n, x);
            dp = if d != 0.0 { d } else { dp };
            let w = 2.0 / ((1.0 - x * x) * dp * dp);
            nodes[i] = -x;
            nodes[n - 1 - i] = x;
            weights[i] = w;
            weights[n - 1 - i] = w;
        }
        GaussLegendre { nodes, weights }
    }

    /// Apply the rule on `[a, b]`.
    pub fn integrate<F: FnMut(f64) -> f64>(&self, a: f64, b: f64, mut f: F) -> f64 {
        let half = 0.5 * (b - a);
        let mid = 0.5 * (a + b);
        let mut acc = Neumaier::default();
        for (x, w) in self.nodes.iter().zip(&self.weights) {
            acc.add(w * f(mid + half * x));
        }
        acc.total() * half
    }

    /// Nodes and weights mapped to `[a, b]`.
    pub fn mapped(&self, a: f64, b: f64) -> impl Iterator<Item = (f64, f64)> + '_ {
        let half = 0.5 * (b - a);
        let mid = 0.5 * (a + b);
        self.nodes.iter().zip(&self.weights).map(move |(x, w)| (mid + half * x, w * half))
    }
}

fn legendre_with_derivative(n: usize, x: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = x;
    if n == 0 {
        return (1.0, 0.0);
    }
    for k in 2..=n {
        let kf = k as f64;
        let p2 = ((2.0 * kf - 1.0) * x * p1 - (kf - 1.0) * p0) / kf;
        p0 = p1;
        p1 = p2;
    }
    let d = n as f64 * (x * p1 - p0) / (x * x - 1.0);
    (p1, d)
}

/// Integral value with an absolute error estimate.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Estimate {
    pub value: f64,
    pub error: f64,
}

/// Complex-valued counterpart of [`Estimate`].
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ComplexEstimate {
    pub value: Complex64,
    pub error: f64,
}

const MAX_DEPTH: u32 = 40;
/// Relative change below which a panel is limited by rounding, not by the rule.
const ROUNDOFF: f64 = 64.0 * f64::EPSILON;

/// Adaptive bisection: a panel is accepted when the rule on the panel and
/// on its two halves agree to within the panel's share of `abs_tol`.
pub fn adaptive<F: Fn(f64) -> f64>(rule: &GaussLegendre, a: f64, b: f64, abs_tol: f64, f: &F) -> Result<Estimate> {
    let est = adaptive_complex(rule, a, b, abs_tol, &|t| Complex64::new(f(t), 0.0))?;
    Ok(Estimate { value: est.value.re, error: est.error })
}

pub fn adaptive_complex<F: Fn(f64) -> Complex64>(
    rule: &GaussLegendre,
    a: f64,
    b: f64,
    abs_tol: f64,
    f: &F,
) -> Result<ComplexEstimate> {
    let apply = |lo: f64, hi: f64| -> Complex64 {
        let mut re = Neumaier::default();
        let mut im = Neumaier::default();
        for (t, w) in rule.mapped(lo, hi) {
            let v = f(t) * w;
            re.add(v.re);
            im.add(v.im);
        }
        Complex64::new(re.total(), im.total())
    };
    let mut stack = vec![(a, b, apply(a, b), 0u32)];
    let mut re = Neumaier::default();
    let mut im = Neumaier::default();
    let mut error = 0.0;
    let width = (b - a).abs().max(f64::MIN_POSITIVE);
    while let Some((lo, hi, whole, depth)) = stack.pop() {
        let mid = 0.5 * (lo + hi);
        let left = apply(lo, mid);
        let right = apply(mid, hi);
        let diff = (left + right - whole).norm();
        let share = abs_tol * (hi - lo).abs() / width;
        if diff <= share.max(ROUNDOFF * (left.norm() + right.norm())) {
            re.add(left.re + right.re);
            im.add(left.im + right.im);
            error += diff;
        } else if depth >= MAX_DEPTH {
            return Err(Error::QuadratureNotConverged(format!(
                "panel [{lo:e}, {hi:e}] still changes by {diff:e} at depth {depth}"
            )));
        } else {
            stack.push((lo, mid, left, depth + 1));
            stack.push((mid, hi, right, depth + 1));
        }
    }
    Ok(ComplexEstimate { value: Complex64::new(re.total(), im.total()), error })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rule_is_exact_for_polynomials() {
        let r = GaussLegendre::new(8);
        assert!((r.weights.iter().sum::<f64>() - 2.0).abs() < 1e-14);
        // ∫_0^1 x^15 = 1/16
        assert!((r.integrate(0.0, 1.0, |x| x.powi(15)) - 1.0 / 16.0).abs() < 1e-15);
    }

    #[test]
    fn adaptive_handles_peaked_integrands() {
        let r = GaussLegendre::new(20);
        let k = 200.0;
        let est = adaptive(&r, 0.0, 10.0, 1e-14, &|t: f64| (-k * t).exp()).unwrap();
        assert!((est.value - (1.0 - (-k * 10.0f64).exp()) / k).abs() < 1e-15);
    }

    #[test]
    fn gaussian_moment_matches_factorial() {
        // ∫_0^∞ t^5 e^{-t} dt = 120
        let r = GaussLegendre::new(24);
        let est = adaptive(&r, 0.0, 80.0, 1e-12, &|t: f64| t.powi(5) * (-t).exp()).unwrap();
        assert!((est.value - 120.0).abs() < 1e-10);
    }
}
