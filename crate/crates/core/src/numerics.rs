//! Numerical building blocks: Gauss-Legendre rules, bracketed bisection and
//! quantiles of the regularized incomplete gamma function.

use statrs::function::erf::erfc_inv;
use statrs::function::gamma::{gamma_lr, gamma_ur, ln_gamma};

use crate::error::{ChartError, Result};

/// Gauss-Legendre rule on [-1, 1].
#[derive(Debug, Clone)]
pub struct GaussLegendre {
    nodes: Vec<f64>,
    weights: Vec<f64>,
}

impl GaussLegendre {
    pub fn new(order: usize) -> Self {
        assert!(order >= 1, "quadrature order must be positive");
        let n = order;
        let mut nodes = vec![0.0; n];
        let mut weights = vec![0.0; n];
        let nf = n as f64;
        for i in 0..n.div_ceil(2) {
            // Tricomi initial guess, refined by Newton on P_n.
            let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (nf + 0.5)).cos();
            let mut dp = 1.0;
            for _ in 0..100 {
                let (p, d) = legendre_with_derivative(n, x);
                dp = d;
                let dx = p / d;
                x -= dx;
                if dx.abs() <= 1e-16 {
                    break;
                }
            }
            let (_, d) = legendre_with_derivative(n, x);
            if d.is_finite() {
                dp = d;
            }
            let w = 2.0 / ((1.0 - x * x) * dp * dp);
            nodes[i] = -x;
            nodes[n - 1 - i] = x;
            weights[i] = w;
            weights[n - 1 - i] = w;
        }
        if n % 2 == 1 {
            nodes[n / 2] = 0.0;
        }
        Self { nodes, weights }
    }

    pub fn order(&self) -> usize {
        self.nodes.len()
    }

    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    /// Integrates `f` over [a, b].
    pub fn integrate<F: FnMut(f64) -> f64>(&self, a: f64, b: f64, mut f: F) -> f64 {
        let half = 0.5 * (b - a);
        let mid = 0.5 * (b + a);
        self.nodes
            .iter()
            .zip(&self.weights)
            .map(|(&x, &w)| w * f(mid + half * x))
            .sum::<f64>()
            * half
    }
}

fn legendre_with_derivative(n: usize, x: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = x;
    for j in 2..=n {
        let jf = j as f64;
        let p2 = ((2.0 * jf - 1.0) * x * p1 - (jf - 1.0) * p0) / jf;
        p0 = p1;
        p1 = p2;
    }
    if n == 0 {
        return (1.0, 0.0);
    }
    let dp = n as f64 * (x * p1 - p0) / (x * x - 1.0);
    (p1, dp)
}

/// Outcome of a bracketed bisection.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Bisection {
    pub root: f64,
    pub iterations: u32,
    /// Final bracket, ordered.
    pub bracket: (f64, f64),
}

/// Bisection for a sign change of `f` on `[lo, hi]`, stopping once the
/// bracket width falls below `rel_tol` times its larger endpoint magnitude.
pub fn bisect<F>(mut f: F, lo: f64, hi: f64, rel_tol: f64, max_iter: u32) -> Result<Bisection>
where
    F: FnMut(f64) -> Result<f64>,
{
    let (mut lo, mut hi) = if lo <= hi { (lo, hi) } else { (hi, lo) };
    let f_lo = f(lo)?;
    let f_hi = f(hi)?;
    if f_lo == 0.0 {
        return Ok(Bisection { root: lo, iterations: 0, bracket: (lo, lo) });
    }
    if f_hi == 0.0 {
        return Ok(Bisection { root: hi, iterations: 0, bracket: (hi, hi) });
    }
    if f_lo.signum() == f_hi.signum() || f_lo.is_nan() || f_hi.is_nan() {
        return Err(ChartError::RootNotBracketed { lo, hi, f_lo, f_hi });
    }
    let lo_negative = f_lo < 0.0;
    let mut iterations = 0;
    while iterations < max_iter {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        iterations += 1;
        let f_mid = f(mid)?;
        if f_mid == 0.0 {
            return Ok(Bisection { root: mid, iterations, bracket: (mid, mid) });
        }
        if (f_mid < 0.0) == lo_negative {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi - lo <= rel_tol * lo.abs().max(hi.abs()) {
            break;
        }
    }
    Ok(Bisection { root: 0.5 * (lo + hi), iterations, bracket: (lo, hi) })
}

/// `x` with `P(a, x) = p`, the lower regularized incomplete gamma function.
pub fn gamma_p_inv(a: f64, p: f64) -> f64 {
    if p <= 0.0 {
        return 0.0;
    }
    if p >= 1.0 {
        return f64::INFINITY;
    }
    let target = p.ln();
    solve_gamma_tail(a, p, 1.0 - p, |x| gamma_lr(a, x).ln() - target, 1.0)
}

/// `x` with `Q(a, x) = q`, the upper regularized incomplete gamma function.
pub fn gamma_q_inv(a: f64, q: f64) -> f64 {
    if q <= 0.0 {
        return f64::INFINITY;
    }
    if q >= 1.0 {
        return 0.0;
    }
    let target = q.ln();
    solve_gamma_tail(a, 1.0 - q, q, |x| gamma_ur(a, x).ln() - target, -1.0)
}

/// Safeguarded Newton on the log of a gamma tail. `direction` is +1 when the
/// residual increases with `x` (lower tail) and -1 otherwise.
fn solve_gamma_tail<F>(a: f64, p: f64, q: f64, residual: F, direction: f64) -> f64
where
    F: Fn(f64) -> f64,
{
    let ln_gamma_a = ln_gamma(a);
    let mut x = initial_gamma_quantile(a, p, q, ln_gamma_a);

    // Bracket [lo, hi] with residual(lo) < 0 < residual(hi) along `direction`.
    let signed = |x: f64| direction * residual(x);
    let mut lo = x;
    let mut hi = x;
    let mut r = signed(x);
    if r == 0.0 {
        return x;
    }
    if r < 0.0 {
        while signed(hi) < 0.0 {
            lo = hi;
            hi *= 2.0;
        }
    } else {
        while lo > f64::MIN_POSITIVE && signed(lo) > 0.0 {
            hi = lo;
            lo *= 0.5;
        }
    }

    for _ in 0..200 {
        r = signed(x);
        if r == 0.0 {
            return x;
        }
        if r < 0.0 {
            lo = lo.max(x);
        } else {
            hi = hi.min(x);
        }
        // d/dx ln P = pdf / P ; d/dx ln Q = -pdf / Q.
        let log_pdf = (a - 1.0) * x.ln() - x - ln_gamma_a;
        let tail = (residual(x) + if direction > 0.0 { p.ln() } else { q.ln() }).exp();
        let slope = (log_pdf.exp() / tail).abs();
        let mut next = x - r / slope;
        if !next.is_finite() || next <= lo || next >= hi {
            next = 0.5 * (lo + hi);
        }
        if (next - x).abs() <= 4.0 * f64::EPSILON * x {
            return next;
        }
        x = next;
        if hi - lo <= 4.0 * f64::EPSILON * hi {
            break;
        }
    }
    x
}

fn initial_gamma_quantile(a: f64, p: f64, q: f64, ln_gamma_a: f64) -> f64 {
    // Wilson-Hilferty; standard normal quantile z with P(Z > z) = q.
    let z = if p < q {
        -std::f64::consts::SQRT_2 * erfc_inv(2.0 * p)
    } else {
        std::f64::consts::SQRT_2 * erfc_inv(2.0 * q)
    };
    let t = 1.0 - 1.0 / (9.0 * a) + z / (3.0 * a.sqrt());
    let wh = a * t * t * t;
    if wh > 0.0 && wh.is_finite() {
        wh
    } else {
        // Small-x expansion P(a, x) ~ x^a / Gamma(a + 1).
        ((p.ln() + ln_gamma_a + a.ln()) / a).exp().max(f64::MIN_POSITIVE)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn legendre_rule_integrates_polynomials_exactly() {
        let rule = GaussLegendre::new(8);
        let weights: f64 = rule.weights().iter().sum();
        assert_relative_eq!(weights, 2.0, epsilon = 1e-14);
        // degree 15 is the limit for 8 points
        let v = rule.integrate(0.0, 1.0, |x| x.powi(15));
        assert_relative_eq!(v, 1.0 / 16.0, epsilon = 1e-14);
    }

    #[test]
    fn high_order_rule_is_accurate() {
        let rule = GaussLegendre::new(256);
        let v = rule.integrate(0.0, std::f64::consts::PI, f64::sin);
        assert_relative_eq!(v, 2.0, epsilon = 1e-13);
        assert!(rule.nodes().windows(2).all(|w| w[0] < w[1]));
    }

    #[test]
    fn bisection_finds_sqrt2() {
        let r = bisect(|x| Ok(x * x - 2.0), 0.0, 2.0, 1e-14, 200).unwrap();
        assert_relative_eq!(r.root, std::f64::consts::SQRT_2, epsilon = 1e-13);
    }

    #[test]
    fn bisection_rejects_unbracketed() {
        let err = bisect(|x| Ok(x * x + 1.0), -1.0, 1.0, 1e-12, 100).unwrap_err();
        assert!(matches!(err, ChartError::RootNotBracketed { .. }));
    }

    #[test]
    fn gamma_quantiles_invert_the_tails() {
        for &a in &[1.0, 2.5, 30.0, 500.0, 8000.0] {
            for &p in &[1e-15, 1e-8, 0.01, 0.3, 0.5] {
                let x = gamma_p_inv(a, p);
                assert_relative_eq!(gamma_lr(a, x), p, max_relative = 1e-10);
                let y = gamma_q_inv(a, p);
                assert_relative_eq!(gamma_ur(a, y), p, max_relative = 1e-10);
                assert!(p == 0.5 || x < y);
            }
        }
    }

    #[test]
    fn exponential_quantile_closed_form() {
        // a = 1: P(1, x) = 1 - e^{-x}
        assert_relative_eq!(gamma_p_inv(1.0, 0.5), std::f64::consts::LN_2, epsilon = 1e-14);
        assert_relative_eq!(gamma_q_inv(1.0, 1e-6), 1e6f64.ln(), epsilon = 1e-12);
    }
}
