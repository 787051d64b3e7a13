//! Log-substituted quadrature for the improper t-integrals
//! int_0^infty f(t) dt / t^{1+sigma} that define every semigroup formula.
//!
//! The substitution tau = log t turns both the t -> 0 singularity and the
//! t -> infinity tail into exponentially localized, smooth integrands, which
//! composite Gauss--Legendre panels integrate to near machine precision.

use crate::error::{Error, Result};
use serde::{Deserialize, Serialize};
use std::collections::HashMap;
use std::sync::{Arc, Mutex, OnceLock};

/// Quadrature rule used on each panel of the substituted axis.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum QuadRule {
    Trapezoid,
    GaussLegendrePanels,
}

/// Parameters of the log-substituted quadrature in tau = log t.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QuadratureSpec {
    pub tau_min: f64,
    pub tau_max: f64,
    pub nodes_per_decade: u32,
    pub rule: QuadRule,
}

impl QuadratureSpec {
    pub fn new(tau_min: f64, tau_max: f64, nodes_per_decade: u32, rule: QuadRule) -> Result<Self> {
        if !(tau_min < tau_max) {
            return Err(Error::InvalidGrid(format!(
                "tau_min {tau_min} must be below tau_max {tau_max}"
            )));
        }
        if nodes_per_decade < 4 {
            return Err(Error::InvalidGrid(format!(
                "nodes_per_decade must be >= 4, got {nodes_per_decade}"
            )));
        }
        Ok(Self {
            tau_min,
            tau_max,
            nodes_per_decade,
            rule,
        })
    }

    /// Doubled node density, used for the error estimate.
    fn refined(&self) -> Self {
        Self {
            nodes_per_decade: self.nodes_per_decade * 2,
            ..*self
        }
    }
}

impl Default for QuadratureSpec {
    /// Window wide enough that the algebraic tails t^{-s} of the scalar
    /// identities drop below 1e-10 even at s = 0.1.
    fn default() -> Self {
        Self {
            tau_min: -250.0,
            tau_max: 250.0,
            nodes_per_decade: 16,
            rule: QuadRule::GaussLegendrePanels,
        }
    }
}

/// Quadrature value with the node-doubling error estimate attached.
#[derive(Debug, Clone, Copy)]
pub struct QuadEstimate {
    pub value: f64,
    pub error_estimate: f64,
}

fn gl_cache() -> &'static Mutex<HashMap<usize, Arc<(Vec<f64>, Vec<f64>)>>> {
    static CACHE: OnceLock<Mutex<HashMap<usize, Arc<(Vec<f64>, Vec<f64>)>>>> = OnceLock::new();
    CACHE.get_or_init(|| Mutex::new(HashMap::new()))
}

/// Gauss--Legendre nodes and weights on [-1, 1], by Newton iteration on the
/// Legendre recurrence.
pub fn gauss_legendre(n: usize) -> Arc<(Vec<f64>, Vec<f64>)> {
    assert!(n >= 1);
    if let Some(hit) = gl_cache().lock().unwrap().get(&n) {
        return hit.clone();
    }
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    let m = n.div_ceil(2);
    for i in 0..m {
        let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            // Legendre P_n(x) and derivative via the three-term recurrence
            let mut p0 = 1.0;
            let mut p1 = x;
            for k in 2..=n {
                let kf = k as f64;
                let p2 = ((2.0 * kf - 1.0) * x * p1 - (kf - 1.0) * p0) / kf;
                p0 = p1;
                p1 = p2;
            }
            dp = n as f64 * (x * p1 - p0) / (x * x - 1.0);
            let dx = p1 / dp;
            x -= dx;
            if dx.abs() < 1e-15 {
                break;
            }
        }
        nodes[i] = -x;
        nodes[n - 1 - i] = x;
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        weights[i] = w;
        weights[n - 1 - i] = w;
    }
    if n == 1 {
        nodes[0] = 0.0;
        weights[0] = 2.0;
    }
    let arc = Arc::new((nodes, weights));
    gl_cache().lock().unwrap().insert(n, arc.clone());
    arc
}

/// Precomputed nodes t_i and weights w_i for sum_i w_i f(t_i) approximating
/// int f(t) dt / t^{1+sigma} over the window; the e^{-sigma tau} weight is
/// folded into w_i so per-integrand evaluation is a tight loop.
#[derive(Debug, Clone)]
pub struct MellinNodes {
    pub t: Vec<f64>,
    pub w: Vec<f64>,
}

impl MellinNodes {
    pub fn new(spec: &QuadratureSpec, sigma: f64) -> Self {
        Self::with_window(spec.tau_min, spec.tau_max, spec.nodes_per_decade, spec.rule, sigma)
    }

    pub fn with_window(
        tau_min: f64,
        tau_max: f64,
        nodes_per_decade: u32,
        rule: QuadRule,
        sigma: f64,
    ) -> Self {
        let ln10 = std::f64::consts::LN_10;
        let span = tau_max - tau_min;
        let n_panels = (span / ln10).ceil().max(1.0) as usize;
        let width = span / n_panels as f64;
        let mut t = Vec::new();
        let mut w = Vec::new();
        match rule {
            QuadRule::GaussLegendrePanels => {
                let rule = gauss_legendre(nodes_per_decade as usize);
                let (xs, ws) = (&rule.0, &rule.1);
                for p in 0..n_panels {
                    let lo = tau_min + p as f64 * width;
                    for (x, wt) in xs.iter().zip(ws) {
                        let tau = lo + 0.5 * width * (x + 1.0);
                        t.push(tau.exp());
                        w.push(0.5 * width * wt * (-sigma * tau).exp());
                    }
                }
            }
            QuadRule::Trapezoid => {
                let total = n_panels * nodes_per_decade as usize;
                let h = span / total as f64;
                for i in 0..=total {
                    let tau = tau_min + i as f64 * h;
                    let end = i == 0 || i == total;
                    t.push(tau.exp());
                    w.push(if end { 0.5 * h } else { h } * (-sigma * tau).exp());
                }
            }
        }
        Self { t, w }
    }

    /// sum_i w_i f(t_i)
    pub fn integrate(&self, f: impl Fn(f64) -> f64) -> f64 {
        self.t.iter().zip(&self.w).map(|(&t, &w)| w * f(t)).sum()
    }
}

/// int_0^infty f(t) dt / t^{1+sigma} over the spec window, with a
/// node-doubling error estimate.
///
/// Fails with `NonConvergent` when the substituted integrand has not decayed
/// below 1e-10 of the estimate at either window end.
pub fn integrate_mellin(
    f: impl Fn(f64) -> f64,
    sigma: f64,
    spec: &QuadratureSpec,
) -> Result<QuadEstimate> {
    let coarse = MellinNodes::new(spec, sigma).integrate(&f);
    let fine = MellinNodes::new(&spec.refined(), sigma).integrate(&f);
    let scale = fine.abs().max(f64::MIN_POSITIVE);
    let boundary = [spec.tau_min, spec.tau_max]
        .iter()
        .map(|&tau| (f(tau.exp()) * (-sigma * tau).exp()).abs())
        .fold(0.0f64, f64::max);
    let threshold = 1e-10 * scale;
    if boundary > threshold {
        return Err(Error::NonConvergent { boundary, threshold });
    }
    Ok(QuadEstimate {
        value: fine,
        error_estimate: (fine - coarse).abs(),
    })
}

/// int_a^b f(t) dt for 0 < a < b via tau = log t and composite
/// Gauss--Legendre panels, for weakly singular radial integrals.
pub fn integrate_log_interval(
    f: impl Fn(f64) -> f64,
    a: f64,
    b: f64,
    nodes_per_decade: u32,
) -> f64 {
    assert!(a > 0.0 && b > a, "need 0 < a < b");
    // sigma = -1 makes the folded weight e^{tau} = t, the Jacobian of t = e^tau
    MellinNodes::with_window(
        a.ln(),
        b.ln(),
        nodes_per_decade,
        QuadRule::GaussLegendrePanels,
        -1.0,
    )
    .integrate(f)
}

/// int_a^b f(x) dx on a finite interval with composite Gauss--Legendre
/// panels in the plain variable.
pub fn integrate_interval(f: impl Fn(f64) -> f64, a: f64, b: f64, panels: usize, order: usize) -> f64 {
    let rule = gauss_legendre(order);
    let (xs, ws) = (&rule.0, &rule.1);
    let width = (b - a) / panels as f64;
    let mut acc = 0.0;
    for p in 0..panels {
        let lo = a + p as f64 * width;
        for (x, w) in xs.iter().zip(ws) {
            acc += 0.5 * width * w * f(lo + 0.5 * width * (x + 1.0));
        }
    }
    acc
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::special::gamma;
    use approx::assert_relative_eq;

    #[test]
    fn gauss_legendre_exactness() {
        // n-point rule integrates polynomials of degree 2n-1 exactly
        let rule = gauss_legendre(8);
        let integral: f64 = rule
            .0
            .iter()
            .zip(&rule.1)
            .map(|(x, w)| w * x.powi(14))
            .sum();
        assert_relative_eq!(integral, 2.0 / 15.0, max_relative = 1e-14);
        let weight_sum: f64 = rule.1.iter().sum();
        assert_relative_eq!(weight_sum, 2.0, max_relative = 1e-14);
    }

    #[test]
    fn mellin_positive_identity_at_lambda_one() {
        // int_0^infty (e^{-t} - 1) dt / t^{1+s} = Gamma(-s) at s = 0.3
        let spec = QuadratureSpec::default();
        let est = integrate_mellin(|t| (-t).exp_m1(), 0.3, &spec).unwrap();
        assert_relative_eq!(est.value, -4.326_851_108_825_192_6, max_relative = 1e-10);
        assert!(est.error_estimate < 1e-9 * est.value.abs());
    }

    #[test]
    fn mellin_negative_identity() {
        // int_0^infty e^{-4t} dt / t^{1-s} = Gamma(s) 4^{-s} at s = 0.3
        let spec = QuadratureSpec::default();
        let est = integrate_mellin(|t| (-4.0 * t).exp(), -0.3, &spec).unwrap();
        assert_relative_eq!(est.value, 1.973_699_472_438_317_5, max_relative = 1e-10);
    }

    #[test]
    fn mellin_lambda_scaling_family() {
        let spec = QuadratureSpec::default();
        for &s in &[0.1, 0.5, 0.9] {
            let g = gamma(-s).unwrap();
            for &lambda in &[0.5, 2.0, 10.0] {
                let est = integrate_mellin(|t| (-lambda * t).exp_m1(), s, &spec).unwrap();
                assert_relative_eq!(est.value / g, lambda.powf(s), max_relative = 1e-8);
            }
        }
    }

    #[test]
    fn mellin_flags_non_convergence() {
        // f == 1 makes the upper substituted tail e^{-sigma tau} too fat for
        // sigma = 0.01 on a narrow window
        let spec = QuadratureSpec::new(-5.0, 5.0, 16, QuadRule::GaussLegendrePanels).unwrap();
        let res = integrate_mellin(|_| 1.0, 0.01, &spec);
        assert!(matches!(res, Err(Error::NonConvergent { .. })));
    }

    #[test]
    fn trapezoid_rule_agrees_on_smooth_integrand() {
        let gl = QuadratureSpec::new(-40.0, 40.0, 16, QuadRule::GaussLegendrePanels).unwrap();
        let tr = QuadratureSpec::new(-40.0, 40.0, 64, QuadRule::Trapezoid).unwrap();
        let a = integrate_mellin(|t| (-t).exp_m1(), 0.5, &gl).unwrap();
        let b = integrate_mellin(|t| (-t).exp_m1(), 0.5, &tr).unwrap();
        assert_relative_eq!(a.value, b.value, max_relative = 1e-8);
    }

    #[test]
    fn log_interval_matches_closed_form() {
        // int_1^e dt / t = 1
        let v = integrate_log_interval(|t| 1.0 / t, 1.0, std::f64::consts::E, 16);
        assert_relative_eq!(v, 1.0, max_relative = 1e-13);
    }

    #[test]
    fn interval_rule_matches_closed_form() {
        let v = integrate_interval(|x| x.cos(), 0.0, std::f64::consts::FRAC_PI_2, 4, 12);
        assert_relative_eq!(v, 1.0, max_relative = 1e-13);
    }

    #[test]
    fn spec_validation() {
        assert!(QuadratureSpec::new(1.0, -1.0, 16, QuadRule::Trapezoid).is_err());
        assert!(QuadratureSpec::new(-1.0, 1.0, 3, QuadRule::Trapezoid).is_err());
    }
}
