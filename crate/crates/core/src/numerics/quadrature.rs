use std::cmp::Ordering;
use std::collections::BinaryHeap;
use std::sync::OnceLock;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::params::C64;

pub const MAX_PANEL_ORDER: usize = 64;

/// Tolerances and limits for adaptive quadrature.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QuadratureSpec {
    pub abs_tol: f64,
    pub rel_tol: f64,
    pub max_panels: usize,
    pub panel_order: usize,
}

impl Default for QuadratureSpec {
    fn default() -> Self {
        Self {
            abs_tol: 1e-10,
            rel_tol: 1e-8,
            max_panels: 200_000,
            panel_order: 16,
        }
    }
}

impl QuadratureSpec {
    pub fn validate(&self) -> Result<()> {
        if !(self.abs_tol > 0.0) || !(self.rel_tol > 0.0) {
            return Err(Error::invalid("quadrature", "tolerances must be > 0"));
        }
        if self.panel_order < 8 || self.panel_order > MAX_PANEL_ORDER {
            return Err(Error::invalid(
                "panel_order",
                format!("must lie in 8..={MAX_PANEL_ORDER}, got {}", self.panel_order),
            ));
        }
        if self.max_panels == 0 {
            return Err(Error::invalid("max_panels", "must be positive"));
        }
        Ok(())
    }

    /// Same spec with both tolerances multiplied by `factor`.
    pub fn scaled(&self, factor: f64) -> Self {
        Self {
            abs_tol: self.abs_tol * factor,
            rel_tol: self.rel_tol * factor,
            ..*self
        }
    }

    pub fn with_abs_tol(&self, abs_tol: f64) -> Self {
        Self { abs_tol, ..*self }
    }
}

/// Stopping rule for infinite series.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SeriesTruncation {
    pub term_tol: f64,
    pub max_terms: usize,
}

impl Default for SeriesTruncation {
    fn default() -> Self {
        Self {
            term_tol: 1e-16,
            max_terms: 200_000,
        }
    }
}

impl SeriesTruncation {
    pub fn validate(&self) -> Result<()> {
        if !(self.term_tol > 0.0) {
            return Err(Error::invalid("term_tol", "must be > 0"));
        }
        if self.max_terms == 0 {
            return Err(Error::invalid("max_terms", "must be positive"));
        }
        Ok(())
    }
}

/// Gauss-Legendre nodes and weights on `[-1, 1]`.
#[derive(Debug, Clone)]
pub struct GaussRule {
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
}

impl GaussRule {
    fn compute(n: usize) -> Self {
        let mut nodes = vec![0.0; n];
        let mut weights = vec![0.0; n];
        let nf = n as f64;
        for i in 0..n.div_ceil(2) {
            let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (nf + 0.5)).cos();
            let mut dp = 0.0;
            for _ in 0..100 {
                let (mut p0, mut p1) = (1.0, x);
                for k in 2..=n {
                    let kf = k as f64;
                    let p2 = ((2.0 * kf - 1.0) * x * p1 - (kf - 1.0) * p0) / kf;
                    p0 = p1;
                    p1 = p2;
                }
                dp = nf * (x * p1 - p0) / (x * x - 1.0);
                let dx = p1 / dp;
                x -= dx;
                if dx.abs() < 1e-16 {
                    break;
                }
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

    /// Cached rule with `n` nodes, `1 <= n <= 64`.
    pub fn get(n: usize) -> &'static GaussRule {
        static RULES: OnceLock<Vec<GaussRule>> = OnceLock::new();
        let rules = RULES.get_or_init(|| (1..=MAX_PANEL_ORDER).map(GaussRule::compute).collect());
        &rules[n.clamp(1, MAX_PANEL_ORDER) - 1]
    }

    pub fn integrate<F: Fn(f64) -> C64>(&self, f: &F, a: f64, b: f64) -> C64 {
        let half = 0.5 * (b - a);
        let mid = 0.5 * (b + a);
        let mut acc = C64::new(0.0, 0.0);
        for (x, w) in self.nodes.iter().zip(&self.weights) {
            acc += *w * f(mid + half * x);
        }
        acc * half
    }
}

/// Value and error estimate of a quadrature.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Quadrature {
    pub value: C64,
    pub err_est: f64,
}

struct Panel {
    a: f64,
    b: f64,
    left: C64,
    right: C64,
    err: f64,
}

impl Panel {
    fn build<F: Fn(f64) -> C64>(rule: &GaussRule, f: &F, a: f64, b: f64, whole: C64) -> Self {
        let m = 0.5 * (a + b);
        let left = rule.integrate(f, a, m);
        let right = rule.integrate(f, m, b);
        let err = (whole - left - right).norm();
        Self { a, b, left, right, err }
    }

    fn value(&self) -> C64 {
        self.left + self.right
    }
}

impl PartialEq for Panel {
    fn eq(&self, other: &Self) -> bool {
        self.err.total_cmp(&other.err) == Ordering::Equal
    }
}
impl Eq for Panel {}
impl PartialOrd for Panel {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for Panel {
    fn cmp(&self, other: &Self) -> Ordering {
        self.err.total_cmp(&other.err)
    }
}

/// Globally adaptive Gauss-Legendre quadrature of a complex integrand on
/// `[a, b]`.
pub fn integrate_adaptive<F: Fn(f64) -> C64>(f: F, a: f64, b: f64, spec: &QuadratureSpec) -> Result<Quadrature> {
    integrate_adaptive_breaks(f, &[a, b], spec)
}

/// Like [`integrate_adaptive`] with the interval pre-split at `points`
/// (sorted, first and last being the limits).
pub fn integrate_adaptive_breaks<F: Fn(f64) -> C64>(f: F, points: &[f64], spec: &QuadratureSpec) -> Result<Quadrature> {
    spec.validate()?;
    if points.len() < 2 {
        return Err(Error::invalid("interval", "need at least two break points"));
    }
    if points.iter().any(|p| !p.is_finite()) || points.windows(2).any(|p| !(p[1] > p[0])) {
        return Err(Error::invalid("interval", "break points must be finite and strictly increasing"));
    }
    let rule = GaussRule::get(spec.panel_order);
    let mut heap = BinaryHeap::with_capacity(points.len() * 2);
    for p in points.windows(2) {
        let whole = rule.integrate(&f, p[0], p[1]);
        heap.push(Panel::build(rule, &f, p[0], p[1], whole));
    }
    let mut total: C64 = heap.iter().map(Panel::value).sum();
    let mut err: f64 = heap.iter().map(|p| p.err).sum();
    let mut panels = heap.len();
    let span = points[points.len() - 1] - points[0];

    loop {
        if !total.re.is_finite() || !total.im.is_finite() {
            return Err(Error::NonFinite("adaptive quadrature integrand"));
        }
        if err <= spec.abs_tol.max(spec.rel_tol * total.norm()) {
            return Ok(Quadrature { value: total, err_est: err });
        }
        if panels >= spec.max_panels {
            return Err(Error::NonConvergence {
                what: "adaptive quadrature",
                estimate: total.norm(),
                error: err,
            });
        }
        let worst = heap.pop().expect("heap holds at least one panel");
        let m = 0.5 * (worst.a + worst.b);
        if (worst.b - worst.a) < 1e-15 * span.max(1.0) {
            // Cannot refine further; keep the panel and accept the estimate.
            let q = Quadrature { value: total, err_est: err };
            if err <= 1e3 * spec.abs_tol.max(spec.rel_tol * total.norm()) {
                return Ok(q);
            }
            return Err(Error::NonConvergence {
                what: "adaptive quadrature",
                estimate: total.norm(),
                error: err,
            });
        }
        let l = Panel::build(rule, &f, worst.a, m, worst.left);
        let r = Panel::build(rule, &f, m, worst.b, worst.right);
        total += l.value() + r.value() - worst.value();
        err += l.err + r.err - worst.err;
        heap.push(l);
        heap.push(r);
        panels += 1;
        if panels % 4096 == 0 {
            // refresh the running sums to shed accumulated rounding
            total = heap.iter().map(Panel::value).sum();
            err = heap.iter().map(|p| p.err).sum();
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    #[test]
    fn gauss_rule_integrates_polynomials_exactly() {
        let r = GaussRule::get(16);
        let wsum: f64 = r.weights.iter().sum();
        assert!((wsum - 2.0).abs() < 1e-14);
        let v = r.integrate(&|x: f64| C64::new(x.powi(30), 0.0), -1.0, 1.0);
        assert!((v.re - 2.0 / 31.0).abs() < 1e-14);
    }

    #[test]
    fn sin_squared() {
        let q = integrate_adaptive(|k: f64| C64::new(k.sin().powi(2), 0.0), 0.0, PI, &QuadratureSpec::default()).unwrap();
        assert!((q.value.re - PI / 2.0).abs() < 1e-12);
    }

    #[test]
    fn endpoint_singularity_converges() {
        let q = integrate_adaptive(|x: f64| C64::new(x.sqrt().recip(), 0.0), 1e-300, 1.0, &QuadratureSpec::default());
        let q = q.unwrap();
        assert!((q.value.re - 2.0).abs() < 1e-7);
    }

    #[test]
    fn non_convergence_reports_estimate() {
        let spec = QuadratureSpec {
            max_panels: 4,
            ..QuadratureSpec::default()
        };
        let e = integrate_adaptive(|x: f64| C64::new((50.0 * x).sin() / x.max(1e-3), 0.0), 0.0, 60.0, &spec);
        assert!(matches!(e, Err(Error::NonConvergence { .. })));
    }

    #[test]
    fn rejects_bad_spec() {
        let spec = QuadratureSpec {
            panel_order: 4,
            ..QuadratureSpec::default()
        };
        assert!(integrate_adaptive(|_| C64::new(1.0, 0.0), 0.0, 1.0, &spec).is_err());
    }
}
