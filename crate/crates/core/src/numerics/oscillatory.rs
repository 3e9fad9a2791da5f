//! `int_0^inf A(k) exp(-i k^2 t) dk` for envelopes made of plane-wave
//! components `a_j(k) exp(i b_j k)`.
//!
//! The interval `[0, K]` is covered by Gauss panels on which the total phase
//! turns by at most a quarter wave. Beyond `K` the contour is rotated into the
//! lower half plane along `k(u) = sqrt(K^2 - i u)`, where `exp(-i k^2 t)`
//! becomes `exp(-i K^2 t - u t)`.

use crate::error::{Error, Result};
use crate::numerics::quadrature::{integrate_adaptive_breaks, QuadratureSpec};
use crate::numerics::special::principal_sqrt;
use crate::params::{C64, I};

const QUARTER_WAVE: f64 = std::f64::consts::FRAC_PI_2;
const MAX_PANEL_WIDTH: f64 = 0.5;
/// Decay exponent at which the rotated tail is cut off.
const TAIL_CUTOFF: f64 = 80.0;
const MAX_DOUBLINGS: usize = 64;

pub type Amplitude<'a> = Box<dyn Fn(C64) -> C64 + 'a>;

/// One component `amplitude(k) exp(i shift k)` of an envelope, valid (as an
/// analytic function) for `|k| > analytic_radius`.
pub struct PhaseComponent<'a> {
    pub shift: f64,
    pub amplitude: Amplitude<'a>,
}

/// Envelope of an oscillatory integral.
pub struct OscillatoryIntegrand<'a> {
    /// The full envelope on the real axis, evaluated in a numerically stable way.
    pub on_axis: Box<dyn Fn(f64) -> C64 + 'a>,
    /// Decomposition used off the real axis; must sum to `on_axis`.
    pub components: Vec<PhaseComponent<'a>>,
    /// All singularities of the components lie inside this radius.
    pub analytic_radius: f64,
}

impl OscillatoryIntegrand<'_> {
    fn max_shift(&self) -> f64 {
        self.components.iter().map(|c| c.shift.abs()).fold(0.0, f64::max)
    }
}

/// Switch-over point between the real-axis panels and the rotated tail.
fn split_point(integrand: &OscillatoryIntegrand<'_>, t: f64) -> f64 {
    let mut k = (integrand.analytic_radius + 1.0).max(1.0);
    if t > 0.0 {
        k = k.max(integrand.max_shift() / t + 1.0);
    }
    k
}

/// Panel edges on `[0, k_end]` with quarter-wave phase change per panel.
fn panel_edges(k_end: f64, t: f64, b_max: f64) -> Vec<f64> {
    let mut edges = vec![0.0];
    let mut k = 0.0;
    while k < k_end {
        let mut h = MAX_PANEL_WIDTH;
        for _ in 0..2 {
            let rate = 2.0 * (k + h) * t + b_max;
            if rate > 0.0 {
                h = h.min(QUARTER_WAVE / rate);
            }
        }
        k = (k + h).min(k_end);
        if k_end - k < 1e-3 * h {
            k = k_end;
        }
        edges.push(k);
    }
    edges
}

/// `int_0^inf envelope(k) exp(-i k^2 t) dk`.
pub fn integrate_phase_sum(integrand: &OscillatoryIntegrand<'_>, t: f64, spec: &QuadratureSpec) -> Result<C64> {
    if !t.is_finite() || t < 0.0 {
        return Err(Error::invalid("t", "must be finite and >= 0"));
    }
    let k_end = split_point(integrand, t);
    let b_max = integrand.max_shift();
    let edges = panel_edges(k_end, t, b_max);
    // Partial tolerances: the head and the tail each get a share.
    let part = spec.with_abs_tol(spec.abs_tol / 2.0);
    let head = integrate_adaptive_breaks(
        |k: f64| (integrand.on_axis)(k) * C64::from_polar(1.0, -k * k * t),
        &edges,
        &part,
    )?
    .value;
    let tail = if t > 0.0 {
        rotated_tail(integrand, k_end, t, &part)?
    } else {
        vertical_tails(integrand, k_end, &part)?
    };
    Ok(head + tail)
}

fn rotated_tail(integrand: &OscillatoryIntegrand<'_>, k_end: f64, t: f64, spec: &QuadratureSpec) -> Result<C64> {
    let base_phase = C64::from_polar(1.0, -k_end * k_end * t);
    let f = |v: f64| {
        let u = v / t;
        let k = principal_sqrt(C64::new(k_end * k_end, -u));
        let dk_du = -I / (2.0 * k);
        let mut acc = C64::new(0.0, 0.0);
        for c in &integrand.components {
            acc += (c.amplitude)(k) * (I * c.shift * k).exp();
        }
        acc * dk_du * (-v).exp() / t
    };
    let breaks = [0.0, 0.5, 1.0, 2.0, 4.0, 8.0, 16.0, 32.0, TAIL_CUTOFF];
    let q = integrate_adaptive_breaks(f, &breaks, spec)?;
    Ok(base_phase * q.value)
}

fn vertical_tails(integrand: &OscillatoryIntegrand<'_>, k_end: f64, spec: &QuadratureSpec) -> Result<C64> {
    let mut total = C64::new(0.0, 0.0);
    let mut flat: Vec<&PhaseComponent<'_>> = Vec::new();
    for c in &integrand.components {
        if c.shift == 0.0 {
            flat.push(c);
            continue;
        }
        let sigma = c.shift.signum();
        let b = c.shift.abs();
        let start = C64::from_polar(1.0, c.shift * k_end);
        let f = |v: f64| {
            let r = v / b;
            let k = C64::new(k_end, sigma * r);
            (c.amplitude)(k) * (-v).exp() * I * sigma / b
        };
        let breaks = [0.0, 0.5, 1.0, 2.0, 4.0, 8.0, 16.0, 32.0, TAIL_CUTOFF];
        total += start * integrate_adaptive_breaks(f, &breaks, spec)?.value;
    }
    if flat.is_empty() {
        return Ok(total);
    }
    // Non-oscillating components must decay on their own along the real axis.
    let f = |k: f64| -> C64 { flat.iter().map(|c| (c.amplitude)(C64::new(k, 0.0))).sum() };
    let mut lo = k_end;
    let mut quiet = 0;
    for _ in 0..MAX_DOUBLINGS {
        let hi = 2.0 * lo;
        let piece = integrate_adaptive_breaks(f, &[lo, hi], spec)?.value;
        total += piece;
        lo = hi;
        if piece.norm() < 1e-2 * spec.abs_tol {
            quiet += 1;
            if quiet >= 2 {
                return Ok(total);
            }
        } else {
            quiet = 0;
        }
    }
    Err(Error::TailBound(format!(
        "envelope does not decay fast enough beyond k = {k_end} at t = 0"
    )))
}

/// `int_0^inf envelope(k) exp(-i k^2 t) dk` for a non-oscillating envelope
/// analytic outside `|k| <= k_max_hint`.
pub fn integrate_oscillatory_semiinfinite<F>(envelope: F, t: f64, k_max_hint: f64, spec: &QuadratureSpec) -> Result<C64>
where
    F: Fn(C64) -> C64,
{
    let integrand = OscillatoryIntegrand {
        on_axis: Box::new(|k: f64| envelope(C64::new(k, 0.0))),
        components: vec![PhaseComponent {
            shift: 0.0,
            amplitude: Box::new(&envelope),
        }],
        analytic_radius: k_max_hint.max(0.0),
    };
    integrate_phase_sum(&integrand, t, spec)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    #[test]
    fn gaussian_at_time_zero() {
        let v = integrate_oscillatory_semiinfinite(|k| (-k * k).exp(), 0.0, 1.0, &QuadratureSpec::default()).unwrap();
        assert!((v - C64::new(PI.sqrt() / 2.0, 0.0)).norm() < 1e-10);
    }

    #[test]
    fn gaussian_closed_form_at_positive_time() {
        // int_0^inf exp(-k^2 (1 + i t)) dk = sqrt(pi)/2 (1 + i t)^(-1/2)
        for t in [0.3, 5.0, 120.0] {
            let v = integrate_oscillatory_semiinfinite(|k| (-k * k).exp(), t, 1.0, &QuadratureSpec::default()).unwrap();
            let exact = PI.sqrt() / 2.0 / principal_sqrt(C64::new(1.0, t));
            assert!((v - exact).norm() < 1e-10, "t = {t}");
        }
    }

    #[test]
    fn algebraic_envelope_needs_no_cutoff() {
        // int_0^inf exp(-i k^2 t)/(1 + k^2) dk has no elementary form; compare
        // against a brute-force sum with an integration-by-parts tail.
        let t = 2.0;
        let env = |k: C64| 1.0 / (1.0 + k * k);
        let v = integrate_oscillatory_semiinfinite(env, t, 1.0, &QuadratureSpec::default()).unwrap();
        let kmax = 200.0;
        let n = 2_000_000;
        let h = kmax / n as f64;
        let g = |k: f64| C64::from_polar(1.0 / (1.0 + k * k), -k * k * t);
        let mut s = (g(0.0) + g(kmax)) / 2.0;
        for j in 1..n {
            s += g(j as f64 * h);
        }
        s *= h;
        s += g(kmax) / (2.0 * I * kmax * t);
        assert!((v - s).norm() < 1e-6, "{v} vs {s}");
    }

    #[test]
    fn t_zero_slow_decay_is_an_error() {
        let r = integrate_oscillatory_semiinfinite(|k| 1.0 / (1.0 + k), 0.0, 1.0, &QuadratureSpec::default());
        assert!(r.is_err());
    }

    #[test]
    fn shifted_components_at_time_zero() {
        // int_0^inf exp(-k) cos(3k) dk = 1/10 with cos split into two shifts.
        let integrand = OscillatoryIntegrand {
            on_axis: Box::new(|k: f64| C64::new((-k).exp() * (3.0 * k).cos(), 0.0)),
            components: vec![
                PhaseComponent {
                    shift: 3.0,
                    amplitude: Box::new(|k: C64| 0.5 * (-k).exp()),
                },
                PhaseComponent {
                    shift: -3.0,
                    amplitude: Box::new(|k: C64| 0.5 * (-k).exp()),
                },
            ],
            analytic_radius: 0.0,
        };
        let v = integrate_phase_sum(&integrand, 0.0, &QuadratureSpec::default()).unwrap();
        assert!((v - C64::new(0.1, 0.0)).norm() < 1e-10);
    }

    #[test]
    fn quadratic_envelope_decays_as_three_halves() {
        let spec = QuadratureSpec::default().with_abs_tol(1e-14);
        let vals: Vec<f64> = [50.0, 100.0, 200.0]
            .iter()
            .map(|&t| {
                integrate_oscillatory_semiinfinite(|k| k * k * (-k * k).exp(), t, 1.0, &spec)
                    .unwrap()
                    .norm()
            })
            .collect();
        let slope1 = (vals[1] / vals[0]).ln() / 2f64.ln();
        let slope2 = (vals[2] / vals[1]).ln() / 2f64.ln();
        assert!((slope1 + 1.5).abs() < 0.02 && (slope2 + 1.5).abs() < 0.01, "{slope1} {slope2}");
    }
}
