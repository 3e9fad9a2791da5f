//! Closed forms for the half-line and full-line lattices: the detector-site
//! amplitude `psi_1(t)` in the Laplace and time domains, its long-time
//! form, and the infinite-time survival probabilities.

use std::f64::consts::PI;

use crate::error::{Error, Result};
use crate::numerics::{
    bessel_j_sequence, integrate_adaptive, integrate_adaptive_breaks, theta_pm, QuadratureSpec, SeriesTruncation,
};
use crate::params::{validate_w, C64, I};

fn i_pow(n: i64) -> C64 {
    match n.rem_euclid(4) {
        0 => C64::new(1.0, 0.0),
        1 => C64::new(0.0, 1.0),
        2 => C64::new(-1.0, 0.0),
        _ => C64::new(0.0, -1.0),
    }
}

fn check_n0(n0: usize) -> Result<()> {
    if n0 == 0 {
        return Err(Error::invalid("n0", "starting site must be >= 1"));
    }
    Ok(())
}

/// Laplace transform of `psi_1` for a particle started at `n0`:
/// `-i i^n0 theta_+^n0 / (1 + w theta_+)` with `theta_+ = theta_+(s/2 + i)`.
pub fn laplace_psi1(w: C64, n0: usize, s: C64) -> Result<C64> {
    check_n0(n0)?;
    if !(s.re > 0.0) {
        return Err(Error::invalid("s", "Re s must be > 0"));
    }
    let (theta, _) = theta_pm(s / 2.0 + I)?;
    Ok(-I * i_pow(n0 as i64) * theta.powu(n0 as u32) / (1.0 + w * theta))
}

/// Order up to which `J_m(x)` terms are kept. The Bessel tail beyond the
/// turning point decays like an Airy function on the scale `x^(1/3)`.
fn bessel_cutoff(x: f64, n0: usize, extra: f64) -> usize {
    (x + n0 as f64 + 40.0 + extra * (x + 1.0).cbrt()).ceil() as usize
}

/// `psi_1(t)` from its Bessel series.
///
/// For `|w| <= 1` the direct series in powers of `-w` is summed. For
/// `|w| > 1` that series cancels catastrophically, so the equivalent
/// resummed form in powers of `-1/w` is used, with the bound-state term
/// split off.
pub fn psi1_series(w: C64, n0: usize, t: f64, trunc: &SeriesTruncation) -> Result<C64> {
    check_n0(n0)?;
    trunc.validate()?;
    let w = validate_w(w)?;
    if !t.is_finite() || t < 0.0 {
        return Err(Error::invalid("t", "must be finite and >= 0"));
    }
    if t == 0.0 {
        return Ok(if n0 == 1 { C64::new(1.0, 0.0) } else { C64::new(0.0, 0.0) });
    }
    let x = 2.0 * t;
    let mut extra = 12.0;
    loop {
        let top = bessel_cutoff(x, n0, extra);
        if top > n0 + trunc.max_terms {
            return Err(Error::NonConvergence {
                what: "Bessel series for psi_1",
                estimate: f64::NAN,
                error: f64::NAN,
            });
        }
        let (value, last_term) = if w.norm() <= 1.0 {
            series_direct(w, n0, t, top)?
        } else {
            series_resummed(w, n0, t, top)?
        };
        if last_term < trunc.term_tol {
            return Ok(value);
        }
        extra *= 2.0;
    }
}

/// Direct series; returns the value and the largest of the final terms.
fn series_direct(w: C64, n0: usize, t: f64, top: usize) -> Result<(C64, f64)> {
    let x = 2.0 * t;
    let j = bessel_j_sequence(top, x)?;
    let mut sum = C64::new(0.0, 0.0);
    let mut power = C64::new(1.0, 0.0);
    let mut tail = 0.0f64;
    for (m, jm) in j.iter().enumerate().skip(n0) {
        let term = power * (m as f64) * jm / x;
        sum += term;
        if m + 8 > top {
            tail = tail.max(term.norm());
        }
        power *= -w;
    }
    let prefactor = -2.0 * i_pow(n0 as i64 + 1) * C64::from_polar(1.0, -x);
    Ok((prefactor * sum, tail))
}

/// Resummed series for `|w| > 1`.
fn series_resummed(w: C64, n0: usize, t: f64, top: usize) -> Result<(C64, f64)> {
    let x = 2.0 * t;
    let p_max = top + n0;
    let j = bessel_j_sequence(top, x)?;
    let j_signed = |m: i64| -> f64 {
        let v = j[m.unsigned_abs() as usize];
        if m < 0 && m % 2 != 0 {
            -v
        } else {
            v
        }
    };
    let ratio = -1.0 / w;
    let mut power = C64::new(1.0, 0.0);
    let mut sum = C64::new(0.0, 0.0);
    let mut tail = 0.0f64;
    for p in 1..=p_max {
        power *= ratio;
        let m = n0 as i64 - p as i64;
        if m.unsigned_abs() as usize > top {
            break;
        }
        let term = power * (m as f64) * j_signed(m) / t;
        sum += term;
        if p + 8 > p_max {
            tail = tail.max(term.norm());
        }
    }
    let phase = C64::from_polar(1.0, -x);
    let bound = (-I / w).powi(n0 as i32 - 1) * (1.0 + 1.0 / (w * w)) * ((1.0 / w - w) * t).exp();
    Ok((i_pow(n0 as i64 + 1) * phase * sum + phase * bound, tail))
}

/// `f(n0, w) = (n0 - i (n0 - 1) w) / (1 - i w)^2`.
fn asymptotic_weight(n0: usize, w: C64) -> C64 {
    let n = n0 as f64;
    (n - I * (n - 1.0) * w) / ((1.0 - I * w) * (1.0 - I * w))
}

/// The two plane-wave amplitudes `(A, B)` of the long-time form
/// `psi_1 ~ -i^(n0+1) e^(-2it) (A e^(i(2t - pi/4)) + B e^(-i(2t - pi/4))) / (2 sqrt(pi) t^(3/2))`.
pub fn asymptotic_amplitudes(w: C64, n0: usize) -> (C64, C64) {
    let a = i_pow(-(n0 as i64)) * asymptotic_weight(n0, w);
    let b = i_pow(n0 as i64) * asymptotic_weight(n0, w.conj()).conj();
    (a, b)
}

/// Long-time form of `psi_1(t)`, decaying as `t^(-3/2)`. The bound-state
/// contribution present for `|w| > 1` decays exponentially and is omitted.
pub fn psi1_asymptotic(w: C64, n0: usize, t: f64) -> C64 {
    let (a, b) = asymptotic_amplitudes(w, n0);
    let phi = 2.0 * t - PI / 4.0;
    let wave = a * C64::from_polar(1.0, phi) + b * C64::from_polar(1.0, -phi);
    -i_pow(n0 as i64 + 1) * C64::from_polar(1.0, -2.0 * t) * wave / (2.0 * PI.sqrt() * t.powf(1.5))
}

/// `int_T^inf |psi_1|^2 dt` from the long-time form.
pub fn asymptotic_tail_integral(w: C64, n0: usize, t_cut: f64) -> f64 {
    let (a, b) = asymptotic_amplitudes(w, n0);
    // |psi|^2 = (|A|^2 + |B|^2 + 2 Re(A B* e^{2i phi})) / (4 pi t^3)
    let smooth = (a.norm_sqr() + b.norm_sqr()) / (8.0 * PI * t_cut * t_cut);
    let ab = a * b.conj();
    let spec = QuadratureSpec::default().with_abs_tol(1e-16);
    let osc = integrate_adaptive(
        |t: f64| {
            let phi = 2.0 * t - PI / 4.0;
            C64::new(2.0 * (ab * C64::from_polar(1.0, 2.0 * phi)).re / (4.0 * PI * t.powi(3)), 0.0)
        },
        t_cut,
        t_cut + 200.0,
        &spec,
    )
    .map(|q| q.value.re)
    .unwrap_or(0.0);
    smooth + osc
}

/// Cached evaluations of `psi_1(t)` for one `(w, n0)`.
#[derive(Debug, Clone)]
pub struct BoundaryAmplitude {
    w: C64,
    n0: usize,
    trunc: SeriesTruncation,
    samples: Vec<(f64, C64)>,
}

impl BoundaryAmplitude {
    pub fn new(w: C64, n0: usize) -> Result<Self> {
        check_n0(n0)?;
        Ok(Self {
            w: validate_w(w)?,
            n0,
            trunc: SeriesTruncation::default(),
            samples: Vec::new(),
        })
    }

    pub fn w(&self) -> C64 {
        self.w
    }

    pub fn n0(&self) -> usize {
        self.n0
    }

    pub fn eval(&self, t: f64) -> Result<C64> {
        psi1_series(self.w, self.n0, t, &self.trunc)
    }

    /// Evaluate on a grid and keep the samples.
    pub fn sample(&mut self, grid: &[f64]) -> Result<&[(f64, C64)]> {
        let start = self.samples.len();
        for &t in grid {
            let v = self.eval(t)?;
            self.samples.push((t, v));
        }
        Ok(&self.samples[start..])
    }

    pub fn samples(&self) -> &[(f64, C64)] {
        &self.samples
    }
}

/// `S_inf` on the half line for a particle started at `n0`.
pub fn survival_halfline(w: C64, n0: usize, quad: &QuadratureSpec) -> Result<f64> {
    check_n0(n0)?;
    let w = validate_w(w)?;
    if !(w.re > 0.0) {
        return Err(Error::invalid("w", "Re w must be > 0"));
    }
    let first = survival_first_integral(w, quad)?;
    let r2 = w.norm_sqr();
    let b = w.im;
    let p = 2 * n0 - 2;
    let second = integrate_adaptive(
        |u: f64| {
            let g = 1.0 + r2 * u * u;
            C64::new(u.powi(p as i32) * (1.0 - u * u) * g / (g * g - (2.0 * b * u).powi(2)), 0.0)
        },
        0.0,
        1.0,
        quad,
    )?
    .value
    .re;
    Ok(1.0 - first - 2.0 * w.re / PI * second)
}

/// `Re(w)/(pi |w|) int_{-pi/2}^{pi/2} cos(theta) / (cosh-like + cos(theta - phi))`.
fn survival_first_integral(w: C64, quad: &QuadratureSpec) -> Result<f64> {
    let r = w.norm();
    let phi = w.arg();
    let c = 0.5 * (r + 1.0 / r);
    let half = PI / 2.0;
    let mut points = vec![-half, half];
    for p in [phi, phi - PI, phi + PI] {
        if p > -half + 1e-12 && p < half - 1e-12 {
            points.push(p);
        }
    }
    points.sort_by(f64::total_cmp);
    let q = integrate_adaptive_breaks(|th: f64| C64::new(th.cos() / (c + (th - phi).cos()), 0.0), &points, quad)?;
    Ok(w.re / (PI * r) * q.value.re)
}

/// Large-`n0` form of [`survival_halfline`], accurate to `O(n0^-3)`.
pub fn survival_halfline_large_n0(w: C64, n0: usize) -> Result<f64> {
    if n0 < 2 {
        return Err(Error::invalid("n0", "large-n0 expansion needs n0 >= 2"));
    }
    let w = validate_w(w)?;
    if !(w.re > 0.0) {
        return Err(Error::invalid("w", "Re w must be > 0"));
    }
    let r2 = w.norm_sqr();
    let den = (1.0 + r2).powi(2) - 4.0 * w.im * w.im;
    if den <= 1e-12 * (1.0 + r2).powi(2) {
        return Err(Error::OutOfValidity(format!(
            "large-n0 correction diverges at w = {w}"
        )));
    }
    let first = survival_first_integral(w, &QuadratureSpec::default().with_abs_tol(1e-14))?;
    let n = n0 as f64;
    Ok(1.0 - first - w.re / PI * (1.0 + r2) / den / (n * n))
}

/// `S_inf` on the full line for a particle started at `n0 != 0`.
///
/// The antisymmetric half of `delta_n0` never reaches the detector and the
/// symmetric half evolves like the half-line problem with `2w`, so
/// `S = (1 + S_halfline(2w, |n0|)) / 2`.
pub fn survival_fullline(w: C64, n0: i64, quad: &QuadratureSpec) -> Result<f64> {
    Ok(0.5 * (1.0 + survival_fullline_symmetric(w, n0, quad)?))
}

/// `S_inf` on the full line for the symmetric start
/// `(delta_n0 + delta_-n0)/sqrt(2)`, equal to `S_halfline(2w, |n0|)`.
pub fn survival_fullline_symmetric(w: C64, n0: i64, quad: &QuadratureSpec) -> Result<f64> {
    if n0 == 0 {
        return Err(Error::invalid("n0", "site 0 is the detector"));
    }
    let w = validate_w(w)?;
    survival_halfline(2.0 * w, n0.unsigned_abs() as usize, quad)
}

/// Survival from the time domain, `1 - 2 Re(w) int_0^inf |psi_1|^2`, with
/// the integral split at `t_cut`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TimeDomainSurvival {
    /// `int_0^t_cut |psi_1|^2 dt` from the Bessel series.
    pub head: f64,
    /// `int_t_cut^inf |psi_1|^2 dt` from the long-time form.
    pub tail: f64,
    pub survival: f64,
}

pub fn survival_time_domain(w: C64, n0: usize, t_cut: f64, quad: &QuadratureSpec) -> Result<TimeDomainSurvival> {
    check_n0(n0)?;
    let w = validate_w(w)?;
    if !(t_cut > 0.0) {
        return Err(Error::invalid("t_cut", "must be > 0"));
    }
    let trunc = SeriesTruncation::default();
    let n_pieces = t_cut.ceil() as usize;
    let breaks = crate::numerics::linspace(0.0, t_cut, n_pieces + 1);
    let err = std::cell::Cell::new(None);
    let head = integrate_adaptive_breaks(
        |t: f64| match psi1_series(w, n0, t, &trunc) {
            Ok(v) => C64::new(v.norm_sqr(), 0.0),
            Err(e) => {
                err.set(Some(e.to_string()));
                C64::new(0.0, 0.0)
            }
        },
        &breaks,
        quad,
    )?
    .value
    .re;
    if let Some(e) = err.take() {
        log::error!("psi_1 series failed inside the survival integral: {e}");
        return Err(Error::NonConvergence {
            what: "time-domain survival integrand",
            estimate: head,
            error: f64::NAN,
        });
    }
    let tail = asymptotic_tail_integral(w, n0, t_cut);
    Ok(TimeDomainSurvival {
        head,
        tail,
        survival: 1.0 - 2.0 * w.re * (head + tail),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> C64 {
        C64::new(re, im)
    }

    #[test]
    fn initial_values() {
        let tr = SeriesTruncation::default();
        for w in [c(0.3, 0.1), c(1.0, 0.0), c(2.5, -1.0)] {
            assert_eq!(psi1_series(w, 1, 0.0, &tr).unwrap(), c(1.0, 0.0));
            assert_eq!(psi1_series(w, 3, 0.0, &tr).unwrap(), c(0.0, 0.0));
            // the limit t -> 0+ is continuous in both series forms
            assert!((psi1_series(w, 1, 1e-9, &tr).unwrap() - 1.0).norm() < 1e-8);
            assert!(psi1_series(w, 3, 1e-9, &tr).unwrap().norm() < 1e-8);
        }
    }

    #[test]
    fn short_time_slope() {
        // psi_1 = 1 - i (2 - i w) t + O(t^2) for n0 = 1
        let w = c(1.0, 0.0);
        let tr = SeriesTruncation::default();
        let d = |h: f64| (psi1_series(w, 1, h, &tr).unwrap() - 1.0) / h;
        let rich = 2.0 * d(1e-4) - d(2e-4);
        assert!((rich - (-I * (2.0 - I * w))).norm() < 1e-6);
    }

    #[test]
    fn continuity_across_unit_modulus() {
        let tr = SeriesTruncation::default();
        for t in [0.7, 5.0, 30.0] {
            let lo = psi1_series(c(1.0 - 1e-6, 0.0), 2, t, &tr).unwrap();
            let hi = psi1_series(c(1.0 + 1e-6, 0.0), 2, t, &tr).unwrap();
            assert!((lo - hi).norm() < 1e-4);
        }
    }

    #[test]
    fn both_series_forms_agree_where_both_converge() {
        let w = c(1.3, 0.4);
        let top = bessel_cutoff(16.0, 4, 12.0);
        // the direct series still converges for moderate t thanks to the
        // Bessel decay, though with some cancellation
        let (direct, _) = series_direct(w, 4, 8.0, top + 200).unwrap();
        let (resummed, _) = series_resummed(w, 4, 8.0, top + 200).unwrap();
        assert!((direct - resummed).norm() < 1e-8);
    }

    #[test]
    fn laplace_initial_value_theorem() {
        for s in [1e2, 1e3] {
            let v = laplace_psi1(c(0.8, 0.3), 1, c(s, 0.0)).unwrap();
            assert!((v * s - 1.0).norm() < 5.0 / s);
        }
    }

    #[test]
    fn laplace_matches_time_domain() {
        let (w, n0) = (c(0.6, 0.2), 2);
        let s = 0.5;
        let tr = SeriesTruncation::default();
        let spec = QuadratureSpec::default().with_abs_tol(1e-12);
        let breaks = crate::numerics::linspace(0.0, 200.0, 201);
        let q = integrate_adaptive_breaks(
            |t: f64| psi1_series(w, n0, t, &tr).unwrap() * (-s * t).exp(),
            &breaks,
            &spec,
        )
        .unwrap();
        let l = laplace_psi1(w, n0, c(s, 0.0)).unwrap();
        assert!((q.value - l).norm() < 1e-6, "{} vs {l}", q.value);
    }

    #[test]
    fn laplace_matches_termwise_bessel_transform() {
        // L[J_k(2t)/(2t)](s) = theta_+(s/2 + i)^k / (2k) after the e^{-2it} shift
        let (w, n0) = (c(0.5, 0.1), 3);
        let s = c(1.0, 0.3);
        let (theta, _) = theta_pm(s / 2.0 + I).unwrap();
        let mut sum = C64::new(0.0, 0.0);
        let mut power = C64::new(1.0, 0.0);
        for k in 0..400 {
            let m = k + n0;
            sum += power * (m as f64) * theta.powu(m as u32) / (2.0 * m as f64);
            power *= -w;
        }
        let termwise = -2.0 * i_pow(n0 as i64 + 1) * sum;
        let direct = laplace_psi1(w, n0, s).unwrap();
        assert!((termwise - direct).norm() < 1e-12);
    }

    #[test]
    fn asymptotic_free_limit() {
        // w = 0: psi_1 = -i^(n0+1) e^{-2it} n0 J_n0(2t)/t exactly
        let t = 400.0;
        let tr = SeriesTruncation::default();
        let exact = psi1_series(c(0.0, 0.0), 3, t, &tr).unwrap();
        let asym = psi1_asymptotic(c(0.0, 0.0), 3, t);
        assert!((exact - asym).norm() < 0.02 * t.powf(-1.5));
    }

    #[test]
    fn asymptotic_matches_series_at_late_times() {
        let tr = SeriesTruncation::default();
        for (w, n0) in [(c(1.0, 0.0), 1), (c(0.5, 0.5), 3), (c(2.0, 1.0), 2)] {
            let t = 500.0;
            let s = psi1_series(w, n0, t, &tr).unwrap();
            let a = psi1_asymptotic(w, n0, t);
            let (aa, bb) = asymptotic_amplitudes(w, n0);
            let envelope = (aa.norm() + bb.norm()) / (2.0 * PI.sqrt() * t.powf(1.5));
            assert!((s - a).norm() < 0.05 * envelope, "w={w} n0={n0}");
        }
    }

    #[test]
    fn survival_limits() {
        let q = QuadratureSpec::default();
        let s = survival_halfline(c(1e-9, 0.5), 3, &q).unwrap();
        assert!((s - 1.0).abs() < 1e-8);
        for n0 in [2, 3, 7] {
            let s = survival_halfline(c(0.9, 0.2), n0, &q).unwrap();
            assert!(s > 0.0 && s < 1.0);
        }
    }

    #[test]
    fn large_n0_coefficient_at_unit_real_w() {
        let first = survival_first_integral(c(1.0, 0.0), &QuadratureSpec::default()).unwrap();
        let n0 = 40;
        let approx = survival_halfline_large_n0(c(1.0, 0.0), n0).unwrap();
        let expected = 1.0 - first - (1.0 / PI) * (2.0 / 4.0) / (n0 * n0) as f64;
        assert!((approx - expected).abs() < 1e-14);
        assert!(survival_halfline_large_n0(c(1e-13, 1.0), 5).is_err());
    }

    #[test]
    fn fullline_reflection_symmetry() {
        let q = QuadratureSpec::default();
        let a = survival_fullline(c(0.7, 0.1), 4, &q).unwrap();
        let b = survival_fullline(c(0.7, 0.1), -4, &q).unwrap();
        assert_eq!(a, b);
    }
}
