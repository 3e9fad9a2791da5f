//! Free Schrödinger evolution on the half-line and on the line with a
//! complex Robin condition at the origin, by expansion in the
//! eigenfunctions of the Robin Laplacian.

mod line;
mod moments;
mod packet;

pub use line::{expand_line, line_survival_and_fptd, LineExpansion, LineRoute};
pub use moments::{moment_ladder, predict_decay, DecayLaw, MomentLadder};
pub use packet::{InitialPacket, LinearSegment, PacketShape, TermCoef, TransformTerm};

use std::f64::consts::PI;

use crate::error::{Error, Result};
use crate::numerics::oscillatory::{Amplitude, OscillatoryIntegrand, PhaseComponent};
use crate::numerics::{integrate_adaptive_breaks, integrate_phase_sum, principal_sqrt, QuadratureSpec};
use crate::params::{continuum_has_bound, RobinParams, Route, SurvivalRecord, C64, I};

/// Largest real-axis cut-off the flux integration lets the oscillatory
/// integrator use near `t = 0`.
const FLUX_K_LIMIT: f64 = 2000.0;

/// Eigenfunctions of `-d^2/dx^2` on `x >= 0` with `Psi + zeta Psi' = 0` at 0.
#[derive(Debug, Clone)]
pub struct ContinuumBasis {
    zeta: C64,
    has_bound: bool,
    /// Gauss nodes and weights on `[0, 20]` for tabulating coefficients.
    pub k_grid: Vec<f64>,
    pub k_weights: Vec<f64>,
}

impl ContinuumBasis {
    pub fn new(zeta: C64) -> Result<Self> {
        let zeta = RobinParams::new(zeta)?.zeta();
        let rule = crate::numerics::GaussRule::get(8);
        let (mut k_grid, mut k_weights) = (Vec::new(), Vec::new());
        for p in 0..40 {
            let (a, b) = (0.5 * p as f64, 0.5 * (p + 1) as f64);
            for (x, w) in rule.nodes.iter().zip(&rule.weights) {
                k_grid.push(0.5 * (a + b) + 0.5 * (b - a) * x);
                k_weights.push(0.5 * (b - a) * w);
            }
        }
        Ok(Self {
            zeta,
            has_bound: continuum_has_bound(zeta),
            k_grid,
            k_weights,
        })
    }

    pub fn zeta(&self) -> C64 {
        self.zeta
    }

    pub fn has_bound(&self) -> bool {
        self.has_bound
    }

    pub fn scattering_energy(k: f64) -> f64 {
        k * k
    }

    /// `E_b = -1/zeta^2`.
    pub fn bound_energy(&self) -> Result<C64> {
        self.require_bound()?;
        Ok(-1.0 / (self.zeta * self.zeta))
    }

    /// `exp(i t / zeta^2)`; its modulus never exceeds 1 for a detecting boundary.
    pub fn bound_phase(&self, t: f64) -> Result<C64> {
        self.require_bound()?;
        let phase = (I * t / (self.zeta * self.zeta)).exp();
        debug_assert!(self.zeta.im > 0.0 || phase.norm() <= 1.0 + 1e-12);
        Ok(phase)
    }

    fn require_bound(&self) -> Result<()> {
        if !self.has_bound {
            return Err(Error::NoBoundState(format!("Re(zeta) = {} is not positive", self.zeta.re)));
        }
        Ok(())
    }

    /// `1 + zeta^2 k^2`.
    fn denom(&self, k: C64) -> C64 {
        1.0 + self.zeta * self.zeta * k * k
    }

    /// `(1 - i k zeta) e^{ikx} - (1 + i k zeta) e^{-ikx}`.
    fn wave(&self, k: C64, x: f64) -> C64 {
        (1.0 - I * k * self.zeta) * (I * k * x).exp() - (1.0 + I * k * self.zeta) * (-I * k * x).exp()
    }

    /// Radius outside which `1/(1 + zeta^2 k^2)` is analytic.
    fn pole_radius(&self) -> f64 {
        if self.zeta == C64::new(0.0, 0.0) {
            0.0
        } else {
            1.0 / self.zeta.norm()
        }
    }

    /// Prefactor of the detection density, `-2 Im(zeta)/|zeta|^2` (0 for real `zeta`).
    pub fn flux_factor(&self) -> f64 {
        if self.zeta.im == 0.0 {
            0.0
        } else {
            -2.0 * self.zeta.im / self.zeta.norm_sqr()
        }
    }
}

/// Half-line eigenfunctions.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ContinuumState {
    Scatter(f64),
    Bound,
}

/// `eta^k(x)` or `eta^b(x)` with principal square roots.
pub fn basis_eval_halfline(zeta: C64, state: ContinuumState, x: f64) -> Result<C64> {
    let basis = ContinuumBasis::new(zeta)?;
    if !(x >= 0.0) {
        return Err(Error::invalid("x", "must be >= 0"));
    }
    match state {
        ContinuumState::Scatter(k) => {
            if !(k > 0.0) {
                return Err(Error::invalid("k", "must be positive"));
            }
            let kc = C64::new(k, 0.0);
            Ok(I / principal_sqrt(2.0 * PI * basis.denom(kc)) * basis.wave(kc, x))
        }
        ContinuumState::Bound => {
            basis.require_bound()?;
            Ok(principal_sqrt(2.0 / zeta) * (-x / zeta).exp())
        }
    }
}

/// Eigenfunctions of the line problem.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum LineState {
    SymmetricScatter(f64),
    AntisymmetricScatter(f64),
    Bound,
}

pub fn basis_eval_line(zeta: C64, state: LineState, x: f64) -> Result<C64> {
    match state {
        LineState::SymmetricScatter(k) => {
            Ok(basis_eval_halfline(zeta, ContinuumState::Scatter(k), x.abs())? * std::f64::consts::FRAC_1_SQRT_2)
        }
        LineState::AntisymmetricScatter(k) => Ok(C64::new((k * x).sin() / PI.sqrt(), 0.0)),
        LineState::Bound => {
            let basis = ContinuumBasis::new(zeta)?;
            basis.require_bound()?;
            Ok((-x.abs() / zeta).exp() / principal_sqrt(zeta))
        }
    }
}

/// Coefficients of a half-line packet in a [`ContinuumBasis`].
#[derive(Debug, Clone)]
pub struct Expansion {
    basis: ContinuumBasis,
    packet: InitialPacket,
    terms: Vec<TransformTerm>,
    /// `c_b eta^b(x) = bound_weight * exp(-x/zeta)`.
    bound_weight: Option<C64>,
}

pub fn expand(packet: &InitialPacket, basis: &ContinuumBasis) -> Result<Expansion> {
    if !packet.on_half_line() {
        return Err(Error::invalid("packet", "support must lie in x >= 0"));
    }
    let bound_weight = if basis.has_bound {
        let zeta = basis.zeta;
        Some(2.0 / zeta * packet.transform(I / zeta))
    } else {
        None
    };
    Ok(Expansion {
        basis: basis.clone(),
        packet: packet.clone(),
        terms: packet.transform_terms(),
        bound_weight,
    })
}

impl Expansion {
    pub fn basis(&self) -> &ContinuumBasis {
        &self.basis
    }

    pub fn packet(&self) -> &InitialPacket {
        &self.packet
    }

    /// `Q(k) = (1 - ik zeta) T(k) - (1 + ik zeta) T(-k)`, so that
    /// `c(k) = i Q(k) / sqrt(2 pi (1 + zeta^2 k^2))`.
    fn q(&self, k: C64) -> C64 {
        let z = self.basis.zeta;
        (1.0 - I * k * z) * self.packet.transform(k) - (1.0 + I * k * z) * self.packet.transform(-k)
    }

    /// `c(k) = int Psi_0 eta^k dx`.
    pub fn c(&self, k: f64) -> C64 {
        let kc = C64::new(k, 0.0);
        I / principal_sqrt(2.0 * PI * self.basis.denom(kc)) * self.q(kc)
    }

    /// `c_b = int Psi_0 eta^b dx`.
    pub fn c_bound(&self) -> Option<C64> {
        let zeta = self.basis.zeta;
        self.bound_weight.map(|_| principal_sqrt(2.0 / zeta) * self.packet.transform(I / zeta))
    }

    /// `m = int (x - zeta) Psi_0 dx`; `c(k) ~ -2 k m / sqrt(2 pi)` as `k -> 0`.
    pub fn offset_moment(&self) -> C64 {
        self.packet.moment(1) - self.basis.zeta * self.packet.moment(0)
    }

    /// `c(k) eta^k(x)` as a sum of plane-wave components.
    fn integrand(&self, x: f64) -> OscillatoryIntegrand<'_> {
        let zeta = self.basis.zeta;
        let mut components: Vec<PhaseComponent<'_>> = Vec::new();
        let waves: [(f64, C64, f64); 2] = [(x, C64::new(1.0, 0.0), -1.0), (-x, C64::new(-1.0, 0.0), 1.0)];
        for &(wave_shift, wave_sign, wave_dir) in &waves {
            for term in &self.terms {
                for side in [1.0, -1.0] {
                    let coef = term.coef;
                    let amplitude: Amplitude<'_> = Box::new(move |k: C64| {
                        // wave factor: (1 - ik zeta) for e^{ikx}, -(1 + ik zeta) for e^{-ikx}
                        let wf = wave_sign * (1.0 + wave_dir * I * k * zeta);
                        let qf = if side > 0.0 {
                            (1.0 - I * k * zeta) * coef.eval(k)
                        } else {
                            -(1.0 + I * k * zeta) * coef.eval(-k)
                        };
                        -wf * qf / (2.0 * PI * (1.0 + zeta * zeta * k * k))
                    });
                    components.push(PhaseComponent {
                        shift: wave_shift + side * term.shift,
                        amplitude,
                    });
                }
            }
        }
        OscillatoryIntegrand {
            on_axis: Box::new(move |k: f64| {
                let kc = C64::new(k, 0.0);
                -self.basis.wave(kc, x) * self.q(kc) / (2.0 * PI * self.basis.denom(kc))
            }),
            components,
            analytic_radius: self.basis.pole_radius().max(self.packet.singular_radius()),
        }
    }

    fn bound_part(&self, x: f64, t: f64) -> Result<C64> {
        match self.bound_weight {
            Some(w) => Ok(w * (-x / self.basis.zeta).exp() * self.basis.bound_phase(t)?),
            None => Ok(C64::new(0.0, 0.0)),
        }
    }

    /// Largest phase shift of the `x = 0` integrand.
    fn boundary_shift(&self) -> f64 {
        self.terms.iter().map(|t| t.shift.abs()).fold(0.0, f64::max)
    }
}

/// `Psi(x, t)`.
pub fn evolve_halfline(exp: &Expansion, x: f64, t: f64, quad: &QuadratureSpec) -> Result<C64> {
    if !(x >= 0.0) || !x.is_finite() {
        return Err(Error::invalid("x", "must be finite and >= 0"));
    }
    if !t.is_finite() || t < 0.0 {
        return Err(Error::invalid("t", "must be finite and >= 0"));
    }
    let scatter = integrate_phase_sum(&exp.integrand(x), t, quad)?;
    Ok(scatter + exp.bound_part(x, t)?)
}

/// `Psi(0, t)`.
pub fn boundary_amplitude(exp: &Expansion, t: f64, quad: &QuadratureSpec) -> Result<C64> {
    if t == 0.0 {
        return Ok(exp.packet.eval(0.0));
    }
    evolve_halfline(exp, 0.0, t, quad)
}

/// `F(t) = -2 Im(zeta)/|zeta|^2 |Psi(0,t)|^2`.
pub fn detection_density(exp: &Expansion, t: f64, quad: &QuadratureSpec) -> Result<f64> {
    let factor = exp.basis.flux_factor();
    if factor == 0.0 {
        return Ok(0.0);
    }
    Ok(factor * boundary_amplitude(exp, t, quad)?.norm_sqr())
}

/// Integrated flux `int_a^b F dt`, where `F` is interpolated linearly to its
/// exact value at `t = 0` below the time at which the oscillatory integral
/// would need an excessive cut-off.
pub(crate) fn integrated_flux<G>(density: &G, f_zero: f64, shift: f64, a: f64, b: f64, quad: &QuadratureSpec) -> Result<f64>
where
    G: Fn(f64) -> Result<f64>,
{
    if b <= a {
        return Ok(0.0);
    }
    let t_min = (shift + 1.0) / FLUX_K_LIMIT;
    let mut total = 0.0;
    let mut lo = a;
    if lo < t_min {
        let hi = b.min(t_min);
        let f_min = density(t_min)?;
        let value_at = |t: f64| f_zero + (f_min - f_zero) * t / t_min;
        total += 0.5 * (value_at(lo) + value_at(hi)) * (hi - lo);
        lo = hi;
    }
    if lo >= b {
        return Ok(total);
    }
    let failure = std::cell::RefCell::new(None);
    let mut breaks = vec![lo];
    let mut edge = lo;
    while edge * 2.0 < b {
        edge *= 2.0;
        breaks.push(edge);
    }
    breaks.push(b);
    let q = integrate_adaptive_breaks(
        |t: f64| match density(t) {
            Ok(v) => C64::new(v, 0.0),
            Err(e) => {
                failure.borrow_mut().get_or_insert(e);
                C64::new(0.0, 0.0)
            }
        },
        &breaks,
        quad,
    )?;
    if let Some(e) = failure.into_inner() {
        return Err(e);
    }
    Ok(total + q.value.re)
}

/// Grids starting at or after this time are integrated backwards from
/// `S_inf`, which avoids the costly short-time flux.
pub const BACKWARD_FROM: f64 = 1.0;

/// Inputs shared by the half-line and line survival records.
pub(crate) struct FluxProblem<G> {
    pub density: G,
    pub f_zero: f64,
    pub shift: f64,
    pub norm: f64,
    pub flux_factor: f64,
}

/// `int_T^inf F dt`: adaptive over `[T, 4T]`, then a power law fitted to
/// `F(2T)` and `F(4T)`.
fn flux_tail<G>(density: &G, t: f64, quad: &QuadratureSpec) -> Result<f64>
where
    G: Fn(f64) -> Result<f64>,
{
    let failure = std::cell::RefCell::new(None);
    let head = integrate_adaptive_breaks(
        |s: f64| match density(s) {
            Ok(v) => C64::new(v, 0.0),
            Err(e) => {
                failure.borrow_mut().get_or_insert(e);
                C64::new(0.0, 0.0)
            }
        },
        &[t, 2.0 * t, 4.0 * t],
        quad,
    )?;
    if let Some(e) = failure.into_inner() {
        return Err(e);
    }
    let (f2, f4) = (density(2.0 * t)?, density(4.0 * t)?);
    if f4 == 0.0 {
        return Ok(head.value.re);
    }
    let power = (f2 / f4).ln() / 2f64.ln();
    if !(power > 1.2) {
        return Err(Error::TailBound(format!(
            "flux beyond t = {:.3e} decays as t^-{power:.2}, too slowly to extrapolate",
            4.0 * t
        )));
    }
    Ok(head.value.re + f4 * 4.0 * t / (power - 1.0))
}

/// `S` and `F` on a grid. Grids starting below [`BACKWARD_FROM`] integrate
/// `F` forwards from `S(0) = norm`; later grids start from `S_inf` and add
/// the flux still to come.
pub(crate) fn survival_on_grid<G, H>(
    problem: FluxProblem<G>,
    s_infinity: H,
    t_grid: &[f64],
    quad: &QuadratureSpec,
) -> Result<SurvivalRecord>
where
    G: Fn(f64) -> Result<f64>,
    H: FnOnce() -> Result<f64>,
{
    crate::params::validate_time_grid(t_grid)?;
    let FluxProblem {
        density,
        f_zero,
        shift,
        norm,
        flux_factor,
    } = problem;
    let flux_quad = quad.with_abs_tol(quad.abs_tol.max(1e-9));
    let mut record = SurvivalRecord::new(Route::Continuum);
    let f_at = |t: f64| if t == 0.0 { Ok(f_zero) } else { density(t) };
    if flux_factor == 0.0 {
        for &t in t_grid {
            record.push(t, norm, 0.0);
        }
        return Ok(record);
    }
    if t_grid[0] >= BACKWARD_FROM {
        let last = t_grid[t_grid.len() - 1];
        let mut survival = s_infinity()? + flux_tail(&density, last, &flux_quad)?;
        let mut rows = Vec::with_capacity(t_grid.len());
        let mut next = last;
        for &t in t_grid.iter().rev() {
            survival += integrated_flux(&density, f_zero, shift, t, next, &flux_quad)?;
            rows.push((t, survival, f_at(t)?));
            next = t;
        }
        for (t, s, f) in rows.into_iter().rev() {
            record.push(t, s, f);
        }
        record
            .notes
            .push("survival integrated backwards from its infinite-time limit".into());
        return Ok(record);
    }
    let mut survival = norm;
    let mut prev = 0.0;
    for &t in t_grid {
        survival -= integrated_flux(&density, f_zero, shift, prev, t, &flux_quad)?;
        record.push(t, survival, f_at(t)?);
        prev = t;
    }
    if prev > 0.0 {
        record
            .notes
            .push(format!("flux below t = {:.3e} interpolated to its t = 0 value", (shift + 1.0) / FLUX_K_LIMIT));
    }
    Ok(record)
}

/// Survival and detection density on a time grid; `S` is obtained by
/// integrating `F` between grid points.
pub fn survival_and_fptd(exp: &Expansion, t_grid: &[f64], quad: &QuadratureSpec) -> Result<SurvivalRecord> {
    let problem = FluxProblem {
        density: |t: f64| detection_density(exp, t, quad),
        f_zero: exp.basis.flux_factor() * exp.packet.eval(0.0).norm_sqr(),
        shift: exp.boundary_shift(),
        norm: exp.packet.norm_sqr(),
        flux_factor: exp.basis.flux_factor(),
    };
    survival_on_grid(problem, || survival_infinite(exp, quad), t_grid, quad)
}

/// `int_start^inf f(k) dk` for `f ~ (oscillating bounded)/k^2`: adaptive panels
/// over a long head, then the mean of `k^2 f` over the last half of the head
/// gives the remainder.
fn integrate_decaying<F: Fn(f64) -> f64>(f: F, start: f64, quad: &QuadratureSpec) -> Result<f64> {
    const HEAD: f64 = 400.0;
    let end = start + HEAD;
    let breaks: Vec<f64> = (0..=(2.0 * HEAD) as usize).map(|j| start + 0.5 * j as f64).collect();
    let head = integrate_adaptive_breaks(|k| C64::new(f(k), 0.0), &breaks, quad)?.value.re;
    let mid = end - 0.5 * HEAD;
    let weighted = integrate_adaptive_breaks(|k| C64::new(k * k * f(k), 0.0), &breaks[breaks.len() / 2..], quad)?
        .value
        .re;
    Ok(head + weighted / (end - mid) / end)
}

/// `S_inf = int_0^inf |(1 - i zeta k)/(1 + i zeta k)| |c(k)|^2 dk`.
pub fn survival_infinite(exp: &Expansion, quad: &QuadratureSpec) -> Result<f64> {
    integrate_decaying(|k| transmission_weight(exp, k), 0.0, quad)
}

fn transmission_weight(exp: &Expansion, k: f64) -> f64 {
    let zeta = exp.basis.zeta;
    let kc = C64::new(k, 0.0);
    ((1.0 - I * zeta * kc) / (1.0 + I * zeta * kc)).norm() * exp.c(k).norm_sqr()
}

/// Stationary-phase form `Psi(x, t) ~ i c(y) (1 - i zeta y)/sqrt(2t (1 + zeta^2 y^2)) e^{i(y^2 t - pi/4)}`
/// with `y = x/(2t)`.
pub fn asymptotic_profile(exp: &Expansion, x: f64, t: f64) -> C64 {
    let y = x / (2.0 * t);
    let zeta = exp.basis.zeta;
    let yc = C64::new(y, 0.0);
    I * exp.c(y) * (1.0 - I * zeta * yc) / principal_sqrt(2.0 * t * exp.basis.denom(yc))
        * C64::from_polar(1.0, y * y * t - PI / 4.0)
}

/// `int_0^X |Psi(x,t)|^2 dx` on panels of width `dx`, plus the stationary-phase
/// estimate of the remainder beyond `X`.
pub fn norm_direct(exp: &Expansion, t: f64, x_max: f64, dx: f64, quad: &QuadratureSpec) -> Result<f64> {
    if !(t > 0.0) {
        return Ok(exp.packet.norm_sqr());
    }
    let panels = (x_max / dx).ceil() as usize;
    let rule = crate::numerics::GaussRule::get(16);
    let mut head = 0.0;
    for p in 0..panels {
        let (a, b) = (p as f64 * dx, ((p + 1) as f64 * dx).min(x_max));
        for (node, weight) in rule.nodes.iter().zip(&rule.weights) {
            let x = 0.5 * (a + b) + 0.5 * (b - a) * node;
            head += 0.5 * (b - a) * weight * evolve_halfline(exp, x, t, quad)?.norm_sqr();
        }
    }
    let tail = integrate_decaying(|y| transmission_weight(exp, y), x_max / (2.0 * t), quad)?;
    Ok(head + tail)
}
