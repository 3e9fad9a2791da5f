//! The line problem with the jump condition
//! `2 Psi(0) + zeta (Psi'(0+) - Psi'(0-)) = 0`.

use std::f64::consts::PI;

use super::{
    boundary_amplitude, evolve_halfline, expand, survival_infinite, survival_on_grid, FluxProblem, ContinuumBasis, Expansion, InitialPacket, TransformTerm,
};
use crate::error::{Error, Result};
use crate::numerics::oscillatory::{Amplitude, OscillatoryIntegrand, PhaseComponent};
use crate::numerics::{integrate_phase_sum, QuadratureSpec};
use crate::params::{SurvivalRecord, C64, I};

/// How [`LineExpansion::evolve`] assembles `Psi(x, t)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LineRoute {
    /// Symmetric part through the Robin half-line solver, antisymmetric part
    /// through the Dirichlet half-line solver.
    Decomposition,
    /// One integral over the line eigenbasis.
    Direct,
}

#[derive(Debug, Clone)]
pub struct LineExpansion {
    zeta: C64,
    packet: InitialPacket,
    symmetric: Expansion,
    antisymmetric: Expansion,
}

pub fn expand_line(packet: &InitialPacket, zeta: C64) -> Result<LineExpansion> {
    let robin = ContinuumBasis::new(zeta)?;
    let dirichlet = ContinuumBasis::new(C64::new(0.0, 0.0))?;
    Ok(LineExpansion {
        zeta: robin.zeta(),
        packet: packet.clone(),
        symmetric: expand(&packet.symmetric_part()?, &robin)?,
        antisymmetric: expand(&packet.antisymmetric_part()?, &dirichlet)?,
    })
}

impl LineExpansion {
    pub fn zeta(&self) -> C64 {
        self.zeta
    }

    pub fn symmetric(&self) -> &Expansion {
        &self.symmetric
    }

    pub fn antisymmetric(&self) -> &Expansion {
        &self.antisymmetric
    }

    pub fn evolve(&self, x: f64, t: f64, route: LineRoute, quad: &QuadratureSpec) -> Result<C64> {
        if !x.is_finite() {
            return Err(Error::invalid("x", "must be finite"));
        }
        match route {
            LineRoute::Decomposition => {
                let s = evolve_halfline(&self.symmetric, x.abs(), t, quad)?;
                let a = evolve_halfline(&self.antisymmetric, x.abs(), t, quad)?;
                Ok(s + x.signum() * a)
            }
            LineRoute::Direct => self.evolve_direct(x, t, quad),
        }
    }

    /// Terms of `int Psi_0(x) e^{i kappa |x|} dx`, which is twice the
    /// transform of the symmetric part.
    fn abs_terms(&self) -> Vec<TransformTerm> {
        self.symmetric.packet().transform_terms()
    }

    fn evolve_direct(&self, x: f64, t: f64, quad: &QuadratureSpec) -> Result<C64> {
        let zeta = self.zeta;
        let ax = x.abs();
        let abs_terms = self.abs_terms();
        let plain = self.packet.transform_terms();
        let mut components: Vec<PhaseComponent<'_>> = Vec::new();
        for (wave_shift, wave_sign, wave_dir) in [(ax, 1.0, -1.0), (-ax, -1.0, 1.0)] {
            for term in &abs_terms {
                for side in [1.0, -1.0] {
                    let term = *term;
                    let amplitude: Amplitude<'_> = Box::new(move |k: C64| {
                        let wf = wave_sign * (1.0 + wave_dir * I * k * zeta);
                        let qf = if side > 0.0 {
                            (1.0 - I * k * zeta) * term.coef.eval(k)
                        } else {
                            -(1.0 + I * k * zeta) * term.coef.eval(-k)
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
        // (1/pi) sin(kx) (T(k) - T(-k))/(2i) = -(1/4pi)(e^{ikx} - e^{-ikx})(T(k) - T(-k))
        for (wave_shift, wave_sign) in [(x, 1.0), (-x, -1.0)] {
            for term in &plain {
                for side in [1.0, -1.0] {
                    let coef = term.coef;
                    let amplitude: Amplitude<'_> =
                        Box::new(move |k: C64| -wave_sign * side * coef.eval(side * k) / (4.0 * PI));
                    components.push(PhaseComponent {
                        shift: wave_shift + side * term.shift,
                        amplitude,
                    });
                }
            }
        }
        let packet = &self.packet;
        let integrand = OscillatoryIntegrand {
            on_axis: Box::new(move |k: f64| {
                let kc = C64::new(k, 0.0);
                let wave = (1.0 - I * kc * zeta) * (I * kc * ax).exp() - (1.0 + I * kc * zeta) * (-I * kc * ax).exp();
                let q = (1.0 - I * kc * zeta) * packet.transform_abs(kc) - (1.0 + I * kc * zeta) * packet.transform_abs(-kc);
                let odd = (packet.transform(kc) - packet.transform(-kc)) / (2.0 * I);
                -wave * q / (4.0 * PI * (1.0 + zeta * zeta * kc * kc)) + (k * x).sin() / PI * odd
            }),
            components,
            analytic_radius: if zeta == C64::new(0.0, 0.0) { 0.0 } else { 1.0 / zeta.norm() }
                .max(packet.singular_radius()),
        };
        let mut value = integrate_phase_sum(&integrand, t, quad)?;
        if self.symmetric.basis().has_bound() {
            let weight = packet.transform_abs(I / zeta) / zeta;
            value += weight * (-ax / zeta).exp() * self.symmetric.basis().bound_phase(t)?;
        }
        Ok(value)
    }

    /// `F(t) = -4 Im(zeta)/|zeta|^2 |Psi(0, t)|^2`.
    pub fn detection_density(&self, t: f64, quad: &QuadratureSpec) -> Result<f64> {
        let factor = 2.0 * self.symmetric.basis().flux_factor();
        if factor == 0.0 {
            return Ok(0.0);
        }
        Ok(factor * boundary_amplitude(&self.symmetric, t, quad)?.norm_sqr())
    }
}

pub fn line_survival_and_fptd(le: &LineExpansion, t_grid: &[f64], quad: &QuadratureSpec) -> Result<SurvivalRecord> {
    let factor = 2.0 * le.symmetric.basis().flux_factor();
    let shift = le
        .symmetric
        .packet()
        .transform_terms()
        .iter()
        .map(|t| t.shift.abs())
        .fold(0.0, f64::max);
    let problem = FluxProblem {
        density: |t: f64| le.detection_density(t, quad),
        f_zero: factor * le.symmetric.packet().eval(0.0).norm_sqr(),
        shift,
        norm: le.packet.norm_sqr(),
        flux_factor: factor,
    };
    // Only the symmetric part is absorbed, at twice its half-line rate.
    let s_infinity = || {
        let half = le.symmetric.packet().norm_sqr() - survival_infinite(&le.symmetric, quad)?;
        Ok(le.packet.norm_sqr() - 2.0 * half)
    };
    survival_on_grid(problem, s_infinity, t_grid, quad)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> C64 {
        C64::new(re, im)
    }

    fn quad() -> QuadratureSpec {
        QuadratureSpec::default().with_abs_tol(1e-12)
    }

    fn generic() -> InitialPacket {
        InitialPacket::piecewise_constant(&[(-2.0, -0.5, c(0.3, 0.4)), (0.5, 1.5, c(0.6, -0.2))])
            .unwrap()
            .normalized()
            .unwrap()
    }

    #[test]
    fn routes_agree_for_generic_packet() {
        let le = expand_line(&generic(), c(0.2, -0.5)).unwrap();
        for (x, t) in [(-1.0, 0.3), (0.8, 0.3), (2.5, 1.0), (-0.2, 2.0), (0.0, 0.7)] {
            let a = le.evolve(x, t, LineRoute::Decomposition, &quad()).unwrap();
            let b = le.evolve(x, t, LineRoute::Direct, &quad()).unwrap();
            assert!((a - b).norm() < 1e-8, "x={x} t={t}: {a} vs {b}");
        }
    }

    #[test]
    fn reconstructs_at_time_zero() {
        let p = generic();
        let le = expand_line(&p, c(0.2, -0.5)).unwrap();
        for x in [-1.5, -0.2, 1.0, 3.0] {
            for route in [LineRoute::Decomposition, LineRoute::Direct] {
                let v = le.evolve(x, 0.0, route, &quad()).unwrap();
                assert!((v - p.eval(x)).norm() < 1e-6, "{route:?} x={x}: {v}");
            }
        }
    }

    #[test]
    fn antisymmetric_packet_is_never_detected() {
        let p = InitialPacket::piecewise_constant(&[(-2.0, -1.0, c(-1.0, 0.0)), (1.0, 2.0, c(1.0, 0.0))])
            .unwrap()
            .normalized()
            .unwrap();
        let le = expand_line(&p, c(0.2, -0.5)).unwrap();
        let rec = line_survival_and_fptd(&le, &[0.0, 0.5, 2.0], &quad()).unwrap();
        assert!(rec.survival.iter().all(|s| (s - 1.0).abs() < 1e-8));
        let psi0 = le.evolve(0.0, 1.0, LineRoute::Direct, &quad()).unwrap();
        assert!(psi0.norm() < 1e-10);
    }

    #[test]
    fn backward_line_survival_matches_forward() {
        let le = expand_line(&generic(), c(0.2, -0.5)).unwrap();
        let forward = line_survival_and_fptd(&le, &[0.0, 3.0], &quad()).unwrap();
        let backward = line_survival_and_fptd(&le, &[3.0], &quad()).unwrap();
        assert!((forward.survival[1] - backward.survival[0]).abs() < 2e-5);
    }

    #[test]
    fn line_flux_is_twice_halfline_flux_of_symmetric_part() {
        let zeta = c(0.2, -0.5);
        let le = expand_line(&generic(), zeta).unwrap();
        let sym = le.symmetric().clone();
        for t in [0.5, 3.0] {
            let line = le.detection_density(t, &quad()).unwrap();
            let half = super::super::detection_density(&sym, t, &quad()).unwrap();
            assert!((line - 2.0 * half).abs() <= 1e-12 * line.abs().max(1e-300));
        }
    }
}
