//! Packet moments and the power-law decay of the detection density they
//! imply.

use std::f64::consts::PI;

use serde::Serialize;

use super::InitialPacket;
use crate::error::{Error, Result};
use crate::numerics::gamma_half_integer;
use crate::params::C64;

/// `M_s = int x^s Psi_0 dx` for `s = 0..=2 s_max + 1` and the ratios
/// `zeta_s = M_{2s+1} / ((2s+1) M_{2s})` (`None` when `M_{2s} = 0`).
#[derive(Debug, Clone, Serialize)]
pub struct MomentLadder {
    pub moments: Vec<C64>,
    pub zetas: Vec<Option<C64>>,
}

impl MomentLadder {
    /// `M_{2s+1} - (2s+1) zeta M_{2s}`.
    pub fn defect(&self, s: usize, zeta: C64) -> C64 {
        self.moments[2 * s + 1] - (2 * s + 1) as f64 * zeta * self.moments[2 * s]
    }

    /// Whether the defect at order `s` vanishes relative to its parts.
    fn defect_vanishes(&self, s: usize, zeta: C64) -> bool {
        let scale = self.moments[2 * s + 1].norm() + (2 * s + 1) as f64 * (zeta * self.moments[2 * s]).norm();
        self.defect(s, zeta).norm() <= 1e-10 * scale.max(f64::MIN_POSITIVE)
    }
}

pub fn moment_ladder(packet: &InitialPacket, s_max: usize) -> Result<MomentLadder> {
    if s_max > 40 {
        return Err(Error::invalid("s_max", "at most 40"));
    }
    let moments: Vec<C64> = (0..=(2 * s_max + 1) as u32).map(|s| packet.moment(s)).collect();
    if moments.iter().any(|m| !m.re.is_finite() || !m.im.is_finite()) {
        return Err(Error::NonFinite("packet moment"));
    }
    let zetas = (0..=s_max)
        .map(|s| {
            let even = moments[2 * s];
            if even.norm() <= 1e-13 * packet.abs_moment_bound(2 * s as u32) {
                None
            } else {
                Some(moments[2 * s + 1] / ((2 * s + 1) as f64 * even))
            }
        })
        .collect();
    Ok(MomentLadder { moments, zetas })
}

/// Long-time law of `F(t)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum DecayLaw {
    /// `F(t) ~ coefficient / t^exponent`, set by the first nonzero defect at `order`.
    PowerLaw { order: usize, exponent: u32, coefficient: f64 },
    /// Every defect up to `s_max` vanishes.
    Exponential,
}

/// `F(t) ~ -(8 Im zeta / pi^2) |D_s|^2 (Gamma(s + 3/2)/2)^2 / ((2s+1)!)^2 t^{-(3+2s)}`
/// with `D_s = M_{2s+1} - (2s+1) zeta M_{2s}` the first nonzero defect.
pub fn predict_decay(packet: &InitialPacket, zeta: C64, s_max: usize) -> Result<DecayLaw> {
    let ladder = moment_ladder(packet, s_max)?;
    for s in 0..=s_max {
        if ladder.defect_vanishes(s, zeta) {
            continue;
        }
        let d = ladder.defect(s, zeta);
        let fact: f64 = (1..=(2 * s + 1)).map(|j| j as f64).product();
        let half_gamma = 0.5 * gamma_half_integer(s);
        let coefficient = -8.0 * zeta.im / (PI * PI) * d.norm_sqr() * (half_gamma / fact).powi(2);
        return Ok(DecayLaw::PowerLaw {
            order: s,
            exponent: 3 + 2 * s as u32,
            coefficient,
        });
    }
    Ok(DecayLaw::Exponential)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> C64 {
        C64::new(re, im)
    }

    fn two_step() -> InitialPacket {
        InitialPacket::piecewise_constant(&[(1.0, 2.0, c(-0.5, 0.5)), (2.0, 3.0, c(0.5, 0.5))]).unwrap()
    }

    #[test]
    fn ladder_of_two_step_packet() {
        let l = moment_ladder(&two_step(), 1).unwrap();
        assert!((l.moments[1] - c(0.5, 2.0)).norm() < 1e-14);
        assert!((l.zetas[0].unwrap() - c(2.0, -0.5)).norm() < 1e-14);
        assert!((l.moments[3] - c(6.25, 10.0)).norm() < 1e-13);
        assert!((l.zetas[1].unwrap() - c(67.0 / 82.0, -17.0 / 164.0)).norm() < 1e-14);
    }

    #[test]
    fn exponential_packet_has_constant_ladder() {
        let z0 = c(1.5, -0.7);
        let l = moment_ladder(&InitialPacket::exponential(z0).unwrap(), 4).unwrap();
        for z in &l.zetas {
            assert!((z.unwrap() - z0).norm() < 1e-12);
        }
        assert_eq!(predict_decay(&InitialPacket::exponential(z0).unwrap(), z0, 6).unwrap(), DecayLaw::Exponential);
    }

    #[test]
    fn vanishing_even_moment_gives_sentinel() {
        let p = InitialPacket::piecewise_constant(&[(1.0, 2.0, c(1.0, 0.0)), (2.0, 3.0, c(-1.0, 0.0))]).unwrap();
        let l = moment_ladder(&p, 0).unwrap();
        assert!(l.zetas[0].is_none());
    }

    #[test]
    fn predicted_coefficients() {
        match predict_decay(&two_step(), c(1.0, -1.0), 3).unwrap() {
            DecayLaw::PowerLaw { exponent, coefficient, .. } => {
                assert_eq!(exponent, 3);
                assert!((coefficient - 5.0 / (8.0 * PI)).abs() < 1e-13);
            }
            other => panic!("{other:?}"),
        }
        match predict_decay(&two_step(), c(2.0, -0.5), 3).unwrap() {
            DecayLaw::PowerLaw { exponent, coefficient, .. } => {
                assert_eq!(exponent, 5);
                assert!((coefficient - 5105.0 / (1024.0 * PI)).abs() < 1e-12);
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn real_symmetric_packet_has_real_moments() {
        let p = InitialPacket::indicator(1.0, 3.0, c(0.5, 0.0)).unwrap();
        let l = moment_ladder(&p, 3).unwrap();
        assert!(l.moments.iter().all(|m| m.im == 0.0));
    }
}
