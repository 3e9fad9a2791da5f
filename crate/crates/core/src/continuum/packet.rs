//! Initial wave packets with closed-form transforms and moments.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::params::{C64, I};

/// A packet that is linear on `[start, end]`, from `left` to `right`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LinearSegment {
    pub start: f64,
    pub end: f64,
    pub left: C64,
    pub right: C64,
}

impl LinearSegment {
    pub fn constant(start: f64, end: f64, value: C64) -> Self {
        Self {
            start,
            end,
            left: value,
            right: value,
        }
    }

    fn slope(&self) -> C64 {
        (self.right - self.left) / (self.end - self.start)
    }

    fn value_at(&self, x: f64) -> C64 {
        self.left + self.slope() * (x - self.start)
    }

    fn restricted(&self, a: f64, b: f64) -> Self {
        Self {
            start: a,
            end: b,
            left: self.value_at(a),
            right: self.value_at(b),
        }
    }

    /// `int x^s v(x) dx` over the segment.
    fn moment(&self, s: u32) -> C64 {
        let (a, b) = (self.start, self.end);
        let sl = self.slope();
        let p = |e: i32| (b.powi(e) - a.powi(e)) / e as f64;
        (self.left - sl * a) * p(s as i32 + 1) + sl * p(s as i32 + 2)
    }

    /// `int v(x) e^{i kappa x} dx`, stable for small `kappa`.
    fn transform(&self, kappa: C64) -> C64 {
        let h = 0.5 * (self.end - self.start);
        let mid = 0.5 * (self.end + self.start);
        let z = kappa * h;
        let centre = self.value_at(mid);
        (I * kappa * mid).exp() * (centre * 2.0 * h * sinc(z) + 2.0 * I * self.slope() * h * h * odd_kernel(z))
    }
}

/// `sin z / z`.
fn sinc(z: C64) -> C64 {
    if z.norm() < 0.5 {
        let z2 = z * z;
        let mut term = C64::new(1.0, 0.0);
        let mut acc = term;
        for n in 1..12 {
            term *= -z2 / ((2 * n) as f64 * (2 * n + 1) as f64);
            acc += term;
        }
        acc
    } else {
        z.sin() / z
    }
}

/// `(sin z - z cos z) / z^2`.
fn odd_kernel(z: C64) -> C64 {
    if z.norm() < 0.5 {
        // sum_{n>=1} (-1)^{n+1} 2n z^{2n-1} / (2n+1)!
        let z2 = z * z;
        let mut power = z;
        let mut fact = 6.0;
        let mut acc = C64::new(0.0, 0.0);
        for n in 1..12 {
            let sign = if n % 2 == 1 { 1.0 } else { -1.0 };
            acc += power * (sign * 2.0 * n as f64 / fact);
            power *= z2;
            fact *= (2 * n + 2) as f64 * (2 * n + 3) as f64;
        }
        acc
    } else {
        (z.sin() - z * z.cos()) / (z * z)
    }
}

/// Coefficient of one plane-wave term of a packet transform.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum TermCoef {
    /// `first/(i kappa) + second/kappa^2`.
    Endpoint { first: C64, second: C64 },
    /// `amplitude / (rate - i kappa)`.
    Pole { amplitude: C64, rate: C64 },
}

impl TermCoef {
    pub fn eval(&self, kappa: C64) -> C64 {
        match *self {
            TermCoef::Endpoint { first, second } => first / (I * kappa) + second / (kappa * kappa),
            TermCoef::Pole { amplitude, rate } => amplitude / (rate - I * kappa),
        }
    }
}

/// `coef(kappa) e^{i kappa shift}`; summing the terms gives the transform
/// away from `kappa = 0`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TransformTerm {
    pub shift: f64,
    pub coef: TermCoef,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum PacketShape {
    /// Non-overlapping linear pieces, zero elsewhere.
    Segments { segments: Vec<LinearSegment> },
    /// `amplitude * exp(-x / decay_length)` on `x >= 0`.
    Exponential { amplitude: C64, decay_length: C64 },
}

/// Initial wave function `Psi_0(x)`.
#[derive(Debug, Clone, PartialEq)]
pub struct InitialPacket {
    shape: PacketShape,
}

impl InitialPacket {
    /// Overlapping pieces are summed; the result is split at 0 and at every
    /// piece boundary.
    pub fn segments(pieces: Vec<LinearSegment>) -> Result<Self> {
        if pieces.is_empty() {
            return Err(Error::invalid("segments", "at least one segment is required"));
        }
        for p in &pieces {
            let finite = p.start.is_finite()
                && p.end.is_finite()
                && [p.left, p.right].iter().all(|z| z.re.is_finite() && z.im.is_finite());
            if !finite || p.start >= p.end {
                return Err(Error::invalid("segments", format!("bad segment [{}, {}]", p.start, p.end)));
            }
        }
        let mut cuts: Vec<f64> = pieces.iter().flat_map(|p| [p.start, p.end]).collect();
        let lo = cuts.iter().copied().fold(f64::INFINITY, f64::min);
        let hi = cuts.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        if lo < 0.0 && hi > 0.0 {
            cuts.push(0.0);
        }
        cuts.sort_by(f64::total_cmp);
        cuts.dedup();
        let mut merged = Vec::new();
        for w in cuts.windows(2) {
            let (a, b) = (w[0], w[1]);
            let covering: Vec<&LinearSegment> = pieces.iter().filter(|p| p.start <= a && p.end >= b).collect();
            if covering.is_empty() {
                continue;
            }
            let (left, right) = covering.iter().fold((C64::new(0.0, 0.0), C64::new(0.0, 0.0)), |(l, r), p| {
                let q = p.restricted(a, b);
                (l + q.left, r + q.right)
            });
            merged.push(LinearSegment {
                start: a,
                end: b,
                left,
                right,
            });
        }
        Ok(Self {
            shape: PacketShape::Segments { segments: merged },
        })
    }

    /// Piecewise-constant packet from `(start, end, value)` triples.
    pub fn piecewise_constant(pieces: &[(f64, f64, C64)]) -> Result<Self> {
        Self::segments(pieces.iter().map(|&(a, b, v)| LinearSegment::constant(a, b, v)).collect())
    }

    pub fn indicator(start: f64, end: f64, value: C64) -> Result<Self> {
        Self::piecewise_constant(&[(start, end, value)])
    }

    /// Linear interpolation of samples, zero outside the sampled range.
    pub fn sampled(xs: &[f64], values: &[C64]) -> Result<Self> {
        if xs.len() != values.len() {
            return Err(Error::DimensionMismatch {
                expected: xs.len(),
                found: values.len(),
            });
        }
        if xs.len() < 2 {
            return Err(Error::invalid("samples", "need at least two points"));
        }
        if xs.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(Error::invalid("samples", "abscissae must be strictly increasing"));
        }
        Self::segments(
            xs.windows(2)
                .zip(values.windows(2))
                .map(|(x, v)| LinearSegment {
                    start: x[0],
                    end: x[1],
                    left: v[0],
                    right: v[1],
                })
                .collect(),
        )
    }

    /// Normalised `sqrt(1/l + 1/conj(l)) exp(-x/l)` on the half-line.
    pub fn exponential(decay_length: C64) -> Result<Self> {
        let rate = 1.0 / decay_length;
        if !(rate.re > 0.0) || !rate.im.is_finite() {
            return Err(Error::invalid("decay_length", "Re(1/decay_length) must be positive"));
        }
        Ok(Self {
            shape: PacketShape::Exponential {
                amplitude: C64::new((2.0 * rate.re).sqrt(), 0.0),
                decay_length,
            },
        })
    }

    pub fn from_shape(shape: PacketShape) -> Result<Self> {
        match shape {
            PacketShape::Segments { segments } => Self::segments(segments),
            PacketShape::Exponential { amplitude, decay_length } => {
                let mut p = Self::exponential(decay_length)?;
                p.shape = PacketShape::Exponential { amplitude, decay_length };
                Ok(p)
            }
        }
    }

    pub fn shape(&self) -> &PacketShape {
        &self.shape
    }

    pub fn scaled(&self, factor: C64) -> Self {
        let shape = match &self.shape {
            PacketShape::Segments { segments } => PacketShape::Segments {
                segments: segments
                    .iter()
                    .map(|s| LinearSegment {
                        left: s.left * factor,
                        right: s.right * factor,
                        ..*s
                    })
                    .collect(),
            },
            PacketShape::Exponential { amplitude, decay_length } => PacketShape::Exponential {
                amplitude: amplitude * factor,
                decay_length: *decay_length,
            },
        };
        Self { shape }
    }

    pub fn normalized(&self) -> Result<Self> {
        let n = self.norm_sqr();
        if !(n > 0.0) || !n.is_finite() {
            return Err(Error::invalid("packet", "zero or non-finite norm"));
        }
        Ok(self.scaled(C64::new(1.0 / n.sqrt(), 0.0)))
    }

    pub fn check_normalized(&self, tol: f64) -> Result<()> {
        let n = self.norm_sqr();
        if (n - 1.0).abs() > tol {
            return Err(Error::invalid("packet", format!("squared norm {n} differs from 1")));
        }
        Ok(())
    }

    /// `(inf, sup)` of the support (`sup` may be infinite).
    pub fn support(&self) -> (f64, f64) {
        match &self.shape {
            PacketShape::Segments { segments } => (segments[0].start, segments[segments.len() - 1].end),
            PacketShape::Exponential { .. } => (0.0, f64::INFINITY),
        }
    }

    pub fn on_half_line(&self) -> bool {
        self.support().0 >= 0.0
    }

    pub fn eval(&self, x: f64) -> C64 {
        match &self.shape {
            PacketShape::Segments { segments } => segments
                .iter()
                .find(|s| x >= s.start && x < s.end)
                .map(|s| s.value_at(x))
                .unwrap_or_default(),
            PacketShape::Exponential { amplitude, decay_length } => {
                if x < 0.0 {
                    C64::new(0.0, 0.0)
                } else {
                    amplitude * (-x / decay_length).exp()
                }
            }
        }
    }

    pub fn norm_sqr(&self) -> f64 {
        match &self.shape {
            PacketShape::Segments { segments } => segments
                .iter()
                .map(|s| {
                    let (l, r) = (s.left, s.right);
                    (s.end - s.start) * (l.norm_sqr() + (l * r.conj()).re + r.norm_sqr()) / 3.0
                })
                .sum(),
            PacketShape::Exponential { amplitude, decay_length } => {
                amplitude.norm_sqr() / (2.0 * (1.0 / decay_length).re)
            }
        }
    }

    /// `M_s = int x^s Psi_0(x) dx`.
    pub fn moment(&self, s: u32) -> C64 {
        match &self.shape {
            PacketShape::Segments { segments } => segments.iter().map(|seg| seg.moment(s)).sum(),
            PacketShape::Exponential { amplitude, decay_length } => {
                let fact: f64 = (1..=s).map(f64::from).product();
                amplitude * fact * decay_length.powu(s + 1)
            }
        }
    }

    /// Upper bound on `int |x|^s |Psi_0(x)| dx`, the scale below which a
    /// moment counts as cancelled.
    pub fn abs_moment_bound(&self, s: u32) -> f64 {
        match &self.shape {
            PacketShape::Segments { segments } => segments
                .iter()
                .map(|seg| {
                    let peak = seg.left.norm().max(seg.right.norm());
                    let p = s as i32 + 1;
                    let span = if seg.start >= 0.0 {
                        seg.end.powi(p) - seg.start.powi(p)
                    } else if seg.end <= 0.0 {
                        (-seg.start).powi(p) - (-seg.end).powi(p)
                    } else {
                        (-seg.start).powi(p) + seg.end.powi(p)
                    };
                    peak * span / p as f64
                })
                .sum(),
            PacketShape::Exponential { amplitude, decay_length } => {
                let fact: f64 = (1..=s).map(f64::from).product();
                amplitude.norm() * fact / (1.0 / decay_length).re.powi(s as i32 + 1)
            }
        }
    }

    /// `T(kappa) = int Psi_0(x) e^{i kappa x} dx` for complex `kappa`.
    pub fn transform(&self, kappa: C64) -> C64 {
        match &self.shape {
            PacketShape::Segments { segments } => segments.iter().map(|s| s.transform(kappa)).sum(),
            PacketShape::Exponential { amplitude, decay_length } => amplitude / (1.0 / decay_length - I * kappa),
        }
    }

    /// `int Psi_0(x) e^{i kappa |x|} dx`.
    pub fn transform_abs(&self, kappa: C64) -> C64 {
        match &self.shape {
            PacketShape::Segments { segments } => segments
                .iter()
                .map(|s| if s.start >= 0.0 { s.transform(kappa) } else { s.transform(-kappa) })
                .sum(),
            PacketShape::Exponential { .. } => self.transform(kappa),
        }
    }

    /// Plane-wave decomposition of [`Self::transform`].
    pub fn transform_terms(&self) -> Vec<TransformTerm> {
        match &self.shape {
            PacketShape::Segments { segments } => segments
                .iter()
                .flat_map(|s| {
                    let sl = s.slope();
                    [
                        TransformTerm {
                            shift: s.end,
                            coef: TermCoef::Endpoint {
                                first: s.right,
                                second: sl,
                            },
                        },
                        TransformTerm {
                            shift: s.start,
                            coef: TermCoef::Endpoint {
                                first: -s.left,
                                second: -sl,
                            },
                        },
                    ]
                })
                .collect(),
            PacketShape::Exponential { amplitude, decay_length } => vec![TransformTerm {
                shift: 0.0,
                coef: TermCoef::Pole {
                    amplitude: *amplitude,
                    rate: 1.0 / decay_length,
                },
            }],
        }
    }

    /// Largest `|kappa|` at which a term coefficient is singular.
    pub fn singular_radius(&self) -> f64 {
        match &self.shape {
            PacketShape::Segments { .. } => 0.0,
            PacketShape::Exponential { decay_length, .. } => (1.0 / decay_length).norm(),
        }
    }

    /// `(Psi_0(x) + Psi_0(-x))/2` restricted to `x >= 0`.
    pub fn symmetric_part(&self) -> Result<Self> {
        self.fold(1.0)
    }

    /// `(Psi_0(x) - Psi_0(-x))/2` restricted to `x >= 0`.
    pub fn antisymmetric_part(&self) -> Result<Self> {
        self.fold(-1.0)
    }

    fn fold(&self, parity: f64) -> Result<Self> {
        match &self.shape {
            PacketShape::Exponential { .. } => Ok(self.scaled(C64::new(0.5, 0.0))),
            PacketShape::Segments { segments } => {
                let mut out = Vec::new();
                for s in segments {
                    if s.start >= 0.0 {
                        out.push(LinearSegment {
                            left: 0.5 * s.left,
                            right: 0.5 * s.right,
                            ..*s
                        });
                    } else {
                        out.push(LinearSegment {
                            start: -s.end,
                            end: -s.start,
                            left: 0.5 * parity * s.right,
                            right: 0.5 * parity * s.left,
                        });
                    }
                }
                Self::segments(out)
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numerics::{integrate_adaptive_breaks, QuadratureSpec};

    fn c(re: f64, im: f64) -> C64 {
        C64::new(re, im)
    }

    fn two_step() -> InitialPacket {
        InitialPacket::piecewise_constant(&[(1.0, 2.0, c(-0.5, 0.5)), (2.0, 3.0, c(0.5, 0.5))]).unwrap()
    }

    #[test]
    fn step_packet_moments() {
        let p = two_step();
        assert!((p.norm_sqr() - 1.0).abs() < 1e-15);
        assert!((p.moment(1) - c(0.5, 2.0)).norm() < 1e-14);
        assert!((p.moment(3) - c(6.25, 10.0)).norm() < 1e-13);
        assert!((p.moment(0) - c(0.0, 1.0)).norm() < 1e-15);
    }

    #[test]
    fn overlapping_pieces_are_summed() {
        let p = InitialPacket::piecewise_constant(&[(0.0, 2.0, c(1.0, 0.0)), (1.0, 3.0, c(0.0, 1.0))]).unwrap();
        assert_eq!(p.eval(0.5), c(1.0, 0.0));
        assert_eq!(p.eval(1.5), c(1.0, 1.0));
        assert_eq!(p.eval(2.5), c(0.0, 1.0));
        assert!((p.norm_sqr() - 4.0).abs() < 1e-14);
    }

    #[test]
    fn transform_matches_quadrature() {
        let p = InitialPacket::sampled(&[0.5, 1.0, 2.5], &[c(0.0, 0.0), c(1.0, -0.5), c(0.2, 0.3)]).unwrap();
        let q = QuadratureSpec::default().with_abs_tol(1e-14);
        for kappa in [c(1e-6, 0.0), c(0.3, 0.0), c(4.0, 0.0), c(1.0, 0.7), c(-2.0, -0.4)] {
            let direct = integrate_adaptive_breaks(|x| p.eval(x) * (I * kappa * x).exp(), &[0.5, 1.0, 2.5], &q)
                .unwrap()
                .value;
            assert!((p.transform(kappa) - direct).norm() < 1e-12, "kappa {kappa}");
            if kappa.norm() > 0.1 {
                let terms: C64 = p
                    .transform_terms()
                    .iter()
                    .map(|t| t.coef.eval(kappa) * (I * kappa * t.shift).exp())
                    .sum();
                assert!((terms - direct).norm() < 1e-12);
            }
        }
    }

    #[test]
    fn exponential_packet() {
        let l = c(2.0, -0.5);
        let p = InitialPacket::exponential(l).unwrap();
        assert!((p.norm_sqr() - 1.0).abs() < 1e-14);
        let m0 = p.moment(0);
        let m1 = p.moment(1);
        assert!((m1 / m0 - l).norm() < 1e-14);
        assert!(InitialPacket::exponential(c(-1.0, 0.0)).is_err());
    }

    #[test]
    fn folding_into_parts() {
        let p = InitialPacket::piecewise_constant(&[(-2.0, -1.0, c(1.0, 0.0)), (0.5, 1.5, c(0.0, 2.0))]).unwrap();
        let s = p.symmetric_part().unwrap();
        let a = p.antisymmetric_part().unwrap();
        for x in [0.7, 1.2, 1.4, 1.7] {
            assert!((s.eval(x) - 0.5 * (p.eval(x) + p.eval(-x))).norm() < 1e-15);
            assert!((a.eval(x) - 0.5 * (p.eval(x) - p.eval(-x))).norm() < 1e-15);
        }
    }

    #[test]
    fn rejects_bad_input() {
        assert!(InitialPacket::indicator(2.0, 1.0, c(1.0, 0.0)).is_err());
        assert!(InitialPacket::sampled(&[0.0, 0.0], &[c(1.0, 0.0), c(1.0, 0.0)]).is_err());
        assert!(InitialPacket::segments(vec![]).is_err());
    }
}
