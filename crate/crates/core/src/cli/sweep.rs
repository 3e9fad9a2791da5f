//! Parameter sweeps of the infinite-time survival probability.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::output::Field;
use super::scenario::{as_config, check_name, check_schema, Grid, PacketSpec};
use crate::analytic::{survival_fullline, survival_halfline};
use crate::continuum::{expand, survival_infinite, ContinuumBasis};
use crate::error::{Error, Result};
use crate::numerics::QuadratureSpec;
use crate::params::C64;

/// Upper bound on the number of grid points of one sweep.
pub const MAX_POINTS: usize = 10_000;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum SweepSystem {
    /// `S_inf` on the half line over `w = alpha + i beta` and start sites.
    HalfLine { alpha: Grid, beta: Grid, n0: Vec<u32> },
    /// As `half_line`, on the full line.
    FullLine { alpha: Grid, beta: Grid, n0: Vec<i32> },
    /// `S_inf` for one packet over Robin constants `zeta_re + i zeta_im`.
    Continuum {
        zeta_re: Grid,
        zeta_im: Grid,
        packet: PacketSpec,
        #[serde(default)]
        normalize: bool,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepSpec {
    pub schema_version: u32,
    pub name: String,
    pub system: SweepSystem,
}

/// One grid point in deterministic order.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum SweepPoint {
    Lattice { w: C64, n0: i64 },
    Continuum { zeta: C64 },
}

impl SweepSpec {
    pub fn header(&self) -> Vec<&'static str> {
        match self.system {
            SweepSystem::Continuum { .. } => vec!["zeta_re", "zeta_im", "s_infinity", "status"],
            _ => vec!["alpha", "beta", "n0", "s_infinity", "status"],
        }
    }

    /// Grid points, outer loop over the first axis.
    pub fn points(&self) -> Result<Vec<SweepPoint>> {
        let (a, b, count) = match &self.system {
            SweepSystem::HalfLine { alpha, beta, n0 } => (alpha, beta, n0.len()),
            SweepSystem::FullLine { alpha, beta, n0 } => (alpha, beta, n0.len()),
            SweepSystem::Continuum { zeta_re, zeta_im, .. } => (zeta_re, zeta_im, 1),
        };
        let total = a.len().saturating_mul(b.len()).saturating_mul(count);
        if total == 0 || total > MAX_POINTS {
            return Err(Error::Config(format!("sweep has {total} points (allowed 1..={MAX_POINTS})")));
        }
        let xs = a.points("first axis")?;
        let ys = b.points("second axis")?;
        let mut out = Vec::with_capacity(total);
        for &x in &xs {
            for &y in &ys {
                match &self.system {
                    SweepSystem::HalfLine { n0, .. } => out.extend(n0.iter().map(|&n| SweepPoint::Lattice {
                        w: C64::new(x, y),
                        n0: n as i64,
                    })),
                    SweepSystem::FullLine { n0, .. } => out.extend(n0.iter().map(|&n| SweepPoint::Lattice {
                        w: C64::new(x, y),
                        n0: n as i64,
                    })),
                    SweepSystem::Continuum { .. } => out.push(SweepPoint::Continuum { zeta: C64::new(x, y) }),
                }
            }
        }
        Ok(out)
    }

    pub fn validate(&self) -> Result<()> {
        check_schema(self.schema_version)?;
        check_name(&self.name)?;
        match &self.system {
            SweepSystem::HalfLine { n0, .. } => {
                if n0.contains(&0) {
                    return Err(Error::Config("n0 must be >= 1".into()));
                }
            }
            SweepSystem::FullLine { n0, .. } => {
                if n0.contains(&0) {
                    return Err(Error::Config("n0 must be nonzero".into()));
                }
            }
            SweepSystem::Continuum { packet, normalize, .. } => {
                let p = packet.build(*normalize)?;
                if !p.on_half_line() {
                    return Err(Error::Config("continuum sweeps need a packet on x >= 0".into()));
                }
            }
        }
        self.points()?;
        Ok(())
    }

    /// One row per grid point in grid order; failures are recorded in the
    /// status column and the sweep continues.
    pub fn run(&self, quad: &QuadratureSpec) -> Result<Vec<Vec<Field>>> {
        let points = self.points()?;
        let packet = match &self.system {
            SweepSystem::Continuum { packet, normalize, .. } => Some(packet.build(*normalize)?),
            _ => None,
        };
        let full_line = matches!(self.system, SweepSystem::FullLine { .. });
        let rows = points
            .par_iter()
            .map(|point| {
                let value = match *point {
                    SweepPoint::Lattice { w, n0 } => {
                        if full_line {
                            survival_fullline(w, n0, quad)
                        } else {
                            survival_halfline(w, n0 as usize, quad)
                        }
                    }
                    SweepPoint::Continuum { zeta } => ContinuumBasis::new(zeta).and_then(|basis| {
                        let exp = expand(packet.as_ref().expect("continuum packet"), &basis)?;
                        survival_infinite(&exp, quad)
                    }),
                };
                let (s, status) = match value {
                    Ok(s) => (s, "ok".to_string()),
                    Err(e) => (f64::NAN, e.to_string()),
                };
                match *point {
                    SweepPoint::Lattice { w, n0 } => vec![
                        Field::Num(w.re),
                        Field::Num(w.im),
                        Field::Int(n0),
                        Field::Num(s),
                        Field::Text(status),
                    ],
                    SweepPoint::Continuum { zeta } => {
                        vec![Field::Num(zeta.re), Field::Num(zeta.im), Field::Num(s), Field::Text(status)]
                    }
                }
            })
            .collect();
        Ok(rows)
    }
}

/// Parses and validates a sweep document.
pub fn parse_sweep(text: &str) -> Result<SweepSpec> {
    let spec: SweepSpec = serde_json::from_str(text).map_err(|e| Error::Config(format!("sweep: {e}")))?;
    spec.validate().map_err(as_config)?;
    Ok(spec)
}

#[cfg(test)]
mod tests {
    use super::*;

    const SPEC: &str = r#"{
        "schema_version": 1, "name": "alpha",
        "system": {"kind": "half_line", "alpha": {"start": 0.5, "stop": 2, "count": 4},
                   "beta": {"values": [0.5]}, "n0": [1, 5]}
    }"#;

    #[test]
    fn grid_order_is_deterministic() {
        let spec = parse_sweep(SPEC).unwrap();
        let pts = spec.points().unwrap();
        assert_eq!(pts.len(), 8);
        assert_eq!(pts[1], SweepPoint::Lattice { w: C64::new(0.5, 0.5), n0: 5 });
        assert_eq!(pts[2], SweepPoint::Lattice { w: C64::new(1.0, 0.5), n0: 1 });
    }

    #[test]
    fn failures_are_recorded_per_point() {
        let text = SPEC.replace("\"start\": 0.5", "\"start\": 0.0");
        let rows = parse_sweep(&text).unwrap().run(&QuadratureSpec::default()).unwrap();
        assert!(matches!(&rows[0][4], Field::Text(s) if s != "ok"));
        assert!(matches!(&rows[2][4], Field::Text(s) if s == "ok"));
    }

    #[test]
    fn rejects_oversized_and_malformed() {
        let big = SPEC.replace("\"count\": 4", "\"count\": 6000");
        assert!(parse_sweep(&big).unwrap_err().is_config());
        assert!(parse_sweep(&SPEC.replace("[1, 5]", "[0]")).is_err());
        assert!(parse_sweep("[]").is_err());
    }
}
