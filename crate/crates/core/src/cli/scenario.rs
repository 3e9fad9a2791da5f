//! Scenario documents: one JSON object per run.

use serde::{Deserialize, Serialize};

use crate::continuum::{InitialPacket, LinearSegment};
use crate::error::{Error, Result};
use crate::numerics::linspace;
use crate::params::{validate_time_grid, LatticeKind, LatticeModel, WaveState, C64};

pub const SCHEMA_VERSION: u32 = 1;

/// Largest number of entries accepted in any grid or parameter list.
pub const MAX_GRID: usize = 1_000_000;
const MAX_PARAMS: usize = 1000;

/// A complex number written either as a plain number or as `[re, im]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum ComplexValue {
    Real(f64),
    Pair([f64; 2]),
}

impl ComplexValue {
    pub fn value(self) -> C64 {
        match self {
            ComplexValue::Real(re) => C64::new(re, 0.0),
            ComplexValue::Pair([re, im]) => C64::new(re, im),
        }
    }
}

/// Explicit values or `count` evenly spaced points from `start` to `stop`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Grid {
    Values { values: Vec<f64> },
    Even { start: f64, stop: f64, count: usize },
}

impl Grid {
    pub fn len(&self) -> usize {
        match self {
            Grid::Values { values } => values.len(),
            Grid::Even { count, .. } => *count,
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Checked expansion into points.
    pub fn points(&self, what: &str) -> Result<Vec<f64>> {
        let pts = match self {
            Grid::Values { values } => {
                if values.len() > MAX_GRID {
                    return Err(Error::Config(format!("{what}: more than {MAX_GRID} values")));
                }
                values.clone()
            }
            Grid::Even { start, stop, count } => {
                if *count == 0 || *count > MAX_GRID {
                    return Err(Error::Config(format!("{what}: count must be in 1..={MAX_GRID}")));
                }
                if !start.is_finite() || !stop.is_finite() {
                    return Err(Error::Config(format!("{what}: start and stop must be finite")));
                }
                if *count == 1 {
                    vec![*start]
                } else {
                    linspace(*start, *stop, *count)
                }
            }
        };
        if pts.is_empty() {
            return Err(Error::Config(format!("{what}: empty grid")));
        }
        if pts.iter().any(|v| !v.is_finite()) {
            return Err(Error::Config(format!("{what}: values must be finite")));
        }
        Ok(pts)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum RouteChoice {
    Stroboscopic,
    Effective,
    Analytic,
    Spectral,
    Continuum,
    All,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case", deny_unknown_fields)]
pub enum InitialState {
    Site { site: i64 },
    Superposition { sites: Vec<i64>, amplitudes: Vec<ComplexValue> },
}

impl InitialState {
    /// `(site, amplitude)` pairs.
    pub fn terms(&self) -> Vec<(i64, C64)> {
        match self {
            InitialState::Site { site } => vec![(*site, C64::new(1.0, 0.0))],
            InitialState::Superposition { sites, amplitudes } => {
                sites.iter().zip(amplitudes).map(|(&s, a)| (s, a.value())).collect()
            }
        }
    }

    pub fn on(&self, lattice: &LatticeModel) -> Result<WaveState> {
        let mut amps = vec![C64::new(0.0, 0.0); lattice.dim()];
        for (site, a) in self.terms() {
            let idx = lattice
                .index_of(site)
                .ok_or_else(|| Error::Config(format!("initial site {site} is not on the lattice")))?;
            amps[idx] += a;
        }
        let state = WaveState::new(0.0, amps);
        state
            .check_normalized(1e-8)
            .map_err(|_| Error::Config(format!("initial state has norm^2 {} (must be 1)", state.norm_sqr())))?;
        Ok(state)
    }

    /// Largest `|site|`.
    pub fn reach(&self) -> usize {
        self.terms().iter().map(|(s, _)| s.unsigned_abs() as usize).max().unwrap_or(1)
    }

    fn validate(&self) -> Result<()> {
        if let InitialState::Superposition { sites, amplitudes } = self {
            if sites.is_empty() || sites.len() != amplitudes.len() {
                return Err(Error::Config("superposition needs equally many sites and amplitudes".into()));
            }
            if sites.len() > MAX_GRID {
                return Err(Error::Config("superposition too large".into()));
            }
        }
        for (site, a) in self.terms() {
            if site == 0 {
                return Err(Error::Config("site 0 is the detector".into()));
            }
            if site.unsigned_abs() > MAX_GRID as u64 {
                return Err(Error::Config(format!("site {site} out of range")));
            }
            if !a.re.is_finite() || !a.im.is_finite() {
                return Err(Error::Config("amplitudes must be finite".into()));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub struct Piece {
    pub start: f64,
    pub end: f64,
    pub value: ComplexValue,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case", deny_unknown_fields)]
pub enum PacketSpec {
    Indicator { start: f64, end: f64, value: ComplexValue },
    PiecewiseConstant { pieces: Vec<Piece> },
    Segments { segments: Vec<LinearSegment> },
    Exponential { decay_length: ComplexValue },
    Samples { x: Vec<f64>, values: Vec<ComplexValue> },
}

impl PacketSpec {
    pub fn build(&self, normalize: bool) -> Result<InitialPacket> {
        let size = match self {
            PacketSpec::PiecewiseConstant { pieces } => pieces.len(),
            PacketSpec::Segments { segments } => segments.len(),
            PacketSpec::Samples { x, .. } => x.len(),
            _ => 1,
        };
        if size > MAX_GRID {
            return Err(Error::Config("packet description too large".into()));
        }
        let packet = match self {
            PacketSpec::Indicator { start, end, value } => InitialPacket::indicator(*start, *end, value.value()),
            PacketSpec::PiecewiseConstant { pieces } => InitialPacket::piecewise_constant(
                &pieces.iter().map(|p| (p.start, p.end, p.value.value())).collect::<Vec<_>>(),
            ),
            PacketSpec::Segments { segments } => InitialPacket::segments(segments.clone()),
            PacketSpec::Exponential { decay_length } => InitialPacket::exponential(decay_length.value()),
            PacketSpec::Samples { x, values } => {
                InitialPacket::sampled(x, &values.iter().map(|v| v.value()).collect::<Vec<_>>())
            }
        }
        .map_err(as_config)?;
        let packet = if normalize { packet.normalized().map_err(as_config)? } else { packet };
        packet
            .check_normalized(1e-8)
            .map_err(|_| Error::Config(format!("packet has norm^2 {} (set \"normalize\": true)", packet.norm_sqr())))?;
        Ok(packet)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Geometry {
    HalfLine,
    Line,
}

fn one() -> f64 {
    1.0
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum System {
    Lattice {
        lattice: LatticeKind,
        /// Truncation (half/full line) or size (finite); half and full line
        /// default to the ballistic reach of the time grid.
        #[serde(default)]
        n_sites: Option<usize>,
        w: Vec<ComplexValue>,
        initial: InitialState,
        /// Measurement period of the stroboscopic protocol.
        #[serde(default)]
        tau: Option<f64>,
        #[serde(default = "one")]
        gamma0: f64,
    },
    Continuum {
        geometry: Geometry,
        zeta: Vec<ComplexValue>,
        packet: PacketSpec,
        #[serde(default)]
        normalize: bool,
    },
}

/// `Psi(x, t)` samples written next to the survival table.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProfileSpec {
    pub times: Vec<f64>,
    pub x: Grid,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Scenario {
    pub schema_version: u32,
    pub name: String,
    pub route: RouteChoice,
    pub system: System,
    pub times: Grid,
    #[serde(default)]
    pub profile: Option<ProfileSpec>,
}

pub(crate) fn as_config(e: Error) -> Error {
    if e.is_config() {
        match e {
            Error::Config(_) => e,
            other => Error::Config(other.to_string()),
        }
    } else {
        Error::Config(e.to_string())
    }
}

pub(crate) fn check_name(name: &str) -> Result<()> {
    let ok = !name.is_empty()
        && name.len() <= 128
        && name.chars().all(|c| c.is_ascii_alphanumeric() || c == '_' || c == '-' || c == '.')
        && !name.starts_with('.');
    if ok {
        Ok(())
    } else {
        Err(Error::Config(format!(
            "name {name:?} must be 1-128 characters of [A-Za-z0-9_.-] not starting with '.'"
        )))
    }
}

pub(crate) fn check_schema(version: u32) -> Result<()> {
    if version != SCHEMA_VERSION {
        return Err(Error::Config(format!(
            "unsupported schema_version {version} (expected {SCHEMA_VERSION})"
        )));
    }
    Ok(())
}

fn check_params(what: &str, values: &[ComplexValue]) -> Result<Vec<C64>> {
    if values.is_empty() || values.len() > MAX_PARAMS {
        return Err(Error::Config(format!("{what}: between 1 and {MAX_PARAMS} values required")));
    }
    let out: Vec<C64> = values.iter().map(|v| v.value()).collect();
    if out.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
        return Err(Error::Config(format!("{what}: values must be finite")));
    }
    Ok(out)
}

impl Scenario {
    /// Time grid after validation.
    pub fn time_points(&self) -> Result<Vec<f64>> {
        let t = self.times.points("times")?;
        validate_time_grid(&t).map_err(as_config)?;
        Ok(t)
    }

    /// Routes to run, after applying an override.
    pub fn routes(&self, choice: RouteChoice) -> Result<Vec<RouteChoice>> {
        use RouteChoice::*;
        match &self.system {
            System::Continuum { .. } => match choice {
                Continuum | All => Ok(vec![Continuum]),
                other => Err(Error::Config(format!("route {other:?} does not apply to a continuum system"))),
            },
            System::Lattice { lattice, tau, .. } => {
                let finite = *lattice == LatticeKind::Finite;
                match choice {
                    Continuum => Err(Error::Config("route continuum needs a continuum system".into())),
                    Stroboscopic if tau.is_none() => Err(Error::Config("route stroboscopic needs \"tau\"".into())),
                    Analytic | Spectral if finite => Err(Error::Config(format!(
                        "route {choice:?} applies to half_line and full_line lattices only"
                    ))),
                    All => {
                        let mut out = vec![Effective];
                        if !finite {
                            out.extend([Analytic, Spectral]);
                        }
                        if tau.is_some() {
                            out.insert(0, Stroboscopic);
                        }
                        Ok(out)
                    }
                    other => Ok(vec![other]),
                }
            }
        }
    }

    /// Full validation, including that every selected route can run.
    pub fn validate(&self) -> Result<()> {
        check_schema(self.schema_version)?;
        check_name(&self.name)?;
        let times = self.time_points()?;
        let t_max = times.last().copied().unwrap_or(0.0);
        match &self.system {
            System::Lattice {
                lattice,
                n_sites,
                w,
                initial,
                tau,
                gamma0,
            } => {
                let ws = check_params("w", w)?;
                for &w in &ws {
                    crate::params::validate_w(w).map_err(as_config)?;
                    if w.re < 0.0 {
                        return Err(Error::Config(format!("w = {w}: Re w must be >= 0")));
                    }
                }
                initial.validate()?;
                if let Some(tau) = tau {
                    if !(*tau > 0.0) || !tau.is_finite() {
                        return Err(Error::Config("tau must be finite and > 0".into()));
                    }
                    if t_max / tau > 1e6 {
                        return Err(Error::Config("t_max / tau exceeds 1e6 periods".into()));
                    }
                }
                if !(*gamma0 > 0.0) || !gamma0.is_finite() {
                    return Err(Error::Config("gamma0 must be finite and > 0".into()));
                }
                let model = self.lattice_model(*lattice, *n_sites, initial, t_max)?;
                if model.dim() > 20_000 {
                    return Err(Error::Config(format!("lattice dimension {} exceeds 20000", model.dim())));
                }
                if *lattice == LatticeKind::HalfLine && initial.terms().iter().any(|(s, _)| *s < 0) {
                    return Err(Error::Config("half-line sites must be positive".into()));
                }
                initial.on(&model)?;
            }
            System::Continuum {
                zeta, packet, normalize, ..
            } => {
                for z in check_params("zeta", zeta)? {
                    crate::params::RobinParams::new(z).map_err(as_config)?;
                }
                let built = packet.build(*normalize)?;
                if let System::Continuum {
                    geometry: Geometry::HalfLine,
                    ..
                } = &self.system
                {
                    if !built.on_half_line() {
                        return Err(Error::Config("half_line packets must vanish for x < 0".into()));
                    }
                }
            }
        }
        if let Some(profile) = &self.profile {
            if !matches!(self.system, System::Continuum { .. }) {
                return Err(Error::Config("profile output applies to continuum systems".into()));
            }
            validate_time_grid(&profile.times).map_err(as_config)?;
            if profile.times.len() > 1000 {
                return Err(Error::Config("at most 1000 profile times".into()));
            }
            profile.x.points("profile.x")?;
        }
        self.routes(self.route)?;
        Ok(())
    }

    pub(crate) fn lattice_model(
        &self,
        kind: LatticeKind,
        n_sites: Option<usize>,
        initial: &InitialState,
        t_max: f64,
    ) -> Result<LatticeModel> {
        let n = match (kind, n_sites) {
            (_, Some(n)) => n,
            (LatticeKind::Finite, None) => return Err(Error::Config("finite lattices need \"n_sites\"".into())),
            (_, None) => LatticeModel::ballistic_truncation(initial.reach(), t_max),
        };
        LatticeModel::new(kind, n).map_err(as_config)
    }
}

/// Parses and validates a scenario document.
pub fn parse_scenario(text: &str) -> Result<Scenario> {
    let scenario: Scenario = serde_json::from_str(text).map_err(|e| Error::Config(format!("scenario: {e}")))?;
    scenario.validate()?;
    Ok(scenario)
}

#[cfg(test)]
mod tests {
    use super::*;

    const FIG1: &str = r#"{
        "schema_version": 1, "name": "n15", "route": "all",
        "system": {"kind": "lattice", "lattice": "finite", "n_sites": 15, "w": [0.1, [2, 0], 5],
                   "initial": {"type": "site", "site": 15}, "tau": 0.01},
        "times": {"start": 0, "stop": 10, "count": 11}
    }"#;

    #[test]
    fn parses_lattice_scenario() {
        let s = parse_scenario(FIG1).unwrap();
        assert_eq!(s.routes(s.route).unwrap(), vec![RouteChoice::Stroboscopic, RouteChoice::Effective]);
        match &s.system {
            System::Lattice { w, .. } => assert_eq!(w[1].value(), C64::new(2.0, 0.0)),
            _ => unreachable!(),
        }
    }

    #[test]
    fn rejects_bad_documents() {
        for bad in [
            FIG1.replace("\"schema_version\": 1", "\"schema_version\": 2"),
            FIG1.replace("\"n15\"", "\"../x\""),
            FIG1.replace("\"site\": 15", "\"site\": 16"),
            FIG1.replace("\"site\": 15", "\"site\": 0"),
            FIG1.replace("\"count\": 11", "\"count\": 0"),
            FIG1.replace("\"route\": \"all\"", "\"route\": \"analytic\""),
            FIG1.replace("\"route\": \"all\"", "\"route\": \"continuum\""),
            FIG1.replace("\"tau\": 0.01", "\"tau\": -1"),
            FIG1.replace("\"w\": [0.1, [2, 0], 5]", "\"w\": [[0, -1]]"),
            FIG1.replace("\"w\": [0.1, [2, 0], 5]", "\"w\": []"),
            FIG1.replace("\"kind\": \"lattice\"", "\"kind\": \"lattice\", \"extra\": 1"),
            "{".to_string(),
        ] {
            let err = parse_scenario(&bad).unwrap_err();
            assert!(err.is_config(), "{bad}: {err}");
        }
    }

    #[test]
    fn continuum_scenario_and_packets() {
        let text = r#"{
            "schema_version": 1, "name": "sq", "route": "continuum",
            "system": {"kind": "continuum", "geometry": "half_line", "zeta": [[0.2, -0.5]],
                       "packet": {"type": "indicator", "start": 1, "end": 2, "value": 1}},
            "times": {"values": [0, 0.5]},
            "profile": {"times": [0, 0.1], "x": {"start": 0, "stop": 4, "count": 5}}
        }"#;
        let s = parse_scenario(text).unwrap();
        assert_eq!(s.routes(RouteChoice::All).unwrap(), vec![RouteChoice::Continuum]);
        let unnormalised = text.replace("\"value\": 1}", "\"value\": 2}");
        assert!(parse_scenario(&unnormalised).is_err());
        let fixed = unnormalised.replace("\"value\": 2}", "\"value\": 2}, \"normalize\": true");
        assert!(parse_scenario(&fixed).is_ok());
        let negative = text.replace("\"start\": 1, \"end\": 2", "\"start\": -1, \"end\": 0");
        assert!(parse_scenario(&negative).is_err());
    }
}
