//! Parameter types and the maps between the stroboscopic, lattice and
//! continuum descriptions of the detector.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub type C64 = Complex64;

pub(crate) const I: C64 = C64 { re: 0.0, im: 1.0 };

/// Impurity magnitudes above this are accepted but logged.
const LARGE_BETA: f64 = 1.0e3;

/// Dimensionless detector strength `alpha` and impurity `beta`, combined as
/// `w = alpha + i beta`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MeasurementParams {
    alpha: f64,
    beta: f64,
}

impl MeasurementParams {
    /// A detecting configuration; requires `alpha > 0`.
    pub fn new(alpha: f64, beta: f64) -> Result<Self> {
        if !(alpha > 0.0) || !alpha.is_finite() {
            return Err(Error::invalid("alpha", format!("must be finite and > 0, got {alpha}")));
        }
        Self::checked(alpha, beta)
    }

    /// The no-measurement control, `alpha = 0`.
    pub fn unitary_control(beta: f64) -> Result<Self> {
        Self::checked(0.0, beta)
    }

    pub fn from_w(w: C64) -> Result<Self> {
        if w.re == 0.0 {
            Self::unitary_control(w.im)
        } else {
            Self::new(w.re, w.im)
        }
    }

    fn checked(alpha: f64, beta: f64) -> Result<Self> {
        if !beta.is_finite() {
            return Err(Error::invalid("beta", "must be finite"));
        }
        if alpha == 0.0 && beta == -1.0 {
            return Err(Error::Singular("w = -i makes the lattice boundary constant infinite".into()));
        }
        if beta.abs() > LARGE_BETA {
            log::warn!("impurity |beta| = {} is unusually large", beta.abs());
        }
        Ok(Self { alpha, beta })
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn beta(&self) -> f64 {
        self.beta
    }

    pub fn w(&self) -> C64 {
        C64::new(self.alpha, self.beta)
    }
}

/// Check a raw `w` for use in a lattice model: finite, `Re w >= 0`, `w != -i`.
pub fn validate_w(w: C64) -> Result<C64> {
    if !w.re.is_finite() || !w.im.is_finite() {
        return Err(Error::invalid("w", "must be finite"));
    }
    if w.re < 0.0 {
        return Err(Error::invalid("w", format!("Re w must be >= 0, got {}", w.re)));
    }
    MeasurementParams::from_w(w).map(|p| p.w())
}

/// Boundary constant `xi = -iw/(1-iw)` of the half-line lattice condition
/// `psi_0 + xi (psi_1 - psi_0) = 0`.
pub fn lattice_xi(w: C64) -> Result<C64> {
    let den = C64::new(1.0, 0.0) - I * w;
    if den == C64::new(0.0, 0.0) {
        return Err(Error::Singular("lattice_xi: w = -i".into()));
    }
    Ok(-I * w / den)
}

/// Alternative algebraic form `w/(i+w)`; agrees with [`lattice_xi`].
pub fn lattice_xi_alt(w: C64) -> Result<C64> {
    let den = I + w;
    if den == C64::new(0.0, 0.0) {
        return Err(Error::Singular("lattice_xi: w = -i".into()));
    }
    Ok(w / den)
}

/// Continuum Robin constant of the half line, `eps * iw/(iw - 1)`.
pub fn robin_zeta(w: C64, eps: f64) -> Result<C64> {
    if !(eps > 0.0) {
        return Err(Error::invalid("eps", "lattice spacing must be > 0"));
    }
    let den = I * w - 1.0;
    if den == C64::new(0.0, 0.0) {
        return Err(Error::Singular("robin_zeta: iw = 1".into()));
    }
    Ok(eps * I * w / den)
}

/// Continuum Robin constant of the full line, `eps * (-2iw)/(1 - 2iw)`.
pub fn robin_zeta_line(w: C64, eps: f64) -> Result<C64> {
    if !(eps > 0.0) {
        return Err(Error::invalid("eps", "lattice spacing must be > 0"));
    }
    let den = 1.0 - 2.0 * I * w;
    if den == C64::new(0.0, 0.0) {
        return Err(Error::Singular("robin_zeta_line: 2iw = 1".into()));
    }
    Ok(eps * (-2.0) * I * w / den)
}

pub fn halfline_has_bound(w: C64) -> bool {
    w.norm() > 1.0
}

pub fn fullline_has_bound(w: C64) -> bool {
    (2.0 * w).norm() > 1.0
}

pub fn continuum_has_bound(zeta: C64) -> bool {
    zeta.re > 0.0
}

/// Physical parameters of the repeated-measurement protocol.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StroboscopicParams {
    pub gamma0: f64,
    pub tau: f64,
    pub alpha: f64,
    pub beta: f64,
}

impl StroboscopicParams {
    pub fn new(gamma0: f64, tau: f64, alpha: f64, beta: f64) -> Result<Self> {
        if !(gamma0 > 0.0) || !gamma0.is_finite() {
            return Err(Error::invalid("gamma0", "must be finite and > 0"));
        }
        if !(tau > 0.0) || !tau.is_finite() {
            return Err(Error::invalid("tau", "must be finite and > 0"));
        }
        if !(alpha >= 0.0) || !alpha.is_finite() {
            return Err(Error::invalid("alpha", "must be finite and >= 0"));
        }
        MeasurementParams::from_w(C64::new(alpha, beta))?;
        Ok(Self { gamma0, tau, alpha, beta })
    }

    /// Dimensionless form with `gamma0 = 1`.
    pub fn from_w(w: C64, tau: f64) -> Result<Self> {
        Self::new(1.0, tau, w.re, w.im)
    }

    pub fn w(&self) -> C64 {
        C64::new(self.alpha, self.beta)
    }

    /// Detector rate `gamma = 2 alpha gamma0`.
    pub fn gamma(&self) -> f64 {
        2.0 * self.alpha * self.gamma0
    }

    /// System-detector hopping `sqrt(gamma/tau)`.
    pub fn coupling(&self) -> f64 {
        (self.gamma() / self.tau).sqrt()
    }
}

/// Complex Robin constant of the continuum boundary.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RobinParams {
    zeta: C64,
}

impl RobinParams {
    /// `Im zeta < 0` detects; `Im zeta = 0` is the unitary control.
    pub fn new(zeta: C64) -> Result<Self> {
        if !zeta.re.is_finite() || !zeta.im.is_finite() {
            return Err(Error::invalid("zeta", "must be finite"));
        }
        if zeta.im > 0.0 {
            return Err(Error::invalid("zeta", format!("Im zeta must be <= 0, got {}", zeta.im)));
        }
        Ok(Self { zeta })
    }

    pub fn zeta(&self) -> C64 {
        self.zeta
    }

    pub fn has_bound(&self) -> bool {
        continuum_has_bound(self.zeta)
    }

    pub fn is_detecting(&self) -> bool {
        self.zeta.im < 0.0
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LatticeKind {
    Finite,
    HalfLine,
    FullLine,
}

/// A lattice and its dynamical sites. Site 0 is the detector and is never a
/// dynamical site. Finite and half-line lattices use sites `1..=n_sites`;
/// the full line uses `-n_sites..=-1` followed by `1..=n_sites`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct LatticeModel {
    pub kind: LatticeKind,
    pub n_sites: usize,
}

impl LatticeModel {
    pub fn new(kind: LatticeKind, n_sites: usize) -> Result<Self> {
        let min = match kind {
            LatticeKind::Finite => 2,
            _ => 1,
        };
        if n_sites < min {
            return Err(Error::invalid("n_sites", format!("{kind:?} lattice needs at least {min} sites")));
        }
        Ok(Self { kind, n_sites })
    }

    pub fn finite(n: usize) -> Result<Self> {
        Self::new(LatticeKind::Finite, n)
    }

    pub fn half_line(truncation: usize) -> Result<Self> {
        Self::new(LatticeKind::HalfLine, truncation)
    }

    pub fn full_line(truncation: usize) -> Result<Self> {
        Self::new(LatticeKind::FullLine, truncation)
    }

    /// Ballistic truncation `n0 + 2 t_max + 20` (front speed 2).
    pub fn ballistic_truncation(n0: usize, t_max: f64) -> usize {
        n0 + (2.0 * t_max.max(0.0)).ceil() as usize + 20
    }

    pub fn dim(&self) -> usize {
        match self.kind {
            LatticeKind::FullLine => 2 * self.n_sites,
            _ => self.n_sites,
        }
    }

    pub fn sites(&self) -> Vec<i64> {
        let n = self.n_sites as i64;
        match self.kind {
            LatticeKind::FullLine => (-n..=-1).chain(1..=n).collect(),
            _ => (1..=n).collect(),
        }
    }

    pub fn index_of(&self, site: i64) -> Option<usize> {
        let n = self.n_sites as i64;
        match self.kind {
            LatticeKind::FullLine => match site {
                s if (-n..=-1).contains(&s) => Some((s + n) as usize),
                s if (1..=n).contains(&s) => Some((n + s - 1) as usize),
                _ => None,
            },
            _ => (1..=n).contains(&site).then(|| (site - 1) as usize),
        }
    }

    pub fn site_at(&self, index: usize) -> i64 {
        self.sites()[index]
    }

    /// Indices of the sites bonded to the detector.
    pub fn detector_neighbours(&self) -> Vec<usize> {
        match self.kind {
            LatticeKind::FullLine => vec![self.n_sites - 1, self.n_sites],
            _ => vec![0],
        }
    }

    pub fn is_truncated(&self) -> bool {
        self.kind != LatticeKind::Finite
    }
}

/// Complex amplitudes at one instant, indexed by the owning lattice's site
/// ordering (or by a spatial grid for continuum samples).
#[derive(Debug, Clone, PartialEq)]
pub struct WaveState {
    pub time: f64,
    pub amplitudes: Vec<C64>,
}

impl WaveState {
    pub fn new(time: f64, amplitudes: Vec<C64>) -> Self {
        Self { time, amplitudes }
    }

    /// Unit amplitude on one site.
    pub fn localized(lattice: &LatticeModel, site: i64) -> Result<Self> {
        let idx = lattice
            .index_of(site)
            .ok_or_else(|| Error::invalid("site", format!("{site} is not a dynamical site of {lattice:?}")))?;
        let mut amps = vec![C64::new(0.0, 0.0); lattice.dim()];
        amps[idx] = C64::new(1.0, 0.0);
        Ok(Self::new(0.0, amps))
    }

    pub fn norm_sqr(&self) -> f64 {
        self.amplitudes.iter().map(|a| a.norm_sqr()).sum()
    }

    pub fn check_normalized(&self, tol: f64) -> Result<()> {
        let n = self.norm_sqr();
        if (n - 1.0).abs() > tol {
            return Err(Error::invalid("psi0", format!("norm^2 = {n}, expected 1")));
        }
        Ok(())
    }
}

/// Which computational route produced a result.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Route {
    Stroboscopic,
    Effective,
    Analytic,
    Spectral,
    Continuum,
}

impl Route {
    pub fn name(&self) -> &'static str {
        match self {
            Route::Stroboscopic => "stroboscopic",
            Route::Effective => "effective",
            Route::Analytic => "analytic",
            Route::Spectral => "spectral",
            Route::Continuum => "continuum",
        }
    }
}

/// Time series of survival `S(t)` and first-detection density `F(t)`.
#[derive(Debug, Clone, PartialEq)]
pub struct SurvivalRecord {
    pub route: Route,
    pub times: Vec<f64>,
    pub survival: Vec<f64>,
    pub density: Vec<f64>,
    pub notes: Vec<String>,
}

impl SurvivalRecord {
    pub fn new(route: Route) -> Self {
        Self {
            route,
            times: Vec::new(),
            survival: Vec::new(),
            density: Vec::new(),
            notes: Vec::new(),
        }
    }

    pub fn push(&mut self, t: f64, s: f64, f: f64) {
        self.times.push(t);
        self.survival.push(s);
        self.density.push(f);
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    /// Largest increase `S(t_{k+1}) - S(t_k)`; at most rounding noise for a
    /// physical record.
    pub fn max_increase(&self) -> f64 {
        self.survival
            .windows(2)
            .map(|p| p[1] - p[0])
            .fold(f64::NEG_INFINITY, f64::max)
    }
}

/// Check a time grid: finite, non-negative and non-decreasing.
pub fn validate_time_grid(grid: &[f64]) -> Result<()> {
    if grid.is_empty() {
        return Err(Error::invalid("t_grid", "empty"));
    }
    if grid.iter().any(|t| !t.is_finite() || *t < 0.0) {
        return Err(Error::invalid("t_grid", "times must be finite and >= 0"));
    }
    if grid.windows(2).any(|p| p[1] < p[0]) {
        return Err(Error::invalid("t_grid", "times must be non-decreasing"));
    }
    Ok(())
}
