//! Eigenbases of the half-line and full-line effective Hamiltonians, the
//! propagator `G_nm(t)` built from them, and the resolvent of the finite
//! lattice Laplacian.

use std::f64::consts::PI;

use crate::error::{Error, Result};
use crate::numerics::{integrate_adaptive, principal_sqrt, QuadratureSpec};
use crate::params::{fullline_has_bound, halfline_has_bound, lattice_xi, validate_w, C64, I};

/// Which lattice a basis describes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BasisLattice {
    HalfLine,
    /// Symmetric sector of the full line (the antisymmetric sector is the
    /// detector-free sine basis).
    FullLine,
}

/// Scattering states `eta^k`, `k in (0, pi)`, and the optional bound state
/// of a half-line problem with boundary constant `xi`.
#[derive(Debug, Clone)]
pub struct LatticeBasis {
    lattice: BasisLattice,
    w: C64,
    /// `w` seen by the half-line problem: `w` or `2w`.
    w_eff: C64,
    xi: C64,
    /// Bound-state ratio `1 - 1/xi = -i/w_eff`.
    ratio: C64,
    has_bound: bool,
    /// Overall factor of the eigenfunctions: 1 or `1/sqrt(2)`.
    scale: f64,
    pub k_grid: Vec<f64>,
}

impl LatticeBasis {
    pub fn halfline(w: C64) -> Result<Self> {
        let w = validate_w(w)?;
        Self::build(BasisLattice::HalfLine, w, w, 1.0, halfline_has_bound(w))
    }

    pub fn fullline(w: C64) -> Result<Self> {
        let w = validate_w(w)?;
        Self::build(BasisLattice::FullLine, w, 2.0 * w, std::f64::consts::FRAC_1_SQRT_2, fullline_has_bound(w))
    }

    fn build(lattice: BasisLattice, w: C64, w_eff: C64, scale: f64, has_bound: bool) -> Result<Self> {
        let xi = lattice_xi(w_eff)?;
        let ratio = if w_eff == C64::new(0.0, 0.0) {
            C64::new(f64::INFINITY, 0.0)
        } else {
            -I / w_eff
        };
        debug_assert_eq!(has_bound, ratio.norm() < 1.0);
        Ok(Self {
            lattice,
            w,
            w_eff,
            xi,
            ratio,
            has_bound,
            scale,
            k_grid: crate::numerics::linspace(0.0, PI, 257)[1..256].to_vec(),
        })
    }

    pub fn lattice(&self) -> BasisLattice {
        self.lattice
    }

    pub fn w(&self) -> C64 {
        self.w
    }

    /// Coupling seen by the underlying half-line problem (`2w` on the line).
    pub fn w_effective(&self) -> C64 {
        self.w_eff
    }

    pub fn xi(&self) -> C64 {
        self.xi
    }

    pub fn has_bound(&self) -> bool {
        self.has_bound
    }

    /// `|eta^b_{n+1} / eta^b_n| = 1/|w_eff|`.
    pub fn bound_decay(&self) -> f64 {
        self.ratio.norm()
    }

    pub fn scattering_energy(k: C64) -> C64 {
        2.0 * (1.0 - k.cos())
    }

    /// `E_b = 2 - r - 1/r` with `r = -i/w_eff`.
    pub fn bound_energy(&self) -> Result<C64> {
        self.require_bound()?;
        Ok(2.0 - self.ratio - 1.0 / self.ratio)
    }

    fn require_bound(&self) -> Result<()> {
        if !self.has_bound {
            return Err(Error::NoBoundState(format!(
                "|w| = {} does not exceed the threshold",
                self.w.norm()
            )));
        }
        Ok(())
    }

    /// `(1 - xi + xi e^{ik}, 1 - xi + xi e^{-ik})`.
    fn boundary_factors(&self, k: C64) -> (C64, C64) {
        let e = (I * k).exp();
        let base = 1.0 - self.xi;
        (base + self.xi * e, base + self.xi / e)
    }

    /// `eta^k_n` for `n >= 1` (on the full line: `|n|`).
    pub fn scatter(&self, k: f64, n: u64) -> C64 {
        let k = C64::new(k, 0.0);
        let (dp, dm) = self.boundary_factors(k);
        let nf = n as f64;
        let norm = principal_sqrt(2.0 * PI * dp * dm);
        self.scale * I / norm * (dm * (I * k * nf).exp() - dp * (-I * k * nf).exp())
    }

    /// `eta^k_n eta^k_m` in a branch-free rational form, valid for complex `k`.
    pub fn scatter_product(&self, k: C64, n: u64, m: u64) -> C64 {
        let (dp, dm) = self.boundary_factors(k);
        let wave = |j: u64| {
            let jf = j as f64;
            dm * (I * k * jf).exp() - dp * (-I * k * jf).exp()
        };
        -self.scale * self.scale * wave(n) * wave(m) / (2.0 * PI * dp * dm)
    }

    /// `eta^b_n = r^(n-1) sqrt(1 - r^2)`, normalised by `sum_n (eta^b_n)^2 = 1`.
    pub fn bound(&self, n: u64) -> Result<C64> {
        self.require_bound()?;
        let r = self.ratio;
        Ok(self.scale * r.powi(n as i32 - 1) * principal_sqrt(1.0 - r * r))
    }

    /// `eta^b_n eta^b_m`, free of square-root branches.
    pub fn bound_product(&self, n: u64, m: u64) -> Result<C64> {
        self.require_bound()?;
        let r = self.ratio;
        Ok(self.scale * self.scale * r.powi((n + m) as i32 - 2) * (1.0 - r * r))
    }
}

pub fn eta_scatter(basis: &LatticeBasis, k: f64, n: u64) -> Result<C64> {
    if !(k > 0.0 && k < PI) {
        return Err(Error::invalid("k", "must lie in (0, pi)"));
    }
    if n == 0 {
        return Err(Error::invalid("n", "site 0 is the detector"));
    }
    Ok(basis.scatter(k, n))
}

pub fn eta_bound(basis: &LatticeBasis, n: u64) -> Result<C64> {
    if n == 0 {
        return Err(Error::invalid("n", "site 0 is the detector"));
    }
    basis.bound(n)
}

/// Poles of `scatter_product` in the strip `0 < Re k < pi`: zeros of the
/// second boundary factor, `e^{-ik} = r`.
fn strip_poles(basis: &LatticeBasis) -> Vec<C64> {
    let r = basis.ratio;
    if !r.re.is_finite() {
        return Vec::new();
    }
    let mut out = Vec::new();
    // e^{-ik} = r  =>  k = i ln r (all branches)
    let base = I * r.ln();
    for j in -2..=2 {
        let p = base + 2.0 * PI * j as f64;
        if p.re > 0.0 && p.re < PI {
            out.push(p);
        }
    }
    // e^{ik} = r: these sit in the strip only for Re w < 0, kept for safety
    let base = -I * r.ln();
    for j in -2..=2 {
        let p = base + 2.0 * PI * j as f64;
        if p.re > 0.0 && p.re < PI && p.im < 0.0 {
            out.push(p);
        }
    }
    out
}

/// `k(s) = s - i depth sin s`, a path from 0 to pi below the real axis on
/// which `exp(-i E(k) t)` is damped.
fn path_point(s: f64, depth: f64) -> (C64, C64) {
    (C64::new(s, -depth * s.sin()), C64::new(1.0, -depth * s.cos()))
}

fn distance_to_path(p: C64, depth: f64) -> f64 {
    (0..=400)
        .map(|j| {
            let s = PI * j as f64 / 400.0;
            (path_point(s, depth).0 - p).norm()
        })
        .fold(f64::INFINITY, f64::min)
}

/// Largest log-magnification `max_s sin s (reach d - 2t sinh(d sin s))` of
/// the integrand on the path of depth `d` relative to the real axis.
fn path_growth(depth: f64, reach: f64, t: f64) -> f64 {
    (1..400)
        .map(|j| {
            let sn = (PI * j as f64 / 400.0).sin();
            sn * (reach * depth - 2.0 * t * (depth * sn).sinh())
        })
        .fold(0.0, f64::max)
}

/// Deepest path that keeps clear of the poles without amplifying the
/// integrand by more than `e^7` (the cancellation then costs at most about
/// three digits).
fn choose_depth(poles: &[C64], reach: f64, t: f64) -> f64 {
    let candidates = [0.5, 0.35, 0.25, 0.15, 0.08, 0.04, 0.02];
    let mut best = (candidates[candidates.len() - 1], f64::NEG_INFINITY);
    for &d in &candidates {
        let dist = poles.iter().map(|&p| distance_to_path(p, d)).fold(f64::INFINITY, f64::min);
        let growth = path_growth(d, reach, t);
        if dist >= 0.1 && growth <= 7.0 {
            return d;
        }
        let score = dist.min(0.1) - 0.01 * growth;
        if score > best.1 {
            best = (d, score);
        }
    }
    // the real axis itself, when no pole sits near it
    if poles.iter().all(|p| p.im.abs() >= 0.1) {
        return 0.0;
    }
    best.0
}

/// Is the pole strictly between the real axis and the path? A pole on the
/// real axis (only possible for `|w_eff| = 1`) counts as lying above it.
fn between_axis_and_path(p: C64, depth: f64) -> bool {
    p.im < -1e-14 && p.im > -depth * p.re.sin()
}

/// `oint f dk` counter-clockwise around `centre` by the trapezoid rule.
fn circle_integral<F: Fn(C64) -> C64>(f: F, centre: C64, radius: f64, nodes: usize) -> C64 {
    let mut acc = C64::new(0.0, 0.0);
    for j in 0..nodes {
        let e = C64::from_polar(1.0, 2.0 * PI * j as f64 / nodes as f64);
        acc += f(centre + radius * e) * e;
    }
    acc * I * radius * 2.0 * PI / nodes as f64
}

/// Options for [`greens_propagator_with`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PropagatorOptions {
    /// Add the bound-state term when a bound state exists.
    pub include_bound: bool,
}

impl Default for PropagatorOptions {
    fn default() -> Self {
        Self { include_bound: true }
    }
}

/// `G_nm(t) = int_0^pi eta^k_n eta^k_m e^{-iE(k)t} dk + eta^b_n eta^b_m e^{-i E_b t}`.
pub fn greens_propagator(basis: &LatticeBasis, n: u64, m: u64, t: f64, quad: &QuadratureSpec) -> Result<C64> {
    greens_propagator_with(basis, n, m, t, quad, PropagatorOptions::default())
}

pub fn greens_propagator_with(
    basis: &LatticeBasis,
    n: u64,
    m: u64,
    t: f64,
    quad: &QuadratureSpec,
    opts: PropagatorOptions,
) -> Result<C64> {
    if n == 0 || m == 0 {
        return Err(Error::invalid("site", "site 0 is the detector"));
    }
    if !t.is_finite() || t < 0.0 {
        return Err(Error::invalid("t", "must be finite and >= 0"));
    }
    let integrand = |k: C64| basis.scatter_product(k, n, m) * (-I * LatticeBasis::scattering_energy(k) * t).exp();
    let poles = strip_poles(basis);
    let depth = choose_depth(&poles, (n + m) as f64, t);
    let along_path = integrate_adaptive(
        |s: f64| {
            let (k, dk) = path_point(s, depth);
            integrand(k) * dk
        },
        0.0,
        PI,
        quad,
    )?
    .value;
    // int_real = int_path - (counter-clockwise loops around enclosed poles)
    let mut value = along_path;
    for &p in poles.iter().filter(|&&p| between_axis_and_path(p, depth)) {
        let others = poles
            .iter()
            .filter(|&&q| q != p)
            .map(|&q| (q - p).norm())
            .fold(f64::INFINITY, f64::min);
        let radius = (0.5 * others).min(0.25).min(0.5 * p.im.abs().max(1e-3) + 0.2);
        let nodes = (64.0 + 16.0 * (2.0 * t * radius + 10.0)).ceil() as usize;
        value -= circle_integral(integrand, p, radius, nodes.next_power_of_two());
    }
    if basis.has_bound && opts.include_bound {
        value += basis.bound_product(n, m)? * (-I * basis.bound_energy()? * t).exp();
    }
    Ok(value)
}

/// `G_nm(t)` on the full line, `n, m != 0`: symmetric sector from the
/// half-line problem with `2w`, antisymmetric sector from the sine basis.
pub fn greens_propagator_fullline(w: C64, n: i64, m: i64, t: f64, quad: &QuadratureSpec) -> Result<C64> {
    if n == 0 || m == 0 {
        return Err(Error::invalid("site", "site 0 is the detector"));
    }
    let sym = LatticeBasis::fullline(w)?;
    let (an, am) = (n.unsigned_abs(), m.unsigned_abs());
    let g_sym = greens_propagator(&sym, an, am, t, quad)?;
    let sign = (n.signum() * m.signum()) as f64;
    let g_anti = integrate_adaptive(
        |k: f64| {
            let e = 2.0 * (1.0 - k.cos());
            C64::new((k * an as f64).sin() * (k * am as f64).sin() / PI, 0.0) * C64::from_polar(1.0, -e * t)
        },
        0.0,
        PI,
        quad,
    )?
    .value;
    Ok(g_sym + sign * g_anti)
}

/// Eigenfunction families of the full-line Hamiltonian.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FullLineKind {
    SymmetricScatter,
    AntisymmetricScatter,
    Bound,
}

pub fn fullline_basis_eval(kind: FullLineKind, w: C64, k: f64, n: i64) -> Result<C64> {
    if n == 0 {
        return Err(Error::invalid("n", "site 0 is the detector"));
    }
    match kind {
        FullLineKind::SymmetricScatter => Ok(LatticeBasis::fullline(w)?.scatter(k, n.unsigned_abs())),
        FullLineKind::AntisymmetricScatter => Ok(C64::new((k * n as f64).sin() / PI.sqrt(), 0.0)),
        FullLineKind::Bound => LatticeBasis::fullline(w)?.bound(n.unsigned_abs()),
    }
}

/// Resolvent `G(s) = [s - i Laplacian_N]^{-1}` of the finite lattice with
/// Dirichlet ends, from the sine eigenbasis.
#[derive(Debug, Clone)]
pub struct Resolvent {
    n: usize,
    s: C64,
}

impl Resolvent {
    pub fn new(n: usize, s: C64) -> Result<Self> {
        if n == 0 {
            return Err(Error::invalid("N", "lattice size must be positive"));
        }
        let r = Self { n, s };
        let closest = (1..=n).map(|q| (s - I * r.eigenvalue(q)).norm()).fold(f64::INFINITY, f64::min);
        if closest < 1e-8 {
            log::warn!("resolvent evaluated within {closest:e} of a pole");
        }
        Ok(r)
    }

    /// `eps_q = -2 (1 - cos q)`, `q = j pi/(N+1)`.
    fn eigenvalue(&self, j: usize) -> f64 {
        let q = j as f64 * PI / (self.n + 1) as f64;
        -2.0 * (1.0 - q.cos())
    }

    fn mode(&self, j: usize, site: usize) -> f64 {
        let q = j as f64 * PI / (self.n + 1) as f64;
        (2.0 / (self.n + 1) as f64).sqrt() * (q * site as f64).sin()
    }

    pub fn entry(&self, i: usize, j: usize) -> Result<C64> {
        if i == 0 || j == 0 || i > self.n || j > self.n {
            return Err(Error::invalid("site", format!("sites must lie in 1..={}", self.n)));
        }
        Ok((1..=self.n)
            .map(|q| self.mode(q, i) * self.mode(q, j) / (self.s - I * self.eigenvalue(q)))
            .sum())
    }

    /// `max_i |((s - i Laplacian) G - I)_{ij}|` for column `j`.
    pub fn column_residual(&self, j: usize) -> Result<f64> {
        let col: Vec<C64> = (1..=self.n).map(|i| self.entry(i, j)).collect::<Result<_>>()?;
        let mut worst = 0.0f64;
        for i in 0..self.n {
            let mut lap = -2.0 * col[i];
            if i > 0 {
                lap += col[i - 1];
            }
            if i + 1 < self.n {
                lap += col[i + 1];
            }
            let mut v = self.s * col[i] - I * lap;
            if i + 1 == j {
                v -= 1.0;
            }
            worst = worst.max(v.norm());
        }
        Ok(worst)
    }
}

pub fn finite_resolvent(n: usize, s: C64, i: usize, j: usize) -> Result<C64> {
    Resolvent::new(n, s)?.entry(i, j)
}

/// Laplace transform of `psi_1` on the finite lattice, `G_{1 n0}/(1 + w G_11)`.
pub fn laplace_psi1_finite(n: usize, w: C64, n0: usize, s: C64) -> Result<C64> {
    let r = Resolvent::new(n, s)?;
    Ok(r.entry(1, n0)? / (1.0 + w * r.entry(1, 1)?))
}
