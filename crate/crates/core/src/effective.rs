//! Evolution under the scaled effective non-Hermitian lattice Hamiltonians
//! `H = -Laplacian - i w P`, where `P` projects onto the detector
//! neighbourhood.

use std::collections::HashMap;

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::linalg::{expm, identity_rows, tridiagonal_dense, tridiagonal_symmetric_eigen};
use crate::params::{validate_time_grid, validate_w, LatticeKind, LatticeModel, Route, SurvivalRecord, WaveState, C64, I};

/// Eigenvector conditioning above which the matrix-exponential route is used.
pub const CONDITION_LIMIT: f64 = 1e8;
const RECONSTRUCTION_LIMIT: f64 = 1e-9;

/// `H` in tridiagonal form over the dynamical sites in lattice order.
///
/// On the full line the sites `-1` and `1` are adjacent in the ordering, so
/// the detector coupling `-i w` between them is just another off-diagonal.
#[derive(Debug, Clone)]
pub struct EffectiveHamiltonian {
    lattice: LatticeModel,
    w: C64,
    diag: Vec<C64>,
    off: Vec<C64>,
}

pub fn build_effective(lattice: LatticeModel, w: C64) -> Result<EffectiveHamiltonian> {
    let w = validate_w(w)?;
    let n = lattice.dim();
    let mut diag = vec![C64::new(2.0, 0.0); n];
    let mut off = vec![C64::new(-1.0, 0.0); n.saturating_sub(1)];
    match lattice.kind {
        LatticeKind::Finite | LatticeKind::HalfLine => diag[0] -= I * w,
        LatticeKind::FullLine => {
            let m = lattice.n_sites;
            diag[m - 1] -= I * w;
            diag[m] -= I * w;
            off[m - 1] = -I * w;
        }
    }
    Ok(EffectiveHamiltonian { lattice, w, diag, off })
}

impl EffectiveHamiltonian {
    pub fn lattice(&self) -> &LatticeModel {
        &self.lattice
    }

    pub fn w(&self) -> C64 {
        self.w
    }

    pub fn dim(&self) -> usize {
        self.diag.len()
    }

    pub fn diagonal(&self) -> &[C64] {
        &self.diag
    }

    pub fn off_diagonal(&self) -> &[C64] {
        &self.off
    }

    pub fn to_dense(&self) -> DMatrix<C64> {
        tridiagonal_dense(&self.diag, &self.off)
    }

    pub fn apply(&self, v: &[C64]) -> Vec<C64> {
        let n = self.dim();
        (0..n)
            .map(|i| {
                let mut acc = self.diag[i] * v[i];
                if i > 0 {
                    acc += self.off[i - 1] * v[i - 1];
                }
                if i + 1 < n {
                    acc += self.off[i] * v[i + 1];
                }
                acc
            })
            .collect()
    }

    /// `F = 2 Re(w) |psi_1|^2`, or `2 Re(w) |psi_-1 + psi_1|^2` on the full line.
    pub fn detection_density(&self, psi: &[C64]) -> f64 {
        let amp: C64 = self.lattice.detector_neighbours().iter().map(|&i| psi[i]).sum();
        2.0 * self.w.re * amp.norm_sqr()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PropagatorMethod {
    Eigen,
    MatrixExponential,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EvolutionDiagnostics {
    pub method: PropagatorMethod,
    /// `max_j |v_j|^2` over eigenvectors normalised by `v^T v = 1`.
    pub condition: f64,
    pub fallback_reason: Option<String>,
}

#[derive(Debug, Clone)]
pub struct EvolutionResult {
    pub states: Vec<WaveState>,
    pub record: SurvivalRecord,
    pub diagnostics: EvolutionDiagnostics,
}

/// Eigen-expansion `psi(t) = sum_j Z[:, j] exp(-i E_j t) u_j`.
struct EigenExpansion {
    values: Vec<C64>,
    rows: Vec<Vec<C64>>,
    coeffs: Vec<C64>,
}

impl EigenExpansion {
    fn amplitude(&self, row: usize, t: f64) -> C64 {
        let z = &self.rows[row];
        self.values
            .iter()
            .zip(z)
            .zip(&self.coeffs)
            .map(|((e, zr), u)| zr * u * (-I * e * t).exp())
            .sum()
    }
}

/// Diagonalise with the requested rows tracked; reject poorly conditioned
/// expansions.
fn eigen_expansion(h: &EffectiveHamiltonian, psi0: &[C64], rows: &[usize]) -> std::result::Result<(EigenExpansion, f64), String> {
    let n = h.dim();
    let mut tracked: Vec<Vec<C64>> = rows
        .iter()
        .map(|&r| {
            let mut v = vec![C64::new(0.0, 0.0); n];
            v[r] = C64::new(1.0, 0.0);
            v
        })
        .collect();
    tracked.push(psi0.to_vec());
    let eig = tridiagonal_symmetric_eigen(&h.diag, &h.off, tracked).map_err(|e| e.to_string())?;
    let mut row_vals = eig.rows;
    let coeffs = row_vals.pop().expect("projection row present");
    let norm0: f64 = psi0.iter().map(|a| a.norm_sqr()).sum::<f64>().max(f64::MIN_POSITIVE);
    let mut condition = coeffs.iter().map(|u| u.norm_sqr()).sum::<f64>() / norm0;
    if rows.len() == n {
        for j in 0..n {
            let c: f64 = row_vals.iter().map(|r| r[j].norm_sqr()).sum();
            condition = condition.max(c);
        }
    }
    if !(condition <= CONDITION_LIMIT) {
        return Err(format!("eigenvector condition {condition:e} exceeds {CONDITION_LIMIT:e}"));
    }
    let exp = EigenExpansion {
        values: eig.values,
        rows: row_vals,
        coeffs,
    };
    let recon = rows
        .iter()
        .enumerate()
        .map(|(k, &r)| (exp.amplitude(k, 0.0) - psi0[r]).norm())
        .fold(0.0, f64::max);
    if recon > RECONSTRUCTION_LIMIT * norm0.sqrt().max(1.0) {
        return Err(format!("initial state reconstructed with error {recon:e}"));
    }
    Ok((exp, condition))
}

/// Sequential propagation with cached `exp(-i H dt)` for each distinct step.
fn propagate_by_expm(h: &EffectiveHamiltonian, psi0: &[C64], t_grid: &[f64]) -> Result<Vec<Vec<C64>>> {
    let dense = h.to_dense();
    let mut cache: HashMap<u64, DMatrix<C64>> = HashMap::new();
    let mut psi = DVector::from_column_slice(psi0);
    let mut t_prev = 0.0;
    let mut out = Vec::with_capacity(t_grid.len());
    for &t in t_grid {
        let dt = t - t_prev;
        if dt > 0.0 {
            let key = dt.to_bits();
            let step = match cache.entry(key) {
                std::collections::hash_map::Entry::Occupied(e) => e.into_mut(),
                std::collections::hash_map::Entry::Vacant(e) => e.insert(expm(&dense.map(|z| z * (-I * dt)))?),
            };
            psi = &*step * psi;
        }
        t_prev = t;
        out.push(psi.iter().copied().collect());
    }
    Ok(out)
}

fn check_state(h: &EffectiveHamiltonian, psi0: &WaveState) -> Result<()> {
    if psi0.amplitudes.len() != h.dim() {
        return Err(Error::DimensionMismatch {
            expected: h.dim(),
            found: psi0.amplitudes.len(),
        });
    }
    Ok(())
}

/// `psi(t) = exp(-i H t) psi0` on `t_grid`, with survival and detection
/// density.
pub fn evolve(h: &EffectiveHamiltonian, psi0: &WaveState, t_grid: &[f64]) -> Result<EvolutionResult> {
    check_state(h, psi0)?;
    psi0.check_normalized(1e-8)?;
    propagate(h, psi0, t_grid)
}

/// As [`evolve`] without the unit-norm requirement (evolution is linear).
pub fn propagate(h: &EffectiveHamiltonian, psi0: &WaveState, t_grid: &[f64]) -> Result<EvolutionResult> {
    check_state(h, psi0)?;
    validate_time_grid(t_grid)?;
    let n = h.dim();
    let all: Vec<usize> = (0..n).collect();
    let (amps, diagnostics) = match eigen_expansion(h, &psi0.amplitudes, &all) {
        Ok((exp, condition)) => {
            let amps = t_grid
                .iter()
                .map(|&t| {
                    let phases: Vec<C64> = exp
                        .values
                        .iter()
                        .zip(&exp.coeffs)
                        .map(|(e, u)| u * (-I * e * t).exp())
                        .collect();
                    exp.rows
                        .iter()
                        .map(|z| z.iter().zip(&phases).map(|(a, b)| a * b).sum())
                        .collect()
                })
                .collect();
            (
                amps,
                EvolutionDiagnostics {
                    method: PropagatorMethod::Eigen,
                    condition,
                    fallback_reason: None,
                },
            )
        }
        Err(reason) => {
            log::warn!("effective evolution falls back to the matrix exponential: {reason}");
            (
                propagate_by_expm(h, &psi0.amplitudes, t_grid)?,
                EvolutionDiagnostics {
                    method: PropagatorMethod::MatrixExponential,
                    condition: f64::NAN,
                    fallback_reason: Some(reason),
                },
            )
        }
    };
    let states: Vec<WaveState> = t_grid.iter().zip(amps).map(|(&t, a)| WaveState::new(t, a)).collect();
    let mut record = SurvivalRecord::new(Route::Effective);
    for s in &states {
        record.push(s.time, s.norm_sqr(), h.detection_density(&s.amplitudes));
    }
    if diagnostics.method == PropagatorMethod::MatrixExponential {
        record.notes.push("matrix-exponential fallback".into());
    }
    Ok(EvolutionResult {
        states,
        record,
        diagnostics,
    })
}

/// `F(t)` for every state of an evolution.
pub fn first_detection_density(result: &EvolutionResult, h: &EffectiveHamiltonian) -> Vec<f64> {
    result.states.iter().map(|s| h.detection_density(&s.amplitudes)).collect()
}

/// Amplitudes on selected sites only; cheaper than [`evolve`] for long
/// truncated lattices. Returns `out[time][site]`.
pub fn site_amplitudes(h: &EffectiveHamiltonian, psi0: &WaveState, sites: &[i64], t_grid: &[f64]) -> Result<Vec<Vec<C64>>> {
    check_state(h, psi0)?;
    validate_time_grid(t_grid)?;
    let rows = sites
        .iter()
        .map(|&s| {
            h.lattice
                .index_of(s)
                .ok_or_else(|| Error::invalid("site", format!("{s} is not a dynamical site")))
        })
        .collect::<Result<Vec<usize>>>()?;
    match eigen_expansion(h, &psi0.amplitudes, &rows) {
        Ok((exp, _)) => Ok(t_grid
            .iter()
            .map(|&t| (0..rows.len()).map(|k| exp.amplitude(k, t)).collect())
            .collect()),
        Err(reason) => {
            log::warn!("site amplitudes fall back to the matrix exponential: {reason}");
            let full = propagate_by_expm(h, &psi0.amplitudes, t_grid)?;
            Ok(full.into_iter().map(|a| rows.iter().map(|&r| a[r]).collect()).collect())
        }
    }
}

/// Slowest decay of a finite lattice.
#[derive(Debug, Clone)]
pub struct DecayRate {
    /// `-max Re(lambda)` over the eigenvalues `lambda` of `-iH`.
    pub mu: f64,
    /// Eigenvector of the slowest mode, unit 2-norm; absent if the
    /// eigensolver had to fall back.
    pub chi_m: Option<WaveState>,
    /// Eigenvalues of `-iH`.
    pub eigenvalues: Vec<C64>,
    /// The slowest mode is (nearly) defective.
    pub defective: bool,
}

impl DecayRate {
    /// Every eigenvalue of `-iH` has a negative real part.
    pub fn all_decaying(&self) -> bool {
        self.eigenvalues.iter().all(|l| l.re < 0.0)
    }
}

pub fn decay_rate(h: &EffectiveHamiltonian) -> Result<DecayRate> {
    if h.lattice.kind != LatticeKind::Finite {
        return Err(Error::invalid("lattice", "decay rate is defined for finite lattices"));
    }
    let n = h.dim();
    match tridiagonal_symmetric_eigen(&h.diag, &h.off, identity_rows(n)) {
        Ok(eig) => {
            let eigenvalues: Vec<C64> = eig.values.iter().map(|e| -I * e).collect();
            let (jm, lam) = eigenvalues
                .iter()
                .enumerate()
                .max_by(|a, b| a.1.re.total_cmp(&b.1.re))
                .expect("non-empty spectrum");
            let col: Vec<C64> = (0..n).map(|i| eig.rows[i][jm]).collect();
            let cond: f64 = col.iter().map(|c| c.norm_sqr()).sum();
            let scale = cond.sqrt();
            let chi = WaveState::new(0.0, col.iter().map(|c| c / scale).collect());
            let defective = cond > CONDITION_LIMIT;
            if defective {
                log::warn!("slowest mode is nearly defective (condition {cond:e})");
            }
            Ok(DecayRate {
                mu: -lam.re,
                chi_m: Some(chi),
                eigenvalues,
                defective,
            })
        }
        Err(e) => {
            log::warn!("tridiagonal QL failed ({e}); using a Schur decomposition");
            let m = h.to_dense().map(|z| -I * z);
            let eigenvalues: Vec<C64> = nalgebra::Schur::new(m)
                .eigenvalues()
                .ok_or_else(|| Error::Eigensolver("Schur decomposition failed".into()))?
                .iter()
                .copied()
                .collect();
            let max_re = eigenvalues.iter().map(|l| l.re).fold(f64::NEG_INFINITY, f64::max);
            Ok(DecayRate {
                mu: -max_re,
                chi_m: None,
                eigenvalues,
                defective: true,
            })
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> C64 {
        C64::new(re, im)
    }

    #[test]
    fn pure_laplacian_two_sites() {
        let h = build_effective(LatticeModel::finite(2).unwrap(), c(0.0, 0.0)).unwrap();
        let d = h.to_dense();
        assert_eq!(d[(0, 0)], c(2.0, 0.0));
        assert_eq!(d[(0, 1)], c(-1.0, 0.0));
        assert_eq!(d[(1, 1)], c(2.0, 0.0));
    }

    #[test]
    fn detector_entry() {
        let (a, b) = (0.7, -0.3);
        let h = build_effective(LatticeModel::finite(5).unwrap(), c(a, b)).unwrap();
        assert!((h.to_dense()[(0, 0)] - c(2.0 + b, -a)).norm() < 1e-15);
    }

    #[test]
    fn full_line_couplings() {
        let w = c(0.4, 0.2);
        let h = build_effective(LatticeModel::full_line(3).unwrap(), w).unwrap();
        let d = h.to_dense();
        assert_eq!(d[(2, 2)], 2.0 - I * w);
        assert_eq!(d[(3, 3)], 2.0 - I * w);
        assert_eq!(d[(2, 3)], -I * w);
        assert_eq!(d[(3, 2)], -I * w);
        assert_eq!(d[(1, 2)], c(-1.0, 0.0));
    }

    #[test]
    fn unitary_limit_conserves_norm() {
        let l = LatticeModel::finite(9).unwrap();
        let h = build_effective(l, c(0.0, 0.4)).unwrap();
        let psi0 = WaveState::localized(&l, 4).unwrap();
        let r = evolve(&h, &psi0, &[0.0, 1.0, 10.0, 100.0]).unwrap();
        for s in &r.record.survival {
            assert!((s - 1.0).abs() < 1e-10);
        }
        assert!(r.record.density.iter().all(|f| *f == 0.0));
    }

    #[test]
    fn eigen_route_matches_matrix_exponential() {
        let l = LatticeModel::finite(8).unwrap();
        let h = build_effective(l, c(1.3, -0.4)).unwrap();
        let psi0 = WaveState::localized(&l, 6).unwrap();
        let grid = [0.0, 0.5, 3.0, 7.25];
        let r = evolve(&h, &psi0, &grid).unwrap();
        assert_eq!(r.diagnostics.method, PropagatorMethod::Eigen);
        let direct = propagate_by_expm(&h, &psi0.amplitudes, &grid).unwrap();
        for (s, d) in r.states.iter().zip(&direct) {
            for (a, b) in s.amplitudes.iter().zip(d) {
                assert!((a - b).norm() < 1e-11);
            }
        }
    }

    #[test]
    fn two_site_decay_rate_matches_quadratic() {
        let w = c(2.0, 0.0);
        let h = build_effective(LatticeModel::finite(2).unwrap(), w).unwrap();
        // det(H - E) = (2 - iw - E)(2 - E) - 1
        let (p, q) = (-(4.0 - I * w), (2.0 - I * w) * 2.0 - 1.0);
        let disc = crate::numerics::principal_sqrt(p * p - 4.0 * q);
        let roots = [(-p + disc) / 2.0, (-p - disc) / 2.0];
        let mu_oracle = -roots.iter().map(|e| (-I * e).re).fold(f64::NEG_INFINITY, f64::max);
        let d = decay_rate(&h).unwrap();
        assert!((d.mu - mu_oracle).abs() < 1e-13);
        assert!(d.all_decaying());
    }

    #[test]
    fn density_matches_norm_derivative() {
        let l = LatticeModel::finite(15).unwrap();
        let h = build_effective(l, c(2.0, 0.0)).unwrap();
        let psi0 = WaveState::localized(&l, 15).unwrap();
        let dt = 1e-3;
        for t in [3.0, 8.0, 12.5] {
            let r = evolve(&h, &psi0, &[t - dt, t, t + dt]).unwrap();
            let deriv = (r.record.survival[2] - r.record.survival[0]) / (2.0 * dt);
            assert!((deriv + r.record.density[1]).abs() < 1e-6);
        }
    }
}
