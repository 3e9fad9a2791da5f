//! Repeated projective measurement at the detector site: unitary evolution
//! for a period `tau` under the full system+detector Hamiltonian, then a
//! null-outcome projection.

use nalgebra::{DMatrix, DVector, SymmetricEigen};

use crate::error::{Error, Result};
use crate::params::{LatticeKind, LatticeModel, Route, StroboscopicParams, SurvivalRecord, WaveState, C64};

/// Real symmetric Hamiltonian over the detector (index 0) followed by the
/// dynamical sites in lattice order (index `i + 1`).
pub fn build_full_hamiltonian(lattice: &LatticeModel, p: &StroboscopicParams) -> DMatrix<f64> {
    let n = lattice.dim();
    let g0 = p.gamma0;
    let mut h = DMatrix::zeros(n + 1, n + 1);
    let sites = lattice.sites();
    for i in 0..n {
        h[(i + 1, i + 1)] = 2.0 * g0;
        if i + 1 < n && sites[i + 1] - sites[i] == 1 {
            h[(i + 1, i + 2)] = -g0;
            h[(i + 2, i + 1)] = -g0;
        }
    }
    let coupling = p.coupling();
    for i in lattice.detector_neighbours() {
        h[(i + 1, i + 1)] += p.beta * g0;
        h[(0, i + 1)] = -coupling;
        h[(i + 1, 0)] = -coupling;
    }
    h
}

/// `U = exp(-i H tau)` from the spectral decomposition of the real
/// symmetric `H`.
pub fn step_propagator(h: &DMatrix<f64>, tau: f64) -> DMatrix<C64> {
    let eig = SymmetricEigen::new(h.clone());
    let v = eig.eigenvectors.map(|x| C64::new(x, 0.0));
    let mut scaled = v.clone();
    for (j, lam) in eig.eigenvalues.iter().enumerate() {
        let phase = C64::from_polar(1.0, -lam * tau);
        for z in scaled.column_mut(j).iter_mut() {
            *z *= phase;
        }
    }
    scaled * v.transpose()
}

/// One period: `psi_next = Q U psi` and the probability of a detection at
/// the end of the period.
pub fn step(psi: &DVector<C64>, u: &DMatrix<C64>) -> (DVector<C64>, f64) {
    let mut next = u * psi;
    let detect = next[0].norm_sqr();
    next[0] = C64::new(0.0, 0.0);
    (next, detect)
}

/// Inputs of one protocol run.
#[derive(Debug, Clone)]
pub struct ProtocolRun {
    pub params: StroboscopicParams,
    pub lattice: LatticeModel,
    pub psi0: WaveState,
    pub n_steps: usize,
    /// Record every `record_every`-th period (the final one is always kept).
    pub record_every: usize,
}

#[derive(Debug, Clone)]
pub struct ProtocolOutcome {
    /// `S(n tau)` and the per-period detection rate `P_n / tau`.
    pub record: SurvivalRecord,
    /// Detection probability of every period.
    pub detect_probs: Vec<f64>,
    /// Unnormalised conditional state on the system sites after the last period.
    pub final_state: WaveState,
    /// The ballistic front may have reached the truncation edge.
    pub truncation_warning: bool,
}

pub fn run_protocol(run: &ProtocolRun) -> Result<ProtocolOutcome> {
    let n = run.lattice.dim();
    if run.psi0.amplitudes.len() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            found: run.psi0.amplitudes.len(),
        });
    }
    run.psi0.check_normalized(1e-8)?;
    if run.n_steps == 0 {
        return Err(Error::invalid("n_steps", "must be positive"));
    }
    let tau = run.params.tau;
    let t_max = run.n_steps as f64 * tau;
    let truncation_warning = run.lattice.kind != LatticeKind::Finite && {
        let sites = run.lattice.sites();
        let reach = run
            .psi0
            .amplitudes
            .iter()
            .zip(&sites)
            .filter(|(a, _)| a.norm_sqr() > 0.0)
            .map(|(_, s)| s.unsigned_abs() as usize)
            .max()
            .unwrap_or(1);
        run.lattice.n_sites < reach + (2.0 * run.params.gamma0 * t_max).ceil() as usize + 20
    };
    if truncation_warning {
        log::warn!(
            "stroboscopic run to t = {t_max}: ballistic front reaches the truncation edge of {} sites",
            run.lattice.n_sites
        );
    }

    let u = step_propagator(&build_full_hamiltonian(&run.lattice, &run.params), tau);
    let mut psi = DVector::from_iterator(
        n + 1,
        std::iter::once(C64::new(0.0, 0.0)).chain(run.psi0.amplitudes.iter().copied()),
    );
    let every = run.record_every.max(1);
    let mut record = SurvivalRecord::new(Route::Stroboscopic);
    let f0: f64 = run
        .lattice
        .detector_neighbours()
        .iter()
        .map(|&i| run.psi0.amplitudes[i])
        .sum::<C64>()
        .norm_sqr()
        * 2.0
        * run.params.alpha
        * run.params.gamma0;
    record.push(0.0, 1.0, f0);
    let mut detect_probs = Vec::with_capacity(run.n_steps);
    for k in 1..=run.n_steps {
        let (next, p) = step(&psi, &u);
        psi = next;
        detect_probs.push(p);
        if k % every == 0 || k == run.n_steps {
            let s: f64 = psi.iter().map(|a| a.norm_sqr()).sum();
            record.push(k as f64 * tau, s, p / tau);
        }
    }
    if truncation_warning {
        record.notes.push("truncation edge reached".into());
    }
    Ok(ProtocolOutcome {
        record,
        detect_probs,
        final_state: WaveState::new(t_max, psi.iter().skip(1).copied().collect()),
        truncation_warning,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn params(w: C64, tau: f64) -> StroboscopicParams {
        StroboscopicParams::from_w(w, tau).unwrap()
    }

    #[test]
    fn uncoupled_detector_for_zero_alpha() {
        let l = LatticeModel::finite(2).unwrap();
        let h = build_full_hamiltonian(&l, &params(C64::new(0.0, 0.0), 0.1));
        assert_eq!(h[(0, 1)], 0.0);
        assert_eq!(h[(0, 2)], 0.0);
        assert_eq!(h[(1, 1)], 2.0);
        assert_eq!(h[(1, 2)], -1.0);
        assert_eq!(h[(2, 2)], 2.0);
    }

    #[test]
    fn coupling_entry() {
        let l = LatticeModel::finite(15).unwrap();
        let h = build_full_hamiltonian(&l, &params(C64::new(2.0, 0.0), 0.01));
        assert!((h[(0, 1)] + 20.0).abs() < 1e-12);
        assert_eq!(h, h.transpose());
        let eig = SymmetricEigen::new(h);
        assert!(eig.eigenvalues.iter().all(|v| v.is_finite()));
    }

    #[test]
    fn full_line_has_no_bond_across_detector() {
        let l = LatticeModel::full_line(3).unwrap();
        let h = build_full_hamiltonian(&l, &params(C64::new(1.0, 0.5), 0.1));
        // sites -1, 1 sit at indices 3, 4 (after the detector at 0)
        assert_eq!(h[(3, 4)], 0.0);
        assert_eq!(h[(3, 3)], 2.5);
        assert_eq!(h[(4, 4)], 2.5);
        assert!(h[(0, 3)] < 0.0 && h[(0, 4)] < 0.0);
    }

    #[test]
    fn propagator_is_unitary() {
        let l = LatticeModel::finite(10).unwrap();
        let h = build_full_hamiltonian(&l, &params(C64::new(1.5, -0.5), 0.01));
        let u = step_propagator(&h, 0.01);
        let prod = u.adjoint() * &u;
        assert!((prod - DMatrix::identity(11, 11)).iter().all(|z| z.norm() < 1e-12));
    }

    #[test]
    fn no_detection_without_coupling() {
        let l = LatticeModel::finite(6).unwrap();
        let run = ProtocolRun {
            params: params(C64::new(0.0, 0.3), 0.01),
            lattice: l,
            psi0: WaveState::localized(&l, 1).unwrap(),
            n_steps: 500,
            record_every: 50,
        };
        let out = run_protocol(&run).unwrap();
        assert!(out.record.survival.iter().all(|s| (s - 1.0).abs() < 1e-12));
        assert!(out.detect_probs.iter().all(|p| *p < 1e-28));
    }

    #[test]
    fn one_step_loss_is_first_order_in_tau() {
        // 1 - S(tau) = 2 Re(w) tau |psi_1|^2 + O(tau^2) for psi0 on site 1
        let w = C64::new(1.2, 0.4);
        let l = LatticeModel::finite(5).unwrap();
        let psi0 = WaveState::localized(&l, 1).unwrap();
        let errs: Vec<f64> = [1e-3, 5e-4, 2.5e-4]
            .iter()
            .map(|&tau| {
                let run = ProtocolRun {
                    params: params(w, tau),
                    lattice: l,
                    psi0: psi0.clone(),
                    n_steps: 1,
                    record_every: 1,
                };
                let s = run_protocol(&run).unwrap().record.survival[1];
                ((1.0 - s) - 2.0 * w.re * tau).abs()
            })
            .collect();
        assert!(errs[0] / errs[1] > 3.5 && errs[1] / errs[2] > 3.5, "{errs:?}");
    }

    #[test]
    fn matches_direct_matrix_power() {
        let w = C64::new(0.8, 0.0);
        let l = LatticeModel::finite(5).unwrap();
        let p = params(w, 0.05);
        let h = build_full_hamiltonian(&l, &p);
        let u = step_propagator(&h, p.tau);
        let mut q = DMatrix::<C64>::identity(6, 6);
        q[(0, 0)] = C64::new(0.0, 0.0);
        let ut = &q * &u * &q;
        let mut m = DMatrix::<C64>::identity(6, 6);
        for _ in 0..20 {
            m = &ut * m;
        }
        let psi0 = WaveState::localized(&l, 3).unwrap();
        let v0 = DVector::from_iterator(6, std::iter::once(C64::new(0.0, 0.0)).chain(psi0.amplitudes.iter().copied()));
        let direct = (&m * v0).norm_squared();
        let run = ProtocolRun {
            params: p,
            lattice: l,
            psi0,
            n_steps: 20,
            record_every: 1,
        };
        let out = run_protocol(&run).unwrap();
        assert!((out.record.survival[20] - direct).abs() < 1e-13);
        assert!(out.record.max_increase() <= 1e-14);
    }
}
