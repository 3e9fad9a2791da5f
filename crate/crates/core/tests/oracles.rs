//! Library results against independent constructions: direct time stepping,
//! the method of images and symmetry reductions.

use std::f64::consts::PI;

use firstdetect::analytic::{psi1_series, survival_halfline};
use firstdetect::continuum::{
    evolve_halfline, expand, norm_direct, survival_and_fptd, ContinuumBasis, InitialPacket,
};
use firstdetect::effective::{build_effective, evolve};
use firstdetect::numerics::{integrate_adaptive, QuadratureSpec, SeriesTruncation};
use firstdetect::params::{LatticeModel, WaveState};
use firstdetect::spectral::{eta_scatter, LatticeBasis};
use firstdetect::C64;

fn c(re: f64, im: f64) -> C64 {
    C64::new(re, im)
}

const I: C64 = C64 { re: 0.0, im: 1.0 };

/// `i psi' = H psi` on sites `1..=n` with `H = 2 - hopping - i w |1><1|`,
/// stepped with classical RK4.
fn rk4_halfline(w: C64, n0: usize, t: f64, dt: f64) -> Vec<C64> {
    let n = n0 + (2.0 * t) as usize + 40;
    let apply = |v: &[C64]| -> Vec<C64> {
        (0..n)
            .map(|j| {
                let mut h = 2.0 * v[j];
                if j == 0 {
                    h -= I * w * v[0];
                }
                if j > 0 {
                    h -= v[j - 1];
                }
                if j + 1 < n {
                    h -= v[j + 1];
                }
                -I * h
            })
            .collect()
    };
    let mut psi = vec![c(0.0, 0.0); n];
    psi[n0 - 1] = c(1.0, 0.0);
    let steps = (t / dt).round() as usize;
    let h = t / steps as f64;
    let axpy = |a: &[C64], s: f64, b: &[C64]| -> Vec<C64> { a.iter().zip(b).map(|(x, y)| x + y * s).collect() };
    for _ in 0..steps {
        let k1 = apply(&psi);
        let k2 = apply(&axpy(&psi, h / 2.0, &k1));
        let k3 = apply(&axpy(&psi, h / 2.0, &k2));
        let k4 = apply(&axpy(&psi, h, &k3));
        for j in 0..n {
            psi[j] += (k1[j] + 2.0 * k2[j] + 2.0 * k3[j] + k4[j]) * (h / 6.0);
        }
    }
    psi
}

#[test]
fn boundary_series_matches_direct_time_stepping() {
    let trunc = SeriesTruncation::default();
    for w in [c(0.3, 0.2), c(1.0, 0.0), c(2.5, -1.0), c(0.1, 0.5)] {
        for n0 in [1, 3, 7] {
            for t in [0.5, 4.0, 12.0] {
                let direct = rk4_halfline(w, n0, t, 2e-3)[0];
                let series = psi1_series(w, n0, t, &trunc).unwrap();
                assert!((direct - series).norm() < 1e-9, "w={w} n0={n0} t={t}: {direct} vs {series}");
            }
        }
    }
}

/// Full-line state `psi` evolved directly against its even part on the half
/// line with `2w` and its odd part on the half line with `w = 0`.
#[test]
fn full_line_evolution_splits_into_even_and_odd_half_lines() {
    let (w, m, t) = (c(0.7, 0.4), 40, 6.0);
    let start: [(i64, C64); 4] = [(-3, c(0.4, 0.1)), (-1, c(-0.2, 0.3)), (2, c(0.5, 0.0)), (3, c(0.1, -0.6))];
    let full = LatticeModel::full_line(m).unwrap();
    let half = LatticeModel::half_line(m).unwrap();
    let mut psi = vec![c(0.0, 0.0); full.dim()];
    let (mut even, mut odd) = (vec![c(0.0, 0.0); m], vec![c(0.0, 0.0); m]);
    for (site, a) in start {
        psi[full.index_of(site).unwrap()] = a;
        let j = site.unsigned_abs() as usize - 1;
        even[j] += a / 2f64.sqrt();
        odd[j] += a * site.signum() as f64 / 2f64.sqrt();
    }
    // Evolution is linear; states are rescaled to unit norm and back.
    let run = |lattice: LatticeModel, w: C64, amps: Vec<C64>| {
        let h = build_effective(lattice, w).unwrap();
        let norm = amps.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt();
        let unit = amps.iter().map(|a| a / norm).collect();
        let out = evolve(&h, &WaveState::new(0.0, unit), &[t]).unwrap().states.remove(0).amplitudes;
        out.into_iter().map(|a| a * norm).collect::<Vec<_>>()
    };
    let psi_t = run(full, w, psi);
    let even_t = run(half, 2.0 * w, even);
    let odd_t = run(half, c(0.0, 0.0), odd);
    for n in 1..=m as i64 {
        let j = n as usize - 1;
        let plus = (even_t[j] + odd_t[j]) / 2f64.sqrt();
        let minus = (even_t[j] - odd_t[j]) / 2f64.sqrt();
        assert!((psi_t[full.index_of(n).unwrap()] - plus).norm() < 1e-9, "site {n}");
        assert!((psi_t[full.index_of(-n).unwrap()] - minus).norm() < 1e-9, "site -{n}");
    }
}

#[test]
fn infinite_time_survival_matches_long_evolution() {
    // The residual survival after t is bounded by the t^-2 tail of the flux.
    let (w, n0, t) = (c(0.8, 0.3), 2, 600.0);
    let lattice = LatticeModel::half_line(LatticeModel::ballistic_truncation(n0, t)).unwrap();
    let h = build_effective(lattice, w).unwrap();
    let psi0 = WaveState::localized(&lattice, n0 as i64).unwrap();
    let evolved = evolve(&h, &psi0, &[t]).unwrap().record.survival[0];
    let closed = survival_halfline(w, n0, &QuadratureSpec::default()).unwrap();
    assert!(evolved >= closed);
    assert!(evolved - closed < 1e-4, "{evolved} vs {closed}");
}

/// Free kernel of `i d/dt = -d^2/dx^2`.
fn kernel(z: f64, t: f64) -> C64 {
    (I * z * z / (4.0 * t)).exp() / (4.0 * PI * I * t).sqrt()
}

fn quad() -> QuadratureSpec {
    QuadratureSpec {
        abs_tol: 1e-12,
        rel_tol: 1e-10,
        max_panels: 200_000,
        panel_order: 16,
    }
}

/// `int_a^b K(x + s y + shift) dy` for the unit indicator on `[a, b]`.
fn kernel_over_packet(x: f64, sign: f64, shift: f64, t: f64, (a, b): (f64, f64)) -> C64 {
    integrate_adaptive(|y| kernel(x + sign * y + shift, t), a, b, &quad()).unwrap().value
}

/// Method of images for `Psi + zeta Psi' = 0` with `Re(zeta) < 0`:
/// `G = K(x - y) + K(x + y) + int_0^inf (2/zeta) e^{u/zeta} K(x + y + u) du`.
fn robin_by_images(zeta: C64, x: f64, t: f64, support: (f64, f64)) -> C64 {
    let direct = kernel_over_packet(x, -1.0, 0.0, t, support) + kernel_over_packet(x, 1.0, 0.0, t, support);
    let image = integrate_adaptive(
        |u| 2.0 / zeta * (u / zeta).exp() * kernel_over_packet(x, 1.0, u, t, support),
        0.0,
        50.0,
        &quad(),
    )
    .unwrap()
    .value;
    direct + image
}

#[test]
fn robin_evolution_matches_method_of_images() {
    let zeta = c(-0.3, -0.5);
    let support = (1.0, 2.0);
    let packet = InitialPacket::indicator(support.0, support.1, c(1.0, 0.0)).unwrap();
    let exp = expand(&packet, &ContinuumBasis::new(zeta).unwrap()).unwrap();
    for t in [0.3, 1.5] {
        for x in [0.0, 0.7, 3.0] {
            let images = robin_by_images(zeta, x, t, support);
            let spectral = evolve_halfline(&exp, x, t, &quad()).unwrap();
            assert!((images - spectral).norm() < 1e-7, "x={x} t={t}: {images} vs {spectral}");
        }
    }
}

#[test]
fn dirichlet_evolution_matches_odd_images() {
    let support = (0.5, 1.5);
    let packet = InitialPacket::indicator(support.0, support.1, c(1.0, 0.0)).unwrap();
    let exp = expand(&packet, &ContinuumBasis::new(c(0.0, 0.0)).unwrap()).unwrap();
    for t in [0.2, 1.0] {
        for x in [0.4, 1.0, 2.5] {
            let images =
                kernel_over_packet(x, -1.0, 0.0, t, support) - kernel_over_packet(x, 1.0, 0.0, t, support);
            let spectral = evolve_halfline(&exp, x, t, &quad()).unwrap();
            assert!((images - spectral).norm() < 1e-7, "x={x} t={t}: {images} vs {spectral}");
        }
    }
}

#[test]
fn norm_of_evolved_packet_matches_survival_from_flux() {
    let packet = InitialPacket::indicator(1.0, 2.0, c(1.0, 0.0)).unwrap();
    let exp = expand(&packet, &ContinuumBasis::new(c(0.2, -0.5)).unwrap()).unwrap();
    let q = QuadratureSpec::default().with_abs_tol(1e-12);
    let t = 1.0;
    let from_flux = survival_and_fptd(&exp, &[t], &q).unwrap().survival[0];
    let direct = norm_direct(&exp, t, 40.0, 0.125, &q).unwrap();
    assert!((from_flux - direct).abs() < 1e-4, "{from_flux} vs {direct}");
}

/// `sum_n eta^k_n eta^q_n` acts as `delta(k - q)` on smooth functions of `q`.
#[test]
fn scattering_states_form_a_nascent_delta() {
    let basis = LatticeBasis::halfline(c(0.6, 0.3)).unwrap();
    let g = |q: f64| q.sin().powi(2) * (-(q - 1.3).powi(2)).exp();
    let k = 1.1;
    let sites = 1500u64;
    let mut total = c(0.0, 0.0);
    for n in 1..=sites {
        let inner = integrate_adaptive(
            |q| g(q) * eta_scatter(&basis, q, n).unwrap(),
            1e-12,
            PI - 1e-12,
            &QuadratureSpec::default(),
        )
        .unwrap()
        .value;
        total += eta_scatter(&basis, k, n).unwrap() * inner;
    }
    assert!((total - g(k)).norm() < 1e-3, "{total} vs {}", g(k));
}
