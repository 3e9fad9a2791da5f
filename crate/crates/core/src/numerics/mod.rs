//! Special functions and quadrature kernels.

pub mod oscillatory;
pub mod quadrature;
pub mod special;

pub use oscillatory::{integrate_oscillatory_semiinfinite, integrate_phase_sum, OscillatoryIntegrand, PhaseComponent};
pub use quadrature::{integrate_adaptive, integrate_adaptive_breaks, GaussRule, Quadrature, QuadratureSpec, SeriesTruncation};
pub use special::{bessel_j, bessel_j_sequence, gamma_half_integer, principal_sqrt, theta_pm};

/// Least-squares slope and intercept of `y` against `x`.
pub fn linear_fit(x: &[f64], y: &[f64]) -> (f64, f64) {
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let sxx: f64 = x.iter().map(|a| (a - mx) * (a - mx)).sum();
    let slope = sxy / sxx;
    (slope, my - slope * mx)
}

/// Evenly spaced grid of `count` points from `start` to `stop` inclusive.
pub fn linspace(start: f64, stop: f64, count: usize) -> Vec<f64> {
    match count {
        0 => Vec::new(),
        1 => vec![start],
        _ => {
            let h = (stop - start) / (count - 1) as f64;
            (0..count)
                .map(|j| if j + 1 == count { stop } else { start + j as f64 * h })
                .collect()
        }
    }
}
