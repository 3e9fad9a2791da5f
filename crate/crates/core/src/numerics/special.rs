use crate::error::{Error, Result};
use crate::params::C64;

/// Largest order and argument accepted by the Bessel routines.
pub const BESSEL_LIMIT: f64 = 1.0e6;

const RESCALE_ABOVE: f64 = 1.0e250;
const RESCALE_BY: f64 = 1.0e-250;

/// `J_0(x), ..., J_max_order(x)` for `x >= 0`.
///
/// Miller's downward recurrence started well above both `max_order` and `x`,
/// normalised with `J_0 + 2 sum_k J_2k = 1`.
pub fn bessel_j_sequence(max_order: usize, x: f64) -> Result<Vec<f64>> {
    if !x.is_finite() || x < 0.0 {
        return Err(Error::invalid("x", format!("Bessel argument must be finite and >= 0, got {x}")));
    }
    if max_order as f64 > BESSEL_LIMIT || x > BESSEL_LIMIT {
        return Err(Error::OutOfValidity(format!(
            "Bessel J of order {max_order} at x = {x} exceeds the supported range"
        )));
    }
    let mut out = vec![0.0; max_order + 1];
    if x == 0.0 {
        out[0] = 1.0;
        return Ok(out);
    }

    let top = (max_order as f64).max(x);
    let mut start = (top + 30.0 + 2.0 * (40.0 * top).sqrt()) as usize;
    start += start % 2;

    let two_over_x = 2.0 / x;
    let mut j_next = 0.0;
    let mut j_cur = 1.0e-300;
    let mut even_sum = 0.0;
    for k in (1..=start).rev() {
        // j_cur holds J_k; produce J_{k-1}
        let j_prev = (k as f64) * two_over_x * j_cur - j_next;
        j_next = j_cur;
        j_cur = j_prev;
        let order = k - 1;
        if order <= max_order {
            out[order] = j_cur;
        }
        if order % 2 == 0 && order > 0 {
            even_sum += j_cur;
        }
        if j_cur.abs() > RESCALE_ABOVE {
            j_cur *= RESCALE_BY;
            j_next *= RESCALE_BY;
            even_sum *= RESCALE_BY;
            for v in out.iter_mut().skip(order) {
                *v *= RESCALE_BY;
            }
        }
    }
    let norm = j_cur + 2.0 * even_sum;
    if !norm.is_finite() || norm == 0.0 {
        return Err(Error::NonFinite("Bessel normalisation"));
    }
    for v in out.iter_mut() {
        *v /= norm;
    }
    if out.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite("Bessel recurrence"));
    }
    Ok(out)
}

/// `J_order(x)` for a single order.
pub fn bessel_j(order: usize, x: f64) -> Result<f64> {
    Ok(bessel_j_sequence(order, x)?[order])
}

/// Principal square root with the cut on the non-positive real axis.
/// On the cut (including `-0.0` imaginary parts) the limit from above is
/// returned, so `sqrt(-4) = 2i`.
pub fn principal_sqrt(z: C64) -> C64 {
    let (x, y) = (z.re, z.im);
    if x == 0.0 && y == 0.0 {
        return C64::new(0.0, 0.0);
    }
    let t = ((x.abs() + x.hypot(y)) / 2.0).sqrt();
    if x >= 0.0 {
        C64::new(t, y / (2.0 * t))
    } else {
        let im = if y == 0.0 { t } else { t.copysign(y) };
        C64::new(y.abs() / (2.0 * t), im)
    }
}

/// Roots `theta_± = -z ± sqrt(z^2 + 1)` of `theta^2 + 2 z theta - 1 = 0`.
///
/// Defined off the rays `z = i y`, `|y| >= 1`. The smaller root is obtained
/// from the larger one through `theta_+ theta_- = -1` to avoid cancellation.
pub fn theta_pm(z: C64) -> Result<(C64, C64)> {
    if z.re == 0.0 && z.im.abs() >= 1.0 {
        return Err(Error::invalid("z", format!("{z} lies on an excluded branch ray")));
    }
    let r = principal_sqrt(z * z + 1.0);
    let plus = -z + r;
    let minus = -z - r;
    if plus.norm() >= minus.norm() {
        Ok((plus, -1.0 / plus))
    } else {
        Ok((-1.0 / minus, minus))
    }
}

/// `Gamma(s + 3/2)` for integer `s >= 0`.
pub fn gamma_half_integer(s: usize) -> f64 {
    let mut g = std::f64::consts::PI.sqrt() / 2.0;
    for j in 0..s {
        g *= j as f64 + 1.5;
    }
    g
}
