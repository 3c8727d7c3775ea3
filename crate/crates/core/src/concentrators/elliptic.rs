//! Complete elliptic integrals by the arithmetic-geometric mean.

use std::f64::consts::FRAC_PI_2;

/// Complete elliptic integrals `(K(m), E(m))` of the first and second kind
/// for parameter `m = k^2` in `[0, 1)`.
pub fn ellip_ke(m: f64) -> (f64, f64) {
    debug_assert!((0.0..1.0).contains(&m), "elliptic parameter {m} outside [0, 1)");
    let mut a = 1.0_f64;
    let mut b = (1.0 - m).sqrt();
    let mut c = m.sqrt();
    let mut weight = 0.5;
    let mut sum = weight * c * c;
    for _ in 0..64 {
        if c.abs() <= f64::EPSILON * a {
            break;
        }
        let a_next = 0.5 * (a + b);
        let b_next = (a * b).sqrt();
        c = 0.5 * (a - b);
        weight *= 2.0;
        sum += weight * c * c;
        a = a_next;
        b = b_next;
    }
    let k = FRAC_PI_2 / a;
    (k, k * (1.0 - sum))
}
