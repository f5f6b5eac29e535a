//! Small dense complex matrices.

use nalgebra::DMatrix;
use num_complex::Complex64;

pub type CMat = DMatrix<Complex64>;

pub const I: Complex64 = Complex64::new(0.0, 1.0);

pub fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

pub fn cis(phase: f64) -> Complex64 {
    Complex64::from_polar(1.0, phase)
}

pub fn identity(n: usize) -> CMat {
    CMat::identity(n, n)
}

/// Largest entry modulus.
pub fn max_abs(m: &CMat) -> f64 {
    m.iter().fold(0.0, |acc, z| acc.max(z.norm()))
}

/// `max |S S† - 1|`.
pub fn unitarity_residual(s: &CMat) -> f64 {
    let n = s.nrows();
    max_abs(&(s * s.adjoint() - identity(n)))
}

/// Splits `a` into its Hermitian part and the size of the discarded remainder.
pub fn hermitize(a: &CMat) -> (CMat, f64) {
    let adj = a.adjoint();
    let herm = (a + &adj).scale(0.5);
    let anti = (a - &adj).scale(0.5);
    (herm, max_abs(&anti))
}

pub fn diag(entries: &[Complex64]) -> CMat {
    let n = entries.len();
    CMat::from_fn(n, n, |i, j| if i == j { entries[i] } else { Complex64::new(0.0, 0.0) })
}

/// Wraps an angle into `(-pi, pi]`.
pub fn wrap_pi(x: f64) -> f64 {
    let two_pi = 2.0 * std::f64::consts::PI;
    let mut y = x.rem_euclid(two_pi);
    if y > std::f64::consts::PI {
        y -= two_pi;
    }
    y
}

/// Wraps an angle into `[0, 2pi)`.
pub fn wrap_two_pi(x: f64) -> f64 {
    let two_pi = 2.0 * std::f64::consts::PI;
    let y = x.rem_euclid(two_pi);
    if y >= two_pi {
        0.0
    } else {
        y
    }
}
