#![allow(dead_code)]

use std::f64::consts::PI;

use num_complex::Complex64;
use qpump::linalg::{c, cis, CMat, I};
use qpump::models::{make_pump, Drive, ModelSpec};
use qpump::smatrix::{Cycle, Timing};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn assert_close(a: f64, b: f64, tol: f64, what: &str) {
    assert!((a - b).abs() <= tol, "{what}: {a} vs {b} (tol {tol})");
}

pub fn max_diff(a: &CMat, b: &CMat) -> f64 {
    (a - b).iter().fold(0.0, |m, z| m.max(z.norm()))
}

/// Four harmonic drives `(theta, alpha, phi, gamma)` for a periodic cycle.
#[derive(Clone, Copy, Debug)]
pub struct Drives {
    pub theta: Drive,
    pub alpha: Drive,
    pub phi: Drive,
    pub gamma: Drive,
}

fn harmonic(rng: &mut ChaCha8Rng, offset: (f64, f64), amplitude: f64) -> Drive {
    Drive::Harmonic {
        offset: rng.random_range(offset.0..offset.1),
        amplitude: rng.random_range(-amplitude..amplitude),
        period: 1.0,
        phase: rng.random_range(0.0..2.0 * PI),
    }
}

impl Drives {
    pub fn random(seed: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        Self {
            theta: harmonic(&mut rng, (0.3, 1.2), 0.3),
            alpha: harmonic(&mut rng, (0.0, 6.0), 1.5),
            phi: harmonic(&mut rng, (0.0, 6.0), 1.5),
            gamma: harmonic(&mut rng, (0.0, 3.0), 1.0),
        }
    }

    pub fn spec(&self) -> ModelSpec {
        ModelSpec::CustomTwoChannel {
            theta: self.theta,
            alpha: self.alpha,
            phi: self.phi,
            gamma: self.gamma,
            shifts: [0.0, 0.0],
            timing: Timing::Periodic { period: 1.0 },
            dispersion: Default::default(),
        }
    }

    pub fn cycle(&self) -> Cycle {
        make_pump(&self.spec()).unwrap()
    }

    /// `i dS/dt S†` from hand-differentiated matrix entries.
    pub fn exact_shift(&self, t: f64) -> CMat {
        let (th, a, p, g) = (self.theta.value(t), self.alpha.value(t), self.phi.value(t), self.gamma.value(t));
        let (dth, da, dp, dg) = (self.theta.rate(t), self.alpha.rate(t), self.phi.rate(t), self.gamma.rate(t));
        let (s, co) = th.sin_cos();
        let m = CMat::from_row_slice(
            2,
            2,
            &[cis(a) * co, I * cis(-p) * s, I * cis(p) * s, cis(-a) * co],
        );
        let dm = CMat::from_row_slice(
            2,
            2,
            &[
                cis(a) * (I * da * co - s * dth),
                I * cis(-p) * (-I * dp * s + co * dth),
                I * cis(p) * (I * dp * s + co * dth),
                cis(-a) * (-I * da * co - s * dth),
            ],
        );
        let full = m.map(|z| z * cis(g));
        let dfull = (m.map(|z| z * I * dg) + dm).map(|z| z * cis(g));
        (dfull * full.adjoint()).map(|z| z * I)
    }
}

/// Diagonal of `diag(a)` as complex entries.
pub fn cdiag(entries: &[f64]) -> CMat {
    let v: Vec<Complex64> = entries.iter().map(|&x| c(x, 0.0)).collect();
    qpump::linalg::diag(&v)
}
