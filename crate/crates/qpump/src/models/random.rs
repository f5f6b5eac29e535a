//! Seeded smooth cycles with generic matrix structure, for property checks.

use std::f64::consts::PI;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::linalg::{c, cis, identity, CMat, I};
use crate::smatrix::{Dispersion, PumpCycle, Timing};

/// Recipe for a [`RandomCycle`].
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RandomCycleSpec {
    pub channels: usize,
    pub seed: u64,
    /// Scale of the Hermitian generators.
    pub strength: f64,
    pub period: f64,
    /// Per-channel winding of a diagonal phase factor.
    pub winding: Vec<i32>,
    /// Scale the loop generators by `k(E)` so that `S(0, t)` is static.
    /// Only meaningful without winding.
    pub frozen_threshold: bool,
}

impl Default for RandomCycleSpec {
    fn default() -> Self {
        Self {
            channels: 2,
            seed: 0,
            strength: 0.5,
            period: 1.0,
            winding: Vec::new(),
            frozen_threshold: false,
        }
    }
}

/// `S = U0 C(H) W(t)` with `C(H) = (1 + iH)(1 - iH)^{-1}`,
/// `H = A + scale (cos(wt) B + sin(wt) C) + k(E) D` and `W` a diagonal winding.
#[derive(Clone, Debug)]
pub struct RandomCycle {
    base: CMat,
    static_part: CMat,
    cos_part: CMat,
    sin_part: CMat,
    energy_part: CMat,
    winding: Vec<i32>,
    period: f64,
    loop_scale: f64,
    frozen_threshold: bool,
    dispersion: Dispersion,
    seed: u64,
}

fn hermitian(rng: &mut ChaCha8Rng, n: usize, scale: f64) -> CMat {
    let mut m = CMat::from_element(n, n, c(0.0, 0.0));
    for i in 0..n {
        m[(i, i)] = c(scale * rng.random_range(-1.0..1.0), 0.0);
        for j in i + 1..n {
            let z = c(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)) * scale;
            m[(i, j)] = z;
            m[(j, i)] = z.conj();
        }
    }
    m
}

/// Cayley transform of a Hermitian matrix.
pub fn cayley(h: &CMat) -> CMat {
    let n = h.nrows();
    let ih = h.map(|z| z * I);
    let den = (identity(n) - &ih).try_inverse().expect("1 - iH is invertible for Hermitian H");
    (identity(n) + ih) * den
}

impl RandomCycle {
    pub fn new(spec: &RandomCycleSpec) -> Self {
        let n = spec.channels.max(1);
        let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
        let s = spec.strength;
        let base = cayley(&hermitian(&mut rng, n, 1.0));
        let static_part = hermitian(&mut rng, n, s);
        let cos_part = hermitian(&mut rng, n, s);
        let sin_part = hermitian(&mut rng, n, s);
        let energy_part = hermitian(&mut rng, n, 0.3 * s);
        let mut winding = spec.winding.clone();
        winding.resize(n, 0);
        Self {
            base,
            static_part,
            cos_part,
            sin_part,
            energy_part,
            winding,
            period: spec.period,
            loop_scale: 1.0,
            frozen_threshold: spec.frozen_threshold,
            dispersion: Dispersion::default(),
            seed: spec.seed,
        }
    }

    /// Same cycle with the time-dependent generators scaled by `u`; `u = 0`
    /// collapses the loop to a point, so `u` spans a disk bounded by the cycle.
    pub fn with_loop_scale(&self, u: f64) -> Self {
        Self {
            loop_scale: u,
            ..self.clone()
        }
    }

    /// Matrix at energy `E` and loop angle `v` in units of a full turn.
    pub fn at_angle(&self, energy: f64, v: f64) -> CMat {
        self.evaluate(energy, v * self.period)
    }
}

impl PumpCycle for RandomCycle {
    fn n_channels(&self) -> usize {
        self.base.nrows()
    }

    fn evaluate(&self, energy: f64, time: f64) -> CMat {
        let w = 2.0 * PI / self.period;
        let (sn, cs) = (w * time).sin_cos();
        let k = self.dispersion.wavenumber(energy);
        let scale = if self.frozen_threshold { self.loop_scale * k } else { self.loop_scale };
        let h = &self.static_part
            + (&self.cos_part * c(cs, 0.0) + &self.sin_part * c(sn, 0.0)) * c(scale, 0.0)
            + &self.energy_part * c(k, 0.0);
        let mut s = &self.base * cayley(&h);
        for (j, &m) in self.winding.iter().enumerate() {
            if m != 0 {
                let phase = cis(m as f64 * w * time);
                s.column_mut(j).iter_mut().for_each(|z| *z *= phase);
            }
        }
        s
    }

    fn timing(&self) -> Timing {
        Timing::Periodic { period: self.period }
    }

    fn label(&self) -> String {
        format!("random (n={}, seed={})", self.n_channels(), self.seed)
    }
}
