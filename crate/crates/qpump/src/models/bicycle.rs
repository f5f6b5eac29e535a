//! Two synchronized valves around a box whose floor is raised and lowered.

use std::f64::consts::PI;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::potential::{transfer_matrix_smatrix_or_limit, PiecewisePotential};
use crate::error::{Error, Result};
use crate::linalg::{c, CMat};
use crate::smatrix::{Dispersion, PumpCycle, Timing};

/// Valves of height `a M` and `(1 - a) M`, width `delta`, around a box of
/// length `length` with floor `plateau * b`. The control point `(a, b)`
/// runs around the unit square.
///
/// Units put the Fermi wavenumber at `pi` for `mu = 1`, so `E = k^2 / pi^2`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BicycleSpec {
    pub mass: f64,
    pub delta: f64,
    pub length: f64,
    pub plateau: f64,
    pub period: f64,
}

impl Default for BicycleSpec {
    fn default() -> Self {
        Self {
            mass: 1e4,
            delta: 1e-3,
            length: 1.0,
            plateau: 10.0,
            period: 1.0,
        }
    }
}

impl BicycleSpec {
    pub fn dispersion() -> Dispersion {
        Dispersion {
            kinetic: 1.0 / (PI * PI),
        }
    }

    pub fn validate(&self) -> Result<()> {
        let checks = [
            ("mass", self.mass),
            ("delta", self.delta),
            ("length", self.length),
            ("plateau", self.plateau),
            ("period", self.period),
        ];
        for (name, x) in checks {
            if !(x > 0.0 && x.is_finite()) {
                return Err(Error::InvalidSpec(format!("bicycle {name} must be positive, got {x}")));
            }
        }
        if self.length <= self.delta {
            return Err(Error::InvalidSpec("bicycle length must exceed the valve width".into()));
        }
        Ok(())
    }

    /// Control point at time `t`: four edges of the square at constant speed,
    /// starting from `(0, 1)` with the floor going down.
    pub fn path(&self, t: f64) -> (f64, f64) {
        let s = 4.0 * (t / self.period).rem_euclid(1.0);
        let leg = (s.floor() as usize).min(3);
        let f = s - leg as f64;
        match leg {
            0 => (0.0, 1.0 - f),
            1 => (f, 0.0),
            2 => (1.0, f),
            _ => (1.0 - f, 1.0),
        }
    }

    pub fn potential(&self, a: f64, b: f64) -> PiecewisePotential {
        let (d, l) = (self.delta, self.length);
        PiecewisePotential {
            breakpoints: vec![0.0, d, l, l + d],
            values: vec![a * self.mass, self.plateau * b, (1.0 - a) * self.mass],
        }
    }

    pub fn smatrix_at(&self, a: f64, b: f64, energy: f64) -> Result<CMat> {
        transfer_matrix_smatrix_or_limit(&self.potential(a, b), energy, &Self::dispersion())
    }
}

#[derive(Clone, Debug)]
pub struct BicyclePump {
    pub spec: BicycleSpec,
}

impl PumpCycle for BicyclePump {
    fn n_channels(&self) -> usize {
        2
    }

    fn evaluate(&self, energy: f64, time: f64) -> CMat {
        let (a, b) = self.spec.path(time);
        self.spec
            .smatrix_at(a, b, energy)
            .unwrap_or_else(|_| CMat::from_element(2, 2, c(f64::NAN, f64::NAN)))
    }

    fn timing(&self) -> Timing {
        Timing::Periodic {
            period: self.spec.period,
        }
    }

    fn label(&self) -> String {
        format!("bicycle (L={})", self.spec.length)
    }
}

/// Interior control point where the reflection amplitude nearly vanishes.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ReflectionlessPoint {
    pub a: f64,
    pub b: f64,
    pub reflection: f64,
}

/// Resonances are narrow in `b`, so the search scans `b` finely along
/// `a_lines` lines of constant `a`, takes the local minima of `|r|` on each
/// line as seeds, and refines them by Newton iteration on `(Re r, Im r)`.
/// Returns distinct interior points with `|r| < threshold`, sorted by `b`.
pub fn reflectionless_points(
    spec: &BicycleSpec,
    energy: f64,
    a_lines: usize,
    b_points: usize,
    threshold: f64,
) -> Result<Vec<ReflectionlessPoint>> {
    let r_at = |a: f64, b: f64| -> Result<Complex64> { Ok(spec.smatrix_at(a, b, energy)?[(0, 0)]) };
    let inside = |x: f64| x > 0.0 && x < 1.0;
    let mut found: Vec<ReflectionlessPoint> = Vec::new();
    for i in 1..a_lines {
        let a = i as f64 / a_lines as f64;
        let bs: Vec<f64> = (1..b_points).map(|k| k as f64 / b_points as f64).collect();
        let values = bs.iter().map(|&b| r_at(a, b).map(|r| r.norm())).collect::<Result<Vec<_>>>()?;
        let mut seeds: Vec<(f64, f64)> = (1..values.len() - 1)
            .filter(|&k| values[k] < values[k - 1] && values[k] <= values[k + 1])
            .map(|k| (values[k], bs[k]))
            .collect();
        seeds.sort_by(|x, y| x.0.total_cmp(&y.0));
        seeds.truncate(8);
        for (_, b0) in seeds {
            let (mut a, mut b) = (a, b0);
            let h = 1e-8;
            for _ in 0..60 {
                let r = r_at(a, b)?;
                if r.norm() < 1e-12 {
                    break;
                }
                let ra = (r_at(a + h, b)? - r_at(a - h, b)?) / (2.0 * h);
                let rb = (r_at(a, b + h)? - r_at(a, b - h)?) / (2.0 * h);
                let det = ra.re * rb.im - rb.re * ra.im;
                if det == 0.0 || !det.is_finite() {
                    break;
                }
                let mut da = (r.re * rb.im - rb.re * r.im) / det;
                let mut db = (ra.re * r.im - r.re * ra.im) / det;
                let len = da.hypot(db);
                if len > 0.05 {
                    da *= 0.05 / len;
                    db *= 0.05 / len;
                }
                if !(inside(a - da) && inside(b - db)) {
                    break;
                }
                a -= da;
                b -= db;
                if len < 1e-14 {
                    break;
                }
            }
            let reflection = r_at(a, b)?.norm();
            let duplicate = found.iter().any(|p| (p.a - a).hypot(p.b - b) < 1e-4);
            if reflection < threshold && !duplicate {
                found.push(ReflectionlessPoint { a, b, reflection });
            }
        }
    }
    found.sort_by(|x, y| x.b.total_cmp(&y.b));
    Ok(found)
}

/// Largest `|t|^2` at the Fermi energy over a uniform time grid.
pub fn max_transmission(spec: &BicycleSpec, energy: f64, points: usize) -> Result<f64> {
    let mut worst: f64 = 0.0;
    for i in 0..points {
        let (a, b) = spec.path(spec.period * i as f64 / points as f64);
        worst = worst.max(spec.smatrix_at(a, b, energy)?[(1, 0)].norm_sqr());
    }
    Ok(worst)
}
