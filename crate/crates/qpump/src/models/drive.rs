//! Scalar time dependences for model parameters.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

/// A smooth function of time with a closed-form derivative.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "shape", rename_all = "kebab-case", deny_unknown_fields)]
pub enum Drive {
    Constant { value: f64 },
    Linear { offset: f64, rate: f64 },
    /// `offset + amplitude * sin(2 pi t / period + phase)`.
    Harmonic {
        offset: f64,
        amplitude: f64,
        period: f64,
        #[serde(default)]
        phase: f64,
    },
    /// Smooth compactly supported bump reaching `height` at the midpoint of `[start, end]`.
    Bump { height: f64, start: f64, end: f64 },
    /// Smooth step from 0 before `start` to `total` after `end`.
    Ramp { total: f64, start: f64, end: f64 },
}

impl Default for Drive {
    fn default() -> Self {
        Drive::Constant { value: 0.0 }
    }
}

fn bump(s: f64) -> (f64, f64) {
    // exp(1 - 1/(1 - s^2)) on (-1, 1).
    if s.abs() >= 1.0 {
        return (0.0, 0.0);
    }
    let d = 1.0 - s * s;
    let f = (1.0 - 1.0 / d).exp();
    (f, f * (-2.0 * s / (d * d)))
}

fn psi(s: f64) -> (f64, f64) {
    if s <= 0.0 {
        (0.0, 0.0)
    } else {
        let f = (-1.0 / s).exp();
        (f, f / (s * s))
    }
}

/// Smooth step on `[0, 1]` and its derivative.
fn step(s: f64) -> (f64, f64) {
    let (a, da) = psi(s);
    let (b, db) = psi(1.0 - s);
    let sum = a + b;
    if sum == 0.0 {
        return (if s >= 1.0 { 1.0 } else { 0.0 }, 0.0);
    }
    (a / sum, (da * b + a * db) / (sum * sum))
}

impl Drive {
    pub fn value(&self, t: f64) -> f64 {
        self.eval(t).0
    }

    pub fn rate(&self, t: f64) -> f64 {
        self.eval(t).1
    }

    fn eval(&self, t: f64) -> (f64, f64) {
        match *self {
            Drive::Constant { value } => (value, 0.0),
            Drive::Linear { offset, rate } => (offset + rate * t, rate),
            Drive::Harmonic {
                offset,
                amplitude,
                period,
                phase,
            } => {
                let w = 2.0 * PI / period;
                let (s, c) = (w * t + phase).sin_cos();
                (offset + amplitude * s, amplitude * w * c)
            }
            Drive::Bump { height, start, end } => {
                let half = 0.5 * (end - start);
                let (f, df) = bump((t - 0.5 * (start + end)) / half);
                (height * f, height * df / half)
            }
            Drive::Ramp { total, start, end } => {
                let width = end - start;
                let (f, df) = step((t - start) / width);
                (total * f, total * df / width)
            }
        }
    }

    /// Returns a message when the parameters cannot define a drive.
    pub fn validate(&self) -> Result<(), String> {
        let finite = |x: f64| x.is_finite();
        match *self {
            Drive::Constant { value } if !finite(value) => Err("value must be finite".into()),
            Drive::Linear { offset, rate } if !(finite(offset) && finite(rate)) => {
                Err("offset and rate must be finite".into())
            }
            Drive::Harmonic { period, .. } if !(period > 0.0 && finite(period)) => {
                Err("period must be positive".into())
            }
            Drive::Bump { start, end, .. } | Drive::Ramp { start, end, .. } if !(end > start) => {
                Err("end must exceed start".into())
            }
            _ => Ok(()),
        }
    }

    /// Support of the time dependence, when it is compact.
    pub fn support(&self) -> Option<(f64, f64)> {
        match *self {
            Drive::Constant { .. } => Some((0.0, 0.0)),
            Drive::Bump { start, end, .. } | Drive::Ramp { start, end, .. } => Some((start, end)),
            _ => None,
        }
    }
}
