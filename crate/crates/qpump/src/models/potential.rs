//! Scattering off one-dimensional piecewise-constant potentials.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{c, CMat, I};
use crate::smatrix::Dispersion;

/// `V(x) = values[i]` on `[breakpoints[i], breakpoints[i+1])`, zero in the leads.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PiecewisePotential {
    pub breakpoints: Vec<f64>,
    pub values: Vec<f64>,
}

/// Largest `kappa * width` handled by the full transfer matrix.
pub const MAX_EXPONENT: f64 = 700.0;
/// Energies this close to a plateau count as band edges.
pub const BAND_EDGE: f64 = 1e-12;

impl PiecewisePotential {
    pub fn new(breakpoints: Vec<f64>, values: Vec<f64>) -> Result<Self> {
        let p = Self { breakpoints, values };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        if self.values.is_empty() || self.breakpoints.len() != self.values.len() + 1 {
            return Err(Error::InvalidSpec(
                "need m >= 1 values and m + 1 breakpoints".into(),
            ));
        }
        if self.breakpoints.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(Error::InvalidSpec("breakpoints must increase strictly".into()));
        }
        if self.values.iter().chain(&self.breakpoints).any(|v| !v.is_finite()) {
            return Err(Error::InvalidSpec("potential must be finite".into()));
        }
        Ok(())
    }

    fn intervals(&self) -> impl Iterator<Item = (usize, f64, f64)> + '_ {
        self.values
            .iter()
            .zip(self.breakpoints.windows(2))
            .enumerate()
            .map(|(i, (&v, w))| (i, v, w[1] - w[0]))
    }
}

/// Maps `(psi, psi')` across an interval of width `w` where `psi'' = -q psi`.
fn propagator(q: f64, w: f64) -> [[f64; 2]; 2] {
    if q >= 0.0 {
        let k = q.sqrt();
        let (s, co) = (k * w).sin_cos();
        let sinc = if (k * w).abs() < 1e-8 { w } else { s / k };
        [[co, sinc], [-q * sinc, co]]
    } else {
        let kappa = (-q).sqrt();
        let x = kappa * w;
        let (sh, ch) = (x.sinh(), x.cosh());
        let sinhc = if x.abs() < 1e-8 { w } else { sh / kappa };
        [[ch, sinhc], [-q * sinhc, ch]]
    }
}

/// `psi'' = -q psi` with `q = (E - V) / kinetic`.
fn curvature(energy: f64, v: f64, d: &Dispersion) -> f64 {
    (energy - v) / d.kinetic
}

/// Carries `(psi, psi')` across `cells` (`(V, width)` pairs), rescaling after
/// each cell. Returns the unit-norm end state and the log of the dropped scale.
///
/// Sweeping towards a lead from a purely outgoing or decaying solution keeps
/// the physical branch dominant, so opaque plateaus lose no precision.
fn sweep(cells: &[(f64, f64)], energy: f64, d: &Dispersion, start: [Complex64; 2], backwards: bool) -> ([Complex64; 2], f64) {
    let mut state = start;
    let mut log_scale = 0.0;
    let mut step = |&(v, w): &(f64, f64)| {
        let m = propagator(curvature(energy, v, d), if backwards { -w } else { w });
        state = [
            state[0] * m[0][0] + state[1] * m[0][1],
            state[0] * m[1][0] + state[1] * m[1][1],
        ];
        let norm = state[0].norm().hypot(state[1].norm());
        state = [state[0] / norm, state[1] / norm];
        log_scale += norm.ln();
    };
    if backwards {
        cells.iter().rev().for_each(&mut step);
    } else {
        cells.iter().for_each(&mut step);
    }
    (state, log_scale)
}

/// Splits `(psi, psi')` in a lead into right- and left-moving amplitudes.
fn amplitudes(state: [Complex64; 2], k: f64) -> (Complex64, Complex64) {
    let slope = state[1] / (I * k);
    (0.5 * (state[0] + slope), 0.5 * (state[0] - slope))
}

fn cells(pot: &PiecewisePotential) -> Vec<(f64, f64)> {
    pot.intervals().map(|(_, v, w)| (v, w)).collect()
}

/// Scattering matrix from two sweeps, one per incoming lead.
fn solve(cells: &[(f64, f64)], energy: f64, d: &Dispersion) -> CMat {
    let k = d.wavenumber(energy);
    let one = c(1.0, 0.0);
    // From the left: unit transmitted wave at the right end, swept back.
    let (left, log_left) = sweep(cells, energy, d, [one, I * k], true);
    let (a, b) = amplitudes(left, k);
    let r = b / a;
    let t = (-log_left).exp() / a;
    // From the right: unit transmitted wave at the left end, swept forward.
    let (right, log_right) = sweep(cells, energy, d, [one, -I * k], false);
    let (c_out, d_in) = amplitudes(right, k);
    let r_back = c_out / d_in;
    let t_back = (-log_right).exp() / d_in;
    CMat::from_row_slice(2, 2, &[r, t_back, t, r_back])
}

/// `[[r, t'], [t, r']]` with fiducial points at the outer breakpoints.
///
/// Fails on a plateau whose evanescent exponent exceeds [`MAX_EXPONENT`] or
/// when the energy sits on a plateau value.
pub fn transfer_matrix_smatrix(pot: &PiecewisePotential, energy: f64, dispersion: &Dispersion) -> Result<CMat> {
    pot.validate()?;
    if !(energy > 0.0) {
        return Err(Error::InvalidSpec(format!("energy must be positive, got {energy}")));
    }
    for (i, v, w) in pot.intervals() {
        if (energy - v).abs() < BAND_EDGE {
            return Err(Error::EnergyAtBandEdge { interval: i, energy });
        }
        let q = curvature(energy, v, dispersion);
        if q < 0.0 && (-q).sqrt() * w > MAX_EXPONENT {
            return Err(Error::EvanescentOverflow {
                interval: i,
                exponent: (-q).sqrt() * w,
            });
        }
    }
    Ok(solve(&cells(pot), energy, dispersion))
}

/// Reflection amplitude of the cells between a lead and an opaque wall,
/// starting from the solution decaying into the wall.
fn wall_reflection(cells: &[(f64, f64)], energy: f64, d: &Dispersion, wall: f64, towards_left: bool) -> Complex64 {
    let k = d.wavenumber(energy);
    let kappa = (-curvature(energy, wall, d)).sqrt();
    let slope = if towards_left { -kappa } else { kappa };
    let (state, _) = sweep(cells, energy, d, [c(1.0, 0.0), c(slope, 0.0)], towards_left);
    let (right_moving, left_moving) = amplitudes(state, k);
    if towards_left {
        left_moving / right_moving
    } else {
        right_moving / left_moving
    }
}

/// As [`transfer_matrix_smatrix`], replacing failures by their limits: an
/// overflowing plateau becomes an opaque wall (`t = 0`, each side reflecting
/// off a decaying wave) and a band-edge energy is nudged by `1e-10`.
pub fn transfer_matrix_smatrix_or_limit(pot: &PiecewisePotential, energy: f64, dispersion: &Dispersion) -> Result<CMat> {
    match transfer_matrix_smatrix(pot, energy, dispersion) {
        Ok(s) => Ok(s),
        Err(Error::EnergyAtBandEdge { .. }) => {
            transfer_matrix_smatrix_or_limit(pot, energy + 1e-10, dispersion)
        }
        Err(Error::EvanescentOverflow { interval, .. }) => {
            let cells = cells(pot);
            let wall = cells[interval].0;
            let r = wall_reflection(&cells[..interval], energy, dispersion, wall, true);
            let r_back = wall_reflection(&cells[interval + 1..], energy, dispersion, wall, false);
            let zero = c(0.0, 0.0);
            Ok(CMat::from_row_slice(2, 2, &[r, zero, zero, r_back]))
        }
        Err(e) => Err(e),
    }
}
