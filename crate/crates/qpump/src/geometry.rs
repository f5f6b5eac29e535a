//! Rows of the scattering matrix as curves of states: global angle, Stokes
//! charge, projection to the sphere and winding numbers.
//!
//! The charge carried into channel `j` is `(i/2pi) oint <psi_j|d psi_j>`,
//! where `psi_j` is the transposed `j`-th row of `S(mu, t)`.

use std::f64::consts::PI;
use std::sync::Arc;

use nalgebra::DVector;
use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{wrap_pi, CMat};
use crate::quadrature::{GaussRule, QuadratureSpec};
use crate::smatrix::{checked_eval, PumpCycle};
use crate::transport::{curvature_charge, ThermalState};

pub type State = DVector<Complex64>;

/// Adjacent samples must overlap at least this much.
pub const MIN_OVERLAP: f64 = 0.9;

/// Samples of one row of `S` along a path.
#[derive(Clone, Debug, PartialEq)]
pub struct RowPath {
    pub samples: Vec<State>,
    /// Closed paths link the last sample back to the first.
    pub closed: bool,
}

pub fn row_state(s: &CMat, j: usize) -> State {
    s.row(j).transpose()
}

impl RowPath {
    /// Row `j` of `S(mu, t)` on `points` equally spaced times covering one period.
    pub fn from_cycle(cycle: &dyn PumpCycle, j: usize, mu: f64, points: usize, unitarity_tol: f64) -> Result<Self> {
        let period = cycle.timing().scale();
        let samples = (0..points)
            .map(|i| {
                let t = period * i as f64 / points as f64;
                checked_eval(cycle, mu, t, unitarity_tol).map(|s| row_state(&s, j))
            })
            .collect::<Result<_>>()?;
        Ok(Self {
            samples,
            closed: true,
        })
    }

    /// Samples `f` at `points` equally spaced values of `v` in `[0, 1)`.
    pub fn closed_from_fn(points: usize, f: impl Fn(f64) -> State) -> Self {
        Self {
            samples: (0..points).map(|i| f(i as f64 / points as f64)).collect(),
            closed: true,
        }
    }

    fn links(&self) -> impl Iterator<Item = (&State, &State)> {
        let n = self.samples.len();
        let count = if self.closed { n } else { n.saturating_sub(1) };
        (0..count).map(move |k| (&self.samples[k], &self.samples[(k + 1) % n]))
    }
}

/// `sum_k arg <psi_k|psi_{k+1}>`, including the closing link of closed paths.
///
/// A constant-shape path `e^{i g(t)} psi0` accumulates the change of `g`;
/// the carried charge is `-angle / 2pi`.
pub fn global_angle(path: &RowPath) -> Result<f64> {
    let mut angle = 0.0;
    for (a, b) in path.links() {
        let overlap = a.dotc(b);
        let size = overlap.norm() / (a.norm() * b.norm());
        if !(size > MIN_OVERLAP) {
            return Err(Error::GridTooCoarse { overlap: size });
        }
        angle += overlap.arg();
    }
    Ok(angle)
}

/// Charge from the global angle of a closed curve `v -> psi(v)`, `v` in `[0, 1)`.
///
/// The sample count doubles until two estimates agree to `tol / 2`; the
/// last pair is Richardson-combined.
pub fn line_charge(f: &(dyn Fn(f64) -> State + Sync), tol: f64) -> Result<f64> {
    let charge = |n: usize| -> Result<f64> {
        let path = RowPath {
            samples: (0..n).into_par_iter().map(|i| f(i as f64 / n as f64)).collect(),
            closed: true,
        };
        Ok(-global_angle(&path)? / (2.0 * PI))
    };
    let mut n = 64;
    let mut coarse = charge(n)?;
    loop {
        n *= 2;
        let fine = charge(n)?;
        if (fine - coarse).abs() < 0.5 * tol || n >= 1 << 20 {
            return Ok((4.0 * fine - coarse) / 3.0);
        }
        coarse = fine;
    }
}

/// Charge carried into channel `j` over one period at the Fermi energy.
pub fn cycle_line_charge(cycle: &dyn PumpCycle, j: usize, mu: f64, q: &QuadratureSpec) -> Result<f64> {
    let period = cycle.timing().scale();
    // Validate unitarity once on the coarse grid; the closure cannot fail.
    RowPath::from_cycle(cycle, j, mu, 64, q.unitarity_tol)?;
    line_charge(&|v| row_state(&cycle.evaluate(mu, v * period), j), q.stokes_tol)
}

type PatchMap = Arc<dyn Fn(f64, f64) -> CMat + Send + Sync>;

/// Two-parameter family of scattering matrices on `[0, 1]^2`.
///
/// Convention: the edge `u = 0` maps to a single matrix, the edge `u = 1`
/// runs once around the cycle as `v` goes from 0 to 1, and the edges `v = 0`
/// and `v = 1` coincide. `reversed` flips the orientation.
#[derive(Clone)]
pub struct SurfacePatch {
    map: PatchMap,
    pub reversed: bool,
    /// Gauss-Legendre panels per direction on the first pass.
    pub resolution: usize,
}

impl SurfacePatch {
    pub fn new(map: impl Fn(f64, f64) -> CMat + Send + Sync + 'static) -> Self {
        Self {
            map: Arc::new(map),
            reversed: false,
            resolution: 2,
        }
    }

    pub fn reversed(mut self) -> Self {
        self.reversed = !self.reversed;
        self
    }

    pub fn at(&self, u: f64, v: f64) -> CMat {
        (self.map)(u, v)
    }

    /// Row `j` along the boundary edge `u = 1`.
    pub fn boundary(&self, j: usize) -> impl Fn(f64) -> State + Sync + '_ {
        move |v| {
            let v = if self.reversed { 1.0 - v } else { v };
            row_state(&self.at(1.0, v), j)
        }
    }
}

/// Result of a Stokes integral with its refinement history.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct StokesCharge {
    pub charge: f64,
    pub panels: usize,
    /// Change between the last two refinements.
    pub change: f64,
    pub converged: bool,
}

const PATCH_STEP: f64 = 1e-5;
const POINTS_PER_PANEL: usize = 8;
const MAX_PANELS: usize = 128;

/// `-2 Im <d_u psi|d_v psi>`, the curvature two-form in `(u, v)` coordinates.
fn curvature_density(patch: &SurfacePatch, j: usize, u: f64, v: f64) -> f64 {
    let h = PATCH_STEP;
    let row = |u: f64, v: f64| row_state(&patch.at(u, v), j);
    // One-sided near the edges keeps the stencil inside the square.
    let (ul, uh) = ((u - h).max(0.0), (u + h).min(1.0));
    let du = (row(uh, v) - row(ul, v)) / Complex64::new(uh - ul, 0.0);
    let dv = (row(u, v + h) - row(u, v - h)) / Complex64::new(2.0 * h, 0.0);
    -2.0 * du.dotc(&dv).im
}

fn stokes_pass(patch: &SurfacePatch, j: usize, panels: usize) -> f64 {
    let rule = GaussRule::new(POINTS_PER_PANEL);
    let nodes = rule.composite(0.0, 1.0, panels);
    let total: f64 = nodes
        .par_iter()
        .map(|&(u, wu)| {
            nodes
                .iter()
                .map(|&(v, wv)| wv * curvature_density(patch, j, u, v))
                .sum::<f64>()
                * wu
        })
        .collect::<Vec<f64>>()
        .into_iter()
        .sum();
    let sign = if patch.reversed { -1.0 } else { 1.0 };
    sign * total / (2.0 * PI)
}

/// `(i/2pi) int int <d psi_j| ^ |d psi_j>` over the patch.
///
/// Panels double until two passes differ by less than `tol / 2`.
pub fn charge_via_stokes(patch: &SurfacePatch, j: usize, tol: f64) -> Result<StokesCharge> {
    let n = patch.at(0.5, 0.5).nrows();
    if j >= n {
        return Err(Error::InvalidSpec(format!("channel {j} out of range for {n} channels")));
    }
    let mut panels = patch.resolution.max(1);
    let mut previous = stokes_pass(patch, j, panels);
    loop {
        panels *= 2;
        let current = stokes_pass(patch, j, panels);
        let change = (current - previous).abs();
        if change < 0.5 * tol || panels >= MAX_PANELS {
            return Ok(StokesCharge {
                charge: current,
                panels,
                change,
                converged: change < 0.5 * tol,
            });
        }
        previous = current;
    }
}

/// `(2 Re(r t'^*), 2 Im(r t'^*), |r|^2 - |t'|^2)` for `psi = (r, t')`.
pub fn bloch_point(psi: &State) -> [f64; 3] {
    let (r, tp) = (psi[0], psi[1]);
    let m = r * tp.conj();
    [2.0 * m.re, 2.0 * m.im, r.norm_sqr() - tp.norm_sqr()]
}

/// Projects a two-component path onto the unit sphere.
pub fn stereographic(path: &RowPath) -> Result<Vec<[f64; 3]>> {
    if path.samples.iter().any(|s| s.len() != 2) {
        return Err(Error::InvalidSpec("sphere projection needs two channels".into()));
    }
    Ok(path.samples.iter().map(bloch_point).collect())
}

fn dot(a: &[f64; 3], b: &[f64; 3]) -> f64 {
    a[0] * b[0] + a[1] * b[1] + a[2] * b[2]
}

fn triple(a: &[f64; 3], b: &[f64; 3], c: &[f64; 3]) -> f64 {
    a[0] * (b[1] * c[2] - b[2] * c[1]) - a[1] * (b[0] * c[2] - b[2] * c[0]) + a[2] * (b[0] * c[1] - b[1] * c[0])
}

/// Signed solid angle of the spherical triangle `(a, b, c)`.
fn triangle_area(a: &[f64; 3], b: &[f64; 3], c: &[f64; 3]) -> f64 {
    let den = 1.0 + dot(a, b) + dot(b, c) + dot(c, a);
    2.0 * triple(a, b, c).atan2(den)
}

/// Signed area enclosed by a closed polygon on the sphere, counter-clockwise
/// positive as seen from outside, modulo `4 pi`.
///
/// The polygon is fanned into triangles from the coordinate pole closest to
/// orthogonal to every vertex; near-antipodal apexes make the triangle
/// formula ill-conditioned.
pub fn signed_area(points: &[[f64; 3]]) -> f64 {
    if points.len() < 3 {
        return 0.0;
    }
    let poles = [
        [1.0, 0.0, 0.0],
        [-1.0, 0.0, 0.0],
        [0.0, 1.0, 0.0],
        [0.0, -1.0, 0.0],
        [0.0, 0.0, 1.0],
        [0.0, 0.0, -1.0],
    ];
    let clearance = |x: &[f64; 3]| points.iter().map(|s| 1.0 - dot(x, s).powi(2)).fold(f64::MAX, f64::min);
    let apex = poles
        .iter()
        .max_by(|p, q| clearance(p).total_cmp(&clearance(q)))
        .expect("six poles");
    let n = points.len();
    (0..n).map(|k| triangle_area(apex, &points[k], &points[(k + 1) % n])).sum()
}

/// Fractional part of the charge carried by a closed two-channel row path,
/// `area / 4pi` reduced to `[0, 1)`.
pub fn fractional_charge(path: &RowPath) -> Result<f64> {
    let points = stereographic(path)?;
    Ok((signed_area(&points) / (4.0 * PI)).rem_euclid(1.0))
}

/// Winding number of a closed loop of unit complex numbers with its rounding residual.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Winding {
    pub winding: i64,
    pub residual: f64,
}

/// Largest phase step accepted between neighbours.
pub const MAX_PHASE_STEP: f64 = 0.95 * PI;

pub fn winding_number(phases: &[Complex64]) -> Result<Winding> {
    let n = phases.len();
    let mut total = 0.0;
    for k in 0..n {
        let step = wrap_pi(phases[(k + 1) % n].arg() - phases[k].arg());
        if step.abs() > MAX_PHASE_STEP {
            return Err(Error::PhaseUnwrapFailure {
                time: k as f64 / n as f64,
                jump: step,
            });
        }
        total += step;
    }
    let turns = total / (2.0 * PI);
    let winding = turns.round();
    let residual = (turns - winding).abs();
    if residual >= 0.01 {
        return Err(Error::PhaseUnwrapFailure {
            time: 0.0,
            jump: residual,
        });
    }
    Ok(Winding {
        winding: winding as i64,
        residual,
    })
}

/// Charge as the integral of the curvature `Omega_jj` over
/// `[0, mu] x one period`; valid when the energy shift vanishes at `E = 0`.
pub fn cylinder_charge(cycle: &dyn PumpCycle, j: usize, mu: f64, q: &QuadratureSpec) -> Result<f64> {
    curvature_charge(cycle, j, &ThermalState::zero_temperature(mu), q)
}
