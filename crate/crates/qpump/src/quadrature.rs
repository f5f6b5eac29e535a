//! Grids, step sizes and tolerances, plus the quadrature rules built on them.

use std::num::NonZeroUsize;

use gauss_quad::legendre::GaussLegendre;
use serde::{Deserialize, Serialize};

use crate::smatrix::Timing;

/// Numerical settings for every integral and derivative.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct QuadratureSpec {
    /// Points per period (or per pulse window) on time grids.
    pub time_points: usize,
    /// Gauss-Legendre nodes for thermal energy integrals.
    pub energy_points: usize,
    /// Half width of the thermal energy window in units of T.
    pub energy_window: f64,
    /// `h_E = rel_step_energy * max(E, 1)`.
    pub rel_step_energy: f64,
    /// `h_t = rel_step_time * period` (window length for pulses).
    pub rel_step_time: f64,
    /// Fourth-order Richardson combination of two central differences.
    pub richardson: bool,
    pub unitarity_tol: f64,
    pub hermiticity_tol: f64,
    pub stokes_tol: f64,
    /// Width of the near-diagonal band of the T=0 noise integral, as a fraction of the window.
    pub diag_band: f64,
    /// Base grid of the T=0 noise double integral.
    pub noise_points: usize,
    /// Subdivision of cells touching the diagonal.
    pub noise_refine: usize,
}

impl Default for QuadratureSpec {
    fn default() -> Self {
        Self {
            time_points: 512,
            energy_points: 64,
            energy_window: 30.0,
            rel_step_energy: 1e-5,
            rel_step_time: 1e-5,
            richardson: false,
            unitarity_tol: 1e-8,
            hermiticity_tol: 1e-8,
            stokes_tol: 1e-6,
            diag_band: 1e-3,
            noise_points: 1024,
            noise_refine: 4,
        }
    }
}

impl QuadratureSpec {
    pub fn energy_step(&self, energy: f64) -> f64 {
        self.rel_step_energy * energy.abs().max(1.0)
    }

    pub fn time_step(&self, timing: Timing) -> f64 {
        self.rel_step_time * timing.scale()
    }

    /// Same settings with both finite-difference steps halved.
    pub fn halved_steps(&self) -> Self {
        Self {
            rel_step_energy: 0.5 * self.rel_step_energy,
            rel_step_time: 0.5 * self.rel_step_time,
            ..self.clone()
        }
    }

    /// Checks positivity of tolerances and minimal grid sizes; returns the offending field.
    pub fn validate(&self) -> std::result::Result<(), (&'static str, String)> {
        let grids = [
            ("time_points", self.time_points),
            ("energy_points", self.energy_points),
            ("noise_points", self.noise_points),
        ];
        for (name, n) in grids {
            if n < 16 {
                return Err((name, format!("grid size {n} is below 16")));
            }
        }
        if self.noise_refine == 0 {
            return Err(("noise_refine", "must be at least 1".into()));
        }
        let positive = [
            ("energy_window", self.energy_window),
            ("rel_step_energy", self.rel_step_energy),
            ("rel_step_time", self.rel_step_time),
            ("unitarity_tol", self.unitarity_tol),
            ("hermiticity_tol", self.hermiticity_tol),
            ("stokes_tol", self.stokes_tol),
            ("diag_band", self.diag_band),
        ];
        for (name, x) in positive {
            if !(x > 0.0 && x.is_finite()) {
                return Err((name, format!("must be positive and finite, got {x}")));
            }
        }
        Ok(())
    }
}

/// Gauss-Legendre rule on `[-1, 1]`.
#[derive(Clone, Debug)]
pub struct GaussRule {
    nodes: Vec<f64>,
    weights: Vec<f64>,
}

impl GaussRule {
    pub fn new(n: usize) -> Self {
        let rule = GaussLegendre::new(NonZeroUsize::new(n.max(1)).expect("nonzero"));
        let (nodes, weights) = rule.as_node_weight_pairs().iter().copied().unzip();
        Self { nodes, weights }
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    /// Nodes and weights mapped onto `[a, b]`.
    pub fn mapped(&self, a: f64, b: f64) -> Vec<(f64, f64)> {
        let half = 0.5 * (b - a);
        let mid = 0.5 * (b + a);
        self.nodes
            .iter()
            .zip(&self.weights)
            .map(|(x, w)| (mid + half * x, half * w))
            .collect()
    }

    /// Nodes and weights of the composite rule with `panels` equal panels on `[a, b]`.
    pub fn composite(&self, a: f64, b: f64, panels: usize) -> Vec<(f64, f64)> {
        let panels = panels.max(1);
        let width = (b - a) / panels as f64;
        (0..panels)
            .flat_map(|p| {
                let lo = a + p as f64 * width;
                self.mapped(lo, lo + width)
            })
            .collect()
    }

    pub fn integrate(&self, a: f64, b: f64, f: impl Fn(f64) -> f64) -> f64 {
        self.mapped(a, b).into_iter().map(|(x, w)| w * f(x)).sum()
    }
}

/// Nodes and trapezoid weights covering one period or pulse window.
///
/// Periodic grids use midpoints, which makes the rule spectrally accurate for
/// smooth periodic integrands and keeps nodes off the period boundaries and
/// quarter points, where piecewise-defined cycles have corners.
pub fn time_grid(timing: Timing, points: usize) -> Option<Vec<(f64, f64)>> {
    match timing {
        Timing::Periodic { period } => {
            let h = period / points as f64;
            Some((0..points).map(|i| ((i as f64 + 0.5) * h, h)).collect())
        }
        Timing::Pulse { start, end } => {
            let h = (end - start) / points as f64;
            Some(
                (0..=points)
                    .map(|i| {
                        let w = if i == 0 || i == points { 0.5 * h } else { h };
                        (start + i as f64 * h, w)
                    })
                    .collect(),
            )
        }
        Timing::Open => None,
    }
}
