//! Pumped currents, dissipation, entropy and noise currents, cycle charges.
//!
//! Currents are positive when charge flows out of the scatterer into the lead.

use std::f64::consts::PI;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{wrap_pi, CMat};
use crate::quadrature::{time_grid, GaussRule, QuadratureSpec};
use crate::smatrix::{checked_eval, differential_data, energy_shift, PumpCycle, Timing};

/// Reservoir chemical potential and temperature (energy units).
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ThermalState {
    pub mu: f64,
    #[serde(default)]
    pub temperature: f64,
}

impl ThermalState {
    pub fn new(mu: f64, temperature: f64) -> Result<Self> {
        let s = Self { mu, temperature };
        s.validate()?;
        Ok(s)
    }

    pub fn zero_temperature(mu: f64) -> Self {
        Self { mu, temperature: 0.0 }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.mu > 0.0 && self.mu.is_finite()) {
            return Err(Error::InvalidSpec(format!("mu must be positive, got {}", self.mu)));
        }
        if !(self.temperature >= 0.0 && self.temperature.is_finite()) {
            return Err(Error::InvalidSpec(format!(
                "temperature must be non-negative, got {}",
                self.temperature
            )));
        }
        Ok(())
    }

    pub fn beta(&self) -> Option<f64> {
        (self.temperature > 0.0).then(|| 1.0 / self.temperature)
    }

    pub fn is_zero(&self) -> bool {
        self.temperature == 0.0
    }
}

/// Fermi function and its first two energy derivatives.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct FermiWeight {
    pub rho: f64,
    pub d1: f64,
    pub d2: f64,
    /// At T=0 the derivatives are distributions (`-d1` is a unit mass at
    /// `mu`); `d1` and `d2` are then reported as zero and callers should
    /// evaluate integrands at the Fermi energy.
    pub distributional: bool,
}

pub fn fermi_weight(energy: f64, state: &ThermalState) -> FermiWeight {
    match state.beta() {
        None => {
            let rho = if energy < state.mu {
                1.0
            } else if energy > state.mu {
                0.0
            } else {
                0.5
            };
            FermiWeight {
                rho,
                d1: 0.0,
                d2: 0.0,
                distributional: true,
            }
        }
        Some(beta) => {
            let x = beta * (energy - state.mu);
            let rho = if x > 0.0 {
                let e = (-x).exp();
                e / (1.0 + e)
            } else {
                1.0 / (1.0 + x.exp())
            };
            let p = rho * (1.0 - rho);
            FermiWeight {
                rho,
                d1: -beta * p,
                d2: beta * beta * p * (1.0 - 2.0 * rho),
                distributional: false,
            }
        }
    }
}

/// Thermal energy window `[max(mu - W T, mu/1000), mu + W T]`.
pub fn thermal_window(state: &ThermalState, q: &QuadratureSpec) -> (f64, f64) {
    let w = q.energy_window * state.temperature;
    ((state.mu - w).max(1e-3 * state.mu), state.mu + w)
}

/// Energies and weights of `-rho'(E) dE`; a single node at `mu` when T=0.
pub fn thermal_nodes(state: &ThermalState, q: &QuadratureSpec) -> Vec<(f64, f64)> {
    if state.is_zero() {
        return vec![(state.mu, 1.0)];
    }
    let (lo, hi) = thermal_window(state, q);
    GaussRule::new(q.energy_points)
        .mapped(lo, hi)
        .into_iter()
        .map(|(e, w)| (e, -w * fermi_weight(e, state).d1))
        .collect()
}

fn check_channel(cycle: &dyn PumpCycle, j: usize) -> Result<()> {
    if j >= cycle.n_channels() {
        return Err(Error::InvalidSpec(format!(
            "channel {j} out of range for {} channels",
            cycle.n_channels()
        )));
    }
    Ok(())
}

/// `-(1/2pi) int rho'(E) E_jj(E, t) dE`.
pub fn bpt_current(cycle: &dyn PumpCycle, j: usize, t: f64, state: &ThermalState, q: &QuadratureSpec) -> Result<f64> {
    check_channel(cycle, j)?;
    let mut acc = 0.0;
    for (e, w) in thermal_nodes(state, q) {
        acc += w * energy_shift(cycle, e, t, q)?[(j, j)].re;
    }
    Ok(acc / (2.0 * PI))
}

/// All channel currents at once, sharing each energy-shift evaluation.
pub fn bpt_currents(cycle: &dyn PumpCycle, t: f64, state: &ThermalState, q: &QuadratureSpec) -> Result<Vec<f64>> {
    let n = cycle.n_channels();
    let mut acc = vec![0.0; n];
    for (e, w) in thermal_nodes(state, q) {
        let shift = energy_shift(cycle, e, t, q)?;
        for (j, a) in acc.iter_mut().enumerate() {
            *a += w * shift[(j, j)].re;
        }
    }
    Ok(acc.into_iter().map(|a| a / (2.0 * PI)).collect())
}

/// `(E^2)_jj(mu, t) / 4pi`, evaluated at the Fermi energy.
pub fn dissipation_current(cycle: &dyn PumpCycle, j: usize, t: f64, state: &ThermalState, q: &QuadratureSpec) -> Result<f64> {
    check_channel(cycle, j)?;
    let e = energy_shift(cycle, state.mu, t, q)?;
    Ok((&e * &e)[(j, j)].re / (4.0 * PI))
}

/// Dissipation in excess of the bound: `sum_{k != j} |E_jk|^2 / 4pi`.
pub fn excess_dissipation(cycle: &dyn PumpCycle, j: usize, t: f64, state: &ThermalState, q: &QuadratureSpec) -> Result<f64> {
    check_channel(cycle, j)?;
    let e = energy_shift(cycle, state.mu, t, q)?;
    let off: f64 = (0..e.ncols()).filter(|&k| k != j).map(|k| e[(j, k)].norm_sqr()).sum();
    Ok(off / (4.0 * PI))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum FlowKind {
    /// `h(x) = -x ln x - (1-x) ln(1-x)`.
    Entropy,
    /// `h(x) = x(1-x)`.
    Noise,
}

impl FlowKind {
    pub fn h(&self, x: f64) -> f64 {
        match self {
            FlowKind::Entropy => {
                let term = |y: f64| if y > 0.0 { -y * y.ln() } else { 0.0 };
                term(x) + term(1.0 - x)
            }
            FlowKind::Noise => x * (1.0 - x),
        }
    }

    /// Reciprocal of `int_0^1 h`.
    pub fn divisor(&self) -> f64 {
        match self {
            FlowKind::Entropy => 2.0,
            FlowKind::Noise => 6.0,
        }
    }
}

/// `int_0^1 h(x) dx` computed as `int h(rho(E)) (-rho'(E)) dE` on a thermal window.
pub fn h_integral(kind: FlowKind, temperature: f64) -> f64 {
    let state = ThermalState {
        mu: 1.0,
        temperature,
    };
    let half = 40.0 * temperature;
    GaussRule::new(64)
        .composite(1.0 - half, 1.0 + half, 16)
        .into_iter()
        .map(|(e, w)| {
            let f = fermi_weight(e, &state);
            -w * f.d1 * kind.h(f.rho)
        })
        .sum()
}

/// `(beta / 2pi k) * ((E^2)_jj - E_jj^2)` at the Fermi energy.
pub fn entropy_noise_current(
    cycle: &dyn PumpCycle,
    j: usize,
    t: f64,
    state: &ThermalState,
    q: &QuadratureSpec,
    kind: FlowKind,
) -> Result<f64> {
    check_channel(cycle, j)?;
    let beta = state.beta().ok_or(Error::ZeroTemperature)?;
    let e = energy_shift(cycle, state.mu, t, q)?;
    let d = e[(j, j)].re;
    let spread = ((&e * &e)[(j, j)].re - d * d).max(0.0);
    Ok(beta * spread / (2.0 * PI * kind.divisor()))
}

fn require_grid(cycle: &dyn PumpCycle, q: &QuadratureSpec) -> Result<Vec<(f64, f64)>> {
    time_grid(cycle.timing(), q.time_points)
        .ok_or_else(|| Error::InvalidSpec("cycle has neither a period nor a pulse window".into()))
}

/// Charge carried into channel `j` over one period or the whole pulse.
pub fn cycle_charge(cycle: &dyn PumpCycle, j: usize, state: &ThermalState, q: &QuadratureSpec) -> Result<f64> {
    check_channel(cycle, j)?;
    let grid = require_grid(cycle, q)?;
    let parts: Vec<f64> = grid
        .par_iter()
        .map(|&(t, w)| bpt_current(cycle, j, t, state, q).map(|c| w * c))
        .collect::<Result<_>>()?;
    Ok(parts.into_iter().sum())
}

/// Cycle charge split into a delay term and a curvature term.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ChargeDecomposition {
    pub direct: f64,
    /// `-(1/2pi) int rho [T_jj(E, end) - T_jj(E, start)] dE`; zero for periodic cycles.
    pub delay_term: f64,
    /// `(1/2pi) int int rho Omega_jj dE dt`.
    pub curvature_term: f64,
    pub residual: f64,
}

/// `S(u^2, t)`: in `u = sqrt(E)` the matrix stays smooth at threshold, and
/// `Omega dE = Omega_u du`, `T dE = T_u du` hold exactly.
struct SqrtEnergy<'a>(&'a dyn PumpCycle);

impl PumpCycle for SqrtEnergy<'_> {
    fn n_channels(&self) -> usize {
        self.0.n_channels()
    }
    fn evaluate(&self, u: f64, time: f64) -> CMat {
        self.0.evaluate(u * u, time)
    }
    fn timing(&self) -> Timing {
        self.0.timing()
    }
    fn label(&self) -> String {
        self.0.label()
    }
}

/// Gauss nodes in `u` over the occupied spectrum, with `rho(u^2)` weights.
fn occupied_nodes(state: &ThermalState, q: &QuadratureSpec) -> Vec<(f64, f64)> {
    let top = if state.is_zero() {
        state.mu
    } else {
        state.mu + q.energy_window * state.temperature
    };
    GaussRule::new(q.energy_points)
        .composite(0.0, top.sqrt(), 4)
        .into_iter()
        .map(|(u, w)| (u, w * fermi_weight(u * u, state).rho))
        .collect()
}

/// `(1/2pi) int dt int_0^inf rho(E) Omega_jj(E, t) dE`; the threshold term is taken to vanish.
pub fn curvature_charge(cycle: &dyn PumpCycle, j: usize, state: &ThermalState, q: &QuadratureSpec) -> Result<f64> {
    check_channel(cycle, j)?;
    let grid = require_grid(cycle, q)?;
    let nodes = occupied_nodes(state, q);
    let lifted = SqrtEnergy(cycle);
    let parts: Vec<f64> = grid
        .par_iter()
        .map(|&(t, wt)| -> Result<f64> {
            let mut acc = 0.0;
            for &(u, w) in &nodes {
                acc += w * differential_data(&lifted, u, t, q)?.curvature[(j, j)].re;
            }
            Ok(wt * acc)
        })
        .collect::<Result<_>>()?;
    Ok(parts.into_iter().sum::<f64>() / (2.0 * PI))
}

pub fn charge_decomposition(cycle: &dyn PumpCycle, j: usize, state: &ThermalState, q: &QuadratureSpec) -> Result<ChargeDecomposition> {
    let direct = cycle_charge(cycle, j, state, q)?;
    let curvature_term = curvature_charge(cycle, j, state, q)?;
    let delay_term = match cycle.timing() {
        Timing::Pulse { start, end } => {
            let lifted = SqrtEnergy(cycle);
            let mut acc = 0.0;
            for (u, w) in occupied_nodes(state, q) {
                let late = differential_data(&lifted, u, end, q)?.time_delay[(j, j)].re;
                let early = differential_data(&lifted, u, start, q)?.time_delay[(j, j)].re;
                acc += w * (late - early);
            }
            -acc / (2.0 * PI)
        }
        _ => 0.0,
    };
    Ok(ChargeDecomposition {
        direct,
        delay_term,
        curvature_term,
        residual: (direct - delay_term - curvature_term).abs(),
    })
}

/// `arg det S(mu, t)`.
fn det_phase(cycle: &dyn PumpCycle, mu: f64, t: f64, q: &QuadratureSpec) -> Result<f64> {
    let s = checked_eval(cycle, mu, t, q.unitarity_tol)?;
    Ok(s.determinant().arg())
}

/// `max_t |sum_j Qdot_j + (1/2pi) d/dt arg det S(mu, t)|` at T=0.
///
/// The derivative of `arg det` is a wrapped central difference; the sampled
/// phase must also unwrap continuously along the time grid.
pub fn birman_krein_residual(cycle: &dyn PumpCycle, state: &ThermalState, q: &QuadratureSpec) -> Result<f64> {
    let grid = require_grid(cycle, q)?;
    let cold = ThermalState::zero_temperature(state.mu);
    let ht = q.time_step(cycle.timing());
    let samples: Vec<(f64, f64, f64)> = grid
        .par_iter()
        .map(|&(t, _)| -> Result<(f64, f64, f64)> {
            let total: f64 = bpt_currents(cycle, t, &cold, q)?.into_iter().sum();
            let step = wrap_pi(det_phase(cycle, state.mu, t + ht, q)? - det_phase(cycle, state.mu, t - ht, q)?);
            let rate = step / (2.0 * ht);
            let phase = det_phase(cycle, state.mu, t, q)?;
            Ok(((total + rate / (2.0 * PI)).abs(), rate, phase))
        })
        .collect::<Result<_>>()?;
    for pair in samples.windows(2).zip(grid.windows(2)) {
        let ([(_, r0, p0), (_, r1, p1)], [(t0, _), (t1, _)]) = pair else {
            unreachable!()
        };
        let estimate = 0.5 * (r0 + r1) * (t1 - t0);
        let wrapped = wrap_pi(p1 - p0);
        if estimate.abs() >= PI || (estimate - wrapped).abs() > 0.5 * PI {
            return Err(Error::PhaseUnwrapFailure {
                time: *t0,
                jump: estimate,
            });
        }
    }
    Ok(samples.iter().fold(0.0, |m, s| m.max(s.0)))
}

/// Per-channel time series and cycle totals.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TransportReport {
    pub times: Vec<f64>,
    /// `current[j][k]` is channel `j` at `times[k]`.
    pub current: Vec<Vec<f64>>,
    pub dissipation: Vec<Vec<f64>>,
    /// Absent at T=0, where the local formula does not apply.
    pub entropy_current: Option<Vec<Vec<f64>>>,
    pub noise_current: Option<Vec<Vec<f64>>>,
    pub cycle_charge: Vec<f64>,
    pub birman_krein_residual: f64,
    /// `max(pi Qdot^2 - dissipation, 0)` over the grid and channels.
    pub bound_violation: f64,
}

pub fn transport_report(cycle: &dyn PumpCycle, state: &ThermalState, q: &QuadratureSpec) -> Result<TransportReport> {
    state.validate()?;
    let grid = require_grid(cycle, q)?;
    let n = cycle.n_channels();
    struct Row {
        current: Vec<f64>,
        dissipation: Vec<f64>,
        spread: Vec<f64>,
    }
    let rows: Vec<Row> = grid
        .par_iter()
        .map(|&(t, _)| -> Result<Row> {
            let current = bpt_currents(cycle, t, state, q)?;
            let e = energy_shift(cycle, state.mu, t, q)?;
            let sq = &e * &e;
            let dissipation = (0..n).map(|j| sq[(j, j)].re / (4.0 * PI)).collect();
            let spread = (0..n)
                .map(|j| (sq[(j, j)].re - e[(j, j)].re.powi(2)).max(0.0))
                .collect();
            Ok(Row {
                current,
                dissipation,
                spread,
            })
        })
        .collect::<Result<_>>()?;

    let by_channel = |f: &dyn Fn(&Row, usize) -> f64| -> Vec<Vec<f64>> {
        (0..n).map(|j| rows.iter().map(|r| f(r, j)).collect()).collect()
    };
    let current = by_channel(&|r, j| r.current[j]);
    let dissipation = by_channel(&|r, j| r.dissipation[j]);
    let flow = |kind: FlowKind| {
        state
            .beta()
            .map(|beta| by_channel(&|r, j| beta * r.spread[j] / (2.0 * PI * kind.divisor())))
    };
    let cycle_charge = current
        .iter()
        .map(|series| series.iter().zip(&grid).map(|(c, (_, w))| c * w).sum())
        .collect();
    let mut bound_violation: f64 = 0.0;
    for r in &rows {
        for j in 0..n {
            bound_violation = bound_violation.max(PI * r.current[j].powi(2) - r.dissipation[j]);
        }
    }
    Ok(TransportReport {
        times: grid.iter().map(|(t, _)| *t).collect(),
        current,
        dissipation,
        entropy_current: flow(FlowKind::Entropy),
        noise_current: flow(FlowKind::Noise),
        cycle_charge,
        birman_krein_residual: birman_krein_residual(cycle, state, q)?,
        bound_violation,
    })
}
