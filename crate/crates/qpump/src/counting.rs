//! Second-order counting statistics at the level of frozen symbols: mean
//! charge, thermal (Johnson-Nyquist) noise and quantum shot noise.

use std::f64::consts::PI;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{identity, max_abs, CMat};
use crate::quadrature::{time_grid, GaussRule, QuadratureSpec};
use crate::smatrix::{checked_eval, energy_shift, PumpCycle, Timing};
use crate::transport::{fermi_weight, thermal_nodes, thermal_window, ThermalState};

fn grid_of(cycle: &dyn PumpCycle, q: &QuadratureSpec) -> Result<Vec<(f64, f64)>> {
    time_grid(cycle.timing(), q.time_points)
        .ok_or_else(|| Error::InvalidSpec("cycle has neither a period nor a pulse window".into()))
}

fn check_channel(cycle: &dyn PumpCycle, j: usize) -> Result<()> {
    if j < cycle.n_channels() {
        Ok(())
    } else {
        Err(Error::InvalidSpec(format!("channel {j} out of range")))
    }
}

/// `-(1/2pi) int int rho'(E) E_jj(E, t) dE dt`, with `E_jj` read off row `j`
/// as `-Im sum_k dS_jk/dt conj(S_jk)`.
pub fn mean_transferred_charge(cycle: &dyn PumpCycle, j: usize, state: &ThermalState, q: &QuadratureSpec) -> Result<f64> {
    check_channel(cycle, j)?;
    let grid = grid_of(cycle, q)?;
    let ht = q.time_step(cycle.timing());
    let tol = q.unitarity_tol;
    let mut total = 0.0;
    for (e, we) in thermal_nodes(state, q) {
        let row_shift = |t: f64| -> Result<f64> {
            let s = checked_eval(cycle, e, t, tol)?;
            let ahead = checked_eval(cycle, e, t + ht, tol)?;
            let behind = checked_eval(cycle, e, t - ht, tol)?;
            let mut acc = 0.0;
            for k in 0..s.ncols() {
                let ds = (ahead[(j, k)] - behind[(j, k)]) / (2.0 * ht);
                acc -= (ds * s[(j, k)].conj()).im;
            }
            Ok(acc)
        };
        let mut inner = 0.0;
        for &(t, wt) in &grid {
            inner += wt * row_shift(t)?;
        }
        total += we * inner;
    }
    Ok(total / (2.0 * PI))
}

/// `(2T/2pi) sum_{k != j} int |S_jk(mu, t)|^2 dt`.
pub fn jn_noise(cycle: &dyn PumpCycle, j: usize, state: &ThermalState, q: &QuadratureSpec) -> Result<f64> {
    check_channel(cycle, j)?;
    if state.is_zero() {
        return Err(Error::ZeroTemperature);
    }
    let grid = grid_of(cycle, q)?;
    let mut acc = 0.0;
    for (t, w) in grid {
        let s = checked_eval(cycle, state.mu, t, q.unitarity_tol)?;
        let off: f64 = (0..s.ncols()).filter(|&k| k != j).map(|k| s[(j, k)].norm_sqr()).sum();
        acc += w * off;
    }
    Ok(2.0 * state.temperature * acc / (2.0 * PI))
}

/// `(beta/12pi) int sum_{k != j} |E_jk(mu, t)|^2 dt`.
pub fn shot_noise_finite_t(cycle: &dyn PumpCycle, j: usize, state: &ThermalState, q: &QuadratureSpec) -> Result<f64> {
    check_channel(cycle, j)?;
    let beta = state.beta().ok_or(Error::ZeroTemperature)?;
    let grid = grid_of(cycle, q)?;
    let mut acc = 0.0;
    for (t, w) in grid {
        let e = energy_shift(cycle, state.mu, t, q)?;
        let off: f64 = (0..e.ncols()).filter(|&k| k != j).map(|k| e[(j, k)].norm_sqr()).sum();
        acc += w * off;
    }
    Ok(beta * acc / (12.0 * PI))
}

/// `S^dagger P_j S - P_j`.
fn symbol(s: &CMat, j: usize) -> CMat {
    let row = s.row(j);
    let mut a = row.adjoint() * row;
    a[(j, j)] -= 1.0;
    a
}

fn trace_square(a: &CMat) -> f64 {
    (a * a).trace().re
}

/// Second cumulant from the symbol `a = S^dagger P_j S - P_j` by quadrature
/// over phase space:
/// `(1/2pi) int int [rho(1-rho) tr a^2 + (rho'^2/2) tr (da/dt)^2] dE dt`.
pub fn symbol_second_cumulant(cycle: &dyn PumpCycle, j: usize, state: &ThermalState, q: &QuadratureSpec) -> Result<f64> {
    check_channel(cycle, j)?;
    if state.is_zero() {
        return Err(Error::ZeroTemperature);
    }
    let (t0, t1) = match cycle.timing() {
        Timing::Pulse { start, end } => (start, end),
        Timing::Periodic { period } => (0.0, period),
        Timing::Open => return Err(Error::NonPulseCycle),
    };
    let (e0, e1) = thermal_window(state, q);
    let rule = GaussRule::new(32);
    let energies = rule.composite(e0, e1, 8);
    let times = rule.composite(t0, t1, 8);
    let ht = q.time_step(cycle.timing());
    let tol = q.unitarity_tol;
    let rows: Vec<f64> = energies
        .par_iter()
        .map(|&(e, we)| -> Result<f64> {
            let f = fermi_weight(e, state);
            let occupancy = f.rho * (1.0 - f.rho);
            let mut acc = 0.0;
            for &(t, wt) in &times {
                let a = symbol(&checked_eval(cycle, e, t, tol)?, j);
                let da = (symbol(&checked_eval(cycle, e, t + ht, tol)?, j)
                    - symbol(&checked_eval(cycle, e, t - ht, tol)?, j))
                    / num_complex::Complex64::new(2.0 * ht, 0.0);
                acc += wt * (occupancy * trace_square(&a) + 0.5 * f.d1 * f.d1 * trace_square(&da));
            }
            Ok(we * acc)
        })
        .collect::<Result<_>>()?;
    Ok(rows.into_iter().sum::<f64>() / (2.0 * PI))
}

/// `[1 - |(S(t) S^dagger(t'))_jj|^2] / (4 pi^2 (t - t')^2)` at the Fermi energy.
pub fn zero_t_integrand(cycle: &dyn PumpCycle, j: usize, mu: f64, t: f64, t_prime: f64) -> f64 {
    let a = cycle.evaluate(mu, t);
    let b = cycle.evaluate(mu, t_prime);
    kernel(&row(&a, j), &row(&b, j), t - t_prime)
}

fn row(s: &CMat, j: usize) -> Vec<num_complex::Complex64> {
    s.row(j).iter().copied().collect()
}

fn kernel(a: &[num_complex::Complex64], b: &[num_complex::Complex64], dt: f64) -> f64 {
    let overlap: num_complex::Complex64 = a.iter().zip(b).map(|(x, y)| x * y.conj()).sum();
    (1.0 - overlap.norm_sqr()) / (4.0 * PI * PI * dt * dt)
}

/// `((E^2)_jj - E_jj^2) / 4pi^2`, the diagonal limit of [`zero_t_integrand`].
pub fn zero_t_diagonal(cycle: &dyn PumpCycle, j: usize, mu: f64, t: f64, q: &QuadratureSpec) -> Result<f64> {
    let e = energy_shift(cycle, mu, t, q)?;
    let d = e[(j, j)].re;
    Ok(((&e * &e)[(j, j)].re - d * d).max(0.0) / (4.0 * PI * PI))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum NoiseMethod {
    FiniteT,
    ZeroT,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct NoiseReport {
    pub channel: usize,
    pub method: NoiseMethod,
    /// Absent at T=0.
    pub jn_noise: Option<f64>,
    pub shot_noise: f64,
    pub grid: usize,
    pub refine: usize,
    /// Node pairs whose integrand was replaced by its diagonal limit.
    pub diagonal_substitutions: usize,
    /// The zero-temperature double integral presumes a large Fermi energy;
    /// no threshold is checked.
    pub large_mu_assumed: bool,
}

/// Pulse window `[a, b]`, after checking that `S` is the identity at and beyond its ends.
fn pulse_window(cycle: &dyn PumpCycle, mu: f64, q: &QuadratureSpec) -> Result<(f64, f64)> {
    let Timing::Pulse { start, end } = cycle.timing() else {
        return Err(Error::NonPulseCycle);
    };
    let width = end - start;
    let n = cycle.n_channels();
    let probes = [start, end, start - 0.5 * width, end + 0.5 * width, start - 3.0 * width, end + 3.0 * width];
    for t in probes {
        let s = checked_eval(cycle, mu, t, q.unitarity_tol)?;
        if max_abs(&(s - identity(n))) > q.unitarity_tol {
            return Err(Error::NonPulseCycle);
        }
    }
    Ok((start, end))
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ZeroTShotNoise {
    pub value: f64,
    pub diagonal_substitutions: usize,
}

/// `(1/4pi^2) int int [1 - |(S(t) S^dagger(t'))_jj|^2] / (t - t')^2 dt dt'` at T=0.
///
/// The window square uses a tensor trapezoid rule whose cells next to the
/// diagonal are subdivided `noise_refine` times; node pairs closer than
/// `diag_band` (relative to the window) take the diagonal limit at their
/// midpoint. Outside the window `S = 1`, which reduces the two cross strips
/// to `2 int g(t) [1/(t - a) + 1/(b - t)] dt` with `g = 1 - |S_jj|^2`.
pub fn shot_noise_zero_t(cycle: &dyn PumpCycle, j: usize, mu: f64, q: &QuadratureSpec) -> Result<ZeroTShotNoise> {
    check_channel(cycle, j)?;
    let (a, b) = pulse_window(cycle, mu, q)?;
    let n = q.noise_points;
    let width = b - a;
    let h = width / n as f64;
    let band = q.diag_band * width;
    let tol = q.unitarity_tol;

    // Rows on the half grid: even indices are nodes, odd ones cell midpoints.
    let half: Vec<f64> = (0..=2 * n).map(|i| a + 0.5 * h * i as f64).collect();
    let rows: Vec<Vec<num_complex::Complex64>> = half
        .par_iter()
        .map(|&t| checked_eval(cycle, mu, t, tol).map(|s| row(&s, j)))
        .collect::<Result<_>>()?;
    let limits: Vec<f64> = half
        .par_iter()
        .map(|&t| zero_t_diagonal(cycle, j, mu, t, q))
        .collect::<Result<_>>()?;

    let node = |i: usize, k: usize| -> (f64, bool) {
        let dt = h * (i as f64 - k as f64);
        if dt.abs() < band {
            (limits[i + k], true)
        } else {
            (kernel(&rows[2 * i], &rows[2 * k], dt), false)
        }
    };

    let refine = q.noise_refine.max(1);
    let cells: Vec<(f64, usize)> = (0..n)
        .into_par_iter()
        .map(|i| -> Result<(f64, usize)> {
            let mut acc = 0.0;
            let mut subs = 0;
            for k in 0..n {
                if i.abs_diff(k) <= 1 && refine > 1 {
                    let (v, s) = refined_cell(cycle, j, mu, q, a + h * i as f64, a + h * k as f64, h, refine, band)?;
                    acc += v;
                    subs += s;
                } else {
                    let mut corner = 0.0;
                    for (p, r) in [(i, k), (i + 1, k), (i, k + 1), (i + 1, k + 1)] {
                        let (v, replaced) = node(p, r);
                        corner += v;
                        subs += replaced as usize;
                    }
                    acc += 0.25 * corner * h * h;
                }
            }
            Ok((acc, subs))
        })
        .collect::<Result<_>>()?;
    let square: f64 = cells.iter().map(|c| c.0).sum();
    let substitutions = cells.iter().map(|c| c.1).sum();

    // Cross strips: the integrand vanishes at both window ends.
    let mut strips = 0.0;
    for i in 1..n {
        let t = half[2 * i];
        let s_jj = rows[2 * i][j];
        let g = 1.0 - s_jj.norm_sqr();
        strips += h * g * (1.0 / (t - a) + 1.0 / (b - t));
    }
    strips *= 2.0 / (4.0 * PI * PI);

    Ok(ZeroTShotNoise {
        value: square + strips,
        diagonal_substitutions: substitutions,
    })
}

#[allow(clippy::too_many_arguments)]
fn refined_cell(
    cycle: &dyn PumpCycle,
    j: usize,
    mu: f64,
    q: &QuadratureSpec,
    t0: f64,
    s0: f64,
    h: f64,
    refine: usize,
    band: f64,
) -> Result<(f64, usize)> {
    let sub = h / refine as f64;
    let tol = q.unitarity_tol;
    let ts: Vec<f64> = (0..=refine).map(|p| t0 + sub * p as f64).collect();
    let ss: Vec<f64> = (0..=refine).map(|p| s0 + sub * p as f64).collect();
    let rows_t = ts
        .iter()
        .map(|&t| checked_eval(cycle, mu, t, tol).map(|s| row(&s, j)))
        .collect::<Result<Vec<_>>>()?;
    let rows_s = ss
        .iter()
        .map(|&t| checked_eval(cycle, mu, t, tol).map(|s| row(&s, j)))
        .collect::<Result<Vec<_>>>()?;
    let mut acc = 0.0;
    let mut subs = 0;
    for p in 0..=refine {
        for r in 0..=refine {
            let w = if p == 0 || p == refine { 0.5 } else { 1.0 } * if r == 0 || r == refine { 0.5 } else { 1.0 };
            let dt = ts[p] - ss[r];
            let v = if dt.abs() < band {
                subs += 1;
                zero_t_diagonal(cycle, j, mu, 0.5 * (ts[p] + ss[r]), q)?
            } else {
                kernel(&rows_t[p], &rows_s[r], dt)
            };
            acc += w * v;
        }
    }
    Ok((acc * sub * sub, subs))
}

/// Noise of channel `j`: thermal plus shot noise at T > 0, the
/// double-integral shot noise at T = 0 (pulse cycles only).
pub fn noise_report(cycle: &dyn PumpCycle, j: usize, state: &ThermalState, q: &QuadratureSpec, zero_t: bool) -> Result<NoiseReport> {
    if zero_t || state.is_zero() {
        let shot = shot_noise_zero_t(cycle, j, state.mu, q)?;
        Ok(NoiseReport {
            channel: j,
            method: NoiseMethod::ZeroT,
            jn_noise: None,
            shot_noise: shot.value,
            grid: q.noise_points,
            refine: q.noise_refine,
            diagonal_substitutions: shot.diagonal_substitutions,
            large_mu_assumed: true,
        })
    } else {
        Ok(NoiseReport {
            channel: j,
            method: NoiseMethod::FiniteT,
            jn_noise: Some(jn_noise(cycle, j, state, q)?),
            shot_noise: shot_noise_finite_t(cycle, j, state, q)?,
            grid: q.time_points,
            refine: 1,
            diagonal_substitutions: 0,
            large_mu_assumed: false,
        })
    }
}
