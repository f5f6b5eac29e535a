//! Classical phase-space scattering off a moving zero-width barrier (the
//! snowplow) and off a classical battery.
//!
//! Phase-space labels are `(E, t, channel)`: energy `E = v^2/2` and the time
//! `t` at which the free asymptote passes the origin. Channel 1 is the left
//! lead, channel 2 the right one.

use std::f64::consts::PI;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::quadrature::GaussRule;
use crate::transport::{fermi_weight, ThermalState};

/// Barrier of height `height` at rest at `-speed * half_window`, moving at
/// `speed` during `[-half_window, half_window]` and at rest afterwards.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PlowSpec {
    pub height: f64,
    pub speed: f64,
    pub half_window: f64,
}

impl PlowSpec {
    pub fn validate(&self) -> Result<()> {
        if !(self.height > 0.0 && self.height.is_finite()) {
            return Err(Error::InvalidSpec("plow height must be positive".into()));
        }
        if !(self.half_window > 0.0 && self.half_window.is_finite()) {
            return Err(Error::InvalidSpec("plow window must be positive".into()));
        }
        if !(self.speed.is_finite() && self.height > 0.5 * self.speed * self.speed) {
            return Err(Error::InvalidSpec("plow needs height > speed^2 / 2".into()));
        }
        Ok(())
    }

    pub fn position(&self, s: f64) -> f64 {
        self.speed * s.clamp(-self.half_window, self.half_window)
    }

    /// `(start, end, offset, velocity)` with position `offset + velocity * s`.
    fn segments(&self) -> [(f64, f64, f64, f64); 3] {
        let (v0, w) = (self.speed, self.half_window);
        [
            (f64::NEG_INFINITY, -w, -v0 * w, 0.0),
            (-w, w, 0.0, v0),
            (w, f64::INFINITY, v0 * w, 0.0),
        ]
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PhaseSpacePoint {
    pub energy: f64,
    pub time: f64,
    /// 1 (left) or 2 (right).
    pub channel: u8,
}

impl PhaseSpacePoint {
    pub fn new(energy: f64, time: f64, channel: u8) -> Self {
        Self { energy, time, channel }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum CollisionKind {
    Pass,
    Reflect,
}

/// One encounter with the barrier.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ClassicalEvent {
    pub time: f64,
    pub position: f64,
    pub velocity_in: f64,
    pub velocity_out: f64,
    pub kind: CollisionKind,
    /// 0 before the motion, 1 during, 2 after.
    pub segment: u8,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScatterResult {
    pub outgoing: PhaseSpacePoint,
    /// `E' - E`.
    pub energy_shift: f64,
    /// `t' - t`.
    pub time_delay: f64,
    pub trapped: bool,
}

pub const MAX_EVENTS: usize = 1_000_000;

fn speed(energy: f64) -> f64 {
    (2.0 * energy).sqrt()
}

/// Full event history of a trajectory, plus the outgoing data.
pub fn trajectory(spec: &PlowSpec, p: PhaseSpacePoint) -> Result<(Vec<ClassicalEvent>, ScatterResult)> {
    if !(p.energy > 0.0) || !(p.channel == 1 || p.channel == 2) {
        return Err(Error::InvalidSpec(format!("invalid phase-space point {p:?}")));
    }
    let w = speed(p.energy);
    // Free motion x(s) = x0 + v (s - s0); `side` is the sign of x - x_plow.
    let (mut v, mut side) = if p.channel == 1 { (w, -1.0) } else { (-w, 1.0) };
    let (mut x0, mut s0) = (0.0, p.time);
    let mut now = f64::NEG_INFINITY;
    let mut events = Vec::new();
    let segments = spec.segments();
    loop {
        let mut next: Option<(f64, usize)> = None;
        for (idx, &(lo, hi, offset, u)) in segments.iter().enumerate() {
            let closing = v - u;
            if closing == 0.0 || side * closing >= 0.0 {
                continue;
            }
            let s = (offset - x0 + v * s0) / closing;
            if s < lo || s > hi || s <= now {
                continue;
            }
            if next.is_none_or(|(best, _)| s < best) {
                next = Some((s, idx));
            }
        }
        let Some((s, idx)) = next else { break };
        if events.len() >= MAX_EVENTS {
            let outgoing = PhaseSpacePoint::new(0.5 * v * v, f64::NAN, if v > 0.0 { 2 } else { 1 });
            return Ok((
                events,
                ScatterResult {
                    outgoing,
                    energy_shift: f64::NAN,
                    time_delay: f64::NAN,
                    trapped: true,
                },
            ));
        }
        let u = segments[idx].3;
        let x = x0 + v * (s - s0);
        let relative = v - u;
        let (kind, v_out) = if 0.5 * relative * relative > spec.height {
            side = -side;
            (CollisionKind::Pass, v)
        } else {
            (CollisionKind::Reflect, 2.0 * u - v)
        };
        events.push(ClassicalEvent {
            time: s,
            position: x,
            velocity_in: v,
            velocity_out: v_out,
            kind,
            segment: idx as u8,
        });
        v = v_out;
        x0 = x;
        s0 = s;
        now = s;
    }
    let result = if v == 0.0 {
        ScatterResult {
            outgoing: PhaseSpacePoint::new(0.0, f64::NAN, 1),
            energy_shift: -p.energy,
            time_delay: f64::NAN,
            trapped: true,
        }
    } else {
        let t_out = s0 - x0 / v;
        let e_out = 0.5 * v * v;
        ScatterResult {
            outgoing: PhaseSpacePoint::new(e_out, t_out, if v > 0.0 { 2 } else { 1 }),
            energy_shift: e_out - p.energy,
            time_delay: t_out - p.time,
            trapped: false,
        }
    };
    Ok((events, result))
}

/// Outgoing label of the trajectory with incoming label `p`.
pub fn classical_scatter(spec: &PlowSpec, p: PhaseSpacePoint) -> Result<ScatterResult> {
    trajectory(spec, p).map(|(_, r)| r)
}

/// `(E, t, j) -> (E, -t, 3 - j)`; the plow path is odd in time, so this
/// reversal of space and time maps trajectories to trajectories.
pub fn reverse(p: PhaseSpacePoint) -> PhaseSpacePoint {
    PhaseSpacePoint::new(p.energy, -p.time, 3 - p.channel)
}

/// Incoming label of the trajectory with outgoing label `out`, with the collision pattern.
pub fn preimage(spec: &PlowSpec, out: PhaseSpacePoint) -> Result<(Option<PhaseSpacePoint>, Vec<(CollisionKind, u8)>)> {
    let (events, r) = trajectory(spec, reverse(out))?;
    let signature = events.iter().rev().map(|e| (e.kind, 2 - e.segment)).collect();
    Ok(((!r.trapped).then(|| reverse(r.outgoing)), signature))
}

/// Classification of an incoming label by the critical-energy curves.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Partition {
    pub incoming: u8,
    pub outgoing: u8,
    pub transmitted: bool,
}

/// Critical energy for transmission and the `|t|` beyond which it applies
/// to a static barrier.
pub fn critical_energy(spec: &PlowSpec, energy: f64, time: f64, channel: u8) -> (f64, f64) {
    let (v0, w) = (spec.speed, spec.half_window);
    let root = (2.0 * spec.height).sqrt();
    let (switch, moving) = if channel == 1 {
        (w - v0 * w / speed(energy), 0.5 * (root + v0).powi(2))
    } else {
        (w + v0 * w / speed(energy), 0.5 * (root - v0).powi(2))
    };
    let critical = if time.abs() > switch { spec.height } else { moving };
    (critical, switch)
}

pub fn snowplow_partition(spec: &PlowSpec, p: PhaseSpacePoint) -> Partition {
    let (critical, _) = critical_energy(spec, p.energy, p.time, p.channel);
    let transmitted = p.energy > critical;
    Partition {
        incoming: p.channel,
        outgoing: if transmitted { 3 - p.channel } else { p.channel },
        transmitted,
    }
}

/// Distance of a label from the partition curves, in energy and in `|t|`.
pub fn partition_margin(spec: &PlowSpec, p: PhaseSpacePoint) -> f64 {
    let (critical, switch) = critical_energy(spec, p.energy, p.time, p.channel);
    let other = if p.time.abs() > switch {
        critical_energy(spec, p.energy, 0.0, p.channel).0
    } else {
        spec.height
    };
    let to_energy = (p.energy - critical).abs().min((p.energy - other).abs());
    to_energy.min((p.time.abs() - switch).abs())
}

/// Charge into one channel, by direct counting and from the energy shift.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ClassicalCharge {
    pub channel: u8,
    pub direct: f64,
    pub formula: f64,
    pub difference: f64,
}

/// Energy half-width around the Fermi energy that contains every preimage shift.
fn shift_bound(spec: &PlowSpec, mu: f64) -> f64 {
    let v0 = spec.speed.abs();
    8.0 * v0 * (speed(mu) + 2.0 * v0) + 1e-9
}

/// Occupation per unit phase-space area of a preimage; threshold
/// occupancy for trapped ones.
fn density(pre: Option<PhaseSpacePoint>, state: &ThermalState) -> f64 {
    let e = pre.map_or(0.0, |p| p.energy.max(0.0));
    fermi_weight(e, state).rho / (2.0 * PI)
}

/// `int dE' [1(E_pre < mu) - 1(E' < mu)]` over `mu +- delta` at T = 0.
fn occupied_excess(spec: &PlowSpec, mu: f64, delta: f64, t_out: f64, channel: u8) -> Result<f64> {
    let inside = |e: f64| -> Result<bool> {
        let (pre, _) = preimage(spec, PhaseSpacePoint::new(e, t_out, channel))?;
        Ok(pre.map_or(true, |p| p.energy < mu))
    };
    let scan = 400;
    let lo = (mu - delta).max(1e-12);
    let hi = mu + delta;
    let step = (hi - lo) / scan as f64;
    let mut measure = 0.0;
    let mut prev_e = lo;
    let mut prev_in = inside(lo)?;
    for k in 1..=scan {
        let e = lo + step * k as f64;
        let now_in = inside(e)?;
        if now_in == prev_in {
            if now_in {
                measure += e - prev_e;
            }
        } else {
            let (mut a, mut b) = (prev_e, e);
            for _ in 0..80 {
                let m = 0.5 * (a + b);
                if inside(m)? == prev_in {
                    a = m;
                } else {
                    b = m;
                }
                if b - a < 1e-14 * mu {
                    break;
                }
            }
            let cut = 0.5 * (a + b);
            measure += if prev_in { cut - prev_e } else { e - cut };
        }
        prev_e = e;
        prev_in = now_in;
    }
    Ok(measure - (mu - lo))
}

/// Classical pumped charge over outgoing times in `window`.
///
/// `direct` counts outgoing occupation against incoming occupation using
/// preimages; `formula` integrates `-g'(E) E_d(E, t, j)` with `g = rho/2pi`.
pub fn classical_bpt_charge(spec: &PlowSpec, state: &ThermalState, window: (f64, f64), channel: u8, time_points: usize) -> Result<ClassicalCharge> {
    spec.validate()?;
    state.validate()?;
    let (a, b) = window;
    let h = (b - a) / time_points as f64;
    let times: Vec<f64> = (0..time_points).map(|i| a + (i as f64 + 0.5) * h).collect();
    let delta = shift_bound(spec, state.mu);
    let shift_at = |e: f64, t: f64| -> Result<f64> {
        let (pre, _) = preimage(spec, PhaseSpacePoint::new(e, t, channel))?;
        Ok(pre.map_or(e, |p| e - p.energy))
    };
    let rows: Vec<(f64, f64)> = times
        .par_iter()
        .map(|&t| -> Result<(f64, f64)> {
            if state.is_zero() {
                let direct = occupied_excess(spec, state.mu, delta, t, channel)? / (2.0 * PI);
                let formula = shift_at(state.mu, t)? / (2.0 * PI);
                Ok((direct, formula))
            } else {
                let spread = 40.0 * state.temperature + delta;
                let lo = (state.mu - spread).max(1e-9);
                let nodes = GaussRule::new(16).composite(lo, state.mu + spread, 64);
                let mut direct = 0.0;
                let mut formula = 0.0;
                for (e, w) in nodes {
                    let (pre, _) = preimage(spec, PhaseSpacePoint::new(e, t, channel))?;
                    direct += w * (density(pre, state) - fermi_weight(e, state).rho / (2.0 * PI));
                    let shift = pre.map_or(e, |p| e - p.energy);
                    formula -= w * fermi_weight(e, state).d1 / (2.0 * PI) * shift;
                }
                Ok((direct, formula))
            }
        })
        .collect::<Result<_>>()?;
    let direct = h * rows.iter().map(|r| r.0).sum::<f64>();
    let formula = h * rows.iter().map(|r| r.1).sum::<f64>();
    Ok(ClassicalCharge {
        channel,
        direct,
        formula,
        difference: (direct - formula).abs(),
    })
}

/// Rectangle of outgoing labels in one channel.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Region {
    pub channel: u8,
    pub energy: (f64, f64),
    pub time: (f64, f64),
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct LiouvilleReport {
    /// `max |E_d' + dT_d/dt|`.
    pub residual: f64,
    /// `max(|E_d'|, |dT_d/dt|)`.
    pub scale: f64,
    /// `max |det d(E, t)/d(E', t') - 1|`.
    pub jacobian_error: f64,
}

/// Checks area preservation of the inverse map on a grid over `region`.
///
/// Refuses regions in which the collision pattern changes, since the map
/// is discontinuous across partition curves.
pub fn liouville_residual(spec: &PlowSpec, region: Region, grid: usize) -> Result<LiouvilleReport> {
    spec.validate()?;
    let (e0, e1) = region.energy;
    let (t0, t1) = region.time;
    let he = 1e-6 * e1;
    let ht = 1e-6 * spec.half_window;
    let signature = preimage(spec, PhaseSpacePoint::new(e0, t0, region.channel))?.1;
    let pre = |e: f64, t: f64| -> Result<(f64, f64)> {
        let (p, sig) = preimage(spec, PhaseSpacePoint::new(e, t, region.channel))?;
        match p {
            Some(p) if sig == signature => Ok((p.energy, p.time)),
            _ => Err(Error::RegionTouchesDiscontinuity),
        }
    };
    let n = grid.max(2);
    let mut report = LiouvilleReport {
        residual: 0.0,
        scale: 0.0,
        jacobian_error: 0.0,
    };
    for i in 0..=n {
        for k in 0..=n {
            let e = e0 + (e1 - e0) * i as f64 / n as f64;
            let t = t0 + (t1 - t0) * k as f64 / n as f64;
            let (ep, tp) = pre(e + he, t)?;
            let (em, tm) = pre(e - he, t)?;
            let (ef, tf) = pre(e, t + ht)?;
            let (eb, tb) = pre(e, t - ht)?;
            // Derivatives of the preimage (E, t) w.r.t. (E', t').
            let de_de = (ep - em) / (2.0 * he);
            let dt_de = (tp - tm) / (2.0 * he);
            let de_dt = (ef - eb) / (2.0 * ht);
            let dt_dt = (tf - tb) / (2.0 * ht);
            // E_d = E' - E and T_d = t' - t.
            let shift_prime = 1.0 - de_de;
            let delay_dot = 1.0 - dt_dt;
            report.residual = report.residual.max((shift_prime + delay_dot).abs());
            report.scale = report.scale.max(shift_prime.abs().max(delay_dot.abs()));
            let det = de_de * dt_dt - de_dt * dt_de;
            report.jacobian_error = report.jacobian_error.max((det - 1.0).abs());
        }
    }
    Ok(report)
}

/// Sampled partition labels on an `(E, t)` grid, for plotting.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PartitionSample {
    pub energy: f64,
    pub time: f64,
    pub incoming: u8,
    pub outgoing: u8,
    pub simulated_outgoing: u8,
}

pub fn partition_table(spec: &PlowSpec, energy: (f64, f64), time: (f64, f64), points: usize) -> Result<Vec<PartitionSample>> {
    spec.validate()?;
    let n = points.max(2);
    let mut out = Vec::with_capacity(2 * n * n);
    for channel in [1u8, 2] {
        for i in 0..n {
            for k in 0..n {
                let e = energy.0 + (energy.1 - energy.0) * (i as f64 + 0.5) / n as f64;
                let t = time.0 + (time.1 - time.0) * (k as f64 + 0.5) / n as f64;
                let p = PhaseSpacePoint::new(e, t, channel);
                let analytic = snowplow_partition(spec, p);
                let simulated = classical_scatter(spec, p)?;
                out.push(PartitionSample {
                    energy: e,
                    time: t,
                    incoming: channel,
                    outgoing: analytic.outgoing,
                    simulated_outgoing: simulated.outgoing.channel,
                });
            }
        }
    }
    Ok(out)
}

/// Classical battery: `h = (p - A)^2 / 2` with `A(x, t) = t phi'(x)` and
/// `phi` rising smoothly from 0 to `drop` across `[0, 1]`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct BatteryReport {
    pub drop: f64,
    /// Energy gained crossing left to right.
    pub energy_shift: f64,
    /// `-drop`.
    pub expected: f64,
    /// Largest change of `(E, t)` over the frozen maps sampled.
    pub frozen_deviation: f64,
}

/// `(phi'(x), phi''(x))` for `phi = drop * (35x^4 - 84x^5 + 70x^6 - 20x^7)` on `[0, 1]`.
fn battery_profile(drop: f64, x: f64) -> (f64, f64) {
    if !(0.0..=1.0).contains(&x) {
        return (0.0, 0.0);
    }
    let x3 = x * x * x;
    let d1 = 140.0 * x3 - 420.0 * x3 * x + 420.0 * x3 * x * x - 140.0 * x3 * x3;
    let d2 = 420.0 * x * x - 1680.0 * x3 + 2100.0 * x3 * x - 840.0 * x3 * x * x;
    (drop * d1, drop * d2)
}

/// Integrates Hamilton's equations from `x = -1` to `x = 2` with RK4.
/// `frozen` fixes the time argument of the gauge field.
fn battery_crossing(drop: f64, energy: f64, crossing_time: f64, frozen: Option<f64>) -> (f64, f64) {
    let v_in = speed(energy);
    let (x_start, x_end) = (-1.0, 2.0);
    let field = |x: f64, s: f64| {
        let clock = frozen.unwrap_or(s);
        let (d1, d2) = battery_profile(drop, x);
        (clock * d1, clock * d2)
    };
    let rhs = |x: f64, p: f64, s: f64| {
        let (a, da) = field(x, s);
        (p - a, (p - a) * da)
    };
    let mut s = crossing_time + x_start / v_in;
    let (mut x, mut p) = (x_start, v_in);
    let dt = 2e-4 / v_in.max(1e-3);
    while x < x_end {
        let (k1x, k1p) = rhs(x, p, s);
        let (k2x, k2p) = rhs(x + 0.5 * dt * k1x, p + 0.5 * dt * k1p, s + 0.5 * dt);
        let (k3x, k3p) = rhs(x + 0.5 * dt * k2x, p + 0.5 * dt * k2p, s + 0.5 * dt);
        let (k4x, k4p) = rhs(x + dt * k3x, p + dt * k3p, s + dt);
        x += dt / 6.0 * (k1x + 2.0 * k2x + 2.0 * k3x + k4x);
        p += dt / 6.0 * (k1p + 2.0 * k2p + 2.0 * k3p + k4p);
        s += dt;
    }
    // Back out the free asymptote in the right lead.
    let t_out = s - x / p;
    (0.5 * p * p, t_out)
}

/// Energy shift of a particle crossing the battery, and the frozen maps for comparison.
pub fn classical_battery_demo(drop: f64, crossing_time: f64) -> Result<BatteryReport> {
    if !drop.is_finite() || !crossing_time.is_finite() {
        return Err(Error::InvalidSpec("battery parameters must be finite".into()));
    }
    let energy = 1.0;
    if drop >= energy {
        return Err(Error::InvalidSpec("potential drop must stay below the particle energy".into()));
    }
    let (e_out, _) = battery_crossing(drop, energy, crossing_time, None);
    let mut frozen_deviation: f64 = 0.0;
    for snapshot in [-2.0, -0.5, 0.0, 0.7, 3.0] {
        let (e, t) = battery_crossing(drop, energy, crossing_time, Some(snapshot));
        frozen_deviation = frozen_deviation.max((e - energy).abs()).max((t - crossing_time).abs());
    }
    Ok(BatteryReport {
        drop,
        energy_shift: e_out - energy,
        expected: -drop,
        frozen_deviation,
    })
}
