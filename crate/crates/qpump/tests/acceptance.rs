//! One PASS/FAIL line per acceptance criterion. Runs without the libtest
//! harness so the lines always reach stdout.

use std::f64::consts::PI;
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::time::{Duration, Instant};

use qpump::classical::*;
use qpump::counting::*;
use qpump::geometry::*;
use qpump::linalg::{cis, diag};
use qpump::models::bicycle::reflectionless_points;
use qpump::models::*;
use qpump::quadrature::{time_grid, QuadratureSpec};
use qpump::smatrix::*;
use qpump::transport::*;

type Check = fn() -> Result<String, String>;

fn ensure(ok: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if ok {
        Ok(())
    } else {
        Err(msg())
    }
}

fn within(elapsed: Duration, limit_secs: f64) -> Result<(), String> {
    ensure(elapsed.as_secs_f64() < limit_secs, || format!("took {elapsed:?}, limit {limit_secs} s"))
}

fn cold(mu: f64) -> ThermalState {
    ThermalState::zero_temperature(mu)
}

fn linear(rate: f64) -> Drive {
    Drive::Linear { offset: 0.0, rate }
}

fn periodic() -> Timing {
    Timing::Periodic { period: 1.0 }
}

fn err(e: qpump::Error) -> String {
    e.to_string()
}

fn uturn_quantization() -> Result<String, String> {
    let start = Instant::now();
    let cycle = make_pump(&ModelSpec::Uturn {
        length: 1.0,
        flux: linear(2.0 * PI),
        timing: periodic(),
        dispersion: Dispersion::default(),
    })
    .map_err(err)?;
    let q = QuadratureSpec::default();
    let mut worst: f64 = 0.0;
    for (j, expected, winding) in [(0, -1.0, 1), (1, 1.0, -1)] {
        let charge = cycle_charge(cycle.as_ref(), j, &cold(1.0), &q).map_err(err)?;
        worst = worst.max((charge - expected).abs());
        let phases: Vec<_> = time_grid(periodic(), q.time_points)
            .unwrap()
            .into_iter()
            .map(|(t, _)| cycle.evaluate(1.0, t)[(j, j)])
            .collect();
        let w = winding_number(&phases).map_err(err)?.winding;
        ensure(w == winding, || format!("channel {j} winding {w}"))?;
    }
    ensure(worst < 1e-6, || format!("charge error {worst:e}"))?;
    within(start.elapsed(), 1.0)?;
    Ok(format!("max |Q -/+ 1| = {worst:.1e}, windings +1/-1, {:?}", start.elapsed()))
}

fn closed_form_currents() -> Result<String, String> {
    let q = QuadratureSpec::default();
    let kf = Dispersion::default().wavenumber(1.0);
    let (theta, rate) = (0.6, 0.05);
    let snowplow = make_pump(&ModelSpec::Snowplow {
        theta,
        alpha: 0.2,
        phi: 0.4,
        gamma: 0.1,
        xi: linear(rate),
        timing: periodic(),
        dispersion: Dispersion::default(),
    })
    .map_err(err)?;
    let alpha_dot = 2.0 * kf * rate;
    let battery = make_pump(&ModelSpec::Battery {
        theta,
        alpha: 0.3,
        gamma: 0.1,
        phase: linear(0.7),
        timing: periodic(),
    })
    .map_err(err)?;
    let sink = make_pump(&ModelSpec::Sink {
        theta,
        alpha: 0.0,
        phi: 0.0,
        xi: linear(rate),
        timing: periodic(),
        dispersion: Dispersion::default(),
    })
    .map_err(err)?;
    let snow = theta.cos().powi(2) * alpha_dot / (2.0 * PI);
    let batt = theta.sin().powi(2) * 0.7 / (2.0 * PI);
    let sunk = -alpha_dot / (2.0 * PI);
    let cases = [(&snowplow, [-snow, snow]), (&battery, [batt, -batt]), (&sink, [sunk, sunk])];
    let mut worst: f64 = 0.0;
    for (cycle, expected) in cases {
        for t in [0.0, 0.3, 0.77] {
            let currents = bpt_currents(cycle.as_ref(), t, &cold(1.0), &q).map_err(err)?;
            for (got, want) in currents.iter().zip(expected) {
                worst = worst.max((got - want).abs());
            }
        }
    }
    ensure(worst < 1e-8, || format!("max deviation {worst:e}"))?;
    Ok(format!("max deviation {worst:.1e}"))
}

fn bicycle() -> Result<String, String> {
    let start = Instant::now();
    let q = QuadratureSpec {
        time_points: 4096,
        rel_step_time: 1e-8,
        ..Default::default()
    };
    let mut report = Vec::new();
    for n in [1u32, 2] {
        let spec = BicycleSpec {
            length: n as f64,
            ..Default::default()
        };
        let cycle = make_pump(&ModelSpec::Bicycle(spec)).map_err(err)?;
        let charge = cycle_charge(cycle.as_ref(), 0, &cold(1.0), &q).map_err(err)?;
        let n = n as f64;
        ensure((charge.abs() - n).abs() < 0.05 * n, || format!("L={n}: |Q| = {charge}"))?;
        let points = reflectionless_points(&spec, 1.0, 20, 4000, 1e-6).map_err(err)?;
        ensure(points.len() >= n as usize, || format!("L={n}: {} reflectionless points", points.len()))?;
        report.push(format!("L={n}: Q={charge:.5}, {} zeros", points.len()));
    }
    within(start.elapsed(), 30.0)?;
    Ok(format!("{}, {:?}", report.join("; "), start.elapsed()))
}

fn birman_krein() -> Result<String, String> {
    let q = QuadratureSpec {
        richardson: true,
        ..Default::default()
    };
    let mut worst: f64 = 0.0;
    for n in 2..5 {
        for seed in 0..20 {
            let winding = (0..n).map(|i| ((seed + i as u64) % 3) as i32 - 1).collect();
            let cycle = RandomCycle::new(&RandomCycleSpec {
                channels: n,
                seed: 1000 * n as u64 + seed,
                winding,
                ..Default::default()
            });
            worst = worst.max(birman_krein_residual(&cycle, &cold(1.0), &q).map_err(err)?);
        }
    }
    ensure(worst < 1e-8, || format!("max residual {worst:e}"))?;
    Ok(format!("60 cycles, max residual {worst:.1e}"))
}

fn omega_identity_check() -> Result<String, String> {
    let q = QuadratureSpec::default();
    let coarse = QuadratureSpec {
        rel_step_energy: 1e-3,
        rel_step_time: 1e-3,
        hermiticity_tol: 1e-3,
        ..Default::default()
    };
    let fine = coarse.halved_steps();
    let mut worst: f64 = 0.0;
    let mut ratios = Vec::new();
    for seed in 0..6 {
        let cycle = RandomCycle::new(&RandomCycleSpec {
            channels: 2 + (seed % 2) as usize,
            seed: 90 + seed,
            ..Default::default()
        });
        for t in [0.17, 0.6] {
            worst = worst.max(omega_identity(&cycle, 1.2, t, &q).map_err(err)?.residual);
            let a = omega_identity(&cycle, 1.2, t, &coarse).map_err(err)?.residual;
            let b = omega_identity(&cycle, 1.2, t, &fine).map_err(err)?.residual;
            ensure(a > 0.0 && b > 0.0, || format!("degenerate residuals {a:e}, {b:e}"))?;
            ratios.push(a / b);
        }
    }
    let (lo, hi) = ratios.iter().fold((f64::MAX, f64::MIN), |(l, h), &r| (l.min(r), h.max(r)));
    ensure(worst < 1e-6, || format!("residual {worst:e}"))?;
    ensure(lo >= 3.5 && hi <= 4.5, || format!("halving ratios in [{lo:.2}, {hi:.2}]"))?;
    Ok(format!("max residual {worst:.1e}, halving ratios in [{lo:.2}, {hi:.2}]"))
}

fn dissipation_bound() -> Result<String, String> {
    let q = QuadratureSpec::default();
    let mut slack = f64::MAX;
    for seed in 0..50u64 {
        let n = 2 + (seed % 3) as usize;
        let cycle = RandomCycle::new(&RandomCycleSpec {
            channels: n,
            seed: 500 + seed,
            ..Default::default()
        });
        for t in [0.05, 0.4, 0.85] {
            for j in 0..n {
                let current = bpt_current(&cycle, j, t, &cold(1.0), &q).map_err(err)?;
                let d = dissipation_current(&cycle, j, t, &cold(1.0), &q).map_err(err)?;
                slack = slack.min(d - PI * current * current);
            }
        }
    }
    ensure(slack >= -1e-10, || format!("bound violated by {slack:e}"))?;
    let optimal = make_pump(&ModelSpec::Optimal {
        theta: 0.7,
        phase: Drive::Harmonic { offset: 0.0, amplitude: 1.0, period: 1.0, phase: 0.0 },
        mu: 1.0,
        timing: periodic(),
        dispersion: Dispersion::default(),
    })
    .map_err(err)?;
    let mut gap: f64 = 0.0;
    for t in [0.0, 0.13, 0.5, 0.71] {
        for j in 0..2 {
            let current = bpt_current(optimal.as_ref(), j, t, &cold(1.0), &q).map_err(err)?;
            let d = dissipation_current(optimal.as_ref(), j, t, &cold(1.0), &q).map_err(err)?;
            gap = gap.max((d - PI * current * current).abs());
        }
    }
    ensure(gap < 1e-8, || format!("optimal gap {gap:e}"))?;
    Ok(format!("min slack {slack:.1e}, optimal gap {gap:.1e}"))
}

fn stokes_and_cylinder() -> Result<String, String> {
    let q = QuadratureSpec::default();
    let mut worst: f64 = 0.0;
    for seed in 0..10 {
        let cycle = RandomCycle::new(&RandomCycleSpec {
            seed: 70 + seed,
            strength: 0.8,
            ..Default::default()
        });
        let patch_cycle = cycle.clone();
        let patch = SurfacePatch::new(move |u, v| patch_cycle.with_loop_scale(u).at_angle(1.0, v));
        let surface = charge_via_stokes(&patch, 0, 1e-6).map_err(err)?;
        let line = cycle_line_charge(&cycle, 0, 1.0, &q).map_err(err)?;
        worst = worst.max((surface.charge - line).abs());
    }
    ensure(worst < 1e-6, || format!("Stokes mismatch {worst:e}"))?;
    let q = QuadratureSpec {
        time_points: 128,
        ..Default::default()
    };
    let mut cylinder_gap: f64 = 0.0;
    for seed in [2, 5, 8] {
        let cycle = RandomCycle::new(&RandomCycleSpec {
            seed,
            frozen_threshold: true,
            ..Default::default()
        });
        let direct = cycle_charge(&cycle, 0, &cold(1.0), &q).map_err(err)?;
        let cylinder = cylinder_charge(&cycle, 0, 1.0, &q).map_err(err)?;
        cylinder_gap = cylinder_gap.max((direct - cylinder).abs());
    }
    ensure(cylinder_gap < 1e-4, || format!("cylinder mismatch {cylinder_gap:e}"))?;
    Ok(format!("Stokes vs line {worst:.1e}, cylinder vs direct {cylinder_gap:.1e}"))
}

fn entropy_noise_constants() -> Result<String, String> {
    let entropy = h_integral(FlowKind::Entropy, 0.01);
    let noise = h_integral(FlowKind::Noise, 0.01);
    ensure((entropy - 0.5).abs() < 1e-10 && (noise - 1.0 / 6.0).abs() < 1e-10, || format!("h integrals {entropy}, {noise}"))?;
    let state = ThermalState::new(1.0, 0.05).map_err(err)?;
    let beta = 1.0 / state.temperature;
    let q = QuadratureSpec::default();
    let mut worst: f64 = 0.0;
    for seed in 0..5 {
        let cycle = RandomCycle::new(&RandomCycleSpec {
            seed: 30 + seed,
            ..Default::default()
        });
        for t in [0.1, 0.45, 0.9] {
            let off = energy_shift(&cycle, 1.0, t, &q).map_err(err)?[(0, 1)].norm_sqr();
            for (kind, k) in [(FlowKind::Entropy, 2.0), (FlowKind::Noise, 6.0)] {
                for j in 0..2 {
                    let v = entropy_noise_current(&cycle, j, t, &state, &q, kind).map_err(err)?;
                    worst = worst.max((v - beta * off / (2.0 * PI * k)).abs());
                }
            }
        }
    }
    ensure(worst < 1e-10, || format!("current mismatch {worst:e}"))?;
    Ok(format!("h integrals exact to 1e-10, current mismatch {worst:.1e}"))
}

fn bump(height: f64) -> Drive {
    Drive::Bump { height, start: 0.0, end: 1.0 }
}

fn pulse() -> Cycle {
    make_pump(&ModelSpec::CustomTwoChannel {
        theta: bump(0.7),
        alpha: bump(1.3),
        phi: Drive::Linear { offset: 0.2, rate: 3.0 },
        gamma: bump(-0.8),
        shifts: [0.0, 0.0],
        timing: Timing::Pulse { start: 0.0, end: 1.0 },
        dispersion: Dispersion::default(),
    })
    .unwrap()
}

fn noise_consistency() -> Result<String, String> {
    let state = ThermalState::new(1.0, 0.05).map_err(err)?;
    let q = QuadratureSpec::default();
    let mut current_gap: f64 = 0.0;
    for seed in 0..3 {
        let cycle = RandomCycle::new(&RandomCycleSpec {
            seed: 40 + seed,
            ..Default::default()
        });
        for j in 0..2 {
            let mut integrated = 0.0;
            for (t, w) in time_grid(periodic(), q.time_points).unwrap() {
                integrated += w * entropy_noise_current(&cycle, j, t, &state, &q, FlowKind::Noise).map_err(err)?;
            }
            let shot = shot_noise_finite_t(&cycle, j, &state, &q).map_err(err)?;
            current_gap = current_gap.max((shot - integrated).abs());
        }
    }
    ensure(current_gap < 1e-10, || format!("shot vs integrated current {current_gap:e}"))?;
    let q = QuadratureSpec {
        time_points: 1024,
        ..Default::default()
    };
    let cycle = pulse();
    let mut rel: f64 = 0.0;
    for temperature in [0.01, 0.05] {
        let state = ThermalState::new(1.0, temperature).map_err(err)?;
        for j in 0..2 {
            let split = jn_noise(cycle.as_ref(), j, &state, &q).map_err(err)? + shot_noise_finite_t(cycle.as_ref(), j, &state, &q).map_err(err)?;
            let direct = symbol_second_cumulant(cycle.as_ref(), j, &state, &q).map_err(err)?;
            rel = rel.max((split / direct - 1.0).abs());
        }
    }
    ensure(rel < 1e-6, || format!("symbol mismatch {rel:e}"))?;
    Ok(format!("shot vs current {current_gap:.1e}, jn+shot vs symbol {rel:.1e} relative"))
}

fn zero_temperature_shot_noise() -> Result<String, String> {
    let start = Instant::now();
    let q = QuadratureSpec::default();
    let (f, g) = (bump(2.0), bump(-1.1));
    let parallel = FnCycle::new(2, Timing::Pulse { start: 0.0, end: 1.0 }, "parallel", move |_, t| {
        diag(&[cis(f.value(t)), cis(g.value(t))])
    });
    let mut silent: f64 = 0.0;
    for j in 0..2 {
        silent = silent.max(shot_noise_zero_t(&parallel, j, 1.0, &q).map_err(err)?.value.abs());
    }
    ensure(silent < 1e-8, || format!("parallel cycle noise {silent:e}"))?;

    let cycle = pulse();
    let mut diagonal: f64 = 0.0;
    for t in [0.2, 0.5, 0.8] {
        let e = energy_shift(cycle.as_ref(), 1.0, t, &q).map_err(err)?;
        let spread = (&e * &e)[(0, 0)].re - e[(0, 0)].re.powi(2);
        let limit = spread / (4.0 * PI * PI);
        let near = zero_t_integrand(cycle.as_ref(), 0, 1.0, t + 5e-5, t - 5e-5);
        diagonal = diagonal.max((near / limit - 1.0).abs());
    }
    ensure(diagonal < 1e-6, || format!("diagonal limit mismatch {diagonal:e}"))?;

    let base = shot_noise_zero_t(cycle.as_ref(), 0, 1.0, &q).map_err(err)?.value;
    within(start.elapsed(), 60.0)?;
    let narrow = QuadratureSpec {
        diag_band: 0.5 * q.diag_band,
        ..q.clone()
    };
    let doubled = QuadratureSpec {
        noise_points: 2 * q.noise_points,
        ..q.clone()
    };
    let band = (shot_noise_zero_t(cycle.as_ref(), 0, 1.0, &narrow).map_err(err)?.value / base - 1.0).abs();
    let grid = (shot_noise_zero_t(cycle.as_ref(), 0, 1.0, &doubled).map_err(err)?.value / base - 1.0).abs();
    ensure(band < 1e-6 && grid < 1e-6, || format!("band halving {band:e}, grid doubling {grid:e}"))?;
    Ok(format!(
        "parallel {silent:.1e}, diagonal {diagonal:.1e}, value {base:.7}, band {band:.1e}, grid {grid:.1e}"
    ))
}

fn classical_snowplow() -> Result<String, String> {
    let spec = PlowSpec {
        height: 50.0,
        speed: 1.0,
        half_window: 1.0,
    };
    let mut rng_state = 0x9e37_79b9_7f4a_7c15u64;
    let mut uniform = || {
        rng_state ^= rng_state << 13;
        rng_state ^= rng_state >> 7;
        rng_state ^= rng_state << 17;
        (rng_state >> 11) as f64 / (1u64 << 53) as f64
    };
    let mut disagreements = 0;
    for _ in 0..10_000 {
        let p = PhaseSpacePoint::new(40.0 + 25.0 * uniform(), -3.0 + 6.0 * uniform(), if uniform() < 0.5 { 1 } else { 2 });
        if partition_margin(&spec, p) < 1e-6 {
            continue;
        }
        let simulated = classical_scatter(&spec, p).map_err(err)?.outgoing.channel;
        if snowplow_partition(&spec, p).outgoing != simulated {
            disagreements += 1;
        }
    }
    ensure(disagreements == 0, || format!("{disagreements} partition disagreements"))?;

    let mu: f64 = 1.0;
    let slow = PlowSpec {
        speed: 0.01 * (2.0 * mu).sqrt(),
        ..spec
    };
    let mut rel: f64 = 0.0;
    for channel in [1, 2] {
        let c = classical_bpt_charge(&slow, &cold(mu), (-3.0, 3.0), channel, 2000).map_err(err)?;
        rel = rel.max(c.difference / c.direct.abs());
    }
    ensure(rel < 0.05, || format!("direct vs formula {rel:.3}"))?;

    let battery = classical_battery_demo(0.1, 0.0).map_err(err)?;
    let shift = (battery.energy_shift + 0.1).abs();
    ensure(shift < 1e-8 && battery.frozen_deviation < 1e-8, || format!("battery {battery:?}"))?;
    Ok(format!(
        "0 disagreements, charge methods within {:.1}%, battery shift error {shift:.1e}",
        100.0 * rel
    ))
}

fn galilean() -> Result<String, String> {
    let mu = PI * PI / 2.0;
    let kf = Dispersion::quadratic().wavenumber(mu);
    let mut worst: f64 = 0.0;
    for theta in [0.0, 0.4, 0.9, 1.3] {
        let check = galilean_check(theta, mu, 1e-3 * kf).map_err(err)?;
        worst = worst.max(check.residual);
    }
    ensure(worst < 1e-5, || format!("residual {worst:e}"))?;
    Ok(format!("max residual {worst:.1e}"))
}

fn main() {
    let checks: [(&str, Check); 12] = [
        ("U-turn quantization", uturn_quantization),
        ("two-channel closed-form currents", closed_form_currents),
        ("bicycle pump", bicycle),
        ("Birman-Krein sum rule", birman_krein),
        ("curvature identity", omega_identity_check),
        ("dissipation bound", dissipation_bound),
        ("Stokes and cylinder forms", stokes_and_cylinder),
        ("entropy and noise constants", entropy_noise_constants),
        ("noise consistency", noise_consistency),
        ("zero-temperature shot noise", zero_temperature_shot_noise),
        ("classical snowplow", classical_snowplow),
        ("Galilean cross-check", galilean),
    ];
    let mut failed = 0;
    for (i, (name, check)) in checks.iter().enumerate() {
        let outcome = catch_unwind(AssertUnwindSafe(check)).unwrap_or_else(|_| Err("panicked".into()));
        match outcome {
            Ok(detail) => println!("criterion {:>2} PASS  {name}: {detail}", i + 1),
            Err(why) => {
                failed += 1;
                println!("criterion {:>2} FAIL  {name}: {why}", i + 1);
            }
        }
    }
    if failed > 0 {
        std::process::exit(1);
    }
}

