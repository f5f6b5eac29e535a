//! Fast invariant suite run by `qpump selfcheck`.

use std::f64::consts::PI;

use qpump::classical::{classical_battery_demo, classical_scatter, partition_margin, snowplow_partition, PhaseSpacePoint, PlowSpec};
use qpump::models::{galilean_check, make_pump, Drive, ModelSpec, RandomCycle, RandomCycleSpec};
use qpump::quadrature::QuadratureSpec;
use qpump::smatrix::{omega_identity, Dispersion, Timing};
use qpump::transport::{birman_krein_residual, bpt_current, cycle_charge, dissipation_current, h_integral, FlowKind, ThermalState};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub struct CheckResult {
    pub name: &'static str,
    pub passed: bool,
    pub detail: String,
}

type Outcome = qpump::Result<(bool, String)>;

fn cold() -> ThermalState {
    ThermalState::zero_temperature(1.0)
}

fn random(seed: u64, channels: usize, winding: Vec<i32>) -> RandomCycle {
    RandomCycle::new(&RandomCycleSpec {
        channels,
        seed,
        winding,
        ..Default::default()
    })
}

fn uturn() -> Outcome {
    let cycle = make_pump(&ModelSpec::Uturn {
        length: 1.0,
        flux: Drive::Linear { offset: 0.0, rate: 2.0 * PI },
        timing: Timing::Periodic { period: 1.0 },
        dispersion: Dispersion::default(),
    })?;
    let q = QuadratureSpec::default();
    let left = cycle_charge(cycle.as_ref(), 0, &cold(), &q)?;
    let right = cycle_charge(cycle.as_ref(), 1, &cold(), &q)?;
    let err = (left + 1.0).abs().max((right - 1.0).abs());
    Ok((err < 1e-6, format!("charges {left:.9}, {right:.9}")))
}

fn birman_krein(seed: u64) -> Outcome {
    let q = QuadratureSpec {
        richardson: true,
        ..Default::default()
    };
    let mut worst: f64 = 0.0;
    for n in 2..5 {
        let cycle = random(seed + n as u64, n, vec![1; n]);
        worst = worst.max(birman_krein_residual(&cycle, &cold(), &q)?);
    }
    Ok((worst < 1e-8, format!("residual {worst:.2e}")))
}

fn omega(seed: u64) -> Outcome {
    let q = QuadratureSpec::default();
    let mut worst: f64 = 0.0;
    for k in 0..3 {
        let cycle = random(seed + k, 3, Vec::new());
        worst = worst.max(omega_identity(&cycle, 1.2, 0.3 + 0.2 * k as f64, &q)?.residual);
    }
    Ok((worst < 1e-6, format!("residual {worst:.2e}")))
}

fn dissipation(seed: u64) -> Outcome {
    let q = QuadratureSpec::default();
    let mut slack = f64::MAX;
    for k in 0..5 {
        let n = 2 + (k % 3) as usize;
        let cycle = random(seed + 100 + k, n, Vec::new());
        for j in 0..n {
            let current = bpt_current(&cycle, j, 0.37, &cold(), &q)?;
            slack = slack.min(dissipation_current(&cycle, j, 0.37, &cold(), &q)? - PI * current * current);
        }
    }
    Ok((slack >= -1e-10, format!("min slack {slack:.2e}")))
}

fn h_constants() -> Outcome {
    let e = h_integral(FlowKind::Entropy, 0.01);
    let n = h_integral(FlowKind::Noise, 0.01);
    Ok(((e - 0.5).abs() < 1e-10 && (n - 1.0 / 6.0).abs() < 1e-10, format!("{e}, {n}")))
}

fn partition(seed: u64) -> Outcome {
    let spec = PlowSpec {
        height: 50.0,
        speed: 1.0,
        half_window: 1.0,
    };
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut bad = 0;
    for _ in 0..2000 {
        let p = PhaseSpacePoint::new(rng.random_range(40.0..65.0), rng.random_range(-3.0..3.0), rng.random_range(1..=2));
        if partition_margin(&spec, p) >= 1e-6 && snowplow_partition(&spec, p).outgoing != classical_scatter(&spec, p)?.outgoing.channel {
            bad += 1;
        }
    }
    Ok((bad == 0, format!("{bad} disagreements in 2000")))
}

fn battery() -> Outcome {
    let r = classical_battery_demo(0.1, 0.0)?;
    let err = (r.energy_shift + 0.1).abs();
    Ok((err < 1e-8 && r.frozen_deviation < 1e-8, format!("shift error {err:.2e}")))
}

fn galilean() -> Outcome {
    let mu = PI * PI / 2.0;
    let r = galilean_check(0.5, mu, 1e-3 * PI)?;
    Ok((r.residual < 1e-5, format!("residual {:.2e}", r.residual)))
}

pub fn run(seed: u64) -> Vec<CheckResult> {
    let checks: [(&'static str, Box<dyn Fn() -> Outcome>); 8] = [
        ("uturn-quantization", Box::new(uturn)),
        ("birman-krein", Box::new(move || birman_krein(seed))),
        ("omega-identity", Box::new(move || omega(seed))),
        ("dissipation-bound", Box::new(move || dissipation(seed))),
        ("h-constants", Box::new(h_constants)),
        ("classical-partition", Box::new(move || partition(seed))),
        ("classical-battery", Box::new(battery)),
        ("galilean", Box::new(galilean)),
    ];
    checks
        .into_iter()
        .map(|(name, check)| match check() {
            Ok((passed, detail)) => CheckResult { name, passed, detail },
            Err(e) => CheckResult {
                name,
                passed: false,
                detail: e.to_string(),
            },
        })
        .collect()
}
