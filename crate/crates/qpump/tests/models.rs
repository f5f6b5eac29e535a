mod common;

use std::f64::consts::{FRAC_PI_2, FRAC_PI_4, PI};

use common::{assert_close, max_diff};
use num_complex::Complex64;
use qpump::linalg::{c, cis, unitarity_residual, CMat, I};
use qpump::models::bicycle::max_transmission;
use qpump::models::*;
use qpump::quadrature::QuadratureSpec;
use qpump::smatrix::{energy_shift, Dispersion, Timing};
use qpump::Error;

fn quadratic() -> Dispersion {
    Dispersion::quadratic()
}

/// Left-incidence `(r, t)` by RK4 integration of `kinetic psi'' = (V - E) psi`
/// backward from a pure transmitted wave, matched to plane waves at both ends.
fn ode_reflection(pot: &PiecewisePotential, energy: f64, kinetic: f64, steps_per_unit: usize) -> (Complex64, Complex64) {
    let k = (energy / kinetic).sqrt();
    let x0 = pot.breakpoints[0];
    let xm = *pot.breakpoints.last().unwrap();
    let v = |x: f64| {
        let i = pot.breakpoints.windows(2).position(|w| x >= w[0] && x < w[1]);
        i.map_or(0.0, |i| pot.values[i])
    };
    let rhs = |w: f64, y: [Complex64; 2]| [y[1], y[0] * ((w - energy) / kinetic)];
    let mut y = [c(1.0, 0.0), I * k];
    let n = ((xm - x0) * steps_per_unit as f64).round() as usize;
    let h = -(xm - x0) / n as f64;
    let mut x = xm;
    for _ in 0..n {
        // Steps align with breakpoints, so each step sees one constant value.
        let w = v(x + 0.5 * h);
        let k1 = rhs(w, y);
        let k2 = rhs(w, [y[0] + k1[0] * (0.5 * h), y[1] + k1[1] * (0.5 * h)]);
        let k3 = rhs(w, [y[0] + k2[0] * (0.5 * h), y[1] + k2[1] * (0.5 * h)]);
        let k4 = rhs(w, [y[0] + k3[0] * h, y[1] + k3[1] * h]);
        for m in 0..2 {
            y[m] += (k1[m] + k2[m] * 2.0 + k3[m] * 2.0 + k4[m]) * (h / 6.0);
        }
        x += h;
    }
    let incoming = (y[0] + y[1] / (I * k)) * 0.5;
    let reflected = (y[0] - y[1] / (I * k)) * 0.5;
    (reflected / incoming, c(1.0, 0.0) / incoming)
}

/// Right-incidence data from the mirrored potential.
fn mirrored(pot: &PiecewisePotential) -> PiecewisePotential {
    let x0 = pot.breakpoints[0];
    let xm = *pot.breakpoints.last().unwrap();
    let breakpoints = pot.breakpoints.iter().rev().map(|x| x0 + xm - x).collect();
    let values = pot.values.iter().rev().copied().collect();
    PiecewisePotential::new(breakpoints, values).unwrap()
}

#[test]
fn free_region_only_propagates() {
    let pot = PiecewisePotential::new(vec![0.0, 2.5], vec![0.0]).unwrap();
    let energy = 0.7;
    let s = transfer_matrix_smatrix(&pot, energy, &quadratic()).unwrap();
    let phase = cis((2.0 * energy).sqrt() * 2.5);
    assert!(s[(0, 0)].norm() < 1e-12 && s[(1, 1)].norm() < 1e-12);
    assert!((s[(1, 0)] - phase).norm() < 1e-12 && (s[(0, 1)] - phase).norm() < 1e-12);
}

#[test]
fn square_barrier_matches_ode_integration() {
    let pot = PiecewisePotential::new(vec![0.0, 1.0], vec![2.0]).unwrap();
    let s = transfer_matrix_smatrix(&pot, 1.0, &quadratic()).unwrap();
    let (r, t) = ode_reflection(&pot, 1.0, 0.5, 4000);
    assert!((s[(0, 0)] - r).norm() < 1e-8, "{} vs {r}", s[(0, 0)]);
    assert!((s[(1, 0)] - t).norm() < 1e-8, "{} vs {t}", s[(1, 0)]);
    assert!(unitarity_residual(&s) < 1e-12);
}

#[test]
fn multi_step_potential_matches_ode_integration() {
    let pot = PiecewisePotential::new(vec![-0.3, 0.2, 0.9, 1.4], vec![1.5, -0.4, 3.0]).unwrap();
    for energy in [0.4, 1.2, 3.5] {
        let s = transfer_matrix_smatrix(&pot, energy, &quadratic()).unwrap();
        let (r, t) = ode_reflection(&pot, energy, 0.5, 8000);
        assert!((s[(0, 0)] - r).norm() < 1e-8);
        assert!((s[(1, 0)] - t).norm() < 1e-8);
        assert!(unitarity_residual(&s) < 1e-9);
    }
}

#[test]
fn opaque_barrier_reflects_like_a_wall() {
    let pot = PiecewisePotential::new(vec![0.0, 1.0], vec![1e8]).unwrap();
    let s = transfer_matrix_smatrix_or_limit(&pot, 1.0, &quadratic()).unwrap();
    assert!(s[(1, 0)].norm() < 1e-12);
    // Penetration depth 1/kappa shifts the Dirichlet phase by about 2k/kappa.
    assert!((s[(0, 0)] + 1.0).norm() < 1e-3, "{}", s[(0, 0)]);
    assert!(unitarity_residual(&s) < 1e-12);
    let err = transfer_matrix_smatrix(&pot, 1.0, &quadratic()).unwrap_err();
    assert!(matches!(err, Error::EvanescentOverflow { .. }));
}

#[test]
fn band_edge_is_reported_or_nudged() {
    let pot = PiecewisePotential::new(vec![0.0, 1.0], vec![2.0]).unwrap();
    let err = transfer_matrix_smatrix(&pot, 2.0, &quadratic()).unwrap_err();
    assert!(matches!(err, Error::EnergyAtBandEdge { .. }));
    let s = transfer_matrix_smatrix_or_limit(&pot, 2.0, &quadratic()).unwrap();
    assert!(unitarity_residual(&s) < 1e-9);
}

#[test]
fn potential_validation() {
    assert!(PiecewisePotential::new(vec![0.0, 1.0], vec![f64::NAN]).is_err());
    assert!(PiecewisePotential::new(vec![1.0, 0.0], vec![1.0]).is_err());
    assert!(PiecewisePotential::new(vec![0.0], vec![]).is_err());
}

#[test]
fn uturn_without_flux_is_optical() {
    let length = 1.3;
    let cycle = make_pump(&ModelSpec::Uturn {
        length,
        flux: Drive::Constant { value: 0.0 },
        timing: Timing::Periodic { period: 1.0 },
        dispersion: quadratic(),
    })
    .unwrap();
    let phase = cis(2f64.sqrt() * length);
    let expected = qpump::linalg::diag(&[phase, phase]);
    assert!(max_diff(&cycle.evaluate(1.0, 0.4), &expected) < 1e-14);
}

#[test]
fn resting_snowplow_is_static() {
    let cycle = make_pump(&ModelSpec::Snowplow {
        theta: 0.3,
        alpha: 0.1,
        phi: 0.2,
        gamma: 0.0,
        xi: Drive::Constant { value: 0.4 },
        timing: Timing::Periodic { period: 1.0 },
        dispersion: quadratic(),
    })
    .unwrap();
    let e = energy_shift(cycle.as_ref(), 1.0, 0.2, &QuadratureSpec::default()).unwrap();
    assert!(max_diff(&e, &CMat::zeros(2, 2)) < 1e-12);
}

#[test]
fn bicycle_corner_reflections() {
    // At (a, b) = (0, 1) the left valve is open and the floor plateau (10 > mu)
    // reflects like a finite step, not a hard wall.
    let spec = BicycleSpec::default();
    let s = spec.smatrix_at(0.0, 1.0, 1.0).unwrap();
    let k = PI;
    let kappa = PI * (spec.plateau - 1.0).sqrt();
    let r = (c(k, 0.0) - I * kappa) / (c(k, 0.0) + I * kappa) * cis(2.0 * k * spec.delta);
    assert!((s[(0, 0)] - r).norm() < 1e-6, "{} vs {r}", s[(0, 0)]);
    assert!((s[(0, 0)] + 1.0).norm() > 0.5);
    // The thin closed valve (kappa delta ~ 0.3) leaves r' a few percent from -1.
    assert!((s[(1, 1)] + 1.0).norm() < 0.1);
}

#[test]
fn bicycle_matrix_matches_ode_integration() {
    let spec = BicycleSpec::default();
    let kinetic = BicycleSpec::dispersion().kinetic;
    for (a, b) in [(0.0, 1.0), (0.5, 0.3), (0.9, 0.0)] {
        let pot = spec.potential(a, b);
        let s = spec.smatrix_at(a, b, 1.0).unwrap();
        let (r, t) = ode_reflection(&pot, 1.0, kinetic, 100_000);
        let (r2, t2) = ode_reflection(&mirrored(&pot), 1.0, kinetic, 100_000);
        for (got, want) in [(s[(0, 0)], r), (s[(1, 0)], t), (s[(1, 1)], r2), (s[(0, 1)], t2)] {
            assert!((got - want).norm() < 1e-7, "({a}, {b}): {got} vs {want}");
        }
    }
}

#[test]
fn bicycle_path_is_the_unit_square() {
    let spec = BicycleSpec::default();
    assert_eq!(spec.path(0.0), (0.0, 1.0));
    assert_eq!(spec.path(0.25), (0.0, 0.0));
    assert_eq!(spec.path(0.5), (1.0, 0.0));
    assert_eq!(spec.path(0.75), (1.0, 1.0));
    assert_eq!(spec.path(1.0), (0.0, 1.0));
}

#[test]
fn bicycle_leak_depends_on_valve_strength() {
    // At M = 1e4 a valve is a weak delta barrier (kappa delta ~ 0.3) and the
    // leak is a few 1e-3; at M = 1e7 (kappa delta ~ 10) it is negligible.
    let thin = BicycleSpec::default();
    let leak = max_transmission(&thin, 1.0, 256).unwrap();
    let g = thin.mass * thin.delta * PI / 2.0;
    let estimate = 1.0 / (1.0 + g * g);
    assert!((leak / estimate - 1.0).abs() < 0.25, "{leak} vs {estimate}");
    let thick = BicycleSpec {
        mass: 1e7,
        ..Default::default()
    };
    assert!(max_transmission(&thick, 1.0, 256).unwrap() < 1e-4);
}

#[test]
fn galilean_opaque_and_transparent() {
    let mu = PI * PI / 2.0;
    let xi_dot = 0.001;
    let opaque = galilean_check(0.0, mu, xi_dot).unwrap();
    assert_close(opaque.bpt, -xi_dot, 1e-12, "bpt");
    assert!(opaque.residual < 1e-5, "{opaque:?}");
    let clear = galilean_check(FRAC_PI_2, mu, xi_dot).unwrap();
    assert!(clear.bpt.abs() < 1e-15 && clear.galilean.abs() < 1e-15);
    let half = galilean_check(FRAC_PI_4, mu, xi_dot).unwrap();
    assert_close(half.bpt / half.galilean, 1.0, 1e-3, "ratio");
    assert!(galilean_check(0.0, mu, 0.1).is_err());
}

#[test]
fn specs_round_trip_through_json() {
    let specs = [
        ModelSpec::Bicycle(BicycleSpec {
            length: 2.0,
            ..Default::default()
        }),
        ModelSpec::Uturn {
            length: 1.0,
            flux: Drive::Linear { offset: 0.0, rate: 2.0 * PI },
            timing: Timing::Pulse { start: 0.0, end: 1.0 },
            dispersion: quadratic(),
        },
        ModelSpec::CustomTwoChannel {
            theta: Drive::Bump { height: 0.5, start: 0.0, end: 1.0 },
            alpha: Drive::Ramp { total: 1.0, start: 0.0, end: 1.0 },
            phi: Drive::Harmonic { offset: 0.0, amplitude: 1.0, period: 1.0, phase: 0.3 },
            gamma: Drive::Constant { value: 0.2 },
            shifts: [0.1, 0.2],
            timing: Timing::Open,
            dispersion: quadratic(),
        },
    ];
    for spec in specs {
        let text = serde_json::to_string(&spec).unwrap();
        let back: ModelSpec = serde_json::from_str(&text).unwrap();
        assert_eq!(back, spec, "{text}");
    }
}

#[test]
fn specs_reject_unknown_and_invalid_fields() {
    let bad: Result<ModelSpec, _> = serde_json::from_str(r#"{"kind": "bicycle", "mass": 1e4, "colour": 3}"#);
    assert!(bad.is_err());
    let bad: Result<ModelSpec, _> =
        serde_json::from_str(r#"{"kind": "uturn", "length": 1, "flux": {"shape": "constant", "value": 0}, "extra": 1}"#);
    assert!(bad.is_err());
    let negative: ModelSpec = serde_json::from_str(r#"{"kind": "bicycle", "delta": -1e-3}"#).unwrap();
    assert!(matches!(negative.validate(), Err(Error::InvalidSpec(_))));
    let minimal: ModelSpec = serde_json::from_str(r#"{"kind": "bicycle"}"#).unwrap();
    assert_eq!(minimal, ModelSpec::Bicycle(BicycleSpec::default()));
}

#[test]
fn every_kind_is_listed() {
    let kinds: Vec<&str> = MODEL_KINDS.iter().map(|k| k.0).collect();
    assert_eq!(kinds, ["snowplow", "battery", "sink", "uturn", "optimal", "bicycle", "custom-two-channel"]);
}

#[test]
fn drives_have_consistent_rates() {
    let drives = [
        Drive::Linear { offset: 0.3, rate: -1.2 },
        Drive::Harmonic { offset: 0.1, amplitude: 0.7, period: 0.8, phase: 0.4 },
        Drive::Bump { height: 1.5, start: 0.2, end: 0.9 },
        Drive::Ramp { total: 2.0, start: 0.1, end: 0.6 },
    ];
    let h = 1e-6;
    for d in drives {
        for t in [0.15, 0.3, 0.55, 0.85] {
            let fd = (d.value(t + h) - d.value(t - h)) / (2.0 * h);
            assert!((fd - d.rate(t)).abs() < 1e-6, "{d:?} at {t}");
        }
    }
    let ramp = Drive::Ramp { total: 2.0, start: 0.1, end: 0.6 };
    assert_eq!((ramp.value(0.0), ramp.value(1.0)), (0.0, 2.0));
}
