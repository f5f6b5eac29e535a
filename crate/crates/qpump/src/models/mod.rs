//! Pump zoo: closed-form two-channel pumps, the U-turn, the bicycle pump
//! built on a transfer-matrix solver, and seeded random cycles.

pub mod bicycle;
pub mod drive;
pub mod potential;
pub mod random;

use std::f64::consts::PI;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{cis, diag, CMat};
use crate::quadrature::GaussRule;
use crate::smatrix::{build_two_channel, Cycle, Dispersion, FnCycle, Timing, TwoChannelParams};

pub use bicycle::{BicyclePump, BicycleSpec};
pub use drive::Drive;
pub use potential::{transfer_matrix_smatrix, transfer_matrix_smatrix_or_limit, PiecewisePotential};
pub use random::{RandomCycle, RandomCycleSpec};

fn default_timing() -> Timing {
    Timing::Periodic { period: 1.0 }
}

fn default_mu() -> f64 {
    1.0
}

/// Declarative description of a pump. Channel 0 is the left lead, channel 1 the right.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum ModelSpec {
    /// Static scatterer translated by `xi(t)`: `r -> r e^{2ik xi}`, `r' -> r' e^{-2ik xi}`.
    Snowplow {
        theta: f64,
        #[serde(default)]
        alpha: f64,
        #[serde(default)]
        phi: f64,
        #[serde(default)]
        gamma: f64,
        xi: Drive,
        #[serde(default = "default_timing")]
        timing: Timing,
        #[serde(default)]
        dispersion: Dispersion,
    },
    /// Voltage drop across the scatterer: `t -> t e^{i phi(t)}`, `t' -> t' e^{-i phi(t)}`.
    Battery {
        theta: f64,
        #[serde(default)]
        alpha: f64,
        #[serde(default)]
        gamma: f64,
        phase: Drive,
        #[serde(default = "default_timing")]
        timing: Timing,
    },
    /// Both fiducial points moved inward by `xi(t)`: `S -> e^{2ik xi} S`.
    Sink {
        theta: f64,
        #[serde(default)]
        alpha: f64,
        #[serde(default)]
        phi: f64,
        xi: Drive,
        #[serde(default = "default_timing")]
        timing: Timing,
        #[serde(default)]
        dispersion: Dispersion,
    },
    /// Loop of circumference `length` threaded by `flux(t)`:
    /// `diag(e^{i(k l + flux)}, e^{i(k l - flux)})`.
    Uturn {
        length: f64,
        flux: Drive,
        #[serde(default = "default_timing")]
        timing: Timing,
        #[serde(default)]
        dispersion: Dispersion,
    },
    /// `[[r e^{-2ik xi}, t' e^{-i phi}], [t e^{i phi}, r' e^{2ik xi}]]` with
    /// `2 k_F xi = phi`.
    Optimal {
        theta: f64,
        phase: Drive,
        #[serde(default = "default_mu")]
        mu: f64,
        #[serde(default = "default_timing")]
        timing: Timing,
        #[serde(default)]
        dispersion: Dispersion,
    },
    Bicycle(BicycleSpec),
    /// Arbitrary drives of the four two-channel coordinates plus constant fiducial shifts.
    CustomTwoChannel {
        theta: Drive,
        #[serde(default)]
        alpha: Drive,
        #[serde(default)]
        phi: Drive,
        #[serde(default)]
        gamma: Drive,
        #[serde(default)]
        shifts: [f64; 2],
        #[serde(default = "default_timing")]
        timing: Timing,
        #[serde(default)]
        dispersion: Dispersion,
    },
}

/// Every model kind with a one-line description.
pub const MODEL_KINDS: [(&str, &str); 7] = [
    ("snowplow", "translated static scatterer; Galilean phase on reflection"),
    ("battery", "time-dependent voltage drop; phase on transmission"),
    ("sink", "fiducial points moved symmetrically; common phase"),
    ("uturn", "flux-threaded loop; reflectionless, quantized"),
    ("optimal", "snowplow and battery locked to saturate the dissipation bound"),
    ("bicycle", "two synchronized valves and a piston floor, transfer-matrix solved"),
    ("custom-two-channel", "user drives for theta, alpha, phi, gamma"),
];

fn invalid(msg: impl Into<String>) -> Error {
    Error::InvalidSpec(msg.into())
}

fn check_drive(name: &str, d: &Drive) -> Result<()> {
    d.validate().map_err(|m| invalid(format!("{name}: {m}")))
}

fn check_timing(t: &Timing) -> Result<()> {
    match *t {
        Timing::Periodic { period } if !(period > 0.0 && period.is_finite()) => {
            Err(invalid("period must be positive"))
        }
        Timing::Pulse { start, end } if !(end > start) => Err(invalid("pulse end must exceed start")),
        _ => Ok(()),
    }
}

fn check_dispersion(d: &Dispersion) -> Result<()> {
    if d.kinetic > 0.0 && d.kinetic.is_finite() {
        Ok(())
    } else {
        Err(invalid("dispersion prefactor must be positive"))
    }
}

fn check_theta(theta: f64) -> Result<()> {
    if (0.0..=0.5 * PI).contains(&theta) {
        Ok(())
    } else {
        Err(invalid(format!("theta must lie in [0, pi/2], got {theta}")))
    }
}

impl ModelSpec {
    pub fn kind(&self) -> &'static str {
        match self {
            ModelSpec::Snowplow { .. } => "snowplow",
            ModelSpec::Battery { .. } => "battery",
            ModelSpec::Sink { .. } => "sink",
            ModelSpec::Uturn { .. } => "uturn",
            ModelSpec::Optimal { .. } => "optimal",
            ModelSpec::Bicycle(_) => "bicycle",
            ModelSpec::CustomTwoChannel { .. } => "custom-two-channel",
        }
    }

    pub fn validate(&self) -> Result<()> {
        match self {
            ModelSpec::Snowplow {
                theta,
                xi,
                timing,
                dispersion,
                ..
            }
            | ModelSpec::Sink {
                theta,
                xi,
                timing,
                dispersion,
                ..
            } => {
                check_theta(*theta)?;
                check_drive("xi", xi)?;
                check_timing(timing)?;
                check_dispersion(dispersion)
            }
            ModelSpec::Battery {
                theta, phase, timing, ..
            } => {
                check_theta(*theta)?;
                check_drive("phase", phase)?;
                check_timing(timing)
            }
            ModelSpec::Uturn {
                length,
                flux,
                timing,
                dispersion,
            } => {
                if !(*length > 0.0 && length.is_finite()) {
                    return Err(invalid("uturn length must be positive"));
                }
                check_drive("flux", flux)?;
                check_timing(timing)?;
                check_dispersion(dispersion)
            }
            ModelSpec::Optimal {
                theta,
                phase,
                mu,
                timing,
                dispersion,
            } => {
                check_theta(*theta)?;
                if !(*mu > 0.0 && mu.is_finite()) {
                    return Err(invalid("optimal pump needs mu > 0"));
                }
                check_drive("phase", phase)?;
                check_timing(timing)?;
                check_dispersion(dispersion)
            }
            ModelSpec::Bicycle(b) => b.validate(),
            ModelSpec::CustomTwoChannel {
                theta,
                alpha,
                phi,
                gamma,
                shifts,
                timing,
                dispersion,
            } => {
                for (name, d) in [("theta", theta), ("alpha", alpha), ("phi", phi), ("gamma", gamma)] {
                    check_drive(name, d)?;
                }
                if shifts.iter().any(|s| !s.is_finite()) {
                    return Err(invalid("shifts must be finite"));
                }
                check_timing(timing)?;
                check_dispersion(dispersion)
            }
        }
    }
}

/// Builds the frozen scattering matrix of a model.
pub fn make_pump(spec: &ModelSpec) -> Result<Cycle> {
    spec.validate()?;
    let label = spec.kind();
    let cycle: Cycle = match spec.clone() {
        ModelSpec::Snowplow {
            theta,
            alpha,
            phi,
            gamma,
            xi,
            timing,
            dispersion,
        } => FnCycle::shared(2, timing, label, move |e, t| {
            let k = dispersion.wavenumber(e);
            build_two_channel(&TwoChannelParams::new(theta, alpha + 2.0 * k * xi.value(t), phi, gamma))
        }),
        ModelSpec::Battery {
            theta,
            alpha,
            gamma,
            phase,
            timing,
        } => FnCycle::shared(2, timing, label, move |_, t| {
            build_two_channel(&TwoChannelParams::new(theta, alpha, phase.value(t), gamma))
        }),
        ModelSpec::Sink {
            theta,
            alpha,
            phi,
            xi,
            timing,
            dispersion,
        } => FnCycle::shared(2, timing, label, move |e, t| {
            let k = dispersion.wavenumber(e);
            build_two_channel(&TwoChannelParams::new(theta, alpha, phi, 2.0 * k * xi.value(t)))
        }),
        ModelSpec::Uturn {
            length,
            flux,
            timing,
            dispersion,
        } => FnCycle::shared(2, timing, label, move |e, t| {
            let optical = dispersion.wavenumber(e) * length;
            let f = flux.value(t);
            diag(&[cis(optical + f), cis(optical - f)])
        }),
        ModelSpec::Optimal {
            theta,
            phase,
            mu,
            timing,
            dispersion,
        } => {
            let kf = dispersion.wavenumber(mu);
            FnCycle::shared(2, timing, label, move |e, t| {
                let p = phase.value(t);
                let xi = p / (2.0 * kf);
                let k = dispersion.wavenumber(e);
                build_two_channel(&TwoChannelParams::new(theta, -2.0 * k * xi, p, 0.0))
            })
        }
        ModelSpec::Bicycle(b) => Arc::new(BicyclePump { spec: b }),
        ModelSpec::CustomTwoChannel {
            theta,
            alpha,
            phi,
            gamma,
            shifts,
            timing,
            dispersion,
        } => FnCycle::shared(2, timing, label, move |e, t| {
            let k = dispersion.wavenumber(e);
            let s = build_two_channel(&TwoChannelParams::new(
                theta.value(t),
                alpha.value(t),
                phi.value(t),
                gamma.value(t),
            ));
            CMat::from_fn(2, 2, |i, j| s[(i, j)] * cis(k * (shifts[i] + shifts[j])))
        }),
    };
    Ok(cycle)
}

/// Pumped current of a slowly translated snowplow, two ways.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct GalileanCheck {
    /// `-(2 k_F xi_dot / 2pi) |r'(k_F)|^2`.
    pub bpt: f64,
    /// Exact occupation change of the left lead from boosting the Fermi sea.
    pub galilean: f64,
    pub residual: f64,
}

/// Snowplow with reflection `cos theta`, translated at speed `xi_dot`, at
/// Fermi energy `mu` with `E = k^2/2`.
///
/// In the scatterer frame the left lead is occupied up to `k_F - xi_dot` and
/// waves come back with momentum shifted by `2 xi_dot`; counting the left
/// movers missing from the lab Fermi sea gives
/// `-(1/2pi) int_{k_F - 2 xi_dot}^{k_F} |r'(k + xi_dot)|^2 k dk`.
pub fn galilean_check(theta: f64, mu: f64, xi_dot: f64) -> Result<GalileanCheck> {
    check_theta(theta)?;
    if !(mu > 0.0) {
        return Err(invalid("mu must be positive"));
    }
    let dispersion = Dispersion::quadratic();
    let kf = dispersion.wavenumber(mu);
    if xi_dot.abs() > 0.01 * kf {
        return Err(invalid("galilean check needs |xi_dot| <= 0.01 k_F"));
    }
    let spec = ModelSpec::Snowplow {
        theta,
        alpha: 0.0,
        phi: 0.0,
        gamma: 0.0,
        xi: Drive::Linear {
            offset: 0.0,
            rate: xi_dot,
        },
        timing: Timing::Open,
        dispersion,
    };
    let cycle = make_pump(&spec)?;
    let reflect = |k: f64| cycle.evaluate(dispersion.energy(k), 0.0)[(1, 1)].norm_sqr();
    let bpt = -2.0 * kf * xi_dot * reflect(kf) / (2.0 * PI);
    let galilean = -GaussRule::new(32).integrate(kf - 2.0 * xi_dot, kf, |k| reflect(k + xi_dot) * k) / (2.0 * PI);
    Ok(GalileanCheck {
        bpt,
        galilean,
        residual: (bpt - galilean).abs(),
    })
}
