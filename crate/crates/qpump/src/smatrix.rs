//! Frozen scattering matrices and their differential data.
//!
//! A [`PumpCycle`] is the on-shell matrix `S(E, t)`. From it we build the
//! energy shift `i dS/dt S†`, the time delay `-i dS/dE S†` and their
//! curvature `i[T, E]` by central differences.

use std::f64::consts::PI;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{c, cis, hermitize, max_abs, unitarity_residual, CMat, I};
use crate::quadrature::QuadratureSpec;

/// Time structure of a cycle.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Timing {
    Periodic { period: f64 },
    /// `S` equals the identity outside `[start, end]`.
    Pulse { start: f64, end: f64 },
    /// Neither periodic nor settling; only pointwise quantities make sense.
    Open,
}

impl Timing {
    /// Characteristic time used to scale the time step.
    pub fn scale(&self) -> f64 {
        match *self {
            Timing::Periodic { period } => period,
            Timing::Pulse { start, end } => end - start,
            Timing::Open => 1.0,
        }
    }

    pub fn is_periodic(&self) -> bool {
        matches!(self, Timing::Periodic { .. })
    }
}

/// Frozen on-shell scattering matrix `S(E, t)`.
///
/// Implementations must be pure: the same arguments always give the same matrix.
pub trait PumpCycle: Send + Sync {
    fn n_channels(&self) -> usize;
    fn evaluate(&self, energy: f64, time: f64) -> CMat;
    fn timing(&self) -> Timing;
    fn label(&self) -> String;
}

pub type Cycle = Arc<dyn PumpCycle>;

/// Cycle defined by a closure.
pub struct FnCycle<F> {
    n: usize,
    timing: Timing,
    label: String,
    f: F,
}

impl<F> FnCycle<F>
where
    F: Fn(f64, f64) -> CMat + Send + Sync + 'static,
{
    pub fn new(n: usize, timing: Timing, label: impl Into<String>, f: F) -> Self {
        Self {
            n,
            timing,
            label: label.into(),
            f,
        }
    }

    pub fn shared(n: usize, timing: Timing, label: impl Into<String>, f: F) -> Cycle {
        Arc::new(Self::new(n, timing, label, f))
    }
}

impl<F> PumpCycle for FnCycle<F>
where
    F: Fn(f64, f64) -> CMat + Send + Sync,
{
    fn n_channels(&self) -> usize {
        self.n
    }
    fn evaluate(&self, energy: f64, time: f64) -> CMat {
        (self.f)(energy, time)
    }
    fn timing(&self) -> Timing {
        self.timing
    }
    fn label(&self) -> String {
        self.label.clone()
    }
}

/// Evaluates and checks unitarity.
pub fn checked_eval(cycle: &dyn PumpCycle, energy: f64, time: f64, tol: f64) -> Result<CMat> {
    let s = cycle.evaluate(energy, time);
    let residual = unitarity_residual(&s);
    if residual.is_nan() || residual > tol {
        return Err(Error::NonUnitary {
            residual,
            tol,
            energy,
            time,
        });
    }
    Ok(s)
}

/// Coordinates of a 2x2 unitary: `e^{ig} [[e^{ia} cos th, i e^{-ip} sin th], [i e^{ip} sin th, e^{-ia} cos th]]`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TwoChannelParams {
    pub theta: f64,
    pub alpha: f64,
    pub phi: f64,
    pub gamma: f64,
}

impl TwoChannelParams {
    pub fn new(theta: f64, alpha: f64, phi: f64, gamma: f64) -> Self {
        Self {
            theta,
            alpha,
            phi,
            gamma,
        }
    }

    pub fn identity() -> Self {
        Self::new(0.0, 0.0, 0.0, 0.0)
    }

    pub fn build(&self) -> CMat {
        build_two_channel(self)
    }
}

pub fn build_two_channel(p: &TwoChannelParams) -> CMat {
    let (s, co) = p.theta.sin_cos();
    let g = cis(p.gamma);
    CMat::from_row_slice(
        2,
        2,
        &[
            g * cis(p.alpha) * co,
            g * I * cis(-p.phi) * s,
            g * I * cis(p.phi) * s,
            g * cis(-p.alpha) * co,
        ],
    )
}

/// Below this, `cos theta` or `sin theta` is treated as zero and the
/// corresponding phase is fixed by the tie-break.
const DEGENERATE: f64 = 1e-12;

/// Inverse of [`build_two_channel`]; `gamma` in `[0, pi)`, angles in `[0, 2pi)`.
pub fn decompose_two_channel(s: &CMat, unitarity_tol: f64) -> Result<TwoChannelParams> {
    if s.nrows() != 2 || s.ncols() != 2 {
        return Err(Error::InvalidSpec("decomposition needs a 2x2 matrix".into()));
    }
    let residual = unitarity_residual(s);
    if residual.is_nan() || residual > unitarity_tol {
        return Err(Error::NonUnitary {
            residual,
            tol: unitarity_tol,
            energy: f64::NAN,
            time: f64::NAN,
        });
    }
    let det = s[(0, 0)] * s[(1, 1)] - s[(0, 1)] * s[(1, 0)];
    let mut gamma = 0.5 * det.arg();
    if gamma < 0.0 {
        gamma += PI;
    }
    if gamma >= PI {
        gamma -= PI;
    }
    // Stripping e^{i gamma} leaves an SU(2) matrix, whatever branch gamma took.
    let u = s.map(|z| z * cis(-gamma));
    let cos_t = u[(0, 0)].norm().min(1.0);
    let sin_t = u[(1, 0)].norm().min(1.0);
    let theta = sin_t.atan2(cos_t);
    let alpha = if cos_t > DEGENERATE {
        crate::linalg::wrap_two_pi(u[(0, 0)].arg())
    } else {
        0.0
    };
    let phi = if sin_t > DEGENERATE {
        crate::linalg::wrap_two_pi(u[(1, 0)].arg() - 0.5 * PI)
    } else {
        0.0
    };
    Ok(TwoChannelParams {
        theta,
        alpha,
        phi,
        gamma,
    })
}

/// Energy-momentum relation `E = kinetic * k^2`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Dispersion {
    pub kinetic: f64,
}

impl Default for Dispersion {
    fn default() -> Self {
        Self { kinetic: 0.5 }
    }
}

impl Dispersion {
    pub fn quadratic() -> Self {
        Self::default()
    }

    pub fn wavenumber(&self, energy: f64) -> f64 {
        (energy.max(0.0) / self.kinetic).sqrt()
    }

    pub fn energy(&self, k: f64) -> f64 {
        self.kinetic * k * k
    }
}

/// `S` with its first partial derivatives at one phase-space point.
#[derive(Clone, Debug)]
pub struct Derivatives {
    pub s: CMat,
    pub ds_dt: CMat,
    pub ds_de: CMat,
    pub steps: (f64, f64),
}

fn central(f: impl Fn(f64) -> Result<CMat>, h: f64, richardson: bool) -> Result<CMat> {
    let d1 = (f(h)? - f(-h)?).scale(0.5 / h);
    if !richardson {
        return Ok(d1);
    }
    let d2 = (f(2.0 * h)? - f(-2.0 * h)?).scale(0.25 / h);
    Ok((d1.scale(4.0) - d2).scale(1.0 / 3.0))
}

fn energy_margin(q: &QuadratureSpec) -> f64 {
    if q.richardson {
        2.0
    } else {
        1.0
    }
}

/// Time derivative only; cheaper than [`derivatives`].
pub fn time_derivative(cycle: &dyn PumpCycle, energy: f64, time: f64, q: &QuadratureSpec) -> Result<(CMat, CMat)> {
    let ht = q.time_step(cycle.timing());
    let tol = q.unitarity_tol;
    let s = checked_eval(cycle, energy, time, tol)?;
    let ds_dt = central(|d| checked_eval(cycle, energy, time + d, tol), ht, q.richardson)?;
    Ok((s, ds_dt))
}

pub fn derivatives(cycle: &dyn PumpCycle, energy: f64, time: f64, q: &QuadratureSpec) -> Result<Derivatives> {
    let he = q.energy_step(energy);
    if energy <= energy_margin(q) * he {
        return Err(Error::StencilOutOfDomain { energy, step: he });
    }
    let ht = q.time_step(cycle.timing());
    let tol = q.unitarity_tol;
    let s = checked_eval(cycle, energy, time, tol)?;
    let ds_dt = central(|d| checked_eval(cycle, energy, time + d, tol), ht, q.richardson)?;
    let ds_de = central(|d| checked_eval(cycle, energy + d, time, tol), he, q.richardson)?;
    Ok(Derivatives {
        s,
        ds_dt,
        ds_de,
        steps: (he, ht),
    })
}

/// Energy shift, time delay and curvature at `(E, t)`.
#[derive(Clone, Debug)]
pub struct DifferentialData {
    pub energy_shift: CMat,
    pub time_delay: CMat,
    pub curvature: CMat,
    pub energy: f64,
    pub time: f64,
    pub steps: (f64, f64),
    /// Largest anti-Hermitian entry removed by hermitization.
    pub hermiticity_defect: f64,
}

impl DifferentialData {
    /// `(E^2)_jj - (E_jj)^2`, the spread of the energy shift in channel `j`.
    pub fn energy_shift_variance(&self, j: usize) -> f64 {
        let e = &self.energy_shift;
        let sq = (e * e)[(j, j)].re;
        let d = e[(j, j)].re;
        (sq - d * d).max(0.0)
    }
}

fn shift_and_delay(d: &Derivatives) -> (CMat, CMat) {
    let adj = d.s.adjoint();
    let e = (&d.ds_dt * &adj).map(|z| z * I);
    let t = (&d.ds_de * &adj).map(|z| z * -I);
    (e, t)
}

pub fn differential_data(cycle: &dyn PumpCycle, energy: f64, time: f64, q: &QuadratureSpec) -> Result<DifferentialData> {
    let d = derivatives(cycle, energy, time, q)?;
    let (e_raw, t_raw) = shift_and_delay(&d);
    let (e, de) = hermitize(&e_raw);
    let (t, dt) = hermitize(&t_raw);
    let defect = de.max(dt);
    let limit = 10.0 * q.hermiticity_tol;
    if defect.is_nan() || defect > limit {
        return Err(Error::HermiticityLoss {
            discarded: defect,
            limit,
        });
    }
    let comm = &t * &e - &e * &t;
    let (omega, _) = hermitize(&comm.map(|z| z * I));
    Ok(DifferentialData {
        energy_shift: e,
        time_delay: t,
        curvature: omega,
        energy,
        time,
        steps: d.steps,
        hermiticity_defect: defect,
    })
}

/// Energy shift alone (three evaluations instead of five).
pub fn energy_shift(cycle: &dyn PumpCycle, energy: f64, time: f64, q: &QuadratureSpec) -> Result<CMat> {
    let (s, ds_dt) = time_derivative(cycle, energy, time, q)?;
    let raw = (&ds_dt * s.adjoint()).map(|z| z * I);
    let (e, defect) = hermitize(&raw);
    let limit = 10.0 * q.hermiticity_tol;
    if defect.is_nan() || defect > limit {
        return Err(Error::HermiticityLoss {
            discarded: defect,
            limit,
        });
    }
    Ok(e)
}

/// Residuals of the curvature identity at one point.
#[derive(Clone, Copy, Debug)]
pub struct OmegaIdentity {
    /// `max |i[T,E] - (E' + dT/dt)|`, the derivatives taken by the product
    /// rule on finite-difference partials of `S`.
    pub residual: f64,
    /// `max |i(dS/dt dS†/dE - dS/dE dS†/dt) - (E' + dT/dt)|`.
    pub mixed_form_residual: f64,
    /// Largest entry of `i[T, E]`, for scale.
    pub scale: f64,
}

/// Compares `i[T, E]` with `E' + dT/dt`.
///
/// `E' = i(S_tE S† + S_t S†_E)` and `dT/dt = -i(S_tE S† + S_E S†_t)` share the
/// mixed partial `S_tE`, which cancels from their sum; the remaining error is
/// the second-order truncation of the first partials.
pub fn omega_identity(cycle: &dyn PumpCycle, energy: f64, time: f64, q: &QuadratureSpec) -> Result<OmegaIdentity> {
    let d = derivatives(cycle, energy, time, q)?;
    let (he, ht) = d.steps;
    let tol = q.unitarity_tol;
    let corner = |de: f64, dt: f64| checked_eval(cycle, energy + de, time + dt, tol);
    let mixed = (corner(he, ht)? - corner(he, -ht)? - corner(-he, ht)? + corner(-he, -ht)?)
        .scale(0.25 / (he * ht));
    let adj = d.s.adjoint();
    let ds_dt_adj = d.ds_dt.adjoint();
    let ds_de_adj = d.ds_de.adjoint();
    let mixed_term = &mixed * &adj;
    let e_prime = (&mixed_term + &d.ds_dt * &ds_de_adj).map(|z| z * I);
    let t_dot = (&mixed_term + &d.ds_de * &ds_dt_adj).map(|z| z * -I);
    let sum = e_prime + t_dot;

    let (e_raw, t_raw) = shift_and_delay(&d);
    let comm = (&t_raw * &e_raw - &e_raw * &t_raw).map(|z| z * I);
    let mixed_form = (&d.ds_dt * &ds_de_adj - &d.ds_de * &ds_dt_adj).map(|z| z * I);
    Ok(OmegaIdentity {
        residual: max_abs(&(&comm - &sum)),
        mixed_form_residual: max_abs(&(&mixed_form - &sum)),
        scale: max_abs(&comm),
    })
}

/// Cycle after a time-independent gauge transformation and fiducial shift:
/// `S_ij -> S_ij e^{i k(E)(xi_i + xi_j)} e^{i(phase_i - phase_j)}`.
pub struct GaugedCycle {
    inner: Cycle,
    phases: Vec<f64>,
    shifts: Vec<f64>,
    dispersion: Dispersion,
}

impl PumpCycle for GaugedCycle {
    fn n_channels(&self) -> usize {
        self.inner.n_channels()
    }
    fn evaluate(&self, energy: f64, time: f64) -> CMat {
        let k = self.dispersion.wavenumber(energy);
        let s = self.inner.evaluate(energy, time);
        CMat::from_fn(s.nrows(), s.ncols(), |i, j| {
            s[(i, j)] * cis(k * (self.shifts[i] + self.shifts[j]) + self.phases[i] - self.phases[j])
        })
    }
    fn timing(&self) -> Timing {
        self.inner.timing()
    }
    fn label(&self) -> String {
        format!("{} (gauged)", self.inner.label())
    }
}

pub fn apply_gauge_and_fiducial(cycle: Cycle, phases: &[f64], shifts: &[f64], dispersion: Dispersion) -> Result<Cycle> {
    let n = cycle.n_channels();
    if phases.len() != n || shifts.len() != n {
        return Err(Error::InvalidSpec(format!(
            "expected {n} phases and shifts, got {} and {}",
            phases.len(),
            shifts.len()
        )));
    }
    Ok(Arc::new(GaugedCycle {
        inner: cycle,
        phases: phases.to_vec(),
        shifts: shifts.to_vec(),
        dispersion,
    }))
}

/// Zero matrix helper for callers assembling sums.
pub fn zeros(n: usize) -> CMat {
    CMat::from_element(n, n, c(0.0, 0.0))
}
