use thiserror::Error;

/// Failure modes shared by every module.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("scattering matrix is not unitary at E={energy}, t={time}: residual {residual:.3e} > {tol:.3e}")]
    NonUnitary {
        residual: f64,
        tol: f64,
        energy: f64,
        time: f64,
    },
    #[error("energy stencil leaves E > 0: E={energy}, h_E={step}")]
    StencilOutOfDomain { energy: f64, step: f64 },
    #[error("hermitization discarded {discarded:.3e}, above the limit {limit:.3e}")]
    HermiticityLoss { discarded: f64, limit: f64 },
    #[error("quantity requires T > 0")]
    ZeroTemperature,
    #[error("phase increment {jump:.3} rad near t={time} cannot be unwrapped")]
    PhaseUnwrapFailure { time: f64, jump: f64 },
    #[error("adjacent states overlap only {overlap:.3}; refine the grid")]
    GridTooCoarse { overlap: f64 },
    #[error("evanescent exponent {exponent:.1} in interval {interval} exceeds 700")]
    EvanescentOverflow { interval: usize, exponent: f64 },
    #[error("energy {energy} lies on the band edge of interval {interval}")]
    EnergyAtBandEdge { interval: usize, energy: f64 },
    #[error("cycle does not settle to the identity outside its window")]
    NonPulseCycle,
    #[error("region crosses a discontinuity of the scattering map")]
    RegionTouchesDiscontinuity,
    #[error("trajectory exceeded {0} collision events")]
    MaxEventsExceeded(usize),
    #[error("invalid input: {0}")]
    InvalidSpec(String),
}

pub type Result<T> = std::result::Result<T, Error>;
