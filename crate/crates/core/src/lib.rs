//! Photoassociative STIRAP from a thermal two-atom continuum near a Feshbach
//! resonance.
//!
//! A colliding atom pair, described by a Gaussian energy wavepacket, is
//! transferred through an excited molecular level `|2>` into a deeply bound
//! target level `|1>` by a counter-intuitive Stokes/pump pulse pair. The
//! continuum is eliminated analytically, leaving two-amplitude models driven
//! by a source term and damped by continuum back-stimulation:
//!
//! * [`dynamics::Regime::NoResonance`]: flat continuum,
//! * [`dynamics::Regime::Broad`]: Feshbach width much larger than the thermal spread,
//! * [`dynamics::Regime::Narrow`]: narrow resonance with an exponential memory kernel,
//! * [`dynamics::Regime::FullOracle`]: the discretized three-level continuum model.
//!
//! The numerical core is generic over the scalar type through [`Real`];
//! the aliases at the bottom of this file fix it to `f64` for everyday use.
//!
//! Internal units: time in seconds, energies as angular frequencies
//! (energy / ħ, s⁻¹). Continuum-normalized couplings carry an extra
//! (s⁻¹)^(-1/2).

pub mod cli;
pub mod config;
pub mod dynamics;
pub mod ensemble;
pub mod error;
pub mod fano;
pub mod optimizer;
pub mod pulses;
pub mod quadrature;
pub mod source;
pub mod specfun;
pub mod units;

mod compensated;

use std::fmt::{Debug, Display, LowerExp};

use num_traits::{Float, FloatConst, FromPrimitive, NumAssign, ToPrimitive};

pub use error::{Error, Result};

/// Floating-point scalar the model is written against (`f32` or `f64`).
pub trait Real:
    Float
    + FloatConst
    + FromPrimitive
    + ToPrimitive
    + NumAssign
    + Default
    + Debug
    + Display
    + LowerExp
    + Send
    + Sync
    + 'static
{
    /// Converts an `f64` literal into the scalar type.
    #[inline]
    fn lit(x: f64) -> Self {
        Self::from_f64(x).expect("f64 literal representable in scalar type")
    }

    /// Lossy conversion to `f64` for reporting.
    #[inline]
    fn to_f64_lossy(self) -> f64 {
        self.to_f64().unwrap_or(f64::NAN)
    }
}

impl Real for f32 {}
impl Real for f64 {}

/// Complex amplitude over the model scalar.
pub type Cplx<T> = num_complex::Complex<T>;

pub type Resonance = fano::FanoResonance<f64>;
pub type Pulse = pulses::GaussianPulse<f64>;
pub type Pulses = pulses::PulsePair<f64>;
pub type Packet = source::Wavepacket<f64>;
pub type Scenario = dynamics::ScenarioConfig<f64>;
pub type State = dynamics::AmplitudeState<f64>;
pub type Series = dynamics::TimeSeries<f64>;

pub type Resonance32 = fano::FanoResonance<f32>;
pub type Scenario32 = dynamics::ScenarioConfig<f32>;
