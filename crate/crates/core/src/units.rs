//! Physical constants, unit conversions and the Rabi-frequency / field /
//! intensity relations.
//!
//! Internally every energy is stored as an angular frequency (E/ħ, s⁻¹),
//! times in seconds, fields in statV/cm, dipoles in esu·cm and intensities
//! in W/cm². Continuum-normalized dipoles are stored per square root of an
//! angular-frequency energy (esu·cm·s^1/2), so that `μ_2ε·E/ħ` comes out in
//! s^-1/2 and `π|Ω̄|²` is a rate.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::{Error, Real, Result};

/// Fixed physical constants (CODATA 2018, exact where SI defines them).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PhysConstants {
    /// Reduced Planck constant, J·s.
    pub hbar: f64,
    /// Boltzmann constant, J/K.
    pub kb: f64,
    /// Speed of light, cm/s.
    pub c: f64,
    /// One debye in esu·cm.
    pub debye: f64,
}

pub const CODATA: PhysConstants = PhysConstants {
    hbar: 1.054_571_817e-34,
    kb: 1.380_649e-23,
    c: 2.997_924_58e10,
    debye: 1e-18,
};

const HBAR_CGS: f64 = 1.054_571_817e-27;
const ERG_PER_S_CM2_TO_W_CM2: f64 = 1e-7;
/// Magnetic-field to energy scale used for resonance widths quoted in
/// milligauss: 7.8 mG per μK.
pub const MILLIGAUSS_PER_MICROKELVIN: f64 = 7.8;
/// Atomic unit of dipole (e·a₀) in debye.
pub const EA0_IN_DEBYE: f64 = 2.541_746_473;
/// Atomic mass unit, kg.
pub const ATOMIC_MASS_UNIT: f64 = 1.660_539_066_60e-27;

/// Angular frequency (s⁻¹) of one microkelvin of energy.
#[inline]
pub fn microkelvin<T: Real>() -> T {
    T::lit(CODATA.kb * 1e-6 / CODATA.hbar)
}

/// Rabi frequency coupling two bound levels, s⁻¹.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd, Default)]
pub struct BoundRabi<T>(pub T);

/// Rabi frequency between an energy-normalized continuum and a bound level,
/// s^-1/2 (i.e. `μ_2ε·E/ħ` in internal units).
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd, Default)]
pub struct ContinuumRabi<T>(pub T);

impl<T: Real> ContinuumRabi<T> {
    /// Golden-rule loss rate `π|Ω̄|²` of a flat continuum, s⁻¹.
    #[inline]
    pub fn loss_rate(self) -> T {
        T::PI() * self.0 * self.0
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Dimension {
    Energy,
    AngularFrequency,
    TemperatureEnergy,
    Time,
    Field,
    Intensity,
    Dipole,
    ContinuumDipole,
    /// Pump coupling `μ_2ε·E/ħ`, s^-1/2.
    Coupling,
    /// Number density, cm⁻³.
    Density,
    /// Mass, kg.
    Mass,
    /// Volume, cm³.
    Volume,
    Dimensionless,
}

impl fmt::Display for Dimension {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            Dimension::Energy => "energy",
            Dimension::AngularFrequency => "angular frequency",
            Dimension::TemperatureEnergy => "temperature",
            Dimension::Time => "time",
            Dimension::Field => "field",
            Dimension::Intensity => "intensity",
            Dimension::Dipole => "dipole",
            Dimension::ContinuumDipole => "continuum dipole",
            Dimension::Coupling => "pump coupling",
            Dimension::Density => "density",
            Dimension::Mass => "mass",
            Dimension::Volume => "volume",
            Dimension::Dimensionless => "dimensionless",
        };
        f.write_str(s)
    }
}

/// External units accepted in configuration files.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Unit {
    MicroKelvin,
    MilliKelvin,
    Kelvin,
    MilliGauss,
    Gauss,
    Joule,
    PerSecond,
    PerMicrosecond,
    Second,
    Millisecond,
    Microsecond,
    Nanosecond,
    StatVoltPerCm,
    VoltPerCm,
    WattPerCm2,
    KilowattPerCm2,
    Debye,
    EsuCm,
    AtomicDipole,
    DebyePerSqrtMicroKelvin,
    EsuCmSqrtSecond,
    PerSqrtSecond,
    PerCm3,
    PerM3,
    Kilogram,
    AtomicMass,
    Cm3,
    Mm3,
    One,
}

const UNIT_TABLE: &[(Unit, &str)] = &[
    (Unit::MicroKelvin, "uK"),
    (Unit::MilliKelvin, "mK"),
    (Unit::Kelvin, "K"),
    (Unit::MilliGauss, "mG"),
    (Unit::Gauss, "G"),
    (Unit::Joule, "J"),
    (Unit::PerSecond, "s^-1"),
    (Unit::PerMicrosecond, "us^-1"),
    (Unit::Second, "s"),
    (Unit::Millisecond, "ms"),
    (Unit::Microsecond, "us"),
    (Unit::Nanosecond, "ns"),
    (Unit::StatVoltPerCm, "statV/cm"),
    (Unit::VoltPerCm, "V/cm"),
    (Unit::WattPerCm2, "W/cm2"),
    (Unit::KilowattPerCm2, "kW/cm2"),
    (Unit::Debye, "D"),
    (Unit::EsuCm, "esu*cm"),
    (Unit::AtomicDipole, "ea0"),
    (Unit::DebyePerSqrtMicroKelvin, "D/sqrt(uK)"),
    (Unit::EsuCmSqrtSecond, "esu*cm*s^1/2"),
    (Unit::PerSqrtSecond, "s^-1/2"),
    (Unit::PerCm3, "cm^-3"),
    (Unit::PerM3, "m^-3"),
    (Unit::Kilogram, "kg"),
    (Unit::AtomicMass, "u"),
    (Unit::Cm3, "cm3"),
    (Unit::Mm3, "mm3"),
    (Unit::One, "1"),
];

impl Unit {
    pub fn symbol(self) -> &'static str {
        UNIT_TABLE.iter().find(|(u, _)| *u == self).map(|(_, s)| *s).unwrap_or("?")
    }

    /// Whether this unit can express a quantity of the given dimension.
    pub fn measures(self, dim: Dimension) -> bool {
        self.scale(dim).is_some()
    }

    /// Multiplier from this unit to the internal unit of `dim`.
    fn scale(self, dim: Dimension) -> Option<f64> {
        use Dimension as D;
        use Unit as U;
        let uk_energy = CODATA.kb * 1e-6 / CODATA.hbar;
        let s = match (dim, self) {
            (D::Energy, U::MicroKelvin) => uk_energy,
            (D::Energy, U::MilliKelvin) => uk_energy * 1e3,
            (D::Energy, U::Kelvin) => uk_energy * 1e6,
            (D::Energy, U::MilliGauss) => uk_energy / MILLIGAUSS_PER_MICROKELVIN,
            (D::Energy, U::Gauss) => uk_energy * 1e3 / MILLIGAUSS_PER_MICROKELVIN,
            (D::Energy, U::Joule) => 1.0 / CODATA.hbar,
            (D::Energy | D::AngularFrequency, U::PerSecond) => 1.0,
            (D::Energy | D::AngularFrequency, U::PerMicrosecond) => 1e6,
            (D::TemperatureEnergy, U::MicroKelvin) => 1e-6,
            (D::TemperatureEnergy, U::MilliKelvin) => 1e-3,
            (D::TemperatureEnergy, U::Kelvin) => 1.0,
            (D::Time, U::Second) => 1.0,
            (D::Time, U::Millisecond) => 1e-3,
            (D::Time, U::Microsecond) => 1e-6,
            (D::Time, U::Nanosecond) => 1e-9,
            (D::Field, U::StatVoltPerCm) => 1.0,
            (D::Field, U::VoltPerCm) => 1e8 / CODATA.c,
            (D::Intensity, U::WattPerCm2) => 1.0,
            (D::Intensity, U::KilowattPerCm2) => 1e3,
            (D::Dipole, U::Debye) => CODATA.debye,
            (D::Dipole, U::EsuCm) => 1.0,
            (D::Dipole, U::AtomicDipole) => EA0_IN_DEBYE * CODATA.debye,
            (D::ContinuumDipole, U::DebyePerSqrtMicroKelvin) => CODATA.debye / uk_energy.sqrt(),
            (D::ContinuumDipole, U::EsuCmSqrtSecond) => 1.0,
            (D::Coupling, U::PerSqrtSecond) => 1.0,
            (D::Density, U::PerCm3) => 1.0,
            (D::Density, U::PerM3) => 1e-6,
            (D::Mass, U::Kilogram) => 1.0,
            (D::Mass, U::AtomicMass) => ATOMIC_MASS_UNIT,
            (D::Volume, U::Cm3) => 1.0,
            (D::Volume, U::Mm3) => 1e-3,
            (D::Dimensionless, U::One) => 1.0,
            _ => return None,
        };
        Some(s)
    }
}

impl fmt::Display for Unit {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.symbol())
    }
}

impl FromStr for Unit {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        let s = match s {
            "μK" => "uK",
            "μs" => "us",
            "1/s" => "s^-1",
            "" => "1",
            other => other,
        };
        UNIT_TABLE
            .iter()
            .find(|(_, sym)| *sym == s)
            .map(|(u, _)| *u)
            .ok_or_else(|| Error::arg("unit", format!("unknown unit `{s}`")))
    }
}

/// A magnitude with an external unit, tagged with the dimension it measures.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct UnitValue {
    pub magnitude: f64,
    pub unit: Unit,
    pub kind: Dimension,
}

impl UnitValue {
    pub fn new(magnitude: f64, unit: Unit, kind: Dimension) -> Result<Self> {
        if !unit.measures(kind) {
            return Err(Error::arg("unit", format!("`{unit}` does not measure {kind}")));
        }
        if !magnitude.is_finite() {
            return Err(Error::arg("magnitude", "must be finite"));
        }
        Ok(Self { magnitude, unit, kind })
    }

    /// Parses `"<number> <unit>"`; a bare number is dimensionless.
    pub fn parse(text: &str, kind: Dimension) -> Result<Self> {
        let text = text.trim();
        let (num, unit) = match text.split_once(char::is_whitespace) {
            Some((n, u)) => (n, u.trim()),
            None => (text, "1"),
        };
        let magnitude: f64 = num
            .parse()
            .map_err(|_| Error::arg("magnitude", format!("cannot parse number `{num}`")))?;
        Self::new(magnitude, unit.parse()?, kind)
    }

    pub fn to_internal<T: Real>(&self) -> T {
        T::lit(self.magnitude * self.unit.scale(self.kind).expect("validated at construction"))
    }

    pub fn from_internal<T: Real>(value: T, unit: Unit, kind: Dimension) -> Result<Self> {
        let scale = unit
            .scale(kind)
            .ok_or_else(|| Error::arg("unit", format!("`{unit}` does not measure {kind}")))?;
        Self::new(value.to_f64_lossy() / scale, unit, kind)
    }
}

impl fmt::Display for UnitValue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.unit == Unit::One {
            write!(f, "{}", self.magnitude)
        } else {
            write!(f, "{} {}", self.magnitude, self.unit)
        }
    }
}

/// Energy (internal s⁻¹) of `k_B·T` for `T` in μK.
pub fn energy_from_temperature<T: Real>(temperature_uk: T) -> Result<T> {
    if !(temperature_uk >= T::zero()) {
        return Err(Error::arg("temperature", "must be non-negative"));
    }
    Ok(temperature_uk * microkelvin::<T>())
}

/// Peak Stokes intensity (W/cm²) for a bound-bound Rabi frequency
/// `omega_s0` (s⁻¹) and transition dipole `mu21` (esu·cm):
/// `I = c(ħΩ)²/(8π μ²)` in Gaussian units.
pub fn stokes_intensity<T: Real>(omega_s0: T, mu21: T) -> Result<T> {
    if !(mu21 > T::zero()) {
        return Err(Error::arg("mu21", "dipole must be positive"));
    }
    let field = T::lit(HBAR_CGS) * omega_s0 / mu21;
    Ok(intensity_from_field(field))
}

/// Peak pump intensity (W/cm²) in the broad-resonance convention, from the
/// dimensionless pump amplitude `omega_p0` and the bound-bound dipole μ_2b
/// (esu·cm), using μ_2ε ≈ √2 μ_2b / (q √(πΓ)):
/// `I = q² c Ω² δ_ε Γ / (64 √π μ_2b²)`. Energies are internal (s⁻¹).
pub fn pump_intensity_broad<T: Real>(omega_p0: T, q: T, delta_eps: T, gamma: T, mu2b: T) -> Result<T> {
    if !(mu2b > T::zero()) {
        return Err(Error::arg("mu2b", "dipole must be positive"));
    }
    if !(delta_eps > T::zero() && gamma > T::zero()) {
        return Err(Error::arg("delta_eps/gamma", "energies must be positive"));
    }
    let hbar = T::lit(HBAR_CGS);
    let (de, g) = (delta_eps * hbar, gamma * hbar);
    let erg = q * q * T::lit(CODATA.c) * omega_p0 * omega_p0 * de * g
        / (T::lit(64.0) * T::PI().sqrt() * mu2b * mu2b);
    Ok(erg * T::lit(ERG_PER_S_CM2_TO_W_CM2))
}

/// Continuum dipole (internal units) implied by the bound-bound dipole and
/// the Fano parameter: `μ_2ε = √2 μ_2b / (q √(πΓ))`.
pub fn continuum_dipole_from_bound<T: Real>(mu2b: T, q: T, gamma: T) -> Result<T> {
    if q == T::zero() || !(gamma > T::zero()) {
        return Err(Error::arg("q/gamma", "need q ≠ 0 and Γ > 0"));
    }
    Ok(T::lit(2.0).sqrt() * mu2b / (q.abs() * (T::PI() * gamma).sqrt()))
}

/// Intensity (W/cm²) of a field amplitude (statV/cm): `I = cE²/8π`.
pub fn intensity_from_field<T: Real>(field: T) -> T {
    T::lit(CODATA.c) * field * field / (T::lit(8.0) * T::PI()) * T::lit(ERG_PER_S_CM2_TO_W_CM2)
}

/// Field amplitude (statV/cm) of an intensity (W/cm²).
pub fn field_from_intensity<T: Real>(intensity: T) -> T {
    (intensity / T::lit(ERG_PER_S_CM2_TO_W_CM2) * T::lit(8.0) * T::PI() / T::lit(CODATA.c)).sqrt()
}

/// Pump coupling `μ_2ε·E/ħ` from a field amplitude and continuum dipole.
pub fn continuum_rabi_from_field<T: Real>(field: T, mu2eps: T) -> ContinuumRabi<T> {
    ContinuumRabi(mu2eps * field / T::lit(HBAR_CGS))
}

/// Field amplitude producing a given pump coupling.
pub fn field_from_continuum_rabi<T: Real>(coupling: ContinuumRabi<T>, mu2eps: T) -> Result<T> {
    if !(mu2eps > T::zero()) {
        return Err(Error::arg("mu2eps", "dipole must be positive"));
    }
    Ok(coupling.0 * T::lit(HBAR_CGS) / mu2eps)
}

/// Peak pump intensity (W/cm²) of a continuum coupling.
pub fn pump_intensity<T: Real>(coupling: ContinuumRabi<T>, mu2eps: T) -> Result<T> {
    field_from_continuum_rabi(coupling, mu2eps).map(intensity_from_field)
}

/// Convention for the dimensionless pump amplitude used in plots.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PumpDisplay {
    /// `(16π/δ_ε²)^(1/4)·μ_2ε E_p`, used for broad and no-resonance runs.
    Broad,
    /// `(2π/Γ)^(1/2)·μ_2ε E_p`.
    Narrow,
}

/// Dimensionless pump amplitude of a continuum coupling.
pub fn display_pump_units<T: Real>(
    coupling: ContinuumRabi<T>,
    convention: PumpDisplay,
    delta_eps: T,
    gamma: T,
) -> Result<T> {
    Ok(coupling.0 * display_factor(convention, delta_eps, gamma)?)
}

/// Continuum coupling for a dimensionless pump amplitude.
pub fn coupling_from_display<T: Real>(
    display: T,
    convention: PumpDisplay,
    delta_eps: T,
    gamma: T,
) -> Result<ContinuumRabi<T>> {
    Ok(ContinuumRabi(display / display_factor(convention, delta_eps, gamma)?))
}

fn display_factor<T: Real>(convention: PumpDisplay, delta_eps: T, gamma: T) -> Result<T> {
    match convention {
        PumpDisplay::Broad => {
            if !(delta_eps > T::zero()) {
                return Err(Error::arg("delta_eps", "must be positive"));
            }
            Ok(T::lit(2.0) * T::PI().powf(T::lit(0.25)) / delta_eps.sqrt())
        }
        PumpDisplay::Narrow => {
            if !(gamma > T::zero()) {
                return Err(Error::arg("gamma", "must be positive"));
            }
            Ok((T::lit(2.0) * T::PI() / gamma).sqrt())
        }
    }
}
