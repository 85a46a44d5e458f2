//! Physical constants, the unit boundary for molecular constants, and the
//! built-in species registry.
//!
//! Spectroscopic tables quote term values in cm⁻¹, dipoles in Debye and masses
//! in amu. Those units exist only in [`RawSpecies`]; everything past
//! [`ingest_species`] is SI (m⁻¹, C·m, kg).

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::num::{lit, Real};

/// CODATA values in `f64`.
pub mod codata {
    pub const H: f64 = 6.626_070_15e-34;
    pub const HBAR: f64 = H / (2.0 * std::f64::consts::PI);
    pub const C: f64 = 299_792_458.0;
    pub const EPSILON0: f64 = 8.854_187_812_8e-12;
    pub const K_B: f64 = 1.380_649e-23;
    pub const DEBYE: f64 = 3.335_64e-30;
    pub const AMU: f64 = 1.660_539_066_60e-27;
    /// m⁻¹ per cm⁻¹.
    pub const PER_CM: f64 = 100.0;
}

/// Physical constants in the working scalar type.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PhysicalConstants<T> {
    pub h: T,
    pub hbar: T,
    pub c: T,
    pub epsilon0: T,
    pub k_b: T,
    pub debye_to_si: T,
    pub amu_to_kg: T,
}

impl<T: Real> PhysicalConstants<T> {
    pub fn codata() -> Self {
        Self {
            h: lit(codata::H),
            hbar: lit(codata::HBAR),
            c: lit(codata::C),
            epsilon0: lit(codata::EPSILON0),
            k_b: lit(codata::K_B),
            debye_to_si: lit(codata::DEBYE),
            amu_to_kg: lit(codata::AMU),
        }
    }

    /// `h·c` in J·m.
    pub fn hc(&self) -> T {
        self.h * self.c
    }

    /// Second radiation constant `hc/k_B` in m·K.
    pub fn second_radiation(&self) -> T {
        self.h * self.c / self.k_b
    }
}

/// Molecular constants as tabulated (cm⁻¹, Debye, amu).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RawSpecies {
    pub name: String,
    pub mass_amu: f64,
    #[serde(default)]
    pub omega_x2: u32,
    #[serde(default)]
    pub te_cm: f64,
    #[serde(default)]
    pub we_cm: f64,
    #[serde(default)]
    pub wexe_cm: f64,
    pub be_cm: f64,
    #[serde(default)]
    pub alpha_e_cm: f64,
    pub dipole_debye: f64,
    /// Reduced vibronic dipole; defaults to `dipole_debye`.
    #[serde(default)]
    pub reduced_dipole_debye: Option<f64>,
}

/// A diatomic species in SI units.
#[derive(Debug, Clone, PartialEq)]
pub struct MolecularSpecies<T> {
    pub name: String,
    /// kg
    pub mass: T,
    /// 2Ω
    pub two_omega: i32,
    /// Electronic term value, m⁻¹.
    pub te: T,
    /// m⁻¹
    pub omega_e: T,
    /// m⁻¹
    pub omega_e_x_e: T,
    /// m⁻¹
    pub b_e: T,
    /// m⁻¹
    pub alpha_e: T,
    /// Permanent dipole μ, C·m.
    pub dipole: T,
    /// Reduced transition dipole ‖μ‖, C·m.
    pub reduced_dipole: T,
}

impl<T: Real> MolecularSpecies<T> {
    /// `2B_e − α_e`, the n = 0 spacing quantum, m⁻¹.
    pub fn spacing_quantum(&self) -> T {
        lit::<T>(2.0) * self.b_e - self.alpha_e
    }

    /// Re-expresses the species in tabulated units.
    pub fn to_raw(&self) -> RawSpecies {
        let f = |x: T| x.to_f64().unwrap_or(f64::NAN);
        RawSpecies {
            name: self.name.clone(),
            mass_amu: f(self.mass) / codata::AMU,
            omega_x2: self.two_omega as u32,
            te_cm: f(self.te) / codata::PER_CM,
            we_cm: f(self.omega_e) / codata::PER_CM,
            wexe_cm: f(self.omega_e_x_e) / codata::PER_CM,
            be_cm: f(self.b_e) / codata::PER_CM,
            alpha_e_cm: f(self.alpha_e) / codata::PER_CM,
            dipole_debye: f(self.dipole) / codata::DEBYE,
            reduced_dipole_debye: Some(f(self.reduced_dipole) / codata::DEBYE),
        }
    }
}

fn invalid(field: &'static str, reason: impl Into<String>) -> Error {
    Error::InvalidSpecies {
        field,
        reason: reason.into(),
    }
}

/// Converts tabulated constants to SI and checks the species invariants.
pub fn ingest_species<T: Real>(raw: &RawSpecies) -> Result<MolecularSpecies<T>> {
    let fields: [(&'static str, f64); 8] = [
        ("mass_amu", raw.mass_amu),
        ("te_cm", raw.te_cm),
        ("we_cm", raw.we_cm),
        ("wexe_cm", raw.wexe_cm),
        ("be_cm", raw.be_cm),
        ("alpha_e_cm", raw.alpha_e_cm),
        ("dipole_debye", raw.dipole_debye),
        (
            "reduced_dipole_debye",
            raw.reduced_dipole_debye.unwrap_or(raw.dipole_debye),
        ),
    ];
    for (name, value) in fields {
        if !value.is_finite() {
            return Err(invalid(name, format!("non-finite value {value}")));
        }
    }
    if raw.be_cm <= 0.0 {
        return Err(invalid("be_cm", "non-positive B_e"));
    }
    if raw.alpha_e_cm < 0.0 {
        return Err(invalid("alpha_e_cm", "negative alpha_e"));
    }
    if 2.0 * raw.be_cm - raw.alpha_e_cm <= 0.0 {
        return Err(invalid("alpha_e_cm", "2B_e - alpha_e must be positive"));
    }
    if raw.dipole_debye <= 0.0 {
        return Err(invalid("dipole_debye", "non-positive dipole"));
    }
    let reduced = raw.reduced_dipole_debye.unwrap_or(raw.dipole_debye);
    if reduced <= 0.0 {
        return Err(invalid("reduced_dipole_debye", "non-positive dipole"));
    }
    if raw.mass_amu <= 0.0 {
        return Err(invalid("mass_amu", "non-positive mass"));
    }
    let wn = |x: f64| lit::<T>(x * codata::PER_CM);
    Ok(MolecularSpecies {
        name: raw.name.clone(),
        mass: lit(raw.mass_amu * codata::AMU),
        two_omega: raw.omega_x2 as i32,
        te: wn(raw.te_cm),
        omega_e: wn(raw.we_cm),
        omega_e_x_e: wn(raw.wexe_cm),
        b_e: wn(raw.be_cm),
        alpha_e: wn(raw.alpha_e_cm),
        dipole: lit(raw.dipole_debye * codata::DEBYE),
        reduced_dipole: lit(reduced * codata::DEBYE),
    })
}

/// Tabulated constants for the built-in species.
pub fn builtin_raw() -> Vec<RawSpecies> {
    vec![
        // X¹Σ⁺, Ω = 0.
        RawSpecies {
            name: "CsF".into(),
            mass_amu: 151.9,
            omega_x2: 0,
            te_cm: 0.0,
            we_cm: 352.56,
            wexe_cm: 1.61,
            be_cm: 0.1844,
            alpha_e_cm: 1.18e-3,
            dipole_debye: 7.87,
            reduced_dipole_debye: None,
        },
        // X²Π₁/₂, Ω = 1/2.
        RawSpecies {
            name: "OH".into(),
            mass_amu: 17.01,
            omega_x2: 1,
            te_cm: 0.0,
            we_cm: 3737.76,
            wexe_cm: 84.88,
            be_cm: 18.91,
            alpha_e_cm: 0.724,
            dipole_debye: 1.6676,
            reduced_dipole_debye: None,
        },
    ]
}

pub fn builtin_registry<T: Real>() -> Vec<MolecularSpecies<T>> {
    builtin_raw()
        .iter()
        .map(|raw| ingest_species(raw).expect("built-in species are valid"))
        .collect()
}

/// Case-sensitive lookup in the built-in registry.
pub fn lookup_species<T: Real>(name: &str) -> Option<MolecularSpecies<T>> {
    builtin_raw()
        .iter()
        .find(|raw| raw.name == name)
        .map(|raw| ingest_species(raw).expect("built-in species are valid"))
}
