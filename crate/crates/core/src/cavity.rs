//! Symmetric confocal microwave resonator: geometry of the Gaussian (0,0)
//! mode, Purcell enhancement and the decay rates it produces.

use crate::num::{from_int, lit, ratio_to, Real};
use crate::spectroscopy::{line_strength_g, LineStrengthMode, Transition};
use crate::units::{MolecularSpecies, PhysicalConstants};

/// Longitudinal mode order, quality factor and resonant wavelength.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CavityConfig<T> {
    pub s: u32,
    pub q_factor: T,
    /// m
    pub lambda_c: T,
}

impl<T: Real> CavityConfig<T> {
    pub fn new(s: u32, q_factor: T, lambda_c: T) -> Option<Self> {
        (s >= 1 && q_factor > T::zero() && lambda_c > T::zero() && lambda_c.is_finite()).then_some(
            Self {
                s,
                q_factor,
                lambda_c,
            },
        )
    }

    /// s + 1/2
    fn half_order(&self) -> T {
        from_int::<T>(i64::from(self.s)) + lit(0.5)
    }

    /// Angular frequency ω_c = 2πc/λ_c.
    pub fn omega_c(&self) -> T {
        let c = PhysicalConstants::<T>::codata().c;
        lit::<T>(2.0) * T::PI() * c / self.lambda_c
    }

    /// The three closed forms of the mode volume: L w₀²π/2, λ_c L²/4 and
    /// (s+½)²λ_c³/16.
    pub fn volume_forms(&self) -> [T; 3] {
        let l = self.half_order() * self.lambda_c / lit(2.0);
        let w0_sq = self.lambda_c * l / (lit::<T>(2.0) * T::PI());
        let so = self.half_order();
        [
            l * w0_sq * T::PI() / lit(2.0),
            self.lambda_c * l * l / lit(4.0),
            so * so * self.lambda_c.powi(3) / lit(16.0),
        ]
    }
}

/// Derived resonator dimensions.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CavityGeometry<T> {
    pub lambda_c: T,
    /// Mirror spacing L, m.
    pub length: T,
    /// Waist w₀, m.
    pub waist: T,
    /// Mode volume V, m³.
    pub volume: T,
    /// Maximum diameter D = √3·L, m.
    pub diameter: T,
    /// Purcell enhancement η.
    pub eta: T,
}

pub fn confocal_geometry<T: Real>(cfg: &CavityConfig<T>) -> CavityGeometry<T> {
    let so = cfg.half_order();
    let length = so * cfg.lambda_c / lit(2.0);
    let waist = (cfg.lambda_c * length / (lit::<T>(2.0) * T::PI())).sqrt();
    let volume = cfg.lambda_c * length * length / lit(4.0);
    let pi_sq = T::PI() * T::PI();
    CavityGeometry {
        lambda_c: cfg.lambda_c,
        length,
        waist,
        volume,
        diameter: lit::<T>(3.0).sqrt() * length,
        eta: lit::<T>(12.0) * cfg.q_factor / (pi_sq * so * so),
    }
}

/// η written through the mode volume, 3λ_c³Q/(4π²V).
pub fn enhancement_from_volume<T: Real>(lambda_c: T, q_factor: T, volume: T) -> T {
    lit::<T>(3.0) * lambda_c.powi(3) * q_factor / (lit::<T>(4.0) * T::PI() * T::PI() * volume)
}

/// Relative intensity |u₀₀(x,y,z)|² of the fundamental mode, 1 at the waist
/// centre. The beam radius follows w²(z) = w₀²(1 + (z/z_R)²) with the
/// Rayleigh range z_R = πw₀²/λ_c = L/2.
pub fn mode_intensity<T: Real>(geometry: &CavityGeometry<T>, x: T, y: T, z: T) -> T {
    let w0_sq = geometry.waist * geometry.waist;
    let zr = T::PI() * w0_sq / geometry.lambda_c;
    let w_sq = w0_sq * (T::one() + (z / zr) * (z / zr));
    w0_sq / w_sq * (lit::<T>(-2.0) * (x * x + y * y) / w_sq).exp()
}

/// Planck occupation of the cavity mode, 0 at T = 0.
pub fn thermal_occupation<T: Real>(lambda_c: T, t_kelvin: T) -> T {
    if t_kelvin <= T::zero() {
        return T::zero();
    }
    let k = PhysicalConstants::<T>::codata();
    let x = k.second_radiation() / (lambda_c * t_kelvin);
    T::one() / x.exp_m1()
}

/// 16π³/(3ε₀h) in SI. Overflows `f32`; the rate functions avoid it.
pub fn rate_prefactor<T: Real>() -> T {
    let k = PhysicalConstants::<T>::codata();
    lit::<T>(16.0) * T::PI().powi(3) / lit(3.0) / k.epsilon0 / k.h
}

/// ‖μ‖²·16π³/(3ε₀hλ_c³), the free-space rate for g = 1 and n̄ = 0, s⁻¹.
pub fn free_space_coefficient<T: Real>(species: &MolecularSpecies<T>, lambda_c: T) -> T {
    let k = PhysicalConstants::<T>::codata();
    // μ/√(ε₀h) keeps every intermediate inside f32 range
    let scaled = species.reduced_dipole / (k.epsilon0.sqrt() * k.h.sqrt());
    let geometric = lit::<T>(16.0) * T::PI().powi(3) / (lit::<T>(3.0) * lambda_c.powi(3));
    scaled * scaled * geometric
}

/// Free-space decay rate at the cavity wavelength, with the (2n̄+1) thermal factor.
pub fn free_space_rate<T: Real>(
    species: &MolecularSpecies<T>,
    lambda_c: T,
    t: &Transition,
    nbar: T,
    mode: LineStrengthMode,
) -> T {
    let g = ratio_to::<T>(line_strength_g(t, mode));
    free_space_coefficient(species, lambda_c) * g * (lit::<T>(2.0) * nbar + T::one())
}

/// Γ_c = η·Γ₀.
pub fn purcell_rate<T: Real>(free_rate: T, eta: T) -> T {
    free_rate * eta
}

/// Γ_c written directly as 2‖μ‖²gQ/(ε₀Vħ).
pub fn purcell_rate_direct<T: Real>(
    species: &MolecularSpecies<T>,
    cfg: &CavityConfig<T>,
    t: &Transition,
    mode: LineStrengthMode,
) -> T {
    let k = PhysicalConstants::<T>::codata();
    let g = ratio_to::<T>(line_strength_g(t, mode));
    let volume = confocal_geometry(cfg).volume;
    let scaled = species.reduced_dipole / (k.epsilon0.sqrt() * k.hbar.sqrt());
    lit::<T>(2.0) * scaled * scaled * g * cfg.q_factor / volume
}

/// Largest Q whose linewidth still covers the Doppler shift at speed `v_max`.
pub fn doppler_q_bound<T: Real>(v_max: T) -> T {
    PhysicalConstants::<T>::codata().c / v_max
}

/// Speed bound 3·√(k_BT/m) used for the Doppler check.
pub fn max_thermal_speed<T: Real>(species: &MolecularSpecies<T>, t_kelvin: T) -> T {
    let k = PhysicalConstants::<T>::codata();
    lit::<T>(3.0) * (k.k_b * t_kelvin / species.mass).sqrt()
}
