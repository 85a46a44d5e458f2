//! Cavity selection, Stark tuning fields and the cooling schedule.

mod schedule;
mod validate;

pub use schedule::{
    classify_transition, delta_f_value, pi_sign_threshold, schedule, sequence_a_transition,
    step_count, total_transitions, Family, ScheduledStep, Scheme, StarkSign,
};
pub use validate::{validate_plan, Check, CheckStatus, ValidationReport, PRACTICAL_FIELD_LIMIT};

use std::collections::BTreeSet;
use std::fmt;

use num_traits::Zero;

use crate::cavity::{confocal_geometry, free_space_rate, purcell_rate, CavityConfig};
use crate::error::{Error, Result};
use crate::num::{from_int, lit, ratio_to, Real};
use crate::spectroscopy::{delta_f, LineStrengthMode, RoState, Transition};
use crate::units::{MolecularSpecies, PhysicalConstants};

/// Which resonator wavelength a step runs on.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum CavityRole {
    /// 1/λ_c = 2B_e − α_e
    A,
    /// 1/λ_c = J_max(2B_e − α_e)
    B,
    /// User-supplied wavelength.
    Manual,
}

impl fmt::Display for CavityRole {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            CavityRole::A => "A",
            CavityRole::B => "B",
            CavityRole::Manual => "manual",
        })
    }
}

/// How build_plan assigns wavelengths to steps.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum CavityChoice<T> {
    /// Each step uses its sequence's cavity; a step that cannot be tuned there
    /// moves to the other cavity.
    Auto,
    /// Every step on one of the two standard cavities.
    Fixed(CavityRole),
    /// Every step on the given wavelength (m).
    Manual(T),
}

/// Resonator wavelength for the A or B role.
pub fn cavity_wavelength<T: Real>(
    species: &MolecularSpecies<T>,
    role: CavityRole,
    two_j_max: i32,
) -> T {
    let base = T::one() / species.spacing_quantum();
    match role {
        CavityRole::B => base * lit(2.0) / from_int(i64::from(two_j_max)),
        CavityRole::A | CavityRole::Manual => base,
    }
}

/// Standard cavities used by a scheme.
pub fn choose_cavity<T: Real>(
    species: &MolecularSpecies<T>,
    scheme: Scheme,
    two_j_max: i32,
    s: u32,
    q_factor: T,
) -> Vec<(CavityRole, CavityConfig<T>)> {
    let roles: &[CavityRole] = match scheme {
        Scheme::PiOnly | Scheme::SeqA => &[CavityRole::A],
        Scheme::SeqB => &[CavityRole::B],
        Scheme::Combined => &[CavityRole::B, CavityRole::A],
    };
    roles
        .iter()
        .map(|&role| {
            let lambda = cavity_wavelength(species, role, two_j_max);
            (
                role,
                CavityConfig::new(s, q_factor, lambda).expect("positive wavelength"),
            )
        })
        .collect()
}

/// Field (V/m) that brings `t` into resonance with a cavity at `lambda_c`:
/// E = (hc/μ)·√((2B_e/Δf)(1/λ_c − J(2B_e − α_e))), n = 0.
pub fn tuning_field<T: Real>(
    species: &MolecularSpecies<T>,
    lambda_c: T,
    t: &Transition,
) -> Result<T> {
    let k = PhysicalConstants::<T>::codata();
    let target = T::one() / lambda_c;
    let zero_field = from_int::<T>(i64::from(t.upper.two_j)) / lit(2.0) * species.spacing_quantum();
    let detuning = target - zero_field;
    let tol = lit::<T>(1e-12).max(T::epsilon() * lit(16.0)) * target;
    let infeasible = || Error::InfeasibleTransition {
        step: None,
        transition: *t,
        lambda_c: lambda_c.to_f64().unwrap_or(f64::NAN),
    };
    if detuning.abs() <= tol {
        return Ok(T::zero());
    }
    let df = delta_f(t);
    if df.is_zero() {
        return Err(infeasible());
    }
    let radicand = lit::<T>(2.0) * species.b_e / ratio_to::<T>(df) * detuning;
    if radicand < T::zero() {
        return Err(infeasible());
    }
    Ok(k.hc() / species.dipole * radicand.sqrt())
}

/// One tuning stage: a transition (and its mirror) held on resonance.
#[derive(Debug, Clone, PartialEq)]
pub struct TuningStep<T> {
    pub transitions: Vec<Transition>,
    pub family: Family,
    pub cavity: CavityRole,
    /// m
    pub lambda_c: T,
    /// V/m
    pub e_field: T,
    pub delta_f: T,
    /// s⁻¹, n̄ = 0
    pub gamma_free: T,
    pub eta: T,
    /// s⁻¹, n̄ = 0
    pub gamma_cavity: T,
    /// s
    pub duration: T,
}

impl<T: Real> TuningStep<T> {
    pub fn representative(&self) -> &Transition {
        &self.transitions[0]
    }
}

/// Options for [`build_plan`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PlanOptions<T> {
    pub s: u32,
    pub q_factor: T,
    pub cavity: CavityChoice<T>,
    /// Stage length in units of 1/Γ_c.
    pub stage_cycles: T,
    pub efield_max: Option<T>,
    pub line_strength: LineStrengthMode,
}

impl<T: Real> Default for PlanOptions<T> {
    fn default() -> Self {
        Self {
            s: 1,
            q_factor: lit(1e6),
            cavity: CavityChoice::Auto,
            stage_cycles: lit(4.0),
            efield_max: None,
            line_strength: LineStrengthMode::Reference,
        }
    }
}

/// Ordered tuning schedule with fields, rates and stage durations.
#[derive(Debug, Clone, PartialEq)]
pub struct CoolingPlan<T> {
    pub scheme: Scheme,
    pub species: MolecularSpecies<T>,
    pub two_j_max: i32,
    /// Cavities referenced by the steps, in order of first use.
    pub cavities: Vec<(CavityRole, CavityConfig<T>)>,
    pub steps: Vec<TuningStep<T>>,
    pub stage_cycles: T,
    pub line_strength: LineStrengthMode,
}

impl<T: Real> CoolingPlan<T> {
    pub fn total_duration(&self) -> T {
        self.steps.iter().fold(T::zero(), |a, s| a + s.duration)
    }

    pub fn max_field(&self) -> T {
        self.steps.iter().fold(T::zero(), |a, s| a.max(s.e_field))
    }

    pub fn transitions(&self) -> impl Iterator<Item = &Transition> {
        self.steps.iter().flat_map(|s| s.transitions.iter())
    }

    /// Every state a step reads from or writes to.
    pub fn touched_states(&self) -> BTreeSet<RoState> {
        self.transitions()
            .flat_map(|t| [t.upper, t.lower])
            .collect()
    }

    /// True when no step feeds a state whose outgoing step already ran.
    pub fn is_topologically_ordered(&self) -> bool {
        let mut drained = BTreeSet::new();
        for step in &self.steps {
            if step.transitions.iter().any(|t| drained.contains(&t.lower)) {
                return false;
            }
            drained.extend(step.transitions.iter().map(|t| t.upper));
        }
        true
    }
}

fn cavity_for<T: Real>(
    species: &MolecularSpecies<T>,
    role: CavityRole,
    manual: Option<T>,
    two_j_max: i32,
    opts: &PlanOptions<T>,
) -> CavityConfig<T> {
    let lambda = manual.unwrap_or_else(|| cavity_wavelength(species, role, two_j_max));
    CavityConfig {
        s: opts.s,
        q_factor: opts.q_factor,
        lambda_c: lambda,
    }
}

/// Builds the tuning schedule of `scheme` with fields and stage durations.
pub fn build_plan<T: Real>(
    species: &MolecularSpecies<T>,
    scheme: Scheme,
    two_j_max: i32,
    opts: &PlanOptions<T>,
) -> Result<CoolingPlan<T>> {
    let scheduled = schedule(scheme, two_j_max, species.two_omega)?;
    if let CavityChoice::Manual(lambda) = opts.cavity {
        if !(lambda > T::zero() && lambda.is_finite()) {
            return Err(Error::Config {
                line: None,
                message: "manual cavity wavelength must be positive".into(),
            });
        }
    }
    let mut cavities: Vec<(CavityRole, CavityConfig<T>)> = Vec::new();
    let mut steps = Vec::with_capacity(scheduled.len());
    for (index, sched) in scheduled.into_iter().enumerate() {
        let rep = *sched.representative();
        let preferred = match sched.family {
            Family::Pi | Family::A => CavityRole::A,
            Family::B => CavityRole::B,
        };
        let candidates: Vec<(CavityRole, Option<T>)> = match opts.cavity {
            CavityChoice::Auto => {
                let other = if preferred == CavityRole::A {
                    CavityRole::B
                } else {
                    CavityRole::A
                };
                vec![(preferred, None), (other, None)]
            }
            CavityChoice::Fixed(role) => vec![(role, None)],
            CavityChoice::Manual(lambda) => vec![(CavityRole::Manual, Some(lambda))],
        };
        let mut solved = None;
        let mut first_err = None;
        for (role, manual) in candidates {
            let cfg = cavity_for(species, role, manual, two_j_max, opts);
            match tuning_field(species, cfg.lambda_c, &rep) {
                Ok(field) => {
                    solved = Some((role, cfg, field));
                    break;
                }
                Err(err) => {
                    first_err.get_or_insert(err);
                }
            }
        }
        let Some((role, cfg, e_field)) = solved else {
            return Err(match first_err {
                Some(Error::InfeasibleTransition {
                    transition,
                    lambda_c,
                    ..
                }) => Error::InfeasibleTransition {
                    step: Some(index),
                    transition,
                    lambda_c,
                },
                Some(other) => other,
                None => unreachable!("at least one candidate cavity"),
            });
        };
        if let Some(limit) = opts.efield_max {
            if e_field > limit {
                return Err(Error::ExceedsFieldLimit {
                    step: index,
                    field: e_field.to_f64().unwrap_or(f64::NAN),
                    limit: limit.to_f64().unwrap_or(f64::NAN),
                });
            }
        }
        if !cavities.iter().any(|(r, _)| *r == role) {
            cavities.push((role, cfg));
        }
        let eta = confocal_geometry(&cfg).eta;
        let gamma_free =
            free_space_rate(species, cfg.lambda_c, &rep, T::zero(), opts.line_strength);
        let gamma_cavity = purcell_rate(gamma_free, eta);
        steps.push(TuningStep {
            transitions: sched.transitions,
            family: sched.family,
            cavity: role,
            lambda_c: cfg.lambda_c,
            e_field,
            delta_f: ratio_to(delta_f(&rep)),
            gamma_free,
            eta,
            gamma_cavity,
            duration: opts.stage_cycles / gamma_cavity,
        });
    }
    Ok(CoolingPlan {
        scheme,
        species: species.clone(),
        two_j_max,
        cavities,
        steps,
        stage_cycles: opts.stage_cycles,
        line_strength: opts.line_strength,
    })
}
