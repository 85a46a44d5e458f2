//! TOML run configuration.
//!
//! ```toml
//! [species]
//! name = "CsF"            # or inline be_cm, alpha_e_cm, dipole_debye, mass_amu, ...
//!
//! [cavity]
//! mode = "A"              # "A" | "B" | "manual"; omit for per-step selection
//! s = 1
//! q_factor = 1e6
//!
//! [plan]
//! scheme = "pi"           # "pi" | "A" | "B" | "combined"
//! jmax_x2 = 10
//!
//! [simulate]
//! temperature_k = 1.0
//! nbar = "zero"           # "zero" | "planck"
//! stage_cycles = 4.0
//! include_offresonant = false
//! ```

use std::ops::Range;
use std::path::PathBuf;

use serde::Deserialize;
use toml::Spanned;

use crate::dynamics::{NbarMode, SimOptions};
use crate::error::{Error, Result};
use crate::planner::{CavityChoice, CavityRole, PlanOptions, Scheme};
use crate::spectroscopy::LineStrengthMode;
use crate::units::{builtin_raw, ingest_species, MolecularSpecies, RawSpecies};

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawConfig {
    species: Spanned<SpeciesSection>,
    #[serde(default)]
    cavity: CavitySection,
    plan: PlanSection,
    #[serde(default)]
    simulate: SimulateSection,
    #[serde(default)]
    output: OutputSection,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct SpeciesSection {
    name: Option<String>,
    be_cm: Option<f64>,
    alpha_e_cm: Option<f64>,
    we_cm: Option<f64>,
    wexe_cm: Option<f64>,
    te_cm: Option<f64>,
    dipole_debye: Option<f64>,
    reduced_dipole_debye: Option<f64>,
    mass_amu: Option<f64>,
    omega_x2: Option<u32>,
}

#[derive(Debug, Deserialize, Clone, Copy, PartialEq, Eq)]
enum CavityModeKey {
    A,
    B,
    #[serde(rename = "manual")]
    Manual,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct CavitySection {
    mode: Option<Spanned<CavityModeKey>>,
    #[serde(default = "default_s")]
    s: Spanned<u32>,
    #[serde(default = "default_q")]
    q_factor: Spanned<f64>,
    lambda_m: Option<Spanned<f64>>,
}

impl Default for CavitySection {
    fn default() -> Self {
        Self {
            mode: None,
            s: default_s(),
            q_factor: default_q(),
            lambda_m: None,
        }
    }
}

fn default_s() -> Spanned<u32> {
    Spanned::new(0..0, 1)
}

fn default_q() -> Spanned<f64> {
    Spanned::new(0..0, 1e6)
}

#[derive(Debug, Deserialize, Clone, Copy, PartialEq, Eq)]
enum SchemeKey {
    #[serde(rename = "pi")]
    Pi,
    A,
    B,
    #[serde(rename = "combined")]
    Combined,
}

#[derive(Debug, Deserialize, Clone, Copy, PartialEq, Eq, Default)]
#[serde(rename_all = "kebab-case")]
enum LineStrengthKey {
    #[default]
    Reference,
    SumRule,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct PlanSection {
    scheme: Spanned<SchemeKey>,
    jmax_x2: Spanned<i64>,
    efield_max_v_per_m: Option<Spanned<f64>>,
    #[serde(default)]
    line_strength: LineStrengthKey,
}

#[derive(Debug, Deserialize, Clone, Copy, PartialEq, Eq, Default)]
#[serde(rename_all = "lowercase")]
enum NbarKey {
    #[default]
    Zero,
    Planck,
}

/// Initial population for `simulate`.
#[derive(Debug, Deserialize, Clone, Copy, PartialEq, Eq, Default)]
#[serde(rename_all = "lowercase")]
pub enum InitialState {
    /// Boltzmann ensemble at `temperature_k`.
    #[default]
    Thermal,
    /// All weight in the lowest-|M| states of J_max.
    Top,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct SimulateSection {
    #[serde(default = "default_temperature")]
    temperature_k: Spanned<f64>,
    #[serde(default)]
    nbar: NbarKey,
    #[serde(default = "default_cycles")]
    stage_cycles: Spanned<f64>,
    #[serde(default)]
    include_offresonant: bool,
    #[serde(default)]
    initial: InitialState,
    #[serde(default)]
    record_interior_points: usize,
}

impl Default for SimulateSection {
    fn default() -> Self {
        Self {
            temperature_k: default_temperature(),
            nbar: NbarKey::Zero,
            stage_cycles: default_cycles(),
            include_offresonant: false,
            initial: InitialState::Thermal,
            record_interior_points: 0,
        }
    }
}

fn default_temperature() -> Spanned<f64> {
    Spanned::new(0..0, 1.0)
}

fn default_cycles() -> Spanned<f64> {
    Spanned::new(0..0, 4.0)
}

/// Output table format.
#[derive(Debug, Deserialize, Clone, Copy, PartialEq, Eq, Default)]
#[serde(rename_all = "lowercase")]
pub enum OutputFormat {
    #[default]
    Csv,
    Json,
}

#[derive(Debug, Deserialize, Default)]
#[serde(deny_unknown_fields)]
struct OutputSection {
    dir: Option<String>,
    #[serde(default)]
    format: OutputFormat,
}

/// Validated run configuration with defaults applied.
#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub species: RawSpecies,
    pub cavity_mode: CavityChoice<f64>,
    pub s: u32,
    pub q_factor: f64,
    pub scheme: Scheme,
    pub two_j_max: i32,
    pub efield_max: Option<f64>,
    pub line_strength: LineStrengthMode,
    pub temperature_k: f64,
    pub nbar: NbarMode,
    pub stage_cycles: f64,
    pub include_offresonant: bool,
    pub initial: InitialState,
    pub record_interior_points: usize,
    pub output_dir: Option<PathBuf>,
    pub format: OutputFormat,
}

impl RunConfig {
    pub fn species(&self) -> Result<MolecularSpecies<f64>> {
        ingest_species(&self.species)
    }

    pub fn plan_options(&self) -> PlanOptions<f64> {
        PlanOptions {
            s: self.s,
            q_factor: self.q_factor,
            cavity: self.cavity_mode,
            stage_cycles: self.stage_cycles,
            efield_max: None,
            line_strength: self.line_strength,
        }
    }

    pub fn sim_options(&self) -> SimOptions<f64> {
        SimOptions {
            nbar_mode: self.nbar,
            include_offresonant: self.include_offresonant,
            temperature: self.temperature_k,
            record_interior_points: self.record_interior_points,
            line_strength: self.line_strength,
        }
    }
}

/// Config keys a sweep may vary.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SweepAxis {
    QFactor,
    TemperatureK,
    JmaxX2,
}

impl SweepAxis {
    pub fn as_str(&self) -> &'static str {
        match self {
            SweepAxis::QFactor => "q_factor",
            SweepAxis::TemperatureK => "temperature_k",
            SweepAxis::JmaxX2 => "jmax_x2",
        }
    }
}

impl RunConfig {
    /// Copy of `self` with one key replaced, validated like the parsed value.
    pub fn with_axis(&self, axis: SweepAxis, value: f64) -> Result<RunConfig> {
        let bad = |message: String| Error::Config {
            line: None,
            message,
        };
        let mut next = self.clone();
        match axis {
            SweepAxis::QFactor | SweepAxis::TemperatureK => {
                if !(value > 0.0 && value.is_finite()) {
                    return Err(bad(format!("{} = {value} must be positive", axis.as_str())));
                }
                if axis == SweepAxis::QFactor {
                    next.q_factor = value;
                } else {
                    next.temperature_k = value;
                }
            }
            SweepAxis::JmaxX2 => {
                if value.fract() != 0.0 || !(0.0..=f64::from(i32::MAX)).contains(&value) {
                    return Err(bad(format!(
                        "jmax_x2 = {value} is not a non-negative integer"
                    )));
                }
                let two_j_max = value as i32;
                if let Some(problem) = jmax_problem(two_j_max, self.species.omega_x2 as i32) {
                    return Err(bad(problem));
                }
                next.two_j_max = two_j_max;
            }
        }
        Ok(next)
    }
}

fn line_of(text: &str, span: &Range<usize>) -> Option<usize> {
    if span.start == 0 && span.end == 0 {
        return None;
    }
    let start = span.start.min(text.len());
    Some(text[..start].matches('\n').count() + 1)
}

fn config_err(text: &str, span: Option<&Range<usize>>, message: impl Into<String>) -> Error {
    Error::Config {
        line: span.and_then(|s| line_of(text, s)),
        message: message.into(),
    }
}

fn resolve_species(text: &str, section: &Spanned<SpeciesSection>) -> Result<RawSpecies> {
    let span = section.span();
    let sp = section.get_ref();
    let inline = [
        sp.be_cm,
        sp.alpha_e_cm,
        sp.we_cm,
        sp.wexe_cm,
        sp.te_cm,
        sp.dipole_debye,
        sp.reduced_dipole_debye,
        sp.mass_amu,
    ]
    .iter()
    .any(Option::is_some)
        || sp.omega_x2.is_some();
    let raw = match (&sp.name, inline) {
        (Some(name), false) => builtin_raw()
            .into_iter()
            .find(|r| &r.name == name)
            .ok_or_else(|| config_err(text, Some(&span), format!("unknown species `{name}`")))?,
        (Some(_), true) => {
            return Err(config_err(
                text,
                Some(&span),
                "[species] takes either `name` or inline constants, not both",
            ))
        }
        (None, true) => {
            let need = |v: Option<f64>, key: &str| {
                v.ok_or_else(|| {
                    config_err(
                        text,
                        Some(&span),
                        format!("missing inline species key `{key}`"),
                    )
                })
            };
            RawSpecies {
                name: "inline".into(),
                mass_amu: need(sp.mass_amu, "mass_amu")?,
                omega_x2: sp.omega_x2.unwrap_or(0),
                te_cm: sp.te_cm.unwrap_or(0.0),
                we_cm: sp.we_cm.unwrap_or(0.0),
                wexe_cm: sp.wexe_cm.unwrap_or(0.0),
                be_cm: need(sp.be_cm, "be_cm")?,
                alpha_e_cm: sp.alpha_e_cm.unwrap_or(0.0),
                dipole_debye: need(sp.dipole_debye, "dipole_debye")?,
                reduced_dipole_debye: sp.reduced_dipole_debye,
            }
        }
        (None, false) => {
            return Err(config_err(
                text,
                Some(&span),
                "[species] needs `name` or inline constants",
            ))
        }
    };
    ingest_species::<f64>(&raw).map_err(|e| config_err(text, Some(&span), e.to_string()))?;
    Ok(raw)
}

fn jmax_problem(two_j_max: i32, two_omega: i32) -> Option<String> {
    if two_j_max < two_omega + 2 {
        Some(format!(
            "jmax_x2 = {two_j_max} must be at least omega_x2 + 2 = {}",
            two_omega + 2
        ))
    } else if (two_j_max - two_omega) % 2 != 0 {
        Some(format!(
            "jmax_x2 = {two_j_max} has the wrong parity for omega_x2 = {two_omega}"
        ))
    } else {
        None
    }
}

/// Parses and validates a TOML run configuration.
pub fn parse_config(text: &str) -> Result<RunConfig> {
    let raw: RawConfig = toml::from_str(text).map_err(|e| Error::Config {
        line: e.span().and_then(|s| line_of(text, &s)),
        message: e.message().to_owned(),
    })?;
    let species = resolve_species(text, &raw.species)?;

    let jmax = &raw.plan.jmax_x2;
    let two_j_max = i32::try_from(*jmax.get_ref())
        .map_err(|_| config_err(text, Some(&jmax.span()), "jmax_x2 out of range"))?;
    if let Some(problem) = jmax_problem(two_j_max, species.omega_x2 as i32) {
        return Err(config_err(text, Some(&jmax.span()), problem));
    }

    let scheme = match *raw.plan.scheme.get_ref() {
        SchemeKey::Pi => Scheme::PiOnly,
        SchemeKey::A => Scheme::SeqA,
        SchemeKey::B => Scheme::SeqB,
        SchemeKey::Combined => Scheme::Combined,
    };

    let cav = &raw.cavity;
    if *cav.s.get_ref() < 1 {
        return Err(config_err(
            text,
            Some(&cav.s.span()),
            "cavity.s must be >= 1",
        ));
    }
    let q_factor = *cav.q_factor.get_ref();
    if !(q_factor > 0.0 && q_factor.is_finite()) {
        return Err(config_err(
            text,
            Some(&cav.q_factor.span()),
            "cavity.q_factor must be positive",
        ));
    }
    let cavity_mode = match (cav.mode.as_ref(), cav.lambda_m.as_ref()) {
        (Some(mode), lambda) if *mode.get_ref() == CavityModeKey::Manual => {
            let lambda = lambda.ok_or_else(|| {
                config_err(
                    text,
                    Some(&mode.span()),
                    "mode = \"manual\" requires lambda_m",
                )
            })?;
            if !(*lambda.get_ref() > 0.0 && lambda.get_ref().is_finite()) {
                return Err(config_err(
                    text,
                    Some(&lambda.span()),
                    "lambda_m must be positive",
                ));
            }
            CavityChoice::Manual(*lambda.get_ref())
        }
        (_, Some(lambda)) => {
            return Err(config_err(
                text,
                Some(&lambda.span()),
                "lambda_m is only allowed with mode = \"manual\"",
            ))
        }
        (Some(mode), None) => {
            let role = if *mode.get_ref() == CavityModeKey::A {
                CavityRole::A
            } else {
                CavityRole::B
            };
            let clash = matches!(
                (role, scheme),
                (CavityRole::A, Scheme::SeqB)
                    | (CavityRole::B, Scheme::SeqA | Scheme::PiOnly)
                    | (_, Scheme::Combined)
            );
            if clash {
                return Err(config_err(
                    text,
                    Some(&mode.span()),
                    format!("cavity mode {role} is inconsistent with scheme {scheme}"),
                ));
            }
            CavityChoice::Fixed(role)
        }
        (None, None) => CavityChoice::Auto,
    };

    let efield_max = match &raw.plan.efield_max_v_per_m {
        Some(v) if v.get_ref().is_nan() || *v.get_ref() <= 0.0 => {
            return Err(config_err(
                text,
                Some(&v.span()),
                "efield_max_v_per_m must be positive",
            ))
        }
        Some(v) => Some(*v.get_ref()),
        None => None,
    };

    let sim = &raw.simulate;
    let temperature_k = *sim.temperature_k.get_ref();
    if !(temperature_k > 0.0 && temperature_k.is_finite()) {
        return Err(config_err(
            text,
            Some(&sim.temperature_k.span()),
            "temperature_k must be positive",
        ));
    }
    let stage_cycles = *sim.stage_cycles.get_ref();
    if !(stage_cycles > 0.0 && stage_cycles.is_finite()) {
        return Err(config_err(
            text,
            Some(&sim.stage_cycles.span()),
            "stage_cycles must be positive",
        ));
    }

    Ok(RunConfig {
        species,
        cavity_mode,
        s: *cav.s.get_ref(),
        q_factor,
        scheme,
        two_j_max,
        efield_max,
        line_strength: match raw.plan.line_strength {
            LineStrengthKey::Reference => LineStrengthMode::Reference,
            LineStrengthKey::SumRule => LineStrengthMode::SumRule,
        },
        temperature_k,
        nbar: match sim.nbar {
            NbarKey::Zero => NbarMode::Zero,
            NbarKey::Planck => NbarMode::Planck,
        },
        stage_cycles,
        include_offresonant: sim.include_offresonant,
        initial: sim.initial,
        record_interior_points: sim.record_interior_points,
        output_dir: raw.output.dir.map(PathBuf::from),
        format: raw.output.format,
    })
}
