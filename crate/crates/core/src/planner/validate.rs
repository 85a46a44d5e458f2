use std::fmt;

use crate::cavity::{doppler_q_bound, max_thermal_speed};
use crate::num::{lit, rel_diff, Real};
use crate::spectroscopy::stark_spacing;
use crate::units::PhysicalConstants;

use super::CoolingPlan;

/// Field above which a plan is flagged even without a configured hard limit, V/m.
pub const PRACTICAL_FIELD_LIMIT: f64 = 1e8;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum CheckStatus {
    Pass,
    Warn,
    Fail,
}

impl fmt::Display for CheckStatus {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            CheckStatus::Pass => "pass",
            CheckStatus::Warn => "warn",
            CheckStatus::Fail => "fail",
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Check {
    pub name: &'static str,
    pub step: Option<usize>,
    pub status: CheckStatus,
    pub detail: String,
}

impl fmt::Display for Check {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.step {
            Some(s) => write!(
                f,
                "{}:{}:step {}: {}",
                self.status, self.name, s, self.detail
            ),
            None => write!(f, "{}:{}: {}", self.status, self.name, self.detail),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct ValidationReport {
    pub checks: Vec<Check>,
}

impl ValidationReport {
    pub fn worst(&self) -> CheckStatus {
        self.checks
            .iter()
            .map(|c| c.status)
            .max()
            .unwrap_or(CheckStatus::Pass)
    }

    pub fn failed(&self) -> bool {
        self.worst() == CheckStatus::Fail
    }

    /// Non-passing checks rendered as `status:name[:step k]: detail`.
    pub fn flags(&self) -> Vec<String> {
        self.checks
            .iter()
            .filter(|c| c.status != CheckStatus::Pass)
            .map(ToString::to_string)
            .collect()
    }

    pub fn find(&self, name: &str) -> impl Iterator<Item = &Check> {
        let name = name.to_owned();
        self.checks.iter().filter(move |c| c.name == name)
    }
}

/// Checks every step for resonance and field limits, and each cavity
/// against the Doppler bound on Q at `temperature` (K). Never errors.
pub fn validate_plan<T: Real>(
    plan: &CoolingPlan<T>,
    efield_max: Option<T>,
    temperature: T,
) -> ValidationReport {
    let hc = PhysicalConstants::<T>::codata().hc();
    let resonance_tol = lit::<T>(1e-9).max(T::epsilon() * lit(1e3));
    let mut checks = Vec::new();
    for (index, step) in plan.steps.iter().enumerate() {
        let target = hc / step.lambda_c;
        let worst = step
            .transitions
            .iter()
            .map(|t| rel_diff(stark_spacing(&plan.species, 0, t, step.e_field), target))
            .fold(T::zero(), |a, b| if b.is_nan() { b } else { a.max(b) });
        checks.push(Check {
            name: "resonance",
            step: Some(index),
            status: if worst <= resonance_tol {
                CheckStatus::Pass
            } else {
                CheckStatus::Fail
            },
            detail: format!("relative detuning {worst:e}"),
        });

        let real = step.e_field.is_finite() && step.e_field >= T::zero();
        checks.push(Check {
            name: "field_real",
            step: Some(index),
            status: if real {
                CheckStatus::Pass
            } else {
                CheckStatus::Fail
            },
            detail: format!("E = {:e} V/m", step.e_field),
        });

        let (status, detail) = match efield_max {
            Some(limit) if step.e_field > limit => (
                CheckStatus::Fail,
                format!("E = {:e} V/m above limit {:e} V/m", step.e_field, limit),
            ),
            None if step.e_field > lit(PRACTICAL_FIELD_LIMIT) => (
                CheckStatus::Warn,
                format!(
                    "E = {:e} V/m above {:e} V/m",
                    step.e_field, PRACTICAL_FIELD_LIMIT
                ),
            ),
            _ => (CheckStatus::Pass, format!("E = {:e} V/m", step.e_field)),
        };
        checks.push(Check {
            name: "field_limit",
            step: Some(index),
            status,
            detail,
        });
    }

    let v_max = max_thermal_speed(&plan.species, temperature);
    let q_max = doppler_q_bound(v_max);
    for (role, cfg) in &plan.cavities {
        let ok = cfg.q_factor <= q_max;
        checks.push(Check {
            name: "doppler",
            step: None,
            status: if ok {
                CheckStatus::Pass
            } else {
                CheckStatus::Fail
            },
            detail: format!(
                "cavity {role}: Q = {:e}, bound {:e} at v_max = {:.1} m/s",
                cfg.q_factor, q_max, v_max
            ),
        });
    }
    ValidationReport { checks }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::planner::{build_plan, PlanOptions, Scheme};
    use crate::units::lookup_species;

    #[test]
    fn csf_plan_passes_doppler_at_ten_kelvin() {
        let s = lookup_species::<f64>("CsF").unwrap();
        let plan = build_plan(&s, Scheme::PiOnly, 10, &PlanOptions::default()).unwrap();
        let report = validate_plan(&plan, None, 10.0);
        assert!(report
            .find("doppler")
            .all(|c| c.status == CheckStatus::Pass));
        assert_eq!(report.worst(), CheckStatus::Pass, "{:?}", report.flags());
    }

    #[test]
    fn oh_fields_fail_hard_limit_and_warn_without_it() {
        let s = lookup_species::<f64>("OH").unwrap();
        let opts = PlanOptions {
            q_factor: 1e3,
            ..PlanOptions::default()
        };
        let plan = build_plan(&s, Scheme::PiOnly, 9, &opts).unwrap();
        let strict = validate_plan(&plan, Some(1e8), 10.0);
        assert!(strict.failed());
        assert!(strict
            .find("field_limit")
            .any(|c| c.status == CheckStatus::Fail));
        let loose = validate_plan(&plan, None, 10.0);
        assert_eq!(loose.worst(), CheckStatus::Warn);
    }

    #[test]
    fn corrupted_field_fails_resonance() {
        let s = lookup_species::<f64>("CsF").unwrap();
        let mut plan = build_plan(&s, Scheme::SeqA, 10, &PlanOptions::default()).unwrap();
        plan.steps[2].e_field *= 1.01;
        let report = validate_plan(&plan, None, 10.0);
        let bad: Vec<_> = report
            .find("resonance")
            .filter(|c| c.status == CheckStatus::Fail)
            .collect();
        assert_eq!(bad.len(), 1);
        assert_eq!(bad[0].step, Some(2));
    }

    #[test]
    fn excessive_q_fails_doppler() {
        let s = lookup_species::<f64>("CsF").unwrap();
        let opts = PlanOptions {
            q_factor: 1e8,
            ..PlanOptions::default()
        };
        let plan = build_plan(&s, Scheme::PiOnly, 4, &opts).unwrap();
        assert!(validate_plan(&plan, None, 10.0).failed());
    }
}
