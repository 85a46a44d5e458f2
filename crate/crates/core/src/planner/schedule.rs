//! Which transitions each tuning sequence drives, and in what order.
//!
//! Everything here is exact combinatorics on doubled quantum numbers; no
//! species constants are involved.

use std::fmt;
use std::str::FromStr;

use num_traits::Zero;

use crate::error::{Error, Result};
use crate::num::{ratio_to, Rational};
use crate::spectroscopy::{delta_f, RoState, Transition};

/// Tuning schedule.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Scheme {
    /// π transitions out of |M| ≤ Ω only.
    PiOnly,
    /// Every non-stretched state, cavity at 1/λ_c = 2B_e − α_e.
    SeqA,
    /// Stretched-state chain, cavity at 1/λ_c = J_max(2B_e − α_e).
    SeqB,
    /// Sequence B followed by sequence A.
    Combined,
}

impl Scheme {
    pub const ALL: [Scheme; 4] = [Scheme::PiOnly, Scheme::SeqA, Scheme::SeqB, Scheme::Combined];

    pub fn as_str(&self) -> &'static str {
        match self {
            Scheme::PiOnly => "pi_only",
            Scheme::SeqA => "seq_A",
            Scheme::SeqB => "seq_B",
            Scheme::Combined => "combined",
        }
    }
}

impl fmt::Display for Scheme {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Scheme {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        match s {
            "pi" | "pi_only" => Ok(Scheme::PiOnly),
            "A" | "seq_A" => Ok(Scheme::SeqA),
            "B" | "seq_B" => Ok(Scheme::SeqB),
            "combined" => Ok(Scheme::Combined),
            other => Err(format!(
                "unknown scheme `{other}` (expected \"pi\", \"A\", \"B\" or \"combined\")"
            )),
        }
    }
}

/// Sequence a scheduled step belongs to; decides its preferred cavity.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Family {
    Pi,
    A,
    B,
}

/// Sign of f_{J,M} − f_{J−1,M−q}.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum StarkSign {
    Negative,
    Zero,
    Positive,
}

pub fn classify_transition(t: &Transition) -> StarkSign {
    let d = delta_f(t);
    if d.is_zero() {
        StarkSign::Zero
    } else if d < Rational::zero() {
        StarkSign::Negative
    } else {
        StarkSign::Positive
    }
}

/// Smallest J above which π transitions from |J,M⟩ have negative Δf:
/// √(½(1 + 6M² + √(1 + 3M² + 36M⁴))).
pub fn pi_sign_threshold(two_m: i32) -> f64 {
    let m_sq = f64::from(two_m * two_m) / 4.0;
    (0.5 * (1.0 + 6.0 * m_sq + (1.0 + 3.0 * m_sq + 36.0 * m_sq * m_sq).sqrt())).sqrt()
}

/// One step of a schedule: a transition and, unless it is its own mirror,
/// its M → −M partner.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ScheduledStep {
    pub transitions: Vec<Transition>,
    pub family: Family,
}

impl ScheduledStep {
    fn with_mirror(t: Transition, family: Family) -> Self {
        let mut transitions = vec![t];
        if !t.is_self_mirror() {
            transitions.push(t.mirrored());
        }
        Self {
            transitions,
            family,
        }
    }

    pub fn representative(&self) -> &Transition {
        &self.transitions[0]
    }
}

/// Transition used to empty a non-stretched state in sequence A.
///
/// π is taken when its Stark coefficient is negative, otherwise the σ line
/// towards smaller |M|. When neither is negative the σ line is kept so no
/// population lands on a stretched state.
pub fn sequence_a_transition(upper: RoState) -> Transition {
    let pi = Transition::new(upper, 0);
    let inward = match upper.two_m.signum() {
        1 => Transition::new(upper, 1),
        -1 => Transition::new(upper, -1),
        _ => None,
    };
    let negative = |t: &Option<Transition>| {
        t.as_ref()
            .is_some_and(|t| classify_transition(t) == StarkSign::Negative)
    };
    if negative(&pi) {
        return pi.expect("checked");
    }
    if negative(&inward) {
        return inward.expect("checked");
    }
    inward
        .or(pi)
        .expect("non-stretched state above the ground level decays")
}

fn check_manifold(two_j_max: i32, two_omega: i32) -> Result<()> {
    if two_omega < 0 || two_j_max < two_omega {
        return Err(Error::Parity {
            two_j_max,
            two_omega,
            reason: "J_max below Omega",
        });
    }
    if (two_j_max - two_omega) % 2 != 0 {
        return Err(Error::Parity {
            two_j_max,
            two_omega,
            reason: "J_max and Omega must both be integer or both half-integer",
        });
    }
    Ok(())
}

fn upper_shells(two_j_max: i32, two_omega: i32) -> impl Iterator<Item = i32> {
    ((two_omega + 2)..=two_j_max).rev().step_by(2)
}

/// Non-negative 2M values of a shell, largest first.
fn non_negative_m(two_j: i32, max_abs: i32) -> impl Iterator<Item = i32> {
    let top = max_abs.min(two_j);
    let bottom = two_j % 2;
    (bottom..=top).rev().step_by(2)
}

fn sequence_pi(two_j_max: i32, two_omega: i32) -> Vec<ScheduledStep> {
    let mut steps = Vec::new();
    for two_j in upper_shells(two_j_max, two_omega) {
        for two_m in non_negative_m(two_j, two_omega) {
            let up = RoState::new(0, two_j, two_m, two_omega).expect("valid");
            let t = Transition::new(up, 0).expect("|M| <= Omega < J");
            steps.push(ScheduledStep::with_mirror(t, Family::Pi));
        }
    }
    steps
}

fn sequence_a(two_j_max: i32, two_omega: i32) -> Vec<ScheduledStep> {
    let mut steps = Vec::new();
    for two_j in upper_shells(two_j_max, two_omega) {
        for two_m in non_negative_m(two_j, two_j - 2) {
            let up = RoState::new(0, two_j, two_m, two_omega).expect("valid");
            steps.push(ScheduledStep::with_mirror(
                sequence_a_transition(up),
                Family::A,
            ));
        }
    }
    steps
}

fn sequence_b(two_j_max: i32, two_omega: i32) -> Vec<ScheduledStep> {
    upper_shells(two_j_max, two_omega)
        .map(|two_j| {
            let up = RoState::new(0, two_j, two_j, two_omega).expect("valid");
            let t = Transition::new(up, 1).expect("stretched chain");
            ScheduledStep::with_mirror(t, Family::B)
        })
        .collect()
}

/// Ordered steps of `scheme` for the Ω manifold up to J_max.
pub fn schedule(scheme: Scheme, two_j_max: i32, two_omega: i32) -> Result<Vec<ScheduledStep>> {
    check_manifold(two_j_max, two_omega)?;
    Ok(match scheme {
        Scheme::PiOnly => sequence_pi(two_j_max, two_omega),
        Scheme::SeqA => sequence_a(two_j_max, two_omega),
        Scheme::SeqB => sequence_b(two_j_max, two_omega),
        Scheme::Combined => {
            let mut steps = sequence_b(two_j_max, two_omega);
            steps.extend(sequence_a(two_j_max, two_omega));
            steps
        }
    })
}

/// Closed-form number of tuning steps.
pub fn step_count(scheme: Scheme, two_j_max: i32, two_omega: i32) -> Result<usize> {
    check_manifold(two_j_max, two_omega)?;
    let (jm, om) = (i64::from(two_j_max), i64::from(two_omega));
    let integer = two_omega % 2 == 0;
    let n = match (scheme, integer) {
        // (Ω+1)(J_max−Ω)
        (Scheme::PiOnly, true) => (om + 2) * (jm - om) / 4,
        // (Ω+½)(J_max−Ω)
        (Scheme::PiOnly, false) => (om + 1) * (jm - om) / 4,
        // ½(J_max−Ω)(J_max+Ω+1)
        (Scheme::SeqA, true) => (jm - om) * (jm + om + 2) / 8,
        // ½(J_max²−Ω²)
        (Scheme::SeqA, false) => (jm * jm - om * om) / 8,
        (Scheme::SeqB, _) => (jm - om) / 2,
        // ½(J_max−Ω)(J_max+Ω+3)
        (Scheme::Combined, true) => (jm - om) * (jm + om + 6) / 8,
        // ½(J_max−Ω)(J_max+Ω+2)
        (Scheme::Combined, false) => (jm - om) * (jm + om + 4) / 8,
    };
    Ok(n as usize)
}

/// J_max(J_max+2) − Ω(Ω+2): states above the ground level, one transition each.
pub fn total_transitions(two_j_max: i32, two_omega: i32) -> usize {
    let (jm, om) = (i64::from(two_j_max), i64::from(two_omega));
    ((jm * (jm + 4) - om * (om + 4)) / 4) as usize
}

/// Δf as a float, for reports.
pub fn delta_f_value(t: &Transition) -> f64 {
    ratio_to::<f64>(delta_f(t))
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::collections::HashSet;

    fn tr(two_j: i32, two_m: i32, q: i8, two_omega: i32) -> Transition {
        Transition::new(RoState::new(0, two_j, two_m, two_omega).unwrap(), q).unwrap()
    }

    #[test]
    fn scheme_names() {
        assert_eq!("pi".parse::<Scheme>().unwrap(), Scheme::PiOnly);
        assert_eq!("seq_B".parse::<Scheme>().unwrap(), Scheme::SeqB);
        assert!("C".parse::<Scheme>().is_err());
        for s in Scheme::ALL {
            assert_eq!(s.as_str().parse::<Scheme>().unwrap(), s);
        }
    }

    #[test]
    fn sign_examples() {
        assert_eq!(classify_transition(&tr(2, 0, 0, 0)), StarkSign::Positive);
        assert_eq!(classify_transition(&tr(4, 0, 0, 0)), StarkSign::Negative);
        for two_j in 2..=30 {
            let t = tr(two_j, two_j, 1, two_j % 2);
            assert_eq!(classify_transition(&t), StarkSign::Positive);
        }
    }

    #[test]
    fn step_counts_integer_omega() {
        assert_eq!(step_count(Scheme::PiOnly, 10, 0).unwrap(), 5);
        assert_eq!(step_count(Scheme::SeqA, 10, 0).unwrap(), 15);
        assert_eq!(step_count(Scheme::SeqB, 10, 0).unwrap(), 5);
        assert_eq!(step_count(Scheme::Combined, 10, 0).unwrap(), 20);
        assert_eq!(total_transitions(10, 0), 35);
    }

    #[test]
    fn step_counts_half_integer_omega() {
        assert_eq!(step_count(Scheme::PiOnly, 9, 1).unwrap(), 4);
        assert_eq!(step_count(Scheme::SeqA, 9, 1).unwrap(), 10);
        assert_eq!(step_count(Scheme::SeqB, 9, 1).unwrap(), 4);
        assert_eq!(step_count(Scheme::Combined, 9, 1).unwrap(), 14);
        for om in 0..=3 {
            for jm in ((om + 2)..=30).step_by(2) {
                let a = step_count(Scheme::SeqA, jm, om).unwrap();
                let b = step_count(Scheme::SeqB, jm, om).unwrap();
                assert_eq!(step_count(Scheme::Combined, jm, om).unwrap(), a + b);
            }
        }
        assert!(step_count(Scheme::SeqA, 10, 1).is_err());
    }

    #[test]
    fn schedules_cover_every_excited_state_once() {
        for om in 0..=3 {
            for jm in ((om + 2)..=30).step_by(2) {
                let a = schedule(Scheme::SeqA, jm, om).unwrap();
                let b = schedule(Scheme::SeqB, jm, om).unwrap();
                let uppers_a: HashSet<RoState> = a
                    .iter()
                    .flat_map(|s| s.transitions.iter().map(|t| t.upper))
                    .collect();
                let uppers_b: HashSet<RoState> = b
                    .iter()
                    .flat_map(|s| s.transitions.iter().map(|t| t.upper))
                    .collect();
                assert!(uppers_a.is_disjoint(&uppers_b));
                assert_eq!(uppers_a.len() + uppers_b.len(), total_transitions(jm, om));
            }
        }
    }

    #[test]
    fn sequence_a_never_feeds_stretched_states() {
        for om in 0..=3 {
            for jm in ((om + 2)..=30).step_by(2) {
                for step in schedule(Scheme::SeqA, jm, om).unwrap() {
                    for t in &step.transitions {
                        assert!(!t.lower.is_corner() || t.lower.is_ground_level(), "{t}");
                    }
                }
            }
        }
    }

    #[test]
    fn empty_when_nothing_to_cool() {
        assert!(schedule(Scheme::Combined, 0, 0).unwrap().is_empty());
        assert_eq!(step_count(Scheme::PiOnly, 1, 1).unwrap(), 0);
    }
}
