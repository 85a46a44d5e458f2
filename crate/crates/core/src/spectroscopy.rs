//! Rotational/Zeeman level structure of a diatomic rotor: state enumeration,
//! rovibrational energies, thermal populations, quadratic Stark coefficients
//! and dipole line-strength factors.
//!
//! Angular momenta are stored doubled (`two_j = 2J`) so half-integer Ω
//! manifolds use the same integer arithmetic as integer ones.

use std::collections::BTreeMap;
use std::fmt;

use crate::error::{Error, Result};
use crate::num::{from_int, lit, ratio_to, Rational, Real};
use crate::units::{MolecularSpecies, PhysicalConstants};

/// Formats a doubled quantum number as an integer or `k/2`.
pub fn half(x: i32) -> String {
    if x % 2 == 0 {
        format!("{}", x / 2)
    } else {
        format!("{x}/2")
    }
}

/// One rotational/Zeeman state |n; J, M⟩ in an Ω manifold.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct RoState {
    pub n: u32,
    pub two_j: i32,
    pub two_m: i32,
    pub two_omega: i32,
}

impl RoState {
    /// Returns `None` unless J ≥ Ω ≥ 0, |M| ≤ J and the parities agree.
    pub fn new(n: u32, two_j: i32, two_m: i32, two_omega: i32) -> Option<Self> {
        let ok = two_omega >= 0
            && two_j >= two_omega
            && two_m.abs() <= two_j
            && (two_m - two_j) % 2 == 0
            && (two_j - two_omega) % 2 == 0;
        ok.then_some(Self {
            n,
            two_j,
            two_m,
            two_omega,
        })
    }

    pub fn j(&self) -> f64 {
        f64::from(self.two_j) / 2.0
    }

    pub fn m(&self) -> f64 {
        f64::from(self.two_m) / 2.0
    }

    /// Stretched state |J, ±J⟩.
    pub fn is_corner(&self) -> bool {
        self.two_m.abs() == self.two_j
    }

    /// Member of the lowest rotational level J = Ω.
    pub fn is_ground_level(&self) -> bool {
        self.two_j == self.two_omega
    }

    pub fn mirrored(&self) -> Self {
        Self {
            two_m: -self.two_m,
            ..*self
        }
    }
}

impl fmt::Display for RoState {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "|{},{}>", half(self.two_j), half(self.two_m))
    }
}

/// Downward dipole transition |J,M⟩ → |J−1, M−q⟩.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Transition {
    pub upper: RoState,
    pub lower: RoState,
    pub q: i8,
}

impl Transition {
    /// Builds the transition leaving `upper` with polarization `q`, if the
    /// lower state exists in the same Ω manifold.
    pub fn new(upper: RoState, q: i8) -> Option<Self> {
        if !(-1..=1).contains(&q) {
            return None;
        }
        let lower = RoState::new(
            upper.n,
            upper.two_j - 2,
            upper.two_m - 2 * i32::from(q),
            upper.two_omega,
        )?;
        Some(Self { upper, lower, q })
    }

    /// M → −M partner; shares the Stark coefficient and line strength.
    pub fn mirrored(&self) -> Self {
        Self {
            upper: self.upper.mirrored(),
            lower: self.lower.mirrored(),
            q: -self.q,
        }
    }

    /// True when the mirror partner is the same transition (M = 0, π).
    pub fn is_self_mirror(&self) -> bool {
        self.upper.two_m == 0 && self.q == 0
    }

    pub fn is_pi(&self) -> bool {
        self.q == 0
    }
}

impl fmt::Display for Transition {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} -> {}", self.upper, self.lower)
    }
}

/// Probability distribution over rotational states.
#[derive(Debug, Clone, PartialEq)]
pub struct PopulationState<T> {
    weights: BTreeMap<RoState, T>,
}

impl<T: Real> PopulationState<T> {
    /// Accepts non-negative weights summing to one.
    pub fn new(weights: BTreeMap<RoState, T>) -> Option<Self> {
        let state = Self { weights };
        state.is_valid().then_some(state)
    }

    /// Normalizes arbitrary non-negative weights.
    pub fn normalized(mut weights: BTreeMap<RoState, T>) -> Option<Self> {
        let total = weights.values().fold(T::zero(), |a, &w| a + w);
        if total.is_nan() || total <= T::zero() || weights.values().any(|w| *w < T::zero()) {
            return None;
        }
        for w in weights.values_mut() {
            *w = *w / total;
        }
        Self::new(weights)
    }

    /// All weight in a single state of `states`.
    pub fn delta(states: &[RoState], occupied: RoState) -> Option<Self> {
        if !states.contains(&occupied) {
            return None;
        }
        let weights = states
            .iter()
            .map(|s| (*s, if *s == occupied { T::one() } else { T::zero() }))
            .collect();
        Self::new(weights)
    }

    /// Equal weight over the `occupied` subset of `states`.
    pub fn uniform_over(states: &[RoState], occupied: &[RoState]) -> Option<Self> {
        let weights = states
            .iter()
            .map(|s| {
                (
                    *s,
                    if occupied.contains(s) {
                        T::one()
                    } else {
                        T::zero()
                    },
                )
            })
            .collect();
        Self::normalized(weights)
    }

    /// Tolerance on Σw = 1: 1e-12 in f64, scaled up for narrower floats.
    pub fn sum_tolerance(len: usize) -> T {
        let eps_based = T::epsilon() * from_int::<T>(8 * len.max(1) as i64);
        lit::<T>(1e-12).max(eps_based)
    }

    pub fn is_valid(&self) -> bool {
        self.weights
            .values()
            .all(|w| w.is_finite() && *w >= T::zero())
            && (self.total() - T::one()).abs() <= Self::sum_tolerance(self.weights.len())
    }

    pub fn total(&self) -> T {
        self.weights.values().fold(T::zero(), |a, &w| a + w)
    }

    pub fn weight(&self, state: &RoState) -> T {
        self.weights.get(state).copied().unwrap_or_else(T::zero)
    }

    pub fn contains(&self, state: &RoState) -> bool {
        self.weights.contains_key(state)
    }

    pub fn weights(&self) -> &BTreeMap<RoState, T> {
        &self.weights
    }

    pub fn states(&self) -> impl Iterator<Item = &RoState> {
        self.weights.keys()
    }

    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }

    /// Summed weight of the level with the given 2J.
    pub fn level_weight(&self, two_j: i32) -> T {
        self.weights
            .iter()
            .filter(|(s, _)| s.two_j == two_j)
            .fold(T::zero(), |a, (_, &w)| a + w)
    }

    /// Mutable access for the dynamics module, which re-validates.
    pub(crate) fn weights_mut(&mut self) -> &mut BTreeMap<RoState, T> {
        &mut self.weights
    }
}

fn check_two_j_max(two_omega: i32, two_j_max: i32) -> Result<()> {
    if two_j_max < two_omega {
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

/// All n = 0 states with Ω ≤ J ≤ J_max, ordered by J then M.
pub fn enumerate_states<T: Real>(
    species: &MolecularSpecies<T>,
    two_j_max: i32,
) -> Result<Vec<RoState>> {
    enumerate_manifold(species.two_omega, two_j_max)
}

/// [`enumerate_states`] keyed on 2Ω alone.
pub fn enumerate_manifold(two_omega: i32, two_j_max: i32) -> Result<Vec<RoState>> {
    check_two_j_max(two_omega, two_j_max)?;
    let mut states = Vec::new();
    for two_j in (two_omega..=two_j_max).step_by(2) {
        for two_m in (-two_j..=two_j).step_by(2) {
            states.push(RoState::new(0, two_j, two_m, two_omega).expect("valid by construction"));
        }
    }
    Ok(states)
}

/// Term value (m⁻¹) of level (n, J) including electronic and vibrational parts.
pub fn rovib_term<T: Real>(species: &MolecularSpecies<T>, n: u32, two_j: i32) -> T {
    let v = from_int::<T>(i64::from(n)) + lit(0.5);
    let j2 = i64::from(two_j);
    let om = i64::from(species.two_omega);
    // J(J+1) − Ω² = (2J(2J+2) − (2Ω)²)/4
    let rot = from_int::<T>(j2 * (j2 + 2) - om * om) / lit(4.0);
    species.te + species.omega_e * v - species.omega_e_x_e * v * v
        + (species.b_e - species.alpha_e * v) * rot
}

/// Rovibrational energy in joules.
pub fn rovib_energy<T: Real>(species: &MolecularSpecies<T>, n: u32, two_j: i32) -> T {
    PhysicalConstants::<T>::codata().hc() * rovib_term(species, n, two_j)
}

/// Energy above the lowest rotational level of the n = 0 manifold, joules.
pub fn rotational_energy<T: Real>(species: &MolecularSpecies<T>, state: &RoState) -> T {
    let hc = PhysicalConstants::<T>::codata().hc();
    hc * (rovib_term(species, state.n, state.two_j) - rovib_term(species, 0, species.two_omega))
}

/// Boltzmann ensemble at temperature `t_kelvin` over the enumerated states.
///
/// Each level carries weight (2J+1)·exp(−E/k_BT), spread evenly over its M
/// sublevels.
pub fn thermal_state<T: Real>(
    species: &MolecularSpecies<T>,
    t_kelvin: T,
    two_j_max: i32,
) -> Result<PopulationState<T>> {
    if t_kelvin.is_nan() || t_kelvin <= T::zero() {
        return Err(Error::NonPositiveTemperature(
            t_kelvin.to_f64().unwrap_or(f64::NAN),
        ));
    }
    let states = enumerate_states(species, two_j_max)?;
    let k = PhysicalConstants::<T>::codata();
    let ground = rovib_term(species, 0, species.two_omega);
    let weights = states
        .iter()
        .map(|s| {
            let e = k.hc() * (rovib_term(species, s.n, s.two_j) - ground);
            (*s, (-e / (k.k_b * t_kelvin)).exp())
        })
        .collect();
    Ok(PopulationState::normalized(weights).expect("Boltzmann weights are positive"))
}

/// Second-order Stark coefficient f_{J,M}.
///
/// General form [J(J+1) − 3M²] / [J(J+1)(2J−1)(2J+3)]. For stretched states
/// |M| = J this reduces to −1/((J+1)(2J+3)), which is also used where the
/// general form is 0/0 (J = 0 and J = 1/2).
pub fn stark_f(two_j: i32, two_m: i32) -> Rational {
    let j2 = i64::from(two_j);
    let m2 = i64::from(two_m);
    if m2.abs() == j2 {
        return Rational::new(-2, (j2 + 2) * (j2 + 3));
    }
    Rational::new(
        j2 * (j2 + 2) - 3 * m2 * m2,
        j2 * (j2 + 2) * (j2 - 1) * (j2 + 3),
    )
}

/// f_{J,M} − f_{J−1,M−q}.
pub fn delta_f(t: &Transition) -> Rational {
    stark_f(t.upper.two_j, t.upper.two_m) - stark_f(t.lower.two_j, t.lower.two_m)
}

/// Closed form of Δf for |J,±J⟩ → |J−1,±(J−1)⟩: (4J+3)/((2J+1)(2J+3)J(J+1)).
pub fn corner_delta_f(two_j: i32) -> Rational {
    let j = Rational::new(i64::from(two_j), 2);
    let one = Rational::from_integer(1);
    let two = Rational::from_integer(2);
    (Rational::from_integer(4) * j + Rational::from_integer(3))
        / ((two * j + one) * (two * j + Rational::from_integer(3)) * j * (j + one))
}

/// Energy separation (J) of the transition's levels in a static field `e_field` (V/m).
pub fn stark_spacing<T: Real>(
    species: &MolecularSpecies<T>,
    n: u32,
    t: &Transition,
    e_field: T,
) -> T {
    let hc = PhysicalConstants::<T>::codata().hc();
    hc * stark_spacing_term(species, n, t, e_field)
}

/// [`stark_spacing`] divided by hc, in m⁻¹.
pub fn stark_spacing_term<T: Real>(
    species: &MolecularSpecies<T>,
    n: u32,
    t: &Transition,
    e_field: T,
) -> T {
    let hc = PhysicalConstants::<T>::codata().hc();
    let v = from_int::<T>(i64::from(n)) + lit(0.5);
    let zero_field = from_int::<T>(i64::from(t.upper.two_j)) * (species.b_e - species.alpha_e * v);
    let x = species.dipole * e_field / hc;
    zero_field + x * x * ratio_to::<T>(delta_f(t)) / (lit::<T>(2.0) * species.b_e)
}

/// Which σ line-strength expression to use.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum LineStrengthMode {
    /// π: (J+M)(J−M)/((2J−1)(2J+1)); σ: (J±M+1)(J±M+2)/((2J−1)(2J+1)), + for q = +1.
    #[default]
    Reference,
    /// Normalized Hönl-London factors; Σ_q g = J/(2J+1).
    SumRule,
}

/// Angular factor g(J,M) of the squared transition dipole, upper-state J and M.
pub fn line_strength_g(t: &Transition, mode: LineStrengthMode) -> Rational {
    let j2 = i64::from(t.upper.two_j);
    let m2 = i64::from(t.upper.two_m);
    let denom = (j2 - 1) * (j2 + 1);
    let signed = j2 + i64::from(t.q).signum() * m2;
    match (t.q, mode) {
        (0, _) => Rational::new((j2 + m2) * (j2 - m2), 4 * denom),
        (_, LineStrengthMode::Reference) => Rational::new((signed + 2) * (signed + 4), 4 * denom),
        (_, LineStrengthMode::SumRule) => Rational::new(signed * (signed - 2), 8 * denom),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::units::lookup_species;

    fn csf() -> MolecularSpecies<f64> {
        lookup_species("CsF").unwrap()
    }

    fn oh() -> MolecularSpecies<f64> {
        lookup_species("OH").unwrap()
    }

    fn st(two_j: i32, two_m: i32, two_omega: i32) -> RoState {
        RoState::new(0, two_j, two_m, two_omega).unwrap()
    }

    fn tr(two_j: i32, two_m: i32, q: i8, two_omega: i32) -> Transition {
        Transition::new(st(two_j, two_m, two_omega), q).unwrap()
    }

    #[test]
    fn state_invariants() {
        assert!(RoState::new(0, 2, 1, 0).is_none());
        assert!(RoState::new(0, 1, 1, 0).is_none());
        assert!(RoState::new(0, 2, 4, 0).is_none());
        assert!(RoState::new(0, 1, -1, 1).is_some());
        assert_eq!(st(3, -1, 1).to_string(), "|3/2,-1/2>");
    }

    #[test]
    fn transition_needs_lower_state() {
        assert!(Transition::new(st(2, 2, 0), 0).is_none());
        assert!(Transition::new(st(2, 2, 0), 1).is_some());
        assert!(Transition::new(st(0, 0, 0), 0).is_none());
        let t = tr(4, 2, 1, 0);
        assert_eq!(t.lower, st(2, 0, 0));
        assert_eq!(t.mirrored(), tr(4, -2, -1, 0));
    }

    #[test]
    fn enumerate_counts() {
        assert_eq!(enumerate_states(&csf(), 4).unwrap().len(), 9);
        let oh_states = enumerate_states(&oh(), 3).unwrap();
        assert_eq!(oh_states.len(), 6);
        assert!(oh_states.iter().all(|s| s.two_j % 2 == 1));
        assert!(enumerate_states(&oh(), -1).is_err());
        assert!(matches!(
            enumerate_states(&csf(), 9),
            Err(Error::Parity { .. })
        ));
        let ordered = enumerate_states(&csf(), 6).unwrap();
        assert!(ordered.windows(2).all(|w| w[0] < w[1]));
    }

    #[test]
    fn rotational_part_of_energy() {
        let k = PhysicalConstants::<f64>::codata();
        let s = csf();
        let e = rovib_energy(&s, 0, 2) - rovib_energy(&s, 0, 0);
        let expected = k.hc() * 36.762; // (B_e − α_e/2)·2 = 0.36762 cm⁻¹
        assert!((e / expected - 1.0).abs() < 1e-12);
        let d = rovib_energy(&s, 0, 10) - rovib_energy(&s, 0, 0);
        assert!((d / (k.hc() * 30.0 * (18.44 - 0.059)) - 1.0).abs() < 1e-12);
        assert_eq!(rotational_energy(&s, &st(0, 0, 0)), 0.0);
    }

    #[test]
    fn thermal_ratio_csf_one_kelvin() {
        let s = csf();
        let pop = thermal_state(&s, 1.0, 20).unwrap();
        let ratio = pop.level_weight(2) / pop.level_weight(0);
        // Boltzmann oracle with hc/k_B = 1.438777 cm·K
        let oracle = 3.0 * (-(0.36762_f64 * 1.438_776_877)).exp();
        assert!((ratio - oracle).abs() < 1e-6, "{ratio} vs {oracle}");
        assert!((ratio - 1.77).abs() < 0.01);
    }

    #[test]
    fn thermal_high_temperature_limit() {
        let pop = thermal_state(&csf(), 1e9, 4).unwrap();
        let ratio = pop.level_weight(2) / pop.level_weight(0);
        assert!((ratio - 3.0).abs() < 1e-6);
        assert!(thermal_state(&csf(), 0.0, 4).is_err());
        assert!(thermal_state(&csf(), -1.0, 4).is_err());
    }

    #[test]
    fn stark_f_values() {
        assert_eq!(stark_f(2, 0), Rational::new(1, 5));
        assert_eq!(stark_f(2, 2), Rational::new(-1, 10));
        assert_eq!(stark_f(0, 0), Rational::new(-1, 3));
        assert_eq!(stark_f(1, 1), Rational::new(-1, 6));
        // general formula agrees with the stretched form where both apply
        assert_eq!(stark_f(4, 4), Rational::new(4 * 6 - 3 * 16, 4 * 6 * 3 * 7));
    }

    #[test]
    fn delta_f_values() {
        assert_eq!(
            delta_f(&tr(4, 0, 0, 0)),
            Rational::new(1, 21) - Rational::new(1, 5)
        );
        assert!((ratio_to::<f64>(delta_f(&tr(4, 0, 0, 0))) + 0.152381).abs() < 1e-6);
        assert_eq!(delta_f(&tr(2, 2, 1, 0)), Rational::new(7, 30));
        let t = tr(6, 2, 1, 0);
        assert_eq!(delta_f(&t), delta_f(&t.mirrored()));
    }

    #[test]
    fn corner_closed_form_all_parities() {
        for two_j in 2..=30 {
            let t = tr(two_j, two_j, 1, two_j % 2);
            assert_eq!(delta_f(&t), corner_delta_f(two_j), "2J = {two_j}");
        }
    }

    #[test]
    fn zero_field_spacing() {
        let s = csf();
        let k = PhysicalConstants::<f64>::codata();
        let t = tr(2, 0, 0, 0);
        let e = stark_spacing(&s, 0, &t, 0.0);
        assert!((e / (k.hc() * 2.0 * (18.44 - 0.059)) - 1.0).abs() < 1e-12);
    }

    #[test]
    fn line_strengths() {
        let m = LineStrengthMode::Reference;
        assert_eq!(line_strength_g(&tr(2, 0, 0, 0), m), Rational::new(1, 3));
        for two_j in (2..=20).step_by(2) {
            let j = i64::from(two_j / 2);
            assert_eq!(
                line_strength_g(&tr(two_j, 0, 0, 0), m),
                Rational::new(j * j, (2 * j - 1) * (2 * j + 1))
            );
        }
        for two_j in (3..=21).step_by(2) {
            assert_eq!(line_strength_g(&tr(two_j, 1, 0, 1), m), Rational::new(1, 4));
            assert_eq!(
                line_strength_g(&tr(two_j, -1, 0, 1), m),
                Rational::new(1, 4)
            );
        }
        // printed σ factor exceeds one at the first corner
        assert_eq!(
            line_strength_g(&tr(2, 2, 1, 0), m),
            Rational::from_integer(4)
        );
    }

    #[test]
    fn sum_rule_mode_sums_to_hl_total() {
        for two_omega in 0..=3 {
            for two_j in ((two_omega + 2)..=24).step_by(2) {
                for two_m in (-two_j..=two_j).step_by(2) {
                    let up = st(two_j, two_m, two_omega);
                    let total: Rational = (-1..=1)
                        .filter_map(|q| Transition::new(up, q))
                        .map(|t| line_strength_g(&t, LineStrengthMode::SumRule))
                        .sum();
                    let j2 = i64::from(two_j);
                    assert_eq!(total, Rational::new(j2, 2 * (j2 + 1)), "{up}");
                }
            }
        }
    }
}
