//! Stage-by-stage rate-equation evolution of a population under a
//! [`CoolingPlan`].
//!
//! During a stage the resonant transitions relax in closed form: each upper
//! state decays at Γ_c(n̄+1) and is re-excited from its lower state at Γ_c n̄.
//! Everything else is frozen unless off-resonant leakage is requested, in
//! which case the remaining states exchange population at their free-space
//! rates through small explicit Euler sub-steps.

use std::collections::BTreeMap;

use crate::cavity::{free_space_coefficient, thermal_occupation};
use crate::error::{Error, Result};
use crate::num::{from_int, lit, ratio_to, Real};
use crate::planner::{CoolingPlan, TuningStep};
use crate::spectroscopy::{
    line_strength_g, rotational_energy, LineStrengthMode, PopulationState, RoState, Transition,
};
use crate::units::MolecularSpecies;

/// Thermal photon occupation used for the cavity mode.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum NbarMode {
    #[default]
    Zero,
    /// Planck occupation at [`SimOptions::temperature`].
    Planck,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SimOptions<T> {
    pub nbar_mode: NbarMode,
    pub include_offresonant: bool,
    /// K; used by [`NbarMode::Planck`] and the off-resonant occupations.
    pub temperature: T,
    /// Extra snapshots per stage, evenly spaced.
    pub record_interior_points: usize,
    pub line_strength: LineStrengthMode,
}

impl<T: Real> Default for SimOptions<T> {
    fn default() -> Self {
        Self {
            nbar_mode: NbarMode::Zero,
            include_offresonant: false,
            temperature: lit(1.0),
            record_interior_points: 0,
            line_strength: LineStrengthMode::Reference,
        }
    }
}

impl<T: Real> SimOptions<T> {
    fn nbar(&self, lambda: T) -> T {
        match self.nbar_mode {
            NbarMode::Zero => T::zero(),
            NbarMode::Planck => thermal_occupation(lambda, self.temperature),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Snapshot<T> {
    /// 0 for the initial state, k for points during or at the end of stage k.
    pub stage_index: usize,
    pub time: T,
    pub population: PopulationState<T>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StageReport<T> {
    pub step_index: usize,
    /// Summed weight of the step's upper states before and after the stage.
    pub upper_before: T,
    pub upper_after: T,
}

impl<T: Real> StageReport<T> {
    /// upper_after / upper_before, `None` when the stage started empty.
    pub fn residual_fraction(&self) -> Option<T> {
        (self.upper_before > T::zero()).then(|| self.upper_after / self.upper_before)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimulationResult<T> {
    pub timeline: Vec<Snapshot<T>>,
    pub total_time: T,
    pub ground_fraction: T,
    pub per_stage: Vec<StageReport<T>>,
}

impl<T: Real> SimulationResult<T> {
    pub fn final_state(&self) -> &PopulationState<T> {
        &self
            .timeline
            .last()
            .expect("timeline holds the initial state")
            .population
    }
}

/// Summary statistics of a population.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Metrics<T> {
    /// Weight in the J = Ω level.
    pub ground_fraction: T,
    /// Mean energy above the J = Ω level, J.
    pub mean_rotational_energy: T,
    /// −Σ p ln p, nats.
    pub entropy: T,
}

pub fn metrics<T: Real>(pop: &PopulationState<T>, species: &MolecularSpecies<T>) -> Metrics<T> {
    let mut ground = T::zero();
    let mut energy = T::zero();
    let mut entropy = T::zero();
    for (state, &w) in pop.weights() {
        if state.two_j == species.two_omega {
            ground = ground + w;
        }
        energy = energy + w * rotational_energy(species, state);
        if w > T::zero() {
            entropy = entropy - w * w.ln();
        }
    }
    Metrics {
        ground_fraction: ground,
        mean_rotational_energy: energy,
        entropy,
    }
}

/// Resonant transitions grouped by their shared lower state.
fn resonant_groups(step: &TuningStep<impl Real>) -> BTreeMap<RoState, Vec<RoState>> {
    let mut groups: BTreeMap<RoState, Vec<RoState>> = BTreeMap::new();
    for t in &step.transitions {
        groups.entry(t.lower).or_default().push(t.upper);
    }
    groups
}

/// Exact relaxation of k upper states sharing one lower state.
///
/// With a = Γ(n̄+1) and b = Γn̄, the sum U of the uppers relaxes to
/// S·kb/(a+kb) at rate a+kb; differences between uppers decay at rate a.
fn relax_group<T: Real>(
    weights: &mut [T],
    lower: usize,
    uppers: &[usize],
    gamma: T,
    nbar: T,
    dt: T,
) {
    let k = from_int::<T>(uppers.len() as i64);
    let a = gamma * (nbar + T::one());
    let b = gamma * nbar;
    let big_u0 = uppers.iter().fold(T::zero(), |acc, &i| acc + weights[i]);
    let l0 = weights[lower];
    let total = big_u0 + l0;
    let rate = a + k * b;
    let decay = (-rate * dt).exp();
    let (u_inf, l_inf) = if rate > T::zero() {
        (total * k * b / rate, total * a / rate)
    } else {
        (big_u0, l0)
    };
    let big_u = u_inf + (big_u0 - u_inf) * decay;
    let l = l_inf + (l0 - l_inf) * decay;
    let spread = (-a * dt).exp();
    for &i in uppers {
        let w = big_u / k + (weights[i] - big_u0 / k) * spread;
        weights[i] = w.max(T::zero());
    }
    weights[lower] = l.max(T::zero());
}

/// Off-resonant channels as (from, to, rate) over the population's states.
fn leakage_channels<T: Real>(
    pop: &PopulationState<T>,
    step: &TuningStep<T>,
    species: &MolecularSpecies<T>,
    opts: &SimOptions<T>,
) -> Vec<(RoState, RoState, T)> {
    let resonant: Vec<RoState> = step
        .transitions
        .iter()
        .flat_map(|t| [t.upper, t.lower])
        .collect();
    let free = |s: &RoState| pop.contains(s) && !resonant.contains(s);
    let mut channels = Vec::new();
    for upper in pop.states().filter(|s| free(s)) {
        for q in -1..=1 {
            let Some(t) = Transition::new(*upper, q) else {
                continue;
            };
            if !free(&t.lower) {
                continue;
            }
            let g = ratio_to::<T>(line_strength_g(&t, opts.line_strength));
            if g <= T::zero() {
                continue;
            }
            let j = from_int::<T>(i64::from(upper.two_j)) / lit(2.0);
            let lambda = T::one() / (j * species.spacing_quantum());
            let gamma = free_space_coefficient(species, lambda) * g;
            let nbar = opts.nbar(lambda);
            channels.push((t.upper, t.lower, gamma * (nbar + T::one())));
            if nbar > T::zero() {
                channels.push((t.lower, t.upper, gamma * nbar));
            }
        }
    }
    channels
}

fn evolve_for<T: Real>(
    pop: &PopulationState<T>,
    step: &TuningStep<T>,
    species: &MolecularSpecies<T>,
    opts: &SimOptions<T>,
    duration: T,
) -> PopulationState<T> {
    let mut next = pop.clone();
    if duration <= T::zero() {
        return next;
    }
    let index: BTreeMap<RoState, usize> = pop.states().enumerate().map(|(i, s)| (*s, i)).collect();
    let groups: Vec<(usize, Vec<usize>)> = resonant_groups(step)
        .into_iter()
        .map(|(lower, uppers)| (index[&lower], uppers.iter().map(|u| index[u]).collect()))
        .collect();
    let nbar = opts.nbar(step.lambda_c);
    let channels: Vec<(usize, usize, T)> = if opts.include_offresonant {
        leakage_channels(pop, step, species, opts)
            .into_iter()
            .map(|(from, to, rate)| (index[&from], index[&to], rate))
            .collect()
    } else {
        Vec::new()
    };
    let mut outflow = vec![T::zero(); index.len()];
    for &(from, _, rate) in &channels {
        outflow[from] = outflow[from] + rate;
    }
    let max_rate = outflow.iter().fold(T::zero(), |a, &r| a.max(r));
    let substeps = if max_rate > T::zero() {
        (duration * max_rate / lit(0.01))
            .ceil()
            .to_usize()
            .unwrap_or(1)
            .max(1)
    } else {
        1
    };
    let dt = duration / from_int(substeps as i64);
    let mut weights: Vec<T> = pop.weights().values().copied().collect();
    let mut delta = vec![T::zero(); weights.len()];
    for _ in 0..substeps {
        for (lower, uppers) in &groups {
            relax_group(&mut weights, *lower, uppers, step.gamma_cavity, nbar, dt);
        }
        if !channels.is_empty() {
            delta.iter_mut().for_each(|d| *d = T::zero());
            for &(from, to, rate) in &channels {
                let moved = weights[from] * rate * dt;
                delta[from] = delta[from] - moved;
                delta[to] = delta[to] + moved;
            }
            for (w, d) in weights.iter_mut().zip(&delta) {
                *w = (*w + *d).max(T::zero());
            }
        }
    }
    for (slot, w) in next.weights_mut().values_mut().zip(weights) {
        *slot = w;
    }
    next
}

/// Evolves `pop` through one tuning stage of length `step.duration`.
///
/// Every state the step touches must be present in `pop`.
pub fn stage_evolve<T: Real>(
    pop: &PopulationState<T>,
    step: &TuningStep<T>,
    species: &MolecularSpecies<T>,
    opts: &SimOptions<T>,
) -> PopulationState<T> {
    evolve_for(pop, step, species, opts, step.duration)
}

fn upper_weight<T: Real>(pop: &PopulationState<T>, step: &TuningStep<T>) -> T {
    step.transitions
        .iter()
        .fold(T::zero(), |a, t| a + pop.weight(&t.upper))
}

/// Runs every stage of `plan` in order starting from `initial`.
pub fn simulate<T: Real>(
    plan: &CoolingPlan<T>,
    initial: &PopulationState<T>,
    opts: &SimOptions<T>,
) -> Result<SimulationResult<T>> {
    if let Some(missing) = plan
        .touched_states()
        .into_iter()
        .find(|s| !initial.contains(s))
    {
        return Err(Error::StateSpaceMismatch(missing.to_string()));
    }
    let mut timeline = vec![Snapshot {
        stage_index: 0,
        time: T::zero(),
        population: initial.clone(),
    }];
    let mut per_stage = Vec::with_capacity(plan.steps.len());
    let mut pop = initial.clone();
    let mut time = T::zero();
    let segments = opts.record_interior_points + 1;
    for (index, step) in plan.steps.iter().enumerate() {
        let before = upper_weight(&pop, step);
        let seg = step.duration / from_int(segments as i64);
        for k in 0..segments {
            pop = evolve_for(&pop, step, &plan.species, opts, seg);
            let t = if k + 1 == segments {
                time + step.duration
            } else {
                time + seg * from_int((k + 1) as i64)
            };
            timeline.push(Snapshot {
                stage_index: index + 1,
                time: t,
                population: pop.clone(),
            });
        }
        time = time + step.duration;
        per_stage.push(StageReport {
            step_index: index,
            upper_before: before,
            upper_after: upper_weight(&pop, step),
        });
    }
    let ground_fraction = metrics(&pop, &plan.species).ground_fraction;
    Ok(SimulationResult {
        timeline,
        total_time: time,
        ground_fraction,
        per_stage,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::planner::{build_plan, PlanOptions, Scheme};
    use crate::spectroscopy::{enumerate_states, thermal_state};
    use crate::units::lookup_species;

    fn csf() -> MolecularSpecies<f64> {
        lookup_species("CsF").unwrap()
    }

    fn top_state(plan: &CoolingPlan<f64>) -> PopulationState<f64> {
        let states = enumerate_states(&plan.species, plan.two_j_max).unwrap();
        let top = RoState::new(0, plan.two_j_max, 0, 0).unwrap();
        PopulationState::delta(&states, top).unwrap()
    }

    #[test]
    fn residual_after_four_lifetimes() {
        let s = csf();
        let plan = build_plan(&s, Scheme::PiOnly, 10, &PlanOptions::default()).unwrap();
        let pop = top_state(&plan);
        let next = stage_evolve(&pop, &plan.steps[0], &s, &SimOptions::default());
        let top = RoState::new(0, 10, 0, 0).unwrap();
        assert!((next.weight(&top) - (-4.0f64).exp()).abs() < 1e-12);
        assert!((next.total() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn zero_duration_is_identity() {
        let s = csf();
        let plan = build_plan(&s, Scheme::PiOnly, 10, &PlanOptions::default()).unwrap();
        let mut step = plan.steps[0].clone();
        step.duration = 0.0;
        let pop = thermal_state(&s, 1.0, 10).unwrap();
        assert_eq!(stage_evolve(&pop, &step, &s, &SimOptions::default()), pop);
    }

    #[test]
    fn thermal_steady_state() {
        let s = csf();
        let plan = build_plan(&s, Scheme::PiOnly, 4, &PlanOptions::default()).unwrap();
        let mut step = plan.steps[0].clone();
        step.duration = 1e4 / step.gamma_cavity;
        let opts = SimOptions {
            nbar_mode: NbarMode::Planck,
            temperature: 4.0,
            ..SimOptions::default()
        };
        let nbar = thermal_occupation(step.lambda_c, 4.0);
        let pop = top_state(&plan);
        let next = stage_evolve(&pop, &step, &s, &opts);
        let t = step.transitions[0];
        let frac = next.weight(&t.upper) / (next.weight(&t.upper) + next.weight(&t.lower));
        assert!((frac - nbar / (2.0 * nbar + 1.0)).abs() < 1e-9);
    }

    #[test]
    fn shared_lower_state_conserves() {
        let s = csf();
        let plan = build_plan(&s, Scheme::SeqA, 6, &PlanOptions::default()).unwrap();
        let step = plan
            .steps
            .iter()
            .find(|st| {
                st.transitions.len() == 2 && st.transitions[0].lower == st.transitions[1].lower
            })
            .expect("σ pair into M = 0")
            .clone();
        let pop = thermal_state(&s, 5.0, 6).unwrap();
        let opts = SimOptions {
            nbar_mode: NbarMode::Planck,
            temperature: 4.0,
            ..SimOptions::default()
        };
        let next = stage_evolve(&pop, &step, &s, &opts);
        assert!((next.total() - 1.0).abs() < 1e-12);
        assert!(next.is_valid());
    }

    #[test]
    fn simulate_pi_cascade() {
        let s = csf();
        let plan = build_plan(&s, Scheme::PiOnly, 10, &PlanOptions::default()).unwrap();
        let result = simulate(&plan, &top_state(&plan), &SimOptions::default()).unwrap();
        assert_eq!(result.timeline.len(), 6);
        assert!((result.total_time - plan.total_duration()).abs() < 1e-9);
        assert!(result.ground_fraction > 0.90, "{}", result.ground_fraction);
    }

    #[test]
    fn empty_plan() {
        let s = csf();
        let plan = build_plan(&s, Scheme::PiOnly, 0, &PlanOptions::default()).unwrap();
        let pop = thermal_state(&s, 1.0, 0).unwrap();
        let result = simulate(&plan, &pop, &SimOptions::default()).unwrap();
        assert_eq!(result.total_time, 0.0);
        assert_eq!(result.final_state(), &pop);
    }

    #[test]
    fn mismatched_state_space() {
        let s = csf();
        let plan = build_plan(&s, Scheme::PiOnly, 10, &PlanOptions::default()).unwrap();
        let pop = thermal_state(&s, 1.0, 4).unwrap();
        assert!(matches!(
            simulate(&plan, &pop, &SimOptions::default()),
            Err(Error::StateSpaceMismatch(_))
        ));
    }

    #[test]
    fn metrics_basics() {
        let s = csf();
        let states = enumerate_states(&s, 4).unwrap();
        let ground = RoState::new(0, 0, 0, 0).unwrap();
        let m = metrics(&PopulationState::<f64>::delta(&states, ground).unwrap(), &s);
        assert_eq!(m.ground_fraction, 1.0);
        assert_eq!(m.entropy, 0.0);
        assert_eq!(m.mean_rotational_energy, 0.0);
        let uniform = PopulationState::<f64>::uniform_over(&states, &states).unwrap();
        let m = metrics(&uniform, &s);
        assert!((m.entropy - 9f64.ln()).abs() < 1e-12);
    }

    #[test]
    fn offresonant_leakage_conserves() {
        let s = lookup_species::<f64>("OH").unwrap();
        let opts_plan = PlanOptions {
            q_factor: 1e3,
            ..PlanOptions::default()
        };
        let plan = build_plan(&s, Scheme::PiOnly, 9, &opts_plan).unwrap();
        let pop = thermal_state(&s, 20.0, 9).unwrap();
        let opts = SimOptions {
            include_offresonant: true,
            ..SimOptions::default()
        };
        let result = simulate(&plan, &pop, &opts).unwrap();
        for snap in &result.timeline {
            assert!((snap.population.total() - 1.0).abs() < 1e-9);
            assert!(snap.population.weights().values().all(|w| *w >= 0.0));
        }
        let frozen = simulate(&plan, &pop, &SimOptions::default()).unwrap();
        assert!(result.ground_fraction > frozen.ground_fraction);
    }

    #[test]
    fn interior_points() {
        let s = csf();
        let plan = build_plan(&s, Scheme::PiOnly, 6, &PlanOptions::default()).unwrap();
        let opts = SimOptions {
            record_interior_points: 3,
            ..SimOptions::default()
        };
        let result = simulate(&plan, &top_state(&plan), &opts).unwrap();
        assert_eq!(result.timeline.len(), 1 + 3 * 4);
        assert!(result.timeline.windows(2).all(|w| w[1].time > w[0].time));
        let plain = simulate(&plan, &top_state(&plan), &SimOptions::default()).unwrap();
        assert!((plain.ground_fraction - result.ground_fraction).abs() < 1e-12);
    }
}
