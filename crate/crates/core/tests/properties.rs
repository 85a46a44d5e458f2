use proptest::prelude::*;
use rotocool::cavity::{
    confocal_geometry, enhancement_from_volume, free_space_rate, purcell_rate, purcell_rate_direct,
};
use rotocool::dynamics::{metrics, simulate, NbarMode, SimOptions};
use rotocool::planner::{
    build_plan, cavity_wavelength, tuning_field, CavityRole, PlanOptions, Scheme,
};
use rotocool::spectroscopy::{
    enumerate_states, stark_f, stark_spacing, thermal_state, LineStrengthMode, RoState, Transition,
};
use rotocool::units::{codata, ingest_species, lookup_species, RawSpecies};
use rotocool::{Cavity, Population, Species};

fn species_strategy() -> impl Strategy<Value = Species> {
    (
        0.05f64..25.0,
        0.0f64..0.05,
        0.3f64..10.0,
        0u32..4,
        5.0f64..250.0,
    )
        .prop_map(|(be_cm, alpha_frac, dipole_debye, omega_x2, mass_amu)| {
            ingest_species(&RawSpecies {
                name: "p".into(),
                mass_amu,
                omega_x2,
                te_cm: 0.0,
                we_cm: 500.0,
                wexe_cm: 2.0,
                be_cm,
                alpha_e_cm: alpha_frac * be_cm,
                dipole_debye,
                reduced_dipole_debye: None,
            })
            .unwrap()
        })
}

fn scheme_strategy() -> impl Strategy<Value = Scheme> {
    prop::sample::select(Scheme::ALL.to_vec())
}

fn named() -> impl Strategy<Value = Species> {
    prop::sample::select(vec!["CsF", "OH"]).prop_map(|n| lookup_species(n).unwrap())
}

proptest! {
    #[test]
    fn stark_f_even_in_m(two_j in 0i32..40, k in 0i32..40) {
        let two_m = two_j - 2 * (k % (two_j + 1));
        prop_assert_eq!(stark_f(two_j, two_m), stark_f(two_j, -two_m));
    }

    #[test]
    fn resonance_round_trip(
        s in species_strategy(),
        dj in 1i32..12,
        pick in 0usize..1000,
        q in -1i8..=1,
        role_b in any::<bool>(),
    ) {
        let two_j = s.two_omega + 2 * dj;
        let two_m = two_j - 2 * (pick as i32 % (two_j + 1));
        let up = RoState::new(0, two_j, two_m, s.two_omega).unwrap();
        let Some(t) = Transition::new(up, q) else { return Ok(()); };
        let role = if role_b { CavityRole::B } else { CavityRole::A };
        let two_j_max = two_j + 2 * (pick as i32 % 3);
        let lambda = cavity_wavelength(&s, role, two_j_max);
        if let Ok(e) = tuning_field(&s, lambda, &t) {
            let hc = codata::H * codata::C;
            let got = stark_spacing(&s, 0, &t, e);
            prop_assert!((got / (hc / lambda) - 1.0).abs() < 1e-9);
            let mirror = tuning_field(&s, lambda, &t.mirrored()).unwrap();
            prop_assert_eq!(mirror, e);
        }
    }

    #[test]
    fn volume_and_rate_forms_agree(s in 1u32..20, log_q in 2.0f64..8.0, lambda in 1e-4f64..1.0) {
        let cfg = Cavity::new(s, 10f64.powf(log_q), lambda).unwrap();
        let [a, b, c] = cfg.volume_forms();
        prop_assert!((a / b - 1.0).abs() < 1e-12);
        prop_assert!((a / c - 1.0).abs() < 1e-12);
        let geom = confocal_geometry(&cfg);
        let eta = enhancement_from_volume(lambda, cfg.q_factor, geom.volume);
        prop_assert!((eta / geom.eta - 1.0).abs() < 1e-12);

        let species = lookup_species::<f64>("CsF").unwrap();
        let t = Transition::new(RoState::new(0, 4, 0, 0).unwrap(), 0).unwrap();
        let free = free_space_rate(&species, lambda, &t, 0.0, LineStrengthMode::Reference);
        let direct = purcell_rate_direct(&species, &cfg, &t, LineStrengthMode::Reference);
        prop_assert!((purcell_rate(free, geom.eta) / direct - 1.0).abs() < 1e-10);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn stages_conserve_and_cool(
        s in named(),
        scheme in scheme_strategy(),
        dj in 1i32..6,
        raw in prop::collection::vec(0.0f64..1.0, 200),
    ) {
        let two_j_max = s.two_omega + 2 * dj;
        let opts = PlanOptions { q_factor: 1e4, ..PlanOptions::default() };
        let plan = build_plan(&s, scheme, two_j_max, &opts).unwrap();
        let states = enumerate_states(&s, two_j_max).unwrap();
        let weights = states.iter().zip(raw.iter().cycle()).map(|(st, w)| (*st, *w + 1e-3)).collect();
        let init = Population::normalized(weights).unwrap();
        let sim = simulate(&plan, &init, &SimOptions::default()).unwrap();
        let mut prev = metrics(&init, &s);
        for snap in &sim.timeline {
            prop_assert!((snap.population.total() - 1.0).abs() < 1e-12);
            prop_assert!(snap.population.weights().values().all(|w| *w >= 0.0));
            let m = metrics(&snap.population, &s);
            prop_assert!(m.ground_fraction >= prev.ground_fraction - 1e-14);
            prop_assert!(m.mean_rotational_energy <= prev.mean_rotational_energy * (1.0 + 1e-12));
            prev = m;
        }
    }

    #[test]
    fn doubled_cycles_square_residuals(s in named(), scheme in scheme_strategy(), dj in 1i32..5) {
        let two_j_max = s.two_omega + 2 * dj;
        let run = |cycles: f64| {
            let opts = PlanOptions { stage_cycles: cycles, q_factor: 1e4, ..PlanOptions::default() };
            let plan = build_plan(&s, scheme, two_j_max, &opts).unwrap();
            let init = thermal_state(&s, 50.0, two_j_max).unwrap();
            simulate(&plan, &init, &SimOptions::default()).unwrap()
        };
        let single = run(4.0);
        let double = run(8.0);
        for (a, b) in single.per_stage.iter().zip(&double.per_stage) {
            if let (Some(ra), Some(rb)) = (a.residual_fraction(), b.residual_fraction()) {
                prop_assert!((rb - ra * ra).abs() < 1e-9);
            }
        }
    }

    #[test]
    fn offresonant_path_conserves(s in named(), dj in 1i32..4, t in 1.0f64..300.0) {
        let two_j_max = s.two_omega + 2 * dj;
        let opts = PlanOptions { q_factor: 1e3, ..PlanOptions::default() };
        let plan = build_plan(&s, Scheme::Combined, two_j_max, &opts).unwrap();
        let init = thermal_state(&s, t, two_j_max).unwrap();
        let sim_opts = SimOptions {
            include_offresonant: true,
            nbar_mode: NbarMode::Planck,
            temperature: t,
            ..SimOptions::default()
        };
        let sim = simulate(&plan, &init, &sim_opts).unwrap();
        for snap in &sim.timeline {
            prop_assert!((snap.population.total() - 1.0).abs() < 1e-9);
            prop_assert!(snap.population.weights().values().all(|w| *w >= 0.0));
        }
    }
}
