use liddi_core::hmf::{
    detect_plateau, energy, init_waterbag, microcanonical_equilibrium, reduced_from_literature,
    run_relaxation, sample_canonical, trajectory_rng, ReducedParams, RelaxationCriterion,
    RunSettings,
};

fn settings(m_eq: f64, horizon: f64) -> RunSettings {
    RunSettings {
        dt: 0.05,
        horizon,
        sample_every: 1.0,
        criterion: RelaxationCriterion::below_equilibrium(m_eq, 0.1, 50.0, 100.0),
        max_energy_error: 1e-3,
        max_halvings: 2,
    }
}

#[test]
fn aligned_waterbag_shows_plateau_below_equilibrium() {
    let e = reduced_from_literature(0.69);
    let (_, m_eq) = microcanonical_equilibrium(e).unwrap();
    let n = 1000;
    let mut rng = trajectory_rng(2024, 0);
    let initial = init_waterbag(n, 1.0, e, &mut rng).unwrap();
    // no crossing can be declared: threshold above 1
    let mut s = settings(m_eq, 1500.0);
    s.criterion = RelaxationCriterion::below_equilibrium(2.0, 0.1, 50.0, 0.0);
    let run = run_relaxation(&initial, &ReducedParams::microcanonical(n), &s, 2024, 1).unwrap();
    assert!(run.max_energy_error < 1e-3);
    // smooth out the O(1/sqrt N) jitter before looking for a flat stretch
    let smooth: Vec<f64> = (0..run.m.len())
        .map(|k| {
            let lo = k.saturating_sub(25);
            run.m[lo..=k].iter().sum::<f64>() / (k - lo + 1) as f64
        })
        .collect();
    let (start, end, level) =
        detect_plateau(&run.times, &smooth, 50.0, 1e-3, m_eq - 0.05, 100.0).expect("plateau");
    assert!(end - start >= 100.0);
    assert!(level < m_eq - 0.05, "{level} vs {m_eq}");
}

#[test]
fn equilibrated_start_relaxes_at_once() {
    let e = reduced_from_literature(0.69);
    let (t, m_eq) = microcanonical_equilibrium(e).unwrap();
    let n = 2000;
    let mut rng = trajectory_rng(5, 0);
    let initial = sample_canonical(n, t, &mut rng).unwrap();
    assert!((energy(&initial) - e).abs() < 0.02);
    let run = run_relaxation(
        &initial,
        &ReducedParams::microcanonical(n),
        &settings(m_eq, 500.0),
        5,
        1,
    )
    .unwrap();
    assert_eq!(run.relaxed_at, Some(0.0));
}

#[test]
fn identical_seeds_give_identical_runs() {
    let e = reduced_from_literature(0.69);
    let (_, m_eq) = microcanonical_equilibrium(e).unwrap();
    let go = || {
        let mut rng = trajectory_rng(77, 3);
        let initial = init_waterbag(200, 0.0, e, &mut rng).unwrap();
        run_relaxation(
            &initial,
            &ReducedParams::microcanonical(200),
            &settings(m_eq, 300.0),
            77,
            4,
        )
        .unwrap()
    };
    assert_eq!(go(), go());
}
