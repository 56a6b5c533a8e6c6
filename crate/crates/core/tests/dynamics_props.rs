mod common;

use common::random_model;
use mqb_core::comparison::population_error_max;
use mqb_core::dynamics::{emulate_mqb_problem, propagate_unitary, LindbladProblem, MQBNoiseModel, SampleState, TimeGrid};
use mqb_core::model::{
    build_initial_state_with_loss, extend_pyrazine, pyrazine_initial_state, ChannelKind, InitialStateSpec, LindbladChannel,
};
use mqb_core::ode::Tolerances;
use mqb_core::quantum::C64;
use proptest::prelude::*;

fn channel(kind: u8, rate: f64) -> LindbladChannel {
    let kind = match kind % 5 {
        0 => ChannelKind::ElectronicRelaxation { to: 0, from: 1 },
        1 => ChannelKind::VibrationalHeating { mode: 0 },
        2 => ChannelKind::VibrationalCooling { mode: 0 },
        3 => ChannelKind::ElectronicDephasing { state: 1 },
        _ => ChannelKind::VibrationalDephasing { mode: 0 },
    };
    LindbladChannel::new(kind, rate).unwrap()
}

fn small_start(seed: u64, d: usize) -> (mqb_core::model::VCModel, mqb_core::quantum::DensityMatrix) {
    let model = random_model(2, 1, seed, true);
    let spec = InitialStateSpec { electronic: 1, displacements: vec![C64::new(0.4, 0.1)] };
    let psi = build_initial_state_with_loss(&spec, &model, &[d], 1.0).unwrap();
    (model, psi.to_density())
}

proptest! {
    #![proptest_config(common::cases(24))]

    #[test]
    fn lindblad_keeps_trace_and_hermiticity(
        seed in any::<u64>(),
        d in 2usize..5,
        kinds in prop::collection::vec((any::<u8>(), 0.0f64..1.5), 0..4),
    ) {
        let (model, rho0) = small_start(seed, d);
        let channels: Vec<_> = kinds.iter().map(|&(k, r)| channel(k, r)).collect();
        let grid = TimeGrid::new(3.0, 7).unwrap();
        let traj = LindbladProblem::new(&model, &channels, &[d])
            .unwrap()
            .solve(&rho0, &grid.times(), Tolerances::default(), true)
            .unwrap();
        for i in 0..traj.len() {
            let Some(SampleState::Mixed(rho)) = traj.state(i) else { panic!("mixed states expected") };
            prop_assert!((rho.trace() - 1.0).abs() <= 1e-7);
            prop_assert!(rho.matrix().hermiticity_defect() <= 1e-7);
        }
    }

    #[test]
    fn only_the_rate_to_scaling_ratio_enters(seed in any::<u64>(), s in 0.01f64..100.0, rate in 0.01f64..1.0) {
        let (model, rho0) = small_start(seed, 3);
        let f = 0.5;
        let errs = |scale: f64| vec![channel(1, rate * scale), channel(4, 0.5 * rate * scale)];
        let grid = TimeGrid::new(2.0, 5).unwrap();
        let solve = |noise: MQBNoiseModel| {
            emulate_mqb_problem(&model, &noise, &[3])
                .unwrap()
                .solve(&rho0, &grid.times(), Tolerances::reference(), false)
                .unwrap()
        };
        let a = solve(MQBNoiseModel::new(f, vec![channel(3, 0.2)], errs(1.0)).unwrap());
        let b = solve(MQBNoiseModel::new(f * s, vec![channel(3, 0.2)], errs(s)).unwrap());
        for n in 0..2 {
            prop_assert!(population_error_max(&a, &b, n).unwrap() <= 1e-8);
        }
    }

    #[test]
    fn halving_tolerances_converges(
        seed in any::<u64>(),
        kinds in prop::collection::vec((any::<u8>(), 0.0f64..1.0), 1..3),
    ) {
        let (model, rho0) = small_start(seed, 3);
        let channels: Vec<_> = kinds.iter().map(|&(k, r)| channel(k, r)).collect();
        let problem = LindbladProblem::new(&model, &channels, &[3]).unwrap();
        let times = TimeGrid::new(5.0, 11).unwrap().times();
        let run = |tol: Tolerances| problem.solve(&rho0, &times, tol, false).unwrap();
        let loose = run(Tolerances::new(1e-6, 1e-6).unwrap());
        let tight = run(Tolerances::new(5e-7, 5e-7).unwrap());
        let exact = run(Tolerances::new(1e-13, 1e-13).unwrap());
        let dev_loose = population_error_max(&exact, &loose, 1).unwrap();
        let dev_tight = population_error_max(&exact, &tight, 1).unwrap();
        let change = population_error_max(&loose, &tight, 1).unwrap();
        prop_assert!(dev_tight <= dev_loose, "{dev_tight} > {dev_loose}");
        prop_assert!(change <= dev_loose * 1.0001 + 1e-12, "{change} vs {dev_loose}");
    }
}

#[test]
fn reference_tolerances_resolve_pyrazine_populations() {
    // The population errors to be resolved are ~1e-4; the solver must sit well below.
    let model = extend_pyrazine(2).unwrap();
    let cutoffs = [4, 4];
    let psi = build_initial_state_with_loss(&pyrazine_initial_state(&model), &model, &cutoffs, 1e-6).unwrap();
    let grid = TimeGrid::new(150e-15, 31).unwrap();
    let exact = propagate_unitary(&model, &cutoffs, &psi, &grid).unwrap();
    let solved = LindbladProblem::new(&model, &[], &cutoffs)
        .unwrap()
        .solve(&psi.to_density(), &grid.times(), Tolerances::reference(), false)
        .unwrap();
    assert!(population_error_max(&exact, &solved, 1).unwrap() < 1e-6);
}
