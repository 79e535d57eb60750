use proptest::prelude::*;

use mixed_hk::dynamics::{averaging_matrix, neighborhoods, step, OpinionState};
use mixed_hk::io::{read_trajectory, write_trajectory};
use mixed_hk::monitors::{beta, energy, energy_slack, global_diameter, nl8_lower_bound};
use mixed_hk::profile::{build_profile, diameter};

fn profile() -> impl Strategy<Value = (OpinionState, Vec<f64>)> {
    (1usize..=8, 1usize..=3, 0.1f64..2.0).prop_flat_map(|(n, d, eps)| {
        let coords = prop::collection::vec(-2.0f64..2.0, n * d);
        let alpha = prop::collection::vec(prop_oneof![Just(0.0), Just(1.0), 0.0f64..1.0], n);
        (coords, alpha).prop_map(move |(x, a)| (OpinionState::new(0, d, eps, x).unwrap(), a))
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(256))]

    #[test]
    fn energy_drop_dominates_displacement((s, alpha) in profile()) {
        let next = step(&s, &alpha).unwrap();
        let drop = energy(&s) - energy(&next);
        prop_assert!(drop >= nl8_lower_bound(&s, &next, &alpha) - energy_slack(&s));
        prop_assert!(drop >= -energy_slack(&s));
    }

    #[test]
    fn diameter_never_grows((s, alpha) in profile()) {
        let next = step(&s, &alpha).unwrap();
        prop_assert!(global_diameter(&next) <= global_diameter(&s) * (1.0 + 1e-12) + 1e-12);
    }

    #[test]
    fn trivial_profiles_contract((s, alpha) in profile()) {
        prop_assume!(s.n() >= 2);
        // shrink into a cube of diameter eps
        let scale = s.epsilon() / (4.0 * (s.d() as f64).sqrt());
        let s = OpinionState::new(0, s.d(), s.epsilon(), s.coords().iter().map(|v| v * scale).collect()).unwrap();
        prop_assert!(global_diameter(&s) <= s.epsilon());
        let next = step(&s, &alpha).unwrap();
        let b = beta(&alpha).unwrap();
        prop_assert!(global_diameter(&next) <= b * global_diameter(&s) + 1e-12);
    }

    #[test]
    fn stubborn_agents_keep_their_bits((s, alpha) in profile()) {
        let next = step(&s, &alpha).unwrap();
        for i in (0..s.n()).filter(|&i| alpha[i] == 1.0) {
            prop_assert_eq!(s.opinion(i), next.opinion(i));
        }
    }

    #[test]
    fn each_agent_stays_in_its_neighbors_box((s, alpha) in profile()) {
        let next = step(&s, &alpha).unwrap();
        for (i, nbrs) in neighborhoods(&s).iter().enumerate() {
            for k in 0..s.d() {
                let lo = nbrs.iter().map(|&j| s.opinion(j)[k]).fold(f64::INFINITY, f64::min);
                let hi = nbrs.iter().map(|&j| s.opinion(j)[k]).fold(f64::NEG_INFINITY, f64::max);
                let v = next.opinion(i)[k];
                prop_assert!(v >= lo - 1e-12 && v <= hi + 1e-12);
            }
        }
    }

    #[test]
    fn averaging_matrix_is_row_stochastic_and_symmetric_in_support((s, _a) in profile()) {
        let a = averaging_matrix(&s);
        for i in 0..s.n() {
            let row: f64 = a.row(i).iter().sum();
            prop_assert!((row - 1.0).abs() < 1e-12);
            for j in 0..s.n() {
                prop_assert_eq!(a[(i, j)] > 0.0, a[(j, i)] > 0.0);
            }
        }
    }

    #[test]
    fn relabeling_commutes_with_the_update((s, alpha) in profile(), shift in 0usize..8) {
        let n = s.n();
        let perm: Vec<usize> = (0..n).map(|i| (i + shift) % n).collect();
        let rows: Vec<Vec<f64>> = perm.iter().map(|&p| s.opinion(p).to_vec()).collect();
        let pa: Vec<f64> = perm.iter().map(|&p| alpha[p]).collect();
        let ps = OpinionState::from_rows(0, s.epsilon(), &rows).unwrap();
        let (next, pnext) = (step(&s, &alpha).unwrap(), step(&ps, &pa).unwrap());
        for (i, &p) in perm.iter().enumerate() {
            for (a, b) in pnext.opinion(i).iter().zip(next.opinion(p)) {
                prop_assert!((a - b).abs() <= 1e-12);
            }
        }
    }

    #[test]
    fn component_diameters_bounded_by_global((s, _a) in profile()) {
        let p = build_profile(&s);
        for c in p.components() {
            let d = diameter(c.iter().map(|&i| s.opinion(i))).unwrap();
            prop_assert!(d <= global_diameter(&s));
        }
    }
}

#[test]
fn oversized_coordinates_are_rejected() {
    assert!(OpinionState::new(0, 1, 1.0, vec![0.0, 1e300]).is_err());
    assert!(OpinionState::new(0, 1, 1e200, vec![0.0, 1.0]).is_err());
    assert!(OpinionState::new(0, 1, 1.0, vec![-1e100, 1e100]).is_ok());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn csv_round_trip_is_bitwise(
        coords in prop::collection::vec(prop_oneof![-1e100f64..1e100, -1.0f64..1.0, Just(0.1), Just(-0.0), Just(1e-310)], 6),
        seed in any::<u64>(),
    ) {
        use mixed_hk::dynamics::{simulate, InitialSource, ModelConfig, MonitorFlags, Schedule};
        let rows: Vec<Vec<f64>> = coords.chunks(2).map(<[f64]>::to_vec).collect();
        let c = ModelConfig {
            n: 3,
            d: 2,
            epsilon: 0.7,
            max_steps: 5,
            consensus_tol: 1e-12,
            seed,
            schedule: Schedule::Asynchronous,
            initial: InitialSource::Inline { coords: rows },
            monitors: MonitorFlags::default(),
        };
        let traj = simulate(&c).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("t.csv");
        write_trajectory(&traj, &p).unwrap();
        let back = read_trajectory(&p).unwrap();
        prop_assert_eq!(traj.states.len(), back.states.len());
        for (a, b) in traj.states.iter().zip(&back.states) {
            let (ab, bb): (Vec<u64>, Vec<u64>) =
                (a.coords().iter().map(|v| v.to_bits()).collect(), b.coords().iter().map(|v| v.to_bits()).collect());
            prop_assert_eq!(ab, bb);
        }
        prop_assert_eq!(&traj.alphas, &back.alphas);
        prop_assert_eq!(&traj.metrics, &back.metrics);
    }
}
