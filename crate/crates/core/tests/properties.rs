//! Property tests over random lattices, seeds and parameters.

use proptest::prelude::*;
use spinlane::analysis::{lorentzian, lorentzian_fit, power_law_fit, tc_extrapolate};
use spinlane::kernel::{run_mcs, RowBlockSchedule};
use spinlane::lattice::{Init, ModelParams, SpinLattice};
use spinlane::models::{epsilon_j1j2, epsilon_nn, potts_delta_e, potts_mcs, total_energy_j1j2, PottsInit, PottsLattice, PottsTable};
use spinlane::rng::{lfsr12_next, lfsr32_next, seed_lanes};
use spinlane::{row_block_schedule, BoltzmannTable, Partition};

fn lattice(side: usize, bits: &[bool]) -> SpinLattice {
    let mut lat = SpinLattice::new(side, Init::AllUp, 0).unwrap();
    for (k, &b) in bits.iter().enumerate() {
        lat.set_spin(k / side, k % side, if b { 1 } else { -1 }).unwrap();
    }
    lat
}

fn even_side() -> impl Strategy<Value = usize> {
    (2usize..=12).prop_map(|h| 2 * h)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn neighbour_sums_follow_cyclic_shifts(bits in prop::collection::vec(any::<bool>(), 64), di in 0usize..8, dj in 0usize..8) {
        let lat = lattice(8, &bits);
        let mut shifted = SpinLattice::new(8, Init::AllUp, 0).unwrap();
        for i in 0..8 {
            for j in 0..8 {
                shifted.set_spin((i + di) % 8, (j + dj) % 8, lat.spin_at(i, j).unwrap()).unwrap();
            }
        }
        for i in 0..8 {
            for j in 0..8 {
                prop_assert_eq!(
                    lat.neighbor_sum_nn(i, j).unwrap(),
                    shifted.neighbor_sum_nn((i + di) % 8, (j + dj) % 8).unwrap()
                );
            }
        }
        prop_assert_eq!(lat.bond_sum_nn(), shifted.bond_sum_nn());
    }

    #[test]
    fn global_flip_symmetry(side in even_side(), seed in any::<u64>()) {
        let lat = SpinLattice::new(side, Init::Random, seed).unwrap();
        let mut flipped = lat.clone();
        flipped.flip_all();
        prop_assert_eq!(lat.total_magnetization(), -flipped.total_magnetization());
        prop_assert_eq!(lat.bond_sum_nn(), flipped.bond_sum_nn());
        prop_assert_eq!(lat.bond_sum_nnn(), flipped.bond_sum_nnn());
        let sum: i64 = (0..side).flat_map(|i| (0..side).map(move |j| (i, j))).map(|(i, j)| lat.spin_at(i, j).unwrap() as i64).sum();
        prop_assert_eq!(sum, lat.total_magnetization());
    }

    #[test]
    fn snapshot_round_trip(side in even_side(), seed in any::<u64>()) {
        let lat = SpinLattice::new(side, Init::Random, seed).unwrap();
        prop_assert_eq!(SpinLattice::from_snapshot(&lat.to_snapshot()).unwrap(), lat);
    }

    #[test]
    fn local_energy_matches_total_energy(bits in prop::collection::vec(any::<bool>(), 36)) {
        let mut lat = lattice(6, &bits);
        let params = ModelParams::ising(1.0);
        for i in 0..6 {
            for j in 0..6 {
                let s0 = lat.spin_at(i, j).unwrap();
                let eps = epsilon_nn(s0, lat.neighbor_sum_nn(i, j).unwrap()).unwrap();
                let before = lat.total_energy_nn(&params).unwrap();
                lat.set_spin(i, j, -s0).unwrap();
                let after = lat.total_energy_nn(&params).unwrap();
                lat.set_spin(i, j, s0).unwrap();
                prop_assert_eq!(2.0 * eps as f64, after - before);
            }
        }
    }

    #[test]
    fn j1j2_local_energy_matches_hamiltonian(bits in prop::collection::vec(any::<bool>(), 36), j1 in 0.1f64..3.0, j2 in -3.0f64..=0.0) {
        let mut lat = lattice(6, &bits);
        for i in 0..6 {
            for j in 0..6 {
                let s0 = lat.spin_at(i, j).unwrap();
                let eps = epsilon_j1j2(s0, lat.neighbor_sum_nn(i, j).unwrap(), lat.neighbor_sum_nnn(i, j).unwrap(), j1, j2).unwrap();
                let before = total_energy_j1j2(&lat, j1, j2);
                lat.set_spin(i, j, -s0).unwrap();
                let after = total_energy_j1j2(&lat, j1, j2);
                lat.set_spin(i, j, s0).unwrap();
                prop_assert!((2.0 * eps - (after - before)).abs() < 1e-9);
            }
        }
    }

    #[test]
    fn schedules_cover_each_site_once(side in even_side(), extra in 0usize..200, four in any::<bool>()) {
        let partition = if four { Partition::FourColor } else { Partition::Checkerboard };
        let lanes = side / 2 + extra;
        let sched = RowBlockSchedule::new(side, lanes, partition).unwrap();
        let mut seen = vec![0u8; side * side];
        for step in sched.steps() {
            let sites = step.sites(partition, side);
            prop_assert!(sites.len() <= lanes);
            for (i, j) in sites {
                prop_assert_eq!(partition.class_of(i, j), step.class);
                seen[i * side + j] += 1;
            }
        }
        prop_assert!(seen.iter().all(|&c| c == 1));
    }

    #[test]
    fn lfsr_states_stay_nonzero(s32 in 1u32.., s12 in 1u16..4096) {
        let (mut a, mut b) = (s32, s12);
        for _ in 0..1000 {
            a = lfsr32_next(a).unwrap();
            b = lfsr12_next(b).unwrap();
            prop_assert!(a != 0 && (1..4096).contains(&b));
        }
    }

    #[test]
    fn banks_are_deterministic_and_distinct(seed in any::<u64>(), n in 1usize..512) {
        let mut a = seed_lanes(seed, n).unwrap();
        let mut b = seed_lanes(seed, n).unwrap();
        let mut locals = a.local_states().to_vec();
        locals.sort_unstable();
        locals.dedup();
        prop_assert_eq!(locals.len(), n);
        for _ in 0..20 {
            a.cycle_advance();
            b.cycle_advance();
            for lane in 0..n {
                let r = a.draw12(lane).unwrap();
                prop_assert!(r < 4096);
                prop_assert_eq!(r, b.draw12(lane).unwrap());
            }
        }
    }

    #[test]
    fn lane_kernel_is_reproducible(seed in any::<u64>(), side in even_side(), t in 0.5f64..5.0) {
        let run = || {
            let mut lat = SpinLattice::new(side, Init::Random, seed).unwrap();
            let mut bank = seed_lanes(seed, 2048).unwrap();
            let table = BoltzmannTable::new(t).unwrap();
            let sched = row_block_schedule(side, 2048).unwrap();
            run_mcs(&mut lat, &mut bank, &table, &sched, 5).unwrap();
            lat
        };
        prop_assert_eq!(run(), run());
    }

    #[test]
    fn potts_states_stay_in_range(q in 2u32..8, seed in any::<u64>(), t in 0.3f64..4.0) {
        let mut lat = PottsLattice::new(8, q, PottsInit::Random, seed).unwrap();
        let mut bank = seed_lanes(seed, 64).unwrap();
        let table = PottsTable::new(t, 1.0).unwrap();
        let sched = row_block_schedule(8, 64).unwrap();
        for _ in 0..5 {
            potts_mcs(&mut lat, &mut bank, &table, &sched).unwrap();
        }
        prop_assert!(lat.states().iter().all(|&s| s >= 1 && s as u32 <= q));
    }

    #[test]
    fn potts_energy_change_is_antisymmetric(q in 2u32..10, a in 1u8..10, b in 1u8..10, nbrs in prop::array::uniform4(1u8..10), j in 0.1f64..3.0) {
        prop_assume!(a as u32 <= q && b as u32 <= q && a != b && nbrs.iter().all(|&n| n as u32 <= q));
        let fwd = potts_delta_e(a, b, nbrs, j, q).unwrap();
        let back = potts_delta_e(b, a, nbrs, j, q).unwrap();
        prop_assert!((fwd + back).abs() < 1e-12);
    }

    #[test]
    fn lorentzian_recovers_exact_curves(a in 1.0f64..1000.0, t_star in 2.2f64..2.6, w in 0.05f64..0.5) {
        let pts: Vec<(f64, f64)> = (0..21).map(|k| {
            let t = t_star - 0.3 + 0.03 * k as f64 + 0.011;
            (t, lorentzian(t, a, t_star, w))
        }).collect();
        let fit = lorentzian_fit(&pts, 10).unwrap();
        prop_assert!((fit.t_star - t_star).abs() < 1e-6);
        prop_assert!((fit.chi_max / a - 1.0).abs() < 1e-6);
        prop_assert!((fit.w / w - 1.0).abs() < 1e-5);
    }

    #[test]
    fn scaling_fits_are_exact(c in 0.01f64..10.0, slope in 0.5f64..3.0, tc in 2.0f64..2.5, b in -2.0f64..2.0) {
        let sizes = [8usize, 16, 32, 64, 128];
        let chi: Vec<f64> = sizes.iter().map(|&l| c * (l as f64).powf(slope)).collect();
        prop_assert!((power_law_fit(&sizes, &chi).unwrap().exponent - slope).abs() < 1e-10);
        let ts: Vec<f64> = sizes.iter().map(|&l| tc + b / l as f64).collect();
        let fit = tc_extrapolate(&sizes, &ts).unwrap();
        prop_assert!((fit.tc - tc).abs() < 1e-10 && (fit.b - b).abs() < 1e-9);
    }
}
