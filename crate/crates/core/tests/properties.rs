use std::f64::consts::PI;

use ionqaoa::analysis::{singular_values, FidelityHistogram};
use ionqaoa::heuristic::{bcd_generic, single_layer_landscape, BcdConfig, Branch};
use ionqaoa::ionchain::{coupling_base, coupling_matrix, mode_matrix, equilibrium_positions, CouplingBase, PhononData, TrapConfig};
use ionqaoa::problems::sk_hamiltonian;
use ionqaoa::rng::SeededRng;
use ionqaoa::simulator::{prepare_state, AnsatzSpec, EnergyEvaluator, LayerParams, BETA_MAX, GAMMA_MAX};
use num_complex::Complex64;
use proptest::prelude::*;

fn bases() -> Vec<CouplingBase> {
    (0..=8).map(|n| CouplingBase::from_trap(&TrapConfig::calcium(n.max(1))).unwrap()).collect()
}

fn layer_params(p: usize) -> impl Strategy<Value = LayerParams> {
    (prop::collection::vec(0.0..BETA_MAX, p), prop::collection::vec(0.0..GAMMA_MAX, p))
        .prop_map(|(b, g)| LayerParams::new(b, g).unwrap())
}

fn ion_case(max_n: usize, max_p: usize) -> impl Strategy<Value = (Vec<f64>, LayerParams)> {
    (2..=max_n, 1..=max_p).prop_flat_map(|(n, p)| (prop::collection::vec(-1.0..=1.0f64, n), layer_params(p)))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn states_stay_normalized((a, params) in ion_case(7, 4), seed in any::<u64>()) {
        let base = &bases()[a.len()];
        let ion = prepare_state(&AnsatzSpec::ion_native_from_base(base, &a, 1.0).unwrap(), &params).unwrap();
        prop_assert!((ion.norm() - 1.0).abs() < 1e-12);
        let h = sk_hamiltonian(a.len(), seed).unwrap();
        let std = prepare_state(&AnsatzSpec::standard_qaoa(&h), &params).unwrap();
        prop_assert!((std.norm() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn ion_states_are_flip_symmetric((a, params) in ion_case(7, 4)) {
        let n = a.len();
        let state = prepare_state(&AnsatzSpec::ion_native_from_base(&bases()[n], &a, 1.0).unwrap(), &params).unwrap();
        let mask = (1usize << n) - 1;
        for z in 0..=mask {
            prop_assert!((state.amplitudes[z] - state.amplitudes[z ^ mask]).norm() < 1e-12);
        }
    }

    #[test]
    fn rescaling_hyperparameters_rescales_phase_angles(
        (a, params) in ion_case(8, 3),
        alpha in 0.05..=1.0f64,
        seed in any::<u64>(),
    ) {
        let n = a.len();
        let h = sk_hamiltonian(n, seed).unwrap();
        let scaled_a: Vec<f64> = a.iter().map(|v| alpha * v).collect();
        let scaled_spec = AnsatzSpec::ion_native_from_base(&bases()[n], &scaled_a, 1.0).unwrap();
        let spec = AnsatzSpec::ion_native_from_base(&bases()[n], &a, 1.0).unwrap();
        let shrunk = LayerParams::new(params.betas.clone(), params.gammas.iter().map(|g| alpha * alpha * g).collect()).unwrap();
        let lhs = EnergyEvaluator::new(&scaled_spec, &h).unwrap().energy(&params);
        let rhs = EnergyEvaluator::new(&spec, &h).unwrap().energy(&shrunk);
        prop_assert!((lhs - rhs).abs() < 1e-10, "{} vs {}", lhs, rhs);
    }

    #[test]
    fn negating_one_hyperparameter_flips_that_qubit((a, params) in ion_case(6, 5), m in 0usize..6) {
        let n = a.len();
        let m = m % n;
        let mut flipped = a.clone();
        flipped[m] = -flipped[m];
        let mut original = prepare_state(&AnsatzSpec::ion_native_from_base(&bases()[n], &a, 1.0).unwrap(), &params).unwrap();
        let negated = prepare_state(&AnsatzSpec::ion_native_from_base(&bases()[n], &flipped, 1.0).unwrap(), &params).unwrap();
        original.apply_x(m);
        let diff: f64 = original.amplitudes.iter().zip(&negated.amplitudes).map(|(x, y)| (x - y).norm_sqr()).sum();
        prop_assert!(diff.sqrt() < 1e-10);
    }

    #[test]
    fn couplings_scale_quadratically(a in prop::collection::vec(-1.0..=1.0f64, 5), c in -1.0..=1.0f64) {
        let base = &bases()[5];
        let j = coupling_matrix(base, &a).unwrap();
        let scaled: Vec<f64> = a.iter().map(|v| c * v).collect();
        let js = coupling_matrix(base, &scaled).unwrap();
        let tol = 1e-12 * j.max_abs().max(1e-300);
        for i in 0..5 {
            for k in 0..5 {
                prop_assert!((js[(i, k)] - c * c * j[(i, k)]).abs() <= tol);
            }
        }
    }

    #[test]
    fn histogram_conserves_samples(f in prop::collection::vec(0.0..=1.0f64, 0..400), bins in 10usize..100) {
        let hist = FidelityHistogram::from_fidelities(&f, bins).unwrap();
        prop_assert_eq!(hist.counts.iter().sum::<u64>(), f.len() as u64);
        prop_assert_eq!(hist.samples, f.len() as u64);
    }

    #[test]
    fn singular_values_carry_unit_row_energy(k in 1usize..12, log_dim in 2u32..6, seed in any::<u64>()) {
        let dim = 1usize << log_dim;
        let mut rng = SeededRng::new(seed);
        let rows: Vec<Vec<Complex64>> = (0..k)
            .map(|_| {
                let v: Vec<Complex64> = (0..dim).map(|_| Complex64::new(rng.standard_normal(), rng.standard_normal())).collect();
                let norm = v.iter().map(|c| c.norm_sqr()).sum::<f64>().sqrt();
                v.into_iter().map(|c| c / norm).collect()
            })
            .collect();
        let sigmas = singular_values(&rows).unwrap();
        let energy: f64 = sigmas.iter().map(|s| s * s).sum();
        prop_assert!((energy - k as f64).abs() < 1e-9);
        prop_assert!(sigmas.windows(2).all(|w| w[0] >= w[1]));
    }

    #[test]
    fn rescaled_grid_equals_compressed_gamma_grid(
        a in prop::collection::vec(-1.0..=1.0f64, 4),
        alpha in 0.1..=1.0f64,
        seed in any::<u64>(),
    ) {
        let h = sk_hamiltonian(4, seed).unwrap();
        let base = &bases()[4];
        let wide = single_layer_landscape(&h, base, &a, alpha, (0.0, BETA_MAX), (0.0, 2.0 * PI), 8).unwrap();
        let narrow = single_layer_landscape(&h, base, &a, 1.0, (0.0, BETA_MAX), (0.0, 2.0 * PI * alpha * alpha), 8).unwrap();
        for (x, y) in wide.values.as_slice().iter().zip(narrow.values.as_slice()) {
            prop_assert!((x - y).abs() < 1e-10);
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn radial_rows_sum_to_squared_ratio(n in 1usize..=12, extra in 0.0..30.0f64) {
        // Ratios above ~0.8 n^0.86 keep the chain linear; stay well clear.
        let ratio = 1.0 + n as f64 + extra;
        let u = equilibrium_positions(n).unwrap();
        let m = mode_matrix(&u, ratio).unwrap();
        for i in 0..n {
            let sum: f64 = m.row(i).iter().sum();
            prop_assert!((sum - ratio * ratio).abs() < 1e-12 * ratio * ratio);
        }
    }

    #[test]
    fn coupling_base_ignores_mode_sign_convention(n in 2usize..=6, flips in any::<u8>()) {
        let trap = TrapConfig::calcium(n);
        let phonons = PhononData::compute(&trap).unwrap();
        let mut flipped = phonons.clone();
        for m in 0..n {
            if flips >> m & 1 == 1 {
                for i in 0..n {
                    flipped.eigenvectors[(i, m)] = -flipped.eigenvectors[(i, m)];
                    flipped.lamb_dicke[(i, m)] = -flipped.lamb_dicke[(i, m)];
                }
            }
        }
        let a = coupling_base(&phonons, trap.laser_detuning(), trap.omega_max_hz).unwrap();
        let b = coupling_base(&flipped, trap.laser_detuning(), trap.omega_max_hz).unwrap();
        let scale = a.c.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        for (x, y) in a.c.iter().zip(&b.c) {
            prop_assert!((x - y).abs() <= 1e-12 * scale);
        }
    }

    #[test]
    fn bcd_trace_follows_branch_order(
        centers in prop::collection::vec(-0.9..0.9f64, 2),
        eps in -2.0..0.5f64,
        delta in 1e-4..0.5f64,
        k_max in 1usize..5,
        m_max in 1usize..4,
        seed in any::<u64>(),
    ) {
        // Smooth synthetic energy; minimum -1 at theta = (0.7, 2), A = centers.
        let energy = |t: &[f64; 2], a: &[f64]| {
            let da: f64 = a.iter().zip(&centers).map(|(x, c)| (x - c).powi(2)).sum();
            (t[0] - 0.7).powi(2) + 0.1 * (t[1] - 2.0).powi(2) + da - 1.0
        };
        let cfg = BcdConfig { k_max, m_max, eps, delta, seed };
        let out = bcd_generic(2, energy, &cfg).unwrap();
        let again = bcd_generic(2, energy, &cfg).unwrap();
        prop_assert_eq!(&out, &again);

        let mut finals = Vec::new();
        for restart in 0..out.restarts_used {
            let entries: Vec<_> = out.trace.iter().filter(|e| e.restart == restart).collect();
            prop_assert!(!entries.is_empty());
            for (idx, e) in entries.iter().enumerate() {
                prop_assert_eq!(e.k, idx + 1);
                let last = idx + 1 == entries.len();
                match e.branch {
                    Branch::Converged => {
                        prop_assert!(e.energy < eps && last && restart + 1 == out.restarts_used);
                    }
                    Branch::Stagnated => {
                        prop_assert!(last && e.k >= 2 && e.energy >= eps);
                        prop_assert!((e.energy - entries[idx - 1].energy).abs() < delta);
                    }
                    Branch::UpdatedA => {
                        prop_assert!(e.energy >= eps);
                        if idx > 0 {
                            prop_assert!((e.energy - entries[idx - 1].energy).abs() >= delta);
                        }
                        prop_assert!(!last || e.k == k_max);
                    }
                }
            }
            finals.push(entries.last().unwrap().energy);
        }
        if !out.trace.iter().any(|e| e.branch == Branch::Converged) {
            prop_assert!(finals.iter().all(|&e| out.best_energy <= e));
            prop_assert!(finals.contains(&out.best_energy));
        }
        prop_assert!(out.a_star.iter().all(|v| v.abs() <= 1.0));
    }
}
