use std::f64::consts::PI;

use proptest::prelude::*;
use qfa_core::automata::{dfa_build_modn, qfa2_build, qfa2d_build};
use qfa_core::expsim::{
    born_probabilities, calibration_fit, dove_trajectory_bloch, dove_trajectory_state,
    qst_direct_inversion,
};
use qfa_core::holography::{inv_sinc, sinc};
use qfa_core::kset::{exhaustive_best_kset, is_prime, worst_false_accept};
use qfa_core::photonic::{
    accept_prob_closed_form, dove_unitary, exit_probability, photonic_qfa, DoveConfig, LoopConfig,
    PetalBasis,
};

const PRIMES: [usize; 11] = [2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31];

fn prime_and_set() -> impl Strategy<Value = (usize, Vec<usize>)> {
    prop::sample::select(&PRIMES[1..]).prop_flat_map(|p| {
        let ks = prop::collection::btree_set(1..p, 1..=(p - 1).min(6));
        (Just(p), ks.prop_map(|s| s.into_iter().collect()))
    })
}

fn ell_set() -> impl Strategy<Value = Vec<u32>> {
    prop::collection::btree_set(1u32..12, 1..5).prop_map(|s| s.into_iter().collect())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn constructed_machines_are_unitary((p, ks) in prime_and_set()) {
        let q = qfa2d_build(p, &ks).unwrap();
        for m in [q.v_cent(), q.v_a(), q.v_dollar()] {
            prop_assert!(m.unitarity_defect() < 1e-10);
        }
        let q2 = qfa2_build(p, ks[0]).unwrap();
        prop_assert!(q2.v_a().unitarity_defect() < 1e-12);
    }

    #[test]
    fn dove_blocks_are_unitary(ell in 1u32..50, phi in 0.0..PI) {
        prop_assert!(dove_unitary(ell, phi).unitarity_defect() < 1e-12);
    }

    #[test]
    fn qfa_agrees_with_dfa_on_membership((p, ks) in prime_and_set(), n in 0usize..200) {
        let dfa = dfa_build_modn(p).unwrap();
        let a = qfa2d_build(p, &ks).unwrap().run(n).accept_prob;
        if dfa.accepts(n) {
            prop_assert!((a - 1.0).abs() < 1e-9);
        } else {
            prop_assert!(a < 1.0 - 1e-9);
        }
    }

    #[test]
    fn acceptance_is_p_periodic((p, ks) in prime_and_set(), n in 0u64..500) {
        let ells: Vec<u32> = ks.iter().map(|&k| k as u32).collect();
        let phi = PI / p as f64;
        let a = accept_prob_closed_form(&ells, phi, n);
        let b = accept_prob_closed_form(&ells, phi, n + p as u64);
        prop_assert!((a - b).abs() < 1e-9);
    }

    #[test]
    fn non_members_are_symmetric((p, ks) in prime_and_set(), n in 1usize..31) {
        let n = 1 + n % (p - 1);
        let q = qfa2d_build(p, &ks).unwrap();
        let a = q.run(n).accept_prob;
        let b = q.run(p - n).accept_prob;
        prop_assert!((a - b).abs() < 1e-9);
    }

    #[test]
    fn matrix_power_equals_stepping((p, ks) in prime_and_set(), n in 0usize..=1000) {
        let q = qfa2d_build(p, &ks).unwrap();
        let stepped = q.run(n).accept_prob;
        let powered = q.run_with_power(n as u64).accept_prob;
        prop_assert!((stepped - powered).abs() < 1e-9);
    }

    #[test]
    fn photonic_matrix_matches_closed_form(ells in ell_set(), deg in 0.0f64..90.0, n in 0u64..200) {
        let basis = PetalBasis::new(ells.clone()).unwrap();
        let phi = deg.to_radians();
        let q = photonic_qfa(&basis, phi);
        let explicit = q.run_with_power(n).accept_prob;
        prop_assert!((explicit - accept_prob_closed_form(&ells, phi, n)).abs() < 1e-9);
    }

    #[test]
    fn exit_probabilities_sum_to_transmittance(r in 0.05f64..0.95, eta in 0.5f64..=1.0) {
        let lp = LoopConfig::new(r, 1.0 - r, eta, 2.26e-9, DoveConfig::new(0.1).unwrap()).unwrap();
        let tail: f64 = (1..2000).map(|n| exit_probability(&lp, n)).sum();
        // Σ_{n≥1} T² Rⁿ⁻¹ ηⁿ = T² η / (1 − Rη)
        let closed = lp.t * lp.t * eta / (1.0 - r * eta);
        prop_assert!((tail - closed).abs() < 1e-12);
        if eta == 1.0 {
            prop_assert!((tail - lp.t).abs() < 1e-12);
            prop_assert!((tail + exit_probability(&lp, 0) - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn tomography_tracks_rotation(ell in 1u32..8, deg in 0.0f64..45.0, n in 0u64..20) {
        let phi = deg.to_radians();
        let r = qst_direct_inversion(&born_probabilities(dove_trajectory_state(ell, phi, n))).unwrap();
        prop_assert!(r.max_abs_diff(&dove_trajectory_bloch(ell, phi, n)) < 1e-9);
        prop_assert!((r.norm() - 1.0).abs() < 1e-9);
    }

    #[test]
    fn calibration_recovers_offsets(delta in -0.25f64..=0.25, ell in 6u32..=12, amp in 0.1f64..10.0) {
        let samples: Vec<_> = (0..=340)
            .map(|i| {
                let t = i as f64 * 0.1;
                (t, amp * (ell as f64 * (t - delta).to_radians()).cos().powi(2) + 0.3)
            })
            .collect();
        let f = calibration_fit(&samples, ell).unwrap();
        prop_assert!((f.delta_deg - delta).abs() < 1e-6);
    }
}

#[test]
fn inv_sinc_round_trip_sampled() {
    // 10⁴ pseudo-random points plus the endpoints.
    let mut state = 0x9e37_79b9_7f4a_7c15u64;
    let mut ys = vec![0.0, 1.0];
    for _ in 0..10_000 {
        state ^= state << 13;
        state ^= state >> 7;
        state ^= state << 17;
        ys.push((state >> 11) as f64 / (1u64 << 53) as f64);
    }
    for y in ys {
        let x = inv_sinc(y).unwrap();
        assert!((-PI..=0.0).contains(&x));
        assert!((sinc(x) - y).abs() <= 1e-12, "y = {y}");
    }
}

/// The k ↔ p−k dedup never changes the optimum: compare against the full
/// search for every small prime.
#[test]
fn dedup_preserves_optimum() {
    use qfa_core::kset::{exhaustive_best_kset_with, SearchOptions};
    for &p in &PRIMES[2..6] {
        for d in 1..=(p - 1) / 2 {
            let a = exhaustive_best_kset(p, d).unwrap();
            let b = exhaustive_best_kset_with(p, d, &SearchOptions::exhaustive_abstract()).unwrap();
            assert!((a.worst_prob - b.worst_prob).abs() < 1e-12, "p {p} d {d}");
        }
    }
}

/// Adding a rotation can make the best achievable worst case slightly worse:
/// p = 19 is the only prime ≤ 31 where this happens for d ≤ 5.
#[test]
fn best_worst_case_monotone_in_d_except_p19() {
    for &p in PRIMES.iter().filter(|&&p| p >= 5) {
        let top = ((p - 1) / 2).min(5);
        let best: Vec<f64> = (1..=top)
            .map(|d| exhaustive_best_kset(p, d).unwrap().worst_prob)
            .collect();
        for d in 1..best.len() {
            if p == 19 && d == 3 {
                assert!(best[3] > best[2], "p = 19 counterexample disappeared");
                assert!((best[2] - 0.1746).abs() < 1e-4 && (best[3] - 0.1834).abs() < 1e-4);
                continue;
            }
            assert!(
                best[d] <= best[d - 1] + 1e-12,
                "p {p}: d {} -> {}",
                d,
                d + 1
            );
        }
    }
}

#[test]
fn primality_helper() {
    let found: Vec<usize> = (0..32).filter(|&p| is_prime(p)).collect();
    assert_eq!(found, PRIMES);
}

#[test]
fn worst_false_accept_matches_matrix_oracle() {
    for &p in &PRIMES[2..] {
        let ks: Vec<usize> = (1..p).step_by(3).take(4).collect();
        let ells: Vec<u32> = ks.iter().map(|&k| k as u32).collect();
        let (_, w) = worst_false_accept(p, &ells, PI / p as f64);
        let q = qfa2d_build(p, &ks).unwrap();
        let oracle = (1..p).map(|n| q.run(n).accept_prob).fold(0.0, f64::max);
        assert!((w - oracle).abs() < 1e-10, "p = {p}");
    }
}
