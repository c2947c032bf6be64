//! Values frozen from an independent brute-force evaluation (plain double
//! loops over all subsets of `1..=(p−1)/2`, `φ = π/p`).

use std::f64::consts::PI;

use qfa_core::kset::{exhaustive_best_kset, worst_false_accept};
use qfa_core::photonic::accept_prob_closed_form;

const BEST: &[(usize, &[f64])] = &[
    (
        7,
        &[0.8117449009293668, 0.3155573337201441, 0.027777777777777866],
    ),
    (
        11,
        &[
            0.9206267664155905,
            0.39480395852154926,
            0.1597171103675768,
            0.11243506495825774,
            0.010000000000000009,
        ],
    ),
    (
        13,
        &[
            0.9427280128266051,
            0.43926851643188386,
            0.14729932327033343,
            0.0882983345146434,
            0.07677953596075159,
        ],
    ),
    (
        19,
        &[
            0.972908620850317,
            0.6058717837916204,
            0.17458729116193902,
            0.18339062394667244,
            0.09102175919543777,
        ],
    ),
    (
        31,
        &[
            0.9897649706262472,
            0.7335043578257798,
            0.3826656319046422,
            0.2190585498861656,
            0.1087067417450797,
        ],
    ),
];

#[test]
fn exhaustive_optimum_matches_frozen_oracle() {
    for &(p, values) in BEST {
        for (i, &want) in values.iter().enumerate() {
            let r = exhaustive_best_kset(p, i + 1).unwrap();
            assert!(
                (r.worst_prob - want).abs() < 1e-12,
                "p {p} d {}: {} vs {want}",
                i + 1,
                r.worst_prob
            );
            let (_, check) = worst_false_accept(p, &r.k, PI / p as f64);
            assert!((check - r.worst_prob).abs() < 1e-14);
        }
    }
}

#[test]
fn mod11_acceptance_profile() {
    let want = [
        0.013195862,
        0.112435065,
        0.001498865,
        0.052374040,
        0.007996167,
    ];
    for (i, w) in want.iter().enumerate() {
        let n = i as u64 + 1;
        let a = accept_prob_closed_form(&[1, 2, 3, 4], PI / 11.0, n);
        let mirror = accept_prob_closed_form(&[1, 2, 3, 4], PI / 11.0, 11 - n);
        assert!(
            (a - w).abs() < 1e-9 && (mirror - w).abs() < 1e-9,
            "n = {n}: {a}"
        );
    }
}
