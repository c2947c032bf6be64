//! Search over rotation sets `K` for the 2d-state MOD_p machine.
//!
//! The objective for a candidate `K` is its worst false-acceptance
//! probability, the maximum of the closed-form acceptance over the
//! non-member lengths `n = 1 … p−1` (acceptance is `p`-periodic in `n`, so
//! this covers every non-member).
//!
//! Candidate evaluation is split into fixed-size chunks of the lexicographic
//! enumeration; each chunk is reduced independently and chunk winners are
//! merged by `(quantized worst probability, K)`, which is an associative and
//! commutative minimum. The result does not depend on the thread count.

use std::f64::consts::PI;

use rand::seq::index;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::photonic::{accept_prob_closed_form, dove_angle_for_p};

/// Largest candidate count [`exhaustive_best_kset`] will enumerate.
pub const EXHAUSTIVE_LIMIT: u128 = 100_000_000;
const CHUNK: u128 = 4096;
/// Probabilities closer than this are ties, resolved by the smaller `K`.
const TIE_TOL: f64 = 1e-12;

/// How the per-symbol rotation angles are derived from `K`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AngleRule {
    /// `θ_k = 2kπ/p`, i.e. OAM values `K` under a Dove angle of `π/p`.
    Abstract,
    /// Dove angle from [`dove_angle_for_p`]: `π/(2p)` for single-parity
    /// sets, `π/p` otherwise. This is what the optical loop realizes.
    Dove,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SearchOptions {
    pub rule: AngleRule,
    /// Only consider `k ≤ (p−1)/2`. Under [`AngleRule::Abstract`] `k` and
    /// `p−k` give identical probabilities, so nothing is lost.
    pub dedup: bool,
}

impl Default for SearchOptions {
    fn default() -> Self {
        Self {
            rule: AngleRule::Abstract,
            dedup: true,
        }
    }
}

impl SearchOptions {
    /// Dove angle rule over all of `1..p−1`; used for the log-bound check.
    pub fn realizable() -> Self {
        Self {
            rule: AngleRule::Dove,
            dedup: false,
        }
    }

    pub fn exhaustive_abstract() -> Self {
        Self {
            rule: AngleRule::Abstract,
            dedup: false,
        }
    }

    fn validate(&self) -> Result<()> {
        if self.dedup && self.rule == AngleRule::Dove {
            return Err(Error::InvalidParameter(
                "k <-> p-k dedup is only exact under the abstract angle rule".into(),
            ));
        }
        Ok(())
    }

    fn domain(&self, p: usize) -> Vec<u32> {
        let top = if self.dedup { (p - 1) / 2 } else { p - 1 };
        (1..=top as u32).collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KSetResult {
    pub p: usize,
    pub d: usize,
    pub k: Vec<u32>,
    pub rule: AngleRule,
    pub phi_rad: f64,
    pub worst_n: u64,
    pub worst_prob: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub epsilon_target: Option<f64>,
}

pub fn is_prime(p: usize) -> bool {
    p >= 2
        && (2..)
            .take_while(|q| q * q <= p)
            .all(|q| !p.is_multiple_of(q))
}

fn check_prime(p: usize) -> Result<()> {
    if p < 2 {
        return Err(Error::InvalidModulus(p));
    }
    if !is_prime(p) {
        return Err(Error::InvalidParameter(format!("{p} is not prime")));
    }
    Ok(())
}

/// Dove angle used for `ks` under `rule`.
pub fn search_phi(p: usize, ks: &[u32], rule: AngleRule) -> Result<f64> {
    match rule {
        AngleRule::Abstract => Ok(PI / p as f64),
        AngleRule::Dove => dove_angle_for_p(p, ks),
    }
}

/// Exact maximum of the acceptance over `n = 1 … p−1`; returns the smallest
/// maximizing `n` and the maximum.
pub fn worst_false_accept(p: usize, ks: &[u32], phi: f64) -> (u64, f64) {
    let mut best = (0u64, f64::NEG_INFINITY);
    for n in 1..p as u64 {
        let a = accept_prob_closed_form(ks, phi, n);
        if a > best.1 + TIE_TOL {
            best = (n, a);
        }
    }
    best
}

fn binomial(n: usize, k: usize) -> u128 {
    if k > n {
        return 0;
    }
    let k = k.min(n - k);
    (0..k).fold(1u128, |acc, i| acc * (n - i) as u128 / (i + 1) as u128)
}

/// Combination of `rank` in lexicographic order over `0..m` choose `d`.
fn unrank(m: usize, d: usize, mut rank: u128) -> Vec<usize> {
    let mut out = Vec::with_capacity(d);
    let mut x = 0;
    for i in 0..d {
        loop {
            let c = binomial(m - x - 1, d - i - 1);
            if rank < c {
                break;
            }
            rank -= c;
            x += 1;
        }
        out.push(x);
        x += 1;
    }
    out
}

fn next_combination(c: &mut [usize], m: usize) -> bool {
    let d = c.len();
    let mut i = d;
    while i > 0 {
        i -= 1;
        if c[i] < m - d + i {
            c[i] += 1;
            for j in i + 1..d {
                c[j] = c[j - 1] + 1;
            }
            return true;
        }
    }
    false
}

/// Precomputed `cos(2 n ℓ φ)` for both Dove angles, indexed `[ℓ][n]`.
struct CosTable {
    p: usize,
    full: Vec<Vec<f64>>,
    half: Vec<Vec<f64>>,
}

impl CosTable {
    fn new(p: usize) -> Self {
        let tab = |phi: f64| -> Vec<Vec<f64>> {
            (0..p)
                .map(|l| (0..p).map(|n| (2.0 * (n * l) as f64 * phi).cos()).collect())
                .collect()
        };
        Self {
            p,
            full: tab(PI / p as f64),
            half: tab(PI / (2 * p) as f64),
        }
    }

    #[allow(clippy::needless_range_loop)]
    fn worst(&self, ks: &[u32], rule: AngleRule) -> (u64, f64) {
        let use_half = rule == AngleRule::Dove && ks.iter().all(|k| k % 2 == ks[0] % 2);
        let t = if use_half { &self.half } else { &self.full };
        let d2 = (ks.len() * ks.len()) as f64;
        let mut best = (0u64, f64::NEG_INFINITY);
        for n in 1..self.p {
            let s: f64 = ks.iter().map(|&k| t[k as usize][n]).sum::<f64>();
            let a = s * s / d2;
            if a > best.1 + TIE_TOL {
                best = (n as u64, a);
            }
        }
        best
    }
}

#[derive(Debug, Clone)]
struct Candidate {
    key: i64,
    k: Vec<u32>,
    worst_n: u64,
    worst_prob: f64,
}

impl Candidate {
    fn better_than(&self, other: &Candidate) -> bool {
        (self.key, &self.k) < (other.key, &other.k)
    }
}

fn quantize(prob: f64) -> i64 {
    (prob / TIE_TOL).round() as i64
}

fn pick(a: Option<Candidate>, b: Option<Candidate>) -> Option<Candidate> {
    match (a, b) {
        (Some(a), Some(b)) => Some(if b.better_than(&a) { b } else { a }),
        (a, None) => a,
        (None, b) => b,
    }
}

fn evaluate(table: &CosTable, ks: Vec<u32>, rule: AngleRule) -> Candidate {
    let (worst_n, worst_prob) = table.worst(&ks, rule);
    Candidate {
        key: quantize(worst_prob),
        k: ks,
        worst_n,
        worst_prob,
    }
}

fn finish(p: usize, c: Candidate, rule: AngleRule) -> Result<KSetResult> {
    Ok(KSetResult {
        p,
        d: c.k.len(),
        phi_rad: search_phi(p, &c.k, rule)?,
        k: c.k,
        rule,
        worst_n: c.worst_n,
        worst_prob: c.worst_prob,
        epsilon_target: None,
    })
}

fn check_size(p: usize, d: usize, domain: &[u32]) -> Result<()> {
    if d == 0 || d > domain.len() {
        return Err(Error::InvalidParameter(format!(
            "set size {d} not in 1..={} for p = {p}",
            domain.len()
        )));
    }
    Ok(())
}

/// Number of candidates [`exhaustive_best_kset_with`] would evaluate.
pub fn candidate_count(p: usize, d: usize, opts: &SearchOptions) -> u128 {
    binomial(opts.domain(p).len(), d)
}

/// Global minimizer of the worst false acceptance over all `d`-subsets,
/// ties going to the lexicographically smallest `K`.
pub fn exhaustive_best_kset(p: usize, d: usize) -> Result<KSetResult> {
    exhaustive_best_kset_with(p, d, &SearchOptions::default())
}

pub fn exhaustive_best_kset_with(p: usize, d: usize, opts: &SearchOptions) -> Result<KSetResult> {
    check_prime(p)?;
    opts.validate()?;
    let domain = opts.domain(p);
    check_size(p, d, &domain)?;
    let m = domain.len();
    let total = binomial(m, d);
    if total > EXHAUSTIVE_LIMIT {
        return Err(Error::BudgetExceeded {
            candidates: total,
            limit: EXHAUSTIVE_LIMIT,
        });
    }
    let table = CosTable::new(p);
    let n_chunks = total.div_ceil(CHUNK) as u64;
    let best = (0..n_chunks)
        .into_par_iter()
        .map(|chunk| {
            let start = chunk as u128 * CHUNK;
            let len = CHUNK.min(total - start);
            let mut comb = unrank(m, d, start);
            let mut best: Option<Candidate> = None;
            for i in 0..len {
                let ks: Vec<u32> = comb.iter().map(|&ix| domain[ix]).collect();
                best = pick(best, Some(evaluate(&table, ks, opts.rule)));
                if i + 1 < len {
                    next_combination(&mut comb, m);
                }
            }
            best
        })
        .reduce(|| None, pick)
        .expect("at least one candidate");
    finish(p, best, opts.rule)
}

/// Best of `trials` uniformly drawn `d`-subsets; deterministic in `seed`.
pub fn randomized_best_kset(p: usize, d: usize, trials: u64, seed: u64) -> Result<KSetResult> {
    randomized_best_kset_with(p, d, trials, seed, &SearchOptions::default())
}

pub fn randomized_best_kset_with(
    p: usize,
    d: usize,
    trials: u64,
    seed: u64,
    opts: &SearchOptions,
) -> Result<KSetResult> {
    check_prime(p)?;
    opts.validate()?;
    if trials == 0 {
        return Err(Error::InvalidParameter("trials must be at least 1".into()));
    }
    let domain = opts.domain(p);
    check_size(p, d, &domain)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let draws: Vec<Vec<u32>> = (0..trials)
        .map(|_| {
            let mut ix = index::sample(&mut rng, domain.len(), d).into_vec();
            ix.sort_unstable();
            ix.into_iter().map(|i| domain[i]).collect()
        })
        .collect();
    let table = CosTable::new(p);
    let best = draws
        .into_par_iter()
        .map(|ks| Some(evaluate(&table, ks, opts.rule)))
        .reduce(|| None, pick)
        .expect("trials >= 1");
    finish(p, best, opts.rule)
}

/// `⌈(4/ε) ln 2p⌉`, natural logarithm.
pub fn log_bound(p: usize, epsilon: f64) -> usize {
    ((4.0 / epsilon) * (2.0 * p as f64).ln()).ceil() as usize
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LogBoundReport {
    pub p: usize,
    pub epsilon: f64,
    pub bound: usize,
    /// Smallest `d` reaching `ε`, or `None` if no `d` up to the bound did.
    pub d_used: Option<usize>,
    pub best: Option<KSetResult>,
}

impl LogBoundReport {
    pub fn holds(&self) -> bool {
        self.d_used.is_some_and(|d| d <= self.bound)
    }
}

/// Smallest set size whose best `K` keeps every non-member at or below `ε`,
/// searched up to the logarithmic bound.
pub fn verify_log_bound(p: usize, epsilon: f64) -> Result<LogBoundReport> {
    verify_log_bound_with(p, epsilon, &SearchOptions::realizable())
}

pub fn verify_log_bound_with(
    p: usize,
    epsilon: f64,
    opts: &SearchOptions,
) -> Result<LogBoundReport> {
    check_prime(p)?;
    if !(epsilon > 0.0 && epsilon < 0.5) {
        return Err(Error::InvalidParameter(format!(
            "epsilon {epsilon} not in (0, 1/2)"
        )));
    }
    let bound = log_bound(p, epsilon);
    let max_d = bound.min(opts.domain(p).len());
    for d in 1..=max_d {
        let mut best = if candidate_count(p, d, opts) <= EXHAUSTIVE_LIMIT {
            exhaustive_best_kset_with(p, d, opts)?
        } else {
            randomized_best_kset_with(p, d, 1_000_000, d as u64, opts)?
        };
        if best.worst_prob <= epsilon {
            best.epsilon_target = Some(epsilon);
            return Ok(LogBoundReport {
                p,
                epsilon,
                bound,
                d_used: Some(d),
                best: Some(best),
            });
        }
    }
    Ok(LogBoundReport {
        p,
        epsilon,
        bound,
        d_used: None,
        best: None,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn unrank_matches_sequential_enumeration() {
        let (m, d) = (7, 3);
        let mut c: Vec<usize> = (0..d).collect();
        let mut rank = 0u128;
        loop {
            assert_eq!(unrank(m, d, rank), c);
            rank += 1;
            if !next_combination(&mut c, m) {
                break;
            }
        }
        assert_eq!(rank, binomial(m, d));
    }

    #[test]
    fn worst_false_accept_examples() {
        let (n, w) = worst_false_accept(5, &[1], PI / 10.0);
        assert_eq!(n, 1);
        assert_abs_diff_eq!(w, (PI / 5.0).cos().powi(2), epsilon = 1e-12);
        let (_, w) = worst_false_accept(5, &[1, 3], PI / 10.0);
        assert_abs_diff_eq!(w, 0.0625, epsilon = 1e-12);
        let (n, w) = worst_false_accept(11, &[1, 2, 3, 4], PI / 11.0);
        assert_eq!(n, 2);
        assert_abs_diff_eq!(w, 0.11243506495825782, epsilon = 1e-12);
    }

    #[test]
    fn cos_table_matches_closed_form() {
        let t = CosTable::new(13);
        for ks in [vec![1u32, 5, 6], vec![2, 4], vec![3]] {
            for rule in [AngleRule::Abstract, AngleRule::Dove] {
                let phi = search_phi(13, &ks, rule).unwrap();
                let (n1, w1) = t.worst(&ks, rule);
                let (n2, w2) = worst_false_accept(13, &ks, phi);
                assert_eq!(n1, n2);
                assert_abs_diff_eq!(w1, w2, epsilon = 1e-13);
            }
        }
    }

    #[test]
    fn exhaustive_small_cases() {
        let r = exhaustive_best_kset(5, 1).unwrap();
        assert_eq!(r.k, vec![1]);
        assert_abs_diff_eq!(r.worst_prob, 0.6545084971874737, epsilon = 1e-12);
        let r = exhaustive_best_kset(5, 2).unwrap();
        assert!(r.worst_prob <= 0.0625 + 1e-12);
        let r = exhaustive_best_kset_with(5, 2, &SearchOptions::exhaustive_abstract()).unwrap();
        assert_eq!(r.k, vec![1, 2]);
        assert!(exhaustive_best_kset(5, 3).is_err());
    }

    #[test]
    fn argument_errors() {
        assert!(matches!(
            exhaustive_best_kset(4, 1),
            Err(Error::InvalidParameter(_))
        ));
        assert!(matches!(
            exhaustive_best_kset(1, 1),
            Err(Error::InvalidModulus(1))
        ));
        assert!(matches!(
            randomized_best_kset(101, 8, 0, 1),
            Err(Error::InvalidParameter(_))
        ));
        let bad = SearchOptions {
            rule: AngleRule::Dove,
            dedup: true,
        };
        assert!(exhaustive_best_kset_with(7, 2, &bad).is_err());
    }

    #[test]
    fn budget_guard() {
        let opts = SearchOptions::exhaustive_abstract();
        assert!(candidate_count(101, 8, &opts) > EXHAUSTIVE_LIMIT);
        assert!(matches!(
            exhaustive_best_kset_with(101, 8, &opts),
            Err(Error::BudgetExceeded { .. })
        ));
    }

    #[test]
    fn randomized_saturates_small_space_and_is_deterministic() {
        let r = randomized_best_kset(5, 2, 100, 1).unwrap();
        assert_abs_diff_eq!(r.worst_prob, 0.0625, epsilon = 1e-12);
        let a = randomized_best_kset(101, 8, 500, 42).unwrap();
        let b = randomized_best_kset(101, 8, 500, 42).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn log_bound_examples() {
        let r = verify_log_bound(5, 1.0 / 3.0).unwrap();
        assert!(r.d_used.unwrap() <= 2);
        let r = verify_log_bound(11, 1.0 / 3.0).unwrap();
        assert!(r.d_used.unwrap() <= 4);
        let r = verify_log_bound(3, 0.49).unwrap();
        assert_eq!(r.d_used, Some(1));
        assert!(r.holds());
        assert_eq!(log_bound(5, 1.0 / 3.0), 28);
    }
}
