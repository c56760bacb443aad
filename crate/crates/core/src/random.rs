//! Seeded random instances and distributions.

use num_bigint::BigInt;
use num_rational::BigRational;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::instance::{PreferenceInstance, Shift, ShiftDistribution};

/// Random lists for `n` boys and `n` girls. Each agent ranks a uniformly
/// random permutation truncated to `ceil(completeness * n)` entries; pairs
/// not acceptable to both sides are then dropped.
pub fn gen_random_instance(n: usize, seed: u64, completeness: f64) -> PreferenceInstance {
    assert!(n >= 1, "n must be positive");
    assert!(completeness > 0.0 && completeness <= 1.0, "completeness must be in (0, 1]");
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let keep = ((completeness * n as f64).ceil() as usize).clamp(1, n);
    let mut draw = || -> Vec<Vec<usize>> {
        (0..n)
            .map(|_| {
                let mut list: Vec<usize> = (0..n).collect();
                list.shuffle(&mut rng);
                list.truncate(keep);
                list
            })
            .collect()
    };
    let mut boys = draw();
    let mut girls = draw();
    if keep < n {
        let boy_ok: Vec<Vec<bool>> = boys.iter().map(|l| mask(l, n)).collect();
        let girl_ok: Vec<Vec<bool>> = girls.iter().map(|l| mask(l, n)).collect();
        for (b, list) in boys.iter_mut().enumerate() {
            list.retain(|&g| girl_ok[g][b]);
        }
        for (g, list) in girls.iter_mut().enumerate() {
            list.retain(|&b| boy_ok[b][g]);
        }
    }
    PreferenceInstance::new(n, n, boys, girls).expect("mutual lists by construction")
}

fn mask(list: &[usize], n: usize) -> Vec<bool> {
    let mut m = vec![false; n];
    for &x in list {
        m[x] = true;
    }
    m
}

/// Random rational probabilities over `shifts`: integer weights in
/// `0..=max_weight`, normalized, at least one positive.
pub fn random_distribution(shifts: &[Shift], seed: u64, max_weight: u32) -> ShiftDistribution {
    if shifts.is_empty() {
        return ShiftDistribution::sub_distribution(Vec::new()).expect("empty is valid");
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut weights: Vec<u32> = shifts.iter().map(|_| rng.gen_range(0..=max_weight)).collect();
    if weights.iter().all(|&w| w == 0) {
        let i = rng.gen_range(0..weights.len());
        weights[i] = 1;
    }
    let total: u64 = weights.iter().map(|&w| u64::from(w)).sum();
    let entries = shifts
        .iter()
        .zip(weights)
        .map(|(s, w)| (*s, BigRational::new(BigInt::from(w), BigInt::from(total))))
        .collect();
    ShiftDistribution::new(entries).expect("weights sum to one")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::instance::enumerate_shift_domain;

    #[test]
    fn deterministic_in_seed() {
        assert_eq!(gen_random_instance(5, 7, 1.0), gen_random_instance(5, 7, 1.0));
        assert_ne!(gen_random_instance(5, 7, 1.0), gen_random_instance(5, 8, 1.0));
    }

    #[test]
    fn single_pair() {
        let inst = gen_random_instance(1, 99, 1.0);
        assert_eq!(inst.boy_prefs(0), &[0]);
        assert_eq!(inst.girl_prefs(0), &[0]);
    }

    #[test]
    fn truncated_lists_are_mutual() {
        let inst = gen_random_instance(8, 3, 0.5);
        for b in 0..8 {
            assert!(inst.boy_prefs(b).len() <= 4);
            for &g in inst.boy_prefs(b) {
                assert!(inst.girl_rank(g, b).is_some());
            }
        }
    }

    #[test]
    fn distributions_sum_to_one() {
        let inst = gen_random_instance(4, 1, 1.0);
        let d = random_distribution(&enumerate_shift_domain(&inst), 5, 10);
        assert_eq!(d.total(), BigRational::from_integer(1.into()));
        assert_eq!(d, random_distribution(&enumerate_shift_domain(&inst), 5, 10));
    }
}
