//! Down-set enumeration and closure helpers for finite posets whose elements
//! are numbered in a linear extension.

use fixedbitset::FixedBitSet;

/// Iterates over every down-set of a poset exactly once.
///
/// Elements are `0..n` in topological order and `preds[i]` lists (some
/// generating set of) the predecessors of `i`, all smaller than `i`. Sets are
/// produced in lexicographic order of their indicator vectors, starting with
/// the empty set.
#[derive(Debug, Clone)]
pub struct DownSets<'a> {
    preds: &'a [Vec<usize>],
    chosen: Vec<bool>,
    started: bool,
    done: bool,
}

impl<'a> DownSets<'a> {
    pub fn new(preds: &'a [Vec<usize>]) -> Self {
        debug_assert!(preds.iter().enumerate().all(|(i, p)| p.iter().all(|&j| j < i)));
        DownSets { preds, chosen: vec![false; preds.len()], started: false, done: false }
    }
}

impl Iterator for DownSets<'_> {
    type Item = Vec<usize>;

    fn next(&mut self) -> Option<Vec<usize>> {
        if self.done {
            return None;
        }
        if self.started {
            let chosen = &self.chosen;
            let next = (0..chosen.len())
                .rev()
                .find(|&i| !chosen[i] && self.preds[i].iter().all(|&p| chosen[p]));
            match next {
                Some(i) => {
                    self.chosen[i] = true;
                    self.chosen[i + 1..].iter_mut().for_each(|c| *c = false);
                }
                None => {
                    self.done = true;
                    return None;
                }
            }
        }
        self.started = true;
        Some((0..self.chosen.len()).filter(|&i| self.chosen[i]).collect())
    }
}

/// Strict ancestor sets from a topologically numbered generating relation.
pub(crate) fn ancestor_sets(preds: &[Vec<usize>]) -> Vec<FixedBitSet> {
    let n = preds.len();
    let mut anc: Vec<FixedBitSet> = Vec::with_capacity(n);
    for (v, ps) in preds.iter().enumerate() {
        let mut set = FixedBitSet::with_capacity(n);
        for &p in ps {
            debug_assert!(p < v);
            set.union_with(&anc[p]);
            set.insert(p);
        }
        anc.push(set);
    }
    anc
}

/// Keep only the covering pairs among the generating edges.
pub(crate) fn transitive_reduction(preds: &[Vec<usize>], anc: &[FixedBitSet]) -> Vec<Vec<usize>> {
    preds
        .iter()
        .map(|ps| {
            let mut kept: Vec<usize> = ps
                .iter()
                .copied()
                .filter(|&u| !ps.iter().any(|&w| w != u && anc[w].contains(u)))
                .collect();
            kept.sort_unstable();
            kept.dedup();
            kept
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn count_by_brute_force(preds: &[Vec<usize>]) -> usize {
        let n = preds.len();
        (0u32..1 << n)
            .filter(|mask| {
                (0..n).all(|i| mask & (1 << i) == 0 || preds[i].iter().all(|&p| mask & (1 << p) != 0))
            })
            .count()
    }

    #[test]
    fn empty_poset_has_one_down_set() {
        let preds: Vec<Vec<usize>> = Vec::new();
        assert_eq!(DownSets::new(&preds).collect::<Vec<_>>(), vec![Vec::<usize>::new()]);
    }

    #[test]
    fn chain_of_two() {
        let preds = vec![vec![], vec![0]];
        let sets: Vec<_> = DownSets::new(&preds).collect();
        assert_eq!(sets, vec![vec![], vec![0], vec![0, 1]]);
    }

    #[test]
    fn matches_brute_force_on_small_orders() {
        let cases = vec![
            vec![vec![], vec![], vec![]],
            vec![vec![], vec![0], vec![0], vec![1, 2]],
            vec![vec![], vec![], vec![0, 1], vec![1], vec![2, 3]],
        ];
        for preds in cases {
            let sets: Vec<_> = DownSets::new(&preds).collect();
            let mut dedup = sets.clone();
            dedup.sort();
            dedup.dedup();
            assert_eq!(dedup.len(), sets.len());
            assert_eq!(sets.len(), count_by_brute_force(&preds));
        }
    }

    #[test]
    fn reduction_drops_implied_edges() {
        let preds = vec![vec![], vec![0], vec![0, 1]];
        let anc = ancestor_sets(&preds);
        assert!(anc[2].contains(0) && anc[2].contains(1));
        assert_eq!(transitive_reduction(&preds, &anc), vec![vec![], vec![0], vec![1]]);
    }
}
