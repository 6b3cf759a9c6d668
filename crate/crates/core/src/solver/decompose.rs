use super::{CurrentRange, CurrentTuple};

/// All ordered `k`-tuples over `cr` whose entries sum to `value`.
///
/// Tuples come out in lexicographic order. An empty result means the entry
/// cannot be represented by `k` FeFETs.
pub fn decompose_dm(k: usize, value: u32, cr: &CurrentRange) -> Vec<CurrentTuple> {
    let mut out = Vec::new();
    let mut current = Vec::with_capacity(k);
    compose(k, value, cr, &mut current, &mut out);
    out
}

fn compose(
    slots: usize,
    remaining: u32,
    cr: &CurrentRange,
    current: &mut Vec<u32>,
    out: &mut Vec<CurrentTuple>,
) {
    if slots == 0 {
        if remaining == 0 {
            out.push(CurrentTuple(current.clone()));
        }
        return;
    }
    if u64::from(remaining) > u64::from(cr.max()) * slots as u64 {
        return;
    }
    for &level in cr.levels() {
        if level > remaining {
            break;
        }
        current.push(level);
        compose(slots - 1, remaining - level, cr, current, out);
        current.pop();
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use std::collections::BTreeSet;

    /// Filters the full Cartesian power of `cr` by sum.
    fn cartesian(k: usize, value: u32, cr: &CurrentRange) -> BTreeSet<Vec<u32>> {
        let mut all: Vec<Vec<u32>> = vec![vec![]];
        for _ in 0..k {
            all = all
                .into_iter()
                .flat_map(|p| {
                    cr.levels().iter().map(move |&l| {
                        let mut q = p.clone();
                        q.push(l);
                        q
                    })
                })
                .collect();
        }
        all.into_iter()
            .filter(|t| t.iter().sum::<u32>() == value)
            .collect()
    }

    fn as_set(tuples: &[CurrentTuple]) -> BTreeSet<Vec<u32>> {
        tuples.iter().map(|t| t.0.clone()).collect()
    }

    #[test]
    fn three_fefets_two_units() {
        let got = decompose_dm(3, 2, &CurrentRange::default());
        let expected: BTreeSet<Vec<u32>> = [
            [0, 0, 2],
            [0, 2, 0],
            [2, 0, 0],
            [0, 1, 1],
            [1, 0, 1],
            [1, 1, 0],
        ]
        .iter()
        .map(|t| t.to_vec())
        .collect();
        assert_eq!(got.len(), 6);
        assert_eq!(as_set(&got), expected);
        assert_eq!(got[0].0, vec![0, 0, 2]);
        assert!(got.windows(2).all(|w| w[0] < w[1]));
    }

    #[test]
    fn zero_and_unreachable() {
        let cr = CurrentRange::default();
        assert_eq!(decompose_dm(3, 0, &cr), vec![CurrentTuple(vec![0, 0, 0])]);
        assert!(decompose_dm(1, 3, &cr).is_empty());
        assert_eq!(decompose_dm(1, 2, &cr), vec![CurrentTuple(vec![2])]);
    }

    #[test]
    fn gapped_range() {
        let cr = CurrentRange::new(vec![0, 3]).unwrap();
        assert!(decompose_dm(2, 4, &cr).is_empty());
        assert_eq!(decompose_dm(2, 6, &cr), vec![CurrentTuple(vec![3, 3])]);
    }

    proptest! {
        #[test]
        fn matches_cartesian_enumeration(
            k in 1usize..=4,
            value in 0u32..=9,
            extra in proptest::collection::btree_set(1u32..=5, 1..=3),
        ) {
            let mut levels = vec![0];
            levels.extend(extra);
            let cr = CurrentRange::new(levels).unwrap();
            let got = decompose_dm(k, value, &cr);
            prop_assert_eq!(as_set(&got), cartesian(k, value, &cr));
            prop_assert_eq!(as_set(&got).len(), got.len());
        }
    }
}
