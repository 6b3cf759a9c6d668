//! Exhaustive feasibility check that shares no code with the CSP pipeline.
//!
//! Each FeFET is described directly by device programming: a threshold rank
//! per stored column, a gate rank per search row and a drain level per search
//! row. The FeFET conducts iff the gate rank strictly exceeds the threshold
//! rank. The oracle enumerates every such program, collects the distinct
//! current matrices one FeFET can contribute, and searches for `k` of them
//! summing to the distance matrix.

use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use super::{CurrentRange, SolverError};
use crate::metric::DistanceMatrix;

/// Default cap on `m * n * k`.
pub const DEFAULT_ORACLE_BUDGET: usize = 64;

/// Concrete ranks and drain levels for one FeFET.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FeFetProgram {
    pub vth_ranks: Vec<u32>,
    pub vgs_ranks: Vec<u32>,
    pub vds_levels: Vec<u32>,
}

impl FeFetProgram {
    pub fn current(&self, search: usize, store: usize) -> u32 {
        if self.vgs_ranks[search] > self.vth_ranks[store] {
            self.vds_levels[search]
        } else {
            0
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct OracleOutcome {
    pub feasible: bool,
    /// One program per FeFET reproducing the matrix, when feasible.
    pub witness: Option<Vec<FeFetProgram>>,
    /// Distinct single-FeFET current matrices that fit under the target.
    pub contributions: usize,
}

pub fn brute_force_feasible(
    dm: &DistanceMatrix,
    k: usize,
    cr: &CurrentRange,
    budget: usize,
) -> Result<OracleOutcome, SolverError> {
    if k == 0 {
        return Err(SolverError::ZeroFeFets);
    }
    let (m, n) = (dm.rows(), dm.cols());
    let needed = m * n * k;
    if needed > budget {
        return Err(SolverError::OracleBudgetExceeded {
            needed,
            limit: budget,
        });
    }
    let target: Vec<u32> = (0..m).flat_map(|s| dm.row(s).to_vec()).collect();

    let patterns = on_patterns(m, n);
    let mut contributions: Vec<(Vec<u32>, FeFetProgram)> = Vec::new();
    let mut seen: HashMap<Vec<u32>, usize> = HashMap::new();
    for (pattern, (vth, vgs)) in &patterns {
        let active: Vec<usize> = (0..m)
            .filter(|&s| pattern[s * n..(s + 1) * n].iter().any(|&on| on))
            .collect();
        let mut levels = vec![cr.positive()[0]; m];
        for_each_product(cr.positive(), active.len(), &mut |choice| {
            for (&s, &level) in active.iter().zip(choice) {
                levels[s] = level;
            }
            let matrix: Vec<u32> = (0..m * n)
                .map(|idx| if pattern[idx] { levels[idx / n] } else { 0 })
                .collect();
            if matrix.iter().zip(&target).all(|(c, t)| c <= t) && !seen.contains_key(&matrix) {
                seen.insert(matrix.clone(), contributions.len());
                contributions.push((
                    matrix,
                    FeFetProgram {
                        vth_ranks: vth.clone(),
                        vgs_ranks: vgs.clone(),
                        vds_levels: levels.clone(),
                    },
                ));
            }
        });
    }

    let all: Vec<usize> = (0..contributions.len()).collect();
    let mut picks = Vec::with_capacity(k);
    let found = combine(&contributions, &seen, &target, k, &all, &mut picks);
    let witness = found.then(|| {
        picks
            .iter()
            .map(|&i| contributions[i].1.clone())
            .collect::<Vec<_>>()
    });
    Ok(OracleOutcome {
        feasible: found,
        witness,
        contributions: contributions.len(),
    })
}

type Ranks = (Vec<u32>, Vec<u32>);

/// Distinct ON/OFF matrices (row-major) over all threshold ranks in `0..n`
/// and gate ranks in `0..=n`, each with the first ranks that produced it.
fn on_patterns(m: usize, n: usize) -> Vec<(Vec<bool>, Ranks)> {
    let vth_alphabet: Vec<u32> = (0..n as u32).collect();
    let vgs_alphabet: Vec<u32> = (0..=n as u32).collect();
    let mut index: HashMap<Vec<bool>, usize> = HashMap::new();
    let mut out = Vec::new();
    for_each_product(&vth_alphabet, n, &mut |vth| {
        for_each_product(&vgs_alphabet, m, &mut |vgs| {
            let pattern: Vec<bool> = (0..m * n).map(|idx| vgs[idx / n] > vth[idx % n]).collect();
            if !index.contains_key(&pattern) {
                index.insert(pattern.clone(), out.len());
                out.push((pattern, (vth.to_vec(), vgs.to_vec())));
            }
        });
    });
    out
}

/// Calls `f` with every length-`len` sequence over `alphabet`, odometer order.
fn for_each_product(alphabet: &[u32], len: usize, f: &mut dyn FnMut(&[u32])) {
    let mut digits = vec![0usize; len];
    let mut values: Vec<u32> = vec![alphabet[0]; len];
    loop {
        f(&values);
        let mut pos = len;
        loop {
            if pos == 0 {
                return;
            }
            pos -= 1;
            digits[pos] += 1;
            if digits[pos] < alphabet.len() {
                values[pos] = alphabet[digits[pos]];
                break;
            }
            digits[pos] = 0;
            values[pos] = alphabet[0];
        }
    }
}

/// Looks for a multiset of `k` contributions (indices nondecreasing within
/// `candidates`) summing exactly to `residual`.
fn combine(
    contributions: &[(Vec<u32>, FeFetProgram)],
    lookup: &HashMap<Vec<u32>, usize>,
    residual: &[u32],
    k: usize,
    candidates: &[usize],
    picks: &mut Vec<usize>,
) -> bool {
    if k == 1 {
        return match lookup.get(residual) {
            Some(&i) => {
                picks.push(i);
                true
            }
            None => false,
        };
    }
    for (pos, &c) in candidates.iter().enumerate() {
        let next: Vec<u32> = residual
            .iter()
            .zip(&contributions[c].0)
            .map(|(r, v)| r - v)
            .collect();
        let narrowed: Vec<usize> = candidates[pos..]
            .iter()
            .copied()
            .filter(|&d| contributions[d].0.iter().zip(&next).all(|(v, r)| v <= r))
            .collect();
        if narrowed.is_empty() {
            continue;
        }
        picks.push(c);
        if combine(contributions, lookup, &next, k - 1, &narrowed, picks) {
            return true;
        }
        picks.pop();
    }
    false
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::metric::{build_dm, DistanceSpec, MetricKind};

    fn hamming2() -> DistanceMatrix {
        build_dm(&DistanceSpec::built_in(MetricKind::Hamming, 2)).unwrap()
    }

    fn check_witness(dm: &DistanceMatrix, programs: &[FeFetProgram]) {
        for s in 0..dm.rows() {
            for t in 0..dm.cols() {
                let total: u32 = programs.iter().map(|p| p.current(s, t)).sum();
                assert_eq!(total, dm.get(s, t), "({s},{t})");
            }
        }
    }

    #[test]
    fn hamming_two_bit_verdicts() {
        let cr = CurrentRange::default();
        let dm = hamming2();
        assert!(!brute_force_feasible(&dm, 1, &cr, 64).unwrap().feasible);
        assert!(!brute_force_feasible(&dm, 2, &cr, 64).unwrap().feasible);
        let yes = brute_force_feasible(&dm, 3, &cr, 64).unwrap();
        assert!(yes.feasible);
        let witness = yes.witness.unwrap();
        assert_eq!(witness.len(), 3);
        check_witness(&dm, &witness);
    }

    #[test]
    fn trivial_matrix() {
        let dm = DistanceMatrix::from_rows(vec![vec![0]]).unwrap();
        let out =
            brute_force_feasible(&dm, 1, &CurrentRange::new(vec![0, 1]).unwrap(), 64).unwrap();
        assert!(out.feasible);
        assert_eq!(out.witness.unwrap()[0].current(0, 0), 0);
    }

    #[test]
    fn budget() {
        assert_eq!(
            brute_force_feasible(&hamming2(), 5, &CurrentRange::default(), 64),
            Err(SolverError::OracleBudgetExceeded {
                needed: 80,
                limit: 64
            })
        );
    }

    #[test]
    fn single_fefet_patterns_are_staircases() {
        // With one stored column the FeFET is ON in any subset of rows.
        assert_eq!(on_patterns(3, 1).len(), 8);
        // One search row: any down-set of the columns under some order = any subset.
        assert_eq!(on_patterns(1, 3).len(), 8);
        // Two rows, two columns: families of two nested-or-not sets that are
        // realizable, i.e. pairs (A, B) with A, B comparable: 16 - 2 crossing.
        assert_eq!(on_patterns(2, 2).len(), 14);
    }

    #[test]
    fn product_enumeration() {
        let mut seen = Vec::new();
        for_each_product(&[0, 5], 2, &mut |v| seen.push(v.to_vec()));
        assert_eq!(seen, vec![vec![0, 0], vec![0, 5], vec![5, 0], vec![5, 5]]);
    }
}
