use std::collections::{HashMap, HashSet, VecDeque};

use serde::{Deserialize, Serialize};

use super::{RowAssignment, SolverError};

/// True iff, for every FeFET, the ON sets of `a` and `b` are nested.
///
/// A FeFET conducts for exactly the stored columns whose threshold lies below
/// the applied gate voltage, so two search rows must switch on nested column
/// sets. Crossing sets would demand contradictory threshold orderings.
pub fn arcs_consistent(a: &RowAssignment, b: &RowAssignment) -> Result<bool, SolverError> {
    if a.k() != b.k() || a.cols() != b.cols() {
        return Err(SolverError::ShapeMismatch);
    }
    Ok(masks_nested(a.on_masks(), b.on_masks()))
}

pub(crate) fn masks_nested(a: &[u64], b: &[u64]) -> bool {
    a.iter().zip(b).all(|(&x, &y)| {
        let both = x & y;
        both == x || both == y
    })
}

/// Per-row domains surviving arc-consistency pruning.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FeasibleRegion {
    pub domains: Vec<Vec<RowAssignment>>,
    pub feasible: bool,
    pub revisions: usize,
    pub removed: usize,
}

impl FeasibleRegion {
    /// Wraps domains without pruning.
    pub fn unpruned(domains: Vec<Vec<RowAssignment>>) -> Self {
        let feasible = !domains.is_empty() && domains.iter().all(|d| !d.is_empty());
        FeasibleRegion {
            domains,
            feasible,
            revisions: 0,
            removed: 0,
        }
    }

    pub fn domain_sizes(&self) -> Vec<usize> {
        self.domains.iter().map(Vec::len).collect()
    }
}

/// AC-3 over search rows. Every pair of rows is constrained by
/// [`arcs_consistent`]. Arcs are processed FIFO; when a row's domain shrinks,
/// every arc pointing into it is re-queued.
pub fn ac3(searchlines: Vec<Vec<RowAssignment>>) -> FeasibleRegion {
    let mut region = FeasibleRegion::unpruned(searchlines);
    if !region.feasible {
        return region;
    }
    let n = region.domains.len();
    let mut queue: VecDeque<(usize, usize)> = VecDeque::new();
    let mut queued = vec![vec![false; n]; n];
    for i in 0..n {
        for j in 0..n {
            if i != j {
                queue.push_back((i, j));
                queued[i][j] = true;
            }
        }
    }

    while let Some((i, j)) = queue.pop_front() {
        queued[i][j] = false;
        region.revisions += 1;
        let removed = revise(&mut region.domains, i, j);
        if removed == 0 {
            continue;
        }
        region.removed += removed;
        if region.domains[i].is_empty() {
            region.feasible = false;
            return region;
        }
        for h in 0..n {
            if h != i && h != j && !queued[h][i] {
                queue.push_back((h, i));
                queued[h][i] = true;
            }
        }
    }
    region
}

/// Removes values of row `i` lacking support in row `j`. Support depends only
/// on the ON masks, so rows are grouped by mask vector.
fn revise(domains: &mut [Vec<RowAssignment>], i: usize, j: usize) -> usize {
    let supports: Vec<&[u64]> = {
        let mut seen = HashSet::new();
        domains[j]
            .iter()
            .map(RowAssignment::on_masks)
            .filter(|m| seen.insert(*m))
            .collect()
    };
    let mut verdicts: HashMap<Vec<u64>, bool> = HashMap::new();
    let keep: Vec<bool> = domains[i]
        .iter()
        .map(|a| {
            *verdicts
                .entry(a.on_masks().to_vec())
                .or_insert_with(|| supports.iter().any(|b| masks_nested(a.on_masks(), b)))
        })
        .collect();
    let before = domains[i].len();
    let mut flags = keep.into_iter();
    domains[i].retain(|_| flags.next().unwrap_or(false));
    before - domains[i].len()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::solver::CurrentTuple;

    fn row(cols: &[&[u32]]) -> RowAssignment {
        RowAssignment::new(cols.iter().map(|c| CurrentTuple(c.to_vec())).collect()).unwrap()
    }

    #[test]
    fn crossing_on_sets_conflict() {
        // FeFET 2 ON only at store 00 in one row, only at store 01 in the other.
        let a = row(&[&[0, 1], &[0, 0]]);
        let b = row(&[&[0, 0], &[0, 1]]);
        assert_eq!(arcs_consistent(&a, &b), Ok(false));
    }

    #[test]
    fn all_off_and_reflexive() {
        let off = row(&[&[0, 0], &[0, 0]]);
        let b = row(&[&[2, 1], &[0, 1]]);
        assert_eq!(arcs_consistent(&off, &b), Ok(true));
        assert_eq!(arcs_consistent(&b, &off), Ok(true));
        assert_eq!(arcs_consistent(&b, &b), Ok(true));
    }

    #[test]
    fn nested_sets_with_different_levels_are_consistent() {
        let a = row(&[&[1], &[0], &[0]]);
        let b = row(&[&[2], &[2], &[0]]);
        assert_eq!(arcs_consistent(&a, &b), Ok(true));
    }

    #[test]
    fn shape_mismatch() {
        let a = row(&[&[1, 0]]);
        let b = row(&[&[1, 0], &[0, 0]]);
        assert_eq!(arcs_consistent(&a, &b), Err(SolverError::ShapeMismatch));
        let c = row(&[&[1]]);
        assert_eq!(arcs_consistent(&a, &c), Err(SolverError::ShapeMismatch));
    }

    #[test]
    fn single_row_is_untouched() {
        let domain = vec![row(&[&[1], &[0]]), row(&[&[0], &[1]])];
        let region = ac3(vec![domain.clone()]);
        assert!(region.feasible);
        assert_eq!(region.domains, vec![domain]);
        assert_eq!(region.revisions, 0);
    }

    #[test]
    fn empty_domain_is_infeasible() {
        let region = ac3(vec![vec![row(&[&[1]])], vec![]]);
        assert!(!region.feasible);
        assert!(!ac3(vec![]).feasible);
    }

    #[test]
    fn prunes_unsupported_values() {
        let x = row(&[&[1], &[0]]);
        let y = row(&[&[0], &[1]]);
        let both = row(&[&[1], &[1]]);
        // Row 1 only admits {store1}; {store0} in row 0 crosses it.
        let region = ac3(vec![vec![x.clone(), both.clone()], vec![y.clone()]]);
        assert!(region.feasible);
        assert_eq!(region.domains[0], vec![both]);
        assert_eq!(region.removed, 1);

        let wiped = ac3(vec![vec![x], vec![y]]);
        assert!(!wiped.feasible);
    }
}
