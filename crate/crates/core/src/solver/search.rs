use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::ac3::masks_nested;
use super::{
    ac3, backtrack_row, break_symmetry, decompose_dm, CurrentRange, FeasibleRegion,
    GlobalAssignment, RowAssignment, SolverError, MAX_COLUMNS,
};
use crate::metric::DistanceMatrix;

pub const DEFAULT_ASSIGNMENT_BUDGET: usize = 1_000_000;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SolveOptions {
    /// Maximum number of row assignments per search row.
    pub assignment_budget: usize,
    /// Restrict the first search row to FeFET-sorted assignments.
    pub break_symmetry: bool,
    /// Run AC-3 before the final search.
    pub use_ac3: bool,
}

impl Default for SolveOptions {
    fn default() -> Self {
        SolveOptions {
            assignment_budget: DEFAULT_ASSIGNMENT_BUDGET,
            break_symmetry: true,
            use_ac3: true,
        }
    }
}

/// Outcome of the pipeline at one cell size.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct KReport {
    pub k: usize,
    /// Row assignments per search row after backtracking.
    pub row_domain_sizes: Vec<usize>,
    /// Domain sizes after AC-3.
    pub pruned_domain_sizes: Vec<usize>,
    pub ac3_feasible: bool,
    pub ac3_revisions: usize,
    pub solution: Option<GlobalAssignment>,
}

impl KReport {
    pub fn feasible(&self) -> bool {
        self.solution.is_some()
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct MinKResult {
    /// Smallest feasible cell size, if any up to `k_max`.
    pub k: Option<usize>,
    pub reports: Vec<KReport>,
}

impl MinKResult {
    pub fn solution(&self) -> Option<&GlobalAssignment> {
        self.reports.last().and_then(|r| r.solution.as_ref())
    }
}

/// Builds the per-row domains for `k` FeFETs (decomposition and backtracking).
pub fn searchlines(
    dm: &DistanceMatrix,
    k: usize,
    cr: &CurrentRange,
    options: &SolveOptions,
) -> Result<Vec<Vec<RowAssignment>>, SolverError> {
    if k == 0 {
        return Err(SolverError::ZeroFeFets);
    }
    if dm.cols() > MAX_COLUMNS {
        return Err(SolverError::TooManyColumns(dm.cols()));
    }
    let mut rows = (0..dm.rows())
        .into_par_iter()
        .map(|s| {
            let dmcurs: Vec<_> = dm.row(s).iter().map(|&v| decompose_dm(k, v, cr)).collect();
            backtrack_row(&dmcurs, s, options.assignment_budget)
        })
        .collect::<Result<Vec<_>, _>>()?;
    if options.break_symmetry {
        if let Some(first) = rows.first_mut() {
            *first = break_symmetry(std::mem::take(first));
        }
    }
    Ok(rows)
}

/// Runs decomposition, backtracking, AC-3 and solution extraction at a fixed `k`.
pub fn solve_at_k(
    dm: &DistanceMatrix,
    k: usize,
    cr: &CurrentRange,
    options: &SolveOptions,
) -> Result<KReport, SolverError> {
    let rows = searchlines(dm, k, cr, options)?;
    let row_domain_sizes = rows.iter().map(Vec::len).collect();
    let region = if options.use_ac3 {
        ac3(rows)
    } else {
        FeasibleRegion::unpruned(rows)
    };
    let solution = extract_solution(&region);
    Ok(KReport {
        k,
        row_domain_sizes,
        pruned_domain_sizes: region.domain_sizes(),
        ac3_feasible: region.feasible,
        ac3_revisions: region.revisions,
        solution,
    })
}

/// Grows the cell one FeFET at a time until the matrix becomes implementable.
pub fn find_min_k(
    dm: &DistanceMatrix,
    cr: &CurrentRange,
    k_max: usize,
    options: &SolveOptions,
) -> Result<MinKResult, SolverError> {
    let mut reports = Vec::new();
    for k in 1..=k_max {
        let report = solve_at_k(dm, k, cr, options)?;
        let found = report.feasible();
        reports.push(report);
        if found {
            return Ok(MinKResult {
                k: Some(k),
                reports,
            });
        }
    }
    Ok(MinKResult { k: None, reports })
}

/// First pairwise-consistent pick of one assignment per row, in row order
/// and domain order. `None` if the region admits no global solution.
pub fn extract_solution(region: &FeasibleRegion) -> Option<GlobalAssignment> {
    let mut first = None;
    walk_solutions(region, |picks| {
        first = Some(picks.to_vec());
        false
    });
    first.map(|picks| assemble(region, &picks))
}

/// Every global solution, in the same order [`extract_solution`] visits them,
/// stopping after `limit`.
pub fn enumerate_solutions(region: &FeasibleRegion, limit: usize) -> Vec<GlobalAssignment> {
    let mut all: Vec<Vec<usize>> = Vec::new();
    if limit == 0 {
        return Vec::new();
    }
    walk_solutions(region, |picks| {
        all.push(picks.to_vec());
        all.len() < limit
    });
    all.into_iter().map(|p| assemble(region, &p)).collect()
}

fn assemble(region: &FeasibleRegion, picks: &[usize]) -> GlobalAssignment {
    let rows = picks
        .iter()
        .enumerate()
        .map(|(r, &i)| region.domains[r][i].clone())
        .collect();
    GlobalAssignment::new(rows).expect("picks are pairwise nested")
}

/// Depth-first search with forward checking. `visit` returns whether to
/// keep going.
fn walk_solutions(region: &FeasibleRegion, mut visit: impl FnMut(&[usize]) -> bool) {
    if !region.feasible {
        return;
    }
    let candidates: Vec<Vec<usize>> = region
        .domains
        .iter()
        .map(|d| (0..d.len()).collect())
        .collect();
    let mut picks = Vec::with_capacity(region.domains.len());
    descend(&region.domains, candidates, &mut picks, &mut visit);
}

fn descend(
    domains: &[Vec<RowAssignment>],
    candidates: Vec<Vec<usize>>,
    picks: &mut Vec<usize>,
    visit: &mut impl FnMut(&[usize]) -> bool,
) -> bool {
    let depth = picks.len();
    if depth == domains.len() {
        return visit(picks);
    }
    'choice: for &idx in &candidates[depth] {
        let masks = domains[depth][idx].on_masks();
        let mut narrowed = Vec::with_capacity(domains.len());
        narrowed.extend(candidates[..=depth].iter().cloned());
        for (row, cands) in candidates.iter().enumerate().skip(depth + 1) {
            let kept: Vec<usize> = cands
                .iter()
                .copied()
                .filter(|&c| masks_nested(masks, domains[row][c].on_masks()))
                .collect();
            if kept.is_empty() {
                continue 'choice;
            }
            narrowed.push(kept);
        }
        picks.push(idx);
        let keep_going = descend(domains, narrowed, picks, visit);
        picks.pop();
        if !keep_going {
            return false;
        }
    }
    true
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::metric::{build_dm, DistanceSpec, MetricKind};
    use crate::solver::CurrentTuple;

    fn hamming2() -> DistanceMatrix {
        build_dm(&DistanceSpec::built_in(MetricKind::Hamming, 2)).unwrap()
    }

    fn row(cols: &[&[u32]]) -> RowAssignment {
        RowAssignment::new(cols.iter().map(|c| CurrentTuple(c.to_vec())).collect()).unwrap()
    }

    #[test]
    fn hamming_two_bit_needs_three_fefets() {
        let result = find_min_k(
            &hamming2(),
            &CurrentRange::default(),
            4,
            &SolveOptions::default(),
        )
        .unwrap();
        assert_eq!(result.k, Some(3));
        assert_eq!(result.reports.len(), 3);
        assert!(!result.reports[0].feasible());
        assert!(!result.reports[1].feasible());
        let ga = result.solution().unwrap();
        assert!(ga.reproduces(&hamming2()));
        assert!(ga.satisfies_chain());
    }

    #[test]
    fn k3_region_is_ac3_feasible() {
        let rows = searchlines(
            &hamming2(),
            3,
            &CurrentRange::default(),
            &SolveOptions::default(),
        )
        .unwrap();
        let region = ac3(rows);
        assert!(region.feasible);
        assert!(region.domains.iter().all(|d| !d.is_empty()));
    }

    #[test]
    fn trivial_matrix() {
        let dm = DistanceMatrix::from_rows(vec![vec![0]]).unwrap();
        let cr = CurrentRange::new(vec![0, 1]).unwrap();
        let result = find_min_k(&dm, &cr, 1, &SolveOptions::default()).unwrap();
        assert_eq!(result.k, Some(1));
        assert_eq!(result.solution().unwrap().row(0).tuple(0).0, vec![0]);
    }

    #[test]
    fn infeasible_within_k_max() {
        let result = find_min_k(
            &hamming2(),
            &CurrentRange::default(),
            2,
            &SolveOptions::default(),
        )
        .unwrap();
        assert_eq!(result.k, None);
        assert!(result.solution().is_none());
    }

    #[test]
    fn single_row_single_assignment() {
        let only = row(&[&[1, 0], &[0, 0]]);
        let region = FeasibleRegion::unpruned(vec![vec![only.clone()]]);
        let ga = extract_solution(&region).unwrap();
        assert_eq!(ga.rows(), &[only]);
    }

    #[test]
    fn arc_consistent_but_globally_unsolvable() {
        // Three rows with two values each (P, Q). One FeFET per pair of rows
        // (i, j) makes P_i/P_j and Q_i/Q_j cross while P_i/Q_j and Q_i/P_j
        // nest, so two picks are compatible iff they differ. Every value has
        // support, but three rows cannot be 2-colored.
        let edges = [(0, 1), (1, 2), (0, 2)];
        let mut sets = vec![vec![vec![0u64; 3]; 2]; 3]; // [row][value][fefet]
        for (f, &(i, j)) in edges.iter().enumerate() {
            sets[i][0][f] = 0b001;
            sets[i][1][f] = 0b110;
            sets[j][0][f] = 0b010;
            sets[j][1][f] = 0b011;
        }
        let value = |masks: &[u64]| {
            let tuples = (0..3)
                .map(|c| CurrentTuple(masks.iter().map(|m| (m >> c & 1) as u32).collect()))
                .collect();
            RowAssignment::new(tuples).unwrap()
        };
        let domains: Vec<Vec<RowAssignment>> = sets
            .iter()
            .map(|vals| vals.iter().map(|m| value(m)).collect())
            .collect();
        let region = ac3(domains);
        assert!(region.feasible);
        assert_eq!(region.removed, 0);
        assert!(extract_solution(&region).is_none());
        assert!(enumerate_solutions(&region, usize::MAX).is_empty());
    }

    #[test]
    fn budget_surfaces_as_error() {
        let opts = SolveOptions {
            assignment_budget: 2,
            ..SolveOptions::default()
        };
        assert!(matches!(
            solve_at_k(&hamming2(), 3, &CurrentRange::default(), &opts),
            Err(SolverError::BudgetExceeded { .. })
        ));
    }

    #[test]
    fn deterministic_output() {
        let a = find_min_k(
            &hamming2(),
            &CurrentRange::default(),
            4,
            &SolveOptions::default(),
        )
        .unwrap();
        let b = find_min_k(
            &hamming2(),
            &CurrentRange::default(),
            4,
            &SolveOptions::default(),
        )
        .unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn enumeration_starts_with_extracted_solution() {
        let rows = searchlines(
            &hamming2(),
            3,
            &CurrentRange::default(),
            &SolveOptions::default(),
        )
        .unwrap();
        let region = ac3(rows);
        let all = enumerate_solutions(&region, 50);
        assert!(!all.is_empty());
        assert_eq!(Some(&all[0]), extract_solution(&region).as_ref());
        for ga in &all {
            assert!(ga.reproduces(&hamming2()));
        }
    }
}
