//! Feasibility search for implementing a distance matrix with `k` FeFETs per cell.
//!
//! The pipeline runs in four stages:
//!
//! 1. every matrix entry is decomposed into ordered per-FeFET current tuples
//!    ([`decompose_dm`]);
//! 2. each search row is solved independently by backtracking over one tuple
//!    per stored column, keeping only choices where a FeFET conducts a single
//!    current level within the row ([`backtrack_row`]);
//! 3. AC-3 prunes the per-row domains with the pairwise threshold-ordering
//!    constraint ([`ac3`]);
//! 4. a depth-first search picks one assignment per row that is pairwise
//!    consistent with all others ([`extract_solution`]).
//!
//! [`brute_force_feasible`] answers the same question by enumerating voltage
//! ranks directly, and is kept independent of the stages above.

mod ac3;
mod backtrack;
mod decompose;
mod oracle;
mod search;

use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use ac3::{ac3, arcs_consistent, FeasibleRegion};
pub use backtrack::{backtrack_row, break_symmetry};
pub use decompose::decompose_dm;
pub use oracle::{brute_force_feasible, FeFetProgram, OracleOutcome, DEFAULT_ORACLE_BUDGET};
pub use search::{
    enumerate_solutions, extract_solution, find_min_k, searchlines, solve_at_k, KReport,
    MinKResult, SolveOptions, DEFAULT_ASSIGNMENT_BUDGET,
};

/// Stored columns are tracked as bits of a `u64`.
pub const MAX_COLUMNS: usize = 64;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum SolverError {
    #[error("invalid current range: {0}")]
    InvalidRange(String),
    #[error("cells need at least one FeFET")]
    ZeroFeFets,
    #[error("{0} stored columns exceeds the supported maximum of {MAX_COLUMNS}")]
    TooManyColumns(usize),
    #[error("search row {row} exceeds the assignment budget of {limit}")]
    BudgetExceeded { row: usize, limit: usize },
    #[error("oracle budget exceeded: m*n*k = {needed} > {limit}")]
    OracleBudgetExceeded { needed: usize, limit: usize },
    #[error("row assignments have mismatched shapes")]
    ShapeMismatch,
    #[error("FeFET {fefet} conducts both {a} and {b} units within one search row")]
    InconsistentLevels { fefet: usize, a: u32, b: u32 },
}

/// Allowed per-FeFET currents, in multiples of the unit current.
///
/// Always contains 0 (the OFF state) and at least one positive level.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "Vec<u32>", into = "Vec<u32>")]
pub struct CurrentRange(Vec<u32>);

impl CurrentRange {
    pub fn new(mut levels: Vec<u32>) -> Result<Self, SolverError> {
        levels.sort_unstable();
        levels.dedup();
        if levels.first() != Some(&0) {
            return Err(SolverError::InvalidRange("must contain 0".into()));
        }
        if levels.len() < 2 {
            return Err(SolverError::InvalidRange(
                "must contain a positive level".into(),
            ));
        }
        Ok(CurrentRange(levels))
    }

    /// `{0, 1, ..., max}`.
    pub fn contiguous(max: u32) -> Result<Self, SolverError> {
        CurrentRange::new((0..=max).collect())
    }

    pub fn levels(&self) -> &[u32] {
        &self.0
    }

    pub fn positive(&self) -> &[u32] {
        &self.0[1..]
    }

    pub fn max(&self) -> u32 {
        *self.0.last().expect("nonempty by construction")
    }

    pub fn contains(&self, level: u32) -> bool {
        self.0.binary_search(&level).is_ok()
    }
}

impl Default for CurrentRange {
    /// Two drain-voltage levels: `{0, 1, 2}`.
    fn default() -> Self {
        CurrentRange(vec![0, 1, 2])
    }
}

impl TryFrom<Vec<u32>> for CurrentRange {
    type Error = SolverError;

    fn try_from(levels: Vec<u32>) -> Result<Self, Self::Error> {
        CurrentRange::new(levels)
    }
}

impl From<CurrentRange> for Vec<u32> {
    fn from(cr: CurrentRange) -> Self {
        cr.0
    }
}

impl fmt::Display for CurrentRange {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self.0.iter().map(u32::to_string).collect();
        write!(f, "{{{}}}", parts.join(","))
    }
}

impl std::str::FromStr for CurrentRange {
    type Err = SolverError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let trimmed = s.trim().trim_start_matches('{').trim_end_matches('}');
        let levels = trimmed
            .split(',')
            .map(|t| {
                t.trim()
                    .parse::<u32>()
                    .map_err(|_| SolverError::InvalidRange(format!("bad level {t:?}")))
            })
            .collect::<Result<Vec<_>, _>>()?;
        CurrentRange::new(levels)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CellConfig {
    pub k: usize,
    pub cr: CurrentRange,
}

impl CellConfig {
    pub fn new(k: usize, cr: CurrentRange) -> Result<Self, SolverError> {
        if k == 0 {
            return Err(SolverError::ZeroFeFets);
        }
        Ok(CellConfig { k, cr })
    }
}

/// Per-FeFET currents (unit multiples) for one (search, store) pair.
/// Index `i` is the physical FeFET `i` of the cell.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(transparent)]
pub struct CurrentTuple(pub Vec<u32>);

impl CurrentTuple {
    pub fn k(&self) -> usize {
        self.0.len()
    }

    pub fn total(&self) -> u32 {
        self.0.iter().sum()
    }

    pub fn values(&self) -> &[u32] {
        &self.0
    }
}

/// One tuple per stored column for a single search row.
///
/// Construction enforces that every FeFET carries at most one nonzero current
/// level across the row. The per-FeFET ON sets are cached as column bitmasks.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "Vec<CurrentTuple>", into = "Vec<CurrentTuple>")]
pub struct RowAssignment {
    tuples: Vec<CurrentTuple>,
    levels: Vec<u32>,
    on_masks: Vec<u64>,
}

impl RowAssignment {
    pub fn new(tuples: Vec<CurrentTuple>) -> Result<Self, SolverError> {
        if tuples.len() > MAX_COLUMNS {
            return Err(SolverError::TooManyColumns(tuples.len()));
        }
        let k = tuples.first().map(CurrentTuple::k).unwrap_or(0);
        if tuples.iter().any(|t| t.k() != k) {
            return Err(SolverError::ShapeMismatch);
        }
        let mut levels = vec![0u32; k];
        let mut on_masks = vec![0u64; k];
        for (col, tuple) in tuples.iter().enumerate() {
            for (i, &current) in tuple.values().iter().enumerate() {
                if current == 0 {
                    continue;
                }
                if levels[i] != 0 && levels[i] != current {
                    return Err(SolverError::InconsistentLevels {
                        fefet: i,
                        a: levels[i],
                        b: current,
                    });
                }
                levels[i] = current;
                on_masks[i] |= 1 << col;
            }
        }
        Ok(RowAssignment {
            tuples,
            levels,
            on_masks,
        })
    }

    pub fn k(&self) -> usize {
        self.levels.len()
    }

    pub fn cols(&self) -> usize {
        self.tuples.len()
    }

    pub fn tuples(&self) -> &[CurrentTuple] {
        &self.tuples
    }

    pub fn tuple(&self, store: usize) -> &CurrentTuple {
        &self.tuples[store]
    }

    /// The nonzero current of FeFET `fefet` in this row, or 0 if it never conducts.
    pub fn level(&self, fefet: usize) -> u32 {
        self.levels[fefet]
    }

    /// Stored columns in which FeFET `fefet` conducts, as a bitmask.
    pub fn on_mask(&self, fefet: usize) -> u64 {
        self.on_masks[fefet]
    }

    pub fn on_masks(&self) -> &[u64] {
        &self.on_masks
    }

    pub fn is_on(&self, store: usize, fefet: usize) -> bool {
        self.on_masks[fefet] >> store & 1 == 1
    }

    /// Total cell current for each stored column.
    pub fn column_totals(&self) -> Vec<u32> {
        self.tuples.iter().map(CurrentTuple::total).collect()
    }

    /// Values FeFET `fefet` takes across the stored columns.
    pub fn fefet_column(&self, fefet: usize) -> Vec<u32> {
        self.tuples.iter().map(|t| t.values()[fefet]).collect()
    }
}

impl TryFrom<Vec<CurrentTuple>> for RowAssignment {
    type Error = SolverError;

    fn try_from(tuples: Vec<CurrentTuple>) -> Result<Self, Self::Error> {
        RowAssignment::new(tuples)
    }
}

impl From<RowAssignment> for Vec<CurrentTuple> {
    fn from(row: RowAssignment) -> Self {
        row.tuples
    }
}

/// One [`RowAssignment`] per search row, jointly satisfying the ordering
/// constraint: for every FeFET the per-row ON sets form an inclusion chain.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct GlobalAssignment {
    k: usize,
    rows: Vec<RowAssignment>,
}

impl GlobalAssignment {
    /// Validates shapes and the inclusion-chain property.
    pub fn new(rows: Vec<RowAssignment>) -> Result<Self, SolverError> {
        let first = rows.first().ok_or(SolverError::ShapeMismatch)?;
        let (k, cols) = (first.k(), first.cols());
        if rows.iter().any(|r| r.k() != k || r.cols() != cols) {
            return Err(SolverError::ShapeMismatch);
        }
        let ga = GlobalAssignment { k, rows };
        if !ga.satisfies_chain() {
            return Err(SolverError::ShapeMismatch);
        }
        Ok(ga)
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn search_rows(&self) -> usize {
        self.rows.len()
    }

    pub fn stored_cols(&self) -> usize {
        self.rows[0].cols()
    }

    pub fn rows(&self) -> &[RowAssignment] {
        &self.rows
    }

    pub fn row(&self, search: usize) -> &RowAssignment {
        &self.rows[search]
    }

    pub fn current(&self, search: usize, store: usize) -> u32 {
        self.rows[search].tuple(store).total()
    }

    /// True when, for each FeFET, sorting the per-row ON sets by size yields
    /// a nested sequence.
    pub fn satisfies_chain(&self) -> bool {
        (0..self.k).all(|i| {
            let mut masks: Vec<u64> = self.rows.iter().map(|r| r.on_mask(i)).collect();
            masks.sort_by_key(|m| m.count_ones());
            masks.windows(2).all(|w| w[0] & w[1] == w[0])
        })
    }

    /// True when the summed currents reproduce `dm` exactly.
    pub fn reproduces(&self, dm: &crate::metric::DistanceMatrix) -> bool {
        dm.rows() == self.search_rows()
            && dm.cols() == self.stored_cols()
            && (0..dm.rows()).all(|s| (0..dm.cols()).all(|t| self.current(s, t) == dm.get(s, t)))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tuple(v: &[u32]) -> CurrentTuple {
        CurrentTuple(v.to_vec())
    }

    #[test]
    fn current_range_validation() {
        assert_eq!(CurrentRange::default().levels(), &[0, 1, 2]);
        assert_eq!(
            CurrentRange::new(vec![2, 0, 1, 1]).unwrap().levels(),
            &[0, 1, 2]
        );
        assert!(CurrentRange::new(vec![1, 2]).is_err());
        assert!(CurrentRange::new(vec![0]).is_err());
        assert_eq!(
            "{0,1,3}".parse::<CurrentRange>().unwrap().levels(),
            &[0, 1, 3]
        );
        assert_eq!("0, 2".parse::<CurrentRange>().unwrap().max(), 2);
        assert!("0,x".parse::<CurrentRange>().is_err());
        assert!(serde_json::from_str::<CurrentRange>("[1,2]").is_err());
    }

    #[test]
    fn cell_config_needs_a_fefet() {
        assert_eq!(
            CellConfig::new(0, CurrentRange::default()),
            Err(SolverError::ZeroFeFets)
        );
    }

    #[test]
    fn row_assignment_enforces_single_level_per_fefet() {
        let ok = RowAssignment::new(vec![
            tuple(&[0, 0, 2]),
            tuple(&[0, 1, 0]),
            tuple(&[0, 0, 2]),
        ])
        .unwrap();
        assert_eq!(ok.level(2), 2);
        assert_eq!(ok.on_mask(2), 0b101);
        assert_eq!(ok.level(0), 0);
        assert_eq!(ok.column_totals(), vec![2, 1, 2]);

        let bad = RowAssignment::new(vec![tuple(&[0, 2]), tuple(&[0, 1])]);
        assert_eq!(
            bad,
            Err(SolverError::InconsistentLevels {
                fefet: 1,
                a: 2,
                b: 1
            })
        );
        assert_eq!(
            RowAssignment::new(vec![tuple(&[0, 2]), tuple(&[0])]),
            Err(SolverError::ShapeMismatch)
        );
    }

    #[test]
    fn global_assignment_rejects_crossing_on_sets() {
        let a = RowAssignment::new(vec![tuple(&[1]), tuple(&[0])]).unwrap();
        let b = RowAssignment::new(vec![tuple(&[0]), tuple(&[1])]).unwrap();
        assert!(GlobalAssignment::new(vec![a.clone(), a.clone()]).is_ok());
        assert!(GlobalAssignment::new(vec![a, b]).is_err());
    }
}
