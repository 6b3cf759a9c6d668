use super::{CurrentTuple, RowAssignment, SolverError, MAX_COLUMNS};

/// Enumerates every choice of one tuple per stored column in which each FeFET
/// carries at most one nonzero current level.
///
/// Columns are fixed in order (column 0 outermost) and tuples are tried in the
/// order given, so the output order is deterministic. Returns an empty set if
/// any column has no tuples. Fails once more than `limit` assignments have been
/// produced; `row` is only used to label that error.
pub fn backtrack_row(
    columns: &[Vec<CurrentTuple>],
    row: usize,
    limit: usize,
) -> Result<Vec<RowAssignment>, SolverError> {
    if columns.len() > MAX_COLUMNS {
        return Err(SolverError::TooManyColumns(columns.len()));
    }
    if columns.is_empty() || columns.iter().any(Vec::is_empty) {
        return Ok(Vec::new());
    }
    let k = columns[0][0].k();
    if columns.iter().flatten().any(|t| t.k() != k) {
        return Err(SolverError::ShapeMismatch);
    }

    let mut search = RowSearch {
        columns,
        levels: vec![0; k],
        chosen: Vec::with_capacity(columns.len()),
        out: Vec::new(),
        row,
        limit,
    };
    search.descend(0)?;
    Ok(search.out)
}

struct RowSearch<'a> {
    columns: &'a [Vec<CurrentTuple>],
    // Nonzero level each FeFET is committed to, 0 if none yet.
    levels: Vec<u32>,
    chosen: Vec<&'a CurrentTuple>,
    out: Vec<RowAssignment>,
    row: usize,
    limit: usize,
}

impl<'a> RowSearch<'a> {
    fn descend(&mut self, col: usize) -> Result<(), SolverError> {
        if col == self.columns.len() {
            if self.out.len() == self.limit {
                return Err(SolverError::BudgetExceeded {
                    row: self.row,
                    limit: self.limit,
                });
            }
            let tuples = self.chosen.iter().map(|t| (*t).clone()).collect();
            self.out.push(RowAssignment::new(tuples)?);
            return Ok(());
        }
        let mut newly_set = Vec::new();
        for tuple in &self.columns[col] {
            let compatible = tuple
                .values()
                .iter()
                .zip(&self.levels)
                .all(|(&c, &l)| c == 0 || l == 0 || c == l);
            if !compatible {
                continue;
            }
            newly_set.clear();
            for (i, &c) in tuple.values().iter().enumerate() {
                if c != 0 && self.levels[i] == 0 {
                    self.levels[i] = c;
                    newly_set.push(i);
                }
            }
            self.chosen.push(tuple);
            let result = self.descend(col + 1);
            self.chosen.pop();
            for &i in &newly_set {
                self.levels[i] = 0;
            }
            result?;
        }
        Ok(())
    }
}

/// Keeps only assignments whose per-FeFET column vectors are in
/// nondecreasing lexicographic order.
///
/// Relabeling FeFETs maps solutions to solutions, so applying this to a
/// single search row removes permuted copies without losing feasibility.
pub fn break_symmetry(row: Vec<RowAssignment>) -> Vec<RowAssignment> {
    row.into_iter()
        .filter(|a| {
            let columns: Vec<Vec<u32>> = (0..a.k()).map(|i| a.fefet_column(i)).collect();
            columns.windows(2).all(|w| w[0] <= w[1])
        })
        .collect()
}
