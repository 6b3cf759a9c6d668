//! Behavioral crossbar of 1FeFET1R cells with loser-take-all sensing.
//!
//! Each stored vector occupies one row; each vector element is one cell of
//! `k` FeFETs. A query drives gate and drain voltages per column from the
//! search encoding, and every row sums its cell currents on a clamped source
//! line. The loser-take-all stage reports the row with the smallest current.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::device::{conduct, sample_variation, sense_noise, FeFetState, VariationParams};
use crate::encoder::{
    realize_voltages, DeviceProgramming, EncoderError, VoltageEncoding, VoltageLadder,
};

/// Row currents closer than this fraction of the unit current are treated as
/// ties by the loser-take-all stage.
pub const LTA_TIE_FRACTION: f64 = 1e-6;

#[derive(Debug, Error, PartialEq)]
pub enum ArrayError {
    #[error("expected {expected} symbols per vector, got {found}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("symbol {symbol} out of range (encoding has {count} symbols)")]
    SymbolOutOfRange { symbol: u32, count: usize },
    #[error("row {row} out of range ({rows} rows)")]
    RowOutOfRange { row: usize, rows: usize },
    #[error("crossbar needs at least one row and one dimension")]
    Empty,
    #[error("cannot return {requested} neighbors from {available} unmasked rows")]
    NeighborCount { requested: usize, available: usize },
    #[error("every row is masked")]
    AllMasked,
    #[error("invalid variation parameters: {0}")]
    Variation(String),
    #[error(transparent)]
    Encoder(#[from] EncoderError),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QueryResult {
    /// Sensed current per row, amperes.
    pub row_currents: Vec<f64>,
    pub winner: usize,
    pub masked: Vec<usize>,
    pub unit_current: f64,
}

impl QueryResult {
    /// Row currents in unit-current multiples.
    pub fn row_units(&self) -> Vec<f64> {
        self.row_currents
            .iter()
            .map(|c| c / self.unit_current)
            .collect()
    }
}

/// Index of the smallest unmasked current; near-equal currents resolve to
/// the lowest index.
pub fn loser_take_all(currents: &[f64], masked: &[bool], tolerance: f64) -> Option<usize> {
    let mut best: Option<usize> = None;
    for (row, &current) in currents.iter().enumerate() {
        if masked.get(row).copied().unwrap_or(false) {
            continue;
        }
        match best {
            Some(b) if current >= currents[b] - tolerance => {}
            _ => best = Some(row),
        }
    }
    best
}

#[derive(Debug, Clone)]
pub struct Crossbar {
    encoding: VoltageEncoding,
    ladder: VoltageLadder,
    programming: DeviceProgramming,
    dims: usize,
    stored: Vec<Vec<u32>>,
    devices: Vec<FeFetState>,
    variation: Option<VariationParams>,
    rng: ChaCha8Rng,
}

impl Crossbar {
    /// Programs one row per stored vector. With variation enabled, devices are
    /// drawn from a stream seeded by `variation.seed`.
    pub fn new(
        encoding: VoltageEncoding,
        ladder: VoltageLadder,
        stored: &[Vec<u32>],
        variation: Option<VariationParams>,
    ) -> Result<Self, ArrayError> {
        let seed = variation.map(|v| v.seed).unwrap_or(0);
        Crossbar::with_rng(
            encoding,
            ladder,
            stored,
            variation,
            ChaCha8Rng::seed_from_u64(seed),
        )
    }

    pub fn with_rng(
        encoding: VoltageEncoding,
        ladder: VoltageLadder,
        stored: &[Vec<u32>],
        variation: Option<VariationParams>,
        rng: ChaCha8Rng,
    ) -> Result<Self, ArrayError> {
        if let Some(v) = &variation {
            v.validate().map_err(ArrayError::Variation)?;
        }
        let dims = stored.first().map(Vec::len).unwrap_or(0);
        if dims == 0 {
            return Err(ArrayError::Empty);
        }
        let programming = realize_voltages(&encoding, &ladder)?;
        let k = encoding.k();
        let mut cb = Crossbar {
            encoding,
            ladder,
            programming,
            dims,
            stored: Vec::with_capacity(stored.len()),
            devices: Vec::with_capacity(stored.len() * dims * k),
            variation: variation.filter(|v| !v.is_zero()),
            rng,
        };
        for vector in stored {
            cb.check_stored(vector)?;
            cb.stored.push(vector.clone());
            cb.devices.extend(std::iter::repeat_n(
                FeFetState::new(0.0, ladder.resistance),
                dims * k,
            ));
            let row = cb.stored.len() - 1;
            cb.write_row(row);
        }
        Ok(cb)
    }

    pub fn rows(&self) -> usize {
        self.stored.len()
    }

    pub fn dims(&self) -> usize {
        self.dims
    }

    pub fn k(&self) -> usize {
        self.encoding.k()
    }

    pub fn encoding(&self) -> &VoltageEncoding {
        &self.encoding
    }

    pub fn ladder(&self) -> &VoltageLadder {
        &self.ladder
    }

    pub fn stored(&self) -> &[Vec<u32>] {
        &self.stored
    }

    pub fn unit_current(&self) -> f64 {
        self.ladder.unit_current()
    }

    pub fn device(&self, row: usize, dim: usize, fefet: usize) -> &FeFetState {
        &self.devices[(row * self.dims + dim) * self.k() + fefet]
    }

    fn check_stored(&self, vector: &[u32]) -> Result<(), ArrayError> {
        check_vector(vector, self.dims, self.encoding.stored_symbols())
    }

    fn write_row(&mut self, row: usize) {
        let k = self.k();
        for d in 0..self.dims {
            let symbol = self.stored[row][d] as usize;
            for i in 0..k {
                let nominal = FeFetState::new(
                    self.programming.stored_vth[symbol][i],
                    self.ladder.resistance,
                );
                let state = match &self.variation {
                    Some(params) => sample_variation(&nominal, params, &mut self.rng),
                    None => nominal,
                };
                self.devices[(row * self.dims + d) * k + i] = state;
            }
        }
    }

    /// Rewrites one row. Variation, if enabled, is resampled for that row.
    pub fn program(&mut self, row: usize, vector: &[u32]) -> Result<(), ArrayError> {
        if row >= self.rows() {
            return Err(ArrayError::RowOutOfRange {
                row,
                rows: self.rows(),
            });
        }
        self.check_stored(vector)?;
        self.stored[row] = vector.to_vec();
        self.write_row(row);
        Ok(())
    }

    /// Summed source-line current of every row for `query`.
    pub fn row_currents(&self, query: &[u32]) -> Result<Vec<f64>, ArrayError> {
        check_vector(query, self.dims, self.encoding.search_symbols())?;
        let k = self.k();
        let prog = &self.programming;
        let cell_span = self.dims * k;
        Ok(self
            .devices
            .chunks(cell_span)
            .map(|row_devices| {
                let mut total = 0.0;
                for (d, &q) in query.iter().enumerate() {
                    let (vgs, vds) = (&prog.search_vgs[q as usize], &prog.search_vds[q as usize]);
                    for i in 0..k {
                        total += conduct(vgs[i], vds[i], &row_devices[d * k + i]);
                    }
                }
                total
            })
            .collect())
    }

    fn tolerance(&self) -> f64 {
        self.unit_current() * LTA_TIE_FRACTION
    }

    pub fn search(&self, query: &[u32]) -> Result<QueryResult, ArrayError> {
        self.search_masked(query, &[])
    }

    /// Search excluding `masked` rows from the loser-take-all comparison.
    pub fn search_masked(
        &self,
        query: &[u32],
        masked: &[usize],
    ) -> Result<QueryResult, ArrayError> {
        let currents = self.row_currents(query)?;
        let mut flags = vec![false; self.rows()];
        for &m in masked {
            if m >= self.rows() {
                return Err(ArrayError::RowOutOfRange {
                    row: m,
                    rows: self.rows(),
                });
            }
            flags[m] = true;
        }
        let winner =
            loser_take_all(&currents, &flags, self.tolerance()).ok_or(ArrayError::AllMasked)?;
        Ok(QueryResult {
            row_currents: currents,
            winner,
            masked: masked.to_vec(),
            unit_current: self.unit_current(),
        })
    }

    /// Like [`Crossbar::search`], with Gaussian noise of `sigma` amperes added
    /// to each sensed row current.
    pub fn search_noisy<R: Rng + ?Sized>(
        &self,
        query: &[u32],
        sigma: f64,
        rng: &mut R,
    ) -> Result<QueryResult, ArrayError> {
        let mut currents = self.row_currents(query)?;
        for c in &mut currents {
            *c += sense_noise(sigma, rng);
        }
        let flags = vec![false; self.rows()];
        let winner =
            loser_take_all(&currents, &flags, self.tolerance()).ok_or(ArrayError::AllMasked)?;
        Ok(QueryResult {
            row_currents: currents,
            winner,
            masked: Vec::new(),
            unit_current: self.unit_current(),
        })
    }

    /// `kq` nearest rows by repeated loser-take-all, masking each winner
    /// before the next round.
    pub fn knn(&self, query: &[u32], kq: usize) -> Result<Vec<usize>, ArrayError> {
        if kq == 0 || kq > self.rows() {
            return Err(ArrayError::NeighborCount {
                requested: kq,
                available: self.rows(),
            });
        }
        let currents = self.row_currents(query)?;
        let mut masked = vec![false; self.rows()];
        let mut order = Vec::with_capacity(kq);
        for _ in 0..kq {
            let w = loser_take_all(&currents, &masked, self.tolerance())
                .expect("kq <= rows leaves an unmasked row");
            masked[w] = true;
            order.push(w);
        }
        Ok(order)
    }

    pub fn export_state(&self) -> ArrayState {
        ArrayState {
            encoding: self.encoding.clone(),
            ladder: self.ladder,
            stored: self.stored.clone(),
            variation: self.variation,
        }
    }
}

fn check_vector(vector: &[u32], dims: usize, count: usize) -> Result<(), ArrayError> {
    if vector.len() != dims {
        return Err(ArrayError::DimensionMismatch {
            expected: dims,
            found: vector.len(),
        });
    }
    if let Some(&symbol) = vector.iter().find(|&&s| s as usize >= count) {
        return Err(ArrayError::SymbolOutOfRange { symbol, count });
    }
    Ok(())
}

/// Everything needed to rebuild a crossbar deterministically.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ArrayState {
    pub encoding: VoltageEncoding,
    pub ladder: VoltageLadder,
    pub stored: Vec<Vec<u32>>,
    pub variation: Option<VariationParams>,
}

impl ArrayState {
    pub fn build(&self) -> Result<Crossbar, ArrayError> {
        Crossbar::new(
            self.encoding.clone(),
            self.ladder,
            &self.stored,
            self.variation,
        )
    }
}

/// Rows split across several arrays, each at most `tile_rows` tall.
#[derive(Debug, Clone)]
pub struct TiledCrossbar {
    tiles: Vec<Crossbar>,
    tile_rows: usize,
}

impl TiledCrossbar {
    /// Each tile draws variation from its own stream (`seed`, tile index).
    pub fn new(
        encoding: VoltageEncoding,
        ladder: VoltageLadder,
        stored: &[Vec<u32>],
        tile_rows: usize,
        variation: Option<VariationParams>,
    ) -> Result<Self, ArrayError> {
        if stored.is_empty() || tile_rows == 0 {
            return Err(ArrayError::Empty);
        }
        let tiles = stored
            .chunks(tile_rows)
            .enumerate()
            .map(|(t, chunk)| {
                let mut rng = ChaCha8Rng::seed_from_u64(variation.map(|v| v.seed).unwrap_or(0));
                rng.set_stream(t as u64);
                Crossbar::with_rng(encoding.clone(), ladder, chunk, variation, rng)
            })
            .collect::<Result<Vec<_>, _>>()?;
        Ok(TiledCrossbar { tiles, tile_rows })
    }

    pub fn rows(&self) -> usize {
        self.tiles.iter().map(Crossbar::rows).sum()
    }

    pub fn tiles(&self) -> &[Crossbar] {
        &self.tiles
    }

    /// Per-tile winners merged by current; ties go to the lower global row.
    pub fn search(&self, query: &[u32]) -> Result<(usize, f64), ArrayError> {
        let mut best: Option<(usize, f64)> = None;
        for (t, tile) in self.tiles.iter().enumerate() {
            let result = tile.search(query)?;
            let current = result.row_currents[result.winner];
            let global = t * self.tile_rows + result.winner;
            match best {
                Some((_, c)) if current >= c - tile.tolerance() => {}
                _ => best = Some((global, current)),
            }
        }
        best.ok_or(ArrayError::Empty)
    }

    /// Currents of all rows, in global row order.
    pub fn row_currents(&self, query: &[u32]) -> Result<Vec<f64>, ArrayError> {
        let mut out = Vec::with_capacity(self.rows());
        for tile in &self.tiles {
            out.extend(tile.row_currents(query)?);
        }
        Ok(out)
    }

    /// Repeated loser-take-all across all tiles.
    pub fn knn(&self, query: &[u32], kq: usize) -> Result<Vec<usize>, ArrayError> {
        let rows = self.rows();
        if kq == 0 || kq > rows {
            return Err(ArrayError::NeighborCount {
                requested: kq,
                available: rows,
            });
        }
        let currents = self.row_currents(query)?;
        let tolerance = self.tiles[0].tolerance();
        let mut masked = vec![false; rows];
        let mut order = Vec::with_capacity(kq);
        for _ in 0..kq {
            let w = loser_take_all(&currents, &masked, tolerance).expect("unmasked row remains");
            masked[w] = true;
            order.push(w);
        }
        Ok(order)
    }
}

/// One scored query in one Monte-Carlo run.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct McOutcome {
    pub run: usize,
    pub query: usize,
    pub winner: usize,
    pub correct: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct McReport {
    pub runs: usize,
    pub correct: usize,
    pub total: usize,
    pub accuracy: f64,
    pub variation: VariationParams,
    pub outcomes: Vec<McOutcome>,
}

impl McReport {
    pub fn to_csv(&self) -> String {
        let mut out = String::from("run,query,winner,correct\n");
        for o in &self.outcomes {
            out.push_str(&format!(
                "{},{},{},{}\n",
                o.run, o.query, o.winner, o.correct as u8
            ));
        }
        out
    }
}

/// Repeats the search experiment with freshly sampled devices per run.
///
/// Run `r` draws its devices from stream `r` of a generator seeded by
/// `params.seed`, so results do not depend on scheduling.
pub fn monte_carlo(
    encoding: &VoltageEncoding,
    ladder: &VoltageLadder,
    stored: &[Vec<u32>],
    queries: &[Vec<u32>],
    expected: &[usize],
    params: &VariationParams,
    runs: usize,
) -> Result<McReport, ArrayError> {
    if queries.len() != expected.len() {
        return Err(ArrayError::DimensionMismatch {
            expected: queries.len(),
            found: expected.len(),
        });
    }
    if runs == 0 {
        return Err(ArrayError::Empty);
    }
    let per_run = (0..runs)
        .into_par_iter()
        .map(|run| {
            let mut rng = ChaCha8Rng::seed_from_u64(params.seed);
            rng.set_stream(run as u64);
            let cb = Crossbar::with_rng(encoding.clone(), *ladder, stored, Some(*params), rng)?;
            queries
                .iter()
                .zip(expected)
                .enumerate()
                .map(|(q, (query, &want))| {
                    let winner = cb.search(query)?.winner;
                    Ok(McOutcome {
                        run,
                        query: q,
                        winner,
                        correct: winner == want,
                    })
                })
                .collect::<Result<Vec<_>, ArrayError>>()
        })
        .collect::<Result<Vec<_>, _>>()?;
    let outcomes: Vec<McOutcome> = per_run.into_iter().flatten().collect();
    let correct = outcomes.iter().filter(|o| o.correct).count();
    let total = outcomes.len();
    Ok(McReport {
        runs,
        correct,
        total,
        accuracy: correct as f64 / total as f64,
        variation: *params,
        outcomes,
    })
}

/// A nearest-neighbor instance with a narrow margin: one stored row at
/// Hamming distance `near` from the query, one at `far`, and `rows - 2`
/// distractors at least `near + 4` bits away. Symbols are 2-bit.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct MarginInstance {
    pub stored: Vec<Vec<u32>>,
    pub query: Vec<u32>,
    pub winner: usize,
    pub runner_up: usize,
}

pub fn hamming_margin_instance(
    dims: usize,
    rows: usize,
    near: usize,
    far: usize,
    seed: u64,
) -> MarginInstance {
    assert!(rows >= 2 && near < far && far + 4 <= 2 * dims && near + 4 <= 2 * dims);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let query: Vec<u32> = (0..dims).map(|_| rng.random_range(0..4)).collect();
    let bits = 2 * dims;
    let flip = |count: usize, rng: &mut ChaCha8Rng| {
        let mut positions: Vec<usize> = (0..bits).collect();
        positions.shuffle(rng);
        let mut v = query.clone();
        for &p in &positions[..count] {
            v[p / 2] ^= 1 << (p % 2);
        }
        v
    };
    let mut order: Vec<usize> = (0..rows).collect();
    order.shuffle(&mut rng);
    let (winner, runner_up) = (order[0], order[1]);
    let mut stored = vec![Vec::new(); rows];
    stored[winner] = flip(near, &mut rng);
    stored[runner_up] = flip(far, &mut rng);
    for &r in &order[2..] {
        let distance = rng.random_range(near + 4..=bits.min(near + 12));
        stored[r] = flip(distance, &mut rng);
    }
    MarginInstance {
        stored,
        query,
        winner,
        runner_up,
    }
}
