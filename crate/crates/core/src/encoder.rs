//! Voltage-rank encodings derived from solver output.
//!
//! A [`VoltageEncoding`] assigns, per FeFET of a cell, a threshold rank to
//! every stored symbol and a gate rank plus drain multiple to every search
//! symbol. A FeFET conducts iff its gate rank is strictly greater than its
//! threshold rank; it then carries `vds_multiple` unit currents.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::metric::DistanceMatrix;
use crate::solver::{CurrentTuple, GlobalAssignment, RowAssignment};

#[derive(Debug, Error, PartialEq)]
pub enum EncoderError {
    #[error("encoding is {enc_rows}x{enc_cols} but the distance matrix is {dm_rows}x{dm_cols}")]
    DimensionMismatch {
        enc_rows: usize,
        enc_cols: usize,
        dm_rows: usize,
        dm_cols: usize,
    },
    #[error("derived encoding does not reproduce the assignment at search {search}, store {store}, FeFET {fefet}")]
    Inconsistent {
        search: usize,
        store: usize,
        fefet: usize,
    },
    #[error("invalid encoding: {0}")]
    Schema(String),
    #[error("rank {rank} exceeds the maximum of {max}")]
    RankOutOfRange { rank: u32, max: u32 },
    #[error("voltage ladder violates Vs0 < Vt0 < Vs1 < ...: {0}")]
    Ladder(String),
    #[error("malformed encoding JSON: {0}")]
    Json(String),
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct SearchCode {
    pub vgs: Vec<u32>,
    pub vds: Vec<u32>,
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "EncodingFile", into = "EncodingFile")]
pub struct VoltageEncoding {
    k: usize,
    /// Threshold rank per FeFET, indexed by stored symbol.
    stored: Vec<Vec<u32>>,
    /// Gate rank and drain multiple per FeFET, indexed by search symbol.
    search: Vec<SearchCode>,
}

impl VoltageEncoding {
    pub fn new(
        k: usize,
        stored: Vec<Vec<u32>>,
        search: Vec<SearchCode>,
    ) -> Result<Self, EncoderError> {
        if k == 0 {
            return Err(EncoderError::Schema("k must be at least 1".into()));
        }
        if stored.is_empty() || search.is_empty() {
            return Err(EncoderError::Schema(
                "need at least one stored and one search symbol".into(),
            ));
        }
        if stored.iter().any(|v| v.len() != k) {
            return Err(EncoderError::Schema(format!(
                "every stored code needs {k} threshold ranks"
            )));
        }
        if search.iter().any(|c| c.vgs.len() != k || c.vds.len() != k) {
            return Err(EncoderError::Schema(format!(
                "every search code needs {k} gate ranks and {k} drain multiples"
            )));
        }
        if search.iter().flat_map(|c| &c.vds).any(|&m| m == 0) {
            return Err(EncoderError::Schema(
                "drain multiples must be positive (0 is the OFF state, not a drain level)".into(),
            ));
        }
        let max = (stored.len() + search.len()) as u32;
        let ranks = stored
            .iter()
            .flatten()
            .chain(search.iter().flat_map(|c| &c.vgs));
        if let Some(&rank) = ranks.into_iter().find(|&&r| r > max) {
            return Err(EncoderError::RankOutOfRange { rank, max });
        }
        Ok(VoltageEncoding { k, stored, search })
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn stored_symbols(&self) -> usize {
        self.stored.len()
    }

    pub fn search_symbols(&self) -> usize {
        self.search.len()
    }

    pub fn vth_ranks(&self, store: usize) -> &[u32] {
        &self.stored[store]
    }

    pub fn search_code(&self, search: usize) -> &SearchCode {
        &self.search[search]
    }

    pub fn is_on(&self, search: usize, store: usize, fefet: usize) -> bool {
        self.search[search].vgs[fefet] > self.stored[store][fefet]
    }

    /// Ideal cell current in unit multiples.
    pub fn current(&self, search: usize, store: usize) -> u32 {
        (0..self.k)
            .filter(|&i| self.is_on(search, store, i))
            .map(|i| self.search[search].vds[i])
            .sum()
    }

    pub fn max_vth_rank(&self) -> u32 {
        self.stored.iter().flatten().copied().max().unwrap_or(0)
    }

    pub fn max_vgs_rank(&self) -> u32 {
        self.search
            .iter()
            .flat_map(|c| &c.vgs)
            .copied()
            .max()
            .unwrap_or(0)
    }

    /// Rebuilds the per-FeFET current assignment this encoding induces.
    pub fn to_assignment(&self) -> Result<GlobalAssignment, EncoderError> {
        let rows = (0..self.search_symbols())
            .map(|s| {
                let tuples = (0..self.stored_symbols())
                    .map(|t| {
                        CurrentTuple(
                            (0..self.k)
                                .map(|i| {
                                    if self.is_on(s, t, i) {
                                        self.search[s].vds[i]
                                    } else {
                                        0
                                    }
                                })
                                .collect(),
                        )
                    })
                    .collect();
                RowAssignment::new(tuples).map_err(|e| EncoderError::Schema(e.to_string()))
            })
            .collect::<Result<Vec<_>, _>>()?;
        GlobalAssignment::new(rows).map_err(|e| EncoderError::Schema(e.to_string()))
    }
}

/// Turns a solver solution into threshold, gate and drain ranks.
///
/// Per FeFET, stored columns are ranked by how many search rows switch them
/// on: more ON rows means a lower threshold, and equal counts share a level.
/// Each search row gets the lowest gate rank lying above every threshold it
/// must switch on, so rows with more OFF states sit lower. The drain multiple
/// is the row's ON current, or 1 for a row that never switches the FeFET on.
pub fn derive_encoding(ga: &GlobalAssignment) -> Result<VoltageEncoding, EncoderError> {
    let (m, n, k) = (ga.search_rows(), ga.stored_cols(), ga.k());
    let mut stored = vec![vec![0u32; k]; n];
    let mut search = vec![
        SearchCode {
            vgs: vec![0; k],
            vds: vec![1; k],
        };
        m
    ];

    for i in 0..k {
        let on_counts: Vec<usize> = (0..n)
            .map(|t| (0..m).filter(|&s| ga.row(s).is_on(t, i)).count())
            .collect();
        let mut levels = on_counts.clone();
        levels.sort_unstable_by(|a, b| b.cmp(a));
        levels.dedup();
        for t in 0..n {
            stored[t][i] = levels.iter().position(|&c| c == on_counts[t]).unwrap() as u32;
        }
        for s in 0..m {
            let row = ga.row(s);
            search[s].vgs[i] = (0..n)
                .filter(|&t| row.is_on(t, i))
                .map(|t| stored[t][i] + 1)
                .max()
                .unwrap_or(0);
            if row.level(i) != 0 {
                search[s].vds[i] = row.level(i);
            }
        }
    }

    let enc = VoltageEncoding::new(k, stored, search)?;
    for s in 0..m {
        for t in 0..n {
            for i in 0..k {
                let want = ga.row(s).tuple(t).values()[i];
                let got = if enc.is_on(s, t, i) {
                    enc.search[s].vds[i]
                } else {
                    0
                };
                if want != got {
                    return Err(EncoderError::Inconsistent {
                        search: s,
                        store: t,
                        fefet: i,
                    });
                }
            }
        }
    }
    Ok(enc)
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Mismatch {
    pub search: usize,
    pub store: usize,
    pub expected: u32,
    pub actual: u32,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct VerifyReport {
    pub pass: bool,
    pub checked: usize,
    pub matched: usize,
    pub mismatches: Vec<Mismatch>,
}

/// Compares every (search, store) cell current of `enc` against `dm`.
pub fn verify_encoding(
    enc: &VoltageEncoding,
    dm: &DistanceMatrix,
) -> Result<VerifyReport, EncoderError> {
    if enc.search_symbols() != dm.rows() || enc.stored_symbols() != dm.cols() {
        return Err(EncoderError::DimensionMismatch {
            enc_rows: enc.search_symbols(),
            enc_cols: enc.stored_symbols(),
            dm_rows: dm.rows(),
            dm_cols: dm.cols(),
        });
    }
    let mut mismatches = Vec::new();
    for s in 0..dm.rows() {
        for t in 0..dm.cols() {
            let actual = enc.current(s, t);
            if actual != dm.get(s, t) {
                mismatches.push(Mismatch {
                    search: s,
                    store: t,
                    expected: dm.get(s, t),
                    actual,
                });
            }
        }
    }
    let checked = dm.rows() * dm.cols();
    Ok(VerifyReport {
        pass: mismatches.is_empty(),
        checked,
        matched: checked - mismatches.len(),
        mismatches,
    })
}

/// Concrete level voltages for realizing ranks.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct VoltageLadder {
    pub vgs_base: f64,
    pub vth_base: f64,
    pub step: f64,
    pub unit_vds: f64,
    pub resistance: f64,
    /// Highest threshold or gate rank the ladder provides.
    pub max_rank: u32,
}

impl Default for VoltageLadder {
    fn default() -> Self {
        VoltageLadder::centered(0.5, 0.4, 0.1, 1e6)
    }
}

impl VoltageLadder {
    /// Gate levels placed halfway between neighbouring threshold levels.
    pub fn centered(vth_base: f64, step: f64, unit_vds: f64, resistance: f64) -> Self {
        VoltageLadder {
            vgs_base: vth_base - step / 2.0,
            vth_base,
            step,
            unit_vds,
            resistance,
            max_rank: 15,
        }
    }

    pub fn validate(&self) -> Result<(), EncoderError> {
        let finite = [
            self.vgs_base,
            self.vth_base,
            self.step,
            self.unit_vds,
            self.resistance,
        ]
        .iter()
        .all(|v| v.is_finite());
        if !finite {
            return Err(EncoderError::Ladder("non-finite parameter".into()));
        }
        if self.step <= 0.0 {
            return Err(EncoderError::Ladder("step must be positive".into()));
        }
        if !(self.vgs_base < self.vth_base && self.vth_base < self.vgs_base + self.step) {
            return Err(EncoderError::Ladder(format!(
                "need vgs_base < vth_base < vgs_base + step, got {} / {} / {}",
                self.vgs_base, self.vth_base, self.step
            )));
        }
        if self.unit_vds <= 0.0 || self.resistance <= 0.0 {
            return Err(EncoderError::Ladder(
                "unit drain voltage and resistance must be positive".into(),
            ));
        }
        Ok(())
    }

    pub fn vth(&self, rank: u32) -> f64 {
        self.vth_base + f64::from(rank) * self.step
    }

    pub fn vgs(&self, rank: u32) -> f64 {
        self.vgs_base + f64::from(rank) * self.step
    }

    pub fn vds(&self, multiple: u32) -> f64 {
        f64::from(multiple) * self.unit_vds
    }

    /// ON current of one FeFET at the smallest drain level.
    pub fn unit_current(&self) -> f64 {
        self.unit_vds / self.resistance
    }
}

/// Voltages to program and apply, indexed `[symbol][fefet]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DeviceProgramming {
    pub stored_vth: Vec<Vec<f64>>,
    pub search_vgs: Vec<Vec<f64>>,
    pub search_vds: Vec<Vec<f64>>,
    pub unit_current: f64,
    pub resistance: f64,
}

impl DeviceProgramming {
    /// Ideal ON current for a drain voltage under the nominal resistor.
    pub fn ideal_current(&self, vds: f64) -> f64 {
        vds / self.resistance
    }
}

pub fn realize_voltages(
    enc: &VoltageEncoding,
    ladder: &VoltageLadder,
) -> Result<DeviceProgramming, EncoderError> {
    ladder.validate()?;
    let top = enc.max_vth_rank().max(enc.max_vgs_rank());
    if top > ladder.max_rank {
        return Err(EncoderError::RankOutOfRange {
            rank: top,
            max: ladder.max_rank,
        });
    }
    Ok(DeviceProgramming {
        stored_vth: enc
            .stored
            .iter()
            .map(|r| r.iter().map(|&x| ladder.vth(x)).collect())
            .collect(),
        search_vgs: enc
            .search
            .iter()
            .map(|c| c.vgs.iter().map(|&x| ladder.vgs(x)).collect())
            .collect(),
        search_vds: enc
            .search
            .iter()
            .map(|c| c.vds.iter().map(|&x| ladder.vds(x)).collect())
            .collect(),
        unit_current: ladder.unit_current(),
        resistance: ladder.resistance,
    })
}

/// Zero-padded binary label for symbol `value` given `count` symbols.
pub fn symbol_label(value: usize, count: usize) -> String {
    let width = label_width(count);
    format!("{value:0width$b}")
}

fn label_width(count: usize) -> usize {
    let mut width = 1;
    while (1usize << width) < count {
        width += 1;
    }
    width
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub(crate) struct EncodingFile {
    k: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    bits: Option<usize>,
    stored: BTreeMap<String, Vec<u32>>,
    search: BTreeMap<String, SearchCode>,
}

fn collect_symbols<T: Clone>(
    map: &BTreeMap<String, T>,
    what: &str,
) -> Result<Vec<T>, EncoderError> {
    let count = map.len();
    let width = label_width(count);
    let mut out: Vec<Option<T>> = vec![None; count];
    for (label, value) in map {
        let index = usize::from_str_radix(label, 2)
            .ok()
            .filter(|_| label.len() == width)
            .filter(|&i| i < count)
            .ok_or_else(|| {
                EncoderError::Schema(format!(
                    "{what} symbol {label:?} is not a {width}-bit label below {count}"
                ))
            })?;
        out[index] = Some(value.clone());
    }
    out.into_iter()
        .collect::<Option<Vec<_>>>()
        .ok_or_else(|| EncoderError::Schema(format!("{what} symbols are not contiguous")))
}

impl From<VoltageEncoding> for EncodingFile {
    fn from(enc: VoltageEncoding) -> Self {
        let (stored_count, search_count) = (enc.stored_symbols(), enc.search_symbols());
        EncodingFile {
            k: enc.k,
            bits: Some(label_width(stored_count.max(search_count))),
            stored: enc
                .stored
                .into_iter()
                .enumerate()
                .map(|(t, v)| (symbol_label(t, stored_count), v))
                .collect(),
            search: enc
                .search
                .into_iter()
                .enumerate()
                .map(|(s, c)| (symbol_label(s, search_count), c))
                .collect(),
        }
    }
}

impl TryFrom<EncodingFile> for VoltageEncoding {
    type Error = EncoderError;

    fn try_from(file: EncodingFile) -> Result<Self, Self::Error> {
        let stored = collect_symbols(&file.stored, "stored")?;
        let search = collect_symbols(&file.search, "search")?;
        VoltageEncoding::new(file.k, stored, search)
    }
}

/// Serializes to `{k, stored: {symbol: [vth..]}, search: {symbol: {vgs, vds}}}`
/// with symbols written as zero-padded binary strings.
pub fn export_encoding(enc: &VoltageEncoding) -> String {
    serde_json::to_string_pretty(enc).expect("encoding serializes")
}

pub fn import_encoding(json: &str) -> Result<VoltageEncoding, EncoderError> {
    let file: EncodingFile =
        serde_json::from_str(json).map_err(|e| EncoderError::Json(e.to_string()))?;
    VoltageEncoding::try_from(file)
}

/// Renders the encoding in the familiar table layout: one line per symbol
/// with `Vt<rank>`, `Vs<rank>` and `<multiple>V` cells. Stored and search
/// sections share a line when the symbol exists on both sides.
pub fn render_table_csv(enc: &VoltageEncoding) -> String {
    let k = enc.k;
    let mut out = String::from("symbol");
    for prefix in ["vth", "vg", "vds"] {
        for i in 1..=k {
            let _ = write!(out, ",{prefix}_fet{i}");
        }
    }
    out.push('\n');
    let rows = enc.stored_symbols().max(enc.search_symbols());
    for sym in 0..rows {
        out.push_str(&symbol_label(sym, rows));
        for i in 0..k {
            match enc.stored.get(sym) {
                Some(v) => {
                    let _ = write!(out, ",Vt{}", v[i]);
                }
                None => out.push(','),
            }
        }
        for i in 0..k {
            match enc.search.get(sym) {
                Some(c) => {
                    let _ = write!(out, ",Vs{}", c.vgs[i]);
                }
                None => out.push(','),
            }
        }
        for i in 0..k {
            match enc.search.get(sym) {
                Some(c) if c.vds[i] == 1 => out.push_str(",V"),
                Some(c) => {
                    let _ = write!(out, ",{}V", c.vds[i]);
                }
                None => out.push(','),
            }
        }
        out.push('\n');
    }
    out
}
