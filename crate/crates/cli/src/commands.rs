use std::fmt::Write as _;
use std::path::Path;
use std::time::Instant;

use fefet_am::apps::{
    compile_metric, load_mnist, Dataset, HdcConfig, HdcEvaluation, HdcModel, KnnEvaluation,
};
use fefet_am::array::{hamming_margin_instance, monte_carlo, Crossbar};
use fefet_am::device::VariationParams;
use fefet_am::encoder::{
    derive_encoding, export_encoding, import_encoding, verify_encoding, VoltageEncoding,
};
use fefet_am::metric::{build_dm, load_custom_dm, DistanceMatrix, DistanceSpec, MetricKind};
use fefet_am::solver::{
    brute_force_feasible, find_min_k, solve_at_k, CurrentRange, KReport, SolveOptions,
    DEFAULT_ASSIGNMENT_BUDGET, DEFAULT_ORACLE_BUDGET,
};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use serde_json::json;

use crate::config::{read_text, Pipeline, RunConfig};
use crate::error::{exit, CliError};

const DEFAULT_BITS: u32 = 2;
const DEFAULT_K_MAX: usize = 6;

fn write_output(path: Option<&Path>, text: &str) -> Result<(), CliError> {
    match path {
        Some(p) => std::fs::write(p, text).map_err(|source| CliError::Output {
            path: p.to_path_buf(),
            source,
        }),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn to_json<T: Serialize>(value: &T) -> String {
    let mut s = serde_json::to_string_pretty(value).expect("report serializes");
    s.push('\n');
    s
}

/// Writes `report` to `--report`, or a one-line summary to stderr.
fn emit_report<T: Serialize>(cfg: &RunConfig, report: &T, summary: &str) -> Result<(), CliError> {
    match &cfg.report {
        Some(p) => write_output(Some(p), &to_json(report)),
        None => {
            eprintln!("{summary}");
            Ok(())
        }
    }
}

fn config_comment(cfg: &RunConfig) -> String {
    format!(
        "# config {}\n",
        serde_json::to_string(cfg).expect("config serializes")
    )
}

fn distance_matrix(cfg: &RunConfig) -> Result<DistanceMatrix, CliError> {
    match (&cfg.custom, cfg.metric) {
        (Some(_), Some(kind)) if kind != MetricKind::Custom => Err(CliError::Usage(
            "--custom and a built-in --metric are exclusive".into(),
        )),
        (Some(path), _) => Ok(load_custom_dm(path)?),
        (None, Some(MetricKind::Custom)) => Err(CliError::Usage(
            "--metric custom needs --custom <csv>".into(),
        )),
        (None, Some(kind)) => Ok(build_dm(&DistanceSpec::built_in(
            kind,
            cfg.bits.unwrap_or(DEFAULT_BITS),
        ))?),
        (None, None) => Err(CliError::Usage("give --metric or --custom".into())),
    }
}

fn load_encoding(cfg: &RunConfig) -> Result<VoltageEncoding, CliError> {
    let path = RunConfig::require(&cfg.encoding, "encoding")?;
    Ok(import_encoding(&read_text(&path)?)?)
}

/// The encoding from `--encoding`, or one compiled for `--metric`.
fn encoding_or_compiled(cfg: &RunConfig) -> Result<VoltageEncoding, CliError> {
    if cfg.encoding.is_some() {
        return load_encoding(cfg);
    }
    let kind = cfg.metric.unwrap_or(MetricKind::Hamming);
    Ok(compile_metric(
        kind,
        cfg.bits.unwrap_or(DEFAULT_BITS) as usize,
        cfg.k_max.unwrap_or(DEFAULT_K_MAX),
    )?)
}

/// Integer vectors, one per line; blank and `#` lines are skipped.
fn load_vectors(path: &Path) -> Result<Vec<Vec<u32>>, CliError> {
    let text = read_text(path)?;
    let mut out = Vec::new();
    for (n, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let row = line
            .split(',')
            .map(|t| t.trim().parse::<u32>())
            .collect::<Result<Vec<_>, _>>()
            .map_err(|_| {
                CliError::Failed(format!(
                    "{}:{}: expected integer symbols",
                    path.display(),
                    n + 1
                ))
            })?;
        out.push(row);
    }
    Ok(out)
}

pub fn dm(cfg: &RunConfig) -> Result<i32, CliError> {
    let dm = distance_matrix(cfg)?;
    write_output(cfg.output.as_deref(), &dm.to_csv())?;
    Ok(exit::OK)
}

#[derive(Serialize)]
struct KSummary {
    k: usize,
    feasible: bool,
    ac3_feasible: bool,
    ac3_revisions: usize,
    row_domain_sizes: Vec<usize>,
    pruned_domain_sizes: Vec<usize>,
}

impl From<&KReport> for KSummary {
    fn from(r: &KReport) -> Self {
        KSummary {
            k: r.k,
            feasible: r.feasible(),
            ac3_feasible: r.ac3_feasible,
            ac3_revisions: r.ac3_revisions,
            row_domain_sizes: r.row_domain_sizes.clone(),
            pruned_domain_sizes: r.pruned_domain_sizes.clone(),
        }
    }
}

pub fn compile(cfg: &RunConfig) -> Result<i32, CliError> {
    let dm = distance_matrix(cfg)?;
    let cr = cfg.cr.clone().unwrap_or_default();
    let options = SolveOptions {
        assignment_budget: cfg.budget.unwrap_or(DEFAULT_ASSIGNMENT_BUDGET),
        ..SolveOptions::default()
    };
    let start = Instant::now();
    let reports = match cfg.k {
        Some(k) => vec![solve_at_k(&dm, k, &cr, &options)?],
        None => find_min_k(&dm, &cr, cfg.k_max.unwrap_or(DEFAULT_K_MAX), &options)?.reports,
    };
    let seconds = start.elapsed().as_secs_f64();
    let solution = reports.last().and_then(|r| r.solution.as_ref());
    let encoding = solution.map(derive_encoding).transpose()?;
    let verify = encoding
        .as_ref()
        .map(|e| verify_encoding(e, &dm))
        .transpose()?;
    let report = json!({
        "config": cfg.resolved("compile"),
        "current_range": cr,
        "verdict": if encoding.is_some() { "feasible" } else { "infeasible" },
        "k": encoding.as_ref().map(VoltageEncoding::k),
        "per_k": reports.iter().map(KSummary::from).collect::<Vec<_>>(),
        "verify": verify,
        "solve_seconds": seconds,
    });
    let summary = match &encoding {
        Some(e) => format!("feasible: k = {} ({seconds:.3} s)", e.k()),
        None => format!("infeasible up to k = {}", reports.last().map_or(0, |r| r.k)),
    };
    emit_report(cfg, &report, &summary)?;
    match encoding {
        Some(e) => {
            write_output(cfg.output.as_deref(), &(export_encoding(&e) + "\n"))?;
            Ok(exit::OK)
        }
        None => Ok(exit::INFEASIBLE),
    }
}

pub fn verify(cfg: &RunConfig) -> Result<i32, CliError> {
    let encoding = load_encoding(cfg)?;
    let dm = distance_matrix(cfg)?;
    let result = verify_encoding(&encoding, &dm)?;
    let report = json!({
        "config": cfg.resolved("verify"),
        "pass": result.pass,
        "checked": result.checked,
        "matched": result.matched,
        "mismatches": result.mismatches,
    });
    write_output(cfg.output.as_deref(), &to_json(&report))?;
    Ok(if result.pass {
        exit::OK
    } else {
        exit::VERIFY_FAILED
    })
}

pub fn simulate(cfg: &RunConfig) -> Result<i32, CliError> {
    let encoding = load_encoding(cfg)?;
    let stored = load_vectors(&RunConfig::require(&cfg.stored, "stored")?)?;
    let queries = load_vectors(&RunConfig::require(&cfg.queries, "queries")?)?;
    let array = Crossbar::new(encoding, cfg.ladder()?, &stored, cfg.variation()?)?;
    let sense = cfg.sense_sigma.unwrap_or(0.0);
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed());
    rng.set_stream(u64::MAX);
    let mut out = config_comment(&cfg.resolved("simulate"));
    out.push_str("query,row,current_a,current_units,winner\n");
    for (q, query) in queries.iter().enumerate() {
        let result = if sense > 0.0 {
            array.search_noisy(query, sense, &mut rng)?
        } else {
            array.search(query)?
        };
        for (row, current) in result.row_currents.iter().enumerate() {
            let units = current / result.unit_current;
            let winner = (row == result.winner) as u8;
            writeln!(out, "{q},{row},{current:e},{units},{winner}").unwrap();
        }
    }
    write_output(cfg.output.as_deref(), &out)?;
    Ok(exit::OK)
}

pub fn mc(cfg: &RunConfig) -> Result<i32, CliError> {
    let encoding = encoding_or_compiled(cfg)?;
    let ladder = cfg.ladder()?;
    let (stored, queries, expected) = match (&cfg.stored, &cfg.queries) {
        (Some(s), Some(q)) => {
            let stored = load_vectors(s)?;
            let queries = load_vectors(q)?;
            let ideal = Crossbar::new(encoding.clone(), ladder, &stored, None)?;
            let expected = queries
                .iter()
                .map(|q| Ok(ideal.search(q)?.winner))
                .collect::<Result<Vec<_>, CliError>>()?;
            (stored, queries, expected)
        }
        (None, None) => {
            let inst = hamming_margin_instance(
                cfg.dims.unwrap_or(16),
                cfg.rows.unwrap_or(8),
                cfg.near.unwrap_or(5),
                cfg.far.unwrap_or(6),
                cfg.seed(),
            );
            (inst.stored, vec![inst.query], vec![inst.winner])
        }
        _ => return Err(CliError::Usage("--stored and --queries go together".into())),
    };
    let params = cfg
        .variation()?
        .unwrap_or_else(|| VariationParams::none(cfg.seed()));
    let runs = cfg.runs.unwrap_or(100);
    if runs == 0 {
        return Err(CliError::Usage("--runs must be at least 1".into()));
    }
    let result = monte_carlo(
        &encoding, &ladder, &stored, &queries, &expected, &params, runs,
    )?;
    let resolved = cfg.resolved("mc");
    let mut csv = config_comment(&resolved);
    csv.push_str(&result.to_csv());
    write_output(cfg.output.as_deref(), &csv)?;
    let report = json!({
        "config": resolved,
        "runs": result.runs,
        "correct": result.correct,
        "total": result.total,
        "accuracy": result.accuracy,
        "variation": result.variation,
    });
    let summary = format!(
        "accuracy {:.4} ({}/{})",
        result.accuracy, result.correct, result.total
    );
    emit_report(cfg, &report, &summary)?;
    Ok(exit::OK)
}

fn load_dataset(cfg: &RunConfig) -> Result<Dataset, CliError> {
    let data = match (&cfg.dataset, &cfg.train_csv, &cfg.test_csv) {
        (Some(dir), None, None) => load_mnist(dir)?,
        (None, Some(train), Some(test)) => Dataset::from_csv("csv", train, test)?,
        _ => {
            return Err(CliError::Usage(
                "give --dataset <mnist dir> or both --train-csv and --test-csv".into(),
            ))
        }
    };
    Ok(data.subset(cfg.train.unwrap_or(1000), cfg.test.unwrap_or(200)))
}

pub fn bench(cfg: &RunConfig) -> Result<i32, CliError> {
    let data = load_dataset(cfg)?;
    let ladder = cfg.ladder()?;
    let variation = cfg.variation()?;
    let bits = cfg.bits.unwrap_or(DEFAULT_BITS) as usize;
    let metrics: Vec<MetricKind> = match cfg.metric {
        Some(MetricKind::Custom) => {
            return Err(CliError::Usage(
                "bench supports built-in metrics only".into(),
            ))
        }
        Some(kind) => vec![kind],
        None => MetricKind::BUILT_IN.to_vec(),
    };
    let pipeline = cfg.pipeline.unwrap_or(Pipeline::Knn);
    let results = match pipeline {
        Pipeline::Knn => metrics
            .iter()
            .map(|&kind| {
                let eval = KnnEvaluation::run(
                    &data,
                    kind,
                    bits,
                    cfg.kq.unwrap_or(1),
                    &ladder,
                    variation,
                    cfg.tile_rows,
                )?;
                Ok(serde_json::to_value(eval).expect("serializes"))
            })
            .collect::<Result<Vec<_>, CliError>>()?,
        Pipeline::Hdc => {
            let hdc = HdcConfig {
                dimension: cfg.dimension.unwrap_or(HdcConfig::default().dimension),
                bits,
                epochs: cfg.epochs.unwrap_or(HdcConfig::default().epochs),
                seed: cfg.seed(),
            };
            let model = HdcModel::train(&data, hdc)?;
            metrics
                .iter()
                .map(|&kind| {
                    let eval = HdcEvaluation::run(&model, &data, kind, &ladder, variation)?;
                    Ok(serde_json::to_value(eval).expect("serializes"))
                })
                .collect::<Result<Vec<_>, CliError>>()?
        }
    };
    let summary = json!({
        "config": cfg.resolved("bench"),
        "dataset": data.name,
        "train": data.train.len(),
        "test": data.test.len(),
        "results": results,
    });
    write_output(cfg.output.as_deref(), &to_json(&summary))?;
    Ok(exit::OK)
}

pub fn oracle(cfg: &RunConfig) -> Result<i32, CliError> {
    let dm = distance_matrix(cfg)?;
    let k = RunConfig::require(&cfg.k, "k")?;
    let cr: CurrentRange = cfg.cr.clone().unwrap_or_default();
    let outcome = brute_force_feasible(
        &dm,
        k,
        &cr,
        cfg.oracle_budget.unwrap_or(DEFAULT_ORACLE_BUDGET),
    )?;
    let report = json!({
        "config": cfg.resolved("oracle"),
        "current_range": cr,
        "k": k,
        "feasible": outcome.feasible,
        "contributions": outcome.contributions,
    });
    write_output(cfg.output.as_deref(), &to_json(&report))?;
    if let Some(path) = &cfg.dump {
        write_output(Some(path), &to_json(&outcome.witness))?;
    }
    Ok(if outcome.feasible {
        exit::OK
    } else {
        exit::INFEASIBLE
    })
}
