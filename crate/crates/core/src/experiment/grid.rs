//! Grid execution with resumable, digest-checked cells and atomic writes.

use std::fs;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::anova::{bonferroni_pairwise, format_p, nway_anova, tukey_hsd, LongTable};
use crate::classifier::ClassifierKind;
use crate::cv::{long_csv_rows, monte_carlo_run, LONG_CSV_HEADER};
use crate::data::{combine_features, load_dataset, sidecar_path, DatasetBundle};
use crate::error::{Error, Result};

use super::coeffs::aggregate_coefficients;
use super::manifest::{CellPlan, ExperimentManifest};
use super::report::{emit_report, ReportFormat};

#[derive(Debug, Clone, Copy, Default)]
pub struct GridOptions {
    /// Worker threads for cell execution; 0 uses the rayon default.
    pub jobs: usize,
    /// Run only the first `n` cells (used to exercise interrupt/resume).
    pub cell_limit: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CellOutcome {
    pub config_id: String,
    /// True when the cell's digest matched and it was not recomputed.
    pub resumed: bool,
}

#[derive(Debug)]
pub struct GridReport {
    pub completed: Vec<CellOutcome>,
    /// (config id, error message) for cells that failed.
    pub failures: Vec<(String, String)>,
    pub output_dir: PathBuf,
    /// True when aggregate outputs (results.csv, ANOVA, reports) were
    /// written, which requires every planned cell to be complete.
    pub aggregates_written: bool,
}

#[derive(Debug, Serialize, Deserialize)]
struct DoneStamp {
    config_digest: String,
    csv_sha256: String,
}

fn io_err(path: &Path, source: std::io::Error) -> Error {
    Error::Io {
        path: path.display().to_string(),
        source,
    }
}

/// Write-temp-then-rename so readers never observe a partial file.
fn write_atomic(path: &Path, contents: &[u8]) -> Result<()> {
    let tmp = path.with_extension("tmp");
    fs::write(&tmp, contents).map_err(|e| io_err(&tmp, e))?;
    fs::rename(&tmp, path).map_err(|e| io_err(path, e))
}

fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

fn file_sha256(path: &Path) -> Result<String> {
    Ok(sha256_hex(&fs::read(path).map_err(|e| io_err(path, e))?))
}

/// Content digest of one cell: its configuration plus the bytes of every
/// input file it reads. Any change invalidates the cached result.
fn cell_digest(manifest: &ExperimentManifest, cell: &CellPlan) -> Result<String> {
    let mut hasher = Sha256::new();
    let config_json =
        serde_json::to_string(&cell.config).map_err(|e| Error::Manifest(e.to_string()))?;
    hasher.update(config_json.as_bytes());
    for &di in &cell.dataset_indices {
        let d = &manifest.datasets[di];
        for path in [&d.features, &d.covariates, &d.labels] {
            hasher.update(fs::read(path).map_err(|e| io_err(path, e))?);
        }
        let sidecar = sidecar_path(&d.features);
        if sidecar.exists() {
            hasher.update(fs::read(&sidecar).map_err(|e| io_err(&sidecar, e))?);
        }
    }
    Ok(hex::encode(hasher.finalize()))
}

struct CellPaths {
    csv: PathBuf,
    done: PathBuf,
    coeffs: PathBuf,
}

fn cell_paths(out_dir: &Path, config_id: &str) -> CellPaths {
    CellPaths {
        csv: out_dir.join("cells").join(format!("{config_id}.csv")),
        done: out_dir.join("cells").join(format!("{config_id}.done.json")),
        coeffs: out_dir.join("coeffs").join(format!("{config_id}.csv")),
    }
}

fn is_cell_done(paths: &CellPaths, digest: &str) -> bool {
    let Ok(stamp_text) = fs::read_to_string(&paths.done) else {
        return false;
    };
    let Ok(stamp) = serde_json::from_str::<DoneStamp>(&stamp_text) else {
        return false;
    };
    if stamp.config_digest != digest {
        return false;
    }
    match file_sha256(&paths.csv) {
        Ok(sha) => sha == stamp.csv_sha256,
        Err(_) => false,
    }
}

fn run_cell(
    manifest: &ExperimentManifest,
    cell: &CellPlan,
    bundles: &[DatasetBundle],
    out_dir: &Path,
) -> Result<CellOutcome> {
    let config_id = cell.config.config_id();
    let digest = cell_digest(manifest, cell)?;
    let paths = cell_paths(out_dir, &config_id);
    if is_cell_done(&paths, &digest) {
        return Ok(CellOutcome {
            config_id,
            resumed: true,
        });
    }

    let selected: Vec<DatasetBundle> = cell
        .dataset_indices
        .iter()
        .map(|&i| bundles[i].clone())
        .collect();
    let data = combine_features(&selected, cell.config.combination)?;
    let results = monte_carlo_run(&cell.config, &data)?;

    let mut csv = String::from(LONG_CSV_HEADER);
    csv.push('\n');
    for row in long_csv_rows(&cell.config, &results) {
        csv.push_str(&row);
        csv.push('\n');
    }
    write_atomic(&paths.csv, csv.as_bytes())?;

    if cell.config.classifier.kind == ClassifierKind::Glmnet && results.replicas.len() >= 2 {
        let traces = results
            .coefficient_traces()
            .ok_or_else(|| Error::Report("GLMNET cell produced no coefficient traces".into()))?;
        let names: Vec<String> = data.features.columns().iter().map(|c| c.name.clone()).collect();
        let summary = aggregate_coefficients(&names, &traces)?;
        let mut out = String::from("feature,band,region,mean,sd,z,selection_frequency,degenerate_sd\n");
        for &j in &summary.rank_by_abs_z() {
            let col = &data.features.columns()[j];
            out.push_str(&format!(
                "{},{},{},{},{},{},{},{}\n",
                col.name,
                col.band.clone().unwrap_or_default(),
                col.region.clone().unwrap_or_default(),
                summary.mean[j],
                summary.sd[j],
                summary.z[j],
                summary.selection_frequency[j],
                summary.degenerate_sd[j]
            ));
        }
        write_atomic(&paths.coeffs, out.as_bytes())?;
    }

    let stamp = DoneStamp {
        config_digest: digest,
        csv_sha256: file_sha256(&paths.csv)?,
    };
    write_atomic(
        &paths.done,
        serde_json::to_string_pretty(&stamp)
            .expect("stamp serialization")
            .as_bytes(),
    )?;
    Ok(CellOutcome {
        config_id,
        resumed: false,
    })
}

/// Executes the manifest's grid. Completed cells (matching digests) are
/// skipped; per-cell failures are collected rather than aborting the grid;
/// aggregate outputs are only produced once every planned cell is complete.
pub fn run_experiment_grid(
    manifest: &ExperimentManifest,
    out_dir: &Path,
    options: &GridOptions,
) -> Result<GridReport> {
    fs::create_dir_all(out_dir.join("cells")).map_err(|e| io_err(out_dir, e))?;
    fs::create_dir_all(out_dir.join("coeffs")).map_err(|e| io_err(out_dir, e))?;
    fs::create_dir_all(out_dir.join("reports")).map_err(|e| io_err(out_dir, e))?;

    // Load every dataset once, up front.
    let bundles: Vec<DatasetBundle> = manifest
        .datasets
        .iter()
        .map(|d| load_dataset(&d.features, &d.covariates, &d.labels))
        .collect::<Result<_>>()?;

    let cells: Vec<&CellPlan> = match options.cell_limit {
        Some(limit) => manifest.cells.iter().take(limit).collect(),
        None => manifest.cells.iter().collect(),
    };

    let run_all = || -> Vec<(String, std::result::Result<CellOutcome, String>)> {
        cells
            .par_iter()
            .map(|cell| {
                let id = cell.config.config_id();
                let outcome =
                    run_cell(manifest, cell, &bundles, out_dir).map_err(|e| e.to_string());
                (id, outcome)
            })
            .collect()
    };
    let outcomes = if options.jobs > 0 {
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(options.jobs)
            .build()
            .map_err(|e| Error::Manifest(format!("thread pool: {e}")))?;
        pool.install(run_all)
    } else {
        run_all()
    };

    let mut completed = Vec::new();
    let mut failures = Vec::new();
    for (id, outcome) in outcomes {
        match outcome {
            Ok(o) => completed.push(o),
            Err(message) => {
                log::warn!("cell {id} failed: {message}");
                failures.push((id, message));
            }
        }
    }

    // Aggregates need the whole grid: every planned cell (not just the ones
    // attempted this run) must have a valid result on disk.
    let whole_grid_done = failures.is_empty()
        && manifest.cells.iter().all(|cell| {
            let digest = match cell_digest(manifest, cell) {
                Ok(d) => d,
                Err(_) => return false,
            };
            is_cell_done(&cell_paths(out_dir, &cell.config.config_id()), &digest)
        });
    if whole_grid_done {
        write_aggregates(manifest, out_dir)?;
    }

    Ok(GridReport {
        completed,
        failures,
        output_dir: out_dir.to_path_buf(),
        aggregates_written: whole_grid_done,
    })
}

fn write_aggregates(manifest: &ExperimentManifest, out_dir: &Path) -> Result<()> {
    // Concatenate cell CSVs in manifest order so the aggregate is identical
    // no matter which run produced each cell.
    let mut results_csv = String::from(LONG_CSV_HEADER);
    results_csv.push('\n');
    for cell in &manifest.cells {
        let path = cell_paths(out_dir, &cell.config.config_id()).csv;
        let text = fs::read_to_string(&path).map_err(|e| io_err(&path, e))?;
        for line in text.lines().skip(1) {
            results_csv.push_str(line);
            results_csv.push('\n');
        }
    }
    let results_path = out_dir.join("results.csv");
    write_atomic(&results_path, results_csv.as_bytes())?;

    let table = LongTable::from_results_csv(&results_path, "holdout")?;
    let factors: Vec<&str> = ["classifier", "sensor", "correction", "localization"]
        .into_iter()
        .filter(|f| {
            let fi = table.factor_index(f).expect("fixed factor set");
            table.factor_levels(fi).len() >= 2
        })
        .collect();

    if !factors.is_empty() && table.n_rows() >= 3 {
        let mut anova_csv = String::from("response,effect,df,sum_sq,f,p_value\n");
        let mut contrasts_csv =
            String::from("response,factor,method,contrast,mean_diff,p_value,ci_low,ci_high,direction\n");
        for response in ["acc", "sens", "spec", "auc"] {
            let anova = nway_anova(&table, response, &factors, &[])?;
            for effect in &anova.effects {
                anova_csv.push_str(&format!(
                    "{response},{},{},{},{},{}\n",
                    effect.name,
                    effect.df,
                    effect.sum_sq,
                    effect.f_stat,
                    format_p(effect.p_value)
                ));
            }
            anova_csv.push_str(&format!(
                "{response},residual,{},{},,\n",
                anova.residual_df, anova.residual_ss
            ));
            for factor in &factors {
                let fi = table.factor_index(factor)?;
                if table.factor_levels(fi).len() < 2 {
                    continue;
                }
                let mut all = bonferroni_pairwise(&table, response, factor, 0.05)?;
                all.extend(tukey_hsd(&table, response, factor, 0.05)?);
                for c in all {
                    let direction = if c.mean_diff > 0.0 { ">" } else { "<=" };
                    contrasts_csv.push_str(&format!(
                        "{response},{factor},{},{} vs {},{},{},{},{},{}\n",
                        c.method.as_str(),
                        c.level_a,
                        c.level_b,
                        c.mean_diff,
                        format_p(c.p_adjusted),
                        c.ci_low,
                        c.ci_high,
                        direction
                    ));
                }
            }
        }
        write_atomic(&out_dir.join("anova_holdout.csv"), anova_csv.as_bytes())?;
        write_atomic(&out_dir.join("contrasts_holdout.csv"), contrasts_csv.as_bytes())?;
    } else {
        log::info!("grid has a single condition; skipping ANOVA aggregates");
    }

    emit_report(
        &table,
        &out_dir.join("reports"),
        &[ReportFormat::Csv, ReportFormat::Json, ReportFormat::SvgBars],
    )?;

    // Sorted-coefficient bar chart per GLMNET cell, from the per-cell
    // aggregation written during the run.
    for cell in &manifest.cells {
        if cell.config.classifier.kind != ClassifierKind::Glmnet {
            continue;
        }
        let id = cell.config.config_id();
        let coeffs_path = cell_paths(out_dir, &id).coeffs;
        if !coeffs_path.exists() {
            continue;
        }
        let text = fs::read_to_string(&coeffs_path).map_err(|e| io_err(&coeffs_path, e))?;
        let rows: Vec<(String, f64, f64)> = text
            .lines()
            .skip(1)
            .filter_map(|line| {
                let parts: Vec<&str> = line.split(',').collect();
                Some((
                    parts.first()?.to_string(),
                    parts.get(3)?.parse().ok()?,
                    parts.get(4)?.parse().ok()?,
                ))
            })
            .collect();
        let svg = super::report::coefficient_svg(
            &format!("{id}: coefficient mean +/- SD, top by |z|"),
            &rows,
            30,
        );
        write_atomic(
            &out_dir.join("reports").join(format!("coeffs_{id}.svg")),
            svg.as_bytes(),
        )?;
    }
    Ok(())
}
