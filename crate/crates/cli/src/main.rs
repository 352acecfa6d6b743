//! Command-line front end: feature extraction, harmonization, ranking, the
//! manifest-driven experiment grid, ANOVA and report emission.
//!
//! Exit codes: 0 success, 1 validation or runtime error, 2 partial grid
//! failure (some cells failed, completed cells preserved).

use std::fs;
use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};

use neuromark_core::anova::{
    bonferroni_pairwise, format_p, nway_anova, tukey_hsd, LongTable,
};
use neuromark_core::data::{load_dataset, Modality};
use neuromark_core::dsp::{band_relative_power, default_bands, load_epochs, DEFAULT_ANALYSIS_RANGE, NOTCH_EXCLUSION};
use neuromark_core::experiment::{
    emit_report, parse_manifest, run_experiment_grid, write_synth_dataset, GridOptions,
    ReportFormat, SynthSpec,
};
use neuromark_core::harmonize::{
    apply_harmonization, apply_plain_zscore, fit_harmonization, fit_plain_zscore,
    HarmonizationConfig, HarmonizationKind,
};
use neuromark_core::relieff::{relieff_rank, select_positive, ReliefFConfig};

/// Environment variable naming the default output directory.
const OUT_ENV: &str = "NEUROMARK_OUT";

#[derive(Parser)]
#[command(name = "neuromark", version, about = "Band-power biomarker classification pipeline")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Convert epoch files into a relative band-power feature table.
    Extract(ExtractArgs),
    /// Fit and apply covariate harmonization (or a plain z-score) to a dataset.
    Harmonize(HarmonizeArgs),
    /// Rank features (ReliefF) and write scores sorted descending.
    Rank(RankArgs),
    /// Run the full experiment grid described by a manifest.
    Run(RunArgs),
    /// N-way ANOVA over a long-format results table.
    Anova(AnovaArgs),
    /// Emit summary tables and bar-chart SVGs from a results table.
    Report(ReportArgs),
    /// Generate a synthetic two-site dataset with ground truth.
    Synth(SynthArgs),
}

#[derive(Args)]
struct ExtractArgs {
    /// Epoch binaries (each with a JSON sidecar); one participant per file,
    /// id taken from the file stem.
    #[arg(long, required = true, num_args = 1..)]
    epochs: Vec<PathBuf>,
    /// Output feature CSV (sidecar written next to it).
    #[arg(long)]
    out: PathBuf,
    /// Modality tag stamped on every column.
    #[arg(long, default_value = "OTHER")]
    modality: String,
    /// Analysis range low edge (Hz).
    #[arg(long, default_value_t = DEFAULT_ANALYSIS_RANGE.0)]
    range_lo: f64,
    /// Analysis range high edge (Hz).
    #[arg(long, default_value_t = DEFAULT_ANALYSIS_RANGE.1)]
    range_hi: f64,
    /// Keep the 49-51 Hz notch band in the relative-power denominator.
    #[arg(long)]
    no_notch_exclusion: bool,
}

#[derive(Args)]
struct HarmonizeArgs {
    #[arg(long)]
    features: PathBuf,
    #[arg(long)]
    covariates: PathBuf,
    #[arg(long)]
    labels: PathBuf,
    /// Correction type.
    #[arg(long = "type", value_enum)]
    kind: CorrectionArg,
    /// Covariates to regress out (repeatable), e.g. --covariate age.
    #[arg(long = "covariate")]
    covariate_names: Vec<String>,
    /// Polynomial degree for continuous covariates.
    #[arg(long, default_value_t = 2)]
    degree: usize,
    /// Include categorical x continuous interaction terms.
    #[arg(long)]
    interactions: bool,
    /// Corrected feature CSV.
    #[arg(long)]
    out_features: PathBuf,
    /// Fitted model JSON (audit trail).
    #[arg(long)]
    out_model: Option<PathBuf>,
}

#[derive(Clone, Copy, ValueEnum)]
enum CorrectionArg {
    None,
    Residuals,
    Zscore,
}

#[derive(Args)]
struct RankArgs {
    /// Use ReliefF ranking (the only implemented criterion).
    #[arg(long)]
    relieff: bool,
    #[arg(long)]
    features: PathBuf,
    #[arg(long)]
    covariates: PathBuf,
    #[arg(long)]
    labels: PathBuf,
    /// Output CSV: feature,score sorted descending.
    #[arg(long)]
    out: PathBuf,
    /// Neighbor count J.
    #[arg(long = "relieff-j", default_value_t = 10)]
    neighbors: usize,
    /// Sampled instance count L (default exhaustive).
    #[arg(long = "relieff-l")]
    sample_count: Option<usize>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Also write the strictly-positive selection to this file.
    #[arg(long)]
    out_selected: Option<PathBuf>,
}

#[derive(Args)]
struct RunArgs {
    #[arg(long)]
    manifest: PathBuf,
    /// Output directory (falls back to the manifest, then $NEUROMARK_OUT).
    #[arg(long)]
    out: Option<PathBuf>,
    /// Override the manifest seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Worker threads (0 = rayon default).
    #[arg(long, default_value_t = 0)]
    jobs: usize,
    /// Run only the first N cells (for staged/partial runs).
    #[arg(long)]
    max_cells: Option<usize>,
}

#[derive(Args)]
struct AnovaArgs {
    /// Long-format results CSV produced by `run`.
    #[arg(long)]
    results: PathBuf,
    /// Response column.
    #[arg(long, default_value = "acc")]
    response: String,
    /// Factors (default: every factor with at least two levels).
    #[arg(long = "factor")]
    factors: Vec<String>,
    /// Interaction pairs as "a:b" (repeatable).
    #[arg(long = "interaction")]
    interactions: Vec<String>,
    /// Which split to analyze.
    #[arg(long, default_value = "holdout")]
    split: String,
    /// Include pairwise Bonferroni and Tukey-HSD contrasts.
    #[arg(long)]
    contrasts: bool,
    /// Output CSV (stdout when omitted).
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct ReportArgs {
    #[arg(long)]
    results: PathBuf,
    #[arg(long)]
    out_dir: Option<PathBuf>,
    #[arg(long, value_enum, num_args = 1.., default_values_t = vec![FormatArg::Csv, FormatArg::Json, FormatArg::SvgBars])]
    format: Vec<FormatArg>,
    #[arg(long, default_value = "holdout")]
    split: String,
}

#[derive(Clone, Copy, PartialEq, ValueEnum)]
enum FormatArg {
    Csv,
    Json,
    SvgBars,
}

#[derive(Args)]
struct SynthArgs {
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    seed: u64,
    #[arg(long, default_value_t = 166)]
    class0: usize,
    #[arg(long, default_value_t = 158)]
    class1: usize,
    #[arg(long, default_value_t = 5)]
    informative: usize,
    #[arg(long, default_value_t = 1.0)]
    effect_size: f64,
    #[arg(long, default_value_t = 20)]
    noise: usize,
    #[arg(long, default_value_t = 0)]
    site_shifted: usize,
    #[arg(long, default_value_t = 0.0)]
    site_shift: f64,
    #[arg(long, default_value_t = 0)]
    age_affected: usize,
    #[arg(long, default_value_t = 0.0)]
    age_slope: f64,
    #[arg(long, default_value = "OTHER")]
    modality: String,
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    let cli = Cli::parse();
    match dispatch(cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}

fn dispatch(cli: Cli) -> Result<ExitCode> {
    match cli.command {
        Command::Extract(args) => extract(args),
        Command::Harmonize(args) => harmonize(args),
        Command::Rank(args) => rank(args),
        Command::Run(args) => run(args),
        Command::Anova(args) => anova(args),
        Command::Report(args) => report(args),
        Command::Synth(args) => synth(args),
    }
}

fn default_out_dir(explicit: Option<PathBuf>, fallback: Option<PathBuf>) -> Result<PathBuf> {
    if let Some(p) = explicit {
        return Ok(p);
    }
    if let Some(p) = fallback {
        return Ok(p);
    }
    if let Ok(p) = std::env::var(OUT_ENV) {
        return Ok(PathBuf::from(p));
    }
    bail!("no output directory: pass --out, set it in the manifest, or export {OUT_ENV}");
}

fn extract(args: ExtractArgs) -> Result<ExitCode> {
    let modality = Modality::parse(&args.modality)?;
    let bands = default_bands();
    let exclusions: &[(f64, f64)] = if args.no_notch_exclusion {
        &[]
    } else {
        std::slice::from_ref(&NOTCH_EXCLUSION)
    };

    let mut ids = Vec::new();
    let mut rows: Vec<Vec<f64>> = Vec::new();
    let mut channel_names: Option<Vec<String>> = None;
    for path in &args.epochs {
        let epochs = load_epochs(path).with_context(|| format!("loading {}", path.display()))?;
        match &channel_names {
            None => channel_names = Some(epochs.channel_names.clone()),
            Some(names) => {
                if *names != epochs.channel_names {
                    bail!(
                        "{} has different channels than the first epoch file",
                        path.display()
                    );
                }
            }
        }
        let rel = band_relative_power(
            &epochs,
            &bands,
            (args.range_lo, args.range_hi),
            exclusions,
        )?;
        ids.push(
            path.file_stem()
                .map(|s| s.to_string_lossy().to_string())
                .unwrap_or_else(|| path.display().to_string()),
        );
        rows.push(rel.into_iter().flatten().collect());
    }
    let channel_names = channel_names.context("no epoch files")?;

    let mut columns = Vec::new();
    for channel in &channel_names {
        for band in &bands {
            let mut col =
                neuromark_core::data::FeatureColumn::new(&format!("{channel}_{}", band.name), modality);
            col.band = Some(band.name.clone());
            col.region = Some(channel.clone());
            columns.push(col);
        }
    }
    let values: Vec<f64> = rows.into_iter().flatten().collect();
    let features = neuromark_core::data::FeatureMatrix::new(ids, columns, values)?;
    neuromark_core::data::save_features(&features, &args.out)?;
    println!("wrote {} ({} participants x {} features)", args.out.display(), features.n_rows(), features.n_cols());
    Ok(ExitCode::SUCCESS)
}

fn harmonize(args: HarmonizeArgs) -> Result<ExitCode> {
    let bundle = load_dataset(&args.features, &args.covariates, &args.labels)?;
    let corrected = match args.kind {
        CorrectionArg::None => {
            let params = fit_plain_zscore(&bundle.features)?;
            if let Some(model_path) = &args.out_model {
                fs::write(model_path, serde_json::to_string_pretty(&params)?)?;
            }
            apply_plain_zscore(&bundle.features, &params)?
        }
        kind => {
            let config = HarmonizationConfig {
                kind: match kind {
                    CorrectionArg::Residuals => HarmonizationKind::Residuals,
                    _ => HarmonizationKind::ZScore,
                },
                covariates: args.covariate_names.clone(),
                degree: args.degree,
                include_interactions: args.interactions,
            };
            let model = fit_harmonization(&bundle, &config)?;
            if let Some(model_path) = &args.out_model {
                fs::write(model_path, serde_json::to_string_pretty(&model)?)?;
            }
            apply_harmonization(&bundle, &model)?
        }
    };
    neuromark_core::data::save_features(&corrected, &args.out_features)?;
    println!("wrote {}", args.out_features.display());
    Ok(ExitCode::SUCCESS)
}

fn rank(args: RankArgs) -> Result<ExitCode> {
    if !args.relieff {
        bail!("only --relieff ranking is implemented");
    }
    let bundle = load_dataset(&args.features, &args.covariates, &args.labels)?;
    let config = ReliefFConfig {
        neighbors: args.neighbors,
        sample_count: args.sample_count,
        seed: args.seed,
        ..ReliefFConfig::default()
    };
    let ranking = relieff_rank(&bundle.features, &bundle.labels, &config)?;

    let mut order: Vec<usize> = (0..ranking.scores.len()).collect();
    order.sort_by(|&a, &b| {
        ranking.scores[b]
            .partial_cmp(&ranking.scores[a])
            .expect("finite scores")
            .then(a.cmp(&b))
    });
    let mut csv = String::from("feature,score\n");
    for &i in &order {
        csv.push_str(&format!(
            "{},{}\n",
            bundle.features.columns()[i].name,
            ranking.scores[i]
        ));
    }
    fs::write(&args.out, csv)?;

    if let Some(selected_path) = &args.out_selected {
        let selected = select_positive(&ranking);
        let mut out = String::from("feature\n");
        for i in selected {
            out.push_str(&format!("{}\n", bundle.features.columns()[i].name));
        }
        fs::write(selected_path, out)?;
    }
    println!("wrote {}", args.out.display());
    Ok(ExitCode::SUCCESS)
}

fn run(args: RunArgs) -> Result<ExitCode> {
    let mut manifest = parse_manifest(&args.manifest)?;
    if let Some(seed) = args.seed {
        manifest = manifest.with_seed(seed);
    }
    let out_dir = default_out_dir(args.out, manifest.output_dir.clone())?;
    let options = GridOptions {
        jobs: args.jobs,
        cell_limit: args.max_cells,
    };
    let report = run_experiment_grid(&manifest, &out_dir, &options)?;
    let resumed = report.completed.iter().filter(|c| c.resumed).count();
    println!(
        "{} cells complete ({} resumed), {} failed; outputs in {}",
        report.completed.len(),
        resumed,
        report.failures.len(),
        report.output_dir.display()
    );
    for (cell, message) in &report.failures {
        eprintln!("cell {cell} failed: {message}");
    }
    if report.failures.is_empty() {
        Ok(ExitCode::SUCCESS)
    } else {
        Ok(ExitCode::from(2))
    }
}

fn anova(args: AnovaArgs) -> Result<ExitCode> {
    let table = LongTable::from_results_csv(&args.results, &args.split)?;
    let factors: Vec<String> = if args.factors.is_empty() {
        table
            .factor_names
            .iter()
            .filter(|f| {
                let fi = table.factor_index(f).expect("own factor");
                table.factor_levels(fi).len() >= 2
            })
            .cloned()
            .collect()
    } else {
        args.factors.clone()
    };
    if factors.is_empty() {
        bail!("no factor has two or more levels in {}", args.results.display());
    }
    let factor_refs: Vec<&str> = factors.iter().map(|s| s.as_str()).collect();
    let interactions: Vec<(String, String)> = args
        .interactions
        .iter()
        .map(|pair| {
            pair.split_once(':')
                .map(|(a, b)| (a.to_string(), b.to_string()))
                .with_context(|| format!("interaction {pair:?} is not of the form a:b"))
        })
        .collect::<Result<_>>()?;
    let interaction_refs: Vec<(&str, &str)> = interactions
        .iter()
        .map(|(a, b)| (a.as_str(), b.as_str()))
        .collect();

    let anova = nway_anova(&table, &args.response, &factor_refs, &interaction_refs)?;
    let mut out = String::from("effect,df,sum_sq,f,p_value\n");
    for e in &anova.effects {
        out.push_str(&format!(
            "{},{},{},{},{}\n",
            e.name,
            e.df,
            e.sum_sq,
            e.f_stat,
            format_p(e.p_value)
        ));
    }
    out.push_str(&format!("residual,{},{},,\n", anova.residual_df, anova.residual_ss));
    if !anova.balanced {
        out.push_str("# note: unbalanced design, marginal sums of squares\n");
    }
    if args.contrasts {
        out.push_str("\nfactor,method,contrast,mean_diff,p_value,ci_low,ci_high\n");
        for factor in &factor_refs {
            let mut contrasts = bonferroni_pairwise(&table, &args.response, factor, 0.05)?;
            contrasts.extend(tukey_hsd(&table, &args.response, factor, 0.05)?);
            for c in contrasts {
                out.push_str(&format!(
                    "{factor},{},{} vs {},{},{},{},{}\n",
                    c.method.as_str(),
                    c.level_a,
                    c.level_b,
                    c.mean_diff,
                    format_p(c.p_adjusted),
                    c.ci_low,
                    c.ci_high
                ));
            }
        }
    }
    match &args.out {
        Some(path) => {
            fs::write(path, out)?;
            println!("wrote {}", path.display());
        }
        None => print!("{out}"),
    }
    Ok(ExitCode::SUCCESS)
}

fn report(args: ReportArgs) -> Result<ExitCode> {
    let table = LongTable::from_results_csv(&args.results, &args.split)?;
    let out_dir = default_out_dir(args.out_dir, None)?;
    let formats: Vec<ReportFormat> = args
        .format
        .iter()
        .map(|f| match f {
            FormatArg::Csv => ReportFormat::Csv,
            FormatArg::Json => ReportFormat::Json,
            FormatArg::SvgBars => ReportFormat::SvgBars,
        })
        .collect();
    let files = emit_report(&table, &out_dir, &formats)?;
    for f in files {
        println!("wrote {}", f.display());
    }
    Ok(ExitCode::SUCCESS)
}

fn synth(args: SynthArgs) -> Result<ExitCode> {
    let out = default_out_dir(args.out, None)?;
    let spec = SynthSpec {
        n_class0: args.class0,
        n_class1: args.class1,
        n_informative: args.informative,
        effect_size: args.effect_size,
        n_noise: args.noise,
        n_site_shifted: args.site_shifted,
        site_shift: args.site_shift,
        n_age_affected: args.age_affected,
        age_slope: args.age_slope,
        age_range: (55.0, 85.0),
        modality: Modality::parse(&args.modality)?,
    };
    let truth = write_synth_dataset(&spec, args.seed, &out)?;
    println!(
        "wrote dataset to {} ({} informative, {} site-shifted, {} age-affected columns)",
        out.display(),
        truth.informative.len(),
        truth.site_shifted.len(),
        truth.age_affected.len()
    );
    Ok(ExitCode::SUCCESS)
}
