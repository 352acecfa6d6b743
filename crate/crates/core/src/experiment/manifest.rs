//! Declarative experiment manifest (TOML) and its resolution into the
//! condition grid.

use std::collections::BTreeSet;
use std::fs;
use std::path::{Path, PathBuf};

use serde::Deserialize;

use crate::classifier::{ClassifierKind, ClassifierSpec, GlmnetSettings};
use crate::cv::{Correction, RunConfig, SelectionConfig};
use crate::data::{CombinationMode, Modality};
use crate::error::{Error, Result};
use crate::harmonize::{HarmonizationConfig, HarmonizationKind};

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
struct ManifestFile {
    seed: u64,
    #[serde(default = "default_k")]
    k: usize,
    #[serde(default = "default_replications")]
    replications: usize,
    #[serde(default)]
    output_dir: Option<PathBuf>,
    datasets: Vec<DatasetEntry>,
    grid: GridSection,
    #[serde(default)]
    selection: SelectionSection,
    #[serde(default)]
    harmonization: HarmonizationSection,
    #[serde(default)]
    ksvm: KsvmSection,
    #[serde(default)]
    glmnet: GlmnetSection,
}

fn default_k() -> usize {
    10
}

fn default_replications() -> usize {
    100
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
struct DatasetEntry {
    modality: String,
    #[serde(default)]
    localization: Option<String>,
    features: PathBuf,
    covariates: PathBuf,
    labels: PathBuf,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
struct GridSection {
    classifiers: Vec<String>,
    combinations: Vec<String>,
    corrections: Vec<String>,
    #[serde(default)]
    localizations: Vec<String>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields, default)]
struct SelectionSection {
    relieff: bool,
    neighbors: usize,
    sample_count: Option<usize>,
}

impl Default for SelectionSection {
    fn default() -> Self {
        SelectionSection {
            relieff: false,
            neighbors: 10,
            sample_count: None,
        }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields, default)]
struct HarmonizationSection {
    degree: usize,
    meg_covariates: Vec<String>,
    mri_covariates: Vec<String>,
    interactions: bool,
}

impl Default for HarmonizationSection {
    fn default() -> Self {
        HarmonizationSection {
            degree: 2,
            meg_covariates: vec!["age".into(), "site".into(), "movement".into()],
            mri_covariates: vec!["age".into(), "sex".into(), "tiv".into()],
            interactions: false,
        }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields, default)]
struct KsvmSection {
    gamma_grid: Vec<f64>,
    c_grid: Vec<f64>,
}

impl Default for KsvmSection {
    fn default() -> Self {
        let spec = ClassifierSpec::new(ClassifierKind::Ksvm);
        KsvmSection {
            gamma_grid: spec.ksvm_gamma_grid,
            c_grid: spec.ksvm_c_grid,
        }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields, default)]
struct GlmnetSection {
    alpha: f64,
    lambda_count: usize,
    lambda_min_ratio: f64,
}

impl Default for GlmnetSection {
    fn default() -> Self {
        let s = GlmnetSettings::default();
        GlmnetSection {
            alpha: s.alpha,
            lambda_count: s.lambda_count,
            lambda_min_ratio: s.lambda_min_ratio,
        }
    }
}

/// One dataset as referenced by the grid.
#[derive(Debug, Clone, PartialEq)]
pub struct DatasetRef {
    pub modality: Modality,
    pub localization: String,
    pub features: PathBuf,
    pub covariates: PathBuf,
    pub labels: PathBuf,
}

/// One resolved grid cell: the run configuration plus the indices of the
/// datasets it combines.
#[derive(Debug, Clone, PartialEq)]
pub struct CellPlan {
    pub config: RunConfig,
    pub dataset_indices: Vec<usize>,
}

/// Fully validated manifest.
#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentManifest {
    pub seed: u64,
    pub k: usize,
    pub replications: usize,
    pub output_dir: Option<PathBuf>,
    pub datasets: Vec<DatasetRef>,
    pub cells: Vec<CellPlan>,
}

impl ExperimentManifest {
    /// Replaces the master seed everywhere it was baked into the grid
    /// (the CLI's `--seed` override).
    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        for cell in &mut self.cells {
            cell.config.master_seed = seed;
            cell.config.classifier.seed = seed;
        }
        self
    }
}

/// Parses and validates a manifest. Unknown keys are rejected, every grid
/// cell must resolve to datasets that are actually declared, and config ids
/// must be unique.
pub fn parse_manifest(path: &Path) -> Result<ExperimentManifest> {
    let text = fs::read_to_string(path).map_err(|e| Error::Io {
        path: path.display().to_string(),
        source: e,
    })?;
    let file: ManifestFile =
        toml::from_str(&text).map_err(|e| Error::Manifest(format!("{}: {e}", path.display())))?;
    let base = path.parent().unwrap_or_else(|| Path::new("."));
    resolve(file, base)
}

fn resolve(file: ManifestFile, base: &Path) -> Result<ExperimentManifest> {
    if file.datasets.is_empty() {
        return Err(Error::Manifest("no datasets declared".into()));
    }
    let rebase = |p: &PathBuf| -> PathBuf {
        if p.is_absolute() {
            p.clone()
        } else {
            base.join(p)
        }
    };
    let datasets: Vec<DatasetRef> = file
        .datasets
        .iter()
        .map(|d| {
            Ok(DatasetRef {
                modality: Modality::parse(&d.modality)?,
                localization: d
                    .localization
                    .clone()
                    .unwrap_or_else(|| d.modality.clone()),
                features: rebase(&d.features),
                covariates: rebase(&d.covariates),
                labels: rebase(&d.labels),
            })
        })
        .collect::<Result<_>>()?;

    let classifiers: Vec<ClassifierKind> = file
        .grid
        .classifiers
        .iter()
        .map(|s| ClassifierKind::parse(s))
        .collect::<Result<_>>()?;
    let combinations: Vec<CombinationMode> = file
        .grid
        .combinations
        .iter()
        .map(|s| CombinationMode::parse(s))
        .collect::<Result<_>>()?;
    for c in &file.grid.corrections {
        if !["none", "residuals", "zscore"].contains(&c.as_str()) {
            return Err(Error::Manifest(format!("unknown correction {c:?}")));
        }
    }
    if classifiers.is_empty() || combinations.is_empty() || file.grid.corrections.is_empty() {
        return Err(Error::Manifest("empty grid axis".into()));
    }

    let glmnet_settings = GlmnetSettings {
        alpha: file.glmnet.alpha,
        lambda_count: file.glmnet.lambda_count,
        lambda_min_ratio: file.glmnet.lambda_min_ratio,
    };

    let find_dataset = |modality: Modality, localization: &str| -> Result<usize> {
        let matches: Vec<usize> = datasets
            .iter()
            .enumerate()
            .filter(|(_, d)| {
                d.modality == modality
                    && (modality == Modality::Mri || d.localization == localization)
            })
            .map(|(i, _)| i)
            .collect();
        match matches.len() {
            1 => Ok(matches[0]),
            0 => Err(Error::Manifest(format!(
                "no dataset for modality {modality} localization {localization:?}"
            ))),
            _ => Err(Error::Manifest(format!(
                "ambiguous datasets for modality {modality} localization {localization:?}"
            ))),
        }
    };

    let covariate_roster = |mode: CombinationMode| -> Vec<String> {
        let mut roster: Vec<String> = Vec::new();
        let uses_meg = mode.uses(Modality::Mag) || mode.uses(Modality::Grad);
        if uses_meg {
            roster.extend(file.harmonization.meg_covariates.iter().cloned());
        }
        if mode.uses(Modality::Mri) {
            for c in &file.harmonization.mri_covariates {
                if !roster.contains(c) {
                    roster.push(c.clone());
                }
            }
        }
        roster
    };

    let mut cells = Vec::new();
    let mut seen_ids = BTreeSet::new();
    for &combination in &combinations {
        let uses_meg =
            combination.uses(Modality::Mag) || combination.uses(Modality::Grad);
        let localizations: Vec<String> = if uses_meg {
            if file.grid.localizations.is_empty() {
                return Err(Error::Manifest(
                    "grid uses MEG combinations but declares no localizations".into(),
                ));
            }
            file.grid.localizations.clone()
        } else {
            vec!["MRI".to_string()]
        };
        for localization in &localizations {
            let dataset_indices: Vec<usize> = combination
                .modalities()
                .iter()
                .map(|&m| find_dataset(m, localization))
                .collect::<Result<_>>()?;
            for correction_name in &file.grid.corrections {
                let correction = match correction_name.as_str() {
                    "none" => Correction::None,
                    name => Correction::Harmonize(HarmonizationConfig {
                        kind: if name == "residuals" {
                            HarmonizationKind::Residuals
                        } else {
                            HarmonizationKind::ZScore
                        },
                        covariates: covariate_roster(combination),
                        degree: file.harmonization.degree,
                        include_interactions: file.harmonization.interactions,
                    }),
                };
                for &kind in &classifiers {
                    let mut spec = ClassifierSpec::new(kind);
                    spec.ksvm_gamma_grid = file.ksvm.gamma_grid.clone();
                    spec.ksvm_c_grid = file.ksvm.c_grid.clone();
                    spec.glmnet = glmnet_settings.clone();
                    spec.seed = file.seed;
                    let config = RunConfig {
                        classifier: spec,
                        combination,
                        correction: correction.clone(),
                        selection: SelectionConfig {
                            // GLMNET selects features while fitting; the
                            // a-priori ReliefF pass covers the others.
                            enabled: file.selection.relieff && kind != ClassifierKind::Glmnet,
                            neighbors: file.selection.neighbors,
                            sample_count: file.selection.sample_count,
                        },
                        sensor_tag: combination.as_str().to_string(),
                        localization_tag: localization.clone(),
                        k: file.k,
                        replications: file.replications,
                        master_seed: file.seed,
                    };
                    config.validate().map_err(|e| {
                        Error::Manifest(format!("cell {}: {e}", config.config_id()))
                    })?;
                    if !seen_ids.insert(config.config_id()) {
                        return Err(Error::Manifest(format!(
                            "duplicate grid cell {}",
                            config.config_id()
                        )));
                    }
                    cells.push(CellPlan {
                        config,
                        dataset_indices: dataset_indices.clone(),
                    });
                }
            }
        }
    }

    Ok(ExperimentManifest {
        seed: file.seed,
        k: file.k,
        replications: file.replications,
        output_dir: file.output_dir.map(|p| rebase(&p)),
        datasets,
        cells,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::io::Write;

    fn write_manifest(dir: &Path, body: &str) -> PathBuf {
        let path = dir.join("experiment.toml");
        let mut f = fs::File::create(&path).unwrap();
        f.write_all(body.as_bytes()).unwrap();
        path
    }

    const MINIMAL: &str = r#"
seed = 7
replications = 1
k = 3

[[datasets]]
modality = "MAG"
localization = "Sensor"
features = "mag/features.csv"
covariates = "mag/covariates.csv"
labels = "mag/labels.csv"

[grid]
classifiers = ["GNB"]
combinations = ["MAG_ONLY"]
corrections = ["none"]
localizations = ["Sensor"]
"#;

    #[test]
    fn minimal_manifest_parses() {
        let dir = tempfile::tempdir().unwrap();
        let path = write_manifest(dir.path(), MINIMAL);
        let m = parse_manifest(&path).unwrap();
        assert_eq!(m.cells.len(), 1);
        assert_eq!(m.seed, 7);
        assert_eq!(m.cells[0].config.k, 3);
        assert!(m.datasets[0].features.starts_with(dir.path()));
    }

    #[test]
    fn unknown_key_is_rejected_by_name() {
        let dir = tempfile::tempdir().unwrap();
        let body = MINIMAL.replace("[grid]", "clasifier = \"GNB\"\n\n[grid]");
        let path = write_manifest(dir.path(), &body);
        let err = parse_manifest(&path).unwrap_err();
        assert!(err.to_string().contains("clasifier"), "{err}");
    }

    #[test]
    fn missing_seed_is_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let body = MINIMAL.replace("seed = 7\n", "");
        let path = write_manifest(dir.path(), &body);
        let err = parse_manifest(&path).unwrap_err();
        assert!(err.to_string().contains("seed"), "{err}");
    }

    #[test]
    fn unknown_classifier_is_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let body = MINIMAL.replace("\"GNB\"", "\"TREE\"");
        let path = write_manifest(dir.path(), &body);
        let err = parse_manifest(&path).unwrap_err();
        assert!(err.to_string().contains("TREE"), "{err}");
    }

    #[test]
    fn paper_shaped_grid_has_expected_cell_count() {
        let dir = tempfile::tempdir().unwrap();
        let mut body = String::from("seed = 7\nreplications = 1\nk = 3\n");
        for (m, l) in [
            ("MAG", "Sensor"),
            ("MAG", "COH"),
            ("MAG", "MSP"),
            ("MAG", "EBB"),
            ("MAG", "LCMV"),
            ("MAG", "eLORETA"),
            ("GRAD", "Sensor"),
            ("GRAD", "COH"),
            ("GRAD", "MSP"),
            ("GRAD", "EBB"),
            ("GRAD", "LCMV"),
            ("GRAD", "eLORETA"),
        ] {
            body.push_str(&format!(
                "[[datasets]]\nmodality = \"{m}\"\nlocalization = \"{l}\"\nfeatures = \"f.csv\"\ncovariates = \"c.csv\"\nlabels = \"l.csv\"\n\n"
            ));
        }
        body.push_str(
            "[grid]\nclassifiers = [\"GNB\", \"KSVM\", \"GLMNET\"]\ncombinations = [\"MAG_ONLY\", \"GRAD_ONLY\"]\ncorrections = [\"none\", \"zscore\"]\nlocalizations = [\"Sensor\", \"COH\", \"MSP\", \"EBB\", \"LCMV\", \"eLORETA\"]\n",
        );
        let path = write_manifest(dir.path(), &body);
        let m = parse_manifest(&path).unwrap();
        // 3 classifiers x 2 sensors x 2 corrections x 6 localizations.
        assert_eq!(m.cells.len(), 72);
    }

    #[test]
    fn missing_dataset_for_cell_is_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let body = MINIMAL.replace("combinations = [\"MAG_ONLY\"]", "combinations = [\"GRAD_ONLY\"]");
        let path = write_manifest(dir.path(), &body);
        let err = parse_manifest(&path).unwrap_err();
        assert!(err.to_string().contains("GRAD"), "{err}");
    }

    #[test]
    fn mri_cells_ignore_the_localization_axis() {
        let dir = tempfile::tempdir().unwrap();
        let body = MINIMAL.replace(
            "[grid]",
            "[[datasets]]\nmodality = \"MRI\"\nfeatures = \"mri/f.csv\"\ncovariates = \"mri/c.csv\"\nlabels = \"mri/l.csv\"\n\n[grid]",
        )
        .replace("combinations = [\"MAG_ONLY\"]", "combinations = [\"MRI_ONLY\"]");
        let path = write_manifest(dir.path(), &body);
        let m = parse_manifest(&path).unwrap();
        assert_eq!(m.cells.len(), 1);
        assert_eq!(m.cells[0].config.localization_tag, "MRI");
    }
}
