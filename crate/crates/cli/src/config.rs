//! Structured pipeline configuration: one TOML file with a section per
//! stage. Unknown keys are rejected.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use scimap_core::citegeom::MatrixCountMode;
use scimap_core::clusterer::Cut;
use scimap_core::synthkit::SynthSpec;

use crate::StageError;

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PipelineConfig {
    /// Global seed; `--seed` overrides.
    #[serde(default)]
    pub seed: u64,
    /// Output directory; `--out` then `SCIMAP_OUT` override the default.
    #[serde(default)]
    pub out_dir: Option<PathBuf>,
    #[serde(default)]
    pub ingest: IngestSection,
    #[serde(default)]
    pub vectors: VectorsSection,
    #[serde(default)]
    pub cluster: ClusterSection,
    #[serde(default)]
    pub profile: ProfileSection,
    #[serde(default)]
    pub conceptnet: ConceptNetSection,
    #[serde(default)]
    pub citegeom: CiteGeomSection,
    #[serde(default)]
    pub validate: ValidateSection,
    #[serde(default)]
    pub synth: Option<SynthSpec>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct IngestSection {
    /// Input paths; relative paths resolve against the output directory,
    /// which is where `synth` deposits its world.
    #[serde(default)]
    pub papers: Option<PathBuf>,
    #[serde(default)]
    pub citations: Option<PathBuf>,
    #[serde(default)]
    pub keywords: Option<PathBuf>,
    pub year_min: i32,
    pub year_max: i32,
    pub min_refs: u32,
    pub min_cites: u32,
    #[serde(default)]
    pub venues_file: Option<PathBuf>,
}

impl Default for IngestSection {
    fn default() -> Self {
        IngestSection {
            papers: None,
            citations: None,
            keywords: None,
            year_min: 1970,
            year_max: 2020,
            min_refs: 10,
            min_cites: 10,
            venues_file: None,
        }
    }
}

impl IngestSection {
    pub fn to_core(&self) -> scimap_core::corpus::IngestionConfig {
        scimap_core::corpus::IngestionConfig {
            year_min: self.year_min,
            year_max: self.year_max,
            min_refs: self.min_refs,
            min_cites: self.min_cites,
            venues_file: self.venues_file.clone(),
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct VectorsSection {
    #[serde(default)]
    pub path: Option<PathBuf>,
    pub dim: usize,
    /// When set, `project` imports these coordinates instead of computing
    /// the fallback projection.
    #[serde(default)]
    pub coords: Option<PathBuf>,
}

impl Default for VectorsSection {
    fn default() -> Self {
        VectorsSection {
            path: None,
            dim: 8,
            coords: None,
        }
    }
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ClusterSection {
    #[serde(default)]
    pub min_samples: Option<usize>,
    #[serde(default)]
    pub min_cluster_size: Option<usize>,
    /// Manual cuts; when empty, every leaf branch is selected at its birth.
    #[serde(default)]
    pub cuts: Vec<Cut>,
    #[serde(default)]
    pub refine: Vec<RefineTarget>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RefineTarget {
    /// Cluster label from the selection step whose points get re-clustered.
    pub cluster: i64,
    pub min_samples: usize,
    pub min_cluster_size: usize,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProfileSection {
    pub top_n: usize,
    pub period_length: u32,
    pub grid_resolution: usize,
    /// Cumulative AI curves normalize at this year (default: year_max - 1).
    #[serde(default)]
    pub normalize_year: Option<i32>,
}

impl Default for ProfileSection {
    fn default() -> Self {
        ProfileSection {
            top_n: 5,
            period_length: 5,
            grid_resolution: 32,
            normalize_year: None,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConceptNetSection {
    /// Taxonomy levels whose concepts enter the co-occurrence networks.
    pub levels: Vec<u8>,
    /// Clusters to analyze; empty means all.
    #[serde(default)]
    pub clusters: Vec<i64>,
    /// Years whose cumulative edge lists get emitted; empty means the final
    /// year only.
    #[serde(default)]
    pub edge_years: Vec<i32>,
}

impl Default for ConceptNetSection {
    fn default() -> Self {
        ConceptNetSection {
            levels: vec![2, 3],
            clusters: vec![],
            edge_years: vec![],
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CiteGeomSection {
    pub min_citations: usize,
    pub count_mode: MatrixCountMode,
    /// Publication-year cohorts whose RoG dynamics get clustered.
    #[serde(default)]
    pub cohort_years: Vec<i32>,
    /// Inclusive k sweep for the dynamics clustering.
    pub k_range: [usize; 2],
}

impl Default for CiteGeomSection {
    fn default() -> Self {
        CiteGeomSection {
            min_citations: 3,
            count_mode: MatrixCountMode::Edges,
            cohort_years: vec![],
            k_range: [1, 6],
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ValidateSection {
    /// Minimum corpus-wide population for a subfield label to be retained.
    pub threshold: usize,
    /// Test fraction for the high-dimensional space (reference run: 1%).
    pub high_test_fraction: f64,
    /// Test fraction for the 2-D map (reference run: 20%).
    pub low_test_fraction: f64,
    pub k_values: Vec<usize>,
    /// Neighborhood size for the cross-space neighbor-overlap measure.
    pub overlap_k: usize,
}

impl Default for ValidateSection {
    fn default() -> Self {
        ValidateSection {
            threshold: 10,
            high_test_fraction: 0.01,
            low_test_fraction: 0.2,
            k_values: vec![1, 2, 4, 8, 12, 16, 20],
            overlap_k: 10,
        }
    }
}

/// Loads the config file (missing file allowed when `path` is `None`),
/// applies `--set section.key=value` overrides, then deserializes strictly.
pub fn load_config(path: Option<&Path>, overrides: &[String]) -> Result<PipelineConfig, StageError> {
    let table: toml::Table = match path {
        Some(p) => {
            let text = std::fs::read_to_string(p).map_err(|e| {
                StageError::Config(format!("cannot read config {}: {e}", p.display()))
            })?;
            text.parse().map_err(|e| {
                StageError::Config(format!("cannot parse config {}: {e}", p.display()))
            })?
        }
        None => toml::Table::new(),
    };
    let mut value = toml::Value::Table(table);

    for item in overrides {
        let (key_path, raw) = item.split_once('=').ok_or_else(|| {
            StageError::Config(format!("override '{item}' is not of the form section.key=value"))
        })?;
        let parsed: toml::Value = {
            let wrapped = format!("v = {raw}");
            match wrapped.parse::<toml::Table>() {
                Ok(t) => t["v"].clone(),
                // Bare strings come through unquoted on the command line.
                Err(_) => toml::Value::String(raw.to_string()),
            }
        };
        set_path(&mut value, key_path, parsed)?;
    }

    value
        .try_into()
        .map_err(|e| StageError::Config(format!("invalid configuration: {e}")))
}

fn set_path(root: &mut toml::Value, path: &str, new: toml::Value) -> Result<(), StageError> {
    let mut cursor = root;
    let parts: Vec<&str> = path.split('.').collect();
    for (i, part) in parts.iter().enumerate() {
        let table = cursor.as_table_mut().ok_or_else(|| {
            StageError::Config(format!("override path '{path}' crosses a non-table value"))
        })?;
        if i == parts.len() - 1 {
            table.insert(part.to_string(), new);
            return Ok(());
        }
        cursor = table
            .entry(part.to_string())
            .or_insert(toml::Value::Table(toml::map::Map::new()));
    }
    Err(StageError::Config(format!("empty override path '{path}'")))
}

/// Canonical serialized form of the resolved config, hashed into manifests.
pub fn config_digest_text(config: &PipelineConfig) -> String {
    toml::to_string(config).unwrap_or_default()
}
