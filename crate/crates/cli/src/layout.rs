//! Output directory layout, dataset loading, pairing checks and the
//! merge-on-write summary tables shared by the subcommands.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use qmix_core::persistence::write_atomic;
use qmix_core::{
    load_dataset, load_manifest, Error, ExperimentDataset, ExperimentManifest, InitState,
    MaxCutProblem, QaoaConfig, SummaryTable,
};
use serde::{Deserialize, Serialize};

use crate::error::{CliError, CliResult};

pub const DATASETS_DIR: &str = "datasets";
pub const TABLES_DIR: &str = "tables";
pub const PCA_DIR: &str = "pca";
pub const TSNE_DIR: &str = "tsne";
pub const TABLE_CORNER: &str = "Parameters";

/// `4n_cyclic`.
pub fn problem_slug(problem: &MaxCutProblem) -> String {
    format!("{}n_{}", problem.n(), problem.config())
}

fn init_suffix(init: InitState) -> &'static str {
    match init {
        InitState::Plus => "",
        InitState::Zero => "_zero",
    }
}

/// `4n_cyclic_1L_ent`; datasets started from |0...0> get a `_zero` suffix.
pub fn cell_stem(problem: &MaxCutProblem, qaoa: &QaoaConfig) -> String {
    let kind = if qaoa.entangled { "ent" } else { "nonent" };
    format!(
        "{}_{}L_{}{}",
        problem_slug(problem),
        qaoa.depth,
        kind,
        init_suffix(qaoa.init)
    )
}

pub fn pair_stem(problem: &MaxCutProblem, qaoa: &QaoaConfig) -> String {
    format!(
        "{}_{}L_pair{}",
        problem_slug(problem),
        qaoa.depth,
        init_suffix(qaoa.init)
    )
}

/// Pair tables label rows by parameter count only (`3 p`).
pub fn pair_label(qaoa: &QaoaConfig) -> String {
    format!("{} p", qaoa.parameter_count())
}

pub fn perplexity_column(perplexity: f64) -> String {
    format!("{perplexity} per")
}

pub fn write_file(path: &Path, bytes: &[u8]) -> CliResult<()> {
    write_atomic(path, bytes).map_err(CliError::from)
}

#[derive(Debug, Clone)]
pub struct LoadedDataset {
    pub path: PathBuf,
    pub dataset: ExperimentDataset,
    pub manifest: ExperimentManifest,
}

impl LoadedDataset {
    pub fn load(path: &Path) -> CliResult<Self> {
        let dataset = load_dataset(path)?;
        let manifest = load_manifest(path)?;
        Ok(Self {
            path: path.to_path_buf(),
            dataset,
            manifest,
        })
    }

    pub fn problem(&self) -> &MaxCutProblem {
        &self.dataset.metadata.problem
    }

    pub fn qaoa(&self) -> &QaoaConfig {
        &self.dataset.metadata.qaoa
    }

    pub fn stem(&self) -> String {
        cell_stem(self.problem(), self.qaoa())
    }

    pub fn reference(&self) -> DatasetRef {
        let m = &self.manifest;
        DatasetRef {
            file: self.path.display().to_string(),
            sha256: m.dataset_sha256.clone(),
            problem: m.problem.label(),
            model: m.qaoa.model_label(),
            init: format!("{:?}", m.qaoa.init).to_lowercase(),
            runs: m.runs,
            master_seed: m.master_seed,
            restarts: m.shcrr.restarts,
            iterations_per_restart: m.shcrr.iterations_per_restart,
            step_sigma: m.shcrr.step_sigma,
        }
    }
}

/// Orders a pair as (non-entangled, entangled) after checking that the two
/// manifests agree on everything except the entanglement flag.
pub fn order_pair(a: LoadedDataset, b: LoadedDataset) -> CliResult<(LoadedDataset, LoadedDataset)> {
    let (ma, mb) = (&a.manifest, &b.manifest);
    let mut problems = Vec::new();
    if ma.problem != mb.problem {
        problems.push(format!(
            "problems differ ({} vs {})",
            ma.problem.label(),
            mb.problem.label()
        ));
    }
    if ma.qaoa.depth != mb.qaoa.depth {
        problems.push(format!(
            "depths differ ({} vs {})",
            ma.qaoa.depth, mb.qaoa.depth
        ));
    }
    if ma.qaoa.init != mb.qaoa.init {
        problems.push("initial states differ".to_string());
    }
    if ma.qaoa.entangled == mb.qaoa.entangled {
        problems.push("both datasets have the same entanglement flag".to_string());
    }
    if ma.shcrr != mb.shcrr {
        problems.push("optimizer settings differ".to_string());
    }
    if ma.runs != mb.runs {
        problems.push(format!("run counts differ ({} vs {})", ma.runs, mb.runs));
    }
    if !problems.is_empty() {
        return Err(Error::Pairing(format!(
            "{} and {}: {}",
            a.path.display(),
            b.path.display(),
            problems.join("; ")
        ))
        .into());
    }
    Ok(if ma.qaoa.entangled { (b, a) } else { (a, b) })
}

/// Splits the flat `--pair A B --pair C D` list and loads each pair.
pub fn load_pairs(flat: &[PathBuf]) -> CliResult<Vec<(LoadedDataset, LoadedDataset)>> {
    flat.chunks(2)
        .map(|c| match c {
            [a, b] => order_pair(LoadedDataset::load(a)?, LoadedDataset::load(b)?),
            _ => Err(CliError::Usage(
                "--pair takes exactly two dataset paths".into(),
            )),
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DatasetRef {
    pub file: String,
    pub sha256: String,
    pub problem: String,
    pub model: String,
    pub init: String,
    pub runs: usize,
    pub master_seed: u64,
    pub restarts: usize,
    pub iterations_per_restart: usize,
    pub step_sigma: f64,
}

/// Where the numbers in one table row came from.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RowProvenance {
    pub datasets: Vec<DatasetRef>,
    pub settings: serde_json::Value,
}

pub type Provenance = BTreeMap<String, RowProvenance>;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TableKind {
    PcaIndividual,
    PcaPair,
    TsneIndividual,
    TsnePair,
}

impl TableKind {
    pub const ALL: [TableKind; 4] = [
        TableKind::PcaIndividual,
        TableKind::PcaPair,
        TableKind::TsneIndividual,
        TableKind::TsnePair,
    ];

    pub fn suffix(self) -> &'static str {
        match self {
            TableKind::PcaIndividual => "pca_individual",
            TableKind::PcaPair => "pca_pair",
            TableKind::TsneIndividual => "tsne_individual",
            TableKind::TsnePair => "tsne_pair",
        }
    }

    pub fn title(self) -> &'static str {
        match self {
            TableKind::PcaIndividual => "Individual PCA explained variance",
            TableKind::PcaPair => "Pair PCA explained variance",
            TableKind::TsneIndividual => "Individual t-SNE KL divergence",
            TableKind::TsnePair => "Pair t-SNE KL divergence",
        }
    }

    pub fn table_path(self, out: &Path, problem_slug: &str) -> PathBuf {
        out.join(TABLES_DIR)
            .join(format!("{problem_slug}.{}.csv", self.suffix()))
    }

    pub fn provenance_path(self, out: &Path, problem_slug: &str) -> PathBuf {
        out.join(TABLES_DIR)
            .join(format!("{problem_slug}.{}.provenance.json", self.suffix()))
    }
}

/// Sort key placing `3 p` before `3 p ent` before `6 p`.
fn row_key(label: &str) -> (usize, bool, String) {
    let count = label
        .split_whitespace()
        .next()
        .and_then(|t| t.parse().ok())
        .unwrap_or(usize::MAX);
    (count, label.ends_with(" ent"), label.to_string())
}

pub fn read_table(path: &Path) -> CliResult<Option<SummaryTable>> {
    match fs::read(path) {
        Ok(bytes) => Ok(Some(SummaryTable::from_csv(path, &bytes)?)),
        Err(e) if e.kind() == std::io::ErrorKind::NotFound => Ok(None),
        Err(e) => Err(CliError::io(path, e)),
    }
}

pub fn read_provenance(path: &Path) -> CliResult<Provenance> {
    match fs::read(path) {
        Ok(bytes) => serde_json::from_slice(&bytes).map_err(|e| {
            Error::Parse {
                path: path.to_path_buf(),
                line: e.line() as u64,
                message: e.to_string(),
            }
            .into()
        }),
        Err(e) if e.kind() == std::io::ErrorKind::NotFound => Ok(Provenance::new()),
        Err(e) => Err(CliError::io(path, e)),
    }
}

/// One table row with its provenance, ready to merge.
pub struct TableRow {
    pub label: String,
    pub cells: Vec<Option<f64>>,
    pub provenance: RowProvenance,
}

/// Merges `rows` into the table of `kind` for one problem, replacing rows
/// with the same label, so cells can be produced by separate invocations.
/// A table whose columns differ from `columns` is replaced outright.
pub fn upsert_rows(
    out: &Path,
    kind: TableKind,
    problem_slug: &str,
    columns: &[String],
    rows: Vec<TableRow>,
) -> CliResult<PathBuf> {
    let table_path = kind.table_path(out, problem_slug);
    let prov_path = kind.provenance_path(out, problem_slug);

    let mut merged: BTreeMap<(usize, bool, String), Vec<Option<f64>>> = BTreeMap::new();
    let mut provenance = Provenance::new();
    if let Some(existing) = read_table(&table_path)? {
        if existing.columns == columns {
            let old_prov = read_provenance(&prov_path)?;
            for (label, cells) in existing.rows {
                if let Some(p) = old_prov.get(&label) {
                    provenance.insert(label.clone(), p.clone());
                }
                merged.insert(row_key(&label), cells);
            }
        } else {
            log::warn!(
                "{}: columns changed, replacing the existing table",
                table_path.display()
            );
        }
    }
    for row in rows {
        provenance.insert(row.label.clone(), row.provenance);
        merged.insert(row_key(&row.label), row.cells);
    }

    let mut table = SummaryTable::new(TABLE_CORNER, columns.to_vec());
    for ((_, _, label), cells) in merged {
        table.push_row(label, cells)?;
    }
    write_file(&table_path, &table.to_csv())?;
    let mut json = serde_json::to_vec_pretty(&provenance)
        .map_err(|e| Error::Numeric(format!("provenance encoding failed: {e}")))?;
    json.push(b'\n');
    write_file(&prov_path, &json)?;
    Ok(table_path)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rows_sort_by_parameter_count_then_entanglement() {
        let mut labels = vec!["6 p ent", "3 p ent", "6 p", "3 p"];
        labels.sort_by_key(|l| row_key(l));
        assert_eq!(labels, ["3 p", "3 p ent", "6 p", "6 p ent"]);
    }

    #[test]
    fn stems_and_labels() {
        let problem = MaxCutProblem::cyclic(4).unwrap();
        let q = QaoaConfig::new(2, true, InitState::Plus).unwrap();
        assert_eq!(cell_stem(&problem, &q), "4n_cyclic_2L_ent");
        assert_eq!(pair_stem(&problem, &q), "4n_cyclic_2L_pair");
        assert_eq!(pair_label(&q), "6 p");
        let z = QaoaConfig::new(1, false, InitState::Zero).unwrap();
        assert_eq!(cell_stem(&problem, &z), "4n_cyclic_1L_nonent_zero");
        assert_eq!(perplexity_column(99.0), "99 per");
        assert_eq!(perplexity_column(2.5), "2.5 per");
    }
}
