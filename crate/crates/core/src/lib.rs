//! QAOA max-cut simulation with entangled and non-entangled mixing
//! operators, SHC-RR parameter search, and from-scratch PCA / exact t-SNE for
//! analysing the resulting parameter datasets.

pub mod error;
pub mod graph;
pub mod linalg;
pub mod optimizer;
pub mod pca;
pub mod persistence;
pub mod qaoa;
pub mod simulator;
pub mod tsne;

pub use error::{Error, Result};
pub use graph::{brute_force_max_cut, Assignment, GraphConfig, MaxCut, MaxCutProblem};
pub use linalg::{jacobi_eigen, Matrix, SymmetricEigen};
pub use optimizer::{
    hill_climb, run_experiment_batch, shc_rr, DatasetMetadata, ExperimentDataset, RunRecord,
    ShcrrConfig,
};
pub use pca::{fit_pca, fit_pca_with, pair_pca, pair_pca_with, PcaOptions, PcaResult, Source};
pub use persistence::{
    load_dataset, load_manifest, save_dataset, ExperimentManifest, SummaryTable, SCHEMA_VERSION,
};
pub use qaoa::{
    apply_mixing_operator, apply_phase_operator, evaluate_objective, InitState, LayerAngles,
    ParameterVector, QaoaConfig, QaoaObjective,
};
pub use simulator::Statevector;
pub use tsne::{fit_tsne, pair_tsne, TsneConfig, TsneInit, TsneResult};
