//! Principal loading analysis: dimensionality reduction by discarding
//! variables whose eigenvector structure isolates them into low-variance
//! blocks.

pub mod dispersion;
pub mod error;
pub mod ingest;
mod jacobi;
pub mod perturbation;
pub mod pla;
pub mod scalar;
pub mod simulate;

pub use dispersion::{
    correlation_from_covariance, eigendecompose, eigendecompose_with, sample_correlation,
    sample_covariance, symmetric_eigen, DispersionKind, DispersionMatrix, EigenSystem, Tolerances,
};
pub use error::{PlaError, Result};
pub use ingest::{load_csv, read_csv, standardize_columns, CsvOptions, DataMatrix, NaPolicy};
pub use perturbation::{
    eigengap_bound, eigenvector_perturbation, measured_perturbation, variance_limit,
    variance_sensitivity, variance_sensitivity_for, BoundDiagnostic, PerturbationPair,
    SensitivityProfile,
};
pub use pla::{
    detect_blocks, discard, explained_variance_approx, explained_variance_exact,
    rescale_eigenvectors, run_pla, Block, BlockPartition, EvFormula, LoadingMatrix, PlaConfig,
    PlaInput, PlaMode, PlaReport, ReportSummary, Warning,
};
pub use scalar::Scalar;
pub use simulate::{
    draw_sample, generate_population, reproduce_table, type_one_error, type_one_error_grid,
    ErrorEstimate, GeneratorParams, MonteCarloSpec, PopulationModel, Scenario, ScenarioSpec, Table,
    TableResult,
};

pub type DataMatrix64 = DataMatrix<f64>;
pub type DispersionMatrix64 = DispersionMatrix<f64>;
pub type EigenSystem64 = EigenSystem<f64>;
pub type PlaReport64 = PlaReport<f64>;
pub type DataMatrix32 = DataMatrix<f32>;
pub type DispersionMatrix32 = DispersionMatrix<f32>;
pub type EigenSystem32 = EigenSystem<f32>;
pub type PlaReport32 = PlaReport<f32>;
