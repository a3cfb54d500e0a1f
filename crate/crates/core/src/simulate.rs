//! Monte Carlo estimation of the type I error of block detection: plant
//! uncorrelated variables (or one uncorrelated block) next to a correlated
//! remainder, sample, run detection and count how often the planted part is
//! not recovered.

use std::fmt;
use std::io::Write;
use std::str::FromStr;

use ndarray::{s, Array2};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dispersion::{
    eigendecompose, sample_correlation, sample_covariance, symmetric_eigen, DispersionKind,
    DispersionMatrix,
};
use crate::error::{PlaError, Result};
use crate::ingest::DataMatrix;
use crate::pla::{detect_blocks, rescale_eigenvectors, BlockPartition, LoadingMatrix, PlaMode};
use crate::scalar::Scalar;

/// Two-sided 95% normal quantile.
const Z95: f64 = 1.959_963_984_540_054;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum Scenario {
    /// `k` mutually uncorrelated unit-variance variables.
    SingleVars { k: usize },
    /// One correlated block of `kappa` variables, uncorrelated with the rest.
    OneBlock { kappa: usize },
}

impl Scenario {
    pub fn planted_count(self) -> usize {
        match self {
            Scenario::SingleVars { k } => k,
            Scenario::OneBlock { kappa } => kappa,
        }
    }
}

impl fmt::Display for Scenario {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Scenario::SingleVars { k } => write!(f, "single-vars(k={k})"),
            Scenario::OneBlock { kappa } => write!(f, "one-block(kappa={kappa})"),
        }
    }
}

/// Construction of the random correlated blocks.
///
/// A block of size `n` is `A A^T + noise * I` with `A` an `n x min(n, rank)`
/// standard normal matrix, scaled to unit diagonal. Draws are rejected when
/// the planted and remainder spectra come closer than `min_eigengap`, or when
/// a planted block has an off-diagonal |correlation| below
/// `min_planted_correlation`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GeneratorParams {
    pub factor_rank: usize,
    pub noise: f64,
    pub min_eigengap: f64,
    pub min_planted_correlation: f64,
    pub max_attempts: usize,
}

impl GeneratorParams {
    /// Rank-5 factors with noise 0.1 and no rejection.
    pub fn plain() -> Self {
        Self {
            factor_rank: 5,
            noise: 0.1,
            min_eigengap: 0.0,
            min_planted_correlation: 0.0,
            max_attempts: 1,
        }
    }

    fn validate(&self) -> Result<()> {
        if self.factor_rank == 0 {
            return Err(PlaError::Config("factor_rank must be at least 1".into()));
        }
        if !(self.noise.is_finite() && self.noise > 0.0) {
            return Err(PlaError::Config("noise must be positive".into()));
        }
        if !(self.min_eigengap >= 0.0 && self.min_eigengap.is_finite()) {
            return Err(PlaError::Config("min_eigengap must be non-negative".into()));
        }
        if !(0.0..1.0).contains(&self.min_planted_correlation) {
            return Err(PlaError::Config(
                "min_planted_correlation must lie in [0, 1)".into(),
            ));
        }
        if self.max_attempts == 0 {
            return Err(PlaError::Config("max_attempts must be at least 1".into()));
        }
        Ok(())
    }
}

impl Default for GeneratorParams {
    fn default() -> Self {
        Self {
            factor_rank: 3,
            noise: 3.0,
            min_eigengap: 0.035,
            min_planted_correlation: 0.3,
            max_attempts: 10_000,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScenarioSpec {
    pub m_total: usize,
    pub scenario: Scenario,
    pub n_sample: usize,
    pub tau: f64,
    pub mode: PlaMode,
    /// Cross-block covariances are drawn from `epsilon_scale * U[-1, 1]`.
    pub epsilon_scale: f64,
    pub generator: GeneratorParams,
}

impl ScenarioSpec {
    pub fn new(m_total: usize, scenario: Scenario, n_sample: usize, tau: f64) -> Result<Self> {
        let spec = Self {
            m_total,
            scenario,
            n_sample,
            tau,
            mode: PlaMode::CorrelationRescaled,
            epsilon_scale: 0.0,
            generator: GeneratorParams::default(),
        };
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<()> {
        let m = self.m_total;
        match self.scenario {
            Scenario::SingleVars { k } => {
                if k < 1 || k + 2 > m {
                    return Err(PlaError::Dimension(format!(
                        "single-vars needs 1 <= k <= M - 2, got k={k}, M={m}"
                    )));
                }
            }
            Scenario::OneBlock { kappa } => {
                if kappa < 2 || kappa + 2 > m {
                    return Err(PlaError::Dimension(format!(
                        "one-block needs 2 <= kappa <= M - 2, got kappa={kappa}, M={m}"
                    )));
                }
            }
        }
        if self.n_sample < 2 {
            return Err(PlaError::Dimension("sample size must be at least 2".into()));
        }
        if !(self.tau > 0.0 && self.tau < 1.0) {
            return Err(PlaError::Config(format!(
                "tau must lie in (0, 1), got {}",
                self.tau
            )));
        }
        if !(self.epsilon_scale >= 0.0 && self.epsilon_scale.is_finite()) {
            return Err(PlaError::Config(
                "epsilon_scale must be non-negative".into(),
            ));
        }
        self.generator.validate()
    }

    /// Planted variables occupy the last indices.
    pub fn planted_variables(&self) -> Vec<usize> {
        let p = self.scenario.planted_count();
        (self.m_total - p..self.m_total).collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MonteCarloSpec {
    pub iterations: usize,
    pub master_seed: u64,
    /// Worker threads; `None` uses the global pool.
    pub threads: Option<usize>,
}

impl MonteCarloSpec {
    pub fn new(iterations: usize, master_seed: u64) -> Result<Self> {
        let mc = Self {
            iterations,
            master_seed,
            threads: None,
        };
        mc.validate()?;
        Ok(mc)
    }

    pub fn validate(&self) -> Result<()> {
        if self.iterations == 0 {
            return Err(PlaError::Config("iterations must be at least 1".into()));
        }
        if self.threads == Some(0) {
            return Err(PlaError::Config("threads must be at least 1".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ErrorEstimate {
    pub tau: f64,
    pub failures: usize,
    pub iterations: usize,
    pub rate: f64,
    pub ci_low: f64,
    pub ci_high: f64,
    /// Iterations that hit a numerical error (already counted as failures).
    pub errors: usize,
    pub seeds: Vec<u64>,
}

/// Wilson score interval at 95%.
pub fn wilson_interval(failures: usize, n: usize) -> (f64, f64) {
    if n == 0 {
        return (0.0, 1.0);
    }
    let n = n as f64;
    let p = failures as f64 / n;
    let z2 = Z95 * Z95;
    let denom = 1.0 + z2 / n;
    let centre = (p + z2 / (2.0 * n)) / denom;
    let half = Z95 / denom * (p * (1.0 - p) / n + z2 / (4.0 * n * n)).sqrt();
    ((centre - half).max(0.0), (centre + half).min(1.0))
}

fn splitmix64(mut x: u64) -> u64 {
    x = x.wrapping_add(0x9E37_79B9_7F4A_7C15);
    x = (x ^ (x >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    x = (x ^ (x >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    x ^ (x >> 31)
}

/// Seed of iteration `s`; depends only on the master seed and `s`.
pub fn iteration_seed(master_seed: u64, s: usize) -> u64 {
    splitmix64(master_seed ^ splitmix64(s as u64))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PopulationModel<T> {
    covariance: DispersionMatrix<T>,
    planted: Vec<usize>,
    scenario: Scenario,
}

impl<T: Scalar> PopulationModel<T> {
    pub fn new(covariance: DispersionMatrix<T>, planted: Vec<usize>, scenario: Scenario) -> Self {
        Self {
            covariance,
            planted,
            scenario,
        }
    }

    pub fn covariance(&self) -> &DispersionMatrix<T> {
        &self.covariance
    }

    pub fn planted(&self) -> &[usize] {
        &self.planted
    }

    pub fn scenario(&self) -> Scenario {
        self.scenario
    }

    pub fn dim(&self) -> usize {
        self.covariance.dim()
    }
}

fn correlated_block<R: Rng>(rng: &mut R, n: usize, params: &GeneratorParams) -> Array2<f64> {
    let r = n.min(params.factor_rank);
    let a = Array2::from_shape_fn((n, r), |_| rng.sample::<f64, _>(StandardNormal));
    let mut c = a.dot(&a.t());
    for i in 0..n {
        c[[i, i]] += params.noise;
    }
    let sd: Vec<f64> = (0..n).map(|i| c[[i, i]].sqrt()).collect();
    for i in 0..n {
        for j in 0..n {
            c[[i, j]] = if i == j {
                1.0
            } else {
                c[[i, j]] / (sd[i] * sd[j])
            };
        }
    }
    c
}

fn spectrum(a: &Array2<f64>) -> Result<Vec<f64>> {
    Ok(symmetric_eigen(a)?.eigenvalues().to_vec())
}

fn cholesky_lower<T: Scalar>(a: &Array2<T>) -> Result<Array2<T>> {
    let n = a.nrows();
    let scale = a.diag().iter().fold(T::zero(), |m, &v| m.max(v.abs()));
    let tol = T::tolerance(1e-10, 1e3) * scale.max(T::one());
    let mut l = Array2::<T>::zeros((n, n));
    for j in 0..n {
        let mut d = a[[j, j]];
        for k in 0..j {
            d = d - l[[j, k]] * l[[j, k]];
        }
        if d < -tol {
            return Err(PlaError::Factorization(format!(
                "covariance is not positive semi-definite (pivot {} at {})",
                d,
                j + 1
            )));
        }
        if d <= tol {
            // Semi-definite direction: the column stays zero.
            continue;
        }
        let djj = d.sqrt();
        l[[j, j]] = djj;
        for i in (j + 1)..n {
            let mut v = a[[i, j]];
            for k in 0..j {
                v = v - l[[i, k]] * l[[j, k]];
            }
            l[[i, j]] = v / djj;
        }
    }
    Ok(l)
}

/// Mean-zero Gaussian population for one Monte Carlo iteration.
pub fn generate_population<T: Scalar>(
    spec: &ScenarioSpec,
    seed: u64,
) -> Result<PopulationModel<T>> {
    spec.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let m = spec.m_total;
    let p = spec.scenario.planted_count();
    let r = m - p;
    let g = &spec.generator;

    let mut attempts = 0;
    let mut next_attempt = || {
        attempts += 1;
        attempts <= g.max_attempts
    };
    'draw: while next_attempt() {
        let planted = match spec.scenario {
            Scenario::SingleVars { .. } => Array2::eye(p),
            Scenario::OneBlock { .. } => {
                let b = correlated_block(&mut rng, p, g);
                let weakest = (0..p)
                    .flat_map(|i| (i + 1..p).map(move |j| (i, j)))
                    .map(|(i, j)| b[[i, j]].abs())
                    .fold(f64::INFINITY, f64::min);
                if weakest < g.min_planted_correlation {
                    continue;
                }
                b
            }
        };
        let wp = spectrum(&planted)?;
        let remainder = loop {
            let remainder = correlated_block(&mut rng, r, g);
            if g.min_eigengap == 0.0 {
                break remainder;
            }
            let wr = spectrum(&remainder)?;
            let closest = wp
                .iter()
                .flat_map(|a| wr.iter().map(move |b| (a - b).abs()))
                .fold(f64::INFINITY, f64::min);
            if closest >= g.min_eigengap {
                break remainder;
            }
            if !next_attempt() {
                break 'draw;
            }
        };

        let mut cov = Array2::<f64>::zeros((m, m));
        cov.slice_mut(s![..r, ..r]).assign(&remainder);
        cov.slice_mut(s![r.., r..]).assign(&planted);
        if spec.epsilon_scale > 0.0 {
            // Entries linking different blocks; planted singletons are blocks
            // of their own.
            let block_of = |i: usize| match spec.scenario {
                _ if i < r => 0,
                Scenario::SingleVars { .. } => i - r + 1,
                Scenario::OneBlock { .. } => 1,
            };
            for i in 0..m {
                for j in (i + 1)..m {
                    if block_of(i) != block_of(j) {
                        let e = spec.epsilon_scale * rng.random_range(-1.0..=1.0);
                        cov[[i, j]] = e;
                        cov[[j, i]] = e;
                    }
                }
            }
            if cholesky_lower(&cov).is_err() {
                continue;
            }
        }
        let cov = cov.mapv(T::lit);
        let covariance = DispersionMatrix::new(cov, DispersionKind::Covariance, None)?;
        return Ok(PopulationModel::new(
            covariance,
            spec.planted_variables(),
            spec.scenario,
        ));
    }
    Err(PlaError::Config(format!(
        "generator constraints not met after {} attempts",
        g.max_attempts
    )))
}

/// `n` i.i.d. rows from `N(0, pop.covariance)`.
pub fn draw_sample<T: Scalar>(
    pop: &PopulationModel<T>,
    n: usize,
    seed: u64,
) -> Result<DataMatrix<T>> {
    let l = cholesky_lower(pop.covariance.entries())?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let z = Array2::from_shape_fn((n, pop.dim()), |_| {
        T::lit(rng.sample::<f64, _>(StandardNormal))
    });
    DataMatrix::with_generated_names(z.dot(&l.t()))
}

/// Loadings used for detection under `mode`.
fn detection_loadings<T: Scalar>(data: &DataMatrix<T>, mode: PlaMode) -> Result<LoadingMatrix<T>> {
    let m = match mode.detection_kind() {
        DispersionKind::Covariance => sample_covariance(data)?,
        DispersionKind::Correlation => sample_correlation(data)?,
    };
    let es = eigendecompose(&m)?;
    if mode.rescaled() {
        rescale_eigenvectors(&es)
    } else {
        Ok(LoadingMatrix::from_eigensystem(&es))
    }
}

/// Whether detection recovered the planted structure.
///
/// Single variables: the planted set equals the union of the detected blocks
/// made only of planted variables. One block: the planted variables form
/// exactly one detected block.
pub fn planted_recovered<T>(
    scenario: Scenario,
    planted: &[usize],
    partition: &BlockPartition<T>,
) -> bool {
    match scenario {
        Scenario::SingleVars { .. } => {
            let mut covered: Vec<usize> = partition
                .blocks
                .iter()
                .filter(|b| b.variables.iter().all(|v| planted.contains(v)))
                .flat_map(|b| b.variables.iter().copied())
                .collect();
            covered.sort_unstable();
            covered == planted
        }
        Scenario::OneBlock { .. } => partition.blocks.iter().any(|b| b.variables == planted),
    }
}

fn run_iteration<T: Scalar>(spec: &ScenarioSpec, taus: &[f64], seed: u64) -> Result<Vec<bool>> {
    let pop = generate_population::<T>(spec, seed)?;
    let data = draw_sample(&pop, spec.n_sample, splitmix64(seed))?;
    let loadings = detection_loadings(&data, spec.mode)?;
    taus.iter()
        .map(|&tau| {
            let p = detect_blocks(&loadings, tau)?;
            Ok(planted_recovered(spec.scenario, pop.planted(), &p))
        })
        .collect()
}

fn in_pool<R: Send>(threads: Option<usize>, f: impl FnOnce() -> R + Send) -> Result<R> {
    match threads {
        None => Ok(f()),
        Some(n) => {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(n)
                .build()
                .map_err(|e| PlaError::Config(e.to_string()))?;
            Ok(pool.install(f))
        }
    }
}

/// Type I error at each of `taus`, sharing every sample across thresholds.
/// `spec.tau` is ignored.
pub fn type_one_error_grid<T: Scalar>(
    spec: &ScenarioSpec,
    taus: &[f64],
    mc: &MonteCarloSpec,
) -> Result<Vec<ErrorEstimate>> {
    spec.validate()?;
    mc.validate()?;
    for &tau in taus {
        if !(tau > 0.0 && tau < 1.0) {
            return Err(PlaError::Config(format!(
                "tau must lie in (0, 1), got {tau}"
            )));
        }
    }
    let seeds: Vec<u64> = (0..mc.iterations)
        .map(|s| iteration_seed(mc.master_seed, s))
        .collect();
    let outcomes: Vec<Option<Vec<bool>>> = in_pool(mc.threads, || {
        seeds
            .par_iter()
            .map(|&seed| match run_iteration::<T>(spec, taus, seed) {
                Ok(v) => Some(v),
                Err(e) => {
                    log::warn!("iteration with seed {seed} failed: {e}");
                    None
                }
            })
            .collect()
    })?;

    let errors = outcomes.iter().filter(|o| o.is_none()).count();
    Ok(taus
        .iter()
        .enumerate()
        .map(|(t, &tau)| {
            let failures = outcomes
                .iter()
                .filter(|o| o.as_ref().is_none_or(|v| !v[t]))
                .count();
            let (ci_low, ci_high) = wilson_interval(failures, mc.iterations);
            ErrorEstimate {
                tau,
                failures,
                iterations: mc.iterations,
                rate: failures as f64 / mc.iterations as f64,
                ci_low,
                ci_high,
                errors,
                seeds: seeds.clone(),
            }
        })
        .collect())
}

pub fn type_one_error<T: Scalar>(
    spec: &ScenarioSpec,
    mc: &MonteCarloSpec,
) -> Result<ErrorEstimate> {
    Ok(type_one_error_grid::<T>(spec, &[spec.tau], mc)?.remove(0))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Table {
    /// Uncorrelated single variables.
    I,
    /// One uncorrelated block.
    II,
}

impl Table {
    pub fn taus(self) -> [f64; 4] {
        match self {
            Table::I => [0.4, 0.5, 0.6, 0.7],
            Table::II => [0.6, 0.7, 0.8, 0.9],
        }
    }

    pub fn planted_sizes(self) -> std::ops::RangeInclusive<usize> {
        match self {
            Table::I => 1..=5,
            Table::II => 2..=6,
        }
    }

    pub fn scenario(self, size: usize) -> Scenario {
        match self {
            Table::I => Scenario::SingleVars { k: size },
            Table::II => Scenario::OneBlock { kappa: size },
        }
    }

    pub const M_VALUES: [usize; 10] = [20, 40, 60, 80, 100, 120, 140, 160, 180, 200];
    pub const N_VALUES: [usize; 2] = [5000, 10000];

    /// Every `(M, k or kappa, N)` cell of the full grid.
    pub fn full_grid(self) -> Vec<RowKey> {
        let sizes: Vec<usize> = self.planted_sizes().collect();
        Self::grid(&Self::M_VALUES, &sizes, &Self::N_VALUES)
    }

    /// Cartesian product, ordered by size, then M, then N.
    pub fn grid(ms: &[usize], sizes: &[usize], ns: &[usize]) -> Vec<RowKey> {
        let mut rows = Vec::with_capacity(ms.len() * sizes.len() * ns.len());
        for &size in sizes {
            for &m in ms {
                for &n in ns {
                    rows.push(RowKey { m, size, n });
                }
            }
        }
        rows
    }
}

impl FromStr for Table {
    type Err = PlaError;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "I" | "i" | "1" => Ok(Table::I),
            "II" | "ii" | "2" => Ok(Table::II),
            other => Err(PlaError::Config(format!("unknown table `{other}`"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct RowKey {
    pub m: usize,
    /// `k` or `kappa`.
    pub size: usize,
    pub n: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TableRow {
    pub key: RowKey,
    pub estimates: Vec<ErrorEstimate>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TableResult {
    pub table: Table,
    pub rows: Vec<TableRow>,
}

impl TableResult {
    pub const CSV_HEADER: [&'static str; 8] = [
        "M",
        "k_or_kappa",
        "N",
        "tau",
        "rate",
        "ci_low",
        "ci_high",
        "S",
    ];

    /// One line per `(row, tau)`.
    pub fn write_csv<W: Write>(&self, writer: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(writer);
        let err = |e: csv::Error| PlaError::Io(std::io::Error::other(e));
        w.write_record(Self::CSV_HEADER).map_err(err)?;
        for row in &self.rows {
            for e in &row.estimates {
                w.write_record([
                    row.key.m.to_string(),
                    row.key.size.to_string(),
                    row.key.n.to_string(),
                    e.tau.to_string(),
                    format!("{:.4}", e.rate),
                    format!("{:.4}", e.ci_low),
                    format!("{:.4}", e.ci_high),
                    e.iterations.to_string(),
                ])
                .map_err(err)?;
            }
        }
        w.flush()?;
        Ok(())
    }
}

/// Settings shared by every cell of a table run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TableSettings {
    pub mode: PlaMode,
    pub epsilon_scale: f64,
    pub generator: GeneratorParams,
}

impl Default for TableSettings {
    fn default() -> Self {
        Self {
            mode: PlaMode::CorrelationRescaled,
            epsilon_scale: 0.0,
            generator: GeneratorParams::default(),
        }
    }
}

pub fn reproduce_table<T: Scalar>(
    table: Table,
    rows: &[RowKey],
    mc: &MonteCarloSpec,
    settings: &TableSettings,
) -> Result<TableResult> {
    let taus = table.taus();
    let rows = rows
        .iter()
        .map(|&key| {
            let spec = ScenarioSpec {
                m_total: key.m,
                scenario: table.scenario(key.size),
                n_sample: key.n,
                tau: taus[0],
                mode: settings.mode,
                epsilon_scale: settings.epsilon_scale,
                generator: settings.generator,
            };
            let estimates = type_one_error_grid::<T>(&spec, &taus, mc)?;
            Ok(TableRow { key, estimates })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(TableResult { table, rows })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn spec(m: usize, scenario: Scenario) -> ScenarioSpec {
        ScenarioSpec::new(m, scenario, 500, 0.5).unwrap()
    }

    #[test]
    fn single_vars_population_layout() {
        let mut s = spec(6, Scenario::SingleVars { k: 2 });
        s.generator = GeneratorParams::plain();
        let pop = generate_population::<f64>(&s, 1).unwrap();
        let c = pop.covariance().entries();
        assert_eq!(pop.planted(), [4, 5]);
        for i in 4..6 {
            for j in 0..6 {
                assert_eq!(c[[i, j]], if i == j { 1.0 } else { 0.0 });
            }
        }
    }

    #[test]
    fn one_block_population_layout() {
        let pop = generate_population::<f64>(&spec(6, Scenario::OneBlock { kappa: 3 }), 2).unwrap();
        let c = pop.covariance().entries();
        for i in 3..6 {
            for j in 0..3 {
                assert_eq!(c[[i, j]], 0.0);
            }
            for j in 3..6 {
                if i != j {
                    assert!(c[[i, j]].abs() >= 0.3);
                }
            }
        }
    }

    #[test]
    fn population_is_psd() {
        for (seed, sc) in [
            (3, Scenario::SingleVars { k: 1 }),
            (4, Scenario::OneBlock { kappa: 2 }),
            (5, Scenario::SingleVars { k: 5 }),
        ] {
            let mut s = spec(12, sc);
            s.epsilon_scale = 0.02;
            let pop = generate_population::<f64>(&s, seed).unwrap();
            let es = symmetric_eigen(pop.covariance().entries()).unwrap();
            assert!(es.eigenvalues().iter().all(|&w| w >= -1e-10));
        }
    }

    #[test]
    fn infeasible_specs() {
        assert!(matches!(
            ScenarioSpec::new(3, Scenario::SingleVars { k: 2 }, 100, 0.5),
            Err(PlaError::Dimension(_))
        ));
        assert!(ScenarioSpec::new(4, Scenario::OneBlock { kappa: 3 }, 100, 0.5).is_err());
        assert!(ScenarioSpec::new(4, Scenario::OneBlock { kappa: 1 }, 100, 0.5).is_err());
        assert!(ScenarioSpec::new(4, Scenario::OneBlock { kappa: 2 }, 100, 0.5).is_ok());
    }

    #[test]
    fn identity_sample_covariance() {
        let cov =
            DispersionMatrix::new(Array2::<f64>::eye(2), DispersionKind::Covariance, None).unwrap();
        let pop = PopulationModel::new(cov, vec![1], Scenario::SingleVars { k: 1 });
        let x = draw_sample(&pop, 100_000, 11).unwrap();
        let c = sample_covariance(&x).unwrap();
        for (i, v) in c.entries().indexed_iter() {
            let target = if i.0 == i.1 { 1.0 } else { 0.0 };
            assert!((v - target).abs() < 0.02, "{i:?}: {v}");
        }
    }

    #[test]
    fn minimal_sample_and_determinism() {
        let cov = DispersionMatrix::new(
            ndarray::array![[1.0f64, 0.5], [0.5, 1.0]],
            DispersionKind::Covariance,
            None,
        )
        .unwrap();
        let pop = PopulationModel::new(cov, vec![1], Scenario::SingleVars { k: 1 });
        let a = draw_sample(&pop, 2, 9).unwrap();
        assert_eq!((a.n_rows(), a.n_cols()), (2, 2));
        let b = draw_sample(&pop, 2, 9).unwrap();
        assert_eq!(
            a.values().iter().map(|v| v.to_bits()).collect::<Vec<_>>(),
            b.values().iter().map(|v| v.to_bits()).collect::<Vec<_>>()
        );
    }

    #[test]
    fn non_psd_population_fails_to_factor() {
        let cov = DispersionMatrix::new(
            ndarray::array![[1.0, 2.0], [2.0, 1.0]],
            DispersionKind::Covariance,
            None,
        )
        .unwrap();
        let pop = PopulationModel::new(cov, vec![1], Scenario::SingleVars { k: 1 });
        assert!(matches!(
            draw_sample(&pop, 5, 1),
            Err(PlaError::Factorization(_))
        ));
    }

    #[test]
    fn cholesky_reconstructs() {
        let a = ndarray::array![[4.0, 2.0, 0.4], [2.0, 5.0, 1.0], [0.4, 1.0, 3.0]];
        let l = cholesky_lower(&a).unwrap();
        let r = l.dot(&l.t());
        for (x, y) in r.iter().zip(a.iter()) {
            assert_abs_diff_eq!(x, y, epsilon = 1e-14);
        }
    }

    #[test]
    fn wilson_bounds() {
        let (lo, hi) = wilson_interval(0, 10);
        assert_eq!(lo, 0.0);
        assert!(hi > 0.0 && hi < 0.35);
        let (lo, hi) = wilson_interval(10, 10);
        assert!(lo > 0.65 && hi > 1.0 - 1e-12 && hi <= 1.0);
        let (lo, hi) = wilson_interval(50, 100);
        assert_abs_diff_eq!(lo, 0.4038, epsilon = 1e-4);
        assert_abs_diff_eq!(hi, 0.5962, epsilon = 1e-4);
    }

    #[test]
    fn seeds_differ_per_iteration() {
        let a: Vec<u64> = (0..100).map(|s| iteration_seed(7, s)).collect();
        let mut b = a.clone();
        b.sort_unstable();
        b.dedup();
        assert_eq!(b.len(), 100);
        assert_ne!(iteration_seed(7, 0), iteration_seed(8, 0));
    }

    #[test]
    fn single_iteration_rate_is_bernoulli() {
        let s = ScenarioSpec::new(8, Scenario::SingleVars { k: 1 }, 200, 0.5).unwrap();
        let e = type_one_error::<f64>(&s, &MonteCarloSpec::new(1, 3).unwrap()).unwrap();
        assert!(e.rate == 0.0 || e.rate == 1.0);
        assert_eq!(e.seeds.len(), 1);
    }

    #[test]
    fn schedule_independent() {
        let s = ScenarioSpec::new(8, Scenario::OneBlock { kappa: 2 }, 300, 0.7).unwrap();
        let mut mc = MonteCarloSpec::new(40, 5).unwrap();
        let a = type_one_error_grid::<f64>(&s, &[0.6, 0.9], &mc).unwrap();
        mc.threads = Some(1);
        let b = type_one_error_grid::<f64>(&s, &[0.6, 0.9], &mc).unwrap();
        assert_eq!(a, b);
        assert_eq!(type_one_error::<f64>(&s, &mc).unwrap().failures, {
            let c = type_one_error_grid::<f64>(&s, &[0.7], &mc).unwrap();
            c[0].failures
        });
    }

    #[test]
    fn recovery_rules() {
        use crate::pla::Block;
        let part = |sets: Vec<Vec<usize>>| BlockPartition::<f64> {
            blocks: sets.into_iter().map(|v| Block::new(v.clone(), v)).collect(),
            residual: vec![],
            unbalanced: vec![],
            tau_used: 0.5,
            mode_used: None,
        };
        let single = Scenario::SingleVars { k: 2 };
        assert!(planted_recovered(
            single,
            &[3, 4],
            &part(vec![vec![0, 1, 2], vec![3], vec![4]])
        ));
        assert!(planted_recovered(
            single,
            &[3, 4],
            &part(vec![vec![0, 1, 2], vec![3, 4]])
        ));
        assert!(!planted_recovered(
            single,
            &[3, 4],
            &part(vec![vec![0, 1, 2, 3], vec![4]])
        ));
        let block = Scenario::OneBlock { kappa: 2 };
        assert!(planted_recovered(block, &[3, 4], &part(vec![vec![3, 4]])));
        assert!(!planted_recovered(
            block,
            &[3, 4],
            &part(vec![vec![3], vec![4]])
        ));
    }

    #[test]
    fn empty_table_has_header_only() {
        let res = reproduce_table::<f64>(
            Table::I,
            &[],
            &MonteCarloSpec::new(1, 0).unwrap(),
            &TableSettings::default(),
        )
        .unwrap();
        let mut out = Vec::new();
        res.write_csv(&mut out).unwrap();
        assert_eq!(
            String::from_utf8(out).unwrap(),
            "M,k_or_kappa,N,tau,rate,ci_low,ci_high,S\n"
        );
    }

    #[test]
    fn full_grids() {
        assert_eq!(Table::I.full_grid().len(), 5 * 10 * 2);
        assert_eq!(
            Table::II.full_grid()[0],
            RowKey {
                m: 20,
                size: 2,
                n: 5000
            }
        );
    }
}
