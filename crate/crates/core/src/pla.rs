//! Principal loading analysis: block detection from eigenvector structure,
//! explained-variance contributions and the end-to-end pipeline.
//!
//! Blocks are found as connected components of the bipartite graph that links
//! variable `i` to eigenvector `j` whenever `|loading_ij| > tau`. A component
//! with as many variables as eigenvectors is a block; anything else is
//! reported as residual. Components are independent of variable order, so no
//! permutation of the input is needed.

use std::fmt;
use std::str::FromStr;

use ndarray::{Array2, Axis};
use serde::{Deserialize, Serialize};

use crate::dispersion::{
    argmax_abs, correlation_from_covariance, eigendecompose_with, sample_correlation,
    sample_covariance, DispersionKind, DispersionMatrix, EigenSystem, Tolerances,
};
use crate::error::{PlaError, Result};
use crate::ingest::{generated_names, DataMatrix};
use crate::scalar::Scalar;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum PlaMode {
    Covariance,
    Correlation,
    CovarianceRescaled,
    CorrelationRescaled,
}

impl PlaMode {
    pub const ALL: [PlaMode; 4] = [
        PlaMode::Covariance,
        PlaMode::Correlation,
        PlaMode::CovarianceRescaled,
        PlaMode::CorrelationRescaled,
    ];

    /// Which matrix the block structure is read from.
    pub fn detection_kind(self) -> DispersionKind {
        match self {
            PlaMode::Covariance | PlaMode::CovarianceRescaled => DispersionKind::Covariance,
            PlaMode::Correlation | PlaMode::CorrelationRescaled => DispersionKind::Correlation,
        }
    }

    pub fn rescaled(self) -> bool {
        matches!(
            self,
            PlaMode::CovarianceRescaled | PlaMode::CorrelationRescaled
        )
    }

    pub fn as_str(self) -> &'static str {
        match self {
            PlaMode::Covariance => "covariance",
            PlaMode::Correlation => "correlation",
            PlaMode::CovarianceRescaled => "covariance-rescaled",
            PlaMode::CorrelationRescaled => "correlation-rescaled",
        }
    }
}

impl fmt::Display for PlaMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for PlaMode {
    type Err = PlaError;

    fn from_str(s: &str) -> Result<Self> {
        PlaMode::ALL
            .into_iter()
            .find(|m| m.as_str() == s)
            .ok_or_else(|| PlaError::Config(format!("unknown mode `{s}`")))
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum EvFormula {
    /// Squared-loading weighted share over all eigenvectors.
    #[default]
    Exact,
    /// Eigenvalue share of the block's own eigenvectors.
    Approx,
}

impl FromStr for EvFormula {
    type Err = PlaError;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "exact" => Ok(EvFormula::Exact),
            "approx" => Ok(EvFormula::Approx),
            other => Err(PlaError::Config(format!("unknown ev formula `{other}`"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlaConfig {
    pub tau: f64,
    pub mode: PlaMode,
    /// Blocks whose explained variance is `<= ev_cutoff` are discardable.
    pub ev_cutoff: f64,
    pub ev_formula: EvFormula,
    #[serde(default)]
    pub tolerances: Tolerances,
}

impl Default for PlaConfig {
    fn default() -> Self {
        Self {
            tau: 0.6,
            mode: PlaMode::CorrelationRescaled,
            ev_cutoff: 0.05,
            ev_formula: EvFormula::Exact,
            tolerances: Tolerances::default(),
        }
    }
}

impl PlaConfig {
    pub fn new(mode: PlaMode, tau: f64) -> Result<Self> {
        let cfg = Self {
            mode,
            tau,
            ..Self::default()
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn with_ev_cutoff(mut self, cutoff: f64) -> Result<Self> {
        self.ev_cutoff = cutoff;
        self.validate()?;
        Ok(self)
    }

    pub fn validate(&self) -> Result<()> {
        check_tau(self.tau)?;
        if !(0.0..1.0).contains(&self.ev_cutoff) {
            return Err(PlaError::Config(format!(
                "ev_cutoff must lie in [0, 1), got {}",
                self.ev_cutoff
            )));
        }
        Ok(())
    }
}

fn check_tau(tau: f64) -> Result<()> {
    if tau > 0.0 && tau < 1.0 {
        Ok(())
    } else {
        Err(PlaError::Config(format!(
            "tau must lie in (0, 1), got {tau}"
        )))
    }
}

/// Square matrix whose column `j` holds the loadings of eigenvector `j`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LoadingMatrix<T>(Array2<T>);

impl<T: Scalar> LoadingMatrix<T> {
    pub fn new(loadings: Array2<T>) -> Result<Self> {
        if loadings.nrows() != loadings.ncols() || loadings.is_empty() {
            return Err(PlaError::Dimension("loading matrix must be square".into()));
        }
        Ok(Self(loadings))
    }

    /// The raw (unit-norm) eigenvectors.
    pub fn from_eigensystem(es: &EigenSystem<T>) -> Self {
        Self(es.eigenvectors().clone())
    }

    pub fn as_array(&self) -> &Array2<T> {
        &self.0
    }

    pub fn dim(&self) -> usize {
        self.0.nrows()
    }
}

/// Divide every eigenvector by its largest-magnitude entry, so that entry
/// becomes exactly 1.
pub fn rescale_eigenvectors<T: Scalar>(es: &EigenSystem<T>) -> Result<LoadingMatrix<T>> {
    let mut loadings = es.eigenvectors().clone();
    for (j, mut col) in loadings.axis_iter_mut(Axis(1)).enumerate() {
        let pivot = col[argmax_abs(col.view())];
        if pivot == T::zero() {
            return Err(PlaError::Numerical(format!(
                "eigenvector {} is identically zero",
                j + 1
            )));
        }
        col.mapv_inplace(|x| x / pivot);
    }
    Ok(LoadingMatrix(loadings))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Block<T> {
    /// Variable indices (0-based, ascending).
    pub variables: Vec<usize>,
    /// Eigenvectors of the detection matrix linked to the variables.
    pub eigen_indices: Vec<usize>,
    /// Covariance eigenvectors used for the explained variance. Same as
    /// `eigen_indices` when detection ran on the covariance matrix.
    pub ev_eigen_indices: Vec<usize>,
    pub ev_exact: Option<T>,
    pub ev_approx: Option<T>,
    pub discardable: bool,
}

impl<T> Block<T> {
    pub fn new(variables: Vec<usize>, eigen_indices: Vec<usize>) -> Self {
        Self {
            ev_eigen_indices: eigen_indices.clone(),
            variables,
            eigen_indices,
            ev_exact: None,
            ev_approx: None,
            discardable: false,
        }
    }

    pub fn size(&self) -> usize {
        self.variables.len()
    }
}

/// A connected component whose variable and eigenvector counts differ.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct UnbalancedComponent {
    pub variables: Vec<usize>,
    pub eigen_indices: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BlockPartition<T> {
    /// Ordered by smallest eigenvector index.
    pub blocks: Vec<Block<T>>,
    /// Variables that ended up in no block.
    pub residual: Vec<usize>,
    pub unbalanced: Vec<UnbalancedComponent>,
    pub tau_used: f64,
    pub mode_used: Option<PlaMode>,
}

impl<T> BlockPartition<T> {
    /// `(variables, eigen_indices)` per block, independent of EV values.
    pub fn structure(&self) -> Vec<(Vec<usize>, Vec<usize>)> {
        self.blocks
            .iter()
            .map(|b| (b.variables.clone(), b.eigen_indices.clone()))
            .collect()
    }

    /// Variable sets only, sorted.
    pub fn variable_sets(&self) -> Vec<Vec<usize>> {
        let mut sets: Vec<_> = self.blocks.iter().map(|b| b.variables.clone()).collect();
        sets.sort();
        sets
    }

    pub fn block_of(&self, variable: usize) -> Option<&Block<T>> {
        self.blocks.iter().find(|b| b.variables.contains(&variable))
    }
}

struct DisjointSet {
    parent: Vec<usize>,
}

impl DisjointSet {
    fn new(n: usize) -> Self {
        Self {
            parent: (0..n).collect(),
        }
    }

    fn find(&mut self, mut x: usize) -> usize {
        while self.parent[x] != x {
            self.parent[x] = self.parent[self.parent[x]];
            x = self.parent[x];
        }
        x
    }

    fn union(&mut self, a: usize, b: usize) {
        let (ra, rb) = (self.find(a), self.find(b));
        if ra != rb {
            // Smaller root wins so labels do not depend on edge order.
            let (lo, hi) = if ra < rb { (ra, rb) } else { (rb, ra) };
            self.parent[hi] = lo;
        }
    }
}

/// Find blocks of variables co-supported with an equal number of
/// eigenvectors. An edge exists iff `|loading| > tau` (entries equal to tau
/// count as small).
pub fn detect_blocks<T: Scalar>(
    loadings: &LoadingMatrix<T>,
    tau: f64,
) -> Result<BlockPartition<T>> {
    check_tau(tau)?;
    let m = loadings.dim();
    let l = loadings.as_array();
    let tau_t = T::lit(tau);

    // Nodes 0..m are variables, m..2m eigenvectors.
    let mut dsu = DisjointSet::new(2 * m);
    for ((i, j), v) in l.indexed_iter() {
        if v.abs() > tau_t {
            dsu.union(i, m + j);
        }
    }

    let mut components: Vec<(Vec<usize>, Vec<usize>)> = vec![(Vec::new(), Vec::new()); 2 * m];
    for i in 0..m {
        let r = dsu.find(i);
        components[r].0.push(i);
    }
    for j in 0..m {
        let r = dsu.find(m + j);
        components[r].1.push(j);
    }

    let mut blocks = Vec::new();
    let mut residual = Vec::new();
    let mut unbalanced = Vec::new();
    for (vars, eigs) in components {
        if vars.is_empty() && eigs.is_empty() {
            continue;
        }
        if !vars.is_empty() && vars.len() == eigs.len() {
            blocks.push(Block::new(vars, eigs));
        } else {
            residual.extend_from_slice(&vars);
            unbalanced.push(UnbalancedComponent {
                variables: vars,
                eigen_indices: eigs,
            });
        }
    }
    blocks.sort_by_key(|b| b.eigen_indices[0]);
    residual.sort_unstable();
    unbalanced.sort_by_key(|c| {
        (
            c.variables.first().copied(),
            c.eigen_indices.first().copied(),
        )
    });

    Ok(BlockPartition {
        blocks,
        residual,
        unbalanced,
        tau_used: tau,
        mode_used: None,
    })
}

fn covariance_total<T: Scalar>(cov_es: &EigenSystem<T>) -> Result<T> {
    if cov_es.kind() == Some(DispersionKind::Correlation) {
        return Err(PlaError::Consistency(
            "explained variance needs the covariance eigensystem".into(),
        ));
    }
    let total = cov_es.trace();
    if total <= T::zero() {
        return Err(PlaError::ZeroTrace);
    }
    Ok(total)
}

fn check_indices(indices: &[usize], m: usize, what: &str) -> Result<()> {
    match indices.iter().find(|&&i| i >= m) {
        Some(i) => Err(PlaError::Consistency(format!(
            "{what} index {i} out of range for dimension {m}"
        ))),
        None => Ok(()),
    }
}

/// `sum_j lambda_j sum_{d in D} (v_j^(d))^2 / sum_j lambda_j`, summing over
/// every eigenvector (the block's own and the rest).
pub fn explained_variance_exact<T: Scalar>(block: &Block<T>, cov_es: &EigenSystem<T>) -> Result<T> {
    let total = covariance_total(cov_es)?;
    check_indices(&block.variables, cov_es.dim(), "variable")?;
    let v = cov_es.eigenvectors();
    let share: T = cov_es
        .eigenvalues()
        .iter()
        .enumerate()
        .map(|(j, &lambda)| {
            let mass: T = block.variables.iter().map(|&d| v[[d, j]] * v[[d, j]]).sum();
            lambda * mass
        })
        .sum();
    Ok(share / total)
}

/// `sum_{delta in block} lambda_delta / sum_j lambda_j`, using
/// `block.ev_eigen_indices`.
pub fn explained_variance_approx<T: Scalar>(
    block: &Block<T>,
    cov_es: &EigenSystem<T>,
) -> Result<T> {
    let total = covariance_total(cov_es)?;
    check_indices(&block.ev_eigen_indices, cov_es.dim(), "eigenvector")?;
    let w = cov_es.eigenvalues();
    let share: T = block.ev_eigen_indices.iter().map(|&j| w[j]).sum();
    Ok(share / total)
}

/// Assign covariance eigenvectors to blocks found on another matrix: each
/// block receives as many eigenvectors as it has variables, greedily by the
/// squared-loading mass the eigenvector puts on the block's variables.
pub fn match_covariance_eigenvectors<T: Scalar>(
    partition: &mut BlockPartition<T>,
    cov_es: &EigenSystem<T>,
) {
    let v = cov_es.eigenvectors();
    let m = cov_es.dim();
    let mut candidates: Vec<(T, usize, usize)> = Vec::with_capacity(partition.blocks.len() * m);
    for (b, block) in partition.blocks.iter().enumerate() {
        for j in 0..m {
            let mass: T = block.variables.iter().map(|&d| v[[d, j]] * v[[d, j]]).sum();
            candidates.push((mass, b, j));
        }
    }
    candidates.sort_by(|x, y| {
        y.0.partial_cmp(&x.0)
            .unwrap_or(std::cmp::Ordering::Equal)
            .then(x.2.cmp(&y.2))
            .then(x.1.cmp(&y.1))
    });
    let mut taken = vec![false; m];
    let mut assigned: Vec<Vec<usize>> = vec![Vec::new(); partition.blocks.len()];
    for (_, b, j) in candidates {
        if taken[j] || assigned[b].len() >= partition.blocks[b].size() {
            continue;
        }
        taken[j] = true;
        assigned[b].push(j);
    }
    for (block, mut idx) in partition.blocks.iter_mut().zip(assigned) {
        idx.sort_unstable();
        block.ev_eigen_indices = idx;
    }
}

/// What `run_pla` analyses.
#[derive(Debug, Clone, Copy)]
pub enum PlaInput<'a, T> {
    Data(&'a DataMatrix<T>),
    Covariance {
        matrix: &'a DispersionMatrix<T>,
        names: Option<&'a [String]>,
    },
    Matrices {
        covariance: &'a DispersionMatrix<T>,
        correlation: &'a DispersionMatrix<T>,
        names: Option<&'a [String]>,
    },
}

impl<'a, T> From<&'a DataMatrix<T>> for PlaInput<'a, T> {
    fn from(d: &'a DataMatrix<T>) -> Self {
        PlaInput::Data(d)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum Warning {
    /// Adjacent eigenvalues closer than the degeneracy tolerance; eigenvectors
    /// inside such a pair are not uniquely determined.
    DegenerateEigenvalues {
        matrix: DispersionKind,
        pairs: Vec<(usize, usize)>,
    },
    ZeroEigenvalues {
        matrix: DispersionKind,
        count: usize,
    },
    ResidualVariables {
        variables: Vec<String>,
    },
    UnbalancedComponent {
        variables: Vec<String>,
        eigen_indices: Vec<usize>,
    },
}

impl fmt::Display for Warning {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Warning::DegenerateEigenvalues { matrix, pairs } => {
                let p: Vec<String> = pairs
                    .iter()
                    .map(|(a, b)| format!("{}~{}", a + 1, b + 1))
                    .collect();
                write!(f, "near-degenerate {matrix} eigenvalues: {}", p.join(", "))
            }
            Warning::ZeroEigenvalues { matrix, count } => {
                write!(f, "{count} zero {matrix} eigenvalue(s)")
            }
            Warning::ResidualVariables { variables } => {
                write!(f, "variables in no block: {}", variables.join(", "))
            }
            Warning::UnbalancedComponent {
                variables,
                eigen_indices,
            } => {
                let e: Vec<String> = eigen_indices.iter().map(|j| (j + 1).to_string()).collect();
                write!(
                    f,
                    "unbalanced component: {} variable(s) [{}] vs {} eigenvector(s) [{}]",
                    variables.len(),
                    variables.join(", "),
                    eigen_indices.len(),
                    e.join(", ")
                )
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlaReport<T> {
    pub config: PlaConfig,
    pub variable_names: Vec<String>,
    pub partition: BlockPartition<T>,
    pub covariance_eigenvalues: Vec<T>,
    pub correlation_eigenvalues: Option<Vec<T>>,
    pub warnings: Vec<Warning>,
    /// Names of the variables in discardable blocks.
    pub recommendation: Vec<String>,
}

/// Flat, stable serialization of a report.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportSummary {
    pub mode: PlaMode,
    pub tau: f64,
    pub ev_cutoff: f64,
    pub ev_formula: EvFormula,
    pub blocks: Vec<BlockSummary>,
    pub residual: Vec<String>,
    pub warnings: Vec<String>,
    pub recommendation: Vec<String>,
    pub covariance_eigenvalues: Vec<f64>,
    pub correlation_eigenvalues: Option<Vec<f64>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BlockSummary {
    pub variables: Vec<String>,
    /// 1-based positions in descending eigenvalue order.
    pub eigen_indices: Vec<usize>,
    pub ev_exact: f64,
    pub ev_approx: f64,
    pub discardable: bool,
}

impl<T: Scalar> PlaReport<T> {
    pub fn summary(&self) -> ReportSummary {
        let name = |i: &usize| self.variable_names[*i].clone();
        ReportSummary {
            mode: self.config.mode,
            tau: self.config.tau,
            ev_cutoff: self.config.ev_cutoff,
            ev_formula: self.config.ev_formula,
            blocks: self
                .partition
                .blocks
                .iter()
                .map(|b| BlockSummary {
                    variables: b.variables.iter().map(name).collect(),
                    eigen_indices: b.eigen_indices.iter().map(|j| j + 1).collect(),
                    ev_exact: b.ev_exact.map_or(f64::NAN, Scalar::as_f64),
                    ev_approx: b.ev_approx.map_or(f64::NAN, Scalar::as_f64),
                    discardable: b.discardable,
                })
                .collect(),
            residual: self.partition.residual.iter().map(name).collect(),
            warnings: self.warnings.iter().map(ToString::to_string).collect(),
            recommendation: self.recommendation.clone(),
            covariance_eigenvalues: self
                .covariance_eigenvalues
                .iter()
                .map(|v| v.as_f64())
                .collect(),
            correlation_eigenvalues: self
                .correlation_eigenvalues
                .as_ref()
                .map(|w| w.iter().map(|v| v.as_f64()).collect()),
        }
    }
}

fn spectrum_warnings<T: Scalar>(
    es: &EigenSystem<T>,
    kind: DispersionKind,
    tol: &Tolerances,
    warnings: &mut Vec<Warning>,
) {
    let pairs = es.near_degenerate_pairs(tol.degenerate);
    if !pairs.is_empty() {
        warnings.push(Warning::DegenerateEigenvalues {
            matrix: kind,
            pairs,
        });
    }
    let zeros = es.eigenvalues().iter().filter(|&&w| w == T::zero()).count();
    if zeros > 0 {
        warnings.push(Warning::ZeroEigenvalues {
            matrix: kind,
            count: zeros,
        });
    }
}

/// Run the full pipeline: estimate, decompose, (rescale), detect, score, flag.
pub fn run_pla<T: Scalar>(input: PlaInput<'_, T>, config: &PlaConfig) -> Result<PlaReport<T>> {
    config.validate()?;
    let tol = &config.tolerances;
    let detection = config.mode.detection_kind();

    let (covariance, correlation, names): (
        DispersionMatrix<T>,
        Option<DispersionMatrix<T>>,
        Vec<String>,
    ) = match input {
        PlaInput::Data(data) => {
            let cov = sample_covariance(data)?;
            let corr = match detection {
                DispersionKind::Correlation => Some(sample_correlation(data)?),
                DispersionKind::Covariance => sample_correlation(data).ok(),
            };
            (cov, corr, data.names().to_vec())
        }
        PlaInput::Covariance { matrix, names } => {
            if matrix.kind() != DispersionKind::Covariance {
                return Err(PlaError::InsufficientInput(
                    "a covariance matrix is required to compute explained variance".into(),
                ));
            }
            if detection == DispersionKind::Correlation {
                return Err(PlaError::InsufficientInput(format!(
                    "mode {} needs data or both covariance and correlation matrices",
                    config.mode
                )));
            }
            let corr = correlation_from_covariance(matrix).ok();
            let names = names.map_or_else(|| generated_names(matrix.dim()), <[String]>::to_vec);
            (matrix.clone(), corr, names)
        }
        PlaInput::Matrices {
            covariance,
            correlation,
            names,
        } => {
            if covariance.kind() != DispersionKind::Covariance
                || correlation.kind() != DispersionKind::Correlation
            {
                return Err(PlaError::Consistency(
                    "expected one covariance and one correlation matrix".into(),
                ));
            }
            if covariance.dim() != correlation.dim() {
                return Err(PlaError::Consistency(
                    "covariance and correlation dimensions differ".into(),
                ));
            }
            let names = names.map_or_else(|| generated_names(covariance.dim()), <[String]>::to_vec);
            (covariance.clone(), Some(correlation.clone()), names)
        }
    };
    if names.len() != covariance.dim() {
        return Err(PlaError::Consistency(format!(
            "{} names for {} variables",
            names.len(),
            covariance.dim()
        )));
    }

    let cov_es = eigendecompose_with(&covariance, tol)?;
    let corr_es = correlation
        .as_ref()
        .map(|c| eigendecompose_with(c, tol))
        .transpose()?;

    let mut warnings = Vec::new();
    spectrum_warnings(&cov_es, DispersionKind::Covariance, tol, &mut warnings);

    let detect_es = match detection {
        DispersionKind::Covariance => &cov_es,
        DispersionKind::Correlation => {
            let es = corr_es
                .as_ref()
                .expect("correlation present in correlation modes");
            spectrum_warnings(es, DispersionKind::Correlation, tol, &mut warnings);
            es
        }
    };

    let loadings = if config.mode.rescaled() {
        rescale_eigenvectors(detect_es)?
    } else {
        LoadingMatrix::from_eigensystem(detect_es)
    };
    let mut partition = detect_blocks(&loadings, config.tau)?;
    partition.mode_used = Some(config.mode);
    if detection == DispersionKind::Correlation {
        match_covariance_eigenvectors(&mut partition, &cov_es);
    }

    let cutoff = T::lit(config.ev_cutoff);
    for block in &mut partition.blocks {
        let exact = explained_variance_exact(block, &cov_es)?;
        let approx = explained_variance_approx(block, &cov_es)?;
        let chosen = match config.ev_formula {
            EvFormula::Exact => exact,
            EvFormula::Approx => approx,
        };
        block.ev_exact = Some(exact);
        block.ev_approx = Some(approx);
        block.discardable = chosen <= cutoff;
    }

    for c in &partition.unbalanced {
        if c.variables.is_empty() {
            continue;
        }
        warnings.push(Warning::UnbalancedComponent {
            variables: c.variables.iter().map(|&i| names[i].clone()).collect(),
            eigen_indices: c.eigen_indices.clone(),
        });
    }
    if !partition.residual.is_empty() {
        warnings.push(Warning::ResidualVariables {
            variables: partition
                .residual
                .iter()
                .map(|&i| names[i].clone())
                .collect(),
        });
    }

    let mut recommended: Vec<usize> = partition
        .blocks
        .iter()
        .filter(|b| b.discardable)
        .flat_map(|b| b.variables.iter().copied())
        .collect();
    recommended.sort_unstable();
    let recommendation = recommended.iter().map(|&i| names[i].clone()).collect();

    Ok(PlaReport {
        config: config.clone(),
        variable_names: names,
        partition,
        covariance_eigenvalues: cov_es.eigenvalues().to_vec(),
        correlation_eigenvalues: corr_es.map(|es| es.eigenvalues().to_vec()),
        warnings,
        recommendation,
    })
}

/// Drop the recommended variables, keeping column order.
pub fn discard<T: Scalar>(data: &DataMatrix<T>, report: &PlaReport<T>) -> Result<DataMatrix<T>> {
    if data.names() != report.variable_names.as_slice() {
        return Err(PlaError::Consistency(
            "report was produced for a different set of variables".into(),
        ));
    }
    let keep: Vec<usize> = (0..data.n_cols())
        .filter(|&j| !report.recommendation.contains(&data.names()[j]))
        .collect();
    if keep.len() == data.n_cols() {
        return Ok(data.clone());
    }
    if keep.len() < 2 {
        return Err(PlaError::Dimension(format!(
            "discarding {} of {} variables would leave fewer than 2",
            data.n_cols() - keep.len(),
            data.n_cols()
        )));
    }
    data.select_columns(&keep)
}
