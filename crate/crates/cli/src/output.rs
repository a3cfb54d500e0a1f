use std::fmt::Write;

use pla_core::perturbation::{BoundDiagnostic, SensitivityProfile};
use pla_core::pla::ReportSummary;
use pla_core::simulate::{ErrorEstimate, ScenarioSpec};
use serde::Serialize;

/// Left-aligned columns separated by two spaces.
fn table(header: &[&str], rows: &[Vec<String>]) -> String {
    let mut width: Vec<usize> = header.iter().map(|h| h.len()).collect();
    for row in rows {
        for (w, cell) in width.iter_mut().zip(row) {
            *w = (*w).max(cell.len());
        }
    }
    let mut out = String::new();
    let mut line = |cells: Vec<&str>| {
        let s: Vec<String> = cells
            .iter()
            .zip(&width)
            .map(|(c, w)| format!("{c:<w$}"))
            .collect();
        out.push_str(s.join("  ").trim_end());
        out.push('\n');
    };
    line(header.to_vec());
    for row in rows {
        line(row.iter().map(String::as_str).collect());
    }
    out
}

fn fmt_f(v: f64) -> String {
    if v.is_infinite() {
        "inf".into()
    } else {
        format!("{v:.4}")
    }
}

pub fn report_text(r: &ReportSummary) -> String {
    let mut out = String::new();
    writeln!(
        out,
        "mode {}  tau {}  ev_cutoff {}  formula {:?}",
        r.mode, r.tau, r.ev_cutoff, r.ev_formula
    )
    .unwrap();
    out.push('\n');
    let rows: Vec<Vec<String>> = r
        .blocks
        .iter()
        .enumerate()
        .map(|(i, b)| {
            vec![
                (i + 1).to_string(),
                b.variables.join(","),
                b.eigen_indices
                    .iter()
                    .map(ToString::to_string)
                    .collect::<Vec<_>>()
                    .join(","),
                fmt_f(b.ev_exact),
                fmt_f(b.ev_approx),
                if b.discardable { "yes" } else { "no" }.into(),
            ]
        })
        .collect();
    out.push_str(&table(
        &[
            "block",
            "variables",
            "eigenvectors",
            "ev_exact",
            "ev_approx",
            "discard",
        ],
        &rows,
    ));
    if !r.residual.is_empty() {
        writeln!(out, "\nresidual: {}", r.residual.join(", ")).unwrap();
    }
    for w in &r.warnings {
        writeln!(out, "warning: {w}").unwrap();
    }
    writeln!(
        out,
        "\nrecommendation: {}",
        if r.recommendation.is_empty() {
            "keep all variables".to_string()
        } else {
            format!("discard {}", r.recommendation.join(", "))
        }
    )
    .unwrap();
    out
}

#[derive(Debug, Serialize)]
pub struct SensitivityView {
    pub variable: String,
    /// 1-based.
    pub eigenvector: usize,
    pub sign_match: bool,
    pub variables: Vec<String>,
    pub eligible: Vec<bool>,
    pub base_abs: Vec<f64>,
    pub points: Vec<SensitivityPoint>,
}

#[derive(Debug, Serialize)]
pub struct SensitivityPoint {
    pub increment: f64,
    pub tracked: bool,
    pub abs_entries: Option<Vec<f64>>,
    pub differences: Option<Vec<f64>>,
}

impl SensitivityView {
    pub fn new(p: &SensitivityProfile<f64>, names: &[String]) -> Self {
        Self {
            variable: names[p.target_variable].clone(),
            eigenvector: p.delta + 1,
            sign_match: p.sign_match,
            variables: names.to_vec(),
            eligible: p.eligible.clone(),
            base_abs: p.base_abs.clone(),
            points: p
                .increments
                .iter()
                .enumerate()
                .map(|(k, &mu)| SensitivityPoint {
                    increment: mu,
                    tracked: p.abs_entries[k].is_some(),
                    abs_entries: p.abs_entries[k].clone(),
                    differences: p.differences[k].clone(),
                })
                .collect(),
        }
    }
}

pub fn sensitivity_text(v: &SensitivityView) -> String {
    let mut out = String::new();
    writeln!(
        out,
        "variance of {} raised, eigenvector {} probed, sign pattern {}",
        v.variable,
        v.eigenvector,
        if v.sign_match {
            "matches"
        } else {
            "does not match"
        }
    )
    .unwrap();
    out.push('\n');
    let mut header = vec!["increment".to_string()];
    header.extend(v.variables.iter().map(|n| format!("d|{n}|")));
    let rows: Vec<Vec<String>> = v
        .points
        .iter()
        .map(|p| {
            let mut row = vec![format!("{}", p.increment)];
            match &p.differences {
                Some(d) => row.extend(d.iter().map(|x| format!("{x:.3e}"))),
                None => row.extend(v.variables.iter().map(|_| "lost".to_string())),
            }
            row
        })
        .collect();
    let header: Vec<&str> = header.iter().map(String::as_str).collect();
    out.push_str(&table(&header, &rows));
    out
}

#[derive(Debug, Serialize)]
pub struct BoundView {
    pub tau: f64,
    pub frobenius_norm: f64,
    pub eigenvectors: Vec<BoundRow>,
}

#[derive(Debug, Serialize)]
pub struct BoundRow {
    /// 1-based.
    pub index: usize,
    pub eigengap: Option<f64>,
    /// `None` when the bound is infinite.
    pub bound: Option<f64>,
    pub implies_below_tau: bool,
    pub measured: f64,
}

fn finite(v: f64) -> Option<f64> {
    v.is_finite().then_some(v)
}

impl BoundView {
    pub fn new(d: &BoundDiagnostic<f64>, measured: &[f64]) -> Self {
        Self {
            tau: d.tau,
            frobenius_norm: d.frobenius_norm,
            eigenvectors: (0..d.bounds.len())
                .map(|j| BoundRow {
                    index: j + 1,
                    eigengap: finite(d.eigengaps[j]),
                    bound: finite(d.bounds[j]),
                    implies_below_tau: d.implies_below_tau[j],
                    measured: measured[j],
                })
                .collect(),
        }
    }
}

pub fn bound_text(v: &BoundView) -> String {
    let mut out = format!("tau {}  ||delta||_F {:.6}\n\n", v.tau, v.frobenius_norm);
    let rows: Vec<Vec<String>> = v
        .eigenvectors
        .iter()
        .map(|r| {
            vec![
                r.index.to_string(),
                fmt_f(r.eigengap.unwrap_or(f64::INFINITY)),
                fmt_f(r.bound.unwrap_or(f64::INFINITY)),
                if r.implies_below_tau { "yes" } else { "no" }.into(),
                fmt_f(r.measured),
            ]
        })
        .collect();
    out.push_str(&table(
        &["eigenvector", "eigengap", "bound", "below_tau", "measured"],
        &rows,
    ));
    out
}

#[derive(Debug, Serialize)]
pub struct EstimateView {
    pub tau: f64,
    pub failures: usize,
    pub iterations: usize,
    pub rate: f64,
    pub wilson_ci95: [f64; 2],
    pub errors: usize,
    pub seeds: Vec<u64>,
}

impl From<&ErrorEstimate> for EstimateView {
    fn from(e: &ErrorEstimate) -> Self {
        Self {
            tau: e.tau,
            failures: e.failures,
            iterations: e.iterations,
            rate: e.rate,
            wilson_ci95: [e.ci_low, e.ci_high],
            errors: e.errors,
            seeds: e.seeds.clone(),
        }
    }
}

pub fn estimates_text(spec: &ScenarioSpec, views: &[EstimateView]) -> String {
    let mut out = format!(
        "M {}  {}  N {}  mode {}  S {}\n\n",
        spec.m_total,
        spec.scenario,
        spec.n_sample,
        spec.mode,
        views.first().map_or(0, |v| v.iterations)
    );
    let rows: Vec<Vec<String>> = views
        .iter()
        .map(|v| {
            vec![
                v.tau.to_string(),
                format!("{:.4}", v.rate),
                format!("[{:.4}, {:.4}]", v.wilson_ci95[0], v.wilson_ci95[1]),
                v.failures.to_string(),
                v.errors.to_string(),
            ]
        })
        .collect();
    out.push_str(&table(
        &["tau", "rate", "ci95", "failures", "errors"],
        &rows,
    ));
    out
}
