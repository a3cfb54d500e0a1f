use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::time::Instant;

use pla_core::perturbation::{
    eigengap_bound, measured_perturbation, variance_sensitivity, variance_sensitivity_for,
    PerturbationPair,
};
use pla_core::pla::{discard, run_pla, PlaConfig, PlaInput};
use pla_core::simulate::{
    reproduce_table, type_one_error_grid, GeneratorParams, MonteCarloSpec, RowKey, Scenario,
    ScenarioSpec, Table, TableSettings,
};
use pla_core::{
    eigendecompose, load_csv, CsvOptions, DataMatrix, DispersionKind, DispersionMatrix, PlaError,
};
use serde::Serialize;

use crate::args::{
    AnalyzeArgs, BoundArgs, CsvArgs, DiscardArgs, Format, GeneratorArgs, McArgs, PlaArgs,
    ScenarioArg, SensitivityArgs, SimulateArgs, TableArgs,
};
use crate::output;

pub type CmdResult = std::result::Result<(), CliError>;

#[derive(Debug)]
pub enum CliError {
    Usage(String),
    Core(PlaError),
}

impl From<PlaError> for CliError {
    fn from(e: PlaError) -> Self {
        match e {
            PlaError::Config(msg) => CliError::Usage(msg),
            other => CliError::Core(other),
        }
    }
}

impl From<io::Error> for CliError {
    fn from(e: io::Error) -> Self {
        CliError::Core(PlaError::Io(e))
    }
}

impl From<serde_json::Error> for CliError {
    fn from(e: serde_json::Error) -> Self {
        CliError::Core(PlaError::Io(io::Error::other(e)))
    }
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => 2,
            CliError::Core(e) if e.is_numerical() => 4,
            CliError::Core(_) => 3,
        }
    }

    pub fn code(&self) -> &'static str {
        match self {
            CliError::Usage(_) => "usage",
            CliError::Core(e) => e.code(),
        }
    }

    pub fn message(&self) -> String {
        match self {
            CliError::Usage(m) => m.clone(),
            CliError::Core(e) => e.to_string(),
        }
    }
}

fn usage<T>(msg: impl Into<String>) -> std::result::Result<T, CliError> {
    Err(CliError::Usage(msg.into()))
}

fn sink(out: &Option<PathBuf>) -> io::Result<Box<dyn Write>> {
    Ok(match out {
        Some(p) => Box::new(BufWriter::new(File::create(p)?)),
        None => Box::new(BufWriter::new(io::stdout().lock())),
    })
}

fn write_json<T: Serialize>(out: &Option<PathBuf>, value: &T) -> CmdResult {
    let mut w = sink(out)?;
    serde_json::to_writer_pretty(&mut w, value)?;
    writeln!(w)?;
    w.flush()?;
    Ok(())
}

fn write_text(out: &Option<PathBuf>, text: &str) -> CmdResult {
    let mut w = sink(out)?;
    w.write_all(text.as_bytes())?;
    w.flush()?;
    Ok(())
}

fn csv_options(args: &CsvArgs) -> std::result::Result<CsvOptions, CliError> {
    if !args.delimiter.is_ascii() {
        return usage("delimiter must be a single ASCII character");
    }
    Ok(CsvOptions {
        delimiter: args.delimiter as u8,
        has_header: !args.no_header,
        na_policy: args.na_policy.into(),
    })
}

fn pla_config(args: &PlaArgs) -> std::result::Result<PlaConfig, CliError> {
    let cfg = PlaConfig {
        tau: args.tau,
        mode: args.mode.into(),
        ev_cutoff: args.ev_cutoff,
        ev_formula: args.ev_formula.into(),
        ..PlaConfig::default()
    };
    cfg.validate()?;
    Ok(cfg)
}

/// Square matrix from CSV; the first row is taken as names when it is not
/// numeric.
fn load_matrix(
    path: &Path,
    kind: DispersionKind,
) -> std::result::Result<(DispersionMatrix<f64>, Vec<String>), CliError> {
    let plain = CsvOptions {
        has_header: false,
        ..CsvOptions::default()
    };
    let data: DataMatrix<f64> = match load_csv(path, &plain) {
        Ok(d) => d,
        Err(PlaError::Parse(_)) => load_csv(path, &CsvOptions::default())?,
        Err(e) => return Err(e.into()),
    };
    let (r, c) = (data.n_rows(), data.n_cols());
    if r != c {
        return Err(PlaError::Dimension(format!("matrix file is {r}x{c}, expected square")).into());
    }
    let m = DispersionMatrix::new(data.values().clone(), kind, None)?;
    Ok((m, data.names().to_vec()))
}

pub fn analyze(args: AnalyzeArgs) -> CmdResult {
    let cfg = pla_config(&args.pla)?;
    if args.format == Format::Csv {
        return usage("analyze supports --format json or text");
    }
    let report = if let Some(input) = &args.input {
        let data = load_csv::<f64>(input, &csv_options(&args.csv)?)?;
        run_pla(PlaInput::Data(&data), &cfg)?
    } else {
        let cov_path = args
            .covariance
            .as_ref()
            .expect("clap requires input or covariance");
        let (cov, names) = load_matrix(cov_path, DispersionKind::Covariance)?;
        match &args.correlation {
            Some(p) => {
                let (corr, _) = load_matrix(p, DispersionKind::Correlation)?;
                run_pla(
                    PlaInput::Matrices {
                        covariance: &cov,
                        correlation: &corr,
                        names: Some(&names),
                    },
                    &cfg,
                )?
            }
            None => run_pla(
                PlaInput::Covariance {
                    matrix: &cov,
                    names: Some(&names),
                },
                &cfg,
            )?,
        }
    };
    let summary = report.summary();
    match args.format {
        Format::Json => write_json(&args.out, &summary),
        _ => write_text(&args.out, &output::report_text(&summary)),
    }
}

pub fn discard_cmd(args: DiscardArgs) -> CmdResult {
    let cfg = pla_config(&args.pla)?;
    let opts = csv_options(&args.csv)?;
    let data = load_csv::<f64>(&args.input, &opts)?;
    let report = run_pla(PlaInput::Data(&data), &cfg)?;
    let reduced = discard(&data, &report)?;
    let mut w = sink(&args.out)?;
    reduced.write_csv_to(&mut w, opts.delimiter)?;
    w.flush()?;
    for name in &report.recommendation {
        log::info!("discarded {name}");
    }
    Ok(())
}

pub fn sensitivity(args: SensitivityArgs) -> CmdResult {
    let grid = match &args.increments {
        Some(g) => g.clone(),
        None => {
            if args.steps == 0 || !(args.max_increment.is_finite() && args.max_increment > 0.0) {
                return usage("--steps and --max-increment must be positive");
            }
            (1..=args.steps)
                .map(|i| args.max_increment * i as f64 / args.steps as f64)
                .collect()
        }
    };
    if args.eigenvector == Some(0) {
        return usage("--eigenvector is 1-based");
    }
    let (m, names) = load_matrix(&args.input, DispersionKind::Covariance)?;
    let d = match names.iter().position(|n| *n == args.variable) {
        Some(i) => i,
        None => match args.variable.parse::<usize>() {
            Ok(i) if (1..=names.len()).contains(&i) => i - 1,
            _ => return usage(format!("unknown variable `{}`", args.variable)),
        },
    };
    let profile = match args.eigenvector {
        Some(j) => variance_sensitivity_for(&m, d, j - 1, &grid)?,
        None => variance_sensitivity(&m, d, &grid)?,
    };
    let view = output::SensitivityView::new(&profile, &names);
    match args.format {
        Format::Json => write_json(&args.out, &view),
        Format::Text => write_text(&args.out, &output::sensitivity_text(&view)),
        Format::Csv => usage("sensitivity supports --format json or text"),
    }
}

pub fn bound(args: BoundArgs) -> CmdResult {
    if !(args.tau.is_finite() && args.tau > 0.0) {
        return usage("--tau must be positive");
    }
    let (base, _) = load_matrix(&args.input, args.kind.into())?;
    let delta = {
        let plain = CsvOptions {
            has_header: false,
            ..CsvOptions::default()
        };
        match load_csv::<f64>(&args.delta, &plain) {
            Ok(d) => d,
            Err(PlaError::Parse(_)) => load_csv(&args.delta, &CsvOptions::default())?,
            Err(e) => return Err(e.into()),
        }
    };
    let pair = PerturbationPair::new(base, delta.values().clone())?;
    let es = eigendecompose(pair.base())?;
    let diag = eigengap_bound(&es, &pair, args.tau)?;
    let measured = measured_perturbation(&pair)?;
    let view = output::BoundView::new(&diag, &measured);
    match args.format {
        Format::Json => write_json(&args.out, &view),
        Format::Text => write_text(&args.out, &output::bound_text(&view)),
        Format::Csv => usage("bound supports --format json or text"),
    }
}

fn generator(args: &GeneratorArgs) -> GeneratorParams {
    let mut g = GeneratorParams::default();
    if let Some(r) = args.factor_rank {
        g.factor_rank = r;
    }
    if let Some(n) = args.noise {
        g.noise = n;
    }
    if let Some(v) = args.min_eigengap {
        g.min_eigengap = v;
    }
    if let Some(v) = args.min_planted_correlation {
        g.min_planted_correlation = v;
    }
    g
}

fn monte_carlo(args: &McArgs) -> std::result::Result<MonteCarloSpec, CliError> {
    let mut mc = MonteCarloSpec::new(args.iterations, args.seed)?;
    if let Ok(v) = std::env::var("PLA_THREADS") {
        match v.trim().parse::<usize>() {
            Ok(n) if n > 0 => mc.threads = Some(n),
            _ => return usage(format!("PLA_THREADS must be a positive integer, got `{v}`")),
        }
    }
    Ok(mc)
}

pub fn simulate(args: SimulateArgs) -> CmdResult {
    let scenario = match args.scenario {
        ScenarioArg::SingleVars => Scenario::SingleVars { k: args.k },
        ScenarioArg::OneBlock => Scenario::OneBlock { kappa: args.k },
    };
    let spec = ScenarioSpec {
        m_total: args.m,
        scenario,
        n_sample: args.n,
        tau: args.tau[0],
        mode: args.mode.into(),
        epsilon_scale: args.generator.epsilon_scale,
        generator: generator(&args.generator),
    };
    let mc = monte_carlo(&args.mc)?;
    if let Err(e) = spec.validate() {
        return match e {
            PlaError::Dimension(msg) => usage(msg),
            other => Err(other.into()),
        };
    }
    let estimates = type_one_error_grid::<f64>(&spec, &args.tau, &mc)?;
    let views: Vec<_> = estimates.iter().map(output::EstimateView::from).collect();
    match args.format {
        Format::Json if views.len() == 1 => write_json(&args.out, &views[0]),
        Format::Json => write_json(&args.out, &views),
        Format::Text => write_text(&args.out, &output::estimates_text(&spec, &views)),
        Format::Csv => usage("simulate supports --format json or text"),
    }
}

#[derive(Serialize)]
struct Manifest<'a> {
    table: Table,
    rows: &'a [RowKey],
    taus: [f64; 4],
    monte_carlo: &'a MonteCarloSpec,
    settings: &'a TableSettings,
    master_seed: u64,
    wall_time_seconds: f64,
}

pub fn reproduce(args: TableArgs) -> CmdResult {
    let table: Table = args.table.into();
    let mc = monte_carlo(&args.mc)?;
    let settings = TableSettings {
        mode: args.mode.into(),
        epsilon_scale: args.generator.epsilon_scale,
        generator: generator(&args.generator),
    };
    let pick = |given: &[usize], default: &[usize]| {
        if given.is_empty() {
            default.to_vec()
        } else {
            given.to_vec()
        }
    };
    let sizes: Vec<usize> = table.planted_sizes().collect();
    let rows = Table::grid(
        &pick(&args.m, &Table::M_VALUES),
        &pick(&args.k, &sizes),
        &pick(&args.n, &Table::N_VALUES),
    );
    for key in &rows {
        let spec = ScenarioSpec {
            m_total: key.m,
            scenario: table.scenario(key.size),
            n_sample: key.n,
            tau: table.taus()[0],
            mode: settings.mode,
            epsilon_scale: settings.epsilon_scale,
            generator: settings.generator,
        };
        if let Err(e) = spec.validate() {
            return usage(e.to_string());
        }
    }
    let start = Instant::now();
    let result = reproduce_table::<f64>(table, &rows, &mc, &settings)?;
    let elapsed = start.elapsed().as_secs_f64();
    let w = sink(&args.out)?;
    result.write_csv(w)?;
    if let Some(path) = &args.manifest {
        let manifest = Manifest {
            table,
            rows: &rows,
            taus: table.taus(),
            monte_carlo: &mc,
            settings: &settings,
            master_seed: mc.master_seed,
            wall_time_seconds: elapsed,
        };
        write_json(&Some(path.clone()), &manifest)?;
    }
    Ok(())
}
