//! Experiment runner behind the `qcs` binary.
//!
//! A run is described by an [`ExperimentConfig`], assembled from an optional
//! TOML file and command-line flags (flags win). [`run`] executes it and
//! returns the report text plus a one-line summary.

use std::f64::consts::PI;
use std::fmt;
use std::path::{Path, PathBuf};

use clap::{Parser, ValueEnum};
use serde::{Deserialize, Serialize};

use crate::dynamics::{apply_phase_generator, PhaseVector};
use crate::error::Error;
use crate::estimation::{monte_carlo_deviation, MonteCarloResult, Probe};
use crate::fock::{prepare_average_state, prepare_noon, prepare_w, FockState, PhysicalParams};
use crate::metrology::{
    average_qfi, crb, mt_average_bound, noon_qfi, qfi_generator, qfi_pure_numeric, ren2012_reference, PhaseFamily,
    DEFAULT_STEP,
};
use crate::oracle::oracle_operation_protocol;
use crate::protocols::{
    closed_form_final, run_operation_triggered, run_w_protocol_sampled, w_conditional_probability, ClockTopology,
    ProtocolEvent,
};
use crate::report::{fit_slope, format_sig, to_csv, ReportRow, REPORT_DIGITS};

pub const EXIT_OK: i32 = 0;
pub const EXIT_CONFIG: i32 = 2;
pub const EXIT_INVARIANT: i32 = 3;

/// Fidelity below `1 − FIDELITY_TOLERANCE` counts as a mismatch.
pub const FIDELITY_TOLERANCE: f64 = 1e-10;
/// Allowed relative gap between numeric and closed-form QFI.
pub const QFI_TOLERANCE: f64 = 1e-6;

const DEFAULT_MC_THETA: f64 = 0.01;

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Experiment {
    Qfi,
    Protocol,
    Wstate,
    Montecarlo,
    Sweep,
    CompareAverage,
    OracleCheck,
}

impl Experiment {
    pub fn as_str(&self) -> &'static str {
        match self {
            Experiment::Qfi => "qfi",
            Experiment::Protocol => "protocol",
            Experiment::Wstate => "wstate",
            Experiment::Montecarlo => "montecarlo",
            Experiment::Sweep => "sweep",
            Experiment::CompareAverage => "compare-average",
            Experiment::OracleCheck => "oracle-check",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ProbeKind {
    Noon,
    Average,
    W,
}

impl ProbeKind {
    pub fn as_str(&self) -> &'static str {
        match self {
            ProbeKind::Noon => "noon",
            ProbeKind::Average => "average",
            ProbeKind::W => "w",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Csv,
    Json,
}

#[derive(Debug, Clone, PartialEq)]
pub enum CliError {
    /// Bad or inconsistent configuration; exit code 2.
    Config(String),
    /// An internal cross-check failed; exit code 3.
    Invariant(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => EXIT_CONFIG,
            CliError::Invariant(_) => EXIT_INVARIANT,
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Config(m) => write!(f, "configuration error: {m}"),
            CliError::Invariant(m) => write!(f, "invariant violation: {m}"),
        }
    }
}

impl std::error::Error for CliError {}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        CliError::Config(e.to_string())
    }
}

#[derive(Debug, Parser)]
#[command(name = "qcs", version, about = "Quantum clock synchronization experiments")]
pub struct Args {
    /// Experiment to run.
    #[arg(value_enum)]
    pub experiment: Experiment,
    #[arg(long, value_enum)]
    pub probe: Option<ProbeKind>,
    /// Number of peripheral nodes; comma-separated list for sweeps.
    #[arg(long, value_delimiter = ',')]
    pub d: Option<Vec<usize>>,
    /// Qubits per peripheral node; comma-separated list for sweeps.
    #[arg(long, value_delimiter = ',')]
    pub n: Option<Vec<usize>>,
    #[arg(long)]
    pub omega: Option<f64>,
    /// Clock offsets, comma-separated.
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    pub theta: Option<Vec<f64>>,
    #[arg(long)]
    pub shots: Option<u64>,
    #[arg(long)]
    pub trials: Option<usize>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Report file; standard output when absent.
    #[arg(long)]
    pub output: Option<PathBuf>,
    #[arg(long, value_enum)]
    pub format: Option<Format>,
    /// TOML file with ExperimentConfig keys.
    #[arg(long)]
    pub config: Option<PathBuf>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(untagged)]
enum OneOrMany<T> {
    One(T),
    Many(Vec<T>),
}

impl<T> From<OneOrMany<T>> for Vec<T> {
    fn from(v: OneOrMany<T>) -> Self {
        match v {
            OneOrMany::One(x) => vec![x],
            OneOrMany::Many(xs) => xs,
        }
    }
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct ConfigFile {
    experiment: Option<Experiment>,
    probe: Option<ProbeKind>,
    d: Option<OneOrMany<usize>>,
    n: Option<OneOrMany<usize>>,
    shots: Option<u64>,
    trials: Option<usize>,
    omega: Option<f64>,
    thetas: Option<OneOrMany<f64>>,
    seed: Option<u64>,
    output: Option<PathBuf>,
    format: Option<Format>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ExperimentConfig {
    pub experiment: Experiment,
    pub probe: ProbeKind,
    pub d: Vec<usize>,
    pub n: Vec<usize>,
    pub shots: u64,
    pub trials: usize,
    pub omega: f64,
    pub thetas: Vec<f64>,
    pub seed: u64,
    pub output: Option<PathBuf>,
    pub format: Format,
}

impl ExperimentConfig {
    pub fn new(experiment: Experiment) -> Self {
        Self {
            experiment,
            probe: ProbeKind::Noon,
            d: vec![1],
            n: vec![1],
            shots: 1000,
            trials: 200,
            omega: 1.0,
            thetas: Vec::new(),
            seed: 1,
            output: None,
            format: Format::Csv,
        }
    }

    /// Config file keys first, then command-line flags on top.
    pub fn from_args(args: &Args) -> Result<Self, CliError> {
        let file = match &args.config {
            Some(path) => load_config_file(path)?,
            None => ConfigFile::default(),
        };
        if let Some(e) = file.experiment {
            if e != args.experiment {
                return Err(CliError::Config(format!(
                    "config file is for experiment '{}' but '{}' was requested",
                    e.as_str(),
                    args.experiment.as_str()
                )));
            }
        }
        let mut cfg = Self::new(args.experiment);
        cfg.probe = args.probe.or(file.probe).unwrap_or(cfg.probe);
        cfg.d = args.d.clone().or(file.d.map(Into::into)).unwrap_or(cfg.d);
        cfg.n = args.n.clone().or(file.n.map(Into::into)).unwrap_or(cfg.n);
        cfg.shots = args.shots.or(file.shots).unwrap_or(cfg.shots);
        cfg.trials = args.trials.or(file.trials).unwrap_or(cfg.trials);
        cfg.omega = args.omega.or(file.omega).unwrap_or(cfg.omega);
        cfg.thetas = args.theta.clone().or(file.thetas.map(Into::into)).unwrap_or_default();
        cfg.seed = args.seed.or(file.seed).unwrap_or(cfg.seed);
        cfg.output = args.output.clone().or(file.output);
        cfg.format = args.format.or(file.format).unwrap_or(cfg.format);
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<(), CliError> {
        let bad = |m: String| Err(CliError::Config(m));
        if self.d.is_empty() || self.n.is_empty() {
            return bad("d and n need at least one value".into());
        }
        if self.d.iter().chain(&self.n).any(|&v| v == 0) {
            return bad("d and n must be >= 1".into());
        }
        if self.shots == 0 || self.trials == 0 {
            return bad("shots and trials must be >= 1".into());
        }
        if !(self.omega.is_finite() && self.omega > 0.0) {
            return bad(format!("omega must be positive, got {}", self.omega));
        }
        if self.thetas.iter().any(|t| !t.is_finite()) {
            return bad("offsets must be finite".into());
        }
        let multi = self.d.len() > 1 || self.n.len() > 1;
        let lists_allowed = matches!(
            self.experiment,
            Experiment::Sweep | Experiment::CompareAverage | Experiment::OracleCheck
        );
        if multi && !lists_allowed {
            return bad(format!("{} takes a single d and n", self.experiment.as_str()));
        }
        let fixed_probe = matches!(self.experiment, Experiment::CompareAverage | Experiment::Wstate);
        if !fixed_probe && self.probe == ProbeKind::Noon && self.d.iter().any(|&d| d != 1) {
            return bad("the NOON probe has a single peripheral node (d = 1)".into());
        }
        match self.experiment {
            Experiment::Montecarlo | Experiment::Sweep => {
                if self.probe == ProbeKind::W {
                    return bad("Monte-Carlo estimation supports the noon and average probes".into());
                }
                if self.thetas.len() > 1 {
                    return bad("Monte-Carlo estimation takes a single offset".into());
                }
            }
            Experiment::Protocol | Experiment::Wstate | Experiment::OracleCheck => {
                for &d in &self.d {
                    if !self.thetas.is_empty() && self.thetas.len() != 1 && self.thetas.len() != d {
                        return bad(format!("{} offsets given for d = {d}", self.thetas.len()));
                    }
                }
            }
            Experiment::Qfi | Experiment::CompareAverage => {}
        }
        Ok(())
    }

    fn params(&self) -> PhysicalParams {
        PhysicalParams::new(self.omega).expect("validated omega")
    }

    fn offsets_for(&self, d: usize, default: impl Fn(usize) -> f64) -> PhaseVector {
        let v = match self.thetas.len() {
            0 => (1..=d).map(default).collect(),
            1 => vec![self.thetas[0]; d],
            _ => self.thetas.clone(),
        };
        PhaseVector::new(v).expect("validated offsets")
    }
}

fn load_config_file(path: &Path) -> Result<ConfigFile, CliError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::Config(format!("cannot read {}: {e}", path.display())))?;
    toml::from_str(&text).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))
}

/// Report text and the one-line summary for standard output.
#[derive(Debug, Clone, PartialEq)]
pub struct Outcome {
    pub report: String,
    pub summary: String,
}

#[derive(Serialize)]
struct JsonReport<'a, R: Serialize> {
    experiment: &'a str,
    config: &'a ExperimentConfig,
    rows: &'a [ReportRow],
    #[serde(skip_serializing_if = "Option::is_none")]
    result: Option<R>,
}

fn render<R: Serialize>(cfg: &ExperimentConfig, rows: &[ReportRow], result: Option<R>) -> String {
    match cfg.format {
        Format::Csv => to_csv(rows),
        Format::Json => {
            let report = JsonReport {
                experiment: cfg.experiment.as_str(),
                config: cfg,
                rows,
                result,
            };
            let mut s = serde_json::to_string_pretty(&report).expect("report serializes");
            s.push('\n');
            s
        }
    }
}

fn g(x: f64) -> String {
    format_sig(x, REPORT_DIGITS)
}

fn probe_state(kind: ProbeKind, d: usize, n: usize) -> Result<FockState, CliError> {
    Ok(match kind {
        ProbeKind::Noon => prepare_noon(n)?,
        ProbeKind::Average => prepare_average_state(d, n)?,
        ProbeKind::W => prepare_w(d)?,
    })
}

/// Number of qubits and the `n` reported for a probe.
fn probe_shape(kind: ProbeKind, d: usize, n: usize) -> (usize, usize) {
    match kind {
        ProbeKind::Noon => (n, 2 * n),
        ProbeKind::Average => (n, 2 * d * n),
        ProbeKind::W => (1, d + 1),
    }
}

fn base_row(cfg: &ExperimentConfig, kind: ProbeKind, d: usize, n: usize) -> ReportRow {
    let (n, total) = probe_shape(kind, d, n);
    let mut row = ReportRow::new(cfg.experiment.as_str());
    row.probe = Some(kind.as_str().into());
    row.d = Some(d);
    row.n = Some(n);
    row.total_qubits = Some(total);
    row.omega = Some(cfg.omega);
    row
}

pub fn run(cfg: &ExperimentConfig) -> Result<Outcome, CliError> {
    cfg.validate()?;
    match cfg.experiment {
        Experiment::Qfi => run_qfi(cfg),
        Experiment::Protocol => run_protocol(cfg),
        Experiment::Wstate => run_wstate(cfg),
        Experiment::Montecarlo => run_montecarlo(cfg),
        Experiment::Sweep => run_sweep(cfg),
        Experiment::CompareAverage => compare_average(cfg),
        Experiment::OracleCheck => run_oracle_check(cfg),
    }
}

fn run_qfi(cfg: &ExperimentConfig) -> Result<Outcome, CliError> {
    let params = cfg.params();
    let (d, n) = (cfg.d[0], cfg.n[0]);
    let theta = cfg.thetas.first().copied().unwrap_or(0.0);
    let (exact, family) = match cfg.probe {
        ProbeKind::Noon => (noon_qfi(n, &params)?, PhaseFamily::noon(n, params)?),
        ProbeKind::Average => (average_qfi(d, n, &params)?, PhaseFamily::average(d, n, params)?),
        ProbeKind::W => {
            // offset on node 1 only
            let w = prepare_w(d)?;
            let mut weights = vec![0.0; d + 1];
            weights[1] = 1.0;
            let exact = qfi_generator(&w, &params, &weights)?;
            let family = PhaseFamily::new(2.0 * params.omega(), move |t| {
                let mut th = vec![0.0; d];
                th[0] = t;
                apply_phase_generator(&w, &params, &PhaseVector::new(th)?)
            });
            (exact, family)
        }
    };
    let numeric = qfi_pure_numeric(&family, theta, DEFAULT_STEP)?;
    if ((numeric - exact) / exact).abs() > QFI_TOLERANCE {
        return Err(CliError::Invariant(format!(
            "numeric QFI {numeric} disagrees with closed form {exact}"
        )));
    }
    let bound = crb(exact, 1)?;
    let mut row = base_row(cfg, cfg.probe, d, n);
    row.theta_true = Some(theta);
    row.qfi = Some(exact);
    row.crb = Some(bound);
    let summary = format!(
        "qfi probe={} d={d} n={} N={} F_Q={} crb={} numeric={}",
        cfg.probe.as_str(),
        row.n.unwrap_or(n),
        row.total_qubits.unwrap_or(0),
        g(exact),
        g(bound),
        g(numeric)
    );
    Ok(Outcome {
        report: render::<()>(cfg, &[row], None),
        summary,
    })
}

#[derive(Serialize)]
struct TermOut {
    occupation: Vec<usize>,
    re: f64,
    im: f64,
}

#[derive(Serialize)]
struct ProtocolOut {
    events: Vec<ProtocolEvent>,
    log: String,
    final_state: Vec<TermOut>,
    fidelity: f64,
}

fn run_protocol(cfg: &ExperimentConfig) -> Result<Outcome, CliError> {
    let params = cfg.params();
    let (d, n) = (cfg.d[0], cfg.n[0]);
    let initial = probe_state(cfg.probe, d, n)?;
    let offsets = cfg.offsets_for(d, |_| 0.0);
    let top = ClockTopology::new(initial.caps().clone(), params, offsets.clone())?;
    let concentrate_at = top.latest_trigger() + 1.0;
    let transcript = run_operation_triggered(&top, &initial, concentrate_at)?;
    let closed = closed_form_final(&top, &initial)?;
    let fidelity = transcript.final_state.fidelity_global_phase(&closed)?;
    if fidelity < 1.0 - FIDELITY_TOLERANCE {
        return Err(CliError::Invariant(format!(
            "event-driven final state deviates from closed form (fidelity {fidelity})"
        )));
    }
    let mut row = base_row(cfg, cfg.probe, d, n);
    row.theta_true = Some(offsets.mean());
    row.ratio = Some(fidelity);
    let out = ProtocolOut {
        log: transcript.to_log(),
        final_state: transcript
            .final_state
            .terms()
            .map(|(k, c)| TermOut {
                occupation: k.as_slice().to_vec(),
                re: c.re,
                im: c.im,
            })
            .collect(),
        events: transcript.events,
        fidelity,
    };
    let summary = format!(
        "protocol probe={} d={d} events={} fidelity_vs_closed_form={}",
        cfg.probe.as_str(),
        out.events.len(),
        g(fidelity)
    );
    Ok(Outcome {
        report: render(cfg, &[row], Some(out)),
        summary,
    })
}

#[derive(Serialize)]
struct WstateOut {
    counts: crate::protocols::WProtocolCounts,
    analytic_p_plus: Vec<f64>,
}

fn run_wstate(cfg: &ExperimentConfig) -> Result<Outcome, CliError> {
    if cfg.probe == ProbeKind::Average {
        return Err(CliError::Config("wstate uses the W probe".into()));
    }
    let params = cfg.params();
    // NOON defaults to d = 1, which is the two-node W state
    let d = cfg.d[0];
    let offsets = cfg.offsets_for(d, |_| 0.0);
    let counts = run_w_protocol_sampled(d, &params, &offsets, cfg.shots, cfg.seed)?;
    let mut rows = Vec::with_capacity(d);
    let mut analytic = Vec::with_capacity(d);
    for (node, &delta) in counts.nodes.iter().zip(offsets.as_slice()) {
        let (p, _) = w_conditional_probability(d, &params, delta)?;
        analytic.push(p);
        let mut row = base_row(cfg, ProbeKind::W, d, 1);
        row.theta_true = Some(delta);
        row.shots = Some(node.plus_given_plus + node.minus_given_plus);
        if let Some(freq) = node.frequency_plus_given_plus() {
            row.empirical_dev = Some(freq - p);
            row.ratio = Some(freq / p);
        }
        rows.push(row);
    }
    let first = &counts.nodes[0];
    let branch = first.plus_given_plus + first.minus_given_plus;
    let freq = first.frequency_plus_given_plus().unwrap_or(f64::NAN);
    let sigma = (analytic[0] * (1.0 - analytic[0]) / branch.max(1) as f64).sqrt();
    let summary = format!(
        "wstate d={d} shots={} node1 p_plus={} analytic={} sigma={}",
        cfg.shots,
        g(freq),
        g(analytic[0]),
        g(sigma)
    );
    let out = WstateOut {
        counts,
        analytic_p_plus: analytic,
    };
    Ok(Outcome {
        report: render(cfg, &rows, Some(out)),
        summary,
    })
}

fn estimation_probe(kind: ProbeKind, d: usize, n: usize) -> Probe {
    match kind {
        ProbeKind::Noon => Probe::Noon { n },
        ProbeKind::Average => Probe::Average { d, n },
        ProbeKind::W => unreachable!("rejected by validation"),
    }
}

fn mc_row(cfg: &ExperimentConfig, probe: Probe, qfi: f64, r: &MonteCarloResult) -> ReportRow {
    let (kind, d, n) = match probe {
        Probe::Noon { n } => (ProbeKind::Noon, 1, n),
        Probe::Average { d, n } => (ProbeKind::Average, d, n),
    };
    let mut row = base_row(cfg, kind, d, n);
    row.theta_true = Some(r.theta_true);
    row.shots = Some(r.shots_per_trial);
    row.trials = Some(r.trials);
    row.qfi = Some(qfi);
    row.crb = Some(r.crb);
    row.empirical_dev = Some(r.empirical_dev);
    row.ratio = Some(r.empirical_dev / r.crb);
    row
}

fn mc_point(cfg: &ExperimentConfig, probe: Probe) -> Result<(ReportRow, MonteCarloResult), CliError> {
    let params = cfg.params();
    let theta = cfg.thetas.first().copied().unwrap_or(DEFAULT_MC_THETA);
    let scale = probe.phase_scale(&params);
    if (theta * scale).abs() >= PI / 2.0 {
        return Err(CliError::Config(format!(
            "offset {theta} leaves the identifiability window for N = {}",
            probe.total_qubits()
        )));
    }
    let r = monte_carlo_deviation(probe, &params, theta, cfg.shots, cfg.trials, cfg.seed)?;
    let row = mc_row(cfg, probe, probe.qfi(&params)?, &r);
    Ok((row, r))
}

fn run_montecarlo(cfg: &ExperimentConfig) -> Result<Outcome, CliError> {
    let probe = estimation_probe(cfg.probe, cfg.d[0], cfg.n[0]);
    let (row, result) = mc_point(cfg, probe)?;
    let summary = format!(
        "montecarlo probe={} N={} empirical_dev={} crb={} ratio={}",
        cfg.probe.as_str(),
        probe.total_qubits(),
        g(result.empirical_dev),
        g(result.crb),
        g(result.empirical_dev / result.crb)
    );
    Ok(Outcome {
        report: render(cfg, &[row], Some(result)),
        summary,
    })
}

fn run_sweep(cfg: &ExperimentConfig) -> Result<Outcome, CliError> {
    let mut probes = Vec::new();
    for &d in &cfg.d {
        for &n in &cfg.n {
            probes.push(estimation_probe(cfg.probe, d, n));
        }
    }
    let mut rows = Vec::with_capacity(probes.len() + 1);
    let mut results = Vec::with_capacity(probes.len());
    let (mut log_n, mut log_dev) = (Vec::new(), Vec::new());
    for probe in probes {
        let (row, r) = mc_point(cfg, probe)?;
        log_n.push((probe.total_qubits() as f64).ln());
        log_dev.push(r.empirical_dev.ln());
        rows.push(row);
        results.push(r);
    }
    let slope = fit_slope(&log_n, &log_dev);
    let mut fit = ReportRow::new("sweep-fit");
    fit.probe = Some(cfg.probe.as_str().into());
    fit.omega = Some(cfg.omega);
    fit.shots = Some(cfg.shots);
    fit.trials = Some(cfg.trials);
    fit.ratio = slope;
    rows.push(fit);
    let summary = format!(
        "sweep probe={} points={} loglog_slope={}",
        cfg.probe.as_str(),
        results.len(),
        slope.map(g).unwrap_or_else(|| "n/a".into())
    );
    Ok(Outcome {
        report: render(cfg, &rows, Some(results)),
        summary,
    })
}

/// Operation-triggered optimum against the measurement-triggered bound and
/// the bipartite-entanglement reference, per `(d, n)`.
pub fn compare_average(cfg: &ExperimentConfig) -> Result<Outcome, CliError> {
    let params = cfg.params();
    let mut rows = Vec::new();
    for &d in &cfg.d {
        for &n in &cfg.n {
            let total = 2 * d * n;
            let qfi = average_qfi(d, n, &params)?;
            let opt = crb(qfi, 1)?;
            let mt = mt_average_bound(d, total, &params)?;
            let mut row = base_row(cfg, ProbeKind::Average, d, n);
            row.qfi = Some(qfi);
            row.crb = Some(opt);
            row.mt_bound = Some(mt);
            row.ren2012 = Some(ren2012_reference(d, total, &params)?);
            row.ratio = Some(mt / opt);
            rows.push(row);
        }
    }
    let last = rows.last().expect("at least one point");
    let summary = format!(
        "compare-average points={} last: d={} N={} crb_opt={} mt_bound={} ratio={}",
        rows.len(),
        last.d.unwrap_or(0),
        last.total_qubits.unwrap_or(0),
        g(last.crb.unwrap_or(f64::NAN)),
        g(last.mt_bound.unwrap_or(f64::NAN)),
        g(last.ratio.unwrap_or(f64::NAN))
    );
    Ok(Outcome {
        report: render::<()>(cfg, &rows, None),
        summary,
    })
}

fn run_oracle_check(cfg: &ExperimentConfig) -> Result<Outcome, CliError> {
    let params = cfg.params();
    let mut rows = Vec::new();
    let mut worst: f64 = 1.0;
    let mut failures = Vec::new();
    let ds: &[usize] = if cfg.probe == ProbeKind::Noon { &[1] } else { &cfg.d };
    for &d in ds {
        for &n in &cfg.n {
            let initial = probe_state(cfg.probe, d, n)?;
            let offsets = cfg.offsets_for(d, |k| 0.3 + 0.2 * (k - 1) as f64);
            let top = ClockTopology::new(initial.caps().clone(), params, offsets.clone())?;
            let fock = run_operation_triggered(&top, &initial, top.latest_trigger() + 1.0)?.final_state;
            let dense = oracle_operation_protocol(&top, &initial)?.to_fock()?;
            let fidelity = fock.fidelity_global_phase(&dense)?;
            worst = worst.min(fidelity);
            if fidelity < 1.0 - FIDELITY_TOLERANCE {
                failures.push(format!("d={d} n={n}: fidelity {fidelity}"));
            }
            let mut row = base_row(cfg, cfg.probe, d, n);
            row.theta_true = Some(offsets.mean());
            row.ratio = Some(fidelity);
            rows.push(row);
        }
    }
    if !failures.is_empty() {
        return Err(CliError::Invariant(format!(
            "oracle disagrees with the Fock engine: {}",
            failures.join("; ")
        )));
    }
    let summary = format!(
        "oracle-check probe={} cases={} min_fidelity={}",
        cfg.probe.as_str(),
        rows.len(),
        g(worst)
    );
    Ok(Outcome {
        report: render::<()>(cfg, &rows, None),
        summary,
    })
}

/// Parses arguments, runs, writes the report and returns the exit code.
pub fn main_with_args<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let args = match Args::try_parse_from(argv) {
        Ok(a) => a,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_CONFIG } else { EXIT_OK };
        }
    };
    let result = ExperimentConfig::from_args(&args).and_then(|cfg| {
        let outcome = run(&cfg)?;
        match &cfg.output {
            Some(path) => std::fs::write(path, &outcome.report)
                .map_err(|e| CliError::Config(format!("cannot write {}: {e}", path.display())))?,
            None => print!("{}", outcome.report),
        }
        Ok(outcome)
    });
    match result {
        Ok(outcome) => {
            println!("{}", outcome.summary);
            EXIT_OK
        }
        Err(e) => {
            eprintln!("qcs: {e}");
            e.exit_code()
        }
    }
}
