//! Command-line front end.
//!
//! Exit codes: 0 on success, 2 on a usage error, 1 when a computation or
//! the output fails.

use std::ffi::OsString;
use std::io::Write;
use std::path::PathBuf;
use std::str::FromStr;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;
use serde_json::{json, Value};

use crate::analysis::{
    self, optimize_chi_d, sweep_curves, Column, CurvePoint, Figure, Modulation, NoiseSpec, Scheme, SweepKind,
    SweepSpec,
};
use crate::error::{Error, Result};
use crate::output::{write_atomic, Format, Table};
use crate::protocol::{
    keyrate, transmittivity_from_db, ChannelModel, Measurement, Preparation, Preset, ProtocolConfig,
    Reconciliation,
};
use crate::sim;

/// Directory for output files when `--output` is not given. Without it,
/// output goes to stdout.
pub const OUTPUT_DIR_ENV: &str = "CVQKD_OUTPUT_DIR";

#[derive(Debug, Parser)]
#[command(name = "cvqkd", version, about = "Key rates of Gaussian CV-QKD protocols")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Command {
    /// Key rate of one protocol on one channel.
    #[command(allow_negative_numbers = true)]
    Keyrate(KeyrateArgs),
    /// Key-rate or tolerance curves over a loss grid, or a figure preset.
    #[command(allow_negative_numbers = true)]
    Sweep(SweepArgs),
    /// Tolerable excess noise at one loss or over a loss grid.
    #[command(allow_negative_numbers = true)]
    Tolerance(ToleranceArgs),
    /// Bob's added noise that maximizes the key rate.
    #[command(allow_negative_numbers = true)]
    Optimize(OptimizeArgs),
    /// Monte Carlo session of the squeezed-state protocol.
    #[command(allow_negative_numbers = true)]
    Simulate(SimulateArgs),
}

/// A protocol on the command line: a preset or `optimal` (squeezed states,
/// homodyne, χ_D maximizing the rate).
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum SchemeArg {
    Preset(Preset),
    Optimal,
}

impl FromStr for SchemeArg {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        if s == "optimal" {
            Ok(SchemeArg::Optimal)
        } else {
            s.parse().map(SchemeArg::Preset)
        }
    }
}

impl SchemeArg {
    fn label(self) -> String {
        match self {
            SchemeArg::Preset(p) => p.name().replace('-', "_"),
            SchemeArg::Optimal => "optimal".into(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum PreparationArg {
    Squeezed,
    Coherent,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum MeasurementArg {
    Homodyne,
    Heterodyne,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum ReconciliationArg {
    Reverse,
    Direct,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum FormatArg {
    Csv,
    Json,
}

impl From<FormatArg> for Format {
    fn from(f: FormatArg) -> Self {
        match f {
            FormatArg::Csv => Format::Csv,
            FormatArg::Json => Format::Json,
        }
    }
}

/// Protocol flags shared by the subcommands.
#[derive(Debug, Clone, Args, Serialize)]
pub struct ProtocolArgs {
    /// squeezed-homodyne, squeezed-heterodyne (alias: new),
    /// coherent-homodyne, coherent-heterodyne or optimal.
    #[arg(long, value_delimiter = ',', conflicts_with_all = ["preparation", "measurement"])]
    pub preset: Vec<SchemeArg>,
    #[arg(long, value_enum)]
    pub preparation: Option<PreparationArg>,
    #[arg(long, value_enum, requires = "preparation")]
    pub measurement: Option<MeasurementArg>,
    /// Bob's added noise for squeezed states with homodyne detection.
    #[arg(long = "chi-d")]
    pub chi_d: Option<f64>,
    #[arg(long, value_enum, default_value = "reverse")]
    pub reconciliation: ReconciliationArg,
    /// Random-quadrature homodyne in place of heterodyne (halves the rate).
    #[arg(long)]
    pub switching: bool,
}

#[derive(Debug, Clone, Args, Serialize)]
#[group(required = true, multiple = false)]
pub struct LossArgs {
    /// Channel loss in dB.
    #[arg(long = "loss-db")]
    pub loss_db: Option<f64>,
    /// Channel transmittivity in (0, 1].
    #[arg(long = "T")]
    pub t: Option<f64>,
}

#[derive(Debug, Clone, Args, Serialize)]
#[group(required = true, multiple = false)]
pub struct NoiseArgs {
    /// Excess noise above the pure-loss line, shot-noise units.
    #[arg(long)]
    pub epsilon: Option<f64>,
    /// Total added noise referred to the channel input.
    #[arg(long = "chi-c")]
    pub chi_c: Option<f64>,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct GridArgs {
    /// First loss of the grid, dB.
    #[arg(long = "loss-min", default_value_t = 0.0)]
    pub loss_min: f64,
    /// Last loss of the grid, dB.
    #[arg(long = "loss-max")]
    pub loss_max: Option<f64>,
    /// Grid spacing, dB.
    #[arg(long = "loss-step", default_value_t = 1.0)]
    pub loss_step: f64,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct OutputArgs {
    /// Defaults to JSON for keyrate and simulate, CSV otherwise.
    #[arg(long, value_enum)]
    pub format: Option<FormatArg>,
    /// Output file, written atomically; stdout if absent.
    #[arg(long)]
    pub output: Option<PathBuf>,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct KeyrateArgs {
    #[command(flatten)]
    pub protocol: ProtocolArgs,
    /// Modulation variance V (≥ 1), shot-noise units.
    #[arg(long = "V")]
    pub v: f64,
    #[command(flatten)]
    pub loss: LossArgs,
    #[command(flatten)]
    pub noise: NoiseArgs,
    #[command(flatten)]
    #[serde(skip)]
    pub out: OutputArgs,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct SweepArgs {
    /// Figure preset; fixes every other parameter.
    #[arg(long, conflicts_with_all = ["preset", "preparation", "v", "large_v", "epsilon", "chi_c", "loss_max", "tolerance"])]
    pub fig: Option<Figure>,
    #[command(flatten)]
    pub protocol: ProtocolArgs,
    /// Modulation variance V (≥ 1), shot-noise units.
    #[arg(long = "V", conflicts_with = "large_v")]
    pub v: Option<f64>,
    /// Evaluate in the V→∞ limit.
    #[arg(long = "large-v")]
    pub large_v: bool,
    #[arg(long, conflicts_with = "chi_c")]
    pub epsilon: Option<f64>,
    #[arg(long = "chi-c")]
    pub chi_c: Option<f64>,
    /// Tolerable excess noise instead of key rate.
    #[arg(long)]
    pub tolerance: bool,
    #[command(flatten)]
    pub grid: GridArgs,
    #[command(flatten)]
    #[serde(skip)]
    pub out: OutputArgs,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct ToleranceArgs {
    #[command(flatten)]
    pub protocol: ProtocolArgs,
    /// Modulation variance V (≥ 1), shot-noise units.
    #[arg(long = "V", required_unless_present = "large_v", conflicts_with = "large_v")]
    pub v: Option<f64>,
    /// Evaluate in the V→∞ limit.
    #[arg(long = "large-v")]
    pub large_v: bool,
    /// Single loss; otherwise the grid flags apply.
    #[arg(long = "loss-db", conflicts_with = "loss_max")]
    pub loss_db: Option<f64>,
    #[command(flatten)]
    pub grid: GridArgs,
    #[command(flatten)]
    #[serde(skip)]
    pub out: OutputArgs,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct OptimizeArgs {
    /// Modulation variance V (≥ 1), shot-noise units.
    #[arg(long = "V")]
    pub v: f64,
    /// Single loss in dB; otherwise the grid flags apply.
    #[arg(long = "loss-db", conflicts_with_all = ["t", "loss_max"])]
    pub loss_db: Option<f64>,
    /// Single transmittivity.
    #[arg(long = "T", conflicts_with = "loss_max")]
    pub t: Option<f64>,
    #[command(flatten)]
    pub noise: NoiseArgs,
    #[command(flatten)]
    pub grid: GridArgs,
    #[command(flatten)]
    #[serde(skip)]
    pub out: OutputArgs,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct SimulateArgs {
    #[command(flatten)]
    pub protocol: ProtocolArgs,
    /// Modulation variance V (≥ 1), shot-noise units.
    #[arg(long = "V")]
    pub v: f64,
    #[command(flatten)]
    pub loss: LossArgs,
    #[command(flatten)]
    pub noise: NoiseArgs,
    /// Number of rounds.
    #[arg(long)]
    pub n: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Fraction of rounds revealed for channel estimation.
    #[arg(long = "reveal-fraction", default_value_t = 0.5)]
    pub reveal_fraction: f64,
    /// Also write the per-round records as CSV.
    #[arg(long)]
    pub records: Option<PathBuf>,
    #[command(flatten)]
    #[serde(skip)]
    pub out: OutputArgs,
}

/// A finished command: the document to write and its default file name.
struct Rendered {
    text: String,
    default_name: String,
    warnings: Vec<String>,
}

/// Parses `args` (program name first) and runs the command, writing
/// diagnostics to stderr. Returns the process exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 2 } else { 0 };
        }
    };
    match execute(&cli.command) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            1
        }
    }
}

fn execute(command: &Command) -> Result<()> {
    let out = match command {
        Command::Keyrate(a) => &a.out,
        Command::Sweep(a) => &a.out,
        Command::Tolerance(a) => &a.out,
        Command::Optimize(a) => &a.out,
        Command::Simulate(a) => &a.out,
    };
    let rendered = match command {
        Command::Keyrate(a) => cmd_keyrate(a, command)?,
        Command::Sweep(a) => cmd_sweep(a, command)?,
        Command::Tolerance(a) => cmd_tolerance(a, command)?,
        Command::Optimize(a) => cmd_optimize(a, command)?,
        Command::Simulate(a) => cmd_simulate(a, command)?,
    };
    for w in &rendered.warnings {
        eprintln!("warning: {w}");
    }
    let path = out
        .output
        .clone()
        .or_else(|| std::env::var_os(OUTPUT_DIR_ENV).map(|d| PathBuf::from(d).join(&rendered.default_name)));
    match path {
        Some(p) => write_atomic(&p, &rendered.text)
            .map_err(|e| Error::Domain(format!("cannot write {}: {e}", p.display()))),
        None => std::io::stdout()
            .write_all(rendered.text.as_bytes())
            .map_err(|e| Error::Domain(format!("cannot write stdout: {e}"))),
    }
}

fn meta(command: &Command, tolerances: Value) -> Value {
    json!({
        "command": command,
        "tolerances": tolerances,
        "version": env!("CARGO_PKG_VERSION"),
    })
}

fn render(
    table: &Table,
    format: Format,
    meta: &Value,
    stem: &str,
    warnings: Vec<String>,
) -> Result<Rendered> {
    let text = match format {
        Format::Csv => table.to_csv()?,
        Format::Json => table.to_json(meta)?,
    };
    Ok(Rendered { text, default_name: format!("{stem}.{}", format.extension()), warnings })
}

fn analysis_tolerances() -> Value {
    json!({
        "epsilon": analysis::EPSILON_TOL,
        "rate_zero": analysis::RATE_ZERO_TOL,
        "epsilon_cap": analysis::EPSILON_CAP,
        "chi_d": analysis::CHI_D_TOL,
        "chi_d_cap": analysis::CHI_D_CAP,
        "large_v": analysis::LARGE_V_TOL,
        "large_v_start": analysis::LARGE_V_START,
        "large_v_cap": analysis::LARGE_V_CAP,
    })
}

/// Loss in dB and transmittivity; `T` is computed from dB once, here.
fn resolve_loss(loss_db: Option<f64>, t: Option<f64>) -> Result<(f64, f64)> {
    match (loss_db, t) {
        (Some(db), None) => Ok((db, transmittivity_from_db(db)?)),
        (None, Some(t)) => {
            let c = ChannelModel::new(t, 0.0)?;
            Ok((c.loss_db(), t))
        }
        _ => Err(Error::domain("give exactly one of --loss-db and --T")),
    }
}

fn resolve_noise(epsilon: Option<f64>, chi_c: Option<f64>) -> Result<NoiseSpec> {
    match (epsilon, chi_c) {
        (Some(e), None) => Ok(NoiseSpec::Epsilon(e)),
        (None, Some(c)) => Ok(NoiseSpec::ChiC(c)),
        _ => Err(Error::domain("give exactly one of --epsilon and --chi-c")),
    }
}

/// Schemes named by the protocol flags, at modulation `v`.
fn resolve_schemes(p: &ProtocolArgs, v: f64) -> Result<Vec<(String, Scheme)>> {
    let reconciliation = match p.reconciliation {
        ReconciliationArg::Reverse => Reconciliation::Reverse,
        ReconciliationArg::Direct => Reconciliation::Direct,
    };
    let finish = |cfg: ProtocolConfig| -> Result<Scheme> {
        Ok(Scheme::Config(cfg.with_reconciliation(reconciliation)?.with_switching(p.switching)?))
    };
    let with_chi_d = |cfg: ProtocolConfig| -> Result<ProtocolConfig> {
        match p.chi_d {
            Some(chi_d) if cfg.preset() == Some(Preset::SqueezedHomodyne) => {
                ProtocolConfig::squeezed_general(v, chi_d)
            }
            Some(chi_d) => ProtocolConfig { chi_d, ..cfg }.with_v(v),
            None => Ok(cfg),
        }
    };
    if p.preset.is_empty() {
        let prep = p.preparation.ok_or_else(|| Error::domain("give --preset or --preparation"))?;
        let meas = p.measurement.unwrap_or(MeasurementArg::Homodyne);
        let preset = match (prep, meas) {
            (PreparationArg::Squeezed, MeasurementArg::Homodyne) => Preset::SqueezedHomodyne,
            (PreparationArg::Squeezed, MeasurementArg::Heterodyne) => Preset::SqueezedHeterodyne,
            (PreparationArg::Coherent, MeasurementArg::Homodyne) => Preset::CoherentHomodyne,
            (PreparationArg::Coherent, MeasurementArg::Heterodyne) => Preset::CoherentHeterodyne,
        };
        let cfg = with_chi_d(preset.config(v)?)?;
        debug_assert_eq!(cfg.preparation == Preparation::Squeezed, prep == PreparationArg::Squeezed);
        debug_assert_eq!(cfg.bob_measurement == Measurement::Homodyne, meas == MeasurementArg::Homodyne);
        return Ok(vec![(explicit_label(&cfg), finish(cfg)?)]);
    }
    p.preset
        .iter()
        .map(|&s| {
            let scheme = match s {
                SchemeArg::Optimal => {
                    if p.chi_d.is_some() || p.switching || reconciliation != Reconciliation::Reverse {
                        return Err(Error::domain(
                            "optimal chooses chi_D itself and uses reverse reconciliation",
                        ));
                    }
                    Scheme::OptimalChiD { v }.with_v(v)?
                }
                SchemeArg::Preset(preset) => finish(with_chi_d(preset.config(v)?)?)?,
            };
            Ok((s.label(), scheme))
        })
        .collect()
}

fn explicit_label(cfg: &ProtocolConfig) -> String {
    cfg.preset().map(|p| SchemeArg::Preset(p).label()).unwrap_or_else(|| "squeezed_homodyne".into())
}

fn cmd_keyrate(a: &KeyrateArgs, command: &Command) -> Result<Rendered> {
    let (loss_db, t) = resolve_loss(a.loss.loss_db, a.loss.t)?;
    let channel = resolve_noise(a.noise.epsilon, a.noise.chi_c)?.channel(t)?;
    let schemes = resolve_schemes(&a.protocol, a.v)?;
    let mut table = Table::new(["loss_db", "T", "epsilon", "chi_C", "V", "chi_D", "I_ab", "holevo", "K"]);
    let mut warnings = Vec::new();
    for (_, scheme) in &schemes {
        let (chi_d, report) = match scheme {
            Scheme::Config(cfg) => (cfg.chi_d, keyrate(cfg, &channel)?),
            Scheme::OptimalChiD { v } => {
                let opt = optimize_chi_d(*v, &channel)?;
                if opt.at_cap {
                    warnings.push(cap_warning(1, loss_db, loss_db));
                }
                let cfg = ProtocolConfig::squeezed_general(*v, opt.chi_d)?;
                let mut report = keyrate(&cfg, &channel)?;
                report.k = opt.k;
                (opt.chi_d, report)
            }
        };
        table.push(vec![
            loss_db,
            t,
            channel.epsilon(),
            channel.chi_c(),
            a.v,
            chi_d,
            report.i_ab,
            report.holevo,
            report.k,
        ])?;
    }
    let format = a.out.format.map_or(Format::Json, Format::from);
    render(&table, format, &meta(command, json!({})), "keyrate", warnings)
}

fn grid(g: &GridArgs, single: Option<f64>) -> Result<Vec<f64>> {
    match (single, g.loss_max) {
        (Some(db), _) => Ok(vec![db]),
        (None, Some(max)) => analysis::loss_grid(g.loss_min, max, g.loss_step),
        (None, None) => Err(Error::domain("give --loss-db or --loss-max for a loss grid")),
    }
}

fn sweep_table(points: &[CurvePoint], columns: &[(String, Column)]) -> Result<(Table, Vec<String>)> {
    let mut table = Table::new(columns.iter().map(|(n, _)| n.clone()));
    let mut warnings = Vec::new();
    for p in points {
        table.push(columns.iter().map(|(_, c)| c.read(p)).collect())?;
        warnings.extend(p.errors.iter().map(|e| format!("{} dB: {e}", p.loss_db)));
    }
    let capped: Vec<f64> = points.iter().filter(|p| p.chi_d_at_cap).map(|p| p.loss_db).collect();
    if let (Some(first), Some(last)) = (capped.first(), capped.last()) {
        warnings.push(cap_warning(capped.len(), *first, *last));
    }
    Ok((table, warnings))
}

fn cap_warning(count: usize, first: f64, last: f64) -> String {
    format!(
        "optimal chi_D reached the search cap {} at {count} loss(es) between {first} and {last} dB; \
         the rate is negative for every chi_D there",
        analysis::CHI_D_CAP
    )
}

fn cmd_sweep(a: &SweepArgs, command: &Command) -> Result<Rendered> {
    let format = a.out.format.map_or(Format::Csv, Format::from);
    if let Some(fig) = a.fig {
        let spec = fig.spec()?;
        let points = sweep_curves(&spec)?;
        let columns: Vec<(String, Column)> =
            fig.columns().into_iter().map(|(n, c)| (n.to_string(), c)).collect();
        let (table, warnings) = sweep_table(&points, &columns)?;
        let meta = meta(command, json!({"analysis": analysis_tolerances(), "spec": spec}));
        return render(&table, format, &meta, &format!("fig{}", fig.name()), warnings);
    }
    let modulation = match (a.v, a.large_v) {
        (Some(v), false) => Modulation::Fixed(v),
        (None, true) => Modulation::Large,
        _ => return Err(Error::domain("give --V or --large-v")),
    };
    let v = match modulation {
        Modulation::Fixed(v) => v,
        Modulation::Large => analysis::LARGE_V_START,
    };
    let kind = if a.tolerance {
        if a.epsilon.is_some() || a.chi_c.is_some() {
            return Err(Error::domain("a tolerance sweep takes no channel noise"));
        }
        SweepKind::Tolerance
    } else {
        SweepKind::KeyRate(resolve_noise(a.epsilon, a.chi_c)?)
    };
    let named = resolve_schemes(&a.protocol, v)?;
    let spec = SweepSpec {
        losses_db: grid(&a.grid, None)?,
        kind,
        modulation,
        schemes: named.iter().map(|(_, s)| *s).collect(),
    };
    let prefix = if a.tolerance { "eps" } else { "K" };
    let mut columns = vec![("loss_db".to_string(), Column::Loss)];
    columns.extend(
        named.iter().enumerate().map(|(i, (label, _))| (format!("{prefix}_{label}"), Column::Value(i))),
    );
    if !a.tolerance && named.iter().any(|(_, s)| matches!(s, Scheme::OptimalChiD { .. })) {
        columns.push(("chi_d_opt".into(), Column::ChiDOpt));
    }
    let points = sweep_curves(&spec)?;
    let (table, warnings) = sweep_table(&points, &columns)?;
    let meta = meta(command, json!({"analysis": analysis_tolerances(), "spec": spec}));
    render(&table, format, &meta, "sweep", warnings)
}

fn cmd_tolerance(a: &ToleranceArgs, command: &Command) -> Result<Rendered> {
    let (modulation, v) = match (a.v, a.large_v) {
        (Some(v), false) => (Modulation::Fixed(v), v),
        (None, true) => (Modulation::Large, analysis::LARGE_V_START),
        _ => return Err(Error::domain("give --V or --large-v")),
    };
    let named = resolve_schemes(&a.protocol, v)?;
    let spec = SweepSpec {
        losses_db: grid(&a.grid, a.loss_db)?,
        kind: SweepKind::Tolerance,
        modulation,
        schemes: named.iter().map(|(_, s)| *s).collect(),
    };
    let mut columns = vec![("loss_db".to_string(), Column::Loss)];
    columns
        .extend(named.iter().enumerate().map(|(i, (label, _))| (format!("eps_{label}"), Column::Value(i))));
    let points = sweep_curves(&spec)?;
    if a.loss_db.is_some() {
        if let Some(e) = points.first().and_then(|p| p.errors.first()) {
            return Err(Error::Numeric(e.clone()));
        }
    }
    let (table, warnings) = sweep_table(&points, &columns)?;
    let meta = meta(command, json!({"analysis": analysis_tolerances(), "spec": spec}));
    let format = a.out.format.map_or(Format::Csv, Format::from);
    render(&table, format, &meta, "tolerance", warnings)
}

fn cmd_optimize(a: &OptimizeArgs, command: &Command) -> Result<Rendered> {
    let noise = resolve_noise(a.noise.epsilon, a.noise.chi_c)?;
    let losses = match (a.loss_db, a.t) {
        (None, None) => grid(&a.grid, None)?
            .into_iter()
            .map(|db| Ok((db, transmittivity_from_db(db)?)))
            .collect::<Result<Vec<_>>>()?,
        (db, t) => vec![resolve_loss(db, t)?],
    };
    let mut table = Table::new(["loss_db", "T", "chi_d_opt", "K_opt", "K_chiD0", "K_chiD1", "at_cap"]);
    let mut capped = Vec::new();
    let hom = ProtocolConfig::squeezed_homodyne(a.v)?;
    let het = ProtocolConfig::squeezed_heterodyne(a.v)?;
    for (db, t) in losses {
        let channel = noise.channel(t)?;
        let opt = optimize_chi_d(a.v, &channel)?;
        if opt.at_cap {
            capped.push(db);
        }
        table.push(vec![
            db,
            t,
            opt.chi_d,
            opt.k,
            keyrate(&hom, &channel)?.k,
            keyrate(&het, &channel)?.k,
            f64::from(u8::from(opt.at_cap)),
        ])?;
    }
    let warnings = match (capped.first(), capped.last()) {
        (Some(first), Some(last)) => vec![cap_warning(capped.len(), *first, *last)],
        _ => Vec::new(),
    };
    let format = a.out.format.map_or(Format::Csv, Format::from);
    render(&table, format, &meta(command, analysis_tolerances()), "optimize", warnings)
}

fn cmd_simulate(a: &SimulateArgs, command: &Command) -> Result<Rendered> {
    let (_, t) = resolve_loss(a.loss.loss_db, a.loss.t)?;
    let channel = resolve_noise(a.noise.epsilon, a.noise.chi_c)?.channel(t)?;
    let mut protocol = a.protocol.clone();
    if protocol.preset.is_empty() && protocol.preparation.is_none() {
        protocol.preset = vec![SchemeArg::Preset(Preset::SqueezedHeterodyne)];
    }
    let cfg = match resolve_schemes(&protocol, a.v)?.as_slice() {
        [(_, Scheme::Config(cfg))] => *cfg,
        _ => return Err(Error::domain("simulate takes exactly one fixed protocol")),
    };
    let session = sim::run_session(a.n, &cfg, &channel, a.seed)?;
    if let Some(path) = &a.records {
        let mut buf = Vec::new();
        sim::write_records_csv(&session.records, &mut buf)?;
        let text = String::from_utf8(buf).map_err(|e| Error::numeric(e.to_string()))?;
        write_atomic(path, &text)
            .map_err(|e| Error::Domain(format!("cannot write {}: {e}", path.display())))?;
    }
    let s = sim::summarize(&session, a.reveal_fraction)?;
    let mut table = Table::new([
        "n",
        "T",
        "chi_C",
        "T_hat",
        "chi_C_hat",
        "I_hat",
        "K_hat",
        "var_b_r0",
        "var_b_r1",
        "I_ab",
        "K",
    ]);
    table.push(vec![
        s.n as f64,
        t,
        channel.chi_c(),
        s.t_hat,
        s.chi_c_hat,
        s.i_hat,
        s.k_hat,
        s.var_b_r0,
        s.var_b_r1,
        s.i_ab,
        s.k,
    ])?;
    let format = a.out.format.map_or(Format::Json, Format::from);
    let meta = meta(
        command,
        json!({"min_revealed": sim::MIN_REVEALED, "min_rate_rounds": sim::MIN_RATE_ROUNDS, "block_rounds": sim::BLOCK_ROUNDS}),
    );
    render(&table, format, &meta, "simulate", Vec::new())
}
