//! `dectlink`: path-loss evaluation, capture analysis, fitting and link
//! planning from the command line.
//!
//! Exit codes: 0 success (including unreachable planning targets), 2 usage or
//! domain errors, 1 internal errors.

use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use dectlink::campaign::{load_captures, summarize_all};
use dectlink::config::{RunConfig, CONFIG_ENV_VAR};
use dectlink::fitting::{fit_log_distance, fit_log_distance_iterative, FitResult};
use dectlink::propagation::{hata_height_correction_db, sweep_distances, ModelKind, Spacing};
use dectlink::report::{
    compare_path_loss, fmt_num, plan, plan_csv, records_csv, records_table, report_csv,
    report_geometry, sweep_csv, sweep_table, RowStatus, FSPL_TOLERANCE_DB,
};
use dectlink::{fixtures, Distance, Execution};

enum CliError {
    Usage(String),
    Internal(String),
}

impl From<dectlink::Error> for CliError {
    fn from(e: dectlink::Error) -> Self {
        CliError::Usage(e.to_string())
    }
}

type CliResult<T = ()> = Result<T, CliError>;

#[derive(Parser)]
#[command(
    name = "dectlink",
    version,
    about = "DECT-2020 NR link budget and path-loss toolkit"
)]
struct Cli {
    #[command(flatten)]
    common: Common,

    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Common {
    /// Config file (flat key=value). Falls back to $DECTLINK_CONFIG.
    #[arg(long, global = true, env = CONFIG_ENV_VAR)]
    config: Option<PathBuf>,

    /// Override any config key: --set key=value (repeatable).
    #[arg(long = "set", global = true, value_name = "KEY=VALUE")]
    set: Vec<String>,

    /// Carrier frequency, Hz.
    #[arg(long = "f", global = true)]
    frequency_hz: Option<String>,

    #[arg(long = "bandwidth", global = true)]
    bandwidth_hz: Option<String>,

    #[arg(long = "tx-power", global = true, allow_hyphen_values = true)]
    tx_power_dbm: Option<String>,

    #[arg(long = "noise-figure", global = true)]
    noise_figure_db: Option<String>,

    /// TX antenna height (base station height for the Hata models), m.
    #[arg(long = "h-tx", global = true)]
    h_tx_m: Option<String>,

    /// RX antenna height (mobile height for the Hata models), m.
    #[arg(long = "h-rx", global = true)]
    h_rx_m: Option<String>,

    /// Combined linear antenna gain for the two-ray model.
    #[arg(long = "gain", global = true)]
    antenna_gain: Option<String>,

    #[arg(long = "city", global = true, value_name = "small-medium|large")]
    city_size: Option<String>,

    #[arg(long = "area", global = true, value_name = "urban|suburban-open")]
    area_class: Option<String>,

    #[arg(long = "setting", global = true, value_name = "indoor|outdoor|both")]
    setting: Option<String>,

    /// Decimal places in CSV output.
    #[arg(long, global = true)]
    decimals: Option<String>,

    /// Write CSV here instead of stdout.
    #[arg(long = "out", global = true)]
    output: Option<String>,

    /// Run batch work on one thread.
    #[arg(long, global = true)]
    sequential: bool,
}

#[derive(Subcommand)]
enum Command {
    /// Path-loss model evaluation.
    Model {
        #[command(subcommand)]
        action: ModelCommand,
    },
    /// Summarize capture CSVs (each with a `.meta` sidecar).
    Analyze {
        #[arg(required = true)]
        captures: Vec<PathBuf>,
    },
    /// Fit a log-distance model to (distance, path loss) points.
    Fit {
        input: PathBuf,
        /// Path-loss column to fit.
        #[arg(long, default_value = "pl_db")]
        column: String,
        /// Use the iterative Levenberg-Marquardt engine instead of the closed form.
        #[arg(long)]
        iterative: bool,
    },
    /// Maximum link distance per configured model and setting.
    Plan {
        #[arg(long)]
        models: Option<String>,
    },
    /// Compare recomputed model values with the outdoor reference rows.
    Report,
}

#[derive(Subcommand)]
enum ModelCommand {
    /// Evaluate one model at one distance.
    Eval {
        #[arg(long)]
        model: String,
        /// Distance, m.
        #[arg(long = "d")]
        distance_m: f64,
    },
    /// Evaluate models over a distance range and emit CSV.
    Sweep {
        #[arg(long, default_value = "fspl")]
        models: String,
        #[arg(long)]
        start: f64,
        #[arg(long)]
        end: f64,
        #[arg(long, default_value_t = 50)]
        points: usize,
        #[arg(long, default_value = "log")]
        spacing: String,
    },
}

impl Common {
    fn overrides(&self) -> CliResult<Vec<(String, String)>> {
        let mut pairs = Vec::new();
        for s in &self.set {
            let (k, v) = s
                .split_once('=')
                .ok_or_else(|| CliError::Usage(format!("--set expects key=value, got `{s}`")))?;
            pairs.push((k.trim().to_string(), v.trim().to_string()));
        }
        let named = [
            ("frequency_hz", &self.frequency_hz),
            ("bandwidth_hz", &self.bandwidth_hz),
            ("tx_power_dbm", &self.tx_power_dbm),
            ("noise_figure_db", &self.noise_figure_db),
            ("h_tx_m", &self.h_tx_m),
            ("h_rx_m", &self.h_rx_m),
            ("antenna_gain", &self.antenna_gain),
            ("city_size", &self.city_size),
            ("area_class", &self.area_class),
            ("setting", &self.setting),
            ("decimals", &self.decimals),
            ("output", &self.output),
        ];
        for (key, value) in named {
            if let Some(v) = value {
                pairs.push((key.to_string(), v.clone()));
            }
        }
        Ok(pairs)
    }

    fn resolve(&self, extra: &[(&str, String)]) -> CliResult<RunConfig> {
        let file = match &self.config {
            Some(path) => Some((
                fs::read_to_string(path)
                    .map_err(|e| CliError::Usage(format!("{}: {e}", path.display())))?,
                path.display().to_string(),
            )),
            None => None,
        };
        let mut pairs = self.overrides()?;
        pairs.extend(extra.iter().map(|(k, v)| (k.to_string(), v.clone())));
        let cfg = RunConfig::resolve(
            file.as_ref().map(|(t, s)| (t.as_str(), s.as_str())),
            pairs.iter().map(|(k, v)| (k.as_str(), v.as_str())),
        )?;
        Ok(cfg)
    }

    fn execution(&self) -> Execution {
        if self.sequential {
            Execution::Sequential
        } else {
            Execution::default()
        }
    }
}

fn emit_csv(cfg: &RunConfig, csv: &str, human: Option<&str>) -> CliResult {
    match &cfg.output {
        Some(path) => {
            write_file(path, csv)?;
            if let Some(text) = human {
                print_out(text)?;
            }
            Ok(())
        }
        None => print_out(csv),
    }
}

fn write_file(path: &Path, contents: &str) -> CliResult {
    fs::write(path, contents).map_err(|e| CliError::Internal(format!("{}: {e}", path.display())))
}

fn print_out(text: &str) -> CliResult {
    let mut out = io::stdout().lock();
    out.write_all(text.as_bytes())
        .and_then(|_| out.flush())
        .map_err(|e| CliError::Internal(format!("stdout: {e}")))
}

fn cmd_model_eval(common: &Common, model: &str, distance_m: f64) -> CliResult {
    let cfg = common.resolve(&[])?;
    let kind: ModelKind = model.parse()?;
    let model = cfg.build_model(kind)?;
    let d = Distance::from_m(distance_m)?;
    let eval = model.evaluate(d);
    let mut text = format!(
        "{}: {} dB at {} m, {} MHz\n",
        kind,
        fmt_num(eval.loss_db, 2),
        fmt_num(d.m(), 2),
        model.frequency().mhz()
    );
    if matches!(kind, ModelKind::OkumuraHata | ModelKind::Cost231Hata) {
        let env = cfg.hata_environment();
        let geom = cfg.geometry()?.expect("built above");
        text.push_str(&format!(
            "# height correction: {} city formula, {} dB; area class {} ({} dB)\n",
            env.city_size,
            fmt_num(
                hata_height_correction_db(env.city_size, model.frequency(), geom.h_rx_m()),
                2
            ),
            env.area_class,
            if kind == ModelKind::Cost231Hata {
                fmt_num(env.area_correction_db(), 0)
            } else {
                "unused".into()
            }
        ));
    }
    for flag in &eval.flags {
        text.push_str(&format!("flag: {flag}\n"));
    }
    print_out(&text)
}

fn cmd_sweep(
    common: &Common,
    models: &str,
    start: f64,
    end: f64,
    points: usize,
    spacing: &str,
) -> CliResult {
    let cfg = common.resolve(&[("models", models.to_string())])?;
    let built = cfg
        .models
        .iter()
        .map(|&k| cfg.build_model(k))
        .collect::<dectlink::Result<Vec<_>>>()?;
    let spacing: Spacing = spacing.parse()?;
    let distances = sweep_distances(
        Distance::from_m(start)?,
        Distance::from_m(end)?,
        points,
        spacing,
    )?;
    let table = sweep_table(&built, &distances, common.execution());
    for (kind, n) in &table.flags {
        eprintln!(
            "note: {kind} raised validity flags at {n} of {} distances",
            distances.len()
        );
    }
    emit_csv(&cfg, &sweep_csv(&table, cfg.decimals)?, None)
}

fn cmd_analyze(common: &Common, captures: &[PathBuf]) -> CliResult {
    let cfg = common.resolve(&[])?;
    let budget = cfg.link_budget()?;
    let loaded = load_captures(captures, common.execution())?;
    for c in &loaded {
        for w in c.warnings() {
            eprintln!("warning: {w}");
        }
    }
    let records = summarize_all(&loaded, &budget, common.execution())?;
    emit_csv(
        &cfg,
        &records_csv(&records, cfg.decimals)?,
        Some(&records_table(&records)),
    )
}

fn read_points(path: &Path, column: &str) -> CliResult<Vec<(Distance, f64)>> {
    let name = path.display().to_string();
    let mut rdr = csv::ReaderBuilder::new()
        .comment(Some(b'#'))
        .from_path(path)
        .map_err(|e| CliError::Usage(format!("{name}: {e}")))?;
    let header = rdr
        .headers()
        .map_err(|e| CliError::Usage(format!("{name}: {e}")))?
        .clone();
    let find = |col: &str| {
        header
            .iter()
            .position(|h| h.trim() == col)
            .ok_or_else(|| CliError::Usage(format!("{name}: missing column `{col}`")))
    };
    let (di, yi) = (find("distance_m")?, find(column)?);
    let mut points = Vec::new();
    for row in rdr.records() {
        let row = row.map_err(|e| CliError::Usage(format!("{name}: {e}")))?;
        let line = row.position().map_or(0, |p| p.line());
        let num = |i: usize| -> CliResult<Option<f64>> {
            let raw = row.get(i).unwrap_or("").trim();
            if raw.is_empty() {
                return Ok(None);
            }
            raw.parse::<f64>()
                .map(Some)
                .map_err(|_| CliError::Usage(format!("{name}:{line}: `{raw}` is not a number")))
        };
        // Rows without a path-loss value (nothing received) are skipped.
        if let (Some(d), Some(y)) = (num(di)?, num(yi)?) {
            let d =
                Distance::from_m(d).map_err(|e| CliError::Usage(format!("{name}:{line}: {e}")))?;
            points.push((d, y));
        }
    }
    Ok(points)
}

fn fit_text(fit: &FitResult, points: usize, method: &str) -> String {
    format!(
        "model: pl0 + 10 n log10(d / {} m)\nmethod: {method}\npoints: {points}\npl0_db: {:.6}\nexponent: {:.6}\nrmse_db: {:.6}\niterations: {}\nconverged: {}\n",
        fit.model.reference.m(),
        fit.model.pl0_db,
        fit.model.exponent,
        fit.rmse_db,
        fit.iterations,
        fit.converged
    )
}

fn cmd_fit(common: &Common, input: &Path, column: &str, iterative: bool) -> CliResult {
    let cfg = common.resolve(&[])?;
    let points = read_points(input, column)?;
    let (fit, method) = if iterative {
        (fit_log_distance_iterative(&points)?, "levenberg-marquardt")
    } else {
        (fit_log_distance(&points)?, "closed-form")
    };
    if let Some(path) = &cfg.output {
        let mut csv = String::from("distance_m,observed_db,predicted_db,residual_db\n");
        for ((d, y), r) in points.iter().zip(&fit.residuals) {
            csv.push_str(&format!(
                "{},{},{},{}\n",
                fmt_num(d.m(), cfg.decimals),
                fmt_num(*y, cfg.decimals),
                fmt_num(fit.model.predict(*d), cfg.decimals),
                fmt_num(*r, cfg.decimals)
            ));
        }
        write_file(path, &csv)?;
    }
    print_out(&fit_text(&fit, points.len(), method))
}

fn cmd_plan(common: &Common, models: Option<&str>) -> CliResult {
    let extra: Vec<(&str, String)> = models
        .map(|m| ("models", m.to_string()))
        .into_iter()
        .collect();
    let cfg = common.resolve(&extra)?;
    let rows = plan(&cfg, common.execution())?;
    let csv = plan_csv(&rows, cfg.tx_power_dbm, cfg.decimals)?;
    let mut human = format!(
        "# noise figure {} dB is an assumed receiver value; snr floors indoor {} dB, outdoor {} dB\n",
        cfg.noise_figure_db, cfg.snr_floor_indoor_db, cfg.snr_floor_outdoor_db
    );
    for r in &rows {
        let line = match r.binding() {
            Some((c, d)) => format!(
                "{} {}: max distance {} m ({c} binds)\n",
                r.model,
                r.setting,
                fmt_num(d.m(), 2)
            ),
            None => format!("{} {}: threshold unreachable\n", r.model, r.setting),
        };
        human.push_str(&line);
    }
    emit_csv(&cfg, &csv, Some(&human))
}

fn cmd_report(common: &Common) -> CliResult {
    let cfg = common.resolve(&[])?;
    let rows = compare_path_loss(&fixtures::outdoor_path_loss()?, &cfg)?;
    let geom = report_geometry(&cfg)?;
    let mut human = format!(
        "# fspl tolerance {FSPL_TOLERANCE_DB} dB; two-ray/hata at h_tx {} m, h_rx {} m, {} city, {} (reference parameters unpublished)\n",
        geom.h_tx_m(),
        geom.h_rx_m(),
        cfg.city_size,
        cfg.area_class
    );
    for r in rows.iter().filter(|r| r.status == RowStatus::Flagged) {
        human.push_str(&format!(
            "flagged: {} {} computed {} dB vs reported {} dB\n",
            r.scenario,
            r.quantity,
            fmt_num(r.computed_db, 2),
            r.reported_db.map_or_else(|| "-".into(), |v| fmt_num(v, 2))
        ));
    }
    emit_csv(&cfg, &report_csv(&rows, cfg.decimals)?, Some(&human))
}

fn run(cli: Cli) -> CliResult {
    let common = &cli.common;
    match &cli.command {
        Command::Model { action } => match action {
            ModelCommand::Eval { model, distance_m } => cmd_model_eval(common, model, *distance_m),
            ModelCommand::Sweep {
                models,
                start,
                end,
                points,
                spacing,
            } => cmd_sweep(common, models, *start, *end, *points, spacing),
        },
        Command::Analyze { captures } => cmd_analyze(common, captures),
        Command::Fit {
            input,
            column,
            iterative,
        } => cmd_fit(common, input, column, *iterative),
        Command::Plan { models } => cmd_plan(common, models.as_deref()),
        Command::Report => cmd_report(common),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(CliError::Usage(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
        Err(CliError::Internal(msg)) => {
            eprintln!("internal error: {msg}");
            ExitCode::from(1)
        }
    }
}
