//! Table builders and deterministic CSV/text emitters behind the CLI.

use std::fmt::Write as _;

use crate::campaign::{CampaignRecord, LevelStats};
use crate::config::RunConfig;
use crate::error::{Error, Result};
use crate::exec::{map_slice, Execution};
use crate::fixtures::PathLossFixture;
use crate::link_budget::{max_link_distance, noise_floor, target_rx_power, Criterion, Setting};
use crate::propagation::{fspl, AntennaGeometry, ModelKind, PathLossModel, ValidityFlag};
use crate::units::{Distance, Frequency};

/// Largest accepted |computed - reported| for free-space rows.
pub const FSPL_TOLERANCE_DB: f64 = 0.25;

/// Heights used for the theoretical outdoor curves when none are configured.
pub const REFERENCE_TX_HEIGHT_M: f64 = 10.0;
pub const REFERENCE_RX_HEIGHT_M: f64 = 1.5;

/// Fixed-precision number without a negative zero.
pub fn fmt_num(v: f64, decimals: usize) -> String {
    let s = format!("{v:.decimals$}");
    if s.starts_with('-') && s[1..].chars().all(|c| c == '0' || c == '.') {
        s[1..].to_string()
    } else {
        s
    }
}

fn csv_string(rows: Vec<Vec<String>>) -> Result<String> {
    let mut w = csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_writer(Vec::new());
    for row in rows {
        w.write_record(&row).map_err(|e| Error::Io(e.to_string()))?;
    }
    let bytes = w.into_inner().map_err(|e| Error::Io(e.to_string()))?;
    String::from_utf8(bytes).map_err(|e| Error::Io(e.to_string()))
}

// --- sweep ------------------------------------------------------------------

/// Loss of every model at every distance, with the distinct flags raised.
pub struct SweepTable {
    pub models: Vec<ModelKind>,
    pub distances: Vec<Distance>,
    /// `rows[i][j]`: model `j` at distance `i`.
    pub rows: Vec<Vec<f64>>,
    pub flags: Vec<(ModelKind, usize)>,
}

pub fn sweep_table(
    models: &[PathLossModel],
    distances: &[Distance],
    exec: Execution,
) -> SweepTable {
    let evaluated = map_slice(exec, distances, |&d| {
        models.iter().map(|m| m.evaluate(d)).collect::<Vec<_>>()
    });
    let flags = models
        .iter()
        .enumerate()
        .map(|(j, m)| {
            let n = evaluated
                .iter()
                .filter(|row| !row[j].flags.is_empty())
                .count();
            (m.kind(), n)
        })
        .filter(|(_, n)| *n > 0)
        .collect();
    SweepTable {
        models: models.iter().map(PathLossModel::kind).collect(),
        distances: distances.to_vec(),
        rows: evaluated
            .into_iter()
            .map(|row| row.into_iter().map(|e| e.loss_db).collect())
            .collect(),
        flags,
    }
}

pub fn sweep_csv(table: &SweepTable, decimals: usize) -> Result<String> {
    let mut rows = Vec::with_capacity(table.rows.len() + 1);
    let mut header = vec!["distance_m".to_string()];
    header.extend(table.models.iter().map(|m| format!("{}_db", m.name())));
    rows.push(header);
    for (d, values) in table.distances.iter().zip(&table.rows) {
        let mut row = vec![fmt_num(d.m(), decimals)];
        row.extend(values.iter().map(|v| fmt_num(*v, decimals)));
        rows.push(row);
    }
    csv_string(rows)
}

// --- analyze ----------------------------------------------------------------

pub const RECORD_COLUMNS: [&str; 19] = [
    "location_id",
    "environment",
    "distance_m",
    "tx_power_dbm",
    "request_count",
    "sr_pcc_pct",
    "sr_pdc_pct",
    "mean_rssi_pcc_dbm",
    "std_rssi_pcc_db",
    "min_rssi_pcc_dbm",
    "max_rssi_pcc_dbm",
    "mean_rssi_pdc_dbm",
    "std_rssi_pdc_db",
    "min_rssi_pdc_dbm",
    "max_rssi_pdc_dbm",
    "mean_snr_db",
    "std_snr_db",
    "empirical_pl_pcc_db",
    "empirical_pl_pdc_db",
];

fn record_fields(r: &CampaignRecord, decimals: usize) -> Vec<String> {
    let opt = |v: Option<f64>| v.map(|v| fmt_num(v, decimals)).unwrap_or_default();
    let stats = |s: &Option<LevelStats>| -> [String; 4] {
        [
            opt(s.map(|s| s.mean)),
            opt(s.map(|s| s.std)),
            opt(s.map(|s| s.min)),
            opt(s.map(|s| s.max)),
        ]
    };
    let mut out = vec![
        r.location_id.clone(),
        r.environment.to_string(),
        fmt_num(r.distance.m(), decimals),
        fmt_num(r.tx_power_dbm, decimals),
        r.request_count.to_string(),
        fmt_num(r.sr_pcc, decimals),
        fmt_num(r.sr_pdc, decimals),
    ];
    out.extend(stats(&r.pcc_rssi));
    out.extend(stats(&r.pdc_rssi));
    out.push(opt(r.snr.map(|s| s.mean)));
    out.push(opt(r.snr.map(|s| s.std)));
    out.push(opt(r.empirical_pl_pcc_db));
    out.push(opt(r.empirical_pl_pdc_db));
    out
}

pub fn records_csv(records: &[CampaignRecord], decimals: usize) -> Result<String> {
    let mut rows = vec![RECORD_COLUMNS
        .iter()
        .map(|s| s.to_string())
        .collect::<Vec<_>>()];
    rows.extend(records.iter().map(|r| record_fields(r, decimals)));
    csv_string(rows)
}

pub fn records_table(records: &[CampaignRecord]) -> String {
    let mut s = String::new();
    let _ = writeln!(
        s,
        "{:<24} {:<13} {:>10} {:>7} {:>8} {:>8} {:>10} {:>10} {:>8} {:>9} {:>9}",
        "location",
        "environment",
        "dist (m)",
        "tx dBm",
        "SR pcc",
        "SR pdc",
        "RSSI pcc",
        "RSSI pdc",
        "std pcc",
        "PL pcc",
        "PL pdc"
    );
    let opt = |v: Option<f64>| v.map_or_else(|| "-".to_string(), |v| fmt_num(v, 2));
    for r in records {
        let _ = writeln!(
            s,
            "{:<24} {:<13} {:>10} {:>7} {:>8} {:>8} {:>10} {:>10} {:>8} {:>9} {:>9}",
            r.location_id,
            r.environment.to_string(),
            fmt_num(r.distance.m(), 2),
            fmt_num(r.tx_power_dbm, 2),
            fmt_num(r.sr_pcc, 2),
            fmt_num(r.sr_pdc, 2),
            opt(r.pcc_rssi.map(|x| x.mean)),
            opt(r.pdc_rssi.map(|x| x.mean)),
            opt(r.pcc_rssi.map(|x| x.std)),
            opt(r.empirical_pl_pcc_db),
            opt(r.empirical_pl_pdc_db),
        );
    }
    s
}

// --- plan -------------------------------------------------------------------

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum PlanOutcome {
    Reached(Distance),
    Unreachable,
}

impl PlanOutcome {
    pub fn distance(self) -> Option<Distance> {
        match self {
            PlanOutcome::Reached(d) => Some(d),
            PlanOutcome::Unreachable => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PlanRow {
    pub model: ModelKind,
    pub setting: Setting,
    pub rssi: PlanOutcome,
    pub snr: PlanOutcome,
    pub rssi_floor_dbm: f64,
    pub snr_floor_db: f64,
    pub noise_floor_dbm: f64,
}

impl PlanRow {
    /// The criterion giving the shorter range, and that range.
    pub fn binding(&self) -> Option<(Criterion, Distance)> {
        match (self.rssi.distance(), self.snr.distance()) {
            (Some(r), Some(s)) if s.m() < r.m() => Some((Criterion::Snr, s)),
            (Some(r), Some(_)) => Some((Criterion::Rssi, r)),
            // An unreachable criterion binds everything to zero range.
            _ => None,
        }
    }
}

fn solve(
    cfg_budget: &crate::link_budget::LinkBudget,
    model: &PathLossModel,
    th: &crate::link_budget::ReliabilityThresholds,
    setting: Setting,
    criterion: Criterion,
) -> Result<PlanOutcome> {
    match max_link_distance(cfg_budget, model, th, setting, criterion) {
        Ok(d) => Ok(PlanOutcome::Reached(d)),
        Err(Error::ThresholdUnreachable { .. }) => Ok(PlanOutcome::Unreachable),
        Err(e) => Err(e),
    }
}

/// Maximum link distance for every configured model and setting.
pub fn plan(config: &RunConfig, exec: Execution) -> Result<Vec<PlanRow>> {
    let budget = config.link_budget()?;
    let th = config.thresholds()?;
    let models = config
        .models
        .iter()
        .map(|&k| config.build_model(k))
        .collect::<Result<Vec<_>>>()?;
    let grid: Vec<(PathLossModel, Setting)> = models
        .iter()
        .flat_map(|m| config.settings().into_iter().map(move |s| (*m, s)))
        .collect();
    map_slice(exec, &grid, |(model, setting)| {
        Ok(PlanRow {
            model: model.kind(),
            setting: *setting,
            rssi: solve(&budget, model, &th, *setting, Criterion::Rssi)?,
            snr: solve(&budget, model, &th, *setting, Criterion::Snr)?,
            rssi_floor_dbm: target_rx_power(&budget, &th, *setting, Criterion::Rssi),
            snr_floor_db: th.snr_floor_db(*setting),
            noise_floor_dbm: noise_floor(&budget),
        })
    })
    .into_iter()
    .collect()
}

pub fn plan_csv(rows: &[PlanRow], tx_power_dbm: f64, decimals: usize) -> Result<String> {
    let outcome = |o: PlanOutcome| match o {
        PlanOutcome::Reached(d) => fmt_num(d.m(), decimals),
        PlanOutcome::Unreachable => "unreachable".to_string(),
    };
    let mut out = vec![[
        "model",
        "setting",
        "tx_power_dbm",
        "rssi_floor_dbm",
        "snr_floor_db",
        "noise_floor_dbm",
        "d_rssi_m",
        "d_snr_m",
        "d_max_m",
        "binding",
    ]
    .iter()
    .map(|s| s.to_string())
    .collect::<Vec<_>>()];
    for r in rows {
        let (binding, d_max) = match r.binding() {
            Some((c, d)) => (c.to_string(), fmt_num(d.m(), decimals)),
            None => ("unreachable".to_string(), "unreachable".to_string()),
        };
        out.push(vec![
            r.model.name().to_string(),
            r.setting.to_string(),
            fmt_num(tx_power_dbm, decimals),
            fmt_num(r.rssi_floor_dbm, decimals),
            fmt_num(r.snr_floor_db, decimals),
            fmt_num(r.noise_floor_dbm, decimals),
            outcome(r.rssi),
            outcome(r.snr),
            d_max,
            binding,
        ]);
    }
    csv_string(out)
}

// --- reference comparison -----------------------------------------------------

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RowStatus {
    /// Within tolerance of the reference value.
    Ok,
    /// Outside tolerance.
    Flagged,
    /// Reference depends on unpublished parameters; shown for information.
    Unverified,
    /// The reference reported no value.
    NotReported,
}

impl RowStatus {
    pub fn as_str(self) -> &'static str {
        match self {
            RowStatus::Ok => "ok",
            RowStatus::Flagged => "flagged",
            RowStatus::Unverified => "unverified",
            RowStatus::NotReported => "not-reported",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ReportRow {
    pub scenario: String,
    pub distance: Distance,
    pub quantity: ModelKind,
    pub reported_db: Option<f64>,
    pub computed_db: f64,
    pub flags: Vec<ValidityFlag>,
    pub status: RowStatus,
}

impl ReportRow {
    pub fn delta_db(&self) -> Option<f64> {
        self.reported_db.map(|r| self.computed_db - r)
    }
}

/// Geometry for model comparisons: the configured one, or the reference
/// 10 m / 1.5 m heights.
pub fn report_geometry(config: &RunConfig) -> Result<AntennaGeometry> {
    match config.geometry()? {
        Some(g) => Ok(g),
        None => AntennaGeometry::new(
            REFERENCE_TX_HEIGHT_M,
            REFERENCE_RX_HEIGHT_M,
            config.antenna_gain,
        ),
    }
}

/// Recomputes every model column of the outdoor path-loss reference rows.
pub fn compare_path_loss(
    fixtures: &[PathLossFixture],
    config: &RunConfig,
) -> Result<Vec<ReportRow>> {
    let f: Frequency = config.frequency()?;
    let geometry = report_geometry(config)?;
    let env = config.hata_environment();
    let mut rows = Vec::new();
    for fx in fixtures {
        let d = fx.distance;
        let computed = fspl(d, f);
        rows.push(ReportRow {
            scenario: fx.scenario.clone(),
            distance: d,
            quantity: ModelKind::FreeSpace,
            reported_db: Some(fx.fspl_db),
            computed_db: computed,
            flags: Vec::new(),
            status: if (computed - fx.fspl_db).abs() <= FSPL_TOLERANCE_DB {
                RowStatus::Ok
            } else {
                RowStatus::Flagged
            },
        });
        for (kind, reported) in [
            (ModelKind::TwoRay, fx.two_ray_db),
            (ModelKind::OkumuraHata, fx.okumura_hata_db),
            (ModelKind::Cost231Hata, fx.cost231_hata_db),
        ] {
            let eval = PathLossModel::build(kind, f, Some(geometry), env)?.evaluate(d);
            rows.push(ReportRow {
                scenario: fx.scenario.clone(),
                distance: d,
                quantity: kind,
                reported_db: reported,
                computed_db: eval.loss_db,
                flags: eval.flags,
                status: if reported.is_some() {
                    RowStatus::Unverified
                } else {
                    RowStatus::NotReported
                },
            });
        }
    }
    Ok(rows)
}

pub fn report_csv(rows: &[ReportRow], decimals: usize) -> Result<String> {
    let mut out = vec![[
        "scenario",
        "distance_m",
        "model",
        "reported_db",
        "computed_db",
        "delta_db",
        "status",
        "flags",
    ]
    .iter()
    .map(|s| s.to_string())
    .collect::<Vec<_>>()];
    for r in rows {
        let opt = |v: Option<f64>| v.map(|v| fmt_num(v, decimals)).unwrap_or_default();
        out.push(vec![
            r.scenario.clone(),
            fmt_num(r.distance.m(), decimals),
            r.quantity.name().to_string(),
            opt(r.reported_db),
            fmt_num(r.computed_db, decimals),
            opt(r.delta_db()),
            r.status.as_str().to_string(),
            r.flags
                .iter()
                .map(|f| match f {
                    ValidityFlag::FrequencyOutOfRange { .. } => "frequency",
                    ValidityFlag::BaseHeightOutOfRange { .. } => "base-height",
                    ValidityFlag::DistanceOutOfRange { .. } => "distance",
                    ValidityFlag::NearField { .. } => "near-field",
                })
                .collect::<Vec<_>>()
                .join(";"),
        ]);
    }
    csv_string(out)
}
