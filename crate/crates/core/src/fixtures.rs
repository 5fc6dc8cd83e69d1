//! Read-only reference data from the published measurement campaign.
//!
//! The CSV files under `fixtures/` are embedded at compile time. They are
//! transcriptions, not derived values; nothing here is recomputed.

use crate::campaign::Propagation;
use crate::error::{Error, Result};
use crate::link_budget::Setting;
use crate::units::Distance;

pub const CAMPAIGN_PARAMETERS_CSV: &str = include_str!("../fixtures/campaign_parameters.csv");
pub const INDOOR_MAX_DISTANCE_CSV: &str = include_str!("../fixtures/indoor_max_distance.csv");
pub const OUTDOOR_MAX_DISTANCE_CSV: &str = include_str!("../fixtures/outdoor_max_distance.csv");
pub const OUTDOOR_PATH_LOSS_CSV: &str = include_str!("../fixtures/outdoor_path_loss.csv");

/// TX power used for every outdoor path-loss row.
pub const OUTDOOR_PATH_LOSS_TX_DBM: f64 = 19.0;

/// One maximum-distance row.
#[derive(Debug, Clone, PartialEq)]
pub struct ScenarioFixture {
    pub name: String,
    pub propagation: Propagation,
    pub setting: Setting,
    pub separated_by: String,
    pub max_distance: Distance,
    pub min_tx_power_dbm: f64,
}

/// One outdoor path-loss row. Model columns are `None` where the source
/// reported no value.
#[derive(Debug, Clone, PartialEq)]
pub struct PathLossFixture {
    pub scenario: String,
    pub distance: Distance,
    pub height_difference_m: f64,
    pub empirical_pl_pcc_db: f64,
    pub empirical_pl_pdc_db: f64,
    pub fspl_db: f64,
    pub two_ray_db: Option<f64>,
    pub okumura_hata_db: Option<f64>,
    pub cost231_hata_db: Option<f64>,
}

fn reader(text: &str) -> csv::Reader<&[u8]> {
    csv::ReaderBuilder::new()
        .comment(Some(b'#'))
        .from_reader(text.as_bytes())
}

fn field<'a>(row: &'a csv::StringRecord, i: usize, source: &str) -> Result<&'a str> {
    row.get(i).ok_or_else(|| {
        Error::parse(
            source,
            row.position().map_or(0, |p| p.line()),
            format!("missing column {i}"),
        )
    })
}

fn number(row: &csv::StringRecord, i: usize, source: &str) -> Result<f64> {
    let raw = field(row, i, source)?;
    raw.trim().parse().map_err(|_| {
        Error::parse(
            source,
            row.position().map_or(0, |p| p.line()),
            format!("`{raw}` is not a number"),
        )
    })
}

fn optional(row: &csv::StringRecord, i: usize, source: &str) -> Result<Option<f64>> {
    if field(row, i, source)?.trim().is_empty() {
        Ok(None)
    } else {
        number(row, i, source).map(Some)
    }
}

fn parse_scenarios(text: &str, setting: Setting, source: &str) -> Result<Vec<ScenarioFixture>> {
    let mut out = Vec::new();
    for row in reader(text).records() {
        let row = row.map_err(|e| {
            Error::parse(source, e.position().map_or(0, |p| p.line()), e.to_string())
        })?;
        let propagation = match field(&row, 1, source)? {
            "LOS" => Propagation::Los,
            "NLOS" => Propagation::Nlos,
            other => {
                return Err(Error::parse(
                    source,
                    row.position().map_or(0, |p| p.line()),
                    format!("unknown propagation `{other}`"),
                ))
            }
        };
        out.push(ScenarioFixture {
            name: field(&row, 0, source)?.to_string(),
            propagation,
            setting,
            separated_by: field(&row, 2, source)?.to_string(),
            max_distance: Distance::from_m(number(&row, 3, source)?)?,
            min_tx_power_dbm: number(&row, 4, source)?,
        });
    }
    Ok(out)
}

pub fn indoor_scenarios() -> Result<Vec<ScenarioFixture>> {
    parse_scenarios(
        INDOOR_MAX_DISTANCE_CSV,
        Setting::Indoor,
        "indoor_max_distance.csv",
    )
}

pub fn outdoor_scenarios() -> Result<Vec<ScenarioFixture>> {
    parse_scenarios(
        OUTDOOR_MAX_DISTANCE_CSV,
        Setting::Outdoor,
        "outdoor_max_distance.csv",
    )
}

pub fn outdoor_path_loss() -> Result<Vec<PathLossFixture>> {
    let source = "outdoor_path_loss.csv";
    let mut out = Vec::new();
    for row in reader(OUTDOOR_PATH_LOSS_CSV).records() {
        let row = row.map_err(|e| {
            Error::parse(source, e.position().map_or(0, |p| p.line()), e.to_string())
        })?;
        out.push(PathLossFixture {
            scenario: field(&row, 0, source)?.to_string(),
            distance: Distance::from_m(number(&row, 1, source)?)?,
            height_difference_m: number(&row, 2, source)?,
            empirical_pl_pcc_db: number(&row, 3, source)?,
            empirical_pl_pdc_db: number(&row, 4, source)?,
            fspl_db: number(&row, 5, source)?,
            two_ray_db: optional(&row, 6, source)?,
            okumura_hata_db: optional(&row, 7, source)?,
            cost231_hata_db: optional(&row, 8, source)?,
        });
    }
    Ok(out)
}

/// `(parameter, value)` pairs of the campaign parameter table.
pub fn campaign_parameters() -> Result<Vec<(String, String)>> {
    let source = "campaign_parameters.csv";
    reader(CAMPAIGN_PARAMETERS_CSV)
        .records()
        .map(|row| {
            let row = row.map_err(|e| Error::parse(source, 0, e.to_string()))?;
            Ok((
                field(&row, 0, source)?.to_string(),
                field(&row, 1, source)?.to_string(),
            ))
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn row_counts() {
        assert_eq!(indoor_scenarios().unwrap().len(), 8);
        assert_eq!(outdoor_scenarios().unwrap().len(), 7);
        assert_eq!(outdoor_path_loss().unwrap().len(), 3);
        assert_eq!(campaign_parameters().unwrap().len(), 9);
    }

    #[test]
    fn quoted_fields_survive() {
        let indoor = indoor_scenarios().unwrap();
        assert_eq!(indoor[6].separated_by, "Brick Wall, Glass and Cubicles");
        assert_eq!(indoor[4].max_distance.m(), 10.71);
        let params = campaign_parameters().unwrap();
        assert_eq!(params[4].1, "-20 dBm, 0 dBm, +19 dBm");
    }

    #[test]
    fn unreported_model_columns_are_none() {
        let rows = outdoor_path_loss().unwrap();
        assert!(rows[1].okumura_hata_db.is_none() && rows[1].cost231_hata_db.is_none());
        assert_eq!(rows[1].two_ray_db, Some(115.0));
    }
}
