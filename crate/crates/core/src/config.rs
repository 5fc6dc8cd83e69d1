//! Flat `key=value` run configuration.
//!
//! Resolution order is documented default, then config file, then explicit
//! command-line overrides. Every field is addressable by key so the same
//! setter serves both layers.

use std::fmt::Write as _;
use std::path::PathBuf;

use crate::error::{Error, Result};
use crate::link_budget::{bandwidth_from_hz, LinkBudget, ReliabilityThresholds, Setting};
use crate::propagation::{
    AntennaGeometry, AreaClass, CitySize, HataEnvironment, ModelKind, PathLossModel,
};
use crate::units::Frequency;

/// Environment variable naming the config file when `--config` is absent.
pub const CONFIG_ENV_VAR: &str = "DECTLINK_CONFIG";

/// Parsed `key=value` lines as `(key, (line, value))`, in file order.
/// Blank lines and `#` comments are skipped; later duplicates win when
/// applied in order.
pub fn parse_key_values(text: &str, source: &str) -> Result<Vec<(String, (u64, String))>> {
    let mut out = Vec::new();
    for (idx, raw) in text.lines().enumerate() {
        let line_no = idx as u64 + 1;
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let Some((k, v)) = line.split_once('=') else {
            return Err(Error::parse(
                source,
                line_no,
                format!("expected key=value, got `{line}`"),
            ));
        };
        let key = k.trim();
        if key.is_empty() {
            return Err(Error::parse(source, line_no, "empty key"));
        }
        out.push((key.to_string(), (line_no, v.trim().to_string())));
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub frequency_hz: f64,
    pub bandwidth_hz: f64,
    pub tx_power_dbm: f64,
    pub tx_correction_db: f64,
    pub rx_correction_db: f64,
    pub noise_figure_db: f64,
    pub min_success_rate: f64,
    pub rssi_floor_indoor_dbm: f64,
    pub rssi_floor_outdoor_dbm: f64,
    pub snr_floor_indoor_db: f64,
    pub snr_floor_outdoor_db: f64,
    pub models: Vec<ModelKind>,
    pub h_tx_m: Option<f64>,
    pub h_rx_m: Option<f64>,
    pub antenna_gain: f64,
    pub city_size: CitySize,
    pub area_class: AreaClass,
    /// `None` plans for both settings.
    pub setting: Option<Setting>,
    pub decimals: usize,
    pub output: Option<PathBuf>,
}

impl Default for RunConfig {
    fn default() -> Self {
        let budget = LinkBudget::default();
        let th = ReliabilityThresholds::default();
        Self {
            frequency_hz: 1.899e9,
            bandwidth_hz: budget.bandwidth.hz(),
            tx_power_dbm: budget.tx_power_dbm,
            tx_correction_db: budget.tx_correction_db,
            rx_correction_db: budget.rx_correction_db,
            noise_figure_db: budget.noise_figure_db,
            min_success_rate: th.min_success_rate,
            rssi_floor_indoor_dbm: th.rssi_floor_indoor_dbm,
            rssi_floor_outdoor_dbm: th.rssi_floor_outdoor_dbm,
            snr_floor_indoor_db: th.snr_floor_indoor_db,
            snr_floor_outdoor_db: th.snr_floor_outdoor_db,
            models: vec![ModelKind::FreeSpace],
            h_tx_m: None,
            h_rx_m: None,
            antenna_gain: 1.0,
            city_size: CitySize::default(),
            area_class: AreaClass::default(),
            setting: None,
            decimals: 2,
            output: None,
        }
    }
}

fn num(key: &str, v: &str) -> Result<f64> {
    v.parse::<f64>()
        .ok()
        .filter(|x| x.is_finite())
        .ok_or_else(|| Error::Config(format!("{key}: `{v}` is not a finite number")))
}

fn opt_num(key: &str, v: &str) -> Result<Option<f64>> {
    if v.is_empty() || v == "none" {
        Ok(None)
    } else {
        num(key, v).map(Some)
    }
}

impl RunConfig {
    pub const KEYS: [&'static str; 20] = [
        "frequency_hz",
        "bandwidth_hz",
        "tx_power_dbm",
        "tx_correction_db",
        "rx_correction_db",
        "noise_figure_db",
        "min_success_rate",
        "rssi_floor_indoor_dbm",
        "rssi_floor_outdoor_dbm",
        "snr_floor_indoor_db",
        "snr_floor_outdoor_db",
        "models",
        "h_tx_m",
        "h_rx_m",
        "antenna_gain",
        "city_size",
        "area_class",
        "setting",
        "decimals",
        "output",
    ];

    /// Sets one field from its textual form.
    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        let v = value.trim();
        match key {
            "frequency_hz" => self.frequency_hz = num(key, v)?,
            "bandwidth_hz" => self.bandwidth_hz = num(key, v)?,
            "tx_power_dbm" => self.tx_power_dbm = num(key, v)?,
            "tx_correction_db" => self.tx_correction_db = num(key, v)?,
            "rx_correction_db" => self.rx_correction_db = num(key, v)?,
            "noise_figure_db" => self.noise_figure_db = num(key, v)?,
            "min_success_rate" => self.min_success_rate = num(key, v)?,
            "rssi_floor_indoor_dbm" => self.rssi_floor_indoor_dbm = num(key, v)?,
            "rssi_floor_outdoor_dbm" => self.rssi_floor_outdoor_dbm = num(key, v)?,
            "snr_floor_indoor_db" => self.snr_floor_indoor_db = num(key, v)?,
            "snr_floor_outdoor_db" => self.snr_floor_outdoor_db = num(key, v)?,
            "models" => {
                let models = if v == "all" {
                    ModelKind::ALL.to_vec()
                } else {
                    v.split(',')
                        .filter(|s| !s.trim().is_empty())
                        .map(str::parse)
                        .collect::<Result<Vec<ModelKind>>>()?
                };
                if models.is_empty() {
                    return Err(Error::Config("models: empty list".into()));
                }
                self.models = models;
            }
            "h_tx_m" => self.h_tx_m = opt_num(key, v)?,
            "h_rx_m" => self.h_rx_m = opt_num(key, v)?,
            "antenna_gain" => self.antenna_gain = num(key, v)?,
            "city_size" => self.city_size = v.parse()?,
            "area_class" => self.area_class = v.parse()?,
            "setting" => {
                self.setting = match v {
                    "" | "both" => None,
                    other => Some(other.parse()?),
                }
            }
            "decimals" => {
                self.decimals = v
                    .parse::<usize>()
                    .ok()
                    .filter(|d| *d <= 17)
                    .ok_or_else(|| Error::Config(format!("decimals: `{v}` is not in 0..=17")))?
            }
            "output" => {
                self.output = if v.is_empty() {
                    None
                } else {
                    Some(PathBuf::from(v))
                }
            }
            other => return Err(Error::Config(format!("unknown key `{other}`"))),
        }
        Ok(())
    }

    /// Textual form of one field, as accepted by [`RunConfig::set`].
    pub fn get(&self, key: &str) -> Option<String> {
        let opt = |v: Option<f64>| v.map(|x| x.to_string()).unwrap_or_else(|| "none".into());
        Some(match key {
            "frequency_hz" => self.frequency_hz.to_string(),
            "bandwidth_hz" => self.bandwidth_hz.to_string(),
            "tx_power_dbm" => self.tx_power_dbm.to_string(),
            "tx_correction_db" => self.tx_correction_db.to_string(),
            "rx_correction_db" => self.rx_correction_db.to_string(),
            "noise_figure_db" => self.noise_figure_db.to_string(),
            "min_success_rate" => self.min_success_rate.to_string(),
            "rssi_floor_indoor_dbm" => self.rssi_floor_indoor_dbm.to_string(),
            "rssi_floor_outdoor_dbm" => self.rssi_floor_outdoor_dbm.to_string(),
            "snr_floor_indoor_db" => self.snr_floor_indoor_db.to_string(),
            "snr_floor_outdoor_db" => self.snr_floor_outdoor_db.to_string(),
            "models" => self
                .models
                .iter()
                .map(|m| m.name())
                .collect::<Vec<_>>()
                .join(","),
            "h_tx_m" => opt(self.h_tx_m),
            "h_rx_m" => opt(self.h_rx_m),
            "antenna_gain" => self.antenna_gain.to_string(),
            "city_size" => self.city_size.to_string(),
            "area_class" => self.area_class.to_string(),
            "setting" => self
                .setting
                .map_or_else(|| "both".into(), |s| s.to_string()),
            "decimals" => self.decimals.to_string(),
            "output" => self
                .output
                .as_ref()
                .map(|p| p.display().to_string())
                .unwrap_or_default(),
            _ => return None,
        })
    }

    /// Applies parsed config-file pairs.
    pub fn apply_file(&mut self, text: &str, source: &str) -> Result<()> {
        for (key, (line, value)) in parse_key_values(text, source)? {
            self.set(&key, &value)
                .map_err(|e| Error::parse(source, line, e.to_string()))?;
        }
        Ok(())
    }

    /// Applies command-line overrides in order.
    pub fn apply_overrides<'a, I>(&mut self, pairs: I) -> Result<()>
    where
        I: IntoIterator<Item = (&'a str, &'a str)>,
    {
        for (k, v) in pairs {
            self.set(k, v)?;
        }
        Ok(())
    }

    /// Default, then file (if any), then overrides.
    pub fn resolve<'a, I>(file: Option<(&str, &str)>, overrides: I) -> Result<Self>
    where
        I: IntoIterator<Item = (&'a str, &'a str)>,
    {
        let mut cfg = Self::default();
        if let Some((text, source)) = file {
            cfg.apply_file(text, source)?;
        }
        cfg.apply_overrides(overrides)?;
        Ok(cfg)
    }

    pub fn to_text(&self) -> String {
        let mut s = String::new();
        for key in Self::KEYS {
            let _ = writeln!(s, "{key}={}", self.get(key).unwrap_or_default());
        }
        s
    }

    pub fn frequency(&self) -> Result<Frequency> {
        Frequency::from_hz(self.frequency_hz)
    }

    pub fn link_budget(&self) -> Result<LinkBudget> {
        let budget = LinkBudget {
            tx_power_dbm: self.tx_power_dbm,
            tx_correction_db: self.tx_correction_db,
            rx_correction_db: self.rx_correction_db,
            bandwidth: bandwidth_from_hz(self.bandwidth_hz)?,
            noise_figure_db: self.noise_figure_db,
        };
        budget.validate()?;
        Ok(budget)
    }

    pub fn thresholds(&self) -> Result<ReliabilityThresholds> {
        let th = ReliabilityThresholds {
            min_success_rate: self.min_success_rate,
            rssi_floor_indoor_dbm: self.rssi_floor_indoor_dbm,
            rssi_floor_outdoor_dbm: self.rssi_floor_outdoor_dbm,
            snr_floor_indoor_db: self.snr_floor_indoor_db,
            snr_floor_outdoor_db: self.snr_floor_outdoor_db,
        };
        th.validate()?;
        Ok(th)
    }

    /// Geometry when both heights are configured.
    pub fn geometry(&self) -> Result<Option<AntennaGeometry>> {
        match (self.h_tx_m, self.h_rx_m) {
            (Some(t), Some(r)) => AntennaGeometry::new(t, r, self.antenna_gain).map(Some),
            (None, None) => Ok(None),
            _ => Err(Error::MissingParameter(
                "both h_tx_m and h_rx_m must be given".into(),
            )),
        }
    }

    pub fn hata_environment(&self) -> HataEnvironment {
        HataEnvironment {
            city_size: self.city_size,
            area_class: self.area_class,
        }
    }

    pub fn build_model(&self, kind: ModelKind) -> Result<PathLossModel> {
        PathLossModel::build(
            kind,
            self.frequency()?,
            self.geometry()?,
            self.hata_environment(),
        )
    }

    pub fn settings(&self) -> Vec<Setting> {
        match self.setting {
            Some(s) => vec![s],
            None => vec![Setting::Indoor, Setting::Outdoor],
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    /// Two distinct non-default textual values per key.
    fn samples(key: &str) -> (&'static str, &'static str) {
        match key {
            "frequency_hz" => ("1.7e9", "2.1e9"),
            "bandwidth_hz" => ("3456000", "864000"),
            "tx_power_dbm" => ("0", "-20"),
            "tx_correction_db" => ("0.5", "2"),
            "rx_correction_db" => ("0.25", "3"),
            "noise_figure_db" => ("7", "5"),
            "min_success_rate" => ("95", "99"),
            "rssi_floor_indoor_dbm" => ("-88", "-92"),
            "rssi_floor_outdoor_dbm" => ("-97", "-99"),
            "snr_floor_indoor_db" => ("11", "12"),
            "snr_floor_outdoor_db" => ("12", "15"),
            "models" => ("two-ray", "inh-los,inf-los"),
            "h_tx_m" => ("10", "30"),
            "h_rx_m" => ("1.5", "2"),
            "antenna_gain" => ("2", "4"),
            "city_size" => ("large", "small-medium"),
            "area_class" => ("suburban-open", "urban"),
            "setting" => ("indoor", "outdoor"),
            "decimals" => ("4", "9"),
            "output" => ("a.csv", "b.csv"),
            other => panic!("no sample for {other}"),
        }
    }

    #[test]
    fn precedence_flag_over_file_over_default() {
        let defaults = RunConfig::default();
        for key in RunConfig::KEYS {
            let (file_v, flag_v) = samples(key);
            let file_text = format!("# test\n{key}={file_v}\n");

            let only_default = RunConfig::resolve(None, []).unwrap();
            assert_eq!(only_default.get(key), defaults.get(key), "{key}");

            let from_file = RunConfig::resolve(Some((&file_text, "cfg")), []).unwrap();
            assert_ne!(
                from_file.get(key),
                defaults.get(key),
                "{key}: file value must differ from default"
            );
            let mut want = RunConfig::default();
            want.set(key, file_v).unwrap();
            assert_eq!(from_file.get(key), want.get(key), "{key}");

            let from_flag = RunConfig::resolve(Some((&file_text, "cfg")), [(key, flag_v)]).unwrap();
            let mut want = RunConfig::default();
            want.set(key, flag_v).unwrap();
            assert_eq!(from_flag.get(key), want.get(key), "{key}");
            assert_ne!(from_flag.get(key), from_file.get(key), "{key}");

            // Other fields stay at their defaults.
            for other in RunConfig::KEYS.iter().filter(|k| **k != key) {
                assert_eq!(
                    from_flag.get(other),
                    defaults.get(other),
                    "{key} leaked into {other}"
                );
            }
        }
    }

    #[test]
    fn text_round_trip() {
        let mut cfg = RunConfig::default();
        for key in RunConfig::KEYS {
            cfg.set(key, samples(key).1).unwrap();
        }
        let back = RunConfig::resolve(Some((&cfg.to_text(), "rt")), []).unwrap();
        assert_eq!(back, cfg);
    }

    #[test]
    fn file_errors_report_lines() {
        let err =
            RunConfig::resolve(Some(("frequency_hz=1e9\n\nbogus=1\n", "cfg")), []).unwrap_err();
        assert!(matches!(err, Error::Parse { line: 3, .. }), "{err}");
        let err = RunConfig::resolve(Some(("tx_power_dbm\n", "cfg")), []).unwrap_err();
        assert!(matches!(err, Error::Parse { line: 1, .. }));
        assert!(RunConfig::resolve(None, [("frequency_hz", "abc")]).is_err());
        assert!(RunConfig::resolve(None, [("models", "fspl,warp")]).is_err());
    }

    #[test]
    fn derived_objects() {
        let cfg = RunConfig::default();
        assert_eq!(cfg.frequency().unwrap().mhz(), 1899.0);
        assert_eq!(cfg.link_budget().unwrap(), LinkBudget::default());
        assert_eq!(cfg.thresholds().unwrap(), ReliabilityThresholds::default());
        assert!(cfg.geometry().unwrap().is_none());
        assert!(cfg.build_model(ModelKind::TwoRay).is_err());
        assert!(cfg.build_model(ModelKind::FreeSpace).is_ok());

        let half = RunConfig::resolve(None, [("h_tx_m", "10")]).unwrap();
        assert!(half.geometry().is_err());
        let full = RunConfig::resolve(None, [("h_tx_m", "10"), ("h_rx_m", "1.5")]).unwrap();
        assert!(full.build_model(ModelKind::Cost231Hata).is_ok());
        assert_eq!(full.settings().len(), 2);
        let all = RunConfig::resolve(None, [("models", "all")]).unwrap();
        assert_eq!(all.models.len(), 6);
    }
}
