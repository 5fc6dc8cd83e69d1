//! Link budget: empirical path loss, predicted RX power and SNR, thermal
//! noise floor, reliability classification and the maximum-distance solver.

use std::fmt;
use std::str::FromStr;

use crate::error::{ensure_finite, ensure_positive, Error, Result};
use crate::propagation::PathLossModel;
use crate::units::{Distance, Frequency};

/// Thermal noise density at 290 K, dBm/Hz.
pub const THERMAL_NOISE_DBM_PER_HZ: f64 = -174.0;

/// DECT-2020 NR channel bandwidth, Hz.
pub const DEFAULT_BANDWIDTH_HZ: f64 = 1.728e6;

/// Solver search window on distance, m.
pub const SEARCH_MIN_M: f64 = 0.1;
pub const SEARCH_MAX_M: f64 = 1e6;

const BISECTION_REL_WIDTH: f64 = 1e-6;
const MAX_BRACKET_EXPANSIONS: usize = 64;

/// TX power with per-side gain-minus-loss corrections and receiver noise
/// parameters.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LinkBudget {
    pub tx_power_dbm: f64,
    /// `G_tx - L_tx`, dB.
    pub tx_correction_db: f64,
    /// `G_rx - L_rx`, dB.
    pub rx_correction_db: f64,
    pub bandwidth: Frequency,
    pub noise_figure_db: f64,
}

impl Default for LinkBudget {
    fn default() -> Self {
        Self {
            tx_power_dbm: 19.0,
            tx_correction_db: 1.0,
            rx_correction_db: 1.0,
            bandwidth: Frequency::from_hz(DEFAULT_BANDWIDTH_HZ).expect("positive constant"),
            noise_figure_db: 10.0,
        }
    }
}

impl LinkBudget {
    pub fn validate(&self) -> Result<()> {
        ensure_finite("tx power", self.tx_power_dbm)?;
        ensure_finite("tx correction", self.tx_correction_db)?;
        ensure_finite("rx correction", self.rx_correction_db)?;
        ensure_finite("noise figure", self.noise_figure_db)?;
        Ok(())
    }

    pub fn total_correction_db(&self) -> f64 {
        self.tx_correction_db + self.rx_correction_db
    }

    pub fn with_tx_power(mut self, dbm: f64) -> Self {
        self.tx_power_dbm = dbm;
        self
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Setting {
    Indoor,
    Outdoor,
}

impl fmt::Display for Setting {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Setting::Indoor => "indoor",
            Setting::Outdoor => "outdoor",
        })
    }
}

impl FromStr for Setting {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "indoor" => Ok(Setting::Indoor),
            "outdoor" => Ok(Setting::Outdoor),
            other => Err(Error::Config(format!("unknown setting `{other}`"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Criterion {
    Rssi,
    Snr,
}

impl fmt::Display for Criterion {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Criterion::Rssi => "rssi",
            Criterion::Snr => "snr",
        })
    }
}

impl FromStr for Criterion {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "rssi" => Ok(Criterion::Rssi),
            "snr" => Ok(Criterion::Snr),
            other => Err(Error::Config(format!("unknown criterion `{other}`"))),
        }
    }
}

/// Success-rate threshold and the RSSI/SNR floors at which it was observed
/// to hold.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ReliabilityThresholds {
    /// Percent; a link is reliable only when SR strictly exceeds this.
    pub min_success_rate: f64,
    pub rssi_floor_indoor_dbm: f64,
    pub rssi_floor_outdoor_dbm: f64,
    pub snr_floor_indoor_db: f64,
    pub snr_floor_outdoor_db: f64,
}

impl Default for ReliabilityThresholds {
    fn default() -> Self {
        Self {
            min_success_rate: 90.0,
            rssi_floor_indoor_dbm: -90.0,
            rssi_floor_outdoor_dbm: -95.0,
            snr_floor_indoor_db: 11.5,
            snr_floor_outdoor_db: 13.5,
        }
    }
}

impl ReliabilityThresholds {
    pub fn validate(&self) -> Result<()> {
        let sr = ensure_finite("min success rate", self.min_success_rate)?;
        if !(sr > 0.0 && sr <= 100.0) {
            return Err(Error::OutOfRange {
                quantity: "min success rate",
                value: sr,
                expected: "(0, 100]",
            });
        }
        ensure_finite("indoor rssi floor", self.rssi_floor_indoor_dbm)?;
        ensure_finite("outdoor rssi floor", self.rssi_floor_outdoor_dbm)?;
        ensure_finite("indoor snr floor", self.snr_floor_indoor_db)?;
        ensure_finite("outdoor snr floor", self.snr_floor_outdoor_db)?;
        Ok(())
    }

    pub fn rssi_floor_dbm(&self, setting: Setting) -> f64 {
        match setting {
            Setting::Indoor => self.rssi_floor_indoor_dbm,
            Setting::Outdoor => self.rssi_floor_outdoor_dbm,
        }
    }

    pub fn snr_floor_db(&self, setting: Setting) -> f64 {
        match setting {
            Setting::Indoor => self.snr_floor_indoor_db,
            Setting::Outdoor => self.snr_floor_outdoor_db,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Reliability {
    Reliable,
    Unreliable,
}

/// `P_tx - P_rx + (G_tx - L_tx) + (G_rx - L_rx)`.
pub fn empirical_pl(tx_power_dbm: f64, rx_power_dbm: f64, budget: &LinkBudget) -> Result<f64> {
    ensure_finite("tx power", tx_power_dbm)?;
    ensure_finite("rx power", rx_power_dbm)?;
    budget.validate()?;
    Ok(tx_power_dbm - rx_power_dbm + budget.tx_correction_db + budget.rx_correction_db)
}

/// RX power implied by a path loss: the inverse of [`empirical_pl`].
pub fn rx_power_for_loss(tx_power_dbm: f64, loss_db: f64, budget: &LinkBudget) -> f64 {
    tx_power_dbm + budget.total_correction_db() - loss_db
}

pub fn predict_rx_power(budget: &LinkBudget, model: &PathLossModel, d: Distance) -> f64 {
    rx_power_for_loss(budget.tx_power_dbm, model.loss_db(d), budget)
}

/// `-174 dBm/Hz + 10 log10(B) + NF`.
pub fn noise_floor(budget: &LinkBudget) -> f64 {
    THERMAL_NOISE_DBM_PER_HZ + 10.0 * budget.bandwidth.hz().log10() + budget.noise_figure_db
}

pub fn predict_snr(budget: &LinkBudget, model: &PathLossModel, d: Distance) -> f64 {
    predict_rx_power(budget, model, d) - noise_floor(budget)
}

/// RX power the link has to reach for the chosen criterion.
pub fn target_rx_power(
    budget: &LinkBudget,
    thresholds: &ReliabilityThresholds,
    setting: Setting,
    criterion: Criterion,
) -> f64 {
    match criterion {
        Criterion::Rssi => thresholds.rssi_floor_dbm(setting),
        Criterion::Snr => noise_floor(budget) + thresholds.snr_floor_db(setting),
    }
}

/// Largest distance at which predicted RX power reaches `target_dbm`.
///
/// Bisects on log10(d). The returned distance is the near end of the final
/// bracket, so predicted power there is at or above the target.
pub fn solve_distance_for_rx_power(
    budget: &LinkBudget,
    model: &PathLossModel,
    target_dbm: f64,
) -> Result<Distance> {
    ensure_finite("target rx power", target_dbm)?;
    let margin = |log_d: f64| -> f64 {
        let d = Distance::from_m(10f64.powf(log_d)).expect("positive by construction");
        predict_rx_power(budget, model, d) - target_dbm
    };

    let mut lo = SEARCH_MIN_M.log10();
    let at_min = margin(lo);
    if at_min < 0.0 {
        return Err(Error::ThresholdUnreachable {
            distance_m: SEARCH_MIN_M,
            predicted_dbm: at_min + target_dbm,
            target_dbm,
        });
    }

    let mut hi = SEARCH_MAX_M.log10();
    let mut expansions = 0;
    while margin(hi) >= 0.0 {
        lo = hi;
        hi += 2.0;
        expansions += 1;
        if expansions > MAX_BRACKET_EXPANSIONS {
            return Err(Error::InvalidRange(
                "predicted rx power never falls to the target".into(),
            ));
        }
    }

    // Width 1e-6 relative in d is log10(1 + 1e-6) in log-distance.
    let tol = (1.0 + BISECTION_REL_WIDTH).log10();
    while hi - lo > tol {
        let mid = 0.5 * (lo + hi);
        if margin(mid) >= 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Distance::from_m(10f64.powf(lo))
}

/// Maximum link distance at which the predicted RSSI (or SNR) still meets the
/// floor for `setting`.
pub fn max_link_distance(
    budget: &LinkBudget,
    model: &PathLossModel,
    thresholds: &ReliabilityThresholds,
    setting: Setting,
    criterion: Criterion,
) -> Result<Distance> {
    budget.validate()?;
    thresholds.validate()?;
    let target = target_rx_power(budget, thresholds, setting, criterion);
    solve_distance_for_rx_power(budget, model, target)
}

/// Reliable iff `sr` strictly exceeds the threshold.
pub fn classify_reliability(sr: f64, thresholds: &ReliabilityThresholds) -> Result<Reliability> {
    let sr = ensure_finite("success rate", sr)?;
    if !(0.0..=100.0).contains(&sr) {
        return Err(Error::OutOfRange {
            quantity: "success rate",
            value: sr,
            expected: "[0, 100]",
        });
    }
    Ok(if sr > thresholds.min_success_rate {
        Reliability::Reliable
    } else {
        Reliability::Unreliable
    })
}

/// Positive bandwidth check for configurations read as raw numbers.
pub fn bandwidth_from_hz(hz: f64) -> Result<Frequency> {
    ensure_positive("bandwidth", hz)?;
    Frequency::from_hz(hz)
}
