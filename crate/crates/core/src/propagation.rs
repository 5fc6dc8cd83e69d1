//! Deterministic path-loss models.
//!
//! Six model kinds are provided: free space, 3GPP InH-LOS and InF-LOS, the
//! asymptotic two-ray ground reflection form, Okumura-Hata (urban) and
//! COST-231 Hata. All functions are pure; models outside their canonical
//! validity ranges still evaluate but return [`ValidityFlag`]s alongside the
//! value.

use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;

use crate::error::{ensure_positive, Error, Result};
use crate::exec::{map_slice, Execution};
use crate::units::{Distance, Frequency, SPEED_OF_LIGHT};

/// Okumura-Hata canonical frequency range, MHz.
pub const OKUMURA_HATA_MHZ: (f64, f64) = (150.0, 1500.0);
/// COST-231 Hata frequency range, MHz.
pub const COST231_MHZ: (f64, f64) = (500.0, 2000.0);
/// Hata base-station height range, m.
pub const HATA_BASE_HEIGHT_M: (f64, f64) = (30.0, 200.0);
/// Hata distance range, km.
pub const HATA_DISTANCE_KM: (f64, f64) = (1.0, 20.0);

/// Transmitter/receiver heights and the combined linear antenna gain used by
/// the two-ray and Hata models. For the Hata models `h_tx` is the base
/// station height and `h_rx` the mobile height.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AntennaGeometry {
    h_tx_m: f64,
    h_rx_m: f64,
    combined_gain: f64,
}

impl AntennaGeometry {
    pub fn new(h_tx_m: f64, h_rx_m: f64, combined_gain: f64) -> Result<Self> {
        Ok(Self {
            h_tx_m: ensure_positive("h_tx", h_tx_m)?,
            h_rx_m: ensure_positive("h_rx", h_rx_m)?,
            combined_gain: ensure_positive("combined antenna gain", combined_gain)?,
        })
    }

    /// Unity combined gain.
    pub fn with_heights(h_tx_m: f64, h_rx_m: f64) -> Result<Self> {
        Self::new(h_tx_m, h_rx_m, 1.0)
    }

    pub fn h_tx_m(&self) -> f64 {
        self.h_tx_m
    }

    pub fn h_rx_m(&self) -> f64 {
        self.h_rx_m
    }

    pub fn combined_gain(&self) -> f64 {
        self.combined_gain
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum CitySize {
    #[default]
    SmallMedium,
    Large,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum AreaClass {
    #[default]
    Urban,
    SuburbanOpen,
}

impl FromStr for CitySize {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "small-medium" | "small" | "medium" => Ok(CitySize::SmallMedium),
            "large" => Ok(CitySize::Large),
            other => Err(Error::Config(format!("unknown city size `{other}`"))),
        }
    }
}

impl FromStr for AreaClass {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "urban" => Ok(AreaClass::Urban),
            "suburban-open" | "suburban" | "open" => Ok(AreaClass::SuburbanOpen),
            other => Err(Error::Config(format!("unknown area class `{other}`"))),
        }
    }
}

impl fmt::Display for CitySize {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            CitySize::SmallMedium => "small-medium",
            CitySize::Large => "large",
        })
    }
}

impl fmt::Display for AreaClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            AreaClass::Urban => "urban",
            AreaClass::SuburbanOpen => "suburban-open",
        })
    }
}

/// City size selects the mobile-antenna height correction; area class sets
/// the COST-231 `C_m` term. Okumura-Hata here is the urban form and does not
/// use the area class.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct HataEnvironment {
    pub city_size: CitySize,
    pub area_class: AreaClass,
}

impl HataEnvironment {
    /// Mobile antenna height correction in dB (`C_H` / `a(h_m)`).
    pub fn height_correction_db(&self, f: Frequency, h_m: f64) -> f64 {
        hata_height_correction_db(self.city_size, f, h_m)
    }

    /// COST-231 `C_m`: 3 dB urban, 0 dB suburban/open.
    pub fn area_correction_db(&self) -> f64 {
        match self.area_class {
            AreaClass::Urban => 3.0,
            AreaClass::SuburbanOpen => 0.0,
        }
    }
}

/// Hata mobile antenna height correction.
///
/// Small/medium city: `(1.1 log f - 0.7) h_m - (1.56 log f - 0.8)`.
/// Large city: `3.2 (log 11.75 h_m)^2 - 4.97` for f >= 400 MHz, otherwise
/// `8.29 (log 1.54 h_m)^2 - 1.1`.
pub fn hata_height_correction_db(city: CitySize, f: Frequency, h_m: f64) -> f64 {
    let log_f = f.mhz().log10();
    match city {
        CitySize::SmallMedium => 0.8 + (1.1 * log_f - 0.7) * h_m - 1.56 * log_f,
        CitySize::Large if f.mhz() >= 400.0 => 3.2 * (11.75 * h_m).log10().powi(2) - 4.97,
        CitySize::Large => 8.29 * (1.54 * h_m).log10().powi(2) - 1.1,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum ModelKind {
    FreeSpace,
    InhLos,
    InfLos,
    TwoRay,
    OkumuraHata,
    Cost231Hata,
}

impl ModelKind {
    pub const ALL: [ModelKind; 6] = [
        ModelKind::FreeSpace,
        ModelKind::InhLos,
        ModelKind::InfLos,
        ModelKind::TwoRay,
        ModelKind::OkumuraHata,
        ModelKind::Cost231Hata,
    ];

    pub fn name(self) -> &'static str {
        match self {
            ModelKind::FreeSpace => "fspl",
            ModelKind::InhLos => "inh-los",
            ModelKind::InfLos => "inf-los",
            ModelKind::TwoRay => "two-ray",
            ModelKind::OkumuraHata => "okumura-hata",
            ModelKind::Cost231Hata => "cost231-hata",
        }
    }

    pub fn needs_geometry(self) -> bool {
        matches!(
            self,
            ModelKind::TwoRay | ModelKind::OkumuraHata | ModelKind::Cost231Hata
        )
    }
}

impl fmt::Display for ModelKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for ModelKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let key = s.trim().to_ascii_lowercase();
        let kind = match key.as_str() {
            "fspl" | "free-space" => ModelKind::FreeSpace,
            "inh-los" | "inh" => ModelKind::InhLos,
            "inf-los" | "inf" => ModelKind::InfLos,
            "two-ray" | "2-ray" | "tworay" => ModelKind::TwoRay,
            "okumura-hata" | "hata" => ModelKind::OkumuraHata,
            "cost231-hata" | "cost231" | "cost-231" => ModelKind::Cost231Hata,
            _ => return Err(Error::Config(format!("unknown model `{s}`"))),
        };
        Ok(kind)
    }
}

/// A condition under which a model value should not be trusted.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ValidityFlag {
    FrequencyOutOfRange {
        mhz: f64,
        range: (f64, f64),
    },
    BaseHeightOutOfRange {
        h_b_m: f64,
        range: (f64, f64),
    },
    DistanceOutOfRange {
        km: f64,
        range: (f64, f64),
    },
    /// Two-ray evaluated inside the crossover distance `4π h_t h_r / λ`.
    NearField {
        distance_m: f64,
        crossover_m: f64,
    },
}

impl fmt::Display for ValidityFlag {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match *self {
            ValidityFlag::FrequencyOutOfRange { mhz, range } => write!(
                f,
                "frequency-out-of-range: {mhz} MHz outside {}-{} MHz",
                range.0, range.1
            ),
            ValidityFlag::BaseHeightOutOfRange { h_b_m, range } => write!(
                f,
                "base-height-out-of-range: {h_b_m} m outside {}-{} m",
                range.0, range.1
            ),
            ValidityFlag::DistanceOutOfRange { km, range } => write!(
                f,
                "distance-out-of-range: {km} km outside {}-{} km",
                range.0, range.1
            ),
            ValidityFlag::NearField {
                distance_m,
                crossover_m,
            } => write!(
                f,
                "near-field: {distance_m} m below two-ray crossover {crossover_m:.2} m"
            ),
        }
    }
}

/// A path-loss value plus any validity flags raised while computing it.
#[derive(Debug, Clone, PartialEq)]
pub struct Evaluation {
    pub loss_db: f64,
    pub flags: Vec<ValidityFlag>,
}

impl Evaluation {
    fn clean(loss_db: f64) -> Self {
        Self {
            loss_db,
            flags: Vec::new(),
        }
    }
}

/// Free-space path loss, `20 log d + 20 log f + 20 log(4π/c)` with d in m
/// and f in Hz.
pub fn fspl(d: Distance, f: Frequency) -> f64 {
    20.0 * d.m().log10() + 20.0 * f.hz().log10() + 20.0 * (4.0 * PI / SPEED_OF_LIGHT).log10()
}

/// 3GPP InH-LOS: `32.4 + 17.3 log d + 20 log f_c`, d in m, f_c in GHz.
pub fn pl_inh_los(d: Distance, f: Frequency) -> f64 {
    32.4 + 17.3 * d.m().log10() + 20.0 * f.ghz().log10()
}

/// 3GPP InF-LOS: `31.84 + 21.5 log d + 19 log f_c`, d in m, f_c in GHz.
pub fn pl_inf_los(d: Distance, f: Frequency) -> f64 {
    31.84 + 21.50 * d.m().log10() + 19.0 * f.ghz().log10()
}

/// Asymptotic two-ray ground reflection loss,
/// `40 log d - 10 log(G h_t^2 h_r^2)`.
pub fn two_ray(d: Distance, geom: &AntennaGeometry) -> f64 {
    40.0 * d.m().log10()
        - 10.0 * (geom.combined_gain * geom.h_tx_m.powi(2) * geom.h_rx_m.powi(2)).log10()
}

/// Distance below which the asymptotic two-ray form does not hold.
pub fn two_ray_crossover_m(geom: &AntennaGeometry, f: Frequency) -> f64 {
    4.0 * PI * geom.h_tx_m * geom.h_rx_m / f.wavelength_m()
}

fn hata_distance_term(d: Distance, h_b: f64) -> f64 {
    (44.9 - 6.55 * h_b.log10()) * d.km().log10()
}

fn hata_flags(d: Distance, f: Frequency, h_b: f64, freq_range: (f64, f64)) -> Vec<ValidityFlag> {
    let mut flags = Vec::new();
    let outside = |v: f64, (lo, hi): (f64, f64)| v < lo || v > hi;
    if outside(f.mhz(), freq_range) {
        flags.push(ValidityFlag::FrequencyOutOfRange {
            mhz: f.mhz(),
            range: freq_range,
        });
    }
    if outside(h_b, HATA_BASE_HEIGHT_M) {
        flags.push(ValidityFlag::BaseHeightOutOfRange {
            h_b_m: h_b,
            range: HATA_BASE_HEIGHT_M,
        });
    }
    if outside(d.km(), HATA_DISTANCE_KM) {
        flags.push(ValidityFlag::DistanceOutOfRange {
            km: d.km(),
            range: HATA_DISTANCE_KM,
        });
    }
    flags
}

/// Okumura-Hata urban loss with f in MHz, d in km.
pub fn okumura_hata(
    d: Distance,
    f: Frequency,
    geom: &AntennaGeometry,
    env: &HataEnvironment,
) -> Evaluation {
    let h_b = geom.h_tx_m;
    let loss_db = 69.55 + 26.16 * f.mhz().log10()
        - 13.82 * h_b.log10()
        - env.height_correction_db(f, geom.h_rx_m)
        + hata_distance_term(d, h_b);
    Evaluation {
        loss_db,
        flags: hata_flags(d, f, h_b, OKUMURA_HATA_MHZ),
    }
}

/// COST-231 Hata loss with f in MHz, d in km.
pub fn cost231_hata(
    d: Distance,
    f: Frequency,
    geom: &AntennaGeometry,
    env: &HataEnvironment,
) -> Evaluation {
    let h_b = geom.h_tx_m;
    let loss_db = 46.3 + 33.9 * f.mhz().log10()
        - 13.82 * h_b.log10()
        - env.height_correction_db(f, geom.h_rx_m)
        + hata_distance_term(d, h_b)
        + env.area_correction_db();
    Evaluation {
        loss_db,
        flags: hata_flags(d, f, h_b, COST231_MHZ),
    }
}

/// A fully parameterized path-loss model.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum PathLossModel {
    FreeSpace {
        frequency: Frequency,
    },
    InhLos {
        frequency: Frequency,
    },
    InfLos {
        frequency: Frequency,
    },
    TwoRay {
        frequency: Frequency,
        geometry: AntennaGeometry,
    },
    OkumuraHata {
        frequency: Frequency,
        geometry: AntennaGeometry,
        environment: HataEnvironment,
    },
    Cost231Hata {
        frequency: Frequency,
        geometry: AntennaGeometry,
        environment: HataEnvironment,
    },
}

impl PathLossModel {
    /// Builds a model of `kind`. Fails when the kind needs geometry and none
    /// was given.
    pub fn build(
        kind: ModelKind,
        frequency: Frequency,
        geometry: Option<AntennaGeometry>,
        environment: HataEnvironment,
    ) -> Result<Self> {
        let need = || {
            geometry.ok_or_else(|| {
                Error::MissingParameter(format!(
                    "model `{kind}` requires antenna geometry (h_tx_m, h_rx_m)"
                ))
            })
        };
        Ok(match kind {
            ModelKind::FreeSpace => PathLossModel::FreeSpace { frequency },
            ModelKind::InhLos => PathLossModel::InhLos { frequency },
            ModelKind::InfLos => PathLossModel::InfLos { frequency },
            ModelKind::TwoRay => PathLossModel::TwoRay {
                frequency,
                geometry: need()?,
            },
            ModelKind::OkumuraHata => PathLossModel::OkumuraHata {
                frequency,
                geometry: need()?,
                environment,
            },
            ModelKind::Cost231Hata => PathLossModel::Cost231Hata {
                frequency,
                geometry: need()?,
                environment,
            },
        })
    }

    pub fn kind(&self) -> ModelKind {
        match self {
            PathLossModel::FreeSpace { .. } => ModelKind::FreeSpace,
            PathLossModel::InhLos { .. } => ModelKind::InhLos,
            PathLossModel::InfLos { .. } => ModelKind::InfLos,
            PathLossModel::TwoRay { .. } => ModelKind::TwoRay,
            PathLossModel::OkumuraHata { .. } => ModelKind::OkumuraHata,
            PathLossModel::Cost231Hata { .. } => ModelKind::Cost231Hata,
        }
    }

    pub fn frequency(&self) -> Frequency {
        match *self {
            PathLossModel::FreeSpace { frequency }
            | PathLossModel::InhLos { frequency }
            | PathLossModel::InfLos { frequency }
            | PathLossModel::TwoRay { frequency, .. }
            | PathLossModel::OkumuraHata { frequency, .. }
            | PathLossModel::Cost231Hata { frequency, .. } => frequency,
        }
    }

    pub fn evaluate(&self, d: Distance) -> Evaluation {
        match self {
            PathLossModel::FreeSpace { frequency } => Evaluation::clean(fspl(d, *frequency)),
            PathLossModel::InhLos { frequency } => Evaluation::clean(pl_inh_los(d, *frequency)),
            PathLossModel::InfLos { frequency } => Evaluation::clean(pl_inf_los(d, *frequency)),
            PathLossModel::TwoRay {
                frequency,
                geometry,
            } => {
                let mut eval = Evaluation::clean(two_ray(d, geometry));
                let crossover_m = two_ray_crossover_m(geometry, *frequency);
                if d.m() < crossover_m {
                    eval.flags.push(ValidityFlag::NearField {
                        distance_m: d.m(),
                        crossover_m,
                    });
                }
                eval
            }
            PathLossModel::OkumuraHata {
                frequency,
                geometry,
                environment,
            } => okumura_hata(d, *frequency, geometry, environment),
            PathLossModel::Cost231Hata {
                frequency,
                geometry,
                environment,
            } => cost231_hata(d, *frequency, geometry, environment),
        }
    }

    /// Path loss in dB, ignoring validity flags.
    pub fn loss_db(&self, d: Distance) -> f64 {
        self.evaluate(d).loss_db
    }

    /// dB of additional loss per decade of distance.
    pub fn decade_slope_db(&self) -> f64 {
        match self {
            PathLossModel::FreeSpace { .. } => 20.0,
            PathLossModel::InhLos { .. } => 17.3,
            PathLossModel::InfLos { .. } => 21.5,
            PathLossModel::TwoRay { .. } => 40.0,
            PathLossModel::OkumuraHata { geometry, .. }
            | PathLossModel::Cost231Hata { geometry, .. } => 44.9 - 6.55 * geometry.h_tx_m.log10(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Spacing {
    Linear,
    #[default]
    Log,
}

impl FromStr for Spacing {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "linear" | "lin" => Ok(Spacing::Linear),
            "log" => Ok(Spacing::Log),
            other => Err(Error::Config(format!("unknown spacing `{other}`"))),
        }
    }
}

/// Distances for a sweep. Endpoints are exactly `start` and `end`.
pub fn sweep_distances(
    start: Distance,
    end: Distance,
    points: usize,
    spacing: Spacing,
) -> Result<Vec<Distance>> {
    if points < 2 {
        return Err(Error::InvalidRange(format!(
            "sweep needs at least 2 points, got {points}"
        )));
    }
    if start.m() >= end.m() {
        return Err(Error::InvalidRange(format!(
            "sweep start {} m must be below end {} m",
            start.m(),
            end.m()
        )));
    }
    let last = points - 1;
    let (a, b) = match spacing {
        Spacing::Linear => (start.m(), end.m()),
        Spacing::Log => (start.m().log10(), end.m().log10()),
    };
    let mut out = Vec::with_capacity(points);
    out.push(start);
    for i in 1..last {
        let t = a + (b - a) * (i as f64) / (last as f64);
        let m = match spacing {
            Spacing::Linear => t,
            Spacing::Log => 10f64.powf(t),
        };
        out.push(Distance::from_m(m)?);
    }
    out.push(end);
    if out.windows(2).any(|w| w[0].m() >= w[1].m()) {
        return Err(Error::InvalidRange(
            "sweep resolution too fine for f64 distances".into(),
        ));
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepPoint {
    pub distance: Distance,
    pub loss_db: f64,
}

/// Evaluates `model` over a distance sweep.
pub fn evaluate_sweep(
    model: &PathLossModel,
    start: Distance,
    end: Distance,
    points: usize,
    spacing: Spacing,
    exec: Execution,
) -> Result<Vec<SweepPoint>> {
    let distances = sweep_distances(start, end, points, spacing)?;
    Ok(map_slice(exec, &distances, |&distance| SweepPoint {
        distance,
        loss_db: model.loss_db(distance),
    }))
}
