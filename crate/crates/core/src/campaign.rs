//! Measurement-campaign ingestion and per-location aggregation.
//!
//! A capture is one CSV log (one row per request) plus a `key=value`
//! metadata sidecar. Power averages are taken in the linear (mW) domain and
//! converted back to dB; standard deviations are taken directly on the dB
//! samples. Success rates always divide by the request count, so requests
//! missing from the log count as failures on both channels.

use std::fmt;
use std::fs;
use std::io::{Read, Write};
use std::path::{Path, PathBuf};
use std::str::FromStr;

use crate::error::{ensure_finite, Error, Result};
use crate::exec::{map_slice, Execution};
use crate::link_budget::{
    classify_reliability, empirical_pl, LinkBudget, Reliability, ReliabilityThresholds, Setting,
};
use crate::units::{dbm_to_mw, mw_to_dbm, Distance};

/// Exact capture CSV header.
pub const CAPTURE_HEADER: [&str; 6] = [
    "seq",
    "pcc_rssi_dbm",
    "pdc_rssi_dbm",
    "snr_db",
    "pcc_crc_ok",
    "pdc_crc_ok",
];

/// RSSI readings above this are kept but reported as suspicious.
pub const RSSI_WARN_DBM: f64 = 10.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Propagation {
    Los,
    Nlos,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Environment {
    pub propagation: Propagation,
    pub setting: Setting,
}

impl fmt::Display for Environment {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let p = match self.propagation {
            Propagation::Los => "los",
            Propagation::Nlos => "nlos",
        };
        write!(f, "{p}-{}", self.setting)
    }
}

impl FromStr for Environment {
    type Err = Error;

    /// Accepts `los-indoor`, `NLOS outdoor`, `nlos_indoor` and similar.
    fn from_str(s: &str) -> Result<Self> {
        let lower = s.trim().to_ascii_lowercase();
        let mut parts = lower
            .split(|c: char| c == '-' || c == '_' || c.is_whitespace())
            .filter(|p| !p.is_empty());
        let (Some(p), Some(setting), None) = (parts.next(), parts.next(), parts.next()) else {
            return Err(Error::Config(format!(
                "environment `{s}` must look like `los-indoor`"
            )));
        };
        let propagation = match p {
            "los" => Propagation::Los,
            "nlos" => Propagation::Nlos,
            other => return Err(Error::Config(format!("unknown propagation `{other}`"))),
        };
        Ok(Environment {
            propagation,
            setting: setting.parse()?,
        })
    }
}

/// One logged request. RSSI and SNR are absent when nothing was received.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MeasurementSample {
    pub sequence: u64,
    pub pcc_rssi_dbm: Option<f64>,
    pub pdc_rssi_dbm: Option<f64>,
    pub snr_db: Option<f64>,
    pub pcc_crc_ok: bool,
    pub pdc_crc_ok: bool,
}

impl MeasurementSample {
    pub fn received(
        sequence: u64,
        pcc: f64,
        pdc: f64,
        snr: f64,
        pcc_ok: bool,
        pdc_ok: bool,
    ) -> Self {
        Self {
            sequence,
            pcc_rssi_dbm: Some(pcc),
            pdc_rssi_dbm: Some(pdc),
            snr_db: Some(snr),
            pcc_crc_ok: pcc_ok,
            pdc_crc_ok: pdc_ok,
        }
    }

    pub fn lost(sequence: u64) -> Self {
        Self {
            sequence,
            pcc_rssi_dbm: None,
            pdc_rssi_dbm: None,
            snr_db: None,
            pcc_crc_ok: false,
            pdc_crc_ok: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LocationCapture {
    pub location_id: String,
    pub distance: Distance,
    pub environment: Environment,
    pub tx_power_dbm: f64,
    pub request_count: u64,
    pub samples: Vec<MeasurementSample>,
}

impl LocationCapture {
    pub fn pcc_ok_count(&self) -> u64 {
        self.samples.iter().filter(|s| s.pcc_crc_ok).count() as u64
    }

    pub fn pdc_ok_count(&self) -> u64 {
        self.samples.iter().filter(|s| s.pdc_crc_ok).count() as u64
    }

    pub fn validate(&self) -> Result<()> {
        ensure_finite("tx power", self.tx_power_dbm)?;
        if self.request_count == 0 {
            return Err(Error::ZeroRequests);
        }
        if self.samples.len() as u64 > self.request_count {
            return Err(Error::InvalidRange(format!(
                "{}: {} logged rows exceed request count {}",
                self.location_id,
                self.samples.len(),
                self.request_count
            )));
        }
        for s in &self.samples {
            for v in [s.pcc_rssi_dbm, s.pdc_rssi_dbm, s.snr_db]
                .into_iter()
                .flatten()
            {
                ensure_finite("sample", v)?;
            }
        }
        Ok(())
    }

    /// Human-readable notes on implausible readings.
    pub fn warnings(&self) -> Vec<String> {
        self.samples
            .iter()
            .flat_map(|s| {
                [("pcc", s.pcc_rssi_dbm), ("pdc", s.pdc_rssi_dbm)]
                    .into_iter()
                    .filter_map(move |(ch, v)| match v {
                        Some(v) if v > RSSI_WARN_DBM => Some(format!(
                            "{}: seq {} {ch} rssi {v} dBm above {RSSI_WARN_DBM} dBm",
                            self.location_id, s.sequence
                        )),
                        _ => None,
                    })
            })
            .collect()
    }
}

/// `10 log10(mean(10^(x/10)))`: the mean power of dB-valued samples.
pub fn mean_power_db(samples_db: &[f64]) -> Result<f64> {
    if samples_db.is_empty() {
        return Err(Error::Empty("power samples"));
    }
    for &x in samples_db {
        ensure_finite("power sample", x)?;
    }
    // Factor out the maximum so very small powers do not underflow.
    let peak = samples_db.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let sum: f64 = samples_db.iter().map(|&x| dbm_to_mw(x - peak)).sum();
    Ok(peak + mw_to_dbm(sum / samples_db.len() as f64))
}

/// Sample (n - 1) standard deviation; zero for a single value.
fn sample_std(values: &[f64]) -> f64 {
    let n = values.len();
    if n < 2 {
        return 0.0;
    }
    let mean = values.iter().sum::<f64>() / n as f64;
    let ss: f64 = values.iter().map(|v| (v - mean).powi(2)).sum();
    (ss / (n - 1) as f64).sqrt()
}

/// Percentage of requests whose CRC passed.
pub fn success_rate(ok_count: u64, request_count: u64) -> Result<f64> {
    if request_count == 0 {
        return Err(Error::ZeroRequests);
    }
    if ok_count > request_count {
        return Err(Error::InvalidRange(format!(
            "CRC-ok count {ok_count} exceeds request count {request_count}"
        )));
    }
    Ok(100.0 * ok_count as f64 / request_count as f64)
}

pub fn success_rate_pcc(capture: &LocationCapture) -> Result<f64> {
    success_rate(capture.pcc_ok_count(), capture.request_count)
}

pub fn success_rate_pdc(capture: &LocationCapture) -> Result<f64> {
    success_rate(capture.pdc_ok_count(), capture.request_count)
}

/// Statistics over the received dB values of one quantity.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LevelStats {
    /// Linear-domain mean, re-expressed in dB.
    pub mean: f64,
    /// Standard deviation of the dB values.
    pub std: f64,
    pub min: f64,
    pub max: f64,
    pub count: usize,
}

impl LevelStats {
    pub fn from_samples(values: &[f64]) -> Result<Self> {
        let mean = mean_power_db(values)?;
        let (min, max) = values
            .iter()
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &v| {
                (lo.min(v), hi.max(v))
            });
        Ok(Self {
            mean,
            std: sample_std(values),
            min,
            max,
            count: values.len(),
        })
    }
}

/// Per-location aggregate. Level statistics are `None` when nothing was
/// received on that quantity.
#[derive(Debug, Clone, PartialEq)]
pub struct CampaignRecord {
    pub location_id: String,
    pub distance: Distance,
    pub environment: Environment,
    pub tx_power_dbm: f64,
    pub request_count: u64,
    pub pcc_rssi: Option<LevelStats>,
    pub pdc_rssi: Option<LevelStats>,
    pub snr: Option<LevelStats>,
    pub sr_pcc: f64,
    pub sr_pdc: f64,
    pub empirical_pl_pcc_db: Option<f64>,
    pub empirical_pl_pdc_db: Option<f64>,
}

impl CampaignRecord {
    /// Both channels must be reliable.
    pub fn is_reliable(&self, thresholds: &ReliabilityThresholds) -> Result<bool> {
        Ok(
            classify_reliability(self.sr_pcc, thresholds)? == Reliability::Reliable
                && classify_reliability(self.sr_pdc, thresholds)? == Reliability::Reliable,
        )
    }
}

fn level_stats<F>(samples: &[MeasurementSample], pick: F) -> Result<Option<LevelStats>>
where
    F: Fn(&MeasurementSample) -> Option<f64>,
{
    let values: Vec<f64> = samples.iter().filter_map(pick).collect();
    if values.is_empty() {
        Ok(None)
    } else {
        LevelStats::from_samples(&values).map(Some)
    }
}

pub fn summarize(capture: &LocationCapture, budget: &LinkBudget) -> Result<CampaignRecord> {
    capture.validate()?;
    let pcc_rssi = level_stats(&capture.samples, |s| s.pcc_rssi_dbm)?;
    let pdc_rssi = level_stats(&capture.samples, |s| s.pdc_rssi_dbm)?;
    let snr = level_stats(&capture.samples, |s| s.snr_db)?;
    let pl = |stats: &Option<LevelStats>| -> Result<Option<f64>> {
        stats
            .map(|s| empirical_pl(capture.tx_power_dbm, s.mean, budget))
            .transpose()
    };
    Ok(CampaignRecord {
        location_id: capture.location_id.clone(),
        distance: capture.distance,
        environment: capture.environment,
        tx_power_dbm: capture.tx_power_dbm,
        request_count: capture.request_count,
        empirical_pl_pcc_db: pl(&pcc_rssi)?,
        empirical_pl_pdc_db: pl(&pdc_rssi)?,
        pcc_rssi,
        pdc_rssi,
        snr,
        sr_pcc: success_rate_pcc(capture)?,
        sr_pdc: success_rate_pdc(capture)?,
    })
}

/// Summarizes every capture and sorts the records by distance, then id.
pub fn summarize_all(
    captures: &[LocationCapture],
    budget: &LinkBudget,
    exec: Execution,
) -> Result<Vec<CampaignRecord>> {
    let mut records = map_slice(exec, captures, |c| summarize(c, budget))
        .into_iter()
        .collect::<Result<Vec<_>>>()?;
    sort_records(&mut records);
    Ok(records)
}

pub fn sort_records(records: &mut [CampaignRecord]) {
    records.sort_by(|a, b| {
        a.distance
            .m()
            .total_cmp(&b.distance.m())
            .then_with(|| a.location_id.cmp(&b.location_id))
    });
}

/// Largest distance in a location series where both channels are reliable.
pub fn max_reliable_distance(
    records: &[CampaignRecord],
    thresholds: &ReliabilityThresholds,
) -> Result<Distance> {
    if records.is_empty() {
        return Err(Error::Empty("campaign records"));
    }
    let mut best: Option<Distance> = None;
    for r in records {
        if r.is_reliable(thresholds)? && best.is_none_or(|b| r.distance.m() > b.m()) {
            best = Some(r.distance);
        }
    }
    best.ok_or(Error::NoReliablePoint)
}

// --- file formats ---------------------------------------------------------

fn parse_opt_f64(field: &str, name: &str, source: &str, line: u64) -> Result<Option<f64>> {
    let field = field.trim();
    if field.is_empty() {
        return Ok(None);
    }
    let v: f64 = field
        .parse()
        .map_err(|_| Error::parse(source, line, format!("{name}: `{field}` is not a number")))?;
    if !v.is_finite() {
        return Err(Error::parse(
            source,
            line,
            format!("{name}: `{field}` is not finite"),
        ));
    }
    Ok(Some(v))
}

fn parse_flag(field: &str, name: &str, source: &str, line: u64) -> Result<bool> {
    match field.trim() {
        "0" => Ok(false),
        "1" => Ok(true),
        other => Err(Error::parse(
            source,
            line,
            format!("{name}: expected 0 or 1, got `{other}`"),
        )),
    }
}

/// Parses a capture CSV. `source` labels errors.
pub fn read_capture_csv<R: Read>(reader: R, source: &str) -> Result<Vec<MeasurementSample>> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(true)
        .flexible(true)
        .from_reader(reader);
    let header = rdr
        .headers()
        .map_err(|e| Error::parse(source, 1, e.to_string()))?
        .clone();
    if header
        .iter()
        .map(str::trim)
        .ne(CAPTURE_HEADER.iter().copied())
    {
        return Err(Error::parse(
            source,
            1,
            format!("header must be `{}`", CAPTURE_HEADER.join(",")),
        ));
    }
    let mut samples = Vec::new();
    for row in rdr.records() {
        let row = row.map_err(|e| {
            let line = e.position().map_or(0, |p| p.line());
            Error::parse(source, line, e.to_string())
        })?;
        let line = row.position().map_or(0, |p| p.line());
        if row.len() != CAPTURE_HEADER.len() {
            return Err(Error::parse(
                source,
                line,
                format!(
                    "expected {} fields, got {}",
                    CAPTURE_HEADER.len(),
                    row.len()
                ),
            ));
        }
        let sequence = row[0].trim().parse::<u64>().map_err(|_| {
            Error::parse(
                source,
                line,
                format!("seq: `{}` is not an integer", &row[0]),
            )
        })?;
        let sample = MeasurementSample {
            sequence,
            pcc_rssi_dbm: parse_opt_f64(&row[1], "pcc_rssi_dbm", source, line)?,
            pdc_rssi_dbm: parse_opt_f64(&row[2], "pdc_rssi_dbm", source, line)?,
            snr_db: parse_opt_f64(&row[3], "snr_db", source, line)?,
            pcc_crc_ok: parse_flag(&row[4], "pcc_crc_ok", source, line)?,
            pdc_crc_ok: parse_flag(&row[5], "pdc_crc_ok", source, line)?,
        };
        if (sample.pcc_crc_ok && sample.pcc_rssi_dbm.is_none())
            || (sample.pdc_crc_ok && sample.pdc_rssi_dbm.is_none())
        {
            return Err(Error::parse(
                source,
                line,
                "CRC ok on a channel with no RSSI",
            ));
        }
        samples.push(sample);
    }
    Ok(samples)
}

pub fn write_capture_csv<W: Write>(
    samples: &[MeasurementSample],
    mut out: W,
) -> std::io::Result<()> {
    writeln!(out, "{}", CAPTURE_HEADER.join(","))?;
    let opt = |v: Option<f64>| v.map(|v| v.to_string()).unwrap_or_default();
    for s in samples {
        writeln!(
            out,
            "{},{},{},{},{},{}",
            s.sequence,
            opt(s.pcc_rssi_dbm),
            opt(s.pdc_rssi_dbm),
            opt(s.snr_db),
            u8::from(s.pcc_crc_ok),
            u8::from(s.pdc_crc_ok)
        )?;
    }
    Ok(())
}

/// Contents of the `key=value` sidecar next to a capture CSV.
#[derive(Debug, Clone, PartialEq)]
pub struct CaptureMetadata {
    pub location_id: String,
    pub distance: Distance,
    pub environment: Environment,
    pub tx_power_dbm: f64,
    pub request_count: u64,
}

impl CaptureMetadata {
    pub fn parse(text: &str, source: &str) -> Result<Self> {
        let pairs = crate::config::parse_key_values(text, source)?;
        let get = |key: &str| -> Result<&(u64, String)> {
            pairs
                .iter()
                .find(|(k, _)| k == key)
                .map(|(_, v)| v)
                .ok_or_else(|| Error::parse(source, 0, format!("missing key `{key}`")))
        };
        for (k, (line, _)) in &pairs {
            if ![
                "location_id",
                "distance_m",
                "environment",
                "p_tx_dbm",
                "request_count",
            ]
            .contains(&k.as_str())
            {
                return Err(Error::parse(source, *line, format!("unknown key `{k}`")));
            }
        }
        let num = |key: &str| -> Result<f64> {
            let (line, v) = get(key)?;
            v.parse::<f64>()
                .ok()
                .filter(|x| x.is_finite())
                .ok_or_else(|| Error::parse(source, *line, format!("{key}: `{v}` is not a number")))
        };
        let (env_line, env) = get("environment")?;
        let (req_line, req) = get("request_count")?;
        let (dist_line, _) = get("distance_m")?;
        Ok(Self {
            location_id: get("location_id")?.1.clone(),
            distance: Distance::from_m(num("distance_m")?)
                .map_err(|e| Error::parse(source, *dist_line, e.to_string()))?,
            environment: env
                .parse()
                .map_err(|e: Error| Error::parse(source, *env_line, e.to_string()))?,
            tx_power_dbm: num("p_tx_dbm")?,
            request_count: req.parse().map_err(|_| {
                Error::parse(
                    source,
                    *req_line,
                    format!("request_count: `{req}` is not a count"),
                )
            })?,
        })
    }

    pub fn to_text(&self) -> String {
        format!(
            "location_id={}\ndistance_m={}\nenvironment={}\np_tx_dbm={}\nrequest_count={}\n",
            self.location_id,
            self.distance.m(),
            self.environment,
            self.tx_power_dbm,
            self.request_count
        )
    }

    pub fn into_capture(self, samples: Vec<MeasurementSample>) -> LocationCapture {
        LocationCapture {
            location_id: self.location_id,
            distance: self.distance,
            environment: self.environment,
            tx_power_dbm: self.tx_power_dbm,
            request_count: self.request_count,
            samples,
        }
    }
}

/// Sidecar path for a capture: same stem, `.meta` extension.
pub fn metadata_path(capture_csv: &Path) -> PathBuf {
    capture_csv.with_extension("meta")
}

pub fn load_capture(path: &Path) -> Result<LocationCapture> {
    let name = path.display().to_string();
    let meta_path = metadata_path(path);
    let meta_text = fs::read_to_string(&meta_path)
        .map_err(|e| Error::Io(format!("{}: {e}", meta_path.display())))?;
    let meta = CaptureMetadata::parse(&meta_text, &meta_path.display().to_string())?;
    let file = fs::File::open(path).map_err(|e| Error::Io(format!("{name}: {e}")))?;
    let samples = read_capture_csv(std::io::BufReader::new(file), &name)?;
    let capture = meta.into_capture(samples);
    capture
        .validate()
        .map_err(|e| Error::Io(format!("{name}: {e}")))?;
    Ok(capture)
}

/// Loads captures, in input order.
pub fn load_captures(paths: &[PathBuf], exec: Execution) -> Result<Vec<LocationCapture>> {
    map_slice(exec, paths, |p| load_capture(p))
        .into_iter()
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn capture(samples: Vec<MeasurementSample>, requests: u64) -> LocationCapture {
        LocationCapture {
            location_id: "loc".into(),
            distance: Distance::from_m(61.0).unwrap(),
            environment: "nlos-indoor".parse().unwrap(),
            tx_power_dbm: 0.0,
            request_count: requests,
            samples,
        }
    }

    fn constant(n: u64, level: f64, ok: u64) -> Vec<MeasurementSample> {
        (0..n)
            .map(|i| MeasurementSample::received(i, level, level, 12.0, i < ok, i < ok))
            .collect()
    }

    #[test]
    fn mean_power_examples() {
        assert!((mean_power_db(&[-90.0, -90.0, -90.0]).unwrap() + 90.0).abs() < 1e-12);
        assert!((mean_power_db(&[-90.0, -100.0]).unwrap() + 92.596_373).abs() < 1e-6);
        assert!(matches!(mean_power_db(&[]), Err(Error::Empty(_))));
        assert!(mean_power_db(&[f64::NAN]).is_err());
        // No underflow for very weak levels.
        assert!((mean_power_db(&[-4000.0, -4000.0]).unwrap() + 4000.0).abs() < 1e-9);
    }

    #[test]
    fn success_rate_examples() {
        assert_eq!(success_rate(300, 300).unwrap(), 100.0);
        assert_eq!(success_rate(270, 300).unwrap(), 90.0);
        assert_eq!(success_rate(0, 300).unwrap(), 0.0);
        assert!(matches!(success_rate(0, 0), Err(Error::ZeroRequests)));
        assert!(success_rate(301, 300).is_err());
    }

    #[test]
    fn lost_requests_use_request_count_as_denominator() {
        let c = capture(constant(299, -80.0, 299), 300);
        assert!((success_rate_pcc(&c).unwrap() - 100.0 * 299.0 / 300.0).abs() < 1e-12);
        let mut rows = constant(300, -80.0, 300);
        rows[10] = MeasurementSample::lost(10);
        let c = capture(rows, 300);
        assert!((success_rate_pdc(&c).unwrap() - 100.0 * 299.0 / 300.0).abs() < 1e-12);
        let r = summarize(&c, &LinkBudget::default()).unwrap();
        assert_eq!(r.pcc_rssi.unwrap().count, 299);
    }

    #[test]
    fn summarize_constant_capture() {
        let budget = LinkBudget {
            tx_correction_db: 1.0,
            rx_correction_db: 1.0,
            ..LinkBudget::default()
        };
        let r = summarize(&capture(constant(300, -80.0, 300), 300), &budget).unwrap();
        let pcc = r.pcc_rssi.unwrap();
        assert!((pcc.mean + 80.0).abs() < 1e-12);
        assert_eq!(pcc.std, 0.0);
        assert!((r.empirical_pl_pcc_db.unwrap() - 82.0).abs() < 1e-12);
        assert_eq!(r.sr_pcc, 100.0);
    }

    #[test]
    fn summarize_with_nothing_received() {
        let rows = (0..5).map(MeasurementSample::lost).collect();
        let r = summarize(&capture(rows, 10), &LinkBudget::default()).unwrap();
        assert!(r.pcc_rssi.is_none() && r.empirical_pl_pdc_db.is_none());
        assert_eq!((r.sr_pcc, r.sr_pdc), (0.0, 0.0));
    }

    #[test]
    fn capture_validation() {
        assert!(matches!(
            summarize(&capture(vec![], 0), &LinkBudget::default()),
            Err(Error::ZeroRequests)
        ));
        assert!(summarize(&capture(constant(5, -80.0, 5), 4), &LinkBudget::default()).is_err());
    }

    fn record(d: f64, sr_pcc: f64, sr_pdc: f64) -> CampaignRecord {
        let mut r = summarize(&capture(constant(3, -80.0, 3), 3), &LinkBudget::default()).unwrap();
        r.distance = Distance::from_m(d).unwrap();
        r.sr_pcc = sr_pcc;
        r.sr_pdc = sr_pdc;
        r
    }

    #[test]
    fn max_reliable_distance_examples() {
        let th = ReliabilityThresholds::default();
        let all = [
            record(10.0, 100.0, 100.0),
            record(40.0, 99.0, 98.0),
            record(25.0, 95.0, 95.0),
        ];
        assert_eq!(max_reliable_distance(&all, &th).unwrap().m(), 40.0);
        assert_eq!(
            max_reliable_distance(&[record(61.0, 95.0, 95.0)], &th)
                .unwrap()
                .m(),
            61.0
        );
        let boundary = [record(10.0, 90.0, 90.0), record(20.0, 90.0, 90.0)];
        assert!(matches!(
            max_reliable_distance(&boundary, &th),
            Err(Error::NoReliablePoint)
        ));
        // One channel failing disqualifies the point.
        let mixed = [record(10.0, 95.0, 95.0), record(30.0, 95.0, 85.0)];
        assert_eq!(max_reliable_distance(&mixed, &th).unwrap().m(), 10.0);
        assert!(matches!(
            max_reliable_distance(&[], &th),
            Err(Error::Empty(_))
        ));
    }

    #[test]
    fn environment_parsing() {
        let e: Environment = "NLOS outdoor".parse().unwrap();
        assert_eq!(e.propagation, Propagation::Nlos);
        assert_eq!(e.setting, Setting::Outdoor);
        assert_eq!(e.to_string(), "nlos-outdoor");
        assert!("los".parse::<Environment>().is_err());
        assert!("los-indoor-x".parse::<Environment>().is_err());
    }

    #[test]
    fn csv_parsing() {
        let text = "seq,pcc_rssi_dbm,pdc_rssi_dbm,snr_db,pcc_crc_ok,pdc_crc_ok\n\
                    0,-80.5,-81,12.5,1,1\n\
                    1,,,,0,0\n\
                    2,-82,-83,11,1,0\n";
        let rows = read_capture_csv(text.as_bytes(), "t.csv").unwrap();
        assert_eq!(rows.len(), 3);
        assert_eq!(rows[1], MeasurementSample::lost(1));
        assert!(!rows[2].pdc_crc_ok);

        let mut out = Vec::new();
        write_capture_csv(&rows, &mut out).unwrap();
        assert_eq!(read_capture_csv(out.as_slice(), "rt").unwrap(), rows);
    }

    #[test]
    fn csv_errors_carry_line_numbers() {
        let bad_header = "seq,rssi\n0,1\n";
        assert!(matches!(
            read_capture_csv(bad_header.as_bytes(), "x"),
            Err(Error::Parse { line: 1, .. })
        ));
        let bad_flag = "seq,pcc_rssi_dbm,pdc_rssi_dbm,snr_db,pcc_crc_ok,pdc_crc_ok\n0,-80,-80,10,1,1\n1,-80,-80,10,2,1\n";
        assert!(matches!(
            read_capture_csv(bad_flag.as_bytes(), "x"),
            Err(Error::Parse { line: 3, .. })
        ));
        let bad_number =
            "seq,pcc_rssi_dbm,pdc_rssi_dbm,snr_db,pcc_crc_ok,pdc_crc_ok\n0,abc,-80,10,1,1\n";
        assert!(matches!(
            read_capture_csv(bad_number.as_bytes(), "x"),
            Err(Error::Parse { line: 2, .. })
        ));
        let ok_without_rssi =
            "seq,pcc_rssi_dbm,pdc_rssi_dbm,snr_db,pcc_crc_ok,pdc_crc_ok\n0,,,,1,0\n";
        assert!(read_capture_csv(ok_without_rssi.as_bytes(), "x").is_err());
        let short_row = "seq,pcc_rssi_dbm,pdc_rssi_dbm,snr_db,pcc_crc_ok,pdc_crc_ok\n0,-80,-80\n";
        assert!(matches!(
            read_capture_csv(short_row.as_bytes(), "x"),
            Err(Error::Parse { line: 2, .. })
        ));
    }

    #[test]
    fn metadata_round_trip_and_errors() {
        let text = "# Valmet office\nlocation_id=valmet-nlos\ndistance_m=61\nenvironment=nlos-indoor\np_tx_dbm=0\nrequest_count=300\n";
        let meta = CaptureMetadata::parse(text, "m").unwrap();
        assert_eq!(meta.request_count, 300);
        assert_eq!(CaptureMetadata::parse(&meta.to_text(), "m").unwrap(), meta);
        assert!(CaptureMetadata::parse("location_id=x\n", "m").is_err());
        let neg = text.replace("distance_m=61", "distance_m=-1");
        assert!(matches!(
            CaptureMetadata::parse(&neg, "m"),
            Err(Error::Parse { line: 3, .. })
        ));
        let extra = format!("{text}colour=blue\n");
        assert!(CaptureMetadata::parse(&extra, "m").is_err());
    }

    #[test]
    fn rssi_warnings() {
        let mut rows = constant(3, -80.0, 3);
        rows[1].pcc_rssi_dbm = Some(12.0);
        assert_eq!(capture(rows, 3).warnings().len(), 1);
    }

    proptest! {
        #[test]
        fn mean_power_bounds_and_shift(xs in prop::collection::vec(-130.0f64..0.0, 1..200), k in -30.0f64..30.0) {
            let m = mean_power_db(&xs).unwrap();
            let lo = xs.iter().copied().fold(f64::INFINITY, f64::min);
            let hi = xs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
            prop_assert!(m >= lo - 1e-9 && m <= hi + 1e-9);
            let arith = xs.iter().sum::<f64>() / xs.len() as f64;
            prop_assert!(m >= arith - 1e-9);
            let shifted: Vec<f64> = xs.iter().map(|x| x + k).collect();
            prop_assert!((mean_power_db(&shifted).unwrap() - (m + k)).abs() < 1e-9);
            let mut rev = xs.clone();
            rev.reverse();
            prop_assert!((mean_power_db(&rev).unwrap() - m).abs() < 1e-9);
        }

        #[test]
        fn flipping_a_failure_adds_one_request_worth(n in 1u64..500, fail_at in 0u64..500) {
            let fail_at = fail_at % n;
            let mut rows = constant(n, -85.0, n);
            rows[fail_at as usize].pcc_crc_ok = false;
            let c = capture(rows.clone(), n);
            let before = success_rate_pcc(&c).unwrap();
            rows[fail_at as usize].pcc_crc_ok = true;
            let after = success_rate_pcc(&capture(rows, n)).unwrap();
            prop_assert!((after - before - 100.0 / n as f64).abs() < 1e-9);
            prop_assert!((0.0..=100.0).contains(&before));
        }
    }
}
