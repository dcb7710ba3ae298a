//! Scenario constants, unit conversions and the flat key/value config format.
//!
//! A config file is UTF-8 text with one `key = value` pair per line; `#`
//! starts a comment. Keys are the field names of [`SystemParams`] and
//! [`ScenarioGeometry`]; anything else is rejected.

use serde::Serialize;

use crate::error::{Error, Result};

/// Load resistance of the tag's energy detector. Only τ shapes the
/// dynamics; the resistance only scales the peak voltage.
pub const LOAD_RESISTANCE_OHM: f64 = 1_000.0;

pub fn dbm_to_watts(dbm: f64) -> f64 {
    10f64.powf((dbm - 30.0) / 10.0)
}

pub fn watts_to_dbm(watts: f64) -> f64 {
    10.0 * watts.log10() + 30.0
}

pub fn db_to_linear(db: f64) -> f64 {
    10f64.powf(db / 10.0)
}

pub fn linear_to_db(linear: f64) -> f64 {
    10.0 * linear.log10()
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SystemParams {
    pub source_power_dbm: f64,
    pub noise_power_reader_dbm: f64,
    pub noise_power_eve_dbm: f64,
    /// Carried for completeness; no implemented metric consumes it.
    pub spectral_efficiency_bps_hz: f64,
    pub pathloss_exp_direct: f64,
    pub pathloss_exp_ris: f64,
    /// 0 is the "No RIS" baseline.
    pub ris_elements: usize,
    pub rc_time_constant_s: f64,
    pub rectifier_efficiency: f64,
    /// Absolute comparator threshold ε in volts. When unset the tag uses
    /// `comparator_threshold_frac` of its stored peak voltage.
    pub comparator_threshold_v: Option<f64>,
    pub comparator_threshold_frac: f64,
    pub rss_ratio_threshold: f64,
    /// Correlation ρ between the registration slot and the authentication slot.
    pub temporal_correlation: f64,
    pub symbol_period_s: f64,
    pub profile_length: usize,
    /// Number of reply symbols the reader integrates into one RSS estimate.
    pub rss_averaging_symbols: usize,
    /// Phase resolution of the RIS hardware; 0 means continuous.
    pub ris_phase_bits: u32,
}

impl Default for SystemParams {
    fn default() -> Self {
        default_params()
    }
}

pub fn default_params() -> SystemParams {
    SystemParams {
        source_power_dbm: 1.0,
        noise_power_reader_dbm: -30.0,
        noise_power_eve_dbm: -20.0,
        spectral_efficiency_bps_hz: 1.0,
        pathloss_exp_direct: 3.5,
        pathloss_exp_ris: 2.5,
        ris_elements: 100,
        rc_time_constant_s: 1e-3,
        rectifier_efficiency: 0.5,
        comparator_threshold_v: None,
        comparator_threshold_frac: 0.05,
        rss_ratio_threshold: 0.9,
        temporal_correlation: 0.99,
        symbol_period_s: 10e-3,
        profile_length: 16,
        rss_averaging_symbols: 128,
        ris_phase_bits: 4,
    }
}

impl SystemParams {
    pub fn source_power_w(&self) -> f64 {
        dbm_to_watts(self.source_power_dbm)
    }

    pub fn noise_reader_w(&self) -> f64 {
        dbm_to_watts(self.noise_power_reader_dbm)
    }

    pub fn noise_eve_w(&self) -> f64 {
        dbm_to_watts(self.noise_power_eve_dbm)
    }

    pub fn with_ris_elements(&self, n: usize) -> Self {
        SystemParams {
            ris_elements: n,
            ..self.clone()
        }
    }

    pub fn validate(&self) -> Result<()> {
        let finite = [
            ("source_power_dbm", self.source_power_dbm),
            ("noise_power_reader_dbm", self.noise_power_reader_dbm),
            ("noise_power_eve_dbm", self.noise_power_eve_dbm),
            ("spectral_efficiency_bps_hz", self.spectral_efficiency_bps_hz),
        ];
        for (field, v) in finite {
            if !v.is_finite() {
                return Err(Error::config(field, "must be finite"));
            }
        }
        for (field, v) in [
            ("pathloss_exp_direct", self.pathloss_exp_direct),
            ("pathloss_exp_ris", self.pathloss_exp_ris),
        ] {
            if !(2.0..=6.0).contains(&v) {
                return Err(Error::config(field, format!("{v} outside [2, 6]")));
            }
        }
        if !(self.rc_time_constant_s > 0.0) {
            return Err(Error::config("rc_time_constant_s", "must be > 0"));
        }
        if !(self.rectifier_efficiency > 0.0 && self.rectifier_efficiency <= 1.0) {
            return Err(Error::config("rectifier_efficiency", "must lie in (0, 1]"));
        }
        if let Some(eps) = self.comparator_threshold_v {
            if !(eps > 0.0) {
                return Err(Error::config("comparator_threshold_v", "must be > 0"));
            }
        }
        if !(self.comparator_threshold_frac > 0.0) {
            return Err(Error::config("comparator_threshold_frac", "must be > 0"));
        }
        if !(self.rss_ratio_threshold > 0.0 && self.rss_ratio_threshold <= 1.0) {
            return Err(Error::config("rss_ratio_threshold", "must lie in (0, 1]"));
        }
        if !(0.0..=1.0).contains(&self.temporal_correlation) {
            return Err(Error::config("temporal_correlation", "must lie in [0, 1]"));
        }
        if !(self.symbol_period_s > 0.0) {
            return Err(Error::config("symbol_period_s", "must be > 0"));
        }
        if self.profile_length == 0 {
            return Err(Error::config("profile_length", "must be >= 1"));
        }
        if self.rss_averaging_symbols == 0 {
            return Err(Error::config("rss_averaging_symbols", "must be >= 1"));
        }
        if self.ris_phase_bits > 16 {
            return Err(Error::config("ris_phase_bits", "must be <= 16"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ScenarioGeometry {
    pub d_reader_ris_m: f64,
    pub d_tag_ris_m: f64,
    pub d_tag_eve_m: f64,
    pub d_reader_eve_m: f64,
    pub d_eve_ris_m: f64,
    pub d_tag_reader_m: f64,
}

impl Default for ScenarioGeometry {
    fn default() -> Self {
        default_geometry()
    }
}

pub fn default_geometry() -> ScenarioGeometry {
    ScenarioGeometry {
        d_reader_ris_m: 1.0,
        d_tag_ris_m: 1.0,
        d_tag_eve_m: 1.0,
        d_reader_eve_m: 1.0,
        d_eve_ris_m: 0.8,
        d_tag_reader_m: 2.0,
    }
}

impl ScenarioGeometry {
    pub fn validate(&self) -> Result<()> {
        for (field, d) in [
            ("d_reader_ris_m", self.d_reader_ris_m),
            ("d_tag_ris_m", self.d_tag_ris_m),
            ("d_tag_eve_m", self.d_tag_eve_m),
            ("d_reader_eve_m", self.d_reader_eve_m),
            ("d_eve_ris_m", self.d_eve_ris_m),
            ("d_tag_reader_m", self.d_tag_reader_m),
        ] {
            if !(d > 0.0 && d.is_finite()) {
                return Err(Error::config(field, format!("distance must be > 0, got {d}")));
            }
        }
        Ok(())
    }
}

/// Parameters plus geometry, the unit a config file resolves to.
#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct Scenario {
    pub params: SystemParams,
    pub geometry: ScenarioGeometry,
}

impl Scenario {
    /// Parses a config file body. Unknown keys are an error.
    pub fn from_kv_str(text: &str) -> Result<Self> {
        let mut scenario = Scenario::default();
        for entry in parse_kv(text)? {
            if !scenario.set(&entry.key, &entry.value)? {
                return Err(Error::config(&entry.key, "unknown key"));
            }
        }
        scenario.validate()?;
        Ok(scenario)
    }

    pub fn validate(&self) -> Result<()> {
        self.params.validate()?;
        self.geometry.validate()
    }

    /// Applies one override. Returns `Ok(false)` when `key` names no field.
    pub fn set(&mut self, key: &str, value: &str) -> Result<bool> {
        let p = &mut self.params;
        let g = &mut self.geometry;
        match key {
            "source_power_dbm" => p.source_power_dbm = parse_f64(key, value)?,
            "noise_power_reader_dbm" => p.noise_power_reader_dbm = parse_f64(key, value)?,
            "noise_power_eve_dbm" => p.noise_power_eve_dbm = parse_f64(key, value)?,
            "spectral_efficiency_bps_hz" => p.spectral_efficiency_bps_hz = parse_f64(key, value)?,
            "pathloss_exp_direct" => p.pathloss_exp_direct = parse_f64(key, value)?,
            "pathloss_exp_ris" => p.pathloss_exp_ris = parse_f64(key, value)?,
            "ris_elements" => p.ris_elements = parse_usize(key, value)?,
            "rc_time_constant_s" => p.rc_time_constant_s = parse_f64(key, value)?,
            "rectifier_efficiency" => p.rectifier_efficiency = parse_f64(key, value)?,
            "comparator_threshold_v" => {
                p.comparator_threshold_v = match value {
                    "none" | "auto" => None,
                    v => Some(parse_f64(key, v)?),
                }
            }
            "comparator_threshold_frac" => p.comparator_threshold_frac = parse_f64(key, value)?,
            "rss_ratio_threshold" => p.rss_ratio_threshold = parse_f64(key, value)?,
            "temporal_correlation" => p.temporal_correlation = parse_f64(key, value)?,
            "symbol_period_s" => p.symbol_period_s = parse_f64(key, value)?,
            "profile_length" => p.profile_length = parse_usize(key, value)?,
            "rss_averaging_symbols" => p.rss_averaging_symbols = parse_usize(key, value)?,
            "ris_phase_bits" => p.ris_phase_bits = parse_u32(key, value)?,
            "d_reader_ris_m" => g.d_reader_ris_m = parse_f64(key, value)?,
            "d_tag_ris_m" => g.d_tag_ris_m = parse_f64(key, value)?,
            "d_tag_eve_m" => g.d_tag_eve_m = parse_f64(key, value)?,
            "d_reader_eve_m" => g.d_reader_eve_m = parse_f64(key, value)?,
            "d_eve_ris_m" => g.d_eve_ris_m = parse_f64(key, value)?,
            "d_tag_reader_m" => g.d_tag_reader_m = parse_f64(key, value)?,
            _ => return Ok(false),
        }
        Ok(true)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct KvEntry {
    pub line: usize,
    pub key: String,
    pub value: String,
}

/// Splits a flat `key = value` document into entries, rejecting malformed
/// lines and repeated keys.
pub fn parse_kv(text: &str) -> Result<Vec<KvEntry>> {
    let mut out: Vec<KvEntry> = Vec::new();
    for (idx, raw) in text.lines().enumerate() {
        let line = idx + 1;
        let content = raw.split('#').next().unwrap_or("").trim();
        if content.is_empty() {
            continue;
        }
        let (key, value) = content.split_once('=').ok_or_else(|| Error::Parse {
            line,
            message: format!("expected `key = value`, got `{content}`"),
        })?;
        let key = key.trim();
        if key.is_empty() {
            return Err(Error::Parse {
                line,
                message: "empty key".into(),
            });
        }
        let value = value.trim().trim_matches('"').trim();
        if out.iter().any(|e| e.key == key) {
            return Err(Error::config(key, format!("duplicate key at line {line}")));
        }
        out.push(KvEntry {
            line,
            key: key.to_string(),
            value: value.to_string(),
        });
    }
    Ok(out)
}

pub(crate) fn parse_f64(field: &str, value: &str) -> Result<f64> {
    value
        .parse::<f64>()
        .map_err(|_| Error::config(field, format!("expected a number, got `{value}`")))
}

pub(crate) fn parse_usize(field: &str, value: &str) -> Result<usize> {
    value
        .parse::<usize>()
        .map_err(|_| Error::config(field, format!("expected a non-negative integer, got `{value}`")))
}

pub(crate) fn parse_u32(field: &str, value: &str) -> Result<u32> {
    value
        .parse::<u32>()
        .map_err(|_| Error::config(field, format!("expected a non-negative integer, got `{value}`")))
}

pub(crate) fn parse_u64(field: &str, value: &str) -> Result<u64> {
    value
        .parse::<u64>()
        .map_err(|_| Error::config(field, format!("expected a non-negative integer, got `{value}`")))
}

pub(crate) fn parse_list<T>(
    field: &str,
    value: &str,
    parse: impl Fn(&str, &str) -> Result<T>,
) -> Result<Vec<T>> {
    value
        .split([',', ' '])
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(|s| parse(field, s))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn dbm_conversion_anchors() {
        assert_eq!(dbm_to_watts(30.0), 1.0);
        assert!((dbm_to_watts(0.0) - 1e-3).abs() < 1e-18);
        assert!((dbm_to_watts(-30.0) - 1e-6).abs() < 1e-21);
        assert!((watts_to_dbm(dbm_to_watts(-17.25)) + 17.25).abs() < 1e-12);
    }

    #[test]
    fn defaults_match_the_published_setup() {
        let p = default_params();
        assert_eq!(p.source_power_dbm, 1.0);
        assert_eq!(p.noise_power_reader_dbm, -30.0);
        assert_eq!(p.noise_power_eve_dbm, -20.0);
        assert_eq!(p.spectral_efficiency_bps_hz, 1.0);
        assert_eq!(p.pathloss_exp_direct, 3.5);
        assert_eq!(p.pathloss_exp_ris, 2.5);
        let g = default_geometry();
        assert_eq!(g.d_eve_ris_m, 0.8);
        assert_eq!(g.d_tag_ris_m, 1.0);
        assert_eq!(g.d_reader_ris_m, 1.0);
        assert_eq!(g.d_tag_eve_m, 1.0);
        assert_eq!(g.d_reader_eve_m, 1.0);
        assert_eq!(g.d_tag_reader_m, 2.0);
        assert_eq!(default_params(), default_params());
        assert_eq!(default_geometry(), default_geometry());
        p.validate().unwrap();
        g.validate().unwrap();
    }

    #[test]
    fn config_file_overrides_and_rejects_unknown_keys() {
        let s = Scenario::from_kv_str(
            "# indoor\nsource_power_dbm = 5.0\nris_elements = 20 # fewer\n\nd_tag_reader_m = 4\n",
        )
        .unwrap();
        assert_eq!(s.params.source_power_dbm, 5.0);
        assert_eq!(s.params.ris_elements, 20);
        assert_eq!(s.geometry.d_tag_reader_m, 4.0);

        let err = Scenario::from_kv_str("foo = 1").unwrap_err();
        assert!(err.to_string().contains("foo"), "{err}");
        assert!(err.is_spec_error());
    }

    #[test]
    fn config_rejects_bad_values() {
        for text in [
            "d_eve_ris_m = 0",
            "d_tag_reader_m = -1",
            "pathloss_exp_direct = 1.5",
            "rectifier_efficiency = 0",
            "temporal_correlation = 1.2",
            "rss_ratio_threshold = 1.5",
            "source_power_dbm = loud",
            "source_power_dbm",
        ] {
            assert!(Scenario::from_kv_str(text).is_err(), "{text}");
        }
        let err = Scenario::from_kv_str("ris_elements = 1\nris_elements = 2").unwrap_err();
        assert!(err.to_string().contains("duplicate"));
    }

    #[test]
    fn comparator_threshold_accepts_absolute_or_auto() {
        let s = Scenario::from_kv_str("comparator_threshold_v = 0.25").unwrap();
        assert_eq!(s.params.comparator_threshold_v, Some(0.25));
        let s = Scenario::from_kv_str("comparator_threshold_v = auto").unwrap();
        assert_eq!(s.params.comparator_threshold_v, None);
    }
}
