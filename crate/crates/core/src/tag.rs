//! Passive tag: RC energy detector, voltage-profile capture, the comparator
//! that authenticates the reader, and backscatter gating.

use rand::Rng;

use crate::config::{SystemParams, LOAD_RESISTANCE_OHM};
use crate::error::{Error, Result};
use crate::rng::{fnv1a, rng_from_seed};
use crate::Decision;

/// OOK power levels the reader sends to charge a tag.
#[derive(Debug, Clone, PartialEq)]
pub struct PowerProfile {
    symbols: Vec<bool>,
    symbol_period_s: f64,
}

impl PowerProfile {
    pub fn new(symbols: Vec<bool>, symbol_period_s: f64) -> Result<Self> {
        if symbols.is_empty() {
            return Err(Error::invalid("power profile needs at least one symbol"));
        }
        if !symbols.iter().any(|&b| b) {
            return Err(Error::invalid("power profile has no ON symbol"));
        }
        if !(symbol_period_s > 0.0 && symbol_period_s.is_finite()) {
            return Err(Error::invalid(format!("symbol period {symbol_period_s} must be > 0")));
        }
        Ok(PowerProfile {
            symbols,
            symbol_period_s,
        })
    }

    /// Fixed pseudo-random pattern derived from the tag identifier.
    pub fn for_tag(tag_id: &str, params: &SystemParams) -> Result<Self> {
        let mut rng = rng_from_seed(fnv1a(tag_id.as_bytes()));
        let mut symbols: Vec<bool> = (0..params.profile_length).map(|_| rng.random()).collect();
        if !symbols.iter().any(|&b| b) {
            if let Some(first) = symbols.first_mut() {
                *first = true;
            }
        }
        Self::new(symbols, params.symbol_period_s)
    }

    pub fn symbols(&self) -> &[bool] {
        &self.symbols
    }

    pub fn symbol_period_s(&self) -> f64 {
        self.symbol_period_s
    }

    pub fn len(&self) -> usize {
        self.symbols.len()
    }

    pub fn is_empty(&self) -> bool {
        self.symbols.is_empty()
    }

    pub fn to_bit_string(&self) -> String {
        self.symbols.iter().map(|&b| if b { '1' } else { '0' }).collect()
    }

    pub fn from_bit_string(bits: &str, symbol_period_s: f64) -> Result<Self> {
        let symbols = bits
            .chars()
            .map(|c| match c {
                '1' => Ok(true),
                '0' => Ok(false),
                other => Err(Error::invalid(format!("bad profile symbol {other:?}"))),
            })
            .collect::<Result<Vec<_>>>()?;
        Self::new(symbols, symbol_period_s)
    }
}

/// Detector output sampled at the end of each OOK symbol.
#[derive(Debug, Clone, PartialEq)]
pub struct VoltageProfile {
    pub samples: Vec<f64>,
    pub symbol_period_s: f64,
}

impl VoltageProfile {
    pub fn peak_sample(&self) -> f64 {
        self.samples.iter().copied().fold(0.0, f64::max)
    }
}

/// V_peak = √(η·P·R_load).
pub fn peak_voltage(incident_power_w: f64, params: &SystemParams) -> Result<f64> {
    if !(incident_power_w >= 0.0) {
        return Err(Error::invalid(format!(
            "incident power {incident_power_w} W is negative"
        )));
    }
    Ok((params.rectifier_efficiency * incident_power_w * LOAD_RESISTANCE_OHM).sqrt())
}

/// RC step response driven by the profile. ON symbols charge toward V_peak
/// from wherever the capacitor sits, OFF symbols discharge toward zero.
pub fn simulate_profile(
    pp: &PowerProfile,
    incident_power_w: f64,
    params: &SystemParams,
) -> Result<VoltageProfile> {
    let v_peak = peak_voltage(incident_power_w, params)?;
    let decay = (-pp.symbol_period_s / params.rc_time_constant_s).exp();
    let mut v = 0.0;
    let samples = pp
        .symbols
        .iter()
        .map(|&on| {
            v = if on {
                v_peak + (v - v_peak) * decay
            } else {
                v * decay
            };
            v
        })
        .collect();
    Ok(VoltageProfile {
        samples,
        symbol_period_s: pp.symbol_period_s,
    })
}

/// Largest per-sample absolute difference.
pub fn max_deviation(observed: &VoltageProfile, stored: &VoltageProfile) -> Result<f64> {
    if observed.samples.len() != stored.samples.len() {
        return Err(Error::LengthMismatch {
            expected: stored.samples.len(),
            got: observed.samples.len(),
        });
    }
    Ok(observed
        .samples
        .iter()
        .zip(&stored.samples)
        .map(|(a, b)| (a - b).abs())
        .fold(0.0, f64::max))
}

/// Accept iff every sample is within ε of the stored profile.
pub fn authenticate_reader(
    observed: &VoltageProfile,
    stored: &VoltageProfile,
    epsilon_v: f64,
) -> Result<Decision> {
    if !(epsilon_v >= 0.0) {
        return Err(Error::invalid(format!("comparator threshold {epsilon_v} V is negative")));
    }
    Ok(if max_deviation(observed, stored)? <= epsilon_v {
        Decision::Accept
    } else {
        Decision::Reject
    })
}

/// Comparator threshold in volts for a stored profile: the absolute
/// setting if configured, otherwise a fraction of the stored peak.
pub fn comparator_threshold(stored: &VoltageProfile, params: &SystemParams) -> f64 {
    params
        .comparator_threshold_v
        .unwrap_or(params.comparator_threshold_frac * stored.peak_sample())
}

/// Deviation normalized by the stored peak, so trials at different power
/// levels share one scale. Zero-peak profiles give infinity unless equal.
pub fn normalized_deviation(observed: &VoltageProfile, stored: &VoltageProfile) -> Result<f64> {
    let dev = max_deviation(observed, stored)?;
    let peak = stored.peak_sample();
    Ok(if dev == 0.0 {
        0.0
    } else if peak > 0.0 {
        dev / peak
    } else {
        f64::INFINITY
    })
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BackscatterMessage {
    pub id: String,
    pub payload: Vec<u8>,
}

/// One tag across protocol rounds. It holds the profile captured at
/// initialization and replies only after accepting the reader.
#[derive(Debug, Clone)]
pub struct TagSession {
    id: String,
    stored: Option<VoltageProfile>,
    reader_accepted: bool,
}

impl TagSession {
    pub fn new(id: impl Into<String>) -> Self {
        TagSession {
            id: id.into(),
            stored: None,
            reader_accepted: false,
        }
    }

    pub fn id(&self) -> &str {
        &self.id
    }

    pub fn store_profile(&mut self, profile: VoltageProfile) {
        self.stored = Some(profile);
    }

    pub fn stored_profile(&self) -> Option<&VoltageProfile> {
        self.stored.as_ref()
    }

    pub fn authenticate_reader(&mut self, observed: &VoltageProfile, epsilon_v: f64) -> Result<Decision> {
        let stored = self
            .stored
            .as_ref()
            .ok_or_else(|| Error::ProtocolViolation("tag was never initialized".into()))?;
        let d = authenticate_reader(observed, stored, epsilon_v)?;
        self.reader_accepted = d.is_accept();
        Ok(d)
    }

    /// Reply to the reader. Consumes the acceptance, so every round needs a
    /// fresh authentication.
    pub fn backscatter(&mut self) -> Result<BackscatterMessage> {
        if !self.reader_accepted {
            return Err(Error::ProtocolViolation(
                "backscatter before the reader was accepted".into(),
            ));
        }
        self.reader_accepted = false;
        Ok(BackscatterMessage {
            id: self.id.clone(),
            payload: fnv1a(self.id.as_bytes()).to_le_bytes().to_vec(),
        })
    }
}
