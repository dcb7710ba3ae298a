//! Per-trial generators for legitimate rounds and every attack scenario.
//!
//! A trial draws the channels at initialization (slot 0), evolves them to
//! the authentication slot j, and lets the surface re-configure for slot j.
//! Eve's links live in the same [`ChannelState`], drawn independently of
//! the legitimate ones.

use num_complex::Complex64;
use rayon::prelude::*;
use serde::Serialize;

use crate::channel::{
    eve_reader_gain, reader_tag_gain, tag_eve_gain, ChannelState,
};
use crate::config::{ScenarioGeometry, SystemParams};
use crate::error::{Error, Result};
use crate::reader::{authenticate_tag, estimate_power, ratio_statistic, ReaderDatabase};
use crate::ris::{
    anti_jam_phases, destructive_phases, eavesdrop_phases, optimal_phases, random_phases,
    with_resolution, RisConfig,
};
use crate::rng::{derive_seed, rng_from_seed};
use crate::secrecy::{snr_pair, SnrPair};
use crate::tag::{comparator_threshold, normalized_deviation, simulate_profile, PowerProfile};
use crate::Decision;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum AttackKind {
    FakeReader,
    ImpersonatingTag,
    Replay,
    Relay,
    Mitm,
    Injection,
    Jamming,
    MaliciousRisJam,
    MaliciousRisEavesdrop,
}

impl AttackKind {
    pub const ALL: [AttackKind; 9] = [
        AttackKind::FakeReader,
        AttackKind::ImpersonatingTag,
        AttackKind::Replay,
        AttackKind::Relay,
        AttackKind::Mitm,
        AttackKind::Injection,
        AttackKind::Jamming,
        AttackKind::MaliciousRisJam,
        AttackKind::MaliciousRisEavesdrop,
    ];

    /// Attacks that try to pass the reader's RSS check.
    pub const READER_SIDE: [AttackKind; 5] = [
        AttackKind::ImpersonatingTag,
        AttackKind::Replay,
        AttackKind::Relay,
        AttackKind::Mitm,
        AttackKind::Injection,
    ];

    pub fn name(self) -> &'static str {
        match self {
            AttackKind::FakeReader => "fake-reader",
            AttackKind::ImpersonatingTag => "impersonating-tag",
            AttackKind::Replay => "replay",
            AttackKind::Relay => "relay",
            AttackKind::Mitm => "mitm",
            AttackKind::Injection => "injection",
            AttackKind::Jamming => "jamming",
            AttackKind::MaliciousRisJam => "malicious-ris-jam",
            AttackKind::MaliciousRisEavesdrop => "malicious-ris-eavesdrop",
        }
    }

    /// Which device's check the attack targets, if it produces a score.
    pub fn side(self) -> Option<Side> {
        match self {
            AttackKind::FakeReader => Some(Side::Tag),
            AttackKind::ImpersonatingTag
            | AttackKind::Replay
            | AttackKind::Relay
            | AttackKind::Mitm
            | AttackKind::Injection => Some(Side::Reader),
            AttackKind::Jamming | AttackKind::MaliciousRisJam | AttackKind::MaliciousRisEavesdrop => {
                None
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Side {
    /// The tag checks the reader's voltage profile.
    Tag,
    /// The reader checks the tag's RSS.
    Reader,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum TrialKind {
    Legitimate,
    Attack(AttackKind),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TrialOutcome {
    /// RSS ratio on the reader side, normalized voltage deviation on the tag side.
    pub statistic: f64,
    pub is_legitimate: bool,
    pub decision: Decision,
    pub kind: TrialKind,
}

/// Who configures the surface during the authentication slot.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum RisControl {
    Trusted,
    /// Compromised surface steering toward Eve.
    Malicious,
}

/// Eve's transmit power policy.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum EvePower {
    /// Same power as the reader's source.
    Parity,
    /// Scaled on pilot trials so Eve's median level at the victim matches
    /// the legitimate median.
    Matched,
    /// Fixed multiple of the source power.
    Scaled(f64),
}

/// Everything a trial generator needs besides its seed.
#[derive(Debug, Clone)]
pub struct TrialSetup {
    pub params: SystemParams,
    pub geom: ScenarioGeometry,
    pub n_ris: usize,
    pub control: RisControl,
    /// Eve's transmit power as a multiple of the source power.
    pub eve_power_scale: f64,
    /// Replace every Eve link with the legitimate one.
    pub clone: bool,
    pub tag_id: String,
    pub profile: PowerProfile,
}

impl TrialSetup {
    pub fn new(params: &SystemParams, geom: &ScenarioGeometry, n_ris: usize) -> Result<Self> {
        let tag_id = "tag-0".to_string();
        let profile = PowerProfile::for_tag(&tag_id, params)?;
        Ok(TrialSetup {
            params: params.clone(),
            geom: *geom,
            n_ris,
            control: RisControl::Trusted,
            eve_power_scale: 1.0,
            clone: false,
            tag_id,
            profile,
        })
    }

    pub fn with_control(mut self, control: RisControl) -> Self {
        self.control = control;
        self
    }

    pub fn with_clone(mut self, clone: bool) -> Self {
        self.clone = clone;
        self
    }

    pub fn with_eve_power_scale(mut self, scale: f64) -> Self {
        self.eve_power_scale = scale;
        self
    }

    fn trusted_config(&self, state: &ChannelState) -> Result<RisConfig> {
        if self.n_ris == 0 {
            return Ok(RisConfig::off());
        }
        with_resolution(optimal_phases(state), self.params.ris_phase_bits)
    }

    fn auth_config(&self, state: &ChannelState) -> Result<RisConfig> {
        match self.control {
            RisControl::Trusted => self.trusted_config(state),
            RisControl::Malicious if self.n_ris == 0 => Ok(RisConfig::off()),
            RisControl::Malicious => {
                with_resolution(eavesdrop_phases(state), self.params.ris_phase_bits)
            }
        }
    }
}

/// Channel realizations of one protocol round.
#[derive(Debug, Clone)]
pub struct Session {
    pub state0: ChannelState,
    pub cfg0: RisConfig,
    pub state_j: ChannelState,
    pub cfg_j: RisConfig,
    pub noise_seed: u64,
}

impl Session {
    pub fn new(setup: &TrialSetup, seed: u64) -> Result<Self> {
        let state0 = ChannelState::draw(&mut rng_from_seed(derive_seed(seed, &[0])), setup.n_ris);
        let state_j = state0.evolve(
            setup.params.temporal_correlation,
            &mut rng_from_seed(derive_seed(seed, &[1])),
        );
        Ok(Session {
            cfg0: setup.trusted_config(&state0)?,
            cfg_j: setup.auth_config(&state_j)?,
            state0,
            state_j,
            noise_seed: derive_seed(seed, &[2]),
        })
    }

    fn legit_gain(&self, setup: &TrialSetup) -> Result<Complex64> {
        reader_tag_gain(&self.state_j, &self.cfg_j, &setup.params, &setup.geom)
    }

    /// Registered RSS⁰, noise-free.
    pub fn baseline_rss(&self, setup: &TrialSetup) -> Result<f64> {
        let g = reader_tag_gain(&self.state0, &self.cfg0, &setup.params, &setup.geom)?;
        Ok(setup.params.source_power_w() * g.norm_sqr().powi(2))
    }

    /// Power delivered to the tag at initialization.
    pub fn baseline_incident(&self, setup: &TrialSetup) -> Result<f64> {
        let g = reader_tag_gain(&self.state0, &self.cfg0, &setup.params, &setup.geom)?;
        Ok(setup.params.source_power_w() * g.norm_sqr())
    }

    fn tag_eve(&self, setup: &TrialSetup) -> Result<Complex64> {
        if setup.clone {
            return self.legit_gain(setup);
        }
        tag_eve_gain(&self.state_j, &self.cfg_j, &setup.params, &setup.geom)
    }

    fn eve_reader(&self, setup: &TrialSetup) -> Result<Complex64> {
        if setup.clone {
            return self.legit_gain(setup);
        }
        eve_reader_gain(&self.state_j, &self.cfg_j, &setup.params, &setup.geom)
    }

    /// Round-trip amplitude reaching the reader for a unit-power source,
    /// before any attacker power scaling.
    fn reader_amplitude(&self, kind: TrialKind, setup: &TrialSetup) -> Result<Complex64> {
        Ok(match kind {
            TrialKind::Legitimate => {
                let l = self.legit_gain(setup)?;
                l * l
            }
            // Eve backscatters from her own position, so her link is
            // traversed both ways. Replay re-radiates a recording from the
            // same place and reduces to the same signal.
            TrialKind::Attack(AttackKind::ImpersonatingTag | AttackKind::Replay) => {
                let e = self.eve_reader(setup)?;
                e * e
            }
            // Eve transmits her own waveform: a single Eve→reader hop. In
            // the clone limit that hop stands in for the whole legitimate
            // round trip.
            TrialKind::Attack(AttackKind::Injection) => {
                let e = self.eve_reader(setup)?;
                if setup.clone {
                    e * e
                } else {
                    e
                }
            }
            // tag→Eve, then Eve→reader, each with its own path loss.
            TrialKind::Attack(AttackKind::Relay | AttackKind::Mitm) => {
                self.tag_eve(setup)? * self.eve_reader(setup)?
            }
            TrialKind::Attack(other) => {
                return Err(Error::invalid(format!(
                    "{} does not produce a reader-side trial",
                    other.name()
                )))
            }
        })
    }

    /// Power incident on the tag during the authentication slot.
    fn tag_incident(&self, kind: TrialKind, setup: &TrialSetup) -> Result<f64> {
        let ps = setup.params.source_power_w();
        Ok(match kind {
            TrialKind::Legitimate => ps * self.legit_gain(setup)?.norm_sqr(),
            TrialKind::Attack(AttackKind::FakeReader) => ps * self.tag_eve(setup)?.norm_sqr(),
            TrialKind::Attack(other) => {
                return Err(Error::invalid(format!(
                    "{} does not produce a tag-side trial",
                    other.name()
                )))
            }
        })
    }
}

fn attacker_power(kind: TrialKind, setup: &TrialSetup) -> f64 {
    match kind {
        TrialKind::Legitimate => 1.0,
        // the forwarding node re-transmits at the reader's power
        TrialKind::Attack(AttackKind::Mitm) => 1.0,
        _ if setup.clone => 1.0,
        _ => setup.eve_power_scale,
    }
}

fn reader_trial(kind: TrialKind, setup: &TrialSetup, seed: u64) -> Result<TrialOutcome> {
    let session = Session::new(setup, seed)?;
    let baseline = session.baseline_rss(setup)?;
    let scale = setup.params.source_power_w() * attacker_power(kind, setup);
    let amplitude = session.reader_amplitude(kind, setup)? * scale.sqrt();
    let observed = estimate_power(
        amplitude,
        setup.params.noise_reader_w(),
        setup.params.rss_averaging_symbols,
        &mut rng_from_seed(session.noise_seed),
    );
    let mut db = ReaderDatabase::new();
    db.register_tag(&setup.tag_id, baseline, setup.profile.clone())?;
    Ok(TrialOutcome {
        statistic: ratio_statistic(baseline, observed),
        is_legitimate: kind == TrialKind::Legitimate,
        decision: authenticate_tag(&db, &setup.tag_id, observed, setup.params.rss_ratio_threshold),
        kind,
    })
}

fn tag_trial(kind: TrialKind, setup: &TrialSetup, seed: u64) -> Result<TrialOutcome> {
    let session = Session::new(setup, seed)?;
    let stored = simulate_profile(&setup.profile, session.baseline_incident(setup)?, &setup.params)?;
    let incident = session.tag_incident(kind, setup)? * attacker_power(kind, setup);
    let observed = simulate_profile(&setup.profile, incident, &setup.params)?;
    let decision = crate::tag::authenticate_reader(
        &observed,
        &stored,
        comparator_threshold(&stored, &setup.params),
    )?;
    Ok(TrialOutcome {
        statistic: normalized_deviation(&observed, &stored)?,
        is_legitimate: kind == TrialKind::Legitimate,
        decision,
        kind,
    })
}

/// Honest tag answering the honest reader.
pub fn legitimate_reader_trial(setup: &TrialSetup, seed: u64) -> Result<TrialOutcome> {
    reader_trial(TrialKind::Legitimate, setup, seed)
}

/// Honest reader charging the honest tag.
pub fn legitimate_tag_trial(setup: &TrialSetup, seed: u64) -> Result<TrialOutcome> {
    tag_trial(TrialKind::Legitimate, setup, seed)
}

/// Eve poses as the reader and charges the tag over her own links.
pub fn fake_reader_trial(setup: &TrialSetup, seed: u64) -> Result<TrialOutcome> {
    tag_trial(TrialKind::Attack(AttackKind::FakeReader), setup, seed)
}

/// Eve answers the reader in the tag's place.
pub fn impersonating_tag_trial(setup: &TrialSetup, seed: u64) -> Result<TrialOutcome> {
    reader_trial(TrialKind::Attack(AttackKind::ImpersonatingTag), setup, seed)
}

/// Relay and injection use Eve's calibrated power, MITM forwards at the
/// source power.
pub fn relay_mitm_injection_trial(
    kind: AttackKind,
    setup: &TrialSetup,
    seed: u64,
) -> Result<TrialOutcome> {
    match kind {
        AttackKind::Relay | AttackKind::Mitm | AttackKind::Injection => {
            reader_trial(TrialKind::Attack(kind), setup, seed)
        }
        other => Err(Error::invalid(format!("{} is not relay, MITM or injection", other.name()))),
    }
}

/// Dispatch for every score-producing trial kind.
pub fn run_trial(kind: TrialKind, setup: &TrialSetup, seed: u64) -> Result<TrialOutcome> {
    match kind {
        TrialKind::Legitimate => Err(Error::invalid(
            "legitimate trials need a side; use legitimate_reader_trial or legitimate_tag_trial",
        )),
        TrialKind::Attack(a) => match a.side() {
            Some(Side::Tag) => tag_trial(kind, setup, seed),
            Some(Side::Reader) => reader_trial(kind, setup, seed),
            None => Err(Error::invalid(format!("{} has no authentication score", a.name()))),
        },
    }
}

/// Legitimate trial for the given side.
pub fn legitimate_trial(side: Side, setup: &TrialSetup, seed: u64) -> Result<TrialOutcome> {
    match side {
        Side::Reader => legitimate_reader_trial(setup, seed),
        Side::Tag => legitimate_tag_trial(setup, seed),
    }
}

fn median(mut xs: Vec<f64>) -> f64 {
    xs.sort_by(f64::total_cmp);
    let n = xs.len();
    if n % 2 == 1 {
        xs[n / 2]
    } else {
        0.5 * (xs[n / 2 - 1] + xs[n / 2])
    }
}

/// Stream label for calibration pilots.
const PILOT_STREAM: u64 = 0x9110;

/// Resolves a power policy to a multiple of the source power. Matched
/// power compares noise-free medians over `pilots` trials drawn from a
/// stream of their own.
pub fn resolve_eve_power(
    policy: EvePower,
    kind: AttackKind,
    setup: &TrialSetup,
    seed: u64,
    pilots: usize,
) -> Result<f64> {
    match policy {
        EvePower::Parity => Ok(1.0),
        EvePower::Scaled(s) if s >= 0.0 && s.is_finite() => Ok(s),
        EvePower::Scaled(s) => Err(Error::invalid(format!("Eve power scale {s} must be >= 0"))),
        EvePower::Matched => {
            if setup.clone || kind == AttackKind::Mitm {
                return Ok(1.0);
            }
            let side = kind
                .side()
                .ok_or_else(|| Error::invalid(format!("{} has no power to match", kind.name())))?;
            if pilots == 0 {
                return Err(Error::invalid("calibration needs at least one pilot"));
            }
            let levels = (0..pilots as u64)
                .into_par_iter()
                .map(|i| {
                    let s = Session::new(setup, derive_seed(seed, &[PILOT_STREAM, i]))?;
                    let k = TrialKind::Attack(kind);
                    Ok(match side {
                        Side::Reader => (s.baseline_rss(setup)?, s.reader_amplitude(k, setup)?.norm_sqr()),
                        Side::Tag => (s.baseline_incident(setup)?, s.tag_incident(k, setup)?),
                    })
                })
                .collect::<Result<Vec<(f64, f64)>>>()?;
            let legit = median(levels.iter().map(|l| l.0).collect());
            let mut attack = median(levels.iter().map(|l| l.1).collect());
            if side == Side::Reader {
                attack *= setup.params.source_power_w();
            }
            if !(attack > 0.0 && legit > 0.0) {
                return Err(Error::invalid("degenerate calibration levels"));
            }
            Ok(legit / attack)
        }
    }
}

/// SNR change at the reader, in dB, caused by a jammer.
///
/// External jammer (`malicious_ris = false`): Eve radiates at
/// `eve_power_scale`·P_s while the trusted surface searches for the
/// SINR-maximizing configuration. The reference is the interference-free
/// SNR under co-phasing.
///
/// Malicious surface: no extra radiation, the surface arranges its
/// elements to cancel the reader↔tag link. The reference is again the
/// co-phased SNR.
pub fn jamming_trial(malicious_ris: bool, setup: &TrialSetup, seed: u64) -> Result<f64> {
    let p = &setup.params;
    let g = &setup.geom;
    let state = ChannelState::draw(&mut rng_from_seed(derive_seed(seed, &[0])), setup.n_ris);
    let reference = setup.trusted_config(&state)?;
    let rss = |cfg: &RisConfig| -> Result<f64> {
        let l = reader_tag_gain(&state, cfg, p, g)?;
        Ok(p.source_power_w() * l.norm_sqr().powi(2))
    };
    let rss_ref = rss(&reference)?;
    if malicious_ris {
        if setup.n_ris == 0 {
            return Ok(0.0);
        }
        let cfg = with_resolution(destructive_phases(&state, p, g), p.ris_phase_bits)?;
        return Ok(10.0 * (rss(&cfg)? / rss_ref).log10());
    }
    let jammer_w = setup.eve_power_scale * p.source_power_w();
    if jammer_w == 0.0 {
        return Ok(0.0);
    }
    let cfg = if setup.n_ris == 0 {
        RisConfig::off()
    } else {
        let bits = if p.ris_phase_bits == 0 { 8 } else { p.ris_phase_bits };
        anti_jam_phases(&state, p, g, jammer_w, bits)?
    };
    let j = eve_reader_gain(&state, &cfg, p, g)?;
    let sinr = rss(&cfg)? / (p.noise_reader_w() + jammer_w * j.norm_sqr());
    let snr_ref = rss_ref / p.noise_reader_w();
    Ok(10.0 * (sinr / snr_ref).log10())
}

/// Compromised surface steering the tag's reply toward Eve. Without CSI it
/// can only pick phases at random. Phases are continuous here; the
/// experiments apply hardware resolution on their own.
pub fn malicious_ris_eavesdrop_trial(knows_csi: bool, setup: &TrialSetup, seed: u64) -> Result<SnrPair> {
    let state = ChannelState::draw(&mut rng_from_seed(derive_seed(seed, &[0])), setup.n_ris);
    let cfg = if setup.n_ris == 0 {
        RisConfig::off()
    } else if knows_csi {
        eavesdrop_phases(&state)
    } else {
        random_phases(setup.n_ris, derive_seed(seed, &[1]))?
    };
    snr_pair(&state, &cfg, &setup.params, &setup.geom)
}
