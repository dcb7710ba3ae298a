//! Rayleigh-faded channel state and the received-signal models.
//!
//! Stored gains are small-scale fading only (unit-variance CN draws). Path
//! loss is applied as an amplitude factor d^(−χ) when a link is evaluated:
//! χ₁ on the direct hops (reader↔tag, tag↔Eve, reader↔Eve), χ₂ on every
//! RIS hop. Reciprocal links store one value for both directions.

use num_complex::Complex64;
use rand::Rng;

use crate::config::{ScenarioGeometry, SystemParams};
use crate::error::{Error, Result};
use crate::ris::RisConfig;
use crate::rng::{complex_gaussian, rng_from_seed};

#[derive(Debug, Clone, PartialEq)]
pub struct ChannelState {
    /// Reader↔tag direct link.
    pub h_rt: Complex64,
    /// Reader↔RIS, one gain per element.
    pub g_r: Vec<Complex64>,
    /// Tag↔RIS, one gain per element.
    pub g_t: Vec<Complex64>,
    /// Tag↔Eve direct link.
    pub h_te: Complex64,
    /// Reader↔Eve direct link.
    pub h_re: Complex64,
    /// RIS↔Eve, one gain per element.
    pub g_e: Vec<Complex64>,
}

impl ChannelState {
    pub fn draw<R: Rng + ?Sized>(rng: &mut R, n: usize) -> Self {
        let h_rt = complex_gaussian(rng);
        let h_te = complex_gaussian(rng);
        let h_re = complex_gaussian(rng);
        let mut g_r = Vec::with_capacity(n);
        let mut g_t = Vec::with_capacity(n);
        let mut g_e = Vec::with_capacity(n);
        for _ in 0..n {
            g_r.push(complex_gaussian(rng));
            g_t.push(complex_gaussian(rng));
            g_e.push(complex_gaussian(rng));
        }
        ChannelState {
            h_rt,
            g_r,
            g_t,
            h_te,
            h_re,
            g_e,
        }
    }

    pub fn ris_elements(&self) -> usize {
        self.g_r.len()
    }

    /// First-order Gauss-Markov step: every gain becomes ρ·h + √(1−ρ²)·e.
    pub fn evolve<R: Rng + ?Sized>(&self, rho: f64, rng: &mut R) -> Self {
        let fresh = (1.0 - rho * rho).max(0.0).sqrt();
        let mut step = |h: Complex64| {
            let e = complex_gaussian(rng);
            if fresh == 0.0 {
                h
            } else {
                h * rho + e * fresh
            }
        };
        let h_rt = step(self.h_rt);
        let h_te = step(self.h_te);
        let h_re = step(self.h_re);
        let mut g_r = Vec::with_capacity(self.g_r.len());
        let mut g_t = Vec::with_capacity(self.g_t.len());
        let mut g_e = Vec::with_capacity(self.g_e.len());
        for i in 0..self.g_r.len() {
            g_r.push(step(self.g_r[i]));
            g_t.push(step(self.g_t[i]));
            g_e.push(step(self.g_e[i]));
        }
        ChannelState {
            h_rt,
            g_r,
            g_t,
            h_te,
            h_re,
            g_e,
        }
    }

    /// Multiplies every gain by e^(jφ).
    pub fn rotated(&self, phi: f64) -> Self {
        let r = Complex64::from_polar(1.0, phi);
        let rot = |v: &[Complex64]| v.iter().map(|h| h * r).collect::<Vec<_>>();
        ChannelState {
            h_rt: self.h_rt * r,
            g_r: rot(&self.g_r),
            g_t: rot(&self.g_t),
            h_te: self.h_te * r,
            h_re: self.h_re * r,
            g_e: rot(&self.g_e),
        }
    }
}

pub fn draw_channels(seed: u64, params: &SystemParams) -> ChannelState {
    ChannelState::draw(&mut rng_from_seed(seed), params.ris_elements)
}

pub fn evolve_channels(state: &ChannelState, rho: f64, seed: u64) -> Result<ChannelState> {
    if !(0.0..=1.0).contains(&rho) {
        return Err(Error::invalid(format!("correlation {rho} outside [0, 1]")));
    }
    Ok(state.evolve(rho, &mut rng_from_seed(seed)))
}

/// A received baseband sample together with the noise variance it carries.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SignalSample {
    pub value: Complex64,
    pub noise_var_w: f64,
}

/// Amplitude path-loss factors for every link in the scenario.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PathLoss {
    pub reader_tag: f64,
    pub reader_tag_cascade: f64,
    pub tag_eve: f64,
    pub tag_eve_cascade: f64,
    pub reader_eve: f64,
    pub eve_reader_cascade: f64,
}

impl PathLoss {
    pub fn new(params: &SystemParams, geom: &ScenarioGeometry) -> Self {
        let direct = |d: f64| d.powf(-params.pathloss_exp_direct);
        let ris = |d1: f64, d2: f64| (d1 * d2).powf(-params.pathloss_exp_ris);
        PathLoss {
            reader_tag: direct(geom.d_tag_reader_m),
            reader_tag_cascade: ris(geom.d_tag_ris_m, geom.d_reader_ris_m),
            tag_eve: direct(geom.d_tag_eve_m),
            tag_eve_cascade: ris(geom.d_tag_ris_m, geom.d_eve_ris_m),
            reader_eve: direct(geom.d_reader_eve_m),
            eve_reader_cascade: ris(geom.d_eve_ris_m, geom.d_reader_ris_m),
        }
    }
}

fn check_len(state: &ChannelState, cfg: &RisConfig) -> Result<()> {
    if cfg.is_off() {
        return Ok(());
    }
    let n = state.ris_elements();
    if cfg.len() != n {
        return Err(Error::LengthMismatch {
            expected: n,
            got: cfg.len(),
        });
    }
    Ok(())
}

fn cascade(x: &[Complex64], y: &[Complex64], cfg: &RisConfig) -> Complex64 {
    if cfg.is_off() {
        return Complex64::new(0.0, 0.0);
    }
    x.iter()
        .zip(y)
        .zip(cfg.phases())
        .map(|((a, b), &theta)| a * b * Complex64::from_polar(1.0, theta))
        .sum()
}

/// Direct and cascade parts (a, b) of the one-way reader↔tag gain.
pub fn reader_tag_terms(
    state: &ChannelState,
    cfg: &RisConfig,
    params: &SystemParams,
    geom: &ScenarioGeometry,
) -> Result<(Complex64, Complex64)> {
    check_len(state, cfg)?;
    let pl = PathLoss::new(params, geom);
    let a = state.h_rt * pl.reader_tag;
    let b = cascade(&state.g_t, &state.g_r, cfg) * pl.reader_tag_cascade;
    Ok((a, b))
}

/// One-way reader↔tag composite gain a + b.
pub fn reader_tag_gain(
    state: &ChannelState,
    cfg: &RisConfig,
    params: &SystemParams,
    geom: &ScenarioGeometry,
) -> Result<Complex64> {
    reader_tag_terms(state, cfg, params, geom).map(|(a, b)| a + b)
}

/// One-way tag↔Eve composite gain (direct plus tag→RIS→Eve cascade).
pub fn tag_eve_gain(
    state: &ChannelState,
    cfg: &RisConfig,
    params: &SystemParams,
    geom: &ScenarioGeometry,
) -> Result<Complex64> {
    check_len(state, cfg)?;
    let pl = PathLoss::new(params, geom);
    Ok(state.h_te * pl.tag_eve + cascade(&state.g_t, &state.g_e, cfg) * pl.tag_eve_cascade)
}

/// One-way Eve↔reader composite gain (direct plus Eve→RIS→reader cascade).
pub fn eve_reader_gain(
    state: &ChannelState,
    cfg: &RisConfig,
    params: &SystemParams,
    geom: &ScenarioGeometry,
) -> Result<Complex64> {
    check_len(state, cfg)?;
    let pl = PathLoss::new(params, geom);
    Ok(state.h_re * pl.reader_eve + cascade(&state.g_e, &state.g_r, cfg) * pl.eve_reader_cascade)
}

/// Noise-free signal at the tag: √P_s·(a + b). Tag noise is neglected.
pub fn received_tag(
    state: &ChannelState,
    cfg: &RisConfig,
    params: &SystemParams,
    geom: &ScenarioGeometry,
) -> Result<SignalSample> {
    let gain = reader_tag_gain(state, cfg, params, geom)?;
    Ok(SignalSample {
        value: gain * params.source_power_w().sqrt(),
        noise_var_w: 0.0,
    })
}

/// The four round-trip terms seen by the reader for a unit-power tag
/// symbol: direct·direct, direct·cascade, cascade·direct, cascade·cascade.
pub fn reader_round_trip_terms(a: Complex64, b: Complex64) -> [Complex64; 4] {
    // h_TR and h_RT coincide under reciprocity, so both mixed terms are a·b.
    [a * a, a * b, b * a, b * b]
}

/// Backscattered signal at the reader: √P_s·(a² + 2ab + b²)·S with S = 1,
/// plus CN(0, σ²_R) noise when `noise_seed` is given.
pub fn received_reader(
    state: &ChannelState,
    cfg: &RisConfig,
    params: &SystemParams,
    geom: &ScenarioGeometry,
    noise_seed: Option<u64>,
) -> Result<SignalSample> {
    let (a, b) = reader_tag_terms(state, cfg, params, geom)?;
    let terms = reader_round_trip_terms(a, b);
    let sum: Complex64 = terms.iter().sum();
    let square = (a + b) * (a + b);
    debug_assert!(
        (sum - square).norm() <= 1e-10 * square.norm().max(f64::MIN_POSITIVE),
        "round-trip expansion diverged from (a+b)^2"
    );
    let mut value = sum * params.source_power_w().sqrt();
    let noise_var_w = params.noise_reader_w();
    if let Some(seed) = noise_seed {
        value += complex_gaussian(&mut rng_from_seed(seed)) * noise_var_w.sqrt();
    }
    Ok(SignalSample { value, noise_var_w })
}

/// Noise-free tag signal as captured by Eve: the tag re-radiates what it
/// receives, √P_s·|a+b|, over the tag→Eve composite link.
pub fn received_eve(
    state: &ChannelState,
    cfg: &RisConfig,
    params: &SystemParams,
    geom: &ScenarioGeometry,
) -> Result<SignalSample> {
    let incident = reader_tag_gain(state, cfg, params, geom)?.norm();
    let te = tag_eve_gain(state, cfg, params, geom)?;
    Ok(SignalSample {
        value: te * (params.source_power_w().sqrt() * incident),
        noise_var_w: params.noise_eve_w(),
    })
}
