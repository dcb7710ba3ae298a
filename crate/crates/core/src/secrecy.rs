//! Secrecy rate and Monte Carlo average secrecy capacity.

use std::fmt::Write as _;

use rayon::prelude::*;
use serde::Serialize;

use crate::channel::{received_eve, ChannelState};
use crate::config::{ScenarioGeometry, SystemParams};
use crate::error::{Error, Result};
use crate::reader::rss_noise_free;
use crate::ris::{eavesdrop_phases, optimal_phases, with_resolution, RisConfig};
use crate::rng::{derive_seed, rng_from_seed};

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SnrPair {
    pub gamma_r: f64,
    pub gamma_e: f64,
}

impl SnrPair {
    pub fn new(gamma_r: f64, gamma_e: f64) -> Result<Self> {
        if !(gamma_r >= 0.0 && gamma_e >= 0.0) {
            return Err(Error::invalid(format!(
                "SNRs must be nonnegative (got {gamma_r}, {gamma_e})"
            )));
        }
        Ok(SnrPair { gamma_r, gamma_e })
    }

    pub fn scaled(self, s: f64) -> Self {
        SnrPair {
            gamma_r: self.gamma_r * s,
            gamma_e: self.gamma_e * s,
        }
    }
}

/// [log₂(1+γ_R) − log₂(1+γ_E)]⁺ in bits/s/Hz.
pub fn secrecy_rate(pair: SnrPair) -> f64 {
    if pair.gamma_r <= pair.gamma_e {
        return 0.0;
    }
    (pair.gamma_r.ln_1p() - pair.gamma_e.ln_1p()).max(0.0) / std::f64::consts::LN_2
}

/// Reader and Eve SNRs for one channel state and configuration.
pub fn snr_pair(
    state: &ChannelState,
    cfg: &RisConfig,
    params: &SystemParams,
    geom: &ScenarioGeometry,
) -> Result<SnrPair> {
    let gamma_r = rss_noise_free(state, cfg, params, geom)? / params.noise_reader_w();
    let eve = received_eve(state, cfg, params, geom)?;
    SnrPair::new(gamma_r, eve.value.norm_sqr() / eve.noise_var_w)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum RisMode {
    /// Surface co-phases for the reader.
    Trusted,
    /// Surface co-phases for Eve.
    Malicious,
    Off,
}

impl RisMode {
    pub fn name(self) -> &'static str {
        match self {
            RisMode::Trusted => "trusted",
            RisMode::Malicious => "malicious",
            RisMode::Off => "off",
        }
    }

    pub fn config(self, state: &ChannelState, params: &SystemParams) -> Result<RisConfig> {
        match self {
            RisMode::Off => Ok(RisConfig::off()),
            _ if state.ris_elements() == 0 => Ok(RisConfig::off()),
            RisMode::Trusted => with_resolution(optimal_phases(state), params.ris_phase_bits),
            RisMode::Malicious => with_resolution(eavesdrop_phases(state), params.ris_phase_bits),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AscCurve {
    pub gamma_r_bar_db: Vec<f64>,
    pub asc_bits: Vec<f64>,
    pub n_sim: usize,
}

impl AscCurve {
    pub fn to_csv(&self) -> String {
        let mut out = String::from("gamma_r_bar_db,asc_bits,n_sim\n");
        for (g, c) in self.gamma_r_bar_db.iter().zip(&self.asc_bits) {
            let _ = writeln!(out, "{g},{c},{}", self.n_sim);
        }
        out
    }
}

/// ASC over a grid of target average reader SNRs. At each grid point both
/// SNRs of every realization are scaled by the same factor, which is what
/// sweeping the source power does.
pub fn asc_from_pairs(pairs: &[SnrPair], gamma_grid_db: &[f64]) -> Result<AscCurve> {
    if pairs.is_empty() {
        return Err(Error::invalid("no channel realizations"));
    }
    let mean_r = pairs.iter().map(|p| p.gamma_r).sum::<f64>() / pairs.len() as f64;
    if !(mean_r > 0.0) {
        return Err(Error::invalid("average reader SNR is zero"));
    }
    let asc_bits = gamma_grid_db
        .iter()
        .map(|&g| {
            let s = 10f64.powf(g / 10.0) / mean_r;
            pairs.iter().map(|p| secrecy_rate(p.scaled(s))).sum::<f64>() / pairs.len() as f64
        })
        .collect();
    Ok(AscCurve {
        gamma_r_bar_db: gamma_grid_db.to_vec(),
        asc_bits,
        n_sim: pairs.len(),
    })
}

/// Stream label that keeps ASC channel draws apart from other experiments.
const ASC_STREAM: u64 = 0xA5C;

/// Monte Carlo ASC. Realization i uses the seed (master_seed, i) at every
/// grid point and for every mode, so curves share their channel draws.
pub fn compute_asc(
    mode: RisMode,
    n_ris: usize,
    gamma_grid_db: &[f64],
    n_sim: usize,
    params: &SystemParams,
    geom: &ScenarioGeometry,
    master_seed: u64,
) -> Result<AscCurve> {
    let n = if mode == RisMode::Off { 0 } else { n_ris };
    let pairs = (0..n_sim as u64)
        .into_par_iter()
        .map(|i| {
            let mut rng = rng_from_seed(derive_seed(master_seed, &[ASC_STREAM, i]));
            let state = ChannelState::draw(&mut rng, n);
            let cfg = mode.config(&state, params)?;
            snr_pair(&state, &cfg, params, geom)
        })
        .collect::<Result<Vec<_>>>()?;
    asc_from_pairs(&pairs, gamma_grid_db)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::{default_geometry, default_params};

    #[test]
    fn rate_examples() {
        let r = |a, b| secrecy_rate(SnrPair::new(a, b).unwrap());
        assert_eq!(r(2.0, 2.0), 0.0);
        assert!((r(3.0, 1.0) - 1.0).abs() < 1e-12);
        assert_eq!(r(1.0, 3.0), 0.0);
        assert!(SnrPair::new(-1.0, 0.0).is_err());
    }

    #[test]
    fn zero_eve_reduces_to_capacity() {
        let pairs: Vec<SnrPair> = (1..=1000)
            .map(|i| SnrPair::new(i as f64 * 0.01, 0.0).unwrap())
            .collect();
        let mean: f64 = pairs.iter().map(|p| p.gamma_r).sum::<f64>() / 1000.0;
        let grid = [0.0, 10.0];
        let curve = asc_from_pairs(&pairs, &grid).unwrap();
        for (k, g) in grid.iter().enumerate() {
            let s = 10f64.powf(g / 10.0) / mean;
            let direct = pairs.iter().map(|p| (1.0 + s * p.gamma_r).log2()).sum::<f64>() / 1000.0;
            assert!((curve.asc_bits[k] - direct).abs() <= 0.01 * direct);
        }
    }

    #[test]
    fn asc_is_deterministic_and_nonnegative() {
        let p = default_params();
        let g = default_geometry();
        let grid = [-10.0, 0.0, 10.0, 20.0];
        let a = compute_asc(RisMode::Malicious, 20, &grid, 500, &p, &g, 3).unwrap();
        let b = compute_asc(RisMode::Malicious, 20, &grid, 500, &p, &g, 3).unwrap();
        assert_eq!(a, b);
        assert!(a.asc_bits.iter().all(|&c| c >= 0.0));
        assert!(a.to_csv().starts_with("gamma_r_bar_db,asc_bits,n_sim\n-10,"));
    }
}
