//! RIS phase configurations: trusted co-phasing and its quantized variant,
//! plus the strategies a compromised or adversarial surface would use.

use std::f64::consts::{PI, TAU};

use num_complex::Complex64;
use rand::Rng;

use crate::channel::{ChannelState, PathLoss};
use crate::config::{ScenarioGeometry, SystemParams};
use crate::error::{Error, Result};
use crate::rng::rng_from_seed;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RisStrategy {
    Optimal,
    Quantized(u32),
    Random,
    DestructiveJam,
    EavesdropOptimal,
    /// SINR-maximizing search against a known interferer.
    AntiJam,
    Off,
}

/// Per-element phase shifts in [0, 2π).
#[derive(Debug, Clone, PartialEq)]
pub struct RisConfig {
    phases: Vec<f64>,
    strategy: RisStrategy,
}

pub fn wrap_phase(theta: f64) -> f64 {
    let w = theta.rem_euclid(TAU);
    // rem_euclid can round up to exactly 2π for tiny negative inputs
    if w >= TAU {
        0.0
    } else {
        w
    }
}

impl RisConfig {
    pub fn new(phases: Vec<f64>, strategy: RisStrategy) -> Self {
        if strategy == RisStrategy::Off {
            return Self::off();
        }
        RisConfig {
            phases: phases.into_iter().map(wrap_phase).collect(),
            strategy,
        }
    }

    /// No surface: every cascade term is zeroed.
    pub fn off() -> Self {
        RisConfig {
            phases: Vec::new(),
            strategy: RisStrategy::Off,
        }
    }

    pub fn is_off(&self) -> bool {
        self.strategy == RisStrategy::Off
    }

    pub fn phases(&self) -> &[f64] {
        &self.phases
    }

    pub fn strategy(&self) -> RisStrategy {
        self.strategy
    }

    pub fn len(&self) -> usize {
        self.phases.len()
    }

    pub fn is_empty(&self) -> bool {
        self.phases.is_empty()
    }
}

fn per_element<'a>(x: &'a [Complex64], y: &'a [Complex64]) -> impl Iterator<Item = Complex64> + 'a {
    x.iter().zip(y).map(|(a, b)| a * b)
}

/// Co-phases every tag→RIS→reader term with the direct reader↔tag link.
pub fn optimal_phases(state: &ChannelState) -> RisConfig {
    let target = state.h_rt.arg();
    let phases = per_element(&state.g_t, &state.g_r)
        .map(|c| target - c.arg())
        .collect();
    RisConfig::new(phases, RisStrategy::Optimal)
}

/// Rounds every phase to the nearest of 2^bits uniform levels.
pub fn quantize_phases(config: &RisConfig, bits: u32) -> Result<RisConfig> {
    if !(1..=16).contains(&bits) {
        return Err(Error::invalid(format!("phase resolution {bits} bits outside 1..=16")));
    }
    if config.is_off() {
        return Ok(RisConfig::off());
    }
    let levels = (1u32 << bits) as f64;
    let step = TAU / levels;
    let phases = config
        .phases
        .iter()
        .map(|&p| ((p / step).round() % levels) * step)
        .collect();
    Ok(RisConfig::new(phases, RisStrategy::Quantized(bits)))
}

/// Applies the surface's phase resolution. Zero bits means continuous.
pub fn with_resolution(config: RisConfig, bits: u32) -> Result<RisConfig> {
    if bits == 0 {
        Ok(config)
    } else {
        quantize_phases(&config, bits)
    }
}

/// Co-phases the tag→RIS→Eve cascade with the direct tag→Eve link.
pub fn eavesdrop_phases(state: &ChannelState) -> RisConfig {
    let target = state.h_te.arg();
    let phases = per_element(&state.g_t, &state.g_e)
        .map(|c| target - c.arg())
        .collect();
    RisConfig::new(phases, RisStrategy::EavesdropOptimal)
}

/// Independent uniform phases on [0, 2π).
pub fn random_phases(n: usize, rng_seed: u64) -> Result<RisConfig> {
    if n == 0 {
        return Err(Error::invalid("random configuration needs at least one element"));
    }
    let mut rng = rng_from_seed(rng_seed);
    let phases = (0..n).map(|_| rng.random_range(0.0..TAU)).collect();
    Ok(RisConfig::new(phases, RisStrategy::Random))
}

/// Greedy largest-first split of magnitudes into three groups. Returns
/// group index per element and the group sums.
fn partition3(r: &[f64]) -> (Vec<usize>, [f64; 3]) {
    let mut order: Vec<usize> = (0..r.len()).collect();
    order.sort_by(|&i, &j| r[j].total_cmp(&r[i]).then(i.cmp(&j)));
    let mut sums = [0.0f64; 3];
    let mut group = vec![0; r.len()];
    for i in order {
        let g = (0..3)
            .min_by(|&x, &y| sums[x].total_cmp(&sums[y]))
            .unwrap_or(0);
        group[i] = g;
        sums[g] += r[i];
    }
    (group, sums)
}

fn clamp_cos(x: f64) -> f64 {
    x.clamp(-1.0, 1.0)
}

/// Directions for three vectors of lengths `len` (descending) that sum to
/// `t`, or None if no such closure exists.
fn close_polygon(len: [f64; 3], t: Complex64) -> Option<[f64; 3]> {
    let [a, b, c] = len;
    let tm = t.norm();
    let lo = (a - b).max((c - tm).abs());
    let hi = (a + b).min(c + tm);
    if lo > hi * (1.0 + 1e-12) + 1e-300 {
        return None;
    }
    let m = 0.5 * (lo + hi);
    let psi_c = if c == 0.0 {
        0.0
    } else if tm == 0.0 {
        // w must cancel C, so any direction works
        0.0
    } else {
        t.arg() + clamp_cos((tm * tm + c * c - m * m) / (2.0 * tm * c)).acos()
    };
    let w = t - Complex64::from_polar(c, psi_c);
    if a == 0.0 {
        return Some([0.0, 0.0, psi_c]);
    }
    let (psi_a, psi_b) = if m <= 1e-300 || w.norm() <= 1e-300 {
        (0.0, PI)
    } else {
        let psi_a = w.arg() + clamp_cos((a * a + m * m - b * b) / (2.0 * a * m)).acos();
        let rest = w - Complex64::from_polar(a, psi_a);
        (psi_a, rest.arg())
    };
    Some([psi_a, psi_b, psi_c])
}

/// Phases minimizing the one-way reader↔tag gain |a + b|. When the cascade
/// can out-weigh the direct link the element vectors are arranged to close
/// a polygon on −a; otherwise every term is turned against the direct link.
pub fn destructive_phases(
    state: &ChannelState,
    params: &SystemParams,
    geom: &ScenarioGeometry,
) -> RisConfig {
    let pl = PathLoss::new(params, geom);
    let a = state.h_rt * pl.reader_tag;
    let t = -a;
    let terms: Vec<Complex64> = per_element(&state.g_t, &state.g_r)
        .map(|c| c * pl.reader_tag_cascade)
        .collect();
    let r: Vec<f64> = terms.iter().map(|c| c.norm()).collect();
    let total: f64 = r.iter().sum();

    let mut psi = vec![t.arg(); terms.len()];
    if total > t.norm() {
        let (group, sums) = partition3(&r);
        let mut rank = [0usize, 1, 2];
        rank.sort_by(|&x, &y| sums[y].total_cmp(&sums[x]));
        let len = [sums[rank[0]], sums[rank[1]], sums[rank[2]]];
        let mut dir = [0.0; 3];
        match close_polygon(len, t) {
            Some(d) => {
                for k in 0..3 {
                    dir[rank[k]] = d[k];
                }
            }
            None => {
                // the largest group dominates: point it along t and the
                // remainder against it
                dir[rank[0]] = t.arg();
                dir[rank[1]] = t.arg() + PI;
                dir[rank[2]] = t.arg() + PI;
            }
        }
        for (i, g) in group.iter().enumerate() {
            psi[i] = dir[*g];
        }
    }
    let phases = terms.iter().zip(&psi).map(|(c, p)| p - c.arg()).collect();
    RisConfig::new(phases, RisStrategy::DestructiveJam)
}

/// Coordinate ascent over the 2^bits phase levels maximizing the reader's
/// SINR P_s|L|⁴ / (σ²_R + P_j|J|²), where J is Eve's composite gain into the
/// reader. Starts from quantized co-phasing.
pub fn anti_jam_phases(
    state: &ChannelState,
    params: &SystemParams,
    geom: &ScenarioGeometry,
    jammer_power_w: f64,
    bits: u32,
) -> Result<RisConfig> {
    let start = quantize_phases(&optimal_phases(state), bits)?;
    let n = state.ris_elements();
    if n == 0 {
        return Ok(RisConfig::new(Vec::new(), RisStrategy::AntiJam));
    }
    let pl = PathLoss::new(params, geom);
    let legit: Vec<Complex64> = per_element(&state.g_t, &state.g_r)
        .map(|c| c * pl.reader_tag_cascade)
        .collect();
    let jam: Vec<Complex64> = per_element(&state.g_e, &state.g_r)
        .map(|c| c * pl.eve_reader_cascade)
        .collect();
    let levels = 1usize << bits;
    let rot: Vec<Complex64> = (0..levels)
        .map(|k| Complex64::from_polar(1.0, TAU * k as f64 / levels as f64))
        .collect();
    let mut idx: Vec<usize> = start
        .phases()
        .iter()
        .map(|p| ((p / (TAU / levels as f64)).round() as usize) % levels)
        .collect();

    let ps = params.source_power_w();
    let noise = params.noise_reader_w();
    let sinr = |l: Complex64, j: Complex64| ps * l.norm_sqr().powi(2) / (noise + jammer_power_w * j.norm_sqr());

    let mut l_sum = state.h_rt * pl.reader_tag;
    let mut j_sum = state.h_re * pl.reader_eve;
    for i in 0..n {
        l_sum += legit[i] * rot[idx[i]];
        j_sum += jam[i] * rot[idx[i]];
    }
    for _ in 0..3 {
        let mut changed = false;
        for i in 0..n {
            let l_rest = l_sum - legit[i] * rot[idx[i]];
            let j_rest = j_sum - jam[i] * rot[idx[i]];
            let mut best = idx[i];
            let mut best_val = sinr(l_sum, j_sum);
            for (k, r) in rot.iter().enumerate() {
                let v = sinr(l_rest + legit[i] * r, j_rest + jam[i] * r);
                if v > best_val {
                    best = k;
                    best_val = v;
                }
            }
            if best != idx[i] {
                changed = true;
                idx[i] = best;
                l_sum = l_rest + legit[i] * rot[best];
                j_sum = j_rest + jam[i] * rot[best];
            }
        }
        if !changed {
            break;
        }
    }
    let step = TAU / levels as f64;
    let phases = idx.iter().map(|&k| k as f64 * step).collect();
    Ok(RisConfig::new(phases, RisStrategy::AntiJam))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::channel::{draw_channels, reader_tag_gain, tag_eve_gain};
    use crate::config::{default_geometry, default_params};

    fn real_positive(n: usize) -> ChannelState {
        let v = |x: f64| Complex64::new(x, 0.0);
        ChannelState {
            h_rt: v(0.7),
            g_r: (0..n).map(|i| v(1.0 + i as f64)).collect(),
            g_t: (0..n).map(|i| v(0.5 + i as f64)).collect(),
            h_te: v(0.3),
            h_re: v(0.2),
            g_e: (0..n).map(|i| v(2.0 + i as f64)).collect(),
        }
    }

    #[test]
    fn wrap_stays_in_range() {
        assert_eq!(wrap_phase(-1e-18), 0.0);
        assert!((wrap_phase(-PI) - PI).abs() < 1e-15);
        assert!((wrap_phase(3.0 * TAU + 1.0) - 1.0).abs() < 1e-12);
    }

    #[test]
    fn aligned_gains_need_no_shift() {
        let s = real_positive(4);
        assert!(optimal_phases(&s).phases().iter().all(|&p| p == 0.0));
        assert!(eavesdrop_phases(&s).phases().iter().all(|&p| p == 0.0));
    }

    #[test]
    fn one_bit_quantization_rounds_to_zero() {
        let cfg = RisConfig::new(vec![PI / 3.0], RisStrategy::Random);
        let q = quantize_phases(&cfg, 1).unwrap();
        assert_eq!(q.phases(), &[0.0]);
        assert_eq!(q.strategy(), RisStrategy::Quantized(1));
        // values just below 2π wrap to level 0 rather than 2π
        let near = RisConfig::new(vec![TAU - 1e-6], RisStrategy::Random);
        assert_eq!(quantize_phases(&near, 4).unwrap().phases(), &[0.0]);
        assert!(quantize_phases(&cfg, 0).is_err());
    }

    #[test]
    fn quantization_is_idempotent() {
        let cfg = random_phases(64, 3).unwrap();
        for bits in 1..=8 {
            let q1 = quantize_phases(&cfg, bits).unwrap();
            let q2 = quantize_phases(&q1, bits).unwrap();
            assert_eq!(q1.phases(), q2.phases());
        }
    }

    #[test]
    fn fine_quantization_costs_little() {
        let p = default_params().with_ris_elements(50);
        let g = default_geometry();
        let (mut cont, mut quant) = (0.0, 0.0);
        for seed in 0..1000 {
            let s = draw_channels(seed, &p);
            let opt = optimal_phases(&s);
            cont += reader_tag_gain(&s, &opt, &p, &g).unwrap().norm_sqr().powi(2);
            let q = quantize_phases(&opt, 10).unwrap();
            quant += reader_tag_gain(&s, &q, &p, &g).unwrap().norm_sqr().powi(2);
        }
        assert!((cont - quant) / cont < 1e-3);
    }

    #[test]
    fn random_phases_are_seeded_and_uniform() {
        assert_eq!(random_phases(10, 5).unwrap(), random_phases(10, 5).unwrap());
        assert!(random_phases(0, 5).is_err());
        let one = random_phases(1, 9).unwrap();
        assert!((0.0..TAU).contains(&one.phases()[0]));
        let big = random_phases(100_000, 11).unwrap();
        let mean = big.phases().iter().sum::<f64>() / 1e5;
        assert!((mean - PI).abs() < 0.02, "{mean}");
    }

    #[test]
    fn destructive_cancels_when_cascade_matches_direct() {
        let p = default_params().with_ris_elements(1);
        let g = default_geometry();
        let pl = PathLoss::new(&p, &g);
        let h_rt = Complex64::from_polar(1.3, 0.4);
        // one element whose cascade magnitude equals |a|
        let mag = 1.3 * pl.reader_tag / pl.reader_tag_cascade;
        let s = ChannelState {
            h_rt,
            g_r: vec![Complex64::from_polar(mag.sqrt(), 1.1)],
            g_t: vec![Complex64::from_polar(mag.sqrt(), -2.0)],
            h_te: h_rt,
            h_re: h_rt,
            g_e: vec![h_rt],
        };
        let cfg = destructive_phases(&s, &p, &g);
        let gain = reader_tag_gain(&s, &cfg, &p, &g).unwrap().norm();
        assert!(gain < 1e-12 * pl.reader_tag, "{gain}");
    }

    /// Smallest |a + b| reachable with fixed element magnitudes.
    fn null_lower_bound(s: &ChannelState, p: &SystemParams, g: &ScenarioGeometry) -> f64 {
        let pl = PathLoss::new(p, g);
        let t = (s.h_rt * pl.reader_tag).norm();
        let r: Vec<f64> = per_element(&s.g_t, &s.g_r)
            .map(|c| c.norm() * pl.reader_tag_cascade)
            .collect();
        let total: f64 = r.iter().sum();
        let biggest = r.iter().copied().fold(0.0, f64::max);
        (t - total).max(2.0 * biggest - total - t).max(0.0)
    }

    #[test]
    fn destructive_reaches_the_lower_bound() {
        let g = default_geometry();
        for n in [1usize, 2, 3, 20, 100] {
            let p = default_params().with_ris_elements(n);
            for seed in 0..200 {
                let s = draw_channels(seed, &p);
                let cfg = destructive_phases(&s, &p, &g);
                let d = reader_tag_gain(&s, &cfg, &p, &g).unwrap().norm();
                let lb = null_lower_bound(&s, &p, &g);
                let opt = reader_tag_gain(&s, &optimal_phases(&s), &p, &g).unwrap().norm();
                assert!(d - lb <= 1e-9 * opt, "n={n} seed={seed} d={d} lb={lb}");
            }
        }
    }

    #[test]
    fn destructive_beats_random_search() {
        let p = default_params().with_ris_elements(5);
        let g = default_geometry();
        let s = draw_channels(17, &p);
        let d = reader_tag_gain(&s, &destructive_phases(&s, &p, &g), &p, &g).unwrap().norm();
        for k in 0..10_000 {
            let r = random_phases(5, 1000 + k).unwrap();
            assert!(d <= reader_tag_gain(&s, &r, &p, &g).unwrap().norm() + 1e-15);
        }
    }

    #[test]
    fn eavesdrop_beats_random_search() {
        let p = default_params().with_ris_elements(6);
        let g = default_geometry();
        let s = draw_channels(23, &p);
        let e = tag_eve_gain(&s, &eavesdrop_phases(&s), &p, &g).unwrap().norm();
        for k in 0..10_000 {
            let r = random_phases(6, 5000 + k).unwrap();
            assert!(e + 1e-12 >= tag_eve_gain(&s, &r, &p, &g).unwrap().norm());
        }
    }

    #[test]
    fn anti_jam_never_loses_to_its_start() {
        let p = default_params().with_ris_elements(30);
        let g = default_geometry();
        let pj = p.source_power_w();
        for seed in 0..20 {
            let s = draw_channels(seed, &p);
            let sinr = |cfg: &RisConfig| {
                let l = reader_tag_gain(&s, cfg, &p, &g).unwrap();
                let j = crate::channel::eve_reader_gain(&s, cfg, &p, &g).unwrap();
                l.norm_sqr().powi(2) / (p.noise_reader_w() + pj * j.norm_sqr())
            };
            let start = quantize_phases(&optimal_phases(&s), 4).unwrap();
            let aj = anti_jam_phases(&s, &p, &g, pj, 4).unwrap();
            assert!(sinr(&aj) >= sinr(&start) * (1.0 - 1e-12));
        }
    }

    #[test]
    fn off_config_has_no_phases() {
        let off = RisConfig::new(vec![1.0, 2.0], RisStrategy::Off);
        assert!(off.is_off() && off.is_empty());
        assert!(quantize_phases(&off, 3).unwrap().is_off());
    }
}
