//! Reader side: RSS measurement, the min/max ratio statistic, the tag
//! database and the tag-authentication decision.

use std::collections::BTreeMap;

use num_complex::Complex64;
use rand::Rng;
use rand_distr::{Distribution, Gamma};

use crate::channel::{reader_tag_gain, ChannelState};
use crate::config::{ScenarioGeometry, SystemParams};
use crate::error::{Error, Result};
use crate::ris::RisConfig;
use crate::rng::{complex_gaussian, rng_from_seed};
use crate::tag::PowerProfile;
use crate::Decision;

#[derive(Debug, Clone, PartialEq)]
pub struct TagRecord {
    pub tag_id: String,
    pub rss_baseline: f64,
    pub power_profile: PowerProfile,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct ReaderDatabase {
    records: BTreeMap<String, TagRecord>,
}

impl ReaderDatabase {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn get(&self, tag_id: &str) -> Result<&TagRecord> {
        self.records
            .get(tag_id)
            .ok_or_else(|| Error::UnknownTag(tag_id.to_string()))
    }

    pub fn records(&self) -> impl Iterator<Item = &TagRecord> {
        self.records.values()
    }

    pub fn register_tag(&mut self, tag_id: &str, rss0: f64, pp: PowerProfile) -> Result<()> {
        if tag_id.is_empty() || tag_id.contains([',', '\n', '\r']) || tag_id.starts_with('#') {
            return Err(Error::invalid(format!("tag id {tag_id:?} is not storable")));
        }
        if !(rss0 > 0.0 && rss0.is_finite()) {
            return Err(Error::invalid(format!("baseline RSS {rss0} must be > 0")));
        }
        if self.records.contains_key(tag_id) {
            return Err(Error::DuplicateTag(tag_id.to_string()));
        }
        self.records.insert(
            tag_id.to_string(),
            TagRecord {
                tag_id: tag_id.to_string(),
                rss_baseline: rss0,
                power_profile: pp,
            },
        );
        Ok(())
    }

    /// One `id,rss_baseline_w,profile_bits` line per record.
    pub fn export_table(&self) -> String {
        let mut out = String::from("# id,rss_baseline_w,power_profile\n");
        for r in self.records.values() {
            out.push_str(&format!(
                "{},{},{}\n",
                r.tag_id,
                r.rss_baseline,
                r.power_profile.to_bit_string()
            ));
        }
        out
    }

    pub fn import_table(text: &str, symbol_period_s: f64) -> Result<Self> {
        let mut db = Self::new();
        for (i, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let parse_err = |message: String| Error::Parse {
                line: i + 1,
                message,
            };
            let fields: Vec<&str> = line.split(',').map(str::trim).collect();
            let [id, rss, bits] = fields[..] else {
                return Err(parse_err(format!("expected 3 fields, found {}", fields.len())));
            };
            let rss: f64 = rss
                .parse()
                .map_err(|_| parse_err(format!("bad RSS value {rss:?}")))?;
            let pp = PowerProfile::from_bit_string(bits, symbol_period_s)
                .map_err(|e| parse_err(e.to_string()))?;
            db.register_tag(id, rss, pp)
                .map_err(|e| parse_err(e.to_string()))?;
        }
        Ok(db)
    }
}

/// Noise-free RSS = P_s·|a + b|⁴.
pub fn rss_noise_free(
    state: &ChannelState,
    cfg: &RisConfig,
    params: &SystemParams,
    geom: &ScenarioGeometry,
) -> Result<f64> {
    let g = reader_tag_gain(state, cfg, params, geom)?;
    Ok(params.source_power_w() * g.norm_sqr() * g.norm_sqr())
}

/// Unbiased power estimate of a constant `amplitude` in CN(0, noise_var)
/// noise averaged over `symbols` observations, floored at zero.
///
/// The K-sample mean of |s + n_k|² is drawn exactly as
/// |s + n̄|² + Gamma(K−1, σ²)/K with n̄ ~ CN(0, σ²/K).
pub fn estimate_power<R: Rng + ?Sized>(
    amplitude: Complex64,
    noise_var: f64,
    symbols: usize,
    rng: &mut R,
) -> f64 {
    let k = symbols.max(1);
    let mean_noise = complex_gaussian(rng) * (noise_var / k as f64).sqrt();
    let mut avg = (amplitude + mean_noise).norm_sqr();
    if k > 1 && noise_var > 0.0 {
        let spread = Gamma::new((k - 1) as f64, noise_var).expect("valid gamma parameters");
        avg += spread.sample(rng) / k as f64;
    }
    (avg - noise_var).max(0.0)
}

/// RSS at the reader. Without a noise seed this is the exact noise-free
/// value; with one it is the averaged, noise-corrected estimate.
pub fn measure_rss(
    state: &ChannelState,
    cfg: &RisConfig,
    params: &SystemParams,
    geom: &ScenarioGeometry,
    noise_seed: Option<u64>,
) -> Result<f64> {
    let g = reader_tag_gain(state, cfg, params, geom)?;
    let amplitude = g * g * params.source_power_w().sqrt();
    Ok(match noise_seed {
        None => amplitude.norm_sqr(),
        Some(seed) => estimate_power(
            amplitude,
            params.noise_reader_w(),
            params.rss_averaging_symbols,
            &mut rng_from_seed(seed),
        ),
    })
}

/// min/max of the two readings, in (0, 1].
pub fn rss_ratio(baseline: f64, observed: f64) -> Result<f64> {
    for (name, v) in [("baseline", baseline), ("observed", observed)] {
        if !(v > 0.0 && v.is_finite()) {
            return Err(Error::invalid(format!("{name} RSS {v} must be positive and finite")));
        }
    }
    Ok(if observed <= baseline {
        observed / baseline
    } else {
        baseline / observed
    })
}

/// Ratio used as a detection score. A reading floored to zero scores 0.
pub fn ratio_statistic(baseline: f64, observed: f64) -> f64 {
    rss_ratio(baseline, observed).unwrap_or(0.0)
}

/// Accept iff the claimed tag is registered and ratio ≥ threshold.
pub fn authenticate_tag(
    db: &ReaderDatabase,
    claimed_id: &str,
    observed_rss: f64,
    threshold: f64,
) -> Decision {
    match db.get(claimed_id) {
        Ok(rec) if ratio_statistic(rec.rss_baseline, observed_rss) >= threshold => Decision::Accept,
        _ => Decision::Reject,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::channel::{draw_channels, received_reader};
    use crate::config::{default_geometry, default_params};
    use crate::ris::{optimal_phases, RisStrategy};

    fn pp() -> PowerProfile {
        PowerProfile::new(vec![true, false, true], 1e-2).unwrap()
    }

    #[test]
    fn ratio_examples() {
        assert_eq!(rss_ratio(4.0, 4.0).unwrap(), 1.0);
        assert_eq!(rss_ratio(4.0, 2.0).unwrap(), 0.5);
        assert_eq!(rss_ratio(2.0, 4.0).unwrap(), 0.5);
        assert!(rss_ratio(0.0, 1.0).is_err());
        assert!(rss_ratio(1.0, -1.0).is_err());
        assert_eq!(ratio_statistic(1.0, 0.0), 0.0);
    }

    #[test]
    fn unit_geometry_rss() {
        let mut p = default_params().with_ris_elements(2);
        p.source_power_dbm = 30.0;
        let g = ScenarioGeometry {
            d_reader_ris_m: 1.0,
            d_tag_ris_m: 1.0,
            d_tag_eve_m: 1.0,
            d_reader_eve_m: 1.0,
            d_eve_ris_m: 1.0,
            d_tag_reader_m: 1.0,
        };
        let one = Complex64::new(1.0, 0.0);
        let mut s = ChannelState {
            h_rt: one,
            g_r: vec![one; 2],
            g_t: vec![one; 2],
            h_te: one,
            h_re: one,
            g_e: vec![one; 2],
        };
        let aligned = RisConfig::new(vec![0.0; 2], RisStrategy::Optimal);
        assert!((measure_rss(&s, &aligned, &p, &g, None).unwrap() - 81.0).abs() < 1e-12);
        s.g_r.clear();
        s.g_t.clear();
        s.g_e.clear();
        assert!((measure_rss(&s, &RisConfig::off(), &p, &g, None).unwrap() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn single_symbol_matches_noisy_received_sample() {
        let p = default_params().with_ris_elements(10);
        let p1 = SystemParams {
            rss_averaging_symbols: 1,
            ..p.clone()
        };
        let g = default_geometry();
        for seed in 0..200 {
            let s = draw_channels(seed, &p);
            let cfg = optimal_phases(&s);
            let y = received_reader(&s, &cfg, &p1, &g, Some(seed + 7)).unwrap();
            let expect = (y.value.norm_sqr() - y.noise_var_w).max(0.0);
            let got = measure_rss(&s, &cfg, &p1, &g, Some(seed + 7)).unwrap();
            assert!((got - expect).abs() <= 1e-12 * expect.max(1e-30), "{got} vs {expect}");
        }
    }

    #[test]
    fn averaged_estimate_is_unbiased_and_tighter() {
        let amp = Complex64::new(0.3, -0.1);
        let truth = amp.norm_sqr();
        let mut rng = rng_from_seed(1);
        let n = 20_000;
        let run = |k: usize, rng: &mut crate::rng::SimRng| {
            let xs: Vec<f64> = (0..n)
                // flooring never triggers at this SNR, so the mean is unbiased
                .map(|_| estimate_power(amp, 0.01, k, rng))
                .collect();
            let m = xs.iter().sum::<f64>() / n as f64;
            let v = xs.iter().map(|x| (x - m).powi(2)).sum::<f64>() / n as f64;
            (m, v)
        };
        let (m1, v1) = run(1, &mut rng);
        let (m64, v64) = run(64, &mut rng);
        assert!((m1 - truth).abs() < 0.01 * truth, "{m1}");
        assert!((m64 - truth).abs() < 0.01 * truth, "{m64}");
        assert!(v64 < v1 / 20.0);
    }

    #[test]
    fn database_rules() {
        let mut db = ReaderDatabase::new();
        db.register_tag("tag-1", 2.0, pp()).unwrap();
        assert_eq!(db.len(), 1);
        assert!(matches!(db.register_tag("tag-1", 3.0, pp()), Err(Error::DuplicateTag(_))));
        assert!(db.register_tag("tag-2", 0.0, pp()).is_err());
        assert!(db.register_tag("a,b", 1.0, pp()).is_err());
        assert!(matches!(db.get("nope"), Err(Error::UnknownTag(_))));

        assert_eq!(authenticate_tag(&db, "tag-1", 2.0, 1.0), Decision::Accept);
        assert_eq!(authenticate_tag(&db, "tag-1", 0.5, 0.9), Decision::Reject);
        assert_eq!(authenticate_tag(&db, "tag-1", 1.0, 0.5), Decision::Accept);
        assert_eq!(authenticate_tag(&db, "ghost", 2.0, 0.1), Decision::Reject);
    }

    #[test]
    fn table_round_trip() {
        let mut db = ReaderDatabase::new();
        db.register_tag("tag-1", 1.234_567_890_123e-7, pp()).unwrap();
        db.register_tag("tag-2", 3.5, PowerProfile::new(vec![false, true], 1e-2).unwrap())
            .unwrap();
        let text = db.export_table();
        assert_eq!(ReaderDatabase::import_table(&text, 1e-2).unwrap(), db);
        assert!(matches!(
            ReaderDatabase::import_table("x,1.0\n", 1e-2),
            Err(Error::Parse { line: 1, .. })
        ));
        assert!(ReaderDatabase::import_table("x,abc,10\n", 1e-2).is_err());
        assert!(ReaderDatabase::import_table("x,1,10\nx,2,01\n", 1e-2).is_err());
    }
}
