//! Named experiment pipelines, their spec files, and result export.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;
use std::str::FromStr;

use rayon::prelude::*;
use serde::Serialize;
use serde_json::{json, Value};

use crate::adversary::{
    jamming_trial, legitimate_trial, resolve_eve_power, run_trial, AttackKind, EvePower,
    RisControl, Side, TrialKind, TrialOutcome, TrialSetup,
};
use crate::config::{parse_f64, parse_kv, parse_list, parse_u64, parse_usize, Scenario};
use crate::error::{Error, Result};
use crate::roc::{build_roc, Direction};
use crate::rng::derive_seed;
use crate::secrecy::{compute_asc, RisMode};

pub const VERSION: &str = concat!("rispla v", env!("CARGO_PKG_VERSION"));
pub const MIN_TRIALS: usize = 100;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum ExperimentName {
    RocTag,
    TagPowerDensity,
    RocReader,
    AttackerDensity,
    DistanceTable,
    Asc,
    RocMaliciousRis,
}

impl ExperimentName {
    pub const ALL: [ExperimentName; 7] = [
        ExperimentName::RocTag,
        ExperimentName::TagPowerDensity,
        ExperimentName::RocReader,
        ExperimentName::AttackerDensity,
        ExperimentName::DistanceTable,
        ExperimentName::Asc,
        ExperimentName::RocMaliciousRis,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            ExperimentName::RocTag => "roc-tag",
            ExperimentName::TagPowerDensity => "tag-power-density",
            ExperimentName::RocReader => "roc-reader",
            ExperimentName::AttackerDensity => "attacker-density",
            ExperimentName::DistanceTable => "distance-table",
            ExperimentName::Asc => "asc",
            ExperimentName::RocMaliciousRis => "roc-malicious-ris",
        }
    }

    pub fn description(self) -> &'static str {
        match self {
            ExperimentName::RocTag => "tag authenticating the reader: ROC against a fake reader",
            ExperimentName::TagPowerDensity => {
                "tag-side authentication rate vs. fake-reader density and source power"
            }
            ExperimentName::RocReader => "reader authenticating the tag: ROC per attack kind",
            ExperimentName::AttackerDensity => {
                "reader-side authentication rate vs. impersonator density"
            }
            ExperimentName::DistanceTable => "attacker-free reader accuracy vs. tag-reader distance",
            ExperimentName::Asc => "average secrecy capacity with trusted, malicious and no RIS",
            ExperimentName::RocMaliciousRis => "reader-side ROC with a compromised RIS",
        }
    }
}

impl FromStr for ExperimentName {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        ExperimentName::ALL
            .into_iter()
            .find(|n| n.as_str() == s)
            .ok_or_else(|| Error::config("name", format!("unknown experiment `{s}`")))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentSpec {
    pub name: ExperimentName,
    pub trials: usize,
    pub seed: u64,
    pub n_ris_list: Vec<usize>,
    /// Attacker fractions for the mixed-stream experiments.
    pub densities: Vec<f64>,
    pub source_power_list_dbm: Vec<f64>,
    pub distance_list_m: Vec<f64>,
    pub gamma_grid_db: Vec<f64>,
    pub eve_power: EvePower,
    /// Calibration trials for matched Eve power.
    pub pilots: usize,
    pub scenario: Scenario,
}

impl ExperimentSpec {
    pub fn new(name: ExperimentName) -> Self {
        ExperimentSpec {
            name,
            trials: 10_000,
            seed: 42,
            n_ris_list: vec![0, 20, 50, 100],
            densities: vec![0.0, 0.1, 0.2, 0.3, 0.4, 0.5],
            source_power_list_dbm: vec![-5.0, 0.0, 1.0, 5.0],
            distance_list_m: vec![2.0, 3.0, 4.0, 5.0, 6.0],
            gamma_grid_db: (0..=10).map(|k| -10.0 + 5.0 * k as f64).collect(),
            eve_power: EvePower::Matched,
            pilots: 2_000,
            scenario: Scenario::default(),
        }
    }

    pub fn parse(text: &str) -> Result<Self> {
        let entries = parse_kv(text)?;
        let name = entries
            .iter()
            .find(|e| e.key == "name")
            .ok_or_else(|| Error::config("name", "missing experiment name"))?;
        let mut spec = ExperimentSpec::new(name.value.parse()?);
        for e in &entries {
            let (k, v) = (e.key.as_str(), e.value.as_str());
            match k {
                "name" => {}
                "trials" => spec.trials = parse_usize(k, v)?,
                "seed" => spec.seed = parse_u64(k, v)?,
                "n_ris_list" => spec.n_ris_list = parse_list(k, v, parse_usize)?,
                "densities" => spec.densities = parse_list(k, v, parse_f64)?,
                "source_power_list_dbm" => spec.source_power_list_dbm = parse_list(k, v, parse_f64)?,
                "distance_list_m" => spec.distance_list_m = parse_list(k, v, parse_f64)?,
                "gamma_grid_db" => spec.gamma_grid_db = parse_list(k, v, parse_f64)?,
                "eve_power" => spec.eve_power = parse_eve_power(v)?,
                "pilots" => spec.pilots = parse_usize(k, v)?,
                _ => {
                    if !spec.scenario.set(k, v)? {
                        return Err(Error::config(k, "unknown key"));
                    }
                }
            }
        }
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<()> {
        if self.trials < MIN_TRIALS {
            return Err(Error::config(
                "trials",
                format!("{} is below the minimum of {MIN_TRIALS}", self.trials),
            ));
        }
        if self.n_ris_list.is_empty() {
            return Err(Error::config("n_ris_list", "must not be empty"));
        }
        let nonempty = [
            ("densities", self.densities.is_empty()),
            ("source_power_list_dbm", self.source_power_list_dbm.is_empty()),
            ("distance_list_m", self.distance_list_m.is_empty()),
            ("gamma_grid_db", self.gamma_grid_db.is_empty()),
        ];
        if let Some((field, _)) = nonempty.iter().find(|(_, empty)| *empty) {
            return Err(Error::config(*field, "must not be empty"));
        }
        if let Some(d) = self.densities.iter().find(|d| !(0.0..=1.0).contains(*d)) {
            return Err(Error::config("densities", format!("{d} outside [0, 1]")));
        }
        if let Some(d) = self.distance_list_m.iter().find(|d| !(**d > 0.0)) {
            return Err(Error::config("distance_list_m", format!("{d} must be > 0")));
        }
        if self.pilots == 0 {
            return Err(Error::config("pilots", "must be >= 1"));
        }
        if let EvePower::Scaled(s) = self.eve_power {
            if !(s >= 0.0 && s.is_finite()) {
                return Err(Error::config("eve_power", "scale must be >= 0"));
            }
        }
        self.scenario.validate()
    }
}

fn parse_eve_power(v: &str) -> Result<EvePower> {
    match v {
        "parity" => Ok(EvePower::Parity),
        "matched" => Ok(EvePower::Matched),
        other => parse_f64("eve_power", other).map(EvePower::Scaled).map_err(|_| {
            Error::config(
                "eve_power",
                format!("expected `parity`, `matched` or a number, got `{other}`"),
            )
        }),
    }
}

pub fn load_spec(path: &Path) -> Result<ExperimentSpec> {
    let text = fs::read_to_string(path)?;
    ExperimentSpec::parse(&text)
}

/// One CSV artifact.
#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    pub file_name: String,
    pub csv: String,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentOutput {
    pub tables: Vec<Table>,
    pub summary: Value,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OutputFormat {
    Csv,
    Json,
    Both,
}

impl FromStr for OutputFormat {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "csv" => Ok(OutputFormat::Csv),
            "json" => Ok(OutputFormat::Json),
            "both" => Ok(OutputFormat::Both),
            other => Err(Error::config("format", format!("expected csv, json or both, got `{other}`"))),
        }
    }
}

impl ExperimentOutput {
    pub fn write(&self, dir: &Path, format: OutputFormat) -> Result<Vec<String>> {
        fs::create_dir_all(dir)?;
        let mut written = Vec::new();
        if format != OutputFormat::Json {
            for t in &self.tables {
                fs::write(dir.join(&t.file_name), &t.csv)?;
                written.push(t.file_name.clone());
            }
        }
        if format != OutputFormat::Csv {
            let mut text = serde_json::to_string_pretty(&self.summary)?;
            text.push('\n');
            fs::write(dir.join("summary.json"), text)?;
            written.push("summary.json".into());
        }
        Ok(written)
    }
}

// Seed stream labels. Every trial seed is derive_seed(master, [stream, n, class, i]).
const STREAM_ROC: u64 = 1;
const STREAM_DENSITY: u64 = 2;
const STREAM_DISTANCE: u64 = 3;
const STREAM_MALICIOUS: u64 = 4;
const STREAM_JAM: u64 = 5;
const CLASS_LEGIT: u64 = 0;
const CLASS_PILOT: u64 = 1_000;

fn class_of(kind: AttackKind) -> u64 {
    1 + kind as u64
}

/// Runs `trials` trials in parallel, returning outcomes in index order.
pub fn run_stream(
    kind: TrialKind,
    side: Side,
    setup: &TrialSetup,
    seed_of: impl Fn(u64) -> u64 + Sync,
    trials: usize,
) -> Result<Vec<TrialOutcome>> {
    (0..trials as u64)
        .into_par_iter()
        .map(|i| match kind {
            TrialKind::Legitimate => legitimate_trial(side, setup, seed_of(i)),
            TrialKind::Attack(_) => run_trial(kind, setup, seed_of(i)),
        })
        .collect()
}

fn statistics(outcomes: &[TrialOutcome]) -> Vec<f64> {
    outcomes.iter().map(|o| o.statistic).collect()
}

fn accept_rate(outcomes: &[TrialOutcome]) -> f64 {
    outcomes.iter().filter(|o| o.decision.is_accept()).count() as f64 / outcomes.len() as f64
}

/// Accuracy of a stream whose first round(d·T) trials are attacks and the
/// rest legitimate.
fn mixed_accuracy(legit: &[TrialOutcome], attack: &[TrialOutcome], density: f64) -> f64 {
    let t = legit.len();
    let n_attack = (density * t as f64).round() as usize;
    let correct = attack[..n_attack]
        .iter()
        .filter(|o| !o.decision.is_accept())
        .count()
        + legit[n_attack..].iter().filter(|o| o.decision.is_accept()).count();
    correct as f64 / t as f64
}

fn direction(side: Side) -> Direction {
    match side {
        Side::Reader => Direction::HigherIsAuthentic,
        Side::Tag => Direction::LowerIsAuthentic,
    }
}

struct RocRun {
    auc: f64,
    csv: String,
    authentication_rate: f64,
    far: f64,
    eve_power_scale: f64,
}

fn roc_run(
    spec: &ExperimentSpec,
    stream: u64,
    n: usize,
    side: Side,
    kind: AttackKind,
    control: RisControl,
) -> Result<RocRun> {
    let base = TrialSetup::new(&spec.scenario.params, &spec.scenario.geometry, n)?.with_control(control);
    let pilot_seed = derive_seed(spec.seed, &[stream, n as u64, CLASS_PILOT + class_of(kind)]);
    let scale = resolve_eve_power(spec.eve_power, kind, &base, pilot_seed, spec.pilots)?;
    let setup = base.with_eve_power_scale(scale);
    let legit = run_stream(
        TrialKind::Legitimate,
        side,
        &setup,
        |i| derive_seed(spec.seed, &[stream, n as u64, CLASS_LEGIT, i]),
        spec.trials,
    )?;
    let attack = run_stream(
        TrialKind::Attack(kind),
        side,
        &setup,
        |i| derive_seed(spec.seed, &[stream, n as u64, class_of(kind), i]),
        spec.trials,
    )?;
    let roc = build_roc(&statistics(&legit), &statistics(&attack), direction(side))?;
    Ok(RocRun {
        auc: roc.auc,
        csv: roc.to_csv(),
        authentication_rate: accept_rate(&legit),
        far: accept_rate(&attack),
        eve_power_scale: scale,
    })
}

fn roc_entry(n: usize, kind: AttackKind, r: &RocRun) -> Value {
    json!({
        "n_ris": n,
        "attack": kind.name(),
        "auc": r.auc,
        "authentication_rate": r.authentication_rate,
        "far": r.far,
        "eve_power_scale": r.eve_power_scale,
    })
}

fn eve_power_json(p: EvePower) -> Value {
    match p {
        EvePower::Parity => json!("parity"),
        EvePower::Matched => json!("matched"),
        EvePower::Scaled(s) => json!(s),
    }
}

fn metric_definition(name: ExperimentName) -> &'static str {
    match name {
        ExperimentName::RocTag | ExperimentName::RocReader | ExperimentName::RocMaliciousRis => {
            "ROC over all distinct statistic values, accept inclusive on the authentic side; \
             auc by trapezoid; authentication_rate and far at the default threshold"
        }
        ExperimentName::TagPowerDensity | ExperimentName::AttackerDensity => {
            "authentication_rate = fraction of correct decisions at the default threshold in a \
             mixed stream whose first round(density*trials) trials are attacks and the rest legitimate"
        }
        ExperimentName::DistanceTable => {
            "accuracy = fraction of attacker-free legitimate trials accepted at the default threshold"
        }
        ExperimentName::Asc => {
            "asc_bits = mean over channel draws of [log2(1+gR) - log2(1+gE)]+, both SNRs scaled so \
             the mean reader SNR hits each grid point"
        }
    }
}

fn n_label(n: usize) -> String {
    format!("N{n}")
}

/// Runs an experiment on the current rayon pool.
pub fn run_experiment(spec: &ExperimentSpec) -> Result<ExperimentOutput> {
    spec.validate()?;
    let mut tables = Vec::new();
    let results = match spec.name {
        ExperimentName::RocTag => {
            let mut out = Vec::new();
            for &n in &spec.n_ris_list {
                let r = roc_run(spec, STREAM_ROC, n, Side::Tag, AttackKind::FakeReader, RisControl::Trusted)?;
                tables.push(Table {
                    file_name: format!("roc-tag_{}.csv", n_label(n)),
                    csv: r.csv.clone(),
                });
                out.push(roc_entry(n, AttackKind::FakeReader, &r));
            }
            json!(out)
        }
        ExperimentName::RocReader => {
            let mut out = Vec::new();
            for &n in &spec.n_ris_list {
                for kind in AttackKind::READER_SIDE {
                    let r = roc_run(spec, STREAM_ROC, n, Side::Reader, kind, RisControl::Trusted)?;
                    let file_name = if kind == AttackKind::ImpersonatingTag {
                        format!("roc-reader_{}.csv", n_label(n))
                    } else {
                        format!("roc-reader-{}_{}.csv", kind.name(), n_label(n))
                    };
                    tables.push(Table {
                        file_name,
                        csv: r.csv.clone(),
                    });
                    out.push(roc_entry(n, kind, &r));
                }
            }
            json!(out)
        }
        ExperimentName::RocMaliciousRis => {
            let mut out = Vec::new();
            for &n in &spec.n_ris_list {
                let kind = AttackKind::ImpersonatingTag;
                let r = roc_run(spec, STREAM_MALICIOUS, n, Side::Reader, kind, RisControl::Malicious)?;
                tables.push(Table {
                    file_name: format!("roc-malicious-ris_{}.csv", n_label(n)),
                    csv: r.csv.clone(),
                });
                let setup = TrialSetup::new(&spec.scenario.params, &spec.scenario.geometry, n)?;
                let mut deltas = (0..spec.trials as u64)
                    .into_par_iter()
                    .map(|i| jamming_trial(true, &setup, derive_seed(spec.seed, &[STREAM_JAM, n as u64, i])))
                    .collect::<Result<Vec<f64>>>()?;
                deltas.sort_by(f64::total_cmp);
                let mut entry = roc_entry(n, kind, &r);
                entry["median_green_jamming_db"] = json!(deltas[deltas.len() / 2]);
                out.push(entry);
            }
            json!(out)
        }
        ExperimentName::TagPowerDensity | ExperimentName::AttackerDensity => {
            let (side, kind, powers, prefix) = if spec.name == ExperimentName::TagPowerDensity {
                (Side::Tag, AttackKind::FakeReader, spec.source_power_list_dbm.clone(), "tag-power-density")
            } else {
                (
                    Side::Reader,
                    AttackKind::ImpersonatingTag,
                    vec![spec.scenario.params.source_power_dbm],
                    "attacker-density",
                )
            };
            let mut out = Vec::new();
            for &n in &spec.n_ris_list {
                let mut csv = String::from("source_power_dbm,density,authentication_rate\n");
                for &ps in &powers {
                    let mut params = spec.scenario.params.clone();
                    params.source_power_dbm = ps;
                    let base = TrialSetup::new(&params, &spec.scenario.geometry, n)?;
                    let pilot_seed =
                        derive_seed(spec.seed, &[STREAM_DENSITY, n as u64, CLASS_PILOT + class_of(kind)]);
                    let scale = resolve_eve_power(spec.eve_power, kind, &base, pilot_seed, spec.pilots)?;
                    let setup = base.with_eve_power_scale(scale);
                    let legit = run_stream(
                        TrialKind::Legitimate,
                        side,
                        &setup,
                        |i| derive_seed(spec.seed, &[STREAM_DENSITY, n as u64, CLASS_LEGIT, i]),
                        spec.trials,
                    )?;
                    let attack = run_stream(
                        TrialKind::Attack(kind),
                        side,
                        &setup,
                        |i| derive_seed(spec.seed, &[STREAM_DENSITY, n as u64, class_of(kind), i]),
                        spec.trials,
                    )?;
                    for &d in &spec.densities {
                        let rate = mixed_accuracy(&legit, &attack, d);
                        let _ = writeln!(csv, "{ps},{d},{rate}");
                        out.push(json!({
                            "n_ris": n,
                            "source_power_dbm": ps,
                            "density": d,
                            "authentication_rate": rate,
                            "eve_power_scale": scale,
                        }));
                    }
                }
                tables.push(Table {
                    file_name: format!("{prefix}_{}.csv", n_label(n)),
                    csv,
                });
            }
            json!(out)
        }
        ExperimentName::DistanceTable => {
            let mut out = Vec::new();
            for &n in &spec.n_ris_list {
                let mut csv = String::from("d_tag_reader_m,accuracy\n");
                for &d in &spec.distance_list_m {
                    let mut geom = spec.scenario.geometry;
                    geom.d_tag_reader_m = d;
                    let setup = TrialSetup::new(&spec.scenario.params, &geom, n)?;
                    // same seeds at every distance
                    let legit = run_stream(
                        TrialKind::Legitimate,
                        Side::Reader,
                        &setup,
                        |i| derive_seed(spec.seed, &[STREAM_DISTANCE, n as u64, CLASS_LEGIT, i]),
                        spec.trials,
                    )?;
                    let acc = accept_rate(&legit);
                    let _ = writeln!(csv, "{d},{acc}");
                    out.push(json!({ "n_ris": n, "d_tag_reader_m": d, "accuracy": acc }));
                }
                tables.push(Table {
                    file_name: format!("distance-table_{}.csv", n_label(n)),
                    csv,
                });
            }
            json!(out)
        }
        ExperimentName::Asc => {
            let mut out = Vec::new();
            let mut did_off = false;
            for &n in &spec.n_ris_list {
                let modes: &[RisMode] = if n == 0 {
                    if did_off {
                        continue;
                    }
                    did_off = true;
                    &[RisMode::Off]
                } else {
                    &[RisMode::Trusted, RisMode::Malicious]
                };
                for &mode in modes {
                    let curve = compute_asc(
                        mode,
                        n,
                        &spec.gamma_grid_db,
                        spec.trials,
                        &spec.scenario.params,
                        &spec.scenario.geometry,
                        spec.seed,
                    )?;
                    tables.push(Table {
                        file_name: format!("asc_{}_{}.csv", mode.name(), n_label(n)),
                        csv: curve.to_csv(),
                    });
                    out.push(json!({
                        "mode": mode.name(),
                        "n_ris": n,
                        "gamma_r_bar_db": curve.gamma_r_bar_db,
                        "asc_bits": curve.asc_bits,
                    }));
                }
            }
            json!(out)
        }
    };

    let summary = json!({
        "experiment": spec.name.as_str(),
        "version": VERSION,
        "seed": spec.seed,
        "trials": spec.trials,
        "n_ris_list": spec.n_ris_list,
        "eve_power": eve_power_json(spec.eve_power),
        "pilots": spec.pilots,
        "metric_definition": metric_definition(spec.name),
        "config": spec.scenario,
        "sweeps": {
            "densities": spec.densities,
            "source_power_list_dbm": spec.source_power_list_dbm,
            "distance_list_m": spec.distance_list_m,
            "gamma_grid_db": spec.gamma_grid_db,
        },
        "results": results,
    });
    Ok(ExperimentOutput { tables, summary })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn minimal_spec_gets_defaults() {
        let s = ExperimentSpec::parse("name = roc-reader\n").unwrap();
        assert_eq!(s.name, ExperimentName::RocReader);
        assert_eq!((s.trials, s.seed), (10_000, 42));
        assert_eq!(s.n_ris_list, vec![0, 20, 50, 100]);
    }

    #[test]
    fn spec_errors_name_the_field() {
        let e = ExperimentSpec::parse("name = asc\nfoo = 1\n").unwrap_err();
        assert!(e.to_string().contains("foo"));
        assert!(e.is_spec_error());
        let e = ExperimentSpec::parse("name = asc\ntrials = 10\n").unwrap_err();
        assert!(e.to_string().contains("trials"));
        assert!(ExperimentSpec::parse("trials = 100\n").is_err());
        assert!(ExperimentSpec::parse("name = nope\n").is_err());
        assert!(ExperimentSpec::parse("name = asc\nn_ris_list = \n").is_err());
        assert!(ExperimentSpec::parse("name = asc\nseed = -3\n").is_err());
        assert!(ExperimentSpec::parse("name = asc\neve_power = loud\n").is_err());
        assert!(ExperimentSpec::parse("name = asc\ndensities = 0.5, 2\n").is_err());
    }

    #[test]
    fn overrides_reach_the_scenario() {
        let s = ExperimentSpec::parse(
            "name = distance-table\nd_tag_reader_m = 3\neve_power = 2.5\nn_ris_list = 0 100\n",
        )
        .unwrap();
        assert_eq!(s.scenario.geometry.d_tag_reader_m, 3.0);
        assert_eq!(s.eve_power, EvePower::Scaled(2.5));
        assert_eq!(s.n_ris_list, vec![0, 100]);
    }

    #[test]
    fn mixed_stream_accuracy() {
        let o = |accept: bool, legit: bool| TrialOutcome {
            statistic: 0.0,
            is_legitimate: legit,
            decision: if accept { crate::Decision::Accept } else { crate::Decision::Reject },
            kind: TrialKind::Legitimate,
        };
        let legit = vec![o(true, true), o(true, true), o(false, true), o(true, true)];
        let attack = vec![o(false, false), o(true, false), o(false, false), o(false, false)];
        assert_eq!(mixed_accuracy(&legit, &attack, 0.0), 0.75);
        assert_eq!(mixed_accuracy(&legit, &attack, 0.5), 0.5);
        assert_eq!(mixed_accuracy(&legit, &attack, 1.0), 0.75);
    }

    #[test]
    fn every_experiment_runs_small() {
        for name in ExperimentName::ALL {
            let mut spec = ExperimentSpec::new(name);
            spec.trials = 100;
            spec.pilots = 50;
            spec.n_ris_list = vec![0, 8];
            spec.gamma_grid_db = vec![0.0, 10.0];
            let out = run_experiment(&spec).unwrap();
            assert!(!out.tables.is_empty(), "{name:?}");
            assert!(out.tables.iter().all(|t| t.csv.lines().count() >= 2));
            assert_eq!(out.summary["version"], VERSION);
            assert_eq!(run_experiment(&spec).unwrap(), out);
        }
    }
}
