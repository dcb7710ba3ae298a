//! Empirical ROC curves from labelled score streams.

use std::fmt::Write as _;

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Direction {
    HigherIsAuthentic,
    LowerIsAuthentic,
}

/// Exact empirical ROC. Point i accepts every score on the authentic side
/// of `thresholds[i]`, inclusive. The first point rejects everything, the
/// last accepts everything.
#[derive(Debug, Clone, PartialEq)]
pub struct RocCurve {
    pub thresholds: Vec<f64>,
    /// Authentication rate.
    pub tpr: Vec<f64>,
    /// False acceptance rate.
    pub fpr: Vec<f64>,
    pub auc: f64,
}

fn check_stream(name: &str, xs: &[f64]) -> Result<()> {
    if xs.is_empty() {
        return Err(Error::invalid(format!("{name} stream is empty")));
    }
    if xs.iter().any(|x| x.is_nan()) {
        return Err(Error::invalid(format!("{name} stream contains NaN")));
    }
    Ok(())
}

pub fn build_roc(legit: &[f64], attack: &[f64], direction: Direction) -> Result<RocCurve> {
    check_stream("legitimate", legit)?;
    check_stream("attack", attack)?;
    // work in "higher is authentic" units and flip labels back at the end
    let sign = match direction {
        Direction::HigherIsAuthentic => 1.0,
        Direction::LowerIsAuthentic => -1.0,
    };
    let desc = |xs: &[f64]| {
        let mut v: Vec<f64> = xs.iter().map(|x| sign * x).collect();
        v.sort_by(|a, b| b.total_cmp(a));
        v
    };
    let l = desc(legit);
    let a = desc(attack);
    let (nl, na) = (l.len() as f64, a.len() as f64);

    let mut thresholds = vec![sign * f64::INFINITY];
    let mut tpr = vec![0.0];
    let mut fpr = vec![0.0];
    let (mut i, mut j) = (0usize, 0usize);
    while i < l.len() || j < a.len() {
        let v = match (l.get(i), a.get(j)) {
            (Some(&x), Some(&y)) => x.max(y),
            (Some(&x), None) => x,
            (None, Some(&y)) => y,
            (None, None) => unreachable!(),
        };
        while i < l.len() && l[i] >= v {
            i += 1;
        }
        while j < a.len() && a[j] >= v {
            j += 1;
        }
        thresholds.push(sign * v);
        tpr.push(i as f64 / nl);
        fpr.push(j as f64 / na);
    }
    thresholds.push(-sign * f64::INFINITY);
    tpr.push(1.0);
    fpr.push(1.0);

    let auc = trapezoid(&fpr, &tpr);
    Ok(RocCurve {
        thresholds,
        tpr,
        fpr,
        auc,
    })
}

fn trapezoid(x: &[f64], y: &[f64]) -> f64 {
    x.windows(2)
        .zip(y.windows(2))
        .map(|(xs, ys)| (xs[1] - xs[0]) * (ys[1] + ys[0]) * 0.5)
        .sum()
}

/// Authentication rate at a target false acceptance rate, interpolating
/// linearly between neighbouring curve points.
pub fn rate_at_far(curve: &RocCurve, target_far: f64) -> Result<f64> {
    if !(0.0..=1.0).contains(&target_far) {
        return Err(Error::invalid(format!("target FAR {target_far} outside [0, 1]")));
    }
    let n = curve.fpr.len();
    if n == 0 || n != curve.tpr.len() {
        return Err(Error::invalid("malformed ROC curve"));
    }
    let last = curve.fpr.iter().rposition(|&f| f <= target_far).unwrap_or(0);
    let (f0, t0) = (curve.fpr[last], curve.tpr[last]);
    if f0 == target_far || last + 1 == n {
        return Ok(t0);
    }
    let (f1, t1) = (curve.fpr[last + 1], curve.tpr[last + 1]);
    Ok(t0 + (t1 - t0) * (target_far - f0) / (f1 - f0))
}

impl RocCurve {
    pub fn to_csv(&self) -> String {
        let mut out = String::from("threshold,tpr,fpr\n");
        for ((t, p), f) in self.thresholds.iter().zip(&self.tpr).zip(&self.fpr) {
            let _ = writeln!(out, "{t},{p},{f}");
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    /// Mann-Whitney estimate with half credit for ties.
    fn auc_oracle(legit: &[f64], attack: &[f64]) -> f64 {
        let mut s = 0.0;
        for l in legit {
            for a in attack {
                s += if l > a {
                    1.0
                } else if l == a {
                    0.5
                } else {
                    0.0
                };
            }
        }
        s / (legit.len() * attack.len()) as f64
    }

    #[test]
    fn separated_streams() {
        let c = build_roc(&[3.0, 4.0], &[1.0, 2.0], Direction::HigherIsAuthentic).unwrap();
        assert_eq!(c.auc, 1.0);
        let c = build_roc(&[1.0], &[0.0], Direction::HigherIsAuthentic).unwrap();
        assert!(c.fpr.iter().zip(&c.tpr).any(|(&f, &t)| f == 0.0 && t == 1.0));
        assert_eq!(rate_at_far(&c, 0.0).unwrap(), 1.0);
        assert_eq!(rate_at_far(&c, 1.0).unwrap(), 1.0);
    }

    #[test]
    fn endpoints_and_lengths() {
        let c = build_roc(&[0.5, 0.5, 0.2], &[0.5, 0.1], Direction::LowerIsAuthentic).unwrap();
        assert_eq!((c.fpr[0], c.tpr[0]), (0.0, 0.0));
        assert_eq!((*c.fpr.last().unwrap(), *c.tpr.last().unwrap()), (1.0, 1.0));
        assert_eq!(c.thresholds.len(), c.tpr.len());
        assert_eq!(c.thresholds[0], f64::NEG_INFINITY);
        assert_eq!(*c.thresholds.last().unwrap(), f64::INFINITY);
    }

    #[test]
    fn matches_rank_oracle_with_ties() {
        let l = [0.3, 0.9, 0.9, 0.1, 0.5];
        let a = [0.9, 0.2, 0.5, 0.05];
        let c = build_roc(&l, &a, Direction::HigherIsAuthentic).unwrap();
        assert!((c.auc - auc_oracle(&l, &a)).abs() < 1e-12);
    }

    #[test]
    fn interpolation_between_points() {
        let c = RocCurve {
            thresholds: vec![4.0, 3.0, 2.0, 1.0],
            tpr: vec![0.0, 0.8, 0.9, 1.0],
            fpr: vec![0.0, 0.1, 0.3, 1.0],
            auc: 0.0,
        };
        assert!((rate_at_far(&c, 0.2).unwrap() - 0.85).abs() < 1e-12);
        assert!(rate_at_far(&c, 1.5).is_err());
    }

    #[test]
    fn bad_input() {
        assert!(build_roc(&[], &[1.0], Direction::HigherIsAuthentic).is_err());
        assert!(build_roc(&[f64::NAN], &[1.0], Direction::HigherIsAuthentic).is_err());
    }

    #[test]
    fn csv_has_header_and_sentinels() {
        let c = build_roc(&[1.0], &[0.0], Direction::HigherIsAuthentic).unwrap();
        let csv = c.to_csv();
        assert!(csv.starts_with("threshold,tpr,fpr\ninf,0,0\n"));
        assert!(csv.ends_with("-inf,1,1\n"));
    }
}
