//! Quantiles, boxplot tables, least squares and rank correlation.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::config::{Layout, Pps};
use crate::error::{ExperimentError, Result};
use crate::record::RunRecord;

/// Linear-interpolation quantile (type 7): position `q (n - 1)` in the sorted sample.
pub fn quantile(values: &[f64], q: f64) -> Result<f64> {
    if values.is_empty() {
        return Err(ExperimentError::InsufficientData("quantile of an empty sample".into()));
    }
    if !(0.0..=1.0).contains(&q) || values.iter().any(|v| !v.is_finite()) {
        return Err(ExperimentError::InvalidConfig("quantile needs q in [0, 1] and finite data".into()));
    }
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    let h = q * (v.len() - 1) as f64;
    let lo = h.floor() as usize;
    let hi = h.ceil() as usize;
    Ok(v[lo] + (h - lo as f64) * (v[hi] - v[lo]))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FiveNumber {
    pub min: f64,
    pub q1: f64,
    pub median: f64,
    pub q3: f64,
    pub max: f64,
}

impl FiveNumber {
    pub fn of(values: &[f64]) -> Result<Self> {
        Ok(Self {
            min: quantile(values, 0.0)?,
            q1: quantile(values, 0.25)?,
            median: quantile(values, 0.5)?,
            q3: quantile(values, 0.75)?,
            max: quantile(values, 1.0)?,
        })
    }

    pub fn iqr(&self) -> f64 {
        self.q3 - self.q1
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoxplotRow {
    pub layout: Layout,
    pub pps: Pps,
    pub n: usize,
    pub stats: FiveNumber,
}

/// Final-SiREn five-number summaries per (layout, PPS) group.
pub fn aggregate_boxplots(records: &[RunRecord]) -> Result<Vec<BoxplotRow>> {
    let mut groups: BTreeMap<(Layout, Pps), Vec<f64>> = BTreeMap::new();
    for r in records {
        groups.entry((r.config.layout, r.config.pps)).or_default().push(r.final_siren);
    }
    if groups.is_empty() {
        return Err(ExperimentError::EmptyGroup("no records".into()));
    }
    groups
        .into_iter()
        .map(|((layout, pps), v)| Ok(BoxplotRow { layout, pps, n: v.len(), stats: FiveNumber::of(&v)? }))
        .collect()
}

pub fn boxplot_csv(rows: &[BoxplotRow]) -> String {
    let mut s = String::from("# quantiles: linear interpolation between order statistics (type 7)\nlayout,pps,n,min,q1,median,q3,max\n");
    for r in rows {
        let f = r.stats;
        let _ = writeln!(s, "{},{},{},{},{},{},{},{}", r.layout, r.pps, r.n, f.min, f.q1, f.median, f.q3, f.max);
    }
    s
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RegressionFit {
    pub slope: f64,
    pub intercept: f64,
    pub pearson_r: f64,
    pub n: usize,
}

/// Ordinary least squares of `y` on `x`.
pub fn fit_line(x: &[f64], y: &[f64]) -> Result<RegressionFit> {
    if x.len() != y.len() || x.len() < 2 {
        return Err(ExperimentError::InsufficientData("need at least two paired points".into()));
    }
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let sxx: f64 = x.iter().map(|v| (v - mx) * (v - mx)).sum();
    let syy: f64 = y.iter().map(|v| (v - my) * (v - my)).sum();
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    if sxx == 0.0 {
        return Err(ExperimentError::InsufficientData("x has no spread".into()));
    }
    let slope = sxy / sxx;
    let pearson_r = if syy == 0.0 { 1.0 } else { (sxy / (sxx * syy).sqrt()).clamp(-1.0, 1.0) };
    Ok(RegressionFit { slope, intercept: my - slope * mx, pearson_r, n: x.len() })
}

/// `(median landmark sigma, median explored UM)` per record with landmarks.
pub fn landmark_um_pairs(records: &[RunRecord]) -> Vec<(f64, f64)> {
    records
        .iter()
        .filter(|r| matches!(r.config.pps, Pps::Pps3 | Pps::Pps4))
        .filter_map(|r| Some((r.median_landmark_sigma()?, r.median_um?)))
        .collect()
}

/// Regression of median explored uncertainty on median landmark deviation.
pub fn fit_landmark_um(records: &[RunRecord]) -> Result<RegressionFit> {
    let pairs = landmark_um_pairs(records);
    if pairs.len() < 3 {
        return Err(ExperimentError::InsufficientData(format!("{} usable records, need 3", pairs.len())));
    }
    let (x, y): (Vec<f64>, Vec<f64>) = pairs.into_iter().unzip();
    fit_line(&x, &y)
}

fn ranks(v: &[f64]) -> Vec<f64> {
    let mut idx: Vec<usize> = (0..v.len()).collect();
    idx.sort_by(|&a, &b| v[a].total_cmp(&v[b]));
    let mut r = vec![0.0; v.len()];
    let mut i = 0;
    while i < idx.len() {
        let mut j = i;
        while j + 1 < idx.len() && v[idx[j + 1]] == v[idx[i]] {
            j += 1;
        }
        let avg = 0.5 * (i + j) as f64 + 1.0;
        for k in i..=j {
            r[idx[k]] = avg;
        }
        i = j + 1;
    }
    r
}

/// Spearman rank correlation with average ranks for ties.
pub fn spearman(x: &[f64], y: &[f64]) -> Result<f64> {
    Ok(fit_line(&ranks(x), &ranks(y))?.pearson_r)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn hand_quantiles() {
        let f = FiveNumber::of(&[5.0, 1.0, 4.0, 2.0, 3.0]).unwrap();
        assert_eq!((f.min, f.q1, f.median, f.q3, f.max), (1.0, 2.0, 3.0, 4.0, 5.0));
        let one = FiveNumber::of(&[7.5]).unwrap();
        assert_eq!((one.min, one.q1, one.median, one.q3, one.max), (7.5, 7.5, 7.5, 7.5, 7.5));
        assert_eq!(quantile(&[0.0, 10.0], 0.25).unwrap(), 2.5);
        assert!(quantile(&[], 0.5).is_err());
    }

    #[test]
    fn exact_lines() {
        let x = [0.1, 0.2, 0.35, 0.5];
        let f = fit_line(&x, &x).unwrap();
        assert!((f.slope - 1.0).abs() < 1e-12 && f.intercept.abs() < 1e-12 && (f.pearson_r - 1.0).abs() < 1e-12);
        let two = fit_line(&[1.0, 3.0], &[2.0, 8.0]).unwrap();
        assert!((two.slope - 3.0).abs() < 1e-12 && (two.intercept + 1.0).abs() < 1e-12);
        assert!(fit_line(&[1.0], &[1.0]).is_err());
    }

    #[test]
    fn spearman_is_rank_based() {
        let x = [1.0, 2.0, 3.0, 4.0, 5.0];
        let y = [1.0, 8.0, 27.0, 64.0, 125.0];
        assert!((spearman(&x, &y).unwrap() - 1.0).abs() < 1e-12);
        let rev: Vec<f64> = y.iter().rev().copied().collect();
        assert!((spearman(&x, &rev).unwrap() + 1.0).abs() < 1e-12);
    }
}
