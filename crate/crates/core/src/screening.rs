//! Marginal-correlation screening and Benjamini-Hochberg FDR control.

use std::cmp::Ordering;
use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::dataset::Dataset;
use crate::error::{Result, SdaError};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CorrelationMethod {
    Pearson,
    Spearman,
}

impl std::str::FromStr for CorrelationMethod {
    type Err = SdaError;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "pearson" => Ok(CorrelationMethod::Pearson),
            "spearman" => Ok(CorrelationMethod::Spearman),
            other => Err(SdaError::invalid(format!("unknown correlation method '{other}'"))),
        }
    }
}

/// Average ranks (1-based), ties sharing the mean of their positions.
pub fn average_ranks(v: &[f64]) -> Vec<f64> {
    let mut order: Vec<usize> = (0..v.len()).collect();
    order.sort_by(|&a, &b| v[a].partial_cmp(&v[b]).unwrap_or(Ordering::Equal));
    let mut ranks = vec![0.0; v.len()];
    let mut i = 0;
    while i < order.len() {
        let mut j = i;
        while j + 1 < order.len() && v[order[j + 1]] == v[order[i]] {
            j += 1;
        }
        let r = (i + j) as f64 / 2.0 + 1.0;
        for &k in &order[i..=j] {
            ranks[k] = r;
        }
        i = j + 1;
    }
    ranks
}

/// Centered copy scaled to unit Euclidean norm; `None` for a constant vector.
fn standardize(v: &[f64]) -> Option<Vec<f64>> {
    let n = v.len() as f64;
    let mean = v.iter().sum::<f64>() / n;
    let centered: Vec<f64> = v.iter().map(|x| x - mean).collect();
    let norm = centered.iter().map(|x| x * x).sum::<f64>().sqrt();
    if norm <= f64::EPSILON * (1.0 + mean.abs()) * n.sqrt() {
        None
    } else {
        Some(centered.into_iter().map(|x| x / norm).collect())
    }
}

fn prepare(v: &[f64], method: CorrelationMethod) -> Option<Vec<f64>> {
    match method {
        CorrelationMethod::Pearson => standardize(v),
        CorrelationMethod::Spearman => standardize(&average_ranks(v)),
    }
}

/// Sample correlation; `None` when either vector is constant.
pub fn correlation(a: &[f64], b: &[f64], method: CorrelationMethod) -> Option<f64> {
    let (a, b) = (prepare(a, method)?, prepare(b, method)?);
    Some(a.iter().zip(&b).map(|(x, y)| x * y).sum::<f64>().clamp(-1.0, 1.0))
}

/// Indices sorted by decreasing `|corr|`, ties to the smaller index.
fn rank_by_abs(cands: &[usize], corr: &[f64]) -> Vec<usize> {
    let mut order: Vec<usize> = (0..cands.len()).collect();
    order.sort_by(|&a, &b| corr[b].abs().total_cmp(&corr[a].abs()).then(cands[a].cmp(&cands[b])));
    order
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ScreenSet {
    pub target_index: usize,
    pub gamma: f64,
    /// Kept columns, ordered by decreasing `|corr|`.
    pub kept: Vec<usize>,
    pub correlations: Vec<f64>,
}

/// Screened-set size `min(floor(gamma (n - 1)), p - 1)`.
pub fn screen_size(n: usize, p: usize, gamma: f64) -> usize {
    // tolerate gamma = (n-2)/(n-1) rounding just below an integer
    let k = (gamma * (n as f64 - 1.0) + 1e-9).floor() as usize;
    k.min(p - 1)
}

/// `gamma = (n - 2)/(n - 1)`, which keeps `n - 2` conditioning columns.
pub fn auto_gamma(n: usize) -> f64 {
    (n as f64 - 2.0) / (n as f64 - 1.0)
}

/// Column-wise preprocessing shared by many screens on the same data.
pub struct Screener<'a> {
    data: &'a Dataset,
    method: CorrelationMethod,
    prepared: Vec<Option<Vec<f64>>>,
}

impl<'a> Screener<'a> {
    pub fn new(data: &'a Dataset, method: CorrelationMethod) -> Self {
        let prepared = (0..data.p()).map(|j| prepare(data.column(j), method)).collect();
        Screener { data, method, prepared }
    }

    /// Top `floor(gamma (n-1))` columns by `|corr(X_i, X_j)|`, `j != i`.
    pub fn sis_screen(&self, i: usize, gamma: f64) -> Result<ScreenSet> {
        let (n, p) = (self.data.n(), self.data.p());
        if !(gamma > 0.0 && gamma < 1.0) {
            return Err(SdaError::invalid(format!("gamma must lie in (0, 1), got {gamma}")));
        }
        if n < 3 {
            return Err(SdaError::invalid("screening needs n >= 3"));
        }
        if i >= p {
            return Err(SdaError::invalid(format!("target index {i} out of range")));
        }
        let target = self.prepared[i].as_ref().ok_or(SdaError::ConstantColumn(i))?;
        let cands: Vec<usize> = (0..p).filter(|&j| j != i).collect();
        let corr: Vec<f64> = cands
            .iter()
            .map(|&j| {
                self.prepared[j]
                    .as_ref()
                    .map_or(0.0, |c| c.iter().zip(target).map(|(a, b)| a * b).sum())
            })
            .collect();
        let keep = screen_size(n, p, gamma);
        let order = rank_by_abs(&cands, &corr);
        let top = &order[..keep];
        Ok(ScreenSet {
            target_index: i,
            gamma,
            kept: top.iter().map(|&k| cands[k]).collect(),
            correlations: top.iter().map(|&k| corr[k].abs()).collect(),
        })
    }

    /// Top `keep` predictors by `|corr(X_j, Y)|`.
    pub fn outcome_screen(&self, keep: usize) -> Result<Vec<usize>> {
        Ok(self.outcome_ranking(keep)?.into_iter().map(|(j, _)| j).collect())
    }

    /// Like [`outcome_screen`](Self::outcome_screen), with `|corr|` alongside.
    pub fn outcome_ranking(&self, keep: usize) -> Result<Vec<(usize, f64)>> {
        let p = self.data.p();
        if keep > p {
            return Err(SdaError::invalid(format!("keep = {keep} exceeds p = {p}")));
        }
        let y = self.data.y().as_numeric();
        let y = prepare(&y, self.method).ok_or_else(|| SdaError::invalid("outcome is constant"))?;
        let cands: Vec<usize> = (0..p).collect();
        let corr: Vec<f64> = cands
            .iter()
            .map(|&j| {
                self.prepared[j]
                    .as_ref()
                    .map_or(0.0, |c| c.iter().zip(&y).map(|(a, b)| a * b).sum())
            })
            .collect();
        Ok(rank_by_abs(&cands, &corr)[..keep]
            .iter()
            .map(|&k| (cands[k], corr[k].abs()))
            .collect())
    }
}

pub fn sis_screen(d: &Dataset, i: usize, gamma: f64, method: CorrelationMethod) -> Result<ScreenSet> {
    Screener::new(d, method).sis_screen(i, gamma)
}

pub fn outcome_screen(d: &Dataset, keep: usize, method: CorrelationMethod) -> Result<Vec<usize>> {
    Screener::new(d, method).outcome_screen(keep)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FdrReport {
    pub q: f64,
    pub p_values: Vec<f64>,
    /// BH-adjusted p-values (step-up cumulative minimum, capped at 1).
    pub adjusted: Vec<f64>,
    /// Rejected positions, in increasing p-value order.
    pub rejected: Vec<usize>,
    pub threshold_rank: usize,
}

impl FdrReport {
    pub fn is_rejected(&self, k: usize) -> bool {
        self.rejected.contains(&k)
    }

    /// CSV with columns `index,p_value,adjusted_p,rejected`; `labels`
    /// replaces the positional index when given.
    pub fn write_csv<W: Write>(&self, w: W, labels: Option<&[usize]>) -> Result<()> {
        let mut out = csv::Writer::from_writer(w);
        out.write_record(["index", "p_value", "adjusted_p", "rejected"])?;
        for k in 0..self.p_values.len() {
            let idx = labels.map_or(k, |l| l[k]);
            out.write_record([
                idx.to_string(),
                format!("{:?}", self.p_values[k]),
                format!("{:?}", self.adjusted[k]),
                self.is_rejected(k).to_string(),
            ])?;
        }
        out.flush().map_err(csv::Error::from)?;
        Ok(())
    }
}

/// Benjamini-Hochberg step-up at level `q`.
pub fn bh_adjust(p_values: &[f64], q: f64) -> Result<FdrReport> {
    let m = p_values.len();
    if m == 0 {
        return Err(SdaError::invalid("no p-values"));
    }
    if !(q > 0.0 && q < 1.0) {
        return Err(SdaError::invalid(format!("q must lie in (0, 1), got {q}")));
    }
    if let Some(bad) = p_values.iter().find(|&&p| !(p > 0.0 && p <= 1.0)) {
        return Err(SdaError::invalid(format!("p-value {bad} outside (0, 1]")));
    }
    let mut order: Vec<usize> = (0..m).collect();
    order.sort_by(|&a, &b| p_values[a].total_cmp(&p_values[b]).then(a.cmp(&b)));

    let mut k = 0;
    for (rank, &idx) in order.iter().enumerate() {
        if p_values[idx] <= (rank + 1) as f64 * q / m as f64 {
            k = rank + 1;
        }
    }
    let mut adjusted = vec![0.0; m];
    let mut running = 1.0f64;
    for (rank, &idx) in order.iter().enumerate().rev() {
        running = running.min(p_values[idx] * m as f64 / (rank + 1) as f64);
        adjusted[idx] = running;
    }
    Ok(FdrReport {
        q,
        p_values: p_values.to_vec(),
        adjusted,
        rejected: order[..k].to_vec(),
        threshold_rank: k,
    })
}
