//! Slicing of the outcome into `H` groups, `g_h(y) = 1{y in J_h}`.
//!
//! Continuous outcomes are cut by rank into balanced slices, categorical
//! outcomes get one slice per label, and survival outcomes are sliced
//! separately within the censored and the uncensored stratum.

use std::cmp::Ordering;

use nalgebra::DMatrix;
use serde::Serialize;

use crate::dataset::{Outcome, OutcomeKind};
use crate::error::{Result, SdaError};

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum SliceBoundaries {
    /// Largest outcome value in each slice.
    Continuous { upper: Vec<f64> },
    Categorical { labels: Vec<String> },
    /// Censored-stratum slices come first, then event-stratum slices.
    Survival {
        censored_upper: Vec<f64>,
        event_upper: Vec<f64>,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SlicePlan {
    pub h_count: usize,
    pub boundaries: SliceBoundaries,
    /// Slice of each observation, in `0..h_count`.
    pub assignment: Vec<usize>,
    pub counts: Vec<usize>,
    /// Tied outcome values that straddle a slice boundary.
    pub warnings: Vec<String>,
}

impl SlicePlan {
    pub fn n(&self) -> usize {
        self.assignment.len()
    }

    /// `n x H` 0/1 matrix with entry `(j, h) = 1` iff observation `j` is in
    /// slice `h`.
    pub fn indicator_matrix(&self) -> DMatrix<f64> {
        let mut m = DMatrix::zeros(self.n(), self.h_count);
        for (j, &h) in self.assignment.iter().enumerate() {
            m[(j, h)] = 1.0;
        }
        m
    }

    /// Members of each slice, in observation order.
    pub fn members(&self) -> Vec<Vec<usize>> {
        let mut out = vec![Vec::new(); self.h_count];
        for (j, &h) in self.assignment.iter().enumerate() {
            out[h].push(j);
        }
        out
    }
}

pub fn indicator_matrix(plan: &SlicePlan) -> DMatrix<f64> {
    plan.indicator_matrix()
}

/// `ceil(n^(1/3))`, clamped to `[2, floor(n/2)]` so every slice can hold at
/// least two observations.
pub fn default_h(n: usize) -> usize {
    let mut h = (n as f64).cbrt().ceil() as usize;
    // guard against cbrt rounding just above an exact cube
    while h > 1 && (h - 1).pow(3) >= n {
        h -= 1;
    }
    h.max(2).min((n / 2).max(1))
}

/// Number of slices actually used: categorical outcomes use their label
/// count, everything else the requested `h` (or [`default_h`]) capped at
/// `floor(n/2)`.
pub fn effective_h(y: &Outcome, requested: Option<usize>) -> Result<usize> {
    let n = y.len();
    match y {
        Outcome::Categorical(labels) => {
            let k = distinct_labels(labels).len();
            match requested {
                Some(h) if h != k => Err(SdaError::invalid(format!(
                    "categorical outcome has {k} labels but {h} slices were requested"
                ))),
                _ => Ok(k),
            }
        }
        _ => {
            let h = requested.unwrap_or_else(|| default_h(n));
            if h == 0 {
                return Err(SdaError::invalid("number of slices must be >= 1"));
            }
            Ok(h.min((n / 2).max(1)))
        }
    }
}

fn distinct_labels(labels: &[String]) -> Vec<String> {
    let mut d = labels.to_vec();
    d.sort();
    d.dedup();
    d
}

/// Balanced slice sizes: the first `n mod h` slices get one extra member.
fn quotas(n: usize, h: usize) -> Vec<usize> {
    (0..h).map(|k| n / h + usize::from(k < n % h)).collect()
}

/// Rank-based slicing of `values[idx]`; returns per-slice upper values and
/// writes `offset + slice` into `assignment`.
fn slice_by_rank(
    values: &[f64],
    idx: &[usize],
    h: usize,
    offset: usize,
    assignment: &mut [usize],
    warnings: &mut Vec<String>,
) -> Vec<f64> {
    let mut order = idx.to_vec();
    // stable on (value, original index)
    order.sort_by(|&a, &b| values[a].partial_cmp(&values[b]).unwrap_or(Ordering::Equal).then(a.cmp(&b)));
    let mut upper = Vec::with_capacity(h);
    let mut start = 0;
    for (k, q) in quotas(order.len(), h).into_iter().enumerate() {
        let block = &order[start..start + q];
        for &j in block {
            assignment[j] = offset + k;
        }
        let last = values[*block.last().unwrap()];
        upper.push(last);
        if let Some(&next) = order.get(start + q) {
            if values[next] == last {
                warnings.push(format!(
                    "tied outcome value {last} straddles the boundary after slice {}",
                    offset + k
                ));
            }
        }
        start += q;
    }
    upper
}

/// Largest-remainder apportionment of `h` slices to strata of the given
/// sizes, with at least one slice per stratum and never more slices than
/// members.
fn apportion(sizes: &[usize], h: usize) -> Vec<usize> {
    let total: usize = sizes.iter().sum();
    let exact: Vec<f64> = sizes.iter().map(|&s| s as f64 * h as f64 / total as f64).collect();
    let mut alloc: Vec<usize> = exact.iter().map(|e| (e.floor() as usize).max(1)).collect();
    for (a, &s) in alloc.iter_mut().zip(sizes) {
        *a = (*a).min(s);
    }
    while alloc.iter().sum::<usize>() < h {
        // largest remainder among strata with room left; ties to the first
        let k = (0..sizes.len())
            .filter(|&k| alloc[k] < sizes[k])
            .max_by(|&a, &b| {
                (exact[a] - alloc[a] as f64)
                    .total_cmp(&(exact[b] - alloc[b] as f64))
                    .then(b.cmp(&a))
            });
        match k {
            Some(k) => alloc[k] += 1,
            None => break,
        }
    }
    while alloc.iter().sum::<usize>() > h {
        let k = (0..sizes.len())
            .filter(|&k| alloc[k] > 1)
            .min_by(|&a, &b| {
                (exact[a] - alloc[a] as f64)
                    .total_cmp(&(exact[b] - alloc[b] as f64))
                    .then(a.cmp(&b))
            })
            .expect("h below the number of strata");
        alloc[k] -= 1;
    }
    alloc
}

pub fn make_slices(y: &Outcome, kind: OutcomeKind, h: usize) -> Result<SlicePlan> {
    if y.kind() != kind {
        return Err(SdaError::invalid(format!(
            "outcome is {:?} but {:?} slicing was requested",
            y.kind(),
            kind
        )));
    }
    let n = y.len();
    if h == 0 {
        return Err(SdaError::invalid("number of slices must be >= 1"));
    }
    if h > n {
        return Err(SdaError::invalid(format!("{h} slices exceed {n} observations")));
    }
    let mut assignment = vec![0usize; n];
    let mut warnings = Vec::new();
    let boundaries = match y {
        Outcome::Continuous(values) => {
            let idx: Vec<usize> = (0..n).collect();
            let upper = slice_by_rank(values, &idx, h, 0, &mut assignment, &mut warnings);
            SliceBoundaries::Continuous { upper }
        }
        Outcome::Categorical(labels) => {
            let distinct = distinct_labels(labels);
            if distinct.len() != h {
                return Err(SdaError::invalid(format!(
                    "categorical outcome has {} labels but {h} slices were requested",
                    distinct.len()
                )));
            }
            for (j, l) in labels.iter().enumerate() {
                assignment[j] = distinct.binary_search(l).unwrap();
            }
            SliceBoundaries::Categorical { labels: distinct }
        }
        Outcome::Survival { time, event } => {
            let censored: Vec<usize> = (0..n).filter(|&j| event[j] == 0).collect();
            let events: Vec<usize> = (0..n).filter(|&j| event[j] == 1).collect();
            if censored.is_empty() || events.is_empty() {
                return Err(SdaError::invalid(
                    "survival slicing needs both censored and uncensored observations",
                ));
            }
            if h < 2 {
                return Err(SdaError::invalid("survival slicing needs at least 2 slices"));
            }
            let alloc = apportion(&[censored.len(), events.len()], h);
            let censored_upper = slice_by_rank(time, &censored, alloc[0], 0, &mut assignment, &mut warnings);
            let event_upper = slice_by_rank(time, &events, alloc[1], alloc[0], &mut assignment, &mut warnings);
            SliceBoundaries::Survival {
                censored_upper,
                event_upper,
            }
        }
    };
    let mut counts = vec![0usize; h];
    for &a in &assignment {
        counts[a] += 1;
    }
    if counts.contains(&0) {
        return Err(SdaError::invalid("slicing produced an empty slice"));
    }
    Ok(SlicePlan {
        h_count: h,
        boundaries,
        assignment,
        counts,
        warnings,
    })
}
