//! Synthetic scenarios: sparse precision matrices, Gaussian designs, the
//! four regression functions, and the Monte-Carlo power harness.

use std::collections::BTreeSet;
use std::io::Write;
use std::time::Instant;

use nalgebra::{Cholesky, DMatrix, SymmetricEigen};
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dataset::{Dataset, Outcome};
use crate::error::{Result, SdaError};
use crate::inference::{SdaTester, TestConfig};
use crate::lasso::DEFAULT_FOLDS;
use crate::rng::{derive_seed, stream};

/// Signal groups reported by [`run_scenario`], in table order.
pub const BETA_GROUPS: [f64; 6] = [0.2, -0.4, 0.6, -0.8, 1.0, 0.0];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum PrecisionSpec {
    /// Blocks of size `q`: unit diagonal, 0.5 within a block.
    Block { q: usize },
    /// Watts-Strogatz graph; edge weights uniform on
    /// `(-hi, -lo) U (lo, hi)`, then a diagonal shift up to `pd_floor`.
    SmallWorld {
        e: usize,
        #[serde(default = "default_rewire")]
        rewire_prob: f64,
        #[serde(default = "default_weight_range")]
        weight_range: (f64, f64),
        #[serde(default = "default_pd_floor")]
        pd_floor: f64,
    },
}

fn default_rewire() -> f64 {
    0.25
}

fn default_weight_range() -> (f64, f64) {
    (0.5, 1.0)
}

fn default_pd_floor() -> f64 {
    0.1
}

pub fn block_precision(p: usize, q: usize) -> Result<DMatrix<f64>> {
    if q == 0 || !p.is_multiple_of(q) {
        return Err(SdaError::invalid(format!("block size {q} does not divide p = {p}")));
    }
    Ok(DMatrix::from_fn(p, p, |a, b| {
        if a == b {
            1.0
        } else if a / q == b / q {
            0.5
        } else {
            0.0
        }
    }))
}

/// Ring lattice with `e` neighbors on each side, then each lattice edge
/// `(j, j+k)` is rewired with probability `rewire_prob` to a uniformly chosen
/// node that is neither `j` nor already adjacent to `j`. Edge count stays
/// `p * e`. Returned edges are sorted with `a < b`.
pub fn watts_strogatz(p: usize, e: usize, rewire_prob: f64, rng: &mut impl Rng) -> Result<Vec<(usize, usize)>> {
    if e < 1 || p <= 2 * e {
        return Err(SdaError::invalid(format!("small-world graph needs e >= 1 and p > 2e (p={p}, e={e})")));
    }
    if !(0.0..=1.0).contains(&rewire_prob) {
        return Err(SdaError::invalid("rewire probability must lie in [0, 1]"));
    }
    let mut adj: Vec<BTreeSet<usize>> = vec![BTreeSet::new(); p];
    for j in 0..p {
        for k in 1..=e {
            let t = (j + k) % p;
            adj[j].insert(t);
            adj[t].insert(j);
        }
    }
    for k in 1..=e {
        for j in 0..p {
            let t = (j + k) % p;
            if !adj[j].contains(&t) || rng.random::<f64>() >= rewire_prob {
                continue;
            }
            let free: Vec<usize> = (0..p).filter(|&w| w != j && !adj[j].contains(&w)).collect();
            if free.is_empty() {
                continue;
            }
            let w = free[rng.random_range(0..free.len())];
            adj[j].remove(&t);
            adj[t].remove(&j);
            adj[j].insert(w);
            adj[w].insert(j);
        }
    }
    let mut edges: Vec<(usize, usize)> = adj
        .iter()
        .enumerate()
        .flat_map(|(a, s)| s.iter().filter(move |&&b| b > a).map(move |&b| (a, b)))
        .collect();
    edges.sort_unstable();
    Ok(edges)
}

pub fn min_eigenvalue(m: &DMatrix<f64>) -> f64 {
    SymmetricEigen::new(m.clone())
        .eigenvalues
        .iter()
        .copied()
        .fold(f64::INFINITY, f64::min)
}

#[derive(Debug, Clone)]
pub struct GeneratedPrecision {
    pub theta: DMatrix<f64>,
    /// Diagonal shift added to reach the positive-definiteness floor.
    pub shift: f64,
    pub edges: Vec<(usize, usize)>,
}

pub fn smallworld_precision(
    p: usize,
    e: usize,
    rewire_prob: f64,
    weight_range: (f64, f64),
    pd_floor: f64,
    seed: u64,
) -> Result<GeneratedPrecision> {
    let (lo, hi) = weight_range;
    if !(0.0 <= lo && lo < hi) {
        return Err(SdaError::invalid("weight range must satisfy 0 <= lo < hi"));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let edges = watts_strogatz(p, e, rewire_prob, &mut rng)?;
    let mut theta = DMatrix::identity(p, p);
    for &(a, b) in &edges {
        let mag = rng.random_range(lo..hi);
        let w = if rng.random::<bool>() { mag } else { -mag };
        theta[(a, b)] = w;
        theta[(b, a)] = w;
    }
    let shift = (pd_floor - min_eigenvalue(&theta)).max(0.0);
    for j in 0..p {
        theta[(j, j)] += shift;
    }
    Ok(GeneratedPrecision { theta, shift, edges })
}

pub fn generate_precision(spec: &PrecisionSpec, p: usize, seed: u64) -> Result<GeneratedPrecision> {
    match *spec {
        PrecisionSpec::Block { q } => Ok(GeneratedPrecision {
            theta: block_precision(p, q)?,
            shift: 0.0,
            edges: (0..p)
                .flat_map(|a| ((a + 1)..p).filter(move |&b| a / q == b / q).map(move |b| (a, b)))
                .collect(),
        }),
        PrecisionSpec::SmallWorld {
            e,
            rewire_prob,
            weight_range,
            pd_floor,
        } => smallworld_precision(p, e, rewire_prob, weight_range, pd_floor, seed),
    }
}

/// `n` rows iid `N(0, theta^{-1})`: with `theta = L L'`, each row solves
/// `L' x = z` for a standard-normal `z`.
pub fn sample_gaussian(theta: &DMatrix<f64>, n: usize, seed: u64) -> Result<DMatrix<f64>> {
    let p = theta.nrows();
    if theta.ncols() != p {
        return Err(SdaError::mismatch("precision matrix is not square"));
    }
    let chol = Cholesky::new(theta.clone()).ok_or(SdaError::NotPositiveDefinite)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    // column r of z is sample r
    let z: Vec<f64> = (0..n * p).map(|_| rng.sample(StandardNormal)).collect();
    let z = DMatrix::from_vec(p, n, z);
    let upper = chol.l().transpose();
    let x = upper
        .solve_upper_triangular(&z)
        .ok_or(SdaError::NotPositiveDefinite)?;
    Ok(x.transpose())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum CoefficientSetting {
    /// Five signals, one per block: columns 1, q+1, ..., 4q+1.
    S1,
    /// Each of the five effect sizes repeated over a whole block.
    S2,
    /// Global null.
    Null,
}

pub fn generate_coefficients(setting: CoefficientSetting, q: usize, p: usize) -> Result<Vec<f64>> {
    const EFFECTS: [f64; 5] = [0.2, -0.4, 0.6, -0.8, 1.0];
    let mut b = vec![0.0; p];
    match setting {
        CoefficientSetting::Null => {}
        CoefficientSetting::S1 | CoefficientSetting::S2 if p < 5 * q || q == 0 => {
            return Err(SdaError::invalid(format!("p = {p} is smaller than 5q = {}", 5 * q)));
        }
        CoefficientSetting::S1 => {
            for (k, &v) in EFFECTS.iter().enumerate() {
                b[k * q] = v;
            }
        }
        CoefficientSetting::S2 => {
            for (k, &v) in EFFECTS.iter().enumerate() {
                b[k * q..(k + 1) * q].fill(v);
            }
        }
    }
    Ok(b)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum RegressionModel {
    /// `Y = b'X + eps`
    R1,
    /// `Y = exp(b'X) + eps`
    R2,
    /// `Y = sin(b'X) exp(b'X) + eps`
    R3,
    /// `Y = exp(b'X + eps)`
    R4,
}

impl std::str::FromStr for RegressionModel {
    type Err = SdaError;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_uppercase().as_str() {
            "R1" => Ok(RegressionModel::R1),
            "R2" => Ok(RegressionModel::R2),
            "R3" => Ok(RegressionModel::R3),
            "R4" => Ok(RegressionModel::R4),
            other => Err(SdaError::invalid(format!("unknown regression model '{other}'"))),
        }
    }
}

pub fn generate_response(x: &DMatrix<f64>, b: &[f64], model: RegressionModel, seed: u64) -> Result<Vec<f64>> {
    if b.len() != x.ncols() {
        return Err(SdaError::mismatch("coefficient length differs from p"));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let support: Vec<(usize, f64)> = b.iter().copied().enumerate().filter(|(_, v)| *v != 0.0).collect();
    Ok((0..x.nrows())
        .map(|r| {
            let eta: f64 = support.iter().map(|&(j, v)| v * x[(r, j)]).sum();
            let eps: f64 = rng.sample(StandardNormal);
            match model {
                RegressionModel::R1 => eta + eps,
                RegressionModel::R2 => eta.exp() + eps,
                RegressionModel::R3 => eta.sin() * eta.exp() + eps,
                RegressionModel::R4 => (eta + eps).exp(),
            }
        })
        .collect())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioConfig {
    pub name: String,
    pub n: usize,
    pub p: usize,
    pub precision: PrecisionSpec,
    pub setting: CoefficientSetting,
    /// Block size used by the coefficient pattern.
    pub q: usize,
    pub regression: RegressionModel,
    pub replicates: usize,
    #[serde(default = "default_alpha")]
    pub alpha: f64,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub h_override: Option<usize>,
    #[serde(default = "default_draws")]
    pub l_draws: usize,
    #[serde(default = "default_folds")]
    pub folds: usize,
    /// Columns tested per replicate; default the first `min(100, p)`.
    #[serde(default)]
    pub tested: Option<TestedColumns>,
}

/// Either the first `k` columns or an explicit list, e.g. `20` or
/// `[0, 5, 10]` in scenario JSON.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum TestedColumns {
    First(usize),
    Columns(Vec<usize>),
}

fn default_alpha() -> f64 {
    0.05
}

fn default_draws() -> usize {
    1000
}

fn default_folds() -> usize {
    DEFAULT_FOLDS
}

impl ScenarioConfig {
    /// Tested columns in increasing order.
    pub fn tested_columns(&self) -> Vec<usize> {
        match &self.tested {
            None => (0..self.p.min(100)).collect(),
            Some(TestedColumns::First(k)) => (0..self.p.min(*k)).collect(),
            Some(TestedColumns::Columns(c)) => {
                let mut c = c.clone();
                c.sort_unstable();
                c.dedup();
                c
            }
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.n < 4 || self.p < 2 {
            return Err(SdaError::invalid("scenario needs n >= 4 and p >= 2"));
        }
        if self.replicates == 0 {
            return Err(SdaError::invalid("scenario needs at least one replicate"));
        }
        if !(self.alpha > 0.0 && self.alpha < 1.0) {
            return Err(SdaError::invalid("alpha must lie in (0, 1)"));
        }
        if let PrecisionSpec::Block { q } = self.precision {
            if q == 0 || !self.p.is_multiple_of(q) {
                return Err(SdaError::invalid(format!("block size {q} does not divide p = {}", self.p)));
            }
        }
        generate_coefficients(self.setting, self.q, self.p)?;
        let cols = self.tested_columns();
        if cols.is_empty() || cols.iter().any(|&c| c >= self.p) {
            return Err(SdaError::invalid(format!("tested columns must be non-empty and below p = {}", self.p)));
        }
        Ok(())
    }

    pub fn from_json(s: &str) -> Result<Self> {
        let cfg: ScenarioConfig = serde_json::from_str(s)?;
        cfg.validate()?;
        Ok(cfg)
    }
}

/// Desk-scale presets.
pub fn bundled_scenario(name: &str) -> Option<ScenarioConfig> {
    let base = |setting, regression, n, p, replicates| ScenarioConfig {
        name: name.to_string(),
        n,
        p,
        precision: PrecisionSpec::Block { q: 5 },
        setting,
        q: 5,
        regression,
        replicates,
        alpha: 0.05,
        seed: 20_240_427,
        h_override: None,
        l_draws: 1000,
        folds: DEFAULT_FOLDS,
        tested: None,
    };
    use CoefficientSetting::*;
    use RegressionModel::*;
    let cfg = match name {
        "null_q5_r1_desk" => base(Null, R1, 200, 100, 500),
        "s1_q5_r1_desk" => base(S1, R1, 400, 200, 200),
        "s2_q5_r1_desk" => base(S2, R1, 400, 200, 200),
        "s1_q5_r2_desk" => base(S1, R2, 400, 200, 200),
        "s1_q5_r3_desk" => base(S1, R3, 400, 200, 200),
        "s2_q5_r3_desk" => base(S2, R3, 400, 200, 200),
        "s1_q5_r4_desk" => base(S1, R4, 400, 200, 200),
        "sw_e5_s1_r1_desk" => ScenarioConfig {
            precision: PrecisionSpec::SmallWorld {
                e: 5,
                rewire_prob: default_rewire(),
                weight_range: default_weight_range(),
                pd_floor: default_pd_floor(),
            },
            ..base(S1, R1, 400, 200, 200)
        },
        _ => return None,
    };
    Some(cfg)
}

pub const BUNDLED_SCENARIOS: [&str; 8] = [
    "null_q5_r1_desk",
    "s1_q5_r1_desk",
    "s2_q5_r1_desk",
    "s1_q5_r2_desk",
    "s1_q5_r3_desk",
    "s2_q5_r3_desk",
    "s1_q5_r4_desk",
    "sw_e5_s1_r1_desk",
];

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GroupRate {
    pub beta: f64,
    pub variables: Vec<usize>,
    /// Variable-replicate pairs in the group.
    pub trials: usize,
    pub ks_rate: Option<f64>,
    pub cvm_rate: Option<f64>,
    pub ks_se: Option<f64>,
    pub cvm_se: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PowerReport {
    pub scenario: ScenarioConfig,
    pub groups: Vec<GroupRate>,
    /// Per-replicate diagonal shift of the precision matrix.
    pub shifts: Vec<f64>,
    /// Variable tests that failed (counted as non-rejections).
    pub failures: usize,
}

impl PowerReport {
    pub fn group(&self, beta: f64) -> Option<&GroupRate> {
        self.groups.iter().find(|g| g.beta == beta)
    }

    /// One row in the layout of a power/type-I table.
    pub fn write_csv<W: Write>(&self, w: W) -> Result<()> {
        let mut out = csv::Writer::from_writer(w);
        let mut header = vec![
            "scenario".to_string(),
            "setting".into(),
            "regression".into(),
            "n".into(),
            "p".into(),
        ];
        for g in &self.groups {
            header.push(format!("ks_{}", beta_label(g.beta)));
            header.push(format!("cvm_{}", beta_label(g.beta)));
        }
        out.write_record(&header)?;
        let s = &self.scenario;
        let mut row = vec![
            s.name.clone(),
            format!("{:?} q={}", s.setting, s.q),
            format!("{:?}", s.regression),
            s.n.to_string(),
            s.p.to_string(),
        ];
        let fmt = |r: Option<f64>| r.map_or("NA".to_string(), |v| format!("{v:.4}"));
        for g in &self.groups {
            row.push(fmt(g.ks_rate));
            row.push(fmt(g.cvm_rate));
        }
        out.write_record(&row)?;
        out.flush().map_err(csv::Error::from)?;
        Ok(())
    }
}

fn beta_label(b: f64) -> String {
    if b == 0.0 {
        "0".into()
    } else {
        format!("{b:.1}")
    }
}

struct ReplicateOutcome {
    ks: Vec<bool>,
    cvm: Vec<bool>,
    failures: usize,
    shift: f64,
}

/// One simulated dataset: centered design plus response.
pub fn simulate_dataset(cfg: &ScenarioConfig, replicate: usize) -> Result<(Dataset, f64)> {
    let rep_seed = derive_seed(cfg.seed, stream::REPLICATE, replicate as u64);
    let prec = generate_precision(&cfg.precision, cfg.p, derive_seed(rep_seed, stream::NETWORK, 0))?;
    let b = generate_coefficients(cfg.setting, cfg.q, cfg.p)?;
    let x = sample_gaussian(&prec.theta, cfg.n, derive_seed(rep_seed, stream::DESIGN, 0))?;
    let y = generate_response(&x, &b, cfg.regression, derive_seed(rep_seed, stream::NOISE, 0))?;
    let d = Dataset::new(x, Outcome::Continuous(y))?.center_columns()?;
    Ok((d, prec.shift))
}

fn run_replicate(cfg: &ScenarioConfig, replicate: usize) -> Result<ReplicateOutcome> {
    let (d, shift) = simulate_dataset(cfg, replicate)?;
    let test_cfg = TestConfig {
        h: cfg.h_override,
        l_draws: cfg.l_draws,
        alpha: cfg.alpha,
        folds: cfg.folds,
        seed: derive_seed(cfg.seed, stream::REPLICATE, replicate as u64),
    };
    let tester = SdaTester::new(&d, test_cfg)?;
    let mut out = ReplicateOutcome {
        ks: Vec::new(),
        cvm: Vec::new(),
        failures: 0,
        shift,
    };
    for i in cfg.tested_columns() {
        match tester.test(i, None) {
            Ok(t) => {
                out.ks.push(t.ks.rejected);
                out.cvm.push(t.cvm.rejected);
            }
            Err(_) => {
                out.ks.push(false);
                out.cvm.push(false);
                out.failures += 1;
            }
        }
    }
    Ok(out)
}

/// Monte-Carlo rejection rates grouped by true coefficient. Replicates are
/// spread over `workers` threads; results do not depend on `workers`.
pub fn run_scenario(cfg: &ScenarioConfig, workers: usize) -> Result<PowerReport> {
    cfg.validate()?;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers.max(1))
        .build()
        .map_err(|e| SdaError::invalid(format!("cannot start worker pool: {e}")))?;
    let outcomes: Vec<ReplicateOutcome> = pool.install(|| {
        (0..cfg.replicates)
            .into_par_iter()
            .map(|r| run_replicate(cfg, r))
            .collect::<Result<Vec<_>>>()
    })?;

    let b = generate_coefficients(cfg.setting, cfg.q, cfg.p)?;
    let tested = cfg.tested_columns();
    let groups = BETA_GROUPS
        .iter()
        .map(|&beta| {
            let positions: Vec<usize> = (0..tested.len()).filter(|&k| b[tested[k]] == beta).collect();
            let variables: Vec<usize> = positions.iter().map(|&k| tested[k]).collect();
            let trials = variables.len() * outcomes.len();
            let rate = |pick: fn(&ReplicateOutcome) -> &Vec<bool>| -> Option<f64> {
                (trials > 0).then(|| {
                    let hits: usize = outcomes
                        .iter()
                        .map(|o| positions.iter().filter(|&&k| pick(o)[k]).count())
                        .sum();
                    hits as f64 / trials as f64
                })
            };
            let se = |r: Option<f64>| r.map(|r| (r * (1.0 - r) / trials as f64).sqrt());
            let ks_rate = rate(|o| &o.ks);
            let cvm_rate = rate(|o| &o.cvm);
            GroupRate {
                beta,
                variables,
                trials,
                ks_se: se(ks_rate),
                cvm_se: se(cvm_rate),
                ks_rate,
                cvm_rate,
            }
        })
        .collect();
    Ok(PowerReport {
        scenario: cfg.clone(),
        groups,
        shifts: outcomes.iter().map(|o| o.shift).collect(),
        failures: outcomes.iter().map(|o| o.failures).sum(),
    })
}

/// Runs a scenario and reports wall-clock seconds alongside.
pub fn run_scenario_timed(cfg: &ScenarioConfig, workers: usize) -> Result<(PowerReport, f64)> {
    let start = Instant::now();
    let report = run_scenario(cfg, workers)?;
    Ok((report, start.elapsed().as_secs_f64()))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn block_examples() {
        let t = block_precision(10, 5).unwrap();
        assert_eq!(t[(0, 0)], 1.0);
        assert_eq!(t[(0, 4)], 0.5);
        assert_eq!(t[(0, 5)], 0.0);
        assert_eq!(t[(7, 9)], 0.5);
        assert_eq!(block_precision(4, 1).unwrap(), DMatrix::identity(4, 4));
        assert!(block_precision(10, 3).is_err());
    }

    #[test]
    fn coefficient_patterns() {
        let b = generate_coefficients(CoefficientSetting::S1, 5, 30).unwrap();
        let nz: Vec<(usize, f64)> = b.iter().copied().enumerate().filter(|(_, v)| *v != 0.0).collect();
        assert_eq!(nz, vec![(0, 0.2), (5, -0.4), (10, 0.6), (15, -0.8), (20, 1.0)]);
        let b = generate_coefficients(CoefficientSetting::S2, 5, 30).unwrap();
        assert_eq!(b.iter().filter(|v| **v != 0.0).count(), 25);
        assert!(b[..5].iter().all(|&v| v == 0.2));
        assert!(b[20..25].iter().all(|&v| v == 1.0));
        assert!(b[25..].iter().all(|&v| v == 0.0));
        let b = generate_coefficients(CoefficientSetting::S2, 10, 50).unwrap();
        assert_eq!(b.iter().filter(|v| **v != 0.0).count(), 50);
        assert!(generate_coefficients(CoefficientSetting::S1, 5, 24).is_err());
    }

    #[test]
    fn lattice_without_rewiring() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let edges = watts_strogatz(12, 2, 0.0, &mut rng).unwrap();
        assert_eq!(edges.len(), 24);
        for &(a, b) in &edges {
            let d = (b - a).min(12 - (b - a));
            assert!(d <= 2);
        }
        assert!(watts_strogatz(4, 2, 0.1, &mut rng).is_err());
    }

    #[test]
    fn rewiring_keeps_edge_count_and_simplicity() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let edges = watts_strogatz(50, 5, 0.25, &mut rng).unwrap();
        assert_eq!(edges.len(), 250);
        let set: BTreeSet<_> = edges.iter().collect();
        assert_eq!(set.len(), 250);
        assert!(edges.iter().all(|&(a, b)| a < b));
    }

    #[test]
    fn response_models() {
        let x = DMatrix::from_fn(20, 3, |r, c| (r as f64 - 10.0) * 0.1 + c as f64 * 0.05);
        let zero = vec![0.0; 3];
        let b = vec![0.5, 0.0, -0.3];
        let r1 = generate_response(&x, &b, RegressionModel::R1, 4).unwrap();
        let r4 = generate_response(&x, &b, RegressionModel::R4, 4).unwrap();
        for (a, c) in r1.iter().zip(&r4) {
            assert!((a.exp() - c).abs() <= 1e-12 * c);
        }
        let eps = generate_response(&x, &zero, RegressionModel::R1, 4).unwrap();
        let r2 = generate_response(&x, &b, RegressionModel::R2, 4).unwrap();
        let r3 = generate_response(&x, &b, RegressionModel::R3, 4).unwrap();
        for r in 0..20 {
            let eta = 0.5 * x[(r, 0)] - 0.3 * x[(r, 2)];
            assert!((r2[r] - (eta.exp() + eps[r])).abs() < 1e-12);
            assert!((r3[r] - (eta.sin() * eta.exp() + eps[r])).abs() < 1e-12);
        }
        let ln = generate_response(&x, &zero, RegressionModel::R4, 4).unwrap();
        for (a, c) in eps.iter().zip(&ln) {
            assert_eq!(a.exp(), *c);
        }
    }

    #[test]
    fn scenario_json_rejects_unknown_model() {
        let good = r#"{"name":"t","n":50,"p":10,"precision":{"kind":"block","q":5},
            "setting":"Null","q":5,"regression":"R1","replicates":2}"#;
        assert!(ScenarioConfig::from_json(good).is_ok());
        let bad = good.replace("\"R1\"", "\"R5\"");
        assert!(ScenarioConfig::from_json(&bad).is_err());
    }

    #[test]
    fn bundled_names_resolve() {
        for name in BUNDLED_SCENARIOS {
            let cfg = bundled_scenario(name).unwrap();
            cfg.validate().unwrap();
            assert_eq!(cfg.name, name);
        }
        assert!(bundled_scenario("nope").is_none());
    }
}
