//! KS/CvM statistics, the Gaussian multiplier bootstrap, and the per-variable
//! test that strings the pipeline together.

use nalgebra::DMatrix;
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::dataset::{column, Dataset};
use crate::error::{Result, SdaError};
use crate::lasso::{LassoFit, NodewiseEngine, DEFAULT_FOLDS};
use crate::rng::{derive_seed, stream};
use crate::sda::{analyze, SdaResult, DEGENERATE_VARIANCE};
use crate::slicing::{effective_h, make_slices, SlicePlan};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum StatisticKind {
    #[serde(rename = "KS")]
    Ks,
    #[serde(rename = "CvM")]
    Cvm,
}

impl std::fmt::Display for StatisticKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            StatisticKind::Ks => "KS",
            StatisticKind::Cvm => "CvM",
        })
    }
}

fn check_mask(z: &[f64], degenerate: &[bool]) -> Result<()> {
    if z.len() != degenerate.len() {
        return Err(SdaError::mismatch("z and degenerate mask lengths differ"));
    }
    if z.is_empty() || degenerate.iter().all(|&d| d) {
        return Err(SdaError::NoVarianceSignal);
    }
    Ok(())
}

/// `max_h |z_h|` over non-degenerate slices.
pub fn ks_statistic(z: &[f64], degenerate: &[bool]) -> Result<f64> {
    check_mask(z, degenerate)?;
    Ok(z.iter()
        .zip(degenerate)
        .filter(|(_, &d)| !d)
        .fold(0.0, |m, (v, _)| m.max(v.abs())))
}

/// `(1/H) sum_h |z_h|`; degenerate slices add zero but still count in `H`.
pub fn cvm_statistic(z: &[f64], degenerate: &[bool]) -> Result<f64> {
    check_mask(z, degenerate)?;
    let sum: f64 = z
        .iter()
        .zip(degenerate)
        .filter(|(_, &d)| !d)
        .map(|(v, _)| v.abs())
        .sum();
    Ok(sum / z.len() as f64)
}

pub fn statistic(kind: StatisticKind, z: &[f64], degenerate: &[bool]) -> Result<f64> {
    match kind {
        StatisticKind::Ks => ks_statistic(z, degenerate),
        StatisticKind::Cvm => cvm_statistic(z, degenerate),
    }
}

/// Null draws of a statistic.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BootstrapDraws {
    pub statistics: Vec<f64>,
    pub seed: u64,
}

impl BootstrapDraws {
    pub fn len(&self) -> usize {
        self.statistics.len()
    }

    pub fn is_empty(&self) -> bool {
        self.statistics.is_empty()
    }
}

/// Calls `f` with each simulated process `phi = n^{-1/2} psi' U`, where `U`
/// holds `n` fresh standard normals per draw. The generator is consumed
/// draw by draw, observation by observation.
fn for_each_process(psi: &DMatrix<f64>, l_draws: usize, seed: u64, mut f: impl FnMut(&[f64])) {
    let (n, h) = psi.shape();
    let scale = 1.0 / (n as f64).sqrt();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut u = vec![0.0; n];
    let mut phi = vec![0.0; h];
    for _ in 0..l_draws {
        u.iter_mut().for_each(|v| *v = rng.sample(StandardNormal));
        for (k, p) in phi.iter_mut().enumerate() {
            *p = scale * column(psi, k).iter().zip(&u).map(|(a, b)| a * b).sum::<f64>();
        }
        f(&phi);
    }
}

/// Raw simulated processes, one row per draw.
pub fn simulate_processes(psi: &DMatrix<f64>, l_draws: usize, seed: u64) -> DMatrix<f64> {
    let mut out = DMatrix::zeros(l_draws, psi.ncols());
    let mut l = 0;
    for_each_process(psi, l_draws, seed, |phi| {
        for (k, &v) in phi.iter().enumerate() {
            out[(l, k)] = v;
        }
        l += 1;
    });
    out
}

fn bootstrap_setup(psi: &DMatrix<f64>, omega_diag: &[f64], l_draws: usize) -> Result<(Vec<bool>, Vec<f64>)> {
    if l_draws == 0 {
        return Err(SdaError::invalid("need at least one bootstrap draw"));
    }
    if omega_diag.len() != psi.ncols() {
        return Err(SdaError::mismatch("omega diagonal does not match psi"));
    }
    let degenerate: Vec<bool> = omega_diag.iter().map(|&v| v < DEGENERATE_VARIANCE).collect();
    if degenerate.iter().all(|&d| d) {
        return Err(SdaError::NoVarianceSignal);
    }
    let inv_sd = omega_diag
        .iter()
        .zip(&degenerate)
        .map(|(&v, &d)| if d { 0.0 } else { 1.0 / v.sqrt() })
        .collect();
    Ok((degenerate, inv_sd))
}

/// KS and CvM null draws computed from the same simulated processes.
pub fn multiplier_bootstrap_both(
    psi: &DMatrix<f64>,
    omega_diag: &[f64],
    l_draws: usize,
    seed: u64,
) -> Result<(BootstrapDraws, BootstrapDraws)> {
    let (degenerate, inv_sd) = bootstrap_setup(psi, omega_diag, l_draws)?;
    let h = psi.ncols() as f64;
    let mut ks = Vec::with_capacity(l_draws);
    let mut cvm = Vec::with_capacity(l_draws);
    for_each_process(psi, l_draws, seed, |phi| {
        let mut max = 0.0f64;
        let mut sum = 0.0;
        for k in 0..phi.len() {
            if !degenerate[k] {
                let a = (phi[k] * inv_sd[k]).abs();
                max = max.max(a);
                sum += a;
            }
        }
        ks.push(max);
        cvm.push(sum / h);
    });
    Ok((
        BootstrapDraws { statistics: ks, seed },
        BootstrapDraws { statistics: cvm, seed },
    ))
}

pub fn multiplier_bootstrap(
    psi: &DMatrix<f64>,
    omega_diag: &[f64],
    kind: StatisticKind,
    l_draws: usize,
    seed: u64,
) -> Result<BootstrapDraws> {
    let (ks, cvm) = multiplier_bootstrap_both(psi, omega_diag, l_draws, seed)?;
    Ok(match kind {
        StatisticKind::Ks => ks,
        StatisticKind::Cvm => cvm,
    })
}

/// `(1 + #{draws >= statistic}) / (L + 1)`; never zero.
pub fn p_value(statistic: f64, draws: &BootstrapDraws) -> f64 {
    let exceed = draws.statistics.iter().filter(|&&d| d >= statistic).count();
    (1 + exceed) as f64 / (draws.len() + 1) as f64
}

/// The `ceil((1 - alpha) L)`-th order statistic of the draws.
pub fn critical_value(draws: &BootstrapDraws, alpha: f64) -> Result<f64> {
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(SdaError::invalid(format!("alpha must lie in (0, 1), got {alpha}")));
    }
    if draws.is_empty() {
        return Err(SdaError::invalid("no bootstrap draws"));
    }
    let l = draws.len();
    let mut sorted = draws.statistics.clone();
    sorted.sort_by(f64::total_cmp);
    // the epsilon keeps e.g. 0.95 * 100 from rounding up to 96
    let k = (((1.0 - alpha) * l as f64) - 1e-9).ceil().clamp(1.0, l as f64) as usize;
    Ok(sorted[k - 1])
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TestOutcome {
    #[serde(rename = "index")]
    pub target_index: usize,
    #[serde(rename = "kind")]
    pub statistic_kind: StatisticKind,
    pub statistic: f64,
    pub p_value: f64,
    pub critical_value: f64,
    pub alpha: f64,
    pub rejected: bool,
    #[serde(rename = "L")]
    pub bootstrap_draws: usize,
    pub seed: u64,
    #[serde(rename = "H")]
    pub h_count: usize,
    pub degenerate_slices: Vec<usize>,
}

fn outcome_from(
    kind: StatisticKind,
    sda: &SdaResult,
    draws: &BootstrapDraws,
    alpha: f64,
    seed: u64,
) -> Result<TestOutcome> {
    let stat = statistic(kind, &sda.z_scores, &sda.degenerate_mask())?;
    let crit = critical_value(draws, alpha)?;
    let p = p_value(stat, draws);
    Ok(TestOutcome {
        target_index: sda.target_index,
        statistic_kind: kind,
        statistic: stat,
        p_value: p,
        critical_value: crit,
        alpha,
        // ties at the critical value are not rejections
        rejected: stat > crit || p < alpha,
        bootstrap_draws: draws.len(),
        seed,
        h_count: sda.h_count,
        degenerate_slices: sda.degenerate_slices.clone(),
    })
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct TestConfig {
    /// Number of slices; `None` uses `ceil(n^(1/3))`.
    pub h: Option<usize>,
    pub l_draws: usize,
    pub alpha: f64,
    pub folds: usize,
    pub seed: u64,
}

impl Default for TestConfig {
    fn default() -> Self {
        TestConfig {
            h: None,
            l_draws: 1000,
            alpha: 0.05,
            folds: DEFAULT_FOLDS,
            seed: 0,
        }
    }
}

/// Everything computed for one target variable.
#[derive(Debug, Clone)]
pub struct VariableTest {
    pub target_index: usize,
    pub sda: SdaResult,
    pub ks: TestOutcome,
    pub cvm: TestOutcome,
    pub fit: Option<LassoFit>,
}

impl VariableTest {
    pub fn outcome(&self, kind: StatisticKind) -> &TestOutcome {
        match kind {
            StatisticKind::Ks => &self.ks,
            StatisticKind::Cvm => &self.cvm,
        }
    }
}

/// Runs the per-variable test on one centered dataset. The slice plan and
/// the Gram matrix are shared by every target.
pub struct SdaTester<'a> {
    data: &'a Dataset,
    plan: SlicePlan,
    engine: NodewiseEngine<'a>,
    cfg: TestConfig,
}

impl<'a> SdaTester<'a> {
    pub fn new(data: &'a Dataset, cfg: TestConfig) -> Result<Self> {
        if !data.is_centered() {
            return Err(SdaError::invalid("dataset must be centered before testing"));
        }
        if !(cfg.alpha > 0.0 && cfg.alpha < 1.0) {
            return Err(SdaError::invalid(format!("alpha must lie in (0, 1), got {}", cfg.alpha)));
        }
        if cfg.l_draws == 0 {
            return Err(SdaError::invalid("need at least one bootstrap draw"));
        }
        let h = effective_h(data.y(), cfg.h)?;
        let plan = make_slices(data.y(), data.y().kind(), h)?;
        let engine = NodewiseEngine::new(data, cfg.folds);
        Ok(SdaTester { data, plan, engine, cfg })
    }

    pub fn plan(&self) -> &SlicePlan {
        &self.plan
    }

    pub fn config(&self) -> &TestConfig {
        &self.cfg
    }

    pub fn fit(&self, i: usize, screen: Option<&[usize]>) -> Result<LassoFit> {
        self.engine.fit(i, screen, self.cfg.seed)
    }

    /// Slice, nodewise LASSO, estimate, bootstrap, decide.
    pub fn test(&self, i: usize, screen: Option<&[usize]>) -> Result<VariableTest> {
        let fit = self.fit(i, screen)?;
        let mut out = self.test_residuals(i, &fit.residuals)?;
        out.fit = Some(fit);
        Ok(out)
    }

    /// Same as [`test`](Self::test) but with known nodewise coefficients
    /// `(column, value)` in place of the LASSO fit.
    pub fn test_with_coefficients(&self, i: usize, coefficients: &[(usize, f64)]) -> Result<VariableTest> {
        let mut z = self.data.column(i).to_vec();
        for &(c, b) in coefficients {
            if c == i || c >= self.data.p() {
                return Err(SdaError::invalid(format!("bad coefficient column {c}")));
            }
            z.iter_mut().zip(self.data.column(c)).for_each(|(zi, &x)| *zi -= b * x);
        }
        self.test_residuals(i, &z)
    }

    pub fn test_residuals(&self, i: usize, residuals: &[f64]) -> Result<VariableTest> {
        let (sda, psi) = analyze(i, residuals, &self.plan)?;
        let seed = bootstrap_seed(self.cfg.seed, i);
        let (ks_draws, cvm_draws) = multiplier_bootstrap_both(&psi, &sda.omega_diag(), self.cfg.l_draws, seed)?;
        let ks = outcome_from(StatisticKind::Ks, &sda, &ks_draws, self.cfg.alpha, self.cfg.seed)?;
        let cvm = outcome_from(StatisticKind::Cvm, &sda, &cvm_draws, self.cfg.alpha, self.cfg.seed)?;
        Ok(VariableTest {
            target_index: i,
            sda,
            ks,
            cvm,
            fit: None,
        })
    }
}

/// Seed of the multiplier stream for variable `i`.
pub fn bootstrap_seed(seed: u64, i: usize) -> u64 {
    derive_seed(seed, stream::BOOTSTRAP, i as u64)
}

/// Tests whether column `i` belongs to the Markov blanket of the outcome.
pub fn test_variable(
    d: &Dataset,
    i: usize,
    kind: StatisticKind,
    cfg: &TestConfig,
    screen: Option<&[usize]>,
) -> Result<TestOutcome> {
    if i >= d.p() {
        return Err(SdaError::invalid(format!("variable index {i} out of range (p = {})", d.p())));
    }
    let tester = SdaTester::new(d, cfg.clone())?;
    Ok(tester.test(i, screen)?.outcome(kind).clone())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn draws(v: Vec<f64>) -> BootstrapDraws {
        BootstrapDraws { statistics: v, seed: 0 }
    }

    #[test]
    fn statistic_examples() {
        let z = [1.0, -2.5, 0.3];
        let none = [false; 3];
        assert_eq!(ks_statistic(&z, &none).unwrap(), 2.5);
        assert!((cvm_statistic(&z, &none).unwrap() - 3.8 / 3.0).abs() < 1e-15);
        assert_eq!(ks_statistic(&[0.0; 3], &none).unwrap(), 0.0);
        assert!((cvm_statistic(&[-1.7; 4], &[false; 4]).unwrap() - 1.7).abs() < 1e-15);
        // degenerate slice excluded from max, counted in the CvM divisor
        assert_eq!(ks_statistic(&[0.0, 1.0], &[true, false]).unwrap(), 1.0);
        assert_eq!(cvm_statistic(&[0.0, 1.0], &[true, false]).unwrap(), 0.5);
        assert!(ks_statistic(&[0.0], &[true]).is_err());
    }

    #[test]
    fn p_value_examples() {
        let d = draws((1..=100).map(f64::from).collect());
        assert_eq!(p_value(1000.0, &d), 1.0 / 101.0);
        assert_eq!(p_value(0.0, &d), 1.0);
        let d = draws((1..=999).map(f64::from).collect());
        let p = p_value(500.0, &d);
        assert!((0.49..=0.52).contains(&p), "{p}");
    }

    #[test]
    fn critical_value_examples() {
        let d = draws((1..=100).map(f64::from).collect());
        assert_eq!(critical_value(&d, 0.05).unwrap(), 95.0);
        let sym = draws((0..=100).map(|k| 5.0 + (k as f64 - 50.0) * 0.01).collect());
        assert!((critical_value(&sym, 0.5).unwrap() - 5.0).abs() <= 0.01 + 1e-12);
        assert_eq!(critical_value(&draws(vec![2.0; 17]), 0.1).unwrap(), 2.0);
        assert!(critical_value(&d, 0.0).is_err());
        assert!(critical_value(&d, 1.0).is_err());
    }

    #[test]
    fn zero_process_gives_zero_draws() {
        let psi = DMatrix::zeros(10, 3);
        let (ks, cvm) = multiplier_bootstrap_both(&psi, &[1.0, 1.0, 1.0], 50, 3).unwrap();
        assert!(ks.statistics.iter().chain(&cvm.statistics).all(|&v| v == 0.0));
    }

    #[test]
    fn bootstrap_is_deterministic_and_checks_inputs() {
        let psi = DMatrix::from_fn(20, 3, |r, c| ((r * 7 + c * 3) % 5) as f64 - 2.0);
        let omega = [1.0, 2.0, 0.5];
        let a = multiplier_bootstrap(&psi, &omega, StatisticKind::Ks, 200, 11).unwrap();
        let b = multiplier_bootstrap(&psi, &omega, StatisticKind::Ks, 200, 11).unwrap();
        assert_eq!(a, b);
        let c = multiplier_bootstrap(&psi, &omega, StatisticKind::Ks, 200, 12).unwrap();
        assert_ne!(a, c);
        assert!(multiplier_bootstrap(&psi, &[0.0; 3], StatisticKind::Ks, 10, 1).is_err());
        assert!(multiplier_bootstrap(&psi, &omega, StatisticKind::Ks, 0, 1).is_err());
        assert!(a.statistics.iter().all(|v| v.is_finite() && *v >= 0.0));
    }
}
