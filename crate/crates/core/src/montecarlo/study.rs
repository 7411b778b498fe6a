//! The two Monte Carlo pipelines and their aggregation.
//!
//! Every trial derives its own generator from the master seed and its
//! coordinates, so the record stream does not depend on how many workers run
//! it. Records are collected in coordinate order and aggregated sequentially.

use std::fmt;
use std::str::FromStr;

use rayon::prelude::*;
use thiserror::Error;

use super::sampling::{
    apply_noise, calibrate_spread, derive_seed, draw_noise, random_consistent,
    random_irreducible_incomplete, removal_pattern_irregular, removal_pattern_regular,
    rng_from_seed, SamplingError,
};
use crate::indices::{self, check_parameters, IndexError, DEFAULT_ALPHA, DEFAULT_BETA};
use crate::matrix::{max_removable, PcMatrix};
use crate::metrics::ranking_distance;
use crate::priority::{evm_pc, harker_rank, PriorityError, PriorityVector, DEFAULT_MAX_ITER, DEFAULT_TOL};

const TAG_BASE: u64 = 1;
const TAG_DISTURB: u64 = 2;
const TAG_REMOVE: u64 = 3;
const TAG_CALIBRATE: u64 = 4;

#[derive(Debug, Error)]
pub enum StudyError {
    #[error("invalid experiment configuration: {0}")]
    Config(String),
    #[error(transparent)]
    Sampling(#[from] SamplingError),
    #[error(transparent)]
    Priority(#[from] PriorityError),
    #[error(transparent)]
    Index(#[from] IndexError),
}

/// How comparisons are removed from each disturbed matrix.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Scheme {
    RandomIrreducible,
    RegularCb,
    IrregularCw,
}

impl Scheme {
    pub fn as_str(self) -> &'static str {
        match self {
            Scheme::RandomIrreducible => "random",
            Scheme::RegularCb => "regular",
            Scheme::IrregularCw => "irregular",
        }
    }

    fn tag(self) -> u64 {
        match self {
            Scheme::RandomIrreducible => 0,
            Scheme::RegularCb => 1,
            Scheme::IrregularCw => 2,
        }
    }
}

impl fmt::Display for Scheme {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Scheme {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "random" => Ok(Scheme::RandomIrreducible),
            "regular" => Ok(Scheme::RegularCb),
            "irregular" => Ok(Scheme::IrregularCw),
            other => Err(format!("unknown scheme '{other}'")),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub n: usize,
    pub matrix_count: usize,
    /// Target mean CI per inconsistency group, ascending.
    pub ci_targets: Vec<f64>,
    pub alpha: f64,
    pub beta: f64,
    pub seed: u64,
    /// Removal scheme of the sensitivity study. The distribution study always
    /// runs both deterministic schemes.
    pub scheme: Scheme,
    /// Matrices drawn per calibration of a CI target.
    pub calibration_samples: usize,
    pub tol: f64,
    pub max_iter: usize,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            n: 9,
            matrix_count: 1000,
            ci_targets: default_ci_ladder(),
            alpha: DEFAULT_ALPHA,
            beta: DEFAULT_BETA,
            seed: 0,
            scheme: Scheme::RandomIrreducible,
            calibration_samples: 200,
            tol: DEFAULT_TOL,
            max_iter: DEFAULT_MAX_ITER,
        }
    }
}

impl ExperimentConfig {
    pub fn validate(&self) -> Result<(), StudyError> {
        let bad = |m: String| Err(StudyError::Config(m));
        if self.n < 3 {
            return bad(format!("n must be at least 3, got {}", self.n));
        }
        if self.matrix_count == 0 {
            return bad("matrix count must be at least 1".into());
        }
        if self.ci_targets.is_empty() {
            return bad("at least one CI target is required".into());
        }
        if self.ci_targets.iter().any(|t| !(t.is_finite() && *t >= 0.0)) {
            return bad("CI targets must be nonnegative".into());
        }
        if self.ci_targets.windows(2).any(|w| w[1] < w[0]) {
            return bad("CI targets must be ascending".into());
        }
        if self.calibration_samples == 0 {
            return bad("calibration samples must be at least 1".into());
        }
        if !(self.tol.is_finite() && self.tol > 0.0) {
            return bad(format!("tolerance must be positive, got {}", self.tol));
        }
        check_parameters(self.alpha, self.beta)?;
        Ok(())
    }
}

/// 41 CI levels: 0.001, 0.004, 0.008, then geometric steps up to 0.385.
pub fn default_ci_ladder() -> Vec<f64> {
    let mut ladder = vec![0.001, 0.004];
    let (start, end, steps) = (0.008f64, 0.385f64, 38);
    let ratio = (end / start).powf(1.0 / steps as f64);
    ladder.extend((0..=steps).map(|s| if s == steps { end } else { start * ratio.powi(s) }));
    ladder
}

/// One observation: an incomplete, disturbed descendant of a consistent base
/// matrix compared against the base's ranking.
#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentRecord {
    /// Seed of the trial generator (removal step).
    pub seed: u64,
    pub base_id: usize,
    pub ci_group: usize,
    /// CI of the disturbed complete matrix.
    pub ci_actual: f64,
    pub k: usize,
    pub scheme: Scheme,
    pub iid_alpha: f64,
    pub ii_beta: f64,
    pub tree_index: f64,
    pub compound: f64,
    /// NaN when the ranking did not converge.
    pub manhattan: f64,
    pub kendall_rescaled: f64,
    pub converged: bool,
}

struct Base {
    matrix: PcMatrix,
    ranking: PriorityVector,
}

fn build_bases(cfg: &ExperimentConfig) -> Result<Vec<Base>, StudyError> {
    (0..cfg.matrix_count)
        .into_par_iter()
        .map(|i| {
            let mut rng = rng_from_seed(derive_seed(cfg.seed, &[TAG_BASE, i as u64]));
            let matrix = random_consistent(cfg.n, &mut rng);
            let ranking = evm_pc(&matrix, cfg.tol, cfg.max_iter)?.vector;
            Ok(Base { matrix, ranking })
        })
        .collect()
}

/// Calibrated spread per CI target.
pub fn calibrate_ladder(cfg: &ExperimentConfig) -> Result<Vec<f64>, StudyError> {
    cfg.ci_targets
        .par_iter()
        .enumerate()
        .map(|(j, &target)| {
            let mut rng = rng_from_seed(derive_seed(cfg.seed, &[TAG_CALIBRATE, j as u64]));
            Ok(calibrate_spread(cfg.n, target, &mut rng, cfg.calibration_samples)?)
        })
        .collect()
}

fn disturbed(cfg: &ExperimentConfig, base: &Base, i: usize, j: usize, spread: f64) -> Result<(PcMatrix, f64), StudyError> {
    let mut rng = rng_from_seed(derive_seed(cfg.seed, &[TAG_DISTURB, i as u64, j as u64]));
    let noise = draw_noise(cfg.n, &mut rng);
    let d = apply_noise(&base.matrix, spread, &noise)?;
    let eig = evm_pc(&d, cfg.tol, cfg.max_iter)?;
    let ci = indices::consistency_index(&d, &eig)?;
    Ok((d, ci))
}

#[allow(clippy::too_many_arguments)]
fn observe(
    cfg: &ExperimentConfig,
    base: &Base,
    incomplete: &PcMatrix,
    seed: u64,
    base_id: usize,
    ci_group: usize,
    ci_actual: f64,
    k: usize,
    scheme: Scheme,
) -> Result<ExperimentRecord, StudyError> {
    let report = indices::report(incomplete, cfg.alpha, cfg.beta, None)?;
    let (manhattan, kendall_rescaled, converged) = match harker_rank(incomplete, cfg.tol, cfg.max_iter) {
        Ok(eig) => {
            let (md, krd) = ranking_distance(&base.ranking, &eig.vector)
                .expect("rankings of the same order");
            (md, krd, true)
        }
        Err(PriorityError::NoConvergence { .. }) => (f64::NAN, f64::NAN, false),
        Err(e) => return Err(e.into()),
    };
    Ok(ExperimentRecord {
        seed,
        base_id,
        ci_group,
        ci_actual,
        k,
        scheme,
        iid_alpha: report.iid_alpha,
        ii_beta: report.ii_beta,
        tree_index: report.tree_index.unwrap_or(f64::NAN),
        compound: report.compound,
        manhattan,
        kendall_rescaled,
        converged,
    })
}

fn removal_pattern(scheme: Scheme, n: usize, k: usize) -> Result<Vec<(usize, usize)>, SamplingError> {
    match scheme {
        Scheme::RegularCb => removal_pattern_regular(n, k),
        Scheme::IrregularCw => removal_pattern_irregular(n, k),
        Scheme::RandomIrreducible => unreachable!("random removal has no fixed pattern"),
    }
}

/// Output of [`run_sensitivity_study`].
#[derive(Debug, Clone)]
pub struct SensitivityRun {
    pub spreads: Vec<f64>,
    pub records: Vec<ExperimentRecord>,
}

/// For every base matrix `i`, CI group `j` and missing count
/// `k = 0..=(n^2-3n+2)/2`: disturb the consistent base to group `j`, remove
/// `k` comparisons with the configured scheme, rank with Harker's method and
/// compare against the base's eigenvector ranking.
pub fn run_sensitivity_study(cfg: &ExperimentConfig) -> Result<SensitivityRun, StudyError> {
    cfg.validate()?;
    let spreads = calibrate_ladder(cfg)?;
    let bases = build_bases(cfg)?;
    let kmax = max_removable(cfg.n);
    let groups = spreads.len();

    let chunks: Vec<Vec<ExperimentRecord>> = (0..cfg.matrix_count * groups)
        .into_par_iter()
        .map(|t| {
            let (i, j) = (t / groups, t % groups);
            let base = &bases[i];
            let (d, ci) = disturbed(cfg, base, i, j, spreads[j])?;
            (0..=kmax)
                .map(|k| {
                    let seed = derive_seed(
                        cfg.seed,
                        &[TAG_REMOVE, i as u64, j as u64, k as u64, cfg.scheme.tag()],
                    );
                    let incomplete = match cfg.scheme {
                        Scheme::RandomIrreducible => {
                            random_irreducible_incomplete(&d, k, &mut rng_from_seed(seed))?
                        }
                        s => d.without(removal_pattern(s, cfg.n, k)?),
                    };
                    observe(cfg, base, &incomplete, seed, i, j, ci, k, cfg.scheme)
                })
                .collect()
        })
        .collect::<Result<_, StudyError>>()?;
    Ok(SensitivityRun {
        spreads,
        records: chunks.into_iter().flatten().collect(),
    })
}

/// Output of [`run_distribution_study`].
#[derive(Debug, Clone)]
pub struct DistributionRun {
    pub spread: f64,
    pub records: Vec<ExperimentRecord>,
}

/// Disturbs every base matrix to the single configured CI target, then
/// removes `x = 0..=(n^2-3n+2)/2` comparisons with both the regular and the
/// irregular numbering scheme.
pub fn run_distribution_study(cfg: &ExperimentConfig) -> Result<DistributionRun, StudyError> {
    cfg.validate()?;
    if cfg.ci_targets.len() != 1 {
        return Err(StudyError::Config(
            "the distribution study takes exactly one CI target".into(),
        ));
    }
    let spread = calibrate_ladder(cfg)?[0];
    let bases = build_bases(cfg)?;
    let kmax = max_removable(cfg.n);
    let schemes = [Scheme::RegularCb, Scheme::IrregularCw];

    let chunks: Vec<Vec<ExperimentRecord>> = (0..cfg.matrix_count)
        .into_par_iter()
        .map(|i| {
            let base = &bases[i];
            let (d, ci) = disturbed(cfg, base, i, 0, spread)?;
            let mut out = Vec::with_capacity(2 * (kmax + 1));
            for scheme in schemes {
                for k in 0..=kmax {
                    let seed = derive_seed(cfg.seed, &[TAG_REMOVE, i as u64, 0, k as u64, scheme.tag()]);
                    let incomplete = d.without(removal_pattern(scheme, cfg.n, k)?);
                    out.push(observe(cfg, base, &incomplete, seed, i, 0, ci, k, scheme)?);
                }
            }
            Ok(out)
        })
        .collect::<Result<_, StudyError>>()?;
    Ok(DistributionRun {
        spread,
        records: chunks.into_iter().flatten().collect(),
    })
}

/// Runs `f` on a dedicated pool of `workers` threads (`None` = rayon default).
pub fn with_workers<T: Send>(workers: Option<usize>, f: impl FnOnce() -> T + Send) -> T {
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Some(w) = workers {
        builder = builder.num_threads(w.max(1));
    }
    builder.build().expect("thread pool").install(f)
}

/// Running mean and standard error.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct Stat {
    pub count: usize,
    sum: f64,
    sum_sq: f64,
}

impl Stat {
    pub fn push(&mut self, x: f64) {
        self.count += 1;
        self.sum += x;
        self.sum_sq += x * x;
    }

    pub fn mean(&self) -> f64 {
        if self.count == 0 {
            f64::NAN
        } else {
            self.sum / self.count as f64
        }
    }

    /// Standard error of the mean; 0 for fewer than two samples.
    pub fn se(&self) -> f64 {
        if self.count < 2 {
            return 0.0;
        }
        let n = self.count as f64;
        let var = ((self.sum_sq - self.sum * self.sum / n) / (n - 1.0)).max(0.0);
        (var / n).sqrt()
    }
}

/// The incompleteness index used as a bucketing axis.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum IndexAxis {
    Alpha,
    Beta,
    Tree,
    Compound,
}

impl IndexAxis {
    pub const ALL: [IndexAxis; 4] = [IndexAxis::Alpha, IndexAxis::Beta, IndexAxis::Tree, IndexAxis::Compound];

    pub fn as_str(self) -> &'static str {
        match self {
            IndexAxis::Alpha => "iid_alpha",
            IndexAxis::Beta => "ii_beta",
            IndexAxis::Tree => "tree_index",
            IndexAxis::Compound => "compound",
        }
    }

    pub fn value(self, r: &ExperimentRecord) -> f64 {
        match self {
            IndexAxis::Alpha => r.iid_alpha,
            IndexAxis::Beta => r.ii_beta,
            IndexAxis::Tree => r.tree_index,
            IndexAxis::Compound => r.compound,
        }
    }
}

/// Buckets per index axis in the sensitivity summary.
pub const INDEX_BUCKETS: usize = 10;

fn bucket_of(value: f64) -> usize {
    ((value * INDEX_BUCKETS as f64).floor() as usize).min(INDEX_BUCKETS - 1)
}

/// Mean sensitivity for one (CI group, index axis, index bucket) cell.
#[derive(Debug, Clone, PartialEq)]
pub struct SensitivityCell {
    pub ci_group: usize,
    pub ci_target: f64,
    pub ci_avg: f64,
    pub axis: IndexAxis,
    pub bucket: usize,
    pub bucket_lo: f64,
    pub bucket_hi: f64,
    pub excluded: usize,
    pub manhattan: Stat,
    pub kendall: Stat,
}

/// Sensitivity surfaces: for every CI group and index axis, the mean distances
/// per index bucket of width `1 / INDEX_BUCKETS`. Empty buckets are omitted;
/// non-converged records are counted in `excluded` only.
pub fn summarize_sensitivity(records: &[ExperimentRecord], ci_targets: &[f64]) -> Vec<SensitivityCell> {
    let groups = ci_targets.len();
    let mut ci = vec![Stat::default(); groups];
    let mut cells = vec![(Stat::default(), Stat::default(), 0usize); groups * 4 * INDEX_BUCKETS];
    for r in records {
        ci[r.ci_group].push(r.ci_actual);
        for (a, axis) in IndexAxis::ALL.iter().enumerate() {
            let v = axis.value(r);
            if v.is_nan() {
                continue;
            }
            let cell = &mut cells[(r.ci_group * 4 + a) * INDEX_BUCKETS + bucket_of(v)];
            if r.converged {
                cell.0.push(r.manhattan);
                cell.1.push(r.kendall_rescaled);
            } else {
                cell.2 += 1;
            }
        }
    }
    let mut out = Vec::new();
    for (g, target) in ci_targets.iter().enumerate() {
        for (a, axis) in IndexAxis::ALL.iter().enumerate() {
            for b in 0..INDEX_BUCKETS {
                let (md, kd, excluded) = cells[(g * 4 + a) * INDEX_BUCKETS + b];
                if md.count == 0 && excluded == 0 {
                    continue;
                }
                out.push(SensitivityCell {
                    ci_group: g,
                    ci_target: *target,
                    ci_avg: ci[g].mean(),
                    axis: *axis,
                    bucket: b,
                    bucket_lo: b as f64 / INDEX_BUCKETS as f64,
                    bucket_hi: (b + 1) as f64 / INDEX_BUCKETS as f64,
                    excluded,
                    manhattan: md,
                    kendall: kd,
                });
            }
        }
    }
    out
}

/// Means for one (scheme, missing count) point of the distribution study.
#[derive(Debug, Clone, PartialEq)]
pub struct DistributionPoint {
    pub scheme: Scheme,
    pub k: usize,
    pub excluded: usize,
    pub ci_avg: Stat,
    pub manhattan: Stat,
    pub kendall: Stat,
    pub iid_alpha: Stat,
    pub ii_beta: Stat,
    pub tree_index: Stat,
    pub compound: Stat,
}

/// Per-(scheme, k) means, regular scheme first, `k` ascending.
pub fn summarize_distribution(records: &[ExperimentRecord]) -> Vec<DistributionPoint> {
    let kmax = records.iter().map(|r| r.k).max().unwrap_or(0);
    let mut out = Vec::new();
    for scheme in [Scheme::RegularCb, Scheme::IrregularCw] {
        for k in 0..=kmax {
            let mut p = DistributionPoint {
                scheme,
                k,
                excluded: 0,
                ci_avg: Stat::default(),
                manhattan: Stat::default(),
                kendall: Stat::default(),
                iid_alpha: Stat::default(),
                ii_beta: Stat::default(),
                tree_index: Stat::default(),
                compound: Stat::default(),
            };
            for r in records.iter().filter(|r| r.scheme == scheme && r.k == k) {
                p.ci_avg.push(r.ci_actual);
                p.iid_alpha.push(r.iid_alpha);
                p.ii_beta.push(r.ii_beta);
                p.tree_index.push(r.tree_index);
                p.compound.push(r.compound);
                if r.converged {
                    p.manhattan.push(r.manhattan);
                    p.kendall.push(r.kendall_rescaled);
                } else {
                    p.excluded += 1;
                }
            }
            if p.ci_avg.count > 0 {
                out.push(p);
            }
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small(ci: Vec<f64>) -> ExperimentConfig {
        ExperimentConfig {
            n: 5,
            matrix_count: 6,
            ci_targets: ci,
            calibration_samples: 30,
            seed: 9,
            ..Default::default()
        }
    }

    #[test]
    fn ladder_shape() {
        let l = default_ci_ladder();
        assert_eq!(l.len(), 41);
        assert_eq!(&l[..3], &[0.001, 0.004, 0.008]);
        assert_eq!(*l.last().unwrap(), 0.385);
        assert!(l.windows(2).all(|w| w[1] > w[0]));
    }

    #[test]
    fn config_validation() {
        assert!(ExperimentConfig::default().validate().is_ok());
        let bad = |f: fn(&mut ExperimentConfig)| {
            let mut c = ExperimentConfig::default();
            f(&mut c);
            c.validate().is_err()
        };
        assert!(bad(|c| c.n = 2));
        assert!(bad(|c| c.matrix_count = 0));
        assert!(bad(|c| c.ci_targets = vec![0.2, 0.1]));
        assert!(bad(|c| c.ci_targets = vec![-0.1]));
        assert!(bad(|c| c.alpha = 0.5));
    }

    #[test]
    fn consistent_inputs_give_zero_sensitivity() {
        let run = run_sensitivity_study(&small(vec![0.0])).unwrap();
        assert_eq!(run.records.len(), 6 * 7);
        for r in &run.records {
            assert!(r.converged);
            assert!(r.manhattan < 1e-8, "{r:?}");
            assert_eq!(r.kendall_rescaled, 0.0);
        }
    }

    #[test]
    fn records_respect_ranges() {
        let run = run_sensitivity_study(&small(vec![0.05, 0.2])).unwrap();
        for r in &run.records {
            for v in [r.iid_alpha, r.ii_beta, r.tree_index, r.compound, r.kendall_rescaled] {
                assert!((0.0..=1.0).contains(&v));
            }
            assert!((0.0..=2.0).contains(&r.manhattan));
            assert!(r.k <= max_removable(5));
        }
        let cells = summarize_sensitivity(&run.records, &run.spreads);
        assert!(!cells.is_empty());
    }

    #[test]
    fn worker_count_does_not_change_records() {
        let cfg = small(vec![0.1]);
        let a = with_workers(Some(1), || run_sensitivity_study(&cfg).unwrap().records);
        let b = with_workers(Some(4), || run_sensitivity_study(&cfg).unwrap().records);
        assert_eq!(a, b);
    }

    #[test]
    fn distribution_without_removal_matches_across_schemes() {
        let run = run_distribution_study(&small(vec![0.1])).unwrap();
        let points = summarize_distribution(&run.records);
        assert_eq!(points.len(), 2 * 7);
        let (reg0, irr0) = (&points[0], &points[7]);
        assert_eq!((reg0.k, irr0.k), (0, 0));
        assert_eq!(reg0.manhattan.mean(), irr0.manhattan.mean());
        assert_eq!(reg0.kendall.mean(), irr0.kendall.mean());
        assert!(run_distribution_study(&small(vec![0.1, 0.2])).is_err());
    }

    #[test]
    fn stat_basics() {
        let mut s = Stat::default();
        for x in [1.0, 2.0, 3.0, 4.0] {
            s.push(x);
        }
        assert_eq!(s.mean(), 2.5);
        assert!((s.se() - (5.0f64 / 3.0 / 4.0).sqrt()).abs() < 1e-12);
    }
}
