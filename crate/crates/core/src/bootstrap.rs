//! Seeded nonparametric bootstrap engine and confidence-interval
//! constructions for union bounds.
//!
//! The identified set `[min_j theta_j, max_j theta_j]` is the min/max over
//! the enumerated bounding sums, which makes the plain bootstrap
//! inconsistent: the resampled minimum is biased downward and the
//! resampled maximum upward. The inconsistency is directional, so
//! reflected endpoints `2*estimate - quantile` with the high quantile
//! subtracted on the lower end (and vice versa) still give uniformly valid
//! coverage. Four constructions are provided:
//!
//! * [`ci_identified_set`] — reflected interval covering the whole set;
//! * [`ci_parameter`] — the same reflection with per-side levels adapted
//!   to the estimated set width (narrow sets get two-sided protection,
//!   wide sets one-sided);
//! * [`ci_percentile`] — the standard percentile interval, for comparison;
//! * [`ci_union`] — the union of per-sum reflected intervals, for
//!   comparison.
//!
//! Replicates are drawn from independent ChaCha8 streams keyed by
//! `(seed, replicate)`, so results are a pure function of
//! `(dataset, horizon, config)` no matter how many threads run.

use rand::Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::data::PanelDataset;
use crate::error::{Error, Result};
use crate::estimators::{bounding_sums, BoundingEstimates, CellStats, DidContrasts};
use crate::rng::{self, Stream};

pub use crate::normal::normal_cdf;

/// Resampling attempts per replicate before giving up on a dataset as
/// pathologically sparse. Replicates whose resample leaves some required
/// (group, period) cell empty are rejected and redrawn from the same
/// stream, keeping the effective replicate count at `B`.
const MAX_ATTEMPTS_PER_REPLICATE: usize = 1000;

/// Bootstrap settings: replicate count `B`, level `alpha`, master seed.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct BootstrapConfig {
    pub replicates: usize,
    pub alpha: f64,
    pub seed: u64,
}

impl BootstrapConfig {
    pub fn new(replicates: usize, alpha: f64, seed: u64) -> Result<Self> {
        if replicates < 2 {
            return Err(Error::Argument(format!(
                "need at least 2 bootstrap replicates, got {replicates}"
            )));
        }
        if !(alpha > 0.0 && alpha < 1.0) {
            return Err(Error::Argument(format!(
                "alpha must be in (0,1), got {alpha}"
            )));
        }
        Ok(Self {
            replicates,
            alpha,
            seed,
        })
    }

    /// True when `B` replicates can resolve the tail quantiles at this
    /// `alpha` (recommended `B * min(alpha/2, 1-alpha/2) >= 1`).
    pub fn quantile_resolution_ok(&self) -> bool {
        let tail = (self.alpha / 2.0).min(1.0 - self.alpha / 2.0);
        self.replicates as f64 * tail >= 1.0
    }
}

impl Default for BootstrapConfig {
    fn default() -> Self {
        Self {
            replicates: 300,
            alpha: 0.05,
            seed: 42,
        }
    }
}

/// The ChaCha8 stream that drives bootstrap replicate `replicate`.
pub fn replicate_stream(seed: u64, replicate: u64) -> Stream {
    rng::stream(seed, replicate)
}

fn draw_indices(rng: &mut Stream, n: u32, buf: &mut [u32]) {
    for slot in buf.iter_mut() {
        *slot = rng.random_range(0..n);
    }
}

/// One nonparametric resample: `N` whole observations drawn with
/// replacement from the canonically ordered unit list. Outcomes,
/// missingness and group travel together, preserving any within-unit
/// serial correlation.
pub fn resample(ds: &PanelDataset, rng: &mut Stream) -> PanelDataset {
    let n = ds.len();
    let mut draws = vec![0u32; n];
    draw_indices(rng, n as u32, &mut draws);
    let observations = draws
        .iter()
        .map(|&i| ds.canonical_observation(i as usize).clone())
        .collect();
    PanelDataset::new(observations).expect("resample of a valid dataset is valid")
}

/// Per-replicate bounding sums: a `B x k` matrix, one row per replicate in
/// replicate order, one column per assignment mask.
#[derive(Debug, Clone)]
pub struct ReplicateSums {
    horizon: usize,
    width: usize,
    rows: Vec<f64>,
}

impl ReplicateSums {
    /// Assemble from per-replicate rows (mainly for synthetic inputs in
    /// tests; the engine builds this directly).
    pub fn from_rows(horizon: usize, rows: Vec<Vec<f64>>) -> Result<Self> {
        let Some(first) = rows.first() else {
            return Err(Error::Argument("no replicate rows".into()));
        };
        let width = first.len();
        if width == 0 || rows.iter().any(|r| r.len() != width) {
            return Err(Error::Argument("ragged replicate rows".into()));
        }
        Ok(Self {
            horizon,
            width,
            rows: rows.into_iter().flatten().collect(),
        })
    }

    pub fn horizon(&self) -> usize {
        self.horizon
    }

    /// Number of replicates `B`.
    pub fn replicates(&self) -> usize {
        self.rows.len() / self.width
    }

    /// Number of bounding sums `k`.
    pub fn width(&self) -> usize {
        self.width
    }

    pub fn row(&self, b: usize) -> &[f64] {
        &self.rows[b * self.width..(b + 1) * self.width]
    }

    /// Per-replicate minima, in replicate order.
    pub fn mins(&self) -> Vec<f64> {
        self.rows
            .chunks_exact(self.width)
            .map(|r| r.iter().copied().fold(f64::INFINITY, f64::min))
            .collect()
    }

    /// Per-replicate maxima, in replicate order.
    pub fn maxs(&self) -> Vec<f64> {
        self.rows
            .chunks_exact(self.width)
            .map(|r| r.iter().copied().fold(f64::NEG_INFINITY, f64::max))
            .collect()
    }

    /// All replicate values of bounding sum `j`.
    pub fn column(&self, j: usize) -> Vec<f64> {
        self.rows.chunks_exact(self.width).map(|r| r[j]).collect()
    }
}

/// Per-replicate (min, max) pairs over the bounding sums.
#[derive(Debug, Clone, Serialize)]
pub struct BootstrapDistribution {
    pub mins: Vec<f64>,
    pub maxs: Vec<f64>,
}

fn replicate_row(
    ds: &PanelDataset,
    t: usize,
    cfg: &BootstrapConfig,
    replicate: u64,
    draws: &mut Vec<u32>,
) -> Result<Vec<f64>> {
    let n = ds.len() as u32;
    let mut stream = replicate_stream(cfg.seed, replicate);
    for _attempt in 0..MAX_ATTEMPTS_PER_REPLICATE {
        draws.resize(ds.len(), 0);
        draw_indices(&mut stream, n, draws);
        // Accumulate in canonical order of the implied resampled dataset
        // (ascending draw index), so this matches estimating on the
        // materialized resample bit for bit.
        draws.sort_unstable();
        let mut cells = CellStats::new(ds.periods());
        for &i in draws.iter() {
            cells.add_observation(ds.canonical_observation(i as usize), t);
        }
        if cells.complete(t) {
            let contrasts = DidContrasts::from_cells(&cells, t)?;
            return Ok(BoundingEstimates::from_contrasts(&contrasts)
                .sums()
                .to_vec());
        }
    }
    Err(Error::Degenerate(format!(
        "bootstrap replicate {replicate} exceeded {MAX_ATTEMPTS_PER_REPLICATE} redraws: \
         some (group, period) cell is almost always empty under resampling"
    )))
}

/// Run the bootstrap and keep every replicate's full vector of bounding
/// sums. All interval constructions below can be derived from one run.
pub fn run_bootstrap_sums(
    ds: &PanelDataset,
    t: usize,
    cfg: &BootstrapConfig,
) -> Result<ReplicateSums> {
    // Surfaces horizon/cell errors before spending time on replicates.
    let point = bounding_sums(ds, t)?;
    let width = point.sums().len();
    let rows: Vec<Vec<f64>> = (0..cfg.replicates as u64)
        .into_par_iter()
        .map_init(Vec::new, |draws, b| replicate_row(ds, t, cfg, b, draws))
        .collect::<Result<_>>()?;
    Ok(ReplicateSums {
        horizon: t,
        width,
        rows: rows.into_iter().flatten().collect(),
    })
}

/// Run the bootstrap and reduce each replicate to its (min, max) pair.
pub fn run_bootstrap(
    ds: &PanelDataset,
    t: usize,
    cfg: &BootstrapConfig,
) -> Result<BootstrapDistribution> {
    let sums = run_bootstrap_sums(ds, t, cfg)?;
    Ok(BootstrapDistribution {
        mins: sums.mins(),
        maxs: sums.maxs(),
    })
}

/// The `q` sample quantile as the order statistic with 1-based rank
/// `ceil(q * B)` (rank 1 when `q = 0`).
pub fn empirical_quantile(values: &[f64], q: f64) -> Result<f64> {
    if values.is_empty() {
        return Err(Error::Argument("quantile of an empty list".into()));
    }
    if !(0.0..=1.0).contains(&q) {
        return Err(Error::Argument(format!("quantile level {q} outside [0,1]")));
    }
    let mut sorted = values.to_vec();
    sorted.sort_unstable_by(f64::total_cmp);
    Ok(quantile_sorted(&sorted, q))
}

/// Order-statistic quantile over already-sorted values.
fn quantile_sorted(sorted: &[f64], q: f64) -> f64 {
    let b = sorted.len();
    let rank = (q * b as f64).ceil() as usize;
    sorted[rank.clamp(1, b) - 1]
}

fn sorted(values: Vec<f64>) -> Vec<f64> {
    let mut v = values;
    v.sort_unstable_by(f64::total_cmp);
    v
}

/// Which construction produced an interval.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum IntervalKind {
    Set,
    Parameter,
    Percentile,
    Union,
}

/// Internals of the width-adaptive parameter interval: the nonnegative
/// width estimate, the scaling sequence (absent when both bootstrap IQRs
/// vanish and the conservative fallback level is used), and the per-side
/// level actually applied.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct AdaptiveInternals {
    pub omega_plus: f64,
    pub rho: Option<f64>,
    pub p_hat: f64,
}

/// A confidence interval plus the configuration that produced it.
#[derive(Debug, Clone, Serialize)]
pub struct IntervalResult {
    pub lower: f64,
    pub upper: f64,
    pub kind: IntervalKind,
    pub alpha: f64,
    pub replicates: usize,
    pub seed: u64,
    /// Present iff `kind == Parameter`.
    pub internals: Option<AdaptiveInternals>,
    /// True when the raw endpoints crossed (tiny-B pathology) and the
    /// interval was clamped to their midpoint.
    pub clamped: bool,
}

impl IntervalResult {
    pub fn length(&self) -> f64 {
        self.upper - self.lower
    }

    pub fn contains(&self, x: f64) -> bool {
        self.lower <= x && x <= self.upper
    }

    /// True when `[lo, hi]` lies inside this interval.
    pub fn covers_interval(&self, lo: f64, hi: f64) -> bool {
        self.lower <= lo && hi <= self.upper
    }
}

fn finish(
    mut lower: f64,
    mut upper: f64,
    kind: IntervalKind,
    cfg: &BootstrapConfig,
    internals: Option<AdaptiveInternals>,
) -> IntervalResult {
    let mut clamped = false;
    if lower > upper {
        let mid = 0.5 * (lower + upper);
        lower = mid;
        upper = mid;
        clamped = true;
    }
    IntervalResult {
        lower,
        upper,
        kind,
        alpha: cfg.alpha,
        replicates: cfg.replicates,
        seed: cfg.seed,
        internals,
        clamped,
    }
}

fn check_parts(point_sums: &[f64], reps: &ReplicateSums) -> Result<()> {
    if point_sums.is_empty() {
        return Err(Error::Argument("no bounding sums".into()));
    }
    if point_sums.len() != reps.width() {
        return Err(Error::Argument(format!(
            "point estimates have {} sums but replicates have {}",
            point_sums.len(),
            reps.width()
        )));
    }
    Ok(())
}

fn min_max(sums: &[f64]) -> (f64, f64) {
    let lo = sums.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = sums.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    (lo, hi)
}

/// Reflected interval for the identified set:
/// `[2 min - Q_{1-a/2}(min*), 2 max - Q_{a/2}(max*)]`.
pub fn set_interval(
    point_sums: &[f64],
    reps: &ReplicateSums,
    cfg: &BootstrapConfig,
) -> Result<IntervalResult> {
    check_parts(point_sums, reps)?;
    let (min_hat, max_hat) = min_max(point_sums);
    let mins = sorted(reps.mins());
    let maxs = sorted(reps.maxs());
    let lower = 2.0 * min_hat - quantile_sorted(&mins, 1.0 - cfg.alpha / 2.0);
    let upper = 2.0 * max_hat - quantile_sorted(&maxs, cfg.alpha / 2.0);
    Ok(finish(lower, upper, IntervalKind::Set, cfg, None))
}

/// Width-adaptive reflected interval for the parameter itself.
///
/// The per-side level `p = 1 - Phi(rho * omega+) * alpha` moves from
/// `1 - alpha/2` (set estimated as a point, two-sided risk) to `1 - alpha`
/// (wide set, risk concentrated on one side).
pub fn parameter_interval(
    point_sums: &[f64],
    reps: &ReplicateSums,
    cfg: &BootstrapConfig,
    n_units: usize,
) -> Result<IntervalResult> {
    check_parts(point_sums, reps)?;
    let (min_hat, max_hat) = min_max(point_sums);
    let mins = sorted(reps.mins());
    let maxs = sorted(reps.maxs());

    let omega = (2.0 * max_hat - quantile_sorted(&maxs, 0.5))
        - (2.0 * min_hat - quantile_sorted(&mins, 0.5));
    let omega_plus = omega.max(0.0);

    let iqr_maxs = quantile_sorted(&maxs, 0.75) - quantile_sorted(&maxs, 0.25);
    let iqr_mins = quantile_sorted(&mins, 0.75) - quantile_sorted(&mins, 0.25);
    let spread = iqr_maxs.max(iqr_mins);

    let scale = (n_units as f64).ln() * spread;
    // The per-side tail level 1 - p. Computed directly (rather than via
    // 1 - p_hat) so that a zero width estimate reproduces the set
    // interval's alpha/2 bit for bit.
    let (rho, tail) = if scale > 0.0 && (1.0 / scale).is_finite() {
        let rho = 1.0 / scale;
        (Some(rho), normal_cdf(rho * omega_plus) * cfg.alpha)
    } else {
        // Degenerate bootstrap spread: fall back to the widest per-side
        // level, which keeps the interval valid.
        (None, cfg.alpha / 2.0)
    };
    let p_hat = 1.0 - tail;

    let lower = 2.0 * min_hat - quantile_sorted(&mins, p_hat);
    let upper = 2.0 * max_hat - quantile_sorted(&maxs, tail);
    let internals = AdaptiveInternals {
        omega_plus,
        rho,
        p_hat,
    };
    Ok(finish(
        lower,
        upper,
        IntervalKind::Parameter,
        cfg,
        Some(internals),
    ))
}

/// Standard percentile interval `[Q_{a/2}(min*), Q_{1-a/2}(max*)]`.
pub fn percentile_interval(
    point_sums: &[f64],
    reps: &ReplicateSums,
    cfg: &BootstrapConfig,
) -> Result<IntervalResult> {
    check_parts(point_sums, reps)?;
    let mins = sorted(reps.mins());
    let maxs = sorted(reps.maxs());
    let lower = quantile_sorted(&mins, cfg.alpha / 2.0);
    let upper = quantile_sorted(&maxs, 1.0 - cfg.alpha / 2.0);
    Ok(finish(lower, upper, IntervalKind::Percentile, cfg, None))
}

/// Union of per-sum reflected intervals: each bounding sum gets its own
/// `1 - alpha` reflected interval from the same replicates, and the union
/// spans from the smallest lower endpoint to the largest upper endpoint.
pub fn union_interval(
    point_sums: &[f64],
    reps: &ReplicateSums,
    cfg: &BootstrapConfig,
) -> Result<IntervalResult> {
    check_parts(point_sums, reps)?;
    let mut lower = f64::INFINITY;
    let mut upper = f64::NEG_INFINITY;
    for (j, &theta) in point_sums.iter().enumerate() {
        let col = sorted(reps.column(j));
        lower = lower.min(2.0 * theta - quantile_sorted(&col, 1.0 - cfg.alpha / 2.0));
        upper = upper.max(2.0 * theta - quantile_sorted(&col, cfg.alpha / 2.0));
    }
    Ok(finish(lower, upper, IntervalKind::Union, cfg, None))
}

/// Uniformly valid `1 - alpha` confidence interval for the identified set.
pub fn ci_identified_set(
    ds: &PanelDataset,
    t: usize,
    cfg: &BootstrapConfig,
) -> Result<IntervalResult> {
    let point = bounding_sums(ds, t)?;
    let reps = run_bootstrap_sums(ds, t, cfg)?;
    set_interval(point.sums(), &reps, cfg)
}

/// Uniformly valid `1 - alpha` confidence interval for the treatment
/// effect itself, adapted to the estimated set width.
pub fn ci_parameter(ds: &PanelDataset, t: usize, cfg: &BootstrapConfig) -> Result<IntervalResult> {
    let point = bounding_sums(ds, t)?;
    let reps = run_bootstrap_sums(ds, t, cfg)?;
    parameter_interval(point.sums(), &reps, cfg, ds.len())
}

/// Standard percentile bootstrap interval (comparison method).
pub fn ci_percentile(ds: &PanelDataset, t: usize, cfg: &BootstrapConfig) -> Result<IntervalResult> {
    let point = bounding_sums(ds, t)?;
    let reps = run_bootstrap_sums(ds, t, cfg)?;
    percentile_interval(point.sums(), &reps, cfg)
}

/// Union of per-sum reflected intervals (comparison method).
pub fn ci_union(ds: &PanelDataset, t: usize, cfg: &BootstrapConfig) -> Result<IntervalResult> {
    let point = bounding_sums(ds, t)?;
    let reps = run_bootstrap_sums(ds, t, cfg)?;
    union_interval(point.sums(), &reps, cfg)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::{GroupLabel, Observation};

    fn toy_dataset(n_per_group: usize, periods: usize, jitter: f64) -> PanelDataset {
        // Deterministic, mildly heterogeneous three-group panel.
        let mut obs = Vec::new();
        for g in GroupLabel::ALL {
            for i in 0..n_per_group {
                let base = 0.3 * g.index() as f64 + jitter * (i as f64).sin();
                let ys: Vec<f64> = (0..periods)
                    .map(|t| {
                        base + t as f64 * (1.0 + 0.1 * g.index() as f64)
                            + 0.05 * ((i * 7 + t * 3) as f64).cos()
                    })
                    .collect();
                obs.push(
                    Observation::fully_observed(format!("{}{i:03}", g.token()), g, ys).unwrap(),
                );
            }
        }
        PanelDataset::new(obs).unwrap()
    }

    #[test]
    fn quantile_examples() {
        assert_eq!(empirical_quantile(&[1.0, 2.0, 3.0, 4.0], 0.5).unwrap(), 2.0);
        assert_eq!(empirical_quantile(&[5.0], 0.3).unwrap(), 5.0);
        let v: Vec<f64> = (1..=300).map(f64::from).collect();
        assert_eq!(empirical_quantile(&v, 0.975).unwrap(), 293.0);
        assert_eq!(empirical_quantile(&v, 0.0).unwrap(), 1.0);
        assert_eq!(empirical_quantile(&v, 1.0).unwrap(), 300.0);
        assert!(empirical_quantile(&[], 0.5).is_err());
        assert!(empirical_quantile(&[1.0], 1.5).is_err());
    }

    #[test]
    fn resample_single_unit_is_identity() {
        let ds = PanelDataset::new(vec![Observation::fully_observed(
            "u1",
            GroupLabel::Treated,
            vec![1.0, 2.0],
        )
        .unwrap()])
        .unwrap();
        let rs = resample(&ds, &mut replicate_stream(1, 0));
        assert_eq!(rs.observations(), ds.observations());
    }

    #[test]
    fn resample_is_deterministic() {
        let ds = toy_dataset(5, 3, 0.2);
        let a = resample(&ds, &mut replicate_stream(9, 4));
        let b = resample(&ds, &mut replicate_stream(9, 4));
        assert_eq!(a.observations(), b.observations());
    }

    #[test]
    fn resample_multiplicities_are_uniform() {
        let mut obs = Vec::new();
        for (i, g) in GroupLabel::ALL.into_iter().enumerate() {
            obs.push(Observation::fully_observed(format!("u{i}"), g, vec![0.0, 1.0]).unwrap());
        }
        let ds = PanelDataset::new(obs).unwrap();
        let reps = 100_000u64;
        let mut counts = [0usize; 3];
        for b in 0..reps {
            let rs = resample(&ds, &mut replicate_stream(3, b));
            for o in rs.observations() {
                counts[o.unit_id()[1..].parse::<usize>().unwrap()] += 1;
            }
        }
        for c in counts {
            let avg = c as f64 / reps as f64;
            assert!((avg - 1.0).abs() < 0.02, "multiplicity {avg}");
        }
    }

    #[test]
    fn run_bootstrap_is_deterministic_and_ordered() {
        let ds = toy_dataset(8, 3, 0.4);
        let cfg = BootstrapConfig::new(50, 0.05, 11).unwrap();
        let a = run_bootstrap(&ds, 3, &cfg).unwrap();
        let b = run_bootstrap(&ds, 3, &cfg).unwrap();
        assert_eq!(a.mins, b.mins);
        assert_eq!(a.maxs, b.maxs);
        assert!(a.mins.iter().zip(&a.maxs).all(|(lo, hi)| lo <= hi));
    }

    #[test]
    fn engine_matches_materialized_resample_bitwise() {
        let ds = toy_dataset(6, 4, 0.3);
        let cfg = BootstrapConfig::new(5, 0.05, 77).unwrap();
        let sums = run_bootstrap_sums(&ds, 4, &cfg).unwrap();
        for b in 0..cfg.replicates {
            let rs = resample(&ds, &mut replicate_stream(cfg.seed, b as u64));
            let direct = bounding_sums(&rs, 4).unwrap();
            assert_eq!(sums.row(b), direct.sums(), "replicate {b}");
        }
    }

    #[test]
    fn constant_outcomes_collapse_everything() {
        let mut obs = Vec::new();
        for g in GroupLabel::ALL {
            for i in 0..4 {
                obs.push(
                    Observation::fully_observed(format!("{}{i}", g.token()), g, vec![3.5; 3])
                        .unwrap(),
                );
            }
        }
        let ds = PanelDataset::new(obs).unwrap();
        let cfg = BootstrapConfig::new(40, 0.05, 5).unwrap();
        let dist = run_bootstrap(&ds, 3, &cfg).unwrap();
        assert!(dist.mins.iter().all(|&x| x == 0.0));
        assert!(dist.maxs.iter().all(|&x| x == 0.0));

        // Degenerate bootstrap: set interval collapses onto the point
        // estimates and the parameter interval falls back to p = 1 - a/2.
        let set = ci_identified_set(&ds, 3, &cfg).unwrap();
        assert_eq!((set.lower, set.upper), (0.0, 0.0));
        let par = ci_parameter(&ds, 3, &cfg).unwrap();
        let internals = par.internals.unwrap();
        assert!(internals.rho.is_none());
        assert_eq!(internals.p_hat, 1.0 - cfg.alpha / 2.0);
    }

    #[test]
    fn parameter_interval_nests_inside_set_interval() {
        let ds = toy_dataset(12, 4, 0.8);
        let cfg = BootstrapConfig::new(200, 0.05, 123).unwrap();
        for t in 2..=4 {
            let point = bounding_sums(&ds, t).unwrap();
            let reps = run_bootstrap_sums(&ds, t, &cfg).unwrap();
            let set = set_interval(point.sums(), &reps, &cfg).unwrap();
            let par = parameter_interval(point.sums(), &reps, &cfg, ds.len()).unwrap();
            assert!(par.lower >= set.lower, "t={t}");
            assert!(par.upper <= set.upper, "t={t}");
            let p = par.internals.unwrap().p_hat;
            assert!(p >= 1.0 - cfg.alpha && p <= 1.0 - cfg.alpha / 2.0);
        }
    }

    #[test]
    fn single_sum_set_interval_is_basic_bootstrap() {
        // With one bounding parameter the set interval must agree with a
        // textbook reflected ("basic") bootstrap interval computed
        // independently.
        let theta = 1.7;
        let reps_vals: Vec<f64> = (0..101)
            .map(|i| theta + 0.03 * f64::from(i - 50) + 0.001 * f64::from(i * i % 13))
            .collect();
        let reps =
            ReplicateSums::from_rows(2, reps_vals.iter().map(|&v| vec![v]).collect()).unwrap();
        let cfg = BootstrapConfig::new(reps_vals.len(), 0.10, 0).unwrap();
        let got = set_interval(&[theta], &reps, &cfg).unwrap();

        // Independent basic-bootstrap oracle.
        let mut s = reps_vals.clone();
        s.sort_unstable_by(f64::total_cmp);
        let rank = |q: f64| s[(q * s.len() as f64).ceil().max(1.0) as usize - 1];
        let lo = 2.0 * theta - rank(1.0 - 0.05);
        let hi = 2.0 * theta - rank(0.05);
        assert_eq!((got.lower, got.upper), (lo, hi));
    }

    #[test]
    fn union_contains_point_estimates() {
        let ds = toy_dataset(10, 3, 0.6);
        let cfg = BootstrapConfig::new(150, 0.05, 2).unwrap();
        let point = bounding_sums(&ds, 3).unwrap();
        let union = ci_union(&ds, 3, &cfg).unwrap();
        assert!(union.lower <= point.lower());
        assert!(union.upper >= point.upper());
    }

    #[test]
    fn zero_width_estimate_makes_parameter_match_set() {
        // Both columns identical: the replicate min and max coincide, the
        // width estimate is zero, and the adaptive level stays at the
        // two-sided 1 - alpha/2, so both constructions agree exactly.
        let rows: Vec<Vec<f64>> = (0..80)
            .map(|i| {
                let v = 1.0 + 0.01 * f64::from(i) - 0.0004 * f64::from(i * i % 17);
                vec![v, v]
            })
            .collect();
        let reps = ReplicateSums::from_rows(2, rows).unwrap();
        let cfg = BootstrapConfig::new(80, 0.05, 0).unwrap();
        let point = [1.4, 1.4];
        let set = set_interval(&point, &reps, &cfg).unwrap();
        let par = parameter_interval(&point, &reps, &cfg, 500).unwrap();
        let internals = par.internals.unwrap();
        assert_eq!(internals.omega_plus, 0.0);
        assert_eq!(internals.p_hat, 1.0 - cfg.alpha / 2.0);
        assert_eq!((par.lower, par.upper), (set.lower, set.upper));
    }

    #[test]
    fn wide_bounds_push_level_to_one_sided() {
        // Estimated set far wider than the bootstrap spread: each side of
        // the parameter interval drops to the one-sided 1 - alpha level.
        let rows: Vec<Vec<f64>> = (0..80)
            .map(|i| {
                let noise = 0.01 * f64::from(i % 9) - 0.04;
                vec![noise, 1000.0 + noise]
            })
            .collect();
        let reps = ReplicateSums::from_rows(2, rows).unwrap();
        let cfg = BootstrapConfig::new(80, 0.05, 0).unwrap();
        let par = parameter_interval(&[0.0, 1000.0], &reps, &cfg, 500).unwrap();
        let internals = par.internals.unwrap();
        assert!(internals.omega_plus > 100.0);
        assert!((internals.p_hat - (1.0 - cfg.alpha)).abs() < 1e-9);
    }

    #[test]
    fn coinciding_sums_make_union_the_single_interval() {
        // When the bounding sums coincide (replicate columns identical),
        // the union interval degenerates to the one per-sum reflected
        // interval, which is also the set interval.
        let rows: Vec<Vec<f64>> = (0..90)
            .map(|i| {
                let v = 0.3 + 0.02 * f64::from(i) - 0.0007 * f64::from(i * i % 23);
                vec![v, v]
            })
            .collect();
        let reps = ReplicateSums::from_rows(2, rows).unwrap();
        let cfg = BootstrapConfig::new(90, 0.05, 0).unwrap();
        let point = [0.9, 0.9];
        let union = union_interval(&point, &reps, &cfg).unwrap();
        let set = set_interval(&point, &reps, &cfg).unwrap();
        assert_eq!((union.lower, union.upper), (set.lower, set.upper));
    }

    #[test]
    fn symmetric_replicates_make_percentile_match_set() {
        // Replicate min/max distributions exactly symmetric around the
        // point estimates: reflection is a no-op, so the percentile and
        // set intervals coincide (odd B makes the mirrored order
        // statistics line up exactly).
        let (min_hat, max_hat) = (2.0, 5.0);
        let rows: Vec<Vec<f64>> = (-50..=50)
            .map(|i| {
                let d = 0.01 * f64::from(i) + 0.0002 * f64::from(i).powi(3);
                vec![min_hat + d, max_hat + d]
            })
            .collect();
        let reps = ReplicateSums::from_rows(2, rows).unwrap();
        let cfg = BootstrapConfig::new(101, 0.05, 0).unwrap();
        let point = [min_hat, max_hat];
        let set = set_interval(&point, &reps, &cfg).unwrap();
        let perc = percentile_interval(&point, &reps, &cfg).unwrap();
        assert!((set.lower - perc.lower).abs() < 1e-12);
        assert!((set.upper - perc.upper).abs() < 1e-12);
    }

    #[test]
    fn sparse_dataset_aborts_with_diagnostic() {
        // Group b observed for a single unit: nearly two thirds of
        // resamples drop it entirely, and a tiny treated group makes it
        // worse. Expect completion or a Degenerate error rather than a
        // hang; with one lone b unit out of 40 the rejection rate is
        // (39/40)^40 ~ 36%, so replicates succeed after redraws.
        let mut obs = Vec::new();
        for i in 0..20 {
            obs.push(
                Observation::fully_observed(
                    format!("t{i:02}"),
                    GroupLabel::Treated,
                    vec![0.0, 1.0],
                )
                .unwrap(),
            );
            obs.push(
                Observation::fully_observed(
                    format!("a{i:02}"),
                    GroupLabel::ControlA,
                    vec![0.0, 1.0],
                )
                .unwrap(),
            );
        }
        obs.push(Observation::fully_observed("b00", GroupLabel::ControlB, vec![0.0, 1.0]).unwrap());
        let ds = PanelDataset::new(obs).unwrap();
        let cfg = BootstrapConfig::new(20, 0.05, 1).unwrap();
        let dist = run_bootstrap(&ds, 2, &cfg).unwrap();
        assert_eq!(dist.mins.len(), 20);
    }

    #[test]
    fn interval_helpers() {
        let cfg = BootstrapConfig::default();
        let iv = finish(1.0, 2.0, IntervalKind::Set, &cfg, None);
        assert!(iv.contains(1.5) && !iv.contains(2.5));
        assert!(iv.covers_interval(1.2, 1.8) && !iv.covers_interval(0.5, 1.8));
        assert_eq!(iv.length(), 1.0);
        let crossed = finish(2.0, 1.0, IntervalKind::Set, &cfg, None);
        assert!(crossed.clamped);
        assert_eq!(crossed.lower, crossed.upper);
        assert_eq!(crossed.lower, 1.5);
    }

    #[test]
    fn config_validation() {
        assert!(BootstrapConfig::new(1, 0.05, 0).is_err());
        assert!(BootstrapConfig::new(100, 0.0, 0).is_err());
        assert!(BootstrapConfig::new(100, 1.0, 0).is_err());
        assert!(BootstrapConfig::new(300, 0.05, 0)
            .unwrap()
            .quantile_resolution_ok());
        assert!(!BootstrapConfig::new(10, 0.05, 0)
            .unwrap()
            .quantile_resolution_ok());
    }
}
