//! Design diagnostics: falsification testing of the bracketing assumption
//! on a pre-study period pair, sensitivity analysis for violations of
//! bounded magnitude, and trend-table export for visual inspection.

use rand::Rng;
use rayon::prelude::*;
use serde::Serialize;
use std::fmt;

use crate::bootstrap::{normal_cdf, replicate_stream, BootstrapConfig, IntervalResult};
use crate::data::{GroupLabel, PanelDataset};
use crate::error::{Error, Result};
use crate::estimators::{BoundingEstimates, CellStats};

const MAX_ATTEMPTS_PER_REPLICATE: usize = 1000;

/// Outcome of the pre-study falsification test.
///
/// `p_a` tests whether control a's change exceeds the treated change
/// (one-sided, "a is below"); `p_b` tests whether the treated change
/// exceeds control b's ("b is above"). The composite rule rejects the
/// bracketing null when
/// `max(min(p_a, p_b), min(1 - p_a, 1 - p_b)) <= alpha / 2`,
/// covering both orderings of the control groups.
#[derive(Debug, Clone, Serialize)]
pub struct FalsificationResult {
    pub p_a: f64,
    pub p_b: f64,
    pub p_composite: f64,
    pub reject: bool,
    pub alpha: f64,
    /// Tested change statistics and their bootstrap standard errors.
    pub stat_a: f64,
    pub stat_b: f64,
    pub se_a: f64,
    pub se_b: f64,
}

/// How the falsification z-test's standard errors are estimated.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum SeMethod {
    /// Standard deviation of the statistic over nonparametric bootstrap
    /// replicates (default; one engine handles panels, repeated cross
    /// sections and missingness uniformly).
    Bootstrap,
    /// Influence-function plug-in variance. Accounts for within-unit
    /// correlation between the two periods when units are observed in
    /// both.
    Analytic,
}

/// Test the bracketing relationship on the adjacent pre-study pair
/// `(pair_end - 1, pair_end)`, which must not overlap the estimation
/// periods, using bootstrap standard errors.
///
/// One-sided z-tests: rejecting says the data are inconsistent with
/// bracketing; not rejecting is supportive but not proof.
pub fn falsification_test(
    ds: &PanelDataset,
    pair_end: usize,
    alpha: f64,
    cfg: &BootstrapConfig,
) -> Result<FalsificationResult> {
    falsification_test_with(ds, pair_end, alpha, cfg, SeMethod::Bootstrap)
}

/// [`falsification_test`] with an explicit standard-error method.
pub fn falsification_test_with(
    ds: &PanelDataset,
    pair_end: usize,
    alpha: f64,
    cfg: &BootstrapConfig,
    method: SeMethod,
) -> Result<FalsificationResult> {
    if pair_end < 2 || pair_end > ds.periods() {
        return Err(Error::Argument(format!(
            "falsification pair end {pair_end} outside 2..={}",
            ds.periods()
        )));
    }
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(Error::Argument(format!(
            "alpha must be in (0,1), got {alpha}"
        )));
    }

    let cells = CellStats::from_dataset(ds, pair_end);
    let trt = cells.change_mean(GroupLabel::Treated, pair_end)?;
    let a = cells.change_mean(GroupLabel::ControlA, pair_end)?;
    let b = cells.change_mean(GroupLabel::ControlB, pair_end)?;
    let stat_a = a - trt;
    let stat_b = trt - b;

    let (se_a, se_b) = match method {
        SeMethod::Bootstrap => {
            // Bootstrap the two statistics jointly over whole-observation
            // resamples; replicates missing a needed cell are redrawn.
            let stats: Vec<(f64, f64)> = (0..cfg.replicates as u64)
                .into_par_iter()
                .map(|replicate| replicate_pair_stats(ds, pair_end, cfg.seed, replicate))
                .collect::<Result<_>>()?;
            (
                standard_deviation(stats.iter().map(|s| s.0)),
                standard_deviation(stats.iter().map(|s| s.1)),
            )
        }
        SeMethod::Analytic => {
            let var_trt = change_mean_variance(ds, &cells, GroupLabel::Treated, pair_end);
            let var_a = change_mean_variance(ds, &cells, GroupLabel::ControlA, pair_end);
            let var_b = change_mean_variance(ds, &cells, GroupLabel::ControlB, pair_end);
            ((var_a + var_trt).sqrt(), (var_b + var_trt).sqrt())
        }
    };
    if se_a == 0.0 || se_b == 0.0 {
        return Err(Error::Degenerate(
            "standard error is zero; the falsification z-test is undefined".into(),
        ));
    }

    let p_a = 1.0 - normal_cdf(stat_a / se_a);
    let p_b = 1.0 - normal_cdf(stat_b / se_b);
    let p_composite = f64::min(p_a, p_b).max(f64::min(1.0 - p_a, 1.0 - p_b));
    Ok(FalsificationResult {
        p_a,
        p_b,
        p_composite,
        reject: p_composite <= alpha / 2.0,
        alpha,
        stat_a,
        stat_b,
        se_a,
        se_b,
    })
}

fn replicate_pair_stats(
    ds: &PanelDataset,
    pair_end: usize,
    seed: u64,
    replicate: u64,
) -> Result<(f64, f64)> {
    let n = ds.len() as u32;
    let mut stream = replicate_stream(seed, replicate);
    let mut draws = vec![0u32; ds.len()];
    for _attempt in 0..MAX_ATTEMPTS_PER_REPLICATE {
        for slot in draws.iter_mut() {
            *slot = stream.random_range(0..n);
        }
        draws.sort_unstable();
        let mut cells = CellStats::new(ds.periods());
        for &i in &draws {
            cells.add_observation(ds.canonical_observation(i as usize), pair_end);
        }
        let pair_complete = GroupLabel::ALL
            .into_iter()
            .all(|g| cells.count(g, pair_end - 1) > 0 && cells.count(g, pair_end) > 0);
        if pair_complete {
            let trt = cells.change_mean(GroupLabel::Treated, pair_end)?;
            let a = cells.change_mean(GroupLabel::ControlA, pair_end)?;
            let b = cells.change_mean(GroupLabel::ControlB, pair_end)?;
            return Ok((a - trt, trt - b));
        }
    }
    Err(Error::Degenerate(format!(
        "falsification bootstrap replicate {replicate} exceeded \
         {MAX_ATTEMPTS_PER_REPLICATE} redraws"
    )))
}

fn standard_deviation(values: impl Iterator<Item = f64> + Clone) -> f64 {
    let n = values.clone().count();
    if n < 2 {
        return 0.0;
    }
    let mean = values.clone().sum::<f64>() / n as f64;
    let ss = values.map(|v| (v - mean) * (v - mean)).sum::<f64>();
    (ss / (n - 1) as f64).sqrt()
}

/// Influence-function variance of the change mean for `group` at the pair
/// `(t-1, t)`: each unit contributes its observed deviations from the two
/// period means, scaled by the inverse cell shares, so within-unit
/// correlation across the two periods is kept.
fn change_mean_variance(ds: &PanelDataset, cells: &CellStats, group: GroupLabel, t: usize) -> f64 {
    let n = ds.len() as f64;
    let mean_cur = cells.mean(group, t).unwrap_or(0.0);
    let mean_prev = cells.mean(group, t - 1).unwrap_or(0.0);
    let w_cur = n / f64::from(cells.count(group, t).max(1));
    let w_prev = n / f64::from(cells.count(group, t - 1).max(1));
    let mut ss = 0.0;
    for obs in ds.observations() {
        if obs.group() != group {
            continue;
        }
        let cur = obs.outcome(t).map_or(0.0, |y| w_cur * (y - mean_cur));
        let prev = obs.outcome(t - 1).map_or(0.0, |y| w_prev * (y - mean_prev));
        let influence = cur - prev;
        ss += influence * influence;
    }
    ss / (n * n)
}

/// Per-period allowances for bracketing violations: `gammas[s]` lets the
/// treated change fall below both controls' changes by that much at period
/// `s + 2`, `deltas[s]` lets it exceed both by that much. All entries must
/// be nonnegative.
#[derive(Debug, Clone, Serialize)]
pub struct SensitivityParams {
    gammas: Vec<f64>,
    deltas: Vec<f64>,
}

impl SensitivityParams {
    pub fn new(gammas: Vec<f64>, deltas: Vec<f64>) -> Result<Self> {
        if gammas.is_empty() || gammas.len() != deltas.len() {
            return Err(Error::Argument(
                "gamma and delta lists must be nonempty and of equal length".into(),
            ));
        }
        if gammas.iter().chain(&deltas).any(|&x| x.is_nan() || x < 0.0) {
            return Err(Error::Argument(
                "sensitivity parameters must be nonnegative".into(),
            ));
        }
        Ok(Self { gammas, deltas })
    }

    /// All-zero allowances for periods `2..=horizon`.
    pub fn zero(horizon: usize) -> Self {
        Self {
            gammas: vec![0.0; horizon.saturating_sub(1)],
            deltas: vec![0.0; horizon.saturating_sub(1)],
        }
    }

    /// Number of covered periods (`horizon - 1`).
    pub fn len(&self) -> usize {
        self.gammas.len()
    }

    pub fn is_empty(&self) -> bool {
        self.gammas.is_empty()
    }

    pub fn gamma_sum(&self) -> f64 {
        self.gammas.iter().sum()
    }

    pub fn delta_sum(&self) -> f64 {
        self.deltas.iter().sum()
    }
}

/// Identified-set bounds widened by the sensitivity allowances:
/// `[lower - sum(deltas), upper + sum(gammas)]`.
pub fn sensitivity_bounds(
    est: &BoundingEstimates,
    params: &SensitivityParams,
) -> Result<(f64, f64)> {
    if params.len() != est.horizon() - 1 {
        return Err(Error::Argument(format!(
            "sensitivity parameters cover {} periods but horizon {} needs {}",
            params.len(),
            est.horizon(),
            est.horizon() - 1
        )));
    }
    Ok((
        est.lower() - params.delta_sum(),
        est.upper() + params.gamma_sum(),
    ))
}

/// A confidence interval shifted by the sensitivity allowances. Validity
/// carries over: moving a valid interval's ends outward by the allowed
/// violation magnitudes keeps it valid under the weakened assumption.
pub fn sensitivity_ci(base: &IntervalResult, params: &SensitivityParams) -> IntervalResult {
    IntervalResult {
        lower: base.lower - params.delta_sum(),
        upper: base.upper + params.gamma_sum(),
        kind: base.kind,
        alpha: base.alpha,
        replicates: base.replicates,
        seed: base.seed,
        internals: None,
        clamped: base.clamped,
    }
}

/// The smallest total violation that would explain away a detected effect.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(tag = "direction", rename_all = "snake_case")]
pub enum BreakEven {
    /// Interval is entirely positive; a total delta of this size drags the
    /// lower end to zero.
    ExplainPositive { delta_sum: f64 },
    /// Interval is entirely negative; a total gamma of this size lifts the
    /// upper end to zero.
    ExplainNegative { gamma_sum: f64 },
    /// Interval contains zero; no effect was detected in the first place.
    NoEffectDetected,
}

impl fmt::Display for BreakEven {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            BreakEven::ExplainPositive { delta_sum } => write!(
                f,
                "total delta allowance of {delta_sum} explains away the positive effect"
            ),
            BreakEven::ExplainNegative { gamma_sum } => write!(
                f,
                "total gamma allowance of {gamma_sum} explains away the negative effect"
            ),
            BreakEven::NoEffectDetected => f.write_str("no effect detected; break-even undefined"),
        }
    }
}

/// Break-even violation magnitudes for `base`.
pub fn breakeven(base: &IntervalResult) -> BreakEven {
    if base.lower > 0.0 && base.upper > 0.0 {
        BreakEven::ExplainPositive {
            delta_sum: base.lower,
        }
    } else if base.lower < 0.0 && base.upper < 0.0 {
        BreakEven::ExplainNegative {
            gamma_sum: -base.upper,
        }
    } else {
        BreakEven::NoEffectDetected
    }
}

/// One row of the trend table: the cell mean for a (group, period), and
/// for control groups the mean relative to the treated group at the same
/// period. Rows appear only for nonempty cells; the relative mean needs
/// the treated cell too.
#[derive(Debug, Clone, Serialize)]
pub struct TrendRow {
    pub group: GroupLabel,
    pub time: usize,
    pub mean: f64,
    pub relative_mean: Option<f64>,
}

/// Per-(group, period) means plus control-minus-treated relative means,
/// for external plotting of the bracketing geometry: between adjacent
/// periods the relative means of the two control groups should move in
/// opposite directions.
pub fn trend_export(ds: &PanelDataset) -> Vec<TrendRow> {
    let cells = CellStats::from_dataset(ds, ds.periods());
    let mut rows = Vec::new();
    for group in GroupLabel::ALL {
        for t in 1..=ds.periods() {
            let Some(mean) = cells.mean(group, t) else {
                continue;
            };
            let relative_mean = if group.is_control() {
                cells.mean(GroupLabel::Treated, t).map(|trt| mean - trt)
            } else {
                None
            };
            rows.push(TrendRow {
                group,
                time: t,
                mean,
                relative_mean,
            });
        }
    }
    rows
}

/// Render trend rows as CSV (`group,time,mean,relative_mean`; the relative
/// mean column is empty for the treated group).
pub fn trend_csv(rows: &[TrendRow]) -> String {
    let mut out = String::from("group,time,mean,relative_mean\n");
    for row in rows {
        let rel = row.relative_mean.map(|r| r.to_string()).unwrap_or_default();
        out.push_str(&format!(
            "{},{},{},{}\n",
            row.group, row.time, row.mean, rel
        ));
    }
    out
}
