//! Data-generating processes and the Monte Carlo coverage harness.
//!
//! Two benchmark scenarios are built in, both with four periods, group
//! shares (0.3, 0.2, 0.5), cumulative effects (0, 2, 1, 1) and unit normal
//! noise: one where all three groups share the same untreated trend (the
//! identified set is a point) and one where the treated trend coincides
//! with one control group per period (the set has positive width and the
//! true effect sits on its boundary). A third constructor builds the
//! group-level interactive-fixed-effects scenario, where a latent common
//! factor is loaded heterogeneously across groups.

use rand::Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::Serialize;

use crate::bootstrap::{
    parameter_interval, percentile_interval, set_interval, union_interval, BootstrapConfig,
    IntervalKind, IntervalResult,
};
use crate::data::{GroupLabel, Observation, PanelDataset};
use crate::error::{Error, Result};
use crate::estimators::bounding_sums;
use crate::rng::{self, derive_seed};

/// How group labels are assigned to units.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum GroupAssignment {
    /// Each unit draws its label independently from the group shares.
    IidDraw,
    /// Deterministic counts: `round(N * share)` per group via largest
    /// remainder, useful for variance-reduction experiments.
    FixedCounts,
}

/// A data-generating process: group shares, baseline means, per-group
/// untreated changes, cumulative treated effects, and noise scale.
#[derive(Debug, Clone, Serialize)]
pub struct DgpConfig {
    name: String,
    n_units: usize,
    periods: usize,
    group_shares: [f64; 3],
    baselines: [f64; 3],
    /// Untreated change means per group and period `2..=T`, indexed
    /// `[group][s - 2]` with group order (treated, a, b).
    deltas: [Vec<f64>; 3],
    /// Cumulative treatment effect per period `1..=T`; the first entry is
    /// always zero (no anticipation).
    att: Vec<f64>,
    sigma: f64,
    assignment: GroupAssignment,
    /// Probability that a (unit, period) outcome is unrecorded. Zero for
    /// the benchmark scenarios; nonzero only to exercise the missingness
    /// paths in tests.
    missing_prob: f64,
}

impl DgpConfig {
    pub fn custom(
        name: impl Into<String>,
        n_units: usize,
        group_shares: [f64; 3],
        baselines: [f64; 3],
        deltas: [Vec<f64>; 3],
        att: Vec<f64>,
        sigma: f64,
    ) -> Result<Self> {
        if n_units == 0 {
            return Err(Error::Argument("need at least one unit".into()));
        }
        let periods = att.len();
        if periods < 2 {
            return Err(Error::Argument("need at least 2 periods".into()));
        }
        if att[0] != 0.0 {
            return Err(Error::Argument(
                "the period-1 treatment effect must be zero".into(),
            ));
        }
        if group_shares.iter().any(|&p| p.is_nan() || p <= 0.0) {
            return Err(Error::Argument("group shares must be positive".into()));
        }
        if (group_shares.iter().sum::<f64>() - 1.0).abs() > 1e-12 {
            return Err(Error::Argument("group shares must sum to 1".into()));
        }
        if deltas.iter().any(|d| d.len() != periods - 1) {
            return Err(Error::Argument(format!(
                "each group needs {} change means (periods 2..={})",
                periods - 1,
                periods
            )));
        }
        if sigma.is_nan() || sigma < 0.0 {
            return Err(Error::Argument("sigma must be nonnegative".into()));
        }
        Ok(Self {
            name: name.into(),
            n_units,
            periods,
            group_shares,
            baselines,
            deltas,
            att,
            sigma,
            assignment: GroupAssignment::IidDraw,
            missing_prob: 0.0,
        })
    }

    /// Benchmark scenario with identical untreated trends in all groups:
    /// the identified set is the point `ATT_t` at every horizon.
    pub fn case1(n_units: usize) -> Self {
        let shared = vec![1.0, -2.0, -1.0];
        Self::custom(
            "case1",
            n_units,
            [0.3, 0.2, 0.5],
            [3.0, 10.0, 4.0],
            [shared.clone(), shared.clone(), shared],
            vec![0.0, 2.0, 1.0, 1.0],
            1.0,
        )
        .expect("built-in scenario is valid")
    }

    /// Benchmark scenario with partially parallel trends: per period the
    /// treated trend coincides with one control group, so the true effect
    /// lies on the boundary of a positive-width identified set.
    pub fn case2(n_units: usize) -> Self {
        Self::custom(
            "case2",
            n_units,
            [0.3, 0.2, 0.5],
            [3.0, 10.0, 4.0],
            [
                vec![1.0, -4.0, 1.0],
                vec![1.0, -1.0, 1.0],
                vec![2.0, -4.0, 1.0],
            ],
            vec![0.0, 2.0, 1.0, 1.0],
            1.0,
        )
        .expect("built-in scenario is valid")
    }

    /// Group-level interactive fixed effects: untreated group means
    /// `alpha_t + eta_g + lambda_g * factor_t`. Bracketing holds whenever
    /// the treated loading lies between the control loadings.
    #[allow(clippy::too_many_arguments)]
    pub fn interactive_fixed_effects(
        n_units: usize,
        alphas: Vec<f64>,
        etas: [f64; 3],
        lambdas: [f64; 3],
        factors: Vec<f64>,
        att: Vec<f64>,
        group_shares: [f64; 3],
        sigma: f64,
    ) -> Result<Self> {
        let periods = att.len();
        if alphas.len() != periods || factors.len() != periods {
            return Err(Error::Argument(
                "alphas, factors and att must all cover the same periods".into(),
            ));
        }
        let baselines = [
            alphas[0] + etas[0] + lambdas[0] * factors[0],
            alphas[0] + etas[1] + lambdas[1] * factors[0],
            alphas[0] + etas[2] + lambdas[2] * factors[0],
        ];
        let delta = |g: usize| -> Vec<f64> {
            (1..periods)
                .map(|s| alphas[s] - alphas[s - 1] + lambdas[g] * (factors[s] - factors[s - 1]))
                .collect()
        };
        Self::custom(
            "ife",
            n_units,
            group_shares,
            baselines,
            [delta(0), delta(1), delta(2)],
            att,
            sigma,
        )
    }

    pub fn with_assignment(mut self, assignment: GroupAssignment) -> Self {
        self.assignment = assignment;
        self
    }

    pub fn with_sigma(mut self, sigma: f64) -> Self {
        self.sigma = sigma;
        self
    }

    pub fn with_n_units(mut self, n_units: usize) -> Self {
        self.n_units = n_units;
        self
    }

    pub fn with_missing_prob(mut self, missing_prob: f64) -> Self {
        self.missing_prob = missing_prob.clamp(0.0, 1.0);
        self
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn n_units(&self) -> usize {
        self.n_units
    }

    pub fn periods(&self) -> usize {
        self.periods
    }

    /// Population untreated mean for `group` at period `t`.
    pub fn mean_untreated(&self, group: GroupLabel, t: usize) -> f64 {
        let g = group.index();
        let mut mean = self.baselines[g];
        for s in 2..=t {
            mean += self.deltas[g][s - 2];
        }
        mean
    }

    /// True cumulative treatment effect at period `t`.
    pub fn true_att(&self, t: usize) -> f64 {
        self.att[t - 1]
    }

    /// Population DID contrast against `control` at period `s`.
    fn population_contrast(&self, control: GroupLabel, s: usize) -> f64 {
        self.att[s - 1] - self.att[s - 2] + self.deltas[0][s - 2]
            - self.deltas[control.index()][s - 2]
    }
}

/// Draw a dataset from the process. All randomness comes from the stream
/// for `seed`, consumed in a fixed unit-major order.
pub fn generate(cfg: &DgpConfig, seed: u64) -> Result<PanelDataset> {
    let mut stream = rng::stream(seed, 0);
    let labels = match cfg.assignment {
        GroupAssignment::IidDraw => (0..cfg.n_units)
            .map(|_| {
                let u: f64 = stream.random();
                if u < cfg.group_shares[0] {
                    GroupLabel::Treated
                } else if u < cfg.group_shares[0] + cfg.group_shares[1] {
                    GroupLabel::ControlA
                } else {
                    GroupLabel::ControlB
                }
            })
            .collect::<Vec<_>>(),
        GroupAssignment::FixedCounts => fixed_count_labels(cfg.n_units, cfg.group_shares),
    };

    let digits = cfg.n_units.to_string().len();
    let mut observations = Vec::with_capacity(cfg.n_units);
    for (i, &group) in labels.iter().enumerate() {
        let mut outcomes = Vec::with_capacity(cfg.periods);
        let mut observed = Vec::with_capacity(cfg.periods);
        for t in 1..=cfg.periods {
            let mut mean = cfg.mean_untreated(group, t);
            if group == GroupLabel::Treated {
                mean += cfg.att[t - 1];
            }
            let noise: f64 = stream.sample(StandardNormal);
            outcomes.push(mean + cfg.sigma * noise);
            let seen = cfg.missing_prob == 0.0 || stream.random::<f64>() >= cfg.missing_prob;
            observed.push(seen);
        }
        observations.push(Observation::new(
            format!("u{i:0digits$}"),
            group,
            outcomes,
            observed,
        )?);
    }
    PanelDataset::new(observations)
}

/// Largest-remainder allocation of `n` units to the three groups, labels
/// in group-block order.
fn fixed_count_labels(n: usize, shares: [f64; 3]) -> Vec<GroupLabel> {
    let raw: Vec<f64> = shares.iter().map(|p| p * n as f64).collect();
    let mut counts: Vec<usize> = raw.iter().map(|&x| x.floor() as usize).collect();
    let mut order: Vec<usize> = (0..3).collect();
    order.sort_by(|&i, &j| {
        let fi = raw[i] - raw[i].floor();
        let fj = raw[j] - raw[j].floor();
        fj.partial_cmp(&fi).unwrap().then(i.cmp(&j))
    });
    let mut remaining = n - counts.iter().sum::<usize>();
    for &g in order.iter().cycle() {
        if remaining == 0 {
            break;
        }
        counts[g] += 1;
        remaining -= 1;
    }
    let mut labels = Vec::with_capacity(n);
    for (g, &c) in GroupLabel::ALL.iter().zip(&counts) {
        labels.extend(std::iter::repeat_n(*g, c));
    }
    labels
}

/// Population identified set at horizon `t`: sum over periods of the
/// smaller/larger population contrast.
pub fn true_identified_set(cfg: &DgpConfig, t: usize) -> Result<(f64, f64)> {
    if t < 2 || t > cfg.periods {
        return Err(Error::Argument(format!(
            "horizon t={t} outside post-treatment range 2..={}",
            cfg.periods
        )));
    }
    let mut lower = 0.0;
    let mut upper = 0.0;
    for s in 2..=t {
        let ca = cfg.population_contrast(GroupLabel::ControlA, s);
        let cb = cfg.population_contrast(GroupLabel::ControlB, s);
        lower += ca.min(cb);
        upper += ca.max(cb);
    }
    Ok((lower, upper))
}

/// One method's aggregate performance at one horizon.
#[derive(Debug, Clone, Serialize)]
pub struct MethodCell {
    pub method: IntervalKind,
    pub t: usize,
    pub avg_length: f64,
    /// Share of runs whose interval contains the true effect. This is the
    /// benchmark-comparable coverage for every method.
    pub coverage: f64,
    /// Share of runs whose interval contains the whole identified set.
    pub coverage_set: f64,
    /// Monte Carlo standard error of `coverage`.
    pub mc_se: f64,
    pub runs: usize,
}

/// Aggregated Monte Carlo results: one cell per (horizon, method).
#[derive(Debug, Clone, Serialize)]
pub struct SimulationReport {
    pub dgp: String,
    pub n_units: usize,
    pub periods: usize,
    pub runs_requested: usize,
    pub completed_runs: usize,
    pub failed_runs: usize,
    pub replicates: usize,
    pub alpha: f64,
    pub seed: u64,
    pub cells: Vec<MethodCell>,
}

impl SimulationReport {
    pub fn cell(&self, method: IntervalKind, t: usize) -> Option<&MethodCell> {
        self.cells.iter().find(|c| c.method == method && c.t == t)
    }

    /// CSV rendering, one `(t, method)` row per line.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("dgp,t,method,avg_length,coverage,coverage_set,mc_se,runs\n");
        for c in &self.cells {
            let method = match c.method {
                IntervalKind::Set => "set",
                IntervalKind::Parameter => "parameter",
                IntervalKind::Percentile => "percentile",
                IntervalKind::Union => "union",
            };
            out.push_str(&format!(
                "{},{},{},{},{},{},{},{}\n",
                self.dgp, c.t, method, c.avg_length, c.coverage, c.coverage_set, c.mc_se, c.runs
            ));
        }
        out
    }
}

const METHODS: [IntervalKind; 4] = [
    IntervalKind::Set,
    IntervalKind::Parameter,
    IntervalKind::Union,
    IntervalKind::Percentile,
];

struct RunRecord {
    /// Per (horizon index, method index): (length, covers_att, covers_set).
    entries: Vec<(f64, bool, bool)>,
}

/// Run the full coverage study: `runs` independent datasets, each analyzed
/// with all four interval constructions at every horizon `2..=T`.
///
/// Per-run seeds derive from `boot.seed`; runs execute in parallel and the
/// report is identical no matter how many threads are used. Runs whose
/// estimation fails are counted in `failed_runs` and excluded from the
/// aggregates.
pub fn monte_carlo(
    cfg: &DgpConfig,
    runs: usize,
    boot: &BootstrapConfig,
) -> Result<SimulationReport> {
    if runs == 0 {
        return Err(Error::Argument("need at least one simulation run".into()));
    }
    let horizons: Vec<usize> = (2..=cfg.periods).collect();
    let truth: Vec<(f64, (f64, f64))> = horizons
        .iter()
        .map(|&t| Ok((cfg.true_att(t), true_identified_set(cfg, t)?)))
        .collect::<Result<_>>()?;

    let results: Vec<Result<RunRecord>> = (0..runs as u64)
        .into_par_iter()
        .map(|run| single_run(cfg, boot, run, &horizons, &truth))
        .collect();

    let mut completed = 0usize;
    let mut sums = vec![(0.0f64, 0usize, 0usize); horizons.len() * METHODS.len()];
    for record in results.into_iter().flatten() {
        completed += 1;
        for (slot, &(length, att_in, set_in)) in sums.iter_mut().zip(&record.entries) {
            slot.0 += length;
            slot.1 += usize::from(att_in);
            slot.2 += usize::from(set_in);
        }
    }
    if completed == 0 {
        return Err(Error::Degenerate(
            "every simulation run failed estimation".into(),
        ));
    }

    let mut cells = Vec::with_capacity(sums.len());
    for (hi, &t) in horizons.iter().enumerate() {
        for (mi, &method) in METHODS.iter().enumerate() {
            let (length_sum, att_hits, set_hits) = sums[hi * METHODS.len() + mi];
            let coverage = att_hits as f64 / completed as f64;
            cells.push(MethodCell {
                method,
                t,
                avg_length: length_sum / completed as f64,
                coverage,
                coverage_set: set_hits as f64 / completed as f64,
                mc_se: (coverage * (1.0 - coverage) / completed as f64).sqrt(),
                runs: completed,
            });
        }
    }

    Ok(SimulationReport {
        dgp: cfg.name.clone(),
        n_units: cfg.n_units,
        periods: cfg.periods,
        runs_requested: runs,
        completed_runs: completed,
        failed_runs: runs - completed,
        replicates: boot.replicates,
        alpha: boot.alpha,
        seed: boot.seed,
        cells,
    })
}

fn single_run(
    cfg: &DgpConfig,
    boot: &BootstrapConfig,
    run: u64,
    horizons: &[usize],
    truth: &[(f64, (f64, f64))],
) -> Result<RunRecord> {
    let data_seed = derive_seed(boot.seed, 2 * run);
    let boot_seed = derive_seed(boot.seed, 2 * run + 1);
    let run_boot = BootstrapConfig {
        replicates: boot.replicates,
        alpha: boot.alpha,
        seed: boot_seed,
    };
    let ds = generate(cfg, data_seed)?;

    let mut entries = Vec::with_capacity(horizons.len() * METHODS.len());
    for (hi, &t) in horizons.iter().enumerate() {
        let point = bounding_sums(&ds, t)?;
        let reps = crate::bootstrap::run_bootstrap_sums(&ds, t, &run_boot)?;
        let (att, (set_lo, set_hi)) = truth[hi];
        let mut push = |iv: IntervalResult| {
            entries.push((
                iv.length(),
                iv.contains(att),
                iv.covers_interval(set_lo, set_hi),
            ));
        };
        push(set_interval(point.sums(), &reps, &run_boot)?);
        push(parameter_interval(
            point.sums(),
            &reps,
            &run_boot,
            ds.len(),
        )?);
        push(union_interval(point.sums(), &reps, &run_boot)?);
        push(percentile_interval(point.sums(), &reps, &run_boot)?);
    }
    Ok(RunRecord { entries })
}
