//! Point estimation.
//!
//! The building block is the per-(group, period) cell mean of observed
//! outcomes. Change means difference adjacent cell means within a group;
//! DID contrasts difference the treated group's change against one control
//! group's change; and the bounding sums accumulate, over periods
//! `2..=t`, one contrast per period for each of the `2^(t-1)` ways of
//! picking a control group per period. Their minimum and maximum estimate
//! the identified set for the cumulative treatment effect at horizon `t`.
//!
//! Cell means are computed independently per period over observed outcomes
//! (ratio form), not as means of within-unit differences; the two differ
//! under missingness. Accumulation uses compensated summation so results
//! are reproducible to the last bit across unit storage orders.

use serde::Serialize;

use crate::data::{GroupLabel, PanelDataset};
use crate::error::{Error, Result};

/// Largest accepted horizon: `2^(MAX_HORIZON - 1)` = 32768 enumerated sums.
pub const MAX_HORIZON: usize = 16;

/// Kahan–Babuska compensated accumulator.
#[derive(Debug, Clone, Copy, Default)]
pub(crate) struct KahanSum {
    sum: f64,
    carry: f64,
}

impl KahanSum {
    pub(crate) fn add(&mut self, x: f64) {
        let t = self.sum + x;
        if self.sum.abs() >= x.abs() {
            self.carry += (self.sum - t) + x;
        } else {
            self.carry += (x - t) + self.sum;
        }
        self.sum = t;
    }

    pub(crate) fn value(self) -> f64 {
        self.sum + self.carry
    }
}

/// Observed-outcome sums and counts per (group, period) cell.
///
/// Shared by the point estimators and the bootstrap engine so both follow
/// the exact same arithmetic path.
#[derive(Debug, Clone)]
pub(crate) struct CellStats {
    periods: usize,
    sums: Vec<KahanSum>,
    counts: Vec<u32>,
}

impl CellStats {
    pub(crate) fn new(periods: usize) -> Self {
        Self {
            periods,
            sums: vec![KahanSum::default(); 3 * periods],
            counts: vec![0; 3 * periods],
        }
    }

    #[inline]
    fn slot(&self, group: GroupLabel, t: usize) -> usize {
        group.index() * self.periods + (t - 1)
    }

    /// Accumulate one unit's observed outcomes over periods `1..=upto`.
    #[inline]
    pub(crate) fn add_observation(&mut self, obs: &crate::data::Observation, upto: usize) {
        let base = obs.group().index() * self.periods;
        for t in 1..=upto {
            if let Some(y) = obs.outcome(t) {
                self.sums[base + (t - 1)].add(y);
                self.counts[base + (t - 1)] += 1;
            }
        }
    }

    /// Cells over periods `1..=upto` for the dataset, traversed in
    /// canonical unit order.
    pub(crate) fn from_dataset(ds: &PanelDataset, upto: usize) -> Self {
        let mut cells = Self::new(ds.periods());
        for obs in ds.iter_canonical() {
            cells.add_observation(obs, upto);
        }
        cells
    }

    pub(crate) fn count(&self, group: GroupLabel, t: usize) -> u32 {
        self.counts[self.slot(group, t)]
    }

    /// Mean of observed outcomes in the cell, or `None` when empty.
    pub(crate) fn mean(&self, group: GroupLabel, t: usize) -> Option<f64> {
        let slot = self.slot(group, t);
        let n = self.counts[slot];
        (n > 0).then(|| self.sums[slot].value() / f64::from(n))
    }

    /// Change mean for `group` from `t-1` to `t`.
    pub(crate) fn change_mean(&self, group: GroupLabel, t: usize) -> Result<f64> {
        let cur = self.mean(group, t).ok_or_else(|| {
            Error::Estimation(format!("no observed outcomes for group {group} at t={t}"))
        })?;
        let prev = self.mean(group, t - 1).ok_or_else(|| {
            Error::Estimation(format!(
                "no observed outcomes for group {group} at t={}",
                t - 1
            ))
        })?;
        Ok(cur - prev)
    }

    /// True when every (group, period) cell over `1..=upto` is nonempty.
    pub(crate) fn complete(&self, upto: usize) -> bool {
        GroupLabel::ALL
            .into_iter()
            .all(|g| (1..=upto).all(|t| self.count(g, t) > 0))
    }
}

fn check_horizon(ds: &PanelDataset, t: usize) -> Result<()> {
    if t < 2 || t > ds.periods() {
        return Err(Error::Argument(format!(
            "horizon t={t} outside post-treatment range 2..={}",
            ds.periods()
        )));
    }
    if t > MAX_HORIZON {
        return Err(Error::Argument(format!(
            "horizon t={t} exceeds the supported maximum {MAX_HORIZON}"
        )));
    }
    Ok(())
}

/// Mean change in observed outcomes for `group` from period `t-1` to `t`,
/// with period means computed independently over observed outcomes.
pub fn group_change_mean(ds: &PanelDataset, group: GroupLabel, t: usize) -> Result<f64> {
    if t < 2 || t > ds.periods() {
        return Err(Error::Argument(format!(
            "change mean needs t in 2..={}, got {t}",
            ds.periods()
        )));
    }
    CellStats::from_dataset(ds, t).change_mean(group, t)
}

/// DID contrast at period `t` using control group `control`: the treated
/// group's change mean minus the control group's change mean.
pub fn did_contrast(ds: &PanelDataset, control: GroupLabel, t: usize) -> Result<f64> {
    if !control.is_control() {
        return Err(Error::Argument(
            "did_contrast takes a control group (a or b)".into(),
        ));
    }
    let cells = CellStats::from_dataset(ds, t);
    Ok(cells.change_mean(GroupLabel::Treated, t)? - cells.change_mean(control, t)?)
}

/// DID contrasts against both control groups for every period `2..=horizon`.
#[derive(Debug, Clone, Serialize)]
pub struct DidContrasts {
    horizon: usize,
    against_a: Vec<f64>,
    against_b: Vec<f64>,
}

impl DidContrasts {
    pub(crate) fn from_cells(cells: &CellStats, horizon: usize) -> Result<Self> {
        let mut against_a = Vec::with_capacity(horizon - 1);
        let mut against_b = Vec::with_capacity(horizon - 1);
        for s in 2..=horizon {
            let trt = cells.change_mean(GroupLabel::Treated, s)?;
            against_a.push(trt - cells.change_mean(GroupLabel::ControlA, s)?);
            against_b.push(trt - cells.change_mean(GroupLabel::ControlB, s)?);
        }
        Ok(Self {
            horizon,
            against_a,
            against_b,
        })
    }

    pub fn from_dataset(ds: &PanelDataset, horizon: usize) -> Result<Self> {
        check_horizon(ds, horizon)?;
        Self::from_cells(&CellStats::from_dataset(ds, horizon), horizon)
    }

    pub fn horizon(&self) -> usize {
        self.horizon
    }

    /// Contrast against control a at period `s` in `2..=horizon`.
    pub fn against_a(&self, s: usize) -> f64 {
        self.against_a[s - 2]
    }

    /// Contrast against control b at period `s` in `2..=horizon`.
    pub fn against_b(&self, s: usize) -> f64 {
        self.against_b[s - 2]
    }
}

/// The `2^(t-1)` candidate sums together with their minimum and maximum,
/// which estimate the identified set for the cumulative effect at `t`.
#[derive(Debug, Clone, Serialize)]
pub struct BoundingEstimates {
    horizon: usize,
    sums: Vec<f64>,
    lower: f64,
    upper: f64,
}

impl BoundingEstimates {
    /// Enumerate all control-group assignments. Sum `mask` picks, for
    /// period `s = 2 + i`, control a when bit `i` of `mask` is clear and
    /// control b when it is set.
    pub(crate) fn from_contrasts(contrasts: &DidContrasts) -> Self {
        let t = contrasts.horizon;
        let k = 1usize << (t - 1);
        let mut sums = Vec::with_capacity(k);
        let mut lower = f64::INFINITY;
        let mut upper = f64::NEG_INFINITY;
        for mask in 0..k {
            let mut total = 0.0;
            for (i, s) in (2..=t).enumerate() {
                total += if mask >> i & 1 == 0 {
                    contrasts.against_a(s)
                } else {
                    contrasts.against_b(s)
                };
            }
            lower = lower.min(total);
            upper = upper.max(total);
            sums.push(total);
        }
        Self {
            horizon: t,
            sums,
            lower,
            upper,
        }
    }

    pub fn horizon(&self) -> usize {
        self.horizon
    }

    /// All enumerated sums, indexed by assignment mask.
    pub fn sums(&self) -> &[f64] {
        &self.sums
    }

    pub fn lower(&self) -> f64 {
        self.lower
    }

    pub fn upper(&self) -> f64 {
        self.upper
    }

    pub fn width(&self) -> f64 {
        self.upper - self.lower
    }
}

/// Enumerated bounding sums at horizon `t`.
pub fn bounding_sums(ds: &PanelDataset, t: usize) -> Result<BoundingEstimates> {
    Ok(BoundingEstimates::from_contrasts(
        &DidContrasts::from_dataset(ds, t)?,
    ))
}

/// `(lower, upper)` of the estimated identified set at horizon `t`.
pub fn identified_set(ds: &PanelDataset, t: usize) -> Result<(f64, f64)> {
    let est = bounding_sums(ds, t)?;
    Ok((est.lower, est.upper))
}
