//! Panel / repeated-cross-section data model.
//!
//! A dataset holds one [`Observation`] per unit: a vector of outcomes over
//! periods `1..=T`, a parallel vector of observed-indicators, and one of
//! three group labels (treated plus two control groups). Period 1 is the
//! pre-treatment period; treatment starts at period 2. Repeated
//! cross-sections are represented the same way as longitudinal data, with
//! unobserved (unit, period) slots marked unobserved.
//!
//! The on-disk format is long CSV with header `unit_id,group,time,outcome`.
//! Missing outcomes may appear either as an absent row or as the literal
//! `NA`; real exports use both.

use std::collections::BTreeMap;
use std::fmt;
use std::io::{Read, Write};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Group membership of a unit: the treated group or one of the two
/// control groups.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GroupLabel {
    Treated,
    ControlA,
    ControlB,
}

impl GroupLabel {
    pub const ALL: [GroupLabel; 3] = [
        GroupLabel::Treated,
        GroupLabel::ControlA,
        GroupLabel::ControlB,
    ];

    /// CSV token for this label.
    pub fn token(self) -> &'static str {
        match self {
            GroupLabel::Treated => "trt",
            GroupLabel::ControlA => "a",
            GroupLabel::ControlB => "b",
        }
    }

    /// Parse a CSV token (`trt`, `a`, `b`).
    pub fn parse_token(s: &str) -> Result<Self> {
        match s {
            "trt" => Ok(GroupLabel::Treated),
            "a" => Ok(GroupLabel::ControlA),
            "b" => Ok(GroupLabel::ControlB),
            other => Err(Error::Format(format!(
                "unknown group token {other:?} (expected trt, a, or b)"
            ))),
        }
    }

    /// Dense index 0..3, used for cell bookkeeping.
    pub(crate) fn index(self) -> usize {
        match self {
            GroupLabel::Treated => 0,
            GroupLabel::ControlA => 1,
            GroupLabel::ControlB => 2,
        }
    }

    /// True for the two control groups.
    pub fn is_control(self) -> bool {
        !matches!(self, GroupLabel::Treated)
    }
}

impl fmt::Display for GroupLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.token())
    }
}

/// One unit's outcome history: `T` outcome slots, `T` observed-indicators
/// and a group label. Slots with `observed = false` carry no usable value;
/// the constructor normalizes them to 0.0 so equality is semantic.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Observation {
    unit_id: String,
    group: GroupLabel,
    outcomes: Vec<f64>,
    observed: Vec<bool>,
}

impl Observation {
    pub fn new(
        unit_id: impl Into<String>,
        group: GroupLabel,
        outcomes: Vec<f64>,
        observed: Vec<bool>,
    ) -> Result<Self> {
        if outcomes.len() != observed.len() {
            return Err(Error::Argument(format!(
                "outcomes ({}) and observed ({}) lengths differ",
                outcomes.len(),
                observed.len()
            )));
        }
        if outcomes.len() < 2 {
            return Err(Error::Argument(
                "an observation needs at least 2 time periods".into(),
            ));
        }
        let mut outcomes = outcomes;
        for (y, &r) in outcomes.iter_mut().zip(&observed) {
            if !r {
                *y = 0.0;
            }
        }
        Ok(Self {
            unit_id: unit_id.into(),
            group,
            outcomes,
            observed,
        })
    }

    /// Observation with every period observed.
    pub fn fully_observed(
        unit_id: impl Into<String>,
        group: GroupLabel,
        outcomes: Vec<f64>,
    ) -> Result<Self> {
        let observed = vec![true; outcomes.len()];
        Self::new(unit_id, group, outcomes, observed)
    }

    pub fn unit_id(&self) -> &str {
        &self.unit_id
    }

    pub fn group(&self) -> GroupLabel {
        self.group
    }

    /// Number of time periods `T`.
    pub fn periods(&self) -> usize {
        self.outcomes.len()
    }

    /// Outcome at period `t` (1-based), or `None` when unobserved.
    pub fn outcome(&self, t: usize) -> Option<f64> {
        if t >= 1 && t <= self.periods() && self.observed[t - 1] {
            Some(self.outcomes[t - 1])
        } else {
            None
        }
    }

    pub fn is_observed(&self, t: usize) -> bool {
        t >= 1 && t <= self.periods() && self.observed[t - 1]
    }
}

/// An immutable collection of observations sharing the same time horizon.
///
/// Construction computes a canonical unit ordering (stable sort by
/// `unit_id`); every estimator and the resampler traverse units in that
/// order, so results do not depend on the storage order of observations.
#[derive(Debug, Clone)]
pub struct PanelDataset {
    observations: Vec<Observation>,
    periods: usize,
    canonical: Vec<u32>,
}

impl PanelDataset {
    pub fn new(observations: Vec<Observation>) -> Result<Self> {
        let Some(first) = observations.first() else {
            return Err(Error::Format("no observations".into()));
        };
        let periods = first.periods();
        if observations.iter().any(|o| o.periods() != periods) {
            return Err(Error::Format(
                "observations disagree on the number of time periods".into(),
            ));
        }
        if observations.len() > u32::MAX as usize {
            return Err(Error::Argument("dataset too large".into()));
        }
        let mut canonical: Vec<u32> = (0..observations.len() as u32).collect();
        canonical.sort_by(|&i, &j| {
            observations[i as usize]
                .unit_id
                .cmp(&observations[j as usize].unit_id)
        });
        Ok(Self {
            observations,
            periods,
            canonical,
        })
    }

    /// Number of units `N`.
    pub fn len(&self) -> usize {
        self.observations.len()
    }

    pub fn is_empty(&self) -> bool {
        self.observations.is_empty()
    }

    /// Number of time periods `T`.
    pub fn periods(&self) -> usize {
        self.periods
    }

    /// First post-treatment period. Fixed at 2: period 1 is pre-treatment,
    /// periods `2..=T` are post-treatment. Calendar re-indexing is the
    /// caller's job at ingestion.
    pub fn treatment_time(&self) -> usize {
        2
    }

    pub fn observations(&self) -> &[Observation] {
        &self.observations
    }

    /// Observations in canonical (unit-id-sorted) order.
    pub fn iter_canonical(&self) -> impl Iterator<Item = &Observation> {
        self.canonical
            .iter()
            .map(move |&i| &self.observations[i as usize])
    }

    /// The observation at canonical position `i`.
    pub(crate) fn canonical_observation(&self, i: usize) -> &Observation {
        &self.observations[self.canonical[i] as usize]
    }

    /// Load from long CSV with header `unit_id,group,time,outcome`.
    ///
    /// `group` must be one of `trt`, `a`, `b`; `time` a positive integer
    /// (`T` is inferred as the maximum); `outcome` a decimal (`.` separator)
    /// or the literal `NA`. Absent (unit, time) rows and `NA` outcomes both
    /// mark the slot unobserved. Every row is either ingested or reported
    /// as an error; none are silently dropped.
    pub fn load_long_csv(source: impl Read) -> Result<Self> {
        let mut reader = csv::ReaderBuilder::new()
            .has_headers(true)
            .trim(csv::Trim::All)
            .from_reader(source);

        {
            let headers = reader
                .headers()
                .map_err(|e| Error::Format(format!("cannot read CSV header: {e}")))?;
            let expected = ["unit_id", "group", "time", "outcome"];
            let got: Vec<&str> = headers.iter().collect();
            if got != expected {
                return Err(Error::Format(format!(
                    "expected header {expected:?}, got {got:?}"
                )));
            }
        }

        // unit -> (group, rows seen as (time, outcome-if-observed))
        let mut units: BTreeMap<String, (GroupLabel, BTreeMap<usize, Option<f64>>)> =
            BTreeMap::new();
        let mut max_time = 0usize;

        for (line, record) in reader.records().enumerate() {
            let record = record.map_err(|e| Error::Format(format!("CSV parse error: {e}")))?;
            if record.len() != 4 {
                return Err(Error::Format(format!(
                    "data row {} has {} fields, expected 4",
                    line + 2,
                    record.len()
                )));
            }
            let unit_id = record[0].to_string();
            let group = GroupLabel::parse_token(&record[1])?;
            let time: usize = record[2].parse().map_err(|_| {
                Error::Format(format!(
                    "invalid time {:?} for unit {unit_id:?}",
                    &record[2]
                ))
            })?;
            if time == 0 {
                return Err(Error::Format(format!(
                    "time must be >= 1, got 0 for unit {unit_id:?}"
                )));
            }
            let outcome = match &record[3] {
                "NA" => None,
                s => Some(s.parse::<f64>().map_err(|_| {
                    Error::Format(format!(
                        "invalid outcome {s:?} for unit {unit_id:?} at time {time}"
                    ))
                })?),
            };

            max_time = max_time.max(time);
            let entry = units
                .entry(unit_id.clone())
                .or_insert((group, BTreeMap::new()));
            if entry.0 != group {
                return Err(Error::Format(format!(
                    "unit {unit_id:?} appears with conflicting groups {} and {group}",
                    entry.0
                )));
            }
            if entry.1.insert(time, outcome).is_some() {
                return Err(Error::Format(format!(
                    "duplicate row for unit {unit_id:?} at time {time}"
                )));
            }
        }

        if units.is_empty() {
            return Err(Error::Format("no observations".into()));
        }
        if max_time < 2 {
            return Err(Error::Format(
                "need at least 2 time periods (max time seen is 1)".into(),
            ));
        }

        let mut observations = Vec::with_capacity(units.len());
        for (unit_id, (group, rows)) in units {
            let mut outcomes = vec![0.0; max_time];
            let mut observed = vec![false; max_time];
            for (time, outcome) in rows {
                if let Some(y) = outcome {
                    outcomes[time - 1] = y;
                    observed[time - 1] = true;
                }
            }
            observations.push(Observation::new(unit_id, group, outcomes, observed)?);
        }
        Self::new(observations)
    }

    /// Write long CSV, one row per (unit, period) with `NA` for unobserved
    /// slots, in canonical unit order. Outcomes are written in shortest
    /// round-trip form, so load(write(ds)) reproduces `ds` exactly.
    pub fn write_long_csv(&self, sink: impl Write) -> Result<()> {
        let csv_err = |e: csv::Error| Error::Format(format!("write error: {e}"));
        let mut writer = csv::Writer::from_writer(sink);
        writer
            .write_record(["unit_id", "group", "time", "outcome"])
            .map_err(csv_err)?;
        for obs in self.iter_canonical() {
            for t in 1..=self.periods {
                let outcome = match obs.outcome(t) {
                    Some(y) => y.to_string(),
                    None => "NA".to_string(),
                };
                writer
                    .write_record([obs.unit_id(), obs.group().token(), &t.to_string(), &outcome])
                    .map_err(csv_err)?;
            }
        }
        writer
            .flush()
            .map_err(|e| Error::Format(format!("write error: {e}")))?;
        Ok(())
    }

    /// Per-(group, time) observed counts plus structural flags.
    pub fn validate(&self) -> ValidationReport {
        let t_count = self.periods;
        let mut counts = vec![0usize; 3 * t_count];
        for obs in &self.observations {
            for t in 1..=t_count {
                if obs.is_observed(t) {
                    counts[obs.group().index() * t_count + (t - 1)] += 1;
                }
            }
        }
        let mut cells = Vec::with_capacity(3 * t_count);
        let mut flags = Vec::new();
        if t_count < 2 {
            flags.push("fewer than 2 time periods".to_string());
        }
        for group in GroupLabel::ALL {
            for t in 1..=t_count {
                let observed = counts[group.index() * t_count + (t - 1)];
                if observed == 0 {
                    flags.push(format!("group {group} unobserved at t={t}"));
                }
                cells.push(CellCount {
                    group,
                    time: t,
                    observed,
                });
            }
        }
        ValidationReport { cells, flags }
    }
}

/// Observed count for one (group, time) cell.
#[derive(Debug, Clone, Serialize)]
pub struct CellCount {
    pub group: GroupLabel,
    pub time: usize,
    pub observed: usize,
}

/// Report-only validation outcome; an imperfect dataset still loads, and
/// estimators fail later with a precise cell reference.
#[derive(Debug, Clone, Serialize)]
pub struct ValidationReport {
    pub cells: Vec<CellCount>,
    pub flags: Vec<String>,
}

impl ValidationReport {
    pub fn is_clean(&self) -> bool {
        self.flags.is_empty()
    }
}
