//! Machine-readable and human-readable report rendering.

use std::fmt::Write as _;

use serde::Serialize;

use didbracket::bootstrap::IntervalResult;
use didbracket::diagnostics::{BreakEven, FalsificationResult, TrendRow};
use didbracket::simulation::SimulationReport;

/// Version of the JSON report layout.
pub const SCHEMA_VERSION: &str = "1";

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum Format {
    Text,
    Json,
    Csv,
}

#[derive(Debug, Serialize)]
pub struct AnalyzeReport {
    pub schema_version: &'static str,
    pub command: &'static str,
    pub alpha: f64,
    pub replicates: usize,
    pub seed: u64,
    pub n_units: usize,
    pub periods: usize,
    pub horizons: Vec<HorizonReport>,
}

#[derive(Debug, Serialize)]
pub struct HorizonReport {
    pub t: usize,
    /// Point estimate of the identified set.
    pub lower: f64,
    pub upper: f64,
    pub bounding_sums: Vec<f64>,
    pub set_ci: IntervalResult,
    pub parameter_ci: IntervalResult,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub union_ci: Option<IntervalResult>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub percentile_ci: Option<IntervalResult>,
}

fn fmt_interval(iv: &IntervalResult) -> String {
    let mut s = format!("[{:.6}, {:.6}]", iv.lower, iv.upper);
    if let Some(i) = &iv.internals {
        let rho = i
            .rho
            .map(|r| format!("{r:.6}"))
            .unwrap_or_else(|| "degenerate".into());
        write!(
            s,
            "  (omega+ {:.6}, rho {rho}, p_hat {:.6})",
            i.omega_plus, i.p_hat
        )
        .unwrap();
    }
    if iv.clamped {
        s.push_str("  [clamped to midpoint]");
    }
    s
}

impl AnalyzeReport {
    pub fn render(&self, format: Format) -> String {
        match format {
            Format::Json => to_json(self),
            Format::Csv => {
                let mut out = String::from(
                    "t,kind,lower,upper,alpha,replicates,seed,omega_plus,rho,p_hat,clamped\n",
                );
                for h in &self.horizons {
                    let _ = writeln!(out, "{},point,{},{},,,,,,,", h.t, h.lower, h.upper);
                    let mut push = |iv: &IntervalResult| {
                        let (omega, rho, p) = match &iv.internals {
                            Some(i) => (
                                i.omega_plus.to_string(),
                                i.rho.map(|r| r.to_string()).unwrap_or_default(),
                                i.p_hat.to_string(),
                            ),
                            None => (String::new(), String::new(), String::new()),
                        };
                        let kind = format!("{:?}", iv.kind).to_lowercase();
                        let _ = writeln!(
                            out,
                            "{},{},{},{},{},{},{},{},{},{},{}",
                            h.t,
                            kind,
                            iv.lower,
                            iv.upper,
                            iv.alpha,
                            iv.replicates,
                            iv.seed,
                            omega,
                            rho,
                            p,
                            iv.clamped
                        );
                    };
                    push(&h.set_ci);
                    push(&h.parameter_ci);
                    if let Some(iv) = &h.union_ci {
                        push(iv);
                    }
                    if let Some(iv) = &h.percentile_ci {
                        push(iv);
                    }
                }
                out
            }
            Format::Text => {
                let mut out = format!(
                    "dataset: {} units, {} periods\nalpha {}, replicates {}, seed {}\n",
                    self.n_units, self.periods, self.alpha, self.replicates, self.seed
                );
                for h in &self.horizons {
                    let _ = write!(
                        out,
                        "\nt={}\n  point bounds   [{:.6}, {:.6}]\n  set CI         {}\n  parameter CI   {}\n",
                        h.t,
                        h.lower,
                        h.upper,
                        fmt_interval(&h.set_ci),
                        fmt_interval(&h.parameter_ci),
                    );
                    if let Some(iv) = &h.union_ci {
                        let _ = writeln!(out, "  union CI       {}", fmt_interval(iv));
                    }
                    if let Some(iv) = &h.percentile_ci {
                        let _ = writeln!(out, "  percentile CI  {}", fmt_interval(iv));
                    }
                }
                out
            }
        }
    }
}

#[derive(Debug, Serialize)]
pub struct FalsifyReport {
    pub schema_version: &'static str,
    pub command: &'static str,
    pub pair: [usize; 2],
    pub replicates: usize,
    pub seed: u64,
    pub se_method: didbracket::diagnostics::SeMethod,
    #[serde(flatten)]
    pub result: FalsificationResult,
}

impl FalsifyReport {
    pub fn render(&self, format: Format) -> String {
        let r = &self.result;
        match format {
            Format::Json => to_json(self),
            Format::Csv => format!(
                "pair_start,pair_end,p_a,p_b,p_composite,reject,alpha,stat_a,stat_b,se_a,se_b,seed\n{},{},{},{},{},{},{},{},{},{},{},{}\n",
                self.pair[0], self.pair[1], r.p_a, r.p_b, r.p_composite, r.reject,
                r.alpha, r.stat_a, r.stat_b, r.se_a, r.se_b, self.seed
            ),
            Format::Text => {
                let decision = if r.reject {
                    "reject: data inconsistent with the bracketing assumption"
                } else {
                    "do not reject: no evidence against the bracketing assumption"
                };
                format!(
                    "falsification test on pre-study pair ({}, {})\n  \
                     control a below treated: stat {:.6}, se {:.6}, p {:.4}\n  \
                     treated below control b: stat {:.6}, se {:.6}, p {:.4}\n  \
                     composite p-value {:.4} vs alpha/2 = {:.4}\n  {}\n  seed {}\n",
                    self.pair[0],
                    self.pair[1],
                    r.stat_a,
                    r.se_a,
                    r.p_a,
                    r.stat_b,
                    r.se_b,
                    r.p_b,
                    r.p_composite,
                    r.alpha / 2.0,
                    decision,
                    self.seed,
                )
            }
        }
    }
}

#[derive(Debug, Serialize)]
pub struct SensitivityReport {
    pub schema_version: &'static str,
    pub command: &'static str,
    pub t: usize,
    pub seed: u64,
    pub gammas: Vec<f64>,
    pub deltas: Vec<f64>,
    pub base: IntervalResult,
    pub shifted: IntervalResult,
    pub breakeven: BreakEven,
}

impl SensitivityReport {
    pub fn render(&self, format: Format) -> String {
        match format {
            Format::Json => to_json(self),
            Format::Csv => format!(
                "t,kind,base_lower,base_upper,shifted_lower,shifted_upper,gamma_sum,delta_sum,seed\n{},{},{},{},{},{},{},{},{}\n",
                self.t,
                format!("{:?}", self.base.kind).to_lowercase(),
                self.base.lower,
                self.base.upper,
                self.shifted.lower,
                self.shifted.upper,
                self.gammas.iter().sum::<f64>(),
                self.deltas.iter().sum::<f64>(),
                self.seed,
            ),
            Format::Text => format!(
                "sensitivity analysis at t={} ({} interval, seed {})\n  \
                 base interval     [{:.6}, {:.6}]\n  \
                 gamma = {:?}, delta = {:?}\n  \
                 shifted interval  [{:.6}, {:.6}]\n  break-even: {}\n",
                self.t,
                format!("{:?}", self.base.kind).to_lowercase(),
                self.seed,
                self.base.lower,
                self.base.upper,
                self.gammas,
                self.deltas,
                self.shifted.lower,
                self.shifted.upper,
                self.breakeven,
            ),
        }
    }
}

#[derive(Debug, Serialize)]
pub struct SimulateReport {
    pub schema_version: &'static str,
    pub command: &'static str,
    #[serde(flatten)]
    pub report: SimulationReport,
}

impl SimulateReport {
    pub fn render(&self, format: Format) -> String {
        let r = &self.report;
        match format {
            Format::Json => to_json(self),
            Format::Csv => r.to_csv(),
            Format::Text => {
                let mut out = format!(
                    "scenario {}: {} runs ({} failed), N={}, B={}, alpha={}, seed={}\n\n\
                     {:<3} {:<11} {:>10} {:>9} {:>13} {:>9}\n",
                    r.dgp,
                    r.runs_requested,
                    r.failed_runs,
                    r.n_units,
                    r.replicates,
                    r.alpha,
                    r.seed,
                    "t",
                    "method",
                    "avg_length",
                    "coverage",
                    "coverage_set",
                    "mc_se"
                );
                for c in &r.cells {
                    let _ = writeln!(
                        out,
                        "{:<3} {:<11} {:>10.4} {:>9.4} {:>13.4} {:>9.4}",
                        c.t,
                        format!("{:?}", c.method).to_lowercase(),
                        c.avg_length,
                        c.coverage,
                        c.coverage_set,
                        c.mc_se
                    );
                }
                out
            }
        }
    }
}

#[derive(Debug, Serialize)]
pub struct TrendsReport {
    pub schema_version: &'static str,
    pub command: &'static str,
    pub rows: Vec<TrendRow>,
}

impl TrendsReport {
    pub fn render(&self, format: Format) -> String {
        match format {
            Format::Json => to_json(self),
            // Trend output is a plotting table; text and CSV coincide.
            Format::Csv | Format::Text => didbracket::diagnostics::trend_csv(&self.rows),
        }
    }
}

fn to_json<T: Serialize>(value: &T) -> String {
    let mut s = serde_json::to_string_pretty(value).expect("report serialization cannot fail");
    s.push('\n');
    s
}
