//! Property tests for the estimator identities and data-model contracts.

use proptest::prelude::*;

use didbracket::bootstrap::{empirical_quantile, run_bootstrap, union_interval, BootstrapConfig};
use didbracket::data::{GroupLabel, Observation, PanelDataset};
use didbracket::diagnostics::{sensitivity_ci, SensitivityParams};
use didbracket::estimators::{bounding_sums, did_contrast};
use didbracket::{IntervalKind, IntervalResult};

/// Per-group blocks of (outcomes, observed) with one fully observed unit
/// forced per group so every (group, period) cell is estimable.
fn arb_dataset(max_units: usize, max_t: usize) -> impl Strategy<Value = PanelDataset> {
    (2..=max_t).prop_flat_map(move |t| {
        let unit = (
            prop::collection::vec(-10.0..10.0f64, t),
            prop::collection::vec(prop::bool::weighted(0.85), t),
        );
        let anchor = prop::collection::vec(-10.0..10.0f64, t);
        let group_block = (anchor, prop::collection::vec(unit, 0..max_units));
        prop::collection::vec(group_block, 3..=3).prop_map(move |blocks| {
            let mut observations = Vec::new();
            for (g, (anchor, units)) in GroupLabel::ALL.into_iter().zip(blocks) {
                observations.push(
                    Observation::fully_observed(format!("{}_anchor", g.token()), g, anchor)
                        .unwrap(),
                );
                for (i, (ys, rs)) in units.into_iter().enumerate() {
                    observations.push(
                        Observation::new(format!("{}_{i:03}", g.token()), g, ys, rs).unwrap(),
                    );
                }
            }
            PanelDataset::new(observations).unwrap()
        })
    })
}

/// Independent closed-form bounds: sum over periods of the smaller/larger
/// contrast, plus the absolute-gap width.
fn closed_form(ds: &PanelDataset, t: usize) -> (f64, f64, f64) {
    let mut lower = 0.0;
    let mut upper = 0.0;
    let mut width = 0.0;
    for s in 2..=t {
        let a = did_contrast(ds, GroupLabel::ControlA, s).unwrap();
        let b = did_contrast(ds, GroupLabel::ControlB, s).unwrap();
        lower += a.min(b);
        upper += a.max(b);
        width += (a - b).abs();
    }
    (lower, upper, width)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(128))]

    /// Enumerated min/max over the 2^(t-1) sums equals the closed form.
    #[test]
    fn enumeration_matches_closed_form(ds in arb_dataset(6, 5)) {
        for t in 2..=ds.periods() {
            let est = bounding_sums(&ds, t).unwrap();
            let (lower, upper, width) = closed_form(&ds, t);
            prop_assert!((est.lower() - lower).abs() <= 1e-12);
            prop_assert!((est.upper() - upper).abs() <= 1e-12);
            prop_assert!((est.width() - width).abs() <= 1e-12);
            prop_assert_eq!(est.sums().len(), 1 << (t - 1));
            prop_assert!(est.lower() <= est.upper());
        }
    }

    /// Adding a constant to treated outcomes in post periods shifts every
    /// bounding sum and both bounds by exactly that constant.
    #[test]
    fn translation_equivariance(ds in arb_dataset(5, 4), c in -50.0..50.0f64) {
        let shifted = shift_treated(&ds, c);
        for t in 2..=ds.periods() {
            let base = bounding_sums(&ds, t).unwrap();
            let moved = bounding_sums(&shifted, t).unwrap();
            let tol = 1e-9 * (1.0 + c.abs());
            prop_assert!((moved.lower() - base.lower() - c).abs() <= tol);
            prop_assert!((moved.upper() - base.upper() - c).abs() <= tol);
            for (s0, s1) in base.sums().iter().zip(moved.sums()) {
                prop_assert!((s1 - s0 - c).abs() <= tol);
            }
        }
    }

    /// Swapping the two control groups' labels leaves the estimated set
    /// unchanged at t = 2.
    #[test]
    fn control_swap_leaves_set_unchanged(ds in arb_dataset(5, 3)) {
        let swapped = swap_controls(&ds);
        let base = bounding_sums(&ds, 2).unwrap();
        let other = bounding_sums(&swapped, 2).unwrap();
        prop_assert_eq!(base.lower(), other.lower());
        prop_assert_eq!(base.upper(), other.upper());
    }

    /// Long-CSV round trip reproduces the dataset exactly (canonical order).
    #[test]
    fn csv_round_trip(ds in arb_dataset(6, 5)) {
        let mut buf = Vec::new();
        ds.write_long_csv(&mut buf).unwrap();
        let back = PanelDataset::load_long_csv(&buf[..]).unwrap();
        prop_assert_eq!(back.len(), ds.len());
        prop_assert_eq!(back.periods(), ds.periods());
        let a: Vec<_> = ds.iter_canonical().cloned().collect();
        let b: Vec<_> = back.iter_canonical().cloned().collect();
        prop_assert_eq!(a, b);
    }

    /// Storage order of observations never affects results: estimates and
    /// bootstrap output are bit-identical after any permutation.
    #[test]
    fn storage_order_is_irrelevant(ds in arb_dataset(5, 4), seed in any::<u64>()) {
        let mut shuffled: Vec<Observation> = ds.observations().to_vec();
        shuffled.reverse();
        let mid = shuffled.len() / 2;
        shuffled.rotate_left(mid);
        let ds2 = PanelDataset::new(shuffled).unwrap();

        let t = ds.periods();
        let a = bounding_sums(&ds, t).unwrap();
        let b = bounding_sums(&ds2, t).unwrap();
        prop_assert_eq!(a.sums(), b.sums());

        let cfg = BootstrapConfig::new(8, 0.1, seed).unwrap();
        let da = run_bootstrap(&ds, t, &cfg).unwrap();
        let db = run_bootstrap(&ds2, t, &cfg).unwrap();
        prop_assert_eq!(da.mins, db.mins);
        prop_assert_eq!(da.maxs, db.maxs);
    }

    /// Order-statistic quantile is monotone in q and bounded by the data.
    #[test]
    fn quantile_monotone_and_bounded(
        mut values in prop::collection::vec(-1e6..1e6f64, 1..60),
        qs in prop::collection::vec(0.0..=1.0f64, 2..6),
    ) {
        let mut sorted_q = qs.clone();
        sorted_q.sort_by(f64::total_cmp);
        let picks: Vec<f64> = sorted_q
            .iter()
            .map(|&q| empirical_quantile(&values, q).unwrap())
            .collect();
        for w in picks.windows(2) {
            prop_assert!(w[0] <= w[1]);
        }
        values.sort_by(f64::total_cmp);
        for p in picks {
            prop_assert!(p >= values[0] && p <= values[values.len() - 1]);
        }
    }

    /// Sensitivity shifts compose additively.
    #[test]
    fn sensitivity_shifts_compose(
        lower in -5.0..5.0f64,
        width in 0.0..5.0f64,
        g1 in prop::collection::vec(0.0..2.0f64, 2),
        d1 in prop::collection::vec(0.0..2.0f64, 2),
        g2 in prop::collection::vec(0.0..2.0f64, 2),
        d2 in prop::collection::vec(0.0..2.0f64, 2),
    ) {
        let base = IntervalResult {
            lower,
            upper: lower + width,
            kind: IntervalKind::Set,
            alpha: 0.05,
            replicates: 300,
            seed: 0,
            internals: None,
            clamped: false,
        };
        let sp1 = SensitivityParams::new(g1.clone(), d1.clone()).unwrap();
        let sp2 = SensitivityParams::new(g2.clone(), d2.clone()).unwrap();
        let sum = SensitivityParams::new(
            g1.iter().zip(&g2).map(|(x, y)| x + y).collect(),
            d1.iter().zip(&d2).map(|(x, y)| x + y).collect(),
        )
        .unwrap();
        let stepwise = sensitivity_ci(&sensitivity_ci(&base, &sp1), &sp2);
        let direct = sensitivity_ci(&base, &sum);
        prop_assert!((stepwise.lower - direct.lower).abs() <= 1e-12);
        prop_assert!((stepwise.upper - direct.upper).abs() <= 1e-12);
        // Widening is monotone: the shifted interval contains the base.
        prop_assert!(direct.lower <= base.lower && direct.upper >= base.upper);
    }
}

fn shift_treated(ds: &PanelDataset, c: f64) -> PanelDataset {
    let observations = ds
        .observations()
        .iter()
        .map(|o| {
            let t_count = o.periods();
            let mut ys = Vec::with_capacity(t_count);
            let mut rs = Vec::with_capacity(t_count);
            for t in 1..=t_count {
                let mut y = o.outcome(t).unwrap_or(0.0);
                if o.group() == GroupLabel::Treated && t >= 2 && o.is_observed(t) {
                    y += c;
                }
                ys.push(y);
                rs.push(o.is_observed(t));
            }
            Observation::new(o.unit_id(), o.group(), ys, rs).unwrap()
        })
        .collect();
    PanelDataset::new(observations).unwrap()
}

fn swap_controls(ds: &PanelDataset) -> PanelDataset {
    let observations = ds
        .observations()
        .iter()
        .map(|o| {
            let group = match o.group() {
                GroupLabel::ControlA => GroupLabel::ControlB,
                GroupLabel::ControlB => GroupLabel::ControlA,
                g => g,
            };
            let t_count = o.periods();
            let ys = (1..=t_count).map(|t| o.outcome(t).unwrap_or(0.0)).collect();
            let rs = (1..=t_count).map(|t| o.is_observed(t)).collect();
            Observation::new(o.unit_id(), group, ys, rs).unwrap()
        })
        .collect();
    PanelDataset::new(observations).unwrap()
}

/// The union interval always contains the point bounds on seeded random
/// datasets (its per-sum reflected intervals are centered on each sum).
#[test]
fn union_interval_contains_point_estimates() {
    use didbracket::bootstrap::run_bootstrap_sums;
    use didbracket::simulation::{generate, DgpConfig};

    for seed in 0..40u64 {
        let n = 30 + (seed as usize % 4) * 25;
        let cfg = if seed % 2 == 0 {
            DgpConfig::case1(n)
        } else {
            DgpConfig::case2(n)
        };
        let ds = generate(&cfg, seed).unwrap();
        let boot = BootstrapConfig::new(60, 0.05, seed ^ 0xabcd).unwrap();
        for t in 2..=4 {
            let point = bounding_sums(&ds, t).unwrap();
            let reps = run_bootstrap_sums(&ds, t, &boot).unwrap();
            let union = union_interval(point.sums(), &reps, &boot).unwrap();
            assert!(
                union.lower <= point.lower() && union.upper >= point.upper(),
                "seed {seed} t={t}: union [{}, {}] vs point [{}, {}]",
                union.lower,
                union.upper,
                point.lower(),
                point.upper()
            );
        }
    }
}

/// A dataset missing one control group loads fine but fails estimation
/// with a cell-naming error.
#[test]
fn two_group_file_loads_then_estimation_fails() {
    let csv = "unit_id,group,time,outcome\n\
               u1,trt,1,1.0\nu1,trt,2,2.0\n\
               u2,a,1,0.0\nu2,a,2,1.0\n";
    let ds = PanelDataset::load_long_csv(csv.as_bytes()).unwrap();
    let err = bounding_sums(&ds, 2).unwrap_err();
    assert!(err.to_string().contains("group b"), "{err}");
}
