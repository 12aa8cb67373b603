use proptest::prelude::*;

use esurv::data::{split, SplitSpec, Standardizer};
use esurv::grfn::{bel_pl, combine, contour, discount};
use esurv::metrics::{kaplan_meier, stratify_median};
use esurv::transform::TimeTransform;
use esurv::{Grfn, RealInterval};

fn grfn() -> impl Strategy<Value = Grfn> {
    (-5.0..5.0f64, 0.0..4.0f64, 0.0..20.0f64).prop_map(|(mu, s2, h)| Grfn::new(mu, s2, h).unwrap())
}

fn informative() -> impl Strategy<Value = Grfn> {
    (-5.0..5.0f64, 0.0..4.0f64, 0.01..20.0f64).prop_map(|(mu, s2, h)| Grfn::new(mu, s2, h).unwrap())
}

fn interval() -> impl Strategy<Value = RealInterval> {
    prop_oneof![
        (-8.0..8.0f64, 0.0..6.0f64).prop_map(|(lo, w)| RealInterval::new(lo, lo + w).unwrap()),
        (-8.0..8.0f64).prop_map(RealInterval::at_least),
        (-8.0..8.0f64).prop_map(RealInterval::at_most),
    ]
}

fn close(a: f64, b: f64, tol: f64) -> bool {
    (a - b).abs() <= tol * (1.0 + a.abs().max(b.abs()))
}

fn same(a: &Grfn, b: &Grfn, tol: f64) -> bool {
    close(a.mu, b.mu, tol) && close(a.sigma2, b.sigma2, tol) && close(a.h, b.h, tol)
}

proptest! {
    #[test]
    fn belief_below_plausibility(g in grfn(), a in interval()) {
        let (bel, pl) = bel_pl(&g, &a);
        prop_assert!((0.0..=1.0).contains(&bel));
        prop_assert!((0.0..=1.0).contains(&pl));
        prop_assert!(bel <= pl + 1e-12);
    }

    #[test]
    fn measures_grow_with_the_interval(g in grfn(), lo in -6.0..6.0f64, w in 0.0..3.0f64, grow in 0.0..3.0f64) {
        let inner = RealInterval::new(lo, lo + w).unwrap();
        let outer = RealInterval::new(lo - grow, lo + w + grow).unwrap();
        let (bi, pi) = bel_pl(&g, &inner);
        let (bo, po) = bel_pl(&g, &outer);
        prop_assert!(bi <= bo + 1e-12);
        prop_assert!(pi <= po + 1e-12);
    }

    #[test]
    fn survival_plausibility_is_non_increasing(g in grfn(), y in -6.0..6.0f64, dy in 0.0..2.0f64) {
        let (b0, p0) = bel_pl(&g, &RealInterval::at_least(y));
        let (b1, p1) = bel_pl(&g, &RealInterval::at_least(y + dy));
        prop_assert!(p1 <= p0 + 1e-12);
        prop_assert!(b1 <= b0 + 1e-12);
    }

    #[test]
    fn contour_peaks_at_mu(g in grfn(), dy in -3.0..3.0f64) {
        let top = contour(&g, g.mu).unwrap();
        prop_assert!(close(top, 1.0 / (1.0 + g.h * g.sigma2).sqrt(), 1e-14));
        prop_assert!(contour(&g, g.mu + dy).unwrap() <= top);
    }

    #[test]
    fn combination_is_commutative(a in informative(), b in informative(), c in informative()) {
        let abc = combine(&[a, b, c], &[1.0; 3]).unwrap();
        let cab = combine(&[c, a, b], &[1.0; 3]).unwrap();
        let bca = combine(&[b, c, a], &[1.0; 3]).unwrap();
        prop_assert!(same(&abc, &cab, 1e-12) && same(&abc, &bca, 1e-12));
    }

    #[test]
    fn combination_is_associative(a in informative(), b in informative(), c in informative()) {
        let left = combine(&[combine(&[a, b], &[1.0; 2]).unwrap(), c], &[1.0; 2]).unwrap();
        let right = combine(&[a, combine(&[b, c], &[1.0; 2]).unwrap()], &[1.0; 2]).unwrap();
        let flat = combine(&[a, b, c], &[1.0; 3]).unwrap();
        prop_assert!(same(&left, &flat, 1e-12) && same(&right, &flat, 1e-12));
    }

    #[test]
    fn vacuous_element_is_neutral(a in informative(), m in -10.0..10.0f64) {
        let out = combine(&[a, Grfn::vacuous(m)], &[1.0; 2]).unwrap();
        prop_assert!(same(&out, &a, 1e-15));
    }

    #[test]
    fn discounts_compose(g in grfn(), r1 in 0.0..=1.0f64, r2 in 0.0..=1.0f64) {
        let twice = discount(&discount(&g, r1).unwrap(), r2).unwrap();
        let once = discount(&g, r1 * r2).unwrap();
        prop_assert_eq!(twice.mu, once.mu);
        prop_assert_eq!(twice.sigma2, once.sigma2);
        prop_assert!(close(twice.h, once.h, 1e-15));
    }

    #[test]
    fn split_partitions_rows(n in 5usize..400, seed in any::<u64>()) {
        let parts = split(n, &SplitSpec { fractions: [0.6, 0.2, 0.2], seed });
        prop_assume!(parts.is_ok());
        let parts = parts.unwrap();
        let mut all: Vec<usize> = parts.train.iter().chain(&parts.val).chain(&parts.test).copied().collect();
        all.sort_unstable();
        prop_assert_eq!(all, (0..n).collect::<Vec<_>>());
        prop_assert_eq!(parts.train.len(), (0.6 * n as f64).round() as usize);
        prop_assert_eq!(parts.val.len(), (0.2 * n as f64).round() as usize);
        let again = split(n, &SplitSpec { fractions: [0.6, 0.2, 0.2], seed }).unwrap();
        prop_assert_eq!(parts, again);
    }

    #[test]
    fn standardizing_round_trips(rows in prop::collection::vec(prop::collection::vec(-1e3..1e3f64, 3), 2..40)) {
        let st = Standardizer::fit(&rows).unwrap();
        for r in &rows {
            let back = st.undo(&st.apply(r));
            for (x, y) in r.iter().zip(&back) {
                prop_assert!(close(*x, *y, 1e-9));
            }
        }
        let scaled: Vec<Vec<f64>> = rows.iter().map(|r| st.apply(r)).collect();
        for j in 0..3 {
            if st.is_constant(j) {
                continue;
            }
            let mean = scaled.iter().map(|r| r[j]).sum::<f64>() / rows.len() as f64;
            prop_assert!(mean.abs() < 1e-9);
        }
    }

    #[test]
    fn median_split_is_balanced(risks in prop::collection::vec(-50.0..50.0f64, 1..200)) {
        let high = stratify_median(&risks).unwrap();
        let n_high = high.iter().filter(|h| **h).count();
        prop_assert!(n_high <= risks.len() / 2);
        for (a, ha) in risks.iter().zip(&high) {
            for (b, hb) in risks.iter().zip(&high) {
                if *ha && !*hb {
                    prop_assert!(a > b);
                }
            }
        }
    }

    #[test]
    fn kaplan_meier_is_a_survival_function(
        data in prop::collection::vec((0.1..20.0f64, any::<bool>()), 1..80)
    ) {
        let (times, events): (Vec<f64>, Vec<bool>) = data.into_iter().unzip();
        let km = kaplan_meier(&times, &events).unwrap();
        let mut prev = 1.0;
        for &s in &km.surv {
            prop_assert!((0.0..=prev).contains(&s));
            prev = s;
        }
        prop_assert!(km.times.windows(2).all(|w| w[0] < w[1]));
    }

    #[test]
    fn transform_round_trips(lambda in -3.0..3.0f64, t in 1e-3..1e3f64) {
        let tt = TimeTransform::with_lambda(lambda, 1.0);
        let y = tt.forward(t).unwrap();
        if let Ok(back) = tt.inverse(y) {
            prop_assert!(close(back, t, 1e-9));
        }
    }
}
