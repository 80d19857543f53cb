use proptest::prelude::*;
use pwcheat::{ConductivityProfile, Norm, PiecewiseFunction};

/// Raw (possibly unnormalized) step functions: repeated values and zero-width pieces allowed.
fn raw_function() -> impl Strategy<Value = PiecewiseFunction> {
    (1usize..=6)
        .prop_flat_map(|n| {
            (
                prop::collection::vec(prop::sample::select(vec![0.0, 0.1, 0.25, 0.5, 0.5, 0.7, 0.9, 1.0]), n - 1),
                prop::collection::vec(prop::sample::select(vec![-2.0, -0.5, 0.0, 1.0, 1.0, 3.0]), n),
            )
        })
        .prop_map(|(mut cuts, vals)| {
            cuts.sort_by(f64::total_cmp);
            let mut x = vec![0.0];
            x.extend(cuts);
            x.push(1.0);
            PiecewiseFunction::from_raw(x, vals)
        })
        .prop_filter_map("all pieces zero width", |r| r.ok())
}

fn off_breakpoint_points(f: &PiecewiseFunction, g: &PiecewiseFunction) -> Vec<f64> {
    (0..200)
        .map(|i| (i as f64 + 0.37) / 200.0)
        .filter(|x| f.breakpoints().iter().chain(g.breakpoints()).all(|b| (b - x).abs() > 1e-9))
        .collect()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(256))]

    #[test]
    fn normalize_is_idempotent(f in raw_function()) {
        let n = f.normalize();
        prop_assert_eq!(n.normalize(), n.clone());
        for w in n.values().windows(2) {
            prop_assert!(w[0] != w[1]);
        }
        for w in n.breakpoints().windows(2) {
            prop_assert!(w[1] > w[0]);
        }
    }

    #[test]
    fn normalize_preserves_values(f in raw_function()) {
        let n = f.normalize();
        for x in off_breakpoint_points(&f, &n) {
            prop_assert_eq!(n.eval(x).unwrap(), f.eval(x).unwrap());
        }
    }

    #[test]
    fn subtract_is_pointwise(f in raw_function(), g in raw_function()) {
        let d = f.subtract(&g);
        for x in off_breakpoint_points(&f, &g) {
            prop_assert_eq!(d.eval(x).unwrap(), f.eval(x).unwrap() - g.eval(x).unwrap());
        }
    }

    #[test]
    fn distance_is_a_metric(f in raw_function(), g in raw_function(), h in raw_function()) {
        let (f, g, h) = (f.normalize(), g.normalize(), h.normalize());
        for norm in [Norm::L1, Norm::Linf] {
            let fg = f.distance(&g, norm);
            prop_assert!(fg >= 0.0);
            prop_assert_eq!(fg, g.distance(&f, norm));
            prop_assert_eq!(f.distance(&f, norm), 0.0);
            prop_assert_eq!(fg == 0.0, f == g);
            let bound = f.distance(&h, norm) + h.distance(&g, norm);
            prop_assert!(fg <= bound * (1.0 + 1e-12) + 1e-15);
        }
    }

    #[test]
    fn profile_json_round_trip_is_bytewise(
        vals in prop::collection::vec(1e-3f64..1e3, 1..6),
        seed in any::<u64>(),
    ) {
        let n = vals.len();
        let mut x: Vec<f64> = (1..n).map(|i| ((i as f64 + (seed % 7) as f64 * 0.01) / n as f64).min(0.999)).collect();
        x.insert(0, 0.0);
        x.push(1.0);
        let p = ConductivityProfile::new(x, vals).unwrap();
        let text = p.to_json();
        let back = ConductivityProfile::from_json(&text).unwrap();
        prop_assert_eq!(&back, &p);
        prop_assert_eq!(back.to_json(), text);
    }
}

#[test]
fn reference_examples() {
    let pf = |x: &[f64], v: &[f64]| PiecewiseFunction::from_raw(x.to_vec(), v.to_vec()).unwrap();
    assert_eq!(pf(&[0.0, 0.3, 0.3, 1.0], &[1.0, 5.0, 2.0]).normalize(), pf(&[0.0, 0.3, 1.0], &[1.0, 2.0]));
    assert_eq!(
        pf(&[0.0, 0.3, 1.0], &[1.0, 2.0]).subtract(&pf(&[0.0, 0.6, 1.0], &[1.0, 2.0])),
        pf(&[0.0, 0.3, 0.6, 1.0], &[0.0, 1.0, 0.0])
    );
    assert_eq!(pf(&[0.0, 0.5, 1.0], &[1.0, 4.0]).eval(0.5).unwrap(), 4.0);
    assert_eq!(pf(&[0.0, 0.25, 1.0], &[3.0, 0.5]).eval(0.2).unwrap(), 3.0);
    assert_eq!(pf(&[0.0, 1.0], &[1.0]).distance(&pf(&[0.0, 1.0], &[3.0]), Norm::L1), 2.0);
    assert_eq!(pf(&[0.0, 0.5, 1.0], &[1.0, 1.0]).distance(&pf(&[0.0, 0.5, 1.0], &[1.0, 2.0]), Norm::L1), 0.5);
    assert!(pf(&[0.0, 1.0], &[2.0]).eval(1.5).is_err());
    assert!(PiecewiseFunction::new(vec![0.0, 0.7, 0.4, 1.0], vec![1.0, 2.0, 3.0]).is_err());
}
