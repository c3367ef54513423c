use lobq::analytics::{events_for_window, hitting_laplace, prob_up_balanced, survival_duration, tail_law};
use lobq::model::{ModelParams, QueueDist};
use lobq::numerics::QuadSpec;
use lobq::{Dist, Params};
use proptest::prelude::*;

fn params() -> impl Strategy<Value = Params> {
    (0.2f64..20.0, 1.0f64..2.0).prop_map(|(l, r)| ModelParams::with_removal_rate(l, l * r, 0.01).unwrap())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn balanced_hitting_is_complementary(b in 1u32..15, a in 1u32..15) {
        let spec = QuadSpec::default();
        let up: f64 = prob_up_balanced(b, a, &spec).unwrap();
        let down: f64 = prob_up_balanced(a, b, &spec).unwrap();
        prop_assert!((0.0..=1.0).contains(&up));
        prop_assert!((up + down - 1.0).abs() < 1e-8);
    }

    #[test]
    fn more_bid_depth_means_more_up_moves(b in 1u32..12, a in 1u32..12) {
        let spec = QuadSpec::default();
        let p: f64 = prob_up_balanced(b, a, &spec).unwrap();
        let q: f64 = prob_up_balanced(b + 1, a, &spec).unwrap();
        prop_assert!(q > p);
    }

    #[test]
    fn survival_is_a_tail_function(p in params(), b in 1u32..6, a in 1u32..6, t in 0.0f64..5.0) {
        let spec = QuadSpec::default();
        let s0 = survival_duration(b, a, t, &p, &spec).unwrap();
        let s1 = survival_duration(b, a, t + 0.5, &p, &spec).unwrap();
        prop_assert!((0.0..=1.0).contains(&s0));
        prop_assert!(s1 <= s0 + 1e-12);
    }

    #[test]
    fn laplace_transform_is_a_discount(p in params(), x in 1u32..8, s in 0.01f64..5.0) {
        let v = hitting_laplace(s, x, &p).unwrap();
        let w = hitting_laplace(2.0 * s, x, &p).unwrap();
        prop_assert!(v > 0.0 && v < 1.0);
        prop_assert!(w < v);
        // independent passages through each level multiply
        let one = hitting_laplace(s, 1, &p).unwrap();
        prop_assert!((v - one.powi(x as i32)).abs() < 1e-12);
    }

    #[test]
    fn tail_prefactor_scales_with_both_queues(p in params(), b in 1u32..6, a in 1u32..6) {
        let t = tail_law(b, a, &p).unwrap();
        let unit = tail_law(1, 1, &p).unwrap();
        prop_assert!((t.prefactor - unit.prefactor * (a * b) as f64).abs() <= 1e-9 * t.prefactor);
    }

    #[test]
    fn window_index_inverts(w in 2.0f64..1e7) {
        let n: f64 = events_for_window(w).unwrap();
        prop_assert!((n * n.ln() - w).abs() < 1e-8 * w);
    }

    #[test]
    fn queue_laws_normalize_and_mirror(ws in prop::collection::btree_map((1u32..8, 1u32..8), 0.01f64..1.0, 1..10)) {
        let f: Dist = QueueDist::from_weights(ws.into_iter().map(|((b, a), w)| (b, a, w))).unwrap();
        let total: f64 = f.atoms().iter().map(|a| a.p).sum();
        prop_assert!((total - 1.0).abs() < 1e-12);
        prop_assert_eq!(f.swapped().swapped(), f.clone());
        prop_assert!((f.total_variation(&f.swapped()) - f.swapped().total_variation(&f)).abs() < 1e-15);
        let mut buf = Vec::new();
        f.write_csv(&mut buf).unwrap();
        let back = QueueDist::<f64>::read_csv(&buf[..]).unwrap();
        prop_assert!(back.total_variation(&f) < 1e-12);
    }
}

#[test]
fn single_precision_tracks_double() {
    let p64 = ModelParams::<f64>::with_removal_rate(12.0, 13.0, 0.01).unwrap();
    let p32 = ModelParams::<f32>::with_removal_rate(12.0, 13.0, 0.01).unwrap();
    let spec = QuadSpec::new(1e-6, 1e-5, 1 << 16).unwrap();
    for t in [0.05, 0.5, 2.0] {
        let a = survival_duration(4, 5, t, &p64, &spec).unwrap();
        let b = survival_duration(4, 5, t as f32, &p32, &spec).unwrap();
        assert!((a - b as f64).abs() < 1e-4, "t={t}: {a} vs {b}");
    }
}
