use proptest::prelude::*;

use saag::dataset::num_batches;
use saag::estimators::saag1_direction;
use saag::{
    alpha_b, make_schedule, parse_libsvm_str, soft_threshold, split_train_test, theoretical_rate, Dataset, GradTable,
    LossKind, Objective, ProblemConstants, RateParams, Regularizer, SparseVector, Theorem,
};

fn dataset_strategy(max_n: usize, d: usize) -> impl Strategy<Value = Dataset> {
    prop::collection::vec((prop::collection::vec(-3.0f64..3.0, d), prop::bool::ANY), 1..=max_n).prop_map(move |rows| {
        let (xs, ys): (Vec<SparseVector>, Vec<f64>) = rows
            .into_iter()
            .map(|(x, y)| (SparseVector::from_dense(&x), if y { 1.0 } else { -1.0 }))
            .unzip();
        Dataset::new(xs, ys, d).unwrap()
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn schedule_partitions_every_epoch(n in 1usize..150, b_frac in 0.0f64..1.0, seed: u64, epoch in 0u64..5) {
        let b = 1 + ((n - 1) as f64 * b_frac) as usize;
        let s = make_schedule(n, b, seed).unwrap().for_epoch(epoch);
        prop_assert_eq!(s.m(), n.div_ceil(b));
        prop_assert_eq!(s.batches().len(), num_batches(n, b));
        let mut seen: Vec<usize> = s.batches().iter().flatten().copied().collect();
        prop_assert!(s.batches().iter().all(|bt| !bt.is_empty() && bt.len() <= b));
        seen.sort_unstable();
        prop_assert_eq!(seen, (0..n).collect::<Vec<_>>());
        prop_assert_eq!(s.is_uniform(), n % b == 0);
    }

    #[test]
    fn libsvm_round_trip(ds in dataset_strategy(12, 5)) {
        let back = parse_libsvm_str(&ds.to_libsvm()).unwrap();
        prop_assert_eq!(back.labels(), ds.labels());
        prop_assert_eq!(back.rows(), ds.rows());
    }

    #[test]
    fn split_cardinality(ds in dataset_strategy(30, 2), frac in 0.05f64..0.95, seed: u64) {
        prop_assume!(ds.n() >= 2);
        let (train, test) = split_train_test(&ds, frac, seed).unwrap();
        let want = ((frac * ds.n() as f64).round() as usize).clamp(1, ds.n() - 1);
        prop_assert_eq!(train.n(), want);
        prop_assert_eq!(train.n() + test.n(), ds.n());
        prop_assert_eq!((train.d(), test.d()), (ds.d(), ds.d()));
    }

    #[test]
    fn prox_satisfies_optimality(z in -10.0f64..10.0, eta in 1e-3f64..10.0, l1 in 0.0f64..5.0) {
        let p = soft_threshold(z, eta * l1);
        if p == 0.0 {
            prop_assert!(z.abs() <= eta * l1 + 1e-12);
        } else {
            let residual = (p - z) / eta + l1 * p.signum();
            prop_assert!(residual.abs() <= 1e-9 * (1.0 + z.abs() / eta));
        }
    }

    #[test]
    fn objective_is_convex(
        ds in dataset_strategy(8, 3),
        a in prop::collection::vec(-3.0f64..3.0, 3),
        b in prop::collection::vec(-3.0f64..3.0, 3),
        theta in 0.0f64..1.0,
        loss_ix in 0usize..3,
        l1 in 0.0f64..0.5,
    ) {
        let obj = Objective::new(LossKind::ALL[loss_ix], Regularizer::new(0.1, l1).unwrap(), &ds);
        let mid: Vec<f64> = a.iter().zip(&b).map(|(x, y)| theta * x + (1.0 - theta) * y).collect();
        let chord = theta * obj.value(&a) + (1.0 - theta) * obj.value(&b);
        prop_assert!(obj.value(&mid) <= chord + 1e-9 * chord.abs().max(1.0));
    }

    #[test]
    fn alpha_decreases_in_batch_size(n in 2usize..500) {
        let mut prev = alpha_b(n, 1).unwrap();
        prop_assert_eq!(prev, 1.0);
        for b in 2..=n.min(60) {
            let a = alpha_b(n, b).unwrap();
            prop_assert!(a < prev);
            prev = a;
        }
        prop_assert_eq!(alpha_b(n, n).unwrap(), 0.0);
    }

    #[test]
    fn table_aggregate_matches_slots(
        ds in dataset_strategy(20, 4),
        steps in prop::collection::vec((prop::collection::vec(-2.0f64..2.0, 4), 0u64..1000), 1..12),
        b in 1usize..5,
    ) {
        let obj = Objective::new(LossKind::Logistic, Regularizer::ridge(0.01), &ds);
        let mut table = GradTable::new(ds.n(), ds.d());
        let b = b.min(ds.n());
        for (w, seed) in &steps {
            let schedule = make_schedule(ds.n(), b, *seed).unwrap();
            saag1_direction(&mut table, &obj, w, &schedule.batches()[0]).unwrap();
            let exact = table.recompute_aggregate(&obj);
            for (x, y) in exact.iter().zip(table.aggregate()) {
                prop_assert!((x - y).abs() <= 1e-10 * (1.0 + x.abs()));
            }
        }
    }

    #[test]
    fn convex_rate_constant_decreases_in_beta(n in 20usize..5000, b_frac in 0.0f64..0.5, c in 0.1f64..5.0) {
        let b = 1 + (n as f64 * b_frac) as usize;
        let k = ProblemConstants { lipschitz: 1.0, strong_convexity: 0.0 };
        for theorem in [Theorem::SmoothConvex, Theorem::NonSmoothConvex] {
            let mut prev = f64::INFINITY;
            for beta in [6.0, 10.0, 50.0, 300.0, 5000.0] {
                let params = RateParams::for_dataset(n, b, beta, c);
                let rate = theoretical_rate(theorem, &params, &k).unwrap();
                prop_assert!(rate.c < prev);
                prev = rate.c;
            }
        }
    }
}
