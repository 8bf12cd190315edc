use proptest::prelude::*;

use dpgda::predicate::quantize;
use dpgda::samplers::{required_synthetic, ros, smote};
use dpgda::seed::rng;
use dpgda::tabular::{read_csv, write_csv_to, Dataset, LabelColumn};

fn dataset(rows: Vec<Vec<f64>>, labels: Vec<usize>) -> Dataset {
    let d = rows[0].len();
    Dataset::new(rows, labels, (0..d).map(|j| format!("x{j}")).collect(), vec!["a".into(), "b".into()]).unwrap()
}

fn table() -> impl Strategy<Value = (Vec<Vec<f64>>, Vec<usize>)> {
    (1usize..4, 4usize..20).prop_flat_map(|(d, n)| {
        (prop::collection::vec(prop::collection::vec(-1e6f64..1e6, d), n), prop::collection::vec(0usize..2, n))
    })
}

proptest! {
    #[test]
    fn quantize_is_idempotent(v in -1e9f64..1e9, decimals in 0u32..6) {
        let q = quantize(v, decimals);
        prop_assert_eq!(quantize(q, decimals).to_bits(), q.to_bits());
    }

    #[test]
    fn required_count_is_minimal(n_class in 1usize..500, n_other in 1usize..500, pct in 1u32..99) {
        let level = f64::from(pct) / 100.0;
        let m = required_synthetic(n_class, n_other, level).unwrap();
        let share = |m: usize| (n_class + m) as f64 / (n_class + m + n_other) as f64;
        prop_assert!(share(m) >= level - 1e-12);
        if m > 0 {
            prop_assert!(share(m - 1) < level);
        }
    }

    #[test]
    fn csv_round_trip_is_bit_exact((rows, labels) in table()) {
        let ds = dataset(rows, labels);
        let mut buf = Vec::new();
        write_csv_to(&ds, &mut buf).unwrap();
        let back = read_csv(buf.as_slice(), &LabelColumn::Last).unwrap();
        let bits = |d: &Dataset| d.rows().flat_map(|r| r.iter().map(|v| v.to_bits())).collect::<Vec<_>>();
        prop_assert_eq!(bits(&back), bits(&ds));
        let names = |d: &Dataset| d.labels().iter().map(|&l| d.class_names()[l].clone()).collect::<Vec<_>>();
        prop_assert_eq!(names(&back), names(&ds));
    }

    #[test]
    fn baselines_stay_in_the_class_hull((rows, mut labels) in table(), m in 1usize..30, seed in any::<u64>()) {
        labels[0] = 1;
        labels[1] = 1;
        let ds = dataset(rows, labels);
        let members: Vec<&[f64]> = ds.indices_of(1).into_iter().map(|i| ds.row(i)).collect();
        let copies = ros(&ds, 1, m, &mut rng(seed)).unwrap();
        prop_assert!(copies.iter().all(|x| members.iter().any(|r| r == &x.as_slice())));
        // interpolation keeps every coordinate between the class extremes
        for x in smote(&ds, 1, m, 5, &mut rng(seed)).unwrap() {
            for (j, v) in x.iter().enumerate() {
                let lo = members.iter().map(|r| r[j]).fold(f64::INFINITY, f64::min);
                let hi = members.iter().map(|r| r[j]).fold(f64::NEG_INFINITY, f64::max);
                prop_assert!(lo <= *v && *v <= hi);
            }
        }
    }
}
