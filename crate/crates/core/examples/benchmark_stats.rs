//! A reduced benchmark over three generated datasets followed by the
//! Friedman test and Nemenyi critical difference.
//!
//!     cargo run --release --example benchmark_stats

use dpgda::bench::protocol::{mean_scores, run_benchmark, BenchConfig, BenchDataset, Timing};
use dpgda::bench::stats::friedman_nemenyi;
use dpgda::datagen::{builtin, generate_domain, generate_shape, shape_rules, ShapeKind};

fn main() -> dpgda::Result<()> {
    let mut datasets = Vec::new();
    for name in ["healthcare", "fraud_detection"] {
        let (data, rules) = generate_domain(&builtin(name)?, 2)?;
        datasets.push(BenchDataset { name: name.into(), data, rules: Some(rules) });
    }
    let paw = generate_shape(ShapeKind::Paw, 600, (5, 1), 2)?;
    datasets.push(BenchDataset { name: "paw".into(), data: paw, rules: Some(shape_rules()) });

    let cfg = BenchConfig {
        methods: ["none", "dpgda", "ros", "smote", "jitter"].iter().map(|m| m.parse()).collect::<dpgda::Result<_>>()?,
        reps: 2,
        timing: Timing::Wall,
        ..BenchConfig::default()
    };
    let table = run_benchmark(&datasets, &cfg)?;
    let scores = mean_scores(&table.results);
    for (d, row) in scores.datasets.iter().zip(&scores.scores) {
        let cells: Vec<String> = scores.methods.iter().zip(row).map(|(m, s)| format!("{m}={s:.3}")).collect();
        println!("{d:<16} {}", cells.join("  "));
    }
    let summary = friedman_nemenyi(&scores.scores, &scores.methods, 0.05)?;
    println!(
        "Friedman chi2 {:.3} (p {:.3}), CD {:.3}",
        summary.friedman_statistic, summary.p_value, summary.critical_difference
    );
    for m in &summary.methods {
        println!("  {:<7} mean rank {:.2}", m.method, m.mean_rank);
    }
    Ok(())
}
