//! Rank all 27 fitness weight triples over {1,2,3} on two small datasets.
//!
//!     cargo run --release --example ablation

use dpgda::bench::ablation::{ablation_grid, GRID_VALUES};
use dpgda::bench::protocol::{BenchConfig, BenchDataset};
use dpgda::datagen::{builtin, generate_domain, generate_shape, shape_rules, ShapeKind};

fn main() -> dpgda::Result<()> {
    let (data, rules) = generate_domain(&builtin("healthcare")?, 8)?;
    let clover = generate_shape(ShapeKind::Clover, 300, (5, 1), 8)?;
    let datasets = [
        BenchDataset { name: "healthcare".into(), data, rules: Some(rules) },
        BenchDataset { name: "clover".into(), data: clover, rules: Some(shape_rules()) },
    ];
    let mut base = BenchConfig { reps: 1, levels: vec![0.3], ..BenchConfig::default() };
    base.pipeline.ga.max_generations = 30;
    base.progress = false;
    for row in ablation_grid(&datasets, &base, &GRID_VALUES)? {
        println!("{:>2}  w=({}, {}, {})  mean F1 {:.4}", row.rank, row.w1, row.w2, row.w3, row.mean_f1);
    }
    Ok(())
}
