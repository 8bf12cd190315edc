//! Contrast the violation rate of each baseline on the finance domain with
//! that of constraint-aware augmentation.
//!
//!     cargo run --release --example audit_violations -- [reps]

use dpgda::augment::{generate, PipelineConfig};
use dpgda::constraints::{audit_rows, mean_rate_over_runs};
use dpgda::datagen::{builtin, generate_domain};
use dpgda::samplers::SamplerSpec;
use dpgda::seed::derive;

fn main() -> dpgda::Result<()> {
    let reps: u64 = std::env::args().nth(1).and_then(|s| s.parse().ok()).unwrap_or(5);
    let (data, rules) = generate_domain(&builtin("finance")?, 11)?;
    let class = data.minority_class().expect("non-empty data");
    // the domain is balanced, so draw as many rows as the class holds
    let m = data.class_counts()[class];
    let names = data.feature_names();

    for spec in ["ros", "smote", "jitter"] {
        let spec: SamplerSpec = spec.parse()?;
        let reports = (0..reps)
            .map(|r| {
                audit_rows(names, spec.generate(&data, class, m, derive(1, &[r]))?.iter().map(Vec::as_slice), &rules)
            })
            .collect::<dpgda::Result<Vec<_>>>()?;
        println!("{spec:<8} mean violation rate {:.4}", mean_rate_over_runs(&reports)?);
    }
    let pipeline = PipelineConfig::default();
    let aug = generate(&data, class, m.min(100), &pipeline, 1)?;
    let rows = aug.synthetic_rows();
    let report = audit_rows(names, rows.iter().map(Vec::as_slice), &rules)?;
    println!("dpgda    violation rate {:.4} over {} rows", report.violation_rate, report.n_synth);
    Ok(())
}
