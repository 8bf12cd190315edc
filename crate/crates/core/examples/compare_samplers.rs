//! Train every classifier on one domain after each oversampler and report
//! macro F1 on a common held-out split.
//!
//!     cargo run --release --example compare_samplers -- [domain] [level]

use dpgda::augment::{generate, PipelineConfig};
use dpgda::bench::classifiers::{train_classifier, ClassifierSpec};
use dpgda::bench::metrics::macro_metrics;
use dpgda::datagen::{builtin, generate_domain};
use dpgda::samplers::{required_for, SamplerSpec};
use dpgda::tabular::{stratified_split, SplitSpec};

fn main() -> dpgda::Result<()> {
    let args: Vec<String> = std::env::args().skip(1).collect();
    let domain = args.first().map_or("healthcare", String::as_str);
    let level: f64 = args.get(1).and_then(|s| s.parse().ok()).unwrap_or(0.5);

    let (data, _) = generate_domain(&builtin(domain)?, 5)?;
    let (train, test) = stratified_split(&data, &SplitSpec { seed: 5, ..SplitSpec::default() })?;
    let class = train.minority_class().expect("non-empty data");
    let m = required_for(&train, class, level)?;
    println!("{domain}: {m} synthetic rows for class {}", train.class_names()[class]);

    for method in ["none", "ros", "smote", "jitter", "dpgda"] {
        let spec: SamplerSpec = method.parse()?;
        let rows = match spec {
            SamplerSpec::None => Vec::new(),
            SamplerSpec::Dpgda => generate(&train, class, m, &PipelineConfig::default(), 9)?.synthetic_rows(),
            _ => spec.generate(&train, class, m, 9)?,
        };
        let augmented = train.with_appended(&rows, class)?;
        let scores: Vec<String> = ClassifierSpec::all()
            .iter()
            .map(|c| {
                let model = train_classifier(c, &augmented)?;
                let f1 = macro_metrics(test.labels(), &model.predict_all(&test)?, test.n_classes())?.f1;
                Ok(format!("{}={f1:.3}", c.name()))
            })
            .collect::<dpgda::Result<_>>()?;
        println!("{method:<7} {}", scores.join("  "));
    }
    Ok(())
}
