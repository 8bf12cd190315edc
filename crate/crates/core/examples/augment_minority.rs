//! Raise the minority of a generated domain to a target share and check
//! every synthetic row against the extracted class box.
//!
//!     cargo run --release --example augment_minority -- [domain] [level] [seed]

use std::time::Instant;

use dpgda::augment::{augment_dataset, PipelineConfig};
use dpgda::datagen::{builtin, generate_domain};
use dpgda::dpg::check_bounds;

fn main() -> dpgda::Result<()> {
    let args: Vec<String> = std::env::args().skip(1).collect();
    let domain = args.first().map_or("healthcare", String::as_str);
    let level: f64 = args.get(1).and_then(|s| s.parse().ok()).unwrap_or(0.5);
    let seed: u64 = args.get(2).and_then(|s| s.parse().ok()).unwrap_or(7);

    let (data, _) = generate_domain(&builtin(domain)?, seed)?;
    let minority = data.minority_class().expect("non-empty data");
    let start = Instant::now();
    let aug = augment_dataset(&data, minority, level, &PipelineConfig::default(), seed)?;
    let secs = start.elapsed().as_secs_f64();

    println!("{domain}: {:?} -> {:?} in {secs:.2}s", data.class_counts(), aug.dataset.class_counts());
    println!("surrogate holdout macro F1 {:.3}", aug.surrogate.holdout_f1);
    if let Some(note) = &aug.notice {
        println!("{note}");
    }
    let inside = aug
        .synthetic_rows()
        .iter()
        .filter(|x| check_bounds(&aug.surrogate.bounds, minority, x).map(|c| c.satisfied).unwrap_or(false))
        .count();
    println!("{inside}/{} synthetic rows inside the class box", aug.n_synthetic());
    let gens: usize = aug.traces.iter().map(|t| t.trace().len()).sum();
    if !aug.traces.is_empty() {
        println!("mean generations per query {:.1}", gens as f64 / aug.traces.len() as f64);
        println!("first sample: {:?} -> {:?}", aug.traces[0].evolution.query, aug.traces[0].evolution.accepted.x);
    }
    Ok(())
}
