//! Train the forest surrogate on a domain and print each class box next to
//! the authored domain rules.
//!
//!     cargo run --release --example extract_constraints -- [domain] [seed]

use dpgda::augment::{fit_surrogate, PipelineConfig};
use dpgda::datagen::{builtin, generate_domain};

fn main() -> dpgda::Result<()> {
    let args: Vec<String> = std::env::args().skip(1).collect();
    let domain = args.first().map_or("fraud_detection", String::as_str);
    let seed: u64 = args.get(1).and_then(|s| s.parse().ok()).unwrap_or(3);

    let (data, rules) = generate_domain(&builtin(domain)?, seed)?;
    let sur = fit_surrogate(&data, &PipelineConfig::default(), seed)?;
    println!("{domain}: {} predicates, holdout macro F1 {:.3}", sur.dpg.predicate_nodes.len(), sur.holdout_f1);
    for (c, class) in data.class_names().iter().enumerate() {
        println!("class {class} ({} paths)", sur.dpg.class_paths.get(&c).copied().unwrap_or(0));
        for (f, iv) in sur.bounds.box_for(c)?.iter().enumerate() {
            println!("  {:<22} [{}, {}]", data.feature_names()[f], iv.lower, iv.upper);
        }
    }
    println!("domain rules:");
    for r in &rules {
        println!("  {:<22} [{:?}, {:?}]", r.feature, r.lower, r.upper);
    }
    Ok(())
}
