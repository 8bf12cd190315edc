//! Write every built-in domain and shape dataset with its rules and
//! metadata, as `gen-data --config all` does.
//!
//!     cargo run --release --example generate_domains -- [out_dir] [seed]

use std::path::PathBuf;

use dpgda::datagen::{benchmark_suite, config_hash, write_outputs, GenerationMeta};
use dpgda::tabular::imbalance_ratio;

fn main() -> dpgda::Result<()> {
    let args: Vec<String> = std::env::args().skip(1).collect();
    let out = PathBuf::from(args.first().map_or("generated", String::as_str));
    let seed: u64 = args.get(1).and_then(|s| s.parse().ok()).unwrap_or(0);

    for (name, data, rules) in benchmark_suite(seed)? {
        let meta = GenerationMeta {
            name: name.clone(),
            seed,
            config_hash: config_hash(&(&name, seed))?,
            n_samples: data.n_samples(),
            class_counts: data.class_counts(),
        };
        let path = write_outputs(&data, &rules, &meta, &out)?;
        println!(
            "{:<16} {:>5} rows  IR {:.2}  {} rules  -> {}",
            name,
            data.n_samples(),
            imbalance_ratio(&data)?,
            rules.len(),
            path.display()
        );
    }
    Ok(())
}
