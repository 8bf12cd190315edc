//! Evolve one synthetic sample, print its per-generation delta table and
//! write the heatmap and bar plot figures.
//!
//!     cargo run --release --example trace_report -- [out_dir]

use std::path::PathBuf;

use dpgda::augment::{generate, PipelineConfig};
use dpgda::datagen::{builtin, generate_domain};
use dpgda::report::{cumulative_change_barplot, delta_table, evolution_heatmap};

fn main() -> dpgda::Result<()> {
    let out = PathBuf::from(std::env::args().nth(1).unwrap_or_else(|| "trace_report".into()));
    std::fs::create_dir_all(&out).map_err(|e| dpgda::Error::InvalidConfig(e.to_string()))?;
    let (data, _) = generate_domain(&builtin("healthcare")?, 4)?;
    let class = data.minority_class().expect("non-empty data");
    let aug = generate(&data, class, 1, &PipelineConfig::default(), 4)?;
    let trace = aug.traces[0].trace();
    let names = data.feature_names();

    let table = delta_table(trace, names)?;
    print!("{}", table.to_text());
    println!("column sums {:?}", table.column_sums());
    for (file, fig) in
        [("heatmap.svg", evolution_heatmap(trace, names)?), ("changes.svg", cumulative_change_barplot(trace, names)?)]
    {
        let csv = fig.write(&out.join(file))?;
        println!("wrote {} with data in {}", out.join(file).display(), csv.display());
    }
    Ok(())
}
