//! Full run over the toy dataset from a TOML config, then a second run
//! to show the artifacts are byte-identical.
//!
//!     cargo run --example run_pipeline [output-dir]

use std::path::PathBuf;

use ontoalign::fixture;
use ontoalign::pipeline::{run_pipeline, RunConfig};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let dir = std::env::args()
        .nth(1)
        .map(PathBuf::from)
        .unwrap_or_else(|| std::env::temp_dir().join("ontoalign-demo"));
    let config = fixture::write_inputs(&dir)?;
    let config_path = dir.join("run.toml");
    std::fs::write(&config_path, config.to_toml())?;
    println!("config written to {}:\n{}", config_path.display(), config.to_toml());

    let config = RunConfig::load(&config_path)?;
    let first = run_pipeline(&config)?;
    println!("counts: {:?}", first.counts);
    println!("coverage: {:?}", first.coverage);
    for a in &first.artifacts {
        println!("  {:22} {:6} bytes  {}", a.name, a.bytes, &a.sha256[..16]);
    }

    let second = run_pipeline(&config)?;
    println!("second run identical: {}", first.artifacts == second.artifacts);
    println!("serve it with: cargo run -- serve --run-dir {}", config.output_dir.display());
    Ok(())
}
