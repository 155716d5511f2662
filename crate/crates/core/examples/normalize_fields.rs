//! Normalizes raw metadata field names into a deduplicated corpus.
//!
//!     cargo run --example normalize_fields

use ontoalign::normalize::{build_corpus, normalize, write_corpus_csv, RawFieldName};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let raw = [
        "tumorRegion",
        "Tumor_Region",
        "TUMOR-REGION",
        "geoLocation (lat/lon)",
        "sample_depth_m",
        "id",
        "HTTPStatusCode",
    ];
    for r in raw {
        println!("{r:28} -> {:?}", normalize(r));
    }

    // duplicates collapse onto the first occurrence; too-short names drop out
    let corpus = build_corpus(raw.iter().map(|r| RawFieldName::with_source(*r, "demo")).collect())?;
    println!("\n{} raw names, {} corpus entries:", raw.len(), corpus.len());
    write_corpus_csv(&corpus, std::io::stdout())?;
    Ok(())
}
