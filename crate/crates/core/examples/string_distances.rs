//! Raw string metrics, their normalized distances, and a stored matrix.
//!
//!     cargo run --example string_distances

use ontoalign::distance::{
    build_distance_matrix, damerau_levenshtein, jaro, jaro_winkler, levenshtein, normalized_distance,
    DistanceMatrix, DistanceMetricId,
};
use ontoalign::embedding::{IdfTable, TermEmbedder, WordVectorTable};
use ontoalign::fixture;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    println!("levenshtein(kitten, sitting)     = {}", levenshtein("kitten", "sitting"));
    println!("damerau_levenshtein(ca, ac)      = {}", damerau_levenshtein("ca", "ac"));
    println!("jaro(MARTHA, MARHTA)             = {:.4}", jaro("MARTHA", "MARHTA"));
    println!("jaro_winkler(MARTHA, MARHTA)     = {:.4}", jaro_winkler("MARTHA", "MARHTA"));

    let store = TermEmbedder::new(
        WordVectorTable::from_reader(fixture::vectors_txt().as_bytes())?,
        IdfTable::from_tsv(fixture::idf_tsv().as_bytes())?,
    );
    let (a, b) = ("tumor region", "region tumor");
    println!("\nnormalized distances for {a:?} vs {b:?}:");
    for metric in DistanceMetricId::ALL {
        println!("  {:20} {:.4}", metric.name(), normalized_distance(metric, a, b, Some(&store))?);
    }

    let names = ["tumor region", "tumour region", "tumor regions", "host age"];
    let m = build_distance_matrix(&names, DistanceMetricId::Levenshtein, None)?;
    let mut bytes = Vec::new();
    m.write_to(&mut bytes)?;
    let back = DistanceMatrix::read_from(bytes.as_slice())?;
    println!("\nlevenshtein matrix ({} bytes on disk):", bytes.len());
    for i in 0..back.len() {
        let row: Vec<String> = (0..back.len()).map(|j| format!("{:.3}", back.get(i, j))).collect();
        println!("  {:14} {}", names[i], row.join(" "));
    }
    Ok(())
}
