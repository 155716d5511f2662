//! Extracts labelled terms from an N-Triples dump.
//!
//!     cargo run --example ingest_ntriples [path.nt] [ONTOLOGY_ID]

use std::path::PathBuf;

use ontoalign::ontology::{extract_labels_ntriples, parse_ntriples_line, ParseMode};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let mut args = std::env::args().skip(1);
    let path = args
        .next()
        .map(PathBuf::from)
        .unwrap_or_else(|| PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures/labels.nt"));
    let ontology_id = args.next().unwrap_or_else(|| "DEMO".into());

    let line = r#"<http://example.org/T1> <http://www.w3.org/2000/01/rdf-schema#label> "café culture"@en ."#;
    println!("one line: {:?}\n", parse_ntriples_line(line)?);

    let ex = extract_labels_ntriples(&path, &ontology_id, ParseMode::Lenient)?;
    println!(
        "{}: {} lines, {} triples, {} label triples, {} skipped",
        path.display(),
        ex.stats.lines,
        ex.stats.triples,
        ex.stats.label_triples,
        ex.stats.skipped_lines
    );
    for (line, message) in ex.stats.errors.iter().take(5) {
        println!("  line {line}: {message}");
    }
    println!();
    ex.index.write_tsv(std::io::stdout())?;

    if let Err(e) = extract_labels_ntriples(&path, &ontology_id, ParseMode::Strict) {
        println!("\nstrict mode: {e}");
    }
    Ok(())
}
