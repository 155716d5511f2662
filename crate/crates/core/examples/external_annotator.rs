//! Annotates the toy fields with an external annotator and compares its
//! coverage with the internal alignment.
//!
//!     cargo run --example external_annotator
//!     cargo run --example external_annotator -- https://data.bioontology.org/annotator API_KEY
//!
//! Without arguments a local stand-in answers every request that mentions
//! "tumor".

use axum::extract::Query;
use axum::routing::get;
use axum::Router;
use std::collections::HashMap;

use ontoalign::align::AlignmentReport;
use ontoalign::external::{compare, AnnotatorClient, AnnotatorConfig};
use ontoalign::fixture;
use ontoalign::pipeline::{run_pipeline, ALIGNMENTS_FILE};

async fn stand_in(Query(q): Query<HashMap<String, String>>) -> String {
    let text = q.get("text").map(String::as_str).unwrap_or("");
    if !text.contains("tumor") {
        return "[]".into();
    }
    serde_json::json!([{
        "annotatedClass": {
            "@id": "http://purl.obolibrary.org/obo/NCIT_C3262",
            "prefLabel": "Neoplasm",
            "links": {"ontology": "http://data.bioontology.org/ontologies/NCIT"}
        }
    }])
    .to_string()
}

#[tokio::main]
async fn main() -> Result<(), Box<dyn std::error::Error>> {
    let mut args = std::env::args().skip(1);
    let config = match args.next() {
        Some(endpoint) => {
            let mut c = AnnotatorConfig::new(endpoint);
            c.api_key = args.next();
            c
        }
        None => {
            let listener = tokio::net::TcpListener::bind("127.0.0.1:0").await?;
            let addr = listener.local_addr()?;
            tokio::spawn(async move { axum::serve(listener, Router::new().route("/annotator", get(stand_in))).await });
            AnnotatorConfig::new(format!("http://{addr}/annotator"))
        }
    };

    let dir = std::env::temp_dir().join("ontoalign-external-demo");
    let run = fixture::write_inputs(&dir)?;
    run_pipeline(&run)?;
    let internal = AlignmentReport::from_json(&std::fs::read_to_string(run.output_dir.join(ALIGNMENTS_FILE))?)?;
    let texts: Vec<String> = internal.fields.iter().map(|f| f.normalized.clone()).collect();

    let external = AnnotatorClient::new(config)?.annotate(&texts).await;
    for r in &external {
        let found: Vec<&str> = r.candidates().iter().map(|c| c.iri.as_str()).collect();
        println!("{:18} {}", r.text, if r.is_error() { format!("{:?}", r.outcome) } else { format!("{found:?}") });
    }
    println!("\n{}", serde_json::to_string_pretty(&compare(&internal, &external))?);
    Ok(())
}
