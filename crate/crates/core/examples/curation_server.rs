//! Runs the toy pipeline and serves the curation API over its output.
//!
//!     cargo run --example curation_server [addr]
//!
//! Then, for instance:
//!
//!     curl localhost:8080/api/clusters
//!     curl localhost:8080/api/fields/0/alignments
//!     curl -XPOST localhost:8080/api/decisions -H 'content-type: application/json' \
//!          -d '{"field_index":0,"iri":"http://example.org/ANAT/T000","ontology_id":"ANAT"}'
//!     curl localhost:8080/api/export

use std::net::SocketAddr;

use ontoalign::fixture;
use ontoalign::pipeline::run_pipeline;
use ontoalign::serve::{serve, AppState};

#[tokio::main]
async fn main() -> Result<(), Box<dyn std::error::Error>> {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    let addr: SocketAddr = std::env::args().nth(1).unwrap_or_else(|| "127.0.0.1:8080".into()).parse()?;
    let dir = std::env::temp_dir().join("ontoalign-curation-demo");
    let config = fixture::write_inputs(&dir)?;
    run_pipeline(&config)?;

    let state = AppState::open(&config.output_dir, None)?;
    serve(state, addr).await?;
    Ok(())
}
