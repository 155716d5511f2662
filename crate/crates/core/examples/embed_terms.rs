//! IDF-weighted label embeddings, including out-of-vocabulary tokens.
//!
//!     cargo run --example embed_terms

use std::collections::HashMap;

use ontoalign::embedding::{read_embeddings, term_embedding, write_embeddings, IdfTable, WordVectorTable};
use ontoalign::similarity::co_sim;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let vectors = WordVectorTable::from_entries([
        ("tumor", vec![1.0f32, 0.0, 2.0]),
        ("region", vec![3.0, 4.0, 0.0]),
        ("tissue", vec![0.5, 1.0, 1.5]),
    ])?;
    let idf = IdfTable::new(HashMap::from([("tumor".to_string(), 2.0), ("region".to_string(), 0.5)]), 0.01)?;

    println!("default vector for unknown words: {:?}", vectors.default_vector());
    let labels = ["tumor region", "region tumor", "tumor zzqx", "tissue"];
    let embs = labels
        .iter()
        .map(|l| term_embedding(l, &vectors, &idf))
        .collect::<Result<Vec<_>, _>>()?;
    for e in &embs {
        println!("{:14} {:?}", e.label, e.vector);
    }
    println!("co_sim(tumor region, tumor zzqx) = {:.4}", co_sim(&embs[0], &embs[2])?);

    let mut bytes = Vec::new();
    write_embeddings(&embs, vectors.dimension(), &mut bytes)?;
    let (dim, back) = read_embeddings(bytes.as_slice())?;
    println!("round trip: {} embeddings of dimension {dim}, equal: {}", back.len(), back == embs);
    Ok(())
}
