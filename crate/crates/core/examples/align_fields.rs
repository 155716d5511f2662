//! Aligns the toy fields with the toy ontology terms and recommends one
//! ontology per cluster.
//!
//!     cargo run --example align_fields [threshold]

use ontoalign::align::{align, coverage_report, recommend_all, AlignParams};
use ontoalign::cluster::{dbscan, DbscanParams};
use ontoalign::distance::{build_distance_matrix, DistanceMetricId};
use ontoalign::embedding::{IdfTable, TermEmbedder, WordVectorTable};
use ontoalign::fixture;
use ontoalign::normalize::normalize;
use ontoalign::ontology::TermIndex;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let threshold: f64 = std::env::args().nth(1).map_or(Ok(0.85), |a| a.parse())?;
    let store = TermEmbedder::new(
        WordVectorTable::from_reader(fixture::vectors_txt().as_bytes())?,
        IdfTable::from_tsv(fixture::idf_tsv().as_bytes())?,
    );
    let index = TermIndex::from_tsv(fixture::terms_tsv().as_bytes())?;
    let fields: Vec<String> = fixture::FIELD_NAMES.iter().filter_map(|f| normalize(f)).collect();

    let field_embs = store.embed_all(&fields)?;
    let term_embs = store.embed_all(&index.normalized_labels())?;
    let params = AlignParams {
        threshold,
        top_k: 3,
        ..Default::default()
    };
    let map = align(&field_embs, &term_embs, &params)?;

    for (i, field) in fields.iter().enumerate() {
        let cands: Vec<String> = map
            .candidates(i)
            .iter()
            .map(|c| {
                let t = &index.terms()[c.term_ref];
                format!("{} [{}] {:.3}", t.normalized_label, t.ontology_id, c.combined)
            })
            .collect();
        println!("{field:18} {}", if cands.is_empty() { "-".into() } else { cands.join(", ") });
    }

    let d = build_distance_matrix(&fields, DistanceMetricId::JaroWinkler, None)?;
    let clusters = dbscan(&d, &DbscanParams { eps: 0.2, min_pts: 2 })?;
    let recs = recommend_all(&clusters, &map, &index);
    println!();
    for r in &recs {
        println!("cluster {} -> {} covers {:?}", r.cluster_id, r.ontology_id, r.covered_fields);
    }
    println!("{:?}", coverage_report(&clusters, &map, &index)?);
    Ok(())
}
