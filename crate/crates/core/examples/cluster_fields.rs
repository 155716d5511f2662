//! Clusters the toy corpus with each of the three algorithms.
//!
//!     cargo run --example cluster_fields

use ontoalign::cluster::{self, cluster_stats, AffinityParams, ClusterParams, DbscanParams, HdbscanParams};
use ontoalign::distance::{build_distance_matrix, DistanceMetricId};
use ontoalign::fixture;
use ontoalign::normalize::normalize;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let names: Vec<String> = fixture::FIELD_NAMES.iter().filter_map(|f| normalize(f)).collect();
    let d = build_distance_matrix(&names, DistanceMetricId::JaroWinkler, None)?;

    let runs = [
        ClusterParams::AffinityPropagation(AffinityParams::default()),
        ClusterParams::Dbscan(DbscanParams { eps: 0.2, min_pts: 2 }),
        ClusterParams::Hdbscan(HdbscanParams {
            min_cluster_size: 2,
            min_samples: 1,
        }),
    ];
    for params in runs {
        let cs = cluster::run(&d, &params)?;
        let stats = cluster_stats(&cs)?;
        println!(
            "== {} ({} clusters, {} noise, converged: {})",
            params.algorithm().name(),
            stats.num_clusters,
            cs.noise().len(),
            cs.converged()
        );
        for (id, members) in cs.clusters().iter().enumerate() {
            let labels: Vec<&str> = members.iter().map(|&m| names[m].as_str()).collect();
            let exemplar = cs.exemplars().map(|e| format!(" exemplar {:?}", names[e[id]])).unwrap_or_default();
            println!("  {id}:{exemplar} {labels:?}");
        }
        let noise: Vec<&str> = cs.noise().iter().map(|&m| names[m].as_str()).collect();
        println!("  noise: {noise:?}");
    }
    Ok(())
}
