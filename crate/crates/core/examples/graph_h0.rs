//! Degree-zero cohomology data of graph algebras from the bundled corpus, or
//! from a graph file given on the command line.

use std::sync::Arc;

use innercalc::graph_algebra::{
    full_isometry_criterion, h0_report, verify_full_isometry, DirectedGraph,
};
use innercalc::selftest::GRAPH_CORPUS;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let graphs: Vec<(String, String)> = match std::env::args().nth(1) {
        Some(path) => vec![(path.clone(), std::fs::read_to_string(path)?)],
        None => GRAPH_CORPUS
            .iter()
            .map(|(n, t)| (n.to_string(), t.to_string()))
            .collect(),
    };
    for (name, text) in graphs {
        let g = Arc::new(DirectedGraph::parse(&text)?);
        let r = h0_report(&g, 2);
        println!(
            "{name}: {} closed terms, projection count {:?}, {} loop(s) without exit",
            r.closed_terms.len(),
            r.projection_count,
            r.circle_flags.len()
        );
        for mu in g.paths_up_to(2).into_iter().filter(|p| !p.is_empty()) {
            if full_isometry_criterion(&g, &mu)? {
                println!(
                    "    s_mu s_mu* = p_s(mu) for {} (expansion agrees: {})",
                    mu.display(&g),
                    verify_full_isometry(&g, &mu)
                );
            }
        }
    }
    Ok(())
}
