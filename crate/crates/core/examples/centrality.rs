//! Diffusion centralities at a few horizons against the consensus weights.

use nig::{diffusion_centralities, eigenvector_weights, influence_matrix, random_graph, BatchMode};

fn main() -> nig::Result<()> {
    let g = random_graph(6, 2, 3)?;
    let gamma = influence_matrix(&g, 0.5)?;
    let c = eigenvector_weights(&gamma, 1e-12, 1_000_000)?;
    println!("consensus weights: {:.4?}", c.weights);
    println!("ranking: {:?}", c.ranking());

    for t in [1, 5, 50] {
        let table = diffusion_centralities(&gamma, t, BatchMode::Squaring, 1);
        let reach: Vec<f64> = (0..g.node_count())
            .map(|v| table.source(v).iter().sum::<f64>() / g.node_count() as f64)
            .collect();
        println!("T={t:>2} mean influence per source: {reach:.4?}");
    }
    Ok(())
}
