//! Parse an edge list, validate it, and write it back out.

use nig::{build_counterexample, parse_graph, random_graph};

fn main() -> nig::Result<()> {
    let text = "nodes 3\nedge 0 1 2\nedge 1 2 1\nedge 2 0 1\nedge 2 1 2\n";
    let raw = parse_graph(text, false)?;
    println!("raw graph: {}", raw.validate());

    let g = parse_graph(text, true)?;
    println!("normalized: {}", g.validate());
    print!("{}", g.to_edge_list());

    let ce = build_counterexample(2, 1)?;
    println!(
        "counterexample(2,1): {} nodes, {} edges",
        ce.node_count(),
        ce.edges().len()
    );

    let r = random_graph(10, 2, 42)?;
    println!("random(10,2,42) valid: {}", r.validate().is_valid());
    Ok(())
}
