//! Structural diagnostics on the bundled fixture's initial topology: the
//! leader/follower partition, the spectral condition `lambda_min(R_j) > 0`
//! per leader, and the rigidity rank of the desired geometry.

use flockguard::scenario;
use flockguard::topology;

fn main() {
    let cfg = scenario::siv_fixture();
    let positions = cfg.initial_positions();
    let graph = topology::build_graph(&positions, cfg.sensing_radius);
    let partition = topology::layer_partition(&graph, cfg.malicious_id);

    println!("malicious: {}", partition.malicious);
    println!("leaders:   {:?}", partition.leaders);
    println!("followers: {:?}", partition.followers);
    println!();

    for (leader, block) in topology::follower_groups(&graph, &partition) {
        println!(
            "leader {leader}: F(j) = {:?}, lambda_min(R_j) = {:.4}",
            block.followers, block.lambda_min
        );
    }

    let displacements = cfg
        .resolved_displacements()
        .expect("fixture pins a polygon")
        .into_iter()
        .map(|(j, d)| {
            let (a, b) = (cfg.malicious_id.min(j), cfg.malicious_id.max(j));
            // rigidity_rank keys edges with i < j; flip the displacement to match.
            let d = if a == cfg.malicious_id { d } else { -d };
            ((a, b), d)
        })
        .collect();
    let report = topology::rigidity_rank(&positions, &graph.edges(), &displacements);
    println!();
    println!(
        "rigidity rank {} (generic {}), degenerate = {}",
        report.rank, report.expected, report.degenerate
    );
}
