//! Conventional flocking with no malicious agent: every agent runs the
//! normal law and the velocity spread decays to consensus.

use flockguard::engine;
use flockguard::scenario;

fn main() {
    let cfg = scenario::baseline_fixture();
    let record = engine::run(&cfg).expect("baseline runs to completion");

    println!("{:>6} {:>12} {:>10}", "t", "spread", "min dist");
    let stride = record.metrics.len() / 15;
    for row in record.metrics.iter().step_by(stride.max(1)) {
        println!("{:>6.2} {:>12.4e} {:>10.3}", row.time, row.velocity_spread, row.min_distance);
    }

    let s = &record.summary;
    println!();
    println!(
        "spread {:.3e} -> {:.3e}, collision_free = {}",
        s.velocity_spread_initial, s.velocity_spread_final, s.collision_free
    );
}
