//! What goes wrong without the hierarchical defense: a scenario violating
//! the neighbor-count assumption lets the malicious agent escape, and
//! conventional defenders never settle the containment geometry.

use flockguard::engine::{self, EventKind};
use flockguard::scenario;
use flockguard::swarm::ControlMode;

fn main() {
    // One leader cannot form a polygon; the malicious repulsion pushes it
    // out of sensing range.
    let escape = scenario::escape_fixture();
    let record = engine::run_forced(&escape).expect("forced run completes");
    let escapes: Vec<_> = record
        .events
        .iter()
        .filter(|e| e.kind == EventKind::Escape)
        .collect();
    println!("escape fixture: {} escape event(s)", escapes.len());
    for e in &escapes {
        println!("  t = {:.3}, pair {}", e.time, e.payload);
    }

    // Same 13-agent geometry as the containment fixture, but every defender
    // runs the conventional law instead of the hierarchical one.
    let mut naive = scenario::siv_fixture();
    naive.control_mode = ControlMode::NormalDefenders;
    let record = engine::run_forced(&naive).expect("forced run completes");
    let s = &record.summary;
    println!();
    println!("normal defenders: contained = {}", s.containment.contained);
    println!("  final |u_malicious| = {:.3e}", s.containment.control_residual);
    println!("  leader dist errors  = {:?}", s.containment.distance_errors);
}
