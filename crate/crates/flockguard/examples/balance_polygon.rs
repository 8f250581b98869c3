//! Force balance on the malicious agent: for every polygon size the falsified
//! control cancels exactly when the neighbors sit on a regular polygon and
//! share its velocity.

use flockguard::controllers::{desired_polygon, u_malicious};
use flockguard::potentials::BoundedPotential;
use flockguard::swarm::Vector;
use flockguard::topology::build_graph;

fn main() {
    let radius = 18.0 * std::f64::consts::SQRT_2;
    let pot = BoundedPotential::new(radius, 20000.0);
    let (k_v, k_a, k_r) = (0.8, 0.0, 450000.0);

    println!("{:>3} {:>10} {:>14}", "s", "delta_bar", "|u_malicious|");
    for s in 2..=8 {
        let delta_bar = 12.0;
        let disp = desired_polygon(s, delta_bar, 0.3).unwrap();
        let mut positions = vec![Vector::zeros(2)];
        for d in &disp {
            positions.push(-d);
        }
        let velocities = vec![Vector::from_column_slice(&[3.0, -1.0]); positions.len()];
        let graph = build_graph(&positions, radius);
        let u = u_malicious(0, &positions, &velocities, &graph, &pot, k_v, k_a, k_r).unwrap();
        println!("{s:>3} {delta_bar:>10.2} {:>14.3e}", u.norm());
    }
}
