//! Convergence of the filter-based estimate `k_hat` of the falsified gains
//! during the bundled containment run.

use flockguard::engine;
use flockguard::scenario;

fn main() {
    let cfg = scenario::siv_fixture();
    let k = [cfg.malicious.k_v, cfg.malicious.k_a, cfg.malicious.k_r];
    let record = engine::run(&cfg).expect("fixture runs to completion");

    println!("true k = ({}, {}, {})", k[0], k[1], k[2]);
    println!(
        "{:>6} {:>12} {:>12} {:>12} {:>12}",
        "t", "k_hat_v", "k_hat_a", "k_hat_r", "residual"
    );
    let stride = record.metrics.len() / 10;
    for row in record.metrics.iter().step_by(stride.max(1)) {
        println!(
            "{:>6.2} {:>12.4e} {:>12.4e} {:>12.4e} {:>12.4e}",
            row.time, row.k_hat[0], row.k_hat[1], row.k_hat[2], row.estimator_residual
        );
    }

    let k_hat = record.summary.k_hat_final;
    println!();
    println!(
        "final error = ({:+.3e}, {:+.3e}, {:+.3e})",
        k_hat[0] - k[0],
        k_hat[1] - k[1],
        k_hat[2] - k[2]
    );
}
