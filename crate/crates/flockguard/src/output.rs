//! Result serialization: trajectory/metrics CSVs, the event log, and the
//! summary JSON, all with fixed float formatting so identical records give
//! identical bytes.

use std::path::{Path, PathBuf};

use crate::engine::SimulationRecord;
use crate::Result;

/// Paths of the four artifacts written by [`write_outputs`].
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct OutputBundle {
    pub trajectory: PathBuf,
    pub metrics: PathBuf,
    pub events: PathBuf,
    pub summary: PathBuf,
}

/// 12 significant digits, deterministic across runs and platforms.
pub fn fmt_float(x: f64) -> String {
    format!("{x:.11e}")
}

/// Write `trajectory.csv`, `metrics.csv`, `events.log`, and `summary.json`
/// into `dir` (created if absent).
pub fn write_outputs(record: &SimulationRecord, dir: impl AsRef<Path>) -> Result<OutputBundle> {
    let dir = dir.as_ref();
    std::fs::create_dir_all(dir)?;

    let trajectory = dir.join("trajectory.csv");
    {
        let mut w = csv::Writer::from_path(&trajectory)?;
        let dim = record
            .trajectory
            .first()
            .and_then(|f| f.positions.first())
            .map_or(0, |p| p.len());
        let mut header = vec!["t".to_string(), "agent_id".to_string()];
        for c in 0..dim {
            header.push(format!("x{c}"));
        }
        for c in 0..dim {
            header.push(format!("v{c}"));
        }
        for c in 0..dim {
            header.push(format!("u{c}"));
        }
        w.write_record(&header)?;
        for frame in &record.trajectory {
            for (id, ((x, v), u)) in frame
                .positions
                .iter()
                .zip(&frame.velocities)
                .zip(&frame.controls)
                .enumerate()
            {
                let mut row = vec![fmt_float(frame.time), id.to_string()];
                row.extend(x.iter().map(|&c| fmt_float(c)));
                row.extend(v.iter().map(|&c| fmt_float(c)));
                row.extend(u.iter().map(|&c| fmt_float(c)));
                w.write_record(&row)?;
            }
        }
        w.flush()?;
    }

    let metrics = dir.join("metrics.csv");
    {
        let mut w = csv::Writer::from_path(&metrics)?;
        w.write_record([
            "t",
            "H",
            "Upsilon",
            "min_dist",
            "vel_spread",
            "containment_residual",
            "estimator_residual",
            "k_hat_v",
            "k_hat_a",
            "k_hat_r",
        ])?;
        for row in &record.metrics {
            w.write_record([
                fmt_float(row.time),
                fmt_float(row.energy_h),
                fmt_float(row.energy_upsilon),
                fmt_float(row.min_distance),
                fmt_float(row.velocity_spread),
                fmt_float(row.containment_residual),
                fmt_float(row.estimator_residual),
                fmt_float(row.k_hat[0]),
                fmt_float(row.k_hat[1]),
                fmt_float(row.k_hat[2]),
            ])?;
        }
        w.flush()?;
    }

    let events = dir.join("events.log");
    {
        let mut text = String::new();
        for e in &record.events {
            text.push_str(&format!("{} {} {}\n", fmt_float(e.time), e.kind, e.payload));
        }
        std::fs::write(&events, text)?;
    }

    let summary = dir.join("summary.json");
    {
        let text = serde_json::to_string_pretty(&record.summary)
            .expect("summary serialization cannot fail");
        std::fs::write(&summary, text + "\n")?;
    }

    Ok(OutputBundle {
        trajectory,
        metrics,
        events,
        summary,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::engine;
    use crate::scenario;

    fn toy_record(steps: usize) -> SimulationRecord {
        let mut cfg = scenario::balanced_group_fixture();
        cfg.t_end = cfg.dt * steps as f64;
        cfg.record_stride = 1;
        engine::run_forced(&cfg).unwrap()
    }

    #[test]
    fn trajectory_row_count() {
        let record = toy_record(2);
        let dir = tempfile::tempdir().unwrap();
        let bundle = write_outputs(&record, dir.path()).unwrap();
        let text = std::fs::read_to_string(&bundle.trajectory).unwrap();
        // Header plus (steps + 1) * N rows.
        assert_eq!(text.lines().count(), 1 + 3 * 5);
        assert!(text.starts_with("t,agent_id,x0,x1,v0,v1,u0,u1"));
    }

    #[test]
    fn outputs_are_byte_deterministic() {
        let a = toy_record(3);
        let b = toy_record(3);
        let da = tempfile::tempdir().unwrap();
        let db = tempfile::tempdir().unwrap();
        let ba = write_outputs(&a, da.path()).unwrap();
        let bb = write_outputs(&b, db.path()).unwrap();
        for (pa, pb) in [
            (&ba.trajectory, &bb.trajectory),
            (&ba.metrics, &bb.metrics),
            (&ba.events, &bb.events),
            (&ba.summary, &bb.summary),
        ] {
            assert_eq!(std::fs::read(pa).unwrap(), std::fs::read(pb).unwrap());
        }
    }

    #[test]
    fn metrics_header_and_length() {
        let record = toy_record(4);
        let dir = tempfile::tempdir().unwrap();
        let bundle = write_outputs(&record, dir.path()).unwrap();
        let text = std::fs::read_to_string(&bundle.metrics).unwrap();
        assert!(text.starts_with(
            "t,H,Upsilon,min_dist,vel_spread,containment_residual,estimator_residual,k_hat_v,k_hat_a,k_hat_r"
        ));
        assert_eq!(text.lines().count(), 1 + record.metrics.len());
    }

    #[test]
    fn summary_is_valid_json() {
        let record = toy_record(1);
        let dir = tempfile::tempdir().unwrap();
        let bundle = write_outputs(&record, dir.path()).unwrap();
        let text = std::fs::read_to_string(&bundle.summary).unwrap();
        let v: serde_json::Value = serde_json::from_str(&text).unwrap();
        assert!(v.get("containment").is_some());
        assert!(v.get("alpha_required").is_some());
    }
}
