//! trace.csv and JSON artifacts.
//!
//! Trace columns: `t,j,mode,attitude_err,bias_err,phi,q,l0,jump`. Floats are
//! written with 17 significant digits so they read back bit-exact; `jump`
//! is 0 or 1.

use std::fmt::Write as _;
use std::path::Path;

use hybrid_attitude::sim::Summary;
use hybrid_attitude::{Mode, TraceRecord};
use serde::{Deserialize, Serialize};

use crate::Failure;

pub const TRACE_HEADER: [&str; 9] = ["t", "j", "mode", "attitude_err", "bias_err", "phi", "q", "l0", "jump"];

fn float(x: f64) -> String {
    format!("{x:.16e}")
}

fn io_fault(path: &Path, e: impl std::fmt::Display) -> Failure {
    Failure::fault("io", format!("{}: {e}", path.display()))
}

pub fn write_trace(path: &Path, records: &[TraceRecord]) -> Result<(), Failure> {
    let mut w = csv::Writer::from_path(path).map_err(|e| io_fault(path, e))?;
    w.write_record(TRACE_HEADER).map_err(|e| io_fault(path, e))?;
    for r in records {
        w.write_record([
            float(r.t),
            r.j.to_string(),
            r.mode.name().to_string(),
            float(r.attitude_err),
            float(r.bias_err),
            float(r.phi),
            r.q.to_string(),
            float(r.l0),
            u8::from(r.jump).to_string(),
        ])
        .map_err(|e| io_fault(path, e))?;
    }
    w.flush().map_err(|e| io_fault(path, e))
}

/// One trace row as read back from disk.
#[derive(Debug, Clone, PartialEq, Deserialize)]
pub struct TraceRow {
    pub t: f64,
    pub j: u64,
    pub mode: Mode,
    pub attitude_err: f64,
    pub bias_err: f64,
    pub phi: f64,
    pub q: usize,
    pub l0: f64,
    pub jump: u8,
}

pub fn read_trace(path: &Path) -> Result<Vec<TraceRow>, Failure> {
    let mut r =
        csv::Reader::from_path(path).map_err(|e| Failure::validation("io", format!("{}: {e}", path.display())))?;
    let header: Vec<String> =
        r.headers().map_err(|e| Failure::validation("trace_parse", e))?.iter().map(str::to_string).collect();
    if header != TRACE_HEADER {
        return Err(Failure::validation("trace_parse", format!("unexpected columns {header:?}")));
    }
    r.deserialize()
        .collect::<Result<Vec<TraceRow>, _>>()
        .map_err(|e| Failure::validation("trace_parse", format!("{}: {e}", path.display())))
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<(), Failure> {
    let text = serde_json::to_string_pretty(value).expect("artifact serializes");
    std::fs::write(path, text + "\n").map_err(|e| io_fault(path, e))
}

/// Human-readable digest printed after a run.
pub fn summary_lines(s: &Summary) -> String {
    let mut out = format!("{}: dt = {}, t_end = {}\n", s.scenario, s.dt, s.t_end);
    for m in &s.modes {
        let settle = m.settling_time.map_or("never".to_string(), |t| format!("{t:.3} s"));
        let _ = writeln!(
            out,
            "  {:<10} settling {settle:>10}  jumps {:>2}  final |R~|^2 {:.2e}  final bias err {:.2e}",
            m.mode.name(),
            m.jumps,
            m.final_attitude_err,
            m.final_bias_err
        );
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn floats_round_trip() {
        for x in [0.1, 1.0 / 3.0, 2.2250738585072014e-308, 12345.678901234567, -7.5e-17] {
            assert_eq!(float(x).parse::<f64>().unwrap(), x);
        }
    }

    #[test]
    fn trace_round_trip() {
        let dir = std::env::temp_dir().join(format!("hyatt-output-{}", std::process::id()));
        std::fs::create_dir_all(&dir).unwrap();
        let path = dir.join("trace.csv");
        let rec = TraceRecord {
            t: 0.1,
            j: 2,
            mode: Mode::HybridIV,
            attitude_err: 1.0 / 3.0,
            bias_err: 1e-300,
            phi: 0.7,
            q: 2,
            l0: 0.9,
            jump: true,
        };
        write_trace(&path, std::slice::from_ref(&rec)).unwrap();
        let rows = read_trace(&path).unwrap();
        assert_eq!(rows.len(), 1);
        let r = &rows[0];
        assert_eq!(
            (r.t, r.j, r.mode, r.attitude_err, r.bias_err),
            (rec.t, rec.j, rec.mode, rec.attitude_err, rec.bias_err)
        );
        assert_eq!((r.phi, r.q, r.l0, r.jump), (rec.phi, rec.q, rec.l0, 1));
        std::fs::remove_dir_all(&dir).unwrap();
    }
}
