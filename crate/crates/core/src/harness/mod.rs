//! Scenario-driven simulation runs.
//!
//! A run is a pure function of its [`ScenarioConfig`]: the same file and
//! seed produce a byte-identical trace.

mod metrics;
mod scenario;
mod world;

use std::io::{self, Write};
use std::path::Path;

pub use metrics::{AdversaryOutcome, MetricsReport};
pub use scenario::{
    load_scenario, BsFailure, ClusterConfig, Flags, KeystreamConfig, LinkClasses, LinkSpec, MoteFailure,
    ResolvedCluster, ScenarioConfig, ScenarioError, TrafficItem, DEFAULT_REFRESH_PERIOD, FIRST_AUTO_MOTE_ID,
    MAX_PAYLOAD,
};
pub use world::{SimWorld, Simulation, Timer, KEY_RECORD_BYTES};

use crate::simnet::{TraceEvent, TRACE_SCHEMA, TRACE_SCHEMA_VERSION};

#[derive(Clone, Debug)]
pub struct RunOutput {
    pub trace: Vec<TraceEvent>,
    pub metrics: MetricsReport,
}

impl RunOutput {
    pub fn violations(&self) -> &[String] {
        &self.metrics.violations
    }
}

pub fn run_scenario(config: &ScenarioConfig) -> Result<RunOutput, ScenarioError> {
    let sim = Simulation::new(config)?;
    let trace = sim.into_trace();
    let metrics = MetricsReport::from_trace(&trace);
    Ok(RunOutput { trace, metrics })
}

/// JSON Lines: a schema header, then one event per line.
pub fn write_trace<W: Write>(out: &mut W, trace: &[TraceEvent]) -> io::Result<()> {
    let header = serde_json::json!({ "schema": TRACE_SCHEMA, "version": TRACE_SCHEMA_VERSION });
    writeln!(out, "{header}")?;
    for e in trace {
        serde_json::to_writer(&mut *out, e)?;
        out.write_all(b"\n")?;
    }
    Ok(())
}

pub fn trace_to_string(trace: &[TraceEvent]) -> String {
    let mut buf = Vec::new();
    write_trace(&mut buf, trace).expect("writing to memory");
    String::from_utf8(buf).expect("json is utf-8")
}

pub fn save_trace(path: &Path, trace: &[TraceEvent]) -> io::Result<()> {
    let mut f = io::BufWriter::new(std::fs::File::create(path)?);
    write_trace(&mut f, trace)?;
    f.flush()
}

/// Parses a trace written by [`write_trace`], checking the header.
pub fn read_trace(text: &str) -> Result<Vec<TraceEvent>, String> {
    let mut lines = text.lines();
    let header: serde_json::Value =
        serde_json::from_str(lines.next().ok_or("empty trace")?).map_err(|e| e.to_string())?;
    if header["schema"] != TRACE_SCHEMA || header["version"] != TRACE_SCHEMA_VERSION {
        return Err(format!("unsupported trace header {header}"));
    }
    lines
        .enumerate()
        .map(|(i, l)| serde_json::from_str(l).map_err(|e| format!("line {}: {e}", i + 2)))
        .collect()
}
