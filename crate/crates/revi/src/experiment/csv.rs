//! Flat CSV serialization of solver runs: one row per (iterate, metric).
//!
//! Floats are rendered with Rust's shortest round-trip formatting, so a
//! repeated run with identical inputs reproduces the file byte for byte.

use std::path::Path;

use crate::error::{Error, Result};
use crate::metrics::MetricTrace;
use crate::solvers::SolverRun;

pub const CSV_HEADER: &str = "iter,solver,L_k,trials,oracle_calls,metric_name,metric_value,wall_ms";

/// One record of the trace table.
#[derive(Debug, Clone, PartialEq)]
pub struct CsvRow {
    pub iter: usize,
    pub solver: String,
    pub l_k: f64,
    pub trials: u64,
    pub oracle_calls: u64,
    pub metric_name: String,
    pub metric_value: f64,
    pub wall_ms: f64,
}

fn check_field(name: &str, value: &str) -> Result<()> {
    if value.is_empty() || value.contains(',') || value.contains('\n') || value.contains('\r') {
        return Err(Error::Misuse(format!(
            "csv field {name} must be nonempty and free of commas/newlines, got {value:?}"
        )));
    }
    Ok(())
}

/// Flattens a run into rows, metric-major then iterate-major.
///
/// Row 0 of every metric describes the initial point: step constant
/// `initial_l`, zero trials, zero oracle calls. Row `k >= 1` carries the
/// constants accepted at iteration `k`.
pub fn rows_from_run(
    run: &SolverRun,
    traces: &[MetricTrace],
    initial_l: f64,
    wall_ms: f64,
) -> Result<Vec<CsvRow>> {
    check_field("solver", &run.solver)?;
    let mut rows = Vec::new();
    for trace in traces {
        check_field("metric_name", trace.name())?;
        for (k, value) in trace.iter() {
            let (l_k, trials, oracle_calls) = if k == 0 {
                (initial_l, 0, 0)
            } else {
                let i = k - 1;
                match (run.l_sequence.get(i), run.trials.get(i), run.oracle_calls.get(i)) {
                    (Some(&l), Some(&t), Some(&o)) => (l, t, o),
                    _ => {
                        return Err(Error::Misuse(format!(
                            "metric '{}' indexes iterate {k} but the run has {} iterations",
                            trace.name(),
                            run.iterations()
                        )))
                    }
                }
            };
            rows.push(CsvRow {
                iter: k,
                solver: run.solver.clone(),
                l_k,
                trials,
                oracle_calls,
                metric_name: trace.name().to_string(),
                metric_value: value,
                wall_ms,
            });
        }
    }
    Ok(rows)
}

pub fn render_rows(rows: &[CsvRow]) -> String {
    let mut out = String::with_capacity(64 * (rows.len() + 1));
    out.push_str(CSV_HEADER);
    out.push('\n');
    for row in rows {
        out.push_str(&format!(
            "{},{},{},{},{},{},{},{}\n",
            row.iter,
            row.solver,
            row.l_k,
            row.trials,
            row.oracle_calls,
            row.metric_name,
            row.metric_value,
            row.wall_ms
        ));
    }
    out
}

pub fn write_rows(path: &Path, rows: &[CsvRow]) -> Result<()> {
    std::fs::write(path, render_rows(rows))
        .map_err(|e| Error::Misuse(format!("cannot write {}: {e}", path.display())))
}

/// Parses text produced by [`render_rows`]; the header must match exactly.
pub fn parse_rows(text: &str) -> Result<Vec<CsvRow>> {
    let mut lines = text.lines();
    match lines.next() {
        Some(header) if header == CSV_HEADER => {}
        Some(header) => {
            return Err(Error::Config(format!(
                "unexpected csv header {header:?} (expected {CSV_HEADER:?})"
            )))
        }
        None => return Err(Error::Config("empty csv input".into())),
    }
    let mut rows = Vec::new();
    for (lineno, line) in lines.enumerate() {
        if line.is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != 8 {
            return Err(Error::Config(format!(
                "csv line {}: expected 8 fields, got {}",
                lineno + 2,
                fields.len()
            )));
        }
        let bad = |what: &str| Error::Config(format!("csv line {}: bad {what}", lineno + 2));
        rows.push(CsvRow {
            iter: fields[0].parse().map_err(|_| bad("iter"))?,
            solver: fields[1].to_string(),
            l_k: fields[2].parse().map_err(|_| bad("L_k"))?,
            trials: fields[3].parse().map_err(|_| bad("trials"))?,
            oracle_calls: fields[4].parse().map_err(|_| bad("oracle_calls"))?,
            metric_name: fields[5].to_string(),
            metric_value: fields[6].parse().map_err(|_| bad("metric_value"))?,
            wall_ms: fields[7].parse().map_err(|_| bad("wall_ms"))?,
        });
    }
    Ok(rows)
}

pub fn read_rows(path: &Path) -> Result<Vec<CsvRow>> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
    parse_rows(&text)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::collections::BTreeMap;

    use crate::vector::Vector;

    fn sample_run() -> SolverRun {
        SolverRun {
            solver: "adaptive".into(),
            iterates: vec![
                Vector::new(vec![0.0]).unwrap(),
                Vector::new(vec![0.5]).unwrap(),
                Vector::new(vec![0.75]).unwrap(),
            ],
            extrapolations: vec![
                Vector::new(vec![0.25]).unwrap(),
                Vector::new(vec![0.6]).unwrap(),
            ],
            l_sequence: vec![2.0, 4.0],
            trials: vec![1, 2],
            oracle_calls: vec![4, 10],
            wall_ms: 0.0,
            metrics: BTreeMap::new(),
        }
    }

    fn sample_trace() -> MetricTrace {
        let mut trace = MetricTrace::new("distance");
        trace.push(0, 1.0).unwrap();
        trace.push(1, 0.25).unwrap();
        trace.push(2, 0.0625).unwrap();
        trace
    }

    #[test]
    fn initial_row_uses_seed_constants_and_zero_counters() {
        let rows = rows_from_run(&sample_run(), &[sample_trace()], 1.5, 0.0).unwrap();
        assert_eq!(rows.len(), 3);
        assert_eq!((rows[0].iter, rows[0].l_k, rows[0].trials, rows[0].oracle_calls), (0, 1.5, 0, 0));
        assert_eq!((rows[1].iter, rows[1].l_k, rows[1].trials, rows[1].oracle_calls), (1, 2.0, 1, 4));
        assert_eq!((rows[2].iter, rows[2].l_k, rows[2].trials, rows[2].oracle_calls), (2, 4.0, 2, 10));
        assert_eq!(rows[2].metric_value, 0.0625);
    }

    #[test]
    fn render_parse_round_trip_is_exact() {
        let rows = rows_from_run(&sample_run(), &[sample_trace()], 1.5, 0.0).unwrap();
        let text = render_rows(&rows);
        assert!(text.starts_with(CSV_HEADER));
        assert!(text.ends_with('\n'));
        let back = parse_rows(&text).unwrap();
        assert_eq!(back, rows);
        assert_eq!(render_rows(&back), text);
    }

    #[test]
    fn trace_past_run_end_is_rejected() {
        let mut trace = sample_trace();
        trace.push(3, 0.01).unwrap();
        let err = rows_from_run(&sample_run(), &[trace], 1.5, 0.0).unwrap_err();
        assert!(err.to_string().contains("iterate 3"), "{err}");
    }

    #[test]
    fn malformed_inputs_are_rejected() {
        assert!(parse_rows("").is_err());
        assert!(parse_rows("a,b\n").is_err());
        let text = format!("{CSV_HEADER}\n0,s,x,0,0,gap,1,0\n");
        assert!(parse_rows(&text).is_err());
        let text = format!("{CSV_HEADER}\n0,s,1,0,0,gap,1\n");
        assert!(parse_rows(&text).is_err());
    }

    #[test]
    fn shortest_float_formatting_survives_round_trip() {
        let mut trace = MetricTrace::new("gap");
        trace.push(0, 0.1 + 0.2).unwrap();
        trace.push(1, 1e-17).unwrap();
        let mut run = sample_run();
        run.solver = "classical-eg".into();
        let rows = rows_from_run(&run, &[trace], f64::MIN_POSITIVE, 0.0).unwrap();
        let back = parse_rows(&render_rows(&rows)).unwrap();
        assert!(back[0].metric_value == 0.1 + 0.2);
        assert!(back[1].metric_value == 1e-17);
        assert!(back[0].l_k == f64::MIN_POSITIVE);
    }
}
