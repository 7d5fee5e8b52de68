//! CSV output with fixed column layouts.
//!
//! | file            | columns |
//! |-----------------|---------|
//! | state path      | `t,s11,s12_re,s12_im,purity` |
//! | record          | `t_window_start,i_avg` |
//! | ensemble        | `t,mean_s11,var_s11,mean_s12_re,var_s12_re,mean_s12_im,var_s12_im,mean_purity` |
//! | localization    | `n_traj,frac_dot1,frac_dot2,frac_unresolved` |
//! | histogram       | `bin_lo,bin_hi,count` |
//!
//! Floats use Rust's shortest round-trip formatting, so every value parses
//! back to the identical `f64`.

use std::io::{Read, Write};

use crate::analysis::{EnsembleSummary, Histogram};
use crate::error::{Error, Result};
use crate::model::{ConditionedState, MeasurementRecord};

pub const STATE_HEADER: [&str; 5] = ["t", "s11", "s12_re", "s12_im", "purity"];
pub const RECORD_HEADER: [&str; 2] = ["t_window_start", "i_avg"];
pub const ENSEMBLE_HEADER: [&str; 8] = [
    "t",
    "mean_s11",
    "var_s11",
    "mean_s12_re",
    "var_s12_re",
    "mean_s12_im",
    "var_s12_im",
    "mean_purity",
];
pub const LOCALIZATION_HEADER: [&str; 4] = ["n_traj", "frac_dot1", "frac_dot2", "frac_unresolved"];
pub const HISTOGRAM_HEADER: [&str; 3] = ["bin_lo", "bin_hi", "count"];

fn writer<W: Write>(w: W) -> csv::Writer<W> {
    csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_writer(w)
}

fn flush<W: Write>(mut w: csv::Writer<W>) -> Result<()> {
    w.flush().map_err(|e| Error::Csv(e.to_string()))
}

pub fn write_states<W: Write>(w: W, times: &[f64], states: &[ConditionedState]) -> Result<()> {
    if times.len() != states.len() {
        return Err(Error::Csv(format!(
            "{} times for {} states",
            times.len(),
            states.len()
        )));
    }
    let mut w = writer(w);
    w.write_record(STATE_HEADER)?;
    for (t, s) in times.iter().zip(states) {
        w.write_record([
            t.to_string(),
            s.s11().to_string(),
            s.s12_re().to_string(),
            s.s12_im().to_string(),
            s.purity().to_string(),
        ])?;
    }
    flush(w)
}

fn parse(field: Option<&str>, line: usize) -> Result<f64> {
    let f = field.ok_or_else(|| Error::Csv(format!("line {line}: missing column")))?;
    f.trim()
        .parse()
        .map_err(|_| Error::Csv(format!("line {line}: bad number `{f}`")))
}

fn check_header<R: Read>(r: &mut csv::Reader<R>, expected: &[&str]) -> Result<()> {
    let h = r.headers()?;
    if h.iter().ne(expected.iter().copied()) {
        return Err(Error::Csv(format!(
            "unexpected header {h:?}, want {expected:?}"
        )));
    }
    Ok(())
}

/// Parse a state-path file back into times and states.
pub fn read_states<R: Read>(r: R) -> Result<(Vec<f64>, Vec<ConditionedState>)> {
    let mut r = csv::Reader::from_reader(r);
    check_header(&mut r, &STATE_HEADER)?;
    let mut times = Vec::new();
    let mut states = Vec::new();
    for (k, row) in r.records().enumerate() {
        let row = row?;
        times.push(parse(row.get(0), k + 2)?);
        states.push(ConditionedState::new(
            parse(row.get(1), k + 2)?,
            parse(row.get(2), k + 2)?,
            parse(row.get(3), k + 2)?,
        )?);
    }
    Ok((times, states))
}

pub fn write_record<W: Write>(w: W, record: &MeasurementRecord) -> Result<()> {
    let mut w = writer(w);
    w.write_record(RECORD_HEADER)?;
    for (k, i) in record.samples.iter().enumerate() {
        w.write_record([record.window_start(k).to_string(), i.to_string()])?;
    }
    flush(w)
}

/// Parse a record file. The window is the spacing of the first two rows;
/// every row must sit on that grid.
pub fn read_record<R: Read>(r: R) -> Result<MeasurementRecord> {
    let mut r = csv::Reader::from_reader(r);
    check_header(&mut r, &RECORD_HEADER)?;
    let mut starts = Vec::new();
    let mut samples = Vec::new();
    for (k, row) in r.records().enumerate() {
        let row = row?;
        starts.push(parse(row.get(0), k + 2)?);
        samples.push(parse(row.get(1), k + 2)?);
    }
    match starts.len() {
        0 => Err(Error::EmptyRecord),
        1 => Err(Error::Csv(
            "cannot infer the window from a single row".into(),
        )),
        _ => {
            let t0 = starts[0];
            let window = starts[1] - starts[0];
            for (k, t) in starts.iter().enumerate() {
                let expected = t0 + k as f64 * window;
                if (t - expected).abs() > 1e-9 * window.max(expected.abs()) {
                    return Err(Error::RecordMismatch(format!(
                        "row {} starts at {t}, expected {expected}",
                        k + 2
                    )));
                }
            }
            MeasurementRecord::new(t0, window, samples)
        }
    }
}

pub fn write_ensemble<W: Write>(w: W, summary: &EnsembleSummary) -> Result<()> {
    let mut w = writer(w);
    w.write_record(ENSEMBLE_HEADER)?;
    for (k, t) in summary.checkpoints.iter().enumerate() {
        w.write_record([
            t.to_string(),
            summary.s11.mean[k].to_string(),
            summary.s11.variance[k].to_string(),
            summary.s12_re.mean[k].to_string(),
            summary.s12_re.variance[k].to_string(),
            summary.s12_im.mean[k].to_string(),
            summary.s12_im.variance[k].to_string(),
            summary.mean_purity[k].to_string(),
        ])?;
    }
    flush(w)
}

/// Rows of an ensemble file, one `[f64; 8]` per checkpoint in column order.
pub fn read_ensemble<R: Read>(r: R) -> Result<Vec<[f64; 8]>> {
    let mut r = csv::Reader::from_reader(r);
    check_header(&mut r, &ENSEMBLE_HEADER)?;
    r.records()
        .enumerate()
        .map(|(k, row)| {
            let row = row?;
            let mut out = [0.0; 8];
            for (c, v) in out.iter_mut().enumerate() {
                *v = parse(row.get(c), k + 2)?;
            }
            Ok(out)
        })
        .collect()
}

pub fn write_localization<W: Write>(w: W, summary: &EnsembleSummary) -> Result<()> {
    let mut w = writer(w);
    w.write_record(LOCALIZATION_HEADER)?;
    w.write_record([
        summary.n_traj.to_string(),
        summary.frac_dot1.to_string(),
        summary.frac_dot2.to_string(),
        summary.frac_unresolved().to_string(),
    ])?;
    flush(w)
}

pub fn write_histogram<W: Write>(w: W, h: &Histogram) -> Result<()> {
    let mut w = writer(w);
    w.write_record(HISTOGRAM_HEADER)?;
    for (k, c) in h.counts.iter().enumerate() {
        w.write_record([
            h.edges[k].to_string(),
            h.edges[k + 1].to_string(),
            c.to_string(),
        ])?;
    }
    flush(w)
}

pub fn read_histogram<R: Read>(r: R) -> Result<Histogram> {
    let mut r = csv::Reader::from_reader(r);
    check_header(&mut r, &HISTOGRAM_HEADER)?;
    let mut edges = Vec::new();
    let mut counts = Vec::new();
    for (k, row) in r.records().enumerate() {
        let row = row?;
        if edges.is_empty() {
            edges.push(parse(row.get(0), k + 2)?);
        }
        edges.push(parse(row.get(1), k + 2)?);
        let c = row.get(2).unwrap_or("");
        counts.push(
            c.parse()
                .map_err(|_| Error::Csv(format!("line {}: bad count `{c}`", k + 2)))?,
        );
    }
    Ok(Histogram { edges, counts })
}
