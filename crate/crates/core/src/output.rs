//! CSV emission for sweeps and figures.
//!
//! Numbers are written with 17 significant digits so a file reproduces the
//! binary values exactly; non-finite values are `inf`, `-inf` and `nan`.
//! An optional comment block (`# ` prefixed lines) leads the file.

use std::io::{self, Write};

use crate::rates::RateReport;
use crate::schemes::{plob_reference, Quantity, RowOutcome, SweepResult};

pub fn format_number(x: f64) -> String {
    if x.is_nan() {
        "nan".into()
    } else if x.is_infinite() {
        if x > 0.0 { "inf".into() } else { "-inf".into() }
    } else {
        format!("{x:.16e}")
    }
}

/// Writes `text` as `# ` prefixed comment lines.
pub fn write_comment_block<W: Write>(w: &mut W, text: &str) -> io::Result<()> {
    for line in text.lines() {
        writeln!(w, "# {line}")?;
    }
    Ok(())
}

/// Recovers the comment block written by [`write_comment_block`].
pub fn read_comment_block(csv_text: &str) -> String {
    let mut out = String::new();
    for line in csv_text.lines().take_while(|l| l.starts_with('#')) {
        out.push_str(line.strip_prefix("# ").unwrap_or(line.trim_start_matches('#')));
        out.push('\n');
    }
    out
}

fn header(quantity: Quantity, axis: &str, plob: bool) -> Vec<String> {
    let mut h = vec![axis.to_string()];
    let rest: &[&str] = match quantity {
        Quantity::MaxDistance => &["max_distance_km", "status"],
        _ => &["rate_bits_per_use", "mutual_information", "holevo", "mu_star", "status"],
    };
    h.extend(rest.iter().map(|s| s.to_string()));
    if plob && quantity != Quantity::MaxDistance {
        h.push("plob".into());
    }
    h
}

fn rate_fields(report: &RateReport, mu_star: f64) -> Vec<String> {
    vec![
        format_number(report.rate),
        format_number(report.mutual_information),
        format_number(report.holevo),
        format_number(mu_star),
        report.status.as_str().into(),
    ]
}

fn row_fields(quantity: Quantity, x: f64, outcome: &RowOutcome, plob: bool) -> Vec<String> {
    let mut f = vec![format_number(x)];
    match outcome {
        RowOutcome::Rate { mu_star, report, weakest_eta } => {
            f.extend(rate_fields(report, *mu_star));
            if plob {
                f.push(format_number(plob_reference(*weakest_eta).unwrap_or(f64::NAN)));
            }
        }
        RowOutcome::Distance(d) => {
            f.push(format_number(d.km().unwrap_or(f64::NAN)));
            f.push(d.status().into());
        }
        RowOutcome::Failed(e) => {
            let numeric = if quantity == Quantity::MaxDistance { 1 } else { 4 };
            f.extend((0..numeric).map(|_| "nan".to_string()));
            f.push(format!("error: {e}"));
            if plob && quantity != Quantity::MaxDistance {
                f.push("nan".into());
            }
        }
    }
    f
}

fn csv_error(e: csv::Error) -> io::Error {
    io::Error::other(e)
}

/// One sweep as CSV: header row, then one row per grid point.
pub fn write_sweep_csv<W: Write>(mut w: W, result: &SweepResult, echo: Option<&str>, plob: bool) -> io::Result<()> {
    if let Some(text) = echo {
        write_comment_block(&mut w, text)?;
    }
    let mut out = csv::Writer::from_writer(w);
    out.write_record(header(result.quantity, &result.axis, plob)).map_err(csv_error)?;
    for row in &result.rows {
        out.write_record(row_fields(result.quantity, row.x, &row.outcome, plob)).map_err(csv_error)?;
    }
    out.flush()
}

/// Several labelled sweeps in one long-format table with leading
/// `curve` and `axis` columns. All sweeps must share a quantity kind.
pub fn write_curves_csv<W: Write>(mut w: W, curves: &[(String, SweepResult)], echo: Option<&str>, plob: bool) -> io::Result<()> {
    if let Some(text) = echo {
        write_comment_block(&mut w, text)?;
    }
    let mut out = csv::Writer::from_writer(w);
    let quantity = curves.first().map(|c| c.1.quantity).unwrap_or_default();
    let kind = if quantity == Quantity::MaxDistance { Quantity::MaxDistance } else { Quantity::Rate };
    let mut h = vec!["curve".to_string()];
    h.extend(header(kind, "axis", plob));
    h.insert(1, "axis_name".into());
    out.write_record(&h).map_err(csv_error)?;
    for (label, result) in curves {
        for row in &result.rows {
            let mut f = vec![label.clone(), result.axis.clone()];
            f.extend(row_fields(kind, row.x, &row.outcome, plob));
            out.write_record(&f).map_err(csv_error)?;
        }
    }
    out.flush()
}
