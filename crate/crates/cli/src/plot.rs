//! Static SVG line plots of figure data.
//!
//! Log axes are drawn by plotting `log10` of the values on a linear axis and
//! labelling ticks as powers of ten. Points that cannot be drawn (non-finite,
//! or non-positive on a log axis) split the curve rather than being clamped.

use std::path::Path;

use plotters::prelude::*;
use qss_core::figures::FigureResult;
use qss_core::schemes::{Quantity, RowOutcome, SweepResult};

use crate::Failure;

const SIZE: (u32, u32) = (960, 640);

fn y_value(quantity: Quantity, outcome: &RowOutcome) -> Option<f64> {
    match (quantity, outcome) {
        (Quantity::MaxDistance, RowOutcome::Distance(d)) => d.km(),
        (_, RowOutcome::Rate { report, .. }) => Some(report.rate),
        _ => None,
    }
}

fn to_axis(v: f64, log: bool) -> Option<f64> {
    match (v.is_finite(), log) {
        (false, _) => None,
        (true, false) => Some(v),
        (true, true) if v > 0.0 => Some(v.log10()),
        _ => None,
    }
}

/// Contiguous drawable runs of one sweep.
fn segments(result: &SweepResult, log_x: bool, log_y: bool) -> Vec<Vec<(f64, f64)>> {
    let mut out = vec![Vec::new()];
    for row in &result.rows {
        let point = y_value(result.quantity, &row.outcome)
            .and_then(|y| Some((to_axis(row.x, log_x)?, to_axis(y, log_y)?)));
        match point {
            Some(p) => out.last_mut().expect("never empty").push(p),
            None if !out.last().expect("never empty").is_empty() => out.push(Vec::new()),
            None => {}
        }
    }
    out.retain(|s| !s.is_empty());
    out
}

fn bounds(values: impl Iterator<Item = f64>) -> (f64, f64) {
    let (lo, hi) = values.fold((f64::INFINITY, f64::NEG_INFINITY), |(l, h), v| (l.min(v), h.max(v)));
    if !lo.is_finite() {
        return (0.0, 1.0);
    }
    let pad = if hi > lo { 0.03 * (hi - lo) } else { 0.5 };
    (lo - pad, hi + pad)
}

fn tick(v: f64, log: bool) -> String {
    if log {
        format!("1e{}", v.round())
    } else {
        format!("{v}")
    }
}

pub fn write_svg(result: &FigureResult, path: &Path) -> Result<(), Failure> {
    let fig = &result.figure;
    let curves: Vec<_> = result
        .curves
        .iter()
        .zip(&fig.curves)
        .map(|((label, sweep), spec)| (label, spec.dashed, segments(sweep, fig.log_x, fig.log_y)))
        .collect();
    let all = || curves.iter().flat_map(|c| c.2.iter().flatten());
    let (x0, x1) = bounds(all().map(|p| p.0));
    let (y0, y1) = bounds(all().map(|p| p.1));

    let draw = || -> Result<(), Box<dyn std::error::Error>> {
        let root = SVGBackend::new(path, SIZE).into_drawing_area();
        root.fill(&WHITE)?;
        let mut chart = ChartBuilder::on(&root)
            .caption(fig.title, ("sans-serif", 22))
            .margin(16)
            .x_label_area_size(48)
            .y_label_area_size(72)
            .build_cartesian_2d(x0..x1, y0..y1)?;
        chart
            .configure_mesh()
            .x_desc(fig.x_label)
            .y_desc(fig.y_label)
            .x_label_formatter(&|v| tick(*v, fig.log_x))
            .y_label_formatter(&|v| tick(*v, fig.log_y))
            .draw()?;
        for (i, (label, dashed, segs)) in curves.iter().enumerate() {
            let color = Palette99::pick(i).to_rgba();
            let style = ShapeStyle::from(&color).stroke_width(2);
            for (k, seg) in segs.iter().enumerate() {
                let anno = if *dashed {
                    chart.draw_series(DashedLineSeries::new(seg.iter().copied(), 8, 5, style))?
                } else {
                    chart.draw_series(LineSeries::new(seg.iter().copied(), style))?
                };
                if k == 0 {
                    anno.label(label.as_str())
                        .legend(move |(x, y)| PathElement::new(vec![(x, y), (x + 20, y)], style));
                }
            }
        }
        chart
            .configure_series_labels()
            .background_style(WHITE.mix(0.85))
            .border_style(BLACK)
            .position(SeriesLabelPosition::UpperRight)
            .draw()?;
        root.present()?;
        Ok(())
    };
    draw().map_err(|e| Failure::Io(format!("cannot write {}: {e}", path.display())))
}

#[cfg(test)]
mod tests {
    use super::*;
    use qss_core::schemes::SweepRow;

    #[test]
    fn log_axis_splits_at_non_positive_values() {
        let rows = [1e-3, 1e-4, 0.0, -1.0, 1e-6]
            .iter()
            .enumerate()
            .map(|(i, &r)| {
                let mut report = qss_core::rates::secret_key_rate(
                    &qss_core::schemes::bipartite_distances(2, 0.5, [0.0, 0.0], [1.0, 1.0]).unwrap(),
                )
                .unwrap();
                report.rate = r;
                SweepRow { x: i as f64, outcome: RowOutcome::Rate { mu_star: 1.0, report, weakest_eta: 1.0 } }
            })
            .collect();
        let sweep = SweepResult { axis: "x".into(), quantity: Quantity::Rate, rows };
        let segs = segments(&sweep, false, true);
        assert_eq!(segs.len(), 2);
        assert_eq!(segs[0], vec![(0.0, -3.0), (1.0, -4.0)]);
        assert_eq!(segs[1], vec![(4.0, -6.0)]);
        assert_eq!(segments(&sweep, false, false)[0].len(), 5);
    }
}
