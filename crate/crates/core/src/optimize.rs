//! One-dimensional maximization: a log-spaced scan to bracket the peak,
//! then golden-section search in `ln x`.

/// `(sqrt(5) - 1) / 2`
const INV_PHI: f64 = 0.618_033_988_749_894_9;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Maximum {
    pub x: f64,
    pub value: f64,
    pub evaluations: usize,
}

/// `points` values from `lo` to `hi`, evenly spaced in `ln x`. Endpoints are exact.
pub fn log_grid(lo: f64, hi: f64, points: usize) -> Vec<f64> {
    assert!(lo > 0.0 && hi > lo && points >= 2, "bad log grid [{lo}, {hi}] x {points}");
    let (a, b) = (lo.ln(), hi.ln());
    (0..points)
        .map(|i| match i {
            0 => lo,
            _ if i == points - 1 => hi,
            _ => (a + (b - a) * i as f64 / (points - 1) as f64).exp(),
        })
        .collect()
}

/// Golden-section search for the maximum of `f` on `[lo, hi]`, assumed unimodal.
/// Stops when the bracket is narrower than `tol`.
pub fn golden_section_max<E, F>(mut f: F, lo: f64, hi: f64, tol: f64) -> Result<Maximum, E>
where
    F: FnMut(f64) -> Result<f64, E>,
{
    let (mut a, mut b) = (lo, hi);
    let mut c = b - INV_PHI * (b - a);
    let mut d = a + INV_PHI * (b - a);
    let (mut fc, mut fd) = (f(c)?, f(d)?);
    let mut evaluations = 2;
    while (b - a).abs() > tol {
        if fc >= fd {
            b = d;
            d = c;
            fd = fc;
            c = b - INV_PHI * (b - a);
            fc = f(c)?;
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + INV_PHI * (b - a);
            fd = f(d)?;
        }
        evaluations += 1;
    }
    let (x, value) = if fc >= fd { (c, fc) } else { (d, fd) };
    Ok(Maximum { x, value, evaluations })
}

/// Scan `points` log-spaced values on `[lo, hi]`, then refine around the best
/// one by golden section in `ln x` until the bracket is `rel_tol` wide in
/// relative terms. The best scanned point wins if refinement does worse.
pub fn maximize_log_scan<E, F>(mut f: F, lo: f64, hi: f64, points: usize, rel_tol: f64) -> Result<Maximum, E>
where
    F: FnMut(f64) -> Result<f64, E>,
{
    let grid = log_grid(lo, hi, points);
    let mut values = Vec::with_capacity(points);
    for &x in &grid {
        values.push(f(x)?);
    }
    let best = (0..points).fold(0, |b, i| if values[i] > values[b] { i } else { b });
    let l = grid[best.saturating_sub(1)].ln();
    let r = grid[(best + 1).min(points - 1)].ln();
    let refined = golden_section_max(|t: f64| f(t.exp().clamp(lo, hi)), l, r, rel_tol)?;
    let evaluations = points + refined.evaluations;
    if refined.value > values[best] {
        Ok(Maximum { x: refined.x.exp().clamp(lo, hi), value: refined.value, evaluations })
    } else {
        Ok(Maximum { x: grid[best], value: values[best], evaluations })
    }
}
