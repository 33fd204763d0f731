//! One-dimensional maximization used to pick the perturbation size.

const INV_PHI: f64 = 0.618_033_988_749_894_9;

/// Maximizes `f` over `[lo, hi]` (`0 < lo < hi`): a log-spaced scan of
/// `scan` points locates the best bracket, golden-section refines it.
/// Points where `f` returns `None` count as `-inf`.
pub(crate) fn maximize_log(
    mut f: impl FnMut(f64) -> Option<f64>,
    lo: f64,
    hi: f64,
    scan: usize,
    iterations: usize,
) -> Option<(f64, f64)> {
    debug_assert!(lo > 0.0 && hi > lo && scan >= 3);
    let mut eval = |x: f64| f(x).filter(|v| v.is_finite()).unwrap_or(f64::NEG_INFINITY);
    let ratio = (hi / lo).ln();
    let grid: Vec<f64> = (0..scan)
        .map(|i| lo * (ratio * i as f64 / (scan - 1) as f64).exp())
        .collect();
    let values: Vec<f64> = grid.iter().map(|&x| eval(x)).collect();
    let (best, &best_value) = values
        .iter()
        .enumerate()
        .max_by(|a, b| a.1.total_cmp(b.1))?;
    if best_value == f64::NEG_INFINITY {
        return None;
    }
    let left = grid[best.saturating_sub(1)].ln();
    let right = grid[(best + 1).min(scan - 1)].ln();

    // Golden section in log(x).
    let (mut a, mut b) = (left, right);
    let mut c = b - INV_PHI * (b - a);
    let mut d = a + INV_PHI * (b - a);
    let mut fc = eval(c.exp());
    let mut fd = eval(d.exp());
    for _ in 0..iterations {
        if fc >= fd {
            b = d;
            d = c;
            fd = fc;
            c = b - INV_PHI * (b - a);
            fc = eval(c.exp());
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + INV_PHI * (b - a);
            fd = eval(d.exp());
        }
    }
    let (x, v) = if fc >= fd { (c.exp(), fc) } else { (d.exp(), fd) };
    if v >= best_value {
        Some((x, v))
    } else {
        Some((grid[best], best_value))
    }
}
