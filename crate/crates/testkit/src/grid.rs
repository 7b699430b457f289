/// Minimizes `f` over the box `[lo, hi]` by exhaustive grid search.
///
/// The first pass evaluates `points` values per coordinate. Each further
/// pass re-grids a box two cells wide around the incumbent, clipped to the
/// original bounds. Non-finite values are skipped. Returns the minimum and
/// the point attaining it; `(inf, lo)` if no point was finite.
pub fn minimize(f: impl Fn(&[f64]) -> f64, lo: &[f64], hi: &[f64], points: usize, zooms: usize) -> (f64, Vec<f64>) {
    assert_eq!(lo.len(), hi.len());
    assert!(points >= 2);
    let d = lo.len();
    let (mut a, mut b) = (lo.to_vec(), hi.to_vec());
    let mut best = (f64::INFINITY, lo.to_vec());
    let mut x = vec![0.0; d];
    for _ in 0..=zooms {
        let total = points.pow(d as u32);
        for code in 0..total {
            let mut c = code;
            for k in 0..d {
                let i = c % points;
                c /= points;
                x[k] = a[k] + (b[k] - a[k]) * i as f64 / (points - 1) as f64;
            }
            let v = f(&x);
            if v.is_finite() && v < best.0 {
                best = (v, x.clone());
            }
        }
        if !best.0.is_finite() {
            break;
        }
        for k in 0..d {
            let cell = (b[k] - a[k]) / (points - 1) as f64;
            a[k] = (best.1[k] - 2.0 * cell).max(lo[k]);
            b[k] = (best.1[k] + 2.0 * cell).min(hi[k]);
        }
    }
    best
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn finds_a_quadratic_minimum() {
        let (v, x) = minimize(|x| (x[0] - 0.3).powi(2) + (x[1] + 0.2).powi(2), &[-1.0, -1.0], &[1.0, 1.0], 21, 6);
        assert!(v < 1e-10);
        assert!((x[0] - 0.3).abs() < 1e-5 && (x[1] + 0.2).abs() < 1e-5);
    }

    #[test]
    fn respects_bounds() {
        let (v, x) = minimize(|x| x[0], &[0.25], &[1.0], 5, 3);
        assert_eq!(v, 0.25);
        assert_eq!(x, vec![0.25]);
    }
}
