//! Composite Simpson quadrature over knot-split intervals.
//!
//! The integrands in this crate (|v(r)| r^{d-1}, e^{-beta v(r)} r^{d-1}) are
//! piecewise polynomial or piecewise smooth between shape knots, so composite
//! Simpson on each piece converges at fourth order once the knots are split
//! out. No adaptivity is needed at the panel counts used here.

/// Composite Simpson rule with `panels` panels (rounded up to even).
pub fn simpson(f: impl Fn(f64) -> f64, a: f64, b: f64, panels: usize) -> f64 {
    if b <= a {
        return 0.0;
    }
    let n = panels.max(2).next_multiple_of(2);
    let h = (b - a) / n as f64;
    let mut acc = f(a) + f(b);
    for i in 1..n {
        let w = if i % 2 == 1 { 4.0 } else { 2.0 };
        acc += w * f(a + i as f64 * h);
    }
    acc * h / 3.0
}

/// Integrate `f` over `[knots[0], knots[last]]`, applying Simpson on each
/// consecutive pair. Knots must be sorted ascending; zero-length pieces are
/// skipped.
pub fn simpson_knotted(f: impl Fn(f64) -> f64, knots: &[f64], panels_per_piece: usize) -> f64 {
    let mut total = 0.0;
    for w in knots.windows(2) {
        if w[1] > w[0] {
            total += simpson(&f, w[0], w[1], panels_per_piece);
        }
    }
    total
}
