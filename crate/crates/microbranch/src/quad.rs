//! Small adaptive quadrature helpers.

/// Adaptive Simpson with relative tolerance and an absolute floor.
pub fn adaptive_simpson(f: impl Fn(f64) -> f64, a: f64, b: f64, rel_tol: f64, abs_floor: f64) -> f64 {
    if a == b {
        return 0.0;
    }
    let fa = f(a);
    let fb = f(b);
    let m = 0.5 * (a + b);
    let fm = f(m);
    let whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
    simpson_rec(&f, a, b, fa, fm, fb, whole, rel_tol, abs_floor, 28)
}

#[allow(clippy::too_many_arguments)]
fn simpson_rec(
    f: &impl Fn(f64) -> f64,
    a: f64,
    b: f64,
    fa: f64,
    fm: f64,
    fb: f64,
    whole: f64,
    rel_tol: f64,
    abs_floor: f64,
    depth: u32,
) -> f64 {
    let m = 0.5 * (a + b);
    let lm = 0.5 * (a + m);
    let rm = 0.5 * (m + b);
    let flm = f(lm);
    let frm = f(rm);
    let left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
    let right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
    let delta = left + right - whole;
    if depth == 0 || delta.abs() <= 15.0 * (rel_tol * (left + right).abs() + abs_floor) {
        return left + right + delta / 15.0;
    }
    simpson_rec(f, a, m, fa, flm, fm, left, rel_tol, abs_floor / 2.0, depth - 1)
        + simpson_rec(f, m, b, fm, frm, fb, right, rel_tol, abs_floor / 2.0, depth - 1)
}

/// Integrates over [a, b] split at the given interior panel boundaries,
/// adaptive within each panel. Breaks that fall outside (a, b) are ignored.
pub fn integrate_paneled(
    f: impl Fn(f64) -> f64 + Copy,
    a: f64,
    b: f64,
    breaks: &[f64],
    rel_tol: f64,
) -> f64 {
    let mut cuts: Vec<f64> = breaks.iter().copied().filter(|&x| x > a && x < b).collect();
    cuts.sort_by(|x, y| x.partial_cmp(y).unwrap());
    cuts.dedup();
    let mut total = 0.0;
    let mut lo = a;
    for &c in cuts.iter().chain(std::iter::once(&b)) {
        total += adaptive_simpson(f, lo, c, rel_tol, 1e-300);
        lo = c;
    }
    total
}

/// Nodes and weights of 5-point Gauss-Legendre on [-1, 1].
const GL5_X: [f64; 5] = [
    -0.906_179_845_938_664,
    -0.538_469_310_105_683,
    0.0,
    0.538_469_310_105_683,
    0.906_179_845_938_664,
];
const GL5_W: [f64; 5] = [
    0.236_926_885_056_189,
    0.478_628_670_499_366,
    0.568_888_888_888_889,
    0.478_628_670_499_366,
    0.236_926_885_056_189,
];

/// Fixed 5-point Gauss-Legendre: exact for polynomials of degree <= 9.
pub fn gauss5(f: impl Fn(f64) -> f64, a: f64, b: f64) -> f64 {
    let c = 0.5 * (a + b);
    let h = 0.5 * (b - a);
    let mut acc = 0.0;
    for (x, w) in GL5_X.iter().zip(GL5_W.iter()) {
        acc += w * f(c + h * x);
    }
    acc * h
}

/// Gauss-Legendre applied per panel, panels given by sorted cut points
/// (clipped to [a, b]); exact for piecewise-polynomial integrands whose
/// pieces align with the panels.
pub fn gauss5_paneled(f: impl Fn(f64) -> f64 + Copy, a: f64, b: f64, breaks: &[f64]) -> f64 {
    let mut cuts: Vec<f64> = breaks.iter().copied().filter(|&x| x > a && x < b).collect();
    cuts.sort_by(|x, y| x.partial_cmp(y).unwrap());
    cuts.dedup();
    let mut total = 0.0;
    let mut lo = a;
    for &c in cuts.iter().chain(std::iter::once(&b)) {
        total += gauss5(f, lo, c);
        lo = c;
    }
    total
}
