//! Trace seminorms: spectral H^{1/2} forms and Gagliardo double integrals.
//!
//! For a continuous piecewise-affine trace the Fourier/cosine coefficients are
//! rational in the slope jumps, so both spectral seminorms reduce to sums of
//! |S_k|^2 / k^3 with S_k a finite exponential sum over the breakpoints. On a
//! uniform breakpoint grid S_k is periodic in k and the series is folded into
//! an exact lattice sum; otherwise the series is summed directly with a tail
//! bound from |S_k| <= sum |dq|.

use crate::error::{Error, Result};
use crate::params::Bc;
use crate::quad::adaptive_simpson;
use crate::trace::TraceProfile;

const REL_TOL: f64 = 1e-10;
const K_MAX_DIRECT: usize = 300_000;
const PI: f64 = std::f64::consts::PI;

/// Slope jumps of a trace: (position, jump). `include_wrap` adds the jump at
/// 0 (= 1) between the last and first segment, as seen by the 1-periodic
/// extension.
fn slope_jumps(trace: &TraceProfile, include_wrap: bool) -> Vec<(f64, f64)> {
    let m = trace.num_segments();
    let mut jumps = Vec::with_capacity(m + 1);
    if include_wrap {
        let dq = trace.slope(0) - trace.slope(m - 1);
        if dq != 0.0 {
            jumps.push((0.0, dq));
        }
    }
    for j in 1..m {
        let dq = trace.slope(j) - trace.slope(j - 1);
        if dq != 0.0 {
            jumps.push((trace.breakpoints[j], dq));
        }
    }
    jumps
}

/// Lattice sum `sigma_3(r, n) = sum_{t >= 0} (r + t n)^{-3}` with a midpoint
/// integral tail.
fn sigma3(r: usize, n: usize) -> f64 {
    let (rf, nf) = (r as f64, n as f64);
    let mut acc = 0.0;
    let mut t = 0usize;
    loop {
        let term = (rf + t as f64 * nf).powi(-3);
        acc += term;
        t += 1;
        if term < 1e-16 * acc || t > 4000 {
            break;
        }
    }
    let edge = rf + (t as f64 - 0.5) * nf;
    acc + 1.0 / (2.0 * nf * edge * edge)
}

/// Cached per-period sigma_3 tables; last writer wins, which is harmless
/// since the computed values are identical.
fn sigma3_table(period: usize) -> std::sync::Arc<Vec<f64>> {
    use std::collections::HashMap;
    use std::sync::{Arc, Mutex, OnceLock};
    static CACHE: OnceLock<Mutex<HashMap<usize, Arc<Vec<f64>>>>> = OnceLock::new();
    let cache = CACHE.get_or_init(|| Mutex::new(HashMap::new()));
    if let Some(hit) = cache.lock().unwrap().get(&period) {
        return hit.clone();
    }
    let table: Arc<Vec<f64>> = Arc::new((1..=period).map(|r| sigma3(r, period)).collect());
    cache.lock().unwrap().insert(period, table.clone());
    table
}

/// Sums `sum_{k>=1} w(k)^2 / k^3` where `w` has exact period `period` on a
/// uniform grid, given the per-residue values `w(1..=period)`.
fn folded_sum(weights: &[f64]) -> f64 {
    let period = weights.len();
    let table = sigma3_table(period);
    let mut total = 0.0;
    for (i, &w) in weights.iter().enumerate() {
        if w != 0.0 {
            total += w * w * table[i];
        }
    }
    total
}

/// Direct summation of `sum_k |S_k|^2 / k^3` with rigorous tail bound
/// `A^2 / (2 K^2)`, plus an empirical windowed-mean tail estimate when the
/// rigorous bound has not converged by `K_MAX_DIRECT`.
fn direct_sum(mut s_sq: impl FnMut(usize) -> f64, jump_mass: f64) -> f64 {
    const WINDOW: usize = 512;
    let bound_sq = jump_mass * jump_mass;
    let mut acc = 0.0;
    let mut window = 0.0;
    let mut k = 1usize;
    loop {
        let v = s_sq(k);
        acc += v / (k as f64).powi(3);
        window += v;
        if k.is_multiple_of(WINDOW) && k < K_MAX_DIRECT {
            window = 0.0;
        }
        let tail_bound = bound_sq / (2.0 * (k as f64) * (k as f64));
        if k >= 64 && tail_bound <= REL_TOL * acc.max(1e-300) {
            return acc;
        }
        if k >= K_MAX_DIRECT {
            // Best-effort tail from the mean of the trailing partial window.
            let count = if k.is_multiple_of(WINDOW) { WINDOW } else { k % WINDOW };
            let mean = window / count as f64;
            return acc + mean / (2.0 * (k as f64) * (k as f64));
        }
        k += 1;
    }
}

/// Exact minimal periodic-extension energy `2 pi sum_{k != 0} |k| |c_k|^2`.
///
/// Errors with `NonPeriodicTrace` when the endpoint values differ (jump
/// discontinuities are not in H^{1/2}_P).
pub fn h12_periodic(trace: &TraceProfile) -> Result<f64> {
    let left = trace.values[0];
    let right = *trace.values.last().unwrap();
    let scale = trace.oscillation().max((left.abs() + right.abs()).max(1e-300));
    if (left - right).abs() > 1e-9 * scale {
        return Err(Error::NonPeriodicTrace { left, right });
    }
    let jumps = slope_jumps(trace, true);
    if jumps.is_empty() {
        return Ok(0.0);
    }
    let norm = 1.0 / (4.0 * PI.powi(3));
    if trace.is_uniform() {
        let n = trace.num_segments();
        // Exact phases: S_r depends on (r j) mod n.
        let mut weights = vec![0.0f64; n];
        let idx: Vec<usize> = jumps
            .iter()
            .map(|&(x, _)| (x * n as f64).round() as usize)
            .collect();
        for r in 1..=n {
            let (mut re, mut im) = (0.0, 0.0);
            for (&(_, dq), &j) in jumps.iter().zip(&idx) {
                let phase = -2.0 * PI * ((r * j) % n) as f64 / n as f64;
                re += dq * phase.cos();
                im += dq * phase.sin();
            }
            weights[r - 1] = (re * re + im * im).sqrt();
        }
        return Ok(norm * folded_sum(&weights));
    }
    let mass: f64 = jumps.iter().map(|&(_, dq)| dq.abs()).sum();
    let sum = direct_sum(
        |k| {
            let (mut re, mut im) = (0.0, 0.0);
            for &(x, dq) in &jumps {
                let phase = -2.0 * PI * (k as f64 * x).fract();
                re += dq * phase.cos();
                im += dq * phase.sin();
            }
            re * re + im * im
        },
        mass,
    );
    Ok(norm * sum)
}

/// Exact minimal free-boundary extension energy `sum_k (pi k / 2) a_k^2`
/// via the cosine series of the trace.
pub fn h12_neumann(trace: &TraceProfile) -> f64 {
    let jumps = slope_jumps(trace, false);
    let q_first = trace.slope(0);
    let q_last = trace.slope(trace.num_segments() - 1);
    if jumps.is_empty() && q_first == 0.0 {
        return 0.0;
    }
    let norm = 2.0 / PI.powi(3);
    if trace.is_uniform() {
        let n = trace.num_segments();
        let period = 2 * n;
        let idx: Vec<usize> = jumps
            .iter()
            .map(|&(x, _)| (x * n as f64).round() as usize)
            .collect();
        let mut weights = vec![0.0f64; period];
        for r in 1..=period {
            let mut e = q_first - if r % 2 == 0 { q_last } else { -q_last };
            for (&(_, dq), &j) in jumps.iter().zip(&idx) {
                let phase = PI * ((r * j) % period) as f64 / n as f64;
                e += dq * phase.cos();
            }
            weights[r - 1] = e.abs();
        }
        return norm * folded_sum(&weights);
    }
    let mass: f64 =
        jumps.iter().map(|&(_, dq)| dq.abs()).sum::<f64>() + q_first.abs() + q_last.abs();
    let sum = direct_sum(
        |k| {
            let mut e = q_first - if k % 2 == 0 { q_last } else { -q_last };
            for &(x, dq) in &jumps {
                e += dq * (PI * (k as f64 * x)).cos();
            }
            e * e
        },
        mass,
    );
    norm * sum
}

/// Even reflection of a trace onto (0,2), rescaled back to (0,1). Used as an
/// independent oracle: `h12_neumann(u) == h12_periodic(reflect(u)) / 2`.
pub fn reflect_even(trace: &TraceProfile) -> TraceProfile {
    let m = trace.breakpoints.len();
    let mut bp = Vec::with_capacity(2 * m - 1);
    let mut vals = Vec::with_capacity(2 * m - 1);
    for (b, v) in trace.breakpoints.iter().zip(&trace.values) {
        bp.push(b / 2.0);
        vals.push(*v);
    }
    for j in (0..m - 1).rev() {
        bp.push(1.0 - trace.breakpoints[j] / 2.0);
        vals.push(trace.values[j]);
    }
    TraceProfile { breakpoints: bp, values: vals }
}

/// Gagliardo double integral on (0,1)^2 (the Neumann form, equivalent to
/// `h12_neumann` up to fixed constants).
pub fn gagliardo_neumann(trace: &TraceProfile) -> f64 {
    let m = trace.num_segments();
    let seg = |j: usize| (trace.breakpoints[j], trace.breakpoints[j + 1]);
    let mut total = 0.0;
    // Same-segment blocks: the integrand is exactly q^2 there.
    for j in 0..m {
        let (a0, a1) = seg(j);
        let q = trace.slope(j);
        total += q * q * (a1 - a0) * (a1 - a0);
    }
    // Cross blocks (x2 factor for the two orders).
    for i in 0..m {
        let (a0, a1) = seg(i);
        let qa = trace.slope(i);
        let va = trace.values[i];
        for j in 0..m {
            if i == j {
                continue;
            }
            let (b0, b1) = seg(j);
            let inner = |z2: f64| {
                let u2 = trace.eval(z2);
                // Segment-i affine function extended to z2.
                let w = va + qa * (z2 - a0) - u2;
                let f = |t: f64| {
                    let mut v = qa * qa * t;
                    if w != 0.0 {
                        v += 2.0 * qa * w * t.abs().ln() - w * w / t;
                    }
                    v
                };
                let (t0, t1) = (a0 - z2, a1 - z2);
                if t0 == 0.0 || t1 == 0.0 {
                    // Shared endpoint with w = 0 by continuity.
                    qa * qa * (t1 - t0)
                } else {
                    f(t1) - f(t0)
                }
            };
            total += adaptive_simpson(inner, b0, b1, 1e-9, 1e-14);
        }
    }
    total
}

/// Gagliardo double integral of the 1-periodic extension, folded into the
/// exact kernel `pi^2 / sin^2(pi (z1 - z2))` on (0,1)^2.
pub fn gagliardo_periodic(trace: &TraceProfile) -> Result<f64> {
    let left = trace.values[0];
    let right = *trace.values.last().unwrap();
    let scale = trace.oscillation().max((left.abs() + right.abs()).max(1e-300));
    if (left - right).abs() > 1e-9 * scale {
        return Err(Error::NonPeriodicTrace { left, right });
    }
    let m = trace.num_segments();
    let lip = (0..m).map(|j| trace.slope(j).abs()).fold(0.0f64, f64::max);
    if lip == 0.0 {
        return Ok(0.0);
    }
    let kernel = |z1: f64, z2: f64| {
        let t = z1 - z2;
        let s = (PI * t).sin();
        let diff = trace.eval(z1) - trace.eval(z2);
        if s.abs() < 1e-9 {
            // Removable: near t = 0 (or +-1 by periodicity) diff ~ slope * s / pi.
            let q = lip;
            q * q
        } else {
            diff * diff * PI * PI / (s * s)
        }
    };
    let mut total = 0.0;
    for i in 0..m {
        let (a0, a1) = (trace.breakpoints[i], trace.breakpoints[i + 1]);
        for j in 0..m {
            let (b0, b1) = (trace.breakpoints[j], trace.breakpoints[j + 1]);
            let outer = |z2: f64| adaptive_simpson(|z1| kernel(z1, z2), a0, a1, 1e-7, 1e-13);
            total += adaptive_simpson(outer, b0, b1, 1e-7, 1e-13);
        }
    }
    Ok(total)
}

pub fn gagliardo(trace: &TraceProfile, bc: Bc) -> Result<f64> {
    match bc {
        Bc::Neumann => Ok(gagliardo_neumann(trace)),
        Bc::Periodic => gagliardo_periodic(trace),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn constant_trace_is_zero() {
        let t = TraceProfile::constant(3.5);
        assert_eq!(h12_periodic(&t).unwrap(), 0.0);
        assert_eq!(h12_neumann(&t), 0.0);
        assert_eq!(gagliardo_neumann(&t), 0.0);
        assert_eq!(gagliardo_periodic(&t).unwrap(), 0.0);
    }

    #[test]
    fn periodic_single_mode() {
        // cos(2 pi x): minimal extension energy pi.
        let t = TraceProfile::sample(|x| (2.0 * PI * x).cos(), 2048);
        assert_relative_eq!(h12_periodic(&t).unwrap(), PI, max_relative = 1e-4);
        // Amplitude and frequency scaling: a cos(2 pi k x) -> 2 pi k a^2 / 2 ... = pi k a^2.
        let t = TraceProfile::sample(|x| 0.3 * (2.0 * PI * 3.0 * x).cos(), 2048);
        assert_relative_eq!(h12_periodic(&t).unwrap(), PI * 3.0 * 0.09, max_relative = 1e-4);
    }

    #[test]
    fn neumann_single_mode() {
        // cos(pi k x): energy (pi k / 2) a^2.
        let t = TraceProfile::sample(|x| (PI * x).cos(), 2048);
        assert_relative_eq!(h12_neumann(&t), PI / 2.0, max_relative = 1e-4);
        let t = TraceProfile::sample(|x| 0.7 * (4.0 * PI * x).cos(), 2048);
        assert_relative_eq!(h12_neumann(&t), PI * 2.0 * 0.49, max_relative = 1e-4);
    }

    #[test]
    fn neumann_linear_trace_reference_value() {
        // u = theta x: sum over odd k of (pi k/2) (4 theta / pi^2 k^2)^2
        //            = 7 zeta(3) theta^2 / pi^3.
        let zeta3 = (1..200_000).map(|k| 1.0 / (k as f64).powi(3)).sum::<f64>();
        let expect = 7.0 * zeta3 / PI.powi(3);
        for theta in [0.05, 0.3, 0.5] {
            let t = TraceProfile::new(vec![0.0, 1.0], vec![0.0, theta]).unwrap();
            assert_relative_eq!(h12_neumann(&t), expect * theta * theta, max_relative = 1e-9);
        }
    }

    #[test]
    fn non_periodic_trace_rejected() {
        let t = TraceProfile::new(vec![0.0, 1.0], vec![0.0, 0.3]).unwrap();
        assert!(matches!(h12_periodic(&t), Err(Error::NonPeriodicTrace { .. })));
        assert!(gagliardo_periodic(&t).is_err());
    }

    #[test]
    fn translation_invariance() {
        let t = TraceProfile::sample(|x| (2.0 * PI * x).cos() + 0.3 * (6.0 * PI * x).cos(), 512);
        let s = t.shifted(17.0);
        assert_relative_eq!(
            h12_periodic(&t).unwrap(),
            h12_periodic(&s).unwrap(),
            max_relative = 1e-12
        );
        assert_relative_eq!(h12_neumann(&t), h12_neumann(&s), max_relative = 1e-12);
    }

    #[test]
    fn uniform_and_direct_paths_agree() {
        // Same trace, uniform grid vs slightly perturbed copy of the same
        // geometry expressed with non-uniform breakpoints.
        let t = TraceProfile::sample(|x| (2.0 * PI * x).sin().abs(), 256);
        let mut bp = t.breakpoints.clone();
        // Insert a redundant midpoint so the grid is no longer uniform.
        bp.push(1.0 / 512.0);
        bp.sort_by(|a, b| a.partial_cmp(b).unwrap());
        let vals: Vec<f64> = bp.iter().map(|&x| t.eval(x)).collect();
        let t2 = TraceProfile::new(bp, vals).unwrap();
        assert_relative_eq!(
            h12_periodic(&t).unwrap(),
            h12_periodic(&t2).unwrap(),
            max_relative = 1e-8
        );
        assert_relative_eq!(h12_neumann(&t), h12_neumann(&t2), max_relative = 1e-8);
    }

    #[test]
    fn reflection_identity_links_neumann_and_periodic() {
        // [u]_N^2 = [reflected u]_P^2 / 2, exactly, for every trace.
        let cases = [
            TraceProfile::new(vec![0.0, 1.0], vec![0.0, 0.25]).unwrap(),
            TraceProfile::new(vec![0.0, 0.25, 1.0], vec![0.0, -0.1875, 0.0]).unwrap(),
            TraceProfile::sample(|x| (PI * x).cos() + 0.2 * (3.0 * PI * x).cos(), 200),
        ];
        for t in &cases {
            let refl = reflect_even(t);
            assert_relative_eq!(
                h12_neumann(t),
                h12_periodic(&refl).unwrap() / 2.0,
                max_relative = 1e-8
            );
        }
    }

    #[test]
    fn periodic_gagliardo_is_two_pi_times_spectral() {
        let cases = [
            TraceProfile::new(vec![0.0, 0.25, 1.0], vec![0.0, -0.1875, 0.0]).unwrap(),
            TraceProfile::sample(|x| (2.0 * PI * x).cos(), 48),
            TraceProfile::sample(|x| 0.4 * (4.0 * PI * x).sin() + 0.1 * (2.0 * PI * x).cos(), 64),
        ];
        for t in &cases {
            let g = gagliardo_periodic(t).unwrap();
            let s = h12_periodic(t).unwrap();
            assert_relative_eq!(g, 2.0 * PI * s, max_relative = 2e-3);
        }
    }

    #[test]
    fn single_laminate_trace_asymptotics() {
        // Periodic: ~ theta^2 ln(1/theta); Neumann: ~ theta^2 (no log).
        for k in 2..=10 {
            let theta = 0.5f64.powi(k);
            let t = TraceProfile::new(
                vec![0.0, theta, 1.0],
                vec![0.0, (theta - 1.0) * theta, 0.0],
            )
            .unwrap();
            let p = h12_periodic(&t).unwrap();
            let n = h12_neumann(&t);
            let rp = p / (theta * theta * (1.0 / theta).ln());
            let rn = n / (theta * theta);
            assert!(rp > 0.2 && rp < 0.8, "rp = {rp} at theta = {theta}");
            assert!(rn > 0.3 && rn < 1.2, "rn = {rn} at theta = {theta}");
            assert!(n < p, "Neumann seminorm must not exceed periodic one");
        }
    }
}
