//! Grid discretization of the admissible class: M columns x K rows of slope
//! bits, reconstructed by cumulative sums with `u(., 0) = 0`. This is the
//! independent energy oracle: finite-difference elastic term, interface-count
//! surface term, spectral trace energy for the austenite.

use crate::error::{Error, Result};
use crate::field::{MicrostructureField, StripKind};
use crate::params::{Bc, ModelParams};
use crate::seminorm::{h12_neumann, h12_periodic};
use crate::trace::TraceProfile;

#[derive(Debug, Clone, PartialEq)]
pub struct GridField {
    pub m: usize,
    pub k: usize,
    pub theta: f64,
    pub l: f64,
    pub bc: Bc,
    /// `bits[i * k + j]` = true when cell (column i, row j) carries the
    /// minority slope `theta - 1`.
    bits: Vec<bool>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GridEnergy {
    pub elastic: f64,
    pub surface: f64,
    pub austenite: f64,
    pub total: f64,
}

impl GridField {
    pub fn new(m: usize, k: usize, theta: f64, l: f64, bc: Bc, bits: Vec<bool>) -> Result<Self> {
        if m < 2 || k < 2 || bits.len() != m * k {
            return Err(Error::FieldFormat("grid dimensions do not match bit count".into()));
        }
        if !(theta > 0.0 && theta <= 0.5) || !(l > 0.0 && l.is_finite()) {
            return Err(Error::FieldFormat("invalid grid parameters".into()));
        }
        let g = Self { m, k, theta, l, bc, bits };
        if bc == Bc::Periodic {
            let target = g.periodic_minority_count()?;
            for i in 0..m {
                let c = g.minority_count(i);
                if c != target {
                    return Err(Error::Inadmissible(format!(
                        "column {i} has {c} minority cells, class requires {target}"
                    )));
                }
            }
        }
        Ok(g)
    }

    /// Periodic class on the grid needs `theta K` integral so the trace is
    /// periodic-compatible.
    pub fn periodic_minority_count_for(theta: f64, k: usize) -> Result<usize> {
        let c = theta * k as f64;
        if (c - c.round()).abs() > 1e-9 {
            return Err(Error::Inadmissible(format!(
                "theta K = {c} is not an integer; periodic grid class undefined"
            )));
        }
        Ok(c.round() as usize)
    }

    fn periodic_minority_count(&self) -> Result<usize> {
        Self::periodic_minority_count_for(self.theta, self.k)
    }

    pub fn bit(&self, i: usize, j: usize) -> bool {
        self.bits[i * self.k + j]
    }

    pub fn set_bit(&mut self, i: usize, j: usize, v: bool) {
        self.bits[i * self.k + j] = v;
    }

    pub fn bits(&self) -> &[bool] {
        &self.bits
    }

    pub fn minority_count(&self, i: usize) -> usize {
        (0..self.k).filter(|&j| self.bit(i, j)).count()
    }

    /// Column profile values at the row boundaries j/K, j = 0..=K.
    pub fn column_values(&self, i: usize) -> Vec<f64> {
        let mut v = Vec::with_capacity(self.k + 1);
        let mut acc = 0.0;
        v.push(acc);
        for j in 0..self.k {
            let slope = if self.bit(i, j) { self.theta - 1.0 } else { self.theta };
            acc += slope / self.k as f64;
            v.push(acc);
        }
        v
    }

    pub fn trace_profile(&self) -> TraceProfile {
        let values = self.column_values(self.m - 1);
        let breakpoints = (0..=self.k).map(|j| j as f64 / self.k as f64).collect();
        TraceProfile { breakpoints, values }
    }

    /// Exact integral of the squared column difference divided by the column
    /// width (the finite-difference elastic term between columns i and i+1).
    pub fn pair_elastic(&self, i: usize) -> f64 {
        let a = self.column_values(i);
        let b = self.column_values(i + 1);
        let dx = self.l / self.m as f64;
        let mut acc = 0.0;
        for j in 0..self.k {
            let d0 = b[j] - a[j];
            let d1 = b[j + 1] - a[j + 1];
            acc += (d0 * d0 + d0 * d1 + d1 * d1) / 3.0 / self.k as f64;
        }
        acc / dx
    }

    /// Interface count of a column times the column width.
    pub fn column_surface(&self, i: usize) -> f64 {
        let mut jumps = 0usize;
        for j in 0..self.k - 1 {
            if self.bit(i, j) != self.bit(i, j + 1) {
                jumps += 1;
            }
        }
        jumps as f64 * self.l / self.m as f64
    }

    pub fn austenite(&self, mu: f64) -> Result<f64> {
        let t = self.trace_profile();
        Ok(mu * match self.bc {
            Bc::Neumann => h12_neumann(&t),
            Bc::Periodic => h12_periodic(&t)?,
        })
    }

    pub fn energy(&self, params: &ModelParams) -> Result<GridEnergy> {
        let elastic: f64 = (0..self.m - 1).map(|i| self.pair_elastic(i)).sum();
        let surface: f64 =
            params.eps * (0..self.m).map(|i| self.column_surface(i)).sum::<f64>();
        let austenite = self.austenite(params.mu)?;
        Ok(GridEnergy { elastic, surface, austenite, total: elastic + surface + austenite })
    }

    /// Projects a piecewise-affine field onto the grid. For the periodic
    /// class the `round(theta K)` cells with the largest minority mass are
    /// selected per column, which always yields a feasible point.
    pub fn project(field: &MicrostructureField, m: usize, k: usize, params: &ModelParams) -> Result<Self> {
        let theta = field.theta;
        let l = field.depth;
        let mut bits = vec![false; m * k];
        for i in 0..m {
            let x = -l + (i as f64 + 0.5) * l / m as f64;
            let masses = column_cell_minority_mass(field, x, k);
            match params.bc {
                Bc::Neumann => {
                    for (j, &mass) in masses.iter().enumerate() {
                        bits[i * k + j] = mass > 0.5 / k as f64;
                    }
                }
                Bc::Periodic => {
                    let target = Self::periodic_minority_count_for(theta, k)?;
                    let mut order: Vec<usize> = (0..k).collect();
                    order.sort_by(|&a, &b| {
                        masses[b].partial_cmp(&masses[a]).unwrap().then(a.cmp(&b))
                    });
                    for &j in order.iter().take(target) {
                        bits[i * k + j] = true;
                    }
                }
            }
        }
        Self::new(m, k, theta, l, params.bc, bits)
    }
}

/// Minority mass of each row cell of the column at `x`.
fn column_cell_minority_mass(field: &MicrostructureField, x: f64, k: usize) -> Vec<f64> {
    let strip = field
        .strips
        .iter()
        .find(|s| s.x_left <= x && x <= s.x_right)
        .unwrap_or_else(|| field.strips.last().unwrap());
    let mut masses = vec![0.0f64; k];
    match &strip.kind {
        StripKind::Laminar { bottom_slope, interfaces } => {
            let f = ((x - strip.x_left) / strip.width()).clamp(0.0, 1.0);
            let p = field.period();
            // Minority intervals within one period, replicated over periods.
            let mut edges: Vec<f64> = interfaces.iter().map(|i| i.at(f)).collect();
            edges.insert(0, 0.0);
            edges.push(p);
            let mut minority = *bottom_slope == crate::field::SlopeSign::Minority;
            let mut intervals: Vec<(f64, f64)> = Vec::new();
            for w in edges.windows(2) {
                if minority && w[1] > w[0] {
                    intervals.push((w[0], w[1]));
                }
                minority = !minority;
            }
            for period in 0..field.period_count {
                let base = period as f64 * p;
                for &(a, b) in &intervals {
                    let (a, b) = (base + a, base + b);
                    let j0 = ((a * k as f64).floor() as usize).min(k - 1);
                    let j1 = ((b * k as f64).ceil() as usize).min(k);
                    for (j, mass) in masses.iter_mut().enumerate().take(j1).skip(j0) {
                        let (ca, cb) = (j as f64 / k as f64, (j + 1) as f64 / k as f64);
                        let ov = (b.min(cb) - a.max(ca)).max(0.0);
                        *mass += ov;
                    }
                }
            }
        }
        StripKind::Blend { .. } => {
            // Sample the blended slope; only used when projecting truncated
            // fields, which the oracle comparisons avoid.
            for (j, mass) in masses.iter_mut().enumerate() {
                let mut cnt = 0usize;
                for s in 0..9 {
                    let y = (j as f64 + (s as f64 + 0.5) / 9.0) / k as f64;
                    if field.slope_at(x, y) < field.theta - 0.5 {
                        cnt += 1;
                    }
                }
                *mass = cnt as f64 / 9.0 / k as f64;
            }
        }
    }
    masses
}
