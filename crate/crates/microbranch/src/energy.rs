//! Term-by-term evaluation of the martensite-strip energy: exact elastic and
//! surface terms from the field geometry, austenite both "as built"
//! (closed-form integrals of the stored extension) and "optimal" (minimal
//! trace-extension energy via the spectral seminorms).

use serde::Serialize;

use crate::error::{Error, Result};
use crate::field::{Austenite, MicrostructureField};
use crate::params::{Bc, ModelParams};
use crate::seminorm::{h12_neumann, h12_periodic};
use crate::trace::TraceProfile;

pub use crate::seminorm::{gagliardo, gagliardo_neumann, gagliardo_periodic};

#[derive(Debug, Clone, Copy, Serialize)]
pub struct EnergyBreakdown {
    pub martensite_elastic: f64,
    pub surface: f64,
    pub austenite_optimal: f64,
    pub austenite_asbuilt: f64,
    pub total_optimal: f64,
    pub total_asbuilt: f64,
}

impl EnergyBreakdown {
    pub fn terms(&self) -> Vec<(&'static str, f64)> {
        vec![
            ("martensite_elastic", self.martensite_elastic),
            ("surface", self.surface),
            ("austenite_optimal", self.austenite_optimal),
            ("austenite_asbuilt", self.austenite_asbuilt),
            ("total_optimal", self.total_optimal),
            ("total_asbuilt", self.total_asbuilt),
        ]
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("term,value\n");
        for (k, v) in self.terms() {
            out.push_str(&format!("{},{}\n", k, crate::specs::fmt_g17(v)));
        }
        out
    }
}

/// Exact `int (d1 u)^2` over the martensite strip.
pub fn martensite_elastic(field: &MicrostructureField) -> Result<f64> {
    let v = field.elastic_martensite();
    if !v.is_finite() {
        return Err(Error::NonFiniteEnergy { term: "martensite_elastic" });
    }
    Ok(v)
}

/// `eps` times the surface total variation (unit jump times horizontal
/// projection, summed over all interfaces).
pub fn surface_energy(field: &MicrostructureField, eps: f64) -> f64 {
    eps * field.surface_tv()
}

/// Exact `int |grad u|^2` of the stored austenite extension over one column,
/// i.e. `x2`-integrated gradient-squared density at abscissa `x >= 0`.
pub fn austenite_density(field: &MicrostructureField, x: f64) -> f64 {
    let theta = field.theta;
    match &field.austenite {
        Austenite::Zero => 0.0,
        Austenite::UniformRamp => {
            if x >= 1.0 {
                0.0
            } else {
                theta * theta * (1.0 / 3.0 + (1.0 - x) * (1.0 - x))
            }
        }
        Austenite::SingleLamFan => {
            if x >= 1.0 {
                0.0
            } else {
                let ray = (1.0 - theta) * x + theta;
                let g = 1.0 / ray;
                theta
                    * theta
                    * ((1.0 - theta) * (1.0 - theta) * g / 3.0
                        + (1.0 - g) * (1.0 - g) / g
                        + (1.0 - ray))
            }
        }
        Austenite::TsbFan { h } => {
            let n = field.period_count as f64;
            let xs = n * x;
            if xs >= (1.0 - h) / 2.0 {
                0.0
            } else {
                let s = 2.0 * xs + h;
                theta * theta * (4.0 / (3.0 * s) - 1.0)
            }
        }
    }
}

/// `mu int_{x1 > 0} |grad u|^2` of the stored extension, in closed form.
pub fn austenite_asbuilt(field: &MicrostructureField, mu: f64) -> f64 {
    let theta = field.theta;
    mu * match &field.austenite {
        Austenite::Zero => 0.0,
        Austenite::UniformRamp => 2.0 * theta * theta / 3.0,
        Austenite::SingleLamFan => {
            let t = theta;
            let log = (1.0 / t).ln();
            let fan = t * t / (1.0 - t)
                * (((1.0 - t) * (1.0 - t) / 3.0 + 1.0) * log + (1.0 - t * t) / 2.0
                    - 2.0 * (1.0 - t));
            fan + t * t * (1.0 - t) / 2.0
        }
        Austenite::TsbFan { h } => {
            let n = field.period_count as f64;
            theta * theta / (2.0 * n) * (4.0 / 3.0 * (1.0 / h).ln() - (1.0 - h))
        }
    }
}

/// Minimal extension energy of the trace, per boundary condition.
///
/// For multi-period fields the per-period periodic seminorm is used (exact
/// for periodic bc; for Neumann it is the energy of the periodic-type
/// extension the constructions build, an upper bound for the free-boundary
/// optimum).
pub fn austenite_optimal(field: &MicrostructureField, mu: f64) -> Result<f64> {
    let n = field.period_count;
    let unit: TraceProfile = match &field.limit_trace {
        Some(t) => t.clone(),
        None => field.trace_period_unit(),
    };
    let value = if n == 1 {
        match field.bc {
            Bc::Neumann => h12_neumann(&unit),
            Bc::Periodic => h12_periodic(&unit)?,
        }
    } else {
        h12_periodic(&unit)? / n as f64
    };
    if !value.is_finite() {
        return Err(Error::NonFiniteEnergy { term: "austenite_optimal" });
    }
    Ok(mu * value)
}

/// Full breakdown of the strip energy for a field and matching parameters.
pub fn total_energy_km(field: &MicrostructureField, params: &ModelParams) -> Result<EnergyBreakdown> {
    if field.bc != params.bc {
        return Err(Error::Inadmissible(format!(
            "field bc {} does not match parameter bc {}",
            field.bc, params.bc
        )));
    }
    if (field.theta - params.theta).abs() > 1e-12 {
        return Err(Error::Inadmissible("field theta does not match parameters".into()));
    }
    if (field.depth - params.l).abs() > 1e-9 * params.l {
        return Err(Error::Inadmissible("field depth does not match L".into()));
    }
    let elastic = martensite_elastic(field)?;
    let surface = surface_energy(field, params.eps);
    let optimal = austenite_optimal(field, params.mu)?;
    let asbuilt = austenite_asbuilt(field, params.mu);
    let bd = EnergyBreakdown {
        martensite_elastic: elastic,
        surface,
        austenite_optimal: optimal,
        austenite_asbuilt: asbuilt,
        total_optimal: elastic + surface + optimal,
        total_asbuilt: elastic + surface + asbuilt,
    };
    if !bd.total_asbuilt.is_finite() || !bd.total_optimal.is_finite() {
        return Err(Error::NonFiniteEnergy { term: "total" });
    }
    Ok(bd)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::constructions::{build_single_laminate, build_tsb, build_uniform};
    use crate::params::ConstructionParams;
    use approx::assert_relative_eq;

    /// Independent oracle: integrate |grad u|^2 of the stored extension by
    /// central finite differences on a fine tensor grid.
    fn asbuilt_fd_oracle(field: &MicrostructureField, x_max: f64, nx: usize, ny: usize) -> f64 {
        let hx = x_max / nx as f64;
        let hy = 1.0 / ny as f64;
        let d = 1e-6;
        let mut total = 0.0;
        for i in 0..nx {
            let x = (i as f64 + 0.5) * hx;
            for j in 0..ny {
                let y = (j as f64 + 0.5) * hy;
                let ux = (field.eval_austenite(x + d, y) - field.eval_austenite(x - d, y))
                    / (2.0 * d);
                let uy = (field.eval_austenite(x, y + d) - field.eval_austenite(x, y - d))
                    / (2.0 * d);
                total += (ux * ux + uy * uy) * hx * hy;
            }
        }
        total
    }

    #[test]
    fn uniform_total_asbuilt_is_two_thirds_mu_theta_sq() {
        let mut rng = crate::test_rng(77);
        use rand::Rng;
        for _ in 0..20 {
            let theta = rng.gen_range(0.01..=0.5);
            let mu = 10f64.powf(rng.gen_range(-3.0..2.0));
            let f = build_uniform(theta, rng.gen_range(0.2..3.0)).unwrap();
            let p = ModelParams::new(1e-6, mu, f.depth, theta, Bc::Neumann).unwrap();
            let bd = total_energy_km(&f, &p).unwrap();
            assert_relative_eq!(
                bd.total_asbuilt,
                2.0 / 3.0 * mu * theta * theta,
                max_relative = 1e-12
            );
            assert!(bd.austenite_optimal <= bd.austenite_asbuilt * (1.0 + 1e-9));
        }
    }

    #[test]
    fn single_laminate_asbuilt_matches_fd_oracle() {
        for theta in [0.5, 0.25, 0.1] {
            let f = build_single_laminate(theta, 1.0).unwrap();
            let closed = austenite_asbuilt(&f, 1.0);
            let fd = asbuilt_fd_oracle(&f, 1.0, 600, 600);
            assert_relative_eq!(closed, fd, max_relative = 2e-2);
            assert!(closed > 0.0);
        }
    }

    #[test]
    fn tsb_fan_asbuilt_matches_fd_oracle() {
        let cp = ConstructionParams::new(2, 0.5, 1.0, 0.2, 1.0, Bc::Periodic).unwrap();
        let f = build_tsb(&cp).unwrap();
        let closed = austenite_asbuilt(&f, 1.0);
        let support = (1.0 - 0.5) / (2.0 * 2.0);
        let fd = asbuilt_fd_oracle(&f, support, 500, 1000);
        assert_relative_eq!(closed, fd, max_relative = 2e-2);
    }

    #[test]
    fn single_laminate_energy_scaling_band() {
        // J(u_SL) <= C theta^2 (eps_hat L + mu ln(1/theta)) with one C.
        let mut worst: f64 = 0.0;
        for k in 1..=8 {
            let theta = 0.5f64.powi(k);
            for (eps_hat, mu) in [(1e-6, 1.0), (1e-2, 0.1), (1.0, 1e-3)] {
                let p = ModelParams::with_eps_hat_km(eps_hat, mu, 1.0, theta, Bc::Periodic)
                    .unwrap();
                let f = build_single_laminate(theta, 1.0).unwrap();
                let bd = total_energy_km(&f, &p).unwrap();
                let bound = theta * theta * (eps_hat + mu * (1.0 / theta).ln());
                worst = worst.max(bd.total_asbuilt / bound);
            }
        }
        assert!(worst < 2.0, "C = {worst} drifted");
    }

    #[test]
    fn optimal_never_exceeds_asbuilt() {
        let cases: Vec<MicrostructureField> = vec![
            build_uniform(0.3, 1.0).unwrap(),
            build_single_laminate(0.25, 1.0).unwrap(),
            build_tsb(&ConstructionParams::new(2, 0.6, 1.0, 0.2, 1.0, Bc::Periodic).unwrap())
                .unwrap(),
            build_tsb(&ConstructionParams::new(1, 1.0, 1.0, 0.25, 1.0, Bc::Neumann).unwrap())
                .unwrap(),
        ];
        for f in &cases {
            let opt = austenite_optimal(f, 1.0).unwrap();
            let asb = austenite_asbuilt(f, 1.0);
            assert!(
                opt <= asb * (1.0 + 1e-9) + 1e-15,
                "optimal {opt} > as-built {asb} for {:?}",
                f.austenite
            );
        }
    }

    #[test]
    fn translation_invariance_of_breakdown() {
        // Adding a constant to u changes nothing: the representation stores
        // slopes and interfaces only, so shift the trace directly.
        let f = build_single_laminate(0.25, 1.0).unwrap();
        let t = f.trace_at_interface();
        let shifted = t.shifted(3.25);
        assert_relative_eq!(
            h12_periodic(&t).unwrap(),
            h12_periodic(&shifted).unwrap(),
            max_relative = 1e-12
        );
    }

    #[test]
    fn bc_mismatch_rejected() {
        let f = build_single_laminate(0.25, 1.0).unwrap();
        let p = ModelParams::new(1e-6, 1.0, 1.0, 0.25, Bc::Neumann).unwrap();
        assert!(total_energy_km(&f, &p).is_err());
    }
}
