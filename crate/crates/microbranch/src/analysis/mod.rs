//! Phase diagrams, scaling-exponent fits, construction-vs-prediction audits,
//! and the brute-force minimization oracle.

pub mod anneal;
pub mod grid;
mod svg;

pub use anneal::{anneal, exhaustive_restricted, AnnealConfig, AnnealResult};
pub use grid::{GridEnergy, GridField};
pub use svg::phase_diagram_svg;

use crate::constructions::{build_single_laminate, build_tsb, build_uniform};
use crate::energy::{total_energy_km, EnergyBreakdown};
use crate::error::{Error, Result};
use crate::field::MicrostructureField;
use crate::params::{
    construction_params_for, scaling_km, scaling_plastic, Bc, ModelParams, Regime,
    RegimePrediction,
};
use crate::specs::{fmt_g17, RangeSpec};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SweepModel {
    Km,
    Plastic,
}

/// A two-axis (mu, eps_hat) sweep at fixed theta and L.
#[derive(Debug, Clone)]
pub struct SweepSpec {
    pub model: SweepModel,
    pub bc: Bc,
    pub theta: f64,
    pub l: f64,
    pub mu_range: RangeSpec,
    pub eps_hat_range: RangeSpec,
}

#[derive(Debug, Clone, Copy)]
pub struct PhasePoint {
    pub mu: f64,
    pub eps_hat: f64,
    pub regime: Regime,
    pub value: f64,
}

/// Closed-form regime map over the sweep window; row order is mu-major then
/// eps_hat, matching the CSV layout.
pub fn phase_diagram(spec: &SweepSpec) -> Result<Vec<PhasePoint>> {
    if !(spec.theta > 0.0 && spec.theta <= 0.5) {
        return Err(Error::InvalidParameter {
            name: "theta",
            value: spec.theta,
            reason: "must lie in (0, 1/2]",
        });
    }
    let mut out = Vec::with_capacity(spec.mu_range.count * spec.eps_hat_range.count);
    for &mu in &spec.mu_range.samples() {
        for &eps_hat in &spec.eps_hat_range.samples() {
            let (prediction, params) = match spec.model {
                SweepModel::Km => {
                    let p =
                        ModelParams::with_eps_hat_km(eps_hat, mu, spec.l, spec.theta, spec.bc)?;
                    (scaling_km(&p)?, p)
                }
                SweepModel::Plastic => {
                    let p = ModelParams::with_eps_hat_plastic(
                        eps_hat, mu, spec.l, spec.theta, spec.bc,
                    )?;
                    (scaling_plastic(&p)?, p)
                }
            };
            let _ = params;
            out.push(PhasePoint { mu, eps_hat, regime: prediction.regime, value: prediction.value });
        }
    }
    Ok(out)
}

pub fn phase_diagram_csv(points: &[PhasePoint]) -> String {
    let mut out = String::from("mu,eps_hat,regime,value\n");
    for p in points {
        out.push_str(&format!(
            "{},{},{},{}\n",
            fmt_g17(p.mu),
            fmt_g17(p.eps_hat),
            p.regime.label(),
            fmt_g17(p.value)
        ));
    }
    out
}

/// Number of regime-label changes along each grid line of the map.
pub fn max_label_changes(points: &[PhasePoint], nx: usize, ny: usize) -> usize {
    let at = |i: usize, j: usize| points[i * ny + j].regime;
    let mut worst = 0usize;
    for i in 0..nx {
        let mut changes = 0;
        for j in 1..ny {
            if at(i, j) != at(i, j - 1) {
                changes += 1;
            }
        }
        worst = worst.max(changes);
    }
    for j in 0..ny {
        let mut changes = 0;
        for i in 1..nx {
            if at(i, j) != at(i - 1, j) {
                changes += 1;
            }
        }
        worst = worst.max(changes);
    }
    worst
}

/// Construction family whose energy is fitted against a parameter sweep.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Family {
    Uniform,
    SingleLaminate,
    Laminate,
    Branching,
    TruncatedBranching,
    TwoScaleBranching,
}

impl Family {
    pub fn parse(s: &str) -> Result<Self> {
        Ok(match s.to_ascii_lowercase().as_str() {
            "uniform" => Family::Uniform,
            "single-laminate" | "single_laminate" => Family::SingleLaminate,
            "laminate" => Family::Laminate,
            "branching" => Family::Branching,
            "truncated-branching" | "truncated_branching" => Family::TruncatedBranching,
            "tsb" | "two-scale-branching" => Family::TwoScaleBranching,
            _ => {
                return Err(Error::InvalidParameter {
                    name: "family",
                    value: f64::NAN,
                    reason: "unknown construction family",
                })
            }
        })
    }

    pub fn label(&self) -> &'static str {
        match self {
            Family::Uniform => "uniform",
            Family::SingleLaminate => "single-laminate",
            Family::Laminate => "laminate",
            Family::Branching => "branching",
            Family::TruncatedBranching => "truncated-branching",
            Family::TwoScaleBranching => "tsb",
        }
    }

    /// Builds the family member with regime-optimal internal parameters.
    pub fn build(&self, params: &ModelParams) -> Result<MicrostructureField> {
        if !self.admissible(params.bc) {
            return Err(Error::Inadmissible(format!(
                "family {} is not admissible for bc {}",
                self.label(),
                params.bc
            )));
        }
        let mut field = match self {
            Family::Uniform => build_uniform(params.theta, params.l)?,
            Family::SingleLaminate => build_single_laminate(params.theta, params.l)?,
            Family::Laminate => build_tsb(&construction_params_for(Regime::Laminate, params)?)?,
            Family::Branching => build_tsb(&construction_params_for(Regime::Branching, params)?)?,
            Family::TruncatedBranching => {
                build_tsb(&construction_params_for(Regime::TruncatedBranching, params)?)?
            }
            Family::TwoScaleBranching => {
                build_tsb(&construction_params_for(Regime::TwoScaleBranching, params)?)?
            }
        };
        // Periodic patterns are admissible in the Neumann class too; evaluate
        // them under the caller's boundary condition.
        field.bc = params.bc;
        Ok(field)
    }

    /// Whether the family is admissible for the boundary condition.
    pub fn admissible(&self, bc: Bc) -> bool {
        match self {
            // theta x2 is never periodic in x2.
            Family::Uniform => bc == Bc::Neumann,
            _ => true,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum VariedParam {
    EpsHat,
    Mu,
}

#[derive(Debug, Clone)]
pub struct FitSpec {
    pub family: Family,
    pub bc: Bc,
    pub theta: f64,
    pub l: f64,
    /// Fixed value of the parameter that is not varied.
    pub fixed_mu: f64,
    pub fixed_eps_hat: f64,
    pub varied: VariedParam,
    pub range: RangeSpec,
}

#[derive(Debug, Clone)]
pub struct FitPoint {
    pub param: f64,
    pub breakdown: EnergyBreakdown,
}

#[derive(Debug, Clone)]
pub struct FitResult {
    pub family: Family,
    pub slope: f64,
    pub intercept: f64,
    pub residual_rms: f64,
    pub points: Vec<FitPoint>,
}

/// Least-squares slope of `log total_optimal` against the log of the varied
/// parameter, with the family's internal parameters re-optimized per point.
pub fn scaling_fit(spec: &FitSpec) -> Result<FitResult> {
    let samples = spec.range.samples();
    if samples.len() < 3 {
        return Err(Error::InvalidParameter {
            name: "range",
            value: samples.len() as f64,
            reason: "a fit needs at least 3 sweep points",
        });
    }
    if !spec.family.admissible(spec.bc) {
        return Err(Error::Inadmissible(format!(
            "family {} is not admissible for bc {}",
            spec.family.label(),
            spec.bc
        )));
    }
    let mut points = Vec::with_capacity(samples.len());
    for &v in &samples {
        let (mu, eps_hat) = match spec.varied {
            VariedParam::EpsHat => (spec.fixed_mu, v),
            VariedParam::Mu => (v, spec.fixed_eps_hat),
        };
        let params = ModelParams::with_eps_hat_km(eps_hat, mu, spec.l, spec.theta, spec.bc)?;
        let field = spec.family.build(&params)?;
        let breakdown = total_energy_km(&field, &params)?;
        points.push(FitPoint { param: v, breakdown });
    }
    let xs: Vec<f64> = points.iter().map(|p| p.param.ln()).collect();
    let ys: Vec<f64> = points.iter().map(|p| p.breakdown.total_optimal.max(1e-300).ln()).collect();
    let n = xs.len() as f64;
    let sx: f64 = xs.iter().sum();
    let sy: f64 = ys.iter().sum();
    let sxx: f64 = xs.iter().map(|x| x * x).sum();
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| x * y).sum();
    let denom = n * sxx - sx * sx;
    let slope = (n * sxy - sx * sy) / denom;
    let intercept = (sy - slope * sx) / n;
    let residual_rms = (xs
        .iter()
        .zip(&ys)
        .map(|(x, y)| {
            let r = y - (intercept + slope * x);
            r * r
        })
        .sum::<f64>()
        / n)
        .sqrt();
    Ok(FitResult { family: spec.family, slope, intercept, residual_rms, points })
}

pub fn fit_csv(spec: &FitSpec, fit: &FitResult) -> String {
    let name = match spec.varied {
        VariedParam::EpsHat => "eps_hat",
        VariedParam::Mu => "mu",
    };
    let mut out =
        String::from("param,value,energy_total,energy_elastic,energy_surface,energy_austenite\n");
    for p in &fit.points {
        out.push_str(&format!(
            "{},{},{},{},{},{}\n",
            name,
            fmt_g17(p.param),
            fmt_g17(p.breakdown.total_optimal),
            fmt_g17(p.breakdown.martensite_elastic),
            fmt_g17(p.breakdown.surface),
            fmt_g17(p.breakdown.austenite_optimal)
        ));
    }
    out
}

#[derive(Debug, Clone)]
pub struct ComparisonRow {
    pub family: Family,
    pub energy: EnergyBreakdown,
}

#[derive(Debug, Clone)]
pub struct Comparison {
    pub prediction: RegimePrediction,
    pub rows: Vec<ComparisonRow>,
    pub best_family: Family,
    pub best_energy: f64,
    /// best construction energy / predicted value.
    pub ratio: f64,
}

/// Energies of all applicable constructions (regime-optimal internal
/// parameters) against the scaling prediction.
pub fn compare_constructions(params: &ModelParams) -> Result<Comparison> {
    let prediction = scaling_km(params)?;
    let families = [
        Family::Uniform,
        Family::SingleLaminate,
        Family::Laminate,
        Family::Branching,
        Family::TruncatedBranching,
        Family::TwoScaleBranching,
    ];
    let mut rows = Vec::new();
    for f in families {
        if !f.admissible(params.bc) {
            continue;
        }
        let field = f.build(params)?;
        let energy = total_energy_km(&field, params)?;
        rows.push(ComparisonRow { family: f, energy });
    }
    let best = rows
        .iter()
        .min_by(|a, b| a.energy.total_optimal.partial_cmp(&b.energy.total_optimal).unwrap())
        .expect("at least one construction applies");
    Ok(Comparison {
        best_family: best.family,
        best_energy: best.energy.total_optimal,
        ratio: best.energy.total_optimal / prediction.value,
        prediction,
        rows,
    })
}

pub fn comparison_csv(c: &Comparison) -> String {
    let mut out = String::from("construction,total_optimal,elastic,surface,austenite_optimal\n");
    for row in &c.rows {
        out.push_str(&format!(
            "{},{},{},{},{}\n",
            row.family.label(),
            fmt_g17(row.energy.total_optimal),
            fmt_g17(row.energy.martensite_elastic),
            fmt_g17(row.energy.surface),
            fmt_g17(row.energy.austenite_optimal)
        ));
    }
    out.push_str(&format!(
        "prediction,{},,,\n",
        fmt_g17(c.prediction.value)
    ));
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn spec(theta: f64, bc: Bc, mu: &str, eh: &str) -> SweepSpec {
        SweepSpec {
            model: SweepModel::Km,
            bc,
            theta,
            l: 1.0,
            mu_range: RangeSpec::parse(mu).unwrap(),
            eps_hat_range: RangeSpec::parse(eh).unwrap(),
        }
    }

    #[test]
    fn phase_point_example() {
        let s = spec(0.5, Bc::Neumann, "1", "1e-6");
        let pts = phase_diagram(&s).unwrap();
        assert_eq!(pts.len(), 1);
        assert_eq!(pts[0].regime, Regime::Branching);
    }

    #[test]
    fn map_is_deterministic() {
        let s = spec(0.05, Bc::Neumann, "1e-4:1:12", "1e-10:1e-2:12");
        let a = phase_diagram_csv(&phase_diagram(&s).unwrap());
        let b = phase_diagram_csv(&phase_diagram(&s).unwrap());
        assert_eq!(a, b);
    }

    #[test]
    fn label_changes_bounded_on_lines() {
        let s = spec(0.05, Bc::Neumann, "1e-4:20:40", "1e-10:10:40");
        let pts = phase_diagram(&s).unwrap();
        assert!(max_label_changes(&pts, 40, 40) <= 4);
    }

    #[test]
    fn branching_fit_recovers_two_thirds() {
        let fit = scaling_fit(&FitSpec {
            family: Family::Branching,
            bc: Bc::Neumann,
            theta: 0.5,
            l: 1.0,
            fixed_mu: 1.0,
            fixed_eps_hat: 0.0,
            varied: VariedParam::EpsHat,
            range: RangeSpec::parse("1e-9:1e-6:7").unwrap(),
        })
        .unwrap();
        assert!((fit.slope - 2.0 / 3.0).abs() < 0.05, "slope = {}", fit.slope);
    }

    #[test]
    fn uniform_fit_is_flat() {
        let fit = scaling_fit(&FitSpec {
            family: Family::Uniform,
            bc: Bc::Neumann,
            theta: 0.3,
            l: 1.0,
            fixed_mu: 0.7,
            fixed_eps_hat: 0.0,
            varied: VariedParam::EpsHat,
            range: RangeSpec::parse("1e-8:1e-4:5").unwrap(),
        })
        .unwrap();
        assert_relative_eq!(fit.slope, 0.0, epsilon = 1e-9);
    }

    #[test]
    fn degenerate_sweep_rejected() {
        let r = scaling_fit(&FitSpec {
            family: Family::Branching,
            bc: Bc::Neumann,
            theta: 0.5,
            l: 1.0,
            fixed_mu: 1.0,
            fixed_eps_hat: 0.0,
            varied: VariedParam::EpsHat,
            range: RangeSpec::parse("1e-8:1e-7:2").unwrap(),
        });
        assert!(r.is_err());
    }

    #[test]
    fn comparison_lists_uniform_only_for_neumann() {
        let p = ModelParams::with_eps_hat_km(1e-5, 0.3, 1.0, 0.25, Bc::Periodic).unwrap();
        let c = compare_constructions(&p).unwrap();
        assert!(c.rows.iter().all(|r| r.family != Family::Uniform));
        let p = ModelParams::with_eps_hat_km(1e-5, 0.3, 1.0, 0.25, Bc::Neumann).unwrap();
        let c = compare_constructions(&p).unwrap();
        assert!(c.rows.iter().any(|r| r.family == Family::Uniform));
    }
}
