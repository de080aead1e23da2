//! Model parameters, closed-form scaling predictions and regime classification.
//!
//! The two scaling laws are evaluated exactly as written (no universal
//! constants): the martensite law over the strip `(-L,0)x(0,1)` with surface
//! density `eps`, modulus ratio `mu` and volume fraction `theta`, and the
//! crystal-plasticity law over the cube `(0,L)^3`. Every competing term is
//! reported so phase diagrams and ratio audits can work term by term.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Bc {
    Neumann,
    Periodic,
}

impl std::fmt::Display for Bc {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Bc::Neumann => write!(f, "neumann"),
            Bc::Periodic => write!(f, "periodic"),
        }
    }
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct ModelParams {
    /// Surface energy density (dimensionless).
    pub eps: f64,
    /// Ratio of austenite to martensite elastic moduli.
    pub mu: f64,
    /// Depth of the martensite strip.
    pub l: f64,
    /// Minority volume fraction, in (0, 1/2].
    pub theta: f64,
    pub bc: Bc,
}

fn check_positive(name: &'static str, value: f64) -> Result<()> {
    if !value.is_finite() || value <= 0.0 {
        return Err(Error::InvalidParameter {
            name,
            value,
            reason: "must be finite and > 0",
        });
    }
    Ok(())
}

impl ModelParams {
    pub fn new(eps: f64, mu: f64, l: f64, theta: f64, bc: Bc) -> Result<Self> {
        check_positive("eps", eps)?;
        check_positive("mu", mu)?;
        check_positive("L", l)?;
        if !theta.is_finite() || theta <= 0.0 || theta > 0.5 {
            return Err(Error::InvalidParameter {
                name: "theta",
                value: theta,
                reason: "must lie in (0, 1/2]",
            });
        }
        Ok(Self { eps, mu, l, theta, bc })
    }

    /// `eps / theta^2`, the rescaled surface parameter of the martensite law.
    pub fn eps_hat_km(&self) -> f64 {
        self.eps / (self.theta * self.theta)
    }

    /// `eps / (L theta^2)`, the rescaled surface parameter of the plasticity law.
    pub fn eps_hat_plastic(&self) -> f64 {
        self.eps / (self.l * self.theta * self.theta)
    }

    /// Same parameters with `eps` chosen so that `eps_hat_km` equals the given value.
    pub fn with_eps_hat_km(eps_hat: f64, mu: f64, l: f64, theta: f64, bc: Bc) -> Result<Self> {
        Self::new(eps_hat * theta * theta, mu, l, theta, bc)
    }

    pub fn with_eps_hat_plastic(eps_hat: f64, mu: f64, l: f64, theta: f64, bc: Bc) -> Result<Self> {
        Self::new(eps_hat * l * theta * theta, mu, l, theta, bc)
    }
}

/// Scaling regimes. `SingleLaminateFloor` is the periodic `eps_hat*L` floor,
/// `Constant` the order-one cap of the plasticity law.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Regime {
    Uniform,
    Laminate,
    SingleLaminateFloor,
    Branching,
    TwoScaleBranching,
    TruncatedBranching,
    Constant,
}

impl Regime {
    pub fn label(&self) -> &'static str {
        match self {
            Regime::Uniform => "Uniform",
            Regime::Laminate => "Laminate",
            Regime::SingleLaminateFloor => "SingleLaminateFloor",
            Regime::Branching => "Branching",
            Regime::TwoScaleBranching => "TwoScaleBranching",
            Regime::TruncatedBranching => "TruncatedBranching",
            Regime::Constant => "Constant",
        }
    }
}

impl std::fmt::Display for Regime {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.label())
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RegimePrediction {
    /// Predicted minimal energy (theta^2 resp. L^3 theta^2 times the extremal term).
    pub value: f64,
    pub regime: Regime,
    /// Every competing term, unscaled (without the theta^2 / L^3 theta^2 prefactor).
    pub terms: Vec<(Regime, f64)>,
}

/// Tie-break precedence: earlier wins at equal term values.
const PRECEDENCE: [Regime; 6] = [
    Regime::Branching,
    Regime::TruncatedBranching,
    Regime::TwoScaleBranching,
    Regime::Laminate,
    Regime::Uniform,
    Regime::Constant,
];

fn argmin_with_precedence(terms: &[(Regime, f64)]) -> (Regime, f64) {
    let mut best: Option<(Regime, f64)> = None;
    for &candidate in &PRECEDENCE {
        if let Some(&(r, v)) = terms.iter().find(|(r, _)| *r == candidate) {
            match best {
                Some((_, bv)) if v >= bv => {}
                _ => best = Some((r, v)),
            }
        }
    }
    best.expect("term list is nonempty")
}

/// The "3 +" in the logarithm is evaluated literally.
fn log_term_tsb(eps_hat: f64, mu: f64, l: f64) -> f64 {
    (3.0 + eps_hat / (mu.powi(3) * l)).ln()
}

/// `ln(1/theta^2)`, interchangeable with `ln(1/theta)` at scaling accuracy.
fn log_term_lam(theta: f64) -> f64 {
    (1.0 / (theta * theta)).ln()
}

/// The martensite scaling law: minimal energy over the admissible class of
/// the given boundary condition, together with all competing terms.
pub fn scaling_km(params: &ModelParams) -> Result<RegimePrediction> {
    let p = ModelParams::new(params.eps, params.mu, params.l, params.theta, params.bc)?;
    let eh = p.eps_hat_km();
    let (mu, l, th) = (p.mu, p.l, p.theta);
    let t_branch = eh.powf(2.0 / 3.0) * l.powf(1.0 / 3.0);
    let t_trunc = eh.sqrt();
    let t_tsb = (eh * l * mu).sqrt() * log_term_tsb(eh, mu, l).sqrt();
    let t_lam = (eh * l * mu).sqrt() * log_term_lam(th).sqrt();
    let t_unif = mu;
    match p.bc {
        Bc::Neumann => {
            let terms = vec![
                (Regime::Branching, t_branch),
                (Regime::TruncatedBranching, t_trunc),
                (Regime::TwoScaleBranching, t_tsb),
                (Regime::Laminate, t_lam),
                (Regime::Uniform, t_unif),
            ];
            let (regime, v) = argmin_with_precedence(&terms);
            Ok(RegimePrediction { value: th * th * v, regime, terms })
        }
        Bc::Periodic => {
            let floor = eh * l;
            let inner = vec![
                (Regime::Branching, t_branch),
                (Regime::TwoScaleBranching, t_tsb),
                (Regime::Laminate, t_lam),
            ];
            let (inner_regime, inner_v) = argmin_with_precedence(&inner);
            let mut terms = inner;
            terms.push((Regime::SingleLaminateFloor, floor));
            if floor > inner_v {
                Ok(RegimePrediction {
                    value: th * th * floor,
                    regime: Regime::SingleLaminateFloor,
                    terms,
                })
            } else {
                Ok(RegimePrediction { value: th * th * inner_v, regime: inner_regime, terms })
            }
        }
    }
}

/// The crystal-plasticity scaling law (boundary condition is irrelevant).
pub fn scaling_plastic(params: &ModelParams) -> Result<RegimePrediction> {
    let p = ModelParams::new(params.eps, params.mu, params.l, params.theta, params.bc)?;
    let eh = p.eps_hat_plastic();
    let (mu, th) = (p.mu, p.theta);
    let terms = vec![
        (Regime::Branching, eh.powf(2.0 / 3.0)),
        (Regime::TwoScaleBranching, (eh * mu).sqrt() * log_term_tsb(eh, mu, 1.0).sqrt()),
        (Regime::Laminate, (eh * mu).sqrt() * log_term_lam(th).sqrt()),
        (Regime::Uniform, mu),
        (Regime::Constant, 1.0),
    ];
    let (regime, v) = argmin_with_precedence(&terms);
    Ok(RegimePrediction { value: p.l.powi(3) * th * th * v, regime, terms })
}

/// Optimal branching-band height `h = min{1, max{theta, mu L N}}`.
pub fn optimal_h(theta: f64, mu: f64, l: f64, n: u32) -> Result<f64> {
    if !(0.0..=0.5).contains(&theta) || theta <= 0.0 {
        return Err(Error::InvalidParameter {
            name: "theta",
            value: theta,
            reason: "must lie in (0, 1/2]",
        });
    }
    check_positive("mu", mu)?;
    check_positive("L", l)?;
    if n < 1 {
        return Err(Error::InvalidParameter {
            name: "N",
            value: n as f64,
            reason: "must be >= 1",
        });
    }
    Ok(1.0_f64.min(theta.max(mu * l * n as f64)))
}

/// Parameters of an explicit two-scale-branching type construction.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct ConstructionParams {
    /// Vertical period count N.
    pub n_periods: u32,
    /// Branching-band height fraction, in [theta, 1].
    pub h: f64,
    /// Branching depth, in (0, L]; equals L whenever N > 1.
    pub ell: f64,
    /// Optional finite refinement level I (interfaces stop steepening there).
    pub truncation_level: Option<u32>,
    pub theta: f64,
    /// Martensite depth L.
    pub l: f64,
    pub bc: Bc,
    /// False for the uniform configuration, which has no interior pattern.
    pub interior_pattern: bool,
}

impl ConstructionParams {
    pub fn new(
        n_periods: u32,
        h: f64,
        ell: f64,
        theta: f64,
        l: f64,
        bc: Bc,
    ) -> Result<Self> {
        if n_periods < 1 {
            return Err(Error::InvalidParameter {
                name: "N",
                value: n_periods as f64,
                reason: "must be >= 1",
            });
        }
        if !theta.is_finite() || theta <= 0.0 || theta > 0.5 {
            return Err(Error::InvalidParameter {
                name: "theta",
                value: theta,
                reason: "must lie in (0, 1/2]",
            });
        }
        check_positive("L", l)?;
        if !(theta..=1.0).contains(&h) {
            return Err(Error::InvalidParameter {
                name: "h",
                value: h,
                reason: "must lie in [theta, 1]",
            });
        }
        if !ell.is_finite() || ell <= 0.0 || ell > l * (1.0 + 1e-12) {
            return Err(Error::InvalidParameter {
                name: "ell",
                value: ell,
                reason: "must lie in (0, L]",
            });
        }
        if n_periods > 1 && (ell - l).abs() > 1e-12 * l {
            return Err(Error::InvalidParameter {
                name: "ell",
                value: ell,
                reason: "must equal L when N > 1",
            });
        }
        Ok(Self {
            n_periods,
            h,
            ell: ell.min(l),
            truncation_level: None,
            theta,
            l,
            bc,
            interior_pattern: true,
        })
    }

    /// Checks the truncation rule `(3/2)^I ~ N ell / theta` up to a factor 2.
    pub fn with_truncation(mut self, level: u32) -> Result<Self> {
        let lhs = 1.5_f64.powi(level as i32);
        let rhs = self.n_periods as f64 * self.ell / self.theta;
        if lhs > 2.0 * rhs || lhs < rhs / 2.0 {
            return Err(Error::IncompatibleTruncation { level, lhs, rhs });
        }
        self.truncation_level = Some(level);
        Ok(self)
    }

    /// Level matching the truncation rule as closely as possible.
    pub fn matching_truncation_level(n_periods: u32, ell: f64, theta: f64) -> u32 {
        let target = (n_periods as f64 * ell / theta).max(1.0);
        (target.ln() / 1.5_f64.ln()).round().max(0.0) as u32
    }
}

fn round_at_least_one(x: f64) -> u32 {
    let r = x.round();
    if !r.is_finite() || r < 1.0 {
        1
    } else if r > u32::MAX as f64 {
        u32::MAX
    } else {
        r as u32
    }
}

/// The (N, h, ell) the given regime's construction uses at these parameters,
/// with the asymptotic `~` relations taken with constant 1 before rounding.
/// Does not require the regime to be the predicted optimum.
pub fn construction_params_for(regime: Regime, params: &ModelParams) -> Result<ConstructionParams> {
    let eh = params.eps_hat_km();
    let (mu, l, th) = (params.mu, params.l, params.theta);
    match regime {
        Regime::Branching => {
            let n = round_at_least_one((eh * l * l).powf(-1.0 / 3.0));
            ConstructionParams::new(n, 1.0, l, th, l, params.bc)
        }
        Regime::TruncatedBranching => {
            let ell = eh.powf(-0.5).min(l);
            ConstructionParams::new(1, 1.0, ell, th, l, params.bc)
        }
        Regime::TwoScaleBranching => {
            let n = round_at_least_one((mu * log_term_tsb(eh, mu, l) / (eh * l)).sqrt());
            let h = (mu * l * n as f64).clamp(th, 1.0);
            ConstructionParams::new(n, h, l, th, l, params.bc)
        }
        Regime::Laminate => {
            let n = round_at_least_one((mu * log_term_lam(th) / (eh * l)).sqrt());
            ConstructionParams::new(n, th, l, th, l, params.bc)
        }
        Regime::Uniform => {
            let mut cp = ConstructionParams::new(1, 1.0, l, th, l, params.bc)?;
            cp.interior_pattern = false;
            Ok(cp)
        }
        Regime::SingleLaminateFloor => ConstructionParams::new(1, th, l, th, l, params.bc),
        Regime::Constant => Err(Error::MismatchedPrediction(
            "Constant regime has no martensite construction".into(),
        )),
    }
}

/// The (N, h, ell) used by the construction realizing the predicted regime.
///
/// The prediction must have been produced by `scaling_km` on the same
/// parameters; asymptotic `~` relations for N use constant 1 before rounding.
pub fn regime_construction_params(
    prediction: &RegimePrediction,
    params: &ModelParams,
) -> Result<ConstructionParams> {
    let check = scaling_km(params)?;
    let same_value = if check.value == 0.0 {
        prediction.value == 0.0
    } else {
        ((prediction.value - check.value) / check.value).abs() < 1e-9
    };
    if check.regime != prediction.regime || !same_value {
        return Err(Error::MismatchedPrediction(format!(
            "expected regime {} with value {:.6e}, got {} with {:.6e}",
            check.regime, check.value, prediction.regime, prediction.value
        )));
    }
    construction_params_for(prediction.regime, params)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn rejects_bad_parameters() {
        assert!(ModelParams::new(-1.0, 1.0, 1.0, 0.3, Bc::Neumann).is_err());
        assert!(ModelParams::new(1.0, 0.0, 1.0, 0.3, Bc::Neumann).is_err());
        assert!(ModelParams::new(1.0, 1.0, 1.0, 0.6, Bc::Neumann).is_err());
        assert!(ModelParams::new(1.0, 1.0, 1.0, 0.0, Bc::Neumann).is_err());
        assert!(ModelParams::new(f64::NAN, 1.0, 1.0, 0.3, Bc::Neumann).is_err());
    }

    #[test]
    fn branching_point_of_the_strip_law() {
        // eps = 1e-6 theta^2 so eps_hat = 1e-6; branching term 1e-4 wins.
        let th = 0.5;
        let p = ModelParams::new(1e-6 * th * th, 1.0, 1.0, th, Bc::Neumann).unwrap();
        let pred = scaling_km(&p).unwrap();
        assert_eq!(pred.regime, Regime::Branching);
        assert_relative_eq!(pred.value, 0.25 * 1e-4, max_relative = 1e-12);
    }

    #[test]
    fn uniform_point_of_the_strip_law() {
        let th = 0.5;
        let p = ModelParams::with_eps_hat_km(1e3, 0.01, 1.0, th, Bc::Neumann).unwrap();
        let pred = scaling_km(&p).unwrap();
        assert_eq!(pred.regime, Regime::Uniform);
        assert_relative_eq!(pred.value, 0.25 * 0.01, max_relative = 1e-12);
    }

    #[test]
    fn periodic_value_respects_floor() {
        let mut rng = crate::test_rng(7);
        for _ in 0..200 {
            use rand::Rng;
            let th = rng.gen_range(0.01..=0.5);
            let p = ModelParams::new(
                10f64.powf(rng.gen_range(-9.0..0.0)),
                10f64.powf(rng.gen_range(-4.0..1.0)),
                10f64.powf(rng.gen_range(-1.0..1.0)),
                th,
                Bc::Periodic,
            )
            .unwrap();
            let pred = scaling_km(&p).unwrap();
            let floor = th * th * p.eps_hat_km() * p.l;
            assert!(pred.value >= floor * (1.0 - 1e-12));
        }
    }

    #[test]
    fn plastic_law_reference_points() {
        let th = 0.5;
        let p = ModelParams::with_eps_hat_plastic(1e-6, 1.0, 1.0, th, Bc::Neumann).unwrap();
        let pred = scaling_plastic(&p).unwrap();
        assert_eq!(pred.regime, Regime::Branching);
        assert_relative_eq!(pred.value, 0.25 * 1e-4, max_relative = 1e-12);

        let p = ModelParams::with_eps_hat_plastic(4.0, 1e9, 1.0, th, Bc::Neumann).unwrap();
        let pred = scaling_plastic(&p).unwrap();
        assert_eq!(pred.regime, Regime::Constant);
        assert_relative_eq!(pred.value, 0.25, max_relative = 1e-12);
    }

    #[test]
    fn plastic_value_scales_like_l_cubed() {
        let th = 0.25;
        for l in [0.5, 1.0, 2.0, 7.0] {
            let p = ModelParams::with_eps_hat_plastic(1e-4, 0.3, l, th, Bc::Neumann).unwrap();
            let p1 = ModelParams::with_eps_hat_plastic(1e-4, 0.3, 1.0, th, Bc::Neumann).unwrap();
            let a = scaling_plastic(&p).unwrap();
            let b = scaling_plastic(&p1).unwrap();
            assert_relative_eq!(a.value, b.value * l.powi(3), max_relative = 1e-12);
            assert_eq!(a.regime, b.regime);
        }
    }

    #[test]
    fn optimal_h_formula_and_clamps() {
        assert_relative_eq!(optimal_h(0.1, 0.2, 1.0, 2).unwrap(), 0.4);
        assert_relative_eq!(optimal_h(0.3, 0.01, 1.0, 1).unwrap(), 0.3);
        assert_relative_eq!(optimal_h(0.1, 5.0, 1.0, 1).unwrap(), 1.0);
    }

    #[test]
    fn optimal_h_stays_in_band() {
        let mut rng = crate::test_rng(11);
        use rand::Rng;
        for _ in 0..500 {
            let th = rng.gen_range(0.001..=0.5);
            let mu = 10f64.powf(rng.gen_range(-6.0..3.0));
            let l = 10f64.powf(rng.gen_range(-2.0..2.0));
            let n = rng.gen_range(1..=1000);
            let h = optimal_h(th, mu, l, n).unwrap();
            assert!((th..=1.0).contains(&h));
        }
    }

    #[test]
    fn scaling_km_monotone_in_eps_and_mu() {
        let mut rng = crate::test_rng(3);
        use rand::Rng;
        for _ in 0..200 {
            let th = rng.gen_range(0.01..=0.5);
            let eps = 10f64.powf(rng.gen_range(-10.0..-1.0));
            let mu = 10f64.powf(rng.gen_range(-4.0..1.0));
            let l = 10f64.powf(rng.gen_range(-1.0..1.0));
            for bc in [Bc::Neumann, Bc::Periodic] {
                let base = scaling_km(&ModelParams::new(eps, mu, l, th, bc).unwrap()).unwrap();
                let up_eps =
                    scaling_km(&ModelParams::new(eps * 1.7, mu, l, th, bc).unwrap()).unwrap();
                let up_mu =
                    scaling_km(&ModelParams::new(eps, mu * 1.7, l, th, bc).unwrap()).unwrap();
                assert!(up_eps.value >= base.value * (1.0 - 1e-12));
                assert!(up_mu.value >= base.value * (1.0 - 1e-12));
            }
        }
    }

    #[test]
    fn finite_at_theta_half() {
        let p = ModelParams::with_eps_hat_km(1e-4, 0.3, 1.0, 0.5, Bc::Neumann).unwrap();
        let pred = scaling_km(&p).unwrap();
        assert!(pred.value.is_finite() && pred.value > 0.0);
        let lam = pred.terms.iter().find(|(r, _)| *r == Regime::Laminate).unwrap().1;
        assert!(lam > 0.0);
    }

    #[test]
    fn label_stable_under_tiny_perturbation() {
        let mut rng = crate::test_rng(23);
        use rand::Rng;
        for _ in 0..300 {
            let th = rng.gen_range(0.01..=0.5);
            let eps = 10f64.powf(rng.gen_range(-10.0..-1.0));
            let mu = 10f64.powf(rng.gen_range(-4.0..1.0));
            let p = ModelParams::new(eps, mu, 1.0, th, Bc::Neumann).unwrap();
            let q = ModelParams::new(eps * (1.0 + 1e-12), mu, 1.0, th, Bc::Neumann).unwrap();
            let a = scaling_km(&p).unwrap();
            let b = scaling_km(&q).unwrap();
            assert!(((a.value - b.value) / a.value).abs() < 1e-9);
        }
    }

    #[test]
    fn construction_params_per_regime() {
        // Branching at eps_hat = 1e-6, L = 1: N = (eps_hat L^2)^(-1/3) = 100.
        let p = ModelParams::with_eps_hat_km(1e-6, 1.0, 1.0, 0.5, Bc::Neumann).unwrap();
        let pred = scaling_km(&p).unwrap();
        let cp = regime_construction_params(&pred, &p).unwrap();
        assert_eq!(cp.n_periods, 100);
        assert_relative_eq!(cp.h, 1.0);
        assert_relative_eq!(cp.ell, 1.0);

        // Uniform regime: degenerate, flagged.
        let p = ModelParams::with_eps_hat_km(1e3, 0.01, 1.0, 0.5, Bc::Neumann).unwrap();
        let pred = scaling_km(&p).unwrap();
        let cp = regime_construction_params(&pred, &p).unwrap();
        assert!(!cp.interior_pattern);
        assert_eq!(cp.n_periods, 1);

        // Laminate: h = theta.
        let th = 0.25;
        let p = ModelParams::with_eps_hat_km(1e-3, 0.01, 1.0, th, Bc::Neumann).unwrap();
        let pred = scaling_km(&p).unwrap();
        assert_eq!(pred.regime, Regime::Laminate);
        let cp = regime_construction_params(&pred, &p).unwrap();
        assert_relative_eq!(cp.h, th);
        let n_expect =
            (p.mu * (1.0 / (th * th)).ln() / (p.eps_hat_km() * p.l)).sqrt().round() as u32;
        assert_eq!(cp.n_periods, n_expect);
    }

    #[test]
    fn exact_ties_resolve_by_precedence() {
        // At eps_hat = 1, L = 1 the branching and truncated terms coincide;
        // precedence picks Branching.
        let p = ModelParams::with_eps_hat_km(1.0, 1e6, 1.0, 0.5, Bc::Neumann).unwrap();
        let pred = scaling_km(&p).unwrap();
        let branch = pred.terms.iter().find(|(r, _)| *r == Regime::Branching).unwrap().1;
        let trunc =
            pred.terms.iter().find(|(r, _)| *r == Regime::TruncatedBranching).unwrap().1;
        assert_eq!(branch, trunc);
        assert_eq!(pred.regime, Regime::Branching);
    }

    #[test]
    fn mismatched_prediction_rejected() {
        let p = ModelParams::with_eps_hat_km(1e-6, 1.0, 1.0, 0.5, Bc::Neumann).unwrap();
        let other = ModelParams::with_eps_hat_km(1e3, 0.01, 1.0, 0.5, Bc::Neumann).unwrap();
        let pred = scaling_km(&other).unwrap();
        assert!(regime_construction_params(&pred, &p).is_err());
    }
}
