//! One-off calibration runs: measures the empirical ratio bands that the
//! acceptance suite freezes. Not part of the test suite.

use microbranch::analysis::{compare_constructions, scaling_fit, Family, FitSpec, VariedParam};
use microbranch::params::{Bc, ModelParams, Regime};
use microbranch::plasticity::{build_plastic_state, plastic_energy, PlasticParams, PlasticRegime};
use microbranch::seminorm::{gagliardo_neumann, h12_neumann};
use microbranch::specs::RangeSpec;
use microbranch::trace::TraceProfile;
use rand::Rng;

fn random_trace(rng: &mut impl Rng) -> TraceProfile {
    // Random trigonometric polynomial, sampled as a piecewise-affine trace.
    let modes = rng.gen_range(1..=6);
    let coeffs: Vec<(f64, f64, f64)> = (0..modes)
        .map(|_| {
            (
                rng.gen_range(1.0..8.0f64).round(),
                rng.gen_range(-1.0..1.0),
                rng.gen_range(-1.0..1.0),
            )
        })
        .collect();
    TraceProfile::sample(
        |x| {
            coeffs
                .iter()
                .map(|(k, a, b)| {
                    a * (std::f64::consts::PI * k * x).cos()
                        + b * (2.0 * std::f64::consts::PI * k * x).sin()
                })
                .sum()
        },
        96,
    )
}

fn main() {
    let mut rng = microbranch::seeded_rng(20260810);

    // Gagliardo (0,1)^2 double integral vs Neumann spectral seminorm.
    let mut lo = f64::INFINITY;
    let mut hi = f64::NEG_INFINITY;
    for _ in 0..100 {
        let t = random_trace(&mut rng);
        let g = gagliardo_neumann(&t);
        let s = h12_neumann(&t);
        let r = g / s;
        lo = lo.min(r);
        hi = hi.max(r);
    }
    println!("gagliardo_N / h12_N over 100 traces: [{lo:.4}, {hi:.4}]");

    // Single-laminate seminorm ratios over the dyadic theta sweep.
    let (mut rp_lo, mut rp_hi) = (f64::INFINITY, f64::NEG_INFINITY);
    let (mut rn_lo, mut rn_hi) = (f64::INFINITY, f64::NEG_INFINITY);
    for k in 2..=10 {
        let theta = 0.5f64.powi(k);
        let t = TraceProfile::new(vec![0.0, theta, 1.0], vec![0.0, (theta - 1.0) * theta, 0.0])
            .unwrap();
        let p = microbranch::seminorm::h12_periodic(&t).unwrap();
        let n = h12_neumann(&t);
        let rp = p / (theta * theta * (1.0 / theta).ln());
        let rn = n / (theta * theta);
        rp_lo = rp_lo.min(rp);
        rp_hi = rp_hi.max(rp);
        rn_lo = rn_lo.min(rn);
        rn_hi = rn_hi.max(rn);
    }
    println!("SL periodic ratio band: [{rp_lo:.4}, {rp_hi:.4}] (spread {:.3})", rp_hi / rp_lo);
    println!("SL neumann ratio band:  [{rn_lo:.4}, {rn_hi:.4}] (spread {:.3})", rn_hi / rn_lo);

    // Construction-vs-prediction ratio over a random parameter sample.
    let (mut c_lo, mut c_hi) = (f64::INFINITY, f64::NEG_INFINITY);
    for i in 0..100 {
        let theta = rng.gen_range(0.02..=0.5);
        let eps_hat = 10f64.powf(rng.gen_range(-9.0..0.0));
        let mu = 10f64.powf(rng.gen_range(-4.0..1.0));
        let bc = if i % 2 == 0 { Bc::Neumann } else { Bc::Periodic };
        let p = ModelParams::with_eps_hat_km(eps_hat, mu, 1.0, theta, bc).unwrap();
        let c = compare_constructions(&p).unwrap();
        c_lo = c_lo.min(c.ratio);
        c_hi = c_hi.max(c.ratio);
    }
    println!("best-construction / prediction over 100 samples: [{c_lo:.4}, {c_hi:.4}]");

    // TSB family constant over a decade inside its regime (theta = 0.05,
    // eps_hat / mu^3 = 200).
    let theta = 0.05;
    let r = 200.0f64;
    let mut cs = Vec::new();
    for &eh in &RangeSpec::parse("1e-8:1e-7:6").unwrap().samples() {
        let mu = (eh / r).powf(1.0 / 3.0);
        let p = ModelParams::with_eps_hat_km(eh, mu, 1.0, theta, Bc::Neumann).unwrap();
        let pred = microbranch::params::scaling_km(&p).unwrap();
        let term = pred
            .terms
            .iter()
            .find(|(reg, _)| *reg == Regime::TwoScaleBranching)
            .unwrap()
            .1;
        let field = Family::TwoScaleBranching.build(&p).unwrap();
        let e = microbranch::energy::total_energy_km(&field, &p).unwrap();
        let c = e.total_optimal / (theta * theta * term);
        println!("  tsb eh={eh:.3e} mu={mu:.3e} regime={:?} C={c:.4}", pred.regime);
        cs.push(c);
    }
    let cmin = cs.iter().cloned().fold(f64::INFINITY, f64::min);
    let cmax = cs.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    println!("TSB family C band: [{cmin:.4}, {cmax:.4}] spread {:.3}", cmax / cmin);

    // Truncated-branching slope at large L.
    let fit = scaling_fit(&FitSpec {
        family: Family::TruncatedBranching,
        bc: Bc::Neumann,
        theta: 0.3,
        l: 1e4,
        fixed_mu: 1.0,
        fixed_eps_hat: 0.0,
        varied: VariedParam::EpsHat,
        range: RangeSpec::parse("1e-6:1e-5:5").unwrap(),
    })
    .unwrap();
    println!("truncated-branching slope at L=1e4: {:.4}", fit.slope);

    // Laminate family slope.
    let fit = scaling_fit(&FitSpec {
        family: Family::Laminate,
        bc: Bc::Neumann,
        theta: 0.25,
        l: 1.0,
        fixed_mu: 1.0,
        fixed_eps_hat: 0.0,
        varied: VariedParam::EpsHat,
        range: RangeSpec::parse("1e-9:1e-6:7").unwrap(),
    })
    .unwrap();
    println!("laminate slope: {:.4}", fit.slope);

    // Plasticity regime bands over one-decade sweeps.
    let th = 0.25;
    #[allow(clippy::type_complexity)]
    let cases: [(&str, PlasticRegime, &str, fn(f64) -> f64); 3] = [
        ("lam", PlasticRegime::Laminate, "3e-4:3e-3:5", |_eh| 0.02),
        ("branch", PlasticRegime::Branching, "1e-4:1e-3:5", |_eh| 1.0),
        ("tsb", PlasticRegime::TwoScaleBranching, "1e-4:1e-3:5", |eh| {
            (eh / 50.0).powf(1.0 / 3.0)
        }),
    ];
    for (name, regime, sweep, mu_of) in cases {
        let mut cs = Vec::new();
        for &eh in &RangeSpec::parse(sweep).unwrap().samples() {
            let mu = mu_of(eh);
            let pp = PlasticParams::new(eh * th * th, mu, th, 1.0).unwrap();
            let st = match build_plastic_state(regime, pp, 48) {
                Ok(s) => s,
                Err(e) => {
                    println!("  {name} eh={eh:.3e}: skipped ({e})");
                    continue;
                }
            };
            let e = plastic_energy(&st).unwrap();
            let term = match regime {
                PlasticRegime::Laminate => {
                    (eh * mu).sqrt() * (1.0 / (th * th)).ln().sqrt()
                }
                PlasticRegime::Branching => eh.powf(2.0 / 3.0),
                PlasticRegime::TwoScaleBranching => {
                    (eh * mu).sqrt() * (3.0 + eh / mu.powi(3)).ln().sqrt()
                }
                _ => unreachable!(),
            };
            let c = e.total / (th * th * term);
            println!(
                "  {name} eh={eh:.3e} mu={mu:.3e}: C={c:.4} (el {:.2e} disl {:.2e} ext {:.2e}, slab {:.2e})",
                e.elastic, e.dislocation, e.exterior, e.elastic_interp_slab
            );
            cs.push(c);
        }
        if !cs.is_empty() {
            let cmin = cs.iter().cloned().fold(f64::INFINITY, f64::min);
            let cmax = cs.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
            println!("{name} C band: [{cmin:.4}, {cmax:.4}] spread {:.3}", cmax / cmin);
        }
    }

    // Step-2(ii) interpolation slab bound: E_slab <= C theta^2 eps_hat^(2/3).
    let mut cs = Vec::new();
    for &eh in &RangeSpec::parse("1e-4:1e-3:5").unwrap().samples() {
        let pp = PlasticParams::new(eh * th * th, 1.0, th, 1.0).unwrap();
        let st = build_plastic_state(PlasticRegime::Branching, pp, 32).unwrap();
        let e = plastic_energy(&st).unwrap();
        cs.push(e.elastic_interp_slab / (th * th * eh.powf(2.0 / 3.0)));
    }
    println!(
        "interp slab C band: [{:.4}, {:.4}]",
        cs.iter().cloned().fold(f64::INFINITY, f64::min),
        cs.iter().cloned().fold(f64::NEG_INFINITY, f64::max)
    );
}
