//! Command-line surface: closed-form predictions, explicit constructions,
//! exact energies, phase diagrams, scaling fits, the grid minimization
//! oracle, and the crystal-plasticity states.
//!
//! Exit codes: 0 success, 2 flag/parameter validation errors, 3 runtime
//! failures (non-finite energies). Every run is a pure function of its flags
//! plus seed; repeated runs are byte-identical.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

use microbranch::analysis::{
    anneal, compare_constructions, comparison_csv, exhaustive_restricted, fit_csv, max_label_changes,
    phase_diagram, phase_diagram_csv, phase_diagram_svg, scaling_fit, AnnealConfig, Family,
    FitSpec, GridField, SweepModel, SweepSpec, VariedParam,
};
use microbranch::constructions::{
    branch_cell, branch_cell_connected, build_single_laminate, build_tsb, build_uniform,
};
use microbranch::energy::total_energy_km;
use microbranch::field::MicrostructureField;
use microbranch::params::{scaling_km, scaling_plastic, Bc, ConstructionParams, ModelParams};
use microbranch::plasticity::{
    build_plastic_state, plastic_energy, PlasticParams, PlasticRegime,
};
use microbranch::specs::{fmt_g17, GridSpec, RangeSpec};
use microbranch::Error;

#[derive(Parser)]
#[command(
    name = "microbranch",
    version,
    about = "Explicit branching microstructures: constructions, exact energies, scaling laws",
    long_about = "Explicit branching microstructures: constructions, exact energies, scaling laws.\n\
                  All physical flags are dimensionless model parameters. Range-valued flags use\n\
                  the syntax a:b:n, meaning n log-spaced samples from a to b inclusive."
)]
struct Cli {
    /// Worker threads for grid quadrature (env MICROBRANCH_THREADS; default:
    /// machine parallelism).
    #[arg(long, global = true)]
    threads: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum BcArg {
    Neumann,
    Periodic,
}

impl From<BcArg> for Bc {
    fn from(b: BcArg) -> Bc {
        match b {
            BcArg::Neumann => Bc::Neumann,
            BcArg::Periodic => Bc::Periodic,
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum ModelArg {
    Km,
    Plastic,
}

#[derive(Args)]
struct CommonParams {
    /// Surface energy density eps (> 0). Give exactly one of --eps, --eps-hat.
    #[arg(long)]
    eps: Option<f64>,
    /// Rescaled surface parameter eps_hat = eps/theta^2 (KM) or
    /// eps/(L theta^2) (plastic).
    #[arg(long = "eps-hat")]
    eps_hat: Option<f64>,
    /// Elastic modulus ratio mu (> 0).
    #[arg(long)]
    mu: f64,
    /// Minority volume fraction theta in (0, 1/2].
    #[arg(long)]
    theta: f64,
    /// Martensite depth / cube size L (> 0) [default: 1].
    #[arg(long, default_value_t = 1.0)]
    l: f64,
}

impl CommonParams {
    fn model_params(&self, bc: Bc, plastic: bool) -> Result<ModelParams, Error> {
        match (self.eps, self.eps_hat) {
            (Some(e), None) => ModelParams::new(e, self.mu, self.l, self.theta, bc),
            (None, Some(eh)) if plastic => {
                ModelParams::with_eps_hat_plastic(eh, self.mu, self.l, self.theta, bc)
            }
            (None, Some(eh)) => {
                ModelParams::with_eps_hat_km(eh, self.mu, self.l, self.theta, bc)
            }
            _ => Err(Error::InvalidParameter {
                name: "eps",
                value: f64::NAN,
                reason: "give exactly one of --eps, --eps-hat",
            }),
        }
    }
}

#[derive(Subcommand)]
enum Command {
    /// Closed-form scaling prediction (extremal combination of the competing terms).
    Predict {
        /// Which model's law to evaluate.
        #[arg(long, value_enum)]
        model: ModelArg,
        /// Boundary condition (KM model; ignored for plastic).
        #[arg(long, value_enum, default_value = "neumann")]
        bc: BcArg,
        #[command(flatten)]
        params: CommonParams,
    },
    /// Build an explicit test pattern and write it as JSON.
    Construct {
        /// Pattern family.
        #[arg(long = "type")]
        kind: String,
        /// Period count N (tsb/laminate/branching families) [default: 1].
        #[arg(long, default_value_t = 1)]
        n: u32,
        /// Band height fraction h in [theta, 1] (tsb) or cell height (branch cells).
        #[arg(long)]
        h: Option<f64>,
        /// Branching depth ell in (0, L] (tsb) or cell width (branch cells).
        #[arg(long)]
        ell: Option<f64>,
        /// Minority band width eta in [theta h, h] (branch cells only).
        #[arg(long)]
        eta: Option<f64>,
        /// Volume fraction theta in (0, 1/2].
        #[arg(long)]
        theta: f64,
        /// Strip depth L (> 0) [default: 1].
        #[arg(long, default_value_t = 1.0)]
        l: f64,
        /// Boundary condition tag stored in the field.
        #[arg(long, value_enum, default_value = "periodic")]
        bc: BcArg,
        /// Stop refinement at this level and interpolate toward the trace.
        #[arg(long = "truncation-level")]
        truncation_level: Option<u32>,
        /// Output JSON path.
        #[arg(long)]
        out: PathBuf,
    },
    /// Evaluate the strip energy of a stored field.
    Energy {
        /// Field JSON produced by `construct`.
        #[arg(long)]
        field: PathBuf,
        /// Surface energy density eps (> 0).
        #[arg(long)]
        eps: f64,
        /// Elastic modulus ratio mu (> 0).
        #[arg(long)]
        mu: f64,
        /// Write the JSON breakdown here instead of stdout.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Also write a term,value CSV here.
        #[arg(long)]
        csv: Option<PathBuf>,
    },
    /// Regime map over a (mu, eps_hat) window.
    #[command(name = "phase-diagram")]
    PhaseDiagram {
        #[arg(long, value_enum, default_value = "km")]
        model: ModelArg,
        /// Volume fraction theta in (0, 1/2].
        #[arg(long)]
        theta: f64,
        /// Depth / cube size L [default: 1].
        #[arg(long, default_value_t = 1.0)]
        l: f64,
        /// mu samples, a:b:n log-spaced inclusive.
        #[arg(long)]
        mu: String,
        /// eps_hat samples, a:b:n log-spaced inclusive.
        #[arg(long = "eps-hat")]
        eps_hat: String,
        #[arg(long, value_enum, default_value = "neumann")]
        bc: BcArg,
        /// Output CSV path (mu,eps_hat,regime,value).
        #[arg(long)]
        out: PathBuf,
        /// Optional SVG rendering.
        #[arg(long)]
        svg: Option<PathBuf>,
    },
    /// Log-log scaling-exponent fit of a construction family.
    Fit {
        /// Construction family: uniform | single-laminate | laminate |
        /// branching | truncated-branching | tsb.
        #[arg(long)]
        family: String,
        /// Varied parameter: eps-hat | mu.
        #[arg(long, default_value = "eps-hat")]
        param: String,
        /// Sweep range a:b:n (>= 3 samples, >= 1 decade recommended).
        #[arg(long)]
        range: String,
        /// Fixed mu (when sweeping eps-hat).
        #[arg(long, default_value_t = 1.0)]
        mu: f64,
        /// Fixed eps_hat (when sweeping mu).
        #[arg(long = "eps-hat", default_value_t = 1e-6)]
        eps_hat: f64,
        #[arg(long)]
        theta: f64,
        #[arg(long, default_value_t = 1.0)]
        l: f64,
        #[arg(long, value_enum, default_value = "neumann")]
        bc: BcArg,
        /// Output CSV path.
        #[arg(long)]
        out: PathBuf,
    },
    /// Brute-force/annealing minimization oracle on a small grid.
    Minimize {
        /// Grid size MxK (columns x rows), M*K <= 4096 for annealing.
        #[arg(long)]
        grid: String,
        /// RNG seed; identical seeds give byte-identical outputs.
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Proposal budget across all chains [default: 24000].
        #[arg(long, default_value_t = 24_000)]
        budget: usize,
        /// Certified search over the restricted single-block class instead
        /// of annealing.
        #[arg(long)]
        exhaustive: bool,
        /// Skip warm-starting from projected constructions.
        #[arg(long = "no-warm-start")]
        no_warm_start: bool,
        #[arg(long, value_enum, default_value = "periodic")]
        bc: BcArg,
        #[command(flatten)]
        params: CommonParams,
        /// Output CSV path (energies plus the optimal bit pattern).
        #[arg(long)]
        out: PathBuf,
    },
    /// Build and evaluate a crystal-plasticity state.
    Plastic {
        /// Regime: trivial | uniform | laminate | branching | tsb.
        #[arg(long)]
        regime: String,
        /// Grid resolution per axis for the dislocation term [default: 32].
        #[arg(long, default_value_t = 32)]
        n: usize,
        #[command(flatten)]
        params: CommonParams,
        /// Write the JSON energy report here instead of stdout.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Also write the serialized state here.
        #[arg(long = "state-out")]
        state_out: Option<PathBuf>,
    },
    /// Energies of every applicable construction against the prediction.
    Compare {
        #[arg(long, value_enum, default_value = "neumann")]
        bc: BcArg,
        #[command(flatten)]
        params: CommonParams,
        /// Optional CSV output.
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

fn exit_code_for(err: &Error) -> u8 {
    match err {
        Error::NonFiniteEnergy { .. } => 3,
        _ => 2,
    }
}

fn write_file(path: &PathBuf, contents: &str) -> Result<(), Error> {
    std::fs::write(path, contents)
        .map_err(|e| Error::FieldFormat(format!("cannot write {}: {e}", path.display())))
}

#[derive(Serialize)]
struct PredictionReport {
    model: &'static str,
    bc: String,
    eps: f64,
    eps_hat: f64,
    mu: f64,
    theta: f64,
    l: f64,
    regime: &'static str,
    value: f64,
    terms: Vec<TermReport>,
}

#[derive(Serialize)]
struct TermReport {
    regime: &'static str,
    value: f64,
}

fn run(cli: Cli) -> Result<(), Error> {
    let threads = cli
        .threads
        .or_else(|| {
            std::env::var("MICROBRANCH_THREADS").ok().and_then(|v| v.parse().ok())
        })
        .unwrap_or_else(|| {
            std::thread::available_parallelism().map(|n| n.get()).unwrap_or(1)
        })
        .max(1);
    match cli.command {
        Command::Predict { model, bc, params } => {
            let plastic = matches!(model, ModelArg::Plastic);
            let p = params.model_params(bc.into(), plastic)?;
            let prediction = match model {
                ModelArg::Km => scaling_km(&p)?,
                ModelArg::Plastic => scaling_plastic(&p)?,
            };
            let report = PredictionReport {
                model: if plastic { "plastic" } else { "km" },
                bc: p.bc.to_string(),
                eps: p.eps,
                eps_hat: if plastic { p.eps_hat_plastic() } else { p.eps_hat_km() },
                mu: p.mu,
                theta: p.theta,
                l: p.l,
                regime: prediction.regime.label(),
                value: prediction.value,
                terms: prediction
                    .terms
                    .iter()
                    .map(|(r, v)| TermReport { regime: r.label(), value: *v })
                    .collect(),
            };
            println!("{}", serde_json::to_string_pretty(&report)?);
        }
        Command::Construct {
            kind,
            n,
            h,
            ell,
            eta,
            theta,
            l,
            bc,
            truncation_level,
            out,
        } => {
            let bc: Bc = bc.into();
            let need = |name: &'static str, v: Option<f64>| {
                v.ok_or(Error::InvalidParameter {
                    name,
                    value: f64::NAN,
                    reason: "required for this construction type",
                })
            };
            let field: MicrostructureField = match kind.as_str() {
                "uniform" => build_uniform(theta, l)?,
                "single-laminate" => build_single_laminate(theta, l)?,
                "branch-cell" => {
                    branch_cell(need("h", h)?, need("eta", eta)?, need("ell", ell)?, theta)?
                }
                "branch-cell-connected" => branch_cell_connected(
                    need("h", h)?,
                    need("eta", eta)?,
                    need("ell", ell)?,
                    theta,
                )?,
                "laminate" | "branching" | "tsb" | "truncated-branching" => {
                    let h = match kind.as_str() {
                        "laminate" => theta,
                        "branching" | "truncated-branching" => 1.0,
                        _ => need("h", h)?,
                    };
                    let ell = ell.unwrap_or(l);
                    let mut cp = ConstructionParams::new(n, h, ell, theta, l, bc)?;
                    if let Some(level) = truncation_level {
                        cp = cp.with_truncation(level)?;
                    }
                    build_tsb(&cp)?
                }
                other => {
                    return Err(Error::InvalidParameter {
                        name: "type",
                        value: f64::NAN,
                        reason: Box::leak(
                            format!("unknown construction type {other:?}").into_boxed_str(),
                        ),
                    })
                }
            };
            write_file(&out, &field.to_json())?;
            let interfaces: usize = field
                .strips
                .iter()
                .map(|s| match &s.kind {
                    microbranch::field::StripKind::Laminar { interfaces, .. } => interfaces.len(),
                    microbranch::field::StripKind::Blend { .. } => 0,
                })
                .sum();
            println!(
                "wrote {} field: {} strips, {} interface segments/period, surface TV {}",
                kind,
                field.strips.len(),
                interfaces,
                fmt_g17(field.surface_tv())
            );
        }
        Command::Energy { field, eps, mu, out, csv } => {
            let text = std::fs::read_to_string(&field)
                .map_err(|e| Error::FieldFormat(format!("cannot read {}: {e}", field.display())))?;
            let f = MicrostructureField::from_json(&text)?;
            let p = ModelParams::new(eps, mu, f.depth, f.theta, f.bc)?;
            let bd = total_energy_km(&f, &p)?;
            let json = serde_json::to_string_pretty(&bd)?;
            match &out {
                Some(path) => write_file(path, &json)?,
                None => println!("{json}"),
            }
            if let Some(path) = &csv {
                write_file(path, &bd.to_csv())?;
            }
            if out.is_some() {
                println!(
                    "total_optimal {} total_asbuilt {}",
                    fmt_g17(bd.total_optimal),
                    fmt_g17(bd.total_asbuilt)
                );
            }
        }
        Command::PhaseDiagram { model, theta, l, mu, eps_hat, bc, out, svg } => {
            let spec = SweepSpec {
                model: match model {
                    ModelArg::Km => SweepModel::Km,
                    ModelArg::Plastic => SweepModel::Plastic,
                },
                bc: bc.into(),
                theta,
                l,
                mu_range: RangeSpec::parse(&mu)?,
                eps_hat_range: RangeSpec::parse(&eps_hat)?,
            };
            let points = phase_diagram(&spec)?;
            write_file(&out, &phase_diagram_csv(&points))?;
            if let Some(path) = &svg {
                write_file(
                    path,
                    &phase_diagram_svg(&points, spec.mu_range.count, spec.eps_hat_range.count),
                )?;
            }
            let changes = max_label_changes(&points, spec.mu_range.count, spec.eps_hat_range.count);
            println!(
                "phase diagram: {} points, max {} label changes per grid line",
                points.len(),
                changes
            );
        }
        Command::Fit { family, param, range, mu, eps_hat, theta, l, bc, out } => {
            let spec = FitSpec {
                family: Family::parse(&family)?,
                bc: bc.into(),
                theta,
                l,
                fixed_mu: mu,
                fixed_eps_hat: eps_hat,
                varied: match param.as_str() {
                    "eps-hat" | "eps_hat" => VariedParam::EpsHat,
                    "mu" => VariedParam::Mu,
                    _ => {
                        return Err(Error::InvalidParameter {
                            name: "param",
                            value: f64::NAN,
                            reason: "must be eps-hat or mu",
                        })
                    }
                },
                range: RangeSpec::parse(&range)?,
            };
            let fit = scaling_fit(&spec)?;
            write_file(&out, &fit_csv(&spec, &fit))?;
            #[derive(Serialize)]
            struct FitReport<'a> {
                family: &'a str,
                slope: f64,
                intercept: f64,
                residual_rms: f64,
                points: usize,
            }
            println!(
                "{}",
                serde_json::to_string(&FitReport {
                    family: fit.family.label(),
                    slope: fit.slope,
                    intercept: fit.intercept,
                    residual_rms: fit.residual_rms,
                    points: fit.points.len(),
                })?
            );
        }
        Command::Minimize {
            grid,
            seed,
            budget,
            exhaustive,
            no_warm_start,
            bc,
            params,
            out,
        } => {
            let g = GridSpec::parse(&grid)?;
            let p = params.model_params(bc.into(), false)?;
            let (field, energy, label) = if exhaustive {
                let (f, e) = exhaustive_restricted(&p, g.m, g.k)?;
                (f, e, "exhaustive")
            } else {
                let mut warm: Vec<GridField> = Vec::new();
                if !no_warm_start {
                    for fam in [
                        Family::SingleLaminate,
                        Family::Laminate,
                        Family::Branching,
                        Family::TwoScaleBranching,
                    ] {
                        if !fam.admissible(p.bc) {
                            continue;
                        }
                        if let Ok(f) = fam.build(&p) {
                            if let Ok(gf) = GridField::project(&f, g.m, g.k, &p) {
                                warm.push(gf);
                            }
                        }
                    }
                }
                let cfg = AnnealConfig { budget, ..Default::default() };
                let r = anneal(&p, g.m, g.k, &cfg, seed, &warm)?;
                if !r.improved && warm.is_empty() {
                    println!("note: budget exhausted without improvement over the initial state");
                }
                (r.field, r.energy, "annealed")
            };
            let mut csv = String::new();
            csv.push_str("key,value\n");
            csv.push_str(&format!("mode,{label}\n"));
            csv.push_str(&format!("m,{}\nk,{}\nseed,{seed}\n", g.m, g.k));
            csv.push_str(&format!(
                "elastic,{}\nsurface,{}\naustenite,{}\ntotal,{}\n",
                fmt_g17(energy.elastic),
                fmt_g17(energy.surface),
                fmt_g17(energy.austenite),
                fmt_g17(energy.total)
            ));
            for i in 0..g.m {
                let bits: String =
                    (0..g.k).map(|j| if field.bit(i, j) { '1' } else { '0' }).collect();
                csv.push_str(&format!("column_{i},{bits}\n"));
            }
            write_file(&out, &csv)?;
            println!("{label} minimum: total {}", fmt_g17(energy.total));
        }
        Command::Plastic { regime, n, params, out, state_out } => {
            let p = params.model_params(Bc::Neumann, true)?;
            let pp = PlasticParams::new(p.eps, p.mu, p.theta, p.l)?;
            let regime = match regime.as_str() {
                "trivial" => PlasticRegime::Trivial,
                "uniform" => PlasticRegime::Uniform,
                "laminate" => PlasticRegime::Laminate,
                "branching" => PlasticRegime::Branching,
                "tsb" | "two-scale-branching" => PlasticRegime::TwoScaleBranching,
                _ => {
                    return Err(Error::InvalidParameter {
                        name: "regime",
                        value: f64::NAN,
                        reason: "must be trivial|uniform|laminate|branching|tsb",
                    })
                }
            };
            let state = build_plastic_state(regime, pp, n)?.with_threads(threads);
            let energy = plastic_energy(&state)?;
            let json = serde_json::to_string_pretty(&energy)?;
            match &out {
                Some(path) => {
                    write_file(path, &json)?;
                    println!("total {}", fmt_g17(energy.total));
                }
                None => println!("{json}"),
            }
            if let Some(path) = &state_out {
                write_file(path, &state.to_json())?;
            }
        }
        Command::Compare { bc, params, out } => {
            let p = params.model_params(bc.into(), false)?;
            let c = compare_constructions(&p)?;
            let csv = comparison_csv(&c);
            if let Some(path) = &out {
                write_file(path, &csv)?;
            } else {
                print!("{csv}");
            }
            println!(
                "best {} at {} = {} x prediction ({})",
                c.best_family.label(),
                fmt_g17(c.best_energy),
                fmt_g17(c.ratio),
                c.prediction.regime.label()
            );
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code_for(&e))
        }
    }
}
