//! Command-line front end: analyze market files, compute intervention
//! plans, run noisy-implementation simulations, sweep the three-product
//! family, and emit example market files.
//!
//! Exit codes: 0 success, 1 model/file error, 2 usage error.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use eigenmarket::error::{Error, Result};
use eigenmarket::families::{self, CouplingSign};
use eigenmarket::global::plan_global;
use eigenmarket::io::{MarketFile, TauFile};
use eigenmarket::market::NormalizedMarket;
use eigenmarket::report::AnalysisReport;
use eigenmarket::sim::{simulate, NoiseModel};
use eigenmarket::small::{optimal_small_taxes, pigouvian_leverage, shadow_price_small};
use eigenmarket::spectral::{decompose, SpectralDecomposition};
use eigenmarket::Equilibrium;

#[derive(Parser)]
#[command(
    name = "eigenmarket",
    about = "Eigenbundle analysis of oligopoly spillovers and budget-balanced tax design",
    version
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Text,
    Json,
}

#[derive(Args)]
struct OutputArgs {
    /// Report format.
    #[arg(long, value_enum, default_value = "text")]
    format: Format,
    /// Write the report to a file instead of stdout.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum SignArg {
    Complements,
    Substitutes,
}

impl From<SignArg> for CouplingSign {
    fn from(s: SignArg) -> Self {
        match s {
            SignArg::Complements => CouplingSign::Complements,
            SignArg::Substitutes => CouplingSign::Substitutes,
        }
    }
}

#[derive(Subcommand)]
enum Command {
    /// Normalize a market, decompose its spillovers and solve the
    /// zero-tax equilibrium.
    Analyze {
        /// Market file (JSON).
        path: PathBuf,
        #[command(flatten)]
        output: OutputArgs,
    },
    /// Closed-form optimal small intervention for a risk-averse planner.
    SmallOpt {
        path: PathBuf,
        /// Planner risk aversion a > 0.
        #[arg(long, value_name = "A")]
        risk_aversion: f64,
        #[command(flatten)]
        output: OutputArgs,
    },
    /// Exact optimal budget-balanced intervention (linear demand).
    GlobalOpt {
        path: PathBuf,
        #[command(flatten)]
        output: OutputArgs,
    },
    /// Monte Carlo simulation of a target tax under implementation noise.
    Simulate {
        path: PathBuf,
        /// JSON file with target taxes in the market file's cost units.
        #[arg(long, value_name = "FILE")]
        tau_file: PathBuf,
        #[arg(long, default_value_t = 10_000)]
        samples: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, value_name = "A", default_value_t = 1.0)]
        risk_aversion: f64,
        /// Variance of the multiplicative mean-one noise.
        #[arg(long, default_value_t = 1.0)]
        noise_variance: f64,
        #[command(flatten)]
        output: OutputArgs,
    },
    /// Sweep the three-product family over the coupling g and emit CSV.
    Sweep {
        /// Market family; only `three-product` exists.
        #[arg(long)]
        family: String,
        /// Swept parameter; only `g` exists.
        #[arg(long)]
        param: String,
        #[arg(long)]
        from: f64,
        #[arg(long)]
        to: f64,
        #[arg(long)]
        steps: usize,
        /// Demand intercepts; enables the exact-plan columns.
        #[arg(long, value_delimiter = ',', num_args = 3)]
        beta: Option<Vec<f64>>,
        /// Marginal costs; enables the exact-plan columns.
        #[arg(long, value_delimiter = ',', num_args = 3)]
        cost: Option<Vec<f64>>,
        #[arg(long, value_enum, default_value = "complements")]
        sign: SignArg,
        /// Output CSV path; stdout when omitted.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Write a ready-to-analyze market file for a named family.
    Example {
        /// `triangle-3.2` or `g-triangle`.
        #[arg(long)]
        name: String,
        /// Coupling strength for the g-triangle.
        #[arg(long)]
        g: Option<f64>,
        #[arg(long, value_delimiter = ',', num_args = 3)]
        beta: Option<Vec<f64>>,
        #[arg(long, value_delimiter = ',', num_args = 3)]
        cost: Option<Vec<f64>>,
        #[arg(long, value_enum, default_value = "complements")]
        sign: SignArg,
        /// Output path; stdout when omitted.
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error[{}]: {e}", e.code());
            ExitCode::from(1)
        }
    }
}

fn read_file(path: &Path) -> Result<String> {
    fs::read_to_string(path).map_err(|e| Error::Io(format!("{}: {e}", path.display())))
}

fn write_output(out: &Option<PathBuf>, content: &str) -> Result<()> {
    match out {
        Some(path) => {
            fs::write(path, content).map_err(|e| Error::Io(format!("{}: {e}", path.display())))
        }
        None => {
            print!("{content}");
            Ok(())
        }
    }
}

fn emit(report: &AnalysisReport, output: &OutputArgs) -> Result<()> {
    let content = match output.format {
        Format::Text => report.render_text(),
        Format::Json => report.to_json(),
    };
    write_output(&output.out, &content)
}

struct Analyzed {
    label: Option<String>,
    market: NormalizedMarket,
    dec: SpectralDecomposition,
    eq0: Equilibrium,
}

fn analyze_market(path: &Path) -> Result<Analyzed> {
    let text = read_file(path)?;
    let (file, spec) = MarketFile::load(&text)?;
    let market = spec.normalize()?;
    let eq0 = market.solve_equilibrium(&vec![0.0; market.n()])?;
    let dec = decompose(market.d_norm(), &eq0.quantity)?;
    Ok(Analyzed {
        label: file.label,
        market,
        dec,
        eq0,
    })
}

fn run(command: Command) -> Result<()> {
    match command {
        Command::Analyze { path, output } => {
            let a = analyze_market(&path)?;
            let report = AnalysisReport::new(a.label, &a.market, &a.dec, &a.eq0);
            emit(&report, &output)
        }
        Command::SmallOpt {
            path,
            risk_aversion,
            output,
        } => {
            let a = analyze_market(&path)?;
            let plan = optimal_small_taxes(&a.dec, risk_aversion)?;
            let report = AnalysisReport::new(a.label, &a.market, &a.dec, &a.eq0)
                .with_small_plan(&a.market, &plan);
            emit(&report, &output)
        }
        Command::GlobalOpt { path, output } => {
            let a = analyze_market(&path)?;
            let plan = plan_global(&a.market, &a.dec)?;
            let report = AnalysisReport::new(a.label, &a.market, &a.dec, &a.eq0)
                .with_global_plan(&a.market, &plan);
            emit(&report, &output)
        }
        Command::Simulate {
            path,
            tau_file,
            samples,
            seed,
            risk_aversion,
            noise_variance,
            output,
        } => {
            let a = analyze_market(&path)?;
            let tau = TauFile::from_json(&read_file(&tau_file)?)?;
            let tau_norm = a.market.tax_to_normalized(&tau.tau)?;
            let noise = NoiseModel::uniform(noise_variance, seed);
            let result = simulate(&a.market, &tau_norm, &noise, risk_aversion, samples)?;
            let report = AnalysisReport::new(a.label, &a.market, &a.dec, &a.eq0)
                .with_simulation(&noise, tau.tau, result);
            emit(&report, &output)
        }
        Command::Sweep {
            family,
            param,
            from,
            to,
            steps,
            beta,
            cost,
            sign,
            out,
        } => {
            if family != "three-product" {
                return Err(Error::RangeError(format!(
                    "unknown family '{family}'; available: three-product"
                )));
            }
            if param != "g" {
                return Err(Error::RangeError(format!(
                    "unknown sweep parameter '{param}'; available: g"
                )));
            }
            if steps < 1 {
                return Err(Error::RangeError("steps must be at least 1".into()));
            }
            let csv = sweep_three_product(from, to, steps, beta, cost, sign.into())?;
            write_output(&out, &csv)
        }
        Command::Example {
            name,
            g,
            beta,
            cost,
            sign,
            out,
        } => {
            let file = match name.as_str() {
                "triangle-3.2" => families::triangle_boundary(beta, cost)?,
                "g-triangle" => {
                    let g = g.ok_or_else(|| {
                        Error::RangeError("g-triangle needs --g".into())
                    })?;
                    families::g_triangle(g, sign.into(), beta, cost)?
                }
                other => {
                    return Err(Error::RangeError(format!(
                        "unknown example '{other}'; available: triangle-3.2, g-triangle"
                    )))
                }
            };
            write_output(&out, &file.to_json())
        }
    }
}

fn sweep_three_product(
    from: f64,
    to: f64,
    steps: usize,
    beta: Option<Vec<f64>>,
    cost: Option<Vec<f64>>,
    sign: CouplingSign,
) -> Result<String> {
    let with_market = beta.is_some() || cost.is_some();
    let grid: Vec<f64> = if steps == 1 {
        vec![from]
    } else {
        (0..steps)
            .map(|i| from + (to - from) * i as f64 / (steps - 1) as f64)
            .collect()
    };
    for &g in &grid {
        if g.abs() > families::MAX_COUPLING * (1.0 + 1e-12) {
            return Err(Error::RangeError(format!(
                "|g| = {} is outside the negative semidefinite range",
                g.abs()
            )));
        }
        if with_market && g.abs() >= families::MAX_COUPLING {
            return Err(Error::RangeError(format!(
                "|g| = {} needs strict negative definiteness for the exact plan; \
                 keep |g| < 1/sqrt(2)",
                g.abs()
            )));
        }
    }
    let mut out = String::new();
    if with_market {
        out.push_str(
            "g,var_sigma,z_small,leverage,lambda_min,lambda_max,z_global,delta_cs_global\n",
        );
    } else {
        out.push_str("g,var_sigma,z_small,leverage,lambda_min,lambda_max\n");
    }
    for &g in &grid {
        // the sign flag fixes the off-diagonal sign at g > 0; sweeping into
        // g < 0 flips it
        let row_sign = if g < 0.0 {
            match sign {
                CouplingSign::Complements => CouplingSign::Substitutes,
                CouplingSign::Substitutes => CouplingSign::Complements,
            }
        } else {
            sign
        };
        let file = families::g_triangle(g.abs(), row_sign, beta.clone(), cost.clone())?;
        let market = file.to_spec()?.normalize()?;
        let eq0 = market.solve_equilibrium(&vec![0.0; market.n()])?;
        let dec = decompose(market.d_norm(), &eq0.quantity)?;
        let var = dec.eigenvalue_variance();
        let z_small = shadow_price_small(&dec).full_support;
        let leverage = pigouvian_leverage(&dec);
        let lam = dec.pass_through();
        let (lam_min, lam_max) = (lam[0], lam[lam.len() - 1]);
        if with_market {
            let plan = plan_global(&market, &dec)?;
            out.push_str(&format!(
                "{g:.17e},{var:.17e},{z_small:.17e},{leverage:.17e},{lam_min:.17e},{lam_max:.17e},{:.17e},{:.17e}\n",
                plan.shadow_price,
                plan.surplus_gain()
            ));
        } else {
            out.push_str(&format!(
                "{g:.17e},{var:.17e},{z_small:.17e},{leverage:.17e},{lam_min:.17e},{lam_max:.17e}\n"
            ));
        }
    }
    Ok(out)
}
