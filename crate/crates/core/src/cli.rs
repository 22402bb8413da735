//! Command-line front end. `run` is separate from process handling so the
//! commands can be driven from tests with an in-memory writer.

use std::fs;
use std::io::Write;
use std::path::{Path as FsPath, PathBuf};
use std::sync::Arc;

use clap::{Parser, Subcommand, ValueEnum};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::algebra::c64;
use crate::cohomology::{
    complex_dims, CohomologyOptions, ComplexKind, LatticeTruncation, MatrixUnits,
};
use crate::deformation::{
    halving_sequence, heisenberg_limit_sweep, plane_limit_sweep, torus_limit_sweep,
    DeformationSweep, HeisenbergDirection,
};
use crate::dirichlet::audit_semigroup_with_trace;
use crate::expr::{parse, EvalContext};
use crate::forms::{BasisMode, DifferentialBasis};
use crate::graph_algebra::{
    closed_terms, full_isometry_criterion, h0_report, verify_full_isometry, ClosedTermJson,
    DirectedGraph, Path,
};
use crate::matrix_algebra::projection_basis;
use crate::qlattice::{QAlgebraSpec, QElement};
use crate::selftest::{run_all, SelftestConfig, Tolerances};

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    BadInput(String),
    #[error("check failed: {0}")]
    CheckFailed(String),
    #[error("io: {0}")]
    Io(#[from] std::io::Error),
}

impl CliError {
    /// 2 for bad input, 1 for a failed check.
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::CheckFailed(_) => 1,
            _ => 2,
        }
    }
}

fn bad(e: impl std::fmt::Display) -> CliError {
    CliError::BadInput(e.to_string())
}

/// Run settings read from `--config`; command-line flags take precedence.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub tolerances: Option<Tolerances>,
    /// Truncation radius `K` for lattice carriers.
    pub truncation: Option<i64>,
    /// Coefficients below this are dropped from lattice elements.
    pub prune_epsilon: Option<f64>,
    /// Use `Tr/n` (true) or `Tr` for matrix traces.
    pub normalized_trace: Option<bool>,
    pub seed: Option<u64>,
}

impl RunConfig {
    pub fn load(path: &FsPath) -> Result<Self, CliError> {
        let text = fs::read_to_string(path).map_err(|e| bad(format!("{}: {e}", path.display())))?;
        serde_json::from_str(&text).map_err(|e| bad(format!("{}: {e}", path.display())))
    }

    fn truncation(&self, flag: Option<i64>, fallback: i64) -> i64 {
        flag.or(self.truncation).unwrap_or(fallback)
    }

    fn tolerances(&self) -> Tolerances {
        self.tolerances.unwrap_or_default()
    }

    fn seed(&self) -> u64 {
        self.seed.unwrap_or(SelftestConfig::default().seed)
    }

    fn apply_prune(&self, spec: QAlgebraSpec) -> QAlgebraSpec {
        match self.prune_epsilon {
            Some(eps) => spec.with_prune_epsilon(eps),
            None => spec,
        }
    }
}

#[derive(Debug, Parser)]
#[command(
    name = "innercalc",
    version,
    about = "Differential calculus of inner derivations"
)]
pub struct Cli {
    /// JSON run configuration (tolerances, truncation, prune epsilon, trace normalization, seed).
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Evaluate an expression and print its normal form.
    Eval {
        /// Algebra spec file (JSON).
        #[arg(long)]
        spec: PathBuf,
        /// Generators of the differential basis, e.g. `U,V` (default: first generator).
        #[arg(long, value_delimiter = ',')]
        basis: Vec<String>,
        /// Build the basis in self-adjoint mode.
        #[arg(long)]
        self_adjoint: bool,
        /// Print JSON instead of text.
        #[arg(long)]
        json: bool,
        expr: String,
    },
    /// Cohomology dimensions of a truncated complex, as JSON.
    Cohomology {
        #[arg(long, value_enum)]
        carrier: Carrier,
        /// Matrix size for `matrix`.
        #[arg(long, default_value_t = 3)]
        n: usize,
        /// Torus angle.
        #[arg(long, default_value_t = 0.7)]
        theta: f64,
        #[arg(long, default_value_t = 0.11)]
        mu: f64,
        #[arg(long, default_value_t = 0.07)]
        nu: f64,
        /// Truncation radius `K` for lattice carriers.
        #[arg(long)]
        k: Option<i64>,
        #[arg(long, value_enum, default_value_t = Complex::DeRham)]
        complex: Complex,
        /// Fixed degree `p` (dolbeault) or `q` (holomorphic).
        #[arg(long, default_value_t = 0)]
        fixed: usize,
        #[arg(long)]
        max_degree: Option<usize>,
    },
    /// Graph algebra reports for a graph file.
    Graph {
        #[arg(long)]
        file: PathBuf,
        #[command(subcommand)]
        report: GraphReport,
    },
    /// Audit the heat semigroup on `M_n` with the projection basis.
    Semigroup {
        #[arg(long)]
        n: usize,
        /// Comma-separated times.
        #[arg(long, value_delimiter = ',', required = true)]
        t: Vec<f64>,
        #[arg(long, default_value_t = 100)]
        samples: usize,
        /// Also write the audit as CSV.
        #[arg(long)]
        csv: Option<PathBuf>,
    },
    /// Convergence sweep of a classical limit; CSV on stdout.
    Deform {
        #[command(subcommand)]
        family: DeformFamily,
        /// Largest parameter of the halving sequence.
        #[arg(long, default_value_t = 1e-2, global = true)]
        start: f64,
        #[arg(long, default_value_t = 4, global = true)]
        count: usize,
        /// Write `{fitted_order, target_description}` here.
        #[arg(long, global = true)]
        summary: Option<PathBuf>,
    },
    /// Run every invariant check; nonzero exit on failure.
    Selftest {
        #[arg(long)]
        json: bool,
    },
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Carrier {
    Matrix,
    Torus,
    Heisenberg,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Complex {
    DeRham,
    Dolbeault,
    Holomorphic,
}

#[derive(Debug, Subcommand)]
pub enum GraphReport {
    /// Closed terms, projection count and loop flags.
    H0 {
        #[arg(long, default_value_t = 3)]
        max_len: usize,
    },
    /// Closed terms only.
    Closed {
        #[arg(long, default_value_t = 3)]
        max_len: usize,
    },
    /// Full-isometry criterion for a path given by edge names.
    Criterion {
        #[arg(value_delimiter = ',', required = true)]
        path: Vec<String>,
    },
}

#[derive(Debug, Subcommand)]
pub enum DeformFamily {
    /// Torus: monomial in the position generators, one exponent per pair.
    Torus {
        #[arg(
            long,
            value_delimiter = ',',
            allow_hyphen_values = true,
            default_value = "1"
        )]
        exponents: Vec<i64>,
    },
    /// Weyl plane: commutator with `W(k)` applied to `W(t)`.
    Plane {
        #[arg(
            long,
            value_delimiter = ',',
            allow_hyphen_values = true,
            default_value = "1,0"
        )]
        k: Vec<i64>,
        #[arg(
            long,
            value_delimiter = ',',
            allow_hyphen_values = true,
            default_value = "0,1"
        )]
        t: Vec<i64>,
        #[arg(long, default_value_t = 1.0)]
        step: f64,
    },
    /// Heisenberg: commutator with one generator applied to `U^mV^nW^k`.
    Heisenberg {
        #[arg(long, value_enum, default_value_t = Direction::W)]
        direction: Direction,
        #[arg(
            long,
            value_delimiter = ',',
            allow_hyphen_values = true,
            default_value = "1,1,1"
        )]
        exponents: Vec<i64>,
        #[arg(long, default_value_t = 0.11)]
        mu: f64,
        #[arg(long, default_value_t = 0.07)]
        nu: f64,
    },
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Direction {
    U,
    V,
    W,
}

impl From<Direction> for HeisenbergDirection {
    fn from(d: Direction) -> Self {
        match d {
            Direction::U => HeisenbergDirection::U,
            Direction::V => HeisenbergDirection::V,
            Direction::W => HeisenbergDirection::W,
        }
    }
}

fn to_json_line(out: &mut dyn Write, value: &impl Serialize) -> Result<(), CliError> {
    let text = serde_json::to_string_pretty(value).map_err(bad)?;
    writeln!(out, "{text}")?;
    Ok(())
}

pub fn run(cli: Cli, out: &mut dyn Write) -> Result<(), CliError> {
    let config = match &cli.config {
        Some(p) => RunConfig::load(p)?,
        None => RunConfig::default(),
    };
    match cli.command {
        Command::Eval {
            spec,
            basis,
            self_adjoint,
            json,
            expr,
        } => eval(&config, &spec, &basis, self_adjoint, json, &expr, out),
        Command::Cohomology {
            carrier,
            n,
            theta,
            mu,
            nu,
            k,
            complex,
            fixed,
            max_degree,
        } => {
            let kind = match complex {
                Complex::DeRham => ComplexKind::DeRham,
                Complex::Dolbeault => ComplexKind::Dolbeault { p: fixed },
                Complex::Holomorphic => ComplexKind::Holomorphic { q: fixed },
            };
            let options = CohomologyOptions {
                max_degree,
                rank_tol: None,
            };
            let report = match carrier {
                Carrier::Matrix => {
                    if kind != ComplexKind::DeRham {
                        return Err(bad(
                            "the projection basis is self-adjoint; only de-rham applies",
                        ));
                    }
                    let b = Arc::new(
                        DifferentialBasis::new(
                            projection_basis(n).map_err(bad)?,
                            BasisMode::SelfAdjoint,
                            "p",
                        )
                        .map_err(bad)?,
                    );
                    complex_dims(kind, &b, &MatrixUnits { n }, options).map_err(bad)?
                }
                Carrier::Torus | Carrier::Heisenberg => {
                    let (spec, gen, fallback) = match carrier {
                        Carrier::Torus => (QAlgebraSpec::torus2(theta), 0, 6),
                        _ => (QAlgebraSpec::heisenberg(mu, nu, 1.0), 2, 3),
                    };
                    let spec = Arc::new(config.apply_prune(spec));
                    let label = spec.names()[gen].clone();
                    let u = QElement::generator(&spec, gen).map_err(bad)?;
                    let b = Arc::new(
                        DifferentialBasis::new(vec![u], BasisMode::Complex, &label).map_err(bad)?,
                    );
                    let t = LatticeTruncation::new(&spec, config.truncation(k, fallback));
                    complex_dims(kind, &b, &t, options).map_err(bad)?
                }
            };
            to_json_line(out, &report)
        }
        Command::Graph { file, report } => {
            let text =
                fs::read_to_string(&file).map_err(|e| bad(format!("{}: {e}", file.display())))?;
            let g = Arc::new(DirectedGraph::parse(&text).map_err(bad)?);
            match report {
                GraphReport::H0 { max_len } => to_json_line(out, &h0_report(&g, max_len)),
                GraphReport::Closed { max_len } => {
                    let terms: Vec<ClosedTermJson> = closed_terms(&g, max_len)
                        .iter()
                        .map(|t| ClosedTermJson {
                            mu: t.mu().to_json(&g),
                            nu: t.nu().to_json(&g),
                        })
                        .collect();
                    to_json_line(out, &terms)
                }
                GraphReport::Criterion { path } => {
                    let names: Vec<&str> = path.iter().map(String::as_str).collect();
                    let mu = Path::from_names(&g, &names).map_err(bad)?;
                    let criterion = full_isometry_criterion(&g, &mu).map_err(bad)?;
                    to_json_line(
                        out,
                        &serde_json::json!({
                            "path": mu.to_json(&g),
                            "criterion": criterion,
                            "expansion_verified": verify_full_isometry(&g, &mu),
                        }),
                    )
                }
            }
        }
        Command::Semigroup { n, t, samples, csv } => {
            if n == 0 {
                return Err(bad("n must be at least 1"));
            }
            let b = DifferentialBasis::new(
                projection_basis(n).map_err(bad)?,
                BasisMode::SelfAdjoint,
                "p",
            )
            .map_err(bad)?;
            let mut rng = ChaCha8Rng::seed_from_u64(config.seed());
            let normalized = config.normalized_trace.unwrap_or(true);
            let audit =
                audit_semigroup_with_trace(&t, &b, samples, normalized, &mut rng).map_err(bad)?;
            to_json_line(out, &audit)?;
            if let Some(path) = csv {
                fs::write(path, audit.to_csv())?;
            }
            let tol = config.tolerances().residual;
            if audit.passes(tol) {
                Ok(())
            } else {
                Err(CliError::CheckFailed(format!(
                    "semigroup audit outside tolerance {tol:e}"
                )))
            }
        }
        Command::Deform {
            family,
            start,
            count,
            summary,
        } => {
            let params = halving_sequence(start, count);
            let sweep = deform(family, &params)?;
            write!(out, "{}", sweep.to_csv())?;
            if let Some(path) = summary {
                let text = serde_json::to_string_pretty(&sweep.summary_json()).map_err(bad)?;
                fs::write(path, text)?;
            }
            Ok(())
        }
        Command::Selftest { json } => {
            let defaults = SelftestConfig::default();
            let st = SelftestConfig {
                seed: config.seed(),
                truncation: config.truncation.unwrap_or(defaults.truncation),
                tolerances: config.tolerances(),
            };
            let reports = run_all(&st);
            if json {
                to_json_line(out, &reports)?;
            } else {
                for r in &reports {
                    writeln!(out, "{r}")?;
                }
            }
            let failed: Vec<usize> = reports
                .iter()
                .filter(|r| !r.passed())
                .map(|r| r.id)
                .collect();
            if failed.is_empty() {
                Ok(())
            } else {
                Err(CliError::CheckFailed(format!("criteria {failed:?}")))
            }
        }
    }
}

fn eval(
    config: &RunConfig,
    spec_path: &FsPath,
    basis: &[String],
    self_adjoint: bool,
    json: bool,
    text: &str,
    out: &mut dyn Write,
) -> Result<(), CliError> {
    let raw =
        fs::read_to_string(spec_path).map_err(|e| bad(format!("{}: {e}", spec_path.display())))?;
    let spec: QAlgebraSpec =
        serde_json::from_str(&raw).map_err(|e| bad(format!("{}: {e}", spec_path.display())))?;
    let spec = Arc::new(config.apply_prune(spec));
    let gens = if basis.is_empty() {
        vec![0]
    } else {
        basis
            .iter()
            .map(|n| {
                spec.generator_index(n)
                    .ok_or_else(|| bad(format!("unknown generator `{n}`")))
            })
            .collect::<Result<Vec<_>, _>>()?
    };
    let mode = if self_adjoint {
        BasisMode::SelfAdjoint
    } else {
        BasisMode::Complex
    };
    let ctx = EvalContext::with_basis(spec, &gens, mode).map_err(bad)?;
    let value = ctx.eval(&parse(text).map_err(bad)?).map_err(bad)?;
    if json {
        to_json_line(out, &value.to_json())
    } else {
        writeln!(out, "{value}")?;
        Ok(())
    }
}

fn deform(family: DeformFamily, params: &[f64]) -> Result<DeformationSweep, CliError> {
    let one = c64(1.0, 0.0);
    let pair = |v: &[i64], what: &str| match v {
        [a, b] => Ok((*a, *b)),
        _ => Err(bad(format!("{what} needs two integers"))),
    };
    match family {
        DeformFamily::Torus { exponents } => {
            torus_limit_sweep(exponents.len(), &[(exponents, one)], params).map_err(bad)
        }
        DeformFamily::Plane { k, t, step } => {
            plane_limit_sweep(pair(&k, "--k")?, &[(pair(&t, "--t")?, one)], params, step)
                .map_err(bad)
        }
        DeformFamily::Heisenberg {
            direction,
            exponents,
            mu,
            nu,
        } => {
            let exps: [i64; 3] = exponents
                .as_slice()
                .try_into()
                .map_err(|_| bad("--exponents needs three integers"))?;
            heisenberg_limit_sweep(direction.into(), exps, params, mu, nu).map_err(bad)
        }
    }
}

/// Parses `args`, runs, and returns the process exit code.
pub fn main_with_args<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = write!(err, "{e}");
            return if e.use_stderr() { 2 } else { 0 };
        }
    };
    match run(cli, out) {
        Ok(()) => 0,
        // reader went away, e.g. `| head`
        Err(CliError::Io(e)) if e.kind() == std::io::ErrorKind::BrokenPipe => 0,
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            e.exit_code()
        }
    }
}
