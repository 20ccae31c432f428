//! Subcommand definitions and their implementations.

use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use ctr_core::axioms::{
    check_afs, check_core, check_efficiency, check_ifs, check_prop, check_rr, probe_participation,
    probe_strategyproofness, Axiom, AxiomReport,
};
use ctr_core::bounds::{bound_report, BoundKind};
use ctr_core::oracle::{brute_force_best, GridSpec, DEFAULT_MAX_POINTS};
use ctr_core::{Allocation, Profile, SolveReport, SolverOptions, UtilityFunction};
use serde::Serialize;

use crate::error::{exit, CliError, Result};
use crate::format::{load_allocation, load_profile, write_json, ProfileFile};
use crate::generate::Generator;
use crate::rule::Rule;
use crate::sweep::{parse_lambda_grid, sweep_dir, write_csv};

/// Environment variable overriding the oracle's grid-size guard.
pub const MAX_GRID_ENV: &str = "CTR_MAX_GRID";

#[derive(Debug, Parser)]
#[command(
    name = "ctr",
    version,
    about = "Continuous Thiele rules for budget aggregation"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Compute a rule's outcome and its optimality certificate.
    Solve(SolveArgs),
    /// Check axioms on an allocation (by default the rule's outcome).
    Check(CheckArgs),
    /// Evaluate closed-form welfare and fairness bounds.
    Bounds(BoundsArgs),
    /// Generate a profile file.
    Gen(GenArgs),
    /// Sweep the constant-IAV ladder over a directory of profiles.
    Sweep(SweepArgs),
    /// Compare the solver with brute force on a grid.
    OracleVerify(OracleArgs),
}

#[derive(Debug, Clone, Args)]
pub struct SolverFlags {
    /// Certificate tolerance.
    #[arg(long, default_value_t = 1e-7)]
    pub tol: f64,
    /// Seed for random restarts.
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
}

impl SolverFlags {
    fn options(&self) -> SolverOptions {
        SolverOptions::default()
            .with_tol(self.tol)
            .with_seed(self.seed)
    }
}

#[derive(Debug, Args)]
pub struct SolveArgs {
    #[arg(long)]
    pub profile: PathBuf,
    /// nash | power:p | negpower:p | negexp:p | quad | util | egal
    #[arg(long, default_value = "nash")]
    pub rule: String,
    #[command(flatten)]
    pub solver: SolverFlags,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct CheckArgs {
    #[arg(long)]
    pub profile: PathBuf,
    /// JSON array, or an object with an `allocation` field. Defaults to the
    /// outcome of `--rule`.
    #[arg(long)]
    pub allocation: Option<PathBuf>,
    /// Rule solved for the default allocation and by the `par`/`sp` probes.
    #[arg(long, default_value = "nash")]
    pub rule: String,
    /// Comma list of rr, ifs, prop, afs, core, eff, par, sp.
    #[arg(long, default_value = "rr,ifs,prop,afs,core,eff")]
    pub axioms: String,
    /// Exponent for the AFS check, in (0, 1].
    #[arg(long, default_value_t = 1.0)]
    pub lambda: f64,
    /// Grid step for core, efficiency and misreport searches.
    #[arg(long, default_value_t = 0.05)]
    pub resolution: f64,
    #[command(flatten)]
    pub solver: SolverFlags,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct BoundsArgs {
    #[arg(long)]
    pub m: usize,
    #[arg(long)]
    pub n: Option<usize>,
    #[arg(long)]
    pub lambda: f64,
    /// Cohesion for the AFS exponent bound.
    #[arg(long)]
    pub alpha: Option<f64>,
    /// Comma list of wl, wl-single-minded, gamma, el-single-minded,
    /// ifs-share, afs, min-agent. Defaults to every bound the given
    /// parameters determine.
    #[arg(long)]
    pub which: Option<String>,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct GenArgs {
    /// single-minded | dirichlet:conc | groups:count:row;count:row;...
    #[arg(long)]
    pub kind: String,
    #[arg(long, default_value_t = 0)]
    pub n: usize,
    #[arg(long, default_value_t = 0)]
    pub m: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct SweepArgs {
    /// Directory of profile files.
    #[arg(long)]
    pub profile: PathBuf,
    /// Geometric grid `lo:hi:count` or a comma list.
    #[arg(long, default_value = "0.25,0.5,1,2,10")]
    pub lambda: String,
    /// Rule family; only the constant-IAV `ladder` is supported.
    #[arg(long, default_value = "ladder")]
    pub rule: String,
    #[command(flatten)]
    pub solver: SolverFlags,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct OracleArgs {
    #[arg(long)]
    pub profile: PathBuf,
    #[arg(long, default_value = "nash")]
    pub rule: String,
    #[arg(long, default_value_t = 0.01)]
    pub resolution: f64,
    #[command(flatten)]
    pub solver: SolverFlags,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

/// Runs a parsed command line and returns its exit code.
pub fn run(cli: Cli) -> Result<u8> {
    match cli.command {
        Command::Solve(a) => solve(&a),
        Command::Check(a) => check(&a),
        Command::Bounds(a) => bounds(&a),
        Command::Gen(a) => gen(&a),
        Command::Sweep(a) => sweep(&a),
        Command::OracleVerify(a) => oracle_verify(&a),
    }
}

#[derive(Serialize)]
#[serde(rename_all = "camelCase")]
struct SolveOutput<'a> {
    rule: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    labels: Option<&'a [String]>,
    #[serde(flatten)]
    report: &'a SolveReport,
}

fn solve(a: &SolveArgs) -> Result<u8> {
    let (file, profile) = load_profile(&a.profile)?;
    let rule: Rule = a.rule.parse()?;
    let report = rule.solve(&profile, &a.solver.options())?;
    let out = SolveOutput {
        rule: rule.to_string(),
        labels: file.labels.as_deref(),
        report: &report,
    };
    write_json(a.out.as_deref(), &out)?;
    Ok(if report.converged {
        exit::OK
    } else {
        exit::NOT_CONVERGED
    })
}

fn parse_list<T>(list: &str, parse: impl Fn(&str) -> Option<T>, what: &str) -> Result<Vec<T>> {
    list.split(',')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(|s| parse(s).ok_or_else(|| CliError::Invalid(format!("unknown {what} `{s}`"))))
        .collect()
}

fn check(a: &CheckArgs) -> Result<u8> {
    let (_, profile) = load_profile(&a.profile)?;
    let axioms = parse_list(&a.axioms, Axiom::parse, "axiom")?;
    let opts = a.solver.options();
    let rule: Rule = a.rule.parse()?;
    let x = match &a.allocation {
        Some(path) => Allocation::new(load_allocation(path)?)?,
        None => {
            let r = rule.solve(&profile, &opts)?;
            if !r.converged {
                eprintln!("warning: {rule} did not converge; checking its last iterate");
            }
            r.allocation
        }
    };
    let mut reports = Vec::with_capacity(axioms.len());
    for axiom in axioms {
        reports.push(check_one(axiom, &profile, &x, &rule, a, &opts)?);
    }
    write_json(a.out.as_deref(), &reports)?;
    let violated = reports.iter().any(AxiomReport::is_violated);
    Ok(if violated {
        exit::NOT_CONVERGED
    } else {
        exit::OK
    })
}

fn probe_utility(rule: &Rule) -> Result<&UtilityFunction> {
    rule.utility()
        .ok_or_else(|| CliError::Invalid(format!("rule `{rule}` is not a CTR; probes need one")))
}

fn check_one(
    axiom: Axiom,
    profile: &Profile,
    x: &Allocation,
    rule: &Rule,
    a: &CheckArgs,
    opts: &SolverOptions,
) -> Result<AxiomReport> {
    Ok(match axiom {
        Axiom::RangeRespecting => check_rr(profile, x)?,
        Axiom::IndividualFairShare => check_ifs(profile, x)?,
        Axiom::Proportionality => check_prop(profile, x)?,
        Axiom::AverageFairShare => check_afs(profile, x, a.lambda)?,
        Axiom::Core => check_core(profile, x, a.resolution)?,
        Axiom::Efficiency => check_efficiency(profile, x, a.resolution)?,
        // rule-level probes: the first agent with a violation, if any
        Axiom::Participation => {
            let f = probe_utility(rule)?;
            first_violation(profile.n(), |i| probe_participation(profile, f, i, opts))?
        }
        Axiom::Strategyproofness => {
            let f = probe_utility(rule)?;
            first_violation(profile.n(), |i| {
                probe_strategyproofness(profile, f, i, a.resolution, opts)
            })?
        }
    })
}

fn first_violation(
    n: usize,
    probe: impl Fn(usize) -> ctr_core::Result<AxiomReport>,
) -> Result<AxiomReport> {
    let mut last = None;
    for i in 0..n {
        let r = probe(i)?;
        if r.is_violated() {
            return Ok(r);
        }
        last = Some(r);
    }
    last.ok_or_else(|| CliError::Invalid("profile has no agents".into()))
}

fn bounds(a: &BoundsArgs) -> Result<u8> {
    let kinds = match &a.which {
        Some(list) => parse_list(list, BoundKind::parse, "bound")?,
        None => BoundKind::ALL
            .into_iter()
            .filter(|k| match k {
                BoundKind::Wl | BoundKind::WlSingleMinded => true,
                BoundKind::AfsExponent => a.alpha.is_some() && a.lambda <= 1.0,
                _ => a.n.is_some(),
            })
            .collect(),
    };
    let reports = kinds
        .into_iter()
        .map(|k| bound_report(k, a.m, a.n, a.lambda, a.alpha))
        // parameter errors are user input errors here, not guards
        .collect::<ctr_core::Result<Vec<_>>>()
        .map_err(CliError::Core)?;
    write_json(a.out.as_deref(), &reports)?;
    Ok(exit::OK)
}

fn gen(a: &GenArgs) -> Result<u8> {
    let generator: Generator = a.kind.parse()?;
    let random = !matches!(generator, Generator::Groups(_));
    if random && (a.n == 0 || a.m < 2) {
        return Err(CliError::Invalid(format!(
            "`{}` needs --n ≥ 1 and --m ≥ 2",
            a.kind
        )));
    }
    let profile = generator.generate(a.n, a.m, a.seed)?;
    let mut file = ProfileFile::from_profile(&profile);
    file.seed = random.then_some(a.seed);
    write_json(a.out.as_deref(), &file)?;
    Ok(exit::OK)
}

fn sweep(a: &SweepArgs) -> Result<u8> {
    if a.rule != "ladder" {
        return Err(CliError::Invalid(format!(
            "unknown rule family `{}`; only `ladder` is supported",
            a.rule
        )));
    }
    let lambdas = parse_lambda_grid(&a.lambda)?;
    let rows = sweep_dir(&a.profile, &lambdas, &a.solver.options())?;
    match &a.out {
        Some(path) => {
            let file = std::fs::File::create(path).map_err(|e| CliError::io(path, e))?;
            write_csv(file, &rows)?;
        }
        None => write_csv(std::io::stdout().lock(), &rows)?,
    }
    let stale: Vec<_> = rows.iter().filter(|r| !r.converged).collect();
    for r in &stale {
        eprintln!(
            "warning: not converged at λ = {} (m = {}, n = {}, seed = {:?})",
            r.lambda, r.m, r.n, r.seed
        );
    }
    Ok(if stale.is_empty() {
        exit::OK
    } else {
        exit::NOT_CONVERGED
    })
}

/// Grid-size guard from [`MAX_GRID_ENV`], falling back to the default.
pub fn max_grid_points() -> Result<u128> {
    match std::env::var(MAX_GRID_ENV) {
        Ok(v) => v
            .trim()
            .parse()
            .map_err(|_| CliError::Invalid(format!("{MAX_GRID_ENV}=`{v}` is not an integer"))),
        Err(_) => Ok(DEFAULT_MAX_POINTS),
    }
}

#[derive(Serialize)]
#[serde(rename_all = "camelCase")]
struct OracleOutput {
    rule: String,
    resolution: f64,
    grid_points: u128,
    solver_objective: f64,
    oracle_objective: f64,
    oracle_argmax: Vec<f64>,
    /// `oracle - solver`; positive when the grid found something better.
    gap: f64,
    tolerance: f64,
    converged: bool,
    pass: bool,
}

fn oracle_verify(a: &OracleArgs) -> Result<u8> {
    let (_, profile) = load_profile(&a.profile)?;
    let rule: Rule = a.rule.parse()?;
    if profile.m() > ctr_core::axioms::MAX_GRID_ALTERNATIVES {
        return Err(CliError::Guard(ctr_core::Error::TooLarge {
            what: "alternatives for the oracle",
            value: profile.m() as u128,
            limit: ctr_core::axioms::MAX_GRID_ALTERNATIVES as u128,
        }));
    }
    let spec = GridSpec::new(profile.m(), a.resolution, 1.0)?;
    let spec = spec.with_max_points(max_grid_points()?)?;
    let report = rule.solve(&profile, &a.solver.options())?;
    let (argmax, best) = brute_force_best(&profile, rule.objective(), &spec)?;
    let gap = best - report.objective;
    let tolerance =
        rule.lipschitz(report.satisfactions.values(), profile.m(), a.resolution) * a.resolution;
    let pass = gap <= tolerance;
    write_json(
        a.out.as_deref(),
        &OracleOutput {
            rule: rule.to_string(),
            resolution: spec.resolution(),
            grid_points: spec.point_count(),
            solver_objective: report.objective,
            oracle_objective: best,
            oracle_argmax: argmax,
            gap,
            tolerance,
            converged: report.converged,
            pass,
        },
    )?;
    Ok(if pass { exit::OK } else { exit::NOT_CONVERGED })
}

/// Loads a profile file; exposed for tests.
pub fn read_profile(path: &Path) -> Result<Profile> {
    Ok(load_profile(path)?.1)
}
