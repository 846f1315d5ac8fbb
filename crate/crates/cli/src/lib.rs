//! Command-line front end: instance validation, the continuous phase, policy
//! simulation and the ratio check against the exact optimum.
//!
//! Exit codes: 0 pass, 1 domain failure, 2 I/O or parse failure.

use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use ssm_core::crs::{self, BalancedCrs, CrsKind, Mapping};
use ssm_core::greedy::{self, CertifiedSolution, GreedyConfig, TimeIndexedSolution};
use ssm_core::lattice::{check_lattice_submodular, check_monotone, CheckOutcome};
use ssm_core::model::Problem;
use ssm_core::policy::{self, FavgReport};
use ssm_core::report::{self, SummaryRow};
use ssm_core::{oracle, Error};

pub const EXIT_PASS: u8 = 0;
pub const EXIT_DOMAIN: u8 = 1;
pub const EXIT_IO: u8 = 2;

#[derive(Debug, Parser)]
#[command(
    name = "ssm",
    version,
    about = "Adaptive stochastic submodular maximization with state-dependent costs"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Check an instance file and run the lattice property checkers.
    Validate {
        #[arg(long)]
        instance: PathBuf,
    },
    /// Run the continuous greedy and certify its output.
    Solve(RunArgs),
    /// Simulate the adaptive policy on a certified solution.
    Simulate {
        #[command(flatten)]
        run: RunArgs,
        /// Solution file written by `solve`.
        #[arg(long)]
        solution: PathBuf,
    },
    /// Compare the policy against the exact optimum on a small instance.
    Ratio(RunArgs),
}

#[derive(Debug, Clone, Args)]
pub struct RunArgs {
    #[arg(long)]
    pub instance: PathBuf,
    #[arg(long, default_value_t = 0.25)]
    pub beta: f64,
    /// Continuous greedy steps.
    #[arg(long, default_value_t = greedy::DEFAULT_STEPS)]
    pub steps: usize,
    /// Samples per gradient coordinate.
    #[arg(long, default_value_t = greedy::DEFAULT_GRADIENT_SAMPLES)]
    pub grad_samples: usize,
    /// Policy runs for the utility estimate.
    #[arg(long, default_value_t = 10_000)]
    pub runs: usize,
    /// Trials for the keep-frequency tables.
    #[arg(long, default_value_t = 10_000)]
    pub trials: usize,
    #[arg(long, default_value_t = CrsKind::RandomPriority)]
    pub crs: CrsKind,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, default_value_t = 1)]
    pub workers: usize,
    /// Output directory.
    #[arg(long, default_value = ".")]
    pub out: PathBuf,
}

impl RunArgs {
    fn check(&self) -> Result<(), Error> {
        if !(self.beta > 0.0 && self.beta <= 1.0) {
            return Err(Error::InvalidInput(format!(
                "beta must lie in (0, 1], got {}",
                self.beta
            )));
        }
        let counts = [
            ("steps", self.steps),
            ("grad-samples", self.grad_samples),
            ("runs", self.runs),
            ("trials", self.trials),
            ("workers", self.workers),
        ];
        if let Some((name, _)) = counts.iter().find(|(_, v)| *v < 1) {
            return Err(Error::InvalidInput(format!("--{name} must be at least 1")));
        }
        if self.runs < 2 {
            return Err(Error::InvalidInput("--runs must be at least 2".into()));
        }
        Ok(())
    }

    fn stopping_time(&self) -> f64 {
        greedy::stopping_time(self.beta)
    }

    fn crs(&self) -> BalancedCrs<f64> {
        BalancedCrs::new(self.crs, self.beta)
    }
}

fn exit_code(e: &Error) -> u8 {
    match e {
        Error::Io(_) | Error::Json(_) | Error::Csv(_) => EXIT_IO,
        _ => EXIT_DOMAIN,
    }
}

/// Runs one command, writing results to `out` and diagnostics to `err`.
pub fn run(cli: &Cli, out: &mut dyn Write, err: &mut dyn Write) -> u8 {
    let result = match &cli.command {
        Command::Validate { instance } => validate(instance, out),
        Command::Solve(args) => solve(args, out),
        Command::Simulate { run, solution } => simulate(run, solution, out),
        Command::Ratio(args) => ratio(args, out),
    };
    match result {
        Ok(code) => code,
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            exit_code(&e)
        }
    }
}

fn load_valid(path: &Path, out: &mut dyn Write) -> Result<Option<Problem<f64>>, Error> {
    let problem = Problem::<f64>::load(path)?;
    let violations = problem.validate();
    if violations.is_empty() {
        return Ok(Some(problem));
    }
    for v in &violations {
        writeln!(out, "violation: {v}")?;
    }
    Ok(None)
}

pub fn validate(path: &Path, out: &mut dyn Write) -> Result<u8, Error> {
    let Some(problem) = load_valid(path, out)? else {
        return Ok(EXIT_DOMAIN);
    };
    let (n, b) = (problem.instance.n, problem.instance.states);
    let f = &problem.utility;
    let monotone = match check_monotone(f, n, b) {
        Err(Error::GuardExceeded { .. }) => {
            writeln!(
                out,
                "lattice checks skipped: [0;{b}]^{n} exceeds the enumeration guard"
            )?;
            writeln!(out, "valid")?;
            return Ok(EXIT_PASS);
        }
        other => other?,
    };
    let mut ok = true;
    if let CheckOutcome::Violated(w) = monotone {
        writeln!(
            out,
            "violation: utility not monotone: f({:?}) > f({:?})",
            w.lower.as_slice(),
            w.upper.as_slice()
        )?;
        ok = false;
    }
    if let CheckOutcome::Violated(w) = check_lattice_submodular(f, n, b)? {
        writeln!(
            out,
            "violation: utility not lattice submodular: u={:?}, v={:?}, item {}, state {}",
            w.u.as_slice(),
            w.v.as_slice(),
            w.item + 1,
            w.state
        )?;
        ok = false;
    }
    if ok {
        writeln!(out, "valid")?;
        Ok(EXIT_PASS)
    } else {
        Ok(EXIT_DOMAIN)
    }
}

fn write_file(path: &Path, text: &str) -> Result<(), Error> {
    fs::write(path, text)?;
    Ok(())
}

pub fn solve(args: &RunArgs, out: &mut dyn Write) -> Result<u8, Error> {
    args.check()?;
    let Some(problem) = load_valid(&args.instance, out)? else {
        return Ok(EXIT_DOMAIN);
    };
    let l = args.stopping_time();
    let config = GreedyConfig {
        l,
        steps: args.steps,
        grad_samples: args.grad_samples,
        seed: args.seed,
        workers: args.workers,
    };
    let sol = greedy::run(&problem.instance, &problem.utility, &config)?;
    let report = greedy::certify(&problem.instance, &sol, l);
    fs::create_dir_all(&args.out)?;
    sol.save(args.out.join("solution.json"))?;
    write_file(&args.out.join("certification.txt"), &report.to_string())?;
    write_file(
        &args.out.join("certification.json"),
        &serde_json::to_string_pretty(&report)?,
    )?;
    let marginals: Vec<String> = sol.marginals.iter().map(|m| format!("{m:.6}")).collect();
    writeln!(out, "marginals: [{}]", marginals.join(", "))?;
    writeln!(
        out,
        "certification at l={l}: {} (min margin {:.3e})",
        if report.passed { "PASS" } else { "FAIL" },
        report.min_margin()
    )?;
    Ok(if report.passed {
        EXIT_PASS
    } else {
        EXIT_DOMAIN
    })
}

fn csv_file(path: PathBuf) -> Result<BufWriter<File>, Error> {
    Ok(BufWriter::new(File::create(path)?))
}

struct Simulation {
    favg: FavgReport<f64>,
    gamma_min: Option<f64>,
}

fn simulate_certified(
    args: &RunArgs,
    problem: &Problem<f64>,
    cert: &CertifiedSolution<f64>,
    summary: &mut Vec<SummaryRow>,
) -> Result<Simulation, Error> {
    let inst = &problem.instance;
    let crs = args.crs();
    let favg = policy::estimate_favg(
        inst,
        &problem.utility,
        &crs,
        cert,
        args.runs,
        args.seed,
        args.workers,
    )?;
    let gamma = crs::estimate_gamma(
        &crs,
        &inst.outer,
        cert.marginals(),
        args.trials,
        args.seed,
        args.workers,
    )?;
    report::write_gamma_csv(
        &gamma,
        crs.documented_gamma(),
        csv_file(args.out.join("gamma.csv"))?,
    )?;
    let mut alpha = Vec::new();
    for mapping in [Mapping::A, Mapping::B, Mapping::C] {
        alpha.extend(crs::estimate_alpha(
            mapping,
            inst,
            &crs,
            cert.solution(),
            args.trials,
            args.seed,
            args.workers,
        )?);
    }
    report::write_alpha_csv(&alpha, csv_file(args.out.join("alpha.csv"))?)?;
    let gamma_min = crs::min_gamma(&gamma).map(|e| e.mean);
    let e = favg.estimate;
    summary.extend([
        SummaryRow::new("favg", e.mean),
        SummaryRow::new("favg_se", e.std_err),
        SummaryRow::new("runs", e.samples),
        SummaryRow::new("inner_violations", favg.inner_violations),
        SummaryRow::new("outer_violations", favg.outer_violations),
        SummaryRow::new("adaptivity_violations", favg.adaptivity_violations),
        SummaryRow::new(
            "gamma_min",
            gamma_min.map_or(String::new(), |g| g.to_string()),
        ),
        SummaryRow::new("gamma_documented", crs.documented_gamma()),
    ]);
    Ok(Simulation { favg, gamma_min })
}

fn violations_clean(f: &FavgReport<f64>) -> bool {
    f.inner_violations == 0 && f.outer_violations == 0 && f.adaptivity_violations == 0
}

pub fn simulate(args: &RunArgs, solution: &Path, out: &mut dyn Write) -> Result<u8, Error> {
    args.check()?;
    let Some(problem) = load_valid(&args.instance, out)? else {
        return Ok(EXIT_DOMAIN);
    };
    let sol = TimeIndexedSolution::<f64>::load(solution)?;
    let l = sol.meta.l;
    let cert = CertifiedSolution::new(&problem.instance, sol, l)?;
    fs::create_dir_all(&args.out)?;
    let mut summary = vec![SummaryRow::new("l", l), SummaryRow::new("crs", args.crs)];
    let sim = simulate_certified(args, &problem, &cert, &mut summary)?;
    report::write_summary_csv(&summary, csv_file(args.out.join("summary.csv"))?)?;
    let e = sim.favg.estimate;
    writeln!(
        out,
        "favg {:.6} (se {:.2e}, {} runs); violations inner {} outer {}",
        e.mean, e.std_err, e.samples, sim.favg.inner_violations, sim.favg.outer_violations
    )?;
    Ok(if violations_clean(&sim.favg) {
        EXIT_PASS
    } else {
        EXIT_DOMAIN
    })
}

/// `(1 - min{2 beta, 1/2}) * gamma * (1 - e^{-min{beta, 1/4}})`.
pub fn ratio_bound(beta: f64, gamma: f64) -> f64 {
    (1.0 - (2.0 * beta).min(0.5)) * gamma * (1.0 - (-greedy::stopping_time(beta)).exp())
}

pub fn ratio(args: &RunArgs, out: &mut dyn Write) -> Result<u8, Error> {
    args.check()?;
    let Some(problem) = load_valid(&args.instance, out)? else {
        return Ok(EXIT_DOMAIN);
    };
    let opt = match oracle::optimal_adaptive_value(&problem.instance, &problem.utility) {
        Err(e @ Error::GuardExceeded { .. }) => {
            writeln!(out, "refused: {e}")?;
            return Ok(EXIT_DOMAIN);
        }
        other => other?,
    };
    let l = args.stopping_time();
    let config = GreedyConfig {
        l,
        steps: args.steps,
        grad_samples: args.grad_samples,
        seed: args.seed,
        workers: args.workers,
    };
    let sol = greedy::run(&problem.instance, &problem.utility, &config)?;
    let cert = CertifiedSolution::new(&problem.instance, sol, l)?;
    fs::create_dir_all(&args.out)?;
    let mut summary = vec![
        SummaryRow::new("l", l),
        SummaryRow::new("crs", args.crs),
        SummaryRow::new("opt", opt.value),
    ];
    let sim = simulate_certified(args, &problem, &cert, &mut summary)?;
    let gamma = sim
        .gamma_min
        .unwrap_or_else(|| args.crs().documented_gamma());
    let bound = ratio_bound(args.beta, gamma);
    let e = sim.favg.estimate;
    let pass = violations_clean(&sim.favg) && e.mean >= bound * opt.value - 3.0 * e.std_err;
    summary.extend([
        SummaryRow::new("bound", bound),
        SummaryRow::new("verdict", if pass { "PASS" } else { "FAIL" }),
    ]);
    report::write_summary_csv(&summary, csv_file(args.out.join("summary.csv"))?)?;
    let ratio = if opt.value > 0.0 {
        e.mean / opt.value
    } else {
        1.0
    };
    writeln!(
        out,
        "favg/OPT = {:.6}/{:.6} = {ratio:.4}; bound {bound:.4} (gamma {gamma:.4}); {}",
        e.mean,
        opt.value,
        if pass { "PASS" } else { "FAIL" }
    )?;
    Ok(if pass { EXIT_PASS } else { EXIT_DOMAIN })
}
