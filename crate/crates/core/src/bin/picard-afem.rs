use std::collections::HashMap;
use std::fs;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use picard_afem::bench::{run_experiment, zshape, NestedMode, ProblemKind, ProblemSpec, SweepConfig};
use picard_afem::SolverKind;

#[derive(Parser, Debug)]
#[command(name = "picard-afem", version, about = "Adaptive FEM with inexact Picard iteration: Z-shape benchmarks")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Run a θ×λ sweep, writing one CSV trace per run and summary.json.
    Sweep(SweepArgs),
    /// Write the initial Z-shape mesh in the text mesh format.
    ZshapeMesh {
        /// Output file; stdout when omitted.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Tag the two edges at the reentrant corner as Neumann.
        #[arg(long)]
        neumann: bool,
    },
}

#[derive(Args, Debug, Default)]
struct SweepArgs {
    /// zshape-known | zshape-unknown
    #[arg(long)]
    problem: Option<ProblemKind>,
    /// Bulk parameter; repeat for several values.
    #[arg(long)]
    theta: Vec<f64>,
    /// Picard stopping parameter; repeat for several values.
    #[arg(long)]
    lambda: Vec<f64>,
    /// true | false | both
    #[arg(long)]
    nested: Option<NestedMode>,
    #[arg(long)]
    max_dofs: Option<usize>,
    /// Optional element budget in addition to max-dofs.
    #[arg(long)]
    max_elements: Option<usize>,
    /// Uniform refinements of the built-in initial mesh.
    #[arg(long)]
    initial_refinements: Option<usize>,
    #[arg(long)]
    out: Option<PathBuf>,
    /// direct | cg
    #[arg(long)]
    solver: Option<SolverKind>,
    #[arg(long)]
    seed: Option<u64>,
    /// key=value file with the same keys as the flags; flags take precedence.
    #[arg(long)]
    config: Option<PathBuf>,
}

fn parse_list<T: std::str::FromStr>(key: &str, values: &[String]) -> Result<Vec<T>, String> {
    let mut out = Vec::new();
    for v in values {
        for item in v.split(',').map(str::trim).filter(|s| !s.is_empty()) {
            out.push(item.parse().map_err(|_| format!("invalid value '{item}' for {key}"))?);
        }
    }
    Ok(out)
}

fn parse_one<T: std::str::FromStr>(key: &str, values: &[String]) -> Result<T, String>
where
    T::Err: std::fmt::Display,
{
    let v = values.last().expect("non-empty");
    v.parse().map_err(|e| format!("invalid value '{v}' for {key}: {e}"))
}

/// Merges a key=value config file under the command-line flags.
fn apply_config_file(args: &mut SweepArgs, text: &str) -> Result<(), String> {
    let mut entries: HashMap<String, Vec<String>> = HashMap::new();
    for (i, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let (k, v) = line.split_once('=').ok_or_else(|| format!("config line {}: expected key=value", i + 1))?;
        entries.entry(k.trim().replace('_', "-")).or_default().push(v.trim().to_string());
    }
    for (key, values) in &entries {
        match key.as_str() {
            "problem" if args.problem.is_none() => args.problem = Some(parse_one(key, values)?),
            "theta" if args.theta.is_empty() => args.theta = parse_list(key, values)?,
            "lambda" if args.lambda.is_empty() => args.lambda = parse_list(key, values)?,
            "nested" if args.nested.is_none() => args.nested = Some(parse_one(key, values)?),
            "max-dofs" if args.max_dofs.is_none() => args.max_dofs = Some(parse_one(key, values)?),
            "max-elements" if args.max_elements.is_none() => args.max_elements = Some(parse_one(key, values)?),
            "initial-refinements" if args.initial_refinements.is_none() => {
                args.initial_refinements = Some(parse_one(key, values)?)
            }
            "out" if args.out.is_none() => args.out = Some(PathBuf::from(values.last().expect("non-empty"))),
            "solver" if args.solver.is_none() => args.solver = Some(parse_one(key, values)?),
            "seed" if args.seed.is_none() => args.seed = Some(parse_one(key, values)?),
            "problem" | "theta" | "lambda" | "nested" | "max-dofs" | "max-elements" | "initial-refinements" | "out"
            | "solver" | "seed" => {}
            other => return Err(format!("unknown config key '{other}'")),
        }
    }
    Ok(())
}

fn sweep(mut args: SweepArgs) -> Result<bool, String> {
    if let Some(path) = args.config.clone() {
        let text = fs::read_to_string(&path).map_err(|e| format!("reading {}: {e}", path.display()))?;
        apply_config_file(&mut args, &text)?;
    }
    let defaults = SweepConfig::default();
    let kind = args.problem.ok_or("--problem is required")?;
    let sweep = SweepConfig {
        thetas: if args.theta.is_empty() { defaults.thetas } else { args.theta },
        lambdas: if args.lambda.is_empty() { defaults.lambdas } else { args.lambda },
        nested: args.nested.unwrap_or(defaults.nested),
        max_dofs: args.max_dofs.unwrap_or(defaults.max_dofs),
        max_elements: args.max_elements,
        initial_refinements: args.initial_refinements.unwrap_or(defaults.initial_refinements),
        out_dir: args.out.unwrap_or(defaults.out_dir),
        solver: args.solver.unwrap_or(defaults.solver),
        seed: args.seed.unwrap_or(defaults.seed),
    };
    let spec = ProblemSpec::with_refinements(kind, sweep.initial_refinements);
    let report = run_experiment(&spec, &sweep).map_err(|e| e.to_string())?;
    for r in &report.runs {
        let fmt = |x: Option<f64>| x.map_or("-".to_string(), |v| format!("{v:.3}"));
        match &r.error {
            None => println!(
                "{} theta={} lambda={:e} nested={} levels={} rate={} rate_work={} picard={} termination={}",
                r.problem,
                r.theta,
                r.lambda,
                r.nested,
                r.levels,
                fmt(r.rate_elements),
                fmt(r.rate_work),
                r.picard_class.as_deref().unwrap_or("-"),
                r.termination.as_deref().unwrap_or("-"),
            ),
            Some(e) => eprintln!("{} theta={} lambda={:e} nested={} FAILED: {e}", r.problem, r.theta, r.lambda, r.nested),
        }
    }
    println!("summary: {}", sweep.out_dir.join("summary.json").display());
    Ok(report.all_completed())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Sweep(args) => sweep(args),
        Command::ZshapeMesh { out, neumann } => {
            let mesh = zshape(neumann);
            match out {
                Some(path) => mesh.write_file(&path).map(|_| true).map_err(|e| e.to_string()),
                None => {
                    print!("{}", mesh.to_text());
                    Ok(true)
                }
            }
        }
    };
    match result {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::FAILURE,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn config_file_fills_missing_flags() {
        let mut args = SweepArgs { theta: vec![0.4], ..Default::default() };
        let text = "problem = zshape-unknown\ntheta=0.2,0.8\nlambda=0.1\nlambda=0.01\nmax_dofs=500\n# comment\nnested=false\n";
        apply_config_file(&mut args, text).unwrap();
        assert_eq!(args.problem, Some(ProblemKind::ZshapeUnknown));
        assert_eq!(args.theta, vec![0.4]);
        assert_eq!(args.lambda, vec![0.1, 0.01]);
        assert_eq!(args.max_dofs, Some(500));
        assert_eq!(args.nested, Some(NestedMode::False));
    }

    #[test]
    fn config_file_errors() {
        let mut args = SweepArgs::default();
        assert!(apply_config_file(&mut args, "bogus=1").is_err());
        assert!(apply_config_file(&mut args, "theta").is_err());
        assert!(apply_config_file(&mut args, "theta=abc").is_err());
    }
}
