//! Command-line front end.
//!
//! Exit status is 0 on success, 1 when the model cannot be read or fails
//! validation, and 2 when a solver fails. Failures print their error code
//! first on the diagnostic stream.

use std::ffi::OsString;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand, ValueEnum};

use crate::cluster_decision::{
    build_one_directional_tree, decision_cluster_tree, ClusterMode, OneDirectionalMode, ValuePlacement,
};
use crate::error::{Error, Result};
use crate::factor::Configurations;
use crate::format::{load_model, outcome_index, policy_to_json, PolicyFile};
use crate::model::{validate, InfluenceDiagram, Kind};
use crate::policy::EvaluationResult;
use crate::solve::{solve, Method};
use crate::transform::{prepare, TransformOptions};

#[derive(Debug, Parser)]
#[command(name = "infdiag", version, about = "Solve influence diagrams by probabilistic inference")]
pub struct Cli {
    /// Add missing memory arcs: each decision inherits earlier decisions and their parents.
    #[arg(long, global = true)]
    pub complete_no_forgetting: bool,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Check a model and list every problem found.
    Validate { model: PathBuf },
    /// Find an optimal policy.
    Solve(SolveArgs),
    /// Node counts, decision order and information sets.
    Info { model: PathBuf },
}

#[derive(Debug, clap::Args)]
pub struct SolveArgs {
    pub model: PathBuf,
    #[arg(long, value_enum, default_value_t = MethodArg::Queries)]
    pub method: MethodArg,
    /// Value encoding; defaults to rescaled, or valuation for onedir.
    #[arg(long, value_enum)]
    pub mode: Option<ModeArg>,
    /// Where the one-directional tree carries the value variable.
    #[arg(long, value_enum, default_value_t = PlacementArg::RootPath)]
    pub placement: PlacementArg,
    /// Extra observation, as VAR=OUTCOME (outcome name or index).
    #[arg(long = "evidence", value_name = "VAR=OUTCOME")]
    pub evidence: Vec<String>,
    /// Write the policy as JSON.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Write the cluster tree in DOT format.
    #[arg(long)]
    pub dot: Option<PathBuf>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum MethodArg {
    Queries,
    Cluster,
    Onedir,
    Oracle,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum ModeArg {
    Rescaled,
    Valuation,
    Likelihood,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum PlacementArg {
    RootPath,
    Everywhere,
}

/// Failure with its exit status.
struct Failure {
    status: i32,
    error: Error,
}

fn invalid(error: Error) -> Failure {
    Failure { status: 1, error }
}

fn solver(error: Error) -> Failure {
    Failure { status: 2, error }
}

/// Parses `args` (program name first) and runs the command.
pub fn run<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let status = if e.use_stderr() { 1 } else { 0 };
            let text = e.render().to_string();
            let _ = if status == 0 { out.write_all(text.as_bytes()) } else { err.write_all(text.as_bytes()) };
            return status;
        }
    };
    let complete = cli.complete_no_forgetting;
    let outcome = match &cli.command {
        Command::Validate { model } => run_validate(model, complete, out, err),
        Command::Solve(args) => run_solve(args, complete, out),
        Command::Info { model } => run_info(model, complete, out),
    };
    match outcome {
        Ok(status) => status,
        Err(f) => {
            let _ = writeln!(err, "{}: {}", f.error.code(), f.error);
            f.status
        }
    }
}

fn load(path: &Path, complete: bool) -> std::result::Result<InfluenceDiagram, Failure> {
    let mut d = load_model(path).map_err(invalid)?;
    if complete {
        d.complete_no_forgetting();
    }
    Ok(d)
}

fn require_valid(d: &InfluenceDiagram) -> std::result::Result<(), Failure> {
    let report = validate(d);
    if !report.is_ok() {
        return Err(invalid(Error::InvalidDiagram(report.to_string().trim_end().replace('\n', "; "))));
    }
    Ok(())
}

fn run_validate(
    path: &Path,
    complete: bool,
    out: &mut dyn Write,
    err: &mut dyn Write,
) -> std::result::Result<i32, Failure> {
    let d = load(path, complete)?;
    let report = validate(&d);
    let text = report.to_string();
    if report.is_ok() {
        let _ = writeln!(out, "ok: {} variables, {} decisions", d.variables.len(), d.decision_order.len());
        let _ = out.write_all(text.as_bytes());
        Ok(0)
    } else {
        // the first error code leads, as for every other failure
        let _ = writeln!(err, "{}: model failed validation", report.errors[0].code.as_str());
        let _ = out.write_all(text.as_bytes());
        Ok(1)
    }
}

fn method_of(args: &SolveArgs) -> Result<Method> {
    let placement = match args.placement {
        PlacementArg::RootPath => ValuePlacement::RootPath,
        PlacementArg::Everywhere => ValuePlacement::Everywhere,
    };
    let unsupported = |what: &str| Err(Error::Unsupported(what.to_string()));
    Ok(match (args.method, args.mode) {
        (MethodArg::Queries, None | Some(ModeArg::Rescaled)) => Method::Queries,
        (MethodArg::Queries, Some(_)) => return unsupported("the query method works on the rescaled utility only"),
        (MethodArg::Cluster, None | Some(ModeArg::Rescaled)) => Method::Cluster(ClusterMode::Rescaled),
        (MethodArg::Cluster, Some(ModeArg::Valuation)) => Method::Cluster(ClusterMode::Valuation),
        (MethodArg::Cluster, Some(ModeArg::Likelihood)) => Method::Cluster(ClusterMode::Likelihood),
        (MethodArg::Onedir, None | Some(ModeArg::Valuation)) => {
            Method::OneDirectional(OneDirectionalMode::Valuation, placement)
        }
        (MethodArg::Onedir, Some(ModeArg::Rescaled)) => Method::OneDirectional(OneDirectionalMode::Rescaled, placement),
        (MethodArg::Onedir, Some(ModeArg::Likelihood)) => {
            return unsupported("one-directional trees carry the value as a variable")
        }
        (MethodArg::Oracle, None) => Method::Oracle,
        (MethodArg::Oracle, Some(_)) => return unsupported("the oracle takes no value mode"),
    })
}

fn apply_evidence(d: &mut InfluenceDiagram, items: &[String]) -> Result<()> {
    for item in items {
        let (name, outcome) = item
            .split_once('=')
            .ok_or_else(|| Error::InvalidArgument(format!("evidence {item:?} is not VAR=OUTCOME")))?;
        let var = d.lookup(name.trim())?;
        if d.kind(var) != Kind::Chance {
            return Err(Error::InvalidArgument(format!("{name} is not a chance variable")));
        }
        let i = outcome_index(d, var, outcome.trim())?;
        d.evidence.insert(var, i);
    }
    Ok(())
}

fn dot_for(d: &InfluenceDiagram, method: Method) -> Result<String> {
    let name = |v: crate::model::VarId| d.name(v).to_string();
    match method {
        Method::Queries => Ok(decision_cluster_tree(d, ClusterMode::Rescaled)?.0.to_dot(name)),
        Method::Cluster(mode) => Ok(decision_cluster_tree(d, mode)?.0.to_dot(name)),
        Method::OneDirectional(mode, placement) => Ok(build_one_directional_tree(d, mode, placement)?.to_dot()),
        Method::Oracle => Err(Error::Unsupported("the oracle builds no cluster tree".into())),
    }
}

fn write_file(path: &Path, text: &str) -> Result<()> {
    std::fs::write(path, text).map_err(|e| Error::Io(format!("{}: {e}", path.display())))
}

fn run_solve(args: &SolveArgs, complete: bool, out: &mut dyn Write) -> std::result::Result<i32, Failure> {
    let mut d = load(&args.model, complete)?;
    apply_evidence(&mut d, &args.evidence).map_err(invalid)?;
    require_valid(&d)?;
    let method = method_of(args).map_err(solver)?;
    let result = solve(&d, method).map_err(solver)?;
    let _ = out.write_all(render_result(&d, &result).as_bytes());
    if let Some(path) = &args.out {
        write_file(path, &policy_to_json(&PolicyFile::from_result(&d, &result))).map_err(solver)?;
    }
    if let Some(path) = &args.dot {
        write_file(path, &dot_for(&d, method).map_err(solver)?).map_err(solver)?;
    }
    Ok(0)
}

/// Human-readable summary of a solution; stable for fixed input.
pub fn render_result(d: &InfluenceDiagram, r: &EvaluationResult) -> String {
    let mut s = String::new();
    s.push_str(&format!("method: {}\n", r.diagnostics.backend));
    s.push_str(&format!("MEV: {}\n", r.mev));
    if let Some(meu) = r.meu {
        s.push_str(&format!("MEU: {meu}\n"));
    }
    s.push_str(&format!("P(E=e): {}\n", r.evidence_probability));
    for rule in &r.policy.decisions {
        let scope: Vec<&str> = rule.scope.iter().map(|v| d.name(*v)).collect();
        if scope.is_empty() {
            s.push_str(&format!("policy {}\n", d.name(rule.decision)));
        } else {
            s.push_str(&format!("policy {} | {}\n", d.name(rule.decision), scope.join(", ")));
        }
        let alternatives = &d.var(rule.decision).outcomes;
        for (config, choice) in Configurations::new(&rule.scope_cards).zip(&rule.choices) {
            let condition: Vec<String> = rule
                .scope
                .iter()
                .zip(&config)
                .map(|(v, i)| format!("{}={}", d.name(*v), d.var(*v).outcomes[*i]))
                .collect();
            let condition = if condition.is_empty() { "always".to_string() } else { condition.join(", ") };
            s.push_str(&format!("  {condition} -> {}\n", alternatives[*choice]));
        }
    }
    for note in &r.diagnostics.notes {
        s.push_str(&format!("note: {note}\n"));
    }
    s
}

fn run_info(path: &Path, complete: bool, out: &mut dyn Write) -> std::result::Result<i32, Failure> {
    let d = load(path, complete)?;
    require_valid(&d)?;
    let p = prepare(&d, TransformOptions::default()).map_err(solver)?;
    let names = |vs: &[crate::model::VarId]| -> String {
        let v: Vec<&str> = vs.iter().map(|v| d.name(*v)).collect();
        format!("{{{}}}", v.join(", "))
    };
    let mut s = String::new();
    s.push_str(&format!(
        "variables: {} chance, {} decision, {} value\n",
        d.nodes_of(Kind::Chance).len(),
        d.nodes_of(Kind::Decision).len(),
        d.nodes_of(Kind::Value).len()
    ));
    s.push_str(&format!("arcs: {}\n", d.arcs.len()));
    let order: Vec<&str> = d.decision_order.iter().map(|v| d.name(*v)).collect();
    s.push_str(&format!("decision order: {}\n", order.join(", ")));
    if !d.evidence.is_empty() {
        let ev: Vec<String> =
            d.evidence.iter().map(|(v, i)| format!("{}={}", d.name(*v), d.var(*v).outcomes[*i])).collect();
        s.push_str(&format!("evidence: {}\n", ev.join(", ")));
    }
    for (dec, relevant) in &p.relevant {
        s.push_str(&format!(
            "{}: information {} relevant {}\n",
            d.name(*dec),
            names(&p.information[dec]),
            names(relevant)
        ));
    }
    let _ = out.write_all(s.as_bytes());
    Ok(0)
}
