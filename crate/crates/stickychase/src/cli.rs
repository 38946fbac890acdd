//! The `stickychase` command line.

use std::ffi::OsString;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use log::{debug, info, warn};

use stickychase_core::{
    build_dependency_graph, chase, check_stickiness_bounded, classify, magicd_plus, schqa, Budget,
    ConjunctiveQuery, MagicOptions, Program, SchqaError, SchqaOptions, SelectionFunctionId,
    StickinessVerdict,
};

use crate::dot::dependency_graph_dot;
use crate::facts::{load_facts_delimited, FactsError};
use crate::json;
use crate::parse::{parse_program, parse_query};
use crate::render::{render_program, NullNames};

pub const EXIT_OK: i32 = 0;
pub const EXIT_NO: i32 = 1;
pub const EXIT_PARSE: i32 = 2;
pub const EXIT_PRECONDITION: i32 = 3;
pub const EXIT_IO: i32 = 4;

#[derive(Parser, Debug)]
#[command(
    name = "stickychase",
    version,
    about = "Classify, chase, query and rewrite existential rule programs"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Report sticky, weakly acyclic, weakly sticky and JWS membership.
    Classify {
        #[command(flatten)]
        input: Input,
        #[arg(long, value_enum, default_value_t = Format::Text)]
        format: Format,
        /// Also write the dependency graph as DOT.
        #[arg(long)]
        dot: Option<PathBuf>,
    },
    /// Materialize the restricted chase.
    Chase {
        #[command(flatten)]
        input: Input,
        #[arg(long, default_value_t = 10_000)]
        max_steps: usize,
        #[arg(long, default_value_t = 100_000)]
        max_atoms: usize,
        #[arg(long, value_enum, default_value_t = Format::Text)]
        format: Format,
        /// Write one JSON record per chase step to this file.
        #[arg(long)]
        trace: Option<PathBuf>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Answer a conjunctive query.
    Query {
        #[command(flatten)]
        input: Input,
        #[command(flatten)]
        query: QueryArg,
        #[arg(long, default_value = "existential")]
        selection: SelectionFunctionId,
        /// Number of resumptions; defaults to the number of query variables.
        #[arg(long)]
        resumptions: Option<usize>,
        /// Rewrite with magic sets first, then answer with the existential selection.
        #[arg(long)]
        rewrite_first: bool,
        #[arg(long)]
        merge_magic: bool,
        /// Run even when the program is outside the selection's class.
        #[arg(long)]
        force: bool,
        #[arg(long, value_enum, default_value_t = Format::Text)]
        format: Format,
        /// Write the run log (applied pairs, freezes, resumptions) as JSON lines.
        #[arg(long)]
        trace: Option<PathBuf>,
    },
    /// Print the magic-sets rewriting of a program for a query.
    Rewrite {
        #[command(flatten)]
        input: Input,
        #[command(flatten)]
        query: QueryArg,
        #[arg(long)]
        merge_magic: bool,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Look for a stickiness violation within a bounded chase.
    Check {
        #[command(flatten)]
        input: Input,
        #[arg(long, default_value = "bottom")]
        selection: SelectionFunctionId,
        #[arg(long, default_value_t = 10)]
        steps: usize,
        #[arg(long, value_enum, default_value_t = Format::Text)]
        format: Format,
    },
}

#[derive(Args, Debug)]
pub struct Input {
    /// Program in .dlp syntax.
    pub program: PathBuf,
    /// Extra facts as PRED/ARITY=FILE, one delimited row per fact.
    #[arg(long, value_name = "PRED/ARITY=FILE")]
    pub facts: Vec<String>,
    /// Field delimiter of fact files.
    #[arg(long, default_value_t = ',')]
    pub delimiter: char,
}

#[derive(Args, Debug)]
#[group(required = true, multiple = false)]
pub struct QueryArg {
    /// Query text such as "?(X) <- p(a,X)."
    #[arg(long)]
    pub query: Option<String>,
    #[arg(long)]
    pub query_file: Option<PathBuf>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Text,
    Json,
}

/// Failure carrying its exit code.
struct Fail(i32, String);

fn io_fail(path: &Path, e: impl std::fmt::Display) -> Fail {
    Fail(EXIT_IO, format!("{}: {}", path.display(), e))
}

fn read(path: &Path) -> Result<String, Fail> {
    fs::read_to_string(path).map_err(|e| io_fail(path, e))
}

fn load_program(input: &Input) -> Result<Program, Fail> {
    let text = read(&input.program)?;
    let mut program = parse_program(&text).map_err(|e| {
        let lines: Vec<String> =
            e.0.iter()
                .map(|d| format!("{}:{}", input.program.display(), d))
                .collect();
        Fail(EXIT_PARSE, lines.join("\n"))
    })?;
    if input.facts.is_empty() {
        return Ok(program);
    }
    let delimiter = u8::try_from(input.delimiter).map_err(|_| {
        Fail(
            EXIT_PARSE,
            format!("delimiter {:?} is not a single byte", input.delimiter),
        )
    })?;
    let mut facts = program.facts.clone();
    for spec in &input.facts {
        let bad = || {
            Fail(
                EXIT_PARSE,
                format!("--facts {:?}: expected PRED/ARITY=FILE", spec),
            )
        };
        let (head, file) = spec.split_once('=').ok_or_else(bad)?;
        let (pred, arity) = head.split_once('/').ok_or_else(bad)?;
        let arity: usize = arity.parse().map_err(|_| bad())?;
        let path = Path::new(file);
        let loaded = load_facts_delimited(path, pred, arity, delimiter).map_err(|e| match e {
            FactsError::IoFailure(m) => Fail(EXIT_IO, m),
            other => Fail(EXIT_PARSE, format!("{}: {}", path.display(), other)),
        })?;
        info!(
            "loaded {} facts for {}/{} from {}",
            loaded.len(),
            pred,
            arity,
            path.display()
        );
        facts.extend(loaded);
    }
    program = stickychase_core::make_program(program.rules, facts).map_err(|errs| {
        let lines: Vec<String> = errs.iter().map(|e| e.to_string()).collect();
        Fail(EXIT_PARSE, lines.join("\n"))
    })?;
    Ok(program)
}

fn load_query(q: &QueryArg) -> Result<ConjunctiveQuery, Fail> {
    let (text, origin) = match (&q.query, &q.query_file) {
        (Some(t), _) => (t.clone(), String::from("--query")),
        (None, Some(p)) => (read(p)?, p.display().to_string()),
        (None, None) => unreachable!("clap requires one query source"),
    };
    parse_query(&text).map_err(|e| {
        let lines: Vec<String> = e.0.iter().map(|d| format!("{}:{}", origin, d)).collect();
        Fail(EXIT_PARSE, lines.join("\n"))
    })
}

fn write_out(out: &Option<PathBuf>, text: &str, stdout: &mut dyn Write) -> Result<(), Fail> {
    match out {
        Some(p) => fs::write(p, text).map_err(|e| io_fail(p, e)),
        None => stdout
            .write_all(text.as_bytes())
            .map_err(|e| Fail(EXIT_IO, e.to_string())),
    }
}

fn bool_text(b: bool) -> &'static str {
    if b {
        "yes"
    } else {
        "no"
    }
}

fn run_command(cmd: Command, stdout: &mut dyn Write) -> Result<i32, Fail> {
    match cmd {
        Command::Classify { input, format, dot } => {
            let program = load_program(&input)?;
            let report = classify(&program);
            if let Some(path) = dot {
                fs::write(
                    &path,
                    dependency_graph_dot(&build_dependency_graph(&program.rules)),
                )
                .map_err(|e| io_fail(&path, e))?;
            }
            let text = match format {
                Format::Json => format!(
                    "{}\n",
                    serde_json::to_string_pretty(&json::classification(&report)).unwrap()
                ),
                Format::Text => {
                    let list = |ps: &std::collections::BTreeSet<stickychase_core::Position>| {
                        ps.iter()
                            .map(|p| p.to_string())
                            .collect::<Vec<_>>()
                            .join(" ")
                    };
                    let mut t = format!(
                        "sticky: {}\nweakly_acyclic: {}\nweakly_sticky: {}\njws: {}\nfinite_rank_positions: {}\nfinite_existential_positions: {}\n",
                        bool_text(report.sticky),
                        bool_text(report.weakly_acyclic),
                        bool_text(report.weakly_sticky),
                        bool_text(report.jws),
                        list(&report.finite_rank_positions),
                        list(&report.finite_existential_positions),
                    );
                    for w in &report.witnesses {
                        t.push_str(&format!(
                            "not {} (rule {}): {}\n",
                            w.class, w.rule, w.reason
                        ));
                    }
                    t
                }
            };
            write_out(&None, &text, stdout)?;
            Ok(EXIT_OK)
        }
        Command::Chase {
            input,
            max_steps,
            max_atoms,
            format,
            trace,
            out,
        } => {
            let program = load_program(&input)?;
            let result = chase(
                &program,
                Budget {
                    max_steps,
                    max_atoms,
                },
            )
            .map_err(|e| Fail(EXIT_PARSE, e.to_string()))?;
            info!(
                "chase: {} atoms, {} steps, {}",
                result.instance.len(),
                result.trace.steps.len(),
                result.status
            );
            let mut names = NullNames::new();
            names.scan(result.instance.iter());
            if let Some(path) = trace {
                let mut lines = json::trace_lines(&result, &mut names).join("\n");
                if !lines.is_empty() {
                    lines.push('\n');
                }
                fs::write(&path, lines).map_err(|e| io_fail(&path, e))?;
            }
            let text = match format {
                Format::Json => format!(
                    "{}\n",
                    serde_json::to_string_pretty(&json::instance(
                        &result.instance,
                        result.status.name(),
                        &mut names
                    ))
                    .unwrap()
                ),
                Format::Text => {
                    let mut t = String::new();
                    for a in result.instance.iter() {
                        t.push_str(&names.atom(a));
                        t.push_str(".\n");
                    }
                    t.push_str(&format!("% status: {}\n", result.status));
                    t
                }
            };
            write_out(&out, &text, stdout)?;
            Ok(EXIT_OK)
        }
        Command::Query {
            input,
            query,
            selection,
            resumptions,
            rewrite_first,
            merge_magic,
            force,
            format,
            trace,
        } => {
            let program = load_program(&input)?;
            let query = load_query(&query)?;
            let (program, query, selection) = if rewrite_first {
                if selection != SelectionFunctionId::Existential {
                    warn!("--rewrite-first answers with the existential selection; ignoring --selection {}", selection);
                }
                let ap = magicd_plus(
                    &program,
                    &query,
                    MagicOptions {
                        merge_equivalent_magic: merge_magic,
                    },
                );
                debug!("rewritten program has {} rules", ap.rules().count());
                (
                    ap.program(),
                    ap.adorned_query,
                    SelectionFunctionId::Existential,
                )
            } else {
                (program, query, selection)
            };
            let options = SchqaOptions {
                resumptions,
                waive_precondition: force,
                record_log: trace.is_some(),
            };
            let (answers, state) = match schqa(&program, &query, selection, options) {
                Ok(r) => r,
                Err(e @ SchqaError::PreconditionFailed { .. }) => {
                    return Err(Fail(
                        EXIT_PRECONDITION,
                        format!("{}; pass --force to run anyway", e),
                    ))
                }
            };
            info!(
                "query: {} atoms, {} frozen nulls, {} resumptions",
                state.instance.len(),
                state.frozen.len(),
                answers.resumptions_used
            );
            if let Some(path) = trace {
                let mut names = NullNames::new();
                let mut lines =
                    json::run_log_lines(state.log(), &state.instance, &mut names).join("\n");
                if !lines.is_empty() {
                    lines.push('\n');
                }
                fs::write(&path, lines).map_err(|e| io_fail(&path, e))?;
            }
            let text = match format {
                Format::Json => format!(
                    "{}\n",
                    serde_json::to_string_pretty(&json::answers(&answers)).unwrap()
                ),
                Format::Text if answers.boolean => format!("{}\n", bool_text(answers.holds())),
                Format::Text => json::answer_lines(&answers)
                    .iter()
                    .map(|l| format!("{}\n", l))
                    .collect(),
            };
            write_out(&None, &text, stdout)?;
            Ok(if answers.boolean && !answers.holds() {
                EXIT_NO
            } else {
                EXIT_OK
            })
        }
        Command::Rewrite {
            input,
            query,
            merge_magic,
            out,
        } => {
            let program = load_program(&input)?;
            let query = load_query(&query)?;
            let ap = magicd_plus(
                &program,
                &query,
                MagicOptions {
                    merge_equivalent_magic: merge_magic,
                },
            );
            let text = format!(
                "% query: {}\n{}",
                ap.adorned_query,
                render_program(&ap.program())
            );
            write_out(&out, &text, stdout)?;
            Ok(EXIT_OK)
        }
        Command::Check {
            input,
            selection,
            steps,
            format,
        } => {
            let program = load_program(&input)?;
            let verdict = check_stickiness_bounded(&program, steps, selection)
                .map_err(|e| Fail(EXIT_PARSE, e.to_string()))?;
            let text = match format {
                Format::Json => format!(
                    "{}\n",
                    serde_json::to_string_pretty(&json::verdict(&verdict)).unwrap()
                ),
                Format::Text => match &verdict {
                    StickinessVerdict::NoViolationUpTo(k) => format!("no_violation_up_to {}\n", k),
                    StickinessVerdict::Violation {
                        step,
                        rule,
                        variable,
                        value,
                        missing,
                    } => format!(
                        "violation at step {}: rule {}, variable {}, value {} is missing from {}\n",
                        step, rule, variable, value, missing
                    ),
                },
            };
            write_out(&None, &text, stdout)?;
            Ok(EXIT_OK)
        }
    }
}

/// Runs the command line and returns the exit code.
pub fn run<I, T>(args: I, stdout: &mut dyn Write, stderr: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_PARSE } else { EXIT_OK };
            if e.use_stderr() {
                let _ = write!(stderr, "{}", e.render());
            } else {
                let _ = write!(stdout, "{}", e.render());
            }
            return code;
        }
    };
    match run_command(cli.command, stdout) {
        Ok(code) => code,
        Err(Fail(code, message)) => {
            let _ = writeln!(stderr, "error: {}", message);
            code
        }
    }
}

/// Installs the logger; verbosity comes from `STICKYCHASE_LOG`.
pub fn init_logging() {
    let env = env_logger::Env::new().filter_or("STICKYCHASE_LOG", "warn");
    let _ = env_logger::Builder::from_env(env)
        .format_timestamp(None)
        .try_init();
}
