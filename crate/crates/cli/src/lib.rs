//! `hrm` command-line front end.
//!
//! Exit statuses: 0 on success, 1 for usage errors, 2 for unreadable or
//! invalid data, 3 when an exact search would exceed its budget.

use std::ffi::OsString;
use std::fmt;
use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};
use std::str::FromStr;

use clap::{Args, Parser, Subcommand, ValueEnum};
use hrm_core::delay_model::leaf_delays;
use hrm_core::exact::{exact_optimal_with, min_servers_with, ExactError, ExactOptions};
use hrm_core::tree::format_sig6;
use hrm_core::{
    generate_tree, makespan, parse_tree, place, serialize_tree, simulate_event, simulate_recursion,
    DelayParams, EventSimConfig, GenConfig, HeuristicName, MinServers, Placement, SearchMode,
    SimStats, Tree,
};

#[derive(Debug)]
pub enum CliError {
    Usage(String),
    Data(String),
    Budget(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => 1,
            CliError::Data(_) => 2,
            CliError::Budget(_) => 3,
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Usage(m) | CliError::Data(m) | CliError::Budget(m) => f.write_str(m),
        }
    }
}

impl From<ExactError> for CliError {
    fn from(e: ExactError) -> Self {
        match e {
            ExactError::BudgetExceeded { .. } => CliError::Budget(e.to_string()),
            _ => CliError::Data(e.to_string()),
        }
    }
}

fn data(e: impl fmt::Display) -> CliError {
    CliError::Data(e.to_string())
}

type CliResult<T> = Result<T, CliError>;

/// A heuristic or the exact optimiser.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Method {
    Heuristic(HeuristicName),
    Exact,
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Method::Heuristic(h) => write!(f, "{h}"),
            Method::Exact => f.write_str("exact"),
        }
    }
}

impl FromStr for Method {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        if s == "exact" {
            return Ok(Method::Exact);
        }
        s.parse::<HeuristicName>()
            .map(Method::Heuristic)
            .map_err(|_| {
                format!("unknown method {s:?} (expected random, max_delay, max_degree, long_path or exact)")
            })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum SimKind {
    Recursion,
    Event,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum ModeArg {
    Exact,
    #[value(name = "long_path")]
    LongPath,
}

#[derive(Parser, Debug)]
#[command(
    name = "hrm",
    version,
    about = "Repair-server placement for reliable multicast trees"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Debug)]
struct ModelArgs {
    /// Sending interval in milliseconds.
    #[arg(long, default_value_t = DelayParams::DEFAULT_T_MS)]
    t_ms: f64,
}

impl ModelArgs {
    fn params(&self) -> CliResult<DelayParams> {
        DelayParams::new(self.t_ms).map_err(data)
    }
}

#[derive(Args, Debug)]
struct BudgetArgs {
    /// Largest number of server subsets the exact search may enumerate.
    #[arg(long, default_value_t = ExactOptions::default().max_subsets)]
    max_subsets: u64,
}

impl BudgetArgs {
    fn options(&self) -> ExactOptions {
        ExactOptions {
            max_subsets: self.max_subsets,
        }
    }
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Generate a random tree.
    Gen {
        #[arg(long)]
        nodes: usize,
        #[arg(long)]
        seed: u64,
        #[arg(long, default_value_t = 10.0)]
        delay_min_ms: f64,
        #[arg(long, default_value_t = 40.0)]
        delay_max_ms: f64,
        #[arg(long, default_value_t = 0.0)]
        loss_min: f64,
        #[arg(long, default_value_t = 0.1)]
        loss_max: f64,
        #[arg(long, default_value_t = 4)]
        max_children: usize,
        /// Output file; stdout when omitted.
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
    /// Expected delays for an explicit server list.
    Eval {
        tree: PathBuf,
        /// Comma-separated server ids; the sender 0 is always included.
        #[arg(long)]
        servers: String,
        #[command(flatten)]
        model: ModelArgs,
    },
    /// Run one placement method for one k.
    Place {
        tree: PathBuf,
        #[arg(long)]
        method: Method,
        #[arg(long)]
        k: usize,
        /// Required by the random method.
        #[arg(long)]
        seed: Option<u64>,
        #[command(flatten)]
        model: ModelArgs,
        #[command(flatten)]
        budget: BudgetArgs,
    },
    /// Run methods for k = 1..=K and report each method's makespan floor.
    Sweep {
        tree: PathBuf,
        #[arg(long, value_delimiter = ',', required = true)]
        methods: Vec<Method>,
        #[arg(long)]
        k_max: usize,
        #[arg(long)]
        seed: u64,
        #[command(flatten)]
        model: ModelArgs,
        #[command(flatten)]
        budget: BudgetArgs,
        /// Sweep CSV; stdout when omitted.
        #[arg(short, long)]
        output: Option<PathBuf>,
        /// Floor CSV; stdout when omitted.
        #[arg(long)]
        floors: Option<PathBuf>,
    },
    /// Fewest servers meeting a makespan budget.
    Minservers {
        tree: PathBuf,
        #[arg(long)]
        budget_ms: f64,
        #[arg(long, value_enum, default_value_t = ModeArg::Exact)]
        mode: ModeArg,
        #[command(flatten)]
        model: ModelArgs,
        #[command(flatten)]
        budget: BudgetArgs,
    },
    /// Simulate packet delivery and write per-packet makespans.
    Simulate {
        tree: PathBuf,
        #[arg(long, conflicts_with_all = ["method", "k"])]
        servers: Option<String>,
        #[arg(long, requires = "k")]
        method: Option<Method>,
        #[arg(long, requires = "method")]
        k: Option<usize>,
        #[arg(long, value_enum)]
        sim: SimKind,
        #[arg(long)]
        packets: u64,
        #[arg(long)]
        seed: u64,
        /// Interval between packets for the event simulator; defaults to t.
        #[arg(long)]
        interval_ms: Option<f64>,
        #[command(flatten)]
        model: ModelArgs,
        #[command(flatten)]
        budget: BudgetArgs,
        /// Per-packet CSV; stdout when omitted.
        #[arg(short, long)]
        output: Option<PathBuf>,
        /// Per-leaf CSV.
        #[arg(long)]
        leaf_out: Option<PathBuf>,
    },
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
            let code = if e.use_stderr() { 1 } else { 0 };
            let rendered = e.render().to_string();
            let sink: &mut dyn Write = if code == 0 { out } else { err };
            let _ = sink.write_all(rendered.as_bytes());
            return code;
        }
    };
    match execute(cli.command, out) {
        Ok(()) => 0,
        Err(e) => {
            let _ = writeln!(err, "hrm: {e}");
            e.exit_code()
        }
    }
}

fn read_tree(path: &Path) -> CliResult<Tree> {
    let text =
        fs::read_to_string(path).map_err(|e| CliError::Data(format!("{}: {e}", path.display())))?;
    parse_tree(&text).map_err(|e| CliError::Data(format!("{}: {e}", path.display())))
}

fn parse_servers(tree: &Tree, list: &str) -> CliResult<Placement> {
    let ids = list
        .split(',')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(|s| {
            s.parse::<usize>()
                .map_err(|_| CliError::Usage(format!("bad server id {s:?}")))
        })
        .collect::<CliResult<Vec<_>>>()?;
    Placement::new(tree, ids).map_err(data)
}

/// Writes to `path` through a temporary file in the same directory, so a
/// failed command never leaves partial output behind.
fn write_atomic(path: &Path, body: &[u8]) -> CliResult<()> {
    let dir = match path.parent() {
        Some(d) if !d.as_os_str().is_empty() => d,
        _ => Path::new("."),
    };
    let io_err = |e: io::Error| CliError::Data(format!("{}: {e}", path.display()));
    let mut tmp = tempfile::NamedTempFile::new_in(dir).map_err(io_err)?;
    tmp.write_all(body).map_err(io_err)?;
    tmp.persist(path).map_err(|e| io_err(e.error))?;
    Ok(())
}

fn emit(path: Option<&Path>, body: &[u8], out: &mut dyn Write) -> CliResult<()> {
    match path {
        Some(p) => write_atomic(p, body),
        None => out.write_all(body).map_err(data),
    }
}

struct Placed {
    placement: Placement,
    requested_k: usize,
    makespan_ms: f64,
    selection: Option<Vec<usize>>,
    enumerated: Option<u64>,
}

fn run_method(
    tree: &Tree,
    method: Method,
    k: usize,
    params: DelayParams,
    seed: u64,
    options: ExactOptions,
) -> CliResult<Placed> {
    if k == 0 {
        return Err(CliError::Data("k must be at least 1".into()));
    }
    Ok(match method {
        Method::Heuristic(h) => {
            let r = place(tree, h, k, params, seed);
            Placed {
                placement: r.placement,
                requested_k: k,
                makespan_ms: r.makespan_ms,
                selection: Some(r.selection_order),
                enumerated: None,
            }
        }
        Method::Exact => {
            let r = exact_optimal_with(tree, k, params, options)?;
            Placed {
                placement: r.placement,
                requested_k: k,
                makespan_ms: r.makespan_ms,
                selection: None,
                enumerated: Some(r.nodes_enumerated),
            }
        }
    })
}

fn join(ids: &[usize]) -> String {
    ids.iter()
        .map(|v| v.to_string())
        .collect::<Vec<_>>()
        .join(",")
}

fn execute(command: Command, out: &mut dyn Write) -> CliResult<()> {
    match command {
        Command::Gen {
            nodes,
            seed,
            delay_min_ms,
            delay_max_ms,
            loss_min,
            loss_max,
            max_children,
            output,
        } => {
            let mut cfg = GenConfig::new(nodes, seed)
                .with_delay(delay_min_ms, delay_max_ms)
                .with_loss(loss_min, loss_max);
            cfg.max_children = max_children;
            let tree = generate_tree(&cfg).map_err(data)?;
            emit(output.as_deref(), serialize_tree(&tree).as_bytes(), out)
        }
        Command::Eval {
            tree,
            servers,
            model,
        } => {
            let params = model.params()?;
            let tree = read_tree(&tree)?;
            let placement = parse_servers(&tree, &servers)?;
            let m = makespan(&tree, &placement, params);
            let mut text = format!(
                "servers {}\nmakespan_ms {:.6}\nworst_leaf {}\n",
                placement.to_list(),
                m.makespan_ms,
                m.worst_leaf
            );
            for (leaf, d) in leaf_delays(&tree, &placement, params) {
                text.push_str(&format!("leaf {leaf} {d:.6}\n"));
            }
            emit(None, text.as_bytes(), out)
        }
        Command::Place {
            tree,
            method,
            k,
            seed,
            model,
            budget,
        } => {
            let params = model.params()?;
            let seed = match (method, seed) {
                (Method::Heuristic(HeuristicName::Random), None) => {
                    return Err(CliError::Usage("--seed is required for random".into()))
                }
                (_, s) => s.unwrap_or(0),
            };
            let tree = read_tree(&tree)?;
            let r = run_method(&tree, method, k, params, seed, budget.options())?;
            let worst = makespan(&tree, &r.placement, params).worst_leaf;
            let mut text = format!(
                "method {method}\nrequested_k {}\nachieved_k {}\nservers {}\nmakespan_ms {:.6}\nworst_leaf {worst}\n",
                r.requested_k,
                r.placement.k(),
                r.placement.to_list(),
                r.makespan_ms
            );
            if let Some(sel) = &r.selection {
                text.push_str(&format!("selection_order {}\n", join(sel)));
            }
            if let Some(n) = r.enumerated {
                text.push_str(&format!("subsets_enumerated {n}\n"));
            }
            emit(None, text.as_bytes(), out)
        }
        Command::Sweep {
            tree,
            methods,
            k_max,
            seed,
            model,
            budget,
            output,
            floors,
        } => {
            let params = model.params()?;
            if k_max == 0 {
                return Err(CliError::Data("--k-max must be at least 1".into()));
            }
            let tree = read_tree(&tree)?;
            let max_k = tree.candidates().len() + 1;
            let mut csv = String::from("method,k,achieved_k,makespan_ms\n");
            let mut floor_csv = String::from("method,floor_ms,min_k\n");
            for &method in &methods {
                let mut floor: Option<(f64, usize)> = None;
                for k in 1..=k_max {
                    // The exact search has nothing to add past saturation.
                    let run_k = if method == Method::Exact {
                        k.min(max_k)
                    } else {
                        k
                    };
                    let r = run_method(&tree, method, run_k, params, seed, budget.options())?;
                    csv.push_str(&format!(
                        "{method},{k},{},{}\n",
                        r.placement.k(),
                        format_sig6(r.makespan_ms)
                    ));
                    if floor.is_none_or(|(f, _)| r.makespan_ms < f) {
                        floor = Some((r.makespan_ms, k));
                    }
                }
                let (f, k) = floor.expect("k_max >= 1");
                floor_csv.push_str(&format!("{method},{},{k}\n", format_sig6(f)));
            }
            match (&output, &floors) {
                (None, None) => {
                    csv.push('\n');
                    csv.push_str(&floor_csv);
                    emit(None, csv.as_bytes(), out)
                }
                _ => {
                    emit(output.as_deref(), csv.as_bytes(), out)?;
                    emit(floors.as_deref(), floor_csv.as_bytes(), out)
                }
            }
        }
        Command::Minservers {
            tree,
            budget_ms,
            mode,
            model,
            budget,
        } => {
            let params = model.params()?;
            let tree = read_tree(&tree)?;
            let (mode, name) = match mode {
                ModeArg::Exact => (SearchMode::Exact, "exact"),
                ModeArg::LongPath => (SearchMode::LongPath, "long_path"),
            };
            let result = min_servers_with(&tree, budget_ms, params, mode, budget.options())?;
            let text = match result {
                MinServers::Feasible {
                    k,
                    placement,
                    makespan_ms,
                } => format!(
                    "mode {name}\nfeasible yes\nk {k}\nservers {}\nmakespan_ms {makespan_ms:.6}\n",
                    placement.to_list()
                ),
                MinServers::Infeasible { best_makespan_ms } => {
                    format!("mode {name}\nfeasible no\nbest_makespan_ms {best_makespan_ms:.6}\n")
                }
            };
            emit(None, text.as_bytes(), out)
        }
        Command::Simulate {
            tree,
            servers,
            method,
            k,
            sim,
            packets,
            seed,
            interval_ms,
            model,
            budget,
            output,
            leaf_out,
        } => {
            let params = model.params()?;
            let tree = read_tree(&tree)?;
            let placement = match (servers, method, k) {
                (Some(list), _, _) => parse_servers(&tree, &list)?,
                (None, Some(m), Some(k)) => {
                    run_method(&tree, m, k, params, seed, budget.options())?.placement
                }
                _ => {
                    return Err(CliError::Usage(
                        "either --servers or --method with --k is required".into(),
                    ))
                }
            };
            let stats: SimStats = match sim {
                SimKind::Recursion => {
                    simulate_recursion(&tree, &placement, params, packets, seed).map_err(data)?
                }
                SimKind::Event => {
                    let cfg =
                        EventSimConfig::new(packets, interval_ms.unwrap_or(params.t_ms()), seed)
                            .map_err(data)?;
                    simulate_event(&tree, &placement, cfg).map_err(data)?
                }
            };
            let mut packet_csv = Vec::new();
            stats.write_packet_csv(&mut packet_csv).map_err(data)?;
            let mut leaf_csv = Vec::new();
            stats.write_leaf_csv(&mut leaf_csv).map_err(data)?;
            if let Some(p) = &leaf_out {
                write_atomic(p, &leaf_csv)?;
            }
            emit(output.as_deref(), &packet_csv, out)
        }
    }
}
