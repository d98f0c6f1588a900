use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use clap::{Args, Parser, Subcommand, ValueEnum};
use masim::energy::{compare, EnergyTable, SchedulerKind};
use masim::oracle::OracleError;
use masim::sequence::{self, SequenceHeader};
use masim::validate::VectorSpec;
use masim::{
    equivalence_check, min_copies, parse_netlist, random_netlist, validate_is, EnergyParams,
    Instruction, MemLayout, Netlist, ScheduleError, SchedulerConfig,
};
use serde::Serialize;

const EXIT_INVALID: u8 = 1;
const EXIT_CAPACITY: u8 = 2;
const EXIT_USAGE: u8 = 3;

/// Copy-minimizing scheduler for XOR-majority graphs on multi-array SIMD
/// in-memory hardware.
///
/// Exit status: 0 success, 1 validation or equivalence failure, 2 not enough
/// rows, 3 usage or input error.
#[derive(Parser, Debug)]
#[command(name = "masim", version)]
struct Cli {
    /// Worker threads (default: all cores). Results do not depend on it.
    #[arg(long, global = true)]
    threads: Option<usize>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Debug, Clone, Copy)]
struct LayoutArgs {
    /// Rows per array.
    #[arg(long)]
    rows: usize,
    /// Number of arrays.
    #[arg(long)]
    arrays: usize,
}

impl LayoutArgs {
    fn layout(self) -> MemLayout {
        MemLayout::new(self.rows, self.arrays)
    }
}

#[derive(Args, Debug, Clone, Copy)]
struct EnergyArgs {
    /// Energy of one compute.
    #[arg(long, default_value_t = 1.0)]
    e_compute: f64,
    /// Energy of one copy.
    #[arg(long, default_value_t = 1.87)]
    e_copy: f64,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum Format {
    Text,
    Json,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Schedule a netlist and write the instruction sequence.
    Schedule {
        #[arg(long)]
        netlist: PathBuf,
        #[command(flatten)]
        layout: LayoutArgs,
        /// Random restarts, also the passes per improvement iteration.
        #[arg(long, default_value_t = SchedulerConfig::DEFAULT_RESTARTS)]
        restarts: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Run the improvement loop after the restarts (default).
        #[arg(long, overrides_with = "no_improve")]
        improve: bool,
        #[arg(long)]
        no_improve: bool,
        #[arg(long, default_value = "masim")]
        scheduler: SchedulerKind,
        /// Instruction sequence output.
        #[arg(long)]
        out: PathBuf,
        #[arg(long, value_enum, default_value_t = Format::Text)]
        format: Format,
        /// Statistics document (JSON).
        #[arg(long)]
        stats: Option<PathBuf>,
        /// Write `runtime_ms` as null so stats are reproducible byte for byte.
        #[arg(long)]
        no_timing: bool,
        #[command(flatten)]
        energy: EnergyArgs,
    },
    /// Check an instruction sequence against the rules and the netlist function.
    Verify {
        #[arg(long)]
        netlist: PathBuf,
        #[arg(long = "is")]
        sequence: PathBuf,
        #[command(flatten)]
        layout: LayoutArgs,
        /// Random input vectors (default: exhaustive up to 10 inputs, else 1024).
        #[arg(long, conflicts_with = "exhaustive")]
        vectors: Option<usize>,
        #[arg(long)]
        exhaustive: bool,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Run several schedulers and tabulate copies and energy.
    Compare {
        #[arg(long)]
        netlist: PathBuf,
        #[command(flatten)]
        layout: LayoutArgs,
        /// Comma-separated list of naive, greedy, masim.
        #[arg(long, value_delimiter = ',', default_value = "naive,greedy,masim")]
        schedulers: Vec<SchedulerKind>,
        /// Also run these row counts (same number of arrays).
        #[arg(long, value_delimiter = ',')]
        sweep_rows: Vec<usize>,
        #[arg(long, default_value_t = SchedulerConfig::DEFAULT_RESTARTS)]
        restarts: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        csv: Option<PathBuf>,
        #[arg(long)]
        json: Option<PathBuf>,
        /// JSON energy table: {"default": {...}, "by_rows": {"64": {...}}}.
        #[arg(long)]
        energy_table: Option<PathBuf>,
        #[command(flatten)]
        energy: EnergyArgs,
    },
    /// Exact minimum copy count for tiny instances.
    Oracle {
        #[arg(long)]
        netlist: PathBuf,
        #[command(flatten)]
        layout: LayoutArgs,
        /// Give up above this many copies.
        #[arg(long)]
        bound: Option<usize>,
        /// Also write the witness sequence here.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Generate a random netlist.
    Gen {
        #[arg(long)]
        pis: usize,
        #[arg(long)]
        nodes: usize,
        #[arg(long)]
        pos: usize,
        #[arg(long)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
    },
}

struct Failure {
    code: u8,
    msg: String,
}

fn usage(msg: impl Into<String>) -> Failure {
    Failure {
        code: EXIT_USAGE,
        msg: msg.into(),
    }
}

impl From<ScheduleError> for Failure {
    fn from(e: ScheduleError) -> Self {
        let code = match e {
            ScheduleError::Capacity(_) | ScheduleError::InsufficientCapacity { .. } => {
                EXIT_CAPACITY
            }
            ScheduleError::InvalidEs(_) | ScheduleError::NoRestarts => EXIT_USAGE,
        };
        Failure {
            code,
            msg: e.to_string(),
        }
    }
}

type CmdResult = Result<(), Failure>;

fn read(path: &Path) -> Result<String, Failure> {
    fs::read_to_string(path).map_err(|e| usage(format!("{}: {e}", path.display())))
}

fn write(path: &Path, text: &str) -> CmdResult {
    fs::write(path, text).map_err(|e| usage(format!("{}: {e}", path.display())))
}

fn load_netlist(path: &Path) -> Result<Netlist, Failure> {
    parse_netlist(&read(path)?).map_err(|e| usage(format!("{}: {e}", path.display())))
}

fn energy_params(e: EnergyArgs) -> Result<EnergyParams, Failure> {
    EnergyParams::new(e.e_compute, e.e_copy)
        .ok_or_else(|| usage("energies must be positive and finite"))
}

fn check_layout(l: LayoutArgs) -> CmdResult {
    if l.rows == 0 || l.arrays == 0 {
        return Err(usage("--rows and --arrays must be positive"));
    }
    Ok(())
}

#[derive(Serialize)]
struct Stats {
    scheduler: &'static str,
    copies: usize,
    computes: usize,
    arrays_used: usize,
    energy: f64,
    seed: u64,
    runtime_ms: Option<f64>,
    rows_per_array: usize,
    num_arrays: usize,
    netlist_hash: String,
    restarts: usize,
    improvement_iterations: Option<usize>,
}

fn render(net: &Netlist, layout: MemLayout, is: &[Instruction], format: Format) -> String {
    match format {
        Format::Text => sequence::to_text(net, layout, is),
        Format::Json => sequence::to_json(net, layout, is) + "\n",
    }
}

#[allow(clippy::too_many_arguments)]
fn cmd_schedule(
    netlist: &Path,
    layout: LayoutArgs,
    restarts: usize,
    seed: u64,
    improve: bool,
    scheduler: SchedulerKind,
    out: &Path,
    format: Format,
    stats: Option<&Path>,
    no_timing: bool,
    energy: EnergyArgs,
) -> CmdResult {
    check_layout(layout)?;
    let params = energy_params(energy)?;
    let net = load_netlist(netlist)?;
    let cfg = SchedulerConfig::new(layout.layout())
        .with_restarts(restarts)
        .with_seed(seed)
        .with_improve(improve);
    let t0 = Instant::now();
    let res = scheduler.run(&net, &cfg)?;
    let runtime_ms = t0.elapsed().as_secs_f64() * 1e3;
    write(out, &render(&net, cfg.layout, &res.instructions, format))?;
    eprintln!(
        "{}: {} copies, {} computes, {} arrays used, {:.1} ms",
        scheduler.name(),
        res.copies,
        res.computes,
        res.arrays_used,
        runtime_ms
    );
    if let Some(path) = stats {
        let doc = Stats {
            scheduler: scheduler.name(),
            copies: res.copies,
            computes: res.computes,
            arrays_used: res.arrays_used,
            energy: res.energy(&params),
            seed,
            runtime_ms: (!no_timing).then_some(runtime_ms),
            rows_per_array: layout.rows,
            num_arrays: layout.arrays,
            netlist_hash: net.content_hash(),
            restarts,
            improvement_iterations: res.improvement.as_ref().map(|t| t.iterations.len()),
        };
        write(
            path,
            &(serde_json::to_string_pretty(&doc).expect("stats serialize") + "\n"),
        )?;
    }
    Ok(())
}

fn load_sequence(
    net: &Netlist,
    path: &Path,
) -> Result<(Option<SequenceHeader>, Vec<Instruction>), Failure> {
    let text = read(path)?;
    let parsed = if text.trim_start().starts_with('{') {
        sequence::from_json(net, &text).map(|(h, is)| (Some(h), is))
    } else {
        sequence::from_text(net, &text)
    };
    parsed.map_err(|e| usage(format!("{}: {e}", path.display())))
}

fn cmd_verify(
    netlist: &Path,
    path: &Path,
    layout: LayoutArgs,
    vectors: Option<usize>,
    exhaustive: bool,
    seed: u64,
) -> CmdResult {
    check_layout(layout)?;
    let net = load_netlist(netlist)?;
    let (header, is) = load_sequence(&net, path)?;
    let layout = layout.layout();
    if let Some(h) = header {
        if h.layout() != layout {
            return Err(usage(format!(
                "sequence was written for {}x{}, not {}x{}",
                h.rows_per_array, h.num_arrays, layout.rows_per_array, layout.num_arrays
            )));
        }
        if h.netlist_hash != net.content_hash() {
            return Err(usage("sequence was written for a different netlist"));
        }
    }
    if exhaustive && net.num_pis() > 24 {
        return Err(usage("--exhaustive is limited to 24 inputs"));
    }
    let spec = match (exhaustive, vectors) {
        (true, _) => VectorSpec::Exhaustive,
        (false, Some(count)) => VectorSpec::Random { count, seed },
        (false, None) => VectorSpec::Auto { seed },
    };
    let rep = validate_is(&net, &is, layout);
    for v in &rep.violations {
        eprintln!("{v}");
    }
    let eq = equivalence_check(&net, &is, layout, spec);
    let copies = is.iter().filter(|i| i.is_copy()).count();
    println!(
        "{} instructions, {} copies; rules: {}; function: {} ({} vectors)",
        is.len(),
        copies,
        if rep.is_clean() {
            "ok".to_string()
        } else {
            format!("{} violations", rep.violations.len())
        },
        if eq.equivalent {
            "equivalent"
        } else {
            "MISMATCH"
        },
        eq.vectors_checked
    );
    if let Some(w) = &eq.witness {
        let bits: String = w.iter().map(|b| if *b { '1' } else { '0' }).collect();
        eprintln!("first mismatch at inputs {bits} (input order as declared)");
    }
    if rep.is_clean() && eq.equivalent {
        Ok(())
    } else {
        Err(Failure {
            code: EXIT_INVALID,
            msg: "verification failed".into(),
        })
    }
}

#[allow(clippy::too_many_arguments)]
fn cmd_compare(
    netlist: &Path,
    layout: LayoutArgs,
    schedulers: &[SchedulerKind],
    sweep_rows: &[usize],
    restarts: usize,
    seed: u64,
    csv: Option<&Path>,
    json: Option<&Path>,
    energy_table: Option<&Path>,
    energy: EnergyArgs,
) -> CmdResult {
    check_layout(layout)?;
    let net = load_netlist(netlist)?;
    let table = match energy_table {
        Some(p) => {
            let t: EnergyTable = serde_json::from_str(&read(p)?)
                .map_err(|e| usage(format!("{}: {e}", p.display())))?;
            if !t.default.is_valid() || !t.by_rows.values().all(|p| p.is_valid()) {
                return Err(usage("energies must be positive and finite"));
            }
            t
        }
        None => EnergyTable {
            default: energy_params(energy)?,
            ..Default::default()
        },
    };
    let mut rows = vec![layout.rows];
    rows.extend(sweep_rows.iter().copied().filter(|r| *r != layout.rows));
    if rows.contains(&0) {
        return Err(usage("row counts must be positive"));
    }
    let layouts: Vec<MemLayout> = rows
        .iter()
        .map(|&r| MemLayout::new(r, layout.arrays))
        .collect();
    let cfg = SchedulerConfig::new(layouts[0])
        .with_restarts(restarts)
        .with_seed(seed);
    let result = compare(
        &net,
        &layouts,
        schedulers,
        &cfg,
        &table,
        VectorSpec::Auto { seed },
    );
    print!("{}", result.to_text());
    if let Some(p) = csv {
        write(p, &result.to_csv())?;
    }
    if let Some(p) = json {
        write(p, &(result.to_json() + "\n"))?;
    }
    let bad = result
        .rows
        .iter()
        .any(|r| r.valid == Some(false) || r.equivalent == Some(false));
    if bad {
        return Err(Failure {
            code: EXIT_INVALID,
            msg: "a scheduler produced an invalid sequence".into(),
        });
    }
    Ok(())
}

fn cmd_oracle(
    netlist: &Path,
    layout: LayoutArgs,
    bound: Option<usize>,
    out: Option<&Path>,
) -> CmdResult {
    check_layout(layout)?;
    let net = load_netlist(netlist)?;
    let layout = layout.layout();
    match min_copies(&net, layout, bound) {
        Ok(res) => {
            println!("optimum {}", res.optimum);
            let text = sequence::to_text(&net, layout, &res.witness);
            print!("{text}");
            eprintln!("{} states explored", res.states_explored);
            if let Some(p) = out {
                write(p, &text)?;
            }
            Ok(())
        }
        Err(
            e
            @ (OracleError::Infeasible | OracleError::Capacity(_) | OracleError::BoundExceeded(_)),
        ) => Err(Failure {
            code: EXIT_CAPACITY,
            msg: e.to_string(),
        }),
        Err(e @ OracleError::ResourceLimit(_)) => Err(usage(e.to_string())),
    }
}

fn cmd_gen(pis: usize, nodes: usize, pos: usize, seed: u64, out: &Path) -> CmdResult {
    let net = random_netlist(pis, nodes, pos, seed).map_err(|e| usage(e.to_string()))?;
    write(out, &net.to_xmg())
}

fn run(cli: Cli) -> CmdResult {
    if let Some(t) = cli.threads {
        if t == 0 {
            return Err(usage("--threads must be positive"));
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(t)
            .build_global()
            .map_err(|e| usage(e.to_string()))?;
    }
    match cli.command {
        Command::Schedule {
            netlist,
            layout,
            restarts,
            seed,
            improve: _,
            no_improve,
            scheduler,
            out,
            format,
            stats,
            no_timing,
            energy,
        } => cmd_schedule(
            &netlist,
            layout,
            restarts,
            seed,
            !no_improve,
            scheduler,
            &out,
            format,
            stats.as_deref(),
            no_timing,
            energy,
        ),
        Command::Verify {
            netlist,
            sequence,
            layout,
            vectors,
            exhaustive,
            seed,
        } => cmd_verify(&netlist, &sequence, layout, vectors, exhaustive, seed),
        Command::Compare {
            netlist,
            layout,
            schedulers,
            sweep_rows,
            restarts,
            seed,
            csv,
            json,
            energy_table,
            energy,
        } => cmd_compare(
            &netlist,
            layout,
            &schedulers,
            &sweep_rows,
            restarts,
            seed,
            csv.as_deref(),
            json.as_deref(),
            energy_table.as_deref(),
            energy,
        ),
        Command::Oracle {
            netlist,
            layout,
            bound,
            out,
        } => cmd_oracle(&netlist, layout, bound, out.as_deref()),
        Command::Gen {
            pis,
            nodes,
            pos,
            seed,
            out,
        } => cmd_gen(pis, nodes, pos, seed, &out),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error: {}", f.msg);
            ExitCode::from(f.code)
        }
    }
}
