mod compare;

use std::fs;
use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Duration;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::{json, Value};

use orgcx::bitio::codec::{self, AnyMachine, Kind};
use orgcx::dist::{DistError, Order};
use orgcx::epsmachine::{self, EpsError, EpsilonMachine};
use orgcx::ocmachine::{fixtures, OcCircuit, Widths, DEFAULT_RANDOMNESS_BUDGET};
use orgcx::scalar::{format_rational, parse_rational};
use orgcx::search::{self, SearchBudget, SearchError, DEFAULT_MAX_PAYLOAD_BITS};
use orgcx::semantics::{self, ChannelMatrix, SemanticsError};
use orgcx::{BitString, Distribution, Rational, CODEC_VERSION};

#[derive(Parser)]
#[command(name = "orgcx", version, about = "Organized-complexity toolkit")]
struct Cli {
    #[command(subcommand)]
    cmd: Command,
    #[command(flatten)]
    out: Output,
}

#[derive(Args, Clone)]
struct Output {
    /// Report format.
    #[arg(long, global = true, value_enum, default_value = "json")]
    format: Format,
    /// Write the report here instead of stdout.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Json,
    Tsv,
}

#[derive(Subcommand)]
enum Command {
    /// Oc-circuits: search, codec and evaluation.
    #[command(subcommand)]
    Oc(OcCmd),
    /// Epsilon-machines.
    #[command(subcommand)]
    Em(EmCmd),
    /// Semantic information.
    #[command(subcommand)]
    Sem(SemCmd),
    /// Complexity measures side by side on regular, random and structured sources.
    Compare {
        /// Output lengths for the regular and random rows.
        #[arg(long, value_delimiter = ',', default_value = "4,8,16")]
        ns: Vec<usize>,
        #[command(flatten)]
        budget: BudgetArgs,
    },
}

#[derive(Args, Clone)]
struct BudgetArgs {
    /// Tolerance as `p/q`.
    #[arg(long, default_value = "0")]
    delta: String,
    #[arg(long, default_value_t = DEFAULT_MAX_PAYLOAD_BITS)]
    max_bits: usize,
    #[arg(long, default_value_t = DEFAULT_RANDOMNESS_BUDGET)]
    rand_budget: usize,
    #[arg(long)]
    workers: Option<usize>,
    /// Wall-clock limit in seconds; results then depend on machine speed.
    #[arg(long)]
    time_limit: Option<f64>,
}

#[derive(Args, Clone)]
struct MachineArgs {
    /// Container file (`OCC1...`).
    #[arg(long, group = "src")]
    machine: Option<PathBuf>,
    /// Container as hex.
    #[arg(long, group = "src")]
    hex: Option<String>,
    /// Built-in machine: ones, coin, echo, golden-mean.
    #[arg(long, group = "src")]
    fixture: Option<String>,
    /// Output length for fixtures.
    #[arg(long, default_value_t = 4)]
    n: usize,
    /// Semantics stream for the echo fixture.
    #[arg(long)]
    m: Option<String>,
}

#[derive(Subcommand)]
enum OcCmd {
    /// Shortest flat oc-circuit within delta of a distribution.
    Search {
        #[arg(long)]
        dist: PathBuf,
        #[command(flatten)]
        budget: BudgetArgs,
    },
    /// Shortest structured oc-circuit (with macro table).
    SocSearch {
        #[arg(long)]
        dist: PathBuf,
        #[command(flatten)]
        budget: BudgetArgs,
    },
    /// Encode a machine into a container.
    Encode {
        #[command(flatten)]
        src: MachineArgs,
        /// Also write the binary container here.
        #[arg(long)]
        container: Option<PathBuf>,
    },
    /// Decode a container and describe the machine.
    Decode {
        #[command(flatten)]
        src: MachineArgs,
    },
    /// Exact output distribution of a machine.
    Eval {
        #[command(flatten)]
        src: MachineArgs,
        #[arg(long, default_value_t = DEFAULT_RANDOMNESS_BUDGET)]
        rand_budget: usize,
        /// Condition value for conditional machines.
        #[arg(long)]
        z: Option<String>,
    },
}

#[derive(Subcommand)]
enum EmCmd {
    /// Stationary state distribution.
    Stationary {
        #[arg(long)]
        machine: PathBuf,
    },
    /// Statistical complexity at one or more orders.
    Complexity {
        #[arg(long)]
        machine: PathBuf,
        #[arg(long, value_delimiter = ',', default_value = "0,1/2,1,2,inf")]
        alpha: Vec<String>,
    },
    /// Distribution of the first t symbols.
    Process {
        #[arg(long)]
        machine: PathBuf,
        #[arg(long)]
        t: usize,
    },
    /// Compile to an oc-circuit emitting t symbols.
    Compile {
        #[arg(long)]
        machine: PathBuf,
        #[arg(long)]
        t: usize,
        /// Round probabilities to multiples of 2^-exp first.
        #[arg(long)]
        dyadicize: Option<u32>,
    },
}

#[derive(Subcommand)]
enum SemCmd {
    /// Semantic amount.
    Sa {
        #[arg(long)]
        dist: PathBuf,
        #[command(flatten)]
        budget: BudgetArgs,
    },
    /// Conditional semantic amount.
    Csa {
        #[arg(long)]
        dist: PathBuf,
        #[arg(long)]
        cond: PathBuf,
        #[command(flatten)]
        budget: BudgetArgs,
    },
    /// Semantic mutual information.
    Si {
        #[arg(long)]
        dist: PathBuf,
        #[arg(long)]
        cond: PathBuf,
        #[command(flatten)]
        budget: BudgetArgs,
    },
    /// Effectiveness SI / SA.
    Eff {
        #[arg(long)]
        dist: PathBuf,
        #[arg(long)]
        cond: PathBuf,
        #[command(flatten)]
        budget: BudgetArgs,
    },
    /// Send the semantics stream and rebuild the output from it.
    SsocDemo {
        #[command(flatten)]
        src: MachineArgs,
        #[command(flatten)]
        budget: BudgetArgs,
    },
    /// Capacity objective over candidate semantics distributions.
    Capacity {
        #[command(flatten)]
        src: MachineArgs,
        /// Distribution files over semantics strings.
        #[arg(long, num_args = 1.., required = true)]
        candidates: Vec<PathBuf>,
        #[arg(long)]
        channel: PathBuf,
        #[command(flatten)]
        budget: BudgetArgs,
    },
}

/// Exit status classes: domain failures are 1, usage and I/O are 2.
enum Failure {
    Domain(String),
    Usage(String),
}

impl From<SearchError> for Failure {
    fn from(e: SearchError) -> Self {
        Failure::Domain(e.to_string())
    }
}

impl From<SemanticsError> for Failure {
    fn from(e: SemanticsError) -> Self {
        Failure::Domain(e.to_string())
    }
}

impl From<EpsError> for Failure {
    fn from(e: EpsError) -> Self {
        match e {
            EpsError::Parse(m) => Failure::Usage(m),
            e => Failure::Domain(e.to_string()),
        }
    }
}

impl From<DistError> for Failure {
    fn from(e: DistError) -> Self {
        match e {
            DistError::Parse(m) => Failure::Usage(m),
            e => Failure::Domain(e.to_string()),
        }
    }
}

impl From<codec::CodecError> for Failure {
    fn from(e: codec::CodecError) -> Self {
        Failure::Domain(format!("{} ({})", e, e.reason()))
    }
}

impl From<orgcx::ocmachine::MachineError> for Failure {
    fn from(e: orgcx::ocmachine::MachineError) -> Self {
        Failure::Domain(e.to_string())
    }
}

type Res<T> = Result<T, Failure>;

fn read_text(p: &PathBuf) -> Res<String> {
    fs::read_to_string(p).map_err(|e| Failure::Usage(format!("{}: {e}", p.display())))
}

/// Accepts a bare distribution or a report holding one under `distribution`
/// (as written by `em process`).
fn read_dist(p: &PathBuf) -> Res<Distribution> {
    let text = read_text(p)?;
    if let Ok(Value::Object(mut o)) = serde_json::from_str::<Value>(&text) {
        if let Some(inner) = o.remove("distribution") {
            return Ok(Distribution::from_json(&inner.to_string())?);
        }
    }
    Ok(Distribution::from_json(&text)?)
}

fn read_em(p: &PathBuf) -> Res<EpsilonMachine> {
    Ok(EpsilonMachine::from_json(&read_text(p)?)?)
}

impl BudgetArgs {
    fn delta(&self) -> Res<Rational> {
        let d = parse_rational(&self.delta).ok_or_else(|| Failure::Usage(format!("bad --delta {:?}", self.delta)))?;
        if d < Rational::from_integer(0.into()) || d >= Rational::from_integer(1.into()) {
            return Err(Failure::Usage("--delta must be in [0, 1)".into()));
        }
        Ok(d)
    }

    fn budget(&self) -> Res<SearchBudget> {
        let b = SearchBudget {
            max_payload_bits: self.max_bits,
            randomness_budget: self.rand_budget,
            time_limit: self.time_limit.map(Duration::from_secs_f64),
            workers: self.workers,
        };
        b.validate().map_err(|e| Failure::Usage(e.to_string()))?;
        Ok(b)
    }
}

impl MachineArgs {
    fn load(&self) -> Res<AnyMachine> {
        let bytes = if let Some(p) = &self.machine {
            fs::read(p).map_err(|e| Failure::Usage(format!("{}: {e}", p.display())))?
        } else if let Some(h) = &self.hex {
            hex::decode(h.trim()).map_err(|e| Failure::Usage(format!("bad hex: {e}")))?
        } else if let Some(name) = &self.fixture {
            return Ok(AnyMachine::Flat(self.fixture(name)?));
        } else {
            return Err(Failure::Usage("give --machine, --hex or --fixture".into()));
        };
        Ok(codec::read_machine(&bytes)?)
    }

    fn fixture(&self, name: &str) -> Res<OcCircuit> {
        if self.n == 0 {
            return Err(Failure::Usage("--n must be positive".into()));
        }
        Ok(match name {
            "ones" => fixtures::ones(self.n),
            "coin" => fixtures::coin(self.n),
            "echo" => {
                let m = self
                    .m
                    .as_deref()
                    .ok_or_else(|| Failure::Usage("echo needs --m".into()))?;
                fixtures::echo(&m.parse().map_err(|_| Failure::Usage(format!("bad --m {m:?}")))?)
            }
            "golden-mean" => epsmachine::compile(&epsmachine::fixtures::golden_mean(), self.n)?,
            other => return Err(Failure::Usage(format!("unknown fixture {other:?}"))),
        })
    }

    fn flat(&self) -> Res<OcCircuit> {
        match self.load()? {
            AnyMachine::Flat(c) => Ok(c),
            AnyMachine::Structured(s) => Ok(s.expand()?),
            AnyMachine::Conditional(_) => Err(Failure::Usage("expected an unconditional machine".into())),
        }
    }
}

fn kind_name(k: Kind) -> &'static str {
    match k {
        Kind::Flat => "flat",
        Kind::Conditional => "conditional",
        Kind::Structured => "structured",
    }
}

fn widths_json(w: &Widths) -> Value {
    json!({"N_u": w.n_u, "N_z": w.n_z, "N_s": w.n_s, "N_m": w.n_m, "N_r": w.n_r, "L_y": w.l_y})
}

fn dist_json(d: &Distribution) -> Value {
    serde_json::to_value(d.to_json()).expect("serializable")
}

fn budget_json(b: &BudgetArgs) -> Res<Value> {
    Ok(json!({"delta": format_rational(&b.delta()?), "budget": b.budget()?}))
}

fn container_hex(kind: Kind, payload: &BitString) -> String {
    hex::encode(codec::write_container(kind, payload))
}

fn run(cmd: Command, fmt: Format) -> Res<Value> {
    match cmd {
        Command::Oc(c) => oc(c),
        Command::Em(c) => em(c),
        Command::Sem(c) => sem(c),
        Command::Compare { ns, budget } => compare::table(&ns, &budget.delta()?, &budget.budget()?, fmt),
    }
}

fn oc(cmd: OcCmd) -> Res<Value> {
    match cmd {
        OcCmd::Search { dist, budget } => {
            let x = read_dist(&dist)?;
            let (d, b) = (budget.delta()?, budget.budget()?);
            Ok(search::oc_search(&x, &d, &b)?.report(&d, &b))
        }
        OcCmd::SocSearch { dist, budget } => {
            let x = read_dist(&dist)?;
            let (d, b) = (budget.delta()?, budget.budget()?);
            Ok(search::soc_search(&x, &d, &b)?.report(&d, &b))
        }
        OcCmd::Encode { src, container } => {
            let m = src.load()?;
            let payload = m.encode()?;
            if let Some(p) = container {
                fs::write(&p, codec::write_container(m.kind(), &payload))
                    .map_err(|e| Failure::Usage(format!("{}: {e}", p.display())))?;
            }
            Ok(json!({
                "codec": CODEC_VERSION,
                "kind": kind_name(m.kind()),
                "bits": payload.len(),
                "payload": payload.to_string(),
                "hex": container_hex(m.kind(), &payload),
            }))
        }
        OcCmd::Decode { src } => {
            let m = src.load()?;
            let payload = m.encode()?;
            let body = match &m {
                AnyMachine::Flat(c) => json!({
                    "widths": widths_json(&c.widths()), "n": c.n, "s1": c.logic.s1.to_string(),
                    "u": c.u.to_string(), "m": c.m.to_string(), "circuit": c.logic.circuit.to_string(),
                }),
                AnyMachine::Conditional(c) => json!({
                    "widths": widths_json(&c.widths()), "n": c.n, "s1": c.logic.s1.to_string(),
                    "u": c.u.to_string(), "m": c.m.to_string(), "circuit": c.logic.circuit.to_string(),
                }),
                AnyMachine::Structured(c) => {
                    let flat = c.expand()?;
                    json!({
                        "widths": widths_json(&c.logic.widths()), "n": c.n, "s1": c.logic.s1.to_string(),
                        "u": c.u.to_string(), "m": c.m.to_string(), "macros": c.logic.macros.len(),
                        "expanded_circuit": flat.logic.circuit.to_string(),
                    })
                }
            };
            Ok(json!({"codec": CODEC_VERSION, "kind": kind_name(m.kind()), "bits": payload.len(), "machine": body}))
        }
        OcCmd::Eval { src, rand_budget, z } => {
            let d = match src.load()? {
                AnyMachine::Flat(c) => c.output_distribution(rand_budget)?,
                AnyMachine::Structured(c) => c.expand()?.output_distribution(rand_budget)?,
                AnyMachine::Conditional(c) => {
                    let z = z.unwrap_or_else(|| "0".repeat(c.condition_bits()));
                    let z: BitString = z.parse().map_err(|_| Failure::Usage("bad --z".into()))?;
                    c.conditional_distribution(&z, rand_budget)?
                }
            };
            Ok(json!({"codec": CODEC_VERSION, "rand_budget": rand_budget, "distribution": dist_json(&d)}))
        }
    }
}

fn em(cmd: EmCmd) -> Res<Value> {
    match cmd {
        EmCmd::Stationary { machine } => {
            let m = read_em(&machine)?;
            let st = m.stationary()?;
            Ok(json!({"k": m.k(), "pi": st.pi.iter().map(format_rational).collect::<Vec<_>>()}))
        }
        EmCmd::Complexity { machine, alpha } => {
            let m = read_em(&machine)?;
            let mut rows = Vec::new();
            for a in &alpha {
                let order = Order::parse(a).ok_or_else(|| Failure::Usage(format!("bad order {a:?}")))?;
                rows.push(json!({"alpha": a, "bits": m.statistical_complexity(order)?}));
            }
            Ok(json!({"k": m.k(), "complexity": rows}))
        }
        EmCmd::Process { machine, t } => {
            let m = read_em(&machine)?;
            Ok(json!({"t": t, "distribution": dist_json(&epsmachine::process_distribution(&m, t)?)}))
        }
        EmCmd::Compile { machine, t, dyadicize } => {
            let mut m = read_em(&machine)?;
            if let Some(e) = dyadicize {
                m = m.dyadicize(e)?;
            }
            if t == 0 {
                return Err(Failure::Usage("--t must be positive".into()));
            }
            let c = epsmachine::compile(&m, t * m.l_y)?;
            let payload = codec::encode_oc_circuit(&c)?;
            Ok(json!({
                "codec": CODEC_VERSION,
                "widths": widths_json(&c.widths()),
                "bits": payload.len(),
                "hex": container_hex(Kind::Flat, &payload),
            }))
        }
    }
}

fn sem(cmd: SemCmd) -> Res<Value> {
    match cmd {
        SemCmd::Sa { dist, budget } => {
            let r = semantics::sa(&read_dist(&dist)?, &budget.delta()?, &budget.budget()?)?;
            Ok(json!({"report": r, "run": budget_json(&budget)?}))
        }
        SemCmd::Csa { dist, cond, budget } => {
            let r = semantics::conditional_sa(
                &read_dist(&dist)?,
                &read_dist(&cond)?,
                &budget.delta()?,
                &budget.budget()?,
            )?;
            Ok(json!({"report": r, "run": budget_json(&budget)?}))
        }
        SemCmd::Si { dist, cond, budget } => {
            let r = semantics::si(
                &read_dist(&dist)?,
                &read_dist(&cond)?,
                &budget.delta()?,
                &budget.budget()?,
            )?;
            Ok(json!({"report": r, "run": budget_json(&budget)?}))
        }
        SemCmd::Eff { dist, cond, budget } => {
            let r = semantics::effectiveness(
                &read_dist(&dist)?,
                &read_dist(&cond)?,
                &budget.delta()?,
                &budget.budget()?,
            )?;
            Ok(json!({"report": r, "run": budget_json(&budget)?}))
        }
        SemCmd::SsocDemo { src, budget } => {
            let r = semantics::ssoc_demo(&src.flat()?, &budget.delta()?, &budget.budget()?)?;
            Ok(json!({"report": r, "run": budget_json(&budget)?}))
        }
        SemCmd::Capacity {
            src,
            candidates,
            channel,
            budget,
        } => {
            let c = src.flat()?;
            let cands = candidates.iter().map(read_dist).collect::<Res<Vec<_>>>()?;
            let ch = ChannelMatrix::from_json(&read_text(&channel)?).map_err(|e| Failure::Usage(e.to_string()))?;
            let r =
                semantics::capacity_objective(&c.logic, &c.u, c.n, &cands, &ch, &budget.delta()?, &budget.budget()?)?;
            Ok(json!({"report": r, "run": budget_json(&budget)?}))
        }
    }
}

/// Flattens a JSON value into `path<TAB>value` lines.
fn to_tsv(v: &Value, prefix: &str, out: &mut String) {
    match v {
        Value::Object(map) => {
            for (k, x) in map {
                let p = if prefix.is_empty() {
                    k.clone()
                } else {
                    format!("{prefix}.{k}")
                };
                to_tsv(x, &p, out);
            }
        }
        Value::Array(xs) => {
            for (i, x) in xs.iter().enumerate() {
                to_tsv(x, &format!("{prefix}.{i}"), out);
            }
        }
        Value::String(s) => out.push_str(&format!("{prefix}\t{s}\n")),
        other => out.push_str(&format!("{prefix}\t{other}\n")),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 2 } else { 0 });
        }
    };
    let fmt = cli.out.format;
    let text = match run(cli.cmd, fmt) {
        Ok(Value::String(table)) => table,
        Ok(v) => match fmt {
            Format::Json => serde_json::to_string_pretty(&v).expect("serializable") + "\n",
            Format::Tsv => {
                let mut s = String::new();
                to_tsv(&v, "", &mut s);
                s
            }
        },
        Err(Failure::Domain(m)) => {
            eprintln!("error: {m}");
            return ExitCode::from(1);
        }
        Err(Failure::Usage(m)) => {
            eprintln!("usage error: {m}");
            return ExitCode::from(2);
        }
    };
    match &cli.out.out {
        Some(p) => {
            if let Err(e) = fs::write(p, text) {
                eprintln!("usage error: {}: {e}", p.display());
                return ExitCode::from(2);
            }
        }
        None => print!("{text}"),
    }
    ExitCode::SUCCESS
}
