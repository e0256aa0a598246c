//! Command-line front end: function-spec parsing, uniform JSON/text
//! reporting, and dispatch into the library.
//!
//! Exit codes: 0 success, 1 failed verification check, 2 validation error,
//! 3 resource cap exceeded.

use clap::{Parser, Subcommand};
use f2sketch::boolfn::{self, builtin, BoolFun};
use f2sketch::caps::Caps;
use f2sketch::checks::{run_check, CHECK_IDS};
use f2sketch::commsim::{
    exact_error, optimal_error_under, parse_distribution, OneWayProtocol, ProtocolFile,
};
use f2sketch::error::Error;
use f2sketch::fourierdim::{bound_report, exact_dim, max_subspace_weight};
use f2sketch::rat::{parse_rat, rat_string, Rat};
use f2sketch::sketch::{
    deterministic_sketch, eval_sketch_error, ltf_sketch, random_parity_sketch,
    sign_trick_sketch, BoolTarget, DecoderRule, EvalMode, LtfSpec, SchemeFile, SketchScheme,
};
use f2sketch::streamsim::{
    coset_check, gen_stream, half_coverage, kernel, run as stream_run, Automaton, AutomatonFile,
    Stream, StreamAlgo, StreamModel,
};
use serde_json::{json, Value};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

const VERSION_LINE: &str = concat!(
    env!("CARGO_PKG_VERSION"),
    " (file formats: scheme=1 protocol=1 automaton=1 truth-table=1 ltf-weights=1 matrix=1 stream=1)"
);

#[derive(Parser)]
#[command(name = "f2sketch", version = VERSION_LINE, about = "GF(2) linear sketching laboratory")]
struct Cli {
    /// Emit JSON reports instead of text.
    #[arg(long, global = true)]
    json: bool,
    /// Master seed; all randomness derives from named substreams of it.
    #[arg(long, global = true, default_value_t = 1)]
    seed: u64,
    /// Worker threads for partitionable searches (0 = all cores). Results
    /// are identical for any worker count.
    #[arg(long, global = true, default_value_t = 0)]
    workers: usize,
    /// Resource-cap overrides, comma-separated key=value pairs
    /// (enum-dim, span-dim, comm-arity, onebit-arity, affine-arity,
    /// affine-codim, superslam-cells, search-subspaces, decoder-width).
    #[arg(long, global = true)]
    caps: Option<String>,
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Nonzero Fourier coefficients of a function.
    Spectrum {
        #[arg(long = "fn")]
        func: String,
    },
    /// Exact Fourier dimension and a basis of the spectral span.
    Dim {
        #[arg(long = "fn")]
        func: String,
    },
    /// Subspace weight profile with per-dimension sketch and one-way bounds.
    Profile {
        #[arg(long = "fn")]
        func: String,
    },
    /// Build and evaluate sketch schemes.
    Sketch {
        #[command(subcommand)]
        cmd: SketchCmd,
    },
    /// One-way communication games.
    Comm {
        #[command(subcommand)]
        cmd: CommCmd,
    },
    /// Turnstile streams and stream automata.
    Stream {
        #[command(subcommand)]
        cmd: StreamCmd,
    },
    /// Run a named verification check (see `check list`).
    Check {
        /// Check id, or `list` to enumerate the ids.
        id: String,
        /// Composition depth for recmaj-4d-over-n.
        #[arg(long, default_value_t = 2)]
        k: usize,
    },
}

#[derive(Subcommand)]
enum SketchCmd {
    /// Construct a scheme and write it as JSON.
    Build {
        /// det | sign | parity | ltf
        #[arg(long)]
        kind: String,
        #[arg(long = "fn")]
        func: String,
        /// Subspace dimension for the sign kind.
        #[arg(long)]
        d: Option<usize>,
        /// Error budget for the randomized kinds, e.g. 1/8 or 0.125.
        #[arg(long)]
        delta: Option<String>,
        /// Decoder rule for the parity kind: isolation | majority.
        #[arg(long, default_value = "isolation")]
        rule: String,
        /// Output path (stdout when omitted).
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Evaluate a stored scheme against a function.
    Eval {
        #[arg(long)]
        scheme: PathBuf,
        #[arg(long = "fn")]
        func: String,
        /// exact | monte:N
        #[arg(long, default_value = "exact")]
        mode: String,
    },
}

#[derive(Subcommand)]
enum CommCmd {
    /// Exhaustive one-bit message search.
    Onebit {
        #[arg(long = "fn")]
        func: String,
        /// uniform | sec7 | sec7:<shift bits>
        #[arg(long, default_value = "uniform")]
        dist: String,
    },
    /// Exact error of a stored protocol.
    Eval {
        #[arg(long)]
        protocol: PathBuf,
        #[arg(long = "fn")]
        func: String,
        #[arg(long, default_value = "uniform")]
        dist: String,
    },
}

#[derive(Subcommand)]
enum StreamCmd {
    /// Generate a random update stream.
    Gen {
        /// 1 (split-uniform halves) | 2 (uniform coordinate flips)
        #[arg(long)]
        model: u32,
        #[arg(long)]
        n: usize,
        /// Length for model 2 (default ceil(4 n ln n)).
        #[arg(long)]
        len: Option<usize>,
        /// Output path for the stream text (stdout when omitted).
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run a stored scheme over a stream.
    Run {
        /// Scheme JSON file.
        #[arg(long)]
        algo: PathBuf,
        #[arg(long)]
        stream: PathBuf,
        /// Target function (required by parity schemes; enables a
        /// correctness column when given).
        #[arg(long = "fn")]
        func: Option<String>,
        /// Sample index for randomized schemes.
        #[arg(long, default_value_t = 0)]
        sample: u64,
    },
    /// Extract the kernel of a path-independent automaton.
    Kernel {
        #[arg(long)]
        automaton: PathBuf,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if cli.workers > 0 {
        let _ = rayon::ThreadPoolBuilder::new().num_threads(cli.workers).build_global();
    }
    let mut caps = Caps::default();
    if let Some(spec) = &cli.caps {
        if let Err(msg) = caps.parse_overrides(spec) {
            eprintln!("error: bad --caps: {msg}");
            return ExitCode::from(2);
        }
    }
    match dispatch(&cli, &caps) {
        Ok(code) => code,
        Err(err) => {
            eprintln!("error: {err}");
            ExitCode::from(if err.is_cap() { 3 } else { 2 })
        }
    }
}

fn dispatch(cli: &Cli, caps: &Caps) -> Result<ExitCode, Error> {
    match &cli.cmd {
        Cmd::Spectrum { func } => {
            let f = resolve_boolfun(func)?;
            let spec = f.wht();
            if cli.json {
                let coeffs: Vec<Value> = spec
                    .support()
                    .iter()
                    .map(|a| {
                        json!({
                            "alpha": a.to_string(),
                            "c": spec.coeff(a),
                            "coeff": rat_string(&spec.fourier_coeff(a.bits())),
                        })
                    })
                    .collect();
                emit(&json!({ "n": f.n(), "sparsity": spec.sparsity(), "coeffs": coeffs }));
            } else {
                println!("n={} sparsity={}", f.n(), spec.sparsity());
                for a in spec.support() {
                    println!("{a} c={} coeff={}", spec.coeff(&a), rat_string(&spec.fourier_coeff(a.bits())));
                }
            }
            Ok(ExitCode::SUCCESS)
        }
        Cmd::Dim { func } => {
            let f = resolve_boolfun(func)?;
            let (d, basis) = exact_dim(&f);
            if cli.json {
                let rows: Vec<String> = basis.basis().rows().map(|r| r.to_string()).collect();
                emit(&json!({ "dim": d, "basis": rows }));
            } else {
                println!("{d}");
                for row in basis.basis().rows() {
                    println!("basis {row}");
                }
            }
            Ok(ExitCode::SUCCESS)
        }
        Cmd::Profile { func } => {
            let f = resolve_boolfun(func)?;
            let report = bound_report(&f, caps)?;
            if cli.json {
                emit(&report.to_json());
            } else {
                println!("n={}", report.n);
                for b in &report.per_dim {
                    println!(
                        "d={} w={} gap={}{} part1<={} part2>={:.6} part3-delta={}",
                        b.d,
                        rat_string(&b.w),
                        rat_string(&b.gap),
                        if b.gap_undefined { " (threshold undefined)" } else { "" },
                        rat_string(&b.sketch_error_upper),
                        b.sketch_error_lower,
                        rat_string(&b.one_way_delta),
                    );
                }
                let c = &report.chosen;
                println!(
                    "chosen: theta={} case={} d*={} one-way-delta={} sketch-error={}",
                    rat_string(&c.theta),
                    if !c.applicable {
                        "inapplicable"
                    } else if c.large_gap_case {
                        "large-gap"
                    } else {
                        "small-gap"
                    },
                    c.d_star,
                    rat_string(&c.one_way_delta),
                    rat_string(&c.sketch_error),
                );
            }
            Ok(ExitCode::SUCCESS)
        }
        Cmd::Sketch { cmd } => sketch_cmd(cli, caps, cmd),
        Cmd::Comm { cmd } => comm_cmd(cli, caps, cmd),
        Cmd::Stream { cmd } => stream_cmd(cli, caps, cmd),
        Cmd::Check { id, k } => {
            if id == "list" {
                for known in CHECK_IDS {
                    println!("{known}");
                }
                return Ok(ExitCode::SUCCESS);
            }
            let report = run_check(id, *k, cli.seed, caps)?;
            if cli.json {
                emit(&report.to_json());
            } else {
                print!("{}", report.render());
            }
            Ok(if report.pass() { ExitCode::SUCCESS } else { ExitCode::from(1) })
        }
    }
}

fn sketch_cmd(cli: &Cli, caps: &Caps, cmd: &SketchCmd) -> Result<ExitCode, Error> {
    match cmd {
        SketchCmd::Build { kind, func, d, delta, rule, out } => {
            let scheme = match kind.as_str() {
                "det" => deterministic_sketch(&resolve_boolfun(func)?, caps)?,
                "sign" => {
                    let f = resolve_boolfun(func)?;
                    let d = d.ok_or_else(|| Error::Parse {
                        line: 0,
                        msg: "sign kind needs --d".into(),
                    })?;
                    let (_, witness) = max_subspace_weight(&f, d, caps)?;
                    sign_trick_sketch(&f, &witness, caps)?.0
                }
                "parity" => {
                    let f = resolve_boolfun(func)?;
                    let delta = parse_delta(delta.as_deref().unwrap_or("1/8"))?;
                    let rule = parse_rule(rule)?;
                    random_parity_sketch(&f, &delta, cli.seed, rule)?
                }
                "ltf" => {
                    let spec = resolve_ltf(func)?;
                    let delta = parse_delta(delta.as_deref().unwrap_or("1/10"))?;
                    ltf_sketch(&spec, &delta, cli.seed)?
                }
                other => {
                    return Err(Error::Parse { line: 0, msg: format!("unknown sketch kind '{other}'") })
                }
            };
            let file = scheme.to_file();
            let text = serde_json::to_string_pretty(&file)?;
            match out {
                Some(path) => {
                    std::fs::write(path, text + "\n")?;
                    if cli.json {
                        emit(&json!({ "written": path.display().to_string(), "k": scheme.k(), "kind": scheme.kind() }));
                    } else {
                        println!("wrote {} ({} bits, kind {})", path.display(), scheme.k(), scheme.kind());
                    }
                }
                None => println!("{text}"),
            }
            Ok(ExitCode::SUCCESS)
        }
        SketchCmd::Eval { scheme, func, mode } => {
            let file: SchemeFile = serde_json::from_str(&std::fs::read_to_string(scheme)?)?;
            let resolved = resolve_fn(func)?;
            let f_table = match &resolved {
                ResolvedFn::Table(f) => Some(f.clone()),
                ResolvedFn::Ltf(spec) if spec.n() <= boolfn::MAX_ARITY => Some(spec.to_truth_table()?),
                ResolvedFn::Ltf(_) => None,
            };
            let scheme = SketchScheme::from_file(&file, f_table.as_ref())?;
            let target: &dyn BoolTarget = match &resolved {
                ResolvedFn::Table(f) => f,
                ResolvedFn::Ltf(spec) => spec,
            };
            let mode = parse_mode(mode, cli.seed)?;
            let report = eval_sketch_error(&scheme, target, mode)?;
            if cli.json {
                emit(&json!({
                    "exact": report.exact,
                    "per_x_max": rat_string(&report.per_x_max),
                    "uniform_avg": rat_string(&report.uniform_avg),
                    "per_x_ci_upper": report.per_x_ci_upper,
                    "uniform_ci": report.uniform_ci.map(|(a, b)| vec![a, b]),
                    "trials": report.trials,
                }));
            } else {
                println!(
                    "{} per-x-max={} uniform-avg={}{}",
                    if report.exact { "exact" } else { "monte" },
                    rat_string(&report.per_x_max),
                    rat_string(&report.uniform_avg),
                    match report.per_x_ci_upper {
                        Some(cp) => format!(" per-x-95%-upper={cp:.6}"),
                        None => String::new(),
                    }
                );
            }
            Ok(ExitCode::SUCCESS)
        }
    }
}

fn comm_cmd(cli: &Cli, caps: &Caps, cmd: &CommCmd) -> Result<ExitCode, Error> {
    match cmd {
        CommCmd::Onebit { func, dist } => {
            let f = resolve_boolfun(func)?;
            let mu = parse_distribution(dist, &f)?;
            let (err, witness) = f2sketch::commsim::best_one_bit_error(&f, &mu, caps)?;
            if cli.json {
                emit(&json!({
                    "error": rat_string(&err),
                    "witness_message": format!("{witness:#x}"),
                }));
            } else {
                println!("error={} witness-message={witness:#x}", rat_string(&err));
            }
            Ok(ExitCode::SUCCESS)
        }
        CommCmd::Eval { protocol, func, dist } => {
            let file: ProtocolFile = serde_json::from_str(&std::fs::read_to_string(protocol)?)?;
            let (proto, has_decoders) = OneWayProtocol::from_file(&file)?;
            let f = resolve_boolfun(func)?;
            let mu = parse_distribution(dist, &f)?;
            let (err, decoding) = if has_decoders {
                (exact_error(&proto, &f, &mu, caps)?, "stored")
            } else {
                (optimal_error_under(&proto.message, proto.c, &f, &mu, caps)?, "optimal")
            };
            if cli.json {
                emit(&json!({ "error": rat_string(&err), "decoding": decoding, "c": proto.c }));
            } else {
                println!("error={} decoding={decoding} c={}", rat_string(&err), proto.c);
            }
            Ok(ExitCode::SUCCESS)
        }
    }
}

fn stream_cmd(cli: &Cli, _caps: &Caps, cmd: &StreamCmd) -> Result<ExitCode, Error> {
    match cmd {
        StreamCmd::Gen { model, n, len, out } => {
            let model = StreamModel::from_id(*model)?;
            let (stream, split) = gen_stream(model, *n, cli.seed, *len)?;
            let (first, second) = half_coverage(&stream, split);
            let report = json!({
                "n": n,
                "len": stream.len(),
                "split": split,
                "freq": stream.freq().to_string(),
                "half_coverage": [first, second],
            });
            match out {
                Some(path) => {
                    std::fs::write(path, stream.to_text())?;
                    if cli.json {
                        emit(&report);
                    } else {
                        println!(
                            "wrote {} ({} updates, split {split}, halves cover all coordinates: {first}/{second})",
                            path.display(),
                            stream.len()
                        );
                    }
                }
                None => {
                    print!("{}", stream.to_text());
                    eprintln!("split={split} coverage={first}/{second}");
                }
            }
            Ok(ExitCode::SUCCESS)
        }
        StreamCmd::Run { algo, stream, func, sample } => {
            let file: SchemeFile = serde_json::from_str(&std::fs::read_to_string(algo)?)?;
            let f = func.as_deref().map(resolve_boolfun).transpose()?;
            let scheme = SketchScheme::from_file(&file, f.as_ref())?;
            let stream = Stream::from_text(&std::fs::read_to_string(stream)?)?;
            let outcome = stream_run(&StreamAlgo::Scheme { scheme: &scheme, sample: *sample }, &stream)?;
            let truth = f.as_ref().map(|f| f.eval(&stream.freq()));
            if cli.json {
                emit(&json!({
                    "output": outcome.output,
                    "final_state": outcome.final_state,
                    "space_bits": outcome.space_bits,
                    "freq": stream.freq().to_string(),
                    "truth": truth,
                }));
            } else {
                println!(
                    "output={} state={} space-bits={}{}",
                    outcome.output,
                    outcome.final_state,
                    outcome.space_bits,
                    match truth {
                        Some(t) => format!(" truth={t} correct={}", t == outcome.output),
                        None => String::new(),
                    }
                );
            }
            Ok(ExitCode::SUCCESS)
        }
        StreamCmd::Kernel { automaton } => {
            let file: AutomatonFile = serde_json::from_str(&std::fs::read_to_string(automaton)?)?;
            let auto = Automaton::from_file(&file)?;
            let sub = kernel(&auto)?;
            let coset = coset_check(&auto)?;
            if cli.json {
                let rows: Vec<String> = sub.basis().rows().map(|r| r.to_string()).collect();
                emit(&json!({
                    "kernel_dim": sub.dim(),
                    "kernel_basis": rows,
                    "coset_factoring": coset.ok,
                    "reachable_states": coset.reachable_states,
                }));
            } else {
                println!(
                    "kernel-dim={} coset-factoring={} reachable-states={}",
                    sub.dim(),
                    coset.ok,
                    coset.reachable_states
                );
                print!("{}", sub.basis().to_text());
            }
            Ok(ExitCode::SUCCESS)
        }
    }
}

enum ResolvedFn {
    Table(BoolFun),
    Ltf(LtfSpec),
}

/// A function spec is a file path (sniffed by header) or a builtin name.
fn resolve_fn(spec: &str) -> Result<ResolvedFn, Error> {
    if Path::new(spec).is_file() {
        let text = std::fs::read_to_string(spec)?;
        let head = text.lines().next().unwrap_or("").trim();
        if head.starts_with("theta=") {
            return Ok(ResolvedFn::Ltf(LtfSpec::parse_file(&text)?));
        }
        if head.starts_with("n=") {
            return Ok(ResolvedFn::Table(BoolFun::from_text(&text)?));
        }
        return Err(Error::Parse {
            line: 1,
            msg: format!("unrecognized function file header '{head}'"),
        });
    }
    Ok(ResolvedFn::Table(builtin(spec)?))
}

fn resolve_boolfun(spec: &str) -> Result<BoolFun, Error> {
    match resolve_fn(spec)? {
        ResolvedFn::Table(f) => Ok(f),
        ResolvedFn::Ltf(l) => l.to_truth_table(),
    }
}

/// LTF resolution: a weight file, or the uniform-weight `hamge:n:k` family.
fn resolve_ltf(spec: &str) -> Result<LtfSpec, Error> {
    if Path::new(spec).is_file() {
        return match resolve_fn(spec)? {
            ResolvedFn::Ltf(l) => Ok(l),
            ResolvedFn::Table(_) => Err(Error::Parse {
                line: 0,
                msg: "the ltf kind needs a weight file or hamge:n:k".into(),
            }),
        };
    }
    let parts: Vec<&str> = spec.split(':').collect();
    if let ["hamge", n, k] = parts.as_slice() {
        let n = n.parse().map_err(|_| Error::UnknownBuiltin(spec.into()))?;
        let k = k.parse().map_err(|_| Error::UnknownBuiltin(spec.into()))?;
        return LtfSpec::hamming_ge(n, k);
    }
    Err(Error::Parse { line: 0, msg: format!("'{spec}' is not an ltf spec (weight file or hamge:n:k)") })
}

fn parse_delta(s: &str) -> Result<Rat, Error> {
    parse_rat(s).ok_or_else(|| Error::Parse { line: 0, msg: format!("bad delta '{s}'") })
}

fn parse_rule(s: &str) -> Result<DecoderRule, Error> {
    match s {
        "isolation" => Ok(DecoderRule::Isolation),
        "majority" => Ok(DecoderRule::MajorityVote),
        other => Err(Error::Parse { line: 0, msg: format!("unknown decoder rule '{other}'") }),
    }
}

fn parse_mode(s: &str, seed: u64) -> Result<EvalMode, Error> {
    if s == "exact" {
        return Ok(EvalMode::Exact);
    }
    if let Some(n) = s.strip_prefix("monte:") {
        let trials: u64 = n
            .parse()
            .map_err(|_| Error::Parse { line: 0, msg: format!("bad trial count '{n}'") })?;
        return Ok(EvalMode::Monte { trials, seed });
    }
    Err(Error::Parse { line: 0, msg: format!("unknown mode '{s}' (exact | monte:N)") })
}

fn emit(v: &Value) {
    println!("{}", serde_json::to_string(v).expect("serializable"));
}
