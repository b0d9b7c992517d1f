//! `cqmorph` command line: divergence tables, convertibility checks,
//! reverse tests, the three-point counterexample sweep, and the
//! operator-Jensen violation search.
//!
//! Exit codes for `check`: 0 feasible, 1 infeasible, 2 undetermined.
//! Usage, I/O and parse errors exit with 64. Batch invocations over
//! several instance files report in input order and exit with the worst
//! per-file code; `CQMORPH_THREADS` caps the parallel fan-out.

use std::io::Write as _;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::json;

use cqmorph::counterexample::{self, CurveTag, TriplePoint};
use cqmorph::criteria::{self, DecisionConfig};
use cqmorph::divergence::{f_divergence, max_f_divergence, reverse_test};
use cqmorph::ext;
use cqmorph::grids::GridSpec;
use cqmorph::instance::{self, Instance};
use cqmorph::convexfn;

const EXIT_ERROR: u8 = 64;

#[derive(Parser)]
#[command(name = "cqmorph", version, about = "Convertibility of classical probability pairs into quantum state pairs", disable_help_subcommand = true)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone)]
struct CommonOpts {
    /// Tolerance override for the selected operation
    #[arg(long, global = true)]
    tol: Option<f64>,

    /// Seed for randomized searches
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,

    /// Resolvent shift grid as lo:hi:n (log spacing)
    #[arg(long = "t-grid", global = true)]
    t_grid: Option<String>,

    /// Power exponent grid as lo:hi:n (uniform spacing)
    #[arg(long = "s-grid", global = true)]
    s_grid: Option<String>,

    /// Emit JSON where the command supports both formats
    #[arg(long, global = true, conflicts_with = "csv")]
    json: bool,

    /// Emit CSV where the command supports both formats
    #[arg(long, global = true)]
    csv: bool,
}

#[derive(Copy, Clone, PartialEq, Eq, ValueEnum)]
enum CheckMode {
    Scan,
    Equality,
    Corollary,
    Full,
}

#[derive(Subcommand)]
enum Command {
    /// Evaluate classical and maximal quantum f-divergences per function
    Divergence {
        /// Instance files (JSON)
        #[arg(required = true)]
        files: Vec<PathBuf>,
        /// Comma-separated function specs: power:S, resolvent:T, square, lowner:{json}
        #[arg(long = "fns", default_value = "power:0.5,power:1,resolvent:1,square")]
        fn_specs: String,
        #[command(flatten)]
        common: CommonOpts,
    },
    /// Decide convertibility of each instance
    Check {
        #[arg(required = true)]
        files: Vec<PathBuf>,
        /// scan = necessary only, equality = sufficiency identity,
        /// corollary = reverse test + LP, full = the whole pipeline
        #[arg(long, value_enum, default_value_t = CheckMode::Full)]
        mode: CheckMode,
        #[command(flatten)]
        common: CommonOpts,
    },
    /// Construct the optimal reverse test of the quantum pair
    ReverseTest {
        file: PathBuf,
        #[command(flatten)]
        common: CommonOpts,
    },
    /// Reproduce the three-point counterexample sweep
    Counterexample {
        /// Source triple a0,b0,c0 with a0 < b0 < c0 summing to 1
        #[arg(long, default_value = "0.1,0.3,0.6")]
        triple: String,
        /// Output directory for curves.csv and summary.json
        #[arg(long, default_value = ".")]
        out: PathBuf,
        #[command(flatten)]
        common: CommonOpts,
    },
    /// Random search for operator-Jensen violations
    Jensen {
        /// Function spec (power4 is the canonical non-operator-convex probe)
        #[arg(long = "fn", default_value = "power4")]
        fn_spec: String,
        #[arg(long, default_value_t = 100_000)]
        trials: usize,
        /// Dimensions as small:large for the compression
        #[arg(long, default_value = "2:4")]
        dims: String,
        #[command(flatten)]
        common: CommonOpts,
    },
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            // help/version are successful exits; everything else is usage
            use clap::error::ErrorKind;
            let _ = e.print();
            return match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => ExitCode::SUCCESS,
                _ => ExitCode::from(EXIT_ERROR),
            };
        }
    };
    match run(cli) {
        Ok(code) => ExitCode::from(code),
        Err(msg) => {
            eprintln!("error: {msg}");
            ExitCode::from(EXIT_ERROR)
        }
    }
}

fn run(cli: Cli) -> Result<u8, String> {
    match cli.command {
        Command::Divergence { files, fn_specs, common } => cmd_divergence(&files, &fn_specs, &common),
        Command::Check { files, mode, common } => cmd_check(&files, mode, &common),
        Command::ReverseTest { file, common } => cmd_reverse_test(&file, &common),
        Command::Counterexample { triple, out, common } => cmd_counterexample(&triple, &out, &common),
        Command::Jensen { fn_spec, trials, dims, common } => cmd_jensen(&fn_spec, trials, &dims, &common),
    }
}

fn load_instance(path: &Path, common: &CommonOpts) -> Result<Instance, String> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| format!("{}: {e}", path.display()))?;
    let mut inst = instance::parse_instance(&text)
        .map_err(|e| format!("{}: {e}", path.display()))?;
    if let Some(tol) = common.tol {
        inst.config.tol = tol;
    }
    if let Some(tg) = &common.t_grid {
        inst.config.t_grid = GridSpec::parse(tg).map_err(|e| e.to_string())?.log_points();
    }
    if let Some(sg) = &common.s_grid {
        inst.config.s_grid = GridSpec::parse(sg).map_err(|e| e.to_string())?.lin_points();
    }
    Ok(inst)
}

/// Runs one closure per input in parallel, capped by `CQMORPH_THREADS`,
/// collecting outputs in input order.
fn fan_out<T: Send>(inputs: usize, work: impl Fn(usize) -> T + Sync) -> Vec<T> {
    let cap = std::env::var("CQMORPH_THREADS")
        .ok()
        .and_then(|v| v.parse::<usize>().ok())
        .filter(|&v| v > 0)
        .unwrap_or_else(|| std::thread::available_parallelism().map(|n| n.get()).unwrap_or(1));
    let threads = cap.min(inputs).max(1);
    if threads == 1 {
        return (0..inputs).map(&work).collect();
    }
    let mut slots: Vec<Option<T>> = (0..inputs).map(|_| None).collect();
    let next = std::sync::atomic::AtomicUsize::new(0);
    let slots_ref = std::sync::Mutex::new(&mut slots);
    std::thread::scope(|scope| {
        for _ in 0..threads {
            scope.spawn(|| loop {
                let i = next.fetch_add(1, std::sync::atomic::Ordering::Relaxed);
                if i >= inputs {
                    break;
                }
                let out = work(i);
                slots_ref.lock().unwrap()[i] = Some(out);
            });
        }
    });
    slots.into_iter().map(|s| s.expect("worker filled slot")).collect()
}

fn cmd_divergence(files: &[PathBuf], fn_specs: &str, common: &CommonOpts) -> Result<u8, String> {
    let specs: Vec<&str> = fn_specs.split(',').map(str::trim).filter(|s| !s.is_empty()).collect();
    let mut fns = Vec::with_capacity(specs.len());
    for s in &specs {
        fns.push(convexfn::parse_fn_spec(s).map_err(|e| e.to_string())?);
    }
    for f in &fns {
        if !f.operator_convex() {
            return Err(format!(
                "`{}` is not operator convex; the quantum column has no closed form for it",
                f.label()
            ));
        }
    }

    let instances: Vec<Result<Instance, String>> =
        fan_out(files.len(), |i| load_instance(&files[i], common));

    let stdout = std::io::stdout();
    let mut out = stdout.lock();
    writeln!(out, "label,classical,quantum,gap").map_err(|e| e.to_string())?;
    for inst in instances {
        let inst = inst?;
        for f in &fns {
            let classical = f_divergence(f, &inst.classical);
            let quantum = max_f_divergence(f, &inst.quantum).map_err(|e| e.to_string())?;
            writeln!(
                out,
                "{},{},{},{}",
                f.label(),
                ext::render(classical),
                ext::render(quantum),
                ext::render(ext::gap(classical, quantum)),
            )
            .map_err(|e| e.to_string())?;
        }
    }
    Ok(0)
}

fn cmd_check(files: &[PathBuf], mode: CheckMode, common: &CommonOpts) -> Result<u8, String> {
    let results = fan_out(files.len(), |i| -> Result<(String, u8), String> {
        let inst = load_instance(&files[i], common)?;
        let tol = inst.config.tol;
        match mode {
            CheckMode::Scan => {
                let scan = criteria::necessary_scan(
                    &inst.classical,
                    &inst.quantum,
                    &inst.config.t_grid,
                    &inst.config.s_grid,
                    1e-9,
                )
                .map_err(|e| e.to_string())?;
                let code = if scan.violations() > 0 { 1 } else { 2 };
                let text = if common.csv {
                    scan.to_csv()
                } else {
                    format!("{:#}\n", instance::scan_to_json(&scan))
                };
                Ok((text, code))
            }
            CheckMode::Equality => {
                let equal = criteria::sufficient_equality(
                    &inst.classical,
                    &inst.quantum,
                    &inst.config.t_grid,
                    &inst.config.s_grid,
                    1e-7,
                )
                .map_err(|e| e.to_string())?;
                let code = if equal { 0 } else { 2 };
                Ok((format!("{:#}\n", json!({ "equality": equal })), code))
            }
            CheckMode::Corollary => {
                let report =
                    criteria::sufficient_via_reverse_test(&inst.classical, &inst.quantum, tol)
                        .map_err(|e| e.to_string())?;
                let code = instance::status_exit_code(report.status) as u8;
                Ok((format!("{:#}\n", instance::report_to_json(&report)), code))
            }
            CheckMode::Full => {
                let config = DecisionConfig {
                    tol,
                    t_grid: inst.config.t_grid.clone(),
                    s_grid: inst.config.s_grid.clone(),
                    max_iter: inst.config.max_iter,
                };
                let report = criteria::decide(&inst.classical, &inst.quantum, &config)
                    .map_err(|e| e.to_string())?;
                let code = instance::status_exit_code(report.status) as u8;
                Ok((format!("{:#}\n", instance::report_to_json(&report)), code))
            }
        }
    });

    let mut worst = 0u8;
    let stdout = std::io::stdout();
    let mut out = stdout.lock();
    for r in results {
        let (text, code) = r?;
        out.write_all(text.as_bytes()).map_err(|e| e.to_string())?;
        worst = worst.max(code);
    }
    Ok(worst)
}

fn cmd_reverse_test(file: &Path, common: &CommonOpts) -> Result<u8, String> {
    let inst = load_instance(file, common)?;
    let rt = reverse_test(&inst.quantum).map_err(|e| e.to_string())?;
    let residual = rt.channel.reproduction_residual(&rt.q, &inst.quantum);
    let payload = json!({
        "q0": rt.q.p0.weights(),
        "q1": rt.q.p1.weights(),
        "channel": rt
            .channel
            .states()
            .iter()
            .map(|s| instance::matrix_to_json(s.mat()))
            .collect::<Vec<_>>(),
        "reproduction_residual": residual,
    });
    println!("{payload:#}");
    Ok(0)
}

fn parse_triple(spec: &str) -> Result<TriplePoint, String> {
    let parts: Vec<&str> = spec.split(',').collect();
    if parts.len() != 3 {
        return Err(format!("triple `{spec}` is not a0,b0,c0"));
    }
    let vals: Vec<f64> = parts
        .iter()
        .map(|p| p.trim().parse::<f64>().map_err(|e| format!("triple `{spec}`: {e}")))
        .collect::<Result<_, _>>()?;
    TriplePoint::new(vals[0], vals[1], vals[2]).map_err(|e| e.to_string())
}

fn tag_json(tag: CurveTag) -> serde_json::Value {
    match tag {
        CurveTag::Resolvent(t) => json!({ "tag": "resolvent", "t": t }),
        CurveTag::Square => json!({ "tag": "square" }),
    }
}

fn cmd_counterexample(triple_spec: &str, out_dir: &Path, common: &CommonOpts) -> Result<u8, String> {
    let triple = parse_triple(triple_spec)?;
    let t_grid = match &common.t_grid {
        Some(tg) => GridSpec::parse(tg).map_err(|e| e.to_string())?.log_points(),
        None => cqmorph::grids::default_curve_t_grid(),
    };
    let tol = common.tol.unwrap_or(1e-10);

    let sweep = counterexample::b_star(&triple, &t_grid).map_err(|e| e.to_string())?;
    let report =
        counterexample::find_separating_point(&triple, &t_grid, tol).map_err(|e| e.to_string())?;

    std::fs::create_dir_all(out_dir).map_err(|e| e.to_string())?;

    let mut csv = String::from("tag,t,a_t,b_t\n");
    for s in &sweep.samples {
        match s.tag {
            CurveTag::Resolvent(t) => {
                csv.push_str(&format!("resolvent,{},{},{}\n", t, s.a_t, s.b_t))
            }
            CurveTag::Square => csv.push_str(&format!("square,,{},{}\n", s.a_t, s.b_t)),
        }
    }
    let curves_path = out_dir.join("curves.csv");
    std::fs::write(&curves_path, csv).map_err(|e| e.to_string())?;

    let summary = json!({
        "triple": [triple.a0, triple.b0, triple.c0],
        "b_star": report.b_star,
        "t_star": tag_json(report.t_star),
        "b_infinity": report.b_infinity,
        "separating_point": { "a": report.point.0, "b": report.point.1 },
        "max_g_at_point": report.max_g,
        "in_hexagon": report.in_hexagon,
        "majorization": instance::status_str(report.majorization),
        "lp": instance::status_str(report.lp),
        "scan_violations": report.scan_violations,
        "scan_worst_gap": report.scan_worst_gap,
    });
    let summary_path = out_dir.join("summary.json");
    std::fs::write(&summary_path, format!("{summary:#}\n")).map_err(|e| e.to_string())?;

    println!(
        "b_star = {} (margin over c0: {}); wrote {} and {}",
        report.b_star,
        report.b_star - triple.c0,
        curves_path.display(),
        summary_path.display()
    );
    Ok(0)
}

fn parse_dims(spec: &str) -> Result<(usize, usize), String> {
    let parts: Vec<&str> = spec.split(':').collect();
    if parts.len() != 2 {
        return Err(format!("dims `{spec}` is not small:large"));
    }
    let small: usize = parts[0].parse().map_err(|e| format!("dims `{spec}`: {e}"))?;
    let large: usize = parts[1].parse().map_err(|e| format!("dims `{spec}`: {e}"))?;
    Ok((small, large))
}

fn cmd_jensen(fn_spec: &str, trials: usize, dims: &str, common: &CommonOpts) -> Result<u8, String> {
    let f = convexfn::parse_fn_spec(fn_spec).map_err(|e| e.to_string())?;
    let dims = parse_dims(dims)?;
    let hit = counterexample::jensen_violation_search(&f, dims, trials, common.seed)
        .map_err(|e| e.to_string())?;
    let payload = match hit {
        Some(v) => {
            let iso: Vec<Vec<[f64; 2]>> = v
                .isometry
                .iter()
                .map(|col| col.iter().map(|z| [z.re, z.im]).collect())
                .collect();
            json!({
                "fn": f.label(),
                "violation": {
                    "trial": v.trial,
                    "min_gap_eigenvalue": v.min_gap_eigenvalue,
                    "spectrum": v.spectrum,
                    "isometry_columns": iso,
                },
            })
        }
        None => json!({ "fn": f.label(), "violation": null, "trials": trials }),
    };
    println!("{payload:#}");
    Ok(0)
}
