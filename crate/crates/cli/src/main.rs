use std::fs;
use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Duration;

use anyhow::{anyhow, Context};
use clap::{Parser, Subcommand, ValueEnum};

use clr_core::bench::{run_benchmark, write_records, write_summary, BenchConfig, PbksTable};
use clr_core::generate::{gen_random_instance, GenMetric, GenParams};
use clr_core::oracle::brute_force_clr;
use clr_core::solvers::{DEFAULT_PATH_ALPHA, DEFAULT_THETA, DEFAULT_TREE_ALPHA};
use clr_core::splitting::SplitError;
use clr_core::{
    parse_instance, solve, validate_solution, write_canonical, Algorithm, CloseMode, Instance, InstanceFormat,
    SolveError, SolveParams,
};

#[derive(Parser)]
#[command(name = "clr", version, about = "Capacitated location routing solvers and benchmark harness")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum AlgArg {
    Tree,
    Path,
}

impl From<AlgArg> for Algorithm {
    fn from(a: AlgArg) -> Self {
        match a {
            AlgArg::Tree => Algorithm::Tree,
            AlgArg::Path => Algorithm::Path,
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum ModeArg {
    Double,
    Match,
}

impl From<ModeArg> for CloseMode {
    fn from(m: ModeArg) -> Self {
        match m {
            ModeArg::Double => CloseMode::Double,
            ModeArg::Match => CloseMode::Match,
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum FormatArg {
    Canonical,
    Barreto,
    Tuzun,
}

impl From<FormatArg> for InstanceFormat {
    fn from(f: FormatArg) -> Self {
        match f {
            FormatArg::Canonical => InstanceFormat::Canonical,
            FormatArg::Barreto => InstanceFormat::Barreto,
            FormatArg::Tuzun => InstanceFormat::Tuzun,
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum MetricArg {
    Euclidean,
    Manhattan,
}

#[derive(Subcommand)]
enum Command {
    /// Solve one instance.
    Solve {
        #[arg(long, value_enum, default_value = "tree")]
        alg: AlgArg,
        /// Opening-cost scale for the facility-location step (default 0.4 tree, 0.7 path).
        #[arg(long)]
        alpha: Option<f64>,
        #[arg(long, default_value_t = DEFAULT_THETA)]
        theta: f64,
        #[arg(long, value_enum, default_value = "match")]
        mode: ModeArg,
        #[arg(long)]
        unsplittable: bool,
        #[arg(long)]
        instance: PathBuf,
        #[arg(long, value_enum, default_value = "canonical")]
        format: FormatArg,
        /// Print every tour.
        #[arg(long)]
        tours: bool,
    },
    /// Run an algorithm and alpha sweep over a directory of instances.
    Bench {
        #[arg(long)]
        instances: PathBuf,
        /// `name,pbks` CSV; the bundled table is used when omitted.
        #[arg(long)]
        pbks: Option<PathBuf>,
        #[arg(long, value_enum, value_delimiter = ',', default_value = "tree")]
        alg: Vec<AlgArg>,
        #[arg(long = "alpha-sweep", value_delimiter = ',')]
        alpha_sweep: Vec<f64>,
        #[arg(long, default_value_t = DEFAULT_THETA)]
        theta: f64,
        #[arg(long, value_enum, default_value = "match")]
        mode: ModeArg,
        #[arg(long)]
        unsplittable: bool,
        #[arg(long, value_enum, default_value = "canonical")]
        format: FormatArg,
        #[arg(long)]
        out: PathBuf,
        /// Summary CSV path; printed to stdout regardless.
        #[arg(long)]
        summary: Option<PathBuf>,
        /// Per-run wall-time budget in seconds.
        #[arg(long, default_value_t = 60.0)]
        timeout: f64,
    },
    /// Write a random instance in canonical format.
    Gen {
        #[arg(long)]
        seed: u64,
        #[arg(long, default_value_t = 3)]
        m: usize,
        #[arg(long, default_value_t = 10)]
        n: usize,
        #[arg(long, default_value_t = 5)]
        demand_max: u32,
        #[arg(long, default_value_t = 10)]
        capacity: u32,
        #[arg(long, default_value_t = 50)]
        phi_max: u32,
        #[arg(long = "box", default_value_t = 100)]
        coord_box: u32,
        #[arg(long, value_enum, default_value = "euclidean")]
        metric: MetricArg,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Solve a tiny instance exactly.
    Oracle {
        #[arg(long)]
        instance: PathBuf,
        #[arg(long, value_enum, default_value = "canonical")]
        format: FormatArg,
        #[arg(long)]
        unsplittable: bool,
    },
    /// Rewrite an instance in canonical format.
    Convert {
        #[arg(long)]
        instance: PathBuf,
        #[arg(long, value_enum)]
        format: FormatArg,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

const EXIT_USAGE: u8 = 1;
const EXIT_INSTANCE: u8 = 2;
const EXIT_INTERNAL: u8 = 3;

struct Failure {
    code: u8,
    err: anyhow::Error,
}

fn fail(code: u8) -> impl FnOnce(anyhow::Error) -> Failure {
    move |err| Failure { code, err }
}

fn solve_failure(e: SolveError) -> Failure {
    let code = match &e {
        SolveError::Instance(_)
        | SolveError::BadAlpha(_)
        | SolveError::BadTheta(_)
        | SolveError::Split(SplitError::InfeasibleUnsplittable { .. })
        | SolveError::Split(SplitError::UnsplittableUnsupported) => EXIT_INSTANCE,
        _ => EXIT_INTERNAL,
    };
    Failure { code, err: e.into() }
}

fn load(path: &PathBuf, format: FormatArg) -> Result<Instance, Failure> {
    parse_instance(path, format.into())
        .with_context(|| format!("loading {}", path.display()))
        .map_err(fail(EXIT_INSTANCE))
}

fn emit(out: &Option<PathBuf>, text: &str) -> Result<(), Failure> {
    match out {
        Some(p) => fs::write(p, text).with_context(|| format!("writing {}", p.display())).map_err(fail(EXIT_INSTANCE)),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn run(cli: Cli) -> Result<(), Failure> {
    match cli.command {
        Command::Solve { alg, alpha, theta, mode, unsplittable, instance, format, tours } => {
            let inst = load(&instance, format)?;
            let alg: Algorithm = alg.into();
            let alpha = alpha.unwrap_or(match alg {
                Algorithm::Tree => DEFAULT_TREE_ALPHA,
                Algorithm::Path => DEFAULT_PATH_ALPHA,
            });
            let params = SolveParams { alg, alpha, theta, mode: mode.into(), splittable: !unsplittable };
            let sol = solve(&inst, &params).map_err(solve_failure)?;
            let report = validate_solution(&inst, &sol, params.splittable);
            if !report.is_ok() {
                return Err(Failure {
                    code: EXIT_INTERNAL,
                    err: anyhow!("solution failed validation: {}", report.violations.join("; ")),
                });
            }
            let ids = |v: &[usize]| v.iter().map(|&u| inst.vertex_id(u).to_string()).collect::<Vec<_>>().join(" ");
            println!("instance {}", inst.name);
            println!("alg {alg} alpha {alpha} theta {theta} mode {} splittable {}", params.mode, params.splittable);
            println!("total {:.4}", sol.total());
            println!("routing {:.4}", sol.routing_cost);
            println!("opening {:.4}", sol.opening_cost);
            println!("opened {}", ids(&sol.opened));
            println!("tours {}", sol.tours.len());
            if tours {
                for (i, t) in sol.tours.iter().enumerate() {
                    let stops: Vec<String> =
                        t.visits.iter().zip(&t.loads).map(|(&v, l)| format!("{}:{l}", inst.vertex_id(v))).collect();
                    println!(
                        "tour {i} depot {} cost {:.4} visits {}",
                        inst.vertex_id(t.depot),
                        t.cost,
                        stops.join(" ")
                    );
                }
            }
            Ok(())
        }
        Command::Bench {
            instances,
            pbks,
            alg,
            alpha_sweep,
            theta,
            mode,
            unsplittable,
            format,
            out,
            summary,
            timeout,
        } => {
            let pbks = match pbks {
                Some(p) => PbksTable::load(&p).map_err(|e| fail(EXIT_INSTANCE)(e.into()))?,
                None => PbksTable::bundled(),
            };
            let algs: Vec<Algorithm> = alg.into_iter().map(Into::into).collect();
            let alphas = if alpha_sweep.is_empty() {
                vec![if algs == [Algorithm::Path] { DEFAULT_PATH_ALPHA } else { DEFAULT_TREE_ALPHA }]
            } else {
                alpha_sweep
            };
            if !(timeout > 0.0) {
                return Err(Failure { code: EXIT_USAGE, err: anyhow!("timeout must be positive") });
            }
            let cfg = BenchConfig {
                instances,
                format: format.into(),
                pbks,
                algs,
                alphas,
                theta,
                mode: mode.into(),
                splittable: !unsplittable,
                timeout: Duration::from_secs_f64(timeout),
            };
            let outcome = run_benchmark(&cfg).map_err(|e| fail(EXIT_INSTANCE)(e.into()))?;
            let file = fs::File::create(&out)
                .with_context(|| format!("creating {}", out.display()))
                .map_err(fail(EXIT_INSTANCE))?;
            write_records(file, &outcome.records).map_err(|e| fail(EXIT_INTERNAL)(e.into()))?;
            if let Some(p) = &summary {
                let file = fs::File::create(p)
                    .with_context(|| format!("creating {}", p.display()))
                    .map_err(fail(EXIT_INSTANCE))?;
                write_summary(file, &outcome.summary).map_err(|e| fail(EXIT_INTERNAL)(e.into()))?;
            }
            let instances: std::collections::BTreeSet<&str> =
                outcome.records.iter().map(|r| r.instance.as_str()).collect();
            println!("{} instances, {} runs", instances.len(), outcome.records.len());
            let mut stdout = std::io::stdout().lock();
            write_summary(&mut stdout, &outcome.summary).map_err(|e| fail(EXIT_INTERNAL)(e.into()))?;
            let _ = stdout.flush();
            for (name, msg) in &outcome.failures {
                eprintln!("failed {name}: {msg}");
            }
            if outcome.failures.is_empty() {
                Ok(())
            } else {
                let internal = outcome
                    .failures
                    .iter()
                    .any(|(_, m)| m.contains("bound violated") || m.contains("invalid solution"));
                Err(Failure {
                    code: if internal { EXIT_INTERNAL } else { EXIT_INSTANCE },
                    err: anyhow!("{} run(s) failed", outcome.failures.len()),
                })
            }
        }
        Command::Gen { seed, m, n, demand_max, capacity, phi_max, coord_box, metric, out } => {
            if m == 0 || n == 0 || demand_max == 0 || capacity == 0 {
                return Err(Failure {
                    code: EXIT_USAGE,
                    err: anyhow!("m, n, demand-max and capacity must be positive"),
                });
            }
            let metric = match metric {
                MetricArg::Euclidean => GenMetric::Euclidean,
                MetricArg::Manhattan => GenMetric::Manhattan,
            };
            let p = GenParams { m, n, demand_max, capacity, phi_max, coord_box, metric };
            let inst: Instance = gen_random_instance(seed, &p);
            emit(&out, &write_canonical(&inst))
        }
        Command::Oracle { instance, format, unsplittable } => {
            let inst = load(&instance, format)?;
            let res = brute_force_clr(&inst, !unsplittable).map_err(|e| fail(EXIT_INSTANCE)(e.into()))?;
            let ids: Vec<String> = res.witness.opened.iter().map(|&u| inst.vertex_id(u).to_string()).collect();
            println!("instance {}", inst.name);
            println!("opt {:.6}", res.opt_total);
            println!("routing {:.6}", res.opt_routing);
            println!("opening {:.6}", res.opt_opening);
            println!("opened {}", ids.join(" "));
            println!("tours {}", res.witness.tours.len());
            Ok(())
        }
        Command::Convert { instance, format, out } => {
            let inst = load(&instance, format)?;
            emit(&out, &write_canonical(&inst))
        }
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
            eprintln!("error: {:#}", f.err);
            ExitCode::from(f.code)
        }
    }
}
