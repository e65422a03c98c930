use clap::{Args, Parser, Subcommand};
use metastab::bound::run_realizer;
use metastab::eval::{with_big_stack, Budget, EvalError};
use metastab::harness::experiment::{realizer_constants, realizer_instance, run_bound};
use metastab::harness::sunny::compare_with_projection;
use metastab::harness::{
    check_sunny, export_reports, limsup_batch, load_config, run_experiment, ConfigError, Experiment, Format, HarnessError,
    FUEL_EXCEEDED,
};
use metastab::moduli::{
    validate_convexity_modulus, validate_norm_lemma, validate_omega_contract, validate_psi_two_point,
    validate_smoothness_modulus, Modulus, Role, ValidationReport,
};
use metastab::num::{parse_q, qi, Nat};
use metastab::spaces::{FeasibleSet, Space};
use serde::Serialize;
use std::path::PathBuf;
use std::process::ExitCode;

const EXIT_CHECKS: u8 = 2;
const EXIT_CONFIG: u8 = 3;

#[derive(Parser, Debug)]
#[command(name = "metastab", version, about = "Metastability rates for resolvent paths: empirical ranks, bounds and realizers")]
struct Cli {
    /// Output format.
    #[arg(long, global = true, default_value = "json", value_parser = ["json", "csv"])]
    format: String,
    /// Seed for sampled checks; overrides the config's `seed`.
    #[arg(long, global = true)]
    seed: Option<u64>,
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Args, Debug, Clone)]
struct Overrides {
    /// Experiment file (.json or .toml).
    #[arg(long)]
    config: PathBuf,
    /// ε as a rational, e.g. 1/10.
    #[arg(long)]
    epsilon: Option<String>,
    /// Counterfunction spec: const:c | table:a,b,.. | affine:a,c | id | argmax-gap:G.
    #[arg(long)]
    g: Option<String>,
    /// Fuel (bound fuel for `run`/`bound`, realizer fuel for `realizer`).
    #[arg(long)]
    fuel: Option<String>,
    /// Scan horizon for the least metastability rank.
    #[arg(long)]
    horizon: Option<u64>,
}

#[derive(Subcommand, Debug)]
enum Cmd {
    /// Full experiment: least N, bound, realizer and cross-checks.
    Run(Overrides),
    /// Evaluate the bound only.
    Bound(Overrides),
    /// Run the realizer and print its witness and A-instance transcript.
    Realizer(Overrides),
    /// Seeded batches for the ε-limsup functional.
    Limsup {
        #[arg(long, default_value_t = 200)]
        contract: usize,
        #[arg(long, default_value_t = 100)]
        soundness: usize,
    },
    /// Sample the moduli and derived inequalities.
    CheckModuli {
        /// Take space and moduli from an experiment file.
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long, default_value_t = 2)]
        dim: usize,
        #[arg(long, default_value = "2")]
        p: String,
        #[arg(long, default_value_t = 1)]
        b: u64,
        #[arg(long, default_value = "hilbert-eta")]
        eta: String,
        #[arg(long, default_value = "identity-tau")]
        tau: String,
        #[arg(long, default_value_t = 10_000)]
        samples: usize,
    },
    /// Sunny-retraction inequality and projection comparison from the config's `sunny` table.
    Sunny {
        #[arg(long)]
        config: PathBuf,
    },
}

enum Failure {
    Config(String),
    Checks,
}

impl From<ConfigError> for Failure {
    fn from(e: ConfigError) -> Self {
        Failure::Config(e.to_string())
    }
}

type Out = Result<(String, bool), Failure>;

fn csv_of<T: Serialize>(rows: &[T]) -> String {
    let mut w = csv::Writer::from_writer(vec![]);
    for r in rows {
        w.serialize(r).expect("flat record");
    }
    String::from_utf8(w.into_inner().expect("in-memory")).expect("utf-8")
}

fn render<T: Serialize, R: Serialize>(format: Format, items: &[T], header: &[&str], rows: impl Fn(&T) -> R) -> String {
    match format {
        Format::Json if items.len() == 1 => serde_json::to_string_pretty(&items[0]).expect("serializable") + "\n",
        Format::Json => serde_json::to_string_pretty(items).expect("serializable") + "\n",
        Format::Csv => header.join(",") + "\n" + &csv_of(&items.iter().map(rows).collect::<Vec<_>>()),
    }
}

fn experiments(o: &Overrides, seed: Option<u64>, fuel_is_realizer: bool) -> Result<Vec<Experiment>, Failure> {
    let cfgs = load_config(&o.config)?;
    let many = cfgs.len() > 1;
    let mut out = vec![];
    for (i, mut c) in cfgs.into_iter().enumerate() {
        let prefix = if many { format!("experiments[{i}]") } else { String::new() };
        if let Some(e) = &o.epsilon {
            c.epsilon = Some(parse_q(e).map_err(|m| Failure::Config(format!("--epsilon: {m}")))?);
        }
        if let Some(g) = &o.g {
            c.g = Some(g.clone());
        }
        if let Some(h) = o.horizon {
            c.horizon = h;
        }
        if let Some(s) = seed {
            c.seed = s;
        }
        if let Some(f) = &o.fuel {
            let v = parse_q(f).ok().filter(|v| v.is_integer() && *v >= qi(0)).ok_or_else(|| Failure::Config(format!("--fuel: `{f}` is not a natural number")))?;
            let n: Nat = v.to_integer().to_biguint().expect("nonnegative");
            if fuel_is_realizer {
                c.realizer.fuel = Some(n);
            } else {
                c.fuel = Some(n);
            }
        }
        out.push(c.build(&prefix)?);
    }
    Ok(out)
}

fn harness_failure(e: HarnessError) -> Failure {
    match e {
        HarnessError::Config(c) => Failure::Config(c.to_string()),
        HarnessError::Eval(e) => {
            eprintln!("error: {e}");
            Failure::Checks
        }
    }
}

fn cmd_run(o: &Overrides, seed: Option<u64>, format: Format) -> Out {
    let mut reports = vec![];
    for e in experiments(o, seed, false)? {
        reports.push(run_experiment(&e).map_err(harness_failure)?);
    }
    let ok = reports.iter().all(|r| r.passed());
    Ok((String::from_utf8(export_reports(&reports, format).map_err(Failure::Config)?).expect("utf-8"), ok))
}

#[derive(Serialize)]
struct BoundLine {
    instance: String,
    theta: String,
    applications: u64,
    stage: String,
}

fn cmd_bound(o: &Overrides, seed: Option<u64>, format: Format) -> Out {
    let mut lines = vec![];
    let mut ok = true;
    for e in experiments(o, seed, false)? {
        let line = match run_bound(&e) {
            Ok(Some(t)) => BoundLine {
                instance: e.name.clone(),
                theta: t.theta,
                applications: t.applications,
                stage: t.stage,
            },
            Ok(None) => {
                return Err(Failure::Config(format!("experiment `{}`: the bound applies to resolvent schemas only", e.name)));
            }
            Err(HarnessError::Eval(EvalError::FuelExceeded { applications, stage, .. })) => BoundLine {
                instance: e.name.clone(),
                theta: FUEL_EXCEEDED.into(),
                applications,
                stage,
            },
            Err(err) => {
                ok = false;
                eprintln!("{}: {err}", e.name);
                continue;
            }
        };
        lines.push(line);
    }
    Ok((render(format, &lines, &["instance", "theta", "applications", "stage"], |l| (l.instance.clone(), l.theta.clone(), l.applications, l.stage.clone())), ok))
}

#[derive(Serialize)]
struct RealizerLine {
    instance: String,
    witness_n: String,
    endpoint_holds: bool,
    applications: u64,
    error: Option<String>,
    report: Option<metastab::bound::RealizerReport>,
}

fn cmd_realizer(o: &Overrides, seed: Option<u64>, format: Format) -> Out {
    let mut lines = vec![];
    for e in experiments(o, seed, true)? {
        if !e.space.is_hilbert() {
            return Err(Failure::Config(format!("experiment `{}`: realizer mode needs p = 2; use `bound`", e.name)));
        }
        let c = realizer_constants(&e).map_err(harness_failure)?;
        let inst = realizer_instance(&e).map_err(harness_failure)?;
        // Skip mode and non-resolvent schemas have nothing to run.
        let (Some(c), Some(inst)) = (c, inst) else { continue };
        let budget = Budget::from_nat(&e.realizer_fuel());
        lines.push(match run_realizer(&inst, &c, &budget) {
            Ok(run) => RealizerLine {
                instance: e.name.clone(),
                witness_n: run.witness.to_string(),
                endpoint_holds: run.report.endpoint_holds && run.output.transcripts.iter().all(|t| t.holds),
                applications: run.report.applications,
                error: None,
                report: Some(run.report),
            },
            Err(err) => RealizerLine {
                instance: e.name.clone(),
                witness_n: if err.is_fuel() { FUEL_EXCEEDED.into() } else { "ERROR".into() },
                endpoint_holds: false,
                applications: budget.used(),
                error: Some(err.to_string()),
                report: None,
            },
        });
    }
    if lines.is_empty() {
        return Err(Failure::Config("realizer: no experiment runs the realizer".into()));
    }
    let ok = lines.iter().all(|l| l.endpoint_holds);
    Ok((render(format, &lines, &["instance", "witness_n", "endpoint_holds", "applications"], |l| (l.instance.clone(), l.witness_n.clone(), l.endpoint_holds, l.applications)), ok))
}

fn cmd_limsup(contract: usize, soundness: usize, seed: Option<u64>, format: Format) -> Out {
    let b = limsup_batch(seed.unwrap_or(0), contract, soundness).map_err(|e| {
        eprintln!("error: {e}");
        Failure::Checks
    })?;
    let ok = b.failed == 0;
    let text = match format {
        Format::Json => serde_json::to_string_pretty(&b).expect("serializable") + "\n",
        Format::Csv => csv_of(&b.cases),
    };
    Ok((text, ok))
}

#[derive(Serialize)]
struct ModRow<'a> {
    check: &'a str,
    modulus: &'a str,
    samples: usize,
    checked: usize,
    indeterminate: usize,
    violations: usize,
}

#[allow(clippy::too_many_arguments)]
fn cmd_check_moduli(
    config: &Option<PathBuf>,
    dim: usize,
    p: &str,
    b: u64,
    eta: &str,
    tau: &str,
    samples: usize,
    seed: Option<u64>,
    format: Format,
) -> Out {
    let (space, eta, tau, seed) = match config {
        Some(path) => {
            let cfg = load_config(path)?.remove(0);
            let e = cfg.build("")?;
            (e.space.clone(), e.eta.clone(), e.tau.clone(), seed.unwrap_or(e.seed))
        }
        None => {
            let p = parse_q(p).map_err(|m| Failure::Config(format!("--p: {m}")))?;
            let space = Space::new(dim, p, b, FeasibleSet::Ball { radius: qi(b as i64) }).map_err(|m| Failure::Config(format!("space: {m}")))?;
            let eta = Modulus::preset(eta, Role::Convexity).map_err(|m| Failure::Config(format!("--eta: {m}")))?;
            let tau = Modulus::preset(tau, Role::Smoothness).map_err(|m| Failure::Config(format!("--tau: {m}")))?;
            (space, eta, tau, seed.unwrap_or(0))
        }
    };
    let b = space.b;
    let reports: Vec<(&str, ValidationReport)> = vec![
        ("convexity", validate_convexity_modulus(&space, &eta, samples, seed)),
        ("smoothness", validate_smoothness_modulus(&space, &tau, samples, seed)),
        ("psi-two-point", validate_psi_two_point(&space, b, &eta, samples, seed)),
        ("omega-contract", validate_omega_contract(&space, b, &tau, samples, seed)),
        ("norm-lemma", validate_norm_lemma(&space, b, samples, seed)),
    ];
    let ok = reports.iter().all(|(_, r)| r.passed());
    let text = match format {
        Format::Json => {
            let m: serde_json::Map<String, serde_json::Value> =
                reports.iter().map(|(k, r)| (k.to_string(), serde_json::to_value(r).expect("serializable"))).collect();
            serde_json::to_string_pretty(&m).expect("serializable") + "\n"
        }
        Format::Csv => csv_of(
            &reports
                .iter()
                .map(|(k, r)| ModRow {
                    check: k,
                    modulus: &r.modulus,
                    samples: r.samples,
                    checked: r.checked,
                    indeterminate: r.indeterminate,
                    violations: r.violations.len(),
                })
                .collect::<Vec<_>>(),
        ),
    };
    Ok((text, ok))
}

#[derive(Serialize)]
struct SunnyRow<'a> {
    instance: &'a str,
    pairings: usize,
    rejected: usize,
    projections: usize,
    slack: &'a str,
    passed: bool,
}

fn cmd_sunny(config: &std::path::Path, seed: Option<u64>, format: Format) -> Out {
    let o = Overrides {
        config: config.to_path_buf(),
        epsilon: None,
        g: None,
        fuel: None,
        horizon: None,
    };
    let mut out = vec![];
    // Entries without a `sunny` table are skipped.
    for e in experiments(&o, seed, false)? {
        let Some(s) = e.sunny.clone() else { continue };
        let fail = |m: String| {
            eprintln!("{}: {m}", e.name);
            Failure::Checks
        };
        let mut r = check_sunny(&e.space, &e.map, &s.anchors, &s.fixed_points, &s.t_close, &e.opts).map_err(fail)?;
        if s.projection {
            compare_with_projection(&mut r, &e.space, &e.map, &s.anchors, &s.t_close, &e.opts, &e.tol.projection).map_err(fail)?;
        }
        out.push((e.name.clone(), r));
    }
    if out.is_empty() {
        return Err(Failure::Config("sunny: no experiment has a `sunny` table".into()));
    }
    let ok = out.iter().all(|(_, r)| r.passed);
    let text = match format {
        Format::Json => {
            let v: Vec<serde_json::Value> = out
                .iter()
                .map(|(n, r)| serde_json::json!({"instance": n, "report": r}))
                .collect();
            serde_json::to_string_pretty(&if v.len() == 1 { v[0].clone() } else { serde_json::Value::Array(v) }).expect("serializable") + "\n"
        }
        Format::Csv => csv_of(
            &out.iter()
                .map(|(n, r)| SunnyRow {
                    instance: n,
                    pairings: r.entries.len(),
                    rejected: r.rejected.len(),
                    projections: r.projections.len(),
                    slack: &r.slack,
                    passed: r.passed,
                })
                .collect::<Vec<_>>(),
        ),
    };
    Ok((text, ok))
}

fn dispatch(cli: Cli) -> Out {
    let format: Format = cli.format.parse().map_err(Failure::Config)?;
    match &cli.cmd {
        Cmd::Run(o) => cmd_run(o, cli.seed, format),
        Cmd::Bound(o) => cmd_bound(o, cli.seed, format),
        Cmd::Realizer(o) => cmd_realizer(o, cli.seed, format),
        Cmd::Limsup { contract, soundness } => cmd_limsup(*contract, *soundness, cli.seed, format),
        Cmd::CheckModuli {
            config,
            dim,
            p,
            b,
            eta,
            tau,
            samples,
        } => cmd_check_moduli(config, *dim, p, *b, eta, tau, *samples, cli.seed, format),
        Cmd::Sunny { config } => cmd_sunny(config, cli.seed, format),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_CONFIG } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    // Deep lazy recursions in the bound need a large stack.
    let (text, code) = with_big_stack(move || match dispatch(cli) {
        Ok((text, ok)) => (text, if ok { 0 } else { EXIT_CHECKS }),
        Err(Failure::Config(m)) => (format!("error: {m}\n"), EXIT_CONFIG),
        Err(Failure::Checks) => (String::new(), EXIT_CHECKS),
    });
    if code == EXIT_CONFIG {
        eprint!("{text}");
    } else {
        print!("{text}");
    }
    ExitCode::from(code)
}
