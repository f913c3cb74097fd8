mod args;

use std::fmt::Write as _;
use std::fs;
use std::io::Write as _;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use ca2d_core::bounds::{assemble_report, bound_integral, bound_integral_quadrant, bound_rectangle, BoundReport};
use ca2d_core::entropy::{afe_empirical, afe_rank, is_prime, shift_entropy, EntropyEstimate};
use ca2d_core::grid::sample_configuration;
use ca2d_core::lyapunov::profile;
use ca2d_core::{
    builtin_rule, parse_rule, Boundary, CellSet, Configuration, DirectionProfile, MeasureSpec, RuleSpec, Strategy,
};
use clap::Parser;
use serde::Serialize;
use serde_json::{json, Value};
use thiserror::Error;

use args::{
    BoundArgs, BoundaryArg, Cli, Command, EntropyArgs, EntropyMethodArg, Format, LyapunovArgs, ReportArgs,
    StepArgs, StrategyArg, Threads,
};

const VERSION: &str = env!("CARGO_PKG_VERSION");

#[derive(Debug, Error)]
enum CliError {
    #[error(transparent)]
    Core(#[from] ca2d_core::Error),
    #[error("{path}: {source}")]
    Read { path: PathBuf, source: std::io::Error },
    #[error("{path}: {source}")]
    Write { path: PathBuf, source: std::io::Error },
    #[error("{}", .0.join("\n"))]
    Verdict(Vec<String>),
}

impl CliError {
    fn exit_code(&self) -> u8 {
        match self {
            CliError::Core(e) if e.is_parse_error() => 2,
            CliError::Read { .. } => 2,
            CliError::Core(_) | CliError::Write { .. } => 3,
            CliError::Verdict(_) => 4,
        }
    }
}

type Result<T> = std::result::Result<T, CliError>;

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Threads::Fixed(n) = cli.threads {
        let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
    }
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}

fn run(cli: &Cli) -> Result<()> {
    match &cli.command {
        Command::Step(a) => cmd_step(cli, a),
        Command::Lyapunov(a) => cmd_lyapunov(cli, a),
        Command::Entropy(a) => cmd_entropy(cli, a),
        Command::Bound(a) => cmd_bound(cli, a),
        Command::Report(a) => cmd_report(cli, a),
    }
}

fn load_rule(name: &str, k: u32) -> Result<RuleSpec> {
    if matches!(name, "F1" | "F2" | "F3" | "Fk") {
        return Ok(builtin_rule(name, k)?);
    }
    let path = PathBuf::from(name);
    let text = fs::read_to_string(&path).map_err(|source| CliError::Read { path: path.clone(), source })?;
    let stem = path.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
    Ok(parse_rule(&text)?.with_name(stem))
}

fn read(path: &Path) -> Result<String> {
    fs::read_to_string(path).map_err(|source| CliError::Read { path: path.to_path_buf(), source })
}

fn emit(out: Option<&Path>, text: &str) -> Result<()> {
    match out {
        Some(path) => fs::write(path, text).map_err(|source| CliError::Write { path: path.to_path_buf(), source }),
        None => std::io::stdout()
            .write_all(text.as_bytes())
            .map_err(|source| CliError::Write { path: "<stdout>".into(), source }),
    }
}

/// Resolved run configuration embedded in every report. Output paths and the
/// thread count are left out so reports are byte-identical across machines.
#[derive(Serialize)]
struct RunConfig<'a, T: Serialize> {
    subcommand: &'a str,
    seed: u64,
    format: Format,
    #[serde(flatten)]
    args: T,
}

fn header(cli: &Cli, subcommand: &str, rule: &RuleSpec, args: impl Serialize) -> Value {
    json!({
        "tool": "ca2d",
        "version": VERSION,
        "rule": rule.name(),
        "rule_digest": rule.digest(),
        "config": RunConfig { subcommand, seed: cli.seed, format: cli.format, args },
    })
}

fn text_header(s: &mut String, title: &str, meta: &Value) {
    let _ = writeln!(s, "# {title}");
    let _ = writeln!(s, "version: {}", meta["version"].as_str().unwrap_or_default());
    let _ = writeln!(s, "rule: {}", meta["rule"].as_str().unwrap_or_default());
    let _ = writeln!(s, "rule_digest: {}", meta["rule_digest"].as_str().unwrap_or_default());
    let _ = writeln!(s, "config: {}", meta["config"]);
}

fn to_json(mut meta: Value, key: &str, body: impl Serialize) -> String {
    meta[key] = serde_json::to_value(body).expect("serializable");
    let mut s = serde_json::to_string_pretty(&meta).expect("serializable");
    s.push('\n');
    s
}

fn cmd_step(cli: &Cli, a: &StepArgs) -> Result<()> {
    let rule = load_rule(&a.rule.rule, a.rule.k)?;
    let boundary = match a.boundary {
        BoundaryArg::Periodic => Boundary::Periodic,
        BoundaryArg::Shrink => Boundary::Shrink,
    };
    let init = match (&a.init, a.random) {
        (Some(path), _) => Configuration::from_dump(&read(path)?, boundary)?,
        (None, Some((w, h))) => {
            sample_configuration(&MeasureSpec::uniform(rule.alphabet())?, w, h, cli.seed)?.with_boundary(boundary)
        }
        (None, None) => unreachable!("clap requires --random or --init"),
    };
    let mut out = init.step(&rule, a.steps)?;
    if boundary == Boundary::Shrink {
        out = out.crop(out.valid_region())?;
    }
    let dump = out.to_dump();
    let text = match cli.format {
        Format::Text => dump,
        Format::Machine => {
            let meta = header(
                cli,
                "step",
                &rule,
                json!({ "rule_source": a.rule, "steps": a.steps, "boundary": a.boundary,
                        "random": a.random.map(|(w, h)| format!("{w}x{h}")), "init": a.init.is_some() }),
            );
            to_json(meta, "dump", dump)
        }
    };
    emit(cli.out.as_deref(), &text)
}

fn strategy_for(a: StrategyArg, samples: usize, seed: u64) -> Strategy {
    match a {
        StrategyArg::Exact => Strategy::Exact,
        StrategyArg::Sample => Strategy::Sampled { samples, seed },
    }
}

fn cmd_lyapunov(cli: &Cli, a: &LyapunovArgs) -> Result<()> {
    let rule = load_rule(&a.rule.rule, a.rule.k)?;
    let p = profile(&rule, a.n, a.angles, strategy_for(a.strategy, a.samples, cli.seed))?;
    let text = match cli.format {
        Format::Text => p.to_csv(),
        Format::Machine => {
            let meta = header(
                cli,
                "lyapunov",
                &rule,
                json!({ "rule_source": a.rule, "n": a.n, "angles": a.angles, "strategy": a.strategy,
                        "samples": a.samples }),
            );
            to_json(meta, "profile", &p)
        }
    };
    emit(cli.out.as_deref(), &text)
}

fn entropy_text(s: &mut String, e: &EntropyEstimate) {
    let method = serde_json::to_value(e.method).unwrap();
    let _ = writeln!(s, "method: {}", method.as_str().unwrap_or_default());
    let _ = writeln!(s, "q: {}", e.q);
    let _ = writeln!(s, "units: nats");
    let _ = writeln!(s, "afe_proxy: {}", e.afe_proxy);
    let _ = writeln!(s, "afe_proxy_log_q: {}", e.afe_proxy_log_q);
    let _ = writeln!(s, "min_ratio: {}", e.min_ratio);
    for w in &e.warnings {
        let _ = writeln!(s, "warning: {w}");
    }
    let _ = writeln!(s, "slopes:");
    let _ = writeln!(s, "p,nats,log_q,stabilized");
    for sl in &e.slopes {
        let _ = writeln!(s, "{},{},{},{}", sl.p, sl.nats, sl.log_q, sl.stabilized);
    }
    let _ = writeln!(s, "table:");
    let _ = writeln!(s, "p,n,value,rank,corrected,std_error,distinct");
    let opt = |v: Option<String>| v.unwrap_or_default();
    for t in &e.table {
        let _ = writeln!(
            s,
            "{},{},{},{},{},{},{}",
            t.p,
            t.n,
            t.value,
            opt(t.rank.map(|v| v.to_string())),
            opt(t.corrected.map(|v| v.to_string())),
            opt(t.std_error.map(|v| v.to_string())),
            opt(t.distinct.map(|v| v.to_string())),
        );
    }
}

fn cmd_entropy(cli: &Cli, a: &EntropyArgs) -> Result<()> {
    let rule = load_rule(&a.rule.rule, a.rule.k)?;
    let e = match a.method {
        EntropyMethodArg::Rank => afe_rank(&rule, a.p_max, a.n_max)?,
        EntropyMethodArg::Empirical => {
            afe_empirical(&rule, &MeasureSpec::uniform(rule.alphabet())?, a.p_max, a.n_max, a.samples, cli.seed)?
        }
    };
    let meta = header(
        cli,
        "entropy",
        &rule,
        json!({ "rule_source": a.rule, "method": a.method, "p_max": a.p_max, "n_max": a.n_max,
                "samples": a.samples }),
    );
    let text = match cli.format {
        Format::Text => {
            let mut s = String::new();
            text_header(&mut s, "ca2d entropy", &meta);
            entropy_text(&mut s, &e);
            s
        }
        Format::Machine => to_json(meta, "entropy", &e),
    };
    emit(cli.out.as_deref(), &text)
}

fn cmd_bound(cli: &Cli, a: &BoundArgs) -> Result<()> {
    let (p, rule) = match (&a.profile, &a.rule) {
        (Some(path), _) => (DirectionProfile::from_csv(&read(path)?)?, None),
        (None, Some(name)) => {
            let rule = load_rule(name, a.k)?;
            (profile(&rule, a.n, a.angles, Strategy::Exact)?, Some(rule))
        }
        (None, None) => unreachable!("clap requires --profile or --rule"),
    };
    let rect = bound_rectangle(&p)?;
    let integral = bound_integral(&p)?;
    let quadrant = bound_integral_quadrant(&p)?;
    let body = json!({
        "n": p.horizon(),
        "M": p.angle_count(),
        "lambda_R": rect,
        "lambda_T": integral.value,
        "lambda_T_quadrant": quadrant.value,
        "lambda_T_quadrant_sqrt2": quadrant.value_sqrt2,
        "quadrature_error": { "integral": integral.error, "quadrant": quadrant.error },
    });
    let mut meta = json!({
        "tool": "ca2d",
        "version": VERSION,
        "rule": p.rule(),
        "config": RunConfig { subcommand: "bound", seed: cli.seed, format: cli.format,
            args: json!({ "profile": a.profile.is_some(), "rule_source": a.rule, "k": a.k, "n": a.n,
                          "angles": a.angles }) },
    });
    if let Some(rule) = &rule {
        meta["rule_digest"] = json!(rule.digest());
    }
    let text = match cli.format {
        Format::Text => {
            let mut s = String::new();
            text_header(&mut s, "ca2d bound", &meta);
            for key in ["n", "M", "lambda_R", "lambda_T", "lambda_T_quadrant", "lambda_T_quadrant_sqrt2"] {
                let _ = writeln!(s, "{key}: {}", body[key]);
            }
            let _ = writeln!(s, "quadrature_error_integral: {}", integral.error);
            let _ = writeln!(s, "quadrature_error_quadrant: {}", quadrant.error);
            s
        }
        Format::Machine => to_json(meta, "bounds", body),
    };
    emit(cli.out.as_deref(), &text)
}

fn report_text(s: &mut String, r: &BoundReport) {
    let c = &r.lambda_cardinals;
    let _ = writeln!(s, "n: {}", r.n);
    let _ = writeln!(s, "M: {}", r.angles);
    let _ = writeln!(s, "lambda_cardinals: {} {} {} {}", c.zero, c.half_pi, c.pi, c.three_half_pi);
    let _ = writeln!(s, "lambda_R: {}", r.lambda_r);
    let _ = writeln!(s, "lambda_T: {}", r.lambda_t);
    let _ = writeln!(s, "lambda_T_quadrant: {}", r.lambda_t_quadrant);
    let _ = writeln!(s, "lambda_T_quadrant_sqrt2: {}", r.lambda_t_quadrant_sqrt2);
    let _ = writeln!(s, "h_shift: {}", r.h_shift);
    let _ = writeln!(s, "afe: {}", r.afe);
    let _ = writeln!(s, "product_rectangle: {}", r.products.rectangle);
    let _ = writeln!(s, "product_integral: {}", r.products.integral);
    let _ = writeln!(s, "product_quadrant: {}", r.products.quadrant);
    let v = &r.verdicts;
    let _ = writeln!(s, "verdict_afe_le_rectangle: {}", v.afe_le_rectangle);
    let _ = writeln!(s, "verdict_afe_le_integral: {}", v.afe_le_integral);
    let _ = writeln!(s, "verdict_afe_le_quadrant: {}", v.afe_le_quadrant);
    let _ = writeln!(s, "quadrant_le_rectangle: {}", v.quadrant_le_rectangle);
    let _ = writeln!(s, "quadrature_error_integral: {}", r.quadrature_error.integral);
    let _ = writeln!(s, "quadrature_error_quadrant: {}", r.quadrature_error.quadrant);
}

fn cmd_report(cli: &Cli, a: &ReportArgs) -> Result<()> {
    let rule = load_rule(&a.rule.rule, a.rule.k)?;
    let strategy = if rule.is_linear() {
        Strategy::Exact
    } else {
        Strategy::Sampled { samples: a.samples, seed: cli.seed }
    };
    let prof = profile(&rule, a.n, a.angles, strategy)?;
    let uniform = MeasureSpec::uniform(rule.alphabet())?;
    let afe = if rule.is_linear() && is_prime(rule.alphabet()) {
        afe_rank(&rule, a.p_max, a.n_max)?
    } else {
        let steps = a.n_max.min((24.0 / (rule.alphabet() as f64).log2()) as usize - 1);
        afe_empirical(&rule, &uniform, 1, steps, a.entropy_samples, cli.seed)?
    };
    let region = ca2d_core::geometry::surface_r(a.n, &prof)?;
    let shift = shift_entropy(&uniform, &CellSet::from_rect(region))?;
    let report = assemble_report(&afe, &shift, &prof)?;

    let meta = header(
        cli,
        "report",
        &rule,
        json!({ "rule_source": a.rule, "n": a.n, "angles": a.angles, "p_max": a.p_max, "n_max": a.n_max,
                "samples": a.samples, "entropy_samples": a.entropy_samples }),
    );
    let text = match cli.format {
        Format::Text => {
            let mut s = String::new();
            text_header(&mut s, "ca2d report", &meta);
            let method = serde_json::to_value(prof.entries()[0].method).unwrap();
            let _ = writeln!(s, "profile_method: {}", method.as_str().unwrap_or_default());
            report_text(&mut s, &report);
            for w in &afe.warnings {
                let _ = writeln!(s, "warning: {w}");
            }
            s
        }
        Format::Machine => {
            let mut meta = meta;
            meta["entropy"] = serde_json::to_value(&afe).unwrap();
            meta["shift_entropy"] = serde_json::to_value(&shift).unwrap();
            to_json(meta, "bounds", &report)
        }
    };
    emit(cli.out.as_deref(), &text)?;

    let plot_path = a.plot.clone().or_else(|| {
        cli.out.as_ref().map(|o| {
            let mut p = o.clone().into_os_string();
            p.push(".plot.csv");
            PathBuf::from(p)
        })
    });
    if let Some(path) = plot_path {
        let mut csv = String::from("theta,lambda_hat\n");
        for e in prof.entries() {
            let _ = writeln!(csv, "{},{}", ca2d_core::lyapunov::fmt_sig(e.theta, 12), e.lambda_hat);
        }
        fs::write(&path, csv).map_err(|source| CliError::Write { path, source })?;
    }

    let failures = report.failures();
    if failures.is_empty() {
        Ok(())
    } else {
        Err(CliError::Verdict(failures))
    }
}
