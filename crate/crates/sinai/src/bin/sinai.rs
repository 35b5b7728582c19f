//! Thin command-line front end over the library.
//!
//! Subcommands:
//!   gen        sample an environment spec to env.json
//!   analyze    basic valley, refinement chain and barriers as JSON
//!   goodenv    per-replica good-environment verdicts as CSV
//!   exact      exit probabilities and exit-time moments as JSON
//!   simulate   walk replicas to CSV
//!   experiment containment | localization | subdiff | tails | goodenv-scan
//!
//! Exit codes: 0 all assertions passed, 1 operational error, 2 bound
//! violations found.

use std::collections::HashMap;
use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use sinai::env::{derived_scales, DistSpec, Environment, PotentialView};
use sinai::exact::{
    exit_prob, expected_exit_time_detailed, second_moment_exit_adjacent,
};
use sinai::goodenv::{check_good_environment_opts, CheckOptions, GoodEnvReport};
use sinai::harness::{
    chop_desk_scale, effective_workers, run_experiment, ExperimentConfig, ExperimentKind,
};
use sinai::rng::mix2;
use sinai::valleys::{
    find_basic_valley_auto, inner_barrier, inner_barrier_at, ChainReport, Side,
    DEFAULT_WINDOW_CAP,
};
use sinai::walk::{simulate, RecordMode, WalkerConfig};

const USAGE: &str = "usage: sinai <gen|analyze|goodenv|exact|simulate|experiment> [options]

  sinai gen --dist twopoint:0.3 --seed 1 --window -1000:1000 --out env.json
  sinai analyze --env env.json --n 1e6 --gamma 3 [--kappa 1] --out report.json
  sinai goodenv --dist twopoint:0.3 --n 1e8 --gamma 3 --kappa 1 \\
        --replicas 1000 --seed 7 --out goodenv.csv [--strict-normalization false]
  sinai exact --env env.json --n 1e6 --a -30 --x 0 --b 45
  sinai simulate --env env.json --start 0 --steps 1e6 --replicas 1e5 --seed 9 \\
        --record endpoints --out endpoints.csv [--targets -5,12]
  sinai experiment <containment|localization|subdiff|tails|goodenv-scan> \\
        --config cfg.json [--threads K] [--out dir] [--plot]

Distributions: twopoint:<p>, symuniform:<c>, table:<file.json>.
SINAI_THREADS sets the default worker count.";

fn main() {
    let code = match real_main() {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            1
        }
    };
    std::process::exit(code);
}

type CliError = Box<dyn std::error::Error>;

struct Args {
    values: HashMap<String, String>,
    flags: Vec<String>,
}

impl Args {
    fn parse(raw: &[String]) -> Result<Args, CliError> {
        let mut values = HashMap::new();
        let mut flags = Vec::new();
        let mut it = raw.iter().peekable();
        while let Some(a) = it.next() {
            let key = a
                .strip_prefix("--")
                .ok_or_else(|| format!("unexpected argument '{a}'"))?;
            match it.peek() {
                Some(v) if !v.starts_with("--") => {
                    values.insert(key.to_string(), it.next().unwrap().clone());
                }
                _ => flags.push(key.to_string()),
            }
        }
        Ok(Args { values, flags })
    }

    fn get(&self, key: &str) -> Result<&str, CliError> {
        self.values
            .get(key)
            .map(|s| s.as_str())
            .ok_or_else(|| format!("missing --{key}").into())
    }

    fn opt(&self, key: &str) -> Option<&str> {
        self.values.get(key).map(|s| s.as_str())
    }

    fn has_flag(&self, key: &str) -> bool {
        self.flags.iter().any(|f| f == key)
    }

    fn f64(&self, key: &str) -> Result<f64, CliError> {
        Ok(self.get(key)?.parse::<f64>()?)
    }

    fn u64_like(&self, key: &str) -> Result<u64, CliError> {
        let v = self.get(key)?.parse::<f64>()?;
        if v < 0.0 || v.fract() != 0.0 {
            return Err(format!("--{key} must be a nonnegative integer").into());
        }
        Ok(v as u64)
    }

    fn i64_val(&self, key: &str) -> Result<i64, CliError> {
        Ok(self.get(key)?.parse::<i64>()?)
    }
}

fn parse_dist(s: &str) -> Result<DistSpec, CliError> {
    let (family, param) = s
        .split_once(':')
        .ok_or_else(|| format!("distribution '{s}' must look like family:param"))?;
    let spec = match family {
        "twopoint" | "two_point" => DistSpec::TwoPoint { p: param.parse()? },
        "symuniform" | "uniform" | "symmetric_uniform" => {
            DistSpec::SymmetricUniform { c: param.parse()? }
        }
        "table" => {
            #[derive(Deserialize)]
            struct Table {
                values: Vec<f64>,
                weights: Vec<f64>,
            }
            let t: Table = serde_json::from_str(&fs::read_to_string(param)?)?;
            DistSpec::DiscreteTable { values: t.values, weights: t.weights }
        }
        other => return Err(format!("unknown distribution family '{other}'").into()),
    };
    spec.validate()?;
    Ok(spec)
}

fn parse_window(s: &str) -> Result<(i64, i64), CliError> {
    let (lo, hi) = s
        .split_once(':')
        .ok_or_else(|| format!("window '{s}' must look like lo:hi"))?;
    Ok((lo.parse()?, hi.parse()?))
}

/// On-disk environment spec: law, seed and realized window.
#[derive(Serialize, Deserialize)]
struct EnvFile {
    #[serde(flatten)]
    spec: DistSpec,
    seed: u64,
    window: (i64, i64),
}

fn load_env(path: &str) -> Result<(Environment, EnvFile), CliError> {
    let file: EnvFile = serde_json::from_str(&fs::read_to_string(path)?)?;
    let env = Environment::sample(&file.spec, file.seed, file.window.0, file.window.1)?;
    Ok((env, file))
}

fn write_out(path: &str, contents: &str) -> Result<(), CliError> {
    if let Some(parent) = Path::new(path).parent() {
        if !parent.as_os_str().is_empty() {
            fs::create_dir_all(parent)?;
        }
    }
    fs::write(path, contents)?;
    Ok(())
}

fn real_main() -> Result<i32, CliError> {
    let argv: Vec<String> = std::env::args().skip(1).collect();
    let Some(cmd) = argv.first() else {
        eprintln!("{USAGE}");
        return Ok(1);
    };
    match cmd.as_str() {
        "gen" => cmd_gen(&Args::parse(&argv[1..])?),
        "analyze" => cmd_analyze(&Args::parse(&argv[1..])?),
        "goodenv" => cmd_goodenv(&Args::parse(&argv[1..])?),
        "exact" => cmd_exact(&Args::parse(&argv[1..])?),
        "simulate" => cmd_simulate(&Args::parse(&argv[1..])?),
        "experiment" => cmd_experiment(&argv[1..]),
        "--help" | "-h" | "help" => {
            println!("{USAGE}");
            Ok(0)
        }
        other => {
            eprintln!("unknown subcommand '{other}'\n{USAGE}");
            Ok(1)
        }
    }
}

fn cmd_gen(args: &Args) -> Result<i32, CliError> {
    let spec = parse_dist(args.get("dist")?)?;
    let seed = args.u64_like("seed")?;
    let window = parse_window(args.get("window")?)?;
    // Realize once to validate the window.
    Environment::sample(&spec, seed, window.0, window.1)?;
    let file = EnvFile { spec, seed, window };
    let json = serde_json::to_string_pretty(&file)?;
    match args.opt("out") {
        Some(path) => write_out(path, &json)?,
        None => println!("{json}"),
    }
    Ok(0)
}

#[derive(Serialize)]
struct AnalyzeReport {
    n: f64,
    gamma: f64,
    kappa: f64,
    sigma2: f64,
    valley: sinai::valleys::Valley,
    canonical_chop_cutoff: f64,
    canonical_chop_feasible: bool,
    chain: ChainReport,
    barrier_threshold: f64,
    barrier: Option<sinai::valleys::InnerBarrier>,
    barrier_threshold_clamped: f64,
    barrier_clamped: Option<sinai::valleys::InnerBarrier>,
    good_environment: GoodEnvReport,
}

fn cmd_analyze(args: &Args) -> Result<i32, CliError> {
    let (env, _) = load_env(args.get("env")?)?;
    let n = args.f64("n")?;
    let gamma = args.f64("gamma")?;
    let kappa = args.opt("kappa").map(str::parse).transpose()?.unwrap_or(1.0);
    let sigma2 = env.moments().sigma2;
    let scales = derived_scales(n, gamma, kappa, sigma2)?;
    let (env, valley) = find_basic_valley_auto(&env, &scales, DEFAULT_WINDOW_CAP)?;
    let pot = PotentialView::new(&env, n)?;
    let chain = chop_desk_scale(&pot, &valley, &scales);
    let feasible = {
        let right = (valley.m_right - valley.bottom) as f64;
        let left = (valley.bottom - valley.m_left) as f64;
        right >= scales.chop_cutoff() && left >= scales.chop_cutoff()
    };
    let report = AnalyzeReport {
        n,
        gamma,
        kappa,
        sigma2,
        valley,
        canonical_chop_cutoff: scales.chop_cutoff(),
        canonical_chop_feasible: feasible,
        chain: ChainReport::build(&pot, &chain),
        barrier_threshold: scales.barrier_threshold(),
        barrier: inner_barrier(&pot, valley.bottom, &scales).ok(),
        barrier_threshold_clamped: scales.barrier_threshold_clamped(n),
        barrier_clamped: inner_barrier_at(&pot, valley.bottom, scales.barrier_threshold_clamped(n))
            .ok(),
        good_environment: check_good_environment_opts(
            &env,
            n,
            gamma,
            kappa,
            CheckOptions::default(),
        )?,
    };
    let json = serde_json::to_string_pretty(&report)?;
    match args.opt("out") {
        Some(path) => write_out(path, &json)?,
        None => println!("{json}"),
    }
    Ok(0)
}

fn cmd_goodenv(args: &Args) -> Result<i32, CliError> {
    let spec = parse_dist(args.get("dist")?)?;
    let n = args.f64("n")?;
    let gamma = args.f64("gamma")?;
    let kappa = args.f64("kappa")?;
    let replicas = args.u64_like("replicas")?;
    let seed = args.u64_like("seed")?;
    let strict = args
        .opt("strict-normalization")
        .map(str::parse::<bool>)
        .transpose()?
        .unwrap_or(true);

    // Replica rows with explicit options (the estimate helper is the
    // strict-normalization path).
    let mut csv = String::from("replica,overall");
    for name in sinai::goodenv::CLAUSE_NAMES {
        csv.push(',');
        csv.push_str(name);
    }
    csv.push_str(",m0,M0,M0p,r,rp\n");
    let sigma2 = spec.sigma2();
    derived_scales(n, gamma, kappa, sigma2)?;
    let opts = CheckOptions { strict_normalization: strict, ..CheckOptions::default() };
    let mut successes = 0u64;
    for idx in 0..replicas {
        let env_seed = mix2(seed, idx);
        let env = Environment::sample(&spec, env_seed, -1024, 1024)?;
        let report = check_good_environment_opts(&env, n, gamma, kappa, opts)?;
        if report.overall {
            successes += 1;
        }
        let mut fields = vec![idx.to_string(), report.overall.to_string()];
        for (_, clause) in report.clauses() {
            fields.push(clause.status.token().to_string());
        }
        let opt_i64 = |v: Option<i64>| v.map(|x| x.to_string()).unwrap_or_default();
        let opt_usize = |v: Option<usize>| v.map(|x| x.to_string()).unwrap_or_default();
        fields.push(opt_i64(report.bottom));
        fields.push(opt_i64(report.m_right));
        fields.push(opt_i64(report.m_left));
        fields.push(opt_usize(report.r));
        fields.push(opt_usize(report.r_prime));
        csv.push_str(&fields.join(","));
        csv.push('\n');
    }
    match args.opt("out") {
        Some(path) => write_out(path, &csv)?,
        None => print!("{csv}"),
    }
    eprintln!(
        "good environments: {successes}/{replicas} (p_hat = {})",
        successes as f64 / replicas as f64
    );
    Ok(0)
}

fn cmd_exact(args: &Args) -> Result<i32, CliError> {
    let (env, _) = load_env(args.get("env")?)?;
    let n = args.f64("n")?;
    let a = args.i64_val("a")?;
    let x = args.i64_val("x")?;
    let b = args.i64_val("b")?;
    let pot = PotentialView::new(&env, n)?;
    let (p_b, p_a) = exit_prob(&pot, a, x, b)?;
    let et = expected_exit_time_detailed(&pot, a, x, b)?;
    let et2 = if x == a + 1 {
        Some(second_moment_exit_adjacent(&pot, a, b - 1, Side::Right)?)
    } else if x == b - 1 {
        Some(second_moment_exit_adjacent(&pot, b, a + 1, Side::Left)?)
    } else {
        None
    };
    let mut out = serde_json::json!({
        "pB": p_b,
        "pA": p_a,
        "eT": et.value,
        "eT_used_fallback": et.used_fallback,
    });
    if let Some(v) = et2 {
        out["eT2"] = serde_json::json!(v);
    }
    println!("{}", serde_json::to_string_pretty(&out)?);
    Ok(0)
}

fn cmd_simulate(args: &Args) -> Result<i32, CliError> {
    let (env, _) = load_env(args.get("env")?)?;
    let start = args.i64_val("start")?;
    let steps = args.u64_like("steps")?;
    let replicas = args.u64_like("replicas")?;
    let seed = args.u64_like("seed")?;
    let record = match args.opt("record").unwrap_or("endpoints") {
        "full" | "trajectory" => RecordMode::FullTrajectory,
        "endpoints" | "endpoint" => RecordMode::EndpointOnly,
        "hits" | "hitting" => RecordMode::HittingTimesOnly,
        other => return Err(format!("unknown record mode '{other}'").into()),
    };
    let targets: Vec<i64> = match args.opt("targets") {
        Some(list) => list
            .split(',')
            .map(|t| t.parse::<i64>())
            .collect::<Result<_, _>>()?,
        None => Vec::new(),
    };

    // Grow the window so every replica fits; deterministic regardless.
    let mut margin = start.abs() + 4 * (steps as f64).sqrt() as i64 + 64;
    let rows = loop {
        let walk_env = if env.is_unbounded() { env.clone() } else { env.extended(-margin, margin)? };
        let runs: Vec<_> = (0..replicas)
            .map(|idx| {
                let cfg = WalkerConfig {
                    start,
                    max_steps: steps,
                    seed: mix2(seed, idx),
                    record,
                    targets: targets.clone(),
                };
                simulate(&walk_env, &cfg)
            })
            .collect();
        if runs.iter().any(|r| matches!(r, Err(sinai::walk::WalkError::WindowExhausted(_)))) {
            margin *= 2;
            continue;
        }
        break runs.into_iter().collect::<Result<Vec<_>, _>>()?;
    };

    let mut csv = String::from("replica,endpoint,steps");
    for t in &targets {
        csv.push_str(&format!(",hit_{t},censored_{t}"));
    }
    csv.push('\n');
    for (idx, stats) in rows.iter().enumerate() {
        let mut fields =
            vec![idx.to_string(), stats.endpoint.to_string(), stats.steps.to_string()];
        for (_, hit) in &stats.hits {
            match hit {
                Some(t) => {
                    fields.push(t.to_string());
                    fields.push("false".into());
                }
                None => {
                    fields.push(String::new());
                    fields.push("true".into());
                }
            }
        }
        csv.push_str(&fields.join(","));
        csv.push('\n');
    }
    match args.opt("out") {
        Some(path) => write_out(path, &csv)?,
        None => print!("{csv}"),
    }
    Ok(0)
}

fn cmd_experiment(argv: &[String]) -> Result<i32, CliError> {
    let Some(kind_str) = argv.first() else {
        return Err("experiment kind required (containment|localization|subdiff|tails|goodenv-scan)".into());
    };
    let kind: ExperimentKind = kind_str.parse()?;
    let args = Args::parse(&argv[1..])?;
    let mut cfg: ExperimentConfig =
        serde_json::from_str(&fs::read_to_string(args.get("config")?)?)?;
    if let Some(k) = args.opt("threads") {
        cfg.workers = Some(k.parse()?);
    }
    if args.has_flag("plot") {
        cfg.plot = true;
    }
    let _ = effective_workers(cfg.workers);
    let out = run_experiment(kind, &cfg)?;
    let dir = args.opt("out").unwrap_or(".");
    fs::create_dir_all(dir)?;
    let base = Path::new(dir).join(out.kind.name());
    fs::write(base.with_extension("csv"), &out.csv)?;
    fs::write(base.with_extension("meta.json"), &out.meta_json)?;
    if let Some(plot) = &out.plot {
        fs::write(base.with_extension("dat"), plot)?;
    }
    eprintln!(
        "{}: wrote {} rows, {} violation(s)",
        out.kind.name(),
        out.csv.lines().count().saturating_sub(1),
        out.violations
    );
    Ok(if out.violations > 0 { 2 } else { 0 })
}
