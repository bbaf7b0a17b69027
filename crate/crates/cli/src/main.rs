use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Parser, Subcommand, ValueEnum};

use bestarm_core::bench::{
    append_reports, generate_instances, harness_config, parse_counts, parse_params, run_trial,
    run_trials, Algo, InstanceKind, TrialConfig, DELTA_GRID,
};
use bestarm_core::signxi::{measure_loss_profile, RealArmSlot};
use bestarm_core::solvers::{ComplexityGuessing, SolverConfig};
use bestarm_core::{profile, Answer, Instance, RewardFamily, DEFAULT_BUDGET};

#[derive(Parser)]
#[command(
    name = "bestarm",
    version,
    about = "Gap-entropy best-arm identification harness"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum Family {
    Gaussian,
    Deterministic,
}

impl From<Family> for RewardFamily {
    fn from(f: Family) -> Self {
        match f {
            Family::Gaussian => RewardFamily::Gaussian,
            Family::Deterministic => RewardFamily::Deterministic,
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum Kind {
    TwoArm,
    DiscreteRandom,
    EqualHVaryingEnt,
}

#[derive(Subcommand)]
enum Command {
    /// Print the gap profile of an instance and its conjectured bound.
    Stats {
        #[arg(long)]
        instance: PathBuf,
        #[arg(long, default_value_t = 0.01)]
        delta: f64,
    },
    /// Run one seeded trial and print the outcome as JSON.
    Run {
        #[arg(long)]
        instance: PathBuf,
        #[arg(long)]
        algo: String,
        #[arg(long)]
        delta: f64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = DEFAULT_BUDGET)]
        budget: u64,
        /// Emit per-round and per-primitive events as JSON lines first.
        #[arg(long)]
        trace: bool,
        #[arg(long, value_enum, default_value = "gaussian")]
        family: Family,
    },
    /// Run seeded trials on every instance in a directory and append CSV rows.
    Bench {
        #[arg(long)]
        algo: String,
        #[arg(long)]
        instances: PathBuf,
        /// Repeatable; defaults to the grid 0.1, 0.05, 0.01.
        #[arg(long)]
        delta: Vec<f64>,
        #[arg(long, default_value_t = 100)]
        trials: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value_t = DEFAULT_BUDGET)]
        budget: u64,
    },
    /// Measure the SIGN-xi loss profile for uniform P over gaps 2^-1..2^-m.
    Signxi {
        #[arg(long)]
        m: usize,
        #[arg(long)]
        delta: f64,
        #[arg(long, default_value_t = 30)]
        trials: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
    },
    /// Generate instance files.
    Gen {
        #[arg(long, value_enum)]
        kind: Kind,
        /// `key=value;...`, e.g. `gap=0.5`, `counts=1:2,3:1`, `count=10;k_max=3`.
        #[arg(long, default_value = "")]
        params: String,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
    },
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) if !e.use_stderr() => {
            let _ = e.print();
            return ExitCode::SUCCESS;
        }
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(1);
        }
    };
    match execute(cli.command) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}

fn execute(command: Command) -> Result<ExitCode> {
    match command {
        Command::Stats { instance, delta } => stats(&instance, delta),
        Command::Run {
            instance,
            algo,
            delta,
            seed,
            budget,
            trace,
            family,
        } => run(&instance, &algo, delta, seed, budget, trace, family),
        Command::Bench {
            algo,
            instances,
            delta,
            trials,
            seed,
            out,
            budget,
        } => bench(&algo, &instances, &delta, trials, seed, &out, budget),
        Command::Signxi {
            m,
            delta,
            trials,
            seed,
            out,
        } => signxi(m, delta, trials, seed, &out),
        Command::Gen {
            kind,
            params,
            seed,
            out,
        } => gen(kind, &params, seed, &out),
    }
}

fn stats(path: &Path, delta: f64) -> Result<ExitCode> {
    let inst = Instance::load(path)?;
    let p = profile(&inst);
    println!("instance  {}", p.id);
    println!("arms      {}", p.n);
    println!("best      {}", p.best.0);
    println!("H         {}", p.h);
    println!("Ent       {}", p.ent);
    println!("r_max     {}", p.r_max);
    for (k, g) in &p.groups {
        println!(
            "group {k:<3} members {:<4} H_k {:<12} p_k {}",
            g.members.len(),
            g.h_k,
            g.p_k
        );
    }
    println!("bound     {}", p.conjectured_bound(delta)?);
    Ok(ExitCode::SUCCESS)
}

fn run(
    path: &Path,
    algo: &str,
    delta: f64,
    seed: u64,
    budget: u64,
    trace: bool,
    family: Family,
) -> Result<ExitCode> {
    let inst = Instance::load(path)?;
    let algo: Algo = algo.parse()?;
    let mut config = harness_config(delta);
    config.trace = trace;
    let solver = algo.solver(&inst, config);
    let cfg = TrialConfig {
        family: family.into(),
        budget,
    };
    let out = run_trial(solver.as_ref(), &inst, delta, seed, cfg)?;
    for event in &out.trace {
        println!("{}", serde_json::to_string(event)?);
    }
    println!("{}", serde_json::to_string(&out)?);
    Ok(if out.answer == Answer::BudgetExceeded {
        ExitCode::from(2)
    } else {
        ExitCode::SUCCESS
    })
}

fn bench(
    algo: &str,
    dir: &Path,
    deltas: &[f64],
    trials: usize,
    seed: u64,
    out: &Path,
    budget: u64,
) -> Result<ExitCode> {
    let algo: Algo = algo.parse()?;
    let mut files: Vec<PathBuf> = fs::read_dir(dir)
        .with_context(|| format!("reading {}", dir.display()))?
        .map(|e| e.map(|e| e.path()))
        .collect::<std::io::Result<_>>()?;
    files.retain(|p| p.is_file());
    files.sort();
    if files.is_empty() {
        bail!("no instance files in {}", dir.display());
    }
    let deltas = if deltas.is_empty() {
        &DELTA_GRID[..]
    } else {
        deltas
    };
    let cfg = TrialConfig {
        family: RewardFamily::Gaussian,
        budget,
    };
    for file in &files {
        let inst = Instance::load(file)?;
        for &delta in deltas {
            let report = run_trials(algo, &inst, delta, trials, seed, cfg)?;
            eprintln!(
                "{} {} delta={} error={} mean_samples={:.4e} ratio={:.4e}",
                report.algorithm,
                report.instance,
                delta,
                report.empirical_error,
                report.mean_samples,
                report.ratio
            );
            append_reports(out, &[report])?;
        }
    }
    Ok(ExitCode::SUCCESS)
}

fn signxi(m: usize, delta: f64, trials: usize, seed: u64, out: &Path) -> Result<ExitCode> {
    if m == 0 {
        bail!("m must be at least 1");
    }
    let pk = vec![1.0 / m as f64; m];
    let solver = ComplexityGuessing::new(SolverConfig::default().relaxed());
    let prof = measure_loss_profile(&solver, &pk, delta, trials, seed, RealArmSlot::First)?;
    prof.write_csv(out)?;
    eprintln!(
        "expected_loss={:.4e} ent_P={:.4} ln(1/delta)={:.4}{}",
        prof.expected_loss,
        prof.ent_p,
        prof.ln_inv_delta(),
        if prof.partial { " (partial)" } else { "" }
    );
    Ok(ExitCode::SUCCESS)
}

fn gen(kind: Kind, params: &str, seed: u64, out: &Path) -> Result<ExitCode> {
    let params = parse_params(params)?;
    let known: &[&str] = match kind {
        Kind::TwoArm => &["gap", "top"],
        Kind::DiscreteRandom => &["count", "k_max", "max_per_group", "counts", "top"],
        Kind::EqualHVaryingEnt => &["h", "k_max", "max_count"],
    };
    if let Some(k) = params.keys().find(|k| !known.contains(&k.as_str())) {
        bail!("unknown parameter {k:?}; expected one of {known:?}");
    }
    let num = |key: &str, default: f64| -> Result<f64> {
        params
            .get(key)
            .map(|v| v.parse().with_context(|| format!("parameter {key}={v:?}")))
            .unwrap_or(Ok(default))
    };
    let int = |key: &str, default: usize| -> Result<usize> {
        params
            .get(key)
            .map(|v| v.parse().with_context(|| format!("parameter {key}={v:?}")))
            .unwrap_or(Ok(default))
    };
    let kind = match kind {
        Kind::TwoArm => InstanceKind::TwoArm {
            gap: num("gap", 0.5)?,
            top_mean: num("top", 1.0)?,
        },
        Kind::DiscreteRandom => InstanceKind::DiscreteRandom {
            count: int("count", 10)?,
            k_max: int("k_max", 3)? as u32,
            max_per_group: int("max_per_group", 3)?,
            counts: params.get("counts").map(|c| parse_counts(c)).transpose()?,
            top_mean: num("top", 1.0)?,
        },
        Kind::EqualHVaryingEnt => InstanceKind::EqualHVaryingEnt {
            target_h: num("h", 32.0)?,
            k_max: int("k_max", 3)? as u32,
            max_count: int("max_count", 8)?,
        },
    };
    let instances = generate_instances(&kind, seed)?;
    fs::create_dir_all(out)?;
    for inst in &instances {
        let path = out.join(format!("{}.txt", inst.id()));
        inst.save(&path)?;
        println!("{}", path.display());
    }
    Ok(ExitCode::SUCCESS)
}
