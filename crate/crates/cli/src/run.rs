use std::path::PathBuf;

use clap::{Parser, Subcommand};
use serde_json::{json, Value};

use csl_core::arithmetic::{beta_estimate, cf_expand, IrrationalSpec};
use csl_core::localization::{eigenpairs_csv, eigenvectors_binary, localization_study};
use csl_core::operators::eigenvalue_curves;
use csl_core::spectral::{
    estimates_csv, ids, ldt_sweep, lyapunov, lyapunov_lower_bound, thouless_from, DensityHistogram,
};

use crate::config::ExperimentConfig;
use crate::output::RunDir;
use crate::verify::{known_ids, run_verify};
use crate::{CliError, CliResult};

#[derive(Debug, Parser)]
#[command(name = "csl", version, about = "Quasi-periodic Schrödinger operators over circle maps")]
pub struct Cli {
    /// JSON experiment config; built-in defaults otherwise.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Run directory.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    #[arg(long, global = true)]
    pub threads: Option<usize>,
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Continued-fraction digits and convergents.
    Cf {
        /// `golden`, `silver`, a decimal such as `0.4142`, or a JSON spec.
        #[arg(long)]
        alpha: Option<String>,
        #[arg(long, default_value_t = 20)]
        depth: usize,
    },
    /// Dynamical partitions and gap statistics at every scale.
    Orbit {
        #[arg(long, default_value_t = 0.0)]
        base: f64,
    },
    /// Periodic eigenvalue curves and their bounds.
    Curves,
    /// Lyapunov exponent over the energy grid.
    Lyapunov {
        #[arg(long)]
        n: Vec<usize>,
    },
    /// Integrated density of states over the energy grid.
    Ids {
        #[arg(long)]
        n: Vec<usize>,
    },
    /// Lyapunov exponent against the log-potential of the density of states.
    Thouless {
        #[arg(long)]
        n: Option<usize>,
        #[arg(long, default_value_t = 4096)]
        bins: usize,
    },
    /// Large-deviation sets of the box determinants.
    Ldt,
    /// Eigenfunction decay study on one box.
    Eigfunc {
        /// Also write the raw eigenvectors.
        #[arg(long)]
        vectors: bool,
    },
    /// Runs the verification suite.
    Verify {
        #[arg(long)]
        check: Option<String>,
    },
    /// Prints the default config.
    Config,
}

impl Command {
    pub fn name(&self) -> &'static str {
        match self {
            Command::Cf { .. } => "cf",
            Command::Orbit { .. } => "orbit",
            Command::Curves => "curves",
            Command::Lyapunov { .. } => "lyapunov",
            Command::Ids { .. } => "ids",
            Command::Thouless { .. } => "thouless",
            Command::Ldt => "ldt",
            Command::Eigfunc { .. } => "eigfunc",
            Command::Verify { .. } => "verify",
            Command::Config => "config",
        }
    }
}

/// What a finished command reports on stdout.
#[derive(Debug, Clone)]
pub struct Outcome {
    pub run_dir: Option<PathBuf>,
    pub pass: bool,
    pub summary: Value,
}

impl Outcome {
    pub fn to_json(&self) -> String {
        json!({
            "run_dir": self.run_dir.as_ref().map(|p| p.display().to_string()),
            "pass": self.pass,
            "summary": self.summary,
        })
        .to_string()
    }
}

pub fn load_config(cli: &Cli) -> CliResult<ExperimentConfig> {
    let mut cfg = match &cli.config {
        Some(path) => {
            let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
            ExperimentConfig::from_json(&text).map_err(|e| CliError::InvalidConfig(e.to_string()))?
        }
        None => ExperimentConfig::default(),
    };
    if let Some(seed) = cli.seed {
        cfg.seed = seed;
    }
    Ok(cfg)
}

pub fn parse_alpha(s: &str) -> CliResult<IrrationalSpec> {
    match s {
        "golden" => Ok(IrrationalSpec::golden()),
        "silver" => Ok(IrrationalSpec::silver()),
        s if s.trim_start().starts_with('{') => {
            serde_json::from_str(s).map_err(|e| CliError::Usage(format!("alpha spec: {e}")))
        }
        s if s.parse::<f64>().is_ok() => Ok(IrrationalSpec::decimal(s)),
        s => Err(CliError::Usage(format!("cannot read {s:?} as an irrational"))),
    }
}

/// Runs one command on a thread pool of the requested size.
pub fn run(cli: &Cli) -> CliResult<Outcome> {
    let mut pool = rayon::ThreadPoolBuilder::new();
    if let Some(t) = cli.threads {
        if t == 0 {
            return Err(CliError::Usage("--threads must be positive".into()));
        }
        pool = pool.num_threads(t);
    }
    let pool = pool
        .build()
        .map_err(|e| CliError::Usage(format!("thread pool: {e}")))?;
    pool.install(|| dispatch(cli))
}

fn dispatch(cli: &Cli) -> CliResult<Outcome> {
    let cfg = load_config(cli)?;
    if let Command::Config = cli.command {
        print!("{}", cfg.to_json());
        return Ok(Outcome {
            run_dir: None,
            pass: true,
            summary: Value::Null,
        });
    }
    if let Command::Verify { check: Some(id) } = &cli.command {
        if !known_ids().contains(&id.as_str()) {
            return Err(CliError::UnknownCheck(id.clone()));
        }
    }
    let name = cli.command.name();
    let root = cli
        .out
        .clone()
        .or_else(|| cfg.output.as_ref().map(PathBuf::from))
        .unwrap_or_else(|| PathBuf::from("runs").join(name));
    let mut dir = RunDir::create(root, name, cfg.seed)?;
    dir.write("config.json", cfg.to_json())?;
    let (pass, report) = match &cli.command {
        Command::Cf { alpha, depth } => cf(&cfg, alpha.as_deref(), *depth, &mut dir)?,
        Command::Orbit { base } => orbit(&cfg, *base, &mut dir)?,
        Command::Curves => curves(&cfg, &mut dir)?,
        Command::Lyapunov { n } => lyapunov_grid(&cfg, n, &mut dir)?,
        Command::Ids { n } => ids_grid(&cfg, n, &mut dir)?,
        Command::Thouless { n, bins } => thouless(&cfg, *n, *bins, &mut dir)?,
        Command::Ldt => ldt(&cfg, &mut dir)?,
        Command::Eigfunc { vectors } => eigfunc(&cfg, *vectors, &mut dir)?,
        Command::Verify { check } => {
            let r = run_verify(&cfg, check.as_deref())?;
            (r.all_passed(), serde_json::to_value(&r).expect("report serializes"))
        }
        Command::Config => unreachable!(),
    };
    dir.lap(name);
    dir.write_json("report.json", &report)?;
    let summary = report.get("summary").cloned().unwrap_or(Value::Null);
    let run_dir = dir.finish()?;
    Ok(Outcome {
        run_dir: Some(run_dir),
        pass,
        summary,
    })
}

type Step = CliResult<(bool, Value)>;

fn cf(cfg: &ExperimentConfig, alpha: Option<&str>, depth: usize, dir: &mut RunDir) -> Step {
    let spec = match alpha {
        Some(s) => parse_alpha(s)?,
        None => cfg.alpha.clone(),
    };
    let cf = cf_expand(&spec, depth)?;
    let mut csv = String::from("k,a_k,p_k,q_k\n");
    for k in 1..=cf.depth() {
        csv.push_str(&format!("{k},{},{},{}\n", cf.digit(k), cf.p(k), cf.q(k)));
    }
    dir.write("cf.csv", csv)?;
    let beta = beta_estimate(&cf, 1).ok();
    Ok((
        true,
        json!({ "alpha": spec, "depth": cf.depth(), "digits": cf.digits(), "beta_proxy": beta }),
    ))
}

fn orbit(cfg: &ExperimentConfig, base: f64, dir: &mut RunDir) -> Step {
    let map = cfg.circle_map()?;
    let mut pass = true;
    let mut levels = Vec::new();
    for &k in &cfg.scales {
        let part = map.dynamical_partition(base, k)?;
        let gaps = map.gap_statistics(base, k)?;
        dir.write(&format!("partition_k{k}.csv"), part.to_csv())?;
        pass &= gaps.counts_ok && gaps.bounds_ok && part.covers_circle();
        levels.push(json!({
            "k": k,
            "q": part.q_k,
            "short_arcs": part.short_count(),
            "long_arcs": part.long_count(),
            "covers_circle": part.covers_circle(),
            "mass_identity_residual": part.mass_identity_residual(),
            "gaps": gaps,
        }));
    }
    Ok((pass, json!({ "base": base, "levels": levels })))
}

fn curves(cfg: &ExperimentConfig, dir: &mut RunDir) -> Step {
    let model = cfg.model()?;
    let mut pass = true;
    let mut levels = Vec::new();
    for &k in &cfg.scales {
        let c = eigenvalue_curves(&model, k, cfg.curves.grid)?;
        let checks = c.check(&model, cfg.curves.horizontal_bases)?;
        dir.write(&format!("curves_q{}.csv", c.q), c.to_csv())?;
        pass &= checks.all_passed();
        levels.push(json!({ "k": k, "checks": checks }));
    }
    Ok((pass, json!({ "lambda": cfg.lambda, "levels": levels })))
}

fn sizes(cfg: &ExperimentConfig, n: &[usize]) -> Vec<usize> {
    if n.is_empty() {
        cfg.sizes.clone()
    } else {
        n.to_vec()
    }
}

fn lyapunov_grid(cfg: &ExperimentConfig, n: &[usize], dir: &mut RunDir) -> Step {
    let model = cfg.model()?;
    let bound = lyapunov_lower_bound(&model);
    let mut rows = Vec::new();
    for n in sizes(cfg, n) {
        for e in cfg.energies.values() {
            let l = lyapunov(&model, e, n, cfg.samples)?;
            rows.push((e, n, cfg.samples, l.value, l.stderr));
        }
    }
    dir.write("lyapunov.csv", estimates_csv(rows.iter().copied()))?;
    // The lower bound only concerns energies in the spectrum hull.
    let (lo, hi) = model.spectrum_hull();
    let below = rows
        .iter()
        .filter(|r| r.0 >= lo && r.0 <= hi && r.3 + 3.0 * r.4 < bound)
        .count();
    Ok((below == 0, json!({ "lower_bound": bound, "below_bound": below, "rows": rows.len() })))
}

fn ids_grid(cfg: &ExperimentConfig, n: &[usize], dir: &mut RunDir) -> Step {
    let model = cfg.model()?;
    let mut rows = Vec::new();
    for n in sizes(cfg, n) {
        for e in cfg.energies.values() {
            let r = ids(&model, e, n, cfg.samples)?;
            rows.push((e, n, cfg.samples, r.value, r.stderr));
        }
    }
    dir.write("ids.csv", estimates_csv(rows.iter().copied()))?;
    let monotone = rows.windows(2).all(|w| w[0].1 != w[1].1 || w[1].3 >= w[0].3);
    Ok((monotone, json!({ "rows": rows.len(), "monotone": monotone })))
}

fn thouless(cfg: &ExperimentConfig, n: Option<usize>, bins: usize, dir: &mut RunDir) -> Step {
    let model = cfg.model()?;
    let n = n.unwrap_or(cfg.sizes[0]);
    let hist = DensityHistogram::pooled(&model, n, cfg.samples, bins)?;
    let mut csv = String::from("E,lyapunov,lyapunov_stderr,log_potential,gap\n");
    let mut worst = 0.0f64;
    for e in cfg.energies.values() {
        let t = thouless_from(&hist, &lyapunov(&model, e, n, cfg.samples)?)?;
        worst = worst.max(t.gap);
        csv.push_str(&format!(
            "{:.17e},{:.17e},{:.17e},{:.17e},{:.17e}\n",
            t.energy, t.lhs, t.lhs_stderr, t.rhs, t.gap
        ));
    }
    dir.write("thouless.csv", csv)?;
    dir.write("staircase.csv", hist.staircase_csv())?;
    let tol = cfg.tolerances.thouless_gap;
    Ok((worst <= tol, json!({ "n": n, "bins": bins, "worst_gap": worst, "tolerance": tol })))
}

fn ldt(cfg: &ExperimentConfig, dir: &mut RunDir) -> Step {
    let model = cfg.model()?;
    let e = cfg.ldt.energy.unwrap_or_else(|| {
        let (lo, hi) = model.spectrum_hull();
        0.5 * (lo + hi)
    });
    let lhat = lyapunov(&model, e, cfg.verify.lyapunov_n, cfg.samples)?.value;
    let delta = cfg.ldt.delta.unwrap_or(lhat / 2.0);
    let sweep = ldt_sweep(&model, e, &cfg.ldt.levels, delta, lhat, cfg.ldt.cells_per_q, cfg.ldt.c0)?;
    dir.write("ldt.csv", sweep.to_csv())?;
    dir.write_json("ldt.json", &sweep)?;
    let components_ok = sweep.reports.iter().all(|r| r.components_ok);
    Ok((
        components_ok && sweep.decreasing,
        json!({
            "E": e,
            "lyapunov": lhat,
            "delta": delta,
            "decay_rate": sweep.decay_rate,
            "decreasing": sweep.decreasing,
            "components_ok": components_ok,
        }),
    ))
}

fn eigfunc(cfg: &ExperimentConfig, vectors: bool, dir: &mut RunDir) -> Step {
    let model = cfg.model()?;
    let study = localization_study(&model, &cfg.localization, cfg.seed)?;
    dir.write("eigenpairs.csv", eigenpairs_csv(&study.pairs))?;
    for (j, p) in study.pairs.iter().enumerate() {
        dir.write(&format!("decay_{j:03}.csv"), p.decay_csv())?;
    }
    if vectors {
        dir.write("eigenvectors.bin", eigenvectors_binary(&study.pairs))?;
    }
    let pass = study.envelope.localized && study.envelope.violations.is_empty();
    Ok((pass, serde_json::to_value(&study).expect("study serializes")))
}
