//! Command-line front end.
//!
//! Exit codes: 0 success, 2 invalid input, 3 degenerate data, 4 an estimate
//! that did not converge (the best-effort result is still written).

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::sync::Arc;
use std::time::Instant;

use anyhow::{anyhow, Context};
use clap::{Parser, Subcommand};

use crate::config::RunConfig;
use crate::crn::CrnPool;
use crate::error::Error;
use crate::estimator::{abc_rejection, estimate_msm, EstimationResult};
use crate::io::{fmt_float, FieldFile};
use crate::lattice::{Lattice, LatticeKind};
use crate::moments::{
    confined_cross_colour_moment, confined_cross_colour_series, confined_first_moment,
    confined_first_moment_series, confined_pair_moment, empirical_moments,
};
use crate::percolation::{round_half_up, ModelVariant, SamplingMethod};
use crate::studies::{
    alpha_comparison, convergence_csv, convergence_study, generate_dataset, identifiability_scan,
    relative_bias_vector, report_csv, run_table_experiment, scan_csv, scan_svg, ScanSpec,
};

pub const EXIT_INVALID: u8 = 2;
pub const EXIT_DEGENERATE: u8 = 3;
pub const EXIT_NOT_CONVERGED: u8 = 4;

#[derive(Debug, Parser)]
#[command(name = "cperc", version, about = "Coloured bond percolation: simulation and moment-based estimation")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, clap::Args)]
pub struct Common {
    /// Run configuration (TOML).
    #[arg(long)]
    pub config: PathBuf,
    /// Overrides the seed given in the config.
    #[arg(long)]
    pub seed: Option<u64>,
    /// Sampling method, 1 (Bernoulli) or 2 (fixed count).
    #[arg(long, value_parser = clap::value_parser!(u8).range(1..=2))]
    pub method: Option<u8>,
    /// Output directory; defaults to `[output] dir`, then the current directory.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Generate a synthetic field from `[model]`.
    Simulate {
        #[command(flatten)]
        common: Common,
    },
    /// Estimate the parameters of a field file.
    Estimate {
        #[command(flatten)]
        common: Common,
        /// Field file to estimate from.
        #[arg(long)]
        field: PathBuf,
    },
    /// ABC rejection sampling for a field file.
    Abc {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        field: PathBuf,
        #[arg(long)]
        epsilon: Option<f64>,
        #[arg(long)]
        draws: Option<usize>,
    },
    /// Print moment values for given parameters.
    Moments {
        #[arg(long)]
        lambda: f64,
        #[arg(long)]
        mu: f64,
        /// Second colour's seed probability, for the cross-colour moment.
        #[arg(long)]
        lambda2: Option<f64>,
        #[arg(long, default_value = "confined")]
        variant: String,
        #[arg(long, default_value = "triangular")]
        kind: String,
        /// Vertex degree for the closed forms; defaults to the interior degree.
        #[arg(long)]
        degree: Option<usize>,
        /// Seed for the simulated percolation moments.
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Run the study named in `[study]`.
    Study {
        #[command(flatten)]
        common: Common,
    },
}

/// What a successful command wants reported through the exit status.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Outcome {
    Done,
    NotConverged,
}

impl Outcome {
    pub fn code(self) -> u8 {
        match self {
            Outcome::Done => 0,
            Outcome::NotConverged => EXIT_NOT_CONVERGED,
        }
    }
}

/// Exit status for a failed command.
pub fn error_code(err: &anyhow::Error) -> u8 {
    match err.downcast_ref::<Error>() {
        Some(Error::DegenerateData(_)) => EXIT_DEGENERATE,
        _ => EXIT_INVALID,
    }
}

struct Loaded {
    cfg: RunConfig,
    out: PathBuf,
    seed: Option<u64>,
    method: Option<SamplingMethod>,
}

fn load(common: &Common) -> anyhow::Result<Loaded> {
    let text = fs::read_to_string(&common.config)
        .with_context(|| format!("reading {}", common.config.display()))?;
    let cfg = RunConfig::parse(&text)?;
    let out = common
        .out
        .clone()
        .or_else(|| cfg.output.as_ref().and_then(|o| o.dir.clone()).map(PathBuf::from))
        .unwrap_or_else(|| PathBuf::from("."));
    let method = common.method.map(SamplingMethod::from_number).transpose()?;
    Ok(Loaded {
        cfg,
        out,
        seed: common.seed,
        method,
    })
}

fn write(dir: &Path, name: &str, contents: &str) -> anyhow::Result<PathBuf> {
    fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    let path = dir.join(name);
    fs::write(&path, contents).with_context(|| format!("writing {}", path.display()))?;
    Ok(path)
}

fn read_field(path: &Path) -> anyhow::Result<FieldFile> {
    let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    FieldFile::parse(&text).map_err(|e| anyhow::Error::new(e).context(format!("parsing {}", path.display())))
}

fn floats(xs: &[f64]) -> String {
    xs.iter().map(|&x| fmt_float(x)).collect::<Vec<_>>().join(" ")
}

pub fn run(cli: Cli) -> anyhow::Result<Outcome> {
    let started = Instant::now();
    let outcome = match cli.command {
        Command::Simulate { common } => simulate(&load(&common)?),
        Command::Estimate { common, field } => estimate(&load(&common)?, &field),
        Command::Abc {
            common,
            field,
            epsilon,
            draws,
        } => abc(&load(&common)?, &field, epsilon, draws),
        Command::Moments {
            lambda,
            mu,
            lambda2,
            variant,
            kind,
            degree,
            seed,
        } => {
            print!("{}", moments_report(lambda, mu, lambda2, &variant, &kind, degree, seed)?);
            Ok(Outcome::Done)
        }
        Command::Study { common } => study(&load(&common)?),
    }?;
    eprintln!("wall time {:.2} s", started.elapsed().as_secs_f64());
    Ok(outcome)
}

fn simulate(ld: &Loaded) -> anyhow::Result<Outcome> {
    let theta = ld.cfg.theta()?.ok_or_else(|| anyhow!("simulate needs a [model] section"))?;
    let seed = ld.seed.unwrap_or(ld.cfg.model.as_ref().map_or(0, |m| m.seed));
    let variant = ld.cfg.variant()?;
    let lat = Arc::new(ld.cfg.lattice()?);
    let method = ld.method.unwrap_or(SamplingMethod::Bernoulli);
    let n = lat.n_vertices() as f64;
    let slots = variant.edge_slots(&lat) as f64;
    let (field, seed_freq, open_freq) = match method {
        SamplingMethod::Bernoulli => {
            let d = generate_dataset(Arc::clone(&lat), &theta, seed, variant)?;
            (d.field, d.seed_freq, d.open_freq)
        }
        SamplingMethod::FixedCount => {
            let pool = CrnPool::new(Arc::clone(&lat), theta.n_colours(), 1, method, variant, seed)?;
            let sf = theta.lambdas.iter().map(|&l| round_half_up(l * n) as f64 / n).collect();
            let of = if slots == 0.0 { 0.0 } else { round_half_up(theta.mu * slots) as f64 / slots };
            (pool.field(0, &theta)?, sf, of)
        }
    };
    let ybar = empirical_moments(&field).map(|m| m.ybar).unwrap_or_else(|_| {
        (0..field.n_colours).map(|l| field.colour_count(l) as f64 / n).collect()
    });
    let file = FieldFile {
        field,
        theta: Some(theta.clone()),
        seed: Some(seed),
        method: Some(method),
    };
    let path = write(&ld.out, "field.txt", &file.render())?;
    let mut rep = String::new();
    writeln!(rep, "# synthetic field {}", path.display())?;
    writeln!(rep, "lattice {} {} {}", lat.kind(), lat.rows(), lat.cols())?;
    writeln!(rep, "variant {variant}")?;
    writeln!(rep, "method {method}")?;
    writeln!(rep, "seed {seed}")?;
    writeln!(rep, "theta {}", floats(&theta.to_flat()))?;
    writeln!(rep, "seed_frequency {}", floats(&seed_freq))?;
    writeln!(rep, "observed_frequency {}", floats(&ybar))?;
    writeln!(rep, "open_edge_frequency {}", fmt_float(open_freq))?;
    write(&ld.out, "field_report.txt", &rep)?;
    println!("wrote {}", path.display());
    Ok(Outcome::Done)
}

fn estimate_text(field_path: &Path, file: &FieldFile, results: &[EstimationResult]) -> String {
    let lat = &file.field.lattice;
    let mut out = String::new();
    let w = &mut out;
    writeln!(w, "# estimation result").unwrap();
    writeln!(w, "field {}", field_path.display()).unwrap();
    writeln!(w, "lattice {} {} {}", lat.kind(), lat.rows(), lat.cols()).unwrap();
    writeln!(w, "colours {}", file.field.n_colours).unwrap();
    if let Some(r) = results.first() {
        writeln!(w, "data_ybar {}", floats(&r.data_moments.ybar)).unwrap();
        writeln!(w, "data_zbar {}", floats(&r.data_moments.zbar)).unwrap();
    }
    if let Some(t) = &file.theta {
        writeln!(w, "theta0 {}", floats(&t.to_flat())).unwrap();
    }
    for r in results {
        let c = &r.config;
        writeln!(w).unwrap();
        writeln!(w, "[method {}]", c.method).unwrap();
        writeln!(
            w,
            "config n_s={} n_opt={} mu_max={} master_seed={} variant={} x_tol={} f_tol={} max_evals_per_dim={}",
            c.n_s,
            c.n_opt,
            fmt_float(c.mu_max),
            c.master_seed,
            c.variant,
            fmt_float(c.tolerances.x_tol),
            fmt_float(c.tolerances.f_tol),
            c.tolerances.max_evals_per_dim
        )
        .unwrap();
        writeln!(w, "theta_hat {}", floats(&r.theta_hat.to_flat())).unwrap();
        writeln!(w, "alpha {}", fmt_float(r.alpha)).unwrap();
        if let Some(t) = &file.theta {
            writeln!(w, "relative_bias_percent {}", floats(&relative_bias_vector(&r.theta_hat, t))).unwrap();
        }
        writeln!(w, "converged {}", r.converged()).unwrap();
        writeln!(w, "pool_checksum {:016x}", r.pool_checksum).unwrap();
        for (k, s) in r.starts.iter().enumerate() {
            writeln!(
                w,
                "start {} initial {} final {} alpha {} evals {} converged {}",
                k + 1,
                floats(&s.initial.to_flat()),
                floats(&s.theta.to_flat()),
                fmt_float(s.alpha),
                s.evals,
                s.converged
            )
            .unwrap();
        }
    }
    out
}

fn estimate(ld: &Loaded, field_path: &Path) -> anyhow::Result<Outcome> {
    let file = read_field(field_path)?;
    let methods = match ld.method {
        Some(m) => vec![m],
        None => ld.cfg.methods()?,
    };
    let mut results = Vec::new();
    for m in methods {
        let mut cfg = ld.cfg.estimation(m)?;
        if let Some(s) = ld.seed {
            cfg.master_seed = s;
        }
        results.push(estimate_msm(&file.field, &cfg)?);
    }
    let path = write(&ld.out, "estimate.txt", &estimate_text(field_path, &file, &results))?;
    for r in &results {
        println!(
            "method {}: theta_hat {} alpha {:.4e}{}",
            r.config.method,
            r.theta_hat,
            r.alpha,
            if r.converged() { "" } else { " (not converged)" }
        );
    }
    println!("wrote {}", path.display());
    Ok(if results.iter().all(EstimationResult::converged) {
        Outcome::Done
    } else {
        Outcome::NotConverged
    })
}

fn abc(ld: &Loaded, field_path: &Path, epsilon: Option<f64>, draws: Option<usize>) -> anyhow::Result<Outcome> {
    let file = read_field(field_path)?;
    let section = ld.cfg.abc.as_ref();
    let epsilon = epsilon
        .or(section.and_then(|a| a.epsilon))
        .ok_or_else(|| anyhow!("no epsilon given (--epsilon or [abc] epsilon)"))?;
    let n_draws = draws
        .or(section.and_then(|a| a.draws))
        .ok_or_else(|| anyhow!("no draw count given (--draws or [abc] draws)"))?;
    let seed = ld.seed.unwrap_or(section.map_or(0, |a| a.seed));
    let prior = ld.cfg.prior(&file.field.lattice)?;
    let variant = ld.cfg.variant()?;
    let res = abc_rejection(&file.field, &prior, epsilon, n_draws, seed, variant)?;

    let nc = file.field.n_colours;
    let mut out = String::new();
    writeln!(out, "# ABC rejection for {}", field_path.display())?;
    writeln!(out, "# prior_lower {}", floats(&prior.lower.to_flat()))?;
    writeln!(out, "# prior_upper {}", floats(&prior.upper.to_flat()))?;
    writeln!(out, "# epsilon {} draws {} seed {} variant {}", fmt_float(epsilon), n_draws, seed, variant)?;
    writeln!(out, "# accepted {} rate {}", res.accepted.len(), fmt_float(res.acceptance_rate()))?;
    let mut header: Vec<String> = (1..=nc).map(|l| format!("lambda{l}")).collect();
    header.push("mu".into());
    header.push("alpha".into());
    writeln!(out, "{}", header.join(","))?;
    for d in &res.accepted {
        let mut v = d.theta.to_flat();
        v.push(d.alpha);
        writeln!(out, "{}", v.iter().map(|&x| fmt_float(x)).collect::<Vec<_>>().join(","))?;
    }
    let path = write(&ld.out, "abc.csv", &out)?;
    println!(
        "accepted {} of {} draws, acceptance rate {}",
        res.accepted.len(),
        n_draws,
        res.acceptance_rate()
    );
    if let Some(mean) = res.posterior_mean() {
        println!("posterior mean {}", mean.iter().map(|x| format!("{x:.6}")).collect::<Vec<_>>().join(" "));
    }
    println!("wrote {}", path.display());
    Ok(Outcome::Done)
}

/// The text printed by the `moments` command.
pub fn moments_report(
    lambda: f64,
    mu: f64,
    lambda2: Option<f64>,
    variant: &str,
    kind: &str,
    degree: Option<usize>,
    seed: u64,
) -> anyhow::Result<String> {
    let variant: ModelVariant = variant.parse()?;
    let kind: LatticeKind = kind.parse()?;
    let deg = degree.unwrap_or(kind.interior_degree());
    let mut out = String::new();
    writeln!(out, "lambda {lambda} mu {mu} variant {variant} lattice {kind} degree {deg}")?;
    match variant {
        ModelVariant::Percolation => {
            let spec = ScanSpec {
                lambdas: vec![lambda],
                mus: vec![mu],
                kind,
                outer: (300, 300),
                central: (100, 100),
                n_s: 5,
                master_seed: seed,
            };
            let p = identifiability_scan(&spec)?;
            writeln!(out, "no closed form; simulated on 300x300, central 100x100, 5 replicates, seed {seed}")?;
            writeln!(out, "first_moment {} (se {})", p[0].m1, p[0].se1)?;
            writeln!(out, "pair_moment {} (se {})", p[0].m2, p[0].se2)?;
        }
        _ => {
            writeln!(out, "first_moment {}", confined_first_moment(lambda, mu, deg)?)?;
            if let Some(l2) = lambda2 {
                writeln!(out, "cross_colour_moment {}", confined_cross_colour_moment(lambda, l2, mu, deg)?)?;
            }
            if kind == LatticeKind::Triangular && deg == 6 {
                let show = |name: &str, v: crate::Result<f64>, out: &mut String| match v {
                    Ok(v) => writeln!(out, "{name} {v}"),
                    Err(e) => writeln!(out, "{name} unavailable: {e}"),
                };
                show("first_moment_series", confined_first_moment_series(lambda, mu), &mut out)?;
                if let Some(l2) = lambda2 {
                    show("cross_colour_series", confined_cross_colour_series(lambda, l2, mu), &mut out)?;
                }
                show("pair_moment_series", confined_pair_moment(lambda, mu), &mut out)?;
            }
        }
    }
    Ok(out)
}

fn study(ld: &Loaded) -> anyhow::Result<Outcome> {
    let st = ld.cfg.study.as_ref().ok_or_else(|| anyhow!("config has no [study] section"))?;
    let seed = ld.seed.unwrap_or(st.seed);
    let lat_cfg = &ld.cfg.lattice;
    let mut written = Vec::new();
    match st.kind.as_str() {
        "table" => {
            let theta = ld.cfg.theta()?.expect("validated");
            let cfg = ld.cfg.estimation(SamplingMethod::Bernoulli)?;
            let rep = run_table_experiment(&theta, lat_cfg.kind, lat_cfg.rows, lat_cfg.cols, &[cfg], seed)?;
            for r in &rep.runs {
                eprintln!("method {} wall time {:.2} s", r.config.method, r.wall_secs);
            }
            written.push(write(&ld.out, "table.csv", &report_csv(&rep))?);
        }
        "alpha" => {
            let theta = ld.cfg.theta()?.expect("validated");
            let lat = Arc::new(Lattice::new(lat_cfg.kind, lat_cfg.rows, lat_cfg.cols)?);
            let data = generate_dataset(lat, &theta, seed, ld.cfg.variant()?)?;
            let mut out = String::new();
            writeln!(out, "# objective at truth, trivial estimate and MSM estimate")?;
            writeln!(out, "# lattice {} {}x{} dataset seed {seed} theta0 {}", lat_cfg.kind, lat_cfg.rows, lat_cfg.cols, floats(&theta.to_flat()))?;
            writeln!(out, "method,alpha_theta0,alpha_triv,alpha_hat")?;
            let methods = match ld.method {
                Some(m) => vec![m],
                None => ld.cfg.methods()?,
            };
            for m in methods {
                let cmp = alpha_comparison(&theta, &data.field, &ld.cfg.estimation(m)?)?;
                writeln!(
                    out,
                    "{},{},{},{}",
                    m,
                    fmt_float(cmp.alpha_theta0),
                    fmt_float(cmp.alpha_triv),
                    fmt_float(cmp.alpha_hat)
                )?;
            }
            written.push(write(&ld.out, "alpha.csv", &out)?);
        }
        "convergence" => {
            let theta = ld.cfg.theta()?.expect("validated");
            let n_s = st.n_s.expect("validated");
            let rows = convergence_study(&theta, lat_cfg.kind, &st.sizes, n_s, seed)?;
            written.push(write(&ld.out, "convergence.csv", &convergence_csv(&theta, n_s, seed, &rows))?);
        }
        "scan" => {
            let mut spec = ld.cfg.scan()?;
            spec.master_seed = seed;
            let pts = identifiability_scan(&spec)?;
            written.push(write(&ld.out, "scan.csv", &scan_csv(&spec, &pts))?);
            written.push(write(&ld.out, "scan_m1.svg", &scan_svg(&spec, &pts, |p| p.m1, "mean colour fraction m1"))?);
            written.push(write(&ld.out, "scan_m2.svg", &scan_svg(&spec, &pts, |p| p.m2, "mean pair fraction m2"))?);
        }
        other => return Err(anyhow!("unknown study kind '{other}'")),
    }
    for p in written {
        println!("wrote {}", p.display());
    }
    Ok(Outcome::Done)
}
