use std::fmt::Write as _;
use std::fs::{self, File};
use std::io::BufReader;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use serde_json::json;

use toral_core::beta::beta_table;
use toral_core::factor::{ingest_factor_table, FactorTables, DEFAULT_RHO_BUDGET};
use toral_core::figure::{ratio_series_figure, reproduce_figure, FigureDataset};
use toral_core::model::{run_liminf_trial, run_nmax, ModelConfig};
use toral_core::omega_stats::{count_by_omega, nr_naive, nr_selberg, nu, selberg_r_max, DEFAULT_NU_TRUNCATION};
use toral_core::orbits::{digits, iterate_orbit, named_orbit, IterateOptions, Mat2Q, OrbitSpec};
use toral_core::solve_beta;
use toral_core::sporadic::{search_sigma, Pair, DEFAULT_SEARCH_BOUND};
use toral_core::surd::{
    automorph, cf_expand, convergents, pell_fundamental, quadric_orbit_reps, surd_orbit_decomposition,
    surd_ratio_series, QuadForm, QuadricOptions, SurdSpec,
};

mod config;
mod output;

use config::RunConfig;
use output::{emit, emit_summary, opt_real, real, write_atomic};

/// Almost-prime statistics along toral orbits.
///
/// Sieve memory is capped by `TORAL_SIEVE_MEM_MB` (default 2048) and exact
/// counting by `TORAL_SIEVE_CEILING` (default 10^8).
#[derive(Parser, Debug)]
#[command(name = "toral", version, about)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Debug, Clone)]
struct Io {
    /// Main output (CSV or JSON); stdout when absent.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Write the equivalent run configuration here.
    #[arg(long = "save-config", global = true)]
    save_config: Option<PathBuf>,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// β_k and its defining residual.
    Beta {
        #[arg(long)]
        k: Option<u32>,
        /// Rows for k = 1..=kmax.
        #[arg(long)]
        table: Option<u32>,
        #[command(flatten)]
        io: Io,
    },
    /// Exact N_r(T) against the naive and Selberg main terms.
    SieveCount {
        #[arg(long = "T")]
        t: u64,
        #[command(flatten)]
        io: Io,
    },
    /// Selberg's ν(z) truncated at P.
    Nu {
        #[arg(long)]
        z: f64,
        #[arg(long = "P", default_value_t = DEFAULT_NU_TRUNCATION)]
        p: u64,
        #[command(flatten)]
        io: Io,
    },
    /// Liminf runs of the random model, with optional 𝔫(R) tails.
    ModelRun {
        #[command(flatten)]
        model: ModelArgs,
        /// Summary JSON; stderr when absent.
        #[arg(long)]
        summary: Option<PathBuf>,
        #[command(flatten)]
        io: Io,
    },
    /// Samples of 𝔫(R), the last index with Ω <= R.
    NmaxRun {
        #[command(flatten)]
        model: ModelArgs,
        #[arg(long)]
        summary: Option<PathBuf>,
        #[command(flatten)]
        io: Io,
    },
    /// Ω(xy)/log log|xy| along an orbit.
    Orbit {
        /// One of fibonacci_lucas, consecutive_fibonacci, consecutive_lucas,
        /// even_fibonacci, consecutive_mersenne.
        #[arg(long, conflicts_with_all = ["gamma", "v0"])]
        named: Option<String>,
        /// Matrix entries a,b,c,d (fractions allowed).
        #[arg(long, requires = "v0", allow_hyphen_values = true)]
        gamma: Option<String>,
        #[arg(long, requires = "gamma", allow_hyphen_values = true)]
        v0: Option<String>,
        #[arg(long)]
        nmax: u32,
        #[arg(long)]
        tables: Vec<PathBuf>,
        #[arg(long, default_value_t = DEFAULT_RHO_BUDGET)]
        budget: u64,
        #[arg(long)]
        allow_non_hyperbolic: bool,
        /// β_k reference lines for the SVG.
        #[arg(long, value_delimiter = ',', default_value = "2")]
        beta: Vec<u32>,
        #[arg(long)]
        svg: Option<PathBuf>,
        #[command(flatten)]
        io: Io,
    },
    /// Indices where both members of a Fibonacci/Lucas pair are prime.
    Sporadic {
        #[arg(long)]
        pair: String,
        #[arg(long, default_value_t = DEFAULT_SEARCH_BOUND)]
        nmax: u64,
        #[command(flatten)]
        io: Io,
    },
    /// Convergents of (P + √D)/Q and Ω(p_n q_n)/log n.
    Surd {
        #[arg(long = "P", allow_hyphen_values = true)]
        p: i64,
        #[arg(long = "Q", allow_hyphen_values = true)]
        q: i64,
        #[arg(long = "D")]
        d: u64,
        #[arg(long)]
        nmax: u32,
        #[arg(long, default_value_t = DEFAULT_RHO_BUDGET)]
        budget: u64,
        #[arg(long)]
        summary: Option<PathBuf>,
        #[command(flatten)]
        io: Io,
    },
    /// Orbit representatives on Ax² + Bxy + Cy² = t inside a box.
    Forms {
        #[arg(long = "A", allow_hyphen_values = true)]
        a: i64,
        #[arg(long = "B", allow_hyphen_values = true)]
        b: i64,
        #[arg(long = "C", allow_hyphen_values = true)]
        c: i64,
        #[arg(long, allow_hyphen_values = true)]
        t: i64,
        #[arg(long)]
        height: i64,
        #[arg(long)]
        allow_non_square_free: bool,
        /// Also list solutions of Q = −t.
        #[arg(long)]
        both_signs: bool,
        #[arg(long)]
        summary: Option<PathBuf>,
        #[command(flatten)]
        io: Io,
    },
    /// Dataset for one of the six ratio figures.
    Figure {
        /// Figure number 1..6.
        #[arg(value_name = "ID")]
        id: Option<u8>,
        #[arg(long = "id", conflicts_with = "id")]
        id_flag: Option<u8>,
        #[arg(long, default_value_t = 300)]
        nmax: u64,
        #[arg(long)]
        tables: Vec<PathBuf>,
        #[arg(long, default_value_t = DEFAULT_RHO_BUDGET)]
        budget: u64,
        #[arg(long)]
        svg: Option<PathBuf>,
        #[arg(long)]
        summary: Option<PathBuf>,
        #[command(flatten)]
        io: Io,
    },
    /// Run the command described by a configuration file.
    Run {
        #[arg(long)]
        config: PathBuf,
    },
}

#[derive(Args, Debug, Clone)]
struct ModelArgs {
    #[arg(long)]
    k: u32,
    /// Growth constant, e.g. 1.03 or 21/20; a comma list gives one per
    /// coordinate.
    #[arg(long = "C", value_delimiter = ',', required = true)]
    c: Vec<String>,
    #[arg(long)]
    nmax: u32,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long = "R", value_delimiter = ',')]
    r: Vec<u32>,
    #[arg(long, default_value_t = 1)]
    trials: u32,
    /// Window for the log-log tail regression.
    #[arg(long, default_value_t = 20)]
    tail_lo: u32,
    #[arg(long, default_value_t = 200)]
    tail_hi: u32,
}

impl ModelArgs {
    fn config(&self) -> Result<ModelConfig> {
        let mut cfg = ModelConfig::new(self.k, &self.c[0], self.nmax, self.seed)?
            .with_r_list(self.r.clone())
            .with_trials(self.trials);
        if self.c.len() > 1 {
            let cs: Vec<&str> = self.c.iter().map(String::as_str).collect();
            cfg = cfg.with_growth_per_coordinate(&cs)?;
        }
        Ok(cfg)
    }
}

fn load_tables(paths: &[PathBuf]) -> Result<Option<FactorTables>> {
    if paths.is_empty() {
        return Ok(None);
    }
    let mut all = FactorTables::default();
    for p in paths {
        let f = File::open(p).with_context(|| format!("cannot open {}", p.display()))?;
        let t = ingest_factor_table(BufReader::new(f)).with_context(|| format!("in {}", p.display()))?;
        all.extend(t);
    }
    Ok(Some(all))
}

fn parse_pair(s: &str) -> Result<(num_bigint::BigInt, num_bigint::BigInt)> {
    let parts: Vec<&str> = s.split(',').map(str::trim).collect();
    if parts.len() != 2 {
        bail!("expected x,y but got `{s}`");
    }
    Ok((
        parts[0]
            .parse()
            .with_context(|| format!("bad integer `{}`", parts[0]))?,
        parts[1]
            .parse()
            .with_context(|| format!("bad integer `{}`", parts[1]))?,
    ))
}

fn figure_outputs(ds: &FigureDataset, io: &Io, svg: Option<&Path>, summary: Option<&Path>) -> Result<()> {
    let mut csv = Vec::new();
    ds.write_csv(&mut csv)?;
    emit(io.out.as_deref(), &csv)?;
    if let Some(p) = svg {
        write_atomic(p, ds.to_svg().as_bytes())?;
    }
    if summary.is_some() {
        emit_summary(
            summary,
            &json!({ "meta": ds.meta, "lines": ds.lines, "points": ds.points.len() }),
        )?;
    }
    Ok(())
}

fn run(cmd: Command) -> Result<()> {
    match cmd {
        Command::Beta { k, table, io } => {
            let rows = match (k, table) {
                (_, Some(kmax)) => beta_table(kmax)?,
                (Some(k), None) => vec![solve_beta(k)?],
                (None, None) => bail!("give --k or --table"),
            };
            let mut s = String::from("k,beta,residual,method\n");
            for b in rows {
                writeln!(s, "{},{},{:.3e},{}", b.k, real(b.beta), b.residual, b.method.as_str())?;
            }
            emit(io.out.as_deref(), s.as_bytes())
        }
        Command::SieveCount { t, io } => {
            let table = count_by_omega(t)?;
            let mut s = String::from("r,exact,naive,selberg,ratio_selberg\n");
            let r_max = selberg_r_max(t);
            for (r, &exact) in table.counts.iter().enumerate() {
                let r32 = r as u32;
                let naive = (r >= 1 && t >= 3).then(|| nr_naive(t, r32)).transpose()?;
                let selberg = (r >= 1 && t >= 3 && f64::from(r32) <= r_max)
                    .then(|| nr_selberg(t, r32))
                    .transpose()?;
                let ratio = selberg.map(|v| exact as f64 / v);
                writeln!(
                    s,
                    "{r},{exact},{},{},{}",
                    opt_real(naive),
                    opt_real(selberg),
                    opt_real(ratio)
                )?;
            }
            emit(io.out.as_deref(), s.as_bytes())
        }
        Command::Nu { z, p, io } => {
            let v = nu(z, p)?;
            let s = format!(
                "z,value,tail_bound\n{},{},{:.3e}\n",
                real(v.z),
                real(v.value),
                v.tail_bound
            );
            emit(io.out.as_deref(), s.as_bytes())
        }
        Command::ModelRun { model, summary, io } => {
            let cfg = model.config()?;
            let mut s = String::from("trial,n,omega,ratio,running_min\n");
            let mut beta_k = 0.0;
            for trial in 0..cfg.trials {
                let run = run_liminf_trial(&cfg, trial)?;
                beta_k = run.beta_k;
                for r in &run.records {
                    writeln!(
                        s,
                        "{},{},{},{},{}",
                        r.trial,
                        r.n,
                        r.omega,
                        opt_real(r.ratio),
                        opt_real(r.running_min)
                    )?;
                }
            }
            emit(io.out.as_deref(), s.as_bytes())?;
            let tails = nmax_summaries(&cfg, &model)?;
            let first = tails.first();
            emit_summary(
                summary.as_deref(),
                &json!({
                    "k": cfg.k,
                    "C": cfg.growth_labels(),
                    "n_max": cfg.n_max,
                    "seed": cfg.seed,
                    "trials": cfg.trials,
                    "beta_k": beta_k,
                    "censored_count": first.map(|t| t["censored_count"].clone()),
                    "tail_slope": first.map(|t| t["tail_slope"].clone()),
                    "nmax": tails,
                }),
            )
        }
        Command::NmaxRun { model, summary, io } => {
            let cfg = model.config()?;
            if cfg.r_list.is_empty() {
                bail!("give at least one --R");
            }
            let mut s = String::from("R,trial,nmax,censored\n");
            for &r in &cfg.r_list {
                let run = run_nmax(&cfg, r)?;
                for x in &run.samples {
                    writeln!(s, "{r},{},{},{}", x.trial, x.value, x.censored)?;
                }
            }
            emit(io.out.as_deref(), s.as_bytes())?;
            let tails = nmax_summaries(&cfg, &model)?;
            emit_summary(
                summary.as_deref(),
                &json!({
                    "k": cfg.k,
                    "C": cfg.growth_labels(),
                    "n_max": cfg.n_max,
                    "seed": cfg.seed,
                    "trials": cfg.trials,
                    "beta_k": solve_beta(cfg.k)?.beta,
                    "nmax": tails,
                }),
            )
        }
        Command::Orbit {
            named,
            gamma,
            v0,
            nmax,
            tables,
            budget,
            allow_non_hyperbolic,
            beta,
            svg,
            io,
        } => {
            let spec = match (named, gamma, v0) {
                (Some(name), _, _) => named_orbit(&name)?,
                (None, Some(g), Some(v)) => OrbitSpec::new(Mat2Q::parse(&g)?, parse_pair(&v)?, None)?,
                _ => bail!("give --named or both --gamma and --v0"),
            };
            let tables = load_tables(&tables)?;
            let opts = IterateOptions {
                budget,
                tables: tables.as_ref(),
                allow_non_hyperbolic,
            };
            let points = iterate_orbit(&spec, nmax, opts)?;
            let mut s = String::from("n,x_digits,y_digits,omega,exact,ratio,running_min\n");
            for p in points.iter().filter(|p| p.ratio.is_some()) {
                let o = p.omega.expect("ratio implies omega");
                writeln!(
                    s,
                    "{},{},{},{},{},{},{}",
                    p.n,
                    p.x_digits(),
                    p.y_digits(),
                    o.value,
                    o.exact,
                    opt_real(p.ratio),
                    opt_real(p.running_min)
                )?;
            }
            emit(io.out.as_deref(), s.as_bytes())?;
            if let Some(path) = svg {
                let ds = ratio_series_figure(&spec, nmax, &beta, opts)?;
                write_atomic(&path, ds.to_svg().as_bytes())?;
            }
            Ok(())
        }
        Command::Sporadic { pair, nmax, io } => {
            let pair: Pair = pair.parse()?;
            let r = search_sigma(pair, nmax)?;
            let mut text = serde_json::to_string_pretty(&json!({
                "pair": r.pair,
                "n_bound": r.n_bound,
                "hits": r.hits,
                "prediction": r.prediction,
                "certification_level": r.certification_level,
                "single_prime": r.single_prime,
            }))?;
            text.push('\n');
            emit(io.out.as_deref(), text.as_bytes())
        }
        Command::Surd {
            p,
            q,
            d,
            nmax,
            budget,
            summary,
            io,
        } => {
            let surd = SurdSpec::new(p, q, d)?;
            let cf = cf_expand(&surd)?;
            let conv = convergents(&cf, nmax);
            let ds = surd_ratio_series(&surd, nmax, budget)?;
            let mut s = String::from("n,x_digits,y_digits,omega,exact,ratio,running_min,log_log\n");
            let mut running: Option<f64> = None;
            for pt in &ds.points {
                let c = &conv[pt.index as usize];
                running = Some(running.map_or(pt.ratio, |m: f64| m.min(pt.ratio)));
                writeln!(
                    s,
                    "{},{},{},{},{},{},{},{}",
                    pt.index,
                    digits(&c.p),
                    digits(&c.q),
                    pt.omega,
                    pt.exact,
                    real(pt.ratio),
                    opt_real(running),
                    opt_real(pt.log_log)
                )?;
            }
            emit(io.out.as_deref(), s.as_bytes())?;
            let dec = surd_orbit_decomposition(&cf, nmax.max(1))?;
            emit_summary(
                summary.as_deref(),
                &json!({
                    "preperiod": cf.preperiod,
                    "period": cf.period,
                    "gamma": dec.gamma.to_string(),
                    "representatives": dec.reps.iter().map(|(x, y)| [x.to_string(), y.to_string()]).collect::<Vec<_>>(),
                    "shift_checked_until": dec.checked_until,
                    "unresolved_points": ds.meta.unresolved_points,
                }),
            )
        }
        Command::Forms {
            a,
            b,
            c,
            t,
            height,
            allow_non_square_free,
            both_signs,
            summary,
            io,
        } => {
            let form = QuadForm::new(a, b, c)?;
            let opts = QuadricOptions { allow_non_square_free };
            let mut ts = vec![t];
            if both_signs {
                ts.push(-t);
            }
            let mut s = String::from("t,x,y,orbit_points_in_box\n");
            let mut per_t = Vec::new();
            for &tt in &ts {
                let r = quadric_orbit_reps(&form, tt, height, opts)?;
                for rep in &r.reps {
                    writeln!(s, "{tt},{},{},{}", rep.0, rep.1, r.members[rep].len())?;
                }
                per_t.push(json!({ "t": tt, "solutions_in_box": r.solutions_in_box, "orbits": r.reps.len() }));
            }
            emit(io.out.as_deref(), s.as_bytes())?;
            let d = u64::try_from(form.discriminant()).context("discriminant too large")?;
            let (pt, pu) = pell_fundamental(d)?;
            emit_summary(
                summary.as_deref(),
                &json!({
                    "discriminant": d,
                    "pell": [pt.to_string(), pu.to_string()],
                    "automorph": automorph(&form)?.to_string(),
                    "height": height,
                    "note": "orbits merged only through steps inside the box; reduction by the automorph and -I",
                    "quadrics": per_t,
                }),
            )
        }
        Command::Figure {
            id,
            id_flag,
            nmax,
            tables,
            budget,
            svg,
            summary,
            io,
        } => {
            let id = id.or(id_flag).context("give a figure number 1..6")?;
            let tables = load_tables(&tables)?;
            let ds = reproduce_figure(id, tables.as_ref(), nmax, budget)?;
            figure_outputs(&ds, &io, svg.as_deref(), summary.as_deref())
        }
        Command::Run { config } => {
            let text = fs::read_to_string(&config).with_context(|| format!("cannot read {}", config.display()))?;
            let cfg = RunConfig::parse(&text)?;
            if cfg.command == "run" {
                bail!("a configuration cannot run another configuration");
            }
            let cli = Cli::try_parse_from(to_parser_argv(&cfg))?;
            dispatch(cli.command)
        }
    }
}

/// The figure id is positional on the command line and `id` in files.
fn to_parser_argv(cfg: &RunConfig) -> Vec<String> {
    let mut argv = cfg.to_argv();
    if cfg.command == "figure" {
        if let Some(i) = argv.iter().position(|a| a == "--id") {
            argv.remove(i);
            let v = argv.remove(i);
            argv.insert(2, v);
        }
    }
    argv
}

fn nmax_summaries(cfg: &ModelConfig, model: &ModelArgs) -> Result<Vec<serde_json::Value>> {
    cfg.r_list
        .iter()
        .map(|&r| {
            let run = run_nmax(cfg, r)?;
            let finite = run.samples.len() - run.censored_count();
            Ok(json!({
                "R": r,
                "censored_count": run.censored_count(),
                "finite_count": finite,
                "tail_window": [model.tail_lo, model.tail_hi],
                "tail_slope": run.tail_slope(model.tail_lo, model.tail_hi),
            }))
        })
        .collect()
}

fn save_config_target(cmd: &Command) -> Option<&Path> {
    let io = match cmd {
        Command::Beta { io, .. }
        | Command::SieveCount { io, .. }
        | Command::Nu { io, .. }
        | Command::ModelRun { io, .. }
        | Command::NmaxRun { io, .. }
        | Command::Orbit { io, .. }
        | Command::Sporadic { io, .. }
        | Command::Surd { io, .. }
        | Command::Forms { io, .. }
        | Command::Figure { io, .. } => io,
        Command::Run { .. } => return None,
    };
    io.save_config.as_deref()
}

fn dispatch(cmd: Command) -> Result<()> {
    if let Some(path) = save_config_target(&cmd) {
        let args: Vec<String> = std::env::args().skip(1).collect();
        let mut cfg = RunConfig::from_argv(&args)?;
        cfg.params.retain(|(k, _)| k != "save-config");
        write_atomic(path, cfg.render().as_bytes())?;
    }
    run(cmd)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match dispatch(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
