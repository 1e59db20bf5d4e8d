//! Command-line front end: model generation, seeded chain runs, exact
//! oracles, multiplier learning, greedy baselines, EM studies, and the
//! replicated experiment harness.
//!
//! Artifacts land under --out; each command prints a one-line JSON
//! summary to stdout. Exit codes: 0 success, 2 bad input or spec,
//! 3 numerical degeneracy.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use actsense_core::baselines::{greedy_unconstrained, newgreedy_cardinality};
use actsense_core::cost::CostParams;
use actsense_core::em::{
    em_sequential_select, em_static_select, EmOptions, ParamFamily, SequentialOptions,
};
use actsense_core::exact::{
    delta_upper_bound, dobrushin_bound, exact_gibbs, exact_tpm, exhaustive_optimum, tv_distance,
};
use actsense_core::experiment::{
    preset_fig1, preset_fig2, preset_fig3, run_experiment, write_atomic, ExperimentSpec,
};
use actsense_core::learning::{run_gibbs_learning, LearningParams};
use actsense_core::sampler::{
    run_basic_gibbs, run_fixed_cardinality_gibbs, run_modified_gibbs, BetaSchedule, GibbsRun,
    RunBudget, TraceRow,
};
use actsense_core::{Error, GaussianModel};
use clap::{Args, Parser, Subcommand};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde_json::json;

#[derive(Parser)]
#[command(name = "actsense", version, about = "Sensor subset selection toolkit")]
struct Cli {
    /// Master seed for generation, chains, synthetic data, and presets.
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,

    /// Worker threads for replicated studies (0 = all cores).
    #[arg(long, global = true, default_value_t = 0)]
    threads: usize,

    /// Directory for output files.
    #[arg(long, global = true, default_value = ".")]
    out: PathBuf,

    #[command(subcommand)]
    command: Command,
}

/// Where a command gets its covariance from: a file or a fresh draw.
#[derive(Args)]
struct ModelArgs {
    /// Covariance file (CSV rows, or JSON with a "cov" matrix).
    #[arg(long, conflicts_with = "gen_n")]
    model: Option<PathBuf>,

    /// Generate an instance of this size instead of loading a file.
    #[arg(long)]
    gen_n: Option<usize>,

    /// Seed for --gen-n.
    #[arg(long, default_value_t = 0)]
    gen_seed: u64,
}

impl ModelArgs {
    fn load(&self) -> Result<GaussianModel, Error> {
        match (&self.model, self.gen_n) {
            (Some(path), None) => GaussianModel::load(path),
            (None, Some(n)) => GaussianModel::generate(n, self.gen_seed),
            _ => Err(Error::InvalidParameter(
                "pass exactly one of --model or --gen-n".into(),
            )),
        }
    }
}

#[derive(Subcommand)]
enum Command {
    /// Generate a covariance matrix and write it as CSV.
    GenCov {
        #[arg(long)]
        n: usize,
        /// File name under --out.
        #[arg(long, default_value = "covariance.csv")]
        file: String,
    },

    /// Run an experiment spec (or a named preset) and write its report.
    Run {
        /// JSON experiment spec file.
        #[arg(long, conflicts_with = "preset")]
        spec: Option<PathBuf>,
        /// Built-in study: cost sweep, error sweep, or multiplier paths.
        #[arg(long, value_parser = ["fig1", "fig2", "fig3"])]
        preset: Option<String>,
    },

    /// Exact enumeration: optimum, partition function, and top masses.
    Exact {
        #[command(flatten)]
        model: ModelArgs,
        #[arg(long, default_value_t = 1.0)]
        lambda: f64,
        #[arg(long)]
        beta: f64,
        /// How many of the heaviest configurations to report.
        #[arg(long, default_value_t = 5)]
        top: usize,
    },

    /// Fixed-temperature single-site chain.
    Gibbs {
        #[command(flatten)]
        model: ModelArgs,
        #[arg(long, default_value_t = 1.0)]
        lambda: f64,
        #[arg(long)]
        beta: f64,
        #[arg(long, default_value_t = 10_000)]
        steps: u64,
        /// Keep every stride-th trace row.
        #[arg(long, default_value_t = 1)]
        stride: u64,
    },

    /// Annealed chain under the certified logarithmic schedule.
    Anneal {
        #[command(flatten)]
        model: ModelArgs,
        #[arg(long, default_value_t = 1.0)]
        lambda: f64,
        /// Schedule scale; defaults to 0.99 of the certifiable maximum.
        #[arg(long)]
        beta0: Option<f64>,
        #[arg(long, default_value_t = 100_000)]
        steps: u64,
        #[arg(long, default_value_t = 1)]
        stride: u64,
    },

    /// Cardinality-preserving swap chain.
    GibbsFixed {
        #[command(flatten)]
        model: ModelArgs,
        /// Active-sensor count held by the chain.
        #[arg(long)]
        nbar: usize,
        #[arg(long)]
        beta: f64,
        #[arg(long, default_value_t = 10_000)]
        steps: u64,
        #[arg(long, default_value_t = 1)]
        stride: u64,
    },

    /// Two-timescale multiplier learning toward a mean activation target.
    Learn {
        #[command(flatten)]
        model: ModelArgs,
        /// Target mean number of active sensors.
        #[arg(long)]
        nbar_target: f64,
        #[arg(long, default_value_t = 5.0)]
        beta: f64,
        #[arg(long, default_value_t = 2000)]
        steps: u64,
        /// Initial multiplier; defaults to the middle of the box.
        #[arg(long)]
        lambda0: Option<f64>,
        #[arg(long, default_value_t = 1.0)]
        step0: f64,
        #[arg(long, default_value_t = 0.0)]
        low: f64,
        /// Projection ceiling; defaults to tr(M).
        #[arg(long)]
        high: Option<f64>,
        /// Tail window for the averaged estimate (defaults per run length).
        #[arg(long)]
        tail: Option<usize>,
    },

    /// Ascending single-pass selection at a fixed price.
    Greedy {
        #[command(flatten)]
        model: ModelArgs,
        #[arg(long, default_value_t = 1.0)]
        lambda: f64,
    },

    /// Best-first selection to a sensor budget.
    Newgreedy {
        #[command(flatten)]
        model: ModelArgs,
        #[arg(long)]
        nbar: usize,
    },

    /// Static EM subset study on one synthetic snapshot.
    EmStatic {
        #[command(flatten)]
        model: ModelArgs,
        #[arg(long)]
        nbar: usize,
        /// Mean used to draw the synthetic snapshot.
        #[arg(long, default_value_t = 1.0)]
        theta_true: f64,
        /// Starting mean estimate.
        #[arg(long, default_value_t = 0.0)]
        theta0: f64,
    },

    /// Streaming EM selection over synthetic snapshots.
    EmSequential {
        #[command(flatten)]
        model: ModelArgs,
        #[arg(long)]
        nbar: usize,
        #[arg(long, default_value_t = 100)]
        slots: usize,
        #[arg(long, default_value_t = 1.0)]
        theta_true: f64,
        #[arg(long, default_value_t = 0.0)]
        theta0: f64,
    },

    /// Contraction study: exact propagation against the certified rate.
    Diagnose {
        #[command(flatten)]
        model: ModelArgs,
        #[arg(long, default_value_t = 1.0)]
        lambda: f64,
        #[arg(long, default_value_t = 1.0)]
        beta: f64,
        #[arg(long, default_value_t = 50)]
        sweeps: u32,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if cli.threads > 0 {
        // Ignore the error from a pool that is already installed.
        let _ = rayon::ThreadPoolBuilder::new()
            .num_threads(cli.threads)
            .build_global();
    }
    match dispatch(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code_for(&e))
        }
    }
}

fn exit_code_for(e: &Error) -> u8 {
    match e {
        Error::NumericalDegeneracy(_) => 3,
        _ => 2,
    }
}

fn dispatch(cli: &Cli) -> Result<(), Error> {
    std::fs::create_dir_all(&cli.out)?;
    match &cli.command {
        Command::GenCov { n, file } => gen_cov(cli, *n, file),
        Command::Run { spec, preset } => run(cli, spec.as_deref(), preset.as_deref()),
        Command::Exact { model, lambda, beta, top } => exact(cli, model, *lambda, *beta, *top),
        Command::Gibbs { model, lambda, beta, steps, stride } => {
            let g = model.load()?;
            let budget = RunBudget::new(*steps, cli.seed).with_stride(*stride)?;
            let run = run_basic_gibbs(&g, *lambda, *beta, &budget)?;
            finish_chain(cli, "gibbs", &run)
        }
        Command::Anneal { model, lambda, beta0, steps, stride } => {
            let g = model.load()?;
            let delta = delta_upper_bound(&g, *lambda)?;
            // With zero flip spread any scale certifies; pick unit scale.
            let fallback = if delta > 0.0 { 0.99 / (g.n() as f64 * delta) } else { 1.0 };
            let schedule = BetaSchedule::logarithmic(beta0.unwrap_or(fallback), g.n(), delta)?;
            let budget = RunBudget::new(*steps, cli.seed).with_stride(*stride)?;
            let run = run_modified_gibbs(&g, *lambda, &schedule, &budget)?;
            finish_chain(cli, "anneal", &run)
        }
        Command::GibbsFixed { model, nbar, beta, steps, stride } => {
            let g = model.load()?;
            let budget = RunBudget::new(*steps, cli.seed).with_stride(*stride)?;
            let run = run_fixed_cardinality_gibbs(&g, *nbar, *beta, &budget)?;
            finish_chain(cli, "gibbs_fixed", &run)
        }
        Command::Learn { model, nbar_target, beta, steps, lambda0, step0, low, high, tail } => {
            learn(cli, model, *nbar_target, *beta, *steps, *lambda0, *step0, *low, *high, *tail)
        }
        Command::Greedy { model, lambda } => {
            let g = model.load()?;
            let result = greedy_unconstrained(&g, *lambda)?;
            println!(
                "{}",
                json!({
                    "bits_hex": result.config.to_hex(),
                    "popcount": result.config.popcount(),
                    "cost": result.cost,
                })
            );
            Ok(())
        }
        Command::Newgreedy { model, nbar } => {
            let g = model.load()?;
            let result = newgreedy_cardinality(&g, *nbar)?;
            println!(
                "{}",
                json!({
                    "bits_hex": result.config.to_hex(),
                    "popcount": result.config.popcount(),
                    "error": result.error,
                    "filled_with_nonimproving": result.filled_with_nonimproving,
                })
            );
            Ok(())
        }
        Command::EmStatic { model, nbar, theta_true, theta0 } => {
            em_static(cli, model, *nbar, *theta_true, *theta0)
        }
        Command::EmSequential { model, nbar, slots, theta_true, theta0 } => {
            em_sequential(cli, model, *nbar, *slots, *theta_true, *theta0)
        }
        Command::Diagnose { model, lambda, beta, sweeps } => {
            diagnose(cli, model, *lambda, *beta, *sweeps)
        }
    }
}

fn gen_cov(cli: &Cli, n: usize, file: &str) -> Result<(), Error> {
    let g = GaussianModel::generate(n, cli.seed)?;
    let path = cli.out.join(file);
    write_atomic(&path, g.to_csv_string().as_bytes())?;
    println!(
        "{}",
        json!({ "path": path, "n": g.n(), "trace": g.trace() })
    );
    Ok(())
}

fn run(cli: &Cli, spec: Option<&Path>, preset: Option<&str>) -> Result<(), Error> {
    let spec = match (spec, preset) {
        (Some(path), None) => ExperimentSpec::from_json_str(&std::fs::read_to_string(path)?)?,
        (None, Some("fig1")) => preset_fig1(cli.seed),
        (None, Some("fig2")) => preset_fig2(cli.seed),
        (None, Some("fig3")) => preset_fig3(cli.seed)?,
        (None, Some(other)) => {
            return Err(Error::InvalidParameter(format!("unknown preset {other}")))
        }
        _ => {
            return Err(Error::InvalidParameter(
                "pass exactly one of --spec or --preset".into(),
            ))
        }
    };
    let report = run_experiment(&spec)?;
    let (csv_path, json_path) = report.write(&cli.out)?;
    println!(
        "{}",
        json!({
            "csv": csv_path,
            "report": json_path,
            "rows": report.rows.len(),
            "summary": report.summary,
        })
    );
    Ok(())
}

fn exact(cli: &Cli, model: &ModelArgs, lambda: f64, beta: f64, top: usize) -> Result<(), Error> {
    let g = model.load()?;
    let params = CostParams::new(lambda, beta)?;
    let dist = exact_gibbs(&g, &params)?;
    let (optimum, optimum_cost) = exhaustive_optimum(&g, lambda)?;
    let top_k: Vec<_> = dist
        .top_k(top)
        .into_iter()
        .map(|(bits, prob)| json!({ "bits_hex": format!("{bits:x}"), "prob": prob }))
        .collect();
    let doc = json!({
        "n": g.n(),
        "lambda": lambda,
        "beta": beta,
        "optimum_bits_hex": optimum.to_hex(),
        "optimum_cost": optimum_cost,
        "log_partition": dist.log_partition(),
        "top_k": top_k,
    });
    write_atomic(&cli.out.join("exact.json"), doc.to_string().as_bytes())?;
    println!("{doc}");
    Ok(())
}

#[allow(clippy::too_many_arguments)]
fn learn(
    cli: &Cli,
    model: &ModelArgs,
    nbar_target: f64,
    beta: f64,
    steps: u64,
    lambda0: Option<f64>,
    step0: f64,
    low: f64,
    high: Option<f64>,
    tail: Option<usize>,
) -> Result<(), Error> {
    let g = model.load()?;
    let high = high.unwrap_or_else(|| g.trace());
    let lambda0 = lambda0.unwrap_or(0.5 * (low + high));
    let params = LearningParams::new(nbar_target, beta, step0, lambda0, low, high)?;
    let run = run_gibbs_learning(&g, &params, steps, cli.seed, tail)?;
    let mut csv = String::from("t,lambda,popcount,cost\n");
    for row in &run.trace {
        writeln!(csv, "{},{},{},{}", row.t, row.lambda, row.popcount, row.cost).unwrap();
    }
    let path = cli.out.join("learn.csv");
    write_atomic(&path, csv.as_bytes())?;
    println!(
        "{}",
        json!({
            "trace": path,
            "lambda_hat": run.lambda_hat,
            "tail_mean_popcount": run.tail_mean_popcount,
            "tail_window": run.tail_window,
        })
    );
    Ok(())
}

fn em_static(
    cli: &Cli,
    model: &ModelArgs,
    nbar: usize,
    theta_true: f64,
    theta0: f64,
) -> Result<(), Error> {
    let g = model.load()?;
    let truth = ParamFamily::common_mean(g.clone(), theta_true)?;
    let mut rng = ChaCha8Rng::seed_from_u64(cli.seed);
    let snapshot = truth.sample(&mut rng)?;
    let start = ParamFamily::common_mean(g, theta0)?;
    let sel = em_static_select(&start, |j| snapshot[j], nbar, &EmOptions::default())?;
    let doc = json!({
        "order": sel.order,
        "theta_trace": sel.theta_trace,
        "theta_hat": sel.family.theta(),
        "reconstruction": sel.reconstruction.as_slice(),
        "snapshot": snapshot.as_slice(),
    });
    write_atomic(&cli.out.join("em_static.json"), doc.to_string().as_bytes())?;
    println!("{doc}");
    Ok(())
}

fn em_sequential(
    cli: &Cli,
    model: &ModelArgs,
    nbar: usize,
    slots: usize,
    theta_true: f64,
    theta0: f64,
) -> Result<(), Error> {
    let g = model.load()?;
    let truth = ParamFamily::common_mean(g.clone(), theta_true)?;
    let mut rng = ChaCha8Rng::seed_from_u64(cli.seed);
    let mut draws = Vec::with_capacity(slots);
    for _ in 0..slots {
        draws.push(truth.sample(&mut rng)?);
    }
    let start = ParamFamily::common_mean(g, theta0)?;
    let sel = em_sequential_select(
        &start,
        |t| draws[t].clone(),
        nbar,
        slots,
        &SequentialOptions::default(),
    )?;
    let selections: Vec<String> = sel.selections.iter().map(|c| c.to_hex()).collect();
    let doc = json!({
        "selections_hex": selections,
        "theta_trace": sel.theta_trace,
        "theta_hat": sel.family.theta(),
    });
    write_atomic(&cli.out.join("em_sequential.json"), doc.to_string().as_bytes())?;
    println!("{doc}");
    Ok(())
}

fn diagnose(cli: &Cli, model: &ModelArgs, lambda: f64, beta: f64, sweeps: u32) -> Result<(), Error> {
    let g = model.load()?;
    let n = g.n();
    let params = CostParams::new(lambda, beta)?;
    let chain = exact_tpm(&g, &params)?;
    let pi = exact_gibbs(&g, &params)?;
    let delta = delta_upper_bound(&g, lambda)?;

    let mut csv = String::from("sweep,bound_from_empty,bound_from_full,dv_from_empty,dv_from_full\n");
    let mut worst_ratio: f64 = 0.0;
    let mut mu_e = vec![0.0; 1 << n];
    mu_e[0] = 1.0;
    let mut mu_f = vec![0.0; 1 << n];
    mu_f[(1 << n) - 1] = 1.0;
    let d0_e = tv_distance(&mu_e, pi.probs())?;
    let d0_f = tv_distance(&mu_f, pi.probs())?;
    for sweep in 1..=sweeps {
        for _ in 0..n {
            mu_e = chain.step_distribution(&mu_e)?;
            mu_f = chain.step_distribution(&mu_f)?;
        }
        let rate = dobrushin_bound(beta, n, delta, sweep);
        let dv_e = tv_distance(&mu_e, pi.probs())?;
        let dv_f = tv_distance(&mu_f, pi.probs())?;
        writeln!(csv, "{sweep},{},{},{dv_e},{dv_f}", rate * d0_e, rate * d0_f).unwrap();
        if rate * d0_e > 0.0 {
            worst_ratio = worst_ratio.max(dv_e / (rate * d0_e));
        }
        if rate * d0_f > 0.0 {
            worst_ratio = worst_ratio.max(dv_f / (rate * d0_f));
        }
    }
    let path = cli.out.join("diagnose.csv");
    write_atomic(&path, csv.as_bytes())?;
    println!(
        "{}",
        json!({
            "trace": path,
            "delta_hat": delta,
            "sweeps": sweeps,
            "worst_ratio": worst_ratio,
        })
    );
    Ok(())
}

fn trace_csv(trace: &[TraceRow]) -> String {
    let mut csv = String::from("t,beta,lambda,bits_hex,popcount,cost\n");
    for r in trace {
        writeln!(
            csv,
            "{},{},{},{:x},{},{}",
            r.t, r.beta, r.lambda, r.bits, r.popcount, r.cost
        )
        .unwrap();
    }
    csv
}

fn finish_chain(cli: &Cli, name: &str, run: &GibbsRun) -> Result<(), Error> {
    let path = cli.out.join(format!("{name}.csv"));
    write_atomic(&path, trace_csv(&run.trace).as_bytes())?;
    let (best, best_cost) = run.state.best_seen();
    println!(
        "{}",
        json!({
            "trace": path,
            "rows": run.trace.len(),
            "final_bits_hex": run.state.config.to_hex(),
            "best_bits_hex": best.to_hex(),
            "best_cost": best_cost,
            "stopped_early": run.stopped_early,
        })
    );
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn degeneracy_maps_to_exit_code_3_and_everything_else_to_2() {
        assert_eq!(exit_code_for(&Error::NumericalDegeneracy("x".into())), 3);
        assert_eq!(exit_code_for(&Error::InvalidParameter("x".into())), 2);
        assert_eq!(exit_code_for(&Error::Parse("x".into())), 2);
        assert_eq!(
            exit_code_for(&Error::Io(std::io::Error::other("x"))),
            2
        );
    }

    #[test]
    fn trace_csv_has_the_documented_header_and_hex_column() {
        let rows = vec![TraceRow {
            t: 7,
            beta: 1.5,
            lambda: 1.0,
            bits: 0x2a,
            popcount: 3,
            cost: 4.25,
        }];
        let csv = trace_csv(&rows);
        assert_eq!(
            csv,
            "t,beta,lambda,bits_hex,popcount,cost\n7,1.5,1,2a,3,4.25\n"
        );
    }
}
