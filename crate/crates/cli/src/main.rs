mod data;
mod output;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use hypan_core::analysis::{m2_equivalences, ClassWitness, SampleGrid};
use hypan_core::modesolver::{dyadic_magnitudes, initial_vector};
use hypan_core::{
    analyze, build_frame, build_partition, build_symmetriser, check_levi, classify_hyperbolicity, estimate_pq,
    growth_scan, sobolev_loss, solve_cauchy, traced_mode, GridConfig, Hyperbolicity, IntegratorOptions, LeviMode,
    OperatorSpec, V0Policy,
};
use serde::Serialize;
use serde_json::{json, Value};

use output::{fmt_f64, to_json, Sink};

const EXIT_VALIDATION: u8 = 2;
const EXIT_NUMERICAL: u8 = 3;

#[derive(Parser, Serialize)]
#[command(name = "hypan", version, about = "Weakly hyperbolic Cauchy problems: symmetrisers, Levi conditions and mode growth")]
#[command(after_help = "HYPAN_THREADS caps the number of worker threads; RUST_LOG sets the log level.")]
struct Cli {
    #[command(subcommand)]
    command: Command,
    /// Directory for JSON and CSV artifacts. Without it the JSON report goes to stdout and no CSV is written.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Seed for random initial vectors.
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,
}

#[derive(Subcommand, Serialize)]
#[serde(tag = "name", rename_all = "snake_case")]
enum Command {
    /// Hyperbolicity, GR1m and Levi verdicts on a (t, ξ) grid.
    Analyze(AnalyzeArgs),
    /// Levi constants only, plus the second order equivalences when m = 2.
    Levi(AnalyzeArgs),
    /// Zeros of the discriminant along a direction and the excluded set.
    Partition(PartitionArgs),
    /// Mode growth over a range of frequencies.
    Scan(ScanArgs),
    /// One mode with energies and Gronwall envelopes at every node.
    Trace(TraceArgs),
    /// Full periodic Cauchy solve (n = 1).
    Solve(SolveArgs),
    /// Symbol, symmetriser and check function at one (t, ξ).
    Dump(DumpArgs),
}

#[derive(Args, Serialize)]
struct GridArgs {
    /// Uniform t nodes on the base level.
    #[arg(long = "grid-t", default_value_t = 513)]
    grid_t: usize,
    /// Decades of |ξ| sampled, starting at 1.
    #[arg(long = "xi-decades", default_value_t = 3.0)]
    xi_decades: f64,
    /// Refinement levels; each doubles the t nodes and adds a decade.
    #[arg(long, default_value_t = 1, num_args = 0..=1, default_missing_value = "1")]
    refine: usize,
    /// Directions on the unit sphere (n ≥ 2).
    #[arg(long)]
    directions: Option<usize>,
}

impl GridArgs {
    fn config(&self) -> GridConfig {
        GridConfig {
            t_nodes: self.grid_t,
            xi_decades: self.xi_decades,
            directions: self.directions,
            refinements: self.refine,
        }
    }
}

#[derive(Clone, Copy, ValueEnum, Serialize)]
#[serde(rename_all = "snake_case")]
enum LeviKind {
    Complex,
    Real,
    Graded,
}

#[derive(Args, Serialize)]
struct AnalyzeArgs {
    /// Operator spec file (JSON).
    spec: PathBuf,
    #[command(flatten)]
    grid: GridArgs,
    #[arg(long = "levi-mode", value_enum, default_value_t = LeviKind::Complex)]
    levi_mode: LeviKind,
    /// Highest grade checked with `--levi-mode graded`.
    #[arg(long = "l-max", default_value_t = 0)]
    l_max: usize,
}

impl AnalyzeArgs {
    fn mode(&self) -> LeviMode {
        match self.levi_mode {
            LeviKind::Complex => LeviMode::Complex,
            LeviKind::Real => LeviMode::Real,
            LeviKind::Graded => LeviMode::Graded { l_max: self.l_max },
        }
    }
}

#[derive(Args, Serialize)]
struct IntegratorArgs {
    /// Local relative error per step.
    #[arg(long = "rel-tol", default_value_t = 1e-10)]
    rel_tol: f64,
    /// Step cap; the effective cap is min(h_max, 0.1/<ξ>).
    #[arg(long = "h-max", default_value_t = 1e-2)]
    h_max: f64,
    /// Minimum number of uniform output nodes.
    #[arg(long = "min-output", default_value_t = 512)]
    min_output: usize,
    /// Classical RK4 with this step instead of the adaptive scheme.
    #[arg(long = "fixed-step")]
    fixed_step: Option<f64>,
}

impl IntegratorArgs {
    fn options(&self) -> IntegratorOptions {
        IntegratorOptions {
            rel_tol: self.rel_tol,
            h_max: self.h_max,
            min_output: self.min_output,
            fixed_step: self.fixed_step,
            extra_nodes: Vec::new(),
        }
    }
}

#[derive(Args, Serialize)]
struct PartitionArgs {
    spec: PathBuf,
    /// Direction of ξ, comma separated (default: all ones).
    #[arg(long = "xi-dir", value_delimiter = ',', allow_negative_numbers = true)]
    xi_dir: Option<Vec<f64>>,
    /// Size of the excluded set, in (0, e^-1].
    #[arg(long, default_value_t = (-1.0f64).exp())]
    eps: f64,
    /// Fit p and q over these ε values (at least three, spanning a decade).
    #[arg(long = "eps-sweep", value_delimiter = ',')]
    eps_sweep: Option<Vec<f64>>,
}

#[derive(Clone, Copy, ValueEnum, Serialize)]
#[serde(rename_all = "snake_case")]
enum V0Kind {
    Ones,
    Random,
}

impl V0Kind {
    fn policy(self, seed: u64) -> V0Policy {
        match self {
            V0Kind::Ones => V0Policy::Ones,
            V0Kind::Random => V0Policy::Random { seed },
        }
    }
}

#[derive(Args, Serialize)]
struct ScanArgs {
    spec: PathBuf,
    /// Magnitudes of ξ: `LO..HI` or a comma separated list.
    #[arg(long, default_value = "16..1024")]
    xi: String,
    /// Expand `LO..HI` by doubling from LO. This is the default for ranges.
    #[arg(long, conflicts_with = "points")]
    dyadic: bool,
    /// Expand `LO..HI` into this many log spaced magnitudes instead.
    #[arg(long)]
    points: Option<usize>,
    /// Direction of ξ, comma separated (default: all ones).
    #[arg(long = "xi-dir", value_delimiter = ',', allow_negative_numbers = true)]
    xi_dir: Option<Vec<f64>>,
    #[arg(long, value_enum, default_value_t = V0Kind::Ones)]
    v0: V0Kind,
    #[command(flatten)]
    integrator: IntegratorArgs,
}

#[derive(Args, Serialize)]
struct TraceArgs {
    spec: PathBuf,
    /// Magnitude of ξ.
    #[arg(long)]
    xi: f64,
    /// Direction of ξ, comma separated (default: all ones).
    #[arg(long = "xi-dir", value_delimiter = ',', allow_negative_numbers = true)]
    xi_dir: Option<Vec<f64>>,
    /// Size of the excluded set around the zeros of Δ.
    #[arg(long, default_value_t = (-1.0f64).exp())]
    eps: f64,
    #[arg(long, value_enum, default_value_t = V0Kind::Ones)]
    v0: V0Kind,
    #[command(flatten)]
    integrator: IntegratorArgs,
}

#[derive(Args, Serialize)]
struct SolveArgs {
    spec: PathBuf,
    /// Data file: JSON, or CSV with a header and an x column.
    #[arg(long)]
    data: PathBuf,
    /// Output times, comma separated.
    #[arg(long = "t-out", value_delimiter = ',', required = true, allow_negative_numbers = true)]
    t_out: Vec<f64>,
    /// Initial time for CSV data (default: t0 of the operator file).
    #[arg(long, allow_negative_numbers = true)]
    t0: Option<f64>,
    /// Period of the x grid for CSV data.
    #[arg(long, default_value_t = std::f64::consts::TAU)]
    period: f64,
    /// Also estimate the derivative loss up to the last output time.
    #[arg(long)]
    loss: bool,
    #[command(flatten)]
    integrator: IntegratorArgs,
}

#[derive(Args, Serialize)]
struct DumpArgs {
    spec: PathBuf,
    #[arg(long, allow_negative_numbers = true)]
    t: f64,
    /// ξ, comma separated with n components.
    #[arg(long, value_delimiter = ',', required = true, allow_negative_numbers = true)]
    xi: Vec<f64>,
}

#[derive(Serialize)]
struct RunConfig<'a> {
    version: &'static str,
    seed: u64,
    out: &'a Option<PathBuf>,
    threads: Option<usize>,
    command: &'a Command,
}

#[derive(Serialize)]
struct Artifact<'a, T: Serialize> {
    config: &'a RunConfig<'a>,
    result: T,
}

type BoxError = Box<dyn std::error::Error>;

/// Failure with an exit code.
struct Failure {
    code: u8,
    message: String,
}

impl From<hypan_core::Error> for Failure {
    fn from(e: hypan_core::Error) -> Self {
        let code = if e.is_validation() { EXIT_VALIDATION } else { EXIT_NUMERICAL };
        Failure {
            code,
            message: e.to_string(),
        }
    }
}

impl From<BoxError> for Failure {
    fn from(e: BoxError) -> Self {
        match e.downcast::<hypan_core::Error>() {
            Ok(core) => (*core).into(),
            Err(other) => Failure {
                code: EXIT_VALIDATION,
                message: other.to_string(),
            },
        }
    }
}

impl From<std::io::Error> for Failure {
    fn from(e: std::io::Error) -> Self {
        Failure {
            code: EXIT_VALIDATION,
            message: e.to_string(),
        }
    }
}

fn invalid(message: impl Into<String>) -> Failure {
    Failure {
        code: EXIT_VALIDATION,
        message: message.into(),
    }
}

fn load_spec(path: &PathBuf) -> Result<OperatorSpec, Failure> {
    OperatorSpec::from_path(path).map_err(|e| {
        let mut f = Failure::from(e);
        f.code = EXIT_VALIDATION;
        f.message = format!("{}: {}", path.display(), f.message);
        f
    })
}

fn unit_direction(dir: &Option<Vec<f64>>, n: usize) -> Result<Vec<f64>, Failure> {
    let d = dir.clone().unwrap_or_else(|| vec![1.0; n]);
    let norm = d.iter().map(|x| x * x).sum::<f64>().sqrt();
    if d.len() != n || !(norm > 0.0) || !norm.is_finite() {
        return Err(invalid(format!("invalid xi-dir: need {n} finite components, not all zero")));
    }
    Ok(d.iter().map(|x| x / norm).collect())
}

fn parse_magnitudes(s: &str, points: Option<usize>) -> Result<Vec<f64>, Failure> {
    let bad = || invalid(format!("invalid xi: {s:?} is neither LO..HI nor a comma separated list"));
    if let Some((lo, hi)) = s.split_once("..") {
        let lo: f64 = lo.trim().parse().map_err(|_| bad())?;
        let hi: f64 = hi.trim().parse().map_err(|_| bad())?;
        if !(lo > 0.0 && hi > lo && hi.is_finite()) {
            return Err(invalid("invalid xi: need 0 < LO < HI"));
        }
        let Some(points) = points else {
            return Ok(dyadic_magnitudes(lo, hi));
        };
        if points < 2 {
            return Err(invalid("invalid points: need at least 2"));
        }
        let r = (hi / lo).ln();
        return Ok((0..points).map(|k| lo * (r * k as f64 / (points - 1) as f64).exp()).collect());
    }
    s.split(',').map(|p| p.trim().parse::<f64>().map_err(|_| bad())).collect()
}

fn opt(x: Option<f64>) -> String {
    x.map(fmt_f64).unwrap_or_default()
}

fn run(cli: &Cli, sink: &Sink) -> Result<(), Failure> {
    let threads = std::env::var("HYPAN_THREADS").ok().and_then(|s| s.parse().ok());
    let config = RunConfig {
        version: env!("CARGO_PKG_VERSION"),
        seed: cli.seed,
        out: &cli.out,
        threads,
        command: &cli.command,
    };
    let emit = |name: &str, result: Value| -> Result<(), Failure> {
        let text = to_json(&Artifact { config: &config, result }).map_err(|e| invalid(e.to_string()))?;
        sink.json(name, &text)?;
        Ok(())
    };
    match &cli.command {
        Command::Analyze(a) => {
            let spec = load_spec(&a.spec)?;
            let report = analyze(&spec, &a.grid.config(), a.mode())?;
            emit("analyze", value(&report))?;
            if report.hyperbolicity == Hyperbolicity::NotHyperbolic {
                let at = report
                    .hyperbolicity_witness
                    .as_ref()
                    .map(|w: &ClassWitness| format!(" at t = {}, xi = {:?}", w.t, w.xi))
                    .unwrap_or_default();
                return Err(invalid(format!("not_hyperbolic: the characteristic roots are not all real{at}")));
            }
        }
        Command::Levi(a) => {
            let spec = load_spec(&a.spec)?;
            let grid = SampleGrid::new(&spec, &a.grid.config())?;
            let levi = check_levi(&spec, &grid, a.mode())?;
            let m2 = if spec.m == 2 { Some(m2_equivalences(&spec, &grid)?) } else { None };
            emit("levi", json!({"levi": value(&levi), "m2": value(&m2)}))?;
        }
        Command::Partition(a) => {
            let spec = load_spec(&a.spec)?;
            let dir = unit_direction(&a.xi_dir, spec.n)?;
            match &a.eps_sweep {
                None => {
                    let p = build_partition(&spec, &dir, a.eps)?;
                    emit("partition", value(&p))?;
                }
                Some(eps) => {
                    let est = estimate_pq(&spec, &[dir], eps)?;
                    emit("partition", value(&est))?;
                    let header: Vec<String> = ["xi_dir", "eps", "intervals", "measure", "min_delta_ratio", "log_integral", "c2_ratio"]
                        .map(String::from)
                        .to_vec();
                    let rows: Vec<Vec<String>> = est
                        .rows
                        .iter()
                        .map(|r| {
                            vec![
                                r.xi_dir.iter().map(|x| fmt_f64(*x)).collect::<Vec<_>>().join(";"),
                                fmt_f64(r.eps),
                                r.intervals.to_string(),
                                fmt_f64(r.measure),
                                fmt_f64(r.min_delta_ratio),
                                fmt_f64(r.log_integral),
                                fmt_f64(r.c2_ratio),
                            ]
                        })
                        .collect();
                    sink.csv("partition_sweep", &header, &rows)?;
                }
            }
        }
        Command::Scan(a) => {
            let spec = load_spec(&a.spec)?;
            let dir = unit_direction(&a.xi_dir, spec.n)?;
            let mags = parse_magnitudes(&a.xi, a.points)?;
            let fit = growth_scan(&spec, &dir, &mags, a.v0.policy(cli.seed), &a.integrator.options())?;
            emit("scan", value(&fit))?;
            let header: Vec<String> = ["xi", "bracket", "sup_ratio", "final_ratio"].map(String::from).to_vec();
            let rows: Vec<Vec<String>> = (0..fit.xi_mags.len())
                .map(|k| {
                    vec![
                        fmt_f64(fit.xi_mags[k]),
                        fmt_f64(fit.brackets[k]),
                        fmt_f64(fit.ratios[k]),
                        fmt_f64(fit.final_ratios[k]),
                    ]
                })
                .collect();
            sink.csv("scan", &header, &rows)?;
        }
        Command::Trace(a) => {
            let spec = load_spec(&a.spec)?;
            let dir = unit_direction(&a.xi_dir, spec.n)?;
            let xi: Vec<f64> = dir.iter().map(|d| d * a.xi).collect();
            let v0 = initial_vector(a.v0.policy(cli.seed), spec.m, 0);
            let (tr, part) = traced_mode(&spec, &xi, &v0, a.eps, &a.integrator.options())?;
            let max_slack = tr.bound_slack.iter().flatten().copied().fold(0.0, f64::max);
            emit(
                "trace",
                json!({
                    "xi": xi,
                    "v0": value(&v0),
                    "partition": value(&part),
                    "constants": value(&tr.constants),
                    "max_slack": max_slack,
                    "sup_ratio": tr.sup_ratio(),
                    "overflow": tr.overflow,
                    "steps": tr.steps,
                    "rejected": tr.rejected,
                    "nodes": tr.t_nodes.len(),
                }),
            )?;
            let mut header = vec!["t".to_string()];
            for k in 1..=spec.m {
                header.push(format!("v{k}_re"));
                header.push(format!("v{k}_im"));
            }
            header.extend(["e_kov", "e_hyp", "energy", "envelope", "slack"].map(String::from));
            let rows: Vec<Vec<String>> = (0..tr.t_nodes.len())
                .map(|i| {
                    let mut r = vec![fmt_f64(tr.t_nodes[i])];
                    for z in &tr.v[i] {
                        r.push(fmt_f64(z.re));
                        r.push(fmt_f64(z.im));
                    }
                    r.push(fmt_f64(tr.e_kov[i]));
                    r.push(opt(tr.e_hyp[i]));
                    r.push(opt(tr.energy[i]));
                    r.push(opt(tr.envelope[i]));
                    r.push(opt(tr.bound_slack[i]));
                    r
                })
                .collect();
            sink.csv("trace", &header, &rows)?;
        }
        Command::Solve(a) => {
            let spec = load_spec(&a.spec)?;
            let data = data::load(&a.data, spec.m, a.t0.unwrap_or(spec.t0), a.period)?;
            let opts = a.integrator.options();
            let sol = solve_cauchy(&spec, &data, &a.t_out, &opts)?;
            let loss = match a.loss {
                true => Some(sobolev_loss(&spec, &data, a.t_out.iter().copied().fold(data.t0, f64::max), &opts)?),
                false => None,
            };
            for w in &sol.warnings {
                log::warn!("{w}");
            }
            let sup: Vec<f64> = sol.u.iter().map(|u| u.iter().map(|z| z.norm()).fold(0.0, f64::max)).collect();
            emit(
                "solve",
                json!({
                    "n_grid": sol.x.len(),
                    "t_out": sol.t_out,
                    "sup_u": sup,
                    "imag_ratio": sol.imag_ratio,
                    "nyquist_dropped": sol.nyquist_dropped,
                    "modes_integrated": sol.modes_integrated,
                    "regularity": sol.regularity,
                    "warnings": sol.warnings,
                    "loss": value(&loss),
                }),
            )?;
            for (i, t) in sol.t_out.iter().enumerate() {
                let mut header = vec!["x".to_string(), "u_re".into(), "u_im".into()];
                for j in 1..spec.m {
                    header.push(format!("dt{j}u_re"));
                    header.push(format!("dt{j}u_im"));
                }
                let rows: Vec<Vec<String>> = (0..sol.x.len())
                    .map(|k| {
                        let mut r = vec![fmt_f64(sol.x[k])];
                        for d in &sol.dtu[i] {
                            r.push(fmt_f64(d[k].re));
                            r.push(fmt_f64(d[k].im));
                        }
                        r
                    })
                    .collect();
                sink.csv(&format!("u_t{t}"), &header, &rows)?;
            }
        }
        Command::Dump(a) => {
            let spec = load_spec(&a.spec)?;
            let frame = build_frame(&spec, a.t, &a.xi)?;
            let symm = build_symmetriser(&frame);
            let class = classify_hyperbolicity(&spec, a.t, &a.xi)?;
            emit(
                "dump",
                json!({"frame": value(&frame), "symmetriser": value(&symm), "classification": value(&class)}),
            )?;
        }
    }
    Ok(())
}

fn value<T: Serialize>(x: &T) -> Value {
    serde_json::to_value(x).unwrap_or(Value::Null)
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    if let Some(n) = std::env::var("HYPAN_THREADS").ok().and_then(|s| s.parse::<usize>().ok()) {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(n).build_global() {
            log::warn!("HYPAN_THREADS ignored: {e}");
        }
    }
    let result = Sink::new(cli.out.clone()).map_err(Failure::from).and_then(|sink| run(&cli, &sink));
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error: {}", f.message);
            ExitCode::from(f.code)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exit_codes() {
        let f = Failure::from(hypan_core::Error::Overflow { t: 0.5, xi: vec![1.0] });
        assert_eq!(f.code, EXIT_NUMERICAL);
        let f = Failure::from(hypan_core::Error::ZeroFrequency);
        assert_eq!(f.code, EXIT_VALIDATION);
        let boxed: BoxError = Box::new(hypan_core::Error::StepUnderflow { h: 1e-300, t: 0.1, xi: vec![2.0] });
        assert_eq!(Failure::from(boxed).code, EXIT_NUMERICAL);
    }

    #[test]
    fn magnitude_lists() {
        assert_eq!(parse_magnitudes("16..1024", None).ok().unwrap().len(), 7);
        let v = parse_magnitudes("1..100", Some(3)).ok().unwrap();
        assert!((v[1] - 10.0).abs() < 1e-12);
        assert_eq!(parse_magnitudes("1, 2,4", None).ok().unwrap(), vec![1.0, 2.0, 4.0]);
        assert!(parse_magnitudes("a..b", None).is_err());
    }
}
