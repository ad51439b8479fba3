//! `gibbs`: command-line access to every module of `gibbs-core`.
//!
//! Results go to stdout (or `--out`); a JSON run manifest goes to stderr (or
//! next to `--out`). Failures print a JSON error record on stderr and exit
//! with 2 (validation), 3 (numeric domain) or 4 (convergence).

mod output;

use std::path::PathBuf;
use std::time::Instant;

use clap::{Args, Parser, Subcommand, ValueEnum};
use gibbs_core::curve::{classify, CurveClassification, LogFanoCurve};
use gibbs_core::gitcomb::{distortion_extremum, hypersimplex_vertices, is_semistable, P1Config, SymmetryGroup};
use gibbs_core::rational::{qvec, ExtRational, Q};
use gibbs_core::sampler::{
    bootstrap_errors, default_eps, direct_mc_log_z, estimate_log_z, run_chain, BootstrapErrors, LogZEstimate,
    Observables, SamplerParams, TiEstimate,
};
use gibbs_core::selberg::{
    arithmetic_log_z, arithmetic_reduction, convergence_run, inf_mabuchi, selberg_log_z, ArithModel, Schedule,
    WeightTriple,
};
use gibbs_core::thresholds::{
    asymptotic_thresholds, gamma_n, gamma_n_reduced, gibbs_classify, lct_oracle, AsymptoticThresholds, GibbsClass,
    ValuationCandidate,
};
use gibbs_core::toric::{ding_ray, ray_slopes, Ray, RayGrid, RayReport};
use gibbs_core::{Error, Result};
use output::{csv, num, to_json, Emitted};
use serde::Serialize;

#[derive(Parser, Debug)]
#[command(name = "gibbs", version, about = "Stability thresholds, Selberg integrals, toric rays and Gibbs samplers on P^1")]
struct Cli {
    /// Cap on worker threads.
    #[arg(long, global = true, env = "GIBBS_THREADS")]
    threads: Option<usize>,
    /// Write the result here instead of stdout.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Write the run manifest here (default: `<out>.manifest.json`, or stderr).
    #[arg(long, global = true)]
    manifest: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug, Serialize)]
#[serde(rename_all = "kebab-case")]
enum Command {
    /// K- and Gibbs-stability class of a curve.
    Classify(ClassifyArgs),
    /// Stability thresholds `γ^(N)` and `γ^(N),G`.
    Thresholds(ThresholdsArgs),
    /// GIT semistability of a point configuration.
    Semistable(SemistableArgs),
    /// Vertices of the hypersimplex and the distortion extremum.
    Hypersimplex(HypersimplexArgs),
    /// `log Z_N` of the Dotsenko-Fateev integral.
    Selberg(SelbergArgs),
    /// Infimum of the Mabuchi functional.
    MabuchiInf(WeightArgs),
    /// `log Z_N / N` against `inf M` along a schedule.
    Converge(ConvergeArgs),
    /// `log Z_N` of the arithmetic models.
    ArithZ(ArithArgs),
    /// Functionals along a toric geodesic ray.
    ToricRay(ToricRayArgs),
    /// Twisted Ding functional along the piecewise-linear ray.
    DingRay(DingRayArgs),
    /// Run the constrained Metropolis chain.
    Sample(SampleArgs),
    /// `log Z` by thermodynamic integration.
    Logz(LogzArgs),
}

#[derive(Clone, Copy, Debug, ValueEnum, Serialize, PartialEq, Eq)]
#[serde(rename_all = "lowercase")]
enum Format {
    Json,
    Csv,
}

#[derive(Args, Debug, Serialize)]
struct ClassifyArgs {
    /// Curve as JSON, e.g. `{"weights":["1/2","1/2"]}`.
    #[arg(long)]
    curve: String,
}

#[derive(Args, Debug, Serialize)]
struct ThresholdsArgs {
    #[arg(long, default_value = r#"{"weights":[]}"#)]
    curve: String,
    #[arg(long)]
    n: u64,
    /// Restrict to the GIT semistable locus.
    #[arg(long)]
    reduced: bool,
    /// Minimise over valuations instead of using the closed forms.
    #[arg(long)]
    oracle: bool,
}

#[derive(Args, Debug, Serialize)]
struct SemistableArgs {
    /// Points as JSON: numbers, `[re, im]` pairs or `"inf"`.
    #[arg(long)]
    config: String,
    #[arg(long, value_enum, default_value = "pgl2")]
    group: GroupArg,
}

#[derive(Clone, Copy, Debug, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
enum GroupArg {
    Pgl2,
    Cstar,
}

#[derive(Args, Debug, Serialize)]
struct HypersimplexArgs {
    #[arg(long)]
    n: usize,
}

#[derive(Args, Debug, Serialize)]
struct WeightArgs {
    /// Three exponents, comma-separated.
    #[arg(long, value_delimiter = ',', required = true)]
    w: Vec<f64>,
}

#[derive(Args, Debug, Serialize)]
struct SelbergArgs {
    #[arg(long, value_delimiter = ',', required = true)]
    w: Vec<f64>,
    #[arg(long)]
    n: u64,
}

#[derive(Clone, Copy, Debug, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
enum ScheduleArg {
    Symmetric,
    Fixed,
}

#[derive(Args, Debug, Serialize)]
struct ConvergeArgs {
    #[arg(long, value_enum, default_value = "symmetric")]
    schedule: ScheduleArg,
    /// Weights for the fixed schedule.
    #[arg(long, value_delimiter = ',')]
    w: Option<Vec<f64>>,
    #[arg(long, value_delimiter = ',', required = true)]
    n: Vec<u64>,
    #[arg(long, value_enum, default_value = "csv")]
    format: Format,
}

#[derive(Clone, Copy, Debug, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
enum ModelArg {
    /// Trivial divisor.
    P1z,
    /// Equal weights at `0` and `∞`.
    Dw,
}

#[derive(Args, Debug, Serialize)]
struct ArithArgs {
    #[arg(long)]
    n: u64,
    #[arg(long, value_enum, default_value = "p1z")]
    model: ModelArg,
    #[arg(long)]
    w: Option<f64>,
}

#[derive(Clone, Copy, Debug, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
enum RayArg {
    Absval,
    Translation,
}

#[derive(Args, Debug, Serialize)]
struct GridArgs {
    /// Primal half-width; defaults to `max(64, 4 t_max)`.
    #[arg(long)]
    x_max: Option<f64>,
    /// Primal nodes; defaults to spacing `1/128`.
    #[arg(long)]
    nodes: Option<usize>,
    #[arg(long, default_value_t = 4097)]
    dual_nodes: usize,
}

impl GridArgs {
    fn grid(&self, t_max: f64) -> RayGrid {
        let mut g = RayGrid::for_t_max(t_max);
        if let Some(x) = self.x_max {
            g.x_max = x;
            g.primal_nodes = (x * 256.0).round() as usize + 1;
        }
        if let Some(n) = self.nodes {
            g.primal_nodes = n;
        }
        g.dual_nodes = self.dual_nodes;
        g
    }
}

#[derive(Args, Debug, Serialize)]
struct ToricRayArgs {
    #[arg(long, value_enum)]
    ray: RayArg,
    #[arg(long)]
    gamma: f64,
    #[arg(long)]
    v: f64,
    #[arg(long, value_delimiter = ',', required = true)]
    t: Vec<f64>,
    #[command(flatten)]
    grid: GridArgs,
    #[arg(long, value_enum, default_value = "csv")]
    format: Format,
}

#[derive(Args, Debug, Serialize)]
struct DingRayArgs {
    #[arg(long)]
    gamma: f64,
    #[arg(long, default_value_t = 2.0)]
    v: f64,
    #[arg(long, value_delimiter = ',', required = true)]
    t: Vec<f64>,
    #[command(flatten)]
    grid: GridArgs,
    #[arg(long, value_enum, default_value = "csv")]
    format: Format,
}

fn parse_count(s: &str) -> std::result::Result<u64, String> {
    let x: f64 = s.parse().map_err(|_| format!("not a number: {s}"))?;
    if !(x >= 0.0 && x.fract() == 0.0 && x < 1.8e19) {
        return Err(format!("not a non-negative integer: {s}"));
    }
    Ok(x as u64)
}

#[derive(Args, Debug, Serialize)]
struct ChainArgs {
    #[arg(long)]
    n: usize,
    #[arg(long, allow_hyphen_values = true)]
    beta: f64,
    #[arg(long, default_value_t = 0.0)]
    w: f64,
    /// Slab half-width, or `auto` for `min(0.05, 1/N)`.
    #[arg(long, default_value = "auto")]
    eps: String,
    /// Post-burn-in single-site proposals; accepts `1e6`.
    #[arg(long, value_parser = parse_count, default_value = "1000000")]
    steps: u64,
    /// Burn-in proposals; defaults to 10% of the steps.
    #[arg(long, value_parser = parse_count)]
    burn_in: Option<u64>,
    #[arg(long, default_value_t = 0.5)]
    sigma: f64,
    #[arg(long, default_value_t = 7)]
    seed: u64,
}

impl ChainArgs {
    fn params(&self) -> Result<SamplerParams> {
        let mut p = SamplerParams::new(self.n.max(2), self.beta, self.w, self.steps, self.seed);
        p.n = self.n;
        p.eps = if self.eps == "auto" {
            default_eps(self.n.max(1))
        } else {
            self.eps.parse().map_err(|_| Error::validation(format!("eps must be a number or auto, got {}", self.eps)))?
        };
        p.step_sigma = self.sigma;
        if let Some(b) = self.burn_in {
            p.burn_in = b;
        }
        p.validate()?;
        Ok(p)
    }
}

#[derive(Args, Debug, Serialize)]
struct SampleArgs {
    #[command(flatten)]
    chain: ChainArgs,
    /// Include the per-sweep series in the output.
    #[arg(long)]
    series: bool,
}

#[derive(Args, Debug, Serialize)]
struct LogzArgs {
    #[command(flatten)]
    chain: ChainArgs,
    /// Number of grid points from 0 to beta.
    #[arg(long, default_value_t = 21)]
    grid: usize,
    /// I.i.d. configurations for the slab probability.
    #[arg(long, value_parser = parse_count, default_value = "10000000")]
    z0_samples: u64,
    /// Also run direct Monte Carlo with this many samples (N <= 7).
    #[arg(long, value_parser = parse_count)]
    direct: Option<u64>,
}

fn parse_curve(s: &str) -> Result<LogFanoCurve> {
    serde_json::from_str(s).map_err(|e| Error::validation(format!("bad curve JSON: {e}")))
}

fn triple(w: &[f64]) -> Result<WeightTriple> {
    match w {
        [a, b, c] => WeightTriple::new(*a, *b, *c),
        _ => Err(Error::validation(format!("expected three weights, got {}", w.len()))),
    }
}

#[derive(Serialize)]
struct ClassifyOut {
    #[serde(flatten)]
    k: CurveClassification,
    #[serde(with = "gibbs_core::rational::qstr")]
    volume: Q,
    gibbs: GibbsClass,
    #[serde(skip_serializing_if = "Option::is_none")]
    asymptotic: Option<AsymptoticThresholds>,
}

#[derive(Serialize)]
struct ThresholdsOut {
    value: ExtRational,
    n: u64,
    reduced: bool,
    method: &'static str,
    #[serde(skip_serializing_if = "Option::is_none")]
    witness: Option<ValuationCandidate>,
}

#[derive(Serialize)]
struct HypersimplexOut {
    n: usize,
    #[serde(serialize_with = "ser_vertices")]
    vertices: Vec<Vec<Q>>,
    #[serde(with = "gibbs_core::rational::qstr")]
    distortion_extremum: Q,
}

fn ser_vertices<S: serde::Serializer>(v: &[Vec<Q>], s: S) -> std::result::Result<S::Ok, S::Error> {
    use serde::ser::SerializeSeq;
    struct Row<'a>(&'a [Q]);
    impl Serialize for Row<'_> {
        fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
            qvec::serialize(self.0, s)
        }
    }
    let mut seq = s.serialize_seq(Some(v.len()))?;
    for r in v {
        seq.serialize_element(&Row(r))?;
    }
    seq.end()
}

#[derive(Serialize)]
struct SampleOut {
    params: SamplerParams,
    observables: Observables,
    bootstrap: BootstrapErrors,
    #[serde(skip_serializing_if = "Option::is_none")]
    series: Option<gibbs_core::sampler::ChainSeries>,
}

#[derive(Serialize)]
struct LogzOut {
    params: SamplerParams,
    beta_grid: Vec<f64>,
    #[serde(flatten)]
    ti: TiEstimate,
    #[serde(skip_serializing_if = "Option::is_none")]
    direct: Option<LogZEstimate>,
}

fn ray_output(r: &RayReport, format: Format, entropy: bool) -> Result<String> {
    if format == Format::Json {
        return to_json(r);
    }
    let rows: Vec<Vec<String>> = r
        .samples
        .iter()
        .map(|s| {
            if entropy {
                vec![num(s.t), num(s.e), num(s.d), num(s.f), num(s.ding)]
            } else {
                vec![num(s.t), num(s.ding)]
            }
        })
        .collect();
    let opt = |x: Option<f64>| x.map_or_else(|| "nan".to_string(), num);
    let notes = if entropy {
        vec![
            ("fitted_slope_E".into(), opt(r.fitted.e)),
            ("fitted_slope_D".into(), opt(r.fitted.d)),
            ("fitted_slope_F".into(), num(r.fitted.f)),
            ("fitted_slope_Ding".into(), num(r.fitted.ding)),
            ("theory_slope_E".into(), opt(r.theory.e)),
            ("theory_slope_D".into(), opt(r.theory.d)),
            ("theory_slope_F".into(), num(r.theory.f)),
            ("theory_slope_Ding".into(), num(r.theory.ding)),
        ]
    } else {
        vec![("fitted_slope_Ding".into(), num(r.fitted_slope)), ("theory_slope_Ding".into(), num(r.theory_slope))]
    };
    let header: &[&str] = if entropy { &["t", "E", "D", "F", "Ding"] } else { &["t", "Ding"] };
    Ok(csv(header, &rows, &notes))
}

fn run(cmd: &Command) -> Result<Emitted> {
    match cmd {
        Command::Classify(a) => {
            let c = parse_curve(&a.curve)?;
            let out = ClassifyOut {
                k: classify(&c),
                volume: c.volume(),
                gibbs: gibbs_classify(&c),
                asymptotic: asymptotic_thresholds(&c).ok(),
            };
            Ok(Emitted::new(to_json(&out)?))
        }
        Command::Thresholds(a) => {
            let c = parse_curve(&a.curve)?;
            let out = if a.oracle {
                let r = lct_oracle(&c, a.n, a.reduced)?;
                ThresholdsOut { value: r.value(), n: a.n, reduced: a.reduced, method: "oracle", witness: r.witness }
            } else {
                let value = if a.reduced { gamma_n_reduced(&c, a.n)? } else { gamma_n(&c, a.n)?.into() };
                ThresholdsOut { value, n: a.n, reduced: a.reduced, method: "closed-form", witness: None }
            };
            Ok(Emitted::new(to_json(&out)?))
        }
        Command::Semistable(a) => {
            let cfg: P1Config =
                serde_json::from_str(&a.config).map_err(|e| Error::validation(format!("bad configuration JSON: {e}")))?;
            let group = match a.group {
                GroupArg::Pgl2 => SymmetryGroup::Pgl2,
                GroupArg::Cstar => SymmetryGroup::Cstar,
            };
            let out = serde_json::json!({
                "semistable": is_semistable(&cfg, group),
                "group": group,
                "n": cfg.len(),
                "multiplicities": cfg.multiplicities(),
            });
            Ok(Emitted::new(to_json(&out)?))
        }
        Command::Hypersimplex(a) => {
            let out = HypersimplexOut { n: a.n, vertices: hypersimplex_vertices(a.n)?, distortion_extremum: distortion_extremum(a.n)? };
            Ok(Emitted::new(to_json(&out)?))
        }
        Command::Selberg(a) => {
            let w = triple(&a.w)?;
            let out = serde_json::json!({ "w": w.w, "n": a.n, "log_z": selberg_log_z(&w, a.n)? });
            Ok(Emitted::new(to_json(&out)?))
        }
        Command::MabuchiInf(a) => {
            let w = triple(&a.w)?;
            Ok(Emitted::new(to_json(&serde_json::json!({ "w": w.w, "inf_mabuchi": inf_mabuchi(&w)? }))?))
        }
        Command::Converge(a) => {
            let sched = match a.schedule {
                ScheduleArg::Symmetric => Schedule::Symmetric,
                ScheduleArg::Fixed => {
                    Schedule::Fixed(triple(a.w.as_deref().ok_or_else(|| Error::validation("--w is required for the fixed schedule"))?)?)
                }
            };
            let rows = convergence_run(&sched, &a.n)?;
            let body = match a.format {
                Format::Json => to_json(&rows)?,
                Format::Csv => csv(
                    &["N", "logZ_over_N", "target", "error"],
                    &rows.iter().map(|r| vec![r.n.to_string(), num(r.log_z_over_n), num(r.target), num(r.error)]).collect::<Vec<_>>(),
                    &[],
                ),
            };
            Ok(Emitted::new(body))
        }
        Command::ArithZ(a) => {
            let model = match a.model {
                ModelArg::P1z => ArithModel::P1Z,
                ModelArg::Dw => ArithModel::P1ZDw(a.w.ok_or_else(|| Error::validation("--w is required for the two-point model"))?),
            };
            let log_z = arithmetic_log_z(a.n, model)?;
            let (w, m) = arithmetic_reduction(a.n, model)?;
            let out = serde_json::json!({
                "n": a.n,
                "log_z": log_z,
                "reduction": { "w": w.w, "points": m, "selberg_log_z": selberg_log_z(&w, m)? },
            });
            Ok(Emitted::new(to_json(&out)?))
        }
        Command::ToricRay(a) => {
            let ray = match a.ray {
                RayArg::Absval => Ray::AbsVal,
                RayArg::Translation => Ray::Translation,
            };
            let t_max = a.t.iter().cloned().fold(0.0, f64::max);
            let r = ray_slopes(ray, a.gamma, a.v, &a.t, &a.grid.grid(t_max))?;
            Ok(Emitted::new(ray_output(&r, a.format, true)?))
        }
        Command::DingRay(a) => {
            let t_max = a.t.iter().cloned().fold(0.0, f64::max);
            let r = ding_ray(a.gamma, a.v, &a.t, &a.grid.grid(t_max))?;
            Ok(Emitted::new(ray_output(&r, a.format, false)?))
        }
        Command::Sample(a) => {
            let p = a.chain.params()?;
            let run = run_chain(&p)?;
            let bootstrap = bootstrap_errors(&run.series, 200, p.seed)?;
            let out = SampleOut {
                params: p,
                observables: run.observables,
                bootstrap,
                series: a.series.then_some(run.series),
            };
            Ok(Emitted::seeded(to_json(&out)?, vec![p.seed]))
        }
        Command::Logz(a) => {
            let p = a.chain.params()?;
            if a.grid < 2 {
                return Err(Error::validation("--grid needs at least two points"));
            }
            let beta_grid: Vec<f64> = (0..a.grid).map(|i| p.beta * i as f64 / (a.grid - 1) as f64).collect();
            let ti = estimate_log_z(&p, &beta_grid, a.z0_samples)?;
            let direct = match a.direct {
                Some(s) => Some(direct_mc_log_z(p.n, p.w, p.beta, p.eps, s, p.seed ^ 0xd1ec7)?),
                None => None,
            };
            let seeds = (0..a.grid as u64).map(|i| p.seed.wrapping_add(i)).collect();
            Ok(Emitted::seeded(to_json(&LogzOut { params: p, beta_grid, ti, direct })?, seeds))
        }
    }
}

fn subcommand_name(cmd: &Command) -> String {
    serde_json::to_value(cmd)
        .ok()
        .and_then(|v| v.as_object().and_then(|o| o.keys().next().cloned()))
        .unwrap_or_default()
}

fn fail(e: &Error) -> ! {
    let rec = serde_json::json!({ "error": e.kind(), "message": e.to_string() });
    eprintln!("{rec}");
    std::process::exit(e.exit_code());
}

/// `--out json` / `--out csv` select the format and keep stdout.
fn apply_out_format(cli: &mut Cli) {
    let f = match cli.out.as_deref().and_then(|p| p.to_str()) {
        Some("json") => Format::Json,
        Some("csv") => Format::Csv,
        _ => return,
    };
    match &mut cli.command {
        Command::Converge(a) => a.format = f,
        Command::ToricRay(a) => a.format = f,
        Command::DingRay(a) => a.format = f,
        _ => return,
    }
    cli.out = None;
}

fn main() {
    let mut cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) if !e.use_stderr() => e.exit(),
        Err(e) => {
            let text = e.render().to_string();
            let msg = text.lines().next().unwrap_or("").trim_start_matches("error: ").to_string();
            fail(&Error::validation(msg))
        }
    };
    apply_out_format(&mut cli);
    if let Some(t) = cli.threads {
        if t == 0 {
            fail(&Error::validation("--threads must be positive"));
        }
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(t).build_global() {
            fail(&Error::validation(format!("cannot configure threads: {e}")));
        }
    }
    let started = Instant::now();
    let name = subcommand_name(&cli.command);
    let params = serde_json::to_value(&cli.command)
        .ok()
        .and_then(|v| v.get(&name).cloned())
        .unwrap_or(serde_json::Value::Null);
    let res = run(&cli.command)
        .and_then(|em| output::write(&em, &name, params, started, cli.out.as_deref(), cli.manifest.as_deref()));
    if let Err(e) = res {
        fail(&e);
    }
}
