//! Command-line front end.
//!
//! Exit status: 0 when every check passes or every point certifies, 2 for a
//! negative result (hypothesis violated, certification failed), 1 on error.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use serde_json::{json, Value};

use crate::comparison::{envelope_from_model, solve_comparison_ode, verify_decay, DecayStatus, DeltaProfile};
use crate::error::{invalid, Result};
use crate::geometry::{soliton_delta_rho, Manifold};
use crate::model_file::ModelSpec;
use crate::oracle::{estimate_essential_spectrum, BoundaryCondition};
use crate::report::{write_csv, write_json, Format, ModelRow, OdeRow, OracleRow, SmoothRow, VolumeRow, WeylRow};
use crate::smoothing::{distance_envelope, mollify_distance, MollifierKernel, SmoothOptions};
use crate::volume::{
    check_lemma1, check_lemma3, check_subexp_growth, compute_volume, soliton_area, soliton_chi,
    soliton_chi_derivative, soliton_volume, GrowthVerdict, TotalVolume,
};
use crate::weyl::{
    build_weyl_noncompact, build_weyl_soliton, certify_spectrum_point, eval_defect_with, instantiated_bound,
    sweep_spectrum, Certification, CertifyOptions, SolitonWeylParams, WeylContext, WeylParamsNonCompact,
};

/// Spectral experiments on rotationally symmetric manifolds and shrinking solitons.
#[derive(Debug, Parser)]
#[command(name = "spectral-lab", version)]
pub struct RunConfig {
    /// Output file (stdout when absent). In CSV mode the summary goes to `<out>.summary.json`.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    #[arg(long, global = true, value_enum, default_value_t = Format::Csv)]
    pub format: Format,
    /// Worker threads (default: all cores).
    #[arg(long, global = true)]
    pub threads: Option<usize>,
    /// Seed for randomized checks.
    #[arg(long, global = true, default_value_t = 0)]
    pub seed: u64,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Describe a model: volume and boundary area of geodesic balls.
    Model(ModelArgs),
    /// Solve the comparison equation g'' = δ g.
    Ode(OdeArgs),
    /// Mollify the distance function and check its bounds.
    Smooth(SmoothArgs),
    /// Evaluate or search for one test function.
    Weyl(WeylArgs),
    /// Certify a list of spectral values.
    Sweep(SweepArgs),
    /// Volume-growth and integral checks.
    Volume(VolumeArgs),
    /// Eigenvalues of truncated radial problems.
    Oracle(OracleArgs),
}

#[derive(Debug, Args)]
pub struct ModelArgs {
    #[arg(long)]
    pub model: PathBuf,
    #[arg(long, default_value_t = 100)]
    pub points: usize,
    /// Largest radius tabulated for soliton models.
    #[arg(long, default_value_t = 100.0)]
    pub r_max: f64,
}

#[derive(Debug, Args)]
pub struct OdeArgs {
    /// Envelope, e.g. `const:1` or `inv:1,1,2` for 1/(1+r)².
    #[arg(long, conflicts_with = "model", required_unless_present = "model")]
    pub delta: Option<String>,
    /// Take the envelope from a warped model instead.
    #[arg(long)]
    pub model: Option<PathBuf>,
    #[arg(long, visible_alias = "rmax")]
    pub r_max: Option<f64>,
    #[arg(long, default_value_t = 200)]
    pub points: usize,
    /// Decay threshold for u(r_max).
    #[arg(long, default_value_t = 0.01)]
    pub tol: f64,
}

#[derive(Debug, Args)]
pub struct SmoothArgs {
    #[arg(long)]
    pub model: PathBuf,
    #[arg(long, default_value_t = 2000)]
    pub points: usize,
}

#[derive(Debug, Args)]
pub struct CertifyArgs {
    #[arg(long)]
    pub model: PathBuf,
    #[arg(long, default_value_t = 2)]
    pub p: u32,
    #[arg(long, default_value_t = 0.05)]
    pub eps: f64,
    #[arg(long, default_value_t = 10.0)]
    pub mu: f64,
    /// Relative quadrature tolerance.
    #[arg(long, default_value_t = 1e-6)]
    pub rel_tol: f64,
    /// Largest radius a test function may reach.
    #[arg(long, default_value_t = 1_048_576.0)]
    pub budget: f64,
}

#[derive(Debug, Args)]
pub struct WeylArgs {
    #[command(flatten)]
    pub common: CertifyArgs,
    #[arg(long)]
    pub lambda: f64,
    /// Fixed parameters `R,x,y` (warped) or `b,l,a` (soliton) instead of a search.
    #[arg(long, value_parser = parse_list)]
    pub params: Option<NumList>,
}

#[derive(Debug, Args)]
pub struct SweepArgs {
    #[command(flatten)]
    pub common: CertifyArgs,
    /// Comma list `0,0.5,1` or grid `lo:hi:count`.
    #[arg(long, value_parser = parse_list)]
    pub lambda: NumList,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum VolumeCheck {
    Growth,
    Lemma1,
    Lemma3,
    SolitonId,
}

#[derive(Debug, Args)]
pub struct VolumeArgs {
    #[arg(long)]
    pub model: PathBuf,
    #[arg(long, value_enum)]
    pub check: VolumeCheck,
    #[arg(long, default_value_t = 0.1)]
    pub eps: f64,
    /// Basepoint radii for the growth check.
    #[arg(long, value_parser = parse_list)]
    pub d_list: Option<NumList>,
    /// Ball radii for the growth check.
    #[arg(long, value_parser = parse_list)]
    pub r_grid: Option<NumList>,
    /// Inner radius of the annulus for `lemma1`.
    #[arg(long)]
    pub r1: Option<f64>,
    /// Randomized (r, x) pairs for `lemma3`.
    #[arg(long, default_value_t = 100)]
    pub pairs: usize,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum BcChoice {
    Both,
    Dirichlet,
    Neumann,
}

#[derive(Debug, Args)]
pub struct OracleArgs {
    #[arg(long)]
    pub model: PathBuf,
    #[arg(long, default_value_t = 4.0)]
    pub cap: f64,
    #[arg(long = "L", value_parser = parse_list, default_value = "50,100,200")]
    pub l: NumList,
    #[arg(long = "N", default_value_t = 4000)]
    pub n: usize,
    #[arg(long, value_enum, default_value_t = BcChoice::Both)]
    pub bc: BcChoice,
}

/// Parsed numeric list.
#[derive(Clone, Debug, PartialEq)]
pub struct NumList(pub Vec<f64>);

/// `a,b,c` or `lo:hi:count` (inclusive, evenly spaced).
pub fn parse_list(s: &str) -> std::result::Result<NumList, String> {
    let num = |t: &str| t.trim().parse::<f64>().map_err(|e| format!("`{t}`: {e}"));
    let parts: Vec<&str> = s.split(':').collect();
    let values = match parts.as_slice() {
        [lo, hi, count] => {
            let (lo, hi) = (num(lo)?, num(hi)?);
            let count: usize = count.trim().parse().map_err(|e| format!("`{count}`: {e}"))?;
            if count < 2 {
                return Err("a grid needs at least two points".into());
            }
            (0..count).map(|i| lo + (hi - lo) * i as f64 / (count - 1) as f64).collect()
        }
        [_] => s.split(',').map(num).collect::<std::result::Result<Vec<_>, _>>()?,
        _ => return Err(format!("`{s}` is neither a list nor lo:hi:count")),
    };
    if values.is_empty() || values.iter().any(|v| !v.is_finite()) {
        return Err(format!("`{s}` must contain finite numbers"));
    }
    Ok(NumList(values))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Outcome {
    Pass,
    Negative,
}

impl Outcome {
    pub fn exit_code(self) -> i32 {
        match self {
            Outcome::Pass => 0,
            Outcome::Negative => 2,
        }
    }

    fn from_bool(pass: bool) -> Self {
        if pass { Outcome::Pass } else { Outcome::Negative }
    }
}

/// Parse arguments, run, report errors on stderr, and return the exit status.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let config = match RunConfig::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    match run(&config) {
        Ok(outcome) => outcome.exit_code(),
        Err(e) => {
            eprintln!("error: {e}");
            1
        }
    }
}

pub fn run(config: &RunConfig) -> Result<Outcome> {
    if let Some(threads) = config.threads {
        if threads == 0 {
            return Err(invalid("--threads must be positive"));
        }
        // A pool may already exist when called repeatedly in one process.
        let _ = rayon::ThreadPoolBuilder::new().num_threads(threads).build_global();
    }
    let out = Output { path: config.out.as_deref(), format: config.format };
    match &config.command {
        Command::Model(a) => run_model(a, &out),
        Command::Ode(a) => run_ode(a, &out),
        Command::Smooth(a) => run_smooth(a, &out),
        Command::Weyl(a) => run_weyl(a, &out),
        Command::Sweep(a) => run_sweep(a, &out),
        Command::Volume(a) => run_volume(a, config.seed, &out),
        Command::Oracle(a) => run_oracle(a, &out),
    }
}

struct Output<'a> {
    path: Option<&'a Path>,
    format: Format,
}

impl Output<'_> {
    fn emit<T: Serialize>(&self, rows: &[T], summary: Value) -> Result<()> {
        let mut sink: Box<dyn Write> = match self.path {
            Some(p) => Box::new(BufWriter::new(File::create(p)?)),
            None => Box::new(std::io::stdout().lock()),
        };
        match self.format {
            Format::Json => write_json(rows, &summary, &mut sink)?,
            Format::Csv => {
                write_csv(rows, &mut sink)?;
                match self.path {
                    Some(p) => {
                        let mut name = p.as_os_str().to_owned();
                        name.push(".summary.json");
                        let f = BufWriter::new(File::create(PathBuf::from(name))?);
                        serde_json::to_writer_pretty(f, &summary)?;
                    }
                    None => eprintln!("{}", serde_json::to_string_pretty(&summary)?),
                }
            }
        }
        sink.flush()?;
        Ok(())
    }
}

fn positive(name: &str, v: f64) -> Result<f64> {
    if v > 0.0 && v.is_finite() {
        Ok(v)
    } else {
        Err(invalid(format!("--{name} must be positive, got {v}")))
    }
}

fn geometric(lo: f64, hi: f64, count: usize) -> Vec<f64> {
    (0..count).map(|i| lo * (hi / lo).powf(i as f64 / (count - 1).max(1) as f64)).collect()
}

fn run_model(a: &ModelArgs, out: &Output) -> Result<Outcome> {
    if a.points < 2 {
        return Err(invalid("--points must be at least 2"));
    }
    let manifold = ModelSpec::load(&a.model)?;
    let (lo, hi) = match &manifold {
        Manifold::Warped(m) => (m.r_lo(), m.r_max()),
        Manifold::Soliton(s) => (s.rho_min(), positive("r-max", a.r_max)?),
    };
    let grid: Vec<f64> = (1..=a.points).map(|i| lo + (hi - lo) * i as f64 / a.points as f64).collect();
    let data = compute_volume(&manifold, &grid)?;
    let rows: Vec<ModelRow> = (0..grid.len())
        .map(|i| ModelRow { r: data.radii[i], volume: data.volume[i], area: data.area[i] })
        .collect();
    let total = match data.total_volume {
        TotalVolume::Finite(v) => json!(v),
        TotalVolume::Infinite => json!("infinite"),
    };
    let summary = match &manifold {
        Manifold::Warped(m) => json!({
            "kind": m.kind(), "n": m.n(), "r_lo": m.r_lo(), "r_max": m.r_max(),
            "has_pole": m.has_pole(), "total_volume": total,
        }),
        Manifold::Soliton(s) => json!({
            "structure": s.structure(), "n": s.n(), "sphere_dim": s.sphere_dim(),
            "scalar_curvature": s.scalar_curvature(), "rho_min": s.rho_min(), "total_volume": total,
        }),
    };
    out.emit(&rows, summary)?;
    Ok(Outcome::Pass)
}

fn run_ode(a: &OdeArgs, out: &Output) -> Result<Outcome> {
    if a.points < 2 {
        return Err(invalid("--points must be at least 2"));
    }
    positive("tol", a.tol)?;
    let (delta, r_max, envelope_flag) = match (&a.delta, &a.model) {
        (Some(spec), _) => {
            let r_max = a.r_max.ok_or_else(|| invalid("--r-max is required with --delta"))?;
            (DeltaProfile::parse(spec)?, positive("r-max", r_max)?, None)
        }
        (None, Some(path)) => {
            let manifold = ModelSpec::load(path)?;
            let model = manifold.as_warped()?;
            let env = envelope_from_model(model, a.tol)?;
            let r_max = a.r_max.unwrap_or(model.r_max()).min(model.r_max());
            (env.delta, r_max, Some(env.asymptotically_nonnegative))
        }
        (None, None) => return Err(invalid("either --delta or --model is required")),
    };
    let sol = solve_comparison_ode(&delta, r_max)?;
    let decay = verify_decay(&sol, a.tol);
    let rows: Vec<OdeRow> = geometric(sol.r_min(), r_max, a.points)
        .into_iter()
        .map(|r| OdeRow { r, u: sol.u(r), g_log: sol.log_g(r) })
        .collect();
    let summary = json!({
        "r_max": r_max,
        "delta_check": delta.check(r_max, a.tol),
        "asymptotically_nonnegative": envelope_flag,
        "decay": decay,
        "stats": sol.stats(),
    });
    out.emit(&rows, summary)?;
    Ok(Outcome::from_bool(decay.status == DecayStatus::Pass))
}

fn run_smooth(a: &SmoothArgs, out: &Output) -> Result<Outcome> {
    if a.points == 0 {
        return Err(invalid("--points must be positive"));
    }
    let manifold = ModelSpec::load(&a.model)?;
    let model = manifold.as_warped()?;
    let (delta, _) = distance_envelope(model)?;
    let opts = SmoothOptions { points: a.points, ..SmoothOptions::default() };
    let smoothed = mollify_distance(model, &delta, &MollifierKernel::default(), &opts)?;
    let rows: Vec<SmoothRow> = smoothed
        .samples()
        .iter()
        .map(|s| SmoothRow {
            r: s.r,
            rho_tilde: s.rho_tilde,
            d_rho_tilde: s.d_rho_tilde,
            laplacian_rho_tilde: s.laplacian_rho_tilde,
            bound_a_margin: s.bound_a_margin,
            bound_b_margin: s.bound_b_margin,
        })
        .collect();
    let report = smoothed.report();
    out.emit(&rows, json!({ "bounds": report, "pass": report.pass() }))?;
    Ok(Outcome::from_bool(report.pass()))
}

impl CertifyArgs {
    fn validate(&self) -> Result<CertifyOptions> {
        if self.p != 1 && self.p != 2 {
            return Err(invalid(format!("--p must be 1 or 2, got {}", self.p)));
        }
        positive("eps", self.eps)?;
        positive("rel-tol", self.rel_tol)?;
        positive("budget", self.budget)?;
        if !(self.mu >= 0.0) {
            return Err(invalid("--mu must be nonnegative"));
        }
        Ok(CertifyOptions { budget: self.budget, rel_tol: self.rel_tol, ..CertifyOptions::default() })
    }
}

fn certification_row(c: &Certification) -> WeylRow {
    let cols = c.param_columns();
    WeylRow {
        lambda: c.lambda,
        p: c.p,
        quotient: c.report.as_ref().map(|r| r.quotient),
        defect_norm: c.report.as_ref().map(|r| r.defect_norm),
        phi_norm: c.report.as_ref().map(|r| r.phi_norm),
        r_or_l: cols.map(|c| c.0),
        x_or_b: cols.map(|c| c.1),
        y_or_a: cols.map(|c| c.2),
        certified: c.certified,
    }
}

fn certification_summary(c: &Certification) -> Value {
    json!({
        "lambda": c.lambda,
        "certified": c.certified,
        "best_quotient": c.best_quotient,
        "binding_term": c.binding_term,
        "dominance_violations": c.dominance_violations,
        "selection_found": c.selection_found,
        "attempts": c.attempts.len(),
        "failure": c.failure,
    })
}

fn check_lambda(lambda: f64) -> Result<()> {
    if lambda >= 0.0 && lambda.is_finite() {
        Ok(())
    } else {
        Err(invalid(format!("--lambda values must be nonnegative, got {lambda}")))
    }
}

fn run_weyl(a: &WeylArgs, out: &Output) -> Result<Outcome> {
    let opts = a.common.validate()?;
    check_lambda(a.lambda)?;
    let manifold = ModelSpec::load(&a.common.model)?;
    let c = &a.common;
    let Some(NumList(params)) = &a.params else {
        let ctx = WeylContext::new(manifold)?;
        let cert = certify_spectrum_point(&ctx, a.lambda, c.eps, c.mu, c.p, &opts)?;
        out.emit(&[certification_row(&cert)], certification_summary(&cert))?;
        return Ok(Outcome::from_bool(cert.certified));
    };
    let [p0, p1, p2] = params[..] else {
        return Err(invalid("--params takes exactly three numbers"));
    };
    let phi = match &manifold {
        Manifold::Warped(model) => {
            let (delta, _) = distance_envelope(model)?;
            let smoothed = mollify_distance(model, &delta, &MollifierKernel::default(), &SmoothOptions::default())?;
            let params = WeylParamsNonCompact { scale_r: p0, x: p1, y: p2, mu: c.mu, lambda: a.lambda, p: c.p };
            build_weyl_noncompact(model, &smoothed, &params)?
        }
        Manifold::Soliton(model) => {
            let params = SolitonWeylParams { b: p0, l: p1, a: p2, mu: c.mu, lambda: a.lambda, p: c.p };
            build_weyl_soliton(model, &params)?
        }
    };
    let report = eval_defect_with(&phi, c.p, c.rel_tol)?;
    let bound = instantiated_bound(&phi, &report)?;
    let certified = report.quotient < c.eps;
    let (r_or_l, x_or_b, y_or_a) = report.params.columns();
    let row = WeylRow {
        lambda: a.lambda,
        p: c.p,
        quotient: Some(report.quotient),
        defect_norm: Some(report.defect_norm),
        phi_norm: Some(report.phi_norm),
        r_or_l: Some(r_or_l),
        x_or_b: Some(x_or_b),
        y_or_a: Some(y_or_a),
        certified,
    };
    let summary = json!({ "report": report, "bound": bound, "binding_term": bound.binding_term() });
    out.emit(&[row], summary)?;
    Ok(Outcome::from_bool(certified))
}

fn run_sweep(a: &SweepArgs, out: &Output) -> Result<Outcome> {
    let opts = a.common.validate()?;
    for &l in &a.lambda.0 {
        check_lambda(l)?;
    }
    let c = &a.common;
    let ctx = WeylContext::new(ModelSpec::load(&c.model)?)?;
    let certs = sweep_spectrum(&ctx, &a.lambda.0, c.eps, c.mu, c.p, &opts);
    let rows: Vec<WeylRow> = certs.iter().map(certification_row).collect();
    let all = certs.iter().all(|c| c.certified);
    let summary = json!({
        "eps": c.eps, "mu": c.mu, "p": c.p,
        "all_certified": all,
        "dominance_violations": certs.iter().map(|c| c.dominance_violations).sum::<usize>(),
        "points": certs.iter().map(certification_summary).collect::<Vec<_>>(),
    });
    out.emit(&rows, summary)?;
    Ok(Outcome::from_bool(all))
}

fn run_volume(a: &VolumeArgs, seed: u64, out: &Output) -> Result<Outcome> {
    positive("eps", a.eps)?;
    let manifold = ModelSpec::load(&a.model)?;
    match a.check {
        VolumeCheck::Growth => {
            let model = manifold.as_warped()?;
            let (lo, hi) = (model.r_lo(), model.r_max());
            let d_list = a.d_list.clone().map(|l| l.0).unwrap_or_else(|| {
                [0.0, hi / 400.0, hi / 40.0, hi / 4.0].iter().map(|d| d.max(lo)).collect()
            });
            let d_max = d_list.iter().copied().fold(lo, f64::max);
            let r_grid = match &a.r_grid {
                Some(l) => l.0.clone(),
                None if hi - d_max > 2.0 => geometric(1.0, 0.95 * (hi - d_max), 40),
                None => return Err(invalid("model too small for the default growth grid")),
            };
            let rep = check_subexp_growth(model, a.eps, &d_list, &r_grid)?;
            let rows: Vec<VolumeRow> = rep
                .samples
                .iter()
                .map(|s| VolumeRow {
                    check: "growth".into(),
                    d_or_x: Some(s.d),
                    r: s.r,
                    lhs: s.lower_ratio,
                    rhs: s.upper_ratio,
                    holds: !rep.witnesses.contains(s),
                })
                .collect();
            let summary = json!({
                "verdict": rep.verdict, "eps": rep.eps, "best_constant": rep.best_constant,
                "lower_constant": rep.lower_constant, "witnesses": rep.witnesses,
            });
            out.emit(&rows, summary)?;
            Ok(Outcome::from_bool(rep.verdict == GrowthVerdict::SatisfiedOnSurrogate))
        }
        VolumeCheck::Lemma1 => {
            let model = manifold.as_warped()?;
            let (delta, _) = distance_envelope(model)?;
            let smoothed = mollify_distance(model, &delta, &MollifierKernel::default(), &SmoothOptions::default())?;
            let (lo, hi) = smoothed.span();
            let r1 = a.r1.unwrap_or(lo + 1.0);
            if !(r1 >= lo && r1 < hi) {
                return Err(invalid(format!("--r1 must lie in [{lo}, {hi})")));
            }
            let rows = (1..=16)
                .map(|i| {
                    let r = r1 + (hi - r1) * i as f64 / 16.0;
                    let rep = check_lemma1(model, &smoothed, r1, r)?;
                    Ok(VolumeRow { check: "lemma1".into(), d_or_x: Some(r1), r, lhs: rep.lhs, rhs: rep.rhs, holds: rep.pass })
                })
                .collect::<Result<Vec<_>>>()?;
            let all = rows.iter().all(|r| r.holds);
            out.emit(&rows, json!({ "r1": r1, "all_hold": all }))?;
            Ok(Outcome::from_bool(all))
        }
        VolumeCheck::Lemma3 => {
            let model = manifold.as_soliton()?;
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let lo = model.rho_min() + 0.1;
            let mut rows = Vec::with_capacity(2 * a.pairs);
            for _ in 0..a.pairs {
                let r = rng.gen_range(lo..100.0);
                let x = r * rng.gen_range(1.0..10.0);
                let rep = check_lemma3(model, r, x)?;
                let tol = 1.0 + 1e-9;
                rows.push(VolumeRow {
                    check: "lemma3-l1".into(),
                    d_or_x: Some(x),
                    r,
                    lhs: rep.l1_lhs,
                    rhs: rep.l1_rhs,
                    holds: rep.l1_lhs <= rep.l1_rhs * tol,
                });
                rows.push(VolumeRow {
                    check: "lemma3-l2".into(),
                    d_or_x: Some(x),
                    r,
                    lhs: rep.l2_lhs,
                    rhs: rep.l2_rhs,
                    holds: rep.l2_lhs <= rep.l2_rhs * tol,
                });
            }
            let violations = rows.iter().filter(|r| !r.holds).count();
            out.emit(&rows, json!({ "pairs": a.pairs, "seed": seed, "violations": violations }))?;
            Ok(Outcome::from_bool(violations == 0))
        }
        VolumeCheck::SolitonId => {
            let model = manifold.as_soliton()?;
            let n = model.n() as f64;
            let grid = geometric(model.rho_min() + 0.1, 1000.0, 200);
            let rows: Vec<VolumeRow> = grid
                .iter()
                .map(|&r| {
                    let lhs = n * soliton_volume(model, r) - 2.0 * soliton_chi(model, r);
                    let rhs = r * soliton_area(model, r) - 4.0 / r * soliton_chi_derivative(model, r);
                    let holds = (lhs - rhs).abs() <= 1e-10 * lhs.abs().max(rhs.abs());
                    VolumeRow { check: "soliton-id".into(), d_or_x: None, r, lhs, rhs, holds }
                })
                .collect();
            let s_grid = geometric(1e-3, 1e3, 200);
            let normalization = s_grid.iter().map(|&s| model.normalization_residual(s).abs()).fold(0.0, f64::max);
            let grad_rho = s_grid
                .iter()
                .map(|&s| (model.grad_rho_sq(s) - model.grad_rho_sq_identity(s)).abs())
                .fold(0.0, f64::max);
            let lap = soliton_delta_rho(model);
            let all = rows.iter().all(|r| r.holds) && normalization <= 1e-12 && grad_rho <= 1e-12;
            let summary = json!({
                "normalization_residual": normalization,
                "grad_rho_residual": grad_rho,
                "delta_rho_at_rho_min": lap.value(model.rho_min() + 0.1),
                "all_hold": all,
            });
            out.emit(&rows, summary)?;
            Ok(Outcome::from_bool(all))
        }
    }
}

fn run_oracle(a: &OracleArgs, out: &Output) -> Result<Outcome> {
    positive("cap", a.cap)?;
    let manifold = ModelSpec::load(&a.model)?;
    let model = manifold.as_warped()?;
    let rep = estimate_essential_spectrum(model, a.cap, &a.l.0, a.n)?;
    let keep = |bc: BoundaryCondition| match a.bc {
        BcChoice::Both => true,
        BcChoice::Dirichlet => bc == BoundaryCondition::Dirichlet,
        BcChoice::Neumann => bc == BoundaryCondition::Neumann,
    };
    let rows: Vec<OracleRow> = rep
        .rows
        .iter()
        .filter(|r| keep(r.bc))
        .flat_map(|r| {
            r.eigenvalues.iter().enumerate().map(|(index, &eigenvalue)| OracleRow { l: r.l, bc: r.bc, index, eigenvalue })
        })
        .collect();
    let truncations: Vec<Value> = rep
        .rows
        .iter()
        .map(|r| json!({ "L": r.l, "bc": r.bc, "count": r.eigenvalues.len(), "max_gap": r.max_gap, "bottom": r.bottom }))
        .collect();
    let summary = json!({
        "verdict": { "fills": rep.fills, "cap": rep.cap, "gap_ratios": rep.gap_ratios, "bottoms": rep.bottoms,
                     "bracketing_holds": rep.bracketing_holds },
        "truncations": truncations,
    });
    out.emit(&rows, summary)?;
    Ok(Outcome::from_bool(rep.fills))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn lists_and_grids() {
        assert_eq!(parse_list("0,0.5,1").unwrap().0, vec![0.0, 0.5, 1.0]);
        assert_eq!(parse_list("0:1:3").unwrap().0, vec![0.0, 0.5, 1.0]);
        assert!(parse_list("0:1").is_err());
        assert!(parse_list("a,b").is_err());
        assert!(parse_list("0:1:1").is_err());
    }

    #[test]
    fn config_parses() {
        let c = RunConfig::try_parse_from([
            "spectral-lab", "sweep", "--model", "m.json", "--lambda", "0,1", "--p", "1", "--format", "json",
        ])
        .unwrap();
        assert_eq!(c.format, Format::Json);
        assert!(matches!(c.command, Command::Sweep(_)));
        assert!(RunConfig::try_parse_from(["spectral-lab", "sweep", "--model", "m", "--lambda", "1", "--bogus", "2"]).is_err());
        let c = RunConfig::try_parse_from(["spectral-lab", "oracle", "--model", "m", "--L", "10,20", "--N", "64"]).unwrap();
        let Command::Oracle(o) = c.command else { panic!() };
        assert_eq!((o.l.0, o.n), (vec![10.0, 20.0], 64));
    }
}
