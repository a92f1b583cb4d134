use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use anyhow::{anyhow, bail, Context, Result};
use plauth::covmodel::{trial_seed, DEFAULT_SIGMA};
use plauth::format::{parse_scenario, write_scenario, SolutionRecord};
use plauth::gaussian_info::uniform_alpha_grid;
use plauth::linalg::c;
use plauth::solver::{perturb_and_check, Problem};
use plauth::{region_boundary, Covariance, Field, ScenarioSpec, Solution};
use serde::Serialize;

use crate::config::{FileLayer, SolverConfig, COMMON_KEYS, DEFAULT_SEED};
use crate::output::{default_jobs, emit, opt, par_map, Manifest};
use crate::{Common, PerturbArgs, RegionArgs, ScenarioArgs, SolveArgs, SweepArgs, WishartArgs};

/// A result that is not an input problem: non-finite cost, divergence.
#[derive(Debug)]
pub struct NumericalFailure(pub String);

impl std::fmt::Display for NumericalFailure {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "numerical failure: {}", self.0)
    }
}

impl std::error::Error for NumericalFailure {}

pub fn exit_code(e: &anyhow::Error) -> u8 {
    for cause in e.chain() {
        if cause.is::<NumericalFailure>() {
            return 2;
        }
        if let Some(err) = cause.downcast_ref::<plauth::Error>() {
            return match err {
                plauth::Error::Diverged { .. } | plauth::Error::ResampleLimit(_) | plauth::Error::NonFiniteProbe(_) => 2,
                _ => 1,
            };
        }
    }
    1
}

fn keys<'a>(extra: &[&'a str]) -> Vec<&'a str> {
    COMMON_KEYS.iter().copied().chain(extra.iter().copied()).collect()
}

const SCENARIO_KEYS: [&str; 5] = ["scenario", "n", "rho", "sigma", "tau"];

struct Run {
    file: FileLayer,
    out: Option<PathBuf>,
    jobs: usize,
}

impl Run {
    fn new(common: &Common, extra: &[&str]) -> Result<Self> {
        let file = FileLayer::load(common.config.as_deref(), &keys(extra))?;
        let out = file.pick_opt(common.out.clone(), "out")?;
        let jobs = file.pick(common.jobs, "jobs", default_jobs())?;
        Ok(Self { file, out, jobs })
    }
}

/// How the scenario was given, as logged in the manifest.
#[derive(Debug, Clone, Serialize)]
#[serde(tag = "source", rename_all = "snake_case")]
enum ScenarioConfig {
    File { path: PathBuf, scenario: String },
    IdentityBlock { n: usize, rho: f64, sigma: f64, tau: f64 },
}

impl ScenarioConfig {
    fn resolve(args: &ScenarioArgs, file: &FileLayer) -> Result<Self> {
        if let Some(path) = file.pick_opt(args.scenario.clone(), "scenario")? {
            let text = std::fs::read_to_string(&path).with_context(|| format!("reading scenario {}", path.display()))?;
            let spec = parse_scenario::<f64>(&text)
                .map_err(anyhow::Error::new)
                .with_context(|| format!("scenario {}", path.display()))?;
            return Ok(ScenarioConfig::File { path, scenario: write_scenario(&spec) });
        }
        let n = file.pick_opt(args.n, "n")?.ok_or_else(|| anyhow!("give --scenario or --n and --rho"))?;
        let rho = file.pick_opt(args.rho, "rho")?.ok_or_else(|| anyhow!("--rho is required with --n"))?;
        let sigma = file.pick(args.sigma, "sigma", DEFAULT_SIGMA)?;
        let tau = file.pick(args.tau, "tau", sigma * rho)?;
        Ok(ScenarioConfig::IdentityBlock { n, rho, sigma, tau })
    }

    fn spec(&self) -> Result<ScenarioSpec<f64>> {
        Ok(match self {
            ScenarioConfig::File { scenario, .. } => parse_scenario(scenario)?,
            ScenarioConfig::IdentityBlock { n, rho, sigma, tau } => {
                ScenarioSpec::IdentityBlock { n: *n, rho: c(*rho), sigma: c(*sigma), tau: c(*tau) }
            }
        })
    }

    /// Build and validate the covariance.
    fn covariance(&self) -> Result<Covariance> {
        let (k, _) = self.spec()?.build()?;
        k.validate().into_result::<f64>().context("invalid scenario")?;
        Ok(k)
    }

    fn pairs(&self) -> Vec<(String, String)> {
        match self {
            ScenarioConfig::File { path, .. } => vec![("scenario".into(), path.display().to_string())],
            ScenarioConfig::IdentityBlock { n, rho, sigma, tau } => vec![
                ("n".into(), n.to_string()),
                ("rho".into(), rho.to_string()),
                ("sigma".into(), sigma.to_string()),
                ("tau".into(), tau.to_string()),
            ],
        }
    }
}

fn solve_checked(k: &Covariance, solver: &SolverConfig) -> Result<Solution> {
    let sol = plauth::solver::solve(k, &solver.options())?;
    if !sol.d_star.is_finite() || !sol.j_star.is_finite() {
        return Err(NumericalFailure(format!("non-finite cost J* = {}", sol.j_star)).into());
    }
    Ok(sol)
}

#[derive(Debug, Serialize)]
struct SolveConfig {
    scenario: ScenarioConfig,
    solver: SolverConfig,
}

#[derive(Debug, Serialize)]
struct SolveSummary {
    j_star: f64,
    d_star: f64,
    iterations: usize,
    converged: bool,
    projected: bool,
    stationarity_residual: f64,
    j_cf: Option<f64>,
    eta: Option<f64>,
}

pub fn solve(a: SolveArgs) -> Result<()> {
    let run = Run::new(&a.common, &SCENARIO_KEYS)?;
    let solver = SolverConfig::resolve(&a.common, &run.file)?;
    let scenario = ScenarioConfig::resolve(&a.scenario, &run.file)?;
    let k = scenario.covariance()?;
    let sol = solve_checked(&k, &solver)?;

    println!(
        "J*={} D*={} iterations={} converged={} projected={} residual={:e}",
        sol.j_star,
        sol.d_star,
        sol.iterations,
        sol.converged,
        sol.projected(),
        sol.stationarity_residual
    );
    let summary = SolveSummary {
        j_star: sol.j_star,
        d_star: sol.d_star,
        iterations: sol.iterations,
        converged: sol.converged,
        projected: sol.projected(),
        stationarity_residual: sol.stationarity_residual,
        j_cf: sol.relaxed.as_ref().map(|r| r.j_cf),
        eta: sol.eta(),
    };
    let pairs = scenario.pairs().into_iter().chain(solver.pairs()).collect();
    let manifest = Manifest::new("solve", SolveConfig { scenario, solver }, summary);
    match &run.out {
        Some(path) => emit(Some(path), &SolutionRecord::new(k, &sol, pairs).to_text(), &manifest),
        None => emit(None, "", &manifest),
    }
}

#[derive(Debug, Serialize)]
struct RegionConfig {
    d_star: Option<f64>,
    scenario: Option<ScenarioConfig>,
    solver: Option<SolverConfig>,
    alpha: Vec<f64>,
}

pub fn region(a: RegionArgs) -> Result<()> {
    let run = Run::new(&a.common, &[&SCENARIO_KEYS[..], &["d_star", "alpha_points", "alpha"]].concat())?;
    let alpha = match run.file.pick_opt(a.alpha, "alpha")? {
        Some(grid) => grid,
        None => uniform_alpha_grid(run.file.pick(a.alpha_points, "alpha_points", 99)?),
    };
    let mut cfg = RegionConfig { d_star: run.file.pick_opt(a.d_star, "d_star")?, scenario: None, solver: None, alpha };
    let d_star = match cfg.d_star {
        Some(d) => d,
        None => {
            let scenario = ScenarioConfig::resolve(&a.scenario, &run.file)
                .context("region needs --d-star or a scenario")?;
            let solver = SolverConfig::resolve(&a.common, &run.file)?;
            let d = solve_checked(&scenario.covariance()?, &solver)?.d_star;
            cfg.scenario = Some(scenario);
            cfg.solver = Some(solver);
            d
        }
    };
    let bound = region_boundary(d_star, &cfg.alpha)?;
    #[derive(Serialize)]
    struct Summary {
        d_star: f64,
        points: usize,
    }
    let manifest = Manifest::new("region", cfg, Summary { d_star, points: bound.points.len() });
    emit(run.out.as_deref(), &bound.to_csv(), &manifest)
}

#[derive(Debug, Serialize)]
struct SweepConfig {
    n: Vec<usize>,
    rho: Vec<f64>,
    sigma: f64,
    /// `null` means `sigma * rho` per row.
    tau: Option<f64>,
    solver: SolverConfig,
}

pub fn sweep(a: SweepArgs) -> Result<()> {
    let run = Run::new(&a.common, &["n", "rho", "sigma", "tau"])?;
    let cfg = SweepConfig {
        n: run.file.pick(a.n, "n", vec![1, 2, 4, 8, 16, 32, 64])?,
        rho: run.file.pick(a.rho, "rho", vec![0.1, 0.3, 0.5, 0.7])?,
        sigma: run.file.pick(a.sigma, "sigma", DEFAULT_SIGMA)?,
        tau: run.file.pick_opt(a.tau, "tau")?,
        solver: SolverConfig::resolve(&a.common, &run.file)?,
    };
    let grid: Vec<(usize, f64)> = cfg.n.iter().flat_map(|&n| cfg.rho.iter().map(move |&r| (n, r))).collect();
    let rows = par_map(&grid, run.jobs, |&(n, rho)| -> Result<Solution> {
        let scenario = ScenarioConfig::IdentityBlock { n, rho, sigma: cfg.sigma, tau: cfg.tau.unwrap_or(cfg.sigma * rho) };
        solve_checked(&scenario.covariance()?, &cfg.solver).with_context(|| format!("n={n} rho={rho}"))
    });

    let mut csv = String::from("n,rho,J_cf,J_iter,D_iter,eta,projected,iters\n");
    let mut unconverged = 0;
    for (&(n, rho), row) in grid.iter().zip(rows) {
        let s = row?;
        unconverged += usize::from(!s.converged);
        let j_cf = s.relaxed.as_ref().map(|r| r.j_cf);
        let _ = writeln!(
            csv,
            "{n},{rho},{},{},{},{},{},{}",
            opt(j_cf),
            s.j_star,
            s.d_star,
            opt(s.eta()),
            s.projected(),
            s.iterations
        );
    }
    #[derive(Serialize)]
    struct Summary {
        rows: usize,
        unconverged: usize,
    }
    let manifest = Manifest::new("sweep", &cfg, Summary { rows: grid.len(), unconverged });
    emit(run.out.as_deref(), &csv, &manifest)
}

#[derive(Debug, Serialize)]
struct WishartConfig {
    n: Vec<usize>,
    trials: u64,
    seed: u64,
    field: String,
    /// Trial `t` at dimension `n` draws with `trial_seed(seed, n, t)`.
    seed_rule: &'static str,
    solver: SolverConfig,
}

#[derive(Debug, Serialize)]
struct WishartSummary {
    n: usize,
    trials: u64,
    feasible: u64,
    feasible_pct: f64,
    converged: u64,
    /// `D_iter` sorted ascending; sample `i` sits at CDF level `(i+1)/trials`.
    d_star_cdf: Vec<f64>,
}

pub fn wishart(a: WishartArgs) -> Result<()> {
    let run = Run::new(&a.common, &["n", "trials", "field"])?;
    let field_name: String = run.file.pick(a.field, "field", "real".into())?;
    let field: Field = field_name.parse().map_err(|e: String| anyhow!(e))?;
    let cfg = WishartConfig {
        n: run.file.pick(a.n, "n", vec![2, 4, 8, 16, 32])?,
        trials: run.file.pick(a.trials, "trials", 200)?,
        seed: run.file.pick(a.common.seed, "seed", DEFAULT_SEED)?,
        field: field.to_string(),
        seed_rule: "h(h(h(seed) ^ n) ^ trial), h = splitmix64 finaliser",
        solver: SolverConfig::resolve(&a.common, &run.file)?,
    };
    if cfg.n.contains(&0) {
        bail!("n must be positive");
    }
    let grid: Vec<(usize, u64)> = cfg.n.iter().flat_map(|&n| (0..cfg.trials).map(move |t| (n, t))).collect();
    let rows = par_map(&grid, run.jobs, |&(n, t)| -> Result<Solution> {
        let k = ScenarioSpec::<f64>::Wishart { n, seed: trial_seed(cfg.seed, n, t), field }.build()?.0;
        solve_checked(&k, &cfg.solver).with_context(|| format!("n={n} trial={t}"))
    });

    let mut csv = String::from("n,trial,feasible_cf,J_cf,J_iter,D_iter,eta,iters\n");
    let mut summary: Vec<WishartSummary> = cfg
        .n
        .iter()
        .map(|&n| WishartSummary { n, trials: cfg.trials, feasible: 0, feasible_pct: 0.0, converged: 0, d_star_cdf: vec![] })
        .collect();
    for (&(n, t), row) in grid.iter().zip(rows) {
        let s = row?;
        let relaxed = s.relaxed.as_ref();
        let feasible = relaxed.is_some_and(|r| r.feasible);
        let _ = writeln!(
            csv,
            "{n},{t},{feasible},{},{},{},{},{}",
            opt(relaxed.map(|r| r.j_cf)),
            s.j_star,
            s.d_star,
            opt(s.eta()),
            s.iterations
        );
        let entry = summary.iter_mut().find(|e| e.n == n).expect("n is in the grid");
        entry.feasible += u64::from(feasible);
        entry.converged += u64::from(s.converged);
        entry.d_star_cdf.push(s.d_star);
    }
    for e in &mut summary {
        e.feasible_pct = if e.trials == 0 { 0.0 } else { 100.0 * e.feasible as f64 / e.trials as f64 };
        e.d_star_cdf.sort_by(f64::total_cmp);
    }
    let manifest = Manifest::new("wishart", &cfg, summary);
    emit(run.out.as_deref(), &csv, &manifest)
}

#[derive(Debug, Serialize)]
struct PerturbConfig {
    solution: PathBuf,
    trials: usize,
    scale: f64,
    seed: u64,
}

#[derive(Debug, Serialize)]
struct PerturbReportJson {
    j_star: f64,
    min_j_found: f64,
    improved: bool,
    max_improvement: f64,
    /// `J(perturbed) - J*` per trial; `null` for a singular trial.
    deltas: Vec<f64>,
}

fn load_solution(path: &Path) -> Result<SolutionRecord> {
    let text = std::fs::read_to_string(path).with_context(|| format!("reading solution {}", path.display()))?;
    SolutionRecord::parse(&text)
        .map_err(anyhow::Error::new)
        .with_context(|| format!("solution {}", path.display()))
}

pub fn perturb(a: PerturbArgs) -> Result<()> {
    let run = Run::new(&a.common, &["solution", "trials", "scale"])?;
    let cfg = PerturbConfig {
        solution: run.file.pick_opt(a.solution, "solution")?.ok_or_else(|| anyhow!("--solution is required"))?,
        trials: run.file.pick(a.trials, "trials", 1000)?,
        scale: run.file.pick(a.scale, "scale", 0.01)?,
        seed: run.file.pick(a.common.seed, "seed", DEFAULT_SEED)?,
    };
    if !(cfg.scale >= 0.0 && cfg.scale.is_finite()) {
        bail!("scale must be a nonnegative number, got {}", cfg.scale);
    }
    let record = load_solution(&cfg.solution)?;
    record.covariance.validate().into_result::<f64>().context("invalid scenario in solution file")?;
    let p = Problem::new(&record.covariance)?;
    let sol = Solution {
        params: record.params.clone(),
        j_star: record.j_star,
        d_star: record.d_star,
        iterations: record.iterations,
        converged: record.converged,
        stationarity_residual: record.stationarity_residual,
        history: vec![],
        regularized_steps: 0,
        monotone: true,
        relaxed: None,
    };
    let r = perturb_and_check(&p, &sol, cfg.scale, cfg.trials, cfg.seed);
    if !r.j_star.is_finite() {
        return Err(NumericalFailure(format!("cost at the saved solution is {}", r.j_star)).into());
    }
    let report = PerturbReportJson {
        j_star: r.j_star,
        min_j_found: r.min_j_found,
        improved: r.improved,
        max_improvement: r.max_improvement(),
        deltas: r.deltas.clone(),
    };
    let text = serde_json::to_string_pretty(&report)? + "\n";
    #[derive(Serialize)]
    struct Summary {
        improved: bool,
        max_improvement: f64,
    }
    let manifest = Manifest::new("perturb", &cfg, Summary { improved: r.improved, max_improvement: r.max_improvement() });
    emit(run.out.as_deref(), &text, &manifest)
}
