//! `subcorr`: command-line experiments for subspace-correction TV and l1
//! minimization.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{anyhow, bail, Context};
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::json;

use subcorr::decomp::{make_index_split, make_random_orthogonal, make_stripes, make_svd_q};
use subcorr::experiments::{gaussian_l1, image_2d, plateau_1d, ramp_1d, step_1d};
use subcorr::io;
use subcorr::solvers::{naive_tv1d_solve, NaiveConfig, ThetaRule};
use subcorr::{
    iterative_threshold_solve, parallel_solve, sequential_solve, GridFunction, LinearMap, PsiKind,
    SolveProblem, SolveResult, SolverConfig, StripeSpec, SubspaceDecomposition, SwitchSchedule,
    Termination,
};

#[derive(Parser)]
#[command(name = "subcorr", version, about = "Subspace-correction solvers for TV and l1 regularized least squares")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Total variation denoising of a 1D signal.
    #[command(name = "tv-denoise-1d")]
    TvDenoise1d {
        #[arg(long)]
        input: PathBuf,
        #[command(flatten)]
        solver: SolverFlags,
        #[command(flatten)]
        out: OutputFlags,
    },
    /// Total variation inpainting of a 1D signal with a 0/1 mask.
    #[command(name = "tv-inpaint-1d")]
    TvInpaint1d {
        #[arg(long)]
        input: PathBuf,
        #[arg(long)]
        mask: PathBuf,
        #[command(flatten)]
        solver: SolverFlags,
        #[command(flatten)]
        out: OutputFlags,
    },
    /// Total variation inpainting of an image (PGM or CSV) with a 0/1 mask.
    #[command(name = "tv-inpaint-2d")]
    TvInpaint2d {
        #[arg(long)]
        input: PathBuf,
        #[arg(long)]
        mask: PathBuf,
        #[command(flatten)]
        solver: SolverFlags,
        #[command(flatten)]
        out: OutputFlags,
    },
    /// Sparse recovery with an l1 penalty. Reads `--matrix`/`--data`, or draws
    /// a Gaussian instance of shape `--rows x --cols` from `--seed`.
    L1Recover {
        #[arg(long, requires = "data")]
        matrix: Option<PathBuf>,
        #[arg(long, requires = "matrix")]
        data: Option<PathBuf>,
        #[arg(long, default_value_t = 40)]
        rows: usize,
        #[arg(long, default_value_t = 200)]
        cols: usize,
        #[arg(long, default_value_t = 8)]
        nonzeros: usize,
        #[arg(long, default_value_t = 0.01)]
        noise: f64,
        #[command(flatten)]
        solver: SolverFlags,
        #[command(flatten)]
        out: OutputFlags,
    },
    /// 1D inpainting by the single-domain solver, the two-subspace solver and
    /// the naive interface scheme, with their distances to the single-domain result.
    #[command(name = "compare-naive-1d")]
    CompareNaive1d {
        #[arg(long)]
        input: PathBuf,
        #[arg(long)]
        mask: PathBuf,
        /// Iterations of the naive scheme.
        #[arg(long, default_value_t = 500)]
        naive_iters: usize,
        /// Regularization of |grad u| in the naive scheme.
        #[arg(long, default_value_t = 1e-4)]
        eps: f64,
        #[arg(long, value_enum, default_value_t = Theta::OtherSide)]
        theta: Theta,
        #[command(flatten)]
        solver: SolverFlags,
        #[command(flatten)]
        out: OutputFlags,
    },
    /// Write a seeded synthetic input.
    Generate {
        #[arg(long, value_enum)]
        kind: Kind,
        #[arg(long, default_value = "data")]
        out_dir: PathBuf,
        /// Signal length (1D) or image side (2D).
        #[arg(long, default_value_t = 100)]
        size: usize,
        #[arg(long, default_value_t = 40)]
        rows: usize,
        #[arg(long, default_value_t = 200)]
        cols: usize,
        #[arg(long, default_value_t = 8)]
        nonzeros: usize,
        #[arg(long, default_value_t = 0.01)]
        noise: f64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum Kind {
    GaussianL1,
    #[value(name = "step-1d")]
    Step1d,
    #[value(name = "ramp-1d")]
    Ramp1d,
    #[value(name = "plateau-1d")]
    Plateau1d,
    #[value(name = "image-2d-synthetic")]
    Image2dSynthetic,
}

#[derive(Clone, Copy, ValueEnum)]
enum Theta {
    OwnSide,
    OtherSide,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Decomposition {
    Stripes,
    Identity,
    RandomOrthogonal,
    Svd,
}

#[derive(Args, Clone)]
struct SolverFlags {
    /// Regularization weight (defaults: 1 for 1D, 1e-2 for 2D, 0.005 for l1).
    #[arg(long)]
    alpha: Option<f64>,
    /// Step of the dual projection iteration.
    #[arg(long, default_value_t = 0.25)]
    tau: f64,
    #[arg(long, default_value_t = 1e-3)]
    tol_projection: f64,
    #[arg(long, default_value_t = 1e-10)]
    tol_outer: f64,
    /// Number of subspaces (default 2 for TV, 5 for l1).
    #[arg(long)]
    subspaces: Option<usize>,
    /// Inner iterations: one count, or a comma list with one entry per subspace.
    #[arg(long, value_parser = parse_inner)]
    inner: Option<InnerIters>,
    /// Cap on the multiplier iterations (default 10 for TV, 20 for l1).
    #[arg(long)]
    eta_iters: Option<usize>,
    /// Half-width of the band around each interface used for the multiplier; 0 disables it.
    #[arg(long, default_value_t = 10)]
    stripe: usize,
    #[arg(long, value_enum)]
    decomposition: Option<Decomposition>,
    /// Switch to the identity split after this many outer iterations (l1 only).
    #[arg(long)]
    switch_after: Option<usize>,
    #[arg(long, default_value_t = 1000)]
    max_outer: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Solve the subspace problems concurrently and average.
    #[arg(long)]
    parallel: bool,
}

#[derive(Clone, Debug)]
struct InnerIters(Vec<usize>);

fn parse_inner(s: &str) -> Result<InnerIters, String> {
    let v = s
        .split(',')
        .map(|t| t.trim().parse::<usize>().map_err(|e| format!("{t:?}: {e}")))
        .collect::<Result<Vec<_>, _>>()?;
    if v.is_empty() || v.contains(&0) {
        return Err("inner iteration counts must be positive".into());
    }
    Ok(InnerIters(v))
}

#[derive(Args, Clone)]
struct OutputFlags {
    /// Directory for the reconstruction, trace and summary.
    #[arg(long, default_value = "out")]
    out_dir: PathBuf,
    /// Write 2D reconstructions as PGM instead of CSV.
    #[arg(long)]
    pgm: bool,
}

/// Failures sorted by exit status.
#[derive(Debug)]
enum Failure {
    Invalid(anyhow::Error),
    Io(anyhow::Error),
}

impl Failure {
    fn code(&self) -> u8 {
        match self {
            Failure::Invalid(_) => 2,
            Failure::Io(_) => 4,
        }
    }
}

impl From<anyhow::Error> for Failure {
    fn from(e: anyhow::Error) -> Self {
        let io = e.chain().any(|c| {
            c.downcast_ref::<std::io::Error>().is_some()
                || matches!(c.downcast_ref::<subcorr::Error>(), Some(subcorr::Error::Io(_)))
        });
        if io {
            Failure::Io(e)
        } else {
            Failure::Invalid(e)
        }
    }
}

impl From<subcorr::Error> for Failure {
    fn from(e: subcorr::Error) -> Self {
        anyhow::Error::from(e).into()
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Err(e) = configure_threads() {
        eprintln!("error: {e:#}");
        return ExitCode::from(2);
    }
    match run(cli.command) {
        Ok(Termination::EtaDivergence) => {
            eprintln!("stopped: the multiplier iteration diverged");
            ExitCode::from(3)
        }
        Ok(_) => ExitCode::SUCCESS,
        Err(f) => {
            let (Failure::Invalid(e) | Failure::Io(e)) = &f;
            eprintln!("error: {e:#}");
            ExitCode::from(f.code())
        }
    }
}

fn configure_threads() -> anyhow::Result<()> {
    let Ok(v) = std::env::var("SUBCORR_THREADS") else {
        return Ok(());
    };
    let n: usize = v
        .trim()
        .parse()
        .ok()
        .filter(|&n| n > 0)
        .ok_or_else(|| anyhow!("SUBCORR_THREADS must be a positive integer, got {v:?}"))?;
    rayon::ThreadPoolBuilder::new().num_threads(n).build_global()?;
    Ok(())
}

fn run(command: Command) -> Result<Termination, Failure> {
    match command {
        Command::TvDenoise1d { input, solver, out } => {
            let g = read_1d(&input)?;
            let t = LinearMap::Identity(g.dims());
            tv_run("tv-denoise-1d", t, g, PsiKind::Tv1d, &solver, &out)
        }
        Command::TvInpaint1d { input, mask, solver, out } => {
            let g = read_1d(&input)?;
            let m = io::binarize(&read_1d(&mask)?);
            tv_run("tv-inpaint-1d", LinearMap::mask(m)?, g, PsiKind::Tv1d, &solver, &out)
        }
        Command::TvInpaint2d { input, mask, solver, out } => {
            let g = io::read_image(&input).with_context(|| format!("reading {}", input.display()))?;
            let m = io::binarize(&io::read_image(&mask).with_context(|| format!("reading {}", mask.display()))?);
            if !g.dims().is_2d() {
                return Err(Failure::Invalid(anyhow!("{} is not an image", input.display())));
            }
            tv_run("tv-inpaint-2d", LinearMap::mask(m)?, g, PsiKind::Tv2d, &solver, &out)
        }
        Command::L1Recover { matrix, data, rows, cols, nonzeros, noise, solver, out } => {
            let (t, g) = match (matrix, data) {
                (Some(mp), Some(dp)) => {
                    let t = io::read_matrix_csv(&mp).with_context(|| format!("reading {}", mp.display()))?;
                    (t, read_1d(&dp)?)
                }
                _ => {
                    let inst = gaussian_l1(rows, cols, nonzeros, noise, solver.seed)?;
                    (inst.operator, inst.data)
                }
            };
            l1_run(t, g, &solver, &out)
        }
        Command::CompareNaive1d { input, mask, naive_iters, eps, theta, solver, out } => {
            let g = read_1d(&input)?;
            let m = io::binarize(&read_1d(&mask)?);
            compare_naive(g, m, naive_iters, eps, theta, &solver, &out)
        }
        Command::Generate { kind, out_dir, size, rows, cols, nonzeros, noise, seed } => {
            generate(kind, &out_dir, size, rows, cols, nonzeros, noise, seed)?;
            Ok(Termination::Tolerance)
        }
    }
}

fn read_1d(path: &Path) -> anyhow::Result<GridFunction> {
    let u = io::read_csv(path).with_context(|| format!("reading {}", path.display()))?;
    if u.dims().is_2d() {
        bail!("{} holds more than one column; expected a 1D signal", path.display());
    }
    Ok(u)
}

fn solver_config(flags: &SolverFlags, psi: PsiKind) -> SolverConfig {
    let mut cfg = if psi.is_tv() { SolverConfig::tv() } else { SolverConfig::l1() };
    cfg.chambolle.tau = flags.tau;
    cfg.chambolle.tol = flags.tol_projection;
    cfg.outer_tol = flags.tol_outer;
    cfg.max_outer = flags.max_outer;
    cfg.parallel = flags.parallel;
    if let Some(InnerIters(v)) = &flags.inner {
        cfg.inner_iters = v.clone();
    }
    if let Some(k) = flags.eta_iters {
        cfg.eta.max_iters = k;
    }
    cfg
}

fn solve(p: &SolveProblem, cfg: &SolverConfig) -> subcorr::Result<SolveResult> {
    if cfg.parallel {
        parallel_solve(p, cfg)
    } else {
        sequential_solve(p, cfg)
    }
}

fn tv_run(
    name: &str,
    t: LinearMap,
    g: GridFunction,
    psi: PsiKind,
    flags: &SolverFlags,
    out: &OutputFlags,
) -> Result<Termination, Failure> {
    if let Some(d) = flags.decomposition.filter(|d| *d != Decomposition::Stripes) {
        return Err(Failure::Invalid(anyhow!(
            "total variation runs use stripes, not {:?}",
            d.to_possible_value().map(|v| v.get_name().to_string())
        )));
    }
    if flags.switch_after.is_some() {
        return Err(Failure::Invalid(anyhow!("--switch-after applies to l1-recover only")));
    }
    let alpha = flags.alpha.unwrap_or(if psi == PsiKind::Tv2d { 1e-2 } else { 1.0 });
    let count = flags.subspaces.unwrap_or(2);
    let dims = g.dims();
    let mut p = SolveProblem::new(t, g, alpha, psi)?.with_decomposition(make_stripes(dims, count)?)?;
    if flags.stripe > 0 {
        p = p.with_stripe(StripeSpec { half_width: flags.stripe });
    }
    let cfg = solver_config(flags, psi);
    let r = solve(&p, &cfg)?;
    write_outputs(name, &p, &cfg, flags, out, &r, json!({}))?;
    Ok(r.termination)
}

fn l1_run(t: LinearMap, g: GridFunction, flags: &SolverFlags, out: &OutputFlags) -> Result<Termination, Failure> {
    let alpha = flags.alpha.unwrap_or(0.005);
    let count = flags.subspaces.unwrap_or(5);
    let n = t.domain().len();
    let dec = flags.decomposition.unwrap_or(Decomposition::Identity);
    let build = |d: Decomposition| -> subcorr::Result<SubspaceDecomposition> {
        match d {
            Decomposition::Identity | Decomposition::Stripes => make_index_split(n, count),
            Decomposition::RandomOrthogonal => make_random_orthogonal(n, count, flags.seed),
            Decomposition::Svd => make_svd_q(&t, count),
        }
    };
    if dec == Decomposition::Stripes {
        return Err(Failure::Invalid(anyhow!("l1 runs split coordinates; use identity, random-orthogonal or svd")));
    }
    let first = build(dec)?;
    let p = SolveProblem::new(t.clone(), g, alpha, PsiKind::L1)?;
    let p = match flags.switch_after {
        Some(k) => p.with_schedule(SwitchSchedule {
            switch_after: k,
            from: first,
            to: build(Decomposition::Identity)?,
        })?,
        None => p.with_decomposition(first)?,
    };
    let cfg = solver_config(flags, PsiKind::L1);
    let r = solve(&p, &cfg)?;
    write_outputs("l1-recover", &p, &cfg, flags, out, &r, json!({}))?;
    Ok(r.termination)
}

fn compare_naive(
    g: GridFunction,
    mask: GridFunction,
    naive_iters: usize,
    eps: f64,
    theta: Theta,
    flags: &SolverFlags,
    out: &OutputFlags,
) -> Result<Termination, Failure> {
    let alpha = flags.alpha.unwrap_or(1.0);
    let dims = g.dims();
    let base = SolveProblem::new(LinearMap::mask(mask.clone())?, g.clone(), alpha, PsiKind::Tv1d)?;
    let cfg = solver_config(flags, PsiKind::Tv1d);

    // single-domain reference with a tight projection
    let mut ref_cfg = cfg.clone();
    ref_cfg.chambolle.tol = ref_cfg.chambolle.tol.min(1e-7);
    ref_cfg.chambolle.max_iters = ref_cfg.chambolle.max_iters.max(100_000);
    ref_cfg.max_outer = ref_cfg.max_outer.max(20_000);
    let reference = iterative_threshold_solve(&base, &ref_cfg)?;

    let mut p = base.with_decomposition(make_stripes(dims, flags.subspaces.unwrap_or(2))?)?;
    if flags.stripe > 0 {
        p = p.with_stripe(StripeSpec { half_width: flags.stripe });
    }
    let r = solve(&p, &cfg)?;

    let interface = dims.len().div_ceil(2);
    let mut ncfg = NaiveConfig::new(alpha, interface);
    ncfg.iters = naive_iters;
    ncfg.eps = eps;
    ncfg.theta = match theta {
        Theta::OwnSide => ThetaRule::OwnSide,
        Theta::OtherSide => ThetaRule::OtherSide,
    };
    let naive = naive_tv1d_solve(&g, &mask, &ncfg)?;

    fs::create_dir_all(&out.out_dir).with_context(|| format!("creating {}", out.out_dir.display()))?;
    io::write_csv(&out.out_dir.join("reference.csv"), &reference.u)?;
    io::write_csv(&out.out_dir.join("naive.csv"), &naive)?;
    let extra = json!({
        "reference_energy": reference.trace.final_energy(),
        "subspace_deviation": r.u.sup_distance(&reference.u),
        "naive_deviation": naive.sup_distance(&reference.u),
        "naive_iters": naive_iters,
        "eps": eps,
        "interface": interface,
    });
    write_outputs("compare-naive-1d", &p, &cfg, flags, out, &r, extra)?;
    Ok(r.termination)
}

fn write_outputs(
    name: &str,
    p: &SolveProblem,
    cfg: &SolverConfig,
    flags: &SolverFlags,
    out: &OutputFlags,
    r: &SolveResult,
    extra: serde_json::Value,
) -> Result<(), Failure> {
    let dir = &out.out_dir;
    fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    let recon = if out.pgm && r.u.dims().is_2d() { "reconstruction.pgm" } else { "reconstruction.csv" };
    io::write_image(&dir.join(recon), &r.u)?;
    io::write_trace(&dir.join("trace.csv"), &r.trace)?;
    let summary = json!({
        "command": name,
        "parameters": {
            "alpha": p.alpha(),
            "tau": cfg.chambolle.tau,
            "tol_projection": cfg.chambolle.tol,
            "tol_outer": cfg.outer_tol,
            "subspaces": p.decomposition().count(),
            "inner": cfg.inner_iters,
            "eta_iters": cfg.eta.max_iters,
            "stripe": p.stripe().map(|s| s.half_width),
            "decomposition": p.decomposition().kind(),
            "switch_after": flags.switch_after,
            "max_outer": cfg.max_outer,
            "seed": flags.seed,
            "parallel": cfg.parallel,
        },
        "termination": r.termination,
        "error": r.error,
        "outer_iterations": r.trace.records.len().saturating_sub(1),
        "initial_energy": r.trace.energy_at(0),
        "final_energy": r.trace.final_energy(),
        "operator_scale": p.scale(),
        "diagnostics": r.diagnostics,
        "warnings": r.warnings,
        "comparison": extra,
    });
    let text = serde_json::to_string_pretty(&summary).map_err(|e| Failure::Invalid(e.into()))?;
    fs::write(dir.join("summary.json"), text + "\n").with_context(|| format!("writing {}", dir.display()))?;
    for w in &r.warnings {
        eprintln!("warning: {w}");
    }
    Ok(())
}

#[allow(clippy::too_many_arguments)]
fn generate(
    kind: Kind,
    dir: &Path,
    size: usize,
    rows: usize,
    cols: usize,
    nonzeros: usize,
    noise: f64,
    seed: u64,
) -> Result<(), Failure> {
    fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    match kind {
        Kind::GaussianL1 => {
            let inst = gaussian_l1(rows, cols, nonzeros, noise, seed)?;
            io::write_matrix_csv(&dir.join("matrix.csv"), &inst.operator)?;
            io::write_csv(&dir.join("data.csv"), &inst.data)?;
            io::write_csv(&dir.join("truth.csv"), &inst.truth)?;
        }
        Kind::Step1d | Kind::Ramp1d | Kind::Plateau1d => {
            let s = match kind {
                Kind::Step1d => step_1d(size)?,
                Kind::Ramp1d => ramp_1d(size)?,
                _ => plateau_1d(size)?,
            };
            io::write_csv(&dir.join("signal.csv"), &s.data)?;
            io::write_csv(&dir.join("mask.csv"), &s.mask)?;
        }
        Kind::Image2dSynthetic => {
            let im = image_2d(size, size, size / 8, noise, seed)?;
            io::write_csv(&dir.join("image.csv"), &im.image)?;
            io::write_csv(&dir.join("mask.csv"), &im.mask)?;
            io::write_pgm(&dir.join("image.pgm"), &im.image)?;
            io::write_pgm(&dir.join("mask.pgm"), &im.mask)?;
        }
    }
    Ok(())
}
