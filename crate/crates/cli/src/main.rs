use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context};
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

use pfc_core::energy::energy;
use pfc_core::io::{
    read_field, write_curve_csv, write_field, write_records, write_sidecar,
    write_trace_csv, FieldFile, Format, Metadata, SweepRecord,
};
use pfc_core::oracle::{decide_uniform, estimate_pn, stability_test};
use pfc_core::phase::{phase_diagram, PhaseConfig};
use pfc_core::relax::{multistart_with, random_initial};
use pfc_core::selftest::run_selftest;
use pfc_core::thin_film::{flh_energy, gamma_sequence_experiment, GammaExperiment, ThinFilmParams};
use pfc_core::{Error, FlowConfig, Grid, ModelParams, Potential, Scheme, SearchConfig};

#[derive(Parser, Debug)]
#[command(name = "pfc", version, about = "Uniform-state optimality for PFC and Ohta-Kawasaki energies")]
struct Cli {
    #[command(flatten)]
    common: Common,

    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum ModelArg {
    Pfc,
    Ok,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum FormatArg {
    Ndjson,
    Csv,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum SchemeArg {
    ConservedH1,
    ProjectedL2,
}

#[derive(Args, Debug)]
struct Common {
    #[arg(long, global = true, value_enum, default_value = "pfc")]
    model: ModelArg,
    #[arg(long, global = true, default_value_t = 1.0, allow_negative_numbers = true)]
    alpha: f64,
    #[arg(long, global = true, default_value_t = 1.0, allow_negative_numbers = true)]
    gamma: f64,
    #[arg(long, global = true, default_value_t = 0.0, allow_negative_numbers = true)]
    m: f64,
    /// Double-well parameter in W(s) = (s² − a)²/4.
    #[arg(long, global = true, default_value_t = 1.0, allow_negative_numbers = true)]
    a: f64,
    /// JSON file `{"polynomial": [c0, c1, ...], "w": optional}`; replaces --a.
    #[arg(long, global = true)]
    potential_file: Option<PathBuf>,
    #[arg(long, global = true, default_value_t = 2)]
    dim: usize,
    /// Sample counts per axis, e.g. 64,64.
    #[arg(long, global = true, value_delimiter = ',')]
    grid: Option<Vec<usize>>,
    #[arg(long, global = true)]
    band: Option<usize>,
    #[arg(long, global = true)]
    restarts: Option<usize>,
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[arg(long, global = true)]
    threads: Option<usize>,
    #[arg(long, global = true, value_enum, default_value = "ndjson")]
    format: FormatArg,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Evaluate the energy of a PFCF field file.
    Energy {
        file: PathBuf,
        /// Treat a rank-3 file as a thin film of aspect ratio h (Neumann last axis).
        #[arg(long)]
        h: Option<f64>,
        #[arg(long = "length", default_value_t = 1.0)]
        length: f64,
    },
    /// Second-variation test of the uniform state.
    Stability,
    /// Upper estimate of the optimal constant.
    PnEstimate,
    /// Global-optimality verdict for the uniform state.
    Decide,
    /// Multistart gradient-flow relaxation.
    Relax {
        #[arg(long, value_enum, default_value = "conserved-h1")]
        scheme: SchemeArg,
        #[arg(long, default_value_t = 1e-3)]
        dt: f64,
        #[arg(long, default_value_t = 200_000)]
        max_steps: usize,
        #[arg(long, default_value_t = 1e-12)]
        energy_tol: f64,
        #[arg(long, default_value_t = 0.1)]
        amplitude: f64,
        /// Start from this PFCF field instead of random data.
        #[arg(long)]
        init: Option<PathBuf>,
    },
    /// Thin-film sequence study against the 2-D limit.
    Thinfilm {
        #[arg(long, value_delimiter = ',', default_value = "0.2,0.1,0.05")]
        h_list: Vec<f64>,
        #[arg(long, value_delimiter = ',', default_value = "1.1,1.05,1.0")]
        l_list: Vec<f64>,
        #[arg(long, default_value_t = 1e-3)]
        dt: f64,
        #[arg(long, default_value_t = 0.1)]
        amplitude: f64,
    },
    /// Stability and global-optimality curves in the (m, a) plane.
    PhaseDiagram {
        #[arg(long, default_value_t = 0.0, allow_negative_numbers = true)]
        m_min: f64,
        #[arg(long, default_value_t = 2.0, allow_negative_numbers = true)]
        m_max: f64,
        #[arg(long, default_value_t = 0.1)]
        m_step: f64,
        #[arg(long, allow_negative_numbers = true, requires = "a_max")]
        a_min: Option<f64>,
        #[arg(long, allow_negative_numbers = true, requires = "a_min")]
        a_max: Option<f64>,
        #[arg(long, default_value_t = 0.5)]
        bisect_tol: f64,
        /// Curve CSV; defaults to `<out>.curve.csv`, or stdout without --out.
        #[arg(long)]
        curve: Option<PathBuf>,
    },
    /// Run the spectral identity suite.
    Selftest {
        #[arg(long, default_value_t = 50)]
        fields: usize,
    },
}

/// A check that ran but did not pass.
#[derive(Debug)]
struct CheckFailed(String);

impl std::fmt::Display for CheckFailed {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for CheckFailed {}

struct Ctx {
    common: Common,
    argv: Vec<String>,
}

impl Ctx {
    fn potential(&self) -> anyhow::Result<Potential> {
        match &self.common.potential_file {
            Some(path) => Ok(Potential::from_file(path)?),
            None => Ok(Potential::double_well(self.common.a)),
        }
    }

    fn params(&self) -> anyhow::Result<ModelParams> {
        let w = self.potential()?;
        Ok(match self.common.model {
            ModelArg::Pfc => ModelParams::pfc(self.common.alpha, self.common.m, w),
            ModelArg::Ok => ModelParams::ok(self.common.gamma, self.common.m, w)?,
        })
    }

    fn search(&self) -> SearchConfig {
        let mut s = SearchConfig::for_rank(self.common.dim);
        if let Some(b) = self.common.band {
            s.band = b;
        }
        if let Some(r) = self.common.restarts {
            s.restarts = r;
        }
        s.seed = self.common.seed;
        s
    }

    fn torus(&self) -> anyhow::Result<Grid> {
        Ok(match &self.common.grid {
            Some(c) => Grid::periodic(c)?,
            None => Grid::default_torus(self.common.dim)?,
        })
    }

    fn format(&self) -> Format {
        match self.common.format {
            FormatArg::Ndjson => Format::Ndjson,
            FormatArg::Csv => Format::Csv,
        }
    }

    fn metadata(&self, grid: Vec<usize>, band: Option<usize>) -> Metadata {
        Metadata::new(self.argv.clone(), self.common.seed, grid, band)
    }

    /// Records to `--out` (with sidecar) or to stdout.
    fn emit<T: Serialize>(&self, records: &[T], meta: &Metadata) -> anyhow::Result<()> {
        match &self.common.out {
            Some(path) => {
                write_records(path, records, self.format())?;
                write_sidecar(path, meta)?;
                eprintln!("wrote {}", path.display());
            }
            None => {
                let mut stdout = std::io::stdout().lock();
                match self.format() {
                    Format::Ndjson => pfc_core::io::write_ndjson(&mut stdout, records)?,
                    Format::Csv => pfc_core::io::write_csv(&mut stdout, records)?,
                }
            }
        }
        Ok(())
    }
}

fn with_suffix(path: &Path, suffix: &str) -> PathBuf {
    let mut s = path.as_os_str().to_owned();
    s.push(suffix);
    PathBuf::from(s)
}

fn save_field(path: &Path, field: &pfc_core::SpectralField, meta: &Metadata) -> anyhow::Result<()> {
    write_field(path, field)?;
    write_sidecar(path, meta)?;
    Ok(())
}

fn sweep_record(ctx: &Ctx, p: &ModelParams, d: &pfc_core::Decision, secs: f64) -> SweepRecord {
    let (alpha, gamma) = match p.model {
        pfc_core::Model::Pfc { alpha } => (Some(alpha), None),
        pfc_core::Model::Ok { gamma } => (None, Some(gamma)),
    };
    SweepRecord {
        model: p.model.name().to_string(),
        m: p.m,
        a: p.potential.double_well_a(),
        potential: Some(p.potential.id()),
        alpha,
        gamma,
        dim: ctx.common.dim,
        verdict: d.verdict.to_string(),
        margin: d.margin,
        pn_lower: d.lower_bound,
        pn_upper: d.upper_bound,
        threshold: d.threshold,
        witness_path: None,
        seed: ctx.common.seed,
        wallclock: secs,
    }
}

fn cmd_energy(ctx: &Ctx, file: &Path, h: Option<f64>, length: f64) -> anyhow::Result<()> {
    let raw = FieldFile::read(file)?;
    let counts = raw.counts.clone();
    let (value, uniform, mean) = match h {
        Some(h) => {
            if counts.len() != 3 {
                bail!("--h needs a rank-3 field, {} has rank {}", file.display(), counts.len());
            }
            let phi = raw.into_field_on(Grid::thin_film(counts[0], counts[1], counts[2])?)?;
            let p = ThinFilmParams::new(length, h, ctx.common.alpha, phi.mean(), ctx.potential()?)?;
            let uniform = pfc_core::SpectralField::constant(phi.grid().clone(), phi.mean());
            (flh_energy(&phi, &p)?, flh_energy(&uniform, &p)?, phi.mean())
        }
        None => {
            let phi = raw.into_periodic_field()?;
            let p = ctx.params()?;
            (energy(&p, &phi)?, p.uniform_energy(), phi.mean())
        }
    };
    println!(
        "{}",
        serde_json::json!({
            "file": file.display().to_string(),
            "counts": counts,
            "energy": value,
            "uniform_energy": uniform,
            "mean": mean,
        })
    );
    Ok(())
}

fn cmd_stability(ctx: &Ctx) -> anyhow::Result<()> {
    let p = ctx.params()?;
    let s = stability_test(&p, ctx.common.dim)?;
    let word = if s.stable { "stable" } else { "unstable" };
    println!(
        "{word} margin={} lattice_min={} argmin_q={:?} searched_bound={}",
        s.margin, s.lattice.value, s.lattice.argmin_norms, s.lattice.searched_bound
    );
    if let Some(path) = &ctx.common.out {
        let rec = serde_json::json!({
            "model": p.model.name(),
            "m": p.m,
            "potential": p.potential.id(),
            "N": ctx.common.dim,
            "stable": s.stable,
            "margin": s.margin,
            "lattice_min": s.lattice.value,
            "argmin_norms": s.lattice.argmin_norms,
            "searched_bound": s.lattice.searched_bound,
        });
        std::fs::write(path, format!("{rec}\n")).with_context(|| path.display().to_string())?;
        write_sidecar(path, &ctx.metadata(vec![], None))?;
    }
    Ok(())
}

fn cmd_pn_estimate(ctx: &Ctx) -> anyhow::Result<()> {
    let p = ctx.params()?;
    let search = ctx.search();
    let est = estimate_pn(&p, ctx.common.dim, &search)?;
    let lower = est
        .lower_bound
        .map_or_else(|| "none".to_string(), |v| v.to_string());
    println!(
        "upper_bound={} lower_bound={lower} band={} restarts_used={} iterations={} degenerate_restarts={}",
        est.upper_bound, est.band, est.restarts_used, est.iterations, est.degenerate_restarts
    );
    if let Some(path) = &ctx.common.out {
        let meta = ctx.metadata(est.witness.grid().counts().to_vec(), Some(est.band));
        save_field(path, &est.witness, &meta)?;
        eprintln!("witness (M3 = 1) written to {}", path.display());
    }
    Ok(())
}

fn cmd_decide(ctx: &Ctx) -> anyhow::Result<()> {
    let p = ctx.params()?;
    let search = ctx.search();
    let start = std::time::Instant::now();
    let d = decide_uniform(&p, ctx.common.dim, &search)?;
    let secs = start.elapsed().as_secs_f64();
    println!("{}", d.verdict);
    for note in &d.notes {
        println!("  {note}");
    }
    let mut rec = sweep_record(ctx, &p, &d, secs);
    let grid = d
        .witness
        .as_ref()
        .map_or_else(Vec::new, |w| w.grid().counts().to_vec());
    let meta = ctx.metadata(grid, Some(search.band));
    if let (Some(out), Some(w)) = (&ctx.common.out, &d.witness) {
        let wpath = with_suffix(out, ".witness.pfcf");
        save_field(&wpath, w, &meta)?;
        rec.witness_path = Some(wpath.display().to_string());
    }
    if ctx.common.out.is_some() {
        ctx.emit(&[rec], &meta)?;
    }
    Ok(())
}

#[allow(clippy::too_many_arguments)]
fn cmd_relax(
    ctx: &Ctx,
    scheme: SchemeArg,
    dt: f64,
    max_steps: usize,
    energy_tol: f64,
    amplitude: f64,
    init: Option<&Path>,
) -> anyhow::Result<()> {
    let p = ctx.params()?;
    let cfg = FlowConfig {
        scheme: match scheme {
            SchemeArg::ConservedH1 => Scheme::ConservedHMinus1,
            SchemeArg::ProjectedL2 => Scheme::ProjectedL2,
        },
        dt,
        max_steps,
        energy_tol,
        seed: ctx.common.seed,
        init_amplitude: amplitude,
        init_band: ctx.common.band.unwrap_or(FlowConfig::default().init_band),
        ..FlowConfig::default()
    };
    let start_field = init.map(read_field).transpose()?;
    let grid = match &start_field {
        Some(f) => f.grid().clone(),
        None => ctx.torus()?,
    };
    let restarts = ctx.common.restarts.unwrap_or(1);
    let run = multistart_with(&p, restarts, &cfg, |seed| match &start_field {
        Some(f) => f.clone(),
        None => random_initial(
            p.m,
            &FlowConfig {
                seed,
                ..cfg.clone()
            },
            &grid,
        ),
    })?;
    let best = &run.best;
    println!(
        "energy={} uniform_energy={} best_seed={} converged={} accepted_steps={} mass_drift={:e}",
        best.energy,
        p.uniform_energy(),
        run.best_seed,
        best.converged,
        best.trace.len() - 1,
        (best.phi.mean() - p.m).abs()
    );
    if !run.stalled.is_empty() {
        println!("stalled seeds: {:?}", run.stalled);
    }
    if let Some(out) = &ctx.common.out {
        let meta = ctx.metadata(grid.counts().to_vec(), Some(cfg.init_band));
        save_field(out, &best.phi, &meta)?;
        let tpath = with_suffix(out, ".trace.csv");
        let file = std::fs::File::create(&tpath).with_context(|| tpath.display().to_string())?;
        let mut w = std::io::BufWriter::new(file);
        write_trace_csv(&mut w, &best.trace)?;
        w.flush()?;
        write_sidecar(&tpath, &meta)?;
        eprintln!("wrote {} and {}", out.display(), tpath.display());
    }
    Ok(())
}

fn cmd_thinfilm(ctx: &Ctx, h_list: Vec<f64>, l_list: Vec<f64>, dt: f64, amplitude: f64) -> anyhow::Result<()> {
    if ctx.common.model != ModelArg::Pfc {
        bail!("the thin-film study uses the PFC energy");
    }
    let counts = ctx.common.grid.clone().unwrap_or_else(|| vec![64, 64, 16]);
    let grid3: [usize; 3] = counts
        .as_slice()
        .try_into()
        .map_err(|_| anyhow::anyhow!("--grid needs three counts n1,n2,nz"))?;
    let flow = FlowConfig {
        dt,
        seed: ctx.common.seed,
        init_amplitude: amplitude,
        init_band: ctx.common.band.unwrap_or(FlowConfig::default().init_band),
        ..FlowConfig::default()
    };
    let exp = GammaExperiment {
        h_list,
        l_list,
        alpha: ctx.common.alpha,
        m: ctx.common.m,
        potential: ctx.potential()?,
        grid3,
        restarts: ctx.common.restarts.unwrap_or(2),
        flow,
    };
    let records = gamma_sequence_experiment(&exp)?;
    ctx.emit(&records, &ctx.metadata(counts, ctx.common.band))
}

#[allow(clippy::too_many_arguments)]
fn cmd_phase(
    ctx: &Ctx,
    m_min: f64,
    m_max: f64,
    m_step: f64,
    a_range: Option<(f64, f64)>,
    bisect_tol: f64,
    curve: Option<&Path>,
) -> anyhow::Result<()> {
    if ctx.common.model != ModelArg::Pfc || ctx.common.potential_file.is_some() {
        bail!("the phase diagram is defined for the double-well PFC model");
    }
    if !(m_step > 0.0) || m_max < m_min {
        bail!("need m_step > 0 and m_max >= m_min");
    }
    let n = ((m_max - m_min) / m_step + 1e-9).floor() as usize;
    let m_values = (0..=n)
        .map(|i| ((m_min + i as f64 * m_step) * 1e12).round() / 1e12)
        .collect();
    let cfg = PhaseConfig {
        m_values,
        a_range,
        bisect_tol,
        search: ctx.search(),
        ..PhaseConfig::new(ctx.common.alpha, ctx.common.dim)
    };
    let mut result = phase_diagram(&cfg)?;
    let grid = Grid::default_torus(ctx.common.dim)?.counts().to_vec();
    let meta = ctx.metadata(grid, Some(cfg.search.band));
    let curve_path = curve
        .map(Path::to_path_buf)
        .or_else(|| ctx.common.out.as_ref().map(|o| with_suffix(o, ".curve.csv")));
    if let Some(out) = &ctx.common.out {
        result.attach_witnesses(&with_suffix(out, ".witnesses"))?;
        ctx.emit(&result.records, &meta)?;
    }
    match curve_path {
        Some(path) => {
            let file = std::fs::File::create(&path).with_context(|| path.display().to_string())?;
            let mut w = std::io::BufWriter::new(file);
            write_curve_csv(&mut w, &result.curve)?;
            w.flush()?;
            write_sidecar(&path, &meta)?;
            eprintln!("wrote {}", path.display());
        }
        None => write_curve_csv(std::io::stdout().lock(), &result.curve)?,
    }
    Ok(())
}

fn cmd_selftest(ctx: &Ctx, fields: usize) -> anyhow::Result<()> {
    let checks = run_selftest(ctx.common.seed, fields)?;
    let mut failed = 0;
    for c in &checks {
        let tag = if c.passed { "PASS" } else { "FAIL" };
        println!("{tag} {:<55} worst={:.3e} tol={:.0e}", c.name, c.worst, c.tol);
        failed += usize::from(!c.passed);
    }
    if failed > 0 {
        return Err(CheckFailed(format!("{failed} of {} checks failed", checks.len())).into());
    }
    println!("all {} checks passed", checks.len());
    Ok(())
}

fn run(cli: Cli, argv: Vec<String>) -> anyhow::Result<()> {
    if let Some(t) = cli.common.threads {
        rayon::ThreadPoolBuilder::new()
            .num_threads(t)
            .build_global()
            .context("configuring the thread pool")?;
    }
    let ctx = Ctx {
        common: cli.common,
        argv,
    };
    match cli.command {
        Command::Energy { file, h, length } => cmd_energy(&ctx, &file, h, length),
        Command::Stability => cmd_stability(&ctx),
        Command::PnEstimate => cmd_pn_estimate(&ctx),
        Command::Decide => cmd_decide(&ctx),
        Command::Relax {
            scheme,
            dt,
            max_steps,
            energy_tol,
            amplitude,
            init,
        } => cmd_relax(&ctx, scheme, dt, max_steps, energy_tol, amplitude, init.as_deref()),
        Command::Thinfilm {
            h_list,
            l_list,
            dt,
            amplitude,
        } => cmd_thinfilm(&ctx, h_list, l_list, dt, amplitude),
        Command::PhaseDiagram {
            m_min,
            m_max,
            m_step,
            a_min,
            a_max,
            bisect_tol,
            curve,
        } => cmd_phase(
            &ctx,
            m_min,
            m_max,
            m_step,
            a_min.zip(a_max),
            bisect_tol,
            curve.as_deref(),
        ),
        Command::Selftest { fields } => cmd_selftest(&ctx, fields),
    }
}

/// 3 for numerical failures, 2 for everything the caller can fix.
fn exit_code(err: &anyhow::Error) -> u8 {
    for cause in err.chain() {
        if let Some(e) = cause.downcast_ref::<Error>() {
            return if e.is_numerical() { 3 } else { 2 };
        }
        if cause.downcast_ref::<CheckFailed>().is_some() {
            return 3;
        }
    }
    2
}

fn main() -> ExitCode {
    let argv: Vec<String> = std::env::args().collect();
    let cli = match Cli::try_parse_from(&argv) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() {
                ExitCode::from(2)
            } else {
                ExitCode::SUCCESS
            };
        }
    };
    match run(cli, argv) {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {err:#}");
            ExitCode::from(exit_code(&err))
        }
    }
}
