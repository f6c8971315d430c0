//! Command-line front end. Exit codes: 0 all checks pass, 1 a check failed,
//! 2 configuration or input error, 3 runtime failure.

pub mod config;
pub mod output;

use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand};

use crate::error::Error;
use crate::graded::GradedLayout;
use crate::groupconv::GroupLaw;
use crate::spectral::{forward_transform, sample_kernel, GridSpec, SampleOptions};
use crate::verify::suite::{KernelCheck, PairCheck, PlainCheck};
use crate::verify::{run_check, run_suite, CheckSpec, CompositionParams, CounterexampleParams, FourierParams, SuiteContext, VerificationReport};

pub use config::RunConfig;
use output::{write_outputs, RunInfo, Summary};

pub const EXIT_PASS: i32 = 0;
pub const EXIT_CHECK_FAILED: i32 = 1;
pub const EXIT_CONFIG: i32 = 2;
pub const EXIT_RUNTIME: i32 = 3;

#[derive(Debug, Parser)]
#[command(name = "flagkernel", version, about = "Numerical and exact checks for flag kernels on graded groups")]
pub struct Cli {
    /// Overrides the configured seed.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Overrides the configured output directory.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    /// Overrides the configured tolerance multiplier.
    #[arg(long = "tol-scale", global = true)]
    pub tol_scale: Option<f64>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Run every check in a configuration file.
    Verify { config: PathBuf },
    /// Evaluate an order-calculus expression.
    Classcalc {
        expr: String,
        /// Layout as `p:n,p:n,...`.
        #[arg(long, default_value = "1")]
        layout: String,
        /// Allow equal consecutive exponents.
        #[arg(long)]
        flag_blocks: bool,
    },
    /// Print the group law of an algebra described in a TOML file.
    Bch { algebra: PathBuf },
    /// Transform one kernel of a configuration and fit its dual decay.
    Fourier {
        kernel: String,
        #[arg(long)]
        config: PathBuf,
    },
    /// Regularized composition of two kernels of a configuration.
    Compose {
        a: String,
        b: String,
        #[arg(long)]
        config: PathBuf,
        /// Algebra id from the configuration; abelian when omitted.
        #[arg(long)]
        algebra: Option<String>,
    },
    /// Logarithmic growth of the order-zero counterexample.
    Counterexample {
        /// Largest dilation; decades from 10 up to this value are used.
        #[arg(long, default_value_t = 1e4)]
        rmax: f64,
    },
}

/// Failure split by exit code.
#[derive(Debug)]
pub enum Failure {
    Config(Error),
    Runtime(Error),
}

impl Failure {
    pub fn code(&self) -> i32 {
        match self {
            Failure::Config(_) => EXIT_CONFIG,
            Failure::Runtime(_) => EXIT_RUNTIME,
        }
    }

    pub fn error(&self) -> &Error {
        match self {
            Failure::Config(e) | Failure::Runtime(e) => e,
        }
    }
}

fn config_err(e: Error) -> Failure {
    Failure::Config(e)
}

fn runtime_err(e: Error) -> Failure {
    Failure::Runtime(e)
}

struct Overrides {
    seed: Option<u64>,
    out: Option<PathBuf>,
    tol_scale: Option<f64>,
}

impl Overrides {
    fn apply(&self, cfg: &mut RunConfig) -> std::result::Result<(), Failure> {
        if let Some(s) = self.seed {
            cfg.seed = s;
        }
        if let Some(o) = &self.out {
            cfg.out = o.clone();
        }
        if let Some(t) = self.tol_scale {
            if !(t > 0.0) || !t.is_finite() {
                return Err(config_err(Error::Config("--tol-scale: must be positive".into())));
            }
            cfg.tol_scale = t;
        }
        Ok(())
    }

    fn load(&self, path: &Path) -> std::result::Result<RunConfig, Failure> {
        let mut cfg = RunConfig::load(path).map_err(config_err)?;
        self.apply(&mut cfg)?;
        Ok(cfg)
    }
}

fn verdict_lines(w: &mut dyn Write, reports: &[VerificationReport]) {
    for r in reports {
        let failing: Vec<&str> = r.quantities.iter().filter(|q| !q.pass).map(|q| q.name.as_str()).collect();
        let _ = write!(w, "{:<28} {:<16} {:?} ({:.2}s)", r.check_id, r.kind, r.verdict, r.runtime.as_secs_f64());
        if !failing.is_empty() {
            let _ = write!(w, " failing: {}", failing.join(", "));
        }
        let _ = writeln!(w);
    }
}

fn finish(w: &mut dyn Write, command: &str, cfg: &RunConfig, reports: &[VerificationReport]) -> std::result::Result<i32, Failure> {
    verdict_lines(w, reports);
    let info = RunInfo::new(command, cfg.seed, cfg.tol_scale);
    let files = write_outputs(&cfg.out, info, cfg, reports, cfg.output.csv, cfg.output.plots).map_err(runtime_err)?;
    let s = Summary::of(reports);
    let _ = writeln!(w, "{} of {} checks pass; report: {}", s.pass, s.total, files[0].display());
    Ok(if s.all_pass() { EXIT_PASS } else { EXIT_CHECK_FAILED })
}

/// Runs a parsed command line, printing to `w`; returns the exit code.
pub fn execute(cli: Cli, w: &mut dyn Write) -> std::result::Result<i32, Failure> {
    let ov = Overrides {
        seed: cli.seed,
        out: cli.out,
        tol_scale: cli.tol_scale,
    };
    match cli.command {
        Command::Verify { config } => {
            let cfg = ov.load(&config)?;
            let sc = cfg.context().map_err(config_err)?;
            let reports = run_suite(&cfg.check, &sc, &cfg.check_context()).map_err(runtime_err)?;
            finish(w, "verify", &cfg, &reports)
        }
        Command::Classcalc { expr, layout, flag_blocks } => {
            let l = GradedLayout::parse_spec(&layout, flag_blocks).map_err(|e| config_err(Error::Config(format!("--layout: {e}"))))?;
            let out = crate::classcalc::evaluate(&expr, &l).map_err(config_err)?;
            let _ = writeln!(w, "{out}");
            Ok(if out.is_class() { EXIT_PASS } else { EXIT_CHECK_FAILED })
        }
        Command::Bch { algebra } => {
            let text = std::fs::read_to_string(&algebra).map_err(|e| config_err(Error::Config(format!("{}: {e}", algebra.display()))))?;
            let mut spec: config::AlgebraSpec = toml::from_str(&text).map_err(|e| config_err(Error::Config(format!("{}: {e}", algebra.display()))))?;
            if spec.id.is_empty() {
                spec.id = algebra.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
            }
            let alg = spec.build("algebra").map_err(config_err)?;
            let law = GroupLaw::from_algebra(&alg).map_err(config_err)?;
            let _ = write!(w, "{}", law.canonical_text());
            Ok(EXIT_PASS)
        }
        Command::Fourier { kernel, config } => {
            let cfg = ov.load(&config)?;
            let sc = cfg.context().map_err(config_err)?;
            let k = sc.kernel(&kernel).map_err(config_err)?;
            let id = format!("fourier-{kernel}");
            let p = FourierParams::default().resolved(k.layout.total_dim());
            let spec = CheckSpec::Fourier(KernelCheck {
                id: id.clone(),
                kernel: kernel.clone(),
                params: p.clone(),
            });
            let rep = run_check(&spec, &sc, &cfg.check_context()).map_err(runtime_err)?;
            // the transformed field itself, for external inspection
            let dim = k.layout.total_dim();
            let grid = GridSpec::new(p.counts.clone().unwrap_or_default(), vec![p.spacing.unwrap_or(1.0); dim]).map_err(runtime_err)?;
            let eps = if matches!(k.form, crate::kernels::KernelForm::Gaussian { .. }) { None } else { p.eps };
            let field = forward_transform(&sample_kernel(k, &grid, eps, &SampleOptions::default()).map_err(runtime_err)?).map_err(runtime_err)?;
            std::fs::create_dir_all(&cfg.out).map_err(|e| runtime_err(e.into()))?;
            let dump = cfg.out.join(format!("{id}.bin"));
            crate::spectral::write_field(&field, &dump, &format!("{} {} fourier {kernel}", env!("CARGO_PKG_NAME"), env!("CARGO_PKG_VERSION"))).map_err(runtime_err)?;
            let _ = writeln!(w, "field dump: {}", dump.display());
            finish(w, "fourier", &cfg, &[rep])
        }
        Command::Compose { a, b, config, algebra } => {
            let cfg = ov.load(&config)?;
            let sc = cfg.context().map_err(config_err)?;
            let spec = CheckSpec::Composition(PairCheck {
                id: format!("compose-{a}-{b}"),
                a,
                b,
                algebra,
                params: CompositionParams::default(),
            });
            sc.validate(std::slice::from_ref(&spec)).map_err(config_err)?;
            let rep = run_check(&spec, &sc, &cfg.check_context()).map_err(runtime_err)?;
            for n in &rep.notes {
                let _ = writeln!(w, "note: {n}");
            }
            finish(w, "compose", &cfg, &[rep])
        }
        Command::Counterexample { rmax } => {
            if !(rmax >= 100.0) || !rmax.is_finite() {
                return Err(config_err(Error::Config("--rmax: need at least 100 for two decades".into())));
            }
            let mut cfg = RunConfig::parse("").map_err(config_err)?;
            ov.apply(&mut cfg)?;
            let mut r_values = Vec::new();
            let mut r = 10.0;
            while r <= rmax * (1.0 + 1e-12) {
                r_values.push(r);
                r *= 10.0;
            }
            let p = CounterexampleParams { r_values, ..Default::default() };
            let spec = CheckSpec::Counterexample(PlainCheck {
                id: "counterexample".into(),
                params: p,
            });
            let rep = run_check(&spec, &SuiteContext::default(), &cfg.check_context()).map_err(runtime_err)?;
            for n in &rep.notes {
                let _ = writeln!(w, "note: {n}");
            }
            finish(w, "counterexample", &cfg, &[rep])
        }
    }
}

/// Entry point for the binary.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_CONFIG } else { EXIT_PASS };
        }
    };
    let stdout = std::io::stdout();
    let mut lock = stdout.lock();
    match std::panic::catch_unwind(std::panic::AssertUnwindSafe(|| execute(cli, &mut lock))) {
        Ok(Ok(code)) => code,
        Ok(Err(f)) => {
            eprintln!("error: {}", f.error());
            f.code()
        }
        Err(_) => EXIT_RUNTIME,
    }
}
