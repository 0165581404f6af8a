use std::path::{Path, PathBuf};
use std::process::ExitCode;

use bergman_lab::config::ExperimentConfig;
use bergman_lab::harness;
use bergman_lab::output;
use bergman_lab::LabError;
use clap::{Args, Parser, Subcommand};

/// Weighted Bergman and spectral kernel experiments.
#[derive(Parser)]
#[command(name = "bergman-lab", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Closed-form model kernel on the grid
    ModelKernel(Common),
    /// Gram-pipeline kernels for every k (q = 0, positive eigenvalues)
    FockKernel(Common),
    /// Galerkin spectra of the scaled Laplacian for every k
    LaplacianSpectrum(Common),
    /// Convergence scan against the model kernel
    Converge(Common),
    /// Spectral gaps and their classification
    GapScan(Common),
    /// Convergence scan, gap scan and all report files
    Run(Common),
}

#[derive(Args)]
struct Common {
    #[arg(long)]
    config: PathBuf,
    /// output directory; overrides `[output] dir`
    #[arg(long)]
    out: Option<PathBuf>,
    /// worker threads, 0 = one per core
    #[arg(long, default_value_t = 0)]
    threads: usize,
    /// treat warnings as failures
    #[arg(long)]
    strict: bool,
}

enum Verdict {
    Pass,
    Fail,
}

fn out_dir(c: &Common, cfg: &ExperimentConfig) -> PathBuf {
    c.out.clone().or_else(|| cfg.output_dir.clone()).unwrap_or_else(|| PathBuf::from("bergman-out"))
}

fn verdict(pass: bool, warnings: &[String], strict: bool) -> Verdict {
    for w in warnings {
        eprintln!("warning: {w}");
    }
    if pass && !(strict && !warnings.is_empty()) {
        Verdict::Pass
    } else {
        Verdict::Fail
    }
}

fn fock_kernels(cfg: &ExperimentConfig, dir: &Path) -> Result<(), LabError> {
    if !cfg.uses_gram_path() {
        return Err(LabError::Unsupported("fock-kernel needs positive eigenvalues; use laplacian-spectrum or converge".into()));
    }
    let mut summary = Vec::new();
    for &k in &cfg.k_list {
        let (g, grid) = harness::gram_kernel_grid(cfg, k)?;
        output::write_kernel_grid(&dir.join(format!("fock_kernel_k{k}.csv")), cfg.dim(), &grid)?;
        summary.push(serde_json::json!({
            "k": k,
            "degree_cap": g.degree_cap,
            "quad_order": g.quad_order,
            "retained_dim": g.retained_dim(),
            "nodes_outside": g.nodes_outside,
            "underflow_nodes": g.underflow_nodes,
        }));
        println!("k = {k}: retained {} of {}", g.retained_dim(), g.monomials.len());
    }
    output::write_json(&dir.join("fock_summary.json"), &summary)
}

fn execute(cmd: Command) -> Result<Verdict, LabError> {
    let c = match &cmd {
        Command::ModelKernel(c)
        | Command::FockKernel(c)
        | Command::LaplacianSpectrum(c)
        | Command::Converge(c)
        | Command::GapScan(c)
        | Command::Run(c) => c,
    };
    rayon::ThreadPoolBuilder::new()
        .num_threads(c.threads)
        .build_global()
        .map_err(|e| LabError::Unsupported(e.to_string()))?;
    let cfg = ExperimentConfig::from_file(&c.config)?;
    let dir = out_dir(c, &cfg);
    output::ensure_dir(&dir)?;
    match cmd {
        Command::ModelKernel(_) => {
            output::write_model_grid(&dir.join("model_kernel.csv"), &cfg.model, cfg.q, &cfg.grid())?;
            Ok(verdict(true, &cfg.warnings, c.strict))
        }
        Command::FockKernel(_) => {
            fock_kernels(&cfg, &dir)?;
            Ok(verdict(true, &cfg.warnings, c.strict))
        }
        Command::LaplacianSpectrum(_) => {
            let s = harness::spectra(&cfg, cfg.q)?;
            output::write_spectra(&dir.join("spectrum.csv"), cfg.q, &s)?;
            for sp in &s {
                let low: Vec<String> = sp.data.eigenvalues.iter().take(4).map(|e| format!("{e:.6}")).collect();
                println!("k = {}: lowest scaled eigenvalues {}", sp.k, low.join(", "));
            }
            Ok(verdict(true, &cfg.warnings, c.strict))
        }
        Command::Converge(_) => {
            let conv = harness::convergence_scan(&cfg)?;
            for g in &conv.grids {
                output::write_kernel_grid(&dir.join(format!("kernel_k{}.csv", g.k)), cfg.dim(), g)?;
            }
            output::write_json(&dir.join("convergence.json"), &conv.report)?;
            let text = output::summary_text(&cfg, &conv.report, None, conv.report.pass);
            std::fs::write(dir.join("summary.txt"), &text).map_err(|e| LabError::Io { path: dir.join("summary.txt"), source: e })?;
            print!("{text}");
            Ok(verdict(conv.report.pass, &conv.report.warnings, c.strict))
        }
        Command::GapScan(_) => {
            let (g, s) = harness::gap_scan(&cfg)?;
            output::write_gaps(&dir.join("gaps.csv"), &g)?;
            output::write_spectra(&dir.join("spectrum.csv"), cfg.q, &s)?;
            output::write_json(&dir.join("gap.json"), &g)?;
            for p in &g.points {
                println!("k = {}: kernel {} gap {:.6e}", p.k, p.kernel_dim, p.gap);
            }
            println!("{}: {}", g.polynomial.mode, g.polynomial.pass);
            println!("{}: {}", g.exponential.mode, g.exponential.pass);
            Ok(verdict(g.pass, &cfg.warnings, c.strict))
        }
        Command::Run(_) => {
            let o = harness::run_experiment(&cfg)?;
            output::write_outcome(&dir, &cfg, &o)?;
            print!("{}", output::summary_text(&cfg, &o.convergence.report, o.gap.as_ref(), o.pass));
            Ok(verdict(o.pass, &o.convergence.report.warnings, c.strict))
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match execute(cli.command) {
        Ok(Verdict::Pass) => ExitCode::SUCCESS,
        Ok(Verdict::Fail) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}
