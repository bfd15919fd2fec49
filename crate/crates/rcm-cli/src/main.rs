//! Command-line driver: parse a JSON config, run simulations, solves, or
//! diagram certifications, and persist CSV/JSON/RCMF outputs plus a manifest.
//! Exit codes: 0 success, 2 config error, 3 budget, 4 numeric-domain error.

use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use clap::{Parser, Subcommand};
use serde_json::json;

use rcm_core::config::RunConfig;
use rcm_core::diagrams::{desk_suite, mutate_lines, CertLine, DEFAULT_BUDGET_CELLS};
use rcm_core::grid::GridField;
use rcm_core::kernel::radial_integral;
use rcm_core::oz::{
    form_j, infrared_check, infrared_oracle, oz_deconvolve, AsymptoticModel, DecayFit,
    fit_decay_exponent, default_fit_window,
};
use rcm_core::radial::radial_green;
use rcm_core::sim::{
    build_graph, derive_seed, estimate_lambda_c, palm_two_point, sample_poisson, susceptibility,
    EstimateRecord,
};
use rcm_core::{io, special, AdjacencyKernel, BoxDomain, Error, Field, Result};

#[derive(Parser)]
#[command(name = "rcm", version, about = "Random connection model laboratory")]
struct Cli {
    /// JSON run configuration.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Output directory (created if missing).
    #[arg(long, global = true, default_value = "rcm-out")]
    out: PathBuf,
    /// Master seed override (defaults to seeds.master from the config).
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Rayon thread count (defaults to all cores).
    #[arg(long, global = true)]
    threads: Option<usize>,
    /// Grid-cell budget for spectral and diagram commands.
    #[arg(long, global = true)]
    budget_cells: Option<usize>,
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Sample one graph realization; write points.csv, edges.csv, adjacency.json.
    Adjacency,
    /// Two-point estimates at the configured displacements plus chi; records.csv.
    Simulate,
    /// Two-point estimates only; records.csv.
    Tau,
    /// Susceptibility only; records.csv.
    Chi,
    /// Bracket the finite-size critical intensity; lambda_c.json.
    LambdaC,
    /// Deconvolution report (oz.json) and the lam_tau field (lam_tau.rcmf).
    Oz {
        /// Use the d = 3 continuum radial pipeline instead of the torus grid.
        #[arg(long)]
        radial: bool,
    },
    /// Certification lines as JSON lines; certify.jsonl.
    Certify {
        /// Named suite; "desk-suite" runs the standard gaussian + disk panel.
        #[arg(long)]
        preset: Option<String>,
        /// Append mutated copies that must record deliberate failures.
        #[arg(long)]
        self_test: bool,
    },
    /// Join Monte Carlo records against a solved field and the power-law
    /// prediction; compare.csv.
    Compare {
        /// CSV of estimate records (simulate/tau output).
        #[arg(long)]
        records: PathBuf,
        /// RCMF field holding lam_tau (oz output).
        #[arg(long)]
        field: PathBuf,
    },
    /// Fit the radial decay exponent of an RCMF field; fit.json.
    Fit {
        #[arg(long)]
        field: PathBuf,
    },
}

fn exit_code(e: &Error) -> u8 {
    match e {
        Error::Config(_)
        | Error::InvalidKernel(_)
        | Error::NormalizationFailed(_)
        | Error::OddGridSize(_) => 2,
        Error::BudgetExceeded(_)
        | Error::GridTooLarge { .. }
        | Error::BoxTooLarge(_)
        | Error::Io(_)
        | Error::MalformedField(_) => 3,
        _ => 4,
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}

struct Ctx {
    cfg: RunConfig,
    out: PathBuf,
    master_seed: u64,
    budget: usize,
    outputs: Vec<String>,
}

impl Ctx {
    fn kernel(&self) -> Result<AdjacencyKernel> {
        self.cfg.kernel()
    }

    fn domain(&self) -> BoxDomain {
        BoxDomain::new(self.cfg.dimension, self.cfg.box_.l)
    }

    fn grid_n(&self) -> Result<usize> {
        self.cfg
            .grid
            .ok_or_else(|| Error::Config("this command requires the 'grid' key".into()))
    }

    fn phi_field(&self) -> Result<Field> {
        let n = self.grid_n()?;
        let cells = n.pow(self.cfg.dimension as u32);
        if cells > self.budget {
            return Err(Error::BudgetExceeded(format!(
                "grid has {cells} cells, budget {}",
                self.budget
            )));
        }
        GridField::discretize_kernel(&self.kernel()?, n, self.cfg.box_.l / n as f64)
    }

    fn path(&mut self, name: &str) -> PathBuf {
        self.outputs.push(name.to_string());
        self.out.join(name)
    }

    fn write_json(&mut self, name: &str, value: &serde_json::Value) -> Result<()> {
        let mut text = serde_json::to_string_pretty(value)
            .map_err(|e| Error::Config(e.to_string()))?;
        text.push('\n');
        io::atomic_write(&self.path(name), text.as_bytes())
    }

    fn write_records(&mut self, name: &str, records: &[EstimateRecord]) -> Result<()> {
        let path = self.path(name);
        if path.exists() {
            std::fs::remove_file(&path)?;
        }
        io::append_records(&path, records)
    }
}

fn run(cli: Cli) -> Result<ExitCode> {
    if let Some(t) = cli.threads {
        rayon::ThreadPoolBuilder::new()
            .num_threads(t)
            .build_global()
            .map_err(|e| Error::Config(e.to_string()))?;
    }
    let needs_config = !matches!(cli.cmd, Cmd::Certify { preset: Some(_), .. });
    let cfg = match &cli.config {
        Some(path) => {
            let text = std::fs::read_to_string(path).map_err(|e| {
                Error::Config(format!("cannot read config {}: {e}", path.display()))
            })?;
            RunConfig::from_json(&text)?
        }
        None if needs_config => {
            return Err(Error::Config("missing --config <path>".into()));
        }
        None => RunConfig::from_json(
            r#"{"dimension": 2, "kernel": {"variant": "gaussian"}, "lambda": 0.0,
                "box": {"L": 8.0}, "samples": 1}"#,
        )?,
    };
    std::fs::create_dir_all(&cli.out)?;
    let mut ctx = Ctx {
        master_seed: cli.seed.unwrap_or(cfg.seeds.master),
        budget: cli.budget_cells.unwrap_or(DEFAULT_BUDGET_CELLS),
        cfg,
        out: cli.out.clone(),
        outputs: Vec::new(),
    };
    let started = Instant::now();
    let (name, code) = match cli.cmd {
        Cmd::Adjacency => ("adjacency", cmd_adjacency(&mut ctx)?),
        Cmd::Simulate => ("simulate", cmd_estimates(&mut ctx, true, true)?),
        Cmd::Tau => ("tau", cmd_estimates(&mut ctx, true, false)?),
        Cmd::Chi => ("chi", cmd_estimates(&mut ctx, false, true)?),
        Cmd::LambdaC => ("lambda-c", cmd_lambda_c(&mut ctx)?),
        Cmd::Oz { radial } => ("oz", cmd_oz(&mut ctx, radial)?),
        Cmd::Certify { preset, self_test } => {
            ("certify", cmd_certify(&mut ctx, preset.as_deref(), self_test)?)
        }
        Cmd::Compare { records, field } => ("compare", cmd_compare(&mut ctx, &records, &field)?),
        Cmd::Fit { field } => ("fit", cmd_fit(&mut ctx, &field)?),
    };
    let manifest = json!({
        "command": name,
        "config_digest": ctx.cfg.digest(),
        "master_seed": ctx.master_seed,
        "threads": cli.threads,
        "budget_cells": ctx.budget,
        "package_version": env!("CARGO_PKG_VERSION"),
        "wall_time_ms": started.elapsed().as_millis() as u64,
        "outputs": ctx.outputs.clone(),
    });
    let mut text = serde_json::to_string_pretty(&manifest)
        .map_err(|e| Error::Config(e.to_string()))?;
    text.push('\n');
    io::atomic_write(&ctx.out.join("manifest.json"), text.as_bytes())?;
    Ok(code)
}

fn cmd_adjacency(ctx: &mut Ctx) -> Result<ExitCode> {
    let kernel = ctx.kernel()?;
    let domain = ctx.domain();
    let points = sample_poisson(&domain, ctx.cfg.lambda, derive_seed(ctx.master_seed, 0, 0))?;
    let graph = build_graph(
        points,
        Vec::new(),
        &kernel,
        &domain,
        derive_seed(ctx.master_seed, 0, 1),
    )?;
    let d = ctx.cfg.dimension;
    let mut pts = String::from("i");
    for axis in 1..=d {
        pts.push_str(&format!(",x{axis}"));
    }
    pts.push('\n');
    for (i, p) in graph.points.iter().enumerate() {
        pts.push_str(&i.to_string());
        for v in p {
            pts.push_str(&format!(",{v}"));
        }
        pts.push('\n');
    }
    io::atomic_write(&ctx.path("points.csv"), pts.as_bytes())?;
    let mut edges = String::from("i,j\n");
    for (i, j) in &graph.edges {
        edges.push_str(&format!("{i},{j}\n"));
    }
    io::atomic_write(&ctx.path("edges.csv"), edges.as_bytes())?;
    let n = graph.points.len();
    let summary = json!({
        "n_points": n,
        "n_edges": graph.edges.len(),
        "mean_degree": if n == 0 { 0.0 } else { 2.0 * graph.edges.len() as f64 / n as f64 },
        "config_digest": ctx.cfg.digest(),
    });
    ctx.write_json("adjacency.json", &summary)?;
    println!("adjacency: {} points, {} edges", n, graph.edges.len());
    Ok(ExitCode::SUCCESS)
}

fn cmd_estimates(ctx: &mut Ctx, want_tau: bool, want_chi: bool) -> Result<ExitCode> {
    let kernel = ctx.kernel()?;
    let domain = ctx.domain();
    let digest = ctx.cfg.digest();
    let mut records = Vec::new();
    if want_tau {
        let displacements = ctx.cfg.displacements.clone().ok_or_else(|| {
            Error::Config("two-point estimation requires the 'displacements' key".into())
        })?;
        for (i, x) in displacements.iter().enumerate() {
            if x.len() != ctx.cfg.dimension {
                return Err(Error::Config(format!(
                    "displacement {i} has {} coordinates, dimension is {}",
                    x.len(),
                    ctx.cfg.dimension
                )));
            }
            let mut rec = palm_two_point(
                &kernel,
                ctx.cfg.lambda,
                x,
                ctx.cfg.samples,
                &domain,
                derive_seed(ctx.master_seed, i as u64, 10),
            )?;
            rec.config_digest = digest.clone();
            records.push(rec);
        }
    }
    if want_chi {
        let mut rec = susceptibility(
            &kernel,
            ctx.cfg.lambda,
            &domain,
            ctx.cfg.samples,
            derive_seed(ctx.master_seed, 0, 11),
        )?;
        rec.config_digest = digest;
        records.push(rec);
    }
    ctx.write_records("records.csv", &records)?;
    println!("wrote {} records", records.len());
    Ok(ExitCode::SUCCESS)
}

fn cmd_lambda_c(ctx: &mut Ctx) -> Result<ExitCode> {
    let kernel = ctx.kernel()?;
    let range = ctx
        .cfg
        .lambda_range
        .ok_or_else(|| Error::Config("lambda-c requires the 'lambda_range' key".into()))?;
    let tol = ctx.cfg.tolerance.unwrap_or(0.05);
    let ladder = [
        BoxDomain::new(ctx.cfg.dimension, ctx.cfg.box_.l / 2.0),
        BoxDomain::new(ctx.cfg.dimension, ctx.cfg.box_.l),
    ];
    let (lo, hi) = estimate_lambda_c(
        &kernel,
        &ladder,
        range,
        tol,
        ctx.cfg.samples,
        ctx.master_seed,
    )?;
    let report = json!({
        "lambda_lo": lo,
        "lambda_hi": hi,
        "midpoint": 0.5 * (lo + hi),
        "config_digest": ctx.cfg.digest(),
    });
    ctx.write_json("lambda_c.json", &report)?;
    println!("lambda_c in [{lo}, {hi}]");
    Ok(ExitCode::SUCCESS)
}

fn soft_fit(points: &[(f64, f64)], window: (f64, f64)) -> (Option<DecayFit>, Option<String>) {
    match fit_decay_exponent(points, window) {
        Ok(fit) => (Some(fit), None),
        Err(e) => (None, Some(e.to_string())),
    }
}

fn cmd_oz(ctx: &mut Ctx, radial: bool) -> Result<ExitCode> {
    let kernel = ctx.kernel()?;
    let report = if radial {
        let n = ctx.grid_n()?;
        let sol = radial_green(&kernel, ctx.cfg.lambda, ctx.cfg.box_.l, n)?;
        let window = ctx
            .cfg
            .fit_window
            .unwrap_or((ctx.cfg.box_.l / 16.0, ctx.cfg.box_.l * 3.0 / 16.0));
        let (fit, fit_error) = soft_fit(&sol.points(), window);
        let d = kernel.d;
        let sigma = ctx.cfg.lambda / d as f64
            * radial_integral(d, kernel.r_cut, 200_000, |r| {
                r * r * kernel.eval_radial(r).unwrap_or(0.0)
            });
        let k_ir = infrared_oracle(&kernel, 1e-4, 50.0).map(|v| ctx.cfg.lambda * v);
        let mut profile = String::from("r,lam_tau\n");
        for (r, v) in sol.points() {
            profile.push_str(&format!("{r},{v}\n"));
        }
        io::atomic_write(&ctx.path("profile.csv"), profile.as_bytes())?;
        json!({
            "J_hat_zero": sol.j_hat_zero,
            "K_IR": k_ir,
            "sigma_diagonal": vec![sigma; d],
            "a_d": special::green_amplitude(d),
            "fit": fit,
            "fit_error": fit_error,
            "config_digest": ctx.cfg.digest(),
        })
    } else {
        let phi = ctx.phi_field()?;
        let pi = phi.scaled(0.0);
        let pair = form_j(&phi, &pi, ctx.cfg.lambda)?;
        let sol = oz_deconvolve(&pair)?;
        let ir = infrared_check(&pair);
        let model = AsymptoticModel::from_pair(&pair)?;
        let window = ctx.cfg.fit_window.unwrap_or_else(|| default_fit_window(&sol.lam_tau));
        let points: Vec<(f64, f64)> = (0..sol.lam_tau.shape.len())
            .map(|lin| (sol.lam_tau.radius(lin), sol.lam_tau.values[lin]))
            .collect();
        let (fit, fit_error) = soft_fit(&points, window);
        io::write_field(&ctx.path("lam_tau.rcmf"), &sol.lam_tau)?;
        json!({
            "J_hat_zero": ir.j_hat_zero,
            "K_IR": ir.k_ir,
            "sigma_diagonal": model.sigma_diag,
            "a_d": model.a_d,
            "residual_rel": sol.residual_rel,
            "regularized": sol.regularized,
            "fit": fit,
            "fit_error": fit_error,
            "config_digest": ctx.cfg.digest(),
        })
    };
    ctx.write_json("oz.json", &report)?;
    println!("oz: J_hat(0) = {}", report["J_hat_zero"]);
    Ok(ExitCode::SUCCESS)
}

fn prefixed(prefix: &str, lines: Vec<CertLine>) -> Vec<CertLine> {
    lines
        .into_iter()
        .map(|mut l| {
            l.case_id = format!("{prefix}-{}", l.case_id);
            l
        })
        .collect()
}

fn cmd_certify(ctx: &mut Ctx, preset: Option<&str>, self_test: bool) -> Result<ExitCode> {
    let budget = ctx.budget;
    let mut lines: Vec<CertLine> = match preset {
        Some("desk-suite") => {
            let lambdas = [0.3, 0.45, 0.6, 0.75, 0.9];
            let gauss =
                GridField::discretize_kernel(&AdjacencyKernel::gaussian(2), 16, 8.0 / 16.0)?;
            let disk = GridField::discretize_kernel(&AdjacencyKernel::disk(2), 16, 2.0 / 16.0)?;
            let mut out = prefixed("gauss", desk_suite(&gauss, &lambdas, budget)?);
            out.extend(prefixed("disk", desk_suite(&disk, &lambdas, budget)?));
            out
        }
        Some(other) => {
            return Err(Error::Config(format!("unknown certify preset '{other}'")));
        }
        None => {
            let lambdas = ctx.cfg.lambdas.clone().unwrap_or_default();
            if lambdas.is_empty() {
                Vec::new()
            } else {
                let phi = ctx.phi_field()?;
                desk_suite(&phi, &lambdas, budget)?
            }
        }
    };
    let failures = lines.iter().filter(|l| !l.holds).count();
    if self_test {
        lines.extend(mutate_lines(&lines.clone()));
    }
    let mut text = String::new();
    for line in &lines {
        text.push_str(&serde_json::to_string(line).map_err(|e| Error::Config(e.to_string()))?);
        text.push('\n');
    }
    io::atomic_write(&ctx.path("certify.jsonl"), text.as_bytes())?;
    let mutated_failures = lines
        .iter()
        .filter(|l| l.case_id.ends_with("-mutated") && !l.holds)
        .count();
    println!(
        "certified {} lines, {failures} failures{}",
        lines.len(),
        if self_test {
            format!(", {mutated_failures} deliberate self-test failures")
        } else {
            String::new()
        }
    );
    if failures > 0 {
        eprintln!("error: {failures} certification lines failed");
        return Ok(ExitCode::from(4));
    }
    if self_test && mutated_failures == 0 && !lines.is_empty() {
        eprintln!("error: self-test mutation produced no failures");
        return Ok(ExitCode::from(4));
    }
    Ok(ExitCode::SUCCESS)
}

/// Nearest-grid-point lookup of a field value at a continuum displacement.
fn field_at(f: &Field, x: &[f64]) -> f64 {
    let n = f.shape.n as i64;
    let mut idx = Vec::with_capacity(f.shape.d);
    for &xi in x {
        let i = (xi / f.h).round() as i64;
        idx.push(i.rem_euclid(n) as usize);
    }
    f.values[f.shape.index(&idx)]
}

fn cmd_compare(ctx: &mut Ctx, records: &Path, field: &Path) -> Result<ExitCode> {
    let lam_tau = io::read_field(field)?;
    let d = ctx.cfg.dimension;
    if lam_tau.shape.d != d {
        return Err(Error::ShapeMismatch(format!(
            "field has d = {}, config has d = {d}",
            lam_tau.shape.d
        )));
    }
    if (lam_tau.side() - ctx.cfg.box_.l).abs() > 1e-9 * ctx.cfg.box_.l {
        return Err(Error::ShapeMismatch(format!(
            "field box side {} does not match config L = {}",
            lam_tau.side(),
            ctx.cfg.box_.l
        )));
    }
    let phi = ctx.phi_field()?;
    let pair = form_j(&phi, &phi.scaled(0.0), ctx.cfg.lambda)?;
    let model = AsymptoticModel::from_pair(&pair)?;
    let mut reader = csv::Reader::from_path(records)?;
    let mut out = String::new();
    for axis in 1..=d {
        out.push_str(&format!("x{axis},"));
    }
    out.push_str("monte_carlo,oz,prediction,ratio_mc_oz,ratio_mc_prediction\n");
    let mut rows = 0usize;
    for row in reader.records() {
        let row = row?;
        if row.get(0) != Some("tau") {
            continue;
        }
        if row.len() != d + 6 {
            return Err(Error::ShapeMismatch(format!(
                "records row has {} columns, expected {} for d = {d}",
                row.len(),
                d + 6
            )));
        }
        let lambda: f64 = row[1].parse().map_err(|_| {
            Error::MalformedField("unparseable lambda in records CSV".into())
        })?;
        let x: Vec<f64> = (0..d)
            .map(|i| {
                row[2 + i].parse().map_err(|_| {
                    Error::MalformedField("unparseable coordinate in records CSV".into())
                })
            })
            .collect::<Result<_>>()?;
        let mc: f64 = row[2 + d].parse().map_err(|_| {
            Error::MalformedField("unparseable value in records CSV".into())
        })?;
        if lambda <= 0.0 {
            return Err(Error::Config("compare requires lambda > 0 records".into()));
        }
        let oz = field_at(&lam_tau, &x) / lambda;
        let pred = model.predict(&x);
        for xi in &x {
            out.push_str(&format!("{xi},"));
        }
        out.push_str(&format!(
            "{mc},{oz},{pred},{},{}\n",
            mc / oz,
            mc / pred
        ));
        rows += 1;
    }
    io::atomic_write(&ctx.path("compare.csv"), out.as_bytes())?;
    println!("compared {rows} rows");
    Ok(ExitCode::SUCCESS)
}

fn cmd_fit(ctx: &mut Ctx, field: &Path) -> Result<ExitCode> {
    let f = io::read_field(field)?;
    let window = ctx.cfg.fit_window.unwrap_or_else(|| default_fit_window(&f));
    let points: Vec<(f64, f64)> = (0..f.shape.len())
        .map(|lin| (f.radius(lin), f.values[lin]))
        .collect();
    let fit = fit_decay_exponent(&points, window)?;
    let report = json!({
        "fit": fit,
        "config_digest": ctx.cfg.digest(),
    });
    ctx.write_json("fit.json", &report)?;
    println!("fit exponent {}", fit.exponent);
    Ok(ExitCode::SUCCESS)
}
