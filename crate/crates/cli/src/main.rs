mod artifact;
mod commands;
mod config;
mod plot;

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};

use skinlab::spectral::{MetricKind, OuterCondition, SolverConfig};

use artifact::{load_mesh, write_atomic, Artifact};
use commands::{Ctx, CurveRequest, HardyRequest, Methods};
use config::{RunConfig, Shape};

/// Skin fields, covers, uniform curves and Hardy constants on discrete minimal hypersurfaces.
#[derive(Parser)]
#[command(name = "skinlab", version, about)]
struct Cli {
    /// JSON run configuration; flags override it.
    #[arg(long, global = true, value_name = "FILE")]
    config: Option<PathBuf>,
    /// Directory for artifacts without an explicit -o.
    #[arg(long, global = true, value_name = "DIR")]
    out: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Output {
    /// Artifact path (default <out>/<kind>.json).
    #[arg(short, long, value_name = "FILE")]
    output: Option<PathBuf>,
}

#[derive(Args)]
struct Plots {
    /// Also write CSV plot data next to the artifact (radial, scatter, band-sweep, refinement).
    #[arg(long, value_name = "KIND")]
    plot: Vec<String>,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a mesh.
    Generate {
        #[arg(long, value_enum)]
        shape: Option<Shape>,
        #[arg(long)]
        p: Option<usize>,
        #[arg(long)]
        q: Option<usize>,
        #[arg(long)]
        r_min: Option<f64>,
        #[arg(long)]
        r_max: Option<f64>,
        #[arg(long)]
        angular_res: Option<usize>,
        #[arg(long)]
        radial_res: Option<usize>,
        #[arg(long)]
        extent: Option<f64>,
        #[arg(long)]
        height: Option<f64>,
        #[arg(long)]
        res: Option<usize>,
        #[command(flatten)]
        out: Output,
    },
    /// Compute the skin field of a mesh.
    Skin {
        #[arg(long)]
        mesh: PathBuf,
        #[arg(long, default_value_t = 1.0)]
        alpha: f64,
        /// Compare against the brute-force oracle (small meshes only).
        #[arg(long)]
        oracle: bool,
        #[command(flatten)]
        out: Output,
        #[command(flatten)]
        plots: Plots,
    },
    /// Verify the skin axioms, optionally across an α sweep.
    Axioms {
        #[arg(long)]
        mesh: PathBuf,
        #[arg(long)]
        skin: PathBuf,
        /// Comma-separated α values; `--sweep` alone uses the configured alphas.
        #[arg(long, value_delimiter = ',', num_args = 0..)]
        sweep: Option<Vec<f64>>,
        #[command(flatten)]
        out: Output,
    },
    /// Build the ball cover.
    Cover {
        #[arg(long)]
        mesh: PathBuf,
        #[arg(long)]
        skin: PathBuf,
        #[arg(long)]
        xi: Option<f64>,
        /// Enforce ξ < 1/(10³ L) instead of the relaxed bound.
        #[arg(long)]
        strict: bool,
        #[command(flatten)]
        out: Output,
    },
    /// Perturb a cover into quantitative transversality.
    Qt {
        #[arg(long)]
        mesh: PathBuf,
        #[arg(long)]
        skin: PathBuf,
        #[arg(long)]
        cover: PathBuf,
        #[arg(long)]
        tau: Option<f64>,
        #[arg(long)]
        epsilon: Option<f64>,
        #[command(flatten)]
        out: Output,
    },
    /// Whitney-smooth the skin field over a cover.
    Smooth {
        #[arg(long)]
        mesh: PathBuf,
        #[arg(long)]
        skin: PathBuf,
        #[arg(long)]
        cover: PathBuf,
        #[command(flatten)]
        out: Output,
        #[command(flatten)]
        plots: Plots,
    },
    /// Certify skin uniform curves.
    Curve {
        #[arg(long)]
        mesh: PathBuf,
        #[arg(long)]
        skin: PathBuf,
        /// One endpoint pair; omit both for deterministic sampled pairs.
        #[arg(long, requires = "q")]
        p: Option<usize>,
        #[arg(long, requires = "p")]
        q: Option<usize>,
        #[arg(long)]
        pairs: Option<usize>,
        #[arg(long, value_enum, default_value_t = MethodArg::Both)]
        method: MethodArg,
        /// Blow-up factors to compare against (default 0.5,2).
        #[arg(long, value_delimiter = ',')]
        blow_up: Option<Vec<f64>>,
        /// Pairs with both endpoints on the singular proxy.
        #[arg(long)]
        proxy_pairs: Option<usize>,
        #[command(flatten)]
        out: Output,
        #[command(flatten)]
        plots: Plots,
    },
    /// Build and verify skin domains at several levels.
    Domain {
        #[arg(long)]
        mesh: PathBuf,
        #[arg(long)]
        skin: PathBuf,
        #[arg(long)]
        cover: PathBuf,
        #[arg(long, value_delimiter = ',')]
        a: Option<Vec<f64>>,
        #[arg(long)]
        link_pairs: Option<usize>,
        #[arg(long)]
        domain_pairs: Option<usize>,
        #[command(flatten)]
        out: Output,
    },
    /// Estimate the Hardy constant.
    Hardy {
        #[arg(long)]
        mesh: PathBuf,
        #[arg(long)]
        skin: PathBuf,
        #[arg(long, value_delimiter = ',')]
        band: Option<Vec<f64>>,
        #[arg(long, value_enum, default_value_t = OuterArg::Dirichlet)]
        outer: OuterArg,
        /// Radial resolutions for the refinement drift check (cones); `--refine` alone skips it.
        #[arg(long, value_delimiter = ',', num_args = 0..)]
        refine: Option<Vec<usize>>,
        /// Also solve with weight 1/dist².
        #[arg(long)]
        dist_variant: bool,
        #[arg(long)]
        tol: Option<f64>,
        #[command(flatten)]
        out: Output,
        #[command(flatten)]
        plots: Plots,
    },
    /// Sampled skin and quasi-hyperbolic distances.
    Metric {
        #[arg(long)]
        mesh: PathBuf,
        #[arg(long)]
        skin: Option<PathBuf>,
        #[arg(long, value_enum, default_value_t = KindArg::Both)]
        kind: KindArg,
        #[arg(long)]
        pairs: Option<usize>,
        #[command(flatten)]
        out: Output,
    },
    /// Four-point hyperbolicity of a sampled metric.
    Hyperbolicity {
        #[arg(long)]
        mesh: PathBuf,
        #[arg(long)]
        skin: Option<PathBuf>,
        #[arg(long, value_enum, default_value_t = KindArg::QuasiHyperbolic)]
        kind: KindArg,
        #[arg(long)]
        samples: Option<usize>,
        #[arg(long)]
        budget: Option<usize>,
        #[command(flatten)]
        out: Output,
    },
    /// Aggregate the artifacts in a directory by acceptance criterion.
    Report {
        #[arg(long)]
        dir: PathBuf,
        /// Fail when any criterion has no artifact.
        #[arg(long)]
        require_all: bool,
        #[command(flatten)]
        out: Output,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum MethodArg {
    Pipeline,
    Search,
    Both,
}

#[derive(Clone, Copy, ValueEnum)]
enum OuterArg {
    Dirichlet,
    Neumann,
}

#[derive(Clone, Copy, PartialEq, ValueEnum)]
enum KindArg {
    Skin,
    QuasiHyperbolic,
    Both,
}

fn plot_path(artifact: &Path, kind: &str) -> PathBuf {
    artifact.with_extension(format!("{kind}.csv"))
}

/// Writes the artifact and any requested plot data, then prints a one-line summary.
fn finish(artifact: &Artifact, path: &Path, plots: &[String], mesh: Option<&Path>) -> Result<bool> {
    let loaded = match (plots.iter().any(|k| k == "radial"), mesh) {
        (true, Some(m)) => Some(load_mesh(m)?.value),
        _ => None,
    };
    let csvs: Vec<(PathBuf, String)> = plots
        .iter()
        .map(|k| Ok((plot_path(path, k), plot::emit_plot_data(artifact, loaded.as_ref(), k)?)))
        .collect::<Result<_>>()?;
    write_atomic(path, artifact.to_json().as_bytes())?;
    for (p, csv) in csvs {
        write_atomic(&p, csv.as_bytes())?;
    }
    let failed: Vec<&str> = artifact.checks.iter().filter(|c| !c.pass).map(|c| c.name.as_str()).collect();
    let status = if artifact.pass { "PASS".to_string() } else { format!("FAIL ({})", failed.join(", ")) };
    println!("{}: {} [{} checks] -> {}", artifact.kind, status, artifact.checks.len(), path.display());
    Ok(artifact.pass)
}

fn metric_kinds(k: KindArg) -> Vec<MetricKind> {
    match k {
        KindArg::Skin => vec![MetricKind::Skin],
        KindArg::QuasiHyperbolic => vec![MetricKind::QuasiHyperbolic],
        KindArg::Both => vec![MetricKind::Skin, MetricKind::QuasiHyperbolic],
    }
}

fn run(cli: Cli) -> Result<bool> {
    let config = match &cli.config {
        Some(p) => RunConfig::load(p)?,
        None => RunConfig::default(),
    };
    let out_dir = cli.out.clone().unwrap_or_else(|| config.output_dir.clone());
    let ctx = Ctx { config, out_dir };
    let c = &ctx.config;
    match cli.command {
        Command::Generate { shape, p, q, r_min, r_max, angular_res, radial_res, extent, height, res, out } => {
            let mut params = c.surface.clone();
            params.shape = shape.unwrap_or(params.shape);
            params.p = p.unwrap_or(params.p);
            params.q = q.unwrap_or(params.q);
            params.r_min = r_min.unwrap_or(params.r_min);
            params.r_max = r_max.unwrap_or(params.r_max);
            params.angular_res = angular_res.unwrap_or(params.angular_res);
            params.radial_res = radial_res.unwrap_or(params.radial_res);
            params.extent = extent.unwrap_or(params.extent);
            params.height = height.unwrap_or(params.height);
            params.res = res.unwrap_or(params.res);
            let (a, _) = commands::generate(&params)?;
            finish(&a, &ctx.output(&out.output, "mesh"), &[], None)
        }
        Command::Skin { mesh, alpha, oracle, out, plots } => {
            let (a, _) = commands::skin(&ctx, &mesh, alpha, oracle)?;
            finish(&a, &ctx.output(&out.output, "skin"), &plots.plot, Some(&mesh))
        }
        Command::Axioms { mesh, skin, sweep, out } => {
            let sweep = match sweep {
                Some(v) if v.is_empty() => c.alphas.clone(),
                Some(v) => v,
                None => Vec::new(),
            };
            let a = commands::axioms(&ctx, &mesh, &skin, &sweep)?;
            finish(&a, &ctx.output(&out.output, "axioms"), &[], None)
        }
        Command::Cover { mesh, skin, xi, strict, out } => {
            let a = commands::cover(&ctx, &mesh, &skin, xi.unwrap_or(c.xi), strict)?;
            finish(&a, &ctx.output(&out.output, "cover"), &[], None)
        }
        Command::Qt { mesh, skin, cover, tau, epsilon, out } => {
            let a = commands::qt(&ctx, &mesh, &skin, &cover, tau.unwrap_or(c.tau_target), epsilon)?;
            finish(&a, &ctx.output(&out.output, "qt"), &[], None)
        }
        Command::Smooth { mesh, skin, cover, out, plots } => {
            let (a, _) = commands::smooth(&mesh, &skin, &cover)?;
            finish(&a, &ctx.output(&out.output, "smooth"), &plots.plot, Some(&mesh))
        }
        Command::Curve { mesh, skin, p, q, pairs, method, blow_up, proxy_pairs, out, plots } => {
            let req = CurveRequest {
                pairs: p.zip(q).into_iter().collect(),
                methods: match method {
                    MethodArg::Pipeline => Methods::Pipeline,
                    MethodArg::Search => Methods::Search,
                    MethodArg::Both => Methods::Both,
                },
                blow_up: blow_up.unwrap_or_else(|| vec![0.5, 2.0]),
                proxy_pairs: proxy_pairs.unwrap_or(c.budgets.proxy_pairs),
            };
            let a = commands::curve(&ctx, &mesh, &skin, pairs, req)?;
            finish(&a, &ctx.output(&out.output, "curve"), &plots.plot, None)
        }
        Command::Domain { mesh, skin, cover, a, link_pairs, domain_pairs, out } => {
            let levels = a.unwrap_or_else(|| c.domain_levels.clone());
            let link = link_pairs.unwrap_or(c.budgets.link_pairs);
            let pairs = domain_pairs.unwrap_or(c.budgets.domain_pairs);
            let art = commands::domain(&ctx, &mesh, &skin, &cover, &levels, link, pairs)?;
            finish(&art, &ctx.output(&out.output, "domain"), &[], None)
        }
        Command::Hardy { mesh, skin, band, outer, refine, dist_variant, tol, out, plots } => {
            let mut solver = SolverConfig::default();
            if let Some(t) = tol {
                solver.tol = t;
            }
            let req = HardyRequest {
                bands: band.unwrap_or_else(|| c.bands.clone()),
                outer: match outer {
                    OuterArg::Dirichlet => OuterCondition::Dirichlet,
                    OuterArg::Neumann => OuterCondition::Neumann,
                },
                refinements: refine.unwrap_or_else(|| c.refinements.clone()),
                dist_variant,
                solver,
            };
            let a = commands::hardy(&ctx, &mesh, &skin, req)?;
            finish(&a, &ctx.output(&out.output, "hardy"), &plots.plot, None)
        }
        Command::Metric { mesh, skin, kind, pairs, out } => {
            let count = pairs.unwrap_or(c.budgets.metric_pairs);
            let a = commands::metric(&ctx, &mesh, skin.as_deref(), &metric_kinds(kind), count)?;
            finish(&a, &ctx.output(&out.output, "metric"), &[], None)
        }
        Command::Hyperbolicity { mesh, skin, kind, samples, budget, out } => {
            let kind = match kind {
                KindArg::Skin => MetricKind::Skin,
                KindArg::QuasiHyperbolic => MetricKind::QuasiHyperbolic,
                KindArg::Both => bail!("hyperbolicity takes a single metric kind"),
            };
            let samples = samples.unwrap_or(c.budgets.samples);
            let budget = budget.unwrap_or(c.budgets.quadruples);
            let a = commands::hyperbolicity(&ctx, &mesh, skin.as_deref(), kind, samples, budget)?;
            finish(&a, &ctx.output(&out.output, "hyperbolicity"), &[], None)
        }
        Command::Report { dir, require_all, out } => {
            let path = out.output.unwrap_or_else(|| dir.join("report.json"));
            let a = commands::report(&dir, require_all, &path)?;
            finish(&a, &path, &[], None)
        }
    }
}

fn threads() -> Result<()> {
    if let Ok(v) = std::env::var("SKINLAB_THREADS") {
        let n: usize = v.trim().parse().with_context(|| format!("SKINLAB_THREADS = '{v}' is not a thread count"))?;
        rayon::ThreadPoolBuilder::new().num_threads(n).build_global()?;
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match threads().and_then(|_| run(cli)) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(2),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn cli_definition_is_consistent() {
        use clap::CommandFactory;
        Cli::command().debug_assert();
    }

    #[test]
    fn plot_paths_sit_beside_the_artifact() {
        assert_eq!(plot_path(Path::new("out/hardy.json"), "band-sweep"), PathBuf::from("out/hardy.band-sweep.csv"));
    }

    #[test]
    fn report_skips_foreign_json() {
        let dir = tempfile::tempdir().unwrap();
        std::fs::write(dir.path().join("notes.json"), "{}").unwrap();
        let a = commands::report(dir.path(), false, &dir.path().join("report.json")).unwrap();
        assert!(a.inputs.is_empty());
        assert!(a.checks.is_empty());
        assert!(artifact::read(&dir.path().join("notes.json")).is_err());
    }
}
