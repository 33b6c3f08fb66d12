//! `fraclap`: meshes, single solves and convergence studies for the integral
//! fractional Laplacian.
//!
//! Exit codes: 0 on success, 2 for configuration or input errors, 3 for
//! numerical failures (including a study in which some sweep failed).

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use fraclap::study::{self, emit_plot, probe_half, StudyConfig};
use fraclap::*;

#[derive(Parser)]
#[command(name = "fraclap", version, about = "Finite elements for the integral fractional Laplacian")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Build a mesh and write it as JSON.
    Mesh {
        #[command(flatten)]
        mesh: MeshArgs,
        #[arg(long)]
        out: PathBuf,
    },
    /// Solve one problem and write the nodal values as CSV.
    Solve {
        #[command(flatten)]
        mesh: MeshArgs,
        #[arg(long)]
        s: f64,
        #[arg(long, default_value_t = 0)]
        k: u32,
        #[arg(long)]
        out: PathBuf,
    },
    /// Run a convergence study described by a TOML file.
    Study {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        plot: Option<PathBuf>,
        #[arg(long, value_enum, default_value_t = Axis::Dofs)]
        x: Axis,
        #[arg(long, value_enum, default_value_t = Quantity::H1)]
        y: Quantity,
    },
    /// H¹ seminorms of the discrete solutions for s = 1/2 on uniform meshes.
    ProbeHalf {
        #[arg(long, value_delimiter = ',', default_values_t = [250usize, 500, 1000, 2000])]
        nodes: Vec<usize>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Solve on a disk mesh and write log10 |∇u_h| per triangle.
    GradientField {
        #[arg(long)]
        h: f64,
        #[arg(long, default_value_t = 1.0)]
        mu: f64,
        #[arg(long)]
        s: f64,
        #[arg(long, default_value_t = 0)]
        k: u32,
        #[arg(long)]
        out: PathBuf,
    },
}

#[derive(Args)]
struct MeshArgs {
    /// 1 for the interval, 2 for the disk.
    #[arg(long, default_value_t = 1)]
    dim: usize,
    /// Node count of a uniform 1D mesh, or of a graded one (odd).
    #[arg(long)]
    nodes: Option<usize>,
    /// Mesh parameter of a disk mesh.
    #[arg(long)]
    h: Option<f64>,
    #[arg(long, default_value_t = 1.0)]
    mu: f64,
}

#[derive(Clone, Copy, ValueEnum)]
enum Axis {
    H,
    Dofs,
}

#[derive(Clone, Copy, ValueEnum)]
enum Quantity {
    L2,
    H1,
    Energy,
}

impl MeshArgs {
    fn build(&self) -> Result<Mesh> {
        match (self.dim, self.nodes, self.h) {
            (1, Some(n), None) if self.mu == 1.0 => build_uniform_1d(n),
            (1, Some(n), None) => {
                if n % 2 == 0 {
                    return Err(Error::Argument("graded 1D meshes have an odd node count".into()));
                }
                build_graded_1d((n - 1) / 2, self.mu)
            }
            (2, None, Some(h)) => build_disk_mesh(h, self.mu),
            (1, _, _) => Err(Error::Argument("a 1D mesh needs --nodes and no --h".into())),
            (2, _, _) => Err(Error::Argument("a disk mesh needs --h and no --nodes".into())),
            (d, _, _) => Err(Error::Argument(format!("--dim must be 1 or 2, got {d}"))),
        }
    }
}

fn threads() -> Result<usize> {
    let mut c = StudyConfig::new(1, vec![0.75], study::Grading::Uniform, vec![3.0]);
    c.apply_env()?;
    Ok(c.threads)
}

fn galerkin<'m>(mesh: &'m Mesh, s: f64, k: u32) -> Result<(SymmetricMatrix, LoadVector, DiscreteSolution<'m>, ProblemSpec)> {
    let spec = ProblemSpec::new(mesh.domain(), s, k)?;
    let a = assemble_stiffness(mesh, s)?;
    let b = assemble_load(mesh, &spec)?;
    let u = solve_spd(&a, &b)?;
    Ok((a, b, DiscreteSolution::new(mesh, u)?, spec))
}

fn solve(mesh: &Mesh, s: f64, k: u32, out: &PathBuf) -> Result<()> {
    let (a, b, sol, spec) = galerkin(mesh, s, k)?;
    std::fs::write(out, study::solution_csv(&sol)?)?;
    let r = error_report(&a, &b, &sol, &spec)?;
    println!("dofs={} h={:.6e} h_min={:.6e}", r.dofs, r.h, r.h_min);
    println!("l2={:.6e} h1={:.6e} energy={:.6e}", r.l2, r.h1_semi, r.energy);
    Ok(())
}

fn run_study(config: &PathBuf, out: &PathBuf, plot: Option<&PathBuf>, x: Axis, y: Quantity) -> Result<bool> {
    let mut cfg = StudyConfig::load(config)?;
    cfg.apply_env()?;
    let result = study::run_study(&cfg)?;
    result.write_csv(out)?;
    print!("{}", result.summary());
    if let Some(svg) = plot {
        let x = match x {
            Axis::H => XField::H,
            Axis::Dofs => XField::Dofs,
        };
        let y = match y {
            Quantity::L2 => YField::L2,
            Quantity::H1 => YField::H1,
            Quantity::Energy => YField::Energy,
        };
        emit_plot(out, x, y, svg)?;
    }
    Ok(!result.failed())
}

fn run(cli: Cli) -> Result<bool> {
    let threads = threads()?;
    match cli.command {
        Command::Mesh { mesh, out } => {
            let m = mesh.build()?;
            m.save(&out)?;
            let st = mesh_stats(&m);
            println!("nodes={} elements={} dofs={} h_max={:.6e} h_min={:.6e}", m.num_nodes(), m.num_elements(), m.num_dofs(), st.h_max, st.h_min);
            Ok(true)
        }
        Command::Solve { mesh, s, k, out } => {
            let m = mesh.build()?;
            study::with_threads(threads, || solve(&m, s, k, &out))??;
            Ok(true)
        }
        Command::Study { config, out, plot, x, y } => run_study(&config, &out, plot.as_ref(), x, y),
        Command::ProbeHalf { nodes, out } => {
            let probe = probe_half(&nodes, &QuadratureConfig::default(), threads)?;
            let text = probe.to_csv()?;
            match out {
                Some(path) => std::fs::write(path, &text)?,
                None => print!("{text}"),
            }
            eprintln!("strictly increasing: {}, growth {:.1}%", probe.strictly_increasing, 100.0 * probe.growth);
            Ok(probe.strictly_increasing)
        }
        Command::GradientField { h, mu, s, k, out } => {
            let m = build_disk_mesh(h, mu)?;
            study::with_threads(threads, || -> Result<()> {
                let (_, _, sol, _) = galerkin(&m, s, k)?;
                study::export_gradient_field(&sol, &out)
            })??;
            Ok(true)
        }
    }
}

fn exit_code(e: &Error) -> u8 {
    match e {
        Error::Config(_) | Error::Argument(_) | Error::Format(_) | Error::Io(_) | Error::Json(_) | Error::Csv(_) => 2,
        _ => 3,
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(3),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}
