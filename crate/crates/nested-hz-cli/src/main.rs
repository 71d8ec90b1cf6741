//! Command-line driver for uniform and adaptive studies.

use clap::{Args, Parser, Subcommand};
use nested_hz::adapt::{adapt_loop, uniform_loop, LevelData, LevelRecord, StopRule};
use nested_hz::mesh::Mesh;
use nested_hz::problems::{self, error_a_vs_reference, ProblemSpec, SpaceRequest};
use nested_hz::report::{compare_table, parse_csv, summary_table, write_csv};
use nested_hz::space::build_dof_map;
use nested_hz::system::QuadConfig;
use std::collections::HashMap;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::sync::Arc;

#[derive(Parser)]
#[command(name = "nested-hz", about = "Mixed stress-displacement elasticity studies on bisection meshes")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a uniform or adaptive refinement study and write per-level CSV
    /// plus a summary table with observed orders.
    Run(RunArgs),
    /// Compare two run CSVs level by level.
    Compare(CompareArgs),
    /// Print counts and quality measures of a mesh file.
    MeshInfo { path: PathBuf },
}

#[derive(Args, Default, Clone)]
struct RunArgs {
    /// Problem name: smooth | patch | interface | lshape | cook
    #[arg(long)]
    problem: Option<String>,
    /// Stress space: original | extended | corner-relaxed | extended-manual
    /// | extended-corner-relaxed
    #[arg(long)]
    space: Option<String>,
    /// uniform | adaptive
    #[arg(long)]
    mode: Option<String>,
    /// Number of levels to run (>= 1)
    #[arg(long)]
    levels: Option<usize>,
    /// Adaptive stop: refine until this many stress dofs
    #[arg(long)]
    max_dofs: Option<usize>,
    /// Bulk marking parameter in (0,1)
    #[arg(long)]
    theta: Option<f64>,
    /// Quadrature degree for the stiffness/mass integrals (6..=20)
    #[arg(long)]
    quad_degree: Option<usize>,
    /// Worker threads (this build computes single-threaded)
    #[arg(long)]
    threads: Option<usize>,
    /// Output directory (the NESTED_HZ_OUT environment variable overrides)
    #[arg(long)]
    out: Option<PathBuf>,
    /// Optional key = value config file; explicit flags win
    #[arg(long)]
    config: Option<PathBuf>,
    /// Also write per-level mesh files
    #[arg(long, default_value_t = false)]
    dump_meshes: bool,
    /// Reference stress file for error columns on problems without an
    /// exact solution
    #[arg(long)]
    reference: Option<PathBuf>,
    /// Write the final stress as a reference file
    #[arg(long)]
    write_reference: Option<PathBuf>,
}

#[derive(Args)]
struct CompareArgs {
    a: PathBuf,
    b: PathBuf,
    /// Write the comparison table here instead of stdout only
    #[arg(long)]
    out: Option<PathBuf>,
}

fn merge_config(args: &mut RunArgs, path: &Path) -> Result<(), String> {
    let text = std::fs::read_to_string(path).map_err(|e| format!("cannot read config {path:?}: {e}"))?;
    let mut kv = HashMap::new();
    for (k, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let Some((key, value)) = line.split_once('=') else {
            return Err(format!("config line {}: expected key = value", k + 1));
        };
        kv.insert(key.trim().to_string(), value.trim().to_string());
    }
    let parse =
        |v: &String, what: &str| -> Result<usize, String> { v.parse().map_err(|e| format!("config {what}: {e}")) };
    for (key, value) in &kv {
        match key.as_str() {
            "problem" => {
                args.problem.get_or_insert_with(|| value.clone());
            }
            "space" => {
                args.space.get_or_insert_with(|| value.clone());
            }
            "mode" => {
                args.mode.get_or_insert_with(|| value.clone());
            }
            "levels" => {
                if args.levels.is_none() {
                    args.levels = Some(parse(value, "levels")?);
                }
            }
            "max-dofs" | "max_dofs" => {
                if args.max_dofs.is_none() {
                    args.max_dofs = Some(parse(value, "max-dofs")?);
                }
            }
            "theta" => {
                if args.theta.is_none() {
                    args.theta = Some(value.parse().map_err(|e| format!("config theta: {e}"))?);
                }
            }
            "quad-degree" | "quad_degree" => {
                if args.quad_degree.is_none() {
                    args.quad_degree = Some(parse(value, "quad-degree")?);
                }
            }
            "threads" => {
                if args.threads.is_none() {
                    args.threads = Some(parse(value, "threads")?);
                }
            }
            "out" => {
                if args.out.is_none() {
                    args.out = Some(PathBuf::from(value));
                }
            }
            other => return Err(format!("unknown config key {other:?}")),
        }
    }
    Ok(())
}

fn quad_config(degree: Option<usize>) -> Result<QuadConfig, String> {
    let mut q = QuadConfig::default();
    if let Some(d) = degree {
        if !(6..=20).contains(&d) {
            return Err(format!("--quad-degree must be in 6..=20, got {d}"));
        }
        q.mass_degree = d;
        q.load_degree = q.load_degree.max(d);
        q.edge_degree = q.edge_degree.max(d);
    }
    Ok(q)
}

/// Reference stress file: mesh text, then `field v1 <dofcount>` and one
/// coefficient per line.
fn write_reference_file(path: &Path, data: &LevelData) -> Result<(), String> {
    let mut text = data.mesh.to_text();
    let coeffs = &data.output.stress.coeffs;
    text.push_str(&format!("field v1 {}\n", coeffs.len()));
    for c in coeffs {
        text.push_str(&format!("{c:.17e}\n"));
    }
    std::fs::write(path, text).map_err(|e| format!("cannot write reference {path:?}: {e}"))
}

fn load_reference_file(
    path: &Path,
    problem: &ProblemSpec,
    request: SpaceRequest,
) -> Result<nested_hz::fields::StressField, String> {
    let text = std::fs::read_to_string(path).map_err(|e| format!("cannot read reference {path:?}: {e}"))?;
    let marker = "field v1 ";
    let pos = text.find(marker).ok_or_else(|| format!("reference {path:?}: missing field header"))?;
    let mesh = Mesh::from_text(&text[..pos]).map_err(|e| format!("reference mesh: {e}"))?;
    let mesh = Arc::new(mesh);
    let mut lines = text[pos..].lines();
    let header = lines.next().unwrap();
    let count: usize = header[marker.len()..]
        .trim()
        .parse()
        .map_err(|e| format!("reference field header: {e}"))?;
    let coeffs: Result<Vec<f64>, _> = lines.filter(|l| !l.trim().is_empty()).map(|l| l.trim().parse()).collect();
    let coeffs = coeffs.map_err(|e| format!("reference coefficients: {e}"))?;
    if coeffs.len() != count {
        return Err(format!("reference {path:?}: expected {count} coefficients, found {}", coeffs.len()));
    }
    let kind = problem.space_kind(&mesh, request);
    let map = Arc::new(build_dof_map(&mesh, kind).map_err(|e| format!("reference space: {e}"))?);
    if map.n_stress != count {
        return Err(format!(
            "reference {path:?} has {count} stress dofs but the {} space on its mesh has {}",
            request.name(),
            map.n_stress
        ));
    }
    Ok(nested_hz::fields::StressField { dofmap: map, coeffs })
}

fn run(mut args: RunArgs) -> Result<(), String> {
    if let Some(cfg) = args.config.clone() {
        merge_config(&mut args, &cfg)?;
    }
    let problem_name = args.problem.clone().ok_or("missing --problem")?;
    let problem = problems::by_name(&problem_name)
        .ok_or_else(|| format!("unknown problem {problem_name:?}; expected one of {:?}", problems::PROBLEM_NAMES))?;
    let space_name = args.space.clone().unwrap_or_else(|| problem.recommended.name().to_string());
    let request = SpaceRequest::parse(&space_name).ok_or_else(|| {
        format!(
            "unknown space {space_name:?}; expected original | extended | corner-relaxed | \
             extended-corner-relaxed | extended-manual"
        )
    })?;
    if matches!(request, SpaceRequest::ExtendedManual) && problem.split_rule.is_none() {
        return Err(format!("problem {problem_name:?} defines no manual split rule; extended-manual is unavailable"));
    }
    let mode = args.mode.clone().unwrap_or_else(|| "uniform".into());
    let theta = args.theta.unwrap_or(0.5);
    let quad = quad_config(args.quad_degree)?;
    if let Some(t) = args.threads {
        if t == 0 {
            return Err("--threads must be at least 1".into());
        }
        if t > 1 {
            eprintln!("note: this build computes single-threaded; --threads {t} ignored");
        }
    }
    let out_dir = match std::env::var_os("NESTED_HZ_OUT") {
        Some(v) => PathBuf::from(v),
        None => args.out.clone().unwrap_or_else(|| PathBuf::from(".")),
    };
    std::fs::create_dir_all(&out_dir).map_err(|e| format!("cannot create {out_dir:?}: {e}"))?;

    let levels = match mode.as_str() {
        "uniform" => {
            let n = args.levels.unwrap_or(4);
            if n < 1 {
                return Err("--levels must be at least 1".into());
            }
            if args.max_dofs.is_some() {
                return Err("--max-dofs applies to adaptive mode only".into());
            }
            uniform_loop(&problem, request, n, &quad).map_err(|e| e.to_string())?
        }
        "adaptive" => {
            if !(0.0 < theta && theta < 1.0) {
                return Err(format!("--theta must be in (0,1), got {theta}"));
            }
            let stop = match (args.levels, args.max_dofs) {
                (Some(_), Some(_)) => return Err("choose one of --levels and --max-dofs".into()),
                (Some(n), None) if n >= 1 => StopRule::Levels(n),
                (Some(_), None) => return Err("--levels must be at least 1".into()),
                (None, Some(n)) => StopRule::MaxStressDofs(n),
                (None, None) => StopRule::Levels(10),
            };
            adapt_loop(&problem, request, theta, stop, &quad).map_err(|e| e.to_string())?
        }
        other => return Err(format!("unknown mode {other:?}; expected uniform or adaptive")),
    };

    let mut rows: Vec<LevelRecord> = levels.iter().map(LevelRecord::from_level).collect();
    // reference-based energy errors for problems without an exact solution
    if let Some(ref_path) = &args.reference {
        let reference = load_reference_file(ref_path, &problem, request)?;
        for (row, data) in rows.iter_mut().zip(&levels) {
            row.error_a = Some(error_a_vs_reference(&problem, &data.output.stress, &reference, &quad));
        }
    }

    let stem = format!("{problem_name}_{}_{mode}", request.name());
    let csv_path = out_dir.join(format!("{stem}.csv"));
    std::fs::write(&csv_path, write_csv(&rows)).map_err(|e| format!("cannot write {csv_path:?}: {e}"))?;
    let summary = summary_table(&rows, mode == "uniform");
    let summary_path = out_dir.join(format!("{stem}_summary.txt"));
    std::fs::write(&summary_path, &summary).map_err(|e| format!("cannot write {summary_path:?}: {e}"))?;
    if args.dump_meshes {
        for data in &levels {
            let mesh_path = out_dir.join(format!("{stem}_level{}.mesh", data.level));
            std::fs::write(&mesh_path, data.mesh.to_text())
                .map_err(|e| format!("cannot write {mesh_path:?}: {e}"))?;
        }
    }
    if let Some(ref_out) = &args.write_reference {
        write_reference_file(ref_out, levels.last().expect("at least one level"))?;
    }
    println!("{summary}");
    println!("wrote {}", csv_path.display());
    Ok(())
}

fn compare(args: CompareArgs) -> Result<(), String> {
    let a = parse_csv(&std::fs::read_to_string(&args.a).map_err(|e| format!("{:?}: {e}", args.a))?)
        .map_err(|e| format!("{:?}: {e}", args.a))?;
    let b = parse_csv(&std::fs::read_to_string(&args.b).map_err(|e| format!("{:?}: {e}", args.b))?)
        .map_err(|e| format!("{:?}: {e}", args.b))?;
    let table = compare_table(&a, &b);
    if let Some(out) = &args.out {
        std::fs::write(out, &table).map_err(|e| format!("cannot write {out:?}: {e}"))?;
    }
    print!("{table}");
    Ok(())
}

fn mesh_info(path: &Path) -> Result<(), String> {
    let text = std::fs::read_to_string(path).map_err(|e| format!("{path:?}: {e}"))?;
    let mesh = Mesh::from_text(&text).map_err(|e| e.to_string())?;
    println!("vertices:  {}", mesh.n_vertices());
    println!("triangles: {}", mesh.n_elems());
    println!("edges:     {}", mesh.edges.len());
    println!("boundary:  {}", mesh.n_boundary_edges());
    let mut per_marker: HashMap<i32, usize> = HashMap::new();
    for e in &mesh.edges {
        if e.is_boundary() {
            *per_marker.entry(e.marker).or_default() += 1;
        }
    }
    let mut markers: Vec<_> = per_marker.into_iter().collect();
    markers.sort_unstable();
    for (m, c) in markers {
        let role = if m > 0 { "dirichlet" } else { "neumann" };
        println!("  segment {m} ({role}): {c} edges");
    }
    println!("min angle: {:.2} deg", mesh.min_angle().to_degrees());
    match mesh.audit_conformity() {
        Ok(()) => println!("conforming: yes (Euler identity holds)"),
        Err(e) => println!("conforming: NO ({e})"),
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Run(args) => run(args),
        Command::Compare(args) => compare(args),
        Command::MeshInfo { path } => mesh_info(&path),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(msg) => {
            eprintln!("error: {msg}");
            ExitCode::FAILURE
        }
    }
}
