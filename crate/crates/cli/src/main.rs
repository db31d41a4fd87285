//! Command-line front end: curvature reports, decimation, feature-vertex
//! extraction and the survival experiments.

use anyhow::{bail, Context, Result};
use clap::{Parser, Subcommand, ValueEnum};
use osveta::decimate::{decimate, decimate_progressive, DecimationParams, ThresholdRamp};
use osveta::harness::{
    area_comparison, criteria_efficiency, criterion_selections, selection_overlap, stability_run, to_json,
    write_rank_curve_csv, write_survival_csv, ExperimentPlan, RandomPool, EFFICIENCY_SIZES,
};
use osveta::mesh::{load, write_obj, write_off, Mesh, MeshFormat};
use osveta::pipeline::{compute_feature_table, extract_from_table, write_feature_csv, CriteriaConfig, Preset};
use osveta::report::{write_curvature_csv, CurvatureMethod};
use osveta::{fixtures, AreaMode, FitKind};
use serde::Serialize;
use std::fs::File;
use std::io::BufWriter;
use std::path::{Path, PathBuf};

#[derive(Parser)]
#[command(name = "osveta", version, about = "Mesh curvature, decimation and stable feature-vertex extraction")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum Area {
    Voronoi,
    Barycentric,
}

impl From<Area> for AreaMode {
    fn from(a: Area) -> Self {
        match a {
            Area::Voronoi => AreaMode::VoronoiMixed,
            Area::Barycentric => AreaMode::Barycentric,
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum Method {
    Dgeom,
    Quadric,
}

#[derive(Clone, Copy, ValueEnum)]
enum Fit {
    Simple,
    Extended,
}

#[derive(Clone, Copy, ValueEnum)]
enum PresetArg {
    Safe,
    Extended,
    Aggressive,
}

impl From<PresetArg> for Preset {
    fn from(p: PresetArg) -> Self {
        match p {
            PresetArg::Safe => Preset::Safe,
            PresetArg::Extended => Preset::Extended,
            PresetArg::Aggressive => Preset::Aggressive,
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum Pool {
    Survivors,
    All,
}

#[derive(Clone, Copy, ValueEnum)]
enum FixtureKind {
    Tetrahedron,
    Grid,
    Cube,
    Icosphere,
    SpikedIcosphere,
    NoisyTorus,
    BumpySphere,
}

#[derive(Subcommand)]
enum Command {
    /// Per-vertex curvature as CSV.
    Curvature {
        #[arg(long)]
        input: PathBuf,
        #[arg(long, value_enum, default_value = "dgeom")]
        method: Method,
        #[arg(long, value_enum, default_value = "extended")]
        fit: Fit,
        #[arg(long, value_enum, default_value = "barycentric")]
        area: Area,
        #[arg(long)]
        out: PathBuf,
    },
    /// Vertex decimation with plane and edge distance criteria.
    Decimate {
        #[arg(long)]
        input: PathBuf,
        /// Plane distance limit as a fraction of the bounding-box diagonal.
        #[arg(long, default_value_t = 0.01)]
        distance: f64,
        /// Line distance limit for boundary and crease vertices, same units.
        #[arg(long, default_value_t = 0.01)]
        edge_distance: f64,
        #[arg(long, default_value_t = 30.0)]
        feature_angle: f64,
        /// Stop once this fraction of vertices remains.
        #[arg(long)]
        target: Option<f64>,
        #[arg(long, default_value_t = 10)]
        max_passes: usize,
        /// Grow the thresholds until the target fraction is reached.
        #[arg(long, requires = "target")]
        progressive: bool,
        #[arg(long)]
        report: Option<PathBuf>,
        #[arg(long)]
        output: Option<PathBuf>,
    },
    /// Rank vertices by stability and write the ordered vectors.
    Extract {
        #[arg(long)]
        input: PathBuf,
        #[arg(long, default_value_t = 1000)]
        top: usize,
        #[arg(long, value_enum, default_value = "safe")]
        preset: PresetArg,
        #[arg(long, value_enum, default_value = "barycentric")]
        area: Area,
        #[arg(long)]
        eliminate_boundary: bool,
        #[arg(long)]
        out: PathBuf,
        /// Also write the full feature table.
        #[arg(long)]
        features: Option<PathBuf>,
    },
    /// Survival of extracted vertices against random selections.
    Evaluate {
        #[arg(long)]
        input: PathBuf,
        #[arg(long, default_value_t = 1000)]
        top: usize,
        #[arg(long, value_delimiter = ',', default_values_t = osveta::harness::DEFAULT_SCHEDULE.to_vec())]
        schedule: Vec<f64>,
        /// Number of random baselines (seeds 0..N).
        #[arg(long, default_value_t = 10)]
        seeds: u64,
        #[arg(long, value_enum, default_value = "safe")]
        preset: PresetArg,
        #[arg(long, value_enum, default_value = "barycentric")]
        area: Area,
        #[arg(long, default_value_t = 30.0)]
        feature_angle: f64,
        #[arg(long, value_enum, default_value = "survivors")]
        random_pool: Pool,
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        csv: Option<PathBuf>,
        /// Single-criterion efficiency and top-10 overlap at the last level.
        #[arg(long)]
        efficiency: Option<PathBuf>,
        /// Rank, kG and deletion flag of the first 50 ranked vertices at the last level.
        #[arg(long)]
        rank_curve: Option<PathBuf>,
    },
    /// Gaussian-curvature criteria efficiency under both area modes.
    CompareAreas {
        #[arg(long)]
        input: PathBuf,
        #[arg(long, default_value_t = 0.5)]
        target: f64,
        #[arg(long, default_value_t = 30.0)]
        feature_angle: f64,
        #[arg(long)]
        out: PathBuf,
    },
    /// Write a generated test mesh.
    Fixture {
        #[arg(value_enum)]
        kind: FixtureKind,
        /// Subdivision level or grid resolution.
        #[arg(long, default_value_t = 3)]
        level: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        output: PathBuf,
    },
}

fn load_mesh(path: &Path) -> Result<Mesh> {
    load(path).with_context(|| format!("loading {}", path.display()))
}

fn create(path: &Path) -> Result<BufWriter<File>> {
    let f = File::create(path).with_context(|| format!("creating {}", path.display()))?;
    Ok(BufWriter::new(f))
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    std::fs::write(path, to_json(value)?).with_context(|| format!("writing {}", path.display()))
}

fn save_mesh(mesh: &Mesh, path: &Path) -> Result<()> {
    let out = create(path)?;
    match MeshFormat::from_path(path) {
        Some(MeshFormat::Off) => write_off(mesh, out)?,
        _ => write_obj(mesh, out)?,
    }
    Ok(())
}

#[derive(Serialize)]
struct EfficiencyReport {
    schema: u32,
    target_fraction: f64,
    efficiency: osveta::harness::EfficiencyTable,
    overlap: osveta::harness::OverlapHistogram,
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Curvature {
            input,
            method,
            fit,
            area,
            out,
        } => {
            let mesh = load_mesh(&input)?;
            let method = match (method, fit) {
                (Method::Dgeom, _) => CurvatureMethod::Dgeom,
                (Method::Quadric, Fit::Simple) => CurvatureMethod::Quadric(FitKind::Simple),
                (Method::Quadric, Fit::Extended) => CurvatureMethod::Quadric(FitKind::Extended),
            };
            write_curvature_csv(&mesh, method, area.into(), create(&out)?)?;
        }
        Command::Decimate {
            input,
            distance,
            edge_distance,
            feature_angle,
            target,
            max_passes,
            progressive,
            report,
            output,
        } => {
            let mesh = load_mesh(&input)?;
            let (out_mesh, rep) = match (progressive, target) {
                (true, Some(t)) => decimate_progressive(&mesh, t, feature_angle, &ThresholdRamp::default())?,
                _ => decimate(
                    &mesh,
                    &DecimationParams {
                        distance_threshold: distance,
                        edge_distance_threshold: edge_distance,
                        feature_angle,
                        target_fraction: target,
                        max_passes,
                    },
                )?,
            };
            log::info!(
                "kept {} of {} vertices in {} passes",
                rep.survivors.len(),
                rep.original_vertex_count,
                rep.passes
            );
            if let Some(p) = report {
                write_json(&p, &rep)?;
            }
            if let Some(p) = output {
                save_mesh(&out_mesh, &p)?;
            }
        }
        Command::Extract {
            input,
            top,
            preset,
            area,
            eliminate_boundary,
            out,
            features,
        } => {
            let mesh = load_mesh(&input)?;
            let config = CriteriaConfig {
                boundary_elimination: eliminate_boundary,
                ..CriteriaConfig::new(preset.into())
            };
            let table = compute_feature_table(&mesh, area.into());
            let result = extract_from_table(&table, top, &config)?;
            write_json(&out, &result)?;
            if let Some(p) = features {
                write_feature_csv(&table, create(&p)?)?;
            }
        }
        Command::Evaluate {
            input,
            top,
            schedule,
            seeds,
            preset,
            area,
            feature_angle,
            random_pool,
            out,
            csv,
            efficiency,
            rank_curve,
        } => {
            if seeds == 0 {
                bail!("--seeds must be at least 1");
            }
            let mesh = load_mesh(&input)?;
            let plan = ExperimentPlan {
                l: top,
                schedule,
                seeds: (0..seeds).collect(),
                config: CriteriaConfig::new(preset.into()),
                area: area.into(),
                feature_angle,
                ramp: ThresholdRamp::default(),
                random_pool: match random_pool {
                    Pool::Survivors => RandomPool::Survivors,
                    Pool::All => RandomPool::AllVertices,
                },
            };
            let run = stability_run(&mesh, &plan)?;
            write_json(&out, &run.report)?;
            if let Some(p) = csv {
                write_survival_csv(&run.report, create(&p)?)?;
            }
            let last = run.decimations.last();
            if let (Some(p), Some(dec)) = (efficiency, last) {
                let selections = criterion_selections(&run.table, *EFFICIENCY_SIZES.last().unwrap());
                let top10: Vec<Vec<usize>> = selections.iter().map(|(_, s)| s.iter().take(10).copied().collect()).collect();
                let report = EfficiencyReport {
                    schema: osveta::harness::SCHEMA_VERSION,
                    target_fraction: *plan.schedule.last().unwrap(),
                    efficiency: criteria_efficiency(dec, &selections, &EFFICIENCY_SIZES)?,
                    overlap: selection_overlap(&top10),
                };
                write_json(&p, &report)?;
            }
            if let (Some(p), Some(dec)) = (rank_curve, last) {
                write_rank_curve_csv(&run.extraction, &run.table, dec, 50, create(&p)?)?;
            }
        }
        Command::CompareAreas {
            input,
            target,
            feature_angle,
            out,
        } => {
            let mesh = load_mesh(&input)?;
            let cmp = area_comparison(&mesh, target, &EFFICIENCY_SIZES, feature_angle, &ThresholdRamp::default())?;
            write_json(&out, &cmp)?;
        }
        Command::Fixture {
            kind,
            level,
            seed,
            output,
        } => {
            let mesh = match kind {
                FixtureKind::Tetrahedron => fixtures::tetrahedron(),
                FixtureKind::Grid => fixtures::grid(level.max(2), level.max(2), 1.0),
                FixtureKind::Cube => fixtures::cube(level.max(1)),
                FixtureKind::Icosphere => fixtures::icosphere(level),
                FixtureKind::SpikedIcosphere => fixtures::spiked_icosphere(level, 100, 0.2, 0.003, seed),
                FixtureKind::NoisyTorus => {
                    let n = level.max(1);
                    fixtures::noisy_torus(24 * n, 10 * n, 1.0, 0.35, 0.0035, seed)
                }
                FixtureKind::BumpySphere => fixtures::bumpy_sphere(level, 0.15, 6.0),
            };
            save_mesh(&mesh, &output)?;
        }
    }
    Ok(())
}

fn main() {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    if let Err(e) = run(Cli::parse()) {
        eprintln!("error: {e:#}");
        std::process::exit(1);
    }
}
