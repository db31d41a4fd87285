//! Evaluation protocol: survival of extracted vertices under decimation
//! against random selections, consecutive-deletion counts, single-criterion
//! efficiency, selection overlap and the area-mode comparison.

use crate::curvature::AreaMode;
use crate::decimate::{decimate_progressive, DecimationReport, ThresholdRamp};
use crate::error::{Error, Result};
use crate::mesh::Mesh;
use crate::pipeline::{
    compute_feature_table, extract_from_table, CriterionContext, CriteriaConfig, Criterion, ExtractionResult,
    FeatureTable,
};
use crate::classify::DEFAULT_FEATURE_ANGLE;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;
use std::collections::BTreeMap;
use std::io::Write;

/// Version of the JSON report layout.
pub const SCHEMA_VERSION: u32 = 1;

/// Retained-fraction ladder used when none is given.
pub const DEFAULT_SCHEDULE: [f64; 5] = [0.70, 0.40, 0.23, 0.13, 0.08];

/// Selection sizes of the efficiency tables.
pub const EFFICIENCY_SIZES: [usize; 10] = [1, 2, 3, 4, 5, 10, 50, 100, 500, 1000];

/// Where random baseline selections are drawn from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum RandomPool {
    /// The vertices that survive elimination, i.e. the pool the ranking orders.
    #[default]
    Survivors,
    /// Every vertex of the mesh.
    AllVertices,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ExperimentPlan {
    /// Selection size.
    pub l: usize,
    /// Target retained fractions, strictly decreasing.
    pub schedule: Vec<f64>,
    pub seeds: Vec<u64>,
    pub config: CriteriaConfig,
    pub area: AreaMode,
    pub feature_angle: f64,
    pub ramp: ThresholdRamp,
    pub random_pool: RandomPool,
}

impl Default for ExperimentPlan {
    fn default() -> Self {
        Self {
            l: 1000,
            schedule: DEFAULT_SCHEDULE.to_vec(),
            seeds: (0..10).collect(),
            config: CriteriaConfig::default(),
            area: AreaMode::Barycentric,
            feature_angle: DEFAULT_FEATURE_ANGLE,
            ramp: ThresholdRamp::default(),
            random_pool: RandomPool::Survivors,
        }
    }
}

impl ExperimentPlan {
    pub fn validate(&self) -> Result<()> {
        if self.seeds.is_empty() {
            return Err(Error::InvalidParameter("at least one seed is required".into()));
        }
        let mut prev = f64::INFINITY;
        for &f in &self.schedule {
            if !(f > 0.0 && f <= 1.0 && f < prev) {
                return Err(Error::InvalidParameter(
                    "schedule fractions must lie in (0, 1] and strictly decrease".into(),
                ));
            }
            prev = f;
        }
        self.config.validate()
    }
}

/// Splits `selection` into (survived, deleted) by membership in the
/// decimation's survivor map. Order within each part follows `selection`.
pub fn match_survivors(report: &DecimationReport, selection: &[usize]) -> Result<(Vec<usize>, Vec<usize>)> {
    let mut alive = vec![false; report.original_vertex_count];
    for &v in &report.survivors {
        alive[v] = true;
    }
    let mut survived = Vec::new();
    let mut deleted = Vec::new();
    for &id in selection {
        match alive.get(id) {
            Some(true) => survived.push(id),
            Some(false) => deleted.push(id),
            None => {
                return Err(Error::SelectionOutOfRange {
                    id,
                    count: report.original_vertex_count,
                })
            }
        }
    }
    Ok((survived, deleted))
}

/// Number of neighbouring positions `k, k + 1` of `selection` whose
/// vertices were both deleted.
pub fn consecutive_deletions(selection: &[usize], deleted: &[bool]) -> usize {
    selection
        .windows(2)
        .filter(|w| deleted[w[0]] && deleted[w[1]])
        .count()
}

fn deleted_mask(report: &DecimationReport) -> Vec<bool> {
    let mut mask = vec![true; report.original_vertex_count];
    for &v in &report.survivors {
        mask[v] = false;
    }
    mask
}

fn mean_std(xs: &[f64]) -> (f64, f64) {
    if xs.is_empty() {
        return (0.0, 0.0);
    }
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / n;
    (mean, var.sqrt())
}

/// Random selections of `l` ids from `pool`, one per seed, in draw order.
pub fn random_selections(pool: &[usize], l: usize, seeds: &[u64]) -> Vec<Vec<usize>> {
    seeds
        .iter()
        .map(|&seed| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rand::seq::index::sample(&mut rng, pool.len(), l.min(pool.len()))
                .into_iter()
                .map(|k| pool[k])
                .collect()
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LevelReport {
    pub target_fraction: f64,
    pub achieved_fraction: f64,
    pub retained_vertices: usize,
    /// The decimator could not reach the target fraction.
    pub partial: bool,
    pub osveta_deleted: usize,
    pub osveta_consecutive: usize,
    pub osveta_consecutive_top100: usize,
    pub random_deleted: Vec<usize>,
    pub random_deleted_mean: f64,
    pub random_deleted_std: f64,
    pub random_consecutive: Vec<usize>,
    pub random_consecutive_mean: f64,
    /// Selected ids (in selection order) that survived.
    pub osveta_survived: Vec<usize>,
    /// Selected ids (in selection order) that were deleted.
    pub osveta_deleted_ids: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SurvivalReport {
    pub schema: u32,
    pub vertex_count: usize,
    pub l: usize,
    /// Actual selection length (at most the survivor count).
    pub selected: usize,
    pub eliminated: usize,
    pub random_pool: RandomPool,
    pub seeds: Vec<u64>,
    pub levels: Vec<LevelReport>,
}

/// Everything an experiment computes, kept for further reports.
pub struct StabilityRun {
    pub report: SurvivalReport,
    pub table: FeatureTable,
    pub extraction: ExtractionResult,
    pub decimations: Vec<DecimationReport>,
}

/// Decimates `mesh` to every level of the plan and compares the top-`l`
/// extracted vertices against random selections of equal size.
pub fn run_stability_experiment(mesh: &Mesh, plan: &ExperimentPlan) -> Result<SurvivalReport> {
    stability_run(mesh, plan).map(|r| r.report)
}

/// As [`run_stability_experiment`], also returning intermediate results.
pub fn stability_run(mesh: &Mesh, plan: &ExperimentPlan) -> Result<StabilityRun> {
    plan.validate()?;
    let table = compute_feature_table(mesh, plan.area);
    let extraction = extract_from_table(&table, plan.l, &plan.config)?;
    let selection = extraction.p.clone();
    let pool: Vec<usize> = match plan.random_pool {
        RandomPool::Survivors => {
            let mut ids = extraction.i.clone();
            ids.sort_unstable();
            ids
        }
        RandomPool::AllVertices => (0..mesh.vertex_count()).collect(),
    };
    let randoms = random_selections(&pool, selection.len(), &plan.seeds);

    let decimations: Vec<DecimationReport> = plan
        .schedule
        .par_iter()
        .map(|&f| decimate_progressive(mesh, f, plan.feature_angle, &plan.ramp).map(|(_, r)| r))
        .collect::<Result<_>>()?;

    let mut levels = Vec::with_capacity(decimations.len());
    for (&target, dec) in plan.schedule.iter().zip(&decimations) {
        let mask = deleted_mask(dec);
        let (survived, deleted) = match_survivors(dec, &selection)?;
        let random_deleted: Vec<usize> = randoms
            .iter()
            .map(|sel| sel.iter().filter(|&&v| mask[v]).count())
            .collect();
        let random_consecutive: Vec<usize> =
            randoms.iter().map(|sel| consecutive_deletions(sel, &mask)).collect();
        let (rd_mean, rd_std) = mean_std(&random_deleted.iter().map(|&x| x as f64).collect::<Vec<_>>());
        let (rc_mean, _) = mean_std(&random_consecutive.iter().map(|&x| x as f64).collect::<Vec<_>>());
        levels.push(LevelReport {
            target_fraction: target,
            achieved_fraction: dec.retained_fraction,
            retained_vertices: dec.survivors.len(),
            partial: !dec.reached_target,
            osveta_deleted: deleted.len(),
            osveta_consecutive: consecutive_deletions(&selection, &mask),
            osveta_consecutive_top100: consecutive_deletions(&selection[..selection.len().min(100)], &mask),
            random_deleted,
            random_deleted_mean: rd_mean,
            random_deleted_std: rd_std,
            random_consecutive,
            random_consecutive_mean: rc_mean,
            osveta_survived: survived,
            osveta_deleted_ids: deleted,
        });
    }
    let report = SurvivalReport {
        schema: SCHEMA_VERSION,
        vertex_count: mesh.vertex_count(),
        l: plan.l,
        selected: selection.len(),
        eliminated: extraction.eliminated.len(),
        random_pool: plan.random_pool,
        seeds: plan.seeds.clone(),
        levels,
    };
    Ok(StabilityRun {
        report,
        table,
        extraction,
        decimations,
    })
}

/// Vertices the single-criterion studies rank: no topological errors and
/// not on the boundary.
pub fn criterion_pool(table: &FeatureTable) -> Vec<usize> {
    (0..table.len())
        .filter(|&v| !table.rows[v].flags.error && !table.rows[v].flags.boundary)
        .collect()
}

/// Top `max` vertices of [`criterion_pool`] under each listed criterion.
pub fn select_by(table: &FeatureTable, criteria: &[Criterion], max: usize) -> Vec<(Criterion, Vec<usize>)> {
    let pool = criterion_pool(table);
    let ctx = CriterionContext::new(table, &pool);
    criteria
        .iter()
        .map(|&c| {
            let ids = c.ranked(table, &pool, &ctx).into_iter().take(max).map(|(v, _)| v).collect();
            (c, ids)
        })
        .collect()
}

/// Top `max` vertices under every single-feature criterion.
pub fn criterion_selections(table: &FeatureTable, max: usize) -> Vec<(Criterion, Vec<usize>)> {
    select_by(table, &Criterion::ALL, max)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EfficiencyRow {
    pub criterion: String,
    /// Vertices qualifying for the criterion (up to the largest size).
    pub qualifying: usize,
    /// Survivor counts per size; `None` when no vertex qualifies.
    pub survivors: Option<Vec<usize>>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EfficiencyTable {
    pub sizes: Vec<usize>,
    pub rows: Vec<EfficiencyRow>,
}

/// For each criterion and size `n`, how many of its top-`n` vertices survive
/// the decimation.
pub fn criteria_efficiency(
    report: &DecimationReport,
    selections: &[(Criterion, Vec<usize>)],
    sizes: &[usize],
) -> Result<EfficiencyTable> {
    let mut rows = Vec::with_capacity(selections.len());
    for (c, sel) in selections {
        let survivors = if sel.is_empty() {
            None
        } else {
            let (_, deleted) = match_survivors(report, sel)?;
            let mut alive = vec![true; sel.len()];
            let deleted: std::collections::BTreeSet<usize> = deleted.into_iter().collect();
            for (k, v) in sel.iter().enumerate() {
                alive[k] = !deleted.contains(v);
            }
            Some(
                sizes
                    .iter()
                    .map(|&n| alive[..n.min(sel.len())].iter().filter(|&&a| a).count())
                    .collect(),
            )
        };
        rows.push(EfficiencyRow {
            criterion: c.label().to_string(),
            qualifying: sel.len(),
            survivors,
        });
    }
    Ok(EfficiencyTable {
        sizes: sizes.to_vec(),
        rows,
    })
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct OverlapHistogram {
    /// Vertex id to the number of selections containing it.
    pub per_vertex: BTreeMap<usize, usize>,
    /// `k` to the number of vertices selected by exactly `k` selections.
    pub histogram: BTreeMap<usize, usize>,
}

/// How often each vertex appears across several selections.
pub fn selection_overlap(selections: &[Vec<usize>]) -> OverlapHistogram {
    let mut per_vertex = BTreeMap::new();
    for sel in selections {
        let mut seen: Vec<usize> = sel.clone();
        seen.sort_unstable();
        seen.dedup();
        for v in seen {
            *per_vertex.entry(v).or_insert(0) += 1;
        }
    }
    let mut histogram = BTreeMap::new();
    for &k in per_vertex.values() {
        *histogram.entry(k).or_insert(0) += 1;
    }
    OverlapHistogram { per_vertex, histogram }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AreaComparisonRow {
    pub area: AreaMode,
    pub criterion: String,
    pub survivors: Option<Vec<usize>>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AreaComparison {
    pub schema: u32,
    pub target_fraction: f64,
    pub achieved_fraction: f64,
    pub sizes: Vec<usize>,
    pub rows: Vec<AreaComparisonRow>,
}

/// Efficiency of the two Gaussian-curvature sign criteria under both area
/// modes, against one shared decimation of `mesh`.
pub fn area_comparison(
    mesh: &Mesh,
    target_fraction: f64,
    sizes: &[usize],
    feature_angle: f64,
    ramp: &ThresholdRamp,
) -> Result<AreaComparison> {
    let (_, report) = decimate_progressive(mesh, target_fraction, feature_angle, ramp)?;
    let max = sizes.iter().copied().max().unwrap_or(0);
    let mut rows = Vec::new();
    for area in [AreaMode::Barycentric, AreaMode::VoronoiMixed] {
        let table = compute_feature_table(mesh, area);
        let selections = select_by(&table, &[Criterion::KgPositive, Criterion::KgNegative], max);
        for row in criteria_efficiency(&report, &selections, sizes)?.rows {
            rows.push(AreaComparisonRow {
                area,
                criterion: row.criterion,
                survivors: row.survivors,
            });
        }
    }
    Ok(AreaComparison {
        schema: SCHEMA_VERSION,
        target_fraction,
        achieved_fraction: report.retained_fraction,
        sizes: sizes.to_vec(),
        rows,
    })
}

/// Writes `(rank, kG, deleted)` for the first `n` extracted vertices.
pub fn write_rank_curve_csv<W: Write>(
    extraction: &ExtractionResult,
    table: &FeatureTable,
    report: &DecimationReport,
    n: usize,
    out: W,
) -> Result<()> {
    #[derive(Serialize)]
    struct Record {
        rank: usize,
        vertex: usize,
        kg: Option<f64>,
        deleted: bool,
    }
    let mask = deleted_mask(report);
    let mut w = csv::Writer::from_writer(out);
    for (k, &v) in extraction.i.iter().take(n).enumerate() {
        w.serialize(Record {
            rank: k + 1,
            vertex: v,
            kg: table.rows[v].kg,
            deleted: mask[v],
        })?;
    }
    w.flush()?;
    Ok(())
}

/// Writes one CSV line per level of a survival report.
pub fn write_survival_csv<W: Write>(report: &SurvivalReport, out: W) -> Result<()> {
    #[derive(Serialize)]
    struct Record {
        target_fraction: f64,
        achieved_fraction: f64,
        retained_vertices: usize,
        partial: bool,
        osveta_deleted: usize,
        random_deleted_mean: f64,
        random_deleted_std: f64,
        osveta_consecutive: usize,
        osveta_consecutive_top100: usize,
        random_consecutive_mean: f64,
    }
    let mut w = csv::Writer::from_writer(out);
    for l in &report.levels {
        w.serialize(Record {
            target_fraction: l.target_fraction,
            achieved_fraction: l.achieved_fraction,
            retained_vertices: l.retained_vertices,
            partial: l.partial,
            osveta_deleted: l.osveta_deleted,
            random_deleted_mean: l.random_deleted_mean,
            random_deleted_std: l.random_deleted_std,
            osveta_consecutive: l.osveta_consecutive,
            osveta_consecutive_top100: l.osveta_consecutive_top100,
            random_consecutive_mean: l.random_consecutive_mean,
        })?;
    }
    w.flush()?;
    Ok(())
}

/// Pretty JSON with a trailing newline.
pub fn to_json<T: Serialize>(value: &T) -> Result<String> {
    let mut s = serde_json::to_string_pretty(value)?;
    s.push('\n');
    Ok(s)
}
