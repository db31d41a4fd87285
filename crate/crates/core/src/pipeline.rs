//! Feature-vertex extraction: per-vertex feature table, elimination of
//! irrelevant and risky vertices, rated scoring of the survivors and the
//! ordered stability/index vectors.

use crate::classify::{
    classify_star, risky_primitives, surface_shape, SurfaceShape, VertexClass, DEFAULT_FEATURE_ANGLE,
};
use crate::curvature::{
    curvature_gradient, dihedral_extrema, theta_sum, vertex_curvature, AreaMode,
};
use crate::decimate::distance_to_average_plane;
use crate::error::{Error, Result};
use crate::mesh::{corner_angle, triangle_area, Adjacency, Mesh, TopologySets};
use crate::quadric::{quadric_curvature_at, FitKind};
use crate::star::VertexStar;
use rayon::prelude::*;
use serde::Serialize;
use std::cmp::Ordering;
use std::collections::BTreeMap;
use std::io::Write;

/// Per-vertex diagnostic flags.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize)]
pub struct RowFlags {
    /// Vertex belongs to the topological-error set.
    pub error: bool,
    pub boundary: bool,
    /// Both `kg` and `kh` lie inside their zero bands.
    pub flat: bool,
    /// Vertex is reported by [`risky_primitives`].
    pub risky: bool,
    pub umbilic_clamped: bool,
    pub degenerate_faces: bool,
}

/// One vertex of the feature table. Absent values are `None`, never zero.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FeatureRow {
    pub kg: Option<f64>,
    pub kh: Option<f64>,
    pub k1: Option<f64>,
    pub k2: Option<f64>,
    /// Sum of wedge angles, degrees.
    pub theta: Option<f64>,
    pub psi_min: Option<f64>,
    pub psi_max: Option<f64>,
    pub kgi: Option<f64>,
    pub khi: Option<f64>,
    /// Largest longest-edge / shortest-altitude ratio over incident faces.
    pub c_el: Option<f64>,
    /// Longest incident edge.
    pub c_dug: Option<f64>,
    /// Largest interior angle (degrees) over incident faces.
    pub c_tup: Option<f64>,
    /// Distance to the average plane of the 1-ring.
    pub c_vis: Option<f64>,
    pub grad_kg: Option<f64>,
    pub grad_kh: Option<f64>,
    pub class: VertexClass,
    pub shape: Option<SurfaceShape>,
    pub flags: RowFlags,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FeatureTable {
    pub rows: Vec<FeatureRow>,
    /// Zero band for `kg`: `1e-6 * max |kg|`.
    pub zero_band: f64,
    /// Zero band for `kh`: `1e-6 * max |kh|`.
    pub zero_band_kh: f64,
    pub area_mode: AreaMode,
    #[serde(skip)]
    pub topology: TopologySets,
}

impl FeatureTable {
    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }
}

fn band(values: impl Iterator<Item = Option<f64>>) -> f64 {
    1e-6 * values.flatten().fold(0.0f64, |m, k| m.max(k.abs()))
}

fn zeroed(x: f64, band: f64) -> f64 {
    if x.abs() <= band {
        0.0
    } else {
        x
    }
}

struct FaceMeasures {
    c_el: Option<f64>,
    c_dug: Option<f64>,
    c_tup: Option<f64>,
}

fn face_measures(star: &VertexStar, eps: f64) -> FaceMeasures {
    let mut c_el: Option<f64> = None;
    let mut c_tup: Option<f64> = None;
    let center = star.center_pos();
    let c_dug = star
        .neighbors()
        .iter()
        .map(|&u| (star.pos(u) - center).norm())
        .reduce(f64::max);
    for w in star.wedges() {
        let [p, q, r] = w.tri.map(|i| star.pos(i));
        let area = triangle_area(&p, &q, &r);
        if area <= eps {
            continue;
        }
        let longest = (q - p).norm().max((r - q).norm()).max((p - r).norm());
        let ratio = longest * longest / (2.0 * area);
        c_el = Some(c_el.map_or(ratio, |m| m.max(ratio)));
        let max_angle = corner_angle(&p, &q, &r)
            .max(corner_angle(&q, &r, &p))
            .max(corner_angle(&r, &p, &q))
            .to_degrees();
        c_tup = Some(c_tup.map_or(max_angle, |m| m.max(max_angle)));
    }
    FaceMeasures { c_el, c_dug, c_tup }
}

/// Computes every feature column for every vertex. Curvature uses `area`;
/// quadric curvature uses the extended fit.
pub fn compute_feature_table(mesh: &Mesh, area: AreaMode) -> FeatureTable {
    let adj = Adjacency::build(mesh);
    let topology = TopologySets::compute(mesh, &adj);
    compute_feature_table_with(mesh, &adj, &topology, area)
}

/// As [`compute_feature_table`] with prebuilt adjacency and topology sets.
pub fn compute_feature_table_with(
    mesh: &Mesh,
    adj: &Adjacency,
    topology: &TopologySets,
    area: AreaMode,
) -> FeatureTable {
    let eps = adj.degenerate_eps();
    let mut rows: Vec<FeatureRow> = (0..mesh.vertex_count())
        .into_par_iter()
        .map(|v| {
            let star = adj.star(mesh, v);
            let manifold = star.ring().is_manifold();
            let faces = face_measures(&star, eps);
            let curv = manifold.then(|| vertex_curvature(&star, area).ok()).flatten();
            let quad = manifold
                .then(|| quadric_curvature_at(mesh, adj, v, FitKind::Extended).ok())
                .flatten();
            let psi = manifold.then(|| dihedral_extrema(&star).ok()).flatten();
            FeatureRow {
                kg: curv.map(|c| c.kg),
                kh: curv.map(|c| c.kh),
                k1: curv.map(|c| c.k1),
                k2: curv.map(|c| c.k2),
                theta: (manifold && star.face_count() > 0).then(|| theta_sum(&star)),
                psi_min: psi.map(|p| p.0),
                psi_max: psi.map(|p| p.1),
                kgi: quad.map(|q| q.kgi),
                khi: quad.map(|q| q.khi),
                c_el: faces.c_el,
                c_dug: faces.c_dug,
                c_tup: faces.c_tup,
                c_vis: manifold.then(|| distance_to_average_plane(&star).ok()).flatten(),
                grad_kg: None,
                grad_kh: None,
                class: classify_star(&star, DEFAULT_FEATURE_ANGLE),
                shape: None,
                flags: RowFlags {
                    error: topology.errors.contains(&v),
                    boundary: topology.boundary.contains(&v),
                    umbilic_clamped: curv.is_some_and(|c| c.flags.umbilic_clamped),
                    degenerate_faces: star.degenerate_count() > 0,
                    ..Default::default()
                },
            }
        })
        .collect();

    let kg: Vec<Option<f64>> = rows.iter().map(|r| r.kg).collect();
    let kh: Vec<Option<f64>> = rows.iter().map(|r| r.kh).collect();
    let grad_kg = curvature_gradient(mesh, adj, &kg);
    let grad_kh = curvature_gradient(mesh, adj, &kh);
    let zero_band = band(kg.iter().copied());
    let zero_band_kh = band(kh.iter().copied());
    for (v, row) in rows.iter_mut().enumerate() {
        row.grad_kg = grad_kg[v];
        row.grad_kh = grad_kh[v];
        if let (Some(g), Some(h)) = (row.kg, row.kh) {
            let (g, h) = (zeroed(g, zero_band), zeroed(h, zero_band_kh));
            row.shape = Some(surface_shape(g, h, 0.0));
            row.flags.flat = g == 0.0 && h == 0.0;
        }
    }
    let mut table = FeatureTable {
        rows,
        zero_band,
        zero_band_kh,
        area_mode: area,
        topology: topology.clone(),
    };
    for v in risky_primitives(mesh, adj, topology, &table).all() {
        table.rows[v].flags.risky = true;
    }
    table
}

/// Writes the feature table as CSV; absent values are empty cells.
pub fn write_feature_csv<W: Write>(table: &FeatureTable, out: W) -> Result<()> {
    #[derive(Serialize)]
    struct Record<'a> {
        vertex: usize,
        kg: Option<f64>,
        kh: Option<f64>,
        k1: Option<f64>,
        k2: Option<f64>,
        theta: Option<f64>,
        psi_min: Option<f64>,
        psi_max: Option<f64>,
        kgi: Option<f64>,
        khi: Option<f64>,
        c_el: Option<f64>,
        c_dug: Option<f64>,
        c_tup: Option<f64>,
        c_vis: Option<f64>,
        grad_kg: Option<f64>,
        grad_kh: Option<f64>,
        class: &'a str,
        shape: Option<&'a str>,
        risky: bool,
        error: bool,
        boundary: bool,
        flat: bool,
    }
    let mut w = csv::Writer::from_writer(out);
    for (v, r) in table.rows.iter().enumerate() {
        w.serialize(Record {
            vertex: v,
            kg: r.kg,
            kh: r.kh,
            k1: r.k1,
            k2: r.k2,
            theta: r.theta,
            psi_min: r.psi_min,
            psi_max: r.psi_max,
            kgi: r.kgi,
            khi: r.khi,
            c_el: r.c_el,
            c_dug: r.c_dug,
            c_tup: r.c_tup,
            c_vis: r.c_vis,
            grad_kg: r.grad_kg,
            grad_kh: r.grad_kh,
            class: r.class.as_str(),
            shape: r.shape.map(SurfaceShape::as_str),
            risky: r.flags.risky,
            error: r.flags.error,
            boundary: r.flags.boundary,
            flat: r.flags.flat,
        })?;
    }
    w.flush()?;
    Ok(())
}

/// Elimination aggressiveness: the percentile pair used for every cut.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize)]
pub enum Preset {
    #[default]
    Safe,
    Extended,
    Aggressive,
}

impl Preset {
    /// `(lower, upper)` percentiles.
    pub fn percentiles(self) -> (f64, f64) {
        match self {
            Preset::Safe => (0.5, 99.5),
            Preset::Extended => (2.0, 98.0),
            Preset::Aggressive => (5.0, 95.0),
        }
    }
}

impl std::str::FromStr for Preset {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "safe" => Ok(Preset::Safe),
            "extended" => Ok(Preset::Extended),
            "aggressive" => Ok(Preset::Aggressive),
            other => Err(Error::InvalidParameter(format!("unknown preset '{other}'"))),
        }
    }
}

/// Percentile cut pair for one elimination rule; `None` disables a side.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CutSpec {
    pub lower: Option<f64>,
    pub upper: Option<f64>,
}

impl CutSpec {
    pub const OFF: CutSpec = CutSpec {
        lower: None,
        upper: None,
    };

    fn both(lower: f64, upper: f64) -> Self {
        Self {
            lower: Some(lower),
            upper: Some(upper),
        }
    }

    fn upper_only(upper: f64) -> Self {
        Self {
            lower: None,
            upper: Some(upper),
        }
    }
}

/// Why a vertex was removed from ranking. Rule variants are listed in
/// evaluation order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Reason {
    TopologicalError,
    Boundary,
    Flat,
    KgNearZero,
    KhPositive,
    KhNegative,
    KmaxHigh,
    KmaxNegative,
    KminPositive,
    KminNegative,
    Theta,
    Kgi,
    KhiNonNegative,
    KhiNegative,
    Elongation,
    ElongationNegative,
    LongestEdge,
    MaxAngle,
    PlaneDistance,
    KgGradient,
    KhGradient,
    PsiMax,
}

/// The percentile-cut rules in evaluation order.
pub const RULES: [Reason; 19] = [
    Reason::KgNearZero,
    Reason::KhPositive,
    Reason::KhNegative,
    Reason::KmaxHigh,
    Reason::KmaxNegative,
    Reason::KminPositive,
    Reason::KminNegative,
    Reason::Theta,
    Reason::Kgi,
    Reason::KhiNonNegative,
    Reason::KhiNegative,
    Reason::Elongation,
    Reason::ElongationNegative,
    Reason::LongestEdge,
    Reason::MaxAngle,
    Reason::PlaneDistance,
    Reason::KgGradient,
    Reason::KhGradient,
    Reason::PsiMax,
];

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CriteriaConfig {
    pub preset: Preset,
    /// One cut pair per entry of [`RULES`].
    pub cuts: [CutSpec; 19],
    /// Rates of the eight assessment criteria, see [`Criterion::ASSESSMENT`].
    pub rates: [f64; 8],
    pub boundary_elimination: bool,
}

/// Default assessment rates.
pub const DEFAULT_RATES: [f64; 8] = [1.0, 1.0, 1.0, 0.9, 0.8, 0.8, 0.7, 0.4];

impl CriteriaConfig {
    pub fn new(preset: Preset) -> Self {
        let (lo, hi) = preset.percentiles();
        let mut cuts = [CutSpec::both(lo, hi); 19];
        cuts[3] = CutSpec::upper_only(hi);
        cuts[11] = CutSpec::upper_only(hi);
        // Elongation is a ratio >= 1, so negative-value cuts never apply.
        cuts[12] = CutSpec::OFF;
        Self {
            preset,
            cuts,
            rates: DEFAULT_RATES,
            boundary_elimination: false,
        }
    }

    pub fn validate(&self) -> Result<()> {
        for (k, c) in self.cuts.iter().enumerate() {
            for p in [c.lower, c.upper].into_iter().flatten() {
                if !(0.0..=100.0).contains(&p) {
                    return Err(Error::InvalidParameter(format!(
                        "cut {} percentile {p} outside [0, 100]",
                        k + 1
                    )));
                }
            }
            if let (Some(lo), Some(hi)) = (c.lower, c.upper) {
                if lo >= hi {
                    return Err(Error::InvalidParameter(format!(
                        "cut {} requires lower < upper",
                        k + 1
                    )));
                }
            }
        }
        for r in self.rates {
            if !(0.0..=1.0).contains(&r) {
                return Err(Error::InvalidParameter(format!("rate {r} outside [0, 1]")));
            }
        }
        Ok(())
    }
}

impl Default for CriteriaConfig {
    fn default() -> Self {
        Self::new(Preset::Safe)
    }
}

/// Relative gap below which neighbouring feature values count as equal.
pub const TIE_TOLERANCE: f64 = 1e-9;

/// Replaces each present value by the smallest member of its tie cluster:
/// a run of sorted values whose consecutive gaps are within
/// [`TIE_TOLERANCE`] of their magnitude. Values that differ only by
/// rounding then compare equal in ranking and percentile cuts.
pub fn snap_ties(values: &mut [Option<f64>]) {
    let mut order: Vec<usize> = (0..values.len()).filter(|&k| values[k].is_some()).collect();
    order.sort_by(|&a, &b| values[a].unwrap().total_cmp(&values[b].unwrap()));
    let mut prev = f64::NAN;
    let mut rep = f64::NAN;
    for k in order {
        let x = values[k].unwrap();
        if prev.is_nan() || x - prev > TIE_TOLERANCE * x.abs().max(prev.abs()) {
            rep = x;
        }
        prev = x;
        values[k] = Some(rep);
    }
}

/// Percentile of `sorted` (ascending) with linear interpolation between
/// order statistics.
pub fn percentile(sorted: &[f64], p: f64) -> Option<f64> {
    if sorted.is_empty() {
        return None;
    }
    let rank = (p / 100.0).clamp(0.0, 1.0) * (sorted.len() - 1) as f64;
    let lo = rank.floor() as usize;
    let hi = rank.ceil() as usize;
    Some(sorted[lo] + (sorted[hi] - sorted[lo]) * (rank - lo as f64))
}

/// Eliminated vertex with its first matching reason.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct Eliminated {
    pub id: usize,
    pub reason: Reason,
}

type Column = Vec<Option<f64>>;

fn column(table: &FeatureTable, f: impl Fn(&FeatureRow) -> Option<f64>) -> Column {
    let mut col: Column = table.rows.iter().map(f).collect();
    snap_ties(&mut col);
    col
}

/// Percentiles of the values in `col` (restricted to `pool`) that satisfy `keep`.
/// Percentile cut value of `sorted`, or `None` when the tail beyond `p`
/// holds less than one expected sample.
pub fn tail_cut(sorted: &[f64], p: f64) -> Option<f64> {
    let tail = p.min(100.0 - p) / 100.0;
    if (sorted.len() as f64) * tail < 1.0 {
        return None;
    }
    percentile(sorted, p)
}

fn cut_values(col: &Column, pool: &[usize], keep: impl Fn(f64) -> bool, cut: CutSpec) -> (Option<f64>, Option<f64>) {
    let mut vals: Vec<f64> = pool.iter().filter_map(|&v| col[v]).filter(|&x| keep(x)).collect();
    vals.sort_by(f64::total_cmp);
    (
        cut.lower.and_then(|p| tail_cut(&vals, p)),
        cut.upper.and_then(|p| tail_cut(&vals, p)),
    )
}

fn both_tails(col: &Column, pool: &[usize], cut: CutSpec) -> impl Fn(f64) -> bool {
    let (lo, hi) = cut_values(col, pool, |_| true, cut);
    move |x| lo.is_some_and(|l| x < l) || hi.is_some_and(|h| x > h)
}

/// Cuts on the strictly positive values: the outer tail is above the upper
/// percentile, the inner tail (near zero) below the lower one.
fn positive_tails(col: &Column, pool: &[usize], cut: CutSpec, outer: bool) -> impl Fn(f64) -> bool {
    let (lo, hi) = cut_values(col, pool, |x| x > 0.0, cut);
    move |x| x > 0.0 && (lo.is_some_and(|l| x < l) || (outer && hi.is_some_and(|h| x > h)))
}

/// Mirror of [`positive_tails`] for strictly negative values.
fn negative_tails(col: &Column, pool: &[usize], cut: CutSpec, outer: bool) -> impl Fn(f64) -> bool {
    let (lo, hi) = cut_values(col, pool, |x| x < 0.0, cut);
    move |x| x < 0.0 && (hi.is_some_and(|h| x > h) || (outer && lo.is_some_and(|l| x < l)))
}

/// Vertices removed from ranking, each with its first matching reason,
/// sorted by id.
pub fn eliminate_vertices(
    table: &FeatureTable,
    topo: &TopologySets,
    config: &CriteriaConfig,
) -> Vec<Eliminated> {
    let n = table.len();
    let mut reason: Vec<Option<Reason>> = vec![None; n];
    for &v in &topo.errors {
        reason[v] = Some(Reason::TopologicalError);
    }
    for (v, slot) in reason.iter_mut().enumerate() {
        let r = &table.rows[v];
        if slot.is_some() {
            continue;
        }
        if r.flags.error {
            *slot = Some(Reason::TopologicalError);
        } else if config.boundary_elimination && (r.flags.boundary || topo.boundary.contains(&v)) {
            *slot = Some(Reason::Boundary);
        } else if r.flags.flat {
            *slot = Some(Reason::Flat);
        }
    }

    // Cut distributions are taken over vertices without topological errors.
    let pool: Vec<usize> = (0..n).filter(|&v| !table.rows[v].flags.error && !topo.errors.contains(&v)).collect();
    let kg = column(table, |r| r.kg);
    let kh = column(table, |r| r.kh);
    let k1 = column(table, |r| r.k1);
    let k2 = column(table, |r| r.k2);
    let theta = column(table, |r| r.theta);
    let kgi = column(table, |r| r.kgi);
    let khi = column(table, |r| r.khi);
    let c_el = column(table, |r| r.c_el);
    let c_dug = column(table, |r| r.c_dug);
    let c_tup = column(table, |r| r.c_tup);
    let c_vis = column(table, |r| r.c_vis);
    let grad_kg = column(table, |r| r.grad_kg);
    let grad_kh = column(table, |r| r.grad_kh);
    let psi_max = column(table, |r| r.psi_max);
    let khi_band = band(khi.iter().copied());

    let c = &config.cuts;
    type Test<'a> = (&'a Column, Box<dyn Fn(f64) -> bool + 'a>);
    let rules: Vec<Test> = vec![
        (&kg, {
            let pos = positive_tails(&kg, &pool, c[0], false);
            let neg = negative_tails(&kg, &pool, c[0], false);
            Box::new(move |x| pos(x) || neg(x))
        }),
        (&kh, Box::new(positive_tails(&kh, &pool, c[1], true))),
        (&kh, Box::new(negative_tails(&kh, &pool, c[2], true))),
        (&k1, {
            let (_, hi) = cut_values(&k1, &pool, |_| true, c[3]);
            Box::new(move |x| hi.is_some_and(|h| x > h))
        }),
        (&k1, Box::new(negative_tails(&k1, &pool, c[4], true))),
        (&k2, Box::new(positive_tails(&k2, &pool, c[5], true))),
        (&k2, Box::new(negative_tails(&k2, &pool, c[6], true))),
        (&theta, {
            let tails = both_tails(&theta, &pool, c[7]);
            Box::new(move |x| tails(x) || (x - 360.0).abs() <= FULL_TURN_TOLERANCE)
        }),
        (&kgi, Box::new(both_tails(&kgi, &pool, c[8]))),
        (&khi, {
            let (_, hi) = cut_values(&khi, &pool, |x| x >= 0.0, c[9]);
            let active = c[9].lower.is_some();
            Box::new(move |x| {
                x >= 0.0 && (hi.is_some_and(|h| x > h) || (active && x <= khi_band))
            })
        }),
        (&khi, Box::new(negative_tails(&khi, &pool, c[10], true))),
        (&c_el, Box::new(both_tails(&c_el, &pool, c[11]))),
        (&c_el, Box::new(negative_tails(&c_el, &pool, c[12], true))),
        (&c_dug, Box::new(both_tails(&c_dug, &pool, c[13]))),
        (&c_tup, Box::new(both_tails(&c_tup, &pool, c[14]))),
        (&c_vis, Box::new(both_tails(&c_vis, &pool, c[15]))),
        (&grad_kg, Box::new(both_tails(&grad_kg, &pool, c[16]))),
        (&grad_kh, Box::new(both_tails(&grad_kh, &pool, c[17]))),
        (&psi_max, Box::new(both_tails(&psi_max, &pool, c[18]))),
    ];

    for v in 0..n {
        if reason[v].is_some() {
            continue;
        }
        reason[v] = rules
            .iter()
            .zip(RULES)
            .find(|((col, test), _)| col[v].is_some_and(test))
            .map(|(_, r)| r);
    }
    reason
        .into_iter()
        .enumerate()
        .filter_map(|(id, r)| r.map(|reason| Eliminated { id, reason }))
        .collect()
}

/// Single-feature criteria: a sign condition on one column plus the
/// magnitude used to rank qualifying vertices.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Criterion {
    PsiMinNonNegative,
    ThetaBelow360,
    KgiPositive,
    PsiMaxNonNegative,
    ThetaAbove360,
    KgNegative,
    KgiNegative,
    KgPositive,
    KhPositive,
    KhNegative,
    KmaxPositive,
    KminNegative,
    KhiPositive,
    KhiNegative,
    CelPositive,
    CelNonPositive,
    CvisPositive,
    CtupPositive,
    CdugPositive,
    GradKhAboveMean,
    GradKhBelowMean,
    GradKgAboveMean,
    GradKgBelowMean,
}

/// Per-table quantities the criteria depend on: gradient means over the
/// ranked pool and zero bands for the signed columns over the whole table.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct CriterionContext {
    pub grad_kg_mean: f64,
    pub grad_kh_mean: f64,
    pub kg_band: f64,
    pub kh_band: f64,
    pub k1_band: f64,
    pub k2_band: f64,
    pub kgi_band: f64,
    pub khi_band: f64,
}

impl CriterionContext {
    pub fn new(table: &FeatureTable, pool: &[usize]) -> Self {
        let mean = |f: &dyn Fn(&FeatureRow) -> Option<f64>| {
            let vals: Vec<f64> = pool.iter().filter_map(|&v| f(&table.rows[v])).collect();
            if vals.is_empty() {
                0.0
            } else {
                vals.iter().sum::<f64>() / vals.len() as f64
            }
        };
        let col_band = |f: &dyn Fn(&FeatureRow) -> Option<f64>| {
            band(table.rows.iter().filter(|r| !r.flags.error).map(f))
        };
        Self {
            grad_kg_mean: mean(&|r| r.grad_kg),
            grad_kh_mean: mean(&|r| r.grad_kh),
            kg_band: table.zero_band,
            kh_band: table.zero_band_kh,
            k1_band: col_band(&|r| r.k1),
            k2_band: col_band(&|r| r.k2),
            kgi_band: col_band(&|r| r.kgi),
            khi_band: col_band(&|r| r.khi),
        }
    }
}

/// Tolerance (degrees) within which an angle sum counts as a full turn.
const FULL_TURN_TOLERANCE: f64 = 1e-6;

impl Criterion {
    /// The eight rated assessment criteria, in rate order.
    pub const ASSESSMENT: [Criterion; 8] = [
        Criterion::PsiMinNonNegative,
        Criterion::ThetaBelow360,
        Criterion::KgiPositive,
        Criterion::PsiMaxNonNegative,
        Criterion::ThetaAbove360,
        Criterion::KgNegative,
        Criterion::KgiNegative,
        Criterion::KgPositive,
    ];

    /// All single-feature criteria used by the efficiency study.
    pub const ALL: [Criterion; 23] = [
        Criterion::KgPositive,
        Criterion::KgNegative,
        Criterion::KhPositive,
        Criterion::KhNegative,
        Criterion::KmaxPositive,
        Criterion::KminNegative,
        Criterion::ThetaAbove360,
        Criterion::ThetaBelow360,
        Criterion::KgiPositive,
        Criterion::KgiNegative,
        Criterion::KhiPositive,
        Criterion::KhiNegative,
        Criterion::CelPositive,
        Criterion::CelNonPositive,
        Criterion::CvisPositive,
        Criterion::CtupPositive,
        Criterion::CdugPositive,
        Criterion::GradKhAboveMean,
        Criterion::GradKhBelowMean,
        Criterion::GradKgAboveMean,
        Criterion::GradKgBelowMean,
        Criterion::PsiMaxNonNegative,
        Criterion::PsiMinNonNegative,
    ];

    pub fn label(self) -> &'static str {
        match self {
            Criterion::PsiMinNonNegative => "psi_min >= 0",
            Criterion::ThetaBelow360 => "theta < 360",
            Criterion::KgiPositive => "kGI > 0",
            Criterion::PsiMaxNonNegative => "psi_max >= 0",
            Criterion::ThetaAbove360 => "theta > 360",
            Criterion::KgNegative => "kG < 0",
            Criterion::KgiNegative => "kGI < 0",
            Criterion::KgPositive => "kG > 0",
            Criterion::KhPositive => "kH > 0",
            Criterion::KhNegative => "kH < 0",
            Criterion::KmaxPositive => "kmax > 0",
            Criterion::KminNegative => "kmin < 0",
            Criterion::KhiPositive => "kHI > 0",
            Criterion::KhiNegative => "kHI < 0",
            Criterion::CelPositive => "C_el > 0",
            Criterion::CelNonPositive => "C_el <= 0",
            Criterion::CvisPositive => "C_VIS > 0",
            Criterion::CtupPositive => "C_TUP > 0",
            Criterion::CdugPositive => "C_DUG > 0",
            Criterion::GradKhAboveMean => "grad kH > mean",
            Criterion::GradKhBelowMean => "grad kH < mean",
            Criterion::GradKgAboveMean => "grad kG > mean",
            Criterion::GradKgBelowMean => "grad kG < mean",
        }
    }

    /// Ranking magnitude of `row`, or `None` when the sign condition fails
    /// or the feature is absent. Signed values inside their zero band count
    /// as zero.
    pub fn magnitude(self, row: &FeatureRow, ctx: &CriterionContext) -> Option<f64> {
        let pos = |x: Option<f64>, band: f64| x.filter(|&v| v > band);
        let neg = |x: Option<f64>, band: f64| x.filter(|&v| v < -band).map(f64::abs);
        let turn = |t: f64| t - 360.0;
        match self {
            Criterion::PsiMinNonNegative => row.psi_min.filter(|&v| v >= 0.0),
            Criterion::ThetaBelow360 => row.theta.map(turn).filter(|&d| d < -FULL_TURN_TOLERANCE).map(f64::abs),
            Criterion::KgiPositive => pos(row.kgi, ctx.kgi_band),
            Criterion::PsiMaxNonNegative => row.psi_max.filter(|&v| v >= 0.0),
            Criterion::ThetaAbove360 => row.theta.map(turn).filter(|&d| d > FULL_TURN_TOLERANCE),
            Criterion::KgNegative => neg(row.kg, ctx.kg_band),
            Criterion::KgiNegative => neg(row.kgi, ctx.kgi_band),
            Criterion::KgPositive => pos(row.kg, ctx.kg_band),
            Criterion::KhPositive => pos(row.kh, ctx.kh_band),
            Criterion::KhNegative => neg(row.kh, ctx.kh_band),
            Criterion::KmaxPositive => pos(row.k1, ctx.k1_band),
            Criterion::KminNegative => neg(row.k2, ctx.k2_band),
            Criterion::KhiPositive => pos(row.khi, ctx.khi_band),
            Criterion::KhiNegative => neg(row.khi, ctx.khi_band),
            Criterion::CelPositive => pos(row.c_el, 0.0),
            Criterion::CelNonPositive => row.c_el.filter(|&v| v <= 0.0).map(f64::abs),
            Criterion::CvisPositive => pos(row.c_vis, 0.0),
            Criterion::CtupPositive => pos(row.c_tup, 0.0),
            Criterion::CdugPositive => pos(row.c_dug, 0.0),
            Criterion::GradKhAboveMean => row.grad_kh.filter(|&g| g > ctx.grad_kh_mean).map(|g| g - ctx.grad_kh_mean),
            Criterion::GradKhBelowMean => row.grad_kh.filter(|&g| g < ctx.grad_kh_mean).map(|g| ctx.grad_kh_mean - g),
            Criterion::GradKgAboveMean => row.grad_kg.filter(|&g| g > ctx.grad_kg_mean).map(|g| g - ctx.grad_kg_mean),
            Criterion::GradKgBelowMean => row.grad_kg.filter(|&g| g < ctx.grad_kg_mean).map(|g| ctx.grad_kg_mean - g),
        }
    }

    /// Qualifying ids from `ids`, ordered by decreasing magnitude then
    /// ascending id.
    pub fn ranked(self, table: &FeatureTable, ids: &[usize], ctx: &CriterionContext) -> Vec<(usize, f64)> {
        let ids: Vec<usize> = ids.to_vec();
        let mut mags: Vec<Option<f64>> = ids.iter().map(|&v| self.magnitude(&table.rows[v], ctx)).collect();
        snap_ties(&mut mags);
        let mut out: Vec<(usize, f64)> = ids.into_iter().zip(mags).filter_map(|(v, m)| m.map(|m| (v, m))).collect();
        out.sort_by(|a, b| b.1.total_cmp(&a.1).then(a.0.cmp(&b.0)));
        out
    }
}

/// Rank weights for magnitudes: the largest gets 1, the smallest `1/n`,
/// linear in rank; equal magnitudes share the best rank among them.
pub fn rank_weights(magnitudes: &[f64]) -> Vec<f64> {
    let n = magnitudes.len();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| magnitudes[b].total_cmp(&magnitudes[a]));
    let mut weights = vec![0.0; n];
    let mut rank = 1;
    for (pos, &k) in order.iter().enumerate() {
        if pos > 0 && magnitudes[k] != magnitudes[order[pos - 1]] {
            rank = pos + 1;
        }
        weights[k] = (n - rank + 1) as f64 / n as f64;
    }
    weights
}

/// Stability score of every survivor: the rate-weighted sum of its rank
/// weights over the assessment criteria. Returned in `survivors` order.
pub fn score_vertices(table: &FeatureTable, survivors: &[usize], config: &CriteriaConfig) -> Vec<f64> {
    let ctx = CriterionContext::new(table, survivors);
    let index: BTreeMap<usize, usize> = survivors.iter().enumerate().map(|(k, &v)| (v, k)).collect();
    let mut scores = vec![0.0; survivors.len()];
    for (criterion, rate) in Criterion::ASSESSMENT.iter().zip(config.rates) {
        let ranked = criterion.ranked(table, survivors, &ctx);
        let mags: Vec<f64> = ranked.iter().map(|r| r.1).collect();
        for ((v, _), w) in ranked.iter().zip(rank_weights(&mags)) {
            scores[index[v]] += rate * w;
        }
    }
    scores
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ExtractionResult {
    /// Stability scores, non-increasing.
    pub s: Vec<f64>,
    /// Vertex ids matching `s`.
    pub i: Vec<usize>,
    /// First `L` entries of `i`.
    pub p: Vec<usize>,
    pub eliminated: Vec<Eliminated>,
}

/// Orders survivors of an already computed table.
pub fn extract_from_table(table: &FeatureTable, l: usize, config: &CriteriaConfig) -> Result<ExtractionResult> {
    config.validate()?;
    let eliminated = eliminate_vertices(table, &table.topology, config);
    let mut removed = vec![false; table.len()];
    for e in &eliminated {
        removed[e.id] = true;
    }
    let survivors: Vec<usize> = (0..table.len()).filter(|&v| !removed[v]).collect();
    if survivors.is_empty() {
        return Err(Error::NothingToExtract);
    }
    let scores = score_vertices(table, &survivors, config);
    let mut abs_kg: Vec<Option<f64>> = survivors
        .iter()
        .map(|&v| Some(table.rows[v].kg.map_or(0.0, f64::abs)))
        .collect();
    snap_ties(&mut abs_kg);
    let mut order: Vec<usize> = (0..survivors.len()).collect();
    order.sort_by(|&a, &b| {
        scores[b]
            .total_cmp(&scores[a])
            .then_with(|| abs_kg[b].unwrap().total_cmp(&abs_kg[a].unwrap()))
            .then_with(|| survivors[a].cmp(&survivors[b]))
    });
    let s: Vec<f64> = order.iter().map(|&k| scores[k]).collect();
    let i: Vec<usize> = order.iter().map(|&k| survivors[k]).collect();
    if l > i.len() {
        log::warn!("requested {l} vertices but only {} survive elimination", i.len());
    }
    let p = i[..l.min(i.len())].to_vec();
    Ok(ExtractionResult { s, i, p, eliminated })
}

/// Full pipeline: features, elimination, scoring and ordering.
pub fn extract(mesh: &Mesh, l: usize, config: &CriteriaConfig, area: AreaMode) -> Result<ExtractionResult> {
    let table = compute_feature_table(mesh, area);
    extract_from_table(&table, l, config)
}

impl PartialOrd for Eliminated {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Eliminated {
    fn cmp(&self, other: &Self) -> Ordering {
        self.id.cmp(&other.id).then(self.reason.cmp(&other.reason))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures;
    use crate::mesh::Point;
    use approx::assert_relative_eq;

    fn row() -> FeatureRow {
        FeatureRow {
            kg: None,
            kh: None,
            k1: None,
            k2: None,
            theta: None,
            psi_min: None,
            psi_max: None,
            kgi: None,
            khi: None,
            c_el: None,
            c_dug: None,
            c_tup: None,
            c_vis: None,
            grad_kg: None,
            grad_kh: None,
            class: VertexClass::SimpleSmooth,
            shape: None,
            flags: RowFlags::default(),
        }
    }

    fn table_of(rows: Vec<FeatureRow>) -> FeatureTable {
        FeatureTable {
            rows,
            zero_band: 0.0,
            zero_band_kh: 0.0,
            area_mode: AreaMode::Barycentric,
            topology: TopologySets::default(),
        }
    }

    #[test]
    fn grid_interior_features() {
        let g = fixtures::grid(3, 3, 1.0);
        let t = compute_feature_table(&g, AreaMode::Barycentric);
        let r = &t.rows[4];
        assert_relative_eq!(r.kg.unwrap(), 0.0, epsilon = 1e-12);
        assert_relative_eq!(r.theta.unwrap(), 360.0, epsilon = 1e-9);
        assert_relative_eq!(r.c_vis.unwrap(), 0.0, epsilon = 1e-12);
        assert_relative_eq!(r.c_tup.unwrap(), 90.0, epsilon = 1e-9);
        assert_relative_eq!(r.c_dug.unwrap(), 2.0f64.sqrt(), epsilon = 1e-12);
        // Right isoceles triangle: hypotenuse^2 / (2 * area) = 2.
        assert_relative_eq!(r.c_el.unwrap(), 2.0, epsilon = 1e-12);
        assert_eq!(r.class, VertexClass::SimpleSmooth);
        assert!(r.flags.flat);
    }

    #[test]
    fn tetrahedron_features() {
        let m = fixtures::tetrahedron();
        let t = compute_feature_table(&m, AreaMode::Barycentric);
        for r in &t.rows {
            assert_relative_eq!(r.c_tup.unwrap(), 60.0, epsilon = 1e-9);
            assert_relative_eq!(r.c_dug.unwrap(), 1.0, epsilon = 1e-12);
            assert_relative_eq!(r.c_vis.unwrap(), (2.0f64 / 3.0).sqrt(), epsilon = 1e-12);
            assert_relative_eq!(r.c_el.unwrap(), 2.0 / 3.0f64.sqrt(), epsilon = 1e-12);
        }
    }

    #[test]
    fn single_triangle_rows() {
        let m = fixtures::single_triangle();
        let t = compute_feature_table(&m, AreaMode::Barycentric);
        assert_eq!(t.len(), 3);
        for r in &t.rows {
            assert!(r.flags.boundary);
            assert_eq!(r.class, VertexClass::Boundary);
            assert!(r.psi_min.is_none() && r.psi_max.is_none());
        }
    }

    #[test]
    fn error_rows_leave_values_absent() {
        let m = fixtures::three_fins();
        let t = compute_feature_table(&m, AreaMode::Barycentric);
        for v in [0, 1] {
            let r = &t.rows[v];
            assert!(r.flags.error);
            assert!(r.kg.is_none() && r.kh.is_none() && r.kgi.is_none());
        }
    }

    #[test]
    fn percentile_matches_linear_interpolation() {
        let xs = [1.0, 2.0, 3.0, 4.0, 5.0];
        assert_eq!(percentile(&xs, 0.0), Some(1.0));
        assert_eq!(percentile(&xs, 100.0), Some(5.0));
        assert_eq!(percentile(&xs, 50.0), Some(3.0));
        assert_relative_eq!(percentile(&xs, 10.0).unwrap(), 1.4, epsilon = 1e-15);
        assert_eq!(percentile(&[], 50.0), None);
    }

    #[test]
    fn tail_cuts_need_one_expected_sample() {
        let small: Vec<f64> = (0..199).map(f64::from).collect();
        assert_eq!(tail_cut(&small, 0.5), None);
        assert_eq!(tail_cut(&small, 99.5), None);
        let big: Vec<f64> = (0..200).map(f64::from).collect();
        assert_relative_eq!(tail_cut(&big, 0.5).unwrap(), 0.995, epsilon = 1e-12);
        assert_relative_eq!(tail_cut(&big, 99.5).unwrap(), 198.005, epsilon = 1e-12);
        assert_relative_eq!(tail_cut(&small[..20], 5.0).unwrap(), 0.95, epsilon = 1e-12);
    }

    #[test]
    fn presets_and_rates() {
        let c = CriteriaConfig::default();
        assert_eq!(c.rates, [1.0, 1.0, 1.0, 0.9, 0.8, 0.8, 0.7, 0.4]);
        assert!(!c.boundary_elimination);
        for p in [Preset::Safe, Preset::Extended, Preset::Aggressive] {
            CriteriaConfig::new(p).validate().unwrap();
        }
        let mut bad = CriteriaConfig::default();
        bad.cuts[0] = CutSpec::both(50.0, 10.0);
        assert!(bad.validate().is_err());
        assert_eq!("Aggressive".parse::<Preset>().unwrap(), Preset::Aggressive);
        assert!("mild".parse::<Preset>().is_err());
    }

    #[test]
    fn grid_with_boundary_elimination_removes_everything() {
        let g = fixtures::grid(4, 4, 1.0);
        let t = compute_feature_table(&g, AreaMode::Barycentric);
        let config = CriteriaConfig {
            boundary_elimination: true,
            ..Default::default()
        };
        let e = eliminate_vertices(&t, &t.topology, &config);
        assert_eq!(e.len(), 16);
        assert!(e.iter().all(|x| matches!(x.reason, Reason::Boundary | Reason::Flat)));
        assert!(matches!(extract_from_table(&t, 1, &config), Err(Error::NothingToExtract)));
    }

    #[test]
    fn tetrahedron_safe_eliminates_nothing() {
        let m = fixtures::tetrahedron();
        let t = compute_feature_table(&m, AreaMode::Barycentric);
        assert!(eliminate_vertices(&t, &t.topology, &CriteriaConfig::default()).is_empty());
    }

    #[test]
    fn valence_spike_is_cut() {
        let (m, spike) = fixtures::valence_spike(3, 0, 4);
        let t = compute_feature_table(&m, AreaMode::Barycentric);
        let e = eliminate_vertices(&t, &t.topology, &CriteriaConfig::default());
        let hit = e.iter().find(|x| x.id == spike).expect("spike vertex eliminated");
        assert_eq!(hit.reason, Reason::Kgi);
    }

    #[test]
    fn single_criterion_scores() {
        let mut r = row();
        r.kg = Some(0.3);
        let t = table_of(vec![r]);
        let s = score_vertices(&t, &[0], &CriteriaConfig::default());
        assert_relative_eq!(s[0], 0.4, epsilon = 1e-15);

        let t = table_of(vec![row()]);
        assert_eq!(score_vertices(&t, &[0], &CriteriaConfig::default()), vec![0.0]);

        let mut a = row();
        a.psi_min = Some(2.0);
        let mut b = row();
        b.psi_min = Some(1.0);
        let t = table_of(vec![a, b]);
        assert_eq!(score_vertices(&t, &[0, 1], &CriteriaConfig::default()), vec![1.0, 0.5]);
    }

    #[test]
    fn snapping_merges_rounding_ties_only() {
        let mut v = vec![Some(1.0), Some(1.0 + 1e-14), None, Some(0.9999999999999998), Some(1.1), Some(-1.0)];
        snap_ties(&mut v);
        assert_eq!(v, vec![Some(0.9999999999999998), Some(0.9999999999999998), None, Some(0.9999999999999998), Some(1.1), Some(-1.0)]);
    }

    #[test]
    fn rank_weights_share_ties() {
        assert_eq!(rank_weights(&[3.0, 1.0, 3.0, 2.0]), vec![1.0, 0.25, 1.0, 0.5]);
        assert!(rank_weights(&[]).is_empty());
    }

    #[test]
    fn tetrahedron_order_uses_index_ties() {
        let m = fixtures::tetrahedron();
        let r = extract(&m, 4, &CriteriaConfig::default(), AreaMode::Barycentric).unwrap();
        assert_eq!(r.p, vec![0, 1, 2, 3]);
        assert!(r.s.windows(2).all(|w| w[0] == w[1]));

        let r0 = extract(&m, 0, &CriteriaConfig::default(), AreaMode::Barycentric).unwrap();
        assert!(r0.p.is_empty());
        assert_eq!(r0.i.len(), 4);
        let big = extract(&m, 10, &CriteriaConfig::default(), AreaMode::Barycentric).unwrap();
        assert_eq!(big.p, big.i);
    }

    fn pulled_sphere(target: usize) -> Mesh {
        let s = fixtures::jitter(&fixtures::icosphere(3), 1e-4, 3);
        let spike = s.position(target);
        let mut k = 0;
        s.map_vertices(move |p| {
            let out = if k == target { Point::from(spike.coords * 1.2) } else { *p };
            k += 1;
            out
        })
    }

    #[test]
    fn pulled_vertex_and_ring_are_cut_as_outliers() {
        let target = 17;
        let m = pulled_sphere(target);
        let adj = Adjacency::build(&m);
        let r = extract(&m, 10, &CriteriaConfig::default(), AreaMode::Barycentric).unwrap();
        let reason = |v: usize| r.eliminated.iter().find(|e| e.id == v).map(|e| e.reason);
        assert_eq!(reason(target), Some(Reason::KhNegative));
        for &u in adj.neighbors(target) {
            assert!(matches!(reason(u), Some(Reason::KhNegative | Reason::KmaxHigh)), "{u}: {:?}", reason(u));
        }
    }

    #[test]
    fn pulled_vertex_leads_without_cuts() {
        let target = 17;
        let m = pulled_sphere(target);
        let config = CriteriaConfig {
            cuts: [CutSpec::OFF; 19],
            ..Default::default()
        };
        let r = extract(&m, 10, &config, AreaMode::Barycentric).unwrap();
        assert_eq!(r.i[0], target);
        assert!(r.eliminated.is_empty());
    }

    #[test]
    fn result_invariants() {
        let m = fixtures::spiked_icosphere(2, 6, 0.2, 0.01, 9);
        let r = extract(&m, 25, &CriteriaConfig::new(Preset::Extended), AreaMode::VoronoiMixed).unwrap();
        assert!(r.s.windows(2).all(|w| w[0] >= w[1]));
        assert_eq!(r.s.len(), r.i.len());
        assert_eq!(&r.i[..25], &r.p[..]);
        let mut all: Vec<usize> = r.i.iter().copied().chain(r.eliminated.iter().map(|e| e.id)).collect();
        all.sort_unstable();
        assert_eq!(all, (0..m.vertex_count()).collect::<Vec<_>>());
    }

    #[test]
    fn feature_csv_has_one_line_per_vertex() {
        let m = fixtures::single_triangle();
        let t = compute_feature_table(&m, AreaMode::Barycentric);
        let mut buf = Vec::new();
        write_feature_csv(&t, &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines.len(), 4);
        assert!(lines[0].starts_with("vertex,kg,kh"));
        assert!(lines[0].ends_with("class,shape,risky,error,boundary,flat"));
        // psi columns are empty for a lone triangle.
        assert!(lines[1].contains(",,"));
    }
}
