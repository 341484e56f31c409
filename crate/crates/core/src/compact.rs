//! Compactifications realized as embeddings of `X` and its boundary into a
//! compact subset of Euclidean space, the coarse structure they induce,
//! controlled neighbourhoods of the diagonal and continuity profiles.

use std::collections::HashMap;
use std::f64::consts::PI;
use std::fmt;
use std::sync::Arc;

use num_complex::Complex64;
use rayon::prelude::*;

use crate::coarse::{Entourage, OrbitEntourage, PointMap, Relation, SampledFunction, Translation};
use crate::error::{Error, Result};
use crate::profile::DefectProfile;
use crate::space::{BinaryTree, HalfLine, Lattice, Point, ProperMetricSpace};

/// Euclidean distance in the compact model.
pub fn d_cmp(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y) * (x - y))
        .sum::<f64>()
        .sqrt()
}

/// A point of the boundary, with chart data locating it (the end word for
/// trees, empty otherwise).
#[derive(Debug, Clone, PartialEq)]
pub struct BoundaryPoint {
    pub coords: Vec<f64>,
    pub chart: Vec<i64>,
}

impl BoundaryPoint {
    pub fn new(coords: Vec<f64>) -> Self {
        BoundaryPoint {
            coords,
            chart: Vec::new(),
        }
    }
}

/// A finite boundary sample; every boundary point lies within `resolution`
/// of one of the sample points.
#[derive(Debug, Clone)]
pub struct BoundarySample {
    pub points: Vec<BoundaryPoint>,
    pub resolution: f64,
}

/// A compactification of a proper discrete space with metrizable boundary.
pub trait CompactModel: Send + Sync + fmt::Debug {
    fn key(&self) -> String;

    fn interior(&self) -> &dyn ProperMetricSpace;

    fn boundary_dim(&self) -> usize;

    fn embed(&self, x: &Point) -> Vec<f64>;

    fn is_boundary(&self, p: &[f64]) -> bool;

    /// A sample of the boundary at resolution at most `eps / 4`, rotated by
    /// `phase` in `[0, 1)` where the boundary allows it.
    fn boundary_sample(&self, eps: f64, phase: f64) -> Result<BoundarySample>;

    /// Interior points near the shell of radius `shell` in the direction of
    /// `b`; candidates for points close to `b` in the model.
    fn interior_candidates(&self, b: &BoundaryPoint, shell: f64) -> Vec<Point>;

    /// `K_0 = {}`, `K_n = ball(2^n)`.
    fn exhaustion(&self, n: usize) -> Result<Vec<Point>> {
        if n == 0 {
            return Ok(Vec::new());
        }
        self.interior().window((n as f64).exp2())
    }
}

/// The `n` with `x` in `K_{n+1} \ K_n` for the default exhaustion.
pub fn level_of_norm(norm: f64) -> usize {
    let mut n = 0;
    while norm > ((n + 1) as f64).exp2() {
        n += 1;
    }
    n
}

/// Smallest `n >= 0` with `|x| <= 2^n`.
fn cover_index(norm: f64) -> usize {
    let mut n = 0;
    while norm > (n as f64).exp2() {
        n += 1;
    }
    n
}

fn stencil(center: &[i64], radius: i64) -> Vec<Point> {
    let mut out = Vec::new();
    let mut off = vec![-radius; center.len()];
    loop {
        out.push(Point(center.iter().zip(&off).map(|(c, o)| c + o).collect()));
        let mut k = off.len();
        loop {
            if k == 0 {
                return out;
            }
            k -= 1;
            if off[k] < radius {
                off[k] += 1;
                break;
            }
            off[k] = -radius;
        }
    }
}

/// Radial compactification of `Z^n`: `x -> x / (1 + |x|)`, boundary the unit
/// sphere. Boundary sampling is implemented for `n = 1, 2`.
#[derive(Debug, Clone)]
pub struct RadialModel {
    space: Lattice,
}

impl RadialModel {
    pub fn new(dim: usize) -> Result<Self> {
        if !(1..=2).contains(&dim) {
            return Err(Error::InvalidArgument(format!(
                "radial model is available in dimensions 1 and 2, not {dim}"
            )));
        }
        Ok(RadialModel {
            space: Lattice::euclidean(dim),
        })
    }

    pub fn dim(&self) -> usize {
        self.space.dim
    }
}

impl CompactModel for RadialModel {
    fn key(&self) -> String {
        format!("radial-Z{}", self.space.dim)
    }

    fn interior(&self) -> &dyn ProperMetricSpace {
        &self.space
    }

    fn boundary_dim(&self) -> usize {
        self.space.dim - 1
    }

    fn embed(&self, x: &Point) -> Vec<f64> {
        let v = x.to_f64();
        let n = v.iter().map(|c| c * c).sum::<f64>().sqrt();
        v.iter().map(|c| c / (1.0 + n)).collect()
    }

    fn is_boundary(&self, p: &[f64]) -> bool {
        (p.iter().map(|c| c * c).sum::<f64>().sqrt() - 1.0).abs() < 1e-12
    }

    fn boundary_sample(&self, eps: f64, phase: f64) -> Result<BoundarySample> {
        if self.space.dim == 1 {
            return Ok(BoundarySample {
                points: vec![
                    BoundaryPoint::new(vec![-1.0]),
                    BoundaryPoint::new(vec![1.0]),
                ],
                resolution: 0.0,
            });
        }
        let k = ((8.0 * PI / eps).ceil() as usize).max(8);
        let points = (0..k)
            .map(|j| {
                let t = 2.0 * PI * (j as f64 + phase) / k as f64;
                BoundaryPoint::new(vec![t.cos(), t.sin()])
            })
            .collect();
        Ok(BoundarySample {
            points,
            resolution: 2.0 * (PI / (2.0 * k as f64)).sin(),
        })
    }

    fn interior_candidates(&self, b: &BoundaryPoint, shell: f64) -> Vec<Point> {
        let c: Vec<i64> = b
            .coords
            .iter()
            .map(|u| (u * shell).round() as i64)
            .collect();
        stencil(&c, if self.space.dim == 1 { 1 } else { 2 })
    }
}

/// One-point compactification of `Z`, modelled on `{0} ∪ {±1/(1+n)}` with
/// the origin sent to 1 and infinity to 0.
#[derive(Debug, Clone)]
pub struct OnePointModel {
    space: Lattice,
}

impl Default for OnePointModel {
    fn default() -> Self {
        OnePointModel {
            space: Lattice::euclidean(1),
        }
    }
}

impl CompactModel for OnePointModel {
    fn key(&self) -> String {
        "one-point-Z".into()
    }

    fn interior(&self) -> &dyn ProperMetricSpace {
        &self.space
    }

    fn boundary_dim(&self) -> usize {
        0
    }

    fn embed(&self, x: &Point) -> Vec<f64> {
        let n = x.0[0];
        if n == 0 {
            vec![1.0]
        } else {
            vec![n.signum() as f64 / (1.0 + n.abs() as f64)]
        }
    }

    fn is_boundary(&self, p: &[f64]) -> bool {
        p[0] == 0.0
    }

    fn boundary_sample(&self, _eps: f64, _phase: f64) -> Result<BoundarySample> {
        Ok(BoundarySample {
            points: vec![BoundaryPoint::new(vec![0.0])],
            resolution: 0.0,
        })
    }

    fn interior_candidates(&self, _b: &BoundaryPoint, shell: f64) -> Vec<Point> {
        let r = shell.round() as i64;
        vec![Point::from([-r]), Point::from([r])]
    }
}

/// The cone over a point: `N` with `m -> m / (1 + m)`, boundary `{1}`.
#[derive(Debug, Clone, Default)]
pub struct ConeModel {
    space: HalfLine,
}

impl CompactModel for ConeModel {
    fn key(&self) -> String {
        "cone-N".into()
    }

    fn interior(&self) -> &dyn ProperMetricSpace {
        &self.space
    }

    fn boundary_dim(&self) -> usize {
        0
    }

    fn embed(&self, x: &Point) -> Vec<f64> {
        let m = x.0[0] as f64;
        vec![m / (1.0 + m)]
    }

    fn is_boundary(&self, p: &[f64]) -> bool {
        p[0] == 1.0
    }

    fn boundary_sample(&self, _eps: f64, _phase: f64) -> Result<BoundarySample> {
        Ok(BoundarySample {
            points: vec![BoundaryPoint::new(vec![1.0])],
            resolution: 0.0,
        })
    }

    fn interior_candidates(&self, _b: &BoundaryPoint, shell: f64) -> Vec<Point> {
        let r = shell.round().max(0.0) as i64;
        vec![Point::from([r]), Point::from([r + 1])]
    }
}

/// Rooted binary tree with its space of ends. A vertex `w` of depth `k` is
/// placed at `(c(w) + 3^-k / 2 - 1/2, 1 / (2 (1 + k)))` where
/// `c(w) = sum 2 w_j 3^-j`; the end `w_1 w_2 ...` sits at `(c - 1/2, 0)` on
/// the Cantor set. Boundary samples use end cylinders of depth at most
/// `depth`.
#[derive(Debug, Clone)]
pub struct TreeModel {
    pub depth: usize,
    space: BinaryTree,
}

impl TreeModel {
    pub fn new(depth: usize) -> Self {
        TreeModel {
            depth,
            space: BinaryTree::default(),
        }
    }

    fn cantor(word: &[i64]) -> f64 {
        let mut c = 0.0;
        let mut scale = 1.0 / 3.0;
        for &b in word {
            c += 2.0 * b as f64 * scale;
            scale /= 3.0;
        }
        c
    }
}

impl CompactModel for TreeModel {
    fn key(&self) -> String {
        format!("binary-tree-{}", self.depth)
    }

    fn interior(&self) -> &dyn ProperMetricSpace {
        &self.space
    }

    fn boundary_dim(&self) -> usize {
        0
    }

    fn embed(&self, x: &Point) -> Vec<f64> {
        let k = x.0.len();
        let half_width = 0.5 * 3f64.powi(-(k as i32));
        vec![
            Self::cantor(&x.0) + half_width - 0.5,
            0.5 / (1.0 + k as f64),
        ]
    }

    fn is_boundary(&self, p: &[f64]) -> bool {
        p[1] == 0.0
    }

    fn boundary_sample(&self, eps: f64, phase: f64) -> Result<BoundarySample> {
        let mut d = 0;
        while d < self.depth && 3f64.powi(-(d as i32)) > eps / 4.0 {
            d += 1;
        }
        let count = 1usize << d;
        let shift = ((phase.rem_euclid(1.0)) * count as f64) as usize;
        let points = (0..count)
            .map(|j| {
                let idx = (j + shift) % count;
                let word: Vec<i64> = (0..d).map(|b| ((idx >> (d - 1 - b)) & 1) as i64).collect();
                BoundaryPoint {
                    coords: vec![Self::cantor(&word) - 0.5, 0.0],
                    chart: word,
                }
            })
            .collect();
        Ok(BoundarySample {
            points,
            resolution: 3f64.powi(-(d as i32)),
        })
    }

    fn interior_candidates(&self, b: &BoundaryPoint, shell: f64) -> Vec<Point> {
        let k0 = shell.ceil().max(0.0) as usize;
        (k0..k0 + 3)
            .map(|k| {
                Point(
                    (0..k)
                        .map(|j| b.chart.get(j).copied().unwrap_or(0))
                        .collect(),
                )
            })
            .collect()
    }
}

/// Looks up a built-in model by key: `radial-Z1`, `radial-Z2`, `one-point-Z`,
/// `cone-N`, `binary-tree-<depth>`.
pub fn model_by_key(key: &str) -> Result<Arc<dyn CompactModel>> {
    match key {
        "radial-Z1" => Ok(Arc::new(RadialModel::new(1)?)),
        "radial-Z2" => Ok(Arc::new(RadialModel::new(2)?)),
        "one-point-Z" => Ok(Arc::new(OnePointModel::default())),
        "cone-N" => Ok(Arc::new(ConeModel::default())),
        _ => match key.strip_prefix("binary-tree-").map(str::parse::<usize>) {
            Some(Ok(d)) if (1..=20).contains(&d) => Ok(Arc::new(TreeModel::new(d))),
            _ => Err(Error::UnknownInstance(key.to_string())),
        },
    }
}

/// Keys accepted by [`model_by_key`], in a fixed order.
pub fn model_keys() -> Vec<&'static str> {
    vec![
        "radial-Z1",
        "radial-Z2",
        "one-point-Z",
        "cone-N",
        "binary-tree-8",
    ]
}

/// An `eps`-net of the boundary with a certified covering radius.
#[derive(Debug, Clone)]
pub struct BoundaryNet {
    pub eps: f64,
    pub points: Vec<BoundaryPoint>,
    /// Every boundary point is within this distance of a net point.
    pub covering_radius: f64,
}

impl BoundaryNet {
    /// Index and distance of the nearest net point; ties go to the smallest
    /// index.
    pub fn nearest(&self, p: &[f64]) -> (usize, f64) {
        let mut best = (0, f64::INFINITY);
        for (i, b) in self.points.iter().enumerate() {
            let d = d_cmp(&b.coords, p);
            if d < best.1 {
                best = (i, d);
            }
        }
        best
    }
}

const RING_LIMIT: i64 = 8;

/// Uniform grid over model coordinates for nearest and range queries on a
/// boundary net.
#[derive(Debug, Clone)]
pub struct NetIndex {
    h: f64,
    cells: HashMap<Vec<i64>, Vec<usize>>,
    coords: Vec<Vec<f64>>,
}

impl NetIndex {
    pub fn new(net: &BoundaryNet) -> Self {
        let h = (net.eps / 2.0).max(1e-9);
        let mut cells: HashMap<Vec<i64>, Vec<usize>> = HashMap::new();
        let coords: Vec<Vec<f64>> = net.points.iter().map(|b| b.coords.clone()).collect();
        for (i, c) in coords.iter().enumerate() {
            cells.entry(Self::cell(h, c)).or_default().push(i);
        }
        NetIndex { h, cells, coords }
    }

    fn cell(h: f64, p: &[f64]) -> Vec<i64> {
        p.iter().map(|c| (c / h).floor() as i64).collect()
    }

    /// Visits net points in cells at Chebyshev offset `r` from `center`
    /// (`ring`) or at most `r` (`!ring`).
    fn visit(&self, center: &[i64], r: i64, ring: bool, mut f: impl FnMut(usize)) {
        let dim = center.len();
        let mut off = vec![-r; dim];
        let mut key = center.to_vec();
        loop {
            if !ring || off.iter().any(|c| c.abs() == r) {
                for k in 0..dim {
                    key[k] = center[k] + off[k];
                }
                if let Some(ids) = self.cells.get(key.as_slice()) {
                    ids.iter().for_each(|&i| f(i));
                }
            }
            let mut k = dim;
            loop {
                if k == 0 {
                    return;
                }
                k -= 1;
                if off[k] < r {
                    off[k] += 1;
                    break;
                }
                off[k] = -r;
            }
        }
    }

    /// Index and distance of the nearest net point, ties to the smallest
    /// index; agrees with [`BoundaryNet::nearest`].
    pub fn nearest(&self, p: &[f64]) -> (usize, f64) {
        let center = Self::cell(self.h, p);
        let mut best = (usize::MAX, f64::INFINITY);
        for r in 0..=RING_LIMIT {
            self.visit(&center, r, true, |i| {
                let d = d_cmp(&self.coords[i], p);
                if d < best.1 || (d == best.1 && i < best.0) {
                    best = (i, d);
                }
            });
            // Every point in a farther ring is at least r * h away.
            if best.0 != usize::MAX && best.1 < r as f64 * self.h {
                return best;
            }
        }
        // Far from every net point: a linear scan is cheaper than more rings.
        for (i, c) in self.coords.iter().enumerate() {
            let d = d_cmp(c, p);
            if d < best.1 || (d == best.1 && i < best.0) {
                best = (i, d);
            }
        }
        best
    }

    /// Smallest index of a net point at distance `< radius` from `p`.
    pub fn first_within(&self, p: &[f64], radius: f64) -> Option<usize> {
        let center = Self::cell(self.h, p);
        let reach = (radius / self.h).ceil() as i64 + 1;
        let mut best: Option<usize> = None;
        self.visit(&center, reach, false, |i| {
            if d_cmp(&self.coords[i], p) < radius && best.is_none_or(|b| i < b) {
                best = Some(i);
            }
        });
        best
    }
}

/// Greedy farthest-point net of the boundary: points are inserted while
/// some sample point is at least `eps / 2` from the net. The certified
/// covering radius is the final fill distance plus the sample resolution.
pub fn boundary_net(model: &dyn CompactModel, eps: f64, phase: f64) -> Result<BoundaryNet> {
    if !(eps > 0.0) {
        return Err(Error::InvalidArgument(format!(
            "net radius must be positive, got {eps}"
        )));
    }
    let sample = model.boundary_sample(eps, phase)?;
    let cand = &sample.points;
    let mut gap: Vec<f64> = vec![f64::INFINITY; cand.len()];
    let mut chosen = Vec::new();
    let mut next = 0;
    loop {
        chosen.push(cand[next].clone());
        let c = &cand[next].coords;
        gap.par_iter_mut()
            .zip(cand.par_iter())
            .for_each(|(g, b)| *g = g.min(d_cmp(c, &b.coords)));
        let (far, dist) =
            gap.iter().enumerate().fold(
                (0, -1.0),
                |acc, (i, &g)| if g > acc.1 { (i, g) } else { acc },
            );
        if dist < eps / 2.0 {
            let covering_radius = dist + sample.resolution;
            if covering_radius >= eps {
                return Err(Error::NetCoverage {
                    level: (-eps.log2()).round().max(0.0) as usize,
                    point: cand[far].coords.clone(),
                });
            }
            return Ok(BoundaryNet {
                eps,
                points: chosen,
                covering_radius,
            });
        }
        next = far;
    }
}

/// Searches outward from the shell just beyond `min_norm` for an interior
/// point `y` with `|y| > min_norm` and `d_cmp(y, b) < eps`. The first shell
/// containing a valid candidate decides; within it the closest candidate
/// wins, ties to the lexicographically smallest. At most `budget` candidates
/// are examined.
pub fn find_interior_witness(
    model: &dyn CompactModel,
    b: &BoundaryPoint,
    min_norm: f64,
    eps: f64,
    budget: usize,
) -> Option<Point> {
    let space = model.interior();
    let mut shell = min_norm.floor() + 1.0;
    let mut examined = 0;
    while examined < budget {
        let mut best: Option<(f64, Point)> = None;
        for y in model.interior_candidates(b, shell) {
            examined += 1;
            if space.norm(&y) <= min_norm {
                continue;
            }
            let d = d_cmp(&model.embed(&y), &b.coords);
            if d < eps
                && best
                    .as_ref()
                    .is_none_or(|(bd, by)| d < *bd || (d == *bd && y < *by))
            {
                best = Some((d, y));
            }
        }
        if let Some((_, y)) = best {
            return Some(y);
        }
        shell += (shell / 16.0).max(1.0);
    }
    None
}

/// Checks density at scale `eps`: every point of an `eps`-net of the
/// boundary has an interior point of norm at least `1/eps` within `eps`.
pub fn check_density(model: &dyn CompactModel, eps: f64) -> Result<()> {
    let net = boundary_net(model, eps, 0.0)?;
    for (i, b) in net.points.iter().enumerate() {
        let budget = 1 << 16;
        if find_interior_witness(model, b, (1.0 / eps).ceil() - 1.0, eps, budget).is_none() {
            return Err(Error::Density {
                level: (-eps.log2()).round().max(0.0) as usize,
                index: i,
                budget,
            });
        }
    }
    Ok(())
}

/// For each escape radius `r`, `sup d_cmp(x, y)` over pairs of `E` with
/// `r <= |x| <= window`. Radii without pairs are skipped.
pub fn induced_controlled_test(
    e: &Entourage,
    model: &dyn CompactModel,
    escape_radii: &[f64],
    window: f64,
    tolerance: f64,
) -> Result<DefectProfile> {
    let space = model.interior();
    let rows = e.scan_max(space, window, |x, y| {
        d_cmp(&model.embed(x), &model.embed(y))
    })?;
    let rows: Vec<(f64, f64)> = rows.into_iter().map(|(x, v)| (space.norm(&x), v)).collect();
    let mut profile = DefectProfile::new(format!("induced-controlled:{}", model.key()), tolerance);
    for &r in escape_radii {
        let mut sup: Option<f64> = None;
        for &(n, v) in &rows {
            if n >= r {
                sup = Some(sup.map_or(v, |s: f64| s.max(v)));
            }
        }
        match sup {
            Some(s) => profile.push(r, s),
            None => profile.push_skipped(r),
        }
    }
    Ok(profile)
}

/// `E = ⋃ E_n`, `E_n = {(x, y) in U_n x U_n : d_cmp(x, y) < 2^-n}` with
/// `U_n = ball(2^n)`. A pair belongs to `E` iff it belongs to `E_n` for the
/// smallest `n` with both points in `U_n`, since the threshold shrinks with
/// `n`.
pub fn controlled_neighborhood(model: Arc<dyn CompactModel>) -> Entourage {
    let m = model.clone();
    let contains = move |x: &Point, y: &Point| {
        let space = m.interior();
        let n = cover_index(space.norm(x)).max(cover_index(space.norm(y)));
        d_cmp(&m.embed(x), &m.embed(y)) < (-(n as f64)).exp2()
    };
    let m = model.clone();
    // For the built-in models the norm profile is 1/(1+|x|), which keeps
    // partners of x inside |y| <= 2|x| + 1.
    let reach = move |x: &Point| 3.0 * m.interior().norm(x) + 2.0;
    Entourage::Relation(Relation::new(
        format!("controlled-neighborhood:{}", model.key()),
        reach,
        contains,
    ))
}

/// Oscillation of `f` near the boundary: for each `eps`, the largest
/// oscillation of `f` on `{x : d_cmp(x, b) < eps, 1/eps <= |x| <= window}`
/// over the points `b` of an `eps`-net. For complex values the oscillation
/// is the largest width over 32 projection directions (exact for real `f`).
pub fn higson_membership_profile(
    f: &SampledFunction,
    model: &dyn CompactModel,
    eps_schedule: &[f64],
    window: f64,
    tolerance: f64,
) -> Result<DefectProfile> {
    let space = model.interior();
    let pts = space.window(window)?;
    let data: Vec<(f64, Vec<f64>, Complex64)> = pts
        .par_iter()
        .map(|x| (space.norm(x), model.embed(x), f.eval(x)))
        .collect();
    let dirs: Vec<Complex64> = (0..32)
        .map(|k| Complex64::from_polar(1.0, -PI * k as f64 / 32.0))
        .collect();
    let mut profile = DefectProfile::new(format!("higson:{}:{}", f.name, model.key()), tolerance);
    for &eps in eps_schedule {
        let net = boundary_net(model, eps, 0.0)?;
        let osc: Vec<Option<f64>> = net
            .points
            .par_iter()
            .map(|b| {
                let mut lo = [f64::INFINITY; 32];
                let mut hi = [f64::NEG_INFINITY; 32];
                let mut any = false;
                for (n, p, v) in &data {
                    if *n >= 1.0 / eps && d_cmp(p, &b.coords) < eps {
                        any = true;
                        for (k, d) in dirs.iter().enumerate() {
                            let s = (v * d).re;
                            lo[k] = lo[k].min(s);
                            hi[k] = hi[k].max(s);
                        }
                    }
                }
                any.then(|| (0..32).map(|k| hi[k] - lo[k]).fold(0.0, f64::max))
            })
            .collect();
        let vals: Vec<f64> = osc.into_iter().flatten().collect();
        if vals.is_empty() {
            profile.push_skipped(eps);
        } else {
            profile.push(eps, vals.into_iter().fold(0.0, f64::max));
        }
    }
    Ok(profile)
}

/// How the metric and the compactification judge one entourage.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Agreement {
    BothControlled,
    NeitherControlled,
    /// Controlled for the compactification only; expected, since the radial
    /// compactification induces a coarser structure than the metric.
    CompactificationCoarser,
    /// Metrically bounded but not controlled for the compactification.
    Disagreement,
}

#[derive(Debug, Clone)]
pub struct CrossCheckRow {
    pub name: String,
    /// Metric supremum over `|x| <= window` and over `|x| <= window / 2`.
    pub metric_sup: f64,
    pub metric_sup_half: f64,
    pub metric_controlled: bool,
    /// `sup d_cmp` over pairs with `|x| >= escape`.
    pub cmp_defect: f64,
    pub cmp_controlled: bool,
    pub agreement: Agreement,
    /// Pair realizing `cmp_defect` when the row disagrees.
    pub witness: Option<(Point, Point)>,
}

#[derive(Debug, Clone)]
pub struct CrossCheckReport {
    pub model: String,
    pub escape: f64,
    pub window: f64,
    pub tolerance: f64,
    pub rows: Vec<CrossCheckRow>,
}

impl CrossCheckReport {
    pub fn disagreements(&self) -> Vec<&CrossCheckRow> {
        self.rows
            .iter()
            .filter(|r| r.agreement == Agreement::Disagreement)
            .collect()
    }
}

/// Sample entourages on `Z^dim`: metric bounds 0, 1, 2, 4, 8, the graphs of
/// doubling, negation, a shift by 3, and `x + floor(sqrt|x|) e_1`, and the
/// translation orbit of the unit l1 ball.
pub fn sample_entourages(dim: usize, window: f64) -> Vec<(String, Entourage)> {
    let mut out: Vec<(String, Entourage)> = [0.0, 1.0, 2.0, 4.0, 8.0]
        .iter()
        .map(|&r| (format!("metric-bound:{r}"), Entourage::MetricBound(r)))
        .collect();
    let mut e1 = vec![0i64; dim];
    e1[0] = 1;
    let shift = Point(e1.iter().map(|c| 3 * c).collect());
    let e1 = Point(e1);
    out.push((
        "graph:double".into(),
        Entourage::GraphOfMap(PointMap::new("double", window, |x| x.scale(2))),
    ));
    out.push((
        "graph:negate".into(),
        Entourage::GraphOfMap(PointMap::new("negate", window, |x| x.neg())),
    ));
    out.push((
        "graph:shift3".into(),
        Entourage::GraphOfMap(PointMap::new("shift3", window, move |x| x.add(&shift))),
    ));
    out.push((
        "graph:sqrt-drift".into(),
        Entourage::GraphOfMap(PointMap::new("sqrt-drift", window, move |x| {
            let n = x.to_f64().iter().map(|c| c * c).sum::<f64>().sqrt();
            x.add(&e1.scale(n.sqrt().floor() as i64))
        })),
    ));
    let mut k = vec![Point::origin(dim)];
    for i in 0..dim {
        for s in [-1, 1] {
            let mut v = vec![0; dim];
            v[i] = s;
            k.push(Point(v));
        }
    }
    k.sort();
    out.push((
        "orbit:l1-ball-1".into(),
        Entourage::OrbitBound(OrbitEntourage {
            action: Arc::new(Translation { acting_dim: dim }),
            k,
            word_radius: window as usize + 2,
        }),
    ));
    out
}

/// Compares metric control (no growth of the metric supremum from the half
/// to the full window) with control for the compactification (`sup d_cmp`
/// beyond `escape` below `tolerance`). Only metric-bounded entourages that
/// the compactification rejects count as disagreements.
pub fn cross_check_metric_vs_compactification(
    model: &dyn CompactModel,
    entourages: &[(String, Entourage)],
    escape: f64,
    window: f64,
    tolerance: f64,
) -> Result<CrossCheckReport> {
    let space = model.interior();
    let pts = space.window(window)?;
    let mut rows = Vec::new();
    for (name, e) in entourages {
        type Row = (f64, f64, f64, Option<(Point, Point)>);
        let per_x: Result<Vec<Row>> = pts
            .par_iter()
            .map(|x| {
                let nx = space.norm(x);
                let ex = model.embed(x);
                let mut metric: f64 = 0.0;
                let mut cmp: f64 = 0.0;
                let mut arg = None;
                for y in e.partners(space, x)? {
                    metric = metric.max(space.distance(x, &y));
                    let d = d_cmp(&ex, &model.embed(&y));
                    if d > cmp {
                        cmp = d;
                        arg = Some((x.clone(), y));
                    }
                }
                Ok((nx, metric, cmp, arg))
            })
            .collect();
        let per_x = per_x?;
        let metric_sup = per_x.iter().map(|r| r.1).fold(0.0, f64::max);
        let metric_sup_half = per_x
            .iter()
            .filter(|r| r.0 <= window / 2.0)
            .map(|r| r.1)
            .fold(0.0, f64::max);
        let metric_controlled = metric_sup <= metric_sup_half * (1.0 + 1e-12);
        let mut cmp_defect: f64 = 0.0;
        let mut witness = None;
        for (n, _, c, arg) in &per_x {
            if *n >= escape && *c > cmp_defect {
                cmp_defect = *c;
                witness = arg.clone();
            }
        }
        let cmp_controlled = cmp_defect < tolerance;
        let agreement = match (metric_controlled, cmp_controlled) {
            (true, true) => Agreement::BothControlled,
            (false, false) => Agreement::NeitherControlled,
            (false, true) => Agreement::CompactificationCoarser,
            (true, false) => Agreement::Disagreement,
        };
        rows.push(CrossCheckRow {
            name: name.clone(),
            metric_sup,
            metric_sup_half,
            metric_controlled,
            cmp_defect,
            cmp_controlled,
            agreement,
            witness: (agreement == Agreement::Disagreement)
                .then_some(witness)
                .flatten(),
        });
    }
    Ok(CrossCheckReport {
        model: model.key(),
        escape,
        window,
        tolerance,
        rows,
    })
}
