//! Extension of continuous boundary maps to coarse maps of the interiors.
//!
//! For every level `n` the target boundary gets a `2^-n` net, and every net
//! point an interior witness outside `ball(2^n)` within `2^-n` of it. A point
//! `x` of level `n` is sent to the witness of the first level-`n` net point
//! near `φ(δ(x))`, where `δ(x)` is the boundary point closest to `x` in a
//! fine net of the source boundary.

use std::collections::HashMap;
use std::fmt;
use std::sync::Arc;

use rayon::prelude::*;

use crate::coarse::{are_close, coarse_map_check, CloseReport, CoarseMapReport, PointMap};
use crate::compact::{
    boundary_net, d_cmp, find_interior_witness, level_of_norm, BoundaryNet, BoundaryPoint,
    CompactModel, NetIndex,
};
use crate::error::{Error, Result};
use crate::profile::DefectProfile;
use crate::space::Point;

/// A continuous map between boundaries, acting on model coordinates.
#[derive(Clone)]
pub struct BoundaryMap {
    pub name: String,
    /// Declared Lipschitz constant in the model metric.
    pub modulus: f64,
    map: Arc<dyn Fn(&BoundaryPoint) -> BoundaryPoint + Send + Sync>,
}

impl BoundaryMap {
    pub fn new(
        name: impl Into<String>,
        modulus: f64,
        map: impl Fn(&BoundaryPoint) -> BoundaryPoint + Send + Sync + 'static,
    ) -> Self {
        BoundaryMap {
            name: name.into(),
            modulus,
            map: Arc::new(map),
        }
    }

    pub fn identity() -> Self {
        Self::new("identity", 1.0, |b| b.clone())
    }

    /// Rotation of the circle by `angle`.
    pub fn rotation(angle: f64) -> Self {
        let (s, c) = angle.sin_cos();
        Self::new(format!("rotation:{angle}"), 1.0, move |b| {
            let (x, y) = (b.coords[0], b.coords[1]);
            BoundaryPoint::new(vec![c * x - s * y, s * x + c * y])
        })
    }

    pub fn antipodal() -> Self {
        Self::new("antipodal", 1.0, |b| {
            BoundaryPoint::new(b.coords.iter().map(|c| -c).collect())
        })
    }

    pub fn constant(target: BoundaryPoint) -> Self {
        Self::new("constant", 0.0, move |_| target.clone())
    }

    pub fn apply(&self, b: &BoundaryPoint) -> BoundaryPoint {
        (self.map)(b)
    }

    /// Spot-checks the declared modulus between each point of the
    /// level-`n+1` net and its nearest level-`n` net point.
    pub fn check_modulus(&self, model: &dyn CompactModel, levels: usize) -> Result<()> {
        for n in 0..levels {
            let coarse = boundary_net(model, (-(n as f64)).exp2(), 0.0)?;
            let fine = boundary_net(model, (-(n as f64 + 1.0)).exp2(), 0.0)?;
            for b in &fine.points {
                let (i, d) = coarse.nearest(&b.coords);
                let a = &coarse.points[i];
                let dphi = d_cmp(&self.apply(a).coords, &self.apply(b).coords);
                if dphi > self.modulus * d + 1e-12 {
                    return Err(Error::Contract(format!(
                        "boundary map {} moves net points {:?} and {:?} {dphi} apart, above modulus {} times {d}",
                        self.name, a.coords, b.coords, self.modulus
                    )));
                }
            }
        }
        Ok(())
    }
}

impl fmt::Debug for BoundaryMap {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "BoundaryMap({})", self.name)
    }
}

/// Net of the target boundary at one level with interior witnesses.
#[derive(Debug, Clone)]
pub struct WitnessLevel {
    pub net: BoundaryNet,
    pub index: NetIndex,
    pub witnesses: Vec<Point>,
}

/// Witness tables for levels `0..=N` of a target model.
#[derive(Debug, Clone)]
pub struct WitnessTable {
    pub model: String,
    pub phase: f64,
    pub levels: Vec<WitnessLevel>,
}

impl WitnessTable {
    pub fn max_level(&self) -> usize {
        self.levels.len() - 1
    }
}

/// Builds the level-`n` nets of `∂Y` and picks for each net point an
/// interior witness `y'` with `|y'| > 2^n` and `d_cmp(y', y) < 2^-n`,
/// searching outward with a budget of `2^(n+6)` candidates.
pub fn boundary_witnesses(
    my: &dyn CompactModel,
    levels: usize,
    phase: f64,
) -> Result<WitnessTable> {
    let mut out = Vec::with_capacity(levels + 1);
    for n in 0..=levels {
        let eps = (-(n as f64)).exp2();
        let net = boundary_net(my, eps, phase)?;
        let budget = 1usize << (n + 6);
        let witnesses: Result<Vec<Point>> = net
            .points
            .par_iter()
            .enumerate()
            .map(|(i, b)| {
                find_interior_witness(my, b, (n as f64).exp2(), eps, budget).ok_or(Error::Density {
                    level: n,
                    index: i,
                    budget,
                })
            })
            .collect();
        let index = NetIndex::new(&net);
        out.push(WitnessLevel {
            net,
            index,
            witnesses: witnesses?,
        });
    }
    Ok(WitnessTable {
        model: my.key(),
        phase,
        levels: out,
    })
}

/// One line of the lift audit.
#[derive(Debug, Clone, PartialEq)]
pub struct AuditRow {
    pub x: Point,
    pub level: usize,
    /// Index of `δ(x)` in the fine source net, and its coordinates.
    pub delta_index: usize,
    pub delta: BoundaryPoint,
    pub net_index: usize,
    pub witness: Point,
}

struct LiftCore {
    mx: Arc<dyn CompactModel>,
    phi: BoundaryMap,
    source_net: BoundaryNet,
    source_index: NetIndex,
    table: Arc<WitnessTable>,
}

impl LiftCore {
    // Points beyond the table's deepest level reuse that level.
    fn row(&self, x: &Point) -> AuditRow {
        let level = level_of_norm(self.mx.interior().norm(x)).min(self.table.max_level());
        let (delta_index, _) = self.source_index.nearest(&self.mx.embed(x));
        let delta = self.source_net.points[delta_index].clone();
        let target = self.phi.apply(&delta);
        let lv = &self.table.levels[level];
        let eps = (-(level as f64)).exp2();
        let net_index = lv
            .index
            .first_within(&target.coords, eps)
            .unwrap_or_else(|| lv.index.nearest(&target.coords).0);
        AuditRow {
            x: x.clone(),
            level,
            delta_index,
            delta,
            net_index,
            witness: lv.witnesses[net_index].clone(),
        }
    }
}

/// The lifted map with its audit over the window.
#[derive(Clone)]
pub struct LiftResult {
    pub name: String,
    pub window: f64,
    pub audit: Vec<AuditRow>,
    core: Arc<LiftCore>,
}

impl fmt::Debug for LiftResult {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("LiftResult")
            .field("name", &self.name)
            .field("window", &self.window)
            .field("rows", &self.audit.len())
            .finish()
    }
}

/// Lifts `φ: ∂X -> ∂Y` to `F: X -> Y` on the ball of radius `window`.
/// `δ(x)` is taken in a net of `∂X` at level `N + 1` (rotated by
/// `source_phase`), where `N` is the level of the window.
pub fn lift_boundary_map(
    phi: &BoundaryMap,
    mx: Arc<dyn CompactModel>,
    witnesses: Arc<WitnessTable>,
    window: f64,
    source_phase: f64,
) -> Result<LiftResult> {
    let top = level_of_norm(window);
    if witnesses.max_level() < top {
        return Err(Error::InvalidArgument(format!(
            "witness table reaches level {} but the window needs level {top}",
            witnesses.max_level()
        )));
    }
    let source_net = boundary_net(mx.as_ref(), (-(top as f64 + 1.0)).exp2(), source_phase)?;
    let source_index = NetIndex::new(&source_net);
    let core = Arc::new(LiftCore {
        mx: mx.clone(),
        phi: phi.clone(),
        source_net,
        source_index,
        table: witnesses,
    });
    let pts = mx.interior().window(window)?;
    let audit: Vec<AuditRow> = pts.par_iter().map(|x| core.row(x)).collect();
    Ok(LiftResult {
        name: format!("lift:{}", phi.name),
        window,
        audit,
        core,
    })
}

impl LiftResult {
    /// `F` as a point map; points outside the window are computed on demand.
    pub fn point_map(&self) -> PointMap {
        let table: Arc<HashMap<Point, Point>> = Arc::new(
            self.audit
                .iter()
                .map(|r| (r.x.clone(), r.witness.clone()))
                .collect(),
        );
        let core = self.core.clone();
        PointMap::new(self.name.clone(), self.window, move |x| {
            match table.get(x) {
                Some(y) => y.clone(),
                None => core.row(x).witness,
            }
        })
    }

    pub fn apply(&self, x: &Point) -> Point {
        self.core.row(x).witness
    }

    /// Checks every audit row: `d(φ(δ), y_{n,i}) < 2^-n`, `|y'| > 2^n`,
    /// `d(y', y_{n,i}) < 2^-n`, and that `F(x)` is the table witness.
    pub fn check_audit(&self, my: &dyn CompactModel) -> Result<()> {
        let table = &self.core.table;
        for row in &self.audit {
            let lv = &table.levels[row.level];
            let eps = (-(row.level as f64)).exp2();
            let y = &lv.net.points[row.net_index];
            let target = self.core.phi.apply(&row.delta);
            let w = &lv.witnesses[row.net_index];
            let ok = d_cmp(&target.coords, &y.coords) < eps
                && my.interior().norm(w) > (row.level as f64).exp2()
                && d_cmp(&my.embed(w), &y.coords) < eps
                && w == &row.witness;
            if !ok {
                return Err(Error::Contract(format!(
                    "audit row for {} (level {}, net index {}) violates the witness conditions",
                    row.x, row.level, row.net_index
                )));
            }
        }
        Ok(())
    }

    /// `(n, min |F(x)|)` over each level `n` of the window.
    pub fn escape_profile(&self, my: &dyn CompactModel) -> Vec<(usize, f64)> {
        let mut by_level: Vec<(usize, f64)> = Vec::new();
        for row in &self.audit {
            let v = my.interior().norm(&row.witness);
            match by_level.iter_mut().find(|(n, _)| *n == row.level) {
                Some(e) => e.1 = e.1.min(v),
                None => by_level.push((row.level, v)),
            }
        }
        by_level.sort_by_key(|e| e.0);
        by_level
    }

    /// CSV with columns `x, n, delta, net_index, F(x)`; coordinates are
    /// space separated inside a column.
    pub fn audit_csv(&self) -> String {
        let join_i = |p: &Point| {
            p.0.iter()
                .map(|c| c.to_string())
                .collect::<Vec<_>>()
                .join(" ")
        };
        let join_f = |v: &[f64]| {
            v.iter()
                .map(|c| format!("{c:.16e}"))
                .collect::<Vec<_>>()
                .join(" ")
        };
        let mut s = String::from("x,n,delta,net_index,fx\n");
        for r in &self.audit {
            s.push_str(&format!(
                "{},{},{},{},{}\n",
                join_i(&r.x),
                r.level,
                join_f(&r.delta.coords),
                r.net_index,
                join_i(&r.witness)
            ));
        }
        s
    }
}

/// Boundary maps by configuration key: `identity`, `antipodal`,
/// `rotation:<radians>`.
pub fn boundary_map_by_key(key: &str) -> Result<BoundaryMap> {
    match key {
        "identity" => Ok(BoundaryMap::identity()),
        "antipodal" => Ok(BoundaryMap::antipodal()),
        _ => key
            .strip_prefix("rotation:")
            .and_then(|a| a.parse::<f64>().ok())
            .filter(|a| a.is_finite())
            .map(BoundaryMap::rotation)
            .ok_or_else(|| Error::UnknownInstance(key.to_string())),
    }
}

/// Boundary limit of the ray `k -> round(k dir)` in the model.
pub fn ray_limit(model: &dyn CompactModel, dir: &[f64]) -> BoundaryPoint {
    let far = Point(dir.iter().map(|c| (c * 1e12).round() as i64).collect());
    BoundaryPoint::new(model.embed(&far))
}

/// Outcome of [`verify_lift`].
#[derive(Debug, Clone)]
pub struct LiftVerification {
    /// Per ray: at index `k`, `sup_{j >= k} d_cmp(F(x_j), φ(lim))` over
    /// the ray points inside the window.
    pub ray_profiles: Vec<DefectProfile>,
    pub coarse: CoarseMapReport,
}

/// Checks convergence `F(x_k) -> φ(lim x_k)` along rays `x_k = round(k dir)`,
/// reported at `k = 1, 2, 4, ...` up to the window, and runs the coarse map
/// check on `F` at radii 1, 2, 4.
pub fn verify_lift(
    lift: &LiftResult,
    phi: &BoundaryMap,
    mx: &dyn CompactModel,
    my: &dyn CompactModel,
    rays: &[Vec<f64>],
    tolerance: f64,
) -> Result<LiftVerification> {
    let w = lift.window;
    let mut ray_profiles = Vec::new();
    for dir in rays {
        let target = phi.apply(&ray_limit(mx, dir));
        let len = dir.iter().map(|c| c * c).sum::<f64>().sqrt();
        let kmax = (w / len).floor() as i64;
        let mut dist: Vec<f64> = (1..=kmax)
            .map(|k| {
                let x = Point(dir.iter().map(|c| (c * k as f64).round() as i64).collect());
                d_cmp(&my.embed(&lift.apply(&x)), &target.coords)
            })
            .collect();
        for i in (0..dist.len().saturating_sub(1)).rev() {
            dist[i] = dist[i].max(dist[i + 1]);
        }
        let label = format!("{}:ray:{:?}", lift.name, dir);
        let mut p = DefectProfile::new(label, tolerance);
        let mut k = 1;
        while k <= kmax {
            p.push(k as f64, dist[(k - 1) as usize]);
            k *= 2;
        }
        ray_profiles.push(p);
    }
    let coarse = coarse_map_check(
        &lift.point_map(),
        mx.interior(),
        my.interior(),
        &[1.0, 2.0, 4.0],
    )?;
    Ok(LiftVerification {
        ray_profiles,
        coarse,
    })
}

/// Compares lifts of the same boundary map built from nets with different
/// phases. Returns one closeness report per phase pair `(source, target)`
/// against the lift with phases `(0, 0)`, worst sublinearity ratio first.
pub fn closeness_search(
    phi: &BoundaryMap,
    mx: Arc<dyn CompactModel>,
    my: Arc<dyn CompactModel>,
    phases: &[(f64, f64)],
    window: f64,
) -> Result<Vec<((f64, f64), CloseReport)>> {
    let levels = level_of_norm(window);
    let base_table = Arc::new(boundary_witnesses(my.as_ref(), levels, 0.0)?);
    let base = lift_boundary_map(phi, mx.clone(), base_table, window, 0.0)?.point_map();
    let mut out = Vec::new();
    for &(ps, pt) in phases {
        let table = Arc::new(boundary_witnesses(my.as_ref(), levels, pt)?);
        let other = lift_boundary_map(phi, mx.clone(), table, window, ps)?.point_map();
        let rep = are_close(&base, &other, mx.interior(), my.interior(), window)?;
        out.push(((ps, pt), rep));
    }
    out.sort_by(|a, b| b.1.ratio().total_cmp(&a.1.ratio()));
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::compact::{ConeModel, RadialModel, TreeModel};
    use crate::profile::Verdict;

    fn radial2() -> Arc<dyn CompactModel> {
        Arc::new(RadialModel::new(2).unwrap())
    }

    #[test]
    fn level_zero_circle_witnesses() {
        let m = radial2();
        let t = boundary_witnesses(m.as_ref(), 0, 0.0).unwrap();
        let lv = &t.levels[0];
        assert!(lv.net.covering_radius <= 1.0);
        for (b, w) in lv.net.points.iter().zip(&lv.witnesses) {
            assert!(m.interior().norm(w) >= 1.0);
            assert!(d_cmp(&m.embed(w), &b.coords) < 1.0);
        }
    }

    #[test]
    fn cone_witnesses_escape_each_level() {
        let m = ConeModel::default();
        let t = boundary_witnesses(&m, 6, 0.0).unwrap();
        for (n, lv) in t.levels.iter().enumerate() {
            assert_eq!(lv.net.points.len(), 1);
            assert!(lv.witnesses[0].0[0] as f64 > (n as f64).exp2());
        }
    }

    #[test]
    fn tree_witnesses_lie_in_their_cylinders() {
        let m = TreeModel::new(8);
        let t = boundary_witnesses(&m, 2, 0.0).unwrap();
        let lv = &t.levels[2];
        for (b, w) in lv.net.points.iter().zip(&lv.witnesses) {
            assert!(w.0.len() > 4);
            assert!(b.chart.iter().zip(&w.0).all(|(a, c)| a == c));
        }
    }

    #[test]
    fn identity_lift_audit_and_rays() {
        let m = radial2();
        let table = Arc::new(boundary_witnesses(m.as_ref(), 6, 0.0).unwrap());
        let phi = BoundaryMap::identity();
        let lift = lift_boundary_map(&phi, m.clone(), table, 64.0, 0.0).unwrap();
        lift.check_audit(m.as_ref()).unwrap();
        let rays = vec![vec![1.0, 0.0], vec![1.0, 1.0], vec![-2.0, 1.0]];
        let v = verify_lift(&lift, &phi, m.as_ref(), m.as_ref(), &rays, 0.1).unwrap();
        for p in &v.ray_profiles {
            assert!(p.is_monotone_nonincreasing());
            assert!(p.final_defect().unwrap() < 0.1, "{:?}", p.values());
        }
        assert_eq!(v.coarse.verdict, Verdict::Pass);
        let esc = lift.escape_profile(m.as_ref());
        for (n, v) in &esc {
            assert!(*v > (*n as f64).exp2());
        }
    }

    #[test]
    fn constant_lift_escapes_toward_the_target() {
        let m = radial2();
        let target = BoundaryPoint::new(vec![0.0, 1.0]);
        let phi = BoundaryMap::constant(target.clone());
        let table = Arc::new(boundary_witnesses(m.as_ref(), 6, 0.0).unwrap());
        let lift = lift_boundary_map(&phi, m.clone(), table, 64.0, 0.0).unwrap();
        for row in &lift.audit {
            let eps = (-(row.level as f64)).exp2();
            assert!(d_cmp(&m.embed(&row.witness), &target.coords) < 2.0 * eps);
        }
    }

    #[test]
    fn audit_reproduces_the_map() {
        let m = radial2();
        let table = Arc::new(boundary_witnesses(m.as_ref(), 5, 0.2).unwrap());
        let lift = lift_boundary_map(
            &BoundaryMap::antipodal(),
            m.clone(),
            table.clone(),
            32.0,
            0.0,
        )
        .unwrap();
        let f = lift.point_map();
        for row in &lift.audit {
            assert_eq!(
                table.levels[row.level].witnesses[row.net_index],
                f.apply(&row.x)
            );
        }
        let csv = lift.audit_csv();
        assert_eq!(csv.lines().count(), lift.audit.len() + 1);
    }

    #[test]
    fn short_witness_table_is_rejected() {
        let m = radial2();
        let table = Arc::new(boundary_witnesses(m.as_ref(), 2, 0.0).unwrap());
        let err = lift_boundary_map(&BoundaryMap::identity(), m, table, 64.0, 0.0).unwrap_err();
        assert!(matches!(err, Error::InvalidArgument(_)));
    }

    #[test]
    fn declared_moduli_hold_on_nested_nets() {
        let m = radial2();
        BoundaryMap::rotation(0.7)
            .check_modulus(m.as_ref(), 5)
            .unwrap();
        BoundaryMap::antipodal()
            .check_modulus(m.as_ref(), 5)
            .unwrap();
        let squash = BoundaryMap::new("squash", 0.1, |b| {
            BoundaryPoint::new(vec![b.coords[0], b.coords[1].abs()])
        });
        assert!(squash.check_modulus(m.as_ref(), 3).is_err());
    }
}
