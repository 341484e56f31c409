//! Controlled sets, coarse maps, closeness and slow oscillation on proper
//! discrete metric spaces, evaluated over explicit finite windows.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fmt;
use std::sync::Arc;

use num_complex::Complex64;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::profile::{DefectProfile, Verdict};
use crate::space::{Point, ProperMetricSpace};

/// A bounded function on the points of a space.
#[derive(Clone)]
pub struct SampledFunction {
    pub name: String,
    pub sup_bound: f64,
    f: Arc<dyn Fn(&Point) -> Complex64 + Send + Sync>,
}

impl SampledFunction {
    pub fn new(
        name: impl Into<String>,
        sup_bound: f64,
        f: impl Fn(&Point) -> Complex64 + Send + Sync + 'static,
    ) -> Self {
        SampledFunction {
            name: name.into(),
            sup_bound,
            f: Arc::new(f),
        }
    }

    pub fn real(
        name: impl Into<String>,
        sup_bound: f64,
        f: impl Fn(&Point) -> f64 + Send + Sync + 'static,
    ) -> Self {
        Self::new(name, sup_bound, move |x| Complex64::new(f(x), 0.0))
    }

    pub fn constant(c: f64) -> Self {
        Self::real(format!("const:{c}"), c.abs(), move |_| c)
    }

    pub fn eval(&self, x: &Point) -> Complex64 {
        (self.f)(x)
    }

    /// Pointwise product; the sup bound multiplies.
    pub fn product(&self, other: &SampledFunction) -> SampledFunction {
        let (a, b) = (self.clone(), other.clone());
        SampledFunction::new(
            format!("{}*{}", self.name, other.name),
            self.sup_bound * other.sup_bound,
            move |x| a.eval(x) * b.eval(x),
        )
    }

    /// Checks `|f(x)| <= sup_bound` on the given points.
    pub fn check_bound(&self, points: &[Point]) -> Result<()> {
        for x in points {
            let v = self.eval(x).norm();
            if v > self.sup_bound * (1.0 + 1e-12) {
                return Err(Error::Contract(format!(
                    "|{}({x})| = {v} exceeds the declared bound {}",
                    self.name, self.sup_bound
                )));
            }
        }
        Ok(())
    }
}

impl fmt::Debug for SampledFunction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("SampledFunction")
            .field("name", &self.name)
            .field("sup_bound", &self.sup_bound)
            .finish()
    }
}

/// A map between point sets, evaluated on the ball of radius `window`.
#[derive(Clone)]
pub struct PointMap {
    pub name: String,
    pub window: f64,
    f: Arc<dyn Fn(&Point) -> Point + Send + Sync>,
}

impl PointMap {
    pub fn new(
        name: impl Into<String>,
        window: f64,
        f: impl Fn(&Point) -> Point + Send + Sync + 'static,
    ) -> Self {
        PointMap {
            name: name.into(),
            window,
            f: Arc::new(f),
        }
    }

    pub fn identity(window: f64) -> Self {
        Self::new("identity", window, |x| x.clone())
    }

    pub fn apply(&self, x: &Point) -> Point {
        (self.f)(x)
    }

    pub fn with_window(mut self, window: f64) -> Self {
        self.window = window;
        self
    }

    /// `other` after `self`.
    pub fn then(&self, other: &PointMap) -> PointMap {
        let (a, b) = (self.clone(), other.clone());
        PointMap::new(
            format!("{}.{}", other.name, self.name),
            self.window,
            move |x| b.apply(&a.apply(x)),
        )
    }
}

impl fmt::Debug for PointMap {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("PointMap")
            .field("name", &self.name)
            .field("window", &self.window)
            .finish()
    }
}

/// An action of a finitely generated group, given by generators and a word
/// window of group elements.
pub trait GroupAction: Send + Sync + fmt::Debug {
    fn generators(&self) -> Vec<Point>;

    /// Group elements of word length at most `radius`.
    fn elements(&self, radius: usize) -> Vec<Point>;

    fn act(&self, g: &Point, x: &Point) -> Point;

    /// The elements `g` of word length at most `radius` with `g a = x`.
    fn solve(&self, a: &Point, x: &Point, radius: usize) -> Vec<Point> {
        self.elements(radius)
            .into_iter()
            .filter(|g| &self.act(g, a) == x)
            .collect()
    }
}

/// `Z^k` acting on the first `k` coordinates of points by translation.
#[derive(Debug, Clone)]
pub struct Translation {
    pub acting_dim: usize,
}

impl GroupAction for Translation {
    fn generators(&self) -> Vec<Point> {
        (0..self.acting_dim)
            .map(|i| {
                let mut e = vec![0; self.acting_dim];
                e[i] = 1;
                Point(e)
            })
            .collect()
    }

    fn elements(&self, radius: usize) -> Vec<Point> {
        let r = radius as i64;
        let mut out = Vec::new();
        let mut g = vec![-r; self.acting_dim];
        loop {
            if g.iter().map(|c| c.abs()).sum::<i64>() <= r {
                out.push(Point(g.clone()));
            }
            let mut k = self.acting_dim;
            loop {
                if k == 0 {
                    return out;
                }
                k -= 1;
                if g[k] < r {
                    g[k] += 1;
                    break;
                }
                g[k] = -r;
            }
        }
    }

    fn act(&self, g: &Point, x: &Point) -> Point {
        let mut y = x.clone();
        for (c, d) in y.0.iter_mut().zip(&g.0) {
            *c += d;
        }
        y
    }

    fn solve(&self, a: &Point, x: &Point, radius: usize) -> Vec<Point> {
        let k = self.acting_dim;
        if a.0[k..] != x.0[k..] {
            return Vec::new();
        }
        let g: Vec<i64> = (0..k).map(|i| x.0[i] - a.0[i]).collect();
        if g.iter().map(|c| c.abs()).sum::<i64>() as usize <= radius {
            vec![Point(g)]
        } else {
            Vec::new()
        }
    }
}

/// An action given by an explicit element list and an action closure.
#[derive(Clone)]
pub struct FnAction {
    pub name: String,
    pub generators: Vec<Point>,
    pub elements: Vec<Point>,
    act: Arc<dyn Fn(&Point, &Point) -> Point + Send + Sync>,
}

impl FnAction {
    pub fn new(
        name: impl Into<String>,
        generators: Vec<Point>,
        elements: Vec<Point>,
        act: impl Fn(&Point, &Point) -> Point + Send + Sync + 'static,
    ) -> Self {
        FnAction {
            name: name.into(),
            generators,
            elements,
            act: Arc::new(act),
        }
    }
}

impl fmt::Debug for FnAction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "FnAction({})", self.name)
    }
}

impl GroupAction for FnAction {
    fn generators(&self) -> Vec<Point> {
        self.generators.clone()
    }

    fn elements(&self, _radius: usize) -> Vec<Point> {
        self.elements.clone()
    }

    fn act(&self, g: &Point, x: &Point) -> Point {
        (self.act)(g, x)
    }
}

/// `E_K = {(g x, g y) : g in the word window, x, y in K}`.
#[derive(Clone, Debug)]
pub struct OrbitEntourage {
    pub action: Arc<dyn GroupAction>,
    pub k: Vec<Point>,
    pub word_radius: usize,
}

/// A relation given by a membership predicate; partners of `x` lie within
/// metric distance `reach(x)` of `x`.
#[derive(Clone)]
pub struct Relation {
    pub name: String,
    reach: Arc<dyn Fn(&Point) -> f64 + Send + Sync>,
    contains: Arc<dyn Fn(&Point, &Point) -> bool + Send + Sync>,
}

impl Relation {
    pub fn new(
        name: impl Into<String>,
        reach: impl Fn(&Point) -> f64 + Send + Sync + 'static,
        contains: impl Fn(&Point, &Point) -> bool + Send + Sync + 'static,
    ) -> Self {
        Relation {
            name: name.into(),
            reach: Arc::new(reach),
            contains: Arc::new(contains),
        }
    }

    pub fn contains(&self, x: &Point, y: &Point) -> bool {
        (self.contains)(x, y)
    }

    pub fn reach(&self, x: &Point) -> f64 {
        (self.reach)(x)
    }
}

impl fmt::Debug for Relation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Relation({})", self.name)
    }
}

/// A subset of `X x X`, represented lazily.
#[derive(Clone, Debug)]
pub enum Entourage {
    MetricBound(f64),
    ExplicitPairs(Vec<(Point, Point)>),
    OrbitBound(OrbitEntourage),
    GraphOfMap(PointMap),
    Relation(Relation),
}

impl Entourage {
    pub fn diagonal() -> Self {
        Entourage::MetricBound(0.0)
    }

    pub fn contains(&self, space: &dyn ProperMetricSpace, x: &Point, y: &Point) -> bool {
        match self {
            Entourage::MetricBound(r) => space.distance(x, y) <= *r,
            Entourage::ExplicitPairs(pairs) => pairs.iter().any(|(a, b)| a == x && b == y),
            Entourage::OrbitBound(o) => o.action.elements(o.word_radius).iter().any(|g| {
                o.k.iter().any(|a| &o.action.act(g, a) == x)
                    && o.k.iter().any(|b| &o.action.act(g, b) == y)
            }),
            Entourage::GraphOfMap(f) => &f.apply(x) == y,
            Entourage::Relation(r) => r.contains(x, y),
        }
    }

    /// All `y` with `(x, y)` in the entourage, sorted.
    pub fn partners(&self, space: &dyn ProperMetricSpace, x: &Point) -> Result<Vec<Point>> {
        let mut out = match self {
            Entourage::MetricBound(r) => space.ball(x, *r)?,
            Entourage::ExplicitPairs(p) => p
                .iter()
                .filter(|(a, _)| a == x)
                .map(|(_, b)| b.clone())
                .collect(),
            Entourage::OrbitBound(o) => {
                let mut out = Vec::new();
                for a in &o.k {
                    for g in o.action.solve(a, x, o.word_radius) {
                        out.extend(o.k.iter().map(|b| o.action.act(&g, b)));
                    }
                }
                out
            }
            Entourage::GraphOfMap(f) => vec![f.apply(x)],
            Entourage::Relation(rel) => space
                .ball(x, rel.reach(x))?
                .into_iter()
                .filter(|y| rel.contains(x, y))
                .collect(),
        };
        out.sort();
        out.dedup();
        Ok(out)
    }

    /// Pairs `(x, y)` of the entourage with `|x| <= window`, sorted
    /// lexicographically.
    pub fn pairs(&self, space: &dyn ProperMetricSpace, window: f64) -> Result<Vec<(Point, Point)>> {
        let mut out: Vec<(Point, Point)> = match self {
            Entourage::ExplicitPairs(p) => p
                .iter()
                .filter(|(x, _)| space.norm(x) <= window)
                .cloned()
                .collect(),
            Entourage::OrbitBound(o) => {
                let mut set = BTreeSet::new();
                for g in o.action.elements(o.word_radius) {
                    let moved: Vec<Point> = o.k.iter().map(|a| o.action.act(&g, a)).collect();
                    for x in &moved {
                        if space.norm(x) > window {
                            continue;
                        }
                        for y in &moved {
                            set.insert((x.clone(), y.clone()));
                        }
                    }
                }
                set.into_iter().collect()
            }
            _ => {
                let window = match self {
                    Entourage::GraphOfMap(f) => window.min(f.window),
                    _ => window,
                };
                let pts = space.window(window)?;
                let nested: Result<Vec<Vec<(Point, Point)>>> = pts
                    .par_iter()
                    .map(|x| {
                        Ok(self
                            .partners(space, x)?
                            .into_iter()
                            .map(|y| (x.clone(), y))
                            .collect())
                    })
                    .collect();
                nested?.into_iter().flatten().collect()
            }
        };
        out.sort();
        out.dedup();
        Ok(out)
    }

    /// Maximum of `value(x, y)` over the partners of each window point,
    /// returned as `(x, max)` in window order. Points without partners
    /// are omitted. Streams instead of materializing the pair list.
    pub fn scan_max<F>(
        &self,
        space: &dyn ProperMetricSpace,
        window: f64,
        value: F,
    ) -> Result<Vec<(Point, f64)>>
    where
        F: Fn(&Point, &Point) -> f64 + Sync,
    {
        let window = match self {
            Entourage::GraphOfMap(f) => window.min(f.window),
            _ => window,
        };
        let pts = space.window(window)?;
        let rows: Result<Vec<Option<(Point, f64)>>> = pts
            .into_par_iter()
            .map(|x| {
                let ys = self.partners(space, &x)?;
                if ys.is_empty() {
                    return Ok(None);
                }
                let m = ys.iter().map(|y| value(&x, y)).fold(0.0, f64::max);
                Ok(Some((x, m)))
            })
            .collect();
        Ok(rows?.into_iter().flatten().collect())
    }

    /// The inverse entourage, materialized on the window.
    pub fn inverse(&self, space: &dyn ProperMetricSpace, window: f64) -> Result<Entourage> {
        let mut p: Vec<(Point, Point)> = self
            .pairs(space, window)?
            .into_iter()
            .map(|(x, y)| (y, x))
            .collect();
        p.sort();
        Ok(Entourage::ExplicitPairs(p))
    }

    /// `self o other = {(x, z) : (x, y) in self, (y, z) in other}`,
    /// materialized for `|x| <= window`.
    pub fn compose(
        &self,
        other: &Entourage,
        space: &dyn ProperMetricSpace,
        window: f64,
    ) -> Result<Entourage> {
        let first = self.pairs(space, window)?;
        let reach = first
            .iter()
            .map(|(x, y)| space.distance(x, y))
            .fold(0.0, f64::max);
        let mut next: BTreeMap<Point, Vec<Point>> = BTreeMap::new();
        for (y, z) in other.pairs(space, window + reach)? {
            next.entry(y).or_default().push(z);
        }
        let mut set = BTreeSet::new();
        for (x, y) in first {
            if let Some(zs) = next.get(&y) {
                for z in zs {
                    set.insert((x.clone(), z.clone()));
                }
            }
        }
        Ok(Entourage::ExplicitPairs(set.into_iter().collect()))
    }
}

/// Outcome of [`is_controlled`].
#[derive(Debug, Clone, PartialEq)]
pub struct ControlledReport {
    pub controlled: bool,
    /// Supremum of the metric over the scanned pairs.
    pub sup: f64,
    /// First violating pair in lexicographic order.
    pub witness: Option<(Point, Point)>,
}

/// Is the metric bounded by `r_out` on the entourage (within the window)?
pub fn is_controlled(
    e: &Entourage,
    space: &dyn ProperMetricSpace,
    r_out: f64,
    window: f64,
) -> Result<ControlledReport> {
    let rows = e.scan_max(space, window, |x, y| space.distance(x, y))?;
    let sup = rows.iter().map(|(_, m)| *m).fold(0.0, f64::max);
    let mut witness = None;
    if let Some((x, _)) = rows.iter().find(|(_, m)| *m > r_out) {
        let y = e
            .partners(space, x)?
            .into_iter()
            .find(|y| space.distance(x, y) > r_out)
            .expect("partner realizing the maximum");
        witness = Some((x.clone(), y));
    }
    Ok(ControlledReport {
        controlled: witness.is_none(),
        sup,
        witness,
    })
}

/// Builds the orbit entourage `E_K`, after checking on samples that the
/// action is isometric.
pub fn orbit_entourage(
    action: Arc<dyn GroupAction>,
    k: Vec<Point>,
    space: &dyn ProperMetricSpace,
    word_radius: usize,
) -> Result<Entourage> {
    if k.is_empty() {
        return Err(Error::InvalidArgument(
            "orbit entourage needs a nonempty K".into(),
        ));
    }
    let mut samples = k.clone();
    samples.extend(space.window(2.0)?);
    samples.sort();
    samples.dedup();
    for g in action.generators() {
        for x in &samples {
            for y in &samples {
                let before = space.distance(x, y);
                let after = space.distance(&action.act(&g, x), &action.act(&g, y));
                if (before - after).abs() > 1e-9 * (1.0 + before) {
                    return Err(Error::Contract(format!(
                        "action of generator {g} is not isometric: d({x},{y}) = {before} but the translates are {after} apart"
                    )));
                }
            }
        }
    }
    Ok(Entourage::OrbitBound(OrbitEntourage {
        action,
        k,
        word_radius,
    }))
}

#[derive(Debug, Clone, PartialEq)]
pub struct PreimageRow {
    pub target_radius: f64,
    pub preimage_radius_half: f64,
    pub preimage_radius_full: f64,
}

/// Outcome of [`coarse_map_check`].
#[derive(Debug, Clone, PartialEq)]
pub struct CoarseMapReport {
    pub window: f64,
    /// `(R, S(R))` on the full window.
    pub expansion: Vec<(f64, f64)>,
    /// `(R, S(R))` restricted to the half window; growth between the two
    /// columns shows how far the window is from witnessing a bound.
    pub expansion_half: Vec<(f64, f64)>,
    pub preimages: Vec<PreimageRow>,
    pub proper: Verdict,
    pub verdict: Verdict,
}

/// Expansion profile and properness report for `f: X -> Y` on `f.window`.
pub fn coarse_map_check(
    f: &PointMap,
    x_space: &dyn ProperMetricSpace,
    y_space: &dyn ProperMetricSpace,
    radii: &[f64],
) -> Result<CoarseMapReport> {
    let w = f.window;
    let pts = x_space.window(w)?;
    let image: HashMap<Point, Point> = pts.par_iter().map(|x| (x.clone(), f.apply(x))).collect();
    let norms: HashMap<&Point, f64> = pts.iter().map(|x| (x, x_space.norm(x))).collect();

    // One pass over the largest ball; each pair updates every radius that
    // admits it.
    let max_r = radii.iter().copied().fold(0.0, f64::max);
    let zero = || (vec![0.0f64; radii.len()], vec![0.0f64; radii.len()]);
    let (full, half) = pts
        .par_iter()
        .map(|x| -> Result<(Vec<f64>, Vec<f64>)> {
            let fx = &image[x];
            let x_half = norms[x] <= w / 2.0;
            let (mut full, mut half) = zero();
            for y in x_space.ball(x, max_r)? {
                let Some(fy) = image.get(&y) else { continue };
                let dx = x_space.distance(x, &y);
                let d = y_space.distance(fx, fy);
                let both_half = x_half && x_space.norm(&y) <= w / 2.0;
                for (k, &r) in radii.iter().enumerate() {
                    if dx <= r {
                        full[k] = full[k].max(d);
                        if both_half {
                            half[k] = half[k].max(d);
                        }
                    }
                }
            }
            Ok((full, half))
        })
        .try_reduce(zero, |a, b| {
            let m = |u: Vec<f64>, v: Vec<f64>| u.iter().zip(&v).map(|(p, q)| p.max(*q)).collect();
            Ok((m(a.0, b.0), m(a.1, b.1)))
        })?;
    let expansion: Vec<(f64, f64)> = radii.iter().copied().zip(full).collect();
    let expansion_half: Vec<(f64, f64)> = radii.iter().copied().zip(half).collect();

    let target = image[&x_space.basepoint()].clone();
    let edge_full = pts.iter().map(|x| norms[x]).fold(0.0, f64::max);
    let edge_half = pts
        .iter()
        .map(|x| norms[x])
        .filter(|&n| n <= w / 2.0)
        .fold(0.0, f64::max);
    let mut preimages = Vec::new();
    let mut fills_both = false;
    let mut fills_full = false;
    for &rho in radii {
        let mut full: f64 = 0.0;
        let mut half: f64 = 0.0;
        for x in &pts {
            if y_space.distance(&image[x], &target) <= rho {
                full = full.max(norms[x]);
                if norms[x] <= w / 2.0 {
                    half = half.max(norms[x]);
                }
            }
        }
        let reaches_full = full >= 0.9 * edge_full;
        let reaches_half = half >= 0.9 * edge_half;
        fills_both |= reaches_full && reaches_half;
        fills_full |= reaches_full;
        preimages.push(PreimageRow {
            target_radius: rho,
            preimage_radius_half: half,
            preimage_radius_full: full,
        });
    }
    let max_r = radii.iter().copied().fold(0.0, f64::max);
    let too_small = w < 4.0 * max_r;
    let proper = if fills_both {
        Verdict::Fail
    } else if fills_full || too_small {
        Verdict::Inconclusive
    } else {
        Verdict::Pass
    };
    let finite = expansion.iter().all(|(_, s)| s.is_finite());
    let verdict = match proper {
        Verdict::Pass if finite => Verdict::Pass,
        Verdict::Fail => Verdict::Fail,
        _ if !finite => Verdict::Fail,
        _ => Verdict::Inconclusive,
    };
    Ok(CoarseMapReport {
        window: w,
        expansion,
        expansion_half,
        preimages,
        proper,
        verdict,
    })
}

/// Outcome of [`are_close`].
#[derive(Debug, Clone, PartialEq)]
pub struct CloseReport {
    pub window: f64,
    /// `sup d(F1 x, F2 x)` over the window.
    pub sup: f64,
    /// The same supremum over the half window.
    pub sup_half: f64,
    /// A bound that does not grow from the half to the full window passes;
    /// at least 1.5x growth fails; anything in between is inconclusive.
    pub verdict: Verdict,
}

impl CloseReport {
    /// `sup / window`, the sublinearity ratio.
    pub fn ratio(&self) -> f64 {
        self.sup / self.window
    }
}

pub fn are_close(
    f1: &PointMap,
    f2: &PointMap,
    x_space: &dyn ProperMetricSpace,
    y_space: &dyn ProperMetricSpace,
    window: f64,
) -> Result<CloseReport> {
    let pts = x_space.window(window)?;
    let (sup, sup_half) = pts
        .par_iter()
        .map(|x| {
            let d = y_space.distance(&f1.apply(x), &f2.apply(x));
            let h = if x_space.norm(x) <= window / 2.0 {
                d
            } else {
                0.0
            };
            (d, h)
        })
        .reduce(|| (0.0, 0.0), |a, b| (a.0.max(b.0), a.1.max(b.1)));
    let verdict = if sup <= sup_half * (1.0 + 1e-12) {
        Verdict::Pass
    } else if sup >= 1.5 * sup_half {
        Verdict::Fail
    } else {
        Verdict::Inconclusive
    };
    Ok(CloseReport {
        window,
        sup,
        sup_half,
        verdict,
    })
}

/// `sup{|f(y) - f(x)| : d(x, y) <= r, |x|, |y| >= escape}` per escape radius,
/// over the ball of radius `window` (default `2 max(escape) + r`).
pub fn slow_oscillation_profile(
    f: &SampledFunction,
    space: &dyn ProperMetricSpace,
    r: f64,
    escape_radii: &[f64],
    window: Option<f64>,
    tolerance: f64,
) -> Result<DefectProfile> {
    let r_max = escape_radii.iter().copied().fold(0.0, f64::max);
    let w = window.unwrap_or(2.0 * r_max + r);
    let pts = space.window(w)?;
    let values: HashMap<&Point, (Complex64, f64)> = pts
        .iter()
        .map(|x| (x, (f.eval(x), space.norm(x))))
        .collect();
    // (min norm of the pair, oscillation) for every pair in the window.
    let pairs: Result<Vec<Vec<(f64, f64)>>> = pts
        .par_iter()
        .map(|x| {
            let (fx, nx) = values[x];
            Ok(space
                .ball(x, r)?
                .iter()
                .filter_map(|y| {
                    values
                        .get(y)
                        .map(|&(fy, ny)| (nx.min(ny), (fy - fx).norm()))
                })
                .collect())
        })
        .collect();
    let pairs: Vec<(f64, f64)> = pairs?.into_iter().flatten().collect();
    let mut profile = DefectProfile::new(format!("slow-oscillation:{}:R={r}", f.name), tolerance);
    for &esc in escape_radii {
        let mut any = false;
        let mut sup: f64 = 0.0;
        for &(m, v) in &pairs {
            if m >= esc {
                any = true;
                sup = sup.max(v);
            }
        }
        if any {
            profile.push(esc, sup);
        } else {
            profile.push_skipped(esc);
        }
    }
    Ok(profile)
}
