//! Proper discrete metric spaces with integer-coordinate points.
//!
//! Every space enumerates balls in lexicographic order of the point
//! coordinates so that scans over windows are reproducible.

use std::collections::{BTreeSet, VecDeque};
use std::fmt;

use crate::error::{Error, Result};

/// Default cap on the number of points a single ball enumeration may produce.
pub const DEFAULT_BALL_BUDGET: usize = 4_000_000;

/// A point with integer coordinates. Ordering is lexicographic.
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Default)]
pub struct Point(pub Vec<i64>);

impl Point {
    pub fn new(coords: impl Into<Vec<i64>>) -> Self {
        Point(coords.into())
    }

    pub fn origin(dim: usize) -> Self {
        Point(vec![0; dim])
    }

    pub fn coords(&self) -> &[i64] {
        &self.0
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn add(&self, other: &Point) -> Point {
        Point(self.0.iter().zip(&other.0).map(|(a, b)| a + b).collect())
    }

    pub fn sub(&self, other: &Point) -> Point {
        Point(self.0.iter().zip(&other.0).map(|(a, b)| a - b).collect())
    }

    pub fn neg(&self) -> Point {
        Point(self.0.iter().map(|a| -a).collect())
    }

    pub fn scale(&self, k: i64) -> Point {
        Point(self.0.iter().map(|a| a * k).collect())
    }

    pub fn to_f64(&self) -> Vec<f64> {
        self.0.iter().map(|&a| a as f64).collect()
    }
}

impl<const N: usize> From<[i64; N]> for Point {
    fn from(c: [i64; N]) -> Self {
        Point(c.to_vec())
    }
}

impl fmt::Debug for Point {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{self}")
    }
}

impl fmt::Display for Point {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("(")?;
        for (i, c) in self.0.iter().enumerate() {
            if i > 0 {
                f.write_str(",")?;
            }
            write!(f, "{c}")?;
        }
        f.write_str(")")
    }
}

/// A discrete metric space whose balls are finite.
pub trait ProperMetricSpace: Send + Sync + fmt::Debug {
    fn name(&self) -> String;

    fn basepoint(&self) -> Point;

    fn distance(&self, x: &Point, y: &Point) -> f64;

    /// All points at distance at most `radius` from `center`, sorted
    /// lexicographically.
    fn ball(&self, center: &Point, radius: f64) -> Result<Vec<Point>>;

    /// Distance to the basepoint.
    fn norm(&self, x: &Point) -> f64 {
        self.distance(&self.basepoint(), x)
    }

    /// The ball of radius `radius` around the basepoint.
    fn window(&self, radius: f64) -> Result<Vec<Point>> {
        self.ball(&self.basepoint(), radius)
    }
}

fn check_radius(radius: f64) -> Result<()> {
    if radius.is_nan() || radius < 0.0 {
        return Err(Error::InvalidArgument(format!(
            "ball radius must be nonnegative, got {radius}"
        )));
    }
    Ok(())
}

/// Metric on the integer lattice.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LatticeMetric {
    L1,
    Euclidean,
    Max,
}

/// The lattice `Z^dim`.
#[derive(Debug, Clone)]
pub struct Lattice {
    pub dim: usize,
    pub metric: LatticeMetric,
    pub budget: usize,
}

impl Lattice {
    pub fn new(dim: usize, metric: LatticeMetric) -> Self {
        Lattice {
            dim,
            metric,
            budget: DEFAULT_BALL_BUDGET,
        }
    }

    pub fn euclidean(dim: usize) -> Self {
        Self::new(dim, LatticeMetric::Euclidean)
    }

    pub fn with_budget(mut self, budget: usize) -> Self {
        self.budget = budget;
        self
    }
}

impl ProperMetricSpace for Lattice {
    fn name(&self) -> String {
        let m = match self.metric {
            LatticeMetric::L1 => "l1",
            LatticeMetric::Euclidean => "l2",
            LatticeMetric::Max => "linf",
        };
        format!("Z{}-{m}", self.dim)
    }

    fn basepoint(&self) -> Point {
        Point::origin(self.dim)
    }

    fn distance(&self, x: &Point, y: &Point) -> f64 {
        let diffs = x.0.iter().zip(&y.0).map(|(a, b)| (a - b).abs());
        match self.metric {
            LatticeMetric::L1 => diffs.sum::<i64>() as f64,
            LatticeMetric::Max => diffs.max().unwrap_or(0) as f64,
            LatticeMetric::Euclidean => (diffs.map(|d| (d * d) as f64).sum::<f64>()).sqrt(),
        }
    }

    fn ball(&self, center: &Point, radius: f64) -> Result<Vec<Point>> {
        check_radius(radius)?;
        let r = radius.floor() as i64;
        let side = (2 * r + 1) as f64;
        if side.powi(self.dim as i32) > self.budget as f64 {
            return Err(Error::Properness {
                center: center.clone(),
                radius,
                budget: self.budget,
            });
        }
        // Odometer over the bounding box; the last coordinate varies fastest,
        // which yields lexicographic order directly.
        let mut out = Vec::new();
        let mut offset = vec![-r; self.dim];
        loop {
            let p = Point(center.0.iter().zip(&offset).map(|(c, o)| c + o).collect());
            if self.distance(center, &p) <= radius {
                out.push(p);
            }
            let mut k = self.dim;
            loop {
                if k == 0 {
                    return Ok(out);
                }
                k -= 1;
                if offset[k] < r {
                    offset[k] += 1;
                    break;
                }
                offset[k] = -r;
            }
        }
    }
}

/// The half-line `N = {0, 1, 2, ...}`.
#[derive(Debug, Clone, Default)]
pub struct HalfLine;

impl ProperMetricSpace for HalfLine {
    fn name(&self) -> String {
        "N".into()
    }

    fn basepoint(&self) -> Point {
        Point::from([0])
    }

    fn distance(&self, x: &Point, y: &Point) -> f64 {
        (x.0[0] - y.0[0]).abs() as f64
    }

    fn ball(&self, center: &Point, radius: f64) -> Result<Vec<Point>> {
        check_radius(radius)?;
        let r = radius.floor() as i64;
        let c = center.0[0];
        Ok(((c - r).max(0)..=c + r).map(|m| Point::from([m])).collect())
    }
}

/// `Z x {0, .., fiber-1}` with metric `|n - m| + [s != t]`.
#[derive(Debug, Clone)]
pub struct FiberedLine {
    pub fiber: i64,
}

impl ProperMetricSpace for FiberedLine {
    fn name(&self) -> String {
        format!("Zx{}", self.fiber)
    }

    fn basepoint(&self) -> Point {
        Point::from([0, 0])
    }

    fn distance(&self, x: &Point, y: &Point) -> f64 {
        ((x.0[0] - y.0[0]).abs() + i64::from(x.0[1] != y.0[1])) as f64
    }

    fn ball(&self, center: &Point, radius: f64) -> Result<Vec<Point>> {
        check_radius(radius)?;
        let r = radius.floor() as i64;
        let mut out = Vec::new();
        for n in center.0[0] - r..=center.0[0] + r {
            for s in 0..self.fiber {
                let p = Point::from([n, s]);
                if self.distance(center, &p) <= radius {
                    out.push(p);
                }
            }
        }
        Ok(out)
    }
}

/// Breadth-first ball enumeration for graphs given by a neighbour function.
fn graph_ball(
    center: &Point,
    radius: f64,
    budget: usize,
    neighbours: impl Fn(&Point) -> Vec<Point>,
) -> Result<Vec<Point>> {
    check_radius(radius)?;
    let r = radius.floor() as usize;
    let mut seen = BTreeSet::new();
    seen.insert(center.clone());
    let mut queue = VecDeque::from([(center.clone(), 0usize)]);
    while let Some((p, d)) = queue.pop_front() {
        if d == r {
            continue;
        }
        for q in neighbours(&p) {
            if seen.insert(q.clone()) {
                if seen.len() > budget {
                    return Err(Error::Properness {
                        center: center.clone(),
                        radius,
                        budget,
                    });
                }
                queue.push_back((q, d + 1));
            }
        }
    }
    Ok(seen.into_iter().collect())
}

fn common_prefix(a: &[i64], b: &[i64]) -> usize {
    a.iter().zip(b).take_while(|(x, y)| x == y).count()
}

/// The free group on `rank` generators with the word metric.
///
/// Points are reduced words; letter `k` stands for the `k`-th generator and
/// `-k` for its inverse.
#[derive(Debug, Clone)]
pub struct FreeGroup {
    pub rank: i64,
    pub budget: usize,
}

impl FreeGroup {
    pub fn new(rank: i64) -> Self {
        FreeGroup {
            rank,
            budget: DEFAULT_BALL_BUDGET,
        }
    }

    /// Reduced product `g * s` for a single letter `s`.
    pub fn mul_letter(g: &Point, s: i64) -> Point {
        let mut w = g.0.clone();
        if w.last() == Some(&-s) {
            w.pop();
        } else {
            w.push(s);
        }
        Point(w)
    }

    /// Reduced product of two words.
    pub fn mul(g: &Point, h: &Point) -> Point {
        h.0.iter()
            .fold(g.clone(), |acc, &s| Self::mul_letter(&acc, s))
    }

    pub fn inverse(g: &Point) -> Point {
        Point(g.0.iter().rev().map(|s| -s).collect())
    }
}

impl ProperMetricSpace for FreeGroup {
    fn name(&self) -> String {
        format!("F{}", self.rank)
    }

    fn basepoint(&self) -> Point {
        Point(Vec::new())
    }

    fn distance(&self, x: &Point, y: &Point) -> f64 {
        let p = common_prefix(&x.0, &y.0);
        (x.0.len() + y.0.len() - 2 * p) as f64
    }

    fn ball(&self, center: &Point, radius: f64) -> Result<Vec<Point>> {
        let rank = self.rank;
        graph_ball(center, radius, self.budget, |g| {
            (1..=rank)
                .flat_map(|k| [k, -k])
                .map(|s| Self::mul_letter(g, s))
                .collect()
        })
    }
}

/// The rooted binary tree; vertices are finite 0/1 words, the root is empty.
#[derive(Debug, Clone)]
pub struct BinaryTree {
    pub budget: usize,
}

impl Default for BinaryTree {
    fn default() -> Self {
        BinaryTree {
            budget: DEFAULT_BALL_BUDGET,
        }
    }
}

impl ProperMetricSpace for BinaryTree {
    fn name(&self) -> String {
        "binary-tree".into()
    }

    fn basepoint(&self) -> Point {
        Point(Vec::new())
    }

    fn distance(&self, x: &Point, y: &Point) -> f64 {
        let p = common_prefix(&x.0, &y.0);
        (x.0.len() + y.0.len() - 2 * p) as f64
    }

    fn ball(&self, center: &Point, radius: f64) -> Result<Vec<Point>> {
        graph_ball(center, radius, self.budget, |v| {
            let mut out = Vec::with_capacity(3);
            if !v.0.is_empty() {
                out.push(Point(v.0[..v.0.len() - 1].to_vec()));
            }
            for bit in [0, 1] {
                let mut w = v.0.clone();
                w.push(bit);
                out.push(Point(w));
            }
            out
        })
    }
}
