//! Finitely supported probability kernels as commutative completely positive
//! maps: partitions of unity subordinate to an entourage, kernels induced by
//! coarse maps, and multiplicativity and closeness defects.

use std::collections::BTreeMap;
use std::sync::Arc;

use rayon::prelude::*;

use crate::coarse::{Entourage, PointMap, SampledFunction};
use crate::compact::{d_cmp, level_of_norm, CompactModel};
use crate::error::{Error, Result};
use crate::profile::DefectProfile;
use crate::space::{Point, ProperMetricSpace};

/// Default cap on the number of atoms of a kernel measure.
pub const MAX_SUPPORT: usize = 8;

/// `x -> μ_x`, a finitely supported probability measure per window point.
#[derive(Debug, Clone, PartialEq)]
pub struct StochasticKernel {
    pub window: f64,
    pub rows: BTreeMap<Point, Vec<(Point, f64)>>,
}

fn merge_atoms(mut atoms: Vec<(Point, f64)>) -> Vec<(Point, f64)> {
    atoms.sort_by(|a, b| a.0.cmp(&b.0));
    let mut out: Vec<(Point, f64)> = Vec::with_capacity(atoms.len());
    for (y, w) in atoms {
        match out.last_mut() {
            Some(last) if last.0 == y => last.1 += w,
            _ => out.push((y, w)),
        }
    }
    out
}

impl StochasticKernel {
    /// Kernel from explicit measures; atoms at the same point are merged.
    pub fn from_measures(
        space: &dyn ProperMetricSpace,
        window: f64,
        measure: impl Fn(&Point) -> Vec<(Point, f64)> + Sync,
    ) -> Result<Self> {
        let rows = space
            .window(window)?
            .into_par_iter()
            .map(|x| {
                let m = merge_atoms(measure(&x));
                (x, m)
            })
            .collect();
        let k = StochasticKernel { window, rows };
        k.validate(usize::MAX)?;
        Ok(k)
    }

    /// Point-mass kernel `μ_x = δ_{F(x)}`.
    pub fn from_map(space: &dyn ProperMetricSpace, f: &PointMap) -> Result<Self> {
        Self::from_measures(space, f.window, |x| vec![(f.apply(x), 1.0)])
    }

    /// Weights nonnegative, summing to one within `1e-12`, at most `cap` atoms.
    pub fn validate(&self, cap: usize) -> Result<()> {
        for (x, m) in &self.rows {
            if m.iter().any(|(_, w)| !(*w >= 0.0)) {
                return Err(Error::Contract(format!(
                    "negative weight in the measure at {x}"
                )));
            }
            let total: f64 = m.iter().map(|(_, w)| w).sum();
            if (total - 1.0).abs() > 1e-12 {
                return Err(Error::Contract(format!(
                    "measure at {x} has total mass {total}"
                )));
            }
            if m.len() > cap {
                return Err(Error::SupportTooLarge {
                    point: x.clone(),
                    size: m.len(),
                    cap,
                });
            }
        }
        Ok(())
    }

    pub fn measure(&self, x: &Point) -> Option<&[(Point, f64)]> {
        self.rows.get(x).map(Vec::as_slice)
    }

    /// `(K h)(x) = Σ w h(y)`; zero outside the window.
    pub fn apply(&self, h: &SampledFunction) -> SampledFunction {
        let rows = Arc::new(self.rows.clone());
        let h2 = h.clone();
        SampledFunction::new(format!("K({})", h.name), h.sup_bound, move |x| {
            match rows.get(x) {
                Some(m) => m.iter().map(|(y, w)| h2.eval(y) * *w).sum(),
                None => 0.0.into(),
            }
        })
    }

    /// Pushforward composition: `(K1 then K2)_x = Σ_y μ1_x(y) μ2_y`.
    /// Atoms of `μ1` outside the window of `K2` are an error.
    pub fn then(&self, other: &StochasticKernel) -> Result<StochasticKernel> {
        let mut rows = BTreeMap::new();
        for (x, m) in &self.rows {
            let mut atoms = Vec::new();
            for (y, w) in m {
                let m2 = other.rows.get(y).ok_or_else(|| {
                    Error::InvalidArgument(format!("{y} lies outside the second kernel's window"))
                })?;
                atoms.extend(m2.iter().map(|(z, v)| (z.clone(), w * v)));
            }
            rows.insert(x.clone(), merge_atoms(atoms));
        }
        Ok(StochasticKernel {
            window: self.window,
            rows,
        })
    }

    /// CSV rows `x, y, weight` with space-separated coordinates.
    pub fn to_csv(&self) -> String {
        let join = |p: &Point| {
            p.0.iter()
                .map(|c| c.to_string())
                .collect::<Vec<_>>()
                .join(" ")
        };
        let mut s = String::from("x,y,weight\n");
        for (x, m) in &self.rows {
            for (y, w) in m {
                s.push_str(&format!("{},{},{:.16e}\n", join(x), join(y), w));
            }
        }
        s
    }
}

/// A tent cell: `φ(x) = Π_d max(0, 1 - |x_d - b_d| / s)`.
#[derive(Debug, Clone, PartialEq)]
pub struct Cell {
    pub base: Point,
    pub spacing: i64,
}

impl Cell {
    fn tent(&self, x: &Point) -> f64 {
        let s = self.spacing as f64;
        x.0.iter()
            .zip(&self.base.0)
            .map(|(a, b)| (1.0 - (a - b).abs() as f64 / s).max(0.0))
            .product()
    }

    /// Lattice points where the tent is positive.
    pub fn support(&self) -> Vec<Point> {
        let r = self.spacing - 1;
        let mut out = Vec::new();
        let mut off = vec![-r; self.base.dim()];
        loop {
            out.push(Point(
                self.base.0.iter().zip(&off).map(|(b, o)| b + o).collect(),
            ));
            let mut k = off.len();
            loop {
                if k == 0 {
                    return out;
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
}

/// Normalized tents `ψ_i = φ_i / Σ_j φ_j` on a window of a lattice-like
/// space.
#[derive(Debug, Clone)]
pub struct PartitionOfUnity {
    pub window: f64,
    pub cells: Vec<Cell>,
    /// `x -> [(cell index, ψ_i(x))]`, cells in increasing index order.
    pub weights: BTreeMap<Point, Vec<(usize, f64)>>,
}

impl PartitionOfUnity {
    fn build(space: &dyn ProperMetricSpace, window: f64, cells: Vec<Cell>) -> Result<Self> {
        let pts = space.window(window)?;
        let mut raw: BTreeMap<Point, Vec<(usize, f64)>> =
            pts.iter().map(|x| (x.clone(), Vec::new())).collect();
        for (i, c) in cells.iter().enumerate() {
            for x in c.support() {
                if let Some(v) = raw.get_mut(&x) {
                    v.push((i, c.tent(&x)));
                }
            }
        }
        for v in raw.values_mut() {
            let total: f64 = v.iter().map(|e| e.1).sum();
            v.iter_mut().for_each(|e| e.1 /= total);
        }
        Ok(PartitionOfUnity {
            window,
            cells,
            weights: raw,
        })
    }

    pub fn psi(&self, i: usize, x: &Point) -> f64 {
        self.weights
            .get(x)
            .and_then(|v| v.iter().find(|e| e.0 == i))
            .map_or(0.0, |e| e.1)
    }

    /// `max_x |Σ_i ψ_i(x) - 1|` over the window.
    pub fn sum_defect(&self) -> f64 {
        self.weights
            .values()
            .map(|v| (v.iter().map(|e| e.1).sum::<f64>() - 1.0).abs())
            .fold(0.0, f64::max)
    }

    /// `(|b_i|, diameter of supp ψ_i in the model)` per cell.
    pub fn cell_model_diameters(&self, model: &dyn CompactModel) -> Vec<(f64, f64)> {
        self.cells
            .iter()
            .map(|c| {
                let pts: Vec<Vec<f64>> = c.support().iter().map(|x| model.embed(x)).collect();
                let mut diam: f64 = 0.0;
                for a in &pts {
                    for b in &pts {
                        diam = diam.max(d_cmp(a, b));
                    }
                }
                (model.interior().norm(&c.base), diam)
            })
            .collect()
    }
}

fn square_inside(
    u: &Entourage,
    space: &dyn ProperMetricSpace,
    cell: &Cell,
) -> Option<(Point, Point)> {
    let sup = cell.support();
    for x in &sup {
        for y in &sup {
            if !u.contains(space, x, y) {
                return Some((x.clone(), y.clone()));
            }
        }
    }
    None
}

fn lattice_multiples(lo: f64, hi: f64, s: i64, dim: usize) -> Vec<Point> {
    let r = (hi / s as f64).floor() as i64;
    let mut out = Vec::new();
    let mut c = vec![-r; dim];
    loop {
        let p = Point(c.iter().map(|v| v * s).collect());
        let n = p.to_f64().iter().map(|v| v * v).sum::<f64>().sqrt();
        if n >= lo && n <= hi {
            out.push(p);
        }
        let mut k = dim;
        loop {
            if k == 0 {
                return out;
            }
            k -= 1;
            if c[k] < r {
                c[k] += 1;
                break;
            }
            c[k] = -r;
        }
    }
}

/// Tent partition subordinate to `U` on the model's interior (a space with
/// integer coordinates and Euclidean-like norm). Each dyadic annulus
/// `K_{n+1} \ K_n` gets bases on `sZ^d` for the largest power of two
/// `s <= s_max` whose tent supports all have squares inside `U`. Points left
/// uncovered get singleton cells. A final scan checks every support square.
pub fn partition_from_neighborhood(
    u: &Entourage,
    model: &dyn CompactModel,
    window: f64,
    s_max: i64,
) -> Result<PartitionOfUnity> {
    let space = model.interior();
    let dim = space.basepoint().dim();
    let pts = space.window(window)?;
    let top = level_of_norm(window);
    let mut cells: Vec<Cell> = Vec::new();
    for n in 0..=top {
        let lo = if n == 0 {
            0.0
        } else {
            (n as f64).exp2() + 1e-9
        };
        let hi = ((n + 1) as f64).exp2().min(window);
        if lo > hi {
            continue;
        }
        let mut s = 1i64;
        while 2 * s <= s_max {
            s *= 2;
        }
        let chosen = loop {
            if s == 1 {
                break None;
            }
            let bases: Vec<Point> = lattice_multiples(lo, hi, s, dim)
                .into_iter()
                .filter(|b| space.norm(b) >= lo && space.norm(b) <= hi)
                .collect();
            let ok = !bases.is_empty()
                && bases.par_iter().all(|b| {
                    square_inside(
                        u,
                        space,
                        &Cell {
                            base: b.clone(),
                            spacing: s,
                        },
                    )
                    .is_none()
                });
            if ok {
                break Some((s, bases));
            }
            s /= 2;
        };
        if let Some((s, bases)) = chosen {
            cells.extend(bases.into_iter().map(|base| Cell { base, spacing: s }));
        }
    }
    let mut covered: BTreeMap<&Point, bool> = pts.iter().map(|x| (x, false)).collect();
    for c in &cells {
        for x in c.support() {
            if let Some(v) = covered.get_mut(&x) {
                *v = true;
            }
        }
    }
    let singles: Vec<Cell> = covered
        .iter()
        .filter(|(_, &v)| !v)
        .map(|(x, _)| Cell {
            base: (*x).clone(),
            spacing: 1,
        })
        .collect();
    cells.extend(singles);
    for (i, c) in cells.iter().enumerate() {
        if let Some(witness) = square_inside(u, space, c) {
            return Err(Error::PartitionCell {
                cell: i,
                base: c.base.clone(),
                witness,
            });
        }
    }
    PartitionOfUnity::build(space, window, cells)
}

/// `μ_x = Σ_i ψ_i(x) δ_{F(x_i)}`.
pub fn kernel_from_coarse_map(
    f: &PointMap,
    p: &PartitionOfUnity,
    cap: usize,
) -> Result<StochasticKernel> {
    let mut rows = BTreeMap::new();
    for (x, ws) in &p.weights {
        let atoms = ws
            .iter()
            .map(|&(i, w)| (f.apply(&p.cells[i].base), w))
            .collect();
        rows.insert(x.clone(), merge_atoms(atoms));
    }
    let k = StochasticKernel {
        window: p.window,
        rows,
    };
    k.validate(cap)?;
    Ok(k)
}

fn tail_profile(
    label: String,
    space: &dyn ProperMetricSpace,
    values: Vec<(Point, f64)>,
    escape_radii: &[f64],
    tolerance: f64,
) -> DefectProfile {
    let rows: Vec<(f64, f64)> = values
        .into_iter()
        .map(|(x, v)| (space.norm(&x), v))
        .collect();
    let mut p = DefectProfile::new(label, tolerance);
    for &r in escape_radii {
        let sel: Vec<f64> = rows.iter().filter(|e| e.0 >= r).map(|e| e.1).collect();
        if sel.is_empty() {
            p.push_skipped(r);
        } else {
            p.push(r, sel.into_iter().fold(0.0, f64::max));
        }
    }
    p
}

/// `sup_{|x| >= r} |K(h1 h2) - K(h1) K(h2)|` per escape radius.
pub fn multiplicativity_defect(
    k: &StochasticKernel,
    h1: &SampledFunction,
    h2: &SampledFunction,
    space: &dyn ProperMetricSpace,
    escape_radii: &[f64],
    tolerance: f64,
) -> DefectProfile {
    let values = k
        .rows
        .par_iter()
        .map(|(x, m)| {
            let e = |f: &dyn Fn(&Point) -> num_complex::Complex64| -> num_complex::Complex64 {
                m.iter().map(|(y, w)| f(y) * *w).sum()
            };
            let prod = e(&|y| h1.eval(y) * h2.eval(y));
            let a = e(&|y| h1.eval(y));
            let b = e(&|y| h2.eval(y));
            (x.clone(), (prod - a * b).norm())
        })
        .collect();
    tail_profile(
        format!("multiplicativity:{}:{}", h1.name, h2.name),
        space,
        values,
        escape_radii,
        tolerance,
    )
}

/// `sup_{|x| >= r} |K1 h - K2 h|` over the common window.
pub fn closeness_defect(
    k1: &StochasticKernel,
    k2: &StochasticKernel,
    h: &SampledFunction,
    space: &dyn ProperMetricSpace,
    escape_radii: &[f64],
    tolerance: f64,
) -> DefectProfile {
    let (a, b) = (k1.apply(h), k2.apply(h));
    let values = k1
        .rows
        .keys()
        .filter(|x| k2.rows.contains_key(*x))
        .map(|x| (x.clone(), (a.eval(x) - b.eval(x)).norm()))
        .collect();
    tail_profile(
        format!("closeness:{}", h.name),
        space,
        values,
        escape_radii,
        tolerance,
    )
}

/// Block kernel on `⊔ Y_n`: `(φ h)(n) = Σ_j c(n, j) h(n, j)`.
#[derive(Debug, Clone)]
pub struct BoxSpace {
    /// Masses `c(n, ·)` per block.
    pub masses: Vec<Vec<f64>>,
}

/// A function on the box space, one value vector per block.
#[derive(Debug, Clone)]
pub struct BlockFunction {
    pub name: String,
    pub values: Vec<Vec<f64>>,
}

#[derive(Debug, Clone)]
pub struct BoxReport {
    /// Per block, the largest `|φ(h_a h_b) - φ(h_a) φ(h_b)|` over the family.
    pub multiplicativity: Vec<f64>,
    /// Per block, the point `y_n` minimizing the largest
    /// `|(φ h)(n) - h(n, y_n)|` over the family, and that value.
    pub choice: Vec<usize>,
    pub block_gap: Vec<f64>,
    /// `sup_n` of the block gaps.
    pub gap: f64,
}

impl BoxSpace {
    pub fn validate(&self) -> Result<()> {
        for (n, c) in self.masses.iter().enumerate() {
            let total: f64 = c.iter().sum();
            if c.is_empty() || c.iter().any(|w| !(*w >= 0.0)) || (total - 1.0).abs() > 1e-12 {
                return Err(Error::InvalidArgument(format!(
                    "block {n} masses must be nonnegative and sum to 1, got total {total}"
                )));
            }
        }
        Ok(())
    }

    fn expect(&self, n: usize, f: impl Fn(usize) -> f64) -> f64 {
        self.masses[n]
            .iter()
            .enumerate()
            .map(|(j, c)| c * f(j))
            .sum()
    }

    /// Multiplicativity defects and the best point-evaluation fit per block.
    pub fn harness(&self, family: &[BlockFunction]) -> Result<BoxReport> {
        self.validate()?;
        for h in family {
            let ok = h.values.len() == self.masses.len()
                && h.values
                    .iter()
                    .zip(&self.masses)
                    .all(|(v, c)| v.len() == c.len());
            if !ok {
                return Err(Error::InvalidArgument(format!(
                    "block function {} does not match the block sizes",
                    h.name
                )));
            }
        }
        let blocks = self.masses.len();
        let mut multiplicativity = Vec::with_capacity(blocks);
        let mut choice = Vec::with_capacity(blocks);
        let mut block_gap = Vec::with_capacity(blocks);
        for n in 0..blocks {
            let mut m: f64 = 0.0;
            for a in family {
                for b in family {
                    let prod = self.expect(n, |j| a.values[n][j] * b.values[n][j]);
                    let ea = self.expect(n, |j| a.values[n][j]);
                    let eb = self.expect(n, |j| b.values[n][j]);
                    m = m.max((prod - ea * eb).abs());
                }
            }
            multiplicativity.push(m);
            let means: Vec<f64> = family
                .iter()
                .map(|h| self.expect(n, |j| h.values[n][j]))
                .collect();
            let mut best = (0, f64::INFINITY);
            for j in 0..self.masses[n].len() {
                let err = family
                    .iter()
                    .zip(&means)
                    .map(|(h, e)| (e - h.values[n][j]).abs())
                    .fold(0.0, f64::max);
                if err < best.1 {
                    best = (j, err);
                }
            }
            choice.push(best.0);
            block_gap.push(best.1);
        }
        let gap = block_gap.iter().copied().fold(0.0, f64::max);
        Ok(BoxReport {
            multiplicativity,
            choice,
            block_gap,
            gap,
        })
    }
}
