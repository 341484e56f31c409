//! Cone maps for the Toeplitz compactification of the compact operators on
//! `ℓ²(ℕ)`: Toeplitz section of trigonometric polynomials, diagonal ramp
//! approximate units, quasi-central subsequences and the far-window symbol
//! reconstruction going back.

use std::collections::BTreeMap;
use std::f64::consts::PI;
use std::fmt::Write as _;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::operator::{spectral_norm, TruncatedOperator};
use crate::profile::fmt_f64;

type C64 = Complex64;

/// Default truncation size.
pub const DEFAULT_SIZE: usize = 512;

/// Finite Fourier series `Σ f̂(k) e^(ikθ)`; zero coefficients are not stored.
#[derive(Debug, Clone, PartialEq)]
pub struct TrigPolynomial {
    pub name: String,
    coeffs: BTreeMap<i64, C64>,
}

impl TrigPolynomial {
    pub fn new(name: impl Into<String>, coeffs: impl IntoIterator<Item = (i64, C64)>) -> Self {
        let mut map = BTreeMap::new();
        for (k, c) in coeffs {
            *map.entry(k).or_insert(C64::new(0.0, 0.0)) += c;
        }
        map.retain(|_, c| *c != C64::new(0.0, 0.0));
        TrigPolynomial {
            name: name.into(),
            coeffs: map,
        }
    }

    pub fn constant(c: f64) -> Self {
        Self::new(format!("{c}"), [(0, C64::new(c, 0.0))])
    }

    /// `e^(ilθ)`.
    pub fn exp(l: i64) -> Self {
        Self::new(format!("exp({l}i)"), [(l, C64::new(1.0, 0.0))])
    }

    /// `2 cos(lθ)`.
    pub fn two_cos(l: i64) -> Self {
        Self::new(
            format!("2cos({l})"),
            [(l, C64::new(1.0, 0.0)), (-l, C64::new(1.0, 0.0))],
        )
    }

    /// Symbols by configuration key: `1`, `exp:l`, `2cos:l`, `2+2cos`.
    pub fn by_key(key: &str) -> Result<Self> {
        let bad = || Error::UnknownInstance(key.to_string());
        if key == "2+2cos" {
            let mut p = Self::constant(2.0).add(&Self::two_cos(1));
            p.name = key.to_string();
            return Ok(p);
        }
        if let Some(l) = key.strip_prefix("exp:") {
            return Ok(Self::exp(l.parse().map_err(|_| bad())?));
        }
        if let Some(l) = key.strip_prefix("2cos:") {
            return Ok(Self::two_cos(l.parse().map_err(|_| bad())?));
        }
        key.parse::<f64>().map(Self::constant).map_err(|_| bad())
    }

    pub fn coefficient(&self, k: i64) -> C64 {
        self.coeffs.get(&k).copied().unwrap_or_default()
    }

    pub fn coefficients(&self) -> impl Iterator<Item = (i64, C64)> + '_ {
        self.coeffs.iter().map(|(k, c)| (*k, *c))
    }

    /// Largest `|k|` with a nonzero coefficient.
    pub fn band(&self) -> usize {
        self.coeffs
            .keys()
            .map(|k| k.unsigned_abs() as usize)
            .max()
            .unwrap_or(0)
    }

    pub fn eval(&self, theta: f64) -> C64 {
        self.coeffs
            .iter()
            .map(|(k, c)| c * C64::from_polar(1.0, *k as f64 * theta))
            .sum()
    }

    pub fn add(&self, other: &Self) -> Self {
        Self::new(
            format!("{}+{}", self.name, other.name),
            self.coefficients().chain(other.coefficients()),
        )
    }

    pub fn sub(&self, other: &Self) -> Self {
        Self::new(
            format!("{}-{}", self.name, other.name),
            self.coefficients()
                .chain(other.coefficients().map(|(k, c)| (k, -c))),
        )
    }

    /// `Σ |f̂(k)|`, an upper bound for the sup norm.
    pub fn coefficient_l1(&self) -> f64 {
        self.coeffs.values().map(|c| c.norm()).sum()
    }

    /// Sup norm sampled on `max(256, 16 (band + 1))` equispaced points.
    pub fn sup_norm(&self) -> f64 {
        let n = (16 * (self.band() + 1)).max(256);
        (0..n)
            .map(|a| self.eval(2.0 * PI * a as f64 / n as f64).norm())
            .fold(0.0, f64::max)
    }

    pub fn sup_distance(&self, other: &Self) -> f64 {
        self.sub(other).sup_norm()
    }
}

/// The Toeplitz matrix `(f̂(j - k))` of size `size`.
pub fn section_sigma(b: &TrigPolynomial, size: usize) -> Result<TruncatedOperator> {
    if b.band() > size / 4 {
        return Err(Error::BandTooLarge {
            band: b.band(),
            size,
        });
    }
    let mut a = TruncatedOperator::zeros(size - 1);
    for (d, c) in b.coefficients() {
        for k in 0..size {
            let j = k as i64 + d;
            if (0..size as i64).contains(&j) {
                a.set(j as usize, k, c);
            }
        }
    }
    Ok(a)
}

/// Diagonal ramp: 1 on `[0, start]`, linear down to 0 over
/// `[start, start + length]`, cut at `size`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct RampUnit {
    pub start: usize,
    pub length: usize,
    pub size: usize,
}

impl RampUnit {
    pub fn value(&self, j: usize) -> f64 {
        if j <= self.start {
            1.0
        } else {
            (1.0 - (j - self.start) as f64 / self.length as f64).max(0.0)
        }
    }

    pub fn diagonal(&self) -> Vec<f64> {
        (0..self.size).map(|j| self.value(j)).collect()
    }
}

/// Increasing ramps `u'_1 <= u'_2 <= ...`, with `u'_0 = 0` prepended.
#[derive(Debug, Clone, PartialEq)]
pub struct RampSchedule {
    pub size: usize,
    pub ramps: Vec<RampUnit>,
}

impl RampSchedule {
    /// Starts and lengths `2^(i+3)`, `i = 0..count`.
    pub fn geometric(size: usize, count: usize) -> Self {
        let ramps = (0..count)
            .map(|i| RampUnit {
                start: 1 << (i + 3),
                length: 1 << (i + 3),
                size,
            })
            .collect();
        RampSchedule { size, ramps }
    }

    pub fn from_pairs(size: usize, pairs: &[(usize, usize)]) -> Result<Self> {
        let mut last = (0usize, 0usize);
        for (i, &(a, l)) in pairs.iter().enumerate() {
            if l == 0 || a < last.0 || a + l < last.0 + last.1 {
                return Err(Error::InvalidArgument(format!(
                    "ramp {i} (start {a}, length {l}) does not dominate its predecessor"
                )));
            }
            last = (a, l);
        }
        Ok(RampSchedule {
            size,
            ramps: pairs
                .iter()
                .map(|&(start, length)| RampUnit {
                    start,
                    length,
                    size,
                })
                .collect(),
        })
    }

    /// Number of units including `u'_0 = 0`.
    pub fn len(&self) -> usize {
        self.ramps.len() + 1
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// Diagonal of `u'_i`.
    pub fn unit(&self, i: usize) -> Vec<f64> {
        if i == 0 {
            vec![0.0; self.size]
        } else {
            self.ramps[i - 1].diagonal()
        }
    }
}

/// `‖[diag(d), σ(b)]‖`. For a single Fourier mode the commutator is a
/// weighted shift and its norm is read off; otherwise a dense norm.
pub fn diagonal_commutator_norm(d: &[f64], b: &TrigPolynomial) -> Result<f64> {
    let size = d.len();
    let coeffs: Vec<(i64, C64)> = b.coefficients().filter(|(k, _)| *k != 0).collect();
    match coeffs.as_slice() {
        [] => Ok(0.0),
        [(k, c)] => {
            let s = k.unsigned_abs() as usize;
            Ok((0..size.saturating_sub(s))
                .map(|j| (d[j + s] - d[j]).abs())
                .fold(0.0, f64::max)
                * c.norm())
        }
        _ => {
            let sigma = section_sigma(b, size)?;
            let diag = TruncatedOperator::from_real_diagonal(d);
            Ok(spectral_norm(diag.commutator(&sigma).matrix()))
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CommutatorBound {
    /// `Σ |f̂(k)| |k| / L`.
    pub bound: f64,
    pub computed: f64,
}

pub fn commutator_bound(u: &RampUnit, b: &TrigPolynomial) -> Result<CommutatorBound> {
    let bound = b
        .coefficients()
        .map(|(k, c)| c.norm() * k.unsigned_abs() as f64)
        .sum::<f64>()
        / u.length as f64;
    Ok(CommutatorBound {
        bound,
        computed: diagonal_commutator_norm(&u.diagonal(), b)?,
    })
}

/// Selected subsequence `n(0) = 0 < n(1) < ...` and the interpolators
/// `e_i = (u'_{n(i+1)} - u'_{n(i)})^(1/2)`.
#[derive(Debug, Clone, PartialEq)]
pub struct Selection {
    pub size: usize,
    pub indices: Vec<usize>,
    pub interpolators: Vec<Vec<f64>>,
    /// `measured[i][b]` is `‖[e_i, σ(b)]‖` for `b` in `F_i`.
    pub measured: Vec<Vec<f64>>,
}

impl Selection {
    /// `max |Σ_{i<N} e_i² - u'_{n(N)}|` over `N` and diagonal entries.
    pub fn telescoping_defect(&self, schedule: &RampSchedule) -> f64 {
        let mut acc = vec![0.0; self.size];
        let mut worst: f64 = 0.0;
        for (i, e) in self.interpolators.iter().enumerate() {
            for (a, x) in acc.iter_mut().zip(e) {
                *a += x * x;
            }
            let u = schedule.unit(self.indices[i + 1]);
            worst = acc
                .iter()
                .zip(&u)
                .map(|(a, b)| (a - b).abs())
                .fold(worst, f64::max);
        }
        worst
    }

    /// Rows `i,bound,measured` with bound `2^-i`, one per stage and symbol.
    pub fn to_csv(&self) -> String {
        let mut s = String::from("i,bound,measured\n");
        for (i, row) in self.measured.iter().enumerate() {
            for m in row {
                let _ = writeln!(s, "{i},{},{}", fmt_f64(budget(i)), fmt_f64(*m));
            }
        }
        s
    }
}

fn budget(i: usize) -> f64 {
    0.5f64.powi(i as i32)
}

fn interpolator(schedule: &RampSchedule, lo: usize, hi: usize) -> Vec<f64> {
    let (a, b) = (schedule.unit(lo), schedule.unit(hi));
    b.iter()
        .zip(&a)
        .map(|(x, y)| (x - y).max(0.0).sqrt())
        .collect()
}

fn worst_commutator(e: &[f64], family: &[TrigPolynomial]) -> Result<(f64, Vec<f64>)> {
    let norms = family
        .iter()
        .map(|b| diagonal_commutator_norm(e, b))
        .collect::<Result<Vec<_>>>()?;
    Ok((norms.iter().copied().fold(0.0, f64::max), norms))
}

/// Greedy selection of `levels` interpolators with `‖[e_i, σ(b)]‖ < 2^-i`
/// for `b` in `families(i)`. A candidate `n(i+1)` is accepted only if some
/// later unit can still meet the next stage's budget, which keeps the greedy
/// choice from stranding itself on a short ramp.
pub fn subsequence_select(
    families: &dyn Fn(usize) -> Vec<TrigPolynomial>,
    schedule: &RampSchedule,
    levels: usize,
) -> Result<Selection> {
    let mut indices = vec![0usize];
    let mut interpolators = Vec::with_capacity(levels);
    let mut measured = Vec::with_capacity(levels);
    for i in 0..levels {
        let cur = indices[i];
        let fam = families(i);
        let next_fam = families(i + 1);
        let mut best = Vec::new();
        let mut chosen = None;
        for cand in cur + 1..schedule.len() {
            let e = interpolator(schedule, cur, cand);
            let (worst, norms) = worst_commutator(&e, &fam)?;
            if best.is_empty() || worst < best.iter().copied().fold(0.0, f64::max) {
                best = norms.clone();
            }
            if worst >= budget(i) {
                continue;
            }
            let mut viable = i + 1 == levels;
            for later in cand + 1..schedule.len() {
                if viable {
                    break;
                }
                let e2 = interpolator(schedule, cand, later);
                viable = worst_commutator(&e2, &next_fam)?.0 < budget(i + 1);
            }
            if viable {
                chosen = Some((cand, e, norms));
                break;
            }
        }
        let Some((cand, e, norms)) = chosen else {
            return Err(Error::ScheduleExhausted {
                stage: i,
                achieved: best,
            });
        };
        indices.push(cand);
        interpolators.push(e);
        measured.push(norms);
    }
    Ok(Selection {
        size: schedule.size,
        indices,
        interpolators,
        measured,
    })
}

/// `f: ℕ → C(𝕋)` equal to `limit` beyond the listed values.
#[derive(Debug, Clone, PartialEq)]
pub struct ConeFunction {
    pub values: Vec<TrigPolynomial>,
    pub limit: TrigPolynomial,
}

impl ConeFunction {
    pub fn constant(b: TrigPolynomial) -> Self {
        ConeFunction {
            values: Vec::new(),
            limit: b,
        }
    }

    pub fn at(&self, i: usize) -> &TrigPolynomial {
        self.values.get(i).unwrap_or(&self.limit)
    }
}

/// `φ(f) = Σ_i e_i σ(f(i)) e_i` over the selected interpolators.
pub fn cone_map(f: &ConeFunction, sel: &Selection) -> Result<TruncatedOperator> {
    let size = sel.size;
    let mut out = TruncatedOperator::zeros(size - 1);
    for (i, e) in sel.interpolators.iter().enumerate() {
        let b = f.at(i);
        if b.band() > size / 4 {
            return Err(Error::BandTooLarge {
                band: b.band(),
                size,
            });
        }
        for (d, c) in b.coefficients() {
            for k in 0..size {
                let j = k as i64 + d;
                if (0..size as i64).contains(&j) {
                    let j = j as usize;
                    let w = e[j] * e[k];
                    if w != 0.0 {
                        out.set(j, k, out.get(j, k) + c * w);
                    }
                }
            }
        }
    }
    Ok(out)
}

/// Compression window `[offset, offset + size)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Window {
    pub offset: usize,
    pub size: usize,
}

/// Offsets `2^(k+4)` and sizes `2^(k+3)` while they fit in `dim`.
pub fn default_windows(dim: usize) -> Vec<Window> {
    (0..)
        .map(|k| Window {
            offset: 1 << (k + 4),
            size: 1 << (k + 3),
        })
        .take_while(|w| w.offset + w.size <= dim)
        .collect()
}

/// `ψ(A)(k)`: Fejér reconstruction from the window compression at
/// `windows[k]`, coefficient `d` being the sum of the `d`-th diagonal of the
/// window divided by its size.
pub fn reverse_map(a: &TruncatedOperator, windows: &[Window]) -> Result<ConeFunction> {
    let dim = a.dim();
    let mut values = Vec::with_capacity(windows.len());
    for (k, w) in windows.iter().enumerate() {
        if w.size == 0 || w.offset + w.size > dim {
            return Err(Error::WindowOutOfRange {
                offset: w.offset,
                size: w.size,
                dim,
            });
        }
        let m = w.size as i64;
        let coeffs = (-(m - 1)..m).map(|d| {
            let mut acc = C64::new(0.0, 0.0);
            for j in 0..w.size as i64 {
                let i = j + d;
                if (0..m).contains(&i) {
                    acc += a.get(w.offset + i as usize, w.offset + j as usize);
                }
            }
            (d, acc / m as f64)
        });
        values.push(TrigPolynomial::new(format!("psi[{k}]"), coeffs));
    }
    let limit = values
        .last()
        .cloned()
        .unwrap_or_else(|| TrigPolynomial::new("psi", std::iter::empty()));
    Ok(ConeFunction { values, limit })
}

#[derive(Debug, Clone, PartialEq)]
pub struct BoundaryIdentityRow {
    pub symbol: String,
    /// Sup distance between `ψ(φ(const b))(k)` and `b`, per window.
    pub distances: Vec<f64>,
}

impl BoundaryIdentityRow {
    pub fn deepest(&self) -> f64 {
        self.distances.last().copied().unwrap_or(f64::INFINITY)
    }
}

pub fn boundary_identity_check(
    symbols: &[TrigPolynomial],
    sel: &Selection,
    windows: &[Window],
) -> Result<Vec<BoundaryIdentityRow>> {
    symbols
        .iter()
        .map(|b| {
            let phi = cone_map(&ConeFunction::constant(b.clone()), sel)?;
            let psi = reverse_map(&phi, windows)?;
            Ok(BoundaryIdentityRow {
                symbol: b.name.clone(),
                distances: psi.values.iter().map(|p| p.sup_distance(b)).collect(),
            })
        })
        .collect()
}
