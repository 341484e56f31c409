//! Radial quadrature for Fock-space moments.
//!
//! Moments `∫_0^∞ 2 r^(j+1) e^(-r²) g(r) dr` are evaluated with composite
//! Gauss-Legendre panels in `r`, with the weight folded in log space so high
//! powers neither overflow nor underflow prematurely.

use statrs::function::gamma::ln_gamma;

use crate::error::{Error, Result};

const PANEL_NODES: usize = 12;
const PANEL_WIDTH: f64 = 0.25;
const TAIL_MARGIN: f64 = 12.0;

/// Gauss-Legendre nodes and weights on `[-1, 1]`, by Newton iteration on the
/// three-term recurrence.
pub fn gauss_legendre(n: usize) -> Vec<(f64, f64)> {
    let mut out = Vec::with_capacity(n);
    for i in 0..n {
        let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (mut p0, mut p1) = (1.0, x);
            for k in 2..=n {
                let p2 = ((2 * k - 1) as f64 * x * p1 - (k - 1) as f64 * p0) / k as f64;
                p0 = p1;
                p1 = p2;
            }
            dp = n as f64 * (x * p1 - p0) / (x * x - 1.0);
            let dx = p1 / dp;
            x -= dx;
            if dx.abs() < 1e-16 {
                break;
            }
        }
        out.push((x, 2.0 / ((1.0 - x * x) * dp * dp)));
    }
    out.sort_by(|a, b| a.0.total_cmp(&b.0));
    out
}

/// `ln n!`.
pub fn ln_factorial(n: usize) -> f64 {
    ln_gamma(n as f64 + 1.0)
}

/// Composite rule on `[0, sqrt(n_max + 1) + 12]` for moments up to total
/// degree `2 n_max + 1`.
#[derive(Debug, Clone)]
pub struct RadialRule {
    /// `(r, ln(2 w))` per node, `w` the panel weight; the factor 2 of the
    /// moment is folded in.
    pub nodes: Vec<(f64, f64)>,
    ln_fact: Vec<f64>,
}

impl RadialRule {
    pub fn new(n_max: usize) -> Self {
        let upper = ((n_max + 1) as f64).sqrt() + TAIL_MARGIN;
        let panels = (upper / PANEL_WIDTH).ceil() as usize;
        let h = upper / panels as f64;
        let gl = gauss_legendre(PANEL_NODES);
        let mut nodes = Vec::with_capacity(panels * PANEL_NODES);
        for p in 0..panels {
            let mid = (p as f64 + 0.5) * h;
            for &(x, w) in &gl {
                nodes.push((mid + 0.5 * h * x, (w * h).ln()));
            }
        }
        let ln_fact = (0..=2 * n_max + 2).map(ln_factorial).collect();
        RadialRule { nodes, ln_fact }
    }

    pub fn ln_fact(&self, n: usize) -> f64 {
        self.ln_fact[n]
    }

    /// `ln` of the node factor `2 w r^(m+k+1) e^(-r²) / sqrt(m! k!)`.
    pub fn ln_kernel(&self, node: usize, m: usize, k: usize) -> f64 {
        let (r, lw) = self.nodes[node];
        lw + ((m + k + 1) as f64) * r.ln() - r * r - 0.5 * (self.ln_fact[m] + self.ln_fact[k])
    }

    /// `∫_0^∞ 2 r^(m+k+1) e^(-r²) g(r) dr / sqrt(m! k!)`.
    pub fn moment(
        &self,
        m: usize,
        k: usize,
        g: &dyn Fn(f64) -> num_complex::Complex64,
    ) -> num_complex::Complex64 {
        let mut acc = num_complex::Complex64::new(0.0, 0.0);
        for j in 0..self.nodes.len() {
            let l = self.ln_kernel(j, m, k);
            if l > -745.0 {
                acc += g(self.nodes[j].0) * l.exp();
            }
        }
        acc
    }

    /// Checks the rule against `∫ 2 r^(2m+1) e^(-r²) dr = m!` for all
    /// `m <= n_max` (relative `1e-12`, or a few ulps of `ln m!` when larger) and the half-integer orders
    /// `Γ((m+k)/2 + 1)` for `m + k` odd (relative `1e-10`).
    pub fn validate(&self, n_max: usize) -> Result<()> {
        let one = |_r: f64| num_complex::Complex64::new(1.0, 0.0);
        for m in 0..=n_max {
            let v = self.moment(m, m, &one).re;
            // the log-domain kernel cancels terms of size ln m!, which limits
            // attainable relative accuracy to a few ulps of that size
            let tol = 1e-12f64.max(8.0 * f64::EPSILON * self.ln_fact[m]);
            if (v - 1.0).abs() > tol {
                return Err(Error::Quadrature(format!(
                    "diagonal moment of order {m} is {v}, expected 1"
                )));
            }
        }
        let mut m = 0;
        while m < n_max {
            let k = m + 1;
            let exact = (ln_gamma((m + k) as f64 / 2.0 + 1.0)
                - 0.5 * (self.ln_fact[m] + self.ln_fact[k]))
                .exp();
            let v = self.moment(m, k, &one).re;
            if ((v - exact) / exact).abs() > 1e-10 {
                return Err(Error::Quadrature(format!(
                    "off-diagonal moment ({m}, {k}) is {v}, expected {exact}"
                )));
            }
            m += (n_max / 16).max(1);
        }
        Ok(())
    }
}
