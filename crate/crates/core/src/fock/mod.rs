//! Coherent-state quantization on the truncated Fock space.
//!
//! Basis `|0⟩, ..., |n_max⟩`. The Toeplitz operator of a symbol `h` has
//! entries
//!
//! ```text
//! ⟨m|T_h|k⟩ = (1/π) ∫ h(z) conj(z)^m z^k e^(-|z|²) / sqrt(m! k!) d²z
//! ```
//!
//! so `T_h = (1/π) ∫ h(z) |φ_z⟩⟨φ_z| d²z` with `φ_z` the coherent vector of
//! `conj(z)`, and `e^(iθ)` quantizes to a weighted lower shift. With this
//! orientation `D(w) T_h D(w)† = T_{h(· - conj(w))}`.

pub mod quadrature;
pub mod symbol;

use std::sync::Arc;

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use rayon::prelude::*;
use statrs::function::gamma::ln_gamma;

use crate::error::{Error, Result};
use crate::operator::{spectral_norm, TruncatedOperator};
use crate::profile::DefectProfile;

pub use quadrature::{ln_factorial, RadialRule};
pub use symbol::{smooth_cutoff, symbol_keys, Symbol, SymbolClass};

type C64 = Complex64;

/// Truncation level plus a validated quadrature.
#[derive(Debug, Clone)]
pub struct FockTruncation {
    n_max: usize,
    angular: usize,
    rule: Arc<RadialRule>,
}

impl FockTruncation {
    /// Builds and validates the radial rule; angular resolution `4 n_max + 8`.
    pub fn new(n_max: usize) -> Result<Self> {
        let rule = RadialRule::new(n_max);
        rule.validate(n_max)?;
        Ok(FockTruncation {
            n_max,
            angular: 4 * n_max + 8,
            rule: Arc::new(rule),
        })
    }

    pub fn n_max(&self) -> usize {
        self.n_max
    }

    pub fn dim(&self) -> usize {
        self.n_max + 1
    }

    pub fn angular_nodes(&self) -> usize {
        self.angular
    }

    pub fn rule(&self) -> &RadialRule {
        &self.rule
    }

    /// Radius inside which coherent vectors lose only `e^(-Θ(N))` mass.
    pub fn trust_radius(&self) -> f64 {
        (self.n_max as f64).sqrt() / 2.0
    }

    pub fn toeplitz(&self, h: &Symbol) -> Result<TruncatedOperator> {
        let n = self.n_max;
        let rule = &self.rule;
        match &h.class {
            SymbolClass::Const(c) => Ok(TruncatedOperator::identity(n).scale(*c)),
            SymbolClass::Radial(g) => {
                let d: Vec<C64> = (0..=n)
                    .into_par_iter()
                    .map(|m| rule.moment(m, m, &**g))
                    .collect();
                Ok(TruncatedOperator::from_diagonal(&d))
            }
            SymbolClass::Angular { l, profile } => {
                let mut a = TruncatedOperator::zeros(n);
                let shift = l.unsigned_abs() as usize;
                if shift > n {
                    return Ok(a);
                }
                let vals: Vec<C64> = (0..=n - shift)
                    .into_par_iter()
                    .map(|k| {
                        let m = k + shift;
                        match profile {
                            None => C64::new(half_moment(rule, m, k), 0.0),
                            Some(g) => rule.moment(m, k, &**g),
                        }
                    })
                    .collect();
                for (k, v) in vals.into_iter().enumerate() {
                    if *l >= 0 {
                        a.set(k + shift, k, v);
                    } else {
                        a.set(k, k + shift, v);
                    }
                }
                Ok(a)
            }
            SymbolClass::PlaneWave(_) | SymbolClass::Generic => {
                if !h.sup_bound.is_finite() {
                    return Err(Error::InvalidArgument(format!(
                        "symbol {} has no finite bound; generic quadrature needs a bounded symbol",
                        h.name
                    )));
                }
                Ok(self.toeplitz_generic(h))
            }
        }
    }

    /// Full tensor rule: angular Fourier coefficients per radial node, then
    /// assembly. A positive combination of rank-one projections, so `h >= 0`
    /// gives a positive semidefinite matrix up to rounding.
    pub fn toeplitz_generic(&self, h: &Symbol) -> TruncatedOperator {
        let n = self.n_max;
        let na = self.angular;
        let rule = &self.rule;
        let twiddle: Vec<C64> = (0..na)
            .map(|a| C64::from_polar(1.0, -2.0 * std::f64::consts::PI * a as f64 / na as f64))
            .collect();
        // coefficient table: coeff[j][d + n] for d in -n..=n
        let coeff: Vec<Vec<C64>> = rule
            .nodes
            .par_iter()
            .map(|&(r, _)| {
                let samples: Vec<C64> = (0..na).map(|a| h.eval(r * twiddle[a].conj())).collect();
                (0..=2 * n)
                    .map(|di| {
                        let d = di as i64 - n as i64;
                        let mut acc = C64::new(0.0, 0.0);
                        for (a, s) in samples.iter().enumerate() {
                            acc += s * twiddle[((d * a as i64).rem_euclid(na as i64)) as usize];
                        }
                        acc / na as f64
                    })
                    .collect()
            })
            .collect();
        let ln_r: Vec<f64> = rule.nodes.iter().map(|e| e.0.ln()).collect();
        let rows: Vec<Vec<C64>> = (0..=n)
            .into_par_iter()
            .map(|m| {
                (0..=n)
                    .map(|k| {
                        let base = -0.5 * (rule.ln_fact(m) + rule.ln_fact(k));
                        let p = (m + k + 1) as f64;
                        let di = m + n - k;
                        let mut acc = C64::new(0.0, 0.0);
                        for (j, &(r, lw)) in rule.nodes.iter().enumerate() {
                            let l = lw + p * ln_r[j] - r * r + base;
                            if l > -745.0 {
                                acc += coeff[j][di] * l.exp();
                            }
                        }
                        acc
                    })
                    .collect()
            })
            .collect();
        TruncatedOperator::from_matrix(DMatrix::from_fn(n + 1, n + 1, |m, k| rows[m][k]))
    }

    /// `⟨φ|A|φ⟩ / ⟨φ|φ⟩` with `φ` the truncated coherent vector of
    /// `conj(z)`; values outside the trust radius are flagged.
    pub fn berezin(&self, a: &TruncatedOperator, z: C64) -> BerezinValue {
        let v = coherent_vector(z.conj(), a.n_max());
        let av = a.apply(&v);
        let value = v.dotc(&av) / v.norm_squared();
        BerezinValue {
            value,
            trusted: z.norm() <= self.trust_radius(),
        }
    }

    pub fn displacement(&self, z: C64) -> TruncatedOperator {
        displacement(z, self.n_max)
    }

    /// Profile of `‖Q_n (D(z) A D(z)† - A) Q_n‖` where `family(size)` builds
    /// `A` at any truncation level; `A` and `D` are formed at a padded level
    /// and cut back to `n_max` before taking tails.
    pub fn translation_defect(
        &self,
        family: &dyn Fn(usize) -> Result<TruncatedOperator>,
        z: C64,
        cutoffs: &[usize],
        tolerance: f64,
    ) -> Result<DefectProfile> {
        let pad = padded_size(self.n_max, z.norm());
        let a = family(pad)?;
        if a.n_max() != pad {
            return Err(Error::Contract(format!(
                "operator family returned size {} for requested {pad}",
                a.n_max()
            )));
        }
        let d = displacement(z, pad);
        let diff = (&a.conjugate_by(&d) - &a).head(self.n_max);
        Ok(tail_profile(
            &diff,
            cutoffs,
            "translation-defect",
            tolerance,
        ))
    }

    /// Profile of `‖Q_n (T_g T_h - T_{gh}) Q_n‖`, products taken at a padded
    /// level.
    pub fn corona_product_defect(
        &self,
        g: &Symbol,
        h: &Symbol,
        cutoffs: &[usize],
        tolerance: f64,
    ) -> Result<DefectProfile> {
        let pad = self.n_max + (8.0 * ((self.n_max + 1) as f64).sqrt()).ceil() as usize + 16;
        let big = FockTruncation::new(pad)?;
        let tg = big.toeplitz(g)?;
        let th = big.toeplitz(h)?;
        let tgh = big.toeplitz(&g.product(h))?;
        let diff = (&(&tg * &th) - &tgh).head(self.n_max);
        Ok(tail_profile(
            &diff,
            cutoffs,
            "corona-product-defect",
            tolerance,
        ))
    }

    /// Per radius `r`: `sup_{|z| = r} |berezin(T_h)(z) - h(z)|` over
    /// `directions` equally spaced points. Radii beyond the trust radius are
    /// recorded as skipped.
    pub fn roundtrip_defect(
        &self,
        h: &Symbol,
        radii: &[f64],
        directions: usize,
        tolerance: f64,
    ) -> Result<DefectProfile> {
        let t = self.toeplitz(h)?;
        let mut p = DefectProfile::new(format!("roundtrip:{}", h.name), tolerance);
        for &r in radii {
            if r > self.trust_radius() {
                p.push_skipped(r);
                continue;
            }
            let sup = (0..directions)
                .into_par_iter()
                .map(|a| {
                    // offset the directions so none sits on a symbol's branch cut
                    let th = 2.0 * std::f64::consts::PI * (a as f64 + 0.5) / directions as f64;
                    let z = C64::from_polar(r, th);
                    (self.berezin(&t, z).value - h.eval(z)).norm()
                })
                .reduce(|| 0.0, f64::max);
            p.push(r, sup);
        }
        Ok(p)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BerezinValue {
    pub value: C64,
    pub trusted: bool,
}

/// `Γ((m+k)/2 + 1) / sqrt(m! k!)`, the Toeplitz entry of `e^(i(m-k)θ)`.
fn half_moment(rule: &RadialRule, m: usize, k: usize) -> f64 {
    (ln_gamma((m + k) as f64 / 2.0 + 1.0) - 0.5 * (rule.ln_fact(m) + rule.ln_fact(k))).exp()
}

/// Weight `w(k) = Γ(k + 3/2) / sqrt(k! (k+1)!)` of the lower shift
/// `T_{e^(iθ)} |k⟩ = w(k) |k+1⟩`.
pub fn lower_shift_weight(k: usize) -> f64 {
    (ln_gamma(k as f64 + 1.5) - 0.5 * (ln_factorial(k) + ln_factorial(k + 1))).exp()
}

/// Truncation level used to push edge effects of `D(z)` past `n_max`.
pub fn padded_size(n_max: usize, abs_z: f64) -> usize {
    n_max + (2.0 * (abs_z + 6.0) * (2.0 * n_max as f64).sqrt()).ceil() as usize + 16
}

fn tail_profile(
    a: &TruncatedOperator,
    cutoffs: &[usize],
    label: &str,
    tolerance: f64,
) -> DefectProfile {
    let mut p = DefectProfile::new(label, tolerance);
    for &n in cutoffs {
        if n >= a.n_max() {
            p.push_skipped(n as f64);
        } else {
            p.push(n as f64, spectral_norm(&a.tail_block(n)));
        }
    }
    p
}

/// `e^(-|z|²/2) z^n / sqrt(n!)` for `n <= n_max`, evaluated in log space.
pub fn coherent_vector(z: C64, n_max: usize) -> DVector<C64> {
    let r = z.norm();
    if r == 0.0 {
        let mut v = DVector::zeros(n_max + 1);
        v[0] = C64::new(1.0, 0.0);
        return v;
    }
    let (ln_r, arg) = (r.ln(), z.arg());
    DVector::from_fn(n_max + 1, |n, _| {
        let l = -0.5 * r * r + n as f64 * ln_r - 0.5 * ln_factorial(n);
        C64::from_polar(l.exp(), n as f64 * arg)
    })
}

/// `exp(z a† - conj(z) a)` on the truncation, through the eigendecomposition
/// of the Hermitian generator, so the result is unitary to rounding.
pub fn displacement(z: C64, n_max: usize) -> TruncatedOperator {
    let dim = n_max + 1;
    if z == C64::new(0.0, 0.0) {
        return TruncatedOperator::identity(n_max);
    }
    // H = -i (z a† - conj(z) a)
    let mut h = DMatrix::<C64>::zeros(dim, dim);
    for n in 0..n_max {
        let s = ((n + 1) as f64).sqrt();
        h[(n + 1, n)] = C64::new(0.0, -1.0) * z * s;
        h[(n, n + 1)] = C64::new(0.0, 1.0) * z.conj() * s;
    }
    let eig = h.symmetric_eigen();
    let v = &eig.eigenvectors;
    let phases = DMatrix::from_diagonal(&eig.eigenvalues.map(|l| C64::from_polar(1.0, l)));
    TruncatedOperator::from_matrix(v * phases * v.adjoint())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> C64 {
        C64::new(re, im)
    }

    #[test]
    fn coherent_vectors() {
        let v = coherent_vector(c(0.0, 0.0), 8);
        assert_eq!(v[0], c(1.0, 0.0));
        assert!(v.iter().skip(1).all(|x| *x == c(0.0, 0.0)));
        // norm² is a partial exponential series
        let z = c(1.3, -0.4);
        let t = z.norm_sqr();
        for n in [2usize, 8, 40] {
            let mut partial = 0.0;
            let mut term = 1.0;
            for k in 0..=n {
                if k > 0 {
                    term *= t / k as f64;
                }
                partial += term;
            }
            let got = coherent_vector(z, n).norm_squared();
            assert!((got - (-t).exp() * partial).abs() < 1e-14);
        }
        let w = c(-0.5, 0.9);
        let overlap = coherent_vector(z, 80).dotc(&coherent_vector(w, 80));
        let exact = (-(z.norm_sqr() + w.norm_sqr()) / 2.0 + z.conj() * w).exp();
        assert!((overlap - exact).norm() < 1e-13);
        // large |z| stays finite
        assert!(coherent_vector(c(30.0, 0.0), 2000)
            .iter()
            .all(|x| x.re.is_finite()));
    }

    #[test]
    fn toeplitz_closed_forms() {
        let f = FockTruncation::new(40).unwrap();
        let id = f.toeplitz(&Symbol::constant(c(1.0, 0.0))).unwrap();
        assert_eq!(id, TruncatedOperator::identity(40));
        let a2 = f.toeplitz(&Symbol::by_key("radial:abs2").unwrap()).unwrap();
        for m in 0..=40 {
            assert!((a2.get(m, m).re - (m as f64 + 1.0)).abs() < 1e-10 * (m as f64 + 1.0));
        }
        let s = f.toeplitz(&Symbol::angular(1)).unwrap();
        for k in 0..40 {
            assert!((s.get(k + 1, k).re - lower_shift_weight(k)).abs() < 1e-14);
        }
        assert_eq!(s.get(0, 1), c(0.0, 0.0));
        assert!((lower_shift_weight(0) - std::f64::consts::PI.sqrt() / 2.0).abs() < 1e-14);
        assert!((lower_shift_weight(4000) - 1.0).abs() < 1e-4);
    }

    // The generic path must reproduce the structured ones.
    #[test]
    fn generic_assembly_matches_structured_classes() {
        let f = FockTruncation::new(24).unwrap();
        for key in [
            "radial:tanh",
            "radial:cutoff",
            "angular:l=1",
            "angular-cutoff:l=2",
            "const:1",
        ] {
            let s = Symbol::by_key(key).unwrap();
            let structured = f.toeplitz(&s).unwrap();
            let g = Symbol::generic(key, s.sup_bound, {
                let s = s.clone();
                move |z| s.eval(z)
            });
            let generic = f.toeplitz_generic(&g);
            let err = (&structured - &generic).max_abs_entry();
            // tanh(|z|) and e^{iθ} are not smooth at the origin
            let tol = if key == "radial:tanh" || key == "angular:l=1" {
                1e-5
            } else {
                1e-11
            };
            assert!(err < tol, "{key}: {err}");
        }
    }

    #[test]
    fn plane_wave_matches_displacement_matrix_elements() {
        // T of exp(i Re(conj(ξ) z)) is e^{-|ξ|²/4} D(i ξ/2)-type; check the
        // vacuum entry against the Gaussian integral e^{-|ξ|²/4}.
        let f = FockTruncation::new(16).unwrap();
        let xi = c(0.7, -0.3);
        let t = f.toeplitz(&Symbol::plane_wave(xi)).unwrap();
        let exact = (-xi.norm_sqr() / 4.0).exp();
        assert!((t.get(0, 0) - exact).norm() < 1e-12);
    }

    #[test]
    fn berezin_basics() {
        let f = FockTruncation::new(64).unwrap();
        let id = TruncatedOperator::identity(64);
        let z = c(1.1, 2.0);
        assert!((f.berezin(&id, z).value - 1.0).norm() < 1e-14);
        let p0 = TruncatedOperator::matrix_unit(64, 0, 0);
        let b = f.berezin(&p0, z);
        assert!(b.trusted);
        assert!((b.value.re - (-z.norm_sqr()).exp()).abs() < 1e-14);
        assert!(!f.berezin(&id, c(4.5, 0.0)).trusted);
    }

    // (1/π) ∫ h(w) e^{-|z-w|²} d²w by polar Gauss-Legendre around z.
    fn gaussian_smoothing(h: &Symbol, z: C64) -> C64 {
        let gl = quadrature::gauss_legendre(16);
        let (panels, width, na) = (56, 0.125, 512);
        let mut acc = c(0.0, 0.0);
        for (p, &(x, w)) in (0..panels).flat_map(|p| gl.iter().map(move |e| (p, e))) {
            let rho = width * (p as f64 + 0.5 * (x + 1.0));
            let wr = 0.5 * width * w * rho * (-rho * rho).exp();
            for a in 0..na {
                let th = 2.0 * std::f64::consts::PI * (a as f64 + 0.5) / na as f64;
                acc += h.eval(z + C64::from_polar(rho, th)) * wr;
            }
        }
        acc * (2.0 / na as f64)
    }

    #[test]
    fn berezin_of_toeplitz_is_gaussian_smoothing() {
        let f = FockTruncation::new(96).unwrap();
        for key in ["radial:cutoff", "angular-cutoff:l=1", "radial:gauss"] {
            let h = Symbol::by_key(key).unwrap();
            let t = f.toeplitz(&h).unwrap();
            for z in [c(0.3, 0.2), c(-2.0, 1.5), c(0.0, -3.9)] {
                let got = f.berezin(&t, z).value;
                let want = gaussian_smoothing(&h, z);
                assert!((got - want).norm() < 1e-6, "{key} at {z}: {got} vs {want}");
            }
        }
    }

    #[test]
    fn displacement_is_unitary_and_moves_vacuum() {
        let n = 64;
        assert_eq!(displacement(c(0.0, 0.0), n), TruncatedOperator::identity(n));
        for z in [c(1.0, 0.0), c(0.3, -0.8), c(-0.6, 0.6)] {
            let d = displacement(z, n);
            let head = (&(&d * &d.adjoint()) - &TruncatedOperator::identity(n)).head(n / 2);
            assert!(head.spectral_norm() < 1e-8);
            let vac = d.matrix().column(0).into_owned();
            assert!((vac - coherent_vector(z, n)).norm() < 1e-10);
        }
    }

    #[test]
    fn translation_covariance_on_the_head() {
        let n = 64;
        let w = c(0.6, 0.8);
        let pad = padded_size(n, w.norm());
        let big = FockTruncation::new(pad).unwrap();
        for key in ["radial:gauss", "angular-cutoff:l=1"] {
            let h = Symbol::by_key(key).unwrap();
            let moved = big
                .toeplitz(&h)
                .unwrap()
                .conjugate_by(&displacement(w, pad))
                .head(n);
            let small = FockTruncation::new(n).unwrap();
            let direct = small.toeplitz(&h.translate(w.conj())).unwrap();
            let diff = &moved - &direct;
            assert!(
                diff.spectral_norm() < 1e-6,
                "{key}: {}",
                diff.spectral_norm()
            );
            let tail = crate::operator::compact_tail_profile(&diff, &[n / 2], 1e-6);
            assert!(tail.final_defect().unwrap() < 1e-6);
        }
    }

    #[test]
    fn corona_defect_of_generator_pair_is_the_weight_formula() {
        let f = FockTruncation::new(48).unwrap();
        let cutoffs = [4, 8, 16, 32];
        let p = f
            .corona_product_defect(&Symbol::angular(1), &Symbol::angular(-1), &cutoffs, 0.05)
            .unwrap();
        for (e, &n) in p.entries.iter().zip(&cutoffs) {
            let w = lower_shift_weight(n);
            assert!((e.defect.unwrap() - (1.0 - w * w)).abs() < 1e-12);
        }
        assert!(p.is_monotone_nonincreasing());
        let one = Symbol::constant(c(1.0, 0.0));
        let p1 = f.corona_product_defect(&one, &one, &cutoffs, 0.05).unwrap();
        assert!(p1.values().iter().all(|&v| v == 0.0));
    }

    #[test]
    fn translation_defect_of_identity_and_parity() {
        let f = FockTruncation::new(32).unwrap();
        let z = c(1.0, 0.0);
        let id = f
            .translation_defect(
                &|n| Ok(TruncatedOperator::identity(n)),
                z,
                &[4, 8, 16],
                1e-2,
            )
            .unwrap();
        assert!(id.values().iter().all(|&v| v < 1e-10));
        let parity = f
            .translation_defect(
                &|n| {
                    let d: Vec<f64> = (0..=n)
                        .map(|m| if m % 2 == 0 { 1.0 } else { -1.0 })
                        .collect();
                    Ok(TruncatedOperator::from_real_diagonal(&d))
                },
                z,
                &[4, 8, 16],
                1e-2,
            )
            .unwrap();
        assert!(parity.values().iter().all(|&v| v > 0.5));
    }
}
