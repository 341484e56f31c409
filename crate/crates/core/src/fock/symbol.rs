//! Symbols on the phase plane, tagged by the structure the Toeplitz assembly
//! can exploit.

use std::f64::consts::PI;
use std::fmt;
use std::sync::Arc;

use num_complex::Complex64;

use crate::error::{Error, Result};

/// A function of `r = |z|`.
pub type RadialFn = Arc<dyn Fn(f64) -> Complex64 + Send + Sync>;

#[derive(Clone)]
pub enum SymbolClass {
    Const(Complex64),
    /// `g(|z|)`: diagonal Toeplitz matrix.
    Radial(RadialFn),
    /// `g(|z|) e^(i l θ)`, with `g ≡ 1` when `profile` is `None`: a single
    /// nonzero diagonal `m = k + l`.
    Angular {
        l: i64,
        profile: Option<RadialFn>,
    },
    /// `exp(i Re(conj(ξ) z))`.
    PlaneWave(Complex64),
    Generic,
}

impl fmt::Debug for SymbolClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SymbolClass::Const(c) => write!(f, "Const({c})"),
            SymbolClass::Radial(_) => f.write_str("Radial"),
            SymbolClass::Angular { l, profile } => {
                write!(f, "Angular(l={l}, profile={})", profile.is_some())
            }
            SymbolClass::PlaneWave(xi) => write!(f, "PlaneWave({xi})"),
            SymbolClass::Generic => f.write_str("Generic"),
        }
    }
}

/// A bounded (or explicitly unbounded) function on `C`.
#[derive(Clone)]
pub struct Symbol {
    pub name: String,
    pub class: SymbolClass,
    pub sup_bound: f64,
    eval: Arc<dyn Fn(Complex64) -> Complex64 + Send + Sync>,
}

impl fmt::Debug for Symbol {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Symbol")
            .field("name", &self.name)
            .field("class", &self.class)
            .field("sup_bound", &self.sup_bound)
            .finish()
    }
}

/// `C^∞` step: 0 at `r = 0`, 1 for `r >= 1`.
pub fn smooth_cutoff(r: f64) -> f64 {
    let f = |t: f64| if t > 0.0 { (-1.0 / t).exp() } else { 0.0 };
    if r >= 1.0 {
        1.0
    } else if r <= 0.0 {
        0.0
    } else {
        f(r) / (f(r) + f(1.0 - r))
    }
}

fn phase(z: Complex64, l: i64) -> Complex64 {
    if z.norm() == 0.0 {
        if l == 0 {
            Complex64::new(1.0, 0.0)
        } else {
            Complex64::new(0.0, 0.0)
        }
    } else {
        Complex64::from_polar(1.0, l as f64 * z.arg())
    }
}

impl Symbol {
    pub fn new(
        name: impl Into<String>,
        class: SymbolClass,
        sup_bound: f64,
        eval: impl Fn(Complex64) -> Complex64 + Send + Sync + 'static,
    ) -> Self {
        Symbol {
            name: name.into(),
            class,
            sup_bound,
            eval: Arc::new(eval),
        }
    }

    pub fn constant(c: Complex64) -> Self {
        Self::new(
            format!("const:{c}"),
            SymbolClass::Const(c),
            c.norm(),
            move |_| c,
        )
    }

    pub fn radial(
        name: impl Into<String>,
        sup_bound: f64,
        g: impl Fn(f64) -> Complex64 + Send + Sync + 'static,
    ) -> Self {
        let g: RadialFn = Arc::new(g);
        let g2 = g.clone();
        Self::new(name, SymbolClass::Radial(g), sup_bound, move |z| {
            g2(z.norm())
        })
    }

    /// `e^(i l θ)`, set to 0 at the origin for `l != 0`.
    pub fn angular(l: i64) -> Self {
        Self::new(
            format!("angular:l={l}"),
            SymbolClass::Angular { l, profile: None },
            1.0,
            move |z| phase(z, l),
        )
    }

    /// `g(|z|) e^(i l θ)`.
    pub fn angular_with(
        name: impl Into<String>,
        l: i64,
        sup_bound: f64,
        g: impl Fn(f64) -> Complex64 + Send + Sync + 'static,
    ) -> Self {
        let g: RadialFn = Arc::new(g);
        let g2 = g.clone();
        Self::new(
            name,
            SymbolClass::Angular {
                l,
                profile: Some(g),
            },
            sup_bound,
            move |z| g2(z.norm()) * phase(z, l),
        )
    }

    /// `χ(|z|) e^(i l θ)` with the smooth cutoff `χ` vanishing at the origin.
    pub fn angular_cutoff(l: i64) -> Self {
        Self::angular_with(format!("angular-cutoff:l={l}"), l, 1.0, |r| {
            smooth_cutoff(r).into()
        })
    }

    pub fn plane_wave(xi: Complex64) -> Self {
        Self::new(
            format!("planewave:xi={}{:+}i", xi.re, xi.im),
            SymbolClass::PlaneWave(xi),
            1.0,
            move |z| Complex64::from_polar(1.0, (xi.conj() * z).re),
        )
    }

    pub fn generic(
        name: impl Into<String>,
        sup_bound: f64,
        f: impl Fn(Complex64) -> Complex64 + Send + Sync + 'static,
    ) -> Self {
        Self::new(name, SymbolClass::Generic, sup_bound, f)
    }

    pub fn eval(&self, z: Complex64) -> Complex64 {
        (self.eval)(z)
    }

    pub fn conj(&self) -> Symbol {
        let s = self.clone();
        let eval = move |z| s.eval(z).conj();
        let class = match &self.class {
            SymbolClass::Const(c) => SymbolClass::Const(c.conj()),
            SymbolClass::Radial(g) => {
                let g = g.clone();
                SymbolClass::Radial(Arc::new(move |r| g(r).conj()))
            }
            SymbolClass::Angular { l, profile } => SymbolClass::Angular {
                l: -l,
                profile: profile
                    .clone()
                    .map(|g| -> RadialFn { Arc::new(move |r| g(r).conj()) }),
            },
            SymbolClass::PlaneWave(xi) => SymbolClass::PlaneWave(-xi),
            SymbolClass::Generic => SymbolClass::Generic,
        };
        Symbol::new(format!("conj({})", self.name), class, self.sup_bound, eval)
    }

    /// Pointwise product; keeps the radial/angular structure when both
    /// factors have it.
    pub fn product(&self, other: &Symbol) -> Symbol {
        let (a, b) = (self.clone(), other.clone());
        let eval = move |z| a.eval(z) * b.eval(z);
        let radial_of = |s: &Symbol| -> Option<(i64, Option<RadialFn>)> {
            match &s.class {
                SymbolClass::Const(c) => {
                    let c = *c;
                    Some((0, Some(Arc::new(move |_| c) as RadialFn)))
                }
                SymbolClass::Radial(g) => Some((0, Some(g.clone()))),
                SymbolClass::Angular { l, profile } => Some((*l, profile.clone())),
                _ => None,
            }
        };
        let class = match (&self.class, &other.class) {
            (SymbolClass::Const(c), SymbolClass::Const(d)) => SymbolClass::Const(c * d),
            (SymbolClass::Radial(g), SymbolClass::Radial(h)) => {
                let (g, h) = (g.clone(), h.clone());
                SymbolClass::Radial(Arc::new(move |r| g(r) * h(r)))
            }
            _ => match (radial_of(self), radial_of(other)) {
                (Some((l1, p1)), Some((l2, p2))) => {
                    let profile: Option<RadialFn> = match (p1, p2) {
                        (None, None) => None,
                        (Some(g), None) | (None, Some(g)) => Some(g),
                        (Some(g), Some(h)) => Some(Arc::new(move |r| g(r) * h(r))),
                    };
                    SymbolClass::Angular {
                        l: l1 + l2,
                        profile,
                    }
                }
                _ => SymbolClass::Generic,
            },
        };
        Symbol::new(
            format!("{}*{}", self.name, other.name),
            class,
            self.sup_bound * other.sup_bound,
            eval,
        )
    }

    /// `z -> h(z - c)`; generic unless constant.
    pub fn translate(&self, c: Complex64) -> Symbol {
        if let SymbolClass::Const(_) = self.class {
            return self.clone();
        }
        let s = self.clone();
        Symbol::generic(format!("{}(.-{c})", self.name), self.sup_bound, move |z| {
            s.eval(z - c)
        })
    }

    /// Symbol by configuration key.
    pub fn by_key(key: &str) -> Result<Symbol> {
        let unknown = || Error::UnknownInstance(key.to_string());
        if let Some(v) = key.strip_prefix("const:") {
            return Ok(Symbol::constant(parse_complex(v).ok_or_else(unknown)?));
        }
        if let Some(v) = key.strip_prefix("angular:l=") {
            return Ok(Symbol::angular(v.parse().map_err(|_| unknown())?));
        }
        if let Some(v) = key.strip_prefix("angular-cutoff:l=") {
            return Ok(Symbol::angular_cutoff(v.parse().map_err(|_| unknown())?));
        }
        if let Some(v) = key.strip_prefix("planewave:xi=") {
            return Ok(Symbol::plane_wave(parse_complex(v).ok_or_else(unknown)?));
        }
        let s = match key {
            "radial:tanh" => Symbol::radial(key, 1.0, |r| r.tanh().into()),
            "radial:abs2" => Symbol::radial(key, f64::INFINITY, |r| (r * r).into()),
            "radial:sin" => Symbol::radial(key, 1.0, |r| r.sin().into()),
            "radial:cutoff" => Symbol::radial(key, 1.0, |r| smooth_cutoff(r).into()),
            "radial:gauss" => Symbol::radial(key, 1.0, |r| (-r * r).exp().into()),
            _ => return Err(unknown()),
        };
        Ok(s)
    }
}

/// Configuration keys understood by [`Symbol::by_key`] (parametrized
/// families shown with a representative parameter).
pub fn symbol_keys() -> Vec<&'static str> {
    vec![
        "const:1",
        "radial:tanh",
        "radial:abs2",
        "radial:sin",
        "radial:cutoff",
        "radial:gauss",
        "angular:l=1",
        "angular-cutoff:l=1",
        "planewave:xi=1+0i",
    ]
}

/// Parses `a`, `a+bi`, `a-bi`, `bi`.
pub fn parse_complex(s: &str) -> Option<Complex64> {
    let s = s.trim();
    if let Some(body) = s.strip_suffix('i') {
        let split = body
            .char_indices()
            .skip(1)
            .filter(|(_, c)| *c == '+' || *c == '-')
            .filter(|(i, _)| !body[..*i].ends_with(['e', 'E']))
            .last()
            .map(|(i, _)| i);
        return match split {
            Some(i) => {
                let re = body[..i].parse().ok()?;
                let im_s = &body[i..];
                let im = match im_s {
                    "+" => 1.0,
                    "-" => -1.0,
                    _ => im_s.parse().ok()?,
                };
                Some(Complex64::new(re, im))
            }
            None => {
                let im = match body {
                    "" | "+" => 1.0,
                    "-" => -1.0,
                    _ => body.parse().ok()?,
                };
                Some(Complex64::new(0.0, im))
            }
        };
    }
    s.parse().ok().map(|re| Complex64::new(re, 0.0))
}

/// Uniform angular nodes `2π a / count`.
pub fn angular_nodes(count: usize) -> Vec<f64> {
    (0..count)
        .map(|a| 2.0 * PI * a as f64 / count as f64)
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_complex_literals() {
        assert_eq!(parse_complex("1"), Some(Complex64::new(1.0, 0.0)));
        assert_eq!(parse_complex("1+2i"), Some(Complex64::new(1.0, 2.0)));
        assert_eq!(parse_complex("-0.5-1.5i"), Some(Complex64::new(-0.5, -1.5)));
        assert_eq!(parse_complex("2i"), Some(Complex64::new(0.0, 2.0)));
        assert_eq!(
            parse_complex("1e-3+1e2i"),
            Some(Complex64::new(1e-3, 100.0))
        );
        assert_eq!(parse_complex("x"), None);
    }

    #[test]
    fn every_listed_key_resolves() {
        for k in symbol_keys() {
            Symbol::by_key(k).unwrap();
        }
        assert!(Symbol::by_key("radial:nope").is_err());
    }

    #[test]
    fn products_keep_structure() {
        let g = Symbol::angular(1);
        let p = g.product(&g.conj());
        assert!(matches!(
            p.class,
            SymbolClass::Angular {
                l: 0,
                profile: None
            }
        ));
        let z = Complex64::new(0.3, -2.0);
        assert!((p.eval(z) - 1.0).norm() < 1e-15);
        let q = Symbol::by_key("radial:tanh")
            .unwrap()
            .product(&Symbol::angular_cutoff(2));
        assert!(matches!(
            q.class,
            SymbolClass::Angular {
                l: 2,
                profile: Some(_)
            }
        ));
        assert!(
            (q.eval(z) - z.norm().tanh() * Complex64::from_polar(1.0, 2.0 * z.arg())).norm()
                < 1e-15
        );
    }

    #[test]
    fn cutoff_is_a_smooth_step() {
        assert_eq!(smooth_cutoff(0.0), 0.0);
        assert_eq!(smooth_cutoff(1.0), 1.0);
        assert!((smooth_cutoff(0.5) - 0.5).abs() < 1e-15);
        let mut last = 0.0;
        for i in 1..100 {
            let v = smooth_cutoff(i as f64 / 100.0);
            assert!(v >= last);
            last = v;
        }
    }
}
