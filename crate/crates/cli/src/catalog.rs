//! Named instances usable from experiment files.

use std::f64::consts::FRAC_PI_2;

use coarselab_core::kernel::BlockFunction;
use coarselab_core::space::{BinaryTree, FiberedLine, FreeGroup, HalfLine};
use coarselab_core::{model_keys, Lattice, Point, PointMap, ProperMetricSpace, SampledFunction};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CatalogEntry {
    pub category: &'static str,
    pub key: String,
    pub description: &'static str,
}

/// Everything that resolves by key, grouped by category in a fixed order.
pub fn list_instances() -> Vec<CatalogEntry> {
    let mut out = Vec::new();
    let mut push = |category, key: &str, description| {
        out.push(CatalogEntry {
            category,
            key: key.to_string(),
            description,
        })
    };
    push("space", "Z1", "integer line, Euclidean metric");
    push("space", "Z2", "integer plane, Euclidean metric");
    push("space", "half-line", "natural numbers");
    push(
        "space",
        "fibered-line:2",
        "Z x {0, 1} with |n - m| + [s != t]",
    );
    push(
        "space",
        "free-group:2",
        "free group on two generators, word metric",
    );
    push("space", "binary-tree", "rooted binary tree, path metric");
    for key in model_keys() {
        let d = match key {
            "radial-Z1" => "Z compactified by two endpoints via x / (1 + |x|)",
            "radial-Z2" => "Z^2 compactified by the circle via x / (1 + |x|)",
            "one-point-Z" => "Z with a single point at infinity",
            "cone-N" => "the cone over a point: N with one endpoint",
            _ => "binary tree compactified by its space of ends (Cantor set)",
        };
        push("model", key, d);
    }
    for (key, d) in [
        ("const:1", "constant symbol (any complex literal)"),
        ("radial:tanh", "tanh(|z|)"),
        ("radial:abs2", "|z|^2 (unbounded, radial class only)"),
        ("radial:sin", "sin(|z|), bounded but not slowly oscillating"),
        (
            "radial:cutoff",
            "smooth step from 0 at the origin to 1 at |z| = 1",
        ),
        ("radial:gauss", "exp(-|z|^2)"),
        ("angular:l=1", "e^(i l theta), any integer l"),
        ("angular-cutoff:l=1", "e^(i l theta) times the smooth step"),
        ("planewave:xi=1+0i", "exp(i Re(conj(xi) z)), any complex xi"),
    ] {
        push("symbol", key, d);
    }
    for (key, d) in [
        ("1", "constant trigonometric polynomial (any real literal)"),
        ("exp:1", "e^(i l theta)"),
        ("2cos:1", "2 cos(l theta)"),
        ("2+2cos", "2 + 2 cos(theta), nonnegative"),
    ] {
        push("trig-symbol", key, d);
    }
    for (key, d) in [
        ("identity", "identity of the boundary"),
        (
            "rotation:0.7853981633974483",
            "rotation of the circle by the given angle",
        ),
        ("antipodal", "antipodal map of the circle"),
    ] {
        push("boundary-map", key, d);
    }
    for (key, d) in [
        ("identity", "identity of Z"),
        ("half", "x -> floor(x / 2)"),
        ("negate", "x -> -x"),
    ] {
        push("point-map", key, d);
    }
    for (key, d) in [
        (
            "t",
            "t = x / (1 + |x|), extends to the radial compactification",
        ),
        ("t^2", "t^2"),
        ("cos(3t)", "cos(3t)"),
    ] {
        push("test-function", key, d);
    }
    for (key, d) in [
        ("sin-log", "sin(log(1 + |x|)), slowly oscillating"),
        ("sin-half-pi", "sin(pi x / 2), not slowly oscillating"),
        ("radial-limit", "x / (1 + |x|)"),
    ] {
        push("line-function", key, d);
    }
    for (key, d) in [
        ("sign", "-1 on the first point of each block, +1 elsewhere"),
        (
            "indicator",
            "1 on the last point of each block, 0 elsewhere",
        ),
        ("index", "position inside the block"),
        (
            "block-index",
            "constant per block, equal to the block number",
        ),
    ] {
        push("block-function", key, d);
    }
    for (key, d) in [
        (
            "coarse-check",
            "metric vs compactification control and slow oscillation",
        ),
        ("lift", "lift a boundary map to a coarse map and verify it"),
        (
            "kernel-defect",
            "multiplicativity of partition-of-unity kernels",
        ),
        (
            "moyal",
            "Fock-space corona, translation and roundtrip defects",
        ),
        (
            "toeplitz-cone",
            "quasi-central ramps and the cone map on Toeplitz matrices",
        ),
        (
            "box-space",
            "block kernels on box spaces and their lifting gap",
        ),
    ] {
        push("experiment", key, d);
    }
    out
}

pub fn space_by_key(key: &str) -> Option<Box<dyn ProperMetricSpace>> {
    Some(match key {
        "Z1" => Box::new(Lattice::euclidean(1)),
        "Z2" => Box::new(Lattice::euclidean(2)),
        "half-line" => Box::new(HalfLine),
        "binary-tree" => Box::new(BinaryTree::default()),
        _ => {
            if let Some(f) = key.strip_prefix("fibered-line:") {
                Box::new(FiberedLine {
                    fiber: f.parse().ok().filter(|f| *f > 0)?,
                })
            } else if let Some(r) = key.strip_prefix("free-group:") {
                Box::new(FreeGroup::new(r.parse().ok().filter(|r| *r > 0)?))
            } else {
                return None;
            }
        }
    })
}

pub fn point_map(key: &str, window: f64) -> Option<PointMap> {
    Some(match key {
        "identity" => PointMap::identity(window),
        "half" => PointMap::new("half", window, |x| Point::from([x.0[0].div_euclid(2)])),
        "negate" => PointMap::new("negate", window, |x| x.neg()),
        _ => return None,
    })
}

pub fn radial_limit_function(key: &str) -> Option<SampledFunction> {
    let g: fn(f64) -> f64 = match key {
        "t" => |t| t,
        "t^2" => |t| t * t,
        "cos(3t)" => |t| (3.0 * t).cos(),
        _ => return None,
    };
    Some(SampledFunction::real(key, 1.0, move |x| {
        let v = x.0[0] as f64;
        g(v / (1.0 + v.abs()))
    }))
}

pub fn line_function(key: &str) -> Option<SampledFunction> {
    let f: fn(f64) -> f64 = match key {
        "sin-log" => |x| (1.0 + x.abs()).ln().sin(),
        "sin-half-pi" => |x| (FRAC_PI_2 * x).sin(),
        "radial-limit" => |x| x / (1.0 + x.abs()),
        _ => return None,
    };
    Some(SampledFunction::real(key, 1.0, move |x| f(x.0[0] as f64)))
}

pub fn block_function(key: &str, sizes: &[usize]) -> Option<BlockFunction> {
    let v: fn(usize, usize, usize) -> f64 = match key {
        "sign" => |_, j, _| if j == 0 { -1.0 } else { 1.0 },
        "indicator" => |_, j, len| if j + 1 == len { 1.0 } else { 0.0 },
        "index" => |_, j, _| j as f64,
        "block-index" => |n, _, _| n as f64,
        _ => return None,
    };
    Some(BlockFunction {
        name: key.to_string(),
        values: sizes
            .iter()
            .enumerate()
            .map(|(n, &len)| (0..len).map(|j| v(n, j, len)).collect())
            .collect(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn catalog_is_stable_and_resolvable() {
        let a = list_instances();
        assert_eq!(a, list_instances());
        assert!(a.iter().any(|e| e.key == "radial-Z2"));
        assert!(a.iter().any(|e| e.key == "angular:l=1"));
        for e in &a {
            let ok = match e.category {
                "space" => space_by_key(&e.key).is_some(),
                "model" => coarselab_core::model_by_key(&e.key).is_ok(),
                "symbol" => coarselab_core::Symbol::by_key(&e.key).is_ok(),
                "trig-symbol" => coarselab_core::TrigPolynomial::by_key(&e.key).is_ok(),
                "boundary-map" => coarselab_core::boundary_map_by_key(&e.key).is_ok(),
                "point-map" => point_map(&e.key, 4.0).is_some(),
                "test-function" => radial_limit_function(&e.key).is_some(),
                "line-function" => line_function(&e.key).is_some(),
                "block-function" => block_function(&e.key, &[2, 3]).is_some(),
                _ => true,
            };
            assert!(ok, "{e:?}");
        }
    }
}
