//! Experiment specifications: parsing, defaults and validation.

use std::fmt;
use std::path::PathBuf;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use coarselab_core::cone::TrigPolynomial;
use coarselab_core::{boundary_map_by_key, model_by_key, Symbol};

use crate::catalog;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ExperimentKind {
    CoarseCheck,
    Lift,
    KernelDefect,
    Moyal,
    ToeplitzCone,
    BoxSpace,
}

impl ExperimentKind {
    pub fn as_str(self) -> &'static str {
        match self {
            ExperimentKind::CoarseCheck => "coarse-check",
            ExperimentKind::Lift => "lift",
            ExperimentKind::KernelDefect => "kernel-defect",
            ExperimentKind::Moyal => "moyal",
            ExperimentKind::ToeplitzCone => "toeplitz-cone",
            ExperimentKind::BoxSpace => "box-space",
        }
    }

    pub fn all() -> [ExperimentKind; 6] {
        [
            ExperimentKind::CoarseCheck,
            ExperimentKind::Lift,
            ExperimentKind::KernelDefect,
            ExperimentKind::Moyal,
            ExperimentKind::ToeplitzCone,
            ExperimentKind::BoxSpace,
        ]
    }
}

/// Which Fock-space defect a `moyal` experiment measures.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum MoyalCheck {
    #[default]
    Corona,
    Translation,
    Roundtrip,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Instances {
    pub model: Option<String>,
    #[serde(default)]
    pub symbols: Vec<String>,
    #[serde(default)]
    pub maps: Vec<String>,
    #[serde(default)]
    pub functions: Vec<String>,
    /// Symbols the cone ramps must asymptotically commute with.
    #[serde(default)]
    pub family: Vec<String>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Schedules {
    pub radii: Option<Vec<f64>>,
    pub cutoffs: Option<Vec<usize>>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Tolerances {
    /// Bound on the final value of decaying profiles.
    pub decay: Option<f64>,
    /// Bound on `sup d(F1 x, F2 x) / window` for two lifts.
    pub closeness: Option<f64>,
    /// Bound on the box-space lifting gap.
    pub gap: Option<f64>,
    /// Bound on compactification defects beyond the escape radius.
    pub compactification: Option<f64>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Params {
    pub window: Option<f64>,
    pub n_max: Option<usize>,
    pub check: Option<MoyalCheck>,
    /// Displacement `[re, im]` for translation defects.
    pub shift: Option<[f64; 2]>,
    pub size: Option<usize>,
    pub ramps: Option<usize>,
    pub stages: Option<usize>,
    pub masses: Option<Vec<Vec<f64>>>,
}

/// One experiment, as read from a TOML file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentSpec {
    pub name: String,
    pub kind: ExperimentKind,
    #[serde(default)]
    pub seed: u64,
    pub output: Option<PathBuf>,
    #[serde(default)]
    pub instances: Instances,
    #[serde(default)]
    pub schedules: Schedules,
    #[serde(default)]
    pub tolerances: Tolerances,
    #[serde(default)]
    pub params: Params,
}

/// Validation failure at a field path such as `schedules.cutoffs`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ValidationError {
    pub path: String,
    pub message: String,
}

impl fmt::Display for ValidationError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: {}", self.path, self.message)
    }
}

impl std::error::Error for ValidationError {}

fn invalid(path: impl Into<String>, message: impl Into<String>) -> ValidationError {
    ValidationError {
        path: path.into(),
        message: message.into(),
    }
}

fn check_schedule<T: PartialOrd + fmt::Debug>(
    path: &str,
    s: &Option<Vec<T>>,
) -> Result<(), ValidationError> {
    if let Some(v) = s {
        if v.is_empty() || v.windows(2).any(|w| !(w[0] < w[1])) {
            return Err(invalid(
                path,
                format!("schedules nonempty and increasing (got {v:?})"),
            ));
        }
    }
    Ok(())
}

impl ExperimentSpec {
    pub fn from_toml(text: &str) -> Result<Self, ValidationError> {
        let spec: ExperimentSpec = toml::from_str(text).map_err(|e| {
            let path = e
                .span()
                .map(|s| format!("byte {}", s.start))
                .unwrap_or_else(|| "spec".into());
            invalid(path, e.message().to_string())
        })?;
        spec.validate()?;
        Ok(spec)
    }

    /// SHA-256 of the canonical TOML rendering, hex encoded.
    pub fn hash(&self) -> String {
        let canonical = toml::to_string(self).expect("spec serializes");
        hex::encode(Sha256::digest(canonical.as_bytes()))
    }

    pub fn validate(&self) -> Result<(), ValidationError> {
        if self.name.is_empty()
            || !self
                .name
                .chars()
                .all(|c| c.is_ascii_alphanumeric() || "-_.".contains(c))
        {
            return Err(invalid(
                "name",
                "must be a nonempty file-name-safe identifier",
            ));
        }
        check_schedule("schedules.radii", &self.schedules.radii)?;
        check_schedule("schedules.cutoffs", &self.schedules.cutoffs)?;
        if let Some(r) = &self.schedules.radii {
            if r.iter().any(|x| !(x.is_finite() && *x > 0.0)) {
                return Err(invalid(
                    "schedules.radii",
                    "radii must be finite and positive",
                ));
            }
        }
        for (path, v) in [
            ("tolerances.decay", self.tolerances.decay),
            ("tolerances.closeness", self.tolerances.closeness),
            ("tolerances.gap", self.tolerances.gap),
            (
                "tolerances.compactification",
                self.tolerances.compactification,
            ),
            ("params.window", self.params.window),
        ] {
            if let Some(x) = v {
                if !(x.is_finite() && x > 0.0) {
                    return Err(invalid(
                        path,
                        format!("must be finite and positive, got {x}"),
                    ));
                }
            }
        }
        if let Some(m) = &self.instances.model {
            model_by_key(m).map_err(|e| invalid("instances.model", e.to_string()))?;
        }
        match self.kind {
            ExperimentKind::Moyal => {
                for (i, s) in self.instances.symbols.iter().enumerate() {
                    Symbol::by_key(s)
                        .map_err(|e| invalid(format!("instances.symbols[{i}]"), e.to_string()))?;
                }
                let need = match self.params.check.unwrap_or_default() {
                    MoyalCheck::Corona => 2,
                    _ => 1,
                };
                if self.instances.symbols.len() != need {
                    return Err(invalid(
                        "instances.symbols",
                        format!("this check takes exactly {need} symbol(s)"),
                    ));
                }
            }
            ExperimentKind::ToeplitzCone => {
                for (field, keys) in [
                    ("symbols", &self.instances.symbols),
                    ("family", &self.instances.family),
                ] {
                    for (i, s) in keys.iter().enumerate() {
                        TrigPolynomial::by_key(s).map_err(|e| {
                            invalid(format!("instances.{field}[{i}]"), e.to_string())
                        })?;
                    }
                }
            }
            ExperimentKind::Lift => {
                for (i, s) in self.instances.maps.iter().enumerate() {
                    boundary_map_by_key(s)
                        .map_err(|e| invalid(format!("instances.maps[{i}]"), e.to_string()))?;
                    let model = self.instances.model.as_deref().unwrap_or("radial-Z2");
                    if s.starts_with("rotation:") && model != "radial-Z2" {
                        return Err(invalid(
                            format!("instances.maps[{i}]"),
                            format!("`{s}` acts on the circle; use model radial-Z2"),
                        ));
                    }
                }
            }
            ExperimentKind::KernelDefect => {
                if let Some(m) = &self.instances.model {
                    if !matches!(m.as_str(), "radial-Z1" | "one-point-Z") {
                        return Err(invalid(
                            "instances.model",
                            "kernel experiments run on radial-Z1 or one-point-Z",
                        ));
                    }
                }
                for (i, s) in self.instances.maps.iter().enumerate() {
                    if catalog::point_map(s, 1.0).is_none() {
                        return Err(invalid(
                            format!("instances.maps[{i}]"),
                            format!("unknown instance key `{s}`"),
                        ));
                    }
                }
                for (i, s) in self.instances.functions.iter().enumerate() {
                    if catalog::radial_limit_function(s).is_none() {
                        return Err(invalid(
                            format!("instances.functions[{i}]"),
                            format!("unknown instance key `{s}`"),
                        ));
                    }
                }
            }
            ExperimentKind::CoarseCheck => {
                for (i, s) in self.instances.functions.iter().enumerate() {
                    if catalog::line_function(s).is_none() {
                        return Err(invalid(
                            format!("instances.functions[{i}]"),
                            format!("unknown instance key `{s}`"),
                        ));
                    }
                }
            }
            ExperimentKind::BoxSpace => {
                for (i, s) in self.instances.functions.iter().enumerate() {
                    if catalog::block_function(s, &[2]).is_none() {
                        return Err(invalid(
                            format!("instances.functions[{i}]"),
                            format!("unknown instance key `{s}`"),
                        ));
                    }
                }
                if let Some(m) = &self.params.masses {
                    for (n, c) in m.iter().enumerate() {
                        let total: f64 = c.iter().sum();
                        if c.is_empty()
                            || c.iter().any(|w| !(*w >= 0.0))
                            || (total - 1.0).abs() > 1e-12
                        {
                            return Err(invalid(
                                format!("params.masses[{n}]"),
                                "masses must be nonnegative and sum to 1",
                            ));
                        }
                    }
                }
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn decreasing_schedule_is_rejected_with_its_path() {
        let text = "name = \"m\"\nkind = \"moyal\"\n[instances]\nsymbols = [\"angular:l=1\", \"angular:l=-1\"]\n[schedules]\ncutoffs = [8, 4]\n";
        let err = ExperimentSpec::from_toml(text).unwrap_err();
        assert_eq!(err.path, "schedules.cutoffs");
        assert!(err
            .to_string()
            .contains("schedules nonempty and increasing"));
    }

    #[test]
    fn unknown_keys_are_rejected() {
        let text = "name = \"m\"\nkind = \"lift\"\n[instances]\nmodel = \"radial-Z7\"\n";
        assert_eq!(
            ExperimentSpec::from_toml(text).unwrap_err().path,
            "instances.model"
        );
        let text = "name = \"m\"\nkind = \"moyal\"\n[instances]\nsymbols = [\"radial:nope\", \"const:1\"]\n";
        assert_eq!(
            ExperimentSpec::from_toml(text).unwrap_err().path,
            "instances.symbols[0]"
        );
        let text = "name = \"m\"\nkind = \"nope\"\n";
        assert!(ExperimentSpec::from_toml(text).is_err());
    }

    #[test]
    fn hash_ignores_formatting() {
        let a = ExperimentSpec::from_toml("name = \"x\"\nkind = \"box-space\"\n").unwrap();
        let b = ExperimentSpec::from_toml("kind   =   \"box-space\"\n\n# comment\nname = \"x\"\n")
            .unwrap();
        assert_eq!(a.hash(), b.hash());
        let c =
            ExperimentSpec::from_toml("name = \"x\"\nkind = \"box-space\"\nseed = 1\n").unwrap();
        assert_ne!(a.hash(), c.hash());
    }
}
