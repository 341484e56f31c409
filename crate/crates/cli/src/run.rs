//! Executes an [`ExperimentSpec`] and writes its CSV artifacts.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use coarselab_core::compact::{
    controlled_neighborhood, cross_check_metric_vs_compactification, level_of_norm,
    sample_entourages,
};
use coarselab_core::cone::{
    boundary_identity_check, cone_map, default_windows, section_sigma, subsequence_select,
    ConeFunction, RampSchedule, TrigPolynomial,
};
use coarselab_core::kernel::{
    kernel_from_coarse_map, multiplicativity_defect, partition_from_neighborhood, BoxSpace,
    MAX_SUPPORT,
};
use coarselab_core::lift::{boundary_witnesses, lift_boundary_map, verify_lift};
use coarselab_core::operator::compact_tail_profile;
use coarselab_core::profile::{default_radii, fmt_f64};
use coarselab_core::{
    are_close, boundary_map_by_key, model_by_key, slow_oscillation_profile, CompactModel,
    FockTruncation, Lattice, Symbol, Verdict,
};

use crate::catalog;
use crate::config::{ExperimentKind, ExperimentSpec, MoyalCheck, ValidationError};
use crate::report::{ArtifactWriter, CheckRow, Comparison, Fingerprint, RunReport};

#[derive(Debug, thiserror::Error)]
pub enum RunError {
    #[error("invalid experiment spec: {0}")]
    Validation(#[from] ValidationError),
    #[error("{context}: {source}")]
    Module {
        context: String,
        #[source]
        source: coarselab_core::Error,
    },
    #[error("cannot write {}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

trait Context<T> {
    fn context(self, what: impl FnOnce() -> String) -> Result<T, RunError>;
}

impl<T> Context<T> for coarselab_core::Result<T> {
    fn context(self, what: impl FnOnce() -> String) -> Result<T, RunError> {
        self.map_err(|source| RunError::Module {
            context: what(),
            source,
        })
    }
}

fn model(spec: &ExperimentSpec, default: &str) -> Result<Arc<dyn CompactModel>, RunError> {
    let key = spec.instances.model.as_deref().unwrap_or(default);
    model_by_key(key).context(|| format!("instances.model `{key}`"))
}

fn keys_or<'a>(given: &'a [String], default: &[&'a str]) -> Vec<&'a str> {
    if given.is_empty() {
        default.to_vec()
    } else {
        given.iter().map(String::as_str).collect()
    }
}

/// Runs `spec`, writing artifacts and `report.csv` into `out_dir`.
pub fn run(spec: &ExperimentSpec, out_dir: &Path) -> Result<RunReport, RunError> {
    spec.validate()?;
    let hash = spec.hash();
    let mut out = ArtifactWriter::new(out_dir, &hash)?;
    let rows = match spec.kind {
        ExperimentKind::CoarseCheck => coarse_check(spec, &mut out)?,
        ExperimentKind::Lift => lift(spec, &mut out)?,
        ExperimentKind::KernelDefect => kernel_defect(spec, &mut out)?,
        ExperimentKind::Moyal => moyal(spec, &mut out)?,
        ExperimentKind::ToeplitzCone => toeplitz_cone(spec, &mut out)?,
        ExperimentKind::BoxSpace => box_space(spec, &mut out)?,
    };
    let mut report = RunReport {
        name: spec.name.clone(),
        kind: spec.kind.as_str(),
        spec_hash: hash,
        rows,
        artifacts: Vec::new(),
        fingerprint: Fingerprint::current(),
    };
    let path = out_dir.join("report.csv");
    std::fs::write(&path, report.to_csv()).map_err(|source| RunError::Io {
        path: path.clone(),
        source,
    })?;
    report.artifacts = out.written;
    report.artifacts.push(path);
    Ok(report)
}

fn coarse_check(
    spec: &ExperimentSpec,
    out: &mut ArtifactWriter,
) -> Result<Vec<CheckRow>, RunError> {
    let m = model(spec, "radial-Z1")?;
    let window = spec.params.window.unwrap_or(160.0);
    let radii = spec.schedules.radii.clone().unwrap_or_else(default_radii);
    let escape = *radii.last().expect("validated nonempty");
    let cmp_tol = spec.tolerances.compactification.unwrap_or(0.1);
    let dim = m.interior().basepoint().dim();
    let ents = sample_entourages(dim, window);
    let rep = cross_check_metric_vs_compactification(m.as_ref(), &ents, escape, window, cmp_tol)
        .context(|| format!("cross-check on {}", m.key()))?;
    let mut rows = Vec::new();
    let mut csv = String::from("entourage,metric_sup_half,metric_sup,cmp_defect,agreement\n");
    for r in &rep.rows {
        let _ = writeln!(
            csv,
            "{},{},{},{},{:?}",
            r.name,
            fmt_f64(r.metric_sup_half),
            fmt_f64(r.metric_sup),
            fmt_f64(r.cmp_defect),
            r.agreement
        );
    }
    let disagreements = rep.disagreements().len() as f64;
    rows.push(CheckRow::new(
        "cross-check-disagreements",
        format!(
            "model={} entourages={} escape={escape} window={window}",
            m.key(),
            ents.len()
        ),
        disagreements,
        0.5,
        Comparison::Below,
    ));
    out.write("cross-check", &csv)?;
    let decay = spec.tolerances.decay.unwrap_or(1e-2);
    let z1 = Lattice::euclidean(1);
    for key in keys_or(&spec.instances.functions, &["sin-log", "sin-half-pi"]) {
        let f = catalog::line_function(key).expect("validated key");
        let p = slow_oscillation_profile(&f, &z1, 1.0, &radii, None, decay)
            .context(|| format!("slow oscillation of {key}"))?;
        out.write(&format!("slow-oscillation-{key}"), &p.to_csv())?;
        rows.push(CheckRow::new(
            format!("slow-oscillation:{key}"),
            "R=1 space=Z1",
            p.final_defect().unwrap_or(f64::NAN),
            decay,
            Comparison::Below,
        ));
    }
    Ok(rows)
}

fn lift(spec: &ExperimentSpec, out: &mut ArtifactWriter) -> Result<Vec<CheckRow>, RunError> {
    let m = model(spec, "radial-Z2")?;
    let window = spec.params.window.unwrap_or(64.0);
    let decay = spec.tolerances.decay.unwrap_or(0.1);
    let close_tol = spec.tolerances.closeness.unwrap_or(0.2);
    let levels = level_of_norm(window);
    let dim = m.interior().basepoint().dim();
    let rays: Vec<Vec<f64>> = if dim == 2 {
        vec![
            vec![1.0, 0.0],
            vec![0.0, -1.0],
            vec![1.0, 1.0],
            vec![-3.0, 2.0],
        ]
    } else {
        vec![vec![1.0; dim], vec![-1.0; dim]]
    };
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let mut rows = Vec::new();
    for key in keys_or(&spec.instances.maps, &["identity"]) {
        let phi = boundary_map_by_key(key).context(|| format!("boundary map `{key}`"))?;
        let ctx = || format!("lifting `{key}` on {}", m.key());
        let t1 = Arc::new(boundary_witnesses(m.as_ref(), levels, 0.0).context(ctx)?);
        let f1 = lift_boundary_map(&phi, m.clone(), t1, window, 0.0).context(ctx)?;
        f1.check_audit(m.as_ref()).context(ctx)?;
        out.write(&format!("lift-{key}-audit"), &f1.audit_csv())?;
        let v = verify_lift(&f1, &phi, m.as_ref(), m.as_ref(), &rays, decay).context(ctx)?;
        let mut csv = String::from("ray,index,defect\n");
        for (dir, p) in rays.iter().zip(&v.ray_profiles) {
            let d = dir
                .iter()
                .map(|c| c.to_string())
                .collect::<Vec<_>>()
                .join(" ");
            for e in &p.entries {
                let _ = writeln!(
                    csv,
                    "{d},{},{}",
                    e.scale,
                    e.defect.map(fmt_f64).unwrap_or_default()
                );
            }
        }
        out.write(&format!("lift-{key}-rays"), &csv)?;
        let ray_final = v
            .ray_profiles
            .iter()
            .map(|p| p.final_defect().unwrap_or(f64::NAN))
            .fold(0.0, f64::max);
        rows.push(CheckRow::new(
            format!("ray-convergence:{key}"),
            format!("window={window} rays={}", rays.len()),
            ray_final,
            decay,
            Comparison::Below,
        ));
        let coarse_fail = if v.coarse.verdict == Verdict::Pass {
            0.0
        } else {
            1.0
        };
        let s1 = v.coarse.expansion.first().map(|e| e.1).unwrap_or(f64::NAN);
        rows.push(CheckRow::new(
            format!("coarse-map:{key}"),
            format!("verdict={} S(1)={s1}", v.coarse.verdict),
            coarse_fail,
            0.5,
            Comparison::Below,
        ));
        let (ps, pt) = (rng.random::<f64>(), rng.random::<f64>());
        let t2 = Arc::new(boundary_witnesses(m.as_ref(), levels, pt).context(ctx)?);
        let f2 = lift_boundary_map(&phi, m.clone(), t2, window, ps).context(ctx)?;
        let close = are_close(
            &f1.point_map(),
            &f2.point_map(),
            m.interior(),
            m.interior(),
            window,
        )
        .context(ctx)?;
        rows.push(CheckRow::new(
            format!("closeness:{key}"),
            format!("phases={ps:.6}/{pt:.6} sup={}", close.sup),
            close.ratio(),
            close_tol,
            Comparison::Below,
        ));
    }
    Ok(rows)
}

fn kernel_defect(
    spec: &ExperimentSpec,
    out: &mut ArtifactWriter,
) -> Result<Vec<CheckRow>, RunError> {
    let m = model(spec, "radial-Z1")?;
    let window = spec.params.window.unwrap_or(256.0);
    let radii = spec.schedules.radii.clone().unwrap_or_else(default_radii);
    let tol = spec.tolerances.decay.unwrap_or(1e-2);
    let u = controlled_neighborhood(m.clone());
    let p = partition_from_neighborhood(&u, m.as_ref(), window, 1 << 20)
        .context(|| format!("partition of unity on {}", m.key()))?;
    let funcs: Vec<_> = keys_or(&spec.instances.functions, &["t", "t^2", "cos(3t)"])
        .into_iter()
        .map(|k| catalog::radial_limit_function(k).expect("validated key"))
        .collect();
    let mut rows = Vec::new();
    for key in keys_or(&spec.instances.maps, &["identity", "half"]) {
        let f = catalog::point_map(key, window).expect("validated key");
        let k =
            kernel_from_coarse_map(&f, &p, MAX_SUPPORT).context(|| format!("kernel of `{key}`"))?;
        out.write(&format!("kernel-{key}"), &k.to_csv())?;
        let mut csv = String::from("h1,h2,radius,defect\n");
        let mut worst: f64 = 0.0;
        for a in &funcs {
            for b in &funcs {
                let prof = multiplicativity_defect(&k, a, b, m.interior(), &radii, tol);
                for e in &prof.entries {
                    let _ = writeln!(
                        csv,
                        "{},{},{},{}",
                        a.name,
                        b.name,
                        fmt_f64(e.scale),
                        e.defect.map(fmt_f64).unwrap_or_default()
                    );
                }
                worst = worst.max(prof.final_defect().unwrap_or(f64::NAN));
            }
        }
        out.write(&format!("kernel-{key}-multiplicativity"), &csv)?;
        rows.push(CheckRow::new(
            format!("multiplicativity:{key}"),
            format!("window={window} cells={}", p.cells.len()),
            worst,
            tol,
            Comparison::Below,
        ));
    }
    Ok(rows)
}

fn moyal(spec: &ExperimentSpec, out: &mut ArtifactWriter) -> Result<Vec<CheckRow>, RunError> {
    let n_max = spec.params.n_max.unwrap_or(32);
    let check = spec.params.check.unwrap_or_default();
    let fock = FockTruncation::new(n_max).context(|| format!("Fock truncation at {n_max}"))?;
    let symbols: Vec<Symbol> = spec
        .instances
        .symbols
        .iter()
        .map(|k| Symbol::by_key(k).expect("validated key"))
        .collect();
    let cutoffs = spec
        .schedules
        .cutoffs
        .clone()
        .unwrap_or_else(|| vec![4, 8, 16]);
    let (profile, tol, params) = match check {
        MoyalCheck::Corona => {
            let tol = spec.tolerances.decay.unwrap_or(0.05);
            let p = fock
                .corona_product_defect(&symbols[0], &symbols[1], &cutoffs, tol)
                .context(|| "corona product defect".into())?;
            (
                p,
                tol,
                format!("n_max={n_max} g={} h={}", symbols[0].name, symbols[1].name),
            )
        }
        MoyalCheck::Translation => {
            let tol = spec.tolerances.decay.unwrap_or(0.2);
            let [re, im] = spec.params.shift.unwrap_or([1.0, 0.0]);
            let h = symbols[0].clone();
            let p = fock
                .translation_defect(
                    &|n| FockTruncation::new(n)?.toeplitz(&h),
                    Complex64::new(re, im),
                    &cutoffs,
                    tol,
                )
                .context(|| "translation defect".into())?;
            (
                p,
                tol,
                format!("n_max={n_max} symbol={} shift={re}+{im}i", symbols[0].name),
            )
        }
        MoyalCheck::Roundtrip => {
            let tol = spec.tolerances.decay.unwrap_or(0.15);
            let radii = spec
                .schedules
                .radii
                .clone()
                .unwrap_or_else(|| vec![1.0, 2.0]);
            let p = fock
                .roundtrip_defect(&symbols[0], &radii, 64, tol)
                .context(|| "roundtrip defect".into())?;
            (p, tol, format!("n_max={n_max} symbol={}", symbols[0].name))
        }
    };
    let label = match check {
        MoyalCheck::Corona => "corona",
        MoyalCheck::Translation => "translation",
        MoyalCheck::Roundtrip => "roundtrip",
    };
    out.write(&format!("moyal-{label}"), &profile.to_csv())?;
    let value = match profile.verdict() {
        Verdict::Fail if profile.final_defect().is_some_and(|d| d < tol) => f64::NAN,
        _ => profile.final_defect().unwrap_or(f64::NAN),
    };
    Ok(vec![CheckRow::new(
        label,
        params,
        value,
        tol,
        Comparison::Below,
    )])
}

fn toeplitz_cone(
    spec: &ExperimentSpec,
    out: &mut ArtifactWriter,
) -> Result<Vec<CheckRow>, RunError> {
    let size = spec.params.size.unwrap_or(512);
    let ramps = spec.params.ramps.unwrap_or(12);
    let stages = spec.params.stages.unwrap_or(7);
    let tol = spec.tolerances.decay.unwrap_or(0.05);
    let family: Vec<TrigPolynomial> = keys_or(&spec.instances.family, &["exp:1"])
        .into_iter()
        .map(|k| TrigPolynomial::by_key(k).expect("validated key"))
        .collect();
    let symbols: Vec<TrigPolynomial> = keys_or(&spec.instances.symbols, &["1", "exp:1", "2cos:1"])
        .into_iter()
        .map(|k| TrigPolynomial::by_key(k).expect("validated key"))
        .collect();
    let sched = RampSchedule::geometric(size, ramps);
    let sel = subsequence_select(&|_| family.clone(), &sched, stages)
        .context(|| "subsequence selection".into())?;
    out.write("cone-selection", &sel.to_csv())?;
    let mut rows = Vec::new();
    for (i, m) in sel.measured.iter().enumerate() {
        rows.push(CheckRow::new(
            format!("commutator:{i}"),
            format!("n={}..{}", sel.indices[i], sel.indices[i + 1]),
            m.iter().copied().fold(0.0, f64::max),
            0.5f64.powi(i as i32),
            Comparison::Below,
        ));
    }
    rows.push(CheckRow::new(
        "telescoping",
        format!("size={size}"),
        sel.telescoping_defect(&sched),
        1e-14,
        Comparison::Below,
    ));
    let windows = default_windows(size);
    let report = boundary_identity_check(&symbols, &sel, &windows)
        .context(|| "boundary identity check".into())?;
    let mut csv = String::from("symbol,window_offset,window_size,distance\n");
    for r in &report {
        for (d, w) in r.distances.iter().zip(&windows) {
            let _ = writeln!(csv, "{},{},{},{}", r.symbol, w.offset, w.size, fmt_f64(*d));
        }
    }
    out.write("cone-boundary", &csv)?;
    for (r, b) in report.iter().zip(&symbols) {
        let diff = &section_sigma(b, size).context(|| format!("section of {}", b.name))?
            - &cone_map(&ConeFunction::constant(b.clone()), &sel)
                .context(|| format!("cone map of {}", b.name))?;
        let tail = compact_tail_profile(&diff, &[size / 2], 1.0 / 32.0);
        rows.push(CheckRow::new(
            format!("tail:{}", b.name),
            format!("cutoff={}", size / 2),
            tail.final_defect().unwrap_or(f64::NAN),
            1.0 / 32.0,
            Comparison::Below,
        ));
        rows.push(CheckRow::new(
            format!("boundary-identity:{}", r.symbol),
            format!("windows={}", windows.len()),
            r.deepest(),
            tol,
            Comparison::Below,
        ));
    }
    Ok(rows)
}

fn box_space(spec: &ExperimentSpec, out: &mut ArtifactWriter) -> Result<Vec<CheckRow>, RunError> {
    let masses = spec
        .params
        .masses
        .clone()
        .unwrap_or_else(|| vec![vec![0.5, 0.5]; 4]);
    let sizes: Vec<usize> = masses.iter().map(Vec::len).collect();
    let family: Vec<_> = keys_or(&spec.instances.functions, &["sign"])
        .into_iter()
        .map(|k| catalog::block_function(k, &sizes).expect("validated key"))
        .collect();
    let rep = BoxSpace { masses }
        .harness(&family)
        .context(|| "box-space harness".into())?;
    let mut csv = String::from("block,multiplicativity,choice,gap\n");
    for n in 0..sizes.len() {
        let _ = writeln!(
            csv,
            "{n},{},{},{}",
            fmt_f64(rep.multiplicativity[n]),
            rep.choice[n],
            fmt_f64(rep.block_gap[n])
        );
    }
    out.write("box-space", &csv)?;
    let names: Vec<&str> = family.iter().map(|h| h.name.as_str()).collect();
    Ok(vec![
        CheckRow::new(
            "multiplicativity",
            format!("blocks={} family={}", sizes.len(), names.join(" ")),
            rep.multiplicativity.iter().copied().fold(0.0, f64::max),
            spec.tolerances.decay.unwrap_or(1e-2),
            Comparison::Below,
        ),
        CheckRow::new(
            "lifting-gap",
            format!("blocks={}", sizes.len()),
            rep.gap,
            spec.tolerances.gap.unwrap_or(1e-12),
            Comparison::Below,
        ),
    ])
}
