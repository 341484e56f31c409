//! Acceptance gate: one PASS/FAIL line per criterion.
//!
//! Failing criteria are reported, not hidden; set `ACCEPTANCE_STRICT=1` to
//! turn any failure into a nonzero exit status.

use std::f64::consts::PI;
use std::sync::Arc;
use std::time::{Duration, Instant};

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use coarselab_core::compact::{
    controlled_neighborhood, cross_check_metric_vs_compactification, level_of_norm,
    sample_entourages, CompactModel, RadialModel,
};
use coarselab_core::cone::{
    boundary_identity_check, cone_map, default_windows, section_sigma, subsequence_select,
    ConeFunction, RampSchedule, TrigPolynomial, DEFAULT_SIZE,
};
use coarselab_core::fock::{lower_shift_weight, smooth_cutoff, FockTruncation, Symbol};
use coarselab_core::kernel::{
    kernel_from_coarse_map, multiplicativity_defect, partition_from_neighborhood, StochasticKernel,
    MAX_SUPPORT,
};
use coarselab_core::lift::{boundary_witnesses, lift_boundary_map, verify_lift, BoundaryMap};
use coarselab_core::operator::{compact_tail_profile, TruncatedOperator};
use coarselab_core::profile::default_radii;
use coarselab_core::{
    are_close, slow_oscillation_profile, Lattice, Point, PointMap, Result, SampledFunction, Verdict,
};

type C64 = Complex64;

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: String) -> Result<Outcome> {
    Ok(Outcome { pass, detail })
}

fn toeplitz_unitality_positivity() -> Result<Outcome> {
    let f = FockTruncation::new(64)?;
    let one = Symbol::constant(C64::new(1.0, 0.0));
    let id = TruncatedOperator::identity(64);
    let structured = (&f.toeplitz(&one)? - &id).max_abs_entry();
    let generic_one = Symbol::generic("one", 1.0, |_| C64::new(1.0, 0.0));
    let generic = (&f.toeplitz_generic(&generic_one) - &id).max_abs_entry();
    let mut rng = ChaCha8Rng::seed_from_u64(20);
    let mut worst = f64::INFINITY;
    for s in 0..20 {
        let bumps: Vec<(C64, f64, f64)> = (0..3)
            .map(|_| {
                let c = C64::new(rng.random_range(-5.0..5.0), rng.random_range(-5.0..5.0));
                (c, rng.random_range(0.3..4.0), rng.random_range(0.0..2.0))
            })
            .collect();
        let xi = C64::new(rng.random_range(-2.0..2.0), rng.random_range(-2.0..2.0));
        let wave = rng.random_range(0.0..1.0);
        let ring = rng.random_range(1.0..6.0);
        let sup = bumps.iter().map(|b| b.2).sum::<f64>() + 2.0 * wave + 1.0;
        let h = Symbol::generic(format!("positive-{s}"), sup, move |z: C64| {
            let mut v = wave * (1.0 + (xi.conj() * z).re.cos());
            for (c, width, a) in &bumps {
                v += a * (-(z - c).norm_sqr() / width).exp();
            }
            v += smooth_cutoff(z.norm() / ring) * (z.arg() * 3.0).sin().powi(2);
            C64::new(v, 0.0)
        });
        worst = worst.min(f.toeplitz(&h)?.min_eigenvalue());
    }
    outcome(
        structured <= 1e-12 && generic <= 1e-12 && worst >= -1e-10,
        format!(
            "|T(1) - I| = {structured:.1e} (closed form), {generic:.1e} (quadrature); min eigenvalue over 20 symbols {worst:.3e}"
        ),
    )
}

fn corona_homomorphism() -> Result<Outcome> {
    let f = FockTruncation::new(128)?;
    let cutoffs = [4, 8, 16, 32, 64];
    let p = f.corona_product_defect(&Symbol::angular(1), &Symbol::angular(-1), &cutoffs, 0.05)?;
    let mut err: f64 = 0.0;
    for (e, &n) in p.entries.iter().zip(&cutoffs) {
        let want = (n..128)
            .map(|k| 1.0 - lower_shift_weight(k).powi(2))
            .fold(0.0, f64::max);
        err = err.max((e.defect.unwrap_or(f64::NAN) - want).abs());
    }
    let at64 = p.defect_at(64.0).unwrap_or(f64::NAN);
    outcome(
        err <= 1e-8 && at64 < 0.05,
        format!("max deviation from 1 - w(k)^2 formula {err:.1e}; defect at n=64 {at64:.5}"),
    )
}

fn parity_family(n: usize) -> Result<TruncatedOperator> {
    let d: Vec<f64> = (0..=n)
        .map(|m| if m % 2 == 0 { 1.0 } else { -1.0 })
        .collect();
    Ok(TruncatedOperator::from_real_diagonal(&d))
}

fn translation_compactification() -> Result<Outcome> {
    let f = FockTruncation::new(128)?;
    let z = C64::new(1.0, 0.0);
    let cutoffs = [16, 32, 64];
    let h = Symbol::angular_cutoff(1);
    let p = f.translation_defect(&|n| FockTruncation::new(n)?.toeplitz(&h), z, &cutoffs, 1e-2)?;
    let ratios = p.decay_ratios();
    let parity = f.translation_defect(&parity_family, z, &cutoffs, 1e-2)?;
    let parity_min = parity.values().into_iter().fold(f64::INFINITY, f64::min);
    let pass = ratios.len() == 2 && ratios.iter().all(|&r| r >= 1.5) && parity_min >= 0.5;
    outcome(
        pass,
        format!(
            "angular cutoff defects {:?}, ratios per doubling {:?} (need >= 1.5); parity min {parity_min:.4}",
            short(&p.values()),
            short(&ratios)
        ),
    )
}

fn quantize_dequantize() -> Result<Outcome> {
    let f = FockTruncation::new(1024)?;
    let radii = [4.0, 8.0, 16.0];
    let p = f.roundtrip_defect(&Symbol::angular(1), &radii, 64, 0.15)?;
    let vals = p.values();
    let decreasing = vals.len() == 3 && vals.windows(2).all(|w| w[1] < w[0]);
    let last = p.defect_at(16.0).unwrap_or(f64::NAN);
    let s = f.roundtrip_defect(&Symbol::by_key("radial:sin")?, &radii, 64, 0.15)?;
    let sin_min = s.values().into_iter().fold(f64::INFINITY, f64::min);
    outcome(
        decreasing && last < 0.15 && sin_min > 0.5,
        format!(
            "e^(i theta) defects {:?}; sin(|z|) defects {:?} (need > 0.5)",
            short(&vals),
            short(&s.values())
        ),
    )
}

fn boundary_lifting() -> Result<Outcome> {
    let mx: Arc<dyn CompactModel> = Arc::new(RadialModel::new(2)?);
    let window = 256.0;
    let levels = level_of_norm(window);
    let rays = vec![
        vec![1.0, 0.0],
        vec![0.0, -1.0],
        vec![1.0, 1.0],
        vec![-3.0, 2.0],
    ];
    let maps = [
        BoundaryMap::identity(),
        BoundaryMap::rotation(PI / 4.0),
        BoundaryMap::antipodal(),
    ];
    let mut pass = true;
    let mut parts = Vec::new();
    for phi in &maps {
        let t1 = Arc::new(boundary_witnesses(mx.as_ref(), levels, 0.0)?);
        let f1 = lift_boundary_map(phi, mx.clone(), t1, window, 0.0)?;
        let v = verify_lift(&f1, phi, mx.as_ref(), mx.as_ref(), &rays, 0.1)?;
        let ray_final = v
            .ray_profiles
            .iter()
            .map(|p| p.final_defect().unwrap_or(f64::INFINITY))
            .fold(0.0, f64::max);
        let t2 = Arc::new(boundary_witnesses(mx.as_ref(), levels, 0.61)?);
        let f2 = lift_boundary_map(phi, mx.clone(), t2, window, 0.37)?;
        let close = are_close(
            &f1.point_map(),
            &f2.point_map(),
            mx.interior(),
            mx.interior(),
            window,
        )?;
        let ok = ray_final < 0.1 && v.coarse.verdict == Verdict::Pass && close.ratio() < 0.2;
        pass &= ok;
        parts.push(format!(
            "{}: ray {ray_final:.4}, coarse {}, sup d/r {:.4}",
            phi.name,
            v.coarse.verdict,
            close.ratio()
        ));
    }
    outcome(pass, parts.join("; "))
}

fn radial_limit(name: &str, g: fn(f64) -> f64) -> SampledFunction {
    SampledFunction::real(name, 1.0, move |x: &Point| {
        let v = x.0[0] as f64;
        g(v / (1.0 + v.abs()))
    })
}

fn partition_kernels() -> Result<Outcome> {
    let model: Arc<dyn CompactModel> = Arc::new(RadialModel::new(1)?);
    let window = 256.0;
    let u = controlled_neighborhood(model.clone());
    let p = partition_from_neighborhood(&u, model.as_ref(), window, 1 << 20)?;
    let tests = [
        radial_limit("t", |t| t),
        radial_limit("cos(3t)", |t| (3.0 * t).cos()),
        radial_limit("t^2", |t| t * t),
    ];
    let maps = [
        PointMap::identity(window),
        PointMap::new("half", window, |x| Point::from([x.0[0].div_euclid(2)])),
    ];
    let radii = default_radii();
    let mut worst: f64 = 0.0;
    let mut pass = true;
    for f in &maps {
        let k = kernel_from_coarse_map(f, &p, MAX_SUPPORT)?;
        for a in &tests {
            for b in &tests {
                let prof = multiplicativity_defect(&k, a, b, model.interior(), &radii, 1e-2);
                pass &= prof.verdict() == Verdict::Pass;
                worst = worst.max(prof.defect_at(128.0).unwrap_or(f64::INFINITY));
            }
        }
    }
    let z1 = Lattice::euclidean(1);
    let two_point =
        StochasticKernel::from_measures(&z1, window, |x| vec![(x.clone(), 0.5), (x.neg(), 0.5)])?;
    let adv = multiplicativity_defect(&two_point, &tests[0], &tests[0], &z1, &radii, 1e-2);
    let adv_min = adv.values().into_iter().fold(f64::INFINITY, f64::min);
    outcome(
        pass && worst < 1e-2 && adv_min >= 0.2,
        format!("identity/halving kernels worst defect at r=128 {worst:.2e}; two-point kernel min {adv_min:.4}"),
    )
}

fn cone_lifting() -> Result<Outcome> {
    let sched = RampSchedule::geometric(DEFAULT_SIZE, 12);
    let sel = subsequence_select(&|_| vec![TrigPolynomial::exp(1)], &sched, 7)?;
    let tele = sel.telescoping_defect(&sched);
    let comm_ok = sel
        .measured
        .iter()
        .enumerate()
        .all(|(i, row)| row.iter().all(|&m| m < 0.5f64.powi(i as i32)));
    let symbols = [
        TrigPolynomial::constant(1.0),
        TrigPolynomial::exp(1),
        TrigPolynomial::two_cos(1),
    ];
    let mut tail: f64 = 0.0;
    for b in &symbols {
        let diff =
            &section_sigma(b, DEFAULT_SIZE)? - &cone_map(&ConeFunction::constant(b.clone()), &sel)?;
        let prof = compact_tail_profile(&diff, &[DEFAULT_SIZE / 2], 1.0 / 32.0);
        tail = tail.max(prof.final_defect().unwrap_or(f64::INFINITY));
    }
    let rows = boundary_identity_check(&symbols, &sel, &default_windows(DEFAULT_SIZE))?;
    let deepest = rows.iter().map(|r| r.deepest()).fold(0.0, f64::max);
    outcome(
        tele <= 1e-14 && comm_ok && tail < 1.0 / 32.0 && deepest < 0.05,
        format!(
            "indices {:?}; telescoping {tele:.1e}; commutators within 2^-i: {comm_ok}; tail at M/2 {tail:.1e}; boundary distance {deepest:.4}",
            sel.indices
        ),
    )
}

fn commutative_sanity() -> Result<Outcome> {
    let mut parts = Vec::new();
    let mut pass = true;
    for dim in [1, 2] {
        let m = RadialModel::new(dim)?;
        let ents = sample_entourages(dim, 160.0);
        let rep = cross_check_metric_vs_compactification(&m, &ents, 128.0, 160.0, 0.1)?;
        let bad = rep.disagreements().len();
        pass &= bad == 0 && ents.len() == 10;
        parts.push(format!(
            "Z^{dim}: {} entourages, {bad} disagreements",
            ents.len()
        ));
    }
    outcome(pass, parts.join("; "))
}

fn slow_oscillation() -> Result<Outcome> {
    let z1 = Lattice::euclidean(1);
    let radii = default_radii();
    let slow = SampledFunction::real("sin(log(1+|x|))", 1.0, |x| {
        (1.0 + x.0[0].abs() as f64).ln().sin()
    });
    let fast = SampledFunction::real("sin(pi x/2)", 1.0, |x| (PI / 2.0 * x.0[0] as f64).sin());
    let a = slow_oscillation_profile(&slow, &z1, 1.0, &radii, None, 1e-2)?;
    let b = slow_oscillation_profile(&fast, &z1, 1.0, &radii, None, 1e-2)?;
    outcome(
        a.verdict() == Verdict::Pass && b.verdict() == Verdict::Fail,
        format!(
            "sin(log) final {:.4} ({}); sin(pi x/2) final {:.4} ({})",
            a.final_defect().unwrap_or(f64::NAN),
            a.verdict(),
            b.final_defect().unwrap_or(f64::NAN),
            b.verdict()
        ),
    )
}

fn short(v: &[f64]) -> Vec<String> {
    v.iter().map(|x| format!("{x:.4}")).collect()
}

fn main() {
    type Check = fn() -> Result<Outcome>;
    let criteria: [(&str, Check, Duration); 9] = [
        (
            "toeplitz unitality and positivity",
            toeplitz_unitality_positivity,
            Duration::from_secs(30),
        ),
        (
            "corona homomorphism for the generator pair",
            corona_homomorphism,
            Duration::from_secs(120),
        ),
        (
            "translation compactification",
            translation_compactification,
            Duration::from_secs(600),
        ),
        (
            "quantize-dequantize closeness",
            quantize_dequantize,
            Duration::from_secs(600),
        ),
        (
            "boundary lifting on radial Z^2",
            boundary_lifting,
            Duration::from_secs(60),
        ),
        (
            "partition-of-unity kernels",
            partition_kernels,
            Duration::from_secs(600),
        ),
        (
            "quasi-central cone lifting",
            cone_lifting,
            Duration::from_secs(120),
        ),
        (
            "metric vs compactification control",
            commutative_sanity,
            Duration::from_secs(600),
        ),
        (
            "slow-oscillation classification",
            slow_oscillation,
            Duration::from_secs(600),
        ),
    ];
    let mut failed = 0;
    for (name, check, budget) in criteria {
        let start = Instant::now();
        let res = check();
        let took = start.elapsed();
        let (pass, detail) = match res {
            Ok(o) => (o.pass && took <= budget, o.detail),
            Err(e) => (false, format!("error: {e}")),
        };
        if !pass {
            failed += 1;
        }
        let tag = if pass { "PASS" } else { "FAIL" };
        println!(
            "[{tag}] {name}: {detail} [{:.1}s, budget {}s]",
            took.as_secs_f64(),
            budget.as_secs()
        );
    }
    println!("acceptance: {} of 9 criteria passed", 9 - failed);
    if failed > 0 && std::env::var("ACCEPTANCE_STRICT").is_ok_and(|v| v == "1") {
        std::process::exit(1);
    }
}
