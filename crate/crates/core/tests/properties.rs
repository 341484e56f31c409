use num_complex::Complex64;
use proptest::prelude::*;

use coarselab_core::cone::{
    cone_map, section_sigma, subsequence_select, ConeFunction, RampSchedule, TrigPolynomial,
};
use coarselab_core::fock::{coherent_vector, displacement, FockTruncation, Symbol};
use coarselab_core::kernel::StochasticKernel;
use coarselab_core::operator::{compact_tail_profile, TruncatedOperator};
use coarselab_core::{
    is_controlled, Entourage, Lattice, Point, ProperMetricSpace, SampledFunction,
};

type C64 = Complex64;

fn complex() -> impl Strategy<Value = C64> {
    (-3.0..3.0f64, -3.0..3.0f64).prop_map(|(a, b)| C64::new(a, b))
}

fn gaussian_bump(c: C64, width: f64) -> impl Fn(C64) -> C64 + Send + Sync + Clone {
    move |z: C64| C64::new((-(z - c).norm_sqr() / width).exp(), 0.0)
}

/// Random polynomial with coefficients in `[-1, 1] + i[-1, 1]`, band <= 3.
fn trig() -> impl Strategy<Value = TrigPolynomial> {
    prop::collection::vec(((-3i64..=3), complex()), 1..5)
        .prop_map(|cs| TrigPolynomial::new("p", cs.into_iter().map(|(k, c)| (k, c / 3.0))))
}

/// `|p|²` as a trigonometric polynomial.
fn abs_square(p: &TrigPolynomial) -> TrigPolynomial {
    let mut terms = Vec::new();
    for (j, a) in p.coefficients() {
        for (k, b) in p.coefficients() {
            terms.push((j - k, a * b.conj()));
        }
    }
    TrigPolynomial::new("|p|^2", terms)
}

fn lattice_point(dim: usize, r: i64) -> impl Strategy<Value = Point> {
    prop::collection::vec(-r..=r, dim).prop_map(Point)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn toeplitz_of_nonnegative_symbol_is_positive(c in complex(), width in 0.2..5.0f64, a in 0.0..2.0f64) {
        let f = FockTruncation::new(12).unwrap();
        let bump = gaussian_bump(c, width);
        let h = Symbol::generic("bump", 1.0 + a, move |z| bump(z) + a * (z.re.sin().powi(2)));
        prop_assert!(f.toeplitz(&h).unwrap().min_eigenvalue() >= -1e-10);
    }

    // [h_ij(z)] = v(z) v(z)^* with v = (f, g) is pointwise positive.
    #[test]
    fn toeplitz_block_matrix_is_positive(c1 in complex(), c2 in complex(), xi in complex()) {
        let n = 10;
        let f = FockTruncation::new(n).unwrap();
        let a = gaussian_bump(c1, 2.0);
        let b = move |z: C64| C64::from_polar(1.0, (xi.conj() * z).re) * gaussian_bump(c2, 3.0)(z);
        let v = [
            std::sync::Arc::new(a) as std::sync::Arc<dyn Fn(C64) -> C64 + Send + Sync>,
            std::sync::Arc::new(b),
        ];
        let dim = n + 1;
        let mut block = nalgebra::DMatrix::<C64>::zeros(2 * dim, 2 * dim);
        for i in 0..2 {
            for j in 0..2 {
                let (vi, vj) = (v[i].clone(), v[j].clone());
                let h = Symbol::generic("hij", 1.0, move |z| vi(z) * vj(z).conj());
                let t = f.toeplitz(&h).unwrap();
                block.view_mut((i * dim, j * dim), (dim, dim)).copy_from(t.matrix());
            }
        }
        let min = TruncatedOperator::from_matrix(block).min_eigenvalue();
        prop_assert!(min >= -1e-10, "{min}");
    }

    #[test]
    fn coherent_vectors_have_norm_at_most_one(z in complex(), n in 0usize..60) {
        let v = coherent_vector(z, n);
        prop_assert!(v.norm_squared() <= 1.0 + 1e-14);
    }

    #[test]
    fn displacement_is_unitary_on_low_modes(z in complex()) {
        let z = z / 3.0;
        let d = displacement(z, 48);
        let defect = (&(&d.adjoint() * &d) - &TruncatedOperator::identity(48)).head(24);
        prop_assert!(defect.spectral_norm() < 1e-8);
    }

    #[test]
    fn compact_tail_profile_is_nonincreasing(entries in prop::collection::vec(complex(), 144)) {
        let m = nalgebra::DMatrix::from_vec(12, 12, entries);
        let a = TruncatedOperator::from_matrix(m);
        let p = compact_tail_profile(&a, &[0, 1, 2, 4, 6, 8, 10], 1e-2);
        prop_assert!(p.is_monotone_nonincreasing());
    }

    #[test]
    fn section_of_square_modulus_is_positive(p in trig()) {
        let b = abs_square(&p);
        let s = section_sigma(&b, 40).unwrap();
        prop_assert!(s.min_eigenvalue() >= -1e-10);
        prop_assert!(s.hermitian_defect() < 1e-14);
    }

    #[test]
    fn cone_map_preserves_positivity(ps in prop::collection::vec(trig(), 1..4)) {
        let sched = RampSchedule::geometric(96, 6);
        let sel = subsequence_select(&|_| vec![TrigPolynomial::exp(1)], &sched, 3).unwrap();
        let values: Vec<TrigPolynomial> = ps.iter().map(abs_square).collect();
        let limit = values.last().unwrap().clone();
        let phi = cone_map(&ConeFunction { values, limit }, &sel).unwrap();
        prop_assert!(phi.min_eigenvalue() >= -1e-10);
    }

    #[test]
    fn telescoping_is_exact(starts in prop::collection::vec(1usize..40, 3..7)) {
        let mut pairs = Vec::new();
        let mut a = 0;
        for s in starts {
            a += s;
            pairs.push((a, 2 * a));
        }
        let sched = RampSchedule::from_pairs(128, &pairs).unwrap();
        let n = pairs.len();
        let sel = subsequence_select(&|_| vec![TrigPolynomial::constant(1.0)], &sched, n).unwrap();
        prop_assert!(sel.telescoping_defect(&sched) < 1e-14);
    }

    #[test]
    fn metric_bound_is_controlled_at_its_radius(r in 0.0..6.0f64, dim in 1usize..3) {
        let z = Lattice::euclidean(dim);
        let rep = is_controlled(&Entourage::MetricBound(r), &z, r, 8.0).unwrap();
        prop_assert!(rep.controlled);
        prop_assert!(rep.sup <= r + 1e-12);
    }

    #[test]
    fn balls_contain_exactly_the_near_points(c in lattice_point(2, 5), r in 0.0..4.0f64) {
        let z = Lattice::euclidean(2);
        let ball = z.ball(&c, r).unwrap();
        prop_assert!(ball.windows(2).all(|w| w[0] < w[1]));
        for x in z.ball(&c, r + 2.0).unwrap() {
            prop_assert_eq!(ball.contains(&x), z.distance(&c, &x) <= r);
        }
    }

    #[test]
    fn random_kernels_are_unital(seed in 0u64..1000) {
        let z = Lattice::euclidean(1);
        let k = StochasticKernel::from_measures(&z, 12.0, move |x| {
            let s = (x.0[0] as u64 ^ seed) % 3 + 1;
            let w = 1.0 / s as f64;
            (0..s).map(|j| (Point::from([x.0[0] + j as i64]), w)).collect()
        }).unwrap();
        let one = k.apply(&SampledFunction::constant(1.0));
        for x in z.window(12.0).unwrap() {
            prop_assert!((one.eval(&x) - 1.0).norm() < 1e-14);
        }
    }
}
