use lsmdual_core::duality::{cvp_rw_dual_pair, thinning_factor};
use lsmdual_core::exact::{
    build_generator, duality_gap, evolve_distribution, intertwining_gap, psi_matrix, thinning_kernel_matrix,
    GeneratorMatrix, StateSpace,
};
use lsmdual_core::model::{BpsParams, CvpParams, Kernel, LsmRates, ModelSpec, NumLit};
use lsmdual_core::rng::Seed;
use lsmdual_core::{Rational, Scalar};
use num_traits::Signed;
use proptest::prelude::*;
use rand::Rng;

fn ratio() -> impl Strategy<Value = Rational> {
    (0i64..10, 1i64..4).prop_map(|(n, d)| Rational::from_ratio(n, d))
}

fn lit(v: &Rational) -> NumLit {
    NumLit::Text(v.to_string())
}

fn lsm_model() -> impl Strategy<Value = ModelSpec> {
    (ratio(), ratio(), ratio(), ratio(), ratio()).prop_map(|(a, b, c, d, e)| {
        let r = LsmRates::new(a, b, c, d, e).unwrap();
        ModelSpec::Lsm { a: lit(&r.a), b: lit(&r.b), c: lit(&r.c), d: lit(&r.d), e: lit(&r.e) }
    })
}

fn bps_model() -> impl Strategy<Value = ModelSpec> {
    (ratio(), ratio(), ratio(), ratio()).prop_map(|(a, b, c, d)| {
        let p = BpsParams::new(a, b, c, d).unwrap();
        ModelSpec::Bps { a: lit(&p.a), b: lit(&p.b), c: lit(&p.c), d: lit(&p.d) }
    })
}

fn gen(model: &ModelSpec, k: &Kernel<Rational>, space: StateSpace) -> GeneratorMatrix<Rational> {
    build_generator(model, k, space, true).unwrap()
}

/// `(G Psi - Psi G'^T)[x, y]` from dense products.
fn gap_entry(
    g: &GeneratorMatrix<Rational>,
    gd: &GeneratorMatrix<Rational>,
    psi: &lsmdual_core::exact::DenseMatrix<Rational>,
    i: usize,
    j: usize,
) -> Rational {
    let mut v = Rational::from_int(0);
    for k in 0..g.size() {
        v = v + g.get(i, k) * psi.get(k, j).clone() - psi.get(i, k).clone() * gd.get(j, k);
    }
    v
}

fn vec_mat(mu: &[f64], m: &lsmdual_core::exact::DenseMatrix<f64>, n: usize) -> Vec<f64> {
    (0..n).map(|j| (0..mu.len()).map(|i| mu[i] * m.get(i, j)).sum()).collect()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(40))]

    #[test]
    fn generators_are_q_matrices(lsm in lsm_model(), bps in bps_model()) {
        let g = gen(&lsm, &Kernel::ring(3), StateSpace::spin(3).unwrap());
        prop_assert!(g.has_zero_row_sums());
        prop_assert!(g.has_nonnegative_off_diagonal());
        let h = gen(&bps, &Kernel::pair(), StateSpace::count(2, 5).unwrap());
        prop_assert!(h.has_zero_row_sums());
        prop_assert!(h.has_nonnegative_off_diagonal());
    }

    #[test]
    fn psi_is_one_at_the_empty_configuration(n in -6i64..6, d in 1i64..5, cap in 2u32..5) {
        let eta = Rational::from_ratio(n, d);
        let one = Rational::from_int(1);
        for (xs, ys) in [
            (StateSpace::spin(3).unwrap(), StateSpace::spin(3).unwrap()),
            (StateSpace::count(2, cap).unwrap(), StateSpace::count(2, cap + 1).unwrap()),
        ] {
            let p = psi_matrix(xs, ys, &eta).unwrap();
            for j in 0..ys.size() {
                prop_assert_eq!(p.get(0, j), &one);
            }
            for i in 0..xs.size() {
                prop_assert_eq!(p.get(i, 0), &one);
            }
        }
    }

    #[test]
    fn gap_is_symmetric_under_swapping_models(a in lsm_model(), b in lsm_model(), n in -5i64..1, d in 1i64..4) {
        let s = StateSpace::spin(3).unwrap();
        let k = Kernel::ring(3);
        let eta = Rational::from_ratio(n, d);
        let (ga, gb) = (gen(&a, &k, s), gen(&b, &k, s));
        let ab = duality_gap(&ga, &gb, &eta).unwrap();
        let ba = duality_gap(&gb, &ga, &eta).unwrap();
        prop_assert_eq!(ab.max_abs_entry, ba.max_abs_entry);
        prop_assert_eq!(ab.exact_zero, ba.exact_zero);
        prop_assert!((ab.frobenius - ba.frobenius).abs() <= 1e-12 * ab.frobenius.max(1.0));
    }

    #[test]
    fn raising_the_cap_keeps_interior_gap_entries(a in bps_model(), b in bps_model(), cap in 3u32..5) {
        let k = Kernel::pair();
        let eta = Rational::from_ratio(1, 2);
        let small = StateSpace::count(2, cap).unwrap();
        let large = StateSpace::count(2, cap + 1).unwrap();
        let (ga, gb) = (gen(&a, &k, small), gen(&b, &k, small));
        let (ha, hb) = (gen(&a, &k, large), gen(&b, &k, large));
        let psi_small = psi_matrix(small, small, &eta).unwrap();
        let psi_large = psi_matrix(large, large, &eta).unwrap();
        let interior: Vec<Vec<u32>> = small.configs().into_iter().filter(|x| !small.is_boundary(x)).collect();
        let mut max_entry = Rational::from_int(0);
        for x in &interior {
            for y in &interior {
                let (i, j) = (small.index(x).unwrap(), small.index(y).unwrap());
                let (li, lj) = (large.index(x).unwrap(), large.index(y).unwrap());
                let e = gap_entry(&ga, &gb, &psi_small, i, j);
                prop_assert_eq!(&e, &gap_entry(&ha, &hb, &psi_large, li, lj));
                if e.abs() > max_entry {
                    max_entry = e.abs();
                }
            }
        }
        let report = duality_gap(&ga, &gb, &eta).unwrap();
        prop_assert_eq!(report.max_abs_entry, max_entry);
        prop_assert_eq!(report.evaluated_rows, interior.len());
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    /// A contact-voter process and its walk dual are intertwined by
    /// thinning; the semigroups must then commute with the thinning kernel.
    #[test]
    fn zero_intertwining_gap_commutes_semigroups(
        r in 1i64..4, s in 1i64..4, extra in 0i64..3, eps_num in 0i64..=4, seed in any::<u64>(),
    ) {
        let one = Rational::from_int(1);
        let (r, s) = (Rational::from_int(r), Rational::from_int(s));
        let eps = Rational::from_ratio(eps_num, 4);
        let m = eps.clone() * s.clone() / (one.clone() + eps.clone()) + Rational::from_int(extra);
        let cvp = CvpParams::new(r.clone(), s.clone(), m).unwrap();
        let rw = cvp_rw_dual_pair(&cvp, &eps).unwrap();
        let self_eta = r.clone() / (r + s);
        let v = thinning_factor(&(-eps), &self_eta).unwrap();
        prop_assert!(v.in_unit_interval);

        let space = StateSpace::spin(3).unwrap();
        let k = Kernel::ring(3);
        let g_cvp = gen(&ModelSpec::Cvp { r: lit(&cvp.r), s: lit(&cvp.s), m: lit(&cvp.m) }, &k, space);
        let g_rw = gen(
            &ModelSpec::Rw { eps: lit(&rw.eps), rho: lit(&rw.rho), beta: lit(&rw.beta), delta: lit(&rw.delta) },
            &k,
            space,
        );
        let gap = intertwining_gap(&g_cvp, &g_rw, &v.v).unwrap();
        prop_assert!(gap.exact_zero);

        let thin = thinning_kernel_matrix(&v.v.as_f64(), space).unwrap();
        let (f_cvp, f_rw) = (g_cvp.to_f64(), g_rw.to_f64());
        let n = space.size();
        let mut rng = Seed::new(seed).rng();
        for _ in 0..20 {
            let raw: Vec<f64> = (0..n).map(|_| rng.random::<f64>()).collect();
            let total: f64 = raw.iter().sum();
            let mu0: Vec<f64> = raw.iter().map(|p| p / total).collect();
            for t in [0.1, 1.0, 5.0] {
                let evolved = evolve_distribution(&f_cvp, &mu0, t).unwrap().distribution;
                let lhs = vec_mat(&evolved, &thin, n);
                let rhs = evolve_distribution(&f_rw, &vec_mat(&mu0, &thin, n), t).unwrap().distribution;
                for (a, b) in lhs.iter().zip(&rhs) {
                    prop_assert!((a - b).abs() < 1e-10, "t = {}: {} vs {}", t, a, b);
                }
            }
        }
    }
}
