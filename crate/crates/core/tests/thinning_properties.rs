use lsmdual_core::model::Config;
use lsmdual_core::rng::Seed;
use lsmdual_core::thinning::{
    thin, thin_composition_exact, thin_composition_sampled, thin_generating_check, thin_per_particle, ThinningProfile,
};
use lsmdual_core::{Rational, Scalar};
use proptest::prelude::*;

fn counts() -> impl Strategy<Value = Vec<u32>> {
    proptest::collection::vec(0u32..40, 1..5)
}

fn probs(n: usize) -> impl Strategy<Value = Vec<f64>> {
    proptest::collection::vec(0.0f64..=1.0, n)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn thinning_never_adds_particles(x in counts(), u in 0.0f64..=1.0, seed in any::<u64>()) {
        let out = thin(&Config::count(x.clone()), &ThinningProfile::uniform(u).unwrap(), Seed::new(seed)).unwrap();
        for (a, b) in out.discrete().unwrap().iter().zip(&x) {
            prop_assert!(a <= b);
        }
    }

    #[test]
    fn thinning_is_deterministic_given_the_seed(x in counts(), u in 0.0f64..=1.0, seed in any::<u64>()) {
        let x = Config::count(x);
        let u = ThinningProfile::uniform(u).unwrap();
        prop_assert_eq!(thin(&x, &u, Seed::new(seed)).unwrap(), thin(&x, &u, Seed::new(seed)).unwrap());
        prop_assert_eq!(
            thin_per_particle(&x, &u, Seed::new(seed)).unwrap(),
            thin_per_particle(&x, &u, Seed::new(seed)).unwrap()
        );
    }

    #[test]
    fn common_uniforms_give_monotone_coupling(
        (x, u, bump) in counts().prop_flat_map(|x| {
            let n = x.len();
            (Just(x), probs(n), probs(n))
        }),
        seed in any::<u64>(),
    ) {
        let larger: Vec<f64> = u.iter().zip(&bump).map(|(a, b)| a + (1.0 - a) * b).collect();
        let x = Config::count(x);
        let low = thin_per_particle(&x, &ThinningProfile::per_site(u).unwrap(), Seed::new(seed)).unwrap();
        let high = thin_per_particle(&x, &ThinningProfile::per_site(larger).unwrap(), Seed::new(seed)).unwrap();
        for (a, b) in low.discrete().unwrap().iter().zip(high.discrete().unwrap()) {
            prop_assert!(a <= b);
        }
    }

    #[test]
    fn composed_thinning_has_the_product_law(
        x in proptest::collection::vec(0u32..8, 1..4),
        nums in proptest::collection::vec((0i64..=5, 0i64..=5), 3),
    ) {
        let n = x.len();
        let u: Vec<Rational> = nums.iter().take(n).map(|p| Rational::from_ratio(p.0, 5)).collect();
        let v: Vec<Rational> = nums.iter().take(n).map(|p| Rational::from_ratio(p.1, 5)).collect();
        let report = thin_composition_exact(&x, &u, &v).unwrap();
        prop_assert!(report.exact_match);
    }

    #[test]
    fn generating_function_matches_closed_form(
        x in proptest::collection::vec(0u32..10, 1..4),
        theta in -8i64..8,
        keep in 0i64..=4,
    ) {
        let (lhs, rhs) = thin_generating_check(&x, &Rational::from_ratio(theta, 4), &Rational::from_ratio(keep, 4)).unwrap();
        prop_assert_eq!(lhs, rhs);
    }
}

#[test]
fn sampled_means_are_linear_in_the_profile() {
    let x = [3u32, 17, 40, 0];
    let u = [0.5, 0.25, 0.9, 0.3];
    let profile = ThinningProfile::per_site(u.to_vec()).unwrap();
    let n = 20_000;
    let mut sums = [0.0f64; 4];
    let seed = Seed::new(41);
    for k in 0..n {
        let out = thin(&Config::count(x.to_vec()), &profile, seed.child(k)).unwrap();
        for (s, v) in sums.iter_mut().zip(out.discrete().unwrap()) {
            *s += *v as f64;
        }
    }
    for i in 0..4 {
        let mean = sums[i] / n as f64;
        let expected = u[i] * x[i] as f64;
        let sd = (x[i] as f64 * u[i] * (1.0 - u[i]) / n as f64).sqrt();
        assert!((mean - expected).abs() <= 3.0 * sd + 1e-12, "site {i}: {mean} vs {expected}");
    }
}

#[test]
fn sampled_composition_is_not_rejected() {
    let x = Config::count(vec![6, 2]);
    let u = ThinningProfile::per_site(vec![0.7, 0.4]).unwrap();
    let v = ThinningProfile::uniform(0.5).unwrap();
    let cmp = thin_composition_sampled(&x, &u, &v, 20_000, Seed::new(5)).unwrap();
    assert!(cmp.p_value > 1e-3, "{cmp:?}");
}
