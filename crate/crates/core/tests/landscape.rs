use mflab::datagen::{init_2l, pool_risk, DataSource, DataSpec, InitSpec, Pool};
use mflab::landscape::{
    build_path_2l, dropout_error, dropout_net_2l, half_split, risk_along_path, DropoutSpec2L, PATH_SEGMENTS,
};
use mflab::model::{Activation, Loss, Network, Objective, Params2L};
use proptest::prelude::*;

fn objective() -> Objective {
    Objective::two_layer(Activation::Tanh, Loss::Logistic)
}

fn setup(width: usize, seed: u64) -> (Params2L, Params2L, Pool) {
    let src = DataSource::new(&DataSpec {
        dim: 3,
        ..DataSpec::default()
    })
    .unwrap();
    let init = InitSpec {
        k_init: 3.0,
        ..InitSpec::default()
    };
    let w = init_2l(&init, width, 3, seed).unwrap();
    let w_prime = init_2l(&init, width, 3, seed + 1000).unwrap();
    (w, w_prime, Pool::draw(&src, seed, 128).unwrap())
}

fn subsets(n: usize, k: usize) -> Vec<Vec<usize>> {
    (0u32..1 << n)
        .filter(|m| m.count_ones() as usize == k)
        .map(|m| (0..n).filter(|j| m & (1 << j) != 0).collect())
        .collect()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn averaging_all_half_dropouts_recovers_the_output(seed in 0u64..500, half in 1usize..=4, x in proptest::collection::vec(-2.0f64..2.0, 3)) {
        let n = 2 * half;
        let (w, _, _) = setup(n, seed);
        let obj = objective();
        let mut ws = w.workspace();
        let full = w.output(&x, &obj, &mut ws);
        let family = subsets(n, half);
        let avg = family
            .iter()
            .map(|a| {
                let d = dropout_net_2l(&w, &DropoutSpec2L { subset: a.clone() }).unwrap();
                d.output(&x, &obj, &mut d.workspace())
            })
            .sum::<f64>()
            / family.len() as f64;
        prop_assert!((avg - full).abs() <= 1e-12 * (1.0 + full.abs()), "{avg} vs {full}");
    }

    #[test]
    fn path_endpoints_knots_and_reversal(seed in 0u64..500, half in 1usize..=6) {
        let (w, w_prime, pool) = setup(2 * half, seed);
        let path = build_path_2l(&w, &w_prime, seed).unwrap();
        prop_assert_eq!(path.segments().len(), PATH_SEGMENTS);
        prop_assert_eq!(path.start(), &w);
        prop_assert_eq!(path.end(), &w_prime);
        for pair in path.segments().windows(2) {
            prop_assert_eq!(&pair[0].1, &pair[1].0);
        }
        let fwd = risk_along_path(&path, &pool, &objective(), 5).unwrap();
        let back = risk_along_path(&path.reversed(), &pool, &objective(), 5).unwrap();
        prop_assert!(fwd.eps_c >= 0.0);
        prop_assert_eq!(fwd.eps_c, back.eps_c);
        prop_assert_eq!(fwd.max_risk, back.max_risk);
    }
}

/// With `W′ = W` every path point is a mixture of `W_A` and `W_{Aᶜ}` outputs, so the
/// convex loss keeps the path below the worse of the two dropout networks.
#[test]
fn self_path_is_bounded_by_dropout_stability() {
    for seed in 0..5 {
        let (w, _, pool) = setup(8, seed);
        let obj = objective();
        let path = build_path_2l(&w, &w, seed).unwrap();
        let risk = risk_along_path(&path, &pool, &obj, 64).unwrap();
        let (a, ac) = half_split(8, seed).unwrap();
        let ed = |s: Vec<usize>| dropout_error(&w, &DropoutSpec2L { subset: s }, &pool, &obj).unwrap();
        let bound = pool_risk(&w, &pool, &obj) + ed(a).max(ed(ac));
        assert!(risk.max_risk <= bound + 1e-12, "{} > {bound}", risk.max_risk);
        assert_eq!(risk.start_risk, risk.end_risk);
    }
}

#[test]
fn odd_or_mismatched_widths_are_rejected() {
    let (w, _, _) = setup(5, 0);
    assert!(build_path_2l(&w, &w, 0).is_err());
    let (a, _, _) = setup(4, 0);
    let (b, _, _) = setup(6, 0);
    assert!(build_path_2l(&a, &b, 0).is_err());
}

#[test]
fn dropout_error_of_full_set_is_exactly_zero() {
    let (w, _, pool) = setup(6, 3);
    let spec = DropoutSpec2L {
        subset: (0..6).collect(),
    };
    assert_eq!(dropout_error(&w, &spec, &pool, &objective()).unwrap(), 0.0);
}
