use super::Pool;
use crate::model::{Network, Objective};
use crate::numeric::CompensatedSum;

/// Monte Carlo risk `(1/M) Σ R(y_m, f(x_m; W))` over a non-empty pool.
pub fn pool_risk<N: Network>(w: &N, pool: &Pool, obj: &Objective) -> f64 {
    let mut ws = w.workspace();
    let mut sum = CompensatedSum::new();
    for (x, y) in pool.iter() {
        sum.add(obj.loss.value(y, w.output(x, obj, &mut ws)));
    }
    sum.value() / pool.len() as f64
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::datagen::{init_2l, InitSpec};
    use crate::model::{forward2, Activation, Loss, Params2L};
    use proptest::prelude::*;

    fn obj() -> Objective {
        Objective::two_layer(Activation::Tanh, Loss::Logistic)
    }

    #[test]
    fn zero_network_balanced_labels_gives_ln2() {
        let pool = Pool::new(
            2,
            vec![1.0, 0.0, 0.0, 1.0, -1.0, 0.5, 0.2, 0.2],
            vec![1.0, -1.0, 1.0, -1.0],
        )
        .unwrap();
        let w = Params2L::zeros(3, 2);
        assert!((pool_risk(&w, &pool, &obj()) - std::f64::consts::LN_2).abs() < 1e-15);
    }

    #[test]
    fn single_sample_and_hand_average() {
        let w = init_2l(&InitSpec::default(), 5, 3, 4).unwrap();
        let xs = [[0.3, -1.0, 0.2], [1.1, 0.0, -0.4], [-0.7, 0.6, 0.9]];
        let ys = [1.0, -0.5, 0.25];
        let per: Vec<f64> = xs
            .iter()
            .zip(ys)
            .map(|(x, y)| Loss::Logistic.value(y, forward2(x, &w, Activation::Tanh).unwrap()))
            .collect();
        let one = Pool::new(3, xs[0].to_vec(), vec![ys[0]]).unwrap();
        assert_eq!(pool_risk(&w, &one, &obj()), per[0]);
        let three = Pool::new(3, xs.concat(), ys.to_vec()).unwrap();
        let expected = per.iter().sum::<f64>() / 3.0;
        assert!((pool_risk(&w, &three, &obj()) - expected).abs() < 1e-14);
    }

    proptest! {
        #[test]
        fn permutation_invariant_and_concatenation_weighted(
            seed in 0u64..1000,
            rot in 0usize..8,
            split in 1usize..7,
        ) {
            let w = init_2l(&InitSpec::default(), 4, 2, seed).unwrap();
            let xs: Vec<f64> = (0..16).map(|i| ((i as f64) * 0.37 + seed as f64).sin() * 1.3).collect();
            let ys: Vec<f64> = (0..8).map(|i| if (i + seed as usize).is_multiple_of(3) { 1.0 } else { -1.0 }).collect();
            let pool = Pool::new(2, xs.clone(), ys.clone()).unwrap();
            let mut rx = xs.clone();
            rx.rotate_left(2 * rot);
            let mut ry = ys.clone();
            ry.rotate_left(rot);
            let rotated = Pool::new(2, rx, ry).unwrap();
            let base = pool_risk(&w, &pool, &obj());
            prop_assert!((base - pool_risk(&w, &rotated, &obj())).abs() < 1e-14);

            let a = Pool::new(2, xs[..2 * split].to_vec(), ys[..split].to_vec()).unwrap();
            let b = Pool::new(2, xs[2 * split..].to_vec(), ys[split..].to_vec()).unwrap();
            let weighted = (split as f64 * pool_risk(&w, &a, &obj())
                + (8 - split) as f64 * pool_risk(&w, &b, &obj())) / 8.0;
            prop_assert!((base - weighted).abs() < 1e-14);
            prop_assert!((base - pool_risk(&w, &a.concat(&b).unwrap(), &obj())).abs() < 1e-14);
        }
    }
}
