use rand::seq::SliceRandom;

use crate::datagen::rng::{counter_rng, mix_seed, tags};
use crate::datagen::{pool_risk, Pool};
use crate::model::{Network, Objective, Params2L, Params3L};
use crate::{Error, Result};

fn check_subset(subset: &[usize], n: usize, what: &str) -> Result<()> {
    if subset.is_empty() {
        return Err(Error::invalid(format!("{what} must be non-empty")));
    }
    let mut seen = vec![false; n];
    for &j in subset {
        if j >= n {
            return Err(Error::invalid(format!("{what} index {j} out of range for width {n}")));
        }
        if std::mem::replace(&mut seen[j], true) {
            return Err(Error::invalid(format!("{what} index {j} repeated")));
        }
    }
    Ok(())
}

/// Kept neurons `A ⊂ [n]` of a two-layer network.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DropoutSpec2L {
    pub subset: Vec<usize>,
}

/// Kept units `A1 ⊂ [n1]`, `A2 ⊂ [n2]` of a three-layer network.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DropoutSpec3L {
    pub first: Vec<usize>,
    pub second: Vec<usize>,
}

/// A neuron subset that restricts networks of type `N`.
pub trait Dropout<N: Network> {
    fn apply(&self, w: &N) -> Result<N>;
}

impl Dropout<Params2L> for DropoutSpec2L {
    fn apply(&self, w: &Params2L) -> Result<Params2L> {
        dropout_net_2l(w, self)
    }
}

impl Dropout<Params3L> for DropoutSpec3L {
    fn apply(&self, w: &Params3L) -> Result<Params3L> {
        dropout_net_3l(w, self)
    }
}

/// Restriction to `A`; the output average becomes `1/|A|` through the new width.
pub fn dropout_net_2l(w: &Params2L, spec: &DropoutSpec2L) -> Result<Params2L> {
    check_subset(&spec.subset, w.width(), "dropout subset")?;
    w.select_neurons(&spec.subset)
}

/// Restriction to `A1 × A2` with averages `1/|A1|`, `1/|A2|`.
pub fn dropout_net_3l(w: &Params3L, spec: &DropoutSpec3L) -> Result<Params3L> {
    let (n1, n2) = w.widths();
    check_subset(&spec.first, n1, "first-layer dropout subset")?;
    check_subset(&spec.second, n2, "second-layer dropout subset")?;
    w.select(&spec.first, &spec.second)
}

/// `|R(W) − R(W_A)|` on the pool.
pub fn dropout_error<N: Network, S: Dropout<N>>(w: &N, spec: &S, pool: &Pool, obj: &Objective) -> Result<f64> {
    let dropped = spec.apply(w)?;
    Ok((pool_risk(w, pool, obj) - pool_risk(&dropped, pool, obj)).abs())
}

/// Sorted uniform subset of size `max(1, ⌊n/2⌋)`; draw `index` of the family keyed by `seed`.
pub fn random_half_subset(n: usize, seed: u64, index: u64) -> Vec<usize> {
    let mut perm: Vec<usize> = (0..n).collect();
    perm.shuffle(&mut counter_rng(mix_seed(seed, tags::DROPOUT), index));
    let mut a = perm[..(n / 2).max(1).min(n)].to_vec();
    a.sort_unstable();
    a
}

/// Splits `[n]`, `n` even, into a seeded half `A` and its complement, both sorted.
pub fn half_split(n: usize, seed: u64) -> Result<(Vec<usize>, Vec<usize>)> {
    if n == 0 || !n.is_multiple_of(2) {
        return Err(Error::invalid(format!(
            "half split needs a positive even width, got {n}"
        )));
    }
    let mut perm: Vec<usize> = (0..n).collect();
    perm.shuffle(&mut counter_rng(mix_seed(seed, tags::PATH_SPLIT), 0));
    let (a, c) = perm.split_at(n / 2);
    let (mut a, mut c) = (a.to_vec(), c.to_vec());
    a.sort_unstable();
    c.sort_unstable();
    Ok((a, c))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::datagen::{init_2l, init_3l, InitSpec};
    use crate::model::{forward2, forward3, Activation, Loss};

    fn obj() -> Objective {
        Objective::two_layer(Activation::Tanh, Loss::Logistic)
    }

    fn pool() -> Pool {
        Pool::new(2, vec![0.5, -1.0, 1.2, 0.3, -0.7, 0.9], vec![1.0, -1.0, 1.0]).unwrap()
    }

    #[test]
    fn full_subset_is_identity() {
        let w = init_2l(&InitSpec::default(), 6, 2, 1).unwrap();
        let all = DropoutSpec2L {
            subset: (0..6).collect(),
        };
        assert_eq!(dropout_net_2l(&w, &all).unwrap(), w);
        assert_eq!(dropout_error(&w, &all, &pool(), &obj()).unwrap(), 0.0);
        let w3 = init_3l(&InitSpec::default(), 3, 4, 2, 1).unwrap();
        let all3 = DropoutSpec3L {
            first: (0..3).collect(),
            second: (0..4).collect(),
        };
        assert_eq!(dropout_net_3l(&w3, &all3).unwrap(), w3);
    }

    #[test]
    fn zero_output_weight_gives_zero_network() {
        let w = Params2L::new(vec![1.0, 2.0, 3.0, 4.0], vec![0.0, 5.0], 2).unwrap();
        let d = dropout_net_2l(&w, &DropoutSpec2L { subset: vec![0] }).unwrap();
        assert_eq!(forward2(&[0.3, 0.4], &d, Activation::Tanh).unwrap(), 0.0);
        let w3 = Params3L::new(vec![1.0, 2.0, 3.0, 4.0], vec![1.0, 2.0, 3.0, 4.0], vec![0.0, 1.0], 2).unwrap();
        let spec = DropoutSpec3L {
            first: vec![0, 1],
            second: vec![0],
        };
        let o = forward3(
            &[0.3, 0.4],
            &dropout_net_3l(&w3, &spec).unwrap(),
            Activation::Tanh,
            Activation::Tanh,
        );
        assert_eq!(o.unwrap().output, 0.0);
    }

    #[test]
    fn single_neuron_dropout_by_hand() {
        let w = Params2L::new(vec![0.4, -0.3, 1.0, 0.2], vec![1.5, -0.5], 2).unwrap();
        let p = pool();
        let direct: f64 = p
            .iter()
            .map(|(x, y)| {
                let f = 1.5 * (0.4 * x[0] - 0.3 * x[1]).tanh();
                Loss::Logistic.value(y, f)
            })
            .sum::<f64>()
            / 3.0;
        let full = pool_risk(&w, &p, &obj());
        let err = dropout_error(&w, &DropoutSpec2L { subset: vec![0] }, &p, &obj()).unwrap();
        assert!((err - (full - direct).abs()).abs() < 1e-12);
    }

    #[test]
    fn three_layer_hand_evaluation() {
        let w = Params3L::new(vec![0.5, 0.1, -0.2, 0.7], vec![1.0, 2.0, -1.0, 0.5], vec![0.3, -0.8], 2).unwrap();
        let spec = DropoutSpec3L {
            first: vec![1],
            second: vec![0],
        };
        let x = [0.9, -0.4];
        let h1 = (-0.2 * 0.9 + 0.7 * -0.4f64).tanh();
        let expected = 0.3 * (-h1).tanh();
        let got = forward3(
            &x,
            &dropout_net_3l(&w, &spec).unwrap(),
            Activation::Tanh,
            Activation::Tanh,
        )
        .unwrap();
        assert!((got.output - expected).abs() < 1e-14);
    }

    #[test]
    fn duplicated_pair_restriction_gap() {
        // Neurons 0 and 1 identical, neuron 2 distinct; dropping neuron 1 keeps
        // the pair's weight share at 1/2 instead of 2/3.
        let w = Params2L::new(vec![0.6, 0.6, -1.0], vec![2.0, 2.0, 1.0], 1).unwrap();
        let p = Pool::new(1, vec![0.8], vec![1.0]).unwrap();
        let s = (0.6f64 * 0.8).tanh();
        let t = (-0.8f64).tanh();
        let full = Loss::Logistic.value(1.0, (4.0 * s + t) / 3.0);
        let drop = Loss::Logistic.value(1.0, (2.0 * s + t) / 2.0);
        let err = dropout_error(&w, &DropoutSpec2L { subset: vec![0, 2] }, &p, &obj()).unwrap();
        assert!((err - (full - drop).abs()).abs() < 1e-14);
        // Survivor carrying the dropped twin's weight, with the 1/|A| factor undone.
        let fixed = Params2L::new(vec![0.6, -1.0], vec![4.0 * 2.0 / 3.0, 2.0 / 3.0], 1).unwrap();
        assert!((pool_risk(&fixed, &p, &obj()) - full).abs() < 1e-14);
    }

    #[test]
    fn invalid_subsets_rejected() {
        let w = init_2l(&InitSpec::default(), 4, 2, 1).unwrap();
        for bad in [vec![], vec![4], vec![1, 1]] {
            assert!(dropout_net_2l(&w, &DropoutSpec2L { subset: bad }).is_err());
        }
        assert!(half_split(5, 0).is_err());
    }

    #[test]
    fn half_subsets_are_seeded_and_sized() {
        let a = random_half_subset(10, 3, 0);
        assert_eq!(a.len(), 5);
        assert_eq!(a, random_half_subset(10, 3, 0));
        assert_ne!(a, random_half_subset(10, 3, 1));
        assert_eq!(random_half_subset(1, 0, 0), vec![0]);
        let (a, c) = half_split(8, 2).unwrap();
        let mut all = [a, c].concat();
        all.sort_unstable();
        assert_eq!(all, (0..8).collect::<Vec<_>>());
    }
}
