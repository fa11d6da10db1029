use rand::Rng;

use super::IndexMaps;
use crate::datagen::rng::{counter_rng, mix_seed, tags};
use crate::datagen::{init_3l, InitSpec};
use crate::model::Params3L;
use crate::{Error, Result};

/// A wide three-layer network standing in for the neuronal embedding.
///
/// Finite networks are sampled from it by choosing first- and second-layer
/// reference indices i.i.d. uniformly, with replacement.
#[derive(Debug, Clone, PartialEq)]
pub struct RefPool3L {
    pub params: Params3L,
}

impl RefPool3L {
    /// Draws a product-law reference network of widths `(n1_ref, n2_ref)`.
    pub fn new(init: &InitSpec, n1_ref: usize, n2_ref: usize, dim: usize, seed: u64) -> Result<Self> {
        Ok(Self {
            params: init_3l(init, n1_ref, n2_ref, dim, seed)?,
        })
    }

    pub fn widths(&self) -> (usize, usize) {
        self.params.widths()
    }
}

/// The finite network whose entries are the reference entries at `maps`.
pub fn embed_with_maps(reference: &Params3L, maps: &IndexMaps) -> Result<Params3L> {
    reference.select(&maps.c1, &maps.c2)
}

/// Samples `C1: [n1] → [N1_ref]`, `C2: [n2] → [N2_ref]` and the matching network.
pub fn embed_3l(reference: &RefPool3L, n1: usize, n2: usize, seed: u64) -> Result<(Params3L, IndexMaps)> {
    let (r1, r2) = reference.widths();
    if r1 == 0 || r2 == 0 {
        return Err(Error::invalid("reference network is empty"));
    }
    if n1 == 0 || n2 == 0 {
        return Err(Error::invalid("embedded widths must be positive"));
    }
    let key = mix_seed(seed, tags::EMBEDDING);
    let mut rng1 = counter_rng(key, 0);
    let mut rng2 = counter_rng(key, 1);
    let maps = IndexMaps {
        c1: (0..n1).map(|_| rng1.random_range(0..r1)).collect(),
        c2: (0..n2).map(|_| rng2.random_range(0..r2)).collect(),
    };
    Ok((embed_with_maps(&reference.params, &maps)?, maps))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn identity_maps_reproduce_reference() {
        let r = RefPool3L::new(&InitSpec::default(), 5, 4, 3, 1).unwrap();
        assert_eq!(
            embed_with_maps(&r.params, &IndexMaps::identity(5, 4)).unwrap(),
            r.params
        );
    }

    #[test]
    fn duplicated_index_duplicates_rows() {
        let r = RefPool3L::new(&InitSpec::default(), 5, 4, 3, 1).unwrap();
        let maps = IndexMaps {
            c1: vec![2, 2, 0],
            c2: vec![1, 3],
        };
        let w = embed_with_maps(&r.params, &maps).unwrap();
        assert_eq!(w.w1_row(0), w.w1_row(1));
    }

    #[test]
    fn sampled_entries_match_reference() {
        let r = RefPool3L::new(&InitSpec::default(), 7, 6, 2, 9).unwrap();
        let (w, maps) = embed_3l(&r, 10, 12, 4).unwrap();
        for j1 in 0..10 {
            assert_eq!(w.w1_row(j1), r.params.w1_row(maps.c1[j1]));
            for j2 in 0..12 {
                assert_eq!(w.w2_at(j1, j2), r.params.w2_at(maps.c1[j1], maps.c2[j2]));
            }
        }
        for j2 in 0..12 {
            assert_eq!(w.w3()[j2], r.params.w3()[maps.c2[j2]]);
        }
        assert_eq!(embed_3l(&r, 10, 12, 4).unwrap().1, maps);
    }
}
