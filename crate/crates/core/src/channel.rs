//! End-to-end flip probability of a cascade of independent binary symmetric
//! channels.
//!
//! A bit arrives flipped iff an odd number of hops flipped it. Two routes are
//! provided: an explicit sum over the odd-cardinality subsets of the hops,
//! which is exponential in the hop count, and the product identity
//! `(1 − Π_j (1 − 2 p_j)) / 2`, which is linear.

use crate::error::{Error, Result};
use crate::numeric::compensated_sum;

/// Largest hop count the odd-subset enumeration accepts.
pub const MAX_ENUMERATED_HOPS: usize = 24;

/// Per-hop flip probabilities `p_1, ..., p_M` of a relay chain.
#[derive(Clone, Debug, PartialEq)]
pub struct ChannelSpec {
    hop_probs: Vec<f64>,
}

impl ChannelSpec {
    pub fn new(hop_probs: Vec<f64>) -> Result<Self> {
        if hop_probs.is_empty() {
            return Err(Error::config("channel needs at least one hop"));
        }
        if let Some((j, p)) = hop_probs
            .iter()
            .enumerate()
            .find(|(_, p)| !(0.0..=1.0).contains(*p))
        {
            return Err(Error::config(format!(
                "hop {} flip probability {p} is outside [0, 1]",
                j + 1
            )));
        }
        Ok(ChannelSpec { hop_probs })
    }

    /// `hops` hops that all flip with probability `p`.
    pub fn uniform(p: f64, hops: usize) -> Result<Self> {
        Self::new(vec![p; hops])
    }

    pub fn hop_probs(&self) -> &[f64] {
        &self.hop_probs
    }

    pub fn hops(&self) -> usize {
        self.hop_probs.len()
    }

    /// Hops flipping more often than not. The algebra still holds, but such a
    /// hop is better modelled as an inverter followed by a `1 − p` channel.
    pub fn hops_above_half(&self) -> Vec<usize> {
        self.hop_probs
            .iter()
            .enumerate()
            .filter(|(_, &p)| p > 0.5)
            .map(|(j, _)| j + 1)
            .collect()
    }

    /// `P(s_i[n] ≠ y_i[n])` by the product identity; valid for any hop count.
    pub fn flip_probability(&self) -> f64 {
        let keep: f64 = self.hop_probs.iter().map(|p| 1.0 - 2.0 * p).product();
        0.5 * (1.0 - keep)
    }

    /// `P(s_i[n] ≠ y_i[n])` as the sum over every odd set of flipping hops.
    pub fn flip_probability_by_enumeration(&self) -> Result<f64> {
        let family = enumerate_odd_subsets(self.hops())?;
        let p = &self.hop_probs;
        Ok(compensated_sum(family.iter().map(|subset| {
            let flipped: f64 = subset.members().map(|j| p[j - 1]).product();
            let kept: f64 = subset.complement().map(|j| 1.0 - p[j - 1]).product();
            flipped * kept
        })))
    }
}

/// Closed form for `M` hops sharing one flip probability.
pub fn flip_probability_equal(p: f64, hops: usize) -> f64 {
    0.5 * (1.0 - (1.0 - 2.0 * p).powi(hops as i32))
}

/// One odd-cardinality subset of the hop indices `{1, ..., M}`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct OddSubset {
    mask: u32,
    hops: usize,
}

impl OddSubset {
    /// Hop indices (1-based) in the subset, ascending.
    pub fn members(self) -> impl Iterator<Item = usize> {
        (1..=self.hops).filter(move |j| self.mask & (1 << (j - 1)) != 0)
    }

    /// Hop indices (1-based) not in the subset, ascending.
    pub fn complement(self) -> impl Iterator<Item = usize> {
        (1..=self.hops).filter(move |j| self.mask & (1 << (j - 1)) == 0)
    }

    pub fn cardinality(self) -> usize {
        self.mask.count_ones() as usize
    }
}

/// All `2^(M−1)` odd-cardinality subsets of `{1, ..., M}`, ordered by
/// cardinality and lexicographically within one cardinality.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct OddSubsetFamily {
    hops: usize,
    masks: Vec<u32>,
}

impl OddSubsetFamily {
    pub fn hops(&self) -> usize {
        self.hops
    }

    pub fn len(&self) -> usize {
        self.masks.len()
    }

    pub fn is_empty(&self) -> bool {
        self.masks.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = OddSubset> + '_ {
        self.masks.iter().map(|&mask| OddSubset {
            mask,
            hops: self.hops,
        })
    }

    /// Members and complements as index lists, for display and tests.
    pub fn to_lists(&self) -> Vec<(Vec<usize>, Vec<usize>)> {
        self.iter()
            .map(|s| (s.members().collect(), s.complement().collect()))
            .collect()
    }
}

pub fn enumerate_odd_subsets(hops: usize) -> Result<OddSubsetFamily> {
    if hops == 0 {
        return Err(Error::config("channel needs at least one hop"));
    }
    if hops > MAX_ENUMERATED_HOPS {
        return Err(Error::EnumerationTooLarge {
            hops,
            limit: MAX_ENUMERATED_HOPS,
        });
    }
    let mut masks = Vec::with_capacity(1 << (hops - 1));
    for size in (1..=hops).step_by(2) {
        // lexicographic walk over `size`-combinations of 0..hops
        let mut idx: Vec<usize> = (0..size).collect();
        loop {
            masks.push(idx.iter().fold(0u32, |m, &i| m | (1 << i)));
            let Some(pos) = (0..size).rev().find(|&k| idx[k] != k + hops - size) else {
                break;
            };
            idx[pos] += 1;
            for k in pos + 1..size {
                idx[k] = idx[k - 1] + 1;
            }
        }
    }
    Ok(OddSubsetFamily { hops, masks })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    /// Walks all 2^M flip patterns and adds up the odd-parity ones.
    fn brute_force(p: &[f64]) -> f64 {
        let m = p.len();
        (0u32..1 << m)
            .filter(|pat| pat.count_ones() % 2 == 1)
            .map(|pat| {
                (0..m)
                    .map(|j| {
                        if pat & (1 << j) != 0 {
                            p[j]
                        } else {
                            1.0 - p[j]
                        }
                    })
                    .product::<f64>()
            })
            .sum()
    }

    #[test]
    fn three_hop_family() {
        let fam = enumerate_odd_subsets(3).unwrap();
        assert_eq!(
            fam.to_lists(),
            vec![
                (vec![1], vec![2, 3]),
                (vec![2], vec![1, 3]),
                (vec![3], vec![1, 2]),
                (vec![1, 2, 3], vec![]),
            ]
        );
    }

    #[test]
    fn single_hop_family() {
        assert_eq!(
            enumerate_odd_subsets(1).unwrap().to_lists(),
            vec![(vec![1], vec![])]
        );
    }

    #[test]
    fn family_sizes_and_parity() {
        for m in 1..=12 {
            let fam = enumerate_odd_subsets(m).unwrap();
            assert_eq!(fam.len(), 1 << (m - 1));
            let mut seen = std::collections::HashSet::new();
            for s in fam.iter() {
                assert_eq!(s.cardinality() % 2, 1);
                assert_eq!(s.members().count() + s.complement().count(), m);
                assert!(seen.insert(s.mask));
            }
        }
        let four = enumerate_odd_subsets(4).unwrap();
        assert!(four.iter().all(|s| matches!(s.cardinality(), 1 | 3)));
    }

    #[test]
    fn four_hop_lexicographic_order() {
        let lists: Vec<Vec<usize>> = enumerate_odd_subsets(4)
            .unwrap()
            .to_lists()
            .into_iter()
            .map(|(m, _)| m)
            .collect();
        assert_eq!(
            lists,
            vec![
                vec![1],
                vec![2],
                vec![3],
                vec![4],
                vec![1, 2, 3],
                vec![1, 2, 4],
                vec![1, 3, 4],
                vec![2, 3, 4]
            ]
        );
    }

    #[test]
    fn enumeration_guard() {
        assert!(matches!(
            enumerate_odd_subsets(25),
            Err(Error::EnumerationTooLarge { hops: 25, .. })
        ));
        assert!(enumerate_odd_subsets(0).is_err());
        let long = ChannelSpec::uniform(0.01, 40).unwrap();
        assert!(long.flip_probability_by_enumeration().is_err());
        assert!((long.flip_probability() - flip_probability_equal(0.01, 40)).abs() < 1e-15);
    }

    #[test]
    fn reference_values() {
        let one = ChannelSpec::new(vec![0.1]).unwrap();
        assert!((one.flip_probability() - 0.1).abs() < 1e-15);
        let three = ChannelSpec::new(vec![0.1, 0.2, 0.3]).unwrap();
        let oracle = brute_force(three.hop_probs());
        assert!((oracle - 0.404).abs() < 1e-12);
        assert!((three.flip_probability() - 0.404).abs() < 1e-12);
        assert!((three.flip_probability_by_enumeration().unwrap() - 0.404).abs() < 1e-12);
        assert_eq!(
            ChannelSpec::new(vec![0.5, 0.01, 0.3])
                .unwrap()
                .flip_probability(),
            0.5
        );
        assert!((flip_probability_equal(0.1, 1) - 0.1).abs() < 1e-15);
        assert!((flip_probability_equal(0.1, 2) - brute_force(&[0.1, 0.1])).abs() < 1e-15);
        assert!((flip_probability_equal(0.1, 2) - 0.18).abs() < 1e-15);
        let far = flip_probability_equal(0.1, 100);
        assert!(far < 0.5 && far > 0.5 - 1e-9);
        for m in 1..100 {
            assert!(flip_probability_equal(0.1, m) < flip_probability_equal(0.1, m + 1));
        }
    }

    #[test]
    fn invalid_specs() {
        assert!(ChannelSpec::new(vec![]).is_err());
        assert!(ChannelSpec::new(vec![0.1, 1.5]).is_err());
        assert!(ChannelSpec::new(vec![f64::NAN]).is_err());
        assert_eq!(
            ChannelSpec::new(vec![0.1, 0.7]).unwrap().hops_above_half(),
            vec![2]
        );
    }

    proptest! {
        #[test]
        fn routes_agree(p in prop::collection::vec(0.0f64..=1.0, 1..=12)) {
            let spec = ChannelSpec::new(p.clone()).unwrap();
            let a = spec.flip_probability();
            let b = spec.flip_probability_by_enumeration().unwrap();
            prop_assert!((a - b).abs() < 1e-12);
            prop_assert!((a - brute_force(&p)).abs() < 1e-12);
        }

        #[test]
        fn permutation_invariant(mut p in prop::collection::vec(0.0f64..=1.0, 1..=10), seed in any::<u64>()) {
            let before = ChannelSpec::new(p.clone()).unwrap().flip_probability_by_enumeration().unwrap();
            let k = (seed as usize) % p.len();
            p.rotate_left(k);
            p.reverse();
            let after = ChannelSpec::new(p).unwrap().flip_probability_by_enumeration().unwrap();
            prop_assert!((before - after).abs() < 1e-12);
        }

        #[test]
        fn at_most_half_for_sub_half_hops(p in prop::collection::vec(0.0f64..=0.5, 1..=16)) {
            let r = ChannelSpec::new(p).unwrap().flip_probability();
            prop_assert!((0.0..=0.5).contains(&r));
        }

        #[test]
        fn half_hop_absorbs(mut p in prop::collection::vec(0.0f64..=1.0, 0..=8), at in any::<prop::sample::Index>()) {
            let pos = at.index(p.len() + 1);
            p.insert(pos, 0.5);
            prop_assert_eq!(ChannelSpec::new(p).unwrap().flip_probability(), 0.5);
        }

        #[test]
        fn equal_closed_form(p in 0.0f64..=1.0, m in 1usize..=12) {
            let spec = ChannelSpec::uniform(p, m).unwrap();
            prop_assert!((spec.flip_probability_by_enumeration().unwrap() - flip_probability_equal(p, m)).abs() < 1e-12);
        }
    }
}
