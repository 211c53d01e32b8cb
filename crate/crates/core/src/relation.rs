//! Binary relations on finite pointed posets and their lattice operations.
//!
//! A relation is admissible when it contains `(⊥, ⊥)`. Closure under limits
//! of increasing chains is automatic at finite scale, since every chain is
//! eventually constant.

use std::fmt;
use std::sync::Arc;

use fixedbitset::FixedBitSet;
use serde::{Serialize, Serializer};

use crate::error::{Error, Result};
use crate::map::MonotoneMap;
use crate::poset::{same_poset, FinPoset};

/// A set of ordered pairs of elements of one carrier, stored as a `k×k` bitset.
#[derive(Clone)]
pub struct BinRel {
    carrier: Arc<FinPoset>,
    bits: FixedBitSet,
}

impl PartialEq for BinRel {
    fn eq(&self, other: &Self) -> bool {
        self.bits == other.bits && same_poset(&self.carrier, &other.carrier)
    }
}

impl Eq for BinRel {}

impl fmt::Debug for BinRel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_set().entries(self.pairs()).finish()
    }
}

impl Serialize for BinRel {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        self.pairs().serialize(s)
    }
}

impl BinRel {
    pub fn empty(carrier: &Arc<FinPoset>) -> Self {
        let k = carrier.size();
        BinRel { carrier: carrier.clone(), bits: FixedBitSet::with_capacity(k * k) }
    }

    /// All pairs: the top of the lattice.
    pub fn total(carrier: &Arc<FinPoset>) -> Self {
        let mut r = Self::empty(carrier);
        r.bits.insert_range(..);
        r
    }

    pub fn diagonal(carrier: &Arc<FinPoset>) -> Self {
        let mut r = Self::empty(carrier);
        for x in carrier.elements() {
            r.insert(x, x);
        }
        r
    }

    /// `{(⊥, ⊥)}`: the least admissible relation.
    pub fn bottom_only(carrier: &Arc<FinPoset>) -> Self {
        let mut r = Self::empty(carrier);
        let b = carrier.bottom();
        r.insert(b, b);
        r
    }

    /// The order relation `⊑` itself.
    pub fn order(carrier: &Arc<FinPoset>) -> Self {
        Self::from_fn(carrier, |x, y| carrier.leq(x, y))
    }

    pub fn from_fn(carrier: &Arc<FinPoset>, mut f: impl FnMut(usize, usize) -> bool) -> Self {
        let mut r = Self::empty(carrier);
        for x in carrier.elements() {
            for y in carrier.elements() {
                if f(x, y) {
                    r.insert(x, y);
                }
            }
        }
        r
    }

    pub fn from_pairs(carrier: &Arc<FinPoset>, pairs: impl IntoIterator<Item = (usize, usize)>) -> Result<Self> {
        let mut r = Self::empty(carrier);
        let k = carrier.size();
        for (x, y) in pairs {
            for id in [x, y] {
                if id >= k {
                    return Err(Error::ElementOutOfRange { id, size: k });
                }
            }
            r.insert(x, y);
        }
        Ok(r)
    }

    /// Relation whose membership bits are given by a mask over pairs in
    /// row-major order.
    pub(crate) fn from_bits(carrier: &Arc<FinPoset>, bits: FixedBitSet) -> Self {
        debug_assert_eq!(bits.len(), carrier.size() * carrier.size());
        BinRel { carrier: carrier.clone(), bits }
    }

    pub(crate) fn bits(&self) -> &FixedBitSet {
        &self.bits
    }

    pub fn carrier(&self) -> &Arc<FinPoset> {
        &self.carrier
    }

    #[inline]
    pub fn contains(&self, x: usize, y: usize) -> bool {
        self.bits.contains(x * self.carrier.size() + y)
    }

    #[inline]
    pub fn insert(&mut self, x: usize, y: usize) {
        let k = self.carrier.size();
        self.bits.insert(x * k + y);
    }

    pub fn len(&self) -> usize {
        self.bits.count_ones(..)
    }

    pub fn is_empty(&self) -> bool {
        self.bits.is_clear()
    }

    /// Pairs in lexicographic order.
    pub fn pairs(&self) -> Vec<(usize, usize)> {
        let k = self.carrier.size();
        self.bits.ones().map(|i| (i / k, i % k)).collect()
    }

    pub fn is_admissible(&self) -> bool {
        let b = self.carrier.bottom();
        self.contains(b, b)
    }

    fn same_carrier(&self, other: &BinRel) -> Result<()> {
        if same_poset(&self.carrier, &other.carrier) {
            Ok(())
        } else {
            Err(Error::TypeMismatch("relations live on different carriers".into()))
        }
    }

    pub fn is_subset(&self, other: &BinRel) -> Result<bool> {
        self.same_carrier(other)?;
        Ok(self.bits.is_subset(&other.bits))
    }

    /// Symmetric difference as sorted pairs; empty iff equal.
    pub fn difference_pairs(&self, other: &BinRel) -> Vec<(usize, usize)> {
        let k = self.carrier.size();
        self.bits.symmetric_difference(&other.bits).map(|i| (i / k, i % k)).collect()
    }

    /// Same pairs on a structurally equal carrier.
    pub(crate) fn recarrier(&self, carrier: &Arc<FinPoset>) -> Result<BinRel> {
        if !same_poset(&self.carrier, carrier) {
            return Err(Error::TypeMismatch("relation carrier differs from the expected one".into()));
        }
        Ok(BinRel { carrier: carrier.clone(), bits: self.bits.clone() })
    }
}

/// Intersection of a family; the empty family gives the total relation.
pub fn intersect(carrier: &Arc<FinPoset>, family: &[BinRel]) -> Result<BinRel> {
    let mut out = BinRel::total(carrier);
    for r in family {
        out.same_carrier(r)?;
        out.bits.intersect_with(&r.bits);
    }
    Ok(out)
}

/// Union of a family; the empty family gives the empty relation.
pub fn union(carrier: &Arc<FinPoset>, family: &[BinRel]) -> Result<BinRel> {
    let mut out = BinRel::empty(carrier);
    for r in family {
        out.same_carrier(r)?;
        out.bits.union_with(&r.bits);
    }
    Ok(out)
}

/// `f*S = {(x, x') | (f x, f x') ∈ S}`.
pub fn inverse_image(f: &MonotoneMap, s: &BinRel) -> Result<BinRel> {
    if !same_poset(f.cod(), &s.carrier) {
        return Err(Error::TypeMismatch("inverse image: relation is not on the map's codomain".into()));
    }
    Ok(BinRel::from_fn(f.dom(), |x, y| s.contains(f.apply(x), f.apply(y))))
}

/// `f_!R = {(f x, f x') | (x, x') ∈ R} ∪ {(⊥, ⊥)}`, the least admissible `S`
/// with `R ⊆ f*S`.
pub fn direct_image(f: &MonotoneMap, r: &BinRel) -> Result<BinRel> {
    if !same_poset(f.dom(), &r.carrier) {
        return Err(Error::TypeMismatch("direct image: relation is not on the map's domain".into()));
    }
    let mut out = BinRel::bottom_only(f.cod());
    for (x, y) in r.pairs() {
        out.insert(f.apply(x), f.apply(y));
    }
    Ok(out)
}

/// Whether `f : (X, R) → (Y, S)`, i.e. `R ⊆ f*S`.
pub fn is_rel_morphism(f: &MonotoneMap, r: &BinRel, s: &BinRel) -> Result<bool> {
    Ok(rel_morphism_witness(f, r, s)?.is_none())
}

/// First pair of `R` not mapped into `S`, if any.
pub fn rel_morphism_witness(f: &MonotoneMap, r: &BinRel, s: &BinRel) -> Result<Option<(usize, usize)>> {
    if !same_poset(f.dom(), &r.carrier) || !same_poset(f.cod(), &s.carrier) {
        return Err(Error::TypeMismatch("relation morphism: carriers do not match the map".into()));
    }
    let k = r.carrier.size();
    Ok(r.bits.ones().map(|i| (i / k, i % k)).find(|&(x, y)| !s.contains(f.apply(x), f.apply(y))))
}

/// Every admissible relation on the carrier, in order of bitmask.
pub fn enumerate_admissible(carrier: &Arc<FinPoset>, limit: usize) -> Result<Vec<BinRel>> {
    let k = carrier.size();
    let free = k * k - 1;
    if free >= usize::BITS as usize - 1 || (1usize << free) > limit {
        return Err(Error::SizeCapExceeded {
            what: format!("admissible relations on a {k}-element carrier"),
            limit,
            level: None,
        });
    }
    let b = carrier.bottom();
    let bottom_bit = b * k + b;
    let others: Vec<usize> = (0..k * k).filter(|&i| i != bottom_bit).collect();
    let mut out = Vec::with_capacity(1 << free);
    for mask in 0..(1usize << free) {
        let mut bits = FixedBitSet::with_capacity(k * k);
        bits.insert(bottom_bit);
        for (j, &i) in others.iter().enumerate() {
            if mask >> j & 1 == 1 {
                bits.insert(i);
            }
        }
        out.push(BinRel::from_bits(carrier, bits));
    }
    Ok(out)
}
