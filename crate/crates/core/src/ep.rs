//! Embedding-projection pairs.

use std::sync::Arc;

use serde::Serialize;

use crate::error::{EpLaw, Error, Result};
use crate::map::{all_monotone_maps, MonotoneMap};
use crate::poset::{same_poset, FinPoset};

/// `e : X → Y` and `p : Y → X` with `p∘e = id` and `e∘p ⊑ id`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct EpPair {
    e: MonotoneMap,
    p: MonotoneMap,
}

impl EpPair {
    pub fn e(&self) -> &MonotoneMap {
        &self.e
    }

    pub fn p(&self) -> &MonotoneMap {
        &self.p
    }

    /// Source of the embedding.
    pub fn source(&self) -> &Arc<FinPoset> {
        self.e.dom()
    }

    /// Target of the embedding.
    pub fn target(&self) -> &Arc<FinPoset> {
        self.e.cod()
    }

    pub fn identity(x: &Arc<FinPoset>) -> Self {
        let id = MonotoneMap::identity(x);
        EpPair { e: id.clone(), p: id }
    }

    /// The pair `1 → X` with `e = ⊥`, the start of every inverse-limit chain.
    pub fn bottom_pair(one: &Arc<FinPoset>, x: &Arc<FinPoset>) -> Result<Self> {
        if one.size() != 1 {
            return Err(Error::TypeMismatch("bottom pair needs a one-point source".into()));
        }
        verify_ep_pair(MonotoneMap::const_bottom(one, x), MonotoneMap::const_bottom(x, one))
    }

    /// The idempotent deflation `e∘p` on the target.
    pub fn retract(&self) -> MonotoneMap {
        self.e.after(&self.p).expect("ep pair carriers agree")
    }
}

/// Checks both laws and packages the pair.
pub fn verify_ep_pair(e: MonotoneMap, p: MonotoneMap) -> Result<EpPair> {
    if !same_poset(e.dom(), p.cod()) || !same_poset(e.cod(), p.dom()) {
        return Err(Error::TypeMismatch("embedding and projection carriers do not match".into()));
    }
    for x in e.dom().elements() {
        if p.apply(e.apply(x)) != x {
            return Err(Error::NotEp { law: EpLaw::Retraction, witness: x });
        }
    }
    for y in e.cod().elements() {
        if !e.cod().leq(e.apply(p.apply(y)), y) {
            return Err(Error::NotEp { law: EpLaw::Deflation, witness: y });
        }
    }
    Ok(EpPair { e, p })
}

/// The unique projection of an embedding.
///
/// Tries `p(y) = max { x | e(x) ⊑ y }` first and falls back to an
/// exhaustive search over monotone maps `Y → X`.
pub fn projection_of(e: &MonotoneMap) -> Result<MonotoneMap> {
    if let Some(p) = greatest_preimage(e) {
        if verify_ep_pair(e.clone(), p.clone()).is_ok() {
            return Ok(p);
        }
    }
    let mut found = projection_candidates(e, 1_000_000)?;
    match found.len() {
        0 => Err(Error::NotAnEmbedding),
        1 => Ok(found.pop().expect("one candidate")),
        k => Err(Error::InternalInvariantViolation(format!("{k} distinct projections for one embedding"))),
    }
}

fn greatest_preimage(e: &MonotoneMap) -> Option<MonotoneMap> {
    let (x, y) = (e.dom(), e.cod());
    let mut table = Vec::with_capacity(y.size());
    for b in y.elements() {
        let below: Vec<usize> = x.elements().filter(|&a| y.leq(e.apply(a), b)).collect();
        let top = below.iter().copied().find(|&a| below.iter().all(|&c| x.leq(c, a)))?;
        table.push(top);
    }
    MonotoneMap::new(y.clone(), x.clone(), table).ok()
}

/// Every monotone `p` for which `(e, p)` is an ep pair, by exhaustive search.
pub fn projection_candidates(e: &MonotoneMap, limit: usize) -> Result<Vec<MonotoneMap>> {
    Ok(all_monotone_maps(e.cod(), e.dom(), limit)?
        .into_iter()
        .filter(|p| verify_ep_pair(e.clone(), p.clone()).is_ok())
        .collect())
}

/// `f` followed by `g`: `(g.e ∘ f.e, f.p ∘ g.p)`, with laws re-verified.
pub fn compose_ep(f: &EpPair, g: &EpPair) -> Result<EpPair> {
    if !same_poset(f.target(), g.source()) {
        return Err(Error::TypeMismatch("ep pairs do not compose: target and source differ".into()));
    }
    verify_ep_pair(g.e.after(&f.e)?, f.p.after(&g.p)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::poset::{validate_poset, RawPoset};

    fn ch(n: usize) -> Arc<FinPoset> {
        Arc::new(FinPoset::chain(n).unwrap())
    }

    fn one() -> Arc<FinPoset> {
        Arc::new(FinPoset::one())
    }

    #[test]
    fn identity_pair_is_valid() {
        let x = ch(3);
        let id = MonotoneMap::identity(&x);
        assert!(verify_ep_pair(id.clone(), id).is_ok());
    }

    #[test]
    fn bottom_embedding_of_point() {
        let pair = EpPair::bottom_pair(&one(), &ch(2)).unwrap();
        assert_eq!(pair.e().table(), &[0]);
        assert_eq!(pair.p().table(), &[0, 0]);
    }

    #[test]
    fn top_embedding_of_point_is_not_ep() {
        let (o, c2) = (one(), ch(2));
        let e = MonotoneMap::constant(&o, &c2, 1);
        let p = MonotoneMap::const_bottom(&c2, &o);
        assert_eq!(
            verify_ep_pair(e, p).unwrap_err(),
            Error::NotEp { law: EpLaw::Deflation, witness: 0 }
        );
    }

    #[test]
    fn projection_of_identity_and_bottom() {
        let c3 = ch(3);
        assert!(projection_of(&MonotoneMap::identity(&c3)).unwrap().is_identity());
        let e = MonotoneMap::const_bottom(&one(), &ch(2));
        assert_eq!(projection_of(&e).unwrap().table(), &[0, 0]);
    }

    #[test]
    fn projection_of_skipping_inclusion() {
        let (c2, c3) = (ch(2), ch(3));
        let e = MonotoneMap::new(c2.clone(), c3.clone(), vec![0, 2]).unwrap();
        // Oracle: all 9 tables CH3 → CH2, keep the ones satisfying both laws.
        let mut oracle = Vec::new();
        for code in 0..8usize {
            let t = vec![code & 1, code >> 1 & 1, code >> 2 & 1];
            let retraction = (0..2).all(|x| t[e.apply(x)] == x);
            let deflation = (0..3).all(|y| e.apply(t[y]) <= y);
            let monotone = t[0] <= t[1] && t[1] <= t[2];
            if retraction && deflation && monotone {
                oracle.push(t);
            }
        }
        assert_eq!(oracle, vec![vec![0, 0, 1]]);
        assert_eq!(projection_of(&e).unwrap().table(), &oracle[0][..]);
    }

    #[test]
    fn non_embedding_is_rejected() {
        let c2 = ch(2);
        let e = MonotoneMap::new(c2.clone(), c2.clone(), vec![1, 1]).unwrap();
        assert_eq!(projection_of(&e).unwrap_err(), Error::NotAnEmbedding);
    }

    #[test]
    fn composites() {
        let (o, c2, c3) = (one(), ch(2), ch(3));
        let f = EpPair::bottom_pair(&o, &c2).unwrap();
        let e = MonotoneMap::new(c2.clone(), c3.clone(), vec![0, 2]).unwrap();
        let g = verify_ep_pair(e.clone(), projection_of(&e).unwrap()).unwrap();
        assert_eq!(compose_ep(&f, &EpPair::identity(&c2)).unwrap(), f);
        let fg = compose_ep(&f, &g).unwrap();
        assert_eq!(fg.e().table(), &[0]);
        assert_eq!(fg.p().table(), &[0, 0, 0]);
        assert!(matches!(compose_ep(&g, &g), Err(Error::TypeMismatch(_))));
    }

    #[test]
    fn projections_are_unique_at_small_scale() {
        let posets: Vec<Arc<FinPoset>> = [
            RawPoset { elems: 1, le: vec![], bot: 0 },
            RawPoset { elems: 2, le: vec![(0, 1)], bot: 0 },
            RawPoset { elems: 3, le: vec![(0, 1), (0, 2)], bot: 0 },
            RawPoset { elems: 3, le: vec![(0, 1), (1, 2)], bot: 0 },
            RawPoset { elems: 4, le: vec![(0, 1), (0, 2), (1, 3), (2, 3)], bot: 0 },
        ]
        .iter()
        .map(|r| Arc::new(validate_poset(r).unwrap()))
        .collect();
        for x in &posets {
            for y in &posets {
                for e in all_monotone_maps(x, y, 10_000).unwrap() {
                    let cands = projection_candidates(&e, 10_000).unwrap();
                    assert!(cands.len() <= 1);
                    match projection_of(&e) {
                        Ok(p) => {
                            assert_eq!(cands, vec![p.clone()]);
                            let pair = verify_ep_pair(e.clone(), p).unwrap();
                            let pi = pair.retract();
                            assert!(pi.is_idempotent() && pi.is_deflationary());
                        }
                        Err(err) => {
                            assert_eq!(err, Error::NotAnEmbedding);
                            assert!(cands.is_empty());
                        }
                    }
                }
            }
        }
    }
}
