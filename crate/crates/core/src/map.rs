//! Monotone maps between finite pointed posets.

use std::sync::Arc;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::poset::{same_poset, FinPoset};

/// A monotone (hence, at finite scale, continuous) map, stored as a table
/// indexed by domain element ids.
#[derive(Clone, Debug, Serialize)]
pub struct MonotoneMap {
    #[serde(skip)]
    dom: Arc<FinPoset>,
    #[serde(skip)]
    cod: Arc<FinPoset>,
    table: Vec<usize>,
}

impl PartialEq for MonotoneMap {
    fn eq(&self, other: &Self) -> bool {
        self.table == other.table && same_poset(&self.dom, &other.dom) && same_poset(&self.cod, &other.cod)
    }
}

impl Eq for MonotoneMap {}

impl MonotoneMap {
    /// Checks the table and monotonicity.
    pub fn new(dom: Arc<FinPoset>, cod: Arc<FinPoset>, table: Vec<usize>) -> Result<Self> {
        if table.len() != dom.size() {
            return Err(Error::TypeMismatch(format!(
                "map table has {} entries for a domain of size {}",
                table.len(),
                dom.size()
            )));
        }
        if let Some(&bad) = table.iter().find(|&&y| y >= cod.size()) {
            return Err(Error::ElementOutOfRange { id: bad, size: cod.size() });
        }
        for x in dom.elements() {
            for y in dom.elements() {
                if dom.leq(x, y) && !cod.leq(table[x], table[y]) {
                    return Err(Error::NotMonotone { x, y });
                }
            }
        }
        Ok(MonotoneMap { dom, cod, table })
    }

    /// For tables produced by constructions that are monotone by design.
    pub(crate) fn new_unchecked(dom: Arc<FinPoset>, cod: Arc<FinPoset>, table: Vec<usize>) -> Self {
        debug_assert_eq!(table.len(), dom.size());
        MonotoneMap { dom, cod, table }
    }

    pub fn identity(x: &Arc<FinPoset>) -> Self {
        Self::new_unchecked(x.clone(), x.clone(), x.elements().collect())
    }

    pub fn constant(dom: &Arc<FinPoset>, cod: &Arc<FinPoset>, y: usize) -> Self {
        Self::new_unchecked(dom.clone(), cod.clone(), vec![y; dom.size()])
    }

    /// The least map `dom → cod`.
    pub fn const_bottom(dom: &Arc<FinPoset>, cod: &Arc<FinPoset>) -> Self {
        Self::constant(dom, cod, cod.bottom())
    }

    pub fn dom(&self) -> &Arc<FinPoset> {
        &self.dom
    }

    pub fn cod(&self) -> &Arc<FinPoset> {
        &self.cod
    }

    pub fn table(&self) -> &[usize] {
        &self.table
    }

    #[inline]
    pub fn apply(&self, x: usize) -> usize {
        self.table[x]
    }

    /// `self ∘ inner`.
    pub fn after(&self, inner: &MonotoneMap) -> Result<MonotoneMap> {
        if !same_poset(&inner.cod, &self.dom) {
            return Err(Error::TypeMismatch("composite of maps with mismatched carriers".into()));
        }
        let table = inner.table.iter().map(|&y| self.table[y]).collect();
        Ok(Self::new_unchecked(inner.dom.clone(), self.cod.clone(), table))
    }

    /// Pointwise order `self ⊑ other`.
    pub fn leq(&self, other: &MonotoneMap) -> bool {
        self.table.len() == other.table.len()
            && self.table.iter().zip(&other.table).all(|(&a, &b)| self.cod.leq(a, b))
    }

    pub fn is_identity(&self) -> bool {
        same_poset(&self.dom, &self.cod) && self.table.iter().enumerate().all(|(i, &y)| i == y)
    }

    pub fn is_idempotent(&self) -> bool {
        same_poset(&self.dom, &self.cod) && self.table.iter().all(|&y| self.table[y] == y)
    }

    /// `self ⊑ id`, for endomaps.
    pub fn is_deflationary(&self) -> bool {
        self.table.iter().enumerate().all(|(x, &y)| self.cod.leq(y, x))
    }

    pub fn preserves_bottom(&self) -> bool {
        self.table[self.dom.bottom()] == self.cod.bottom()
    }
}

/// All monotone maps `dom → cod`, in a deterministic order.
pub fn all_monotone_maps(dom: &Arc<FinPoset>, cod: &Arc<FinPoset>, limit: usize) -> Result<Vec<MonotoneMap>> {
    Ok(crate::poset::monotone_tables(dom, cod, limit, |_, _| true)?
        .into_iter()
        .map(|t| MonotoneMap::new_unchecked(dom.clone(), cod.clone(), t))
        .collect())
}

/// Limit of an increasing sequence of elements: its eventual value.
pub fn chain_limit(poset: &FinPoset, seq: &[usize]) -> Result<usize> {
    let last = *seq.last().ok_or_else(|| Error::TypeMismatch("empty sequence has no limit".into()))?;
    for (i, &x) in seq.iter().enumerate() {
        if x >= poset.size() {
            return Err(Error::ElementOutOfRange { id: x, size: poset.size() });
        }
        if i > 0 && !poset.leq(seq[i - 1], x) {
            return Err(Error::NotAChain { index: i });
        }
    }
    Ok(last)
}

/// Limit of a pointwise-increasing sequence of maps.
pub fn map_chain_limit(seq: &[MonotoneMap]) -> Result<MonotoneMap> {
    let last = seq.last().ok_or_else(|| Error::TypeMismatch("empty sequence has no limit".into()))?;
    for i in 1..seq.len() {
        if !same_poset(seq[i - 1].dom(), seq[i].dom()) || !same_poset(seq[i - 1].cod(), seq[i].cod()) {
            return Err(Error::TypeMismatch("maps in a chain must share carriers".into()));
        }
        if !seq[i - 1].leq(&seq[i]) {
            return Err(Error::NotAChain { index: i });
        }
    }
    Ok(last.clone())
}
