//! The inverse-limit chain `X₀ = 1, X_{n+1} = F(X_n, X_n)` at finite depth,
//! its embedding-projection pairs and truncation projections, and relation
//! families indexed by its levels.
//!
//! The identification `F(X_n, X_n) = X_{n+1}` is definitional: level `n+1`
//! is literally the evaluated object, so the unfolding isomorphism of the
//! limit is the identity at every level.

use std::sync::Arc;

use serde::Serialize;

use crate::ep::{compose_ep, EpPair};
use crate::error::{Caps, Error, Result};
use crate::functor::{eval_ep_between, FunctorAction, FunctorExpr};
use crate::map::MonotoneMap;
use crate::poset::{same_poset, FinPoset};
use crate::relation::{direct_image, intersect, inverse_image, rel_morphism_witness, union, BinRel};

#[derive(Clone, Debug)]
pub struct DomainChain {
    functor: FunctorExpr,
    depth: usize,
    levels: Vec<Arc<FinPoset>>,
    steps: Vec<EpPair>,
    /// `cum[j] : X_j → X_N`.
    cum: Vec<EpPair>,
    /// `level_pis[n][j]` is `π_j` on `X_n`, for `j ≤ n`.
    level_pis: Vec<Vec<MonotoneMap>>,
}

/// Outcome of checking the truncation projections on every level.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct ProjectionReport {
    /// Tables of `π_0 … π_N` on `X_N`.
    pub tables: Vec<Vec<usize>>,
    pub base_is_bottom: bool,
    pub idempotent: bool,
    pub deflationary: bool,
    pub increasing: bool,
    pub top_is_identity: bool,
    /// `π_{j+1} = F(π_j, π_j)` on every level.
    pub recurrence_holds: bool,
    pub recurrence_checks: usize,
    pub first_failure: Option<String>,
}

impl ProjectionReport {
    pub fn all_hold(&self) -> bool {
        self.first_failure.is_none()
    }
}

/// Builds `X₀ … X_N` with their step and cumulative pairs, verifying every
/// law on the way.
pub fn build_chain(functor: &FunctorExpr, depth: usize, caps: &Caps) -> Result<DomainChain> {
    let one = Arc::new(FinPoset::one());
    let mut levels = vec![one];
    for n in 0..depth {
        let next = functor.obj(&levels[n], &levels[n], caps).map_err(|e| e.at_level(n + 1))?;
        caps.check_size("level", next.size()).map_err(|e| e.at_level(n + 1))?;
        levels.push(next);
    }
    let mut steps = Vec::with_capacity(depth);
    if depth > 0 {
        steps.push(EpPair::bottom_pair(&levels[0], &levels[1])?);
    }
    for n in 1..depth {
        let next = eval_ep_between(functor, &steps[n - 1], &levels[n], &levels[n + 1])?;
        steps.push(next);
    }
    let mut level_pis = Vec::with_capacity(depth + 1);
    let mut cum = Vec::new();
    for n in 0..=depth {
        let mut to_n = vec![EpPair::identity(&levels[n])];
        for j in (0..n).rev() {
            let c = compose_ep(&steps[j], &to_n[0])?;
            to_n.insert(0, c);
        }
        level_pis.push(to_n.iter().map(EpPair::retract).collect::<Vec<_>>());
        if n == depth {
            cum = to_n;
        }
    }
    let chain = DomainChain { functor: functor.clone(), depth, levels, steps, cum, level_pis };
    let report = chain.verify_projections()?;
    if let Some(f) = report.first_failure {
        return Err(Error::LawViolation { law: "truncation projections".into(), witness: f });
    }
    Ok(chain)
}

impl DomainChain {
    pub fn functor(&self) -> &FunctorExpr {
        &self.functor
    }

    pub fn depth(&self) -> usize {
        self.depth
    }

    pub fn levels(&self) -> &[Arc<FinPoset>] {
        &self.levels
    }

    pub fn level(&self, n: usize) -> &Arc<FinPoset> {
        &self.levels[n]
    }

    /// `X_N`, the truncation of the solution.
    pub fn top(&self) -> &Arc<FinPoset> {
        &self.levels[self.depth]
    }

    pub fn sizes(&self) -> Vec<usize> {
        self.levels.iter().map(|l| l.size()).collect()
    }

    /// `step_n : X_n → X_{n+1}`.
    pub fn steps(&self) -> &[EpPair] {
        &self.steps
    }

    /// `cum_j : X_j → X_N`.
    pub fn cum(&self) -> &[EpPair] {
        &self.cum
    }

    /// `π_j` on `X_N`; indices beyond the depth give the identity.
    pub fn pi(&self, j: usize) -> &MonotoneMap {
        &self.level_pis[self.depth][j.min(self.depth)]
    }

    pub fn pis(&self) -> &[MonotoneMap] {
        &self.level_pis[self.depth]
    }

    /// `π_j` on `X_n`, clamped to the identity for `j ≥ n`.
    pub fn level_pi(&self, n: usize, j: usize) -> &MonotoneMap {
        &self.level_pis[n][j.min(n)]
    }

    /// The chain truncated at depth `m ≤ N`.
    pub fn prefix(&self, m: usize) -> Result<DomainChain> {
        if m > self.depth {
            return Err(Error::TypeMismatch(format!("prefix depth {m} exceeds chain depth {}", self.depth)));
        }
        let mut cum = vec![EpPair::identity(&self.levels[m])];
        for j in (0..m).rev() {
            let c = compose_ep(&self.steps[j], &cum[0])?;
            cum.insert(0, c);
        }
        Ok(DomainChain {
            functor: self.functor.clone(),
            depth: m,
            levels: self.levels[..=m].to_vec(),
            steps: self.steps[..m].to_vec(),
            cum,
            level_pis: self.level_pis[..=m].to_vec(),
        })
    }

    /// Checks every truncation-projection invariant on every level.
    pub fn verify_projections(&self) -> Result<ProjectionReport> {
        let mut failures: Vec<String> = Vec::new();
        let (mut base, mut idem, mut defl, mut incr, mut rec) = (true, true, true, true, true);
        let mut recurrence_checks = 0;
        for (n, pis) in self.level_pis.iter().enumerate() {
            let x = &self.levels[n];
            if pis[0].table().iter().any(|&y| y != x.bottom()) {
                base = false;
                failures.push(format!("π_0 on level {n} is not constant ⊥"));
            }
            for (j, pi) in pis.iter().enumerate() {
                if !pi.is_idempotent() {
                    idem = false;
                    failures.push(format!("π_{j} on level {n} is not idempotent"));
                }
                if !pi.is_deflationary() {
                    defl = false;
                    failures.push(format!("π_{j} on level {n} is not below the identity"));
                }
                if j > 0 && !pis[j - 1].leq(pi) {
                    incr = false;
                    failures.push(format!("π_{} ⋢ π_{j} on level {n}", j - 1));
                }
            }
            if n > 0 {
                for j in 0..n {
                    let prev = &self.level_pis[n - 1][j];
                    let image = self.functor.map_between(prev, prev, x, x)?;
                    recurrence_checks += 1;
                    if image != pis[j + 1] {
                        rec = false;
                        failures.push(format!("π_{} on level {n} differs from F(π_{j}, π_{j})", j + 1));
                    }
                }
            }
        }
        let top_id = self.pis()[self.depth].is_identity();
        if !top_id {
            failures.push("π_N is not the identity".into());
        }
        Ok(ProjectionReport {
            tables: self.pis().iter().map(|p| p.table().to_vec()).collect(),
            base_is_bottom: base,
            idempotent: idem,
            deflationary: defl,
            increasing: incr,
            top_is_identity: top_id,
            recurrence_holds: rec,
            recurrence_checks,
            first_failure: failures.into_iter().next(),
        })
    }

    /// Recomputes `F(X_n, X_n)` and compares it with `X_{n+1}`.
    pub fn levels_identified(&self, caps: &Caps) -> Result<bool> {
        for n in 0..self.depth {
            let again = self.functor.obj(&self.levels[n], &self.levels[n], caps)?;
            if *again != *self.levels[n + 1] {
                return Ok(false);
            }
        }
        Ok(true)
    }
}

/// `π_0 … π_N` on `X_N` together with the verification report.
pub fn truncation_projections(chain: &DomainChain) -> Result<(Vec<MonotoneMap>, ProjectionReport)> {
    Ok((chain.pis().to_vec(), chain.verify_projections()?))
}

/// One admissible relation `R_n` on each level `X_n`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
#[serde(transparent)]
pub struct RelFamily {
    rels: Vec<BinRel>,
}

impl RelFamily {
    pub fn new(chain: &DomainChain, rels: Vec<BinRel>) -> Result<Self> {
        if rels.len() != chain.depth + 1 {
            return Err(Error::TypeMismatch(format!(
                "family has {} levels, chain has {}",
                rels.len(),
                chain.depth + 1
            )));
        }
        let rels = rels
            .iter()
            .enumerate()
            .map(|(n, r)| r.recarrier(chain.level(n)))
            .collect::<Result<Vec<_>>>()?;
        Ok(RelFamily { rels })
    }

    fn levelwise(chain: &DomainChain, f: impl Fn(&Arc<FinPoset>) -> BinRel) -> Self {
        RelFamily { rels: chain.levels.iter().map(f).collect() }
    }

    pub fn total(chain: &DomainChain) -> Self {
        Self::levelwise(chain, BinRel::total)
    }

    pub fn bottom_only(chain: &DomainChain) -> Self {
        Self::levelwise(chain, BinRel::bottom_only)
    }

    pub fn diagonal(chain: &DomainChain) -> Self {
        Self::levelwise(chain, BinRel::diagonal)
    }

    /// Restrictions `R_n = cum_n.e* R` of a relation on `X_N`.
    pub fn from_top(chain: &DomainChain, r: &BinRel) -> Result<Self> {
        let rels = chain.cum.iter().map(|c| inverse_image(c.e(), r)).collect::<Result<Vec<_>>>()?;
        Ok(RelFamily { rels })
    }

    pub fn rels(&self) -> &[BinRel] {
        &self.rels
    }

    pub fn level(&self, n: usize) -> &BinRel {
        &self.rels[n]
    }

    pub fn top(&self) -> &BinRel {
        self.rels.last().expect("families have at least one level")
    }

    pub fn depth(&self) -> usize {
        self.rels.len() - 1
    }

    pub fn is_admissible(&self) -> bool {
        self.rels.iter().all(BinRel::is_admissible)
    }

    /// `R_n ⊆ S_n` at every level.
    pub fn is_subset(&self, other: &RelFamily) -> Result<bool> {
        for (a, b) in self.rels.iter().zip(&other.rels) {
            if !a.is_subset(b)? {
                return Ok(false);
            }
        }
        Ok(true)
    }

    /// First level where the families differ, with the symmetric difference.
    pub fn first_difference(&self, other: &RelFamily) -> Option<(usize, Vec<(usize, usize)>)> {
        self.rels
            .iter()
            .zip(&other.rels)
            .enumerate()
            .find(|(_, (a, b))| a != b)
            .map(|(n, (a, b))| (n, a.difference_pairs(b)))
    }

    /// Levels `0..=n` agree.
    pub fn agrees_up_to(&self, other: &RelFamily, n: usize) -> bool {
        let n = n.min(self.depth());
        self.rels[..=n] == other.rels[..=n]
    }

    /// First violation of `R_n = step_n.e* R_{n+1}`.
    pub fn coherence_witness(&self, chain: &DomainChain) -> Result<Option<(usize, (usize, usize))>> {
        for (n, step) in chain.steps.iter().enumerate() {
            let back = inverse_image(step.e(), &self.rels[n + 1])?;
            if let Some(&pair) = back.difference_pairs(&self.rels[n]).first() {
                return Ok(Some((n, pair)));
            }
        }
        Ok(None)
    }

    /// Coherence plus `step_n.p : R_{n+1} → R_n` at every level: the family
    /// is a chain of embeddings between relations.
    pub fn check_coherent(&self, chain: &DomainChain) -> Result<()> {
        if let Some((level, pair)) = self.coherence_witness(chain)? {
            return Err(Error::CoherenceViolation { level, pair });
        }
        for (n, step) in chain.steps.iter().enumerate() {
            if let Some(pair) = rel_morphism_witness(step.p(), &self.rels[n + 1], &self.rels[n])? {
                return Err(Error::CoherenceViolation { level: n + 1, pair });
            }
        }
        Ok(())
    }
}

/// `⋂_n (cum_n.p)* R_n`.
pub fn glue_meet(chain: &DomainChain, fam: &RelFamily) -> Result<BinRel> {
    let parts = chain
        .cum
        .iter()
        .zip(&fam.rels)
        .map(|(c, r)| inverse_image(c.p(), r))
        .collect::<Result<Vec<_>>>()?;
    intersect(chain.top(), &parts)
}

/// `⋃_n (cum_n.e)_! R_n`.
pub fn glue_join(chain: &DomainChain, fam: &RelFamily) -> Result<BinRel> {
    let parts = chain
        .cum
        .iter()
        .zip(&fam.rels)
        .map(|(c, r)| direct_image(c.e(), r))
        .collect::<Result<Vec<_>>>()?;
    union(chain.top(), &parts)
}

/// Glues a chain of relations into one relation on `X_N`, computing both
/// the meet and the join presentation and requiring them to agree.
pub fn glue_family(chain: &DomainChain, fam: &RelFamily) -> Result<BinRel> {
    if fam.rels.len() != chain.depth + 1 || !same_poset(fam.top().carrier(), chain.top()) {
        return Err(Error::TypeMismatch("family does not live on this chain".into()));
    }
    fam.check_coherent(chain)?;
    let meet = glue_meet(chain, fam)?;
    let join = glue_join(chain, fam)?;
    if let Some(&pair) = meet.difference_pairs(&join).first() {
        let present_in = if meet.contains(pair.0, pair.1) { "meet" } else { "join" };
        return Err(Error::DualMismatch { pair, present_in });
    }
    Ok(meet)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::poset::Elem;

    fn lazy_nat() -> FunctorExpr {
        FunctorExpr::sum(FunctorExpr::one(), FunctorExpr::var())
    }

    fn reflexive() -> FunctorExpr {
        FunctorExpr::lift(FunctorExpr::fun(FunctorExpr::var(), FunctorExpr::var()))
    }

    fn streams() -> FunctorExpr {
        let c2 = Arc::new(FinPoset::chain(2).unwrap());
        let k = FunctorExpr::constant(c2.clone(), BinRel::diagonal(&c2), "diag").unwrap();
        FunctorExpr::lift(FunctorExpr::prod(k, FunctorExpr::var()))
    }

    #[test]
    fn level_sizes_match_recurrences() {
        let caps = Caps::default();
        let lazy = build_chain(&lazy_nat(), 6, &caps).unwrap();
        // |X_{n+1}| = |X_n| + 2 from |X_0| = 1.
        let oracle: Vec<usize> = (0..=6).map(|n| 1 + 2 * n).collect();
        assert_eq!(lazy.sizes(), oracle);
        let s = build_chain(&streams(), 4, &caps).unwrap();
        // |X_{n+1}| = 2|X_n| + 1.
        let oracle: Vec<usize> = (0..=4).scan(1usize, |a, i| { let v = *a; if i < 4 { *a = 2 * *a + 1 }; Some(v) }).collect();
        assert_eq!(s.sizes(), oracle);
        assert_eq!(build_chain(&reflexive(), 3, &caps).unwrap().sizes(), vec![1, 2, 4, 36]);
    }

    #[test]
    fn reflexive_depth_four_hits_the_cap() {
        let err = build_chain(&reflexive(), 4, &Caps::default()).unwrap_err();
        assert!(matches!(err, Error::SizeCapExceeded { level: Some(4), .. }), "{err:?}");
    }

    #[test]
    fn projections_verified() {
        for (f, n) in [(lazy_nat(), 6), (streams(), 4), (reflexive(), 3)] {
            let chain = build_chain(&f, n, &Caps::default()).unwrap();
            let (pis, report) = truncation_projections(&chain).unwrap();
            assert!(report.all_hold(), "{report:?}");
            assert!(pis[n].is_identity());
            assert!(pis[0].table().iter().all(|&y| y == chain.top().bottom()));
            assert!(chain.levels_identified(&Caps::default()).unwrap());
        }
    }

    /// Height of a lazy natural: ⊥ is 0, `inl *` is 1, `inr x` is 1 + height x.
    fn lazy_height(chain: &DomainChain, n: usize, x: usize) -> usize {
        let lvl = chain.level(n);
        match lvl.tag(x) {
            Elem::Bot | Elem::Atom(_) => 0,
            Elem::Inl(_) => 1,
            Elem::Inr(y) => 1 + lazy_height(chain, n - 1, *y),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn lazy_nat_projections_truncate_by_height() {
        let chain = build_chain(&lazy_nat(), 6, &Caps::default()).unwrap();
        for j in 0..=6 {
            let pi = chain.pi(j);
            for x in chain.top().elements() {
                let h = lazy_height(&chain, 6, x);
                if h <= j {
                    assert_eq!(pi.apply(x), x);
                } else {
                    assert_eq!(lazy_height(&chain, 6, pi.apply(x)), j);
                }
            }
        }
    }

    #[test]
    fn gluing_examples() {
        let chain = build_chain(&lazy_nat(), 4, &Caps::default()).unwrap();
        let top = chain.top();
        assert_eq!(glue_family(&chain, &RelFamily::total(&chain)).unwrap(), BinRel::total(top));
        assert_eq!(glue_family(&chain, &RelFamily::diagonal(&chain)).unwrap(), BinRel::diagonal(top));
        let b = RelFamily::bottom_only(&chain);
        assert_eq!(glue_meet(&chain, &b).unwrap(), glue_join(&chain, &b).unwrap());
        assert_eq!(glue_family(&chain, &b).unwrap(), BinRel::bottom_only(top));
    }

    #[test]
    fn incoherent_family_rejected() {
        let chain = build_chain(&lazy_nat(), 2, &Caps::default()).unwrap();
        let mut rels = RelFamily::diagonal(&chain).rels().to_vec();
        rels[1] = BinRel::total(chain.level(1));
        let fam = RelFamily::new(&chain, rels).unwrap();
        assert!(matches!(glue_family(&chain, &fam), Err(Error::CoherenceViolation { level: 1, .. })));
    }

    #[test]
    fn from_top_round_trips_uniform_relations() {
        let chain = build_chain(&lazy_nat(), 3, &Caps::default()).unwrap();
        let d = BinRel::diagonal(chain.top());
        let fam = RelFamily::from_top(&chain, &d).unwrap();
        assert_eq!(fam, RelFamily::diagonal(&chain));
        assert_eq!(glue_family(&chain, &fam).unwrap(), d);
    }

    #[test]
    fn prefix_agrees_with_direct_build() {
        let full = build_chain(&lazy_nat(), 5, &Caps::default()).unwrap();
        let direct = build_chain(&lazy_nat(), 3, &Caps::default()).unwrap();
        let pre = full.prefix(3).unwrap();
        assert_eq!(pre.sizes(), direct.sizes());
        for j in 0..=3 {
            assert_eq!(pre.pi(j).table(), direct.pi(j).table());
        }
    }
}
