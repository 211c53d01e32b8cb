//! Law suites over small posets: functor laws (identity, composition,
//! local monotonicity, relational functoriality), the basic properties of
//! relation morphisms, and the image/pullback adjunction.

use std::collections::HashMap;
use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::error::{Caps, Error, Result};
use crate::functor::{map_table, poset_literal, FunctorAction, FunctorExpr};
use crate::map::{all_monotone_maps, MonotoneMap};
use crate::poset::{enumerate_pointed_posets, FinPoset};
use crate::relation::{direct_image, enumerate_admissible, intersect, inverse_image, is_rel_morphism, union, BinRel};

#[derive(Clone, Debug, Serialize)]
pub struct LawBudget {
    /// Carriers are all pointed posets with at most this many elements.
    pub max_carrier: usize,
    /// Relations per carrier are exhaustive up to this many admissible ones,
    /// otherwise a fixed pool plus seeded extras.
    pub relation_pool_limit: usize,
    pub extra_relations: usize,
    /// Upper bound on relational checks; exceeding it marks the run partial.
    pub max_relational_checks: u64,
    pub seed: u64,
    #[serde(skip)]
    pub caps: Caps,
}

impl Default for LawBudget {
    fn default() -> Self {
        LawBudget {
            max_carrier: 3,
            relation_pool_limit: 8,
            extra_relations: 3,
            max_relational_checks: 20_000_000,
            seed: 0,
            caps: Caps::default(),
        }
    }
}

#[derive(Clone, Debug, Default, Serialize)]
pub struct FunctorLawReport {
    pub functor: String,
    pub carriers: usize,
    pub identity_checks: u64,
    pub composition_checks: u64,
    pub monotonicity_checks: u64,
    pub relational_checks: u64,
    /// Every map pair was covered and every carrier's relations were
    /// enumerated in full.
    pub exhaustive: bool,
}

/// A stage is a carrier used in both argument positions; a morphism of
/// stages `A → B` is a pair `(u : B → A, v : A → B)`.
struct Stage {
    carrier: Arc<FinPoset>,
    image: Arc<FinPoset>,
    relations: Vec<BinRel>,
    exhaustive: bool,
}

fn relation_pool(x: &Arc<FinPoset>, budget: &LawBudget, rng: &mut ChaCha8Rng) -> Result<(Vec<BinRel>, bool)> {
    let k = x.size();
    if k * k - 1 < usize::BITS as usize && (1usize << (k * k - 1)) <= budget.relation_pool_limit {
        return Ok((enumerate_admissible(x, budget.relation_pool_limit)?, true));
    }
    let order = BinRel::order(x);
    let converse = BinRel::from_fn(x, |a, b| order.contains(b, a));
    let mut pool = vec![BinRel::bottom_only(x), BinRel::diagonal(x), BinRel::total(x), order, converse];
    for _ in 0..budget.extra_relations {
        let mut r = BinRel::from_fn(x, |_, _| rng.gen_bool(0.5));
        r.insert(x.bottom(), x.bottom());
        pool.push(r);
    }
    pool.dedup();
    Ok((pool, false))
}

fn violation(law: &str, witness: String) -> Error {
    Error::LawViolation { law: law.into(), witness }
}

pub fn check_functor_laws(f: &FunctorExpr, budget: &LawBudget) -> Result<FunctorLawReport> {
    check_functor_laws_with(f, &f.to_string(), budget)
}

/// As [`check_functor_laws`], for any implementation of the three actions.
pub fn check_functor_laws_with<A: FunctorAction + ?Sized>(
    f: &A,
    name: &str,
    budget: &LawBudget,
) -> Result<FunctorLawReport> {
    let caps = &budget.caps;
    let carriers = enumerate_pointed_posets(budget.max_carrier);
    let mut rng = ChaCha8Rng::seed_from_u64(budget.seed);
    let mut report = FunctorLawReport { functor: name.to_string(), carriers: carriers.len(), exhaustive: true, ..Default::default() };

    // Identity, over independent argument carriers.
    for xn in &carriers {
        for xp in &carriers {
            let fx = f.obj(xn, xp, caps)?;
            let m = f.map_between(&MonotoneMap::identity(xn), &MonotoneMap::identity(xp), &fx, &fx)?;
            if !m.is_identity() {
                return Err(violation("F(id, id) = id", format!("on F({}, {}): {:?}", poset_literal(xn), poset_literal(xp), m.table())));
            }
            report.identity_checks += 1;
        }
    }

    let mut stages = Vec::new();
    for x in &carriers {
        let (relations, exhaustive) = relation_pool(x, budget, &mut rng)?;
        report.exhaustive &= exhaustive;
        stages.push(Stage { carrier: x.clone(), image: f.obj(x, x, caps)?, relations, exhaustive });
    }
    let maps: HashMap<(usize, usize), Vec<MonotoneMap>> = (0..stages.len())
        .flat_map(|a| (0..stages.len()).map(move |b| (a, b)))
        .map(|(a, b)| Ok(((a, b), all_monotone_maps(&stages[a].carrier, &stages[b].carrier, caps.max_elements)?)))
        .collect::<Result<_>>()?;
    // F(u, v) for every stage morphism, keyed by stage pair and map indices.
    let mut action: HashMap<(usize, usize), Vec<Vec<MonotoneMap>>> = HashMap::new();
    for a in 0..stages.len() {
        for b in 0..stages.len() {
            let rows = maps[&(b, a)]
                .iter()
                .map(|u| {
                    maps[&(a, b)]
                        .iter()
                        .map(|v| f.map_between(u, v, &stages[a].image, &stages[b].image))
                        .collect::<Result<Vec<_>>>()
                })
                .collect::<Result<Vec<_>>>()?;
            action.insert((a, b), rows);
        }
    }

    // Composition: F(u1∘u2, v2∘v1) = F(u2, v2)∘F(u1, v1).
    for a in 0..stages.len() {
        for b in 0..stages.len() {
            for c in 0..stages.len() {
                for (i1, u1) in maps[&(b, a)].iter().enumerate() {
                    for (j1, v1) in maps[&(a, b)].iter().enumerate() {
                        let first = &action[&(a, b)][i1][j1];
                        for (i2, u2) in maps[&(c, b)].iter().enumerate() {
                            for (j2, v2) in maps[&(b, c)].iter().enumerate() {
                                let second = &action[&(b, c)][i2][j2];
                                let u = u1.after(u2)?;
                                let v = v2.after(v1)?;
                                let whole = f.map_between(&u, &v, &stages[a].image, &stages[c].image)?;
                                if whole != second.after(first)? {
                                    return Err(violation(
                                        "F(u1∘u2, v2∘v1) = F(u2, v2)∘F(u1, v1)",
                                        format!(
                                            "u1 = {:?}, v1 = {:?}, u2 = {:?}, v2 = {:?}",
                                            u1.table(),
                                            v1.table(),
                                            u2.table(),
                                            v2.table()
                                        ),
                                    ));
                                }
                                report.composition_checks += 1;
                            }
                        }
                    }
                }
            }
        }
    }

    // Local monotonicity in both arguments.
    for a in 0..stages.len() {
        for b in 0..stages.len() {
            let us = &maps[&(b, a)];
            let vs = &maps[&(a, b)];
            for (i, u) in us.iter().enumerate() {
                for (j, v) in vs.iter().enumerate() {
                    for (i2, u2) in us.iter().enumerate() {
                        for (j2, v2) in vs.iter().enumerate() {
                            if u.leq(u2) && v.leq(v2) {
                                if !action[&(a, b)][i][j].leq(&action[&(a, b)][i2][j2]) {
                                    return Err(violation(
                                        "F is monotone on hom-posets",
                                        format!("({:?}, {:?}) ⊑ ({:?}, {:?})", u.table(), v.table(), u2.table(), v2.table()),
                                    ));
                                }
                                report.monotonicity_checks += 1;
                            }
                        }
                    }
                }
            }
        }
    }

    // Relational functoriality: u : R' → R and v : S → S' imply
    // F(u, v) : F(R, S) → F(R', S').
    let mut images: Vec<Vec<Vec<BinRel>>> = Vec::new();
    for st in &stages {
        let rows = st
            .relations
            .iter()
            .map(|r| st.relations.iter().map(|s| f.rel_into(r, s, &st.image)).collect::<Result<Vec<_>>>())
            .collect::<Result<Vec<_>>>()?;
        for row in &rows {
            if let Some(bad) = row.iter().find(|r| !r.is_admissible()) {
                return Err(violation("F(R, S) is admissible", format!("{:?}", bad.pairs())));
            }
        }
        images.push(rows);
    }
    'outer: for a in 0..stages.len() {
        for b in 0..stages.len() {
            let (sa, sb) = (&stages[a], &stages[b]);
            for (i, u) in maps[&(b, a)].iter().enumerate() {
                for (j, v) in maps[&(a, b)].iter().enumerate() {
                    let fuv = &action[&(a, b)][i][j];
                    for (ri, r) in sa.relations.iter().enumerate() {
                        for (rpi, rp) in sb.relations.iter().enumerate() {
                            if !is_rel_morphism(u, rp, r)? {
                                continue;
                            }
                            for (si, s) in sa.relations.iter().enumerate() {
                                for (spi, sp) in sb.relations.iter().enumerate() {
                                    if !is_rel_morphism(v, s, sp)? {
                                        continue;
                                    }
                                    if report.relational_checks >= budget.max_relational_checks {
                                        report.exhaustive = false;
                                        break 'outer;
                                    }
                                    report.relational_checks += 1;
                                    if !is_rel_morphism(fuv, &images[a][ri][si], &images[b][rpi][spi])? {
                                        return Err(violation(
                                            "F(u, v) : F(R, S) → F(R', S')",
                                            format!(
                                                "u = {:?}, v = {:?}, R = {:?}, S = {:?}, R' = {:?}, S' = {:?}",
                                                u.table(),
                                                v.table(),
                                                r.pairs(),
                                                s.pairs(),
                                                rp.pairs(),
                                                sp.pairs()
                                            ),
                                        ));
                                    }
                                }
                            }
                        }
                    }
                }
            }
            report.exhaustive &= sa.exhaustive && sb.exhaustive;
        }
    }
    Ok(report)
}

/// A deliberately broken action for testing the law checker: on function
/// spaces it combines `h` as `a∘h∘b` instead of `b∘h∘a` whenever that is
/// well-typed.
#[derive(Clone, Debug)]
pub struct SwappedFunComposition(pub FunctorExpr);

impl FunctorAction for SwappedFunComposition {
    fn obj(&self, xneg: &Arc<FinPoset>, xpos: &Arc<FinPoset>, caps: &Caps) -> Result<Arc<FinPoset>> {
        self.0.obj(xneg, xpos, caps)
    }

    fn map_between(
        &self,
        fneg: &MonotoneMap,
        fpos: &MonotoneMap,
        src: &Arc<FinPoset>,
        tgt: &Arc<FinPoset>,
    ) -> Result<MonotoneMap> {
        let swapped = map_table(&self.0, fneg.table(), fpos.table(), src, tgt, &mut |h, ta, tb, n| {
            let in_range = n <= tb.len()
                && (0..n).all(|z| tb[z] < h.len() && h[tb[z]] < ta.len() && ta[h[tb[z]]] < tb.len());
            in_range.then(|| (0..n).map(|z| ta[h[tb[z]]]).collect())
        });
        match swapped {
            Ok(table) => Ok(MonotoneMap::new_unchecked(src.clone(), tgt.clone(), table)),
            Err(_) => self.0.map_between(fneg, fpos, src, tgt),
        }
    }

    fn rel_into(&self, rneg: &BinRel, spos: &BinRel, target: &Arc<FinPoset>) -> Result<BinRel> {
        self.0.rel_into(rneg, spos, target)
    }
}

/// The four properties of relation morphisms, each exhaustively over all
/// pointed posets up to a size, all monotone maps and all admissible
/// relations:
/// 1. `id : R → S ⟺ R ⊆ S`;
/// 2. `f : f*S → S`;
/// 3. `g∘f : R → S ⟺ f : R → g*S`;
/// 4. `f : R → ⋂Sᵢ ⟺ ∀i. f : R → Sᵢ` (families of size 0, 1 and 2).
#[derive(Clone, Debug, Default, Serialize)]
pub struct MorphismSuiteReport {
    pub posets: usize,
    pub maps: usize,
    pub relations: usize,
    pub identity_inclusion: u64,
    pub pullback_morphism: u64,
    pub composite_pullback: u64,
    pub intersections: u64,
    /// Closure facts: `f*` preserves intersections, and intersections and
    /// unions of admissible relations are admissible.
    pub closure: u64,
}

struct Carrier {
    poset: Arc<FinPoset>,
    rels: Vec<BinRel>,
    masks: Vec<usize>,
    /// Full bitmask over `k²` pairs ↦ index into `rels`.
    index: Vec<usize>,
}

fn mask(r: &BinRel) -> usize {
    let k = r.carrier().size();
    r.pairs().into_iter().map(|(x, y)| 1usize << (x * k + y)).sum()
}

fn carriers(max: usize) -> Result<Vec<Carrier>> {
    enumerate_pointed_posets(max)
        .into_iter()
        .map(|p| {
            let rels = enumerate_admissible(&p, 1 << 16)?;
            let k = p.size();
            let masks: Vec<usize> = rels.iter().map(mask).collect();
            let mut index = vec![usize::MAX; 1 << (k * k)];
            for (i, &m) in masks.iter().enumerate() {
                index[m] = i;
            }
            Ok(Carrier { poset: p, rels, masks, index })
        })
        .collect()
}

pub fn morphism_suite(max_carrier: usize, caps: &Caps) -> Result<MorphismSuiteReport> {
    let cs = carriers(max_carrier)?;
    let mut rep = MorphismSuiteReport { posets: cs.len(), ..Default::default() };
    rep.relations = cs.iter().map(|c| c.rels.len()).sum();
    let homs: HashMap<(usize, usize), Vec<MonotoneMap>> = (0..cs.len())
        .flat_map(|a| (0..cs.len()).map(move |b| (a, b)))
        .map(|(a, b)| Ok(((a, b), all_monotone_maps(&cs[a].poset, &cs[b].poset, caps.max_elements)?)))
        .collect::<Result<_>>()?;
    rep.maps = homs.values().map(Vec::len).sum();

    for c in &cs {
        let id = MonotoneMap::identity(&c.poset);
        for r in &c.rels {
            for s in &c.rels {
                if is_rel_morphism(&id, r, s)? != r.is_subset(s)? {
                    return Err(violation("id : R → S ⟺ R ⊆ S", format!("R = {:?}, S = {:?}", r.pairs(), s.pairs())));
                }
                rep.identity_inclusion += 1;
                let meet = intersect(&c.poset, &[r.clone(), s.clone()])?;
                let join = union(&c.poset, &[r.clone(), s.clone()])?;
                if !meet.is_admissible() || !join.is_admissible() {
                    return Err(violation("admissible relations are closed under ∩ and ∪", format!("{:?} {:?}", r.pairs(), s.pairs())));
                }
                rep.closure += 1;
            }
        }
    }

    for a in 0..cs.len() {
        for b in 0..cs.len() {
            let (ca, cb) = (&cs[a], &cs[b]);
            for f in &homs[&(a, b)] {
                // morph[r][s] = f : R → S, computed directly.
                let mut morph = vec![vec![false; cb.rels.len()]; ca.rels.len()];
                for (si, s) in cb.rels.iter().enumerate() {
                    let pulled = inverse_image(f, s)?;
                    if !is_rel_morphism(f, &pulled, s)? {
                        return Err(violation("f : f*S → S", format!("f = {:?}, S = {:?}", f.table(), s.pairs())));
                    }
                    rep.pullback_morphism += 1;
                    for (ri, r) in ca.rels.iter().enumerate() {
                        morph[ri][si] = is_rel_morphism(f, r, s)?;
                    }
                }
                let total = cb.index[mask(&BinRel::total(&cb.poset))];
                for ri in 0..ca.rels.len() {
                    if !morph[ri][total] {
                        return Err(violation("f : R → ⋂∅", format!("f = {:?}", f.table())));
                    }
                    for s1 in 0..cb.rels.len() {
                        let m1 = cb.masks[s1];
                        for s2 in 0..cb.rels.len() {
                            let meet = cb.index[m1 & cb.masks[s2]];
                            if meet == usize::MAX {
                                return Err(violation("⋂ of admissible relations is admissible", format!("{s1} {s2}")));
                            }
                            if morph[ri][meet] != (morph[ri][s1] && morph[ri][s2]) {
                                return Err(violation(
                                    "f : R → S₁ ∩ S₂ ⟺ f : R → S₁ and f : R → S₂",
                                    format!("f = {:?}, R = {:?}", f.table(), ca.rels[ri].pairs()),
                                ));
                            }
                            rep.intersections += 1;
                        }
                    }
                }
                for s1 in &cb.rels {
                    for s2 in &cb.rels {
                        let lhs = inverse_image(f, &intersect(&cb.poset, &[s1.clone(), s2.clone()])?)?;
                        let rhs = intersect(&ca.poset, &[inverse_image(f, s1)?, inverse_image(f, s2)?])?;
                        if lhs != rhs {
                            return Err(violation("f*(S₁ ∩ S₂) = f*S₁ ∩ f*S₂", format!("f = {:?}", f.table())));
                        }
                        rep.closure += 1;
                    }
                }
            }
        }
    }

    for a in 0..cs.len() {
        for b in 0..cs.len() {
            for c in 0..cs.len() {
                for f in &homs[&(a, b)] {
                    for g in &homs[&(b, c)] {
                        let gf = g.after(f)?;
                        for s in &cs[c].rels {
                            let gs = inverse_image(g, s)?;
                            for r in &cs[a].rels {
                                if is_rel_morphism(&gf, r, s)? != is_rel_morphism(f, r, &gs)? {
                                    return Err(violation(
                                        "g∘f : R → S ⟺ f : R → g*S",
                                        format!("f = {:?}, g = {:?}, R = {:?}, S = {:?}", f.table(), g.table(), r.pairs(), s.pairs()),
                                    ));
                                }
                                rep.composite_pullback += 1;
                            }
                        }
                    }
                }
            }
        }
    }
    Ok(rep)
}

#[derive(Clone, Debug, Default, Serialize)]
pub struct AdjunctionReport {
    pub checks: u64,
    /// `R ⊆ f*(f_!R)` and `f_!(f*S) ⊆ S`.
    pub unit_counit: u64,
}

/// `f_!R ⊆ S ⟺ R ⊆ f*S` for all maps and admissible relations.
pub fn adjunction_suite(max_carrier: usize, caps: &Caps) -> Result<AdjunctionReport> {
    let cs = carriers(max_carrier)?;
    let mut rep = AdjunctionReport::default();
    for ca in &cs {
        for cb in &cs {
            for f in all_monotone_maps(&ca.poset, &cb.poset, caps.max_elements)? {
                let pushed: Vec<BinRel> = ca.rels.iter().map(|r| direct_image(&f, r)).collect::<Result<_>>()?;
                let pulled: Vec<BinRel> = cb.rels.iter().map(|s| inverse_image(&f, s)).collect::<Result<_>>()?;
                for (r, fr) in ca.rels.iter().zip(&pushed) {
                    if !r.is_subset(&inverse_image(&f, fr)?)? {
                        return Err(violation("R ⊆ f*(f_!R)", format!("f = {:?}, R = {:?}", f.table(), r.pairs())));
                    }
                    rep.unit_counit += 1;
                    for (s, fs) in cb.rels.iter().zip(&pulled) {
                        if fr.is_subset(s)? != r.is_subset(fs)? {
                            return Err(violation(
                                "f_!R ⊆ S ⟺ R ⊆ f*S",
                                format!("f = {:?}, R = {:?}, S = {:?}", f.table(), r.pairs(), s.pairs()),
                            ));
                        }
                        rep.checks += 1;
                    }
                }
                for (s, fs) in cb.rels.iter().zip(&pulled) {
                    if !direct_image(&f, fs)?.is_subset(s)? {
                        return Err(violation("f_!(f*S) ⊆ S", format!("f = {:?}, S = {:?}", f.table(), s.pairs())));
                    }
                    rep.unit_counit += 1;
                }
            }
        }
    }
    Ok(rep)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small() -> LawBudget {
        LawBudget { max_carrier: 2, ..Default::default() }
    }

    #[test]
    fn variable_and_reflexive_functors_pass() {
        let rep = check_functor_laws(&FunctorExpr::var(), &LawBudget::default()).unwrap();
        assert!(rep.composition_checks > 0 && rep.relational_checks > 0);
        let reflexive = FunctorExpr::lift(FunctorExpr::fun(FunctorExpr::var(), FunctorExpr::var()));
        let rep = check_functor_laws(&reflexive, &small()).unwrap();
        assert!(rep.exhaustive);
    }

    #[test]
    fn swapped_composition_is_caught() {
        let f = FunctorExpr::fun(FunctorExpr::var(), FunctorExpr::var());
        let err = check_functor_laws_with(&SwappedFunComposition(f.clone()), "corrupt", &LawBudget::default()).unwrap_err();
        assert!(matches!(err, Error::LawViolation { ref law, .. } if law.starts_with("F(u1∘u2")), "{err}");
        assert!(check_functor_laws(&f, &LawBudget::default()).is_ok());
    }

    #[test]
    fn morphism_and_adjunction_suites_up_to_two() {
        let rep = morphism_suite(2, &Caps::default()).unwrap();
        assert_eq!(rep.posets, 2);
        assert_eq!(rep.relations, 1 + 8);
        assert!(rep.intersections > 0 && rep.composite_pullback > 0);
        let adj = adjunction_suite(2, &Caps::default()).unwrap();
        assert!(adj.checks > 0);
    }
}
