//! Idempotents, their splittings, the Karoubi envelope checked pointwise,
//! the free-splitting extension of a functor, the order on deflationary
//! idempotents `E_D`, and its equivalence with embeddings into `D`.

use std::collections::BTreeMap;
use std::sync::Arc;

use serde::Serialize;

use crate::ep::{projection_of, verify_ep_pair, EpPair};
use crate::error::{Caps, Error, Result};
use crate::functor::{eval_map, FunctorExpr};
use crate::map::{all_monotone_maps, MonotoneMap};
use crate::poset::{enumerate_pointed_posets, monotone_tables, same_poset, Elem, FinPoset};
use crate::relation::{enumerate_admissible, inverse_image};

/// A monotone endomap `p` with `p∘p = p`.
#[derive(Clone, Debug, PartialEq, Serialize)]
#[serde(transparent)]
pub struct Idempotent {
    map: MonotoneMap,
}

/// An object `(X, p)` of the Karoubi envelope.
pub type KaroubiObj = Idempotent;

impl Idempotent {
    pub fn new(map: MonotoneMap) -> Result<Self> {
        if !same_poset(map.dom(), map.cod()) {
            return Err(Error::TypeMismatch("an idempotent must be an endomap".into()));
        }
        if let Some(x) = map.table().iter().position(|&y| map.apply(y) != y) {
            return Err(Error::LawViolation {
                law: "idempotence".into(),
                witness: format!("p(p({x})) = {} but p({x}) = {}", map.apply(map.apply(x)), map.apply(x)),
            });
        }
        Ok(Idempotent { map })
    }

    pub fn identity(x: &Arc<FinPoset>) -> Self {
        Idempotent { map: MonotoneMap::identity(x) }
    }

    pub fn const_bottom(x: &Arc<FinPoset>) -> Self {
        Idempotent { map: MonotoneMap::const_bottom(x, x) }
    }

    pub fn map(&self) -> &MonotoneMap {
        &self.map
    }

    pub fn carrier(&self) -> &Arc<FinPoset> {
        self.map.dom()
    }

    pub fn table(&self) -> &[usize] {
        self.map.table()
    }

    /// Fixed points, in increasing index order.
    pub fn image(&self) -> Vec<usize> {
        self.carrier().elements().filter(|&x| self.map.apply(x) == x).collect()
    }
}

/// `E_D`: all monotone `p : D → D` with `p∘p = p` and `p ⊑ id`.
pub fn enumerate_canonical_idempotents(d: &Arc<FinPoset>, limit: usize) -> Result<Vec<Idempotent>> {
    let tables = monotone_tables(d, d, limit, |x, y| d.leq(y, x))?;
    Ok(tables
        .into_iter()
        .filter(|t| t.iter().all(|&y| t[y] == y))
        .map(|t| Idempotent { map: MonotoneMap::new_unchecked(d.clone(), d.clone(), t) })
        .collect())
}

/// Every idempotent monotone endomap of `x`.
pub fn enumerate_idempotents(x: &Arc<FinPoset>, limit: usize) -> Result<Vec<Idempotent>> {
    Ok(all_monotone_maps(x, x, limit)?
        .into_iter()
        .filter(|m| m.is_idempotent())
        .map(|map| Idempotent { map })
        .collect())
}

/// `p ≤ q`, evaluated as both `p = pq = qp` and `p = qpq`.
pub fn idem_leq(p: &Idempotent, q: &Idempotent) -> Result<bool> {
    if !same_poset(p.carrier(), q.carrier()) {
        return Err(Error::TypeMismatch("idempotents live on different carriers".into()));
    }
    let (pm, qm) = (p.map(), q.map());
    let pq = pm.after(qm)?;
    let qp = qm.after(pm)?;
    let absorbs = pq == *pm && qp == *pm;
    let sandwich = qm.after(&pq)? == *pm;
    if absorbs != sandwich {
        return Err(Error::EquivalenceMismatch(format!(
            "p = {:?}, q = {:?}: p = pq = qp is {absorbs}, p = qpq is {sandwich}",
            pm.table(),
            qm.table()
        )));
    }
    Ok(absorbs)
}

/// A factorization `p = s∘r` through `image` with `r∘s = id`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Splitting {
    pub idempotent: Idempotent,
    #[serde(skip)]
    pub image: Arc<FinPoset>,
    pub r: MonotoneMap,
    pub s: MonotoneMap,
}

impl Splitting {
    pub fn new(idempotent: Idempotent, r: MonotoneMap, s: MonotoneMap) -> Result<Self> {
        let x = idempotent.carrier();
        let image = r.cod().clone();
        if !same_poset(r.dom(), x) || !same_poset(s.cod(), x) || !same_poset(s.dom(), &image) {
            return Err(Error::TypeMismatch("splitting maps do not fit the idempotent".into()));
        }
        if s.after(&r)? != *idempotent.map() {
            return Err(Error::LawViolation { law: "s∘r = p".into(), witness: format!("{:?}", s.after(&r)?.table()) });
        }
        if !r.after(&s)?.is_identity() {
            return Err(Error::LawViolation { law: "r∘s = id".into(), witness: format!("{:?}", r.after(&s)?.table()) });
        }
        Ok(Splitting { idempotent, image, r, s })
    }
}

/// Splits through the image sub-poset in canonical form; the identity
/// splits through its own carrier with `r = s = id`.
pub fn split_idempotent(p: &Idempotent) -> Result<Splitting> {
    let x = p.carrier();
    if p.map().is_identity() {
        let id = MonotoneMap::identity(x);
        return Splitting::new(p.clone(), id.clone(), id);
    }
    let image = Arc::new(x.induced(&p.image())?.canonical());
    let s_table: Vec<usize> = image
        .tags()
        .iter()
        .map(|t| match t {
            Elem::Atom(m) => Ok(*m),
            other => Err(Error::InternalInvariantViolation(format!("image element tagged {other:?}"))),
        })
        .collect::<Result<_>>()?;
    let r_table: Vec<usize> = x
        .elements()
        .map(|z| image.index_of(&Elem::Atom(p.map().apply(z))).expect("p(z) is a fixed point"))
        .collect();
    let r = MonotoneMap::new(x.clone(), image.clone(), r_table)?;
    let s = MonotoneMap::new(image, x.clone(), s_table)?;
    Splitting::new(p.clone(), r, s)
}

/// The comparison isomorphism between two splittings of one idempotent.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SplittingIso {
    pub forward: MonotoneMap,
    pub backward: MonotoneMap,
    /// Number of isomorphisms commuting with the sections, when searched.
    pub isos_found: Option<usize>,
}

/// `i = r'∘s`, `i⁻¹ = r∘s'`, with the iso laws and `s'∘i = s` checked.
/// On images of at most `search_limit` elements, every isomorphism
/// commuting with the sections is enumerated and must be unique.
pub fn splitting_iso(a: &Splitting, b: &Splitting, search_limit: usize) -> Result<SplittingIso> {
    if a.idempotent != b.idempotent {
        return Err(Error::TypeMismatch("splittings of different idempotents".into()));
    }
    let forward = b.r.after(&a.s)?;
    let backward = a.r.after(&b.s)?;
    let law = |name: &str, ok: bool| -> Result<()> {
        if ok {
            Ok(())
        } else {
            Err(Error::LawViolation { law: name.into(), witness: format!("{:?} / {:?}", forward.table(), backward.table()) })
        }
    };
    law("i⁻¹∘i = id", backward.after(&forward)?.is_identity())?;
    law("i∘i⁻¹ = id", forward.after(&backward)?.is_identity())?;
    law("s'∘i = s", b.s.after(&forward)? == a.s)?;
    let isos_found = if a.image.size() <= search_limit {
        let found = all_monotone_maps(&a.image, &b.image, 1 << 20)?
            .into_iter()
            .filter(|phi| b.s.after(phi).map(|c| c == a.s).unwrap_or(false) && is_iso(phi))
            .count();
        law("the comparison iso is unique", found == 1)?;
        Some(found)
    } else {
        None
    };
    Ok(SplittingIso { forward, backward, isos_found })
}

/// Bijective with monotone inverse.
pub fn is_iso(f: &MonotoneMap) -> bool {
    let (dom, cod) = (f.dom(), f.cod());
    if dom.size() != cod.size() {
        return false;
    }
    let mut inv = vec![usize::MAX; cod.size()];
    for x in dom.elements() {
        if inv[f.apply(x)] != usize::MAX {
            return false;
        }
        inv[f.apply(x)] = x;
    }
    cod.elements().all(|u| cod.elements().all(|v| !cod.leq(u, v) || dom.leq(inv[u], inv[v])))
}

/// `f : (X, p) → (Y, q)` is a morphism iff `f∘p = f = q∘f`.
pub fn karoubi_hom_check(f: &MonotoneMap, a: &KaroubiObj, b: &KaroubiObj) -> Result<bool> {
    if !same_poset(f.dom(), a.carrier()) || !same_poset(f.cod(), b.carrier()) {
        return Err(Error::TypeMismatch("map does not run between the objects' carriers".into()));
    }
    Ok(f.after(a.map())? == *f && b.map().after(f)? == *f)
}

/// All Karoubi morphisms `a → b`.
pub fn karoubi_homs(a: &KaroubiObj, b: &KaroubiObj, limit: usize) -> Result<Vec<MonotoneMap>> {
    let mut out = Vec::new();
    for f in all_monotone_maps(a.carrier(), b.carrier(), limit)? {
        if karoubi_hom_check(&f, a, b)? {
            out.push(f);
        }
    }
    Ok(out)
}

/// The object part of the free-splitting extension, as the splitting of
/// `F(p, p)` whose image is `F̂(X, p)`.
pub fn hat_functor_split(f: &FunctorExpr, a: &KaroubiObj, caps: &Caps) -> Result<Splitting> {
    let fp = Idempotent::new(eval_map(f, a.map(), a.map(), caps)?)?;
    split_idempotent(&fp)
}

pub fn hat_functor_obj(f: &FunctorExpr, a: &KaroubiObj, caps: &Caps) -> Result<Arc<FinPoset>> {
    Ok(hat_functor_split(f, a, caps)?.image)
}

/// `F̂g = r_{Fq} ∘ F(g) ∘ s_{Fp}`, for covariant `F`.
pub fn hat_functor_mor(
    f: &FunctorExpr,
    g: &MonotoneMap,
    a: &KaroubiObj,
    b: &KaroubiObj,
    caps: &Caps,
) -> Result<MonotoneMap> {
    if !f.is_covariant() {
        return Err(Error::TypeMismatch("the morphism part is defined for covariant functors".into()));
    }
    if !karoubi_hom_check(g, a, b)? {
        return Err(Error::TypeMismatch("not a Karoubi morphism".into()));
    }
    let sa = hat_functor_split(f, a, caps)?;
    let sb = hat_functor_split(f, b, caps)?;
    let fg = eval_map(f, g, g, caps)?;
    sb.r.after(&fg)?.after(&sa.s)
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize)]
pub struct HatLawReport {
    pub objects: usize,
    pub identity_checks: usize,
    pub composition_checks: usize,
    /// Identity idempotents: `F̂` agrees with `F` on objects and maps.
    pub embedding_checks: usize,
}

/// Identity and composition laws of `F̂` over every Karoubi object on the
/// given carriers and every composable pair of morphisms between them.
pub fn hat_functor_laws(f: &FunctorExpr, carriers: &[Arc<FinPoset>], caps: &Caps) -> Result<HatLawReport> {
    let mut objects = Vec::new();
    for x in carriers {
        objects.extend(enumerate_idempotents(x, caps.max_elements)?);
    }
    let mut report = HatLawReport { objects: objects.len(), ..Default::default() };
    let violation = |law: &str, w: String| Error::LawViolation { law: law.into(), witness: w };
    let hats: Vec<Splitting> = objects.iter().map(|a| hat_functor_split(f, a, caps)).collect::<Result<_>>()?;
    for (a, ha) in objects.iter().zip(&hats) {
        if !hat_functor_mor(f, a.map(), a, a, caps)?.is_identity() {
            return Err(violation("F̂ preserves identities", format!("{:?}", a.table())));
        }
        report.identity_checks += 1;
        if a.map().is_identity() {
            let plain = crate::functor::eval_obj(f, a.carrier(), a.carrier(), caps)?;
            if *ha.image != *plain {
                return Err(violation("F̂ extends F on objects", format!("{:?}", a.table())));
            }
            report.embedding_checks += 1;
        }
    }
    let mut homs: BTreeMap<(usize, usize), Vec<MonotoneMap>> = BTreeMap::new();
    for (i, a) in objects.iter().enumerate() {
        for (j, b) in objects.iter().enumerate() {
            homs.insert((i, j), karoubi_homs(a, b, caps.max_elements)?);
        }
    }
    for (i, a) in objects.iter().enumerate() {
        for (j, b) in objects.iter().enumerate() {
            for g in &homs[&(i, j)] {
                let hg = hat_functor_mor(f, g, a, b, caps)?;
                if a.map().is_identity() && b.map().is_identity() {
                    if hg != eval_map(f, g, g, caps)? {
                        return Err(violation("F̂ extends F on maps", format!("{:?}", g.table())));
                    }
                    report.embedding_checks += 1;
                }
                for (k, c) in objects.iter().enumerate() {
                    for h in &homs[&(j, k)] {
                        let lhs = hat_functor_mor(f, &h.after(g)?, a, c, caps)?;
                        let rhs = hat_functor_mor(f, h, b, c, caps)?.after(&hg)?;
                        if lhs != rhs {
                            return Err(violation(
                                "F̂(h∘g) = F̂h∘F̂g",
                                format!("g = {:?}, h = {:?}", g.table(), h.table()),
                            ));
                        }
                        report.composition_checks += 1;
                    }
                }
            }
        }
    }
    Ok(report)
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct EdCpoReport {
    pub size: usize,
    pub elements: Vec<Vec<usize>>,
    /// `order[i][j]` is `elements[i] ≤ elements[j]`.
    pub order: Vec<Vec<bool>>,
    pub partial_order: bool,
    /// `p ≤ q` implies `p ⊑ q` pointwise.
    pub inclusion_monotone: bool,
    /// The idempotent order coincides with the pointwise order.
    pub orders_agree: bool,
    pub bottom_is_const_bottom: bool,
    pub top_is_identity: bool,
    /// For every `p ≤ q`, the pointwise join lies in `E_D` and equals `q`.
    pub chain_lubs: bool,
    pub pointed: bool,
}

impl EdCpoReport {
    pub fn holds(&self) -> bool {
        self.partial_order
            && self.inclusion_monotone
            && self.orders_agree
            && self.bottom_is_const_bottom
            && self.top_is_identity
            && self.chain_lubs
            && self.pointed
    }
}

pub fn ed_cpo_check(d: &Arc<FinPoset>, limit: usize) -> Result<EdCpoReport> {
    let ed = enumerate_canonical_idempotents(d, limit)?;
    let k = ed.len();
    let mut order = vec![vec![false; k]; k];
    for (i, p) in ed.iter().enumerate() {
        for (j, q) in ed.iter().enumerate() {
            order[i][j] = idem_leq(p, q)?;
        }
    }
    let flat: Vec<bool> = order.iter().flatten().copied().collect();
    let bottom = ed.iter().position(|p| p.table().iter().all(|&y| y == d.bottom()));
    let partial_order = match bottom {
        Some(b) => FinPoset::from_matrix(k, flat.clone(), b).is_ok(),
        None => false,
    };
    let pointed = bottom.is_some_and(|b| (0..k).all(|j| order[b][j]));
    let mut inclusion_monotone = true;
    let mut orders_agree = true;
    let mut chain_lubs = true;
    for i in 0..k {
        for j in 0..k {
            let pointwise = ed[i].map().leq(ed[j].map());
            inclusion_monotone &= !order[i][j] || pointwise;
            orders_agree &= order[i][j] == pointwise;
            if order[i][j] {
                let join: Option<Vec<usize>> = d
                    .elements()
                    .map(|x| join_of(d, ed[i].map().apply(x), ed[j].map().apply(x)))
                    .collect();
                chain_lubs &= join.as_deref() == Some(ed[j].table());
            }
        }
    }
    let top = ed.iter().position(|p| p.map().is_identity());
    let top_is_identity = top.is_some_and(|t| (0..k).all(|i| order[i][t]));
    Ok(EdCpoReport {
        size: k,
        elements: ed.iter().map(|p| p.table().to_vec()).collect(),
        order,
        partial_order,
        inclusion_monotone,
        orders_agree,
        bottom_is_const_bottom: pointed,
        top_is_identity,
        chain_lubs,
        pointed,
    })
}

fn join_of(d: &FinPoset, a: usize, b: usize) -> Option<usize> {
    let uppers: Vec<usize> = d.elements().filter(|&z| d.leq(a, z) && d.leq(b, z)).collect();
    uppers.iter().copied().find(|&u| uppers.iter().all(|&v| d.leq(u, v)))
}

/// An embedding into `D`, identified by its image.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct EmbeddingClass {
    pub image: Vec<usize>,
    /// Number of embeddings (over all enumerated sources) with this image.
    pub members: usize,
    /// The idempotent `e∘e^p` of the class.
    pub idempotent: Vec<usize>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SliceReport {
    pub idempotents: usize,
    pub embeddings: usize,
    pub classes: Vec<EmbeddingClass>,
    /// `j(i(p)) = p` for every `p ∈ E_D`.
    pub round_trip_exact: bool,
    /// `i(j(e)) ≅ e` over `D` for every embedding.
    pub round_trip_iso: bool,
    /// Classes and idempotents correspond one to one.
    pub bijection: bool,
    /// `p ≤ q ⟹ i(p) ≤ i(q)` in the slice.
    pub i_monotone: bool,
    /// `e ≤ e' ⟹ j(e) ≤ j(e')`.
    pub j_monotone: bool,
    pub witnesses: Vec<String>,
}

impl SliceReport {
    pub fn holds(&self) -> bool {
        self.round_trip_exact && self.round_trip_iso && self.bijection && self.i_monotone && self.j_monotone
    }
}

/// All embeddings `X → D` for pointed `X` with `|X| ≤ |D|`.
pub fn enumerate_embeddings(d: &Arc<FinPoset>, limit: usize) -> Result<Vec<EpPair>> {
    let mut out = Vec::new();
    for x in enumerate_pointed_posets(d.size()) {
        for e in all_monotone_maps(&x, d, limit)? {
            match projection_of(&e) {
                Ok(p) => out.push(verify_ep_pair(e, p)?),
                Err(Error::NotAnEmbedding) => {}
                Err(other) => return Err(other),
            }
        }
    }
    Ok(out)
}

/// `e ≤ e'` in the slice: some embedding `k` has `e'∘k = e`.
pub fn slice_leq(a: &EpPair, b: &EpPair, limit: usize) -> Result<bool> {
    for k in all_monotone_maps(a.source(), b.source(), limit)? {
        if b.e().after(&k)? == *a.e() && projection_of(&k).is_ok() {
            return Ok(true);
        }
    }
    Ok(false)
}

/// `i(p) = s_p : im(p) → D` and `j(e) = e∘e^p`, checked to be mutually
/// inverse (exactly one way, up to isomorphism over `D` the other) and
/// monotone.
pub fn ed_slice_equivalence(d: &Arc<FinPoset>, limit: usize) -> Result<SliceReport> {
    let ed = enumerate_canonical_idempotents(d, limit)?;
    let embeddings = enumerate_embeddings(d, limit)?;
    let mut witnesses = Vec::new();

    let mut i_of = Vec::new();
    let mut round_trip_exact = true;
    for p in &ed {
        let sp = split_idempotent(p)?;
        let emb = verify_ep_pair(sp.s.clone(), sp.r.clone())?;
        if emb.retract() != *p.map() {
            round_trip_exact = false;
            witnesses.push(format!("j(i(p)) ≠ p for p = {:?}", p.table()));
        }
        i_of.push(emb);
    }

    let mut round_trip_iso = true;
    let mut classes: BTreeMap<Vec<usize>, EmbeddingClass> = BTreeMap::new();
    let mut reps: BTreeMap<Vec<usize>, EpPair> = BTreeMap::new();
    for e in &embeddings {
        let q = Idempotent::new(e.retract())?;
        let sq = split_idempotent(&q)?;
        let phi = sq.r.after(e.e())?;
        if !is_iso(&phi) || sq.s.after(&phi)? != *e.e() {
            round_trip_iso = false;
            witnesses.push(format!("i(j(e)) ≇ e for e = {:?}", e.e().table()));
        }
        let mut image: Vec<usize> = e.e().table().to_vec();
        image.sort_unstable();
        classes
            .entry(image.clone())
            .or_insert_with(|| EmbeddingClass { image: image.clone(), members: 0, idempotent: q.table().to_vec() })
            .members += 1;
        reps.entry(image).or_insert_with(|| e.clone());
    }

    let class_idems: Vec<&Vec<usize>> = classes.values().map(|c| &c.idempotent).collect();
    let mut bijection = classes.len() == ed.len();
    for p in &ed {
        if !class_idems.contains(&&p.table().to_vec()) {
            bijection = false;
            witnesses.push(format!("no embedding class for p = {:?}", p.table()));
        }
    }

    let mut i_monotone = true;
    for (a, p) in ed.iter().enumerate() {
        for (b, q) in ed.iter().enumerate() {
            if idem_leq(p, q)? && !slice_leq(&i_of[a], &i_of[b], limit)? {
                i_monotone = false;
                witnesses.push(format!("i not monotone at {:?} ≤ {:?}", p.table(), q.table()));
            }
        }
    }
    let mut j_monotone = true;
    for a in reps.values() {
        for b in reps.values() {
            if slice_leq(a, b, limit)? {
                let (ja, jb) = (Idempotent::new(a.retract())?, Idempotent::new(b.retract())?);
                if !idem_leq(&ja, &jb)? {
                    j_monotone = false;
                    witnesses.push(format!("j not monotone at {:?} ≤ {:?}", a.e().table(), b.e().table()));
                }
            }
        }
    }

    Ok(SliceReport {
        idempotents: ed.len(),
        embeddings: embeddings.len(),
        classes: classes.into_values().collect(),
        round_trip_exact,
        round_trip_iso,
        bijection,
        i_monotone,
        j_monotone,
        witnesses,
    })
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct ClaimCounterexample {
    pub relation: Vec<(usize, usize)>,
    pub pullback: Vec<(usize, usize)>,
}

/// The relations over `(X, p)` together with an audit of the inclusion
/// `p*R ⊆ R` over every admissible `R`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct FiberReport {
    pub idempotent: Vec<usize>,
    pub candidates: usize,
    /// `{R admissible | p*R = R}`.
    pub fiber: Vec<Vec<(usize, usize)>>,
    /// Whether `p*R ⊆ R` held for every admissible `R`.
    pub inclusion_always_holds: bool,
    pub counterexample_count: usize,
    pub counterexamples: Vec<ClaimCounterexample>,
}

pub fn karoubi_rel_fiber(a: &KaroubiObj, limit: usize) -> Result<FiberReport> {
    let candidates = enumerate_admissible(a.carrier(), limit)?;
    let mut fiber = Vec::new();
    let mut counterexamples = Vec::new();
    let mut counterexample_count = 0;
    for r in &candidates {
        let pulled = inverse_image(a.map(), r)?;
        if pulled == *r {
            fiber.push(r.pairs());
        }
        if !pulled.is_subset(r)? {
            counterexample_count += 1;
            if counterexamples.len() < 10 {
                counterexamples.push(ClaimCounterexample { relation: r.pairs(), pullback: pulled.pairs() });
            }
        }
    }
    Ok(FiberReport {
        idempotent: a.table().to_vec(),
        candidates: candidates.len(),
        fiber,
        inclusion_always_holds: counterexample_count == 0,
        counterexample_count,
        counterexamples,
    })
}

/// `b = p∘⊥ : Y → D` as a morphism `(Y, q) → (D, p)`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct PointednessReport {
    pub homs: usize,
    pub bottom_is_hom: bool,
    pub bottom_is_least: bool,
}

pub fn pointedness_check(target: &KaroubiObj, source: &KaroubiObj, limit: usize) -> Result<PointednessReport> {
    let b = MonotoneMap::constant(source.carrier(), target.carrier(), target.map().apply(target.carrier().bottom()));
    let homs = karoubi_homs(source, target, limit)?;
    Ok(PointednessReport {
        homs: homs.len(),
        bottom_is_hom: karoubi_hom_check(&b, source, target)?,
        bottom_is_least: homs.iter().all(|f| b.leq(f)),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::poset::{lift, RawPoset};
    use crate::relation::BinRel;

    fn ch(n: usize) -> Arc<FinPoset> {
        Arc::new(FinPoset::chain(n).unwrap())
    }

    fn idem(x: &Arc<FinPoset>, t: &[usize]) -> Idempotent {
        Idempotent::new(MonotoneMap::new(x.clone(), x.clone(), t.to_vec()).unwrap()).unwrap()
    }

    /// Oracle: filter all endofunctions by monotonicity, idempotence and
    /// deflation.
    fn brute_ed(d: &Arc<FinPoset>) -> Vec<Vec<usize>> {
        let n = d.size();
        let mut out = Vec::new();
        for code in 0..n.pow(n as u32) {
            let t: Vec<usize> = (0..n).map(|i| code / n.pow(i as u32) % n).collect();
            let mono = (0..n).all(|x| (0..n).all(|y| !d.leq(x, y) || d.leq(t[x], t[y])));
            if mono && (0..n).all(|x| t[t[x]] == t[x] && d.leq(t[x], x)) {
                out.push(t);
            }
        }
        out.sort();
        out
    }

    #[test]
    fn ed_of_small_posets() {
        let one = Arc::new(FinPoset::one());
        let e1 = enumerate_canonical_idempotents(&one, 100).unwrap();
        assert_eq!(e1.len(), 1);
        assert!(e1[0].map().is_identity());
        let c3 = ch(3);
        let mut tables: Vec<Vec<usize>> =
            enumerate_canonical_idempotents(&c3, 100).unwrap().iter().map(|p| p.table().to_vec()).collect();
        tables.sort();
        assert_eq!(tables, vec![vec![0, 0, 0], vec![0, 0, 2], vec![0, 1, 1], vec![0, 1, 2]]);
        for d in enumerate_pointed_posets(4) {
            let mut got: Vec<Vec<usize>> =
                enumerate_canonical_idempotents(&d, 10_000).unwrap().iter().map(|p| p.table().to_vec()).collect();
            got.sort();
            assert_eq!(got, brute_ed(&d));
            assert!(got.iter().all(|t| t[d.bottom()] == d.bottom()));
        }
    }

    #[test]
    fn idempotent_order_on_ch3() {
        let c3 = ch(3);
        let a = idem(&c3, &[0, 0, 2]);
        let b = idem(&c3, &[0, 1, 1]);
        assert!(!idem_leq(&a, &b).unwrap());
        assert!(!idem_leq(&b, &a).unwrap());
        for p in enumerate_canonical_idempotents(&c3, 100).unwrap() {
            assert!(idem_leq(&p, &p).unwrap());
            assert!(idem_leq(&Idempotent::const_bottom(&c3), &p).unwrap());
        }
        assert!(matches!(idem_leq(&a, &Idempotent::identity(&ch(2))), Err(Error::TypeMismatch(_))));
    }

    #[test]
    fn rejects_non_idempotent() {
        let c3 = ch(3);
        let m = MonotoneMap::new(c3.clone(), c3.clone(), vec![0, 0, 1]).unwrap();
        assert!(matches!(Idempotent::new(m), Err(Error::LawViolation { .. })));
    }

    #[test]
    fn splittings() {
        let c3 = ch(3);
        let id = split_idempotent(&Idempotent::identity(&c3)).unwrap();
        assert!(Arc::ptr_eq(&id.image, &c3) && id.r.is_identity() && id.s.is_identity());
        let bot = split_idempotent(&Idempotent::const_bottom(&c3)).unwrap();
        assert_eq!(bot.image.size(), 1);
        let sp = split_idempotent(&idem(&c3, &[0, 0, 2])).unwrap();
        assert_eq!(sp.image.order_rows(), FinPoset::chain(2).unwrap().order_rows());
        assert_eq!(sp.s.table(), &[0, 2]);
        assert_eq!(sp.r.table(), &[0, 0, 1]);
    }

    #[test]
    fn splitting_isos() {
        let v = Arc::new(
            crate::poset::validate_poset(&RawPoset { elems: 4, le: vec![(0, 1), (0, 2), (1, 3), (2, 3)], bot: 0 })
                .unwrap(),
        );
        for p in enumerate_idempotents(&v, 1000).unwrap() {
            let a = split_idempotent(&p).unwrap();
            let same = splitting_iso(&a, &a, 4).unwrap();
            assert!(same.forward.is_identity());
            assert_eq!(same.isos_found, Some(1));
            // A relabeled copy of the image, with r and s transported.
            let k = a.image.size();
            let perm: Vec<usize> = (0..k).rev().collect();
            let copy = Arc::new(a.image.relabeled(&perm).unwrap());
            let to_copy: Vec<usize> = (0..k).map(|old| k - 1 - old).collect();
            let r2 = MonotoneMap::new(v.clone(), copy.clone(), a.r.table().iter().map(|&i| to_copy[i]).collect())
                .unwrap();
            let s2 = MonotoneMap::new(copy.clone(), v.clone(), perm.iter().map(|&old| a.s.apply(old)).collect())
                .unwrap();
            let b = Splitting::new(p.clone(), r2, s2).unwrap();
            let iso = splitting_iso(&a, &b, 4).unwrap();
            assert_eq!(iso.forward.table(), to_copy.as_slice());
            assert_eq!(iso.isos_found, Some(1));
        }
    }

    #[test]
    fn hom_condition() {
        let c3 = ch(3);
        let p = idem(&c3, &[0, 1, 1]);
        assert!(karoubi_hom_check(p.map(), &p, &p).unwrap());
        let id = Idempotent::identity(&c3);
        for f in all_monotone_maps(&c3, &c3, 100).unwrap() {
            assert!(karoubi_hom_check(&f, &id, &id).unwrap());
        }
        assert!(!karoubi_hom_check(&MonotoneMap::identity(&c3), &p, &p).unwrap());
    }

    #[test]
    fn hat_functor_examples_and_laws() {
        let caps = Caps::default();
        let lifted = FunctorExpr::lift(FunctorExpr::var());
        let c2 = ch(2);
        let obj = hat_functor_obj(&lifted, &Idempotent::const_bottom(&c2), &caps).unwrap();
        assert_eq!(obj.size(), 2);
        let id = Idempotent::identity(&c2);
        assert_eq!(*hat_functor_obj(&lifted, &id, &caps).unwrap(), lift(&c2, &caps).unwrap());
        let carriers: Vec<_> = enumerate_pointed_posets(3);
        for f in [lifted, FunctorExpr::sum(FunctorExpr::one(), FunctorExpr::var())] {
            let rep = hat_functor_laws(&f, &carriers, &caps).unwrap();
            assert!(rep.composition_checks > 0 && rep.embedding_checks > 0);
        }
        let mixed = FunctorExpr::fun(FunctorExpr::var(), FunctorExpr::var());
        assert!(hat_functor_mor(&mixed, id.map(), &id, &id, &caps).is_err());
    }

    #[test]
    fn ed_is_a_pointed_cpo() {
        let rep = ed_cpo_check(&ch(3), 1000).unwrap();
        assert_eq!(rep.size, 4);
        assert!(rep.holds(), "{rep:?}");
        let one = ed_cpo_check(&Arc::new(FinPoset::one()), 10).unwrap();
        assert_eq!(one.size, 1);
        assert!(one.holds());
    }

    #[test]
    fn slice_equivalence_on_ch3() {
        let rep = ed_slice_equivalence(&ch(3), 10_000).unwrap();
        assert!(rep.holds(), "{rep:?}");
        let images: Vec<Vec<usize>> = rep.classes.iter().map(|c| c.image.clone()).collect();
        assert_eq!(images, vec![vec![0], vec![0, 1], vec![0, 1, 2], vec![0, 2]]);
    }

    #[test]
    fn fiber_and_claim_audit() {
        let c2 = ch(2);
        let all = karoubi_rel_fiber(&Idempotent::identity(&c2), 100).unwrap();
        assert_eq!(all.fiber.len(), all.candidates);
        assert!(all.inclusion_always_holds);
        let rep = karoubi_rel_fiber(&Idempotent::const_bottom(&c2), 100).unwrap();
        assert_eq!(rep.candidates, 8);
        assert_eq!(rep.fiber, vec![BinRel::total(&c2).pairs()]);
        assert!(!rep.inclusion_always_holds);
        let diag = BinRel::diagonal(&c2).pairs();
        let hit = rep.counterexamples.iter().find(|c| c.relation == diag).unwrap();
        assert_eq!(hit.pullback, BinRel::total(&c2).pairs());
    }

    #[test]
    fn pointedness() {
        for d in enumerate_pointed_posets(3) {
            for y in enumerate_pointed_posets(3) {
                for p in enumerate_idempotents(&d, 1000).unwrap() {
                    for q in enumerate_idempotents(&y, 1000).unwrap() {
                        let rep = pointedness_check(&p, &q, 1000).unwrap();
                        assert!(rep.bottom_is_hom && rep.bottom_is_least && rep.homs > 0);
                    }
                }
            }
        }
    }

    #[test]
    fn order_conditions_agree_beyond_deflationary() {
        let c3 = ch(3);
        let p = Idempotent::new(MonotoneMap::new(c3.clone(), c3.clone(), vec![0, 0, 2]).unwrap()).unwrap();
        let q = Idempotent::new(MonotoneMap::new(c3.clone(), c3.clone(), vec![0, 2, 2]).unwrap()).unwrap();
        assert!(!idem_leq(&p, &q).unwrap());
        let all = enumerate_idempotents(&c3, 1000).unwrap();
        for a in &all {
            for b in &all {
                let both = idem_leq(a, b).unwrap() && idem_leq(b, a).unwrap();
                assert_eq!(both, a == b);
            }
        }
    }
}
