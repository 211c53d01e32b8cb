//! Mixed-variance functor expressions `F(X⁻, X⁺)` and their actions on
//! objects, maps, embedding-projection pairs and relations.
//!
//! Evaluation always passes the pair of arguments down the tree, swapping
//! them under the left child of `Fun`. A `Var` leaf therefore always reads
//! the positive argument of its own call; its recorded polarity says which
//! outer argument that is.

use std::fmt;
use std::sync::Arc;

use crate::ep::{verify_ep_pair, EpPair};
use crate::error::{Caps, Error, Result};
use crate::map::MonotoneMap;
use crate::poset::{hom_poset, lift, product, sum_sep, Elem, FinPoset, Shape};
use crate::relation::BinRel;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Polarity {
    Pos,
    Neg,
}

impl Polarity {
    pub fn flip(self) -> Self {
        match self {
            Polarity::Pos => Polarity::Neg,
            Polarity::Neg => Polarity::Pos,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum FunctorExpr {
    One,
    Const { poset: Arc<FinPoset>, rel: BinRel },
    Var(Polarity),
    Lift(Box<FunctorExpr>),
    Prod(Box<FunctorExpr>, Box<FunctorExpr>),
    SumSep(Box<FunctorExpr>, Box<FunctorExpr>),
    Fun(Box<FunctorExpr>, Box<FunctorExpr>),
}

impl FunctorExpr {
    pub fn one() -> Self {
        FunctorExpr::One
    }

    /// The recursion variable, in positive position.
    pub fn var() -> Self {
        FunctorExpr::Var(Polarity::Pos)
    }

    /// Constant functor with an admissible base relation.
    pub fn constant(poset: Arc<FinPoset>, rel: BinRel, name: &str) -> Result<Self> {
        let rel = rel.recarrier(&poset)?;
        if !rel.is_admissible() {
            return Err(Error::InadmissibleConstRelation { name: name.to_string() });
        }
        Ok(FunctorExpr::Const { poset, rel })
    }

    pub fn lift(a: FunctorExpr) -> Self {
        FunctorExpr::Lift(Box::new(a))
    }

    pub fn prod(a: FunctorExpr, b: FunctorExpr) -> Self {
        FunctorExpr::Prod(Box::new(a), Box::new(b))
    }

    pub fn sum(a: FunctorExpr, b: FunctorExpr) -> Self {
        FunctorExpr::SumSep(Box::new(a), Box::new(b))
    }

    /// Function space; flips the polarity of every variable in `a`.
    pub fn fun(a: FunctorExpr, b: FunctorExpr) -> Self {
        FunctorExpr::Fun(Box::new(a.flipped()), Box::new(b))
    }

    fn flipped(self) -> Self {
        use FunctorExpr::*;
        match self {
            One => One,
            c @ Const { .. } => c,
            Var(p) => Var(p.flip()),
            Lift(a) => Lift(Box::new(a.flipped())),
            Prod(a, b) => Prod(Box::new(a.flipped()), Box::new(b.flipped())),
            SumSep(a, b) => SumSep(Box::new(a.flipped()), Box::new(b.flipped())),
            Fun(a, b) => Fun(Box::new(a.flipped()), Box::new(b.flipped())),
        }
    }

    /// Polarities of the variable occurrences, left to right.
    pub fn var_polarities(&self) -> Vec<Polarity> {
        let mut out = Vec::new();
        self.collect_polarities(&mut out);
        out
    }

    fn collect_polarities(&self, out: &mut Vec<Polarity>) {
        use FunctorExpr::*;
        match self {
            One | Const { .. } => {}
            Var(p) => out.push(*p),
            Lift(a) => a.collect_polarities(out),
            Prod(a, b) | SumSep(a, b) | Fun(a, b) => {
                a.collect_polarities(out);
                b.collect_polarities(out);
            }
        }
    }

    /// Whether every recorded polarity follows the flipping rule.
    pub fn polarity_consistent(&self) -> bool {
        self.consistent_under(Polarity::Pos)
    }

    fn consistent_under(&self, expected: Polarity) -> bool {
        use FunctorExpr::*;
        match self {
            One | Const { .. } => true,
            Var(p) => *p == expected,
            Lift(a) => a.consistent_under(expected),
            Prod(a, b) | SumSep(a, b) => a.consistent_under(expected) && b.consistent_under(expected),
            Fun(a, b) => a.consistent_under(expected.flip()) && b.consistent_under(expected),
        }
    }

    /// True when no variable occurs negatively.
    pub fn is_covariant(&self) -> bool {
        self.var_polarities().iter().all(|&p| p == Polarity::Pos)
    }
}

impl fmt::Display for FunctorExpr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        use FunctorExpr::*;
        match self {
            One => write!(f, "one"),
            Const { poset, rel } => write!(f, "const({}, {})", poset_literal(poset), rel_literal(rel)),
            Var(_) => write!(f, "D"),
            Lift(a) => write!(f, "lift({a})"),
            Prod(a, b) => write!(f, "prod({a}, {b})"),
            SumSep(a, b) => write!(f, "sum({a}, {b})"),
            Fun(a, b) => write!(f, "fun({a}, {b})"),
        }
    }
}

/// DSL rendering of a plain poset, using the elements' original labels.
pub fn poset_literal(p: &FinPoset) -> String {
    if let Some(label) = p.label() {
        return label.to_string();
    }
    let name = |x: usize| match p.tag(x) {
        Elem::Atom(i) => *i,
        _ => x,
    };
    let le: Vec<String> = p.covers().into_iter().map(|(x, y)| format!("({}, {})", name(x), name(y))).collect();
    format!("poset {{ elems: {}; le: [{}]; bot: {} }}", p.size(), le.join(", "), name(p.bottom()))
}

fn rel_literal(r: &BinRel) -> String {
    let c = r.carrier();
    if *r == BinRel::diagonal(c) {
        return "diag".into();
    }
    if *r == BinRel::total(c) {
        return "total".into();
    }
    let name = |x: usize| match c.tag(x) {
        Elem::Atom(i) => *i,
        _ => x,
    };
    let mut pairs: Vec<(usize, usize)> = r.pairs().into_iter().map(|(x, y)| (name(x), name(y))).collect();
    pairs.sort();
    let items: Vec<String> = pairs.iter().map(|(x, y)| format!("({x}, {y})")).collect();
    format!("pairs[{}]", items.join(", "))
}

/// The three actions of a mixed-variance functor. Implemented by
/// [`FunctorExpr`]; law checkers and engines are generic over it so that
/// deliberately broken actions can be tested against them.
pub trait FunctorAction {
    /// `F(X⁻, X⁺)`.
    fn obj(&self, xneg: &Arc<FinPoset>, xpos: &Arc<FinPoset>, caps: &Caps) -> Result<Arc<FinPoset>>;

    /// `F(fneg, fpos) : src → tgt` for `fneg : X⁻' → X⁻`, `fpos : X⁺ → X⁺'`,
    /// where `src = F(X⁻, X⁺)` and `tgt = F(X⁻', X⁺')` are supplied.
    fn map_between(
        &self,
        fneg: &MonotoneMap,
        fpos: &MonotoneMap,
        src: &Arc<FinPoset>,
        tgt: &Arc<FinPoset>,
    ) -> Result<MonotoneMap>;

    /// `F(R, S)` as a relation on the supplied carrier `F(X⁻, X⁺)`.
    fn rel_into(&self, rneg: &BinRel, spos: &BinRel, target: &Arc<FinPoset>) -> Result<BinRel>;

    fn map(&self, fneg: &MonotoneMap, fpos: &MonotoneMap, caps: &Caps) -> Result<MonotoneMap> {
        let src = self.obj(fneg.cod(), fpos.dom(), caps)?;
        let tgt = self.obj(fneg.dom(), fpos.cod(), caps)?;
        self.map_between(fneg, fpos, &src, &tgt)
    }

    fn rel(&self, rneg: &BinRel, spos: &BinRel, caps: &Caps) -> Result<BinRel> {
        let target = self.obj(rneg.carrier(), spos.carrier(), caps)?;
        self.rel_into(rneg, spos, &target)
    }
}

impl FunctorAction for FunctorExpr {
    fn obj(&self, xneg: &Arc<FinPoset>, xpos: &Arc<FinPoset>, caps: &Caps) -> Result<Arc<FinPoset>> {
        use FunctorExpr::*;
        Ok(match self {
            One => Arc::new(FinPoset::one()),
            Const { poset, .. } => poset.clone(),
            Var(_) => xpos.clone(),
            Lift(a) => Arc::new(lift(&a.obj(xneg, xpos, caps)?, caps)?),
            Prod(a, b) => Arc::new(product(&a.obj(xneg, xpos, caps)?, &b.obj(xneg, xpos, caps)?, caps)?),
            SumSep(a, b) => Arc::new(sum_sep(&a.obj(xneg, xpos, caps)?, &b.obj(xneg, xpos, caps)?, caps)?),
            Fun(a, b) => Arc::new(hom_poset(&a.obj(xpos, xneg, caps)?, &b.obj(xneg, xpos, caps)?, caps)?),
        })
    }

    fn map_between(
        &self,
        fneg: &MonotoneMap,
        fpos: &MonotoneMap,
        src: &Arc<FinPoset>,
        tgt: &Arc<FinPoset>,
    ) -> Result<MonotoneMap> {
        let table = map_table(self, fneg.table(), fpos.table(), src, tgt, &mut |_, _, _, _| None)?;
        Ok(MonotoneMap::new_unchecked(src.clone(), tgt.clone(), table))
    }

    fn rel_into(&self, rneg: &BinRel, spos: &BinRel, target: &Arc<FinPoset>) -> Result<BinRel> {
        use FunctorExpr::*;
        match (self, target.shape()) {
            (One, _) => Ok(BinRel::total(target)),
            (Const { rel, .. }, _) => rel.recarrier(target),
            (Var(_), _) => spos.recarrier(target),
            (Lift(a), Shape::Lift(inner)) => {
                let r = a.rel_into(rneg, spos, inner)?;
                Ok(BinRel::from_fn(target, |x, y| match (target.tag(x), target.tag(y)) {
                    (Elem::Bot, Elem::Bot) => true,
                    (Elem::Up(u), Elem::Up(v)) => r.contains(*u, *v),
                    _ => false,
                }))
            }
            (Prod(a, b), Shape::Prod(l, r)) => {
                let ra = a.rel_into(rneg, spos, l)?;
                let rb = b.rel_into(rneg, spos, r)?;
                Ok(BinRel::from_fn(target, |x, y| match (target.tag(x), target.tag(y)) {
                    (Elem::Pair(a1, b1), Elem::Pair(a2, b2)) => ra.contains(*a1, *a2) && rb.contains(*b1, *b2),
                    _ => false,
                }))
            }
            (SumSep(a, b), Shape::Sum(l, r)) => {
                let ra = a.rel_into(rneg, spos, l)?;
                let rb = b.rel_into(rneg, spos, r)?;
                Ok(BinRel::from_fn(target, |x, y| match (target.tag(x), target.tag(y)) {
                    (Elem::Bot, Elem::Bot) => true,
                    (Elem::Inl(u), Elem::Inl(v)) => ra.contains(*u, *v),
                    (Elem::Inr(u), Elem::Inr(v)) => rb.contains(*u, *v),
                    _ => false,
                }))
            }
            (Fun(a, b), Shape::Fun(dom, cod)) => {
                let ra = a.rel_into(spos, rneg, dom)?;
                let rb = b.rel_into(rneg, spos, cod)?;
                let arg_pairs = ra.pairs();
                Ok(BinRel::from_fn(target, |g, h| match (target.tag(g), target.tag(h)) {
                    (Elem::Map(tg), Elem::Map(th)) => arg_pairs.iter().all(|&(x, y)| rb.contains(tg[x], th[y])),
                    _ => false,
                }))
            }
            _ => Err(shape_mismatch(self)),
        }
    }
}

fn shape_mismatch(expr: &FunctorExpr) -> Error {
    Error::TypeMismatch(format!("carrier was not built by `{expr}`"))
}

fn lookup(tgt: &FinPoset, tag: Elem) -> Result<usize> {
    tgt.index_of(&tag)
        .ok_or_else(|| Error::TypeMismatch(format!("image element {tag:?} is not in the target carrier")))
}

/// Hook letting a test fixture replace the function-space combination step.
/// Receives `(h, a_table, b_table, target domain size)`.
pub(crate) type FunHook<'a> = dyn FnMut(&[usize], &[usize], &[usize], usize) -> Option<Vec<usize>> + 'a;

/// Table of `F(fneg, fpos) : src → tgt`, computed bottom-up from the
/// component tables.
pub(crate) fn map_table(
    expr: &FunctorExpr,
    fneg: &[usize],
    fpos: &[usize],
    src: &FinPoset,
    tgt: &FinPoset,
    hook: &mut FunHook<'_>,
) -> Result<Vec<usize>> {
    use FunctorExpr::*;
    match (expr, src.shape(), tgt.shape()) {
        (One, _, _) => Ok(vec![tgt.bottom(); src.size()]),
        (Const { poset, .. }, _, _) => {
            if **poset != *src || **poset != *tgt {
                return Err(Error::TypeMismatch("constant functor applied to a foreign carrier".into()));
            }
            Ok(src.elements().collect())
        }
        (Var(_), _, _) => {
            if fpos.len() != src.size() || fpos.iter().any(|&y| y >= tgt.size()) {
                return Err(Error::TypeMismatch("variable map does not fit the carriers".into()));
            }
            Ok(fpos.to_vec())
        }
        (Lift(a), Shape::Lift(si), Shape::Lift(ti)) => {
            let inner = map_table(a, fneg, fpos, si, ti, hook)?;
            src.elements()
                .map(|x| match src.tag(x) {
                    Elem::Up(u) => lookup(tgt, Elem::Up(inner[*u])),
                    _ => lookup(tgt, Elem::Bot),
                })
                .collect()
        }
        (Prod(a, b), Shape::Prod(sl, sr), Shape::Prod(tl, tr)) => {
            let ta = map_table(a, fneg, fpos, sl, tl, hook)?;
            let tb = map_table(b, fneg, fpos, sr, tr, hook)?;
            src.elements()
                .map(|x| match src.tag(x) {
                    Elem::Pair(u, v) => lookup(tgt, Elem::Pair(ta[*u], tb[*v])),
                    other => Err(Error::InternalInvariantViolation(format!("product element tagged {other:?}"))),
                })
                .collect()
        }
        (SumSep(a, b), Shape::Sum(sl, sr), Shape::Sum(tl, tr)) => {
            let ta = map_table(a, fneg, fpos, sl, tl, hook)?;
            let tb = map_table(b, fneg, fpos, sr, tr, hook)?;
            src.elements()
                .map(|x| match src.tag(x) {
                    Elem::Inl(u) => lookup(tgt, Elem::Inl(ta[*u])),
                    Elem::Inr(v) => lookup(tgt, Elem::Inr(tb[*v])),
                    _ => lookup(tgt, Elem::Bot),
                })
                .collect()
        }
        (Fun(a, b), Shape::Fun(sd, sc), Shape::Fun(td, tc)) => {
            // The argument side runs backwards: A(X⁺', X⁻') → A(X⁺, X⁻).
            let ta = map_table(a, fpos, fneg, td, sd, hook)?;
            let tb = map_table(b, fneg, fpos, sc, tc, hook)?;
            src.elements()
                .map(|x| match src.tag(x) {
                    Elem::Map(h) => {
                        let image = hook(h, &ta, &tb, td.size())
                            .unwrap_or_else(|| (0..td.size()).map(|z| tb[h[ta[z]]]).collect());
                        lookup(tgt, Elem::Map(image))
                    }
                    other => Err(Error::InternalInvariantViolation(format!("function-space element tagged {other:?}"))),
                })
                .collect()
        }
        _ => Err(shape_mismatch(expr)),
    }
}

/// `F(X⁻, X⁺)`.
pub fn eval_obj(f: &FunctorExpr, xneg: &Arc<FinPoset>, xpos: &Arc<FinPoset>, caps: &Caps) -> Result<Arc<FinPoset>> {
    f.obj(xneg, xpos, caps)
}

/// `F(fneg, fpos)` for `fneg : X⁻' → X⁻` and `fpos : X⁺ → X⁺'`.
pub fn eval_map(f: &FunctorExpr, fneg: &MonotoneMap, fpos: &MonotoneMap, caps: &Caps) -> Result<MonotoneMap> {
    f.map(fneg, fpos, caps)
}

/// `F(R⁻, S⁺)`.
pub fn eval_rel(f: &FunctorExpr, rneg: &BinRel, spos: &BinRel, caps: &Caps) -> Result<BinRel> {
    f.rel(rneg, spos, caps)
}

/// `F^e(f) = (F(f.p, f.e), F(f.e, f.p))`, verified.
pub fn eval_ep(f: &FunctorExpr, pair: &EpPair, caps: &Caps) -> Result<EpPair> {
    let src = f.obj(pair.source(), pair.source(), caps)?;
    let tgt = f.obj(pair.target(), pair.target(), caps)?;
    eval_ep_between(f, pair, &src, &tgt)
}

/// As [`eval_ep`], with the carriers `F(X, X)` and `F(Y, Y)` supplied.
pub fn eval_ep_between<F: FunctorAction + ?Sized>(
    f: &F,
    pair: &EpPair,
    src: &Arc<FinPoset>,
    tgt: &Arc<FinPoset>,
) -> Result<EpPair> {
    let e = f.map_between(pair.p(), pair.e(), src, tgt)?;
    let p = f.map_between(pair.e(), pair.p(), tgt, src)?;
    verify_ep_pair(e, p).map_err(|err| {
        Error::InternalInvariantViolation(format!("functor image of an ep pair is not an ep pair: {err}"))
    })
}
