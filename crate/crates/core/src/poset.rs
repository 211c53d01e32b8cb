//! Finite pointed posets: the executable stand-in for pointed CPOs.
//!
//! Every finite poset is trivially complete (increasing chains stabilize),
//! and every monotone map between finite posets is continuous. A poset is
//! stored as a dense order matrix over element ids `0..size`, together with
//! a structural tag per element recording how the element was built (a pair,
//! an injection, a lifted element, a map table, ...). Tags survive
//! canonicalization, which only permutes ids.

use std::collections::HashMap;
use std::fmt::Write as _;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Axiom, Caps, Error, Result};

/// Structural description of one element of a constructed poset.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Elem {
    /// Element of a user-supplied poset, carrying its original label.
    Atom(usize),
    /// Fresh bottom of a lift or separated sum.
    Bot,
    /// Lifted copy of an element of the inner poset.
    Up(usize),
    Pair(usize, usize),
    Inl(usize),
    Inr(usize),
    /// Monotone map, as its table over the domain's ids.
    Map(Vec<usize>),
}

/// How a poset was constructed; holds the component posets.
#[derive(Clone, Debug)]
pub enum Shape {
    Plain,
    Lift(Arc<FinPoset>),
    Prod(Arc<FinPoset>, Arc<FinPoset>),
    Sum(Arc<FinPoset>, Arc<FinPoset>),
    /// Function space `Fun(dom, cod)`: monotone maps `dom → cod`.
    Fun(Arc<FinPoset>, Arc<FinPoset>),
}

/// Identity of carriers: pointer equality first, then structure.
pub fn same_poset(a: &Arc<FinPoset>, b: &Arc<FinPoset>) -> bool {
    Arc::ptr_eq(a, b) || **a == **b
}

impl PartialEq for Shape {
    fn eq(&self, other: &Self) -> bool {
        match (self, other) {
            (Shape::Plain, Shape::Plain) => true,
            (Shape::Lift(a), Shape::Lift(b)) => same_poset(a, b),
            (Shape::Prod(a, b), Shape::Prod(c, d))
            | (Shape::Sum(a, b), Shape::Sum(c, d))
            | (Shape::Fun(a, b), Shape::Fun(c, d)) => same_poset(a, c) && same_poset(b, d),
            _ => false,
        }
    }
}

impl Eq for Shape {}

/// Unvalidated poset description: element count, generating order pairs
/// `(i, j)` meaning `i ⊑ j`, and the claimed bottom.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct RawPoset {
    pub elems: usize,
    pub le: Vec<(usize, usize)>,
    pub bot: usize,
}

/// A finite pointed partial order in canonical form.
#[derive(Clone, Debug)]
pub struct FinPoset {
    size: usize,
    leq: Vec<bool>,
    bottom: usize,
    label: Option<String>,
    tags: Vec<Elem>,
    shape: Shape,
    index: HashMap<Elem, usize>,
}

impl PartialEq for FinPoset {
    fn eq(&self, other: &Self) -> bool {
        self.size == other.size
            && self.bottom == other.bottom
            && self.leq == other.leq
            && self.tags == other.tags
            && self.shape == other.shape
    }
}

impl Eq for FinPoset {}

impl FinPoset {
    fn assemble(size: usize, leq: Vec<bool>, bottom: usize, tags: Vec<Elem>, shape: Shape) -> Self {
        debug_assert_eq!(leq.len(), size * size);
        debug_assert_eq!(tags.len(), size);
        let index = tags.iter().cloned().enumerate().map(|(i, t)| (t, i)).collect();
        FinPoset { size, leq, bottom, label: None, tags, shape, index }
    }

    /// The one-point poset `1`.
    pub fn one() -> Self {
        Self::assemble(1, vec![true], 0, vec![Elem::Atom(0)], Shape::Plain).with_label("one")
    }

    /// The `n`-element chain `0 ⊑ 1 ⊑ … ⊑ n-1`.
    pub fn chain(n: usize) -> Result<Self> {
        if n == 0 {
            return Err(Error::TypeMismatch("a pointed chain needs at least one element".into()));
        }
        let mut leq = vec![false; n * n];
        for i in 0..n {
            for j in i..n {
                leq[i * n + j] = true;
            }
        }
        let tags = (0..n).map(Elem::Atom).collect();
        Ok(Self::assemble(n, leq, 0, tags, Shape::Plain).with_label(format!("chain({n})")))
    }

    /// Builds a poset from a full order matrix, checking all three axioms
    /// literally and pointedness, then canonicalizes.
    pub fn from_matrix(size: usize, leq: Vec<bool>, bottom: usize) -> Result<Self> {
        if leq.len() != size * size {
            return Err(Error::TypeMismatch(format!(
                "order matrix has {} cells, expected {}",
                leq.len(),
                size * size
            )));
        }
        if bottom >= size {
            return Err(Error::ElementOutOfRange { id: bottom, size });
        }
        for i in 0..size {
            if !leq[i * size + i] {
                return Err(Error::NotAPartialOrder { axiom: Axiom::Reflexivity, witness: (i, i) });
            }
        }
        for i in 0..size {
            for j in (i + 1)..size {
                if leq[i * size + j] && leq[j * size + i] {
                    return Err(Error::NotAPartialOrder { axiom: Axiom::Antisymmetry, witness: (i, j) });
                }
            }
        }
        for i in 0..size {
            for j in 0..size {
                if !leq[i * size + j] {
                    continue;
                }
                for k in 0..size {
                    if leq[j * size + k] && !leq[i * size + k] {
                        return Err(Error::NotAPartialOrder {
                            axiom: Axiom::Transitivity,
                            witness: (i, k),
                        });
                    }
                }
            }
        }
        check_bottom(size, &leq, bottom)?;
        let tags = (0..size).map(Elem::Atom).collect();
        Ok(Self::assemble(size, leq, bottom, tags, Shape::Plain).canonical())
    }

    pub fn with_label(mut self, label: impl Into<String>) -> Self {
        self.label = Some(label.into());
        self
    }

    pub fn size(&self) -> usize {
        self.size
    }

    pub fn bottom(&self) -> usize {
        self.bottom
    }

    pub fn label(&self) -> Option<&str> {
        self.label.as_deref()
    }

    #[inline]
    pub fn leq(&self, x: usize, y: usize) -> bool {
        self.leq[x * self.size + y]
    }

    pub fn tags(&self) -> &[Elem] {
        &self.tags
    }

    pub fn tag(&self, x: usize) -> &Elem {
        &self.tags[x]
    }

    pub fn shape(&self) -> &Shape {
        &self.shape
    }

    /// Element id carrying the given structural tag.
    pub fn index_of(&self, tag: &Elem) -> Option<usize> {
        self.index.get(tag).copied()
    }

    /// Id of the element a user referred to by its original label.
    pub fn atom(&self, label: usize) -> Option<usize> {
        self.index_of(&Elem::Atom(label))
    }

    pub fn elements(&self) -> std::ops::Range<usize> {
        0..self.size
    }

    /// Length of the longest chain from the bottom to each element.
    pub fn heights(&self) -> Vec<usize> {
        let n = self.size;
        let mut order: Vec<usize> = (0..n).collect();
        let down = |x: usize| (0..n).filter(|&y| self.leq(y, x)).count();
        order.sort_by_key(|&x| down(x));
        let mut h = vec![0usize; n];
        for (i, &x) in order.iter().enumerate() {
            for &y in &order[..i] {
                if y != x && self.leq(y, x) {
                    h[x] = h[x].max(h[y] + 1);
                }
            }
        }
        h
    }

    /// Canonicalizing permutation: `perm[new] = old`.
    ///
    /// Elements are ranked by height (a linear extension), then by the
    /// lexicographic order of their ≤-row restricted to already placed
    /// elements, then by current id.
    pub fn canonical_permutation(&self) -> Vec<usize> {
        let n = self.size;
        let heights = self.heights();
        let max_h = heights.iter().copied().max().unwrap_or(0);
        let mut new_pos = vec![usize::MAX; n];
        let mut perm = Vec::with_capacity(n);
        for h in 0..=max_h {
            let placed = perm.len();
            let mut level: Vec<(Vec<bool>, usize)> = (0..n)
                .filter(|&x| heights[x] == h)
                .map(|x| {
                    let mut row = vec![false; placed];
                    for y in 0..n {
                        if y != x && self.leq(y, x) {
                            row[new_pos[y]] = true;
                        }
                    }
                    (row, x)
                })
                .collect();
            level.sort();
            for (_, x) in level {
                new_pos[x] = perm.len();
                perm.push(x);
            }
        }
        perm
    }

    /// Applies a relabeling `perm[new] = old`. The result is generally not
    /// in canonical form; use [`FinPoset::canonical`] for that.
    pub fn relabeled(&self, perm: &[usize]) -> Result<Self> {
        let n = self.size;
        if perm.len() != n {
            return Err(Error::TypeMismatch("permutation length differs from poset size".into()));
        }
        let mut inv = vec![usize::MAX; n];
        for (new, &old) in perm.iter().enumerate() {
            if old >= n || inv[old] != usize::MAX {
                return Err(Error::TypeMismatch("not a permutation".into()));
            }
            inv[old] = new;
        }
        let mut leq = vec![false; n * n];
        for a in 0..n {
            for b in 0..n {
                leq[a * n + b] = self.leq(perm[a], perm[b]);
            }
        }
        let tags = perm.iter().map(|&old| self.tags[old].clone()).collect();
        let mut out = Self::assemble(n, leq, inv[self.bottom], tags, self.shape.clone());
        out.label = self.label.clone();
        Ok(out)
    }

    /// Canonical form. Idempotent.
    pub fn canonical(&self) -> Self {
        let perm = self.canonical_permutation();
        self.relabeled(&perm).expect("canonical permutation is a permutation")
    }

    pub fn is_canonical(&self) -> bool {
        self.canonical_permutation().iter().enumerate().all(|(i, &p)| i == p)
    }

    /// Covering pairs `(x, y)`: `x ⊏ y` with nothing strictly between.
    pub fn covers(&self) -> Vec<(usize, usize)> {
        let n = self.size;
        let mut out = Vec::new();
        for x in 0..n {
            for y in 0..n {
                if x == y || !self.leq(x, y) {
                    continue;
                }
                let between = (0..n).any(|z| z != x && z != y && self.leq(x, z) && self.leq(z, y));
                if !between {
                    out.push((x, y));
                }
            }
        }
        out
    }

    /// Elements directly below `x` in the Hasse diagram.
    pub fn lower_covers(&self, x: usize) -> Vec<usize> {
        let n = self.size;
        (0..n)
            .filter(|&y| {
                y != x
                    && self.leq(y, x)
                    && !(0..n).any(|z| z != x && z != y && self.leq(y, z) && self.leq(z, x))
            })
            .collect()
    }

    /// Human-readable rendering of an element, following its tag.
    pub fn describe(&self, x: usize) -> String {
        match (&self.tags[x], &self.shape) {
            (Elem::Atom(i), _) => i.to_string(),
            (Elem::Bot, _) => "⊥".to_string(),
            (Elem::Up(i), Shape::Lift(inner)) => format!("up {}", inner.describe(*i)),
            (Elem::Pair(a, b), Shape::Prod(l, r)) => format!("({}, {})", l.describe(*a), r.describe(*b)),
            (Elem::Inl(a), Shape::Sum(l, _)) => format!("inl {}", l.describe(*a)),
            (Elem::Inr(b), Shape::Sum(_, r)) => format!("inr {}", r.describe(*b)),
            (Elem::Map(t), _) => format!("{t:?}"),
            (tag, _) => format!("{tag:?}"),
        }
    }

    /// Graphviz rendering of the Hasse diagram (covering edges only).
    pub fn to_dot(&self, name: &str) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "digraph \"{}\" {{", name.replace('"', "'"));
        let _ = writeln!(s, "  rankdir=BT;");
        for x in 0..self.size {
            let _ = writeln!(s, "  n{x} [label=\"{}\"];", self.describe(x).replace('"', "'"));
        }
        for (x, y) in self.covers() {
            let _ = writeln!(s, "  n{x} -> n{y};");
        }
        s.push_str("}\n");
        s
    }

    /// The full order matrix as rows, for serialization.
    pub fn order_rows(&self) -> Vec<Vec<bool>> {
        (0..self.size).map(|x| (0..self.size).map(|y| self.leq(x, y)).collect()).collect()
    }

    /// Sub-poset induced on `members` (in the given order), before
    /// canonicalization; the bottom must be a member and least among them.
    pub(crate) fn induced(&self, members: &[usize]) -> Result<Self> {
        let k = members.len();
        let mut leq = vec![false; k * k];
        for (a, &x) in members.iter().enumerate() {
            for (b, &y) in members.iter().enumerate() {
                leq[a * k + b] = self.leq(x, y);
            }
        }
        let bottom = members
            .iter()
            .position(|&m| members.iter().all(|&y| self.leq(m, y)))
            .ok_or(Error::NoLeastElement { bottom: members.first().copied().unwrap_or(0), witness: 0 })?;
        let tags = members.iter().map(|&m| Elem::Atom(m)).collect();
        Ok(Self::assemble(k, leq, bottom, tags, Shape::Plain))
    }
}

fn check_bottom(size: usize, leq: &[bool], bottom: usize) -> Result<()> {
    match (0..size).find(|&x| !leq[bottom * size + x]) {
        Some(witness) => Err(Error::NoLeastElement { bottom, witness }),
        None => Ok(()),
    }
}

/// Validates a raw description, closing the given pairs reflexively and
/// transitively, and returns the canonical-form poset.
pub fn validate_poset(raw: &RawPoset) -> Result<FinPoset> {
    let n = raw.elems;
    if n == 0 {
        return Err(Error::TypeMismatch("a pointed poset needs at least one element".into()));
    }
    if raw.bot >= n {
        return Err(Error::ElementOutOfRange { id: raw.bot, size: n });
    }
    let mut leq = vec![false; n * n];
    for i in 0..n {
        leq[i * n + i] = true;
    }
    for &(i, j) in &raw.le {
        for id in [i, j] {
            if id >= n {
                return Err(Error::ElementOutOfRange { id, size: n });
            }
        }
        leq[i * n + j] = true;
    }
    for k in 0..n {
        for i in 0..n {
            if leq[i * n + k] {
                for j in 0..n {
                    if leq[k * n + j] {
                        leq[i * n + j] = true;
                    }
                }
            }
        }
    }
    for i in 0..n {
        for j in (i + 1)..n {
            if leq[i * n + j] && leq[j * n + i] {
                return Err(Error::NotAPartialOrder { axiom: Axiom::Antisymmetry, witness: (i, j) });
            }
        }
    }
    check_bottom(n, &leq, raw.bot)?;
    let tags = (0..n).map(Elem::Atom).collect();
    Ok(FinPoset::assemble(n, leq, raw.bot, tags, Shape::Plain).canonical())
}

/// `X⊥`: a fresh bottom strictly below a copy of `X`.
pub fn lift(x: &Arc<FinPoset>, caps: &Caps) -> Result<FinPoset> {
    let n = x.size() + 1;
    caps.check_size("lift", n)?;
    let mut leq = vec![false; n * n];
    leq[..n].fill(true);
    for a in 0..x.size() {
        for b in 0..x.size() {
            leq[(a + 1) * n + (b + 1)] = x.leq(a, b);
        }
    }
    let tags = std::iter::once(Elem::Bot).chain((0..x.size()).map(Elem::Up)).collect();
    Ok(FinPoset::assemble(n, leq, 0, tags, Shape::Lift(x.clone())).canonical())
}

/// Componentwise-ordered product with bottom `(⊥, ⊥)`.
pub fn product(x: &Arc<FinPoset>, y: &Arc<FinPoset>, caps: &Caps) -> Result<FinPoset> {
    let (kx, ky) = (x.size(), y.size());
    let n = kx.saturating_mul(ky);
    caps.check_size("product", n)?;
    let mut leq = vec![false; n * n];
    for a in 0..kx {
        for b in 0..ky {
            for c in 0..kx {
                for d in 0..ky {
                    leq[(a * ky + b) * n + (c * ky + d)] = x.leq(a, c) && y.leq(b, d);
                }
            }
        }
    }
    let tags = (0..kx).flat_map(|a| (0..ky).map(move |b| Elem::Pair(a, b))).collect();
    let bottom = x.bottom() * ky + y.bottom();
    Ok(FinPoset::assemble(n, leq, bottom, tags, Shape::Prod(x.clone(), y.clone())).canonical())
}

/// Separated sum: a fresh bottom below disjoint, mutually incomparable
/// copies of `X` and `Y`.
pub fn sum_sep(x: &Arc<FinPoset>, y: &Arc<FinPoset>, caps: &Caps) -> Result<FinPoset> {
    let (kx, ky) = (x.size(), y.size());
    let n = 1 + kx + ky;
    caps.check_size("sum", n)?;
    let mut leq = vec![false; n * n];
    leq[..n].fill(true);
    for a in 0..kx {
        for b in 0..kx {
            leq[(1 + a) * n + (1 + b)] = x.leq(a, b);
        }
    }
    for a in 0..ky {
        for b in 0..ky {
            leq[(1 + kx + a) * n + (1 + kx + b)] = y.leq(a, b);
        }
    }
    let tags = std::iter::once(Elem::Bot)
        .chain((0..kx).map(Elem::Inl))
        .chain((0..ky).map(Elem::Inr))
        .collect();
    Ok(FinPoset::assemble(n, leq, 0, tags, Shape::Sum(x.clone(), y.clone())).canonical())
}

/// Enumerates monotone maps `dom → cod` as tables, in a deterministic order,
/// keeping only maps whose every assignment satisfies `allowed(x, y)`.
/// Fails with `SizeCapExceeded` once more than `limit` maps are found.
pub fn monotone_tables(
    dom: &FinPoset,
    cod: &FinPoset,
    limit: usize,
    allowed: impl Fn(usize, usize) -> bool,
) -> Result<Vec<Vec<usize>>> {
    let n = dom.size();
    let mut order: Vec<usize> = (0..n).collect();
    let heights = dom.heights();
    order.sort_by_key(|&x| (heights[x], x));
    let covers: Vec<Vec<usize>> = (0..n).map(|x| dom.lower_covers(x)).collect();
    let mut table = vec![usize::MAX; n];
    let mut out = Vec::new();
    fn go(
        i: usize,
        order: &[usize],
        covers: &[Vec<usize>],
        cod: &FinPoset,
        table: &mut Vec<usize>,
        out: &mut Vec<Vec<usize>>,
        limit: usize,
        allowed: &dyn Fn(usize, usize) -> bool,
    ) -> bool {
        if i == order.len() {
            if out.len() == limit {
                return false;
            }
            out.push(table.clone());
            return true;
        }
        let x = order[i];
        for y in 0..cod.size() {
            if !allowed(x, y) || !covers[x].iter().all(|&c| cod.leq(table[c], y)) {
                continue;
            }
            table[x] = y;
            if !go(i + 1, order, covers, cod, table, out, limit, allowed) {
                return false;
            }
        }
        table[x] = usize::MAX;
        true
    }
    if go(0, &order, &covers, cod, &mut table, &mut out, limit, &allowed) {
        Ok(out)
    } else {
        Err(Error::SizeCapExceeded {
            what: "monotone map enumeration".into(),
            limit,
            level: None,
        })
    }
}

/// Function space `Y^X`: all monotone maps ordered pointwise, with bottom
/// the constant-bottom map. Each element is tagged with its table.
pub fn hom_poset(x: &Arc<FinPoset>, y: &Arc<FinPoset>, caps: &Caps) -> Result<FinPoset> {
    let tables = monotone_tables(x, y, caps.max_elements, |_, _| true).map_err(|e| match e {
        Error::SizeCapExceeded { limit, level, .. } => Error::SizeCapExceeded {
            what: format!("hom({}, {}) elements", x.size(), y.size()),
            limit,
            level,
        },
        other => other,
    })?;
    let m = tables.len();
    caps.check_size("hom", m)?;
    let mut leq = vec![false; m * m];
    for (a, f) in tables.iter().enumerate() {
        for (b, g) in tables.iter().enumerate() {
            leq[a * m + b] = f.iter().zip(g).all(|(&u, &v)| y.leq(u, v));
        }
    }
    let bottom_table = vec![y.bottom(); x.size()];
    let bottom = tables
        .iter()
        .position(|t| *t == bottom_table)
        .ok_or_else(|| Error::InternalInvariantViolation("constant-bottom map missing from hom".into()))?;
    let tags = tables.into_iter().map(Elem::Map).collect();
    Ok(FinPoset::assemble(m, leq, bottom, tags, Shape::Fun(x.clone(), y.clone())).canonical())
}

/// Order isomorphism test by backtracking over height-preserving
/// assignments. Tags are ignored.
pub fn isomorphic(a: &FinPoset, b: &FinPoset) -> bool {
    let n = a.size();
    if n != b.size() {
        return false;
    }
    let (ha, hb) = (a.heights(), b.heights());
    let mut sa = ha.clone();
    let mut sb = hb.clone();
    sa.sort_unstable();
    sb.sort_unstable();
    if sa != sb {
        return false;
    }
    fn go(i: usize, a: &FinPoset, b: &FinPoset, ha: &[usize], hb: &[usize], img: &mut Vec<usize>, used: &mut [bool]) -> bool {
        if i == a.size() {
            return true;
        }
        for y in b.elements() {
            if used[y] || ha[i] != hb[y] {
                continue;
            }
            if (0..i).all(|x| a.leq(x, i) == b.leq(img[x], y) && a.leq(i, x) == b.leq(y, img[x])) {
                used[y] = true;
                img.push(y);
                if go(i + 1, a, b, ha, hb, img, used) {
                    return true;
                }
                img.pop();
                used[y] = false;
            }
        }
        false
    }
    go(0, a, b, &ha, &hb, &mut Vec::with_capacity(n), &mut vec![false; n])
}

/// All pointed posets with at most `max_size` elements up to isomorphism,
/// each in canonical form, in order of size.
pub fn enumerate_pointed_posets(max_size: usize) -> Vec<Arc<FinPoset>> {
    let mut out: Vec<Arc<FinPoset>> = Vec::new();
    for k in 1..=max_size {
        // Element 0 is the bottom; enumerate strict orders on 1..k.
        let others: Vec<(usize, usize)> = (1..k)
            .flat_map(|i| (1..k).filter(move |&j| j != i).map(move |j| (i, j)))
            .collect();
        let mut seen: Vec<FinPoset> = Vec::new();
        for mask in 0u64..(1u64 << others.len()) {
            let mut leq = vec![false; k * k];
            for i in 0..k {
                leq[i * k + i] = true;
                leq[i] = true;
            }
            for (bit, &(i, j)) in others.iter().enumerate() {
                if mask >> bit & 1 == 1 {
                    leq[i * k + j] = true;
                }
            }
            if let Ok(p) = FinPoset::from_matrix(k, leq, 0) {
                if !seen.iter().any(|q| isomorphic(q, &p)) {
                    seen.push(p.clone());
                    out.push(Arc::new(p));
                }
            }
        }
    }
    out
}
