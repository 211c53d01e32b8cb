//! The specification language.
//!
//! ```text
//! spec     = { stmt } ;
//! stmt     = "domain" IDENT "=" functor
//!          | "base" IDENT "=" poset
//!          | "rel" IDENT "=" rel
//!          | "depth" INT
//!          | "caps" cap { "," cap }
//!          | "seed" INT ;
//! cap      = ( "max_elements" | "max_pairs" ) "=" INT ;
//! functor  = "one" | IDENT
//!          | "lift" "(" functor ")"
//!          | ( "prod" | "sum" | "fun" ) "(" functor "," functor ")"
//!          | "const" "(" poset "," rel ")" ;
//! poset    = "one" | "chain" "(" INT ")" | IDENT
//!          | "poset" "{" "elems" ":" INT ";" "le" ":" pairs ";" "bot" ":" INT "}" ;
//! rel      = "diag" | "total" | "bot" | "order" | "pairs" pairs | IDENT ;
//! pairs    = "[" [ pair { "," pair } ] "]" ;
//! pair     = "(" INT "," INT ")" ;
//! ```
//!
//! `#` starts a comment running to the end of the line. The identifier
//! bound by `domain` is the recursion variable; any other identifier in a
//! functor is an error. Elements in `pairs` refer to a poset's original
//! element numbers.

use std::collections::BTreeMap;
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::functor::FunctorExpr;
use crate::poset::{validate_poset, FinPoset, RawPoset};
use crate::relation::BinRel;

#[derive(Clone, Debug, PartialEq, Eq)]
enum Tok {
    Ident(String),
    Int(u64),
    Sym(char),
    Eof,
}

impl Tok {
    fn describe(&self) -> String {
        match self {
            Tok::Ident(s) => format!("`{s}`"),
            Tok::Int(n) => format!("`{n}`"),
            Tok::Sym(c) => format!("`{c}`"),
            Tok::Eof => "end of input".into(),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
struct Pos {
    line: usize,
    col: usize,
}

fn lex(text: &str) -> Result<Vec<(Tok, Pos)>> {
    let mut out = Vec::new();
    let chars: Vec<char> = text.chars().collect();
    let (mut i, mut line, mut col) = (0, 1, 1);
    while i < chars.len() {
        let c = chars[i];
        let pos = Pos { line, col };
        if c == '\n' {
            line += 1;
            col = 1;
            i += 1;
        } else if c.is_whitespace() {
            col += 1;
            i += 1;
        } else if c == '#' {
            while i < chars.len() && chars[i] != '\n' {
                i += 1;
            }
        } else if c.is_ascii_digit() {
            let start = i;
            while i < chars.len() && chars[i].is_ascii_digit() {
                i += 1;
            }
            let digits: String = chars[start..i].iter().collect();
            let n = digits.parse().map_err(|_| Error::Parse {
                line,
                col,
                expected: vec!["an integer that fits in 64 bits".into()],
                found: digits.clone(),
            })?;
            col += i - start;
            out.push((Tok::Int(n), pos));
        } else if c.is_alphabetic() || c == '_' {
            let start = i;
            while i < chars.len() && (chars[i].is_alphanumeric() || chars[i] == '_') {
                i += 1;
            }
            col += i - start;
            out.push((Tok::Ident(chars[start..i].iter().collect()), pos));
        } else if "(),={}[];:".contains(c) {
            out.push((Tok::Sym(c), pos));
            col += 1;
            i += 1;
        } else {
            return Err(Error::Parse { line, col, expected: vec!["a token".into()], found: format!("`{c}`") });
        }
    }
    out.push((Tok::Eof, Pos { line, col }));
    Ok(out)
}

#[derive(Clone, Debug)]
enum PosetAst {
    One,
    Chain(usize),
    Literal { raw: RawPoset },
    Name(String, Pos),
}

#[derive(Clone, Debug)]
enum RelAst {
    Diag,
    Total,
    Bot,
    Order,
    Pairs(Vec<(usize, usize)>, Pos),
    Name(String, Pos),
}

#[derive(Clone, Debug)]
enum FunAst {
    One,
    Var(String, Pos),
    Lift(Box<FunAst>),
    Prod(Box<FunAst>, Box<FunAst>),
    Sum(Box<FunAst>, Box<FunAst>),
    Fun(Box<FunAst>, Box<FunAst>),
    Const(PosetAst, RelAst, String),
}

struct Parser {
    toks: Vec<(Tok, Pos)>,
    at: usize,
}

impl Parser {
    fn peek(&self) -> &Tok {
        &self.toks[self.at].0
    }

    fn pos(&self) -> Pos {
        self.toks[self.at].1
    }

    fn bump(&mut self) -> (Tok, Pos) {
        let t = self.toks[self.at].clone();
        if self.at + 1 < self.toks.len() {
            self.at += 1;
        }
        t
    }

    fn fail<T>(&self, expected: &[&str]) -> Result<T> {
        let p = self.pos();
        Err(Error::Parse {
            line: p.line,
            col: p.col,
            expected: expected.iter().map(|s| s.to_string()).collect(),
            found: self.peek().describe(),
        })
    }

    fn sym(&mut self, c: char) -> Result<()> {
        if *self.peek() == Tok::Sym(c) {
            self.bump();
            Ok(())
        } else {
            self.fail(&[&format!("`{c}`")])
        }
    }

    fn keyword(&mut self, k: &str) -> Result<()> {
        if *self.peek() == Tok::Ident(k.into()) {
            self.bump();
            Ok(())
        } else {
            self.fail(&[&format!("`{k}`")])
        }
    }

    fn ident(&mut self) -> Result<(String, Pos)> {
        match self.peek().clone() {
            Tok::Ident(s) => {
                let p = self.pos();
                self.bump();
                Ok((s, p))
            }
            _ => self.fail(&["an identifier"]),
        }
    }

    fn int(&mut self) -> Result<u64> {
        match *self.peek() {
            Tok::Int(n) => {
                self.bump();
                Ok(n)
            }
            _ => self.fail(&["an integer"]),
        }
    }

    fn small(&mut self) -> Result<usize> {
        let p = self.pos();
        let n = self.int()?;
        usize::try_from(n).map_err(|_| Error::Parse {
            line: p.line,
            col: p.col,
            expected: vec!["a smaller integer".into()],
            found: n.to_string(),
        })
    }

    fn pairs(&mut self) -> Result<Vec<(usize, usize)>> {
        self.sym('[')?;
        let mut out = Vec::new();
        if *self.peek() != Tok::Sym(']') {
            loop {
                self.sym('(')?;
                let a = self.small()?;
                self.sym(',')?;
                let b = self.small()?;
                self.sym(')')?;
                out.push((a, b));
                if *self.peek() == Tok::Sym(',') {
                    self.bump();
                } else {
                    break;
                }
            }
        }
        self.sym(']')?;
        Ok(out)
    }

    fn poset(&mut self) -> Result<PosetAst> {
        let (name, p) = self.ident().or_else(|_| self.fail(&["`one`", "`chain`", "`poset`", "a base name"]))?;
        match name.as_str() {
            "one" => Ok(PosetAst::One),
            "chain" => {
                self.sym('(')?;
                let n = self.small()?;
                self.sym(')')?;
                if n == 0 {
                    return Err(Error::Parse { line: p.line, col: p.col, expected: vec!["a positive length".into()], found: "0".into() });
                }
                Ok(PosetAst::Chain(n))
            }
            "poset" => {
                self.sym('{')?;
                self.keyword("elems")?;
                self.sym(':')?;
                let elems = self.small()?;
                self.sym(';')?;
                self.keyword("le")?;
                self.sym(':')?;
                let le = self.pairs()?;
                self.sym(';')?;
                self.keyword("bot")?;
                self.sym(':')?;
                let bot = self.small()?;
                self.sym('}')?;
                Ok(PosetAst::Literal { raw: RawPoset { elems, le, bot } })
            }
            _ => Ok(PosetAst::Name(name, p)),
        }
    }

    fn rel(&mut self) -> Result<RelAst> {
        let (name, p) =
            self.ident().or_else(|_| self.fail(&["`diag`", "`total`", "`bot`", "`order`", "`pairs`", "a relation name"]))?;
        Ok(match name.as_str() {
            "diag" => RelAst::Diag,
            "total" => RelAst::Total,
            "bot" => RelAst::Bot,
            "order" => RelAst::Order,
            "pairs" => RelAst::Pairs(self.pairs()?, p),
            _ => RelAst::Name(name, p),
        })
    }

    fn functor(&mut self) -> Result<FunAst> {
        let start = self.at;
        let (name, p) = self.ident().or_else(|_| {
            self.fail(&["`one`", "`lift`", "`prod`", "`sum`", "`fun`", "`const`", "the domain variable"])
        })?;
        let binary = |s: &mut Self| -> Result<(Box<FunAst>, Box<FunAst>)> {
            s.sym('(')?;
            let a = s.functor()?;
            s.sym(',')?;
            let b = s.functor()?;
            s.sym(')')?;
            Ok((Box::new(a), Box::new(b)))
        };
        Ok(match name.as_str() {
            "one" => FunAst::One,
            "lift" => {
                self.sym('(')?;
                let a = self.functor()?;
                self.sym(')')?;
                FunAst::Lift(Box::new(a))
            }
            "prod" => {
                let (a, b) = binary(self)?;
                FunAst::Prod(a, b)
            }
            "sum" => {
                let (a, b) = binary(self)?;
                FunAst::Sum(a, b)
            }
            "fun" => {
                let (a, b) = binary(self)?;
                FunAst::Fun(a, b)
            }
            "const" => {
                self.sym('(')?;
                let poset = self.poset()?;
                self.sym(',')?;
                let rel = self.rel()?;
                self.sym(')')?;
                let text = self.source_between(start);
                FunAst::Const(poset, rel, text)
            }
            _ => FunAst::Var(name, p),
        })
    }

    fn source_between(&self, start: usize) -> String {
        let mut s = String::new();
        for (t, _) in &self.toks[start..self.at] {
            match t {
                Tok::Ident(x) => s.push_str(x),
                Tok::Int(n) => s.push_str(&n.to_string()),
                Tok::Sym(c) => {
                    s.push(*c);
                    if *c == ',' {
                        s.push(' ');
                    }
                }
                Tok::Eof => {}
            }
        }
        s
    }
}

/// A parsed and resolved specification.
#[derive(Clone, Debug)]
pub struct SpecFile {
    pub domain: String,
    pub functor: FunctorExpr,
    pub depth: Option<usize>,
    pub max_elements: Option<usize>,
    pub max_pairs: Option<usize>,
    pub seed: Option<u64>,
    pub bases: BTreeMap<String, Arc<FinPoset>>,
}

fn resolve_poset(ast: &PosetAst, bases: &BTreeMap<String, Arc<FinPoset>>) -> Result<Arc<FinPoset>> {
    match ast {
        PosetAst::One => Ok(Arc::new(FinPoset::one())),
        PosetAst::Chain(n) => Ok(Arc::new(FinPoset::chain(*n)?)),
        PosetAst::Literal { raw } => Ok(Arc::new(validate_poset(raw)?)),
        PosetAst::Name(name, p) => bases
            .get(name)
            .cloned()
            .ok_or_else(|| Error::Resolve { name: name.clone(), line: p.line, col: p.col }),
    }
}

fn resolve_rel(ast: &RelAst, carrier: &Arc<FinPoset>, rels: &BTreeMap<String, (RelAst, Pos)>) -> Result<BinRel> {
    match ast {
        RelAst::Diag => Ok(BinRel::diagonal(carrier)),
        RelAst::Total => Ok(BinRel::total(carrier)),
        RelAst::Bot => Ok(BinRel::bottom_only(carrier)),
        RelAst::Order => Ok(BinRel::order(carrier)),
        RelAst::Pairs(pairs, p) => {
            let elem = |i: usize| {
                carrier
                    .atom(i)
                    .ok_or_else(|| Error::Resolve { name: format!("element {i}"), line: p.line, col: p.col })
            };
            let mapped = pairs.iter().map(|&(a, b)| Ok((elem(a)?, elem(b)?))).collect::<Result<Vec<_>>>()?;
            BinRel::from_pairs(carrier, mapped)
        }
        RelAst::Name(name, p) => match rels.get(name) {
            Some((RelAst::Name(..), _)) | None => {
                Err(Error::Resolve { name: name.clone(), line: p.line, col: p.col })
            }
            Some((inner, _)) => resolve_rel(inner, carrier, rels),
        },
    }
}

struct Scope<'a> {
    domain: &'a str,
    bases: &'a BTreeMap<String, Arc<FinPoset>>,
    rels: &'a BTreeMap<String, (RelAst, Pos)>,
}

fn resolve_functor(ast: &FunAst, scope: &Scope<'_>) -> Result<FunctorExpr> {
    Ok(match ast {
        FunAst::One => FunctorExpr::one(),
        FunAst::Var(name, p) => {
            if name != scope.domain {
                return Err(Error::Resolve { name: name.clone(), line: p.line, col: p.col });
            }
            FunctorExpr::var()
        }
        FunAst::Lift(a) => FunctorExpr::lift(resolve_functor(a, scope)?),
        FunAst::Prod(a, b) => FunctorExpr::prod(resolve_functor(a, scope)?, resolve_functor(b, scope)?),
        FunAst::Sum(a, b) => FunctorExpr::sum(resolve_functor(a, scope)?, resolve_functor(b, scope)?),
        FunAst::Fun(a, b) => FunctorExpr::fun(resolve_functor(a, scope)?, resolve_functor(b, scope)?),
        FunAst::Const(pa, ra, text) => {
            let poset = resolve_poset(pa, scope.bases)?;
            let rel = resolve_rel(ra, &poset, scope.rels)?;
            let name = match ra {
                RelAst::Name(n, _) => n.clone(),
                _ => text.clone(),
            };
            FunctorExpr::constant(poset, rel, &name)?
        }
    })
}

fn duplicate(p: Pos, what: &str, name: &str) -> Error {
    Error::Parse { line: p.line, col: p.col, expected: vec![format!("a {what} name not used before")], found: format!("`{name}`") }
}

pub fn parse_spec(text: &str) -> Result<SpecFile> {
    let mut ps = Parser { toks: lex(text)?, at: 0 };
    let mut domain: Option<(String, FunAst)> = None;
    let mut base_asts: Vec<(String, PosetAst)> = Vec::new();
    let mut rels: BTreeMap<String, (RelAst, Pos)> = BTreeMap::new();
    let (mut depth, mut max_elements, mut max_pairs, mut seed) = (None, None, None, None);
    loop {
        let p = ps.pos();
        let stmt = match ps.peek() {
            Tok::Eof => break,
            Tok::Ident(s) => s.clone(),
            _ => return ps.fail(&["`domain`", "`base`", "`rel`", "`depth`", "`caps`", "`seed`"]),
        };
        match stmt.as_str() {
            "domain" => {
                ps.bump();
                let (name, np) = ps.ident()?;
                ps.sym('=')?;
                let f = ps.functor()?;
                if domain.is_some() {
                    return Err(duplicate(np, "domain", &name));
                }
                domain = Some((name, f));
            }
            "base" => {
                ps.bump();
                let (name, np) = ps.ident()?;
                ps.sym('=')?;
                let poset = ps.poset()?;
                if base_asts.iter().any(|(n, _)| *n == name) {
                    return Err(duplicate(np, "base", &name));
                }
                base_asts.push((name, poset));
            }
            "rel" => {
                ps.bump();
                let (name, np) = ps.ident()?;
                ps.sym('=')?;
                let rel = ps.rel()?;
                if rels.insert(name.clone(), (rel, np)).is_some() {
                    return Err(duplicate(np, "relation", &name));
                }
            }
            "depth" => {
                ps.bump();
                depth = Some(ps.small()?);
            }
            "seed" => {
                ps.bump();
                seed = Some(ps.int()?);
            }
            "caps" => {
                ps.bump();
                loop {
                    let (key, kp) = ps.ident()?;
                    ps.sym('=')?;
                    let v = ps.small()?;
                    match key.as_str() {
                        "max_elements" => max_elements = Some(v),
                        "max_pairs" => max_pairs = Some(v),
                        _ => {
                            return Err(Error::Parse {
                                line: kp.line,
                                col: kp.col,
                                expected: vec!["`max_elements`".into(), "`max_pairs`".into()],
                                found: format!("`{key}`"),
                            })
                        }
                    }
                    if *ps.peek() == Tok::Sym(',') {
                        ps.bump();
                    } else {
                        break;
                    }
                }
            }
            _ => {
                return Err(Error::Parse {
                    line: p.line,
                    col: p.col,
                    expected: ["domain", "base", "rel", "depth", "caps", "seed"].iter().map(|s| format!("`{s}`")).collect(),
                    found: format!("`{stmt}`"),
                })
            }
        }
    }
    let Some((name, fast)) = domain else {
        return ps.fail(&["`domain`"]);
    };
    let mut bases = BTreeMap::new();
    for (n, ast) in &base_asts {
        let poset = resolve_poset(ast, &bases)?;
        bases.insert(n.clone(), poset);
    }
    let scope = Scope { domain: &name, bases: &bases, rels: &rels };
    let functor = resolve_functor(&fast, &scope)?;
    Ok(SpecFile { domain: name, functor, depth, max_elements, max_pairs, seed, bases })
}

/// A single poset literal, as accepted after `base NAME =`.
pub fn parse_poset(text: &str) -> Result<Arc<FinPoset>> {
    let mut ps = Parser { toks: lex(text)?, at: 0 };
    let ast = ps.poset()?;
    if *ps.peek() != Tok::Eof {
        return ps.fail(&["end of input"]);
    }
    resolve_poset(&ast, &BTreeMap::new())
}

/// A single functor expression over the variable `D`.
pub fn parse_functor(text: &str) -> Result<FunctorExpr> {
    let mut ps = Parser { toks: lex(text)?, at: 0 };
    let ast = ps.functor()?;
    if *ps.peek() != Tok::Eof {
        return ps.fail(&["end of input"]);
    }
    resolve_functor(&ast, &Scope { domain: "D", bases: &BTreeMap::new(), rels: &BTreeMap::new() })
}
