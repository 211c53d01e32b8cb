//! Command implementations behind the `relfix` binary: configuration,
//! report assembly and the built-in check suites.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use serde::Serialize;
use serde_json::{json, Value};
use sha2::{Digest, Sha256};

use crate::chain::{build_chain, DomainChain};
use crate::cofe::{check_contractive, check_contractive_with, ContractiveOptions};
use crate::dsl::{parse_functor, parse_poset, parse_spec, SpecFile};
use crate::engines::{compare_methods, solve_banach, solve_kleene, solve_knaster_tarski};
use crate::error::{Caps, Error, Result};
use crate::functor::FunctorExpr;
use crate::karoubi::{
    ed_cpo_check, ed_slice_equivalence, enumerate_canonical_idempotents, enumerate_idempotents, hat_functor_laws,
    idem_leq, karoubi_rel_fiber, pointedness_check, split_idempotent, splitting_iso, Idempotent,
};
use crate::laws::{adjunction_suite, check_functor_laws, check_functor_laws_with, morphism_suite, LawBudget, SwappedFunComposition};
use crate::poset::{enumerate_pointed_posets, FinPoset};
use std::sync::Arc;

pub const VERSION: &str = env!("CARGO_PKG_VERSION");

pub const LAZY_NAT: &str = include_str!("../specs/lazy-nat.relfix");
pub const STREAMS: &str = include_str!("../specs/streams.relfix");
pub const REFLEXIVE: &str = include_str!("../specs/reflexive.relfix");

/// The canonical specifications, by name.
pub fn canonical_specs() -> [(&'static str, &'static str); 3] {
    [("lazy-nat", LAZY_NAT), ("streams", STREAMS), ("reflexive", REFLEXIVE)]
}

pub const DEFAULT_DEPTH: usize = 3;
pub const DEFAULT_SEED: u64 = 0;

/// Settings given on the command line; they override the spec file, which
/// overrides the defaults.
#[derive(Clone, Debug, Default)]
pub struct Overrides {
    pub depth: Option<usize>,
    pub max_size: Option<usize>,
    pub seed: Option<u64>,
}

#[derive(Clone, Debug, Serialize)]
pub struct Config {
    pub depth: usize,
    pub seed: u64,
    pub caps: Caps,
}

pub fn resolve_config(spec: Option<&SpecFile>, cli: &Overrides) -> Config {
    let defaults = Caps::default();
    let caps = Caps {
        max_elements: cli.max_size.or(spec.and_then(|s| s.max_elements)).unwrap_or(defaults.max_elements),
        max_pairs: spec.and_then(|s| s.max_pairs).unwrap_or(defaults.max_pairs),
    };
    Config {
        depth: cli.depth.or(spec.and_then(|s| s.depth)).unwrap_or(DEFAULT_DEPTH),
        seed: cli.seed.or(spec.and_then(|s| s.seed)).unwrap_or(DEFAULT_SEED),
        caps,
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, clap::ValueEnum)]
pub enum Method {
    Kt,
    Kleene,
    Banach,
    All,
}

#[derive(Clone, Debug, Serialize)]
pub struct ErrorReport {
    pub kind: &'static str,
    pub message: String,
    pub exit_code: i32,
}

impl From<&Error> for ErrorReport {
    fn from(e: &Error) -> Self {
        ErrorReport { kind: e.kind(), message: e.to_string(), exit_code: e.exit_code() }
    }
}

/// The single report format of every command.
#[derive(Clone, Debug, Serialize)]
pub struct RunReport {
    pub tool: &'static str,
    pub version: &'static str,
    pub command: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub spec_hash: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub functor: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub config: Option<Config>,
    pub verdicts: BTreeMap<String, bool>,
    pub details: Value,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub error: Option<ErrorReport>,
}

impl RunReport {
    fn new(command: &str) -> Self {
        RunReport {
            tool: "relfix",
            version: VERSION,
            command: command.into(),
            spec_hash: None,
            functor: None,
            config: None,
            verdicts: BTreeMap::new(),
            details: Value::Null,
            error: None,
        }
    }

    /// 0 when every verdict holds, otherwise the error's code or 1.
    pub fn exit_code(&self) -> i32 {
        match &self.error {
            Some(e) => e.exit_code,
            None if self.verdicts.values().all(|&v| v) => 0,
            None => 1,
        }
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("reports serialize");
        s.push('\n');
        s
    }

    fn fail(mut self, e: &Error) -> Self {
        self.error = Some(e.into());
        self
    }
}

pub fn spec_hash(text: &str) -> String {
    Sha256::digest(text.as_bytes()).iter().map(|b| format!("{b:02x}")).collect()
}

fn to_value<T: Serialize>(v: &T) -> Value {
    serde_json::to_value(v).expect("reports serialize")
}

fn prepare(command: &str, text: &str, cli: &Overrides) -> (RunReport, Result<(SpecFile, Config)>) {
    let mut report = RunReport::new(command);
    report.spec_hash = Some(spec_hash(text));
    let parsed = parse_spec(text).map(|spec| {
        let config = resolve_config(Some(&spec), cli);
        (spec, config)
    });
    if let Ok((spec, config)) = &parsed {
        report.functor = Some(spec.functor.to_string());
        report.config = Some(config.clone());
    }
    (report, parsed)
}

/// Builds the chain, checks the truncation projections and the level
/// identification, and lists sizes and maps. DOT files are returned as
/// `(file name, contents)`.
pub fn cmd_solve(text: &str, cli: &Overrides) -> (RunReport, Vec<(String, String)>) {
    let (report, parsed) = prepare("solve", text, cli);
    let mut dots = Vec::new();
    let result = parsed.and_then(|(spec, config)| {
        let chain = build_chain(&spec.functor, config.depth, &config.caps)?;
        let projections = chain.verify_projections()?;
        let identified = chain.levels_identified(&config.caps)?;
        for (n, level) in chain.levels().iter().enumerate() {
            dots.push((format!("X{n}.dot"), level.to_dot(&format!("X{n}"))));
        }
        let steps: Vec<Value> = chain
            .steps()
            .iter()
            .map(|s| json!({ "e": s.e().table(), "p": s.p().table() }))
            .collect();
        Ok((chain.sizes(), projections, identified, steps))
    });
    let mut report = report;
    match result {
        Ok((sizes, projections, identified, steps)) => {
            report.verdicts.insert("projections".into(), projections.all_hold());
            report.verdicts.insert("levels_identified".into(), identified);
            report.details = json!({ "sizes": sizes, "steps": steps, "projections": projections });
            (report, dots)
        }
        Err(e) => (report.fail(&e), Vec::new()),
    }
}

fn relate_details(chain: &DomainChain, method: Method, report: &mut RunReport) -> Result<Value> {
    Ok(match method {
        Method::Kt => {
            let kt = solve_knaster_tarski(chain)?;
            report.verdicts.insert("neg_equals_pos".into(), kt.neg_equals_pos);
            json!({ "knaster_tarski": {
                "iterations": kt.iterations,
                "ascending": kt.ascending,
                "neg_equals_pos": kt.neg_equals_pos,
                "family": kt.pair.pos,
            } })
        }
        Method::Kleene => {
            let fam = solve_kleene(chain)?;
            json!({ "kleene": { "family": fam } })
        }
        Method::Banach => {
            let b = solve_banach(chain)?;
            let bounded = b.profile.iter().enumerate().all(|(n, &k)| k <= n + 1);
            report.verdicts.insert("stabilizes_by_n_plus_1".into(), bounded);
            report.verdicts.insert("second_start_agrees".into(), b.second_start_agrees);
            json!({ "banach": b })
        }
        Method::All => {
            let c = compare_methods(chain)?;
            report.verdicts.insert("agreement".into(), c.agreement);
            report.verdicts.insert("neg_equals_pos".into(), c.knaster_tarski.neg_equals_pos);
            report.verdicts.insert("unfolding_equation".into(), c.unfolding_equation);
            report.verdicts.insert("duality".into(), c.duality);
            report.verdicts.insert("uniform".into(), c.uniformity.uniform);
            report.verdicts.insert("second_start_agrees".into(), c.banach.second_start_agrees);
            json!({
                "knaster_tarski": { "iterations": c.knaster_tarski.iterations, "neg_equals_pos": c.knaster_tarski.neg_equals_pos },
                "banach": { "iterations": c.banach.iterations, "profile": c.banach.profile },
                "family": c.kleene,
                "glued": c.glued,
                "uniformity": c.uniformity,
            })
        }
    })
}

/// Runs the selected engine (or all three, compared) on the spec.
pub fn cmd_relate(text: &str, method: Method, cli: &Overrides) -> RunReport {
    let (mut report, parsed) = prepare("relate", text, cli);
    let result = parsed.and_then(|(spec, config)| {
        let chain = build_chain(&spec.functor, config.depth, &config.caps)?;
        let details = relate_details(&chain, method, &mut report)?;
        Ok(json!({ "method": format!("{method:?}").to_lowercase(), "sizes": chain.sizes(), "result": details }))
    });
    match result {
        Ok(d) => {
            report.details = d;
            report
        }
        Err(e) => report.fail(&e),
    }
}

/// Carriers whose admissible relations are enumerated in full for the audit.
const FIBER_AUDIT_MAX_ELEMENTS: usize = 4;

fn karoubi_details(d: &Arc<FinPoset>, caps: &Caps, report: &mut RunReport) -> Result<Value> {
    let limit = caps.max_elements;
    let ed = enumerate_canonical_idempotents(d, limit)?;
    let cpo = ed_cpo_check(d, limit)?;
    let slice = ed_slice_equivalence(d, limit)?;
    let mut splittings = Vec::new();
    for p in &ed {
        let s = split_idempotent(p)?;
        let iso = splitting_iso(&s, &s, 4)?;
        splittings.push(json!({
            "idempotent": p.table(),
            "image_size": s.image.size(),
            "r": s.r.table(),
            "s": s.s.table(),
            "iso_unique": iso.isos_found.map(|n| n == 1),
        }));
    }
    let identity = Idempotent::identity(d);
    let mut pointed = true;
    for p in &ed {
        let rep = pointedness_check(p, &identity, limit)?;
        pointed &= rep.bottom_is_hom && rep.bottom_is_least;
    }
    let reference = claim_reference_instance()?;
    let fibers = if d.size() <= FIBER_AUDIT_MAX_ELEMENTS {
        let reps = ed.iter().map(|p| karoubi_rel_fiber(p, 1 << 16)).collect::<Result<Vec<_>>>()?;
        Some(reps)
    } else {
        None
    };
    let refuted_here = fibers.as_ref().map(|fs| fs.iter().any(|f| !f.inclusion_always_holds));
    report.verdicts.insert("ed_cpo".into(), cpo.holds());
    report.verdicts.insert("slice_equivalence".into(), slice.holds());
    report.verdicts.insert("pointedness".into(), pointed);
    let status = if !reference["inclusion_holds"].as_bool().unwrap_or(true) || refuted_here == Some(true) {
        "refuted"
    } else {
        "not refuted"
    };
    Ok(json!({
        "poset": crate::functor::poset_literal(d),
        "size": d.size(),
        "ed": ed.iter().map(|p| p.table().to_vec()).collect::<Vec<_>>(),
        "order": cpo.order,
        "cpo": cpo,
        "slice": slice,
        "splittings": splittings,
        "claim_audit": {
            "claim": "p*R ⊆ R for every idempotent p and admissible R",
            "status": status,
            "reference_instance": reference,
            "fibers": fibers,
            "fibers_skipped": fibers.is_none(),
        },
    }))
}

/// The audit instance decided by direct computation: `chain(2)`, the
/// constant-bottom idempotent, and the diagonal.
pub fn claim_reference_instance() -> Result<Value> {
    let c2 = Arc::new(FinPoset::chain(2)?);
    let p = Idempotent::const_bottom(&c2);
    let diag = crate::relation::BinRel::diagonal(&c2);
    let pulled = crate::relation::inverse_image(p.map(), &diag)?;
    Ok(json!({
        "carrier": "chain(2)",
        "idempotent": p.table(),
        "relation": diag,
        "pullback": pulled,
        "inclusion_holds": pulled.is_subset(&diag)?,
    }))
}

/// The idempotent order, splittings, `E_D`, the slice equivalence and the
/// fiber audit for one poset.
pub fn cmd_karoubi(poset: &str, cli: &Overrides) -> RunReport {
    let mut report = RunReport::new("karoubi");
    let config = resolve_config(None, cli);
    report.spec_hash = Some(spec_hash(poset));
    report.config = Some(config.clone());
    let result = parse_poset(poset).and_then(|d| karoubi_details(&d, &config.caps, &mut report));
    match result {
        Ok(v) => {
            report.details = v;
            report
        }
        Err(e) => report.fail(&e),
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, clap::ValueEnum)]
pub enum Suite {
    Morphisms,
    FunctorLaws,
    Adjunction,
    Contractive,
    Karoubi,
    Duality,
    FixtureCorrupt,
    All,
}

impl Suite {
    fn name(self) -> &'static str {
        match self {
            Suite::Morphisms => "morphisms",
            Suite::FunctorLaws => "functor-laws",
            Suite::Adjunction => "adjunction",
            Suite::Contractive => "contractive",
            Suite::Karoubi => "karoubi",
            Suite::Duality => "duality",
            Suite::FixtureCorrupt => "fixture-corrupt",
            Suite::All => "all",
        }
    }

    fn expand(self) -> Vec<Suite> {
        match self {
            Suite::All => vec![
                Suite::Morphisms,
                Suite::FunctorLaws,
                Suite::Adjunction,
                Suite::Contractive,
                Suite::Karoubi,
                Suite::Duality,
            ],
            s => vec![s],
        }
    }
}

/// Functors whose laws are checked by the `functor-laws` suite.
pub fn law_corpus() -> Vec<&'static str> {
    vec![
        "D",
        "one",
        "lift(D)",
        "sum(one, D)",
        "prod(D, D)",
        "lift(prod(const(chain(2), diag), D))",
        "fun(D, D)",
        "lift(fun(D, D))",
        "fun(fun(D, one), D)",
    ]
}

fn canonical_chain(name: &str, depth: usize, caps: &Caps) -> Result<DomainChain> {
    let (_, text) = canonical_specs().into_iter().find(|(n, _)| *n == name).expect("known spec");
    build_chain(&parse_spec(text)?.functor, depth, caps)
}

fn run_suite(suite: Suite, config: &Config) -> Result<Value> {
    let caps = &config.caps;
    Ok(match suite {
        Suite::Morphisms => to_value(&morphism_suite(3, caps)?),
        Suite::Adjunction => to_value(&adjunction_suite(3, caps)?),
        Suite::FunctorLaws => {
            let budget = LawBudget { seed: config.seed, caps: *caps, ..Default::default() };
            let reps = law_corpus()
                .into_iter()
                .map(|src| check_functor_laws(&parse_functor(src)?, &budget))
                .collect::<Result<Vec<_>>>()?;
            to_value(&reps)
        }
        Suite::FixtureCorrupt => {
            let f = FunctorExpr::fun(FunctorExpr::var(), FunctorExpr::var());
            let budget = LawBudget { seed: config.seed, caps: *caps, ..Default::default() };
            to_value(&check_functor_laws_with(&SwappedFunComposition(f), "fun(D, D) with swapped composition", &budget)?)
        }
        Suite::Contractive => {
            let opts = ContractiveOptions { seed: config.seed, ..Default::default() };
            let mut out = Vec::new();
            for (name, depth) in [("lazy-nat", 3), ("reflexive", 2)] {
                let chain = canonical_chain(name, depth, caps)?;
                let rep = check_contractive(&chain, &opts)?;
                if !rep.holds() {
                    return Err(Error::LawViolation {
                        law: format!("contractiveness on {name}"),
                        witness: serde_json::to_string(&rep.counterexamples).expect("serializes"),
                    });
                }
                let identity = check_contractive_with(&chain, &|f| Ok(f.clone()), &opts)?;
                if identity.holds() {
                    return Err(Error::InternalInvariantViolation(
                        "the identity operator passed the contractiveness check".into(),
                    ));
                }
                out.push(json!({ "spec": name, "depth": depth, "report": rep, "identity_counterexamples": identity.counterexample_count }));
            }
            Value::Array(out)
        }
        Suite::Karoubi => karoubi_suite(caps)?,
        Suite::Duality => {
            let mut out = Vec::new();
            for (name, text) in canonical_specs() {
                let spec = parse_spec(text)?;
                let depth = spec.depth.unwrap_or(DEFAULT_DEPTH);
                let chain = build_chain(&spec.functor, depth, caps)?;
                let c = compare_methods(&chain)?;
                if !c.uniformity.uniform {
                    return Err(Error::NotUniform(format!("result on {name} is not uniform")));
                }
                out.push(json!({ "spec": name, "depth": depth, "duality": c.duality, "uniform": c.uniformity.uniform }));
            }
            Value::Array(out)
        }
        Suite::All => unreachable!("expanded before running"),
    })
}

/// The Karoubi checks over all small posets.
pub fn karoubi_suite(caps: &Caps) -> Result<Value> {
    let limit = caps.max_elements;
    let ch3 = Arc::new(FinPoset::chain(3)?);
    let ed_ch3 = enumerate_canonical_idempotents(&ch3, limit)?.len();
    if ed_ch3 != 4 {
        return Err(Error::LawViolation { law: "|E_chain(3)| = 4".into(), witness: ed_ch3.to_string() });
    }
    let mut order_pairs = 0u64;
    let mut slices = 0u64;
    for d in enumerate_pointed_posets(5) {
        let idems = enumerate_idempotents(&d, limit)?;
        for p in &idems {
            for q in &idems {
                idem_leq(p, q)?;
                order_pairs += 1;
            }
        }
        let slice = ed_slice_equivalence(&d, limit)?;
        let cpo = ed_cpo_check(&d, limit)?;
        if !slice.holds() || !cpo.holds() {
            return Err(Error::LawViolation {
                law: "E_D is a pointed CPO equivalent to the slice of embeddings".into(),
                witness: format!("{} {:?}", crate::functor::poset_literal(&d), slice.witnesses),
            });
        }
        slices += 1;
    }
    let small = enumerate_pointed_posets(3);
    let mut splittings = 0u64;
    let mut pointed = 0u64;
    for d in &small {
        for p in enumerate_idempotents(d, limit)? {
            let s = split_idempotent(&p)?;
            splitting_iso(&s, &s, 4)?;
            splittings += 1;
            for y in &small {
                for q in enumerate_idempotents(y, limit)? {
                    let rep = pointedness_check(&p, &q, limit)?;
                    if !rep.bottom_is_hom || !rep.bottom_is_least {
                        return Err(Error::LawViolation {
                            law: "p∘⊥ is the least morphism into (D, p)".into(),
                            witness: format!("p = {:?}, q = {:?}", p.table(), q.table()),
                        });
                    }
                    pointed += 1;
                }
            }
        }
    }
    let mut hat = Vec::new();
    for src in ["lift(D)", "sum(one, D)", "prod(D, D)", "lift(prod(const(chain(2), diag), D))"] {
        hat.push(json!({ "functor": src, "report": hat_functor_laws(&parse_functor(src)?, &small, caps)? }));
    }
    Ok(json!({
        "ed_chain3": ed_ch3,
        "order_pairs_checked": order_pairs,
        "slice_equivalences": slices,
        "splittings": splittings,
        "pointedness_checks": pointed,
        "hat_functor": hat,
        "claim_reference_instance": claim_reference_instance()?,
    }))
}

/// Runs the selected suites; any violation fails the run and is reported
/// with its witness.
pub fn cmd_check(suite: Suite, cli: &Overrides) -> RunReport {
    let mut report = RunReport::new("check");
    let config = resolve_config(None, cli);
    report.config = Some(config.clone());
    let mut details = BTreeMap::new();
    for s in suite.expand() {
        match run_suite(s, &config) {
            Ok(v) => {
                report.verdicts.insert(s.name().into(), true);
                details.insert(s.name().to_string(), json!({ "passed": true, "report": v }));
            }
            Err(e) => {
                report.verdicts.insert(s.name().into(), false);
                details.insert(
                    s.name().to_string(),
                    json!({ "passed": false, "witness": to_value(&ErrorReport::from(&e)) }),
                );
            }
        }
    }
    report.details = to_value(&details);
    report
}

/// Writes DOT files into `dir`, creating it if needed.
pub fn write_dots(dir: &Path, dots: &[(String, String)]) -> std::io::Result<Vec<PathBuf>> {
    std::fs::create_dir_all(dir)?;
    dots.iter()
        .map(|(name, body)| {
            let path = dir.join(name);
            std::fs::write(&path, body)?;
            Ok(path)
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn precedence() {
        let spec = parse_spec("domain D = sum(one, D)\ndepth 6\ncaps max_elements = 77\nseed 5").unwrap();
        let c = resolve_config(Some(&spec), &Overrides::default());
        assert_eq!((c.depth, c.seed, c.caps.max_elements), (6, 5, 77));
        let c = resolve_config(Some(&spec), &Overrides { depth: Some(2), max_size: Some(10), seed: Some(1) });
        assert_eq!((c.depth, c.seed, c.caps.max_elements), (2, 1, 10));
        let c = resolve_config(None, &Overrides::default());
        assert_eq!((c.depth, c.seed), (DEFAULT_DEPTH, DEFAULT_SEED));
    }

    #[test]
    fn solve_lazy_nat() {
        let (rep, dots) = cmd_solve(LAZY_NAT, &Overrides::default());
        assert_eq!(rep.exit_code(), 0, "{}", rep.to_json());
        assert_eq!(rep.details["sizes"], json!([1, 3, 5, 7, 9, 11, 13]));
        let x2 = &dots.iter().find(|(n, _)| n == "X2.dot").unwrap().1;
        assert_eq!(x2.matches("label=").count(), 5);
        assert_eq!(x2.matches("->").count(), 4);
    }

    #[test]
    fn reflexive_depth_four_hits_the_cap() {
        let (rep, _) = cmd_solve(REFLEXIVE, &Overrides { depth: Some(4), ..Default::default() });
        assert_eq!(rep.exit_code(), 3);
        assert!(rep.error.unwrap().message.contains("level 4"));
    }

    #[test]
    fn parse_errors_exit_two() {
        let (rep, _) = cmd_solve("domain D = fun(D)", &Overrides::default());
        assert_eq!(rep.exit_code(), 2);
        assert_eq!(rep.error.unwrap().kind, "ParseError");
    }

    #[test]
    fn relate_methods() {
        let rep = cmd_relate(LAZY_NAT, Method::All, &Overrides::default());
        assert_eq!(rep.exit_code(), 0);
        assert!(rep.verdicts["agreement"] && rep.verdicts["uniform"]);
        let rep = cmd_relate(LAZY_NAT, Method::Banach, &Overrides::default());
        assert_eq!(rep.details["result"]["banach"]["profile"], json!([0, 1, 2, 3, 4, 5, 6]));
        let rep = cmd_relate(LAZY_NAT, Method::Kt, &Overrides::default());
        assert!(rep.verdicts["neg_equals_pos"]);
    }

    #[test]
    fn karoubi_reports() {
        let rep = cmd_karoubi("chain(3)", &Overrides::default());
        assert_eq!(rep.exit_code(), 0, "{}", rep.to_json());
        assert_eq!(rep.details["ed"].as_array().unwrap().len(), 4);
        assert_eq!(rep.details["claim_audit"]["status"], "refuted");
        let rep = cmd_karoubi("one", &Overrides::default());
        assert_eq!(rep.details["ed"].as_array().unwrap().len(), 1);
        let rep = cmd_karoubi("poset { elems: 2; le: []; bot: 0 }", &Overrides::default());
        assert_eq!(rep.exit_code(), 1);
    }

    #[test]
    fn corrupt_fixture_fails_with_witness() {
        let rep = cmd_check(Suite::FixtureCorrupt, &Overrides::default());
        assert_eq!(rep.exit_code(), 1);
        assert_eq!(rep.details["fixture-corrupt"]["witness"]["kind"], "LawViolation");
    }
}
