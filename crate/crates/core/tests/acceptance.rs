//! Acceptance suite: one PASS/FAIL line per criterion. Results are checked
//! against oracles computed here from raw tables, not against the
//! library's own verdicts.

use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::PathBuf;
use std::process::Command;
use std::sync::Arc;
use std::time::{Duration, Instant};

use relfix::chain::{build_chain, glue_family, DomainChain, RelFamily};
use relfix::cofe::{check_contractive, ContractiveMode, ContractiveOptions};
use relfix::dsl::parse_spec;
use relfix::engines::{banach_iterates, solve_banach, solve_kleene, solve_knaster_tarski};
use relfix::error::Caps;
use relfix::karoubi::{enumerate_canonical_idempotents, hat_functor_laws};
use relfix::laws::{adjunction_suite, morphism_suite};
use relfix::map::MonotoneMap;
use relfix::poset::{enumerate_pointed_posets, FinPoset};
use relfix::relation::BinRel;
use relfix::workbench::{canonical_specs, cmd_karoubi, karoubi_suite, Overrides};

type Outcome = Result<String, String>;
type Criterion = (&'static str, fn() -> Outcome);

fn ensure(cond: bool, msg: impl Into<String>) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg.into())
    }
}

fn chain_of(name: &str, depth: usize) -> DomainChain {
    let text = canonical_specs().into_iter().find(|(n, _)| *n == name).unwrap().1;
    build_chain(&parse_spec(text).unwrap().functor, depth, &Caps::default()).unwrap()
}

fn canonical_chains() -> Vec<(&'static str, DomainChain)> {
    vec![
        ("lazy-nat", chain_of("lazy-nat", 6)),
        ("streams", chain_of("streams", 4)),
        ("reflexive", chain_of("reflexive", 3)),
    ]
}

fn pairs_of(r: &BinRel) -> Vec<(usize, usize)> {
    r.pairs()
}

fn compose(f: &[usize], g: &[usize]) -> Vec<usize> {
    g.iter().map(|&x| f[x]).collect()
}

fn within(budget: Duration, start: Instant) -> Result<(), String> {
    ensure(start.elapsed() <= budget, format!("took {:?}, budget {:?}", start.elapsed(), budget))
}

fn three_method_agreement() -> Outcome {
    let start = Instant::now();
    for (name, chain) in canonical_chains() {
        let kt = solve_knaster_tarski(&chain).map_err(|e| e.to_string())?;
        let kleene = solve_kleene(&chain).map_err(|e| e.to_string())?;
        let banach = solve_banach(&chain).map_err(|e| e.to_string())?;
        for n in 0..=chain.depth() {
            let neg = pairs_of(kt.pair.neg.level(n));
            ensure(neg == pairs_of(kt.pair.pos.level(n)), format!("{name}: R⁻ ≠ R⁺ at level {n}"))?;
            ensure(neg == pairs_of(kleene.level(n)), format!("{name}: Kleene differs at level {n}"))?;
            ensure(neg == pairs_of(banach.family.level(n)), format!("{name}: Banach differs at level {n}"))?;
        }
    }
    within(Duration::from_secs(60), start)?;
    Ok(format!("{:?}", start.elapsed()))
}

fn chain_invariants() -> Outcome {
    let oracles = [
        ("lazy-nat", 6, vec![1, 3, 5, 7, 9, 11, 13]),
        ("streams", 4, vec![1, 3, 7, 15, 31]),
        ("reflexive", 3, vec![1, 2, 4, 36]),
    ];
    for (name, depth, sizes) in oracles {
        let chain = chain_of(name, depth);
        ensure(chain.sizes() == sizes, format!("{name}: sizes {:?}", chain.sizes()))?;
        let top = chain.top().clone();
        let pis: Vec<Vec<usize>> = chain.pis().iter().map(|m| m.table().to_vec()).collect();
        for (j, pi) in pis.iter().enumerate() {
            ensure(compose(pi, pi) == *pi, format!("{name}: π_{j} not idempotent"))?;
            if j + 1 < pis.len() {
                let next = &pis[j + 1];
                ensure(
                    (0..top.size()).all(|x| top.leq(pi[x], next[x])),
                    format!("{name}: π_{j} ⋢ π_{}", j + 1),
                )?;
            }
        }
        let id: Vec<usize> = (0..top.size()).collect();
        ensure(pis[depth] == id, format!("{name}: π_N is not the identity"))?;
        // π_j on X_N is cum_j.e ∘ cum_j.p, computed from the raw tables.
        for (j, c) in chain.cum().iter().enumerate() {
            ensure(compose(c.e().table(), c.p().table()) == pis[j], format!("{name}: π_{j} ≠ e_j∘p_j"))?;
        }
        let report = chain.verify_projections().map_err(|e| e.to_string())?;
        ensure(report.recurrence_holds, format!("{name}: recurrence fails: {:?}", report.first_failure))?;
        ensure(chain.levels_identified(&Caps::default()).map_err(|e| e.to_string())?, format!("{name}: X_(n+1) ≠ F(X_n)"))?;
    }
    Ok(String::new())
}

fn uniformity() -> Outcome {
    for (name, chain) in canonical_chains() {
        let fam = solve_kleene(&chain).map_err(|e| e.to_string())?;
        let r = glue_family(&chain, &fam).map_err(|e| e.to_string())?;
        for (i, pi) in chain.pis().iter().enumerate() {
            let t = pi.table();
            for (x, y) in r.pairs() {
                ensure(r.contains(t[x], t[y]), format!("{name}: π_{i} moves ({x},{y}) out of R"))?;
            }
        }
    }
    Ok(String::new())
}

fn bilimit_duality() -> Outcome {
    for (name, chain) in canonical_chains() {
        let fam = solve_kleene(&chain).map_err(|e| e.to_string())?;
        let top = chain.top().clone();
        let n = top.size();
        let mut meet = vec![vec![true; n]; n];
        let mut join = vec![vec![false; n]; n];
        for (c, r) in chain.cum().iter().zip(fam.rels()) {
            let (e, p) = (c.e().table(), c.p().table());
            for (x, row) in meet.iter_mut().enumerate() {
                for (y, cell) in row.iter_mut().enumerate() {
                    *cell &= r.contains(p[x], p[y]);
                }
            }
            for (a, b) in r.pairs() {
                join[e[a]][e[b]] = true;
            }
        }
        ensure(meet == join, format!("{name}: ⋂ p* R_n ≠ ⋃ e_! R_n"))?;
        let glued = glue_family(&chain, &fam).map_err(|e| e.to_string())?;
        let expected: Vec<(usize, usize)> =
            (0..n).flat_map(|x| (0..n).map(move |y| (x, y))).filter(|&(x, y)| meet[x][y]).collect();
        ensure(glued.pairs() == expected, format!("{name}: glued relation differs from the oracle"))?;
    }
    Ok(String::new())
}

fn contractiveness() -> Outcome {
    let start = Instant::now();
    let opts = ContractiveOptions::default();
    let mut notes = Vec::new();
    for (name, depth) in [("lazy-nat", 3), ("reflexive", 2)] {
        let chain = chain_of(name, depth);
        let rep = check_contractive(&chain, &opts).map_err(|e| e.to_string())?;
        ensure(rep.mode != ContractiveMode::Sampled, format!("{name}: fell back to sampling"))?;
        ensure(rep.counterexample_count == 0, format!("{name}: {} counterexamples", rep.counterexample_count))?;
        notes.push(format!("{name}: {:?}, {} uniform relations", rep.mode, rep.uniform_relations));
    }
    within(Duration::from_secs(120), start)?;
    Ok(format!("{} ({:?})", notes.join("; "), start.elapsed()))
}

fn banach_convergence() -> Outcome {
    for (name, chain) in canonical_chains() {
        let from_top = banach_iterates(&chain, RelFamily::total(&chain)).map_err(|e| e.to_string())?;
        let from_diag = banach_iterates(&chain, RelFamily::diagonal(&chain)).map_err(|e| e.to_string())?;
        let last = from_top.last().unwrap();
        for n in 0..=chain.depth() {
            // First iterate from which level n never changes again.
            let settled = (0..from_top.len())
                .find(|&k| from_top[k..].iter().all(|f| f.level(n).pairs() == last.level(n).pairs()))
                .unwrap();
            ensure(settled <= n + 1, format!("{name}: level {n} settles at iterate {settled}"))?;
        }
        let other = from_diag.last().unwrap();
        for n in 0..=chain.depth() {
            ensure(
                last.level(n).pairs() == other.level(n).pairs(),
                format!("{name}: starts ⊤ and diag converge differently at level {n}"),
            )?;
        }
    }
    Ok(String::new())
}

fn morphism_properties() -> Outcome {
    let start = Instant::now();
    let rep = morphism_suite(3, &Caps::default()).map_err(|e| e.to_string())?;
    ensure(rep.posets == 4, format!("expected 4 pointed posets of size ≤ 3, got {}", rep.posets))?;
    within(Duration::from_secs(300), start)?;
    Ok(format!("{} maps, {} relations ({:?})", rep.maps, rep.relations, start.elapsed()))
}

fn adjunction() -> Outcome {
    let rep = adjunction_suite(3, &Caps::default()).map_err(|e| e.to_string())?;
    ensure(rep.checks > 0, "no adjunction checks ran")?;
    Ok(format!("{} checks", rep.checks))
}

fn karoubi() -> Outcome {
    let start = Instant::now();
    let ch3 = Arc::new(FinPoset::chain(3).unwrap());
    // E_chain(3) by brute force over all 27 endofunctions.
    let mut brute = 0;
    for code in 0..27usize {
        let t = [code % 3, code / 3 % 3, code / 9];
        let monotone = t[0] <= t[1] && t[1] <= t[2];
        let idem = (0..3).all(|x| t[t[x]] == t[x]);
        let defl = (0..3).all(|x| t[x] <= x);
        brute += usize::from(monotone && idem && defl);
    }
    let ed = enumerate_canonical_idempotents(&ch3, 1000).map_err(|e| e.to_string())?;
    ensure(brute == 4 && ed.len() == 4, format!("|E_chain(3)| = {} (brute force {brute})", ed.len()))?;
    karoubi_suite(&Caps::default()).map_err(|e| e.to_string())?;
    let small = enumerate_pointed_posets(3);
    for src in ["D", "lift(D)", "prod(D, D)"] {
        let f = relfix::dsl::parse_functor(src).map_err(|e| e.to_string())?;
        hat_functor_laws(&f, &small, &Caps::default()).map_err(|e| e.to_string())?;
    }
    let big = cmd_karoubi("chain(5)", &Overrides::default());
    ensure(big.exit_code() == 0, "karoubi on chain(5) failed")?;
    within(Duration::from_secs(300), start)?;
    Ok(format!("{:?}", start.elapsed()))
}

fn claim_audit() -> Outcome {
    let rep = cmd_karoubi("chain(2)", &Overrides::default());
    ensure(rep.error.is_none(), "karoubi on chain(2) errored")?;
    let audit = &rep.details["claim_audit"];
    let status = audit["status"].as_str().ok_or("no claim status recorded")?;
    // Oracle: p = const ⊥ sends every pair to (⊥, ⊥) ∈ diag, so p*diag is
    // total and contains (0, 1) ∉ diag.
    let c2 = Arc::new(FinPoset::chain(2).unwrap());
    let p = MonotoneMap::new(c2.clone(), c2.clone(), vec![0, 0]).unwrap();
    let diag = BinRel::diagonal(&c2);
    let pulled: Vec<(usize, usize)> = (0..2)
        .flat_map(|x| (0..2).map(move |y| (x, y)))
        .filter(|&(x, y)| diag.contains(p.table()[x], p.table()[y]))
        .collect();
    let holds = pulled.iter().all(|&(x, y)| diag.contains(x, y));
    ensure(!holds && status == "refuted", format!("status {status}, oracle says inclusion holds = {holds}"))?;
    ensure(
        audit["reference_instance"]["inclusion_holds"] == serde_json::json!(false),
        "reference instance not decided as refuted",
    )?;
    Ok(format!("p*R ⊆ R {status} on chain(2), const ⊥, diag"))
}

fn determinism() -> Outcome {
    let spec: PathBuf = [env!("CARGO_MANIFEST_DIR"), "specs", "lazy-nat.relfix"].iter().collect();
    let run = || {
        Command::new(env!("CARGO_BIN_EXE_relfix"))
            .args(["relate", "--method", "all", "--seed", "7", "--spec"])
            .arg(&spec)
            .output()
            .expect("binary runs")
    };
    let (a, b) = (run(), run());
    ensure(a.status.success() && b.status.success(), "relate exited nonzero")?;
    ensure(a.stdout == b.stdout, "reports differ")?;
    Ok(format!("{} bytes", a.stdout.len()))
}

fn main() {
    let criteria: [Criterion; 11] = [
        ("three-method agreement", three_method_agreement),
        ("chain invariants", chain_invariants),
        ("uniformity", uniformity),
        ("bilimit duality", bilimit_duality),
        ("contractiveness", contractiveness),
        ("Banach convergence", banach_convergence),
        ("relation morphism properties", morphism_properties),
        ("direct/inverse image adjunction", adjunction),
        ("Karoubi suite", karoubi),
        ("claim audit", claim_audit),
        ("determinism", determinism),
    ];
    let mut failed = 0;
    for (i, (name, run)) in criteria.iter().enumerate() {
        let outcome = catch_unwind(AssertUnwindSafe(run)).unwrap_or_else(|_| Err("panicked".into()));
        match outcome {
            Ok(note) if note.is_empty() => println!("PASS {:>2} {name}", i + 1),
            Ok(note) => println!("PASS {:>2} {name}: {note}", i + 1),
            Err(why) => {
                failed += 1;
                println!("FAIL {:>2} {name}: {why}", i + 1);
            }
        }
    }
    if failed > 0 {
        eprintln!("{failed} acceptance criteria failed");
        std::process::exit(1);
    }
}
