//! Three independent constructions of the recursive relation on a truncated
//! solution, and their comparison.
//!
//! All engines work on level-indexed families. The operator `Ψ` sends a
//! family `R` to the family with `Ψ(R)_0 = ⊤` on the one-point level and
//! `Ψ(R)_{n+1} = F(R_n, R_n)`, so level `n` of the output only reads level
//! `n - 1` of the input.

use serde::Serialize;

use crate::chain::{glue_family, DomainChain, RelFamily};
use crate::error::{Error, Result};
use crate::functor::FunctorAction;
use crate::relation::{rel_morphism_witness, BinRel};

/// A point of `R^op × R` on the chain: `(R⁻, R⁺)`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct RelPair {
    pub neg: RelFamily,
    pub pos: RelFamily,
}

impl RelPair {
    /// `(R⁻, R⁺) ≤ (S⁻, S⁺)` iff `S⁻ ⊆ R⁻` and `R⁺ ⊆ S⁺` levelwise.
    pub fn leq(&self, other: &RelPair) -> Result<bool> {
        Ok(other.neg.is_subset(&self.neg)? && self.pos.is_subset(&other.pos)?)
    }
}

/// `Ψ(R)`.
pub fn psi_step(chain: &DomainChain, fam: &RelFamily) -> Result<RelFamily> {
    let mut rels = vec![BinRel::total(chain.level(0))];
    for n in 0..chain.depth() {
        let r = fam.level(n);
        rels.push(chain.functor().rel_into(r, r, chain.level(n + 1))?);
    }
    RelFamily::new(chain, rels)
}

/// `Ψ(R⁻, R⁺) = (F(R⁺, R⁻), F(R⁻, R⁺))`, levelwise.
pub fn psi_pair_step(chain: &DomainChain, pair: &RelPair) -> Result<RelPair> {
    let mut neg = vec![BinRel::total(chain.level(0))];
    let mut pos = neg.clone();
    for n in 0..chain.depth() {
        let (rn, rp) = (pair.neg.level(n), pair.pos.level(n));
        let target = chain.level(n + 1);
        neg.push(chain.functor().rel_into(rp, rn, target)?);
        pos.push(chain.functor().rel_into(rn, rp, target)?);
    }
    Ok(RelPair { neg: RelFamily::new(chain, neg)?, pos: RelFamily::new(chain, pos)? })
}

fn iteration_cap(chain: &DomainChain) -> usize {
    chain.depth() + 4
}

#[derive(Clone, Debug, Serialize)]
pub struct KtResult {
    pub pair: RelPair,
    /// Applications of `Ψ`, including the final one that changed nothing.
    pub iterations: usize,
    pub ascending: bool,
    pub neg_equals_pos: bool,
}

/// Least fixed point of the pair operator, iterated from the bottom
/// `(⊤, {(⊥,⊥)})` of `R^op × R`.
pub fn solve_knaster_tarski(chain: &DomainChain) -> Result<KtResult> {
    let mut cur = RelPair { neg: RelFamily::total(chain), pos: RelFamily::bottom_only(chain) };
    let mut ascending = true;
    for k in 1..=iteration_cap(chain) {
        let next = psi_pair_step(chain, &cur)?;
        if !cur.leq(&next)? {
            ascending = false;
        }
        if next == cur {
            if let Some((level, diff)) = cur.neg.first_difference(&cur.pos) {
                return Err(Error::NegPosMismatch { level, pair: diff[0] });
            }
            return Ok(KtResult { pair: cur, iterations: k, ascending, neg_equals_pos: true });
        }
        cur = next;
    }
    Err(Error::IterationCap { engine: "knaster-tarski", cap: iteration_cap(chain) })
}

/// `R_0 = ⊤`, `R_{n+1} = F(R_n, R_n)`, checked to be a chain of embeddings.
pub fn solve_kleene(chain: &DomainChain) -> Result<RelFamily> {
    let mut rels = vec![BinRel::total(chain.level(0))];
    for n in 0..chain.depth() {
        let next = chain.functor().rel_into(&rels[n], &rels[n], chain.level(n + 1))?;
        rels.push(next);
    }
    let fam = RelFamily::new(chain, rels)?;
    fam.check_coherent(chain)?;
    Ok(fam)
}

#[derive(Clone, Debug, Serialize)]
pub struct BanachResult {
    pub family: RelFamily,
    pub iterations: usize,
    /// For each level `n`, the first iterate index from which level `n`
    /// never changes again.
    pub profile: Vec<usize>,
    /// The fixed point reached from `{(⊥,⊥)}` at every level is the same.
    pub second_start_agrees: bool,
}

/// The iterates `x_0 = start, x_{k+1} = Ψ(x_k)` up to the first repetition.
pub fn banach_iterates(chain: &DomainChain, start: RelFamily) -> Result<Vec<RelFamily>> {
    let mut out = vec![start];
    for _ in 0..iteration_cap(chain) {
        let next = psi_step(chain, out.last().expect("nonempty"))?;
        let done = &next == out.last().expect("nonempty");
        out.push(next);
        if done {
            return Ok(out);
        }
    }
    Err(Error::IterationCap { engine: "banach", cap: iteration_cap(chain) })
}

/// Stabilization index of every level along a finite iterate sequence.
pub fn stabilization_profile(iterates: &[RelFamily]) -> Vec<usize> {
    let last = iterates.last().expect("nonempty");
    (0..=last.depth())
        .map(|n| {
            let mut k = iterates.len() - 1;
            while k > 0 && iterates[k - 1].level(n) == last.level(n) {
                k -= 1;
            }
            k
        })
        .collect()
}

/// Unique fixed point of the contractive `Ψ`, iterated from `⊤`.
pub fn solve_banach(chain: &DomainChain) -> Result<BanachResult> {
    let iterates = banach_iterates(chain, RelFamily::total(chain))?;
    let profile = stabilization_profile(&iterates);
    let late: Vec<usize> = profile.iter().enumerate().filter(|&(n, &k)| k > n + 1).map(|(n, _)| n).collect();
    if !late.is_empty() {
        return Err(Error::NotContractive { levels: late });
    }
    // x_i and x_j agree on levels ≤ n once i, j ≥ n.
    for n in 0..=chain.depth() {
        for i in n..iterates.len() {
            for j in (i + 1)..iterates.len() {
                if !iterates[i].agrees_up_to(&iterates[j], n) {
                    return Err(Error::NotCauchy { n, i, j });
                }
            }
        }
    }
    let family = iterates.last().expect("nonempty").clone();
    let other = banach_iterates(chain, RelFamily::bottom_only(chain))?;
    let other_fix = other.last().expect("nonempty");
    if let Some((level, difference)) = family.first_difference(other_fix) {
        return Err(Error::MethodDisagreement {
            left: "banach from ⊤".into(),
            right: "banach from {(⊥,⊥)}".into(),
            level,
            difference,
        });
    }
    Ok(BanachResult { family, iterations: iterates.len() - 1, profile, second_start_agrees: true })
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct UniformWitness {
    /// Index `i` of the projection `π_i` that fails to preserve the relation.
    pub projection: usize,
    pub pair: (usize, usize),
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct UniformVerdict {
    pub uniform: bool,
    pub witness: Option<UniformWitness>,
}

/// Whether `π_i : R → R` for every `i ≤ N`.
pub fn check_uniform(chain: &DomainChain, r: &BinRel) -> Result<UniformVerdict> {
    for (i, pi) in chain.pis().iter().enumerate() {
        if let Some(pair) = rel_morphism_witness(pi, r, r)? {
            return Ok(UniformVerdict { uniform: false, witness: Some(UniformWitness { projection: i, pair }) });
        }
    }
    Ok(UniformVerdict { uniform: true, witness: None })
}

/// `R_{n+1} = F(R_n, R_n)` at every level and `R_0 = ⊤`.
pub fn satisfies_unfolding(chain: &DomainChain, fam: &RelFamily) -> Result<bool> {
    Ok(&psi_step(chain, fam)? == fam)
}

#[derive(Clone, Debug, Serialize)]
pub struct Comparison {
    pub knaster_tarski: KtResult,
    pub kleene: RelFamily,
    pub banach: BanachResult,
    pub agreement: bool,
    pub unfolding_equation: bool,
    /// The result glued into one relation on the top level; the meet and
    /// join gluings were found equal.
    pub glued: BinRel,
    pub duality: bool,
    pub uniformity: UniformVerdict,
}

fn disagreement(left: &str, right: &str, a: &RelFamily, b: &RelFamily) -> Result<()> {
    match a.first_difference(b) {
        None => Ok(()),
        Some((level, difference)) => {
            Err(Error::MethodDisagreement { left: left.into(), right: right.into(), level, difference })
        }
    }
}

/// Runs all three engines and requires exact levelwise agreement.
pub fn compare_methods(chain: &DomainChain) -> Result<Comparison> {
    let kt = solve_knaster_tarski(chain)?;
    let kleene = solve_kleene(chain)?;
    let banach = solve_banach(chain)?;
    disagreement("knaster-tarski", "kleene", &kt.pair.pos, &kleene)?;
    disagreement("kleene", "banach", &kleene, &banach.family)?;
    let unfolding_equation = satisfies_unfolding(chain, &kleene)?;
    if !unfolding_equation {
        return Err(Error::InternalInvariantViolation("kleene family does not satisfy the unfolding equation".into()));
    }
    let glued = glue_family(chain, &kleene)?;
    let uniformity = check_uniform(chain, &glued)?;
    Ok(Comparison {
        knaster_tarski: kt,
        kleene,
        banach,
        agreement: true,
        unfolding_equation,
        glued,
        duality: true,
        uniformity,
    })
}
