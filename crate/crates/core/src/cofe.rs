//! The ordered family of equivalences on uniform relations of a truncated
//! solution: `n`-equality, distance, the later shift, limits of Cauchy
//! sequences, and a contractiveness checker.
//!
//! A relation `R` on `X_N` is uniform when every truncation projection
//! `π_i` is a relation morphism `R → R`. Uniform relations correspond
//! exactly to coherent level families, and `R =ₙ S` holds iff the families
//! agree on levels `0..=n`.

use std::collections::HashMap;
use std::fmt;
use std::sync::Arc;

use fixedbitset::FixedBitSet;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::chain::{glue_family, DomainChain, RelFamily};
use crate::engines::{check_uniform, psi_step};
use crate::error::{Error, Result};
use crate::poset::FinPoset;
use crate::relation::{direct_image, intersect, inverse_image, is_rel_morphism, BinRel};

fn glue_uniform(chain: &DomainChain, fam: &RelFamily) -> Result<BinRel> {
    let glued = glue_family(chain, fam).map_err(|e| match e {
        Error::CoherenceViolation { level, pair } => {
            Error::NotUniform(format!("family is not coherent at level {level}, pair {pair:?}"))
        }
        other => other,
    })?;
    let verdict = check_uniform(chain, &glued)?;
    if let Some(w) = verdict.witness {
        return Err(Error::NotUniform(format!("π_{} does not preserve pair {:?}", w.projection, w.pair)));
    }
    Ok(glued)
}

/// The three characterizations of `R =ₙ S` evaluated separately.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub struct NEqualEvidence {
    /// `π_n* R = π_n* S` on the glued relations.
    pub inverse_images: bool,
    /// `π_n : R → S` and `π_n : S → R`.
    pub morphisms: bool,
    /// `R_m = S_m` for every level `m ≤ n`.
    pub levelwise: bool,
}

impl NEqualEvidence {
    fn verdict(&self, n: usize) -> Result<bool> {
        if self.inverse_images == self.morphisms && self.morphisms == self.levelwise {
            Ok(self.levelwise)
        } else {
            Err(Error::CharacterizationMismatch { n, detail: format!("{self:?}") })
        }
    }
}

/// Evaluates all three characterizations on two uniform relations on `X_N`.
pub fn n_equal_evidence(chain: &DomainChain, r: &BinRel, s: &BinRel, n: usize) -> Result<NEqualEvidence> {
    let pi = chain.pi(n);
    let inverse_images = inverse_image(pi, r)? == inverse_image(pi, s)?;
    let morphisms = is_rel_morphism(pi, r, s)? && is_rel_morphism(pi, s, r)?;
    let fr = RelFamily::from_top(chain, r)?;
    let fs = RelFamily::from_top(chain, s)?;
    Ok(NEqualEvidence { inverse_images, morphisms, levelwise: fr.agrees_up_to(&fs, n) })
}

/// `R =ₙ S` for uniform families; every characterization must agree.
pub fn n_equal(chain: &DomainChain, r: &RelFamily, s: &RelFamily, n: usize) -> Result<bool> {
    let gr = glue_uniform(chain, r)?;
    let gs = glue_uniform(chain, s)?;
    let ev = n_equal_evidence(chain, &gr, &gs, n)?;
    // The glued relations restrict back to the given families, so the
    // levelwise test can be run on the families directly as well.
    if ev.levelwise != r.agrees_up_to(s, n) {
        return Err(Error::CharacterizationMismatch { n, detail: "gluing lost level information".into() });
    }
    ev.verdict(n)
}

/// Levelwise agreement on `0..=n` for arbitrary families.
pub fn n_equal_levelwise(r: &RelFamily, s: &RelFamily, n: usize) -> bool {
    r.agrees_up_to(s, n)
}

/// `2^-n` for the greatest `n` with `R =ₙ S`, or zero when the families
/// agree on every level the truncation can see.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum OfeDistance {
    Dyadic { exponent: usize },
    ZeroAtDepth { depth: usize },
}

impl OfeDistance {
    pub fn value(&self) -> f64 {
        match self {
            OfeDistance::Dyadic { exponent } => 0.5f64.powi(*exponent as i32),
            OfeDistance::ZeroAtDepth { .. } => 0.0,
        }
    }
}

impl fmt::Display for OfeDistance {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            OfeDistance::Dyadic { exponent } => write!(f, "2^-{exponent}"),
            OfeDistance::ZeroAtDepth { depth } => write!(f, "0 (at truncation depth {depth})"),
        }
    }
}

pub fn ofe_distance(chain: &DomainChain, r: &RelFamily, s: &RelFamily) -> Result<OfeDistance> {
    let mut best = 0;
    for n in 0..=chain.depth() {
        if n_equal(chain, r, s, n)? {
            best = n;
        } else {
            break;
        }
    }
    if best == chain.depth() && n_equal(chain, r, s, best)? {
        Ok(OfeDistance::ZeroAtDepth { depth: chain.depth() })
    } else {
        Ok(OfeDistance::Dyadic { exponent: best })
    }
}

/// `(▷R)_0 = ⊤`, `(▷R)_{n+1} = step_n.e_! R_n`; the last input level is
/// dropped. Input level `n` lives on `X_n`, so it is moved to `X_{n+1}`
/// along the step embedding.
pub fn later_shift(chain: &DomainChain, fam: &RelFamily) -> Result<RelFamily> {
    let mut rels = vec![BinRel::total(chain.level(0))];
    for (n, step) in chain.steps().iter().enumerate() {
        rels.push(direct_image(step.e(), fam.level(n))?);
    }
    RelFamily::new(chain, rels)
}

/// A finite sequence of uniform families with a claimed modulus: terms
/// with index `≥ modulus[n]` are pairwise `n`-equal.
#[derive(Clone, Debug)]
pub struct CauchySeq {
    pub terms: Vec<RelFamily>,
    pub modulus: Vec<usize>,
}

impl CauchySeq {
    pub fn constant(fam: RelFamily) -> Self {
        let depth = fam.depth();
        CauchySeq { terms: vec![fam], modulus: vec![0; depth + 1] }
    }
}

/// `lim R = ⋂_i S_i` with `S_i = π_i*(R_{m(i)})`.
pub fn cofe_limit(chain: &DomainChain, seq: &CauchySeq) -> Result<RelFamily> {
    let depth = chain.depth();
    if seq.terms.is_empty() || seq.modulus.len() != depth + 1 {
        return Err(Error::TypeMismatch("a Cauchy witness needs terms and one modulus entry per level".into()));
    }
    if seq.modulus.windows(2).any(|w| w[0] > w[1]) || seq.modulus.iter().any(|&m| m >= seq.terms.len()) {
        return Err(Error::TypeMismatch("modulus must be increasing and index existing terms".into()));
    }
    let glued = seq.terms.iter().map(|t| glue_uniform(chain, t)).collect::<Result<Vec<_>>>()?;
    for n in 0..=depth {
        for i in seq.modulus[n]..seq.terms.len() {
            for j in (i + 1)..seq.terms.len() {
                if !n_equal_evidence(chain, &glued[i], &glued[j], n)?.verdict(n)? {
                    return Err(Error::NotCauchy { n, i, j });
                }
            }
        }
    }
    let s: Vec<BinRel> = (0..=depth)
        .map(|i| inverse_image(chain.pi(i), &glued[seq.modulus[i]]))
        .collect::<Result<_>>()?;
    for i in 0..=depth {
        for j in i..=depth {
            if !s[j].is_subset(&s[i])? || inverse_image(chain.pi(i), &s[j])? != s[i] {
                return Err(Error::InternalInvariantViolation(format!(
                    "limit approximants S_{i} and S_{j} are not nested"
                )));
            }
        }
    }
    let lim = intersect(chain.top(), &s)?;
    for (i, si) in s.iter().enumerate() {
        if inverse_image(chain.pi(i), &lim)? != inverse_image(chain.pi(i), si)? {
            return Err(Error::InternalInvariantViolation(format!("limit is not {i}-equal to S_{i}")));
        }
    }
    RelFamily::from_top(chain, &lim)
}

/// Uniform relations on one level, as rooted subtrees of the tree on pairs
/// whose parent map is `p ↦ π_{d-1}(p)`, `d` being the least index with
/// `π_d(p) = p`. The root is `(⊥, ⊥)`.
#[derive(Clone, Debug)]
pub struct UniformForest {
    carrier: Arc<FinPoset>,
    /// Pair indices (row-major), parents before children.
    order: Vec<usize>,
    /// Parent of each pair index; `None` for the root.
    parent: Vec<Option<usize>>,
    /// Depth of each pair.
    depth: Vec<usize>,
}

impl UniformForest {
    /// The tree on pairs of `X_n`.
    pub fn on_level(chain: &DomainChain, n: usize) -> Self {
        let carrier = chain.level(n).clone();
        let k = carrier.size();
        let mut parent = vec![None; k * k];
        let mut depth = vec![0; k * k];
        for x in 0..k {
            for y in 0..k {
                let fixed = |j: usize| {
                    let pi = chain.level_pi(n, j);
                    pi.apply(x) == x && pi.apply(y) == y
                };
                let d = (0..=n).find(|&j| fixed(j)).expect("π_n is the identity on level n");
                depth[x * k + y] = d;
                if d > 0 {
                    let pi = chain.level_pi(n, d - 1);
                    parent[x * k + y] = Some(pi.apply(x) * k + pi.apply(y));
                }
            }
        }
        let mut order: Vec<usize> = (0..k * k).collect();
        order.sort_by_key(|&i| (depth[i], i));
        UniformForest { carrier, order, parent, depth }
    }

    pub fn carrier(&self) -> &Arc<FinPoset> {
        &self.carrier
    }

    /// Number of uniform relations, saturating at `u128::MAX`.
    pub fn count(&self) -> u128 {
        let mut f = vec![1u128; self.parent.len()];
        for &i in self.order.iter().rev() {
            if let Some(p) = self.parent[i] {
                f[p] = f[p].saturating_mul(f[i].saturating_add(1));
            }
        }
        f[self.order[0]]
    }

    /// Whether a relation is closed under the parent map and admissible.
    pub fn is_closed(&self, r: &BinRel) -> bool {
        let bits = r.bits();
        self.order.iter().all(|&i| match self.parent[i] {
            Some(p) => !bits.contains(i) || bits.contains(p),
            None => bits.contains(i),
        })
    }

    /// Calls `f` on every uniform relation, in a deterministic order.
    /// Stops early when `f` returns `false`.
    pub fn for_each(&self, mut f: impl FnMut(&BinRel) -> bool) {
        let k = self.carrier.size();
        let mut bits = FixedBitSet::with_capacity(k * k);
        bits.insert(self.order[0]);
        self.walk(1, &mut bits, &mut f);
    }

    fn walk(&self, i: usize, bits: &mut FixedBitSet, f: &mut dyn FnMut(&BinRel) -> bool) -> bool {
        if i == self.order.len() {
            return f(&BinRel::from_bits(&self.carrier, bits.clone()));
        }
        let node = self.order[i];
        if !self.walk(i + 1, bits, f) {
            return false;
        }
        let parent = self.parent[node].expect("only the root lacks a parent");
        if bits.contains(parent) {
            bits.insert(node);
            let go_on = self.walk(i + 1, bits, f);
            bits.set(node, false);
            return go_on;
        }
        true
    }

    /// A random uniform relation agreeing with `base` on every pair of depth
    /// `≤ keep`; deeper pairs are included with probability one half when
    /// their parent is.
    pub fn sample_extension(&self, base: &BinRel, keep: usize, rng: &mut impl Rng) -> BinRel {
        let k = self.carrier.size();
        let mut bits = FixedBitSet::with_capacity(k * k);
        for &i in &self.order {
            let include = if self.depth[i] <= keep {
                base.bits().contains(i)
            } else {
                let p = self.parent[i].expect("deep pairs have parents");
                bits.contains(p) && rng.gen_bool(0.5)
            };
            bits.set(i, include);
        }
        BinRel::from_bits(&self.carrier, bits)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum ContractiveMode {
    /// Every uniform relation on the top level, grouped by `n`-equality class.
    Exhaustive,
    /// Every `n`-equality class, each represented by its least and greatest
    /// member; exact for monotone operators.
    Quotient,
    /// Seeded random classes and members.
    Sampled,
}

#[derive(Clone, Debug, Serialize)]
pub struct ContractiveOptions {
    /// Largest number of uniform relations enumerated one by one.
    pub exhaustive_limit: u128,
    /// Largest number of classes per index in quotient mode.
    pub quotient_limit: u128,
    pub samples: usize,
    pub seed: u64,
}

impl Default for ContractiveOptions {
    fn default() -> Self {
        ContractiveOptions { exhaustive_limit: 2_000_000, quotient_limit: 5_000_000, samples: 2_000, seed: 0 }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct ContractiveCounterexample {
    pub n: usize,
    pub left: Vec<(usize, usize)>,
    pub right: Vec<(usize, usize)>,
}

#[derive(Clone, Debug, Serialize)]
pub struct ContractiveReport {
    pub mode: ContractiveMode,
    /// Number of uniform relations on the top level.
    pub uniform_relations: u128,
    /// `n`-equality classes examined, summed over `n`.
    pub classes: u64,
    /// Operator evaluations.
    pub evaluations: u64,
    pub characterization_checks: u64,
    pub counterexample_count: u64,
    /// At most ten counterexamples, as glued relations on the top level.
    pub counterexamples: Vec<ContractiveCounterexample>,
}

impl ContractiveReport {
    pub fn holds(&self) -> bool {
        self.counterexample_count == 0
    }
}

/// Checks `R =ₙ S ⟹ Ψ(R) =ₙ₊₁ Ψ(S)` for the relational operator of the chain.
/// Quotient mode is available only for covariant functors, where `Ψ` is
/// monotone and the extremes of a class bound every member's image.
pub fn check_contractive(chain: &DomainChain, opts: &ContractiveOptions) -> Result<ContractiveReport> {
    run_contractive(chain, &|fam| psi_step(chain, fam), chain.functor().is_covariant(), opts)
}

type Op<'a> = dyn Fn(&RelFamily) -> Result<RelFamily> + 'a;

/// As [`check_contractive`], for an arbitrary operator on families. Nothing
/// is assumed about `op`, so only exhaustive or sampled mode is used.
pub fn check_contractive_with(chain: &DomainChain, op: &Op<'_>, opts: &ContractiveOptions) -> Result<ContractiveReport> {
    run_contractive(chain, op, false, opts)
}

fn run_contractive(chain: &DomainChain, op: &Op<'_>, monotone: bool, opts: &ContractiveOptions) -> Result<ContractiveReport> {
    let depth = chain.depth();
    let top_forest = UniformForest::on_level(chain, depth);
    let total = top_forest.count();
    let mut report = ContractiveReport {
        mode: ContractiveMode::Exhaustive,
        uniform_relations: total,
        classes: 0,
        evaluations: 0,
        characterization_checks: 0,
        counterexample_count: 0,
        counterexamples: Vec::new(),
    };
    if depth == 0 {
        return Ok(report);
    }
    let level_counts: Vec<u128> = (0..depth).map(|n| UniformForest::on_level(chain, n).count()).collect();
    if total <= opts.exhaustive_limit {
        exhaustive(chain, op, &top_forest, opts, &mut report)?;
    } else if monotone && level_counts.iter().all(|&c| c <= opts.quotient_limit) {
        report.mode = ContractiveMode::Quotient;
        quotient(chain, op, &mut report)?;
    } else {
        report.mode = ContractiveMode::Sampled;
        sampled(chain, op, &top_forest, opts, &mut report)?;
    }
    Ok(report)
}

fn record(report: &mut ContractiveReport, n: usize, left: &BinRel, right: &BinRel) {
    report.counterexample_count += 1;
    if report.counterexamples.len() < 10 {
        report.counterexamples.push(ContractiveCounterexample { n, left: left.pairs(), right: right.pairs() });
    }
}

fn prefix_key(fam: &RelFamily, n: usize) -> Vec<FixedBitSet> {
    fam.rels()[..=n.min(fam.depth())].iter().map(|r| r.bits().clone()).collect()
}

fn exhaustive(
    chain: &DomainChain,
    op: &Op<'_>,
    forest: &UniformForest,
    opts: &ContractiveOptions,
    report: &mut ContractiveReport,
) -> Result<()> {
    let depth = chain.depth();
    // Per index n: class key (level n of the input) ↦ (output prefix, witness).
    let mut classes: Vec<HashMap<FixedBitSet, (Vec<FixedBitSet>, BinRel)>> = vec![HashMap::new(); depth];
    // Characterizations one and three must induce the same partition.
    let mut by_image: Vec<HashMap<FixedBitSet, FixedBitSet>> = vec![HashMap::new(); depth + 1];
    let mut by_level: Vec<HashMap<FixedBitSet, FixedBitSet>> = vec![HashMap::new(); depth + 1];
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    let mut reservoir: Vec<BinRel> = Vec::new();
    let mut seen = 0usize;
    let mut failure: Option<Error> = None;
    forest.for_each(|r| {
        let mut step = || -> Result<()> {
            let fam = RelFamily::from_top(chain, r)?;
            let out = op(&fam)?;
            report.evaluations += 1;
            for n in 0..=depth {
                let image = inverse_image(chain.pi(n), r)?.bits().clone();
                let level = fam.level(n).bits().clone();
                let a = by_image[n].entry(image.clone()).or_insert_with(|| level.clone()).clone();
                let b = by_level[n].entry(level.clone()).or_insert_with(|| image.clone()).clone();
                report.characterization_checks += 1;
                if a != level || b != image {
                    return Err(Error::CharacterizationMismatch {
                        n,
                        detail: "π-inverse-image classes differ from levelwise classes".into(),
                    });
                }
                if n < depth {
                    let key_out = prefix_key(&out, n + 1);
                    match classes[n].get(&level) {
                        Some((expected, witness)) => {
                            if *expected != key_out {
                                record(report, n, witness, r);
                            }
                        }
                        None => {
                            classes[n].insert(level, (key_out, r.clone()));
                        }
                    }
                }
            }
            seen += 1;
            if reservoir.len() < 64 {
                reservoir.push(r.clone());
            } else {
                let j = rng.gen_range(0..seen);
                if j < 64 {
                    reservoir[j] = r.clone();
                }
            }
            Ok(())
        };
        match step() {
            Ok(()) => true,
            Err(e) => {
                failure = Some(e);
                false
            }
        }
    });
    if let Some(e) = failure {
        return Err(e);
    }
    report.classes = classes.iter().map(|c| c.len() as u64).sum();
    // The morphism characterization on sampled pairs, all three compared.
    for a in &reservoir {
        for b in &reservoir {
            for n in 0..=depth {
                n_equal_evidence(chain, a, b, n)?.verdict(n)?;
                report.characterization_checks += 1;
            }
        }
    }
    Ok(())
}

fn quotient(chain: &DomainChain, op: &Op<'_>, report: &mut ContractiveReport) -> Result<()> {
    let depth = chain.depth();
    for n in 0..depth {
        let forest = UniformForest::on_level(chain, n);
        let cum = &chain.cum()[n];
        let mut failure: Option<Error> = None;
        forest.for_each(|t| {
            let mut step = || -> Result<()> {
                let least = direct_image(cum.e(), t)?;
                let greatest = inverse_image(cum.p(), t)?;
                let mut outs = Vec::with_capacity(2);
                for ext in [&least, &greatest] {
                    let fam = RelFamily::from_top(chain, ext)?;
                    if fam.level(n) != t || !check_uniform(chain, ext)?.uniform {
                        return Err(Error::InternalInvariantViolation(format!(
                            "extension of a uniform level-{n} relation is not in its class"
                        )));
                    }
                    outs.push(prefix_key(&op(&fam)?, n + 1));
                    report.evaluations += 1;
                }
                n_equal_evidence(chain, &least, &greatest, n)?.verdict(n).and_then(|same| {
                    if same {
                        Ok(())
                    } else {
                        Err(Error::CharacterizationMismatch { n, detail: "class extremes not n-equal".into() })
                    }
                })?;
                report.characterization_checks += 1;
                report.classes += 1;
                if outs[0] != outs[1] {
                    record(report, n, &least, &greatest);
                }
                Ok(())
            };
            match step() {
                Ok(()) => true,
                Err(e) => {
                    failure = Some(e);
                    false
                }
            }
        });
        if let Some(e) = failure {
            return Err(e);
        }
    }
    Ok(())
}

fn sampled(
    chain: &DomainChain,
    op: &Op<'_>,
    forest: &UniformForest,
    opts: &ContractiveOptions,
    report: &mut ContractiveReport,
) -> Result<()> {
    let depth = chain.depth();
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    let bottom = BinRel::bottom_only(chain.top());
    for _ in 0..opts.samples {
        let n = rng.gen_range(0..depth);
        let r = forest.sample_extension(&bottom, 0, &mut rng);
        let s = forest.sample_extension(&r, n, &mut rng);
        if !n_equal_evidence(chain, &r, &s, n)?.verdict(n)? {
            return Err(Error::InternalInvariantViolation("sampled class members are not n-equal".into()));
        }
        report.characterization_checks += 1;
        let out_r = op(&RelFamily::from_top(chain, &r)?)?;
        let out_s = op(&RelFamily::from_top(chain, &s)?)?;
        report.evaluations += 2;
        report.classes += 1;
        if prefix_key(&out_r, n + 1) != prefix_key(&out_s, n + 1) {
            record(report, n, &r, &s);
        }
    }
    Ok(())
}
