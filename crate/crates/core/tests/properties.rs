use std::sync::Arc;

use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use relfix::chain::{build_chain, DomainChain, RelFamily};
use relfix::cofe::{later_shift, n_equal, n_equal_levelwise, UniformForest};
use relfix::dsl::{parse_functor, parse_spec};
use relfix::engines::compare_methods;
use relfix::error::{Caps, Error};
use relfix::functor::FunctorExpr;
use relfix::karoubi::{enumerate_canonical_idempotents, idem_leq};
use relfix::map::{all_monotone_maps, MonotoneMap};
use relfix::poset::{enumerate_pointed_posets, isomorphic, FinPoset};
use relfix::relation::{direct_image, enumerate_admissible, inverse_image, BinRel};
use relfix::workbench::LAZY_NAT;

fn posets() -> Vec<Arc<FinPoset>> {
    enumerate_pointed_posets(4)
}

fn functor_expr() -> impl Strategy<Value = FunctorExpr> {
    let c2 = Arc::new(FinPoset::chain(2).unwrap());
    let leaf = prop_oneof![
        Just(FunctorExpr::one()),
        Just(FunctorExpr::var()),
        Just(FunctorExpr::constant(c2.clone(), BinRel::diagonal(&c2), "eq").unwrap()),
        Just(FunctorExpr::constant(c2.clone(), BinRel::order(&c2), "le").unwrap()),
    ];
    leaf.prop_recursive(3, 12, 2, |inner| {
        prop_oneof![
            inner.clone().prop_map(FunctorExpr::lift),
            (inner.clone(), inner.clone()).prop_map(|(a, b)| FunctorExpr::prod(a, b)),
            (inner.clone(), inner.clone()).prop_map(|(a, b)| FunctorExpr::sum(a, b)),
            (inner.clone(), inner).prop_map(|(a, b)| FunctorExpr::fun(a, b)),
        ]
    })
}

fn lazy_nat(depth: usize) -> DomainChain {
    build_chain(&parse_spec(LAZY_NAT).unwrap().functor, depth, &Caps::default()).unwrap()
}

fn random_uniform(chain: &DomainChain, keep: usize, seed: u64) -> RelFamily {
    let forest = UniformForest::on_level(chain, chain.depth());
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let base = BinRel::total(chain.top());
    let r = forest.sample_extension(&base, keep, &mut rng);
    RelFamily::from_top(chain, &r).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn functor_display_round_trips(f in functor_expr()) {
        prop_assert_eq!(parse_functor(&f.to_string()).unwrap(), f);
    }

    #[test]
    fn canonical_form_is_idempotent(i in 0usize..25, perm_seed in any::<u64>()) {
        let p = &enumerate_pointed_posets(5)[i];
        let c = p.canonical();
        prop_assert_eq!(c.canonical(), c.clone());
        prop_assert!(c.is_canonical());
        let mut perm: Vec<usize> = (0..p.size()).collect();
        let mut rng = ChaCha8Rng::seed_from_u64(perm_seed);
        rand::seq::SliceRandom::shuffle(perm.as_mut_slice(), &mut rng);
        let shuffled = p.relabeled(&perm).unwrap();
        prop_assert!(isomorphic(&shuffled, p));
    }

    #[test]
    fn images_form_a_galois_connection(a in 0usize..8, b in 0usize..8, pick in any::<(u64, u64, u64)>()) {
        let ps = posets();
        let (x, y) = (&ps[a % ps.len()], &ps[b % ps.len()]);
        let maps = all_monotone_maps(x, y, 10_000).unwrap();
        let f = &maps[(pick.0 % maps.len() as u64) as usize];
        let rx = enumerate_admissible(x, 1 << 16).unwrap();
        let ry = enumerate_admissible(y, 1 << 16).unwrap();
        let r = &rx[(pick.1 % rx.len() as u64) as usize];
        let s = &ry[(pick.2 % ry.len() as u64) as usize];
        let left = direct_image(f, r).unwrap().is_subset(s).unwrap();
        let right = r.is_subset(&inverse_image(f, s).unwrap()).unwrap();
        prop_assert_eq!(left, right);
    }

    #[test]
    fn inverse_images_compose(a in 0usize..8, b in 0usize..8, c in 0usize..8, pick in any::<(u64, u64, u64)>()) {
        let ps = posets();
        let (x, y, z) = (&ps[a % ps.len()], &ps[b % ps.len()], &ps[c % ps.len()]);
        let fs = all_monotone_maps(x, y, 10_000).unwrap();
        let gs = all_monotone_maps(y, z, 10_000).unwrap();
        let f = &fs[(pick.0 % fs.len() as u64) as usize];
        let g = &gs[(pick.1 % gs.len() as u64) as usize];
        let rz = enumerate_admissible(z, 1 << 16).unwrap();
        let s = &rz[(pick.2 % rz.len() as u64) as usize];
        let whole = inverse_image(&g.after(f).unwrap(), s).unwrap();
        let staged = inverse_image(f, &inverse_image(g, s).unwrap()).unwrap();
        prop_assert_eq!(whole, staged);
    }

    #[test]
    fn idempotent_order_is_antisymmetric(i in 0usize..25) {
        let d = &enumerate_pointed_posets(5)[i];
        let ed = enumerate_canonical_idempotents(d, 100_000).unwrap();
        for p in &ed {
            prop_assert!(idem_leq(p, p).unwrap());
            for q in &ed {
                if idem_leq(p, q).unwrap() && idem_leq(q, p).unwrap() {
                    prop_assert_eq!(p, q);
                }
            }
        }
    }

    #[test]
    fn n_equality_characterizations_agree(keep_r in 0usize..5, keep_s in 0usize..5, seeds in any::<(u64, u64)>(), n in 0usize..5) {
        let chain = lazy_nat(4);
        let r = random_uniform(&chain, keep_r, seeds.0);
        let s = random_uniform(&chain, keep_s, seeds.1);
        let eq = n_equal(&chain, &r, &s, n).unwrap();
        prop_assert_eq!(eq, n_equal_levelwise(&r, &s, n));
        prop_assert!(n_equal(&chain, &r, &r, n).unwrap());
    }

    #[test]
    fn later_shift_is_contractive(keep in 0usize..4, seeds in any::<(u64, u64)>(), n in 0usize..4) {
        let chain = lazy_nat(4);
        let forest = UniformForest::on_level(&chain, 4);
        let mut rng = ChaCha8Rng::seed_from_u64(seeds.0);
        let base = forest.sample_extension(&BinRel::total(chain.top()), 0, &mut rng);
        let r = forest.sample_extension(&base, keep, &mut ChaCha8Rng::seed_from_u64(seeds.1));
        let s = forest.sample_extension(&base, keep, &mut ChaCha8Rng::seed_from_u64(seeds.1 ^ 1));
        let (r, s) = (RelFamily::from_top(&chain, &r).unwrap(), RelFamily::from_top(&chain, &s).unwrap());
        if n_equal_levelwise(&r, &s, n) {
            let (lr, ls) = (later_shift(&chain, &r).unwrap(), later_shift(&chain, &s).unwrap());
            prop_assert!(n_equal_levelwise(&lr, &ls, n + 1));
        }
    }

    #[test]
    fn engines_agree_on_random_functors(f in functor_expr()) {
        if !f.polarity_consistent() {
            return Ok(());
        }
        let caps = Caps { max_elements: 2_000, max_pairs: 1_000_000 };
        match build_chain(&f, 2, &caps) {
            Ok(chain) => {
                let c = compare_methods(&chain).unwrap();
                prop_assert!(c.agreement, "{}", f);
                prop_assert!(c.knaster_tarski.neg_equals_pos, "{}", f);
                prop_assert!(c.duality, "{}", f);
                prop_assert!(c.uniformity.uniform, "{}", f);
            }
            Err(Error::SizeCapExceeded { .. }) => {}
            Err(e) => prop_assert!(false, "{}: {}", f, e),
        }
    }
}

#[test]
fn identity_map_pulls_back_to_itself() {
    for x in posets() {
        let id = MonotoneMap::identity(&x);
        for r in enumerate_admissible(&x, 1 << 16).unwrap() {
            assert_eq!(inverse_image(&id, &r).unwrap(), r);
            assert_eq!(direct_image(&id, &r).unwrap(), r);
        }
    }
}
