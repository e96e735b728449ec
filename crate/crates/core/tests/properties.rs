//! Invariants of every module, checked on seeded random instances.

mod common;

use std::collections::HashSet;

use common::*;
use ecor::cfg::{canonical_model, counterexample_from_word, derives, reduce_universality};
use ecor::decide::{decide, decide_starfree, graph_characterization_check, Query, Verdict};
use ecor::graphs::{
    glang, glang_starfree, homomorphism_exists, is_consistent, is_homomorphism, qs, quotient, saturations,
    structure_of, Graph, Label,
};
use ecor::nfa::{eval_nfa, thompson, SignedLetter, StateSet};
use ecor::satpath::{
    as_accepts, fragment_emptiness, full_exka_search, pairwise_psat, pointwise_psat, saturate_from_path, PathSearch,
};
use ecor::structures::{brute_force_refute_in, eval, Relation, Structure};
use ecor::terms::{bar_dual, converse_normal_form, parse, parse_term, GeneralTerm, SignedAtom, Term};
use proptest::prelude::*;
use rand::Rng;

const AB: [&str; 2] = ["a", "b"];

fn config(cases: u32) -> ProptestConfig {
    ProptestConfig { cases, failure_persistence: None, ..ProptestConfig::default() }
}

/// Structures on one to three vertices over `{a, b}`.
fn small_structures(seed: u64, count: usize) -> Vec<Structure> {
    let s = sigma(&AB);
    let mut r = rng(seed);
    (0..count).map(|i| random_structure(&mut r, &s, 1 + i % 3)).collect()
}

fn pointed_holds(m: &Structure, x: usize, y: usize, t: &Term) -> bool {
    eval(m, t).unwrap().contains(x, y)
}

// ---------------------------------------------------------------------------
// terms

proptest! {
    #![proptest_config(config(200))]

    #[test]
    fn cnf_preserves_semantics(seed in any::<u64>(), size in 1usize..=8) {
        let t = random_general(&mut rng(seed), &AB, size);
        let c = converse_normal_form(&t);
        for m in small_structures(seed, 12) {
            prop_assert_eq!(eval_oracle(&m, &c), eval_general(&m, &t), "{}", t);
        }
    }

    #[test]
    fn general_render_parse_round_trip(seed in any::<u64>(), size in 1usize..=10) {
        let t = random_general(&mut rng(seed), &AB, size);
        let text = t.to_string();
        let back = parse(&text, None).unwrap();
        prop_assert_eq!(back.to_string(), text.clone());
        prop_assert_eq!(parse(&text.replace(';', " ; ").replace('|', " | "), None).unwrap(), back);
    }

    #[test]
    fn term_render_parse_round_trip(seed in any::<u64>(), size in 1usize..=10) {
        let t = random_term(&mut rng(seed), &AB, size, TermShape::ALL);
        prop_assert_eq!(parse_term(&t.to_string(), None).unwrap(), t);
    }

    #[test]
    fn cnf_is_homomorphic(seed in any::<u64>(), size in 1usize..=6) {
        let mut r = rng(seed);
        let (x, y) = (random_general(&mut r, &AB, size), random_general(&mut r, &AB, size));
        let (bx, by) = (Box::new(x.clone()), Box::new(y.clone()));
        let conv = |t: &GeneralTerm| converse_normal_form(&GeneralTerm::Conv(Box::new(t.clone())));
        prop_assert_eq!(
            converse_normal_form(&GeneralTerm::Comp(bx.clone(), by.clone())),
            Term::comp(converse_normal_form(&x), converse_normal_form(&y))
        );
        prop_assert_eq!(
            converse_normal_form(&GeneralTerm::Conv(Box::new(GeneralTerm::Comp(bx.clone(), by.clone())))),
            Term::comp(conv(&y), conv(&x))
        );
        prop_assert_eq!(
            converse_normal_form(&GeneralTerm::Conv(Box::new(GeneralTerm::Inter(bx.clone(), by)))),
            Term::inter(conv(&x), conv(&y))
        );
        prop_assert_eq!(conv(&GeneralTerm::Conv(bx)), converse_normal_form(&x));
    }
}

#[test]
fn bar_dual_is_an_involution() {
    let leaves = [
        SignedAtom::Var("a".into()),
        SignedAtom::NegVar("a".into()),
        SignedAtom::Id,
        SignedAtom::NegId,
        SignedAtom::Bot,
        SignedAtom::Top,
    ];
    let m = &small_structures(7, 6);
    for x in &leaves {
        assert_eq!(&bar_dual(&bar_dual(x)), x);
        for s in m {
            let (t, d) = (Term::from(x), Term::from(&bar_dual(x)));
            assert_eq!(eval(s, &t).unwrap().complement(), eval(s, &d).unwrap(), "{t}");
        }
    }
}

#[test]
fn breve_dual_is_an_involution() {
    for x in SignedLetter::all(2) {
        assert_eq!(x.breve().breve(), x);
    }
    assert_eq!(SignedLetter::Id.breve(), SignedLetter::Id);
    assert_eq!(SignedLetter::NegId.breve(), SignedLetter::NegId);
}

// ---------------------------------------------------------------------------
// structures

proptest! {
    #![proptest_config(config(200))]

    #[test]
    fn star_is_union_of_powers(seed in any::<u64>(), size in 1usize..=6) {
        let t = random_term(&mut rng(seed), &AB, size, TermShape::ALL);
        for m in small_structures(seed, 9) {
            let n = m.n();
            let r = eval(&m, &t).unwrap();
            let s = eval(&m, &Term::star(t.clone())).unwrap();
            let mut power = Relation::identity(n);
            let mut union = power.clone();
            for _ in 0..n * n {
                power = power.compose(&r);
                union = union.union(&power);
            }
            prop_assert_eq!(&s, &union);
            prop_assert_eq!(s.compose(&r).union(&Relation::identity(n)), s);
        }
    }

    #[test]
    fn converse_of_terms_is_pointwise(seed in any::<u64>(), size in 1usize..=6) {
        let t = random_general(&mut rng(seed), &AB, size);
        let conv = converse_normal_form(&GeneralTerm::Conv(Box::new(t.clone())));
        let plain = converse_normal_form(&t);
        for m in small_structures(seed, 9) {
            prop_assert_eq!(eval(&m, &conv).unwrap(), eval(&m, &plain).unwrap().converse());
        }
    }

    #[test]
    fn atom_and_complement_partition_pairs(seed in any::<u64>()) {
        for m in small_structures(seed, 6) {
            for a in AB {
                let (p, q) = (eval(&m, &Term::var(a)).unwrap(), eval(&m, &Term::neg_var(a)).unwrap());
                prop_assert!(p.inter(&q).is_empty());
                prop_assert_eq!(p.union(&q), Relation::full(m.n()));
                prop_assert_eq!(
                    eval(&m, &Term::conv_var(a)).unwrap(),
                    p.converse()
                );
            }
        }
    }
}

// ---------------------------------------------------------------------------
// graphs

proptest! {
    #![proptest_config(config(100))]

    #[test]
    fn graphs_denote_the_term(seed in any::<u64>(), size in 1usize..=6) {
        let s = sigma(&AB);
        let t = random_term(&mut rng(seed), &AB, size, TermShape::STARFREE);
        let gs = glang_starfree(&t, &s).unwrap();
        for m in small_structures(seed, 6) {
            let n = m.n();
            let u = union_mats(n, gs.iter().map(|g| graph_denotes(g, &m)));
            prop_assert_eq!(u, relation_mat(&eval(&m, &t).unwrap(), n), "{}", t);
        }
    }

    #[test]
    fn star_graph_union_is_monotone_and_sound(seed in any::<u64>(), size in 2usize..=5) {
        let s = sigma(&AB);
        let t = random_term(&mut rng(seed), &AB, size, TermShape::ALL);
        let (g2, g4) = (glang(&t, &s, 2).unwrap(), glang(&t, &s, 4).unwrap());
        for m in small_structures(seed, 4) {
            let n = m.n();
            let u2 = union_mats(n, g2.iter().map(|g| graph_denotes(g, &m)));
            let u4 = union_mats(n, g4.iter().map(|g| graph_denotes(g, &m)));
            prop_assert!(is_submat(&u2, &u4));
            prop_assert!(is_submat(&u4, &relation_mat(&eval(&m, &t).unwrap(), n)));
        }
    }

    #[test]
    fn saturations_extend_edges(seed in any::<u64>(), n in 1usize..=3) {
        let s = sigma(&AB);
        let g = random_graph(&mut rng(seed), &s, n, 0.15);
        for h in saturations(&g) {
            prop_assert_eq!(h.n(), g.n());
            prop_assert!(h.is_edge_extension_of(&g));
        }
        for q in qs(&g) {
            let p = structure_of(&q).unwrap();
            prop_assert!(p.source < p.structure.n() && p.target < p.structure.n());
            for r in p.structure.relations() {
                prop_assert_eq!(r.n(), p.structure.n());
            }
        }
    }

    #[test]
    fn saturation_preserves_denotation(seed in any::<u64>(), n in 1usize..=3) {
        let s = sigma(&AB);
        let g = random_graph(&mut rng(seed), &s, n, 0.15);
        prop_assume!(is_consistent(&g));
        let quotients = qs(&g);
        for m in small_structures(seed, 6) {
            let k = m.n();
            let u = union_mats(k, quotients.iter().map(|q| graph_denotes(q, &m)));
            prop_assert_eq!(u, graph_denotes(&g, &m));
        }
    }

    #[test]
    fn homomorphisms_compose(seed in any::<u64>()) {
        let s = sigma(&AB);
        let mut r = rng(seed);
        let g1 = random_graph(&mut r, &s, 3, 0.1);
        let g2 = random_graph(&mut r, &s, 3, 0.6);
        let g3 = random_graph(&mut r, &s, 2, 0.8);
        if let (Some(h1), Some(h2)) = (homomorphism_exists(&g1, &g2), homomorphism_exists(&g2, &g3)) {
            prop_assert!(is_homomorphism(&h1, &g1, &g2));
            let h: Vec<usize> = h1.iter().map(|&v| h2[v]).collect();
            prop_assert!(is_homomorphism(&h, &g1, &g3));
        }
    }

    #[test]
    fn quotiented_saturations_are_small(seed in any::<u64>(), size in 1usize..=6) {
        let s = sigma(&AB);
        let t = random_term(&mut rng(seed), &AB, size, TermShape::STARFREE);
        for g in glang_starfree(&t, &s).unwrap() {
            for q in qs(&g) {
                prop_assert!(q.n() <= 1 + t.size(), "{} has a {}-vertex member", t, q.n());
            }
        }
    }
}

#[test]
fn quotient_of_saturation_is_a_structure() {
    let s = sigma(&AB);
    let mut g = Graph::new(&s, 2, 0, 1);
    g.add_edge(Label::Id, 0, 1);
    for h in saturations(&g) {
        assert_eq!(quotient(&h).n(), 1);
    }
}

// ---------------------------------------------------------------------------
// nfa

proptest! {
    #![proptest_config(config(150))]

    #[test]
    fn thompson_preserves_semantics(seed in any::<u64>(), size in 1usize..=6) {
        let s = sigma(&AB);
        let t = random_term(&mut rng(seed), &AB, size, TermShape::INTER_FREE);
        let a = thompson(&t, &s).unwrap();
        for m in small_structures(seed, 6) {
            prop_assert_eq!(eval_nfa(&m, &a, usize::MAX), eval(&m, &t).unwrap(), "{}", t);
        }
    }

    #[test]
    fn delta_word_matches_composite_definition(seed in any::<u64>()) {
        let s = sigma(&AB);
        let mut r = rng(seed);
        let a = random_nfa(&mut r, &s, 4, 0.12);
        let letters: Vec<SignedLetter> = SignedLetter::word_letters(2).collect();
        for w in words(&letters, 3) {
            for start in 0..4 {
                let got: Vec<usize> = a.delta_word(StateSet::singleton(start), &w).iter().collect();
                let want: Vec<usize> = delta_word_oracle(&a, &[start], &w).into_iter().collect();
                prop_assert_eq!(got, want);
            }
        }
    }

    #[test]
    fn thompson_accepts_the_regular_language(seed in any::<u64>(), size in 1usize..=6) {
        let s = sigma(&AB);
        let t = random_term(&mut rng(seed), &AB, size, TermShape::INTER_FREE);
        let a = thompson(&t, &s).unwrap();
        let letters: Vec<SignedLetter> = SignedLetter::word_letters(2).collect();
        for w in words(&letters, 3) {
            prop_assert_eq!(a.accepts(&w), regex_matches(&t, &w, &s), "{}", t);
        }
    }
}

#[test]
fn delta_word_matches_on_long_words() {
    let s = sigma(&AB);
    let mut r = rng(41);
    let letters: Vec<SignedLetter> = SignedLetter::word_letters(2).collect();
    let all = words(&letters, 5);
    for _ in 0..4 {
        let a = random_nfa(&mut r, &s, 4, 0.12);
        for w in &all {
            let got: Vec<usize> = a.delta_word(StateSet::singleton(0), w).iter().collect();
            let want: Vec<usize> = delta_word_oracle(&a, &[0], w).into_iter().collect();
            assert_eq!(got, want);
        }
    }
}

// ---------------------------------------------------------------------------
// satpath

fn check_witness(a1: &ecor::nfa::Nfa, a2: &ecor::nfa::Nfa, search: &PathSearch) -> Result<(), TestCaseError> {
    if let PathSearch::Found(p) = search {
        let s = a1.sigma();
        let h = saturate_from_path(p, a2).unwrap();
        let ps = structure_of(&quotient(&h)).unwrap();
        let (m, x, y) = (&ps.structure, ps.source, ps.target);
        prop_assert!(pointed_holds(m, x, y, &word_term(&p.word, s)));
        prop_assert!(!eval_nfa(m, a2, usize::MAX).contains(x, y));
        prop_assert!(a1.accepts(&p.word));
        prop_assert!(matches!(as_accepts(a2, &p.word), Ok(Some(_))));
    }
    Ok(())
}

proptest! {
    #![proptest_config(config(60))]

    #[test]
    fn witnesses_refute_the_inclusion(seed in any::<u64>(), ls in 1usize..=4, rs in 1usize..=4) {
        let s = sigma(&AB);
        let mut r = rng(seed);
        let lhs = random_term(&mut r, &AB, ls, TermShape::INTER_FREE);
        let rhs = random_term(&mut r, &AB, rs, TermShape::INTER_FREE);
        let (a1, a2) = (thompson(&lhs, &s).unwrap(), thompson(&rhs, &s).unwrap());
        let full = full_exka_search(&a1, &a2, 4, 200_000).unwrap();
        check_witness(&a1, &a2, &full)?;
        if let Ok(fragment) = fragment_emptiness(&a1, &a2, 200_000) {
            check_witness(&a1, &a2, &fragment)?;
        }
    }

    #[test]
    fn pairwise_and_pointwise_agree(seed in any::<u64>(), states in 1usize..=3, len in 1usize..=3) {
        let s = sigma(&AB);
        let mut r = rng(seed);
        let a = random_nfa(&mut r, &s, states, 0.25);
        let full = (1u128 << states) - 1;
        let us: Vec<StateSet> = (0..len).map(|_| StateSet(r.gen::<u128>() & full)).collect();
        prop_assert_eq!(pairwise_psat(&a, &us), pointwise_psat(&a, &us));
    }

    #[test]
    fn accepted_state_sets_are_compatible(seed in any::<u64>(), size in 1usize..=5) {
        let s = sigma(&AB);
        let mut r = rng(seed);
        let t = random_term(&mut r, &AB, size, TermShape::INTER_FREE);
        let a = thompson(&t, &s).unwrap();
        let letters: Vec<SignedLetter> = SignedLetter::word_letters(2).collect();
        for w in words(&letters, 2) {
            if let Some(us) = as_accepts(&a, &w).unwrap() {
                prop_assert!(pairwise_psat(&a, &us));
                let distinct: HashSet<StateSet> = us.iter().copied().collect();
                prop_assert!(distinct.len() as u128 <= 1u128 << a.n_states().min(127));
            }
        }
    }
}

// ---------------------------------------------------------------------------
// decide

proptest! {
    #![proptest_config(config(80))]

    #[test]
    fn star_free_procedures_agree(seed in any::<u64>(), ls in 1usize..=4, rs in 1usize..=4) {
        let s = sigma(&AB);
        let mut r = rng(seed);
        let lhs = random_term(&mut r, &AB, ls, TermShape::STARFREE);
        let rhs = random_term(&mut r, &AB, rs, TermShape::STARFREE);
        let q = Query::le(lhs, rhs).with_sigma(s).unwrap();
        prop_assert_eq!(
            decide_starfree(&q).unwrap().is_valid(),
            graph_characterization_check(&q).unwrap().is_valid()
        );
    }

    #[test]
    fn decide_is_sound_against_the_oracle(seed in any::<u64>(), ls in 1usize..=4, rs in 1usize..=4) {
        let s = sigma(&AB);
        let mut r = rng(seed);
        let lhs = random_term(&mut r, &AB, ls, TermShape::ALL);
        let rhs = random_term(&mut r, &AB, rs, TermShape::ALL);
        let q = Query::le(lhs.clone(), rhs.clone()).with_sigma(s.clone()).unwrap();
        match decide(&q).unwrap() {
            Verdict::Valid => prop_assert!(brute_force_refute_in(&s, &lhs, &rhs, 3, false).is_none()),
            Verdict::Refuted { counterexample: p, .. } => {
                prop_assert!(p.holds(&lhs).unwrap() && !p.holds(&rhs).unwrap());
            }
            Verdict::Unknown { .. } => {}
        }
    }

    #[test]
    fn equations_are_two_inclusions(seed in any::<u64>(), ls in 1usize..=4, rs in 1usize..=4) {
        let s = sigma(&AB);
        let mut r = rng(seed);
        let lhs = random_term(&mut r, &AB, ls, TermShape::STARFREE);
        let rhs = random_term(&mut r, &AB, rs, TermShape::STARFREE);
        let v = |q: Query| decide(&q.with_sigma(s.clone()).unwrap()).unwrap().is_valid();
        let eq = v(Query::eq(lhs.clone(), rhs.clone()));
        prop_assert_eq!(eq, v(Query::le(lhs.clone(), rhs.clone())) && v(Query::le(rhs, lhs)));
    }
}

// ---------------------------------------------------------------------------
// cfg

proptest! {
    #![proptest_config(config(60))]

    #[test]
    fn derivability_matches_cyk(seed in any::<u64>()) {
        let c = random_cfg(&mut rng(seed), 4);
        let cnf = Cnf::from_cfg(&c);
        for w in terminal_words(c.terminals(), 4) {
            prop_assert_eq!(derives(&c, c.start(), &w).unwrap(), cnf.accepts(&w), "{} on {:?}", c, w);
        }
    }

    #[test]
    fn counterexamples_are_coherent(seed in any::<u64>()) {
        let c = random_cfg(&mut rng(seed), 3);
        prop_assume!(!c.terminals().is_empty());
        let q = reduce_universality(&c).unwrap();
        let terminals = c.terminals().to_vec();
        for w in terminal_words(&terminals, 3) {
            let (p, bad) = counterexample_from_word(&c, &w).unwrap();
            prop_assert_eq!(bad, !derives(&c, c.start(), &w).unwrap());
            let violated = p.holds(&q.lhs).unwrap() && !p.holds(&q.rhs).unwrap();
            prop_assert_eq!(violated, bad, "{} on {:?}", c, w);
        }
    }

    #[test]
    fn canonical_model_is_a_fixpoint(seed in any::<u64>()) {
        let c = random_cfg(&mut rng(seed), 4);
        for w in terminal_words(c.terminals(), 3) {
            let p = canonical_model(&c, &w).unwrap();
            let m = &p.structure;
            for rule in c.rules() {
                let body = eval(m, &c.body_term(&rule.body)).unwrap();
                let head = m.relation(&c.atom_of(&rule.head)).unwrap();
                prop_assert!(body.is_subset(head), "rule {} is not closed", rule.head);
            }
        }
    }
}
