//! Law-level property tests: parsing, contextual closure, strategy algebra,
//! lifted mass bookkeeping, and approximant order theory on seeded random
//! terms.

use std::collections::BTreeSet;

use asymlam::bohm::{pnf_join, pnf_leq, pnf_of};
use asymlam::generate::{enumerate_pure, generate_terms, GenConfig};
use asymlam::prob::{
    default_entry_budget, run_prob, Flavor, MultiDist, ProbRelation, ProbScheduler, ProbSystem,
};
use asymlam::qars::Qars;
use asymlam::rat::{self, one, rat};
use asymlam::reduction::{redexes, step, ContextClass, RuleKind, StepResult};
use asymlam::strategy::{internal_redexes, parallel_step, unbiased_redexes, UnbiasedSpec};
use asymlam::{parse_term, Signature, Term};

use proptest::prelude::*;

fn term_from_seed(seed: u64, sig: Signature, max_size: usize) -> Term {
    generate_terms(&GenConfig::new(max_size, 1, seed, sig))
        .pop()
        .expect("generator yields at least one term")
}

fn descriptions(rs: &[asymlam::reduction::Redex]) -> BTreeSet<String> {
    rs.iter().map(|r| r.describe()).collect()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(96))]

    // ----- printing and parsing -------------------------------------------

    #[test]
    fn printed_terms_reparse_to_the_same_term(seed in any::<u64>(), which in 0usize..4) {
        let sig = match which {
            0 => Signature::pure(),
            1 => Signature::prob(),
            2 => Signature::payoff(),
            _ => Signature::output("01"),
        };
        let t = term_from_seed(seed, sig.clone(), 12);
        let printed = t.to_string();
        let back = parse_term(&printed, &sig).expect("printer output parses");
        prop_assert_eq!(&back, &t, "printed as {}", printed);
    }

    #[test]
    fn generated_terms_are_locally_closed(seed in any::<u64>()) {
        let t = term_from_seed(seed, Signature::prob(), 12);
        prop_assert!(t.locally_closed_at(0));
    }

    #[test]
    fn rationals_roundtrip_as_fraction_strings(n in 0i64..=1_000_000, d in 1i64..=1_000_000) {
        let q = rat(n, d);
        prop_assert_eq!(rat::parse(&rat::render(&q)), Some(q));
    }

    // ----- contextual closure ---------------------------------------------

    #[test]
    fn redex_sets_respect_context_class_inclusions(seed in any::<u64>()) {
        let t = term_from_seed(seed, Signature::prob(), 12);
        for rule in [RuleKind::Beta, RuleKind::BetaV, RuleKind::Oplus] {
            let full = descriptions(&redexes(&t, rule, ContextClass::Full));
            let weak = descriptions(&redexes(&t, rule, ContextClass::Weak));
            let head = descriptions(&redexes(&t, rule, ContextClass::Head));
            let left = descriptions(&redexes(&t, rule, ContextClass::Left));
            let right = descriptions(&redexes(&t, rule, ContextClass::Right));
            prop_assert!(weak.is_subset(&full));
            prop_assert!(head.is_subset(&full));
            prop_assert!(left.is_subset(&weak));
            prop_assert!(right.is_subset(&weak));
        }
    }

    #[test]
    fn redexes_come_out_in_leftmost_outermost_order(seed in any::<u64>()) {
        let t = term_from_seed(seed, Signature::prob(), 12);
        let rs = redexes(&t, RuleKind::BetaV, ContextClass::Full);
        prop_assert!(rs.windows(2).all(|w| w[0].pos < w[1].pos));
    }

    #[test]
    fn non_root_steps_preserve_the_root_shape(seed in any::<u64>()) {
        let t = term_from_seed(seed, Signature::prob(), 12);
        for r in redexes(&t, RuleKind::BetaV, ContextClass::Full) {
            if !r.pos.is_root() {
                prop_assert!(asymlam::reduction::shape_preserved(&t, &r).unwrap());
            }
        }
    }

    #[test]
    fn choice_steps_split_into_two_half_branches(seed in any::<u64>()) {
        let t = term_from_seed(seed, Signature::prob(), 12);
        for r in redexes(&t, RuleKind::Oplus, ContextClass::Full) {
            match step(&t, &r).unwrap() {
                StepResult::Split(branches) => {
                    prop_assert_eq!(branches.len(), 2);
                    let total: asymlam::Rat = branches.iter().map(|(w, _)| w.clone()).sum();
                    prop_assert_eq!(total, one());
                }
                other => prop_assert!(false, "choice produced {:?}", other),
            }
        }
    }

    // ----- strategy algebra -------------------------------------------------

    #[test]
    fn unbiased_and_internal_partition_the_full_redexes(seed in any::<u64>()) {
        let t = term_from_seed(seed, Signature::pure(), 12);
        for spec in [UnbiasedSpec::cbn(), UnbiasedSpec::cbv()] {
            let full = descriptions(&redexes(&t, spec.rule, ContextClass::Full));
            let strat = descriptions(&unbiased_redexes(&t, &spec));
            let internal = descriptions(&internal_redexes(&t, &spec));
            prop_assert!(strat.is_subset(&full));
            prop_assert!(internal.is_disjoint(&strat));
            let union: BTreeSet<String> = strat.union(&internal).cloned().collect();
            prop_assert_eq!(union, full.clone());
            // the strategy runs dry exactly on normal forms
            prop_assert_eq!(strat.is_empty(), full.is_empty());
        }
    }

    #[test]
    fn development_is_stationary_exactly_on_normal_forms(seed in any::<u64>()) {
        let t = term_from_seed(seed, Signature::pure(), 12);
        let spec = UnbiasedSpec::cbn();
        let (u, fired) = parallel_step(&t, &spec).unwrap();
        let is_nf = redexes(&t, RuleKind::Beta, ContextClass::Full).is_empty();
        prop_assert_eq!(fired.is_empty(), is_nf);
        if is_nf {
            prop_assert_eq!(u, t);
        }
    }

    // ----- approximant order theory -----------------------------------------

    #[test]
    fn approximants_grow_along_every_beta_step(seed in any::<u64>()) {
        let t = term_from_seed(seed, Signature::pure(), 12);
        let before = pnf_of(&t);
        for r in redexes(&t, RuleKind::Beta, ContextClass::Full) {
            let u = step(&t, &r).unwrap().into_one();
            let after = pnf_of(&u);
            prop_assert!(
                pnf_leq(&before, &after),
                "{} -> {} dropped {} to {}", t, u, before, after
            );
        }
    }

    #[test]
    fn approximant_order_is_a_partial_order_with_joins(a_seed in any::<u64>(), b_seed in any::<u64>()) {
        let a = pnf_of(&term_from_seed(a_seed, Signature::pure(), 10));
        let b = pnf_of(&term_from_seed(b_seed, Signature::pure(), 10));
        prop_assert!(pnf_leq(&a, &a));
        if pnf_leq(&a, &b) && pnf_leq(&b, &a) {
            prop_assert_eq!(&a, &b);
        }
        if let Some(j) = pnf_join(&a, &b) {
            prop_assert!(pnf_leq(&a, &j));
            prop_assert!(pnf_leq(&b, &j));
        }
        if pnf_leq(&a, &b) {
            prop_assert_eq!(pnf_join(&a, &b), Some(b));
        }
    }

    // ----- lifted probabilistic steps ---------------------------------------

    #[test]
    fn every_lifted_successor_conserves_mass(seed in any::<u64>(), which in 0usize..5) {
        let relation = [
            ProbRelation::Big,
            ProbRelation::Eval,
            ProbRelation::EvalFull,
            ProbRelation::SurfaceFull,
            ProbRelation::Internal,
        ][which];
        let m = MultiDist::singleton(term_from_seed(seed, Signature::prob(), 10));
        let sys = ProbSystem::enumerating(Flavor::Cbv, relation);
        for u in sys.successors(&m).unwrap() {
            prop_assert_eq!(u.mass(), m.mass());
        }
    }

    #[test]
    fn scheduled_runs_have_monotone_mass_on_normal_forms(seed in any::<u64>(), flavor_ix in 0usize..2) {
        let flavor = [Flavor::Cbv, Flavor::Cbn][flavor_ix];
        let m = MultiDist::singleton(term_from_seed(seed, Signature::prob(), 8));
        let trace = run_prob(
            &m,
            flavor,
            ProbRelation::EvalFull,
            ProbScheduler::Leftmost,
            6,
            default_entry_budget(),
        )
        .unwrap();
        let masses: Vec<asymlam::Rat> =
            trace.states.iter().map(|s| asymlam::prob::norm_mass(s, flavor)).collect();
        prop_assert!(masses.windows(2).all(|w| w[0] <= w[1]), "{:?}", masses);
        for s in &trace.states {
            prop_assert_eq!(s.mass(), one());
        }
    }

    #[test]
    fn multidistributions_ignore_entry_order(seed in any::<u64>()) {
        let a = term_from_seed(seed, Signature::prob(), 8);
        let b = term_from_seed(seed.wrapping_add(1), Signature::prob(), 8);
        let m1 = MultiDist::new(vec![(rat(1, 3), a.clone()), (rat(1, 2), b.clone())]).unwrap();
        let m2 = MultiDist::new(vec![(rat(1, 2), b), (rat(1, 3), a)]).unwrap();
        prop_assert_eq!(m1, m2);
    }

    // ----- substitution -----------------------------------------------------

    #[test]
    fn substituting_an_absent_name_is_the_identity(seed in any::<u64>(), val_seed in any::<u64>()) {
        let t = term_from_seed(seed, Signature::pure(), 10);
        let val = term_from_seed(val_seed, Signature::pure(), 6);
        if !t.free_names().contains("q") {
            prop_assert_eq!(t.subst_free("q", &val), t);
        }
    }

    #[test]
    fn substitution_eliminates_the_named_variable(seed in any::<u64>(), val_seed in any::<u64>()) {
        let t = term_from_seed(seed, Signature::pure(), 10);
        let mut cfg = GenConfig::new(6, 1, val_seed, Signature::pure());
        cfg.closed = true;
        let val = generate_terms(&cfg).pop().unwrap();
        let u = t.subst_free("a", &val);
        prop_assert!(!u.free_names().contains("a"));
    }
}

#[test]
fn enumeration_is_duplicate_free_and_size_bounded() {
    let terms = enumerate_pure(6, &["z"]);
    let mut seen = BTreeSet::new();
    for t in &terms {
        assert!(t.size() <= 6);
        assert!(t.locally_closed_at(0));
        assert!(seen.insert(t.clone()), "duplicate enumerated term {t}");
    }
    assert!(!terms.is_empty());
}
