mod common;

use common::{lia_conjunction, rng, FormulaGen, Th};
use proptest::prelude::*;
use rand::seq::SliceRandom;
use rq_core::rq::{classify_program, desugar, resolve_sorts, FragmentVerdict};
use rq_core::solver::{solve, Options};
use rq_core::syntax::{parse_formula, parse_program};
use rq_core::terms::{Constraint, Formula};
use rq_core::theory::{LiaTheory, Theory, TheoryVerdict};

const FRAGMENTS: [FragmentVerdict; 4] = [
    FragmentVerdict::PhiForall,
    FragmentVerdict::PhiExists,
    FragmentVerdict::PhiExistsForall,
    FragmentVerdict::PhiForallExists,
];

/// The verdict of `src`, or `None` when it falls outside the decidable
/// fragments or runs out of steps.
fn verdict(src: &str, th: Th) -> Option<&'static str> {
    let program = parse_program(&format!("{src}.")).unwrap_or_else(|e| panic!("{src}: {e}"));
    let report = classify_program(&program, false).unwrap_or_else(|e| panic!("{src}: {e}"));
    if !report.verdict.is_decidable() {
        return None;
    }
    let opts = Options {
        max_steps: Some(200_000),
        ..Options::with_theory(th.theory())
    };
    let label = solve(&program, &opts, None).unwrap_or_else(|e| panic!("{src}: {e}")).verdict.label();
    (label != "unknown").then_some(label)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn parser_is_total(src in "[a-zA-Z0-9_ (){}\\[\\],./|:&<>=+*-]{0,40}") {
        let _ = parse_formula(&src);
        let _ = parse_program(&src);
    }

    #[test]
    fn lia_verdict_ignores_literal_order(seed in any::<u64>()) {
        let mut r = rng(seed);
        let src = lia_conjunction(&mut r);
        let f = parse_formula(&src).unwrap();
        let core = desugar(&f, &resolve_sorts(&f).unwrap(), &LiaTheory).unwrap();
        let mut lits: Vec<_> = core
            .conjuncts()
            .into_iter()
            .map(|c| match c {
                Formula::Atom(Constraint::Theory(l)) => l.clone(),
                other => panic!("not a literal: {other}"),
            })
            .collect();
        let before = matches!(LiaTheory.sat(&lits).unwrap(), TheoryVerdict::Sat(_));
        lits.shuffle(&mut r);
        let after = matches!(LiaTheory.sat(&lits).unwrap(), TheoryVerdict::Sat(_));
        prop_assert_eq!(before, after, "{}", src);
    }

    #[test]
    fn repeating_a_formula_keeps_its_verdict(seed in any::<u64>(), k in 0usize..4, lia in any::<bool>()) {
        let th = if lia { Th::Lia } else { Th::Eq };
        let src = FormulaGen::new(seed, th).formula(FRAGMENTS[k]);
        let (once, twice) = (verdict(&src, th), verdict(&format!("{src} & ({src})"), th));
        prop_assume!(once.is_some() && twice.is_some());
        prop_assert_eq!(once, twice, "{}", src);
    }

    #[test]
    fn false_disjunct_is_neutral(seed in any::<u64>(), k in 0usize..4) {
        let src = FormulaGen::new(seed, Th::Eq).formula(FRAGMENTS[k]);
        let (plain, padded) = (verdict(&src, Th::Eq), verdict(&format!("({src}) or false"), Th::Eq));
        prop_assume!(plain.is_some() && padded.is_some());
        prop_assert_eq!(plain, padded, "{}", src);
    }
}
