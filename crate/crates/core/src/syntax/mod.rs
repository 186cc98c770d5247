//! Concrete syntax: `{log}`-style programs made of predicate definitions and
//! one query.
//!
//! ```
//! use rq_core::syntax::{parse_program, print_program};
//! let p = parse_program("inv(U,A) :- foreach([X in U, Y in A], X neq Y). inv(S,T).").unwrap();
//! assert_eq!(parse_program(&print_program(&p)).unwrap(), p);
//! ```

mod ast;
mod lexer;
mod parser;
mod printer;

pub use ast::*;
pub use parser::{parse_formula, parse_program, parse_term};
pub use printer::print_program;

use std::fmt;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub struct ParseError {
    pub line: u32,
    pub col: u32,
    pub message: String,
}

impl ParseError {
    pub fn at(span: Span, message: impl Into<String>) -> Self {
        ParseError {
            line: span.line,
            col: span.col,
            message: message.into(),
        }
    }
}

impl fmt::Display for ParseError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}: {}", self.line, self.col, self.message)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rt(src: &str) {
        let p = parse_program(src).unwrap_or_else(|e| panic!("{src}: {e}"));
        let printed = print_program(&p);
        let again = parse_program(&printed).unwrap_or_else(|e| panic!("{printed}: {e}"));
        assert_eq!(p, again, "{printed}");
    }

    #[test]
    fn usr_update() {
        let f = parse_formula("Usr_ = {X / Usr} & Adm_ = Adm").unwrap();
        assert_eq!(
            f,
            SFormula::and(
                SFormula::rel(
                    Rel::Eq,
                    STerm::var("Usr_"),
                    STerm::Set(vec![STerm::var("X")], Some(Box::new(STerm::var("Usr"))))
                ),
                SFormula::rel(Rel::Eq, STerm::var("Adm_"), STerm::var("Adm")),
            )
        );
    }

    #[test]
    fn multi_binder() {
        let f = parse_formula("foreach([U in Usr, A in Adm], U neq A)").unwrap();
        let SFormula::Quant(q) = f else { panic!() };
        assert!(q.bracketed);
        assert_eq!(q.binders.len(), 2);
        assert_eq!(q.binders[1], (SCtrl::var("A"), STerm::var("Adm")));
    }

    #[test]
    fn pair_control() {
        let f = parse_formula("foreach([X,Y] in R, X = Y)").unwrap();
        let SFormula::Quant(q) = f else { panic!() };
        assert!(!q.bracketed);
        assert_eq!(
            q.binders[0].0,
            SCtrl::Pair(Box::new(SCtrl::var("X")), Box::new(SCtrl::var("Y")))
        );
    }

    #[test]
    fn extended_quantifier() {
        let f = parse_formula("foreach([X,Y] in R, [N], Z < N, sum(X,Y,N))").unwrap();
        let SFormula::Quant(q) = &f else { panic!() };
        let (locals, fp) = q.ext.as_ref().unwrap();
        assert_eq!(locals, &vec!["N".to_string()]);
        assert!(matches!(**fp, SFormula::Call(ref n, _, _) if n == "sum"));
        assert_eq!(f.to_string(), "foreach([X,Y] in R, [N], Z < N, sum(X,Y,N))");
    }

    #[test]
    fn empty_set_prints_as_braces() {
        assert_eq!(parse_term("{}").unwrap().to_string(), "{}");
    }

    #[test]
    fn precedence() {
        let f = parse_formula("a = b & c = d or e = f implies g = h").unwrap();
        assert!(matches!(f, SFormula::Implies(..)));
        let SFormula::Implies(l, _) = &f else { panic!() };
        assert!(matches!(**l, SFormula::Or(..)));
        assert_eq!(f.to_string(), "a = b & c = d or e = f implies g = h");
        let g = SFormula::and(
            SFormula::or(SFormula::True, SFormula::False),
            SFormula::True,
        );
        assert_eq!(g.to_string(), "(true or false) & true");
        assert_eq!(parse_formula(&g.to_string()).unwrap(), g);
    }

    #[test]
    fn arithmetic_and_parens() {
        rt("X + 1 = Y * 2 - -3.");
        rt("(X + 1) = Y.");
        rt("(X = 1 or Y = 2) & X in {1,2}.");
        let f = parse_formula("X = 2 * Y + 1").unwrap();
        assert_eq!(f.to_string(), "X = ((2 * Y) + 1)");
    }

    #[test]
    fn round_trips() {
        rt("inv(Usr,Adm) :- foreach([U in Usr,A in Adm], U neq A).\n\
            add(Usr,Adm,X,Usr_,Adm_) :- Usr_ = {X / Usr} & Adm_ = Adm.\n\
            neg(inv(Usr,Adm) & add(Usr,Adm,X,Usr_,Adm_) implies inv(Usr_,Adm_)).");
        rt("subset({M,Y / S}, {X : {M,Y / S} | M =< X}) & Y < M.");
        rt("exists(X in {a / A}, foreach(Y in B, [X,Y] nin R)).");
        rt("{1} = {1,1}.");
        rt("true.");
    }

    #[test]
    fn errors_carry_positions() {
        let e = parse_program("X in {1,2} &\n  Y =").unwrap_err();
        assert_eq!(e.line, 2);
        let e = parse_program("p(X) :- q(X). q(X) :- p(X). p(1).").unwrap_err();
        assert!(e.message.contains("p -> q -> p"), "{e}");
        let e = parse_program("subset(A, B).").unwrap_err();
        assert!(e.message.contains("intensional"));
        let e = parse_program("subset(A, {X : B | X = 1}).").unwrap_err();
        assert!(e.message.contains("domain"));
        assert!(parse_program("foreach([X,X] in R, true).").is_err());
        assert!(parse_program("X = _N1.").is_err());
    }

    #[test]
    fn deep_nesting_is_rejected_not_crashing() {
        let src = format!("{}X = 1{}", "(".repeat(5000), ")".repeat(5000));
        assert!(parse_program(&src).is_err());
    }
}
