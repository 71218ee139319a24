//! Canonical forms for logical-form comparison.
//!
//! Two forms count as exact matches when their canonical trees are equal.
//! Canonicalization sorts AND operands by printed form, eliminates double
//! reversal, and pushes R through binary JOINs down to relation atoms.
//! It deliberately does not know about relation inverses (`r` vs the
//! reverse of some other relation); that equivalence would need an
//! inverse table the schema does not carry.

use super::ast::SExpr;

/// Rewrite `expr` into its canonical form.
pub fn canonicalize(expr: &SExpr) -> SExpr {
    match expr {
        SExpr::Entity(_) | SExpr::Class(_) | SExpr::Relation(_) | SExpr::Literal(_) | SExpr::Ref(_) => {
            expr.clone()
        }
        SExpr::Reverse(b) => reverse_canonical(canonicalize(b)),
        SExpr::And(a, b) => {
            let ca = canonicalize(a);
            let cb = canonicalize(b);
            if ca.to_string() <= cb.to_string() {
                SExpr::and(ca, cb)
            } else {
                SExpr::and(cb, ca)
            }
        }
        SExpr::Count(a) => SExpr::count(canonicalize(a)),
        SExpr::Join(a, b) => SExpr::join(canonicalize(a), canonicalize(b)),
        SExpr::ArgMax(a, b) => SExpr::ArgMax(Box::new(canonicalize(a)), Box::new(canonicalize(b))),
        SExpr::ArgMin(a, b) => SExpr::ArgMin(Box::new(canonicalize(a)), Box::new(canonicalize(b))),
        SExpr::Compare(op, a, b) => {
            SExpr::Compare(*op, Box::new(canonicalize(a)), Box::new(canonicalize(b)))
        }
    }
}

// Reversal of an already-canonical binary expression:
//   (R (R b))        -> b
//   (R (JOIN b1 b2)) -> (JOIN (R b2) (R b1))
fn reverse_canonical(binary: SExpr) -> SExpr {
    match binary {
        SExpr::Reverse(inner) => *inner,
        SExpr::Join(b1, b2) => SExpr::join(reverse_canonical(*b2), reverse_canonical(*b1)),
        other => SExpr::reverse(other),
    }
}

/// Semantic equivalence of two ref-free forms under canonicalization.
pub fn semantic_equal(a: &SExpr, b: &SExpr) -> bool {
    canonicalize(a) == canonicalize(b)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sexpr::parse_sexpr;

    fn eq(a: &str, b: &str) -> bool {
        semantic_equal(&parse_sexpr(a).unwrap(), &parse_sexpr(b).unwrap())
    }

    #[test]
    fn and_is_commutative() {
        assert!(eq("(AND m.1 m.2)", "(AND m.2 m.1)"));
        assert!(eq(
            "(AND (JOIN a.b.c m.1) (LT x.y.z 5^^http://www.w3.org/2001/XMLSchema#integer))",
            "(AND (LT x.y.z 5^^http://www.w3.org/2001/XMLSchema#integer) (JOIN a.b.c m.1))",
        ));
    }

    #[test]
    fn double_reversal_is_identity() {
        assert!(eq("(JOIN (R (R a.b.c)) m.1)", "(JOIN a.b.c m.1)"));
    }

    #[test]
    fn reverse_distributes_over_join() {
        assert!(eq("(R (JOIN a.b.c d.e.f))", "(JOIN (R d.e.f) (R a.b.c))"));
    }

    #[test]
    fn distinct_relations_differ() {
        assert!(!eq("(JOIN a.b.c m.1)", "(JOIN a.b.x m.1)"));
    }

    #[test]
    fn nested_and_sorting_is_stable() {
        let a = parse_sexpr("(AND (AND m.3 m.1) m.2)").unwrap();
        let c1 = canonicalize(&a);
        let c2 = canonicalize(&c1);
        assert_eq!(c1, c2);
    }
}
