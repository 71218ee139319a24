//! Recursive-descent parser for the logical-form text grammar.
//!
//! Grammar:
//!
//!   expr     = atom | '(' form ')'
//!   form     = 'AND' expr expr | 'COUNT' expr | 'R' expr
//!            | 'JOIN' expr expr | 'ARGMAX' expr expr | 'ARGMIN' expr expr
//!            | ('LT'|'LE'|'GT'|'GE') expr literal
//!   atom     = ref | literal | identifier
//!   ref      = 's-exp-' N [ '.' M ] | 'task' N [ 'step' M ]
//!   literal  = lexical '^^' datatype-iri
//!
//! Bare identifiers are classified by position: identifiers in binary
//! positions (under R, the left arm of JOIN, the right arm of a superlative,
//! the left arm of a comparative) are relations; identifiers in set positions
//! are entities when they look like machine ids (`m.`/`g.`) and classes
//! otherwise.

use super::ast::{is_entity_id, CmpOp, ExprKind, Literal, RefId, SExpr};
use std::sync::OnceLock;
use thiserror::Error;

#[derive(Debug, Clone, Error, PartialEq, Eq)]
pub enum ParseError {
    #[error("syntax error at byte {position}: expected {expected}, found {found}")]
    Syntax { position: usize, expected: String, found: String },
    #[error("arity error at byte {position}: {operator} takes {expected} operand(s), found {found}")]
    Arity { position: usize, operator: String, expected: usize, found: usize },
}

#[derive(Debug, Clone, PartialEq)]
enum Token {
    LParen(usize),
    RParen(usize),
    Atom { text: String, pos: usize },
}

impl Token {
    fn pos(&self) -> usize {
        match self {
            Token::LParen(p) | Token::RParen(p) => *p,
            Token::Atom { pos, .. } => *pos,
        }
    }

    fn describe(&self) -> String {
        match self {
            Token::LParen(_) => "'('".into(),
            Token::RParen(_) => "')'".into(),
            Token::Atom { text, .. } => format!("'{text}'"),
        }
    }
}

fn tokenize(text: &str) -> Vec<Token> {
    let mut tokens = Vec::new();
    let bytes = text.as_bytes();
    let mut i = 0;
    while i < bytes.len() {
        match bytes[i] {
            b'(' => {
                tokens.push(Token::LParen(i));
                i += 1;
            }
            b')' => {
                tokens.push(Token::RParen(i));
                i += 1;
            }
            c if c.is_ascii_whitespace() => i += 1,
            _ => {
                let start = i;
                while i < bytes.len()
                    && !bytes[i].is_ascii_whitespace()
                    && bytes[i] != b'('
                    && bytes[i] != b')'
                {
                    i += 1;
                }
                tokens.push(Token::Atom { text: text[start..i].to_string(), pos: start });
            }
        }
    }
    tokens
}

fn ref_pattern() -> &'static regex::Regex {
    static RE: OnceLock<regex::Regex> = OnceLock::new();
    RE.get_or_init(|| {
        regex::Regex::new(r"^(?:s-exp-(\d+)(?:\.(\d+))?|task(\d+)(?:step(\d+))?)$").unwrap()
    })
}

/// Parse a ref surface form (`s-exp-1`, `s-exp-1.2`, `task1`, `task1step2`).
pub fn parse_ref(token: &str) -> Option<RefId> {
    let caps = ref_pattern().captures(token)?;
    let get = |i: usize| caps.get(i).map(|m| m.as_str().parse::<u32>().unwrap());
    match (get(1), get(3)) {
        (Some(task), _) => Some(RefId { task, step: get(2) }),
        (_, Some(task)) => Some(RefId { task, step: get(4) }),
        _ => None,
    }
}

/// Expected denotation of the position being parsed, used to classify atoms.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Position {
    Set,
    Binary,
}

struct Parser {
    tokens: Vec<Token>,
    cursor: usize,
    len: usize,
}

impl Parser {
    fn peek(&self) -> Option<&Token> {
        self.tokens.get(self.cursor)
    }

    fn next(&mut self) -> Option<Token> {
        let t = self.tokens.get(self.cursor).cloned();
        if t.is_some() {
            self.cursor += 1;
        }
        t
    }

    fn err_eof(&self, expected: &str) -> ParseError {
        ParseError::Syntax {
            position: self.len,
            expected: expected.into(),
            found: "end of input".into(),
        }
    }

    fn parse_expr(&mut self, position: Position) -> Result<SExpr, ParseError> {
        match self.next() {
            None => Err(self.err_eof("an expression")),
            Some(Token::RParen(p)) => Err(ParseError::Syntax {
                position: p,
                expected: "an expression".into(),
                found: "')'".into(),
            }),
            Some(Token::Atom { text, pos }) => Ok(classify_atom(&text, pos, position)?),
            Some(Token::LParen(open)) => {
                let head = match self.next() {
                    None => return Err(self.err_eof("an operator")),
                    Some(Token::Atom { text, .. }) => text,
                    Some(t) => {
                        return Err(ParseError::Syntax {
                            position: t.pos(),
                            expected: "an operator".into(),
                            found: t.describe(),
                        })
                    }
                };
                let expr = self.parse_form(&head, open, position)?;
                match self.next() {
                    Some(Token::RParen(_)) => Ok(expr),
                    Some(t) => {
                        let expected = operator_arity(&head);
                        Err(ParseError::Arity {
                            position: t.pos(),
                            operator: head,
                            expected,
                            found: expected + 1 + self.count_extra(),
                        })
                    }
                    None => Err(self.err_eof("')'")),
                }
            }
        }
    }

    // Counts remaining operands before the closing paren, for arity errors.
    fn count_extra(&mut self) -> usize {
        let mut extra = 0;
        let mut depth = 0usize;
        while let Some(tok) = self.peek() {
            match tok {
                Token::LParen(_) => depth += 1,
                Token::RParen(_) => {
                    if depth == 0 {
                        break;
                    }
                    depth -= 1;
                }
                Token::Atom { .. } => {
                    if depth == 0 {
                        extra += 1;
                    }
                }
            }
            self.cursor += 1;
        }
        extra
    }

    fn parse_form(&mut self, head: &str, open: usize, position: Position) -> Result<SExpr, ParseError> {
        match head {
            "AND" => {
                let a = self.parse_operand("AND", Position::Set)?;
                let b = self.parse_operand("AND", Position::Set)?;
                Ok(SExpr::and(a, b))
            }
            "COUNT" => {
                let a = self.parse_operand("COUNT", Position::Set)?;
                Ok(SExpr::count(a))
            }
            "R" => {
                let a = self.parse_operand("R", Position::Binary)?;
                require_pairs("R", &a, open)?;
                Ok(SExpr::reverse(a))
            }
            "JOIN" => {
                let binary = self.parse_operand("JOIN", Position::Binary)?;
                require_pairs("JOIN", &binary, open)?;
                let operand = self.parse_operand("JOIN", position)?;
                Ok(SExpr::join(binary, operand))
            }
            "ARGMAX" | "ARGMIN" => {
                let set = self.parse_operand(head, Position::Set)?;
                let binary = self.parse_operand(head, Position::Binary)?;
                require_pairs(head, &binary, open)?;
                Ok(if head == "ARGMAX" {
                    SExpr::ArgMax(Box::new(set), Box::new(binary))
                } else {
                    SExpr::ArgMin(Box::new(set), Box::new(binary))
                })
            }
            "LT" | "LE" | "GT" | "GE" => {
                let op = match head {
                    "LT" => CmpOp::Lt,
                    "LE" => CmpOp::Le,
                    "GT" => CmpOp::Gt,
                    _ => CmpOp::Ge,
                };
                let attribute = self.parse_operand(head, Position::Binary)?;
                require_pairs(head, &attribute, open)?;
                let bound_pos = self.peek().map(|t| t.pos()).unwrap_or(self.len);
                let bound = self.parse_operand(head, Position::Set)?;
                match &bound {
                    SExpr::Literal(l) if l.is_numeric() => {}
                    SExpr::Literal(l) => {
                        return Err(ParseError::Syntax {
                            position: bound_pos,
                            expected: "a numeric literal".into(),
                            found: format!("'{l}'"),
                        })
                    }
                    other => {
                        return Err(ParseError::Syntax {
                            position: bound_pos,
                            expected: "a literal with a numeric datatype".into(),
                            found: format!("'{other}'"),
                        })
                    }
                }
                Ok(SExpr::Compare(op, Box::new(attribute), Box::new(bound)))
            }
            _ => Err(ParseError::Syntax {
                position: open + 1,
                expected: "one of AND, COUNT, R, JOIN, ARGMAX, ARGMIN, LT, LE, GT, GE".into(),
                found: format!("'{head}'"),
            }),
        }
    }

    fn parse_operand(&mut self, operator: &str, position: Position) -> Result<SExpr, ParseError> {
        match self.peek() {
            Some(Token::RParen(p)) => Err(ParseError::Arity {
                position: *p,
                operator: operator.into(),
                expected: operator_arity(operator),
                found: 0,
            }),
            None => Err(self.err_eof("an operand")),
            _ => self.parse_expr(position),
        }
    }
}

fn operator_arity(operator: &str) -> usize {
    match operator {
        "COUNT" | "R" => 1,
        _ => 2,
    }
}

fn require_pairs(operator: &str, expr: &SExpr, open: usize) -> Result<(), ParseError> {
    if expr.kind() == ExprKind::Pairs {
        Ok(())
    } else {
        Err(ParseError::Syntax {
            position: open,
            expected: format!("a binary-valued operand for {operator}"),
            found: format!("'{expr}'"),
        })
    }
}

fn classify_atom(text: &str, pos: usize, position: Position) -> Result<SExpr, ParseError> {
    if let Some((lexical, datatype)) = text.split_once("^^") {
        if lexical.is_empty() || datatype.is_empty() {
            return Err(ParseError::Syntax {
                position: pos,
                expected: "lexical^^datatype".into(),
                found: format!("'{text}'"),
            });
        }
        return Ok(SExpr::Literal(Literal::new(lexical, datatype)));
    }
    if let Some(r) = parse_ref(text) {
        return Ok(SExpr::Ref(r));
    }
    Ok(match position {
        Position::Binary => {
            if is_entity_id(text) {
                return Err(ParseError::Syntax {
                    position: pos,
                    expected: "a relation name".into(),
                    found: format!("entity id '{text}'"),
                });
            }
            SExpr::Relation(text.to_string())
        }
        Position::Set => {
            if is_entity_id(text) {
                SExpr::Entity(text.to_string())
            } else {
                SExpr::Class(text.to_string())
            }
        }
    })
}

/// Parse a logical form from its text representation.
pub fn parse_sexpr(text: &str) -> Result<SExpr, ParseError> {
    let tokens = tokenize(text);
    let mut parser = Parser { tokens, cursor: 0, len: text.len() };
    let expr = parser.parse_expr(Position::Set)?;
    if let Some(t) = parser.peek() {
        return Err(ParseError::Syntax {
            position: t.pos(),
            expected: "end of input".into(),
            found: t.describe(),
        });
    }
    Ok(expr)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sexpr::print_sexpr;

    #[test]
    fn parses_join_with_reverse() {
        let e = parse_sexpr("(JOIN (R olympics.olympic_mascot.olympic_games) m.04dwjbg)").unwrap();
        assert_eq!(
            e,
            SExpr::join(
                SExpr::reverse(SExpr::relation("olympics.olympic_mascot.olympic_games")),
                SExpr::entity("m.04dwjbg"),
            )
        );
    }

    #[test]
    fn parses_single_entity_atom() {
        assert_eq!(parse_sexpr("m.017q1y").unwrap(), SExpr::entity("m.017q1y"));
    }

    #[test]
    fn parses_comparative_with_typed_literal() {
        let e = parse_sexpr(
            "(LT spaceflight.rocket_engine.dry_mass 980.0^^http://www.w3.org/2001/XMLSchema#float)",
        )
        .unwrap();
        assert_eq!(
            e,
            SExpr::compare(
                CmpOp::Lt,
                SExpr::relation("spaceflight.rocket_engine.dry_mass"),
                Literal::new("980.0", "http://www.w3.org/2001/XMLSchema#float"),
            )
        );
    }

    #[test]
    fn classifies_set_atoms_as_class_or_entity() {
        let e = parse_sexpr("(AND cvg.computer_game_compilation s-exp-1.1)").unwrap();
        assert_eq!(
            e,
            SExpr::and(
                SExpr::class("cvg.computer_game_compilation"),
                SExpr::Ref(RefId::step(1, 1)),
            )
        );
    }

    #[test]
    fn task_refs_are_accepted() {
        let e = parse_sexpr("(AND task1 task2)").unwrap();
        assert_eq!(e, SExpr::and(SExpr::Ref(RefId::task(1)), SExpr::Ref(RefId::task(2))));
        assert_eq!(print_sexpr(&e), "(AND s-exp-1 s-exp-2)");
    }

    #[test]
    fn binary_binary_join_under_superlative() {
        let e = parse_sexpr("(ARGMAX common.topic (JOIN a.b.c d.e.f))").unwrap();
        match e {
            SExpr::ArgMax(_, binary) => {
                assert_eq!(binary.kind(), ExprKind::Pairs);
                assert_eq!(
                    *binary,
                    SExpr::join(SExpr::relation("a.b.c"), SExpr::relation("d.e.f"))
                );
            }
            other => panic!("unexpected parse: {other:?}"),
        }
    }

    #[test]
    fn reports_syntax_error_position() {
        let err = parse_sexpr("(JOIN r ").unwrap_err();
        match err {
            ParseError::Syntax { position, .. } => assert_eq!(position, 8),
            other => panic!("expected syntax error, got {other:?}"),
        }
    }

    #[test]
    fn reports_arity_error_on_extra_operand() {
        let err = parse_sexpr("(COUNT m.1 m.2)").unwrap_err();
        match err {
            ParseError::Arity { operator, expected, found, .. } => {
                assert_eq!(operator, "COUNT");
                assert_eq!(expected, 1);
                assert!(found > 1);
            }
            other => panic!("expected arity error, got {other:?}"),
        }
    }

    #[test]
    fn reports_missing_operand() {
        let err = parse_sexpr("(AND m.1)").unwrap_err();
        assert!(matches!(err, ParseError::Arity { found: 0, .. }));
    }

    #[test]
    fn rejects_non_numeric_comparative_bound() {
        let err = parse_sexpr("(LT a.b.c m.017q1y)").unwrap_err();
        assert!(matches!(err, ParseError::Syntax { .. }));
        let err = parse_sexpr("(GE a.b.c abc^^http://www.w3.org/2001/XMLSchema#string)");
        assert!(err.is_err());
    }

    #[test]
    fn rejects_unknown_operator() {
        assert!(parse_sexpr("(UNION m.1 m.2)").is_err());
    }
}
