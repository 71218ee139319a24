//! A minimal SPARQL engine for the dialect produced by
//! [`super::sparql::compile_sparql`].
//!
//! This is a generic pattern matcher: it solves basic graph patterns by
//! extending variable bindings triple by triple, then applies VALUES rows,
//! scalar subqueries and filters. It shares no evaluation logic with
//! [`super::eval::evaluate`], which makes it usable as a differential
//! oracle for the compiler.

use super::eval::Denotation;
use super::graph::{KnowledgeGraph, Node};
use super::numeric::NumericValue;
use super::sparql::{NS_PREFIX, TYPE_PREDICATE, XSD_PREFIX};
use crate::sexpr::Literal;
use std::collections::BTreeMap;
use thiserror::Error;

#[derive(Debug, Clone, Error, PartialEq, Eq)]
#[error("query parse error: {0}")]
pub struct QueryParseError(pub String);

#[derive(Debug, Clone, PartialEq)]
enum Token {
    LBrace,
    RBrace,
    LParen,
    RParen,
    Dot,
    Word(String),
    Lit(Literal),
}

fn tokenize(text: &str) -> Result<Vec<Token>, QueryParseError> {
    let mut tokens = Vec::new();
    let bytes = text.as_bytes();
    let mut i = 0;
    while i < bytes.len() {
        match bytes[i] {
            b'{' => {
                tokens.push(Token::LBrace);
                i += 1;
            }
            b'}' => {
                tokens.push(Token::RBrace);
                i += 1;
            }
            b'(' => {
                tokens.push(Token::LParen);
                i += 1;
            }
            b')' => {
                tokens.push(Token::RParen);
                i += 1;
            }
            b'"' => {
                let start = i + 1;
                let mut j = start;
                while j < bytes.len() && bytes[j] != b'"' {
                    j += 1;
                }
                if j == bytes.len() {
                    return Err(QueryParseError("unterminated string literal".into()));
                }
                let lexical = text[start..j].to_string();
                i = j + 1;
                let datatype = if text[i..].starts_with("^^") {
                    i += 2;
                    let dstart = i;
                    if text[i..].starts_with('<') {
                        let close = text[i..]
                            .find('>')
                            .ok_or_else(|| QueryParseError("unterminated IRI".into()))?;
                        let iri = text[i + 1..i + close].to_string();
                        i += close + 1;
                        iri
                    } else {
                        while i < bytes.len()
                            && !bytes[i].is_ascii_whitespace()
                            && !b"(){}".contains(&bytes[i])
                        {
                            i += 1;
                        }
                        expand_prefixed(&text[dstart..i])?
                    }
                } else {
                    format!("{XSD_PREFIX}string")
                };
                tokens.push(Token::Lit(Literal::new(lexical, datatype)));
            }
            c if c.is_ascii_whitespace() => i += 1,
            _ => {
                let start = i;
                while i < bytes.len()
                    && !bytes[i].is_ascii_whitespace()
                    && !b"(){}\"".contains(&bytes[i])
                {
                    i += 1;
                }
                let word = &text[start..i];
                if word == "." {
                    tokens.push(Token::Dot);
                } else {
                    tokens.push(Token::Word(word.to_string()));
                }
            }
        }
    }
    Ok(tokens)
}

fn expand_prefixed(word: &str) -> Result<String, QueryParseError> {
    if let Some(local) = word.strip_prefix("xsd:") {
        Ok(format!("{XSD_PREFIX}{local}"))
    } else if let Some(local) = word.strip_prefix("ns:") {
        Ok(format!("{NS_PREFIX}{local}"))
    } else {
        Err(QueryParseError(format!("unknown prefix in '{word}'")))
    }
}

#[derive(Debug, Clone, PartialEq)]
enum Term {
    Var(String),
    Node(Node),
}

#[derive(Debug, Clone)]
struct TriplePattern {
    subject: Term,
    predicate: String,
    object: Term,
}

#[derive(Debug, Clone)]
struct Filter {
    var: String,
    op: String,
    rhs: Term,
}

#[derive(Debug, Clone)]
struct ValuesClause {
    var: String,
    nodes: Vec<Node>,
}

#[derive(Debug, Clone)]
enum Select {
    Distinct(String),
    CountDistinct(String),
    Agg { maximize: bool, var: String, alias: String },
}

#[derive(Debug, Clone)]
struct Group {
    patterns: Vec<TriplePattern>,
    filters: Vec<Filter>,
    values: Vec<ValuesClause>,
    subqueries: Vec<Query>,
}

#[derive(Debug, Clone)]
struct Query {
    select: Select,
    group: Group,
}

struct QueryParser {
    tokens: Vec<Token>,
    cursor: usize,
}

impl QueryParser {
    fn peek(&self) -> Option<&Token> {
        self.tokens.get(self.cursor)
    }

    fn next(&mut self) -> Result<Token, QueryParseError> {
        let t = self
            .tokens
            .get(self.cursor)
            .cloned()
            .ok_or_else(|| QueryParseError("unexpected end of query".into()))?;
        self.cursor += 1;
        Ok(t)
    }

    fn expect_word(&mut self, expected: &str) -> Result<(), QueryParseError> {
        match self.next()? {
            Token::Word(w) if w.eq_ignore_ascii_case(expected) => Ok(()),
            other => Err(QueryParseError(format!("expected '{expected}', found {other:?}"))),
        }
    }

    fn expect(&mut self, token: Token) -> Result<(), QueryParseError> {
        let t = self.next()?;
        if t == token {
            Ok(())
        } else {
            Err(QueryParseError(format!("expected {token:?}, found {t:?}")))
        }
    }

    fn word(&mut self) -> Result<String, QueryParseError> {
        match self.next()? {
            Token::Word(w) => Ok(w),
            other => Err(QueryParseError(format!("expected a word, found {other:?}"))),
        }
    }

    fn var(&mut self) -> Result<String, QueryParseError> {
        let w = self.word()?;
        if w.starts_with('?') {
            Ok(w)
        } else {
            Err(QueryParseError(format!("expected a variable, found '{w}'")))
        }
    }

    fn parse_query(&mut self) -> Result<Query, QueryParseError> {
        // Prologue.
        while matches!(self.peek(), Some(Token::Word(w)) if w.eq_ignore_ascii_case("PREFIX")) {
            self.next()?;
            self.word()?; // prefix name
            self.word()?; // <iri>
        }
        self.expect_word("SELECT")?;
        let select = match self.next()? {
            Token::Word(w) if w.eq_ignore_ascii_case("DISTINCT") => {
                Select::Distinct(self.var()?)
            }
            Token::LParen => {
                let func = self.word()?;
                match func.to_ascii_uppercase().as_str() {
                    "COUNT" => {
                        self.expect(Token::LParen)?;
                        self.expect_word("DISTINCT")?;
                        let var = self.var()?;
                        self.expect(Token::RParen)?;
                        self.expect_word("AS")?;
                        let _alias = self.var()?;
                        self.expect(Token::RParen)?;
                        Select::CountDistinct(var)
                    }
                    "MAX" | "MIN" => {
                        self.expect(Token::LParen)?;
                        let var = self.var()?;
                        self.expect(Token::RParen)?;
                        self.expect_word("AS")?;
                        let alias = self.var()?;
                        self.expect(Token::RParen)?;
                        Select::Agg { maximize: func.eq_ignore_ascii_case("MAX"), var, alias }
                    }
                    other => return Err(QueryParseError(format!("unsupported aggregate {other}"))),
                }
            }
            other => return Err(QueryParseError(format!("unsupported SELECT form: {other:?}"))),
        };
        self.expect_word("WHERE")?;
        let group = self.parse_group()?;
        Ok(Query { select, group })
    }

    fn parse_group(&mut self) -> Result<Group, QueryParseError> {
        self.expect(Token::LBrace)?;
        let mut group = Group {
            patterns: Vec::new(),
            filters: Vec::new(),
            values: Vec::new(),
            subqueries: Vec::new(),
        };
        loop {
            match self.peek() {
                Some(Token::RBrace) => {
                    self.next()?;
                    return Ok(group);
                }
                Some(Token::LBrace) => {
                    // Nested subselect.
                    self.next()?;
                    let sub = self.parse_query()?;
                    self.expect(Token::RBrace)?;
                    group.subqueries.push(sub);
                }
                Some(Token::Word(w)) if w.eq_ignore_ascii_case("FILTER") => {
                    self.next()?;
                    self.expect(Token::LParen)?;
                    let var = self.var()?;
                    let op = self.word()?;
                    let rhs = self.term()?;
                    self.expect(Token::RParen)?;
                    group.filters.push(Filter { var, op, rhs });
                }
                Some(Token::Word(w)) if w.eq_ignore_ascii_case("VALUES") => {
                    self.next()?;
                    let var = self.var()?;
                    self.expect(Token::LBrace)?;
                    let mut nodes = Vec::new();
                    while !matches!(self.peek(), Some(Token::RBrace)) {
                        match self.term()? {
                            Term::Node(n) => nodes.push(n),
                            Term::Var(v) => {
                                return Err(QueryParseError(format!(
                                    "VALUES rows must be ground, found {v}"
                                )))
                            }
                        }
                    }
                    self.expect(Token::RBrace)?;
                    group.values.push(ValuesClause { var, nodes });
                }
                Some(_) => {
                    let subject = self.term()?;
                    let predicate = match self.term()? {
                        Term::Node(Node::Entity(p)) => p,
                        other => {
                            return Err(QueryParseError(format!(
                                "predicates must be ground IRIs, found {other:?}"
                            )))
                        }
                    };
                    let object = self.term()?;
                    self.expect(Token::Dot)?;
                    group.patterns.push(TriplePattern { subject, predicate, object });
                }
                None => return Err(QueryParseError("unterminated group".into())),
            }
        }
    }

    fn term(&mut self) -> Result<Term, QueryParseError> {
        match self.next()? {
            Token::Word(w) if w.starts_with('?') => Ok(Term::Var(w)),
            Token::Word(w) if w.starts_with("ns:") => {
                Ok(Term::Node(Node::Entity(w["ns:".len()..].to_string())))
            }
            Token::Lit(l) => Ok(Term::Node(Node::Literal(l))),
            other => Err(QueryParseError(format!("unsupported term {other:?}"))),
        }
    }
}

type Bindings = BTreeMap<String, Node>;

fn resolve(term: &Term, row: &Bindings) -> Option<Node> {
    match term {
        Term::Node(n) => Some(n.clone()),
        Term::Var(v) => row.get(v).cloned(),
    }
}

fn unify(term: &Term, node: &Node, row: &mut Bindings) -> bool {
    match term {
        Term::Node(n) => n == node,
        Term::Var(v) => match row.get(v) {
            Some(bound) => bound == node,
            None => {
                row.insert(v.clone(), node.clone());
                true
            }
        },
    }
}

/// Candidate (subject, object) pairs for a predicate, including the virtual
/// class-membership predicate.
fn predicate_pairs(graph: &KnowledgeGraph, predicate: &str) -> Vec<(Node, Node)> {
    let mut pairs: Vec<(Node, Node)> = graph
        .pairs_of(predicate)
        .iter()
        .map(|(s, o)| (Node::entity(s.clone()), o.clone()))
        .collect();
    if predicate == TYPE_PREDICATE {
        let schema = graph.schema();
        for class in schema.class_names() {
            if let Some(instances) = schema.instances_of(class) {
                for entity in instances {
                    pairs.push((Node::entity(entity.clone()), Node::entity(class.clone())));
                }
            }
        }
    }
    pairs
}

fn numeric_of(node: &Node) -> Option<NumericValue> {
    match node {
        Node::Literal(l) => NumericValue::parse(&l.lexical),
        Node::Entity(_) => None,
    }
}

fn filter_passes(filter: &Filter, row: &Bindings) -> bool {
    let Some(lhs) = row.get(&filter.var) else { return false };
    let Some(rhs) = resolve(&filter.rhs, row) else { return false };
    match (numeric_of(lhs), numeric_of(&rhs)) {
        (Some(a), Some(b)) => match filter.op.as_str() {
            "<" => a < b,
            "<=" => a <= b,
            ">" => a > b,
            ">=" => a >= b,
            "=" => a == b,
            _ => false,
        },
        _ => filter.op == "=" && *lhs == rhs,
    }
}

fn solve_group(group: &Group, graph: &KnowledgeGraph) -> Result<Vec<Bindings>, QueryParseError> {
    let mut rows: Vec<Bindings> = vec![Bindings::new()];
    for sub in &group.subqueries {
        let sub_rows = run_query(sub, graph)?;
        let mut joined = Vec::new();
        for row in &rows {
            for sub_row in &sub_rows {
                let mut merged = row.clone();
                let compatible = sub_row.iter().all(|(var, node)| {
                    unify(&Term::Var(var.clone()), node, &mut merged)
                });
                if compatible {
                    joined.push(merged);
                }
            }
        }
        rows = joined;
    }
    for values in &group.values {
        let mut expanded = Vec::new();
        for row in &rows {
            for node in &values.nodes {
                let mut merged = row.clone();
                if unify(&Term::Var(values.var.clone()), node, &mut merged) {
                    expanded.push(merged);
                }
            }
        }
        rows = expanded;
    }
    for pattern in &group.patterns {
        let candidates = predicate_pairs(graph, &pattern.predicate);
        let mut extended = Vec::new();
        for row in &rows {
            for (s, o) in &candidates {
                let mut merged = row.clone();
                if unify(&pattern.subject, s, &mut merged)
                    && unify(&pattern.object, o, &mut merged)
                {
                    extended.push(merged);
                }
            }
        }
        rows = extended;
    }
    rows.retain(|row| group.filters.iter().all(|f| filter_passes(f, row)));
    Ok(rows)
}

// A query's result is a list of binding rows; aggregates yield one row (or
// none over an empty input, which collapses anything joined against it).
fn run_query(query: &Query, graph: &KnowledgeGraph) -> Result<Vec<Bindings>, QueryParseError> {
    let rows = solve_group(&query.group, graph)?;
    match &query.select {
        Select::Distinct(var) => {
            let mut seen = std::collections::BTreeSet::new();
            let mut out = Vec::new();
            for row in rows {
                if let Some(node) = row.get(var) {
                    if seen.insert(node.clone()) {
                        out.push(BTreeMap::from([(var.clone(), node.clone())]));
                    }
                }
            }
            Ok(out)
        }
        Select::CountDistinct(var) => {
            let distinct: std::collections::BTreeSet<_> =
                rows.iter().filter_map(|row| row.get(var)).cloned().collect();
            Ok(vec![BTreeMap::from([(
                var.clone(),
                Node::Literal(Literal::new(
                    distinct.len().to_string(),
                    format!("{XSD_PREFIX}integer"),
                )),
            )])])
        }
        Select::Agg { maximize, var, alias } => {
            let mut best: Option<(NumericValue, Node)> = None;
            for row in rows {
                let Some(node) = row.get(var) else { continue };
                let Some(value) = numeric_of(node) else { continue };
                best = Some(match best {
                    None => (value, node.clone()),
                    Some((b, n)) => {
                        if (value > b) == *maximize {
                            (value, node.clone())
                        } else {
                            (b, n)
                        }
                    }
                });
            }
            Ok(match best {
                Some((_, node)) => vec![BTreeMap::from([(alias.clone(), node)])],
                None => Vec::new(),
            })
        }
    }
}

/// Execute a query produced by `compile_sparql` against a graph.
pub fn execute_sparql(query: &str, graph: &KnowledgeGraph) -> Result<Denotation, QueryParseError> {
    let tokens = tokenize(query)?;
    let mut parser = QueryParser { tokens, cursor: 0 };
    let parsed = parser.parse_query()?;
    if parser.peek().is_some() {
        return Err(QueryParseError("trailing tokens after query".into()));
    }
    let rows = run_query(&parsed, graph)?;
    match &parsed.select {
        Select::Distinct(var) => Ok(Denotation::Set(
            rows.iter().filter_map(|row| row.get(var)).cloned().collect(),
        )),
        Select::CountDistinct(var) => {
            let n = rows
                .first()
                .and_then(|row| row.get(var))
                .and_then(|node| match node {
                    Node::Literal(l) => l.lexical.parse::<u64>().ok(),
                    Node::Entity(_) => None,
                })
                .unwrap_or(0);
            Ok(Denotation::Count(n))
        }
        Select::Agg { .. } => {
            Err(QueryParseError("top-level MAX/MIN queries are not produced".into()))
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kg::schema::SchemaView;
    use crate::kg::sparql::compile_sparql;
    use crate::kg::Triple;
    use crate::sexpr::parse_sexpr;

    fn graph() -> KnowledgeGraph {
        let schema = SchemaView::from_json(
            r#"{
            "relations": {
                "t.rel": {"description": "r", "domain": "t.thing", "range": "t.thing"},
                "t.mass": {"description": "m", "domain": "t.thing",
                           "range": "http://www.w3.org/2001/XMLSchema#float"}
            },
            "classes": {"t.thing": {"description": "thing"}},
            "instances": {"m.a": ["t.thing"], "m.b": ["t.thing"]}
        }"#,
        )
        .unwrap();
        let float = "http://www.w3.org/2001/XMLSchema#float";
        let triples = vec![
            Triple { subject: "m.a".into(), predicate: "t.rel".into(), object: Node::entity("m.b") },
            Triple {
                subject: "m.a".into(),
                predicate: "t.mass".into(),
                object: Node::Literal(Literal::new("900.0", float)),
            },
            Triple {
                subject: "m.b".into(),
                predicate: "t.mass".into(),
                object: Node::Literal(Literal::new("980.0", float)),
            },
        ];
        KnowledgeGraph::new(triples, schema).unwrap()
    }

    #[test]
    fn executes_compiled_join() {
        let g = graph();
        let expr = parse_sexpr("(JOIN (R t.rel) m.a)").unwrap();
        let q = compile_sparql(&expr, g.schema()).unwrap();
        let result = execute_sparql(&q, &g).unwrap();
        assert_eq!(result, Denotation::Set([Node::entity("m.b")].into()));
    }

    #[test]
    fn executes_class_membership_and_filter() {
        let g = graph();
        let expr = parse_sexpr(
            "(AND t.thing (LT t.mass 980.0^^http://www.w3.org/2001/XMLSchema#float))",
        )
        .unwrap();
        let q = compile_sparql(&expr, g.schema()).unwrap();
        let result = execute_sparql(&q, &g).unwrap();
        assert_eq!(result, Denotation::Set([Node::entity("m.a")].into()));
    }

    #[test]
    fn count_query_returns_integer() {
        let g = graph();
        let expr = parse_sexpr("(COUNT t.thing)").unwrap();
        let q = compile_sparql(&expr, g.schema()).unwrap();
        assert_eq!(execute_sparql(&q, &g).unwrap(), Denotation::Count(2));
    }

    #[test]
    fn empty_graph_gives_empty_set() {
        let schema = SchemaView::from_json(
            r#"{"relations": {"t.rel": {"description": "r"}}, "classes": {}}"#,
        )
        .unwrap();
        let g = KnowledgeGraph::new(Vec::new(), schema).unwrap();
        let expr = parse_sexpr("(JOIN t.rel m.a)").unwrap();
        let q = compile_sparql(&expr, g.schema()).unwrap();
        assert_eq!(execute_sparql(&q, &g).unwrap(), Denotation::empty_set());
    }

    #[test]
    fn rejects_malformed_query() {
        let g = graph();
        assert!(execute_sparql("SELECT garbage", &g).is_err());
        assert!(execute_sparql("SELECT DISTINCT ?x WHERE { ?x ns:t.rel", &g).is_err());
    }
}
