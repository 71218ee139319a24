//! Abstract syntax tree for the s-expression logical-form language.
//!
//! An expression denotes either a set of entities (unary), a set of
//! (entity, entity-or-literal) pairs (binary), or an integer (COUNT).
//! Atom disambiguation between entities, classes and relations is done
//! structurally at parse time and can be revised against a schema later;
//! see [`crate::kg::SchemaView::bind`].

use std::fmt;

/// A typed literal such as `980.0^^http://www.w3.org/2001/XMLSchema#float`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Literal {
    pub lexical: String,
    /// Full datatype IRI.
    pub datatype: String,
}

impl Literal {
    pub fn new(lexical: impl Into<String>, datatype: impl Into<String>) -> Self {
        Literal { lexical: lexical.into(), datatype: datatype.into() }
    }

    /// True if the datatype IRI names one of the XSD numeric types.
    pub fn is_numeric(&self) -> bool {
        matches!(
            self.datatype.rsplit(['#', '/']).next().unwrap_or(""),
            "integer"
                | "int"
                | "long"
                | "short"
                | "byte"
                | "decimal"
                | "float"
                | "double"
                | "nonNegativeInteger"
                | "nonPositiveInteger"
                | "positiveInteger"
                | "negativeInteger"
                | "unsignedInt"
                | "unsignedLong"
                | "unsignedShort"
                | "unsignedByte"
        )
    }
}

impl fmt::Display for Literal {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}^^{}", self.lexical, self.datatype)
    }
}

/// A reference to the result of an earlier subtask (`s-exp-2`) or an
/// earlier step within a subtask (`s-exp-1.2`).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct RefId {
    pub task: u32,
    pub step: Option<u32>,
}

impl RefId {
    pub fn task(task: u32) -> Self {
        RefId { task, step: None }
    }

    pub fn step(task: u32, step: u32) -> Self {
        RefId { task, step: Some(step) }
    }

    /// The canonical surface form used in traces, e.g. `s-exp-1.2`.
    pub fn key(&self) -> String {
        match self.step {
            Some(j) => format!("s-exp-{}.{}", self.task, j),
            None => format!("s-exp-{}", self.task),
        }
    }

    /// The surface form used in decomposition prompts, e.g. `task1` /
    /// `task1step2`.
    pub fn prompt_key(&self) -> String {
        match self.step {
            Some(j) => format!("task{}step{}", self.task, j),
            None => format!("task{}", self.task),
        }
    }
}

impl fmt::Display for RefId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.key())
    }
}

/// Comparison operator of a comparative expression.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum CmpOp {
    Lt,
    Le,
    Gt,
    Ge,
}

impl CmpOp {
    pub fn keyword(&self) -> &'static str {
        match self {
            CmpOp::Lt => "LT",
            CmpOp::Le => "LE",
            CmpOp::Gt => "GT",
            CmpOp::Ge => "GE",
        }
    }

    /// The SPARQL comparison token.
    pub fn sparql(&self) -> &'static str {
        match self {
            CmpOp::Lt => "<",
            CmpOp::Le => "<=",
            CmpOp::Gt => ">",
            CmpOp::Ge => ">=",
        }
    }
}

/// What an expression denotes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ExprKind {
    /// A set of entities (or literal values reached through an attribute).
    Set,
    /// A set of (entity, entity-or-literal) pairs.
    Pairs,
    /// A single integer (COUNT).
    Integer,
    /// A literal operand of a comparative.
    Literal,
}

/// A node of the logical-form language.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum SExpr {
    Entity(String),
    Class(String),
    Relation(String),
    Literal(Literal),
    Ref(RefId),
    And(Box<SExpr>, Box<SExpr>),
    Count(Box<SExpr>),
    Reverse(Box<SExpr>),
    Join(Box<SExpr>, Box<SExpr>),
    ArgMax(Box<SExpr>, Box<SExpr>),
    ArgMin(Box<SExpr>, Box<SExpr>),
    Compare(CmpOp, Box<SExpr>, Box<SExpr>),
}

impl SExpr {
    pub fn entity(id: impl Into<String>) -> Self {
        SExpr::Entity(id.into())
    }

    pub fn class(name: impl Into<String>) -> Self {
        SExpr::Class(name.into())
    }

    pub fn relation(name: impl Into<String>) -> Self {
        SExpr::Relation(name.into())
    }

    pub fn join(binary: SExpr, operand: SExpr) -> Self {
        SExpr::Join(Box::new(binary), Box::new(operand))
    }

    pub fn reverse(binary: SExpr) -> Self {
        SExpr::Reverse(Box::new(binary))
    }

    pub fn and(a: SExpr, b: SExpr) -> Self {
        SExpr::And(Box::new(a), Box::new(b))
    }

    pub fn count(operand: SExpr) -> Self {
        SExpr::Count(Box::new(operand))
    }

    pub fn compare(op: CmpOp, attribute: SExpr, bound: Literal) -> Self {
        SExpr::Compare(op, Box::new(attribute), Box::new(SExpr::Literal(bound)))
    }

    /// The denotation kind, derived purely from the tree shape. `Ref`s are
    /// assumed to stand for entity sets, which is how every trace uses them.
    pub fn kind(&self) -> ExprKind {
        match self {
            SExpr::Entity(_) | SExpr::Class(_) | SExpr::Ref(_) => ExprKind::Set,
            SExpr::Relation(_) | SExpr::Reverse(_) => ExprKind::Pairs,
            SExpr::Literal(_) => ExprKind::Literal,
            SExpr::And(_, _) | SExpr::ArgMax(_, _) | SExpr::ArgMin(_, _) => ExprKind::Set,
            SExpr::Compare(_, _, _) => ExprKind::Set,
            SExpr::Count(_) => ExprKind::Integer,
            SExpr::Join(_, operand) => match operand.kind() {
                ExprKind::Pairs => ExprKind::Pairs,
                _ => ExprKind::Set,
            },
        }
    }

    /// True if the expression contains no `Ref` nodes.
    pub fn is_ref_free(&self) -> bool {
        !self.any_node(|n| matches!(n, SExpr::Ref(_)))
    }

    /// Depth-first check for any node satisfying `pred`.
    pub fn any_node(&self, pred: impl Fn(&SExpr) -> bool + Copy) -> bool {
        if pred(self) {
            return true;
        }
        match self {
            SExpr::Entity(_)
            | SExpr::Class(_)
            | SExpr::Relation(_)
            | SExpr::Literal(_)
            | SExpr::Ref(_) => false,
            SExpr::Count(a) | SExpr::Reverse(a) => a.any_node(pred),
            SExpr::And(a, b)
            | SExpr::Join(a, b)
            | SExpr::ArgMax(a, b)
            | SExpr::ArgMin(a, b)
            | SExpr::Compare(_, a, b) => a.any_node(pred) || b.any_node(pred),
        }
    }

    /// Collect every relation and class name mentioned in the expression.
    pub fn schema_items(&self) -> SchemaItems {
        let mut items = SchemaItems::default();
        self.collect_schema_items(&mut items);
        items
    }

    fn collect_schema_items(&self, items: &mut SchemaItems) {
        match self {
            SExpr::Relation(name) => {
                items.relations.insert(name.clone());
            }
            SExpr::Class(name) => {
                items.classes.insert(name.clone());
            }
            SExpr::Entity(_) | SExpr::Literal(_) | SExpr::Ref(_) => {}
            SExpr::Count(a) | SExpr::Reverse(a) => a.collect_schema_items(items),
            SExpr::And(a, b)
            | SExpr::Join(a, b)
            | SExpr::ArgMax(a, b)
            | SExpr::ArgMin(a, b)
            | SExpr::Compare(_, a, b) => {
                a.collect_schema_items(items);
                b.collect_schema_items(items);
            }
        }
    }
}

/// Relation and class names used by an expression.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct SchemaItems {
    pub relations: std::collections::BTreeSet<String>,
    pub classes: std::collections::BTreeSet<String>,
}

impl SchemaItems {
    pub fn iter_all(&self) -> impl Iterator<Item = &String> {
        self.relations.iter().chain(self.classes.iter())
    }

    pub fn is_empty(&self) -> bool {
        self.relations.is_empty() && self.classes.is_empty()
    }
}

/// True for Freebase-style machine ids (`m.`/`g.` prefixed).
pub fn is_entity_id(token: &str) -> bool {
    (token.starts_with("m.") || token.starts_with("g.")) && token.len() > 2
}

impl fmt::Display for SExpr {
    /// Canonical single-space, fully parenthesized rendering; the inverse of
    /// [`crate::sexpr::parse_sexpr`].
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SExpr::Entity(s) | SExpr::Class(s) | SExpr::Relation(s) => f.write_str(s),
            SExpr::Literal(l) => write!(f, "{l}"),
            SExpr::Ref(r) => write!(f, "{r}"),
            SExpr::And(a, b) => write!(f, "(AND {a} {b})"),
            SExpr::Count(a) => write!(f, "(COUNT {a})"),
            SExpr::Reverse(a) => write!(f, "(R {a})"),
            SExpr::Join(a, b) => write!(f, "(JOIN {a} {b})"),
            SExpr::ArgMax(a, b) => write!(f, "(ARGMAX {a} {b})"),
            SExpr::ArgMin(a, b) => write!(f, "(ARGMIN {a} {b})"),
            SExpr::Compare(op, a, b) => write!(f, "({} {a} {b})", op.keyword()),
        }
    }
}

/// Canonical text form of an expression.
pub fn print_sexpr(expr: &SExpr) -> String {
    expr.to_string()
}
