//! Splitting a logical form into ordered subtasks.
//!
//! Each superlative, intersection, comparative and count operation gets its
//! own subtask, as does each question-driven projection. A chain of JOINs
//! whose intermediate node class is a mediator (CVT) is kept inside a single
//! subtask as consecutive steps: the chain exists because of the KG shape,
//! not the question.

use super::ast::{ExprKind, RefId, SExpr};
use super::subst::{substitute_refs, SubstError};
use crate::kg::SchemaView;
use std::collections::HashMap;
use thiserror::Error;

#[derive(Debug, Clone, Error, PartialEq, Eq)]
pub enum DecomposeError {
    #[error("unbound atom {0}")]
    UnboundAtom(String),
    #[error("expression contains reference {0}; decompose ref-free forms")]
    ContainsRef(String),
    #[error("type mismatch: {0}")]
    TypeMismatch(String),
}

/// One unit of work: a contiguous 1-based index and one or more step
/// expressions. Later steps may reference earlier ones via `s-exp-i.j`; the
/// subtask's result is its last step.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Subtask {
    pub index: u32,
    pub steps: Vec<SExpr>,
    pub description: Option<String>,
}

impl Subtask {
    pub fn result(&self) -> &SExpr {
        self.steps.last().expect("a subtask has at least one step")
    }
}

struct Decomposer<'s> {
    schema: &'s SchemaView,
    subtasks: Vec<Subtask>,
}

impl<'s> Decomposer<'s> {
    fn push_task(&mut self, steps: Vec<SExpr>) -> SExpr {
        let index = self.subtasks.len() as u32 + 1;
        self.subtasks.push(Subtask { index, steps, description: None });
        SExpr::Ref(RefId::task(index))
    }

    /// Lower a set expression to the operand its parent should use: atoms
    /// stay inline, operations become refs to freshly created subtasks.
    fn operand(&mut self, expr: &SExpr) -> Result<SExpr, DecomposeError> {
        match expr {
            SExpr::Entity(_) | SExpr::Class(_) | SExpr::Literal(_) => Ok(expr.clone()),
            SExpr::Ref(r) => Err(DecomposeError::ContainsRef(r.key())),
            SExpr::And(a, b) => {
                let left = self.operand(a)?;
                let right = self.operand(b)?;
                Ok(self.push_task(vec![SExpr::and(left, right)]))
            }
            SExpr::Count(u) => {
                let inner = self.operand(u)?;
                Ok(self.push_task(vec![SExpr::count(inner)]))
            }
            SExpr::ArgMax(u, b) => {
                let inner = self.operand(u)?;
                Ok(self.push_task(vec![SExpr::ArgMax(Box::new(inner), b.clone())]))
            }
            SExpr::ArgMin(u, b) => {
                let inner = self.operand(u)?;
                Ok(self.push_task(vec![SExpr::ArgMin(Box::new(inner), b.clone())]))
            }
            SExpr::Compare(_, _, _) => Ok(self.push_task(vec![expr.clone()])),
            SExpr::Join(_, _) if expr.kind() == ExprKind::Set => self.join_chain(expr),
            SExpr::Join(_, _) | SExpr::Relation(_) | SExpr::Reverse(_) => {
                Err(DecomposeError::TypeMismatch(format!(
                    "binary expression '{expr}' used where an entity set is required"
                )))
            }
        }
    }

    // Walk a projection chain outermost-first, merging hops whose
    // intermediate class is a mediator, then emit one subtask whose steps
    // run innermost-first.
    fn join_chain(&mut self, expr: &SExpr) -> Result<SExpr, DecomposeError> {
        let mut binaries = Vec::new();
        let mut cursor = expr;
        let base = loop {
            let SExpr::Join(binary, operand) = cursor else { unreachable!() };
            binaries.push(binary.as_ref().clone());
            match operand.as_ref() {
                inner @ SExpr::Join(inner_binary, _)
                    if inner.kind() == ExprKind::Set && self.lands_on_mediator(inner_binary) =>
                {
                    cursor = inner;
                }
                other => break other,
            }
        };
        let base_operand = self.operand(base)?;
        let task_index = self.subtasks.len() as u32 + 1;
        let mut steps = Vec::new();
        for (position, binary) in binaries.into_iter().rev().enumerate() {
            let operand = if position == 0 {
                base_operand.clone()
            } else {
                SExpr::Ref(RefId::step(task_index, position as u32))
            };
            steps.push(SExpr::Join(Box::new(binary), Box::new(operand)));
        }
        Ok(self.push_task(steps))
    }

    // The hop `(JOIN inner_binary _)` produces entities of the subject class
    // of `inner_binary`; the chain above it is structural iff that class is
    // a mediator.
    fn lands_on_mediator(&self, inner_binary: &SExpr) -> bool {
        self.schema
            .subject_class(inner_binary)
            .map(|class| self.schema.is_mediator_class(class))
            .unwrap_or(false)
    }
}

/// Decompose a ref-free, schema-bound expression into subtasks.
pub fn decompose_by_ops(
    expr: &SExpr,
    schema: &SchemaView,
) -> Result<Vec<Subtask>, DecomposeError> {
    let bound = schema.bind(expr).map_err(|e| DecomposeError::UnboundAtom(e.0))?;
    let mut decomposer = Decomposer { schema, subtasks: Vec::new() };
    let top = match bound.kind() {
        ExprKind::Set | ExprKind::Integer => decomposer.operand(&bound)?,
        _ => {
            return Err(DecomposeError::TypeMismatch(format!(
                "cannot decompose binary expression '{bound}'"
            )))
        }
    };
    if !matches!(top, SExpr::Ref(_)) {
        decomposer.push_task(vec![top]);
    }
    Ok(decomposer.subtasks)
}

/// Rebuild the full form from a decomposition by splicing every task and
/// step result back together.
pub fn reassemble(subtasks: &[Subtask]) -> Result<SExpr, SubstError> {
    let mut bindings: HashMap<String, SExpr> = HashMap::new();
    for task in subtasks {
        for (j, step) in task.steps.iter().enumerate() {
            bindings.insert(RefId::step(task.index, j as u32 + 1).key(), step.clone());
        }
        bindings.insert(RefId::task(task.index).key(), task.result().clone());
    }
    let last = subtasks
        .last()
        .ok_or_else(|| SubstError::UnboundRef("s-exp-1".into()))?;
    substitute_refs(&SExpr::Ref(RefId::task(last.index)), &bindings)
}
