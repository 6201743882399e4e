//! Finite structural causal models: domains, mechanisms, interventions and
//! deterministic evaluation of potential outcomes.

mod diagram;
mod domain;
mod expr;
mod scm;

pub use diagram::{CausalDiagram, DiagramError};
pub use domain::{DomainError, FiniteDomain};
pub use expr::{BinOp, EvalError, Expr, Table};
pub use scm::{
    validate, Endogenous, ExogenousFactor, Intervention, ModelError, Scm, ScmDef, ValidationReport, Violation,
};
