//! ZX-calculus diagrams with exact scalars, linear combinations of diagrams,
//! and symbolic expectation values of parameterized circuits.

pub mod diagram;
pub mod error;
pub mod evaluator;
pub mod lincomb;
pub mod oracle;
pub mod pqc;
pub mod rewrite;
pub mod scalar_expr;

pub use diagram::{Circuit, Color, Diagram, DiagramBuilder, VertexId, VertexKind};
pub use error::{Error, Result};
pub use evaluator::{evaluate, evaluate_edge, evaluate_expectation, exact_contract, ExpandPolicy, Strategy};
pub use lincomb::LinComb;
pub use pqc::{AnsatzSpec, ProblemGraph};
pub use rewrite::{Match, RuleId};
pub use scalar_expr::{Binding, LinearPhase, Parameter, ScalarExpr};
