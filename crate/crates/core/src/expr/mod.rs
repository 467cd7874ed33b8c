//! Expression language for integrands and history functions.
//!
//! Expressions are parsed once, bound to an ordered list of channel names
//! and then evaluated on plain slices of channel values.

mod ast;
mod function;
mod parser;

pub use ast::{BinOp, Expr, Func};
pub use function::{EvalError, ExprFunction, PartialMethod, FD_ABSOLUTE_FLOOR, FD_RELATIVE_STEP};
pub use parser::{parse, ParseError};
