//! Rule language: syntax tree, parser and printer, evaluator.

pub mod ast;
pub mod eval;
pub mod parse;

pub use ast::*;
pub use eval::{count_matching, eval_rule, select_action, EvalContext, EvalError, ReferenceFrame, Selected};
pub use parse::{format_ruleset, parse_rule, parse_ruleset};
