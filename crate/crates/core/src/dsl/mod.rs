//! Text format for models and counterfactual queries.
//!
//! ```text
//! model face {
//!   exo U_Y ~ bernoulli(2/5)
//!   exo U_D ~ uniform(0, 9)
//!   exo U_S ~ pmf{0: 1/2, 1: 1/2}
//!   var Y : {0,1} = U_Y
//!   var H : {0,1} = xor(and(not(Y), U_H1), and(Y, U_H2))
//!   var C : {0,1} = bern(0.95, -0.1, U_D)   # Bern(0.95 - 0.1 U_D)
//! }
//! ```
//!
//! Mechanisms are prefix calls only (`not and or xor eq ge lt add sub mul
//! table bern`); there is no infix syntax, so precedence cannot be misread.
//! `bern` is sugar: it is desugared into a threshold on a fresh uniform
//! exogenous factor and printed back in that form.

mod lexer;
mod parser;

use std::fmt;

pub use parser::{parse_model, parse_query};

use crate::model::Scm;
use crate::scalar::Scalar;

/// 1-based line/column plus byte offset and length into the source.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SourceSpan {
    pub line: usize,
    pub column: usize,
    pub offset: usize,
    pub length: usize,
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("{}:{}: {message}", span.line, span.column)]
pub struct ParseError {
    pub span: SourceSpan,
    pub message: String,
    /// Tokens that would have been accepted at `span`, when known.
    pub expected: Vec<String>,
}

/// Joins several parse errors, one per line.
pub fn render_errors(errors: &[ParseError]) -> String {
    errors.iter().map(ToString::to_string).collect::<Vec<_>>().join("\n")
}

fn fmt_mass<T: Scalar>(p: &T) -> String {
    p.to_json_string()
}

/// Canonical text: exogenous factors by name, then variables in declaration
/// order. `parse_model(format_model(m))` rebuilds `m`.
pub fn format_model<T: Scalar>(scm: &Scm<T>) -> String {
    let mut out = String::new();
    out.push_str(&format!("model {} {{\n", scm.name()));
    for f in scm.exogenous() {
        let vals = f.support.values();
        let contiguous = vals.windows(2).all(|w| w[1] == w[0] + 1);
        let uniform = f.pmf.iter().all(|p| p.approx_eq(&f.pmf[0]));
        let dist = if vals == [0, 1] {
            format!("bernoulli({})", fmt_mass(&f.pmf[1]))
        } else if contiguous && uniform {
            format!("uniform({}, {})", vals[0], vals[vals.len() - 1])
        } else {
            let parts: Vec<String> = vals.iter().zip(&f.pmf).map(|(v, p)| format!("{v}: {}", fmt_mass(p))).collect();
            format!("pmf{{{}}}", parts.join(", "))
        };
        out.push_str(&format!("  exo {} ~ {dist}\n", f.name));
    }
    for v in scm.endogenous() {
        let dom: Vec<String> = v.domain.values().iter().map(i64::to_string).collect();
        out.push_str(&format!("  var {} : {{{}}} = {}\n", v.name, dom.join(","), v.mechanism));
    }
    out.push_str("}\n");
    out
}

impl fmt::Display for SourceSpan {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}", self.line, self.column)
    }
}
