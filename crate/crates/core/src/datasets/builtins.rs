//! The built-in models, written in the model text format.

use super::DatasetError;
use crate::dsl::parse_model;
use crate::model::{CausalDiagram, Scm};
use crate::scalar::Rational;

/// A shipped model with its causal diagram.
#[derive(Debug, Clone)]
pub struct BuiltinModel {
    pub name: &'static str,
    pub description: &'static str,
    pub source: &'static str,
    pub scm: Scm<Rational>,
    pub diagram: CausalDiagram,
    /// Whether the model has an image rendering (digit, colour, bar).
    pub renders: bool,
}

const FACE_MSTAR: &str = "\
model face_mstar {
  exo U_F ~ bernoulli(2/5)
  exo U_Y ~ bernoulli(2/5)
  exo U_H1 ~ bernoulli(2/5)
  exo U_H2 ~ bernoulli(1/5)
  var F : {0,1} = xor(U_F, U_Y)
  var Y : {0,1} = U_Y
  var H : {0,1} = xor(and(not(Y), U_H1), and(Y, U_H2))
}
";

// H reads the age factor directly instead of Y
const FACE_MPRIME: &str = "\
model face_mprime {
  exo U_F ~ bernoulli(2/5)
  exo U_Y ~ bernoulli(2/5)
  exo U_H1 ~ bernoulli(2/5)
  exo U_H2 ~ bernoulli(1/5)
  var F : {0,1} = xor(U_F, U_Y)
  var Y : {0,1} = U_Y
  var H : {0,1} = xor(and(not(U_Y), U_H1), and(U_Y, U_H2))
}
";

const FACE_M3: &str = "\
model face_m3 {
  exo U_F ~ bernoulli(2/5)
  exo U_Y ~ bernoulli(2/5)
  exo U_H1 ~ bernoulli(1/4)
  exo U_H2 ~ bernoulli(1/5)
  var F : {0,1} = xor(U_F, U_Y)
  var Y : {0,1} = U_Y
  var H : {0,1} = or(and(not(Y), U_H1), U_H2)
}
";

const FACE_M1_SMILE: &str = "\
model face_m1_smile {
  exo U_F ~ bernoulli(2/5)
  exo U_Y ~ bernoulli(2/5)
  exo U_H1 ~ bernoulli(2/5)
  exo U_H2 ~ bernoulli(1/5)
  exo U_S ~ bernoulli(1/2)
  var F : {0,1} = xor(U_F, U_Y)
  var Y : {0,1} = U_Y
  var H : {0,1} = xor(and(not(Y), U_H1), and(Y, U_H2))
  var S : {0,1} = U_S
}
";

const FACE_M2_SMILE: &str = "\
model face_m2_smile {
  exo U_F ~ bernoulli(2/5)
  exo U_Y ~ bernoulli(2/5)
  exo U_H1 ~ bernoulli(2/5)
  exo U_H2 ~ bernoulli(1/5)
  exo U_S ~ bernoulli(1/2)
  var F : {0,1} = xor(U_F, U_Y)
  var Y : {0,1} = U_Y
  var H : {0,1} = xor(and(not(Y), U_H1), and(Y, U_H2))
  var S : {0,1} = xor(U_S, Y)
}
";

// C's parameter reads the digit's exogenous factor (confounding D and C);
// B reads the endogenous digit, so do(D) reaches the bar.
const BACKDOOR: &str = "\
model backdoor {
  exo U_D ~ uniform(0, 9)
  exo U_1 ~ bernoulli(4/5)
  exo U_2 ~ bernoulli(9/10)
  exo U_3 ~ bernoulli(3/4)
  var D : {0,1,2,3,4,5,6,7,8,9} = U_D
  var C : {0,1} = bern(0.95, -0.1, U_D)
  var B : {0,1} = and(or(xor(ge(D, 5), U_1), xor(C, U_2)), U_3)
}
";

// C is caused by D; B shares the digit's exogenous factor (D <-> B) and is
// caused by C only.
const FRONTDOOR: &str = "\
model frontdoor {
  exo U_D ~ uniform(0, 9)
  exo U_1 ~ bernoulli(4/5)
  exo U_2 ~ bernoulli(9/10)
  exo U_3 ~ bernoulli(7/10)
  var D : {0,1,2,3,4,5,6,7,8,9} = U_D
  var C : {0,1} = bern(0.05, 0.1, D)
  var B : {0,1} = and(or(xor(lt(U_D, 5), U_2), xor(C, U_1)), U_3)
}
";

const TABLE: &[(&str, &str, &str, bool)] = &[
    (
        "face_mstar",
        "Faces: gender F and age Y share a latent; hair H depends on age. Reference model for the age-edit examples.",
        FACE_MSTAR,
        false,
    ),
    (
        "face_mprime",
        "Same P(F,Y,H) as face_mstar, but hair reads the age latent instead of age itself; the age edit leaves hair unchanged.",
        FACE_MPRIME,
        false,
    ),
    (
        "face_m3",
        "Same P(F,Y,H) as face_mstar with hair = ((not Y) and U_H1) or U_H2; a third answer to the hair counterfactual.",
        FACE_M3,
        false,
    ),
    (
        "face_m1_smile",
        "face_mstar plus an independent smile S = U_S.",
        FACE_M1_SMILE,
        false,
    ),
    (
        "face_m2_smile",
        "face_mstar plus smile S = U_S xor Y: same observations as face_m1_smile, different smile counterfactual.",
        FACE_M2_SMILE,
        false,
    ),
    (
        "backdoor",
        "Coloured digits: digit D and colour C confounded, bar B caused by D and C. Rendered as 28x28 images.",
        BACKDOOR,
        true,
    ),
    (
        "frontdoor",
        "Coloured digits: D causes colour C, C causes bar B, D and B confounded. Rendered as 28x28 images.",
        FRONTDOOR,
        true,
    ),
];

/// Names of every built-in model, in listing order.
pub fn builtin_names() -> Vec<&'static str> {
    TABLE.iter().map(|(n, ..)| *n).collect()
}

/// Parses and returns a built-in model. The diagram is the one the model
/// induces.
pub fn builtin(name: &str) -> Result<BuiltinModel, DatasetError> {
    let &(name, description, source, renders) =
        TABLE.iter().find(|(n, ..)| *n == name).ok_or_else(|| DatasetError::UnknownModel(name.to_string()))?;
    let scm = parse_model(source).map_err(|errs| DatasetError::Model(crate::dsl::render_errors(&errs)))?;
    let diagram = scm.induce_diagram();
    Ok(BuiltinModel { name, description, source, scm, diagram, renders })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn all_builtins_parse() {
        for n in builtin_names() {
            let m = builtin(n).unwrap();
            assert_eq!(m.scm.name(), n);
        }
        assert!(builtin("nope").is_err());
    }

    #[test]
    fn published_diagrams() {
        let face = builtin("face_mstar").unwrap().diagram;
        assert_eq!(face, CausalDiagram::parse("F; Y -> H; F <-> Y").unwrap());
        let bd = builtin("backdoor").unwrap().diagram;
        assert_eq!(bd, CausalDiagram::parse("D -> B; C -> B; D <-> C").unwrap());
        let fd = builtin("frontdoor").unwrap().diagram;
        assert_eq!(fd, CausalDiagram::parse("D -> C; C -> B; D <-> B").unwrap());
    }
}
