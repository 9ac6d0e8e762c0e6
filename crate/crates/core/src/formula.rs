//! Parser for model formulas such as `y ~ z1 + z2 + z1:z2 + x1 + z1:x2`.
//!
//! Terms are separated by `+`, `:` joins the two factors of a product, and
//! the intercept is always included (a literal `1` term is accepted and
//! ignored). The response name on the left of `~` is optional and not
//! checked. Exposures are always called `z1` and `z2`; covariates resolve
//! against the names passed in.

use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::model::{Link, ModelSpec, Term, Variable};

/// Parses `text` into a logit-link [`ModelSpec`].
pub fn parse_formula(text: &str, covariate_names: &[String]) -> Result<ModelSpec> {
    let rhs = match text.split_once('~') {
        Some((lhs, rhs)) => {
            let lhs = lhs.trim();
            if !lhs.is_empty() && !is_identifier(lhs) {
                return Err(malformed(format!("response {lhs:?} is not a plain name")));
            }
            if rhs.contains('~') {
                return Err(malformed("more than one '~'".to_string()));
            }
            rhs
        }
        None => text,
    };
    if rhs.trim().is_empty() {
        return Err(malformed("formula has no terms".to_string()));
    }

    let mut terms = vec![Term::Intercept];
    for raw in rhs.split('+') {
        let raw = raw.trim();
        if raw.is_empty() {
            return Err(malformed("empty term between '+' signs".to_string()));
        }
        if raw == "1" {
            continue;
        }
        let factors: Vec<&str> = raw.split(':').map(str::trim).collect();
        let term = match factors.as_slice() {
            [v] => Term::Main(resolve(v, covariate_names)?),
            [a, b] => {
                let (a, b) = (resolve(a, covariate_names)?, resolve(b, covariate_names)?);
                if a == b {
                    return Err(malformed(format!("product {raw:?} repeats a variable")));
                }
                Term::product(a, b)?
            }
            _ => {
                return Err(Error::Specification(format!(
                    "term {raw:?}: only products of two variables are supported"
                )))
            }
        };
        if terms.contains(&term) {
            return Err(Error::Specification(format!("duplicate term {raw:?}")));
        }
        terms.push(term);
    }
    ModelSpec::new(terms, Link::Logit, covariate_names.to_vec())
}

fn resolve(name: &str, covariate_names: &[String]) -> Result<Variable> {
    if !is_identifier(name) {
        return Err(malformed(format!("{name:?} is not a variable name")));
    }
    match name {
        "z1" => Ok(Variable::Z1),
        "z2" => Ok(Variable::Z2),
        _ => covariate_names
            .iter()
            .position(|c| c == name)
            .map(Variable::Covariate)
            .ok_or_else(|| Error::Specification(format!("unknown variable {name:?}"))),
    }
}

fn is_identifier(s: &str) -> bool {
    let mut chars = s.chars();
    matches!(chars.next(), Some(c) if c.is_alphabetic() || c == '_')
        && chars.all(|c| c.is_alphanumeric() || c == '_' || c == '.')
}

fn malformed(msg: String) -> Error {
    Error::Specification(format!("malformed formula: {msg}"))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn names() -> Vec<String> {
        ["x1", "x2", "x3"].map(String::from).to_vec()
    }

    #[test]
    fn basic_interaction_model() {
        let spec = parse_formula("y ~ z1 + z2 + z1:z2", &names()).unwrap();
        assert_eq!(
            spec.terms(),
            &[
                Term::Intercept,
                Term::Main(Variable::Z1),
                Term::Main(Variable::Z2),
                Term::Product(Variable::Z1, Variable::Z2)
            ]
        );
    }

    #[test]
    fn eight_terms_in_written_order() {
        let spec = parse_formula("y ~ z1 + z2 + z1:z2 + x1 + x2 + x3 + z1:x2", &names()).unwrap();
        assert_eq!(spec.len(), 8);
        assert_eq!(
            spec.term_labels(),
            ["(Intercept)", "z1", "z2", "z1:z2", "x1", "x2", "x3", "z1:x2"]
        );
        assert_eq!(spec.exposure_product_index(), Some(3));
    }

    #[test]
    fn products_are_unordered() {
        let a = parse_formula("z2:z1 + x2:z1", &names()).unwrap();
        let b = parse_formula("y ~ z1:z2 + z1:x2", &names()).unwrap();
        assert_eq!(a, b);
        assert!(parse_formula("y ~ z1:z2 + z2:z1", &names()).is_err());
    }

    #[test]
    fn error_paths() {
        for bad in [
            "y ~ z1 + z1",
            "y ~ z1 + w",
            "y ~ z1 + + z2",
            "y ~ z1:z2:x1",
            "y ~ z1:z1",
            "y ~ ",
            "y ~ z1 ~ z2",
            "y ~ z1 * z2",
            "",
        ] {
            assert!(
                matches!(parse_formula(bad, &names()), Err(Error::Specification(_))),
                "{bad:?} should fail"
            );
        }
    }

    #[test]
    fn explicit_intercept_is_accepted() {
        let spec = parse_formula("y ~ 1 + z1", &names()).unwrap();
        assert_eq!(spec.len(), 2);
    }
}
