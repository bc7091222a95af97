//! Script commands: the Horn-clause subset of SMT-LIB v2.

use super::lexer::{parse_sexps, Atom, Sexp};
use super::parse::{parse_sort, Signature, TermParser};
use super::FrontendError;
use crate::term::{Sort, Term};

/// A parsed Horn script before clause normalization.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct ChcScript {
    pub logic: Option<String>,
    /// Predicate names with argument sorts, in declaration order.
    pub declarations: Vec<(String, Vec<Sort>)>,
    /// Closed formulas, one per `assert`.
    pub asserts: Vec<Term>,
    pub has_check_sat: bool,
    pub has_get_model: bool,
}

impl ChcScript {
    pub fn signature(&self) -> Signature {
        Signature { preds: self.declarations.iter().cloned().collect() }
    }
}

/// Parses a script. `let` is inlined; `set-option` is ignored with a warning.
pub fn parse_script(text: &str) -> Result<ChcScript, FrontendError> {
    let cmds = parse_sexps(text)?;
    let mut script = ChcScript::default();
    let mut sig = Signature::default();
    for cmd in &cmds {
        let Sexp::List(items, pos) = cmd else {
            return Err(FrontendError::parse(cmd.pos(), "expected a command"));
        };
        let name = items.first().and_then(Sexp::symbol).ok_or_else(|| FrontendError::parse(*pos, "expected a command name"))?;
        match name {
            "set-logic" => match items.get(1) {
                Some(Sexp::Atom(Atom::Symbol(l), _)) => script.logic = Some(l.clone()),
                _ => return Err(FrontendError::parse(*pos, "set-logic expects a symbol")),
            },
            "set-info" => {}
            "set-option" => log::warn!("ignoring {cmd}"),
            "declare-fun" | "declare-const" => {
                let (fname, args, ret) = match (name, items.as_slice()) {
                    ("declare-fun", [_, n, Sexp::List(args, _), r]) => (n, args.iter().map(parse_sort).collect::<Result<Vec<_>, _>>()?, r),
                    ("declare-const", [_, n, r]) => (n, vec![], r),
                    _ => return Err(FrontendError::parse(*pos, format!("malformed {name}"))),
                };
                let fname = fname.symbol().ok_or_else(|| FrontendError::parse(fname.pos(), "expected a symbol"))?.to_string();
                if parse_sort(ret)? != Sort::Bool {
                    return Err(FrontendError::Unsupported { pos: *pos, what: format!("uninterpreted function or constant `{fname}`") });
                }
                if sig.preds.contains_key(&fname) {
                    return Err(FrontendError::parse(*pos, format!("`{fname}` declared twice")));
                }
                sig.preds.insert(fname.clone(), args.clone());
                script.declarations.push((fname, args));
            }
            "assert" => {
                let [_, body] = items.as_slice() else {
                    return Err(FrontendError::parse(*pos, "assert expects one term"));
                };
                let t = TermParser::new(&sig).parse(body)?;
                if t.sort() != &Sort::Bool {
                    return Err(FrontendError::Sort { pos: *pos, message: "asserted term is not Bool".into() });
                }
                script.asserts.push(t);
            }
            "check-sat" => script.has_check_sat = true,
            "get-model" => script.has_get_model = true,
            "exit" => break,
            other => return Err(FrontendError::UnsupportedCommand { name: other.to_string(), line: pos.line, col: pos.col }),
        }
    }
    Ok(script)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn minimal_horn_script() {
        let s = parse_script("(set-logic HORN)(declare-fun inv (Int) Bool)(assert (forall ((x Int)) (=> (= x 0) (inv x))))(check-sat)")
            .unwrap();
        assert_eq!(s.logic.as_deref(), Some("HORN"));
        assert_eq!(s.declarations, vec![("inv".to_string(), vec![Sort::Int])]);
        assert_eq!(s.asserts.len(), 1);
        assert!(s.has_check_sat && !s.has_get_model);
    }

    #[test]
    fn unbalanced_is_parse_error() {
        assert!(matches!(parse_script("(assert true"), Err(FrontendError::Parse(_))));
    }

    #[test]
    fn datatypes_unsupported() {
        let e = parse_script("(declare-datatypes ((L 0)) (((nil))))").unwrap_err();
        assert!(matches!(e, FrontendError::UnsupportedCommand { ref name, .. } if name == "declare-datatypes"));
    }

    #[test]
    fn define_fun_unsupported() {
        assert!(matches!(parse_script("(define-fun f () Bool true)"), Err(FrontendError::UnsupportedCommand { .. })));
    }

    #[test]
    fn commands_after_exit_ignored() {
        let s = parse_script("(exit)(foo)").unwrap();
        assert!(s.asserts.is_empty());
    }
}
