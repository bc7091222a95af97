use std::collections::{BTreeSet, HashMap};

use super::term::{SortError, TermKind};
use super::{Term, Var};

/// Simultaneous substitution map.
pub type Bindings = HashMap<Var, Term>;

/// Capture-avoiding simultaneous substitution.
///
/// Every binding must preserve sorts; bound occurrences are left untouched and
/// binders are renamed when a replacement would otherwise be captured.
pub fn substitute(t: &Term, bindings: &Bindings) -> Result<Term, SortError> {
    for (v, r) in bindings {
        if v.sort() != r.sort() {
            return Err(SortError {
                offending: r.to_string(),
                message: format!("binding for `{v}` has sort {}, expected {}", r.sort(), v.sort()),
            });
        }
    }
    if bindings.is_empty() {
        return Ok(t.clone());
    }
    Ok(subst_rec(t, bindings))
}

/// Substitution for callers that guarantee sort preservation.
pub fn subst(t: &Term, bindings: &Bindings) -> Term {
    substitute(t, bindings).expect("sort-preserving bindings")
}

/// Renames variables according to `f`; variables mapped to `None` stay.
pub fn rename(t: &Term, f: &impl Fn(&Var) -> Option<Var>) -> Term {
    let mut b = Bindings::new();
    for v in t.free_vars() {
        if let Some(w) = f(&v) {
            b.insert(v, w.term());
        }
    }
    subst(t, &b)
}

fn subst_rec(t: &Term, b: &Bindings) -> Term {
    match t.kind() {
        TermKind::Var(v) => b.get(v).cloned().unwrap_or_else(|| t.clone()),
        TermKind::Const(_) => t.clone(),
        TermKind::App(op, args) => {
            let new: Vec<Term> = args.iter().map(|a| subst_rec(a, b)).collect();
            if new.iter().zip(args).all(|(x, y)| x == y) {
                return t.clone();
            }
            Term::mk(op.clone(), new)
        }
        TermKind::Quant(q, vs, body) => {
            let mut inner: Bindings = b.iter().filter(|(k, _)| !vs.contains(k)).map(|(k, v)| (k.clone(), v.clone())).collect();
            if inner.is_empty() {
                return t.clone();
            }
            let body_free = body.free_vars();
            let mut incoming: BTreeSet<Var> = BTreeSet::new();
            for (k, r) in &inner {
                if body_free.contains(k) {
                    incoming.extend(r.free_vars());
                }
            }
            let mut taken: BTreeSet<String> = incoming.iter().map(|v| v.name().to_string()).collect();
            taken.extend(body_free.iter().map(|v| v.name().to_string()));
            let mut new_vs = Vec::with_capacity(vs.len());
            for v in vs {
                if incoming.iter().any(|w| w.name() == v.name()) {
                    let fresh = fresh_name(v.name(), &taken);
                    taken.insert(fresh.clone());
                    let nv = v.renamed(&fresh);
                    inner.insert(v.clone(), nv.term());
                    new_vs.push(nv);
                } else {
                    new_vs.push(v.clone());
                }
            }
            Term::quant(*q, new_vs, subst_rec(body, &inner)).expect("Bool body")
        }
    }
}

pub(crate) fn fresh_name(base: &str, taken: &BTreeSet<String>) -> String {
    let mut i = 0usize;
    loop {
        let cand = format!("{base}!{i}");
        if !taken.contains(&cand) {
            return cand;
        }
        i += 1;
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::term::{Op, Sort};

    fn iv(n: &str) -> Var {
        Var::new(n, Sort::Int)
    }

    #[test]
    fn replaces_free_occurrence() {
        let (x, y) = (iv("x"), iv("y"));
        let t = Term::binary(Op::Add, x.term(), y.term());
        let b: Bindings = [(x, Term::int(0))].into_iter().collect();
        assert_eq!(subst(&t, &b).to_string(), "(+ 0 y)");
    }

    #[test]
    fn bound_occurrence_untouched() {
        let (x, y) = (iv("x"), iv("y"));
        let t = Term::exists(vec![y.clone()], Term::eq(x.term(), y.term()));
        let b: Bindings = [(y, Term::int(1))].into_iter().collect();
        assert_eq!(subst(&t, &b), t);
    }

    #[test]
    fn simultaneous_binding() {
        let (x, xp, z) = (iv("x"), iv("x'"), iv("z"));
        let t = Term::eq(xp.term(), Term::binary(Op::Add, x.term(), Term::int(1)));
        let b: Bindings = [(x, Term::int(2)), (xp, z.term())].into_iter().collect();
        assert_eq!(subst(&t, &b).to_string(), "(= z (+ 2 1))");
    }

    #[test]
    fn avoids_capture() {
        let (x, y) = (iv("x"), iv("y"));
        // exists y. x = y  with x := y must not capture.
        let t = Term::exists(vec![y.clone()], Term::eq(x.term(), y.term()));
        let b: Bindings = [(x, y.term())].into_iter().collect();
        let r = subst(&t, &b);
        assert!(r.free_vars().contains(&y));
        assert_eq!(r.to_string(), "(exists ((y!0 Int)) (= y y!0))");
    }

    #[test]
    fn sort_violating_binding_is_rejected() {
        let x = iv("x");
        let b: Bindings = [(x.clone(), Term::bool(true))].into_iter().collect();
        assert!(substitute(&x.term(), &b).is_err());
    }
}
