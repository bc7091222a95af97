//! Shared test inputs.

/// The counter `x := 0; while * { x := x + 1 }` with the property `x < 5`.
pub const INV: &str = "(set-logic HORN)(declare-fun inv (Int) Bool)
    (assert (forall ((x Int)) (=> (= x 0) (inv x))))
    (assert (forall ((x Int) (x1 Int)) (=> (and (inv x) (= x1 (+ x 1))) (inv x1))))
    (assert (forall ((x Int)) (=> (and (inv x) (not (< x 5))) false)))
    (check-sat)";

/// The same counter with the safe property `x >= 0`.
pub const INV_SAFE: &str = "(set-logic HORN)(declare-fun inv (Int) Bool)
    (assert (forall ((x Int)) (=> (= x 0) (inv x))))
    (assert (forall ((x Int) (x1 Int)) (=> (and (inv x) (= x1 (+ x 1))) (inv x1))))
    (assert (forall ((x Int)) (=> (and (inv x) (not (>= x 0))) false)))
    (check-sat)";
