//! Double-double helpers for polynomials that cancel near transmission zeros.

use num_complex::{Complex, Complex64};
use twofloat::TwoFloat;

pub(crate) type Dd = Complex<TwoFloat>;

pub(crate) fn dd(x: f64) -> TwoFloat {
    TwoFloat::from(x)
}

pub(crate) fn cdd(re: TwoFloat, im: TwoFloat) -> Dd {
    Complex::new(re, im)
}

/// Exact Δ − δ; the f64 difference already loses the bits that matter.
pub(crate) fn diff(a: f64, b: f64) -> TwoFloat {
    TwoFloat::new_sub(a, b)
}

pub(crate) fn to_f64(x: TwoFloat) -> f64 {
    x.hi() + x.lo()
}

pub(crate) fn to_c64(z: Dd) -> Complex64 {
    Complex64::new(to_f64(z.re), to_f64(z.im))
}
