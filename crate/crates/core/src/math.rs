// Thin wrappers so the rest of the crate reads like std float code.

#[inline]
pub(crate) fn powf(x: f64, y: f64) -> f64 {
    libm::pow(x, y)
}

#[inline]
pub(crate) fn sqrt(x: f64) -> f64 {
    libm::sqrt(x)
}

#[inline]
pub(crate) fn ln(x: f64) -> f64 {
    libm::log(x)
}

#[inline]
pub(crate) fn exp(x: f64) -> f64 {
    libm::exp(x)
}

#[inline]
pub(crate) fn floor(x: f64) -> f64 {
    libm::floor(x)
}

#[inline]
pub(crate) fn ceil(x: f64) -> f64 {
    libm::ceil(x)
}

/// `a^{-n}` computed by repeated division so that small integer bases stay exact.
pub(crate) fn inv_pow(a: f64, n: usize) -> f64 {
    let mut r = 1.0;
    for _ in 0..n {
        r /= a;
    }
    r
}
