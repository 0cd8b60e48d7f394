//! Scalar math shims.
//!
//! With `std` the intrinsics are used; without it everything routes
//! through `libm` so the crate builds as `no_std`. `erf`/`lgamma` come
//! from `libm` in both modes (std has no stable equivalent).

#[cfg(feature = "std")]
macro_rules! shim {
    ($name:ident) => {
        #[inline(always)]
        pub fn $name(x: f64) -> f64 {
            f64::$name(x)
        }
    };
}

#[cfg(not(feature = "std"))]
macro_rules! shim {
    ($name:ident) => {
        #[inline(always)]
        pub fn $name(x: f64) -> f64 {
            libm::$name(x)
        }
    };
}

shim!(exp);
shim!(sqrt);
shim!(sin);
shim!(cos);
shim!(tan);
shim!(atan);
shim!(floor);

#[inline(always)]
pub fn ln(x: f64) -> f64 {
    #[cfg(feature = "std")]
    {
        f64::ln(x)
    }
    #[cfg(not(feature = "std"))]
    {
        libm::log(x)
    }
}

#[inline(always)]
pub fn powf(x: f64, y: f64) -> f64 {
    #[cfg(feature = "std")]
    {
        f64::powf(x, y)
    }
    #[cfg(not(feature = "std"))]
    {
        libm::pow(x, y)
    }
}

#[inline(always)]
pub fn abs(x: f64) -> f64 {
    #[cfg(feature = "std")]
    {
        f64::abs(x)
    }
    #[cfg(not(feature = "std"))]
    {
        libm::fabs(x)
    }
}

#[inline(always)]
pub fn hypot2(a: f64, b: f64) -> f64 {
    sqrt(a * a + b * b)
}

#[inline(always)]
pub fn erf(x: f64) -> f64 {
    libm::erf(x)
}

#[inline(always)]
pub fn ln_gamma(x: f64) -> f64 {
    libm::lgamma(x)
}

/// Standard normal CDF.
#[inline]
pub fn normal_cdf(x: f64) -> f64 {
    0.5 * (1.0 + erf(x / core::f64::consts::SQRT_2))
}

/// Log-density of N(mu, sigma^2) at x.
#[inline]
pub fn normal_logpdf(x: f64, mu: f64, sigma: f64) -> f64 {
    let z = (x - mu) / sigma;
    -0.5 * z * z - ln(sigma) - 0.5 * ln(2.0 * core::f64::consts::PI)
}
