//! `f64` math methods for `no_std` builds, backed by libm. With `std` the
//! inherent methods take precedence and this trait is unused.

#[allow(dead_code)]
pub(crate) trait F64Ext {
    fn sqrt(self) -> f64;
    fn powi(self, n: i32) -> f64;
    fn powf(self, e: f64) -> f64;
    fn floor(self) -> f64;
    fn ceil(self) -> f64;
    fn round(self) -> f64;
    fn ln(self) -> f64;
    fn exp(self) -> f64;
    fn log2(self) -> f64;
}

impl F64Ext for f64 {
    fn sqrt(self) -> f64 {
        libm::sqrt(self)
    }
    fn powi(self, n: i32) -> f64 {
        libm::pow(self, n as f64)
    }
    fn powf(self, e: f64) -> f64 {
        libm::pow(self, e)
    }
    fn floor(self) -> f64 {
        libm::floor(self)
    }
    fn ceil(self) -> f64 {
        libm::ceil(self)
    }
    fn round(self) -> f64 {
        libm::round(self)
    }
    fn ln(self) -> f64 {
        libm::log(self)
    }
    fn exp(self) -> f64 {
        libm::exp(self)
    }
    fn log2(self) -> f64 {
        libm::log2(self)
    }
}
