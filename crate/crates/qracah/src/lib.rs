//! Numerics for the q-Racah random lozenge tilings of a hexagon.
//!
//! * [`qspecial`]: q-Pochhammer symbols, theta functions, terminating series.
//! * [`hexagon`]: slices, parameter zones, the scaled region classifier.
//! * [`ope`]: the orthogonal polynomial ensemble on a single slice.
//! * [`kernels2d`]: two-dimensional kernel, inverse Kasteleyn matrix, barcode kernel.
//! * [`limits`]: limiting operators, the functions `𝓕_n`, limiting barcode kernel.
//! * [`concentration`]: the piecewise-linear exponent calculus.
//! * [`sampling`]: exact enumeration, Glauber dynamics, barcode statistics.

pub mod concentration;
pub mod error;
pub mod hexagon;
pub mod kernels2d;
pub mod limits;
pub mod num;
pub mod ope;
pub mod qspecial;
pub mod sampling;

pub use error::{Error, Result};
pub use hexagon::HexagonParams;
pub use num::{BigComplex, BigReal, Precision, QRacahParams};
pub use qspecial::QPower;

/// Version string of the MPFR library the numerics are linked against.
pub fn backend_version() -> String {
    // SAFETY: mpfr_get_version returns a pointer to a static NUL-terminated string.
    let raw = unsafe { std::ffi::CStr::from_ptr(gmp_mpfr_sys::mpfr::get_version()) };
    format!("mpfr-{}", raw.to_string_lossy())
}
