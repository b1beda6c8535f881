pub mod quad;
pub mod roots;

pub use quad::{integrate, integrate_turning, integrate_with_breaks, QuadOptions, QuadResult};
pub use roots::{bisect, scan_roots};

pub const TWO_PI: f64 = 2.0 * std::f64::consts::PI;

/// Reduce an angle into `[0, 2π)`.
pub fn wrap_angle(x: f64) -> f64 {
    let r = x.rem_euclid(TWO_PI);
    if r >= TWO_PI {
        0.0
    } else {
        r
    }
}
