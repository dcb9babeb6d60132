//! Scalar math routed through `std` intrinsics or `libm`, plus seed mixing.

#[cfg(feature = "std")]
macro_rules! shim {
    ($name:ident, $($arg:ident),+) => {
        #[inline(always)]
        pub(crate) fn $name($($arg: f64),+) -> f64 {
            f64::$name($($arg),+)
        }
    };
}

#[cfg(not(feature = "std"))]
macro_rules! shim {
    ($name:ident, $($arg:ident),+) => {
        #[inline(always)]
        pub(crate) fn $name($($arg: f64),+) -> f64 {
            libm_dispatch!($name, $($arg),+)
        }
    };
}

#[cfg(not(feature = "std"))]
macro_rules! libm_dispatch {
    (sin, $x:ident) => {
        libm::sin($x)
    };
    (cos, $x:ident) => {
        libm::cos($x)
    };
    (sqrt, $x:ident) => {
        libm::sqrt($x)
    };
    (abs, $x:ident) => {
        libm::fabs($x)
    };
    (round, $x:ident) => {
        libm::round($x)
    };
    (powf, $x:ident, $y:ident) => {
        libm::pow($x, $y)
    };
}

shim!(sin, x);
shim!(cos, x);
shim!(sqrt, x);
shim!(abs, x);
shim!(round, x);
shim!(powf, x, y);

/// SplitMix64-style avalanche combining two words into one well-mixed word.
///
/// Fixed for the lifetime of the crate: derived seeds (per mode, per step,
/// per sample) feed into stored noise paths and reports, so changing this
/// function changes every downstream number.
#[inline]
pub(crate) fn mix64(a: u64, b: u64) -> u64 {
    let mut z = a ^ b.wrapping_mul(0x9E37_79B9_7F4A_7C15);
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn mix64_spreads_small_inputs() {
        let a = mix64(0, 0);
        let b = mix64(0, 1);
        let c = mix64(1, 0);
        assert_ne!(a, b);
        assert_ne!(a, c);
        assert_ne!(b, c);
        // avalanche: flipping one input bit flips roughly half the output bits
        let flips = (mix64(42, 7) ^ mix64(42, 6)).count_ones();
        assert!((16..=48).contains(&flips), "weak avalanche: {flips}");
    }
}
