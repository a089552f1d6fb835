//! Scalar kernels of the constant-curvature model that are singular in form
//! at zero bending angle.
//!
//! Every kernel has a closed-form branch and a Taylor branch. The first-order
//! kernels (`sinc`, `versc`) switch at [`THETA_EPS`] using fourth-order
//! expansions. The dynamics kernels cancel to high order in their numerators
//! (up to `θ^6`), so their closed forms lose all precision long before
//! `THETA_EPS`; they switch at [`SERIES_SWITCH`] using series carried to
//! `θ^17`, which agree with the closed forms to ~1e-16 at the seam.

/// Switch point for the first-order kernels.
pub const THETA_EPS: f64 = 1e-4;

/// Switch point for the high-order dynamics kernels.
pub const SERIES_SWITCH: f64 = 0.5;

// Coefficients of the Taylor expansions, in powers of θ² (times θ for odd
// kernels). Generated symbolically.
const M22: [f64; 9] = [
    1.0 / 16.0,
    -1.0 / 288.0,
    1.0 / 11520.0,
    -1.0 / 806400.0,
    1.0 / 87091200.0,
    -1.0 / 13412044800.0,
    1.0 / 2789705318400.0,
    -1.0 / 753220435968000.0,
    1.0 / 2.5609494822912e17,
];
const COR1: [f64; 9] = [
    -1.0 / 24.0,
    1.0 / 360.0,
    -1.0 / 13440.0,
    1.0 / 907200.0,
    -1.0 / 95800320.0,
    1.0 / 14529715200.0,
    -1.0 / 2988969984000.0,
    1.0 / 800296713216000.0,
    -1.0 / 2.7032244535296e17,
];
const COR2: [f64; 9] = [
    -1.0 / 288.0,
    1.0 / 5760.0,
    -1.0 / 268800.0,
    1.0 / 21772800.0,
    -1.0 / 2682408960.0,
    1.0 / 464950886400.0,
    -1.0 / 107602919424000.0,
    1.0 / 3.201186852864e16,
    -1.0 / 1.189418759553024e19,
];
const GRAV: [f64; 9] = [
    -13.0 / 24.0,
    121.0 / 960.0,
    -1093.0 / 107520.0,
    9841.0 / 23224320.0,
    -88573.0 / 8174960640.0,
    797161.0 / 4250979532800.0,
    -50171.0 / 21403533312000.0,
    64570081.0 / 2.913791410962432e18,
    -581130733.0 / 3.5431703557303173e21,
];
const SINC_D1: [f64; 9] = [
    -1.0 / 3.0,
    1.0 / 30.0,
    -1.0 / 840.0,
    1.0 / 45360.0,
    -1.0 / 3991680.0,
    1.0 / 518918400.0,
    -1.0 / 93405312000.0,
    1.0 / 22230464256000.0,
    -1.0 / 6758061133824000.0,
];
const VERSC_D1: [f64; 9] = [
    1.0 / 2.0,
    -1.0 / 8.0,
    1.0 / 144.0,
    -1.0 / 5760.0,
    1.0 / 403200.0,
    -1.0 / 43545600.0,
    1.0 / 6706022400.0,
    -1.0 / 1394852659200.0,
    1.0 / 376610217984000.0,
];
const SINC_D2: [f64; 9] = [
    -1.0 / 3.0,
    1.0 / 10.0,
    -1.0 / 168.0,
    1.0 / 6480.0,
    -1.0 / 443520.0,
    1.0 / 47174400.0,
    -1.0 / 7185024000.0,
    1.0 / 1482030950400.0,
    -1.0 / 397533007872000.0,
];
const VERSC_D2: [f64; 9] = [
    -1.0 / 4.0,
    1.0 / 36.0,
    -1.0 / 960.0,
    1.0 / 50400.0,
    -1.0 / 4354560.0,
    1.0 / 558835200.0,
    -1.0 / 99632332800.0,
    1.0 / 23538138624000.0,
    -1.0 / 7113748561920000.0,
];

fn even_series(coeffs: &[f64], theta: f64) -> f64 {
    let x = theta * theta;
    coeffs.iter().rev().fold(0.0, |acc, c| acc * x + c)
}

fn odd_series(coeffs: &[f64], theta: f64) -> f64 {
    theta * even_series(coeffs, theta)
}

/// `sin θ / θ`.
pub fn sinc(theta: f64) -> f64 {
    if theta.abs() < THETA_EPS {
        sinc_series(theta)
    } else {
        sinc_exact(theta)
    }
}

pub(crate) fn sinc_exact(theta: f64) -> f64 {
    theta.sin() / theta
}

pub(crate) fn sinc_series(theta: f64) -> f64 {
    let x = theta * theta;
    1.0 - x / 6.0 + x * x / 120.0
}

/// `(1 − cos θ) / θ`.
pub fn versc(theta: f64) -> f64 {
    if theta.abs() < THETA_EPS {
        versc_series(theta)
    } else {
        versc_exact(theta)
    }
}

pub(crate) fn versc_exact(theta: f64) -> f64 {
    let s = (0.5 * theta).sin();
    2.0 * s * s / theta
}

pub(crate) fn versc_series(theta: f64) -> f64 {
    let x = theta * theta;
    theta * (0.5 - x / 24.0 + x * x / 720.0)
}

/// `1 − cos θ` without cancellation.
pub fn one_minus_cos(theta: f64) -> f64 {
    let s = (0.5 * theta).sin();
    2.0 * s * s
}

macro_rules! kernel {
    ($(#[$doc:meta])* $name:ident, $exact:ident, $series:ident, $coeffs:ident, $parity:ident, |$t:ident| $body:expr) => {
        $(#[$doc])*
        pub fn $name(theta: f64) -> f64 {
            if theta.abs() < SERIES_SWITCH {
                $series(theta)
            } else {
                $exact(theta)
            }
        }

        pub(crate) fn $exact($t: f64) -> f64 {
            $body
        }

        pub(crate) fn $series(theta: f64) -> f64 {
            $parity(&$coeffs, theta)
        }
    };
}

kernel!(
    /// `(θ² − 2θ sin θ − 2cos θ + 2) / (4θ⁴)`, the mass factor of the bending inertia.
    m22,
    m22_exact,
    m22_series,
    M22,
    even_series,
    |t| (t * t - 2.0 * t * t.sin() - 2.0 * t.cos() + 2.0) / (4.0 * t.powi(4))
);

kernel!(
    /// `(θ/2 · sin θ − 2 sin²(θ/2)) / θ³`, the φ̇θ̇ Coriolis factor.
    cor1,
    cor1_exact,
    cor1_series,
    COR1,
    odd_series,
    |t| {
        let sh = (0.5 * t).sin();
        (0.5 * t * t.sin() - 2.0 * sh * sh) / t.powi(3)
    }
);

kernel!(
    /// `(θ sin θ − 2 sin²(θ/2) − θ²/2 · cos²(θ/2)) / θ⁵`, the θ̇² centrifugal factor.
    cor2,
    cor2_exact,
    cor2_series,
    COR2,
    odd_series,
    |t| {
        let (sh, ch) = (0.5 * t).sin_cos();
        (t * t.sin() - 2.0 * sh * sh - 0.5 * t * t * ch * ch) / t.powi(5)
    }
);

kernel!(
    /// `(3θ/2 · cos(θ/2) cos θ − sin(θ/2) cos θ − θ cos(θ/2)) / θ²`, the gravity factor.
    grav,
    grav_exact,
    grav_series,
    GRAV,
    odd_series,
    |t| {
        let (sh, ch) = (0.5 * t).sin_cos();
        let c = t.cos();
        (1.5 * t * ch * c - sh * c - t * ch) / (t * t)
    }
);

kernel!(
    /// First derivative of [`sinc`].
    sinc_d1,
    sinc_d1_exact,
    sinc_d1_series,
    SINC_D1,
    odd_series,
    |t| (t * t.cos() - t.sin()) / (t * t)
);

kernel!(
    /// First derivative of [`versc`].
    versc_d1,
    versc_d1_exact,
    versc_d1_series,
    VERSC_D1,
    even_series,
    |t| (t * t.sin() - one_minus_cos(t)) / (t * t)
);

kernel!(
    /// Second derivative of [`sinc`].
    sinc_d2,
    sinc_d2_exact,
    sinc_d2_series,
    SINC_D2,
    even_series,
    |t| (-t * t * t.sin() - 2.0 * t * t.cos() + 2.0 * t.sin()) / t.powi(3)
);

kernel!(
    /// Second derivative of [`versc`].
    versc_d2,
    versc_d2_exact,
    versc_d2_series,
    VERSC_D2,
    odd_series,
    |t| (t * t * t.cos() - 2.0 * t * t.sin() + 2.0 * one_minus_cos(t)) / t.powi(3)
);
