//! Smooth approximations to the step indicator I(v > 0).
//!
//! Two families are provided: the standard normal CDF (order b = 2) and a
//! degree-7 polynomial taper supported on [-5, 5] (order b = 4). Both
//! interpolate from 0 to 1, have bounded first and second derivatives, and
//! satisfy the moment conditions that drive the estimator's bias order: the
//! first b-1 moments of K' vanish while the b-th does not. The polynomial
//! family buys the higher order at the price of non-monotonicity — it
//! overshoots 1 slightly near the right edge of its support (max ~1.0533 at
//! v = 5/sqrt(3)) and dips below 0 symmetrically.

use crate::error::{Error, Result};
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum KernelFamily {
    #[serde(rename = "gaussian-cdf")]
    GaussianCdf,
    #[serde(rename = "polynomial-7")]
    Polynomial7,
}

/// Kernel descriptor: family plus the derived order and bandwidth exponent.
///
/// The bandwidth exponent is the rate n^e used by the bandwidth rule:
/// e = -1/5 for the order-2 kernel and -1/9 for the order-4 one, matching
/// the undersmoothing ranges the estimator's asymptotics require.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SmoothingKernel {
    pub family: KernelFamily,
    pub order_b: u32,
    pub bandwidth_exponent: f64,
}

impl SmoothingKernel {
    pub fn gaussian_cdf() -> Self {
        SmoothingKernel {
            family: KernelFamily::GaussianCdf,
            order_b: 2,
            bandwidth_exponent: -1.0 / 5.0,
        }
    }

    pub fn polynomial7() -> Self {
        SmoothingKernel {
            family: KernelFamily::Polynomial7,
            order_b: 4,
            bandwidth_exponent: -1.0 / 9.0,
        }
    }

    /// K(v). Panics on non-finite input.
    pub fn evaluate(&self, v: f64) -> f64 {
        assert!(v.is_finite(), "kernel argument must be finite");
        match self.family {
            KernelFamily::GaussianCdf => normal_cdf(v),
            KernelFamily::Polynomial7 => poly7(v),
        }
    }

    /// K'(v), the exact analytic derivative of `evaluate`.
    pub fn derivative1(&self, v: f64) -> f64 {
        assert!(v.is_finite(), "kernel argument must be finite");
        match self.family {
            KernelFamily::GaussianCdf => normal_pdf(v),
            KernelFamily::Polynomial7 => poly7_d1(v),
        }
    }

    /// K''(v).
    pub fn derivative2(&self, v: f64) -> f64 {
        assert!(v.is_finite(), "kernel argument must be finite");
        match self.family {
            KernelFamily::GaussianCdf => -v * normal_pdf(v),
            KernelFamily::Polynomial7 => poly7_d2(v),
        }
    }

    /// Half-width of the interval outside which K' is numerically zero.
    /// Exact for the polynomial family; |v| = 12 truncates normal-density
    /// tails below 1e-30.
    pub fn support_limit(&self) -> f64 {
        match self.family {
            KernelFamily::GaussianCdf => 12.0,
            KernelFamily::Polynomial7 => 5.0,
        }
    }

    /// Integral of v^i K'(v) dv over the effective support, by adaptive
    /// quadrature. The order conditions say this vanishes for 1 <= i < b
    /// and not at i = b.
    pub fn moment_integral(&self, i: u32) -> Result<f64> {
        if i > 2 * self.order_b {
            return Err(Error::InvalidInput(format!(
                "moment order {i} exceeds 2b = {}",
                2 * self.order_b
            )));
        }
        let lim = self.support_limit();
        self.quad(|v| v.powi(i as i32) * self.derivative1(v), -lim, lim)
    }

    /// a1 = 2 * integral of K'(v)^2 dv (appears in the estimator's
    /// asymptotic variance).
    pub fn a1(&self) -> f64 {
        let lim = self.support_limit();
        self.quad(|v| self.derivative1(v).powi(2), -lim, lim)
            .map(|x| 2.0 * x)
            .expect("a1 integrand is smooth and bounded")
    }

    /// a2 = integral of v K''(v) dv; equals -1 for any kernel whose K'
    /// integrates to one and decays at the support edge.
    pub fn a2(&self) -> f64 {
        let lim = self.support_limit();
        self.quad(|v| v * self.derivative2(v), -lim, lim)
            .expect("a2 integrand is smooth and bounded")
    }

    fn quad(&self, f: impl Fn(f64) -> f64, a: f64, b: f64) -> Result<f64> {
        // Split at zero: the integrands are even/odd about the origin and
        // the halves converge faster separately.
        let left = adaptive_simpson(&f, a, 0.0, 0.5e-10, 48);
        let right = adaptive_simpson(&f, 0.0, b, 0.5e-10, 48);
        match (left, right) {
            (Some(l), Some(r)) => Ok(l + r),
            _ => Err(Error::Quadrature(format!(
                "kernel moment integral on [{a}, {b}]"
            ))),
        }
    }
}

/// Degree-7 taper: 0 below -5, 1 above 5, and on [-5, 5]
/// 0.5 + (105/64) [u - (5/3)u^3 + (7/5)u^5 - (3/7)u^7] with u = v/5.
fn poly7(v: f64) -> f64 {
    if v <= -5.0 {
        return 0.0;
    }
    if v >= 5.0 {
        return 1.0;
    }
    let u = v / 5.0;
    let u2 = u * u;
    // Horner in u^2, one factor of u outside.
    let s = u * (1.0 + u2 * (-5.0 / 3.0 + u2 * (7.0 / 5.0 + u2 * (-3.0 / 7.0))));
    0.5 + 105.0 / 64.0 * s
}

fn poly7_d1(v: f64) -> f64 {
    if v.abs() >= 5.0 {
        return 0.0;
    }
    let u = v / 5.0;
    let t = 1.0 - u * u;
    105.0 / 320.0 * t * t * (1.0 - 3.0 * u * u)
}

fn poly7_d2(v: f64) -> f64 {
    if v.abs() >= 5.0 {
        return 0.0;
    }
    let u = v / 5.0;
    let u2 = u * u;
    105.0 / 1600.0 * u * (-10.0 + u2 * (28.0 - 18.0 * u2))
}

const FRAC_1_SQRT_2PI: f64 = 0.3989422804014326779399461;

pub(crate) fn normal_pdf(v: f64) -> f64 {
    FRAC_1_SQRT_2PI * (-0.5 * v * v).exp()
}

/// Standard normal CDF via the rational erfc approximation below; absolute
/// error well under 1e-14, no external statistics dependency.
pub(crate) fn normal_cdf(v: f64) -> f64 {
    0.5 * erfc(-v * std::f64::consts::FRAC_1_SQRT_2)
}

// Rational minimax approximation to erfc in three ranges (Cody's classic
// double-precision scheme). Coefficients reproduce erfc to ~1e-16 relative
// over the ranges where it is representable.
const ERF_A: [f64; 5] = [
    3.16112374387056560e0,
    1.13864154151050156e2,
    3.77485237685302021e2,
    3.20937758913846947e3,
    1.85777706184603153e-1,
];
const ERF_B: [f64; 4] = [
    2.36012909523441209e1,
    2.44024637934444173e2,
    1.28261652607737228e3,
    2.84423683343917062e3,
];
const ERF_C: [f64; 9] = [
    5.64188496988670089e-1,
    8.88314979438837594e0,
    6.61191906371416295e1,
    2.98635138197400131e2,
    8.81952221241769090e2,
    1.71204761263407058e3,
    2.05107837782607147e3,
    1.23033935479799725e3,
    2.15311535474403846e-8,
];
const ERF_D: [f64; 8] = [
    1.57449261107098347e1,
    1.17693950891312499e2,
    5.37181101862009858e2,
    1.62138957456669019e3,
    3.29079923573345963e3,
    4.36261909014324716e3,
    3.43936767414372164e3,
    1.23033935480374942e3,
];
const ERF_P: [f64; 6] = [
    3.05326634961232344e-1,
    3.60344899949804439e-1,
    1.25781726111229246e-1,
    1.60837851487422766e-2,
    6.58749161529837803e-4,
    1.63153871373020978e-2,
];
const ERF_Q: [f64; 5] = [
    2.56852019228982242e0,
    1.87295284992346047e0,
    5.27905102951428412e-1,
    6.05183413124413191e-2,
    2.33520497626869185e-3,
];
const SQRT_PI_INV: f64 = 5.6418958354775628695e-1;

fn erfc(x: f64) -> f64 {
    let y = x.abs();
    if y <= 0.46875 {
        // Central range: compute erf directly, erfc = 1 - erf.
        let ysq = if y > 1e-300 { y * y } else { 0.0 };
        let mut num = ERF_A[4] * ysq;
        let mut den = ysq;
        for i in 0..3 {
            num = (num + ERF_A[i]) * ysq;
            den = (den + ERF_B[i]) * ysq;
        }
        return 1.0 - x * (num + ERF_A[3]) / (den + ERF_B[3]);
    }
    let result = if y <= 4.0 {
        let mut num = ERF_C[8] * y;
        let mut den = y;
        for i in 0..7 {
            num = (num + ERF_C[i]) * y;
            den = (den + ERF_D[i]) * y;
        }
        let r = (num + ERF_C[7]) / (den + ERF_D[7]);
        scaled_exp(y) * r
    } else if y <= 26.543 {
        let ysq = 1.0 / (y * y);
        let mut num = ERF_P[5] * ysq;
        let mut den = ysq;
        for i in 0..4 {
            num = (num + ERF_P[i]) * ysq;
            den = (den + ERF_Q[i]) * ysq;
        }
        let r = ysq * (num + ERF_P[4]) / (den + ERF_Q[4]);
        scaled_exp(y) * ((SQRT_PI_INV - r) / y)
    } else {
        0.0
    };
    if x < 0.0 {
        2.0 - result
    } else {
        result
    }
}

/// exp(-y^2) evaluated with the split y^2 = hi^2 + (y-hi)(y+hi) to avoid
/// the cancellation that squaring large y directly would introduce.
fn scaled_exp(y: f64) -> f64 {
    let hi = (y * 16.0).trunc() / 16.0;
    let del = (y - hi) * (y + hi);
    (-hi * hi).exp() * (-del).exp()
}

/// Recursive adaptive Simpson with Richardson correction. Returns `None`
/// if the depth budget runs out before the tolerance is met.
pub(crate) fn adaptive_simpson(
    f: &impl Fn(f64) -> f64,
    a: f64,
    b: f64,
    tol: f64,
    depth: u32,
) -> Option<f64> {
    let m = 0.5 * (a + b);
    let (fa, fm, fb) = (f(a), f(m), f(b));
    let whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
    simpson_step(f, a, b, fa, fm, fb, whole, tol, depth)
}

#[allow(clippy::too_many_arguments)]
fn simpson_step(
    f: &impl Fn(f64) -> f64,
    a: f64,
    b: f64,
    fa: f64,
    fm: f64,
    fb: f64,
    whole: f64,
    tol: f64,
    depth: u32,
) -> Option<f64> {
    let m = 0.5 * (a + b);
    let lm = 0.5 * (a + m);
    let rm = 0.5 * (m + b);
    let (flm, frm) = (f(lm), f(rm));
    let left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
    let right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
    let delta = left + right - whole;
    if delta.abs() <= 15.0 * tol {
        return Some(left + right + delta / 15.0);
    }
    if depth == 0 {
        return None;
    }
    let l = simpson_step(f, a, m, fa, flm, fm, left, 0.5 * tol, depth - 1)?;
    let r = simpson_step(f, m, b, fm, frm, fb, right, 0.5 * tol, depth - 1)?;
    Some(l + r)
}

#[cfg(test)]
mod tests {
    use super::*;

    // Reference normal CDF values computed with 30-digit arithmetic.
    const PHI_TABLE: [(f64, f64); 20] = [
        (0.0, 0.5),
        (0.1, 0.53982783727702898),
        (0.46875, 0.68037582848288237),
        (0.5, 0.6914624612740131),
        (1.0, 0.84134474606854295),
        (1.96, 0.97500210485177957),
        (2.0, 0.97724986805182079),
        (2.5758293035489, 0.99499999999999999),
        (3.0, 0.99865010196836991),
        (4.0, 0.99996832875816688),
        (4.5, 0.99999660232687527),
        (6.0, 0.99999999901341235),
        (8.0, 0.99999999999999938),
        (-0.3, 0.38208857781104736),
        (-1.0, 0.15865525393145705),
        (-2.326347874040841, 0.010000000000000003),
        (-5.0, 2.8665157187919391e-7),
        (-8.0, 6.2209605742717841e-16),
        (-10.0, 7.6198530241605261e-24),
        (0.0001, 0.50003989422797365),
    ];

    #[test]
    fn gaussian_cdf_matches_reference_table() {
        let k = SmoothingKernel::gaussian_cdf();
        for &(v, phi) in &PHI_TABLE {
            let got = k.evaluate(v);
            assert!(
                (got - phi).abs() < 1e-13,
                "Phi({v}) = {got}, want {phi}"
            );
        }
        // Relative accuracy deep in the lower tail.
        let got = k.evaluate(-12.0);
        let want = 1.776482112077679e-33;
        assert!(((got - want) / want).abs() < 1e-12);
        assert_eq!(k.evaluate(12.0), 1.0);
        assert_eq!(k.evaluate(40.0), 1.0);
        assert_eq!(k.evaluate(-40.0), 0.0);
    }

    #[test]
    fn gaussian_derivatives_at_reference_points() {
        let k = SmoothingKernel::gaussian_cdf();
        assert!((k.derivative1(0.0) - 0.3989422804014327).abs() < 1e-15);
        assert_eq!(k.derivative2(0.0), 0.0);
        // phi'(1) = -phi(1)
        assert!((k.derivative2(1.0) + 0.24197072451914337).abs() < 1e-15);
    }

    #[test]
    fn poly7_reference_points() {
        let k = SmoothingKernel::polynomial7();
        assert_eq!(k.evaluate(0.0), 0.5);
        assert_eq!(k.evaluate(5.0), 1.0);
        assert_eq!(k.evaluate(-5.0), 0.0);
        assert_eq!(k.evaluate(7.3), 1.0);
        assert_eq!(k.evaluate(-6.0), 0.0);
        assert!((k.derivative1(0.0) - 0.328125).abs() < 1e-15);
        assert_eq!(k.derivative1(5.0), 0.0);
        assert_eq!(k.derivative1(-5.0), 0.0);
        // Spot values against 30-digit evaluation of the closed forms.
        assert!((k.evaluate(1.0) - 0.806976).abs() < 1e-14);
        assert!((k.evaluate(2.5) - 1.0447998046875).abs() < 1e-14);
        assert!((k.evaluate(-3.2) + 0.0489013106688).abs() < 1e-14);
        assert!((k.derivative1(1.0) - 0.266112).abs() < 1e-14);
        assert!((k.derivative2(1.0) + 0.116928).abs() < 1e-14);
        assert!((k.derivative2(2.5) + 0.1353515625).abs() < 1e-14);
        assert_eq!(k.derivative2(5.0), 0.0);
        assert_eq!(k.derivative2(-5.0), 0.0);
    }

    #[test]
    fn poly7_overshoot_is_bounded() {
        let k = SmoothingKernel::polynomial7();
        // The maximum sits at v = 5/sqrt(3); value 1.0532940079733914.
        let peak = k.evaluate(5.0 / 3f64.sqrt());
        assert!((peak - 1.0532940079733914).abs() < 1e-12);
        let mut max_abs: f64 = 0.0;
        let mut v = -6.0;
        while v <= 6.0 {
            max_abs = max_abs.max(k.evaluate(v).abs());
            v += 1e-3;
        }
        assert!(max_abs <= 1.0532940079733914 + 1e-12);
    }

    #[test]
    fn derivatives_match_finite_differences() {
        let grid = [-4.9, -3.0, -1.0, 0.0, 1.0, 3.0, 4.9];
        let step = 1e-5;
        for k in [
            SmoothingKernel::gaussian_cdf(),
            SmoothingKernel::polynomial7(),
        ] {
            for &v in &grid {
                let fd1 = (k.evaluate(v + step) - k.evaluate(v - step)) / (2.0 * step);
                let d1 = k.derivative1(v);
                let scale = fd1.abs().max(1e-3);
                assert!(
                    ((d1 - fd1) / scale).abs() < 1e-6,
                    "{:?} K' at {v}: {d1} vs fd {fd1}",
                    k.family
                );
                let fd2 = (k.derivative1(v + step) - k.derivative1(v - step)) / (2.0 * step);
                let d2 = k.derivative2(v);
                let scale = fd2.abs().max(1e-3);
                assert!(
                    ((d2 - fd2) / scale).abs() < 1e-6,
                    "{:?} K'' at {v}: {d2} vs fd {fd2}",
                    k.family
                );
            }
        }
    }

    #[test]
    fn moment_conditions_hold() {
        let g = SmoothingKernel::gaussian_cdf();
        assert!((g.moment_integral(0).unwrap() - 1.0).abs() < 1e-8);
        assert!(g.moment_integral(1).unwrap().abs() < 1e-8);
        let m2 = g.moment_integral(2).unwrap();
        assert!((m2 - 1.0).abs() < 1e-8, "gaussian 2nd moment {m2}");

        let p = SmoothingKernel::polynomial7();
        assert!((p.moment_integral(0).unwrap() - 1.0).abs() < 1e-8);
        for i in 1..=3 {
            let m = p.moment_integral(i).unwrap();
            assert!(m.abs() < 1e-8, "poly7 moment {i} = {m}");
        }
        // b-th moment is emphatically nonzero: -625/33.
        let m4 = p.moment_integral(4).unwrap();
        assert!((m4 - (-18.939393939393939)).abs() < 1e-7, "poly7 m4 {m4}");
        assert!(m4.abs() > 1e-3);
    }

    #[test]
    fn variance_constants() {
        let g = SmoothingKernel::gaussian_cdf();
        // 2 * int phi^2 = 1/sqrt(pi)
        assert!((g.a1() - 0.56418958354775629).abs() < 1e-10);
        assert!((g.a2() + 1.0).abs() < 1e-10);
        let p = SmoothingKernel::polynomial7();
        assert!((p.a1() - 0.56293706293706294).abs() < 1e-10);
        assert!((p.a2() + 1.0).abs() < 1e-10);
    }

    #[test]
    fn moment_order_cap_is_enforced() {
        let g = SmoothingKernel::gaussian_cdf();
        assert!(g.moment_integral(4).is_ok());
        assert!(g.moment_integral(5).is_err());
    }
}
