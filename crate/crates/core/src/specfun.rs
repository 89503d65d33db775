//! Gamma and Hurwitz zeta evaluation to near machine precision.
//!
//! Everything here is self-contained: the Gamma function uses a fixed
//! Lanczos rational approximation and the Hurwitz zeta uses Euler-Maclaurin
//! summation with Bernoulli corrections up to B14. Both are pure functions
//! with no shared state, so they are safe to call from any thread.

use crate::error::{Error, Result};

/// Accuracy budget for series evaluation.
#[derive(Debug, Clone, Copy, serde::Serialize, serde::Deserialize)]
pub struct Accuracy {
    /// Target relative error.
    pub target_rel_err: f64,
    /// Hard cap on explicitly summed terms.
    pub max_terms: usize,
}

impl Default for Accuracy {
    fn default() -> Self {
        Accuracy {
            target_rel_err: 1e-12,
            max_terms: 100_000_000,
        }
    }
}

impl Accuracy {
    pub fn new(target_rel_err: f64, max_terms: usize) -> Result<Self> {
        if !(target_rel_err > 0.0) {
            return Err(Error::domain("target_rel_err must be > 0"));
        }
        if max_terms < 1 {
            return Err(Error::domain("max_terms must be >= 1"));
        }
        Ok(Accuracy {
            target_rel_err,
            max_terms,
        })
    }
}

// Lanczos coefficients (g = 7, 9 terms) as used by the GNU Scientific Library.
const LANCZOS_G: f64 = 7.0;
const LANCZOS_COEF: [f64; 9] = [
    0.99999999999980993,
    676.5203681218851,
    -1259.1392167224028,
    771.32342877765313,
    -176.61502916214059,
    12.507343278686905,
    -0.13857109526572012,
    9.9843695780195716e-6,
    1.5056327351493116e-7,
];

const SQRT_TWO_PI: f64 = 2.5066282746310002;

fn lanczos_series(x: f64) -> f64 {
    let mut t = LANCZOS_COEF[0];
    for (i, c) in LANCZOS_COEF.iter().enumerate().skip(1) {
        t += c / (x + i as f64);
    }
    t
}

/// Gamma function for positive real arguments, relative error below 1e-13.
pub fn gamma(y: f64) -> Result<f64> {
    if !(y > 0.0) || !y.is_finite() {
        return Err(Error::domain(format!("gamma requires y > 0, got {y}")));
    }
    if y < 0.5 {
        // Reflection keeps the rational approximation on its accurate range.
        let pi_y = std::f64::consts::PI * y;
        return Ok(std::f64::consts::PI / (pi_y.sin() * gamma(1.0 - y)?));
    }
    let x = y - 1.0;
    let t = lanczos_series(x);
    let w = x + LANCZOS_G + 0.5;
    let v = SQRT_TWO_PI * w.powf(x + 0.5) * (-w).exp() * t;
    if v.is_finite() {
        Ok(v)
    } else {
        // Large arguments overflow the direct product; fall back to exp(ln).
        Ok(ln_gamma(y)?.exp())
    }
}

/// Natural log of the Gamma function for y > 0.
pub fn ln_gamma(y: f64) -> Result<f64> {
    if !(y > 0.0) || !y.is_finite() {
        return Err(Error::domain(format!("ln_gamma requires y > 0, got {y}")));
    }
    if y < 0.5 {
        let pi_y = std::f64::consts::PI * y;
        return Ok(std::f64::consts::PI.ln() - pi_y.sin().ln() - ln_gamma(1.0 - y)?);
    }
    let x = y - 1.0;
    let t = lanczos_series(x);
    let w = x + LANCZOS_G + 0.5;
    Ok(SQRT_TWO_PI.ln() + (x + 0.5) * w.ln() - w + t.ln())
}

// B_{2j} / (2j)! for j = 1..=7, the Euler-Maclaurin correction weights.
const BERNOULLI_OVER_FACT: [f64; 7] = [
    8.333333333333333e-2,    // B2/2!
    -1.388888888888889e-3,   // B4/4!
    3.306878306878307e-5,    // B6/6!
    -8.267195767195768e-7,   // B8/8!
    2.08767569878681e-8,     // B10/10!
    -5.2841901386874932e-10, // B12/12!
    1.3382536530684679e-11,  // B14/14!
];
// B16/16!, used only to size the truncation error of the correction series.
const NEXT_CORRECTION_WEIGHT: f64 = -3.3896802963225827e-13;

/// Hurwitz zeta with the given accuracy budget.
pub fn hurwitz_zeta_with(s: f64, a: f64, acc: Accuracy) -> Result<f64> {
    if !(s > 1.0) || !s.is_finite() {
        return Err(Error::domain(format!(
            "hurwitz_zeta requires s > 1, got {s}"
        )));
    }
    if !(a > 0.0) || !a.is_finite() {
        return Err(Error::domain(format!(
            "hurwitz_zeta requires a > 0, got {a}"
        )));
    }

    // Euler-Maclaurin: direct sum of the first n terms, integral and midpoint
    // corrections at the cut, then Bernoulli corrections. n grows until the
    // first omitted correction term is negligible.
    let mut n = (1.3 * s + 8.0).ceil().max(10.0) as usize;
    loop {
        let cut = n as f64 + a;
        let mut direct = 0.0f64;
        let mut comp = 0.0f64; // Kahan compensation
        for k in 0..n {
            let term = (k as f64 + a).powf(-s);
            let t = direct + term;
            comp += if direct.abs() >= term.abs() {
                (direct - t) + term
            } else {
                (term - t) + direct
            };
            direct = t;
        }
        direct += comp;

        let tail_integral = cut.powf(1.0 - s) / (s - 1.0);
        let half_term = 0.5 * cut.powf(-s);

        // Correction term j carries the rising factorial s(s+1)...(s+2j-2)
        // and the power cut^{-s-2j+1}; both advance two steps per term.
        let mut corrections = 0.0f64;
        let mut rising = s;
        let mut odd_factor = s + 1.0;
        let mut pw = cut.powf(-s - 1.0);
        let inv_cut2 = 1.0 / (cut * cut);
        for w in BERNOULLI_OVER_FACT {
            corrections += w * rising * pw;
            rising *= odd_factor * (odd_factor + 1.0);
            odd_factor += 2.0;
            pw *= inv_cut2;
        }
        // Size of the first omitted correction, relative stop criterion.
        let omitted = (NEXT_CORRECTION_WEIGHT * rising * pw).abs();

        let value = direct + tail_integral + half_term + corrections;
        if omitted <= 0.25 * acc.target_rel_err * value.abs() || n >= acc.max_terms {
            if omitted > acc.target_rel_err * value.abs() {
                return Err(Error::convergence(
                    format!("hurwitz_zeta({s}, {a}) Euler-Maclaurin truncation"),
                    value,
                    omitted,
                ));
            }
            return Ok(value);
        }
        n *= 2;
    }
}

/// Hurwitz zeta `sum_{k>=0} (k+a)^{-s}` for s > 1, a > 0.
pub fn hurwitz_zeta(s: f64, a: f64) -> Result<f64> {
    hurwitz_zeta_with(s, a, Accuracy::default())
}

/// Riemann zeta for s > 1; identical to `hurwitz_zeta(s, 1)`.
pub fn riemann_zeta(s: f64) -> Result<f64> {
    hurwitz_zeta(s, 1.0)
}

/// Unnormalized upper incomplete gamma integral for s > 0, x >= 0.
///
/// Series expansion below the diagonal, Lentz continued fraction above it.
pub(crate) fn upper_incomplete_gamma(s: f64, x: f64) -> Result<f64> {
    if !(s > 0.0) {
        return Err(Error::domain(format!(
            "upper_incomplete_gamma requires s > 0, got {s}"
        )));
    }
    if !(x >= 0.0) {
        return Err(Error::domain(format!(
            "upper_incomplete_gamma requires x >= 0, got {x}"
        )));
    }
    if x == 0.0 {
        return gamma(s);
    }
    let ln_prefactor = s * x.ln() - x;
    if x < s + 1.0 {
        // P(s,x) by series, then complement.
        let mut term = 1.0 / s;
        let mut sum = term;
        let mut denom = s;
        for _ in 0..500 {
            denom += 1.0;
            term *= x / denom;
            sum += term;
            if term.abs() < sum.abs() * 1e-16 {
                break;
            }
        }
        let p = (ln_prefactor.exp()) * sum;
        Ok((gamma(s)? - p).max(0.0))
    } else {
        // Continued fraction for Q(s,x), modified Lentz.
        let tiny = 1e-300;
        let mut b = x + 1.0 - s;
        let mut c = 1.0 / tiny;
        let mut d = 1.0 / b;
        let mut h = d;
        for i in 1..500 {
            let an = -(i as f64) * (i as f64 - s);
            b += 2.0;
            d = an * d + b;
            if d.abs() < tiny {
                d = tiny;
            }
            c = b + an / c;
            if c.abs() < tiny {
                c = tiny;
            }
            d = 1.0 / d;
            let delta = d * c;
            h *= delta;
            if (delta - 1.0).abs() < 1e-16 {
                break;
            }
        }
        Ok(ln_prefactor.exp() * h)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const PI: f64 = std::f64::consts::PI;

    fn rel(a: f64, b: f64) -> f64 {
        (a - b).abs() / b.abs().max(f64::MIN_POSITIVE)
    }

    #[test]
    fn accuracy_validation() {
        assert!(Accuracy::new(1e-12, 100).is_ok());
        assert!(Accuracy::new(0.0, 100).is_err());
        assert!(Accuracy::new(-1e-9, 100).is_err());
        assert!(Accuracy::new(1e-12, 0).is_err());
        let tight = Accuracy::new(1e-13, 1_000_000).unwrap();
        let v = hurwitz_zeta_with(2.0, 1.0, tight).unwrap();
        assert!((v - PI * PI / 6.0).abs() < 1e-12);
    }

    #[test]
    fn gamma_classical_values() {
        assert!(rel(gamma(1.0).unwrap(), 1.0) < 1e-13);
        assert!(rel(gamma(5.0).unwrap(), 24.0) < 1e-13);
        assert!(rel(gamma(0.5).unwrap(), 1.7724538509055160273) < 1e-13);
        assert!(rel(gamma(2.0).unwrap(), 1.0) < 1e-13);
    }

    #[test]
    fn gamma_rejects_nonpositive() {
        assert!(gamma(0.0).is_err());
        assert!(gamma(-1.5).is_err());
        assert!(gamma(f64::NAN).is_err());
    }

    #[test]
    fn gamma_recurrence_grid() {
        // |Γ(y+1) − y·Γ(y)| ≤ 1e-12 Γ(y+1) across (0.1, 50).
        let mut y = 0.1;
        while y < 50.0 {
            let lhs = gamma(y + 1.0).unwrap();
            let rhs = y * gamma(y).unwrap();
            assert!(
                rel(lhs, rhs) < 1e-12,
                "recurrence failed at y={y}: {lhs} vs {rhs}"
            );
            y += 0.37;
        }
    }

    #[test]
    fn ln_gamma_matches_gamma() {
        for y in [0.3, 0.7, 1.5, 4.2, 20.0, 140.0] {
            assert!(rel(ln_gamma(y).unwrap().exp(), gamma(y).unwrap()) < 1e-12);
        }
        // Beyond overflow of Γ itself, ln Γ must still be finite.
        assert!(ln_gamma(400.0).unwrap().is_finite());
    }

    #[test]
    fn hurwitz_classical_values() {
        assert!(rel(hurwitz_zeta(2.0, 1.0).unwrap(), PI * PI / 6.0) < 1e-12);
        // ζ(s, 1/2) = (2^s − 1) ζ(s), cross-checked by partial summation.
        assert!(rel(hurwitz_zeta(3.0, 0.5).unwrap(), 8.414398322117160) < 1e-12);
        assert!(rel(hurwitz_zeta(2.0, 0.5).unwrap(), PI * PI / 2.0) < 1e-12);
    }

    #[test]
    fn riemann_values() {
        assert!(rel(riemann_zeta(2.0).unwrap(), 1.644934066848226) < 1e-12);
        assert!(rel(riemann_zeta(4.0).unwrap(), 1.082323233711138) < 1e-12);
        assert!(rel(riemann_zeta(1.5).unwrap(), 2.612375348685488) < 1e-12);
    }

    #[test]
    fn riemann_is_hurwitz_at_one() {
        for s in [1.2, 1.5, 2.0, 3.7, 9.0] {
            let r = riemann_zeta(s).unwrap();
            let h = hurwitz_zeta(s, 1.0).unwrap();
            assert_eq!(r.to_bits(), h.to_bits());
        }
    }

    #[test]
    fn hurwitz_domain_errors() {
        assert!(hurwitz_zeta(1.0, 1.0).is_err());
        assert!(hurwitz_zeta(0.5, 1.0).is_err());
        assert!(hurwitz_zeta(2.0, 0.0).is_err());
        assert!(hurwitz_zeta(2.0, -3.0).is_err());
        assert!(riemann_zeta(1.0).is_err());
    }

    #[test]
    fn hurwitz_monotone_in_a() {
        for s in [1.3, 2.0, 4.5] {
            let mut prev = f64::INFINITY;
            let mut a = 0.5;
            while a <= 3.0 + 1e-9 {
                let v = hurwitz_zeta(s, a).unwrap();
                assert!(v < prev, "zeta({s}, a) not decreasing at a={a}");
                prev = v;
                a += 0.1;
            }
        }
    }

    // Brute-force oracle: partial sum to N plus integral tail bracket.
    fn hurwitz_brute_bracket(s: f64, a: f64, n: usize) -> (f64, f64) {
        let mut sum = 0.0f64;
        let mut comp = 0.0f64;
        for k in 0..n {
            let term = (k as f64 + a).powf(-s);
            let t = sum + term;
            comp += if sum.abs() >= term.abs() {
                (sum - t) + term
            } else {
                (term - t) + sum
            };
            sum = t;
        }
        sum += comp;
        let lower_tail = (n as f64 + a).powf(1.0 - s) / (s - 1.0);
        let upper_tail = (n as f64 - 1.0 + a).powf(1.0 - s) / (s - 1.0);
        (sum + lower_tail, sum + upper_tail)
    }

    #[test]
    fn hurwitz_oracle_bracket() {
        for (s, a) in [(1.5, 1.0), (2.0, 0.5), (3.3, 2.7), (1.2, 0.1)] {
            let (lo, hi) = hurwitz_brute_bracket(s, a, 1_000_000);
            let v = hurwitz_zeta(s, a).unwrap();
            assert!(
                v >= lo - 1e-10 * v.abs() && v <= hi + 1e-10 * v.abs(),
                "zeta({s},{a})={v} outside oracle bracket [{lo},{hi}]"
            );
        }
    }

    #[test]
    fn upper_incomplete_gamma_closed_forms() {
        // Γ(1, x) = e^{-x}; Γ(2, x) = (x+1) e^{-x}; Γ(s, 0) = Γ(s).
        for x in [0.0, 0.3, 1.0, 5.0, 40.0] {
            assert!(rel(upper_incomplete_gamma(1.0, x).unwrap(), (-x).exp()) < 1e-12);
            assert!(rel(upper_incomplete_gamma(2.0, x).unwrap(), (x + 1.0) * (-x).exp()) < 1e-12);
        }
        assert!(rel(
            upper_incomplete_gamma(3.7, 0.0).unwrap(),
            gamma(3.7).unwrap()
        ) < 1e-13);
    }

    mod proptests {
        use super::*;
        use proptest::prelude::*;

        proptest! {
            // Telescoping: ζ(s,a) − ζ(s,a+1) = a^{−s}.
            #[test]
            fn telescoping(s in 1.1f64..10.0, a in 0.1f64..5.0) {
                let lhs = hurwitz_zeta(s, a).unwrap() - hurwitz_zeta(s, a + 1.0).unwrap();
                let rhs = a.powf(-s);
                let scale = hurwitz_zeta(s, a).unwrap().abs();
                prop_assert!((lhs - rhs).abs() <= 1e-12 * scale);
            }

            #[test]
            fn gamma_recurrence(y in 0.1f64..50.0) {
                let lhs = gamma(y + 1.0).unwrap();
                let rhs = y * gamma(y).unwrap();
                prop_assert!((lhs - rhs).abs() <= 1e-12 * lhs.abs());
            }
        }
    }
}
