//! Weight coefficients and the structural comparison checks behind them.
//!
//! `omega` is the discrete-side weight `ω_δ(σ,x)`, `varpi` the continuous-
//! side weight `ϖ_δ(σ,n)`. Both are bounded by the kernel constant; the
//! bounds follow from a Hermite-Hadamard midpoint comparison and an
//! integral sandwich, which are implemented here as directly checkable
//! predicates. Strict inequalities are reported as three-valued verdicts:
//! a gap below ten times the numerical error estimate is `Indeterminate`
//! rather than a claim.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::kernel::{self, KernelParams};
use crate::measures::Scheme;
use crate::quad;

/// Outcome of a strict-inequality check.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Verdict {
    True,
    False,
    Indeterminate,
}

impl Verdict {
    /// Classify `gap > 0` against a numerical error estimate: the claim is
    /// only made when the gap clears ten times the estimate.
    pub fn from_gap(gap: f64, err: f64) -> Verdict {
        if gap > 10.0 * err {
            Verdict::True
        } else if gap < -10.0 * err {
            Verdict::False
        } else {
            Verdict::Indeterminate
        }
    }

    pub fn as_str(&self) -> &'static str {
        match self {
            Verdict::True => "true",
            Verdict::False => "false",
            Verdict::Indeterminate => "indeterminate",
        }
    }
}

impl std::fmt::Display for Verdict {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

const OMEGA_TERM_BUDGET: usize = 4_000_000;

/// Scheme parameters with the Mellin exponent replaced; used by extremal
/// traces that evaluate the weights at a shifted exponent.
pub(crate) fn params_with_sigma(params: &KernelParams, sigma: f64) -> Result<KernelParams> {
    KernelParams::new(params.rho, params.alpha, params.gamma, sigma)
}

/// A value together with a one-sided truncation bound: the exact quantity
/// lies in `[value, value + tail_bound]` up to floating-point noise.
#[derive(Debug, Clone, Copy)]
pub(crate) struct Truncated {
    pub partial: f64,
    pub tail_bound: f64,
}

impl Truncated {
    pub fn midpoint(&self) -> f64 {
        self.partial + 0.5 * self.tail_bound
    }
    pub fn err(&self) -> f64 {
        0.5 * self.tail_bound
    }
}

/// Core summation of `Σ ν_{n+1} h(c (V_n−β)) (V_n−β)^{s−1}` with a
/// certified tail: the left-endpoint-rule comparison brackets the tail by
/// `∫_{c(V_{N+1}−β)}^∞ h u^{s−1} ≤ c^σ · tail ≤ ∫_{c(V_N−β)}^∞ h u^{s−1}`.
/// A cheap analytic envelope screens the checkpoints; once it reports the
/// tail is small, the bracket is tightened by direct quadrature.
pub(crate) fn kernel_weighted_sum(
    scheme: &Scheme,
    sigma_eff: f64,
    c: f64,
    tol: f64,
) -> Result<Truncated> {
    let params = params_with_sigma(&scheme.params, sigma_eff)?;
    let beta = scheme.dm.beta();
    let mut partial = 0.0f64;
    let mut comp = 0.0f64;
    for term in scheme.dm.terms() {
        let w = term.v_n - beta;
        let t = term.nu_next * params.h_unchecked(c * w) * w.powf(sigma_eff - 1.0);
        let s = partial + t;
        comp += if partial.abs() >= t.abs() {
            (partial - s) + t
        } else {
            (t - s) + partial
        };
        partial = s;

        if term.n >= 4 && (term.n & (term.n - 1) == 0 || term.n % 32_768 == 0) {
            let total = partial + comp;
            let scale = total.abs().max(f64::MIN_POSITIVE);
            // Tail integrals live in kernel units; c^{-σ} converts to the
            // units of this sum.
            let to_sum_units = c.powf(-sigma_eff);
            let env = to_sum_units * kernel::kernel_tail_bound(&params, sigma_eff, c * w);
            if env <= tol * scale {
                return Ok(Truncated {
                    partial: total,
                    tail_bound: env,
                });
            }
            if env <= 1e-2 * scale {
                // Quadrature bracket, run just tight enough for the target.
                let quad_tol = (0.05 * tol * scale / env).clamp(1e-12, 1e-3);
                let w_next = w + term.nu_next;
                let hi = kernel::kernel_tail_integral(&params, sigma_eff, c * w, quad_tol);
                let lo =
                    kernel::kernel_tail_integral(&params, sigma_eff, c * w_next, quad_tol);
                if let (Ok(hi), Ok(lo)) = (hi, lo) {
                    let lo_min = to_sum_units * (lo.value - lo.err_estimate).max(0.0);
                    let hi_max = (to_sum_units * (hi.value + hi.err_estimate)).min(env);
                    let width = (hi_max - lo_min).max(0.0);
                    if width <= 2.0 * tol * scale {
                        return Ok(Truncated {
                            partial: total + lo_min,
                            tail_bound: width,
                        });
                    }
                }
            }
            if term.n >= OMEGA_TERM_BUDGET {
                return Err(Error::convergence(
                    format!("kernel-weighted sum truncation (c={c}, sigma={sigma_eff})"),
                    total + 0.5 * env,
                    0.5 * env,
                ));
            }
        }
    }
    unreachable!("measure term iterator is infinite")
}

/// Discrete weight coefficient `ω_δ(σ, x)`.
pub fn omega(scheme: &Scheme, x: f64, tol: f64) -> Result<f64> {
    omega_sigma(scheme, scheme.params.sigma, x, tol)
}

/// `ω_δ(σ̃, x)` at a shifted exponent; extremal traces need σ̃ ≠ σ.
pub(crate) fn omega_sigma(scheme: &Scheme, sigma_eff: f64, x: f64, tol: f64) -> Result<f64> {
    if !(x > 0.0) {
        return Err(Error::domain(format!("omega requires x > 0, got {x}")));
    }
    Ok(omega_sigma_truncated(scheme, sigma_eff, x, tol)?.midpoint())
}

pub(crate) fn omega_sigma_truncated(
    scheme: &Scheme,
    sigma_eff: f64,
    x: f64,
    tol: f64,
) -> Result<Truncated> {
    let c = scheme.u_delta(x)?;

    // When the kernel scale is tiny the series needs ~1/c terms, but the
    // sandwich k(1−θ) < ω < k pins ω to relative width θ, which vanishes
    // like (c ν₁)^{σ−γ}. Use it whenever it certifies the target.
    if scheme.dm.v_infinite() {
        let upper = c * (scheme.dm.nu(1) - scheme.dm.beta());
        if upper < 0.25 {
            let params = params_with_sigma(&scheme.params, sigma_eff)?;
            let head = kernel::kernel_head_integral(&params, sigma_eff, upper, 0.05 * tol)?;
            let k = kernel::kernel_constant_closed(&params)?.value;
            let theta = head.value / k;
            if theta <= 0.9 * tol {
                return Ok(Truncated {
                    partial: k - head.value,
                    tail_bound: head.value,
                });
            }
        }
    }

    match kernel_weighted_sum(scheme, sigma_eff, c, tol) {
        Ok(sum) => {
            let scale = c.powf(sigma_eff);
            // ω = c^σ Σ(...); the tail bound in ω units is exactly the
            // kernel tail integral, c^σ · c^{-σ} ∫ = ∫.
            Ok(Truncated {
                partial: scale * sum.partial,
                tail_bound: scale * sum.tail_bound,
            })
        }
        Err(e) => {
            // Summation budget exhausted (the kernel scale is too small to
            // reach decay): fall back to the sandwich k(1−θ) < ω < k, whose
            // width is the head integral.
            if scheme.dm.v_infinite() {
                let params = params_with_sigma(&scheme.params, sigma_eff)?;
                let upper = c * (scheme.dm.nu(1) - scheme.dm.beta());
                let head = kernel::kernel_head_integral(&params, sigma_eff, upper, 1e-3)?;
                let k = kernel::kernel_constant_closed(&params)?.value;
                Ok(Truncated {
                    partial: k - head.value,
                    tail_bound: head.value,
                })
            } else {
                Err(e)
            }
        }
    }
}

/// Natural x-axis breakpoints for integrands driven by the kernel argument
/// `U^δ(x) · w`: the transition through 1, the deep-decay point, and the
/// measure's own unit scale.
pub(crate) fn kernel_axis_breaks(scheme: &Scheme, w: f64) -> Vec<f64> {
    let u40 = scheme.params.quad_split();
    let targets: [f64; 2] = if scheme.delta == 1 {
        [1.0 / w, u40 / w]
    } else {
        [w, w / u40]
    };
    let mut breaks = vec![1.0];
    for t in targets {
        if let Ok(x) = scheme.cm.u_inverse(t) {
            breaks.push(x);
        }
    }
    breaks
}

/// Continuous weight coefficient `ϖ_δ(σ, n)` by direct x-integration.
pub fn varpi(scheme: &Scheme, n: usize, tol: f64) -> Result<f64> {
    if n < 1 {
        return Err(Error::domain("varpi requires n >= 1"));
    }
    let params = scheme.params;
    let w = scheme.dm.v(n) - scheme.dm.beta();
    let delta = scheme.delta;
    let cm = scheme.cm.clone();
    let sigma = params.sigma;

    let integrand = move |x: f64| {
        let u = cm.u_unchecked(x);
        if u <= 0.0 {
            return 0.0;
        }
        let ud = if delta == 1 { u } else { 1.0 / u };
        params.h_unchecked(ud * w) * w.powf(sigma) * cm.mu(x) * ud.powf(sigma) / u
    };

    let breaks = kernel_axis_breaks(scheme, w);
    let r = quad::integrate_measure_axis(&integrand, &breaks, tol);
    if !r.converged {
        return Err(Error::convergence(
            format!("varpi({n}) x-quadrature"),
            r.value,
            r.err_estimate,
        ));
    }
    Ok(r.value)
}

/// `ϖ_δ(σ, n)` through the change of variable `u = (V_n−β) U^δ(x)`, the
/// independent route used to cross-check the direct quadrature.
pub fn varpi_substituted(scheme: &Scheme, n: usize, tol: f64) -> Result<f64> {
    if n < 1 {
        return Err(Error::domain("varpi requires n >= 1"));
    }
    let params = &scheme.params;
    let w = scheme.dm.v(n) - scheme.dm.beta();
    let split = params.quad_split();
    if scheme.cm.u_infinite() {
        let head = kernel::kernel_head_integral(params, params.sigma, split, tol)?;
        let tail = kernel::kernel_tail_integral(params, params.sigma, split, tol)?;
        return Ok(head.value + tail.value);
    }
    // Finite U(∞) truncates the substituted integral on one side.
    let u_inf = scheme.cm.u_unchecked(f64::MAX / 2.0);
    if scheme.delta == 1 {
        Ok(kernel::kernel_head_integral(params, params.sigma, w * u_inf, tol)?.value)
    } else {
        Ok(kernel::kernel_tail_integral(params, params.sigma, w / u_inf, tol)?.value)
    }
}

/// Midpoint-versus-cell-average gap for an arbitrary integrand, returned
/// with its numerical error estimate.
pub(crate) fn hermite_hadamard_gap<F: Fn(f64) -> f64>(
    f: F,
    center: f64,
    tol: f64,
) -> (f64, f64) {
    let left = quad::tanh_sinh(&f, center - 0.5, center, tol);
    let right = quad::tanh_sinh(&f, center, center + 0.5, tol);
    let mid = f(center);
    let gap = left.value + right.value - mid;
    let err = left.err_estimate + right.err_estimate + 1e-14 * mid.abs();
    (gap, err)
}

/// Midpoint comparison for the kernel integrand: `f(n) < ∫_{n-1/2}^{n+1/2} f`
/// with `f(y) = h(c (V(y)−β)) (V(y)−β)^{σ−1}`.
pub fn hermite_hadamard_check(scheme: &Scheme, n: usize, c: f64, tol: f64) -> Result<Verdict> {
    if n < 1 {
        return Err(Error::domain("hermite_hadamard_check requires n >= 1"));
    }
    if !(c > 0.0) {
        return Err(Error::domain("hermite_hadamard_check requires c > 0"));
    }
    let params = scheme.params;
    let dm = scheme.dm.clone();
    let beta = dm.beta();
    let sigma = params.sigma;
    let f = move |y: f64| {
        let w = dm.v_step(y).unwrap_or(f64::NAN) - beta;
        params.h_unchecked(c * w) * w.powf(sigma - 1.0)
    };
    let (gap, err) = hermite_hadamard_gap(f, n as f64, tol);
    Ok(Verdict::from_gap(gap, err))
}

/// Verdict for a double bracket `lower < middle < upper` under a shared
/// error estimate.
pub fn bracket_verdict(lower: f64, middle: f64, upper: f64, err: f64) -> Verdict {
    let lo_gap = middle - lower;
    let hi_gap = upper - middle;
    if lo_gap > 10.0 * err && hi_gap > 10.0 * err {
        Verdict::True
    } else if lo_gap < -10.0 * err || hi_gap < -10.0 * err {
        Verdict::False
    } else {
        Verdict::Indeterminate
    }
}

/// Certified upper bound on `Σ_{n>N} G(V_n − β)` for the decreasing kernel
/// integrand `G(w) = h(c w) w^{σ−1}`, by dyadic blocks: on `(m, 2m]` the
/// sequence steps are at least `ν_{2m}`, so the block sum is dominated by
/// `(1/ν_{2m}) ∫_{V_m−β}^∞ G`.
fn kernel_term_tail_bound(scheme: &Scheme, c: f64, n0: usize) -> f64 {
    let params = &scheme.params;
    let beta = scheme.dm.beta();
    let sigma = params.sigma;
    let mut bound = 0.0;
    let mut m = n0;
    // A lower bound on V_m suffices (the kernel tail integral is decreasing
    // in its cut), so later blocks advance V analytically via
    // V_{2m} ≥ V_m + m ν_{2m} instead of materializing prefix sums.
    let mut v_lb = scheme.dm.v(m);
    for _ in 0..60 {
        let w = v_lb - beta;
        let block = (1.0 / scheme.dm.nu(2 * m))
            * c.powf(-sigma)
            * kernel::kernel_tail_bound(params, sigma, c * w);
        bound += block;
        if block < 1e-18 * bound.max(f64::MIN_POSITIVE) || block == 0.0 {
            break;
        }
        v_lb += m as f64 * scheme.dm.nu(2 * m);
        m *= 2;
    }
    bound
}

/// Sandwich comparison `∫₁^∞ g < Σ_{n≥1} g(n) < ∫_{1/2}^∞ g` for the
/// decreasing convex integrand `g(t) = h(c (V(t)−β)) (V(t)−β)^{σ−1}`.
///
/// The sum gets the dyadic tail bound; the integrals run cell by cell near
/// the head and over dyadic spans further out, with the remainder bounded
/// by `g(M) + Σ_{n>M} g(n)`.
pub fn sandwich_check(scheme: &Scheme, c: f64, tol: f64) -> Result<Verdict> {
    if !(c > 0.0) {
        return Err(Error::domain("sandwich_check requires c > 0"));
    }
    let params = scheme.params;
    let beta = scheme.dm.beta();
    let sigma = params.sigma;
    // The verdict only needs resolution well below the O(1) bracket gaps.
    let tol_eff = tol.max(1e-9);

    let g_at = |w: f64| params.h_unchecked(c * w) * w.powf(sigma - 1.0);

    let mut sum = 0.0f64;
    let mut n_cut = 1usize;
    let mut tail = f64::INFINITY;
    for term in scheme.dm.terms() {
        let w = term.v_n - beta;
        sum += g_at(w);
        if term.n >= 8 && term.n & (term.n - 1) == 0 {
            tail = kernel_term_tail_bound(scheme, c, term.n);
            n_cut = term.n;
            if tail <= 0.25 * tol_eff * sum.abs() || term.n >= (1 << 21) {
                break;
            }
        }
    }
    if !tail.is_finite() {
        return Err(Error::convergence("sandwich sum truncation", sum, tail));
    }
    let sum_mid = sum + 0.5 * tail;
    let sum_err = 0.5 * tail;

    // Integrals: exact cells while the kinks matter, dyadic spans beyond.
    let dm = scheme.dm.clone();
    let g_t = move |t: f64| {
        let w = dm.v_step(t).unwrap_or(f64::NAN) - beta;
        params.h_unchecked(c * w) * w.powf(sigma - 1.0)
    };
    let mut int_err = 0.0f64;
    let half_cell = quad::tanh_sinh(&g_t, 0.5, 1.0, tol_eff);
    int_err += half_cell.err_estimate;

    let mut int_one = 0.0f64;
    let cells_exact = 64.min(n_cut);
    for n in 1..cells_exact {
        let cell = quad::tanh_sinh(&g_t, n as f64, (n + 1) as f64, tol_eff);
        int_one += cell.value;
        int_err += cell.err_estimate;
    }
    let mut lo_t = cells_exact as f64;
    while lo_t < n_cut as f64 {
        let hi_t = (2.0 * lo_t).min(n_cut as f64);
        let span = quad::tanh_sinh(&g_t, lo_t, hi_t, tol_eff);
        int_one += span.value;
        int_err += span.err_estimate;
        lo_t = hi_t;
    }
    let w_cut = scheme.dm.v(n_cut) - beta;
    let int_tail_hi = g_at(w_cut) + kernel_term_tail_bound(scheme, c, n_cut);
    let int_half = half_cell.value + int_one;

    let lower = int_one + 0.5 * int_tail_hi;
    let upper = int_half + 0.5 * int_tail_hi;
    let err = sum_err + int_err + 0.5 * int_tail_hi;
    Ok(bracket_verdict(lower, sum_mid, upper, err))
}

/// Both weight coefficients and their bound verdicts at one `(x, n)` pair.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct WeightReport {
    pub x: f64,
    pub n: usize,
    pub omega: f64,
    pub varpi: f64,
    pub k_value: f64,
    pub theta_value: f64,
    /// `ω < k(σ)`.
    pub bound_upper: Verdict,
    /// `ϖ ≤ k(σ)`, with equality within tolerance when `U(∞) = ∞`.
    pub bound_varpi: Verdict,
    /// `ω > k(σ)(1−θ)`; only meaningful when `V(∞) = ∞`.
    pub bound_lower: Verdict,
}

/// Evaluate both weights at `(x, n)` and check the three bounds.
pub fn weight_report(scheme: &Scheme, x: f64, n: usize, tol: f64) -> Result<WeightReport> {
    let k = kernel::kernel_constant_closed(&scheme.params)?;
    let om = omega_sigma_truncated(scheme, scheme.params.sigma, x, tol)?;
    let vp = varpi(scheme, n, tol)?;
    let vp_err = tol * vp.abs();

    let upper_gap = k.value - (om.partial + om.tail_bound);
    let bound_upper = Verdict::from_gap(upper_gap, k.err_estimate + 1e-14 * om.partial.abs());

    let bound_varpi = if scheme.cm.u_infinite() {
        // Equality case: |ϖ − k| within tolerance.
        if (vp - k.value).abs() <= 10.0 * (vp_err + k.err_estimate) + tol * k.value {
            Verdict::True
        } else if vp > k.value {
            Verdict::False
        } else {
            Verdict::Indeterminate
        }
    } else {
        // Non-strict upper bound.
        if vp <= k.value + 10.0 * (vp_err + k.err_estimate) {
            Verdict::True
        } else {
            Verdict::False
        }
    };

    let c = scheme.u_delta(x)?;
    let nu1 = scheme.dm.nu(1);
    let upper = c * (nu1 - scheme.dm.beta());
    let theta_value = kernel::theta_with_tol(&scheme.params, upper, tol)?;
    let bound_lower = if scheme.dm.v_infinite() {
        // The graceful tail form keeps both sides comparable long after
        // 1 − θ has left machine range.
        let omt = kernel::one_minus_theta(&scheme.params, upper, tol)?;
        let scale = (k.value * omt + om.partial).max(f64::MIN_POSITIVE);
        let gap = om.partial - k.value * omt;
        Verdict::from_gap(gap, (om.err() + k.err_estimate * omt).max(tol * scale))
    } else {
        Verdict::Indeterminate
    };

    Ok(WeightReport {
        x,
        n,
        omega: om.midpoint(),
        varpi: vp,
        k_value: k.value,
        theta_value,
        bound_upper,
        bound_varpi,
        bound_lower,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::measures::{ContinuousMeasure, DiscreteMeasure};

    fn rel(a: f64, b: f64) -> f64 {
        (a - b).abs() / b.abs().max(f64::MIN_POSITIVE)
    }

    fn unit_scheme(delta: i32, beta: f64) -> Scheme {
        let params = KernelParams::new(1.0, 1.0, 0.5, 1.0).unwrap();
        Scheme::new(
            params,
            delta,
            ContinuousMeasure::unit(),
            DiscreteMeasure::unit(beta).unwrap(),
        )
        .unwrap()
    }

    fn damped_scheme(delta: i32) -> Scheme {
        let params = KernelParams::new(1.0, 0.5, 0.4, 0.9).unwrap();
        Scheme::new(
            params,
            delta,
            ContinuousMeasure::power_damped(0.5).unwrap(),
            DiscreteMeasure::power_seq(0.5, 0.5).unwrap(),
        )
        .unwrap()
    }

    #[test]
    fn omega_below_k_above_k_one_minus_theta() {
        for scheme in [
            unit_scheme(1, 0.5),
            unit_scheme(-1, 0.0),
            damped_scheme(1),
            damped_scheme(-1),
        ] {
            let k = kernel::kernel_constant_closed(&scheme.params).unwrap().value;
            for x in [0.05, 0.5, 1.0, 7.0, 80.0] {
                let om = omega(&scheme, x, 1e-10).unwrap();
                assert!(om < k, "omega={om} not below k={k} at x={x}");
                let c = scheme.u_delta(x).unwrap();
                let nu1 = scheme.dm.nu(1);
                let th =
                    kernel::theta(&scheme.params, c * (nu1 - scheme.dm.beta())).unwrap();
                assert!(
                    om > k * (1.0 - th),
                    "omega={om} not above k(1-theta)={} at x={x}",
                    k * (1.0 - th)
                );
            }
        }
    }

    #[test]
    fn omega_frozen_regression() {
        // Unit measures, beta=1/2, x=1: direct summation oracle.
        let scheme = unit_scheme(1, 0.5);
        let om = omega(&scheme, 1.0, 1e-11).unwrap();
        // Independent brute-force check with a plain loop.
        let mut brute = 0.0;
        for n in 1..200 {
            let w = n as f64 - 0.5;
            brute += scheme.params.h_unchecked(w) * w.powf(0.0);
        }
        assert!(rel(om, brute) < 1e-9, "omega {om} vs brute {brute}");
    }

    #[test]
    fn omega_truncation_soundness() {
        let scheme = damped_scheme(1);
        let coarse = omega(&scheme, 2.0, 1e-6).unwrap();
        let fine = omega(&scheme, 2.0, 1e-12).unwrap();
        assert!((coarse - fine).abs() <= 1e-6 * fine.abs());
    }

    #[test]
    fn omega_domain_guard() {
        let scheme = unit_scheme(1, 0.5);
        assert!(omega(&scheme, 0.0, 1e-8).is_err());
        assert!(omega(&scheme, -1.0, 1e-8).is_err());
    }

    #[test]
    fn varpi_equals_k_when_u_infinite() {
        for scheme in [unit_scheme(1, 0.5), unit_scheme(-1, 0.25), damped_scheme(-1)] {
            let k = kernel::kernel_constant_closed(&scheme.params).unwrap().value;
            for n in [1usize, 2, 5, 10, 100] {
                let vp = varpi(&scheme, n, 1e-10).unwrap();
                assert!(
                    rel(vp, k) < 1e-8,
                    "varpi({n})={vp} should equal k={k} (delta={})",
                    scheme.delta
                );
            }
        }
    }

    #[test]
    fn varpi_below_k_when_u_finite() {
        // Tabulated continuous measure with integrable tail: U(∞) < ∞.
        let params = KernelParams::new(1.0, 0.5, 0.4, 0.9).unwrap();
        let cm = ContinuousMeasure::tabulated(vec![0.0, 1.0], vec![1.0, 1.0], 3.0).unwrap();
        assert!(!cm.u_infinite());
        let scheme = Scheme::new(
            params,
            1,
            cm,
            DiscreteMeasure::unit(0.5).unwrap(),
        )
        .unwrap();
        let k = kernel::kernel_constant_closed(&params).unwrap().value;
        for n in [1usize, 3] {
            let vp = varpi(&scheme, n, 1e-9).unwrap();
            assert!(vp < k, "varpi({n})={vp} should be strictly below k={k}");
            let sub = varpi_substituted(&scheme, n, 1e-9).unwrap();
            assert!(rel(vp, sub) < 1e-7, "routes disagree: {vp} vs {sub}");
        }
    }

    #[test]
    fn varpi_substitution_identity() {
        for scheme in [unit_scheme(1, 0.5), damped_scheme(1), damped_scheme(-1)] {
            for n in [1usize, 4, 20] {
                let direct = varpi(&scheme, n, 1e-10).unwrap();
                let substituted = varpi_substituted(&scheme, n, 1e-10).unwrap();
                assert!(
                    rel(direct, substituted) < 2e-8,
                    "substitution mismatch at n={n}: {direct} vs {substituted}"
                );
            }
        }
    }

    #[test]
    fn hermite_hadamard_holds_on_schemes() {
        for scheme in [unit_scheme(1, 0.5), damped_scheme(1)] {
            for n in [1usize, 3, 10] {
                for c in [0.1, 1.0, 10.0] {
                    let v = hermite_hadamard_check(&scheme, n, c, 1e-11).unwrap();
                    assert_eq!(v, Verdict::True, "HH failed at n={n}, c={c}");
                }
            }
        }
    }

    #[test]
    fn hermite_hadamard_rejects_concave() {
        // Negated kernel integrand is concave: the midpoint dominates.
        let scheme = unit_scheme(1, 0.5);
        let params = scheme.params;
        let f = move |y: f64| -params.h_unchecked(y - 0.5);
        let (gap, err) = hermite_hadamard_gap(f, 2.0, 1e-11);
        assert_eq!(Verdict::from_gap(gap, err), Verdict::False);
    }

    #[test]
    fn lemma_integrand_convexity_second_differences() {
        // Finite-difference convexity of f(y) = h(c(V(y)−β))(V(y)−β)^{σ−1}
        // inside the half-cells around each integer.
        for scheme in [unit_scheme(1, 0.5), damped_scheme(1)] {
            let params = scheme.params;
            let beta = scheme.dm.beta();
            let sigma = params.sigma;
            let dm = scheme.dm.clone();
            for c in [0.1, 1.0, 10.0] {
                let f = |y: f64| {
                    let w = dm.v_step(y).unwrap() - beta;
                    params.h_unchecked(c * w) * w.powf(sigma - 1.0)
                };
                for n in 1..=10 {
                    for side in [-1.0f64, 1.0] {
                        let center = n as f64 + side * 0.25;
                        let dh = 0.05;
                        let second = f(center + dh) - 2.0 * f(center) + f(center - dh);
                        assert!(
                            second > 0.0,
                            "second difference not positive at n={n}, side={side}, c={c}"
                        );
                    }
                }
            }
        }
    }

    #[test]
    fn sandwich_on_kernel_integrand() {
        for scheme in [unit_scheme(1, 0.5), damped_scheme(1)] {
            for c in [0.3, 1.0, 4.0] {
                let v = sandwich_check(&scheme, c, 1e-10).unwrap();
                assert_eq!(v, Verdict::True, "sandwich failed at c={c}");
            }
        }
    }

    #[test]
    fn sandwich_closed_form_controls() {
        // Σ e^{-n} = 1/(e−1) bracketed by e^{-1} and e^{-1/2}.
        let e = std::f64::consts::E;
        let sum = 1.0 / (e - 1.0);
        assert_eq!(
            bracket_verdict(1.0 / e, sum, (-0.5f64).exp(), 1e-12),
            Verdict::True
        );
        // Σ n^{-2} = π²/6 bracketed by 1 and 2.
        let z2 = std::f64::consts::PI.powi(2) / 6.0;
        assert_eq!(bracket_verdict(1.0, z2, 2.0, 1e-12), Verdict::True);
        // A violated bracket must come back false.
        assert_eq!(bracket_verdict(1.0, 2.5, 2.0, 1e-12), Verdict::False);
        // And a gap inside the error guard is indeterminate.
        assert_eq!(bracket_verdict(1.0, 1.0 + 1e-14, 2.0, 1e-12), Verdict::Indeterminate);
    }

    #[test]
    fn weight_report_verdicts() {
        for scheme in [unit_scheme(1, 0.5), unit_scheme(-1, 0.0), damped_scheme(1)] {
            let r = weight_report(&scheme, 1.5, 3, 1e-9).unwrap();
            assert_eq!(r.bound_upper, Verdict::True);
            assert_eq!(r.bound_varpi, Verdict::True);
            assert_eq!(r.bound_lower, Verdict::True);
            assert!(r.theta_value > 0.0 && r.theta_value < 1.0);
            assert!(r.omega > 0.0 && r.varpi > 0.0 && r.k_value > 0.0);
        }
    }
}
