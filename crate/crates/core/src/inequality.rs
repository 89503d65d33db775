//! Weighted norms, the half-discrete bilinear form, its companion
//! functionals, and verification of the coupled inequalities in all three
//! Holder regimes.
//!
//! Conventions: `p` and `q` are conjugate (`1/p + 1/q = 1`); the forward
//! regime is `p > 1`, the reverse regimes are `p < 0` (so `0 < q < 1`) and
//! `0 < p < 1` (so `q < 0`). In the reverse regimes every power is taken in
//! log space and zero function values are rejected up front, since negative
//! or fractional powers of zero are undefined.
//!
//! Test functions are profiles in the mass coordinate `v = U^δ(x)`:
//! `f(x) = U^{δσ-1}(x) μ(x) ψ(v)` with `ψ` piecewise a power. This makes
//! the inner integrals exact kernel head/tail integrals and gives the outer
//! sums certified power-law tail brackets.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::kernel::{self, KernelParams};
use crate::measures::Scheme;
use crate::quad;
use crate::weights::{self, Verdict};

/// Holder-conjugate exponent pair with its regime.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HolderPair {
    pub p: f64,
    pub q: f64,
    pub regime: Regime,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Regime {
    /// `p > 1`: the coupled inequalities hold with `<`.
    Forward,
    /// `p < 0`: reversed, plain weights.
    ReverseNeg,
    /// `0 < p < 1`: reversed, theta-adjusted weight on the continuous side.
    ReverseFrac,
}

impl HolderPair {
    pub fn new(p: f64) -> Result<Self> {
        if !p.is_finite() || p == 0.0 || p == 1.0 {
            return Err(Error::domain(format!(
                "exponent p must be finite and different from 0 and 1, got {p}"
            )));
        }
        let q = p / (p - 1.0);
        let regime = if p > 1.0 {
            Regime::Forward
        } else if p < 0.0 {
            Regime::ReverseNeg
        } else {
            Regime::ReverseFrac
        };
        Ok(HolderPair { p, q, regime })
    }
}

/// Which continuous-side weight a computation uses.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum WeightMode {
    /// `Φ_δ(x) = U^{p(1-δσ)-1}/μ^{p-1}`.
    Plain,
    /// `Φ̃_δ(x) = (1-θ_δ(σ,x)) Φ_δ(x)`, required in the fractional regime.
    ThetaAdjusted,
}

/// Weight functions attached to one scheme and exponent pair.
pub struct NormWeights<'a> {
    pub scheme: &'a Scheme,
    pub hp: HolderPair,
}

impl<'a> NormWeights<'a> {
    pub fn new(scheme: &'a Scheme, hp: HolderPair) -> Self {
        NormWeights { scheme, hp }
    }

    /// `Φ_δ(x)`.
    pub fn phi(&self, x: f64) -> Result<f64> {
        if !(x > 0.0) {
            return Err(Error::domain("phi requires x > 0"));
        }
        let u = self.scheme.cm.u(x)?;
        let mu = self.scheme.cm.mu(x);
        let d = self.scheme.delta as f64;
        let sigma = self.scheme.params.sigma;
        Ok(u.powf(self.hp.p * (1.0 - d * sigma) - 1.0) * mu.powf(1.0 - self.hp.p))
    }

    /// `Ψ_β(n)`.
    pub fn psi(&self, n: usize) -> Result<f64> {
        if n < 1 {
            return Err(Error::domain("psi requires n >= 1"));
        }
        let w = self.scheme.dm.v(n) - self.scheme.dm.beta();
        let nu = self.scheme.dm.nu(n + 1);
        let sigma = self.scheme.params.sigma;
        Ok(w.powf(self.hp.q * (1.0 - sigma) - 1.0) * nu.powf(1.0 - self.hp.q))
    }

    /// `Φ̃_δ(x) = (1-θ_δ(σ,x)) Φ_δ(x)`.
    pub fn phi_tilde(&self, x: f64) -> Result<f64> {
        let th = self.theta_at(x, 1e-10)?;
        Ok((1.0 - th) * self.phi(x)?)
    }

    pub(crate) fn theta_at(&self, x: f64, tol: f64) -> Result<f64> {
        let c = self.scheme.u_delta(x)?;
        let nu1 = self.scheme.dm.nu(1);
        kernel::theta_with_tol(
            &self.scheme.params,
            c * (nu1 - self.scheme.dm.beta()),
            tol,
        )
    }
}

/// A test pair: continuous function `f` and sequence `a` drawn from one
/// family. Values depend on the scheme and, for the extremal family, on the
/// exponent pair.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub enum TestFamily {
    /// The near-extremal pair: `f(x) = U^{δ(σ+ε/p)-1} μ` on `{0 < x^δ ≤ 1}`
    /// (zero outside), `a_n = (V_n-β)^{σ-ε/q-1} ν_{n+1}`.
    ExtremalCutoff { eps: f64 },
    /// Strictly positive pair: `f = U^{δσ-1} μ ψ(U^δ)` and
    /// `a_n = (V_n-β)^{σ-1} ν_{n+1} χ(V_n-β)` with piecewise-power profiles
    /// `ψ(v) = v^{f_head}` (v ≤ 1), `v^{-f_tail}` (v ≥ 1), and likewise
    /// `χ` with `a_head`, `a_tail`. `f_scale` multiplies `f` only.
    SmoothPositive {
        f_head: f64,
        f_tail: f64,
        a_head: f64,
        a_tail: f64,
        #[serde(default = "one")]
        f_scale: f64,
    },
    /// Piecewise-linear `f` through `(xs, fs)` (zero outside the knot range)
    /// and an explicit finite sequence (zero beyond). Forward regime only.
    Tabulated {
        xs: Vec<f64>,
        fs: Vec<f64>,
        seq: Vec<f64>,
    },
}

fn one() -> f64 {
    1.0
}

impl TestFamily {
    /// Default strictly positive profile exponents for a regime. The head
    /// growth in the reverse-negative regime stays inside `σ−γ`, which keeps
    /// every coupled integral convergent.
    pub fn smooth_for(regime: Regime, params: &KernelParams) -> TestFamily {
        let gap = params.sigma - params.gamma;
        match regime {
            Regime::Forward => TestFamily::SmoothPositive {
                f_head: 0.6,
                f_tail: 1.2,
                a_head: 0.4,
                a_tail: params.sigma + 1.4,
                f_scale: 1.0,
            },
            Regime::ReverseNeg => TestFamily::SmoothPositive {
                f_head: -0.55 * gap,
                f_tail: -0.8,
                a_head: 0.0,
                a_tail: params.sigma + 0.5,
                f_scale: 1.0,
            },
            Regime::ReverseFrac => TestFamily::SmoothPositive {
                f_head: 1.0,
                f_tail: 1.0,
                a_head: 0.0,
                a_tail: -0.8,
                f_scale: 1.0,
            },
        }
    }

    /// Whether both components are strictly positive on the whole domain,
    /// as the reverse regimes require.
    pub fn strictly_positive(&self) -> bool {
        matches!(self, TestFamily::SmoothPositive { .. })
    }

    /// Exponent of `U^δ` in `f` beyond the measure factor: `f = U^{δ·s-1} μ ψ`.
    fn sigma_tilde_f(&self, hp: &HolderPair, sigma: f64) -> f64 {
        match self {
            TestFamily::ExtremalCutoff { eps } => sigma + eps / hp.p,
            _ => sigma,
        }
    }

    /// Exponent in `a_n = (V_n-β)^{s-1} ν_{n+1} χ`.
    fn sigma_tilde_a(&self, hp: &HolderPair, sigma: f64) -> f64 {
        match self {
            TestFamily::ExtremalCutoff { eps } => sigma - eps / hp.q,
            _ => sigma,
        }
    }

    /// Continuous component at `x > 0`.
    pub fn f_at(&self, scheme: &Scheme, hp: &HolderPair, x: f64) -> Result<f64> {
        if !(x > 0.0) {
            return Err(Error::domain("test function requires x > 0"));
        }
        let sigma = scheme.params.sigma;
        let d = scheme.delta as f64;
        match self {
            TestFamily::ExtremalCutoff { .. } => {
                let in_support = if scheme.delta == 1 { x <= 1.0 } else { x >= 1.0 };
                if !in_support {
                    return Ok(0.0);
                }
                let u = scheme.cm.u(x)?;
                let s = self.sigma_tilde_f(hp, sigma);
                Ok(u.powf(d * s - 1.0) * scheme.cm.mu(x))
            }
            TestFamily::SmoothPositive {
                f_head,
                f_tail,
                f_scale,
                ..
            } => {
                let u = scheme.cm.u(x)?;
                let v = if scheme.delta == 1 { u } else { 1.0 / u };
                let psi = if v <= 1.0 {
                    v.powf(*f_head)
                } else {
                    v.powf(-*f_tail)
                };
                Ok(f_scale * u.powf(d * sigma - 1.0) * scheme.cm.mu(x) * psi)
            }
            TestFamily::Tabulated { xs, fs, .. } => {
                if xs.is_empty() || x < xs[0] || x > *xs.last().unwrap() {
                    return Ok(0.0);
                }
                let i = xs.partition_point(|&k| k <= x).max(1) - 1;
                if i + 1 >= xs.len() {
                    return Ok(fs[i]);
                }
                let frac = (x - xs[i]) / (xs[i + 1] - xs[i]);
                Ok(fs[i] + (fs[i + 1] - fs[i]) * frac)
            }
        }
    }

    /// Sequence component at `n ≥ 1`.
    pub fn a_at(&self, scheme: &Scheme, hp: &HolderPair, n: usize) -> Result<f64> {
        if n < 1 {
            return Err(Error::domain("sequence index starts at 1"));
        }
        let w = scheme.dm.v(n) - scheme.dm.beta();
        let nu = scheme.dm.nu(n + 1);
        let sigma = scheme.params.sigma;
        match self {
            TestFamily::ExtremalCutoff { .. } => {
                Ok(w.powf(self.sigma_tilde_a(hp, sigma) - 1.0) * nu)
            }
            TestFamily::SmoothPositive { a_head, a_tail, .. } => {
                let chi = if w <= 1.0 {
                    w.powf(*a_head)
                } else {
                    w.powf(-*a_tail)
                };
                Ok(w.powf(sigma - 1.0) * nu * chi)
            }
            TestFamily::Tabulated { seq, .. } => {
                Ok(if n <= seq.len() { seq[n - 1] } else { 0.0 })
            }
        }
    }

    /// Exponent `E` of the weighted-norm summand tail
    /// `Ψ(n) a_n^q ~ C ν_{n+1} w^{-1-E}`, when the family has one.
    fn norm_tail_exponent(&self, hp: &HolderPair) -> Option<f64> {
        match self {
            TestFamily::ExtremalCutoff { eps } => Some(*eps),
            TestFamily::SmoothPositive { a_tail, .. } => Some(hp.q * a_tail),
            TestFamily::Tabulated { .. } => None,
        }
    }

    /// Exponent `T` with `a_n = ν_{n+1} w^{σ−1} χ(w)` and `χ(w) = w^{-T}`
    /// for `w ≥ 1`, when the family has one.
    fn a_power_tail(&self, hp: &HolderPair) -> Option<f64> {
        match self {
            TestFamily::ExtremalCutoff { eps } => Some(eps / hp.q),
            TestFamily::SmoothPositive { a_tail, .. } => Some(*a_tail),
            TestFamily::Tabulated { .. } => None,
        }
    }
}

/// Value plus a symmetric error estimate.
#[derive(Debug, Clone, Copy)]
pub(crate) struct Estimate {
    pub value: f64,
    pub err: f64,
}

impl Estimate {
    fn new(value: f64, err: f64) -> Self {
        Estimate { value, err }
    }
}

// ---------------------------------------------------------------------------
// Inner integrals: In(w) = ∫ h(U^δ(x) w) f(x) dx reduced to the mass
// coordinate. For profile families this is a sum of kernel head/tail
// integrals; for tabulated data it stays an x-quadrature.
// ---------------------------------------------------------------------------

struct InnerEval<'a> {
    scheme: &'a Scheme,
    /// Piecewise power exponents `(s, v_from, v_to)`: the profile contributes
    /// `∫_{v_from}^{v_to} h(v w) v^{s-1} dv` to `In(w)`.
    pieces: Vec<(f64, f64, f64)>,
    tabulated: Option<TestFamily>,
    hp: HolderPair,
    tol: f64,
}

impl<'a> InnerEval<'a> {
    fn new(scheme: &'a Scheme, fam: &TestFamily, hp: HolderPair, tol: f64) -> Result<Self> {
        let sigma = scheme.params.sigma;
        let u1 = scheme.cm.u(1.0)?;
        // v ranges over (0, U(∞)) for δ=1 and (1/U(∞), ∞) for δ=-1; the
        // built-in continuous families all have U(∞)=∞.
        let v_sup = if scheme.cm.u_infinite() {
            f64::INFINITY
        } else {
            let u_inf = scheme.cm.u_unchecked(f64::MAX / 2.0);
            if scheme.delta == 1 {
                u_inf
            } else {
                f64::INFINITY
            }
        };
        let v_inf = if scheme.delta == 1 || scheme.cm.u_infinite() {
            0.0
        } else {
            1.0 / scheme.cm.u_unchecked(f64::MAX / 2.0)
        };
        let pieces = match fam {
            TestFamily::ExtremalCutoff { .. } => {
                let s = fam.sigma_tilde_f(&hp, sigma);
                let b = if scheme.delta == 1 { u1 } else { 1.0 / u1 };
                vec![(s, v_inf, b.min(v_sup))]
            }
            TestFamily::SmoothPositive {
                f_head, f_tail, ..
            } => {
                vec![
                    (sigma + f_head, v_inf, 1.0f64.min(v_sup)),
                    (sigma - f_tail, 1.0f64.max(v_inf), v_sup),
                ]
            }
            TestFamily::Tabulated { .. } => Vec::new(),
        };
        Ok(InnerEval {
            scheme,
            pieces,
            tabulated: matches!(fam, TestFamily::Tabulated { .. }).then(|| fam.clone()),
            hp,
            tol,
        })
    }

    fn scale(&self, fam: &TestFamily) -> f64 {
        match fam {
            TestFamily::SmoothPositive { f_scale, .. } => *f_scale,
            _ => 1.0,
        }
    }

    /// `∫_A^B h(z) z^{s-1} dz` with `0 ≤ A < B ≤ ∞`.
    fn kernel_piece(&self, s: f64, a: f64, b: f64) -> Result<Estimate> {
        let params = &self.scheme.params;
        if b <= a {
            return Ok(Estimate::new(0.0, 0.0));
        }
        if a <= 0.0 {
            let r = if b.is_finite() {
                kernel::kernel_head_integral(params, s, b, self.tol)?
            } else {
                let split = params.quad_split();
                let h = kernel::kernel_head_integral(params, s, split, self.tol)?;
                let t = kernel::kernel_tail_integral(params, s, split, self.tol)?;
                crate::quad::QuadResult {
                    value: h.value + t.value,
                    err_estimate: h.err_estimate + t.err_estimate,
                    evals: h.evals + t.evals,
                    converged: true,
                }
            };
            return Ok(Estimate::new(r.value, r.err_estimate));
        }
        let lo = kernel::kernel_tail_integral(params, s, a, self.tol)?;
        if b.is_finite() {
            let hi = kernel::kernel_tail_integral(params, s, b, self.tol)?;
            Ok(Estimate::new(
                lo.value - hi.value,
                lo.err_estimate + hi.err_estimate,
            ))
        } else {
            Ok(Estimate::new(lo.value, lo.err_estimate))
        }
    }

    /// Inner integral at sequence weight `w = V_n − β`.
    fn at(&self, fam: &TestFamily, w: f64) -> Result<Estimate> {
        if let Some(tab) = &self.tabulated {
            // Direct x-quadrature over the tabulated support.
            let scheme = self.scheme;
            let hp = self.hp;
            let fam_c = tab.clone();
            let integrand = move |x: f64| {
                let u = scheme.cm.u_unchecked(x);
                if u <= 0.0 {
                    return 0.0;
                }
                let ud = if scheme.delta == 1 { u } else { 1.0 / u };
                scheme.params.h_unchecked(ud * w)
                    * fam_c.f_at(scheme, &hp, x).unwrap_or(0.0)
            };
            let (x0, x1) = match tab {
                TestFamily::Tabulated { xs, .. } => (xs[0].max(1e-300), *xs.last().unwrap()),
                _ => unreachable!(),
            };
            let r = quad::tanh_sinh(&integrand, x0, x1, self.tol);
            return Ok(Estimate::new(r.value, r.err_estimate));
        }
        let mut value = 0.0;
        let mut err = 0.0;
        for &(s, v_from, v_to) in &self.pieces {
            // z = v w maps the piece onto the kernel axis.
            let piece = self.kernel_piece(s, v_from * w, v_to * w)?;
            value += w.powf(-s) * piece.value;
            err += w.powf(-s) * piece.err;
        }
        let scale = self.scale(fam);
        Ok(Estimate::new(scale * value, scale * err))
    }

    /// Certified bracket `[lo, hi]` for `In(w') · w'^{σ+t}` uniformly over
    /// `w' ≥ w`, where `σ+t` is the head-piece exponent. Empty for families
    /// without the profile reduction.
    fn asymptote_bracket(&self, fam: &TestFamily, w: f64) -> Option<(f64, f64, f64)> {
        if self.tabulated.is_some() || self.pieces.is_empty() {
            return None;
        }
        let params = &self.scheme.params;
        let (s_head, v_inf, head_to) = self.pieces[0];
        if v_inf > 0.0 || !(s_head > params.gamma) {
            return None;
        }
        let k_m = kernel::kernel_moment_closed(params, s_head).ok()?;
        // Head piece: In_head(w) = w^{-s_head} ∫_0^{head_to·w} h z^{s_head-1} dz,
        // bracketed by [k_m − tailbound(head_to·w), k_m].
        let head_lo = (k_m - kernel::kernel_tail_bound(params, s_head, head_to * w)).max(0.0);
        let mut hi = k_m;
        let lo = head_lo;
        // Optional tail piece adds at most w^{s_head-s_tail} · tailbound.
        if self.pieces.len() > 1 {
            let (s_tail, from, _) = self.pieces[1];
            let extra = w.powf(s_head - s_tail)
                * kernel::kernel_tail_bound(params, s_tail, from.max(1.0) * w);
            if !extra.is_finite() {
                return None;
            }
            hi += extra;
        }
        let scale = self.scale(fam);
        Some((s_head, scale * lo, scale * hi))
    }
}

// ---------------------------------------------------------------------------
// Pure power sums over the discrete measure with certified brackets.
// ---------------------------------------------------------------------------

/// `Σ_{n>skip} ν_{n+1} (V_n−β)^{-1-e}` with the left-endpoint-rule bracket.
fn power_tail_sum(scheme: &Scheme, skip: usize, e: f64, tol: f64) -> Result<Estimate> {
    if !(e > 0.0) {
        return Err(Error::domain(format!(
            "power tail exponent must be positive, got {e}"
        )));
    }
    let beta = scheme.dm.beta();
    let mut partial = 0.0f64;
    let mut prev_w = f64::NAN;
    for term in scheme.dm.terms() {
        let w = term.v_n - beta;
        if term.n > skip {
            partial += term.nu_next * w.powf(-1.0 - e);
            if term.n >= skip + 8 && (term.n & (term.n - 1) == 0 || term.n % 65_536 == 0) {
                let hi = prev_w.powf(-e) / e;
                let lo = w.powf(-e) / e;
                let value = partial + 0.5 * (hi + lo);
                let half = 0.5 * (hi - lo);
                if half <= tol * value.abs() {
                    return Ok(Estimate::new(value, half));
                }
                if term.n >= 30_000_000 {
                    return Err(Error::convergence(
                        format!("power tail sum (e={e})"),
                        value,
                        half,
                    ));
                }
            }
        }
        prev_w = w;
    }
    unreachable!()
}

// ---------------------------------------------------------------------------
// Norms.
// ---------------------------------------------------------------------------

fn reverse_positivity_guard(fam: &TestFamily, hp: &HolderPair, what: &str) -> Result<()> {
    if hp.regime != Regime::Forward && !fam.strictly_positive() {
        return Err(Error::domain(format!(
            "{what}: reverse regimes need strict positivity on the whole domain; \
             the {fam:?} family touches zero"
        )));
    }
    Ok(())
}

/// Weighted function norm `(∫ Φ f^p dx)^{1/p}` (formal symbol for p < 0 and
/// 0 < p < 1 as well).
pub fn norm_f(
    fam: &TestFamily,
    weights: &NormWeights<'_>,
    mode: WeightMode,
    tol: f64,
) -> Result<f64> {
    Ok(norm_f_est(fam, weights, mode, tol)?.value)
}

pub(crate) fn norm_f_est(
    fam: &TestFamily,
    weights: &NormWeights<'_>,
    mode: WeightMode,
    tol: f64,
) -> Result<Estimate> {
    reverse_positivity_guard(fam, &weights.hp, "norm_f")?;
    let scheme = weights.scheme;
    let hp = weights.hp;
    let p = hp.p;
    let fam_c = fam.clone();
    let d = scheme.delta as f64;
    let sigma = scheme.params.sigma;
    let nw_scheme = scheme;
    let theta_tol = (0.01 * tol).max(1e-12);

    let integrand = move |x: f64| {
        let u = nw_scheme.cm.u_unchecked(x);
        if u <= 0.0 {
            return 0.0;
        }
        let mu = nw_scheme.cm.mu(x);
        let f = fam_c.f_at(nw_scheme, &hp, x).unwrap_or(f64::NAN);
        if !(f > 0.0) {
            return 0.0; // cutoff region contributes nothing (forward only)
        }
        // ln-space assembly keeps negative and fractional p stable.
        let ln_phi = (p * (1.0 - d * sigma) - 1.0) * u.ln() + (1.0 - p) * mu.ln();
        let mut val = (ln_phi + p * f.ln()).exp();
        if mode == WeightMode::ThetaAdjusted {
            let c = if nw_scheme.delta == 1 { u } else { 1.0 / u };
            let nu1 = nw_scheme.dm.nu(1);
            let omt = kernel::one_minus_theta(
                &nw_scheme.params,
                c * (nu1 - nw_scheme.dm.beta()),
                theta_tol,
            )
            .unwrap_or(f64::NAN);
            val *= omt;
        }
        val
    };

    // Support and profile-kink breakpoints.
    let mut breaks = vec![1.0];
    if let Ok(x_kink) = scheme.cm.u_inverse(1.0) {
        breaks.push(x_kink);
    }
    let r = match fam {
        TestFamily::ExtremalCutoff { .. } => {
            if scheme.delta == 1 {
                quad::tanh_sinh(&integrand, 0.0, 1.0, tol)
            } else {
                quad::exp_sinh(&integrand, 1.0, tol)
            }
        }
        TestFamily::Tabulated { xs, .. } => {
            quad::tanh_sinh(&integrand, xs[0].max(1e-300), *xs.last().unwrap(), tol)
        }
        TestFamily::SmoothPositive { .. } => quad::integrate_measure_axis(&integrand, &breaks, tol),
    };
    if !r.converged {
        return Err(Error::convergence("norm_f integral", r.value, r.err_estimate));
    }
    if !(r.value > 0.0) || !r.value.is_finite() {
        return Err(Error::domain(format!(
            "norm_f integral must be positive and finite, got {}",
            r.value
        )));
    }
    let norm = r.value.powf(1.0 / p);
    let rel = r.err_estimate / r.value;
    Ok(Estimate::new(norm, norm * rel / p.abs()))
}

/// Weighted sequence norm `(Σ Ψ a^q)^{1/q}` with certified tail truncation.
pub fn norm_a(fam: &TestFamily, weights: &NormWeights<'_>, tol: f64) -> Result<f64> {
    Ok(norm_a_est(fam, weights, tol)?.value)
}

pub(crate) fn norm_a_est(
    fam: &TestFamily,
    weights: &NormWeights<'_>,
    tol: f64,
) -> Result<Estimate> {
    reverse_positivity_guard(fam, &weights.hp, "norm_a")?;
    let scheme = weights.scheme;
    let hp = weights.hp;
    let q = hp.q;
    let sigma = scheme.params.sigma;
    let beta = scheme.dm.beta();

    let mut partial = 0.0f64;
    let tail_exp = fam.norm_tail_exponent(&hp);
    for term in scheme.dm.terms() {
        let w = term.v_n - beta;
        let a = fam.a_at(scheme, &hp, term.n)?;
        if a == 0.0 {
            match fam {
                TestFamily::Tabulated { seq, .. } if term.n > seq.len() => {
                    // Finite sequence: the sum is exact from here on.
                    break;
                }
                _ => {
                    return Err(Error::domain(
                        "norm_a: zero sequence entry makes the weighted power undefined",
                    ))
                }
            }
        }
        let ln_psi =
            (q * (1.0 - sigma) - 1.0) * w.ln() + (1.0 - q) * term.nu_next.ln();
        partial += (ln_psi + q * a.ln()).exp();

        if let Some(e) = tail_exp {
            if w > 1.0 && term.n >= 8 && term.n & (term.n - 1) == 0 {
                // For w ≥ 1 the summand is exactly C ν w^{-1-e}; read C off
                // the current term and bracket the tail.
                let this = (ln_psi + q * a.ln()).exp();
                let coef = this / (term.nu_next * w.powf(-1.0 - e));
                let tail = power_tail_sum(scheme, term.n, e, 0.25 * tol)?;
                let tail_val = coef * tail.value;
                let tail_err = coef * tail.err;
                let total = partial + tail_val;
                if tail_err <= tol * total.abs() {
                    if !(total > 0.0) {
                        return Err(Error::domain("norm_a sum must be positive"));
                    }
                    let norm = total.powf(1.0 / q);
                    return Ok(Estimate::new(norm, norm * (tail_err / total) / q.abs()));
                }
            }
        }
        if term.n >= 1_000_000 && tail_exp.is_none() {
            break;
        }
        if term.n >= 30_000_000 {
            return Err(Error::convergence("norm_a truncation", partial, f64::NAN));
        }
    }
    if !(partial > 0.0) || !partial.is_finite() {
        return Err(Error::domain(format!(
            "norm_a sum must be positive and finite, got {partial}"
        )));
    }
    let norm = partial.powf(1.0 / q);
    Ok(Estimate::new(norm, norm * 1e-14))
}

// ---------------------------------------------------------------------------
// The bilinear form I and the companion functionals J1, J2/J.
// ---------------------------------------------------------------------------

/// `I = Σ_n a_n ∫ h(U^δ(x)(V_n−β)) f(x) dx`.
pub fn bilinear_i(
    fam_f: &TestFamily,
    fam_a: &TestFamily,
    weights: &NormWeights<'_>,
    tol: f64,
) -> Result<f64> {
    Ok(bilinear_i_est(fam_f, fam_a, weights, tol)?.value)
}

pub(crate) fn bilinear_i_est(
    fam_f: &TestFamily,
    fam_a: &TestFamily,
    weights: &NormWeights<'_>,
    tol: f64,
) -> Result<Estimate> {
    let scheme = weights.scheme;
    let hp = weights.hp;

    let inner_tol = (0.05 * tol).max(1e-12);
    let inner = InnerEval::new(scheme, fam_f, hp, inner_tol)?;
    let beta = scheme.dm.beta();
    let mut partial = 0.0f64;
    let mut err = 0.0f64;
    let mut prev_in = f64::INFINITY;
    for term in scheme.dm.terms() {
        let w = term.v_n - beta;
        let a = fam_a.a_at(scheme, &hp, term.n)?;
        let file = inner.at(fam_f, w)?;
        if a != 0.0 {
            partial += a * file.value;
            err += a.abs() * file.err;
        }
        if !(file.value <= prev_in * (1.0 + 1e-9)) {
            // The inner integral is decreasing in n; a violation signals
            // quadrature trouble rather than mathematics.
            err += (file.value - prev_in).abs();
        }
        prev_in = file.value;

        if term.n >= 8 && term.n & (term.n - 1) == 0 {
            // Tail via the uniform inner-integral asymptote per family:
            // a_n In(n) ∈ ν w^{σ-1} χ(w) w^{-s_head} [in_lo, in_hi] with
            // χ(w) = w^{-T} beyond 1, a pure power sum with exponent
            // e = T + s_head − σ.
            if let (Some((s_head, in_lo, in_hi)), Some(t_exp)) =
                (inner.asymptote_bracket(fam_f, w), fam_a.a_power_tail(&hp))
            {
                let e = t_exp + s_head - scheme.params.sigma;
                if w > 1.0 && e > 0.0 {
                    let tail_rough = w.powf(-e) / e;
                    let spread_rough = (in_hi - in_lo) * tail_rough;
                    if spread_rough <= 0.5 * tol * partial.abs() || term.n >= 16_384 {
                        let projected = partial.abs() + in_hi * tail_rough;
                        let pt_tol = (0.25 * tol * projected
                            / (in_hi * tail_rough).max(f64::MIN_POSITIVE))
                        .clamp(1e-10, 1e-3);
                        let tail = power_tail_sum(scheme, term.n, e, pt_tol)?;
                        let t_lo = in_lo * (tail.value - tail.err);
                        let t_hi = in_hi * (tail.value + tail.err);
                        let value = partial + 0.5 * (t_lo + t_hi);
                        let half = 0.5 * (t_hi - t_lo);
                        if half <= tol * value.abs() || term.n >= 16_384 {
                            return Ok(Estimate::new(value, err + half));
                        }
                    }
                }
            }
            if let TestFamily::Tabulated { seq, .. } = fam_a {
                if term.n > seq.len() {
                    return Ok(Estimate::new(partial, err));
                }
            }
            // Generic forward fallback: In decreasing times a summable tail.
            if hp.regime == Regime::Forward {
                if let Some(t_exp) = fam_a.a_power_tail(&hp) {
                    let e = t_exp - scheme.params.sigma;
                    if w > 1.0 && e > 0.0 {
                        let a_tail_sum = power_tail_sum(scheme, term.n, e, 1e-3)?;
                        let bound = file.value * (a_tail_sum.value + a_tail_sum.err);
                        if bound <= tol * partial.abs() {
                            return Ok(Estimate::new(partial + 0.5 * bound, err + 0.5 * bound));
                        }
                    }
                }
            }
        }
        if term.n >= 65_536 {
            return Err(Error::convergence("bilinear form truncation", partial, err));
        }
    }
    unreachable!()
}

/// `J₁ = [Σ ν_{n+1} (V_n−β)^{pσ−1} (∫ h f)^p]^{1/p}`.
pub fn j1(fam_f: &TestFamily, weights: &NormWeights<'_>, tol: f64) -> Result<f64> {
    Ok(j1_est(fam_f, weights, tol)?.value)
}

pub(crate) fn j1_est(
    fam_f: &TestFamily,
    weights: &NormWeights<'_>,
    tol: f64,
) -> Result<Estimate> {
    reverse_positivity_guard(fam_f, &weights.hp, "j1")?;
    let inner_sum = j1_power_sum(fam_f, weights, tol)?;
    let p = weights.hp.p;
    let value = inner_sum.value.powf(1.0 / p);
    let rel = inner_sum.err / inner_sum.value.abs();
    Ok(Estimate::new(value, value * rel / p.abs()))
}

/// The sum `J₁^p` itself, needed by the equivalence identity.
pub(crate) fn j1_power_sum(
    fam_f: &TestFamily,
    weights: &NormWeights<'_>,
    tol: f64,
) -> Result<Estimate> {
    let scheme = weights.scheme;
    let hp = weights.hp;
    let p = hp.p;
    let sigma = scheme.params.sigma;
    let beta = scheme.dm.beta();
    let inner_tol = (0.05 * tol).max(1e-12);
    let inner = InnerEval::new(scheme, fam_f, hp, inner_tol)?;

    let mut partial = 0.0f64;
    let mut err = 0.0f64;
    // Beyond this many explicit inner integrals, return the certified
    // bracket even when it is wider than the requested tolerance; the
    // spread flows into the caller's error estimate.
    const SOFT_BUDGET: usize = 16_384;
    for term in scheme.dm.terms() {
        let w = term.v_n - beta;
        let file = inner.at(fam_f, w)?;
        if !(file.value > 0.0) {
            return Err(Error::domain(format!(
                "inner integral vanished at n={}, powers are undefined",
                term.n
            )));
        }
        let t = term.nu_next * w.powf(p * sigma - 1.0) * (p * file.value.ln()).exp();
        partial += t;
        err += t * p.abs() * (file.err / file.value);

        if term.n >= 8 && term.n & (term.n - 1) == 0 && w > 1.0 {
            if let Some((s_head, in_lo, in_hi)) = inner.asymptote_bracket(fam_f, w) {
                // Terms beyond: ν w^{pσ-1} In^p with In ∈ w^{-s_head}[lo,hi]:
                // pure power sum with exponent e = p(s_head − σ).
                let e = p * (s_head - sigma);
                if e > 0.0 && in_lo > 0.0 {
                    let (c_lo, c_hi) = if p > 0.0 {
                        (in_lo.powf(p), in_hi.powf(p))
                    } else {
                        (in_hi.powf(p), in_lo.powf(p))
                    };
                    // Free closed-form screen before paying for the sum.
                    let tail_rough = w.powf(-e) / e;
                    let spread_rough = (c_hi - c_lo) * tail_rough;
                    if spread_rough <= 0.5 * tol * partial.abs() || term.n >= SOFT_BUDGET {
                        let projected = partial.abs() + c_hi * tail_rough;
                        let pt_tol = (0.25 * tol * projected
                            / (c_hi * tail_rough).max(f64::MIN_POSITIVE))
                        .clamp(1e-10, 1e-3);
                        let tail = power_tail_sum(scheme, term.n, e, pt_tol)?;
                        let t_lo = c_lo * (tail.value - tail.err);
                        let t_hi = c_hi * (tail.value + tail.err);
                        let value = partial + 0.5 * (t_lo + t_hi);
                        let half = 0.5 * (t_hi - t_lo);
                        if half <= tol * value.abs() || term.n >= SOFT_BUDGET {
                            return Ok(Estimate::new(value, err + half));
                        }
                    }
                }
            }
            if let TestFamily::Tabulated { .. } = fam_f {
                // Compact support: In decays like the kernel; bound the tail
                // through the forward envelope argument below.
                if hp.regime == Regime::Forward {
                    let bound = j1_forward_tail_bound(fam_f, weights, w, inner_tol)?;
                    if bound <= tol * partial.abs() {
                        return Ok(Estimate::new(partial + 0.5 * bound, err + 0.5 * bound));
                    }
                }
            }
        }
        if term.n >= 65_536 {
            return Err(Error::convergence("J1 truncation", partial, err));
        }
    }
    unreachable!()
}

/// Forward-regime bound on `Σ_{n>N} ν w^{pσ-1} In^p` through the weighted
/// Holder step: the tail is at most
/// `k^{p-1} ∫ tailenv_σ(U^δ(x) w_N) Φ(x) f^p(x) dx`.
fn j1_forward_tail_bound(
    fam_f: &TestFamily,
    weights: &NormWeights<'_>,
    w_cut: f64,
    tol: f64,
) -> Result<f64> {
    let scheme = weights.scheme;
    let hp = weights.hp;
    let k = kernel::kernel_constant_closed(&scheme.params)?.value;
    let p = hp.p;
    let d = scheme.delta as f64;
    let sigma = scheme.params.sigma;
    let fam = fam_f.clone();
    let integrand = move |x: f64| {
        let u = scheme.cm.u_unchecked(x);
        if u <= 0.0 {
            return 0.0;
        }
        let f = fam.f_at(scheme, &hp, x).unwrap_or(0.0);
        if f <= 0.0 {
            return 0.0;
        }
        let mu = scheme.cm.mu(x);
        let phi = ((p * (1.0 - d * sigma) - 1.0) * u.ln() + (1.0 - p) * mu.ln()).exp();
        let c = if scheme.delta == 1 { u } else { 1.0 / u };
        let env = kernel::kernel_tail_bound(&scheme.params, sigma, c * w_cut)
            * c.powf(-sigma);
        // env is the remaining discrete weight mass at this x, in the same
        // units as U^{-δσ} ω.
        env * c.powf(sigma) * phi * (p * f.ln()).exp()
    };
    let r = quad::integrate_measure_axis(&integrand, &[1.0], tol.max(1e-3));
    Ok(k.powf(p - 1.0) * (r.value + r.err_estimate))
}

/// `J₂ = {∫ μ U^{qδσ-1} [Σ h a]^q dx}^{1/q}`; in the fractional regime the
/// `ThetaAdjusted` mode applies the extra `(1-θ)^{1-q}` factor (the paper's
/// J functional).
pub fn j2(
    fam_a: &TestFamily,
    weights: &NormWeights<'_>,
    mode: WeightMode,
    tol: f64,
) -> Result<f64> {
    Ok(j2_est(fam_a, weights, mode, tol)?.value)
}

pub(crate) fn j2_est(
    fam_a: &TestFamily,
    weights: &NormWeights<'_>,
    mode: WeightMode,
    tol: f64,
) -> Result<Estimate> {
    reverse_positivity_guard(fam_a, &weights.hp, "j2")?;
    let integral = j2_power_integral(fam_a, weights, mode, tol)?;
    let q = weights.hp.q;
    let value = integral.value.powf(1.0 / q);
    let rel = integral.err / integral.value.abs();
    Ok(Estimate::new(value, value * rel / q.abs()))
}

/// The integral `J₂^q` itself, needed by the equivalence identity.
pub(crate) fn j2_power_integral(
    fam_a: &TestFamily,
    weights: &NormWeights<'_>,
    mode: WeightMode,
    tol: f64,
) -> Result<Estimate> {
    let scheme = weights.scheme;
    let hp = weights.hp;
    let q = hp.q;
    let d = scheme.delta as f64;
    let sigma = scheme.params.sigma;
    // Per-node series noise integrates into a bias of the same relative
    // order, so the inner tolerance tracks the outer one.
    let inner_tol = (0.3 * tol).max(1e-10);
    let theta_tol = (0.01 * tol).max(1e-12);
    let fam = fam_a.clone();

    let integrand = move |x: f64| {
        let u = scheme.cm.u_unchecked(x);
        if u <= 0.0 {
            return 0.0;
        }
        let c = if scheme.delta == 1 { u } else { 1.0 / u };
        let s = match inner_series_sum(&fam, scheme, &hp, c, inner_tol) {
            Ok(v) => v,
            Err(_) => return f64::NAN,
        };
        if !(s > 0.0) {
            return f64::NAN;
        }
        let mu = scheme.cm.mu(x);
        let mut val = ((q * d * sigma - 1.0) * u.ln() + mu.ln() + q * s.ln()).exp();
        if mode == WeightMode::ThetaAdjusted {
            let nu1 = scheme.dm.nu(1);
            // (1−θ)^{1−q} must keep decaying long after 1−θ rounds to zero
            // at machine precision; the direct tail form underflows cleanly
            // and the exp(ln·) of zero gives the true limit 0 for q < 1.
            let omt = kernel::one_minus_theta(
                &scheme.params,
                c * (nu1 - scheme.dm.beta()),
                theta_tol,
            )
            .unwrap_or(f64::NAN);
            val *= ((1.0 - q) * omt.ln()).exp();
        }
        val
    };

    let w1 = scheme.dm.v(1) - scheme.dm.beta();
    let mut breaks = weights::kernel_axis_breaks(scheme, w1);
    if let Ok(x1) = scheme.cm.u_inverse(1.0) {
        breaks.push(x1);
    }
    let r = quad::integrate_measure_axis(&integrand, &breaks, tol);
    if !r.converged || !r.value.is_finite() {
        return Err(Error::convergence(
            "J2 x-quadrature",
            r.value,
            r.err_estimate,
        ));
    }
    Ok(Estimate::new(r.value, r.err_estimate))
}

/// Inner series `S(x) = Σ_n h(c (V_n−β)) a_n` with certified truncation:
/// a closed-form envelope screens the checkpoints, then the exact integral
/// bracket `[∫_{w_{N+1}}, ∫_{w_N}]` of `h(cu) u^{e−1}` finishes the tail.
fn inner_series_sum(
    fam_a: &TestFamily,
    scheme: &Scheme,
    hp: &HolderPair,
    c: f64,
    tol: f64,
) -> Result<f64> {
    let params = &scheme.params;
    let beta = scheme.dm.beta();
    let sigma = params.sigma;

    // Small kernel scale with a superlinearly growing summand profile
    // (exponent above γ+1): on the unit lattice the sum is the midpoint
    // rule for the kernel tail integral in z = c·w, with error O(c²), so
    // one quadrature replaces ~1/c explicit terms.
    if let Some(t_exp) = fam_a.a_power_tail(hp) {
        let e = sigma - t_exp;
        let c_switch = (tol / 10.0).sqrt().min(0.01);
        if scheme.dm.is_unit()
            && e > params.gamma + 1.0
            && c * (1.0 - beta).max(0.5) <= c_switch
        {
            let quad_tol = (0.1 * tol).clamp(1e-12, 1e-3);
            let mut head = 0.0f64;
            let mut k0 = 1usize;
            while (k0 as f64 - beta) < 1.0 {
                let w = k0 as f64 - beta;
                head += params.h_unchecked(c * w) * fam_a.a_at(scheme, hp, k0)?;
                k0 += 1;
            }
            let lower = c * (k0 as f64 - beta - 0.5);
            let tail = kernel::kernel_tail_integral(params, e, lower, quad_tol)?;
            let value = head + c.powf(-e) * tail.value;
            let err_rel = 10.0 * c * c + quad_tol;
            if err_rel <= tol {
                return Ok(value);
            }
        }
    }

    let mut partial = 0.0f64;
    for term in scheme.dm.terms() {
        let w = term.v_n - beta;
        let a = fam_a.a_at(scheme, hp, term.n)?;
        let t = params.h_unchecked(c * w) * a;
        partial += t;
        if term.n >= 4 && (term.n & (term.n - 1) == 0 || (term.n >= 32_768 && term.n % 4096 == 0))
        {
            if let TestFamily::Tabulated { seq, .. } = fam_a {
                if term.n >= seq.len() {
                    return Ok(partial);
                }
            }
            if w > 1.0 {
                let e = match fam_a {
                    TestFamily::ExtremalCutoff { eps } => sigma - eps / hp.q,
                    TestFamily::SmoothPositive { a_tail, .. } => sigma - a_tail,
                    TestFamily::Tabulated { .. } => unreachable!(),
                };
                let scale = partial.abs().max(f64::MIN_POSITIVE);
                let env = kernel::kernel_series_tail_bound(params, c, e, w);
                if env <= tol * scale {
                    return Ok(partial + 0.5 * env);
                }
                if t <= 0.3 * tol * scale && env.is_finite() {
                    // The bracket width is one term wide; evaluate the tail
                    // integral directly.
                    let q_tol = 0.2 * tol * scale / env.max(tol * scale);
                    let tail_fn =
                        |u: f64| params.h_unchecked(c * u) * u.powf(e - 1.0);
                    let hi = quad::exp_sinh(&tail_fn, w, q_tol.clamp(1e-12, 1e-3));
                    let lo = quad::exp_sinh(
                        &tail_fn,
                        w + term.nu_next,
                        q_tol.clamp(1e-12, 1e-3),
                    );
                    let t_lo = (lo.value - lo.err_estimate).max(0.0);
                    let t_hi = (hi.value + hi.err_estimate).min(env);
                    if hi.converged && lo.converged && t_hi - t_lo <= 2.0 * tol * scale {
                        return Ok(partial + 0.5 * (t_lo + t_hi));
                    }
                }
            }
        }
        if term.n >= 4_000_000 {
            return Err(Error::convergence("inner series truncation", partial, f64::NAN));
        }
    }
    unreachable!()
}

// ---------------------------------------------------------------------------
// Verification.
// ---------------------------------------------------------------------------

/// Everything one verification run produces.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct VerificationReport {
    pub p: f64,
    pub regime: Regime,
    pub weight_mode: WeightMode,
    pub i_value: f64,
    pub j1_value: f64,
    pub j2_or_j: f64,
    pub norm_f: f64,
    pub norm_a: f64,
    pub k_value: f64,
    /// Verdicts for the bilinear, J1, and J2/J relations, in that order.
    pub relations: [Verdict; 3],
    /// Slack ratios `I/(k·|f|·|a|)`, `J1/(k·|f|)`, `J2/(k·|a|)`.
    pub slack: [f64; 3],
}

/// Run the full three-relation verification for one regime.
///
/// Forward and reverse-negative runs require the plain weight, the
/// fractional regime requires the theta-adjusted weight; a mismatch is a
/// domain error, as is a test pair that violates the regime's hypotheses.
pub fn verify(
    fam_f: &TestFamily,
    fam_a: &TestFamily,
    weights: &NormWeights<'_>,
    mode: WeightMode,
    tol: f64,
) -> Result<VerificationReport> {
    let hp = weights.hp;
    match (hp.regime, mode) {
        (Regime::Forward, WeightMode::Plain) | (Regime::ReverseNeg, WeightMode::Plain) => {}
        (Regime::ReverseFrac, WeightMode::ThetaAdjusted) => {}
        (r, m) => {
            return Err(Error::domain(format!(
                "regime {r:?} does not admit weight mode {m:?}: the fractional regime \
                 requires the theta-adjusted weight and the others the plain weight"
            )))
        }
    }
    if hp.regime != Regime::Forward && !(fam_f.strictly_positive() && fam_a.strictly_positive()) {
        return Err(Error::domain(
            "hypothesis violated: reverse regimes require strictly positive test pairs",
        ));
    }

    let k = kernel::kernel_constant_closed(&weights.scheme.params)?;
    let nf = norm_f_est(fam_f, weights, mode, tol)?;
    let na = norm_a_est(fam_a, weights, tol)?;
    if !(nf.value > 0.0 && nf.value.is_finite() && na.value > 0.0 && na.value.is_finite()) {
        return Err(Error::domain(
            "hypothesis violated: norms must be positive and finite",
        ));
    }
    let i = bilinear_i_est(fam_f, fam_a, weights, tol)?;
    let j1v = j1_est(fam_f, weights, tol)?;
    let j2v = j2_est(fam_a, weights, mode, tol)?;

    let bound_i = k.value * nf.value * na.value;
    let bound_i_err = bound_i
        * (k.err_estimate / k.value + nf.err / nf.value + na.err / na.value);
    let bound_j1 = k.value * nf.value;
    let bound_j1_err = bound_j1 * (k.err_estimate / k.value + nf.err / nf.value);
    let bound_j2 = k.value * na.value;
    let bound_j2_err = bound_j2 * (k.err_estimate / k.value + na.err / na.value);

    let sign = if hp.regime == Regime::Forward { 1.0 } else { -1.0 };
    let relations = [
        Verdict::from_gap(sign * (bound_i - i.value), i.err + bound_i_err),
        Verdict::from_gap(sign * (bound_j1 - j1v.value), j1v.err + bound_j1_err),
        Verdict::from_gap(sign * (bound_j2 - j2v.value), j2v.err + bound_j2_err),
    ];

    Ok(VerificationReport {
        p: hp.p,
        regime: hp.regime,
        weight_mode: mode,
        i_value: i.value,
        j1_value: j1v.value,
        j2_or_j: j2v.value,
        norm_f: nf.value,
        norm_a: na.value,
        k_value: k.value,
        relations,
        slack: [
            i.value / bound_i,
            j1v.value / bound_j1,
            j2v.value / bound_j2,
        ],
    })
}

/// Substitution identities from the equivalence argument:
/// with `a*_n := ν (V−β)^{pσ-1} (∫ h f)^{p-1}` one has `J₁^p = ||a*||_q^q`,
/// and with `f*(x) := μ U^{qδσ-1} (Σ h a)^{q-1}` one has `J₂^q = ||f*||_p^p`.
/// Returns true when both hold to the requested relative tolerance.
pub fn equivalence_substitution_check(
    fam_f: &TestFamily,
    fam_a: &TestFamily,
    weights: &NormWeights<'_>,
    tol: f64,
) -> Result<bool> {
    if weights.hp.regime != Regime::Forward {
        return Err(Error::domain(
            "equivalence substitution check is defined for the forward regime",
        ));
    }
    let scheme = weights.scheme;
    let hp = weights.hp;
    let p = hp.p;
    let q = hp.q;
    let sigma = scheme.params.sigma;
    let beta = scheme.dm.beta();
    let compute_tol = (0.25 * tol).max(1e-11);

    // J1 route and the rebuilt sequence norm, summed through independent
    // floating-point pipelines over the same certified truncation range.
    let j1p = j1_power_sum(fam_f, weights, compute_tol)?;
    if !(j1p.value > 0.0) || !j1p.value.is_finite() {
        return Err(Error::domain(
            "degenerate J1 (zero or infinite) in the substitution identity",
        ));
    }
    let inner = InnerEval::new(scheme, fam_f, hp, compute_tol)?;
    let mut aq = 0.0f64;
    let mut aq_tail = 0.0f64;
    for term in scheme.dm.terms() {
        let w = term.v_n - beta;
        let file = inner.at(fam_f, w)?;
        let a_star = term.nu_next * w.powf(p * sigma - 1.0) * file.value.powf(p - 1.0);
        let ln_psi = (q * (1.0 - sigma) - 1.0) * w.ln() + (1.0 - q) * term.nu_next.ln();
        aq += (ln_psi + q * a_star.ln()).exp();
        if term.n >= 8 && term.n & (term.n - 1) == 0 && w > 1.0 {
            if let Some((s_head, in_lo, in_hi)) = inner.asymptote_bracket(fam_f, w) {
                let e = p * (s_head - sigma);
                if e > 0.0 && in_lo > 0.0 {
                    let tail_rough = w.powf(-e) / e;
                    let spread_rough = (in_hi.powf(p) - in_lo.powf(p)).abs() * tail_rough;
                    if spread_rough <= 0.5 * compute_tol * aq.abs() || term.n >= 16_384 {
                        let tail = power_tail_sum(scheme, term.n, e, 1e-9)?;
                        let t_lo = in_lo.powf(p) * (tail.value - tail.err);
                        let t_hi = in_hi.powf(p) * (tail.value + tail.err);
                        aq_tail = 0.5 * (t_lo + t_hi);
                        break;
                    }
                }
            }
        }
        if term.n >= 65_536 {
            return Err(Error::convergence("substitution identity truncation", aq, f64::NAN));
        }
    }
    aq += aq_tail;
    let first_ok = (j1p.value - aq).abs() <= tol * j1p.value.abs() + 10.0 * j1p.err;

    // J2 route and the rebuilt function norm.
    let j2q = j2_power_integral(fam_a, weights, WeightMode::Plain, compute_tol)?;
    let fam_a_c = fam_a.clone();
    let series_tol = (0.3 * compute_tol).max(1e-10);
    let integrand = move |x: f64| {
        let u = scheme.cm.u_unchecked(x);
        if u <= 0.0 {
            return 0.0;
        }
        let c = if scheme.delta == 1 { u } else { 1.0 / u };
        let s = match inner_series_sum(&fam_a_c, scheme, &hp, c, series_tol) {
            Ok(v) => v,
            Err(_) => return f64::NAN,
        };
        let mu = scheme.cm.mu(x);
        let d = scheme.delta as f64;
        // f* = μ U^{qδσ-1} S^{q-1}; assemble Φ (f*)^p in log space.
        let ln_fstar = mu.ln() + (q * d * sigma - 1.0) * u.ln() + (q - 1.0) * s.ln();
        let ln_phi = (p * (1.0 - d * sigma) - 1.0) * u.ln() + (1.0 - p) * mu.ln();
        (ln_phi + p * ln_fstar).exp()
    };
    let w1 = scheme.dm.v(1) - beta;
    let breaks = weights::kernel_axis_breaks(scheme, w1);
    let fp = quad::integrate_measure_axis(&integrand, &breaks, compute_tol);
    let second_ok = (j2q.value - fp.value).abs()
        <= tol * j2q.value.abs() + 10.0 * (j2q.err + fp.err_estimate);

    Ok(first_ok && second_ok)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::measures::{ContinuousMeasure, DiscreteMeasure};

    fn rel(a: f64, b: f64) -> f64 {
        (a - b).abs() / b.abs().max(f64::MIN_POSITIVE)
    }

    fn unit_scheme(delta: i32, beta: f64, params: KernelParams) -> Scheme {
        Scheme::new(
            params,
            delta,
            ContinuousMeasure::unit(),
            DiscreteMeasure::unit(beta).unwrap(),
        )
        .unwrap()
    }

    fn cor54_scheme() -> Scheme {
        unit_scheme(1, 0.5, KernelParams::new(1.0, 1.0, 0.5, 1.0).unwrap())
    }

    fn damped_scheme(delta: i32) -> Scheme {
        Scheme::new(
            KernelParams::new(1.0, 0.5, 0.4, 0.9).unwrap(),
            delta,
            ContinuousMeasure::power_damped(0.5).unwrap(),
            DiscreteMeasure::power_seq(0.5, 0.5).unwrap(),
        )
        .unwrap()
    }

    #[test]
    fn holder_pair_classification() {
        let f = HolderPair::new(2.0).unwrap();
        assert_eq!(f.regime, Regime::Forward);
        assert!((1.0 / f.p + 1.0 / f.q - 1.0).abs() < 1e-15);
        let rn = HolderPair::new(-1.0).unwrap();
        assert_eq!(rn.regime, Regime::ReverseNeg);
        assert!((rn.q - 0.5).abs() < 1e-15);
        let rf = HolderPair::new(0.5).unwrap();
        assert_eq!(rf.regime, Regime::ReverseFrac);
        assert!((rf.q + 1.0).abs() < 1e-15);
        assert!(HolderPair::new(0.0).is_err());
        assert!(HolderPair::new(1.0).is_err());
    }

    #[test]
    fn extremal_norm_matches_closed_form() {
        // ||f~||_p = (U^{δε}(1)/ε)^{1/p}; unit measures make U(1) = 1.
        for delta in [1, -1] {
            let scheme = unit_scheme(delta, 0.5, KernelParams::new(1.0, 1.0, 0.5, 1.0).unwrap());
            let hp = HolderPair::new(2.0).unwrap();
            let w = NormWeights::new(&scheme, hp);
            let eps = 0.2;
            let fam = TestFamily::ExtremalCutoff { eps };
            let nf = norm_f(&fam, &w, WeightMode::Plain, 1e-10).unwrap();
            let expect = (1.0f64 / eps).powf(1.0 / hp.p);
            assert!(rel(nf, expect) < 1e-8, "delta={delta}: {nf} vs {expect}");
        }
        // Non-unit measure: U(1) enters through the closed form.
        let scheme = damped_scheme(1);
        let hp = HolderPair::new(2.5).unwrap();
        let w = NormWeights::new(&scheme, hp);
        let eps = 0.15;
        let u1 = scheme.cm.u(1.0).unwrap();
        let nf = norm_f(&TestFamily::ExtremalCutoff { eps }, &w, WeightMode::Plain, 1e-10)
            .unwrap();
        let expect = (u1.powf(eps) / eps).powf(1.0 / hp.p);
        assert!(rel(nf, expect) < 1e-8, "{nf} vs {expect}");
    }

    #[test]
    fn smooth_norm_matches_closed_form() {
        // ∫ ψ^p dv/v = 1/(p t1) + 1/(p t2) for the piecewise power profile.
        for (delta, p) in [(1, 2.0), (-1, 2.0), (1, 3.5), (1, -1.0), (1, 0.5)] {
            let scheme = damped_scheme(delta);
            let hp = HolderPair::new(p).unwrap();
            let w = NormWeights::new(&scheme, hp);
            let fam = TestFamily::smooth_for(hp.regime, &scheme.params);
            let (t1, t2) = match &fam {
                TestFamily::SmoothPositive { f_head, f_tail, .. } => (*f_head, *f_tail),
                _ => unreachable!(),
            };
            let nf = norm_f(&fam, &w, WeightMode::Plain, 1e-10).unwrap();
            let expect = (1.0 / (p * t1) + 1.0 / (p * t2)).powf(1.0 / p);
            assert!(
                rel(nf, expect) < 1e-7,
                "delta={delta} p={p}: {nf} vs {expect}"
            );
        }
    }

    #[test]
    fn tabulated_norm_matches_quadrature_oracle() {
        // f(x) = e^{-x} x^{1/4} on unit measures, σ=1, p=2, δ=1:
        // ∫ x^{-1} f² dx = √(π/2), frozen from an independent quadrature.
        let scheme = cor54_scheme();
        let hp = HolderPair::new(2.0).unwrap();
        let w = NormWeights::new(&scheme, hp);
        // Quartic knot spacing keeps the interpolation error of the
        // singular-weight integral below the comparison tolerance.
        let n = 4000usize;
        let xs: Vec<f64> = (0..=n).map(|i| 12.0 * (i as f64 / n as f64).powi(4)).collect();
        let fs: Vec<f64> = xs.iter().map(|&x| (-x).exp() * x.powf(0.25)).collect();
        let fam = TestFamily::Tabulated {
            xs,
            fs,
            seq: vec![1.0],
        };
        let nf = norm_f(&fam, &w, WeightMode::Plain, 1e-9).unwrap();
        assert!(rel(nf, 1.1195151349202451) < 2e-4, "{nf}");
    }

    #[test]
    fn sequence_norm_matches_brute_force() {
        // a_n = n^{-2}, unit measure with β = 1/2, q = 2.
        let scheme = cor54_scheme();
        let hp = HolderPair::new(2.0).unwrap();
        let w = NormWeights::new(&scheme, hp);
        let seq: Vec<f64> = (1..=400).map(|n| (n as f64).powi(-2)).collect();
        let fam = TestFamily::Tabulated {
            xs: vec![0.1, 1.0],
            fs: vec![1.0, 1.0],
            seq,
        };
        let na = norm_a(&fam, &w, 1e-10).unwrap();
        assert!(rel(na, 1.4312103839309527) < 1e-8, "{na}");
    }

    #[test]
    fn zero_inputs_rejected() {
        let scheme = cor54_scheme();
        let hp = HolderPair::new(2.0).unwrap();
        let w = NormWeights::new(&scheme, hp);
        let zero = TestFamily::Tabulated {
            xs: vec![0.5, 1.0],
            fs: vec![0.0, 0.0],
            seq: vec![0.0],
        };
        assert!(norm_f(&zero, &w, WeightMode::Plain, 1e-9).is_err());
        assert!(norm_a(&zero, &w, 1e-9).is_err());
    }

    #[test]
    fn norm_weights_values() {
        let scheme = cor54_scheme();
        let hp = HolderPair::new(2.0).unwrap();
        let w = NormWeights::new(&scheme, hp);
        // Unit measures, σ=1, δ=1, p=q=2: Φ(x) = x^{-1}, Ψ(n) = (n-1/2)^{-1}.
        assert!(rel(w.phi(2.0).unwrap(), 0.5) < 1e-14);
        assert!(rel(w.psi(3).unwrap(), 1.0 / 2.5) < 1e-14);
        let pt = w.phi_tilde(2.0).unwrap();
        assert!(pt > 0.0 && pt < w.phi(2.0).unwrap());
        assert!(w.phi(0.0).is_err());
        assert!(w.psi(0).is_err());
    }

    #[test]
    fn forward_verify_all_relations() {
        for scheme in [cor54_scheme(), damped_scheme(1), damped_scheme(-1)] {
            let hp = HolderPair::new(2.0).unwrap();
            let w = NormWeights::new(&scheme, hp);
            let fam = TestFamily::smooth_for(hp.regime, &scheme.params);
            let rep = verify(&fam, &fam, &w, WeightMode::Plain, 1e-8).unwrap();
            for (i, v) in rep.relations.iter().enumerate() {
                assert_eq!(*v, Verdict::True, "relation {i} failed: {rep:?}");
            }
            for s in rep.slack {
                assert!(s > 0.0 && s < 1.0, "forward slack must sit below 1: {s}");
            }
        }
    }

    #[test]
    fn holder_step_soundness() {
        // I ≤ J1 ||a|| in the forward regime, reversed otherwise.
        let scheme = cor54_scheme();
        for p in [2.0, 3.0] {
            let hp = HolderPair::new(p).unwrap();
            let w = NormWeights::new(&scheme, hp);
            let fam = TestFamily::smooth_for(hp.regime, &scheme.params);
            let i = bilinear_i(&fam, &fam, &w, 1e-8).unwrap();
            let j = j1(&fam, &w, 1e-8).unwrap();
            let na = norm_a(&fam, &w, 1e-8).unwrap();
            assert!(i <= j * na * (1.0 + 1e-6), "I={i} vs J1*|a|={}", j * na);
        }
        for p in [-1.0, 0.5] {
            let hp = HolderPair::new(p).unwrap();
            let w = NormWeights::new(&scheme, hp);
            let fam = TestFamily::smooth_for(hp.regime, &scheme.params);
            let i = bilinear_i(&fam, &fam, &w, 1e-8).unwrap();
            let j = j1(&fam, &w, 1e-8).unwrap();
            let na = norm_a(&fam, &w, 1e-8).unwrap();
            assert!(i >= j * na * (1.0 - 1e-6), "I={i} vs J1*|a|={}", j * na);
        }
    }

    #[test]
    fn reverse_neg_verify() {
        let scheme = cor54_scheme();
        let hp = HolderPair::new(-1.0).unwrap();
        let w = NormWeights::new(&scheme, hp);
        let fam = TestFamily::smooth_for(hp.regime, &scheme.params);
        let rep = verify(&fam, &fam, &w, WeightMode::Plain, 1e-7).unwrap();
        for (i, v) in rep.relations.iter().enumerate() {
            assert_eq!(*v, Verdict::True, "reverse relation {i} failed: {rep:?}");
        }
        for s in rep.slack {
            assert!(s > 1.0, "reverse slack must exceed 1: {s}");
        }
    }

    #[test]
    fn reverse_frac_verify_with_adjusted_weight() {
        let scheme = cor54_scheme();
        let hp = HolderPair::new(0.5).unwrap();
        let w = NormWeights::new(&scheme, hp);
        let fam = TestFamily::smooth_for(hp.regime, &scheme.params);
        let rep = verify(&fam, &fam, &w, WeightMode::ThetaAdjusted, 1e-5).unwrap();
        for (i, v) in rep.relations.iter().enumerate() {
            assert_eq!(*v, Verdict::True, "fractional relation {i} failed: {rep:?}");
        }
    }

    #[test]
    fn regime_weight_mismatch_rejected() {
        let scheme = cor54_scheme();
        for (p, mode) in [
            (2.0, WeightMode::ThetaAdjusted),
            (-1.0, WeightMode::ThetaAdjusted),
            (0.5, WeightMode::Plain),
        ] {
            let hp = HolderPair::new(p).unwrap();
            let w = NormWeights::new(&scheme, hp);
            let fam = TestFamily::smooth_for(hp.regime, &scheme.params);
            assert!(verify(&fam, &fam, &w, mode, 1e-8).is_err());
        }
    }

    #[test]
    fn reverse_rejects_cutoff_families() {
        let scheme = cor54_scheme();
        let hp = HolderPair::new(-1.0).unwrap();
        let w = NormWeights::new(&scheme, hp);
        let fam = TestFamily::ExtremalCutoff { eps: 0.1 };
        assert!(verify(&fam, &fam, &w, WeightMode::Plain, 1e-8).is_err());
        assert!(norm_f(&fam, &w, WeightMode::Plain, 1e-8).is_err());
    }

    #[test]
    fn scaling_covariance() {
        let scheme = cor54_scheme();
        let hp = HolderPair::new(2.0).unwrap();
        let w = NormWeights::new(&scheme, hp);
        let base = TestFamily::smooth_for(hp.regime, &scheme.params);
        let scaled = match &base {
            TestFamily::SmoothPositive {
                f_head,
                f_tail,
                a_head,
                a_tail,
                ..
            } => TestFamily::SmoothPositive {
                f_head: *f_head,
                f_tail: *f_tail,
                a_head: *a_head,
                a_tail: *a_tail,
                f_scale: 3.0,
            },
            _ => unreachable!(),
        };
        let r1 = verify(&base, &base, &w, WeightMode::Plain, 1e-9).unwrap();
        let r2 = verify(&scaled, &base, &w, WeightMode::Plain, 1e-9).unwrap();
        assert!(rel(r2.i_value, 3.0 * r1.i_value) < 1e-9);
        assert!(rel(r2.j1_value, 3.0 * r1.j1_value) < 1e-9);
        assert!(rel(r2.norm_f, 3.0 * r1.norm_f) < 1e-9);
        for i in 0..3 {
            assert!((r2.slack[i] - r1.slack[i]).abs() < 1e-10 * r1.slack[i]);
        }
    }

    #[test]
    fn bilinear_on_extremal_pair_stays_below_bound() {
        let scheme = cor54_scheme();
        let hp = HolderPair::new(2.0).unwrap();
        let w = NormWeights::new(&scheme, hp);
        let eps = 0.2;
        let fam = TestFamily::ExtremalCutoff { eps };
        let i = bilinear_i(&fam, &fam, &w, 1e-8).unwrap();
        let k = kernel::kernel_constant_closed(&scheme.params).unwrap().value;
        let nf = norm_f(&fam, &w, WeightMode::Plain, 1e-9).unwrap();
        let na = norm_a(&fam, &w, 1e-9).unwrap();
        assert!(i > 0.0);
        assert!(i < k * nf * na, "I={i} must stay below {k}*{nf}*{na}");
        // ε·I stays within (0, k·U^{δε}(1)] scaled by the norm product shape.
        assert!(eps * i <= k * (eps * nf * na) * (1.0 + 1e-9));
    }

    #[test]
    fn equivalence_substitution_identities() {
        let scheme = cor54_scheme();
        let hp = HolderPair::new(2.0).unwrap();
        let w = NormWeights::new(&scheme, hp);
        let fam = TestFamily::smooth_for(hp.regime, &scheme.params);
        assert!(equivalence_substitution_check(&fam, &fam, &w, 1e-8).unwrap());

        // Looser tolerance for the cutoff family on the J1 side; the J2
        // side keeps the smooth sequence.
        let ext = TestFamily::ExtremalCutoff { eps: 0.25 };
        assert!(equivalence_substitution_check(&ext, &fam, &w, 1e-6).unwrap());

        let hp_rev = HolderPair::new(-1.0).unwrap();
        let w_rev = NormWeights::new(&scheme, hp_rev);
        assert!(equivalence_substitution_check(&fam, &fam, &w_rev, 1e-8).is_err());
    }
}
