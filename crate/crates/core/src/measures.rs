//! Continuous and discrete measures.
//!
//! The continuous side carries a positive density `μ` with primitive
//! `U(x) = ∫₀ˣ μ`, the discrete side a decreasing positive sequence `ν_n`
//! with partial sums `V_n` and the step extension `V(y)` that interpolates
//! them piecewise-linearly. Built-in families match the CLI identifiers
//! `power_damped(a)`, `unit` and `power_seq(a)`, `unit`; tabulated variants
//! carry an explicit power-decay tail so every infinite sum and integral
//! keeps a certified truncation bound.

use std::sync::RwLock;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::kernel::KernelParams;

/// Density family of the continuous measure.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub enum ContinuousFamily {
    /// `μ(t) = (1+t)^{-a}` with `0 ≤ a ≤ 1`; `U(∞) = ∞`.
    PowerDamped { a: f64 },
    /// `μ ≡ 1`, `U(x) = x`.
    UnitDensity,
    /// Piecewise-linear density through `(xs, mus)` followed by a power-
    /// damped tail `μ(t) = μ_L ((1+t)/(1+x_L))^{-tail_exponent}`.
    Tabulated {
        xs: Vec<f64>,
        mus: Vec<f64>,
        tail_exponent: f64,
    },
}

/// Continuous measure `μ(t) dt` on `(0, ∞)` with primitive `U`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ContinuousMeasure {
    family: ContinuousFamily,
    /// Cumulative `U` at tabulated breakpoints (empty for closed forms).
    #[serde(skip)]
    knots: Vec<f64>,
}

impl ContinuousMeasure {
    pub fn power_damped(a: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&a) {
            return Err(Error::domain(format!(
                "power_damped exponent must lie in [0,1], got {a}"
            )));
        }
        Ok(ContinuousMeasure {
            family: ContinuousFamily::PowerDamped { a },
            knots: Vec::new(),
        })
    }

    pub fn unit() -> Self {
        ContinuousMeasure {
            family: ContinuousFamily::UnitDensity,
            knots: Vec::new(),
        }
    }

    pub fn tabulated(xs: Vec<f64>, mus: Vec<f64>, tail_exponent: f64) -> Result<Self> {
        if xs.len() != mus.len() || xs.len() < 2 {
            return Err(Error::domain("tabulated measure needs >= 2 matched knots"));
        }
        if xs[0] != 0.0 {
            return Err(Error::domain("tabulated measure must start at x = 0"));
        }
        if !xs.windows(2).all(|w| w[1] > w[0]) {
            return Err(Error::domain("tabulated knots must be strictly increasing"));
        }
        if !mus.iter().all(|&m| m > 0.0 && m.is_finite()) {
            return Err(Error::domain("tabulated density must be positive"));
        }
        if !(tail_exponent >= 0.0) {
            return Err(Error::domain("tail exponent must be >= 0"));
        }
        let mut knots = vec![0.0];
        for i in 1..xs.len() {
            let cell = 0.5 * (mus[i - 1] + mus[i]) * (xs[i] - xs[i - 1]);
            knots.push(knots[i - 1] + cell);
        }
        Ok(ContinuousMeasure {
            family: ContinuousFamily::Tabulated {
                xs,
                mus,
                tail_exponent,
            },
            knots,
        })
    }

    /// Parse a CLI family identifier: `unit` or `power_damped(a)`.
    pub fn parse(id: &str) -> Result<Self> {
        let id = id.trim();
        if id == "unit" {
            return Ok(Self::unit());
        }
        if let Some(arg) = id
            .strip_prefix("power_damped(")
            .and_then(|r| r.strip_suffix(')'))
        {
            let a: f64 = arg
                .trim()
                .parse()
                .map_err(|_| Error::domain(format!("bad power_damped argument: {arg}")))?;
            return Self::power_damped(a);
        }
        Err(Error::domain(format!(
            "unknown continuous measure id: {id} (expected unit | power_damped(a))"
        )))
    }

    /// Density value `μ(t)` for `t > 0`.
    pub fn mu(&self, t: f64) -> f64 {
        match &self.family {
            ContinuousFamily::PowerDamped { a } => (1.0 + t).powf(-a),
            ContinuousFamily::UnitDensity => 1.0,
            ContinuousFamily::Tabulated {
                xs,
                mus,
                tail_exponent,
            } => {
                let last = xs.len() - 1;
                if t >= xs[last] {
                    mus[last] * ((1.0 + t) / (1.0 + xs[last])).powf(-tail_exponent)
                } else {
                    let i = xs.partition_point(|&x| x <= t).max(1) - 1;
                    let frac = (t - xs[i]) / (xs[i + 1] - xs[i]);
                    mus[i] + (mus[i + 1] - mus[i]) * frac
                }
            }
        }
    }

    /// Primitive `U(x) = ∫₀ˣ μ(t) dt`, `x ≥ 0`.
    pub fn u(&self, x: f64) -> Result<f64> {
        if !(x >= 0.0) {
            return Err(Error::domain(format!("U requires x >= 0, got {x}")));
        }
        Ok(self.u_unchecked(x))
    }

    pub(crate) fn u_unchecked(&self, x: f64) -> f64 {
        match &self.family {
            ContinuousFamily::PowerDamped { a } => {
                if (*a - 1.0).abs() < 1e-15 {
                    x.ln_1p()
                } else {
                    f64::exp_m1((1.0 - a) * x.ln_1p()) / (1.0 - a)
                }
            }
            ContinuousFamily::UnitDensity => x,
            ContinuousFamily::Tabulated {
                xs,
                mus,
                tail_exponent,
            } => {
                let last = xs.len() - 1;
                if x >= xs[last] {
                    let base = self.knots[last];
                    let m = mus[last];
                    let x_l = xs[last];
                    let a = *tail_exponent;
                    let scale = m * (1.0 + x_l).powf(a);
                    if (a - 1.0).abs() < 1e-15 {
                        base + m * (1.0 + x_l) * ((1.0 + x) / (1.0 + x_l)).ln()
                    } else {
                        base
                            + scale * ((1.0 + x).powf(1.0 - a) - (1.0 + x_l).powf(1.0 - a))
                                / (1.0 - a)
                    }
                } else {
                    let i = xs.partition_point(|&kx| kx <= x).max(1) - 1;
                    let dx = x - xs[i];
                    let slope = (mus[i + 1] - mus[i]) / (xs[i + 1] - xs[i]);
                    self.knots[i] + mus[i] * dx + 0.5 * slope * dx * dx
                }
            }
        }
    }

    /// Whether `U(∞) = ∞`.
    pub fn u_infinite(&self) -> bool {
        match &self.family {
            ContinuousFamily::PowerDamped { .. } | ContinuousFamily::UnitDensity => true,
            ContinuousFamily::Tabulated { tail_exponent, .. } => *tail_exponent <= 1.0,
        }
    }

    /// Inverse of `U`: the `x ≥ 0` with `U(x) = w`. Returns `∞` when `w`
    /// exceeds `U(∞)` of a finite-mass tail.
    pub fn u_inverse(&self, w: f64) -> Result<f64> {
        if !(w >= 0.0) {
            return Err(Error::domain(format!("u_inverse requires w >= 0, got {w}")));
        }
        match &self.family {
            ContinuousFamily::PowerDamped { a } => {
                if (*a - 1.0).abs() < 1e-15 {
                    Ok(f64::exp_m1(w))
                } else {
                    Ok(f64::exp_m1(f64::ln_1p((1.0 - a) * w) / (1.0 - a)))
                }
            }
            ContinuousFamily::UnitDensity => Ok(w),
            ContinuousFamily::Tabulated { .. } => {
                // Monotone bisection with geometric bracket growth.
                if w == 0.0 {
                    return Ok(0.0);
                }
                let mut hi = 1.0f64;
                let mut guard = 0;
                while self.u_unchecked(hi) < w {
                    hi *= 4.0;
                    guard += 1;
                    if guard > 600 {
                        return Ok(f64::INFINITY);
                    }
                }
                let mut lo = 0.0f64;
                for _ in 0..200 {
                    let mid = 0.5 * (lo + hi);
                    if self.u_unchecked(mid) < w {
                        lo = mid;
                    } else {
                        hi = mid;
                    }
                }
                Ok(0.5 * (lo + hi))
            }
        }
    }
}

/// Sequence family of the discrete measure.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub enum DiscreteFamily {
    /// `ν_n = n^{-a}` with `0 ≤ a ≤ 1`; `V(∞) = ∞`.
    PowerSequence { a: f64 },
    /// `ν_n ≡ 1`, `V_n = n`.
    UnitSequence,
    /// Explicit head values continued by `ν_n = head_L (n/L)^{-tail_exponent}`.
    Tabulated {
        head: Vec<f64>,
        tail_exponent: f64,
    },
}

/// Discrete measure: decreasing weights `ν_n`, partial sums `V_n`, the step
/// extension `V(y)`, and the accuracy shift `β ≤ ν₁/2`.
///
/// Immutable after construction; the lazily grown prefix-sum cache sits
/// behind a lock so concurrent reads stay deterministic.
#[derive(Debug, Serialize, Deserialize)]
pub struct DiscreteMeasure {
    family: DiscreteFamily,
    beta: f64,
    #[serde(skip, default = "empty_cache")]
    prefix: RwLock<Vec<f64>>,
}

fn empty_cache() -> RwLock<Vec<f64>> {
    RwLock::new(Vec::new())
}

impl Clone for DiscreteMeasure {
    fn clone(&self) -> Self {
        DiscreteMeasure {
            family: self.family.clone(),
            beta: self.beta,
            prefix: RwLock::new(self.prefix.read().unwrap().clone()),
        }
    }
}

impl DiscreteMeasure {
    fn build(family: DiscreteFamily, beta: f64) -> Result<Self> {
        let dm = DiscreteMeasure {
            family,
            beta,
            prefix: RwLock::new(Vec::new()),
        };
        let nu1 = dm.nu(1);
        if !(beta <= nu1 / 2.0) {
            return Err(Error::domain(format!(
                "beta must satisfy beta <= nu_1/2 = {}, got {beta}",
                nu1 / 2.0
            )));
        }
        Ok(dm)
    }

    pub fn power_seq(a: f64, beta: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&a) {
            return Err(Error::domain(format!(
                "power_seq exponent must lie in [0,1], got {a}"
            )));
        }
        Self::build(DiscreteFamily::PowerSequence { a }, beta)
    }

    pub fn unit(beta: f64) -> Result<Self> {
        Self::build(DiscreteFamily::UnitSequence, beta)
    }

    pub fn tabulated(head: Vec<f64>, tail_exponent: f64, beta: f64) -> Result<Self> {
        if head.is_empty() {
            return Err(Error::domain("tabulated sequence needs at least one value"));
        }
        if !head.iter().all(|&v| v > 0.0 && v.is_finite()) {
            return Err(Error::domain("sequence values must be positive"));
        }
        if !head.windows(2).all(|w| w[1] <= w[0]) {
            return Err(Error::domain("sequence must be decreasing"));
        }
        if !(tail_exponent >= 0.0) {
            return Err(Error::domain("tail exponent must be >= 0"));
        }
        Self::build(
            DiscreteFamily::Tabulated {
                head,
                tail_exponent,
            },
            beta,
        )
    }

    /// Parse a CLI family identifier: `unit` or `power_seq(a)`.
    pub fn parse(id: &str, beta: f64) -> Result<Self> {
        let id = id.trim();
        if id == "unit" {
            return Self::unit(beta);
        }
        if let Some(arg) = id
            .strip_prefix("power_seq(")
            .and_then(|r| r.strip_suffix(')'))
        {
            let a: f64 = arg
                .trim()
                .parse()
                .map_err(|_| Error::domain(format!("bad power_seq argument: {arg}")))?;
            return Self::power_seq(a, beta);
        }
        Err(Error::domain(format!(
            "unknown discrete measure id: {id} (expected unit | power_seq(a))"
        )))
    }

    pub fn beta(&self) -> f64 {
        self.beta
    }

    /// Sequence value `ν_n`, `n ≥ 1`.
    pub fn nu(&self, n: usize) -> f64 {
        debug_assert!(n >= 1);
        match &self.family {
            DiscreteFamily::PowerSequence { a } => (n as f64).powf(-a),
            DiscreteFamily::UnitSequence => 1.0,
            DiscreteFamily::Tabulated {
                head,
                tail_exponent,
            } => {
                if n <= head.len() {
                    head[n - 1]
                } else {
                    head[head.len() - 1] * (n as f64 / head.len() as f64).powf(-tail_exponent)
                }
            }
        }
    }

    /// Whether `V(∞) = ∞`.
    pub fn v_infinite(&self) -> bool {
        match &self.family {
            DiscreteFamily::PowerSequence { .. } | DiscreteFamily::UnitSequence => true,
            DiscreteFamily::Tabulated { tail_exponent, .. } => *tail_exponent <= 1.0,
        }
    }

    /// Whether the sequence is identically one, i.e. `V_n = n` exactly.
    pub(crate) fn is_unit(&self) -> bool {
        matches!(self.family, DiscreteFamily::UnitSequence)
    }

    /// Partial sum `V_n = Σ_{j≤n} ν_j`.
    pub fn v(&self, n: usize) -> f64 {
        debug_assert!(n >= 1);
        if let DiscreteFamily::UnitSequence = self.family {
            return n as f64;
        }
        {
            let cache = self.prefix.read().unwrap();
            if n <= cache.len() {
                return cache[n - 1];
            }
        }
        let mut cache = self.prefix.write().unwrap();
        if n > cache.len() {
            let target = n.max(cache.len() * 2).max(1024);
            let mut sum = *cache.last().unwrap_or(&0.0);
            // Neumaier compensation keeps million-term prefixes at full
            // precision.
            let mut comp = 0.0f64;
            for m in cache.len() + 1..=target {
                let term = self.nu(m);
                let t = sum + term;
                comp += if sum.abs() >= term.abs() {
                    (sum - t) + term
                } else {
                    (term - t) + sum
                };
                sum = t;
                cache.push(sum + comp);
            }
        }
        cache[n - 1]
    }

    /// Step extension `V(y) = ∫₀^y ν(t) dt` with `ν(t) = ν_n` on `(n−1, n]`.
    ///
    /// Random access materializes prefix sums up to `⌈y⌉`, so the argument
    /// is capped; summation utilities stream instead and have no cap.
    pub fn v_step(&self, y: f64) -> Result<f64> {
        if !(y >= 0.0) {
            return Err(Error::domain(format!("V requires y >= 0, got {y}")));
        }
        if y == 0.0 {
            return Ok(0.0);
        }
        if y > 3.0e7 && !self.is_unit() {
            return Err(Error::domain(format!(
                "V(y) random access is limited to y <= 3e7 for cached sequences, got {y}"
            )));
        }
        let n = y.ceil() as usize;
        let base = if n >= 2 { self.v(n - 1) } else { 0.0 };
        Ok(base + self.nu(n) * (y - (n - 1) as f64))
    }

    /// Iterator over `(n, ν_{n+1}, V_n)` in increasing `n`, O(1) memory.
    pub(crate) fn terms(&self) -> MeasureTerms<'_> {
        MeasureTerms {
            dm: self,
            n: 0,
            v: 0.0,
            comp: 0.0,
            nu_next: self.nu(1),
        }
    }
}

pub(crate) struct MeasureTerms<'a> {
    dm: &'a DiscreteMeasure,
    n: usize,
    v: f64,
    comp: f64,
    nu_next: f64,
}

#[derive(Debug, Clone, Copy)]
pub(crate) struct MeasureTerm {
    pub n: usize,
    /// `ν_{n+1}`
    pub nu_next: f64,
    /// `V_n`
    pub v_n: f64,
}

impl Iterator for MeasureTerms<'_> {
    type Item = MeasureTerm;

    fn next(&mut self) -> Option<MeasureTerm> {
        self.n += 1;
        let nu_n = self.nu_next;
        let t = self.v + nu_n;
        self.comp += if self.v.abs() >= nu_n.abs() {
            (self.v - t) + nu_n
        } else {
            (nu_n - t) + self.v
        };
        self.v = t;
        self.nu_next = self.dm.nu(self.n + 1);
        Some(MeasureTerm {
            n: self.n,
            nu_next: self.nu_next,
            v_n: self.v + self.comp,
        })
    }
}

/// One half-discrete configuration: kernel parameters, direction `δ`, and
/// the two measures.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Scheme {
    pub params: KernelParams,
    pub delta: i32,
    pub cm: ContinuousMeasure,
    pub dm: DiscreteMeasure,
}

impl Scheme {
    pub fn new(
        params: KernelParams,
        delta: i32,
        cm: ContinuousMeasure,
        dm: DiscreteMeasure,
    ) -> Result<Self> {
        if delta != 1 && delta != -1 {
            return Err(Error::domain(format!("delta must be +1 or -1, got {delta}")));
        }
        Ok(Scheme {
            params,
            delta,
            cm,
            dm,
        })
    }

    /// `U^δ(x)` for `x > 0`.
    pub(crate) fn u_delta(&self, x: f64) -> Result<f64> {
        let u = self.cm.u(x)?;
        if u <= 0.0 {
            return Err(Error::domain(format!("U(x) must be positive, got U({x})={u}")));
        }
        Ok(if self.delta == 1 { u } else { 1.0 / u })
    }
}

/// Certified evaluation of `Σ_{n≥1} ν_{n+1} (V_n − β)^{-(1+b)}`.
///
/// Explicit summation plus the integral bracket
/// `∫_{V_{N+1}−β}^∞ u^{-1-b} du ≤ tail ≤ ∫_{V_N−β}^∞ u^{-1-b} du`, valid
/// because the summand is a left-endpoint rule for the step measure.
pub fn tail_sum(b: f64, dm: &DiscreteMeasure, tol: f64) -> Result<f64> {
    tail_sum_with_budget(b, dm, tol, 30_000_000)
}

pub fn tail_sum_with_budget(
    b: f64,
    dm: &DiscreteMeasure,
    tol: f64,
    max_terms: usize,
) -> Result<f64> {
    if !(b > 0.0) {
        return Err(Error::domain(format!(
            "tail_sum exponent must be positive, got b={b}"
        )));
    }
    if !dm.v_infinite() {
        return Err(Error::domain(
            "tail_sum requires V(infinity) = infinity for the bracket argument",
        ));
    }
    let beta = dm.beta();
    let mut partial = 0.0f64;
    let mut comp = 0.0f64;
    let mut prev_w = f64::NAN;
    for term in dm.terms() {
        let w = term.v_n - beta;
        let t = term.nu_next * w.powf(-1.0 - b);
        let s = partial + t;
        comp += if partial.abs() >= t.abs() {
            (partial - s) + t
        } else {
            (t - s) + partial
        };
        partial = s;

        // Bracket check on a sparse schedule once the head is in.
        if term.n >= 8 && (term.n & (term.n - 1) == 0 || term.n % 65_536 == 0) {
            let hi = prev_w.powf(-b) / b;
            let lo = w.powf(-b) / b;
            let mid = 0.5 * (hi + lo);
            let half = 0.5 * (hi - lo);
            let value = partial + comp + mid;
            if half <= tol * value.abs() {
                return Ok(value);
            }
        }
        if term.n >= max_terms {
            let hi = prev_w.powf(-b) / b;
            let lo = w.powf(-b) / b;
            return Err(Error::convergence(
                format!("tail_sum(b={b}) bracket not met within {max_terms} terms"),
                partial + comp + 0.5 * (hi + lo),
                0.5 * (hi - lo),
            ));
        }
        prev_w = w;
    }
    unreachable!("terms iterator is infinite")
}
