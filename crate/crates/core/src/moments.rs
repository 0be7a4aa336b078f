//! Propagation of weighted norms through the splitting `L − T = B + C`,
//! with `C = a 1_{|v|<R}` and `B = L − T − C`.
//!
//! `B` is dissipative in both `‖·‖_{k₁}` and `‖·‖_{k₂}` and maps `k₂` into `k₁` with
//! algebraic decay; Duhamel's formula then bounds `e^{t(L−T)}` on `‖·‖_{k₁}` by the
//! constant `𝒦_k` used downstream.

use crate::collision::{drift_constants, CollisionOperator};
use crate::diagnostics::Margin;
use crate::error::{Error, Result};
use crate::grid::bracket;
use crate::transport::{mu_weights, CollisionScheme, Propagator};

/// Gap added to `2ℓ` in the default choice of `k₂`.
pub const DEFAULT_GAP_MARGIN: f64 = 2.0;

/// Parameters of the splitting for the weights `<v>^{k₁}`, `<v>^{k₂}`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SplittingSpec {
    pub k1: f64,
    pub k2: f64,
    /// `max{a_{k₁}, a_{k₂}}`
    pub a: f64,
    /// `max{R_{k₁}, R_{k₂}}`
    pub r: f64,
    pub ell: f64,
    /// `b_{k₁}`, the drift rate entering the Grönwall closed form.
    pub b_k1: f64,
}

/// `𝒦_k` and the ingredients of its Duhamel integral.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MomentBound {
    pub kk: f64,
    /// `1 + a<R>^{k₂/2} ∫₀^∞ C (1+s)^{-p} ds`; equal to `kk`.
    pub duhamel_integral: f64,
    /// Prefactor `C` of `‖e^{tB}‖_{k₂→k₁} <= C (1+t)^{-p}` derived from the closed form.
    pub prefactor: f64,
    /// `p = (k₂ − k₁)/(2ℓ)`
    pub exponent: f64,
}

impl SplittingSpec {
    pub fn new(op: &CollisionOperator, k1: f64, k2: f64) -> Result<Self> {
        let spec = op.spec();
        let eq = op.equilibrium();
        let d1 = drift_constants(spec, eq, k1)?;
        let d2 = drift_constants(spec, eq, k2)?;
        let ell = d1.ell;
        if !(k2 > k1 + 2.0 * ell) {
            return Err(Error::Domain(format!("need k2 > k1 + 2 ell = {}, got k2 = {k2}", k1 + 2.0 * ell)));
        }
        Ok(Self { k1, k2, a: d1.a_k.max(d2.a_k), r: d1.r_k.max(d2.r_k), ell, b_k1: d1.b_k })
    }

    /// `(k, k + 2ℓ + 2)`.
    pub fn default_for(op: &CollisionOperator, k: f64) -> Result<Self> {
        let ell = drift_constants(op.spec(), op.equilibrium(), k)?.ell;
        Self::new(op, k, k + 2.0 * ell + DEFAULT_GAP_MARGIN)
    }

    pub fn exponent(&self) -> f64 {
        (self.k2 - self.k1) / (2.0 * self.ell)
    }

    /// The absorption `a 1_{|v|<R}` on the grid of `op`.
    pub fn absorption(&self, op: &CollisionOperator) -> Vec<f64> {
        op.equilibrium().grid().nodes().iter().map(|v| if v.abs() < self.r { self.a } else { 0.0 }).collect()
    }

    /// `((k₂−k₁)/(k₂−k₁+2ℓ b_{k₁} t))^{(k₂−k₁)/ℓ}`: bound on `‖e^{tB}f‖²_{k₁} / ‖f‖²_{k₂}`.
    pub fn groenwall_ratio(&self, t: f64) -> f64 {
        let gap = self.k2 - self.k1;
        (gap / (gap + 2.0 * self.ell * self.b_k1 * t)).powf(gap / self.ell)
    }

    /// Smallest `C` with `(1 + λt)^{-p} <= C (1+t)^{-p}` for the closed form's `λ`.
    pub fn groenwall_prefactor(&self) -> f64 {
        let lambda = 2.0 * self.ell * self.b_k1 / (self.k2 - self.k1);
        (1.0 / lambda).max(1.0).powf(self.exponent())
    }

    pub fn moment_bound(&self) -> Result<MomentBound> {
        let p = self.exponent();
        if !(p > 1.0) {
            return Err(Error::Domain(format!("Duhamel integral diverges for exponent {p}")));
        }
        let prefactor = self.groenwall_prefactor();
        let kk = 1.0 + self.a * bracket(self.r).powf(0.5 * self.k2) * prefactor / (p - 1.0);
        Ok(MomentBound { kk, duhamel_integral: kk, prefactor, exponent: p })
    }
}

/// `‖f‖²_k` of a velocity profile.
pub fn profile_norm_sq(op: &CollisionOperator, f: &[f64], k: f64) -> f64 {
    mu_weights(op.equilibrium(), k).iter().zip(f).map(|(w, f)| w * f * f).sum()
}

/// Trajectory of `e^{tB}` on `x`-uniform data, where `T` vanishes.
#[derive(Debug, Clone, PartialEq)]
pub struct BDecaySeries {
    pub times: Vec<f64>,
    /// `‖e^{tB}f‖²_{k₁}`
    pub norm_k1: Vec<f64>,
    /// `‖e^{tB}f‖²_{k₂}`
    pub norm_k2: Vec<f64>,
    /// `‖f^init‖²_{k₂}`
    pub init_k2: f64,
}

impl BDecaySeries {
    /// `‖e^{tB}f‖_{k₁} / ‖f‖_{k₂}`.
    pub fn ratios(&self) -> Vec<f64> {
        self.norm_k1.iter().map(|n| (n / self.init_k2).sqrt()).collect()
    }

    /// Largest relative increase of `‖·‖_{k₁}` between consecutive samples.
    pub fn max_increase(&self) -> f64 {
        self.norm_k1.windows(2).map(|w| (w[1] - w[0]) / w[0]).fold(f64::NEG_INFINITY, f64::max)
    }

    /// Smallest relative margin of the closed-form Grönwall bound.
    pub fn groenwall_margin(&self, spec: &SplittingSpec) -> f64 {
        self.times
            .iter()
            .zip(&self.norm_k1)
            .map(|(&t, &n)| {
                let bound = spec.groenwall_ratio(t) * self.init_k2;
                (bound - n) / bound
            })
            .fold(f64::INFINITY, f64::min)
    }

    /// Empirical prefactor `sup_t (1+t)^p ‖e^{tB}f‖_{k₁}/‖f‖_{k₂}`.
    pub fn fitted_prefactor(&self, spec: &SplittingSpec) -> f64 {
        let p = spec.exponent();
        self.times.iter().zip(self.ratios()).map(|(t, r)| (1.0 + t).powf(p) * r).fold(0.0, f64::max)
    }
}

/// Integrates `∂ₜf = (L − a1_{|v|<R}) f` with implicit Euler, taking `substeps`
/// equal steps between consecutive entries of `t_grid` (which must start at 0).
pub fn semigroup_b_decay(
    op: &CollisionOperator,
    spec: &SplittingSpec,
    f_init: &[f64],
    t_grid: &[f64],
    substeps: usize,
) -> Result<BDecaySeries> {
    op.equilibrium().grid().check_len(f_init.len(), "initial profile")?;
    if t_grid.first() != Some(&0.0) || t_grid.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::Domain("time grid must start at 0 and increase strictly".into()));
    }
    let substeps = substeps.max(1);
    let absorption = spec.absorption(op);
    let mut f = f_init.to_vec();
    let mut scratch = Vec::new();
    let mut out = BDecaySeries {
        times: vec![0.0],
        norm_k1: vec![profile_norm_sq(op, &f, spec.k1)],
        norm_k2: vec![profile_norm_sq(op, &f, spec.k2)],
        init_k2: profile_norm_sq(op, &f, spec.k2),
    };
    let mut cached: Option<(f64, Propagator)> = None;
    for w in t_grid.windows(2) {
        let dt = (w[1] - w[0]) / substeps as f64;
        let reuse = matches!(&cached, Some((h, _)) if ((h - dt) / dt).abs() < 1e-12);
        if !reuse {
            cached = Some((dt, Propagator::new(op, dt, CollisionScheme::ImplicitEuler, Some(&absorption))?));
        }
        let prop = &cached.as_ref().expect("propagator cached").1;
        for _ in 0..substeps {
            prop.apply(&mut f, &mut scratch);
        }
        if f.iter().any(|x| !x.is_finite()) {
            return Err(Error::Numeric(format!("non-finite profile at t = {}", w[1])));
        }
        out.times.push(w[1]);
        out.norm_k1.push(profile_norm_sq(op, &f, spec.k1));
        out.norm_k2.push(profile_norm_sq(op, &f, spec.k2));
    }
    Ok(out)
}

/// Result of comparing a recorded norm series with `𝒦_k`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MomentAudit {
    /// `sup_t ‖f(t)‖_k / ‖f^init‖_k`
    pub observed_sup: f64,
    pub kk: f64,
    pub passes: bool,
}

/// Checks `sup_t ‖f(t)‖_k <= 𝒦_k ‖f^init‖_k` on a series of squared norms.
pub fn moment_propagation_audit(norms_sq: &[f64], bound: &MomentBound) -> MomentAudit {
    let first = norms_sq.first().copied().unwrap_or(0.0);
    let observed_sup = if first > 0.0 { norms_sq.iter().map(|n| (n / first).sqrt()).fold(0.0, f64::max) } else { 0.0 };
    MomentAudit { observed_sup, kk: bound.kk, passes: observed_sup <= bound.kk }
}

/// `‖f‖²_{k₁} <= ‖f‖^{2(k₂−k₁)/(k₂−k₁+ℓ)}_{k₁−ℓ} ‖f‖^{2ℓ/(k₂−k₁+ℓ)}_{k₂}`.
pub fn holder_step_margin(op: &CollisionOperator, spec: &SplittingSpec, f: &[f64]) -> Margin {
    let gap = spec.k2 - spec.k1;
    let lhs = profile_norm_sq(op, f, spec.k1);
    let low = profile_norm_sq(op, f, spec.k1 - spec.ell);
    let high = profile_norm_sq(op, f, spec.k2);
    let theta = gap / (gap + spec.ell);
    Margin::new(low.powf(theta) * high.powf(1.0 - theta), lhs)
}

/// `a <R>^{k₂/2} ‖f‖ >= ‖C f‖_{k₂}`.
pub fn absorption_bound_margin(op: &CollisionOperator, spec: &SplittingSpec, f: &[f64]) -> Margin {
    let cf: Vec<f64> = spec.absorption(op).iter().zip(f).map(|(a, f)| a * f).collect();
    let lhs = spec.a * bracket(spec.r).powf(0.5 * spec.k2) * profile_norm_sq(op, f, 0.0).sqrt();
    Margin::new(lhs, profile_norm_sq(op, &cf, spec.k2).sqrt())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::collision::CollisionSpec;
    use crate::equilibria::equilibrium_for;
    use crate::sampling::random_profile;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn fp(k_max: f64, n: usize) -> CollisionOperator {
        let eq = equilibrium_for(0.5, 1, k_max, n).unwrap();
        CollisionOperator::new(&CollisionSpec::fokker_planck(0.5), &eq).unwrap()
    }

    #[test]
    fn splitting_requires_a_wide_gap() {
        let op = fp(8.0, 201);
        assert!(SplittingSpec::new(&op, 1.0, 3.5).is_err());
        let s = SplittingSpec::default_for(&op, 2.0).unwrap();
        assert_eq!(s.k2, 2.0 + 2.0 * 1.5 + 2.0);
        assert!(s.exponent() > 1.0);
        let b = s.moment_bound().unwrap();
        assert!(b.kk >= 1.0 && b.kk.is_finite());
    }

    #[test]
    fn closed_form_starts_at_one_and_decays_with_the_exponent() {
        let op = fp(8.0, 201);
        let s = SplittingSpec::new(&op, 1.0, 6.0).unwrap();
        assert_eq!(s.groenwall_ratio(0.0), 1.0);
        let (t1, t2) = (1e8, 1e9);
        let slope = (s.groenwall_ratio(t2) / s.groenwall_ratio(t1)).ln() / (t2 / t1).ln();
        assert!((slope + 2.0 * s.exponent()).abs() < 1e-6);
        for t in [0.0, 0.3, 10.0, 1e4] {
            assert!(
                s.groenwall_ratio(t).sqrt() <= s.groenwall_prefactor() * (1.0 + t).powf(-s.exponent()) * (1.0 + 1e-12)
            );
        }
    }

    #[test]
    fn pure_inequalities_hold_on_random_profiles() {
        let op = fp(10.0, 301);
        let s = SplittingSpec::new(&op, 1.0, 6.0).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..100 {
            let f = random_profile(op.equilibrium(), &mut rng);
            assert!(holder_step_margin(&op, &s, &f).passes());
            assert!(absorption_bound_margin(&op, &s, &f).passes());
        }
    }

    #[test]
    fn b_semigroup_contracts_and_obeys_the_closed_form() {
        let op = fp(8.0, 301);
        let s = SplittingSpec::new(&op, 1.0, 6.0).unwrap();
        let eq = op.equilibrium();
        let f: Vec<f64> =
            eq.values().iter().zip(eq.grid().nodes()).map(|(f, &v)| f.sqrt() * bracket(v).powf(-4.0)).collect();
        let times: Vec<f64> = (0..=40).map(|j| if j == 0 { 0.0 } else { 10f64.powf(-2.0 + j as f64 * 0.1) }).collect();
        let series = semigroup_b_decay(&op, &s, &f, &times, 4).unwrap();
        assert_eq!(series.ratios()[0], (series.norm_k1[0] / series.init_k2).sqrt());
        assert!(series.max_increase() <= 1e-12);
        assert!(series.groenwall_margin(&s) >= -1e-8);
        assert!(series.fitted_prefactor(&s) <= s.groenwall_prefactor() * (1.0 + 1e-8));
    }

    #[test]
    fn audit_compares_sup_against_the_constant() {
        let b = MomentBound { kk: 2.0, duhamel_integral: 2.0, prefactor: 1.0, exponent: 2.0 };
        let ok = moment_propagation_audit(&[1.0, 2.0, 0.5], &b);
        assert!(ok.passes && (ok.observed_sup - 2f64.sqrt()).abs() < 1e-15);
        assert!(!moment_propagation_audit(&[1.0, 9.0], &b).passes);
    }
}
