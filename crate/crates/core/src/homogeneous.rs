//! Spatially homogeneous relaxation `∂ₜg = L₁g`: the algebraic bound obtained from
//! the weighted Poincaré inequality plus moment propagation, and the weak-Poincaré
//! interpolation it replaces.

use rand::Rng;

use crate::collision::{CollisionKind, CollisionOperator};
use crate::diagnostics::Margin;
use crate::equilibria::Equilibrium;
use crate::error::{Error, Result};
use crate::grid::bracket;
use crate::moments::{profile_norm_sq, SplittingSpec};
use crate::spectral::{micro_constant, random_smooth};
use crate::transport::{CollisionScheme, Propagator};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HomogeneousConfig {
    pub dt: f64,
    pub t_end: f64,
    /// Record every `every` steps (and at the end).
    pub every: usize,
    pub scheme: CollisionScheme,
    /// Keep `g` at every recorded time.
    pub keep_snapshots: bool,
}

impl HomogeneousConfig {
    pub fn new(dt: f64, t_end: f64, every: usize) -> Self {
        Self { dt, t_end, every, scheme: CollisionScheme::CrankNicolson, keep_snapshots: false }
    }

    fn steps(&self) -> Result<usize> {
        if !(self.dt > 0.0 && self.t_end >= 0.0) {
            return Err(Error::Config(format!(
                "need dt > 0 and t_end >= 0, got dt = {}, t_end = {}",
                self.dt, self.t_end
            )));
        }
        Ok((self.t_end / self.dt).round() as usize)
    }
}

/// `(𝒦_k, 𝒦, 𝒞, β, k)` entering the algebraic bound.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BoundConstants {
    pub kk_k: f64,
    /// `𝒦_k² ‖g^init‖²_k + Θ_k (∫g^init)²`
    pub big_k: f64,
    pub c: f64,
    pub beta: f64,
    pub k: f64,
}

impl BoundConstants {
    pub fn for_run(op: &CollisionOperator, g_init: &[f64], k: f64) -> Result<Self> {
        if op.spec().kind != CollisionKind::FokkerPlanck {
            return Err(Error::Config("the homogeneous bound is stated for the Fokker-Planck operator".into()));
        }
        let eq = op.equilibrium();
        let beta = op.spec().beta;
        let kk_k = SplittingSpec::default_for(op, k)?.moment_bound()?.kk;
        let mass = eq.grid().integrate(g_init);
        let big_k = kk_k * kk_k * profile_norm_sq(op, g_init, k) + eq.theta_k(k)? * mass * mass;
        Ok(Self { kk_k, big_k, c: micro_constant(eq, beta), beta, k })
    }

    pub fn bound(&self, y0: f64, t: f64) -> f64 {
        prop_b_bound(y0, self.big_k, self.c, self.beta, self.k, t)
    }

    /// `θ = k/(k+β)`.
    pub fn holder_theta(&self) -> f64 {
        self.k / (self.k + self.beta)
    }
}

/// `(y₀^{-β/k} + 2β𝒞 t / (k 𝒦^{β/k}))^{-k/β}`.
pub fn prop_b_bound(y0: f64, kk_const: f64, c_const: f64, beta: f64, k: f64, t: f64) -> f64 {
    let q = beta / k;
    (y0.powf(-q) + 2.0 * beta * c_const * t / (k * kk_const.powf(q))).powf(-1.0 / q)
}

/// Log-log slope of the bound two to three decades past its crossover time.
pub fn prop_b_tail_slope(y0: f64, kk_const: f64, c_const: f64, beta: f64, k: f64) -> f64 {
    let q = beta / k;
    let t_c = y0.powf(-q) * k * kk_const.powf(q) / (2.0 * beta * c_const);
    let (t1, t2) = (1e2 * t_c, 1e3 * t_c);
    let b = |t| prop_b_bound(y0, kk_const, c_const, beta, k, t);
    (b(t2) / b(t1)).ln() / (t2 / t1).ln()
}

#[derive(Debug, Clone, PartialEq)]
pub struct HomogeneousRun {
    pub times: Vec<f64>,
    /// `y(t) = ∫|g − ḡ|² dμ`
    pub y_series: Vec<f64>,
    pub mass: Vec<f64>,
    /// `‖g(t)‖²_k`
    pub norm_k: Vec<f64>,
    /// `∫|∇h|² dξ` with `h = g/F`
    pub dissipation: Vec<f64>,
    pub g_series: Vec<Vec<f64>>,
    /// `ḡ = (∫g^init) F`
    pub gbar: Vec<f64>,
    pub k: f64,
    pub bound_constants: Option<BoundConstants>,
}

impl HomogeneousRun {
    pub fn max_y_increase(&self) -> f64 {
        self.y_series.windows(2).map(|w| (w[1] - w[0]) / w[0].max(f64::MIN_POSITIVE)).fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn mass_drift(&self) -> f64 {
        let m0 = self.mass[0];
        self.mass.iter().map(|m| (m - m0).abs() / m0.abs().max(f64::MIN_POSITIVE)).fold(0.0, f64::max)
    }

    /// `bound(t) − y(t)` relative to the bound, per recorded time.
    pub fn bound_margins(&self) -> Option<Vec<Margin>> {
        let c = self.bound_constants?;
        let y0 = self.y_series[0];
        Some(self.times.iter().zip(&self.y_series).map(|(&t, &y)| Margin::new(c.bound(y0, t), y)).collect())
    }

    /// Discrete form of `y' <= −2𝒞 𝒦^{1−1/θ} y^{1/θ}` via `y' = −2∫|∇h|² dξ`.
    pub fn groenwall_margins(&self) -> Option<Vec<Margin>> {
        let c = self.bound_constants?;
        let inv = 1.0 / c.holder_theta();
        Some(
            self.dissipation
                .iter()
                .zip(&self.y_series)
                .map(|(&d, &y)| Margin::new(2.0 * d, 2.0 * c.c * c.big_k.powf(1.0 - inv) * y.powf(inv)))
                .collect(),
        )
    }

    /// `sup_t ‖g(t)‖_k / ‖g^init‖_k`.
    pub fn moment_sup(&self) -> f64 {
        let n0 = self.norm_k[0];
        self.norm_k.iter().map(|n| (n / n0).sqrt()).fold(0.0, f64::max)
    }
}

fn centered_y(eq: &Equilibrium, g: &[f64], gbar: &[f64]) -> f64 {
    let w = eq.grid().weights();
    (0..g.len()).map(|i| w[i] * (g[i] - gbar[i]).powi(2) / eq.values()[i]).sum()
}

/// Integrates the homogeneous equation; `k` is the weight of the recorded moment.
pub fn run_homogeneous(
    op: &CollisionOperator,
    g_init: &[f64],
    k: f64,
    cfg: &HomogeneousConfig,
) -> Result<HomogeneousRun> {
    let eq = op.equilibrium();
    eq.grid().check_len(g_init.len(), "initial profile")?;
    let steps = cfg.steps()?;
    let every = cfg.every.max(1);
    let prop = Propagator::new(op, cfg.dt, cfg.scheme, None)?;
    let mass0 = eq.grid().integrate(g_init);
    let gbar: Vec<f64> = eq.values().iter().map(|f| mass0 * f).collect();
    let bound_constants = match op.spec().kind {
        CollisionKind::FokkerPlanck => Some(BoundConstants::for_run(op, g_init, k)?),
        CollisionKind::Scattering => None,
    };
    let mut run = HomogeneousRun {
        times: Vec::new(),
        y_series: Vec::new(),
        mass: Vec::new(),
        norm_k: Vec::new(),
        dissipation: Vec::new(),
        g_series: Vec::new(),
        gbar,
        k,
        bound_constants,
    };
    let record = |run: &mut HomogeneousRun, t: f64, g: &[f64]| {
        run.times.push(t);
        run.y_series.push(centered_y(eq, g, &run.gbar));
        run.mass.push(eq.grid().integrate(g));
        run.norm_k.push(profile_norm_sq(op, g, k));
        run.dissipation.push(op.dissipation(g));
        if cfg.keep_snapshots {
            run.g_series.push(g.to_vec());
        }
    };
    let mut g = g_init.to_vec();
    let mut scratch = Vec::new();
    record(&mut run, 0.0, &g);
    for n in 1..=steps {
        prop.apply(&mut g, &mut scratch);
        if g.iter().any(|x| !x.is_finite()) {
            return Err(Error::Numeric(format!("non-finite profile at step {n}")));
        }
        if n % every == 0 || n == steps {
            record(&mut run, n as f64 * cfg.dt, &g);
        }
    }
    Ok(run)
}

/// Relative mismatch between the centered difference of `y` and `−2∫|∇h|² dξ` at `t`.
pub fn dissipation_identity_residual(op: &CollisionOperator, g_init: &[f64], dt: f64, t: f64) -> Result<f64> {
    let n = (t / dt).round() as usize;
    if n < 1 {
        return Err(Error::Domain("probe time must be at least one step".into()));
    }
    let eq = op.equilibrium();
    let prop = Propagator::new(op, dt, CollisionScheme::CrankNicolson, None)?;
    let mass0 = eq.grid().integrate(g_init);
    let gbar: Vec<f64> = eq.values().iter().map(|f| mass0 * f).collect();
    let mut g = g_init.to_vec();
    let mut scratch = Vec::new();
    for _ in 0..n - 1 {
        prop.apply(&mut g, &mut scratch);
    }
    let y_minus = centered_y(eq, &g, &gbar);
    prop.apply(&mut g, &mut scratch);
    let diss = op.dissipation(&g);
    prop.apply(&mut g, &mut scratch);
    let y_plus = centered_y(eq, &g, &gbar);
    Ok(((y_plus - y_minus) / (2.0 * dt) + 2.0 * diss).abs() / (2.0 * diss))
}

/// `∫|h−h̃|² dξ <= (∫|h−h̃|² <v>^{-β} dξ)^θ (∫|h−h̃|² <v>^k dξ)^{1−θ}` with `θ = k/(k+β)`.
pub fn holder_margin(eq: &Equilibrium, h: &[f64], beta: f64, k: f64) -> Margin {
    let xi: Vec<f64> = eq.grid().weights().iter().zip(eq.values()).map(|(w, f)| w * f).collect();
    let mean = xi.iter().zip(h).map(|(x, h)| x * h).sum::<f64>() / xi.iter().sum::<f64>();
    let moment = |p: f64| -> f64 {
        xi.iter().zip(h).zip(eq.grid().nodes()).map(|((x, h), &v)| x * (h - mean).powi(2) * bracket(v).powf(p)).sum()
    };
    let theta = k / (k + beta);
    Margin::new(moment(-beta).powf(theta) * moment(k).powf(1.0 - theta), moment(0.0))
}

/// `τ` from `(τ+1)/τ = β/η`, and `C_{α,τ} = 𝒞^{-τ/(1+τ)} Θ_{βτ}^{1/(1+τ)}`
/// with `𝒞` the weighted Poincaré constant for `<v>^{-β}`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WeakPoincare {
    pub eta: f64,
    pub tau: f64,
    pub constant: f64,
}

pub fn weak_poincare_constant(eq: &Equilibrium, beta: f64, c_weighted: f64, eta: f64) -> Result<WeakPoincare> {
    if !(eta > 0.0 && eta < beta) {
        return Err(Error::Domain(format!("eta must lie in (0, beta = {beta}), got {eta}")));
    }
    let tau = eta / (beta - eta);
    // discrete Θ_{βτ}: the audit is a statement about grid functions
    let theta = eq.average(&eq.bracket_powers(beta * tau));
    let constant = c_weighted.powf(-tau / (1.0 + tau)) * theta.powf(1.0 / (1.0 + tau));
    Ok(WeakPoincare { eta, tau, constant })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WeakPoincareAudit {
    pub constant: WeakPoincare,
    pub samples: usize,
    pub min_margin: f64,
}

/// Checks the interpolation inequality on random bounded `h`, with `‖·‖_∞` the grid maximum.
pub fn weak_poincare_audit<R: Rng>(
    op: &CollisionOperator,
    eta: f64,
    samples: usize,
    rng: &mut R,
) -> Result<WeakPoincareAudit> {
    let eq = op.equilibrium();
    let beta = op.spec().beta;
    let wp = weak_poincare_constant(eq, beta, micro_constant(eq, beta), eta)?;
    let mut min_margin = f64::INFINITY;
    for _ in 0..samples {
        let h = random_smooth(eq.grid(), rng);
        let g: Vec<f64> = h.iter().zip(eq.values()).map(|(h, f)| h * f).collect();
        let m = weak_poincare_margin(op, &wp, &g);
        min_margin = min_margin.min(m.relative());
    }
    Ok(WeakPoincareAudit { constant: wp, samples, min_margin })
}

/// Margin of the interpolation inequality for `g = hF`.
pub fn weak_poincare_margin(op: &CollisionOperator, wp: &WeakPoincare, g: &[f64]) -> Margin {
    let eq = op.equilibrium();
    let h: Vec<f64> = g.iter().zip(eq.values()).map(|(g, f)| g / f).collect();
    let mean = eq.average(&h);
    let lhs: f64 =
        eq.grid().weights().iter().zip(eq.values()).zip(&h).map(|((w, f), h)| w * f * (h - mean).powi(2)).sum();
    let sup = h.iter().map(|h| (h - mean).abs()).fold(0.0, f64::max);
    let grad = op.dissipation(g);
    let t = wp.tau;
    Margin::new(wp.constant * grad.powf(t / (1.0 + t)) * sup.powf(2.0 / (1.0 + t)), lhs)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::collision::CollisionSpec;
    use crate::equilibria::equilibrium_for;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn fp(alpha: f64, n: usize) -> CollisionOperator {
        let eq = equilibrium_for(alpha, 1, 8.0, n).unwrap();
        CollisionOperator::new(&CollisionSpec::fokker_planck(alpha), &eq).unwrap()
    }

    fn bump(op: &CollisionOperator) -> Vec<f64> {
        let eq = op.equilibrium();
        eq.grid().nodes().iter().zip(eq.values()).map(|(&v, f)| f.sqrt() * bracket(v - 3.0).powf(-4.0)).collect()
    }

    #[test]
    fn equilibrium_is_stationary() {
        let op = fp(0.5, 201);
        let run = run_homogeneous(&op, op.equilibrium().values(), 2.0, &HomogeneousConfig::new(0.1, 5.0, 10)).unwrap();
        assert!(run.y_series.iter().all(|y| *y < 1e-24));
        assert!(run.mass_drift() < 1e-13);
    }

    #[test]
    fn run_relaxes_monotonically_below_the_bound() {
        let op = fp(0.5, 301);
        let g = bump(&op);
        let run = run_homogeneous(&op, &g, 2.0, &HomogeneousConfig::new(0.05, 40.0, 20)).unwrap();
        assert!(run.max_y_increase() <= 0.0);
        assert!(run.mass_drift() < 1e-11);
        assert!(run.bound_margins().unwrap().iter().all(|m| m.passes()));
        assert!(run.groenwall_margins().unwrap().iter().all(|m| m.passes()));
        assert!(run.moment_sup() <= run.bound_constants.unwrap().kk_k);
    }

    #[test]
    fn dissipation_identity_is_second_order() {
        let op = fp(0.5, 201);
        let g = bump(&op);
        let r1 = dissipation_identity_residual(&op, &g, 0.02, 1.0).unwrap();
        let r2 = dissipation_identity_residual(&op, &g, 0.01, 1.0).unwrap();
        assert!(r1 < 1e-2 && (r1 / r2 - 4.0).abs() < 0.8, "{r1} {r2}");
    }

    #[test]
    fn bound_starts_at_y0_and_has_the_predicted_tail() {
        assert!((prop_b_bound(2.0, 10.0, 0.1, 1.0, 2.0, 0.0) - 2.0).abs() < 1e-14);
        let s = prop_b_tail_slope(2.0, 1e9, 0.02, 1.0, 2.0);
        assert!((s + 2.0).abs() < 0.05 * 2.0, "{s}");
    }

    #[test]
    fn holder_and_weak_poincare_hold_on_random_functions() {
        let op = fp(0.5, 301);
        let eq = op.equilibrium();
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..50 {
            let h = random_smooth(eq.grid(), &mut rng);
            assert!(holder_margin(eq, &h, 1.0, 2.0).passes());
        }
        let audit = weak_poincare_audit(&op, 0.5, 100, &mut rng).unwrap();
        assert!(audit.min_margin >= -1e-8);
        assert!((audit.constant.tau - 1.0).abs() < 1e-15);
        let flat = vec![0.0; eq.len()];
        let m = weak_poincare_margin(&op, &audit.constant, &flat);
        assert_eq!((m.value, m.scale), (0.0, 0.0));
    }

    #[test]
    fn weak_poincare_constant_blows_up_as_eta_approaches_beta() {
        let op = fp(0.5, 301);
        let eq = op.equilibrium();
        let c = micro_constant(eq, 1.0);
        let vals: Vec<f64> =
            [0.5, 0.7, 0.8, 0.9].iter().map(|&e| weak_poincare_constant(eq, 1.0, c, e).unwrap().constant).collect();
        assert!(vals.windows(2).all(|w| w[1] > w[0]), "{vals:?}");
        assert!(weak_poincare_constant(eq, 1.0, c, 1.0).is_err());
    }
}
