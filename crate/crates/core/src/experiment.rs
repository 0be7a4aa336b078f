//! End-to-end kinetic runs: integrate, evaluate the entropy apparatus at every output
//! time, and audit the decay argument against the assembled constants.

use num_complex::Complex64;

use crate::collision::{macroscopic_diffusivity, CollisionOperator, CollisionSpec};
use crate::decay::{audit_state, fit_rate, nash_constant, DecayAudits, RateFit, RateInputs, RateModel};
use crate::diagnostics::{Diagnostics, HypoState, AUDIT_SLACK};
use crate::equilibria::{equilibrium_for, Equilibrium};
use crate::error::Result;
use crate::grid::{bracket, SpatialGrid};
use crate::moments::{moment_propagation_audit, MomentAudit, MomentBound, SplittingSpec};
use crate::transport::{half_period_autocorrelation, DistributionField, Integrator, SolverConfig, WRAP_THRESHOLD};

/// Velocity profile of `f^init = ρ₀(x) g(v)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum InitialProfile {
    /// `g = F`
    Equilibrium,
    /// `g ∝ √F <v>^{-(k+1+ε)/2}`: `‖f^init‖_k` finite, heavier weights barely so.
    HeavyTail { eps: f64 },
}

#[derive(Debug, Clone, PartialEq)]
pub struct KineticSetup {
    pub collision: CollisionSpec,
    pub alpha: f64,
    pub k: f64,
    pub nx: usize,
    pub nv: usize,
    /// Weight exponent used to size the velocity cutoff.
    pub k_max: f64,
    /// Torus length; `None` sizes it from the horizon.
    pub length: Option<f64>,
    pub solver: SolverConfig,
    /// Output cadence in steps.
    pub every: usize,
    pub profile: InitialProfile,
    /// Standard deviation of the Gaussian `ρ₀`, as a fraction of the torus length.
    pub bump_width: f64,
}

impl KineticSetup {
    /// Fokker-Planck run with `β = 2(1−α)`.
    pub fn fokker_planck(alpha: f64, k: f64, solver: SolverConfig) -> Self {
        Self {
            collision: CollisionSpec::fokker_planck(alpha),
            alpha,
            k,
            nx: 64,
            nv: 201,
            k_max: k + 8.0,
            length: None,
            solver,
            every: 10,
            profile: InitialProfile::Equilibrium,
            bump_width: 0.03,
        }
    }
}

/// One output time.
#[derive(Debug, Clone, PartialEq)]
pub struct KineticRow {
    pub state: HypoState,
    pub norm_k2: f64,
    pub rho_l1: f64,
    pub bound: f64,
    pub autocorrelation: f64,
    pub decay: DecayAudits,
}

#[derive(Debug, Clone, PartialEq)]
pub struct KineticReport {
    pub rows: Vec<KineticRow>,
    pub x: SpatialGrid,
    pub rate: RateModel,
    pub moment_bound: MomentBound,
    pub moment_audit: MomentAudit,
    /// First output time at which the torus has wrapped, if any.
    pub t_wrap: Option<f64>,
    /// Largest relative increase of `H` between outputs.
    pub h_max_increase: f64,
    pub fit: Option<RateFit>,
}

impl KineticReport {
    /// Names of failed audits with the first time each failed.
    pub fn failures(&self) -> Vec<(String, f64)> {
        let mut out: Vec<(String, f64)> = Vec::new();
        let mut note = |name: &str, t: f64| {
            if !out.iter().any(|(n, _)| n == name) {
                out.push((name.to_string(), t));
            }
        };
        for row in self.rows.iter().filter(|r| self.t_wrap.is_none_or(|tw| r.state.time < tw)) {
            for (name, m) in row.state.audits.all().into_iter().chain(row.decay.all()) {
                if !m.passes() {
                    note(name, row.state.time);
                }
            }
        }
        if self.h_max_increase > AUDIT_SLACK {
            note("h_monotone", f64::NAN);
        }
        if !self.moment_audit.passes {
            note("moment_propagation", f64::NAN);
        }
        out
    }

    pub fn passes(&self) -> bool {
        self.failures().is_empty()
    }
}

fn density_l1(rho_hat: &[Complex64], x: SpatialGrid) -> f64 {
    let mut d = DistributionField::zeros(x, 1);
    for (m, r) in rho_hat.iter().enumerate() {
        d.mode_mut(m)[0] = *r;
    }
    x.dx() * d.to_physical().iter().map(|r| r.abs()).sum::<f64>()
}

/// Velocity profile `g` of the initial datum, normalized to unit mass.
pub fn velocity_profile(profile: InitialProfile, eq: &Equilibrium, k: f64) -> Vec<f64> {
    match profile {
        InitialProfile::Equilibrium => eq.values().to_vec(),
        InitialProfile::HeavyTail { eps } => {
            let raw: Vec<f64> = eq
                .values()
                .iter()
                .zip(eq.grid().nodes())
                .map(|(f, &v)| f.sqrt() * bracket(v).powf(-(k + 1.0 + eps) / 2.0))
                .collect();
            let mass = eq.grid().integrate(&raw);
            raw.iter().map(|r| r / mass).collect()
        }
    }
}

fn initial_field(setup: &KineticSetup, eq: &Equilibrium, x: SpatialGrid) -> Result<DistributionField> {
    let center = 0.5 * x.length;
    let sigma = setup.bump_width * x.length;
    let rho: Vec<f64> = x.nodes().iter().map(|&xj| (-(xj - center).powi(2) / (2.0 * sigma * sigma)).exp()).collect();
    DistributionField::separable(x, &rho, &velocity_profile(setup.profile, eq, setup.k))
}

struct Prepared {
    eq: Equilibrium,
    op: CollisionOperator,
    diag: Diagnostics,
    x: SpatialGrid,
    f: DistributionField,
}

fn prepare(setup: &KineticSetup) -> Result<Prepared> {
    let eq = equilibrium_for(setup.alpha, 1, setup.k_max, setup.nv)?;
    let op = CollisionOperator::new(&setup.collision, &eq)?;
    let diag = Diagnostics::new(&op, &[setup.k])?;
    let diffusivity = eq.theta().max(macroscopic_diffusivity(&op)?);
    let length = setup.length.unwrap_or_else(|| SpatialGrid::length_for_horizon(diffusivity, setup.solver.t_end));
    let x = SpatialGrid::new(setup.nx, length)?;
    // nonnegative by construction, which the L¹ bound in run_kinetic relies on
    let f = initial_field(setup, &eq, x)?;
    Ok(Prepared { eq, op, diag, x, f })
}

/// `|(H(t+2dt) − H(t))/(2dt) + D(t+dt)|` at every output time `t`.
///
/// The centered difference and a second-order integrator make this `O(dt²)`.
pub fn entropy_identity_errors(setup: &KineticSetup) -> Result<Vec<(f64, f64)>> {
    let Prepared { op, diag, mut f, .. } = prepare(setup)?;
    let integrator = Integrator::new(&op, setup.solver)?;
    let dt = setup.solver.dt;
    let mut out = Vec::new();
    integrator.run(&mut f, setup.every, |f| {
        let mut g = f.clone();
        let h0 = diag.entropy_h(&g);
        integrator.step(&mut g);
        let d1 = diag.production_d(&g);
        integrator.step(&mut g);
        let h2 = diag.entropy_h(&g);
        out.push((f.time, ((h2 - h0) / (2.0 * dt) + d1).abs()));
        Ok(())
    })?;
    Ok(out)
}

/// Runs the kinetic equation and audits every output time.
pub fn run_kinetic(setup: &KineticSetup) -> Result<KineticReport> {
    let Prepared { eq, op, diag, x, mut f } = prepare(setup)?;
    let theta = eq.theta();
    let g0 = f.fluctuation(&eq);
    let moment_bound = SplittingSpec::default_for(&op, setup.k)?.moment_bound()?;
    let inputs = RateInputs {
        d: 1,
        beta: setup.collision.beta,
        k: setup.k,
        theta,
        theta_k: eq.theta_k(setup.k)?,
        kk: moment_bound.kk,
        kappa: diag.kappa(),
        delta: diag.delta(),
        // ‖ρ − ρ̄‖₁ <= 2‖ρ‖₁ for nonnegative data
        l1_bound: 2.0 * f.mass(&eq),
        z0: g0.norm_sq(&eq),
        norm_k_init: g0.norm_sq_weighted(&eq, setup.k).sqrt(),
    };
    let rate = RateModel::assemble(inputs, nash_constant(1)?.value)?;
    let h0 = diag.entropy_h(&f);

    let integrator = Integrator::new(&op, setup.solver)?;
    let mut rows = Vec::new();
    integrator.run(&mut f, setup.every, |f| {
        let state = diag.evaluate(f);
        let rho_l1 = density_l1(&state.rho_hat, x);
        let decay = audit_state(&rate, &state, &x, rho_l1, h0)?;
        rows.push(KineticRow {
            norm_k2: state.norms[0].1,
            bound: rate.bound(h0, state.time),
            autocorrelation: half_period_autocorrelation(f, &eq),
            rho_l1,
            decay,
            state,
        });
        Ok(())
    })?;

    let t_wrap = rows.iter().find(|r| r.autocorrelation > WRAP_THRESHOLD).map(|r| r.state.time);
    let h_max_increase = rows
        .windows(2)
        .map(|w| (w[1].state.h_entropy - w[0].state.h_entropy) / w[0].state.h_entropy)
        .fold(f64::NEG_INFINITY, f64::max);
    let norms_k: Vec<f64> = rows.iter().map(|r| r.norm_k2).collect();
    let moment_audit = moment_propagation_audit(&norms_k, &moment_bound);
    let times: Vec<f64> = rows.iter().map(|r| r.state.time).collect();
    let norm2: Vec<f64> = rows.iter().map(|r| r.state.norm2).collect();
    let t_end = setup.solver.t_end;
    let fit = fit_rate(&times, &norm2, (t_end / 4.0, t_wrap.unwrap_or(t_end))).ok();
    Ok(KineticReport { rows, x, rate, moment_bound, moment_audit, t_wrap, h_max_increase, fit })
}
