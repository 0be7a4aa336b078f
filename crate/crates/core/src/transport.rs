//! Splitting integrator for `∂ₜf + v·∇ₓf = Lf` on a periodic torus in `x`.
//!
//! Fields are stored as a half spectrum in `x`: modes `0..n/2` for each velocity
//! node, row-major by mode. The Nyquist mode is not represented.

use nalgebra::DMatrix;
use num_complex::Complex64;
use rustfft::FftPlanner;

use crate::collision::CollisionOperator;
use crate::equilibria::Equilibrium;
use crate::error::{Error, Result};
use crate::grid::SpatialGrid;
use crate::linalg::{dense_apply, Scalar, Tridiagonal, TridiagonalLu};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Splitting {
    Lie,
    Strang,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CollisionScheme {
    ImplicitEuler,
    CrankNicolson,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolverConfig {
    pub dt: f64,
    pub t_end: f64,
    pub splitting: Splitting,
    pub scheme: CollisionScheme,
}

impl SolverConfig {
    pub fn new(dt: f64, t_end: f64) -> Self {
        Self { dt, t_end, splitting: Splitting::Strang, scheme: CollisionScheme::ImplicitEuler }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.dt > 0.0 && self.t_end >= self.dt) {
            return Err(Error::Config(format!(
                "need dt > 0 and t_end >= dt, got dt={}, t_end={}",
                self.dt, self.t_end
            )));
        }
        Ok(())
    }

    pub fn steps(&self) -> usize {
        (self.t_end / self.dt).round() as usize
    }
}

/// Distribution function on `x-torus × velocity grid`.
#[derive(Debug, Clone, PartialEq)]
pub struct DistributionField {
    x: SpatialGrid,
    nv: usize,
    spectrum: Vec<Complex64>,
    pub time: f64,
}

impl DistributionField {
    pub fn zeros(x: SpatialGrid, nv: usize) -> Self {
        Self { spectrum: vec![Complex64::default(); x.modes() * nv], x, nv, time: 0.0 }
    }

    /// From physical samples `values[j * nv + i] = f(x_j, v_i)`.
    pub fn from_physical(x: SpatialGrid, nv: usize, values: &[f64]) -> Result<Self> {
        if values.len() != x.n * nv {
            return Err(Error::Shape(format!("expected {} samples, got {}", x.n * nv, values.len())));
        }
        let mut planner = FftPlanner::new();
        let fft = planner.plan_fft_forward(x.n);
        let mut out = Self::zeros(x, nv);
        let mut buf = vec![Complex64::default(); x.n];
        for i in 0..nv {
            for (j, b) in buf.iter_mut().enumerate() {
                *b = Complex64::new(values[j * nv + i], 0.0);
            }
            fft.process(&mut buf);
            for (m, b) in buf.iter().take(x.modes()).enumerate() {
                out.spectrum[m * nv + i] = *b;
            }
        }
        Ok(out)
    }

    pub fn from_fn(x: SpatialGrid, eq: &Equilibrium, f: impl Fn(f64, f64) -> f64) -> Self {
        let nv = eq.len();
        let mut values = Vec::with_capacity(x.n * nv);
        for xj in x.nodes() {
            for &v in eq.grid().nodes() {
                values.push(f(xj, v));
            }
        }
        Self::from_physical(x, nv, &values).expect("consistent shape")
    }

    /// `f(x, v) = ρ(x) g(v)`.
    pub fn separable(x: SpatialGrid, rho: &[f64], g: &[f64]) -> Result<Self> {
        if rho.len() != x.n {
            return Err(Error::Shape(format!("density needs {} samples, got {}", x.n, rho.len())));
        }
        let nv = g.len();
        let values: Vec<f64> = rho.iter().flat_map(|r| g.iter().map(move |gi| r * gi)).collect();
        Self::from_physical(x, nv, &values)
    }

    /// Physical samples, `out[j * nv + i]`.
    pub fn to_physical(&self) -> Vec<f64> {
        let n = self.x.n;
        let mut planner = FftPlanner::new();
        let ifft = planner.plan_fft_inverse(n);
        let mut out = vec![0.0; n * self.nv];
        let mut buf = vec![Complex64::default(); n];
        for i in 0..self.nv {
            buf.iter_mut().for_each(|b| *b = Complex64::default());
            buf[0] = self.spectrum[i];
            for m in 1..self.x.modes() {
                let c = self.spectrum[m * self.nv + i];
                buf[m] = c;
                buf[n - m] = c.conj();
            }
            ifft.process(&mut buf);
            for j in 0..n {
                out[j * self.nv + i] = buf[j].re / n as f64;
            }
        }
        out
    }

    pub fn x_grid(&self) -> &SpatialGrid {
        &self.x
    }

    pub fn nv(&self) -> usize {
        self.nv
    }

    pub fn modes(&self) -> usize {
        self.x.modes()
    }

    pub fn mode(&self, m: usize) -> &[Complex64] {
        &self.spectrum[m * self.nv..(m + 1) * self.nv]
    }

    pub fn mode_mut(&mut self, m: usize) -> &mut [Complex64] {
        &mut self.spectrum[m * self.nv..(m + 1) * self.nv]
    }

    pub fn spectrum(&self) -> &[Complex64] {
        &self.spectrum
    }

    /// `∬ f dx dv`.
    pub fn mass(&self, eq: &Equilibrium) -> f64 {
        let w = eq.grid().weights();
        self.x.dx() * self.mode(0).iter().zip(w).map(|(c, w)| c.re * w).sum::<f64>()
    }

    /// `‖f‖_k² = ∬ f² <v>^k dx dμ`.
    pub fn norm_sq_weighted(&self, eq: &Equilibrium, k: f64) -> f64 {
        let wmu: Vec<f64> = mu_weights(eq, k);
        (0..self.modes())
            .map(|m| self.x.parseval(m) * self.mode(m).iter().zip(&wmu).map(|(c, w)| w * c.norm_sqr()).sum::<f64>())
            .sum()
    }

    pub fn norm_sq(&self, eq: &Equilibrium) -> f64 {
        self.norm_sq_weighted(eq, 0.0)
    }

    /// `ρ̂_m = Σ_i w_i f̂_{m,i}`.
    pub fn density_spectrum(&self, eq: &Equilibrium) -> Vec<Complex64> {
        let w = eq.grid().weights();
        (0..self.modes()).map(|m| self.mode(m).iter().zip(w).map(|(c, w)| c * *w).sum()).collect()
    }

    /// Replaces mode 0 by its part orthogonal to `F`, i.e. subtracts `(M/L) F`.
    pub fn fluctuation(&self, eq: &Equilibrium) -> Self {
        let mut out = self.clone();
        let rho0 = self.density_spectrum(eq)[0];
        for (c, f) in out.mode_mut(0).iter_mut().zip(eq.values()) {
            *c -= rho0 * *f;
        }
        out
    }

    /// Smallest physical value.
    pub fn min_value(&self) -> f64 {
        self.to_physical().into_iter().fold(f64::INFINITY, f64::min)
    }

    pub fn is_finite(&self) -> bool {
        self.spectrum.iter().all(|c| c.re.is_finite() && c.im.is_finite())
    }
}

/// `w_i <v_i>^k / F_i`.
pub fn mu_weights(eq: &Equilibrium, k: f64) -> Vec<f64> {
    let b = eq.bracket_powers(k);
    eq.grid().weights().iter().zip(eq.values()).zip(b).map(|((w, f), b)| w * b / f).collect()
}

/// Exact free transport over `dt`: `f̂_m(v) ← e^{-iξ_m v dt} f̂_m(v)`.
pub fn advect(f: &mut DistributionField, eq: &Equilibrium, dt: f64) {
    let v = eq.grid().nodes().to_vec();
    let x = f.x;
    for m in 1..f.modes() {
        let xi = x.wavenumber(m);
        for (c, &vi) in f.mode_mut(m).iter_mut().zip(&v) {
            *c *= Complex64::from_polar(1.0, -xi * vi * dt);
        }
    }
}

#[derive(Debug, Clone)]
enum PropKind {
    Tri { lu: TridiagonalLu, rhs: Option<Tridiagonal> },
    Dense(DMatrix<f64>),
}

/// One collision step `f ← (I − θ dt A)^{-1}(I + (1−θ) dt A) f` with `A = L − diag(absorption)`.
#[derive(Debug, Clone)]
pub struct Propagator {
    kind: PropKind,
    pub dt: f64,
}

impl Propagator {
    pub fn new(op: &CollisionOperator, dt: f64, scheme: CollisionScheme, absorption: Option<&[f64]>) -> Result<Self> {
        let n = op.len();
        let theta = match scheme {
            CollisionScheme::ImplicitEuler => 1.0,
            CollisionScheme::CrankNicolson => 0.5,
        };
        let absorb = |i: usize| absorption.map_or(0.0, |a| a[i]);
        if let Some(a) = absorption {
            op.equilibrium().grid().check_len(a.len(), "absorption")?;
        }
        let kind = match op.tridiagonal() {
            Some(t) => {
                let mut a = t.clone();
                for i in 0..n {
                    a.diag[i] -= absorb(i);
                }
                let lhs = a.shifted(1.0, -theta * dt);
                let lu = TridiagonalLu::new(&lhs).ok_or_else(|| Error::Solver {
                    what: "tridiagonal collision solve".into(),
                    residual: f64::INFINITY,
                })?;
                let rhs = (theta < 1.0).then(|| a.shifted(1.0, (1.0 - theta) * dt));
                PropKind::Tri { lu, rhs }
            }
            None => {
                let mut a = op.matrix();
                for i in 0..n {
                    a[(i, i)] -= absorb(i);
                }
                let id = DMatrix::<f64>::identity(n, n);
                let lhs = &id - &a * (theta * dt);
                let rhs = &id + &a * ((1.0 - theta) * dt);
                let lu = lhs.clone().lu();
                let p = lu
                    .solve(&rhs)
                    .ok_or_else(|| Error::Solver { what: "dense collision solve".into(), residual: f64::INFINITY })?;
                let residual = (&lhs * &p - &rhs).abs().max();
                if !(residual < 1e-8 * (1.0 + rhs.abs().max())) {
                    return Err(Error::Solver { what: "dense collision solve".into(), residual });
                }
                PropKind::Dense(p)
            }
        };
        Ok(Self { kind, dt })
    }

    pub fn apply<T: Scalar>(&self, x: &mut [T], scratch: &mut Vec<T>) {
        scratch.resize(x.len(), T::default());
        match &self.kind {
            PropKind::Tri { lu, rhs } => {
                if let Some(r) = rhs {
                    r.apply(x, scratch);
                    x.copy_from_slice(scratch);
                }
                lu.solve_in_place(x);
            }
            PropKind::Dense(p) => {
                dense_apply(p, x, scratch);
                x.copy_from_slice(scratch);
            }
        }
    }

    /// Applies the step to every `x`-mode.
    pub fn collide(&self, f: &mut DistributionField) {
        let mut scratch = Vec::new();
        for m in 0..f.modes() {
            self.apply(f.mode_mut(m), &mut scratch);
        }
    }
}

/// Splitting integrator with a cached collision propagator.
#[derive(Debug, Clone)]
pub struct Integrator {
    eq: Equilibrium,
    cfg: SolverConfig,
    prop: Propagator,
}

impl Integrator {
    pub fn new(op: &CollisionOperator, cfg: SolverConfig) -> Result<Self> {
        cfg.validate()?;
        let prop = Propagator::new(op, cfg.dt, cfg.scheme, None)?;
        Ok(Self { eq: op.equilibrium().clone(), cfg, prop })
    }

    pub fn config(&self) -> &SolverConfig {
        &self.cfg
    }

    pub fn equilibrium(&self) -> &Equilibrium {
        &self.eq
    }

    pub fn step(&self, f: &mut DistributionField) {
        let dt = self.cfg.dt;
        match self.cfg.splitting {
            Splitting::Strang => {
                advect(f, &self.eq, 0.5 * dt);
                self.prop.collide(f);
                advect(f, &self.eq, 0.5 * dt);
            }
            Splitting::Lie => {
                advect(f, &self.eq, dt);
                self.prop.collide(f);
            }
        }
        f.time += dt;
    }

    /// Integrates to `t_end`, calling `hook` at `t = 0` and every `every` steps (and at the end).
    pub fn run<H: FnMut(&DistributionField) -> Result<()>>(
        &self,
        f: &mut DistributionField,
        every: usize,
        mut hook: H,
    ) -> Result<()> {
        if f.nv() != self.eq.len() {
            return Err(Error::Shape(format!("field has {} velocities, grid has {}", f.nv(), self.eq.len())));
        }
        let steps = self.cfg.steps();
        let every = every.max(1);
        hook(f)?;
        for n in 1..=steps {
            self.step(f);
            if !f.is_finite() {
                return Err(Error::Numeric(format!("non-finite field at t = {}", f.time)));
            }
            if n % every == 0 || n == steps {
                hook(f)?;
            }
        }
        Ok(())
    }
}

/// Normalized autocorrelation `∫ρ(x)ρ(x+L/2)dx / ∫ρ²dx` of the density.
///
/// A localized bump gives `≈ e^{-L²/16σ²}`; the value grows once the heat kernel
/// width reaches a fraction of the period.
pub fn half_period_autocorrelation(f: &DistributionField, eq: &Equilibrium) -> f64 {
    let rho = f.density_spectrum(eq);
    let x = f.x_grid();
    let (mut num, mut den) = (0.0, 0.0);
    for (m, r) in rho.iter().enumerate() {
        let p = x.parseval(m) * r.norm_sqr();
        den += p;
        num += if m % 2 == 0 { p } else { -p };
    }
    if den > 0.0 {
        num / den
    } else {
        0.0
    }
}

/// Half-period autocorrelation above which the torus has wrapped.
pub const WRAP_THRESHOLD: f64 = 0.05;

#[cfg(test)]
mod tests {
    use super::*;
    use crate::collision::{CollisionSpec, KernelFamily};
    use crate::equilibria::equilibrium_for;
    use std::f64::consts::PI;

    fn setup() -> (Equilibrium, SpatialGrid) {
        (equilibrium_for(0.5, 1, 4.0, 81).unwrap(), SpatialGrid::new(32, 10.0).unwrap())
    }

    #[test]
    fn physical_round_trip() {
        let (eq, x) = setup();
        let f = DistributionField::from_fn(x, &eq, |x, v| (1.0 + 0.3 * (2.0 * PI * x / 10.0).sin()) * (-v * v).exp());
        let back = f.to_physical();
        let xs = x.nodes();
        for (j, xj) in xs.iter().enumerate() {
            for (i, &v) in eq.grid().nodes().iter().enumerate() {
                let e = (1.0 + 0.3 * (2.0 * PI * xj / 10.0).sin()) * (-v * v).exp();
                assert!((back[j * eq.len() + i] - e).abs() < 1e-14);
            }
        }
    }

    #[test]
    fn advection_is_exact_translation() {
        let (eq, x) = setup();
        let g = |v: f64| (-v * v).exp();
        let mut f = DistributionField::from_fn(x, &eq, |x, v| (2.0 * PI * x / 10.0).cos() * g(v));
        let n0 = f.norm_sq(&eq);
        let dt = 0.37;
        advect(&mut f, &eq, dt);
        let vals = f.to_physical();
        for (j, xj) in x.nodes().iter().enumerate() {
            for (i, &v) in eq.grid().nodes().iter().enumerate() {
                let e = (2.0 * PI * (xj - v * dt) / 10.0).cos() * g(v);
                assert!((vals[j * eq.len() + i] - e).abs() < 1e-13);
            }
        }
        assert!((f.norm_sq(&eq) - n0).abs() < 1e-12 * n0);
    }

    #[test]
    fn local_equilibria_are_fixed_by_collisions() {
        let (eq, x) = setup();
        let op = CollisionOperator::new(&CollisionSpec::fokker_planck(0.5), &eq).unwrap();
        let rho: Vec<f64> = x.nodes().iter().map(|x| 1.0 + 0.5 * (2.0 * PI * x / 10.0).cos()).collect();
        let f0 = DistributionField::separable(x, &rho, eq.values()).unwrap();
        for scheme in [CollisionScheme::ImplicitEuler, CollisionScheme::CrankNicolson] {
            let mut f = f0.clone();
            Propagator::new(&op, 0.1, scheme, None).unwrap().collide(&mut f);
            for (a, b) in f.spectrum().iter().zip(f0.spectrum()) {
                assert!((a - b).norm() < 1e-12 * (1.0 + b.norm()));
            }
        }
    }

    #[test]
    fn mass_is_conserved_by_a_run() {
        let (eq, x) = setup();
        let spec = CollisionSpec::scattering(KernelFamily::Separable, 1.0);
        let op = CollisionOperator::new(&spec, &eq).unwrap();
        let integ = Integrator::new(&op, SolverConfig::new(0.05, 2.0)).unwrap();
        let mut f = DistributionField::from_fn(x, &eq, |x, v| (-(x - 5.0).powi(2)).exp() * (-v.abs()).exp());
        let m0 = f.mass(&eq);
        let mut prev = f.norm_sq(&eq);
        integ
            .run(&mut f, 1, |g| {
                let n = g.norm_sq(&eq);
                assert!(n <= prev * (1.0 + 1e-12));
                prev = n;
                Ok(())
            })
            .unwrap();
        assert!((f.mass(&eq) - m0).abs() < 1e-10 * m0);
    }

    #[test]
    fn zero_stays_zero_and_bad_config_is_rejected() {
        let (eq, x) = setup();
        let op = CollisionOperator::new(&CollisionSpec::fokker_planck(0.5), &eq).unwrap();
        let integ = Integrator::new(&op, SolverConfig::new(0.1, 1.0)).unwrap();
        let mut f = DistributionField::zeros(x, eq.len());
        integ.run(&mut f, 5, |_| Ok(())).unwrap();
        assert!(f.spectrum().iter().all(|c| c.norm() == 0.0));
        assert!(Integrator::new(&op, SolverConfig::new(0.0, 1.0)).is_err());
        assert!(Integrator::new(&op, SolverConfig::new(1.0, 0.5)).is_err());
    }

    #[test]
    fn autocorrelation_flags_spreading() {
        let (eq, _) = setup();
        let x = SpatialGrid::new(256, 100.0).unwrap();
        let bump = |s: f64| {
            let rho: Vec<f64> = x.nodes().iter().map(|&xj| (-(xj - 50.0f64).powi(2) / (2.0 * s * s)).exp()).collect();
            DistributionField::separable(x, &rho, eq.values()).unwrap()
        };
        assert!(half_period_autocorrelation(&bump(3.0), &eq).abs() < 1e-6);
        assert!(half_period_autocorrelation(&bump(30.0), &eq) > WRAP_THRESHOLD);
        let flat = DistributionField::separable(x, &vec![1.0; 256], eq.values()).unwrap();
        assert!((half_period_autocorrelation(&flat, &eq) - 1.0).abs() < 1e-12);
    }
}
