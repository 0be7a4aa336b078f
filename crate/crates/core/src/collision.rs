//! Discrete Fokker-Planck (`L₁`) and scattering (`L₂`) collision operators.

use nalgebra::DMatrix;

use crate::equilibria::Equilibrium;
use crate::error::{Error, Result};
use crate::grid::{bracket, GridKind};
use crate::linalg::{dense_apply, Scalar, Tridiagonal};

/// Tolerance on the discrete H1 residual, relative to `ν₂`.
pub const H1_TOLERANCE: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CollisionKind {
    FokkerPlanck,
    Scattering,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum KernelFamily {
    /// `b(v,v') = <v>^{-β} <v'>^{-β}`
    Separable,
    /// `b(v,v') = |v - v'|^{-β}`
    Boltzmann,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CollisionSpec {
    pub kind: CollisionKind,
    pub beta: f64,
    pub gamma: f64,
    pub kernel_family: KernelFamily,
    pub b_lower: f64,
    pub b_upper: f64,
}

impl CollisionSpec {
    /// Fokker-Planck with the matching decay exponent `β = 2(1-α)`.
    pub fn fokker_planck(alpha: f64) -> Self {
        Self {
            kind: CollisionKind::FokkerPlanck,
            beta: 2.0 * (1.0 - alpha),
            gamma: 0.0,
            kernel_family: KernelFamily::Separable,
            b_lower: 1.0,
            b_upper: 1.0,
        }
    }

    /// Scattering kernel. Both families satisfy the kernel bounds with `b̲ = b̄ = 1`
    /// since `|v - v'| <= <v><v'>`.
    pub fn scattering(kernel_family: KernelFamily, beta: f64) -> Self {
        let gamma = match kernel_family {
            KernelFamily::Separable => 0.0,
            KernelFamily::Boltzmann => beta,
        };
        Self { kind: CollisionKind::Scattering, beta, gamma, kernel_family, b_lower: 1.0, b_upper: 1.0 }
    }

    pub fn validate(&self, eq: &Equilibrium) -> Result<()> {
        let d = eq.dim() as f64;
        if !(self.beta > 0.0) && self.kind == CollisionKind::Scattering {
            return Err(Error::Config(format!("beta must be positive, got {}", self.beta)));
        }
        match self.kind {
            CollisionKind::FokkerPlanck => {
                let expected = 2.0 * (1.0 - eq.alpha());
                if (self.beta - expected).abs() > 1e-12 {
                    return Err(Error::Config(format!(
                        "Fokker-Planck needs beta = 2(1-alpha) = {expected}, got {}",
                        self.beta
                    )));
                }
            }
            CollisionKind::Scattering => {
                if self.gamma < 0.0 || self.gamma > self.beta || self.gamma >= d {
                    return Err(Error::Config(format!(
                        "gamma = {} must satisfy 0 <= gamma <= beta and gamma < d",
                        self.gamma
                    )));
                }
                if self.kernel_family == KernelFamily::Boltzmann {
                    if self.beta >= d {
                        return Err(Error::Config(format!("Boltzmann kernel needs beta < d, got {}", self.beta)));
                    }
                    if eq.grid().kind() != GridKind::Line {
                        return Err(Error::Config("Boltzmann kernel is tabulated on line grids only".into()));
                    }
                }
                if !(self.b_lower > 0.0 && self.b_upper >= self.b_lower) {
                    return Err(Error::Config("kernel bounds need 0 < b_lower <= b_upper".into()));
                }
            }
        }
        Ok(())
    }
}

/// Constants of the weighted Lyapunov estimate for weight `<v>^k`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DriftConstants {
    pub k: f64,
    pub a_k: f64,
    pub b_k: f64,
    pub r_k: f64,
    /// `c_k` for Fokker-Planck; `None` for scattering.
    pub c_k: Option<f64>,
    pub ell: f64,
}

/// `ν₂(v) = ∫ b(v,v') F' dv'` and its bracket-weighted bounds.
#[derive(Debug, Clone, PartialEq)]
pub struct Nu2Profile {
    pub values: Vec<f64>,
    pub nu_lower: f64,
    pub nu_upper: f64,
}

#[derive(Debug, Clone)]
enum Stencil {
    Tri(Tridiagonal),
    Dense(DMatrix<f64>),
}

/// Assembled collision operator on a fixed equilibrium.
#[derive(Debug, Clone)]
pub struct CollisionOperator {
    spec: CollisionSpec,
    eq: Equilibrium,
    stencil: Stencil,
    /// Face conductances `F_{i+1/2} · measure / (J h)` for `L₁`.
    conductance: Vec<f64>,
    kernel: Option<DMatrix<f64>>,
    nu2: Vec<f64>,
}

/// Face conductances of the Fokker-Planck Dirichlet form.
pub fn fp_conductance(eq: &Equilibrium) -> Vec<f64> {
    eq.face_values().iter().zip(eq.grid().face_geometry()).map(|(f, g)| f * g).collect()
}

fn fp_stencil(eq: &Equilibrium, conductance: &[f64]) -> Tridiagonal {
    let n = eq.len();
    let w = eq.grid().weights();
    let f = eq.values();
    let mut t = Tridiagonal { lower: vec![0.0; n], diag: vec![0.0; n], upper: vec![0.0; n] };
    for i in 0..n {
        let km = if i > 0 { conductance[i - 1] } else { 0.0 };
        let kp = if i + 1 < n { conductance[i] } else { 0.0 };
        if i > 0 {
            t.lower[i] = km / (w[i] * f[i - 1]);
        }
        if i + 1 < n {
            t.upper[i] = kp / (w[i] * f[i + 1]);
        }
        t.diag[i] = -(km + kp) / (w[i] * f[i]);
    }
    t
}

/// Kernel matrix `b(v_i, v_j)` on the grid.
pub fn kernel_matrix(spec: &CollisionSpec, eq: &Equilibrium) -> DMatrix<f64> {
    let v = eq.grid().nodes();
    let w = eq.grid().weights();
    let n = v.len();
    let beta = spec.beta;
    match spec.kernel_family {
        KernelFamily::Separable => {
            let p: Vec<f64> = v.iter().map(|&x| bracket(x).powf(-beta)).collect();
            DMatrix::from_fn(n, n, |i, j| p[i] * p[j])
        }
        KernelFamily::Boltzmann => DMatrix::from_fn(n, n, |i, j| {
            if i == j {
                // average of |s|^{-β} over the cell of width w_i
                (0.5 * w[i]).powf(-beta) / (1.0 - beta)
            } else {
                (v[i] - v[j]).abs().powf(-beta)
            }
        }),
    }
}

impl CollisionOperator {
    pub fn new(spec: &CollisionSpec, eq: &Equilibrium) -> Result<Self> {
        spec.validate(eq)?;
        match spec.kind {
            CollisionKind::FokkerPlanck => {
                let conductance = fp_conductance(eq);
                let stencil = Stencil::Tri(fp_stencil(eq, &conductance));
                Ok(Self { spec: *spec, eq: eq.clone(), stencil, conductance, kernel: None, nu2: Vec::new() })
            }
            CollisionKind::Scattering => {
                let b = kernel_matrix(spec, eq);
                let w = eq.grid().weights();
                let f = eq.values();
                let n = eq.len();
                let nu2: Vec<f64> = (0..n).map(|i| (0..n).map(|j| w[j] * b[(i, j)] * f[j]).sum()).collect();
                let residual = (0..n)
                    .map(|j| {
                        let col: f64 = (0..n).map(|i| w[i] * b[(i, j)] * f[i]).sum();
                        (col - nu2[j]).abs() / nu2[j]
                    })
                    .fold(0.0, f64::max);
                if residual > H1_TOLERANCE {
                    return Err(Error::Config(format!("discrete H1 residual {residual:e} exceeds {H1_TOLERANCE:e}")));
                }
                let m = DMatrix::from_fn(n, n, |i, j| {
                    let gain = f[i] * w[j] * b[(i, j)];
                    if i == j {
                        gain - nu2[i]
                    } else {
                        gain
                    }
                });
                Ok(Self {
                    spec: *spec,
                    eq: eq.clone(),
                    stencil: Stencil::Dense(m),
                    conductance: Vec::new(),
                    kernel: Some(b),
                    nu2,
                })
            }
        }
    }

    pub fn spec(&self) -> &CollisionSpec {
        &self.spec
    }

    pub fn equilibrium(&self) -> &Equilibrium {
        &self.eq
    }

    pub fn len(&self) -> usize {
        self.eq.len()
    }

    pub fn is_empty(&self) -> bool {
        self.eq.is_empty()
    }

    /// Tridiagonal bands for Fokker-Planck.
    pub fn tridiagonal(&self) -> Option<&Tridiagonal> {
        match &self.stencil {
            Stencil::Tri(t) => Some(t),
            Stencil::Dense(_) => None,
        }
    }

    pub fn kernel(&self) -> Option<&DMatrix<f64>> {
        self.kernel.as_ref()
    }

    pub fn conductance(&self) -> &[f64] {
        &self.conductance
    }

    /// Operator matrix acting on nodal values of `f`.
    pub fn matrix(&self) -> DMatrix<f64> {
        match &self.stencil {
            Stencil::Tri(t) => t.to_dense(),
            Stencil::Dense(m) => m.clone(),
        }
    }

    pub fn apply_into<T: Scalar>(&self, f: &[T], out: &mut [T]) {
        match &self.stencil {
            Stencil::Tri(t) => t.apply(f, out),
            Stencil::Dense(m) => dense_apply(m, f, out),
        }
    }

    pub fn apply(&self, f: &[f64]) -> Result<Vec<f64>> {
        self.eq.grid().check_len(f.len(), "collision operator")?;
        let mut out = vec![0.0; f.len()];
        self.apply_into(f, &mut out);
        Ok(out)
    }

    /// `⟨f, g⟩_μ = Σ w f g / F`.
    pub fn inner_mu(&self, f: &[f64], g: &[f64]) -> f64 {
        inner_mu(&self.eq, f, g)
    }

    /// `-⟨Lf, f⟩_μ` through the dissipation identity, for real or complex `f`.
    pub fn dissipation<T: Scalar>(&self, f: &[T]) -> f64 {
        let inv: Vec<f64> = self.eq.values().iter().map(|x| 1.0 / x).collect();
        match self.spec.kind {
            CollisionKind::FokkerPlanck => self
                .conductance
                .iter()
                .enumerate()
                .map(|(i, k)| k * (f[i + 1] * inv[i + 1] - f[i] * inv[i]).norm_sqr())
                .sum(),
            CollisionKind::Scattering => {
                // Σ_i w_i ν₂_i |f_i|²/F_i − Σ_ij w_i w_j b_ij Re(f_i f̄_j), summed as a quadratic form
                let b = self.kernel.as_ref().expect("scattering kernel");
                let w = self.eq.grid().weights();
                let n = self.len();
                let mut total = 0.0;
                for i in 0..n {
                    let mut cross = 0.0;
                    for j in 0..n {
                        let d = f[j] * self.eq.values()[i] - f[i] * self.eq.values()[j];
                        cross += w[j] * b[(i, j)] * d.norm_sqr() * inv[j];
                    }
                    total += w[i] * inv[i] * cross;
                }
                0.5 * total
            }
        }
    }

    /// `ν₂` at the grid nodes (scattering only).
    pub fn nu2(&self) -> &[f64] {
        &self.nu2
    }
}

/// `⟨f, g⟩_μ = Σ w f g / F`.
pub fn inner_mu(eq: &Equilibrium, f: &[f64], g: &[f64]) -> f64 {
    eq.grid().weights().iter().zip(eq.values()).zip(f.iter().zip(g)).map(|((w, e), (a, b))| w * a * b / e).sum()
}

/// Applies the discrete Fokker-Planck operator.
pub fn apply_l1(eq: &Equilibrium, f: &[f64]) -> Result<Vec<f64>> {
    CollisionOperator::new(&CollisionSpec::fokker_planck(eq.alpha()), eq)?.apply(f)
}

/// Applies the discrete scattering operator.
pub fn apply_l2(spec: &CollisionSpec, eq: &Equilibrium, f: &[f64]) -> Result<Vec<f64>> {
    if spec.kind != CollisionKind::Scattering {
        return Err(Error::Config("apply_l2 needs a scattering spec".into()));
    }
    CollisionOperator::new(spec, eq)?.apply(f)
}

/// `ν₂` and the tightest `ν̲, ν̄` with `ν̲ <v>^{-β} <= ν₂ <= ν̄ <v>^{-β}` on the grid.
pub fn nu2_profile(spec: &CollisionSpec, eq: &Equilibrium) -> Result<Nu2Profile> {
    if spec.kind != CollisionKind::Scattering {
        return Err(Error::Config("nu2_profile needs a scattering spec".into()));
    }
    spec.validate(eq)?;
    let b = kernel_matrix(spec, eq);
    let w = eq.grid().weights();
    let f = eq.values();
    let n = eq.len();
    let values: Vec<f64> = (0..n).map(|i| (0..n).map(|j| w[j] * b[(i, j)] * f[j]).sum()).collect();
    let scaled: Vec<f64> =
        values.iter().zip(eq.grid().nodes()).map(|(nu, &v)| nu * bracket(v).powf(spec.beta)).collect();
    let nu_lower = scaled.iter().copied().fold(f64::INFINITY, f64::min);
    let nu_upper = scaled.iter().copied().fold(0.0, f64::max);
    Ok(Nu2Profile { values, nu_lower, nu_upper })
}

/// Explicit constants of the weighted Lyapunov estimate.
pub fn drift_constants(spec: &CollisionSpec, eq: &Equilibrium, k: f64) -> Result<DriftConstants> {
    if !(k > 0.0) {
        return Err(Error::Domain(format!("drift weight exponent must be positive, got {k}")));
    }
    match spec.kind {
        CollisionKind::FokkerPlanck => {
            let d = eq.dim() as f64;
            let alpha = eq.alpha();
            let c_k = (k - 2.0).abs() + (d + k - 2.0).abs() + alpha;
            Ok(DriftConstants {
                k,
                a_k: c_k * k / 2.0,
                b_k: alpha * k / 4.0,
                r_k: (2.0 * c_k / alpha).powf(1.0 / alpha),
                c_k: Some(c_k),
                ell: 2.0 - alpha,
            })
        }
        CollisionKind::Scattering => {
            let profile = nu2_profile(spec, eq)?;
            let b = kernel_matrix(spec, eq);
            let v = eq.grid().nodes();
            let w = eq.grid().weights();
            let f = eq.values();
            let n = eq.len();
            // a_k = ½ sup_v <v>^β ∫ b(v',v) <v'>^k F' dv'
            let a_k = 0.5
                * (0..n)
                    .map(|j| {
                        let s: f64 = (0..n).map(|i| w[i] * b[(i, j)] * bracket(v[i]).powf(k) * f[i]).sum();
                        s * bracket(v[j]).powf(spec.beta)
                    })
                    .fold(0.0, f64::max);
            Ok(DriftConstants {
                k,
                a_k,
                b_k: profile.nu_lower / 4.0,
                r_k: (4.0 * a_k / profile.nu_lower).powf(1.0 / k),
                c_k: None,
                ell: spec.beta,
            })
        }
    }
}

/// Margin of the Lyapunov estimate:
/// `∫(a_k 1_{|v|<R_k} − b_k <v>^{-ℓ}) f² <v>^k dμ − ⟨Lf, f <v>^k⟩_μ`.
pub fn lyapunov_margin(op: &CollisionOperator, dc: &DriftConstants, f: &[f64]) -> f64 {
    let eq = op.equilibrium();
    let lf = op.apply(f).expect("grid-compatible field");
    let mut lhs = 0.0;
    let mut rhs = 0.0;
    for (i, &v) in eq.grid().nodes().iter().enumerate() {
        let bk = bracket(v).powf(dc.k);
        let dmu = eq.grid().weights()[i] / eq.values()[i];
        lhs += lf[i] * f[i] * bk * dmu;
        let ind = if v.abs() < dc.r_k { dc.a_k } else { 0.0 };
        rhs += (ind - dc.b_k * bracket(v).powf(-dc.ell)) * f[i] * f[i] * bk * dmu;
    }
    rhs - lhs
}

/// Diffusivity of the macroscopic limit, `D = ∫ v g dv` with `L g = −vF`.
///
/// For Fokker-Planck the flux form gives `D = Σ S_i² / K_i` with `S` the cumulative
/// first moment. For scattering the singular system is solved through `A − F wᵀ`,
/// which is invertible and agrees with `A` on mass-free data.
pub fn macroscopic_diffusivity(op: &CollisionOperator) -> Result<f64> {
    let eq = op.equilibrium();
    if eq.grid().kind() != GridKind::Line {
        return Err(Error::Config("macroscopic diffusivity is implemented for d = 1".into()));
    }
    let n = eq.len();
    let w = eq.grid().weights();
    let v = eq.grid().nodes();
    let f = eq.values();
    let d: f64 = match op.spec().kind {
        CollisionKind::FokkerPlanck => {
            // accumulate each half from its own end: the total cancels only to round-off,
            // which the tiny tail conductances would amplify
            let moment: Vec<f64> = (0..n).map(|i| w[i] * v[i] * f[i]).collect();
            let k = op.conductance();
            let mut left = vec![0.0; n - 1];
            let mut acc = 0.0;
            for i in 0..n - 1 {
                acc += moment[i];
                left[i] = acc;
            }
            let mut right = vec![0.0; n - 1];
            acc = 0.0;
            for i in (0..n - 1).rev() {
                acc += moment[i + 1];
                right[i] = -acc;
            }
            (0..n - 1)
                .map(|i| if v[i + 1] <= 0.0 { left[i] } else { right[i] })
                .map(|s| s * s)
                .zip(k)
                .map(|(s2, k)| s2 / k)
                .sum()
        }
        CollisionKind::Scattering => {
            let a = op.matrix() - DMatrix::from_fn(n, n, |i, j| f[i] * w[j]);
            let rhs = nalgebra::DVector::from_fn(n, |i, _| -v[i] * f[i]);
            let g = a
                .clone()
                .lu()
                .solve(&rhs)
                .ok_or_else(|| Error::Solver { what: "macroscopic diffusivity".into(), residual: f64::INFINITY })?;
            let residual = (&a * &g - &rhs).amax() / rhs.amax();
            if residual > 1e-8 {
                return Err(Error::Solver { what: "macroscopic diffusivity".into(), residual });
            }
            (0..n).map(|i| w[i] * v[i] * g[i]).sum()
        }
    };
    if !(d > 0.0 && d.is_finite()) {
        return Err(Error::Numeric(format!("non-positive diffusivity {d}")));
    }
    Ok(d)
}

/// Micro-coercivity constant `(b̲/2)(∫F<v>^β)^{-1}` for scattering.
pub fn scattering_micro_constant(spec: &CollisionSpec, eq: &Equilibrium) -> Result<f64> {
    Ok(0.5 * spec.b_lower / eq.theta_k(spec.beta)?)
}
