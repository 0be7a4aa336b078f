//! Velocity and spatial grids.
//!
//! The velocity grid is uniform in a mapped coordinate `s` with `v = a sinh(s)`,
//! which is dense near the origin and sparse in the tail. Every integral in the
//! crate uses the same trapezoidal weights, so discrete adjointness identities
//! hold to roundoff.

use std::f64::consts::PI;

use crate::error::{Error, Result};

/// Surface area of the unit sphere in `R^d`.
pub fn sphere_area(dim: usize) -> f64 {
    let d = dim as f64;
    2.0 * PI.powf(d / 2.0) / gamma(d / 2.0)
}

/// Lanczos approximation of the gamma function, good to ~1e-15 for x > 0.
pub fn gamma(x: f64) -> f64 {
    const G: f64 = 7.0;
    const COEF: [f64; 9] = [
        0.999_999_999_999_809_9,
        676.520_368_121_885_1,
        -1_259.139_216_722_402_8,
        771.323_428_777_653_1,
        -176.615_029_162_140_6,
        12.507_343_278_686_905,
        -0.138_571_095_265_720_12,
        9.984_369_578_019_572e-6,
        1.505_632_735_149_311_6e-7,
    ];
    if x < 0.5 {
        return PI / ((PI * x).sin() * gamma(1.0 - x));
    }
    let x = x - 1.0;
    let mut acc = COEF[0];
    let t = x + G + 0.5;
    for (i, c) in COEF.iter().enumerate().skip(1) {
        acc += c / (x + i as f64);
    }
    (2.0 * PI).sqrt() * t.powf(x + 0.5) * (-t).exp() * acc
}

/// Japanese bracket `<v> = sqrt(1 + |v|^2)`.
#[inline]
pub fn bracket(v: f64) -> f64 {
    (1.0 + v * v).sqrt()
}

/// Geometry of a velocity grid.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GridKind {
    /// Symmetric grid on `[-V, V]` (dimension one).
    Line,
    /// Radial grid on `[0, V]` carrying the `|S^{d-1}| r^{d-1}` measure.
    Radial { dim: usize },
}

/// Sinh-stretched velocity grid with trapezoidal weights.
#[derive(Debug, Clone)]
pub struct VelocityGrid {
    kind: GridKind,
    scale: f64,
    hs: f64,
    nodes: Vec<f64>,
    weights: Vec<f64>,
    face_nodes: Vec<f64>,
    /// `measure(face) / (J(face) * hs)`: the conductance of each face before
    /// multiplication by the equilibrium.
    face_geometry: Vec<f64>,
}

impl VelocityGrid {
    /// Symmetric line grid with `n` nodes on `[-cutoff, cutoff]`, mapping scale `scale`.
    pub fn line(n: usize, cutoff: f64, scale: f64) -> Result<Self> {
        if n < 3 {
            return Err(Error::Domain(format!("velocity grid needs at least 3 nodes, got {n}")));
        }
        if !(cutoff > 0.0 && scale > 0.0) {
            return Err(Error::Domain("velocity cutoff and scale must be positive".into()));
        }
        let s_max = (cutoff / scale).asinh();
        let hs = 2.0 * s_max / (n - 1) as f64;
        let half = (n - 1) as f64 / 2.0;
        let s: Vec<f64> = (0..n).map(|i| hs * (i as f64 - half)).collect();
        Ok(Self::assemble(GridKind::Line, scale, hs, &s))
    }

    /// Radial grid with `n` nodes on `[0, cutoff]` for dimension `dim >= 2`.
    pub fn radial(dim: usize, n: usize, cutoff: f64, scale: f64) -> Result<Self> {
        if dim < 2 {
            return Err(Error::Domain("radial grids need dim >= 2; use a line grid".into()));
        }
        if n < 3 {
            return Err(Error::Domain(format!("velocity grid needs at least 3 nodes, got {n}")));
        }
        if !(cutoff > 0.0 && scale > 0.0) {
            return Err(Error::Domain("velocity cutoff and scale must be positive".into()));
        }
        let s_max = (cutoff / scale).asinh();
        let hs = s_max / (n - 1) as f64;
        let s: Vec<f64> = (0..n).map(|i| hs * i as f64).collect();
        Ok(Self::assemble(GridKind::Radial { dim }, scale, hs, &s))
    }

    /// Grid for dimension `dim`: a line grid when `dim == 1`, radial otherwise.
    pub fn for_dim(dim: usize, n: usize, cutoff: f64, scale: f64) -> Result<Self> {
        match dim {
            0 => Err(Error::Domain("dimension must be positive".into())),
            1 => Self::line(n, cutoff, scale),
            d => Self::radial(d, n, cutoff, scale),
        }
    }

    fn assemble(kind: GridKind, scale: f64, hs: f64, s: &[f64]) -> Self {
        let n = s.len();
        let measure = |r: f64| match kind {
            GridKind::Line => 1.0,
            GridKind::Radial { dim } => sphere_area(dim) * r.abs().powi(dim as i32 - 1),
        };
        let nodes: Vec<f64> = s.iter().map(|&si| scale * si.sinh()).collect();
        let mut weights: Vec<f64> = s.iter().zip(&nodes).map(|(&si, &v)| hs * scale * si.cosh() * measure(v)).collect();
        weights[0] *= 0.5;
        weights[n - 1] *= 0.5;
        if let GridKind::Radial { dim } = kind {
            // the origin node gets the ball inside the first face so no cell is empty
            let ball = sphere_area(dim) * (scale * (0.5 * hs).sinh()).powi(dim as i32) / dim as f64;
            weights[0] += ball;
            weights[1] -= ball;
            if dim % 2 == 0 && n > 3 {
                // odd integrand in s at the origin: Euler-Maclaurin endpoint term
                let jac = |i: usize| scale * s[i].cosh() * measure(nodes[i]);
                for (i, c) in [(0, -1.0 / 8.0), (1, 1.0 / 6.0), (2, -1.0 / 24.0)] {
                    weights[i] += c * hs * jac(i);
                }
            }
        }
        let mut face_nodes = Vec::with_capacity(n - 1);
        let mut face_geometry = Vec::with_capacity(n - 1);
        for i in 0..n - 1 {
            let sf = 0.5 * (s[i] + s[i + 1]);
            let vf = scale * sf.sinh();
            face_nodes.push(vf);
            face_geometry.push(measure(vf) / (scale * sf.cosh() * hs));
        }
        Self { kind, scale, hs, nodes, weights, face_nodes, face_geometry }
    }

    pub fn kind(&self) -> GridKind {
        self.kind
    }

    /// Dimension of velocity space represented by this grid.
    pub fn dim(&self) -> usize {
        match self.kind {
            GridKind::Line => 1,
            GridKind::Radial { dim } => dim,
        }
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn face_nodes(&self) -> &[f64] {
        &self.face_nodes
    }

    pub fn face_geometry(&self) -> &[f64] {
        &self.face_geometry
    }

    pub fn cutoff(&self) -> f64 {
        self.nodes[self.nodes.len() - 1]
    }

    pub fn scale(&self) -> f64 {
        self.scale
    }

    /// Uniform spacing in the mapped coordinate.
    pub fn mapped_step(&self) -> f64 {
        self.hs
    }

    /// Quadrature of grid values.
    pub fn integrate(&self, values: &[f64]) -> f64 {
        debug_assert_eq!(values.len(), self.len());
        self.weights.iter().zip(values).map(|(w, f)| w * f).sum()
    }

    /// Quadrature of `f(v)` sampled at the nodes.
    pub fn integrate_fn(&self, f: impl Fn(f64) -> f64) -> f64 {
        self.nodes.iter().zip(&self.weights).map(|(&v, w)| w * f(v)).sum()
    }

    /// Finite-volume cells bounded by the faces (and by the domain ends).
    pub fn cell_volumes(&self) -> Vec<f64> {
        let n = self.len();
        let content = |r: f64| match self.kind {
            GridKind::Line => r,
            GridKind::Radial { dim } => sphere_area(dim) * r.abs().powi(dim as i32) / dim as f64,
        };
        (0..n)
            .map(|i| {
                let hi = if i + 1 < n { self.face_nodes[i] } else { self.nodes[i] };
                let lo = if i > 0 {
                    self.face_nodes[i - 1]
                } else {
                    match self.kind {
                        GridKind::Line => self.nodes[0],
                        GridKind::Radial { .. } => 0.0,
                    }
                };
                content(hi) - content(lo)
            })
            .collect()
    }

    /// Index of the mirror node `-v_i` on a line grid.
    pub fn mirror(&self, i: usize) -> usize {
        self.len() - 1 - i
    }

    pub(crate) fn check_len(&self, len: usize, what: &str) -> Result<()> {
        if len != self.len() {
            return Err(Error::Shape(format!("{what}: expected {} velocity values, got {len}", self.len())));
        }
        Ok(())
    }
}

/// Periodic spatial grid on `[0, L)` with `n` points.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SpatialGrid {
    pub n: usize,
    pub length: f64,
}

impl SpatialGrid {
    pub fn new(n: usize, length: f64) -> Result<Self> {
        if n < 2 || !n.is_multiple_of(2) {
            return Err(Error::Domain(format!("spatial grid size must be even and >= 2, got {n}")));
        }
        if !(length > 0.0) {
            return Err(Error::Domain("torus length must be positive".into()));
        }
        Ok(Self { n, length })
    }

    pub fn dx(&self) -> f64 {
        self.length / self.n as f64
    }

    pub fn nodes(&self) -> Vec<f64> {
        (0..self.n).map(|j| j as f64 * self.dx()).collect()
    }

    /// Number of retained half-spectrum modes `0..n/2` (the Nyquist mode is dropped).
    pub fn modes(&self) -> usize {
        self.n / 2
    }

    /// Angular wavenumber of mode `m`.
    pub fn wavenumber(&self, m: usize) -> f64 {
        2.0 * PI * m as f64 / self.length
    }

    /// Parseval factor for mode `m` in the half spectrum: `∫|u|^2 dx = Σ_m factor(m) |û_m|^2`.
    pub fn parseval(&self, m: usize) -> f64 {
        let multiplicity = if m == 0 { 1.0 } else { 2.0 };
        multiplicity * self.length / (self.n as f64 * self.n as f64)
    }

    /// Torus length satisfying `sqrt(2 D t_end) < L / 6` with a 5% margin.
    pub fn length_for_horizon(diffusivity: f64, t_end: f64) -> f64 {
        6.0 * (2.0 * diffusivity * t_end).sqrt() * 1.05
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn gamma_matches_factorials() {
        for (x, g) in [(1.0, 1.0), (2.0, 1.0), (5.0, 24.0), (0.5, PI.sqrt())] {
            assert!((gamma(x) - g).abs() < 1e-12 * g.max(1.0), "gamma({x})");
        }
    }

    #[test]
    fn sphere_areas() {
        assert!((sphere_area(1) - 2.0).abs() < 1e-14);
        assert!((sphere_area(2) - 2.0 * PI).abs() < 1e-13);
        assert!((sphere_area(3) - 4.0 * PI).abs() < 1e-12);
    }

    #[test]
    fn line_grid_is_exactly_symmetric() {
        for n in [64, 65] {
            let g = VelocityGrid::line(n, 500.0, 1.0).unwrap();
            for i in 0..n {
                assert_eq!(g.nodes()[i], -g.nodes()[g.mirror(i)]);
                assert_eq!(g.weights()[i], g.weights()[g.mirror(i)]);
            }
        }
    }

    #[test]
    fn trapezoid_integrates_gaussian() {
        let g = VelocityGrid::line(201, 12.0, 1.0).unwrap();
        let val = g.integrate_fn(|v| (-v * v).exp());
        assert!((val - PI.sqrt()).abs() < 1e-12);
    }

    #[test]
    fn radial_grid_integrates_gaussian_in_2d() {
        let g = VelocityGrid::radial(2, 301, 12.0, 1.0).unwrap();
        let val = g.integrate_fn(|r| (-r * r).exp());
        assert!((val - PI).abs() < 1e-7, "{val}");
    }

    #[test]
    fn rejects_bad_inputs() {
        assert!(VelocityGrid::line(2, 1.0, 1.0).is_err());
        assert!(VelocityGrid::line(10, -1.0, 1.0).is_err());
        assert!(SpatialGrid::new(7, 1.0).is_err());
        assert!(VelocityGrid::radial(1, 10, 1.0, 1.0).is_err());
    }
}
