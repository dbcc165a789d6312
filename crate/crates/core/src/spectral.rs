//! Eigenexpansion route: `(-Δ)^s` acts as `a_j ↦ λ_j^s a_j` on the
//! coefficients `a_j = φ_jᵀ M f`.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::eigenbasis::EigenBasis;
use crate::error::{Error, Result};
use crate::geometry::{Grid, GridFunction, NodeTag};

/// Fractional order and dimension.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FracParams {
    pub s: f64,
    pub dim: usize,
}

impl FracParams {
    pub fn new(s: f64, dim: usize) -> Result<Self> {
        if !(s > 0.5 && s < 1.0) {
            return Err(Error::InvalidParameter(format!("s = {s} must lie in (1/2, 1)")));
        }
        if dim == 0 {
            return Err(Error::InvalidParameter("dimension must be positive".into()));
        }
        Ok(FracParams { s, dim })
    }

    pub fn kappa(&self) -> f64 {
        kappa(self.s)
    }

    /// `2*_s = 2N/(N − 2s)`, or `None` when `N ≤ 2s` (every exponent admissible).
    pub fn critical_exponent(&self) -> Option<f64> {
        let n = self.dim as f64;
        (n > 2.0 * self.s).then(|| 2.0 * n / (n - 2.0 * self.s))
    }
}

/// Normalization of the weighted conormal derivative,
/// `κ_s = 2^{2s−1} Γ(s) / Γ(1−s)`.
///
/// With this value `−κ_s lim y^{1−2s} ∂_y U = (−Δ)^s u` for the
/// `s`-harmonic extension and the extension is an isometry for the energy
/// `κ_s ∫ y^{1−2s}|∇U|²`.
pub fn kappa(s: f64) -> f64 {
    2f64.powf(2.0 * s - 1.0) * libm::tgamma(s) / libm::tgamma(1.0 - s)
}

/// Coefficients of a function in an [`EigenBasis`].
#[derive(Debug, Clone)]
pub struct SpectralFunction<'a> {
    pub coeffs: Vec<f64>,
    pub basis: &'a EigenBasis,
}

impl<'a> SpectralFunction<'a> {
    pub fn zeros(basis: &'a EigenBasis) -> Self {
        SpectralFunction {
            coeffs: vec![0.0; basis.len()],
            basis,
        }
    }

    /// `Σ a_j φ_j`.
    pub fn synthesize(&self) -> GridFunction {
        let mut out = vec![0.0; self.basis.node_count()];
        for (a, mode) in self.coeffs.iter().zip(&self.basis.modes) {
            if *a == 0.0 {
                continue;
            }
            for (o, p) in out.iter_mut().zip(&mode.0) {
                *o += a * p;
            }
        }
        GridFunction(out)
    }

    /// `‖Σ a_j φ_j‖_{L²}`, i.e. the coefficient 2-norm.
    pub fn l2_norm(&self) -> f64 {
        self.coeffs.iter().map(|a| a * a).sum::<f64>().sqrt()
    }

    pub fn truncated(&self, j: usize) -> SpectralFunction<'a> {
        let mut coeffs = self.coeffs.clone();
        coeffs.iter_mut().skip(j).for_each(|a| *a = 0.0);
        SpectralFunction {
            coeffs,
            basis: self.basis,
        }
    }
}

pub fn project<'a>(f: &GridFunction, basis: &'a EigenBasis) -> Result<SpectralFunction<'a>> {
    if f.len() != basis.node_count() {
        return Err(Error::BasisMismatch {
            expected: basis.node_count(),
            found: f.len(),
        });
    }
    let coeffs = (0..basis.len()).map(|j| basis.inner(j, &f.0)).collect();
    Ok(SpectralFunction { coeffs, basis })
}

/// `a_j ↦ λ_j^{exponent} a_j`. Any real exponent is accepted so half powers
/// and inverses share the code path.
pub fn apply_frac_laplacian<'a>(u: &SpectralFunction<'a>, exponent: f64) -> SpectralFunction<'a> {
    let coeffs = u
        .coeffs
        .iter()
        .zip(&u.basis.eigenvalues)
        .map(|(a, l)| a * l.powf(exponent))
        .collect();
    SpectralFunction { coeffs, basis: u.basis }
}

/// `u = Σ_{j≤J} λ_j^{−s} ⟨f, φ_j⟩ φ_j` over the whole basis.
pub fn solve_spectral(f: &GridFunction, basis: &EigenBasis, s: f64) -> Result<GridFunction> {
    solve_spectral_modes(f, basis, s, basis.len())
}

/// [`solve_spectral`] truncated to the first `modes` eigenpairs.
pub fn solve_spectral_modes(f: &GridFunction, basis: &EigenBasis, s: f64, modes: usize) -> Result<GridFunction> {
    if basis.is_empty() || modes == 0 {
        return Err(Error::InvalidParameter("spectral solve needs a nonempty basis".into()));
    }
    let coeffs = project(f, basis)?.truncated(modes);
    Ok(apply_frac_laplacian(&coeffs, -s).synthesize())
}

/// `(Σ a_j² λ_j^s)^{1/2}`.
pub fn hs_norm(u: &SpectralFunction<'_>, s: f64) -> f64 {
    u.coeffs
        .iter()
        .zip(&u.basis.eigenvalues)
        .map(|(a, l)| a * a * l.powf(s))
        .sum::<f64>()
        .sqrt()
}

/// Trapezoidal `L^p` norm; `p = ∞` gives the nodal maximum.
pub fn lp_norm(grid: &Grid, f: &GridFunction, p: f64) -> f64 {
    if p.is_infinite() {
        return f.max_abs();
    }
    let w = grid.quadrature_weights();
    w.iter()
        .zip(&f.0)
        .map(|(w, v)| w * v.abs().powf(p))
        .sum::<f64>()
        .powf(1.0 / p)
}

/// Estimate of the trace constant `C_D` and its spectral upper bound.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TraceConstant {
    /// Smallest Rayleigh quotient `‖u‖²_{H^s}/‖u‖²_{L^{2*}}` over the trial set.
    pub rayleigh: f64,
    /// `|Ω|^{2s/N} λ_1^s`.
    pub upper: f64,
    pub trials: usize,
    pub best_trial: String,
}

/// Samples Rayleigh quotients over eigenmodes, seeded random combinations of
/// low modes and Gaussian bumps centred on Neumann boundary nodes.
pub fn trace_constant_cd(grid: &Grid, basis: &EigenBasis, s: f64, seed: u64) -> Result<TraceConstant> {
    let params = FracParams::new(s, grid.dim())?;
    let Some(r) = params.critical_exponent() else {
        return Err(Error::SubcriticalDimension { dim: grid.dim(), s });
    };
    if basis.is_empty() {
        return Err(Error::InvalidParameter("trace constant needs a nonempty basis".into()));
    }
    let n = grid.dim() as f64;
    let upper = grid.domain.volume().powf(2.0 * s / n) * basis.eigenvalues[0].powf(s);

    let quotient = |u: &SpectralFunction<'_>| -> f64 {
        let num = hs_norm(u, s).powi(2);
        let den = lp_norm(grid, &u.synthesize(), r).powi(2);
        num / den
    };
    let mut best = (f64::INFINITY, String::new());
    let mut trials = 0usize;
    let mut consider = |q: f64, label: String| {
        trials += 1;
        if q.is_finite() && q < best.0 {
            best = (q, label);
        }
    };

    let j = basis.len();
    for k in 0..j.min(32) {
        let mut u = SpectralFunction::zeros(basis);
        u.coeffs[k] = 1.0;
        consider(quotient(&u), format!("mode {}", k + 1));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let low = j.min(16);
    for t in 0..64 {
        let mut u = SpectralFunction::zeros(basis);
        for k in 0..low {
            u.coeffs[k] = (rng.gen::<f64>() - 0.5) / (1.0 + k as f64);
        }
        consider(quotient(&u), format!("random {t}"));
    }
    let neumann: Vec<usize> = (0..grid.len()).filter(|&i| grid.tags[i] == NodeTag::Neumann).collect();
    let stride = (neumann.len() / 8).max(1);
    let diam = match grid.domain {
        crate::geometry::DomainSpec::Interval { a, b } => b - a,
        crate::geometry::DomainSpec::Rectangle { lx, ly } => lx.hypot(ly),
    };
    for &c in neumann.iter().step_by(stride) {
        let centre = grid.coord(c);
        for width in [0.05, 0.1, 0.2, 0.4] {
            let delta = width * diam;
            let bump = GridFunction::from_fn(grid, |x| {
                let d2 = (x[0] - centre[0]).powi(2) + (x[1] - centre[1]).powi(2);
                (-d2 / (delta * delta)).exp()
            });
            let u = project(&bump, basis)?;
            consider(quotient(&u), format!("bump at node {c}, width {width}"));
        }
    }
    Ok(TraceConstant {
        rayleigh: best.0,
        upper,
        trials,
        best_trial: best.1,
    })
}

/// `‖u_{J1} − u_{J2}‖_∞ / ‖u_{J2}‖_∞` for truncated spectral solves.
pub fn truncation_error(f: &GridFunction, basis: &EigenBasis, s: f64, j1: usize, j2: usize) -> Result<f64> {
    if j1 > j2 || j2 > basis.len() {
        return Err(Error::InvalidParameter(format!(
            "need J1 <= J2 <= {}, got J1 = {j1}, J2 = {j2}",
            basis.len()
        )));
    }
    if j1 == j2 {
        return Ok(0.0);
    }
    let u1 = solve_spectral_modes(f, basis, s, j1)?;
    let u2 = solve_spectral_modes(f, basis, s, j2)?;
    Ok(u1.sup_relative_gap(&u2))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::eigenbasis::{assemble, solve_eigen};
    use crate::geometry::{classify_boundary_nodes, discretize, BoundaryArc, BoundaryPartition, DomainSpec, Edge};
    use std::f64::consts::PI;

    fn mixed_interval(n: usize, modes: usize) -> (Grid, EigenBasis) {
        let d = DomainSpec::Interval { a: 0.0, b: PI };
        let part = BoundaryPartition::new(d, vec![BoundaryArc::point(Edge::Left)]).unwrap();
        let g = classify_boundary_nodes(&discretize(d, n).unwrap(), &part);
        let sm = assemble(&g).unwrap();
        let b = solve_eigen(&sm, modes).unwrap();
        (g, b)
    }

    #[test]
    fn kappa_values() {
        // s → 1/2 gives κ = 1 (harmonic extension, Dirichlet-to-Neumann map)
        assert!((kappa(0.5) - 1.0).abs() < 1e-14);
        // closed form at s = 3/4: √2 Γ(3/4)/Γ(1/4)
        let expect = 2f64.sqrt() * 1.225_416_702_465_178 / 3.625_609_908_221_908;
        assert!((kappa(0.75) - expect).abs() < 1e-12);
        assert!(FracParams::new(0.4, 1).is_err());
        assert!(FracParams::new(1.0, 1).is_err());
        assert_eq!(FracParams::new(0.75, 1).unwrap().critical_exponent(), None);
        assert!((FracParams::new(0.75, 2).unwrap().critical_exponent().unwrap() - 8.0).abs() < 1e-14);
    }

    #[test]
    fn project_cases() {
        let (g, b) = mixed_interval(65, 8);
        let a = project(&b.modes[0], &b).unwrap();
        assert!((a.coeffs[0] - 1.0).abs() < 1e-10);
        assert!(a.coeffs[1..].iter().all(|c| c.abs() < 1e-10));
        let z = project(&GridFunction::zeros(&g), &b).unwrap();
        assert!(z.coeffs.iter().all(|c| *c == 0.0));
        let f = b.modes[1].combine(3.0, &b.modes[4], -1.0);
        let a = project(&f, &b).unwrap();
        assert!((a.coeffs[1] - 3.0).abs() < 1e-10 && (a.coeffs[4] + 1.0).abs() < 1e-10);
        assert!(matches!(
            project(&GridFunction(vec![0.0; 3]), &b),
            Err(Error::BasisMismatch { .. })
        ));
    }

    #[test]
    fn frac_power_semigroup() {
        let (_, b) = mixed_interval(65, 8);
        let mut u = SpectralFunction::zeros(&b);
        u.coeffs.iter_mut().enumerate().for_each(|(k, a)| *a = 1.0 / (1.0 + k as f64));
        let once = apply_frac_laplacian(&u, 0.7);
        let twice = apply_frac_laplacian(&apply_frac_laplacian(&u, 0.35), 0.35);
        for (a, c) in once.coeffs.iter().zip(&twice.coeffs) {
            assert!((a - c).abs() <= 1e-14 * a.abs().max(1.0));
        }
        let mut m1 = SpectralFunction::zeros(&b);
        m1.coeffs[0] = 1.0;
        let out = apply_frac_laplacian(&m1, 0.75);
        assert!((out.coeffs[0] - b.eigenvalues[0].powf(0.75)).abs() < 1e-15);
    }

    #[test]
    fn single_mode_inversion_and_norms() {
        let (g, b) = mixed_interval(65, 64);
        let s = 0.75;
        let u = solve_spectral(&b.modes[0], &b, s).unwrap();
        let expect = b.modes[0].scaled(b.eigenvalues[0].powf(-s));
        assert!(u.sup_relative_gap(&expect) < 1e-10);
        assert_eq!(solve_spectral(&GridFunction::zeros(&g), &b, s).unwrap().max_abs(), 0.0);
        assert!(u.0[0] == 0.0);

        let mut m1 = SpectralFunction::zeros(&b);
        m1.coeffs[0] = 1.0;
        assert!((hs_norm(&m1, s) - b.eigenvalues[0].powf(s / 2.0)).abs() < 1e-14);
        assert_eq!(hs_norm(&SpectralFunction::zeros(&b), s), 0.0);
        let w = project(&GridFunction::from_fn(&g, |x| x[0] * (PI - x[0]).sqrt()), &b).unwrap();
        let half = apply_frac_laplacian(&w, s / 2.0);
        assert!((hs_norm(&w, s) - half.l2_norm()).abs() <= 1e-12 * hs_norm(&w, s));
        // quadrature L² of the synthesized half power agrees with the coefficient norm
        let l2 = lp_norm(&g, &half.synthesize(), 2.0);
        assert!((l2 - half.l2_norm()).abs() <= 1e-10 * l2);
    }

    #[test]
    fn inversion_identity_and_linearity() {
        let (g, b) = mixed_interval(129, 128);
        let s = 0.6;
        let f = GridFunction::from_fn(&g, |x| (3.0 * x[0]).cos() + x[0]);
        let h = GridFunction::from_fn(&g, |x| if x[0] > 1.0 { 1.0 } else { 0.0 });
        let u = solve_spectral(&f, &b, s).unwrap();
        let back = apply_frac_laplacian(&project(&u, &b).unwrap(), s);
        let fc = project(&f, &b).unwrap();
        let scale = fc.l2_norm();
        for (x, y) in back.coeffs.iter().zip(&fc.coeffs) {
            assert!((x - y).abs() <= 1e-12 * scale);
        }
        let lhs = solve_spectral(&f.combine(2.0, &h, -0.5), &b, s).unwrap();
        let rhs = u.combine(2.0, &solve_spectral(&h, &b, s).unwrap(), -0.5);
        assert!(lhs.sup_relative_gap(&rhs) < 1e-12);
    }

    #[test]
    fn lp_norm_cases() {
        let d = DomainSpec::Interval { a: 0.0, b: PI };
        let g = discretize(d, 101).unwrap();
        let one = GridFunction::from_fn(&g, |_| 1.0);
        assert!((lp_norm(&g, &one, 2.0) - PI.sqrt()).abs() < 1e-12);
        let f = GridFunction::from_fn(&g, |x| x[0].sin() - 0.3);
        assert!((lp_norm(&g, &f, f64::INFINITY) - f.max_abs()).abs() == 0.0);
        for p in [1.0, 2.0, 3.5] {
            assert!((lp_norm(&g, &f.scaled(2.0), p) - 2.0 * lp_norm(&g, &f, p)).abs() < 1e-12);
        }
    }

    #[test]
    fn truncation_cases() {
        let (g, b) = mixed_interval(257, 256);
        let s = 0.75;
        assert_eq!(truncation_error(&b.modes[0], &b, s, 1, 200).unwrap() < 1e-12, true);
        let one = GridFunction::from_fn(&g, |_| 1.0);
        assert_eq!(truncation_error(&one, &b, s, 40, 40).unwrap(), 0.0);
        let smooth = GridFunction::from_fn(&g, |x| x[0] * (2.0 * PI - x[0]));
        let gaps: Vec<f64> = [4, 8, 16, 32, 64]
            .iter()
            .map(|&j| truncation_error(&smooth, &b, s, j, 256).unwrap())
            .collect();
        for w in gaps.windows(2) {
            assert!(w[1] < w[0], "{gaps:?}");
        }
    }

    #[test]
    fn trace_constant_subcritical_in_1d() {
        let (g, b) = mixed_interval(33, 8);
        assert!(matches!(
            trace_constant_cd(&g, &b, 0.75, 1),
            Err(Error::SubcriticalDimension { dim: 1, .. })
        ));
    }
}
