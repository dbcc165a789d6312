//! Discrete mixed-BC Laplacian and its mass-orthonormal eigenpairs.
//!
//! The stiffness is the tensor-product form `K = Kx ⊗ Wy + Wx ⊗ Ky` built
//! from 1D cell stiffnesses and trapezoidal weights `W`; the mass is the
//! diagonal of trapezoidal weights. On a uniform grid this is the 3/5-point
//! stencil with Neumann nodes closed by ghost reflection, scaled so that `K`
//! stays symmetric. Dirichlet (and interface) nodes are eliminated.

use nalgebra::{DMatrix, SymmetricEigen};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{classify_boundary_nodes, discretize, DomainSpec, Grid, GridFunction, MovingFamily};
use crate::linalg::{dot, norm2, BandedCholesky, CsrMatrix};

/// Largest free-node count handled by the dense solver.
pub const DENSE_LIMIT: usize = 2000;

/// Stiffness/mass pair over the free nodes.
#[derive(Debug, Clone)]
pub struct StiffnessMass {
    pub stiffness: CsrMatrix,
    /// Lumped (diagonal) mass of the free nodes.
    pub mass: Vec<f64>,
    /// Free index -> grid node.
    pub free: Vec<usize>,
    /// Grid node -> free index.
    pub node_to_free: Vec<Option<usize>>,
    /// Trapezoidal weights of every grid node.
    pub weights: Vec<f64>,
}

impl StiffnessMass {
    pub fn free_count(&self) -> usize {
        self.free.len()
    }

    /// Restriction of a grid function to the free nodes.
    pub fn restrict(&self, f: &GridFunction) -> Vec<f64> {
        self.free.iter().map(|&i| f.0[i]).collect()
    }

    /// Zero extension of free-node values to the whole grid.
    pub fn extend(&self, v: &[f64]) -> GridFunction {
        let mut out = vec![0.0; self.node_to_free.len()];
        for (k, &i) in self.free.iter().enumerate() {
            out[i] = v[k];
        }
        GridFunction(out)
    }

    /// `M^{-1/2} K M^{-1/2}`, the symmetric standard form of `Kφ = λMφ`.
    fn normalized(&self) -> CsrMatrix {
        let d: Vec<f64> = self.mass.iter().map(|m| 1.0 / m.sqrt()).collect();
        self.stiffness.scale_symmetric(&d)
    }
}

/// Assembles the mixed-BC Laplacian on a classified grid.
pub fn assemble(grid: &Grid) -> Result<StiffnessMass> {
    if grid.dirichlet_count() == 0 {
        return Err(Error::EmptyDirichletSet);
    }
    let weights = grid.quadrature_weights();
    let mut node_to_free = vec![None; grid.len()];
    let free = grid.free_nodes();
    for (k, &i) in free.iter().enumerate() {
        node_to_free[i] = Some(k);
    }
    let mut triplets = Vec::new();
    let mut add_edge = |a: usize, b: usize, c: f64| {
        let (fa, fb) = (node_to_free[a], node_to_free[b]);
        if let Some(i) = fa {
            triplets.push((i, i, c));
        }
        if let Some(j) = fb {
            triplets.push((j, j, c));
        }
        if let (Some(i), Some(j)) = (fa, fb) {
            triplets.push((i, j, -c));
            triplets.push((j, i, -c));
        }
    };
    match grid.domain {
        DomainSpec::Interval { .. } => {
            for ix in 0..grid.nx - 1 {
                add_edge(ix, ix + 1, 1.0 / grid.hx);
            }
        }
        DomainSpec::Rectangle { .. } => {
            let wy = |iy: usize| if iy == 0 || iy == grid.ny - 1 { 0.5 * grid.hy } else { grid.hy };
            let wx = |ix: usize| if ix == 0 || ix == grid.nx - 1 { 0.5 * grid.hx } else { grid.hx };
            for iy in 0..grid.ny {
                for ix in 0..grid.nx {
                    let i = grid.index(ix, iy);
                    if ix + 1 < grid.nx {
                        add_edge(i, i + 1, wy(iy) / grid.hx);
                    }
                    if iy + 1 < grid.ny {
                        add_edge(i, i + grid.nx, wx(ix) / grid.hy);
                    }
                }
            }
        }
    }
    let stiffness = CsrMatrix::from_triplets(free.len(), triplets);
    let mass = free.iter().map(|&i| weights[i]).collect();
    Ok(StiffnessMass {
        stiffness,
        mass,
        free,
        node_to_free,
        weights,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum EigenMethod {
    Dense,
    Lanczos,
}

/// Ascending eigenpairs `(λ_j, φ_j)` with `φ_jᵀ M φ_k = δ_jk`; modes are
/// stored as full grid functions, zero on Dirichlet nodes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EigenBasis {
    pub eigenvalues: Vec<f64>,
    pub modes: Vec<GridFunction>,
    /// Trapezoidal weights (mass) on every grid node.
    pub weights: Vec<f64>,
    pub method: EigenMethod,
    /// Krylov dimension (Lanczos) or matrix order (dense).
    pub iterations: usize,
}

impl EigenBasis {
    pub fn len(&self) -> usize {
        self.eigenvalues.len()
    }

    pub fn is_empty(&self) -> bool {
        self.eigenvalues.is_empty()
    }

    pub fn node_count(&self) -> usize {
        self.weights.len()
    }

    /// `φ_jᵀ M f`.
    pub fn inner(&self, j: usize, f: &[f64]) -> f64 {
        self.modes[j].0.iter().zip(&self.weights).zip(f).map(|((p, w), v)| p * w * v).sum()
    }

    /// `max_{i,j} |φ_iᵀMφ_j − δ_ij|`.
    pub fn orthonormality_defect(&self) -> f64 {
        let mut worst = 0.0f64;
        for i in 0..self.len() {
            for j in i..self.len() {
                let g = self.inner(i, &self.modes[j].0);
                let target = if i == j { 1.0 } else { 0.0 };
                worst = worst.max((g - target).abs());
            }
        }
        worst
    }

    /// Keeps the first `j` pairs.
    pub fn truncated(&self, j: usize) -> EigenBasis {
        let j = j.min(self.len());
        EigenBasis {
            eigenvalues: self.eigenvalues[..j].to_vec(),
            modes: self.modes[..j].to_vec(),
            weights: self.weights.clone(),
            method: self.method,
            iterations: self.iterations,
        }
    }
}

/// Default mode count: 512 in 1D, 256 in 2D, capped by the free-node count.
pub fn default_mode_count(grid: &Grid, sm: &StiffnessMass) -> usize {
    let cap = if grid.dim() == 1 { 512 } else { 256 };
    sm.free_count().min(cap)
}

/// Smallest `j` eigenpairs. Uses the dense solver when the problem is small
/// and most of the spectrum is requested, inverse Lanczos otherwise.
pub fn solve_eigen(sm: &StiffnessMass, j: usize) -> Result<EigenBasis> {
    let n = sm.free_count();
    if j > n {
        return Err(Error::InvalidParameter(format!("requested {j} eigenpairs but only {n} free nodes")));
    }
    if n <= DENSE_LIMIT && (4 * j > n || n <= 64) {
        solve_eigen_dense(sm, j)
    } else {
        solve_eigen_lanczos(sm, j)
    }
}

/// Full dense symmetric eigendecomposition (`n ≤ DENSE_LIMIT`).
pub fn solve_eigen_dense(sm: &StiffnessMass, j: usize) -> Result<EigenBasis> {
    let n = sm.free_count();
    if n > DENSE_LIMIT {
        return Err(Error::InvalidParameter(format!("dense eigensolver limited to {DENSE_LIMIT} unknowns, got {n}")));
    }
    let b = sm.normalized().to_dense();
    let eig = SymmetricEigen::new(b);
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
    let pairs = order
        .into_iter()
        .take(j)
        .map(|k| (eig.eigenvalues[k], eig.eigenvectors.column(k).iter().copied().collect()))
        .collect();
    Ok(finish(sm, pairs, EigenMethod::Dense, n))
}

/// Lanczos with full reorthogonalization on `B^{-1}`, `B = M^{-1/2}KM^{-1/2}`,
/// applied through a banded Cholesky factor. The Krylov space is enlarged
/// until every requested Ritz pair meets the residual tolerance.
pub fn solve_eigen_lanczos(sm: &StiffnessMass, j: usize) -> Result<EigenBasis> {
    let n = sm.free_count();
    if j == 0 {
        return Ok(finish(sm, Vec::new(), EigenMethod::Lanczos, 0));
    }
    let b = sm.normalized();
    let chol = BandedCholesky::factor(&b)?;
    let mut rng = ChaCha8Rng::seed_from_u64(0x1a2c_0517);
    let mut random_unit = |basis: &[Vec<f64>]| -> Vec<f64> {
        let mut v: Vec<f64> = (0..n).map(|_| rng.gen::<f64>() - 0.5).collect();
        orthogonalize(&mut v, basis);
        orthogonalize(&mut v, basis);
        let nv = norm2(&v);
        v.iter_mut().for_each(|x| *x /= nv);
        v
    };

    let mut basis: Vec<Vec<f64>> = Vec::new();
    let mut alpha: Vec<f64> = Vec::new();
    let mut beta: Vec<f64> = Vec::new();
    let mut target = n.min((2 * j + 20).max(j + 40));
    let mut next = random_unit(&basis);
    let mut worst: f64;
    loop {
        while basis.len() < target {
            let v = next;
            let mut w = v.clone();
            chol.solve_in_place(&mut w);
            let a = dot(&v, &w);
            basis.push(v);
            alpha.push(a);
            orthogonalize(&mut w, &basis);
            orthogonalize(&mut w, &basis);
            let bnorm = norm2(&w);
            if basis.len() == n {
                next = Vec::new();
                break;
            }
            if bnorm <= 1e-12 * a.abs().max(1e-300) {
                // invariant subspace found; continue in a fresh direction
                beta.push(0.0);
                next = random_unit(&basis);
            } else {
                beta.push(bnorm);
                w.iter_mut().for_each(|x| *x /= bnorm);
                next = w;
            }
        }
        let m = basis.len();
        let mut t = DMatrix::zeros(m, m);
        for k in 0..m {
            t[(k, k)] = alpha[k];
            if k + 1 < m {
                t[(k, k + 1)] = beta[k];
                t[(k + 1, k)] = beta[k];
            }
        }
        let eig = SymmetricEigen::new(t);
        let mut order: Vec<usize> = (0..m).collect();
        order.sort_by(|&a, &b| eig.eigenvalues[b].total_cmp(&eig.eigenvalues[a]));
        let mut pairs = Vec::with_capacity(j);
        worst = 0.0;
        for &k in order.iter().take(j) {
            let theta = eig.eigenvalues[k];
            let s = eig.eigenvectors.column(k);
            let mut x = vec![0.0; n];
            for (c, v) in basis.iter().enumerate() {
                let sc = s[c];
                for (xi, vi) in x.iter_mut().zip(v) {
                    *xi += sc * vi;
                }
            }
            let nx = norm2(&x);
            x.iter_mut().for_each(|v| *v /= nx);
            let lambda = 1.0 / theta;
            let bx = b.matvec(&x);
            let res: f64 = bx.iter().zip(&x).map(|(p, q)| (p - lambda * q).powi(2)).sum::<f64>().sqrt();
            worst = worst.max(res / lambda);
            pairs.push((lambda, x));
        }
        if worst <= 1e-9 || m == n {
            pairs.sort_by(|a, b| a.0.total_cmp(&b.0));
            return Ok(finish(sm, pairs, EigenMethod::Lanczos, m));
        }
        if target == n {
            break;
        }
        target = n.min(2 * target);
    }
    Err(Error::ConvergenceFailure {
        iterations: basis.len(),
        residual: worst,
        detail: format!("{j} smallest eigenpairs of a {n}-node problem"),
    })
}

fn orthogonalize(w: &mut [f64], basis: &[Vec<f64>]) {
    for v in basis {
        let c = dot(w, v);
        for (wi, vi) in w.iter_mut().zip(v) {
            *wi -= c * vi;
        }
    }
}

/// Maps standard-form eigenvectors back to M-orthonormal grid functions with
/// a deterministic sign (largest entry positive).
fn finish(sm: &StiffnessMass, pairs: Vec<(f64, Vec<f64>)>, method: EigenMethod, iterations: usize) -> EigenBasis {
    let mut eigenvalues = Vec::with_capacity(pairs.len());
    let mut modes = Vec::with_capacity(pairs.len());
    for (lambda, v) in pairs {
        let mut phi: Vec<f64> = v.iter().zip(&sm.mass).map(|(x, m)| x / m.sqrt()).collect();
        let peak = phi.iter().fold(0.0f64, |m, x| m.max(x.abs()));
        if let Some(first) = phi.iter().find(|x| x.abs() >= peak * (1.0 - 1e-6)) {
            if *first < 0.0 {
                phi.iter_mut().for_each(|x| *x = -*x);
            }
        }
        eigenvalues.push(lambda);
        modes.push(sm.extend(&phi));
    }
    EigenBasis {
        eigenvalues,
        modes,
        weights: sm.weights.clone(),
        method,
        iterations,
    }
}

/// `max_j ‖Kφ_j − λ_jMφ_j‖_{M⁻¹} / (λ_j‖φ_j‖_M)`; the mass-weighted norms
/// make the measure independent of the grid scaling. Zero for an empty basis.
pub fn eigen_residual(sm: &StiffnessMass, basis: &EigenBasis) -> f64 {
    let mut worst = 0.0f64;
    for (lambda, mode) in basis.eigenvalues.iter().zip(&basis.modes) {
        let phi = sm.restrict(mode);
        let kphi = sm.stiffness.matvec(&phi);
        let mut num = 0.0;
        let mut den = 0.0;
        for k in 0..phi.len() {
            let r = kphi[k] - lambda * sm.mass[k] * phi[k];
            num += r * r / sm.mass[k];
            den += sm.mass[k] * phi[k] * phi[k];
        }
        if den > 0.0 {
            worst = worst.max(num.sqrt() / (lambda * den.sqrt()));
        }
    }
    worst
}

/// `λ_1(α)` for the partition `Σ_D(α)` of a moving family on an `n`-node grid.
pub fn first_eigenvalue(family: &MovingFamily, alpha: f64, n: usize) -> Result<f64> {
    let part = family.partition_at(alpha)?;
    let grid = classify_boundary_nodes(&discretize(family.domain, n)?, &part);
    let sm = assemble(&grid)?;
    let basis = solve_eigen_lanczos(&sm, 1)?;
    Ok(basis.eigenvalues[0])
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{BoundaryArc, BoundaryPartition, Direction, Edge};
    use std::f64::consts::PI;

    fn interval_grid(n: usize, ends: &[Edge]) -> Grid {
        let d = DomainSpec::Interval { a: 0.0, b: PI };
        let part = BoundaryPartition::new(d, ends.iter().map(|&e| BoundaryArc::point(e)).collect()).unwrap();
        classify_boundary_nodes(&discretize(d, n).unwrap(), &part)
    }

    #[test]
    fn assemble_1d_mixed_bookkeeping() {
        let g = interval_grid(5, &[Edge::Left]);
        let sm = assemble(&g).unwrap();
        assert_eq!(sm.free_count(), 4);
        let h = PI / 4.0;
        assert!(sm.stiffness.bandwidth() <= 1);
        assert!((sm.stiffness.get(0, 0) - 2.0 / h).abs() < 1e-12);
        // Neumann closure at π: half cell
        assert!((sm.stiffness.get(3, 3) - 1.0 / h).abs() < 1e-12);
        assert!((sm.mass[3] - h / 2.0).abs() < 1e-15);
        assert!(sm.stiffness.is_symmetric(1e-14));
    }

    #[test]
    fn assemble_2d_pure_dirichlet_is_five_point() {
        let d = DomainSpec::Rectangle { lx: 1.0, ly: 1.0 };
        let g = classify_boundary_nodes(&discretize(d, 6).unwrap(), &BoundaryPartition::full(d).unwrap());
        let sm = assemble(&g).unwrap();
        assert_eq!(sm.free_count(), 16);
        for i in 0..16 {
            assert!((sm.stiffness.get(i, i) - 4.0).abs() < 1e-12);
            for (j, v) in sm.stiffness.row(i) {
                if j != i {
                    assert!((v + 1.0).abs() < 1e-12);
                    assert!(j == i + 1 || j + 1 == i || j == i + 4 || j + 4 == i);
                }
            }
        }
    }

    #[test]
    fn empty_dirichlet_rejected() {
        let g = interval_grid(5, &[]);
        assert!(matches!(assemble(&g), Err(Error::EmptyDirichletSet)));
    }

    #[test]
    fn dirichlet_interval_eigenvalues_are_squares() {
        let g = interval_grid(401, &[Edge::Left, Edge::Right]);
        let sm = assemble(&g).unwrap();
        let b = solve_eigen(&sm, 5).unwrap();
        let h = PI / 400.0;
        for (j, lam) in b.eigenvalues.iter().enumerate() {
            let exact = ((j + 1) * (j + 1)) as f64;
            // second-order consistency: |λ_h − j²| ≤ j⁴h²/12 (+ slack)
            assert!((lam - exact).abs() <= exact * exact * h * h / 12.0 * 1.01 + 1e-9, "{j}: {lam}");
        }
        // oracle mode shape √(2/π) sin x
        let phi1 = &b.modes[0];
        for i in 0..g.len() {
            let x = g.coord(i)[0];
            assert!((phi1.0[i] - (2.0 / PI).sqrt() * x.sin()).abs() < 1e-4);
        }
    }

    #[test]
    fn mixed_interval_eigenvalues() {
        let g = interval_grid(257, &[Edge::Left]);
        let sm = assemble(&g).unwrap();
        let b = solve_eigen(&sm, 6).unwrap();
        for (j, lam) in b.eigenvalues.iter().enumerate() {
            let exact = (j as f64 + 0.5).powi(2);
            assert!((lam - exact).abs() / exact < 2e-3, "{j}: {lam} vs {exact}");
        }
        assert!(b.orthonormality_defect() < 1e-8);
        assert!(eigen_residual(&sm, &b) < 1e-7);
    }

    #[test]
    fn square_tensor_spectrum() {
        let d = DomainSpec::Rectangle { lx: PI, ly: PI };
        let g = classify_boundary_nodes(&discretize(d, 41).unwrap(), &BoundaryPartition::full(d).unwrap());
        let sm = assemble(&g).unwrap();
        let b = solve_eigen_lanczos(&sm, 4).unwrap();
        let expect = [2.0, 5.0, 5.0, 8.0];
        for (lam, e) in b.eigenvalues.iter().zip(expect) {
            assert!((lam - e).abs() / e < 5e-3, "{lam} vs {e}");
        }
    }

    #[test]
    fn lanczos_agrees_with_dense() {
        let d = DomainSpec::Rectangle { lx: 1.0, ly: 2.0 };
        let part = BoundaryPartition::new(d, vec![BoundaryArc::new(Edge::Left, 0.2, 1.5)]).unwrap();
        let g = classify_boundary_nodes(&discretize(d, 17).unwrap(), &part);
        let sm = assemble(&g).unwrap();
        let dense = solve_eigen_dense(&sm, 12).unwrap();
        let lanczos = solve_eigen_lanczos(&sm, 12).unwrap();
        for (a, b) in dense.eigenvalues.iter().zip(&lanczos.eigenvalues) {
            assert!((a - b).abs() <= 1e-9 * a.abs(), "{a} vs {b}");
        }
        assert!(lanczos.orthonormality_defect() < 1e-8);
        assert!(eigen_residual(&sm, &lanczos) < 1e-7);
    }

    #[test]
    fn residual_cases() {
        let g = interval_grid(129, &[Edge::Left]);
        let sm = assemble(&g).unwrap();
        let b = solve_eigen(&sm, 2).unwrap();
        assert!(eigen_residual(&sm, &b) < 1e-10);
        assert_eq!(eigen_residual(&sm, &b.truncated(0)), 0.0);
        // φ_1 + ε φ_2: residual = ε(λ_2 − λ_1) / (λ_1 √(1 + ε²))
        let eps = 1e-3;
        let mut pert = b.truncated(1);
        pert.modes[0] = b.modes[0].combine(1.0, &b.modes[1], eps);
        let (l1, l2) = (b.eigenvalues[0], b.eigenvalues[1]);
        let expected = eps * (l2 - l1) / (l1 * (1.0 + eps * eps).sqrt());
        let got = eigen_residual(&sm, &pert);
        assert!((got - expected).abs() < 1e-8 * expected, "{got} vs {expected}");
    }

    #[test]
    fn first_eigenvalue_monotone_in_alpha() {
        let d = DomainSpec::Rectangle { lx: PI, ly: PI };
        let fam = MovingFamily::new(d, Edge::Bottom, 0.0, Direction::CounterClockwise, 4.0 * PI / 20.0).unwrap();
        let alphas = [4.0 * PI / 20.0, PI, 2.0 * PI, 3.0 * PI, 4.0 * PI];
        let lams: Vec<f64> = alphas.iter().map(|&a| first_eigenvalue(&fam, a, 25).unwrap()).collect();
        for w in lams.windows(2) {
            assert!(w[0] < w[1], "{lams:?}");
        }
        // full boundary: tensor oracle λ_1 = 2 up to O(h²)
        assert!((lams[4] - 2.0).abs() < 0.01);
    }
}
