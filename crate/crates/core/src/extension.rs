//! Weighted extension route: `−div(y^{1−2s}∇U) = 0` on `Ω × (0, Y)` with
//! the lateral boundary condition inherited from the partition, `U = 0` on
//! the cap `y = Y`, and the load on `y = 0`.
//!
//! The operator is the tensor product
//! `A = K ⊗ Mʸ + M ⊗ Kʸ`, where `(K, M)` is the base Laplacian of
//! [`crate::eigenbasis`] and `(Kʸ, Mʸ)` is the weighted P1 stiffness / lumped
//! mass in `y` with cell integrals of `y^{1−2s}` taken in closed form. `A`
//! never contains `κ_s`; it is applied as a scalar to loads, fluxes and
//! energies.

use std::sync::{Arc, OnceLock};

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::eigenbasis::{assemble, StiffnessMass};
use crate::error::{Error, Result};
use crate::geometry::{Grid, GridFunction};
use crate::linalg::{pcg, solve_tridiagonal, CgStats, CsrMatrix};
use crate::spectral::{kappa, FracParams};

/// Relative residual required from every CG solve.
pub const CG_TOLERANCE: f64 = 1e-10;
const CG_MAX_ITER: usize = 50_000;
/// Largest free-node count for which the base is diagonalized densely and
/// CG is preconditioned by the exact tensor inverse.
pub const FAST_DIAG_LIMIT: usize = 1200;

/// Levels `y_i = Y (i/M)^q`, `i = 0..=M`.
pub fn graded_levels(height: f64, m: usize, q: f64) -> Result<Vec<f64>> {
    if !(q >= 1.0) {
        return Err(Error::BadGrading(q));
    }
    if !(height > 0.0) || m == 0 {
        return Err(Error::InvalidParameter(format!("need Y > 0 and M > 0, got Y = {height}, M = {m}")));
    }
    let mut y: Vec<f64> = (0..=m).map(|i| height * (i as f64 / m as f64).powf(q)).collect();
    y[m] = height;
    Ok(y)
}

/// Truncation height `8/√λ_1`.
pub fn default_height(lambda1: f64) -> f64 {
    8.0 / lambda1.sqrt()
}

/// `∫_{y0}^{y1} t^{1−2s} dt`.
pub fn weight_integral(y0: f64, y1: f64, s: f64) -> f64 {
    let e = 2.0 - 2.0 * s;
    (y1.powf(e) - y0.powf(e)) / e
}

/// `∫_{y0}^{y1} t^{2−2s} dt`.
fn first_moment(y0: f64, y1: f64, s: f64) -> f64 {
    let e = 3.0 - 2.0 * s;
    (y1.powf(e) - y0.powf(e)) / e
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CylinderGrid {
    pub base: Grid,
    /// `y_0 = 0 < … < y_M = Y`.
    pub levels: Vec<f64>,
    pub grading: f64,
}

impl CylinderGrid {
    pub fn height(&self) -> f64 {
        *self.levels.last().unwrap()
    }

    /// Number of cells `M` in `y`.
    pub fn m(&self) -> usize {
        self.levels.len() - 1
    }
}

/// Graded cylinder over a classified base grid; requires `M ≥ 8`.
pub fn build_cylinder(base: &Grid, height: f64, m: usize, q: f64) -> Result<CylinderGrid> {
    if m < 8 {
        return Err(Error::InvalidParameter(format!("need at least 8 y-levels, got {m}")));
    }
    let levels = graded_levels(height, m, q)?;
    Ok(CylinderGrid {
        base: base.clone(),
        levels,
        grading: q,
    })
}

/// Nodal values on the cylinder; index `node * (M + 1) + k`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CylinderField {
    pub nodes: usize,
    pub levels: usize,
    pub values: Vec<f64>,
}

impl CylinderField {
    pub fn zeros(cyl: &CylinderGrid) -> Self {
        CylinderField {
            nodes: cyl.base.len(),
            levels: cyl.levels.len(),
            values: vec![0.0; cyl.base.len() * cyl.levels.len()],
        }
    }

    pub fn get(&self, node: usize, k: usize) -> f64 {
        self.values[node * self.levels + k]
    }

    pub fn set(&mut self, node: usize, k: usize, v: f64) {
        self.values[node * self.levels + k] = v;
    }

    /// `U(·, 0)`.
    pub fn trace(&self) -> GridFunction {
        GridFunction((0..self.nodes).map(|i| self.get(i, 0)).collect())
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    pub fn scaled(&self, c: f64) -> Self {
        CylinderField {
            nodes: self.nodes,
            levels: self.levels,
            values: self.values.iter().map(|v| c * v).collect(),
        }
    }
}

/// Assembled weighted operator on the free unknowns: free base nodes times
/// levels `0..M` (the cap level is eliminated).
#[derive(Debug, Clone)]
pub struct WeightedSystem {
    pub cyl: CylinderGrid,
    pub s: f64,
    pub kappa: f64,
    pub base: StiffnessMass,
    pub matrix: CsrMatrix,
    /// Lumped weighted mass `∫ y^{1−2s} ĥ_k` of levels `0..=M`.
    pub y_mass: Vec<f64>,
    /// Cell integrals `∫_{y_k}^{y_{k+1}} y^{1−2s}`.
    pub y_cells: Vec<f64>,
    base_modes: OnceLock<Option<Arc<BaseModes>>>,
}

/// `K V = M V Λ` with `Vᵀ M V = I` on the free base nodes.
#[derive(Debug)]
struct BaseModes {
    v: DMatrix<f64>,
    lambda: Vec<f64>,
}

impl BaseModes {
    fn new(base: &StiffnessMass) -> Self {
        let isq: Vec<f64> = base.mass.iter().map(|m| 1.0 / m.sqrt()).collect();
        let mut k = base.stiffness.to_dense();
        let n = isq.len();
        for j in 0..n {
            for i in 0..n {
                k[(i, j)] *= isq[i] * isq[j];
            }
        }
        let eig = k.symmetric_eigen();
        let mut v = eig.eigenvectors;
        for j in 0..n {
            for i in 0..n {
                v[(i, j)] *= isq[i];
            }
        }
        BaseModes {
            v,
            lambda: eig.eigenvalues.iter().copied().collect(),
        }
    }
}

impl WeightedSystem {
    /// Unknown levels per column.
    pub fn m(&self) -> usize {
        self.cyl.m()
    }

    pub fn unknowns(&self) -> usize {
        self.base.free_count() * self.m()
    }

    pub fn index(&self, free: usize, k: usize) -> usize {
        free * self.m() + k
    }

    pub fn to_field(&self, x: &[f64]) -> CylinderField {
        let mut out = CylinderField::zeros(&self.cyl);
        let m = self.m();
        for (fi, &node) in self.base.free.iter().enumerate() {
            for k in 0..m {
                out.set(node, k, x[fi * m + k]);
            }
        }
        out
    }

    pub fn from_field(&self, u: &CylinderField) -> Vec<f64> {
        let m = self.m();
        let mut x = vec![0.0; self.unknowns()];
        for (fi, &node) in self.base.free.iter().enumerate() {
            for k in 0..m {
                x[fi * m + k] = u.get(node, k);
            }
        }
        x
    }

    fn preconditioner(&self, first_level: usize) -> Preconditioner {
        let modes = self.base_modes.get_or_init(|| (self.base.free_count() <= FAST_DIAG_LIMIT).then(|| Arc::new(BaseModes::new(&self.base))));
        match modes {
            Some(modes) => Preconditioner::Tensor(TensorInverse::new(self, modes.clone(), first_level)),
            None => Preconditioner::Line(LinePreconditioner::new(&self.matrix, self.base.free_count(), self.m(), first_level)),
        }
    }
}

pub fn assemble_weighted(cyl: &CylinderGrid, s: f64) -> Result<WeightedSystem> {
    FracParams::new(s, cyl.base.dim())?;
    let base = assemble(&cyl.base)?;
    let y = &cyl.levels;
    let m = cyl.m();
    let y_cells: Vec<f64> = (0..m).map(|k| weight_integral(y[k], y[k + 1], s)).collect();
    let mut y_mass = vec![0.0; m + 1];
    for k in 0..m {
        let (y0, y1) = (y[k], y[k + 1]);
        let d = y1 - y0;
        let i0 = y_cells[k];
        let i1 = first_moment(y0, y1, s);
        y_mass[k] += (y1 * i0 - i1) / d;
        y_mass[k + 1] += (i1 - y0 * i0) / d;
    }

    let nf = base.free_count();
    let mut triplets = Vec::with_capacity(nf * m * 7);
    for i in 0..nf {
        for (j, v) in base.stiffness.row(i) {
            for (k, &ym) in y_mass.iter().enumerate().take(m) {
                triplets.push((i * m + k, j * m + k, v * ym));
            }
        }
        let mi = base.mass[i];
        for k in 0..m {
            let d = y[k + 1] - y[k];
            let c = mi * y_cells[k] / (d * d);
            triplets.push((i * m + k, i * m + k, c));
            if k + 1 < m {
                triplets.push((i * m + k + 1, i * m + k + 1, c));
                triplets.push((i * m + k, i * m + k + 1, -c));
                triplets.push((i * m + k + 1, i * m + k, -c));
            }
        }
    }
    let matrix = CsrMatrix::from_triplets(nf * m, triplets);
    Ok(WeightedSystem {
        cyl: cyl.clone(),
        s,
        kappa: kappa(s),
        base,
        matrix,
        y_mass,
        y_cells,
        base_modes: OnceLock::new(),
    })
}

/// Block-Jacobi preconditioner with one tridiagonal block per `y`-column.
struct LinePreconditioner {
    m: usize,
    first: usize,
    diag: Vec<f64>,
    off: Vec<f64>,
}

impl LinePreconditioner {
    fn new(a: &CsrMatrix, columns: usize, m: usize, first: usize) -> Self {
        let len = m - first;
        let mut diag = vec![0.0; columns * len];
        let mut off = vec![0.0; columns * len];
        for c in 0..columns {
            for k in first..m {
                let row = c * m + k;
                diag[c * len + k - first] = a.get(row, row);
                if k + 1 < m {
                    off[c * len + k - first] = a.get(row, row + 1);
                }
            }
        }
        LinePreconditioner { m, first, diag, off }
    }

    fn apply(&self, r: &[f64], z: &mut [f64]) {
        let len = self.m - self.first;
        let columns = self.diag.len() / len;
        let mut scratch = Vec::with_capacity(len);
        let mut buf = vec![0.0; len];
        for c in 0..columns {
            let base = c * self.m + self.first;
            buf.copy_from_slice(&r[base..base + len]);
            solve_tridiagonal(
                &self.diag[c * len..(c + 1) * len],
                &self.off[c * len..(c + 1) * len - 1],
                &mut buf,
                &mut scratch,
            );
            z[base..base + len].copy_from_slice(&buf);
            for k in 0..self.first {
                z[c * self.m + k] = 0.0;
            }
        }
    }
}

/// Exact inverse of the tensor operator on levels `first..M`: transform to
/// base modes, one tridiagonal `y`-solve per mode, transform back.
struct TensorInverse {
    modes: Arc<BaseModes>,
    m: usize,
    first: usize,
    y_mass: Vec<f64>,
    ky_diag: Vec<f64>,
    ky_off: Vec<f64>,
}

impl TensorInverse {
    fn new(sys: &WeightedSystem, modes: Arc<BaseModes>, first: usize) -> Self {
        let m = sys.m();
        let y = &sys.cyl.levels;
        let c: Vec<f64> = (0..m).map(|k| sys.y_cells[k] / (y[k + 1] - y[k]).powi(2)).collect();
        let mut ky_diag = vec![0.0; m];
        let mut ky_off = vec![0.0; m];
        for k in 0..m {
            ky_diag[k] += c[k];
            if k + 1 < m {
                ky_diag[k + 1] += c[k];
                ky_off[k] = -c[k];
            }
        }
        TensorInverse {
            modes,
            m,
            first,
            y_mass: sys.y_mass[first..m].to_vec(),
            ky_diag: ky_diag[first..].to_vec(),
            ky_off: ky_off[first..].to_vec(),
        }
    }

    fn apply(&self, r: &[f64], z: &mut [f64]) {
        let nf = self.modes.lambda.len();
        let len = self.m - self.first;
        let rt = DMatrix::from_fn(len, nf, |k, fi| r[fi * self.m + self.first + k]);
        let mut hat = rt * &self.modes.v;
        let mut diag = vec![0.0; len];
        let mut scratch = Vec::with_capacity(len);
        for (j, &lam) in self.modes.lambda.iter().enumerate() {
            for k in 0..len {
                diag[k] = lam * self.y_mass[k] + self.ky_diag[k];
            }
            let col = hat.column_mut(j);
            let col = col.data.into_slice_mut();
            solve_tridiagonal(&diag, &self.ky_off[..len - 1], col, &mut scratch);
        }
        let zt = hat * self.modes.v.transpose();
        for fi in 0..nf {
            for k in 0..self.first {
                z[fi * self.m + k] = 0.0;
            }
            for k in 0..len {
                z[fi * self.m + self.first + k] = zt[(k, fi)];
            }
        }
    }
}

enum Preconditioner {
    Line(LinePreconditioner),
    Tensor(TensorInverse),
}

impl Preconditioner {
    fn apply(&self, r: &[f64], z: &mut [f64]) {
        match self {
            Preconditioner::Line(p) => p.apply(r, z),
            Preconditioner::Tensor(p) => p.apply(r, z),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExtensionSolution {
    pub field: CylinderField,
    pub stats: CgStats,
}

/// Energy solution of the Neumann problem with data `f` on `y = 0`.
pub fn solve_extension(sys: &WeightedSystem, f: &GridFunction) -> Result<ExtensionSolution> {
    if f.len() != sys.cyl.base.len() {
        return Err(Error::BasisMismatch {
            expected: sys.cyl.base.len(),
            found: f.len(),
        });
    }
    let m = sys.m();
    let mut b = vec![0.0; sys.unknowns()];
    for (fi, &node) in sys.base.free.iter().enumerate() {
        b[fi * m] = sys.base.mass[fi] * f.0[node];
    }
    let pre = sys.preconditioner(0);
    let mut x = vec![0.0; b.len()];
    let stats = pcg(
        |v, out| sys.matrix.matvec_into(v, out),
        |r, z| pre.apply(r, z),
        &b,
        &mut x,
        CG_TOLERANCE,
        CG_MAX_ITER,
    )?;
    let inv_kappa = 1.0 / sys.kappa;
    x.iter_mut().for_each(|v| *v *= inv_kappa);
    Ok(ExtensionSolution {
        field: sys.to_field(&x),
        stats,
    })
}

/// `s`-harmonic extension `E_s[u]`: homogeneous equation with `U(·,0) = u`.
pub fn extend(u: &GridFunction, sys: &WeightedSystem) -> Result<ExtensionSolution> {
    let grid = &sys.cyl.base;
    if u.len() != grid.len() {
        return Err(Error::BasisMismatch {
            expected: grid.len(),
            found: u.len(),
        });
    }
    let scale = u.max_abs().max(f64::MIN_POSITIVE);
    for i in 0..grid.len() {
        if grid.tags[i].is_dirichlet() && u.0[i].abs() > 1e-12 * scale {
            return Err(Error::InvalidParameter(format!(
                "trace data must vanish on Dirichlet nodes (node {i} has {})",
                u.0[i]
            )));
        }
    }
    let m = sys.m();
    let nf = sys.base.free_count();
    let mut data = vec![0.0; sys.unknowns()];
    for (fi, &node) in sys.base.free.iter().enumerate() {
        data[fi * m] = u.0[node];
    }
    let mut rhs = sys.matrix.matvec(&data);
    rhs.iter_mut().for_each(|v| *v = -*v);
    for fi in 0..nf {
        rhs[fi * m] = 0.0;
    }
    let pre = sys.preconditioner(1);
    let mut x = vec![0.0; rhs.len()];
    let mut masked = vec![0.0; rhs.len()];
    let masked_ptr = std::cell::RefCell::new(&mut masked);
    let stats = pcg(
        |v, out| {
            let mut buf = masked_ptr.borrow_mut();
            buf.copy_from_slice(v);
            for fi in 0..nf {
                buf[fi * m] = 0.0;
            }
            sys.matrix.matvec_into(&buf, out);
            for fi in 0..nf {
                out[fi * m] = 0.0;
            }
        },
        |r, z| pre.apply(r, z),
        &rhs,
        &mut x,
        CG_TOLERANCE,
        CG_MAX_ITER,
    )?;
    for (xi, di) in x.iter_mut().zip(&data) {
        *xi += di;
    }
    for fi in 0..nf {
        x[fi * m] = data[fi * m];
    }
    Ok(ExtensionSolution {
        field: sys.to_field(&x),
        stats,
    })
}

/// `−κ_s lim y^{1−2s}∂_y U`, realized as the weak-form residual of `U`
/// against the bottom-level hat functions divided by the base mass.
pub fn fractional_flux(u: &CylinderField, sys: &WeightedSystem) -> GridFunction {
    let x = sys.from_field(u);
    let r = sys.matrix.matvec(&x);
    let m = sys.m();
    let mut out = vec![0.0; sys.cyl.base.len()];
    for (fi, &node) in sys.base.free.iter().enumerate() {
        out[node] = sys.kappa * r[fi * m] / sys.base.mass[fi];
    }
    GridFunction(out)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WeightedEnergy {
    /// `∫ y^{1−2s}|∇U|²` (discrete `UᵀAU`).
    pub unscaled: f64,
    /// `κ_s ∫ y^{1−2s}|∇U|²`.
    pub scaled: f64,
}

pub fn weighted_energy(u: &CylinderField, sys: &WeightedSystem) -> WeightedEnergy {
    let x = sys.from_field(u);
    let ax = sys.matrix.matvec(&x);
    let unscaled = crate::linalg::dot(&x, &ax);
    WeightedEnergy {
        unscaled,
        scaled: sys.kappa * unscaled,
    }
}

/// Weighted Dirichlet energy of `U` on edges whose midpoint lies in
/// `B_r(Z)`; summed over all edges this is `UᵀAU`.
pub fn local_energy(u: &CylinderField, sys: &WeightedSystem, z: [f64; 3], r: f64) -> f64 {
    let grid = &sys.cyl.base;
    let y = &sys.cyl.levels;
    let m = sys.m();
    let w = grid.quadrature_weights();
    let inside = |p: [f64; 2], yy: f64| {
        (p[0] - z[0]).powi(2) + (p[1] - z[1]).powi(2) + (yy - z[2]).powi(2) <= r * r * (1.0 + 1e-12)
    };
    let mid = |a: [f64; 2], b: [f64; 2]| [0.5 * (a[0] + b[0]), 0.5 * (a[1] + b[1])];
    let mut e = 0.0;
    // base-direction edges: x-edges carry the trapezoid weight across y, and vice versa
    let (wx_edge, wy_edge) = edge_weights(grid);
    for i in 0..grid.len() {
        let (ix, iy) = (i % grid.nx, i / grid.nx);
        let mut nbrs = Vec::with_capacity(2);
        if ix + 1 < grid.nx {
            nbrs.push((i + 1, wx_edge[iy] / grid.hx));
        }
        if grid.ny > 1 && iy + 1 < grid.ny {
            nbrs.push((i + grid.nx, wy_edge[ix] / grid.hy));
        }
        for (j, c) in nbrs {
            let pm = mid(grid.coord(i), grid.coord(j));
            for k in 0..m {
                if inside(pm, y[k]) {
                    e += c * sys.y_mass[k] * (u.get(j, k) - u.get(i, k)).powi(2);
                }
            }
        }
        if grid.tags[i].is_dirichlet() {
            continue;
        }
        let p = grid.coord(i);
        for k in 0..m {
            if inside(p, 0.5 * (y[k] + y[k + 1])) {
                let d = y[k + 1] - y[k];
                e += w[i] * sys.y_cells[k] / (d * d) * (u.get(i, k + 1) - u.get(i, k)).powi(2);
            }
        }
    }
    e
}

fn edge_weights(grid: &Grid) -> (Vec<f64>, Vec<f64>) {
    let trap = |n: usize, h: f64| {
        let mut v = vec![h; n];
        if n > 1 {
            v[0] *= 0.5;
            v[n - 1] *= 0.5;
        } else {
            v[0] = 1.0;
        }
        v
    };
    (trap(grid.ny, grid.hy), trap(grid.nx, grid.hx))
}

/// `∫_{B_r(Z)} y^{1−2s} U²` with the lumped weights.
pub fn local_mass(u: &CylinderField, sys: &WeightedSystem, z: [f64; 3], r: f64) -> f64 {
    let grid = &sys.cyl.base;
    let w = grid.quadrature_weights();
    let mut acc = 0.0;
    for i in 0..grid.len() {
        let p = grid.coord(i);
        let dx2 = (p[0] - z[0]).powi(2) + (p[1] - z[1]).powi(2);
        for (k, yk) in sys.cyl.levels.iter().enumerate() {
            if dx2 + (yk - z[2]).powi(2) <= r * r * (1.0 + 1e-12) {
                acc += w[i] * sys.y_mass[k] * u.get(i, k).powi(2);
            }
        }
    }
    acc
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CaccioppoliFit {
    /// Smallest `C` with `E(B_ρ) ≤ C (r − ρ)^{−2} ∫_{B_r} y^{1−2s} W²` on every pair.
    pub constant: f64,
    pub pairs: usize,
}

/// Fits the Caccioppoli constant over concentric ball pairs `(ρ, r)`
/// around the given centres.
pub fn caccioppoli_constant(w: &CylinderField, sys: &WeightedSystem, centers: &[[f64; 3]], pairs: &[(f64, f64)]) -> Result<CaccioppoliFit> {
    let mut constant: f64 = 0.0;
    let mut used = 0;
    for &z in centers {
        for &(rho, r) in pairs {
            if !(rho > 0.0 && rho < r) {
                return Err(Error::InvalidParameter(format!("need 0 < ρ < r, got ({rho}, {r})")));
            }
            let mass = local_mass(w, sys, z, r);
            let energy = local_energy(w, sys, z, rho);
            if mass > 0.0 {
                constant = constant.max(energy * (r - rho).powi(2) / mass);
                used += 1;
            }
        }
    }
    Ok(CaccioppoliFit { constant, pairs: used })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{classify_boundary_nodes, discretize, BoundaryArc, BoundaryPartition, DomainSpec, Edge};
    use std::f64::consts::PI;

    fn interval_base(n: usize, ends: &[Edge]) -> Grid {
        let d = DomainSpec::Interval { a: 0.0, b: PI };
        let part = BoundaryPartition::new(d, ends.iter().map(|&e| BoundaryArc::point(e)).collect()).unwrap();
        classify_boundary_nodes(&discretize(d, n).unwrap(), &part)
    }

    fn system(n: usize, ends: &[Edge], m: usize, y: f64, s: f64) -> WeightedSystem {
        let cyl = build_cylinder(&interval_base(n, ends), y, m, 2.0).unwrap();
        assemble_weighted(&cyl, s).unwrap()
    }

    #[test]
    fn level_cases() {
        let y = graded_levels(1.0, 4, 2.0).unwrap();
        let expect = [0.0, 1.0 / 16.0, 0.25, 9.0 / 16.0, 1.0];
        for (a, b) in y.iter().zip(expect) {
            assert!((a - b).abs() < 1e-15);
        }
        let u = graded_levels(2.0, 8, 1.0).unwrap();
        for w in u.windows(2) {
            assert!((w[1] - w[0] - 0.25).abs() < 1e-15);
        }
        assert!(matches!(graded_levels(1.0, 8, 0.5), Err(Error::BadGrading(_))));
        assert!(build_cylinder(&interval_base(9, &[Edge::Left]), 1.0, 4, 2.0).is_err());
    }

    #[test]
    fn bookkeeping_and_symmetry() {
        let sys = system(17, &[Edge::Left], 8, 4.0, 0.75);
        assert_eq!(sys.unknowns(), 16 * 8);
        assert!(sys.matrix.is_symmetric(1e-13));
        // off-diagonals non-positive: M-matrix stencil
        for i in 0..sys.matrix.n {
            for (j, v) in sys.matrix.row(i) {
                assert!(j == i || v <= 0.0);
            }
        }
    }

    #[test]
    fn reflection_commutes() {
        let n = 21;
        let sys = system(n, &[Edge::Left, Edge::Right], 10, 3.0, 0.6);
        let nf = sys.base.free_count();
        let m = sys.m();
        let perm = |r: usize| (nf - 1 - r / m) * m + r % m;
        for i in 0..sys.matrix.n {
            for (j, v) in sys.matrix.row(i) {
                assert!((sys.matrix.get(perm(i), perm(j)) - v).abs() <= 1e-13 * v.abs());
            }
        }
    }

    #[test]
    fn closed_form_weights_vs_midpoint() {
        let s = 0.75;
        let y = graded_levels(10.0, 64, 2.0).unwrap();
        let mut exact_total = 0.0;
        let mut mid_total = 0.0;
        for k in 0..64 {
            let exact = weight_integral(y[k], y[k + 1], s);
            let mid = (y[k + 1] - y[k]) * (0.5 * (y[k] + y[k + 1])).powf(1.0 - 2.0 * s);
            exact_total += exact;
            mid_total += mid;
            if k >= 1 {
                assert!((mid - exact).abs() <= 0.1 * exact, "cell {k}");
            }
        }
        assert!((exact_total - 10f64.powf(0.5) / 0.5).abs() < 1e-12);
        assert!((mid_total - exact_total).abs() <= 0.1 * exact_total);
        // lumped weighted mass reproduces the column integral
        let cyl = build_cylinder(&interval_base(9, &[Edge::Left]), 10.0, 64, 2.0).unwrap();
        let sys = assemble_weighted(&cyl, s).unwrap();
        let total: f64 = sys.y_mass.iter().sum();
        assert!((total - exact_total).abs() < 1e-10 * exact_total);
    }

    #[test]
    fn zero_data_and_linearity() {
        let sys = system(33, &[Edge::Left], 16, 16.0, 0.75);
        let g = &sys.cyl.base;
        let zero = solve_extension(&sys, &GridFunction::zeros(g)).unwrap();
        assert_eq!(zero.field.max_abs(), 0.0);
        let f = GridFunction::from_fn(g, |x| 1.0 + x[0]);
        let h = GridFunction::from_fn(g, |x| (2.0 * x[0]).sin());
        let uf = solve_extension(&sys, &f).unwrap();
        assert!(uf.stats.relative_residual <= CG_TOLERANCE);
        let uh = solve_extension(&sys, &h).unwrap();
        let both = solve_extension(&sys, &f.combine(3.0, &h, -2.0)).unwrap();
        let scale = both.field.max_abs();
        for k in 0..both.field.values.len() {
            let lin = 3.0 * uf.field.values[k] - 2.0 * uh.field.values[k];
            assert!((both.field.values[k] - lin).abs() <= 1e-9 * scale);
        }
        // Dirichlet column and cap stay exactly zero
        for k in 0..uf.field.levels {
            assert_eq!(uf.field.get(0, k), 0.0);
        }
        for node in 0..g.len() {
            assert_eq!(uf.field.get(node, uf.field.levels - 1), 0.0);
        }
    }

    #[test]
    fn extend_zero_and_maximum_principle() {
        let sys = system(33, &[Edge::Left], 16, 16.0, 0.75);
        let g = &sys.cyl.base;
        assert_eq!(extend(&GridFunction::zeros(g), &sys).unwrap().field.max_abs(), 0.0);
        let u = GridFunction::from_fn(g, |x| (3.0 * x[0]).sin() + 0.5 * x[0]);
        let w = extend(&u, &sys).unwrap().field;
        let (lo, hi) = u.0.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), v| (a.min(*v), b.max(*v)));
        for v in &w.values {
            assert!(*v >= lo.min(0.0) - 1e-12 && *v <= hi.max(0.0) + 1e-12);
        }
        let bad = GridFunction::from_fn(g, |_| 1.0);
        assert!(extend(&bad, &sys).is_err());
    }

    #[test]
    fn flux_of_y_constant_field_is_lateral_only() {
        let sys = system(33, &[Edge::Left], 16, 16.0, 0.75);
        let g = sys.cyl.base.clone();
        let mut field = CylinderField::zeros(&sys.cyl);
        let u = GridFunction::from_fn(&g, |x| x[0] * (2.0 * PI - x[0]));
        for node in 0..g.len() {
            for k in 0..field.levels {
                field.set(node, k, u.0[node]);
            }
        }
        // only K ⊗ Mʸ survives, with Mʸ_0 = O(y_1^{2−2s})
        let flux = fractional_flux(&field, &sys);
        let ku = sys.base.stiffness.matvec(&sys.base.restrict(&u));
        for (fi, &node) in sys.base.free.iter().enumerate() {
            let expect = sys.kappa * sys.y_mass[0] * ku[fi] / sys.base.mass[fi];
            assert!((flux.0[node] - expect).abs() < 1e-10 * (1.0 + expect.abs()));
        }
        assert!(sys.y_mass[0] < weight_integral(0.0, sys.cyl.levels[1], 0.75));
    }

    #[test]
    fn energy_quadratic_and_minimal() {
        let sys = system(33, &[Edge::Left], 16, 16.0, 0.75);
        let g = sys.cyl.base.clone();
        let u = GridFunction::from_fn(&g, |x| x[0].sin());
        let w = extend(&u, &sys).unwrap().field;
        let e = weighted_energy(&w, &sys);
        assert!((e.scaled - sys.kappa * e.unscaled).abs() < 1e-14 * e.scaled);
        let e2 = weighted_energy(&w.scaled(2.0), &sys);
        assert!((e2.unscaled - 4.0 * e.unscaled).abs() < 1e-12 * e2.unscaled);
        assert_eq!(weighted_energy(&CylinderField::zeros(&sys.cyl), &sys).unscaled, 0.0);
        // competitors with the same trace and lateral data
        for (amp, freq) in [(0.1, 1.0), (0.01, 3.0), (0.5, 0.5)] {
            let mut v = w.clone();
            for node in 1..g.len() {
                for k in 1..v.levels - 1 {
                    let yk = sys.cyl.levels[k];
                    let bump = amp * (freq * g.coord(node)[0]).sin() * (yk / 16.0 * PI).sin();
                    v.set(node, k, v.get(node, k) + bump);
                }
            }
            assert!(weighted_energy(&v, &sys).unscaled > e.unscaled);
        }
    }

    #[test]
    fn local_energy_sums_to_total() {
        let d = DomainSpec::Rectangle { lx: 2.0, ly: 1.0 };
        let part = BoundaryPartition::new(d, vec![BoundaryArc::new(Edge::Bottom, 0.0, 1.0)]).unwrap();
        let g = classify_boundary_nodes(&discretize(d, 9).unwrap(), &part);
        let cyl = build_cylinder(&g, 2.0, 8, 2.0).unwrap();
        let sys = assemble_weighted(&cyl, 0.7).unwrap();
        let u = GridFunction::from_fn(&g, |x| x[0] * x[1] + 0.3);
        let u = GridFunction(u.0.iter().enumerate().map(|(i, v)| if g.tags[i].is_dirichlet() { 0.0 } else { *v }).collect());
        let w = extend(&u, &sys).unwrap().field;
        let total = weighted_energy(&w, &sys).unscaled;
        let local = local_energy(&w, &sys, [1.0, 0.5, 0.0], 100.0);
        assert!((total - local).abs() < 1e-12 * total);
        let fit = caccioppoli_constant(&w, &sys, &[[0.5, 0.0, 0.0], [1.0, 0.5, 0.0]], &[(0.25, 0.5), (0.5, 1.0)]).unwrap();
        assert_eq!(fit.pairs, 4);
        assert!(fit.constant.is_finite() && fit.constant > 0.0);
    }

    #[test]
    fn empty_dirichlet_rejected() {
        let cyl = build_cylinder(&interval_base(9, &[]), 1.0, 8, 2.0).unwrap();
        assert!(matches!(assemble_weighted(&cyl, 0.75), Err(Error::EmptyDirichletSet)));
    }
}
