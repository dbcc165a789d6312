//! Level sets, oscillation decay, Hölder estimates and the two De Giorgi
//! iteration thresholds.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::extension::{weight_integral, CylinderField, CylinderGrid};
use crate::geometry::{Grid, GridFunction};
use crate::spectral::lp_norm;

/// Default seed for long-range pair sampling.
pub const PAIR_SEED: u64 = 0xF2AC;
/// Above this many node pairs the 2D seminorm switches to sampling.
pub const EXHAUSTIVE_PAIR_LIMIT: usize = 4_000_000;
const SAMPLED_PAIRS: usize = 1_000_000;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LevelSetStats {
    pub k: f64,
    /// `|{u > k}|`
    pub above: f64,
    /// `|{u < k}|`
    pub below: f64,
}

pub fn level_set_measure(grid: &Grid, u: &GridFunction, k: f64) -> LevelSetStats {
    let w = grid.quadrature_weights();
    let mut above = 0.0;
    let mut below = 0.0;
    for (wi, &v) in w.iter().zip(&u.0) {
        if v > k {
            above += wi;
        } else if v < k {
            below += wi;
        }
    }
    LevelSetStats { k, above, below }
}

/// Weighted measures inside `B_r(Z) ∩ 𝒞`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WeightedLevelSet {
    pub k: f64,
    pub above: f64,
    pub below: f64,
    /// `|𝒞 ∩ B_r(Z)|_{y^{1−2s}}`
    pub total: f64,
}

/// Dual boxes of the cylinder nodes: base quadrature weight times the
/// `y`-slab between neighbouring level midpoints, kept when the node lies in
/// the ball's cross-section at the slab midpoint.
pub fn weighted_levelset(cyl: &CylinderGrid, u: &CylinderField, k: f64, z: [f64; 3], r: f64, s: f64) -> WeightedLevelSet {
    let base = &cyl.base;
    let w = base.quadrature_weights();
    let y = &cyl.levels;
    let m = y.len() - 1;
    let mut out = WeightedLevelSet {
        k,
        above: 0.0,
        below: 0.0,
        total: 0.0,
    };
    for lev in 0..=m {
        let lo = if lev == 0 { 0.0 } else { 0.5 * (y[lev - 1] + y[lev]) };
        let hi = if lev == m { y[m] } else { 0.5 * (y[lev] + y[lev + 1]) };
        let mid = 0.5 * (lo + hi);
        let dy = mid - z[2];
        if dy.abs() > r {
            continue;
        }
        let cross2 = r * r - dy * dy;
        let slab = weight_integral(lo, hi, s);
        for node in 0..base.len() {
            let x = base.coord(node);
            let d2 = (x[0] - z[0]).powi(2) + (x[1] - z[1]).powi(2);
            if d2 > cross2 {
                continue;
            }
            let vol = w[node] * slab;
            out.total += vol;
            let v = u.get(node, lev);
            if v > k {
                out.above += vol;
            } else if v < k {
                out.below += vol;
            }
        }
    }
    out
}

/// `‖u‖_∞ / (‖f‖_p |Ω|^{2s/N − 1/p})`; zero when `f` vanishes.
pub fn verify_linfty_bound(grid: &Grid, u: &GridFunction, f: &GridFunction, s: f64, p: f64) -> Result<f64> {
    let n = grid.dim() as f64;
    let min = n / (2.0 * s);
    if !(p > min) {
        return Err(Error::ExponentViolation { p, min });
    }
    let fp = lp_norm(grid, f, p);
    if fp == 0.0 {
        return Ok(0.0);
    }
    let vol = grid.domain.volume();
    Ok(u.max_abs() / (fp * vol.powf(2.0 * s / n - 1.0 / p)))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OscillationProfile {
    /// `(x1, x2, y)`; unused coordinates are zero.
    pub center: [f64; 3],
    pub radii: Vec<f64>,
    pub omega: Vec<f64>,
}

fn check_radii(radii: &[f64]) -> Result<()> {
    if radii.is_empty() || radii.iter().any(|r| !(*r > 0.0)) || radii.windows(2).any(|w| w[1] >= w[0]) {
        return Err(Error::InvalidParameter("radii must be positive and strictly descending".into()));
    }
    Ok(())
}

fn profile_from_samples(center: [f64; 3], radii: &[f64], samples: impl Iterator<Item = (f64, f64)> + Clone) -> Result<OscillationProfile> {
    check_radii(radii)?;
    let mut omega = Vec::with_capacity(radii.len());
    for &r in radii {
        let cut = (r * (1.0 + 1e-12)).powi(2);
        let (mut hi, mut lo) = (f64::NEG_INFINITY, f64::INFINITY);
        for (d2, v) in samples.clone() {
            if d2 <= cut {
                hi = hi.max(v);
                lo = lo.min(v);
            }
        }
        if hi < lo {
            return Err(Error::EmptyBall { radius: r });
        }
        omega.push(hi - lo);
    }
    Ok(OscillationProfile {
        center,
        radii: radii.to_vec(),
        omega,
    })
}

/// `ω(ρ) = sup − inf` of nodal values in `Ω̄ ∩ B_ρ(z)`.
pub fn oscillation_profile(grid: &Grid, u: &GridFunction, z: [f64; 2], radii: &[f64]) -> Result<OscillationProfile> {
    let samples = (0..grid.len()).map(|i| {
        let x = grid.coord(i);
        ((x[0] - z[0]).powi(2) + (x[1] - z[1]).powi(2), u.0[i])
    });
    profile_from_samples([z[0], z[1], 0.0], radii, samples)
}

/// Same on `𝒞̄ ∩ B_ρ(Z)`, trace nodes included.
pub fn oscillation_profile_cylinder(cyl: &CylinderGrid, u: &CylinderField, z: [f64; 3], radii: &[f64]) -> Result<OscillationProfile> {
    let levels = &cyl.levels;
    let samples = (0..cyl.base.len()).flat_map(move |i| {
        let x = cyl.base.coord(i);
        let dx2 = (x[0] - z[0]).powi(2) + (x[1] - z[1]).powi(2);
        levels.iter().enumerate().map(move |(k, y)| (dx2 + (y - z[2]).powi(2), u.get(i, k)))
    });
    profile_from_samples(z, radii, samples)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HolderFit {
    /// Slope of `log ω` against `log ρ`.
    pub tau: f64,
    pub intercept: f64,
    pub r_squared: f64,
    /// Radii with `ω > 0` entering the regression.
    pub used: usize,
    /// `ω(ρ_{i+1}) / ω(ρ_i)` over consecutive radii.
    pub ratios: Vec<f64>,
    /// Largest ratio.
    pub eta_bar: f64,
}

/// Least-squares fit over the radii with positive oscillation; at least four
/// are needed.
pub fn fit_holder_exponent(profile: &OscillationProfile) -> Result<HolderFit> {
    let pts: Vec<(f64, f64)> = profile
        .radii
        .iter()
        .zip(&profile.omega)
        .filter(|(_, w)| **w > 0.0)
        .map(|(r, w)| (r.ln(), w.ln()))
        .collect();
    if pts.len() < 4 {
        return Err(Error::DegenerateProfile(format!(
            "{} of {} radii have positive oscillation, need 4",
            pts.len(),
            profile.radii.len()
        )));
    }
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let syy: f64 = pts.iter().map(|p| (p.1 - my).powi(2)).sum();
    let tau = sxy / sxx;
    let r_squared = if syy == 0.0 { 1.0 } else { sxy * sxy / (sxx * syy) };
    let ratios: Vec<f64> = profile
        .omega
        .windows(2)
        .filter(|w| w[0] > 0.0)
        .map(|w| w[1] / w[0])
        .collect();
    let eta_bar = ratios.iter().copied().fold(0.0, f64::max);
    Ok(HolderFit {
        tau,
        intercept: my - tau * mx,
        r_squared,
        used: pts.len(),
        ratios,
        eta_bar,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HolderSeminorm {
    pub gamma: f64,
    pub value: f64,
    pub pairs: usize,
    pub exhaustive: bool,
}

/// `max |u(x) − u(y)| / |x − y|^γ` over node pairs. Exhaustive up to
/// [`EXHAUSTIVE_PAIR_LIMIT`] pairs; beyond that all pairs within `4h` plus a
/// seeded sample of long-range pairs (one stratum per first node).
pub fn holder_seminorm(grid: &Grid, u: &GridFunction, gamma: f64, seed: u64) -> Result<HolderSeminorm> {
    if !(gamma > 0.0 && gamma < 1.0) {
        return Err(Error::InvalidParameter(format!("Hölder exponent {gamma} outside (0, 1)")));
    }
    let n = grid.len();
    let coords: Vec<[f64; 2]> = (0..n).map(|i| grid.coord(i)).collect();
    let quotient = |i: usize, j: usize| {
        let d2 = (coords[i][0] - coords[j][0]).powi(2) + (coords[i][1] - coords[j][1]).powi(2);
        (u.0[i] - u.0[j]).abs() / d2.powf(0.5 * gamma)
    };
    let total = n * (n.saturating_sub(1)) / 2;
    let mut value: f64 = 0.0;
    if grid.dim() == 1 || total <= EXHAUSTIVE_PAIR_LIMIT {
        for i in 0..n {
            for j in i + 1..n {
                value = value.max(quotient(i, j));
            }
        }
        return Ok(HolderSeminorm {
            gamma,
            value,
            pairs: total,
            exhaustive: true,
        });
    }
    let reach = (4.0 * grid.h() / grid.hx).floor() as isize;
    let reach_y = (4.0 * grid.h() / grid.hy).floor() as isize;
    let cut = (4.0 * grid.h()).powi(2) * (1.0 + 1e-12);
    let mut pairs = 0usize;
    for i in 0..n {
        let (ix, iy) = ((i % grid.nx) as isize, (i / grid.nx) as isize);
        for dy in -reach_y..=reach_y {
            for dx in -reach..=reach {
                let (jx, jy) = (ix + dx, iy + dy);
                if jx < 0 || jy < 0 || jx >= grid.nx as isize || jy >= grid.ny as isize {
                    continue;
                }
                let j = grid.index(jx as usize, jy as usize);
                if j <= i {
                    continue;
                }
                let d2 = (coords[i][0] - coords[j][0]).powi(2) + (coords[i][1] - coords[j][1]).powi(2);
                if d2 <= cut {
                    value = value.max(quotient(i, j));
                    pairs += 1;
                }
            }
        }
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for t in 0..SAMPLED_PAIRS {
        let i = t % n;
        let j = rng.gen_range(0..n);
        if i != j {
            value = value.max(quotient(i, j));
            pairs += 1;
        }
    }
    Ok(HolderSeminorm {
        gamma,
        value,
        pairs,
        exhaustive: false,
    })
}

/// Largest `|u(x) − u(y)| − H|x − y|^γ` over all node pairs; non-positive
/// when `H` is a valid seminorm bound on the grid.
pub fn holder_excess(grid: &Grid, u: &GridFunction, gamma: f64, h: f64) -> f64 {
    let n = grid.len();
    let mut worst = f64::NEG_INFINITY;
    for i in 0..n {
        let a = grid.coord(i);
        for j in i + 1..n {
            let b = grid.coord(j);
            let d = (a[0] - b[0]).hypot(a[1] - b[1]);
            worst = worst.max((u.0[i] - u.0[j]).abs() - h * d.powf(gamma));
        }
    }
    worst
}

/// Parameters of the one-index iteration lemma:
/// `φ(h) ≤ C0 (h − k)^{−a} φ(k)^b` for `h > k ≥ k0`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct B1Params {
    pub c0: f64,
    pub a: f64,
    pub b: f64,
    pub phi0: f64,
}

/// Parameters of the two-index lemma:
/// `φ(h, ρ) ≤ C0 (h − k)^{−α} (r − ρ)^{−γ} φ(k, r)^μ`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct C7Params {
    pub c0: f64,
    pub alpha: f64,
    pub gamma: f64,
    pub mu: f64,
    pub phi0: f64,
    pub r0: f64,
}

fn positive(name: &str, v: f64) -> Result<()> {
    if v > 0.0 && v.is_finite() {
        Ok(())
    } else {
        Err(Error::InvalidParameter(format!("{name} must be positive, got {v}")))
    }
}

/// `d = (2^{ab/(b−1)} C0 φ(k0)^{b−1})^{1/a}`.
pub fn lemma_b1_threshold(p: &B1Params) -> Result<f64> {
    if !(p.b > 1.0) {
        return Err(Error::BadExponent(format!("b = {} must exceed 1", p.b)));
    }
    positive("C0", p.c0)?;
    positive("a", p.a)?;
    if !(p.phi0 >= 0.0) {
        return Err(Error::InvalidParameter(format!("φ(k0) = {} must be nonnegative", p.phi0)));
    }
    let log2_da = p.a * p.b / (p.b - 1.0) + p.c0.log2() + (p.b - 1.0) * p.phi0.log2();
    Ok(2f64.powf(log2_da / p.a))
}

/// `log2 φ(k_n)` for the largest `φ` allowed by the recurrence along
/// `k_n = k0 + d(1 − 2^{−n})`.
pub fn lemma_b1_sequence(p: &B1Params, d: f64, steps: usize) -> Vec<f64> {
    let mut out = Vec::with_capacity(steps + 1);
    let mut l = p.phi0.log2();
    out.push(l);
    for n in 0..steps {
        l = p.c0.log2() + (n + 1) as f64 * p.a - p.a * d.log2() + p.b * l;
        out.push(l);
    }
    out
}

/// `d^α = C0 2^{(α+γ)μ/(μ−1)} φ0^{μ−1} / (ℓ^{α+γ} r0^γ)`, returned with `ℓ`
/// (default 1/2).
pub fn lemma_c7_threshold(p: &C7Params, ell: Option<f64>) -> Result<(f64, f64)> {
    if !(p.mu > 1.0) {
        return Err(Error::BadExponent(format!("μ = {} must exceed 1", p.mu)));
    }
    let ell = ell.unwrap_or(0.5);
    if !(ell > 0.0 && ell < 1.0) {
        return Err(Error::InvalidParameter(format!("ℓ = {ell} must lie in (0, 1)")));
    }
    positive("C0", p.c0)?;
    positive("α", p.alpha)?;
    positive("γ", p.gamma)?;
    positive("r0", p.r0)?;
    if !(p.phi0 >= 0.0) {
        return Err(Error::InvalidParameter(format!("φ(k0, r0) = {} must be nonnegative", p.phi0)));
    }
    let ag = p.alpha + p.gamma;
    let log2_da = p.c0.log2() + ag * p.mu / (p.mu - 1.0) + (p.mu - 1.0) * p.phi0.log2() - ag * ell.log2() - p.gamma * p.r0.log2();
    Ok((2f64.powf(log2_da / p.alpha), ell))
}

/// `log2 φ(k_n, r_n)` for the largest `φ` allowed along
/// `k_n = k0 + ℓd(1 − 2^{−n})`, `r_n = r0(1 − ℓ(1 − 2^{−n}))`.
pub fn lemma_c7_sequence(p: &C7Params, d: f64, ell: f64, steps: usize) -> Vec<f64> {
    let mut out = Vec::with_capacity(steps + 1);
    let mut l = p.phi0.log2();
    out.push(l);
    let ag = p.alpha + p.gamma;
    for n in 0..steps {
        let step = (n + 1) as f64;
        l = p.c0.log2() + step * ag - p.alpha * (ell * d).log2() - p.gamma * (ell * p.r0).log2() + p.mu * l;
        out.push(l);
    }
    out
}

/// Whether a log2 sequence never increases (vanishing start counts).
pub fn sequence_vanishes(seq: &[f64]) -> bool {
    seq.windows(2).all(|w| w[0] == f64::NEG_INFINITY || w[1] <= w[0])
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RegularityReport {
    pub gamma: f64,
    pub tau_fit: Option<f64>,
    pub eta_bar_fit: Option<f64>,
    pub seminorm: f64,
    pub linfty_ratio: Option<f64>,
    pub levelset_table: Vec<LevelSetStats>,
}

/// Level-set table at `count` equally spaced thresholds strictly inside
/// the range of `u`.
pub fn levelset_table(grid: &Grid, u: &GridFunction, count: usize) -> Vec<LevelSetStats> {
    let (lo, hi) = u.0.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), v| (a.min(*v), b.max(*v)));
    if !(hi > lo) {
        return vec![level_set_measure(grid, u, lo)];
    }
    (1..=count)
        .map(|i| level_set_measure(grid, u, lo + (hi - lo) * i as f64 / (count + 1) as f64))
        .collect()
}
