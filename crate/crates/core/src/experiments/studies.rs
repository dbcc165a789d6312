use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::config::{FProfile, StudyConfig};
use crate::eigenbasis::{assemble, default_mode_count, eigen_residual, solve_eigen, EigenBasis, EigenMethod, StiffnessMass, DENSE_LIMIT};
use crate::error::{Error, Result};
use crate::extension::{
    assemble_weighted, build_cylinder, default_height, extend, fractional_flux, solve_extension, weighted_energy, CylinderField, WeightedEnergy,
    WeightedSystem,
};
use crate::geometry::{classify_boundary_nodes, discretize, BoundaryPartition, DomainSpec, Grid, GridFunction};
use crate::io::load_f_csv;
use crate::regularity::{
    fit_holder_exponent, holder_seminorm, lemma_b1_sequence, lemma_b1_threshold, lemma_c7_sequence, lemma_c7_threshold, levelset_table,
    oscillation_profile, oscillation_profile_cylinder, sequence_vanishes, verify_linfty_bound, B1Params, C7Params, HolderFit, OscillationProfile,
    RegularityReport,
};
use crate::spectral::{hs_norm, project, solve_spectral, trace_constant_cd, SpectralFunction, TraceConstant};

pub fn build_grid(domain: DomainSpec, part: &BoundaryPartition, n: usize) -> Result<Grid> {
    Ok(classify_boundary_nodes(&discretize(domain, n)?, part))
}

/// Evaluates the load on the grid. `mode:j` needs a basis with at least
/// `j` modes.
pub fn evaluate_f(profile: &FProfile, grid: &Grid, basis: Option<&EigenBasis>) -> Result<GridFunction> {
    Ok(match profile {
        FProfile::Constant { value } => GridFunction::from_fn(grid, |_| *value),
        FProfile::Mode { index } => {
            let basis = basis.ok_or_else(|| Error::InvalidParameter("mode profile needs an eigenbasis".into()))?;
            basis
                .modes
                .get(index - 1)
                .cloned()
                .ok_or_else(|| Error::InvalidParameter(format!("mode {index} not in a basis of {} modes", basis.len())))?
        }
        FProfile::Bump { center, width } => GridFunction::from_fn(grid, |x| {
            let d2 = (x[0] - center[0]).powi(2) + if grid.dim() == 2 { (x[1] - center[1]).powi(2) } else { 0.0 };
            (-d2 / (width * width)).exp()
        }),
        FProfile::Step { x0 } => GridFunction::from_fn(grid, |x| if x[0] < *x0 { 1.0 } else { 0.0 }),
        FProfile::Csv { path } => load_f_csv(std::path::Path::new(path), grid)?,
    })
}

fn mode_count(cfg: &StudyConfig, grid: &Grid, sm: &StiffnessMass) -> usize {
    cfg.modes.unwrap_or_else(|| default_mode_count(grid, sm)).min(sm.free_count())
}

/// All modes when the dense solver applies, the default count otherwise.
fn full_mode_count(cfg: &StudyConfig, grid: &Grid, sm: &StiffnessMass) -> usize {
    match cfg.modes {
        Some(m) => m.min(sm.free_count()),
        None if sm.free_count() <= DENSE_LIMIT => sm.free_count(),
        None => default_mode_count(grid, sm),
    }
}

fn needs_basis(profile: &FProfile) -> bool {
    matches!(profile, FProfile::Mode { .. })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EigReport {
    pub n: usize,
    pub free_nodes: usize,
    pub method: EigenMethod,
    pub eigenvalues: Vec<f64>,
    pub max_residual: f64,
    pub orthonormality_defect: f64,
    pub passed: bool,
}

pub fn run_eig(cfg: &StudyConfig) -> Result<(EigReport, Grid, EigenBasis)> {
    let grid = build_grid(cfg.domain, &cfg.partition, cfg.n)?;
    let sm = assemble(&grid)?;
    let basis = solve_eigen(&sm, mode_count(cfg, &grid, &sm))?;
    let max_residual = eigen_residual(&sm, &basis);
    let orthonormality_defect = basis.orthonormality_defect();
    let report = EigReport {
        n: cfg.n,
        free_nodes: sm.free_count(),
        method: basis.method,
        eigenvalues: basis.eigenvalues.clone(),
        max_residual,
        orthonormality_defect,
        passed: max_residual <= 1e-8 && orthonormality_defect <= 1e-8,
    };
    Ok((report, grid, basis))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpectralReport {
    pub modes: usize,
    pub linf: f64,
    /// `‖u_{J/2} − u_J‖_∞ / ‖u_J‖_∞`
    pub truncation_gap: f64,
    pub trace_constant: Option<TraceConstant>,
    pub regularity: RegularityReport,
}

fn regularity_report(cfg: &StudyConfig, grid: &Grid, u: &GridFunction, f: &GridFunction, fit: Option<&HolderFit>) -> Result<RegularityReport> {
    Ok(RegularityReport {
        gamma: cfg.gamma,
        tau_fit: fit.map(|f| f.tau),
        eta_bar_fit: fit.map(|f| f.eta_bar),
        seminorm: holder_seminorm(grid, u, cfg.gamma, cfg.seed)?.value,
        linfty_ratio: Some(verify_linfty_bound(grid, u, f, cfg.s, cfg.p)?),
        levelset_table: levelset_table(grid, u, 8),
    })
}

/// Interface point farthest from the corners, or `None` without an interface.
pub fn interface_center(part: &BoundaryPartition) -> Option<[f64; 2]> {
    let DomainSpec::Rectangle { lx, ly } = part.domain else {
        return None;
    };
    let corners = [[0.0, 0.0], [lx, 0.0], [lx, ly], [0.0, ly]];
    let corner_dist = |p: &[f64; 2]| corners.iter().map(|c| (p[0] - c[0]).hypot(p[1] - c[1])).fold(f64::INFINITY, f64::min);
    part.interface_points()
        .into_iter()
        .max_by(|a, b| corner_dist(a).total_cmp(&corner_dist(b)))
}

pub fn run_solve_spectral(cfg: &StudyConfig) -> Result<(SpectralReport, Grid, GridFunction)> {
    let grid = build_grid(cfg.domain, &cfg.partition, cfg.n)?;
    let sm = assemble(&grid)?;
    let modes = mode_count(cfg, &grid, &sm);
    let basis = solve_eigen(&sm, modes)?;
    let f = evaluate_f(&cfg.f, &grid, Some(&basis))?;
    let u = solve_spectral(&f, &basis, cfg.s)?;
    let half = solve_spectral(&f, &basis.truncated((modes / 2).max(1)), cfg.s)?;
    let truncation_gap = if u.max_abs() == 0.0 { 0.0 } else { half.sup_relative_gap(&u) };
    let trace_constant = match trace_constant_cd(&grid, &basis, cfg.s, cfg.seed) {
        Ok(t) => Some(t),
        Err(Error::SubcriticalDimension { .. }) => None,
        Err(e) => return Err(e),
    };
    let fit = match interface_center(&cfg.partition) {
        Some(z) => {
            let radii: Vec<f64> = (0..cfg.radius_count).map(|i| cfg.radius.unwrap_or(8.0 * grid.h()) * 0.5f64.powi(i as i32)).collect();
            oscillation_profile(&grid, &u, z, &radii).ok().and_then(|p| fit_holder_exponent(&p).ok())
        }
        None => None,
    };
    let regularity = regularity_report(cfg, &grid, &u, &f, fit.as_ref())?;
    Ok((
        SpectralReport {
            modes,
            linf: u.max_abs(),
            truncation_gap,
            trace_constant,
            regularity,
        },
        grid,
        u,
    ))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExtensionReport {
    pub levels: usize,
    pub height: f64,
    pub grading: f64,
    pub iterations: usize,
    pub relative_residual: f64,
    pub energy: WeightedEnergy,
    pub trace_linf: f64,
}

fn cylinder_system(cfg: &StudyConfig, grid: &Grid, lambda1: f64, height_scale: f64, level_scale: usize) -> Result<WeightedSystem> {
    let height = cfg.cyl_height.unwrap_or_else(|| default_height(lambda1)) * height_scale;
    let cyl = build_cylinder(grid, height, cfg.cyl_levels * level_scale, cfg.cyl_grading)?;
    assemble_weighted(&cyl, cfg.s)
}

fn first_pair(sm: &StiffnessMass) -> Result<EigenBasis> {
    solve_eigen(sm, 1)
}

pub fn run_solve_extension(cfg: &StudyConfig) -> Result<(ExtensionReport, WeightedSystem, CylinderField)> {
    let grid = build_grid(cfg.domain, &cfg.partition, cfg.n)?;
    let sm = assemble(&grid)?;
    let basis = if needs_basis(&cfg.f) {
        solve_eigen(&sm, mode_count(cfg, &grid, &sm))?
    } else {
        first_pair(&sm)?
    };
    let f = evaluate_f(&cfg.f, &grid, Some(&basis))?;
    let sys = cylinder_system(cfg, &grid, basis.eigenvalues[0], 1.0, 1)?;
    let sol = solve_extension(&sys, &f)?;
    let report = ExtensionReport {
        levels: sys.m(),
        height: sys.cyl.height(),
        grading: sys.cyl.grading,
        iterations: sol.stats.iterations,
        relative_residual: sol.stats.relative_residual,
        energy: weighted_energy(&sol.field, &sys),
        trace_linf: sol.field.trace().max_abs(),
    };
    Ok((report, sys, sol.field))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EquivalenceLevel {
    pub n: usize,
    pub levels: usize,
    pub height: f64,
    pub modes: usize,
    pub trace_gap: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EquivalenceReport {
    pub trace_gap: f64,
    /// Energy of the extension against `‖u‖²_{H^s}` on the first five modes of the solution.
    pub isometry_gap: f64,
    /// Flux of the extended spectral solution against the projected load.
    pub flux_gap: f64,
    pub refinement_ratio: Option<f64>,
    pub levels: Vec<EquivalenceLevel>,
    pub passed: bool,
}

fn relative(num: f64, den: f64) -> f64 {
    if num == 0.0 {
        0.0
    } else {
        num / den
    }
}

struct LevelOutcome {
    level: EquivalenceLevel,
    isometry_gap: f64,
    flux_gap: f64,
}

fn equivalence_level(cfg: &StudyConfig, n: usize, scale: usize) -> Result<LevelOutcome> {
    let grid = build_grid(cfg.domain, &cfg.partition, n)?;
    let sm = assemble(&grid)?;
    let modes = full_mode_count(cfg, &grid, &sm);
    let basis = solve_eigen(&sm, modes)?;
    let f = evaluate_f(&cfg.f, &grid, Some(&basis))?;
    let u = solve_spectral(&f, &basis, cfg.s)?;
    let sys = cylinder_system(cfg, &grid, basis.eigenvalues[0], scale as f64, scale)?;
    let trace = solve_extension(&sys, &f)?.field.trace();
    let trace_gap = relative(
        trace.0.iter().zip(&u.0).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max),
        u.max_abs(),
    );

    let coeffs = project(&u, &basis)?;
    let mut low = SpectralFunction::zeros(&basis);
    let keep = basis.len().min(5);
    low.coeffs[..keep].copy_from_slice(&coeffs.coeffs[..keep]);
    let u5 = low.synthesize();
    let target = hs_norm(&low, cfg.s).powi(2);
    let energy = weighted_energy(&extend(&u5, &sys)?.field, &sys).scaled;
    let isometry_gap = relative((energy - target).abs(), target);

    let flux = fractional_flux(&extend(&u, &sys)?.field, &sys);
    let pf = project(&f, &basis)?.synthesize();
    let mut worst: f64 = 0.0;
    for &i in &sys.base.free {
        worst = worst.max((flux.0[i] - pf.0[i]).abs());
    }
    let flux_gap = relative(worst, pf.max_abs());
    Ok(LevelOutcome {
        level: EquivalenceLevel {
            n,
            levels: sys.m(),
            height: sys.cyl.height(),
            modes,
            trace_gap,
        },
        isometry_gap,
        flux_gap,
    })
}

/// Spectral and extension routes on the same load. The refined level halves
/// `h` and doubles both the number of `y`-cells and the height.
pub fn run_equivalence(cfg: &StudyConfig) -> Result<EquivalenceReport> {
    let coarse = equivalence_level(cfg, cfg.n, 1)?;
    let mut levels = vec![coarse.level.clone()];
    let mut refinement_ratio = None;
    if cfg.refine {
        let fine = equivalence_level(cfg, 2 * (cfg.n - 1) + 1, 2)?;
        if coarse.level.trace_gap > 0.0 {
            refinement_ratio = Some(fine.level.trace_gap / coarse.level.trace_gap);
        }
        levels.push(fine.level);
    }
    let trace_gap = coarse.level.trace_gap;
    let passed = trace_gap <= 0.02 && coarse.isometry_gap <= 0.02 && refinement_ratio.is_none_or(|r| r <= 0.6);
    Ok(EquivalenceReport {
        trace_gap,
        isometry_gap: coarse.isometry_gap,
        flux_gap: coarse.flux_gap,
        refinement_ratio,
        levels,
        passed,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub alpha: f64,
    pub lambda1: f64,
    pub cd_upper: f64,
    pub linf: f64,
    pub holder_h: f64,
    pub tau_fit: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepReport {
    pub rows: Vec<SweepRow>,
    pub lambda_monotone: bool,
    /// `CD_upper(α_min) / CD_upper(α_max)`
    pub cd_ratio: f64,
    pub cd_halved: bool,
    pub holder_endpoints: bool,
    /// Spearman correlation of `H` against `α`.
    pub holder_spearman: f64,
    pub passed: bool,
}

fn sweep_row(cfg: &StudyConfig, alpha: f64) -> Result<SweepRow> {
    let fam = cfg
        .family
        .as_ref()
        .ok_or_else(|| Error::InvalidParameter("α-sweeps need a rectangle domain".into()))?
        .build(cfg.domain)?;
    let part = fam.partition_at(alpha)?;
    let grid = build_grid(cfg.domain, &part, cfg.n)?;
    let sm = assemble(&grid)?;
    let basis = solve_eigen(&sm, mode_count(cfg, &grid, &sm))?;
    let lambda1 = basis.eigenvalues[0];
    let n = grid.dim() as f64;
    let cd_upper = cfg.domain.volume().powf(2.0 * cfg.s / n) * lambda1.powf(cfg.s);
    let f = evaluate_f(&cfg.f, &grid, Some(&basis))?;
    let u = solve_spectral(&f, &basis, cfg.s)?;
    let holder_h = holder_seminorm(&grid, &u, cfg.gamma, cfg.seed)?.value;
    // dyadic radii from 8h at the interface point farthest from the corners
    let tau_fit = interface_center(&part).and_then(|z| {
        let r0 = cfg.radius.unwrap_or(8.0 * grid.h());
        let radii: Vec<f64> = (0..4).map(|i| r0 * 0.5f64.powi(i)).collect();
        oscillation_profile(&grid, &u, z, &radii).ok().and_then(|p| fit_holder_exponent(&p).ok()).map(|f| f.tau)
    });
    Ok(SweepRow {
        alpha,
        lambda1,
        cd_upper,
        linf: u.max_abs(),
        holder_h,
        tau_fit,
    })
}

fn ranks(v: &[f64]) -> Vec<f64> {
    let mut idx: Vec<usize> = (0..v.len()).collect();
    idx.sort_by(|&a, &b| v[a].total_cmp(&v[b]));
    let mut r = vec![0.0; v.len()];
    let mut i = 0;
    while i < idx.len() {
        let mut j = i;
        while j + 1 < idx.len() && v[idx[j + 1]] == v[idx[i]] {
            j += 1;
        }
        let avg = 0.5 * (i + j) as f64 + 1.0;
        for k in i..=j {
            r[idx[k]] = avg;
        }
        i = j + 1;
    }
    r
}

pub fn spearman(x: &[f64], y: &[f64]) -> f64 {
    let (rx, ry) = (ranks(x), ranks(y));
    let n = x.len() as f64;
    let (mx, my) = (rx.iter().sum::<f64>() / n, ry.iter().sum::<f64>() / n);
    let cov: f64 = rx.iter().zip(&ry).map(|(a, b)| (a - mx) * (b - my)).sum();
    let vx: f64 = rx.iter().map(|a| (a - mx).powi(2)).sum();
    let vy: f64 = ry.iter().map(|b| (b - my).powi(2)).sum();
    if vx == 0.0 || vy == 0.0 {
        0.0
    } else {
        cov / (vx * vy).sqrt()
    }
}

/// One row per α, computed on separate threads and gathered in α order.
pub fn run_alpha_sweep(cfg: &StudyConfig) -> Result<SweepReport> {
    if cfg.family.is_none() {
        return Err(Error::InvalidParameter("α-sweeps need a rectangle domain".into()));
    }
    if cfg.alphas.len() < 2 {
        return Err(Error::InvalidParameter("α-sweeps need at least two α values".into()));
    }
    let rows: Vec<Result<SweepRow>> = std::thread::scope(|scope| {
        let handles: Vec<_> = cfg.alphas.iter().map(|&a| scope.spawn(move || sweep_row(cfg, a))).collect();
        handles.into_iter().map(|h| h.join().expect("sweep worker panicked")).collect()
    });
    let rows = rows.into_iter().collect::<Result<Vec<_>>>()?;
    let lambda_monotone = rows.windows(2).all(|w| w[1].lambda1 >= w[0].lambda1 * (1.0 - 1e-12));
    let (first, last) = (&rows[0], &rows[rows.len() - 1]);
    let cd_ratio = first.cd_upper / last.cd_upper;
    let cd_halved = cd_ratio <= 0.5;
    let holder_endpoints = first.holder_h >= last.holder_h;
    let alphas: Vec<f64> = rows.iter().map(|r| r.alpha).collect();
    let hs: Vec<f64> = rows.iter().map(|r| r.holder_h).collect();
    let holder_spearman = spearman(&alphas, &hs);
    Ok(SweepReport {
        passed: lambda_monotone && cd_halved && holder_endpoints,
        rows,
        lambda_monotone,
        cd_ratio,
        cd_halved,
        holder_endpoints,
        holder_spearman,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InterfaceReport {
    /// `false` when the partition has no interface and the profile is
    /// taken at the bottom-edge midpoint.
    pub at_interface: bool,
    pub profile: OscillationProfile,
    pub fit: HolderFit,
    pub regularity: RegularityReport,
    pub passed: bool,
}

/// Default largest radius of the interface profile, in grid spacings.
pub const INTERFACE_RADIUS_CELLS: f64 = 64.0;

/// Oscillation of the extension solution on `𝒞̄ ∩ B_ρ(Z)` at the interface
/// point, over `ρ_i = R·factor^{−i}`.
pub fn run_interface_profile(cfg: &StudyConfig) -> Result<InterfaceReport> {
    let DomainSpec::Rectangle { lx, .. } = cfg.domain else {
        return Err(Error::InvalidParameter("interface profiles need a rectangle domain".into()));
    };
    let grid = build_grid(cfg.domain, &cfg.partition, cfg.n)?;
    let sm = assemble(&grid)?;
    let basis = if needs_basis(&cfg.f) {
        solve_eigen(&sm, mode_count(cfg, &grid, &sm))?
    } else {
        first_pair(&sm)?
    };
    let f = evaluate_f(&cfg.f, &grid, Some(&basis))?;
    let sys = cylinder_system(cfg, &grid, basis.eigenvalues[0], 1.0, 1)?;
    let field = solve_extension(&sys, &f)?.field;
    let (center, at_interface) = match interface_center(&cfg.partition) {
        Some(z) => (z, true),
        None => ([0.5 * lx, 0.0], false),
    };
    let r0 = cfg.radius.unwrap_or(INTERFACE_RADIUS_CELLS * grid.h());
    let radii: Vec<f64> = (0..cfg.radius_count).map(|i| r0 * cfg.radius_factor.powi(-(i as i32))).collect();
    let profile = oscillation_profile_cylinder(&sys.cyl, &field, [center[0], center[1], 0.0], &radii)?;
    let fit = fit_holder_exponent(&profile)?;
    let u = field.trace();
    let regularity = regularity_report(cfg, &grid, &u, &f, Some(&fit))?;
    let passed = !at_interface || (fit.tau > 0.0 && fit.tau <= 0.6 && fit.eta_bar < 1.0);
    Ok(InterfaceReport {
        at_interface,
        profile,
        fit,
        regularity,
        passed,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LemmaCase {
    pub params: Vec<f64>,
    pub closed_form: f64,
    pub brute_force: f64,
    pub relative_gap: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LemmaReport {
    pub b1: Vec<LemmaCase>,
    pub c7: Vec<LemmaCase>,
    pub max_gap: f64,
    pub passed: bool,
}

const LEMMA_STEPS: usize = 200;

/// Smallest `d` for which `feasible(d)` holds, by bracketing and bisection
/// in `log d`.
pub fn bisect_threshold(feasible: impl Fn(f64) -> bool) -> f64 {
    let (mut lo, mut hi) = (0.0f64, 0.0f64);
    if feasible(1.0) {
        while feasible(lo.exp2()) {
            hi = lo;
            lo -= 1.0;
            if lo < -1000.0 {
                return 0.0;
            }
        }
    } else {
        while !feasible(hi.exp2()) {
            lo = hi;
            hi += 1.0;
            if hi > 1000.0 {
                return f64::INFINITY;
            }
        }
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if feasible(mid.exp2()) {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    hi.exp2()
}

fn log_uniform(rng: &mut ChaCha8Rng, lo: f64, hi: f64) -> f64 {
    (lo.ln() + rng.gen::<f64>() * (hi.ln() - lo.ln())).exp()
}

pub fn b1_tuples(seed: u64, count: usize) -> Vec<B1Params> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..count)
        .map(|_| B1Params {
            c0: log_uniform(&mut rng, 0.1, 10.0),
            a: rng.gen_range(0.5..4.0),
            b: rng.gen_range(1.3..3.0),
            phi0: log_uniform(&mut rng, 0.01, 10.0),
        })
        .collect()
}

pub fn c7_tuples(seed: u64, count: usize) -> Vec<C7Params> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0xC7);
    (0..count)
        .map(|_| C7Params {
            c0: log_uniform(&mut rng, 0.1, 10.0),
            alpha: rng.gen_range(0.5..3.0),
            gamma: rng.gen_range(0.5..3.0),
            mu: rng.gen_range(1.3..3.0),
            phi0: log_uniform(&mut rng, 0.01, 10.0),
            r0: log_uniform(&mut rng, 0.2, 5.0),
        })
        .collect()
}

/// Closed-form thresholds against bisection on the maximal recurrences.
pub fn run_lemma_check(cfg: &StudyConfig) -> Result<LemmaReport> {
    let mut b1 = Vec::new();
    for p in b1_tuples(cfg.seed, cfg.lemma_tuples) {
        let closed = lemma_b1_threshold(&p)?;
        let brute = bisect_threshold(|d| sequence_vanishes(&lemma_b1_sequence(&p, d, LEMMA_STEPS)));
        b1.push(LemmaCase {
            params: vec![p.c0, p.a, p.b, p.phi0],
            closed_form: closed,
            brute_force: brute,
            relative_gap: (closed - brute).abs() / closed,
        });
    }
    let mut c7 = Vec::new();
    for p in c7_tuples(cfg.seed, cfg.lemma_tuples) {
        let (closed, ell) = lemma_c7_threshold(&p, None)?;
        let brute = bisect_threshold(|d| sequence_vanishes(&lemma_c7_sequence(&p, d, ell, LEMMA_STEPS)));
        c7.push(LemmaCase {
            params: vec![p.c0, p.alpha, p.gamma, p.mu, p.phi0, p.r0],
            closed_form: closed,
            brute_force: brute,
            relative_gap: (closed - brute).abs() / closed,
        });
    }
    let max_gap = b1.iter().chain(&c7).map(|c| c.relative_gap).fold(0.0, f64::max);
    Ok(LemmaReport {
        b1,
        c7,
        max_gap,
        passed: max_gap <= 1e-10,
    })
}
