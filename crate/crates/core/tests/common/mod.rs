//! Independent reference solutions shared by the integration tests.
#![allow(dead_code)]

/// `K_ν(t)` from `∫_0^∞ e^{−t cosh u} cosh(νu) du` by the trapezoid rule.
pub fn bessel_k_integral(nu: f64, t: f64) -> f64 {
    let h: f64 = 1e-3;
    let mut sum = 0.5 * (-t).exp();
    let mut u = h;
    loop {
        let term = (-t * u.cosh()).exp() * (nu * u).cosh();
        sum += term;
        if term < 1e-300 || (term < 1e-18 * sum && u > 1.0) {
            break;
        }
        u += h;
    }
    sum * h
}

/// `ψ_s(t) = 2^{1−s}/Γ(s) t^s K_s(t)` through the integral representation.
pub fn psi_integral(s: f64, t: f64) -> f64 {
    if t == 0.0 {
        return 1.0;
    }
    2f64.powf(1.0 - s) / libm::tgamma(s) * t.powf(s) * bessel_k_integral(s, t)
}

/// Large-argument expansion of `e^{t} √(2t/π) K_ν(t)`.
fn k_asymptotic_scaled(nu: f64, t: f64) -> f64 {
    let mu = 4.0 * nu * nu;
    let mut term = 1.0;
    let mut sum = 1.0;
    for k in 1..12 {
        let kk = (2 * k - 1) as f64;
        term *= (mu - kk * kk) / (k as f64 * 8.0 * t);
        sum += term;
    }
    sum
}

/// Decaying solution of `ψ'' + (1−2s)/t ψ' = ψ`, `ψ(0) = 1`, obtained by
/// integrating backwards from a large `t` in the variable `x = ln t` for
/// the pair `(ψ, w = t^{1−2s} ψ')`. Returns samples on `ts` (ascending).
pub struct PsiOde {
    xs: Vec<f64>,
    psi: Vec<f64>,
}

impl PsiOde {
    pub fn new(s: f64) -> Self {
        let t_far: f64 = 40.0;
        let t_near: f64 = 1e-5;
        let steps = 400_000;
        let x0 = t_far.ln();
        let x1 = t_near.ln();
        let dx = (x1 - x0) / steps as f64;
        // ψ ∝ t^s K_s(t), w ∝ −t^{1−s} K_{1−s}(t); the common factor
        // √(π/2t) e^{−t} is a constant here and drops out after normalizing
        let mut p = t_far.powf(s) * k_asymptotic_scaled(s, t_far);
        let mut w = -t_far.powf(1.0 - s) * k_asymptotic_scaled(1.0 - s, t_far);
        let rhs = |x: f64, p: f64, w: f64| {
            let t = x.exp();
            (t.powf(2.0 * s) * w, t.powf(2.0 - 2.0 * s) * p)
        };
        let mut xs = vec![x0];
        let mut ps = vec![p];
        let mut ws = vec![w];
        let mut x = x0;
        for _ in 0..steps {
            let (a1, b1) = rhs(x, p, w);
            let (a2, b2) = rhs(x + 0.5 * dx, p + 0.5 * dx * a1, w + 0.5 * dx * b1);
            let (a3, b3) = rhs(x + 0.5 * dx, p + 0.5 * dx * a2, w + 0.5 * dx * b2);
            let (a4, b4) = rhs(x + dx, p + dx * a3, w + dx * b3);
            p += dx / 6.0 * (a1 + 2.0 * a2 + 2.0 * a3 + a4);
            w += dx / 6.0 * (b1 + 2.0 * b2 + 2.0 * b3 + b4);
            x += dx;
            xs.push(x);
            ps.push(p);
            ws.push(w);
        }
        // near zero ψ ≈ A + B t^{2s} with w ≈ 2sB
        let t0 = x.exp();
        let a = p - w / (2.0 * s) * t0.powf(2.0 * s);
        PsiOde {
            xs: xs.into_iter().rev().collect(),
            psi: ps.into_iter().rev().map(|v| v / a).collect(),
        }
    }

    /// Linear interpolation in `ln t`; `ψ(0) = 1`, `ψ = 0` beyond the range.
    pub fn eval(&self, t: f64) -> f64 {
        if t <= self.xs[0].exp() {
            return 1.0;
        }
        let x = t.ln();
        let n = self.xs.len();
        if x >= self.xs[n - 1] {
            return 0.0;
        }
        let dx = self.xs[1] - self.xs[0];
        let k = (((x - self.xs[0]) / dx) as usize).min(n - 2);
        let th = (x - self.xs[k]) / dx;
        self.psi[k] * (1.0 - th) + self.psi[k + 1] * th
    }
}
