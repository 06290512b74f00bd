//! Scalar exponential integrals used by the closed-form linear solution.
//!
//! All quantities are written through `ψ_n(z) = ∫₀¹ uⁿ e^{zu} du`, which is a
//! positive integral of a positive function and therefore free of the
//! cancellation that plagues the textbook `(e^{-aτ} − e^{-bτ})/(b − a)` forms
//! when `a ≈ b` or `aτ ≪ 1`.

/// `ψ_n(z) = ∫₀¹ uⁿ e^{zu} du`.
pub fn psi(n: u32, z: f64) -> f64 {
    if z.abs() <= 1.0 {
        // Σ_j z^j / (j! (n + j + 1))
        let mut term = 1.0;
        let mut sum = 1.0 / (n as f64 + 1.0);
        for j in 1..40 {
            term *= z / j as f64;
            let add = term / (n as f64 + j as f64 + 1.0);
            sum += add;
            if add.abs() <= 1e-17 * sum.abs() {
                break;
            }
        }
        sum
    } else {
        let ez = z.exp();
        let mut value = z.exp_m1() / z;
        for m in 1..=n {
            value = (ez - m as f64 * value) / z;
        }
        value
    }
}

/// `∫₀^τ e^{−c s} ds`.
pub fn decay_integral(c: f64, tau: f64) -> f64 {
    tau * psi(0, -c * tau)
}

/// `(e^{−aτ} − e^{−bτ})/(b − a)`, symmetric in `a` and `b`; equals
/// `τ e^{−aτ}` when `a = b`.
pub fn exp_divided_difference(a: f64, b: f64, tau: f64) -> f64 {
    let (lo, hi) = if a <= b { (a, b) } else { (b, a) };
    tau * (-lo * tau).exp() * psi(0, -(hi - lo) * tau)
}

/// `∫₀^τ (e^{−as} − e^{−bs})/(b − a) ds`.
pub fn exp_divided_difference_integral(a: f64, b: f64, tau: f64) -> f64 {
    let (lo, hi) = if a <= b { (a, b) } else { (b, a) };
    let gap = hi - lo;
    let scale = hi.abs().max(lo.abs()).max(1.0 / tau);
    if gap >= 1e-4 * scale {
        (decay_integral(lo, tau) - decay_integral(hi, tau)) / gap
    } else {
        // Taylor series in the gap about `lo`; successive terms shrink by gap/scale.
        let z = -lo * tau;
        let mut sum = 0.0;
        let mut factor = tau * tau;
        let mut fact = 1.0;
        for n in 1..=6u32 {
            fact *= n as f64;
            let sign = if n % 2 == 1 { 1.0 } else { -1.0 };
            sum += sign * factor * psi(n, z) / fact;
            factor *= tau * gap;
        }
        sum
    }
}
