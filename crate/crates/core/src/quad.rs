//! Adaptive quadrature.
//!
//! One integrator covers both production uses (the Hessian-integral scans in
//! [`crate::assumption`]) and the numerical oracles in the test suites. The
//! scheme is adaptive Simpson with Richardson extrapolation; the absolute
//! tolerance is split across subintervals so the stated budget bounds the
//! total error. For integrals of `exp(g)` with log-concave `g` over possibly
//! unbounded domains, [`log_integrate_exp`] locates a finite window around
//! the mode whose truncated tails are negligible, then integrates the
//! peak-normalized integrand.

/// Default absolute tolerance used by the scans and oracles.
pub const DEFAULT_TOL: f64 = 1e-9;

const MAX_DEPTH: u32 = 60;

/// ∫_a^b f(x) dx by adaptive Simpson with absolute tolerance `tol`.
pub fn integrate<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, tol: f64) -> f64 {
    if a == b {
        return 0.0;
    }
    let m = 0.5 * (a + b);
    let (fa, fm, fb) = (f(a), f(m), f(b));
    let whole = simpson(a, b, fa, fm, fb);
    adapt(&f, a, m, b, fa, fm, fb, whole, tol.abs(), MAX_DEPTH)
}

/// ∫_a^b f(x) dx with an initial mesh graded geometrically toward both
/// endpoints before adapting.
///
/// Plain adaptive Simpson can accept a wide panel whose five samples happen
/// to look smooth even though a sharp boundary layer hides inside it (e.g.
/// the Hessian quadratic form along a segment that grazes a domain
/// boundary). Seeding panels of width (b−a)/2, (b−a)/4, … down to
/// (b−a)·2⁻⁴⁰ at each end forces those layers to be sampled.
pub fn integrate_graded<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, tol: f64) -> f64 {
    const LEVELS: u32 = 40;
    if a == b {
        return 0.0;
    }
    let width = b - a;
    let mut knots = Vec::with_capacity(2 * LEVELS as usize + 1);
    knots.push(a);
    for k in (1..=LEVELS).rev() {
        knots.push(a + width * 0.5f64.powi(k as i32 + 1));
    }
    for k in 1..=LEVELS {
        knots.push(b - width * 0.5f64.powi(k as i32 + 1));
    }
    knots.push(b);
    let panel_tol = tol.abs() / knots.len() as f64;
    knots
        .windows(2)
        .map(|w| integrate(&f, w[0], w[1], panel_tol))
        .sum()
}

fn simpson(a: f64, b: f64, fa: f64, fm: f64, fb: f64) -> f64 {
    (b - a) / 6.0 * (fa + 4.0 * fm + fb)
}

#[allow(clippy::too_many_arguments)]
fn adapt<F: Fn(f64) -> f64>(
    f: &F,
    a: f64,
    m: f64,
    b: f64,
    fa: f64,
    fm: f64,
    fb: f64,
    whole: f64,
    tol: f64,
    depth: u32,
) -> f64 {
    let lm = 0.5 * (a + m);
    let rm = 0.5 * (m + b);
    let (flm, frm) = (f(lm), f(rm));
    let left = simpson(a, m, fa, flm, fm);
    let right = simpson(m, b, fm, frm, fb);
    let delta = left + right - whole;
    if depth == 0 || delta.abs() <= 15.0 * tol {
        left + right + delta / 15.0
    } else {
        adapt(f, a, lm, m, fa, flm, fm, left, 0.5 * tol, depth - 1)
            + adapt(f, m, rm, b, fm, frm, fb, right, 0.5 * tol, depth - 1)
    }
}

/// log ∫ exp(g(x)) dx for log-concave `g` peaking near `mode`.
///
/// `lower`/`upper` bound the domain (`None` = unbounded). The window is grown
/// from the mode until `g` has dropped `LOG_DROP` nats below its peak; by
/// concavity the discarded tails are bounded by `e^{-LOG_DROP}` times the
/// chord-slope scale, far below the quadrature tolerance for the integrands
/// used here.
pub fn log_integrate_exp<F: Fn(f64) -> f64>(
    g: F,
    mode: f64,
    lower: Option<f64>,
    upper: Option<f64>,
) -> f64 {
    const LOG_DROP: f64 = 60.0;
    let peak = g(mode);
    assert!(peak.is_finite(), "integrand mode must be finite");

    let cutoff = |x: f64| g(x) - peak < -LOG_DROP;

    // Expand geometrically away from the mode; bisect toward a finite domain
    // edge where the integrand vanishes (e.g. the η → 0⁻ boundary).
    let grow = |bound: Option<f64>, direction: f64| -> f64 {
        let mut step = 0.25;
        let mut x = mode;
        for _ in 0..200 {
            let mut cand = x + direction * step;
            if let Some(b) = bound {
                let inside = if direction > 0.0 { cand < b } else { cand > b };
                if !inside {
                    cand = 0.5 * (x + b);
                    // approaching the boundary: stop once the integrand is dead
                    if cutoff(cand) || (cand - b).abs() < 1e-300 {
                        return cand;
                    }
                    x = cand;
                    continue;
                }
            }
            if cutoff(cand) {
                return cand;
            }
            x = cand;
            step *= 2.0;
        }
        x
    };

    let left = grow(lower, -1.0);
    let right = grow(upper, 1.0);
    // integrate each side of the mode separately: with the peak at a panel
    // endpoint the adaptive subdivision cannot accept a wide all-tail panel
    // before it has seen the peak
    let tol = 1e-12 * (right - left).max(1.0);
    let val: f64 = [(left, mode), (mode, right)]
        .iter()
        .map(|&(a, b)| integrate(|x| (g(x) - peak).exp(), a, b, tol))
        .sum();
    peak + val.ln()
}
