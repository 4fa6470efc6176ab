//! KL projections for finitely supported distributions.
//!
//! Both the KL-UCB inflation and the discrete `K_alpha` reduce to
//!
//! ```text
//! K_inf(p, m) = min { KL(p, q) : sum_x r_x q_x >= m, q a distribution on r }
//! ```
//!
//! which for `mean(p) < m < max r` has the one-dimensional dual
//! `max_{0 <= lambda <= 1/(r+ - m)} sum_x p_x log(1 - lambda (r_x - m))`.
//! The dual objective is concave, so its stationary point is found by
//! bisection on the derivative. The KL-UCB value is then the largest `m`
//! with `K_inf(p, m) <= radius`, again by bisection since `K_inf` is
//! increasing in `m`.

/// Stopping rule shared by every bisection in this module.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Bisection {
    /// Relative width of the final bracket.
    pub tol: f64,
    pub max_iter: u32,
}

impl Default for Bisection {
    fn default() -> Self {
        Bisection {
            tol: 1e-9,
            max_iter: 200,
        }
    }
}

fn mean(p: &[f64], r: &[f64]) -> f64 {
    p.iter().zip(r).map(|(p, r)| p * r).sum()
}

fn support_max(r: &[f64]) -> f64 {
    r.iter().copied().fold(f64::NEG_INFINITY, f64::max)
}

/// Maximiser `lambda` of the dual and whether it sits on the upper end
/// (in which case the primal minimiser puts extra mass on `max r`).
fn dual_lambda(p: &[f64], r: &[f64], m: f64, cfg: Bisection) -> (f64, bool) {
    let top = support_max(r);
    let upper = 1.0 / (top - m);
    let slope = |lambda: f64| -> f64 {
        p.iter()
            .zip(r)
            .filter(|(p, _)| **p > 0.0)
            .map(|(p, r)| -p * (r - m) / (1.0 - lambda * (r - m)))
            .sum()
    };
    let top_has_mass = p.iter().zip(r).any(|(p, r)| *p > 0.0 && *r == top);
    if !top_has_mass && slope(upper) >= 0.0 {
        return (upper, true);
    }
    let (mut lo, mut hi) = (0.0, upper);
    for _ in 0..cfg.max_iter {
        if hi - lo <= cfg.tol * upper {
            break;
        }
        let mid = 0.5 * (lo + hi);
        if slope(mid) > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    (0.5 * (lo + hi), false)
}

/// `K_inf(p, m)`; `+inf` when no distribution on `r` reaches mean `m`
/// while keeping mass wherever `p` has it.
pub fn kinf(p: &[f64], r: &[f64], m: f64, cfg: Bisection) -> f64 {
    if m <= mean(p, r) {
        return 0.0;
    }
    let top = support_max(r);
    if m >= top {
        return f64::INFINITY;
    }
    let (lambda, _) = dual_lambda(p, r, m, cfg);
    let value: f64 = p
        .iter()
        .zip(r)
        .filter(|(p, _)| **p > 0.0)
        .map(|(p, r)| p * (1.0 - lambda * (r - m)).ln())
        .sum();
    value.max(0.0)
}

/// The distribution attaining `K_inf(p, m)`, if `m` is reachable.
pub fn kinf_minimizer(p: &[f64], r: &[f64], m: f64, cfg: Bisection) -> Option<Vec<f64>> {
    if m <= mean(p, r) {
        return Some(p.to_vec());
    }
    let top = support_max(r);
    if m >= top {
        return None;
    }
    let (lambda, boundary) = dual_lambda(p, r, m, cfg);
    let mut q: Vec<f64> = p
        .iter()
        .zip(r)
        .map(|(p, r)| if *p > 0.0 { p / (1.0 - lambda * (r - m)) } else { 0.0 })
        .collect();
    let total: f64 = q.iter().sum();
    if boundary {
        let at = r.iter().position(|x| *x == top)?;
        q[at] += (1.0 - total).max(0.0);
    } else {
        q.iter_mut().for_each(|x| *x /= total);
    }
    Some(q)
}

/// KL-UCB value `max { r.q : KL(p, q) <= radius }`.
pub fn kl_ucb(p: &[f64], r: &[f64], radius: f64, cfg: Bisection) -> f64 {
    let base = mean(p, r);
    if radius <= 0.0 {
        return base;
    }
    let top = support_max(r);
    let (mut lo, mut hi) = (base, top);
    let width = top - base;
    for _ in 0..cfg.max_iter {
        if hi - lo <= cfg.tol * width {
            break;
        }
        let mid = 0.5 * (lo + hi);
        if kinf(p, r, mid, cfg) <= radius {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    lo
}
