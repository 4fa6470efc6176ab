//! Test-only oracles and instance generators, written independently of the
//! library's LP code.
#![allow(dead_code)]

use cmab_core::lp::ProblemInstance;
use cmab_core::Rational;
use num_bigint::BigInt;
use num_traits::{One, Signed, Zero};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn q(n: i64, d: i64) -> Rational {
    Rational::new(BigInt::from(n), BigInt::from(d))
}

/// Random rational `p/d` with `d <= 8` and `p/d` in `[lo, hi)`.
fn rational_in(rng: &mut ChaCha8Rng, lo: i64, hi: i64) -> Rational {
    let d = rng.random_range(1..=8);
    let p = rng.random_range(lo * d..hi * d);
    q(p, d)
}

/// Random instance satisfying the labelling and cost invariants:
/// `k <= 6`, `L <= 3`, denominators at most 8, positive means.
pub fn random_instance(seed: u64) -> ProblemInstance {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    loop {
        let k = rng.random_range(2..=6);
        let l = rng.random_range(1..=3.min(k - 1));
        let rates: Vec<Rational> = (0..l).map(|_| rational_in(&mut rng, 1, 4)).collect();
        let mut costs = Vec::new();
        for i in 0..k {
            let row: Vec<Rational> = (0..l)
                .map(|j| {
                    if i == 0 {
                        // strictly below the rate
                        loop {
                            let c = rational_in(&mut rng, 0, 4);
                            if c < rates[j] {
                                return c;
                            }
                        }
                    }
                    loop {
                        let c = rational_in(&mut rng, 0, 6);
                        if c != rates[j] {
                            return c;
                        }
                    }
                })
                .collect();
            costs.push(row);
        }
        let means = (0..k).map(|_| rational_in(&mut rng, 0, 4)).map(|m| m + q(1, 8)).collect();
        if let Ok(inst) = ProblemInstance::new(costs, rates, means) {
            return inst;
        }
    }
}

fn det(m: &[Vec<Rational>]) -> Rational {
    let n = m.len();
    if n == 1 {
        return m[0][0].clone();
    }
    let mut total = Rational::zero();
    for c in 0..n {
        if m[0][c].is_zero() {
            continue;
        }
        let minor: Vec<Vec<Rational>> = m[1..]
            .iter()
            .map(|row| row.iter().enumerate().filter(|(j, _)| *j != c).map(|(_, v)| v.clone()).collect())
            .collect();
        let term = &m[0][c] * det(&minor);
        if c % 2 == 0 {
            total += term;
        } else {
            total -= term;
        }
    }
    total
}

/// Column `v` of the equality system: bandits first, then slacks.
fn column(inst: &ProblemInstance, v: usize) -> Vec<Rational> {
    let k = inst.bandits();
    let l = inst.resources();
    (0..=l)
        .map(|r| {
            if v < k {
                if r < l {
                    inst.cost(v, r).clone()
                } else {
                    Rational::one()
                }
            } else if r == v - k {
                Rational::one()
            } else {
                Rational::zero()
            }
        })
        .collect()
}

#[derive(Clone, Debug)]
pub struct OracleVertex {
    /// Sorted bandit ids and slack ids.
    pub bandits: Vec<usize>,
    pub slacks: Vec<usize>,
    pub x: Vec<Rational>,
    pub z: Rational,
}

/// Every basic feasible solution, by Cramer's rule on each of the
/// `C(k+L, L+1)` column subsets.
pub fn enumerate_vertices(inst: &ProblemInstance) -> Vec<OracleVertex> {
    let k = inst.bandits();
    let l = inst.resources();
    let n = k + l;
    let mut rhs: Vec<Rational> = inst.rates().to_vec();
    rhs.push(Rational::one());
    let mut out = Vec::new();
    for mask in 0u32..(1 << n) {
        if mask.count_ones() as usize != l + 1 {
            continue;
        }
        let vars: Vec<usize> = (0..n).filter(|v| mask >> v & 1 == 1).collect();
        if !vars.iter().any(|&v| v < k) {
            continue;
        }
        let cols: Vec<Vec<Rational>> = vars.iter().map(|&v| column(inst, v)).collect();
        let a: Vec<Vec<Rational>> = (0..=l).map(|r| cols.iter().map(|c| c[r].clone()).collect()).collect();
        let d = det(&a);
        if d.is_zero() {
            continue;
        }
        let values: Vec<Rational> = (0..=l)
            .map(|c| {
                let mut ac = a.clone();
                for r in 0..=l {
                    ac[r][c] = rhs[r].clone();
                }
                det(&ac) / &d
            })
            .collect();
        if values.iter().any(Signed::is_negative) {
            continue;
        }
        let mut x = vec![Rational::zero(); k];
        for (p, &v) in vars.iter().enumerate() {
            if v < k {
                x[v] = values[p].clone();
            }
        }
        let z = x.iter().zip(inst.means()).map(|(x, m)| x * m).sum();
        out.push(OracleVertex {
            bandits: vars.iter().copied().filter(|&v| v < k).collect(),
            slacks: vars.iter().filter(|&&v| v >= k).map(|v| v - k).collect(),
            x,
            z,
        });
    }
    out
}

/// `z*` and the optimal vertices.
pub fn oracle_optimum(inst: &ProblemInstance) -> (Rational, Vec<OracleVertex>) {
    let all = enumerate_vertices(inst);
    let z = all.iter().map(|v| v.z.clone()).max().expect("feasible");
    let opt = all.into_iter().filter(|v| v.z == z).collect();
    (z, opt)
}

/// Dual vector `g` solving `g B = mu_B` by Cramer's rule on `B^T`.
pub fn oracle_dual(inst: &ProblemInstance, bandits: &[usize], slacks: &[usize]) -> Vec<Rational> {
    let k = inst.bandits();
    let l = inst.resources();
    let vars: Vec<usize> = bandits.iter().copied().chain(slacks.iter().map(|s| s + k)).collect();
    let cols: Vec<Vec<Rational>> = vars.iter().map(|&v| column(inst, v)).collect();
    // Row p of B^T is column p of B.
    let bt = cols.clone();
    let rhs: Vec<Rational> = vars
        .iter()
        .map(|&v| if v < k { inst.mean(v).clone() } else { Rational::zero() })
        .collect();
    let d = det(&bt);
    (0..=l)
        .map(|c| {
            let mut m = bt.clone();
            for r in 0..=l {
                m[r][c] = rhs[r].clone();
            }
            det(&m) / &d
        })
        .collect()
}

/// Every permutation of a small multiset of activations.
pub fn permutations(counts: &[u64]) -> Vec<Vec<usize>> {
    fn rec(rem: &mut Vec<u64>, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if rem.iter().all(|c| *c == 0) {
            out.push(cur.clone());
            return;
        }
        for a in 0..rem.len() {
            if rem[a] > 0 {
                rem[a] -= 1;
                cur.push(a);
                rec(rem, cur, out);
                cur.pop();
                rem[a] += 1;
            }
        }
    }
    let mut out = Vec::new();
    rec(&mut counts.to_vec(), &mut Vec::new(), &mut out);
    out
}

/// Instance B as a JSON instance file.
pub const INSTANCE_B: &str = r#"{
  "k": 3, "L": 1,
  "costs": [["0"], ["2"], ["2"]],
  "rates": ["1"],
  "family": {"name": "normal-known-var", "sigma": [1, 1, 1]},
  "truth": {"means": ["1", "2", "1.5"]}
}"#;

pub const INSTANCE_A: &str = r#"{
  "k": 2, "L": 1,
  "costs": [["0"], ["2"]],
  "rates": ["1"],
  "family": {"name": "normal-known-var", "sigma": [1, 1]},
  "truth": {"means": ["1", "2"]}
}"#;

fn kl_terms(p: &[f64], q: &[f64]) -> f64 {
    p.iter()
        .zip(q)
        .filter(|(p, _)| **p > 0.0)
        .map(|(p, q)| if *q <= 0.0 { f64::INFINITY } else { p * (p / q).ln() })
        .sum()
}

/// Minimises a unimodal `f` on `[lo, hi]` by repeated grid zooming.
fn zoom_min(f: impl Fn(f64) -> f64, mut lo: f64, mut hi: f64) -> f64 {
    const N: usize = 400;
    let mut best = f64::INFINITY;
    let mut arg = lo;
    for _ in 0..8 {
        let step = (hi - lo) / N as f64;
        for i in 0..=N {
            let t = lo + step * i as f64;
            let v = f(t);
            if v < best {
                best = v;
                arg = t;
            }
        }
        lo = (arg - 2.0 * step).max(lo);
        hi = (arg + 2.0 * step).min(hi);
    }
    best
}

/// Grid oracle for `min KL(p, q)` over distributions `q` on the distinct
/// support `r` (two or three points) with `r.q = m`.
pub fn kinf_grid(p: &[f64], r: &[f64], m: f64) -> f64 {
    let mean: f64 = p.iter().zip(r).map(|(p, r)| p * r).sum();
    if m <= mean {
        return 0.0;
    }
    match r.len() {
        2 => {
            let t = (m - r[0]) / (r[1] - r[0]);
            if !(0.0..=1.0).contains(&t) {
                return f64::INFINITY;
            }
            kl_terms(p, &[1.0 - t, t])
        }
        3 => {
            // q0 = t, q2 = a2 + b2 t, q1 = 1 - t - q2.
            let a2 = (m - r[1]) / (r[2] - r[1]);
            let b2 = (r[1] - r[0]) / (r[2] - r[1]);
            let q = |t: f64| {
                let q2 = a2 + b2 * t;
                [t, 1.0 - t - q2, q2]
            };
            let (mut lo, mut hi) = (0.0f64, 1.0f64);
            // Each q_i is linear in t; intersect the intervals where it is >= 0.
            for (a, b) in [(0.0, 1.0), (1.0 - a2, -1.0 - b2), (a2, b2)] {
                if b > 0.0 {
                    lo = lo.max(-a / b);
                } else if b < 0.0 {
                    hi = hi.min(-a / b);
                } else if a < 0.0 {
                    return f64::INFINITY;
                }
            }
            if lo > hi {
                return f64::INFINITY;
            }
            zoom_min(|t| kl_terms(p, &q(t)), lo, hi)
        }
        _ => unimplemented!("grid oracle covers two or three support points"),
    }
}

/// Grid oracle for `max { r.q : KL(p, q) <= radius }`, scanning the mean
/// upwards and zooming into the last admissible cell.
pub fn kl_ucb_grid(p: &[f64], r: &[f64], radius: f64) -> f64 {
    const N: usize = 200;
    let mut lo: f64 = p.iter().zip(r).map(|(p, r)| p * r).sum();
    let mut hi = r.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    for _ in 0..6 {
        let step = (hi - lo) / N as f64;
        let mut last = 0;
        for i in 1..=N {
            if kinf_grid(p, r, lo + step * i as f64) <= radius {
                last = i;
            } else {
                break;
            }
        }
        let next_lo = lo + step * last as f64;
        hi = (next_lo + step).min(hi);
        lo = next_lo;
    }
    lo
}

fn json_num(r: &Rational) -> String {
    format!("\"{}\"", cmab_core::rational::display(r))
}

/// Reward families used to turn an LP instance into a bandit problem.
#[derive(Clone, Copy, Debug)]
pub enum Kind {
    KnownVar,
    UnknownVar,
    Discrete,
}

/// Instance JSON for `inst` under `kind`. Discrete bandits get the support
/// `{0, mu, 2 mu}` with probabilities `1/4, 1/2, 1/4`, so the mean is kept.
pub fn instance_json(inst: &ProblemInstance, kind: Kind) -> String {
    let k = inst.bandits();
    let costs: Vec<String> = (0..k)
        .map(|a| format!("[{}]", inst.costs()[a].iter().map(json_num).collect::<Vec<_>>().join(",")))
        .collect();
    let rates: Vec<String> = inst.rates().iter().map(json_num).collect();
    let means: Vec<String> = inst.means().iter().map(json_num).collect();
    let (family, truth) = match kind {
        Kind::KnownVar => (
            format!(r#"{{"name":"normal-known-var","sigma":[{}]}}"#, vec!["1"; k].join(",")),
            format!(r#"{{"means":[{}]}}"#, means.join(",")),
        ),
        Kind::UnknownVar => (
            r#"{"name":"normal-unknown-var"}"#.to_string(),
            format!(
                r#"{{"means":[{}],"variances":[{}]}}"#,
                means.join(","),
                (0..k).map(|a| if a % 2 == 0 { "\"1\"" } else { "\"1/2\"" }).collect::<Vec<_>>().join(",")
            ),
        ),
        Kind::Discrete => {
            let supports: Vec<String> = inst
                .means()
                .iter()
                .map(|m| {
                    let m = cmab_core::rational::to_f64(m);
                    format!("[0,{},{}]", m, 2.0 * m)
                })
                .collect();
            (
                format!(r#"{{"name":"discrete","supports":[{}]}}"#, supports.join(",")),
                format!(r#"{{"probs":[{}]}}"#, vec![r#"["1/4","1/2","1/4"]"#; k].join(",")),
            )
        }
    };
    format!(
        r#"{{"k":{k},"L":{},"costs":[{}],"rates":[{}],"family":{family},"truth":{truth}}}"#,
        inst.resources(),
        costs.join(","),
        rates.join(",")
    )
}

pub fn problem(inst: &ProblemInstance, kind: Kind) -> cmab_core::env::BanditProblem {
    cmab_core::env::BanditProblem::from_json(&instance_json(inst, kind)).expect("generated instance parses")
}
