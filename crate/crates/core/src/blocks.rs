//! Activation blocks.
//!
//! The policy runs in blocks: one initial sampling block (ISB) that samples
//! every bandit, followed by LP blocks that realise the randomisation of a
//! basic feasible solution with integer counts. Each block has nonpositive
//! aggregate net cost, and its activations are ordered so that no prefix
//! overdraws any resource.

use num_traits::Zero;

use crate::env::CostModel;
use crate::error::{Error, Result};
use crate::lp::{block_composition, Basis, LpSolution, ProblemInstance};
use crate::rational::Rational;

/// Search nodes visited by [`order_block`] before giving up.
pub const MAX_ORDER_NODES: u64 = 1_000_000;

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum BlockKind {
    Isb,
    Lpb(Basis),
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct BlockSchedule {
    pub kind: BlockKind,
    /// Bandit ids in activation order.
    pub activations: Vec<usize>,
    /// Activations per bandit.
    pub counts: Vec<u64>,
    pub length: u64,
}

impl BlockSchedule {
    fn new(kind: BlockKind, activations: Vec<usize>, bandits: usize) -> Self {
        let mut counts = vec![0u64; bandits];
        for &a in &activations {
            counts[a] += 1;
        }
        let length = activations.len() as u64;
        BlockSchedule {
            kind,
            activations,
            counts,
            length,
        }
    }
}

/// Number of bandit-0 activations needed to pay for one activation of every
/// other bandit: `max_j ceil((sum_{i>0} delta^i_j)_+ / -delta^0_j)`, at
/// least 1.
pub fn isb_surplus_count(inst: &ProblemInstance) -> Result<u64> {
    let mut best = 1u64;
    for j in 0..inst.resources() {
        let own = -inst.delta(0, j);
        if own <= Rational::zero() {
            return Err(Error::InfeasibleIsb);
        }
        let others: Rational = (1..inst.bandits()).map(|i| inst.delta(i, j)).sum();
        if others > Rational::zero() {
            let y = (others / own).ceil().to_integer();
            let y: u64 = y.try_into().map_err(|_| Error::InfeasibleIsb)?;
            best = best.max(y);
        }
    }
    Ok(best)
}

/// Initial sampling block: bandit 0 `y*` times and every other bandit once,
/// the whole pattern repeated `n0` times.
pub fn build_isb(inst: &ProblemInstance, n0: u64) -> Result<BlockSchedule> {
    if n0 == 0 {
        return Err(Error::Config("n0 must be at least 1".into()));
    }
    let y = isb_surplus_count(inst)?;
    let mut counts = vec![1u64; inst.bandits()];
    counts[0] = y;
    let model = CostModel::new(inst)?;
    let zero = vec![0i128; inst.resources()];
    let pattern = order_units(&counts, &model, &zero).map_err(|_| Error::InfeasibleIsb)?;
    // Each pattern ends with nonnegative slack, so repeating it stays feasible.
    let activations = pattern.repeat(n0 as usize);
    Ok(BlockSchedule::new(BlockKind::Isb, activations, inst.bandits()))
}

/// LP block for an optimal solution, ordered from zero starting slack.
pub fn build_lpb(solution: &LpSolution, inst: &ProblemInstance) -> Result<BlockSchedule> {
    let comp = block_composition(solution)?;
    let start = vec![Rational::zero(); inst.resources()];
    let order = order_block(&comp.counts, inst, &start)?;
    Ok(BlockSchedule::new(
        BlockKind::Lpb(solution.basis.clone()),
        order,
        inst.bandits(),
    ))
}

/// Orders a multiset of activations so that every prefix keeps all slacks
/// nonnegative, starting from `start`.
///
/// Greedy: take the bandit whose activation leaves the largest minimum slack
/// (ties to the smallest id); backtrack on dead ends.
pub fn order_block(counts: &[u64], inst: &ProblemInstance, start: &[Rational]) -> Result<Vec<usize>> {
    let model = CostModel::new(inst)?;
    let start: Vec<i128> = start.iter().map(|s| model.floor_units(s)).collect();
    order_units(counts, &model, &start)
}

pub(crate) fn order_units(counts: &[u64], model: &CostModel, start: &[i128]) -> Result<Vec<usize>> {
    let k = counts.len();
    let l = start.len();
    let fail = || Error::InfeasibleOrdering(counts.to_vec());
    // Aggregate feasibility is necessary; checking it first avoids a
    // pointless exhaustive search.
    for (j, s) in start.iter().enumerate() {
        let total: i128 = (0..k).map(|a| counts[a] as i128 * model.delta_units(a, j)).sum();
        if s - total < 0 {
            return Err(fail());
        }
    }
    let length: u64 = counts.iter().sum();

    let mut remaining = counts.to_vec();
    let mut slack = start.to_vec();
    let mut order: Vec<usize> = Vec::with_capacity(length as usize);
    // Each frame holds the ranked candidates at that depth and the next one
    // to try.
    let mut frames: Vec<(Vec<usize>, usize)> = Vec::new();
    let mut nodes = 0u64;

    let rank = |remaining: &[u64], slack: &[i128]| -> Vec<usize> {
        let mut cands: Vec<(i128, usize)> = (0..k)
            .filter(|&a| remaining[a] > 0)
            .filter_map(|a| {
                let m = (0..l).map(|j| slack[j] - model.delta_units(a, j)).min()?;
                (m >= 0).then_some((m, a))
            })
            .collect();
        cands.sort_by(|x, y| y.0.cmp(&x.0).then(x.1.cmp(&y.1)));
        cands.into_iter().map(|(_, a)| a).collect()
    };

    frames.push((rank(&remaining, &slack), 0));
    while (order.len() as u64) < length {
        nodes += 1;
        if nodes > MAX_ORDER_NODES {
            return Err(fail());
        }
        let Some((cands, next)) = frames.last_mut() else {
            return Err(fail());
        };
        if *next >= cands.len() {
            frames.pop();
            let Some(a) = order.pop() else {
                return Err(fail());
            };
            remaining[a] += 1;
            for (j, s) in slack.iter_mut().enumerate() {
                *s += model.delta_units(a, j);
            }
            continue;
        }
        let a = cands[*next];
        *next += 1;
        remaining[a] -= 1;
        for (j, s) in slack.iter_mut().enumerate() {
            *s -= model.delta_units(a, j);
        }
        order.push(a);
        if (order.len() as u64) < length {
            frames.push((rank(&remaining, &slack), 0));
        }
    }
    Ok(order)
}
