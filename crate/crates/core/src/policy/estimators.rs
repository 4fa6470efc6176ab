use crate::env::Family;

/// Per-bandit sufficient statistics: counts, running mean and centred sum
/// of squares (Welford), plus support frequencies for discrete families.
#[derive(Clone, Debug)]
pub struct EstimatorState {
    count: Vec<u64>,
    mean: Vec<f64>,
    m2: Vec<f64>,
    /// `support[a]` and `freq[a]` are empty for the Normal families.
    support: Vec<Vec<f64>>,
    freq: Vec<Vec<u64>>,
}

impl EstimatorState {
    pub fn new(family: &Family, bandits: usize) -> Self {
        let support = match family {
            Family::DiscreteFinite { supports } => supports.clone(),
            _ => vec![Vec::new(); bandits],
        };
        let freq = support.iter().map(|s| vec![0; s.len()]).collect();
        EstimatorState {
            count: vec![0; bandits],
            mean: vec![0.0; bandits],
            m2: vec![0.0; bandits],
            support,
            freq,
        }
    }

    pub fn push(&mut self, bandit: usize, x: f64) {
        let a = bandit;
        self.count[a] += 1;
        let d = x - self.mean[a];
        self.mean[a] += d / self.count[a] as f64;
        self.m2[a] += d * (x - self.mean[a]);
        if let Some(i) = self.support[a].iter().position(|r| *r == x) {
            self.freq[a][i] += 1;
        }
    }

    pub fn count(&self, bandit: usize) -> u64 {
        self.count[bandit]
    }

    pub fn counts(&self) -> &[u64] {
        &self.count
    }

    /// Sample mean `sum X / T`.
    pub fn mean(&self, bandit: usize) -> f64 {
        self.mean[bandit]
    }

    /// Biased sample variance (divisor `T`).
    pub fn variance(&self, bandit: usize) -> f64 {
        match self.count[bandit] {
            0 => 0.0,
            t => (self.m2[bandit] / t as f64).max(0.0),
        }
    }

    /// Empirical frequencies over the bandit's support (discrete only).
    pub fn frequencies(&self, bandit: usize) -> Vec<f64> {
        let t = self.count[bandit].max(1) as f64;
        self.freq[bandit].iter().map(|c| *c as f64 / t).collect()
    }
}
