//! Walker/Vose alias tables for O(1) sampling from each transition row.

use rand::Rng;

use crate::chain::ChainMatrix;

/// One alias table per row, stored back to back.
#[derive(Debug, Clone)]
pub struct AliasTables {
    offsets: Vec<usize>,
    targets: Vec<u32>,
    keep: Vec<f64>,
    alias: Vec<u32>,
}

impl AliasTables {
    pub fn for_chain(p: &ChainMatrix) -> Self {
        let mut tables = Self {
            offsets: vec![0],
            targets: Vec::with_capacity(p.nnz()),
            keep: Vec::new(),
            alias: Vec::new(),
        };
        for x in 0..p.n() {
            tables.push_row(p.row_targets(x), p.row_probs(x));
        }
        tables
    }

    /// A single table over `0..weights.len()`.
    pub fn for_distribution(weights: &[f64]) -> Self {
        let mut tables = Self {
            offsets: vec![0],
            targets: Vec::new(),
            keep: Vec::new(),
            alias: Vec::new(),
        };
        let (targets, probs): (Vec<usize>, Vec<f64>) = weights
            .iter()
            .enumerate()
            .filter(|(_, &w)| w > 0.0)
            .map(|(i, &w)| (i, w))
            .unzip();
        tables.push_row(&targets, &probs);
        tables
    }

    fn push_row(&mut self, targets: &[usize], probs: &[f64]) {
        let k = targets.len();
        let total: f64 = probs.iter().sum();
        let mut scaled: Vec<f64> = probs.iter().map(|p| p * k as f64 / total).collect();
        let mut keep = vec![1.0; k];
        let mut alias: Vec<u32> = (0..k as u32).collect();
        let (mut small, mut large): (Vec<usize>, Vec<usize>) =
            (0..k).partition(|&i| scaled[i] < 1.0);
        while let (Some(s), Some(&l)) = (small.pop(), large.last()) {
            keep[s] = scaled[s];
            alias[s] = l as u32;
            scaled[l] -= 1.0 - scaled[s];
            if scaled[l] < 1.0 {
                large.pop();
                small.push(l);
            }
        }
        // Whatever remains is 1 up to rounding.
        self.targets.extend(targets.iter().map(|&t| t as u32));
        self.keep.extend(keep);
        self.alias.extend(alias);
        self.offsets.push(self.targets.len());
    }

    #[inline]
    pub fn sample<R: Rng + ?Sized>(&self, row: usize, rng: &mut R) -> usize {
        let start = self.offsets[row];
        let len = self.offsets[row + 1] - start;
        if len == 1 {
            return self.targets[start] as usize;
        }
        let i = rng.random_range(0..len);
        let slot = if rng.random::<f64>() < self.keep[start + i] {
            i
        } else {
            self.alias[start + i] as usize
        };
        self.targets[start + slot] as usize
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mc::rng::replicate_rng;

    #[test]
    fn empirical_frequencies_match_row() {
        let rows = vec![
            vec![(0, 0.5), (1, 0.125), (2, 0.375)],
            vec![(0, 0.25), (1, 0.75)],
            vec![(0, 0.5), (2, 0.5)],
        ];
        let c = ChainMatrix::from_rows(rows).unwrap();
        let t = AliasTables::for_chain(&c);
        let mut rng = replicate_rng(3, 1, 0);
        let draws = 200_000;
        let mut counts = [0usize; 3];
        for _ in 0..draws {
            counts[t.sample(0, &mut rng)] += 1;
        }
        for (y, p) in c.row(0) {
            let f = counts[y] as f64 / draws as f64;
            let se = (p * (1.0 - p) / draws as f64).sqrt();
            assert!((f - p).abs() <= 5.0 * se, "{f} vs {p}");
        }
    }

    #[test]
    fn distribution_table_frequencies() {
        let w = [0.1, 0.0, 0.6, 0.3];
        let t = AliasTables::for_distribution(&w);
        let mut rng = replicate_rng(9, 9, 0);
        let mut counts = [0usize; 4];
        let draws = 200_000;
        for _ in 0..draws {
            counts[t.sample(0, &mut rng)] += 1;
        }
        for (c, p) in counts.iter().zip(w) {
            let f = *c as f64 / draws as f64;
            let se = (p * (1.0 - p) / draws as f64).sqrt();
            assert!((f - p).abs() <= 5.0 * se + 1e-12, "{f} vs {p}");
        }
    }
}
