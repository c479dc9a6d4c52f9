use crate::error::{check_len, Result};

/// Binary activation pattern over columns or pixels.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Sdr {
    bits: Vec<bool>,
}

impl Sdr {
    pub fn zeros(len: usize) -> Self {
        Self {
            bits: vec![false; len],
        }
    }

    pub fn from_bits(bits: Vec<bool>) -> Self {
        Self { bits }
    }

    /// Panics if an index is out of range.
    pub fn from_indices(len: usize, active: &[usize]) -> Self {
        let mut bits = vec![false; len];
        for &i in active {
            bits[i] = true;
        }
        Self { bits }
    }

    pub fn len(&self) -> usize {
        self.bits.len()
    }

    pub fn is_empty(&self) -> bool {
        self.bits.is_empty()
    }

    pub fn bits(&self) -> &[bool] {
        &self.bits
    }

    pub fn get(&self, i: usize) -> bool {
        self.bits[i]
    }

    pub fn set(&mut self, i: usize, on: bool) {
        self.bits[i] = on;
    }

    pub fn active_indices(&self) -> Vec<usize> {
        self.bits
            .iter()
            .enumerate()
            .filter_map(|(i, &b)| b.then_some(i))
            .collect()
    }

    pub fn count_active(&self) -> usize {
        self.bits.iter().filter(|&&b| b).count()
    }

    pub fn density(&self) -> f64 {
        if self.bits.is_empty() {
            0.0
        } else {
            self.count_active() as f64 / self.bits.len() as f64
        }
    }

    /// Number of positions where the two patterns differ.
    pub fn hamming(&self, other: &Sdr) -> Result<usize> {
        check_len("sdr", self.len(), other.len())?;
        Ok(self
            .bits
            .iter()
            .zip(&other.bits)
            .filter(|(a, b)| a != b)
            .count())
    }

    pub fn as_f64(&self) -> Vec<f64> {
        self.bits
            .iter()
            .map(|&b| if b { 1.0 } else { 0.0 })
            .collect()
    }

    /// Applies a permutation: output position `k` takes bit `perm[k]`.
    pub fn permuted(&self, perm: &[usize]) -> Sdr {
        Sdr {
            bits: perm.iter().map(|&p| self.bits[p]).collect(),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn indices_round_trip() {
        let s = Sdr::from_indices(6, &[1, 4]);
        assert_eq!(s.active_indices(), vec![1, 4]);
        assert_eq!(s.count_active(), 2);
        assert!((s.density() - 1.0 / 3.0).abs() < 1e-15);
    }

    #[test]
    fn hamming_counts_and_checks_length() {
        let a = Sdr::from_bits(vec![true, false, true, false]);
        let b = Sdr::from_bits(vec![true, false, false, true]);
        assert_eq!(a.hamming(&b).unwrap(), 2);
        assert!(a.hamming(&Sdr::zeros(3)).is_err());
    }
}
