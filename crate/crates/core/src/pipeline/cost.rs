/// Area and power of one hardware block.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BlockCost {
    pub area_um2: f64,
    pub power_uw: f64,
}

/// Per-block figures of the analog memristive design.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CostTable {
    /// One spatial pooler block of 1x4 inputs.
    pub sp_1x4: BlockCost,
    pub tm_1x1: BlockCost,
    pub matcher_1x1: BlockCost,
}

impl Default for CostTable {
    fn default() -> Self {
        Self {
            sp_1x4: BlockCost {
                area_um2: 19.96,
                power_uw: 365.88,
            },
            tm_1x1: BlockCost {
                area_um2: 23.85,
                power_uw: 442.26,
            },
            matcher_1x1: BlockCost {
                area_um2: 1.18,
                power_uw: 69.44,
            },
        }
    }
}

/// Number of blocks of each kind in a design.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct CostCounts {
    pub sp_blocks_1x4: u64,
    pub tm_cells_1x1: u64,
    pub matcher_cells_1x1: u64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CostEstimate {
    pub area_um2: f64,
    pub power_uw: f64,
}

/// Linear sum of block counts times per-block figures. Kinds with a zero
/// count contribute nothing, so a single unit reproduces its table entry.
pub fn estimate_cost(counts: CostCounts, table: &CostTable) -> CostEstimate {
    let parts = [
        (counts.sp_blocks_1x4, table.sp_1x4),
        (counts.tm_cells_1x1, table.tm_1x1),
        (counts.matcher_cells_1x1, table.matcher_1x1),
    ];
    let mut est = CostEstimate {
        area_um2: 0.0,
        power_uw: 0.0,
    };
    for (n, block) in parts.into_iter().filter(|(n, _)| *n > 0) {
        est.area_um2 += n as f64 * block.area_um2;
        est.power_uw += n as f64 * block.power_uw;
    }
    est
}

#[cfg(test)]
mod tests {
    use super::*;

    fn counts(sp: u64, tm: u64, m: u64) -> CostCounts {
        CostCounts {
            sp_blocks_1x4: sp,
            tm_cells_1x1: tm,
            matcher_cells_1x1: m,
        }
    }

    #[test]
    fn unit_counts_reproduce_table() {
        let t = CostTable::default();
        let e = estimate_cost(counts(1, 0, 0), &t);
        assert_eq!((e.area_um2, e.power_uw), (19.96, 365.88));
        let e = estimate_cost(counts(0, 1, 0), &t);
        assert_eq!((e.area_um2, e.power_uw), (23.85, 442.26));
        let e = estimate_cost(counts(0, 0, 1), &t);
        assert_eq!((e.area_um2, e.power_uw), (1.18, 69.44));
    }

    #[test]
    fn sums_and_zero() {
        let t = CostTable::default();
        let e = estimate_cost(counts(0, 1, 1), &t);
        assert!((e.area_um2 - 25.03).abs() < 1e-12);
        assert!((e.power_uw - 511.70).abs() < 1e-12);
        let e = estimate_cost(CostCounts::default(), &t);
        assert_eq!((e.area_um2, e.power_uw), (0.0, 0.0));
        let e = estimate_cost(counts(3, 0, 0), &t);
        assert!((e.area_um2 - 3.0 * 19.96).abs() < 1e-12);
    }
}
