//! Parsing dictionary: coverings of transitional types, indexed densely in
//! (blocklength, type, codeword) order.

mod build;
mod format;

use std::collections::HashMap;

use serde::Serialize;

use crate::covering::pack_words;
use crate::error::{Error, Result};
use crate::rational::DistortionGrid;
use crate::rd::DistortionSpec;
use crate::types::{RateCache, TypeClass};

pub use build::{
    build_dictionary, choose_gamma, closed_form_gamma, BuildConfig, BuildLevel, Builder, GammaChoice,
    GammaStep, DEFAULT_R_MIN,
};
pub use format::{load, save, from_bytes, to_bytes, FORMAT_VERSION, MAGIC};

/// All codewords of one terminal type, with the index of the first one.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TypeGroup {
    pub type_class: TypeClass,
    pub first_index: u64,
    /// Codewords in index order.
    pub codewords: Vec<Vec<u8>>,
    /// Terminal because the scan stopped here, not because a one-letter
    /// extension crosses the threshold. Derived from the threshold rule,
    /// not stored on disk.
    pub capped: bool,
}

/// One `(n, type, codeword)` triple with its index.
#[derive(Debug, Clone, Copy)]
pub struct Entry<'a> {
    pub index: u64,
    pub n: usize,
    pub type_class: &'a TypeClass,
    pub codeword: &'a [u8],
}

pub(crate) const NONE: u32 = u32::MAX;

/// Node of the prefix-type automaton the parser walks.
#[derive(Debug, Clone, PartialEq)]
pub(crate) struct Node {
    /// Next node per source letter; `NONE` means the letter would cross the
    /// threshold (or the node is capped), so the segment ends here.
    pub children: Vec<u32>,
    /// Terminal group, if any.
    pub group: u32,
    pub capped: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub(crate) struct ParseTable {
    /// `nodes[0]` is the empty prefix.
    pub nodes: Vec<Node>,
}

/// Settings that determine which types are forced terminals.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct ScanLimits {
    /// Longest segment.
    pub n_cap: usize,
    /// Types with more members than this are never entered.
    pub member_cap: u64,
}

#[derive(Debug, Clone)]
pub struct Dictionary {
    pub(crate) gamma: f64,
    pub(crate) spec: DistortionSpec,
    pub(crate) grid: DistortionGrid,
    pub(crate) upsilon: f64,
    pub(crate) budget: u64,
    pub(crate) seed: u64,
    pub(crate) limits: ScanLimits,
    pub(crate) groups: Vec<TypeGroup>,
    pub(crate) table: ParseTable,
    pub(crate) group_of: HashMap<Vec<u32>, u32>,
    /// Packed codewords per group for binary Hamming lookup, `ceil(n / 64)`
    /// words each.
    pub(crate) packed: Option<Vec<Vec<u64>>>,
    /// Integer weight radius for the packed lookup.
    pub(crate) radius: Vec<u64>,
    pub(crate) levels: Vec<BuildLevel>,
}

impl PartialEq for Dictionary {
    fn eq(&self, o: &Self) -> bool {
        self.gamma.to_bits() == o.gamma.to_bits()
            && self.spec == o.spec
            && self.upsilon.to_bits() == o.upsilon.to_bits()
            && self.budget == o.budget
            && self.seed == o.seed
            && self.limits == o.limits
            && self.groups == o.groups
    }
}

impl Dictionary {
    /// Assemble a dictionary from its groups, rebuilding the parse table and
    /// checking every group against the threshold rule.
    pub(crate) fn assemble(
        gamma: f64,
        spec: DistortionSpec,
        upsilon: f64,
        budget: u64,
        seed: u64,
        limits: ScanLimits,
        groups: Vec<TypeGroup>,
        rates: &RateCache,
    ) -> Result<Self> {
        let grid = spec.grid()?;
        let size: u64 = groups.iter().map(|g| g.codewords.len() as u64).sum();
        if size > budget {
            return Err(Error::OverBudget { actual: size, budget });
        }
        let mut next = 0u64;
        for g in &groups {
            if g.first_index != next {
                return Err(Error::Integrity(format!(
                    "group {:?} starts at index {}, expected {next}",
                    g.type_class.counts(),
                    g.first_index
                )));
            }
            next += g.codewords.len() as u64;
            let n = g.type_class.n();
            for c in &g.codewords {
                if c.len() != n || c.iter().any(|&y| y as usize >= spec.reproduction_size()) {
                    return Err(Error::Integrity(format!(
                        "malformed codeword in group {:?}",
                        g.type_class.counts()
                    )));
                }
            }
        }
        let group_of: HashMap<Vec<u32>, u32> = groups
            .iter()
            .enumerate()
            .map(|(i, g)| (g.type_class.counts().to_vec(), i as u32))
            .collect();
        if group_of.len() != groups.len() {
            return Err(Error::Integrity("duplicate type group".into()));
        }
        let (table, terminals) = build::parse_table(gamma, &limits, rates, &group_of)?;
        // the stored groups must be exactly the terminal types of the scan
        if terminals.len() != groups.len() {
            return Err(Error::Integrity(format!(
                "{} stored type groups, the threshold rule yields {}",
                groups.len(),
                terminals.len()
            )));
        }
        let mut groups = groups;
        for (g, (t, capped)) in groups.iter_mut().zip(&terminals) {
            if &g.type_class != t {
                return Err(Error::Integrity(format!(
                    "stored type {:?} where the threshold rule yields {:?}",
                    g.type_class.counts(),
                    t.counts()
                )));
            }
            if !capped && !rates.is_transitional(t, gamma)? {
                return Err(Error::Integrity(format!("type {:?} is not transitional", t.counts())));
            }
            g.capped = *capped;
        }
        let (packed, radius) = match grid.hamming_weight {
            Some(w) if grid.rows == 2 && grid.cols == 2 && w > 0 => (
                Some(
                    groups
                        .iter()
                        .map(|g| {
                            let mut words = Vec::new();
                            for c in &g.codewords {
                                pack_words(c, &mut words);
                            }
                            words
                        })
                        .collect(),
                ),
                (0..=limits.n_cap).map(|n| grid.budget(n) / w).collect(),
            ),
            _ => (None, Vec::new()),
        };
        Ok(Dictionary {
            gamma,
            spec,
            grid,
            upsilon,
            budget,
            seed,
            limits,
            groups,
            table,
            group_of,
            packed,
            radius,
            levels: Vec::new(),
        })
    }

    pub fn gamma(&self) -> f64 {
        self.gamma
    }

    pub fn spec(&self) -> &DistortionSpec {
        &self.spec
    }

    pub fn grid(&self) -> &DistortionGrid {
        &self.grid
    }

    pub fn upsilon(&self) -> f64 {
        self.upsilon
    }

    /// The user budget `M`.
    pub fn budget(&self) -> u64 {
        self.budget
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn limits(&self) -> ScanLimits {
        self.limits
    }

    /// Number of codewords `M_actual`.
    pub fn len(&self) -> u64 {
        self.groups.iter().map(|g| g.codewords.len() as u64).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// `ceil(log2 M)`.
    pub fn index_width(&self) -> u32 {
        index_width(self.budget)
    }

    pub fn groups(&self) -> &[TypeGroup] {
        &self.groups
    }

    pub fn max_len(&self) -> usize {
        self.groups.iter().map(|g| g.type_class.n()).max().unwrap_or(0)
    }

    /// `(n, number of terminal types of length n)` for every length present.
    pub fn terminal_counts(&self) -> Vec<(usize, usize)> {
        let mut out: Vec<(usize, usize)> = Vec::new();
        for g in &self.groups {
            let n = g.type_class.n();
            match out.last_mut() {
                Some((m, c)) if *m == n => *c += 1,
                _ => out.push((n, 1)),
            }
        }
        out
    }

    /// Per-blocklength statistics recorded during the build (empty after load).
    pub fn levels(&self) -> &[BuildLevel] {
        &self.levels
    }

    pub fn group_for(&self, t: &TypeClass) -> Option<&TypeGroup> {
        self.group_of.get(t.counts()).map(|&i| &self.groups[i as usize])
    }

    pub fn entries(&self) -> impl Iterator<Item = Entry<'_>> {
        self.groups.iter().flat_map(|g| {
            g.codewords.iter().enumerate().map(move |(j, c)| Entry {
                index: g.first_index + j as u64,
                n: g.type_class.n(),
                type_class: &g.type_class,
                codeword: c,
            })
        })
    }

    /// CRC32 of the serialized dictionary.
    pub fn checksum(&self) -> u32 {
        format::stored_crc(&to_bytes(self)).expect("serialized dictionary has a checksum")
    }

    /// Codeword with the given index.
    pub fn codeword(&self, index: u64) -> Result<&[u8]> {
        let size = self.len();
        if index >= size {
            return Err(Error::IndexOutOfRange { index, size });
        }
        let gi = self.groups.partition_point(|g| g.first_index <= index) - 1;
        let g = &self.groups[gi];
        Ok(&g.codewords[(index - g.first_index) as usize])
    }

    /// Lowest-index codeword of group `gi` within distortion `D` of `x`.
    pub(crate) fn lookup(&self, gi: usize, x: &[u8]) -> Option<u64> {
        let g = &self.groups[gi];
        let n = x.len();
        let j = match &self.packed {
            Some(p) => {
                let mut xb = Vec::with_capacity(n.div_ceil(64));
                pack_words(x, &mut xb);
                let r = self.radius[n];
                p[gi].chunks(xb.len()).position(|c| {
                    c.iter().zip(&xb).map(|(a, b)| (a ^ b).count_ones() as u64).sum::<u64>() <= r
                })
            }
            None => g
                .codewords
                .iter()
                .position(|c| self.grid.within(self.grid.total_weight(x, c), n)),
        }?;
        Some(g.first_index + j as u64)
    }
}

pub fn index_width(budget: u64) -> u32 {
    if budget <= 1 {
        0
    } else {
        64 - (budget - 1).leading_zeros()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn widths() {
        assert_eq!(index_width(2), 1);
        assert_eq!(index_width(4096), 12);
        assert_eq!(index_width(4097), 13);
        assert_eq!(index_width(3), 2);
    }
}
