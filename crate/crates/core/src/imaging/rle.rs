//! Run-length encoding of binary masks for JSON reports.

use serde::{Deserialize, Serialize};

use super::BinaryMask;
use crate::error::{Error, Result};

/// Alternating run lengths in raster order, starting with unset pixels
/// (the first run may be zero).
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct RleMask {
    pub width: usize,
    pub height: usize,
    pub counts: Vec<usize>,
}

impl RleMask {
    pub fn encode(mask: &BinaryMask) -> Self {
        let mut counts = Vec::new();
        let mut current = false;
        let mut run = 0usize;
        for &b in mask.bits() {
            if b != current {
                counts.push(run);
                run = 0;
                current = b;
            }
            run += 1;
        }
        counts.push(run);
        Self {
            width: mask.width(),
            height: mask.height(),
            counts,
        }
    }

    pub fn decode(&self) -> Result<BinaryMask> {
        let n = self.width * self.height;
        if self.counts.iter().sum::<usize>() != n {
            return Err(Error::Malformed {
                what: "run-length mask".into(),
                reason: format!("runs do not add up to {}x{}", self.width, self.height),
            });
        }
        let mut bits = Vec::with_capacity(n);
        for (i, &c) in self.counts.iter().enumerate() {
            bits.extend(std::iter::repeat_n(i % 2 == 1, c));
        }
        BinaryMask::from_bits(self.width, self.height, bits)
    }
}
