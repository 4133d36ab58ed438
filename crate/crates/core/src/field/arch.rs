//! Network architecture description and parameter layout.

use super::encoding::encoded_dim;
use alloc::vec::Vec;

/// Architecture of the coordinate MLP.
///
/// `num_layers` counts linear layers; hidden layers use a rectifier and the
/// final layer an absolute value, so the output is non-negative everywhere.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(default, deny_unknown_fields))]
pub struct FieldArch {
    pub num_layers: usize,
    pub hidden_width: usize,
    pub encoding_frequencies: usize,
}

impl Default for FieldArch {
    fn default() -> Self {
        Self {
            num_layers: 8,
            hidden_width: 256,
            encoding_frequencies: 6,
        }
    }
}

impl FieldArch {
    /// Input dimension after positional encoding.
    pub fn encoded_dim(&self) -> usize {
        encoded_dim(self.encoding_frequencies)
    }

    /// Layer widths including encoded input and scalar output:
    /// `[encoded, hidden x (num_layers - 1), 1]`.
    pub fn widths(&self) -> Vec<usize> {
        let mut w = Vec::with_capacity(self.num_layers + 1);
        w.push(self.encoded_dim());
        for _ in 0..self.num_layers - 1 {
            w.push(self.hidden_width);
        }
        w.push(1);
        w
    }

    /// Total parameter count: per layer `in*out` weights plus `out` biases.
    pub fn param_count(&self) -> usize {
        let w = self.widths();
        w.windows(2).map(|lw| lw[0] * lw[1] + lw[1]).sum()
    }

    /// Flat-buffer offset of each layer's `(weights, bias)` block. The weight
    /// block is row-major `(out, in)`, followed by the bias of length `out`.
    pub(crate) fn layer_offsets(&self) -> Vec<usize> {
        let w = self.widths();
        let mut offsets = Vec::with_capacity(self.num_layers + 1);
        let mut acc = 0;
        for lw in w.windows(2) {
            offsets.push(acc);
            acc += lw[0] * lw[1] + lw[1];
        }
        offsets.push(acc);
        offsets
    }

    pub fn validate(&self) -> Result<(), ArchError> {
        if self.num_layers < 2 {
            return Err(ArchError::TooFewLayers(self.num_layers));
        }
        if self.hidden_width == 0 {
            return Err(ArchError::ZeroWidth);
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ArchError {
    TooFewLayers(usize),
    ZeroWidth,
}

impl core::fmt::Display for ArchError {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        match self {
            ArchError::TooFewLayers(n) => write!(f, "architecture needs at least 2 layers, got {n}"),
            ArchError::ZeroWidth => write!(f, "hidden width must be at least 1"),
        }
    }
}

#[cfg(feature = "std")]
impl std::error::Error for ArchError {}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn default_param_count_matches_closed_form() {
        // Independent sum over the width sequence [39, 256 x 7, 1].
        let widths = [39usize, 256, 256, 256, 256, 256, 256, 256, 1];
        let mut expected = 0;
        for i in 0..widths.len() - 1 {
            expected += widths[i] * widths[i + 1] + widths[i + 1];
        }
        let arch = FieldArch::default();
        assert_eq!(arch.widths(), widths.to_vec());
        assert_eq!(arch.param_count(), expected);
        assert_eq!(expected, 405_249);
    }

    #[test]
    fn encoded_dim_formula() {
        let arch = FieldArch {
            encoding_frequencies: 6,
            ..FieldArch::default()
        };
        assert_eq!(arch.encoded_dim(), 3 + 3 * 2 * 6);
    }

    #[test]
    fn rejects_degenerate_arch() {
        assert!(FieldArch {
            num_layers: 1,
            ..FieldArch::default()
        }
        .validate()
        .is_err());
        assert!(FieldArch {
            hidden_width: 0,
            ..FieldArch::default()
        }
        .validate()
        .is_err());
    }
}
