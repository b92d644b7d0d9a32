//! Implicit reconstruction core: a multi-scale 3D CNN encoder over the
//! voxelized scan, a point-wise occupancy decoder over trilinearly queried
//! features, the supervised loss, and dense grid prediction.

mod encoder;
mod features;
mod model;

pub use encoder::{Encoder, EncoderCache};
pub use features::{query_features, query_features_into, scatter_query_grad, FeatureGrid, LevelStencil, MultiScaleFeatures};
pub use model::{IfNet, IfNetCache};

use crate::error::{CoreError, Result};

/// Encoder hyperparameters. `channels[i]` is the output width of level
/// `i + 1`; level 1 convolves the input grid at full resolution and each
/// further level halves the spatial extent with a max pool first.
#[derive(Debug, Clone, PartialEq)]
pub struct EncoderConfig {
    pub channels: Vec<usize>,
    pub input_resolution: usize,
}

impl EncoderConfig {
    pub fn new(channels: Vec<usize>, input_resolution: usize) -> Result<Self> {
        let cfg = EncoderConfig { channels, input_resolution };
        cfg.validate()?;
        Ok(cfg)
    }

    /// Desk-scale default: six levels at N=32.
    pub fn default_desk() -> Self {
        EncoderConfig { channels: vec![4, 8, 8, 16, 16, 16], input_resolution: 32 }
    }

    pub fn levels(&self) -> usize {
        self.channels.len()
    }

    pub fn validate(&self) -> Result<()> {
        let l = self.levels();
        if l < 2 {
            return Err(CoreError::config("encoder needs at least 2 levels"));
        }
        if self.channels.iter().any(|&c| c == 0) {
            return Err(CoreError::config("all channel counts must be >= 1"));
        }
        let down = 1usize << (l - 1);
        if self.input_resolution % down != 0 || self.input_resolution / down == 0 {
            return Err(CoreError::config(format!(
                "input resolution {} not divisible into {} levels",
                self.input_resolution, l
            )));
        }
        Ok(())
    }

    /// Total feature width d.
    pub fn feature_width(&self) -> usize {
        self.channels.iter().sum()
    }

    /// Spatial resolution per level: N, N/2, ..., N / 2^(L-1).
    pub fn level_resolutions(&self) -> Vec<usize> {
        (0..self.levels()).map(|i| self.input_resolution >> i).collect()
    }

    /// 1-based source level of every global feature channel.
    pub fn channel_layer_map(&self) -> Vec<usize> {
        let mut map = Vec::with_capacity(self.feature_width());
        for (level, &c) in self.channels.iter().enumerate() {
            map.extend(std::iter::repeat(level + 1).take(c));
        }
        map
    }
}

/// Decoder hyperparameters: a 4-layer MLP `d -> hidden^3 -> 1` with ReLU
/// hidden activations and a sigmoid output.
#[derive(Debug, Clone, PartialEq)]
pub struct DecoderConfig {
    pub input_width: usize,
    pub hidden: usize,
}

impl DecoderConfig {
    pub fn new(input_width: usize, hidden: usize) -> Result<Self> {
        if input_width == 0 || hidden == 0 {
            return Err(CoreError::config("decoder widths must be positive"));
        }
        Ok(DecoderConfig { input_width, hidden })
    }

    pub fn widths(&self) -> Vec<usize> {
        vec![self.input_width, self.hidden, self.hidden, self.hidden, 1]
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn desk_config_has_expected_shape() {
        let cfg = EncoderConfig::default_desk();
        assert_eq!(cfg.levels(), 6);
        assert_eq!(cfg.feature_width(), 68);
        assert_eq!(cfg.level_resolutions(), vec![32, 16, 8, 4, 2, 1]);
        let map = cfg.channel_layer_map();
        assert_eq!(map.len(), 68);
        assert_eq!(map[0], 1);
        assert_eq!(map[3], 1);
        assert_eq!(map[4], 2);
        assert_eq!(map[67], 6);
    }

    #[test]
    fn resolution_must_divide() {
        assert!(EncoderConfig::new(vec![2, 2, 2], 8).is_ok());
        assert!(EncoderConfig::new(vec![2, 2, 2, 2, 2, 2], 48).is_err());
        assert!(EncoderConfig::new(vec![2], 8).is_err());
    }
}
