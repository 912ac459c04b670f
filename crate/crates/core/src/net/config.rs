use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Fusion {
    /// Modalities stacked as input channels of a single path.
    Early,
    /// One convolutional path per modality, merged at the concatenation.
    Late,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct NetworkConfig {
    pub fusion: Fusion,
    pub conv_kernels: Vec<usize>,
    pub kernel_size: usize,
    pub fc_units: Vec<usize>,
    pub num_classes: usize,
    pub modalities: usize,
    /// Multiplier on every channel width; 1.0 is the full-size network.
    pub scale_factor: f64,
}

impl Default for NetworkConfig {
    fn default() -> Self {
        Self {
            fusion: Fusion::Early,
            conv_kernels: vec![25, 25, 25, 50, 50, 50, 75, 75, 75],
            kernel_size: 3,
            fc_units: vec![400, 200, 150],
            num_classes: 4,
            modalities: 2,
            scale_factor: 1.0,
        }
    }
}

pub const CONV_LAYERS: usize = 9;
const MAX_WIDTH: usize = 1 << 16;

impl NetworkConfig {
    pub fn early() -> Self {
        Self::default()
    }

    pub fn late() -> Self {
        Self {
            fusion: Fusion::Late,
            ..Self::default()
        }
    }

    pub fn scaled(mut self, scale: f64) -> Self {
        self.scale_factor = scale;
        self
    }

    fn scale(&self, what: &str, width: usize) -> Result<usize> {
        let w = (width as f64 * self.scale_factor).round();
        if w > MAX_WIDTH as f64 {
            return Err(Error::Config(format!("{what} width {w} is too large")));
        }
        if w < 1.0 {
            return Err(Error::Config(format!(
                "scale factor {} reduces {what} width {width} to zero",
                self.scale_factor
            )));
        }
        Ok(w as usize)
    }

    pub fn validate(&self) -> Result<()> {
        if self.conv_kernels.len() != CONV_LAYERS {
            return Err(Error::Config(format!(
                "expected {CONV_LAYERS} convolutional layers, got {}",
                self.conv_kernels.len()
            )));
        }
        if self.kernel_size == 0 || self.kernel_size % 2 == 0 {
            return Err(Error::Config(format!(
                "kernel size must be odd, got {}",
                self.kernel_size
            )));
        }
        if self.fc_units.is_empty() {
            return Err(Error::Config("at least one fully-connected layer required".into()));
        }
        if !(2..=u8::MAX as usize).contains(&self.num_classes) {
            return Err(Error::Config(format!(
                "class count must lie in 2..=255, got {}",
                self.num_classes
            )));
        }
        if !(1..=MAX_WIDTH).contains(&self.modalities) || self.kernel_size > 15 {
            return Err(Error::Config("modality count or kernel size out of range".into()));
        }
        if !(self.scale_factor.is_finite() && self.scale_factor > 0.0) {
            return Err(Error::Config(format!(
                "scale factor must be positive, got {}",
                self.scale_factor
            )));
        }
        self.conv_widths()?;
        self.fc_widths()?;
        Ok(())
    }

    pub fn conv_widths(&self) -> Result<Vec<usize>> {
        self.conv_kernels
            .iter()
            .map(|&m| self.scale("convolution", m))
            .collect()
    }

    pub fn fc_widths(&self) -> Result<Vec<usize>> {
        self.fc_units
            .iter()
            .map(|&m| self.scale("fully-connected", m))
            .collect()
    }

    pub fn paths(&self) -> usize {
        match self.fusion {
            Fusion::Early => 1,
            Fusion::Late => self.modalities,
        }
    }

    pub fn path_input_channels(&self) -> usize {
        match self.fusion {
            Fusion::Early => self.modalities,
            Fusion::Late => 1,
        }
    }

    /// Channels entering the first fully-connected layer.
    pub fn concat_channels(&self) -> Result<usize> {
        Ok(self.paths() * self.conv_widths()?.iter().sum::<usize>())
    }

    /// Voxels lost per spatial axis across the convolutional stack.
    pub fn shrink(&self) -> usize {
        self.conv_kernels.len() * (self.kernel_size - 1)
    }

    /// Side of the input window seen by one output voxel.
    pub fn receptive_field(&self) -> usize {
        self.shrink() + 1
    }
}
