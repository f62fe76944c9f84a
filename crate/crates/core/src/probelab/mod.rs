//! Unit-level analyses of a trained network.

pub mod census;
pub mod classify;
pub mod encoding;
pub mod output;
pub mod rdm;
pub mod select;
pub mod stats;

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::cornet::{Layer, Network};
use crate::error::{Error, Result};

pub use census::{layer_census, probe_units, CensusRow, UnitProfile};
pub use classify::{classify_unit, Classification, UnitClass};
pub use encoding::{
    design_matrix, lambda_grid, CvConfig, lasso, lasso_cv, position_tuning_curves, scheme_comparison, EncodingFit, LassoFit,
    Scheme, TuningCurves,
};
pub use rdm::{all_pairs, mean_dissimilarity, rdm, MeanDissimilarity, Rdm};
pub use select::{letter_preference, select_units, select_units_in, LetterPreference};

/// One unit: a channel at a spatial cell for conv layers, or a channel of H.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct UnitRef {
    pub layer: Layer,
    pub channel: usize,
    pub cell: Option<(usize, usize)>,
}

impl UnitRef {
    pub fn from_flat(net: &Network, layer: Layer, index: usize) -> Self {
        let shape = net.layer_shape(layer);
        if shape.len() == 3 {
            let hw = shape[1] * shape[2];
            UnitRef {
                layer,
                channel: index / hw,
                cell: Some(((index % hw) / shape[2], index % shape[2])),
            }
        } else {
            UnitRef {
                layer,
                channel: index,
                cell: None,
            }
        }
    }

    /// Index of this unit in its layer's flattened activation.
    pub fn flat(&self, net: &Network) -> Result<usize> {
        let shape = net.layer_shape(self.layer);
        match (shape.len(), self.cell) {
            (3, Some((r, c))) if self.channel < shape[0] && r < shape[1] && c < shape[2] => {
                Ok((self.channel * shape[1] + r) * shape[2] + c)
            }
            (1, None) if self.channel < shape[0] => Ok(self.channel),
            _ => Err(Error::InvalidArgument(format!("{self} is outside {} {:?}", self.layer, shape))),
        }
    }
}

impl fmt::Display for UnitRef {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.cell {
            Some((r, c)) => write!(f, "{}:{}@{},{}", self.layer, self.channel, r, c),
            None => write!(f, "{}:{}", self.layer, self.channel),
        }
    }
}
