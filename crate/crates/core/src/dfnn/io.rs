use serde::{Deserialize, Serialize};

use super::{DistributionNet, Layer};
use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// On-disk form of a network. Matrices are stored as lists of rows.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Scalar")]
pub struct NetDocument<T> {
    #[serde(rename = "J")]
    pub depth: usize,
    #[serde(rename = "J1")]
    pub realizing_level: usize,
    pub dims: Vec<usize>,
    pub weights: Vec<Vec<Vec<T>>>,
    pub biases: Vec<Vec<T>>,
    pub c: Vec<T>,
}

impl<T: Scalar> From<&DistributionNet<T>> for NetDocument<T> {
    fn from(net: &DistributionNet<T>) -> Self {
        Self {
            depth: net.depth(),
            realizing_level: net.realizing_level(),
            dims: net.dims(),
            weights: net
                .layers()
                .iter()
                .map(|l| l.weights().chunks_exact(l.cols()).map(<[T]>::to_vec).collect())
                .collect(),
            biases: net.layers().iter().map(|l| l.bias().to_vec()).collect(),
            c: net.coeffs().to_vec(),
        }
    }
}

impl<T: Scalar> TryFrom<NetDocument<T>> for DistributionNet<T> {
    type Error = Error;

    fn try_from(doc: NetDocument<T>) -> Result<Self> {
        if doc.dims.len() != doc.depth + 1
            || doc.weights.len() != doc.depth
            || doc.biases.len() != doc.depth
        {
            return Err(Error::Parse(format!(
                "J = {} disagrees with {} dims, {} matrices, {} biases",
                doc.depth,
                doc.dims.len(),
                doc.weights.len(),
                doc.biases.len()
            )));
        }
        let mut layers = Vec::with_capacity(doc.depth);
        for (j, (rows, bias)) in doc.weights.into_iter().zip(doc.biases).enumerate() {
            let (r, c) = (doc.dims[j + 1], doc.dims[j]);
            if rows.len() != r || rows.iter().any(|row| row.len() != c) {
                return Err(Error::Parse(format!(
                    "matrix {} is not {r}×{c}",
                    j + 1
                )));
            }
            layers.push(Layer::new(r, c, rows.concat(), bias)?);
        }
        DistributionNet::new(doc.realizing_level, layers, doc.c)
    }
}

impl<T: Scalar> DistributionNet<T> {
    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(&NetDocument::from(self))?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let doc: NetDocument<T> = serde_json::from_str(text)?;
        doc.try_into()
    }
}
