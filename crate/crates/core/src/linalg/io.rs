//! JSON exchange format: `{"dims": [...], "data": [[re, im], ...]}`, row-major.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use super::operator::{Operator, C64};
use crate::error::{Error, Result};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MatrixJson {
    pub dims: Vec<usize>,
    pub data: Vec<[f64; 2]>,
}

impl From<&Operator> for MatrixJson {
    fn from(op: &Operator) -> Self {
        let n = op.side();
        let m = op.mat();
        let data = (0..n)
            .flat_map(|r| (0..n).map(move |c| (r, c)))
            .map(|(r, c)| [m[(r, c)].re, m[(r, c)].im])
            .collect();
        MatrixJson { dims: op.dims().to_vec(), data }
    }
}

impl TryFrom<MatrixJson> for Operator {
    type Error = Error;

    fn try_from(j: MatrixJson) -> Result<Operator> {
        let n: usize = j.dims.iter().product();
        if j.data.len() != n * n {
            return Err(Error::Parse(format!(
                "dims {:?} need {} entries, found {}",
                j.dims,
                n * n,
                j.data.len()
            )));
        }
        let mat = DMatrix::from_fn(n, n, |r, c| {
            let [re, im] = j.data[r * n + c];
            C64::new(re, im)
        });
        Operator::from_matrix(mat, j.dims)
    }
}

pub fn to_json(op: &Operator) -> Result<String> {
    Ok(serde_json::to_string_pretty(&MatrixJson::from(op))?)
}

pub fn from_json(s: &str) -> Result<Operator> {
    let j: MatrixJson = serde_json::from_str(s)?;
    Operator::try_from(j)
}
