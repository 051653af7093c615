//! Piecewise-polynomial profile descriptors used to configure the set-valued families.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Piecewise polynomial in one variable.
///
/// `breaks` are the interior breakpoints `b_1 < .. < b_{m-1}`; piece `k` applies on
/// `(b_k, b_{k+1}]` (unbounded at both ends) and holds ascending coefficients in `x`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PiecewisePoly {
    #[serde(default)]
    pub breaks: Vec<f64>,
    pub pieces: Vec<Vec<f64>>,
}

impl PiecewisePoly {
    pub fn constant(c: f64) -> Self {
        Self {
            breaks: Vec::new(),
            pieces: vec![vec![c]],
        }
    }

    pub fn polynomial(coeffs: Vec<f64>) -> Self {
        Self {
            breaks: Vec::new(),
            pieces: vec![coeffs],
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.pieces.len() != self.breaks.len() + 1 {
            return Err(Error::InvalidParameter(format!(
                "profile has {} pieces for {} breakpoints",
                self.pieces.len(),
                self.breaks.len()
            )));
        }
        if self.breaks.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(Error::InvalidParameter("profile breakpoints must increase".into()));
        }
        if self
            .pieces
            .iter()
            .flatten()
            .chain(&self.breaks)
            .any(|v| !v.is_finite())
        {
            return Err(Error::NonFinite { what: "profile coefficients" });
        }
        Ok(())
    }

    pub fn eval(&self, x: f64) -> f64 {
        let k = self.breaks.partition_point(|&b| b < x);
        horner(&self.pieces[k], x)
    }
}

/// Piecewise (in `t`) polynomial in two variables: coefficient `c[i][j]` multiplies `t^i s^j`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PiecewiseBivariate {
    #[serde(default)]
    pub t_breaks: Vec<f64>,
    pub pieces: Vec<Vec<Vec<f64>>>,
}

impl PiecewiseBivariate {
    pub fn constant(c: f64) -> Self {
        Self {
            t_breaks: Vec::new(),
            pieces: vec![vec![vec![c]]],
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.pieces.len() != self.t_breaks.len() + 1 {
            return Err(Error::InvalidParameter(format!(
                "bivariate profile has {} pieces for {} breakpoints",
                self.pieces.len(),
                self.t_breaks.len()
            )));
        }
        if self.t_breaks.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(Error::InvalidParameter("profile breakpoints must increase".into()));
        }
        if self.pieces.iter().flatten().flatten().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite { what: "profile coefficients" });
        }
        Ok(())
    }

    pub fn eval(&self, t: f64, s: f64) -> f64 {
        let k = self.t_breaks.partition_point(|&b| b < t);
        let rows: Vec<f64> = self.pieces[k].iter().map(|row| horner(row, s)).collect();
        horner(&rows, t)
    }
}

fn horner(coeffs: &[f64], x: f64) -> f64 {
    coeffs.iter().rev().fold(0.0, |acc, c| acc * x + c)
}
