//! Pairs of isometries and their analysis (frames plus genericity).

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::genericity::{genericity_report, PairGenericityReport};
use crate::space::{HMatrix, HermitianSpace};
use crate::spectral::{eigen_frame, LoxodromicFrame};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    /// Weakly non-singular pairs.
    #[serde(alias = "weakly-nonsingular")]
    Weak,
    /// Non-singular pairs.
    #[serde(alias = "nonsingular")]
    Strong,
}

impl std::str::FromStr for Mode {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "weak" | "weakly-nonsingular" => Ok(Mode::Weak),
            "strong" | "nonsingular" => Ok(Mode::Strong),
            other => Err(Error::BadParams(format!("unknown mode {other:?}"))),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Pair {
    pub space: HermitianSpace,
    pub a: HMatrix,
    pub b: HMatrix,
}

impl Pair {
    pub fn new(space: HermitianSpace, a: HMatrix, b: HMatrix) -> Result<Self> {
        space.check_matrix(&a)?;
        space.check_matrix(&b)?;
        Ok(Pair { space, a, b })
    }

    /// `(C A C^{-1}, C B C^{-1})` for an isometry `C`.
    pub fn conjugate_by(&self, c: &HMatrix) -> Pair {
        let ci = c.isometry_inverse();
        Pair { space: self.space, a: c.mul(&self.a).mul(&ci), b: c.mul(&self.b).mul(&ci) }
    }

    pub fn analyze(&self, tol: f64) -> Result<PairAnalysis> {
        let fa = eigen_frame(&self.a, self.space.field)?;
        let fb = eigen_frame(&self.b, self.space.field)?;
        let report = genericity_report(&fa, &fb, tol)?;
        Ok(PairAnalysis { a: fa, b: fb, report })
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PairAnalysis {
    pub a: LoxodromicFrame,
    pub b: LoxodromicFrame,
    pub report: PairGenericityReport,
}

impl PairAnalysis {
    pub fn satisfies(&self, mode: Mode) -> bool {
        match mode {
            Mode::Weak => self.report.weakly_nonsingular,
            Mode::Strong => self.report.nonsingular,
        }
    }

    pub fn require(&self, mode: Mode) -> Result<()> {
        if self.satisfies(mode) {
            return Ok(());
        }
        Err(match mode {
            Mode::Weak => Error::NotWeaklyNonsingular,
            Mode::Strong => Error::NotNonsingular,
        })
    }
}
