//! Ensemble descriptions and the textual naming grammar
//! `B(J,K,m)`, `C<J-1>(J,K,m)` and `C1(J,K,m,p)`, each with an optional
//! `,L=<int>` suffix.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::protograph::{
    make_block_base, make_classical_spreading, make_type_p_spreading, BaseMatrix, ComponentStack,
    CoupledChain, CouplingLength,
};

/// Coupling length used when a name carries no `L=` suffix.
pub const DEFAULT_COUPLING_LENGTH: usize = 100;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub enum Family {
    /// Uncoupled `(J,K)`-regular block ensemble.
    Block,
    /// All-ones components with `w = J-1`.
    ClassicalSc,
    /// `w = 1` mix of `E_A` and `E_B` columns.
    TypeP { p: usize },
    /// Any valid edge spreading.
    Custom(ComponentStack),
}

/// A `(J, K = kJ)` ensemble over `GF(2^m)` with coupling length `L`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct EnsembleSpec {
    pub family: Family,
    /// Variable degree `J`.
    pub degree: u32,
    /// `k = K / J`.
    pub ratio: usize,
    /// Field exponent `m`, `q = 2^m`.
    pub m: u32,
    /// Coupling length `L`; unused by block ensembles.
    pub length: usize,
}

impl EnsembleSpec {
    pub fn block(degree: u32, ratio: usize, m: u32) -> Result<Self> {
        EnsembleSpec {
            family: Family::Block,
            degree,
            ratio,
            m,
            length: 1,
        }
        .validated()
    }

    pub fn classical(degree: u32, ratio: usize, m: u32, length: usize) -> Result<Self> {
        EnsembleSpec {
            family: Family::ClassicalSc,
            degree,
            ratio,
            m,
            length,
        }
        .validated()
    }

    pub fn type_p(degree: u32, ratio: usize, m: u32, p: usize, length: usize) -> Result<Self> {
        EnsembleSpec {
            family: Family::TypeP { p },
            degree,
            ratio,
            m,
            length,
        }
        .validated()
    }

    pub fn custom(stack: ComponentStack, m: u32, length: usize) -> Result<Self> {
        EnsembleSpec {
            degree: stack.degree(),
            ratio: stack.block_cols(),
            family: Family::Custom(stack),
            m,
            length,
        }
        .validated()
    }

    fn validated(self) -> Result<Self> {
        if self.degree < 2 {
            return invalid(format!("J must be at least 2, got {}", self.degree));
        }
        if self.ratio < 1 {
            return invalid("k must be at least 1");
        }
        if self.m < 1 {
            return invalid("m must be at least 1");
        }
        if self.length < 1 {
            return invalid("L must be at least 1");
        }
        // Surfaces spreading errors (p range, J >= 3 for type-p) eagerly.
        self.stack()?;
        Ok(self)
    }

    pub fn with_m(&self, m: u32) -> Result<Self> {
        EnsembleSpec { m, ..self.clone() }.validated()
    }

    pub fn with_length(&self, length: usize) -> Result<Self> {
        EnsembleSpec {
            length,
            ..self.clone()
        }
        .validated()
    }

    pub fn is_coupled(&self) -> bool {
        !matches!(self.family, Family::Block)
    }

    /// The edge spreading, or `None` for block ensembles.
    pub fn stack(&self) -> Result<Option<ComponentStack>> {
        Ok(match &self.family {
            Family::Block => None,
            Family::ClassicalSc => Some(make_classical_spreading(self.degree, self.ratio)?),
            Family::TypeP { p } => Some(make_type_p_spreading(self.degree, self.ratio, *p)?),
            Family::Custom(s) => Some(s.clone()),
        })
    }

    /// Coupling width `w` (0 for block ensembles).
    pub fn coupling_width(&self) -> usize {
        match &self.family {
            Family::Block => 0,
            Family::ClassicalSc => self.degree as usize - 1,
            Family::TypeP { .. } => 1,
            Family::Custom(s) => s.width(),
        }
    }

    /// The coupled chain, or `None` for block ensembles.
    pub fn chain(&self) -> Result<Option<CoupledChain>> {
        self.stack()?
            .map(|s| CoupledChain::new(&s, self.length))
            .transpose()
    }

    /// The base matrix density evolution runs on.
    pub fn base_matrix(&self) -> Result<BaseMatrix> {
        match self.chain()? {
            Some(chain) => Ok(chain.base),
            None => make_block_base(self.degree, self.ratio),
        }
    }

    /// Design rate: `R_L` for coupled ensembles, `(k-1)/k` for block ones.
    pub fn design_rate(&self) -> Result<f64> {
        match self.stack()? {
            Some(s) => crate::protograph::design_rate(&s, CouplingLength::Finite(self.length)),
            None if self.ratio > 1 => Ok((self.ratio - 1) as f64 / self.ratio as f64),
            None => Err(Error::NonpositiveRate {
                l: 1,
                w: 0,
                cols: self.ratio,
            }),
        }
    }

    /// Number of coupled positions the complexity formula normalizes by.
    pub fn positions(&self) -> usize {
        if self.is_coupled() {
            self.length
        } else {
            1
        }
    }

    /// Parses a name whose `m` field may be the literal `m`; the returned
    /// flag is true when it was, in which case the spec carries `m = 1`.
    pub fn parse_template(input: &str) -> Result<(Self, bool)> {
        parse(input, true)
    }
}

impl fmt::Display for EnsembleSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let (j, kk, m) = (self.degree, self.degree as usize * self.ratio, self.m);
        let suffix = |f: &mut fmt::Formatter<'_>| {
            if self.length != DEFAULT_COUPLING_LENGTH {
                write!(f, ",L={}", self.length)
            } else {
                Ok(())
            }
        };
        match &self.family {
            Family::Block => write!(f, "B({j},{kk},{m})"),
            Family::ClassicalSc => {
                write!(f, "C{}({j},{kk},{m}", j - 1)?;
                suffix(f)?;
                write!(f, ")")
            }
            Family::TypeP { p } => {
                write!(f, "C1({j},{kk},{m},{p}")?;
                suffix(f)?;
                write!(f, ")")
            }
            Family::Custom(s) => {
                let rows: Vec<String> = s
                    .stacked()
                    .to_rows()
                    .iter()
                    .map(|r| {
                        r.iter()
                            .map(|b| b.to_string())
                            .collect::<Vec<_>>()
                            .join(" ")
                    })
                    .collect();
                write!(f, "Custom[{}](m={m},L={})", rows.join("; "), self.length)
            }
        }
    }
}

impl FromStr for EnsembleSpec {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        parse(s, false).map(|(spec, _)| spec)
    }
}

fn parse(input: &str, allow_free_m: bool) -> Result<(EnsembleSpec, bool)> {
    let fail = |reason: &str| Error::Grammar {
        input: input.to_string(),
        reason: reason.to_string(),
    };
    let s = input.trim();
    let open = s.find('(').ok_or_else(|| fail("missing '('"))?;
    let body = s[open + 1..]
        .strip_suffix(')')
        .ok_or_else(|| fail("missing closing ')'"))?;
    let head = &s[..open];

    let mut fields: Vec<&str> = body.split(',').map(str::trim).collect();
    let mut length = DEFAULT_COUPLING_LENGTH;
    if let Some(last) = fields.last() {
        if let Some(v) = last.strip_prefix("L=") {
            length = v
                .parse()
                .map_err(|_| fail("L must be a positive integer"))?;
            fields.pop();
        }
    }
    let int = |v: &str, what: &str| -> Result<usize> {
        v.parse::<usize>()
            .map_err(|_| fail(&format!("{what} must be a non-negative integer, got `{v}`")))
    };
    if fields.len() < 3 {
        return Err(fail("expected at least (J,K,m)"));
    }
    let j = int(fields[0], "J")?;
    let kk = int(fields[1], "K")?;
    let (m, free_m) = if allow_free_m && fields[2] == "m" {
        (1, true)
    } else {
        (int(fields[2], "m")?, false)
    };
    if j < 2 {
        return Err(fail("J must be at least 2"));
    }
    if kk == 0 || kk % j != 0 {
        return Err(fail("K must be a positive multiple of J"));
    }
    let (j, k, m) = (j as u32, kk / j, m as u32);

    let spec = match (head, fields.len()) {
        ("B", 3) => EnsembleSpec::block(j, k, m),
        ("C1", 4) => EnsembleSpec::type_p(j, k, m, int(fields[3], "p")?, length),
        (h, 3) if h.starts_with('C') => {
            let w = int(&h[1..], "coupling width")?;
            if w as u32 != j - 1 {
                return Err(fail(
                    "three-field C<w> names denote the classical spreading, which needs w = J-1",
                ));
            }
            EnsembleSpec::classical(j, k, m, length)
        }
        _ => return Err(fail("unknown ensemble family or wrong number of fields")),
    };
    spec.map(|s| (s, free_m)).map_err(|e| match e {
        Error::InvalidArgument(reason) => fail(&reason),
        other => other,
    })
}
