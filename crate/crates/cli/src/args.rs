use std::fmt;
use std::str::FromStr;

use cardylab::lattice::{DomainOptions, LatticeDomain, Shape, SQRT3_2};
use clap::ValueEnum;
use num_rational::Ratio;
use serde::{Serialize, Serializer};

/// A positive rational such as `1/64`, kept exact for the metadata.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Rational(pub Ratio<u64>);

impl FromStr for Rational {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        let r: Ratio<u64> = s.trim().parse().map_err(|_| format!("`{s}` is not a rational like 1/64"))?;
        if *r.numer() == 0 {
            return Err(format!("`{s}` must be positive"));
        }
        Ok(Rational(r))
    }
}

impl Rational {
    pub fn value(&self) -> f64 {
        *self.0.numer() as f64 / *self.0.denom() as f64
    }

    /// k for δ = 1/k.
    pub fn inverse(&self) -> anyhow::Result<u32> {
        if *self.0.numer() != 1 || *self.0.denom() > u32::MAX as u64 {
            return Err(crate::usage(format!("mesh size {self} must have the form 1/k")));
        }
        Ok(*self.0.denom() as u32)
    }
}

impl fmt::Display for Rational {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

impl Serialize for Rational {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum DomainKind {
    Disk,
    Triangle,
    Rhombus,
    Square,
}

impl DomainKind {
    pub fn shape(self) -> Shape {
        match self {
            DomainKind::Disk => Shape::unit_disk(),
            DomainKind::Triangle => Shape::equilateral_triangle(1.0),
            DomainKind::Rhombus => Shape::rhombus(1.0),
            DomainKind::Square => Shape::rectangle(1.0, 1.0),
        }
    }

    /// Three boundary points used as marks, counterclockwise.
    pub fn mark_points(self) -> [[f64; 2]; 3] {
        match self {
            DomainKind::Disk => [90.0f64, 210.0, 330.0].map(|t| [t.to_radians().cos(), t.to_radians().sin()]),
            DomainKind::Triangle => [[0.0, 0.0], [1.0, 0.0], [0.5, SQRT3_2]],
            DomainKind::Rhombus => [[0.0, 0.0], [1.0, 0.0], [1.5, SQRT3_2]],
            DomainKind::Square => [[0.0, 0.0], [1.0, 0.0], [1.0, 1.0]],
        }
    }

    pub fn build(self, delta: Rational) -> anyhow::Result<LatticeDomain> {
        Ok(LatticeDomain::build(&self.shape(), delta.value(), DomainOptions::default())?)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum DynModeArg {
    Full,
    Cutoff,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum PivotalMode {
    Map,
    Lattice,
}

/// `uniform:R` or `field:PATH`.
#[derive(Clone, Debug, PartialEq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum RateSpec {
    Uniform(f64),
    Field(String),
}

impl FromStr for RateSpec {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        match s.split_once(':') {
            Some(("uniform", r)) => {
                let r: f64 = r.parse().map_err(|_| format!("bad rate `{r}`"))?;
                if !(r > 0.0 && r.is_finite()) {
                    return Err("uniform rate must be positive".into());
                }
                Ok(RateSpec::Uniform(r))
            }
            Some(("field", p)) if !p.is_empty() => Ok(RateSpec::Field(p.into())),
            _ => Err(format!("`{s}` is neither uniform:R nor field:PATH")),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rationals() {
        let r: Rational = "1/64".parse().unwrap();
        assert_eq!(r.value(), 1.0 / 64.0);
        assert_eq!(r.inverse().unwrap(), 64);
        assert_eq!(r.to_string(), "1/64");
        assert_eq!("2/128".parse::<Rational>().unwrap().to_string(), "1/64");
        assert!("0".parse::<Rational>().is_err());
        assert!("x".parse::<Rational>().is_err());
        assert!("3/64".parse::<Rational>().unwrap().inverse().is_err());
    }

    #[test]
    fn rate_specs() {
        assert_eq!("uniform:2.5".parse::<RateSpec>().unwrap(), RateSpec::Uniform(2.5));
        assert_eq!("field:h.json".parse::<RateSpec>().unwrap(), RateSpec::Field("h.json".into()));
        assert!("uniform:-1".parse::<RateSpec>().is_err());
        assert!("gff".parse::<RateSpec>().is_err());
    }
}
