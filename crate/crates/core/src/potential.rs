//! Symbol-local potentials `ψ(ω, z) = ψ_{ω₁}(z)` and the pressure-gap check.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::semigroup::{GeneratorSet, JuliaCloud};
use crate::sphere::ExtComplex;

/// Spherical derivatives are clipped below at this value before the log.
pub const DERIVATIVE_FLOOR: f64 = 1e-12;

/// A table of values on a rectangular lattice, bilinearly interpolated and
/// clamped at the edges. Values are row-major: `values[iy * nx + ix]`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GridTable {
    pub re_min: f64,
    pub re_max: f64,
    pub im_min: f64,
    pub im_max: f64,
    pub nx: usize,
    pub ny: usize,
    pub values: Vec<f64>,
}

impl GridTable {
    fn validate(&self) -> Result<()> {
        if self.nx < 1 || self.ny < 1 || self.values.len() != self.nx * self.ny {
            return Err(Error::InvalidArgument(format!(
                "grid table needs nx*ny = {} values, got {}",
                self.nx * self.ny,
                self.values.len()
            )));
        }
        if !(self.re_max >= self.re_min && self.im_max >= self.im_min) {
            return Err(Error::InvalidArgument("grid table bounds are inverted".into()));
        }
        Ok(())
    }

    pub fn interpolate(&self, z: ExtComplex) -> f64 {
        let (x, y) = match z.finite() {
            Some(z) => (z.re, z.im),
            None => (self.re_max, self.im_max),
        };
        let coord = |v: f64, lo: f64, hi: f64, n: usize| -> (usize, f64) {
            if n == 1 || hi <= lo {
                return (0, 0.0);
            }
            let t = ((v - lo) / (hi - lo)).clamp(0.0, 1.0) * (n - 1) as f64;
            let i = (t.floor() as usize).min(n - 2);
            (i, t - i as f64)
        };
        let (ix, fx) = coord(x, self.re_min, self.re_max, self.nx);
        let (iy, fy) = coord(y, self.im_min, self.im_max, self.ny);
        let at = |i: usize, j: usize| self.values[j.min(self.ny - 1) * self.nx + i.min(self.nx - 1)];
        let lower = at(ix, iy) * (1.0 - fx) + at(ix + 1, iy) * fx;
        let upper = at(ix, iy + 1) * (1.0 - fx) + at(ix + 1, iy + 1) * fx;
        lower * (1.0 - fy) + upper * fy
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum PotentialKind {
    /// One value per generator; a single value applies to all.
    Constant(Vec<f64>),
    /// `ψ_j(z) = -t log |f_j'|_sph(z)`.
    Geometric { t: f64 },
    /// One table per generator; a single table applies to all.
    Grid(Vec<GridTable>),
}

#[derive(Clone, Debug, PartialEq)]
pub struct Potential {
    pub kind: PotentialKind,
    /// Added to every value.
    pub shift: f64,
}

impl Potential {
    pub fn constant(c: f64) -> Self {
        Potential {
            kind: PotentialKind::Constant(vec![c]),
            shift: 0.0,
        }
    }

    pub fn zero() -> Self {
        Self::constant(0.0)
    }

    pub fn geometric(t: f64) -> Self {
        Potential {
            kind: PotentialKind::Geometric { t },
            shift: 0.0,
        }
    }

    /// `ψ + c`.
    pub fn shifted(&self, c: f64) -> Self {
        Potential {
            kind: self.kind.clone(),
            shift: self.shift + c,
        }
    }

    /// Rejects per-generator lists whose length matches neither 1 nor `s`.
    pub fn validate(&self, gens: &GeneratorSet) -> Result<()> {
        let n = match &self.kind {
            PotentialKind::Constant(v) => v.len(),
            PotentialKind::Grid(t) => {
                for table in t {
                    table.validate()?;
                }
                t.len()
            }
            PotentialKind::Geometric { .. } => return Ok(()),
        };
        if n == 1 || n == gens.len() {
            Ok(())
        } else {
            Err(Error::InvalidArgument(format!(
                "potential lists {n} entries for {} generators",
                gens.len()
            )))
        }
    }

    /// `ψ_j(z)`. Geometric potentials clip the spherical derivative at
    /// [`DERIVATIVE_FLOOR`], so the value is always finite.
    pub fn evaluate(&self, gens: &GeneratorSet, j: usize, z: ExtComplex) -> f64 {
        let pick = |n: usize| if n == 1 { 0 } else { j };
        self.shift
            + match &self.kind {
                PotentialKind::Constant(v) => v[pick(v.len())],
                PotentialKind::Geometric { t } => {
                    -t * gens.map(j).spherical_derivative(z).max(DERIVATIVE_FLOOR).ln()
                }
                PotentialKind::Grid(tables) => tables[pick(tables.len())].interpolate(z),
            }
    }

    /// Whether `ψ_j(z)` is the same for every `j` and `z`.
    pub fn is_constant(&self) -> bool {
        matches!(&self.kind, PotentialKind::Constant(v) if v.windows(2).all(|w| w[0] == w[1]))
    }

    pub fn from_json(s: &str) -> Result<Self> {
        let j: PotentialJson = serde_json::from_str(s)?;
        Potential::try_from(j)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(&PotentialJson::from(self)).expect("potentials always serialize")
    }
}

/// JSON form `{"kind": "constant"|"geometric"|"grid", "params": ..., "shift": c}`.
///
/// * constant: `{"value": c}` or `{"values": [c_1, ..., c_s]}`
/// * geometric: `{"t": t}`
/// * grid: `{"tables": [GridTable, ...]}`
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct PotentialJson {
    pub kind: String,
    #[serde(default)]
    pub params: serde_json::Value,
    #[serde(default, skip_serializing_if = "is_zero")]
    pub shift: f64,
}

fn is_zero(x: &f64) -> bool {
    *x == 0.0
}

impl TryFrom<PotentialJson> for Potential {
    type Error = Error;

    fn try_from(j: PotentialJson) -> Result<Self> {
        let p = &j.params;
        let num = |key: &str| p.get(key).and_then(|v| v.as_f64());
        let kind = match j.kind.as_str() {
            "constant" => {
                if let Some(v) = num("value") {
                    PotentialKind::Constant(vec![v])
                } else if let Some(vs) = p.get("values") {
                    let v: Vec<f64> = serde_json::from_value(vs.clone())?;
                    if v.is_empty() {
                        return Err(Error::InvalidArgument("constant potential has no values".into()));
                    }
                    PotentialKind::Constant(v)
                } else if p.is_null() {
                    PotentialKind::Constant(vec![0.0])
                } else {
                    return Err(Error::InvalidArgument("constant potential needs `value` or `values`".into()));
                }
            }
            "geometric" => PotentialKind::Geometric {
                t: num("t").ok_or_else(|| Error::InvalidArgument("geometric potential needs `t`".into()))?,
            },
            "grid" => {
                let tables: Vec<GridTable> = serde_json::from_value(
                    p.get("tables")
                        .cloned()
                        .ok_or_else(|| Error::InvalidArgument("grid potential needs `tables`".into()))?,
                )?;
                if tables.is_empty() {
                    return Err(Error::InvalidArgument("grid potential has no tables".into()));
                }
                for t in &tables {
                    t.validate()?;
                }
                PotentialKind::Grid(tables)
            }
            other => return Err(Error::InvalidArgument(format!("unknown potential kind `{other}`"))),
        };
        Ok(Potential { kind, shift: j.shift })
    }
}

impl From<&Potential> for PotentialJson {
    fn from(p: &Potential) -> Self {
        let (kind, params) = match &p.kind {
            PotentialKind::Constant(v) if v.len() == 1 => ("constant", serde_json::json!({ "value": v[0] })),
            PotentialKind::Constant(v) => ("constant", serde_json::json!({ "values": v })),
            PotentialKind::Geometric { t } => ("geometric", serde_json::json!({ "t": t })),
            PotentialKind::Grid(t) => ("grid", serde_json::json!({ "tables": t })),
        };
        PotentialJson {
            kind: kind.into(),
            params,
            shift: p.shift,
        }
    }
}

/// `(sup ψ, inf ψ)` over all generators and cloud points.
pub fn sup_inf_estimate(psi: &Potential, gens: &GeneratorSet, cloud: &JuliaCloud) -> Result<(f64, f64)> {
    if cloud.is_empty() {
        return Err(Error::InvalidArgument("cloud is empty".into()));
    }
    let mut sup = f64::NEG_INFINITY;
    let mut inf = f64::INFINITY;
    for j in 0..gens.len() {
        for &z in &cloud.points {
            let v = psi.evaluate(gens, j, z);
            sup = sup.max(v);
            inf = inf.min(v);
        }
    }
    Ok((sup, inf))
}

/// The pressure-gap hypothesis `P^p(ψ) > sup ψ + log s` and the sufficient
/// oscillation condition `sup ψ − inf ψ < log Σe_j − log s`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct GapReport {
    pub pressure: f64,
    pub sup: f64,
    pub inf: f64,
    pub log_s: f64,
    pub log_degree_sum: f64,
    /// `pressure − sup − log s`; positive when the hypothesis holds.
    pub gap: f64,
    /// `(log Σe_j − log s) − (sup − inf)`; positive when the sufficient
    /// condition holds.
    pub slack: f64,
}

impl GapReport {
    pub fn hypothesis_holds(&self) -> bool {
        self.gap > 0.0
    }

    pub fn sufficient_condition_holds(&self) -> bool {
        self.slack > 0.0
    }
}

pub fn gap_check(psi: &Potential, gens: &GeneratorSet, pressure: f64, cloud: &JuliaCloud) -> Result<GapReport> {
    let (sup, inf) = sup_inf_estimate(psi, gens, cloud)?;
    let log_s = (gens.len() as f64).ln();
    let log_degree_sum = (gens.degree_sum() as f64).ln();
    Ok(GapReport {
        pressure,
        sup,
        inf,
        log_s,
        log_degree_sum,
        gap: pressure - sup - log_s,
        slack: (log_degree_sum - log_s) - (sup - inf),
    })
}
