use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use serde::{Deserialize, Serialize};

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields, default)]
pub struct GraphSection {
    pub m: usize,
    pub n: usize,
    /// One value per edge (minus edges first), or a single value for all.
    pub alpha: Vec<f64>,
    pub beta: Vec<f64>,
}

impl Default for GraphSection {
    fn default() -> Self {
        Self {
            m: 1,
            n: 1,
            alpha: vec![1.0],
            beta: vec![-1.0],
        }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields, default)]
pub struct Discretization {
    #[serde(rename = "L")]
    pub l: f64,
    #[serde(rename = "N")]
    pub n: usize,
}

impl Default for Discretization {
    fn default() -> Self {
        Self { l: 40.0, n: 2000 }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields, default)]
pub struct VertexSection {
    #[serde(rename = "Z")]
    pub z: f64,
    /// Values for the `sweep` task.
    #[serde(rename = "Z_list")]
    pub z_list: Vec<f64>,
}

impl Default for VertexSection {
    fn default() -> Self {
        Self {
            z: 1.0,
            z_list: vec![-1.0, -0.5, 0.5, 1.0],
        }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields, default)]
pub struct Tolerances {
    pub residual: f64,
    pub growth_fit: f64,
    pub resolvent: f64,
    pub bromwich: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Self {
            residual: 1e-6,
            growth_fit: 0.05,
            resolvent: 1e-6,
            bromwich: 1e-3,
        }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields, default)]
pub struct EigenSection {
    pub coarse_n: usize,
    pub window: f64,
}

impl Default for EigenSection {
    fn default() -> Self {
        Self {
            coarse_n: 300,
            window: 4.0,
        }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields, default)]
pub struct EvolveSection {
    /// Final time in units of `1/zeta`.
    pub periods: f64,
    pub dt: f64,
}

impl Default for EvolveSection {
    fn default() -> Self {
        Self {
            periods: 20.0,
            dt: 0.02,
        }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields, default)]
pub struct ResolventSection {
    pub lambda_re: f64,
    pub lambda_im: f64,
    pub t: f64,
    pub contour_r: f64,
    pub contour_t: f64,
    pub contour_m: usize,
}

impl Default for ResolventSection {
    fn default() -> Self {
        Self {
            lambda_re: 2.0,
            lambda_im: 0.0,
            t: 0.5,
            contour_r: 1.0,
            contour_t: 200.0,
            contour_m: 4096,
        }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields, default)]
pub struct OutputSection {
    pub dir: PathBuf,
}

impl Default for OutputSection {
    fn default() -> Self {
        Self {
            dir: "graphkdv-out".into(),
        }
    }
}

#[derive(Clone, Debug, Default, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields, default)]
pub struct RunConfig {
    pub graph: GraphSection,
    pub discretization: Discretization,
    pub vertex: VertexSection,
    pub tolerances: Tolerances,
    pub eigen: EigenSection,
    pub evolve: EvolveSection,
    pub resolvent: ResolventSection,
    pub output: OutputSection,
}

fn expand(name: &str, v: &[f64], edges: usize) -> Result<Vec<f64>> {
    match v.len() {
        1 => Ok(vec![v[0]; edges]),
        k if k == edges => Ok(v.to_vec()),
        k => bail!("graph.{name}: expected 1 or {edges} values, got {k}"),
    }
}

impl RunConfig {
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
        Self::parse(&text).with_context(|| format!("in {}", path.display()))
    }

    pub fn parse(text: &str) -> Result<Self> {
        let cfg: Self = toml::from_str(text)?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn alpha(&self) -> Result<Vec<f64>> {
        expand("alpha", &self.graph.alpha, self.graph.m + self.graph.n)
    }

    pub fn beta(&self) -> Result<Vec<f64>> {
        expand("beta", &self.graph.beta, self.graph.m + self.graph.n)
    }

    pub fn validate(&self) -> Result<()> {
        let g = &self.graph;
        if g.m == 0 || g.n == 0 {
            bail!("graph.m and graph.n must be at least 1");
        }
        if self.alpha()?.iter().any(|a| !(*a > 0.0)) {
            bail!("graph.alpha: every value must be positive");
        }
        if self.beta()?.iter().any(|b| !b.is_finite()) {
            bail!("graph.beta: values must be finite");
        }
        if !(self.discretization.l > 0.0) {
            bail!("discretization.L must be positive");
        }
        if self.discretization.n < 50 {
            bail!("discretization.N must be at least 50");
        }
        if !self.vertex.z.is_finite() || self.vertex.z_list.iter().any(|z| !z.is_finite()) {
            bail!("vertex.Z and vertex.Z_list must be finite");
        }
        let t = &self.tolerances;
        for (name, v) in [
            ("residual", t.residual),
            ("growth_fit", t.growth_fit),
            ("resolvent", t.resolvent),
            ("bromwich", t.bromwich),
        ] {
            if !(v > 0.0) {
                bail!("tolerances.{name} must be positive");
            }
        }
        if self.eigen.coarse_n < 50 || !(self.eigen.window > 0.0) {
            bail!("eigen.coarse_n must be at least 50 and eigen.window positive");
        }
        if !(self.evolve.dt > 0.0) || !(self.evolve.periods > 0.0) {
            bail!("evolve.dt and evolve.periods must be positive");
        }
        let r = &self.resolvent;
        if !(r.lambda_re > 0.0) {
            bail!("resolvent.lambda_re must be positive");
        }
        if !(r.contour_r > 0.0) || !(r.contour_t > 0.0) || r.contour_m < 2 || !r.contour_m.is_multiple_of(2) {
            bail!("resolvent.contour_*: need r > 0, t > 0 and an even m");
        }
        Ok(())
    }
}
