use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use std::path::Path;

use crate::error::{Result, SlfError};
use crate::evaluation::scene::SyntheticScene;
use crate::evaluation::split::Split;
use crate::evaluation::{PipelineConfig, Sweep};

/// Parses a TOML document; parse failures become config errors naming the offending key.
pub fn parse_toml<T: DeserializeOwned>(text: &str) -> Result<T> {
    toml::from_str(text).map_err(|e| {
        let msg = e.message().to_string();
        let field = msg
            .split('`')
            .nth(1)
            .filter(|f| !f.is_empty())
            .unwrap_or("document")
            .to_string();
        SlfError::config(field, msg)
    })
}

pub fn load_toml<T: DeserializeOwned>(path: &Path) -> Result<T> {
    let text = std::fs::read_to_string(path).map_err(|e| SlfError::from(e).context(path.display()))?;
    parse_toml(&text)
}

/// Synthetic scene description, validated.
pub fn parse_scene(text: &str) -> Result<SyntheticScene> {
    let scene: SyntheticScene = parse_toml(text)?;
    scene.validate()?;
    Ok(scene)
}

/// Values of the swept parameter; exactly one list must be given.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepAxis {
    pub q: Option<Vec<f64>>,
    pub n: Option<Vec<usize>>,
    pub depth: Option<Vec<u32>>,
}

impl SweepAxis {
    pub fn to_sweep(&self) -> Result<Sweep> {
        let sweep = match (&self.q, &self.n, &self.depth) {
            (Some(q), None, None) => Sweep::Q(q.clone()),
            (None, Some(n), None) => Sweep::N(n.clone()),
            (None, None, Some(d)) => Sweep::Depth(d.clone()),
            _ => return Err(SlfError::config("sweep", "give exactly one of `q`, `n`, `depth`")),
        };
        if sweep.is_empty() {
            return Err(SlfError::config("sweep", "the swept list is empty"));
        }
        Ok(sweep)
    }
}

/// A rate-distortion sweep on a synthetic scene.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepSpec {
    #[serde(default)]
    pub scene: SyntheticScene,
    #[serde(default = "default_split")]
    pub split: Split,
    #[serde(default)]
    pub pipeline: PipelineConfig,
    pub sweep: SweepAxis,
}

fn default_split() -> Split {
    Split::Dense
}

pub fn parse_sweep(text: &str) -> Result<SweepSpec> {
    let spec: SweepSpec = parse_toml(text)?;
    spec.scene.validate()?;
    spec.sweep.to_sweep()?;
    Ok(spec)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::evaluation::scene::Shape;

    #[test]
    fn scene_defaults_and_overrides() {
        let s = parse_scene("shape = \"cylinder\"\npoints = 500\n[material]\nks = 0.0\n").unwrap();
        assert_eq!(s.shape, Shape::Cylinder);
        assert_eq!(s.points, 500);
        assert_eq!(s.material.ks, 0.0);
        assert_eq!(s.material.kd, SyntheticScene::default().material.kd);
        assert_eq!(parse_scene("").unwrap(), SyntheticScene::default());
    }

    #[test]
    fn scene_errors_name_the_field() {
        let unknown = parse_scene("colour = 3\n").unwrap_err();
        assert!(matches!(&unknown, SlfError::Config { field, .. } if field == "colour"), "{unknown}");
        let negative = parse_scene("[material]\nkd = -1.0\n").unwrap_err();
        assert!(matches!(&negative, SlfError::Config { field, .. } if field == "material.kd"));
    }

    #[test]
    fn sweep_spec() {
        let s = parse_sweep("split = \"sparse\"\n[pipeline]\nlambda = 0.5\n[sweep]\nq = [8.0, 16.0]\n").unwrap();
        assert_eq!(s.split, Split::Sparse);
        assert_eq!(s.pipeline.lambda, 0.5);
        assert_eq!(s.sweep.to_sweep().unwrap(), Sweep::Q(vec![8.0, 16.0]));
        assert!(parse_sweep("[sweep]\nq = [8.0]\nn = [1]\n").is_err());
        assert!(parse_sweep("[sweep]\ndepth = []\n").is_err());
    }
}
