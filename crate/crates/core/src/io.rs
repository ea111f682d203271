//! JSON and text file formats. Rationals are `"p/q"` strings; points are
//! referred to by name.

use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::cube::CubeModel;
use crate::dyadic::{Leaf, TreeNode};
use crate::error::{Error, Result};
use crate::family::Family;
use crate::greedy::TransversalSystem;
use crate::integration::{IndicatorFunctionModel, TaggedFamily};
use crate::measure::{GroundModel, MeasurableSet, PointSet};
use crate::partition::IndexedPartition;
use crate::rational::Rational;
use crate::uec::OrthoSystem;

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BlockSpec {
    pub measure: Rational,
    #[serde(default)]
    pub points: Vec<String>,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelSpec {
    pub blocks: Vec<BlockSpec>,
}

impl ModelSpec {
    pub fn build(self) -> Result<GroundModel> {
        GroundModel::new(self.blocks.into_iter().map(|b| (b.measure, b.points)).collect())
    }

    pub fn from_model(model: &GroundModel) -> Self {
        ModelSpec {
            blocks: model
                .blocks()
                .iter()
                .map(|b| BlockSpec {
                    measure: b.measure.clone(),
                    points: b.points.iter().map(|&p| model.name(p).to_string()).collect(),
                })
                .collect(),
        }
    }
}

/// A family element: a point name in model files, a natural number or a
/// leaf bit string otherwise.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Element {
    Index(u64),
    Name(String),
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(tag = "kind", deny_unknown_fields)]
pub enum FamilySpec {
    /// Downward closure of the generators.
    #[serde(rename = "explicit")]
    Explicit { generators: Vec<Vec<Element>> },
    #[serde(rename = "schreier")]
    Schreier,
    #[serde(rename = "dyadicD")]
    DyadicD { width: u8 },
    /// Finite subsets of one class.
    #[serde(rename = "partition")]
    Partition { classes: Vec<Vec<Element>> },
    #[serde(rename = "all")]
    All,
    #[serde(rename = "bounded")]
    Bounded { size: usize },
}

fn element(e: &Element, model: Option<&GroundModel>, width: Option<u8>) -> Result<u64> {
    match (e, model) {
        (Element::Index(i), None) => Ok(*i),
        (Element::Name(n), Some(m)) => Ok(m.point_id(n)? as u64),
        (Element::Name(n), None) => match width {
            Some(w) => {
                let leaf: Leaf = n.parse()?;
                if leaf.width() != w as usize {
                    return Err(Error::InvalidFamily(format!("leaf {n} does not have width {w}")));
                }
                Ok(leaf.bits())
            }
            None => Err(Error::InvalidFamily(format!(
                "element {n:?} is a name but no model is given"
            ))),
        },
        (Element::Index(i), Some(_)) => Err(Error::InvalidFamily(format!(
            "element {i} must be a point name when a model is given"
        ))),
    }
}

impl FamilySpec {
    /// Builds the family on its own ground set (naturals, leaves or indices).
    pub fn build(&self) -> Result<Family> {
        self.build_inner(None)
    }

    /// Builds the family on the points of `model`. Schreier sees point `i`
    /// as the natural `i + 1`; 𝒟 reads each point name as a leaf.
    pub fn build_on(&self, model: &GroundModel) -> Result<Family> {
        match self {
            FamilySpec::Schreier => {
                let labels = (1..=model.point_count() as u64).collect();
                Ok(Family::pullback(Family::Schreier, labels, true))
            }
            FamilySpec::DyadicD { width } => {
                let mut labels = Vec::with_capacity(model.point_count());
                for name in model.names() {
                    labels.push(element(&Element::Name(name.clone()), None, Some(*width))?);
                }
                Ok(Family::pullback(Family::DyadicD { width: *width }, labels, true))
            }
            _ => self.build_inner(Some(model)),
        }
    }

    fn build_inner(&self, model: Option<&GroundModel>) -> Result<Family> {
        let width = match self {
            FamilySpec::DyadicD { width } => Some(*width),
            _ => None,
        };
        let sets = |v: &Vec<Vec<Element>>| -> Result<Vec<Vec<u64>>> {
            v.iter()
                .map(|s| s.iter().map(|e| element(e, model, width)).collect())
                .collect()
        };
        Ok(match self {
            FamilySpec::Explicit { generators } => Family::explicit(sets(generators)?),
            FamilySpec::Schreier => Family::Schreier,
            FamilySpec::DyadicD { width } => Family::DyadicD { width: *width },
            FamilySpec::Partition { classes } => Family::partition(&sets(classes)?)?,
            FamilySpec::All => Family::All,
            FamilySpec::Bounded { size } => Family::Bounded(*size),
        })
    }
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PartitionSpec {
    pub parts: Vec<Vec<String>>,
}

impl PartitionSpec {
    pub fn build(&self, model: &GroundModel) -> Result<IndexedPartition> {
        let parts = self
            .parts
            .iter()
            .map(|p| model.point_set(p))
            .collect::<Result<Vec<_>>>()?;
        IndexedPartition::new(model, parts)
    }
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CoversSpec {
    pub covers: Vec<Vec<usize>>,
}

impl CoversSpec {
    pub fn build(&self, model: &GroundModel) -> Result<Vec<MeasurableSet>> {
        self.covers
            .iter()
            .map(|c| {
                let e: MeasurableSet = c.iter().copied().collect();
                model.check_blocks(&e)?;
                Ok(e)
            })
            .collect()
    }
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct IndicatorSpec {
    pub functionals: BTreeMap<String, Vec<String>>,
}

impl IndicatorSpec {
    pub fn build(&self, model: &GroundModel) -> Result<IndicatorFunctionModel> {
        let mut f = BTreeMap::new();
        for (name, pts) in &self.functionals {
            f.insert(name.clone(), model.point_set(pts)?);
        }
        IndicatorFunctionModel::new(model, f)
    }
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PieceSpec {
    pub blocks: Vec<usize>,
    pub tag: String,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TaggedSpec {
    pub pieces: Vec<PieceSpec>,
}

impl TaggedSpec {
    pub fn build(&self, model: &GroundModel) -> Result<TaggedFamily> {
        let pieces = self
            .pieces
            .iter()
            .map(|p| Ok((p.blocks.iter().copied().collect(), model.point_id(&p.tag)?)))
            .collect::<Result<Vec<_>>>()?;
        TaggedFamily::new(model, pieces)
    }
}

/// Point labels `φ` and the family on the labels.
#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TransversalSpec {
    pub labels: BTreeMap<String, u64>,
    pub class_family: FamilySpec,
}

impl TransversalSpec {
    pub fn build(&self, model: &GroundModel) -> Result<(TransversalSystem, Family)> {
        let mut labels = vec![None; model.point_count()];
        for (name, &l) in &self.labels {
            labels[model.point_id(name)?] = Some(l);
        }
        let labels = labels
            .into_iter()
            .enumerate()
            .map(|(p, l)| l.ok_or_else(|| Error::InvalidArgument(format!("point {} has no label", model.name(p)))))
            .collect::<Result<Vec<_>>>()?;
        Ok((TransversalSystem::new(model, labels)?, self.class_family.build()?))
    }
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ClassesSpec {
    pub classes: Vec<Vec<String>>,
}

impl ClassesSpec {
    pub fn build(&self, model: &GroundModel) -> Result<Vec<PointSet>> {
        self.classes.iter().map(|c| model.point_set(c)).collect()
    }
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CubeSpec {
    pub kappa: usize,
    pub classes: Vec<Vec<usize>>,
}

impl CubeSpec {
    pub fn build(self) -> Result<CubeModel> {
        CubeModel::new(self.kappa, self.classes)
    }
}

/// An orthonormal system, its groups `I_1, I_2, …` and the point-to-vector
/// injection.
#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OrthoSpec {
    pub dimension: usize,
    pub vectors: Vec<Vec<Rational>>,
    pub groups: Vec<Vec<usize>>,
    pub injection: BTreeMap<String, usize>,
}

impl OrthoSpec {
    pub fn build(self, model: &GroundModel) -> Result<(OrthoSystem, Vec<usize>)> {
        let mut inj = vec![None; model.point_count()];
        for (name, &v) in &self.injection {
            inj[model.point_id(name)?] = Some(v);
        }
        let inj = inj
            .into_iter()
            .enumerate()
            .map(|(p, v)| v.ok_or_else(|| Error::InvalidArgument(format!("point {} has no vector", model.name(p)))))
            .collect::<Result<Vec<_>>>()?;
        Ok((OrthoSystem::new(self.dimension, self.vectors, self.groups)?, inj))
    }
}

pub fn read_json<T: serde::de::DeserializeOwned>(path: &Path) -> Result<T> {
    let text = std::fs::read_to_string(path)?;
    serde_json::from_str(&text).map_err(|e| Error::Parse(format!("{}: {e}", path.display())))
}

/// One item per nonempty line; `#` starts a comment.
fn lines(text: &str) -> impl Iterator<Item = &str> {
    text.lines()
        .map(|l| l.split('#').next().unwrap_or("").trim())
        .filter(|l| !l.is_empty())
}

pub fn parse_leaves(text: &str) -> Result<Vec<Leaf>> {
    lines(text).map(str::parse).collect()
}

/// Nodes one per line; `-` is the root.
pub fn parse_nodes(text: &str) -> Result<Vec<TreeNode>> {
    lines(text).map(str::parse).collect()
}

/// `"1,2,3"` or `"1 2 3"`.
pub fn parse_naturals(text: &str) -> Result<Vec<u64>> {
    text.split(|c: char| c == ',' || c.is_whitespace())
        .filter(|s| !s.is_empty())
        .map(|s| {
            s.parse()
                .map_err(|_| Error::Parse(format!("not a natural number: {s:?}")))
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rational::q;

    #[test]
    fn model_round_trip() {
        let text = r#"{"blocks":[{"measure":"1/2","points":["a"]},{"measure":"1/2","points":["b","c"]}]}"#;
        let spec: ModelSpec = serde_json::from_str(text).unwrap();
        let m = spec.build().unwrap();
        assert_eq!(m.point_count(), 3);
        assert_eq!(*m.block_measure(1), q(1, 2));
        let back = serde_json::to_string(&ModelSpec::from_model(&m)).unwrap();
        assert_eq!(back, text);
        assert!(serde_json::from_str::<ModelSpec>(r#"{"blocks":[{"measure":0.5}]}"#).is_err());
    }

    #[test]
    fn families() {
        let m = GroundModel::uniform(vec![vec!["a", "b"], vec!["c"]]).unwrap();
        let f: FamilySpec = serde_json::from_str(r#"{"kind":"explicit","generators":[["a","c"]]}"#).unwrap();
        let fam = f.build_on(&m).unwrap();
        assert!(fam.contains(&[0, 2]));
        assert!(!fam.contains(&[0, 1]));
        assert!(f.build().is_err());

        let s: FamilySpec = serde_json::from_str(r#"{"kind":"schreier"}"#).unwrap();
        let fam = s.build_on(&m).unwrap();
        // points 0,1,2 are naturals 1,2,3
        assert!(fam.contains(&[1, 2]));
        assert!(!fam.contains(&[0, 1]));

        let d: FamilySpec = serde_json::from_str(r#"{"kind":"dyadicD","width":3}"#).unwrap();
        let leaves = GroundModel::uniform(vec![vec!["000", "001"], vec!["100"]]).unwrap();
        assert!(d.build_on(&leaves).unwrap().contains(&[0, 1]));
        assert!(d.build_on(&m).is_err());

        let p: FamilySpec = serde_json::from_str(r#"{"kind":"partition","classes":[[1,2],[3]]}"#).unwrap();
        assert!(p.build().unwrap().contains(&[1, 2]));
        assert!(serde_json::from_str::<FamilySpec>(r#"{"kind":"nope"}"#).is_err());
    }

    #[test]
    fn text_formats() {
        assert_eq!(parse_naturals("1,2, 3\n4").unwrap(), vec![1, 2, 3, 4]);
        assert!(parse_naturals("1,x").is_err());
        let l = parse_leaves("000\n# comment\n\n101\n").unwrap();
        assert_eq!(l.len(), 2);
        let n = parse_nodes("-\n0\n01").unwrap();
        assert_eq!(n[0], TreeNode::ROOT);
        assert_eq!(n.len(), 3);
    }
}
