//! The JSON instance document and CSV sample ingestion.

use std::path::Path;

use cmc_core::dist::empirical_from_samples;
use cmc_core::{JointPmf, OrderKind, Poset};
use serde::{Deserialize, Serialize};

use crate::Failure;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum NamedOrder {
    Total,
    Antichain,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum OrderSpec {
    Named(NamedOrder),
    Pairs { pairs: Vec<(usize, usize)> },
}

impl Default for OrderSpec {
    fn default() -> Self {
        OrderSpec::Named(NamedOrder::Total)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SideSpec {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub labels: Option<Vec<String>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub values: Option<Vec<f64>>,
    #[serde(default)]
    pub order: OrderSpec,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InstanceFile {
    pub x: SideSpec,
    pub y: SideSpec,
    pub pmf: Vec<Vec<f64>>,
}

pub struct Instance {
    pub pmf: JointPmf,
    pub x_order: Poset,
    pub y_order: Poset,
}

fn side_labels(side: &SideSpec, len: usize) -> Vec<String> {
    side.labels
        .clone()
        .unwrap_or_else(|| (0..len).map(|i| i.to_string()).collect())
}

fn side_order(side: &SideSpec, labels: Vec<String>) -> cmc_core::Result<Poset> {
    match &side.order {
        OrderSpec::Named(NamedOrder::Total) => Poset::total(labels),
        OrderSpec::Named(NamedOrder::Antichain) => Poset::antichain(labels),
        OrderSpec::Pairs { pairs } => Poset::from_pairs(labels, pairs, OrderKind::Explicit),
    }
}

impl InstanceFile {
    pub fn read(path: &Path) -> Result<Self, Failure> {
        let text = std::fs::read_to_string(path).map_err(|e| Failure::input(format!("{}: {e}", path.display())))?;
        serde_json::from_str(&text).map_err(|e| Failure::input(format!("{}: {e}", path.display())))
    }

    pub fn resolve(&self) -> Result<Instance, Failure> {
        let m = self.pmf.len();
        let n = self.pmf.first().map_or(0, Vec::len);
        let (xl, yl) = (side_labels(&self.x, m), side_labels(&self.y, n));
        let pmf = JointPmf::new(xl.clone(), yl.clone(), self.pmf.clone())?
            .with_values(self.x.values.clone(), self.y.values.clone())?;
        Ok(Instance {
            x_order: side_order(&self.x, xl)?,
            y_order: side_order(&self.y, yl)?,
            pmf,
        })
    }

    /// Totally ordered instance carrying the pmf's labels and values.
    pub fn from_pmf(pmf: &JointPmf) -> Self {
        let side = |labels: &[String], values: Option<&[f64]>| SideSpec {
            labels: Some(labels.to_vec()),
            values: values.map(<[f64]>::to_vec),
            order: OrderSpec::default(),
        };
        InstanceFile {
            x: side(pmf.x_labels(), pmf.x_values()),
            y: side(pmf.y_labels(), pmf.y_values()),
            pmf: pmf.to_rows(),
        }
    }
}

/// Reads `x,y` samples and returns their empirical pmf.
pub fn read_samples(path: &Path) -> Result<JointPmf, Failure> {
    let mut reader = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_path(path)
        .map_err(|e| Failure::input(format!("{}: {e}", path.display())))?;
    let header = reader
        .headers()
        .map_err(|e| Failure::input(format!("{}: {e}", path.display())))?
        .clone();
    if header.len() != 2 || &header[0] != "x" || &header[1] != "y" {
        return Err(Failure::input(format!(
            "{}: expected header \"x,y\", found {:?}",
            path.display(),
            header.iter().collect::<Vec<_>>().join(",")
        )));
    }
    let mut samples = Vec::new();
    for (line, record) in reader.records().enumerate() {
        let record = record.map_err(|e| Failure::input(format!("{}: {e}", path.display())))?;
        let cell = |k: usize| -> Result<f64, Failure> {
            let raw = &record[k];
            raw.parse::<f64>()
                .ok()
                .filter(|v| v.is_finite())
                .ok_or_else(|| Failure::input(format!("{}: row {}: {raw:?} is not a finite number", path.display(), line + 1)))
        };
        samples.push((cell(0)?, cell(1)?));
    }
    Ok(empirical_from_samples(&samples)?)
}
