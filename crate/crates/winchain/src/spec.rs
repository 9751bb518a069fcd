//! Workload specification files.
//!
//! ```json
//! {
//!   "table": "emptab.wct",
//!   "functions": [
//!     {"name": "rank_in_dept", "kind": "rank",
//!      "partition_by": ["dept"], "order_by": ["salary desc"]}
//!   ],
//!   "scheme": "cso",
//!   "mem_blocks": 64,
//!   "input": {"x": [], "y": ["dept"], "grouped": false}
//! }
//! ```
//!
//! `input` declares the physical order of the table; when absent the order
//! recorded in the statistics sidecar is used.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use winchain_core::optimizer::Scheme;
use winchain_core::{AttrId, AttrSeq, FuncKind, SegProp, WindowFunc, Workload};

use crate::error::{EngineError, Result};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FuncSpec {
    pub name: String,
    #[serde(default = "default_kind")]
    pub kind: String,
    #[serde(default)]
    pub partition_by: Vec<String>,
    #[serde(default)]
    pub order_by: Vec<String>,
}

fn default_kind() -> String {
    "rank".into()
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WorkloadSpec {
    #[serde(default)]
    pub table: Option<PathBuf>,
    pub functions: Vec<FuncSpec>,
    #[serde(default)]
    pub scheme: Option<Scheme>,
    #[serde(default)]
    pub mem_blocks: Option<usize>,
    #[serde(default)]
    pub input: Option<SegProp>,
}

impl FuncSpec {
    pub fn to_func(&self) -> Result<WindowFunc> {
        let part = AttrSeq::new(self.partition_by.iter().map(|a| AttrId::new(a.trim())))?;
        let order = AttrSeq::new(
            self.order_by
                .iter()
                .map(|a| AttrId::parse(a))
                .collect::<winchain_core::Result<Vec<_>>>()?,
        )?;
        Ok(WindowFunc::new(&self.name, part, order, FuncKind::parse(&self.kind)?)?)
    }

    pub fn from_func(wf: &WindowFunc) -> Self {
        FuncSpec {
            name: wf.name().to_owned(),
            kind: wf.kind().to_string(),
            partition_by: wf.partition_by().iter().map(|a| a.name().to_owned()).collect(),
            order_by: wf.wok().iter().map(|a| a.to_string()).collect(),
        }
    }
}

impl WorkloadSpec {
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| EngineError::format(format!("cannot read spec {}: {e}", path.display())))?;
        let mut spec: WorkloadSpec =
            serde_json::from_str(&text).map_err(|e| EngineError::format(format!("{}: {e}", path.display())))?;
        // Table paths are relative to the spec file.
        if let (Some(t), Some(dir)) = (&spec.table, path.parent()) {
            if t.is_relative() {
                spec.table = Some(dir.join(t));
            }
        }
        Ok(spec)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("spec serializes")
    }

    pub fn workload(&self) -> Result<Workload> {
        let funcs = self
            .functions
            .iter()
            .map(FuncSpec::to_func)
            .collect::<Result<Vec<_>>>()?;
        Ok(Workload::new(funcs)?)
    }

    pub fn from_workload(workload: &Workload) -> Self {
        WorkloadSpec {
            table: None,
            functions: workload.funcs().iter().map(FuncSpec::from_func).collect(),
            scheme: None,
            mem_blocks: None,
            input: None,
        }
    }
}
