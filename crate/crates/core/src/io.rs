// SPDX-License-Identifier: Apache-2.0

//! JSON design and result files.

use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{DesignError, Error, ModelError};
use crate::model::{
    evaluate, BasePpa, Block, Design, Die, HardIp, Net, ObjectiveBreakdown, ObjectiveConfig, PlacedBlock, Technology,
};
use crate::orchestrator::{LogEntry, Method, MmfpSolution, RunConfig};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TechnologyEntry {
    pub id: String,
    pub scale_to_oldest: f64,
    pub defect_density: f64,
    pub alpha: f64,
    pub cost_per_area: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PpaEntry {
    pub area: f64,
    pub power: f64,
    /// Total negative slack magnitude in ns.
    pub tns: f64,
    pub kappa: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct HardIpEntry {
    pub tech: String,
    pub ratio: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BlockEntry {
    pub id: String,
    pub ppa: BTreeMap<String, PpaEntry>,
    pub ratios: Vec<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub hard_ip: Option<HardIpEntry>,
}

fn unit_weight() -> f64 {
    1.0
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NetEntry {
    pub id: String,
    pub pins: Vec<String>,
    #[serde(default = "unit_weight")]
    pub weight: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DieEntry {
    pub id: String,
    pub tech: String,
}

/// On-disk design; pins, dies and PPA tables refer to other entries by id.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DesignFile {
    pub technologies: Vec<TechnologyEntry>,
    pub blocks: Vec<BlockEntry>,
    #[serde(default)]
    pub nets: Vec<NetEntry>,
    pub dies: Vec<DieEntry>,
}

impl DesignFile {
    pub fn from_design(d: &Design) -> Self {
        let tid = |t: usize| d.technologies[t].id.clone();
        Self {
            technologies: d
                .technologies
                .iter()
                .map(|t| TechnologyEntry {
                    id: t.id.clone(),
                    scale_to_oldest: t.scale_to_oldest,
                    defect_density: t.defect_density,
                    alpha: t.alpha,
                    cost_per_area: t.cost_per_area,
                })
                .collect(),
            blocks: d
                .blocks
                .iter()
                .map(|b| BlockEntry {
                    id: b.id.clone(),
                    ppa: b
                        .ppa
                        .iter()
                        .enumerate()
                        .filter_map(|(t, p)| {
                            p.map(|p| {
                                (
                                    tid(t),
                                    PpaEntry {
                                        area: p.area,
                                        power: p.power,
                                        tns: p.tns_magnitude,
                                        kappa: p.ratio_penalty,
                                    },
                                )
                            })
                        })
                        .collect(),
                    ratios: b.ratio_options.clone(),
                    hard_ip: b.hard_ip.map(|h| HardIpEntry {
                        tech: tid(h.tech),
                        ratio: h.ratio,
                    }),
                })
                .collect(),
            nets: d
                .nets
                .iter()
                .map(|n| NetEntry {
                    id: n.id.clone(),
                    pins: n.pins.iter().map(|&p| d.blocks[p].id.clone()).collect(),
                    weight: n.weight,
                })
                .collect(),
            dies: d
                .dies
                .iter()
                .map(|x| DieEntry {
                    id: x.id.clone(),
                    tech: tid(x.tech),
                })
                .collect(),
        }
    }

    /// Resolves ids and validates; `path` only labels diagnostics.
    pub fn into_design(self, path: &str) -> Result<Design, DesignError> {
        let schema = |reason: String| DesignError::Schema {
            path: path.to_string(),
            reason,
        };
        let integrity = |reason: String| DesignError::Integrity {
            path: path.to_string(),
            reason,
        };
        let unit = self.technologies.iter().filter(|t| t.scale_to_oldest == 1.0).count();
        if unit != 1 {
            return Err(schema(format!(
                "technologies: exactly one entry must have scale_to_oldest = 1, found {unit}"
            )));
        }
        let tech_index: BTreeMap<&str, usize> = self.technologies.iter().enumerate().map(|(i, t)| (t.id.as_str(), i)).collect();
        let block_index: BTreeMap<&str, usize> = self.blocks.iter().enumerate().map(|(i, b)| (b.id.as_str(), i)).collect();
        let nt = self.technologies.len();

        let mut blocks = Vec::with_capacity(self.blocks.len());
        for (bi, b) in self.blocks.iter().enumerate() {
            let mut ppa = vec![None; nt];
            for (t, e) in &b.ppa {
                let ti = *tech_index
                    .get(t.as_str())
                    .ok_or_else(|| integrity(format!("blocks[{bi}] `{}`: ppa references unknown technology `{t}`", b.id)))?;
                ppa[ti] = Some(BasePpa {
                    area: e.area,
                    power: e.power,
                    tns_magnitude: e.tns,
                    ratio_penalty: e.kappa,
                });
            }
            let hard_ip = match &b.hard_ip {
                Some(h) => Some(HardIp {
                    tech: *tech_index.get(h.tech.as_str()).ok_or_else(|| {
                        integrity(format!("blocks[{bi}] `{}`: hard_ip references unknown technology `{}`", b.id, h.tech))
                    })?,
                    ratio: h.ratio,
                }),
                None => None,
            };
            blocks.push(Block {
                id: b.id.clone(),
                ppa,
                ratio_options: b.ratios.clone(),
                hard_ip,
            });
        }
        let mut nets = Vec::with_capacity(self.nets.len());
        for (ni, n) in self.nets.iter().enumerate() {
            let mut pins = Vec::with_capacity(n.pins.len());
            for p in &n.pins {
                pins.push(
                    *block_index
                        .get(p.as_str())
                        .ok_or_else(|| integrity(format!("nets[{ni}] `{}`: pin `{p}` names no block", n.id)))?,
                );
            }
            nets.push(Net {
                id: n.id.clone(),
                pins,
                weight: n.weight,
            });
        }
        let mut dies = Vec::with_capacity(self.dies.len());
        for (di, d) in self.dies.iter().enumerate() {
            dies.push(Die {
                id: d.id.clone(),
                tech: *tech_index
                    .get(d.tech.as_str())
                    .ok_or_else(|| integrity(format!("dies[{di}] `{}`: unknown technology `{}`", d.id, d.tech)))?,
            });
        }
        let technologies = self
            .technologies
            .into_iter()
            .map(|t| Technology {
                id: t.id,
                scale_to_oldest: t.scale_to_oldest,
                defect_density: t.defect_density,
                alpha: t.alpha,
                cost_per_area: t.cost_per_area,
            })
            .collect();
        Design::new(technologies, blocks, nets, dies).map_err(|e| match e {
            ModelError::MissingPpa { .. } => integrity(e.to_string()),
            other => schema(other.to_string()),
        })
    }
}

fn parse_json<T: serde::de::DeserializeOwned>(text: &str, path: &str) -> Result<T, DesignError> {
    let de = &mut serde_json::Deserializer::from_str(text);
    serde_path_to_error::deserialize(de).map_err(|e| {
        let field = e.path().to_string();
        let inner = e.into_inner();
        let reason = if field == "." { inner.to_string() } else { format!("at `{field}`: {inner}") };
        if inner.is_data() {
            DesignError::Schema {
                path: path.to_string(),
                reason,
            }
        } else {
            DesignError::Parse {
                path: path.to_string(),
                reason,
            }
        }
    })
}

pub fn design_from_str(text: &str, label: &str) -> Result<Design, DesignError> {
    parse_json::<DesignFile>(text, label)?.into_design(label)
}

pub fn load_design(path: &Path) -> Result<Design, DesignError> {
    let label = path.display().to_string();
    let text = std::fs::read_to_string(path).map_err(|source| DesignError::Io {
        path: label.clone(),
        source,
    })?;
    design_from_str(&text, &label)
}

/// Canonical JSON text of a design.
pub fn design_to_string(d: &Design) -> String {
    let mut s = serde_json::to_string_pretty(&DesignFile::from_design(d)).expect("design serializes");
    s.push('\n');
    s
}

pub fn save_design(d: &Design, path: &Path) -> Result<(), DesignError> {
    std::fs::write(path, design_to_string(d)).map_err(|source| DesignError::Io {
        path: path.display().to_string(),
        source,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlacedEntry {
    pub id: String,
    pub die: String,
    pub tech: String,
    pub ratio: f64,
    pub x: f64,
    pub y: f64,
    pub w: f64,
    pub h: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DieResult {
    pub id: String,
    pub tech: String,
    pub origin: (f64, f64),
    pub width: f64,
    pub height: f64,
    pub area: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResultFile {
    pub format: String,
    pub method: Method,
    pub seed: u64,
    pub config: RunConfig,
    pub z: f64,
    pub area_min: f64,
    pub area_max: f64,
    pub breakdown: ObjectiveBreakdown,
    pub dies: Vec<DieResult>,
    pub blocks: Vec<PlacedEntry>,
    pub steps: usize,
    pub refinements_tried: usize,
    pub refinements_applied: usize,
    pub log: Vec<LogEntry>,
}

pub const RESULT_FORMAT: &str = "hfp-result-v1";

impl ResultFile {
    pub fn new(design: &Design, sol: &MmfpSolution, cfg: &RunConfig) -> Self {
        let dies = design
            .dies
            .iter()
            .enumerate()
            .map(|(d, die)| DieResult {
                id: die.id.clone(),
                tech: design.technologies[die.tech].id.clone(),
                origin: sol.origins[d],
                width: sol.packings[d].width,
                height: sol.packings[d].height,
                area: sol.breakdown.die_areas[d],
            })
            .collect();
        let blocks = sol
            .placed
            .iter()
            .enumerate()
            .map(|(b, p)| PlacedEntry {
                id: design.blocks[b].id.clone(),
                die: design.dies[p.die].id.clone(),
                tech: design.technologies[p.tech].id.clone(),
                ratio: p.ratio,
                x: p.x,
                y: p.y,
                w: p.w,
                h: p.h,
            })
            .collect();
        Self {
            format: RESULT_FORMAT.into(),
            method: sol.method,
            seed: sol.seed,
            config: cfg.clone(),
            z: sol.window.z,
            area_min: sol.window.min,
            area_max: sol.window.max,
            breakdown: sol.breakdown.clone(),
            dies,
            blocks,
            steps: sol.steps,
            refinements_tried: sol.refinements_tried,
            refinements_applied: sol.refinements_applied,
            log: sol.log.clone(),
        }
    }

    /// Recomputes the breakdown from the recorded placement alone. Die extents
    /// are rebuilt from the block rectangles and die origins.
    pub fn reevaluate(&self, design: &Design) -> Result<ObjectiveBreakdown, Error> {
        let integrity = |reason: String| {
            Error::from(DesignError::Integrity {
                path: "result".into(),
                reason,
            })
        };
        if self.blocks.len() != design.blocks.len() || self.dies.len() != design.dies.len() {
            return Err(integrity("result does not match the design".into()));
        }
        let die_ix = |id: &str| design.dies.iter().position(|d| d.id == id);
        let tech_ix = |id: &str| design.technologies.iter().position(|t| t.id == id);
        let m = self.config.objective.die_margin;
        let mut ext = vec![(0.0f64, 0.0f64); design.dies.len()];
        let mut placed = Vec::with_capacity(self.blocks.len());
        for (b, e) in self.blocks.iter().enumerate() {
            if e.id != design.blocks[b].id {
                return Err(integrity(format!("block #{b} is `{}`, expected `{}`", e.id, design.blocks[b].id)));
            }
            let die = die_ix(&e.die).ok_or_else(|| integrity(format!("block `{}`: unknown die `{}`", e.id, e.die)))?;
            let tech = tech_ix(&e.tech).ok_or_else(|| integrity(format!("block `{}`: unknown technology `{}`", e.id, e.tech)))?;
            let (ox, oy) = self.dies[die].origin;
            ext[die].0 = ext[die].0.max(e.x + e.w - ox - m);
            ext[die].1 = ext[die].1.max(e.y + e.h - oy - m);
            placed.push(PlacedBlock {
                die,
                tech,
                ratio: e.ratio,
                x: e.x,
                y: e.y,
                w: e.w,
                h: e.h,
            });
        }
        let extents: Vec<Option<(f64, f64)>> = ext.into_iter().map(Some).collect();
        let window = crate::model::AreaWindow {
            z: self.z,
            min: self.area_min,
            max: self.area_max,
        };
        let cfg: ObjectiveConfig = self.config.objective;
        Ok(evaluate(design, &cfg, &window, &placed, &extents)?)
    }

    /// Relative difference between the recorded and re-evaluated objective.
    pub fn self_check(&self, design: &Design) -> Result<f64, Error> {
        let f = self.reevaluate(design)?.f;
        Ok((f - self.breakdown.f).abs() / self.breakdown.f.abs().max(1e-300))
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("result serializes");
        s.push('\n');
        s
    }

    pub fn from_json(text: &str, label: &str) -> Result<Self, DesignError> {
        parse_json(text, label)
    }
}
