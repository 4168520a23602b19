//! Durable model serialization.
//!
//! Models are stored as canonical UTF-8 JSON: object keys sorted, nodes
//! ordered by id, edges by endpoint pair, floats in shortest round-trip
//! decimal form. Saving the same network twice yields byte-identical files.
//! Every load re-validates the structural invariants before a network is
//! returned, and records which extractor variant and palette produced the
//! training vectors so a model is never applied to mismatched features.

use std::collections::BTreeMap;
use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::binviz::palette_hash;
use crate::error::{Error, Result};
use crate::features::ExtractorVariant;
use crate::soinn::{Node, SoinnNetwork, TrainParams};

/// Current model file format version.
pub const FORMAT_VERSION: u64 = 1;

/// Feature-semantics fingerprint bound to a model.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Provenance {
    /// Extractor variant name, e.g. `rgb332`.
    pub extractor: String,
    /// Palette digest from [`palette_hash`].
    pub palette: String,
}

impl Provenance {
    pub fn current(variant: ExtractorVariant) -> Self {
        Provenance {
            extractor: variant.name().to_string(),
            palette: palette_hash(),
        }
    }
}

#[derive(Serialize, Deserialize)]
struct ModelFile {
    format_version: u64,
    dimension: usize,
    params: TrainParams,
    steps_seen: u64,
    next_node_id: u64,
    nodes: Vec<NodeRecord>,
    edges: Vec<EdgeRecord>,
    provenance: Provenance,
}

#[derive(Serialize, Deserialize)]
struct NodeRecord {
    id: u64,
    weight: Vec<f64>,
    win_count: u64,
    label_votes: BTreeMap<String, u64>,
}

#[derive(Serialize, Deserialize)]
struct EdgeRecord {
    a: u64,
    b: u64,
    age: u32,
}

/// Write the network to `path` in canonical form.
pub fn save(net: &SoinnNetwork, provenance: &Provenance, path: &Path) -> Result<()> {
    let file = ModelFile {
        format_version: FORMAT_VERSION,
        dimension: net.dimension(),
        params: net.params().clone(),
        steps_seen: net.steps_seen(),
        next_node_id: net.next_id(),
        nodes: net
            .nodes()
            .map(|n| NodeRecord {
                id: n.id(),
                weight: n.weight().to_vec(),
                win_count: n.win_count(),
                label_votes: n.label_votes().clone(),
            })
            .collect(),
        edges: net
            .edges()
            .map(|((a, b), age)| EdgeRecord { a, b, age })
            .collect(),
        provenance: provenance.clone(),
    };
    // Round-tripping through Value sorts object keys (serde_json maps are
    // BTreeMaps), which gives the canonical form.
    let value = serde_json::to_value(&file)?;
    let mut text = serde_json::to_string_pretty(&value)?;
    text.push('\n');
    fs::write(path, text).map_err(|e| Error::io(path, e))
}

/// Load a network, validating the format version and every structural
/// invariant before returning.
pub fn load(path: &Path) -> Result<(SoinnNetwork, Provenance)> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let value: serde_json::Value = serde_json::from_str(&text)?;
    let found = value
        .get("format_version")
        .and_then(serde_json::Value::as_u64)
        .ok_or_else(|| Error::ModelIntegrity("missing format_version".into()))?;
    if found != FORMAT_VERSION {
        return Err(Error::ModelVersion {
            found,
            supported: FORMAT_VERSION,
        });
    }
    let file: ModelFile = serde_json::from_value(value)?;

    let nodes = file
        .nodes
        .into_iter()
        .map(|r| Node::new(r.id, r.weight, r.win_count, r.label_votes))
        .collect();
    let edges = file
        .edges
        .into_iter()
        .map(|r| ((r.a, r.b), r.age))
        .collect();
    let net = SoinnNetwork::from_parts(
        file.dimension,
        nodes,
        edges,
        file.params,
        file.steps_seen,
        Some(file.next_node_id),
    )?;
    Ok((net, file.provenance))
}

/// Load a model, verify its palette binding against this build, and return
/// the extractor variant it was trained with.
pub fn load_current(path: &Path) -> Result<(SoinnNetwork, Provenance, ExtractorVariant)> {
    let (net, provenance) = load(path)?;
    let variant: ExtractorVariant = provenance.extractor.parse()?;
    let current = palette_hash();
    if provenance.palette != current {
        return Err(Error::PaletteMismatch {
            model: provenance.palette,
            library: current,
        });
    }
    Ok((net, provenance, variant))
}

/// Load a model for a session configured with `variant`, rejecting it when
/// the stored extractor or palette disagrees.
pub fn load_for_session(
    path: &Path,
    variant: ExtractorVariant,
) -> Result<(SoinnNetwork, Provenance)> {
    let (net, provenance) = load(path)?;
    if provenance.extractor != variant.name() {
        return Err(Error::ExtractorMismatch {
            model: provenance.extractor,
            session: variant.name().to_string(),
        });
    }
    let current = palette_hash();
    if provenance.palette != current {
        return Err(Error::PaletteMismatch {
            model: provenance.palette,
            library: current,
        });
    }
    Ok((net, provenance))
}
