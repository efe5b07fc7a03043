use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{read_file, ClassifierError, ConfigError};
use crate::schedulers::PolicyTag;

/// Tree file format version written by [`DecisionTree::save`].
pub const TREE_SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum TreeNode {
    /// Samples with `features[feature] < threshold` go left.
    Split {
        feature: usize,
        threshold: f64,
        left: usize,
        right: usize,
    },
    Leaf { label: PolicyTag },
}

/// Binary decision tree over counter vectors. Node 0 is the root and every
/// child index is larger than its parent's.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DecisionTree {
    pub schema_version: u32,
    pub max_depth: usize,
    /// Feature indices the tree was allowed to split on.
    pub features: Vec<usize>,
    #[serde(default)]
    pub feature_names: Vec<String>,
    pub nodes: Vec<TreeNode>,
}

impl DecisionTree {
    /// Single-leaf tree that always answers `label`.
    pub fn constant(label: PolicyTag) -> Self {
        DecisionTree {
            schema_version: TREE_SCHEMA_VERSION,
            max_depth: 0,
            features: Vec::new(),
            feature_names: Vec::new(),
            nodes: vec![TreeNode::Leaf { label }],
        }
    }

    pub fn classify(&self, features: &[f64]) -> Result<PolicyTag, ClassifierError> {
        let mut at = 0;
        loop {
            match self.nodes[at] {
                TreeNode::Leaf { label } => return Ok(label),
                TreeNode::Split {
                    feature,
                    threshold,
                    left,
                    right,
                } => {
                    let x = *features.get(feature).ok_or(ClassifierError::MissingFeature {
                        index: feature,
                        width: features.len(),
                    })?;
                    at = if x < threshold { left } else { right };
                }
            }
        }
    }

    /// Largest feature index any split reads.
    pub fn max_feature_index(&self) -> Option<usize> {
        self.nodes
            .iter()
            .filter_map(|n| match n {
                TreeNode::Split { feature, .. } => Some(*feature),
                TreeNode::Leaf { .. } => None,
            })
            .max()
    }

    /// Distinct feature indices used by splits, ascending.
    pub fn used_features(&self) -> Vec<usize> {
        let mut used: Vec<usize> = self
            .nodes
            .iter()
            .filter_map(|n| match n {
                TreeNode::Split { feature, .. } => Some(*feature),
                TreeNode::Leaf { .. } => None,
            })
            .collect();
        used.sort_unstable();
        used.dedup();
        used
    }

    /// Length of the longest root-to-leaf path, in edges.
    pub fn depth(&self) -> usize {
        fn walk(nodes: &[TreeNode], at: usize) -> usize {
            match nodes[at] {
                TreeNode::Leaf { .. } => 0,
                TreeNode::Split { left, right, .. } => {
                    1 + walk(nodes, left).max(walk(nodes, right))
                }
            }
        }
        walk(&self.nodes, 0)
    }

    pub fn leaf_count(&self) -> usize {
        self.nodes
            .iter()
            .filter(|n| matches!(n, TreeNode::Leaf { .. }))
            .count()
    }

    fn check(&self) -> Result<(), ClassifierError> {
        if self.schema_version != TREE_SCHEMA_VERSION {
            return Err(ClassifierError::Version {
                found: self.schema_version,
                expected: TREE_SCHEMA_VERSION,
            });
        }
        if self.nodes.is_empty() {
            return Err(ClassifierError::Malformed("tree has no nodes".into()));
        }
        let mut parents = vec![0usize; self.nodes.len()];
        for (i, node) in self.nodes.iter().enumerate() {
            if let TreeNode::Split {
                threshold,
                left,
                right,
                ..
            } = *node
            {
                if !threshold.is_finite() {
                    return Err(ClassifierError::Malformed(format!(
                        "node {i} has a non-finite threshold"
                    )));
                }
                for child in [left, right] {
                    if child <= i || child >= self.nodes.len() {
                        return Err(ClassifierError::Malformed(format!(
                            "node {i} has invalid child {child}"
                        )));
                    }
                    parents[child] += 1;
                }
            }
        }
        if parents[0] != 0 || parents[1..].iter().any(|&p| p != 1) {
            return Err(ClassifierError::Malformed(
                "nodes do not form a single tree".into(),
            ));
        }
        let depth = self.depth();
        if depth > self.max_depth {
            return Err(ClassifierError::Malformed(format!(
                "depth {depth} exceeds declared max_depth {}",
                self.max_depth
            )));
        }
        Ok(())
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("tree serializes")
    }

    pub fn from_toml(text: &str) -> Result<Self, ClassifierError> {
        #[derive(Deserialize)]
        struct Header {
            schema_version: u32,
        }
        let header: Header = toml::from_str(text)
            .map_err(|e| ClassifierError::Malformed(e.message().to_string()))?;
        if header.schema_version != TREE_SCHEMA_VERSION {
            return Err(ClassifierError::Version {
                found: header.schema_version,
                expected: TREE_SCHEMA_VERSION,
            });
        }
        let tree: DecisionTree = toml::from_str(text)
            .map_err(|e| ClassifierError::Malformed(e.message().to_string()))?;
        tree.check()?;
        Ok(tree)
    }

    pub fn save(&self, path: &Path) -> Result<(), ClassifierError> {
        std::fs::write(path, self.to_toml()).map_err(|source| {
            ClassifierError::Config(ConfigError::Io {
                path: path.to_path_buf(),
                source,
            })
        })
    }

    pub fn load(path: &Path) -> Result<Self, ClassifierError> {
        Self::from_toml(&read_file(path)?)
    }
}
