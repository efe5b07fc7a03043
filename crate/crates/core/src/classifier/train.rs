//! Gini-impurity tree induction.
//!
//! Growth is breadth-first over presorted feature columns, so each level
//! costs one linear pass per feature regardless of how many nodes are open.

use super::dataset::TrainingSample;
use super::tree::{DecisionTree, TreeNode, TREE_SCHEMA_VERSION};
use crate::error::ClassifierError;
use crate::schedulers::PolicyTag;
use crate::sweep::par_map;

/// Smallest impurity decrease worth a split.
const MIN_GAIN: f64 = 1e-12;

/// Depth of the reference tree used for feature ranking.
pub const RANKING_DEPTH: usize = 16;

#[derive(Debug, Clone, Copy, Default)]
struct Counts {
    fast: usize,
    slow: usize,
}

impl Counts {
    fn add(&mut self, tag: PolicyTag) {
        match tag {
            PolicyTag::Fast => self.fast += 1,
            PolicyTag::Slow => self.slow += 1,
        }
    }
    fn total(self) -> usize {
        self.fast + self.slow
    }
    fn gini(self) -> f64 {
        let n = self.total() as f64;
        if n == 0.0 {
            return 0.0;
        }
        let (f, s) = (self.fast as f64 / n, self.slow as f64 / n);
        1.0 - f * f - s * s
    }
    /// Majority label, ties to fast.
    fn majority(self) -> PolicyTag {
        if self.slow > self.fast {
            PolicyTag::Slow
        } else {
            PolicyTag::Fast
        }
    }
}

#[derive(Debug, Clone, Copy)]
struct Split {
    feature: usize,
    threshold: f64,
    gain: f64,
}

struct Grower<'a> {
    samples: &'a [TrainingSample],
    tags: Vec<PolicyTag>,
    /// Per candidate feature, sample indices sorted by that feature.
    sorted: Vec<(usize, Vec<usize>)>,
}

impl<'a> Grower<'a> {
    fn new(samples: &'a [TrainingSample], features: &[usize]) -> Result<Self, ClassifierError> {
        if samples.is_empty() {
            return Err(ClassifierError::EmptySamples);
        }
        let width = features.iter().max().map_or(0, |m| m + 1);
        let tags = samples
            .iter()
            .map(TrainingSample::tag)
            .collect::<Result<Vec<_>, _>>()?;
        for s in samples {
            if s.features.len() < width {
                return Err(ClassifierError::MissingFeature {
                    index: width - 1,
                    width: s.features.len(),
                });
            }
            if let Some(&f) = features.iter().find(|&&f| !s.features[f].is_finite()) {
                return Err(ClassifierError::Malformed(format!(
                    "non-finite value for feature {f} in sample {}",
                    s.decision
                )));
            }
        }
        let mut features = features.to_vec();
        features.sort_unstable();
        features.dedup();
        let sorted = par_map(&features, |&f| {
            let mut order: Vec<usize> = (0..samples.len()).collect();
            order.sort_by(|&a, &b| samples[a].features[f].total_cmp(&samples[b].features[f]));
            (f, order)
        });
        Ok(Grower {
            samples,
            tags,
            sorted,
        })
    }

    /// Best split per open node for one feature column.
    fn scan(
        &self,
        feature: usize,
        order: &[usize],
        node_of: &[Option<usize>],
        totals: &[Counts],
    ) -> Vec<Option<Split>> {
        let open = totals.len();
        let mut left = vec![Counts::default(); open];
        let mut prev = vec![f64::NAN; open];
        let mut best: Vec<Option<Split>> = vec![None; open];
        for &i in order {
            let Some(k) = node_of[i] else { continue };
            let x = self.samples[i].features[feature];
            let p = prev[k];
            if !p.is_nan() && x > p {
                let l = left[k];
                let t = totals[k];
                let r = Counts {
                    fast: t.fast - l.fast,
                    slow: t.slow - l.slow,
                };
                let n = t.total() as f64;
                let weighted =
                    (l.total() as f64 * l.gini() + r.total() as f64 * r.gini()) / n;
                let gain = t.gini() - weighted;
                if gain > MIN_GAIN && best[k].is_none_or(|b| gain > b.gain) {
                    let mut threshold = p + (x - p) / 2.0;
                    if threshold <= p {
                        threshold = x;
                    }
                    best[k] = Some(Split {
                        feature,
                        threshold,
                        gain,
                    });
                }
            }
            left[k].add(self.tags[i]);
            prev[k] = x;
        }
        best
    }

    /// Grows a tree and accumulates weighted impurity decrease per feature.
    fn grow(&self, max_depth: usize, importance: &mut [f64]) -> Vec<TreeNode> {
        let n = self.samples.len();
        let mut nodes = vec![TreeNode::Leaf {
            label: PolicyTag::Fast,
        }];
        let mut node_of: Vec<Option<usize>> = vec![Some(0); n];
        // (tree node index, counts) for the nodes being split this level.
        let mut root = Counts::default();
        self.tags.iter().for_each(|&t| root.add(t));
        let mut open = vec![(0usize, root)];
        let mut depth = 0;
        while !open.is_empty() {
            let splittable = depth < max_depth;
            let totals: Vec<Counts> = open.iter().map(|&(_, c)| c).collect();
            let per_feature: Vec<Vec<Option<Split>>> = if splittable {
                par_map(&self.sorted, |(f, order)| {
                    self.scan(*f, order, &node_of, &totals)
                })
            } else {
                Vec::new()
            };
            let mut next = Vec::new();
            let mut route: Vec<Option<(Split, usize, usize)>> = vec![None; open.len()];
            for (k, &(at, counts)) in open.iter().enumerate() {
                let mut chosen: Option<Split> = None;
                for col in &per_feature {
                    if let Some(s) = col[k] {
                        if chosen.is_none_or(|c| s.gain > c.gain) {
                            chosen = Some(s);
                        }
                    }
                }
                match chosen {
                    Some(s) if counts.fast > 0 && counts.slow > 0 => {
                        let l = nodes.len();
                        nodes.push(TreeNode::Leaf {
                            label: PolicyTag::Fast,
                        });
                        nodes.push(TreeNode::Leaf {
                            label: PolicyTag::Fast,
                        });
                        nodes[at] = TreeNode::Split {
                            feature: s.feature,
                            threshold: s.threshold,
                            left: l,
                            right: l + 1,
                        };
                        importance[s.feature] += counts.total() as f64 / n as f64 * s.gain;
                        route[k] = Some((s, l, l + 1));
                    }
                    _ => {
                        nodes[at] = TreeNode::Leaf {
                            label: counts.majority(),
                        };
                    }
                }
            }
            // Reassign samples to the children of split nodes.
            let mut child_counts: std::collections::BTreeMap<usize, Counts> = Default::default();
            for (i, slot) in node_of.iter_mut().enumerate() {
                let Some(k) = *slot else { continue };
                *slot = None;
                if let Some((s, l, r)) = route[k] {
                    let child = if self.samples[i].features[s.feature] < s.threshold {
                        l
                    } else {
                        r
                    };
                    child_counts.entry(child).or_default().add(self.tags[i]);
                    *slot = Some(child);
                }
            }
            // Renumber children to dense open-slot indices.
            let mut slot_of = std::collections::HashMap::new();
            for (child, counts) in child_counts {
                slot_of.insert(child, next.len());
                next.push((child, counts));
            }
            for slot in node_of.iter_mut() {
                if let Some(child) = *slot {
                    *slot = Some(slot_of[&child]);
                }
            }
            open = next;
            depth += 1;
        }
        nodes
    }
}

/// Trains a tree of at most `max_depth` split levels using only `features`.
///
/// Splits maximize Gini impurity decrease over midpoints between adjacent
/// distinct values. Equal gains go to the lower feature index, then the
/// lower threshold. Leaves take the majority label, ties to fast.
pub fn train_tree(
    samples: &[TrainingSample],
    max_depth: usize,
    features: &[usize],
    feature_names: &[String],
) -> Result<DecisionTree, ClassifierError> {
    let grower = Grower::new(samples, features)?;
    let width = samples[0].features.len();
    let mut importance = vec![0.0; width];
    let nodes = grower.grow(max_depth, &mut importance);
    let mut selected = features.to_vec();
    selected.sort_unstable();
    selected.dedup();
    Ok(DecisionTree {
        schema_version: TREE_SCHEMA_VERSION,
        max_depth,
        feature_names: selected
            .iter()
            .map(|&f| feature_names.get(f).cloned().unwrap_or_else(|| format!("f{f}")))
            .collect(),
        features: selected,
        nodes,
    })
}

/// Ranks every feature by normalized impurity decrease in a deep reference
/// tree. Returns `(feature, importance)` in descending order; ties keep the
/// lower index first.
pub fn rank_features(samples: &[TrainingSample]) -> Result<Vec<(usize, f64)>, ClassifierError> {
    if samples.is_empty() {
        return Err(ClassifierError::EmptySamples);
    }
    let width = samples[0].features.len();
    let all: Vec<usize> = (0..width).collect();
    let grower = Grower::new(samples, &all)?;
    let (fast, slow) = grower
        .tags
        .iter()
        .fold((0, 0), |(f, s), t| match t {
            PolicyTag::Fast => (f + 1, s),
            PolicyTag::Slow => (f, s + 1),
        });
    if fast == 0 || slow == 0 {
        return Err(ClassifierError::SingleClass);
    }
    let mut importance = vec![0.0; width];
    grower.grow(RANKING_DEPTH, &mut importance);
    let total: f64 = importance.iter().sum();
    let mut ranked: Vec<(usize, f64)> = importance
        .into_iter()
        .map(|v| if total > 0.0 { v / total } else { 0.0 })
        .enumerate()
        .collect();
    ranked.sort_by(|a, b| b.1.total_cmp(&a.1).then(a.0.cmp(&b.0)));
    Ok(ranked)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::classifier::dataset::Label;

    fn s(features: Vec<f64>, label: Label) -> TrainingSample {
        TrainingSample {
            scenario: 0,
            workload: 0,
            rate_mbps: 0.0,
            decision: 0,
            features,
            label,
        }
    }

    #[test]
    fn separable_by_rate() {
        let samples: Vec<_> = [100.0, 200.0, 300.0]
            .iter()
            .map(|&r| s(vec![r, 7.0], Label::Fast))
            .chain(
                [1800.0, 1900.0, 2000.0]
                    .iter()
                    .map(|&r| s(vec![r, 7.0], Label::Slow)),
            )
            .collect();
        let tree = train_tree(&samples, 2, &[0, 1], &[]).unwrap();
        assert_eq!(
            tree.nodes[0],
            TreeNode::Split {
                feature: 0,
                threshold: 1050.0,
                left: 1,
                right: 2
            }
        );
        assert_eq!(tree.depth(), 1);
        for x in &samples {
            assert_eq!(tree.classify(&x.features).unwrap(), x.tag().unwrap());
        }
    }

    #[test]
    fn equal_gain_prefers_lower_feature() {
        let samples = vec![
            s(vec![0.0, 0.0], Label::Fast),
            s(vec![1.0, 1.0], Label::Slow),
        ];
        let tree = train_tree(&samples, 1, &[1, 0], &[]).unwrap();
        assert!(matches!(
            tree.nodes[0],
            TreeNode::Split {
                feature: 0,
                threshold,
                ..
            } if threshold == 0.5
        ));
    }

    #[test]
    fn majority_ties_go_fast() {
        let samples = vec![s(vec![1.0], Label::Fast), s(vec![1.0], Label::Slow)];
        let tree = train_tree(&samples, 2, &[0], &[]).unwrap();
        assert_eq!(tree.nodes, vec![TreeNode::Leaf { label: PolicyTag::Fast }]);
    }

    #[test]
    fn empty_and_single_class() {
        assert!(matches!(
            train_tree(&[], 2, &[0], &[]),
            Err(ClassifierError::EmptySamples)
        ));
        let one = vec![s(vec![1.0], Label::Fast), s(vec![2.0], Label::Fast)];
        assert!(matches!(rank_features(&one), Err(ClassifierError::SingleClass)));
    }

    #[test]
    fn pending_label_is_rejected() {
        let samples = vec![s(vec![1.0], Label::Fast), s(vec![2.0], Label::Pending)];
        assert!(matches!(
            train_tree(&samples, 2, &[0], &[]),
            Err(ClassifierError::Pending(_))
        ));
    }

    #[test]
    fn ranking_finds_the_informative_feature() {
        let samples: Vec<_> = (0..40)
            .map(|i| {
                let label = if i >= 20 { Label::Slow } else { Label::Fast };
                s(vec![(i * 7 % 5) as f64, i as f64, 3.0], label)
            })
            .collect();
        let ranked = rank_features(&samples).unwrap();
        assert_eq!(ranked[0].0, 1);
        let sum: f64 = ranked.iter().map(|r| r.1).sum();
        assert!((sum - 1.0).abs() < 1e-9);
        assert_eq!(ranked[2], (2, 0.0));
    }
}
