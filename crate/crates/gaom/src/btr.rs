//! Binary tree representation (BTR) of sparse multivectors.
//!
//! Each root-to-leaf 0/1 path spells a blade id with the levels in reversed
//! basis order: the root level decides bit n-1, the level above the leaves
//! decides bit 0. Leaves hold `(blade id, coefficient)`; internal nodes hold
//! their tree depth (levels below them) and the id assembled along the path
//! so far. Internal nodes exist only on paths to stored leaves, so the tree
//! reflects the multivector's sparsity. Reversing the level order lets the
//! tree of a multivector over bits 0..k-1 appear verbatim as the all-zeros
//! prefix subtree of any larger frame's tree.

use std::fmt::Write as _;

use crate::blade::BasisBladeId;
use crate::error::{Error, Result};
use crate::multivector::SparseMultivector;

/// Index of a node in its tree's arena.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct NodeId(u32);

/// A BTR node. Internal nodes have at least one child; tree-depth-1 nodes
/// have only leaf children.
#[derive(Debug, Clone, PartialEq)]
pub enum BtrNode {
    Internal {
        tree_depth: u32,
        id: BasisBladeId,
        child0: Option<NodeId>,
        child1: Option<NodeId>,
    },
    Leaf {
        id: BasisBladeId,
        scalar_value: f64,
    },
}

/// A multivector stored as a binary tree. The zero multivector is the empty
/// tree (no root). Immutable after construction.
#[derive(Debug, Clone, PartialEq)]
pub struct BtrTree {
    dim: u32,
    nodes: Vec<BtrNode>,
    root: Option<NodeId>,
}

/// Child id arithmetic: the 0-child keeps the parent id, the 1-child adds
/// 2^(d-1) where d is the parent's tree depth.
#[inline]
pub fn child_id(parent_id: BasisBladeId, parent_depth: u32, branch: u32) -> BasisBladeId {
    debug_assert!(parent_depth >= 1);
    debug_assert!(branch <= 1);
    BasisBladeId(parent_id.0 + branch * (1 << (parent_depth - 1)))
}

/// Builds the BTR of a multivector: one leaf per term at the path spelled by
/// the term's blade-id bits, internal nodes only where a stored leaf lies
/// below. The zero multivector becomes the empty tree.
pub fn build_btr(mv: &SparseMultivector) -> BtrTree {
    let dim = mv.dim();
    let mut tree = BtrTree {
        dim,
        nodes: Vec::new(),
        root: None,
    };
    if mv.is_zero() {
        return tree;
    }
    let root = build_subtree(&mut tree.nodes, mv.terms(), dim, BasisBladeId(0));
    tree.root = Some(root);
    tree
}

fn build_subtree(
    nodes: &mut Vec<BtrNode>,
    terms: &[(BasisBladeId, f64)],
    depth: u32,
    prefix: BasisBladeId,
) -> NodeId {
    debug_assert!(!terms.is_empty());
    if depth == 0 {
        debug_assert_eq!(terms.len(), 1);
        let (id, scalar_value) = terms[0];
        nodes.push(BtrNode::Leaf { id, scalar_value });
        return NodeId(nodes.len() as u32 - 1);
    }
    // Terms are sorted by id, so within this subtree those with bit depth-1
    // clear form a prefix.
    let bit = 1u32 << (depth - 1);
    let split = terms.partition_point(|&(id, _)| id.0 & bit == 0);
    let (zeros, ones) = terms.split_at(split);
    let child0 = (!zeros.is_empty()).then(|| build_subtree(nodes, zeros, depth - 1, prefix));
    let child1 = (!ones.is_empty())
        .then(|| build_subtree(nodes, ones, depth - 1, child_id(prefix, depth, 1)));
    nodes.push(BtrNode::Internal {
        tree_depth: depth,
        id: prefix,
        child0,
        child1,
    });
    NodeId(nodes.len() as u32 - 1)
}

impl BtrTree {
    #[inline]
    pub fn dim(&self) -> u32 {
        self.dim
    }

    #[inline]
    pub fn root(&self) -> Option<NodeId> {
        self.root
    }

    #[inline]
    pub fn node(&self, id: NodeId) -> &BtrNode {
        &self.nodes[id.0 as usize]
    }

    #[inline]
    pub fn is_empty(&self) -> bool {
        self.root.is_none()
    }

    /// Exact node counts: `(internal, leaf)`.
    pub fn node_count(&self) -> (usize, usize) {
        let mut internal = 0;
        let mut leaf = 0;
        for node in &self.nodes {
            match node {
                BtrNode::Internal { .. } => internal += 1,
                BtrNode::Leaf { .. } => leaf += 1,
            }
        }
        (internal, leaf)
    }

    /// Recovers the normalized term list, verifying path/id consistency and
    /// depth bookkeeping along the way.
    pub fn to_terms(&self) -> Result<SparseMultivector> {
        let mut terms = Vec::new();
        if let Some(root) = self.root {
            match self.node(root) {
                BtrNode::Internal { tree_depth, id, .. } => {
                    if *tree_depth != self.dim || id.0 != 0 {
                        return Err(Error::TreeIntegrity(format!(
                            "root must have depth {} and id 0, found depth {tree_depth} id {id}",
                            self.dim
                        )));
                    }
                }
                BtrNode::Leaf { .. } => {
                    return Err(Error::TreeIntegrity("root is a leaf".into()));
                }
            }
            self.collect_terms(root, self.dim, BasisBladeId(0), &mut terms)?;
        }
        SparseMultivector::new(self.dim, terms)
    }

    fn collect_terms(
        &self,
        node: NodeId,
        expect_depth: u32,
        path_id: BasisBladeId,
        out: &mut Vec<(BasisBladeId, f64)>,
    ) -> Result<()> {
        match self.node(node) {
            BtrNode::Leaf { id, scalar_value } => {
                if expect_depth != 0 {
                    return Err(Error::TreeIntegrity(format!(
                        "leaf {id} at depth {expect_depth}, expected 0"
                    )));
                }
                if *id != path_id {
                    return Err(Error::TreeIntegrity(format!(
                        "leaf id {id} disagrees with path id {path_id}"
                    )));
                }
                out.push((*id, *scalar_value));
                Ok(())
            }
            BtrNode::Internal {
                tree_depth,
                id,
                child0,
                child1,
            } => {
                if *tree_depth != expect_depth || expect_depth == 0 {
                    return Err(Error::TreeIntegrity(format!(
                        "internal node {id} stores depth {tree_depth}, path says {expect_depth}"
                    )));
                }
                if *id != path_id {
                    return Err(Error::TreeIntegrity(format!(
                        "internal id {id} disagrees with path id {path_id}"
                    )));
                }
                if child0.is_none() && child1.is_none() {
                    return Err(Error::TreeIntegrity(format!(
                        "internal node {id} has no children"
                    )));
                }
                if let Some(c) = child0 {
                    self.collect_terms(*c, expect_depth - 1, path_id, out)?;
                }
                if let Some(c) = child1 {
                    self.collect_terms(
                        *c,
                        expect_depth - 1,
                        child_id(path_id, expect_depth, 1),
                        out,
                    )?;
                }
                Ok(())
            }
        }
    }

    /// Debug dump, one line per node in preorder (node, 0-subtree, 1-subtree):
    /// `<path> depth=<d> id=<id> [value=<v>]` with '-' padding for undecided
    /// levels, e.g. `01- depth=1 id=2`.
    pub fn dump(&self) -> String {
        let mut out = String::new();
        if let Some(root) = self.root {
            self.dump_node(root, &mut out);
        }
        out
    }

    fn dump_node(&self, node: NodeId, out: &mut String) {
        match self.node(node) {
            BtrNode::Leaf { id, scalar_value } => {
                writeln!(
                    out,
                    "{} depth=0 id={} value={}",
                    path_string(*id, 0, self.dim),
                    id,
                    scalar_value
                )
                .expect("string write");
            }
            BtrNode::Internal {
                tree_depth,
                id,
                child0,
                child1,
            } => {
                writeln!(
                    out,
                    "{} depth={} id={}",
                    path_string(*id, *tree_depth, self.dim),
                    tree_depth,
                    id
                )
                .expect("string write");
                if let Some(c) = child0 {
                    self.dump_node(*c, out);
                }
                if let Some(c) = child1 {
                    self.dump_node(*c, out);
                }
            }
        }
    }

    #[cfg(test)]
    pub(crate) fn nodes_mut(&mut self) -> &mut Vec<BtrNode> {
        &mut self.nodes
    }
}

/// Path label of a node: one character per level, bit n-1 first, with '-'
/// for the undecided levels below the node. The root of a 3-dimensional tree
/// is `---`; its 1-child is `1--`; a leaf shows all bits, e.g. `011`.
pub fn path_string(id: BasisBladeId, tree_depth: u32, dim: u32) -> String {
    (0..dim)
        .rev()
        .map(|bit| {
            if bit < tree_depth {
                '-'
            } else if id.0 & (1 << bit) != 0 {
                '1'
            } else {
                '0'
            }
        })
        .collect()
}
