// SPDX-License-Identifier: Apache-2.0

//! Subtree fingerprints.
//!
//! Every rooted subtree of a [`TypedTree`] gets a 64-bit fingerprint computed
//! bottom-up in one post-order pass:
//!
//! ```text
//! fp(r) = 0
//! for c in children(r):  fp(r) = H(fp(r) +w fp(c))
//! fp(r) = H(fp(r) +w label_hash(r.type))
//! ```
//!
//! where `+w` is wrapping 64-bit addition. Because each child is folded in
//! and re-hashed before the next one, sibling order changes the result.
//!
//! `H` is FNV-1a over the eight little-endian bytes of its input followed by
//! the MurmurHash3 `fmix64` finalizer. `label_hash` is the same fold and
//! finalizer applied to the UTF-8 bytes of the label. Both are seedless, so
//! fingerprints are stable across processes and platforms.

use std::collections::HashSet;

use crate::tree::{NodeType, TypedTree};

const FNV_OFFSET: u64 = 0xcbf2_9ce4_8422_2325;
const FNV_PRIME: u64 = 0x0000_0100_0000_01b3;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Default)]
pub struct Fingerprint(pub u64);

impl Fingerprint {
    pub fn value(self) -> u64 {
        self.0
    }
}

impl std::fmt::Display for Fingerprint {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{:016x}", self.0)
    }
}

impl std::fmt::LowerHex for Fingerprint {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        std::fmt::LowerHex::fmt(&self.0, f)
    }
}

#[inline]
fn fnv1a(bytes: &[u8]) -> u64 {
    bytes
        .iter()
        .fold(FNV_OFFSET, |h, &b| (h ^ u64::from(b)).wrapping_mul(FNV_PRIME))
}

#[inline]
fn fmix64(mut k: u64) -> u64 {
    k ^= k >> 33;
    k = k.wrapping_mul(0xff51_afd7_ed55_8ccd);
    k ^= k >> 33;
    k = k.wrapping_mul(0xc4ce_b9fe_1a85_ec53);
    k ^= k >> 33;
    k
}

/// Hashes an arbitrary byte string.
pub fn hash_bytes(bytes: &[u8]) -> u64 {
    fmix64(fnv1a(bytes))
}

/// The mixing primitive `H` applied to a 64-bit word.
pub fn hash_u64(x: u64) -> u64 {
    hash_bytes(&x.to_le_bytes())
}

pub fn fingerprint_node_type(label: &NodeType) -> Fingerprint {
    Fingerprint(hash_bytes(label.as_str().as_bytes()))
}

/// Fingerprints of all rooted subtrees of one tree.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FingerprintProfile {
    per_node: Vec<Fingerprint>,
    postorder: Vec<usize>,
    set: HashSet<Fingerprint>,
}

impl FingerprintProfile {
    /// One fingerprint per node, indexed by post-order position.
    pub fn by_postorder(&self) -> &[Fingerprint] {
        &self.per_node
    }

    /// Tree node index for each post-order position.
    pub fn postorder(&self) -> &[usize] {
        &self.postorder
    }

    /// Deduplicated fingerprints.
    pub fn set(&self) -> &HashSet<Fingerprint> {
        &self.set
    }

    pub fn contains(&self, fp: Fingerprint) -> bool {
        self.set.contains(&fp)
    }

    pub fn root(&self) -> Fingerprint {
        *self.per_node.last().expect("profiles are never empty")
    }

    /// Distinct fingerprints in ascending order.
    pub fn sorted_set(&self) -> Vec<Fingerprint> {
        let mut v: Vec<_> = self.set.iter().copied().collect();
        v.sort_unstable();
        v
    }

    /// Rebuilds a profile from stored per-node fingerprints. The post-order
    /// mapping is taken from `tree`, whose node count must match.
    pub fn from_parts(per_node: Vec<Fingerprint>, tree: &TypedTree) -> Option<Self> {
        if per_node.len() != tree.node_count() {
            return None;
        }
        let set = per_node.iter().copied().collect();
        Some(FingerprintProfile {
            per_node,
            postorder: tree.postorder(),
            set,
        })
    }
}

/// Number of rooted subtrees counted with multiplicity, i.e. the node count.
pub fn subtree_multiset_size(profile: &FingerprintProfile) -> usize {
    profile.per_node.len()
}

pub fn fingerprint_tree(tree: &TypedTree) -> FingerprintProfile {
    fingerprint_tree_with(tree, |_, _| {})
}

/// Like [`fingerprint_tree`], calling `visit(node, fp)` once per node as its
/// fingerprint is finalized.
pub fn fingerprint_tree_with(tree: &TypedTree, mut visit: impl FnMut(usize, Fingerprint)) -> FingerprintProfile {
    let n = tree.node_count();
    let mut per_node = Vec::with_capacity(n);
    let mut postorder = Vec::with_capacity(n);
    // (node, next child, running fp)
    let mut stack: Vec<(usize, usize, u64)> = vec![(tree.root(), 0, 0)];
    while let Some(frame) = stack.last_mut() {
        let (node, next, acc) = *frame;
        match tree.children(node).get(next) {
            Some(&child) => {
                frame.1 += 1;
                stack.push((child, 0, 0));
            }
            None => {
                stack.pop();
                let label = fingerprint_node_type(tree.kind(node)).0;
                let fp = hash_u64(acc.wrapping_add(label));
                per_node.push(Fingerprint(fp));
                postorder.push(node);
                visit(node, Fingerprint(fp));
                if let Some(parent) = stack.last_mut() {
                    parent.2 = hash_u64(parent.2.wrapping_add(fp));
                }
            }
        }
    }
    let set = per_node.iter().copied().collect();
    FingerprintProfile {
        per_node,
        postorder,
        set,
    }
}
