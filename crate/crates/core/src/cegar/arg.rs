//! Abstract reachability graph.

use std::collections::BTreeSet;

use super::domain::AbstractState;
use crate::cfa::{EdgeId, LocId};

pub type NodeId = usize;

#[derive(Clone, Debug)]
pub struct ArgNode {
    pub id: NodeId,
    pub loc: LocId,
    pub state: AbstractState,
    pub parent: Option<(NodeId, EdgeId)>,
    pub children: Vec<NodeId>,
    pub covered_by: Option<NodeId>,
    /// Outgoing edges whose successors have been computed.
    pub expanded: BTreeSet<EdgeId>,
    /// Precision generation the state was computed under.
    pub generation: u64,
    pub removed: bool,
}

#[derive(Clone, Debug, Default)]
pub struct Arg {
    nodes: Vec<ArgNode>,
}

impl Arg {
    pub fn with_root(loc: LocId, state: AbstractState) -> Arg {
        let mut arg = Arg::default();
        arg.add(loc, state, None, 0);
        arg
    }

    pub fn root(&self) -> NodeId {
        0
    }

    pub fn node(&self, id: NodeId) -> &ArgNode {
        &self.nodes[id]
    }

    pub(crate) fn node_mut(&mut self, id: NodeId) -> &mut ArgNode {
        &mut self.nodes[id]
    }

    /// Nodes that have not been pruned.
    pub fn live_nodes(&self) -> impl Iterator<Item = &ArgNode> {
        self.nodes.iter().filter(|n| !n.removed)
    }

    pub fn len(&self) -> usize {
        self.live_nodes().count()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub(crate) fn add(&mut self, loc: LocId, state: AbstractState, parent: Option<(NodeId, EdgeId)>, generation: u64) -> NodeId {
        let id = self.nodes.len();
        self.nodes.push(ArgNode {
            id,
            loc,
            state,
            parent,
            children: Vec::new(),
            covered_by: None,
            expanded: BTreeSet::new(),
            generation,
            removed: false,
        });
        if let Some((p, _)) = parent {
            self.nodes[p].children.push(id);
        }
        id
    }

    /// Root-to-node path: each node with the edge that led to it.
    pub fn path_to(&self, mut n: NodeId) -> Vec<(NodeId, Option<EdgeId>)> {
        let mut path = vec![];
        loop {
            let parent = self.nodes[n].parent;
            path.push((n, parent.map(|(_, e)| e)));
            match parent {
                Some((p, _)) => n = p,
                None => break,
            }
        }
        path.reverse();
        path
    }

    /// Removes the subtree under `n` together with its siblings produced by
    /// the same edge, so the parent can re-expand that edge from scratch.
    /// Returns the removed ids and the live nodes that were covered by one of
    /// them.
    pub(crate) fn remove_subtree(&mut self, n: NodeId) -> (Vec<NodeId>, Vec<NodeId>) {
        let mut removed = vec![];
        let mut stack = match self.nodes[n].parent {
            Some((p, e)) => self.nodes[p].children.iter().copied().filter(|c| self.nodes[*c].parent == Some((p, e))).collect(),
            None => vec![n],
        };
        while let Some(m) = stack.pop() {
            self.nodes[m].removed = true;
            removed.push(m);
            stack.extend(self.nodes[m].children.iter().copied());
        }
        if let Some((p, e)) = self.nodes[n].parent {
            let parent = &mut self.nodes[p];
            parent.children.retain(|c| !removed.contains(c));
            parent.expanded.remove(&e);
        }
        let gone: BTreeSet<NodeId> = removed.iter().copied().collect();
        let mut uncovered = vec![];
        for node in self.nodes.iter_mut().filter(|x| !x.removed) {
            if node.covered_by.is_some_and(|c| gone.contains(&c)) {
                node.covered_by = None;
                uncovered.push(node.id);
            }
        }
        (removed, uncovered)
    }

    /// Live nodes currently covered by `n`.
    pub(crate) fn covered_by(&self, n: NodeId) -> Vec<NodeId> {
        self.live_nodes().filter(|x| x.covered_by == Some(n)).map(|x| x.id).collect()
    }

    /// Live, uncovered nodes grouped per location.
    pub fn uncovered_at(&self, loc: LocId) -> impl Iterator<Item = &ArgNode> {
        self.live_nodes().filter(move |n| n.loc == loc && n.covered_by.is_none())
    }
}
