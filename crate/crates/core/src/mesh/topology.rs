use std::collections::HashMap;

use super::Triangulation;
use crate::error::MeshError;

/// Edge numbering and element/facet adjacency of a triangulation.
#[derive(Clone, Debug)]
pub struct Topology {
    /// Edge endpoints, smaller vertex id first.
    pub edges: Vec<[usize; 2]>,
    /// Global edge id of local edge `k` of each element (see [`super::Element::edge`]).
    pub element_edges: Vec<[usize; 3]>,
    /// Adjacent elements of each edge; the second entry is `usize::MAX` on the boundary.
    pub edge_elements: Vec<[usize; 2]>,
    /// Boundary facet lying on each edge, if any.
    pub edge_facet: Vec<Option<usize>>,
    /// Edge of each boundary facet.
    pub facet_edge: Vec<usize>,
}

fn sorted(a: usize, b: usize) -> [usize; 2] {
    if a < b {
        [a, b]
    } else {
        [b, a]
    }
}

impl Topology {
    pub(crate) fn build(mesh: &Triangulation) -> Topology {
        Topology::try_build(mesh).expect("triangulation was validated on construction")
    }

    pub(crate) fn try_build(mesh: &Triangulation) -> Result<Topology, MeshError> {
        let nt = mesh.num_elements();
        let mut index: HashMap<[usize; 2], usize> = HashMap::with_capacity(2 * nt + 8);
        let mut edges = Vec::with_capacity(2 * nt + 8);
        let mut edge_elements: Vec<[usize; 2]> = Vec::with_capacity(2 * nt + 8);
        let mut element_edges = Vec::with_capacity(nt);
        for (t, el) in mesh.elements().iter().enumerate() {
            let mut local = [0usize; 3];
            for (k, slot) in local.iter_mut().enumerate() {
                let [a, b] = el.edge(k);
                let key = sorted(a, b);
                let e = *index.entry(key).or_insert_with(|| {
                    edges.push(key);
                    edge_elements.push([usize::MAX, usize::MAX]);
                    edges.len() - 1
                });
                let adj = &mut edge_elements[e];
                if adj[0] == usize::MAX {
                    adj[0] = t;
                } else if adj[1] == usize::MAX {
                    adj[1] = t;
                } else {
                    return Err(MeshError::NonConforming(format!(
                        "edge ({}, {}) is shared by more than two elements",
                        key[0], key[1]
                    )));
                }
                *slot = e;
            }
            element_edges.push(local);
        }
        let mut edge_facet = vec![None; edges.len()];
        let mut facet_edge = Vec::with_capacity(mesh.boundary().len());
        for (i, f) in mesh.boundary().iter().enumerate() {
            let key = sorted(f.vertices[0], f.vertices[1]);
            match index.get(&key) {
                Some(&e) => {
                    facet_edge.push(e);
                    if edge_facet[e].is_some() {
                        return Err(MeshError::NonConforming(format!(
                            "duplicate boundary facet ({}, {})",
                            key[0], key[1]
                        )));
                    }
                    edge_facet[e] = Some(i);
                }
                None => {
                    return Err(MeshError::NonConforming(format!(
                        "boundary facet ({}, {}) is not an element edge",
                        key[0], key[1]
                    )))
                }
            }
        }
        Ok(Topology { edges, element_edges, edge_elements, edge_facet, facet_edge })
    }

    pub fn num_edges(&self) -> usize {
        self.edges.len()
    }

    pub fn is_boundary(&self, e: usize) -> bool {
        self.edge_elements[e][1] == usize::MAX
    }

    /// The element across edge `e` from `t`, if any.
    pub fn neighbor(&self, e: usize, t: usize) -> Option<usize> {
        let [a, b] = self.edge_elements[e];
        if b == usize::MAX {
            None
        } else if a == t {
            Some(b)
        } else {
            Some(a)
        }
    }

    /// Linear search; intended for small meshes.
    pub fn edge_index(&self, a: usize, b: usize) -> Option<usize> {
        let key = sorted(a, b);
        self.edges.iter().position(|e| *e == key)
    }
}
