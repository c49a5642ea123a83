use std::collections::{HashMap, HashSet};
use std::sync::Arc;

use super::{point_key, BoundaryFacet, BoundaryTag, ElementKey, Triangulation};
use crate::error::MeshError;

impl Triangulation {
    /// Coarsest common refinement `self ⊕ other` of two refinements of the same
    /// initial mesh: the leaves of the union of both bisection forests.
    ///
    /// Vertex ids of `self` are preserved; vertices only present in `other`
    /// are appended in their `other` order.
    pub fn overlay(&self, other: &Triangulation) -> Result<Triangulation, MeshError> {
        if !self.same_roots(other) {
            return Err(MeshError::DifferentRoots);
        }
        let strict_ancestors = |m: &Triangulation| -> HashSet<ElementKey> {
            m.elements.iter().flat_map(|e| e.key.ancestors()).collect()
        };
        let anc_self = strict_ancestors(self);
        let anc_other = strict_ancestors(other);
        let keys_self: HashSet<ElementKey> = self.elements.iter().map(|e| e.key).collect();

        let mut vertices = self.vertices.clone();
        let mut vertex_parents = self.vertex_parents.clone();
        let mut lookup: HashMap<(u64, u64), usize> =
            vertices.iter().enumerate().map(|(i, p)| (point_key(*p), i)).collect();
        let mut other_to_new = vec![0usize; other.num_vertices()];
        for (i, p) in other.vertices.iter().enumerate() {
            let key = point_key(*p);
            other_to_new[i] = match lookup.get(&key) {
                Some(&j) => j,
                None => {
                    let j = vertices.len();
                    vertices.push(*p);
                    // parents precede their midpoint in `other`, so they are already mapped
                    vertex_parents.push(other.vertex_parents[i].map(|[a, b]| [other_to_new[a], other_to_new[b]]));
                    lookup.insert(key, j);
                    j
                }
            };
        }

        let mut elements = Vec::new();
        for e in &self.elements {
            if !anc_other.contains(&e.key) {
                elements.push(e.clone());
            }
        }
        for e in &other.elements {
            if !anc_self.contains(&e.key) && !keys_self.contains(&e.key) {
                let mut e = e.clone();
                e.vertices = e.vertices.map(|v| other_to_new[v]);
                elements.push(e);
            }
        }

        let mut tags: HashMap<[(u64, u64); 2], BoundaryTag> = HashMap::new();
        for m in [self, other] {
            for f in &m.boundary {
                let mut k = [point_key(m.vertices[f.vertices[0]]), point_key(m.vertices[f.vertices[1]])];
                k.sort_unstable();
                tags.insert(k, f.tag);
            }
        }
        let mut count: HashMap<[usize; 2], usize> = HashMap::new();
        for e in &elements {
            for k in 0..3 {
                let [a, b] = e.edge(k);
                *count.entry([a.min(b), a.max(b)]).or_default() += 1;
            }
        }
        let mut boundary = Vec::new();
        for e in &elements {
            for k in 0..3 {
                let [a, b] = e.edge(k);
                if count[&[a.min(b), a.max(b)]] == 1 {
                    let mut key = [point_key(vertices[a]), point_key(vertices[b])];
                    key.sort_unstable();
                    let tag = *tags.get(&key).ok_or_else(|| {
                        MeshError::NonConforming(format!("overlay boundary edge ({a}, {b}) has no facet"))
                    })?;
                    boundary.push(BoundaryFacet { vertices: [a, b], tag });
                }
            }
        }

        Ok(Triangulation::from_parts(
            vertices,
            vertex_parents,
            elements,
            boundary,
            Arc::clone(&self.roots),
        ))
    }
}
