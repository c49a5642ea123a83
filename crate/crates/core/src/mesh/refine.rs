use std::sync::Arc;

use super::{midpoint, BoundaryFacet, Element, ElementKey, Triangulation};
use crate::error::MeshError;

const NO_VERTEX: usize = usize::MAX;

impl Triangulation {
    /// Coarsest conforming NVB refinement in which every marked element is bisected.
    ///
    /// The refinement edges of marked elements are marked, then the marking
    /// is closed so that every element with a marked edge also has its
    /// refinement edge marked. Each element is then split into 2, 3 or 4
    /// children. Vertex ids of `self` are preserved; new vertices are appended.
    pub fn refine(&self, marked: &[usize]) -> Result<Triangulation, MeshError> {
        let nt = self.num_elements();
        for &t in marked {
            if t >= nt {
                return Err(MeshError::InvalidElement(t));
            }
        }
        let topo = self.topology();
        let ne = topo.num_edges();

        let mut edge_marked = vec![false; ne];
        let mut queue = Vec::new();
        for &t in marked {
            let e = topo.element_edges[t][0];
            if !edge_marked[e] {
                edge_marked[e] = true;
                queue.push(e);
            }
        }
        // closure: a marked edge forces the refinement edge of every adjacent element
        while let Some(e) = queue.pop() {
            for &t in &topo.edge_elements[e] {
                if t == usize::MAX {
                    continue;
                }
                let r = topo.element_edges[t][0];
                if !edge_marked[r] {
                    edge_marked[r] = true;
                    queue.push(r);
                }
            }
        }

        let mut vertices = self.vertices.clone();
        let mut vertex_parents = self.vertex_parents.clone();
        let mut edge_mid = vec![NO_VERTEX; ne];
        for e in 0..ne {
            if edge_marked[e] {
                let [a, b] = topo.edges[e];
                edge_mid[e] = vertices.len();
                vertices.push(midpoint(self.vertices[a], self.vertices[b]));
                vertex_parents.push(Some([a, b]));
            }
        }

        let mut elements = Vec::with_capacity(nt + 2 * marked.len() + 8);
        for (t, el) in self.elements.iter().enumerate() {
            let [e0, e1, e2] = topo.element_edges[t];
            if !edge_marked[e0] {
                debug_assert!(!edge_marked[e1] && !edge_marked[e2]);
                elements.push(el.clone());
                continue;
            }
            let [a, b, c] = el.vertices;
            let m = edge_mid[e0];
            let left = Element { vertices: [c, a, m], key: child_key(&el.key, 0)? };
            let right = Element { vertices: [b, c, m], key: child_key(&el.key, 1)? };
            // left's refinement edge is (c, a) = local edge 2 of the parent
            if edge_marked[e2] {
                bisect_into(&left, edge_mid[e2], &mut elements)?;
            } else {
                elements.push(left);
            }
            // right's refinement edge is (b, c) = local edge 1 of the parent
            if edge_marked[e1] {
                bisect_into(&right, edge_mid[e1], &mut elements)?;
            } else {
                elements.push(right);
            }
        }

        let mut boundary = Vec::with_capacity(self.boundary.len() + 8);
        let mut facet_split = vec![NO_VERTEX; self.boundary.len()];
        for (e, f) in topo.edge_facet.iter().enumerate() {
            if let Some(i) = f {
                facet_split[*i] = edge_mid[e];
            }
        }
        for (i, f) in self.boundary.iter().enumerate() {
            let m = facet_split[i];
            if m == NO_VERTEX {
                boundary.push(*f);
            } else {
                boundary.push(BoundaryFacet { vertices: [f.vertices[0], m], tag: f.tag });
                boundary.push(BoundaryFacet { vertices: [m, f.vertices[1]], tag: f.tag });
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

fn child_key(key: &ElementKey, slot: u8) -> Result<ElementKey, MeshError> {
    Ok(ElementKey { root: key.root, path: key.path.child(slot)? })
}

/// Children of `[a, b, c]` across the midpoint `m` of `(a, b)`: `[c, a, m]` and `[b, c, m]`.
fn bisect_into(el: &Element, m: usize, out: &mut Vec<Element>) -> Result<(), MeshError> {
    let [a, b, c] = el.vertices;
    out.push(Element { vertices: [c, a, m], key: child_key(&el.key, 0)? });
    out.push(Element { vertices: [b, c, m], key: child_key(&el.key, 1)? });
    Ok(())
}
