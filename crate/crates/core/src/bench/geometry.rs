//! Built-in initial meshes.

use crate::mesh::{BoundaryFacet, BoundaryTag, Triangulation};

fn facets(list: &[([usize; 2], BoundaryTag)]) -> Vec<BoundaryFacet> {
    list.iter().map(|&(vertices, tag)| BoundaryFacet { vertices, tag }).collect()
}

/// Unit square split by the diagonal `(0,0)–(1,1)`, which is the refinement edge
/// of both triangles. Tags are given for the bottom, right, top and left sides.
pub fn unit_square(tags: [BoundaryTag; 4]) -> Triangulation {
    Triangulation::with_longest_edge(
        vec![[0.0, 0.0], [1.0, 0.0], [1.0, 1.0], [0.0, 1.0]],
        vec![[0, 1, 2], [0, 2, 3]],
        facets(&[([0, 1], tags[0]), ([1, 2], tags[1]), ([2, 3], tags[2]), ([3, 0], tags[3])]),
    )
    .expect("valid square")
}

pub fn unit_square_dirichlet() -> Triangulation {
    unit_square([BoundaryTag::Dirichlet; 4])
}

/// The triangle `(0,0), (1,0), (0,1)` with Dirichlet boundary.
pub fn reference_triangle() -> Triangulation {
    let d = BoundaryTag::Dirichlet;
    Triangulation::with_longest_edge(
        vec![[0.0, 0.0], [1.0, 0.0], [0.0, 1.0]],
        vec![[0, 1, 2]],
        facets(&[([0, 1], d), ([1, 2], d), ([2, 0], d)]),
    )
    .expect("valid triangle")
}

/// `(−1,1)²` without the triangle `(0,0), (1,0), (1,−1)`; interior angle `7π/4` at the origin.
///
/// The three full quadrants are each split into four triangles around their
/// center, the remaining half quadrant into two. Every refinement edge is the
/// hypotenuse of a right isosceles triangle, so neighbors share refinement
/// edges. With `neumann_corner` the three facets on the two edges meeting at
/// the origin are Neumann; all other facets are Dirichlet.
pub fn zshape(neumann_corner: bool) -> Triangulation {
    let v = vec![
        [0.0, 0.0],   // 0 O
        [1.0, 0.0],   // 1 A
        [1.0, 1.0],   // 2 B
        [0.0, 1.0],   // 3 E
        [-1.0, 1.0],  // 4 C
        [-1.0, 0.0],  // 5 F
        [-1.0, -1.0], // 6 D
        [0.0, -1.0],  // 7 G
        [1.0, -1.0],  // 8 H
        [0.5, -0.5],  // 9 M
        [0.5, 0.5],   // 10 center Q1
        [-0.5, 0.5],  // 11 center Q2
        [-0.5, -0.5], // 12 center Q3
    ];
    let tri = vec![
        [0, 1, 10],
        [1, 2, 10],
        [2, 3, 10],
        [3, 0, 10],
        [0, 3, 11],
        [3, 4, 11],
        [4, 5, 11],
        [5, 0, 11],
        [0, 5, 12],
        [5, 6, 12],
        [6, 7, 12],
        [7, 0, 12],
        [0, 7, 9],
        [7, 8, 9],
    ];
    let (d, n) = (BoundaryTag::Dirichlet, if neumann_corner { BoundaryTag::Neumann } else { BoundaryTag::Dirichlet });
    let bnd = facets(&[
        ([0, 1], n),
        ([1, 2], d),
        ([2, 3], d),
        ([3, 4], d),
        ([4, 5], d),
        ([5, 6], d),
        ([6, 7], d),
        ([7, 8], d),
        ([8, 9], n),
        ([9, 0], n),
    ]);
    Triangulation::with_longest_edge(v, tri, bnd).expect("valid Z-shape")
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    #[test]
    fn zshape_area_and_count() {
        let m = zshape(true);
        assert_eq!(m.num_elements(), 14);
        assert!((m.total_area() - 3.5).abs() < 1e-15);
        m.check_conforming().unwrap();
    }

    #[test]
    fn zshape_reentrant_angle() {
        let m = zshape(true);
        let mut angle = 0.0;
        for t in 0..m.num_elements() {
            let el = m.element(t);
            if let Some(k) = el.vertices.iter().position(|&v| v == 0) {
                let p = m.element_points(t);
                let (a, b) = (p[(k + 1) % 3], p[(k + 2) % 3]);
                let dot = a[0] * b[0] + a[1] * b[1];
                let n = (a[0].hypot(a[1])) * (b[0].hypot(b[1]));
                angle += (dot / n).acos();
            }
        }
        assert!((angle - 7.0 * PI / 4.0).abs() < 1e-12);
    }

    #[test]
    fn zshape_refinement_edges_are_shared() {
        let m = zshape(false);
        let topo = m.topology();
        for t in 0..m.num_elements() {
            let e = topo.element_edges[t][0];
            if let Some(nb) = topo.neighbor(e, t) {
                assert_eq!(topo.element_edges[nb][0], e, "element {t} and {nb}");
            }
        }
    }

    #[test]
    fn zshape_neumann_edges() {
        let m = zshape(true);
        let neumann: Vec<_> = m.boundary().iter().filter(|f| f.tag == BoundaryTag::Neumann).collect();
        assert_eq!(neumann.len(), 3);
        for f in neumann {
            for v in f.vertices {
                let p = m.vertex(v);
                assert!(p[1] == 0.0 && p[0] >= 0.0 || (p[0] + p[1]).abs() < 1e-15);
            }
        }
    }
}
