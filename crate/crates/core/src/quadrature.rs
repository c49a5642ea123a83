//! Fixed quadrature rules: 7-point degree-5 rule on triangles, 3-point Gauss on edges.

use crate::mesh::Point;

/// Barycentric nodes and weights (summing to 1) of the symmetric degree-5 rule.
pub fn triangle_rule() -> [([f64; 3], f64); 7] {
    let s15 = 15f64.sqrt();
    let a1 = (6.0 - s15) / 21.0;
    let b1 = 1.0 - 2.0 * a1;
    let w1 = (155.0 - s15) / 1200.0;
    let a2 = (6.0 + s15) / 21.0;
    let b2 = 1.0 - 2.0 * a2;
    let w2 = (155.0 + s15) / 1200.0;
    let c = 1.0 / 3.0;
    [
        ([c, c, c], 9.0 / 40.0),
        ([a1, a1, b1], w1),
        ([a1, b1, a1], w1),
        ([b1, a1, a1], w1),
        ([a2, a2, b2], w2),
        ([a2, b2, a2], w2),
        ([b2, a2, a2], w2),
    ]
}

/// Gauss-Legendre nodes on `[0, 1]` and weights (summing to 1), exact to degree 5.
pub fn edge_rule() -> [(f64, f64); 3] {
    let d = 0.5 * (0.6f64).sqrt();
    [(0.5 - d, 5.0 / 18.0), (0.5, 8.0 / 18.0), (0.5 + d, 5.0 / 18.0)]
}

pub fn map_barycentric(p: &[Point; 3], lam: [f64; 3]) -> Point {
    [
        lam[0] * p[0][0] + lam[1] * p[1][0] + lam[2] * p[2][0],
        lam[0] * p[0][1] + lam[1] * p[1][1] + lam[2] * p[2][1],
    ]
}

/// `∫_T f` with the degree-5 rule; `area` is `|T|`.
pub fn integrate_triangle(p: &[Point; 3], area: f64, mut f: impl FnMut(Point, [f64; 3]) -> f64) -> f64 {
    triangle_rule()
        .iter()
        .map(|(lam, w)| w * f(map_barycentric(p, *lam), *lam))
        .sum::<f64>()
        * area
}

/// `∫_T f` on a `4^levels` uniform red subdivision of `T`, each piece with the degree-5 rule.
pub fn integrate_triangle_composite(p: &[Point; 3], area: f64, levels: u32, f: &mut impl FnMut(Point) -> f64) -> f64 {
    if levels == 0 {
        return integrate_triangle(p, area, |x, _| f(x));
    }
    let m01 = mid(p[0], p[1]);
    let m12 = mid(p[1], p[2]);
    let m20 = mid(p[2], p[0]);
    let a = 0.25 * area;
    [
        [p[0], m01, m20],
        [m01, p[1], m12],
        [m20, m12, p[2]],
        [m12, m20, m01],
    ]
    .iter()
    .map(|q| integrate_triangle_composite(q, a, levels - 1, f))
    .sum()
}

fn mid(a: Point, b: Point) -> Point {
    [0.5 * (a[0] + b[0]), 0.5 * (a[1] + b[1])]
}

/// `∫_E f ds` over the segment `a → b`; `f` also receives the parameter in `[0, 1]`.
pub fn integrate_edge(a: Point, b: Point, mut f: impl FnMut(Point, f64) -> f64) -> f64 {
    let len = ((b[0] - a[0]).powi(2) + (b[1] - a[1]).powi(2)).sqrt();
    edge_rule()
        .iter()
        .map(|(s, w)| {
            let x = [a[0] + s * (b[0] - a[0]), a[1] + s * (b[1] - a[1])];
            w * f(x, *s)
        })
        .sum::<f64>()
        * len
}

#[cfg(test)]
mod tests {
    use super::*;

    fn monomial_integral_ref(i: i32, j: i32) -> f64 {
        // ∫ x^i y^j over the reference triangle = i! j! / (i + j + 2)!
        let fact = |n: i32| (1..=n).map(f64::from).product::<f64>();
        fact(i) * fact(j) / fact(i + j + 2)
    }

    #[test]
    fn weights_sum_to_one() {
        let s: f64 = triangle_rule().iter().map(|(_, w)| w).sum();
        assert!((s - 1.0).abs() < 1e-15);
        let s: f64 = edge_rule().iter().map(|(_, w)| w).sum();
        assert!((s - 1.0).abs() < 1e-15);
    }

    #[test]
    fn triangle_rule_exact_to_degree_five() {
        let p = [[0.0, 0.0], [1.0, 0.0], [0.0, 1.0]];
        for i in 0..=5 {
            for j in 0..=(5 - i) {
                let q = integrate_triangle(&p, 0.5, |x, _| x[0].powi(i) * x[1].powi(j));
                let exact = monomial_integral_ref(i, j);
                assert!((q - exact).abs() < 1e-15, "x^{i} y^{j}: {q} vs {exact}");
            }
        }
    }

    #[test]
    fn composite_matches_single_rule_for_polynomials() {
        let p = [[0.2, -0.1], [1.3, 0.4], [0.1, 0.9]];
        let area = crate::mesh::signed_area(p[0], p[1], p[2]);
        let f = |x: Point| x[0] * x[0] * x[1] - 3.0 * x[1] + 1.0;
        let single = integrate_triangle(&p, area, |x, _| f(x));
        let comp = integrate_triangle_composite(&p, area, 3, &mut |x| f(x));
        assert!((single - comp).abs() < 1e-13);
    }

    #[test]
    fn edge_rule_exact_to_degree_five() {
        for k in 0..=5 {
            let q = integrate_edge([0.0, 0.0], [2.0, 0.0], |x, _| x[0].powi(k));
            let exact = 2f64.powi(k + 1) / f64::from(k + 1);
            assert!((q - exact).abs() < 1e-13);
        }
    }
}
