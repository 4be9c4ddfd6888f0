//! Small closed triangulations used by tests, benchmarks and examples.

use super::Triangulation;

/// Boundary of the 3-simplex: 4 vertices, 6 edges, 4 faces, χ = 2.
pub fn tetrahedron() -> Triangulation {
    Triangulation::from_faces(4, vec![[0, 1, 2], [0, 3, 1], [0, 2, 3], [1, 3, 2]])
        .expect("tetrahedron is closed")
}

/// Möbius' 7-vertex torus: every vertex has degree 6, χ = 0.
pub fn torus7() -> Triangulation {
    let faces = (0..7)
        .flat_map(|i| [[i, (i + 1) % 7, (i + 3) % 7], [i, (i + 3) % 7, (i + 2) % 7]])
        .collect();
    Triangulation::from_faces(7, faces).expect("7-vertex torus is closed")
}

/// A 10-vertex orientable genus-2 triangulation (36 edges, 24 faces, χ = −2)
/// with every vertex of degree 7 or 8.
///
/// Obtained from the connected sum of two 7-vertex tori by one edge
/// contraction followed by degree-balancing edge flips.
pub fn genus2() -> Triangulation {
    let faces = vec![
        [1, 2, 4],
        [2, 5, 4],
        [3, 6, 5],
        [4, 5, 0],
        [6, 0, 2],
        [9, 1, 0],
        [8, 3, 9],
        [4, 0, 6],
        [4, 6, 3],
        [2, 3, 5],
        [4, 8, 1],
        [4, 3, 8],
        [7, 9, 3],
        [7, 1, 8],
        [7, 8, 5],
        [0, 1, 7],
        [2, 0, 7],
        [2, 7, 3],
        [1, 6, 2],
        [1, 9, 6],
        [0, 5, 8],
        [0, 8, 9],
        [5, 6, 9],
        [5, 9, 7],
    ];
    Triangulation::from_faces(10, faces).expect("genus-2 mesh is closed")
}

/// Regular `rows × cols` torus grid, each quad split along the same diagonal.
/// Every vertex has degree 6. Needs `rows, cols >= 3`.
pub fn torus_grid(rows: usize, cols: usize) -> Triangulation {
    assert!(
        rows >= 3 && cols >= 3,
        "torus grid needs at least 3x3 cells"
    );
    let id = |r: usize, c: usize| (r % rows) * cols + (c % cols);
    let mut faces = Vec::with_capacity(2 * rows * cols);
    for r in 0..rows {
        for c in 0..cols {
            let (a, b, cc, d) = (id(r, c), id(r, c + 1), id(r + 1, c + 1), id(r + 1, c));
            faces.push([a, b, cc]);
            faces.push([a, cc, d]);
        }
    }
    Triangulation::from_faces(rows * cols, faces).expect("torus grid is closed")
}
