use spade::{DelaunayTriangulation, HasPosition, Point2, Triangulation};

struct Indexed {
    position: Point2<f64>,
    index: usize,
}

impl HasPosition for Indexed {
    type Scalar = f64;

    fn position(&self) -> Point2<f64> {
        self.position
    }
}

/// Triangles of the Delaunay triangulation of `points`, as sorted index
/// triples in ascending order. Duplicate points collapse onto one vertex and
/// collinear input has no triangles.
pub fn delaunay_triangles(points: &[[f64; 2]]) -> Vec<[usize; 3]> {
    let vertices = points
        .iter()
        .enumerate()
        .map(|(index, p)| Indexed {
            position: Point2::new(p[0], p[1]),
            index,
        })
        .collect();
    let Ok(dt) = DelaunayTriangulation::<Indexed>::bulk_load(vertices) else {
        return Vec::new();
    };
    let mut triangles: Vec<[usize; 3]> = dt
        .inner_faces()
        .map(|face| {
            let mut t = face.vertices().map(|v| v.data().index);
            t.sort_unstable();
            t
        })
        .collect();
    triangles.sort_unstable();
    triangles
}
