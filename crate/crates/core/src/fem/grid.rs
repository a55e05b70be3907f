/// Structured grid of `cells³` cubes covering the unit cube.
///
/// Periodic grids identify the faces `x_i = 0` and `x_i = 1`, so they carry
/// `cells³` nodes; bounded grids carry `(cells + 1)³`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Grid {
    cells: usize,
    periodic: bool,
}

/// Lattice offsets of the eight element nodes; local node `a` sits at
/// `(a & 1, (a >> 1) & 1, (a >> 2) & 1)`.
pub const CORNERS: [[usize; 3]; 8] = [
    [0, 0, 0],
    [1, 0, 0],
    [0, 1, 0],
    [1, 1, 0],
    [0, 0, 1],
    [1, 0, 1],
    [0, 1, 1],
    [1, 1, 1],
];

impl Grid {
    pub fn bounded(cells: usize) -> Self {
        assert!(cells > 0);
        Self { cells, periodic: false }
    }

    pub fn periodic(cells: usize) -> Self {
        assert!(cells > 0);
        Self { cells, periodic: true }
    }

    pub fn cells_per_axis(&self) -> usize {
        self.cells
    }

    pub fn spacing(&self) -> f64 {
        1.0 / self.cells as f64
    }

    pub fn is_periodic(&self) -> bool {
        self.periodic
    }

    pub fn nodes_per_axis(&self) -> usize {
        if self.periodic {
            self.cells
        } else {
            self.cells + 1
        }
    }

    pub fn num_nodes(&self) -> usize {
        self.nodes_per_axis().pow(3)
    }

    pub fn num_cells(&self) -> usize {
        self.cells.pow(3)
    }

    pub fn cell_index(&self, c: [usize; 3]) -> usize {
        c[0] + self.cells * (c[1] + self.cells * c[2])
    }

    pub fn cell_coords(&self, idx: usize) -> [usize; 3] {
        let n = self.cells;
        [idx % n, (idx / n) % n, idx / (n * n)]
    }

    /// Node index of lattice point `p`; periodic grids wrap `p_i = cells` to 0.
    pub fn node_index(&self, p: [usize; 3]) -> usize {
        let m = self.nodes_per_axis();
        let w = |v: usize| if self.periodic { v % self.cells } else { v };
        w(p[0]) + m * (w(p[1]) + m * w(p[2]))
    }

    pub fn node_coords(&self, idx: usize) -> [usize; 3] {
        let m = self.nodes_per_axis();
        [idx % m, (idx / m) % m, idx / (m * m)]
    }

    pub fn node_position(&self, idx: usize) -> [f64; 3] {
        let h = self.spacing();
        let c = self.node_coords(idx);
        [c[0] as f64 * h, c[1] as f64 * h, c[2] as f64 * h]
    }

    pub fn cell_nodes(&self, cell: usize) -> [usize; 8] {
        let c = self.cell_coords(cell);
        CORNERS.map(|o| self.node_index([c[0] + o[0], c[1] + o[1], c[2] + o[2]]))
    }

    pub fn cell_origin(&self, cell: usize) -> [f64; 3] {
        let h = self.spacing();
        self.cell_coords(cell).map(|v| v as f64 * h)
    }

    /// True for nodes on the outer boundary of a bounded grid.
    pub fn is_boundary_node(&self, idx: usize) -> bool {
        if self.periodic {
            return false;
        }
        self.node_coords(idx).iter().any(|&v| v == 0 || v == self.cells)
    }

    /// Cell containing `x` and the local coordinates of `x` in it. Points on
    /// or outside the boundary are clamped into the nearest cell; periodic
    /// grids wrap first.
    pub fn locate(&self, x: [f64; 3]) -> (usize, [f64; 3]) {
        let n = self.cells as f64;
        let mut c = [0usize; 3];
        let mut xi = [0.0; 3];
        for d in 0..3 {
            let mut s = x[d];
            if self.periodic {
                s -= s.floor();
            }
            let t = (s * n).clamp(0.0, n);
            let k = (t.floor() as usize).min(self.cells - 1);
            c[d] = k;
            xi[d] = t - k as f64;
        }
        (self.cell_index(c), xi)
    }

    /// Cell neighbour across face `axis` in the positive direction, if any.
    pub fn upper_neighbour(&self, cell: usize, axis: usize) -> Option<usize> {
        let mut c = self.cell_coords(cell);
        if c[axis] + 1 == self.cells {
            if !self.periodic {
                return None;
            }
            c[axis] = 0;
        } else {
            c[axis] += 1;
        }
        Some(self.cell_index(c))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn counts() {
        assert_eq!(Grid::bounded(4).num_nodes(), 125);
        assert_eq!(Grid::periodic(4).num_nodes(), 64);
        assert_eq!(Grid::periodic(4).num_cells(), 64);
    }

    #[test]
    fn periodic_wrap_of_last_cell() {
        let g = Grid::periodic(3);
        let nodes = g.cell_nodes(g.cell_index([2, 2, 2]));
        assert_eq!(nodes[7], 0);
        assert_eq!(nodes[0], g.node_index([2, 2, 2]));
    }

    #[test]
    fn locate_roundtrip() {
        let g = Grid::bounded(5);
        let (c, xi) = g.locate([0.31, 0.99, 1.0]);
        assert_eq!(g.cell_coords(c), [1, 4, 4]);
        assert!((xi[0] - 0.55).abs() < 1e-12);
        assert!((xi[2] - 1.0).abs() < 1e-12);
        let p = Grid::periodic(4);
        let (c, _) = p.locate([1.1, -0.1, 0.5]);
        assert_eq!(p.cell_coords(c), [0, 3, 2]);
    }

    #[test]
    fn boundary_flags() {
        let g = Grid::bounded(2);
        let interior: Vec<_> = (0..g.num_nodes()).filter(|&i| !g.is_boundary_node(i)).collect();
        assert_eq!(interior, vec![g.node_index([1, 1, 1])]);
    }
}
