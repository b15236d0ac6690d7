//! Admittance assembly and Kron reduction of the DC power flow.
//!
//! Nodes are ordered generators, then storage nodes, then loads. With
//! injections `p = Y theta` partitioned as
//!
//! ```text
//! [p_gs]   [U11 U12] [theta_gs]
//! [p_L ] = [U21 U22] [theta_L ]
//! ```
//!
//! eliminating the load angles gives
//! `p_gs = (U11 - U12 U22^-1 U21) theta_gs + U12 U22^-1 p_L`.
//! The angle of the first generator is the reference, so the coefficient
//! of `theta_gs` loses its first column once angles are taken relative to it.

use nalgebra::{DMatrix, DMatrixView};

use super::model::{BusId, GridModel};
use super::GridError;
use crate::optimize::Distribution;

/// Relative condition number above which U22 is treated as singular.
pub const SINGULAR_CONDITION: f64 = 1e12;

/// Default stiffness of the tie between a storage node and its host bus, p.u.
pub const DEFAULT_COUPLING_PU: f64 = 1000.0;

/// Which physical element each row/column of the sorted admittance is.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct NodeLayout {
    pub generators: Vec<BusId>,
    /// Host bus of each aggregated storage node, ascending.
    pub storage_hosts: Vec<BusId>,
    /// Units aggregated into each storage node.
    pub storage_units: Vec<u32>,
    pub loads: Vec<BusId>,
}

impl NodeLayout {
    pub fn n_g(&self) -> usize {
        self.generators.len()
    }

    pub fn n_s(&self) -> usize {
        self.storage_hosts.len()
    }

    pub fn n_l(&self) -> usize {
        self.loads.len()
    }

    pub fn len(&self) -> usize {
        self.n_g() + self.n_s() + self.n_l()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Matrix row of the network node that represents `bus` itself.
    pub fn node_of_bus(&self, bus: BusId) -> Option<usize> {
        if let Ok(i) = self.generators.binary_search(&bus) {
            return Some(i);
        }
        self.loads
            .binary_search(&bus)
            .ok()
            .map(|i| self.n_g() + self.n_s() + i)
    }
}

#[derive(Debug, Clone)]
pub struct Admittance {
    /// Laplacian-structured susceptance matrix, per unit.
    pub matrix: DMatrix<f64>,
    pub layout: NodeLayout,
}

/// Builds the sorted admittance (Laplacian) matrix for `grid` with one
/// aggregated storage node per occupied bus, tied to it by `coupling_b`.
pub fn build_admittance(
    grid: &GridModel,
    placement: &Distribution,
    coupling_b: f64,
) -> Result<Admittance, GridError> {
    if !(coupling_b > 0.0) || !coupling_b.is_finite() {
        return Err(GridError::NonPositive {
            what: "storage coupling susceptance".into(),
        });
    }
    let n = grid.n_buses();
    let counts = placement.counts();
    if let Some(extra) = counts.iter().skip(n).position(|&c| c > 0) {
        return Err(GridError::UnknownBus(BusId::from_index(n + extra)));
    }
    if counts.len() < n {
        return Err(GridError::Invalid(format!(
            "placement covers {} buses, grid has {n}",
            counts.len()
        )));
    }

    let mut storage_hosts = Vec::new();
    let mut storage_units = Vec::new();
    for (i, &c) in counts.iter().take(n).enumerate() {
        if c > 0 {
            storage_hosts.push(BusId::from_index(i));
            storage_units.push(c);
        }
    }
    let layout = NodeLayout {
        generators: grid.generators().map(|(id, _)| id).collect(),
        storage_hosts,
        storage_units,
        loads: grid.load_buses().collect(),
    };

    let size = layout.len();
    let mut y = DMatrix::<f64>::zeros(size, size);
    let mut connect = |a: usize, b: usize, s: f64| {
        y[(a, b)] -= s;
        y[(b, a)] -= s;
        y[(a, a)] += s;
        y[(b, b)] += s;
    };
    for line in grid.lines() {
        let a = layout.node_of_bus(line.from).expect("validated bus");
        let b = layout.node_of_bus(line.to).expect("validated bus");
        connect(a, b, line.susceptance);
    }
    for (k, host) in layout.storage_hosts.iter().enumerate() {
        let host_node = layout.node_of_bus(*host).expect("validated bus");
        connect(layout.n_g() + k, host_node, coupling_b);
    }
    Ok(Admittance { matrix: y, layout })
}

/// Kron-reduced coupling of generator and storage nodes.
#[derive(Debug, Clone)]
pub struct ReducedNetwork {
    n_g: usize,
    n_s: usize,
    /// `U11 - U12 U22^-1 U21`, square over generator+storage nodes.
    g_full: DMatrix<f64>,
    /// `g_full` without its first column: acts on angles relative to generator 1.
    g_matrix: DMatrix<f64>,
    /// `U12 U22^-1`, acts on load-bus injections.
    h_matrix: DMatrix<f64>,
}

impl ReducedNetwork {
    pub fn n_g(&self) -> usize {
        self.n_g
    }

    pub fn n_s(&self) -> usize {
        self.n_s
    }

    pub fn n_l(&self) -> usize {
        self.h_matrix.ncols()
    }

    pub fn g_full(&self) -> &DMatrix<f64> {
        &self.g_full
    }

    pub fn g_matrix(&self) -> &DMatrix<f64> {
        &self.g_matrix
    }

    pub fn h_matrix(&self) -> &DMatrix<f64> {
        &self.h_matrix
    }

    pub fn g1(&self) -> DMatrixView<'_, f64> {
        self.g_matrix.view((0, 0), (self.n_g, self.n_g - 1))
    }

    pub fn g2(&self) -> DMatrixView<'_, f64> {
        self.g_matrix.view((0, self.n_g - 1), (self.n_g, self.n_s))
    }

    pub fn g3(&self) -> DMatrixView<'_, f64> {
        self.g_matrix.view((self.n_g, 0), (self.n_s, self.n_g - 1))
    }

    pub fn g4(&self) -> DMatrixView<'_, f64> {
        self.g_matrix
            .view((self.n_g, self.n_g - 1), (self.n_s, self.n_s))
    }

    pub fn h1(&self) -> DMatrixView<'_, f64> {
        self.h_matrix.view((0, 0), (self.n_g, self.n_l()))
    }

    pub fn h2(&self) -> DMatrixView<'_, f64> {
        self.h_matrix.view((self.n_g, 0), (self.n_s, self.n_l()))
    }
}

pub fn reduce_network(
    admittance: &DMatrix<f64>,
    n_g: usize,
    n_s: usize,
) -> Result<ReducedNetwork, GridError> {
    let size = admittance.nrows();
    let m = n_g + n_s;
    if admittance.ncols() != size || n_g == 0 || m > size {
        return Err(GridError::DimensionMismatch(format!(
            "admittance is {}x{}, cannot split {n_g} generator and {n_s} storage nodes",
            size,
            admittance.ncols()
        )));
    }
    let n_l = size - m;
    let u11 = admittance.view((0, 0), (m, m));

    let (g_full, h_matrix) = if n_l == 0 {
        (u11.into_owned(), DMatrix::zeros(m, 0))
    } else {
        let u12 = admittance.view((0, m), (m, n_l));
        let u21 = admittance.view((m, 0), (n_l, m));
        let u22 = admittance.view((m, m), (n_l, n_l)).into_owned();
        let inv = u22
            .clone()
            .lu()
            .try_inverse()
            .ok_or(GridError::SingularLoadBlock {
                condition: f64::INFINITY,
            })?;
        let condition = norm1(&u22) * norm1(&inv);
        if !(condition <= SINGULAR_CONDITION) {
            return Err(GridError::SingularLoadBlock { condition });
        }
        let h = u12 * &inv;
        let g = u11 - &h * u21;
        (g, h)
    };
    let g_matrix = g_full.columns(1, m - 1).into_owned();
    Ok(ReducedNetwork {
        n_g,
        n_s,
        g_full,
        g_matrix,
        h_matrix,
    })
}

fn norm1(m: &DMatrix<f64>) -> f64 {
    m.column_iter()
        .map(|c| c.iter().map(|v| v.abs()).sum::<f64>())
        .fold(0.0, f64::max)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::parse_grid;

    fn two_bus() -> GridModel {
        parse_grid("[buses]\n1 generator 1000 6 2 0.05\n2 load\n[lines]\n1 2 5\n").unwrap()
    }

    #[test]
    fn single_line_laplacian() {
        let g = two_bus();
        let y = build_admittance(&g, &Distribution::empty(2), DEFAULT_COUPLING_PU).unwrap();
        assert_eq!(
            y.matrix,
            DMatrix::from_row_slice(2, 2, &[5.0, -5.0, -5.0, 5.0])
        );
    }

    #[test]
    fn placement_beyond_grid_is_unknown_bus() {
        let g = two_bus();
        let d = Distribution::from_counts(vec![0, 0, 1]);
        assert!(matches!(
            build_admittance(&g, &d, 1.0),
            Err(GridError::UnknownBus(BusId(3)))
        ));
    }

    #[test]
    fn no_loads_means_no_elimination() {
        let g = parse_grid(
            "[buses]\n1 generator 1000 6 2 0.05\n2 generator 500 6 2 0.05\n[lines]\n1 2 3\n",
        )
        .unwrap();
        let y = build_admittance(&g, &Distribution::empty(2), 1.0).unwrap();
        let r = reduce_network(&y.matrix, 2, 0).unwrap();
        assert_eq!(r.h_matrix().shape(), (2, 0));
        assert_eq!(r.g_full(), &y.matrix);
        assert_eq!(r.g_matrix().shape(), (2, 1));
    }

    #[test]
    fn singular_load_block_detected() {
        // Load bus 3 floats: its U22 row is zero.
        let mut y = DMatrix::<f64>::zeros(3, 3);
        y[(0, 0)] = 1.0;
        y[(0, 1)] = -1.0;
        y[(1, 0)] = -1.0;
        y[(1, 1)] = 1.0;
        let err = reduce_network(&y, 1, 0).unwrap_err();
        assert!(matches!(err, GridError::SingularLoadBlock { .. }));
    }

    #[test]
    fn dimension_mismatch() {
        let y = DMatrix::<f64>::zeros(2, 2);
        assert!(matches!(
            reduce_network(&y, 2, 1),
            Err(GridError::DimensionMismatch(_))
        ));
    }
}
