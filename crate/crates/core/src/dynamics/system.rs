//! Linear state-space model of generators, storage inverters and the
//! reduced network.
//!
//! State `x = [delta; omega; E_S]`:
//! * `delta`: angles of generators 2..n_G and of every storage node,
//!   relative to generator 1 (length `n_G + n_S - 1`);
//! * `omega`: generator then storage frequencies, rad/s (length `n_G + n_S`);
//! * `E_S`: energy absorbed by each storage node since t = 0, J.
//!
//! Input `u = [P_ref; p_L]` with `p_L` the load-bus injections (negative of
//! net consumption). Then `x' = A x + B u + c` with
//!
//! ```text
//!     [  0      T    0 ]       [  0    0    ]       [    0      ]
//! A = [ -F G   -Phi  0 ]   B = [  F   -F H  ]   c = [ Phi w0 1  ]
//!     [ -G_S    0    0 ]       [  0   -H_2  ]       [    0      ]
//! ```
//!
//! where `G_S = [G3 | G4]` are the storage rows of `G`, so that the last
//! block row is the power drawn from the grid by each storage node.

use nalgebra::{DMatrix, DVector};

use super::{DynamicsError, StorageUnit};
use crate::grid::{BusId, GridModel, ReducedNetwork};
use crate::optimize::Distribution;

/// Names the physical quantity behind each state slot.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct StateLayout {
    pub generators: Vec<BusId>,
    pub storage_hosts: Vec<BusId>,
    pub loads: Vec<BusId>,
}

impl StateLayout {
    pub fn n_g(&self) -> usize {
        self.generators.len()
    }

    pub fn n_s(&self) -> usize {
        self.storage_hosts.len()
    }

    pub fn n_l(&self) -> usize {
        self.loads.len()
    }

    /// Number of rotating nodes (generators plus storage nodes).
    pub fn n_rot(&self) -> usize {
        self.n_g() + self.n_s()
    }

    pub fn n_angles(&self) -> usize {
        self.n_rot() - 1
    }

    pub fn n_states(&self) -> usize {
        self.n_angles() + self.n_rot() + self.n_s()
    }

    pub fn n_inputs(&self) -> usize {
        self.n_rot() + self.n_l()
    }

    pub fn omega_g(&self, i: usize) -> usize {
        self.n_angles() + i
    }

    pub fn omega_s(&self, k: usize) -> usize {
        self.n_angles() + self.n_g() + k
    }

    pub fn energy(&self, k: usize) -> usize {
        self.n_angles() + self.n_rot() + k
    }

    /// Human-readable name of state slot `idx`.
    pub fn state_name(&self, idx: usize) -> String {
        let na = self.n_angles();
        let nr = self.n_rot();
        if idx < na {
            let node = idx + 1;
            if node < self.n_g() {
                format!("delta_G_{}", self.generators[node])
            } else {
                format!("delta_S_{}", self.storage_hosts[node - self.n_g()])
            }
        } else if idx < na + self.n_g() {
            format!("omega_G_{}", self.generators[idx - na])
        } else if idx < na + nr {
            format!("omega_S_{}", self.storage_hosts[idx - na - self.n_g()])
        } else {
            format!("E_S_{}", self.storage_hosts[idx - na - nr])
        }
    }
}

#[derive(Debug, Clone)]
pub struct SystemMatrices {
    pub layout: StateLayout,
    pub a: DMatrix<f64>,
    pub b: DMatrix<f64>,
    pub affine: DVector<f64>,
    /// Injections of generator and storage nodes: `P = C x + D u`, W.
    pub power_c: DMatrix<f64>,
    pub power_d: DMatrix<f64>,
    pub omega0: f64,
    /// Rotor inertias J_i, used as centre-of-inertia weights.
    pub inertias: Vec<f64>,
    /// Generator rated powers in W, used for pre-event dispatch.
    pub rated_powers: Vec<f64>,
    /// Net pre-event consumption per load bus, W.
    pub base_load: Vec<f64>,
    pub storage: StorageUnit,
}

/// Assembles the state-space model for `grid` with storage placed as in
/// `placement`. `reduced` must come from the same grid and placement.
pub fn assemble_system(
    grid: &GridModel,
    reduced: &ReducedNetwork,
    placement: &Distribution,
    storage: &StorageUnit,
) -> Result<SystemMatrices, DynamicsError> {
    storage.validate()?;
    let storage_hosts: Vec<BusId> = placement.occupied().map(|(b, _)| b).collect();
    let units: Vec<u32> = placement.occupied().map(|(_, c)| c).collect();
    let layout = StateLayout {
        generators: grid.generators().map(|(b, _)| b).collect(),
        storage_hosts,
        loads: grid.load_buses().collect(),
    };
    if reduced.n_g() != layout.n_g()
        || reduced.n_s() != layout.n_s()
        || reduced.n_l() != layout.n_l()
    {
        return Err(DynamicsError::DimensionMismatch(format!(
            "reduced network has {}/{}/{} generator/storage/load nodes, placement implies {}/{}/{}",
            reduced.n_g(),
            reduced.n_s(),
            reduced.n_l(),
            layout.n_g(),
            layout.n_s(),
            layout.n_l()
        )));
    }

    let w0 = grid.omega0();
    let p_base = grid.bases().p_base_w();
    let (n_g, n_s, n_l) = (layout.n_g(), layout.n_s(), layout.n_l());
    let (na, nr, nx, nu) = (
        layout.n_angles(),
        layout.n_rot(),
        layout.n_states(),
        layout.n_inputs(),
    );

    // Diagonals of F and Phi.
    let mut f = Vec::with_capacity(nr);
    let mut phi = Vec::with_capacity(nr);
    let mut inertias = Vec::with_capacity(n_g);
    let mut rated_powers = Vec::with_capacity(n_g);
    for (_, g) in grid.generators() {
        let k = g.swing_gain(w0);
        f.push(3.0 * k);
        phi.push(k / g.damping(w0));
        inertias.push(g.rotor_inertia(w0));
        rated_powers.push(g.rated_power_w());
    }
    for &u in &units {
        let d_s = 1.0 / (f64::from(u) * storage.inverse_damping);
        f.push(3.0 * d_s / storage.params.filter_alpha);
        phi.push(1.0 / storage.params.filter_alpha);
    }

    let g = reduced.g_matrix() * p_base;
    let h = reduced.h_matrix();

    let mut a = DMatrix::<f64>::zeros(nx, nx);
    for r in 0..na {
        a[(r, na)] = -1.0;
        a[(r, na + r + 1)] = 1.0;
    }
    for i in 0..nr {
        for j in 0..na {
            a[(na + i, j)] = -f[i] * g[(i, j)];
        }
        a[(na + i, na + i)] = -phi[i];
    }
    for k in 0..n_s {
        for j in 0..na {
            a[(na + nr + k, j)] = -g[(n_g + k, j)];
        }
    }

    let mut b = DMatrix::<f64>::zeros(nx, nu);
    for i in 0..nr {
        b[(na + i, i)] = f[i];
        for l in 0..n_l {
            b[(na + i, nr + l)] = -f[i] * h[(i, l)];
        }
    }
    for k in 0..n_s {
        for l in 0..n_l {
            b[(na + nr + k, nr + l)] = -h[(n_g + k, l)];
        }
    }

    let mut affine = DVector::<f64>::zeros(nx);
    for i in 0..nr {
        affine[na + i] = phi[i] * w0;
    }

    let mut power_c = DMatrix::<f64>::zeros(nr, nx);
    power_c.view_mut((0, 0), (nr, na)).copy_from(&g);
    let mut power_d = DMatrix::<f64>::zeros(nr, nu);
    power_d.view_mut((0, nr), (nr, n_l)).copy_from(h);

    Ok(SystemMatrices {
        layout,
        a,
        b,
        affine,
        power_c,
        power_d,
        omega0: w0,
        inertias,
        rated_powers,
        base_load: grid.load_vector_w(),
        storage: *storage,
    })
}

/// Operating point the simulation starts from.
#[derive(Debug, Clone)]
pub struct Equilibrium {
    pub state: DVector<f64>,
    pub input: DVector<f64>,
}

impl SystemMatrices {
    /// Input vector for generator set-points `p_ref` and load consumption
    /// `consumption` (W per load bus).
    pub fn input(&self, p_ref: &[f64], consumption: &[f64]) -> DVector<f64> {
        let nr = self.layout.n_rot();
        let mut u = DVector::zeros(self.layout.n_inputs());
        for (i, p) in p_ref.iter().enumerate() {
            u[i] = *p;
        }
        for (l, c) in consumption.iter().enumerate() {
            u[nr + l] = -c;
        }
        u
    }

    /// Balanced steady state for the given consumption: every frequency at
    /// w0, generators dispatched pro rata to rated power, storage idle.
    pub fn equilibrium(&self, consumption: &[f64]) -> Result<Equilibrium, DynamicsError> {
        let lay = &self.layout;
        let total: f64 = consumption.iter().sum();
        let rated: f64 = self.rated_powers.iter().sum();
        let mut p_ref = vec![0.0; lay.n_rot()];
        for (i, p) in self.rated_powers.iter().enumerate() {
            p_ref[i] = total * p / rated;
        }
        let input = self.input(&p_ref, consumption);

        let (na, nr) = (lay.n_angles(), lay.n_rot());
        let mut state = DVector::zeros(lay.n_states());
        if na > 0 {
            // Angles solve G delta = P_ref - H p_L; the first row is implied
            // by power balance, the rest is the grounded reduced Laplacian.
            let target = DVector::from_column_slice(&p_ref) - &self.power_d * &input;
            let g_ground = self.power_c.view((1, 0), (nr - 1, na)).into_owned();
            let rhs = target.rows(1, nr - 1).into_owned();
            let delta = g_ground
                .lu()
                .solve(&rhs)
                .ok_or_else(|| DynamicsError::Numerical("reduced Laplacian is singular".into()))?;
            state.rows_mut(0, na).copy_from(&delta);
        }
        for i in 0..nr {
            state[na + i] = self.omega0;
        }
        Ok(Equilibrium { state, input })
    }

    pub fn derivative(&self, x: &DVector<f64>, u: &DVector<f64>) -> DVector<f64> {
        &self.a * x + &self.b * u + &self.affine
    }

    /// Generator and storage injections into the network, W.
    pub fn injections(&self, x: &DVector<f64>, u: &DVector<f64>) -> DVector<f64> {
        &self.power_c * x + &self.power_d * u
    }
}
