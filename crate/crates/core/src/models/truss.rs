use serde::{Deserialize, Serialize};

use crate::numerics::Matrix;
use crate::operators::{OpError, OpResult, Operators};

use super::ModelError;

/// Green-strain bar between two points. Returns the force on the end node
/// (the start node receives its negative), the 2×2 end-node tangent block and
/// the Green strain `E = (L² − L₀²) / (2L₀²)`.
///
/// `x0` is the undeformed end-minus-start vector, `d` the deformed one.
pub fn green_bar(x0: [f64; 2], d: [f64; 2], ea: f64) -> ([f64; 2], [[f64; 2]; 2], f64) {
    let l0sq = x0[0] * x0[0] + x0[1] * x0[1];
    let l0 = l0sq.sqrt();
    let lsq = d[0] * d[0] + d[1] * d[1];
    let strain = (lsq - l0sq) / (2.0 * l0sq);
    let c = ea / l0;
    let f = [c * strain * d[0], c * strain * d[1]];
    let k = [
        [c * (strain + d[0] * d[0] / l0sq), c * d[0] * d[1] / l0sq],
        [c * d[1] * d[0] / l0sq, c * (strain + d[1] * d[1] / l0sq)],
    ];
    (f, k, strain)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Member {
    pub start: usize,
    pub end: usize,
    pub ea: f64,
}

/// Planar pin-jointed truss with Green-strain members, grounded linear
/// springs, fixed DoFs and an optional prescribed-displacement driver.
///
/// Global DoF `2i` is the x-displacement of node `i`, `2i + 1` the
/// y-displacement. The operator acts on the free DoFs in ascending global
/// order.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrussLattice {
    nodes: Vec<[f64; 2]>,
    members: Vec<Member>,
    springs: Vec<(usize, f64)>,
    fixed: Vec<bool>,
    load: Vec<f64>,
    node_mass: f64,
    driver: Option<(usize, f64)>,
    free: Vec<usize>,
}

impl TrussLattice {
    pub fn new(nodes: Vec<[f64; 2]>, members: Vec<Member>) -> Result<Self, ModelError> {
        let ndof = 2 * nodes.len();
        for (i, m) in members.iter().enumerate() {
            if m.start >= nodes.len() || m.end >= nodes.len() || m.start == m.end {
                return Err(ModelError::invalid("members", format!("member {i} has bad connectivity")));
            }
            if !(m.ea > 0.0 && m.ea.is_finite()) {
                return Err(ModelError::invalid("ea", format!("member {i} needs positive EA")));
            }
            let a = nodes[m.start];
            let b = nodes[m.end];
            if (a[0] - b[0]).hypot(a[1] - b[1]) == 0.0 {
                return Err(ModelError::invalid("members", format!("member {i} has zero length")));
            }
        }
        let mut t = Self {
            nodes,
            members,
            springs: Vec::new(),
            fixed: vec![false; ndof],
            load: vec![0.0; ndof],
            node_mass: 1.0,
            driver: None,
            free: Vec::new(),
        };
        t.refresh_free();
        Ok(t)
    }

    fn refresh_free(&mut self) {
        let driven = self.driver.map(|d| d.0);
        self.free = (0..self.fixed.len())
            .filter(|&g| !self.fixed[g] && Some(g) != driven)
            .collect();
    }

    fn check_dof(&self, dof: usize) -> Result<(), ModelError> {
        if dof < self.fixed.len() {
            Ok(())
        } else {
            Err(ModelError::invalid("dof", format!("global dof {dof} out of range")))
        }
    }

    pub fn fix(mut self, dof: usize) -> Result<Self, ModelError> {
        self.check_dof(dof)?;
        self.fixed[dof] = true;
        self.refresh_free();
        Ok(self)
    }

    pub fn spring(mut self, dof: usize, k: f64) -> Result<Self, ModelError> {
        self.check_dof(dof)?;
        if !(k >= 0.0 && k.is_finite()) {
            return Err(ModelError::invalid("k", "spring stiffness must be non-negative"));
        }
        self.springs.push((dof, k));
        Ok(self)
    }

    pub fn load(mut self, dof: usize, value: f64) -> Result<Self, ModelError> {
        self.check_dof(dof)?;
        self.load[dof] += value;
        Ok(self)
    }

    pub fn with_node_mass(mut self, m: f64) -> Result<Self, ModelError> {
        if !(m > 0.0 && m.is_finite()) {
            return Err(ModelError::invalid("m", "node mass must be positive"));
        }
        self.node_mass = m;
        Ok(self)
    }

    /// Prescribes global DoF `dof` through the control value γ (initially 0).
    pub fn driven(mut self, dof: usize) -> Result<Self, ModelError> {
        self.check_dof(dof)?;
        if self.fixed[dof] {
            return Err(ModelError::invalid("dof", "cannot drive a fixed dof"));
        }
        self.driver = Some((dof, 0.0));
        self.refresh_free();
        Ok(self)
    }

    pub fn free_dofs(&self) -> &[usize] {
        &self.free
    }

    pub fn nodes(&self) -> &[[f64; 2]] {
        &self.nodes
    }

    pub fn members(&self) -> &[Member] {
        &self.members
    }

    fn expand(&self, u: &[f64]) -> OpResult<Vec<f64>> {
        if u.len() != self.free.len() {
            return Err(OpError::Assembly(format!(
                "state has length {}, expected {}",
                u.len(),
                self.free.len()
            )));
        }
        let mut g = vec![0.0; self.fixed.len()];
        for (&dof, &v) in self.free.iter().zip(u) {
            g[dof] = v;
        }
        if let Some((dof, gamma)) = self.driver {
            g[dof] = gamma;
        }
        Ok(g)
    }

    fn member_vectors(&self, m: &Member, g: &[f64]) -> ([f64; 2], [f64; 2]) {
        let (a, b) = (self.nodes[m.start], self.nodes[m.end]);
        let x0 = [b[0] - a[0], b[1] - a[1]];
        let d = [
            x0[0] + g[2 * m.end] - g[2 * m.start],
            x0[1] + g[2 * m.end + 1] - g[2 * m.start + 1],
        ];
        (x0, d)
    }

    fn global_internal(&self, g: &[f64]) -> OpResult<Vec<f64>> {
        let mut f = vec![0.0; g.len()];
        for m in &self.members {
            let (x0, d) = self.member_vectors(m, g);
            if d[0] == 0.0 && d[1] == 0.0 {
                return Err(OpError::Assembly("member collapsed to zero length".into()));
            }
            let (fb, _, _) = green_bar(x0, d, m.ea);
            for c in 0..2 {
                f[2 * m.end + c] += fb[c];
                f[2 * m.start + c] -= fb[c];
            }
        }
        for &(dof, k) in &self.springs {
            f[dof] += k * g[dof];
        }
        Ok(f)
    }

    fn global_tangent(&self, g: &[f64]) -> Matrix {
        let n = g.len();
        let mut k = Matrix::zeros(n, n);
        for m in &self.members {
            let (x0, d) = self.member_vectors(m, g);
            let (_, kb, _) = green_bar(x0, d, m.ea);
            for r in 0..2 {
                for c in 0..2 {
                    let v = kb[r][c];
                    k[(2 * m.end + r, 2 * m.end + c)] += v;
                    k[(2 * m.start + r, 2 * m.start + c)] += v;
                    k[(2 * m.end + r, 2 * m.start + c)] -= v;
                    k[(2 * m.start + r, 2 * m.end + c)] -= v;
                }
            }
        }
        for &(dof, ks) in &self.springs {
            k[(dof, dof)] += ks;
        }
        k
    }

    /// Axial member forces `EA · E` at the reduced state `u`.
    pub fn member_forces(&self, u: &[f64]) -> OpResult<Vec<f64>> {
        let g = self.expand(u)?;
        Ok(self
            .members
            .iter()
            .map(|m| {
                let (x0, d) = self.member_vectors(m, &g);
                m.ea * green_bar(x0, d, m.ea).2
            })
            .collect())
    }

    /// Symmetric two-bar column: base pinned at the origin, joint at height
    /// `l`, top at `2l` with its lateral motion fixed, a lateral spring `ks`
    /// at the joint and a downward reference load `p_ref` at the top.
    ///
    /// Free DoFs, in order: joint lateral, joint vertical, top vertical.
    pub fn column(ea: f64, ks: f64, l: f64, p_ref: f64) -> Result<Self, ModelError> {
        if !(l > 0.0 && l.is_finite()) {
            return Err(ModelError::invalid("l", "must be positive"));
        }
        if !(ks > 0.0) {
            return Err(ModelError::invalid("ks", "must be positive"));
        }
        let nodes = vec![[0.0, 0.0], [0.0, l], [0.0, 2.0 * l]];
        let members = vec![
            Member { start: 0, end: 1, ea },
            Member { start: 1, end: 2, ea },
        ];
        Self::new(nodes, members)?
            .fix(0)?
            .fix(1)?
            .fix(4)?
            .spring(2, ks)?
            .load(5, -p_ref)
    }
}

impl Operators for TrussLattice {
    fn n_dof(&self) -> usize {
        self.free.len()
    }

    fn force(&self) -> OpResult<Vec<f64>> {
        Ok(self.free.iter().map(|&g| self.load[g]).collect())
    }

    fn internal_force(&self, u: &[f64]) -> OpResult<Vec<f64>> {
        let g = self.expand(u)?;
        let f = self.global_internal(&g)?;
        Ok(self.free.iter().map(|&d| f[d]).collect())
    }

    fn jacobian(&self, u: &[f64]) -> OpResult<Matrix> {
        let g = self.expand(u)?;
        let k = self.global_tangent(&g);
        let n = self.free.len();
        let mut out = Matrix::zeros(n, n);
        for (i, &gi) in self.free.iter().enumerate() {
            for (j, &gj) in self.free.iter().enumerate() {
                out[(i, j)] = k[(gi, gj)];
            }
        }
        Ok(out)
    }

    fn mass(&self) -> OpResult<Matrix> {
        Ok(Matrix::from_diag(&vec![self.node_mass; self.free.len()]))
    }

    fn has_control(&self) -> bool {
        self.driver.is_some()
    }

    fn set_control(&mut self, gamma: f64) -> OpResult<()> {
        match &mut self.driver {
            Some(d) => {
                d.1 = gamma;
                Ok(())
            }
            None => Err(OpError::Unsupported("control")),
        }
    }

    fn reaction(&self, u: &[f64]) -> OpResult<f64> {
        let (dof, _) = self.driver.ok_or(OpError::Unsupported("reaction"))?;
        let g = self.expand(u)?;
        Ok(self.global_internal(&g)?[dof])
    }
}
