//! Gaussian pure states as complex-weighted graphs.
//!
//! A state on `N` modes is `Z = V + iU` with `U > 0` together with a real
//! phase-space mean ordered `(q_1..q_N, p_1..p_N)`. Units have hbar = 1, so
//! the vacuum has variance 1/2 in each quadrature.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub type C64 = Complex64;
pub type CMat = DMatrix<C64>;
pub type RMat = DMatrix<f64>;
pub type RVec = DVector<f64>;

/// Condition number above which a solve is refused.
pub const COND_LIMIT: f64 = 1e12;

#[derive(Clone, Debug, PartialEq)]
pub struct GraphState {
    pub z: CMat,
    pub mean: RVec,
}

#[derive(Clone, Debug, PartialEq)]
pub struct CovarianceState {
    pub sigma: RMat,
    pub mean: RVec,
}

/// Heisenberg action `x -> S x` on `k` modes, blocks `[[A, B], [C, D]]`.
#[derive(Clone, Debug, PartialEq)]
pub struct Symplectic {
    pub s: RMat,
}

impl Symplectic {
    pub fn new(s: RMat) -> Result<Self> {
        if s.nrows() != s.ncols() || s.nrows() % 2 != 0 || s.nrows() == 0 {
            return Err(Error::InvalidParameter(format!(
                "symplectic must be 2k x 2k, got {}x{}",
                s.nrows(),
                s.ncols()
            )));
        }
        Ok(Symplectic { s })
    }

    pub fn identity(k: usize) -> Self {
        Symplectic { s: RMat::identity(2 * k, 2 * k) }
    }

    pub fn from_blocks(a: &RMat, b: &RMat, c: &RMat, d: &RMat) -> Self {
        let k = a.nrows();
        let mut s = RMat::zeros(2 * k, 2 * k);
        s.view_mut((0, 0), (k, k)).copy_from(a);
        s.view_mut((0, k), (k, k)).copy_from(b);
        s.view_mut((k, 0), (k, k)).copy_from(c);
        s.view_mut((k, k), (k, k)).copy_from(d);
        Symplectic { s }
    }

    pub fn modes(&self) -> usize {
        self.s.nrows() / 2
    }

    pub fn a(&self) -> RMat {
        let k = self.modes();
        self.s.view((0, 0), (k, k)).into_owned()
    }
    pub fn b(&self) -> RMat {
        let k = self.modes();
        self.s.view((0, k), (k, k)).into_owned()
    }
    pub fn c(&self) -> RMat {
        let k = self.modes();
        self.s.view((k, 0), (k, k)).into_owned()
    }
    pub fn d(&self) -> RMat {
        let k = self.modes();
        self.s.view((k, k), (k, k)).into_owned()
    }

    /// `self * other`: apply `other` first, then `self`.
    pub fn then_after(&self, other: &Symplectic) -> Symplectic {
        Symplectic { s: &self.s * &other.s }
    }

    pub fn inverse(&self) -> Symplectic {
        let om = omega(self.modes());
        Symplectic { s: om.transpose() * self.s.transpose() * om }
    }

    /// `max |S Ω Sᵀ − Ω|`.
    pub fn symplectic_residual(&self) -> f64 {
        let om = omega(self.modes());
        max_abs(&(&self.s * &om * self.s.transpose() - om))
    }

    pub fn is_symplectic(&self, tol: f64) -> bool {
        self.symplectic_residual() < tol
    }

    /// Embed into `n` modes acting on `modes`, identity elsewhere.
    pub fn embed(&self, modes: &[usize], n: usize) -> Symplectic {
        let k = self.modes();
        let mut s = RMat::identity(2 * n, 2 * n);
        for (a, &i) in modes.iter().enumerate() {
            for (b, &j) in modes.iter().enumerate() {
                s[(i, j)] = self.s[(a, b)];
                s[(i, n + j)] = self.s[(a, k + b)];
                s[(n + i, j)] = self.s[(k + a, b)];
                s[(n + i, n + j)] = self.s[(k + a, k + b)];
            }
        }
        if modes.is_empty() {
            return Symplectic::identity(n);
        }
        Symplectic { s }
    }

    /// Direct sum: `self` on the first modes, `other` on the rest.
    pub fn direct_sum(&self, other: &Symplectic) -> Symplectic {
        let (k1, k2) = (self.modes(), other.modes());
        let modes1: Vec<usize> = (0..k1).collect();
        let modes2: Vec<usize> = (k1..k1 + k2).collect();
        let a = self.embed(&modes1, k1 + k2);
        let b = other.embed(&modes2, k1 + k2);
        b.then_after(&a)
    }
}

/// Symplectic form `[[0, I], [-I, 0]]` in (q, p) ordering.
pub fn omega(k: usize) -> RMat {
    let mut om = RMat::zeros(2 * k, 2 * k);
    for i in 0..k {
        om[(i, k + i)] = 1.0;
        om[(k + i, i)] = -1.0;
    }
    om
}

pub fn max_abs(m: &RMat) -> f64 {
    m.iter().fold(0.0, |acc, x| acc.max(x.abs()))
}

pub fn max_abs_c(m: &CMat) -> f64 {
    m.iter().fold(0.0, |acc, x| acc.max(x.norm()))
}

fn symmetrize(z: &mut CMat) {
    let n = z.nrows();
    for i in 0..n {
        for j in (i + 1)..n {
            let v = (z[(i, j)] + z[(j, i)]) * 0.5;
            z[(i, j)] = v;
            z[(j, i)] = v;
        }
    }
}

fn condition_number_c(m: &CMat) -> f64 {
    let sv = m.clone().singular_values();
    let max = sv.max();
    let min = sv.min();
    if min == 0.0 {
        f64::INFINITY
    } else {
        max / min
    }
}

/// Eigenvalue-based condition number of a symmetric positive-definite matrix;
/// infinite if not positive definite.
fn spd_condition(m: &RMat) -> f64 {
    let ev = m.clone().symmetric_eigen().eigenvalues;
    let (min, max) = (ev.min(), ev.max());
    if min <= 0.0 {
        f64::INFINITY
    } else {
        max / min
    }
}

impl GraphState {
    pub fn new(z: CMat, mean: RVec) -> Result<Self> {
        let n = z.nrows();
        if z.ncols() != n {
            return Err(Error::Dimension { expected: n, found: z.ncols() });
        }
        if mean.len() != 2 * n {
            return Err(Error::Dimension { expected: 2 * n, found: mean.len() });
        }
        Ok(GraphState { z, mean })
    }

    pub fn vacuum(n: usize) -> Self {
        GraphState {
            z: CMat::from_diagonal_element(n, n, C64::i()),
            mean: RVec::zeros(2 * n),
        }
    }

    pub fn num_modes(&self) -> usize {
        self.z.nrows()
    }

    pub fn u(&self) -> RMat {
        self.z.map(|c| c.im)
    }

    pub fn v(&self) -> RMat {
        self.z.map(|c| c.re)
    }

    /// Empty list iff the state satisfies all invariants.
    pub fn validate(&self) -> Vec<String> {
        let mut out = Vec::new();
        let n = self.num_modes();
        if self.z.ncols() != n || self.mean.len() != 2 * n {
            out.push("dimension mismatch".to_string());
            return out;
        }
        if max_abs_c(&(&self.z - self.z.transpose())) >= 1e-12 {
            out.push("Z not symmetric".to_string());
        }
        if self.z.iter().any(|c| !c.re.is_finite() || !c.im.is_finite()) {
            out.push("Z not finite".to_string());
        } else {
            let u = self.u();
            let us = (&u + u.transpose()) * 0.5;
            if us.cholesky().is_none() {
                out.push("U not positive definite".to_string());
            }
        }
        if self.mean.iter().any(|x| !x.is_finite()) {
            out.push("mean not finite".to_string());
        }
        out
    }

    /// Covariance with the 1e12 condition guard on `U`.
    pub fn to_covariance(&self) -> Result<CovarianceState> {
        let cond = spd_condition(&self.u());
        if !(cond <= COND_LIMIT) {
            return Err(Error::IllConditioned { what: "U", cond });
        }
        self.covariance_unchecked()
    }

    /// Covariance without the condition guard. Conditioning in the
    /// measurement module relies on this near the infinite-squeezing limit,
    /// where `U` legitimately spans many orders of magnitude.
    pub fn covariance_unchecked(&self) -> Result<CovarianceState> {
        let n = self.num_modes();
        let u = self.u();
        let v = self.v();
        let chol = u
            .clone()
            .cholesky()
            .ok_or_else(|| Error::InvalidState("U not positive definite".into()))?;
        let ui = chol.solve(&RMat::identity(n, n));
        let uiv = chol.solve(&v);
        let mut sigma = RMat::zeros(2 * n, 2 * n);
        sigma.view_mut((0, 0), (n, n)).copy_from(&(&ui * 0.5));
        sigma.view_mut((0, n), (n, n)).copy_from(&(&uiv * 0.5));
        sigma.view_mut((n, 0), (n, n)).copy_from(&(uiv.transpose() * 0.5));
        sigma
            .view_mut((n, n), (n, n))
            .copy_from(&((&u + &v * &uiv) * 0.5));
        let sym = (&sigma + sigma.transpose()) * 0.5;
        Ok(CovarianceState { sigma: sym, mean: self.mean.clone() })
    }

    pub fn from_covariance(cov: &CovarianceState) -> Result<Self> {
        cov.to_graph()
    }

    /// Apply a Gaussian unitary acting on `modes` (identity elsewhere).
    ///
    /// Evaluates `Z' = (C + DZ)(A + BZ)^{-1}` with the identity blocks
    /// eliminated, so the cost is `O(N^2 k)` for a `k`-mode gate.
    pub fn apply_gaussian(&self, transform: &Symplectic, modes: &[usize]) -> Result<Self> {
        let n = self.num_modes();
        let k = transform.modes();
        if modes.len() != k {
            return Err(Error::Dimension { expected: k, found: modes.len() });
        }
        for (a, &i) in modes.iter().enumerate() {
            if i >= n {
                return Err(Error::InvalidParameter(format!("mode {i} out of range ({n} modes)")));
            }
            if modes[..a].contains(&i) {
                return Err(Error::InvalidParameter(format!("mode {i} repeated")));
            }
        }
        let to_c = |m: RMat| m.map(|x| C64::new(x, 0.0));
        let (a, b, c, d) = (
            to_c(transform.a()),
            to_c(transform.b()),
            to_c(transform.c()),
            to_c(transform.d()),
        );

        // rows of Z belonging to the gate modes (k x N)
        let mut zk = CMat::zeros(k, n);
        for (r, &i) in modes.iter().enumerate() {
            zk.set_row(r, &self.z.row(i));
        }
        let mut zkk = CMat::zeros(k, k);
        for (r, &i) in modes.iter().enumerate() {
            for (s, &j) in modes.iter().enumerate() {
                zkk[(r, s)] = self.z[(i, j)];
            }
        }
        let m = &a + &b * &zkk;
        let cond = condition_number_c(&m);
        if !(cond <= COND_LIMIT) {
            return Err(Error::IllConditioned { what: "A + BZ", cond });
        }
        let lu_t = m.transpose().lu();
        // W = Z[:, K] M^{-1}, stored transposed as M^{-T} Z[K, :]
        let wt = lu_t
            .solve(&zk)
            .ok_or(Error::IllConditioned { what: "A + BZ", cond: f64::INFINITY })?;
        let bzk = &b * &zk;
        let mut z = &self.z - wt.transpose() * &bzk;

        let num_kk = &c + &d * &zkk;
        let new_kk = lu_t
            .solve(&num_kk.transpose())
            .ok_or(Error::IllConditioned { what: "A + BZ", cond: f64::INFINITY })?
            .transpose();
        let new_kr = (&d - &new_kk * &b) * &zk;
        for (r, &i) in modes.iter().enumerate() {
            for col in 0..n {
                z[(i, col)] = new_kr[(r, col)];
                z[(col, i)] = wt[(r, col)];
            }
        }
        for (r, &i) in modes.iter().enumerate() {
            for (s, &j) in modes.iter().enumerate() {
                z[(i, j)] = new_kk[(r, s)];
            }
        }
        symmetrize(&mut z);

        let mut mean = self.mean.clone();
        for (r, &i) in modes.iter().enumerate() {
            let mut q = 0.0;
            let mut p = 0.0;
            for (s, &j) in modes.iter().enumerate() {
                q += transform.s[(r, s)] * self.mean[j] + transform.s[(r, k + s)] * self.mean[n + j];
                p += transform.s[(k + r, s)] * self.mean[j]
                    + transform.s[(k + r, k + s)] * self.mean[n + j];
            }
            mean[i] = q;
            mean[n + i] = p;
        }
        Ok(GraphState { z, mean })
    }

    /// Apply a transform defined on all modes.
    pub fn apply_full(&self, transform: &Symplectic) -> Result<Self> {
        let modes: Vec<usize> = (0..self.num_modes()).collect();
        self.apply_gaussian(transform, &modes)
    }

    pub fn wigner_at(&self, x: &RVec) -> Result<f64> {
        let cov = self.to_covariance()?;
        let n = self.num_modes();
        if x.len() != 2 * n {
            return Err(Error::Dimension { expected: 2 * n, found: x.len() });
        }
        let chol = cov
            .sigma
            .clone()
            .cholesky()
            .ok_or_else(|| Error::InvalidState("covariance not positive definite".into()))?;
        let dx = x - &cov.mean;
        let y = chol.solve(&dx);
        let logdet: f64 = chol.l().diagonal().iter().map(|d| 2.0 * d.ln()).sum();
        let norm = -(n as f64) * (2.0 * std::f64::consts::PI).ln() - 0.5 * logdet;
        Ok((norm - 0.5 * dx.dot(&y)).exp())
    }

    pub fn tensor(&self, other: &GraphState) -> GraphState {
        let (na, nb) = (self.num_modes(), other.num_modes());
        let n = na + nb;
        let mut z = CMat::zeros(n, n);
        z.view_mut((0, 0), (na, na)).copy_from(&self.z);
        z.view_mut((na, na), (nb, nb)).copy_from(&other.z);
        let mut mean = RVec::zeros(2 * n);
        for i in 0..na {
            mean[i] = self.mean[i];
            mean[n + i] = self.mean[na + i];
        }
        for i in 0..nb {
            mean[na + i] = other.mean[i];
            mean[n + na + i] = other.mean[nb + i];
        }
        GraphState { z, mean }
    }

    /// Keep only `keep` (in the given order); the rest are discarded as if
    /// q-measured with outcome zero on the graph (the mean is sliced).
    pub fn select(&self, keep: &[usize]) -> GraphState {
        let n = self.num_modes();
        let k = keep.len();
        let z = CMat::from_fn(k, k, |r, s| self.z[(keep[r], keep[s])]);
        let mut mean = RVec::zeros(2 * k);
        for (r, &i) in keep.iter().enumerate() {
            mean[r] = self.mean[i];
            mean[k + r] = self.mean[n + i];
        }
        GraphState { z, mean }
    }

    /// Reorder modes: new mode `r` is old mode `perm[r]`.
    pub fn permute(&self, perm: &[usize]) -> GraphState {
        self.select(perm)
    }

    /// Linear term `b = p̄ − Z q̄` of the wavefunction exponent.
    pub fn linear_term(&self) -> DVector<C64> {
        let n = self.num_modes();
        let q = self.mean.rows(0, n).map(|x| C64::new(x, 0.0));
        let p = self.mean.rows(n, n).map(|x| C64::new(x, 0.0));
        p - &self.z * q
    }

    /// Recover the mean from a linear term: `q̄ = −U⁻¹ Im b`, `p̄ = Re b + V q̄`.
    pub fn mean_from_linear_term(z: &CMat, b: &DVector<C64>) -> Result<RVec> {
        let n = z.nrows();
        let u = z.map(|c| c.im);
        let v = z.map(|c| c.re);
        let chol = u
            .cholesky()
            .ok_or_else(|| Error::InvalidState("U not positive definite".into()))?;
        let q = -chol.solve(&b.map(|c| c.im));
        let p = b.map(|c| c.re) + &v * &q;
        let mut mean = RVec::zeros(2 * n);
        mean.rows_mut(0, n).copy_from(&q);
        mean.rows_mut(n, n).copy_from(&p);
        Ok(mean)
    }
}

/// `max(‖Z_a − Z_b‖_∞, ‖mean_a − mean_b‖_∞)`, entrywise.
pub fn graph_distance(a: &GraphState, b: &GraphState) -> Result<f64> {
    if a.num_modes() != b.num_modes() {
        return Err(Error::Dimension { expected: a.num_modes(), found: b.num_modes() });
    }
    let dz = max_abs_c(&(&a.z - &b.z));
    let dm = (&a.mean - &b.mean).amax();
    Ok(dz.max(dm))
}

impl CovarianceState {
    pub fn num_modes(&self) -> usize {
        self.sigma.nrows() / 2
    }

    /// `log det(2Σ)`; zero for a pure state.
    pub fn log_det_2sigma(&self) -> Option<f64> {
        let chol = (&self.sigma * 2.0).cholesky()?;
        Some(chol.l().diagonal().iter().map(|d| 2.0 * d.ln()).sum())
    }

    pub fn to_graph(&self) -> Result<GraphState> {
        let n = self.num_modes();
        let logdet = self
            .log_det_2sigma()
            .ok_or(Error::Impure { det: f64::NAN })?;
        let det = logdet.exp();
        if (det - 1.0).abs() > 1e-9 {
            return Err(Error::Impure { det });
        }
        let sqq = self.sigma.view((0, 0), (n, n)).into_owned();
        let spq = self.sigma.view((n, 0), (n, n)).into_owned();
        let cond = spd_condition(&sqq);
        if !(cond <= COND_LIMIT) {
            return Err(Error::IllConditioned { what: "Sigma_qq", cond });
        }
        let chol = sqq.cholesky().ok_or(Error::Impure { det })?;
        let u = chol.solve(&RMat::identity(n, n)) * 0.5;
        // V = Σ_pq Σ_qq⁻¹ = (Σ_qq⁻¹ Σ_qp)ᵀ
        let v = chol.solve(&spq.transpose()).transpose();
        let mut z = CMat::from_fn(n, n, |i, j| C64::new(v[(i, j)], u[(i, j)]));
        symmetrize(&mut z);
        Ok(GraphState { z, mean: self.mean.clone() })
    }

    /// Conjugate by a full-size symplectic: `Σ' = SΣSᵀ`, `mean' = S mean`.
    pub fn transform(&self, s: &Symplectic) -> CovarianceState {
        CovarianceState {
            sigma: &s.s * &self.sigma * s.s.transpose(),
            mean: &s.s * &self.mean,
        }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
pub struct GraphStateJson {
    pub n: usize,
    pub z_re: Vec<f64>,
    pub z_im: Vec<f64>,
    pub mean: Vec<f64>,
}

impl From<&GraphState> for GraphStateJson {
    fn from(s: &GraphState) -> Self {
        let n = s.num_modes();
        let mut z_re = Vec::with_capacity(n * n);
        let mut z_im = Vec::with_capacity(n * n);
        for i in 0..n {
            for j in 0..n {
                z_re.push(s.z[(i, j)].re);
                z_im.push(s.z[(i, j)].im);
            }
        }
        GraphStateJson { n, z_re, z_im, mean: s.mean.iter().copied().collect() }
    }
}

impl TryFrom<GraphStateJson> for GraphState {
    type Error = Error;
    fn try_from(j: GraphStateJson) -> Result<Self> {
        let n = j.n;
        if j.z_re.len() != n * n {
            return Err(Error::Dimension { expected: n * n, found: j.z_re.len() });
        }
        if j.z_im.len() != n * n {
            return Err(Error::Dimension { expected: n * n, found: j.z_im.len() });
        }
        let z = CMat::from_fn(n, n, |r, c| C64::new(j.z_re[r * n + c], j.z_im[r * n + c]));
        GraphState::new(z, RVec::from_vec(j.mean))
    }
}

impl GraphState {
    pub fn to_json(&self) -> String {
        serde_json::to_string(&GraphStateJson::from(self)).expect("plain data serializes")
    }

    pub fn from_json(s: &str) -> Result<Self> {
        let j: GraphStateJson = serde_json::from_str(s)?;
        GraphState::try_from(j)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tms_symplectic(r: f64) -> Symplectic {
        // B · (S(e^r) ⊕ S(e^-r))
        let (er, emr) = (r.exp(), (-r).exp());
        let sq = Symplectic::from_blocks(
            &RMat::from_diagonal(&RVec::from_vec(vec![er, emr])),
            &RMat::zeros(2, 2),
            &RMat::zeros(2, 2),
            &RMat::from_diagonal(&RVec::from_vec(vec![1.0 / er, 1.0 / emr])),
        );
        let h = std::f64::consts::FRAC_1_SQRT_2;
        let o = RMat::from_row_slice(2, 2, &[h, -h, h, h]);
        let bs = Symplectic::from_blocks(&o, &RMat::zeros(2, 2), &RMat::zeros(2, 2), &o);
        bs.then_after(&sq)
    }

    fn tms_h_graph(r: f64) -> GraphState {
        GraphState::vacuum(2).apply_full(&tms_symplectic(r)).unwrap()
    }

    #[test]
    fn vacuum_is_valid() {
        let v = GraphState::vacuum(3);
        assert!(v.validate().is_empty());
        assert_eq!(v.z, CMat::from_diagonal_element(3, 3, C64::i()));
        assert_eq!(GraphState::vacuum(1).mean, RVec::zeros(2));
    }

    #[test]
    fn validate_flags_violations() {
        let mut s = GraphState::vacuum(2);
        s.z[(0, 0)] = C64::new(0.0, -0.1);
        assert_eq!(s.validate(), vec!["U not positive definite".to_string()]);
        let mut s = GraphState::vacuum(2);
        s.z[(0, 1)] = C64::new(0.5, 0.0);
        assert_eq!(s.validate(), vec!["Z not symmetric".to_string()]);
    }

    #[test]
    fn vacuum_covariance_is_half_identity() {
        let c = GraphState::vacuum(2).to_covariance().unwrap();
        assert!(max_abs(&(&c.sigma - RMat::identity(4, 4) * 0.5)) < 1e-15);
    }

    #[test]
    fn tms_covariance_matches_symplectic_conjugation() {
        let r: f64 = 0.5;
        let st = tms_h_graph(r);
        // oracle: S (1/2 I) Sᵀ with the explicit TMS symplectic
        let sym = tms_symplectic(r);
        let expect = &sym.s * RMat::identity(4, 4) * 0.5 * sym.s.transpose();
        let cov = st.to_covariance().unwrap();
        assert!(max_abs(&(&cov.sigma - &expect)) < 1e-12, "{}", cov.sigma);
    }

    #[test]
    fn covariance_round_trip() {
        let st = tms_h_graph(0.7);
        let back = st.to_covariance().unwrap().to_graph().unwrap();
        assert!(graph_distance(&st, &back).unwrap() < 1e-12);
    }

    #[test]
    fn impure_covariance_rejected() {
        let c = CovarianceState { sigma: RMat::identity(2, 2), mean: RVec::zeros(2) };
        assert!(matches!(c.to_graph(), Err(Error::Impure { .. })));
    }

    #[test]
    fn ill_conditioned_u_rejected() {
        let mut s = GraphState::vacuum(2);
        s.z[(1, 1)] = C64::new(0.0, 1e-14);
        assert!(matches!(s.to_covariance(), Err(Error::IllConditioned { .. })));
    }

    #[test]
    fn wigner_vacuum_origin() {
        let w = GraphState::vacuum(1).wigner_at(&RVec::zeros(2)).unwrap();
        assert!((w - 1.0 / std::f64::consts::PI).abs() < 1e-15);
    }

    #[test]
    fn wigner_integrates_to_one() {
        // single-mode squeezed state Z = i e^{-2r} at r = 0.3, displaced
        let mut s = GraphState::vacuum(1);
        s.z[(0, 0)] = C64::new(0.2, (-0.6f64).exp());
        s.mean[0] = 0.3;
        let h = 0.04;
        let mut total = 0.0;
        for a in -250..=250 {
            for b in -250..=250 {
                let x = RVec::from_vec(vec![a as f64 * h, b as f64 * h]);
                total += s.wigner_at(&x).unwrap() * h * h;
            }
        }
        assert!((total - 1.0).abs() < 1e-3, "{total}");
    }

    #[test]
    fn tensor_blocks() {
        let a = tms_h_graph(0.4);
        let mut b = GraphState::vacuum(1);
        b.mean[1] = 2.0;
        let t = a.tensor(&b);
        assert_eq!(t.num_modes(), 3);
        assert_eq!(t.mean[5], 2.0);
        assert_eq!(t.z[(2, 2)], C64::i());
        assert_eq!(t.z[(0, 2)], C64::new(0.0, 0.0));
        assert_eq!(GraphState::vacuum(1).tensor(&GraphState::vacuum(1)), GraphState::vacuum(2));
    }

    #[test]
    fn identity_transform_is_noop() {
        let s = tms_h_graph(0.3);
        let out = s.apply_full(&Symplectic::identity(2)).unwrap();
        assert!(graph_distance(&s, &out).unwrap() < 1e-15);
    }

    #[test]
    fn distance_squeezed_vs_vacuum() {
        let mut s = GraphState::vacuum(1);
        s.z[(0, 0)] = C64::new(0.0, (-2.0f64).exp());
        assert!(graph_distance(&s, &GraphState::vacuum(1)).unwrap() > 0.5);
        assert!(graph_distance(&s, &GraphState::vacuum(2)).is_err());
    }

    #[test]
    fn json_round_trip_is_bit_exact() {
        let mut s = tms_h_graph(0.9);
        s.mean[2] = 1.0 / 3.0;
        let back = GraphState::from_json(&s.to_json()).unwrap();
        assert_eq!(s, back);
    }

    #[test]
    fn linear_term_round_trip() {
        let mut s = tms_h_graph(0.6);
        s.mean = RVec::from_vec(vec![0.1, -0.4, 0.7, 0.2]);
        let b = s.linear_term();
        let m = GraphState::mean_from_linear_term(&s.z, &b).unwrap();
        assert!((m - &s.mean).amax() < 1e-12);
    }
}
