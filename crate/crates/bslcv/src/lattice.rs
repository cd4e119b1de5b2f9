//! Bilayer square-lattice (BSL) construction.
//!
//! Geometry is a torus: macronode index `m` runs over `1..=M` with `M`
//! adjacent to `1`, and time bin `T-1` is adjacent to bin `0`. Modes are
//! stored lexicographically by `(time_bin, m, pol)` with `Y` before `Z`.
//!
//! The pipeline runs in the cluster frame: the `R(π/2)` phase delays on one
//! frequency parity are applied right after two-mode squeezing. They commute
//! with every later stage, so the result equals the physical ordering
//! (see [`build_bsl_physical_order`]).

use serde::{Deserialize, Serialize};
use std::fmt;
use std::fmt::Write as _;
use std::f64::consts::FRAC_PI_2;

use crate::error::{Error, Result};
use crate::gates::{beamsplitter, rotation, squeezing_factors, tms_cluster, two_mode_squeezer};
use crate::gaussian::{GraphState, GraphStateJson, RMat};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Parity {
    Odd,
    Even,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LatticeSpec {
    pub freq_pairs: usize,
    pub time_bins: usize,
    pub r: f64,
    #[serde(default = "default_parity")]
    pub parity: Parity,
}

fn default_parity() -> Parity {
    Parity::Odd
}

impl LatticeSpec {
    pub fn new(freq_pairs: usize, time_bins: usize, r: f64) -> Self {
        LatticeSpec { freq_pairs, time_bins, r, parity: Parity::Odd }
    }

    /// The torus needs an even number of macronode rows to stay bipartite.
    pub fn check(&self) -> Result<()> {
        if self.freq_pairs < 2 || self.freq_pairs % 2 != 0 {
            return Err(Error::InvalidParameter(format!(
                "freq_pairs must be even and >= 2, got {}",
                self.freq_pairs
            )));
        }
        if self.time_bins < 2 {
            return Err(Error::InvalidParameter(format!("time_bins must be >= 2, got {}", self.time_bins)));
        }
        if !(self.r > 0.0) || !self.r.is_finite() {
            return Err(Error::InvalidParameter(format!("r must be positive, got {}", self.r)));
        }
        Ok(())
    }

    pub fn num_modes(&self) -> usize {
        2 * self.freq_pairs * self.time_bins
    }

    /// Flat index of a label in the canonical ordering.
    pub fn index(&self, time_bin: usize, m: usize, pol: Pol) -> usize {
        debug_assert!(m >= 1 && m <= self.freq_pairs && time_bin < self.time_bins);
        (time_bin * self.freq_pairs + (m - 1)) * 2 + pol as usize
    }

    pub fn labels(&self) -> Vec<ModeLabel> {
        let mut out = Vec::with_capacity(self.num_modes());
        for t in 0..self.time_bins {
            for m in 1..=self.freq_pairs {
                for pol in [Pol::Y, Pol::Z] {
                    out.push(ModeLabel::from_macronode(t, m as i64, pol));
                }
            }
        }
        out
    }

    /// Next row down, wrapping `M -> 1`.
    pub fn below(&self, m: usize) -> usize {
        if m == self.freq_pairs {
            1
        } else {
            m + 1
        }
    }

    /// Next row up, wrapping `1 -> M`.
    pub fn above(&self, m: usize) -> usize {
        if m == 1 {
            self.freq_pairs
        } else {
            m - 1
        }
    }

    pub fn next_bin(&self, t: usize) -> usize {
        (t + 1) % self.time_bins
    }

    pub fn prev_bin(&self, t: usize) -> usize {
        (t + self.time_bins - 1) % self.time_bins
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Pol {
    Y = 0,
    Z = 1,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct ModeLabel {
    pub time_bin: usize,
    /// Frequency index (nonzero).
    pub n: i64,
    pub pol: Pol,
}

/// `m = (−1)^n n`.
pub fn node_index(n: i64) -> Result<i64> {
    if n == 0 {
        return Err(Error::InvalidParameter("frequency index must be nonzero".into()));
    }
    Ok(if n % 2 == 0 { n } else { -n })
}

/// Inverse of [`node_index`] (the map is an involution).
pub fn freq_index(m: i64) -> i64 {
    if m % 2 == 0 {
        m
    } else {
        -m
    }
}

impl ModeLabel {
    pub fn from_macronode(time_bin: usize, m: i64, pol: Pol) -> Self {
        ModeLabel { time_bin, n: freq_index(m), pol }
    }

    pub fn m(&self) -> usize {
        node_index(self.n).expect("labels hold nonzero n") as usize
    }

    pub fn parity(&self) -> Parity {
        if self.n % 2 == 0 {
            Parity::Even
        } else {
            Parity::Odd
        }
    }
}

impl fmt::Display for ModeLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let p = match self.pol {
            Pol::Y => "Y",
            Pol::Z => "Z",
        };
        write!(f, "t{}:m{}:{}", self.time_bin, self.m(), p)
    }
}

impl std::str::FromStr for ModeLabel {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        let bad = || Error::InvalidParameter(format!("bad mode label '{s}'"));
        let mut it = s.split(':');
        let t = it.next().and_then(|x| x.strip_prefix('t')).ok_or_else(bad)?;
        let m = it.next().and_then(|x| x.strip_prefix('m')).ok_or_else(bad)?;
        let pol = match it.next() {
            Some("Y") => Pol::Y,
            Some("Z") => Pol::Z,
            _ => return Err(bad()),
        };
        if it.next().is_some() {
            return Err(bad());
        }
        let t: usize = t.parse().map_err(|_| bad())?;
        let m: i64 = m.parse().map_err(|_| bad())?;
        if m <= 0 {
            return Err(bad());
        }
        Ok(ModeLabel::from_macronode(t, m, pol))
    }
}

impl Serialize for ModeLabel {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.serialize_str(&self.to_string())
    }
}

impl<'de> Deserialize<'de> for ModeLabel {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

/// A lattice state with live-mode labels; measured modes are removed from both.
#[derive(Clone, Debug)]
pub struct Lattice {
    pub spec: LatticeSpec,
    pub state: GraphState,
    pub labels: Vec<ModeLabel>,
}

impl Lattice {
    pub fn vacuum(spec: &LatticeSpec) -> Result<Self> {
        spec.check()?;
        Ok(Lattice {
            spec: spec.clone(),
            state: GraphState::vacuum(spec.num_modes()),
            labels: spec.labels(),
        })
    }

    pub fn num_modes(&self) -> usize {
        self.labels.len()
    }

    pub fn index_of(&self, label: &ModeLabel) -> Option<usize> {
        self.labels.iter().position(|l| l == label)
    }

    pub fn find(&self, time_bin: usize, m: usize, pol: Pol) -> Result<usize> {
        let l = ModeLabel::from_macronode(time_bin, m as i64, pol);
        self.index_of(&l).ok_or_else(|| Error::MissingMode(l.to_string()))
    }

    /// `(Z-mode, Y-mode)` indices of a live macronode.
    pub fn macronode(&self, time_bin: usize, m: usize) -> Result<(usize, usize)> {
        Ok((self.find(time_bin, m, Pol::Z)?, self.find(time_bin, m, Pol::Y)?))
    }

    fn apply_bs_on(&mut self, rows: impl Fn(usize) -> bool) -> Result<()> {
        let bs = beamsplitter();
        for t in 0..self.spec.time_bins {
            for m in 1..=self.spec.freq_pairs {
                if rows(m) {
                    let (z, y) = self.macronode(t, m)?;
                    self.state = self.state.apply_gaussian(&bs, &[z, y])?;
                }
            }
        }
        Ok(())
    }

    /// Largest `|Re Z_ij − tanh(2r)·w·A_ij|` against a real adjacency `A`.
    pub fn adjacency_residual(&self, a: &RMat, w: f64) -> f64 {
        let (t, _) = squeezing_factors(self.spec.r);
        let n = self.num_modes();
        let mut worst: f64 = 0.0;
        for i in 0..n {
            for j in 0..n {
                worst = worst.max((self.state.z[(i, j)].re - t * w * a[(i, j)]).abs());
            }
        }
        worst
    }

    pub fn to_dot(&self) -> String {
        let mut out = String::from("graph bsl {\n");
        for l in &self.labels {
            let _ = writeln!(out, "  \"{l}\";");
        }
        let n = self.num_modes();
        for i in 0..n {
            for j in (i + 1)..n {
                let w = self.state.z[(i, j)];
                if w.norm() > 1e-12 {
                    let _ = writeln!(out, "  \"{}\" -- \"{}\" [weight={}];", self.labels[i], self.labels[j], w.re);
                }
            }
        }
        out.push_str("}\n");
        out
    }

    pub fn to_json(&self) -> String {
        let file = LatticeFile {
            state: GraphStateJson::from(&self.state),
            lattice: Some(self.spec.clone()),
            labels: Some(self.labels.clone()),
        };
        serde_json::to_string(&file).expect("plain data serializes")
    }

    pub fn from_json(s: &str) -> Result<Self> {
        let file: LatticeFile = serde_json::from_str(s)?;
        let spec = file
            .lattice
            .ok_or_else(|| Error::InvalidParameter("state file carries no lattice spec".into()))?;
        let state = GraphState::try_from(file.state)?;
        let labels = file.labels.unwrap_or_else(|| spec.labels());
        if labels.len() != state.num_modes() {
            return Err(Error::Dimension { expected: labels.len(), found: state.num_modes() });
        }
        Ok(Lattice { spec, state, labels })
    }
}

/// Graph-state JSON plus the optional lattice description needed to address modes.
#[derive(Serialize, Deserialize)]
pub struct LatticeFile {
    #[serde(flatten)]
    pub state: GraphStateJson,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub lattice: Option<LatticeSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub labels: Option<Vec<ModeLabel>>,
}

fn epr_layer(spec: &LatticeSpec, phase_delays: bool) -> Result<Lattice> {
    let mut l = Lattice::vacuum(spec)?;
    let tms = two_mode_squeezer(spec.r);
    // TMS followed by R(π/2) on either mode is exactly iεI + tσx. Writing it
    // directly keeps ε at large r, where the symplectic route cancels it away.
    let pair = tms_cluster(spec.r).z;
    for t in 0..spec.time_bins {
        for m in 1..=spec.freq_pairs {
            let a = spec.index(t, m, Pol::Z);
            let b = spec.index(t, spec.below(m), Pol::Y);
            if phase_delays {
                for (i, x) in [a, b].into_iter().enumerate() {
                    for (j, y) in [a, b].into_iter().enumerate() {
                        l.state.z[(x, y)] = pair[(i, j)];
                    }
                }
            } else {
                l.state = l.state.apply_gaussian(&tms, &[a, b])?;
            }
        }
    }
    Ok(l)
}

/// Stage (a): TMS pairs between `(t, m, Z)` and `(t, m+1, Y)`, in cluster form.
pub fn build_epr_layer(spec: &LatticeSpec) -> Result<Lattice> {
    epr_layer(spec, true)
}

/// Stage (a) without phase delays (the physical H-graph form).
pub fn build_epr_layer_physical(spec: &LatticeSpec) -> Result<Lattice> {
    epr_layer(spec, false)
}

/// Stage (b): balanced beamsplitter `B(Z, Y)` on every macronode.
pub fn apply_polarization_rotation(l: &Lattice) -> Result<Lattice> {
    let mut out = l.clone();
    out.apply_bs_on(|_| true)?;
    Ok(out)
}

/// Stage (c): odd-`m` Z modes move to the next time bin (pure relabelling).
pub fn apply_delay_relabel(l: &Lattice) -> Result<Lattice> {
    let spec = &l.spec;
    let relabeled: Vec<ModeLabel> = l
        .labels
        .iter()
        .map(|lab| {
            if lab.pol == Pol::Z && lab.m() % 2 == 1 {
                ModeLabel { time_bin: spec.next_bin(lab.time_bin), ..*lab }
            } else {
                *lab
            }
        })
        .collect();
    let mut order: Vec<usize> = (0..relabeled.len()).collect();
    order.sort_by_key(|&i| (relabeled[i].time_bin, relabeled[i].m(), relabeled[i].pol));
    let labels = order.iter().map(|&i| relabeled[i]).collect();
    Ok(Lattice { spec: spec.clone(), state: l.state.permute(&order), labels })
}

/// Stage (d): balanced beamsplitter `B(Z, Y)` on odd-`m` macronodes.
pub fn apply_final_bs(l: &Lattice) -> Result<Lattice> {
    let mut out = l.clone();
    out.apply_bs_on(|m| m % 2 == 1)?;
    Ok(out)
}

/// `R(π/2)` on every mode whose frequency index has the spec's parity.
pub fn apply_parity_phase_delays(l: &Lattice) -> Result<Lattice> {
    let mut out = l.clone();
    let quarter = rotation(FRAC_PI_2);
    for i in 0..out.num_modes() {
        if out.labels[i].parity() == out.spec.parity {
            out.state = out.state.apply_gaussian(&quarter, &[i])?;
        }
    }
    Ok(out)
}

/// All four cluster-frame stages, in order.
pub fn build_stages(spec: &LatticeSpec) -> Result<[Lattice; 4]> {
    let a = build_epr_layer(spec)?;
    let b = apply_polarization_rotation(&a)?;
    let c = apply_delay_relabel(&b)?;
    let d = apply_final_bs(&c)?;
    Ok([a, b, c, d])
}

pub fn build_bsl(spec: &LatticeSpec) -> Result<Lattice> {
    let [_, _, _, d] = build_stages(spec)?;
    Ok(d)
}

/// The same pipeline with the phase delays applied last, as in the optics.
pub fn build_bsl_physical_order(spec: &LatticeSpec) -> Result<Lattice> {
    let a = build_epr_layer_physical(spec)?;
    let b = apply_polarization_rotation(&a)?;
    let c = apply_delay_relabel(&b)?;
    let d = apply_final_bs(&c)?;
    apply_parity_phase_delays(&d)
}

/// Coupling coefficients of stages (a)–(d) as stated for the optical setup.
pub const STAGE_COEFFICIENTS: [f64; 4] = [
    1.0,
    std::f64::consts::FRAC_1_SQRT_2,
    std::f64::consts::FRAC_1_SQRT_2,
    0.353_553_390_593_273_8,
];

#[derive(Clone, Debug, Serialize)]
pub struct StageWeights {
    /// Smallest and largest nonzero off-diagonal `|Z_ij| / tanh 2r`.
    pub min_coeff: f64,
    pub max_coeff: f64,
    /// Largest `|Z_ii − i sech 2r|`.
    pub self_loop_residual: f64,
    /// Largest off-diagonal `|Im Z_ij|`.
    pub off_diagonal_imag: f64,
    pub max_degree: usize,
}

pub fn stage_weights(l: &Lattice) -> StageWeights {
    let (t, eps) = squeezing_factors(l.spec.r);
    let n = l.num_modes();
    let mut w = StageWeights {
        min_coeff: f64::INFINITY,
        max_coeff: 0.0,
        self_loop_residual: 0.0,
        off_diagonal_imag: 0.0,
        max_degree: 0,
    };
    for i in 0..n {
        let mut degree = 0;
        for j in 0..n {
            let z = l.state.z[(i, j)];
            if i == j {
                let d = (z - crate::gaussian::C64::new(0.0, eps)).norm();
                w.self_loop_residual = w.self_loop_residual.max(d);
            } else {
                w.off_diagonal_imag = w.off_diagonal_imag.max(z.im.abs());
                if z.norm() > 1e-12 {
                    degree += 1;
                    let c = z.norm() / t;
                    w.min_coeff = w.min_coeff.min(c);
                    w.max_coeff = w.max_coeff.max(c);
                }
            }
        }
        w.max_degree = w.max_degree.max(degree);
    }
    w
}

/// Ideal BSL adjacency (entries `0, ±2^{-3/2}`) in the canonical ordering.
///
/// Odd macronode `(t, m)` couples to even macronodes `(t−1, m±1)` and
/// `(t, m±1)`; each coupling is a fixed 2×2 sign block over `(Y, Z)` × `(Y, Z)`.
pub fn ideal_bsl_adjacency(spec: &LatticeSpec) -> RMat {
    let n = spec.num_modes();
    let mut a = RMat::zeros(n, n);
    let w = STAGE_COEFFICIENTS[3];
    let earlier_above = [[-1.0, -1.0], [-1.0, -1.0]];
    let earlier_below = [[1.0, -1.0], [1.0, -1.0]];
    let same_above = [[1.0, 1.0], [-1.0, -1.0]];
    let same_below = [[1.0, -1.0], [-1.0, 1.0]];
    for t in 0..spec.time_bins {
        for m in (1..=spec.freq_pairs).step_by(2) {
            let links = [
                (spec.prev_bin(t), spec.above(m), earlier_above),
                (spec.prev_bin(t), spec.below(m), earlier_below),
                (t, spec.above(m), same_above),
                (t, spec.below(m), same_below),
            ];
            for (tb, mb, block) in links {
                for (pa, row) in [Pol::Y, Pol::Z].iter().zip(block.iter()) {
                    for (pb, sign) in [Pol::Y, Pol::Z].iter().zip(row.iter()) {
                        let i = spec.index(t, m, *pa);
                        let j = spec.index(tb, mb, *pb);
                        a[(i, j)] = sign * w;
                        a[(j, i)] = sign * w;
                    }
                }
            }
        }
    }
    a
}

/// Real adjacency of the lattice's current graph scaled by `1 / tanh 2r`.
pub fn scaled_adjacency(l: &Lattice) -> RMat {
    let (t, _) = squeezing_factors(l.spec.r);
    let n = l.num_modes();
    RMat::from_fn(n, n, |i, j| if i == j { 0.0 } else { l.state.z[(i, j)].re / t })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gaussian::{graph_distance, max_abs};

    #[test]
    fn node_index_values() {
        assert_eq!(node_index(1).unwrap(), -1);
        assert_eq!(node_index(2).unwrap(), 2);
        assert_eq!(node_index(-3).unwrap(), 3);
        assert!(node_index(0).is_err());
        for m in 1..10 {
            assert_eq!(node_index(freq_index(m)).unwrap(), m);
        }
    }

    #[test]
    fn label_round_trip() {
        let l = ModeLabel::from_macronode(3, 5, Pol::Z);
        assert_eq!(l.to_string(), "t3:m5:Z");
        assert_eq!("t3:m5:Z".parse::<ModeLabel>().unwrap(), l);
        assert!("t3:m0:Z".parse::<ModeLabel>().is_err());
    }

    #[test]
    fn epr_layer_pairs_are_cluster_tms() {
        let spec = LatticeSpec::new(4, 2, 0.7);
        let l = build_epr_layer(&spec).unwrap();
        assert_eq!(l.num_modes(), 16);
        let (t, eps) = squeezing_factors(0.7);
        let a = spec.index(1, 2, Pol::Z);
        let b = spec.index(1, 3, Pol::Y);
        assert!((l.state.z[(a, b)].re - t).abs() < 1e-12);
        assert!((l.state.z[(a, a)].im - eps).abs() < 1e-12);
        // no cross-time edges
        let c = spec.index(0, 3, Pol::Y);
        assert!(l.state.z[(a, c)].norm() < 1e-15);
    }

    #[test]
    fn vacuum_limit() {
        let spec = LatticeSpec::new(4, 2, 1e-9);
        let l = build_bsl(&spec).unwrap();
        let vac = GraphState::vacuum(spec.num_modes());
        assert!(graph_distance(&l.state, &vac).unwrap() < 1e-6);
    }

    #[test]
    fn delay_is_a_permutation() {
        let spec = LatticeSpec::new(4, 3, 0.5);
        let b = apply_polarization_rotation(&build_epr_layer(&spec).unwrap()).unwrap();
        let c = apply_delay_relabel(&b).unwrap();
        assert_eq!(c.labels, spec.labels());
        let ev = |l: &Lattice| {
            let mut v: Vec<f64> = scaled_adjacency(l).symmetric_eigen().eigenvalues.iter().copied().collect();
            v.sort_by(|a, b| a.partial_cmp(b).unwrap());
            v
        };
        for (x, y) in ev(&b).iter().zip(ev(&c).iter()) {
            assert!((x - y).abs() < 1e-10);
        }
    }

    #[test]
    fn final_graph_matches_ideal_adjacency() {
        for (m, t) in [(4, 3), (6, 4), (8, 2)] {
            let spec = LatticeSpec::new(m, t, 0.9);
            let l = build_bsl(&spec).unwrap();
            let a = ideal_bsl_adjacency(&spec);
            assert!(l.adjacency_residual(&a, 1.0) < 1e-10, "{m}x{t}");
        }
    }

    #[test]
    fn ideal_adjacency_is_bipartite_and_self_inverse() {
        let spec = LatticeSpec::new(6, 4, 1.0);
        let a = ideal_bsl_adjacency(&spec);
        let n = spec.num_modes();
        assert!(max_abs(&(&a * &a - RMat::identity(n, n))) < 1e-12);
        let labels = spec.labels();
        for i in 0..n {
            for j in 0..n {
                if a[(i, j)] != 0.0 {
                    assert_ne!(labels[i].m() % 2, labels[j].m() % 2);
                }
            }
        }
    }

    #[test]
    fn physical_order_matches_cluster_frame() {
        for parity in [Parity::Odd, Parity::Even] {
            let spec = LatticeSpec { parity, ..LatticeSpec::new(4, 3, 0.6) };
            let a = build_bsl(&spec).unwrap();
            let b = build_bsl_physical_order(&spec).unwrap();
            assert!(graph_distance(&a.state, &b.state).unwrap() < 1e-12);
        }
    }

    #[test]
    fn simulated_stage_coefficients() {
        let spec = LatticeSpec::new(6, 6, 1.0);
        let stages = build_stages(&spec).unwrap();
        let want = [1.0, 0.5, 0.5, STAGE_COEFFICIENTS[3]];
        let degree = [1, 4, 4, 8];
        for ((l, w), d) in stages.iter().zip(want).zip(degree) {
            let sw = stage_weights(l);
            assert!((sw.min_coeff - w).abs() < 1e-10 && (sw.max_coeff - w).abs() < 1e-10, "{sw:?}");
            assert!(sw.self_loop_residual < 1e-10);
            assert!(sw.off_diagonal_imag < 1e-10);
            assert_eq!(sw.max_degree, d);
        }
    }

    #[test]
    fn json_and_dot() {
        let spec = LatticeSpec::new(4, 2, 0.5);
        let l = build_bsl(&spec).unwrap();
        let back = Lattice::from_json(&l.to_json()).unwrap();
        assert_eq!(back.state, l.state);
        assert_eq!(back.labels, l.labels);
        let dot = l.to_dot();
        assert!(dot.starts_with("graph bsl {"));
        assert!(dot.contains("\"t0:m1:Y\""));
        assert!(dot.contains("weight="));
    }

    #[test]
    fn spec_json_and_check() {
        let s: LatticeSpec = serde_json::from_str(r#"{"freq_pairs":6,"time_bins":4,"r":1.0,"parity":"even"}"#).unwrap();
        assert_eq!(s.parity, Parity::Even);
        assert!(s.check().is_ok());
        assert!(LatticeSpec::new(3, 4, 1.0).check().is_err());
        assert!(LatticeSpec::new(4, 1, 1.0).check().is_err());
        assert!(LatticeSpec::new(4, 4, 0.0).check().is_err());
    }
}
