//! Directed reachability between motion components.
//!
//! A pair `m -> n` is reachable when `n` sits inside `m`'s double ellipse and
//! the flow directions pass the angle gates, when `n` is inside `m`'s short
//! lateral wedge with a similar flow direction, or when the unblocking pass
//! links an otherwise dead-end component to its closest candidate.

use std::io::Write;

use rayon::prelude::*;
use thiserror::Error;

use crate::components::{displacement, ComponentModel, MotionComponent};
use crate::scalar::{heading_degrees, wrap_degrees};
use crate::Scalar;

#[derive(Debug, Error)]
pub enum ReachabilityError {
    #[error("invalid reachability parameter: {0}")]
    InvalidParam(String),
    #[error("angle between components {m} and {n} is undefined")]
    AngleUndefined { m: usize, n: usize },
    #[error(transparent)]
    Csv(#[from] csv::Error),
}

/// Semi-axes of the double ellipse: `a` along the flow, `b` across it.
/// `(a1, b1)` shape the forward half, `(a2, b2)` the backward half.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EllipseParams<T = f64> {
    pub a1: T,
    pub b1: T,
    pub a2: T,
    pub b2: T,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AngleParams<T = f64> {
    /// Curve expectation: 1 accepts circular arcs, 0 expects straight motion.
    pub alpha: T,
    pub th_theta_psi: T,
    pub th_theta: T,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WedgeParams<T = f64> {
    /// Sector half-angle in degrees.
    pub th_w_psi: T,
    /// Sector radius; zero disables the wedge.
    pub th_w_rho: T,
    /// Bound on the flow-direction difference, degrees.
    pub th_w_theta: T,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct UnblockParams<T = f64> {
    pub search_distance: T,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ReachabilityParams<T = f64> {
    pub ellipse: EllipseParams<T>,
    pub angle: AngleParams<T>,
    pub wedge: WedgeParams<T>,
    pub unblock: UnblockParams<T>,
}

impl<T: Scalar> ReachabilityParams<T> {
    pub fn validate(&self) -> Result<(), ReachabilityError> {
        let bad = |name: &str, v: T, rule: &str| {
            Err(ReachabilityError::InvalidParam(format!("{name} = {v} must be {rule}")))
        };
        let e = &self.ellipse;
        for (name, v) in [("a1", e.a1), ("b1", e.b1), ("a2", e.a2), ("b2", e.b2)] {
            if !(v > T::zero() && v.is_finite()) {
                return bad(name, v, "positive");
            }
        }
        let a = &self.angle;
        if !a.alpha.is_finite() {
            return bad("alpha", a.alpha, "finite");
        }
        let full = T::lit(180.0);
        for (name, v) in [("th_theta_psi", a.th_theta_psi), ("th_theta", a.th_theta)] {
            if !(v > T::zero() && v <= full) {
                return bad(name, v, "in (0, 180]");
            }
        }
        let w = &self.wedge;
        for (name, v) in [("th_w_psi", w.th_w_psi), ("th_w_rho", w.th_w_rho), ("th_w_theta", w.th_w_theta)] {
            if !(v >= T::zero() && v.is_finite()) {
                return bad(name, v, "non-negative");
            }
        }
        let sd = self.unblock.search_distance;
        if !(sd >= T::one() && sd.is_finite()) {
            return bad("search_distance", sd, "at least 1");
        }
        Ok(())
    }
}

/// `(theta, psi)` in degrees for the pair `m -> n`.
///
/// With `∠(a→b) = heading(b) − heading(a)` wrapped to `(-180, 180]`,
/// `theta = ∠(ρ → flow(m))` and `psi = ∠(flow(n) → ρ)`. Two components
/// tangent to one circular arc get `theta == psi`.
pub fn angles<T: Scalar>(m: &MotionComponent<T>, n: &MotionComponent<T>) -> Result<(T, T), ReachabilityError> {
    let undefined = || ReachabilityError::AngleUndefined { m: m.id, n: n.id };
    let (hm, hn) = m.heading.zip(n.heading).ok_or_else(undefined)?;
    let rho = displacement(m, n);
    if rho[0] == T::zero() && rho[1] == T::zero() {
        return Err(undefined());
    }
    let h_rho = heading_degrees(rho[0], rho[1]);
    Ok((wrap_degrees(hm - h_rho), wrap_degrees(h_rho - hn)))
}

/// Scale at which `n` lies on the boundary of `m`'s double ellipse; `< 1` means inside.
pub fn ellipse_scale<T: Scalar>(
    m: &MotionComponent<T>,
    n: &MotionComponent<T>,
    ellipse: &EllipseParams<T>,
) -> Result<T, ReachabilityError> {
    if m.heading.is_none() {
        return Err(ReachabilityError::AngleUndefined { m: m.id, n: n.id });
    }
    let speed = m.speed();
    let (ex, ey) = (m.mu_u / speed, m.mu_v / speed);
    let rho = displacement(m, n);
    let along = rho[0] * ex + rho[1] * ey;
    let across = rho[1] * ex - rho[0] * ey;
    let (a, b) = if along >= T::zero() {
        (ellipse.a1, ellipse.b1)
    } else {
        (ellipse.a2, ellipse.b2)
    };
    Ok((along / a).hypot(across / b))
}

/// Proximity of `n` as seen from `m`: the ellipse scale when both angle gates
/// hold, `+inf` otherwise (including undefined headings).
pub fn proximity<T: Scalar>(
    m: &MotionComponent<T>,
    n: &MotionComponent<T>,
    ellipse: &EllipseParams<T>,
    angle: &AngleParams<T>,
) -> T {
    let Ok((theta, psi)) = angles(m, n) else {
        return T::infinity();
    };
    if (theta - angle.alpha * psi).abs() < angle.th_theta_psi && theta.abs() < angle.th_theta {
        ellipse_scale(m, n, ellipse).unwrap_or_else(|_| T::infinity())
    } else {
        T::infinity()
    }
}

/// Short-range semi-lateral reachability: `n` lies in the sector around `m`'s
/// heading, close by, and flows in a similar direction.
pub fn wedge_reachable<T: Scalar>(m: &MotionComponent<T>, n: &MotionComponent<T>, wedge: &WedgeParams<T>) -> bool {
    let (Some(hm), Some(hn)) = (m.heading, n.heading) else {
        return false;
    };
    let rho = displacement(m, n);
    let dist = rho[0].hypot(rho[1]);
    if dist == T::zero() || !(dist < wedge.th_w_rho) {
        return false;
    }
    let sector = wrap_degrees(heading_degrees(rho[0], rho[1]) - hm).abs();
    let turn = wrap_degrees(hn - hm).abs();
    sector < wedge.th_w_psi && turn < wedge.th_w_theta
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum EdgeKind {
    Ellipse,
    Wedge,
    UnblockOut,
    UnblockIn,
}

impl EdgeKind {
    pub fn as_str(self) -> &'static str {
        match self {
            EdgeKind::Ellipse => "ellipse",
            EdgeKind::Wedge => "wedge",
            EdgeKind::UnblockOut => "unblock_out",
            EdgeKind::UnblockIn => "unblock_in",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Edge<T = f64> {
    pub src: usize,
    pub dst: usize,
    pub kind: EdgeKind,
    /// Ellipse scale of `dst` seen from `src`.
    pub scale: T,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ReachabilityGraph<T = f64> {
    pub node_count: usize,
    /// Sorted by `(src, dst, kind)`. A pair may carry both an ellipse and a wedge edge.
    pub edges: Vec<Edge<T>>,
}

impl<T: Scalar> ReachabilityGraph<T> {
    /// Graph from bare `(src, dst)` pairs, tagged as ellipse edges.
    pub fn from_pairs(node_count: usize, pairs: &[(usize, usize)]) -> Self {
        let mut edges: Vec<Edge<T>> = pairs
            .iter()
            .map(|&(src, dst)| Edge {
                src,
                dst,
                kind: EdgeKind::Ellipse,
                scale: T::zero(),
            })
            .collect();
        edges.sort_by_key(|e| (e.src, e.dst, e.kind));
        edges.dedup_by_key(|e| (e.src, e.dst, e.kind));
        Self { node_count, edges }
    }

    /// Distinct successors per node, ascending.
    pub fn successors(&self) -> Vec<Vec<usize>> {
        let mut adj = vec![Vec::new(); self.node_count];
        for e in &self.edges {
            adj[e.src].push(e.dst);
        }
        adj.iter_mut().for_each(|v| {
            v.sort_unstable();
            v.dedup();
        });
        adj
    }

    /// Distinct predecessors per node, ascending.
    pub fn predecessors(&self) -> Vec<Vec<usize>> {
        let mut adj = vec![Vec::new(); self.node_count];
        for e in &self.edges {
            adj[e.dst].push(e.src);
        }
        adj.iter_mut().for_each(|v| {
            v.sort_unstable();
            v.dedup();
        });
        adj
    }

    pub fn has_edge(&self, src: usize, dst: usize, kind: EdgeKind) -> bool {
        self.edges
            .binary_search_by_key(&(src, dst, kind), |e| (e.src, e.dst, e.kind))
            .is_ok()
    }

    pub fn count_kind(&self, kind: EdgeKind) -> usize {
        self.edges.iter().filter(|e| e.kind == kind).count()
    }

    /// Dump: `src,dst,kind,S`.
    pub fn write_csv<W: Write>(&self, writer: W) -> Result<(), ReachabilityError> {
        let mut w = csv::Writer::from_writer(writer);
        w.write_record(["src", "dst", "kind", "S"])?;
        for e in &self.edges {
            w.write_record([
                e.src.to_string(),
                e.dst.to_string(),
                e.kind.as_str().to_string(),
                e.scale.to_string(),
            ])?;
        }
        w.flush().map_err(csv::Error::from)?;
        Ok(())
    }
}

/// Builds the reachability graph over all ordered component pairs.
pub fn build_reachability<T: Scalar>(
    model: &ComponentModel<T>,
    params: &ReachabilityParams<T>,
) -> Result<ReachabilityGraph<T>, ReachabilityError> {
    params.validate()?;
    let comps = &model.components;
    let k = comps.len();

    // Row-major proximity matrix and wedge flags; the diagonal stays +inf / false.
    let rows: Vec<(Vec<T>, Vec<bool>)> = comps
        .par_iter()
        .map(|m| {
            let mut pr = vec![T::infinity(); k];
            let mut wedge = vec![false; k];
            for (j, n) in comps.iter().enumerate() {
                if j != m.id {
                    pr[j] = proximity(m, n, &params.ellipse, &params.angle);
                    wedge[j] = wedge_reachable(m, n, &params.wedge);
                }
            }
            (pr, wedge)
        })
        .collect();

    let scale = |m: usize, n: usize| ellipse_scale(&comps[m], &comps[n], &params.ellipse).unwrap_or_else(|_| T::infinity());
    let mut edges = Vec::new();
    for (m, (pr, wedge)) in rows.iter().enumerate() {
        for n in 0..k {
            if pr[n] < T::one() {
                edges.push(Edge {
                    src: m,
                    dst: n,
                    kind: EdgeKind::Ellipse,
                    scale: pr[n],
                });
            }
            if wedge[n] {
                edges.push(Edge {
                    src: m,
                    dst: n,
                    kind: EdgeKind::Wedge,
                    scale: scale(m, n),
                });
            }
        }
    }

    let mut has_out = vec![false; k];
    let mut has_in = vec![false; k];
    for e in &edges {
        has_out[e.src] = true;
        has_in[e.dst] = true;
    }

    let limit = params.unblock.search_distance;
    for i in 0..k {
        if has_out[i] {
            continue;
        }
        let (pr, _) = &rows[i];
        if let Some(j) = argmin_below(k, |j| pr[j], limit) {
            edges.push(Edge {
                src: i,
                dst: j,
                kind: EdgeKind::UnblockOut,
                scale: pr[j],
            });
            has_out[i] = true;
            has_in[j] = true;
        }
    }
    for i in 0..k {
        if has_in[i] {
            continue;
        }
        if let Some(z) = argmin_below(k, |z| rows[z].0[i], limit) {
            edges.push(Edge {
                src: z,
                dst: i,
                kind: EdgeKind::UnblockIn,
                scale: rows[z].0[i],
            });
            has_in[i] = true;
        }
    }

    edges.sort_by_key(|e| (e.src, e.dst, e.kind));
    Ok(ReachabilityGraph { node_count: k, edges })
}

/// Index minimizing `f` among values strictly below `limit`; ties go low.
fn argmin_below<T: Scalar>(k: usize, f: impl Fn(usize) -> T, limit: T) -> Option<usize> {
    let mut best: Option<(usize, T)> = None;
    for j in 0..k {
        let v = f(j);
        if v < limit && best.is_none_or(|(_, b)| v < b) {
            best = Some((j, v));
        }
    }
    best.map(|(j, _)| j)
}

#[cfg(test)]
mod tests {
    use super::*;

    const EPS: f64 = 1e-6;

    fn comp(id: usize, x: f64, y: f64, heading_deg: f64) -> MotionComponent<f64> {
        let h = heading_deg.to_radians();
        MotionComponent::new(id, [x, y, h.cos(), h.sin()], 1, EPS)
    }

    fn ellipse(a1: f64, b1: f64, a2: f64, b2: f64) -> EllipseParams<f64> {
        EllipseParams { a1, b1, a2, b2 }
    }

    fn gates(alpha: f64, th_theta_psi: f64, th_theta: f64) -> AngleParams<f64> {
        AngleParams {
            alpha,
            th_theta_psi,
            th_theta,
        }
    }

    fn params(a1: f64, search_distance: f64, wedge_rho: f64) -> ReachabilityParams<f64> {
        ReachabilityParams {
            ellipse: ellipse(a1, a1 / 2.0, a1 / 2.0, a1 / 2.0),
            angle: gates(1.0, 12.0, 30.0),
            wedge: WedgeParams {
                th_w_psi: 120.0,
                th_w_rho: wedge_rho,
                th_w_theta: 15.0,
            },
            unblock: UnblockParams { search_distance },
        }
    }

    fn close(a: f64, b: f64) -> bool {
        (a - b).abs() < 1e-9
    }

    #[test]
    fn angle_examples() {
        let m = comp(0, 0.0, 0.0, 0.0);
        let n = comp(1, 10.0, 10.0, 90.0);
        let (t, p) = angles(&m, &n).unwrap();
        assert!(close(t, -45.0) && close(p, -45.0));

        let n = comp(1, 10.0, 0.0, 0.0);
        assert_eq!(angles(&m, &n).unwrap(), (0.0, 0.0));

        let n = comp(1, 10.0, 0.0, 180.0);
        let (t, p) = angles(&m, &n).unwrap();
        assert_eq!(t, 0.0);
        assert!(close(p, 180.0));
    }

    #[test]
    fn angles_undefined_cases() {
        let m = comp(0, 0.0, 0.0, 0.0);
        let still = MotionComponent::new(1, [5.0, 0.0, 0.0, 0.0], 1, EPS);
        assert!(angles(&m, &still).is_err());
        let same_spot = comp(2, 0.0, 0.0, 10.0);
        assert!(angles(&m, &same_spot).is_err());
        assert!(ellipse_scale(&still, &m, &ellipse(1.0, 1.0, 1.0, 1.0)).is_err());
    }

    #[test]
    fn ellipse_scale_examples() {
        let m = comp(0, 0.0, 0.0, 0.0);
        let e = ellipse(10.0, 5.0, 4.0, 5.0);
        assert!(close(ellipse_scale(&m, &comp(1, 10.0, 0.0, 0.0), &e).unwrap(), 1.0));
        assert!(close(ellipse_scale(&m, &comp(1, 0.0, 5.0, 0.0), &e).unwrap(), 1.0));
        assert!(close(ellipse_scale(&m, &comp(1, -8.0, 0.0, 0.0), &e).unwrap(), 2.0));
    }

    #[test]
    fn ellipse_follows_heading() {
        let m = comp(0, 0.0, 0.0, 90.0);
        let e = ellipse(10.0, 5.0, 4.0, 5.0);
        assert!(close(ellipse_scale(&m, &comp(1, 0.0, 10.0, 0.0), &e).unwrap(), 1.0));
        assert!(close(ellipse_scale(&m, &comp(1, 5.0, 0.0, 0.0), &e).unwrap(), 1.0));
        assert!(close(ellipse_scale(&m, &comp(1, 0.0, -4.0, 0.0), &e).unwrap(), 1.0));
    }

    #[test]
    fn proximity_examples() {
        let e = ellipse(10.0, 5.0, 5.0, 5.0);
        let g = gates(1.0, 12.0, 30.0);
        let m = comp(0, 0.0, 0.0, 0.0);
        assert!(close(proximity(&m, &comp(1, 5.0, 0.0, 0.0), &e, &g), 0.5));
        // theta = 0, psi = 170
        assert!(proximity(&m, &comp(1, 5.0, 0.0, -170.0), &e, &g).is_infinite());
        let still = MotionComponent::new(1, [5.0, 0.0, 0.0, 0.0], 1, EPS);
        assert!(proximity(&m, &still, &e, &g).is_infinite());
    }

    #[test]
    fn proximity_is_asymmetric() {
        let e = ellipse(10.0, 5.0, 5.0, 5.0);
        let g = gates(1.0, 12.0, 30.0);
        let m = comp(0, 0.0, 0.0, 0.0);
        let n = comp(1, 5.0, 0.0, 0.0);
        assert!(proximity(&m, &n, &e, &g) < 1.0);
        // n sees m behind it: theta = 180
        assert!(proximity(&n, &m, &e, &g).is_infinite());
    }

    #[test]
    fn wedge_examples() {
        let w = WedgeParams {
            th_w_psi: 120.0,
            th_w_rho: 25.0,
            th_w_theta: 15.0,
        };
        let m = comp(0, 0.0, 0.0, 0.0);
        assert!(wedge_reachable(&m, &comp(1, 0.0, 10.0, 0.0), &w));
        assert!(!wedge_reachable(&m, &comp(1, 0.0, 30.0, 0.0), &w));
        assert!(!wedge_reachable(&m, &comp(1, 0.0, 10.0, 180.0), &w));
        // behind the sector
        assert!(!wedge_reachable(&m, &comp(1, -10.0, 1.0, 0.0), &w));
        let off = WedgeParams { th_w_rho: 0.0, ..w };
        assert!(!wedge_reachable(&m, &comp(1, 0.0, 10.0, 0.0), &off));
    }

    #[test]
    fn straight_chain_links_neighbors_only() {
        let means: Vec<[f64; 4]> = (0..10).map(|i| [i as f64 * 5.0, 0.0, 1.0, 0.0]).collect();
        let model = ComponentModel::from_means(&means, EPS);
        let g = build_reachability(&model, &params(10.0, 1.0, 0.0)).unwrap();
        for i in 0..9 {
            assert!(g.has_edge(i, i + 1, EdgeKind::Ellipse));
        }
        // S = 1.0 exactly for i -> i + 2: strict gate
        assert!(!g.has_edge(0, 2, EdgeKind::Ellipse));
        assert_eq!(g.edges.len(), 9);
    }

    #[test]
    fn gap_bridged_by_exactly_one_unblock_edge() {
        let mut means: Vec<[f64; 4]> = (0..5).map(|i| [i as f64 * 5.0, 0.0, 1.0, 0.0]).collect();
        means.extend((0..5).map(|i| [32.0 + i as f64 * 5.0, 0.0, 1.0, 0.0]));
        let model = ComponentModel::from_means(&means, EPS);
        let g = build_reachability(&model, &params(10.0, 2.0, 0.0)).unwrap();
        let unblock: Vec<&Edge<f64>> = g
            .edges
            .iter()
            .filter(|e| matches!(e.kind, EdgeKind::UnblockOut | EdgeKind::UnblockIn))
            .collect();
        assert_eq!(unblock.len(), 1);
        assert_eq!((unblock[0].src, unblock[0].dst), (4, 5));
        assert!(close(unblock[0].scale, 1.2));

        let g1 = build_reachability(&model, &params(10.0, 1.0, 0.0)).unwrap();
        assert_eq!(g1.count_kind(EdgeKind::UnblockOut) + g1.count_kind(EdgeKind::UnblockIn), 0);
    }

    #[test]
    fn isolated_component_stays_blocked() {
        let means = [[0.0, 0.0, 1.0, 0.0], [5.0, 0.0, 1.0, 0.0], [500.0, 500.0, 1.0, 0.0]];
        let model = ComponentModel::from_means(&means, EPS);
        let g = build_reachability(&model, &params(10.0, 2.0, 25.0)).unwrap();
        assert!(g.edges.iter().all(|e| e.src != 2 && e.dst != 2));
    }

    #[test]
    fn stationary_components_get_no_edges() {
        let means = [[0.0, 0.0, 1.0, 0.0], [3.0, 0.0, 0.0, 0.0], [6.0, 0.0, 1.0, 0.0]];
        let model = ComponentModel::from_means(&means, EPS);
        let g = build_reachability(&model, &params(10.0, 5.0, 25.0)).unwrap();
        assert!(g.edges.iter().all(|e| e.src != 1 && e.dst != 1));
        assert!(!g.edges.is_empty());
    }

    #[test]
    fn invalid_params_rejected() {
        let model = ComponentModel::from_means(&[[0.0, 0.0, 1.0, 0.0]], EPS);
        let mut p = params(10.0, 2.0, 0.0);
        p.ellipse.b2 = 0.0;
        assert!(matches!(build_reachability(&model, &p), Err(ReachabilityError::InvalidParam(_))));
        let mut p = params(10.0, 2.0, 0.0);
        p.angle.th_theta = 200.0;
        assert!(build_reachability(&model, &p).is_err());
        let mut p = params(10.0, 0.5, 0.0);
        p.unblock.search_distance = 0.5;
        assert!(build_reachability(&model, &p).is_err());
    }
}
