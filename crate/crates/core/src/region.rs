//! Source entropies, the Slepian-Wolf conditions for a symmetric rate pair
//! `(R, R)` over erasure channels, and the random-coding exponent.
//!
//! Entropies are in bits; an erasure channel with erasure rate `eps` has
//! capacity `1 - eps`.

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CorrelationKind {
    /// `(U1, U2) = (X, X')` if `Z = 0` and `(X, X)` if `Z = 1`, with
    /// `Z ~ Bernoulli(p)` known at the decoder.
    Erasure,
    /// `U2 = U1 + Z` with `Pr(U1 = U2) = p`.
    Bsc,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CorrelationModel {
    pub kind: CorrelationKind,
    pub p: f64,
}

impl CorrelationModel {
    pub fn erasure(p: f64) -> Self {
        Self { kind: CorrelationKind::Erasure, p }
    }

    pub fn bsc(p: f64) -> Self {
        Self { kind: CorrelationKind::Bsc, p }
    }
}

/// Erasure rates of the two channels.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ChannelPoint {
    pub eps1: f64,
    pub eps2: f64,
}

impl ChannelPoint {
    pub fn new(eps1: f64, eps2: f64) -> Self {
        Self { eps1, eps2 }
    }

    pub fn capacities(&self) -> (f64, f64) {
        (1.0 - self.eps1, 1.0 - self.eps2)
    }
}

/// Binary entropy in bits, with `h2(0) = h2(1) = 0`.
pub fn binary_entropy(p: f64) -> f64 {
    if p <= 0.0 || p >= 1.0 {
        return 0.0;
    }
    -p * p.log2() - (1.0 - p) * (1.0 - p).log2()
}

/// `H(U1|U2) = H(U2|U1)`.
pub fn conditional_entropy(model: CorrelationModel) -> f64 {
    match model.kind {
        CorrelationKind::Erasure => 1.0 - model.p,
        CorrelationKind::Bsc => binary_entropy(model.p),
    }
}

/// `H(U1, U2)`.
pub fn joint_entropy(model: CorrelationModel) -> f64 {
    match model.kind {
        CorrelationKind::Erasure => 2.0 - model.p,
        CorrelationKind::Bsc => 1.0 + binary_entropy(model.p),
    }
}

/// Closed Slepian-Wolf region: both single-user and the sum condition hold
/// with `>=`.
pub fn sw_contains(model: CorrelationModel, rate: f64, pt: ChannelPoint) -> bool {
    let (c1, c2) = pt.capacities();
    let h = conditional_entropy(model);
    c1 / rate >= h && c2 / rate >= h && c1 / rate + c2 / rate >= joint_entropy(model)
}

/// Interior of the Slepian-Wolf region (all three inequalities strict).
pub fn sw_contains_strict(model: CorrelationModel, rate: f64, pt: ChannelPoint) -> bool {
    let (c1, c2) = pt.capacities();
    let h = conditional_entropy(model);
    c1 / rate > h && c2 / rate > h && c1 / rate + c2 / rate > joint_entropy(model)
}

/// Random-coding error exponent
/// `min{I1 - R H(U1|U2), I2 - R H(U2|U1), I1 + I2 - R H(U1,U2)}`.
pub fn gamma_exponent(model: CorrelationModel, rate: f64, i1: f64, i2: f64) -> f64 {
    let h = conditional_entropy(model);
    (i1 - rate * h).min(i2 - rate * h).min(i1 + i2 - rate * joint_entropy(model))
}

/// The two corner points of the region for erasure correlation:
/// `(1 - R, 1 - (1-p)R)` and its mirror image.
pub fn corner_points(p: f64, rate: f64) -> (ChannelPoint, ChannelPoint) {
    let full = 1.0 - rate;
    let side = 1.0 - (1.0 - p) * rate;
    (ChannelPoint::new(full, side), ChannelPoint::new(side, full))
}

/// The point on the diagonal where the sum condition is tight.
pub fn symmetric_extremal(p: f64, rate: f64) -> ChannelPoint {
    let eps = 1.0 - (1.0 - p / 2.0) * rate;
    ChannelPoint::new(eps, eps)
}

/// Largest `eps2` in `[0, 1]` such that `(eps1, eps2)` lies in the closed
/// region, or `None` when no `eps2` works.
pub fn max_eps2(model: CorrelationModel, rate: f64, eps1: f64) -> Option<f64> {
    let h = conditional_entropy(model);
    if (1.0 - eps1) / rate < h {
        return None;
    }
    let single = 1.0 - rate * h;
    let sum = 2.0 - eps1 - rate * joint_entropy(model);
    let cap = single.min(sum).min(1.0);
    (cap >= 0.0).then_some(cap)
}

/// Upper boundary of the region sampled at `grid` uniformly spaced `eps1`
/// values in `[0, 1]`. Grid points with an empty section are skipped.
pub fn sw_boundary(model: CorrelationModel, rate: f64, grid: usize) -> Vec<ChannelPoint> {
    assert!(grid >= 2, "boundary grid needs at least two points");
    (0..grid)
        .filter_map(|i| {
            let eps1 = i as f64 / (grid - 1) as f64;
            max_eps2(model, rate, eps1).map(|eps2| ChannelPoint::new(eps1, eps2))
        })
        .collect()
}

/// `eps1` values in `[0, 1]` where the boundary bends or meets the
/// diagonal: the two corners, the symmetric point, and the point where the
/// sum condition reaches `eps2 = 1`.
pub fn boundary_breakpoints(model: CorrelationModel, rate: f64) -> Vec<f64> {
    let h = conditional_entropy(model);
    let j = joint_entropy(model);
    let mut xs: Vec<f64> = [1.0 - rate * (j - h), 1.0 - rate * j / 2.0, 1.0 - rate * h, 1.0 - rate * j]
        .into_iter()
        .filter(|x| (0.0..=1.0).contains(x))
        .collect();
    xs.sort_by(f64::total_cmp);
    xs.dedup();
    xs
}

/// [`sw_boundary`] with the [`boundary_breakpoints`] merged in, so the
/// polyline's vertices are exact whatever the grid.
pub fn sw_boundary_with_breakpoints(model: CorrelationModel, rate: f64, grid: usize) -> Vec<ChannelPoint> {
    let mut pts = sw_boundary(model, rate, grid);
    pts.extend(boundary_breakpoints(model, rate).into_iter().filter_map(|e1| max_eps2(model, rate, e1).map(|e2| ChannelPoint::new(e1, e2))));
    pts.sort_by(|a, b| a.eps1.total_cmp(&b.eps1));
    pts.dedup_by(|a, b| a.eps1 == b.eps1);
    pts
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn entropies() {
        assert_eq!(conditional_entropy(CorrelationModel::erasure(0.5)), 0.5);
        assert_eq!(conditional_entropy(CorrelationModel::bsc(1.0)), 0.0);
        assert!((conditional_entropy(CorrelationModel::bsc(0.5)) - 1.0).abs() < 1e-15);
        assert_eq!(joint_entropy(CorrelationModel::erasure(0.5)), 1.5);
        assert_eq!(joint_entropy(CorrelationModel::erasure(0.0)), 2.0);
        assert_eq!(joint_entropy(CorrelationModel::bsc(1.0)), 1.0);
    }

    #[test]
    fn membership_examples() {
        let m = CorrelationModel::erasure(0.5);
        assert!(sw_contains(m, 0.5, ChannelPoint::new(0.6, 0.6)));
        assert!(!sw_contains(m, 0.5, ChannelPoint::new(0.7, 0.7)));
        for model in [m, CorrelationModel::bsc(0.2), CorrelationModel::erasure(0.0)] {
            assert!(sw_contains(model, 1e-9, ChannelPoint::new(0.0, 0.0)));
        }
    }

    #[test]
    fn gamma_examples() {
        let m = CorrelationModel::erasure(0.5);
        assert!((gamma_exponent(m, 0.5, 0.4, 0.4) - 0.05).abs() < 1e-15);
        let ext = symmetric_extremal(0.5, 0.5);
        let g = gamma_exponent(m, 0.5, 1.0 - ext.eps1, 1.0 - ext.eps2);
        assert!(g.abs() < 1e-15);
    }

    #[test]
    fn named_points() {
        let (a, b) = corner_points(0.5, 0.5);
        assert_eq!((a.eps1, a.eps2), (0.5, 0.75));
        assert_eq!((b.eps1, b.eps2), (0.75, 0.5));
        let (a, b) = corner_points(0.0, 0.3);
        assert_eq!(a, b);
        assert_eq!(a, ChannelPoint::new(0.7, 0.7));
        let (a, b) = corner_points(1.0, 0.3);
        assert_eq!(a, ChannelPoint::new(0.7, 1.0));
        assert_eq!(b, ChannelPoint::new(1.0, 0.7));

        assert_eq!(symmetric_extremal(0.5, 0.5), ChannelPoint::new(0.625, 0.625));
        assert_eq!(symmetric_extremal(0.0, 0.4), ChannelPoint::new(0.6, 0.6));
        let ext = symmetric_extremal(0.3, 0.6);
        let m = CorrelationModel::erasure(0.3);
        let sum = (1.0 - ext.eps1) / 0.6 + (1.0 - ext.eps2) / 0.6;
        assert!((sum - joint_entropy(m)).abs() < 1e-12);
    }

    #[test]
    fn boundary_hits_named_points() {
        let m = CorrelationModel::erasure(0.5);
        let pts = sw_boundary(m, 0.5, 201);
        let hits = |target: ChannelPoint| {
            pts.iter().any(|q| (q.eps1 - target.eps1).abs() < 1e-9 && (q.eps2 - target.eps2).abs() < 1e-9)
        };
        let (a, b) = corner_points(0.5, 0.5);
        assert!(hits(a));
        assert!(hits(b));
        assert!(hits(symmetric_extremal(0.5, 0.5)));
        // flat below the first corner at the single-user bound
        for q in pts.iter().filter(|q| q.eps1 <= a.eps1) {
            assert!((q.eps2 - 0.75).abs() < 1e-12);
        }
        // the section is empty past the second corner
        assert!(pts.iter().all(|q| q.eps1 <= b.eps1 + 1e-12));
    }

    #[test]
    fn independent_sources_give_square_corner() {
        let pts = sw_boundary(CorrelationModel::erasure(0.0), 0.4, 51);
        for q in &pts {
            assert!(q.eps1 <= 0.6 + 1e-12);
            assert!((q.eps2 - 0.6).abs() < 1e-12);
        }
    }

    #[test]
    fn breakpoints_land_on_coarse_grids() {
        let model = CorrelationModel::erasure(0.5);
        assert_eq!(boundary_breakpoints(model, 0.5), vec![0.25, 0.5, 0.625, 0.75]);
        let pts = sw_boundary_with_breakpoints(model, 0.5, 101);
        assert!(pts.contains(&ChannelPoint::new(0.625, 0.625)));
        assert!(pts.contains(&ChannelPoint::new(0.5, 0.75)));
        assert!(pts.windows(2).all(|w| w[0].eps1 < w[1].eps1));
        assert_eq!(pts.len(), 77);
    }

    #[test]
    fn boundary_has_at_most_three_segments() {
        for (p, rate) in [(0.5, 0.5), (0.2, 0.7), (0.9, 0.3), (1.0, 0.5)] {
            let pts = sw_boundary(CorrelationModel::erasure(p), rate, 401);
            let slopes: Vec<f64> = pts
                .windows(2)
                .map(|w| ((w[1].eps2 - w[0].eps2) / (w[1].eps1 - w[0].eps1) * 1e6).round() / 1e6)
                .collect();
            let mut pieces = 1;
            for w in slopes.windows(2) {
                if w[0] != w[1] {
                    pieces += 1;
                }
            }
            // A kink inside a grid cell shows up as one extra short piece.
            assert!(pieces <= 3 + 1, "p={p} R={rate}: {pieces}");
            for s in slopes {
                assert!((-1.0 - 1e-9..=0.0).contains(&s));
            }
        }
    }

    proptest! {
        #[test]
        fn gamma_sign_matches_strict_membership(
            p in 0.0f64..=1.0, rate in 0.01f64..2.0, e1 in 0.0f64..=1.0, e2 in 0.0f64..=1.0
        ) {
            let m = CorrelationModel::erasure(p);
            let g = gamma_exponent(m, rate, 1.0 - e1, 1.0 - e2);
            prop_assume!(g.abs() > 1e-12);
            prop_assert_eq!(g > 0.0, sw_contains_strict(m, rate, ChannelPoint::new(e1, e2)));
        }

        #[test]
        fn membership_is_monotone(p in 0.0f64..=1.0, rate in 0.01f64..2.0, e1 in 0.0f64..=1.0, e2 in 0.0f64..=1.0, d in 0.0f64..0.5) {
            let m = CorrelationModel::erasure(p);
            if sw_contains(m, rate, ChannelPoint::new(e1, e2)) {
                prop_assert!(sw_contains(m, rate, ChannelPoint::new((e1 - d).max(0.0), e2)));
                prop_assert!(sw_contains(m, rate, ChannelPoint::new(e1, (e2 - d).max(0.0))));
            }
        }
    }
}
