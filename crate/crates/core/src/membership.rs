//! Point membership by branch and bound over cylinder bounds.
//!
//! The bound of the cylinder `[w]` is `F_w(K0)` where `F_w` is the word map and
//! `K0 ⊇ A` is convex. Since `F_w(x) = M^d x + o_w` for `d = |w|`, the
//! half-planes of `F_w(K0)` are those of `K0` pulled back through `M^{-d}` and
//! shifted by `o_w`; the pulled-back normals are shared by all nodes of a depth.

use std::cmp::Ordering;
use std::collections::BinaryHeap;
use std::io::Write;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::bounds::{bounding_set, DISC_SIDES};
use crate::error::{Error, Result};
use crate::expansion::{default_certificate, expand_point, InteriorCertificate};
use crate::geom::Vec2;
use crate::hull::outer_hull;
use crate::polygon::ConvexPolygon;
use crate::project::project;
use crate::system::{Case, SystemSpec};
use crate::word::{EventualAddress, Symbol, Word};
use crate::TAU;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "verdict")]
pub enum MembershipVerdict {
    In { address_prefix: Word, residual_error: f64 },
    Out { depth: usize, min_separation: f64 },
    Unknown { depth: usize },
}

impl MembershipVerdict {
    pub fn is_in(&self) -> bool {
        matches!(self, MembershipVerdict::In { .. })
    }

    pub fn is_out(&self) -> bool {
        matches!(self, MembershipVerdict::Out { .. })
    }
}

/// Which convex set seeds the cylinder bounds.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StartSet {
    /// Circumscribed polygon over the support function.
    Hull,
    /// The closed-form bounding set.
    Analytic,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DecideOptions {
    pub max_depth: usize,
    pub start: StartSet,
    /// Required accuracy of an `In` answer.
    pub tolerance: f64,
    /// Best-first queue size before switching to depth first.
    pub queue_cap: usize,
    pub node_budget: usize,
    /// Try an interior certificate before searching.
    pub use_certificate: bool,
}

impl Default for DecideOptions {
    fn default() -> Self {
        DecideOptions {
            max_depth: 24,
            start: StartSet::Hull,
            tolerance: 1e-9,
            queue_cap: 1 << 16,
            node_budget: 2_000_000,
            use_certificate: true,
        }
    }
}

/// `K0` as unit normals and offsets, `x ∈ K0 ⇔ <n_i, x> <= c_i`.
#[derive(Clone, Debug)]
struct HalfPlanes {
    normals: Vec<Vec2>,
    offsets: Vec<f64>,
}

impl HalfPlanes {
    fn of_polygon(p: &ConvexPolygon) -> Self {
        let normals = p.edge_normals();
        let offsets = normals
            .iter()
            .zip(p.edges())
            .map(|(n, (a, _))| n.dot(a))
            .collect();
        HalfPlanes { normals, offsets }
    }

    /// Half-planes of `M^{d+1}(K0)` from those of `M^d(K0)`.
    fn pulled(&self, minv_t: crate::geom::Mat2) -> Self {
        let mut normals = Vec::with_capacity(self.normals.len());
        let mut offsets = Vec::with_capacity(self.normals.len());
        for (n, c) in self.normals.iter().zip(&self.offsets) {
            let v = minv_t.apply(*n);
            let len = v.norm();
            normals.push(v * (1.0 / len));
            offsets.push(c / len);
        }
        HalfPlanes { normals, offsets }
    }

    /// SAT margin of `p` against the set shifted by `o`.
    fn margin(&self, p: Vec2, o: Vec2) -> f64 {
        let q = p - o;
        self.normals
            .iter()
            .zip(&self.offsets)
            .map(|(n, c)| n.dot(q) - c)
            .fold(f64::NEG_INFINITY, f64::max)
    }
}

/// `K0` for the search, enlarged so that both maps send it into itself and
/// child bounds nest inside their parents.
pub fn start_set(spec: &SystemSpec, start: StartSet) -> ConvexPolygon {
    let k0 = match start {
        StartSet::Hull => {
            let eps = 1e-6 * bounding_set(spec).diameter();
            outer_hull(spec, eps)
        }
        StartSet::Analytic => bounding_set(spec).to_polygon(),
    };
    forward_invariant(spec, k0)
}

/// A symmetric polygon `B` with `M B ⊆ g B` for some `g < 1`.
fn contracted_shape(spec: &SystemSpec) -> ConvexPolygon {
    match spec.case() {
        Case::PositiveReal { .. } | Case::MixedReal { .. } => ConvexPolygon::rect(-1.0, 1.0, -1.0, 1.0),
        Case::Complex { .. } => ConvexPolygon::circumscribed(Vec2::ZERO, 1.0, DISC_SIDES),
        Case::Jordan { nu } => {
            // the block is a contraction in the norm of (x, y/ε)
            let eps = (1.0 - nu.abs()) / 2.0;
            let disc = ConvexPolygon::circumscribed(Vec2::ZERO, 1.0, DISC_SIDES);
            ConvexPolygon::from_ccw(disc.vertices.iter().map(|v| Vec2::new(v.x, eps * v.y)).collect(), true)
        }
    }
}

/// Grows `poly` to `K ⊕ tB` until `F_±(K) ⊆ K`.
///
/// `F_±(K) ⊆ K` iff `h_K(Mᵀn) + |<u, n>| <= h_K(n)` over the edge normals of
/// `K`. The normals of `K ⊕ tB` are those of `K` and `B` for every `t > 0`, and
/// adding `tB` gains at least `t (1 - g) h_B(n)` on each, which fixes an excess
/// `e(n)`. Comes back unchanged when `B` is not contracted.
fn forward_invariant(spec: &SystemSpec, poly: ConvexPolygon) -> ConvexPolygon {
    let shape = contracted_shape(spec);
    let mt = spec.matrix().transpose();
    let u = spec.translation();
    let mut normals = poly.edge_normals();
    normals.extend(shape.edge_normals());
    let pulled: Vec<Vec2> = normals.iter().map(|n| mt.apply(*n)).collect();
    let g = normals
        .iter()
        .zip(&pulled)
        .map(|(n, d)| shape.support(*d) / shape.support(*n))
        .fold(0.0, f64::max);
    if poly.len() < 3 || g >= 1.0 {
        return poly;
    }
    let mut k = poly.clone();
    for _ in 0..8 {
        let mut t: f64 = 0.0;
        for (n, d) in normals.iter().zip(&pulled) {
            let e = k.support(*d) + u.dot(*n).abs() - k.support(*n);
            if e > 0.0 {
                t = t.max(e / ((1.0 - g) * shape.support(*n)));
            }
        }
        if t == 0.0 {
            return k;
        }
        let t = t * (1.0 + 1e-6) + 1e-15 * k.diameter();
        let sums: Vec<Vec2> = k
            .vertices
            .iter()
            .flat_map(|a| shape.vertices.iter().map(move |b| *a + *b * t))
            .collect();
        k = ConvexPolygon::hull_of(&sums, 0.0);
    }
    poly
}

struct Node {
    key: f64,
    depth: usize,
    offset: Vec2,
    word: Word,
}

impl PartialEq for Node {
    fn eq(&self, other: &Self) -> bool {
        self.key == other.key
    }
}
impl Eq for Node {}
impl PartialOrd for Node {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for Node {
    // max-heap on -key: the node whose bound holds the point deepest comes first
    fn cmp(&self, other: &Self) -> Ordering {
        other.key.total_cmp(&self.key)
    }
}

/// Decides `point ∈ A` where possible.
///
/// `Out` means every branch was pruned by a bound at positive margin; `In`
/// needs either an interior certificate covering the point or a cylinder
/// whose limit point `π(w p^∞)` lies within `tolerance` of it.
pub fn decide_point(spec: &SystemSpec, point: Vec2, opts: &DecideOptions) -> MembershipVerdict {
    let k0 = start_set(spec, opts.start);
    decide_point_with(spec, &k0, point, opts)
}

pub fn decide_point_with(
    spec: &SystemSpec,
    k0: &ConvexPolygon,
    point: Vec2,
    opts: &DecideOptions,
) -> MembershipVerdict {
    search(spec, k0, point, opts, None)
}

fn search(
    spec: &SystemSpec,
    k0: &ConvexPolygon,
    point: Vec2,
    opts: &DecideOptions,
    mut pruned: Option<&mut Vec<Word>>,
) -> MembershipVerdict {
    let scale = k0.diameter().max(1.0);
    let prune = TAU * scale;
    let planes0 = HalfPlanes::of_polygon(k0);
    let m0 = planes0.margin(point, Vec2::ZERO);
    if m0 > prune {
        if let Some(list) = pruned.as_deref_mut() {
            list.push(Word::empty());
        }
        return MembershipVerdict::Out {
            depth: 0,
            min_separation: m0,
        };
    }

    if opts.use_certificate {
        if let Some(v) = certified_in(spec, point, opts.tolerance) {
            return v;
        }
    }

    let minv_t = match spec.matrix().inverse() {
        Some(m) => m.transpose(),
        None => return MembershipVerdict::Unknown { depth: 0 },
    };
    let mut levels = vec![planes0];
    let u = spec.translation();
    let mut m_pow = vec![crate::geom::Mat2::IDENTITY];
    let fix_p = project(spec, &EventualAddress::with_tail(Word::empty(), Symbol::P));

    let mut heap = BinaryHeap::new();
    let mut stack: Vec<Node> = Vec::new();
    heap.push(Node {
        key: m0,
        depth: 0,
        offset: Vec2::ZERO,
        word: Word::empty(),
    });
    let mut min_sep = f64::INFINITY;
    let mut deepest = 0usize;
    let mut survived = false;
    let mut nodes = 0usize;

    while let Some(node) = stack.pop().or_else(|| heap.pop()) {
        nodes += 1;
        if nodes > opts.node_budget {
            return MembershipVerdict::Unknown { depth: deepest };
        }
        if node.depth >= opts.max_depth {
            survived = true;
            let limit = m_pow[node.depth].apply(fix_p) + node.offset;
            let err = limit.dist(point);
            if err <= opts.tolerance {
                return MembershipVerdict::In {
                    address_prefix: node.word,
                    residual_error: err,
                };
            }
            continue;
        }
        let d = node.depth + 1;
        if levels.len() <= d {
            let next = levels[d - 1].pulled(minv_t);
            levels.push(next);
            let next_m = m_pow[d - 1] * spec.matrix();
            m_pow.push(next_m);
        }
        deepest = deepest.max(d);
        // F_{w s}(x) = F_w(M x + s u) = M^{d} x + o_w + s M^{d-1} u
        let step = m_pow[d - 1].apply(u);
        for s in [Symbol::M, Symbol::P] {
            let offset = node.offset + step * s.value();
            let margin = levels[d].margin(point, offset);
            if margin > prune {
                min_sep = min_sep.min(margin);
                if let Some(list) = pruned.as_deref_mut() {
                    list.push(node.word.pushed(s));
                }
                continue;
            }
            let child = Node {
                key: margin,
                depth: d,
                offset,
                word: node.word.pushed(s),
            };
            if heap.len() < opts.queue_cap {
                heap.push(child);
            } else {
                stack.push(child);
            }
        }
    }
    if survived {
        MembershipVerdict::Unknown {
            depth: opts.max_depth,
        }
    } else {
        MembershipVerdict::Out {
            depth: deepest,
            min_separation: min_sep,
        }
    }
}

fn certified_in(spec: &SystemSpec, point: Vec2, tolerance: f64) -> Option<MembershipVerdict> {
    let cert = default_certificate(spec).ok()?;
    expand_in(&cert, point, tolerance)
}

/// `In` from an interior certificate, refining until the truncation error is
/// below `tolerance`.
pub fn expand_in(cert: &InteriorCertificate, point: Vec2, tolerance: f64) -> Option<MembershipVerdict> {
    if point.norm_inf() >= cert.delta {
        return None;
    }
    let mut steps = 64;
    loop {
        let run = expand_point(cert, point, steps).ok()?;
        if run.prefix_error <= tolerance || steps >= 8192 {
            return Some(MembershipVerdict::In {
                address_prefix: run.digits,
                residual_error: run.prefix_error,
            });
        }
        steps *= 2;
    }
}

/// Proof that a point lies outside `A`: a complete prefix code of words whose
/// cylinder bounds all miss the point.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct NonMembershipCertificate {
    pub spec: SystemSpec,
    pub point: Vec2,
    pub start: StartSet,
    pub depth: usize,
    pub min_separation: f64,
    pub frontier: Vec<Word>,
}

/// Runs the search and, on `Out`, packages the pruned words.
pub fn certify_out(spec: &SystemSpec, point: Vec2, opts: &DecideOptions) -> Option<NonMembershipCertificate> {
    let k0 = start_set(spec, opts.start);
    let mut frontier = Vec::new();
    match search(spec, &k0, point, opts, Some(&mut frontier)) {
        MembershipVerdict::Out { depth, min_separation } => {
            frontier.sort_by_key(|a| a.to_string());
            Some(NonMembershipCertificate {
                spec: *spec,
                point,
                start: opts.start,
                depth,
                min_separation,
                frontier,
            })
        }
        _ => None,
    }
}

/// True when every infinite word has exactly one prefix in `words`.
pub fn is_complete_prefix_code(words: &[Word]) -> bool {
    fn rec(words: &[&[crate::word::Symbol]]) -> bool {
        if words.is_empty() {
            return false;
        }
        if words.iter().any(|w| w.is_empty()) {
            return words.len() == 1;
        }
        let split = |s: crate::word::Symbol| -> Vec<&[crate::word::Symbol]> {
            words.iter().filter(|w| w[0] == s).map(|w| &w[1..]).collect()
        };
        rec(&split(Symbol::M)) && rec(&split(Symbol::P))
    }
    let slices: Vec<&[crate::word::Symbol]> = words.iter().map(|w| w.symbols()).collect();
    rec(&slices)
}

impl NonMembershipCertificate {
    /// Checks the frontier directly: each bound misses the point by more than
    /// the tolerance and together the words cover every address.
    pub fn verify(&self) -> Result<()> {
        if !is_complete_prefix_code(&self.frontier) {
            return Err(Error::ConditionsFailed("frontier is not a complete prefix code".into()));
        }
        let k0 = start_set(&self.spec, self.start);
        let prune = TAU * k0.diameter().max(1.0);
        let mut worst = f64::INFINITY;
        for w in &self.frontier {
            let f = crate::affine::affine_of_word(&self.spec, w);
            let margin = k0.transformed(&f).signed_distance(self.point);
            if margin <= prune {
                return Err(Error::ConditionsFailed(format!("bound of {w} reaches the point")));
            }
            worst = worst.min(margin);
        }
        if (worst - self.min_separation).abs() > 1e-9 * worst.abs().max(1.0) {
            return Err(Error::ConditionsFailed(format!(
                "recorded separation {} differs from {worst}",
                self.min_separation
            )));
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ScanCase {
    MixedReal,
    Jordan,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum CellVerdict {
    CertifiedIn,
    CertifiedOut,
    Unknown,
}

impl CellVerdict {
    pub fn as_str(self) -> &'static str {
        match self {
            CellVerdict::CertifiedIn => "certified-in",
            CellVerdict::CertifiedOut => "certified-out",
            CellVerdict::Unknown => "unknown",
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScanCell {
    pub index: usize,
    pub params: Vec<f64>,
    pub verdict: CellVerdict,
    pub certificate_id: String,
    /// Interior radius for certified-in cells.
    pub delta: Option<f64>,
    /// Separation and depth for certified-out cells.
    pub separation: Option<f64>,
    pub depth: Option<usize>,
}

/// Verdicts for "is the origin interior to A?" at cell centers.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RegionScan {
    pub case: ScanCase,
    /// `[x0, x1, y0, y1]`; the second range is ignored for the Jordan case.
    pub rect: [f64; 4],
    pub resolution: usize,
    pub max_depth: usize,
    pub cells: Vec<ScanCell>,
}

pub fn cell_centers(case: ScanCase, rect: [f64; 4], resolution: usize) -> Vec<Vec<f64>> {
    let [x0, x1, y0, y1] = rect;
    let at = |lo: f64, hi: f64, i: usize| lo + (i as f64 + 0.5) * (hi - lo) / resolution as f64;
    match case {
        ScanCase::Jordan => (0..resolution).map(|i| vec![at(x0, x1, i)]).collect(),
        ScanCase::MixedReal => (0..resolution)
            .flat_map(|j| (0..resolution).map(move |i| vec![at(x0, x1, i), at(y0, y1, j)]))
            .collect(),
    }
}

pub fn scan_region(case: ScanCase, rect: [f64; 4], resolution: usize, max_depth: usize) -> Result<RegionScan> {
    if resolution == 0 {
        return Err(Error::InvalidParameter("resolution must be positive".into()));
    }
    let inside = |v: f64| v > 0.0 && v < 1.0;
    let dims = if case == ScanCase::Jordan { 2 } else { 4 };
    if !rect[..dims].iter().all(|&v| inside(v)) || rect[0] >= rect[1] || (dims == 4 && rect[2] >= rect[3]) {
        return Err(Error::InvalidParameter(format!("scan rectangle {rect:?} must lie inside (0, 1)")));
    }
    let opts = DecideOptions {
        max_depth,
        use_certificate: false,
        node_budget: 200_000,
        ..DecideOptions::default()
    };
    let cells = cell_centers(case, rect, resolution)
        .into_par_iter()
        .enumerate()
        .map(|(index, params)| scan_cell(case, index, params, &opts))
        .collect();
    Ok(RegionScan {
        case,
        rect,
        resolution,
        max_depth,
        cells,
    })
}

fn scan_cell(case: ScanCase, index: usize, params: Vec<f64>, opts: &DecideOptions) -> ScanCell {
    let spec = match case {
        ScanCase::MixedReal => SystemSpec::mixed_real(params[0], params[1]),
        ScanCase::Jordan => SystemSpec::jordan(params[0]),
    };
    let mut cell = ScanCell {
        index,
        params,
        verdict: CellVerdict::Unknown,
        certificate_id: String::new(),
        delta: None,
        separation: None,
        depth: None,
    };
    let Ok(spec) = spec else {
        return cell;
    };
    if let Ok(cert) = default_certificate(&spec) {
        cell.verdict = CellVerdict::CertifiedIn;
        cell.delta = Some(cert.delta);
        cell.certificate_id = format!("interior-{index}");
        return cell;
    }
    if let MembershipVerdict::Out { depth, min_separation } = decide_point(&spec, Vec2::ZERO, opts) {
        cell.verdict = CellVerdict::CertifiedOut;
        cell.separation = Some(min_separation);
        cell.depth = Some(depth);
        cell.certificate_id = format!("out-{index}");
    }
    cell
}

impl RegionScan {
    pub fn write_csv<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        match self.case {
            ScanCase::MixedReal => writeln!(w, "lambda,mu,verdict,certificate_id")?,
            ScanCase::Jordan => writeln!(w, "nu,verdict,certificate_id")?,
        }
        for c in &self.cells {
            let params: Vec<String> = c.params.iter().map(|p| format!("{p}")).collect();
            writeln!(w, "{},{},{}", params.join(","), c.verdict.as_str(), c.certificate_id)?;
        }
        Ok(())
    }

    pub fn to_csv(&self) -> String {
        let mut buf = Vec::new();
        self.write_csv(&mut buf).expect("writing to memory");
        String::from_utf8(buf).expect("ascii output")
    }

    pub fn cell_at(&self, params: &[f64]) -> Option<&ScanCell> {
        let [x0, x1, y0, y1] = self.rect;
        let idx = |lo: f64, hi: f64, v: f64| ((v - lo) / (hi - lo) * self.resolution as f64).floor();
        let i = idx(x0, x1, params[0]);
        if i < 0.0 || i >= self.resolution as f64 {
            return None;
        }
        match self.case {
            ScanCase::Jordan => self.cells.get(i as usize),
            ScanCase::MixedReal => {
                let j = idx(y0, y1, params[1]);
                if j < 0.0 || j >= self.resolution as f64 {
                    return None;
                }
                self.cells.get(j as usize * self.resolution + i as usize)
            }
        }
    }
}
