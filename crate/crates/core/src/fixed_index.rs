//! Fixed points of train track maps and the index of an outer automorphism.
//!
//! For a rotationless power `f^k` of a train track map the fixed-point data
//! is finite: fixed vertices, interior fixed points (one per matching
//! orientation-preserving crossing of an edge over itself, at an exactly
//! computable offset), the fixed directions at these points, and the
//! indivisible Nielsen paths joining them.  Grouping fixed points into
//! Nielsen (isogredience) classes yields, for each class, the number of
//! attracting boundary points `att` and the rank of the fixed subgroup of
//! the corresponding lift; the class index is `att/2 + rank − 1` and the
//! index of the outer class is the sum of the positive class indices.
//!
//! Everything here is exact: interior offsets live in the eigenvalue field,
//! Nielsen paths are certified by letter-for-letter tail comparison, and the
//! search range is derived from a bounded-cancellation estimate so that a
//! clean run is a proof of completeness.  An independent word-level oracle
//! (`boundary_oracle`) recomputes the same invariants from iteration on the
//! free group itself and never looks at the graph data.

use std::cmp::Ordering;
use std::collections::{HashMap, HashSet};

use num::integer::lcm;
use num::BigInt;

use crate::algebraic::NfElem;
use crate::graph::{Dir, GraphSelfMap, Path};
use crate::train_track::{bestvina_handel, TrainTrackMap};
use crate::words::{Automorphism, Letter, ReducedWord};
use crate::{Error, Rat, Result};

/// Letter budget for iterated edge images of a power map.
const POWER_LETTER_BUDGET: usize = 4_000_000;
/// Hard cap on materialized eigenray prefixes, in directions.
const RAY_CAP: usize = 1 << 21;
/// Hard cap on the Nielsen-path leg scan, in full edges per leg.
const LEG_SCAN_CAP: usize = 20_000;
/// Cap on the total number of (germ, leg length) positions indexed at once.
const ENTRY_BUDGET: usize = 2_000_000;
/// Cap on collected candidate leg pairs.
const CAND_CAP: usize = 1_000_000;
/// Cap on the number of equal-tail-length entries cross-paired per run.
const RUN_CAP: usize = 4_096;
/// Letter budget for tail comparisons during the Nielsen-path search.
const COMPARE_BUDGET: u64 = 12_000_000;

// ---------------------------------------------------------------------------
// Periodic structure
// ---------------------------------------------------------------------------

/// Periods of directions and vertices under a self map, and the smallest
/// power that fixes every periodic direction.
#[derive(Clone, Debug)]
pub struct PeriodicStructure {
    /// Period of each direction under the derivative map (0 if pre-periodic).
    pub direction_periods: Vec<u32>,
    /// Period of each vertex (0 if pre-periodic).
    pub vertex_periods: Vec<u32>,
    /// lcm of all direction and vertex periods; `f^exponent` is rotationless.
    pub rotationless_exponent: u32,
}

/// Periods of the elements of a finite functional graph `x -> next[x]`
/// (0 for elements not lying on a cycle).
fn cycle_periods(next: &[usize]) -> Vec<u32> {
    let n = next.len();
    let mut periods = vec![0u32; n];
    for s in 0..n {
        // After n steps we are guaranteed to sit on a cycle.
        let mut x = s;
        for _ in 0..n {
            x = next[x];
        }
        // Walk the cycle once, measuring its length and looking for s.
        let mut len = 1u32;
        let mut on_cycle = x == s;
        let mut y = next[x];
        while y != x {
            if y == s {
                on_cycle = true;
            }
            y = next[y];
            len += 1;
        }
        if on_cycle {
            periods[s] = len;
        }
    }
    periods
}

/// Periodic structure of a train track map.
pub fn periodic_structure(tt: &TrainTrackMap) -> PeriodicStructure {
    let map = &tt.map;
    let dir_count = 2 * map.graph.edge_count();
    let dir_next: Vec<usize> = (0..dir_count)
        .map(|i| {
            map.dir_map(Dir::from_index(i))
                .expect("train track map has nonempty edge images")
                .index()
        })
        .collect();
    let vertex_next: Vec<usize> = (0..map.graph.vertex_count())
        .map(|v| map.vertex_image(v))
        .collect();
    let direction_periods = cycle_periods(&dir_next);
    let vertex_periods = cycle_periods(&vertex_next);
    let mut exponent: u64 = 1;
    for &p in direction_periods.iter().chain(vertex_periods.iter()) {
        if p != 0 {
            exponent = lcm(exponent, p as u64);
        }
    }
    PeriodicStructure {
        direction_periods,
        vertex_periods,
        rotationless_exponent: exponent as u32,
    }
}

// ---------------------------------------------------------------------------
// Power map
// ---------------------------------------------------------------------------

/// The power `f^k` of a graph self map with precomputed edge images.
pub(crate) struct PowerMap<'a> {
    map: &'a GraphSelfMap,
    k: u32,
    /// Image of each forward edge under `f^k`.
    images: Vec<Path>,
    /// Image of each vertex under `f^k`.
    vertex_images: Vec<usize>,
}

impl<'a> PowerMap<'a> {
    fn build(map: &'a GraphSelfMap, k: u32) -> Result<PowerMap<'a>> {
        let mut images: Vec<Path> = (0..map.graph.edge_count())
            .map(|e| Path::single(Dir::fwd(e)))
            .collect();
        for _ in 0..k {
            let mut total = 0usize;
            images = images
                .iter()
                .map(|p| {
                    let q = map.map_path_raw(p);
                    total += q.len();
                    q
                })
                .collect();
            if total > POWER_LETTER_BUDGET {
                return Err(Error::Indeterminate(format!(
                    "edge images of the {}th power exceed the {}-letter budget",
                    k, POWER_LETTER_BUDGET
                )));
            }
        }
        let mut vertex_images: Vec<usize> = (0..map.graph.vertex_count()).collect();
        for _ in 0..k {
            vertex_images = vertex_images.iter().map(|&v| map.vertex_image(v)).collect();
        }
        Ok(PowerMap {
            map,
            k,
            images,
            vertex_images,
        })
    }

    /// Length of the image of the edge underlying `d`.
    fn image_len(&self, d: Dir) -> usize {
        self.images[d.edge()].len()
    }

    /// Append the image of a single direction to a direction buffer.
    fn append_image_of_dir(&self, d: Dir, out: &mut Vec<Dir>) {
        let img = &self.images[d.edge()];
        if d.is_rev() {
            out.extend(img.dirs().iter().rev().map(|x| x.reversed()));
        } else {
            out.extend_from_slice(img.dirs());
        }
    }

    /// The `i`-th direction of the image of `d`.
    fn image_dir_at(&self, d: Dir, i: usize) -> Dir {
        let img = self.images[d.edge()].dirs();
        if d.is_rev() {
            img[img.len() - 1 - i].reversed()
        } else {
            img[i]
        }
    }

    /// Raw image of a path (tight whenever the input is legal).
    fn map_path_raw(&self, p: &Path) -> Path {
        let mut dirs = Vec::new();
        for &d in p.dirs() {
            let img = &self.images[d.edge()];
            if d.is_rev() {
                dirs.extend(img.dirs().iter().rev().map(|x| x.reversed()));
            } else {
                dirs.extend_from_slice(img.dirs());
            }
        }
        Path::from_dirs(dirs)
    }

    /// Tightened image of an arbitrary path, applying `f` `k` times.
    fn map_path_tight(&self, p: &Path) -> Path {
        let mut cur = p.clone();
        for _ in 0..self.k {
            cur = self.map.map_path(&cur);
        }
        cur
    }
}

// ---------------------------------------------------------------------------
// Fixed points and fixed germs
// ---------------------------------------------------------------------------

/// A fixed point of a power of a train track map.
#[derive(Clone, Debug)]
pub enum FixedPointSite {
    /// A fixed vertex.
    Vertex(usize),
    /// An interior fixed point: `f^k` crosses `edge` over itself with
    /// matching orientation at position `crossing` of the image; the exact
    /// offset from the initial vertex (in the eigenmetric) is `offset`.
    Interior {
        edge: usize,
        crossing: usize,
        offset: NfElem,
    },
}

/// Where an eigenray starts.
#[derive(Clone, Debug)]
enum GermSeed {
    /// Germ at a fixed vertex: the ray is the limit of `f^{kn}(d)`.
    FromVertex,
    /// Germ at an interior fixed point: the ray is `Q·g(Q)·g²(Q)…` for the
    /// stored first block `Q`.
    FromInterior(Path),
}

/// A fixed germ: a fixed direction based at a fixed point.
#[derive(Clone, Debug)]
pub struct FixedGerm {
    /// Index into the site list of the base point.
    pub site: usize,
    /// The direction of the germ.
    pub along: Dir,
    seed: GermSeed,
}

/// The full fixed-point data of `f^k`.
#[derive(Clone, Debug)]
pub struct FixedPointData {
    /// The power the data belongs to.
    pub k: u32,
    /// All fixed points.
    pub sites: Vec<FixedPointSite>,
    /// All fixed germs, referencing their base sites.
    pub germs: Vec<FixedGerm>,
}

/// Enumerate the fixed points and fixed germs of `f^k`.
pub fn fixed_points_of_map(tt: &TrainTrackMap, k: u32) -> Result<FixedPointData> {
    let g = PowerMap::build(&tt.map, k)?;
    Ok(enumerate_fixed(tt, &g))
}

fn enumerate_fixed(tt: &TrainTrackMap, g: &PowerMap) -> FixedPointData {
    let map = &tt.map;
    let dir_periods = periodic_structure(tt).direction_periods;
    let mut sites = Vec::new();
    let mut germs = Vec::new();
    for v in 0..map.graph.vertex_count() {
        if g.vertex_images[v] != v {
            continue;
        }
        let site = sites.len();
        sites.push(FixedPointSite::Vertex(v));
        for d in map.graph.directions_at(v) {
            let p = dir_periods[d.index()];
            if p != 0 && g.k % p == 0 {
                germs.push(FixedGerm {
                    site,
                    along: d,
                    seed: GermSeed::FromVertex,
                });
            }
        }
    }
    // Interior fixed points: a crossing of g(e) over e at step i covers e
    // starting at exact eigenlength S_i.  A same-orientation crossing fixes
    // the offset solving λ^k·s = S_i + s, so s = S_i/(λ^k − 1), which is
    // interior exactly when the crossing is neither the first nor the last
    // step.  A reversed crossing fixes λ^k·s = S_i + (L_e − s), so
    // s = (S_i + L_e)/(λ^k + 1), which is interior at every position; no
    // germ is fixed there, so it forms an index-zero class of its own.
    let field = &tt.spectral.field;
    let one = field.constant(Rat::from(BigInt::from(1)));
    let lam_k = field.generator().pow(g.k);
    let shrink_fwd = lam_k.sub_ref(&one).inverse();
    let shrink_rev = lam_k.add_ref(&one).inverse();
    for e in 0..map.graph.edge_count() {
        let img = &g.images[e];
        // Exact running eigenlength of the image prefix, accumulated as
        // integer counts and folded into the field only at crossings.
        let mut s = field.constant(Rat::from(BigInt::from(0)));
        let mut pending = vec![0i64; map.graph.edge_count()];
        for (i, &d) in img.dirs().iter().enumerate() {
            if d.edge() == e {
                for (ee, c) in pending.iter_mut().enumerate() {
                    if *c != 0 {
                        let scaled = tt
                            .edge_length(ee)
                            .mul_ref(&field.constant(Rat::from(BigInt::from(*c))));
                        s = s.add_ref(&scaled);
                        *c = 0;
                    }
                }
                if d.is_rev() {
                    let offset = s.add_ref(tt.edge_length(e)).mul_ref(&shrink_rev);
                    sites.push(FixedPointSite::Interior {
                        edge: e,
                        crossing: i,
                        offset,
                    });
                } else if i > 0 && i + 1 < img.len() {
                    let offset = s.mul_ref(&shrink_fwd);
                    let site = sites.len();
                    sites.push(FixedPointSite::Interior {
                        edge: e,
                        crossing: i,
                        offset,
                    });
                    germs.push(FixedGerm {
                        site,
                        along: Dir::fwd(e),
                        seed: GermSeed::FromInterior(img.slice(i + 1..img.len())),
                    });
                    germs.push(FixedGerm {
                        site,
                        along: Dir::rev(e),
                        seed: GermSeed::FromInterior(img.slice(0..i).reversed()),
                    });
                }
            }
            pending[d.edge()] += 1;
        }
    }
    FixedPointData {
        k: g.k,
        sites,
        germs,
    }
}

// ---------------------------------------------------------------------------
// Eigenrays
// ---------------------------------------------------------------------------

/// A lazily materialized prefix of the eigenray of a fixed germ.
///
/// The ray satisfies `R = H·g(R)` with `H` the seed head (empty for vertex
/// germs), so the image of the emitted prefix extends the prefix.  Reading
/// one source direction at a time materializes the ray with at most one
/// edge-image of overshoot per step.
struct Ray {
    dirs: Vec<Dir>,
    /// Next unread source position; images of unread sources extend `dirs`.
    src: usize,
    /// A source image emitted only partially: (source dir, next position).
    pending: Option<(Dir, usize)>,
    /// Length of the seed head `H`.
    head_len: usize,
    capped: bool,
}

impl Ray {
    fn for_germ(germ: &FixedGerm) -> Ray {
        match &germ.seed {
            GermSeed::FromVertex => Ray {
                dirs: vec![germ.along],
                src: 1,
                pending: Some((germ.along, 1)),
                head_len: 0,
                capped: false,
            },
            GermSeed::FromInterior(q) => Ray {
                dirs: q.dirs().to_vec(),
                src: 0,
                pending: None,
                head_len: q.len(),
                capped: false,
            },
        }
    }

    fn extend(&mut self, g: &PowerMap, target: usize) {
        let target = target.min(RAY_CAP);
        while self.dirs.len() < target {
            if let Some((d, pos)) = self.pending {
                let total = g.image_len(d);
                let take = (total - pos).min(target - self.dirs.len());
                for i in pos..pos + take {
                    self.dirs.push(g.image_dir_at(d, i));
                }
                self.pending = if pos + take < total {
                    Some((d, pos + take))
                } else {
                    None
                };
            } else if self.src < self.dirs.len() {
                let d = self.dirs[self.src];
                self.src += 1;
                self.pending = Some((d, 0));
            } else if self.capped {
                break;
            } else {
                // The emitted prefix currently maps to itself letter for
                // letter; advance by whole power steps until it grows (an
                // expanding map must grow it eventually).
                let prev = self.dirs.len();
                let mut grown = false;
                for _ in 0..2 * g.images.len() + 4 {
                    let img = g.map_path_raw(&Path::from_dirs(self.dirs.clone()));
                    let mut next = self.dirs[..self.head_len].to_vec();
                    next.extend_from_slice(img.dirs());
                    self.src = self.dirs.len();
                    self.dirs = next;
                    if self.dirs.len() >= RAY_CAP {
                        self.dirs.truncate(RAY_CAP);
                        self.capped = true;
                        return;
                    }
                    if self.dirs.len() > prev {
                        grown = true;
                        break;
                    }
                }
                if !grown {
                    self.capped = true;
                    break;
                }
            }
        }
        if self.dirs.len() >= RAY_CAP {
            self.capped = true;
        }
    }

    /// Direction at position `i`, extending on demand; None if the cap was
    /// hit first.
    fn at(&mut self, g: &PowerMap, i: usize) -> Option<Dir> {
        if i >= self.dirs.len() {
            self.extend(g, i + 1);
        }
        self.dirs.get(i).copied()
    }
}

// ---------------------------------------------------------------------------
// Indivisible Nielsen paths
// ---------------------------------------------------------------------------

/// An indivisible Nielsen path between two fixed germs: the path
/// `leg_a · reverse(leg_b)` (with the implicit partial segments at interior
/// endpoints) satisfies `f^k(ρ) = ρ` relative to its endpoints.
#[derive(Clone, Debug)]
pub struct NielsenPath {
    /// Index of the first germ.
    pub germ_a: usize,
    /// Index of the second germ.
    pub germ_b: usize,
    /// Full-edge part of the leg leaving the first germ.
    pub leg_a: Vec<Dir>,
    /// Full-edge part of the leg leaving the second germ.
    pub leg_b: Vec<Dir>,
    /// Length of the common image tail certifying the path.
    pub tail_len: usize,
}

/// Result of the Nielsen path search.
#[derive(Clone, Debug)]
pub struct InpSearch {
    /// All indivisible Nielsen paths of `f^k`.
    pub paths: Vec<NielsenPath>,
    /// Whether the scan provably covered every possible leg length.
    pub certified: bool,
    /// The leg-length bound derived from bounded cancellation.
    pub leg_bound: usize,
}

/// Search for all indivisible Nielsen paths of `f^k`.
///
/// An indivisible Nielsen path must run between two fixed germs, and its two
/// legs are prefixes of the corresponding eigenrays; the certificate is that
/// both legs have image `leg · τ` with the same tail `τ`.  Tail lengths are
/// pure letter counts, so the search is exact.
pub fn inp_search(tt: &TrainTrackMap, k: u32) -> Result<InpSearch> {
    let g = PowerMap::build(&tt.map, k)?;
    let data = enumerate_fixed(tt, &g);
    search_inps(tt, &g, &data)
}

fn search_inps(tt: &TrainTrackMap, g: &PowerMap, data: &FixedPointData) -> Result<InpSearch> {
    let map = &tt.map;
    let e_count = map.graph.edge_count();
    // Bounded cancellation bound in letters for g, by the standard
    // pigeonhole argument on block-alignment states, then converted to a
    // leg-length bound: a Nielsen leg has eigenlength |τ|/(λ^k − 1), and
    // |τ| is at most the cancellation bound.
    let sum_img: usize = (0..e_count).map(|e| g.images[e].len()).sum();
    let max_img: usize = (0..e_count).map(|e| g.images[e].len()).max().unwrap_or(1);
    let bcc_letters = (4.0 * e_count as f64 * sum_img as f64 + 1.0) * max_img as f64;
    let mut lmin = tt.edge_length(0).clone();
    let mut lmax = tt.edge_length(0).clone();
    for e in 1..e_count {
        let l = tt.edge_length(e);
        if l.cmp(&lmin) == Ordering::Less {
            lmin = l.clone();
        }
        if l.cmp(&lmax) == Ordering::Greater {
            lmax = l.clone();
        }
    }
    let ratio = lmax.to_f64() / lmin.to_f64();
    let lam_k = tt.lambda().to_f64().powi(g.k as i32);
    let leg_bound = ((bcc_letters * ratio / (lam_k - 1.0)) * 1.25).ceil() as usize + 8;
    let per_germ = if data.germs.is_empty() {
        LEG_SCAN_CAP
    } else {
        (ENTRY_BUDGET / data.germs.len()).max(64)
    };
    let scan = leg_bound.min(LEG_SCAN_CAP).min(per_germ);
    let mut certified = leg_bound <= scan;

    let mut rays: Vec<Ray> = data.germs.iter().map(Ray::for_germ).collect();
    for ray in rays.iter_mut() {
        ray.extend(g, scan + 1);
        if ray.capped && ray.dirs.len() <= scan {
            certified = false;
        }
    }
    // cum[i][a] = length of the image of the first a ray steps (plus the
    // partial head for interior germs); t = cum[a] − a is the tail length.
    let mut cums: Vec<Vec<usize>> = Vec::with_capacity(data.germs.len());
    for (i, germ) in data.germs.iter().enumerate() {
        let base = match &germ.seed {
            GermSeed::FromVertex => 0usize,
            GermSeed::FromInterior(q) => q.len(),
        };
        let amax = rays[i].dirs.len().min(scan);
        let mut cum = Vec::with_capacity(amax + 1);
        cum.push(base);
        for a in 0..amax {
            let last = *cum.last().expect("nonempty");
            cum.push(last + g.image_len(rays[i].dirs[a]));
        }
        cums.push(cum);
    }

    // A Nielsen path needs equal image tails on both legs, so group every
    // (germ, leg length) position by its tail length and only inspect
    // collisions across distinct germs.
    let mut entries: Vec<(i64, u32, u32)> = Vec::new();
    for (i, cum) in cums.iter().enumerate() {
        for a in 0..cum.len() {
            let t = cum[a] as i64 - a as i64;
            if t >= 1 {
                entries.push((t, i as u32, a as u32));
            }
        }
    }
    entries.sort_unstable();

    let mut cands: Vec<(u32, u32, u32, u32)> = Vec::new();
    let mut run_start = 0;
    'runs: while run_start < entries.len() {
        let t = entries[run_start].0;
        let mut run_end = run_start;
        while run_end < entries.len() && entries[run_end].0 == t {
            run_end += 1;
        }
        let run = &entries[run_start..run_end];
        let scan_len = run.len().min(RUN_CAP);
        if run.len() > RUN_CAP {
            certified = false;
        }
        for x in 0..scan_len {
            for y in (x + 1)..scan_len {
                let (_, gi, a) = run[x];
                let (_, gj, b) = run[y];
                if gi == gj {
                    continue;
                }
                let (gi, a, gj, b) = if gi < gj { (gi, a, gj, b) } else { (gj, b, gi, a) };
                let (i, j) = (gi as usize, gj as usize);
                let (a, b) = (a as usize, b as usize);
                // Tight at the tip: the arrival directions must differ.
                let arr_a = if a > 0 { rays[i].dirs[a - 1] } else { data.germs[i].along };
                let arr_b = if b > 0 { rays[j].dirs[b - 1] } else { data.germs[j].along };
                if arr_a == arr_b {
                    continue;
                }
                // The tails start at the legs' ends; first letters must agree.
                match (rays[i].dirs.get(a), rays[j].dirs.get(b)) {
                    (Some(x0), Some(y0)) if x0 == y0 => {}
                    (Some(_), Some(_)) => continue,
                    _ => {
                        certified = false;
                        continue;
                    }
                }
                cands.push((gi, a as u32, gj, b as u32));
                if cands.len() >= CAND_CAP {
                    certified = false;
                    break 'runs;
                }
            }
        }
        run_start = run_end;
    }
    cands.sort_unstable();

    let mut paths = Vec::new();
    let mut done: HashSet<(u32, u32)> = HashSet::new();
    let mut budget = COMPARE_BUDGET;
    for (gi, a, gj, b) in cands {
        // A germ pair carries at most one indivisible path.
        if done.contains(&(gi, gj)) {
            continue;
        }
        let (i, j) = (gi as usize, gj as usize);
        let (a, b) = (a as usize, b as usize);
        let t = cums[i][a] - a;
        // Certify: the two tails must agree letter for letter.
        let (left, right) = rays.split_at_mut(j);
        let ri = &mut left[i];
        let rj = &mut right[0];
        let mut ok = true;
        let mut capped_here = false;
        for s in 0..t {
            if budget == 0 {
                capped_here = true;
                break;
            }
            budget -= 1;
            match (ri.at(g, a + s), rj.at(g, b + s)) {
                (Some(x), Some(y)) => {
                    if x != y {
                        ok = false;
                        break;
                    }
                }
                _ => {
                    capped_here = true;
                    break;
                }
            }
        }
        if capped_here {
            certified = false;
            continue;
        }
        if ok {
            paths.push(NielsenPath {
                germ_a: i,
                germ_b: j,
                leg_a: ri.dirs[..a].to_vec(),
                leg_b: rj.dirs[..b].to_vec(),
                tail_len: t,
            });
            done.insert((gi, gj));
        }
    }
    Ok(InpSearch {
        paths,
        certified,
        leg_bound,
    })
}

// ---------------------------------------------------------------------------
// Classes and the index report
// ---------------------------------------------------------------------------

/// A Nielsen class of fixed points with its index data.
#[derive(Clone, Debug)]
pub struct FixedPointClass {
    /// Twist of the class lift against the reference lift of `f^k`, as an
    /// element of F_N (canonical up to the global marking conjugator).
    pub twist: ReducedWord,
    /// Number of attracting boundary points modulo the fixed subgroup.
    pub att_count: usize,
    /// Rank of the fixed subgroup of the class lift.
    pub fix_rank: usize,
    /// Twice the index: `att + 2·rank − 2`.
    pub double_index: i64,
}

impl FixedPointClass {
    /// The index `att/2 + rank − 1` of the class.
    pub fn index_value(&self) -> f64 {
        self.double_index as f64 / 2.0
    }
}

/// Agreement state between a train-track index report and the oracle.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum OracleAgreement {
    /// Totals and the class multiset agree.
    Agree,
    /// A discrepancy was found.
    Disagree,
    /// No oracle run was attached.
    OracleSkipped,
}

/// The index report of an outer automorphism at its rotationless power.
#[derive(Clone, Debug)]
pub struct IndexReport {
    /// The rotationless exponent used.
    pub k: u32,
    /// All Nielsen classes (including index-zero ones).
    pub classes: Vec<FixedPointClass>,
    /// Twice the index of the outer class: `Σ max(0, double_index)`.
    pub double_total: i64,
    /// Whether every budgeted search provably completed.
    pub complete: bool,
    /// Agreement with the boundary oracle, if one was attached.
    pub oracle_agreement: OracleAgreement,
    /// Human-readable notes about budget caps and adopted fallbacks.
    pub caveats: Vec<String>,
}

impl IndexReport {
    /// The index as a rational value `double_total / 2`.
    pub fn total(&self) -> f64 {
        self.double_total as f64 / 2.0
    }

    /// The classes with positive index.
    pub fn essential(&self) -> Vec<&FixedPointClass> {
        self.classes.iter().filter(|c| c.double_index > 0).collect()
    }
}

/// Union-find on `n` elements.
struct UnionFind {
    parent: Vec<usize>,
}

impl UnionFind {
    fn new(n: usize) -> UnionFind {
        UnionFind {
            parent: (0..n).collect(),
        }
    }
    fn find(&mut self, x: usize) -> usize {
        if self.parent[x] != x {
            let root = self.find(self.parent[x]);
            self.parent[x] = root;
        }
        self.parent[x]
    }
    fn union(&mut self, a: usize, b: usize) {
        let ra = self.find(a);
        let rb = self.find(b);
        if ra != rb {
            self.parent[ra] = rb;
        }
    }
}

/// The index report computed from a train track representative.
pub fn index_report_from_tt(tt: &TrainTrackMap) -> Result<IndexReport> {
    let ps = periodic_structure(tt);
    index_report_at(tt, ps.rotationless_exponent)
}

/// The index report at an explicit power (which should be a multiple of the
/// rotationless exponent; the index total is stable under taking further
/// powers, new periodic orbits only ever add index-zero classes).
pub fn index_report_at(tt: &TrainTrackMap, k: u32) -> Result<IndexReport> {
    let g = PowerMap::build(&tt.map, k)?;
    let data = enumerate_fixed(tt, &g);
    let inps = search_inps(tt, &g, &data)?;
    assemble_report(tt, &g, &data, &inps)
}

/// The index report of an automorphism: train track representative first,
/// then fixed points, Nielsen paths and classes of its rotationless power.
pub fn index_report(phi: &Automorphism) -> Result<IndexReport> {
    let tt = bestvina_handel(phi)?;
    index_report_from_tt(&tt)
}

fn assemble_report(
    tt: &TrainTrackMap,
    g: &PowerMap,
    data: &FixedPointData,
    inps: &InpSearch,
) -> Result<IndexReport> {
    let rank = tt.map.graph.rank() as i64;
    let mut site_uf = UnionFind::new(data.sites.len());
    for p in &inps.paths {
        site_uf.union(data.germs[p.germ_a].site, data.germs[p.germ_b].site);
    }
    // Group sites, germs and paths by class.
    let mut class_sites: HashMap<usize, Vec<usize>> = HashMap::new();
    for s in 0..data.sites.len() {
        let root = site_uf.find(s);
        class_sites.entry(root).or_default().push(s);
    }
    let mut class_inp_count: HashMap<usize, usize> = HashMap::new();
    for p in &inps.paths {
        let root = site_uf.find(data.germs[p.germ_a].site);
        *class_inp_count.entry(root).or_default() += 1;
    }
    // Attracting points per class: germs modulo identification along
    // Nielsen paths (two germs joined by a path share their eigenray tail,
    // hence their boundary point).
    let mut germ_uf = UnionFind::new(data.germs.len());
    for p in &inps.paths {
        germ_uf.union(p.germ_a, p.germ_b);
    }
    let mut class_att: HashMap<usize, usize> = HashMap::new();
    let mut seen_germ_roots: HashMap<usize, ()> = HashMap::new();
    for gi in 0..data.germs.len() {
        let groot = germ_uf.find(gi);
        if seen_germ_roots.insert(groot, ()).is_none() {
            let croot = site_uf.find(data.germs[gi].site);
            *class_att.entry(croot).or_default() += 1;
        }
    }

    let chart = tt.map.marking_chart()?;
    let v0 = tt.map.graph.basepoint();
    let gamma0 = chart.tree_path(&tt.map.graph, g.vertex_images[v0]);

    let mut classes = Vec::new();
    let mut double_total: i64 = 0;
    let mut roots: Vec<usize> = class_sites.keys().copied().collect();
    roots.sort();
    for root in roots {
        let sites = &class_sites[&root];
        let n_inps = class_inp_count.get(&root).copied().unwrap_or(0);
        let att = class_att.get(&root).copied().unwrap_or(0);
        let fix_rank = n_inps + 1 - sites.len();
        if n_inps + 1 < sites.len() {
            return Err(Error::Internal(
                "Nielsen class with fewer paths than needed to connect it".into(),
            ));
        }
        if fix_rank > 1 {
            return Err(Error::NotIrreducible(format!(
                "a power fixes a subgroup of rank {}; the outer class is not fully irreducible",
                fix_rank
            )));
        }
        let rep = *sites.iter().min().expect("nonempty class");
        let twist = site_twist(tt, g, &chart, &gamma0, &data.sites[rep]);
        let double_index = att as i64 + 2 * fix_rank as i64 - 2;
        if double_index > 0 {
            double_total += double_index;
        }
        classes.push(FixedPointClass {
            twist,
            att_count: att,
            fix_rank,
            double_index,
        });
    }
    classes.sort_by(|a, b| {
        b.double_index
            .cmp(&a.double_index)
            .then(b.att_count.cmp(&a.att_count))
            .then(a.twist.shortlex_cmp(&b.twist))
    });
    if double_total > 2 * rank - 2 {
        return Err(Error::Internal(format!(
            "index total {}/2 exceeds the bound {}·2/2 − 1",
            double_total, rank
        )));
    }
    let mut caveats = Vec::new();
    if !inps.certified {
        caveats.push(format!(
            "Nielsen path search was truncated (leg bound {}, cap {}); \
             indices are a lower-confidence estimate",
            inps.leg_bound, LEG_SCAN_CAP
        ));
    }
    Ok(IndexReport {
        k: g.k,
        classes,
        double_total,
        complete: inps.certified,
        oracle_agreement: OracleAgreement::OracleSkipped,
        caveats,
    })
}

/// The twist of the class of a fixed point: the word of the loop
/// `γ_x · reverse(γ_0)`, where `γ_x` closes the basepoint into `f^k(*)`
/// through `x` and `γ_0` is the tree closure.
fn site_twist(
    tt: &TrainTrackMap,
    g: &PowerMap,
    chart: &crate::graph::MarkingChart,
    gamma0: &Path,
    site: &FixedPointSite,
) -> ReducedWord {
    let graph = &tt.map.graph;
    let gamma_x = match site {
        FixedPointSite::Vertex(v) => {
            let t = chart.tree_path(graph, *v);
            let gt = g.map_path_tight(&t);
            t.concat(&gt.reversed())
        }
        FixedPointSite::Interior { edge, crossing, .. } => {
            let (a, _) = graph.edge(*edge);
            let t = chart.tree_path(graph, a);
            let p = g.images[*edge].slice(0..*crossing);
            let gt = g.map_path_tight(&t);
            t.concat(&p.reversed()).concat(&gt.reversed())
        }
    };
    let loop_path = gamma_x.concat(&gamma0.reversed()).tightened();
    chart.word_of_loop(&tt.map, &loop_path)
}

// ---------------------------------------------------------------------------
// Boundary oracle
// ---------------------------------------------------------------------------

/// Letter-operation budget for one oracle run.
const ORACLE_OP_BUDGET: u64 = 150_000_000;
/// Cap on the number of twist words enumerated.
const ORACLE_BALL_CAP: usize = 30_000;
/// Iteration cap per seed.
const ORACLE_ITER_CAP: usize = 48;

/// All reduced words of length ≤ radius, in shortlex order.
fn word_ball(rank: u16, radius: usize) -> Vec<ReducedWord> {
    let mut out = vec![ReducedWord::empty()];
    let mut frontier = vec![ReducedWord::empty()];
    for _ in 0..radius {
        let mut next = Vec::new();
        for w in &frontier {
            for i in 0..2 * rank {
                let l = Letter::from_index(i as usize);
                if w.last() == Some(l.inverse()) {
                    continue;
                }
                let mut v = w.clone();
                v.push(l);
                next.push(v);
            }
        }
        out.extend(next.iter().cloned());
        frontier = next;
    }
    out
}

/// Size of the ball of radius `r` in F_rank.
fn ball_size(rank: usize, r: usize) -> usize {
    let mut total = 1usize;
    let mut layer = 1usize;
    for i in 0..r {
        layer = if i == 0 {
            2 * rank
        } else {
            layer.saturating_mul(2 * rank - 1)
        };
        total = total.saturating_add(layer);
    }
    total
}

/// Outcome of iterating one seed under a lift.
enum SeedOutcome {
    /// Converged to an attracting boundary point with this signature prefix.
    Attracting(ReducedWord),
    /// The iteration became exactly constant at this nontrivial word.
    FixedWord(ReducedWord),
    /// No convergence detected (finite orbit, stall, or trivial).
    Inconclusive,
    /// The letter budget ran out first.
    Budget,
}

/// Iterate `psi` on `seed`, tracking a truncated prefix, until the first
/// `depth` letters stabilize.  `slack` must dominate the cancellation bound
/// of `psi` so that truncation never corrupts the reported prefix.
fn stable_ray(
    psi: &Automorphism,
    seed: &ReducedWord,
    depth: usize,
    slack: usize,
    ops: &mut u64,
) -> SeedOutcome {
    let window = depth + slack + 8;
    let mut w = seed.clone();
    let mut valid = w.len();
    let mut stall_rounds = 0usize;
    for _ in 0..ORACLE_ITER_CAP {
        let cost = (w.len() as u64 + 8) * (psi.max_image_len() as u64 + 1);
        if *ops < cost {
            return SeedOutcome::Budget;
        }
        *ops -= cost;
        let img = psi.apply(&w);
        // If the word is untruncated and exactly fixed, report it.
        if valid == w.len() && img == w {
            return if w.is_empty() {
                SeedOutcome::Inconclusive
            } else {
                SeedOutcome::FixedWord(w)
            };
        }
        // How much of img is a trustworthy prefix of psi(full word):
        // cancellation can eat at most `slack` letters at the junction with
        // the discarded suffix.
        let img_valid = if valid == w.len() {
            img.len()
        } else {
            img.len().saturating_sub(slack)
        };
        let agree = w.common_prefix_len(&img);
        if agree >= depth && valid >= depth && img_valid >= depth {
            return SeedOutcome::Attracting(img.prefix(depth));
        }
        if img_valid <= valid && img.len() <= w.len() {
            stall_rounds += 1;
            if stall_rounds > 8 {
                return SeedOutcome::Inconclusive;
            }
        } else {
            stall_rounds = 0;
        }
        if img.len() > window {
            w = img.prefix(window);
            valid = img_valid.min(window);
        } else {
            w = img;
            valid = img_valid.min(w.len());
        }
        if valid == 0 {
            return SeedOutcome::Inconclusive;
        }
    }
    SeedOutcome::Inconclusive
}

/// Per-lift fixed data found by the oracle.
struct LiftData {
    att_sigs: Vec<ReducedWord>,
    fix_root: Option<ReducedWord>,
}

/// Collect attracting signatures and a fixed-subgroup generator for the lift
/// `psi`, iterating the given seeds.
fn probe_lift(
    psi: &Automorphism,
    seeds: &[ReducedWord],
    depth: usize,
    deep: bool,
    ops: &mut u64,
) -> Result<(LiftData, bool)> {
    let slack = psi.bounded_cancellation() + 4;
    let mut sigs: Vec<ReducedWord> = Vec::new();
    let mut fixed_words: Vec<ReducedWord> = Vec::new();
    let mut clean = true;
    for seed in seeds {
        match stable_ray(psi, seed, depth, slack, ops) {
            SeedOutcome::Attracting(sig) => {
                if !sigs.contains(&sig) {
                    sigs.push(sig);
                }
            }
            SeedOutcome::FixedWord(w) => fixed_words.push(w),
            SeedOutcome::Inconclusive => {}
            SeedOutcome::Budget => clean = false,
        }
    }
    if deep {
        // Short exhaustive scan for fixed words.
        for w in word_ball(psi.rank(), 4) {
            if w.is_empty() {
                continue;
            }
            let cost = (w.len() as u64 + 1) * (psi.max_image_len() as u64 + 1);
            if *ops < cost {
                clean = false;
                break;
            }
            *ops -= cost;
            if psi.apply(&w) == w {
                fixed_words.push(w);
            }
        }
        // Fixed words from signature alignment: if two signatures differ by
        // translation by a fixed element, a short prefix-quotient exposes it.
        let align_cap = 12usize.min(depth / 2);
        'align: for x in 0..sigs.len() {
            for y in 0..sigs.len() {
                if x == y {
                    continue;
                }
                for m in 0..=align_cap {
                    for m2 in 0..=align_cap {
                        let w = sigs[y].prefix(m2).concat(&sigs[x].prefix(m).inverse());
                        if w.is_empty() || w.len() > 2 * align_cap {
                            continue;
                        }
                        let cost = (w.len() as u64 + 1) * (psi.max_image_len() as u64 + 1);
                        if *ops < cost {
                            clean = false;
                            break 'align;
                        }
                        *ops -= cost;
                        if psi.apply(&w) == w {
                            fixed_words.push(w);
                        }
                    }
                }
            }
        }
    }
    // Reduce fixed words to primitive roots and check independence.
    let mut roots: Vec<ReducedWord> = Vec::new();
    for w in &fixed_words {
        let (root, _) = w.primitive_root();
        let candidate = if psi.apply(&root) == root {
            root
        } else {
            w.clone()
        };
        if !roots.contains(&candidate) && !roots.contains(&candidate.inverse()) {
            roots.push(candidate);
        }
    }
    if roots.len() > 1 {
        // Two independent fixed roots mean a fixed subgroup of rank ≥ 2.
        let independent = roots.windows(2).any(|pair| {
            let (r1, r2) = (&pair[0], &pair[1]);
            r1.concat(r2) != r2.concat(r1)
        });
        if independent {
            return Err(Error::NotIrreducible(
                "a lift fixes a subgroup of rank ≥ 2; the outer class is not fully irreducible"
                    .into(),
            ));
        }
        roots.truncate(1);
    }
    let fix_root = roots.into_iter().next();
    // Collapse signatures along the fixed-root orbit.
    let att_sigs = match &fix_root {
        None => sigs,
        Some(c) => {
            let mut reps: Vec<ReducedWord> = Vec::new();
            'next_sig: for sig in &sigs {
                let max_m = (depth / c.len().max(1)).min(8) as i64;
                for rep in &reps {
                    for m in -max_m..=max_m {
                        let translated = c.pow(m).concat(sig);
                        let keep = depth.saturating_sub((c.len() as i64 * m.abs()) as usize + 4);
                        if keep >= 16
                            && translated.prefix(keep).letters() == rep.prefix(keep).letters()
                        {
                            continue 'next_sig;
                        }
                    }
                }
                reps.push(sig.clone());
            }
            reps
        }
    };
    Ok((
        LiftData {
            att_sigs,
            fix_root,
        },
        clean,
    ))
}

/// Independent index computation from boundary dynamics: enumerate twisted
/// lifts `i_u ∘ φ^k` over a ball of twist words, iterate each on short seeds
/// to find attracting boundary points and fixed words, merge lifts that are
/// isogredient (certified by an exact twisted-conjugacy equation), and sum
/// the positive class indices.  No train-track data enters the counts; the
/// train track representative is used only to pick the rotationless power.
pub fn boundary_oracle(
    phi: &Automorphism,
    twist_bound: usize,
    depth: usize,
) -> Result<IndexReport> {
    if phi.is_identity() {
        return Err(Error::NotIrreducible(
            "the identity fixes all of F_N; no isolated boundary dynamics".into(),
        ));
    }
    let tt = bestvina_handel(phi)?;
    let k = periodic_structure(&tt).rotationless_exponent;
    let psi0 = phi.pow(k);
    if psi0.is_identity() {
        return Err(Error::NotIrreducible(
            "a power of the map is the identity; its fixed subgroup is all of F_N".into(),
        ));
    }
    let rank = phi.rank();
    let depth = depth.max(32);
    let mut caveats = Vec::new();
    let mut complete = true;

    let mut radius = twist_bound;
    while radius > 0 && ball_size(rank as usize, radius) > ORACLE_BALL_CAP {
        radius -= 1;
    }
    if radius < twist_bound {
        caveats.push(format!(
            "twist ball reduced from radius {} to {} ({} words) to fit the enumeration budget",
            twist_bound,
            radius,
            ball_size(rank as usize, radius)
        ));
        complete = false;
    }
    let ball = word_ball(rank, radius);

    let letter_seeds: Vec<ReducedWord> = (0..2 * rank as usize)
        .map(|i| ReducedWord::letter(Letter::from_index(i)))
        .collect();
    let pair_seeds: Vec<ReducedWord> = word_ball(rank, 2)
        .into_iter()
        .filter(|w| !w.is_empty())
        .collect();

    let mut ops: u64 = ORACLE_OP_BUDGET;
    struct Candidate {
        u: ReducedWord,
        data: LiftData,
    }
    let mut candidates: Vec<Candidate> = Vec::new();
    let mut scanned_all = true;
    for u in &ball {
        if ops == 0 {
            scanned_all = false;
            break;
        }
        let psi = psi0.inner_twist(u);
        let (quick, clean) = probe_lift(&psi, &letter_seeds, depth, false, &mut ops)?;
        if !clean {
            complete = false;
        }
        let interesting = quick.att_sigs.len() >= 2 || quick.fix_root.is_some();
        if !interesting {
            continue;
        }
        let (full, clean) = probe_lift(&psi, &pair_seeds, depth, true, &mut ops)?;
        if !clean {
            complete = false;
        }
        let att = full.att_sigs.len();
        let fix = full.fix_root.is_some() as usize;
        if att as i64 + 2 * fix as i64 - 2 > 0 {
            candidates.push(Candidate { u: u.clone(), data: full });
        }
    }
    if !scanned_all {
        caveats.push("oracle stopped early: letter-operation budget exhausted".into());
        complete = false;
    }

    // Merge isogredient lifts: ψ_u and ψ_{u'} are isogredient exactly when
    // u' = w·u·ψ0(w)⁻¹ for some w, and candidate w's come from aligning
    // attracting signatures of the two lifts.
    let n = candidates.len();
    let mut uf = UnionFind::new(n);
    let align_cap = 12usize.min(depth / 2);
    for i in 0..n {
        for j in (i + 1)..n {
            if uf.find(i) == uf.find(j) {
                continue;
            }
            let mut joined = false;
            'outer: for x in &candidates[i].data.att_sigs {
                for y in &candidates[j].data.att_sigs {
                    for m in 0..=align_cap {
                        for m2 in 0..=align_cap {
                            let w = y.prefix(m2).concat(&x.prefix(m).inverse());
                            let rhs = w
                                .concat(&candidates[i].u)
                                .concat(&psi0.apply(&w).inverse());
                            if rhs == candidates[j].u {
                                joined = true;
                                break 'outer;
                            }
                        }
                    }
                }
            }
            if joined {
                uf.union(i, j);
            }
        }
    }
    let mut by_root: HashMap<usize, Vec<usize>> = HashMap::new();
    for i in 0..n {
        let root = uf.find(i);
        by_root.entry(root).or_default().push(i);
    }
    let mut classes = Vec::new();
    let mut double_total = 0i64;
    for (_, members) in by_root {
        // Use the best-sampled member as the class representative.
        let rep = members
            .iter()
            .copied()
            .max_by_key(|&i| {
                (
                    candidates[i].data.att_sigs.len(),
                    candidates[i].data.fix_root.is_some(),
                )
            })
            .expect("nonempty class");
        let twist = members
            .iter()
            .map(|&i| &candidates[i].u)
            .min_by(|a, b| a.shortlex_cmp(b))
            .expect("nonempty class")
            .clone();
        let att = candidates[rep].data.att_sigs.len();
        let fix_rank = candidates[rep].data.fix_root.is_some() as usize;
        let double_index = att as i64 + 2 * fix_rank as i64 - 2;
        double_total += double_index.max(0);
        classes.push(FixedPointClass {
            twist,
            att_count: att,
            fix_rank,
            double_index,
        });
    }
    classes.sort_by(|a, b| {
        b.double_index
            .cmp(&a.double_index)
            .then(b.att_count.cmp(&a.att_count))
            .then(a.twist.shortlex_cmp(&b.twist))
    });
    if double_total > 2 * rank as i64 - 2 {
        return Err(Error::Internal(format!(
            "oracle index total {}/2 exceeds the bound {} − 1",
            double_total, rank
        )));
    }
    Ok(IndexReport {
        k,
        classes,
        double_total,
        complete,
        oracle_agreement: OracleAgreement::OracleSkipped,
        caveats,
    })
}

/// Compare a train-track index report against an oracle run and record the
/// agreement state on the report.
pub fn attach_oracle(report: &mut IndexReport, oracle: &IndexReport) {
    let ess = |r: &IndexReport| -> Vec<(usize, usize)> {
        let mut v: Vec<(usize, usize)> = r
            .classes
            .iter()
            .filter(|c| c.double_index > 0)
            .map(|c| (c.att_count, c.fix_rank))
            .collect();
        v.sort();
        v
    };
    let agree = report.double_total == oracle.double_total && ess(report) == ess(oracle);
    report.oracle_agreement = if agree {
        OracleAgreement::Agree
    } else {
        OracleAgreement::Disagree
    };
    if !agree && !oracle.complete {
        report.caveats.push(
            "oracle run was incomplete; the discrepancy may be a sampling artifact".into(),
        );
    }
    for c in &oracle.caveats {
        report.caveats.push(format!("oracle: {}", c));
    }
}

// ---------------------------------------------------------------------------

#[cfg(test)]
mod tests {
    use super::*;

    fn w(s: &str) -> ReducedWord {
        let mut out = ReducedWord::empty();
        for ch in s.chars() {
            if ch.is_ascii_lowercase() {
                out.push(Letter::positive(ch as u16 - b'a' as u16));
            } else if ch.is_ascii_uppercase() {
                out.push(Letter::negative(ch as u16 - b'A' as u16));
            }
        }
        out
    }

    fn aut(rank: u16, images: &[&str]) -> Automorphism {
        Automorphism::new(rank, images.iter().map(|s| w(s)).collect()).unwrap()
    }

    fn paper_phi() -> Automorphism {
        aut(3, &["b", "ac", "a"])
    }

    fn paper_phi_inv() -> Automorphism {
        aut(3, &["c", "a", "Cb"])
    }

    fn fib() -> Automorphism {
        aut(2, &["ab", "a"])
    }

    #[test]
    fn cycle_periods_functional_graph() {
        // 0 -> 1 -> 2 -> 1 (cycle of length 2), 3 -> 3 (fixed).
        let next = vec![1, 2, 1, 3];
        assert_eq!(cycle_periods(&next), vec![0, 2, 2, 1]);
    }

    #[test]
    fn periodic_structure_of_paper_map() {
        let tt = bestvina_handel(&paper_phi()).unwrap();
        let ps = periodic_structure(&tt);
        assert_eq!(ps.rotationless_exponent, 6);
        // Forward a and b swap; the three reversed directions cycle.
        let fwd_a = Dir::fwd(0).index();
        let fwd_c = Dir::fwd(2).index();
        assert_eq!(ps.direction_periods[fwd_a], 2);
        assert_eq!(ps.direction_periods[fwd_c], 0);
        assert_eq!(ps.direction_periods[Dir::rev(0).index()], 3);
    }

    #[test]
    fn periodic_structure_of_inverse() {
        let tt = bestvina_handel(&paper_phi_inv()).unwrap();
        let ps = periodic_structure(&tt);
        assert_eq!(ps.rotationless_exponent, 3);
    }

    #[test]
    fn fixed_points_of_paper_map() {
        let tt = bestvina_handel(&paper_phi()).unwrap();
        let data = fixed_points_of_map(&tt, 6).unwrap();
        let vertex_sites = data
            .sites
            .iter()
            .filter(|s| matches!(s, FixedPointSite::Vertex(_)))
            .count();
        assert_eq!(vertex_sites, 1);
        assert_eq!(data.germs.len(), 5);
    }

    #[test]
    fn no_nielsen_paths_for_paper_map() {
        let tt = bestvina_handel(&paper_phi()).unwrap();
        let inps = inp_search(&tt, 6).unwrap();
        assert!(inps.certified);
        assert!(inps.paths.is_empty());
    }

    #[test]
    fn index_of_paper_map() {
        let report = index_report(&paper_phi()).unwrap();
        assert_eq!(report.k, 6);
        assert_eq!(report.double_total, 3);
        assert!(report.complete);
        let ess = report.essential();
        assert_eq!(ess.len(), 1);
        assert_eq!(ess[0].att_count, 5);
        assert_eq!(ess[0].fix_rank, 0);
    }

    #[test]
    fn index_of_paper_inverse() {
        let report = index_report(&paper_phi_inv()).unwrap();
        assert_eq!(report.k, 3);
        assert_eq!(report.double_total, 1);
        let ess = report.essential();
        assert_eq!(ess.len(), 1);
        assert_eq!(ess[0].att_count, 3);
        assert_eq!(ess[0].fix_rank, 0);
    }

    #[test]
    fn fibonacci_nielsen_path_and_index() {
        let tt = bestvina_handel(&fib()).unwrap();
        let ps = periodic_structure(&tt);
        assert_eq!(ps.rotationless_exponent, 2);
        let inps = inp_search(&tt, 2).unwrap();
        assert!(inps.certified);
        assert_eq!(inps.paths.len(), 1);
        let report = index_report(&fib()).unwrap();
        assert_eq!(report.double_total, 2);
        let ess = report.essential();
        assert_eq!(ess.len(), 1);
        assert_eq!(ess[0].att_count, 2);
        assert_eq!(ess[0].fix_rank, 1);
    }

    #[test]
    fn index_is_stable_under_power_doubling() {
        let tt = bestvina_handel(&paper_phi()).unwrap();
        let r6 = index_report_at(&tt, 6).unwrap();
        let r12 = index_report_at(&tt, 12).unwrap();
        assert_eq!(r6.double_total, r12.double_total);
        let ess = |r: &IndexReport| -> Vec<(usize, usize)> {
            let mut v: Vec<(usize, usize)> = r
                .classes
                .iter()
                .filter(|c| c.double_index > 0)
                .map(|c| (c.att_count, c.fix_rank))
                .collect();
            v.sort();
            v
        };
        assert_eq!(ess(&r6), ess(&r12));
    }

    #[test]
    fn index_is_a_class_function() {
        let base = index_report(&paper_phi()).unwrap();
        let twisted = paper_phi().inner_twist(&w("a"));
        let report = index_report(&twisted).unwrap();
        assert_eq!(report.double_total, base.double_total);
    }

    #[test]
    fn ball_enumeration_counts() {
        assert_eq!(word_ball(2, 0).len(), 1);
        assert_eq!(word_ball(2, 1).len(), 5);
        assert_eq!(word_ball(2, 2).len(), 17);
        assert_eq!(ball_size(2, 2), 17);
        assert_eq!(ball_size(3, 1), 7);
    }

    #[test]
    fn oracle_matches_fibonacci_index() {
        let mut report = index_report(&fib()).unwrap();
        let oracle = boundary_oracle(&fib(), 8, 64).unwrap();
        assert_eq!(oracle.double_total, 2);
        let ess = oracle.essential();
        assert_eq!(ess.len(), 1);
        assert_eq!(ess[0].att_count, 2);
        assert_eq!(ess[0].fix_rank, 1);
        attach_oracle(&mut report, &oracle);
        assert_eq!(report.oracle_agreement, OracleAgreement::Agree);
    }

    #[test]
    fn oracle_matches_paper_index() {
        let mut report = index_report(&paper_phi()).unwrap();
        let oracle = boundary_oracle(&paper_phi(), 6, 64).unwrap();
        assert_eq!(oracle.double_total, 3);
        let ess = oracle.essential();
        assert_eq!(ess.len(), 1);
        assert_eq!(ess[0].att_count, 5);
        assert_eq!(ess[0].fix_rank, 0);
        attach_oracle(&mut report, &oracle);
        assert_eq!(report.oracle_agreement, OracleAgreement::Agree);
    }

    #[test]
    fn oracle_matches_paper_inverse_index() {
        let mut report = index_report(&paper_phi_inv()).unwrap();
        let oracle = boundary_oracle(&paper_phi_inv(), 6, 64).unwrap();
        assert_eq!(oracle.double_total, 1);
        attach_oracle(&mut report, &oracle);
        assert_eq!(report.oracle_agreement, OracleAgreement::Agree);
    }

    #[test]
    fn oracle_refuses_identity() {
        let err = boundary_oracle(&Automorphism::identity(2), 4, 32).unwrap_err();
        assert!(matches!(err, Error::NotIrreducible(_)));
    }

    #[test]
    fn index_respects_global_bound() {
        for phi in [paper_phi(), paper_phi_inv(), fib()] {
            let report = index_report(&phi).unwrap();
            let n = phi.rank() as i64;
            assert!(report.double_total > 0);
            assert!(report.double_total <= 2 * n - 2);
        }
    }
}
