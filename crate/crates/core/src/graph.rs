//! Marked graphs, edge paths, and the homotopy moves used by the folding
//! algorithm.
//!
//! A [`MarkedGraph`] is a finite connected graph with a basepoint and a
//! marking: one loop per free group generator, identifying the fundamental
//! group with F_N. A [`GraphSelfMap`] is a simplicial-ish self map (vertices
//! to vertices, edges to edge paths) together with its graph. All moves
//! (tightening, subdivision, folds, forest collapses, valence-one and
//! valence-two removal) produce a new map and keep the marking coherent, so
//! the induced outer automorphism can be read off and verified at any time.

use std::collections::{HashMap, HashSet, VecDeque};
use std::fmt;

use crate::error::{Error, Result};
use crate::words::{equal_in_out, Automorphism, Letter, OuterEquality, ReducedWord};

/// An oriented edge; doubles as a *direction* at its initial vertex.
#[derive(Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Debug)]
pub struct Dir {
    edge: u32,
    rev: bool,
}

impl Dir {
    pub fn fwd(edge: usize) -> Dir {
        Dir {
            edge: edge as u32,
            rev: false,
        }
    }

    pub fn rev(edge: usize) -> Dir {
        Dir {
            edge: edge as u32,
            rev: true,
        }
    }

    pub fn edge(self) -> usize {
        self.edge as usize
    }

    pub fn is_rev(self) -> bool {
        self.rev
    }

    pub fn reversed(self) -> Dir {
        Dir {
            edge: self.edge,
            rev: !self.rev,
        }
    }

    /// Dense index in `0..2*edges`.
    pub fn index(self) -> usize {
        2 * self.edge as usize + self.rev as usize
    }

    pub fn from_index(i: usize) -> Dir {
        Dir {
            edge: (i / 2) as u32,
            rev: i % 2 == 1,
        }
    }

    pub fn name(self) -> String {
        if self.rev {
            format!("e{}'", self.edge)
        } else {
            format!("e{}", self.edge)
        }
    }
}

impl fmt::Display for Dir {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.name())
    }
}

/// An edge path (not automatically tightened).
#[derive(Clone, PartialEq, Eq, Hash, Debug, Default)]
pub struct Path {
    dirs: Vec<Dir>,
}

impl Path {
    pub fn empty() -> Path {
        Path::default()
    }

    pub fn single(d: Dir) -> Path {
        Path { dirs: vec![d] }
    }

    pub fn from_dirs(dirs: Vec<Dir>) -> Path {
        Path { dirs }
    }

    pub fn dirs(&self) -> &[Dir] {
        &self.dirs
    }

    pub fn len(&self) -> usize {
        self.dirs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.dirs.is_empty()
    }

    pub fn first(&self) -> Option<Dir> {
        self.dirs.first().copied()
    }

    pub fn last(&self) -> Option<Dir> {
        self.dirs.last().copied()
    }

    pub fn reversed(&self) -> Path {
        Path {
            dirs: self.dirs.iter().rev().map(|d| d.reversed()).collect(),
        }
    }

    pub fn push_tight(&mut self, d: Dir) {
        if self.dirs.last() == Some(&d.reversed()) {
            self.dirs.pop();
        } else {
            self.dirs.push(d);
        }
    }

    /// Freely tighten (cancel adjacent `d d̄` pairs).
    pub fn tightened(&self) -> Path {
        let mut out = Path::empty();
        for &d in &self.dirs {
            out.push_tight(d);
        }
        out
    }

    pub fn concat(&self, other: &Path) -> Path {
        let mut dirs = self.dirs.clone();
        dirs.extend_from_slice(&other.dirs);
        Path { dirs }
    }

    pub fn concat_tight(&self, other: &Path) -> Path {
        let mut out = self.clone();
        for &d in &other.dirs {
            out.push_tight(d);
        }
        out
    }

    pub fn is_tight(&self) -> bool {
        self.dirs
            .windows(2)
            .all(|w| w[1] != w[0].reversed())
    }

    pub fn slice(&self, range: std::ops::Range<usize>) -> Path {
        Path {
            dirs: self.dirs[range].to_vec(),
        }
    }
}

impl fmt::Display for Path {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.dirs.is_empty() {
            return write!(f, ".");
        }
        let mut first = true;
        for d in &self.dirs {
            if !first {
                write!(f, " ")?;
            }
            first = false;
            write!(f, "{}", d)?;
        }
        Ok(())
    }
}

/// A finite connected marked graph.
#[derive(Clone, Debug)]
pub struct MarkedGraph {
    vertex_count: usize,
    /// `edges[e] = (init, term)` of the forward orientation.
    edges: Vec<(usize, usize)>,
    basepoint: usize,
    /// One loop at the basepoint per free group generator.
    marking: Vec<Path>,
    rank: u16,
}

impl MarkedGraph {
    pub fn rose(rank: u16) -> MarkedGraph {
        MarkedGraph {
            vertex_count: 1,
            edges: (0..rank).map(|_| (0, 0)).collect(),
            basepoint: 0,
            marking: (0..rank as usize).map(|e| Path::single(Dir::fwd(e))).collect(),
            rank,
        }
    }

    pub fn vertex_count(&self) -> usize {
        self.vertex_count
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    pub fn edge(&self, e: usize) -> (usize, usize) {
        self.edges[e]
    }

    pub fn basepoint(&self) -> usize {
        self.basepoint
    }

    pub fn marking(&self) -> &[Path] {
        &self.marking
    }

    pub fn rank(&self) -> u16 {
        self.rank
    }

    pub fn init_of(&self, d: Dir) -> usize {
        let (a, b) = self.edges[d.edge()];
        if d.is_rev() {
            b
        } else {
            a
        }
    }

    pub fn term_of(&self, d: Dir) -> usize {
        self.init_of(d.reversed())
    }

    /// All directions based at `v` (loops contribute both orientations).
    pub fn directions_at(&self, v: usize) -> Vec<Dir> {
        let mut out = Vec::new();
        for e in 0..self.edges.len() {
            if self.edges[e].0 == v {
                out.push(Dir::fwd(e));
            }
            if self.edges[e].1 == v {
                out.push(Dir::rev(e));
            }
        }
        out
    }

    pub fn all_directions(&self) -> Vec<Dir> {
        (0..2 * self.edges.len()).map(Dir::from_index).collect()
    }

    pub fn valence(&self, v: usize) -> usize {
        self.directions_at(v).len()
    }

    pub fn path_init(&self, p: &Path) -> Option<usize> {
        p.first().map(|d| self.init_of(d))
    }

    pub fn path_term(&self, p: &Path) -> Option<usize> {
        p.last().map(|d| self.term_of(d))
    }

    /// Check that consecutive directions are endpoint-compatible.
    pub fn is_edge_path(&self, p: &Path) -> bool {
        p.dirs()
            .windows(2)
            .all(|w| self.term_of(w[0]) == self.init_of(w[1]))
    }

    pub fn is_connected(&self) -> bool {
        if self.vertex_count == 0 {
            return false;
        }
        let mut seen = vec![false; self.vertex_count];
        let mut queue = VecDeque::from([0usize]);
        seen[0] = true;
        while let Some(v) = queue.pop_front() {
            for d in self.directions_at(v) {
                let w = self.term_of(d);
                if !seen[w] {
                    seen[w] = true;
                    queue.push_back(w);
                }
            }
        }
        seen.into_iter().all(|s| s)
    }

    /// First Betti number (must equal the marking rank for a valid marking).
    pub fn graph_rank(&self) -> usize {
        self.edges.len() + 1 - self.vertex_count
    }

    pub fn validate(&self) -> Result<()> {
        for &(a, b) in &self.edges {
            if a >= self.vertex_count || b >= self.vertex_count {
                return Err(Error::Internal("edge endpoint out of range".into()));
            }
        }
        if self.basepoint >= self.vertex_count {
            return Err(Error::Internal("basepoint out of range".into()));
        }
        if !self.is_connected() {
            return Err(Error::Internal("graph is disconnected".into()));
        }
        if self.marking.len() != self.rank as usize {
            return Err(Error::Internal("marking size != rank".into()));
        }
        if self.graph_rank() != self.rank as usize {
            return Err(Error::Internal(format!(
                "graph rank {} != marking rank {}",
                self.graph_rank(),
                self.rank
            )));
        }
        for m in &self.marking {
            if !self.is_edge_path(m) {
                return Err(Error::Internal("marking is not an edge path".into()));
            }
            if m.is_empty()
                || self.path_init(m) != Some(self.basepoint)
                || self.path_term(m) != Some(self.basepoint)
            {
                return Err(Error::Internal("marking is not a basepoint loop".into()));
            }
        }
        Ok(())
    }

    /// BFS spanning tree: `parent[v]` is the direction pointing from the
    /// parent towards `v` (None at the basepoint).
    fn spanning_tree(&self) -> Vec<Option<Dir>> {
        let mut parent: Vec<Option<Dir>> = vec![None; self.vertex_count];
        let mut seen = vec![false; self.vertex_count];
        seen[self.basepoint] = true;
        let mut queue = VecDeque::from([self.basepoint]);
        while let Some(v) = queue.pop_front() {
            for d in self.directions_at(v) {
                let w = self.term_of(d);
                if !seen[w] {
                    seen[w] = true;
                    parent[w] = Some(d);
                    queue.push_back(w);
                }
            }
        }
        parent
    }

    /// Tree path from the basepoint to `v`.
    fn tree_path_to(&self, parent: &[Option<Dir>], v: usize) -> Path {
        let mut dirs = Vec::new();
        let mut cur = v;
        while let Some(d) = parent[cur] {
            dirs.push(d);
            cur = self.init_of(d);
        }
        dirs.reverse();
        Path::from_dirs(dirs)
    }
}

/// A self map of a marked graph: vertices to vertices, edges to tight edge
/// paths respecting endpoints.
#[derive(Clone, Debug)]
pub struct GraphSelfMap {
    pub graph: MarkedGraph,
    vertex_images: Vec<usize>,
    edge_images: Vec<Path>,
}

impl GraphSelfMap {
    /// The obvious representative on the rose: one vertex, one loop per
    /// generator, edge images spelling the automorphism images.
    pub fn rose_map(phi: &Automorphism) -> GraphSelfMap {
        let graph = MarkedGraph::rose(phi.rank());
        let edge_images = phi
            .images()
            .iter()
            .map(|w| {
                Path::from_dirs(
                    w.letters()
                        .iter()
                        .map(|l| {
                            if l.is_inverse() {
                                Dir::rev(l.gen() as usize)
                            } else {
                                Dir::fwd(l.gen() as usize)
                            }
                        })
                        .collect(),
                )
            })
            .collect();
        GraphSelfMap {
            graph,
            vertex_images: vec![0],
            edge_images,
        }
    }

    pub fn vertex_image(&self, v: usize) -> usize {
        self.vertex_images[v]
    }

    pub fn edge_image(&self, e: usize) -> &Path {
        &self.edge_images[e]
    }

    /// Length of the longest edge image.
    pub fn max_edge_image_len(&self) -> usize {
        self.edge_images.iter().map(|p| p.len()).max().unwrap_or(0)
    }

    pub fn edge_images(&self) -> &[Path] {
        &self.edge_images
    }

    pub fn image_of_dir(&self, d: Dir) -> Path {
        if d.is_rev() {
            self.edge_images[d.edge()].reversed()
        } else {
            self.edge_images[d.edge()].clone()
        }
    }

    /// The derivative map on directions: the first direction of the image
    /// path (None if the edge image is trivial).
    pub fn dir_map(&self, d: Dir) -> Option<Dir> {
        let img = &self.edge_images[d.edge()];
        if d.is_rev() {
            img.last().map(|x| x.reversed())
        } else {
            img.first()
        }
    }

    /// Image of a path, freely tightened.
    pub fn map_path(&self, p: &Path) -> Path {
        let mut out = Path::empty();
        for &d in p.dirs() {
            let img = &self.edge_images[d.edge()];
            if d.is_rev() {
                for &x in img.dirs().iter().rev() {
                    out.push_tight(x.reversed());
                }
            } else {
                for &x in img.dirs() {
                    out.push_tight(x);
                }
            }
        }
        out
    }

    /// Image of a path without tightening.
    pub fn map_path_raw(&self, p: &Path) -> Path {
        let mut dirs = Vec::new();
        for &d in p.dirs() {
            let img = &self.edge_images[d.edge()];
            if d.is_rev() {
                dirs.extend(img.dirs().iter().rev().map(|x| x.reversed()));
            } else {
                dirs.extend_from_slice(img.dirs());
            }
        }
        Path::from_dirs(dirs)
    }

    pub fn validate(&self) -> Result<()> {
        self.graph.validate()?;
        if self.vertex_images.len() != self.graph.vertex_count() {
            return Err(Error::Internal("vertex image count mismatch".into()));
        }
        if self.edge_images.len() != self.graph.edge_count() {
            return Err(Error::Internal("edge image count mismatch".into()));
        }
        for &v in &self.vertex_images {
            if v >= self.graph.vertex_count() {
                return Err(Error::Internal("vertex image out of range".into()));
            }
        }
        for e in 0..self.graph.edge_count() {
            let img = &self.edge_images[e];
            if !self.graph.is_edge_path(img) {
                return Err(Error::Internal(format!(
                    "image of e{} is not an edge path",
                    e
                )));
            }
            let (a, b) = self.graph.edge(e);
            let fa = self.vertex_images[a];
            let fb = self.vertex_images[b];
            match (self.graph.path_init(img), self.graph.path_term(img)) {
                (Some(pi), Some(pt)) => {
                    if pi != fa || pt != fb {
                        return Err(Error::Internal(format!(
                            "image endpoints of e{} disagree with vertex images",
                            e
                        )));
                    }
                }
                _ => {
                    // Trivial image: endpoints must map to the same vertex.
                    if fa != fb {
                        return Err(Error::Internal(format!(
                            "trivial image of e{} with distinct endpoint images",
                            e
                        )));
                    }
                }
            }
        }
        Ok(())
    }

    // -- moves --------------------------------------------------------------

    /// Tighten all edge images.
    pub fn tighten_images(&self) -> GraphSelfMap {
        let mut out = self.clone();
        for img in &mut out.edge_images {
            *img = img.tightened();
        }
        out
    }

    /// Subdivide edge `e` after the first `k` image edges: replaces `e` by
    /// `e · e_new`, with `f(e)` the length-`k` prefix and `f(e_new)` the
    /// rest. Requires `1 <= k < |f(e)|`.
    pub fn subdivide(&self, e: usize, k: usize) -> Result<GraphSelfMap> {
        let old_img = self.edge_images[e].clone();
        if k == 0 || k >= old_img.len() {
            return Err(Error::Internal(format!(
                "subdivision position {} out of range for image length {}",
                k,
                old_img.len()
            )));
        }
        let mut out = self.clone();
        let new_vertex = out.graph.vertex_count;
        out.graph.vertex_count += 1;
        let (_, old_term) = out.graph.edges[e];
        let new_edge = out.graph.edges.len();
        // e now ends at the new vertex; e_new runs on to the old terminus.
        out.graph.edges[e].1 = new_vertex;
        out.graph.edges.push((new_vertex, old_term));
        // Rewrite every occurrence of e as e · e_new.
        let rewrite = |p: &Path| -> Path {
            let mut dirs = Vec::with_capacity(p.len() + 4);
            for &d in p.dirs() {
                if d.edge() == e {
                    if d.is_rev() {
                        dirs.push(Dir::rev(new_edge));
                        dirs.push(Dir::rev(e));
                    } else {
                        dirs.push(Dir::fwd(e));
                        dirs.push(Dir::fwd(new_edge));
                    }
                } else {
                    dirs.push(d);
                }
            }
            Path::from_dirs(dirs)
        };
        for img in &mut out.edge_images {
            *img = rewrite(img);
        }
        for m in &mut out.graph.marking {
            *m = rewrite(m);
        }
        // The image of the subdivided halves: prefix and suffix of the old
        // image, rewritten into the new graph.
        let prefix = rewrite(&old_img.slice(0..k));
        let suffix = rewrite(&old_img.slice(k..old_img.len()));
        // The subdivision point maps to the old-graph vertex ending the
        // prefix; vertex ids are unchanged, so this is directly valid.
        let mid_image = self.graph.path_term(&old_img.slice(0..k)).unwrap();
        out.edge_images[e] = prefix;
        out.edge_images.push(suffix);
        out.vertex_images.push(mid_image);
        Ok(out)
    }

    /// Fold two distinct directions with the same initial vertex, distinct
    /// underlying edges, and identical (nontrivial) images. The edge of `d2`
    /// is identified with the edge of `d1` (matching orientations of `d1`
    /// and `d2`), and their far endpoints merge.
    pub fn fold(&self, d1: Dir, d2: Dir) -> Result<GraphSelfMap> {
        if d1.edge() == d2.edge() {
            return Err(Error::Internal("fold of an edge with itself".into()));
        }
        if self.graph.init_of(d1) != self.graph.init_of(d2) {
            return Err(Error::Internal("fold of directions at distinct vertices".into()));
        }
        let i1 = self.image_of_dir(d1);
        let i2 = self.image_of_dir(d2);
        if i1 != i2 || i1.is_empty() {
            return Err(Error::Internal("fold requires equal nontrivial images".into()));
        }
        let e2 = d2.edge();
        let t1 = self.graph.term_of(d1);
        let t2 = self.graph.term_of(d2);
        if t1 == t2 {
            // Folding two whole edges with shared endpoints would kill an
            // essential loop; this cannot happen for a homotopy equivalence.
            return Err(Error::Internal(
                "fold of parallel edges would collapse an essential loop".into(),
            ));
        }
        let mut out = self.clone();

        // Replace occurrences of e2 by e1 with the orientation dictated by
        // d1 ~ d2.
        let replacement = |d: Dir| -> Dir {
            if d.edge() != e2 {
                d
            } else if d.is_rev() == d2.is_rev() {
                d1
            } else {
                d1.reversed()
            }
        };
        for img in &mut out.edge_images {
            *img = Path::from_dirs(img.dirs().iter().map(|&d| replacement(d)).collect());
        }
        for m in &mut out.graph.marking {
            *m = Path::from_dirs(m.dirs().iter().map(|&d| replacement(d)).collect());
        }

        // Drop edge e2.
        let edge_map: Vec<Option<usize>> = (0..out.graph.edges.len())
            .map(|e| {
                if e == e2 {
                    None
                } else if e > e2 {
                    Some(e - 1)
                } else {
                    Some(e)
                }
            })
            .collect();
        out.graph.edges.remove(e2);
        out.edge_images.remove(e2);
        let remap_dir = |d: Dir| Dir {
            edge: edge_map[d.edge()].expect("e2 already replaced") as u32,
            rev: d.rev,
        };
        for img in &mut out.edge_images {
            *img = Path::from_dirs(img.dirs().iter().map(|&d| remap_dir(d)).collect());
        }
        for m in &mut out.graph.marking {
            *m = Path::from_dirs(m.dirs().iter().map(|&d| remap_dir(d)).collect());
        }

        // Merge the far endpoints t1, t2 (if distinct).
        if t1 != t2 {
            if self.vertex_images[t1] != self.vertex_images[t2] {
                return Err(Error::Internal(
                    "fold endpoints have distinct images".into(),
                ));
            }
            let keep = t1.min(t2);
            let drop = t1.max(t2);
            let vmap = |v: usize| -> usize {
                if v == drop {
                    keep
                } else if v > drop {
                    v - 1
                } else {
                    v
                }
            };
            out.graph.vertex_count -= 1;
            for (a, b) in &mut out.graph.edges {
                *a = vmap(*a);
                *b = vmap(*b);
            }
            out.graph.basepoint = vmap(out.graph.basepoint);
            let imgs = std::mem::take(&mut out.vertex_images);
            let mut new_imgs = vec![usize::MAX; out.graph.vertex_count];
            for (v, fv) in imgs.into_iter().enumerate() {
                if v == drop {
                    continue;
                }
                new_imgs[vmap(v)] = vmap(fv);
            }
            // The dropped vertex's image coincides with the kept one's.
            out.vertex_images = new_imgs;
        }
        // Identification may create cancellations in paths.
        for img in &mut out.edge_images {
            *img = img.tightened();
        }
        for m in &mut out.graph.marking {
            *m = m.tightened();
        }
        Ok(out)
    }

    /// Fold an illegal turn `{d1, d2}`: both directions share their initial
    /// vertex and their images start with the same direction. The maximal
    /// initial segments of the two edges with a common image are identified.
    /// Handles partial folds (one image a prefix of the other), whole-edge
    /// folds, self-referential images, and the turn `{e, ē}` at a loop.
    pub fn fold_turn(&self, d1: Dir, d2: Dir) -> Result<GraphSelfMap> {
        if d1 == d2 {
            return Err(Error::Internal("fold of a degenerate turn".into()));
        }
        if self.graph.init_of(d1) != self.graph.init_of(d2) {
            return Err(Error::Internal(
                "fold of directions at distinct vertices".into(),
            ));
        }
        let w1 = self.image_of_dir(d1);
        let w2 = self.image_of_dir(d2);
        match (w1.first(), w2.first()) {
            (Some(x), Some(y)) if x == y => {}
            _ => {
                return Err(Error::Internal(
                    "fold requires images sharing a first edge".into(),
                ));
            }
        }
        let delta = w1.first().unwrap();

        if d1.edge() == d2.edge() {
            return self.fold_loop_turn(d1, &w1, delta);
        }
        if w1 == w2 {
            return self.fold(d1, d2);
        }
        // Maximal common prefix of the two images; at least the first edge.
        let c = w1
            .dirs()
            .iter()
            .zip(w2.dirs().iter())
            .take_while(|(x, y)| x == y)
            .count();
        if c == w1.len() {
            // w1 is a proper prefix of w2: fold the initial segment of d2's
            // edge onto the whole edge of d1.
            return self.fold_partial(d1, d2, &w2, c);
        }
        if c == w2.len() {
            return self.fold_partial(d2, d1, &w1, c);
        }
        self.fold_split(d1, d2, &w1, &w2, c)
    }

    /// Partial fold: `image(stem)` is the length-`c` proper prefix of
    /// `image(long) = wlong`. The initial segment of `long`'s edge folds onto
    /// the whole stem edge; the remainder becomes a fresh edge.
    fn fold_partial(&self, stem: Dir, long: Dir, wlong: &Path, c: usize) -> Result<GraphSelfMap> {
        let mut out = self.clone();
        let e_long = long.edge();
        let t_stem = self.graph.term_of(stem);
        let u_long = self.graph.term_of(long);
        let old_e = self.graph.edge_count();
        let sentinel = old_e; // temporary id for the remainder edge
        let new_edge = old_e - 1; // its id after removing e_long
        // Traversal along `long` becomes: stem, then the new remainder edge.
        let rewrite = |p: &Path| -> Path {
            let mut dirs = Vec::with_capacity(p.len() + 4);
            for &d in p.dirs() {
                if d.edge() == e_long {
                    if d == long {
                        dirs.push(stem);
                        dirs.push(Dir::fwd(sentinel));
                    } else {
                        dirs.push(Dir::rev(sentinel));
                        dirs.push(stem.reversed());
                    }
                } else {
                    dirs.push(d);
                }
            }
            Path::from_dirs(dirs)
        };
        // Map old edge ids to new ids (e_long removed, remainder appended).
        let emap: Vec<usize> = (0..old_e)
            .map(|e| if e > e_long { e - 1 } else { e })
            .collect();
        let finish = |p: Path| -> Path {
            Path::from_dirs(
                p.dirs()
                    .iter()
                    .map(|&d| {
                        if d.edge() == sentinel {
                            Dir {
                                edge: new_edge as u32,
                                rev: d.rev,
                            }
                        } else {
                            Dir {
                                edge: emap[d.edge()] as u32,
                                rev: d.rev,
                            }
                        }
                    })
                    .collect(),
            )
        };
        let rest = wlong.slice(c..wlong.len());
        let mut new_images: Vec<Path> = Vec::with_capacity(self.graph.edge_count());
        for e in 0..self.graph.edge_count() {
            if e != e_long {
                new_images.push(finish(rewrite(&self.edge_images[e])).tightened());
            }
        }
        new_images.push(finish(rewrite(&rest)).tightened());
        out.edge_images = new_images;
        out.graph.marking = self
            .graph
            .marking
            .iter()
            .map(|m| finish(rewrite(m)).tightened())
            .collect();
        out.graph.edges.remove(e_long);
        out.graph.edges.push((t_stem, u_long));
        Ok(out)
    }

    /// Split fold: both images properly extend their common prefix of length
    /// `c`. Both edges are subdivided and their first pieces identified into
    /// a fresh stem edge mapping to that prefix.
    fn fold_split(
        &self,
        d1: Dir,
        d2: Dir,
        w1: &Path,
        w2: &Path,
        c: usize,
    ) -> Result<GraphSelfMap> {
        let e1 = d1.edge();
        let e2 = d2.edge();
        let v = self.graph.init_of(d1);
        let u1 = self.graph.term_of(d1);
        let u2 = self.graph.term_of(d2);
        let old_e = self.graph.edge_count();
        // New layout: all edges except e1, e2 (ids compacted), then
        // s (stem), r1, r2.
        let mut emap: Vec<Option<usize>> = vec![None; old_e];
        let mut new_edges: Vec<(usize, usize)> = Vec::new();
        for e in 0..old_e {
            if e != e1 && e != e2 {
                emap[e] = Some(new_edges.len());
                new_edges.push(self.graph.edge(e));
            }
        }
        let new_vertex = self.graph.vertex_count();
        let s_id = new_edges.len();
        new_edges.push((v, new_vertex));
        let r1_id = new_edges.len();
        new_edges.push((new_vertex, u1));
        let r2_id = new_edges.len();
        new_edges.push((new_vertex, u2));
        let rewrite = |p: &Path| -> Path {
            let mut dirs = Vec::with_capacity(p.len() + 4);
            for &d in p.dirs() {
                if d.edge() == e1 {
                    if d == d1 {
                        dirs.push(Dir::fwd(s_id));
                        dirs.push(Dir::fwd(r1_id));
                    } else {
                        dirs.push(Dir::rev(r1_id));
                        dirs.push(Dir::rev(s_id));
                    }
                } else if d.edge() == e2 {
                    if d == d2 {
                        dirs.push(Dir::fwd(s_id));
                        dirs.push(Dir::fwd(r2_id));
                    } else {
                        dirs.push(Dir::rev(r2_id));
                        dirs.push(Dir::rev(s_id));
                    }
                } else {
                    dirs.push(Dir {
                        edge: emap[d.edge()].unwrap() as u32,
                        rev: d.rev,
                    });
                }
            }
            Path::from_dirs(dirs)
        };
        let mut new_images: Vec<Path> = Vec::with_capacity(new_edges.len());
        for e in 0..old_e {
            if e != e1 && e != e2 {
                new_images.push(rewrite(&self.edge_images[e]).tightened());
            }
        }
        new_images.push(rewrite(&w1.slice(0..c)).tightened()); // f(s)
        new_images.push(rewrite(&w1.slice(c..w1.len())).tightened()); // f(r1)
        new_images.push(rewrite(&w2.slice(c..w2.len())).tightened()); // f(r2)
        let mut vertex_images = self.vertex_images.clone();
        // The subdivision points map to the endpoint of the shared prefix.
        vertex_images.push(self.graph.path_term(&w1.slice(0..c)).unwrap());
        let out = GraphSelfMap {
            graph: MarkedGraph {
                vertex_count: new_vertex + 1,
                edges: new_edges,
                basepoint: self.graph.basepoint,
                marking: self
                    .graph
                    .marking
                    .iter()
                    .map(|m| rewrite(m).tightened())
                    .collect(),
                rank: self.graph.rank,
            },
            vertex_images,
            edge_images: new_images,
        };
        Ok(out)
    }

    /// Fold the turn `{e, ē}` at a loop edge: the loop subdivides into
    /// stem · middle · stem⁻¹ with the two stem copies identified.
    fn fold_loop_turn(&self, d: Dir, w: &Path, delta: Dir) -> Result<GraphSelfMap> {
        // Normalise to the forward orientation of the loop.
        let (e, w) = if d.is_rev() {
            (d.edge(), w.reversed())
        } else {
            (d.edge(), w.clone())
        };
        if w.len() < 3 {
            return Err(Error::Internal(
                "loop-turn fold needs an image of length at least three".into(),
            ));
        }
        if w.last() != Some(delta.reversed()) {
            return Err(Error::Internal(
                "loop-turn fold requires a symmetric image".into(),
            ));
        }
        let v = self.graph.edge(e).0;
        let old_e = self.graph.edge_count();
        let mut emap: Vec<Option<usize>> = vec![None; old_e];
        let mut new_edges: Vec<(usize, usize)> = Vec::new();
        for x in 0..old_e {
            if x != e {
                emap[x] = Some(new_edges.len());
                new_edges.push(self.graph.edge(x));
            }
        }
        let new_vertex = self.graph.vertex_count();
        let s_id = new_edges.len();
        new_edges.push((v, new_vertex));
        let m_id = new_edges.len();
        new_edges.push((new_vertex, new_vertex));
        let rewrite = |p: &Path| -> Path {
            let mut dirs = Vec::with_capacity(p.len() + 4);
            for &x in p.dirs() {
                if x.edge() == e {
                    if x.is_rev() {
                        dirs.push(Dir::fwd(s_id));
                        dirs.push(Dir::rev(m_id));
                        dirs.push(Dir::rev(s_id));
                    } else {
                        dirs.push(Dir::fwd(s_id));
                        dirs.push(Dir::fwd(m_id));
                        dirs.push(Dir::rev(s_id));
                    }
                } else {
                    dirs.push(Dir {
                        edge: emap[x.edge()].unwrap() as u32,
                        rev: x.rev,
                    });
                }
            }
            Path::from_dirs(dirs)
        };
        let mut new_images: Vec<Path> = Vec::with_capacity(new_edges.len());
        for x in 0..old_e {
            if x != e {
                new_images.push(rewrite(&self.edge_images[x]).tightened());
            }
        }
        new_images.push(rewrite(&Path::single(delta)).tightened()); // f(s)
        new_images.push(rewrite(&w.slice(1..w.len() - 1)).tightened()); // f(m)
        let mut vertex_images = self.vertex_images.clone();
        vertex_images.push(self.graph.term_of(delta));
        let out = GraphSelfMap {
            graph: MarkedGraph {
                vertex_count: new_vertex + 1,
                edges: new_edges,
                basepoint: self.graph.basepoint,
                marking: self
                    .graph
                    .marking
                    .iter()
                    .map(|m| rewrite(m).tightened())
                    .collect(),
                rank: self.graph.rank,
            },
            vertex_images,
            edge_images: new_images,
        };
        Ok(out)
    }

    /// Collapse a set of edges forming a forest. The collapse `q` is a
    /// homotopy equivalence for *any* forest: the induced map is `q ∘ f ∘ j`
    /// with `j` the homotopy inverse inserting tree connector paths. For an
    /// f-invariant forest the connectors die under `q ∘ f`, but in general
    /// (for instance during valence-one removal) they contribute.
    pub fn collapse_forest(&self, forest: &HashSet<usize>) -> Result<GraphSelfMap> {
        if forest.is_empty() {
            return Ok(self.clone());
        }
        // Union-find over vertices; verify acyclicity.
        let n = self.graph.vertex_count();
        let mut uf: Vec<usize> = (0..n).collect();
        fn find(uf: &mut Vec<usize>, x: usize) -> usize {
            if uf[x] != x {
                let r = find(uf, uf[x]);
                uf[x] = r;
            }
            uf[x]
        }
        for &e in forest {
            let (a, b) = self.graph.edge(e);
            let ra = find(&mut uf, a);
            let rb = find(&mut uf, b);
            if ra == rb {
                return Err(Error::Internal(format!(
                    "collapse set contains a cycle through e{}",
                    e
                )));
            }
            uf[ra] = rb;
        }
        // New vertex ids: one per class, in order of first appearance.
        let mut class_id: HashMap<usize, usize> = HashMap::new();
        let mut vmap = vec![0usize; n];
        for v in 0..n {
            let r = find(&mut uf, v);
            let next = class_id.len();
            let id = *class_id.entry(r).or_insert(next);
            vmap[v] = id;
        }
        let new_vertex_count = class_id.len();
        // Representative of each class: the basepoint where applicable,
        // otherwise the first member.
        let mut rep: Vec<Option<usize>> = vec![None; new_vertex_count];
        for v in 0..n {
            rep[vmap[v]].get_or_insert(v);
        }
        rep[vmap[self.graph.basepoint]] = Some(self.graph.basepoint);
        // Connector t_v: path from the representative of v's class to v
        // inside the forest (BFS per component).
        let mut adj: Vec<Vec<Dir>> = vec![Vec::new(); n];
        for &e in forest {
            let (a, b) = self.graph.edge(e);
            adj[a].push(Dir::fwd(e));
            adj[b].push(Dir::rev(e));
        }
        let mut connector: Vec<Path> = vec![Path::empty(); n];
        for c in 0..new_vertex_count {
            let r = rep[c].expect("every class has a member");
            let mut seen = vec![false; n];
            seen[r] = true;
            let mut queue = VecDeque::from([r]);
            while let Some(v) = queue.pop_front() {
                for &d in &adj[v] {
                    let w = self.graph.term_of(d);
                    if !seen[w] {
                        seen[w] = true;
                        connector[w] = connector[v].concat(&Path::single(d));
                        queue.push_back(w);
                    }
                }
            }
        }
        // New edge ids.
        let mut emap: Vec<Option<usize>> = Vec::with_capacity(self.graph.edge_count());
        let mut new_edges = Vec::new();
        for e in 0..self.graph.edge_count() {
            if forest.contains(&e) {
                emap.push(None);
            } else {
                let (a, b) = self.graph.edge(e);
                emap.push(Some(new_edges.len()));
                new_edges.push((vmap[a], vmap[b]));
            }
        }
        // q on paths: delete forest letters.
        let q = |p: &Path| -> Path {
            let mut out = Path::empty();
            for &d in p.dirs() {
                if let Some(ne) = emap[d.edge()] {
                    out.push_tight(Dir {
                        edge: ne as u32,
                        rev: d.rev,
                    });
                }
            }
            out
        };
        let mut new_images = Vec::with_capacity(new_edges.len());
        for e in 0..self.graph.edge_count() {
            if forest.contains(&e) {
                continue;
            }
            let (a, b) = self.graph.edge(e);
            let j_path = connector[a]
                .concat(&Path::single(Dir::fwd(e)))
                .concat(&connector[b].reversed());
            new_images.push(q(&self.map_path(&j_path)));
        }
        let mut new_vertex_images = vec![usize::MAX; new_vertex_count];
        for c in 0..new_vertex_count {
            let r = rep[c].unwrap();
            new_vertex_images[c] = vmap[self.vertex_images[r]];
        }
        let out = GraphSelfMap {
            graph: MarkedGraph {
                vertex_count: new_vertex_count,
                edges: new_edges,
                basepoint: vmap[self.graph.basepoint],
                marking: self.graph.marking.iter().map(&q).collect(),
                rank: self.graph.rank,
            },
            vertex_images: new_vertex_images,
            edge_images: new_images,
        };
        Ok(out)
    }

    /// Move the basepoint to a neighbouring vertex along direction `d`
    /// (based at the current basepoint), conjugating the marking.
    pub fn rebase_along(&self, d: Dir) -> GraphSelfMap {
        debug_assert_eq!(self.graph.init_of(d), self.graph.basepoint());
        let mut out = self.clone();
        let c = Path::single(d);
        out.graph.basepoint = self.graph.term_of(d);
        for m in &mut out.graph.marking {
            *m = c.reversed().concat(m).concat(&c).tightened();
        }
        out
    }

    /// Remove all valence-one vertices. The graph without a stub edge is a
    /// deformation retract, and the retraction simply strips stub letters
    /// from images, so image lengths never grow.
    pub fn remove_valence_one(&self) -> Result<GraphSelfMap> {
        let mut cur = self.clone();
        loop {
            let mut target = None;
            for v in 0..cur.graph.vertex_count() {
                let dirs = cur.graph.directions_at(v);
                if dirs.len() == 1 {
                    target = Some((v, dirs[0]));
                    break;
                }
            }
            match target {
                Some((v, d)) => cur = cur.retract_stub(v, d)?,
                None => return Ok(cur),
            }
        }
    }

    /// Retract the stub at the valence-one vertex `v` with unique departing
    /// direction `d`: the stub edge and `v` are deleted, stub letters are
    /// stripped from every image path, and vertices mapping to `v` are
    /// re-routed to the far endpoint.
    fn retract_stub(&self, v: usize, d: Dir) -> Result<GraphSelfMap> {
        let e = d.edge();
        let far = self.graph.term_of(d);
        if far == v {
            return Err(Error::Internal("stub edge at a loop vertex".into()));
        }
        let mut cur = self.clone();
        // The marking must stay based inside the retract.
        if cur.graph.basepoint() == v {
            cur = cur.rebase_along(d);
        }
        // A reduced path meets `v` only at its endpoints, so stripping stub
        // letters is the retraction; tighten defensively regardless.
        let strip = |p: &Path| -> Path {
            Path::from_dirs(p.dirs().iter().copied().filter(|x| x.edge() != e).collect())
                .tightened()
        };
        let vmap = |w: usize| -> usize { if w > v { w - 1 } else { w } };
        let emap = |x: usize| -> usize { if x > e { x - 1 } else { x } };
        let remap = |p: &Path| -> Path {
            Path::from_dirs(
                p.dirs()
                    .iter()
                    .map(|x| Dir {
                        edge: emap(x.edge()) as u32,
                        rev: x.rev,
                    })
                    .collect(),
            )
        };
        let mut new_edges = Vec::with_capacity(cur.graph.edge_count() - 1);
        let mut new_images = Vec::with_capacity(cur.graph.edge_count() - 1);
        for x in 0..cur.graph.edge_count() {
            if x == e {
                continue;
            }
            let (a, b) = cur.graph.edge(x);
            new_edges.push((vmap(a), vmap(b)));
            new_images.push(remap(&strip(&cur.edge_images[x])));
        }
        let mut new_vertex_images = Vec::with_capacity(cur.graph.vertex_count() - 1);
        for w in 0..cur.graph.vertex_count() {
            if w == v {
                continue;
            }
            let fw = cur.vertex_images[w];
            new_vertex_images.push(vmap(if fw == v { far } else { fw }));
        }
        Ok(GraphSelfMap {
            graph: MarkedGraph {
                vertex_count: cur.graph.vertex_count() - 1,
                edges: new_edges,
                basepoint: vmap(cur.graph.basepoint()),
                marking: cur
                    .graph
                    .marking
                    .iter()
                    .map(|m| remap(&strip(m)))
                    .collect(),
                rank: cur.graph.rank,
            },
            vertex_images: new_vertex_images,
            edge_images: new_images,
        })
    }

    /// First removable valence-two vertex with its two outgoing directions.
    pub(crate) fn first_valence_two(&self) -> Option<(usize, Dir, Dir)> {
        for v in 0..self.graph.vertex_count() {
            let dirs = self.graph.directions_at(v);
            if dirs.len() == 2 && dirs[0].edge() != dirs[1].edge() {
                return Some((v, dirs[0], dirs[1]));
            }
        }
        None
    }

    /// Remove one valence-two vertex, if any: slide vertex images off it,
    /// then merge its two half-edges into a single edge. Returns `None` when
    /// no removable valence-two vertex exists.
    fn remove_one_valence_two(&self) -> Result<Option<GraphSelfMap>> {
        let Some((v, d1, d2)) = self.first_valence_two() else {
            return Ok(None);
        };
        Ok(Some(self.merge_valence_two_at(v, d1, d2)?))
    }

    /// Merge the valence-two vertex `v` whose outgoing directions are `d1`
    /// and `d2`: vertex images on `v` slide along `d2`, and the two incident
    /// half-edges fuse into one edge running from the far end of `d1` to the
    /// far end of `d2`. Swapping the arguments slides along the other edge,
    /// which changes the resulting images but not the graph.
    pub(crate) fn merge_valence_two_at(&self, v: usize, d1: Dir, d2: Dir) -> Result<GraphSelfMap> {
        let mut cur = self.clone();
        for m in &mut cur.graph.marking {
            *m = m.tightened();
        }
        // Keep the basepoint away from the removed vertex.
        if cur.graph.basepoint() == v {
            cur = cur.rebase_along(d1);
        }
        // Slide every vertex mapping onto v to the far end of d2.
        let slide = Path::single(d2); // v -> u2
        let u2 = cur.graph.term_of(d2);
        loop {
            let Some(w) = (0..cur.graph.vertex_count()).find(|&w| cur.vertex_images[w] == v)
            else {
                break;
            };
            cur.vertex_images[w] = u2;
            for e in 0..cur.graph.edge_count() {
                let (a, b) = cur.graph.edge(e);
                let mut img = cur.edge_images[e].clone();
                if a == w {
                    img = slide.reversed().concat(&img);
                }
                if b == w {
                    img = img.concat(&slide);
                }
                cur.edge_images[e] = img.tightened();
            }
        }
        // Merge: the tight visits to v are exactly (d1rev d2) or (d2rev d1).
        let e1 = d1.edge();
        let e2 = d2.edge();
        let u1 = cur.graph.term_of(d1);
        // New edge E = [d1.reversed(), d2] : u1 -> u2.
        let new_image = cur
            .image_of_dir(d1.reversed())
            .concat(&cur.image_of_dir(d2))
            .tightened();
        // Rewrite paths: pair (d1rev, d2) -> E, (d2rev, d1) -> E reversed.
        let arrive1 = d1.reversed(); // enters v along edge e1
        let arrive2 = d2.reversed();
        // Temporary id for E: we rebuild the edge list from scratch below.
        let rewrite = |p: &Path, enew: usize| -> Result<Path> {
            let mut dirs = Vec::with_capacity(p.len());
            let mut i = 0;
            while i < p.len() {
                let d = p.dirs()[i];
                if d == arrive1 || d == arrive2 {
                    let Some(&next) = p.dirs().get(i + 1) else {
                        return Err(Error::Internal(
                            "path ends at a valence-two vertex being removed".into(),
                        ));
                    };
                    if d == arrive1 && next == d2 {
                        dirs.push(Dir::fwd(enew));
                    } else if d == arrive2 && next == d1 {
                        dirs.push(Dir::rev(enew));
                    } else {
                        return Err(Error::Internal(
                            "illegal backtrack at a valence-two vertex".into(),
                        ));
                    }
                    i += 2;
                } else if d == d1 || d == d2 {
                    // A path may only *start* with a departure from v.
                    return Err(Error::Internal(
                        "path starts at a valence-two vertex being removed".into(),
                    ));
                } else {
                    dirs.push(d);
                    i += 1;
                }
            }
            Ok(Path::from_dirs(dirs))
        };
        // Build new edge table: all edges except e1, e2, then E at the end.
        let mut emap: Vec<Option<usize>> = vec![None; cur.graph.edge_count()];
        let mut new_edges = Vec::new();
        for e in 0..cur.graph.edge_count() {
            if e != e1 && e != e2 {
                emap[e] = Some(new_edges.len());
                new_edges.push(cur.graph.edge(e));
            }
        }
        let enew_tmp = cur.graph.edge_count(); // sentinel used during rewrite
        let final_enew = new_edges.len();
        new_edges.push((u1, u2));
        let finish = |p: Path| -> Path {
            Path::from_dirs(
                p.dirs()
                    .iter()
                    .map(|&d| {
                        if d.edge() == enew_tmp {
                            Dir {
                                edge: final_enew as u32,
                                rev: d.rev,
                            }
                        } else {
                            Dir {
                                edge: emap[d.edge()].expect("e1/e2 eliminated") as u32,
                                rev: d.rev,
                            }
                        }
                    })
                    .collect(),
            )
        };
        let mut new_images: Vec<Path> = Vec::with_capacity(new_edges.len());
        for e in 0..cur.graph.edge_count() {
            if e != e1 && e != e2 {
                new_images.push(finish(rewrite(&cur.edge_images[e], enew_tmp)?));
            }
        }
        new_images.push(finish(rewrite(&new_image, enew_tmp)?));
        let new_marking: Result<Vec<Path>> = cur
            .graph
            .marking
            .iter()
            .map(|m| Ok(finish(rewrite(m, enew_tmp)?)))
            .collect();
        // Remove vertex v.
        let vmap = |x: usize| -> usize {
            if x > v {
                x - 1
            } else {
                x
            }
        };
        let mut final_edges = Vec::with_capacity(new_edges.len());
        for (a, b) in new_edges {
            final_edges.push((vmap(a), vmap(b)));
        }
        let mut new_vimages = Vec::with_capacity(cur.graph.vertex_count() - 1);
        for w in 0..cur.graph.vertex_count() {
            if w != v {
                new_vimages.push(vmap(cur.vertex_images[w]));
            }
        }
        let out = GraphSelfMap {
            graph: MarkedGraph {
                vertex_count: cur.graph.vertex_count() - 1,
                edges: final_edges,
                basepoint: vmap(cur.graph.basepoint()),
                marking: new_marking?,
                rank: cur.graph.rank,
            },
            vertex_images: new_vimages,
            edge_images: new_images,
        };
        Ok(out)
    }

    pub fn remove_valence_two(&self) -> Result<GraphSelfMap> {
        let mut cur = self.clone();
        while let Some(next) = cur.remove_one_valence_two()? {
            cur = next;
        }
        Ok(cur)
    }

    /// Edges with trivial (tightened) image.
    pub fn pretrivial_edges(&self) -> HashSet<usize> {
        (0..self.graph.edge_count())
            .filter(|&e| self.edge_images[e].tightened().is_empty())
            .collect()
    }

    /// The set of (unoriented) edges appearing in iterated images of `e`.
    pub fn orbit_closure(&self, e: usize) -> HashSet<usize> {
        let mut set = HashSet::from([e]);
        let mut stack = vec![e];
        while let Some(x) = stack.pop() {
            for d in self.edge_images[x].dirs() {
                if set.insert(d.edge()) {
                    stack.push(d.edge());
                }
            }
        }
        set
    }

    /// Whether the given edge set is acyclic.
    pub fn is_forest(&self, edges: &HashSet<usize>) -> bool {
        let n = self.graph.vertex_count();
        let mut uf: Vec<usize> = (0..n).collect();
        fn find(uf: &mut Vec<usize>, x: usize) -> usize {
            if uf[x] != x {
                let r = find(uf, uf[x]);
                uf[x] = r;
            }
            uf[x]
        }
        for &e in edges {
            let (a, b) = self.graph.edge(e);
            let ra = find(&mut uf, a);
            let rb = find(&mut uf, b);
            if ra == rb {
                return false;
            }
            uf[ra] = rb;
        }
        true
    }

    /// A maximal (greedy) f-invariant forest: union of edge-orbit closures
    /// that stay forests.
    pub fn invariant_forest(&self) -> HashSet<usize> {
        let mut forest: HashSet<usize> = HashSet::new();
        for e in 0..self.graph.edge_count() {
            if forest.contains(&e) {
                continue;
            }
            let orbit = self.orbit_closure(e);
            let candidate: HashSet<usize> = forest.union(&orbit).copied().collect();
            if self.is_forest(&candidate) {
                forest = candidate;
            }
        }
        forest
    }

    /// Collapse pretrivial edges and a maximal invariant forest, then remove
    /// valence-one and valence-two vertices. Repeats until stable.
    pub fn cleanup(&self) -> Result<GraphSelfMap> {
        self.cleanup_impl(true)
    }

    /// Cleanup without valence-two merges. Merging valence-two vertices can
    /// re-route images of edges whose endpoints map there, which is not
    /// monotone for the transition spectrum; the folding loop therefore
    /// defers it until a train track map is reached.
    pub fn cleanup_gentle(&self) -> Result<GraphSelfMap> {
        self.cleanup_impl(false)
    }

    fn cleanup_impl(&self, merge_valence_two: bool) -> Result<GraphSelfMap> {
        let mut cur = self.tighten_images();
        loop {
            let pre = cur.pretrivial_edges();
            if !pre.is_empty() {
                if !cur.is_forest(&pre) {
                    return Err(Error::NotAutomorphism(
                        "an essential loop has trivial image".into(),
                    ));
                }
                cur = cur.collapse_forest(&pre)?.tighten_images();
                continue;
            }
            let forest = cur.invariant_forest();
            if !forest.is_empty() {
                cur = cur.collapse_forest(&forest)?.tighten_images();
                continue;
            }
            let v1 = cur.remove_valence_one()?;
            if v1.graph.vertex_count() != cur.graph.vertex_count() {
                cur = v1.tighten_images();
                continue;
            }
            if merge_valence_two {
                let v2 = cur.remove_valence_two()?;
                if v2.graph.vertex_count() != cur.graph.vertex_count() {
                    cur = v2.tighten_images();
                    continue;
                }
            }
            return Ok(cur);
        }
    }

    // -- marking ------------------------------------------------------------

    /// Express a basepoint loop as a word in the free group on the non-tree
    /// edges of the given spanning tree.
    fn loop_word(
        &self,
        parent: &[Option<Dir>],
        letter_of_edge: &HashMap<usize, u16>,
        p: &Path,
    ) -> ReducedWord {
        let mut w = ReducedWord::empty();
        for d in p.dirs() {
            if let Some(&g) = letter_of_edge.get(&d.edge()) {
                w.push(if d.is_rev() {
                    Letter::negative(g)
                } else {
                    Letter::positive(g)
                });
            } else {
                debug_assert!(
                    parent[self.graph.term_of(*d)] == Some(*d)
                        || parent[self.graph.init_of(*d)] == Some(d.reversed()),
                    "non-tree edge missing a letter"
                );
            }
        }
        w
    }

    /// Build the chart translating basepoint loops into F_N words via the
    /// marking: a spanning tree, letters for the non-tree edges, and the
    /// marking isomorphism μ with its inverse.
    pub(crate) fn marking_chart(&self) -> Result<MarkingChart> {
        let rank = self.graph.rank();
        let parent = self.graph.spanning_tree();
        let tree_edges: HashSet<usize> = parent
            .iter()
            .flatten()
            .map(|d| d.edge())
            .collect();
        let mut letter_of_edge: HashMap<usize, u16> = HashMap::new();
        for e in 0..self.graph.edge_count() {
            if !tree_edges.contains(&e) {
                let next = letter_of_edge.len() as u16;
                letter_of_edge.insert(e, next);
            }
        }
        if letter_of_edge.len() != rank as usize {
            return Err(Error::Internal(format!(
                "graph rank {} does not match marking rank {}",
                letter_of_edge.len(),
                rank
            )));
        }
        // mu : F_N -> F(non-tree edges), generator i -> marking loop i.
        let mu = Automorphism::new(
            rank,
            self.graph
                .marking
                .iter()
                .map(|m| self.loop_word(&parent, &letter_of_edge, m))
                .collect(),
        )?;
        let (mu_inv, _) = mu.invert().map_err(|e| {
            Error::Internal(format!("marking does not define an isomorphism: {}", e))
        })?;
        Ok(MarkingChart {
            parent,
            letter_of_edge,
            mu,
            mu_inv,
        })
    }

    /// The outer automorphism induced on π₁ via the marking: reads the
    /// marking as an isomorphism F_N → π₁(G, v0) and conjugates the action
    /// of the map on π₁ back to F_N.
    pub fn induced_outer(&self) -> Result<Automorphism> {
        let rank = self.graph.rank();
        let chart = self.marking_chart()?;
        // f_* : F(non-tree) -> F(non-tree): x_e -> word of c · f(loop_e) · c̄,
        // with loop_e the tree-conjugated edge loop and c the tree path to
        // the image of the basepoint.
        let v0 = self.graph.basepoint();
        let c = chart.tree_path(&self.graph, self.vertex_images[v0]);
        let mut fstar_images = vec![ReducedWord::empty(); rank as usize];
        for (&e, &g) in &chart.letter_of_edge {
            let (a, b) = self.graph.edge(e);
            let la = chart.tree_path(&self.graph, a);
            let lb = chart.tree_path(&self.graph, b);
            let loop_e = la.concat(&Path::single(Dir::fwd(e))).concat(&lb.reversed());
            let img = self.map_path(&loop_e);
            let total = c.concat(&img).concat(&c.reversed()).tightened();
            fstar_images[g as usize] =
                self.loop_word(&chart.parent, &chart.letter_of_edge, &total);
        }
        let fstar = Automorphism::new(rank, fstar_images)?;
        // Induced automorphism on F_N: mu^{-1} ∘ f_* ∘ mu.
        Ok(chart.mu_inv.compose(&fstar).compose(&chart.mu))
    }

    /// Check that this map still represents `phi` in Out(F_N).
    pub fn verify_marking(&self, phi: &Automorphism, bound: usize) -> Result<MarkingVerdict> {
        let induced = self.induced_outer()?;
        Ok(match equal_in_out(&induced, phi, bound) {
            OuterEquality::Equal { conjugator } => MarkingVerdict::Verified { conjugator },
            OuterEquality::Distinct { reason } => MarkingVerdict::Failed { reason },
            OuterEquality::Unknown { bound } => MarkingVerdict::Indeterminate { bound },
        })
    }

    /// Human-readable dump (edges, images, marking).
    pub fn describe(&self) -> String {
        let mut s = String::new();
        s.push_str(&format!(
            "vertices: {}   basepoint: v{}\n",
            self.graph.vertex_count(),
            self.graph.basepoint()
        ));
        for e in 0..self.graph.edge_count() {
            let (a, b) = self.graph.edge(e);
            s.push_str(&format!(
                "  e{}: v{} -> v{}   f(e{}) = {}\n",
                e, a, b, e, self.edge_images[e]
            ));
        }
        for v in 0..self.graph.vertex_count() {
            s.push_str(&format!("  f(v{}) = v{}\n", v, self.vertex_images[v]));
        }
        for (i, m) in self.graph.marking.iter().enumerate() {
            s.push_str(&format!(
                "  marking {} = {}\n",
                Letter::positive(i as u16),
                m
            ));
        }
        s
    }
}

/// Crate-internal chart for reading basepoint loops as F_N elements
/// through the marking.
#[derive(Clone, Debug)]
pub(crate) struct MarkingChart {
    parent: Vec<Option<Dir>>,
    letter_of_edge: HashMap<usize, u16>,
    mu: Automorphism,
    mu_inv: Automorphism,
}

impl MarkingChart {
    /// Tree path from the basepoint to `v` inside the spanning tree.
    pub(crate) fn tree_path(&self, g: &MarkedGraph, v: usize) -> Path {
        g.tree_path_to(&self.parent, v)
    }

    /// The chart letter crossed by a direction; None on spanning-tree edges.
    pub(crate) fn chart_letter(&self, d: Dir) -> Option<Letter> {
        self.letter_of_edge.get(&d.edge()).map(|&g| {
            if d.is_rev() {
                Letter::negative(g)
            } else {
                Letter::positive(g)
            }
        })
    }

    /// The non-tree edge carrying each chart letter.
    pub(crate) fn edge_of_letter(&self) -> Vec<usize> {
        let mut out = vec![usize::MAX; self.letter_of_edge.len()];
        for (&e, &g) in &self.letter_of_edge {
            out[g as usize] = e;
        }
        out
    }

    /// The marking isomorphism from F_N to the chart basis.
    pub(crate) fn mu(&self) -> &Automorphism {
        &self.mu
    }

    /// The F_N element represented by a tight basepoint loop.
    pub(crate) fn word_of_loop(&self, map: &GraphSelfMap, p: &Path) -> ReducedWord {
        self.mu_inv
            .apply(&map.loop_word(&self.parent, &self.letter_of_edge, p))
    }
}

/// Tri-state marking verification result.
#[derive(Clone, Debug)]
pub enum MarkingVerdict {
    Verified { conjugator: ReducedWord },
    Failed { reason: String },
    Indeterminate { bound: usize },
}

impl MarkingVerdict {
    pub fn is_verified(&self) -> bool {
        matches!(self, MarkingVerdict::Verified { .. })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn w(s: &str) -> ReducedWord {
        ReducedWord::from_letters(s.chars().map(|c| {
            if c.is_ascii_uppercase() {
                Letter::negative(c.to_ascii_lowercase() as u16 - 'a' as u16)
            } else {
                Letter::positive(c as u16 - 'a' as u16)
            }
        }))
    }

    fn aut(rank: u16, images: &[&str]) -> Automorphism {
        Automorphism::new(rank, images.iter().map(|s| w(s)).collect()).unwrap()
    }

    fn running_example() -> Automorphism {
        aut(3, &["b", "ac", "a"])
    }

    #[test]
    fn rose_map_round_trips_the_automorphism() {
        let phi = running_example();
        let map = GraphSelfMap::rose_map(&phi);
        map.validate().unwrap();
        assert_eq!(map.induced_outer().unwrap(), phi);
        assert!(map.verify_marking(&phi, 16).unwrap().is_verified());
    }

    #[test]
    fn tighten_paths() {
        let p = Path::from_dirs(vec![Dir::fwd(0), Dir::rev(0), Dir::fwd(1)]);
        assert_eq!(p.tightened().dirs(), &[Dir::fwd(1)]);
        assert!(!p.is_tight());
        assert!(p.tightened().is_tight());
    }

    #[test]
    fn map_path_applies_images() {
        let phi = running_example();
        let map = GraphSelfMap::rose_map(&phi);
        // f(b) = ac, so f(b b) = acac and f(b B) = trivial.
        let p = Path::from_dirs(vec![Dir::fwd(1), Dir::fwd(1)]);
        assert_eq!(
            map.map_path(&p).dirs(),
            &[Dir::fwd(0), Dir::fwd(2), Dir::fwd(0), Dir::fwd(2)]
        );
        let q = Path::from_dirs(vec![Dir::fwd(1), Dir::rev(1)]);
        assert!(map.map_path(&q).is_empty());
    }

    #[test]
    fn subdivision_preserves_marking_and_structure() {
        let phi = running_example();
        let map = GraphSelfMap::rose_map(&phi);
        // Subdivide edge b (image "ac") after its first image edge.
        let sub = map.subdivide(1, 1).unwrap();
        sub.validate().unwrap();
        assert_eq!(sub.graph.vertex_count(), 2);
        assert_eq!(sub.graph.edge_count(), 4);
        // The outer class is unchanged.
        assert!(sub.verify_marking(&phi, 16).unwrap().is_verified());
        // The two halves map to a and c.
        assert_eq!(sub.edge_image(1).dirs(), &[Dir::fwd(0)]);
        assert_eq!(sub.edge_image(3).dirs(), &[Dir::fwd(2)]);
    }

    #[test]
    fn valence_two_removal_undoes_subdivision() {
        let phi = running_example();
        let map = GraphSelfMap::rose_map(&phi);
        let sub = map.subdivide(1, 1).unwrap();
        let back = sub.remove_valence_two().unwrap();
        back.validate().unwrap();
        assert_eq!(back.graph.vertex_count(), 1);
        assert_eq!(back.graph.edge_count(), 3);
        assert!(back.verify_marking(&phi, 16).unwrap().is_verified());
    }

    #[test]
    fn collapse_forest_after_subdivision() {
        let phi = running_example();
        let sub = GraphSelfMap::rose_map(&phi).subdivide(1, 1).unwrap();
        // e3 connects the new vertex back to v0; collapsing it merges the
        // graph back down to one vertex.
        let forest = HashSet::from([3usize]);
        let collapsed = sub.collapse_forest(&forest).unwrap();
        collapsed.validate().unwrap();
        assert_eq!(collapsed.graph.vertex_count(), 1);
        // Outer class is preserved by any forest collapse.
        assert!(collapsed.verify_marking(&phi, 16).unwrap().is_verified());
    }

    #[test]
    fn fold_turn_resolves_an_illegal_turn() {
        // a -> ab, b -> a⁻¹ is an automorphism whose rose map has the
        // one-step degenerate taken turn {a, b̄}: both directions map to a.
        let phi = aut(2, &["ab", "A"]);
        let map = GraphSelfMap::rose_map(&phi);
        assert_eq!(map.dir_map(Dir::fwd(0)), Some(Dir::fwd(0)));
        assert_eq!(map.dir_map(Dir::rev(1)), Some(Dir::fwd(0)));
        let folded = map.fold_turn(Dir::fwd(0), Dir::rev(1)).unwrap();
        folded.validate().unwrap();
        // Partial fold: the edge of the longer image splits, one piece
        // merging into b̄; edge and vertex counts are unchanged on a rose.
        assert_eq!(folded.graph.vertex_count(), 1);
        assert_eq!(folded.graph.edge_count(), 2);
        assert!(folded.verify_marking(&phi, 16).unwrap().is_verified());
    }

    #[test]
    fn fold_split_keeps_the_outer_class() {
        // a -> ba and b -> ba⁻¹b⁻¹ share exactly the first direction b and
        // then diverge, so folding {a, b} exercises the split case.
        let phi = aut(2, &["ba", "bAB"]);
        let map = GraphSelfMap::rose_map(&phi);
        assert_eq!(map.dir_map(Dir::fwd(0)), Some(Dir::fwd(1)));
        assert_eq!(map.dir_map(Dir::fwd(1)), Some(Dir::fwd(1)));
        let folded = map.fold_turn(Dir::fwd(0), Dir::fwd(1)).unwrap();
        folded.validate().unwrap();
        // Split fold: one new vertex and one net new edge.
        assert_eq!(folded.graph.vertex_count(), 2);
        assert_eq!(folded.graph.edge_count(), 3);
        assert!(folded.verify_marking(&phi, 16).unwrap().is_verified());
    }

    #[test]
    fn fold_absorbs_a_maximal_common_prefix() {
        // a -> bab, b -> ba: the image of b is a proper prefix of the image
        // of a, so the whole edge b absorbs an initial segment of a without
        // creating a new vertex.
        let phi = aut(2, &["bab", "ba"]);
        let map = GraphSelfMap::rose_map(&phi);
        let folded = map.fold_turn(Dir::fwd(0), Dir::fwd(1)).unwrap();
        folded.validate().unwrap();
        assert_eq!(folded.graph.vertex_count(), 1);
        assert_eq!(folded.graph.edge_count(), 2);
        assert!(folded.verify_marking(&phi, 16).unwrap().is_verified());
    }

    #[test]
    fn fold_loop_turn_subdivides_symmetrically() {
        // a -> bab̄, b -> b: the image of the loop a is symmetric, so the
        // turn {a, ā} is one-step degenerate and triggers the loop fold.
        let phi = aut(2, &["baB", "b"]);
        let map = GraphSelfMap::rose_map(&phi);
        assert_eq!(map.dir_map(Dir::fwd(0)), Some(Dir::fwd(1)));
        assert_eq!(map.dir_map(Dir::rev(0)), Some(Dir::fwd(1)));
        let folded = map.fold_turn(Dir::fwd(0), Dir::rev(0)).unwrap();
        folded.validate().unwrap();
        assert_eq!(folded.graph.vertex_count(), 2);
        assert_eq!(folded.graph.edge_count(), 3);
        assert!(folded.verify_marking(&phi, 16).unwrap().is_verified());
    }

    #[test]
    fn cleanup_is_idempotent_on_roses() {
        let phi = running_example();
        let map = GraphSelfMap::rose_map(&phi);
        let cleaned = map.cleanup().unwrap();
        assert_eq!(cleaned.graph.edge_count(), 3);
        assert_eq!(cleaned.graph.vertex_count(), 1);
        assert!(cleaned.verify_marking(&phi, 16).unwrap().is_verified());
    }

    #[test]
    fn cleanup_collapses_invariant_forest() {
        // Subdivide and check cleanup returns to a rose-sized graph.
        let phi = running_example();
        let sub = GraphSelfMap::rose_map(&phi)
            .subdivide(1, 1)
            .unwrap()
            .subdivide(0, 1)
            .unwrap();
        let cleaned = sub.cleanup().unwrap();
        assert_eq!(cleaned.graph.vertex_count(), 1);
        assert_eq!(cleaned.graph.edge_count(), 3);
        assert!(cleaned.verify_marking(&phi, 16).unwrap().is_verified());
    }

    #[test]
    fn pretrivial_loop_is_rejected() {
        // a -> 1 cannot arise from an automorphism; cleanup must refuse.
        let graph = MarkedGraph::rose(1);
        let map = GraphSelfMap {
            graph,
            vertex_images: vec![0],
            edge_images: vec![Path::empty()],
        };
        assert!(map.cleanup().is_err());
    }

    #[test]
    fn orbit_closure_of_running_example() {
        let phi = running_example();
        let map = GraphSelfMap::rose_map(&phi);
        // Every edge eventually reaches every other: the orbit closure of
        // any edge is everything.
        for e in 0..3 {
            assert_eq!(map.orbit_closure(e).len(), 3);
        }
        // For the reducible a->a, b->ab, c->c the closure of a is {a}.
        let red = aut(3, &["a", "ab", "c"]);
        let rmap = GraphSelfMap::rose_map(&red);
        assert_eq!(rmap.orbit_closure(0), HashSet::from([0]));
    }

    #[test]
    fn rebase_conjugates_marking() {
        let phi = running_example();
        let sub = GraphSelfMap::rose_map(&phi).subdivide(1, 1).unwrap();
        // Move basepoint across the subdivided edge and back out by
        // verifying the outer class is stable.
        let moved = sub.rebase_along(Dir::fwd(1));
        moved.validate().unwrap();
        assert!(moved.verify_marking(&phi, 16).unwrap().is_verified());
    }
}
