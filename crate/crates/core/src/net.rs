//! Topology, demands, HCF placement vectors, and spectrum occupancy.
//!
//! Topologies are undirected: one link abstracts a fiber pair, and a
//! quantum channel occupies its slot on a link regardless of direction.
//! Link ids are assigned in file order starting at 0 and double as bit
//! positions in placement vectors.

use std::collections::BinaryHeap;

use rand::Rng;
use rand_chacha::{rand_core::SeedableRng, ChaCha8Rng};
use serde::{Deserialize, Serialize};

use crate::phys::{Band, FiberKind, C_QUANTUM_SLOTS, O_QUANTUM_SLOTS};
use crate::{Error, Result};

pub type NodeId = usize;
pub type LinkId = usize;

/// One undirected fiber link.
#[derive(Debug, Clone, PartialEq)]
pub struct Link {
    pub id: LinkId,
    pub a: NodeId,
    pub b: NodeId,
    pub length_km: f64,
    pub fiber: FiberKind,
}

impl Link {
    pub fn other(&self, n: NodeId) -> NodeId {
        if n == self.a {
            self.b
        } else {
            self.a
        }
    }
}

/// Connected undirected graph of nodes and fiber links.
#[derive(Debug, Clone, PartialEq)]
pub struct Topology {
    num_nodes: usize,
    links: Vec<Link>,
    /// Per node: (neighbor, link id), kept sorted by neighbor id.
    adjacency: Vec<Vec<(NodeId, LinkId)>>,
}

impl Topology {
    /// Build and validate a topology. All links start as SSMF.
    ///
    /// `edges` come with 1-based line numbers for error reporting; use 0
    /// when there is no source file.
    pub fn new(num_nodes: usize, edges: Vec<(NodeId, NodeId, f64, usize)>) -> Result<Self> {
        if num_nodes == 0 {
            return Err(Error::Parse { line: 0, msg: "topology needs at least one node".into() });
        }
        let mut links = Vec::with_capacity(edges.len());
        let mut seen = std::collections::HashSet::new();
        for (id, (a, b, length_km, line)) in edges.into_iter().enumerate() {
            if a >= num_nodes {
                return Err(Error::UnknownNode { node: a, line });
            }
            if b >= num_nodes {
                return Err(Error::UnknownNode { node: b, line });
            }
            if a == b {
                return Err(Error::Parse { line, msg: format!("self-loop on node {a}") });
            }
            if !length_km.is_finite() || length_km <= 0.0 {
                return Err(Error::Parse { line, msg: format!("non-positive length {length_km}") });
            }
            if !seen.insert((a.min(b), a.max(b))) {
                return Err(Error::DuplicateEdge { a: a.min(b), b: a.max(b), line });
            }
            links.push(Link { id, a, b, length_km, fiber: FiberKind::Ssmf });
        }

        let mut adjacency = vec![Vec::new(); num_nodes];
        for l in &links {
            adjacency[l.a].push((l.b, l.id));
            adjacency[l.b].push((l.a, l.id));
        }
        for adj in &mut adjacency {
            adj.sort_unstable();
        }

        let topo = Self { num_nodes, links, adjacency };
        let reachable = topo.reachable_from(0);
        if reachable != num_nodes {
            return Err(Error::Disconnected { reachable, total: num_nodes });
        }
        Ok(topo)
    }

    /// Parse the line-oriented topology format:
    ///
    /// ```text
    /// # comment
    /// nodes 23
    /// link 0 1 5.5
    /// ```
    pub fn parse(text: &str) -> Result<Self> {
        let mut num_nodes: Option<usize> = None;
        let mut edges = Vec::new();
        for (idx, raw) in text.lines().enumerate() {
            let line = idx + 1;
            let stripped = raw.split('#').next().unwrap_or("").trim();
            if stripped.is_empty() {
                continue;
            }
            let mut parts = stripped.split_whitespace();
            match parts.next() {
                Some("nodes") => {
                    let count: usize = parts
                        .next()
                        .ok_or_else(|| Error::Parse { line, msg: "missing node count".into() })?
                        .parse()
                        .map_err(|e| Error::Parse { line, msg: format!("bad node count: {e}") })?;
                    if count == 0 {
                        return Err(Error::Parse { line, msg: "node count must be positive".into() });
                    }
                    num_nodes = Some(count);
                }
                Some("link") => {
                    if num_nodes.is_none() {
                        return Err(Error::Parse { line, msg: "link before nodes header".into() });
                    }
                    let mut field = |name: &str| -> Result<String> {
                        parts
                            .next()
                            .map(str::to_owned)
                            .ok_or_else(|| Error::Parse { line, msg: format!("missing {name}") })
                    };
                    let a: NodeId = field("first endpoint")?
                        .parse()
                        .map_err(|e| Error::Parse { line, msg: format!("bad endpoint: {e}") })?;
                    let b: NodeId = field("second endpoint")?
                        .parse()
                        .map_err(|e| Error::Parse { line, msg: format!("bad endpoint: {e}") })?;
                    let length_km: f64 = field("length")?
                        .parse()
                        .map_err(|e| Error::Parse { line, msg: format!("bad length: {e}") })?;
                    edges.push((a, b, length_km, line));
                }
                Some(other) => {
                    return Err(Error::Parse { line, msg: format!("unknown directive `{other}`") })
                }
                None => unreachable!(),
            }
        }
        let num_nodes =
            num_nodes.ok_or_else(|| Error::Parse { line: 0, msg: "missing nodes header".into() })?;
        Self::new(num_nodes, edges)
    }

    pub fn num_nodes(&self) -> usize {
        self.num_nodes
    }

    pub fn num_links(&self) -> usize {
        self.links.len()
    }

    pub fn links(&self) -> &[Link] {
        &self.links
    }

    pub fn link(&self, id: LinkId) -> &Link {
        &self.links[id]
    }

    pub fn mean_length_km(&self) -> f64 {
        self.links.iter().map(|l| l.length_km).sum::<f64>() / self.links.len() as f64
    }

    fn reachable_from(&self, start: NodeId) -> usize {
        let mut seen = vec![false; self.num_nodes];
        let mut stack = vec![start];
        seen[start] = true;
        let mut count = 1;
        while let Some(n) = stack.pop() {
            for &(m, _) in &self.adjacency[n] {
                if !seen[m] {
                    seen[m] = true;
                    count += 1;
                    stack.push(m);
                }
            }
        }
        count
    }

    /// Copy with every length multiplied by `factor`; nothing else changes.
    pub fn scale_lengths(&self, factor: f64) -> Topology {
        assert!(factor > 0.0, "length factor must be positive");
        let mut t = self.clone();
        for l in &mut t.links {
            l.length_km *= factor;
        }
        t
    }

    /// Copy with link `i` upgraded to HCF wherever `placement` has bit `i`
    /// set. The original topology is untouched.
    pub fn apply_placement(&self, placement: &PlacementVector) -> Result<Topology> {
        if placement.len() != self.links.len() {
            return Err(Error::PlacementLength { expected: self.links.len(), got: placement.len() });
        }
        let mut t = self.clone();
        for (l, &up) in t.links.iter_mut().zip(placement.bits()) {
            l.fiber = if up { FiberKind::Hcf } else { FiberKind::Ssmf };
        }
        Ok(t)
    }

    /// Minimum total-length path from `s` to `d`.
    ///
    /// Ties on total length break toward the lexicographically smallest
    /// node-id sequence, so results are reproducible.
    pub fn shortest_path(&self, s: NodeId, d: NodeId) -> Result<Path> {
        assert!(s < self.num_nodes && d < self.num_nodes, "endpoint outside graph");
        // Heap entries order by (distance, node sequence); popping the
        // smallest therefore settles each node with its lexicographically
        // smallest minimum-length path.
        #[derive(PartialEq)]
        struct Entry {
            dist: f64,
            nodes: Vec<NodeId>,
            links: Vec<LinkId>,
        }
        impl Eq for Entry {}
        impl Ord for Entry {
            fn cmp(&self, other: &Self) -> std::cmp::Ordering {
                // inverted: BinaryHeap is a max-heap
                other
                    .dist
                    .partial_cmp(&self.dist)
                    .unwrap()
                    .then_with(|| other.nodes.cmp(&self.nodes))
            }
        }
        impl PartialOrd for Entry {
            fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
                Some(self.cmp(other))
            }
        }

        let mut settled = vec![false; self.num_nodes];
        let mut heap = BinaryHeap::new();
        heap.push(Entry { dist: 0.0, nodes: vec![s], links: vec![] });
        while let Some(Entry { dist, nodes, links }) = heap.pop() {
            let here = *nodes.last().unwrap();
            if settled[here] {
                continue;
            }
            settled[here] = true;
            if here == d {
                let mut cum_km = Vec::with_capacity(nodes.len());
                let mut acc = 0.0;
                cum_km.push(0.0);
                for &lid in &links {
                    acc += self.links[lid].length_km;
                    cum_km.push(acc);
                }
                return Ok(Path { nodes, links, cum_km });
            }
            for &(next, lid) in &self.adjacency[here] {
                if !settled[next] {
                    let mut n2 = nodes.clone();
                    n2.push(next);
                    let mut l2 = links.clone();
                    l2.push(lid);
                    heap.push(Entry { dist: dist + self.links[lid].length_km, nodes: n2, links: l2 });
                }
            }
        }
        Err(Error::Unreachable { from: s, to: d })
    }
}

/// The bundled 23-node / 43-link Tokyo metro reconstruction.
pub fn bundled_tokyo() -> Topology {
    Topology::parse(include_str!("../data/tokyo.topo")).expect("bundled topology is valid")
}

/// A routed path: node sequence, traversed links, and cumulative distance
/// from the source at each node.
#[derive(Debug, Clone, PartialEq)]
pub struct Path {
    pub nodes: Vec<NodeId>,
    pub links: Vec<LinkId>,
    pub cum_km: Vec<f64>,
}

impl Path {
    pub fn total_km(&self) -> f64 {
        *self.cum_km.last().unwrap()
    }
}

/// One secret-key demand.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Demand {
    pub source: NodeId,
    pub dest: NodeId,
    pub rate_kbps: f64,
}

/// Generate `n` demands: endpoints uniform over ordered pairs with
/// `source ≠ dest`, rates uniform on the open interval `(lo, hi)` kbps.
/// Output is a pure function of `(topology, n, range, seed)`.
pub fn generate_demands(
    topo: &Topology,
    n: usize,
    rate_range: (f64, f64),
    seed: u64,
) -> Vec<Demand> {
    let (lo, hi) = rate_range;
    assert!(n >= 1, "demand count must be at least 1");
    assert!(lo < hi, "rate range must be non-empty");
    assert!(topo.num_nodes() >= 2, "need at least two nodes");
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n)
        .map(|_| {
            let source = rng.random_range(0..topo.num_nodes());
            let dest = loop {
                let d = rng.random_range(0..topo.num_nodes());
                if d != source {
                    break d;
                }
            };
            let rate_kbps = loop {
                let r = rng.random_range(lo..hi);
                if r > lo && r < hi {
                    break r;
                }
            };
            Demand { source, dest, rate_kbps }
        })
        .collect()
}

/// Binary HCF-upgrade vector of length `|E|` plus the budget it satisfies.
///
/// Bit `i` set means link `i` is upgraded to HCF. The number of set bits
/// never exceeds `⌊budget_fraction · |E|⌋`.
#[derive(Debug, Clone, PartialEq)]
pub struct PlacementVector {
    bits: Vec<bool>,
    budget_fraction: f64,
}

/// Upgrade budget in links for a fraction `b` of `num_links`.
pub fn budget_links(budget_fraction: f64, num_links: usize) -> usize {
    (budget_fraction * num_links as f64).floor() as usize
}

impl PlacementVector {
    pub fn new(bits: Vec<bool>, budget_fraction: f64) -> Result<Self> {
        assert!((0.0..=1.0).contains(&budget_fraction), "budget fraction must be in [0,1]");
        let budget = budget_links(budget_fraction, bits.len());
        let upgrades = bits.iter().filter(|&&b| b).count();
        if upgrades > budget {
            return Err(Error::BudgetViolation { upgrades, budget });
        }
        Ok(Self { bits, budget_fraction })
    }

    /// All-SSMF baseline of the given length.
    pub fn all_zero(len: usize) -> Self {
        Self { bits: vec![false; len], budget_fraction: 0.0 }
    }

    /// Every link upgraded (budget 1).
    pub fn all_one(len: usize) -> Self {
        Self { bits: vec![true; len], budget_fraction: 1.0 }
    }

    /// Parse a `0`/`1` string, most significant first as written.
    pub fn from_bit_string(s: &str, budget_fraction: f64) -> Result<Self> {
        let bits: Result<Vec<bool>> = s
            .chars()
            .map(|c| match c {
                '0' => Ok(false),
                '1' => Ok(true),
                other => Err(Error::Config(format!("invalid placement bit `{other}`"))),
            })
            .collect();
        Self::new(bits?, budget_fraction)
    }

    pub fn bits(&self) -> &[bool] {
        &self.bits
    }

    pub fn len(&self) -> usize {
        self.bits.len()
    }

    pub fn is_empty(&self) -> bool {
        self.bits.is_empty()
    }

    pub fn budget_fraction(&self) -> f64 {
        self.budget_fraction
    }

    pub fn upgrade_count(&self) -> usize {
        self.bits.iter().filter(|&&b| b).count()
    }

    pub fn bit_string(&self) -> String {
        self.bits.iter().map(|&b| if b { '1' } else { '0' }).collect()
    }
}

/// Per-link occupancy of quantum slots in the C-band block and the O-band.
///
/// A slot is free or occupied per link; occupation happens only through
/// [`SpectrumState::occupy`].
#[derive(Debug, Clone, PartialEq)]
pub struct SpectrumState {
    c: Vec<u16>,
    o: Vec<u64>,
}

impl SpectrumState {
    pub fn new(num_links: usize) -> Self {
        Self { c: vec![0; num_links], o: vec![0; num_links] }
    }

    pub fn num_links(&self) -> usize {
        self.c.len()
    }

    pub fn is_free(&self, link: LinkId, band: Band, slot: usize) -> bool {
        debug_assert!(slot < crate::phys::quantum_slot_count(band));
        match band {
            Band::C => self.c[link] & (1 << slot) == 0,
            Band::O => self.o[link] & (1 << slot) == 0,
        }
    }

    pub fn occupy(&mut self, link: LinkId, band: Band, slot: usize) -> Result<()> {
        if slot >= crate::phys::quantum_slot_count(band) {
            return Err(Error::InvalidSlot { band: band.name(), slot });
        }
        if !self.is_free(link, band, slot) {
            return Err(Error::SlotOccupied { link, slot });
        }
        match band {
            Band::C => self.c[link] |= 1 << slot,
            Band::O => self.o[link] |= 1 << slot,
        }
        Ok(())
    }

    pub fn occupied_count(&self, link: LinkId, band: Band) -> usize {
        match band {
            Band::C => self.c[link].count_ones() as usize,
            Band::O => self.o[link].count_ones() as usize,
        }
    }

    /// Remaining free slots of `band` on `link`.
    pub fn free_count(&self, link: LinkId, band: Band) -> usize {
        let total = match band {
            Band::C => C_QUANTUM_SLOTS,
            Band::O => O_QUANTUM_SLOTS,
        };
        total - self.occupied_count(link, band)
    }
}
