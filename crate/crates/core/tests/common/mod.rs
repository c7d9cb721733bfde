//! Shared test scaffolding: a straight-line reimplementation of the
//! provisioning procedure used as an independent oracle, and a random
//! small-instance generator.
//!
//! The oracle deliberately avoids the library's `Evaluator` (no cache, no
//! shared helpers for relay placement, first-fit, or band choice); it
//! re-derives everything from the procedure definition with plain loops.

use rand::Rng;
use rand_chacha::{rand_core::SeedableRng, ChaCha8Rng};

use hcfplan_core::net::{Demand, PlacementVector, SpectrumState, Topology};
use hcfplan_core::phys::{quantum_slot_count, Band, ClassicalLoad, FiberCatalog, Span, Subpath};
use hcfplan_core::provision::FitnessWeights;
use hcfplan_core::skr::{compute_skr, QkdParams};

pub struct OracleOutcome {
    pub fitness: f64,
    pub total_unserved: f64,
    pub total_cost: usize,
}

/// Straight-line re-implementation of the fitness procedure: shortest
/// path, relay loop, first-fit in both bands, higher band wins (tie → C),
/// per-round minimum, cost = 2 per channel, r* by (unserved, cost, r).
pub fn oracle_evaluate(
    topo_with_placement: &Topology,
    demands: &[Demand],
    load: &ClassicalLoad,
    catalog: &FiberCatalog,
    params: &QkdParams,
    weights: FitnessWeights,
) -> OracleOutcome {
    let topo = topo_with_placement;
    let mut state = SpectrumState::new(topo.num_links());
    let mut total_unserved = 0.0f64;
    let mut total_cost = 0usize;

    for demand in demands {
        let path = topo.shortest_path(demand.source, demand.dest).unwrap();
        let n = path.nodes.len();
        let total_len = *path.cum_km.last().unwrap();

        // best = (unserved, cost, committed channels)
        let mut best: Option<(f64, usize, Vec<(Vec<usize>, Band, usize)>)> = None;

        for r in 0..=n - 2 {
            // relay boundaries: for each i, the interior node closest to
            // i·L/(r+1), clamped so the remaining relays still fit
            let mut bounds = vec![0usize];
            let mut prev = 0usize;
            for i in 1..=r {
                let target = total_len * i as f64 / (r + 1) as f64;
                let lo = prev + 1;
                let hi = (n - 2) - (r - i);
                let mut pick = lo;
                for j in lo..=hi {
                    if (path.cum_km[j] - target).abs() < (path.cum_km[pick] - target).abs() {
                        pick = j;
                    }
                }
                bounds.push(pick);
                prev = pick;
            }
            bounds.push(n - 1);

            let subpaths: Vec<(Vec<usize>, Subpath)> = bounds
                .windows(2)
                .map(|w| {
                    let ids: Vec<usize> = path.links[w[0]..w[1]].to_vec();
                    let spans: Vec<Span> = ids
                        .iter()
                        .map(|&l| Span {
                            fiber: topo.link(l).fiber,
                            length_km: topo.link(l).length_km,
                        })
                        .collect();
                    (ids.clone(), Subpath::new(ids, spans))
                })
                .collect();

            let mut scratch = state.clone();
            let mut served = 0.0f64;
            let mut channels: Vec<(Vec<usize>, Band, usize)> = Vec::new();

            'outer: while served < demand.rate_kbps {
                let mut round: Vec<(Vec<usize>, Band, usize)> = Vec::new();
                let mut round_min = f64::INFINITY;
                for (ids, sp) in &subpaths {
                    let free = |band: Band, st: &SpectrumState| -> Option<usize> {
                        (0..quantum_slot_count(band))
                            .find(|&s| ids.iter().all(|&l| st.is_free(l, band, s)))
                    };
                    let c = free(Band::C, &scratch);
                    let o = free(Band::O, &scratch);
                    let rate_of = |band: Band, slot: usize| -> f64 {
                        compute_skr(sp, band, slot, load, catalog, params).unwrap().skr_kbps
                    };
                    let picked = match (c, o) {
                        (None, None) => None,
                        (Some(cs), None) => Some((Band::C, cs, rate_of(Band::C, cs))),
                        (None, Some(os)) => Some((Band::O, os, rate_of(Band::O, os))),
                        (Some(cs), Some(os)) => {
                            let kc = rate_of(Band::C, cs);
                            let ko = rate_of(Band::O, os);
                            if kc >= ko {
                                Some((Band::C, cs, kc))
                            } else {
                                Some((Band::O, os, ko))
                            }
                        }
                    };
                    match picked {
                        Some((band, slot, rate)) if rate > 0.0 => {
                            for &l in ids {
                                scratch.occupy(l, band, slot).unwrap();
                            }
                            round.push((ids.clone(), band, slot));
                            if rate < round_min {
                                round_min = rate;
                            }
                        }
                        _ => break 'outer,
                    }
                }
                channels.extend(round);
                served += round_min;
            }

            let unserved = (demand.rate_kbps - served).max(0.0);
            let cost = 2 * channels.len();
            let replace = match &best {
                None => true,
                Some((bu, bc, _)) => unserved < *bu || (unserved == *bu && cost < *bc),
            };
            if replace {
                best = Some((unserved, cost, channels));
            }
        }

        let (unserved, cost, channels) = best.unwrap();
        for (ids, band, slot) in channels {
            for l in ids {
                state.occupy(l, band, slot).unwrap();
            }
        }
        total_unserved += unserved;
        total_cost += cost;
    }

    OracleOutcome {
        fitness: weights.alpha * total_unserved + weights.beta * total_cost as f64,
        total_unserved,
        total_cost,
    }
}

pub struct Instance {
    pub topo: Topology,
    pub demands: Vec<Demand>,
    pub placement: PlacementVector,
    pub load: ClassicalLoad,
}

/// Random small instance: connected 4–6 node graph, 2–3 demands, a random
/// placement within a random budget, and a random load level.
pub fn random_instance(seed: u64) -> Instance {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = rng.random_range(4..=6usize);
    let mut edges: Vec<(usize, usize, f64, usize)> = Vec::new();
    let mut seen = std::collections::HashSet::new();
    // random spanning tree first
    for v in 1..n {
        let u = rng.random_range(0..v);
        seen.insert((u, v));
        edges.push((u, v, rng.random_range(5.0..60.0), 0));
    }
    let extra = rng.random_range(0..=3usize);
    for _ in 0..extra {
        let u = rng.random_range(0..n);
        let v = rng.random_range(0..n);
        let key = (u.min(v), u.max(v));
        if u != v && !seen.contains(&key) {
            seen.insert(key);
            edges.push((key.0, key.1, rng.random_range(5.0..60.0), 0));
        }
    }
    let topo = Topology::new(n, edges).unwrap();

    let budget_fraction = [0.0, 0.25, 0.5, 1.0][rng.random_range(0..4usize)];
    let budget = hcfplan_core::net::budget_links(budget_fraction, topo.num_links());
    let mut bits = vec![false; topo.num_links()];
    if budget > 0 {
        let ups = rng.random_range(0..=budget);
        for _ in 0..ups {
            let i = rng.random_range(0..bits.len());
            bits[i] = true;
        }
        // may set fewer than `ups` distinct bits; that is fine
    }
    let placement = PlacementVector::new(bits, budget_fraction).unwrap();

    let demand_count = rng.random_range(2..=3usize);
    let demands =
        hcfplan_core::net::generate_demands(&topo, demand_count, (2.0, 20.0), seed ^ 0x9e37_79b9);
    let load = if rng.random_bool(0.5) { ClassicalLoad::half() } else { ClassicalLoad::full() };

    Instance { topo, demands, placement, load }
}
