//! Inspect one sweep cell: demand paths, link union, and GA quality at
//! several strengths. Diagnostic tool for sweep anomalies.

use hcfplan_core::config::Config;
use hcfplan_core::ga::{evolve, GaConfig};
use hcfplan_core::net::{bundled_tokyo, generate_demands, PlacementVector};
use hcfplan_core::provision::Evaluator;
use hcfplan_core::sweep::{cell_seed, demand_seed, LoadLevel};

fn main() {
    let args: Vec<String> = std::env::args().collect();
    let factor: f64 = args.get(1).map(|s| s.parse().unwrap()).unwrap_or(8.0);
    let rep: usize = args.get(2).map(|s| s.parse().unwrap()).unwrap_or(7);
    let budget: f64 = args.get(3).map(|s| s.parse().unwrap()).unwrap_or(0.4);

    let cfg = Config::default();
    let catalog = cfg.catalog();
    let topo = bundled_tokyo().scale_lengths(factor);
    let demands = generate_demands(
        &topo,
        10,
        (2.0, 20.0),
        demand_seed(1, factor, LoadLevel::Full, rep),
    );
    let load = LoadLevel::Full.classical_load();
    let ev = Evaluator::new(&catalog, &cfg.qkd, &load, cfg.ga.weights);

    let mut union = std::collections::BTreeSet::new();
    for d in &demands {
        let p = topo.shortest_path(d.source, d.dest).unwrap();
        union.extend(p.links.iter().copied());
        println!(
            "demand {}->{} rate {:.1}: {} hops, {:.1} km",
            d.source,
            d.dest,
            d.rate_kbps,
            p.links.len(),
            p.total_km()
        );
    }
    println!("union size {} (budget {})", union.len(), (budget * 43.0).floor());

    let all_one = ev
        .evaluate_placement(&topo, &PlacementVector::all_one(topo.num_links()), &demands)
        .unwrap();
    println!("all-ones: cost {} unserved {}", all_one.total_cost, all_one.total_unserved_kbps);

    for (pop, patience) in [(30usize, 20usize), (60, 20), (45, 20), (60, 30)] {
        let ga = GaConfig {
            population: pop,
            patience,
            max_generations: 400,
            seed: cell_seed(1, factor, LoadLevel::Full, 2, rep),
            budget_fraction: budget,
            ..GaConfig::default()
        };
        let (best, hist) = evolve(&ga, &topo, &demands, &ev).unwrap();
        let b = best.fitness.as_ref().unwrap();
        println!(
            "pop {pop} patience {patience}: cost {} unserved {} gens {}",
            b.total_cost,
            b.total_unserved_kbps,
            hist.len()
        );
    }
}
