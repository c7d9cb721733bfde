//! Prints the calibration anchors of the default configuration: band
//! feasibility limits, the HCF/SSMF reach ratio, and the absolute SKR
//! scale at metro span lengths. Run after touching any default constant.

use hcfplan_core::config::Config;
use hcfplan_core::phys::{Band, ClassicalLoad, FiberKind, Subpath};
use hcfplan_core::skr::{compute_skr, max_reach_km};

fn main() {
    let cfg = Config::default();
    let catalog = cfg.catalog();
    let params = &cfg.qkd;
    let full = ClassicalLoad::full();
    let half = ClassicalLoad::half();

    let reach_ssmf_o = max_reach_km(FiberKind::Ssmf, Band::O, &full, &catalog, params);
    let reach_ssmf_c = max_reach_km(FiberKind::Ssmf, Band::C, &full, &catalog, params);
    let reach_ssmf_c_half = max_reach_km(FiberKind::Ssmf, Band::C, &half, &catalog, params);
    let reach_hcf_c = max_reach_km(FiberKind::Hcf, Band::C, &full, &catalog, params);
    let reach_hcf_o = max_reach_km(FiberKind::Hcf, Band::O, &full, &catalog, params);

    println!("reach ssmf O full : {reach_ssmf_o:8.2} km   (target ~80, gate 68..92)");
    println!("reach ssmf C full : {reach_ssmf_c:8.2} km   (must be < 5)");
    println!("reach ssmf C half : {reach_ssmf_c_half:8.2} km   (want < ~2 for share-0)");
    println!("reach hcf  C full : {reach_hcf_c:8.2} km");
    println!("reach hcf  O full : {reach_hcf_o:8.2} km");
    println!(
        "hcf max / ssmf O  : {:8.3}     (target 5.6, gate 4.76..6.44)",
        reach_hcf_c.max(reach_hcf_o) / reach_ssmf_o
    );

    println!("\nSKR over single spans, best slot (kbps):");
    println!("  km    ssmf-O-full  hcf-C-full  hcf-O-full  ssmf-O-half");
    for km in [2.0, 5.0, 10.0, 15.0, 20.0, 30.0, 44.0, 55.0, 68.0, 75.0, 80.0, 88.0] {
        let best = |fiber, band, load: &ClassicalLoad| -> f64 {
            (0..hcfplan_core::phys::quantum_slot_count(band))
                .map(|s| {
                    compute_skr(&Subpath::single(fiber, km), band, s, load, &catalog, params)
                        .unwrap()
                        .skr_kbps
                })
                .fold(0.0, f64::max)
        };
        println!(
            "  {km:5.1} {:11.2} {:11.2} {:11.2} {:11.2}",
            best(FiberKind::Ssmf, Band::O, &full),
            best(FiberKind::Hcf, Band::C, &full),
            best(FiberKind::Hcf, Band::O, &full),
            best(FiberKind::Ssmf, Band::O, &half),
        );
    }
}
