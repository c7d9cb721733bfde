//! Spectral grid, fiber profiles, and per-span impairment models.
//!
//! # Band plan
//!
//! Quantum and classical signals share a 100 GHz WDM grid.
//!
//! - **C-band**: 4 THz (192–196 THz), 40 slots. A 1 THz block centered at
//!   194 THz (slot centers 193.55–194.45 THz) is reserved for quantum
//!   channels, isolated by 300 GHz guard bands (3 slots) on each side that
//!   no traffic may use. The remaining 24 slots carry classical channels.
//! - **O-band**: 4 THz (232–236 THz), 40 slots, all quantum-eligible.
//!
//! # Impairments
//!
//! Each link is one amplified span. Classical channels are restored to
//! 0 dBm at every span input, so spans contribute noise independently.
//! Mux/demux at the launch node and at every node entered adds 1 dB of
//! insertion loss per traversal. The models here return, per span:
//!
//! - linear transmittance (fiber attenuation plus insertion loss),
//! - spontaneous Raman scattering (SpRS) power falling in a quantum slot,
//! - four-wave mixing (FWM) product power falling in a quantum slot.
//!
//! Linear crosstalk is not modeled; the guard bands isolate the quantum
//! block from classical neighbors.

use serde::{Deserialize, Serialize};

/// WDM grid spacing, GHz.
pub const GRID_GHZ: f64 = 100.0;
/// Insertion loss per mux/demux traversal, dB.
pub const INSERTION_LOSS_DB: f64 = 1.0;
/// Per-channel classical launch / restored power, W (0 dBm).
pub const CLASSICAL_POWER_W: f64 = 1.0e-3;
/// Planck constant, J·s.
pub const PLANCK_J_S: f64 = 6.626_070_15e-34;

/// Number of 100 GHz slots in each 4 THz band.
pub const BAND_SLOTS: usize = 40;
/// Quantum slots in the C-band block.
pub const C_QUANTUM_SLOTS: usize = 10;
/// Quantum slots in the O-band (all of it).
pub const O_QUANTUM_SLOTS: usize = 40;
/// Classical slots in the C-band (40 − 10 quantum − 2×3 guard).
pub const C_CLASSICAL_SLOTS: usize = 24;

const C_BAND_START_THZ: f64 = 192.0;
const O_BAND_START_THZ: f64 = 232.0;
/// First C-band slot index of the quantum block (center 193.55 THz).
const C_QUANTUM_FIRST: usize = 15;
const GUARD_SLOTS_PER_SIDE: usize = 3;

/// Transmission band of a quantum channel.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Band {
    C,
    O,
}

impl Band {
    pub fn name(self) -> &'static str {
        match self {
            Band::C => "c",
            Band::O => "o",
        }
    }
}

impl std::fmt::Display for Band {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

/// Center frequency of C-band grid slot `i` (0..40), THz.
fn c_slot_center_thz(i: usize) -> f64 {
    C_BAND_START_THZ + 0.05 + 0.1 * i as f64
}

/// Center frequency of O-band grid slot `i` (0..40), THz.
fn o_slot_center_thz(i: usize) -> f64 {
    O_BAND_START_THZ + 0.05 + 0.1 * i as f64
}

/// Number of quantum slots available in `band`.
pub fn quantum_slot_count(band: Band) -> usize {
    match band {
        Band::C => C_QUANTUM_SLOTS,
        Band::O => O_QUANTUM_SLOTS,
    }
}

/// Center frequency (THz) of quantum slot `slot` of `band`.
///
/// C-band quantum slots are numbered 0..10 from the low-frequency edge of
/// the quantum block (193.55 THz); O-band slots 0..40 from 232.05 THz.
pub fn quantum_slot_center_thz(band: Band, slot: usize) -> f64 {
    debug_assert!(slot < quantum_slot_count(band));
    match band {
        Band::C => c_slot_center_thz(C_QUANTUM_FIRST + slot),
        Band::O => o_slot_center_thz(slot),
    }
}

/// Center frequencies of every quantum slot of `band`, ascending.
pub fn quantum_slots(band: Band) -> Vec<f64> {
    (0..quantum_slot_count(band))
        .map(|s| quantum_slot_center_thz(band, s))
        .collect()
}

/// C-band grid indices of the guard slots (never usable by any traffic).
pub fn guard_slot_indices() -> Vec<usize> {
    let mut v: Vec<usize> = (C_QUANTUM_FIRST - GUARD_SLOTS_PER_SIDE..C_QUANTUM_FIRST).collect();
    let after = C_QUANTUM_FIRST + C_QUANTUM_SLOTS;
    v.extend(after..after + GUARD_SLOTS_PER_SIDE);
    v
}

/// C-band grid indices usable by classical channels, ascending.
pub fn classical_slot_indices() -> Vec<usize> {
    let quantum_or_guard =
        C_QUANTUM_FIRST - GUARD_SLOTS_PER_SIDE..C_QUANTUM_FIRST + C_QUANTUM_SLOTS + GUARD_SLOTS_PER_SIDE;
    (0..BAND_SLOTS).filter(|i| !quantum_or_guard.contains(i)).collect()
}

/// Classical channel population of the C-band.
///
/// The occupied slot set is a deterministic function of the load fraction:
/// `n = round(fraction · 24)` slots are taken at indices `floor(i·24/n)` of
/// the ascending classical slot list, which yields every slot at full load
/// and every second slot at half load.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassicalLoad {
    fraction: f64,
    /// C-band grid indices of the occupied classical slots.
    slots: Vec<usize>,
    /// Per-channel restored power at each span input, W.
    power_w: f64,
}

impl ClassicalLoad {
    pub fn new(fraction: f64) -> Self {
        assert!((0.0..=1.0).contains(&fraction), "load fraction must be in [0,1]");
        let all = classical_slot_indices();
        let n = (fraction * C_CLASSICAL_SLOTS as f64).round() as usize;
        let slots = if n == 0 {
            Vec::new()
        } else {
            (0..n).map(|i| all[i * C_CLASSICAL_SLOTS / n]).collect()
        };
        Self { fraction, slots, power_w: CLASSICAL_POWER_W }
    }

    pub fn full() -> Self {
        Self::new(1.0)
    }

    pub fn half() -> Self {
        Self::new(0.5)
    }

    /// Load with an explicit slot set; test scaffolding for single-pump and
    /// sparse-spectrum cases.
    pub fn with_slots(slots: Vec<usize>) -> Self {
        let classical = classical_slot_indices();
        assert!(slots.iter().all(|s| classical.contains(s)), "slot outside the classical set");
        let fraction = slots.len() as f64 / C_CLASSICAL_SLOTS as f64;
        Self { fraction, slots, power_w: CLASSICAL_POWER_W }
    }

    pub fn fraction(&self) -> f64 {
        self.fraction
    }

    pub fn slot_indices(&self) -> &[usize] {
        &self.slots
    }

    pub fn power_w(&self) -> f64 {
        self.power_w
    }

    /// Center frequencies (THz) of the occupied classical channels, ascending.
    pub fn channel_freqs_thz(&self) -> Vec<f64> {
        self.slots.iter().map(|&i| c_slot_center_thz(i)).collect()
    }
}

/// Center frequencies (THz) of the classical channels under `load`.
pub fn classical_slots(load: &ClassicalLoad) -> Vec<f64> {
    load.channel_freqs_thz()
}

/// Piecewise-linear curve over frequency or detuning, clamped at both ends.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Curve {
    /// `(x, y)` breakpoints, strictly ascending in `x`.
    pub points: Vec<(f64, f64)>,
}

impl Curve {
    pub fn new(points: Vec<(f64, f64)>) -> Self {
        assert!(!points.is_empty(), "curve needs at least one point");
        assert!(
            points.windows(2).all(|w| w[0].0 < w[1].0),
            "curve breakpoints must be strictly ascending"
        );
        Self { points }
    }

    /// Linear interpolation; clamps to the first/last value outside the support.
    pub fn eval(&self, x: f64) -> f64 {
        let pts = &self.points;
        if x <= pts[0].0 {
            return pts[0].1;
        }
        if x >= pts[pts.len() - 1].0 {
            return pts[pts.len() - 1].1;
        }
        let k = pts.partition_point(|p| p.0 <= x);
        let (x0, y0) = pts[k - 1];
        let (x1, y1) = pts[k];
        y0 + (y1 - y0) * (x - x0) / (x1 - x0)
    }

    /// Scale every ordinate by `factor`.
    pub fn scaled(&self, factor: f64) -> Self {
        Self { points: self.points.iter().map(|&(x, y)| (x, y * factor)).collect() }
    }
}

/// Fiber construction of a link.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FiberKind {
    Ssmf,
    Hcf,
}

impl std::fmt::Display for FiberKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            FiberKind::Ssmf => f.write_str("ssmf"),
            FiberKind::Hcf => f.write_str("hcf"),
        }
    }
}

/// Physical description of one fiber type.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FiberProfile {
    pub kind: FiberKind,
    /// Attenuation vs frequency (THz → dB/km).
    pub attenuation_db_km: Curve,
    /// Raman power-transfer efficiency vs pump–probe detuning
    /// (THz → (km·GHz)⁻¹). Zero outside the tabulated support.
    pub raman_efficiency: Curve,
    /// Nonlinear coefficient γ, (W·km)⁻¹.
    pub gamma_w_km: f64,
    /// Chromatic dispersion vs frequency (THz → ps/(nm·km)).
    pub dispersion_ps_nm_km: Curve,
}

impl FiberProfile {
    pub fn attenuation_db_km(&self, freq_thz: f64) -> f64 {
        self.attenuation_db_km.eval(freq_thz)
    }

    pub fn raman_efficiency(&self, detuning_thz: f64) -> f64 {
        self.raman_efficiency.eval(detuning_thz.abs())
    }
}

/// The two fiber profiles of a deployment, indexed by [`FiberKind`].
#[derive(Debug, Clone, PartialEq)]
pub struct FiberCatalog {
    pub ssmf: FiberProfile,
    pub hcf: FiberProfile,
}

impl FiberCatalog {
    pub fn profile(&self, kind: FiberKind) -> &FiberProfile {
        match kind {
            FiberKind::Ssmf => &self.ssmf,
            FiberKind::Hcf => &self.hcf,
        }
    }
}

impl Default for FiberCatalog {
    fn default() -> Self {
        crate::config::FiberConfig::default().catalog()
    }
}

/// One fiber span of a subpath.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Span {
    pub fiber: FiberKind,
    pub length_km: f64,
}

/// A contiguous run of spans between two quantum modules (transmitter and
/// receiver, or relay equipment). Channels are allocated per subpath, so a
/// wavelength must be free on every link of it.
#[derive(Debug, Clone, PartialEq)]
pub struct Subpath {
    /// Link ids in path order; used for spectrum bookkeeping.
    pub link_ids: Vec<usize>,
    /// Fiber type and length of each span, in the same order.
    pub spans: Vec<Span>,
}

impl Subpath {
    pub fn new(link_ids: Vec<usize>, spans: Vec<Span>) -> Self {
        assert_eq!(link_ids.len(), spans.len());
        Self { link_ids, spans }
    }

    /// Subpath from bare spans; link ids are assigned positionally.
    /// Convenient for single-demand and curve computations.
    pub fn from_spans(spans: Vec<Span>) -> Self {
        let link_ids = (0..spans.len()).collect();
        Self { link_ids, spans }
    }

    /// Single span of the given fiber and length.
    pub fn single(fiber: FiberKind, length_km: f64) -> Self {
        Self::from_spans(vec![Span { fiber, length_km }])
    }

    pub fn total_km(&self) -> f64 {
        self.spans.iter().map(|s| s.length_km).sum()
    }

    /// Total insertion loss: launch mux plus one demux per node entered.
    pub fn insertion_db(&self) -> f64 {
        (self.spans.len() + 1) as f64 * INSERTION_LOSS_DB
    }
}

/// Linear end-to-end transmittance of `sp` at `freq_thz`, in (0, 1].
///
/// `T = 10^(−[Σ α_i(f)·L_i + (spans+1)·1 dB]/10)`.
pub fn subpath_transmittance(sp: &Subpath, freq_thz: f64, catalog: &FiberCatalog) -> f64 {
    let fiber_db: f64 = sp
        .spans
        .iter()
        .map(|s| catalog.profile(s.fiber).attenuation_db_km(freq_thz) * s.length_km)
        .sum();
    10f64.powf(-(fiber_db + sp.insertion_db()) / 10.0)
}

/// Forward SpRS noise power (W) scattered into the 100 GHz quantum slot at
/// `q_freq_thz`, referenced to the span output.
///
/// Co-propagating pump approximation: each classical channel at `ν_c`
/// contributes `P₀ · ρ(|ν_c − ν_q|) · Δν · L · 10^(−α(ν_q)·L/10)`.
/// O-band quantum slots see nothing: the ≈38 THz detuning lies beyond the
/// tabulated Raman support.
pub fn sprs_noise_power_w(
    span: &Span,
    q_freq_thz: f64,
    load: &ClassicalLoad,
    catalog: &FiberCatalog,
) -> f64 {
    let profile = catalog.profile(span.fiber);
    let alpha_db = profile.attenuation_db_km(q_freq_thz);
    let span_loss = 10f64.powf(-alpha_db * span.length_km / 10.0);
    load.channel_freqs_thz()
        .iter()
        .map(|&nu_c| {
            let rho = profile.raman_efficiency(nu_c - q_freq_thz);
            load.power_w() * rho * GRID_GHZ * span.length_km * span_loss
        })
        .sum()
}

const SPEED_OF_LIGHT_M_S: f64 = 2.997_924_58e8;

/// FWM product power (W) generated by classical triples that land on the
/// quantum slot at `q_freq_thz`, referenced to the span output.
///
/// Standard partially-degenerate FWM: for every classical pair `(i, j)`
/// (unordered) and classical pump `k ∉ {i, j}` with `ν_i + ν_j − ν_k = ν_q`,
///
/// `P = (d²/9) γ² P_i P_j P_k e^(−αL) L_eff² η_pm`,
///
/// degeneracy `d = 3` when `i = j`, else 6, with phase-matching efficiency
/// `η_pm` from the dispersion-induced mismatch
/// `Δβ = (2π λ_q²/c) D(ν_q) Δf_ik Δf_jk`.
pub fn fwm_noise_power_w(
    span: &Span,
    q_freq_thz: f64,
    load: &ClassicalLoad,
    catalog: &FiberCatalog,
) -> f64 {
    let slots = load.slot_indices();
    if slots.is_empty() || span.length_km == 0.0 {
        return 0.0;
    }
    // Classical pumps live on the C-band raster, so products ν_i + ν_j − ν_k
    // stay below 200 THz and can never reach the O-band.
    if !(C_BAND_START_THZ..=C_BAND_START_THZ + 4.0).contains(&q_freq_thz) {
        return 0.0;
    }
    let q_idx = ((q_freq_thz - c_slot_center_thz(0)) / 0.1).round() as i64;
    debug_assert!((c_slot_center_thz(q_idx as usize) - q_freq_thz).abs() < 1e-6);

    let mut classical = [false; BAND_SLOTS];
    for &s in slots {
        classical[s] = true;
    }

    let profile = catalog.profile(span.fiber);
    let alpha_lin = profile.attenuation_db_km(q_freq_thz) * std::f64::consts::LN_10 / 10.0; // 1/km
    let l = span.length_km;
    let span_att = (-alpha_lin * l).exp();
    let l_eff = (1.0 - span_att) / alpha_lin;
    let lambda_q_m = SPEED_OF_LIGHT_M_S / (q_freq_thz * 1e12);
    // D in ps/(nm·km) → s/(m·km)
    let d_si = profile.dispersion_ps_nm_km.eval(q_freq_thz) * 1e-3;
    let gamma = profile.gamma_w_km;
    let p = load.power_w();

    let mut total = 0.0;
    for (a, &i) in slots.iter().enumerate() {
        for &j in &slots[a..] {
            // raster arithmetic: ν_i + ν_j − ν_k = ν_q ⟺ k = i + j − q
            let k = i as i64 + j as i64 - q_idx;
            if k < 0 || k >= BAND_SLOTS as i64 {
                continue;
            }
            let k = k as usize;
            if !classical[k] || k == i || k == j {
                continue;
            }
            let degeneracy: f64 = if i == j { 3.0 } else { 6.0 };
            let df_ik = (i as f64 - k as f64).abs() * 0.1e12; // Hz
            let df_jk = (j as f64 - k as f64).abs() * 0.1e12;
            let delta_beta = 2.0 * std::f64::consts::PI * lambda_q_m * lambda_q_m
                / SPEED_OF_LIGHT_M_S
                * d_si
                * df_ik
                * df_jk; // rad/km
            let ratio = alpha_lin * alpha_lin / (alpha_lin * alpha_lin + delta_beta * delta_beta);
            let sin_term = (delta_beta * l / 2.0).sin();
            let eta_pm = ratio
                * (1.0 + 4.0 * span_att * sin_term * sin_term / ((1.0 - span_att) * (1.0 - span_att)));
            total += degeneracy * degeneracy / 9.0
                * gamma
                * gamma
                * p
                * p
                * p
                * span_att
                * l_eff
                * l_eff
                * eta_pm;
        }
    }
    total
}

/// Total SpRS + FWM noise power (W) of the whole subpath at `q_freq_thz`,
/// referenced to the receiver input.
///
/// Span `s` contributes its output noise attenuated by every downstream
/// span and by the demux at each node from the span's end to the receiver.
pub fn subpath_noise_power_w(
    sp: &Subpath,
    q_freq_thz: f64,
    load: &ClassicalLoad,
    catalog: &FiberCatalog,
) -> f64 {
    let n = sp.spans.len();
    let mut total = 0.0;
    for (s, span) in sp.spans.iter().enumerate() {
        let generated = sprs_noise_power_w(span, q_freq_thz, load, catalog)
            + fwm_noise_power_w(span, q_freq_thz, load, catalog);
        if generated == 0.0 {
            continue;
        }
        let downstream_fiber_db: f64 = sp.spans[s + 1..]
            .iter()
            .map(|d| catalog.profile(d.fiber).attenuation_db_km(q_freq_thz) * d.length_km)
            .sum();
        let downstream_insertion_db = (n - s) as f64 * INSERTION_LOSS_DB;
        total += generated * 10f64.powf(-(downstream_fiber_db + downstream_insertion_db) / 10.0);
    }
    total
}
