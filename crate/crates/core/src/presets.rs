//! Named parameter sets shipped with the library.
//!
//! Values are chosen for a 1 ms fast timescale and nanoampere currents, the
//! range of the fabricated circuit. All are given in SI units.

use crate::model::{BiasConfiguration, SigmoidParams};

pub const NAMES: [&str; 3] = ["tonic-spiker", "burster", "resting"];

const MS: f64 = 1e-3;
const NA: f64 = 1e-9;

/// Builds a configuration from times in ms and currents in nA:
/// `[tau_f, tau_s, tau_u, g_f, g_s, g_u, thr_f, lin_f, gf0, thr_s, lin_s, gs0]`.
fn from_table(p: [f64; 12], inactivation: bool) -> BiasConfiguration {
    BiasConfiguration {
        tau_f: p[0] * MS,
        tau_s: p[1] * MS,
        tau_u: p[2] * MS,
        g_f: p[3],
        g_s: p[4],
        g_u: p[5],
        sig_f: SigmoidParams::new(p[6] * NA, p[7] * NA, p[8] * NA),
        sig_s: SigmoidParams::new(p[9] * NA, p[10] * NA, p[11] * NA),
        inactivation_enabled: inactivation,
        rectify_filter_inputs: true,
    }
}

/// Slow positive feedback too weak to open a slow window before the fast one:
/// tonic spiking only. Fires tonically for constant inputs of about 3 to 7 nA.
pub fn tonic_spiker() -> BiasConfiguration {
    from_table([1.0, 20.027, 287.102, 1.0, 9.703, 0.136, 0.323, 1.196, 10.0, 1.402, 0.604, 0.3], false)
}

/// Slow window opening before the fast one: bursting-capable. Bursts for
/// constant inputs of about 1.2 to 2.4 nA and spikes tonically above.
pub fn burster() -> BiasConfiguration {
    from_table([1.0, 4.85, 181.4948, 1.0, 6.4827, 2.9894, 0.1291, 1.4632, 10.0, 0.7938, 0.3755, 0.614], false)
}

/// Fast positive feedback below unit loop gain: no fast window, a single
/// stable rest point for every input.
pub fn resting() -> BiasConfiguration {
    from_table([1.0, 20.0, 1000.0, 1.0, 6.0, 1.0, 0.5, 4.0, 1.0, 2.0, 2.0, 0.0], false)
}

pub fn get(name: &str) -> Option<BiasConfiguration> {
    match name {
        "tonic-spiker" => Some(tonic_spiker()),
        "burster" => Some(burster()),
        "resting" => Some(resting()),
        _ => None,
    }
}

pub fn all() -> Vec<(&'static str, BiasConfiguration)> {
    NAMES.iter().map(|&n| (n, get(n).expect("listed preset"))).collect()
}
