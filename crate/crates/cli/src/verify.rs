//! Identity and inequality checks run by `kmuc verify`.

use kmuc::capacity::{check_dpi, continuity_gap, BipartiteSplit};
use kmuc::channels::{random_channel, ConnectionGraph, KrausChannel};
use kmuc::fidelities::{
    average_fidelity_exact, average_fidelity_mc, group_channel_fidelity, pure_state_fidelity, FidelityMode,
};
use kmuc::fixtures::random_density;
use kmuc::optim::SearchBudget;
use kmuc::protocols::{default_ensembles, phase_average_bound, twirl_channel, DesignKind, UnitaryEnsemble};
use kmuc::rng::Stream;
use kmuc::tensor::{haar_state, SubspaceBasis, SystemLayout, C64};
use kmuc::Result;

use crate::output::{Cell, Table};

/// Floor on the Monte Carlo standard error, for integrands that are constant.
const STDERR_FLOOR: f64 = 1e-13;

#[derive(Clone, Debug)]
pub struct Settings {
    pub samples: usize,
    pub tol_exact: f64,
    pub tol_stat: f64,
    pub ensemble_size: usize,
    pub trials: usize,
    pub restarts: usize,
}

#[derive(Clone, Debug)]
pub struct Check {
    pub subject: String,
    pub name: &'static str,
    pub mode: &'static str,
    pub measured: f64,
    pub tolerance: f64,
    pub passed: bool,
}

pub const HEADER: [&str; 6] = ["subject", "check", "mode", "status", "measured", "tolerance"];

pub fn push_rows(table: &mut Table, checks: &[Check]) {
    for c in checks {
        table.push(vec![
            Cell::from(c.subject.as_str()),
            c.name.into(),
            c.mode.into(),
            (if c.passed { "pass" } else { "fail" }).into(),
            c.measured.into(),
            c.tolerance.into(),
        ]);
    }
}

/// All checks for one channel. Each check draws from its own substream of
/// `rng`, so adding or reordering checks does not shift the others.
pub fn run(
    subject: &str,
    ch: &KrausChannel,
    graph: &ConnectionGraph,
    s: &Settings,
    rng: &Stream,
) -> Result<Vec<Check>> {
    let check = |name, mode, measured, tolerance, passed| Check {
        subject: subject.to_string(),
        name,
        mode,
        measured,
        tolerance,
        passed,
    };
    let mut out = Vec::new();

    let g = graph.len();
    let mut worst: f64 = 0.0;
    for mask in 1u32..(1 << g) {
        let subset: Vec<usize> = (0..g).filter(|&i| mask & (1 << i) != 0).collect();
        let a = group_channel_fidelity(ch, graph, &subset, FidelityMode::Definition)?;
        let b = group_channel_fidelity(ch, graph, &subset, FidelityMode::KrausTrace)?;
        worst = worst.max((a - b).abs());
    }
    out.push(check(
        "route_equality",
        "exact",
        worst,
        s.tol_exact,
        worst <= s.tol_exact,
    ));

    let exact = average_fidelity_exact(ch, graph)?;
    let mc = average_fidelity_mc(ch, graph, s.samples, &rng.substream(1))?;
    let z = (mc.mean - exact).abs() / mc.stderr.max(STDERR_FLOOR);
    out.push(check(
        "average_exact_vs_mc",
        "statistical",
        z,
        s.tol_stat,
        z < s.tol_stat,
    ));

    let ensembles = default_ensembles(graph, s.ensemble_size, &rng.substream(2))?;
    let twirled = twirl_channel(ch, graph, &ensembles)?;
    let mut probe = rng.substream(3);
    let probes: Vec<Vec<Vec<C64>>> = (0..20)
        .map(|_| graph.ref_dims().iter().map(|&d| haar_state(d, &mut probe)).collect())
        .collect();
    if ensembles.iter().all(|e| e.kind() == DesignKind::Exact) {
        let mut dev: f64 = 0.0;
        for p in &probes {
            dev = dev.max((pure_state_fidelity(&twirled, graph, p)? - exact).abs());
        }
        out.push(check("two_design", "exact", dev, s.tol_exact, dev <= s.tol_exact));
    } else {
        // One probe only, so the tolerance is a plain z-score bound.
        let p = &probes[0];
        let tw = pure_state_fidelity(&twirled, graph, p)?;
        let se = ensemble_stderr(ch, graph, &ensembles, p)?;
        let z = (tw - exact).abs() / se.max(STDERR_FLOOR);
        out.push(check(
            "two_design",
            "statistical (sampled ensemble)",
            z,
            s.tol_stat,
            z < s.tol_stat,
        ));
    }

    let ref_layout = SystemLayout::single(ch.in_dim())?.concat(ch.in_layout())?;
    let out_layout = SystemLayout::single(ch.in_dim())?.concat(ch.out_layout())?;
    let split = BipartiteSplit::new(out_layout.clone(), vec![0], (1..out_layout.num_legs()).collect())?;
    let mut sweep = rng.substream(4);
    let mut dpi_min = f64::INFINITY;
    let mut cont_min = f64::INFINITY;
    for _ in 0..s.trials {
        let rho = ch.apply_with_reference(&random_density(&ref_layout, &mut sweep)?, 1)?;
        let sigma = ch.apply_with_reference(&random_density(&ref_layout, &mut sweep)?, 1)?;
        let post = random_channel(ch.out_layout(), ch.out_layout(), 2, &mut sweep)?;
        dpi_min = dpi_min.min(check_dpi(&rho, &split, &post)?);
        let gap = continuity_gap(&rho, &sigma, &split)?;
        cont_min = cont_min.min(gap.rhs - gap.lhs);
    }
    out.push(check(
        "data_processing",
        "sweep",
        dpi_min,
        s.tol_exact,
        dpi_min >= -s.tol_exact,
    ));
    out.push(check(
        "continuity",
        "sweep",
        cont_min,
        s.tol_exact,
        cont_min >= -s.tol_exact,
    ));

    let full: Vec<SubspaceBasis> = graph.ref_dims().iter().map(|&d| SubspaceBasis::full(d)).collect();
    let budget = SearchBudget::new(s.restarts, rng.substream(5).next_u64());
    let bound = phase_average_bound(ch, graph, &full, &budget)?;
    let margin = bound.fe - bound.rhs;
    out.push(check(
        "phase_average_bound",
        "heuristic",
        margin,
        s.tol_exact,
        bound.holds(s.tol_exact),
    ));
    Ok(out)
}

/// Standard error of the twirled fidelity at `probe`, viewed as a mean over
/// the product ensemble.
fn ensemble_stderr(
    ch: &KrausChannel,
    graph: &ConnectionGraph,
    ensembles: &[UnitaryEnsemble],
    probe: &[Vec<C64>],
) -> Result<f64> {
    let sizes: Vec<usize> = ensembles.iter().map(|e| e.len()).collect();
    let total: usize = sizes.iter().product();
    let (mut sum, mut sq) = (0.0, 0.0);
    for flat in 0..total {
        let mut rest = flat;
        let mut states = Vec::with_capacity(probe.len());
        for (i, e) in ensembles.iter().enumerate().rev() {
            let u = &e.elements()[rest % sizes[i]];
            rest /= sizes[i];
            let v = &probe[i];
            states.push(
                (0..v.len())
                    .map(|r| (0..v.len()).map(|c| u[(r, c)] * v[c]).sum())
                    .collect(),
            );
        }
        states.reverse();
        let f = pure_state_fidelity(ch, graph, &states)?;
        sum += f;
        sq += f * f;
    }
    let n = total as f64;
    if total < 2 {
        return Ok(0.0);
    }
    let mean = sum / n;
    Ok((((sq - n * mean * mean) / (n - 1.0)).max(0.0) / n).sqrt())
}
