//! Computing QFI series for every (state, provenance) item of a scenario.

use ftc_sensor::floquet::{diagonalize, CatPair, FloquetSpectrum};
use ftc_sensor::hso::{hso_nlr, overlap_matrix, NlrMode, OverlapMatrix};
use ftc_sensor::oracle::qfi_finite_difference;
use ftc_sensor::qfi::{
    cat_overlap, make_initial_state, qfi_closed_single_pair, qfi_from_hso, qfi_series, HsoKind,
    InitialState, Provenance, QfiError, QfiSeries, StateFamily,
};
use ftc_sensor::signal::{Shape, SignalSpec};
use ftc_sensor::spin::build_collective_operators;
use rayon::prelude::*;

use crate::config::Scenario;
use crate::CliError;

fn numerical<E: std::fmt::Display>(e: E) -> CliError {
    CliError::Numerical(e.to_string())
}

/// Spectrum, overlaps, grid and initial states shared by all items.
pub struct Prepared {
    pub spec: FloquetSpectrum,
    pub o: OverlapMatrix,
    pub grid: Vec<usize>,
    pub states: Vec<(StateFamily, InitialState)>,
}

pub fn prepare(scn: &Scenario) -> Result<Prepared, CliError> {
    let (_, grid) = scn.dynamics()?;
    let grid = grid.indices()?;
    let spec = diagonalize(&scn.params, scn.precision_mode()?).map_err(numerical)?;
    let sz = build_collective_operators(scn.params.n).map_err(numerical)?.sz;
    let o = overlap_matrix(&spec, &sz).map_err(numerical)?;
    let states = scn
        .states
        .iter()
        .map(|f| match make_initial_state(&spec, f.clone()) {
            Ok(psi) => Ok((f.clone(), psi)),
            Err(QfiError::InvalidState(m)) => Err(CliError::Usage(format!("state {}: {m}", f.tag()))),
            Err(e) => Err(numerical(e)),
        })
        .collect::<Result<_, _>>()?;
    Ok(Prepared { spec, o, grid, states })
}

#[derive(Debug)]
pub enum ItemError {
    /// The provenance cannot handle this state, signal or size.
    Incompatible(String),
    Numerical(String),
}

impl ItemError {
    pub fn status(&self) -> &'static str {
        match self {
            ItemError::Incompatible(_) => "incompatible",
            ItemError::Numerical(_) => "error",
        }
    }

    pub fn message(&self) -> &str {
        match self {
            ItemError::Incompatible(m) | ItemError::Numerical(m) => m,
        }
    }
}

fn item_numerical<E: std::fmt::Display>(e: E) -> ItemError {
    ItemError::Numerical(e.to_string())
}

pub struct Computed {
    pub series: QfiSeries,
    /// Oracle points whose finite difference did not settle under halving.
    pub flagged: Vec<usize>,
}

pub struct Item {
    pub state: StateFamily,
    pub provenance: Provenance,
    pub p_cat: f64,
    pub outcome: Result<Computed, ItemError>,
}

pub fn compute_all(scn: &Scenario, prep: &Prepared) -> Result<Vec<Item>, CliError> {
    let (sig, _) = scn.dynamics()?;
    let jobs: Vec<(usize, Provenance)> = (0..prep.states.len())
        .flat_map(|i| scn.provenance.iter().map(move |&p| (i, p)))
        .collect();
    jobs.par_iter()
        .map(|&(i, prov)| {
            let (family, psi) = &prep.states[i];
            log::info!("N = {}, B = {}: {} / {prov}", scn.params.n, scn.params.b, family.tag());
            Ok(Item {
                state: family.clone(),
                provenance: prov,
                p_cat: cat_overlap(&prep.spec, psi).map_err(numerical)?,
                outcome: compute(scn, prep, sig, family, psi, prov),
            })
        })
        .collect()
}

fn compute(scn: &Scenario, prep: &Prepared, sig: &SignalSpec, family: &StateFamily, psi: &InitialState, prov: Provenance) -> Result<Computed, ItemError> {
    let grid = &prep.grid;
    let series = match prov {
        Provenance::HsoFull | Provenance::HsoBlock if sig.h == 0.0 => {
            let kind = if prov == Provenance::HsoFull { HsoKind::Full } else { HsoKind::Block };
            qfi_series(&prep.spec, &prep.o, sig, psi, grid, kind).map_err(item_numerical)?
        }
        Provenance::HsoFull | Provenance::HsoBlock => {
            if sig.shape != Shape::HeavisidePdr {
                return Err(ItemError::Incompatible(format!(
                    "{prov} at h = {} needs the heaviside-pdr shape, got {}",
                    sig.h,
                    sig.shape.name()
                )));
            }
            let mode = if prov == Provenance::HsoFull { NlrMode::Exact } else { NlrMode::Perturbative };
            let values = grid
                .par_iter()
                .map(|&n| {
                    let s = hso_nlr(&prep.spec, &prep.o, sig.h, sig, n, mode).map_err(QfiError::from)?;
                    qfi_from_hso(psi, &s)
                })
                .collect::<Result<Vec<_>, _>>()
                .map_err(item_numerical)?;
            series_from(prep, prov, values)
        }
        Provenance::ClosedForm => closed_form(prep, sig, family)?,
        Provenance::Oracle => {
            let cap = &scn.oracle;
            if scn.params.n > cap.cap {
                return Err(ItemError::Incompatible(format!("oracle is capped at N = {}, got {}", cap.cap, scn.params.n)));
            }
            let last = grid.last().copied().unwrap_or(0);
            if last > cap.max_periods {
                return Err(ItemError::Incompatible(format!(
                    "oracle is capped at {} periods, grid reaches {last}",
                    cap.max_periods
                )));
            }
            let fd = qfi_finite_difference(&psi.vector, &scn.params, sig, sig.h, grid, &cap.propagation)
                .map_err(item_numerical)?;
            return Ok(Computed {
                series: fd.series,
                flagged: fd.flagged,
            });
        }
    };
    Ok(Computed { series, flagged: Vec::new() })
}

fn series_from(prep: &Prepared, provenance: Provenance, values: Vec<f64>) -> QfiSeries {
    let p = prep.spec.params();
    QfiSeries {
        n: prep.grid.clone(),
        times: prep.grid.iter().map(|&n| n as f64 * p.t).collect(),
        values,
        n_spins: p.n,
        provenance,
    }
}

/// `(pair, θ, φ)` of a state living inside one doublet.
fn pair_angles(spec: &FloquetSpectrum, family: &StateFamily) -> Option<(CatPair, f64, f64)> {
    match family {
        StateFamily::PairSuperposition { pair, theta, phi } => spec.pairs().get(*pair).map(|p| (p.clone(), *theta, *phi)),
        StateFamily::FloquetEigenstate { index } => spec.pair_of(*index).map(|p| {
            let theta = if p.upper == *index { 0.0 } else { std::f64::consts::PI };
            (p.clone(), theta, 0.0)
        }),
        _ => None,
    }
}

fn closed_form(prep: &Prepared, sig: &SignalSpec, family: &StateFamily) -> Result<QfiSeries, ItemError> {
    if sig.h != 0.0 {
        return Err(ItemError::Incompatible("closed-form is linear response only (h = 0)".into()));
    }
    if !matches!(sig.shape, Shape::Sinusoidal | Shape::HeavisidePdr) {
        return Err(ItemError::Incompatible(format!(
            "closed-form needs a sinusoidal or heaviside-pdr shape, got {}",
            sig.shape.name()
        )));
    }
    let (pair, theta, phi) = pair_angles(&prep.spec, family).ok_or_else(|| {
        ItemError::Incompatible(format!("closed-form needs a state inside one doublet, got {}", family.tag()))
    })?;
    let z = prep.o.get(pair.upper, pair.lower).norm();
    let delta = pair.gap_f64();
    let period = prep.spec.params().t;
    let values = prep
        .grid
        .iter()
        .map(|&n| qfi_closed_single_pair(z, delta, n as f64 * period, theta, phi, sig.phi, &sig.shape))
        .collect::<Result<Vec<_>, _>>()
        .map_err(item_numerical)?;
    Ok(series_from(prep, Provenance::ClosedForm, values))
}
