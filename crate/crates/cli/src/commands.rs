//! One function per subcommand, each filling a [`Certificate`].

use clap::ValueEnum;
use inclusion_teleport::inclusion::markov_trace;
use inclusion_teleport::pp_basis::cardinality_test;
use inclusion_teleport::qgraph::{
    chromatic_bounds, colouring_factor_case, colouring_from_basis, factor_frame, graph_from_inclusion,
    lower_bound_certificate, standard_graph, verify_colouring, Colouring, Compression, GraphBounds, QuantumGraph,
};
use inclusion_teleport::teleport::{
    build_direct_sum, build_standard, build_unbiased, build_werner_scheme, locc_unitaries, werner_extract,
    Classification, TeleportationScheme,
};
use inclusion_teleport::{linalg, CMatrix64, Inclusion, PPBasis, Report, Tower};
use serde_json::{json, Value};

use crate::input::{named_matrix, sample_element, Family};
use crate::output::{matrix, Certificate};
use crate::CliError;

/// Operator tolerance for rebuilding a scheme from its extracted data.
const ROUND_TRIP: f64 = 1e-8;

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Scheme {
    Standard,
    DirectSum,
    Unbiased,
    Werner,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum GraphTask {
    ColourFactor,
    ColourBasis,
    Bounds,
}

fn core(e: inclusion_teleport::Error) -> CliError {
    CliError::Core(e)
}

pub fn inclusion_info(inc: &Inclusion<f64>, tol: f64, cert: &mut Certificate) -> Result<(), CliError> {
    cert.derive("ambient_dim", inc.ambient_dim());
    cert.derive("small_blocks", inc.small().block_shape());
    cert.derive("big_blocks", inc.big().block_shape());
    cert.derive("small_dim", inc.small().dim());
    cert.derive("big_dim", inc.big().dim());
    cert.derive("inclusion_matrix", inc.inclusion_matrix());
    cert.derive("connected", inc.is_connected());
    cert.derive("trace_weights", inc.trace().weights());
    cert.derive("markov_trace", inc.has_markov_trace(tol));
    match markov_trace(inc.small(), inc.big()) {
        Ok(t) => cert.derive("markov_weights", t.weights()),
        Err(e) => cert.note(format!("no Markov trace: {e}")),
    }
    match inc.index() {
        Ok(index) => cert.derive("index", index),
        Err(e) => cert.note(format!("index undefined: {e}")),
    }
    cert.derive("relative_commutant_dim", inc.relative_commutant(tol).map_err(core)?.dim());
    Ok(())
}

pub fn basis(basis: &PPBasis<f64>, label: &str, verify: bool, tol: f64, cert: &mut Certificate) -> Result<(), CliError> {
    cert.derive("family", label);
    cert.derive("size", basis.len());
    if let Ok(index) = basis.inclusion().index() {
        cert.derive("index", index);
    }
    if !verify {
        cert.derive("elements", basis.elements().iter().map(matrix).collect::<Vec<_>>());
        return Ok(());
    }
    let verified = basis.verify(tol).map_err(core)?;
    let f = verified.flags;
    cert.derive(
        "flags",
        json!({
            "complete": f.complete,
            "orthonormal": f.orthonormal,
            "unitary": f.unitary,
            "in_normaliser": f.in_normaliser,
        }),
    );
    cert.checks("basis", &verified.report);
    cert.checks("cardinality", &cardinality_test(basis, &verified).map_err(core)?);
    Ok(())
}

fn option_flag(flag: Option<bool>) -> Value {
    flag.map_or(Value::Null, Value::Bool)
}

fn classification(c: &Classification<f64>) -> Value {
    json!({
        "outcomes": c.outcomes,
        "source_dim": c.source_dim,
        "tight": option_flag(c.flags.tight),
        "unbiased": option_flag(c.flags.unbiased),
        "faithful": option_flag(c.flags.faithful),
        "minimal": option_flag(c.flags.minimal),
        "unbiased_value": c.unbiased_value,
        "unbiased_residual": c.unbiased_residual,
        "sampled_unbiased_residual": c.sampled_unbiased_residual,
        "reformulation_residual": c.reformulation_residual,
        "min_outcome_eigenvalue": c.min_outcome_eigenvalue,
        "minimality_residual": c.minimality_residual,
        "zero_probability_witness": c.zero_probability_witness.as_ref().map(|w| json!({
            "outcome": w.outcome,
            "probability": w.probability,
            "density": matrix(&w.density),
        })),
        "locc": c.locc,
    })
}

/// Verification, classification and one seeded sample of the teleportation identity.
fn record_scheme(scheme: &TeleportationScheme<f64>, tol: f64, seed: u64, cert: &mut Certificate) {
    match scheme.verify(tol) {
        Ok(report) => cert.checks("scheme", &report),
        Err(e) => {
            cert.checks("scheme", &scheme.audit(tol));
            cert.fail(e);
        }
    }
    let a = sample_element(scheme.context().source_basis(), seed);
    let mut sample = Report::new();
    sample.record("teleported_equals_input", linalg::frobenius_distance(&scheme.teleport(&a), &a), tol);
    cert.checks("sample", &sample);
    cert.derive("classification", classification(&scheme.classify(tol)));
}

pub struct WernerArgs<'a> {
    pub unitary: &'a str,
    pub density: &'a str,
    pub extract: bool,
}

pub fn teleport(
    inc: &Inclusion<f64>,
    scheme: Scheme,
    family: Option<Family>,
    werner: WernerArgs<'_>,
    tol: f64,
    seed: u64,
    cert: &mut Certificate,
) -> Result<(), CliError> {
    let pick = |default: Family| -> Result<(PPBasis<f64>, Family), CliError> {
        let f = family.unwrap_or(default);
        Ok((f.basis(inc, tol)?, f))
    };
    match scheme {
        Scheme::Standard => {
            let (basis, f) = pick(Family::Weyl)?;
            cert.derive("family", f.name());
            let s = build_standard(&basis, tol).map_err(core)?;
            record_scheme(&s, tol, seed, cert);
        }
        Scheme::DirectSum => {
            cert.derive("summands", inc.big().block_shape());
            let s = build_direct_sum(inc.big(), tol).map_err(core)?;
            record_scheme(&s, tol, seed, cert);
        }
        Scheme::Unbiased => {
            let (basis, f) = pick(Family::Normaliser)?;
            cert.derive("family", f.name());
            let tower = Tower::build(inc.clone(), tol).map_err(core)?;
            cert.derive("index", tower.index().map_err(core)?);
            let s = build_unbiased(&tower, &basis).map_err(core)?;
            record_scheme(&s, tol, seed, cert);
            match locc_unitaries(&tower, &basis) {
                Ok(locc) => cert.checks("locc", &locc.report),
                Err(e) => cert.fail(e),
            }
        }
        Scheme::Werner => {
            let (basis, f) = pick(Family::Normaliser)?;
            cert.derive("family", f.name());
            let n = inc.ambient_dim();
            let u = named_matrix(werner.unitary, n)?;
            let z = named_matrix(werner.density, n)?;
            let s = build_werner_scheme(inc, &basis, &u, &z, tol).map_err(core)?;
            record_scheme(&s, tol, seed, cert);
            if werner.extract {
                let triple = werner_extract(&s, tol).map_err(core)?;
                let mut r = Report::new();
                r.record("round_trip", triple.round_trip_residual, ROUND_TRIP);
                cert.checks("extract", &r);
                cert.derive(
                    "extracted",
                    json!({
                        "basis": triple.basis.elements().iter().map(matrix).collect::<Vec<_>>(),
                        "unitary": matrix(&triple.unitary),
                        "density": matrix(&triple.density),
                    }),
                );
            }
        }
    }
    Ok(())
}

fn record_colouring(
    g: &QuantumGraph<f64>,
    col: &Colouring<f64>,
    compression: &Compression<f64>,
    tol: f64,
    cert: &mut Certificate,
) -> Result<(), CliError> {
    cert.derive("colours", col.colours());
    cert.derive("ancilla_dim", col.ancilla().ambient_dim());
    cert.checks("colouring", &verify_colouring(g, col, tol).map_err(core)?);
    match lower_bound_certificate(g, col, compression, tol) {
        Ok(c) => {
            cert.derive("lower_bound", c.bound);
            cert.checks("certificate", &c.report);
        }
        Err(e) => cert.fail(e),
    }
    Ok(())
}

fn bounds_json(b: &GraphBounds) -> Value {
    json!({ "lower": b.lower, "upper": b.upper, "tight": b.is_tight(), "notes": b.notes })
}

pub fn graph(
    inc: &Inclusion<f64>,
    task: GraphTask,
    family: Option<Family>,
    tol: f64,
    cert: &mut Certificate,
) -> Result<(), CliError> {
    match task {
        GraphTask::ColourFactor => {
            let frame = factor_frame(inc, tol).map_err(core)?;
            let (_, g) = graph_from_inclusion(inc, tol).map_err(core)?;
            cert.derive("graph", "commutant");
            let col = colouring_factor_case(inc, tol).map_err(core)?;
            record_colouring(&g, &col, &Compression::Factor(frame), tol, cert)?;
        }
        GraphTask::ColourBasis => {
            let f = family.unwrap_or(Family::Normaliser);
            let basis = f.basis(inc, tol)?;
            cert.derive("family", f.name());
            cert.derive("graph", "standard");
            let tower = Tower::build(inc.clone(), tol).map_err(core)?;
            let g = standard_graph(&tower).map_err(core)?;
            let col = colouring_from_basis(&tower, &basis).map_err(core)?;
            let units: Vec<CMatrix64> = basis.elements().iter().map(|u| tower.lift(u)).collect();
            record_colouring(&g, &col, &Compression::Normaliser(units), tol, cert)?;
        }
        GraphTask::Bounds => {
            let bounds = chromatic_bounds(inc, tol);
            for (key, b) in [("commutant_graph", &bounds.commutant_graph), ("standard_graph", &bounds.standard_graph)] {
                cert.derive(key, bounds_json(b));
                if let Some(r) = &b.colouring {
                    cert.checks(&format!("{key}.colouring"), r);
                }
                if let Some(r) = &b.certificate {
                    cert.checks(&format!("{key}.certificate"), r);
                }
                if !b.is_tight() {
                    cert.note(format!("{key}: bounds leave a gap"));
                }
            }
        }
    }
    Ok(())
}
