//! Command implementations shared by the CLI and the tests. Every command
//! produces a JSON report carrying `schema_version`.

use serde::Serialize;
use serde_json::{json, Value};
use thiserror::Error;

use crate::cohomology::{build_algebra, GradedAlgebra};
use crate::connection::{
    birkhoff_extract, compare_quantum_rings, flatness_report, origin_connection, pairing_report, residue_nilpotency,
    ConnectionData,
};
use crate::fan::{
    classify_fano, exact_sequence, mori_nef_cones, normalized_volume, primitive_relations, semigroup_report,
    validate_fan, ExactSequenceData, FanData, FanoClass, PrimitiveRelation,
};
use crate::fanfile::FanFile;
use crate::gkz::{
    ambient_box_operators, batyrev_quantum_ring, euler_operator, principal_symbol, reduced_box_operator,
    symbol_quotient_dimension, BoxVariant, GkzError, QuantumRing, RingMode,
};
use crate::ifunction::{
    build_i, build_i_tilde, check_annihilation, invert_and_substitute, mirror_map, IFunction, MirrorMap,
};
use crate::weyl::WeylOperator;

pub const SCHEMA_VERSION: &str = "1";

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Command {
    CheckFan,
    Classify,
    ExactSeq,
    Mori,
    Cohomology,
    GkzOps,
    Qring,
    IFunction,
    MirrorMap,
    Connection,
    Verify,
}

impl Command {
    pub fn name(self) -> &'static str {
        match self {
            Command::CheckFan => "check-fan",
            Command::Classify => "classify",
            Command::ExactSeq => "exact-seq",
            Command::Mori => "mori",
            Command::Cohomology => "cohomology",
            Command::GkzOps => "gkz-ops",
            Command::Qring => "qring",
            Command::IFunction => "ifunction",
            Command::MirrorMap => "mirror-map",
            Command::Connection => "connection",
            Command::Verify => "verify",
        }
    }
}

#[derive(Clone, Debug)]
pub struct RunConfig {
    pub input: String,
    pub command: Command,
    pub order: u32,
    pub bound: u32,
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum PipelineError {
    /// Bad input: the fan or nef basis is unusable.
    #[error("{stage}: {message}")]
    Input { stage: String, message: String },
    /// A mathematical check failed.
    #[error("{stage}: {error}")]
    Verification { stage: String, error: String, witness: Value },
}

impl PipelineError {
    pub fn exit_code(&self) -> i32 {
        match self {
            PipelineError::Input { .. } => 2,
            PipelineError::Verification { .. } => 1,
        }
    }

    pub fn to_json(&self) -> Value {
        match self {
            PipelineError::Input { stage, message } => json!({"kind": "input", "stage": stage, "error": message}),
            PipelineError::Verification { stage, error, witness } => {
                json!({"kind": "verification", "stage": stage, "error": error, "witness": witness})
            }
        }
    }
}

fn input_err(stage: &str, e: impl std::fmt::Display) -> PipelineError {
    PipelineError::Input { stage: stage.to_string(), message: e.to_string() }
}

fn verify_err(stage: &str, e: impl std::fmt::Display, witness: Value) -> PipelineError {
    PipelineError::Verification { stage: stage.to_string(), error: e.to_string(), witness }
}

fn to_value<T: Serialize>(x: &T) -> Value {
    serde_json::to_value(x).expect("reports serialize")
}

/// The data every stage past the exact sequence needs.
struct Context {
    fan: FanData,
    esd: ExactSequenceData,
    prels: Vec<PrimitiveRelation>,
}

impl Context {
    fn new(file: &FanFile) -> Result<Self, PipelineError> {
        validate_fan(&file.fan).map_err(|e| input_err("validate", e))?;
        let esd = exact_sequence(&file.fan, file.nef_basis.as_deref()).map_err(|e| input_err("exact_sequence", e))?;
        let prels = primitive_relations(&file.fan, &esd);
        Ok(Self { fan: file.fan.clone(), esd, prels })
    }

    fn algebra(&self) -> Result<GradedAlgebra, PipelineError> {
        build_algebra(&self.fan, &self.esd, &self.prels).map_err(|e| verify_err("build_algebra", e, Value::Null))
    }

    fn nef_generators(&self) -> Vec<Vec<i64>> {
        mori_nef_cones(&self.fan, &self.esd).nef_generators
    }
}

/// Graded-exact when the grading allows it, otherwise truncated at `order`.
fn quantum_ring(ctx: &Context, ga: &GradedAlgebra, order: u32) -> Result<QuantumRing, PipelineError> {
    match batyrev_quantum_ring(&ctx.esd, ga, &ctx.prels, RingMode::GradedExact) {
        Err(GkzError::GradingNotPositive) | Err(GkzError::GradedOverflow(_)) => {
            batyrev_quantum_ring(&ctx.esd, ga, &ctx.prels, RingMode::QTruncated(order))
        }
        other => other,
    }
    .map_err(|e| verify_err("batyrev_ring", e, Value::Null))
}

fn ring_json(ring: &QuantumRing) -> Value {
    json!({
        "mode": match ring.mode { RingMode::GradedExact => "graded-exact".to_string(), RingMode::QTruncated(n) => format!("q-truncated({n})") },
        "order": ring.order,
        "basis": ring.labels,
        "relations": ring.relations,
        "matrices": ring.matrices,
    })
}

fn operator_json(op: &WeylOperator) -> Value {
    json!({"text": op.to_string(), "terms": op.term_list()})
}

pub fn run(cfg: &RunConfig, file: &FanFile) -> Result<Value, PipelineError> {
    let body = match cfg.command {
        Command::CheckFan => check_fan(file)?,
        Command::Classify => classify(file)?,
        Command::ExactSeq => exact_seq(file)?,
        Command::Mori => mori(file, cfg.bound)?,
        Command::Cohomology => cohomology(file)?,
        Command::GkzOps => gkz_ops(file)?,
        Command::Qring => qring(file, cfg.order)?,
        Command::IFunction => ifunction(file, cfg.order)?,
        Command::MirrorMap => mirror(file, cfg.order)?,
        Command::Connection => connection(file, cfg.order)?,
        Command::Verify => return verify(cfg, file),
    };
    Ok(envelope(cfg, body))
}

fn envelope(cfg: &RunConfig, body: Value) -> Value {
    json!({
        "schema_version": SCHEMA_VERSION,
        "command": cfg.command.name(),
        "input": cfg.input,
        "order": cfg.order,
        "result": body,
    })
}

fn check_fan(file: &FanFile) -> Result<Value, PipelineError> {
    let rep = validate_fan(&file.fan).map_err(|e| input_err("validate", e))?;
    Ok(json!({"n": file.fan.rank, "m": file.fan.num_rays(), "report": rep}))
}

fn classify(file: &FanFile) -> Result<Value, PipelineError> {
    validate_fan(&file.fan).map_err(|e| input_err("validate", e))?;
    let class = classify_fano(&file.fan);
    Ok(json!({"class": class, "fano": class == FanoClass::Fano, "weak_fano": class.is_weak_fano()}))
}

fn exact_seq(file: &FanFile) -> Result<Value, PipelineError> {
    let ctx = Context::new(file)?;
    Ok(json!({"exact_sequence": ctx.esd, "euler_weights": ctx.esd.rho}))
}

fn mori(file: &FanFile, bound: u32) -> Result<Value, PipelineError> {
    let ctx = Context::new(file)?;
    Ok(json!({
        "primitive_relations": ctx.prels,
        "cones": mori_nef_cones(&ctx.fan, &ctx.esd),
        "semigroup": semigroup_report(&ctx.fan, bound),
    }))
}

fn cohomology(file: &FanFile) -> Result<Value, PipelineError> {
    let ctx = Context::new(file)?;
    let ga = ctx.algebra()?;
    let rep = ga.report().map_err(|e| verify_err("cohomology", e, Value::Null))?;
    let so = ga.structure_operators(&ctx.esd);
    Ok(json!({
        "report": rep,
        "degrees": ga.degrees,
        "normalized_volume": normalized_volume(&ctx.fan),
        "cup_matrices": so.p,
        "c1": so.c1,
        "mu": so.mu,
    }))
}

fn gkz_ops(file: &FanFile) -> Result<Value, PipelineError> {
    let ctx = Context::new(file)?;
    let families: Vec<Value> = BoxVariant::ALL.iter().map(|&v| to_value(&ambient_box_operators(&ctx.esd, None, v))).collect();
    let mut reduced = Vec::new();
    for p in &ctx.prels {
        let op = reduced_box_operator(&ctx.esd, &p.relation).map_err(|e| verify_err("gkz_ops", e, Value::Null))?;
        let symbol = principal_symbol(&op, false).map_err(|e| verify_err("gkz_ops", e, Value::Null))?;
        reduced.push(json!({
            "relation": p.relation,
            "operator": operator_json(&op),
            "symbol": symbol.format_with(&WeylOperator::variable_names(ctx.esd.r)),
        }));
    }
    let quotient = symbol_quotient_dimension(&ctx.esd, &ctx.prels).map_err(|e| verify_err("gkz_ops", e, Value::Null))?;
    Ok(json!({
        "ambient": families,
        "reduced": reduced,
        "euler": operator_json(&euler_operator(&ctx.esd, true)),
        "euler_basis_form": operator_json(&euler_operator(&ctx.esd, false)),
        "symbol_quotient_dimension": quotient,
    }))
}

fn qring(file: &FanFile, order: u32) -> Result<Value, PipelineError> {
    let ctx = Context::new(file)?;
    let ga = ctx.algebra()?;
    Ok(ring_json(&quantum_ring(&ctx, &ga, order)?))
}

fn i_function(ctx: &Context, ga: &GradedAlgebra, order: u32) -> Result<IFunction, PipelineError> {
    build_i(&ctx.esd, ga, &ctx.nef_generators(), order, None).map_err(|e| verify_err("build_I", e, Value::Null))
}

fn ifunction(file: &FanFile, order: u32) -> Result<Value, PipelineError> {
    let ctx = Context::new(file)?;
    let ga = ctx.algebra()?;
    let ifn = i_function(&ctx, &ga, order)?;
    let tilde =
        build_i_tilde(&ctx.esd, &ga, &ctx.nef_generators(), order).map_err(|e| verify_err("build_I_tilde", e, Value::Null))?;
    Ok(json!({
        "basis": ga.basis_labels(),
        "box": ifn.box_points,
        "stripped": ifn.stripped,
        "i_function": ifn.full,
        "i_tilde": tilde,
    }))
}

fn mirror_data(ctx: &Context, ga: &GradedAlgebra, order: u32) -> Result<(IFunction, MirrorMap), PipelineError> {
    let ifn = i_function(ctx, ga, order)?;
    let mm = mirror_map(ga, &ifn).map_err(|e| verify_err("mirror_map", e, Value::Null))?;
    Ok((ifn, mm))
}

fn mirror(file: &FanFile, order: u32) -> Result<Value, PipelineError> {
    let ctx = Context::new(file)?;
    let ga = ctx.algebra()?;
    let (_, mm) = mirror_data(&ctx, &ga, order)?;
    Ok(json!({
        "identity": mm.is_identity(),
        "gamma_prime": mm.gamma_prime,
        "kappa": mm.kappa,
        "inverse": mm.inverse(),
    }))
}

fn connection(file: &FanFile, order: u32) -> Result<Value, PipelineError> {
    let ctx = Context::new(file)?;
    let ga = ctx.algebra()?;
    let (ifn, mm) = mirror_data(&ctx, &ga, order)?;
    let j = invert_and_substitute(&ifn.full, &mm).map_err(|e| verify_err("invert_and_substitute", e, Value::Null))?;
    let birk = birkhoff_extract(&ga, &j).map_err(|e| verify_err("birkhoff_extract", e, Value::Null))?;
    let origin = origin_connection(&ga, &ctx.esd);
    let flat = flatness_report(&birk.omega, &ctx.esd, &origin.ainf);
    let pairing = pairing_report(&ga, &birk.omega, &origin.ainf);
    let nilpotent = residue_nilpotency(&ga, &birk.omega);
    let data = ConnectionData::new(&ga, &origin, birk.omega.clone());
    Ok(json!({
        "connection": data,
        "y0": birk.y0,
        "flatness": flat,
        "pairing_checks": pairing,
        "residue_nilpotent": nilpotent,
    }))
}

/// Runs every stage in order and stops at the first failure.
pub fn verify(cfg: &RunConfig, file: &FanFile) -> Result<Value, PipelineError> {
    let order = cfg.order;
    let mut stages: Vec<Value> = Vec::new();
    let mut done = |name: &str, detail: Value| stages.push(json!({"stage": name, "pass": true, "detail": detail}));

    let rep = validate_fan(&file.fan).map_err(|e| input_err("validate", e))?;
    done("validate", json!({"smooth": rep.smooth, "complete": rep.complete, "projective": rep.projective}));

    let class = classify_fano(&file.fan);
    if !class.is_weak_fano() {
        return Err(verify_err("classify", "NotWeakFano", json!({"class": class})));
    }
    done("classify", json!({"class": class}));

    let ctx = Context::new(file)?;
    done("exact_sequence", json!({"n": ctx.esd.n, "m": ctx.esd.m, "r": ctx.esd.r, "rho": ctx.esd.rho}));
    done("primitive_relations", json!({"count": ctx.prels.len()}));

    let ga = ctx.algebra()?;
    let mu = ga.dim();
    let cones = ctx.fan.max_cones.len();
    let volume = normalized_volume(&ctx.fan) as usize;
    if mu != cones || mu != volume {
        return Err(verify_err("build_algebra", "rank identity fails", json!({"dim": mu, "cones": cones, "volume": volume})));
    }
    done("build_algebra", json!({"dim": mu, "dims_by_degree": ga.dims_by_degree()}));

    let ring = quantum_ring(&ctx, &ga, order)?;
    done("batyrev_ring", json!({"relations": ring.relations}));

    let (ifn, mm) = mirror_data(&ctx, &ga, order)?;
    if !ifn.stripped.is_log_free() || ifn.stripped.max_z().is_some_and(|z| z > 0) {
        return Err(verify_err("build_I", "e^(-δ/z)I is not log-free with non-positive z-powers", Value::Null));
    }
    let tilde = build_i_tilde(&ctx.esd, &ga, &ctx.nef_generators(), order).map_err(|e| verify_err("build_I_tilde", e, Value::Null))?;
    done("build_I", json!({"box_points": ifn.box_points.len(), "terms": ifn.full.terms().len()}));

    let mut checks = Vec::new();
    for p in &ctx.prels {
        let op = reduced_box_operator(&ctx.esd, &p.relation).map_err(|e| verify_err("annihilation", e, Value::Null))?;
        checks.push((op.to_string(), check_annihilation(&op, &tilde)));
    }
    for lattice in [true, false] {
        let op = euler_operator(&ctx.esd, lattice);
        checks.push((op.to_string(), check_annihilation(&op, &tilde)));
    }
    if let Some((op, rep)) = checks.iter().find(|(_, r)| !r.pass) {
        return Err(verify_err("annihilation", "operator does not annihilate Ĩ", json!({"operator": op, "report": rep})));
    }
    done("annihilation", json!(checks.iter().map(|(op, r)| json!({"operator": op, "safe_q_order": r.safe_q_order})).collect::<Vec<_>>()));
    done("mirror_map", json!({"identity": mm.is_identity(), "gamma_prime": mm.gamma_prime}));

    let j = invert_and_substitute(&ifn.full, &mm).map_err(|e| verify_err("mirror_map", e, Value::Null))?;
    let birk = birkhoff_extract(&ga, &j).map_err(|e| verify_err("birkhoff_extract", &e, json!(format!("{e:?}"))))?;
    done("birkhoff_extract", json!({"omega": birk.omega}));

    let origin = origin_connection(&ga, &ctx.esd);
    let flat = flatness_report(&birk.omega, &ctx.esd, &origin.ainf);
    if !flat.pass() {
        return Err(verify_err("flatness", "flatness identity fails", to_value(&flat)));
    }
    let pairing = pairing_report(&ga, &birk.omega, &origin.ainf);
    if !pairing.pass() {
        return Err(verify_err("pairing", "pairing identity fails", to_value(&pairing)));
    }
    if !residue_nilpotency(&ga, &birk.omega) || !origin.commutator_identity() {
        return Err(verify_err("nilpotency", "residue identities fail", to_value(&origin)));
    }
    done("flatness_pairing_nilpotency", json!({"flatness": flat, "pairing": pairing}));

    let cmp = compare_quantum_rings(&ga, &ring, &birk, Some(&mm));
    if !cmp.pass {
        return Err(verify_err("compare_quantum_rings", "Mismatch", json!({"mismatch": cmp.mismatch, "matches_y0": cmp.matches_y0})));
    }
    done("compare_quantum_rings", json!({"matches_y0": cmp.matches_y0}));

    Ok(envelope(cfg, json!({"pass": true, "stages": stages})))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures;

    fn cfg(command: Command, name: &str, order: u32) -> RunConfig {
        RunConfig { input: name.to_string(), command, order, bound: 4 }
    }

    #[test]
    fn verify_outcomes() {
        let p2 = fixtures::load("p2").unwrap();
        let out = run(&cfg(Command::Verify, "p2", 2), &p2).unwrap();
        assert_eq!(out["schema_version"], SCHEMA_VERSION);
        assert_eq!(out["result"]["pass"], true);
        let f3 = fixtures::load("f3").unwrap();
        let err = run(&cfg(Command::Verify, "f3", 2), &f3).unwrap_err();
        assert_eq!(err.exit_code(), 1);
        assert!(matches!(&err, PipelineError::Verification { stage, error, .. } if stage == "classify" && error == "NotWeakFano"));
    }

    #[test]
    fn ifunction_table_key() {
        let p1 = fixtures::load("p1").unwrap();
        let out = run(&cfg(Command::IFunction, "p1", 2), &p1).unwrap();
        assert_eq!(out["result"]["stripped"]["q=1;z=-2;logq=0;logz=0"][0], "1/1");
    }

    #[test]
    fn every_command_runs() {
        let f2 = fixtures::load("f2").unwrap();
        for c in [
            Command::CheckFan,
            Command::Classify,
            Command::ExactSeq,
            Command::Mori,
            Command::Cohomology,
            Command::GkzOps,
            Command::Qring,
            Command::IFunction,
            Command::MirrorMap,
            Command::Connection,
            Command::Verify,
        ] {
            let out = run(&cfg(c, "f2", 2), &f2).unwrap();
            assert_eq!(out["command"], c.name());
        }
    }
}
