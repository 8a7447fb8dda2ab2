use std::path::Path;
use std::sync::Arc;

use anyhow::Context;
use serde::de::DeserializeOwned;
use serde_json::json;

use qgroup::extcheck::{
    amalgam_check, extend_presentation, strong_embedding_probe, suggest_lambda, ExtensionSpec,
    ExtensionSpecFile,
};
use qgroup::foxrank::{
    beta1_sequence_with, sylvester_axiom_suite, AxiomBounds, Beta1Options, MappedPresentation, PresentationFile,
    RelatorPolicy,
};
use qgroup::magnus::{certify_nontrivial, default_generators, default_schedule, nilpotence_witness, Certification};
use qgroup::pquot::FiniteQuotient;
use qgroup::scalars::is_prime;
use qgroup::wordexpr::parse_in;
use qgroup::{parse, Exponent, PadicRing, PrimeField, Rational, RationalField, Scalar, WordExpr};

use crate::args::{
    AmalgamArgs, CertifyArgs, Cli, Command, DomainArg, EvalArgs, ExtendArgs, ExtendKind, LevelArgs,
    PresentationArgs, QuotientArgs, ScalarArgs, SylvesterArgs,
};
use crate::output::{report, Failure, Outcome, EXIT_INCONCLUSIVE, EXIT_OTHER};

pub fn run(cli: &Cli) -> Result<Outcome, Failure> {
    match &cli.command {
        Command::Eval(a) => eval(cli, a),
        Command::Certify(a) => certify(cli, a),
        Command::Beta1(a) => beta1(cli, a),
        Command::Amalgam(a) => amalgam(cli, a),
        Command::Extend(a) => extend(cli, a),
        Command::QuotientInfo(a) => quotient_info(cli, a),
        Command::Probe(a) => probe(cli, a),
        Command::Sylvester(a) => sylvester(cli, a),
    }
}

fn check_prime(p: u64) -> Result<(), Failure> {
    if is_prime(p) {
        Ok(())
    } else {
        Err(Failure::Config(format!("{p} is not a prime")))
    }
}

/// The first quotient already has `p^d` elements.
fn check_cap(cap: usize, p: u64, d: usize) -> Result<(), Failure> {
    let need = u32::try_from(d).ok().and_then(|d| (p as usize).checked_pow(d));
    match need {
        Some(n) if n <= cap => Ok(()),
        _ => Err(Failure::Config(format!(
            "cap {cap} is below the order {p}^{d} of the smallest quotient"
        ))),
    }
}

fn check_levels(levels: &[usize]) -> Result<(), Failure> {
    if levels.is_empty() {
        return Err(Failure::Config("no levels given".into()));
    }
    if levels[0] < 2 {
        return Err(Failure::Config(format!("levels start at 2, got {}", levels[0])));
    }
    if levels.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Failure::Config(format!("levels {levels:?} are not strictly increasing")));
    }
    Ok(())
}

fn read_json<T: DeserializeOwned>(path: &Path) -> Result<T, Failure> {
    let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    serde_json::from_str(&text).map_err(|e| Failure::Parse {
        message: format!("{}: {e}", path.display()),
        position: None,
    })
}

// ---------------------------------------------------------------------------
// Series

/// Number of ambient generators needed for the `x1..xd` names in `w`.
fn infer_rank(w: &WordExpr, given: Option<usize>) -> Result<usize, Failure> {
    let mut d = 1;
    for name in w.generators() {
        let idx = name
            .strip_prefix('x')
            .and_then(|s| s.parse::<usize>().ok())
            .filter(|&i| i >= 1)
            .ok_or_else(|| Failure::Parse {
                message: format!("generator `{name}` is not of the form x1, x2, ..."),
                position: None,
            })?;
        d = d.max(idx);
    }
    match given {
        Some(g) if g < d => Err(Failure::Config(format!("--d {g} is smaller than the word needs ({d})"))),
        Some(g) => Ok(g),
        None => Ok(d),
    }
}

enum Domain {
    Q,
    Fp(PrimeField),
    Zpk(PadicRing),
}

fn domain(a: &ScalarArgs) -> Result<Domain, Failure> {
    let kind = a.domain.unwrap_or(if a.p == 0 { DomainArg::Q } else { DomainArg::Fp });
    match kind {
        DomainArg::Q if a.p != 0 => Err(Failure::Config("--p must be 0 for the rational domain".into())),
        DomainArg::Q => Ok(Domain::Q),
        _ if a.p == 0 => Err(Failure::Config("--p is required for fp and zpk".into())),
        DomainArg::Fp => {
            check_prime(a.p)?;
            Ok(Domain::Fp(PrimeField::new(a.p)?))
        }
        DomainArg::Zpk => {
            check_prime(a.p)?;
            let k = a.k.ok_or_else(|| Failure::Config("--k is required for zpk".into()))?;
            Ok(Domain::Zpk(PadicRing::new(a.p, k)?))
        }
    }
}

fn eval_in<S: Scalar>(w: &WordExpr, d: usize, bound: usize, dom: S::Domain) -> Result<serde_json::Value, Failure> {
    let ctx = qgroup::magnus::MagnusContext::<S>::new(d, bound, dom);
    let s = qgroup::magnus::eval(w, &ctx)?;
    Ok(json!({ "expr": w.to_string(), "series": s }))
}

fn eval(cli: &Cli, a: &EvalArgs) -> Result<Outcome, Failure> {
    let w = parse(&a.scalar.expr)?;
    let d = infer_rank(&w, a.scalar.d)?;
    if a.degree == 0 {
        return Err(Failure::Config("--degree must be positive".into()));
    }
    let body = match domain(&a.scalar)? {
        Domain::Q => eval_in::<Rational>(&w, d, a.degree, RationalField)?,
        Domain::Fp(f) => eval_in::<qgroup::Fp>(&w, d, a.degree, f)?,
        Domain::Zpk(r) => eval_in::<qgroup::Padic>(&w, d, a.degree, r)?,
    };
    Outcome::ok(cli, body)
}

fn certify_in<S: Scalar>(
    cli: &Cli,
    w: &WordExpr,
    d: usize,
    schedule: &[usize],
    dom: S::Domain,
) -> Result<Outcome, Failure> {
    let ctx = qgroup::magnus::MagnusContext::<S>::new(d, schedule[0], dom);
    match certify_nontrivial(w, &ctx, schedule)? {
        Certification::Certified(cert) => Outcome::ok(
            cli,
            json!({
                "result": "certified",
                "certificate": cert,
                "witness": nilpotence_witness(&cert),
            }),
        ),
        Certification::Inconclusive { max_bound } => Ok(Outcome {
            json: report(
                cli,
                json!({ "result": "inconclusive", "max_bound": max_bound, "schedule": schedule }),
            )?,
            code: EXIT_INCONCLUSIVE,
        }),
    }
}

fn certify(cli: &Cli, a: &CertifyArgs) -> Result<Outcome, Failure> {
    let w = parse(&a.scalar.expr)?;
    let d = infer_rank(&w, a.scalar.d)?;
    let schedule = match &a.schedule {
        Some(s) => s.clone(),
        None => default_schedule(a.max_bound),
    };
    if schedule.is_empty() || schedule[0] < 1 || schedule.windows(2).any(|p| p[0] >= p[1]) {
        return Err(Failure::Config(format!("schedule {schedule:?} is not strictly increasing")));
    }
    match domain(&a.scalar)? {
        Domain::Q => certify_in::<Rational>(cli, &w, d, &schedule, RationalField),
        Domain::Fp(f) => certify_in::<qgroup::Fp>(cli, &w, d, &schedule, f),
        Domain::Zpk(r) => certify_in::<qgroup::Padic>(cli, &w, d, &schedule, r),
    }
}

// ---------------------------------------------------------------------------
// Presentations

struct Loaded {
    group: MappedPresentation,
    p: u64,
    policy: RelatorPolicy,
}

fn load(a: &PresentationArgs) -> Result<Loaded, Failure> {
    let file: PresentationFile = read_json(&a.presentation)?;
    let p = a.p.unwrap_or(file.p);
    check_prime(p)?;
    let group = file.to_mapped()?;
    check_cap(a.cap.cap, p, group.ambient_rank)?;
    let policy = if a.factor_relators { RelatorPolicy::Factor } else { file.mode };
    Ok(Loaded { group, p, policy })
}

fn beta1(cli: &Cli, a: &LevelArgs) -> Result<Outcome, Failure> {
    check_levels(&a.levels)?;
    let l = load(&a.pres)?;
    let opts = Beta1Options {
        policy: l.policy,
        cap: a.pres.cap.cap,
        parallel: a.parallel,
    };
    let mut done = Vec::new();
    let rep = beta1_sequence_with(&l.group, l.p, &a.levels, &opts, |r| {
        if let Ok(line) = serde_json::to_string(&json!({ "level_done": r })) {
            eprintln!("{line}");
        }
        done.push(r.clone());
    });
    match rep {
        Ok(rep) => Outcome::ok(cli, rep),
        Err(e) => Err(Failure::from(e).with_completed(done)),
    }
}

fn probe(cli: &Cli, a: &LevelArgs) -> Result<Outcome, Failure> {
    check_levels(&a.levels)?;
    let l = load(&a.pres)?;
    let opts = Beta1Options {
        policy: l.policy,
        cap: a.pres.cap.cap,
        parallel: a.parallel,
    };
    Outcome::ok(cli, strong_embedding_probe(&l.group, l.p, &a.levels, &opts)?)
}

fn amalgam(cli: &Cli, a: &AmalgamArgs) -> Result<Outcome, Failure> {
    check_levels(&[a.level])?;
    let l = load(&a.pres)?;
    let gens = l.group.presentation.generators().to_vec();
    let words = |ws: &[String]| -> Result<Vec<WordExpr>, Failure> {
        ws.iter().map(|w| Ok(parse_in(w, &gens)?)).collect()
    };
    let (h, b, sub) = (words(&a.h)?, words(&a.b)?, words(&a.a)?);
    let rep = amalgam_check(&l.group, &h, &b, &sub, l.p, a.level, l.policy, a.pres.cap.cap)?;
    Outcome::ok(cli, rep)
}

fn extend(cli: &Cli, a: &ExtendArgs) -> Result<Outcome, Failure> {
    let (base, file_p, mode) = match &a.base {
        Some(path) => {
            let file: PresentationFile = read_json(path)?;
            (file.to_mapped()?, Some(file.p), file.mode)
        }
        None => {
            let names: Vec<&str> = a.generators.iter().map(String::as_str).collect();
            if names.is_empty() {
                return Err(Failure::Config("no base generators".into()));
            }
            (MappedPresentation::free(&names), None, RelatorPolicy::Require)
        }
    };
    let p = a
        .p
        .or(file_p)
        .ok_or_else(|| Failure::Config("--p is required without a base file".into()))?;
    check_prime(p)?;
    let gens = base.presentation.generators().to_vec();
    let spec = match &a.kind {
        ExtendKind::Root { w, m, new_gen } => ExtensionSpec::root(parse_in(w, &gens)?, *m, new_gen.clone()),
        ExtendKind::Centralizer {
            w,
            lambdas,
            new_gens,
            precision,
            seed,
        } => {
            let lambdas: Vec<Exponent> = if lambdas.is_empty() {
                (0..new_gens.len() as u64)
                    .map(|j| suggest_lambda(p, *precision, seed.wrapping_add(j)))
                    .collect()
            } else {
                lambdas.iter().map(|s| s.parse()).collect::<Result<_, _>>()?
            };
            ExtensionSpec::centralizer(parse_in(w, &gens)?, lambdas, new_gens.clone())
        }
        ExtendKind::Spec { spec } => read_json::<ExtensionSpecFile>(spec)?.to_spec(&gens)?,
    };
    let g = extend_presentation(&base, &spec, p)?;
    Outcome::ok(cli, g.to_file(p, mode))
}

// ---------------------------------------------------------------------------
// Quotients

fn quotient_info(cli: &Cli, a: &QuotientArgs) -> Result<Outcome, Failure> {
    check_prime(a.p)?;
    check_levels(&[a.n])?;
    if a.d == 0 {
        return Err(Failure::Config("--d must be positive".into()));
    }
    check_cap(a.cap.cap, a.p, a.d)?;
    let q = FiniteQuotient::build(a.p, a.d, a.n, a.cap.cap)?;
    Outcome::ok(cli, q.info())
}

fn sylvester(cli: &Cli, a: &SylvesterArgs) -> Result<Outcome, Failure> {
    check_prime(a.p)?;
    check_levels(&[a.n])?;
    if a.d == 0 || a.max_dim == 0 {
        return Err(Failure::Config("--d and --max-dim must be positive".into()));
    }
    check_cap(a.cap.cap, a.p, a.d)?;
    let q = Arc::new(FiniteQuotient::build(a.p, a.d, a.n, a.cap.cap)?);
    let names = default_generators(a.d);
    let names: Vec<&str> = names.iter().map(String::as_str).collect();
    let group = MappedPresentation::free(&names)
        .level_group(q, RelatorPolicy::Require)?
        .group;
    let bounds = AxiomBounds {
        max_dim: a.max_dim,
        ..Default::default()
    };
    let rep = sylvester_axiom_suite(&group, a.trials, bounds, a.seed)?;
    let passed = rep.passed();
    let mut out = Outcome::ok(cli, json!({ "passed": passed, "report": rep }))?;
    if !passed {
        out.code = EXIT_OTHER;
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rank_is_inferred_from_names() {
        assert_eq!(infer_rank(&parse("[x1, x3]").unwrap(), None).unwrap(), 3);
        assert_eq!(infer_rank(&parse("1").unwrap(), None).unwrap(), 1);
        assert_eq!(infer_rank(&parse("x2").unwrap(), Some(4)).unwrap(), 4);
        assert!(matches!(infer_rank(&parse("x2").unwrap(), Some(1)), Err(Failure::Config(_))));
        assert!(matches!(infer_rank(&parse("x0").unwrap(), None), Err(Failure::Parse { .. })));
        assert!(matches!(infer_rank(&parse("y1").unwrap(), None), Err(Failure::Parse { .. })));
    }

    #[test]
    fn config_checks() {
        assert!(check_levels(&[2, 3, 5]).is_ok());
        assert!(check_levels(&[]).is_err());
        assert!(check_levels(&[1, 2]).is_err());
        assert!(check_levels(&[3, 3]).is_err());
        assert!(check_cap(9, 3, 2).is_ok());
        assert!(check_cap(8, 3, 2).is_err());
        assert!(check_cap(usize::MAX, 2, 200).is_err());
        assert!(check_prime(7).is_ok() && check_prime(1).is_err());
    }
}
