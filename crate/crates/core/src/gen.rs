//! Generators for the two built-in benchmark families: the coin game (as
//! model-language text) and the exponential-blowup family (as a PCFP, since
//! it needs several locations).

use std::collections::BTreeMap;

use num_bigint::BigInt;
use num_rational::BigRational;
use thiserror::Error;

use crate::expr::{
    CmpOp, ConstEnv, DomainMap, IntExpr, Predicate, Update, Valuation, VarDomain, VarId,
};
use crate::pcfp::{ActionTag, Command, Destination, LocationId, LocationInfo, Pcfp};

#[derive(Debug, Clone, Error, PartialEq, Eq)]
pub enum GenError {
    #[error("the coin game needs an even budget bound of at least 2")]
    BadCoinBound,

    #[error("the exponential family needs at least one branch")]
    BadFamilySize,
}

/// The coin game as model-language text. With `n = None` the bound stays an
/// undefined constant, to be set at analysis time.
pub fn coin_model_text(n: Option<i64>) -> Result<String, GenError> {
    let decl = match n {
        Some(n) => {
            if n < 2 || n % 2 != 0 {
                return Err(GenError::BadCoinBound);
            }
            format!("const int N = {n};")
        }
        None => "const int N;".to_string(),
    };
    Ok(format!(
        "dtmc\n{decl}\n\nmodule coingame\n    \
         x : [0..N+1] init N/2;\n    \
         f : bool init false;\n    \
         [] 0<x<N & !f  ->  1/2: (x'=x-1) + 1/2: (f'=true);\n    \
         [] 0<x<N & f   ->  1/2: (x'=x-1)&(f'=false) + 1/2: (x'=x+2)&(f'=false);\n    \
         [] x=0 | x>=N  ->  1: (x'=x);\nendmodule\n"
    ))
}

/// The family exhibiting the exponential elimination lower bound.
///
/// Locations `entry -> mid -> {hit, miss}` over boolean variables
/// `x1..xm, y1..ym`. The single command at `entry` sets `y_i' = 1` with
/// probability `c / 2^i` where `c = 2^m / (2^m - 1)` normalizes the
/// distribution. At `mid`, one command guarded by `any_i (x_i=1 & y_i=1)`
/// resets all variables and moves to `hit`; its negation moves to `miss`.
/// Locations carry a `goal` label so `hit` is the only potential goal.
/// The initial valuation sets `x1 = 1` and everything else to 0, making the
/// probability of reaching `hit` exactly `c/2`.
pub fn exp_family(m: u32) -> Result<Pcfp, GenError> {
    if m < 1 {
        return Err(GenError::BadFamilySize);
    }
    let m = m as usize;
    let goal = |v: i64| Valuation::from_pairs([("goal", v)]);
    let locations = vec![
        LocationInfo::with_label("entry", goal(0)),
        LocationInfo::with_label("mid", goal(0)),
        LocationInfo::with_label("hit", goal(1)),
        LocationInfo::with_label("miss", goal(0)),
    ];
    let entry = LocationId(0);
    let mid = LocationId(1);
    let hit = LocationId(2);
    let miss = LocationId(3);

    let mut vars = Vec::new();
    let mut dom = DomainMap::new();
    let mut init = BTreeMap::new();
    for prefix in ["x", "y"] {
        for i in 1..=m {
            let v = VarId::new(format!("{prefix}{i}"));
            vars.push(v.clone());
            dom.insert(v.clone(), VarDomain::literal(0, 1));
            let value = if prefix == "x" && i == 1 { 1 } else { 0 };
            init.insert(v, IntExpr::Lit(value));
        }
    }

    // c / 2^i with c = 2^m / (2^m - 1), so the branch probabilities sum to 1.
    let pow2 = |e: usize| BigInt::from(1u8) << e;
    let c = BigRational::new(pow2(m), pow2(m) - 1);
    let mut branches = Vec::with_capacity(m);
    for i in 1..=m {
        branches.push(Destination {
            prob: &c / BigRational::from(pow2(i)),
            update: Update::assign([(format!("y{i}"), IntExpr::Lit(1))]),
            target: mid,
        });
    }

    let any_pair = (1..=m)
        .map(|i| {
            Predicate::and(
                Predicate::cmp(CmpOp::Eq, IntExpr::var(format!("x{i}")), IntExpr::Lit(1)),
                Predicate::cmp(CmpOp::Eq, IntExpr::var(format!("y{i}")), IntExpr::Lit(1)),
            )
        })
        .reduce(Predicate::or)
        .expect("m >= 1");
    let reset_all = Update::assign(
        (1..=m)
            .flat_map(|i| [(format!("x{i}"), IntExpr::Lit(0)), (format!("y{i}"), IntExpr::Lit(0))]),
    );

    let commands = vec![
        Command {
            source: entry,
            action: ActionTag::new("spread"),
            guard: Predicate::TRUE,
            destinations: branches,
        },
        Command {
            source: mid,
            action: ActionTag::new("match"),
            guard: any_pair.clone(),
            destinations: vec![Destination {
                prob: BigRational::one(),
                update: reset_all,
                target: hit,
            }],
        },
        Command {
            source: mid,
            action: ActionTag::new("mismatch"),
            guard: Predicate::not(any_pair),
            destinations: vec![Destination {
                prob: BigRational::one(),
                update: Update::nop(),
                target: miss,
            }],
        },
    ];

    Ok(Pcfp::new(
        locations,
        vars,
        dom,
        commands,
        entry,
        init,
        ConstEnv::new(),
    )
    .expect("generated family is structurally valid"))
}

use num_traits::One;
