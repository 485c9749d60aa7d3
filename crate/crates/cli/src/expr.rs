//! Arithmetic expressions in named variables.
//!
//! Parsing, constant folding and evaluation are done by `fasteval`; this
//! module binds the variables and adds `pow`, `step`, `sqrt`, `exp` and
//! `ln` to its built-ins (`abs`, `min`, `max`, `sin`, `cos`, ...).

use std::fmt;
use std::sync::Arc;

use fasteval::{Compiler, Evaler, Instruction, Parser, Slab};

use crate::error::CliError;

struct Compiled {
    slab: Slab,
    instr: Instruction,
}

/// A parsed expression over an ordered list of variable names.
#[derive(Clone)]
pub struct Expression {
    source: String,
    vars: Vec<&'static str>,
    compiled: Arc<Compiled>,
}

impl fmt::Debug for Expression {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Expression")
            .field("source", &self.source)
            .field("vars", &self.vars)
            .finish()
    }
}

fn extra_function(name: &str, args: &[f64]) -> Option<f64> {
    match (name, args) {
        ("pow", [x, q]) => Some(x.powf(*q)),
        // Heaviside with step(0) = 1
        ("step", [x]) => Some(if *x >= 0.0 { 1.0 } else { 0.0 }),
        ("sqrt", [x]) => Some(x.sqrt()),
        ("exp", [x]) => Some(x.exp()),
        ("ln", [x]) => Some(x.ln()),
        _ => None,
    }
}

impl Expression {
    /// Parses `source` and checks that every name it uses is one of `vars`
    /// or a known function.
    pub fn parse(source: &str, vars: &[&'static str]) -> Result<Self, CliError> {
        let err = |e: fasteval::Error| CliError::Parse(format!("expression `{source}`: {e}"));
        let mut slab = Slab::new();
        let instr = Parser::new()
            .parse(source, &mut slab.ps)
            .map_err(err)?
            .from(&slab.ps)
            .compile(&slab.ps, &mut slab.cs);
        let out = Self {
            source: source.to_string(),
            vars: vars.to_vec(),
            compiled: Arc::new(Compiled { slab, instr }),
        };
        let probe = vec![0.5; vars.len()];
        out.try_eval(&probe).map_err(err)?;
        Ok(out)
    }

    pub fn source(&self) -> &str {
        &self.source
    }

    fn try_eval(&self, values: &[f64]) -> Result<f64, fasteval::Error> {
        let mut scope = |name: &str, args: Vec<f64>| -> Option<f64> {
            if args.is_empty() {
                if let Some(i) = self.vars.iter().position(|v| *v == name) {
                    return values.get(i).copied();
                }
            }
            extra_function(name, &args)
        };
        let c = &*self.compiled;
        c.instr.eval(&c.slab, &mut scope)
    }

    /// Evaluates with `values` bound to the variables in declaration order.
    ///
    /// # Panics
    /// If `values` has the wrong length; names were checked at parse time,
    /// so evaluation itself cannot fail otherwise.
    pub fn eval(&self, values: &[f64]) -> f64 {
        assert_eq!(values.len(), self.vars.len(), "wrong number of arguments");
        self.try_eval(values).expect("checked at parse time")
    }
}
