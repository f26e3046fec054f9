//! The `dual` subcommand: dual rates over one or a range of parameters.

use lsmdual_core::duality::{cvp_dual_family, dual_rates, self_duality_parameter, DualPairReport};
use lsmdual_core::model::{LsmRates, ModelSpec};
use lsmdual_core::{parse_scalar, Rational, Scalar};

use crate::error::{HarnessError, Result};
use crate::scenario::Mode;

#[derive(Debug, Clone, PartialEq)]
pub enum EtaChoice {
    One(String),
    /// `lo:hi:step`, inclusive of `hi` when it lies on the grid.
    Scan(String),
}

fn usage(msg: impl Into<String>) -> HarnessError {
    HarnessError::Usage(msg.into())
}

fn etas<T: Scalar>(choice: &EtaChoice) -> Result<Vec<T>> {
    let num = |s: &str| parse_scalar::<T>(s.trim()).map_err(|e| usage(format!("bad duality parameter `{s}`: {e}")));
    match choice {
        EtaChoice::One(s) => Ok(vec![num(s)?]),
        EtaChoice::Scan(s) => {
            let parts: Vec<&str> = s.split(':').collect();
            if parts.len() != 3 {
                return Err(usage(format!("--eta-scan expects lo:hi:step, got `{s}`")));
            }
            let (lo, hi, step) = (num(parts[0])?, num(parts[1])?, num(parts[2])?);
            if !step.gt_zero() || hi < lo {
                return Err(usage("--eta-scan needs lo <= hi and step > 0"));
            }
            let mut out = Vec::new();
            let mut k = 0i64;
            loop {
                let v = lo.clone() + step.clone() * T::from_int(k);
                // a little slack so float grids keep their last point
                if v.as_f64() > hi.as_f64() + 1e-9 * step.as_f64() {
                    break;
                }
                out.push(v);
                k += 1;
                if k > 100_000 {
                    return Err(usage("--eta-scan grid is too large"));
                }
            }
            Ok(out)
        }
    }
}

fn rates_text<T: Scalar>(r: &LsmRates<T>) -> String {
    format!("({}, {}, {}, {}, {})", r.a, r.b, r.c, r.d, r.e)
}

fn line<T: Scalar>(rep: &DualPairReport<T>) -> String {
    let status = if rep.valid { "valid".to_string() } else { format!("formal: {}", rep.violated_constraints.join("; ")) };
    format!("eta = {}  gamma = {}  dual = {}  {status}", rep.eta, rep.gamma, rates_text(&rep.output))
}

/// Text block listing the dual rates of `model` for each requested
/// parameter, in exact or float arithmetic.
pub fn render(model: &str, choice: &EtaChoice, mode: Mode) -> Result<String> {
    match mode {
        Mode::Rational => render_in::<Rational>(model, choice),
        Mode::Float => render_in::<f64>(model, choice),
    }
}

fn render_in<T: Scalar>(model: &str, choice: &EtaChoice) -> Result<String> {
    let spec = ModelSpec::from_shorthand(model)?;
    let rates = spec
        .lsm_rates::<T>()?
        .ok_or_else(|| usage(format!("`{model}` has no constant Lloyd-Sudbury rates")))?;
    let cvp = matches!(spec, ModelSpec::Cvp { .. }).then(|| spec.cvp_params::<T>()).transpose()?;
    let mut out = format!("model {model} = lsm{}\n", rates_text(&rates));
    match self_duality_parameter(&rates) {
        Ok(p) => out.push_str(&format!("self-dual at eta = {}\n", p.value())),
        Err(_) => out.push_str("no self-duality parameter (b = 0)\n"),
    }
    for eta in etas::<T>(choice)? {
        if eta == T::one() {
            out.push_str("eta = 1  excluded\n");
            continue;
        }
        let rep = match &cvp {
            Some(p) => cvp_dual_family(p, &eta)?,
            None => dual_rates(&rates, &eta)?,
        };
        out.push_str(&line(&rep));
        out.push('\n');
    }
    Ok(out)
}
