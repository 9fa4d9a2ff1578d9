//! Side-by-side measures on regular, random and structured sources.

use serde_json::{json, Value};

use orgcx::dist::{shannon_entropy, FiniteDistribution, Order};
use orgcx::epsmachine::{self, EpsilonMachine};
use orgcx::ocmachine::fixtures;
use orgcx::scalar::format_rational;
use orgcx::search::{oc_search, SearchBudget};
use orgcx::semantics::semantic_amount;
use orgcx::{BitString, Distribution, Rational, CODEC_VERSION};

use crate::{Format, Res};

/// Semantics stream of the structured row.
const PATTERN: &str = "10110010";

struct Source {
    name: String,
    class: &'static str,
    x: Distribution,
    machine: Option<EpsilonMachine>,
}

fn sources(ns: &[usize]) -> Res<Vec<Source>> {
    let mut out = Vec::new();
    for &n in ns {
        let ones = fixtures::ones(n).output_distribution(0)?;
        out.push(Source {
            name: format!("ones({n})"),
            class: "regular",
            x: ones,
            machine: Some(epsmachine::fixtures::constant("1")),
        });
        out.push(Source {
            name: format!("coin({n})"),
            class: "random",
            x: FiniteDistribution::uniform(n),
            machine: Some(epsmachine::fixtures::fair_coin()),
        });
    }
    let m: BitString = PATTERN.parse().expect("constant pattern");
    out.push(Source {
        name: format!("echo({PATTERN})"),
        class: "structured",
        x: fixtures::echo(&m).output_distribution(0)?,
        machine: None,
    });
    let gm = epsmachine::fixtures::golden_mean();
    out.push(Source {
        name: "golden-mean(8)".into(),
        class: "structured",
        x: epsmachine::process_distribution(&gm, 8)?,
        machine: Some(gm),
    });
    Ok(out)
}

pub(crate) fn table(ns: &[usize], delta: &Rational, budget: &SearchBudget, fmt: Format) -> Res<Value> {
    let mut rows = Vec::new();
    for s in sources(ns)? {
        let r = oc_search(&s.x, delta, budget)?;
        let c1 = match &s.machine {
            Some(m) => Some(m.statistical_complexity(Order::Finite(1.0))?),
            None => None,
        };
        rows.push(json!({
            "source": s.name,
            "class": s.class,
            "n": s.x.n(),
            "status": r.status,
            "oc_bits": r.oc_bits,
            "oc_lower_bound": r.lower_bound(),
            "sa_bits": semantic_amount(s.x.n(), &r.witness.widths()),
            "h1": shannon_entropy(&s.x),
            "c1_given_machine": c1,
        }));
    }
    let head = json!({"codec": CODEC_VERSION, "delta": format_rational(delta), "budget": budget});
    Ok(match fmt {
        Format::Json => json!({"run": head, "rows": rows}),
        Format::Tsv => {
            let cols = [
                "source",
                "class",
                "n",
                "status",
                "oc_bits",
                "oc_lower_bound",
                "sa_bits",
                "h1",
                "c1_given_machine",
            ];
            let mut t = format!("# {head}\n{}\n", cols.join("\t"));
            for r in &rows {
                let cells: Vec<String> = cols
                    .iter()
                    .map(|c| match &r[c] {
                        Value::String(s) => s.clone(),
                        Value::Null => "-".into(),
                        Value::Number(x) if x.is_f64() => format!("{:.6}", x.as_f64().unwrap_or(f64::NAN)),
                        v => v.to_string(),
                    })
                    .collect();
                t.push_str(&cells.join("\t"));
                t.push('\n');
            }
            Value::String(t)
        }
    })
}
